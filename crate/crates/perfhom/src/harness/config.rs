use std::collections::HashSet;
use std::path::Path;

use super::SweepSpec;
use crate::mesh::CellGeometry;
use crate::micro::{MicroConfig, ProjectionMode};
use crate::model::{BoundarySource, CellCoefficient, ModelParams, VelocityField};
use crate::{Error, Result};

/// Every configuration key with its default and meaning.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("epsilon", "0.25", "period of the perforation; 1/epsilon must be an integer"),
    ("t_final", "0.5", "final time T"),
    ("steps", "50", "number of Rothe steps N"),
    ("mu", "1e-3", "penalty parameter; `inf` switches the penalty off"),
    ("delta", "1e-2", "regularization; 0 runs the schedule 1e-1, 1e-2, 1e-3"),
    ("projection", "exact_J", "projection onto K: exact_J or nodal_clamp"),
    ("picard_tol", "1e-10", "absolute Picard tolerance in the J norm"),
    ("picard_max", "50", "maximal Picard sweeps per step"),
    ("theta_k", "1", "k(z) = theta_k z^beta / (1 + gamma_k z^beta)"),
    ("gamma_k", "1", "saturation of k"),
    ("beta", "7", "degeneracy exponent of k"),
    ("theta_p", "1", "P_c(z) = theta_p z^-lambda / (1 + gamma_p(z) z^lambda)"),
    ("lambda", "7", "singularity exponent of P_c"),
    ("gamma_p_amplitude", "0", "height of the bump gamma_p"),
    ("cutoff_scale", "1", "support radius of gamma_p"),
    ("theta_b", "1", "b(z) = theta_b z^alpha"),
    ("alpha", "1", "exponent of b, in (0, 3]"),
    ("kappa_d", "1", "Dirichlet value on the outer boundary, in (0, 1]"),
    ("g", "0, -0.5", "gravity vector of F = Q H(u) + k(u) g"),
    ("q1", "4", "integrability exponent q1 > 2 of the exponent condition"),
    ("constant_coefficients", "false", "replace the laws by k = 1, P_c = 1, b(z) = z and set g = 0"),
    ("f0_level", "1", "level of the boundary source f0 (0 disables it)"),
    ("f1_exponent", "beta", "exponent m of f1(xi) = sign(xi) |xi|^m cutoff(xi)"),
    ("velocity", "zero", "velocity field Q; only `zero` is available from files"),
    ("h_slope", "0", "H(z) = h_slope z"),
    ("hole_radius", "0.25", "circumradius of the polygonal hole (0: no hole)"),
    ("hole_segments", "16", "number of polygon edges"),
    ("cell_divisions", "8", "grid subdivisions per cell edge"),
    ("coefficient_a", "constant:1", "cell coefficient A(y): constant:<c> or layered:<mean>,<amplitude>"),
    ("coefficient_b", "", "second coefficient B(y) of the elliptic term; empty means B = A"),
    ("macro_divisions", "64", "subdivisions per side of the macro mesh"),
    ("memory_mode", "false", "include the memory term (needs coefficient_b)"),
    ("outer_iters", "2", "kernel/solution coupling sweeps in memory mode"),
    ("sweep_epsilons", "0.25, 0.125, 0.0625", "epsilon list of `converge`, strictly decreasing"),
    ("sweep_deltas", "0.1, 0.01, 0.001", "delta list of `converge`, strictly decreasing"),
    ("sweep_mus", "0.1, 0.01, 0.001, 0.0001", "mu list of `converge`, strictly decreasing"),
];

/// Help text listing every key.
pub fn keys_help() -> String {
    let mut s = String::from("Configuration keys (`key = value`, `#` starts a comment):\n");
    for (k, d, doc) in KEYS {
        let d = if d.is_empty() { "(empty)" } else { d };
        s.push_str(&format!("  {k:<22} {doc} [default: {d}]\n"));
    }
    s
}

/// A parsed configuration file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub micro: MicroConfig,
    pub coefficient_b: Option<CellCoefficient>,
    pub macro_divisions: usize,
    pub memory_mode: bool,
    pub outer_iters: usize,
    pub sweep: SweepSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let micro = MicroConfig::default();
        RunConfig {
            sweep: SweepSpec {
                base: micro.clone(),
                ..SweepSpec::default()
            },
            micro,
            coefficient_b: None,
            macro_divisions: 64,
            memory_mode: false,
            outer_iters: 2,
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, &path.display().to_string())
}

fn num(v: &str) -> std::result::Result<f64, String> {
    match v {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => v.parse::<f64>().map_err(|_| format!("`{v}` is not a number")),
    }
}

fn list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',').map(|x| num(x.trim())).collect()
}

fn boolean(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{v}` is not a boolean")),
    }
}

fn count(v: &str) -> std::result::Result<usize, String> {
    v.parse::<usize>().map_err(|_| format!("`{v}` is not a nonnegative integer"))
}

/// Parses `key = value` lines. `source` names the file in error messages.
pub fn parse_config(text: &str, source: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut p = ModelParams::default();
    let mut geom = CellGeometry::default();
    let mut f0 = 1.0;
    let mut f1_exponent: Option<f64> = None;
    let mut h_slope = 0.0;
    let mut constant = false;
    let mut g_given = false;
    let mut seen = HashSet::new();
    let mut sweeps: [Option<Vec<f64>>; 3] = [None, None, None];

    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |key: &str, message: String| Error::Config {
            path: source.to_string(),
            line: n + 1,
            key: key.to_string(),
            message,
        };
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(line, "expected `key = value`".into()));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.iter().any(|(k, _, _)| *k == key) {
            return Err(err(key, "unknown key".into()));
        }
        if !seen.insert(key.to_string()) {
            return Err(err(key, "key given twice".into()));
        }
        let m = &mut cfg.micro;
        let r: std::result::Result<(), String> = (|| {
            match key {
                "epsilon" => m.epsilon = num(value)?,
                "t_final" => m.t_final = num(value)?,
                "steps" => m.steps = count(value)?,
                "mu" => m.mu = num(value)?,
                "delta" => m.delta = num(value)?,
                "projection" => m.projection = ProjectionMode::parse(value).map_err(|e| e.to_string())?,
                "picard_tol" => m.picard_tol = num(value)?,
                "picard_max" => m.picard_max = count(value)?,
                "theta_k" => p.theta_k = num(value)?,
                "gamma_k" => p.gamma_k = num(value)?,
                "beta" => p.beta = num(value)?,
                "theta_p" => p.theta_p = num(value)?,
                "lambda" => p.lambda = num(value)?,
                "gamma_p_amplitude" => p.gamma_p_amplitude = num(value)?,
                "cutoff_scale" => p.cutoff_scale = num(value)?,
                "theta_b" => p.theta_b = num(value)?,
                "alpha" => p.alpha = num(value)?,
                "kappa_d" => p.kappa_d = num(value)?,
                "g" => {
                    let v = list(value)?;
                    if v.len() != 2 {
                        return Err("expected two components".into());
                    }
                    p.g = [v[0], v[1]];
                    g_given = true;
                }
                "q1" => p.q1 = num(value)?,
                "constant_coefficients" => constant = boolean(value)?,
                "f0_level" => f0 = num(value)?,
                "f1_exponent" => f1_exponent = Some(num(value)?),
                "velocity" => {
                    if value != "zero" {
                        return Err("only `zero` is supported in configuration files".into());
                    }
                }
                "h_slope" => h_slope = num(value)?,
                "hole_radius" => geom.hole_radius = num(value)?,
                "hole_segments" => geom.hole_segments = count(value)?,
                "cell_divisions" => geom.divisions = count(value)?,
                "coefficient_a" => m.coefficient = CellCoefficient::parse(value).map_err(|e| e.to_string())?,
                "coefficient_b" => {
                    cfg.coefficient_b = if value.is_empty() {
                        None
                    } else {
                        Some(CellCoefficient::parse(value).map_err(|e| e.to_string())?)
                    }
                }
                "macro_divisions" => cfg.macro_divisions = count(value)?,
                "memory_mode" => cfg.memory_mode = boolean(value)?,
                "outer_iters" => cfg.outer_iters = count(value)?,
                "sweep_epsilons" => sweeps[0] = Some(list(value)?),
                "sweep_deltas" => sweeps[1] = Some(list(value)?),
                "sweep_mus" => sweeps[2] = Some(list(value)?),
                _ => unreachable!("key list and match arms agree"),
            }
            Ok(())
        })();
        r.map_err(|message| err(key, message))?;
    }

    if constant {
        let g = p.g;
        p = ModelParams {
            kappa_d: p.kappa_d,
            ..ModelParams::constant()
        };
        if g_given {
            p.g = g;
        }
    }
    let m = &mut cfg.micro;
    m.params = p;
    m.geometry = geom;
    m.source = if f0 == 0.0 {
        BoundarySource::zero(&p)
    } else {
        let mut s = BoundarySource::new(f0, &p);
        if let Some(e) = f1_exponent {
            s.exponent = e;
        }
        s
    };
    m.velocity = VelocityField {
        h_slope,
        ..VelocityField::zero()
    };
    cfg.sweep.base = m.clone();
    cfg.sweep.macro_divisions = cfg.macro_divisions;
    let [e, d, u] = sweeps;
    if let Some(e) = e {
        cfg.sweep.epsilons = e;
    }
    if let Some(d) = d {
        cfg.sweep.deltas = d;
    }
    if let Some(u) = u {
        cfg.sweep.mus = u;
    }
    Ok(cfg)
}
