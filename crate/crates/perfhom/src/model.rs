//! Constitutive laws, their δ-regularizations, the a priori exponent and
//! the data `F`, `f` of the microscopic problem.

use num_rational::Ratio;

use crate::fem::FemSpace;
use crate::mesh::Tag;
use crate::{Error, Result};

/// Parameters of the constitutive families
/// `k(z) = ϑ_k z^β / (1 + γ_k z^β)`, `P_c(z) = ϑ_p z^{−λ} / (1 + γ_p(z) z^λ)`
/// and `b(z) = ϑ_b z^α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub theta_k: f64,
    pub gamma_k: f64,
    pub beta: f64,
    pub theta_p: f64,
    pub lambda: f64,
    /// Height of the bump `γ_p`; zero gives the pure power law.
    pub gamma_p_amplitude: f64,
    /// Support radius of `γ_p`.
    pub cutoff_scale: f64,
    pub theta_b: f64,
    pub alpha: f64,
    pub kappa_d: f64,
    pub g: [f64; 2],
    pub q1: f64,
    /// Replace the laws by `k ≡ 1`, `P_c ≡ 1`, `b(z) = z`.
    pub constant_coefficients: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            theta_k: 1.0,
            gamma_k: 1.0,
            beta: 7.0,
            theta_p: 1.0,
            lambda: 7.0,
            gamma_p_amplitude: 0.0,
            cutoff_scale: 1.0,
            theta_b: 1.0,
            alpha: 1.0,
            kappa_d: 1.0,
            g: [0.0, -0.5],
            q1: 4.0,
            constant_coefficients: false,
        }
    }
}

/// All constitutive values at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constitutive {
    pub k: f64,
    pub pc: f64,
    pub k_pc: f64,
    pub b: f64,
    pub db: f64,
}

/// Cubic B-spline bump, 1 at the origin and supported on `|s| < 1`.
fn bump(s: f64) -> f64 {
    let x = 2.0 * s.abs();
    if x >= 2.0 {
        0.0
    } else if x >= 1.0 {
        (2.0 - x).powi(3) / 4.0
    } else {
        1.0 - 1.5 * x * x + 0.75 * x * x * x
    }
}

impl ModelParams {
    /// Constant-coefficient parameters (`k ≡ 1`, `P_c ≡ 1`, `b(z) = z`).
    pub fn constant() -> Self {
        ModelParams {
            constant_coefficients: true,
            g: [0.0, 0.0],
            ..ModelParams::default()
        }
    }

    /// Checks the structural assumptions; the exponent condition is only a flag
    /// (see [`ModelParams::estimates_valid`]).
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("theta_k", self.theta_k),
            ("theta_p", self.theta_p),
            ("lambda", self.lambda),
            ("theta_b", self.theta_b),
            ("cutoff_scale", self.cutoff_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.gamma_k >= 0.0) || !(self.gamma_p_amplitude >= 0.0) {
            return Err(Error::Domain("gamma_k and gamma_p must be nonnegative".into()));
        }
        if !(self.beta >= 1.0) {
            return Err(Error::Domain(format!("beta = {} must be at least 1", self.beta)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 3.0) {
            return Err(Error::Domain(format!("alpha = {} must lie in (0, 3]", self.alpha)));
        }
        if !(self.kappa_d > 0.0 && self.kappa_d <= 1.0) {
            return Err(Error::Domain(format!("kappa_D = {} must lie in (0, 1]", self.kappa_d)));
        }
        if !(self.q1 > 2.0) {
            return Err(Error::Domain(format!("q1 = {} must exceed 2", self.q1)));
        }
        if self.beta < self.lambda {
            return Err(Error::Admissibility(format!(
                "k·P_c is unbounded near 0 unless beta >= lambda (beta = {}, lambda = {})",
                self.beta, self.lambda
            )));
        }
        Ok(())
    }

    /// Two-dimensional exponent condition `β ≥ λ > 3 + α + 4/(q1 − 2)`.
    pub fn estimates_valid(&self) -> bool {
        self.beta >= self.lambda && self.lambda > 3.0 + self.alpha + 4.0 / (self.q1 - 2.0)
    }

    pub fn gamma_p(&self, z: f64) -> f64 {
        self.gamma_p_amplitude * bump(z / self.cutoff_scale)
    }

    /// `k(z)` for `z ≥ 0`.
    pub fn k(&self, z: f64) -> f64 {
        if self.constant_coefficients {
            return 1.0;
        }
        let zb = z.powf(self.beta);
        self.theta_k * zb / (1.0 + self.gamma_k * zb)
    }

    /// `P_c(z)` for `z > 0` (infinite at 0).
    pub fn pc(&self, z: f64) -> f64 {
        if self.constant_coefficients {
            return 1.0;
        }
        let zl = z.powf(self.lambda);
        self.theta_p / (zl * (1.0 + self.gamma_p(z) * zl))
    }

    /// `k(z)·P_c(z)`, evaluated without the `0·∞` cancellation at small z.
    pub fn k_pc(&self, z: f64) -> f64 {
        if self.constant_coefficients {
            return 1.0;
        }
        let zb = z.powf(self.beta);
        let zl = z.powf(self.lambda);
        self.theta_k * self.theta_p * z.powf(self.beta - self.lambda)
            / ((1.0 + self.gamma_k * zb) * (1.0 + self.gamma_p(z) * zl))
    }

    pub fn b(&self, z: f64) -> f64 {
        if self.constant_coefficients {
            return z;
        }
        self.theta_b * z.powf(self.alpha)
    }

    pub fn db(&self, z: f64) -> f64 {
        if self.constant_coefficients {
            return 1.0;
        }
        self.theta_b * self.alpha * z.powf(self.alpha - 1.0)
    }

    fn shift(&self, delta: f64, v: f64) -> f64 {
        v.max(0.0) + delta
    }

    pub fn k_delta(&self, delta: f64, v: f64) -> f64 {
        self.k(self.shift(delta, v))
    }

    pub fn pc_delta(&self, delta: f64, v: f64) -> f64 {
        self.pc(self.shift(delta, v))
    }

    pub fn k_pc_delta(&self, delta: f64, v: f64) -> f64 {
        self.k_pc(self.shift(delta, v))
    }

    pub fn b_delta(&self, delta: f64, v: f64) -> f64 {
        if self.constant_coefficients {
            return v;
        }
        self.b(self.shift(delta, v))
    }

    /// `b′(v⁺ + δ)` for every v, including the negative range.
    pub fn db_delta(&self, delta: f64, v: f64) -> f64 {
        self.db(self.shift(delta, v))
    }

    /// `∫_ξ^{κ_D} dη / k(η)` in closed form, `0 < ξ ≤ κ_D`.
    pub fn inverse_k_integral(&self, xi: f64) -> f64 {
        let kd = self.kappa_d;
        if self.constant_coefficients {
            return kd - xi;
        }
        let power = if (self.beta - 1.0).abs() < 1e-14 {
            (kd / xi).ln()
        } else {
            (xi.powf(1.0 - self.beta) - kd.powf(1.0 - self.beta)) / (self.beta - 1.0)
        };
        (power + self.gamma_k * (kd - xi)) / self.theta_k
    }

    /// `sup k·P_c` over a log grid of `[1e-8, 10]`.
    pub fn k_pc_bound(&self) -> f64 {
        let n = 4000;
        (0..=n)
            .map(|i| self.k_pc(10f64.powf(-8.0 + 9.0 * i as f64 / n as f64)))
            .fold(0.0, f64::max)
    }
}

/// Checked evaluation of the regularized laws at `v`.
pub fn eval_constitutive(params: &ModelParams, delta: f64, v: f64) -> Result<Constitutive> {
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!("delta = {delta} must be nonnegative")));
    }
    if delta == 0.0 && v < 0.0 && !params.constant_coefficients {
        return Err(Error::Domain(format!("v = {v} < 0 with delta = 0")));
    }
    Ok(Constitutive {
        k: params.k_delta(delta, v),
        pc: params.pc_delta(delta, v),
        k_pc: params.k_pc_delta(delta, v),
        b: params.b_delta(delta, v),
        db: params.db_delta(delta, v),
    })
}

/// Exponent `p` of the gradient-of-time-derivative estimate and the
/// auxiliary `γ` (required `> 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent {
    pub p: Rational,
    pub gamma: Rational,
}

/// Exact rationals of the exponent formula.
pub type Rational = Ratio<i128>;

/// Largest denominator used when [`exponent_p`] rounds its inputs.
pub const MAX_DENOMINATOR: i128 = 1000;

impl Exponent {
    pub fn p_f64(&self) -> f64 {
        *self.p.numer() as f64 / *self.p.denom() as f64
    }
}

/// Exact-arithmetic exponent for dimension `n ∈ {2, 3}`; `q1` is used for
/// `n = 2` only.
pub fn exponent_p_exact(
    alpha: Rational,
    beta: Rational,
    lambda: Rational,
    n: u32,
    q1: Rational,
) -> Result<Exponent> {
    let r = Ratio::from_integer;
    let one = r(1);
    let two = r(2);
    let (p, gamma) = match n {
        3 => {
            if !(beta >= lambda && lambda > r(4) + alpha) {
                return Err(Error::Admissibility(format!(
                    "n = 3 needs beta >= lambda > 4 + alpha (alpha = {alpha}, beta = {beta}, lambda = {lambda})"
                )));
            }
            let p = two * (r(3) * lambda + two * beta - two * alpha - r(8))
                / (r(3) * lambda + r(5) * beta - two * alpha - r(8));
            let gamma = (lambda - two - two / r(3) * (one + alpha - beta)) / beta;
            (p, gamma)
        }
        2 => {
            if q1 <= two {
                return Err(Error::Admissibility(format!("q1 = {q1} must exceed 2")));
            }
            if !(beta >= lambda && lambda > r(3) + alpha + r(4) / (q1 - two)) {
                return Err(Error::Admissibility(format!(
                    "n = 2 needs beta >= lambda > 3 + alpha + 4/(q1 - 2) \
                     (alpha = {alpha}, beta = {beta}, lambda = {lambda}, q1 = {q1})"
                )));
            }
            let s = one + alpha - beta;
            let p = two * (two * s + q1 * (lambda + beta - r(3) - alpha))
                / (two * s + q1 * (lambda + two * beta - r(3) - alpha));
            let gamma = (lambda - two - s * (one - two / q1)) / beta;
            (p, gamma)
        }
        _ => return Err(Error::Admissibility(format!("dimension n = {n} is not 2 or 3"))),
    };
    if gamma <= one {
        return Err(Error::Admissibility(format!("gamma = {gamma} is not above 1")));
    }
    if !(p > one && p < two) {
        return Err(Error::Admissibility(format!("p = {p} is outside (1, 2)")));
    }
    Ok(Exponent { p, gamma })
}

/// Last continued-fraction convergent of `x` with denominator at most
/// [`MAX_DENOMINATOR`].
fn to_ratio(x: f64, name: &str) -> Result<Rational> {
    if !x.is_finite() || x.abs() > 1e12 {
        return Err(Error::Domain(format!("{name} = {x} is not representable")));
    }
    let (mut h0, mut h1, mut k0, mut k1) = (0i128, 1i128, 1i128, 0i128);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        let (h2, k2) = (a as i128 * h1 + h0, a as i128 * k1 + k0);
        if k2 > MAX_DENOMINATOR {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = y - a;
        if frac < 1e-12 {
            break;
        }
        y = 1.0 / frac;
    }
    Ok(Ratio::new(h1, k1))
}

/// [`exponent_p_exact`] for floating-point inputs, each rounded to a fraction
/// with denominator at most [`MAX_DENOMINATOR`].
pub fn exponent_p(alpha: f64, beta: f64, lambda: f64, n: u32, q1: f64) -> Result<Exponent> {
    exponent_p_exact(
        to_ratio(alpha, "alpha")?,
        to_ratio(beta, "beta")?,
        to_ratio(lambda, "lambda")?,
        n,
        to_ratio(q1, "q1")?,
    )
}

/// The boundary source `f(t, ξ) = f_0 · f_1(ξ)` with
/// `f_1(ξ) = sign(ξ)|ξ|^m · cutoff(|ξ|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySource {
    pub f0_level: f64,
    /// Exponent `m` of `f_1`.
    pub exponent: f64,
    /// `cutoff = 1` on `[0, cutoff_start]`.
    pub cutoff_start: f64,
    /// `cutoff = 0` beyond `cutoff_end`.
    pub cutoff_end: f64,
}

/// Largest admissible value of the recorded bound on `|f_1(ξ)∫_ξ^{κ_D} 1/k|`.
pub const F1_BOUND_LIMIT: f64 = 1e6;

impl BoundarySource {
    /// Shape tied to the parameters: exponent β, cutoff from `2κ_D` to `3κ_D`.
    pub fn new(f0_level: f64, params: &ModelParams) -> Self {
        BoundarySource {
            f0_level,
            exponent: params.beta,
            cutoff_start: 2.0 * params.kappa_d,
            cutoff_end: 3.0 * params.kappa_d,
        }
    }

    pub fn zero(params: &ModelParams) -> Self {
        Self::new(0.0, params)
    }

    pub fn cutoff(&self, x: f64) -> f64 {
        if x <= self.cutoff_start {
            1.0
        } else if x >= self.cutoff_end {
            0.0
        } else {
            let s = (x - self.cutoff_start) / (self.cutoff_end - self.cutoff_start);
            1.0 - s * s * (3.0 - 2.0 * s)
        }
    }

    pub fn f1(&self, xi: f64) -> f64 {
        xi.signum() * xi.abs().powf(self.exponent) * self.cutoff(xi.abs())
    }

    pub fn eval(&self, _t: f64, xi: f64) -> f64 {
        if xi == 0.0 {
            return 0.0;
        }
        self.f0_level * self.f1(xi)
    }

    /// Checks the sign conditions and returns the constant
    /// `C = max |f_1(ξ) ∫_ξ^{κ_D} dη/k(η)|` over a geometric grid of
    /// `[1e-8, κ_D]`.
    pub fn check(&self, params: &ModelParams) -> Result<f64> {
        if !(self.f0_level >= 0.0) {
            return Err(Error::Domain(format!("f0_level = {} must be nonnegative", self.f0_level)));
        }
        if !(self.exponent > 0.0) || !(self.cutoff_start > 0.0 && self.cutoff_end > self.cutoff_start) {
            return Err(Error::Domain("f1 shape must have a positive exponent and cutoff".into()));
        }
        let n = 2000;
        let lo: f64 = 1e-8;
        let ratio = (params.kappa_d / lo).powf(1.0 / n as f64);
        let mut c: f64 = 0.0;
        let mut xi = lo;
        for _ in 0..=n {
            let xi_c = xi.min(params.kappa_d);
            c = c.max((self.f1(xi_c) * params.inverse_k_integral(xi_c)).abs());
            xi *= ratio;
        }
        if !c.is_finite() || c > F1_BOUND_LIMIT {
            return Err(Error::Domain(format!(
                "|f1(xi) * int 1/k| reaches {c:e}; the f1 shape decays too slowly at 0"
            )));
        }
        Ok(c)
    }
}

/// Y-periodic scalar coefficient on the unit cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellCoefficient {
    Constant(f64),
    /// `mean + amplitude · sin(2π y₁)`.
    Layered { mean: f64, amplitude: f64 },
}

impl Default for CellCoefficient {
    fn default() -> Self {
        CellCoefficient::Constant(1.0)
    }
}

impl CellCoefficient {
    pub fn eval(&self, y: [f64; 2]) -> f64 {
        match *self {
            CellCoefficient::Constant(c) => c,
            CellCoefficient::Layered { mean, amplitude } => {
                mean + amplitude * (2.0 * std::f64::consts::PI * y[0]).sin()
            }
        }
    }

    /// Lower bound of the coefficient over the cell.
    pub fn min(&self) -> f64 {
        match *self {
            CellCoefficient::Constant(c) => c,
            CellCoefficient::Layered { mean, amplitude } => mean - amplitude.abs(),
        }
    }

    /// Parses `constant:<c>` or `layered:<mean>,<amplitude>`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("cannot parse coefficient `{s}`"));
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        match (kind.trim(), nums.as_slice()) {
            ("constant", [c]) => Ok(CellCoefficient::Constant(*c)),
            ("layered", [m, a]) => Ok(CellCoefficient::Layered { mean: *m, amplitude: *a }),
            _ => Err(bad()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            CellCoefficient::Constant(c) => format!("constant:{c}"),
            CellCoefficient::Layered { mean, amplitude } => format!("layered:{mean},{amplitude}"),
        }
    }
}

/// Source of the convective flux `Q H(z)`.
#[derive(Debug, Clone, PartialEq)]
pub enum VelocityMode {
    Zero,
    /// One vector per triangle of the mesh the velocity lives on.
    Tabulated(Vec<[f64; 2]>),
}

/// `H(z) = h_slope · z`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub mode: VelocityMode,
    pub h_slope: f64,
}

impl VelocityField {
    pub fn zero() -> Self {
        VelocityField {
            mode: VelocityMode::Zero,
            h_slope: 0.0,
        }
    }

    pub fn h(&self, z: f64) -> f64 {
        self.h_slope * z
    }

    /// Mean of `Q` over the mesh (`[0, 0]` in zero mode).
    pub fn mean(&self, space: &FemSpace) -> [f64; 2] {
        match &self.mode {
            VelocityMode::Zero => [0.0, 0.0],
            VelocityMode::Tabulated(q) => {
                let area = space.mesh.total_area();
                let mut m = [0.0; 2];
                for (t, v) in q.iter().enumerate() {
                    m[0] += space.mesh.areas[t] * v[0];
                    m[1] += space.mesh.areas[t] * v[1];
                }
                [m[0] / area, m[1] / area]
            }
        }
    }

    /// Weak divergence against every test function not on the outer
    /// boundary, and the normal flux through every Γ edge, both `≤ 1e-8`.
    pub fn check(&self, space: &FemSpace) -> Result<()> {
        let q = match &self.mode {
            VelocityMode::Zero => return Ok(()),
            VelocityMode::Tabulated(q) => q,
        };
        let mesh = space.mesh;
        let load = space.flux_load(q)?;
        let outer = mesh.tagged_vertices(Tag::Outer);
        for (i, &r) in load.iter().enumerate() {
            if !outer[i] && r.abs() > 1e-8 {
                return Err(Error::Divergence(format!(
                    "weak divergence {r:e} at vertex {i}"
                )));
            }
        }
        if !mesh.gamma_edges.is_empty() {
            let mut owner = std::collections::HashMap::new();
            for (t, tri) in mesh.triangles.iter().enumerate() {
                for k in 0..3 {
                    owner.insert([tri[k], tri[(k + 1) % 3]], t);
                    owner.insert([tri[(k + 1) % 3], tri[k]], t);
                }
            }
            for e in &mesh.gamma_edges {
                let t = owner[e];
                let [a, b] = [mesh.vertices[e[0]], mesh.vertices[e[1]]];
                let len = mesh.edge_length(*e);
                let normal = [(b[1] - a[1]) / len, (a[0] - b[0]) / len];
                let flux = q[t][0] * normal[0] + q[t][1] * normal[1];
                if flux.abs() > 1e-8 {
                    return Err(Error::Divergence(format!(
                        "normal flux {flux:e} through gamma edge {e:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `F = Q H(v) + k_δ(v) g` per triangle, with `v` taken at the centroid.
pub fn eval_f(
    velocity: &VelocityField,
    params: &ModelParams,
    delta: f64,
    space: &FemSpace,
    v: &[f64],
) -> Result<Vec<[f64; 2]>> {
    if v.len() != space.dim() {
        return Err(Error::Dimension {
            expected: space.dim(),
            got: v.len(),
        });
    }
    if let VelocityMode::Tabulated(q) = &velocity.mode {
        if q.len() != space.mesh.n_triangles() {
            return Err(Error::Dimension {
                expected: space.mesh.n_triangles(),
                got: q.len(),
            });
        }
    }
    let centroid = space.at_centroids(v);
    Ok(centroid
        .iter()
        .enumerate()
        .map(|(t, &vc)| {
            let kv = params.k_delta(delta, vc);
            let mut f = [kv * params.g[0], kv * params.g[1]];
            if let VelocityMode::Tabulated(q) = &velocity.mode {
                let h = velocity.h(vc);
                f[0] += q[t][0] * h;
                f[1] += q[t][1] * h;
            }
            f
        })
        .collect())
}
