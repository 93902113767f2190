use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use super::{
    boundary_two_scale_check, convergence_errors, keys_help, load_config, run_convergence_sweep,
    run_penalty_and_delta_sweeps, ReportTable, RunConfig,
};
use crate::fem::FemSpace;
use crate::homogenize::{memory_kernel, solve_cell_memory, write_kernel_csv, EffectiveModel};
use crate::macroscale::{solve_macro, solve_macro_memory, MacroConfig};
use crate::mesh::{
    build_cell_mesh, build_perforated_mesh, build_solid_mesh, validate_cell_mesh, validate_mesh, write_mesh,
    write_vtk, CellMesh, PerforatedMesh, TriMesh,
};
use crate::micro::{apriori_monitor, delta_limit, read_trajectory, solve_micro, write_trajectory, AprioriReport};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "perfhom", version, about = "Perforated-domain obstacle problem workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for concurrent sweep entries and cell solves.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed of randomized test vectors; solver paths never read it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Build and validate the cell and perforated meshes.
    Mesh,
    /// Solve the cell problems and write the effective tensors.
    Cell,
    /// Solve the microscale problem on the perforated domain.
    Micro,
    /// Solve the homogenized problem on the unit square.
    Macro,
    /// Run the ε convergence, μ penalty and δ regularization sweeps.
    Converge,
    /// Compare persisted micro and macro trajectories.
    Report,
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 for invalid input, 2 when a solver fails.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cmd = Cli::command().after_help(keys_help());
    let cli = match cmd.try_get_matches_from(args).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(Error::Domain(format!("cannot start {n} worker threads: {e}"))),
        },
        None => run(&cli),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    cfg.micro.validate()?;
    fs::create_dir_all(&cli.out).map_err(|source| Error::Read {
        path: cli.out.clone(),
        source,
    })?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Mesh => mesh(&cfg, out),
        Command::Cell => cell(&cfg, out),
        Command::Micro => micro(&cfg, out),
        Command::Macro => macro_run(&cfg, out),
        Command::Converge => converge(&cfg, out),
        Command::Report => report(&cfg, out),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn write_field_vtk(mesh: &TriMesh, name: &str, values: &[f64], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_vtk(mesh, &[(name, values)], &mut w)?;
    w.flush()?;
    Ok(())
}

fn apriori_csv(label: &str, reports: &[(String, &AprioriReport)]) -> String {
    let mut s = format!("{label},{}\n", AprioriReport::csv_header());
    for (key, r) in reports {
        s.push_str(&format!("{key},{}\n", r.csv_row()));
    }
    s
}

fn effective(cfg: &RunConfig, cell: &CellMesh) -> Result<EffectiveModel> {
    let m = &cfg.micro;
    EffectiveModel::assemble(cell, &m.coefficient, cfg.coefficient_b.as_ref(), [0.0; 2], &m.source, &m.params)
}

fn macro_config(cfg: &RunConfig, effective: EffectiveModel) -> MacroConfig {
    let mut mc = MacroConfig::from_micro(&cfg.micro, effective, cfg.macro_divisions);
    mc.delta = cfg.sweep.macro_delta();
    mc.memory_mode = cfg.memory_mode;
    mc.outer_iters = cfg.outer_iters;
    mc
}

fn mesh(cfg: &RunConfig, out: &Path) -> Result<()> {
    let cell = build_cell_mesh(&cfg.micro.geometry)?;
    let perforated = build_perforated_mesh(&cfg.micro.geometry, cfg.micro.epsilon)?;
    let mut w = create(&out.join("cell.mesh"))?;
    write_mesh(&cell.mesh, &mut w)?;
    w.flush()?;
    let mut w = create(&out.join("perforated.mesh"))?;
    write_mesh(&perforated.mesh, &mut w)?;
    w.flush()?;
    let mut w = create(&out.join("perforated.vtk"))?;
    write_vtk(&perforated.mesh, &[], &mut w)?;
    w.flush()?;

    let issues: Vec<String> = validate_cell_mesh(&cell)
        .issues
        .iter()
        .map(|i| format!("cell: {i}"))
        .chain(validate_mesh(&perforated).issues.iter().map(|i| format!("perforated: {i}")))
        .collect();
    let mut text = format!(
        "cell vertices {} triangles {}\nperforated vertices {} triangles {} holes {}\n",
        cell.mesh.n_vertices(),
        cell.mesh.n_triangles(),
        perforated.mesh.n_vertices(),
        perforated.mesh.n_triangles(),
        perforated.holes.len()
    );
    for i in &issues {
        text.push_str(i);
        text.push('\n');
    }
    write_text(&out.join("validation.txt"), &text)?;
    print!("{text}");
    if issues.is_empty() {
        Ok(())
    } else {
        Err(Error::Mesh(format!("{} validation issue(s), see validation.txt", issues.len())))
    }
}

fn cell(cfg: &RunConfig, out: &Path) -> Result<()> {
    let cell = build_cell_mesh(&cfg.micro.geometry)?;
    let eff = effective(cfg, &cell)?;
    write_text(&out.join("a_hom.csv"), &eff.tensor_csv())?;
    let mut w = create(&out.join("correctors.vtk"))?;
    write_vtk(
        &cell.mesh,
        &[("omega_1", &eff.correctors.omega[0]), ("omega_2", &eff.correctors.omega[1])],
        &mut w,
    )?;
    w.flush()?;
    let s = &eff.sources;
    write_text(
        &out.join("sources.csv"),
        &format!(
            "quantity,value\nc_gamma,{:.16e}\nf0_mean,{:.16e}\ng_1,{:.16e}\ng_2,{:.16e}\n",
            s.c_gamma, s.f0_mean, s.g[0], s.g[1]
        ),
    )?;
    if let Some(mc) = &eff.memory {
        // Representative history: u frozen at the Dirichlet value.
        let m = &cfg.micro;
        let delta = cfg.sweep.macro_delta();
        let history = vec![m.params.kappa_d; m.steps + 1];
        let chi = solve_cell_memory(mc, &history, &m.params, delta, m.h())?;
        let k = memory_kernel(mc, &chi, &history, &m.params, delta)?;
        let mut w = create(&out.join("kernel.csv"))?;
        write_kernel_csv(&mut w, &[(0, &k)])?;
        w.flush()?;
    }
    print!("{}", eff.tensor_csv());
    Ok(())
}

fn micro(cfg: &RunConfig, out: &Path) -> Result<()> {
    let m = &cfg.micro;
    let mesh = build_perforated_mesh(&m.geometry, m.epsilon)?;
    if m.delta == 0.0 {
        let limit = delta_limit(m, &mesh, &cfg.sweep.deltas)?;
        let mut reports = Vec::new();
        for (d, (t, r)) in limit.deltas.iter().zip(limit.trajectories.iter().zip(&limit.reports)) {
            write_trajectory(&out.join(format!("micro_delta_{d}")), t)?;
            reports.push((format!("{d}"), r));
        }
        write_text(&out.join("micro_apriori.csv"), &apriori_csv("delta", &reports))?;
        let mut cauchy = ReportTable::new("delta_pair", &["l2_gt_difference"]);
        for (w, c) in limit.deltas.windows(2).zip(&limit.cauchy) {
            cauchy.push(format!("{}/{}", w[0], w[1]), vec![*c])?;
        }
        cauchy.write_csv(&out.join("delta_cauchy.csv"))?;
        print!("{}", cauchy.to_csv());
        return Ok(());
    }
    let (traj, report) = solve_micro(m, &mesh)?;
    write_trajectory(&out.join("micro"), &traj)?;
    write_text(&out.join("micro_apriori.csv"), &apriori_csv("run", &[("micro".into(), &report)]))?;
    write_field_vtk(&mesh.mesh, "u", traj.final_state(), &out.join("micro_final.vtk"))?;
    println!(
        "micro: {} steps, min {:.6e}, violation {:.6e}",
        traj.steps(),
        traj.min_value(),
        traj.violation_measure()
    );
    Ok(())
}

fn macro_run(cfg: &RunConfig, out: &Path) -> Result<()> {
    let cell = build_cell_mesh(&cfg.micro.geometry)?;
    let eff = effective(cfg, &cell)?;
    write_text(&out.join("a_hom.csv"), &eff.tensor_csv())?;
    let mc = macro_config(cfg, eff);
    let mesh = build_solid_mesh(cfg.macro_divisions)?;
    let (traj, report) = if cfg.memory_mode {
        if mc.effective.memory.is_none() {
            return Err(Error::Domain(
                "memory_mode needs a coefficient_b different from coefficient_a".into(),
            ));
        }
        let run = solve_macro_memory(&mc, &mesh)?;
        let mut w = create(&out.join("kernel.csv"))?;
        run.kernel.write_csv(&mut w)?;
        w.flush()?;
        let mut sweeps = ReportTable::new("sweep", &["l2_gt_difference"]);
        for (i, d) in run.sweep_differences.iter().enumerate() {
            sweeps.push(format!("{}", i + 1), vec![*d])?;
        }
        sweeps.write_csv(&out.join("outer_sweeps.csv"))?;
        (run.trajectory, run.report)
    } else {
        solve_macro(&mc, &mesh)?
    };
    write_trajectory(&out.join("macro"), &traj)?;
    write_text(&out.join("macro_apriori.csv"), &apriori_csv("run", &[("macro".into(), &report)]))?;
    write_field_vtk(&mesh.mesh, "u", traj.final_state(), &out.join("macro_final.vtk"))?;
    println!("macro: {} steps, min {:.6e}", traj.steps(), traj.min_value());
    Ok(())
}

fn converge(cfg: &RunConfig, out: &Path) -> Result<()> {
    let sweep = run_convergence_sweep(&cfg.sweep)?;
    sweep.table.write_csv(&out.join("convergence.csv"))?;
    sweep.timings.write_csv(&out.join("timings.csv"))?;
    write_text(&out.join("a_hom.csv"), &sweep.effective.tensor_csv())?;
    let pd = run_penalty_and_delta_sweeps(&cfg.sweep)?;
    pd.penalty.write_csv(&out.join("penalty.csv"))?;
    pd.delta.write_csv(&out.join("delta.csv"))?;
    pd.cauchy.write_csv(&out.join("delta_cauchy.csv"))?;
    print!("{}", sweep.table.to_csv());
    Ok(())
}

fn check_id(traj_id: u64, mesh: &PerforatedMesh, what: &str) -> Result<()> {
    if traj_id != mesh.mesh.fingerprint() {
        return Err(Error::GridMismatch(format!(
            "persisted {what} trajectory was computed on a different mesh than the configuration describes"
        )));
    }
    Ok(())
}

fn report(cfg: &RunConfig, out: &Path) -> Result<()> {
    let m = &cfg.micro;
    let micro_traj = read_trajectory(&out.join("micro"))?;
    let macro_traj = read_trajectory(&out.join("macro"))?;
    let micro_mesh = build_perforated_mesh(&m.geometry, m.epsilon)?;
    let macro_mesh = build_solid_mesh(cfg.macro_divisions)?;
    check_id(micro_traj.mesh_id, &micro_mesh, "micro")?;
    check_id(macro_traj.mesh_id, &macro_mesh, "macro")?;
    let cell = build_cell_mesh(&m.geometry)?;
    let eff = effective(cfg, &cell)?;

    let err = convergence_errors(&micro_traj, &micro_mesh, &macro_traj, &macro_mesh.mesh, &eff.correctors, &cell)?;
    let two = boundary_two_scale_check(&micro_traj, &micro_mesh, &macro_traj, &macro_mesh.mesh)?;
    let micro_report = apriori_monitor(&micro_traj, &m.params, m.delta, &FemSpace::new(&micro_mesh.mesh))?;
    let macro_report = apriori_monitor(
        &macro_traj,
        &m.params,
        cfg.sweep.macro_delta(),
        &FemSpace::new(&macro_mesh.mesh),
    )?;

    let mut table = ReportTable::new("quantity", &["value"]);
    for (k, v) in [
        ("l2_error", err.l2),
        ("h1_corrected_error", err.h1_corrected),
        ("two_scale_lhs", two.lhs),
        ("two_scale_rhs", two.rhs),
        ("two_scale_gap", two.gap),
    ] {
        table.push(k, vec![v])?;
    }
    for (prefix, r) in [("micro", &micro_report), ("macro", &macro_report)] {
        for (k, v) in r.entries() {
            table.push(format!("{prefix}_{k}"), vec![v])?;
        }
    }
    for t in [&eff.a_hom, &eff.b_hom] {
        for i in 0..2 {
            for j in 0..2 {
                table.push(format!("{}_hom_{}{}", t.label, i + 1, j + 1), vec![t.entries[i][j]])?;
            }
        }
    }
    table.write_csv(&out.join("report.csv"))?;
    print!("{}", table.to_csv());
    Ok(())
}
