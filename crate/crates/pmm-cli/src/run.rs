//! Command dispatch and artifact writing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pmm_core::convergence::{hydro_compare, kappa_sweep, slow_bond_compare, HydroGrid, HydroResult, SweepResult};
use pmm_core::energy::{default_c, dictionary, dual_parts, energy_report, EnergyParams};
use pmm_core::kmc::simulate;
use pmm_core::lattice::Topology;
use pmm_core::oracle::{exact_density_evolution, generator_matrix, invariant_measure_check, laplacian_identity_check, MAX_CHECK_N};
use pmm_core::pde::field::center;
use pmm_core::pde::{uniform_times, BoundaryRegistry, SolveOptions, SpaceBasis, SpaceTimeField, TestFunction};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{Command, RunConfig};

/// Row sums must vanish to this fraction of `||Q||_inf`.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Invariance, reversibility and Laplacian residuals, relative to `||Q||_inf`.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Validation(_) => 1,
            RunError::Numerical(_) => 2,
        }
    }
}

impl From<pmm_core::Error> for RunError {
    fn from(e: pmm_core::Error) -> Self {
        if e.is_numerical() {
            RunError::Numerical(e.to_string())
        } else {
            RunError::Validation(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> RunError {
    RunError::Validation(format!("cannot write {}: {e}", path.display()))
}

/// Full-precision float for CSV output (17 significant digits).
pub fn f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Files written by one run.
#[derive(Debug, Default)]
struct Artifacts {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Artifacts {
    fn write(&mut self, name: &str, contents: String) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, &contents).map_err(|e| io_err(&path, e))?;
        let digest = Sha256::digest(contents.as_bytes());
        let hex = digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        self.files.push((name.to_string(), hex));
        Ok(())
    }
}

/// What a command hands back to the manifest writer.
struct Outcome {
    summary: Value,
    /// Raised after the artifacts are written (oracle residual breach).
    failure: Option<RunError>,
}

impl Outcome {
    fn ok(summary: Value) -> Self {
        Outcome {
            summary,
            failure: None,
        }
    }
}

/// `major.minor.patch+describe` of the build.
pub fn version() -> String {
    format!("{}+{}", env!("CARGO_PKG_VERSION"), env!("PMM_GIT_DESCRIBE"))
}

/// Runs the configured command, writing its artifacts, `config.txt` and
/// `manifest.json` into `config.out`.
pub fn run(config: &RunConfig, defaulted: &[String]) -> Result<PathBuf, RunError> {
    let start = Instant::now();
    fs::create_dir_all(&config.out).map_err(|e| io_err(&config.out, e))?;
    let mut art = Artifacts {
        dir: config.out.clone(),
        files: Vec::new(),
    };
    art.write("config.txt", config.to_text())?;
    let outcome = match config.command {
        Command::Simulate => run_simulate(config, &mut art),
        Command::Solve => run_solve(config, &mut art),
        Command::Energy => run_energy(config, &mut art),
        Command::Sweep => run_sweep(config, &mut art),
        Command::Hydro => run_hydro(config, &mut art),
        Command::Oracle => run_oracle(config, &mut art),
        Command::Slowbond => run_slowbond(config, &mut art),
    }?;
    let config_echo: serde_json::Map<String, Value> = config
        .pairs()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    let files: Vec<Value> = art
        .files
        .iter()
        .map(|(name, sha)| json!({ "name": name, "sha256": sha }))
        .collect();
    let manifest = json!({
        "tool": "pmm",
        "version": version(),
        "command": config.command.name(),
        "config": config_echo,
        "defaulted": defaulted,
        "files": files,
        "result": outcome.summary,
        "status": match &outcome.failure {
            None => "ok".to_string(),
            Some(e) => e.to_string(),
        },
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    let path = config.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(path),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

fn run_simulate(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, RunError> {
    let times = uniform_times(cfg.params.t_final, cfg.samples);
    let tr = simulate(&cfg.profile, &cfg.params, cfg.topology, &times, cfg.seed)?;
    let mut occ = String::from("t,x,eta\n");
    let mut counts = String::from("t,particles,injections,removals\n");
    for (k, snap) in tr.snapshots.iter().enumerate() {
        let t = f(tr.sample_times[k]);
        for (x, v) in snap.sites().zip(snap.occupancy()) {
            let _ = writeln!(occ, "{t},{x},{v}");
        }
        let _ = writeln!(counts, "{t},{},{},{}", snap.particle_count(), tr.injections[k], tr.removals[k]);
    }
    art.write("trajectory.csv", occ)?;
    art.write("particles.csv", counts)?;
    Ok(Outcome::ok(json!({
        "topology": cfg.topology.name(),
        "events": tr.events,
        "stream": 0,
    })))
}

fn solve_configured(cfg: &RunConfig) -> Result<SpaceTimeField, RunError> {
    let bc = BoundaryRegistry::builtin().create(&cfg.bc, Some(cfg.params.kappa))?;
    let opts = SolveOptions::new(cfg.cells, cfg.cfl).with_snapshots(cfg.snapshots);
    Ok(pmm_core::pde::solve(&cfg.profile, &cfg.params, bc.as_ref(), &opts)?)
}

fn field_csv(field: &SpaceTimeField) -> String {
    let n = field.cells();
    let mut s = String::from("t,u,rho\n");
    for (k, &t) in field.times().iter().enumerate() {
        let t = f(t);
        for (i, &v) in field.row(k).iter().enumerate() {
            let _ = writeln!(s, "{t},{},{}", f(center(i, n)), f(v));
        }
    }
    s
}

fn traces_csv(field: &SpaceTimeField) -> String {
    let mut s = String::from("t,left,right\n");
    for (k, &t) in field.times().iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", f(t), f(field.left_trace(k)), f(field.right_trace(k)));
    }
    s
}

fn run_solve(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, RunError> {
    let field = solve_configured(cfg)?;
    art.write("field.csv", field_csv(&field))?;
    art.write("traces.csv", traces_csv(&field))?;
    let (lo, hi) = field.data.min_max();
    Ok(Outcome::ok(json!({
        "bc": field.bc.to_string(),
        "solver": field.log.as_ref().map(|l| json!({ "dt": l.dt, "steps": l.steps })),
        "min": lo,
        "max": hi,
    })))
}

fn run_energy(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, RunError> {
    let field = solve_configured(cfg)?;
    let p = &cfg.params;
    let c = cfg.c.unwrap_or_else(|| default_c(p.m));
    let ep = EnergyParams::new(c, p.kappa, p.m, p.alpha, p.beta)?;
    let holder_probe = TestFunction::spatial(1.0, SpaceBasis::Cos(1));
    let report = energy_report(&field, &ep, &dictionary(cfg.j_max), &holder_probe)?;
    let parts = dual_parts(&field, &ep)?;
    let rows = [
        ("dual_value", report.dual_value),
        ("sup_value", report.sup_value),
        ("plain_part", parts.plain),
        ("left_reservoir_part", parts.left),
        ("right_reservoir_part", parts.right),
        ("left_bc_residual", report.left_bc_residual),
        ("right_bc_residual", report.right_bc_residual),
        ("holder_modulus", report.holder_modulus),
        ("c", c),
    ];
    let mut s = String::from("quantity,value\n");
    for (name, v) in rows {
        let _ = writeln!(s, "{name},{}", f(v));
    }
    let _ = writeln!(s, "dictionary_size,{}", report.dictionary_size);
    art.write("energy.csv", s)?;
    Ok(Outcome::ok(to_value(&report)))
}

fn sweep_csv(sweep: &SweepResult) -> String {
    let mut s = String::from("kappa,distance_to_low_limit,distance_to_high_limit,trace_defect\n");
    for (i, &k) in sweep.kappa_grid.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            f(k),
            f(sweep.distances_to_neumann[i]),
            f(sweep.distances_to_dirichlet[i]),
            f(sweep.trace_defects[i])
        );
    }
    s
}

fn sweep_options(cfg: &RunConfig) -> SolveOptions {
    SolveOptions::new(cfg.cells, cfg.cfl).with_snapshots(cfg.snapshots)
}

fn run_sweep(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, RunError> {
    let sweep = kappa_sweep(&cfg.profile, &cfg.params, &cfg.kappa_grid, &sweep_options(cfg))?;
    art.write("sweep.csv", sweep_csv(&sweep))?;
    Ok(Outcome::ok(to_value(&sweep.manifest)))
}

fn hydro_grid(cfg: &RunConfig) -> HydroGrid {
    HydroGrid {
        cells: cfg.bins,
        pde_cells: cfg.pde_cells,
        samples: cfg.samples,
        cfl: cfg.cfl,
    }
}

fn write_hydro(h: &HydroResult, art: &mut Artifacts) -> Result<Value, RunError> {
    let cells = h.grid.cells;
    let mut profiles = String::from("n,t,bin,mean,stderr,reference\n");
    let mut levels = String::from(
        "n,sup_error,max_stderr,particle_drift,end_left,end_left_stderr,end_right,end_right_stderr,events\n",
    );
    for l in &h.levels {
        for (k, &t) in h.sample_times.iter().enumerate() {
            for b in 0..cells {
                let i = k * cells + b;
                let _ = writeln!(
                    profiles,
                    "{},{},{b},{},{},{}",
                    l.n,
                    f(t),
                    f(l.means[i]),
                    f(l.stderrs[i]),
                    f(l.reference[i])
                );
            }
        }
        let _ = writeln!(
            levels,
            "{},{},{},{},{},{},{},{},{}",
            l.n,
            f(l.sup_error),
            f(l.max_stderr),
            f(l.particle_drift),
            f(l.end_means[0]),
            f(l.end_stderrs[0]),
            f(l.end_means[1]),
            f(l.end_stderrs[1]),
            l.events
        );
    }
    art.write("hydro_profiles.csv", profiles)?;
    art.write("hydro_levels.csv", levels)?;
    Ok(json!({
        "theta": h.theta,
        "topology": h.topology,
        "reference": h.reference_kind.to_string(),
        "grid": to_value(&h.grid),
        "seed": h.seed,
        "sup_errors": h.sup_errors(),
        "within_budget": h.levels.iter().map(|l| l.within_budget()).collect::<Vec<_>>(),
        "grade": h.grade,
    }))
}

fn run_hydro(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, RunError> {
    let h = hydro_compare(
        &cfg.profile,
        &cfg.params,
        cfg.params.theta,
        &cfg.n_grid,
        cfg.trajectories,
        cfg.seed,
        &hydro_grid(cfg),
    )?;
    Ok(Outcome::ok(write_hydro(&h, art)?))
}

fn run_slowbond(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, RunError> {
    let (sweep, hydro) = slow_bond_compare(
        &cfg.profile,
        &cfg.params,
        &cfg.kappa_grid,
        &sweep_options(cfg),
        &cfg.n_grid,
        cfg.trajectories,
        cfg.seed,
        &hydro_grid(cfg),
    )?;
    art.write("sweep.csv", sweep_csv(&sweep))?;
    let hydro = write_hydro(&hydro, art)?;
    Ok(Outcome::ok(json!({ "sweep": to_value(&sweep.manifest), "hydro": hydro })))
}

fn run_oracle(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, RunError> {
    let p = &cfg.params;
    let q = generator_matrix(p, cfg.topology)?;
    let norm = q.norm_inf();
    let mut rows: Vec<(&str, f64, f64)> = vec![("max_row_sum", q.max_row_sum() / norm, ROW_SUM_TOL)];
    if p.alpha == p.beta && p.n <= MAX_CHECK_N {
        let r = invariant_measure_check(p, cfg.topology)?;
        rows.push(("stationarity", r.stationarity / r.norm, RESIDUAL_TOL));
        rows.push(("detailed_balance", r.detailed_balance / r.norm, RESIDUAL_TOL));
    }
    if cfg.topology == Topology::Interval && p.n >= 4 {
        rows.push(("laplacian_identity", laplacian_identity_check(p)?, RESIDUAL_TOL));
    }
    let mut report = String::from("quantity,value,tolerance\n");
    for (name, v, tol) in &rows {
        let _ = writeln!(report, "{name},{},{}", f(*v), f(*tol));
    }
    let _ = writeln!(report, "norm_inf,{},", f(norm));
    art.write("oracle.csv", report)?;
    art.write("generator.txt", q.coordinate_dump())?;
    if p.n <= MAX_CHECK_N {
        let times = uniform_times(p.t_final, cfg.samples);
        let ev = exact_density_evolution(p, cfg.topology, &cfg.profile, &times)?;
        let first = cfg.topology.first_site();
        let mut s = String::from("t,x,mean\n");
        for (k, row) in ev.means.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                let _ = writeln!(s, "{},{},{}", f(ev.times[k]), first + i as i64, f(*v));
            }
        }
        art.write("density.csv", s)?;
    }
    let breaches: Vec<String> = rows
        .iter()
        .filter(|(_, v, tol)| !(v <= tol))
        .map(|(name, v, tol)| format!("{name} = {v:e} exceeds {tol:e}"))
        .collect();
    let summary = Value::Object(rows.iter().map(|(name, v, _)| (name.to_string(), json!(v))).collect());
    Ok(Outcome {
        summary,
        failure: (!breaches.is_empty()).then(|| RunError::Numerical(format!("oracle residual breach: {}", breaches.join("; ")))),
    })
}
