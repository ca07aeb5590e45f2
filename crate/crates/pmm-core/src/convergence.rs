//! Kappa sweeps of the Robin problem, particle-vs-PDE comparisons across the
//! boundary regimes, and the slow-bond torus experiment.
//!
//! Random streams: trajectory `j` of lattice size number `i` in `n_grid` uses
//! stream `i * 2^32 + j` of the master seed.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kmc::{run_ensemble, Binning, EnsembleStats};
use crate::lattice::Topology;
use crate::params::ModelParams;
use crate::pde::field::center;
use crate::pde::{
    dirichlet_trace_defect, l2_spacetime_distance, solve, uniform_times, BoundaryCondition,
    BoundaryKind, Profile, SolveOptions, SpaceTimeField, TraceSource,
};

/// Stream offset between consecutive lattice sizes.
pub const STREAM_BLOCK: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepManifest {
    pub params: ModelParams,
    pub profile: String,
    pub cells: usize,
    pub cfl: f64,
    pub snapshots: usize,
    /// Condition swept over kappa.
    pub swept: &'static str,
    /// References for the small- and large-kappa limits.
    pub low_limit: &'static str,
    pub high_limit: &'static str,
    /// `"theorem"` for the interval sweep, `"conjecture"` for the torus.
    pub grade: &'static str,
}

/// Distances of kappa-dependent solutions to their two limits.
///
/// On the torus the large-kappa limit is the periodic solution (traces
/// matched across the interface) and the trace defect is the interface jump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub kappa_grid: Vec<f64>,
    pub distances_to_neumann: Vec<f64>,
    pub distances_to_dirichlet: Vec<f64>,
    pub trace_defects: Vec<f64>,
    pub manifest: SweepManifest,
}

fn check_kappa_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
        return Err(Error::Precondition("kappa grid must be nonempty and positive".into()));
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::Precondition("kappa grid must be strictly monotone".into()));
    }
    Ok(())
}

/// `(int_0^T |rho(0) - rho(1)|^2 ds)^(1/2)` for a ring.
pub fn interface_jump(field: &SpaceTimeField) -> f64 {
    let n = field.cells();
    let per: Vec<f64> = (0..field.times().len())
        .map(|k| (field.row(k)[0] - field.row(k)[n - 1]).powi(2))
        .collect();
    crate::pde::field::trapezoid(field.times(), &per).sqrt()
}

fn sweep_with(
    g: &Profile,
    params: &ModelParams,
    kappa_grid: &[f64],
    opts: &SolveOptions,
    make: fn(f64) -> BoundaryKind,
    low: BoundaryKind,
    high: BoundaryKind,
    defect: fn(&SpaceTimeField) -> f64,
    grade: &'static str,
) -> Result<SweepResult> {
    check_kappa_grid(kappa_grid)?;
    let low_ref = solve(g, params, low.strategy().as_ref(), opts)?;
    let high_ref = solve(g, params, high.strategy().as_ref(), opts)?;
    let rows: Vec<(f64, f64, f64)> = kappa_grid
        .par_iter()
        .map(|&kappa| {
            let bc = make(kappa).strategy();
            let f = solve(g, &params.with_kappa(kappa)?, bc.as_ref(), opts)?;
            Ok((
                l2_spacetime_distance(&f, &low_ref)?,
                l2_spacetime_distance(&f, &high_ref)?,
                defect(&f),
            ))
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        kappa_grid: kappa_grid.to_vec(),
        distances_to_neumann: rows.iter().map(|r| r.0).collect(),
        distances_to_dirichlet: rows.iter().map(|r| r.1).collect(),
        trace_defects: rows.iter().map(|r| r.2).collect(),
        manifest: SweepManifest {
            params: *params,
            profile: g.to_string(),
            cells: opts.cells,
            cfl: opts.cfl,
            snapshots: opts.snapshots,
            swept: make(1.0).name(),
            low_limit: low.name(),
            high_limit: high.name(),
            grade,
        },
    })
}

/// Robin solves over `kappa_grid` against one Neumann and one Dirichlet
/// reference on the same grid.
pub fn kappa_sweep(
    g: &Profile,
    params: &ModelParams,
    kappa_grid: &[f64],
    opts: &SolveOptions,
) -> Result<SweepResult> {
    sweep_with(
        g,
        params,
        kappa_grid,
        opts,
        |kappa| BoundaryKind::Robin { kappa },
        BoundaryKind::Neumann,
        BoundaryKind::Dirichlet,
        |f| dirichlet_trace_defect(f, TraceSource::Recorded),
        "theorem",
    )
}

/// Slow-bond ring solves over `kappa_grid` against the decoupled ring
/// (Neumann on `[0,1]`) and the plain periodic ring.
pub fn slow_bond_sweep(
    g: &Profile,
    params: &ModelParams,
    kappa_grid: &[f64],
    opts: &SolveOptions,
) -> Result<SweepResult> {
    sweep_with(
        g,
        params,
        kappa_grid,
        opts,
        |kappa| BoundaryKind::PeriodicSlowBond { kappa },
        BoundaryKind::Neumann,
        BoundaryKind::Periodic,
        interface_jump,
        "conjecture",
    )
}

/// PDE limit selected by the boundary exponent.
pub fn regime(theta: f64, kappa: f64) -> BoundaryKind {
    if theta < 1.0 {
        BoundaryKind::Dirichlet
    } else if theta == 1.0 {
        BoundaryKind::Robin { kappa }
    } else {
        BoundaryKind::Neumann
    }
}

/// Grids of a particle-vs-PDE comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HydroGrid {
    /// Cells the lattice is binned onto.
    pub cells: usize,
    /// Resolution of the PDE reference.
    pub pde_cells: usize,
    /// Number of sample intervals on `[0, T]`.
    pub samples: usize,
    pub cfl: f64,
}

impl Default for HydroGrid {
    fn default() -> Self {
        HydroGrid {
            cells: 10,
            pde_cells: 400,
            samples: 10,
            cfl: 0.4,
        }
    }
}

/// Ensemble against reference at one lattice size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HydroLevel {
    pub n: usize,
    pub trajectories: usize,
    /// `means[k * cells + b]`: mean occupation of bin `b` at sample `k`.
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// Reference averaged over the same sites as each bin.
    pub reference: Vec<f64>,
    /// `max_{k,b} |mean - reference|`.
    pub sup_error: f64,
    pub max_stderr: f64,
    /// `E|N_T - N_0| / (n T)`: particle exchange with the reservoirs.
    pub particle_drift: f64,
    /// Mean occupations of the two end sites at the final time, with errors.
    pub end_means: [f64; 2],
    pub end_stderrs: [f64; 2],
    pub events: u64,
}

impl HydroLevel {
    /// `sup_error <= 3 (max_stderr + 2/n)`.
    pub fn within_budget(&self) -> bool {
        self.sup_error <= 3.0 * (self.max_stderr + 2.0 / self.n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HydroResult {
    pub n_grid: Vec<usize>,
    pub theta: f64,
    pub topology: &'static str,
    pub reference_kind: BoundaryKind,
    pub grid: HydroGrid,
    pub sample_times: Vec<f64>,
    pub seed: u64,
    pub levels: Vec<HydroLevel>,
    #[serde(skip)]
    pub pde_reference: SpaceTimeField,
    pub grade: &'static str,
}

impl HydroResult {
    pub fn sup_errors(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.sup_error).collect()
    }
}

/// Value at `u` of row `k`, linear between the nodes `0`, cell centers, `1`
/// (recorded traces at the ends).
pub fn interpolate(field: &SpaceTimeField, k: usize, u: f64) -> f64 {
    let n = field.cells();
    let row = field.row(k);
    let c0 = center(0, n);
    let cl = center(n - 1, n);
    if u <= c0 {
        let w = u / c0;
        return field.left_trace(k) * (1.0 - w) + row[0] * w;
    }
    if u >= cl {
        let w = (u - cl) / (1.0 - cl);
        return row[n - 1] * (1.0 - w) + field.right_trace(k) * w;
    }
    let s = u * n as f64 - 0.5;
    let i = (s.floor() as usize).min(n - 2);
    let w = s - i as f64;
    row[i] * (1.0 - w) + row[i + 1] * w
}

fn check_n_grid(n_grid: &[usize], trajectories: usize) -> Result<()> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("n grid must be nonempty and increasing".into()));
    }
    if trajectories < 30 {
        return Err(Error::Precondition(format!(
            "{trajectories} trajectories: need at least 30 for standard errors"
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn compare(
    g: &Profile,
    params: &ModelParams,
    topology: Topology,
    bc: &dyn BoundaryCondition,
    n_grid: &[usize],
    trajectories: usize,
    seed: u64,
    grid: &HydroGrid,
    theta: f64,
    grade: &'static str,
) -> Result<HydroResult> {
    check_n_grid(n_grid, trajectories)?;
    let opts = SolveOptions::new(grid.pde_cells, grid.cfl).with_snapshots(grid.samples);
    let reference = solve(g, params, bc, &opts)?;
    let times = uniform_times(params.t_final, grid.samples);
    let cells = grid.cells;
    let mut levels = Vec::with_capacity(n_grid.len());
    for (idx, &n) in n_grid.iter().enumerate() {
        let p = ModelParams {
            n,
            theta,
            ..*params
        };
        p.validate()?;
        let first = topology.first_site();
        let last = first + topology.site_count(n) as i64 - 1;
        let binning = Binning::cells(topology, n, cells).with_sites(topology, n, &[first, last])?;
        let stats = run_ensemble(
            g,
            &p,
            topology,
            &times,
            &binning,
            seed,
            idx as u64 * STREAM_BLOCK,
            trajectories,
        )?;
        levels.push(level(&stats, &reference, topology, n, cells, params.t_final));
    }
    Ok(HydroResult {
        n_grid: n_grid.to_vec(),
        theta,
        topology: topology.name(),
        reference_kind: bc.kind(),
        grid: *grid,
        sample_times: times,
        seed,
        levels,
        pde_reference: reference,
        grade,
    })
}

fn level(
    stats: &EnsembleStats,
    reference: &SpaceTimeField,
    topology: Topology,
    n: usize,
    cells: usize,
    t_final: f64,
) -> HydroLevel {
    let k_len = stats.times.len();
    let first = topology.first_site();
    let sites = topology.site_count(n);
    let mut means = Vec::with_capacity(k_len * cells);
    let mut stderrs = Vec::with_capacity(k_len * cells);
    let mut refs = Vec::with_capacity(k_len * cells);
    for k in 0..k_len {
        let mut acc = vec![0.0; cells];
        let mut cnt = vec![0usize; cells];
        for i in 0..sites {
            let x = (first + i as i64) as usize;
            let b = ((x * cells) / n).min(cells - 1);
            acc[b] += interpolate(reference, k, x as f64 / n as f64);
            cnt[b] += 1;
        }
        for b in 0..cells {
            means.push(stats.mean(k, b));
            stderrs.push(stats.stderr(k, b));
            refs.push(acc[b] / cnt[b] as f64);
        }
    }
    let sup_error = means
        .iter()
        .zip(&refs)
        .map(|(a, r)| (a - r).abs())
        .fold(0.0, f64::max);
    let max_stderr = stderrs.iter().copied().fold(0.0, f64::max);
    let last = k_len - 1;
    let drift = stats.particle_change[last] as f64 / stats.samples as f64 / (n as f64 * t_final);
    HydroLevel {
        n,
        trajectories: stats.samples as usize,
        means,
        stderrs,
        reference: refs,
        sup_error,
        max_stderr,
        particle_drift: drift,
        end_means: [stats.mean(last, cells), stats.mean(last, cells + 1)],
        end_stderrs: [stats.stderr(last, cells), stats.stderr(last, cells + 1)],
        events: stats.events,
    }
}

/// Interval ensembles at boundary exponent `theta` against the PDE of that
/// regime (`theta < 1` Dirichlet, `theta = 1` Robin, `theta > 1` Neumann).
pub fn hydro_compare(
    g: &Profile,
    params: &ModelParams,
    theta: f64,
    n_grid: &[usize],
    trajectories: usize,
    seed: u64,
    grid: &HydroGrid,
) -> Result<HydroResult> {
    let bc = regime(theta, params.kappa).strategy();
    compare(
        g,
        params,
        Topology::Interval,
        bc.as_ref(),
        n_grid,
        trajectories,
        seed,
        grid,
        theta,
        "theorem",
    )
}

/// Torus ensembles at `theta = 1` against the slow-bond ring solve.
pub fn slow_bond_hydro(
    g: &Profile,
    params: &ModelParams,
    n_grid: &[usize],
    trajectories: usize,
    seed: u64,
    grid: &HydroGrid,
) -> Result<HydroResult> {
    let bc = BoundaryKind::PeriodicSlowBond {
        kappa: params.kappa,
    }
    .strategy();
    compare(
        g,
        params,
        Topology::TorusSlowBond,
        bc.as_ref(),
        n_grid,
        trajectories,
        seed,
        grid,
        1.0,
        "conjecture",
    )
}

/// The torus pipeline: kappa sweep of the ring PDE plus torus ensembles.
#[allow(clippy::too_many_arguments)]
pub fn slow_bond_compare(
    g: &Profile,
    params: &ModelParams,
    kappa_grid: &[f64],
    opts: &SolveOptions,
    n_grid: &[usize],
    trajectories: usize,
    seed: u64,
    grid: &HydroGrid,
) -> Result<(SweepResult, HydroResult)> {
    let sweep = slow_bond_sweep(g, params, kappa_grid, opts)?;
    let hydro = slow_bond_hydro(g, params, n_grid, trajectories, seed, grid)?;
    Ok((sweep, hydro))
}
