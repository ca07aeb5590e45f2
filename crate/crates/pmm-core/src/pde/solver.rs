//! Explicit conservative finite-volume scheme for `d_t rho = Delta(rho^m)`.
//!
//! Cell `i` holds the average on `[(i-1)/N, i/N]`; interior faces carry
//! `F_{i+1/2} = (rho_{i+1}^m - rho_i^m) / du` and the boundary faces come from the
//! [`BoundaryCondition`] strategy. Every step is
//! `rho_i += dt/du (F_{i+1/2} - F_{i-1/2})`.

use super::bc::{BoundaryCondition, Reservoirs};
use super::field::{GridFunction, SolveLog, SpaceTimeField};
use super::profile::Profile;
use crate::error::{invalid, Error, Result};
use crate::params::ModelParams;

/// Excursion outside `[0,1]` tolerated before a step is declared unstable.
pub const RANGE_TOL: f64 = 1e-12;

/// Default number of stored time intervals.
pub const DEFAULT_SNAPSHOTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub cells: usize,
    pub cfl: f64,
    /// Number of stored intervals; the field keeps `snapshots + 1` times.
    pub snapshots: usize,
}

impl SolveOptions {
    pub fn new(cells: usize, cfl: f64) -> Self {
        SolveOptions {
            cells,
            cfl,
            snapshots: DEFAULT_SNAPSHOTS,
        }
    }

    pub fn with_snapshots(mut self, snapshots: usize) -> Self {
        self.snapshots = snapshots;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.cells < 8 {
            return Err(invalid("N", self.cells, "[8, inf)"));
        }
        if self.snapshots < 1 {
            return Err(invalid("snapshots", self.snapshots, "[1, inf)"));
        }
        if !(self.cfl > 0.0) {
            return Err(invalid("cfl", self.cfl, "(0, 1)"));
        }
        if self.cfl >= 1.0 {
            return Err(Error::Cfl(self.cfl));
        }
        Ok(())
    }
}

/// Largest stable `dt / du^2` for the given condition.
///
/// The interior diagonal weight is `2m` (slope of `rho^m` is at most `m` on
/// `[0,1]`); a boundary cell sees `m` from its interior face plus the
/// condition's own stiffness.
pub fn stable_ratio(bc: &dyn BoundaryCondition, m: u32, cfl: f64, du: f64) -> f64 {
    let mf = m as f64;
    cfl / (2.0 * mf).max(mf + bc.stiffness(m, du))
}

/// Solves from the profile `g` sampled at cell centers.
pub fn solve(
    g: &Profile,
    params: &ModelParams,
    bc: &dyn BoundaryCondition,
    opts: &SolveOptions,
) -> Result<SpaceTimeField> {
    g.validate()?;
    opts.validate()?;
    solve_from(&g.cell_values(opts.cells), params, bc, opts)
}

/// Solves from explicit initial cell values.
pub fn solve_from(
    init: &[f64],
    params: &ModelParams,
    bc: &dyn BoundaryCondition,
    opts: &SolveOptions,
) -> Result<SpaceTimeField> {
    opts.validate()?;
    params.validate()?;
    let n = opts.cells;
    if init.len() != n {
        return Err(Error::GridMismatch(format!(
            "{} initial values for {n} cells",
            init.len()
        )));
    }
    if let Some((i, &v)) = init
        .iter()
        .enumerate()
        .find(|(_, &v)| !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&v))
    {
        return Err(Error::Stability {
            time: 0.0,
            cell: i + 1,
            value: v,
        });
    }

    let res = Reservoirs {
        alpha: params.alpha,
        beta: params.beta,
        m: params.m,
    };
    let m = params.m as i32;
    let du = 1.0 / n as f64;
    let t_final = params.t_final;
    let dt_max = stable_ratio(bc, params.m, opts.cfl, du) * du * du;
    let per_snapshot = (t_final / (opts.snapshots as f64 * dt_max)).ceil().max(1.0) as usize;
    let steps = per_snapshot * opts.snapshots;
    let dt = t_final / steps as f64;
    let lam = dt / du;

    let mut rho = init.to_vec();
    let mut psi = vec![0.0; n];
    let mut flux = vec![0.0; n + 1];

    let cap = (opts.snapshots + 1) * n;
    let mut values = Vec::with_capacity(cap);
    let mut times = Vec::with_capacity(opts.snapshots + 1);
    let mut left = Vec::with_capacity(opts.snapshots + 1);
    let mut right = Vec::with_capacity(opts.snapshots + 1);
    let mut inflow_log = Vec::with_capacity(opts.snapshots + 1);

    let mut record = |k: usize, rho: &[f64], inflow: f64| {
        times.push(t_final * k as f64 / opts.snapshots as f64);
        values.extend_from_slice(rho);
        let (l, r) = bc.traces(rho, res);
        left.push(l);
        right.push(r);
        inflow_log.push(inflow);
    };
    record(0, &rho, 0.0);

    // Compensated sum of the boundary inflow so the mass balance holds to roundoff.
    let mut inflow = 0.0f64;
    let mut carry = 0.0f64;
    for step in 1..=steps {
        for (p, &r) in psi.iter_mut().zip(&rho) {
            *p = r.powi(m);
        }
        for i in 1..n {
            flux[i] = (psi[i] - psi[i - 1]) / du;
        }
        let (fl, fr) = bc.fluxes(&rho, &psi, du, res);
        flux[0] = fl;
        flux[n] = fr;

        let y = dt * (fr - fl) - carry;
        let t = inflow + y;
        carry = (t - inflow) - y;
        inflow = t;

        for i in 0..n {
            let v = rho[i] + lam * (flux[i + 1] - flux[i]);
            if !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&v) || !v.is_finite() {
                return Err(Error::Stability {
                    time: step as f64 * dt,
                    cell: i + 1,
                    value: v,
                });
            }
            rho[i] = v;
        }
        if step % per_snapshot == 0 {
            record(step / per_snapshot, &rho, inflow);
        }
    }

    let data = GridFunction::new(n, times, values, left, right)?;
    Ok(SpaceTimeField {
        data,
        bc: bc.kind(),
        m: params.m,
        alpha: params.alpha,
        beta: params.beta,
        log: Some(SolveLog {
            dt,
            steps,
            inflow: inflow_log,
        }),
    })
}

/// `max_k |mass_k - mass_0 - inflow_k|`: the `G = 1` identity of a solver run.
pub fn mass_balance_defect(field: &SpaceTimeField) -> Result<f64> {
    let log = field
        .log
        .as_ref()
        .ok_or_else(|| Error::Precondition("field has no solver log".into()))?;
    let masses = field.data.masses();
    Ok(masses
        .iter()
        .zip(&log.inflow)
        .map(|(mk, ik)| (mk - masses[0] - ik).abs())
        .fold(0.0, f64::max))
}

/// `max_k |mass_k - mass_0|`.
pub fn mass_drift(field: &SpaceTimeField) -> f64 {
    let masses = field.data.masses();
    masses
        .iter()
        .map(|mk| (mk - masses[0]).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::bc::{BoundaryKind, Dirichlet, Neumann, Periodic, PeriodicSlowBond, Robin};

    fn params(m: u32, alpha: f64, beta: f64, t: f64) -> ModelParams {
        ModelParams {
            m,
            alpha,
            beta,
            t_final: t,
            kappa: 1.0,
            ..ModelParams::default()
        }
    }

    #[test]
    fn constant_is_neumann_fixed_point() {
        let p = params(2, 0.2, 0.8, 0.1);
        let f = solve(
            &Profile::Constant(0.37),
            &p,
            &Neumann,
            &SolveOptions::new(20, 0.4),
        )
        .unwrap();
        assert!(f.data.values.iter().all(|&v| v == 0.37));
        assert_eq!(f.bc, BoundaryKind::Neumann);
    }

    #[test]
    fn matching_constant_is_robin_fixed_point() {
        for kappa in [0.01, 1.0, 100.0] {
            let p = params(3, 0.45, 0.45, 0.05);
            let f = solve(
                &Profile::Constant(0.45),
                &p,
                &Robin { kappa },
                &SolveOptions::new(30, 0.5),
            )
            .unwrap();
            assert!(f.data.values.iter().all(|&v| (v - 0.45).abs() < 1e-15));
        }
    }

    #[test]
    fn cfl_bounds() {
        let p = params(2, 0.2, 0.8, 0.01);
        let g = Profile::Constant(0.5);
        let err = solve(&g, &p, &Neumann, &SolveOptions::new(20, 2.0)).unwrap_err();
        assert!(err.is_numerical());
        let err = solve(&g, &p, &Neumann, &SolveOptions::new(20, 0.0)).unwrap_err();
        assert!(!err.is_numerical());
        assert!(solve(&g, &p, &Neumann, &SolveOptions::new(4, 0.4)).is_err());
    }

    #[test]
    fn stiff_boundaries_shrink_the_step() {
        let du = 0.01;
        assert_eq!(stable_ratio(&Neumann, 2, 0.4, du), 0.1);
        assert!((stable_ratio(&Dirichlet, 2, 0.6, du) - 0.1).abs() < 1e-15);
        assert_eq!(stable_ratio(&Robin { kappa: 1.0 }, 2, 0.4, du), 0.1);
        assert!(stable_ratio(&Robin { kappa: 1e4 }, 2, 0.4, du) < 0.1);
        assert!((stable_ratio(&Periodic, 3, 0.6, du) - 0.1).abs() < 1e-15);
        assert!(stable_ratio(&PeriodicSlowBond { kappa: 1e5 }, 1, 0.4, du) < 0.2);
    }

    #[test]
    fn neumann_conserves_mass_and_robin_balances() {
        let g = Profile::Cosine {
            mean: 0.5,
            amp: 0.4,
            j: 1,
        };
        for m in 1..=3 {
            let p = params(m, 0.2, 0.8, 0.2);
            let f = solve(&g, &p, &Neumann, &SolveOptions::new(50, 0.9)).unwrap();
            assert!(mass_drift(&f) < 1e-12);
            let f = solve(&g, &p, &Robin { kappa: 2.0 }, &SolveOptions::new(50, 0.9)).unwrap();
            assert!(mass_balance_defect(&f).unwrap() < 1e-12);
            let (lo, hi) = f.data.min_max();
            assert!(lo >= -RANGE_TOL && hi <= 1.0 + RANGE_TOL);
        }
    }

    #[test]
    fn dirichlet_traces_are_reservoirs() {
        let p = params(2, 0.2, 0.8, 0.05);
        let f = solve(
            &Profile::Constant(0.5),
            &p,
            &Dirichlet,
            &SolveOptions::new(20, 0.4).with_snapshots(5),
        )
        .unwrap();
        assert!(f.data.left.iter().all(|&v| v == 0.2));
        assert!(f.data.right.iter().all(|&v| v == 0.8));
        assert_eq!(f.times().len(), 6);
        assert_eq!(*f.times().last().unwrap(), 0.05);
    }

    #[test]
    fn torus_mass_is_conserved() {
        let g = Profile::Step {
            at: 0.5,
            left: 0.9,
            right: 0.1,
        };
        let p = params(2, 0.2, 0.8, 0.2);
        for bc in [
            Box::new(PeriodicSlowBond { kappa: 3.0 }) as Box<dyn BoundaryCondition>,
            Box::new(Periodic),
        ] {
            let f = solve(&g, &p, bc.as_ref(), &SolveOptions::new(40, 0.5)).unwrap();
            assert!(mass_drift(&f) < 1e-12);
        }
    }
}
