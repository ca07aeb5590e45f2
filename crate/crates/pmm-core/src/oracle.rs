//! Brute-force generator matrices on small lattices.
//!
//! State `s` encodes a configuration little-endian in site order: on the
//! interval bit `i` is `eta(i+1)`, on the torus bit `i` is `eta(i)`. Entries
//! are built directly from the generator formulas (rate times the change of
//! state), independently of the event tables used by the simulator.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{boundary_rate, pmm_rate, ssep_rate, tau_h, Configuration, Topology};
use crate::params::ModelParams;
use crate::pde::Profile;

/// Largest `n` accepted by [`generator_matrix`].
pub const MAX_N: usize = 14;
/// Largest `n` accepted by the checks built on top of the matrix.
pub const MAX_CHECK_N: usize = 12;

/// Sparse generator: off-diagonal entries per row plus the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    pub params: ModelParams,
    pub topology: Topology,
    pub dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

fn check_size(n: usize, max: usize) -> Result<()> {
    if n > max {
        Err(Error::TooLarge(format!("n = {n} exceeds {max}")))
    } else {
        Ok(())
    }
}

/// Full generator `n^2 [L_P + n^(a-2) L_S + L_B]`.
pub fn generator_matrix(params: &ModelParams, topology: Topology) -> Result<GeneratorMatrix> {
    params.validate()?;
    check_size(params.n, MAX_N)?;
    let n = params.n;
    let sites = topology.site_count(n);
    let dim = 1usize << sites;
    let n2 = (n * n) as f64;
    let ssep = params.ssep_weight();
    let slow = params.boundary_intensity();
    let bonds: Vec<i64> = match topology {
        Topology::Interval => (1..=n as i64 - 2).collect(),
        Topology::TorusSlowBond => (0..n as i64).collect(),
    };
    // bit of site x in the state integer
    let bit = |x: i64| -> usize {
        match topology {
            Topology::Interval => (x - 1) as usize,
            Topology::TorusSlowBond => x.rem_euclid(n as i64) as usize,
        }
    };

    let mut rows = Vec::with_capacity(dim);
    let mut diag = Vec::with_capacity(dim);
    for s in 0..dim {
        let eta = Configuration::from_bits(s as u64, *params, topology);
        let mut row = Vec::new();
        for &x in &bonds {
            let y = x + 1;
            let flow = ssep_rate(&eta, x, y)? + ssep_rate(&eta, y, x)?;
            if flow == 0.0 {
                continue;
            }
            let xi = if topology == Topology::TorusSlowBond && x == n as i64 - 1 {
                slow
            } else {
                1.0
            };
            let rate = n2 * xi * (pmm_rate(&eta, x)? * flow + ssep * flow);
            row.push((s ^ (1 << bit(x)) ^ (1 << bit(y)), rate));
        }
        if topology == Topology::Interval {
            for (z, gamma) in [(1, params.alpha), (n as i64 - 1, params.beta)] {
                let rate = n2 * slow * boundary_rate(&eta, z, gamma)?;
                row.push((s ^ (1 << bit(z)), rate));
            }
        }
        diag.push(-row.iter().map(|e| e.1).sum::<f64>());
        rows.push(row);
    }
    Ok(GeneratorMatrix {
        params: *params,
        topology,
        dim,
        rows,
        diag,
    })
}

impl GeneratorMatrix {
    pub fn entry(&self, s: usize, t: usize) -> f64 {
        if s == t {
            return self.diag[s];
        }
        self.rows[s]
            .iter()
            .filter(|e| e.0 == t)
            .map(|e| e.1)
            .sum()
    }

    pub fn off_diagonal(&self, s: usize) -> &[(usize, f64)] {
        &self.rows[s]
    }

    pub fn diagonal(&self, s: usize) -> f64 {
        self.diag[s]
    }

    /// `max_s sum_t |Q(s,t)|`.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|s| self.diag[s].abs() + self.rows[s].iter().map(|e| e.1.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max_s |sum_t Q(s,t)|`.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.dim)
            .map(|s| (self.diag[s] + self.rows[s].iter().map(|e| e.1).sum::<f64>()).abs())
            .fold(0.0, f64::max)
    }

    /// Row vector times matrix: `(p Q)(t) = sum_s p(s) Q(s,t)`.
    pub fn apply_left(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for s in 0..self.dim {
            out[s] += p[s] * self.diag[s];
            for &(t, q) in &self.rows[s] {
                out[t] += p[s] * q;
            }
        }
        out
    }

    /// Matrix times function: `(Q f)(s) = sum_t Q(s,t) (f(t) - f(s))`.
    pub fn apply_right(&self, f: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|s| self.rows[s].iter().map(|&(t, q)| q * (f[t] - f[s])).sum())
            .collect()
    }

    /// Coordinate listing `row col value`, one nonzero per line.
    pub fn coordinate_dump(&self) -> String {
        let mut out = String::new();
        for s in 0..self.dim {
            let mut entries: Vec<(usize, f64)> = self.rows[s].clone();
            entries.push((s, self.diag[s]));
            entries.sort_by_key(|e| e.0);
            for (t, q) in entries {
                if q != 0.0 {
                    let _ = writeln!(out, "{s} {t} {q:.16e}");
                }
            }
        }
        out
    }

    /// `p <- p exp(dt Q)` by uniformization, in chunks with `Lambda dt <= 30`.
    fn propagate(&self, p: &mut Vec<f64>, dt: f64) {
        if dt <= 0.0 {
            return;
        }
        let lambda = self.diag.iter().fold(0.0f64, |a, d| a.max(-d));
        if lambda == 0.0 {
            return;
        }
        let chunks = (lambda * dt / 30.0).ceil().max(1.0) as usize;
        let x = lambda * dt / chunks as f64;
        for _ in 0..chunks {
            let mut w = (-x).exp();
            let mut v = p.clone();
            let mut acc: Vec<f64> = v.iter().map(|&a| a * w).collect();
            let mut cum = w;
            let mut k = 0usize;
            while cum < 1.0 - 1e-16 && k < 10_000 {
                k += 1;
                let q = self.apply_left(&v);
                for (vi, qi) in v.iter_mut().zip(&q) {
                    *vi += qi / lambda;
                }
                w *= x / k as f64;
                for (a, vi) in acc.iter_mut().zip(&v) {
                    *a += w * vi;
                }
                cum += w;
                if w < 1e-18 && k as f64 > x {
                    break;
                }
            }
            *p = acc;
        }
    }
}

/// Stationarity and reversibility residuals of a Bernoulli product measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantReport {
    /// `max_s |(nu Q)(s)|`.
    pub stationarity: f64,
    /// `max_{s,t} |nu(s) Q(s,t) - nu(t) Q(t,s)|`.
    pub detailed_balance: f64,
    /// `||Q||_inf`, the natural scale of both residuals.
    pub norm: f64,
}

fn bernoulli_product(dim: usize, sites: usize, rho: f64) -> Vec<f64> {
    (0..dim)
        .map(|s| {
            let k = (s as u64).count_ones() as i32;
            rho.powi(k) * (1.0 - rho).powi(sites as i32 - k)
        })
        .collect()
}

/// Checks that `nu_rho` is invariant and reversible when `alpha = beta = rho`.
pub fn invariant_measure_check(params: &ModelParams, topology: Topology) -> Result<InvariantReport> {
    if params.alpha != params.beta {
        return Err(Error::Precondition(format!(
            "alpha = {} differs from beta = {}",
            params.alpha, params.beta
        )));
    }
    check_size(params.n, MAX_CHECK_N)?;
    let q = generator_matrix(params, topology)?;
    let sites = topology.site_count(params.n);
    let nu = bernoulli_product(q.dim, sites, params.alpha);
    let stationarity = q.apply_left(&nu).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut detailed_balance = 0.0f64;
    for s in 0..q.dim {
        for &(t, rate) in q.off_diagonal(s) {
            let back = q.entry(t, s);
            detailed_balance = detailed_balance.max((nu[s] * rate - nu[t] * back).abs());
        }
    }
    Ok(InvariantReport {
        stationarity,
        detailed_balance,
        norm: q.norm_inf(),
    })
}

/// Compares `(Q eta(x))(s)` with `n^2 (tau_{x-1} h + tau_{x+1} h - 2 tau_x h)(s)`
/// (SSEP terms included) over every state and every site `2 <= x <= n-2`.
/// Returns the largest absolute defect.
pub fn laplacian_identity_check(params: &ModelParams) -> Result<f64> {
    check_size(params.n, MAX_CHECK_N)?;
    let n = params.n as i64;
    if n < 4 {
        return Err(Error::Precondition(format!(
            "n = {n} has no site with two bulk bonds"
        )));
    }
    let q = generator_matrix(params, Topology::Interval)?;
    let n2 = (n * n) as f64;
    let mut worst = 0.0f64;
    for x in 2..=n - 2 {
        let f: Vec<f64> = (0..q.dim).map(|s| ((s >> (x - 1)) & 1) as f64).collect();
        let lf = q.apply_right(&f);
        for (s, &lhs) in lf.iter().enumerate() {
            let eta = Configuration::from_bits(s as u64, *params, Topology::Interval);
            let lap = tau_h(&eta, x - 1, true)? + tau_h(&eta, x + 1, true)?
                - 2.0 * tau_h(&eta, x, true)?;
            worst = worst.max((lhs - n2 * lap).abs());
        }
    }
    Ok(worst)
}

/// Expected occupations `E[eta_t(x)]` on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEvolution {
    pub times: Vec<f64>,
    /// `means[k][i]`: site `first_site + i` at `times[k]`.
    pub means: Vec<Vec<f64>>,
    /// Total probability at each time.
    pub mass: Vec<f64>,
}

/// Propagates the product Bernoulli law with marginals `g(x/n)`.
pub fn exact_density_evolution(
    params: &ModelParams,
    topology: Topology,
    g: &Profile,
    t_grid: &[f64],
) -> Result<DensityEvolution> {
    check_size(params.n, MAX_CHECK_N)?;
    g.validate()?;
    if t_grid.iter().any(|&t| t < 0.0) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition("time grid must be nonnegative and sorted".into()));
    }
    let q = generator_matrix(params, topology)?;
    let sites = topology.site_count(params.n);
    let first = topology.first_site();
    let marg: Vec<f64> = (0..sites)
        .map(|i| g.eval((first + i as i64) as f64 / params.n as f64))
        .collect();
    let mut p: Vec<f64> = (0..q.dim)
        .map(|s| {
            marg.iter()
                .enumerate()
                .map(|(i, &r)| if (s >> i) & 1 == 1 { r } else { 1.0 - r })
                .product()
        })
        .collect();
    let mut now = 0.0;
    let mut means = Vec::with_capacity(t_grid.len());
    let mut mass = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        q.propagate(&mut p, t - now);
        now = t;
        let row: Vec<f64> = (0..sites)
            .map(|i| {
                p.iter()
                    .enumerate()
                    .filter(|(s, _)| (s >> i) & 1 == 1)
                    .map(|(_, &w)| w)
                    .sum()
            })
            .collect();
        means.push(row);
        mass.push(p.iter().sum());
    }
    Ok(DensityEvolution {
        times: t_grid.to_vec(),
        means,
        mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: u32, n: usize, kappa: f64, alpha: f64, beta: f64) -> ModelParams {
        ModelParams {
            m,
            n,
            kappa,
            theta: 1.0,
            a: 1.5,
            alpha,
            beta,
            t_final: 1.0,
        }
    }

    #[test]
    fn n3_m1_hand_entries() {
        let p = params(1, 3, 1.0, 0.3, 0.6);
        let q = generator_matrix(&p, Topology::Interval).unwrap();
        assert_eq!(q.dim, 4);
        // (eta1, eta2) = (1,0) is state 1, (0,1) is state 2
        let expect = 9.0 * (1.0 + 3f64.powf(-0.5));
        assert!((q.entry(1, 2) - expect).abs() < 1e-12);
        assert!((q.entry(2, 1) - expect).abs() < 1e-12);
        // removal at site 1 from state 1: n^2 kappa/n (1 - alpha)
        assert!((q.entry(1, 0) - 3.0 * 0.7).abs() < 1e-12);
        // injection at site 2 into state 1
        assert!((q.entry(1, 3) - 3.0 * 0.6).abs() < 1e-12);
        assert_eq!(q.entry(0, 3), 0.0);
        assert!(q.max_row_sum() <= 1e-12 * q.norm_inf());
    }

    #[test]
    fn closed_boundaries_preserve_particle_number() {
        let p = ModelParams {
            theta: 80.0,
            ..params(2, 6, 1.0, 0.3, 0.6)
        };
        let q = generator_matrix(&p, Topology::Interval).unwrap();
        for s in 0..q.dim {
            for &(t, r) in q.off_diagonal(s) {
                if (s.count_ones()) != (t.count_ones()) {
                    assert!(r < 1e-50);
                }
            }
        }
    }

    #[test]
    fn invariant_measure_small_cases() {
        let r = invariant_measure_check(&params(1, 3, 1.0, 0.5, 0.5), Topology::Interval).unwrap();
        assert!(r.stationarity < 1e-12 && r.detailed_balance < 1e-12);
        let r = invariant_measure_check(&params(2, 5, 2.0, 0.3, 0.3), Topology::Interval).unwrap();
        assert!(r.stationarity <= 1e-10 * r.norm);
        assert!(r.detailed_balance <= 1e-10 * r.norm);
        let r = invariant_measure_check(&params(3, 6, 0.5, 0.4, 0.4), Topology::TorusSlowBond).unwrap();
        assert!(r.stationarity <= 1e-10 * r.norm);
        assert!(invariant_measure_check(&params(1, 4, 1.0, 0.3, 0.4), Topology::Interval).is_err());
        assert!(invariant_measure_check(&params(1, 13, 1.0, 0.3, 0.3), Topology::Interval).is_err());
    }

    #[test]
    fn laplacian_identity() {
        for m in 1..=2 {
            let d = laplacian_identity_check(&params(m, 10, 1.0, 0.3, 0.6)).unwrap();
            assert!(d < 1e-10, "m={m} defect {d}");
        }
        assert!(laplacian_identity_check(&params(2, 3, 1.0, 0.3, 0.6)).is_err());
    }

    #[test]
    fn density_evolution_basics() {
        let p = params(2, 6, 2.0, 0.3, 0.3);
        let ev = exact_density_evolution(&p, Topology::Interval, &Profile::Constant(0.3), &[0.0, 0.02, 0.05])
            .unwrap();
        for row in &ev.means {
            for &v in row {
                assert!((v - 0.3).abs() < 1e-12);
            }
        }
        for &m in &ev.mass {
            assert!((m - 1.0).abs() < 1e-10);
        }
        let g = Profile::Linear {
            left: 0.1,
            right: 0.9,
        };
        let p = params(2, 6, 2.0, 0.2, 0.7);
        let ev = exact_density_evolution(&p, Topology::Interval, &g, &[0.0, 0.05, 1.0]).unwrap();
        for (i, &v) in ev.means[0].iter().enumerate() {
            assert!((v - g.eval((i + 1) as f64 / 6.0)).abs() < 1e-14);
        }
        for &m in &ev.mass {
            assert!((m - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn dump_lists_diagonal() {
        let q = generator_matrix(&params(1, 3, 1.0, 0.3, 0.6), Topology::Interval).unwrap();
        let dump = q.coordinate_dump();
        assert!(dump.lines().any(|l| l.starts_with("0 0 -")));
        assert_eq!(dump.lines().count(), 4 + 4 * 2 + 2);
    }
}
