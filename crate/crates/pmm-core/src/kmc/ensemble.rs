//! Ensembles of independent trajectories.
//!
//! Per-trajectory data is reduced to integer counts, so merging is exact and
//! the result does not depend on trajectory order or thread scheduling.

use rayon::prelude::*;
use serde::Serialize;

use super::sim::{check_sample_times, sample_initial, Seed, Simulator};
use crate::error::{Error, Result};
use crate::lattice::{Configuration, Topology};
use crate::params::ModelParams;
use crate::pde::Profile;

/// Assignment of lattice sites to bins (cells of a macroscopic grid).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binning {
    bins: usize,
    site_bin: Vec<usize>,
    /// Extra singleton bins `(site index, bin)` tracked on top of the partition.
    extra: Vec<(usize, usize)>,
    sizes: Vec<u64>,
}

impl Binning {
    /// One bin per site.
    pub fn sites(topology: Topology, n: usize) -> Self {
        let len = topology.site_count(n);
        Binning {
            bins: len,
            site_bin: (0..len).collect(),
            extra: Vec::new(),
            sizes: vec![1; len],
        }
    }

    /// Site `x` goes to cell `floor(x N / n)` of a grid with `cells` cells on `[0,1]`.
    pub fn cells(topology: Topology, n: usize, cells: usize) -> Self {
        let first = topology.first_site();
        let site_bin: Vec<usize> = (0..topology.site_count(n))
            .map(|i| {
                let x = (first + i as i64) as usize;
                ((x * cells) / n).min(cells - 1)
            })
            .collect();
        let mut sizes = vec![0u64; cells];
        for &b in &site_bin {
            sizes[b] += 1;
        }
        Binning {
            bins: cells,
            site_bin,
            extra: Vec::new(),
            sizes,
        }
    }

    /// Appends one singleton bin per listed site (numbered after the existing bins).
    pub fn with_sites(mut self, topology: Topology, n: usize, sites: &[i64]) -> Result<Self> {
        let first = topology.first_site();
        let len = topology.site_count(n) as i64;
        for &x in sites {
            let i = x - first;
            if i < 0 || i >= len {
                return Err(Error::SiteOutOfRange {
                    site: x,
                    range: format!("{first}..={}", first + len - 1),
                });
            }
            self.extra.push((i as usize, self.bins));
            self.sizes.push(1);
            self.bins += 1;
        }
        Ok(self)
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    fn counts(&self, eta: &Configuration, out: &mut [u64]) {
        out.iter_mut().for_each(|c| *c = 0);
        for (i, &v) in eta.occupancy().iter().enumerate() {
            out[self.site_bin[i]] += v as u64;
        }
        let occ = eta.occupancy();
        for &(i, b) in &self.extra {
            out[b] = occ[i] as u64;
        }
    }
}

/// Integer sufficient statistics of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub bins: usize,
    pub sizes: Vec<u64>,
    pub samples: u64,
    /// `sum_j c_j(k, b)` over trajectories, index `k * bins + b`.
    pub sum: Vec<u64>,
    /// `sum_j c_j(k, b)^2`.
    pub sum_sq: Vec<u64>,
    /// `sum_j N_j(k)`: total particles at each time.
    pub particles: Vec<u64>,
    /// `sum_j |N_j(k) - N_j(0)|`.
    pub particle_change: Vec<u64>,
    pub events: u64,
}

impl EnsembleStats {
    pub fn empty(times: &[f64], binning: &Binning) -> Self {
        let len = times.len() * binning.bins;
        EnsembleStats {
            times: times.to_vec(),
            bins: binning.bins,
            sizes: binning.sizes.clone(),
            samples: 0,
            sum: vec![0; len],
            sum_sq: vec![0; len],
            particles: vec![0; times.len()],
            particle_change: vec![0; times.len()],
            events: 0,
        }
    }

    /// Adds another ensemble over the same times and bins.
    pub fn merge(&mut self, other: &EnsembleStats) -> Result<()> {
        if self.times != other.times || self.sizes != other.sizes {
            return Err(Error::GridMismatch("ensembles over different grids".into()));
        }
        self.samples += other.samples;
        self.events += other.events;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        for (a, b) in self.particles.iter_mut().zip(&other.particles) {
            *a += b;
        }
        for (a, b) in self.particle_change.iter_mut().zip(&other.particle_change) {
            *a += b;
        }
        Ok(())
    }

    /// Mean occupation of bin `b` at time index `k` (NaN for empty bins).
    pub fn mean(&self, k: usize, b: usize) -> f64 {
        let size = self.sizes[b] as f64;
        self.sum[k * self.bins + b] as f64 / (self.samples as f64 * size)
    }

    /// Standard error of `mean(k, b)` from the across-trajectory variance of
    /// bin means.
    pub fn stderr(&self, k: usize, b: usize) -> f64 {
        let m = self.samples as f64;
        if m < 2.0 {
            return f64::NAN;
        }
        let size = self.sizes[b] as f64;
        let s1 = self.sum[k * self.bins + b] as f64 / size;
        let s2 = self.sum_sq[k * self.bins + b] as f64 / (size * size);
        let var = ((s2 - s1 * s1 / m) / (m - 1.0)).max(0.0);
        (var / m).sqrt()
    }

    /// Mean particle number at each time.
    pub fn mean_particles(&self) -> Vec<f64> {
        self.particles
            .iter()
            .map(|&p| p as f64 / self.samples as f64)
            .collect()
    }
}

/// Runs trajectory `stream` and returns its contribution to the statistics.
pub fn run_one(
    g: &Profile,
    params: &ModelParams,
    topology: Topology,
    times: &[f64],
    binning: &Binning,
    seed: Seed,
) -> Result<EnsembleStats> {
    let mut rng = seed.rng();
    let eta = sample_initial(g, *params, topology, &mut rng);
    let mut sim = Simulator::new(eta, rng);
    let mut stats = EnsembleStats::empty(times, binning);
    stats.samples = 1;
    let mut counts = vec![0u64; binning.bins];
    let mut n0 = 0u64;
    for (k, &t) in times.iter().enumerate() {
        sim.advance_to(t)?;
        binning.counts(sim.configuration(), &mut counts);
        let row = k * binning.bins;
        for (b, &c) in counts.iter().enumerate() {
            stats.sum[row + b] = c;
            stats.sum_sq[row + b] = c * c;
        }
        let total = sim.configuration().particle_count() as u64;
        if k == 0 {
            n0 = total;
        }
        stats.particles[k] = total;
        stats.particle_change[k] = total.abs_diff(n0);
    }
    stats.events = sim.events();
    Ok(stats)
}

/// Runs `trajectories` independent realizations on streams
/// `stream_offset .. stream_offset + trajectories` of `master_seed`.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble(
    g: &Profile,
    params: &ModelParams,
    topology: Topology,
    times: &[f64],
    binning: &Binning,
    master_seed: u64,
    stream_offset: u64,
    trajectories: usize,
) -> Result<EnsembleStats> {
    params.validate()?;
    g.validate()?;
    check_sample_times(times, params.t_final)?;
    if binning.site_bin.len() != topology.site_count(params.n) {
        return Err(Error::GridMismatch("binning built for another lattice".into()));
    }
    let parts: Vec<EnsembleStats> = (0..trajectories as u64)
        .into_par_iter()
        .map(|j| {
            run_one(
                g,
                params,
                topology,
                times,
                binning,
                Seed::new(master_seed, stream_offset + j),
            )
        })
        .collect::<Result<_>>()?;
    let mut total = EnsembleStats::empty(times, binning);
    for p in &parts {
        total.merge(p)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams {
            m: 2,
            n: 12,
            kappa: 1.0,
            theta: 1.0,
            a: 1.5,
            alpha: 0.3,
            beta: 0.7,
            t_final: 0.05,
        }
    }

    #[test]
    fn binning_layout() {
        let b = Binning::cells(Topology::Interval, 10, 5);
        assert_eq!(b.sizes(), &[1, 2, 2, 2, 2]);
        let b = Binning::cells(Topology::TorusSlowBond, 10, 5);
        assert_eq!(b.sizes(), &[2, 2, 2, 2, 2]);
        assert_eq!(Binning::sites(Topology::Interval, 6).bins(), 5);
        let b = Binning::cells(Topology::Interval, 10, 5)
            .with_sites(Topology::Interval, 10, &[1, 9])
            .unwrap();
        assert_eq!(b.sizes(), &[1, 2, 2, 2, 2, 1, 1]);
        let eta = Configuration::interval(vec![1, 0, 0, 0, 0, 0, 0, 0, 1], ModelParams { n: 10, ..params() }).unwrap();
        let mut c = vec![0; 7];
        b.counts(&eta, &mut c);
        assert_eq!(c, vec![1, 0, 0, 0, 1, 1, 1]);
        assert!(Binning::cells(Topology::Interval, 10, 5).with_sites(Topology::Interval, 10, &[0]).is_err());
    }

    #[test]
    fn merge_is_order_independent() {
        let p = params();
        let times = [0.0, 0.02, 0.05];
        let bins = Binning::cells(Topology::Interval, p.n, 4);
        let g = Profile::Constant(0.5);
        let parts: Vec<EnsembleStats> = (0..6)
            .map(|j| run_one(&g, &p, Topology::Interval, &times, &bins, Seed::new(1, j)).unwrap())
            .collect();
        let mut fwd = EnsembleStats::empty(&times, &bins);
        parts.iter().for_each(|s| fwd.merge(s).unwrap());
        let mut rev = EnsembleStats::empty(&times, &bins);
        parts.iter().rev().for_each(|s| rev.merge(s).unwrap());
        assert_eq!(fwd, rev);
        let all = run_ensemble(&g, &p, Topology::Interval, &times, &bins, 1, 0, 6).unwrap();
        assert_eq!(all, fwd);
        assert_eq!(all.samples, 6);
    }

    #[test]
    fn mean_and_stderr() {
        let times = [0.0];
        let bins = Binning::sites(Topology::Interval, 4);
        let mut s = EnsembleStats::empty(&times, &bins);
        s.samples = 4;
        s.sum = vec![2, 4, 0];
        s.sum_sq = vec![2, 4, 0];
        assert_eq!(s.mean(0, 0), 0.5);
        assert_eq!(s.mean(0, 1), 1.0);
        assert_eq!(s.stderr(0, 1), 0.0);
        // Bernoulli sample {1,1,0,0}: variance 1/3, stderr sqrt(1/12)
        assert!((s.stderr(0, 0) - (1.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }
}
