//! Trajectory simulation in macroscopic time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::events::{apply, bond_layout, bond_rate, flip_rate, Event, RateScales};
use super::tree::RateTree;
use crate::error::{Error, Result};
use crate::lattice::{Configuration, Topology};
use crate::params::ModelParams;
use crate::pde::Profile;

/// Random stream of one trajectory: ChaCha8 keyed by the master seed, with the
/// trajectory index as the stream number. Streams never overlap, so results
/// do not depend on how trajectories are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

impl Seed {
    pub fn new(master: u64, stream: u64) -> Self {
        Seed { master, stream }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

impl From<u64> for Seed {
    fn from(master: u64) -> Self {
        Seed::new(master, 0)
    }
}

/// Product Bernoulli configuration with marginals `g(x/n)`.
pub fn sample_initial<R: Rng + ?Sized>(
    g: &Profile,
    params: ModelParams,
    topology: Topology,
    rng: &mut R,
) -> Configuration {
    let n = params.n as f64;
    let first = topology.first_site();
    let occ = (0..topology.site_count(params.n))
        .map(|i| {
            let u = (first + i as i64) as f64 / n;
            (rng.random::<f64>() < g.eval(u)) as u8
        })
        .collect();
    Configuration::new(occ, params, topology).expect("sized by topology")
}

/// Incremental simulator. Rates live in a sum tree; after each event only the
/// bonds within distance `m + 1` of the changed sites are recomputed.
#[derive(Debug, Clone)]
pub struct Simulator {
    eta: Configuration,
    tree: RateTree,
    scales: RateScales,
    bonds: usize,
    first_bond: i64,
    time: f64,
    rng: ChaCha8Rng,
    injections: u64,
    removals: u64,
    events: u64,
}

impl Simulator {
    pub fn new(eta: Configuration, rng: ChaCha8Rng) -> Self {
        let scales = RateScales::of(&eta);
        let (bonds, first_bond) = bond_layout(eta.topology(), eta.n());
        let mut rates: Vec<f64> = (0..bonds)
            .map(|b| bond_rate(&eta, first_bond + b as i64, scales))
            .collect();
        if eta.topology() == Topology::Interval {
            rates.push(flip_rate(&eta, true, scales));
            rates.push(flip_rate(&eta, false, scales));
        }
        Simulator {
            tree: RateTree::new(&rates),
            eta,
            scales,
            bonds,
            first_bond,
            time: 0.0,
            rng,
            injections: 0,
            removals: 0,
            events: 0,
        }
    }

    pub fn configuration(&self) -> &Configuration {
        &self.eta
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn injections(&self) -> u64 {
        self.injections
    }

    pub fn removals(&self) -> u64 {
        self.removals
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    fn event_of(&self, leaf: usize) -> Event {
        if leaf < self.bonds {
            Event::Exchange(self.first_bond + leaf as i64)
        } else if leaf == self.bonds {
            Event::Flip(1)
        } else {
            Event::Flip(self.eta.n() as i64 - 1)
        }
    }

    fn refresh_bonds(&mut self, lo: i64, hi: i64) {
        let n = self.eta.n() as i64;
        match self.eta.topology() {
            Topology::Interval => {
                for x in lo.max(1)..=hi.min(n - 2) {
                    let r = bond_rate(&self.eta, x, self.scales);
                    self.tree.set((x - 1) as usize, r);
                }
                let l = flip_rate(&self.eta, true, self.scales);
                let r = flip_rate(&self.eta, false, self.scales);
                self.tree.set(self.bonds, l);
                self.tree.set(self.bonds + 1, r);
            }
            Topology::TorusSlowBond => {
                let span = (hi - lo + 1).min(n);
                for d in 0..span {
                    let x = (lo + d).rem_euclid(n);
                    let r = bond_rate(&self.eta, x, self.scales);
                    self.tree.set(x as usize, r);
                }
            }
        }
    }

    fn fire(&mut self, event: Event) {
        let m = self.eta.params().m as i64;
        match event {
            Event::Exchange(x) => {
                apply(&mut self.eta, event).expect("event from own table");
                self.refresh_bonds(x - m, x + m);
            }
            Event::Flip(z) => {
                apply(&mut self.eta, event).expect("event from own table");
                if self.eta.site(z) == 1.0 {
                    self.injections += 1;
                } else {
                    self.removals += 1;
                }
                self.refresh_bonds(z - m, z + m - 1);
            }
        }
        self.events += 1;
    }

    /// Runs the chain up to macroscopic time `t`.
    ///
    /// A holding time that would overshoot `t` is discarded and the clock set
    /// to `t`; by memorylessness this leaves the law of the path unchanged.
    /// A frozen torus configuration simply stays put.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        loop {
            let total = self.tree.total();
            if !(total > 0.0) {
                if self.eta.topology() == Topology::Interval {
                    return Err(Error::Absorbing);
                }
                self.time = self.time.max(t);
                return Ok(());
            }
            let e: f64 = Exp1.sample(&mut self.rng);
            let next = self.time + e / total;
            if next > t {
                self.time = t;
                return Ok(());
            }
            self.time = next;
            let target = self.rng.random::<f64>() * total;
            let leaf = self.tree.find(target);
            let ev = self.event_of(leaf);
            self.fire(ev);
        }
    }
}

/// Snapshots of one realization at prescribed times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub sample_times: Vec<f64>,
    pub snapshots: Vec<Configuration>,
    pub seed: Seed,
    pub params: ModelParams,
    pub topology: Topology,
    /// Cumulative reservoir injections and removals at each sample time.
    pub injections: Vec<u64>,
    pub removals: Vec<u64>,
    pub events: u64,
}

pub(crate) fn check_sample_times(times: &[f64], t_final: f64) -> Result<()> {
    if times.first() != Some(&0.0) {
        return Err(Error::Precondition("sample times must start at 0".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("sample times must increase".into()));
    }
    if *times.last().unwrap() > t_final * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "sample times exceed T = {t_final}"
        )));
    }
    Ok(())
}

/// Simulates one trajectory from a product Bernoulli initial state.
pub fn simulate(
    g: &Profile,
    params: &ModelParams,
    topology: Topology,
    sample_times: &[f64],
    seed: impl Into<Seed>,
) -> Result<Trajectory> {
    params.validate()?;
    g.validate()?;
    check_sample_times(sample_times, params.t_final)?;
    let seed = seed.into();
    let mut rng = seed.rng();
    let eta = sample_initial(g, *params, topology, &mut rng);
    let mut sim = Simulator::new(eta, rng);
    let mut snapshots = Vec::with_capacity(sample_times.len());
    let mut injections = Vec::with_capacity(sample_times.len());
    let mut removals = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        sim.advance_to(t)?;
        snapshots.push(sim.configuration().clone());
        injections.push(sim.injections());
        removals.push(sim.removals());
    }
    Ok(Trajectory {
        sample_times: sample_times.to_vec(),
        snapshots,
        seed,
        params: *params,
        topology,
        injections,
        removals,
        events: sim.events(),
    })
}
