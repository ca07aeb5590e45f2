//! Event decomposition of the generator `n^2 [L_P + n^(a-2) L_S + L_B]`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::lattice::{pmm_rate_unchecked, Configuration, Topology};

/// A single transition of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// Exchange of the occupations at `x` and `x+1` (wrapping on the torus).
    Exchange(i64),
    /// Reservoir flip at boundary site `z`.
    Flip(i64),
}

/// Rates of every possible transition out of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTable {
    /// Rate of bond `first_bond + b` at index `b`.
    pub bond_rates: Vec<f64>,
    /// Flip rates at the left and right boundary sites (zero on the torus).
    pub boundary_rates: [f64; 2],
    pub total: f64,
    pub first_bond: i64,
    pub topology: Topology,
}

/// Constants shared by every rate evaluation of one parameter set.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RateScales {
    n2: f64,
    ssep: f64,
    /// `kappa / n^theta`.
    slow: f64,
}

impl RateScales {
    pub(crate) fn of(eta: &Configuration) -> Self {
        let p = eta.params();
        let n = p.n as f64;
        RateScales {
            n2: n * n,
            ssep: p.ssep_weight(),
            slow: p.boundary_intensity(),
        }
    }
}

/// Number of bonds and label of the first one.
pub(crate) fn bond_layout(topology: Topology, n: usize) -> (usize, i64) {
    match topology {
        Topology::Interval => (n - 2, 1),
        Topology::TorusSlowBond => (n, 0),
    }
}

/// `n^2 xi_x (c_{x,x+1} + n^(a-2))` if the bond is active, else 0.
#[inline]
pub(crate) fn bond_rate(eta: &Configuration, x: i64, s: RateScales) -> f64 {
    if eta.site(x) == eta.site(x + 1) {
        return 0.0;
    }
    let c = pmm_rate_unchecked(eta, x);
    let mut r = s.n2 * (c + s.ssep);
    if eta.topology() == Topology::TorusSlowBond && x == eta.n() as i64 - 1 {
        r *= s.slow;
    }
    r
}

/// `n^2 (kappa/n^theta) [gamma (1-eta) + (1-gamma) eta]` at a boundary site.
#[inline]
pub(crate) fn flip_rate(eta: &Configuration, left: bool, s: RateScales) -> f64 {
    if eta.topology() != Topology::Interval {
        return 0.0;
    }
    let p = eta.params();
    let (z, gamma) = if left {
        (1, p.alpha)
    } else {
        (p.n as i64 - 1, p.beta)
    };
    let e = eta.site(z);
    s.n2 * s.slow * (gamma * (1.0 - e) + (1.0 - gamma) * e)
}

/// Rates of all transitions out of `eta`.
pub fn build_event_table(eta: &Configuration) -> EventTable {
    let s = RateScales::of(eta);
    let (bonds, first) = bond_layout(eta.topology(), eta.n());
    let bond_rates: Vec<f64> = (0..bonds)
        .map(|b| bond_rate(eta, first + b as i64, s))
        .collect();
    let boundary_rates = [flip_rate(eta, true, s), flip_rate(eta, false, s)];
    let total = bond_rates.iter().sum::<f64>() + boundary_rates[0] + boundary_rates[1];
    EventTable {
        bond_rates,
        boundary_rates,
        total,
        first_bond: first,
        topology: eta.topology(),
    }
}

impl EventTable {
    /// Event at `target in [0, total)` by a linear scan.
    pub fn select(&self, target: f64) -> Event {
        let mut acc = 0.0;
        let mut last_active = None;
        for (b, &r) in self.bond_rates.iter().enumerate() {
            if r > 0.0 {
                acc += r;
                last_active = Some(Event::Exchange(self.first_bond + b as i64));
                if target < acc {
                    return last_active.unwrap();
                }
            }
        }
        let n = self.bond_rates.len() as i64 + 2;
        for (i, &r) in self.boundary_rates.iter().enumerate() {
            if r > 0.0 {
                acc += r;
                last_active = Some(Event::Flip(if i == 0 { 1 } else { n - 1 }));
                if target < acc {
                    return last_active.unwrap();
                }
            }
        }
        // Roundoff pushed target past the running sum.
        last_active.expect("select called on an empty table")
    }
}

/// Applies an event in place.
pub fn apply(eta: &mut Configuration, event: Event) -> Result<()> {
    match event {
        Event::Exchange(x) => eta.exchange(x),
        Event::Flip(z) => eta.flip(z),
    }
}

/// One Gillespie step: exponential holding time with rate `table.total`, then
/// an event chosen proportionally to its rate.
pub fn step<R: Rng + ?Sized>(
    eta: &Configuration,
    table: &EventTable,
    rng: &mut R,
) -> Result<(Configuration, f64)> {
    if !(table.total > 0.0) {
        return Err(Error::Absorbing);
    }
    let e: f64 = Exp1.sample(rng);
    let hold = e / table.total;
    let target = rng.random::<f64>() * table.total;
    let mut next = eta.clone();
    apply(&mut next, table.select(target))?;
    Ok((next, hold))
}
