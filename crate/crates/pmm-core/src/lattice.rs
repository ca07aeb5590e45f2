//! Configurations and the microscopic rate and observable formulas.
//!
//! Sites of the interval are `1..=n-1`. Reads outside that range return the
//! reservoir densities (`alpha` for `x <= 0`, `beta` for `x >= n`), so every
//! formula below is a single code path. On the torus sites are `0..n` and
//! indices wrap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Lattice geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    /// Sites `1..=n-1` with reservoirs at both ends.
    Interval,
    /// Sites `0..n` on a ring; bond `(n-1, 0)` is slowed by `kappa / n^theta`.
    TorusSlowBond,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::Interval => "interval",
            Topology::TorusSlowBond => "torus",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "interval" => Some(Topology::Interval),
            "torus" | "torus-slow-bond" => Some(Topology::TorusSlowBond),
            _ => None,
        }
    }

    /// Number of sites for lattice scale `n`.
    pub fn site_count(self, n: usize) -> usize {
        match self {
            Topology::Interval => n - 1,
            Topology::TorusSlowBond => n,
        }
    }

    /// Label of the first site.
    pub fn first_site(self) -> i64 {
        match self {
            Topology::Interval => 1,
            Topology::TorusSlowBond => 0,
        }
    }
}

/// Occupation vector together with the parameters that fix its boundary
/// convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    occ: Vec<u8>,
    params: ModelParams,
    topology: Topology,
}

impl Configuration {
    pub fn new(occ: Vec<u8>, params: ModelParams, topology: Topology) -> Result<Self> {
        let len = topology.site_count(params.n);
        if occ.len() != len {
            return Err(Error::Precondition(format!(
                "configuration has {} sites, expected {len}",
                occ.len()
            )));
        }
        if let Some(v) = occ.iter().find(|&&v| v > 1) {
            return Err(Error::Precondition(format!("occupation {v} is not 0 or 1")));
        }
        Ok(Configuration {
            occ,
            params,
            topology,
        })
    }

    pub fn interval(occ: Vec<u8>, params: ModelParams) -> Result<Self> {
        Self::new(occ, params, Topology::Interval)
    }

    pub fn torus(occ: Vec<u8>, params: ModelParams) -> Result<Self> {
        Self::new(occ, params, Topology::TorusSlowBond)
    }

    pub fn empty(params: ModelParams, topology: Topology) -> Self {
        Configuration {
            occ: vec![0; topology.site_count(params.n)],
            params,
            topology,
        }
    }

    /// Interval configuration from the low bits of `state`: bit `i` is `eta(i+1)`.
    /// On the torus bit `i` is `eta(i)`.
    pub fn from_bits(state: u64, params: ModelParams, topology: Topology) -> Self {
        let len = topology.site_count(params.n);
        let occ = (0..len).map(|i| ((state >> i) & 1) as u8).collect();
        Configuration {
            occ,
            params,
            topology,
        }
    }

    pub fn to_bits(&self) -> u64 {
        self.occ
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &v)| acc | ((v as u64) << i))
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    /// Raw occupations in site order.
    pub fn occupancy(&self) -> &[u8] {
        &self.occ
    }

    pub fn particle_count(&self) -> usize {
        self.occ.iter().map(|&v| v as usize).sum()
    }

    /// Labels of the lattice sites.
    pub fn sites(&self) -> std::ops::Range<i64> {
        let first = self.topology.first_site();
        first..first + self.occ.len() as i64
    }

    #[inline]
    fn index(&self, x: i64) -> Option<usize> {
        match self.topology {
            Topology::Interval => {
                if x >= 1 && x < self.params.n as i64 {
                    Some((x - 1) as usize)
                } else {
                    None
                }
            }
            Topology::TorusSlowBond => Some(x.rem_euclid(self.params.n as i64) as usize),
        }
    }

    /// Total site accessor: reservoir densities outside the interval,
    /// wrapped indices on the torus.
    #[inline]
    pub fn site(&self, x: i64) -> f64 {
        match self.index(x) {
            Some(i) => self.occ[i] as f64,
            None if x <= 0 => self.params.alpha,
            None => self.params.beta,
        }
    }

    /// Occupation of a lattice site.
    pub fn occupied(&self, x: i64) -> Result<bool> {
        self.index(x)
            .map(|i| self.occ[i] == 1)
            .ok_or_else(|| self.out_of_range(x))
    }

    pub fn set(&mut self, x: i64, value: bool) -> Result<()> {
        let i = self.index(x).ok_or_else(|| self.out_of_range(x))?;
        self.occ[i] = value as u8;
        Ok(())
    }

    /// Flips the occupation at `x` (a reservoir event).
    pub fn flip(&mut self, x: i64) -> Result<()> {
        let i = self.index(x).ok_or_else(|| self.out_of_range(x))?;
        self.occ[i] ^= 1;
        Ok(())
    }

    /// Exchanges the occupations of `x` and `x+1` (wrapping on the torus).
    pub fn exchange(&mut self, x: i64) -> Result<()> {
        let i = self.index(x).ok_or_else(|| self.out_of_range(x))?;
        let j = self.index(x + 1).ok_or_else(|| self.out_of_range(x + 1))?;
        self.occ.swap(i, j);
        Ok(())
    }

    fn out_of_range(&self, x: i64) -> Error {
        let r = self.sites();
        Error::SiteOutOfRange {
            site: x,
            range: format!("{}..={}", r.start, r.end - 1),
        }
    }

    fn check_bond(&self, x: i64) -> Result<()> {
        let ok = match self.topology {
            Topology::Interval => x >= 1 && x <= self.params.n as i64 - 2,
            Topology::TorusSlowBond => x >= 0 && x < self.params.n as i64,
        };
        if ok {
            Ok(())
        } else {
            let hi = match self.topology {
                Topology::Interval => self.params.n as i64 - 2,
                Topology::TorusSlowBond => self.params.n as i64 - 1,
            };
            Err(Error::SiteOutOfRange {
                site: x,
                range: format!("{}..={hi}", self.topology.first_site()),
            })
        }
    }

    fn check_site(&self, x: i64) -> Result<()> {
        self.index(x).map(|_| ()).ok_or_else(|| self.out_of_range(x))
    }
}

/// `P^gamma_m(rho) = sum_{i<m} gamma^(m-1-i) rho^i`, so that
/// `(gamma - rho) P = gamma^m - rho^m`.
pub fn p_poly(gamma: f64, rho: f64, m: u32) -> f64 {
    debug_assert!((0.0..=1.0).contains(&gamma) && rho >= 0.0);
    let mut sum = 0.0;
    let mut rho_i = 1.0;
    for i in 0..m {
        sum += gamma.powi((m - 1 - i) as i32) * rho_i;
        rho_i *= rho;
    }
    sum
}

/// PMM exchange rate of bond `(x, x+1)`:
/// `sum_{k=1}^m prod_{j=-(m-k), j != 0,1}^{k} eta(x+j)`.
pub fn pmm_rate(eta: &Configuration, x: i64) -> Result<f64> {
    eta.check_bond(x)?;
    Ok(pmm_rate_unchecked(eta, x))
}

#[inline]
pub(crate) fn pmm_rate_unchecked(eta: &Configuration, x: i64) -> f64 {
    let m = eta.params.m as i64;
    let mut total = 0.0;
    for k in 1..=m {
        let mut prod = 1.0;
        for j in -(m - k)..=k {
            if j == 0 || j == 1 {
                continue;
            }
            prod *= eta.site(x + j);
            if prod == 0.0 {
                break;
            }
        }
        total += prod;
    }
    total
}

/// SSEP jump weight `eta(x) (1 - eta(y))` between lattice sites.
pub fn ssep_rate(eta: &Configuration, x: i64, y: i64) -> Result<f64> {
    let ex = eta.occupied(x)? as u8 as f64;
    let ey = eta.occupied(y)? as u8 as f64;
    Ok(ex * (1.0 - ey))
}

/// Reservoir weight at a boundary site: `gamma` if empty, `1 - gamma` if occupied.
pub fn boundary_rate(eta: &Configuration, z: i64, gamma: f64) -> Result<f64> {
    let last = eta.params.n as i64 - 1;
    if eta.topology != Topology::Interval || (z != 1 && z != last) {
        return Err(Error::SiteOutOfRange {
            site: z,
            range: format!("{{1, {last}}}"),
        });
    }
    let e = eta.site(z);
    Ok(gamma * (1.0 - e) + (1.0 - gamma) * e)
}

/// `tau_x h^m(eta)`; with `include_ssep` the SSEP term `n^(a-2) eta(x)` is added.
pub fn tau_h(eta: &Configuration, x: i64, include_ssep: bool) -> Result<f64> {
    eta.check_site(x)?;
    Ok(tau_h_unchecked(eta, x, include_ssep))
}

pub(crate) fn tau_h_unchecked(eta: &Configuration, x: i64, include_ssep: bool) -> f64 {
    let m = eta.params.m as i64;
    let mut plus = 0.0;
    for k in 1..=m {
        let mut prod = 1.0;
        for j in -(m - k)..k {
            prod *= eta.site(x + j);
        }
        plus += prod;
    }
    let mut minus = 0.0;
    for k in 1..m {
        let mut prod = 1.0;
        for j in -(m - k)..=k {
            if j != 0 {
                prod *= eta.site(x + j);
            }
        }
        minus += prod;
    }
    let mut h = plus - minus;
    if include_ssep {
        h += eta.params.ssep_weight() * eta.site(x);
    }
    h
}

/// Instantaneous current through bond `(x, x+1)`: `tau_x h - tau_{x+1} h`.
pub fn current(eta: &Configuration, x: i64, include_ssep: bool) -> Result<f64> {
    eta.check_bond(x)?;
    Ok(tau_h_unchecked(eta, x, include_ssep) - tau_h_unchecked(eta, x + 1, include_ssep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(m: u32, n: usize, alpha: f64, beta: f64) -> ModelParams {
        ModelParams {
            m,
            n,
            alpha,
            beta,
            ..ModelParams::default()
        }
    }

    fn conf(occ: &[u8], p: ModelParams) -> Configuration {
        Configuration::interval(occ.to_vec(), p).unwrap()
    }

    #[test]
    fn p_poly_examples() {
        assert_eq!(p_poly(0.7, 0.2, 1), 1.0);
        assert!((p_poly(0.5, 0.5, 3) - 0.75).abs() < 1e-15);
        let v = p_poly(0.3, 0.7, 2);
        assert!((v - 1.0).abs() < 1e-15);
        assert!(((0.3 - 0.7) * v - (0.09 - 0.49)).abs() < 1e-15);
    }

    #[test]
    fn site_accessor_uses_reservoirs() {
        let p = params(2, 5, 0.3, 0.6);
        let eta = conf(&[1, 0, 1, 1], p);
        assert_eq!(eta.site(0), 0.3);
        assert_eq!(eta.site(-4), 0.3);
        assert_eq!(eta.site(5), 0.6);
        assert_eq!(eta.site(1), 1.0);
        assert_eq!(eta.site(2), 0.0);
        assert!(eta.occupied(0).is_err());
        assert!(Configuration::interval(vec![0; 3], p).is_err());
        assert!(Configuration::interval(vec![0, 2, 0, 0], p).is_err());
    }

    #[test]
    fn torus_wraps() {
        let p = params(2, 4, 0.3, 0.6);
        let mut eta = Configuration::torus(vec![1, 0, 0, 1], p).unwrap();
        assert_eq!(eta.site(-1), 1.0);
        assert_eq!(eta.site(4), 1.0);
        eta.exchange(3).unwrap();
        assert_eq!(eta.occupancy(), &[1, 0, 0, 1]);
        eta.exchange(2).unwrap();
        assert_eq!(eta.occupancy(), &[1, 0, 1, 0]);
    }

    #[test]
    fn bits_round_trip() {
        let p = params(1, 6, 0.3, 0.6);
        for s in 0..32u64 {
            assert_eq!(Configuration::from_bits(s, p, Topology::Interval).to_bits(), s);
        }
        let eta = Configuration::from_bits(0b00101, p, Topology::Interval);
        assert_eq!(eta.occupancy(), &[1, 0, 1, 0, 0]);
    }

    #[test]
    fn pmm_rate_examples() {
        let p1 = params(1, 8, 0.3, 0.6);
        for s in 0..128u64 {
            let eta = Configuration::from_bits(s, p1, Topology::Interval);
            for x in 1..=6 {
                assert_eq!(pmm_rate(&eta, x).unwrap(), 1.0);
            }
        }
        let p2 = params(2, 8, 0.3, 0.6);
        // eta(2)=1, eta(5)=1 around bond (3,4)
        let eta = conf(&[0, 1, 0, 0, 1, 0, 0], p2);
        assert_eq!(pmm_rate(&eta, 3).unwrap(), 2.0);
        // x=1 uses eta(0)=alpha; eta(3)=0
        let eta = conf(&[1, 1, 0, 0, 0, 0, 0], p2);
        assert_eq!(pmm_rate(&eta, 1).unwrap(), 0.3);
        assert!(pmm_rate(&eta, 0).is_err());
        assert!(pmm_rate(&eta, 7).is_err());
    }

    #[test]
    fn ssep_and_boundary_examples() {
        let p = params(1, 5, 0.2, 0.6);
        let eta = conf(&[1, 0, 1, 1], p);
        assert_eq!(ssep_rate(&eta, 1, 2).unwrap(), 1.0);
        assert_eq!(ssep_rate(&eta, 3, 4).unwrap(), 0.0);
        assert_eq!(ssep_rate(&eta, 2, 3).unwrap(), 0.0);
        assert!(ssep_rate(&eta, 0, 1).is_err());

        let empty = conf(&[0, 0, 0, 0], p);
        assert!((boundary_rate(&empty, 1, 0.2).unwrap() - 0.2).abs() < 1e-15);
        assert!((boundary_rate(&eta, 1, 0.2).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(boundary_rate(&eta, 4, 0.5).unwrap(), 0.5);
        assert_eq!(boundary_rate(&empty, 4, 0.5).unwrap(), 0.5);
        assert!(boundary_rate(&eta, 2, 0.5).is_err());
    }

    #[test]
    fn tau_h_examples() {
        let p = params(2, 8, 0.3, 0.6);
        let eta = conf(&[0, 1, 1, 1, 0, 0, 0], p);
        assert_eq!(tau_h(&eta, 3, false).unwrap(), 1.0);
        let eta = conf(&[0, 1, 0, 1, 0, 0, 0], p);
        assert_eq!(tau_h(&eta, 3, false).unwrap(), -1.0);
        let eta = conf(&[1, 0, 0, 0, 0, 0, 0], p);
        assert!((tau_h(&eta, 1, false).unwrap() - 0.3).abs() < 1e-15);
        assert!(tau_h(&eta, 0, false).is_err());
        assert!(tau_h(&eta, 8, false).is_err());
        let with = tau_h(&eta, 1, true).unwrap();
        assert!((with - 0.3 - p.ssep_weight()).abs() < 1e-15);
    }

    #[test]
    fn current_m1_is_gradient() {
        let p = params(1, 7, 0.3, 0.6);
        for s in 0..64u64 {
            let eta = Configuration::from_bits(s, p, Topology::Interval);
            for x in 1..=5 {
                let expect = eta.site(x) - eta.site(x + 1);
                assert_eq!(current(&eta, x, false).unwrap(), expect);
            }
        }
    }

    #[test]
    fn current_vanishes_on_flat_profiles() {
        for m in 1..=3u32 {
            let p = params(m, 10, 0.4, 0.4);
            // all sites empty with the reservoirs at 0.4 is not flat; use full windows
            let full = Configuration::interval(vec![1; 9], params(m, 10, 0.4, 0.4)).unwrap();
            for x in (m as i64 + 1)..=(8 - m as i64) {
                assert_eq!(current(&full, x, false).unwrap(), 0.0);
            }
            let empty = Configuration::interval(vec![0; 9], p).unwrap();
            for x in (m as i64 + 1)..=(8 - m as i64) {
                assert_eq!(current(&empty, x, true).unwrap(), 0.0);
            }
        }
    }

    /// Closed forms of `tau_1 h` and `tau_{n-1} h` obtained by substituting the
    /// reservoir values by hand.
    fn tau_left_closed(eta: &Configuration) -> f64 {
        let m = eta.params().m as i64;
        let a = eta.params().alpha;
        let mut v = 0.0;
        for k in 0..m {
            let prod: f64 = (1..=m - k).map(|j| eta.site(j)).product();
            v += a.powi(k as i32) * prod;
        }
        for k in 1..m {
            let prod: f64 = (2..=m + 1 - k).map(|j| eta.site(j)).product();
            v -= a.powi(k as i32) * prod;
        }
        v
    }

    fn tau_right_closed(eta: &Configuration) -> f64 {
        let m = eta.params().m as i64;
        let n = eta.n() as i64;
        let b = eta.params().beta;
        let mut v = 0.0;
        for k in 0..m {
            let prod: f64 = (1..=m - k).map(|j| eta.site(n - j)).product();
            v += b.powi(k as i32) * prod;
        }
        for k in 1..m {
            let prod: f64 = (2..=m + 1 - k).map(|j| eta.site(n - j)).product();
            v -= b.powi(k as i32) * prod;
        }
        v
    }

    #[test]
    fn tau_h_boundary_closed_forms_exhaustive() {
        for m in 1..=3u32 {
            let n = 2 * m as usize + 3;
            let p = params(m, n, 0.3, 0.7);
            for s in 0..(1u64 << (n - 1)) {
                let eta = Configuration::from_bits(s, p, Topology::Interval);
                let l = tau_h(&eta, 1, false).unwrap();
                let r = tau_h(&eta, n as i64 - 1, false).unwrap();
                assert!((l - tau_left_closed(&eta)).abs() < 1e-14, "m={m} s={s}");
                assert!((r - tau_right_closed(&eta)).abs() < 1e-14, "m={m} s={s}");
            }
        }
    }

    #[test]
    fn current_equals_rate_times_gradient() {
        // The gradient identity behind the PMM rates.
        for m in 1..=4u32 {
            let n = 10;
            let p = params(m, n, 0.3, 0.7);
            for s in 0..(1u64 << (n - 1)) {
                let eta = Configuration::from_bits(s, p, Topology::Interval);
                for x in 1..=(n as i64 - 2) {
                    let c = pmm_rate(&eta, x).unwrap();
                    let grad = eta.site(x) - eta.site(x + 1);
                    let j = current(&eta, x, false).unwrap();
                    assert!((j - c * grad).abs() < 1e-13, "m={m} s={s} x={x}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn newton_binomial(gamma in 0.0..=1.0f64, rho in 0.0..=2.0f64, m in 1u32..=6) {
            let lhs = (gamma - rho) * p_poly(gamma, rho, m);
            let rhs = gamma.powi(m as i32) - rho.powi(m as i32);
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }

        #[test]
        fn p_poly_lower_bound(gamma in 1e-3..=1.0f64, rho in 0.0..=2.0f64, m in 1u32..=6) {
            prop_assert!(p_poly(gamma, rho, m) >= gamma.powi(m as i32 - 1) * (1.0 - 1e-15));
        }

        #[test]
        fn pmm_rate_bounded(bits in any::<u64>(), m in 1u32..=4, alpha in 0.01..0.99f64, beta in 0.01..0.99f64) {
            let n = 14;
            let p = params(m, n, alpha, beta);
            let eta = Configuration::from_bits(bits, p, Topology::Interval);
            for x in 1..=(n as i64 - 2) {
                let c = pmm_rate(&eta, x).unwrap();
                prop_assert!(c >= 0.0 && c <= m as f64);
            }
            let full = Configuration::interval(vec![1; n - 1], p).unwrap();
            for x in (m as i64)..=(n as i64 - 1 - m as i64) {
                prop_assert_eq!(pmm_rate(&full, x).unwrap(), m as f64);
            }
        }

        #[test]
        fn pmm_rate_reflection_symmetric(bits in any::<u64>(), m in 1u32..=4, alpha in 0.01..0.99f64, beta in 0.01..0.99f64) {
            let n = 12usize;
            let p = params(m, n, alpha, beta);
            let eta = Configuration::from_bits(bits, p, Topology::Interval);
            let mut rev = eta.occupancy().to_vec();
            rev.reverse();
            let reflected = Configuration::interval(rev, params(m, n, beta, alpha)).unwrap();
            for x in 1..=(n as i64 - 2) {
                // bond (x, x+1) maps to bond (n-x-1, n-x)
                let a = pmm_rate(&eta, x).unwrap();
                let b = pmm_rate(&reflected, n as i64 - x - 1).unwrap();
                prop_assert!((a - b).abs() < 1e-14);
            }
        }

        #[test]
        fn current_telescopes(bits in any::<u64>(), m in 1u32..=4, ssep in any::<bool>()) {
            let n = 13usize;
            let p = params(m, n, 0.25, 0.65);
            let eta = Configuration::from_bits(bits, p, Topology::Interval);
            let sum: f64 = (1..=(n as i64 - 2)).map(|x| current(&eta, x, ssep).unwrap()).sum();
            let ends = tau_h(&eta, 1, ssep).unwrap() - tau_h(&eta, n as i64 - 1, ssep).unwrap();
            prop_assert!((sum - ends).abs() < 1e-12);
        }
    }
}
