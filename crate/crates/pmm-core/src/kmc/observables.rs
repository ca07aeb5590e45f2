use crate::error::{Error, Result};
use crate::lattice::Configuration;
use crate::pde::TestFunction;

/// `(1/n) sum_x G(t, x/n) eta(x)`.
pub fn empirical_pairing(eta: &Configuration, g: &TestFunction, t: f64) -> f64 {
    let n = eta.n() as f64;
    eta.sites()
        .zip(eta.occupancy())
        .filter(|(_, &v)| v == 1)
        .map(|(x, _)| g.eval(t, x as f64 / n))
        .sum::<f64>()
        / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `{x-l+1, ..., x}`
    Left,
    /// `{x, ..., x+l-1}`
    Right,
}

/// Mean occupation over the box of `ell` sites ending (left) or starting
/// (right) at `x`.
pub fn box_average(eta: &Configuration, x: i64, ell: usize, direction: Direction) -> Result<f64> {
    if ell == 0 {
        return Err(Error::Precondition("box size must be positive".into()));
    }
    let (lo, hi) = match direction {
        Direction::Left => (x - ell as i64 + 1, x),
        Direction::Right => (x, x + ell as i64 - 1),
    };
    let sites = eta.sites();
    if lo < sites.start || hi >= sites.end {
        return Err(Error::SiteOutOfRange {
            site: if lo < sites.start { lo } else { hi },
            range: format!("{}..={}", sites.start, sites.end - 1),
        });
    }
    let sum: f64 = (lo..=hi).map(|y| eta.site(y)).sum();
    Ok(sum / ell as f64)
}
