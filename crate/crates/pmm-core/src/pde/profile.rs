//! Initial density profiles `g : [0,1] -> [0,1]`.
//!
//! Text form, used by the CLI:
//! `const:c`, `step:at:left:right`, `linear:left:right`, `cos:mean:amp:j`
//! (the last one is `mean + amp cos(j pi u)`).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Constant(f64),
    Step { at: f64, left: f64, right: f64 },
    Linear { left: f64, right: f64 },
    Cosine { mean: f64, amp: f64, j: u32 },
}

impl Profile {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Profile::Constant(c) => c,
            Profile::Step { at, left, right } => {
                if u < at {
                    left
                } else {
                    right
                }
            }
            Profile::Linear { left, right } => left + (right - left) * u,
            Profile::Cosine { mean, amp, j } => mean + amp * (j as f64 * PI * u).cos(),
        }
    }

    /// Checks that the profile takes values in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = match *self {
            Profile::Constant(c) => (c, c),
            Profile::Step { left, right, .. } | Profile::Linear { left, right } => {
                (left.min(right), left.max(right))
            }
            Profile::Cosine { mean, amp, .. } => (mean - amp.abs(), mean + amp.abs()),
        };
        if lo >= 0.0 && hi <= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidParam {
                name: "g",
                value: self.to_string(),
                bound: "[0, 1]",
            })
        }
    }

    /// Values at the centers `(i - 1/2)/cells`.
    pub fn cell_values(&self, cells: usize) -> Vec<f64> {
        (0..cells)
            .map(|i| self.eval((i as f64 + 0.5) / cells as f64))
            .collect()
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Profile::Constant(c) => write!(f, "const:{c}"),
            Profile::Step { at, left, right } => write!(f, "step:{at}:{left}:{right}"),
            Profile::Linear { left, right } => write!(f, "linear:{left}:{right}"),
            Profile::Cosine { mean, amp, j } => write!(f, "cos:{mean}:{amp}:{j}"),
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParam {
            name: "g",
            value: s.to_string(),
            bound: "const:c | step:at:l:r | linear:l:r | cos:mean:amp:j",
        };
        let mut parts = s.trim().split(':');
        let kind = parts.next().ok_or_else(bad)?;
        let nums: Vec<&str> = parts.collect();
        let f = |i: usize| -> Result<f64> {
            nums.get(i)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(bad)
        };
        let p = match (kind, nums.len()) {
            ("const", 1) => Profile::Constant(f(0)?),
            ("step", 3) => Profile::Step {
                at: f(0)?,
                left: f(1)?,
                right: f(2)?,
            },
            ("linear", 2) => Profile::Linear {
                left: f(0)?,
                right: f(1)?,
            },
            ("cos", 3) => Profile::Cosine {
                mean: f(0)?,
                amp: f(1)?,
                j: nums[2].trim().parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        for s in ["const:0.5", "step:0.5:0.8:0.2", "linear:0.2:0.8", "cos:0.5:0.4:1"] {
            let p: Profile = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("const:1.5".parse::<Profile>().is_err());
        assert!("cos:0.5:0.6:1".parse::<Profile>().is_err());
        assert!("wave:1".parse::<Profile>().is_err());
        assert!("step:0.5:0.1".parse::<Profile>().is_err());
    }

    #[test]
    fn values() {
        let p = Profile::Step {
            at: 0.5,
            left: 0.8,
            right: 0.2,
        };
        assert_eq!(p.eval(0.25), 0.8);
        assert_eq!(p.eval(0.5), 0.2);
        let c = Profile::Cosine {
            mean: 0.5,
            amp: 0.4,
            j: 1,
        };
        assert!((c.eval(0.0) - 0.9).abs() < 1e-15);
        assert_eq!(c.cell_values(4).len(), 4);
    }
}
