//! Test functions `H(t,u) = sum_k c_k p_k(t) b_k(u)` with closed-form derivatives.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

/// Spatial factor of a term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceBasis {
    /// `cos(j pi u)`
    Cos(u32),
    /// `sin(j pi u)`
    Sin(u32),
    /// `u^p`
    Mono(u32),
}

impl SpaceBasis {
    fn eval(self, u: f64) -> f64 {
        match self {
            SpaceBasis::Cos(j) => (j as f64 * PI * u).cos(),
            SpaceBasis::Sin(j) => (j as f64 * PI * u).sin(),
            SpaceBasis::Mono(p) => u.powi(p as i32),
        }
    }

    fn d1(self, u: f64) -> f64 {
        match self {
            SpaceBasis::Cos(j) => {
                let w = j as f64 * PI;
                -w * (w * u).sin()
            }
            SpaceBasis::Sin(j) => {
                let w = j as f64 * PI;
                w * (w * u).cos()
            }
            SpaceBasis::Mono(0) => 0.0,
            SpaceBasis::Mono(p) => p as f64 * u.powi(p as i32 - 1),
        }
    }

    fn d2(self, u: f64) -> f64 {
        match self {
            SpaceBasis::Cos(j) => {
                let w = j as f64 * PI;
                -w * w * (w * u).cos()
            }
            SpaceBasis::Sin(j) => {
                let w = j as f64 * PI;
                -w * w * (w * u).sin()
            }
            SpaceBasis::Mono(p) if p < 2 => 0.0,
            SpaceBasis::Mono(p) => (p * (p - 1)) as f64 * u.powi(p as i32 - 2),
        }
    }

    /// Exact value at `u = 0` (sines vanish identically).
    fn at_zero(self) -> f64 {
        match self {
            SpaceBasis::Cos(_) => 1.0,
            SpaceBasis::Sin(_) => 0.0,
            SpaceBasis::Mono(0) => 1.0,
            SpaceBasis::Mono(_) => 0.0,
        }
    }

    /// Exact value at `u = 1`.
    fn at_one(self) -> f64 {
        match self {
            SpaceBasis::Cos(j) => {
                if j % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            SpaceBasis::Sin(_) => 0.0,
            SpaceBasis::Mono(_) => 1.0,
        }
    }
}

/// One term `coef * poly(t) * basis(u)`; `time_poly[i]` multiplies `t^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub time_poly: Vec<f64>,
    pub space: SpaceBasis,
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * t + a)
}

fn horner_d(c: &[f64], t: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, &a)| acc * t + i as f64 * a)
}

impl Term {
    fn time(&self, t: f64) -> f64 {
        self.coef * horner(&self.time_poly, t)
    }

    fn time_d(&self, t: f64) -> f64 {
        self.coef * horner_d(&self.time_poly, t)
    }
}

/// Finite linear combination of separable terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TestFunction {
    terms: Vec<Term>,
}

impl TestFunction {
    pub fn new(terms: Vec<Term>) -> Self {
        TestFunction { terms }
    }

    /// Time-independent single term.
    pub fn spatial(coef: f64, space: SpaceBasis) -> Self {
        Self::term(coef, vec![1.0], space)
    }

    pub fn term(coef: f64, time_poly: Vec<f64>, space: SpaceBasis) -> Self {
        TestFunction {
            terms: vec![Term {
                coef,
                time_poly,
                space,
            }],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::spatial(c, SpaceBasis::Mono(0))
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn eval(&self, t: f64, u: f64) -> f64 {
        self.terms.iter().map(|k| k.time(t) * k.space.eval(u)).sum()
    }

    pub fn dt(&self, t: f64, u: f64) -> f64 {
        self.terms.iter().map(|k| k.time_d(t) * k.space.eval(u)).sum()
    }

    pub fn du(&self, t: f64, u: f64) -> f64 {
        self.terms.iter().map(|k| k.time(t) * k.space.d1(u)).sum()
    }

    pub fn duu(&self, t: f64, u: f64) -> f64 {
        self.terms.iter().map(|k| k.time(t) * k.space.d2(u)).sum()
    }

    /// Exact boundary values `(H(t,0), H(t,1))`, free of `sin(j pi)` roundoff.
    pub fn boundary_values(&self, t: f64) -> (f64, f64) {
        self.terms.iter().fold((0.0, 0.0), |(l, r), k| {
            let a = k.time(t);
            (l + a * k.space.at_zero(), r + a * k.space.at_one())
        })
    }

    fn boundary_poly(&self, right: bool) -> Vec<f64> {
        let len = self.terms.iter().map(|k| k.time_poly.len()).max().unwrap_or(0);
        let mut poly = vec![0.0; len];
        for k in &self.terms {
            let b = if right {
                k.space.at_one()
            } else {
                k.space.at_zero()
            };
            for (i, &c) in k.time_poly.iter().enumerate() {
                poly[i] += k.coef * b * c;
            }
        }
        poly
    }

    /// True iff `H(t,0) = H(t,1) = 0` for every `t`, decided on the
    /// coefficients of the boundary polynomials in `t`.
    pub fn vanishes_at_boundary(&self) -> bool {
        let scale = self
            .terms
            .iter()
            .flat_map(|k| k.time_poly.iter().map(move |c| (k.coef * c).abs()))
            .fold(0.0, f64::max)
            .max(1.0);
        let tol = 1e-13 * scale;
        self.boundary_poly(false)
            .iter()
            .chain(self.boundary_poly(true).iter())
            .all(|c| c.abs() <= tol)
    }

    pub fn is_time_constant(&self) -> bool {
        self.terms
            .iter()
            .all(|k| k.time_poly.iter().skip(1).all(|&c| c == 0.0))
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for k in &mut self.terms {
            k.coef *= s;
        }
        self
    }
}

impl Add for TestFunction {
    type Output = TestFunction;
    fn add(mut self, rhs: TestFunction) -> TestFunction {
        self.terms.extend(rhs.terms);
        self
    }
}

impl Mul<TestFunction> for f64 {
    type Output = TestFunction;
    fn mul(self, rhs: TestFunction) -> TestFunction {
        rhs.scaled(self)
    }
}
