use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Default SSEP perturbation exponent.
pub const DEFAULT_A: f64 = 1.5;
/// Default boundary scaling exponent.
pub const DEFAULT_THETA: f64 = 1.0;

/// Fixed scalars of the model.
///
/// `n` is the lattice scale (sites `1..n-1` on the interval), `t_final` the
/// macroscopic horizon. The PDE side ignores `n`, `theta` and `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub m: u32,
    pub n: usize,
    pub kappa: f64,
    pub theta: f64,
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    pub t_final: f64,
}

impl ModelParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        m: u32,
        n: usize,
        kappa: f64,
        theta: f64,
        a: f64,
        alpha: f64,
        beta: f64,
        t_final: f64,
    ) -> Result<Self> {
        let p = ModelParams {
            m,
            n,
            kappa,
            theta,
            a,
            alpha,
            beta,
            t_final,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks every bound; the first violation is reported by field name.
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(invalid("m", self.m, "[1, inf)"));
        }
        if self.n < 3 {
            return Err(invalid("n", self.n, "[3, inf)"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(invalid("kappa", self.kappa, "(0, inf)"));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(invalid("theta", self.theta, "[0, inf)"));
        }
        if !(self.a > 1.0 && self.a < 2.0) {
            return Err(invalid("a", self.a, "(1, 2)"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", self.alpha, "(0, 1)"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(invalid("beta", self.beta, "(0, 1)"));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(invalid("T", self.t_final, "(0, inf)"));
        }
        Ok(())
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        self.kappa = kappa;
        self.validate()?;
        Ok(self)
    }

    pub fn with_n(mut self, n: usize) -> Result<Self> {
        self.n = n;
        self.validate()?;
        Ok(self)
    }

    /// Boundary intensity seen by the lattice, `kappa / n^theta`.
    pub fn boundary_intensity(&self) -> f64 {
        self.kappa / (self.n as f64).powf(self.theta)
    }

    /// Weight of the SSEP part relative to the PMM part, `n^(a-2)`.
    pub fn ssep_weight(&self) -> f64 {
        (self.n as f64).powf(self.a - 2.0)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            m: 2,
            n: 100,
            kappa: 1.0,
            theta: DEFAULT_THETA,
            a: DEFAULT_A,
            alpha: 0.2,
            beta: 0.8,
            t_final: 0.1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn field_of(e: Error) -> &'static str {
        match e {
            Error::InvalidParam { name, .. } => name,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn each_bound_names_its_field() {
        let ok = ModelParams::default();
        assert!(ok.validate().is_ok());
        let cases: Vec<(ModelParams, &str)> = vec![
            (ModelParams { m: 0, ..ok }, "m"),
            (ModelParams { n: 2, ..ok }, "n"),
            (ModelParams { kappa: 0.0, ..ok }, "kappa"),
            (ModelParams { theta: -0.1, ..ok }, "theta"),
            (ModelParams { a: 2.0, ..ok }, "a"),
            (ModelParams { a: 1.0, ..ok }, "a"),
            (ModelParams { alpha: 1.2, ..ok }, "alpha"),
            (ModelParams { beta: 0.0, ..ok }, "beta"),
            (ModelParams { t_final: 0.0, ..ok }, "T"),
            (ModelParams { alpha: f64::NAN, ..ok }, "alpha"),
        ];
        for (p, name) in cases {
            assert_eq!(field_of(p.validate().unwrap_err()), name);
        }
    }

    #[test]
    fn scalings() {
        let p = ModelParams {
            n: 100,
            kappa: 2.0,
            theta: 1.0,
            a: 1.5,
            ..ModelParams::default()
        };
        assert!((p.boundary_intensity() - 0.02).abs() < 1e-15);
        assert!((p.ssep_weight() - 0.1).abs() < 1e-15);
    }
}
