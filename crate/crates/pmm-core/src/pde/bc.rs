//! Boundary conditions for the finite-volume solver and the weak forms.
//!
//! Each condition is a [`BoundaryCondition`] strategy. The solver only sees the
//! trait object, so new conditions can be registered by name in a
//! [`BoundaryRegistry`] and selected from configuration.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::testfn::TestFunction;
use crate::error::{invalid, Error, Result};

/// Reservoir data shared by all conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reservoirs {
    pub alpha: f64,
    pub beta: f64,
    pub m: u32,
}

/// Boundary values of the field and of a test function at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    /// Traces `rho(0)`, `rho(1)`.
    pub rho0: f64,
    pub rho1: f64,
    /// `G(0)`, `G(1)`, `dG(0)`, `dG(1)`.
    pub g0: f64,
    pub g1: f64,
    pub dg0: f64,
    pub dg1: f64,
}

pub trait BoundaryCondition: fmt::Debug + Send + Sync {
    fn kind(&self) -> BoundaryKind;

    fn name(&self) -> &'static str {
        self.kind().name()
    }

    /// Fluxes of `d(rho^m)/du` through the left and right faces, `(F_{1/2}, F_{N+1/2})`.
    /// `psi` holds `rho^m` cell by cell.
    fn fluxes(&self, rho: &[f64], psi: &[f64], du: f64, res: Reservoirs) -> (f64, f64);

    /// Extra diagonal weight the boundary face puts on its cell, in units of
    /// `dt / du^2`, for the worst case `rho in [0,1]`.
    fn stiffness(&self, m: u32, du: f64) -> f64;

    /// Boundary traces `(rho(0), rho(1))` of a cell vector.
    fn traces(&self, rho: &[f64], res: Reservoirs) -> (f64, f64);

    /// Boundary part of `d/dt <rho, G>` in the weak formulation:
    /// `d/dt <rho,G> = <rho, dG/dt> + <rho^m, G''> + boundary_term`.
    fn boundary_term(&self, s: &BoundarySample, res: Reservoirs) -> f64;

    /// Rejects test functions outside the class the weak form is stated for.
    fn admits(&self, _g: &TestFunction) -> Result<()> {
        Ok(())
    }
}

/// Identifies a boundary condition and carries its intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryKind {
    Robin { kappa: f64 },
    Neumann,
    Dirichlet,
    PeriodicSlowBond { kappa: f64 },
    Periodic,
}

impl BoundaryKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryKind::Robin { .. } => "robin",
            BoundaryKind::Neumann => "neumann",
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::PeriodicSlowBond { .. } => "periodic-slow-bond",
            BoundaryKind::Periodic => "periodic",
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match *self {
            BoundaryKind::Robin { kappa } | BoundaryKind::PeriodicSlowBond { kappa } => Some(kappa),
            _ => None,
        }
    }

    pub fn strategy(&self) -> Box<dyn BoundaryCondition> {
        match *self {
            BoundaryKind::Robin { kappa } => Box::new(Robin { kappa }),
            BoundaryKind::Neumann => Box::new(Neumann),
            BoundaryKind::Dirichlet => Box::new(Dirichlet),
            BoundaryKind::PeriodicSlowBond { kappa } => Box::new(PeriodicSlowBond { kappa }),
            BoundaryKind::Periodic => Box::new(Periodic),
        }
    }
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kappa() {
            Some(k) => write!(f, "{}(kappa={k})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

fn check_kappa(kappa: f64) -> Result<f64> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(kappa)
    } else {
        Err(invalid("kappa", kappa, "(0, inf)"))
    }
}

/// `d(rho^m)(0) = kappa (rho(0) - alpha)`, `d(rho^m)(1) = kappa (beta - rho(1))`.
#[derive(Debug, Clone, Copy)]
pub struct Robin {
    pub kappa: f64,
}

impl BoundaryCondition for Robin {
    fn kind(&self) -> BoundaryKind {
        BoundaryKind::Robin { kappa: self.kappa }
    }

    fn fluxes(&self, rho: &[f64], _psi: &[f64], _du: f64, res: Reservoirs) -> (f64, f64) {
        let n = rho.len();
        (
            self.kappa * (rho[0] - res.alpha),
            self.kappa * (res.beta - rho[n - 1]),
        )
    }

    fn stiffness(&self, _m: u32, du: f64) -> f64 {
        self.kappa * du
    }

    fn traces(&self, rho: &[f64], _res: Reservoirs) -> (f64, f64) {
        (rho[0], rho[rho.len() - 1])
    }

    fn boundary_term(&self, s: &BoundarySample, res: Reservoirs) -> f64 {
        let m = res.m as i32;
        -s.rho1.powi(m) * s.dg1
            + s.rho0.powi(m) * s.dg0
            + self.kappa * (s.g0 * (res.alpha - s.rho0) + s.g1 * (res.beta - s.rho1))
    }
}

/// Zero flux at both ends.
#[derive(Debug, Clone, Copy)]
pub struct Neumann;

impl BoundaryCondition for Neumann {
    fn kind(&self) -> BoundaryKind {
        BoundaryKind::Neumann
    }

    fn fluxes(&self, _rho: &[f64], _psi: &[f64], _du: f64, _res: Reservoirs) -> (f64, f64) {
        (0.0, 0.0)
    }

    fn stiffness(&self, _m: u32, _du: f64) -> f64 {
        0.0
    }

    fn traces(&self, rho: &[f64], _res: Reservoirs) -> (f64, f64) {
        (rho[0], rho[rho.len() - 1])
    }

    fn boundary_term(&self, s: &BoundarySample, res: Reservoirs) -> f64 {
        let m = res.m as i32;
        -s.rho1.powi(m) * s.dg1 + s.rho0.powi(m) * s.dg0
    }
}

/// `rho(0) = alpha`, `rho(1) = beta`, imposed through half-cell fluxes.
#[derive(Debug, Clone, Copy)]
pub struct Dirichlet;

impl BoundaryCondition for Dirichlet {
    fn kind(&self) -> BoundaryKind {
        BoundaryKind::Dirichlet
    }

    fn fluxes(&self, _rho: &[f64], psi: &[f64], du: f64, res: Reservoirs) -> (f64, f64) {
        let n = psi.len();
        let m = res.m as i32;
        let h = 0.5 * du;
        (
            (psi[0] - res.alpha.powi(m)) / h,
            (res.beta.powi(m) - psi[n - 1]) / h,
        )
    }

    fn stiffness(&self, m: u32, _du: f64) -> f64 {
        2.0 * m as f64
    }

    fn traces(&self, _rho: &[f64], res: Reservoirs) -> (f64, f64) {
        (res.alpha, res.beta)
    }

    fn boundary_term(&self, s: &BoundarySample, res: Reservoirs) -> f64 {
        let m = res.m as i32;
        -res.beta.powi(m) * s.dg1 + res.alpha.powi(m) * s.dg0
    }

    fn admits(&self, g: &TestFunction) -> Result<()> {
        if g.vanishes_at_boundary() {
            Ok(())
        } else {
            Err(Error::ClassMismatch(
                "dirichlet weak form needs G(t,0) = G(t,1) = 0".into(),
            ))
        }
    }
}

/// Ring `[0,1)` whose interface at `u = 0 ~ 1` carries flux
/// `kappa (rho(0)^m - rho(1)^m)`.
#[derive(Debug, Clone, Copy)]
pub struct PeriodicSlowBond {
    pub kappa: f64,
}

impl BoundaryCondition for PeriodicSlowBond {
    fn kind(&self) -> BoundaryKind {
        BoundaryKind::PeriodicSlowBond { kappa: self.kappa }
    }

    fn fluxes(&self, _rho: &[f64], psi: &[f64], _du: f64, _res: Reservoirs) -> (f64, f64) {
        let f = self.kappa * (psi[0] - psi[psi.len() - 1]);
        (f, f)
    }

    fn stiffness(&self, m: u32, du: f64) -> f64 {
        self.kappa * m as f64 * du
    }

    fn traces(&self, rho: &[f64], _res: Reservoirs) -> (f64, f64) {
        (rho[0], rho[rho.len() - 1])
    }

    fn boundary_term(&self, s: &BoundarySample, res: Reservoirs) -> f64 {
        let m = res.m as i32;
        let (p0, p1) = (s.rho0.powi(m), s.rho1.powi(m));
        -p1 * s.dg1 + p0 * s.dg0 - self.kappa * (p0 - p1) * (s.g0 - s.g1)
    }
}

/// Plain periodic ring; the interface face is an ordinary interior face.
#[derive(Debug, Clone, Copy)]
pub struct Periodic;

impl BoundaryCondition for Periodic {
    fn kind(&self) -> BoundaryKind {
        BoundaryKind::Periodic
    }

    fn fluxes(&self, _rho: &[f64], psi: &[f64], du: f64, _res: Reservoirs) -> (f64, f64) {
        let f = (psi[0] - psi[psi.len() - 1]) / du;
        (f, f)
    }

    fn stiffness(&self, m: u32, _du: f64) -> f64 {
        m as f64
    }

    fn traces(&self, rho: &[f64], _res: Reservoirs) -> (f64, f64) {
        let v = 0.5 * (rho[0] + rho[rho.len() - 1]);
        (v, v)
    }

    fn boundary_term(&self, s: &BoundarySample, res: Reservoirs) -> f64 {
        let m = res.m as i32;
        -s.rho1.powi(m) * s.dg1 + s.rho0.powi(m) * s.dg0
    }

    fn admits(&self, g: &TestFunction) -> Result<()> {
        // Periodic test functions: G and dG agree at both ends.
        for &t in &[0.0, 0.37, 1.0] {
            let (l, r) = g.boundary_values(t);
            if (l - r).abs() > 1e-12 || (g.du(t, 0.0) - g.du(t, 1.0)).abs() > 1e-9 {
                return Err(Error::ClassMismatch(
                    "periodic weak form needs a periodic test function".into(),
                ));
            }
        }
        Ok(())
    }
}

type Constructor = fn(Option<f64>) -> Result<Box<dyn BoundaryCondition>>;

/// Boundary conditions selectable by name.
#[derive(Clone)]
pub struct BoundaryRegistry {
    entries: BTreeMap<String, Constructor>,
}

impl fmt::Debug for BoundaryRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

fn need_kappa(kappa: Option<f64>) -> Result<f64> {
    check_kappa(kappa.ok_or_else(|| invalid("kappa", "missing", "(0, inf)"))?)
}

impl BoundaryRegistry {
    pub fn empty() -> Self {
        BoundaryRegistry {
            entries: BTreeMap::new(),
        }
    }

    /// Registry holding the built-in conditions.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("robin", |k| Ok(Box::new(Robin { kappa: need_kappa(k)? })));
        r.register("neumann", |_| Ok(Box::new(Neumann)));
        r.register("dirichlet", |_| Ok(Box::new(Dirichlet)));
        r.register("periodic-slow-bond", |k| {
            Ok(Box::new(PeriodicSlowBond {
                kappa: need_kappa(k)?,
            }))
        });
        r.register("periodic", |_| Ok(Box::new(Periodic)));
        r
    }

    pub fn register(&mut self, name: &str, ctor: Constructor) {
        self.entries.insert(name.to_string(), ctor);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Builds the condition registered under `name`; `kappa` is used by the
    /// conditions that have an intensity.
    pub fn create(&self, name: &str, kappa: Option<f64>) -> Result<Box<dyn BoundaryCondition>> {
        let ctor = self
            .entries
            .get(name)
            .ok_or_else(|| Error::UnknownBoundary(name.to_string()))?;
        ctor(kappa)
    }
}

impl Default for BoundaryRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
