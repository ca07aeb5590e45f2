//! Space-time grid data and the shared quadrature rules (midpoint in space,
//! trapezoid in time).

use serde::{Deserialize, Serialize};

use super::bc::BoundaryKind;
use super::testfn::TestFunction;
use crate::error::{Error, Result};

/// Center of cell `i` (0-based) on a grid of `cells` cells.
#[inline]
pub fn center(i: usize, cells: usize) -> f64 {
    (i as f64 + 0.5) / cells as f64
}

/// Trapezoid rule over the samples `f[0..=k]` on `times[0..=k]`.
pub fn trapezoid(times: &[f64], f: &[f64]) -> f64 {
    debug_assert_eq!(times.len(), f.len());
    times
        .windows(2)
        .zip(f.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Values on cell centers plus the two boundary traces, per stored time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub cells: usize,
    pub times: Vec<f64>,
    /// Row-major: `values[k * cells + i]`.
    pub values: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// How boundary traces are obtained when sampling a function onto a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceRule {
    /// Evaluate the function at `u = 0` and `u = 1`.
    Exact,
    /// Copy the first and last cell values, as the finite-volume solver does.
    NearestCell,
}

impl GridFunction {
    pub fn new(
        cells: usize,
        times: Vec<f64>,
        values: Vec<f64>,
        left: Vec<f64>,
        right: Vec<f64>,
    ) -> Result<Self> {
        let k = times.len();
        if k == 0 || values.len() != k * cells || left.len() != k || right.len() != k {
            return Err(Error::GridMismatch(format!(
                "{k} times, {} values, {} + {} traces for {cells} cells",
                values.len(),
                left.len(),
                right.len()
            )));
        }
        Ok(GridFunction {
            cells,
            times,
            values,
            left,
            right,
        })
    }

    /// Samples `f(t, u)` on the grid.
    pub fn from_fn(
        cells: usize,
        times: &[f64],
        rule: TraceRule,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(cells * times.len());
        let mut left = Vec::with_capacity(times.len());
        let mut right = Vec::with_capacity(times.len());
        for &t in times {
            let start = values.len();
            values.extend((0..cells).map(|i| f(t, center(i, cells))));
            match rule {
                TraceRule::Exact => {
                    left.push(f(t, 0.0));
                    right.push(f(t, 1.0));
                }
                TraceRule::NearestCell => {
                    left.push(values[start]);
                    right.push(values[start + cells - 1]);
                }
            }
        }
        GridFunction {
            cells,
            times: times.to_vec(),
            values,
            left,
            right,
        }
    }

    /// Samples a test function with exact traces.
    pub fn from_test_function(h: &TestFunction, cells: usize, times: &[f64]) -> Self {
        let mut g = Self::from_fn(cells, times, TraceRule::Exact, |t, u| h.eval(t, u));
        for (k, &t) in times.iter().enumerate() {
            let (l, r) = h.boundary_values(t);
            g.left[k] = l;
            g.right[k] = r;
        }
        g
    }

    pub fn du(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.cells..(k + 1) * self.cells]
    }

    pub fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.cells != other.cells || self.times != other.times {
            return Err(Error::GridMismatch(format!(
                "{} cells x {} times vs {} cells x {} times",
                self.cells,
                self.times.len(),
                other.cells,
                other.times.len()
            )));
        }
        Ok(())
    }

    /// Pointwise map, traces included.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            cells: self.cells,
            times: self.times.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            left: self.left.iter().map(|&v| f(v)).collect(),
            right: self.right.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Midpoint-rule `<f_k, 1>` for every stored time.
    pub fn masses(&self) -> Vec<f64> {
        let du = self.du();
        (0..self.times.len())
            .map(|k| self.row(k).iter().sum::<f64>() * du)
            .collect()
    }

    /// Midpoint-rule pairing `<f_k, H(t_k, .)>`.
    pub fn pairing(&self, k: usize, h: &TestFunction) -> f64 {
        let t = self.times[k];
        let n = self.cells;
        self.row(k)
            .iter()
            .enumerate()
            .map(|(i, &v)| v * h.eval(t, center(i, n)))
            .sum::<f64>()
            / n as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .chain(&self.left)
            .chain(&self.right)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Solver bookkeeping carried along with a field.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveLog {
    /// Step size used by the time integrator.
    pub dt: f64,
    pub steps: usize,
    /// Cumulative net inflow `int_0^t (F(1) - F(0)) ds` at each stored time,
    /// summed over every solver step.
    pub inflow: Vec<f64>,
}

/// A density on a uniform grid together with the boundary data that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeField {
    pub data: GridFunction,
    pub bc: BoundaryKind,
    pub m: u32,
    pub alpha: f64,
    pub beta: f64,
    pub log: Option<SolveLog>,
}

impl SpaceTimeField {
    /// Wraps sampled data as a field (no solver log).
    pub fn from_grid(data: GridFunction, bc: BoundaryKind, m: u32, alpha: f64, beta: f64) -> Self {
        SpaceTimeField {
            data,
            bc,
            m,
            alpha,
            beta,
            log: None,
        }
    }

    pub fn cells(&self) -> usize {
        self.data.cells
    }

    pub fn times(&self) -> &[f64] {
        &self.data.times
    }

    pub fn du(&self) -> f64 {
        self.data.du()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        self.data.row(k)
    }

    pub fn left_trace(&self, k: usize) -> f64 {
        self.data.left[k]
    }

    pub fn right_trace(&self, k: usize) -> f64 {
        self.data.right[k]
    }

    /// Value at the last stored time.
    pub fn last_row(&self) -> &[f64] {
        self.row(self.times().len() - 1)
    }

    /// Index of the stored time equal to `t` (within roundoff).
    pub fn time_index(&self, t: f64) -> Result<usize> {
        let times = self.times();
        let tol = 1e-9 * times.last().copied().unwrap_or(1.0).max(1.0);
        times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .ok_or_else(|| Error::Precondition(format!("t = {t} is not a stored time")))
    }

    /// `psi = rho^m` with the same traces convention.
    pub fn power_m(&self) -> GridFunction {
        let m = self.m as i32;
        self.data.map(|v| v.powi(m))
    }
}

/// `<<f1 - f2, f1 - f2>>^(1/2)` over `[0,T] x [0,1]`.
pub fn l2_spacetime_distance(f1: &SpaceTimeField, f2: &SpaceTimeField) -> Result<f64> {
    l2_grid_distance(&f1.data, &f2.data)
}

pub fn l2_grid_distance(f1: &GridFunction, f2: &GridFunction) -> Result<f64> {
    f1.same_grid(f2)?;
    let du = f1.du();
    let per_time: Vec<f64> = (0..f1.times.len())
        .map(|k| {
            f1.row(k)
                .iter()
                .zip(f2.row(k))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                * du
        })
        .collect();
    Ok(trapezoid(&f1.times, &per_time).sqrt())
}

/// Where the boundary values in a trace defect come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSource {
    /// The traces stored with the field.
    Recorded,
    /// First and last cell values.
    NearestCell,
}

/// `(int_0^T (rho(0) - alpha)^2 + (rho(1) - beta)^2 ds)^(1/2)`.
pub fn dirichlet_trace_defect(field: &SpaceTimeField, source: TraceSource) -> f64 {
    let n = field.cells();
    let per_time: Vec<f64> = (0..field.times().len())
        .map(|k| {
            let (l, r) = match source {
                TraceSource::Recorded => (field.left_trace(k), field.right_trace(k)),
                TraceSource::NearestCell => (field.row(k)[0], field.row(k)[n - 1]),
            };
            (l - field.alpha).powi(2) + (r - field.beta).powi(2)
        })
        .collect();
    trapezoid(field.times(), &per_time).sqrt()
}

/// Uniform time grid with `intervals + 1` points on `[0, t_final]`.
pub fn uniform_times(t_final: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals)
        .map(|k| t_final * k as f64 / intervals as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn field(g: GridFunction) -> SpaceTimeField {
        SpaceTimeField::from_grid(g, BoundaryKind::Neumann, 1, 0.2, 0.8)
    }

    #[test]
    fn l2_examples() {
        let times = uniform_times(2.0, 10);
        let one = field(GridFunction::from_fn(40, &times, TraceRule::Exact, |_, _| 1.0));
        let zero = field(GridFunction::from_fn(40, &times, TraceRule::Exact, |_, _| 0.0));
        assert_eq!(l2_spacetime_distance(&one, &one).unwrap(), 0.0);
        assert!((l2_spacetime_distance(&one, &zero).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        let s = field(GridFunction::from_fn(40, &times, TraceRule::Exact, |_, u| {
            (PI * u).sin()
        }));
        assert!((l2_spacetime_distance(&s, &zero).unwrap() - 1.0).abs() < 1e-12);
        let coarse = field(GridFunction::from_fn(20, &times, TraceRule::Exact, |_, _| 0.0));
        assert!(matches!(
            l2_spacetime_distance(&one, &coarse),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn trace_rules() {
        let times = uniform_times(1.0, 2);
        let g = GridFunction::from_fn(10, &times, TraceRule::NearestCell, |_, u| u);
        assert_eq!(g.left[0], 0.05);
        assert_eq!(g.right[2], 0.95);
        let g = GridFunction::from_fn(10, &times, TraceRule::Exact, |_, u| u);
        assert_eq!(g.left[0], 0.0);
        assert_eq!(g.right[2], 1.0);
    }

    #[test]
    fn trace_defect_sources() {
        let times = uniform_times(1.0, 4);
        let g = GridFunction::from_fn(10, &times, TraceRule::Exact, |_, u| 0.2 + 0.6 * u);
        let f = field(g);
        assert!(dirichlet_trace_defect(&f, TraceSource::Recorded) < 1e-15);
        let near = dirichlet_trace_defect(&f, TraceSource::NearestCell);
        assert!((near - (2.0 * 0.03f64.powi(2)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let t = uniform_times(3.0, 7);
        let f: Vec<f64> = t.iter().map(|s| 2.0 * s + 1.0).collect();
        assert!((trapezoid(&t, &f) - 12.0).abs() < 1e-13);
    }
}
