//! Weighted norms, the energy functional and boundary checks on discrete fields.
//!
//! Space discretization. Nodes are `0`, the cell centers and `1`; the node
//! values of `psi = xi^m` are the recorded traces and the cell values. The
//! `N + 1` intervals between consecutive nodes have widths `du/2, du, ..., du,
//! du/2` and each contains exactly one face `f/N`. A function `H` enters the
//! weighted bracket through its face values, and `d psi / du` is the node
//! difference quotient on each interval. At `u = 0` and `u = 1` the
//! reservoir terms use the derivative the Robin law assigns to the trace,
//! `B(0) = kappa (xi(0) - alpha)` and `B(1) = kappa (beta - xi(1))`.
//!
//! With these choices the discrete `T(H)` sums by parts exactly and
//! `sup <= dual` follows from Cauchy-Schwarz for any traces. Equality up to
//! the half-interval masses holds when `B` also matches the first interior face
//! difference (see [`robin_consistent_traces`]). Time integrals use the
//! trapezoid rule on the stored times.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::p_poly;
use crate::params::ModelParams;
use crate::pde::field::{center, trapezoid};
use crate::pde::{GridFunction, SpaceBasis, SpaceTimeField, TestFunction};

/// Default energy constant `m + m^2 + 1`.
pub fn default_c(m: u32) -> f64 {
    let m = m as f64;
    m + m * m + 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParams {
    pub c: f64,
    pub kappa: f64,
    pub m: u32,
    pub alpha: f64,
    pub beta: f64,
    /// Recorded bound on the energy, reused across `kappa`.
    pub m0: Option<f64>,
}

impl EnergyParams {
    pub fn new(c: f64, kappa: f64, m: u32, alpha: f64, beta: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("c", c, "(0, inf)"));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(invalid("kappa", kappa, "(0, inf)"));
        }
        if m == 0 {
            return Err(invalid("m", m, "{1, 2, ...}"));
        }
        Ok(EnergyParams {
            c,
            kappa,
            m,
            alpha,
            beta,
            m0: None,
        })
    }

    /// Takes `m`, `kappa`, `alpha`, `beta` from the model and `c` by default.
    pub fn from_model(p: &ModelParams) -> Result<Self> {
        Self::new(default_c(p.m), p.kappa, p.m, p.alpha, p.beta)
    }

    pub fn with_c(mut self, c: f64) -> Result<Self> {
        self.c = c;
        Self::new(c, self.kappa, self.m, self.alpha, self.beta).map(|e| Self { m0: self.m0, ..e })
    }

    pub fn with_kappa(self, kappa: f64) -> Result<Self> {
        Self::new(self.c, kappa, self.m, self.alpha, self.beta).map(|e| Self { m0: self.m0, ..e })
    }

    pub fn with_m0(mut self, m0: f64) -> Self {
        self.m0 = Some(m0);
        self
    }

    fn weights(&self, xi0: f64, xi1: f64) -> (f64, f64) {
        (
            p_poly(self.alpha, xi0, self.m) / self.kappa,
            p_poly(self.beta, xi1, self.m) / self.kappa,
        )
    }
}

/// Face values `H(t_k, f/N)`, `f = 0..=N`, of a function on a field's grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaceField {
    pub cells: usize,
    pub times: Vec<f64>,
    /// Row-major, `cells + 1` values per time.
    pub values: Vec<f64>,
}

impl FaceField {
    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * (self.cells + 1)..(k + 1) * (self.cells + 1)]
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= s);
        self
    }
}

/// A direction `H` in the weighted space: a closed-form test function or
/// values sampled on the faces of a particular grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Probe {
    Smooth(TestFunction),
    Sampled(FaceField),
}

impl From<TestFunction> for Probe {
    fn from(h: TestFunction) -> Self {
        Probe::Smooth(h)
    }
}

impl From<FaceField> for Probe {
    fn from(f: FaceField) -> Self {
        Probe::Sampled(f)
    }
}

impl Probe {
    /// Face values on the grid of `xi`.
    pub fn faces(&self, cells: usize, times: &[f64]) -> Result<FaceField> {
        match self {
            Probe::Smooth(h) => {
                let mut values = Vec::with_capacity((cells + 1) * times.len());
                for &t in times {
                    let (l, r) = h.boundary_values(t);
                    values.push(l);
                    values.extend((1..cells).map(|f| h.eval(t, f as f64 / cells as f64)));
                    values.push(r);
                }
                Ok(FaceField {
                    cells,
                    times: times.to_vec(),
                    values,
                })
            }
            Probe::Sampled(f) => {
                if f.cells != cells || f.times != times {
                    return Err(Error::GridMismatch(format!(
                        "probe on {} cells x {} times, field on {cells} x {}",
                        f.cells,
                        f.times.len(),
                        times.len()
                    )));
                }
                Ok(f.clone())
            }
        }
    }
}

fn widths(cells: usize) -> impl Iterator<Item = f64> {
    let du = 1.0 / cells as f64;
    (0..=cells).map(move |j| if j == 0 || j == cells { 0.5 * du } else { du })
}

fn check_cells(cells: usize) -> Result<()> {
    if cells < 3 {
        Err(Error::Precondition(format!("{cells} cells: need at least 3")))
    } else {
        Ok(())
    }
}

/// Node values `[psi(0), psi_1, ..., psi_N, psi(1)]` at time index `k`.
fn psi_nodes(xi: &SpaceTimeField, k: usize) -> Vec<f64> {
    let m = xi.m as i32;
    let mut out = Vec::with_capacity(xi.cells() + 2);
    out.push(xi.left_trace(k).powi(m));
    out.extend(xi.row(k).iter().map(|v| v.powi(m)));
    out.push(xi.right_trace(k).powi(m));
    out
}

/// Interval difference quotients of node values.
fn interval_derivative(nodes: &[f64]) -> Vec<f64> {
    let cells = nodes.len() - 2;
    nodes
        .windows(2)
        .zip(widths(cells))
        .map(|(w, h)| (w[1] - w[0]) / h)
        .collect()
}

/// First and last interior face differences of the cell values.
fn boundary_derivative(nodes: &[f64], du: f64) -> (f64, f64) {
    let n = nodes.len() - 2;
    ((nodes[2] - nodes[1]) / du, (nodes[n] - nodes[n - 1]) / du)
}

/// `(B(0), B(1)) = (kappa (xi(0) - alpha), kappa (beta - xi(1)))`: the boundary
/// derivatives the Robin law assigns to the recorded traces. With these the
/// dual value bounds the supremum for any traces, and the two agree when the
/// traces are consistent with the interior differences.
fn reservoir_derivative(xi: &SpaceTimeField, k: usize, kappa: f64) -> (f64, f64) {
    (
        kappa * (xi.left_trace(k) - xi.alpha),
        kappa * (xi.beta - xi.right_trace(k)),
    )
}

/// Weighted inner product of two face rows at one time.
fn bracket_row(f: &[f64], h: &[f64], w0: f64, w1: f64) -> f64 {
    let n = f.len() - 1;
    let bulk: f64 = f
        .iter()
        .zip(h)
        .zip(widths(n))
        .map(|((a, b), w)| w * a * b)
        .sum();
    bulk + w0 * f[0] * h[0] + w1 * f[n] * h[n]
}

/// `<<F, H>>_{kappa, xi}`.
pub fn weighted_pairing(f: &Probe, h: &Probe, xi: &SpaceTimeField, ep: &EnergyParams) -> Result<f64> {
    let n = xi.cells();
    check_cells(n)?;
    let ff = f.faces(n, xi.times())?;
    let hf = h.faces(n, xi.times())?;
    let per_time: Vec<f64> = (0..xi.times().len())
        .map(|k| {
            let (w0, w1) = ep.weights(xi.left_trace(k), xi.right_trace(k));
            bracket_row(ff.row(k), hf.row(k), w0, w1)
        })
        .collect();
    Ok(trapezoid(xi.times(), &per_time))
}

/// `<<H, H>>_{kappa, xi}`: plain space-time norm plus the reservoir masses
/// `P(xi(0)) H(0)^2 / kappa` and `P(xi(1)) H(1)^2 / kappa`.
pub fn weighted_bracket(h: &Probe, xi: &SpaceTimeField, ep: &EnergyParams) -> Result<f64> {
    weighted_pairing(h, h, xi, ep)
}

/// Plain `<<H, H>>` (no reservoir masses).
pub fn plain_bracket(h: &Probe, xi: &SpaceTimeField) -> Result<f64> {
    let n = xi.cells();
    check_cells(n)?;
    let hf = h.faces(n, xi.times())?;
    let per_time: Vec<f64> = (0..xi.times().len())
        .map(|k| bracket_row(hf.row(k), hf.row(k), 0.0, 0.0))
        .collect();
    Ok(trapezoid(xi.times(), &per_time))
}

fn t_row(psi_cells: &[f64], h: &[f64], am: f64, bm: f64) -> f64 {
    let n = psi_cells.len();
    let bulk: f64 = psi_cells
        .iter()
        .enumerate()
        .map(|(i, p)| p * (h[i + 1] - h[i]))
        .sum();
    bulk + am * h[0] - bm * h[n]
}

/// `T(H) = <<xi^m, dH/du>> + int (alpha^m H(0) - beta^m H(1)) ds`, with
/// `alpha`, `beta` taken from the field.
pub fn t_functional(h: &Probe, xi: &SpaceTimeField, m: u32) -> Result<f64> {
    let n = xi.cells();
    check_cells(n)?;
    let hf = h.faces(n, xi.times())?;
    let m = m as i32;
    let (am, bm) = (xi.alpha.powi(m), xi.beta.powi(m));
    let per_time: Vec<f64> = (0..xi.times().len())
        .map(|k| {
            let psi: Vec<f64> = xi.row(k).iter().map(|v| v.powi(m)).collect();
            t_row(&psi, hf.row(k), am, bm)
        })
        .collect();
    Ok(trapezoid(xi.times(), &per_time))
}

/// Parts of `<<d psi/du, d psi/du>>_{kappa,xi}`: the plain integral and the
/// two reservoir terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualParts {
    pub plain: f64,
    pub left: f64,
    pub right: f64,
}

impl DualParts {
    pub fn total(&self) -> f64 {
        self.plain + self.left + self.right
    }
}

pub fn dual_parts(xi: &SpaceTimeField, ep: &EnergyParams) -> Result<DualParts> {
    let n = xi.cells();
    check_cells(n)?;
    let k_max = xi.times().len();
    let mut plain = Vec::with_capacity(k_max);
    let mut left = Vec::with_capacity(k_max);
    let mut right = Vec::with_capacity(k_max);
    for k in 0..k_max {
        let nodes = psi_nodes(xi, k);
        let d = interval_derivative(&nodes);
        let (b0, b1) = reservoir_derivative(xi, k, ep.kappa);
        let (w0, w1) = ep.weights(xi.left_trace(k), xi.right_trace(k));
        plain.push(d.iter().zip(widths(n)).map(|(v, w)| w * v * v).sum());
        left.push(w0 * b0 * b0);
        right.push(w1 * b1 * b1);
    }
    let t = xi.times();
    Ok(DualParts {
        plain: trapezoid(t, &plain),
        left: trapezoid(t, &left),
        right: trapezoid(t, &right),
    })
}

/// `(1/4c) <<d xi^m/du, d xi^m/du>>_{kappa, xi}`.
pub fn energy_dual(xi: &SpaceTimeField, ep: &EnergyParams) -> Result<f64> {
    Ok(dual_parts(xi, ep)?.total() / (4.0 * ep.c))
}

/// Face values of `d xi^m / du`: node differences inside, `B` at the ends.
pub fn derivative_probe(xi: &SpaceTimeField) -> Result<Probe> {
    let n = xi.cells();
    check_cells(n)?;
    let du = xi.du();
    let mut values = Vec::with_capacity((n + 1) * xi.times().len());
    for k in 0..xi.times().len() {
        let nodes = psi_nodes(xi, k);
        let (b0, b1) = boundary_derivative(&nodes, du);
        values.push(b0);
        values.extend((1..n).map(|f| (nodes[f + 1] - nodes[f]) / du));
        values.push(b1);
    }
    Ok(Probe::Sampled(FaceField {
        cells: n,
        times: xi.times().to_vec(),
        values,
    }))
}

/// Maximizer of `T(H)^2 / <<H,H>>_{kappa,xi}` among face functions: `-d xi^m/du`
/// inside, and at each end the value that balances the half interval against
/// the reservoir mass. For smooth fields the end values are close to `-B`.
pub fn dual_maximizer(xi: &SpaceTimeField, ep: &EnergyParams) -> Result<Probe> {
    let n = xi.cells();
    check_cells(n)?;
    let h_end = 0.5 * xi.du();
    let m = xi.m as i32;
    let (am, bm) = (xi.alpha.powi(m), xi.beta.powi(m));
    let mut values = Vec::with_capacity((n + 1) * xi.times().len());
    for k in 0..xi.times().len() {
        let nodes = psi_nodes(xi, k);
        let d = interval_derivative(&nodes);
        let (w0, w1) = ep.weights(xi.left_trace(k), xi.right_trace(k));
        values.push((-h_end * d[0] - (nodes[0] - am)) / (h_end + w0));
        values.extend(d[1..n].iter().map(|v| -v));
        values.push((-h_end * d[n] + (nodes[n + 1] - bm)) / (h_end + w1));
    }
    Ok(Probe::Sampled(FaceField {
        cells: n,
        times: xi.times().to_vec(),
        values,
    }))
}

/// `T(H)^2 / (4c <<H,H>>_{kappa,xi})`, the maximum of `l T(H) - c l^2 <<H,H>>`
/// over `l`; `None` for zero-norm directions.
pub fn ray_value(h: &Probe, xi: &SpaceTimeField, ep: &EnergyParams) -> Result<Option<f64>> {
    let norm = weighted_bracket(h, xi, ep)?;
    if !(norm > 0.0) {
        return Ok(None);
    }
    let t = t_functional(h, xi, ep.m)?;
    Ok(Some(t * t / (4.0 * ep.c * norm)))
}

/// Restricted supremum of the energy functional over the rays of `dictionary`.
pub fn energy_sup_estimate(xi: &SpaceTimeField, ep: &EnergyParams, dictionary: &[Probe]) -> Result<f64> {
    if dictionary.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    let values: Vec<Option<f64>> = dictionary
        .par_iter()
        .map(|h| ray_value(h, xi, ep))
        .collect::<Result<_>>()?;
    Ok(values.into_iter().flatten().fold(0.0, f64::max))
}

/// `t^p cos(j pi u)` and `t^p sin(j pi u)` for `p <= 2`, `j <= j_max`
/// (`sin 0` omitted).
pub fn dictionary(j_max: u32) -> Vec<Probe> {
    let mut out = Vec::new();
    for p in 0..=2usize {
        let mut poly = vec![0.0; p + 1];
        poly[p] = 1.0;
        for j in 0..=j_max {
            out.push(TestFunction::term(1.0, poly.clone(), SpaceBasis::Cos(j)).into());
            if j > 0 {
                out.push(TestFunction::term(1.0, poly.clone(), SpaceBasis::Sin(j)).into());
            }
        }
    }
    out
}

/// Sets the traces of `data` to `alpha + D0/kappa` and `beta - D1/kappa`, where
/// `D0`, `D1` are the first and last interior face differences of `xi^m`: the
/// values for which the discrete Robin identity holds exactly.
pub fn robin_consistent_traces(data: &mut GridFunction, m: u32, alpha: f64, beta: f64, kappa: f64) -> Result<()> {
    check_cells(data.cells)?;
    let n = data.cells;
    let du = data.du();
    let m = m as i32;
    for k in 0..data.times.len() {
        let row = data.row(k);
        let b0 = (row[1].powi(m) - row[0].powi(m)) / du;
        let b1 = (row[n - 1].powi(m) - row[n - 2].powi(m)) / du;
        data.left[k] = alpha + b0 / kappa;
        data.right[k] = beta - b1 / kappa;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Time-L2 norm of `B(0) - kappa (rho(0) - alpha)` (left) or
/// `B(1) - kappa (beta - rho(1))` (right).
pub fn robin_bc_residual(field: &SpaceTimeField, side: Side, kappa: f64) -> Result<f64> {
    check_cells(field.cells())?;
    let du = field.du();
    let per_time: Vec<f64> = (0..field.times().len())
        .map(|k| {
            let nodes = psi_nodes(field, k);
            let (b0, b1) = boundary_derivative(&nodes, du);
            let r = match side {
                Side::Left => b0 - kappa * (field.left_trace(k) - field.alpha),
                Side::Right => b1 - kappa * (field.beta - field.right_trace(k)),
            };
            r * r
        })
        .collect();
    Ok(trapezoid(field.times(), &per_time).sqrt())
}

/// `max_{s<t} |<rho_t,H_t> - <rho_s,H_s>| / sqrt(t - s)` over stored times.
pub fn holder_modulus(field: &SpaceTimeField, h: &TestFunction) -> Result<f64> {
    let times = field.times();
    if times.len() < 2 {
        return Err(Error::Precondition("need at least two stored times".into()));
    }
    let pair: Vec<f64> = (0..times.len()).map(|k| field.data.pairing(k, h)).collect();
    let mut best = 0.0f64;
    for a in 0..times.len() {
        for b in a + 1..times.len() {
            let dt = times[b] - times[a];
            if dt > 0.0 {
                best = best.max((pair[b] - pair[a]).abs() / dt.sqrt());
            }
        }
    }
    Ok(best)
}

/// A priori constant for [`holder_modulus`] valid for every `kappa <= 1` and
/// densities in `[0,1]`:
/// `sqrt(T) (|dH/dt| + |H''| + 2|H'| + 2|H|)` with sup norms over
/// `[0,T] x [0,1]` (sampled on a 201 x 201 grid).
pub fn holder_bound(h: &TestFunction, t_final: f64) -> f64 {
    let (mut ht, mut huu, mut hu, mut h0) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for a in 0..=200 {
        let t = t_final * a as f64 / 200.0;
        for b in 0..=200 {
            let u = b as f64 / 200.0;
            ht = ht.max(h.dt(t, u).abs());
            huu = huu.max(h.duu(t, u).abs());
            hu = hu.max(h.du(t, u).abs());
            h0 = h0.max(h.eval(t, u).abs());
        }
    }
    t_final.sqrt() * (ht + huu + 2.0 * hu + 2.0 * h0)
}

/// Right side of the boundary averaging bound:
/// `eps^(1/(2(m+1))) + eps^(1/(m+1)) (2^m/3) m^(3/2) ||d rho^m/du||_2`.
pub fn boundary_average_bound(eps: f64, m: u32, grad_norm: f64) -> f64 {
    let mf = m as f64;
    eps.powf(1.0 / (2.0 * (mf + 1.0)))
        + eps.powf(1.0 / (mf + 1.0)) * 2f64.powi(m as i32) / 3.0 * mf.powf(1.5) * grad_norm
}

/// Mean of the piecewise-constant cell values over `[a, b]`.
fn window_average(row: &[f64], a: f64, b: f64) -> f64 {
    let n = row.len();
    let du = 1.0 / n as f64;
    let mut acc = 0.0;
    for (i, &v) in row.iter().enumerate() {
        let lo = (i as f64 * du).max(a);
        let hi = ((i + 1) as f64 * du).min(b);
        if hi > lo {
            acc += v * (hi - lo);
        }
    }
    acc / (b - a)
}

/// `max_s [ |rho_s(0) - avg_{[j eps, (j+1) eps]} rho_s| - bound_s ]`, and the
/// same at `u = 1` with the mirrored window. Nonpositive when the bound holds.
pub fn boundary_average_defect(field: &SpaceTimeField, j: u32, eps: f64) -> Result<f64> {
    let n = field.cells();
    check_cells(n)?;
    if j >= field.m {
        return Err(Error::Precondition(format!("j = {j} must be below m = {}", field.m)));
    }
    if !(eps > 0.0) || eps * (j + 1) as f64 > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!(
            "window [{j} eps, {} eps] with eps = {eps} leaves [0,1]",
            j + 1
        )));
    }
    if field.du() > eps / 4.0 {
        return Err(Error::Precondition(format!(
            "grid step {} does not resolve eps = {eps}",
            field.du()
        )));
    }
    let a = j as f64 * eps;
    let b = a + eps;
    let mut worst = f64::NEG_INFINITY;
    for k in 0..field.times().len() {
        let nodes = psi_nodes(field, k);
        let d = interval_derivative(&nodes);
        let grad = d
            .iter()
            .zip(widths(n))
            .map(|(v, w)| w * v * v)
            .sum::<f64>()
            .sqrt();
        let bound = boundary_average_bound(eps, field.m, grad);
        let row = field.row(k);
        let left = (field.left_trace(k) - window_average(row, a, b)).abs();
        let right = (field.right_trace(k) - window_average(row, 1.0 - b, 1.0 - a)).abs();
        worst = worst.max(left.max(right) - bound);
    }
    Ok(worst)
}

/// `| int <d zeta/du, G> + int <zeta, dG/du> - int (zeta(1)G(1) - zeta(0)G(0)) |`
/// with cell-centered differences (centered inside, one-sided in the end
/// cells), midpoint pairings and the recorded traces.
pub fn integration_by_parts_check(zeta: &SpaceTimeField, g: &TestFunction) -> Result<f64> {
    let n = zeta.cells();
    check_cells(n)?;
    let du = zeta.du();
    let per_time: Vec<f64> = zeta
        .times()
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let z = zeta.row(k);
            let mut lhs = 0.0;
            for i in 0..n {
                let dz = if i == 0 {
                    (z[1] - z[0]) / du
                } else if i == n - 1 {
                    (z[n - 1] - z[n - 2]) / du
                } else {
                    (z[i + 1] - z[i - 1]) / (2.0 * du)
                };
                let u = center(i, n);
                lhs += du * (dz * g.eval(t, u) + z[i] * g.du(t, u));
            }
            let (g0, g1) = g.boundary_values(t);
            lhs - (zeta.right_trace(k) * g1 - zeta.left_trace(k) * g0)
        })
        .collect();
    Ok(trapezoid(zeta.times(), &per_time).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub dual_value: f64,
    pub sup_value: f64,
    pub left_bc_residual: f64,
    pub right_bc_residual: f64,
    pub holder_modulus: f64,
    pub dictionary_size: usize,
}

/// Full report; the dictionary is extended by [`dual_maximizer`].
pub fn energy_report(
    xi: &SpaceTimeField,
    ep: &EnergyParams,
    dictionary: &[Probe],
    holder_probe: &TestFunction,
) -> Result<EnergyReport> {
    let mut dict = dictionary.to_vec();
    dict.push(dual_maximizer(xi, ep)?);
    Ok(EnergyReport {
        dual_value: energy_dual(xi, ep)?,
        sup_value: energy_sup_estimate(xi, ep, &dict)?,
        left_bc_residual: robin_bc_residual(xi, Side::Left, ep.kappa)?,
        right_bc_residual: robin_bc_residual(xi, Side::Right, ep.kappa)?,
        holder_modulus: holder_modulus(xi, holder_probe)?,
        dictionary_size: dict.len(),
    })
}
