//! Weak-form residuals of solver fields.

use super::bc::{BoundarySample, Reservoirs};
use super::field::{center, trapezoid, SpaceTimeField};
use super::testfn::TestFunction;
use crate::error::Result;

/// Absolute value of
/// `<rho_t,G_t> - <rho_0,G_0> - int_0^t [<rho, d_s G> + <rho^m, G''> + B_s] ds`
/// where `B_s` is the boundary term of the field's condition, evaluated on the
/// field's own grid and traces.
pub fn weak_form_residual(field: &SpaceTimeField, g: &TestFunction, t: f64) -> Result<f64> {
    let bc = field.bc.strategy();
    bc.admits(g)?;
    let k_end = field.time_index(t)?;
    let res = Reservoirs {
        alpha: field.alpha,
        beta: field.beta,
        m: field.m,
    };
    let n = field.cells();
    let du = field.du();
    let m = field.m as i32;
    let times = &field.times()[..=k_end];

    let integrand: Vec<f64> = times
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let row = field.row(k);
            let bulk: f64 = row
                .iter()
                .enumerate()
                .map(|(i, &r)| {
                    let u = center(i, n);
                    r * g.dt(s, u) + r.powi(m) * g.duu(s, u)
                })
                .sum::<f64>()
                * du;
            let (g0, g1) = g.boundary_values(s);
            let sample = BoundarySample {
                rho0: field.left_trace(k),
                rho1: field.right_trace(k),
                g0,
                g1,
                dg0: g.du(s, 0.0),
                dg1: g.du(s, 1.0),
            };
            bulk + bc.boundary_term(&sample, res)
        })
        .collect();

    let lhs = field.data.pairing(k_end, g) - field.data.pairing(0, g);
    Ok((lhs - trapezoid(times, &integrand)).abs())
}

/// Largest residual over all stored times.
pub fn max_weak_form_residual(field: &SpaceTimeField, g: &TestFunction) -> Result<f64> {
    let mut worst = 0.0f64;
    for &t in field.times() {
        worst = worst.max(weak_form_residual(field, g, t)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::params::ModelParams;
    use crate::pde::bc::{BoundaryKind, Dirichlet, Robin};
    use crate::pde::profile::Profile;
    use crate::pde::solver::{solve, SolveOptions};
    use crate::pde::testfn::SpaceBasis;

    fn params(alpha: f64, beta: f64) -> ModelParams {
        ModelParams {
            m: 2,
            alpha,
            beta,
            t_final: 0.1,
            ..ModelParams::default()
        }
    }

    #[test]
    fn constant_solution_has_tiny_residual() {
        let p = params(0.3, 0.3);
        let f = solve(
            &Profile::Constant(0.3),
            &p,
            &Robin { kappa: 2.0 },
            &SolveOptions::new(200, 0.4).with_snapshots(50),
        )
        .unwrap();
        let g = TestFunction::term(1.0, vec![1.0, 2.0], SpaceBasis::Cos(1))
            + TestFunction::spatial(0.5, SpaceBasis::Mono(3));
        assert!(max_weak_form_residual(&f, &g).unwrap() < 1e-8);
    }

    #[test]
    fn g_one_is_the_mass_balance() {
        let p = params(0.2, 0.8);
        let f = solve(
            &Profile::Constant(0.5),
            &p,
            &Robin { kappa: 1.5 },
            &SolveOptions::new(50, 0.4).with_snapshots(4000),
        )
        .unwrap();
        // With G = 1 only the time quadrature of the boundary flux remains.
        let r = max_weak_form_residual(&f, &TestFunction::constant(1.0)).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn dirichlet_rejects_non_vanishing_g() {
        let p = params(0.2, 0.8);
        let f = solve(
            &Profile::Constant(0.5),
            &p,
            &Dirichlet,
            &SolveOptions::new(16, 0.4).with_snapshots(4),
        )
        .unwrap();
        assert_eq!(f.bc, BoundaryKind::Dirichlet);
        let err = weak_form_residual(&f, &TestFunction::constant(1.0), 0.1).unwrap_err();
        assert!(matches!(err, Error::ClassMismatch(_)));
        assert!(weak_form_residual(&f, &TestFunction::spatial(1.0, SpaceBasis::Sin(1)), 0.1).is_ok());
        assert!(weak_form_residual(&f, &TestFunction::spatial(1.0, SpaceBasis::Sin(1)), 0.033).is_err());
    }
}
