//! Initial value problems in both coordinates and the regular series start
//! through a fixed point of the action.

use super::rk45::{self, StepperOptions, StopReason};
use super::{BlowUp, Provenance, RadialSolution};
use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::geometry::{EndpointBehavior, GeometrySpec};
use crate::reduction::{Coordinate, RadialODE};
use std::sync::Arc;

fn stepper_options(tol: f64, window: (f64, f64)) -> StepperOptions {
    let len = window.1 - window.0;
    StepperOptions {
        rtol: tol,
        atol: tol,
        max_steps: 1_000_000,
        max_step: f64::INFINITY,
        dense_spacing: (len / 512.0).clamp(1e-4, 0.02),
    }
}

fn check_window(ode: &RadialODE, window: (f64, f64), x_init: f64) -> Result<()> {
    let (lo, hi) = ode.domain;
    if !(window.0 < window.1) {
        return Err(Error::InvalidArgument(format!(
            "window ({}, {}) is empty",
            window.0, window.1
        )));
    }
    if window.0 < lo || window.1 > hi {
        return Err(Error::OutsideDomain {
            point: if window.0 < lo { window.0 } else { window.1 },
            lo,
            hi,
        });
    }
    if !(x_init >= window.0 && x_init <= window.1) {
        return Err(Error::OutsideDomain {
            point: x_init,
            lo: window.0,
            hi: window.1,
        });
    }
    Ok(())
}

/// Integrate outward from the start point to both window ends and merge the
/// passes. A step-size underflow terminates a pass early and is reported via
/// `blow_up`; the solution covers the maximal subwindow reached.
fn integrate_both_ways(
    ode: &RadialODE,
    x_init: f64,
    u0: f64,
    du0: f64,
    window: (f64, f64),
    tol: f64,
    provenance: Provenance,
) -> Result<RadialSolution> {
    let opts = stepper_options(tol, window);
    let rhs = |x: f64, y: [f64; 2]| -> Result<[f64; 2]> { Ok([y[1], ode.rhs(x, y[0], y[1])?]) };

    let mut grid = Vec::new();
    let mut vals = Vec::new();
    let mut ders = Vec::new();
    let mut blow_up = None;

    if x_init > window.0 {
        let back = rk45::integrate(rhs, x_init, window.0, [u0, du0], &opts)?;
        if let StopReason::StepUnderflow { location, step } = back.stop {
            blow_up = Some(BlowUp { location, step });
        }
        for (t, y) in back.ts.iter().zip(&back.ys).skip(1).rev() {
            grid.push(*t);
            vals.push(y[0]);
            ders.push(y[1]);
        }
    }
    grid.push(x_init);
    vals.push(u0);
    ders.push(du0);
    if x_init < window.1 {
        let fwd = rk45::integrate(rhs, x_init, window.1, [u0, du0], &opts)?;
        if let StopReason::StepUnderflow { location, step } = fwd.stop {
            blow_up = Some(BlowUp { location, step });
        }
        for (t, y) in fwd.ts.iter().zip(&fwd.ys).skip(1) {
            grid.push(*t);
            vals.push(y[0]);
            ders.push(y[1]);
        }
    }

    let mut sol = RadialSolution::new(ode.coordinate, grid, vals, ders, provenance)?;
    sol.blow_up = blow_up;
    Ok(sol)
}

/// Solve the reduced ODE u'' + (ln A)'u' = f(r,u) from interior data.
pub fn solve_ivp(
    ode: &RadialODE,
    r_init: f64,
    u0: f64,
    du0: f64,
    window: (f64, f64),
    tol: f64,
) -> Result<RadialSolution> {
    if ode.coordinate != Coordinate::RCoordinate {
        return Err(Error::InvalidArgument(
            "solve_ivp expects an r-coordinate ODE (use solve_ivp_transformed)".to_string(),
        ));
    }
    check_window(ode, window, r_init)?;
    integrate_both_ways(ode, r_init, u0, du0, window, tol, Provenance::Ivp)
}

/// Solve the transformed ODE z'' = A(r(s))² f(r(s), z) from interior data.
pub fn solve_ivp_transformed(
    ode_s: &RadialODE,
    s0: f64,
    z0: f64,
    dz0: f64,
    window: (f64, f64),
    tol: f64,
) -> Result<RadialSolution> {
    if ode_s.coordinate != Coordinate::SCoordinate {
        return Err(Error::InvalidArgument(
            "solve_ivp_transformed expects an s-coordinate ODE".to_string(),
        ));
    }
    check_window(ode_s, window, s0)?;
    integrate_both_ways(ode_s, s0, z0, dz0, window, tol, Provenance::Ivp)
}

/// Extend an initial value through a fixed point of the action: starts with
/// the regular series u(ε) ≈ u0 + f(p,u0)·ε²/(2n), u'(ε) ≈ f(p,u0)·ε/n and
/// hands off to the adaptive integrator. The returned solution includes the
/// pole node u(p) = u0, u'(p) = 0.
pub fn solve_from_pole(
    geom: Arc<GeometrySpec>,
    f: &Expr,
    u0: f64,
    window: (f64, f64),
    tol: f64,
) -> Result<RadialSolution> {
    if !geom.fixed_point_at_lo {
        return Err(Error::Geometry(
            "solve_from_pole needs a fixed point at the lower endpoint".to_string(),
        ));
    }
    let pole = geom.domain().0;
    let n = match geom.orbit_volume.behavior_lo {
        Some(EndpointBehavior::Power(k)) => {
            let n = k.round() + 1.0;
            if (k - k.round()).abs() > 1e-6 || n < 2.0 {
                return Err(Error::Geometry(format!(
                    "pole order {} is not an integer n−1 with n ≥ 2; no regular series start",
                    k
                )));
            }
            n
        }
        other => {
            return Err(Error::Geometry(format!(
                "endpoint behavior {:?} admits no series start",
                other
            )))
        }
    };
    let w_hi = window.1;
    if !(w_hi > pole && w_hi < geom.domain().1) {
        return Err(Error::OutsideDomain {
            point: w_hi,
            lo: pole,
            hi: geom.domain().1,
        });
    }
    let f0 = f.eval(&Bindings::new().r(pole).y(u0))?;
    let eps = (1e-4 * (w_hi - pole).min(1.0)).max(1e-8);
    let u_eps = u0 + f0 * eps * eps / (2.0 * n);
    let du_eps = f0 * eps / n;

    let ode = crate::reduction::reduce(geom, f.clone())?;
    let inner = integrate_both_ways(
        &ode,
        pole + eps,
        u_eps,
        du_eps,
        (pole + eps, w_hi),
        tol,
        Provenance::PoleSeries,
    )?;

    let mut grid = vec![pole];
    let mut vals = vec![u0];
    let mut ders = vec![0.0];
    grid.extend_from_slice(&inner.grid);
    vals.extend_from_slice(&inner.values);
    ders.extend_from_slice(&inner.derivatives);
    let mut sol = RadialSolution::new(
        Coordinate::RCoordinate,
        grid,
        vals,
        ders,
        Provenance::PoleSeries,
    )?;
    sol.blow_up = inner.blow_up;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::geometry::{model_space, warped_r3, ModelKind};
    use crate::reduction::{build_change_of_variables, reduce, transform};

    #[test]
    fn constant_solution_for_zero_forcing() {
        let g = Arc::new(model_space(ModelKind::Euclidean, 2).unwrap());
        let ode = reduce(g, parse_expr("0").unwrap()).unwrap();
        let sol = solve_ivp(&ode, 1.0, 3.5, 0.0, (0.5, 5.0), 1e-10).unwrap();
        for x in [0.5, 1.7, 4.9] {
            assert!((sol.eval(x).unwrap() - 3.5).abs() < 1e-12);
            assert!(sol.eval_deriv(x).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn sinc_oracle_on_r3() {
        // Δu = f with f = −y on ℝ³: u = sin(r)/r from the pole with u0 = 1
        let g = Arc::new(model_space(ModelKind::Euclidean, 3).unwrap());
        let f = parse_expr("-y").unwrap();
        let sol = solve_from_pole(g, &f, 1.0, (0.0, 10.0), 1e-8).unwrap();
        assert_eq!(sol.eval(0.0).unwrap(), 1.0);
        let mut sup: f64 = 0.0;
        for i in 0..=1000 {
            let r = 1e-3 + (10.0 - 1e-3) * i as f64 / 1000.0;
            let exact = r.sin() / r;
            sup = sup.max((sol.eval(r).unwrap() - exact).abs());
        }
        assert!(sup < 1e-6, "sup error {}", sup);
    }

    #[test]
    fn cosine_oracle_on_sphere() {
        // Δu = −2u on S²: u = cos r; start mid-domain with u(π/2)=0, u'=−1
        let g = Arc::new(model_space(ModelKind::Sphere, 2).unwrap());
        let ode = reduce(g, parse_expr("-2*y").unwrap()).unwrap();
        let half_pi = std::f64::consts::FRAC_PI_2;
        let eps = 1e-3;
        let sol = solve_ivp(
            &ode,
            half_pi,
            0.0,
            -1.0,
            (eps, std::f64::consts::PI - eps),
            1e-8,
        )
        .unwrap();
        let mut sup: f64 = 0.0;
        for i in 0..=500 {
            let r = eps + (std::f64::consts::PI - 2.0 * eps) * i as f64 / 500.0;
            sup = sup.max((sol.eval(r).unwrap() - r.cos()).abs());
        }
        assert!(sup < 1e-6, "sup error {}", sup);
    }

    #[test]
    fn cosine_from_pole_on_sphere() {
        let g = Arc::new(model_space(ModelKind::Sphere, 2).unwrap());
        let f = parse_expr("-2*y").unwrap();
        let sol = solve_from_pole(g, &f, 1.0, (0.0, std::f64::consts::PI - 1e-3), 1e-8).unwrap();
        assert_eq!(sol.eval(0.0).unwrap(), 1.0);
        assert_eq!(sol.eval_deriv(0.0).unwrap(), 0.0);
        let mut sup: f64 = 0.0;
        for i in 0..=500 {
            let r = 1e-3 + (std::f64::consts::PI - 2e-3) * i as f64 / 500.0;
            sup = sup.max((sol.eval(r).unwrap() - r.cos()).abs());
        }
        assert!(sup < 1e-6, "sup error {}", sup);
    }

    #[test]
    fn pole_series_derivative_bound() {
        let g = Arc::new(model_space(ModelKind::Euclidean, 3).unwrap());
        let f = parse_expr("-y").unwrap();
        let sol = solve_from_pole(g, &f, 1.0, (0.0, 2.0), 1e-9).unwrap();
        // |u'(ε)| ≤ (|f(0,u0)|/n)·ε·1.1 at the first interior node
        let eps = sol.grid[1];
        let bound = (1.0 / 3.0) * eps * 1.1;
        assert!(sol.derivatives[1].abs() <= bound);
    }

    #[test]
    fn pole_rejected_without_integer_order() {
        let a = parse_expr("2*pi*sqrt(r)").unwrap();
        let g = Arc::new(
            crate::geometry::from_orbit_volume_expr("sqrt", &a, (0.0, f64::INFINITY), 3).unwrap(),
        );
        let f = parse_expr("-y").unwrap();
        assert!(solve_from_pole(g, &f, 1.0, (0.0, 2.0), 1e-8).is_err());
    }

    #[test]
    fn transformed_constant_forcing_parabola() {
        // warped ℝ³, f = 1: z'' = π², z(0) = z'(0) = 0 -> z = π² s²/2
        let g = Arc::new(warped_r3());
        let ode = reduce(g.clone(), parse_expr("1").unwrap()).unwrap();
        let cov = Arc::new(build_change_of_variables(g, Some(0.0)).unwrap());
        let tr = transform(&ode, cov).unwrap();
        let sol = solve_ivp_transformed(&tr, 0.0, 0.0, 0.0, (-1.0, 1.0), 1e-10).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        for s in [-0.9, -0.3, 0.4, 0.8] {
            let expect = pi2 * s * s / 2.0;
            assert!(
                (sol.eval(s).unwrap() - expect).abs() < 1e-8,
                "z({}) = {} vs {}",
                s,
                sol.eval(s).unwrap(),
                expect
            );
        }
    }

    #[test]
    fn free_motion_is_affine() {
        let g = Arc::new(warped_r3());
        let ode = reduce(g.clone(), parse_expr("0").unwrap()).unwrap();
        let cov = Arc::new(build_change_of_variables(g, Some(0.0)).unwrap());
        let tr = transform(&ode, cov).unwrap();
        let sol = solve_ivp_transformed(&tr, 0.5, 2.0, 3.0, (-2.0, 2.0), 1e-10).unwrap();
        for s in [-1.5, 0.0, 1.9] {
            assert!((sol.eval(s).unwrap() - (2.0 + 3.0 * (s - 0.5))).abs() < 1e-10);
        }
    }

    #[test]
    fn blow_up_reports_partial_window() {
        // u'' = u³ from u(0)=2, u'(0)=10: finite-time blow-up well before r=10
        let g = Arc::new(warped_r3());
        let ode = reduce(g, parse_expr("y^3").unwrap()).unwrap();
        let sol = solve_ivp(&ode, 0.0, 2.0, 10.0, (0.0, 10.0), 1e-8).unwrap();
        let flag = sol.blow_up.expect("blow-up expected");
        assert!(flag.location < 10.0);
        assert!(sol.window().1 < 10.0);
    }

    #[test]
    fn energy_decays_where_drift_is_nonnegative() {
        // f = −λy with (ln A)' ≥ 0: E = ½u'² + ½λu² is nonincreasing in r
        let g = Arc::new(model_space(ModelKind::Euclidean, 3).unwrap());
        let f = parse_expr("-y").unwrap();
        let sol = solve_from_pole(g, &f, 1.0, (0.0, 12.0), 1e-10).unwrap();
        let lambda = 1.0;
        let mut prev = f64::INFINITY;
        for i in 0..=600 {
            let r = 0.05 + (12.0 - 0.1) * i as f64 / 600.0;
            let u = sol.eval(r).unwrap();
            let du = sol.eval_deriv(r).unwrap();
            let e = 0.5 * du * du + 0.5 * lambda * u * u;
            assert!(e <= prev + 1e-10, "energy grew at r = {}: {} > {}", r, e, prev);
            prev = e;
        }
    }

    #[test]
    fn window_must_sit_inside_domain() {
        let g = Arc::new(model_space(ModelKind::Sphere, 2).unwrap());
        let ode = reduce(g, parse_expr("0").unwrap()).unwrap();
        assert!(solve_ivp(&ode, 1.0, 0.0, 0.0, (0.5, 4.0), 1e-8).is_err());
    }
}
