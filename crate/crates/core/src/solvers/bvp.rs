//! The singular two-point boundary value problem on the rescaled interval:
//!
//!   w'' + Ã(t)² f̃(t, w) = 0 on (0,1),  αw(0) − βw'(0) = 0,  γw(1) + δw'(1) = 0
//!
//! with Ã(t) = (c2−c1)·A(r(s(t))), s = (c2−c1)t + c1. The nonlinearity may
//! blow up as w → 0⁺; it is regularized by f_ε(t, w) = f̃(t, max(w, ε)) and
//! continued along the ladder ε_k = ε₀·2^(−k), shooting on the free initial
//! parameter with bisection plus secant acceleration once bracketed.

use super::rk45::{self, StepperOptions, StopReason};
use super::{Provenance, RadialSolution};
use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::geometry::GeometrySpec;
use crate::reduction::{ChangeOfVariables, Coordinate};
use crate::spline::Pchip;
use std::sync::Arc;

#[derive(Debug, Clone, Copy)]
pub struct BvpOptions {
    pub epsilon0: f64,
    pub epsilon_floor: f64,
    pub max_levels: usize,
    pub max_shots: usize,
}

impl Default for BvpOptions {
    fn default() -> Self {
        BvpOptions {
            epsilon0: 1e-2,
            epsilon_floor: 1e-14,
            max_levels: 60,
            max_shots: 200,
        }
    }
}

#[derive(Debug)]
pub struct BvpOutcome {
    pub solution: RadialSolution,
    pub boundary_residual_left: f64,
    pub boundary_residual_right: f64,
    pub levels_used: usize,
    pub final_epsilon: f64,
    pub shots: usize,
}

struct Rescaled {
    a_tilde: Pchip,
    r_of_t: Pchip,
    scale: f64, // c2 - c1
}

impl Rescaled {
    fn build(geom: &GeometrySpec, cov: &ChangeOfVariables) -> Result<Self> {
        let (c1, c2) = (cov.c1, cov.c2);
        let scale = c2 - c1;
        let n = 2048;
        let mut ts = Vec::with_capacity(n + 1);
        let mut avals = Vec::with_capacity(n + 1);
        let mut rvals = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let t = (i as f64 / n as f64).clamp(1e-9, 1.0 - 1e-9);
            let s = c1 + scale * t;
            let r = cov.inverse(s)?;
            ts.push(i as f64 / n as f64);
            rvals.push(r);
            avals.push(scale * geom.volume(r)?);
        }
        Ok(Rescaled {
            a_tilde: Pchip::new(ts.clone(), avals)?,
            r_of_t: Pchip::new(ts, rvals)?,
            scale,
        })
    }
}

/// Solve the rescaled boundary value problem by shooting with
/// ε-regularization. Requires a finite image interval, nonnegative
/// coefficients with γβ + αγ + αδ > 0, and an f that is positive and
/// decreasing in w (the monotone structure the bracketing rides on).
#[allow(clippy::too_many_arguments)]
pub fn solve_bvp_singular(
    geom: Arc<GeometrySpec>,
    cov: &ChangeOfVariables,
    f: &Expr,
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    tol: f64,
    opts: &BvpOptions,
) -> Result<BvpOutcome> {
    if !(cov.c1.is_finite() && cov.c2.is_finite()) {
        return Err(Error::InvalidArgument(
            "singular BVP needs a finite image interval (c1, c2)".to_string(),
        ));
    }
    if alpha < 0.0 || beta < 0.0 || gamma < 0.0 || delta < 0.0 {
        return Err(Error::InvalidArgument(
            "boundary coefficients must be nonnegative".to_string(),
        ));
    }
    if gamma * beta + alpha * gamma + alpha * delta <= 0.0 {
        return Err(Error::InvalidArgument(
            "boundary coefficients must satisfy γβ + αγ + αδ > 0".to_string(),
        ));
    }
    let tables = Rescaled::build(&geom, cov)?;

    let shoot_opts = StepperOptions {
        rtol: tol * 1e-2,
        atol: tol * 1e-2,
        max_steps: 400_000,
        max_step: f64::INFINITY,
        dense_spacing: f64::INFINITY,
    };

    let mut shots = 0usize;
    let mut shoot = |tau: f64, eps: f64, dense: Option<f64>| -> Result<rk45::Trajectory> {
        shots += 1;
        let rhs = |t: f64, y: [f64; 2]| -> Result<[f64; 2]> {
            let tt = t.clamp(0.0, 1.0);
            let a = tables.a_tilde.eval(tt);
            let r = tables.r_of_t.eval(tt);
            let w = y[0].max(eps);
            let fv = f.eval(&Bindings::new().r(r).y(w).t(tt))?;
            Ok([y[1], -a * a * fv])
        };
        let o = StepperOptions {
            dense_spacing: dense.unwrap_or(f64::INFINITY),
            ..shoot_opts
        };
        let traj = rk45::integrate(rhs, 0.0, 1.0, [beta * tau, alpha * tau], &o)?;
        if let StopReason::StepUnderflow { location, step } = traj.stop {
            return Err(Error::StepUnderflow { location, step });
        }
        Ok(traj)
    };
    let boundary = |traj: &rk45::Trajectory| -> f64 {
        let y = traj.ys.last().unwrap();
        gamma * y[0] + delta * y[1]
    };

    // bracket the shooting parameter: G is increasing in τ for f decreasing in w
    let mut tau_lo = None;
    let mut tau_hi = None;
    let mut eps = opts.epsilon0;
    let mut tau = 1.0;
    for _ in 0..60 {
        let g = boundary(&shoot(tau, eps, None)?);
        if g > 0.0 {
            tau_hi = Some(tau);
            break;
        }
        tau_lo = Some(tau);
        tau *= 2.0;
    }
    let mut tau = 0.5;
    for _ in 0..60 {
        if tau_lo.is_some() {
            break;
        }
        let g = boundary(&shoot(tau, eps, None)?);
        if g < 0.0 {
            tau_lo = Some(tau);
            break;
        }
        tau_hi = Some(tau);
        tau *= 0.5;
    }
    let (mut lo, mut hi) = match (tau_lo, tau_hi) {
        (Some(a), Some(b)) => (a.min(b), a.max(b)),
        _ => {
            return Err(Error::ShootingFailed {
                iterations: shots,
                residual: f64::NAN,
            })
        }
    };

    let probe: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let mut prev_profile: Option<Vec<f64>> = None;
    let mut levels = 0usize;
    let mut tau_star = 0.5 * (lo + hi);
    let continuation_tol = tol.max(1e-7);

    loop {
        levels += 1;
        // root-find on this level: bisection with secant acceleration
        let mut g_lo = boundary(&shoot(lo, eps, None)?);
        let mut g_hi = boundary(&shoot(hi, eps, None)?);
        // the bracket from the previous level may have drifted; re-expand
        let mut expand = 0;
        while g_lo > 0.0 && expand < 60 {
            hi = lo;
            g_hi = g_lo;
            lo *= 0.5;
            g_lo = boundary(&shoot(lo, eps, None)?);
            expand += 1;
        }
        while g_hi < 0.0 && expand < 120 {
            lo = hi;
            g_lo = g_hi;
            hi *= 2.0;
            g_hi = boundary(&shoot(hi, eps, None)?);
            expand += 1;
        }
        if g_lo > 0.0 || g_hi < 0.0 {
            return Err(Error::ShootingFailed {
                iterations: shots,
                residual: g_lo.abs().min(g_hi.abs()),
            });
        }
        let mut residual = f64::INFINITY;
        for _ in 0..opts.max_shots {
            // secant proposal, safeguarded by the bracket
            let mut cand = hi - g_hi * (hi - lo) / (g_hi - g_lo);
            if !(cand > lo && cand < hi) || !cand.is_finite() {
                cand = 0.5 * (lo + hi);
            }
            let g = boundary(&shoot(cand, eps, None)?);
            residual = g.abs();
            if g < 0.0 {
                lo = cand;
                g_lo = g;
            } else {
                hi = cand;
                g_hi = g;
            }
            tau_star = cand;
            if residual <= tol || (hi - lo) <= 1e-16 * hi.abs().max(1.0) {
                break;
            }
        }
        if residual > tol {
            return Err(Error::ShootingFailed {
                iterations: shots,
                residual,
            });
        }

        // profile at this level, positivity enforcement on the interior
        let traj = shoot(tau_star, eps, None)?;
        let sol = trajectory_to_solution(&traj, &tables, cov)?;
        let profile: Vec<f64> = probe
            .iter()
            .map(|&t| sample_t(&sol, cov, t))
            .collect::<Result<_>>()?;
        for (t, w) in probe.iter().zip(&profile) {
            if *t > 0.02 && *t < 0.98 && *w <= 0.0 {
                return Err(Error::PositivityLost {
                    location: *t,
                    epsilon: eps,
                });
            }
        }
        let settled = prev_profile
            .as_ref()
            .map(|prev| {
                prev.iter()
                    .zip(&profile)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                    < continuation_tol
            })
            .unwrap_or(false);
        prev_profile = Some(profile);
        if settled || eps <= opts.epsilon_floor || levels >= opts.max_levels {
            break;
        }
        eps *= 0.5;
    }

    // final dense solve for the returned solution
    let traj = shoot(tau_star, eps, Some(1e-4))?;
    let solution = trajectory_to_solution(&traj, &tables, cov)?;
    let last = traj.ys.last().unwrap();
    Ok(BvpOutcome {
        solution,
        boundary_residual_left: alpha * (beta * tau_star) - beta * (alpha * tau_star),
        boundary_residual_right: (gamma * last[0] + delta * last[1]).abs(),
        levels_used: levels,
        final_epsilon: eps,
        shots,
    })
}

fn sample_t(sol: &RadialSolution, cov: &ChangeOfVariables, t: f64) -> Result<f64> {
    let s = cov.c1 + (cov.c2 - cov.c1) * t;
    let (a, b) = sol.window();
    sol.eval(s.clamp(a, b))
}

/// Convert the t-trajectory to an s-coordinate solution: z(s) = w(t(s)),
/// z'(s) = w'(t)/(c2−c1).
fn trajectory_to_solution(
    traj: &rk45::Trajectory,
    tables: &Rescaled,
    cov: &ChangeOfVariables,
) -> Result<RadialSolution> {
    let grid: Vec<f64> = traj.ts.iter().map(|&t| cov.c1 + tables.scale * t).collect();
    let values: Vec<f64> = traj.ys.iter().map(|y| y[0]).collect();
    let derivatives: Vec<f64> = traj.ys.iter().map(|y| y[1] / tables.scale).collect();
    RadialSolution::new(
        Coordinate::SCoordinate,
        grid,
        values,
        derivatives,
        Provenance::BvpShooting,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::geometry::from_orbit_volume_expr;
    use crate::reduction::build_change_of_variables;

    fn unit_strip() -> (Arc<GeometrySpec>, ChangeOfVariables) {
        // A ≡ 1 on (0,1): J(r) = r − 1/2, (c1,c2) = (−1/2, 1/2), Ã ≡ 1
        let a = parse_expr("1").unwrap();
        let g = Arc::new(from_orbit_volume_expr("strip", &a, (0.0, 1.0), 2).unwrap());
        let cov = build_change_of_variables(g.clone(), None).unwrap();
        (g, cov)
    }

    #[test]
    fn smooth_dirichlet_parabola() {
        // w'' + 1 = 0, w(0) = w(1) = 0 -> w = t(1−t)/2
        let (g, cov) = unit_strip();
        let f = parse_expr("1").unwrap();
        let out = solve_bvp_singular(
            g,
            &cov,
            &f,
            1.0,
            0.0,
            1.0,
            0.0,
            1e-10,
            &BvpOptions::default(),
        )
        .unwrap();
        assert!(out.boundary_residual_right < 1e-10);
        for t in [0.1, 0.3, 0.5, 0.8] {
            let s = cov.c1 + (cov.c2 - cov.c1) * t;
            let expect = t * (1.0 - t) / 2.0;
            let got = out.solution.eval(s).unwrap();
            assert!(
                (got - expect).abs() < 1e-8,
                "w({}) = {} vs {}",
                t,
                got,
                expect
            );
        }
    }

    #[test]
    fn singular_sqrt_problem_positive_and_symmetric() {
        let (g, cov) = unit_strip();
        let f = parse_expr("y^(-0.5)").unwrap();
        let out = solve_bvp_singular(
            g,
            &cov,
            &f,
            1.0,
            0.0,
            1.0,
            0.0,
            1e-8,
            &BvpOptions::default(),
        )
        .unwrap();
        assert!(out.boundary_residual_right < 1e-8);
        let span = cov.c2 - cov.c1;
        let mut max_asym: f64 = 0.0;
        for i in 1..100 {
            let t = i as f64 / 100.0;
            let w1 = out.solution.eval(cov.c1 + span * t).unwrap();
            assert!(w1 > 0.0, "positivity at t = {}", t);
            let w2 = out.solution.eval(cov.c1 + span * (1.0 - t)).unwrap();
            max_asym = max_asym.max((w1 - w2).abs());
        }
        assert!(max_asym < 1e-8, "symmetry defect {}", max_asym);
    }

    #[test]
    fn degenerate_coefficients_rejected() {
        let (g, cov) = unit_strip();
        let f = parse_expr("1").unwrap();
        let res = solve_bvp_singular(
            g,
            &cov,
            &f,
            0.0,
            0.0,
            0.0,
            0.0,
            1e-8,
            &BvpOptions::default(),
        );
        assert!(res.is_err());
    }
}
