//! The concavity dichotomy behind the nonexistence result, and the
//! vector-field completeness bounds.
//!
//! With J spanning all of ℝ and f ≥ 0, a nonnegative maximal radial solution
//! flattens to z'' = −A(r(s))²f ≤ 0 on ℝ: z is concave, so every tangent line
//! lies above it. Either the slope vanishes everywhere (z constant) or some
//! tangent crosses zero, contradicting nonnegativity on a finite window.

use super::ivp::solve_ivp_transformed;
use super::RadialSolution;
use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, Var};
use crate::geometry::GeometrySpec;
use crate::hypotheses::{HypothesisReport, Verdict, Witness};
use crate::reduction::{transform, ChangeOfVariables, Coordinate};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Horn {
    /// Slope vanishes within tolerance everywhere: the candidate is constant.
    Constant,
    /// A tangent line crosses below zero at `location`, inside the expanding
    /// window of half-length `window_half_length`.
    NegativityCrossing {
        location: f64,
        window_half_length: f64,
    },
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct NonexistenceReport {
    pub horn: Horn,
    /// f ≥ 0 held at every sampled point along the candidate, and the
    /// candidate's numerical second derivative is ≤ 0 up to tolerance.
    pub concavity_verified: bool,
    pub samples: usize,
    pub max_abs_slope: f64,
}

/// Solve the dichotomy's flattened equation z'' = −A(r(s))² f(r(s), z) from
/// initial data (the transformed ODE with f negated relative to the solver
/// convention z'' = +A²f).
#[allow(clippy::too_many_arguments)]
pub fn nonexistence_candidate(
    geom: Arc<GeometrySpec>,
    cov: Arc<ChangeOfVariables>,
    f: &Expr,
    s0: f64,
    z0: f64,
    dz0: f64,
    window: (f64, f64),
    tol: f64,
) -> Result<RadialSolution> {
    let ode = crate::reduction::reduce(geom, f.clone())?;
    let flipped = transform(&ode, cov)?.with_negated_nonlinearity();
    solve_ivp_transformed(&flipped, s0, z0, dz0, window, tol)
}

/// Run the dichotomy on a candidate solution of z'' = −A²f.
///
/// `expanding_windows` are half-lengths (around the candidate's center) to
/// search for a negativity crossing; `slope_tol` decides the constant horn.
pub fn check_nonexistence(
    geom: &GeometrySpec,
    cov: &ChangeOfVariables,
    f: &Expr,
    candidate: &RadialSolution,
    expanding_windows: &[f64],
    slope_tol: f64,
) -> Result<NonexistenceReport> {
    if cov.c1.is_finite() || cov.c2.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "nonexistence dichotomy needs (c1, c2) = (−∞, ∞); got ({}, {})",
            cov.c1, cov.c2
        )));
    }
    let sol = match candidate.coordinate {
        Coordinate::SCoordinate => candidate.clone(),
        Coordinate::RCoordinate => super::to_s_coordinates(candidate, cov)?,
    };
    let _ = geom;

    // hypothesis side: f >= 0 along the candidate; candidate concave
    let mut samples = 0usize;
    let mut concavity_verified = true;
    let n = sol.grid.len();
    let stride = (n / 200).max(1);
    for i in (0..n).step_by(stride) {
        samples += 1;
        let s = sol.grid[i];
        let r = cov.inverse(s)?;
        let fv = f.eval(&Bindings::new().r(r).y(sol.values[i]))?;
        if fv < -1e-12 {
            return Err(Error::InvalidArgument(format!(
                "f must be nonnegative; f({}, {}) = {}",
                r, sol.values[i], fv
            )));
        }
        if i + 1 < n {
            let mid = 0.5 * (sol.grid[i] + sol.grid[i + 1]);
            let zpp = sol.eval_second(mid)?;
            let scale = sol.values[i].abs().max(1.0);
            if zpp > 1e-5 * scale {
                concavity_verified = false;
            }
        }
    }

    let max_abs_slope = sol.derivatives.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if max_abs_slope <= slope_tol {
        return Ok(NonexistenceReport {
            horn: Horn::Constant,
            concavity_verified,
            samples,
            max_abs_slope,
        });
    }

    // a sign change inside the coverage is the crossing itself; otherwise
    // concavity makes every tangent line an upper bound and its zero a
    // certified crossing location
    let center = 0.5 * (sol.grid[0] + sol.grid[n - 1]);
    let mut best: Option<f64> = None;
    let mut consider = |candidate: f64| {
        let dist = (candidate - center).abs();
        if best.map(|b| dist < (b - center).abs()).unwrap_or(true) {
            best = Some(candidate);
        }
    };
    for i in 0..n {
        let (s, z, dz) = (sol.grid[i], sol.values[i], sol.derivatives[i]);
        if z < 0.0 {
            if i > 0 && sol.values[i - 1] >= 0.0 {
                let (s0, z0) = (sol.grid[i - 1], sol.values[i - 1]);
                consider(s0 + (s - s0) * z0 / (z0 - z));
            } else if i + 1 < n && sol.values[i + 1] >= 0.0 {
                let (s1, z1) = (sol.grid[i + 1], sol.values[i + 1]);
                consider(s1 - (s1 - s) * z1 / (z1 - z));
            } else {
                consider(s);
            }
        } else if dz.abs() > slope_tol {
            consider(s - z / dz);
        }
    }
    let crossing = best.expect("nonzero slope yields a tangent crossing");
    let dist = (crossing - center).abs();
    let window = expanding_windows
        .iter()
        .copied()
        .find(|&w| w >= dist)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "crossing at {} lies outside every window (max half-length {})",
                crossing,
                expanding_windows.last().copied().unwrap_or(0.0)
            ))
        })?;
    Ok(NonexistenceReport {
        horn: Horn::NegativityCrossing {
            location: crossing,
            window_half_length: window,
        },
        concavity_verified,
        samples,
        max_abs_slope,
    })
}

/// Compact box in the (t, x1, x2) phase space of the first-order system.
#[derive(Debug, Clone, Copy)]
pub struct Box3 {
    pub t: (f64, f64),
    pub x1: (f64, f64),
    pub x2: (f64, f64),
}

/// Verify the three completeness bounds for a candidate function φ(t, x1, x2)
/// on a compact window:
///
///   |∂φ/∂t| ≤ C,   |x2·∂φ/∂x1| ≤ C,   |(x2·A' + A·f)·∂φ/∂x2| ≤ C·A(t).
///
/// Properness of φ is NOT checked; the report says so.
pub fn check_completeness_bounds(
    phi: &Expr,
    geom: &GeometrySpec,
    f: &Expr,
    window: &Box3,
    c_bound: f64,
) -> HypothesisReport {
    let dt = crate::expr::differentiate(phi, Var::T);
    let dx1 = crate::expr::differentiate(phi, Var::X1);
    let dx2 = crate::expr::differentiate(phi, Var::X2);
    let n = 13;
    let lin = |(a, b): (f64, f64), i: usize| a + (b - a) * i as f64 / (n - 1) as f64;
    let mut samples = 0u64;
    let mut maxima = [0.0f64; 3];

    for it in 0..n {
        let t = lin(window.t, it);
        let (a_val, a_der) = match (geom.volume(t), geom.orbit_volume.deriv(t)) {
            (Ok(a), Ok(da)) => (a, da),
            _ => {
                return report_inconclusive(
                    "completeness_bounds",
                    "A or A' failed to evaluate on the window (is the t-range inside the domain?)",
                )
            }
        };
        for i1 in 0..n {
            let x1 = lin(window.x1, i1);
            for i2 in 0..n {
                let x2 = lin(window.x2, i2);
                samples += 1;
                let b = Bindings::new()
                    .t(t)
                    .with(Var::X1, x1)
                    .with(Var::X2, x2)
                    .r(t)
                    .y(x1);
                let (pt, p1, p2, fv) = match (dt.eval(&b), dx1.eval(&b), dx2.eval(&b), f.eval(&b)) {
                    (Ok(a), Ok(bb), Ok(c), Ok(d)) => (a, bb, c, d),
                    _ => {
                        return report_inconclusive(
                            "completeness_bounds",
                            "φ derivatives or f failed to evaluate on the window",
                        )
                    }
                };
                let checks = [
                    (pt.abs(), c_bound, "|∂φ/∂t| ≤ C"),
                    ((x2 * p1).abs(), c_bound, "|x2·∂φ/∂x1| ≤ C"),
                    (
                        ((x2 * a_der + a_val * fv) * p2).abs(),
                        c_bound * a_val,
                        "|(x2·A' + A·f)·∂φ/∂x2| ≤ C·A",
                    ),
                ];
                for (idx, (observed, bound, label)) in checks.iter().enumerate() {
                    maxima[idx] = maxima[idx].max(*observed / bound.max(1e-300));
                    if *observed > bound * (1.0 + 1e-9) {
                        let mut rep = HypothesisReport {
                            condition: "completeness_bounds".to_string(),
                            verdict: Verdict::Falsified,
                            witness: Some(Witness {
                                point: BTreeMap::from([
                                    ("t".to_string(), t),
                                    ("x1".to_string(), x1),
                                    ("x2".to_string(), x2),
                                ]),
                                observed: *observed,
                                bound: *bound,
                                description: format!("{} violated", label),
                            }),
                            diagnostics: BTreeMap::new(),
                            samples_used: samples,
                            notes: vec![
                                "properness of φ is not checked (only the three inequality bounds)"
                                    .to_string(),
                            ],
                        };
                        rep.diagnostics
                            .insert("violated_bound_index".to_string(), idx as f64);
                        return rep;
                    }
                }
            }
        }
    }
    let mut rep = HypothesisReport {
        condition: "completeness_bounds".to_string(),
        verdict: Verdict::VerifiedNumerically,
        witness: None,
        diagnostics: BTreeMap::new(),
        samples_used: samples,
        notes: vec![
            "properness of φ is not checked (only the three inequality bounds)".to_string(),
        ],
    };
    rep.diagnostics.insert("ratio_bound_t".to_string(), maxima[0]);
    rep.diagnostics.insert("ratio_bound_x1".to_string(), maxima[1]);
    rep.diagnostics.insert("ratio_bound_x2".to_string(), maxima[2]);
    rep
}

fn report_inconclusive(condition: &str, note: &str) -> HypothesisReport {
    HypothesisReport {
        condition: condition.to_string(),
        verdict: Verdict::Inconclusive,
        witness: None,
        diagnostics: BTreeMap::new(),
        samples_used: 0,
        notes: vec![note.to_string()],
    }
}
