//! Closing the loop: uniqueness certification by the contraction walk, ODE
//! residuals of dense solutions, manifold residuals through a discrete
//! Laplace–Beltrami operator, and r/s coordinate consistency.

mod mesh;

pub use mesh::{
    lift_and_residual, lift_residual_field, residual_ladder, LiftResidualReport, ResidualField,
    SurfaceMesh,
};

use crate::error::{Error, Result};
use crate::expr::{differentiate, Bindings, Expr, Var};
use crate::reduction::{ChangeOfVariables, Coordinate, RadialODE};
use crate::solvers::{Provenance, RadialSolution};
use serde::Serialize;

/// The computed constants of the uniqueness proof on a compact window
/// [R1, R2], together with the verified per-interval deviation bounds.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionCertificate {
    pub s0: f64,
    /// Bound on |z_j| over [R1, R2].
    pub kappa: f64,
    /// Lipschitz constant of f on the κ-box over the window.
    pub lipschitz_const: f64,
    /// M = lipschitz_const · sup |A(r(t))|² over [R1, R2].
    #[serde(rename = "M")]
    pub m_const: f64,
    /// δ = 1/(2(1+M)), the interval length of the covering walk.
    pub delta: f64,
    pub intervals_covered: usize,
    /// sup over [R1, R2] of |z1 − z2| + |z1' − z2'|.
    pub max_deviation: f64,
    pub r1: f64,
    pub r2: f64,
    pub note: String,
}

impl ContractionCertificate {
    /// Gronwall envelope for an initial defect ε at s0, evaluated at s.
    pub fn gronwall_envelope(&self, epsilon: f64, s: f64) -> f64 {
        epsilon * ((1.0 + self.m_const) * (s - self.s0).abs()).exp()
    }
}

/// Certify that two s-coordinate solutions with matching data at some point
/// of [R1, R2] stay together, walking intervals of length δ = 1/(2(1+M))
/// outward from the matching point.
///
/// Per interval the defect may at most double (with an absolute floor of
/// 10·tol for solver noise); a breach is an error carrying diagnostics.
pub fn uniqueness_contract(
    sol1: &RadialSolution,
    sol2: &RadialSolution,
    f: &Expr,
    cov: &ChangeOfVariables,
    r1: f64,
    r2: f64,
    tol: f64,
) -> Result<ContractionCertificate> {
    if sol1.coordinate != Coordinate::SCoordinate || sol2.coordinate != Coordinate::SCoordinate {
        return Err(Error::InvalidArgument(
            "uniqueness_contract expects s-coordinate solutions".to_string(),
        ));
    }
    if !(r1 < r2) {
        return Err(Error::InvalidArgument(format!(
            "window [{}, {}] is empty",
            r1, r2
        )));
    }
    for (name, sol) in [("sol1", sol1), ("sol2", sol2)] {
        if !sol.covers((r1, r2)) {
            return Err(Error::InvalidArgument(format!(
                "{} does not cover [{}, {}] (window {:?})",
                name,
                r1,
                r2,
                sol.window()
            )));
        }
    }

    let m = 2001;
    let grid: Vec<f64> = (0..m)
        .map(|i| r1 + (r2 - r1) * i as f64 / (m - 1) as f64)
        .collect();
    let defect_at = |s: f64| -> Result<f64> {
        Ok((sol1.eval(s)? - sol2.eval(s)?).abs()
            + (sol1.eval_deriv(s)? - sol2.eval_deriv(s)?).abs())
    };
    let mut defects = Vec::with_capacity(m);
    let mut kappa: f64 = 0.0;
    for &s in &grid {
        defects.push(defect_at(s)?);
        kappa = kappa.max(sol1.eval(s)?.abs()).max(sol2.eval(s)?.abs());
    }
    let (i0, &d0) = defects
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let s0 = grid[i0];
    if d0 > tol {
        return Err(Error::MatchingDefect {
            defect: d0,
            tol,
            s0,
        });
    }

    // Lipschitz constant of f on [R1,R2] × [−κ, κ] via |∂f/∂y| on a grid
    let dfdy = differentiate(f, Var::Y);
    let n = 65;
    let mut lipschitz: f64 = 0.0;
    let mut sup_a2: f64 = 0.0;
    for i in 0..n {
        let s = r1 + (r2 - r1) * i as f64 / (n - 1) as f64;
        let r = cov.inverse(s)?;
        let a = cov.geometry.volume(r)?;
        sup_a2 = sup_a2.max(a * a);
        for j in 0..n {
            let y = -kappa + 2.0 * kappa * j as f64 / (n - 1) as f64;
            match dfdy.eval(&Bindings::new().r(r).y(y)) {
                Ok(v) => lipschitz = lipschitz.max(v.abs()),
                Err(Error::NonDifferentiable { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let m_const = lipschitz * sup_a2;
    let delta = 1.0 / (2.0 * (1.0 + m_const));

    // covering walk outward from s0
    let floor = 10.0 * tol;
    let mut intervals = 0usize;
    let mut max_deviation: f64 = 0.0;
    for direction in [1.0f64, -1.0] {
        let mut start = s0;
        let limit = if direction > 0.0 { r2 } else { r1 };
        while (limit - start) * direction > 1e-14 * (r2 - r1) {
            let end = if direction > 0.0 {
                (start + delta).min(r2)
            } else {
                (start - delta).max(r1)
            };
            let start_defect = defect_at(start)?;
            let allowed = (2.0 * start_defect).max(floor);
            let (lo, hi) = if direction > 0.0 { (start, end) } else { (end, start) };
            let mut sup = 0.0f64;
            for k in 0..=32 {
                let s = lo + (hi - lo) * k as f64 / 32.0;
                sup = sup.max(defect_at(s)?);
            }
            if sup > allowed {
                return Err(Error::DeviationBreach {
                    interval_lo: lo,
                    interval_hi: hi,
                    observed: sup,
                    allowed,
                });
            }
            max_deviation = max_deviation.max(sup);
            intervals += 1;
            start = end;
        }
    }

    Ok(ContractionCertificate {
        s0,
        kappa,
        lipschitz_const: lipschitz,
        m_const,
        delta,
        intervals_covered: intervals,
        max_deviation,
        r1,
        r2,
        note: "certified on the stated compact [R1,R2] only; the paper exhausts (c1,c2)"
            .to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondDerivativeSource {
    /// u'' from the ODE right-hand side (exact by construction for IVP runs).
    OdeRhs,
    /// u'' from differentiating the Hermite interpolant (order-2 accurate).
    HermiteInterpolant,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OdeResidual {
    pub sup: f64,
    pub second_derivative_source: SecondDerivativeSource,
}

/// Sup of the ODE residual over `grid` in the ODE's own form; the report
/// states where u'' came from.
pub fn ode_residual(sol: &RadialSolution, ode: &RadialODE, grid: &[f64]) -> Result<OdeResidual> {
    let rhs_based = matches!(sol.provenance, Provenance::Ivp | Provenance::PoleSeries);
    let mut sup: f64 = 0.0;
    for &x in grid {
        let u = sol.eval(x)?;
        let du = sol.eval_deriv(x)?;
        let ddu = if rhs_based {
            ode.rhs(x, u, du)?
        } else {
            sol.eval_second(x)?
        };
        sup = sup.max(ode.residual(x, u, du, ddu)?.abs());
    }
    Ok(OdeResidual {
        sup,
        second_derivative_source: if rhs_based {
            SecondDerivativeSource::OdeRhs
        } else {
            SecondDerivativeSource::HermiteInterpolant
        },
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConsistencyReport {
    /// sup |u(r) − z(J(r))|
    pub value_sup: f64,
    /// sup |u'(r)·A(r) − z'(J(r))| (the chain rule dz/ds = u'(r)A(r))
    pub derivative_sup: f64,
}

/// Compare an r-coordinate solution with an s-coordinate one through J.
pub fn coordinate_consistency(
    sol_r: &RadialSolution,
    sol_s: &RadialSolution,
    cov: &ChangeOfVariables,
    grid: &[f64],
) -> Result<ConsistencyReport> {
    if sol_r.coordinate != Coordinate::RCoordinate || sol_s.coordinate != Coordinate::SCoordinate {
        return Err(Error::InvalidArgument(
            "coordinate_consistency expects (r-coordinate, s-coordinate) solutions".to_string(),
        ));
    }
    let mut value_sup: f64 = 0.0;
    let mut derivative_sup: f64 = 0.0;
    for &r in grid {
        let s = cov.forward(r)?;
        let u = sol_r.eval(r)?;
        let du = sol_r.eval_deriv(r)?;
        let z = sol_s.eval(s)?;
        let dz = sol_s.eval_deriv(s)?;
        let a = cov.geometry.volume(r)?;
        value_sup = value_sup.max((u - z).abs());
        derivative_sup = derivative_sup.max((du * a - dz).abs());
    }
    Ok(ConsistencyReport {
        value_sup,
        derivative_sup,
    })
}
