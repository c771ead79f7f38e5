//! The dimension reduction: radial ODE forms on the transversal, the
//! flattening change of variables s = J(r) = ∫ dt/A(t), the comparison
//! profile ρ(r), and the tent function g_θ.
//!
//! Convention used throughout: the PDE −Δu + f(x,u) = 0 reduces to
//! u'' + (ln A)' u' = f(r,u) on the transversal, so the transformed equation
//! reads z'' = A(r(s))² f(r(s), z).

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, Var};
use crate::geometry::{EndpointBehavior, GeometrySpec};
use crate::quad::{self, QuadOptions};
use crate::spline::Pchip;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Coordinate {
    /// Arclength coordinate r on the transversal.
    RCoordinate,
    /// Flattened coordinate s = J(r).
    SCoordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeForm {
    /// u'' + (ln A)' u' − f = 0
    Reduced,
    /// (A u')' − A f = 0
    SelfAdjoint,
    /// z'' − A(r(s))² f(r(s), z) = 0
    Transformed,
}

/// A radial ODE in one of its three algebraically equivalent forms.
#[derive(Clone)]
pub struct RadialODE {
    pub coordinate: Coordinate,
    pub form: OdeForm,
    pub geometry: Arc<GeometrySpec>,
    pub nonlinearity: Expr,
    pub domain: (f64, f64),
    pub cov: Option<Arc<ChangeOfVariables>>,
}

impl RadialODE {
    /// f(r, y).
    pub fn f_at(&self, r: f64, y: f64) -> Result<f64> {
        self.nonlinearity.eval(&Bindings::new().r(r).y(y))
    }

    /// Second derivative from the equation: u'' = −(ln A)'u' + f in the
    /// r-coordinate, z'' = A(r(s))² f(r(s), z) in the s-coordinate.
    pub fn rhs(&self, x: f64, u: f64, du: f64) -> Result<f64> {
        match self.coordinate {
            Coordinate::RCoordinate => {
                let drift = self.geometry.log_derivative(x)?;
                Ok(-drift * du + self.f_at(x, u)?)
            }
            Coordinate::SCoordinate => {
                let cov = self.cov.as_ref().ok_or_else(|| {
                    Error::InvalidArgument(
                        "s-coordinate ODE lacks its change of variables".to_string(),
                    )
                })?;
                let r = cov.inverse(x)?;
                let a = self.geometry.volume(r)?;
                Ok(a * a * self.f_at(r, u)?)
            }
        }
    }

    /// Residual of a candidate (u, u', u'') at x in this ODE's form.
    pub fn residual(&self, x: f64, u: f64, du: f64, ddu: f64) -> Result<f64> {
        match (self.coordinate, self.form) {
            (Coordinate::RCoordinate, OdeForm::Reduced) => {
                Ok(ddu + self.geometry.log_derivative(x)? * du - self.f_at(x, u)?)
            }
            (Coordinate::RCoordinate, OdeForm::SelfAdjoint) => {
                let a = self.geometry.volume(x)?;
                let da = self.geometry.orbit_volume.deriv(x)?;
                Ok(a * ddu + da * du - a * self.f_at(x, u)?)
            }
            (Coordinate::RCoordinate, OdeForm::Transformed) => Err(Error::InvalidArgument(
                "transformed form lives in the s-coordinate".to_string(),
            )),
            (Coordinate::SCoordinate, _) => Ok(ddu - self.rhs(x, u, du)?),
        }
    }

    pub fn in_form(&self, form: OdeForm) -> RadialODE {
        RadialODE {
            form,
            ..self.clone()
        }
    }

    /// Same ODE with the nonlinearity replaced by its negative.
    pub fn with_negated_nonlinearity(&self) -> RadialODE {
        RadialODE {
            nonlinearity: self.nonlinearity.clone().negate(),
            ..self.clone()
        }
    }
}

/// Reduce −Δu + f(x,u) = 0 on the geometry to its radial ODE
/// u'' + (ln A)'u' = f(r, u) on the interior of the transversal.
///
/// `f` must depend on (r, y) only; a dependence on any other variable means
/// it is not radial in the first argument.
pub fn reduce(geom: Arc<GeometrySpec>, f: Expr) -> Result<RadialODE> {
    if f.free_vars().iter().any(|v| !matches!(v, Var::R | Var::Y)) {
        return Err(Error::InvalidArgument(format!(
            "nonlinearity must depend on (r, y) only; found variables {:?}",
            f.free_vars().iter().map(|v| v.name()).collect::<Vec<_>>()
        )));
    }
    let domain = geom.domain();
    Ok(RadialODE {
        coordinate: Coordinate::RCoordinate,
        form: OdeForm::Reduced,
        geometry: geom,
        nonlinearity: f,
        domain,
        cov: None,
    })
}

/// Flatten an r-coordinate ODE with the change of variables: the result lives
/// on (c1, c2) and reads z'' = A(r(s))² f(r(s), z).
pub fn transform(ode: &RadialODE, cov: Arc<ChangeOfVariables>) -> Result<RadialODE> {
    if ode.coordinate != Coordinate::RCoordinate {
        return Err(Error::InvalidArgument(
            "transform expects an ODE in the r-coordinate".to_string(),
        ));
    }
    Ok(RadialODE {
        coordinate: Coordinate::SCoordinate,
        form: OdeForm::Transformed,
        geometry: ode.geometry.clone(),
        nonlinearity: ode.nonlinearity.clone(),
        domain: (cov.c1, cov.c2),
        cov: Some(cov),
    })
}

/// Default base point for J: midpoint of a finite domain, the log-midpoint
/// convention on half-infinite ones, 0 on the whole line.
pub fn default_base_point(domain: (f64, f64)) -> f64 {
    let (lo, hi) = domain;
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => {
            if lo > 0.0 {
                lo + 1.0
            } else {
                1.0
            }
        }
        (false, true) => hi - 1.0,
        (false, false) => 0.0,
    }
}

/// The monotone map s = J(r) = ∫_{r0}^r dt/A(t), its numeric inverse, and the
/// image interval (c1, c2) with infinite endpoints when the improper integral
/// diverges. The quadrature table is cached at construction; afterwards all
/// maps are pure and shareable.
pub struct ChangeOfVariables {
    pub geometry: Arc<GeometrySpec>,
    pub r0: f64,
    pub c1: f64,
    pub c2: f64,
    r_nodes: Vec<f64>,
    s_nodes: Vec<f64>,
    r_of_s_seed: Pchip,
}

impl std::fmt::Debug for ChangeOfVariables {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChangeOfVariables")
            .field("r0", &self.r0)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .field("nodes", &self.r_nodes.len())
            .finish()
    }
}

const TABLE_TOL: f64 = 1e-13;

/// Build J around the base point r0 (interior; defaulted when None). Errors
/// when A has an interior zero or endpoint classification is inconclusive.
pub fn build_change_of_variables(
    geom: Arc<GeometrySpec>,
    r0: Option<f64>,
) -> Result<ChangeOfVariables> {
    let domain = geom.domain();
    let r0 = r0.unwrap_or_else(|| default_base_point(domain));
    let (lo, hi) = domain;
    if !(r0 > lo && r0 < hi) {
        return Err(Error::OutsideDomain { point: r0, lo, hi });
    }

    let r_nodes = cov_nodes(domain, r0);
    let opts = QuadOptions::with_tol(TABLE_TOL);
    let inv_a = |t: f64| Ok(1.0 / geom.volume(t)?);

    let i0 = r_nodes
        .iter()
        .position(|&r| r >= r0)
        .unwrap_or(r_nodes.len() - 1);
    let mut s_nodes = vec![0.0; r_nodes.len()];
    // accumulate outward from r0 so J(r0) = 0 exactly
    let mut acc = quad::integrate(inv_a, r0, r_nodes[i0], &opts)?.value;
    s_nodes[i0] = acc;
    for i in (i0 + 1)..r_nodes.len() {
        acc += quad::integrate(inv_a, r_nodes[i - 1], r_nodes[i], &opts)?.value;
        s_nodes[i] = acc;
    }
    acc = s_nodes[i0];
    for i in (0..i0).rev() {
        acc -= quad::integrate(inv_a, r_nodes[i], r_nodes[i + 1], &opts)?.value;
        s_nodes[i] = acc;
    }

    // 1/A may underflow toward a rapidly growing endpoint: drop the flat
    // outermost cells (their contribution moves into the c1/c2 tails)
    let mut first = 0;
    while first + 1 < s_nodes.len() && s_nodes[first + 1] <= s_nodes[first] {
        first += 1;
    }
    let mut last = s_nodes.len() - 1;
    while last > first + 1 && s_nodes[last] <= s_nodes[last - 1] {
        last -= 1;
    }
    let r_nodes: Vec<f64> = r_nodes[first..=last].to_vec();
    let s_nodes: Vec<f64> = s_nodes[first..=last].to_vec();

    if s_nodes.len() < 2 || s_nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Geometry(
            "J is not strictly increasing; A may vanish inside the domain".to_string(),
        ));
    }

    let first = r_nodes[0];
    let last = *r_nodes.last().unwrap();
    let c1 = match classify_inv_a_tail(&geom, lo, first, true)? {
        Some(tail) => s_nodes[0] - tail,
        None => f64::NEG_INFINITY,
    };
    let c2 = match classify_inv_a_tail(&geom, hi, last, false)? {
        Some(tail) => s_nodes[s_nodes.len() - 1] + tail,
        None => f64::INFINITY,
    };

    let r_of_s_seed = Pchip::new(s_nodes.clone(), r_nodes.clone())?;
    Ok(ChangeOfVariables {
        geometry: geom,
        r0,
        c1,
        c2,
        r_nodes,
        s_nodes,
        r_of_s_seed,
    })
}

impl ChangeOfVariables {
    /// J(r).
    pub fn forward(&self, r: f64) -> Result<f64> {
        let (lo, hi) = self.geometry.domain();
        if !(r > lo && r < hi) {
            return Err(Error::OutsideDomain { point: r, lo, hi });
        }
        let opts = QuadOptions::with_tol(TABLE_TOL);
        let i = crate::spline::bracket(&self.r_nodes, r);
        let tail = quad::integrate(
            |t| Ok(1.0 / self.geometry.volume(t)?),
            self.r_nodes[i],
            r,
            &opts,
        )?;
        Ok(self.s_nodes[i] + tail.value)
    }

    /// r(s) by safeguarded Newton on J (dJ/dr = 1/A), seeded from the cached
    /// table and extended geometrically past it when needed.
    pub fn inverse(&self, s: f64) -> Result<f64> {
        if !(s > self.c1 && s < self.c2) {
            return Err(Error::OutsideDomain {
                point: s,
                lo: self.c1,
                hi: self.c2,
            });
        }
        let (mut a, mut b) = self.bracket_inverse(s)?;
        let mut r = self.r_of_s_seed.eval(s).clamp(a, b);
        let scale = s.abs().max(1.0);
        for _ in 0..100 {
            let js = self.forward(r)? - s;
            if js.abs() <= 1e-13 * scale {
                return Ok(r);
            }
            if js > 0.0 {
                b = r;
            } else {
                a = r;
            }
            let mut next = r - js * self.geometry.volume(r)?;
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if next == r {
                return Ok(r);
            }
            r = next;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                return Ok(mid);
            }
            if self.forward(mid)? < s {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// A(r(s)).
    pub fn volume_at_s(&self, s: f64) -> Result<f64> {
        self.geometry.volume(self.inverse(s)?)
    }

    fn bracket_inverse(&self, s: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.geometry.domain();
        let s_first = self.s_nodes[0];
        let s_last = *self.s_nodes.last().unwrap();
        if s >= s_first && s <= s_last {
            let i = crate::spline::bracket(&self.s_nodes, s);
            return Ok((self.r_nodes[i], self.r_nodes[i + 1]));
        }
        if s < s_first {
            let mut b = self.r_nodes[0];
            let mut a = next_toward(b, lo);
            for _ in 0..2000 {
                if self.forward(a)? <= s {
                    return Ok((a, b));
                }
                b = a;
                let further = next_toward(a, lo);
                if further == a {
                    break;
                }
                a = further;
            }
            return Err(Error::RootFinding(format!(
                "could not bracket r(s) for s = {} near the lower endpoint",
                s
            )));
        }
        let mut a = *self.r_nodes.last().unwrap();
        let mut b = next_toward(a, hi);
        for _ in 0..2000 {
            if self.forward(b)? >= s {
                return Ok((a, b));
            }
            a = b;
            let further = next_toward(b, hi);
            if further == b {
                break;
            }
            b = further;
        }
        Err(Error::RootFinding(format!(
            "could not bracket r(s) for s = {} near the upper endpoint",
            s
        )))
    }
}

/// Step from `from` toward the (possibly infinite) endpoint `target`,
/// halving the gap to a finite endpoint or doubling toward an infinite one.
fn next_toward(from: f64, target: f64) -> f64 {
    if target.is_finite() {
        from + 0.5 * (target - from)
    } else if target > 0.0 {
        if from > 0.0 {
            from * 2.0
        } else {
            from + 1.0
        }
    } else if from < 0.0 {
        from * 2.0
    } else {
        from - 1.0
    }
}

/// Tail of ∫ 1/A toward an endpoint: Some(value) when it converges, None when
/// it diverges; an ambiguous classification is an error.
fn classify_inv_a_tail(
    geom: &GeometrySpec,
    endpoint: f64,
    from: f64,
    lower: bool,
) -> Result<Option<f64>> {
    let behavior = if lower {
        geom.orbit_volume.behavior_lo
    } else {
        geom.orbit_volume.behavior_hi
    };
    let opts = QuadOptions::default();
    let inv_a = |t: f64| Ok(1.0 / geom.volume(t)?);

    let converges = match (endpoint.is_finite(), behavior) {
        (true, Some(b)) => Some(b.inv_a_integrable_at_finite()),
        (false, Some(EndpointBehavior::PositiveLimit)) => Some(false),
        // at ±∞ with A ~ c·|r|^k, 1/A is integrable iff k > 1
        (false, Some(EndpointBehavior::Power(k))) => Some(k > 1.0 + 1e-3),
        (false, Some(EndpointBehavior::Exponential(rate))) => Some(rate > 0.0),
        (_, None) => None,
    };

    match converges {
        Some(false) => Ok(None),
        Some(true) => {
            let value = if endpoint.is_finite() {
                let order = behavior.and_then(|b| b.inv_a_substitution_order());
                let res = if lower {
                    quad::integrate_auto(inv_a, endpoint, from, order, None, &opts)?
                } else {
                    quad::integrate_auto(inv_a, from, endpoint, None, order, &opts)?
                };
                res.require_converged("endpoint tail of 1/A")?
            } else if lower {
                quad::integrate_improper(inv_a, f64::NEG_INFINITY, from, &opts)?
                    .require_converged("lower tail of 1/A")?
            } else {
                quad::integrate_improper(inv_a, from, f64::INFINITY, &opts)?
                    .require_converged("upper tail of 1/A")?
            };
            Ok(Some(value.abs()))
        }
        None => richardson_tail(geom, endpoint, from, lower),
    }
}

/// Fallback classification by extrapolating truncated integrals; declares an
/// inconclusive outcome when the increment trend is ambiguous.
fn richardson_tail(
    geom: &GeometrySpec,
    endpoint: f64,
    from: f64,
    lower: bool,
) -> Result<Option<f64>> {
    let opts = QuadOptions::default();
    let inv_a = |t: f64| Ok(1.0 / geom.volume(t)?);
    let mut cuts = Vec::new();
    for j in 1..=10 {
        let c = if endpoint.is_finite() {
            endpoint + (from - endpoint) * 0.25f64.powi(j)
        } else if lower {
            -(from.abs().max(1.0)) * 4.0f64.powi(j)
        } else {
            from.abs().max(1.0) * 4.0f64.powi(j)
        };
        cuts.push(c);
    }
    let mut total = 0.0;
    let mut increments = Vec::new();
    let mut prev = from;
    for &c in &cuts {
        let seg = quad::integrate(inv_a, prev, c, &opts)?;
        increments.push(seg.value.abs());
        total += seg.value.abs();
        prev = c;
    }
    let late = &increments[increments.len() - 4..];
    let ratios: Vec<f64> = late.windows(2).map(|w| w[1] / w[0].max(1e-300)).collect();
    if ratios.iter().all(|&q| q < 0.6) {
        let q = ratios[ratios.len() - 1].min(0.6);
        let tail = late[3] * q / (1.0 - q);
        Ok(Some(total + tail))
    } else if ratios.iter().all(|&q| q > 0.9) {
        Ok(None)
    } else {
        Err(Error::Inconclusive {
            message: format!(
                "truncated ∫1/A increments near {} neither decay nor stabilize (ratios {:?})",
                endpoint, ratios
            ),
        })
    }
}

fn cov_nodes(domain: (f64, f64), r0: f64) -> Vec<f64> {
    let (lo, hi) = domain;
    let mut nodes = vec![r0];
    let mut r = r0;
    for _ in 0..60 {
        let next = next_toward(r, lo);
        let close_enough = if lo.is_finite() {
            (next - lo).abs() <= 1e-9 * (r0 - lo).abs().max(1e-9)
        } else {
            next.abs() >= 1e9
        };
        nodes.push(next);
        r = next;
        if close_enough {
            break;
        }
    }
    r = r0;
    for _ in 0..60 {
        let next = next_toward(r, hi);
        let close_enough = if hi.is_finite() {
            (hi - next).abs() <= 1e-9 * (hi - r0).abs().max(1e-9)
        } else {
            next.abs() >= 1e9
        };
        nodes.push(next);
        r = next;
        if close_enough {
            break;
        }
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nodes.dedup();
    let mut refined = Vec::with_capacity(nodes.len() * 4);
    for w in nodes.windows(2) {
        refined.push(w[0]);
        for k in 1..4 {
            refined.push(w[0] + (w[1] - w[0]) * k as f64 / 4.0);
        }
    }
    refined.push(*nodes.last().unwrap());
    refined
}

/// Cached comparison profile ρ(r) = ∫_a^r dt/A(t) with endpoint-singularity
/// handling at a, plus the classification of ρ(∞) (None = infinite).
pub struct RhoFn {
    geometry: Arc<GeometrySpec>,
    pub a: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
    pub rho_infinity: Option<f64>,
}

impl RhoFn {
    pub fn new(geom: Arc<GeometrySpec>, a: f64) -> Result<Self> {
        let (lo, hi) = geom.domain();
        if a < lo || a >= hi {
            return Err(Error::OutsideDomain { point: a, lo, hi });
        }
        let behavior = if a <= lo {
            geom.orbit_volume.behavior_lo
        } else {
            Some(EndpointBehavior::PositiveLimit)
        };
        if let Some(b) = behavior {
            if !b.inv_a_integrable_at_finite() {
                return Err(Error::Divergent {
                    message: format!(
                        "1/A has endpoint behavior {:?} at a = {}; ρ diverges",
                        b, a
                    ),
                });
            }
        }
        let order = behavior.and_then(|b| b.inv_a_substitution_order());
        let opts = QuadOptions::with_tol(TABLE_TOL);
        let span = if hi.is_finite() { hi - a } else { 1.0 };
        let first = a + 1e-6 * span.min(1.0);
        let head = quad::integrate_auto(
            |t| Ok(1.0 / geom.volume(t)?),
            a,
            first,
            order,
            None,
            &opts,
        )?
        .require_converged("ρ head segment")?;

        let mut coarse = vec![first];
        let mut r = first;
        for _ in 0..200 {
            let next = next_toward(r, hi);
            let stop = if hi.is_finite() {
                (hi - next) <= 1e-9 * (hi - a).max(1e-9)
            } else {
                next >= 1e9
            };
            coarse.push(next);
            r = next;
            if stop {
                break;
            }
        }
        let mut nodes = Vec::new();
        for w in coarse.windows(2) {
            nodes.push(w[0]);
            for k in 1..4 {
                nodes.push(w[0] + (w[1] - w[0]) * k as f64 / 4.0);
            }
        }
        nodes.push(*coarse.last().unwrap());

        let mut values = vec![head];
        for w in nodes.windows(2) {
            let seg = quad::integrate(|t| Ok(1.0 / geom.volume(t)?), w[0], w[1], &opts)?;
            values.push(values.last().unwrap() + seg.value);
        }

        let rho_infinity = classify_inv_a_tail(&geom, hi, *nodes.last().unwrap(), false)?
            .map(|tail| values.last().unwrap() + tail);

        Ok(RhoFn {
            geometry: geom,
            a,
            nodes,
            values,
            rho_infinity,
        })
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        let (_, hi) = self.geometry.domain();
        if r < self.a || r >= hi {
            return Err(Error::OutsideDomain {
                point: r,
                lo: self.a,
                hi,
            });
        }
        if r == self.a {
            return Ok(0.0);
        }
        let opts = QuadOptions::with_tol(TABLE_TOL);
        if r < self.nodes[0] {
            let order = if self.a <= self.geometry.domain().0 {
                self.geometry
                    .orbit_volume
                    .behavior_lo
                    .and_then(|b| b.inv_a_substitution_order())
            } else {
                None
            };
            return quad::integrate_auto(
                |t| Ok(1.0 / self.geometry.volume(t)?),
                self.a,
                r,
                order,
                None,
                &opts,
            )?
            .require_converged("ρ near base point");
        }
        let i = crate::spline::bracket(&self.nodes, r);
        let tail = quad::integrate(
            |t| Ok(1.0 / self.geometry.volume(t)?),
            self.nodes[i],
            r,
            &opts,
        )?;
        Ok(self.values[i] + tail.value)
    }
}

/// ρ(r) = ∫_a^r dt/A(t). Errors when 1/A is not integrable at a.
pub fn rho(geom: &Arc<GeometrySpec>, a: f64, r: f64) -> Result<f64> {
    RhoFn::new(geom.clone(), a)?.eval(r)
}

/// Tent function g_θ(s) = θ/(c2−c1)·min(s−c1, c2−s) on a finite (c1, c2).
pub fn g_theta(theta: f64, c1: f64, c2: f64, s: f64) -> Result<f64> {
    if !(c1.is_finite() && c2.is_finite() && c1 < c2) {
        return Err(Error::InvalidArgument(format!(
            "g_theta needs finite c1 < c2, got ({}, {})",
            c1, c2
        )));
    }
    if theta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "g_theta needs theta > 0, got {}",
            theta
        )));
    }
    if !(s > c1 && s < c2) {
        return Err(Error::OutsideDomain {
            point: s,
            lo: c1,
            hi: c2,
        });
    }
    Ok(theta / (c2 - c1) * (s - c1).min(c2 - s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::geometry::{model_space, warped_r3, GeometrySpec, ModelKind};

    fn arc(g: GeometrySpec) -> Arc<GeometrySpec> {
        Arc::new(g)
    }

    #[test]
    fn reduce_euclidean_2_drift_is_one_over_r() {
        let g = arc(model_space(ModelKind::Euclidean, 2).unwrap());
        let ode = reduce(g, parse_expr("0").unwrap()).unwrap();
        for r in [0.5, 1.0, 7.0] {
            let v = ode.rhs(r, 0.0, 1.0).unwrap();
            assert!((v + 1.0 / r).abs() < 1e-13);
        }
    }

    #[test]
    fn reduce_warped_r3_has_no_drift() {
        let g = arc(warped_r3());
        let ode = reduce(g, parse_expr("y").unwrap()).unwrap();
        assert_eq!(ode.rhs(0.3, 2.0, 5.0).unwrap(), 2.0);
    }

    #[test]
    fn reduce_sphere_2_drift_is_cot() {
        let g = arc(model_space(ModelKind::Sphere, 2).unwrap());
        let ode = reduce(g, parse_expr("0").unwrap()).unwrap();
        for r in [0.4, 1.2, 2.8] {
            let v = ode.rhs(r, 0.0, 1.0).unwrap();
            assert!((v + 1.0 / r.tan()).abs() < 1e-12, "at {}: {}", r, v);
        }
    }

    #[test]
    fn reduce_rejects_angular_dependence() {
        let g = arc(model_space(ModelKind::Euclidean, 2).unwrap());
        assert!(reduce(g, parse_expr("y + s").unwrap()).is_err());
    }

    #[test]
    fn self_adjoint_consistency() {
        let g = arc(model_space(ModelKind::Euclidean, 3).unwrap());
        let f = parse_expr("y - r").unwrap();
        let reduced = reduce(g, f).unwrap();
        let selfadj = reduced.in_form(OdeForm::SelfAdjoint);
        for r in [0.5, 1.5, 4.0] {
            let (u, du, ddu) = (1.3, -0.4, 0.9);
            let res_r = reduced.residual(r, u, du, ddu).unwrap();
            let res_sa = selfadj.residual(r, u, du, ddu).unwrap();
            let a = reduced.geometry.volume(r).unwrap();
            assert!(
                (res_sa - a * res_r).abs() <= 1e-9 * res_sa.abs().max(1.0),
                "r={}: {} vs A*{}",
                r,
                res_sa,
                res_r
            );
        }
    }

    #[test]
    fn cov_euclidean_3_closed_form() {
        let g = arc(model_space(ModelKind::Euclidean, 3).unwrap());
        let cov = build_change_of_variables(g, Some(1.0)).unwrap();
        let four_pi = 4.0 * std::f64::consts::PI;
        for r in [0.2, 0.5, 2.0, 10.0] {
            let expect = (1.0 - 1.0 / r) / four_pi;
            let got = cov.forward(r).unwrap();
            assert!(
                (got - expect).abs() < 1e-12,
                "J({}) = {} vs {}",
                r,
                got,
                expect
            );
        }
        assert_eq!(cov.c1, f64::NEG_INFINITY);
        assert!((cov.c2 - 1.0 / four_pi).abs() < 1e-10, "c2 = {}", cov.c2);
        assert_eq!(cov.forward(1.0).unwrap(), 0.0);
    }

    #[test]
    fn cov_euclidean_2_is_log() {
        let g = arc(model_space(ModelKind::Euclidean, 2).unwrap());
        let cov = build_change_of_variables(g, Some(1.0)).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        for r in [0.01f64, 0.7, 3.0, 50.0] {
            let expect = r.ln() / two_pi;
            assert!((cov.forward(r).unwrap() - expect).abs() < 1e-12);
        }
        assert_eq!(cov.c1, f64::NEG_INFINITY);
        assert_eq!(cov.c2, f64::INFINITY);
    }

    #[test]
    fn cov_warped_r3_is_linear() {
        let g = arc(warped_r3());
        let cov = build_change_of_variables(g, Some(0.0)).unwrap();
        for z in [-8.0, -1.0, 0.5, 12.0] {
            let expect = z / std::f64::consts::PI;
            assert!((cov.forward(z).unwrap() - expect).abs() < 1e-12);
        }
        assert_eq!((cov.c1, cov.c2), (f64::NEG_INFINITY, f64::INFINITY));
    }

    #[test]
    fn inverse_round_trips() {
        let g = arc(model_space(ModelKind::Euclidean, 3).unwrap());
        let cov = build_change_of_variables(g, Some(1.0)).unwrap();
        for r in [0.05, 0.3, 1.0, 4.0, 40.0] {
            let s = cov.forward(r).unwrap();
            let back = cov.inverse(s).unwrap();
            assert!(
                (back - r).abs() <= 1e-10 * r.abs().max(1.0),
                "r={} -> s={} -> {}",
                r,
                s,
                back
            );
        }
    }

    #[test]
    fn forward_is_strictly_increasing() {
        let g = arc(model_space(ModelKind::Sphere, 2).unwrap());
        let cov = build_change_of_variables(g, None).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 1..200 {
            let r = std::f64::consts::PI * i as f64 / 200.0;
            let s = cov.forward(r).unwrap();
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn sphere_image_is_whole_line() {
        let g = arc(model_space(ModelKind::Sphere, 2).unwrap());
        let cov = build_change_of_variables(g, None).unwrap();
        assert_eq!((cov.c1, cov.c2), (f64::NEG_INFINITY, f64::INFINITY));
    }

    #[test]
    fn transform_warped_constant_forcing() {
        let g = arc(warped_r3());
        let ode = reduce(g.clone(), parse_expr("1").unwrap()).unwrap();
        let cov = Arc::new(build_change_of_variables(g, Some(0.0)).unwrap());
        let tr = transform(&ode, cov).unwrap();
        // z'' = A² f = π²
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let v = tr.rhs(0.4, 123.0, -7.0).unwrap();
        assert!((v - pi2).abs() < 1e-9, "got {}", v);
    }

    #[test]
    fn transform_requires_r_coordinate() {
        let g = arc(warped_r3());
        let ode = reduce(g.clone(), parse_expr("1").unwrap()).unwrap();
        let cov = Arc::new(build_change_of_variables(g, Some(0.0)).unwrap());
        let tr = transform(&ode, cov.clone()).unwrap();
        assert!(transform(&tr, cov).is_err());
    }

    #[test]
    fn rho_constant_volume() {
        let a_expr = parse_expr("2*pi").unwrap();
        let g = arc(crate::geometry::from_orbit_volume_expr("flat", &a_expr, (0.0, 1.0), 2).unwrap());
        for r in [0.1, 0.5, 0.9] {
            let v = rho(&g, 0.0, r).unwrap();
            assert!(
                (v - r / (2.0 * std::f64::consts::PI)).abs() < 1e-12,
                "rho({}) = {}",
                r,
                v
            );
        }
    }

    #[test]
    fn rho_sqrt_profile_closed_form() {
        let a_expr = parse_expr("2*pi*sqrt(r)").unwrap();
        let g = arc(
            crate::geometry::from_orbit_volume_expr(
                "sqrt_profile",
                &a_expr,
                (0.0, f64::INFINITY),
                3,
            )
            .unwrap(),
        );
        let rho_fn = RhoFn::new(g, 0.0).unwrap();
        for r in [0.25f64, 1.0, 9.0] {
            let expect = r.sqrt() / std::f64::consts::PI;
            let got = rho_fn.eval(r).unwrap();
            assert!(
                (got - expect).abs() < 1e-9 * expect.max(1.0),
                "rho({}) = {} vs {}",
                r,
                got,
                expect
            );
        }
        assert!(rho_fn.rho_infinity.is_none());
    }

    #[test]
    fn rho_diverges_for_euclidean_2_at_origin() {
        let g = arc(model_space(ModelKind::Euclidean, 2).unwrap());
        match rho(&g, 0.0, 1.0) {
            Err(Error::Divergent { .. }) => {}
            other => panic!("expected divergence, got {:?}", other),
        }
    }

    #[test]
    fn rho_finite_at_infinity_for_euclidean_3() {
        let g = arc(model_space(ModelKind::Euclidean, 3).unwrap());
        let rho_fn = RhoFn::new(g, 1.0).unwrap();
        // ∫_1^∞ dt/(4πt²) = 1/(4π)
        let expect = 1.0 / (4.0 * std::f64::consts::PI);
        let got = rho_fn.rho_infinity.expect("finite limit");
        assert!((got - expect).abs() < 1e-9, "{} vs {}", got, expect);
    }

    #[test]
    fn g_theta_examples() {
        assert_eq!(g_theta(1.0, 0.0, 1.0, 0.5).unwrap(), 0.5);
        assert_eq!(g_theta(2.0, 0.0, 1.0, 0.25).unwrap(), 0.5);
        assert_eq!(g_theta(1.0, 0.0, 2.0, 0.5).unwrap(), 0.25);
        assert!(g_theta(0.0, 0.0, 1.0, 0.5).is_err());
        assert!(g_theta(1.0, f64::NEG_INFINITY, 1.0, 0.5).is_err());
    }

    #[test]
    fn default_base_points() {
        assert_eq!(default_base_point((0.0, 2.0)), 1.0);
        assert_eq!(default_base_point((0.0, f64::INFINITY)), 1.0);
        assert_eq!(default_base_point((3.0, f64::INFINITY)), 4.0);
        assert_eq!(default_base_point((f64::NEG_INFINITY, f64::INFINITY)), 0.0);
    }
}
