//! Geometries described by their orbit-volume function A(r) on a 1-D
//! transversal: the constant-curvature catalog, surfaces of revolution built
//! from profile curves (reparametrized by arclength), a warped ℝ³ with
//! finite-volume planar orbits, and user-supplied A(r).
//!
//! All geometry values are immutable after construction; evaluators are pure.

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, Var};
use crate::quad::{self, QuadOptions};
use crate::spline::Pchip;
use std::fmt;
use std::sync::Arc;

pub type ScalarFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// How A behaves at a domain endpoint: a positive finite limit, a power law
/// A ~ c·|r−e|^k (or A ~ c·r^k at an infinite endpoint), or exponential
/// growth/decay A ~ c·e^(k·r) (infinite endpoints).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndpointBehavior {
    PositiveLimit,
    Power(f64),
    Exponential(f64),
}

impl EndpointBehavior {
    /// Power-law exponent when that is the stored behavior.
    pub fn power(self) -> Option<f64> {
        match self {
            EndpointBehavior::Power(k) => Some(k),
            _ => None,
        }
    }

    /// Is 1/A integrable approaching a finite endpoint with this behavior?
    /// Fitted orders within 1e-3 of 1 classify as non-integrable: the fit
    /// cannot distinguish them from the log-divergent boundary case.
    pub fn inv_a_integrable_at_finite(self) -> bool {
        match self {
            EndpointBehavior::PositiveLimit | EndpointBehavior::Exponential(_) => true,
            EndpointBehavior::Power(k) => k < 1.0 - 1e-3,
        }
    }

    /// Substitution order for quadrature of 1/A at a finite endpoint, when an
    /// algebraic singularity is actually present.
    pub fn inv_a_substitution_order(self) -> Option<f64> {
        self.power().filter(|k| *k > 1e-3 && *k < 1.0 - 1e-3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum BoundaryCase {
    EmptyBoundary,
    WithBoundary,
}

/// The orbit-volume function A: (r_lo, r_hi) → ℝ⁺ with endpoint metadata.
#[derive(Clone)]
pub struct OrbitVolumeFn {
    evaluator: ScalarFn,
    pub domain: (f64, f64),
    pub behavior_lo: Option<EndpointBehavior>,
    pub behavior_hi: Option<EndpointBehavior>,
    derivative: Option<ScalarFn>,
}

impl fmt::Debug for OrbitVolumeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrbitVolumeFn")
            .field("domain", &self.domain)
            .field("behavior_lo", &self.behavior_lo)
            .field("behavior_hi", &self.behavior_hi)
            .field("has_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl OrbitVolumeFn {
    pub fn new(
        evaluator: ScalarFn,
        domain: (f64, f64),
        behavior_lo: Option<EndpointBehavior>,
        behavior_hi: Option<EndpointBehavior>,
        derivative: Option<ScalarFn>,
    ) -> Result<Self> {
        let (lo, hi) = domain;
        if !(lo < hi) {
            return Err(Error::Geometry(format!(
                "domain ({}, {}) is empty",
                lo, hi
            )));
        }
        if lo.is_finite() && lo < 0.0 {
            return Err(Error::Geometry(format!(
                "finite lower endpoint {} must be nonnegative",
                lo
            )));
        }
        let ov = OrbitVolumeFn {
            evaluator,
            domain,
            behavior_lo,
            behavior_hi,
            derivative,
        };
        for r in ov.interior_samples(17) {
            let a = ov.eval(r)?;
            if a <= 0.0 {
                return Err(Error::Geometry(format!(
                    "orbit volume must be positive; A({}) = {}",
                    r, a
                )));
            }
        }
        // a supplied derivative must agree with central differences
        if ov.derivative.is_some() {
            for r in ov.interior_samples(9) {
                let sym = ov.deriv(r)?;
                let h = ov.fd_step(r);
                let f = &ov.evaluator;
                let fd = (-f(r + 2.0 * h)? + 8.0 * f(r + h)? - 8.0 * f(r - h)?
                    + f(r - 2.0 * h)?)
                    / (12.0 * h);
                let scale = sym.abs().max(fd.abs()).max(ov.eval(r)?.abs());
                if (sym - fd).abs() > 1e-6 * scale.max(1e-12) {
                    return Err(Error::Geometry(format!(
                        "supplied derivative disagrees with finite differences at r = {}: {} vs {}",
                        r, sym, fd
                    )));
                }
            }
        }
        Ok(ov)
    }

    /// A(r); `r` must lie strictly inside the domain.
    pub fn eval(&self, r: f64) -> Result<f64> {
        self.check_interior(r)?;
        (self.evaluator)(r)
    }

    /// A'(r): the stored derivative when present, else a fourth-order central
    /// difference with step scaled to the distance from the endpoints.
    pub fn deriv(&self, r: f64) -> Result<f64> {
        self.check_interior(r)?;
        if let Some(d) = &self.derivative {
            return d(r);
        }
        let h = self.fd_step(r);
        let f = &self.evaluator;
        Ok((-f(r + 2.0 * h)? + 8.0 * f(r + h)? - 8.0 * f(r - h)? + f(r - 2.0 * h)?) / (12.0 * h))
    }

    pub fn has_symbolic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    fn fd_step(&self, r: f64) -> f64 {
        let (lo, hi) = self.domain;
        let mut h = 2.5e-3 * r.abs().max(1.0);
        if lo.is_finite() {
            h = h.min(0.2 * (r - lo));
        }
        if hi.is_finite() {
            h = h.min(0.2 * (hi - r));
        }
        h
    }

    fn check_interior(&self, r: f64) -> Result<()> {
        let (lo, hi) = self.domain;
        if r > lo && r < hi && r.is_finite() {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: r, lo, hi })
        }
    }

    /// Representative interior points, geometrically graded toward infinite
    /// or singular endpoints.
    pub fn interior_samples(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.domain;
        let (a, b) = clip_window(lo, hi);
        (1..=n)
            .map(|i| a + (b - a) * i as f64 / (n as f64 + 1.0))
            .collect()
    }
}

/// A finite working window inside (lo, hi), pulling infinite endpoints in and
/// stepping off singular finite ones.
pub fn clip_window(lo: f64, hi: f64) -> (f64, f64) {
    let a = if lo.is_finite() {
        let span = if hi.is_finite() { hi - lo } else { 1.0 };
        lo + 1e-3 * span.min(1.0)
    } else if hi.is_finite() {
        hi - 10.0
    } else {
        -5.0
    };
    let b = if hi.is_finite() {
        let span = if lo.is_finite() { hi - lo } else { 1.0 };
        hi - 1e-3 * span.min(1.0)
    } else if lo.is_finite() {
        lo + 10.0
    } else {
        5.0
    };
    (a, b)
}

/// Profile curve of a surface of revolution, stored as functions of the
/// arclength coordinate r: distance from the axis and height along it.
#[derive(Clone)]
pub struct Profile {
    pub radius: ScalarFn,
    pub height: ScalarFn,
    pub r_range: (f64, f64),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Profile")
            .field("r_range", &self.r_range)
            .finish()
    }
}

/// A manifold with polar action, known through A(r) plus endpoint metadata.
#[derive(Debug, Clone)]
pub struct GeometrySpec {
    pub name: String,
    pub ambient_dim: u32,
    pub orbit_volume: OrbitVolumeFn,
    pub fixed_point_at_lo: bool,
    pub fixed_point_at_hi: bool,
    pub profile: Option<Profile>,
    pub boundary_case: BoundaryCase,
}

impl GeometrySpec {
    pub fn domain(&self) -> (f64, f64) {
        self.orbit_volume.domain
    }

    pub fn volume(&self, r: f64) -> Result<f64> {
        self.orbit_volume.eval(r)
    }

    /// (ln A)'(r) = A'(r)/A(r), the drift coefficient of the reduced ODE.
    /// Rejects r at or outside the endpoints, where the radial operator is
    /// singular at fixed points.
    pub fn log_derivative(&self, r: f64) -> Result<f64> {
        Ok(self.orbit_volume.deriv(r)? / self.orbit_volume.eval(r)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Euclidean,
    Sphere,
    Hyperbolic,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Euclidean => "euclidean",
            ModelKind::Sphere => "sphere",
            ModelKind::Hyperbolic => "hyperbolic",
        }
    }
}

/// Measure of the Euclidean unit sphere S^(n-1) ⊂ ℝⁿ: 2π^(n/2)/Γ(n/2).
pub fn unit_sphere_measure(n: u32) -> f64 {
    let half_pi_pow = std::f64::consts::PI.powf(n as f64 / 2.0);
    2.0 * half_pi_pow / gamma_half(n)
}

// Γ(n/2) for integer n ≥ 1.
fn gamma_half(n: u32) -> f64 {
    if n.is_multiple_of(2) {
        // Γ(k) = (k-1)!
        let k = n / 2;
        (1..k).map(|i| i as f64).product()
    } else {
        // Γ(k + 1/2) = (2k)! √π / (4^k k!)
        let k = (n - 1) / 2;
        let mut v = std::f64::consts::PI.sqrt();
        for i in 1..=k {
            v *= i as f64 - 0.5;
        }
        v
    }
}

/// Constant-curvature model spaces: A(r) is ω·r^(n−1), ω·sin^(n−1)(r), or
/// ω·sinh^(n−1)(r) with ω the unit-sphere measure.
pub fn model_space(kind: ModelKind, n: u32) -> Result<GeometrySpec> {
    if n < 2 {
        return Err(Error::Geometry(format!(
            "model spaces need ambient dimension n >= 2, got {}",
            n
        )));
    }
    let omega = unit_sphere_measure(n);
    let p = (n - 1) as f64;
    let (eval, deriv, domain, behavior_hi, fixed_hi): (
        ScalarFn,
        ScalarFn,
        (f64, f64),
        EndpointBehavior,
        bool,
    ) = match kind {
        ModelKind::Euclidean => (
            Arc::new(move |r: f64| Ok(omega * r.powf(p))),
            Arc::new(move |r: f64| Ok(omega * p * r.powf(p - 1.0))),
            (0.0, f64::INFINITY),
            EndpointBehavior::Power(p),
            false,
        ),
        ModelKind::Sphere => (
            Arc::new(move |r: f64| Ok(omega * r.sin().powf(p))),
            Arc::new(move |r: f64| Ok(omega * p * r.sin().powf(p - 1.0) * r.cos())),
            (0.0, std::f64::consts::PI),
            EndpointBehavior::Power(p),
            true,
        ),
        ModelKind::Hyperbolic => (
            Arc::new(move |r: f64| Ok(omega * r.sinh().powf(p))),
            Arc::new(move |r: f64| Ok(omega * p * r.sinh().powf(p - 1.0) * r.cosh())),
            (0.0, f64::INFINITY),
            EndpointBehavior::Exponential(p),
            false,
        ),
    };
    let orbit_volume = OrbitVolumeFn::new(
        eval,
        domain,
        Some(EndpointBehavior::Power(p)),
        Some(behavior_hi),
        Some(deriv),
    )?;
    // The n=2 models embed as surfaces of revolution of unit-speed profiles.
    let profile = match (kind, n) {
        (ModelKind::Euclidean, 2) => Some(Profile {
            radius: Arc::new(|r: f64| Ok(r)),
            height: Arc::new(|_| Ok(0.0)),
            r_range: (0.0, f64::INFINITY),
        }),
        (ModelKind::Sphere, 2) => Some(Profile {
            radius: Arc::new(|r: f64| Ok(r.sin())),
            height: Arc::new(|r: f64| Ok(-r.cos())),
            r_range: (0.0, std::f64::consts::PI),
        }),
        _ => None,
    };
    Ok(GeometrySpec {
        name: format!("{}_{}", kind.name(), n),
        ambient_dim: n,
        orbit_volume,
        fixed_point_at_lo: true,
        fixed_point_at_hi: fixed_hi,
        profile,
        boundary_case: BoundaryCase::EmptyBoundary,
    })
}

/// ℝ³ with the warped metric e^(−(x²+y²))⟨·,·⟩ on planar ℝ² orbits along the
/// z-axis transversal: every orbit has measure ∫ e^(−(x²+y²)) = π.
pub fn warped_r3() -> GeometrySpec {
    let orbit_volume = OrbitVolumeFn::new(
        Arc::new(|_| Ok(std::f64::consts::PI)),
        (f64::NEG_INFINITY, f64::INFINITY),
        Some(EndpointBehavior::PositiveLimit),
        Some(EndpointBehavior::PositiveLimit),
        Some(Arc::new(|_| Ok(0.0))),
    )
    .expect("constant orbit volume is valid");
    GeometrySpec {
        name: "warped_r3".to_string(),
        ambient_dim: 3,
        orbit_volume,
        fixed_point_at_lo: false,
        fixed_point_at_hi: false,
        profile: None,
        boundary_case: BoundaryCase::EmptyBoundary,
    }
}

/// Cumulative arclength of a profile curve with its numeric inverse
/// (bracketed Newton on the cumulative-quadrature table).
pub struct ArcLength {
    ts: Vec<f64>,
    lengths: Vec<f64>,
    t_of_r_seed: Pchip,
    speed: ScalarFn,
    pub total: f64,
}

impl ArcLength {
    fn new(speed: ScalarFn, t_lo: f64, t_hi: f64, nodes: usize) -> Result<Self> {
        let opts = QuadOptions::with_tol(1e-12);
        let ts: Vec<f64> = (0..=nodes)
            .map(|i| t_lo + (t_hi - t_lo) * i as f64 / nodes as f64)
            .collect();
        let mut lengths = vec![0.0];
        for w in ts.windows(2) {
            let seg = quad::integrate(|t| speed(t), w[0], w[1], &opts)?;
            lengths.push(lengths.last().unwrap() + seg.value);
        }
        if lengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Geometry(
                "profile parametrization is degenerate (zero speed on a subinterval)".to_string(),
            ));
        }
        let total = *lengths.last().unwrap();
        let t_of_r_seed = Pchip::new(lengths.clone(), ts.clone())?;
        Ok(ArcLength {
            ts,
            lengths,
            t_of_r_seed,
            speed,
            total,
        })
    }

    /// Arclength r(t) from the lower parameter end.
    pub fn length_at(&self, t: f64) -> Result<f64> {
        let i = crate::spline::bracket(&self.ts, t);
        let opts = QuadOptions::with_tol(1e-12);
        let tail = quad::integrate(|u| (self.speed)(u), self.ts[i], t, &opts)?;
        Ok(self.lengths[i] + tail.value)
    }

    /// Parameter t(r): PCHIP seed refined by Newton on the cumulative table.
    pub fn t_of_r(&self, r: f64) -> Result<f64> {
        let r = r.clamp(0.0, self.total);
        let mut t = self
            .t_of_r_seed
            .eval(r)
            .clamp(self.ts[0], *self.ts.last().unwrap());
        for _ in 0..60 {
            let residual = self.length_at(t)? - r;
            if residual.abs() <= 1e-13 * self.total.max(1.0) {
                return Ok(t);
            }
            let sp = (self.speed)(t)?;
            if sp <= 0.0 {
                break;
            }
            t = (t - residual / sp).clamp(self.ts[0], *self.ts.last().unwrap());
        }
        // fall back to bisection on the monotone cumulative length
        let (mut a, mut b) = (self.ts[0], *self.ts.last().unwrap());
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if self.length_at(mid)? < r {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }
}

/// Surface of revolution of the profile (R(t), Z(t)), t ∈ [t_lo, t_hi],
/// rotated about the axis (S¹ action): reparametrizes by arclength r and sets
/// A(r) = 2π·R(t(r)). Endpoints with R = 0 are fixed points of the action;
/// finite endpoints with R > 0 carry boundary.
pub fn revolution_surface(
    name: &str,
    radius: ScalarFn,
    height: ScalarFn,
    t_lo: f64,
    t_hi: f64,
) -> Result<GeometrySpec> {
    if !(t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi) {
        return Err(Error::Geometry(format!(
            "profile parameter range [{}, {}] must be finite and increasing",
            t_lo, t_hi
        )));
    }
    let n_check = 257;
    let fd = 1e-6 * (t_hi - t_lo);
    let speed: ScalarFn = {
        let radius = radius.clone();
        let height = height.clone();
        Arc::new(move |t: f64| {
            let (a, b) = central_pair(t, fd, t_lo, t_hi);
            let dr = (radius(b)? - radius(a)?) / (b - a);
            let dz = (height(b)? - height(a)?) / (b - a);
            Ok((dr * dr + dz * dz).sqrt())
        })
    };
    for i in 0..=n_check {
        let t = t_lo + (t_hi - t_lo) * i as f64 / n_check as f64;
        let rv = radius(t)?;
        if rv < 0.0 {
            return Err(Error::Geometry(format!(
                "profile radius is negative at t = {}: R = {}",
                t, rv
            )));
        }
        if i > 0 && i < n_check {
            let sp = speed(t)?;
            if sp <= 0.0 {
                return Err(Error::Geometry(format!(
                    "degenerate (zero-speed) parametrization at t = {}",
                    t
                )));
            }
        }
    }

    let arc = Arc::new(ArcLength::new(speed, t_lo, t_hi, 256)?);
    let total = arc.total;

    let radius_of_r: ScalarFn = {
        let arc = arc.clone();
        let radius = radius.clone();
        Arc::new(move |r: f64| radius(arc.t_of_r(r)?))
    };
    let height_of_r: ScalarFn = {
        let arc = arc.clone();
        let height = height.clone();
        Arc::new(move |r: f64| height(arc.t_of_r(r)?))
    };

    let two_pi = 2.0 * std::f64::consts::PI;
    let volume: ScalarFn = {
        let radius_of_r = radius_of_r.clone();
        Arc::new(move |r: f64| Ok(two_pi * radius_of_r(r)?))
    };

    let r_lo_fixed = radius(t_lo)? <= 1e-12;
    let r_hi_fixed = radius(t_hi)? <= 1e-12;

    let behavior_lo = if r_lo_fixed {
        fit_endpoint_order(&*volume, 0.0, total, true)
    } else {
        Some(EndpointBehavior::PositiveLimit)
    };
    let behavior_hi = if r_hi_fixed {
        fit_endpoint_order(&*volume, 0.0, total, false)
    } else {
        Some(EndpointBehavior::PositiveLimit)
    };

    let orbit_volume = OrbitVolumeFn::new(volume, (0.0, total), behavior_lo, behavior_hi, None)?;
    let boundary_case = if r_lo_fixed && r_hi_fixed {
        BoundaryCase::EmptyBoundary
    } else {
        BoundaryCase::WithBoundary
    };
    Ok(GeometrySpec {
        name: name.to_string(),
        ambient_dim: 3,
        orbit_volume,
        fixed_point_at_lo: r_lo_fixed,
        fixed_point_at_hi: r_hi_fixed,
        profile: Some(Profile {
            radius: radius_of_r,
            height: height_of_r,
            r_range: (0.0, total),
        }),
        boundary_case,
    })
}

/// Surface of revolution from two-column tables (t, R) and (t, Z),
/// interpolated with monotone cubic splines.
pub fn revolution_surface_from_tables(
    name: &str,
    radius_table: &[(f64, f64)],
    height_table: &[(f64, f64)],
) -> Result<GeometrySpec> {
    let (rt, rv): (Vec<f64>, Vec<f64>) = radius_table.iter().copied().unzip();
    let (zt, zv): (Vec<f64>, Vec<f64>) = height_table.iter().copied().unzip();
    let r_spline = Pchip::new(rt.clone(), rv)?;
    let z_spline = Pchip::new(zt.clone(), zv)?;
    let t_lo = rt.first().copied().unwrap().max(zt.first().copied().unwrap());
    let t_hi = rt.last().copied().unwrap().min(zt.last().copied().unwrap());
    let r_spline = Arc::new(r_spline);
    let z_spline = Arc::new(z_spline);
    revolution_surface(
        name,
        Arc::new(move |t| Ok(r_spline.eval(t))),
        Arc::new(move |t| Ok(z_spline.eval(t))),
        t_lo,
        t_hi,
    )
}

/// Geometry given directly by an A(r) expression on an open interval, the
/// escape hatch for orbit volumes with no profile construction.
pub fn from_orbit_volume_expr(
    name: &str,
    volume: &Expr,
    domain: (f64, f64),
    ambient_dim: u32,
) -> Result<GeometrySpec> {
    if volume
        .free_vars()
        .iter()
        .any(|v| *v != Var::R)
    {
        return Err(Error::Geometry(
            "orbit volume expression may depend only on r".to_string(),
        ));
    }
    let deriv_expr = crate::expr::differentiate(volume, Var::R);
    let volume = volume.clone();
    let eval: ScalarFn = {
        let volume = volume.clone();
        Arc::new(move |r: f64| volume.eval(&Bindings::new().r(r)))
    };
    let deriv: ScalarFn = Arc::new(move |r: f64| deriv_expr.eval(&Bindings::new().r(r)));
    let behavior_lo = fit_endpoint_order(&*eval, domain.0, domain.1, true);
    let behavior_hi = fit_endpoint_order(&*eval, domain.0, domain.1, false);
    let fixed_lo = domain.0.is_finite()
        && matches!(behavior_lo, Some(EndpointBehavior::Power(k)) if k > 0.0);
    let fixed_hi = domain.1.is_finite()
        && matches!(behavior_hi, Some(EndpointBehavior::Power(k)) if k > 0.0);
    let orbit_volume = OrbitVolumeFn::new(eval, domain, behavior_lo, behavior_hi, Some(deriv))?;
    let boundary = if (domain.0.is_finite() && !fixed_lo) || (domain.1.is_finite() && !fixed_hi) {
        BoundaryCase::WithBoundary
    } else {
        BoundaryCase::EmptyBoundary
    };
    Ok(GeometrySpec {
        name: name.to_string(),
        ambient_dim,
        orbit_volume,
        fixed_point_at_lo: fixed_lo,
        fixed_point_at_hi: fixed_hi,
        profile: None,
        boundary_case: boundary,
    })
}

fn central_pair(t: f64, fd: f64, t_lo: f64, t_hi: f64) -> (f64, f64) {
    let a = (t - fd).max(t_lo);
    let b = (t + fd).min(t_hi);
    (a, b)
}

/// Log-log regression of A near an endpoint: samples at geometrically shrinking
/// distances and fits the local power. Slope magnitudes below 0.02 are treated
/// as a positive limit; non-stabilizing slopes yield None (unknown).
pub fn fit_endpoint_order<F>(volume: &F, lo: f64, hi: f64, at_lo: bool) -> Option<EndpointBehavior>
where
    F: Fn(f64) -> Result<f64> + ?Sized,
{
    let endpoint = if at_lo { lo } else { hi };
    if !endpoint.is_finite() {
        return fit_infinite_order(volume, lo, hi, at_lo);
    }
    let span = if lo.is_finite() && hi.is_finite() {
        hi - lo
    } else {
        1.0
    };
    let d0 = 0.05 * span.min(1.0);
    let mut pts = Vec::new();
    for j in 0..8 {
        let d = d0 * 0.25f64.powi(j);
        let r = if at_lo { endpoint + d } else { endpoint - d };
        match volume(r) {
            Ok(a) if a > 0.0 => pts.push((d.ln(), a.ln())),
            _ => return None,
        }
    }
    let slopes: Vec<f64> = pts
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect();
    let last = slopes[slopes.len() - 1];
    let prev = slopes[slopes.len() - 2];
    if (last - prev).abs() > 0.05 * last.abs().max(1.0) {
        return None;
    }
    let k = 0.5 * (last + prev);
    if k.abs() < 0.02 {
        Some(EndpointBehavior::PositiveLimit)
    } else {
        Some(EndpointBehavior::Power(k))
    }
}

fn fit_infinite_order<F>(volume: &F, lo: f64, hi: f64, at_lo: bool) -> Option<EndpointBehavior>
where
    F: Fn(f64) -> Result<f64> + ?Sized,
{
    // Sample along |r_j| = ref·2^j toward the infinite endpoint and test a
    // power law against exponential behavior.
    let reference = match (at_lo, lo.is_finite(), hi.is_finite()) {
        (true, _, true) => (hi - 1.0).abs().max(1.0),
        (false, true, _) => (lo + 1.0).abs().max(1.0),
        _ => 1.0,
    };
    let mut vals = Vec::new();
    for j in 0..10 {
        let r = reference * 2.0f64.powi(j) * if at_lo { -1.0 } else { 1.0 };
        match volume(r) {
            Ok(a) if a > 0.0 => vals.push((r, a)),
            _ => return None,
        }
    }
    // power fit: slope of ln A vs ln |r|
    let pow_slopes: Vec<f64> = vals
        .windows(2)
        .map(|w| (w[1].1.ln() - w[0].1.ln()) / (w[1].0.abs().ln() - w[0].0.abs().ln()))
        .collect();
    let (pl, pp) = (
        pow_slopes[pow_slopes.len() - 1],
        pow_slopes[pow_slopes.len() - 2],
    );
    if (pl - pp).abs() < 0.05 * pl.abs().max(1.0) {
        if pl.abs() < 0.02 {
            return Some(EndpointBehavior::PositiveLimit);
        }
        return Some(EndpointBehavior::Power(pl));
    }
    // exponential fit: slope of ln A vs r
    let exp_slopes: Vec<f64> = vals
        .windows(2)
        .map(|w| (w[1].1.ln() - w[0].1.ln()) / (w[1].0 - w[0].0))
        .collect();
    let (el, ep) = (
        exp_slopes[exp_slopes.len() - 1],
        exp_slopes[exp_slopes.len() - 2],
    );
    if (el - ep).abs() < 0.05 * el.abs().max(1.0) {
        return Some(EndpointBehavior::Exponential(el));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    #[test]
    fn euclidean_2_is_circle_circumference() {
        let g = model_space(ModelKind::Euclidean, 2).unwrap();
        let a = g.volume(3.0).unwrap();
        assert!((a - 2.0 * std::f64::consts::PI * 3.0).abs() < 1e-12);
        assert!(g.fixed_point_at_lo);
        assert!(!g.fixed_point_at_hi);
        assert_eq!(g.domain(), (0.0, f64::INFINITY));
    }

    #[test]
    fn sphere_2_latitude_circles() {
        let g = model_space(ModelKind::Sphere, 2).unwrap();
        for r in [0.3f64, 1.0, 2.0] {
            let a = g.volume(r).unwrap();
            assert!((a - 2.0 * std::f64::consts::PI * r.sin()).abs() < 1e-12);
            // independent check: arclength of the latitude circle
            // γ(t) = (sin r cos t, sin r sin t, cos r), |γ'| = sin r
            let circumference = quad::integrate(
                |_t| Ok(r.sin()),
                0.0,
                2.0 * std::f64::consts::PI,
                &QuadOptions::default(),
            )
            .unwrap()
            .value;
            assert!((a - circumference).abs() < 1e-10);
        }
        assert!(g.fixed_point_at_lo && g.fixed_point_at_hi);
        assert_eq!(g.domain().1, std::f64::consts::PI);
    }

    #[test]
    fn hyperbolic_3_geodesic_sphere_area() {
        let g = model_space(ModelKind::Hyperbolic, 3).unwrap();
        for r in [0.5f64, 1.0, 2.5] {
            let a = g.volume(r).unwrap();
            let expect = 4.0 * std::f64::consts::PI * r.sinh() * r.sinh();
            assert!((a - expect).abs() < 1e-10 * expect);
            // independent check: quadrature of the geodesic-sphere area
            // element sinh²(r)·sin(θ) over the angular coordinates
            let area = quad::integrate(
                |theta: f64| Ok(2.0 * std::f64::consts::PI * r.sinh().powi(2) * theta.sin()),
                0.0,
                std::f64::consts::PI,
                &QuadOptions::default(),
            )
            .unwrap()
            .value;
            assert!((a - area).abs() < 1e-9 * area, "{} vs {}", a, area);
        }
    }

    #[test]
    fn rejects_dimension_below_two() {
        assert!(model_space(ModelKind::Euclidean, 1).is_err());
    }

    #[test]
    fn unit_sphere_measures() {
        assert!((unit_sphere_measure(2) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_sphere_measure(3) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        // S^3 in R^4: 2 pi^2
        assert!((unit_sphere_measure(4) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn sphere_total_area_via_quadrature() {
        let g = model_space(ModelKind::Sphere, 2).unwrap();
        let opts = QuadOptions::default();
        let area = quad::integrate(
            |r| g.volume(r),
            1e-9,
            std::f64::consts::PI - 1e-9,
            &opts,
        )
        .unwrap();
        let expect = 4.0 * std::f64::consts::PI;
        assert!(
            (area.value - expect).abs() < 1e-8 * expect,
            "got {}",
            area.value
        );
    }

    #[test]
    fn log_derivative_catalog() {
        let e2 = model_space(ModelKind::Euclidean, 2).unwrap();
        assert!((e2.log_derivative(3.0).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        let s2 = model_space(ModelKind::Sphere, 2).unwrap();
        let v = s2.log_derivative(std::f64::consts::FRAC_PI_2).unwrap();
        assert!(v.abs() < 1e-14, "cot(pi/2) = 0, got {}", v);
        let w = warped_r3();
        assert_eq!(w.log_derivative(4.2).unwrap(), 0.0);
    }

    #[test]
    fn log_derivative_rejects_endpoints() {
        let g = model_space(ModelKind::Euclidean, 2).unwrap();
        assert!(g.log_derivative(0.0).is_err());
        assert!(g.log_derivative(-1.0).is_err());
    }

    #[test]
    fn log_derivative_fd_matches_symbolic() {
        let g = model_space(ModelKind::Sphere, 3).unwrap();
        let no_deriv = OrbitVolumeFn::new(
            Arc::new(|r: f64| Ok(unit_sphere_measure(3) * r.sin().powi(2))),
            (0.0, std::f64::consts::PI),
            Some(EndpointBehavior::Power(2.0)),
            Some(EndpointBehavior::Power(2.0)),
            None,
        )
        .unwrap();
        for r in [0.4, 1.0, 1.8, 2.6] {
            let sym = g.log_derivative(r).unwrap();
            let fd = no_deriv.deriv(r).unwrap() / no_deriv.eval(r).unwrap();
            assert!(
                (sym - fd).abs() <= 1e-6 * sym.abs().max(1.0),
                "r={}: {} vs {}",
                r,
                sym,
                fd
            );
        }
    }

    #[test]
    fn paraboloid_arclength_and_orbit_volume() {
        // R(t) = t, Z(t) = t^2 on [0,2]; arclength r(t) = ∫ sqrt(1+4 tau^2)
        let g = revolution_surface(
            "paraboloid",
            Arc::new(|t: f64| Ok(t)),
            Arc::new(|t: f64| Ok(t * t)),
            0.0,
            2.0,
        )
        .unwrap();
        assert!(g.fixed_point_at_lo);
        assert!(!g.fixed_point_at_hi);
        assert_eq!(g.boundary_case, BoundaryCase::WithBoundary);

        let closed_form = |t: f64| {
            // ∫_0^t sqrt(1+4 tau^2) d tau = t sqrt(1+4t^2)/2 + asinh(2t)/4
            t * (1.0 + 4.0 * t * t).sqrt() / 2.0 + (2.0 * t).asinh() / 4.0
        };
        let total = g.domain().1;
        assert!(
            (total - closed_form(2.0)).abs() < 1e-8 * total,
            "total {} vs {}",
            total,
            closed_form(2.0)
        );
        // A(r(t)) = 2 pi t at t = 1
        let r1 = closed_form(1.0);
        let a = g.volume(r1).unwrap();
        assert!(
            (a - 2.0 * std::f64::consts::PI).abs() < 1e-7,
            "A(r(1)) = {}",
            a
        );
    }

    #[test]
    fn cylinder_profile_constant_volume() {
        let g = revolution_surface(
            "cylinder",
            Arc::new(|_| Ok(1.0)),
            Arc::new(|t: f64| Ok(t)),
            0.0,
            1.0,
        )
        .unwrap();
        assert!(!g.fixed_point_at_lo && !g.fixed_point_at_hi);
        assert_eq!(g.boundary_case, BoundaryCase::WithBoundary);
        assert!((g.domain().1 - 1.0).abs() < 1e-10);
        for r in [0.2, 0.5, 0.9] {
            assert!((g.volume(r).unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-9);
        }
        assert_eq!(
            g.orbit_volume.behavior_lo,
            Some(EndpointBehavior::PositiveLimit)
        );
    }

    #[test]
    fn truncated_paraboloid_is_all_boundary() {
        let g = revolution_surface(
            "truncated_paraboloid",
            Arc::new(|t: f64| Ok(t)),
            Arc::new(|t: f64| Ok(t * t)),
            1.0,
            2.0,
        )
        .unwrap();
        assert!(!g.fixed_point_at_lo && !g.fixed_point_at_hi);
        assert_eq!(g.boundary_case, BoundaryCase::WithBoundary);
    }

    #[test]
    fn rejects_negative_radius_profile() {
        let res = revolution_surface(
            "bad",
            Arc::new(|t: f64| Ok(t - 0.5)),
            Arc::new(|t: f64| Ok(t)),
            0.0,
            1.0,
        );
        assert!(res.is_err());
    }

    #[test]
    fn rejects_degenerate_parametrization() {
        let res = revolution_surface(
            "stalled",
            Arc::new(|_| Ok(1.0)),
            Arc::new(|_| Ok(0.0)),
            0.0,
            1.0,
        );
        assert!(res.is_err());
    }

    #[test]
    fn warped_r3_constant_pi() {
        let g = warped_r3();
        for z in [-10.0, 0.0, 7.5] {
            assert_eq!(g.volume(z).unwrap(), std::f64::consts::PI);
        }
        assert!(!g.fixed_point_at_lo && !g.fixed_point_at_hi);
    }

    #[test]
    fn sqrt_profile_from_expression() {
        let a = parse_expr("2*pi*sqrt(r)").unwrap();
        let g = from_orbit_volume_expr("sqrt_profile", &a, (0.0, f64::INFINITY), 3).unwrap();
        assert!(g.fixed_point_at_lo);
        match g.orbit_volume.behavior_lo {
            Some(EndpointBehavior::Power(k)) => {
                assert!((k - 0.5).abs() < 0.02, "fitted order {}", k)
            }
            other => panic!("expected power behavior, got {:?}", other),
        }
        let ld = g.log_derivative(4.0).unwrap();
        assert!((ld - 0.125).abs() < 1e-10, "(ln A)'(4) = 1/(2*4), got {}", ld);
    }

    #[test]
    fn arclength_preserves_total_length() {
        // quarter circle R = cos t, Z = sin t, t in [0, pi/2]: length pi/2
        let g = revolution_surface(
            "quarter",
            Arc::new(|t: f64| Ok(t.cos())),
            Arc::new(|t: f64| Ok(t.sin())),
            0.0,
            std::f64::consts::FRAC_PI_2,
        )
        .unwrap();
        let total = g.domain().1;
        assert!(
            (total - std::f64::consts::FRAC_PI_2).abs() < 1e-8 * total,
            "got {}",
            total
        );
    }

    #[test]
    fn profile_consistency_orbit_volume_is_2pi_radius() {
        // A(r) = 2π·R(r) wherever a profile is present
        let cases: Vec<GeometrySpec> = vec![
            model_space(ModelKind::Sphere, 2).unwrap(),
            model_space(ModelKind::Euclidean, 2).unwrap(),
            revolution_surface(
                "paraboloid",
                Arc::new(|t: f64| Ok(t)),
                Arc::new(|t: f64| Ok(t * t)),
                0.0,
                2.0,
            )
            .unwrap(),
        ];
        for g in cases {
            let profile = g.profile.as_ref().unwrap();
            let (lo, hi) = profile.r_range;
            let hi = if hi.is_finite() { hi } else { lo + 5.0 };
            for i in 1..20 {
                let r = lo + (hi - lo) * i as f64 / 20.0;
                let a = g.volume(r).unwrap();
                let expect = 2.0 * std::f64::consts::PI * (profile.radius)(r).unwrap();
                assert!(
                    (a - expect).abs() <= 1e-8 * expect.abs().max(1.0),
                    "{}: A({}) = {} vs 2πR = {}",
                    g.name,
                    r,
                    a,
                    expect
                );
            }
        }
    }

    #[test]
    fn rejects_inconsistent_supplied_derivative() {
        let res = OrbitVolumeFn::new(
            Arc::new(|r: f64| Ok(r * r)),
            (0.0, 10.0),
            Some(EndpointBehavior::Power(2.0)),
            Some(EndpointBehavior::Power(2.0)),
            Some(Arc::new(|_| Ok(1.0))), // wrong: A' = 2r
        );
        assert!(res.is_err());
    }

    #[test]
    fn tables_interpolate_profiles() {
        let ts: Vec<f64> = (0..=40).map(|i| i as f64 / 20.0).collect();
        let radius: Vec<(f64, f64)> = ts.iter().map(|&t| (t, 1.0 + 0.1 * t)).collect();
        let height: Vec<(f64, f64)> = ts.iter().map(|&t| (t, t)).collect();
        let g = revolution_surface_from_tables("cone_ish", &radius, &height).unwrap();
        assert_eq!(g.boundary_case, BoundaryCase::WithBoundary);
        let mid = 0.5 * g.domain().1;
        let a = g.volume(mid).unwrap();
        assert!(a > 2.0 * std::f64::consts::PI);
    }
}
