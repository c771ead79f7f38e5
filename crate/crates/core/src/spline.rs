//! Monotone cubic (Fritsch–Carlson) interpolation and the cubic Hermite
//! kernels shared by dense solution output and cached quadrature tables.

use crate::error::{Error, Result};

/// Cubic Hermite value on [x0, x1] from endpoint values and derivatives.
pub fn hermite_value(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// First derivative of the cubic Hermite.
pub fn hermite_deriv(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let h00 = (6.0 * t2 - 6.0 * t) / h;
    let h10 = 3.0 * t2 - 4.0 * t + 1.0;
    let h01 = (-6.0 * t2 + 6.0 * t) / h;
    let h11 = 3.0 * t2 - 2.0 * t;
    h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1
}

/// Second derivative of the cubic Hermite.
pub fn hermite_second(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let h00 = (12.0 * t - 6.0) / (h * h);
    let h10 = (6.0 * t - 4.0) / h;
    let h01 = (-12.0 * t + 6.0) / (h * h);
    let h11 = (6.0 * t - 2.0) / h;
    h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1
}

/// Locate the interval index i with xs[i] <= x <= xs[i+1] (clamping outside).
pub fn bracket(xs: &[f64], x: f64) -> usize {
    if x <= xs[0] {
        return 0;
    }
    if x >= xs[xs.len() - 1] {
        return xs.len() - 2;
    }
    let mut lo = 0;
    let mut hi = xs.len() - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xs[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Piecewise-cubic monotone interpolant (PCHIP).
#[derive(Debug, Clone)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidArgument(
                "pchip needs at least two matching (x, y) pairs".to_string(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "pchip abscissae must be strictly increasing".to_string(),
            ));
        }
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = vec![0.0; n];

        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                ds[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        ds[0] = edge_slope(h[0], h.get(1).copied().unwrap_or(h[0]), delta[0], *delta.get(1).unwrap_or(&delta[0]));
        ds[n - 1] = edge_slope(
            h[n - 2],
            if n >= 3 { h[n - 3] } else { h[n - 2] },
            delta[n - 2],
            if n >= 3 { delta[n - 3] } else { delta[n - 2] },
        );

        Ok(Pchip { xs, ys, ds })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = bracket(&self.xs, x);
        hermite_value(
            self.xs[i],
            self.xs[i + 1],
            self.ys[i],
            self.ys[i + 1],
            self.ds[i],
            self.ds[i + 1],
            x,
        )
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let i = bracket(&self.xs, x);
        hermite_deriv(
            self.xs[i],
            self.xs[i + 1],
            self.ys[i],
            self.ys[i + 1],
            self.ds[i],
            self.ds[i + 1],
            x,
        )
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }
}

// Three-point end slope with the usual PCHIP monotonicity clamps.
fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let mut d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        d = 0.0;
    } else if d0 * d1 < 0.0 && d.abs() > 3.0 * d0.abs() {
        d = 3.0 * d0;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_nodes_exactly() {
        let xs = vec![0.0, 1.0, 2.5, 4.0];
        let ys = vec![1.0, 2.0, 0.5, 3.0];
        let p = Pchip::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((p.eval(*x) - y).abs() < 1e-14);
        }
    }

    #[test]
    fn preserves_monotone_data() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.tanh()).collect();
        let p = Pchip::new(xs.clone(), ys).unwrap();
        let mut prev = p.eval(xs[0]);
        for k in 1..400 {
            let x = xs[0] + (xs[19] - xs[0]) * k as f64 / 400.0;
            let v = p.eval(x);
            assert!(v >= prev - 1e-12, "monotonicity violated at {}", x);
            prev = v;
        }
    }

    #[test]
    fn hermite_reproduces_cubics() {
        // p(x) = x^3 - x on [1, 3]
        let f = |x: f64| x * x * x - x;
        let d = |x: f64| 3.0 * x * x - 1.0;
        for k in 0..=10 {
            let x = 1.0 + 2.0 * k as f64 / 10.0;
            let v = hermite_value(1.0, 3.0, f(1.0), f(3.0), d(1.0), d(3.0), x);
            assert!((v - f(x)).abs() < 1e-12);
            let dv = hermite_deriv(1.0, 3.0, f(1.0), f(3.0), d(1.0), d(3.0), x);
            assert!((dv - d(x)).abs() < 1e-11);
            let ddv = hermite_second(1.0, 3.0, f(1.0), f(3.0), d(1.0), d(3.0), x);
            assert!((ddv - 6.0 * x).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_unsorted_abscissae() {
        assert!(Pchip::new(vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
    }
}
