//! Dormand–Prince 5(4) embedded pair on 2-dimensional systems, with the
//! classic 4th-order continuous extension used to emit dense output nodes.

use crate::error::{Error, Result};

// Butcher tableau
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
// 5th-order weights (row 7 is FSAL)
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// embedded error weights b − b*
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense-output coefficients
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

type State = [f64; 2];

#[derive(Debug, Clone, Copy)]
pub struct StepperOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Cap on the step magnitude (∞ disables).
    pub max_step: f64,
    /// Cap on emitted node spacing. Steps are clamped to it, so every node
    /// carries full 5th-order state (value and derivative); the continuous
    /// extension only fills in when a step still exceeds the spacing.
    pub dense_spacing: f64,
}

impl StepperOptions {
    pub fn with_tol(tol: f64) -> Self {
        StepperOptions {
            rtol: tol,
            atol: tol,
            max_steps: 1_000_000,
            max_step: f64::INFINITY,
            dense_spacing: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopReason {
    ReachedEnd,
    StepUnderflow { location: f64, step: f64 },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub ts: Vec<f64>,
    pub ys: Vec<State>,
    pub stop: StopReason,
}

fn axpy(y: State, pairs: &[(f64, State)], h: f64) -> State {
    let mut out = y;
    for (c, k) in pairs {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Integrate y' = rhs(t, y) from t0 to t_end (either direction). On step-size
/// underflow the partial trajectory is returned with the stop location; that
/// is the blow-up/singularity signal, not an error.
pub fn integrate<F>(rhs: F, t0: f64, t_end: f64, y0: State, opts: &StepperOptions) -> Result<Trajectory>
where
    F: Fn(f64, State) -> Result<State>,
{
    let span = (t_end - t0).abs();
    if span == 0.0 {
        return Ok(Trajectory {
            ts: vec![t0],
            ys: vec![y0],
            stop: StopReason::ReachedEnd,
        });
    }
    let dir = (t_end - t0).signum();
    let floor = 1e-12 * span;
    let step_cap = opts.max_step.min(opts.dense_spacing);

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, y)?;
    let mut h = dir * initial_step(&rhs, t0, y0, k1, span, opts)?.min(step_cap);

    let mut ts = vec![t0];
    let mut ys = vec![y0];

    for _ in 0..opts.max_steps {
        // reached (or within floating-point residue of) the end
        if (t_end - t) * dir <= 0.5 * floor {
            if let Some(last) = ts.last_mut() {
                *last = t_end;
            }
            return Ok(Trajectory {
                ts,
                ys,
                stop: StopReason::ReachedEnd,
            });
        }
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        if h.abs() < floor {
            return Ok(Trajectory {
                ts,
                ys,
                stop: StopReason::StepUnderflow {
                    location: t,
                    step: h.abs(),
                },
            });
        }

        let stages = (|| -> Result<(State, State, [State; 7])> {
            let k2 = rhs(t + C2 * h, axpy(y, &[(A21, k1)], h))?;
            let k3 = rhs(t + C3 * h, axpy(y, &[(A31, k1), (A32, k2)], h))?;
            let k4 = rhs(t + C4 * h, axpy(y, &[(A41, k1), (A42, k2), (A43, k3)], h))?;
            let k5 = rhs(
                t + C5 * h,
                axpy(y, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)], h),
            )?;
            let k6 = rhs(
                t + h,
                axpy(
                    y,
                    &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
                    h,
                ),
            )?;
            let y1 = axpy(y, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)], h);
            let k7 = rhs(t + h, y1)?;
            let err = axpy(
                [0.0, 0.0],
                &[(E1, k1), (E3, k3), (E4, k4), (E5, k5), (E6, k6), (E7, k7)],
                h,
            );
            Ok((y1, err, [k1, k2, k3, k4, k5, k6, k7]))
        })();

        let (y1, err_vec, k) = match stages {
            Ok(v) => v,
            Err(Error::EvalDomain { .. }) | Err(Error::NonDifferentiable { .. }) => {
                // trajectory left the nonlinearity's domain mid-step: shrink
                h *= 0.5;
                continue;
            }
            Err(e) => return Err(e),
        };

        let mut err: f64 = 0.0;
        for i in 0..2 {
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err = err.max((err_vec[i] / sc).abs());
        }

        if err <= 1.0 {
            emit_dense(&mut ts, &mut ys, t, h, y, y1, &k, opts.dense_spacing);
            t += h;
            y = y1;
            k1 = k[6]; // FSAL
            let scale = (0.9 * err.max(1e-30).powf(-0.2)).clamp(1.0, 5.0);
            h = (h * scale).clamp(-step_cap, step_cap);
        } else {
            let scale = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= scale;
        }
    }
    Err(Error::MaxStepsExceeded {
        location: t,
        steps: opts.max_steps,
    })
}

/// Hairer's starting-step heuristic for a 5th-order method.
fn initial_step<F>(rhs: &F, t0: f64, y0: State, f0: State, span: f64, opts: &StepperOptions) -> Result<f64>
where
    F: Fn(f64, State) -> Result<State>,
{
    let sc = |i: usize| opts.atol + opts.rtol * y0[i].abs();
    let d0 = ((y0[0] / sc(0)).powi(2) + (y0[1] / sc(1)).powi(2)).sqrt();
    let d1 = ((f0[0] / sc(0)).powi(2) + (f0[1] / sc(1)).powi(2)).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(0.1 * span);
    let y1 = [y0[0] + h0 * f0[0], y0[1] + h0 * f0[1]];
    let d2 = match rhs(t0 + h0, y1) {
        Ok(f1) => {
            (((f1[0] - f0[0]) / sc(0)).powi(2) + ((f1[1] - f0[1]) / sc(1)).powi(2)).sqrt() / h0
        }
        Err(_) => return Ok(h0 * 0.1),
    };
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6 * span)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok(h1.min(100.0 * h0).min(span))
}

#[allow(clippy::too_many_arguments)]
fn emit_dense(
    ts: &mut Vec<f64>,
    ys: &mut Vec<State>,
    t: f64,
    h: f64,
    y0: State,
    y1: State,
    k: &[State; 7],
    spacing: f64,
) {
    let pieces = (h.abs() / spacing).ceil().max(1.0) as usize;
    if pieces > 1 {
        // rcont coefficients of the 4th-order continuous extension
        let mut rcont = [[0.0f64; 2]; 5];
        for i in 0..2 {
            let ydiff = y1[i] - y0[i];
            let bspl = h * k[0][i] - ydiff;
            rcont[0][i] = y0[i];
            rcont[1][i] = ydiff;
            rcont[2][i] = bspl;
            rcont[3][i] = ydiff - h * k[6][i] - bspl;
            rcont[4][i] = h
                * (D1 * k[0][i]
                    + D3 * k[2][i]
                    + D4 * k[3][i]
                    + D5 * k[4][i]
                    + D6 * k[5][i]
                    + D7 * k[6][i]);
        }
        for j in 1..pieces {
            let theta = j as f64 / pieces as f64;
            let theta1 = 1.0 - theta;
            let mut yj = [0.0f64; 2];
            for i in 0..2 {
                yj[i] = rcont[0][i]
                    + theta
                        * (rcont[1][i]
                            + theta1
                                * (rcont[2][i]
                                    + theta * (rcont[3][i] + theta1 * rcont[4][i])));
            }
            ts.push(t + theta * h);
            ys.push(yj);
        }
    }
    ts.push(t + h);
    ys.push(y1);
}
