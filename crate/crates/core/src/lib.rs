// `!(a < b)` rejects NaN alongside the ordering violation; that is the point
// of writing validations this way.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Radial reduction of semilinear elliptic problems −Δu + f(x,u) = 0 on
//! manifolds carrying a polar action with a one-dimensional transversal.
//!
//! A geometry enters only through the orbit-volume function A(r) on the
//! transversal. The library reduces the PDE to the radial ODE
//! u'' + (ln A)' u' = f(r, u), flattens it with the change of variables
//! s = ∫ dt/A(t) to z'' = A(r(s))² f(r(s), z), audits the analytic
//! hypotheses behind the existence/uniqueness theory, solves the resulting
//! initial-value, boundary-value, and integral fixed-point problems, and
//! verifies solutions by lifting them back onto a discrete surface of
//! revolution and measuring the Laplace–Beltrami residual.

pub mod error;
pub mod expr;
pub mod geometry;
pub mod hypotheses;
pub mod quad;
pub mod reduction;
pub mod solvers;
pub mod spline;
pub mod verify;

pub use error::{Error, Result};

/// Randomness audit: every code path that wants entropy must register here,
/// so callers can assert a run was seed-free. Nothing in this crate requests
/// randomness; all solvers and checkers are deterministic.
pub mod rng_audit {
    use std::sync::atomic::{AtomicU64, Ordering};

    static REQUESTS: AtomicU64 = AtomicU64::new(0);

    pub fn note_request() {
        REQUESTS.fetch_add(1, Ordering::Relaxed);
    }

    pub fn requests() -> u64 {
        REQUESTS.load(Ordering::Relaxed)
    }
}
