//! Symbolic differentiation with light identity simplification.

use super::{BinOp, Expr, Func, Var};

/// Symbolic derivative of `e` with respect to `var`.
///
/// `abs` differentiates to `sign` away from 0 (evaluating the derivative at
/// the kink reports a non-differentiable-point error). `min`/`max`
/// differentiate piecewise with the first-argument tie convention.
pub fn differentiate(e: &Expr, var: Var) -> Expr {
    match e {
        Expr::Num(_) => Expr::Num(0.0),
        Expr::Var(v) => Expr::Num(if *v == var { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(differentiate(a, var)),
        Expr::Bin(op, a, b) => {
            let da = differentiate(a, var);
            let db = differentiate(b, var);
            match op {
                BinOp::Add => add(da, db),
                BinOp::Sub => sub(da, db),
                BinOp::Mul => add(mul(da, (**b).clone()), mul((**a).clone(), db)),
                BinOp::Div => div(
                    sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                    pow((**b).clone(), Expr::Num(2.0)),
                ),
                BinOp::Pow => diff_pow(a, b, da, db),
            }
        }
        Expr::Call(f, a) => {
            let da = differentiate(a, var);
            let inner = (**a).clone();
            let outer = match f {
                Func::Sin => call(Func::Cos, inner),
                Func::Cos => neg(call(Func::Sin, inner)),
                // d tan = 1 + tan^2
                Func::Tan => add(
                    Expr::Num(1.0),
                    pow(call(Func::Tan, inner), Expr::Num(2.0)),
                ),
                Func::Sinh => call(Func::Cosh, inner),
                Func::Cosh => call(Func::Sinh, inner),
                Func::Exp => call(Func::Exp, inner),
                Func::Log => return div(da, (**a).clone()),
                Func::Sqrt => {
                    return div(da, mul(Expr::Num(2.0), call(Func::Sqrt, inner)));
                }
                Func::Abs => call(Func::Sign, inner),
                Func::Sign => Expr::Num(0.0),
            };
            mul(outer, da)
        }
        // min picks the first argument on ties; select(c, a, b) = a iff c <= 0.
        Expr::Min(a, b) => select(
            sub((**a).clone(), (**b).clone()),
            differentiate(a, var),
            differentiate(b, var),
        ),
        Expr::Max(a, b) => select(
            sub((**b).clone(), (**a).clone()),
            differentiate(a, var),
            differentiate(b, var),
        ),
        Expr::Select(c, a, b) => select(
            (**c).clone(),
            differentiate(a, var),
            differentiate(b, var),
        ),
    }
}

fn diff_pow(a: &Expr, b: &Expr, da: Expr, db: Expr) -> Expr {
    match (a, b) {
        // a^n with constant n: n * a^(n-1) * a'  (no log, keeps y^(-sigma) total)
        (_, Expr::Num(n)) => mul(
            mul(Expr::Num(*n), pow(a.clone(), Expr::Num(n - 1.0))),
            da,
        ),
        // c^b with constant c: c^b * log(c) * b'
        (Expr::Num(c), _) => mul(
            mul(pow(a.clone(), b.clone()), Expr::Num(c.ln())),
            db,
        ),
        // general: a^b * (b' log a + b a'/a)
        _ => mul(
            pow(a.clone(), b.clone()),
            add(
                mul(db, call(Func::Log, a.clone())),
                mul(b.clone(), div(da, a.clone())),
            ),
        ),
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 1.0)
}

pub(super) fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        _ if is_zero(&a) => b,
        _ if is_zero(&b) => a,
        _ => Expr::Bin(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

pub(super) fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        _ if is_zero(&b) => a,
        _ if is_zero(&a) => neg(b),
        _ => Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

pub(super) fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        _ if is_zero(&a) || is_zero(&b) => Expr::Num(0.0),
        _ if is_one(&a) => b,
        _ if is_one(&b) => a,
        _ => Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

pub(super) fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) && !is_zero(&b) {
        return Expr::Num(0.0);
    }
    if is_one(&b) {
        return a;
    }
    Expr::Bin(BinOp::Div, Box::new(a), Box::new(b))
}

pub(super) fn pow(a: Expr, b: Expr) -> Expr {
    if is_one(&b) {
        return a;
    }
    if is_zero(&b) {
        return Expr::Num(1.0);
    }
    Expr::Bin(BinOp::Pow, Box::new(a), Box::new(b))
}

pub(super) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        _ => Expr::Neg(Box::new(a)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

fn select(c: Expr, a: Expr, b: Expr) -> Expr {
    if a == b {
        return a;
    }
    Expr::Select(Box::new(c), Box::new(a), Box::new(b))
}
