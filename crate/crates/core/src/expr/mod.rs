//! Scalar expressions in the variables r, y, s, t, x1, x2: parsing,
//! evaluation, and symbolic differentiation.
//!
//! Expressions define nonlinearities f(r,y), weights b(r), majorants h(r,y),
//! L1(s), L2(s), and user-supplied orbit volumes A(r). Parsed expressions are
//! immutable and shareable; evaluation is reentrant. Domain violations (log of
//! a non-positive number, division by zero, 0 raised to a negative power,
//! overflow to non-finite) are reported as errors, never as silent NaN/inf.

mod diff;
mod parse;

pub use diff::differentiate;
pub use parse::{parse, parse_expr, Params};

use crate::error::{Error, Result};
use std::fmt;

/// The closed set of variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    R,
    Y,
    S,
    T,
    X1,
    X2,
}

impl Var {
    pub const ALL: [Var; 6] = [Var::R, Var::Y, Var::S, Var::T, Var::X1, Var::X2];

    pub fn name(self) -> &'static str {
        match self {
            Var::R => "r",
            Var::Y => "y",
            Var::S => "s",
            Var::T => "t",
            Var::X1 => "x1",
            Var::X2 => "x2",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        Var::ALL.iter().copied().find(|v| v.name() == name)
    }

    fn index(self) -> usize {
        match self {
            Var::R => 0,
            Var::Y => 1,
            Var::S => 2,
            Var::T => 3,
            Var::X1 => 4,
            Var::X2 => 5,
        }
    }
}

/// Variable → value map for evaluation. Unset variables are unbound.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bindings {
    vals: [Option<f64>; 6],
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: Var, value: f64) -> Self {
        self.vals[var.index()] = Some(value);
        self
    }

    pub fn r(self, v: f64) -> Self {
        self.with(Var::R, v)
    }

    pub fn y(self, v: f64) -> Self {
        self.with(Var::Y, v)
    }

    pub fn s(self, v: f64) -> Self {
        self.with(Var::S, v)
    }

    pub fn t(self, v: f64) -> Self {
        self.with(Var::T, v)
    }

    pub fn set(&mut self, var: Var, value: f64) {
        self.vals[var.index()] = Some(value);
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        self.vals[var.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sign,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }
}

/// Abstract syntax tree of a scalar expression.
///
/// `Select(c, a, b)` evaluates `a` when `c ≤ 0`, else `b`. It is produced by
/// differentiating `min`/`max` (first-argument tie convention) and prints as
/// `select(c, a, b)`, which re-parses.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Select(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn negate(self) -> Expr {
        diff::neg(self)
    }

    /// Evaluate with the given bindings; all free variables must be bound.
    pub fn eval(&self, bindings: &Bindings) -> Result<f64> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(var) => bindings.get(*var).ok_or_else(|| Error::UnboundVariable {
                name: var.name().to_string(),
            })?,
            Expr::Neg(a) => -a.eval(bindings)?,
            Expr::Bin(op, a, b) => {
                let x = a.eval(bindings)?;
                let y = b.eval(bindings)?;
                self.apply_bin(*op, x, y)?
            }
            Expr::Call(f, a) => {
                let x = a.eval(bindings)?;
                self.apply_func(*f, x)?
            }
            Expr::Min(a, b) => a.eval(bindings)?.min(b.eval(bindings)?),
            Expr::Max(a, b) => a.eval(bindings)?.max(b.eval(bindings)?),
            Expr::Select(c, a, b) => {
                if c.eval(bindings)? <= 0.0 {
                    a.eval(bindings)?
                } else {
                    b.eval(bindings)?
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.domain_error("non-finite result"))
        }
    }

    fn apply_bin(&self, op: BinOp, x: f64, y: f64) -> Result<f64> {
        match op {
            BinOp::Add => Ok(x + y),
            BinOp::Sub => Ok(x - y),
            BinOp::Mul => Ok(x * y),
            BinOp::Div => {
                if y == 0.0 {
                    Err(self.domain_error("division by zero"))
                } else {
                    Ok(x / y)
                }
            }
            BinOp::Pow => {
                if x == 0.0 && y < 0.0 {
                    return Err(self.domain_error("0 raised to a negative power"));
                }
                if x < 0.0 && y.fract() != 0.0 {
                    return Err(self.domain_error("negative base with non-integer exponent"));
                }
                Ok(x.powf(y))
            }
        }
    }

    fn apply_func(&self, f: Func, x: f64) -> Result<f64> {
        match f {
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Tan => Ok(x.tan()),
            Func::Sinh => Ok(x.sinh()),
            Func::Cosh => Ok(x.cosh()),
            Func::Exp => Ok(x.exp()),
            Func::Log => {
                if x <= 0.0 {
                    Err(self.domain_error("log of a non-positive number"))
                } else {
                    Ok(x.ln())
                }
            }
            Func::Sqrt => {
                if x < 0.0 {
                    Err(self.domain_error("sqrt of a negative number"))
                } else {
                    Ok(x.sqrt())
                }
            }
            Func::Abs => Ok(x.abs()),
            Func::Sign => {
                if x == 0.0 {
                    Err(Error::NonDifferentiable {
                        expr: self.to_string(),
                    })
                } else {
                    Ok(x.signum())
                }
            }
        }
    }

    fn domain_error(&self, message: &str) -> Error {
        Error::EvalDomain {
            expr: self.to_string(),
            message: message.to_string(),
        }
    }

    /// Free variables actually referenced by the expression.
    pub fn free_vars(&self) -> Vec<Var> {
        let mut seen = [false; 6];
        self.collect_vars(&mut seen);
        Var::ALL
            .iter()
            .copied()
            .filter(|v| seen[v.index()])
            .collect()
    }

    fn collect_vars(&self, seen: &mut [bool; 6]) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => seen[v.index()] = true,
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_vars(seen),
            Expr::Bin(_, a, b) | Expr::Min(a, b) | Expr::Max(a, b) => {
                a.collect_vars(seen);
                b.collect_vars(seen);
            }
            Expr::Select(c, a, b) => {
                c.collect_vars(seen);
                a.collect_vars(seen);
                b.collect_vars(seen);
            }
        }
    }

    pub fn depends_on(&self, var: Var) -> bool {
        self.free_vars().contains(&var)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, _, _) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, _, _) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if *v < 0.0 => 3,
            Expr::Bin(BinOp::Pow, _, _) => 4,
            _ => 5,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({})", self)
        } else {
            write!(f, "{}", self)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{}", v),
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_child(f, 4)
            }
            Expr::Bin(op, a, b) => {
                let (sym, prec) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 4),
                };
                // Left operand of ^ must be an atom. Right operands of the
                // left-associative ops get one more level so the printed text
                // re-parses to the identical tree (same grouping, same
                // floating-point result).
                let (lp, rp) = match op {
                    BinOp::Pow => (5, 4),
                    _ => (prec, prec + 1),
                };
                a.fmt_child(f, lp)?;
                write!(f, " {} ", sym)?;
                b.fmt_child(f, rp)
            }
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), a),
            Expr::Min(a, b) => write!(f, "min({}, {})", a, b),
            Expr::Max(a, b) => write!(f, "max({}, {})", a, b),
            Expr::Select(c, a, b) => write!(f, "select({}, {}, {})", c, a, b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b() -> Bindings {
        Bindings::new()
    }

    #[test]
    fn schroedinger_nonlinearity_evaluates() {
        let params = Params::from([("p".to_string(), 3.0)]);
        let e = parse("y - abs(y)^(p-1)*y", &params).unwrap();
        assert_eq!(e.eval(&b().y(1.0)).unwrap(), 0.0);
        // f(y) = y - |y|^2 y at y = 2 -> 2 - 8 = -6
        assert_eq!(e.eval(&b().y(2.0)).unwrap(), -6.0);
    }

    #[test]
    fn negative_power_nonlinearity() {
        let params = Params::from([("b0".to_string(), 1.0), ("sigma".to_string(), 0.5)]);
        let e = parse("b0 * y^(-sigma)", &params).unwrap();
        assert!((e.eval(&b().y(4.0)).unwrap() - 0.5).abs() < 1e-15);
        match e.eval(&b().y(0.0)) {
            Err(Error::EvalDomain { .. }) => {}
            other => panic!("expected domain error, got {:?}", other),
        }
    }

    #[test]
    fn syntax_error_carries_position() {
        match parse_expr("1 +") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 3),
            other => panic!("expected parse error, got {:?}", other),
        }
    }

    #[test]
    fn unknown_identifier_named() {
        match parse_expr("2 * bogus") {
            Err(Error::UnknownIdentifier { name, .. }) => assert_eq!(name, "bogus"),
            other => panic!("expected unknown identifier, got {:?}", other),
        }
    }

    #[test]
    fn sinc_at_pi_is_tiny() {
        let e = parse_expr("sin(r)/r").unwrap();
        let v = e.eval(&b().r(std::f64::consts::PI)).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn unbound_variable_reported() {
        let e = parse_expr("r + y").unwrap();
        match e.eval(&b().r(1.0)) {
            Err(Error::UnboundVariable { name }) => assert_eq!(name, "y"),
            other => panic!("expected unbound variable, got {:?}", other),
        }
    }

    #[test]
    fn pow_is_right_associative_and_tighter_than_unary_minus() {
        let e = parse_expr("2^3^2").unwrap();
        assert_eq!(e.eval(&b()).unwrap(), 512.0);
        let e = parse_expr("-2^2").unwrap();
        assert_eq!(e.eval(&b()).unwrap(), -4.0);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let e = parse_expr("1/(r - 1)").unwrap();
        assert!(matches!(e.eval(&b().r(1.0)), Err(Error::EvalDomain { .. })));
    }

    #[test]
    fn overflow_is_an_error_not_inf() {
        let e = parse_expr("exp(r)").unwrap();
        assert!(matches!(
            e.eval(&b().r(1e4)),
            Err(Error::EvalDomain { .. })
        ));
    }

    #[test]
    fn min_max_select_semantics() {
        let e = parse_expr("min(r, 1 - r)").unwrap();
        assert_eq!(e.eval(&b().r(0.25)).unwrap(), 0.25);
        assert_eq!(e.eval(&b().r(0.75)).unwrap(), 0.25);
        let sel = parse_expr("select(r - 1, 10, 20)").unwrap();
        assert_eq!(sel.eval(&b().r(0.5)).unwrap(), 10.0);
        assert_eq!(sel.eval(&b().r(1.0)).unwrap(), 10.0);
        assert_eq!(sel.eval(&b().r(2.0)).unwrap(), 20.0);
    }

    #[test]
    fn fuzz_truncations_never_panic() {
        let corpus = [
            "y - abs(y)^(p-1)*y",
            "b0 * y^(-sigma)",
            "sin(r)/r + cos(r)^2",
            "max(min(r, s), t) * exp(-(x1^2 + x2^2))",
            "1 + 2*(3 - 4/(5 + r))^2",
            "select(r - 1, sqrt(r), log(r))",
        ];
        let params = Params::from([
            ("p".to_string(), 3.0),
            ("b0".to_string(), 1.0),
            ("sigma".to_string(), 0.5),
        ]);
        for text in corpus {
            for cut in 0..=text.len() {
                if !text.is_char_boundary(cut) {
                    continue;
                }
                // Must return Ok or Err, never panic.
                let _ = parse(&text[..cut], &params);
            }
        }
    }

    fn arb_smooth_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-2.0..2.0f64).prop_map(Expr::Num),
            Just(Expr::Var(Var::R)),
            Just(Expr::Var(Var::Y)),
        ];
        leaf.prop_recursive(3, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Bin(
                    BinOp::Add,
                    Box::new(a),
                    Box::new(b)
                )),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Bin(
                    BinOp::Mul,
                    Box::new(a),
                    Box::new(b)
                )),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Bin(
                    BinOp::Sub,
                    Box::new(a),
                    Box::new(b)
                )),
                inner.clone().prop_map(|a| Expr::Call(Func::Sin, Box::new(a))),
                inner.clone().prop_map(|a| Expr::Call(Func::Cos, Box::new(a))),
                inner.clone().prop_map(|a| Expr::Call(Func::Exp, Box::new(a))),
                inner.prop_map(|a| Expr::Neg(Box::new(a))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn print_parse_round_trip(e in arb_smooth_expr(), r in -3.0..3.0f64, y in -3.0..3.0f64) {
            let text = e.to_string();
            let reparsed = parse_expr(&text).unwrap();
            let bindings = b().r(r).y(y);
            let v0 = e.eval(&bindings);
            let v1 = reparsed.eval(&bindings);
            match (v0, v1) {
                (Ok(a), Ok(bv)) => {
                    let scale = a.abs().max(1.0);
                    prop_assert!((a - bv).abs() <= 1e-15 * scale, "{} vs {} for {}", a, bv, text);
                }
                (Err(_), Err(_)) => {}
                (a, bv) => prop_assert!(false, "mismatch {:?} vs {:?} for {}", a, bv, text),
            }
        }

        #[test]
        fn derivative_matches_finite_difference(e in arb_smooth_expr(), r in -2.0..2.0f64, y in -2.0..2.0f64) {
            let d = differentiate(&e, Var::Y);
            let h = 1e-6;
            let up = e.eval(&b().r(r).y(y + h));
            let dn = e.eval(&b().r(r).y(y - h));
            let sym = d.eval(&b().r(r).y(y));
            if let (Ok(up), Ok(dn), Ok(sym)) = (up, dn, sym) {
                let fd = (up - dn) / (2.0 * h);
                let scale = sym.abs().max(fd.abs()).max(1.0);
                prop_assert!((sym - fd).abs() <= 1e-5 * scale,
                    "sym {} vs fd {} for {}", sym, fd, e);
            }
        }

        #[test]
        fn mixed_partials_commute(e in arb_smooth_expr(), r in -2.0..2.0f64, y in -2.0..2.0f64) {
            let dry = differentiate(&differentiate(&e, Var::R), Var::Y);
            let dyr = differentiate(&differentiate(&e, Var::Y), Var::R);
            let bindings = b().r(r).y(y);
            if let (Ok(a), Ok(bv)) = (dry.eval(&bindings), dyr.eval(&bindings)) {
                let scale = a.abs().max(bv.abs()).max(1.0);
                prop_assert!((a - bv).abs() <= 1e-10 * scale, "{} vs {} for {}", a, bv, e);
            }
        }
    }
}
