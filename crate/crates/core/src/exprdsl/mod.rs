//! Expression DSL for immersion components and vector-field coefficients:
//! a small grammar of real scalar expressions with exact first- and
//! second-order derivatives via forward jets.
//!
//! Grammar (whitespace-insensitive, conventional precedence):
//!
//! ```text
//! expr   := term  (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' exponent)?          exponent must be constant
//! atom   := number | name | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! Functions: `sin cos tan exp log sqrt abs`. Named constants: `pi`, `sigma`,
//! `sigma_bar`, plus any scenario-declared constants; all but `pi` are bound
//! at evaluation time.

mod jet;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

pub use jet::Jet2;
pub use parser::parse;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Constant bindings used at evaluation time (`sigma`, `sigma_bar`, scenario
/// extras). `pi` is built in and needs no binding.
pub type ConstMap<T> = BTreeMap<String, T>;

/// Names that are always available as constants inside expressions.
pub const BUILTIN_CONSTS: [&str; 3] = ["pi", "sigma", "sigma_bar"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl UnaryFn {
    fn name(self) -> &'static str {
        match self {
            UnaryFn::Neg => "-",
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Tan => "tan",
            UnaryFn::Exp => "exp",
            UnaryFn::Log => "log",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Abs => "abs",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "tan" => UnaryFn::Tan,
            "exp" => UnaryFn::Exp,
            "log" => UnaryFn::Log,
            "sqrt" => UnaryFn::Sqrt,
            "abs" => UnaryFn::Abs,
            _ => return None,
        })
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

/// Immutable expression tree. Evaluation is pure: the same point and constant
/// bindings always produce the same jet.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Named constant, resolved from the [`ConstMap`] (or `pi`).
    Const(String),
    /// Variable with its index into the declared variable list.
    Var { index: usize, name: String },
    Unary(UnaryFn, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

// Builder methods named after the operations they construct; they build AST
// nodes rather than evaluating, so the std operator traits would mislead.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn num(x: f64) -> Self {
        Expr::Num(x)
    }

    pub fn var(index: usize, name: impl Into<String>) -> Self {
        Expr::Var {
            index,
            name: name.into(),
        }
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Expr::Const(name.into())
    }

    pub fn add(self, rhs: Expr) -> Self {
        Expr::Bin(BinOp::Add, Box::new(self), Box::new(rhs))
    }

    pub fn mul(self, rhs: Expr) -> Self {
        Expr::Bin(BinOp::Mul, Box::new(self), Box::new(rhs))
    }

    /// Negation, folding literal operands so printed trees re-parse to
    /// themselves.
    pub fn neg(self) -> Self {
        match self {
            Expr::Num(x) => Expr::Num(-x),
            other => Expr::Unary(UnaryFn::Neg, Box::new(other)),
        }
    }

    pub fn contains_var(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Var { .. } => true,
            Expr::Unary(_, a) => a.contains_var(),
            Expr::Bin(_, a, b) => a.contains_var() || b.contains_var(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            // a negative literal prints with a leading minus, so it binds
            // like a negation
            Expr::Unary(UnaryFn::Neg, _) => 3,
            Expr::Num(x) if *x < 0.0 => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => 9,
        }
    }

    fn write(&self, out: &mut String, min_prec: u8) {
        let prec = self.precedence();
        let parens = prec < min_prec;
        if parens {
            out.push('(');
        }
        match self {
            Expr::Num(x) => {
                if *x < 0.0 {
                    out.push('-');
                    out.push_str(&format!("{}", -x));
                } else {
                    out.push_str(&format!("{x}"));
                }
            }
            Expr::Const(name) => out.push_str(name),
            Expr::Var { name, .. } => out.push_str(name),
            Expr::Unary(UnaryFn::Neg, a) => {
                out.push('-');
                a.write(out, 3);
            }
            Expr::Unary(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write(out, 0);
                out.push(')');
            }
            Expr::Bin(op, a, b) => {
                let (sym, rhs_min) = match op {
                    BinOp::Add => ("+", prec + 1),
                    BinOp::Sub => ("-", prec + 1),
                    BinOp::Mul => ("*", prec + 1),
                    BinOp::Div => ("/", prec + 1),
                    BinOp::Pow => ("^", 3),
                };
                let lhs_min = if *op == BinOp::Pow { prec + 1 } else { prec };
                a.write(out, lhs_min);
                out.push_str(sym);
                b.write(out, rhs_min);
            }
        }
        if parens {
            out.push(')');
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write(&mut s, 0);
        f.write_str(&s)
    }
}

fn domain_err(message: String, node: &Expr) -> Error {
    Error::Domain {
        message,
        location: node.to_string(),
    }
}

/// Evaluates `expr` to a full second-order jet at `point` (indexed by variable
/// index, so `point.len()` is the number of active variables).
pub fn eval_jet2<T: Real>(expr: &Expr, point: &[T], consts: &ConstMap<T>) -> Result<Jet2<T>> {
    let n = point.len();
    match expr {
        Expr::Num(x) => Ok(Jet2::constant(lit(*x), n)),
        Expr::Const(name) => Ok(Jet2::constant(resolve_const(name, consts)?, n)),
        Expr::Var { index, name } => {
            if *index >= n {
                return Err(Error::UnknownIdentifier { name: name.clone() });
            }
            Ok(Jet2::variable(point[*index], *index, n))
        }
        Expr::Unary(f, a) => {
            let j = eval_jet2(a, point, consts)?;
            let apply = |r: std::result::Result<Jet2<T>, String>| {
                r.map_err(|m| domain_err(m, expr))
            };
            match f {
                UnaryFn::Neg => Ok(j.neg()),
                UnaryFn::Sin => Ok(j.sin()),
                UnaryFn::Cos => Ok(j.cos()),
                UnaryFn::Tan => apply(j.tan()),
                UnaryFn::Exp => Ok(j.exp()),
                UnaryFn::Log => apply(j.ln()),
                UnaryFn::Sqrt => apply(j.sqrt()),
                UnaryFn::Abs => apply(j.abs()),
            }
        }
        Expr::Bin(op, a, b) => {
            let ja = eval_jet2(a, point, consts)?;
            match op {
                BinOp::Add => Ok(ja.add(&eval_jet2(b, point, consts)?)),
                BinOp::Sub => Ok(ja.sub(&eval_jet2(b, point, consts)?)),
                BinOp::Mul => Ok(ja.mul(&eval_jet2(b, point, consts)?)),
                BinOp::Div => ja
                    .div(&eval_jet2(b, point, consts)?)
                    .map_err(|m| domain_err(m, expr)),
                BinOp::Pow => {
                    if b.contains_var() {
                        return Err(Error::NonConstExponent {
                            expr: expr.to_string(),
                        });
                    }
                    let e = eval_value(b, &[] as &[T], consts)?;
                    apply_pow(&ja, e, expr)
                }
            }
        }
    }
}

// Beyond this, integer powers of negative bases fall back to an error rather
// than an absurdly long multiplication chain.
const MAX_INT_POW: f64 = 512.0;

fn apply_pow<T: Real>(base: &Jet2<T>, e: T, node: &Expr) -> Result<Jet2<T>> {
    let ef = e.to_f64().unwrap_or(f64::NAN);
    if ef.fract() == 0.0 && ef.abs() <= MAX_INT_POW {
        base.powi(ef as i64).map_err(|m| domain_err(m, node))
    } else {
        base.powf(e).map_err(|m| domain_err(m, node))
    }
}

/// Value-only evaluation (no derivatives). Used for constant expressions and
/// anywhere a plain number suffices.
pub fn eval_value<T: Real>(expr: &Expr, point: &[T], consts: &ConstMap<T>) -> Result<T> {
    match expr {
        Expr::Num(x) => Ok(lit(*x)),
        Expr::Const(name) => resolve_const(name, consts),
        Expr::Var { index, name } => point.get(*index).copied().ok_or_else(|| {
            Error::UnknownIdentifier { name: name.clone() }
        }),
        Expr::Unary(f, a) => {
            let v = eval_value(a, point, consts)?;
            let finite = |x: T, msg: &str| {
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(domain_err(msg.to_string(), expr))
                }
            };
            match f {
                UnaryFn::Neg => Ok(-v),
                UnaryFn::Sin => Ok(v.sin()),
                UnaryFn::Cos => Ok(v.cos()),
                UnaryFn::Tan => finite(v.tan(), "tangent pole"),
                UnaryFn::Exp => Ok(v.exp()),
                UnaryFn::Log => {
                    if v <= T::zero() {
                        Err(domain_err(format!("log of non-positive value {v}"), expr))
                    } else {
                        Ok(v.ln())
                    }
                }
                UnaryFn::Sqrt => {
                    if v < T::zero() {
                        Err(domain_err(format!("sqrt of negative value {v}"), expr))
                    } else {
                        Ok(v.sqrt())
                    }
                }
                UnaryFn::Abs => Ok(v.abs()),
            }
        }
        Expr::Bin(op, a, b) => {
            let va = eval_value(a, point, consts)?;
            let vb = eval_value(b, point, consts)?;
            match op {
                BinOp::Add => Ok(va + vb),
                BinOp::Sub => Ok(va - vb),
                BinOp::Mul => Ok(va * vb),
                BinOp::Div => {
                    if vb == T::zero() {
                        Err(domain_err("division by zero".to_string(), expr))
                    } else {
                        Ok(va / vb)
                    }
                }
                BinOp::Pow => {
                    let ef = vb.to_f64().unwrap_or(f64::NAN);
                    if ef.fract() == 0.0 && ef.abs() <= MAX_INT_POW {
                        Ok(va.powi(ef as i32))
                    } else if va <= T::zero() {
                        Err(domain_err(
                            format!("non-integer power of non-positive base {va}"),
                            expr,
                        ))
                    } else {
                        Ok(va.powf(vb))
                    }
                }
            }
        }
    }
}

fn resolve_const<T: Real>(name: &str, consts: &ConstMap<T>) -> Result<T> {
    if name == "pi" {
        return Ok(T::PI());
    }
    consts
        .get(name)
        .copied()
        .ok_or_else(|| Error::UnboundConstant {
            name: name.to_string(),
        })
}
