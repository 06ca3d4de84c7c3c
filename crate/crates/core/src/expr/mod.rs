//! Scalar expressions in named chart variables: parsing, printing,
//! symbolic differentiation, substitution and evaluation.
//!
//! Simplification is limited to constant folding and the 0/1 identities
//! applied by the smart constructors; equality of two expressions is judged
//! numerically elsewhere.

mod eval;
mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops;
use std::sync::Arc;

use thiserror::Error;

pub use eval::{Binding, CompiledExpr};
pub use parse::parse_expr;

/// Name of the time variable shared by every time-dependent object.
pub const TIME: &str = "t";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain error: {0}")]
    Domain(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Arc<str>),
    Neg(Expr),
    Call(Func, Expr),
    Binary(BinOp, Expr, Expr),
    /// Integer power.
    Pow(Expr, i32),
}

/// Immutable, cheaply clonable expression tree.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(v: f64) -> Expr {
        Expr(Arc::new(Node::Const(v)))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(name: &str) -> Expr {
        Expr(Arc::new(Node::Var(Arc::from(name))))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn neg(a: &Expr) -> Expr {
        match a.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr(Arc::new(Node::Neg(a.clone()))),
        }
    }

    pub fn call(f: Func, a: &Expr) -> Expr {
        if let Some(c) = a.as_const() {
            if let Ok(v) = eval::apply_func(f, c) {
                return Expr::constant(v);
            }
        }
        Expr(Arc::new(Node::Call(f, a.clone())))
    }

    pub fn add(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x + y),
            (Some(x), _) if x == 0.0 => b.clone(),
            (_, Some(y)) if y == 0.0 => a.clone(),
            _ => Expr(Arc::new(Node::Binary(BinOp::Add, a.clone(), b.clone()))),
        }
    }

    pub fn sub(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (_, Some(y)) if y == 0.0 => a.clone(),
            _ => Expr(Arc::new(Node::Binary(BinOp::Sub, a.clone(), b.clone()))),
        }
    }

    pub fn mul(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::zero(),
            (Some(x), _) if x == 1.0 => b.clone(),
            (_, Some(y)) if y == 1.0 => a.clone(),
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr(Arc::new(Node::Binary(BinOp::Mul, a.clone(), b.clone()))),
        }
    }

    pub fn div(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::constant(x / y),
            (Some(x), _) if x == 0.0 => Expr::zero(),
            (_, Some(y)) if y == 1.0 => a.clone(),
            _ => Expr(Arc::new(Node::Binary(BinOp::Div, a.clone(), b.clone()))),
        }
    }

    pub fn pow(a: &Expr, n: i32) -> Expr {
        match (a.as_const(), n) {
            (Some(c), n) if c != 0.0 || n > 0 => Expr::constant(c.powi(n)),
            (_, 1) => a.clone(),
            _ => Expr(Arc::new(Node::Pow(a.clone(), n))),
        }
    }

    /// Free variables, sorted.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Var(v) => {
                out.insert(v.to_string());
            }
            Node::Neg(a) | Node::Call(_, a) | Node::Pow(a, _) => a.collect_vars(out),
            Node::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn mentions(&self, var: &str) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(v) => &**v == var,
            Node::Neg(a) | Node::Call(_, a) | Node::Pow(a, _) => a.mentions(var),
            Node::Binary(_, a, b) => a.mentions(var) || b.mentions(var),
        }
    }

    /// Symbolic partial derivative with respect to `var`.
    pub fn differentiate(&self, var: &str) -> Expr {
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(v) => {
                if &**v == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Neg(a) => Expr::neg(&a.differentiate(var)),
            Node::Call(f, a) => {
                let da = a.differentiate(var);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, a),
                    Func::Cos => Expr::neg(&Expr::call(Func::Sin, a)),
                    Func::Exp => Expr::call(Func::Exp, a),
                    Func::Log => return Expr::div(&da, a),
                    Func::Sqrt => {
                        return Expr::div(&da, &Expr::mul(&Expr::constant(2.0), &Expr::call(Func::Sqrt, a)))
                    }
                };
                Expr::mul(&outer, &da)
            }
            Node::Binary(op, a, b) => {
                let (da, db) = (a.differentiate(var), b.differentiate(var));
                match op {
                    BinOp::Add => Expr::add(&da, &db),
                    BinOp::Sub => Expr::sub(&da, &db),
                    BinOp::Mul => Expr::add(&Expr::mul(&da, b), &Expr::mul(a, &db)),
                    BinOp::Div => {
                        if db.is_zero() {
                            Expr::div(&da, b)
                        } else {
                            Expr::div(
                                &Expr::sub(&Expr::mul(&da, b), &Expr::mul(a, &db)),
                                &Expr::pow(b, 2),
                            )
                        }
                    }
                }
            }
            Node::Pow(a, n) => {
                let da = a.differentiate(var);
                match n {
                    0 => Expr::zero(),
                    1 => da,
                    _ => Expr::mul(&Expr::mul(&Expr::constant(*n as f64), &Expr::pow(a, n - 1)), &da),
                }
            }
        }
    }

    /// Replaces variables by expressions; unmentioned variables are kept.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(v) => map.get(&**v).cloned().unwrap_or_else(|| self.clone()),
            Node::Neg(a) => Expr::neg(&a.substitute(map)),
            Node::Call(f, a) => Expr::call(*f, &a.substitute(map)),
            Node::Pow(a, n) => Expr::pow(&a.substitute(map), *n),
            Node::Binary(op, a, b) => {
                let (a, b) = (a.substitute(map), b.substitute(map));
                match op {
                    BinOp::Add => Expr::add(&a, &b),
                    BinOp::Sub => Expr::sub(&a, &b),
                    BinOp::Mul => Expr::mul(&a, &b),
                    BinOp::Div => Expr::div(&a, &b),
                }
            }
        }
    }

    pub fn substitute_one(&self, var: &str, value: &Expr) -> Expr {
        let mut map = BTreeMap::new();
        map.insert(var.to_string(), value.clone());
        self.substitute(&map)
    }

    /// Number of nodes, for diagnostics.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Neg(a) | Node::Call(_, a) | Node::Pow(a, _) => 1 + a.size(),
            Node::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn evaluate(&self, b: &Binding) -> Result<f64, ExprError> {
        self.evaluate_as::<f64>(&|name| b.get(name))
    }

    /// Evaluates in any scalar type, looking variables up through `lookup`.
    pub fn evaluate_as<T: crate::Scalar>(&self, lookup: &dyn Fn(&str) -> Option<T>) -> Result<T, ExprError> {
        eval::eval_tree(self, lookup)
    }

    /// Resolves variables to slot indices given by `slots`.
    pub fn compile(&self, slots: &[&str]) -> Result<CompiledExpr, ExprError> {
        CompiledExpr::new(self, slots)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::constant(v)
    }
}

macro_rules! impl_binop {
    ($tr:ident, $method:ident, $ctor:ident) => {
        impl ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(&self, &rhs)
            }
        }
        impl ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(self, rhs)
            }
        }
        impl ops::$tr<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$ctor(&self, &Expr::constant(rhs))
            }
        }
        impl ops::$tr<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(&Expr::constant(self), &rhs)
            }
        }
    };
}

impl_binop!(Add, add, add);
impl_binop!(Sub, sub, sub);
impl_binop!(Mul, mul, mul);
impl_binop!(Div, div, div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}
