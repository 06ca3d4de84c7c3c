use std::collections::BTreeMap;

use super::{BinOp, Expr, ExprError, Func, Node};
use crate::Scalar;

/// Assignment of real values to variable names.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Binding {
    values: BTreeMap<String, f64>,
}

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(&str, f64)]) -> Self {
        Binding { values: pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect() }
    }

    /// Binds `names[i]` to `values[i]`.
    pub fn from_slices<S: AsRef<str>>(names: &[S], values: &[f64]) -> Self {
        assert_eq!(names.len(), values.len(), "binding arity mismatch");
        Binding { values: names.iter().map(|n| n.as_ref().to_string()).zip(values.iter().copied()).collect() }
    }

    pub fn set(&mut self, name: &str, value: f64) -> &mut Self {
        self.values.insert(name.to_string(), value);
        self
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

pub(super) fn apply_func<T: Scalar>(f: Func, x: T) -> Result<T, ExprError> {
    Ok(match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Exp => x.exp(),
        Func::Log => {
            if x <= T::zero() {
                return Err(ExprError::Domain("log of non-positive value"));
            }
            x.ln()
        }
        Func::Sqrt => {
            if x < T::zero() {
                return Err(ExprError::Domain("sqrt of negative value"));
            }
            x.sqrt()
        }
    })
}

fn apply_binary<T: Scalar>(op: BinOp, a: T, b: T) -> Result<T, ExprError> {
    Ok(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == T::zero() {
                return Err(ExprError::Domain("division by zero"));
            }
            a / b
        }
    })
}

fn apply_pow<T: Scalar>(a: T, n: i32) -> Result<T, ExprError> {
    if a == T::zero() && n <= 0 {
        return Err(ExprError::Domain(if n == 0 { "0^0" } else { "division by zero" }));
    }
    Ok(a.powi(n))
}

pub(super) fn eval_tree<T: Scalar>(e: &Expr, lookup: &dyn Fn(&str) -> Option<T>) -> Result<T, ExprError> {
    match e.node() {
        Node::Const(c) => Ok(T::lit(*c)),
        Node::Var(v) => lookup(v).ok_or_else(|| ExprError::Unbound(v.to_string())),
        Node::Neg(a) => Ok(-eval_tree(a, lookup)?),
        Node::Call(f, a) => apply_func(*f, eval_tree(a, lookup)?),
        Node::Binary(op, a, b) => apply_binary(*op, eval_tree(a, lookup)?, eval_tree(b, lookup)?),
        Node::Pow(a, n) => apply_pow(eval_tree(a, lookup)?, *n),
    }
}

#[derive(Debug, Clone)]
enum Op {
    Const(f64),
    Slot(usize),
    Neg,
    Call(Func),
    Binary(BinOp),
    Pow(i32),
}

/// Expression with variables resolved to positional slots, evaluated as a
/// postfix program. Used on hot paths such as flow integration.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    ops: Vec<Op>,
    depth: usize,
}

impl CompiledExpr {
    pub(super) fn new(e: &Expr, slots: &[&str]) -> Result<Self, ExprError> {
        let mut ops = Vec::with_capacity(e.size());
        emit(e, slots, &mut ops)?;
        let mut depth = 0usize;
        let mut cur = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Slot(_) => cur += 1,
                Op::Binary(_) => cur -= 1,
                _ => {}
            }
            depth = depth.max(cur);
        }
        Ok(CompiledExpr { ops, depth })
    }

    pub fn eval<T: Scalar>(&self, slots: &[T]) -> Result<T, ExprError> {
        let mut stack: Vec<T> = Vec::with_capacity(self.depth);
        for op in &self.ops {
            match *op {
                Op::Const(c) => stack.push(T::lit(c)),
                Op::Slot(i) => stack.push(slots[i]),
                Op::Neg => {
                    let a = stack.pop().expect("stack");
                    stack.push(-a);
                }
                Op::Call(f) => {
                    let a = stack.pop().expect("stack");
                    stack.push(apply_func(f, a)?);
                }
                Op::Pow(n) => {
                    let a = stack.pop().expect("stack");
                    stack.push(apply_pow(a, n)?);
                }
                Op::Binary(b) => {
                    let y = stack.pop().expect("stack");
                    let x = stack.pop().expect("stack");
                    stack.push(apply_binary(b, x, y)?);
                }
            }
        }
        Ok(stack.pop().expect("non-empty program"))
    }
}

fn emit(e: &Expr, slots: &[&str], ops: &mut Vec<Op>) -> Result<(), ExprError> {
    match e.node() {
        Node::Const(c) => ops.push(Op::Const(*c)),
        Node::Var(v) => {
            let i = slots.iter().position(|s| *s == &**v).ok_or_else(|| ExprError::Unbound(v.to_string()))?;
            ops.push(Op::Slot(i));
        }
        Node::Neg(a) => {
            emit(a, slots, ops)?;
            ops.push(Op::Neg);
        }
        Node::Call(f, a) => {
            emit(a, slots, ops)?;
            ops.push(Op::Call(*f));
        }
        Node::Pow(a, n) => {
            emit(a, slots, ops)?;
            ops.push(Op::Pow(*n));
        }
        Node::Binary(op, a, b) => {
            emit(a, slots, ops)?;
            emit(b, slots, ops)?;
            ops.push(Op::Binary(*op));
        }
    }
    Ok(())
}
