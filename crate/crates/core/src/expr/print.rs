use std::fmt;

use super::{BinOp, Expr, Node};

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Node::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Node::Neg(_) => 3,
        Node::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => 3,
        Node::Pow(..) => 4,
        _ => 5,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c.is_finite() {
        write!(f, "{c:?}")
    } else if c.is_nan() {
        write!(f, "(0/0)")
    } else if c > 0.0 {
        write!(f, "(1/0)")
    } else {
        write!(f, "(-1/0)")
    }
}

/// Canonical ASCII form, parenthesized only where precedence requires.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write_const(f, *c),
            Node::Var(v) => write!(f, "{v}"),
            Node::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, 3)
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
            Node::Pow(a, n) => {
                write_child(f, a, 5)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Node::Binary(op, a, b) => {
                let (sym, p) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                };
                write_child(f, a, p)?;
                if p == 1 {
                    write!(f, " {sym} ")?;
                } else {
                    write!(f, "{sym}")?;
                }
                write_child(f, b, p + 1)
            }
        }
    }
}
