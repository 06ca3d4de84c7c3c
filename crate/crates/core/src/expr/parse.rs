//! Recursive-descent parser.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' exponent)?
//! exponent := '-'? INT ('^' exponent)? | '(' '-'? INT ')'
//! atom  := NUMBER | FUNC '(' expr ')' | VAR | '(' expr ')'
//! ```

use super::{Expr, ExprError, Func};

/// Parses `text`, accepting only identifiers from `allowed_vars` and the
/// fixed function set.
pub fn parse_expr(text: &str, allowed_vars: &[&str]) -> Result<Expr, ExprError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, vars: allowed_vars };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> ExprError {
        let message = if self.pos >= self.src.len() { format!("{message} (end of input)") } else { message.to_string() };
        ExprError::Syntax { offset: self.pos, message }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::add(&lhs, &self.term()?);
            } else if self.eat(b'-') {
                lhs = Expr::sub(&lhs, &self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::mul(&lhs, &self.unary()?);
            } else if self.eat(b'/') {
                lhs = Expr::div(&lhs, &self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            Ok(Expr::neg(&self.unary()?))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let n = self.exponent()?;
            Ok(Expr::pow(&base, n))
        } else {
            Ok(base)
        }
    }

    fn exponent(&mut self) -> Result<i32, ExprError> {
        if self.eat(b'(') {
            let n = self.signed_int()?;
            if !self.eat(b')') {
                return Err(self.err("expected `)` after exponent"));
            }
            return Ok(n);
        }
        let n = self.signed_int()?;
        if self.eat(b'^') {
            let m = self.exponent()?;
            let m = u32::try_from(m).map_err(|_| self.err("negative nested exponent"))?;
            return n.checked_pow(m).ok_or_else(|| self.err("exponent overflow"));
        }
        Ok(n)
    }

    fn signed_int(&mut self) -> Result<i32, ExprError> {
        let neg = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("exponent must be an integer literal"));
        }
        if matches!(self.src.get(self.pos), Some(b'.') | Some(b'e') | Some(b'E')) {
            return Err(self.err("exponent must be an integer literal"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let v: i32 = s.parse().map_err(|_| ExprError::Syntax { offset: start, message: "exponent overflow".into() })?;
        Ok(if neg { -v } else { v })
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            None => Err(self.err("expected an operand")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.err("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.err("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        let v: f64 = s.parse().map_err(|_| ExprError::Syntax { offset: start, message: format!("malformed number `{s}`") })?;
        Ok(Expr::constant(v))
    }

    fn identifier(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        if self.peek() == Some(b'(') {
            let f = Func::from_name(name)
                .ok_or_else(|| ExprError::UnknownIdentifier { offset: start, name: name.to_string() })?;
            self.pos += 1;
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.err("expected `)` after function argument"));
            }
            return Ok(Expr::call(f, &arg));
        }
        if self.vars.contains(&name) {
            Ok(Expr::var(name))
        } else {
            Err(ExprError::UnknownIdentifier { offset: start, name: name.to_string() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Binding;

    #[test]
    fn incomplete_sum_is_error_at_end() {
        match parse_expr("x +", &["x"]) {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifiers() {
        assert_eq!(
            parse_expr("x + z", &["x"]),
            Err(ExprError::UnknownIdentifier { offset: 4, name: "z".into() })
        );
        assert!(matches!(parse_expr("tan(x)", &["x"]), Err(ExprError::UnknownIdentifier { .. })));
    }

    #[test]
    fn precedence_and_associativity() {
        let b = Binding::from_pairs(&[("x", 2.0), ("y", 3.0)]);
        let v = |s: &str| parse_expr(s, &["x", "y"]).unwrap().evaluate(&b).unwrap();
        assert_eq!(v("-x^2"), -4.0);
        assert_eq!(v("x^3^2"), 512.0);
        assert_eq!(v("x^-1"), 0.5);
        assert_eq!(v("x - y - 1"), -2.0);
        assert_eq!(v("x / y / 2"), 2.0 / 3.0 / 2.0);
        assert_eq!(v("2*-y"), -6.0);
        assert_eq!(v("1.5e1 + .5"), 15.5);
    }

    #[test]
    fn rejects_non_integer_exponents() {
        assert!(parse_expr("x^0.5", &["x"]).is_err());
        assert!(parse_expr("x^y", &["x", "y"]).is_err());
        assert!(parse_expr("(x", &["x"]).is_err());
        assert!(parse_expr("", &["x"]).is_err());
    }
}
