//! Method-body expressions: `4*a`, `a^2 * sin(alpha)`, `sum(i=1..n, a[i])`.
//!
//! Precedence from tightest: `^` (right associative), function application,
//! unary minus, `* /`, `+ -`. Trig functions take their argument in degrees.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at offset {pos}: {message}")]
pub struct SyntaxError {
    pub pos: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }

    pub fn apply(self, x: f64) -> Result<f64, String> {
        match self {
            Func::Sin => Ok(x.to_radians().sin()),
            Func::Cos => Ok(x.to_radians().cos()),
            Func::Sqrt if x < 0.0 => Err(format!("sqrt of negative value {x}")),
            Func::Sqrt => Ok(x.sqrt()),
        }
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

impl BinOp {
    pub fn apply(self, a: f64, b: f64) -> Result<f64, String> {
        match self {
            BinOp::Add => Ok(a + b),
            BinOp::Sub => Ok(a - b),
            BinOp::Mul => Ok(a * b),
            BinOp::Div if b == 0.0 => Err("division by zero".to_string()),
            BinOp::Div => Ok(a / b),
            BinOp::Pow => {
                let r = a.powf(b);
                if r.is_finite() {
                    Ok(r)
                } else {
                    Err(format!("{a}^{b} is undefined"))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    /// `a[k]`, an element of an indexed variable family (1-based).
    Index(String, Box<Expr>),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `sum(i = from..to, body)`
    Sum {
        index: String,
        from: Box<Expr>,
        to: Box<Expr>,
        body: Box<Expr>,
    },
}

impl Expr {
    /// Variables that must come from bindings (sum indices excluded).
    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            Expr::Index(v, idx) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
                idx.collect_free(bound, out);
            }
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_free(bound, out),
            Expr::Binary(_, a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Expr::Sum {
                index,
                from,
                to,
                body,
            } => {
                from.collect_free(bound, out);
                to.collect_free(bound, out);
                bound.push(index.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    DotDot,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, SyntaxError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit()
            || (c == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()))
        {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            // a '.' belongs to the number only when a digit follows (so `1..n` lexes as 1, .., n)
            if i < bytes.len() && bytes[i] == b'.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()) {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit = &text[start..i];
            let v = lit.parse::<f64>().map_err(|_| SyntaxError {
                pos: start,
                message: format!("bad number `{lit}`"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else if c == '.' && bytes.get(i + 1) == Some(&b'.') {
            out.push((i, Tok::DotDot));
            i += 2;
        } else if "+-*/^()[],=".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(SyntaxError {
                pos: i,
                message: format!("unexpected character `{}`", &text[i..].chars().next().unwrap()),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            pos: self.offset(),
            message: message.into(),
        })
    }

    fn eat_op(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, c: char) -> Result<(), SyntaxError> {
        if self.eat_op(c) {
            Ok(())
        } else {
            self.error(format!("expected `{c}`"))
        }
    }

    fn additive(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op('+')) => BinOp::Add,
                Some(Tok::Op('-')) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.multiplicative()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op('*')) => BinOp::Mul,
                Some(Tok::Op('/')) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_op('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, SyntaxError> {
        let base = self.primary()?;
        if self.eat_op('^') {
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.additive()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "sum" && self.peek() == Some(&Tok::Op('(')) {
                    return self.sum();
                }
                if let Some(func) = Func::from_name(&name) {
                    if self.eat_op('(') {
                        let arg = self.additive()?;
                        self.expect_op(')')?;
                        return Ok(Expr::Call(func, Box::new(arg)));
                    }
                    return self.error(format!("`{name}` needs a parenthesised argument"));
                }
                if self.eat_op('[') {
                    let idx = self.additive()?;
                    self.expect_op(']')?;
                    return Ok(Expr::Index(name, Box::new(idx)));
                }
                Ok(Expr::Var(name))
            }
            Some(_) => self.error("expected a number, variable or `(`"),
            None => self.error("unexpected end of expression"),
        }
    }

    fn sum(&mut self) -> Result<Expr, SyntaxError> {
        self.expect_op('(')?;
        let index = match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                name
            }
            _ => return self.error("expected summation index"),
        };
        self.expect_op('=')?;
        let from = self.additive()?;
        if self.peek() != Some(&Tok::DotDot) {
            return self.error("expected `..` in summation range");
        }
        self.pos += 1;
        let to = self.additive()?;
        self.expect_op(',')?;
        let body = self.additive()?;
        self.expect_op(')')?;
        Ok(Expr::Sum {
            index,
            from: Box::new(from),
            to: Box::new(to),
            body: Box::new(body),
        })
    }
}

pub fn parse_expr(text: &str) -> Result<Expr, SyntaxError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let e = p.additive()?;
    if p.pos != p.toks.len() {
        return p.error("unexpected trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(v: f64) -> Box<Expr> {
        Box::new(Expr::Num(v))
    }

    fn var(v: &str) -> Box<Expr> {
        Box::new(Expr::Var(v.to_string()))
    }

    #[test]
    fn perimeter_body() {
        assert_eq!(
            parse_expr("4*a").unwrap(),
            Expr::Binary(BinOp::Mul, num(4.0), var("a"))
        );
    }

    #[test]
    fn area_body() {
        assert_eq!(
            parse_expr("a^2 * sin(alpha)").unwrap(),
            Expr::Binary(
                BinOp::Mul,
                Box::new(Expr::Binary(BinOp::Pow, var("a"), num(2.0))),
                Box::new(Expr::Call(Func::Sin, var("alpha")))
            )
        );
    }

    #[test]
    fn malformed_input() {
        let err = parse_expr("4*").unwrap_err();
        assert_eq!(err.pos, 2);
        assert!(parse_expr("").is_err());
        assert!(parse_expr("(a").is_err());
        assert!(parse_expr("a b").is_err());
        assert!(parse_expr("sin a").is_err());
        assert!(parse_expr("a $ b").is_err());
    }

    #[test]
    fn precedence_and_associativity() {
        // 1 + 2*3^2 = 1 + (2*(3^2))
        let e = parse_expr("1 + 2*3^2").unwrap();
        assert_eq!(
            e,
            Expr::Binary(
                BinOp::Add,
                num(1.0),
                Box::new(Expr::Binary(
                    BinOp::Mul,
                    num(2.0),
                    Box::new(Expr::Binary(BinOp::Pow, num(3.0), num(2.0)))
                ))
            )
        );
        // right associative power
        let e = parse_expr("2^3^2").unwrap();
        assert_eq!(
            e,
            Expr::Binary(
                BinOp::Pow,
                num(2.0),
                Box::new(Expr::Binary(BinOp::Pow, num(3.0), num(2.0)))
            )
        );
        // unary minus binds looser than power
        assert_eq!(
            parse_expr("-a^2").unwrap(),
            Expr::Neg(Box::new(Expr::Binary(BinOp::Pow, var("a"), num(2.0))))
        );
        // left associative subtraction
        assert_eq!(
            parse_expr("a-b-c").unwrap(),
            Expr::Binary(
                BinOp::Sub,
                Box::new(Expr::Binary(BinOp::Sub, var("a"), var("b"))),
                var("c")
            )
        );
    }

    #[test]
    fn summation_family() {
        let e = parse_expr("sum(i=1..n, a[i])").unwrap();
        assert_eq!(
            e,
            Expr::Sum {
                index: "i".into(),
                from: num(1.0),
                to: var("n"),
                body: Box::new(Expr::Index("a".into(), var("i"))),
            }
        );
        let free: Vec<_> = e.free_variables().into_iter().collect();
        assert_eq!(free, vec!["a".to_string(), "n".to_string()]);
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_expr("2.5e1").unwrap(), Expr::Num(25.0));
        assert_eq!(parse_expr(".5").unwrap(), Expr::Num(0.5));
    }

    #[test]
    fn degree_trig() {
        assert!((Func::Sin.apply(90.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((Func::Cos.apply(60.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(Func::Sqrt.apply(-1.0).is_err());
        assert!(BinOp::Div.apply(1.0, 0.0).is_err());
    }
}
