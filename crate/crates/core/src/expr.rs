//! A small expression language for custom kernel functions of one variable `t`.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;
//! primary = number | "t" | func "(" expr ")" | "(" expr ")" ;
//! func    = "exp" | "sin" | "cos" | "sqrt" | "log" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]
//!         | "." digits [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! `^` binds tighter than unary minus and is right-associative, so `-t^2`
//! is `-(t^2)` and `2^3^2` is `2^(3^2)`. The other binary operators are
//! left-associative.

use std::fmt;

use thiserror::Error;

use crate::error::{Error, Result};

/// EBNF of the expression language, as printed by front-ends on usage errors.
pub const GRAMMAR: &str = r#"expr    = term { ("+" | "-") term } ;
term    = unary { ("*" | "/") unary } ;
unary   = "-" unary | power ;
power   = primary [ "^" unary ] ;
primary = number | "t" | func "(" expr ")" | "(" expr ")" ;
func    = "exp" | "sin" | "cos" | "sqrt" | "log" ;
number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]
        | "." digits [ ("e" | "E") [ "+" | "-" ] digits ] ;"#;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {expected}")]
    SyntaxError { offset: usize, expected: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
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
    Exp,
    Sin,
    Cos,
    Sqrt,
    Log,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Log => "log",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "log" => Func::Log,
            _ => return None,
        })
    }
}

/// Expression tree over the single variable `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Evaluates at `t`. Any non-finite intermediate or a value outside a
    /// function's domain is reported as [`Error::Evaluation`].
    pub fn eval(&self, t: f64) -> Result<f64> {
        let fail = |message: String| Error::Evaluation { t, message };
        let value = match self {
            Expr::Num(x) => *x,
            Expr::Var => t,
            Expr::Neg(e) => -e.eval(t)?,
            Expr::Binary(op, a, b) => {
                let a = a.eval(t)?;
                let b = b.eval(t)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(fail("division by zero".into()));
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(func, arg) => {
                let x = arg.eval(t)?;
                match func {
                    Func::Exp => x.exp(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(fail(format!("sqrt of negative value {x}")));
                        }
                        x.sqrt()
                    }
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(fail(format!("log of non-positive value {x}")));
                        }
                        x.ln()
                    }
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(fail(format!("non-finite result {value}")))
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            Expr::Num(_) | Expr::Var | Expr::Call(..) => 5,
        }
    }

    fn write_with(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let wrap = self.precedence() < min_prec;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            Expr::Num(x) => write!(f, "{x:?}")?,
            Expr::Var => f.write_str("t")?,
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.write_with(f, 3)?;
            }
            Expr::Binary(op, a, b) => {
                let (sym, prec) = match op {
                    BinOp::Add => (" + ", 1),
                    BinOp::Sub => (" - ", 1),
                    BinOp::Mul => (" * ", 2),
                    BinOp::Div => (" / ", 2),
                    BinOp::Pow => ("^", 4),
                };
                if *op == BinOp::Pow {
                    a.write_with(f, 5)?;
                    f.write_str(sym)?;
                    b.write_with(f, 3)?;
                } else {
                    a.write_with(f, prec)?;
                    f.write_str(sym)?;
                    b.write_with(f, prec + 1)?;
                }
            }
            Expr::Call(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.write_with(f, 0)?;
                f.write_str(")")?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_with(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        parse_kernel_expression(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(x) => format!("number {x}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> std::result::Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push((tok, start));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            let digits = |i: &mut usize| {
                let s = *i;
                while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                    *i += 1;
                }
                *i - s
            };
            let mut n = digits(&mut i);
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                n += digits(&mut i);
            }
            if n == 0 {
                return Err(ParseError::SyntaxError {
                    offset: start,
                    expected: "digits".into(),
                });
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                i += 1;
                if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                    i += 1;
                }
                if digits(&mut i) == 0 {
                    return Err(ParseError::SyntaxError {
                        offset: i,
                        expected: "exponent digits".into(),
                    });
                }
            }
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| ParseError::SyntaxError {
                offset: start,
                expected: "a number".into(),
            })?;
            out.push((Tok::Num(value), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        // Offset of a non-ASCII character is still its first byte.
        return Err(ParseError::SyntaxError {
            offset: start,
            expected: "a number, `t`, a function name, an operator or a parenthesis".into(),
        });
    }
    out.push((Tok::End, bytes.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError::SyntaxError {
            offset: self.offset(),
            expected: format!("{expected}, found {}", self.peek().describe()),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> std::result::Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn expr(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> std::result::Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> std::result::Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(x) => {
                self.bump();
                Ok(Expr::Num(x))
            }
            Tok::Ident(name) => {
                self.bump();
                if name == "t" {
                    return Ok(Expr::Var);
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(ParseError::UnknownIdentifier { name, offset });
                };
                self.expect(Tok::LParen, "`(` after function name")?;
                let arg = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error("a number, `t`, a function call or `(`")),
        }
    }
}

/// Parses a kernel expression such as `exp(2*t) - 1`.
pub fn parse_kernel_expression(source: &str) -> std::result::Result<Expr, ParseError> {
    let toks = lex(source)?;
    let mut parser = Parser { toks, pos: 0 };
    let expr = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(parser.error("an operator or end of input"));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval(src: &str, t: f64) -> f64 {
        parse_kernel_expression(src).unwrap().eval(t).unwrap()
    }

    #[test]
    fn grammar_constant_matches_module_doc() {
        let doc = include_str!("expr.rs");
        for line in GRAMMAR.lines() {
            assert!(doc.contains(&format!("//! {line}")), "{line}");
        }
    }

    #[test]
    fn evaluates_examples() {
        assert_eq!(eval("exp(2*t) - 1", 0.0), 0.0);
        assert_eq!(eval("1 - t", 0.25), 0.75);
        assert_eq!(eval("2 - t", 1.0), 1.0);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("-t^2", 3.0), -9.0);
        assert_eq!(eval("2^3^2", 0.0), 512.0);
        assert_eq!(eval("8 / 4 / 2", 0.0), 1.0);
        assert_eq!(eval("10 - 4 - 3", 0.0), 3.0);
        assert_eq!(eval("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(eval("2^-1", 0.0), 0.5);
        assert_eq!(eval("--t", 2.0), 2.0);
        assert_eq!(eval("1.5e1 * .5", 0.0), 7.5);
        assert!((eval("sqrt(t) * log(exp(t)) + sin(0) + cos(0)", 4.0) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse_kernel_expression("1 + * t") {
            Err(ParseError::SyntaxError { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
        match parse_kernel_expression("(t + 1") {
            Err(ParseError::SyntaxError { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("unexpected {other:?}"),
        }
        match parse_kernel_expression("t t") {
            Err(ParseError::SyntaxError { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_kernel_expression("1e"),
            Err(ParseError::SyntaxError { offset: 2, .. })
        ));
        assert!(matches!(
            parse_kernel_expression("t # 2"),
            Err(ParseError::SyntaxError { offset: 2, .. })
        ));
    }

    #[test]
    fn unknown_identifiers() {
        assert_eq!(
            parse_kernel_expression("2 * x"),
            Err(ParseError::UnknownIdentifier {
                name: "x".into(),
                offset: 4
            })
        );
        assert!(matches!(
            parse_kernel_expression("tan(t)"),
            Err(ParseError::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn domain_errors() {
        let e = parse_kernel_expression("log(t)").unwrap();
        assert!(matches!(e.eval(0.0), Err(Error::Evaluation { .. })));
        let e = parse_kernel_expression("sqrt(t - 1)").unwrap();
        assert!(e.eval(0.5).is_err());
        let e = parse_kernel_expression("1 / t").unwrap();
        assert!(e.eval(0.0).is_err());
        assert_eq!(e.eval(0.5).unwrap(), 2.0);
    }

    #[test]
    fn printing_is_minimal_but_faithful() {
        let e = parse_kernel_expression("(1 - t) * (2 - (t - 1))").unwrap();
        assert_eq!(e.to_string(), "(1.0 - t) * (2.0 - (t - 1.0))");
        let e = parse_kernel_expression("(-t)^2").unwrap();
        assert_eq!(e.to_string(), "(-t)^2.0");
        let e = parse_kernel_expression("(2^3)^2").unwrap();
        assert_eq!(e.to_string(), "(2.0^3.0)^2.0");
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Num),
            (1e-12f64..1.0).prop_map(Expr::Num),
            Just(Expr::Var),
        ];
        leaf.prop_recursive(5, 48, 3, |inner| {
            let op = prop_oneof![
                Just(BinOp::Add),
                Just(BinOp::Sub),
                Just(BinOp::Mul),
                Just(BinOp::Div),
                Just(BinOp::Pow),
            ];
            let func = prop_oneof![
                Just(Func::Exp),
                Just(Func::Sin),
                Just(Func::Cos),
                Just(Func::Sqrt),
                Just(Func::Log),
            ];
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (op, inner.clone(), inner.clone())
                    .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
                (func, inner).prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse_kernel_expression(&printed).unwrap();
            prop_assert_eq!(&reparsed, &e);
            prop_assert_eq!(reparsed.to_string(), printed);
        }

        #[test]
        fn evaluation_is_finite_or_error(e in arb_expr(), t in 0.0f64..=1.0) {
            if let Ok(v) = e.eval(t) {
                prop_assert!(v.is_finite());
            }
        }
    }
}
