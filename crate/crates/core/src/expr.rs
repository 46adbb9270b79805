//! Arithmetic expressions in the time variable `t`.
//!
//! Coefficient matrices and forcing terms are given as small closed-form
//! expressions (`"2*sin(2*t)"`, `"-1"`, `"exp(-t)"`). The grammar is
//! deliberately tiny:
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := ("-")? atom ("^" integer)?
//! atom   := number | "t" | func "(" expr ")" | "(" expr ")"
//! func   := "sin" | "cos" | "exp"
//! ```
//!
//! Numbers are decimal with an optional exponent (`1.5e-3`). Binary
//! operators associate to the left; `^` takes an integer literal exponent.

use std::fmt;

/// Expression AST over constants, `t`, arithmetic, integer powers and
/// `sin`/`cos`/`exp`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Const(f64),
    Time,
    Add(Box<Expression>, Box<Expression>),
    Sub(Box<Expression>, Box<Expression>),
    Mul(Box<Expression>, Box<Expression>),
    Div(Box<Expression>, Box<Expression>),
    Neg(Box<Expression>),
    Pow(Box<Expression>, i32),
    Sin(Box<Expression>),
    Cos(Box<Expression>),
    Exp(Box<Expression>),
}

/// Parse failure, with the byte offset into the source where it happened.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseError {
    Syntax { pos: usize, message: String },
    UnknownIdentifier { pos: usize, name: String },
    NonIntegerExponent { pos: usize },
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Syntax { pos, message } => {
                write!(f, "syntax error at offset {pos}: {message}")
            }
            ParseError::UnknownIdentifier { pos, name } => {
                write!(f, "unknown identifier `{name}` at offset {pos}")
            }
            ParseError::NonIntegerExponent { pos } => {
                write!(f, "exponent at offset {pos} must be an integer literal")
            }
        }
    }
}

impl std::error::Error for ParseError {}

/// Evaluation failure at a specific time point.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    DivisionByZero { t: f64 },
    NonFinite { t: f64 },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::DivisionByZero { t } => write!(f, "division by zero at t = {t}"),
            EvalError::NonFinite { t } => write!(f, "non-finite value at t = {t}"),
        }
    }
}

impl std::error::Error for EvalError {}

impl Expression {
    /// Evaluates the expression at time `t` with IEEE double semantics.
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        let finite = |v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(EvalError::NonFinite { t })
            }
        };
        match self {
            Expression::Const(c) => Ok(*c),
            Expression::Time => Ok(t),
            Expression::Add(a, b) => finite(a.eval(t)? + b.eval(t)?),
            Expression::Sub(a, b) => finite(a.eval(t)? - b.eval(t)?),
            Expression::Mul(a, b) => finite(a.eval(t)? * b.eval(t)?),
            Expression::Div(a, b) => {
                let denom = b.eval(t)?;
                if denom == 0.0 {
                    return Err(EvalError::DivisionByZero { t });
                }
                finite(a.eval(t)? / denom)
            }
            Expression::Neg(a) => Ok(-a.eval(t)?),
            Expression::Pow(a, k) => finite(a.eval(t)?.powi(*k)),
            Expression::Sin(a) => Ok(a.eval(t)?.sin()),
            Expression::Cos(a) => Ok(a.eval(t)?.cos()),
            Expression::Exp(a) => finite(a.eval(t)?.exp()),
        }
    }

    /// True when the expression never references `t`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expression::Const(_) => true,
            Expression::Time => false,
            Expression::Add(a, b)
            | Expression::Sub(a, b)
            | Expression::Mul(a, b)
            | Expression::Div(a, b) => a.is_constant() && b.is_constant(),
            Expression::Neg(a)
            | Expression::Pow(a, _)
            | Expression::Sin(a)
            | Expression::Cos(a)
            | Expression::Exp(a) => a.is_constant(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expression::Add(..) | Expression::Sub(..) => 1,
            Expression::Mul(..) | Expression::Div(..) => 2,
            Expression::Neg(..) => 3,
            Expression::Pow(..) => 4,
            _ => 5,
        }
    }
}

// Pretty-printing emits grammar-valid text that re-parses to the same AST.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expression, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expression::Const(c) => write!(f, "{c}"),
            Expression::Time => write!(f, "t"),
            Expression::Add(a, b) => {
                child(f, a, a.precedence() < 1)?;
                write!(f, " + ")?;
                child(f, b, b.precedence() <= 1)
            }
            Expression::Sub(a, b) => {
                child(f, a, a.precedence() < 1)?;
                write!(f, " - ")?;
                child(f, b, b.precedence() <= 1)
            }
            Expression::Mul(a, b) => {
                child(f, a, a.precedence() < 2)?;
                write!(f, "*")?;
                child(f, b, b.precedence() <= 2)
            }
            Expression::Div(a, b) => {
                child(f, a, a.precedence() < 2)?;
                write!(f, "/")?;
                child(f, b, b.precedence() <= 2)
            }
            // The grammar allows at most one leading minus per factor, so
            // anything below a power must be parenthesized.
            Expression::Neg(a) => {
                write!(f, "-")?;
                child(f, a, a.precedence() < 4)
            }
            Expression::Pow(a, k) => {
                child(f, a, a.precedence() < 5)?;
                write!(f, "^{k}")
            }
            Expression::Sin(a) => write!(f, "sin({a})"),
            Expression::Cos(a) => write!(f, "cos({a})"),
            Expression::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num { value: f64, integral: Option<i64> },
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    kind: TokKind,
    pos: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let pos = i;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
            }
            b'+' => {
                out.push(Token { kind: TokKind::Plus, pos });
                i += 1;
            }
            b'-' => {
                out.push(Token { kind: TokKind::Minus, pos });
                i += 1;
            }
            b'*' => {
                out.push(Token { kind: TokKind::Star, pos });
                i += 1;
            }
            b'/' => {
                out.push(Token { kind: TokKind::Slash, pos });
                i += 1;
            }
            b'^' => {
                out.push(Token { kind: TokKind::Caret, pos });
                i += 1;
            }
            b'(' => {
                out.push(Token { kind: TokKind::LParen, pos });
                i += 1;
            }
            b')' => {
                out.push(Token { kind: TokKind::RParen, pos });
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                let mut saw_digit = false;
                let mut saw_dot = false;
                let mut saw_exp = false;
                while i < bytes.len() {
                    let c = bytes[i];
                    if c.is_ascii_digit() {
                        saw_digit = true;
                        i += 1;
                    } else if c == b'.' && !saw_dot && !saw_exp {
                        saw_dot = true;
                        i += 1;
                    } else if (c == b'e' || c == b'E') && saw_digit && !saw_exp {
                        saw_exp = true;
                        i += 1;
                        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                            i += 1;
                        }
                    } else {
                        break;
                    }
                }
                let text = &src[start..i];
                if !saw_digit {
                    return Err(ParseError::Syntax {
                        pos: start,
                        message: format!("malformed number `{text}`"),
                    });
                }
                let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    pos: start,
                    message: format!("malformed number `{text}`"),
                })?;
                let integral = if !saw_dot && !saw_exp { text.parse::<i64>().ok() } else { None };
                out.push(Token { kind: TokKind::Num { value, integral }, pos: start });
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push(Token {
                    kind: TokKind::Ident(src[start..i].to_string()),
                    pos: start,
                });
            }
            _ => {
                return Err(ParseError::Syntax {
                    pos,
                    message: format!("unexpected character `{}`", &src[pos..pos + 1]),
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    cursor: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor)
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.cursor).cloned();
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn eat(&mut self, kind: &TokKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.cursor += 1;
            true
        } else {
            false
        }
    }

    fn here(&self) -> usize {
        self.peek().map(|t| t.pos).unwrap_or(self.end)
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&TokKind::Plus) {
                let rhs = self.term()?;
                lhs = Expression::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat(&TokKind::Minus) {
                let rhs = self.term()?;
                lhs = Expression::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(&TokKind::Star) {
                let rhs = self.factor()?;
                lhs = Expression::Mul(Box::new(lhs), Box::new(rhs));
            } else if self.eat(&TokKind::Slash) {
                let rhs = self.factor()?;
                lhs = Expression::Div(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expression, ParseError> {
        let negate = self.eat(&TokKind::Minus);
        let mut base = self.atom()?;
        if self.eat(&TokKind::Caret) {
            let sign = if self.eat(&TokKind::Minus) { -1 } else { 1 };
            let pos = self.here();
            match self.advance().map(|t| t.kind) {
                Some(TokKind::Num { integral: Some(k), .. }) => {
                    let k = i32::try_from(k)
                        .map_err(|_| ParseError::NonIntegerExponent { pos })?;
                    base = Expression::Pow(Box::new(base), sign * k);
                }
                Some(TokKind::Num { integral: None, .. }) => {
                    return Err(ParseError::NonIntegerExponent { pos });
                }
                _ => {
                    return Err(ParseError::Syntax {
                        pos,
                        message: "expected integer exponent after `^`".to_string(),
                    });
                }
            }
        }
        Ok(if negate { Expression::Neg(Box::new(base)) } else { base })
    }

    fn atom(&mut self) -> Result<Expression, ParseError> {
        let pos = self.here();
        match self.advance().map(|t| t.kind) {
            Some(TokKind::Num { value, .. }) => Ok(Expression::Const(value)),
            Some(TokKind::Ident(name)) => match name.as_str() {
                "t" => Ok(Expression::Time),
                "sin" | "cos" | "exp" => {
                    if !self.eat(&TokKind::LParen) {
                        return Err(ParseError::Syntax {
                            pos: self.here(),
                            message: format!("expected `(` after `{name}`"),
                        });
                    }
                    let arg = Box::new(self.expr()?);
                    if !self.eat(&TokKind::RParen) {
                        return Err(ParseError::Syntax {
                            pos: self.here(),
                            message: "expected `)`".to_string(),
                        });
                    }
                    Ok(match name.as_str() {
                        "sin" => Expression::Sin(arg),
                        "cos" => Expression::Cos(arg),
                        _ => Expression::Exp(arg),
                    })
                }
                _ => Err(ParseError::UnknownIdentifier { pos, name }),
            },
            Some(TokKind::LParen) => {
                let inner = self.expr()?;
                if !self.eat(&TokKind::RParen) {
                    return Err(ParseError::Syntax {
                        pos: self.here(),
                        message: "expected `)`".to_string(),
                    });
                }
                Ok(inner)
            }
            _ => Err(ParseError::Syntax {
                pos,
                message: "expected a number, `t`, a function call or `(`".to_string(),
            }),
        }
    }
}

/// Parses source text into an [`Expression`].
pub fn parse_expression(source: &str) -> Result<Expression, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, cursor: 0, end: source.len() };
    let e = parser.expr()?;
    if let Some(tok) = parser.peek() {
        return Err(ParseError::Syntax {
            pos: tok.pos,
            message: "unexpected trailing input".to_string(),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(e: Expression) -> Box<Expression> {
        Box::new(e)
    }

    #[test]
    fn parses_sinusoidal_forcing_term() {
        let e = parse_expression("2*sin(2*t)").unwrap();
        assert_eq!(
            e,
            Expression::Mul(
                b(Expression::Const(2.0)),
                b(Expression::Sin(b(Expression::Mul(
                    b(Expression::Const(2.0)),
                    b(Expression::Time)
                ))))
            )
        );
    }

    #[test]
    fn parses_zero() {
        assert_eq!(parse_expression("0").unwrap(), Expression::Const(0.0));
    }

    #[test]
    fn parses_polynomial_and_evaluates_at_one() {
        // α1(τ) = τ³ − 2τ² + τ vanishes at τ = 1.
        let e = parse_expression("t^3 - 2*t^2 + t").unwrap();
        assert_eq!(e.eval(1.0).unwrap(), 0.0);
    }

    #[test]
    fn precedence_and_associativity() {
        // power > unary minus > mul > add, left associative
        let e = parse_expression("-2^2").unwrap();
        assert_eq!(e, Expression::Neg(b(Expression::Pow(b(Expression::Const(2.0)), 2))));
        assert_eq!(e.eval(0.0).unwrap(), -4.0);

        let e = parse_expression("1 - 2 - 3").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), -4.0);

        let e = parse_expression("8/4/2").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 1.0);

        let e = parse_expression("1+2*3").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 7.0);
    }

    #[test]
    fn number_forms() {
        assert_eq!(parse_expression("1.5e-3").unwrap(), Expression::Const(1.5e-3));
        assert_eq!(parse_expression("2E4").unwrap(), Expression::Const(2e4));
        assert_eq!(parse_expression(".5").unwrap(), Expression::Const(0.5));
        assert_eq!(parse_expression("3.").unwrap(), Expression::Const(3.0));
    }

    #[test]
    fn eval_forcing_term() {
        let e = parse_expression("2*sin(2*t)").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 0.0);
        let v = e.eval(std::f64::consts::FRAC_PI_4).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn eval_exp_matches_independent_value() {
        // 1/e computed through a different path than Expression::eval.
        let independent = 1.0 / std::f64::consts::E;
        assert_eq!(independent, 0.36787944117144233);
        let e = parse_expression("exp(-t)").unwrap();
        assert_eq!(e.eval(1.0).unwrap(), 0.36787944117144233);
    }

    #[test]
    fn division_by_zero_is_reported() {
        let e = parse_expression("1/t").unwrap();
        assert_eq!(e.eval(0.0), Err(EvalError::DivisionByZero { t: 0.0 }));
        assert!(e.eval(2.0).is_ok());
    }

    #[test]
    fn overflow_to_non_finite_is_reported() {
        let e = parse_expression("exp(t)").unwrap();
        assert_eq!(e.eval(1e4), Err(EvalError::NonFinite { t: 1e4 }));
    }

    #[test]
    fn unknown_identifier() {
        match parse_expression("2*x") {
            Err(ParseError::UnknownIdentifier { name, pos }) => {
                assert_eq!(name, "x");
                assert_eq!(pos, 2);
            }
            other => panic!("expected unknown identifier, got {other:?}"),
        }
    }

    #[test]
    fn non_integer_exponent() {
        assert!(matches!(
            parse_expression("t^2.5"),
            Err(ParseError::NonIntegerExponent { .. })
        ));
        assert!(matches!(parse_expression("t^t"), Err(ParseError::Syntax { .. })));
        // negative integer exponents are fine
        let e = parse_expression("t^-2").unwrap();
        assert_eq!(e, Expression::Pow(b(Expression::Time), -2));
    }

    #[test]
    fn syntax_error_has_position() {
        match parse_expression("1 + ") {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn eval_is_pure() {
        let e = parse_expression("sin(t)*exp(-t) + t^3/7").unwrap();
        let a = e.eval(0.731).unwrap();
        let b = e.eval(0.731).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn constant_expressions_ignore_t() {
        let e = parse_expression("3*sin(2) - 1/4").unwrap();
        assert!(e.is_constant());
        let at0 = e.eval(0.0).unwrap();
        for &t in &[-5.0, 0.3, 17.0] {
            assert_eq!(e.eval(t).unwrap(), at0);
        }
        assert!(!parse_expression("3*t").unwrap().is_constant());
    }

    fn arb_expression() -> impl Strategy<Value = Expression> {
        let leaf = prop_oneof![
            Just(Expression::Time),
            prop_oneof![Just(0.0), Just(1.0), Just(0.5), 0.0..1000.0f64]
                .prop_map(Expression::Const),
        ];
        leaf.prop_recursive(4, 64, 8, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expression::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expression::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expression::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expression::Div(Box::new(a), Box::new(b))),
                inner.clone().prop_map(|a| Expression::Neg(Box::new(a))),
                (inner.clone(), -4..7i32).prop_map(|(a, k)| Expression::Pow(Box::new(a), k)),
                inner.clone().prop_map(|a| Expression::Sin(Box::new(a))),
                inner.clone().prop_map(|a| Expression::Cos(Box::new(a))),
                inner.prop_map(|a| Expression::Exp(Box::new(a))),
            ]
        })
    }

    proptest! {
        // Pretty-printing any AST with nonnegative finite constants yields
        // grammar-valid text that re-parses to a structurally identical AST.
        #[test]
        fn display_round_trips(e in arb_expression()) {
            let printed = e.to_string();
            let reparsed = parse_expression(&printed).unwrap();
            prop_assert_eq!(reparsed, e);
        }
    }

    #[test]
    fn display_round_trips_common_inputs() {
        for src in ["2*sin(2*t)", "0", "t^3 - 2*t^2 + t", "exp(-t)", "1.5e-3", "-(t+1)^2/3"] {
            let e = parse_expression(src).unwrap();
            let again = parse_expression(&e.to_string()).unwrap();
            assert_eq!(again, e, "round trip failed for `{src}` -> `{e}`");
        }
    }
}
