//! The expression and form grammar.
//!
//! Scalars: integers, rationals via `/`, the operators `+ - * ^` with `^` an
//! integer power, `sin(...)`, `cos(...)`, `exp(...)`, base variables by
//! name, and jet variables as `fiber_subscript`, e.g. `u_xx` or `u_tx`
//! (subscripts are a symmetric multiset, so `u_tx` and `u_xt` agree).
//!
//! Forms extend the grammar with the atoms `dx`, `dt`, ... (a `d` prefix on
//! a base name), `th(u)`, `th(u;xx)` for contact generators and `dy(u)`,
//! `dy(u;xx)` for coordinate-basis generators; between form atoms `^`
//! denotes the wedge product, and `*` scales a form by a scalar. `dy`
//! atoms are rewritten into the contact basis on the spot.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::bundle::{BundleSpec, JetVar, MultiIndex};
use crate::expr::{Expr, UnaryFn};
use crate::forms::{DyForm, DyGenerator, Form, Generator};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("parse error at offset {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        offset,
        message: message.into(),
    })
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Semi,
}

struct Lexer {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

fn lex(input: &str) -> Result<Lexer, ParseError> {
    let bytes = input.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                tokens.push((i, Token::Plus));
                i += 1;
            }
            '-' => {
                tokens.push((i, Token::Minus));
                i += 1;
            }
            '*' => {
                tokens.push((i, Token::Star));
                i += 1;
            }
            '/' => {
                tokens.push((i, Token::Slash));
                i += 1;
            }
            '^' => {
                tokens.push((i, Token::Caret));
                i += 1;
            }
            '(' => {
                tokens.push((i, Token::LParen));
                i += 1;
            }
            ')' => {
                tokens.push((i, Token::RParen));
                i += 1;
            }
            ';' => {
                tokens.push((i, Token::Semi));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let value: BigInt = input[start..i].parse().expect("digits parse");
                tokens.push((start, Token::Int(value)));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push((start, Token::Ident(input[start..i].to_string())));
            }
            other => return err(i, format!("unexpected character `{other}`")),
        }
    }
    Ok(Lexer {
        tokens,
        pos: 0,
        end: input.len(),
    })
}

impl Lexer {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(o, _)| *o)
            .unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<(usize, Token)> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<usize, ParseError> {
        let offset = self.offset();
        match self.next() {
            Some((o, t)) if t == token => Ok(o),
            _ => err(offset, format!("expected {what}")),
        }
    }
}

/// A parsed value: scalar or form. Scalars coerce to `(0,0)`-forms where a
/// form is required.
#[derive(Clone, Debug)]
pub enum Value {
    Scalar(Expr),
    Form(Form),
}

impl Value {
    fn into_form(self) -> Form {
        match self {
            Value::Scalar(e) => Form::scalar(e),
            Value::Form(f) => f,
        }
    }
}

struct Parser<'a> {
    bundle: &'a BundleSpec,
    lexer: Lexer,
}

impl<'a> Parser<'a> {
    // expression := term (('+' | '-') term)*
    fn expression(&mut self) -> Result<Value, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.lexer.peek() {
                Some(Token::Plus) => {
                    self.lexer.next();
                    let rhs = self.term()?;
                    acc = self.add(acc, rhs, false)?;
                }
                Some(Token::Minus) => {
                    self.lexer.next();
                    let rhs = self.term()?;
                    acc = self.add(acc, rhs, true)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    // scalars are (0,0)-forms, so mixed sums coerce to forms
    fn add(&mut self, lhs: Value, rhs: Value, negate: bool) -> Result<Value, ParseError> {
        Ok(match (lhs, rhs) {
            (Value::Scalar(a), Value::Scalar(b)) => {
                Value::Scalar(if negate { &a - &b } else { &a + &b })
            }
            (a, b) => {
                let fa = a.into_form();
                let fb = b.into_form();
                Value::Form(if negate { &fa - &fb } else { &fa + &fb })
            }
        })
    }

    // term := factor (('*' | '/') factor)*
    fn term(&mut self) -> Result<Value, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.lexer.peek() {
                Some(Token::Star) => {
                    self.lexer.next();
                    let offset = self.lexer.offset();
                    let rhs = self.factor()?;
                    acc = match (acc, rhs) {
                        (Value::Scalar(a), Value::Scalar(b)) => Value::Scalar(&a * &b),
                        (Value::Scalar(a), Value::Form(f)) | (Value::Form(f), Value::Scalar(a)) => {
                            Value::Form(f.scalar_mul(&a))
                        }
                        (Value::Form(_), Value::Form(_)) => {
                            return err(offset, "use `^` to wedge two forms")
                        }
                    };
                }
                Some(Token::Slash) => {
                    self.lexer.next();
                    let offset = self.lexer.offset();
                    let rhs = self.factor()?;
                    let divisor = match rhs {
                        Value::Scalar(e) => e.as_constant().filter(|c| !c.is_zero()),
                        Value::Form(_) => None,
                    };
                    let Some(c) = divisor else {
                        return err(offset, "division requires a nonzero constant divisor");
                    };
                    let inv = BigRational::new(c.denom().clone(), c.numer().clone());
                    acc = match acc {
                        Value::Scalar(a) => Value::Scalar(a.scale(&inv)),
                        Value::Form(f) => Value::Form(f.scale(&inv)),
                    };
                }
                _ => return Ok(acc),
            }
        }
    }

    // factor := '-' factor | power
    fn factor(&mut self) -> Result<Value, ParseError> {
        if matches!(self.lexer.peek(), Some(Token::Minus)) {
            self.lexer.next();
            let inner = self.factor()?;
            return Ok(match inner {
                Value::Scalar(e) => Value::Scalar(-&e),
                Value::Form(f) => Value::Form(-&f),
            });
        }
        self.power()
    }

    // power := atom ('^' (integer | atom-for-wedge))*
    // On scalars `^` is an integer power; between forms it is the wedge.
    fn power(&mut self) -> Result<Value, ParseError> {
        let mut acc = self.atom()?;
        while matches!(self.lexer.peek(), Some(Token::Caret)) {
            self.lexer.next();
            let offset = self.lexer.offset();
            match acc {
                Value::Scalar(base) => {
                    // exponent: optionally signed integer literal
                    let negative = if matches!(self.lexer.peek(), Some(Token::Minus)) {
                        self.lexer.next();
                        true
                    } else {
                        false
                    };
                    let Some((_, Token::Int(k))) = self.lexer.next() else {
                        return err(offset, "expected an integer exponent");
                    };
                    let mut exp = k
                        .to_i64()
                        .ok_or_else(|| ParseError {
                            offset,
                            message: "exponent too large".into(),
                        })?;
                    if negative {
                        exp = -exp;
                    }
                    if exp < 0 && base.as_constant().filter(|c| !c.is_zero()).is_none() {
                        return err(offset, "negative power of a non-constant expression");
                    }
                    acc = Value::Scalar(base.pow(exp));
                }
                Value::Form(f) => {
                    let rhs = self.atom()?;
                    let Value::Form(g) = rhs else {
                        return err(offset, "wedge needs a form on both sides");
                    };
                    acc = Value::Form(f.wedge(&g).map_err(|e| ParseError {
                        offset,
                        message: e.to_string(),
                    })?);
                }
            }
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<Value, ParseError> {
        let offset = self.lexer.offset();
        match self.lexer.next() {
            Some((_, Token::Int(k))) => Ok(Value::Scalar(Expr::constant(
                self.bundle,
                BigRational::from_integer(k),
            ))),
            Some((_, Token::LParen)) => {
                let inner = self.expression()?;
                self.lexer.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Some((o, Token::Ident(name))) => self.resolve_ident(o, &name),
            Some((o, t)) => err(o, format!("unexpected token {t:?}")),
            None => err(offset, "unexpected end of input"),
        }
    }

    fn resolve_ident(&mut self, offset: usize, name: &str) -> Result<Value, ParseError> {
        // function-style atoms first: sin/cos/exp, th(...), dy(...)
        if matches!(self.lexer.peek(), Some(Token::LParen)) {
            if let Some(f) = UnaryFn::from_name(name) {
                self.lexer.next();
                let arg = self.expression()?;
                let close = self.lexer.expect(Token::RParen, "`)`")?;
                let Value::Scalar(e) = arg else {
                    return err(close, format!("{name}(...) needs a scalar argument"));
                };
                return Ok(Value::Scalar(Expr::apply(f, &e)));
            }
            if name == "th" || name == "dy" {
                self.lexer.next();
                let (fiber, index) = self.contact_arguments(offset)?;
                let v = JetVar::new(fiber, index);
                let form = if name == "th" {
                    Form::generator(self.bundle, Generator::Theta(v))
                } else {
                    DyForm::generator(self.bundle, DyGenerator::Dy(v)).to_contact()
                };
                return Ok(Value::Form(form));
            }
        }
        // plain variables
        if let Some(lambda) = self.bundle.base_index(name) {
            return Ok(Value::Scalar(Expr::base_var(self.bundle, lambda)));
        }
        if let Some(i) = self.bundle.fiber_index(name) {
            return Ok(Value::Scalar(Expr::fiber_var(self.bundle, i)));
        }
        // jet variable: fiber name, underscore, subscript of base names
        if let Some(underscore) = name.find('_') {
            let (head, tail) = name.split_at(underscore);
            let subscript = &tail[1..];
            if let Some(i) = self.bundle.fiber_index(head) {
                let index = self.parse_subscript(offset, subscript)?;
                return Ok(Value::Scalar(Expr::jet_var(
                    self.bundle,
                    JetVar::new(i, index),
                )));
            }
        }
        // horizontal generator: `d` + base name
        if let Some(base_name) = name.strip_prefix('d') {
            if let Some(lambda) = self.bundle.base_index(base_name) {
                return Ok(Value::Form(Form::generator(
                    self.bundle,
                    Generator::Dx(lambda),
                )));
            }
        }
        err(offset, format!("unknown variable `{name}`"))
    }

    /// `(fiber)` or `(fiber; subscript)` after `th` / `dy`.
    fn contact_arguments(&mut self, offset: usize) -> Result<(usize, MultiIndex), ParseError> {
        let fiber_offset = self.lexer.offset();
        let Some((_, Token::Ident(fiber_name))) = self.lexer.next() else {
            return err(fiber_offset, "expected a fibre coordinate name");
        };
        let Some(fiber) = self.bundle.fiber_index(&fiber_name) else {
            return err(fiber_offset, format!("unknown variable `{fiber_name}`"));
        };
        let index = match self.lexer.peek() {
            Some(Token::Semi) => {
                self.lexer.next();
                let sub_offset = self.lexer.offset();
                let Some((_, Token::Ident(sub))) = self.lexer.next() else {
                    return err(sub_offset, "expected a subscript of base names");
                };
                self.parse_subscript(sub_offset, &sub)?
            }
            _ => MultiIndex::empty(self.bundle.base_dim()),
        };
        self.lexer.expect(Token::RParen, "`)`")?;
        let _ = offset;
        Ok((fiber, index))
    }

    /// Greedy longest-match decomposition of a subscript into base names.
    fn parse_subscript(&mut self, offset: usize, subscript: &str) -> Result<MultiIndex, ParseError> {
        let mut index = MultiIndex::empty(self.bundle.base_dim());
        let mut rest = subscript;
        'outer: while !rest.is_empty() {
            let mut candidates: Vec<usize> = (0..self.bundle.base_dim()).collect();
            candidates.sort_by_key(|l| std::cmp::Reverse(self.bundle.base_name(*l).len()));
            for lambda in candidates {
                let name = self.bundle.base_name(lambda);
                if let Some(stripped) = rest.strip_prefix(name) {
                    index = index.add(lambda).expect("index in range");
                    rest = stripped;
                    continue 'outer;
                }
            }
            return err(
                offset,
                format!("subscript `{subscript}` is not a product of base names"),
            );
        }
        Ok(index)
    }
}

fn parse_value(bundle: &BundleSpec, input: &str) -> Result<Value, ParseError> {
    let lexer = lex(input)?;
    let mut parser = Parser { bundle, lexer };
    let value = parser.expression()?;
    if parser.lexer.peek().is_some() {
        return err(parser.lexer.offset(), "trailing input");
    }
    Ok(value)
}

/// Parses a scalar expression.
pub fn parse_expr(bundle: &BundleSpec, input: &str) -> Result<Expr, ParseError> {
    match parse_value(bundle, input)? {
        Value::Scalar(e) => Ok(e),
        Value::Form(_) => err(0, "expected a scalar expression, found a form"),
    }
}

/// Parses a form; scalars are accepted as `(0,0)`-forms and `dy` atoms are
/// converted to the contact basis.
pub fn parse_form(bundle: &BundleSpec, input: &str) -> Result<Form, ParseError> {
    Ok(parse_value(bundle, input)?.into_form())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn b1() -> BundleSpec {
        BundleSpec::new(["x"], ["u"]).unwrap()
    }

    fn b2() -> BundleSpec {
        BundleSpec::new(["t", "x"], ["u", "v"]).unwrap()
    }

    #[test]
    fn parses_rationals_and_powers() {
        let b = b1();
        let e = parse_expr(&b, "1/2*u_x^2").unwrap();
        let u_x = Expr::jet_var(&b, JetVar::new(0, MultiIndex::from_positions(1, &[0]).unwrap()));
        assert_eq!(e, (&u_x * &u_x).scale(&crate::expr::rat(1, 2)));
        assert_eq!(parse_expr(&b, "2^-1").unwrap(), Expr::rational(&b, 1, 2));
        assert_eq!(e.to_string(), "1/2*u_x^2");
        assert_eq!(parse_expr(&b, &e.to_string()).unwrap(), e);
    }

    #[test]
    fn subscripts_are_symmetric() {
        let b = b2();
        assert_eq!(parse_expr(&b, "u_tx").unwrap(), parse_expr(&b, "u_xt").unwrap());
        assert_eq!(parse_expr(&b, "u_tx").unwrap().to_string(), "u_tx");
    }

    #[test]
    fn functions_and_nesting() {
        let b = b1();
        let e = parse_expr(&b, "sin(u) * cos(x) + exp(u_x)").unwrap();
        assert!(e.has_transcendental());
        assert_eq!(parse_expr(&b, &e.to_string()).unwrap(), e);
    }

    #[test]
    fn unknown_variables_are_reported() {
        let b = b1();
        let e = parse_expr(&b, "1/2*v_x^2").unwrap_err();
        assert!(e.message.contains("unknown variable `v_x`"), "{e}");
        let e2 = parse_expr(&b, "u + $").unwrap_err();
        assert_eq!(e2.offset, 4);
    }

    #[test]
    fn parses_forms_and_wedges() {
        let b = b2();
        let f = parse_form(&b, "th(u;x)^dx + u*dt^dx").unwrap();
        assert_eq!(f.bidegrees().len(), 2);
        // wedge with a repeated generator dies
        assert!(parse_form(&b, "dx^dx").unwrap().is_zero());
        // dy expands into the contact basis
        let dy = parse_form(&b, "dy(u)").unwrap();
        let expected = parse_form(&b, "th(u) + u_t*dt + u_x*dx").unwrap();
        assert_eq!(dy, expected);
    }

    #[test]
    fn division_needs_constants() {
        let b = b1();
        assert!(parse_expr(&b, "u/2").is_ok());
        let e = parse_expr(&b, "2/u").unwrap_err();
        assert!(e.message.contains("constant divisor"));
    }

    #[test]
    fn scalar_form_mix_rules() {
        let b = b1();
        // scalars coerce to (0,0)-forms inside mixed sums
        let mixed = parse_form(&b, "u + dx").unwrap();
        assert_eq!(mixed.bidegrees().len(), 2);
        assert!(parse_form(&b, "0 + dx").is_ok());
        assert!(parse_expr(&b, "u + dx").is_err());
        let err = parse_form(&b, "dx*dx").unwrap_err();
        assert!(err.message.contains("wedge"));
    }

    #[test]
    fn display_round_trip_random() {
        let bundles = [b1(), b2()];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        for _ in 0..40 {
            use rand::Rng;
            let b = &bundles[rng.gen_range(0..bundles.len())];
            let e = crate::random::random_poly_expr(&mut rng, b, 3, 3, 4);
            assert_eq!(parse_expr(b, &e.to_string()).unwrap(), e);
            let k = rng.gen_range(0..=2usize);
            let s = rng.gen_range(0..=b.base_dim());
            let f = crate::random::random_form(&mut rng, b, k, s, 2, 2, 3);
            assert_eq!(parse_form(b, &f.to_string()).unwrap(), f, "round trip of {f}");
        }
    }
}
