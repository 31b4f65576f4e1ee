//! Recursive-descent parsers for potentials in `x` and noncommutative
//! polynomials in `x1, x2, ...`.
//!
//! Potential grammar (whitespace ignored):
//!
//! ```text
//! expr   := [sign] term (sign term)*
//! term   := factor ('*' factor)*
//! factor := number | 'x' ['^' integer]
//! number := digits ['.' digits] [('e'|'E') [sign] digits] ['/' digits]
//! ```
//!
//! The noncommutative grammar replaces `'x'` by `'x' index`, and products keep
//! their order.

use freestein_algebra::ncfree::{NCPoly, Word};
use freestein_algebra::Q;
use num::{BigInt, One, Signed, ToPrimitive, Zero};
use std::fmt;
use thiserror::Error;

/// Largest total degree accepted in a single term.
pub const MAX_DEGREE: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at column {}: {message}", .pos + 1)]
    Syntax { pos: usize, message: String },
    #[error("degree {degree} at column {} exceeds the maximum {MAX_DEGREE}", .pos + 1)]
    DegreeTooLarge { pos: usize, degree: usize },
    #[error("variable x{index} at column {} is outside arity {arity}", .pos + 1)]
    IndexOutOfArity { pos: usize, index: usize, arity: usize },
}

impl ParseError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Syntax { .. } => "SyntaxError",
            Self::DegreeTooLarge { .. } => "DegreeTooLarge",
            Self::IndexOutOfArity { .. } => "IndexOutOfArity",
        }
    }

    pub fn position(&self) -> usize {
        match self {
            Self::Syntax { pos, .. } | Self::DegreeTooLarge { pos, .. } | Self::IndexOutOfArity { pos, .. } => *pos,
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src: src.as_bytes(), pos: 0 }
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

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos: self.pos, message: message.into() })
    }

    fn digits(&mut self) -> Option<&'a str> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        (self.pos > start).then(|| std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits"))
    }

    fn integer(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        let at = self.pos;
        match self.digits() {
            Some(d) => d.parse().or_else(|_| {
                self.pos = at;
                self.error("integer is too large")
            }),
            None => self.error("expected an integer"),
        }
    }

    /// Unsigned rational or decimal literal.
    fn number(&mut self) -> Result<Q, ParseError> {
        self.skip_ws();
        let int_part = self.digits();
        let mut value = Q::from_integer(int_part.map_or_else(BigInt::zero, |d| d.parse().expect("digits")));
        let mut any = int_part.is_some();
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            if let Some(frac) = self.digits() {
                let scale = BigInt::from(10u32).pow(frac.len() as u32);
                value += Q::new(frac.parse().expect("digits"), scale);
                any = true;
            }
        }
        if !any {
            return self.error("expected a number");
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            self.pos += 1;
            let negative = match self.src.get(self.pos) {
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let Some(e) = self.digits() else { return self.error("expected an exponent") };
            let e: u32 = match e.parse() {
                Ok(e) if e <= 300 => e,
                _ => return self.error("exponent is too large"),
            };
            let p = Q::from_integer(BigInt::from(10u32).pow(e));
            value = if negative { value / p } else { value * p };
        }
        if self.peek() == Some(b'/') {
            self.pos += 1;
            self.skip_ws();
            let at = self.pos;
            let Some(d) = self.digits() else { return self.error("expected a denominator") };
            let d: BigInt = d.parse().expect("digits");
            if d.is_zero() {
                self.pos = at;
                return self.error("division by zero");
            }
            value /= Q::from_integer(d);
        }
        Ok(value)
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }
}

/// Parses `[sign] term (sign term)*`, delegating factors to `factor`.
fn sum_of_products<T>(
    lx: &mut Lexer,
    mut factor: impl FnMut(&mut Lexer) -> Result<Option<T>, ParseError>,
    mut push: impl FnMut(Q, Vec<(usize, T)>) -> Result<(), ParseError>,
) -> Result<(), ParseError> {
    if lx.at_end() {
        return lx.error("empty expression");
    }
    let mut sign = Q::one();
    if lx.eat(b'-') {
        sign = -sign;
    } else {
        lx.eat(b'+');
    }
    loop {
        let mut coeff = sign.clone();
        let mut parts = Vec::new();
        loop {
            lx.skip_ws();
            let at = lx.pos;
            match lx.peek() {
                Some(c) if c.is_ascii_digit() || c == b'.' => coeff *= lx.number()?,
                Some(_) => match factor(lx)? {
                    Some(t) => parts.push((at, t)),
                    None => return lx.error("expected a number or a variable"),
                },
                None => return lx.error("expected a number or a variable"),
            }
            if !lx.eat(b'*') {
                break;
            }
        }
        push(coeff, parts)?;
        match lx.peek() {
            None => return Ok(()),
            Some(b'+') => {
                lx.pos += 1;
                sign = Q::one();
            }
            Some(b'-') => {
                lx.pos += 1;
                sign = -Q::one();
            }
            Some(_) => return lx.error("expected '+', '-' or '*'"),
        }
    }
}

fn power(lx: &mut Lexer) -> Result<usize, ParseError> {
    if lx.eat(b'^') {
        lx.integer()
    } else {
        Ok(1)
    }
}

/// Polynomial potential with exact coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PotentialExpr {
    pub source: String,
    pub coeffs: Vec<Q>,
}

pub fn parse_potential(src: &str) -> Result<PotentialExpr, ParseError> {
    let mut lx = Lexer::new(src);
    let mut coeffs: Vec<Q> = Vec::new();
    sum_of_products(
        &mut lx,
        |lx| {
            if !lx.eat(b'x') {
                return Ok(None);
            }
            power(lx).map(Some)
        },
        |c, parts| {
            let degree: usize = parts.iter().map(|(_, k)| k).sum();
            if degree > MAX_DEGREE {
                let pos = parts.last().map_or(0, |p| p.0);
                return Err(ParseError::DegreeTooLarge { pos, degree });
            }
            if coeffs.len() <= degree {
                coeffs.resize(degree + 1, Q::zero());
            }
            coeffs[degree] += c;
            Ok(())
        },
    )?;
    while coeffs.last().is_some_and(Zero::is_zero) {
        coeffs.pop();
    }
    Ok(PotentialExpr { source: src.to_string(), coeffs })
}

impl PotentialExpr {
    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// No odd-degree terms.
    pub fn is_even(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(Zero::is_zero)
    }
}

impl fmt::Display for PotentialExpr {
    /// Canonical form, increasing degree, e.g. `1/2*x^2 + 1/4*x^4`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            match (first, c.is_negative()) {
                (true, true) => write!(f, "-")?,
                (true, false) => {}
                (false, true) => write!(f, " - ")?,
                (false, false) => write!(f, " + ")?,
            }
            first = false;
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                _ if a.is_one() => {}
                _ => write!(f, "{a}*")?,
            }
            match k {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Noncommutative polynomial in `x1..x_arity`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NCExpr {
    pub source: String,
    pub poly: NCPoly,
}

pub fn parse_ncexpr(src: &str, arity: usize) -> Result<NCExpr, ParseError> {
    if arity == 0 {
        return Err(ParseError::Syntax { pos: 0, message: "arity must be at least 1".into() });
    }
    let mut lx = Lexer::new(src);
    let mut poly = NCPoly::zero(arity);
    sum_of_products(
        &mut lx,
        |lx| {
            if !lx.eat(b'x') {
                return Ok(None);
            }
            let at = lx.pos;
            let index = match lx.digits() {
                Some(d) => d.parse::<usize>().unwrap_or(usize::MAX),
                None => return lx.error("expected a variable index after 'x'"),
            };
            if index == 0 || index > arity {
                return Err(ParseError::IndexOutOfArity { pos: at, index, arity });
            }
            let k = power(lx)?;
            if k > MAX_DEGREE {
                return Err(ParseError::DegreeTooLarge { pos: at, degree: k });
            }
            Ok(Some(vec![index; k]))
        },
        |c, parts| {
            let degree: usize = parts.iter().map(|(_, w)| w.len()).sum();
            if degree > MAX_DEGREE {
                let pos = parts.last().map_or(0, |p| p.0);
                return Err(ParseError::DegreeTooLarge { pos, degree });
            }
            let word = Word(parts.into_iter().flat_map(|(_, w)| w).collect());
            let term = NCPoly::from_terms(arity, [(word, c)]).expect("indices checked while parsing");
            poly = poly.add(&term);
            Ok(())
        },
    )?;
    Ok(NCExpr { source: src.to_string(), poly })
}

/// Smallest arity covering every `x<i>` token in `src`.
pub fn infer_arity(src: &str) -> usize {
    let bytes = src.as_bytes();
    let mut best = 1;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'x' {
            let start = i + 1;
            let mut j = start;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if let Ok(k) = src[start..j].parse::<usize>() {
                best = best.max(k);
            }
            i = j;
        } else {
            i += 1;
        }
    }
    best
}

impl fmt::Display for NCExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.poly)
    }
}
