//! Text syntax: generators `X1..Xn`, `*` or juxtaposition for products,
//! `+`/`-`, rational literals `p/q`, `^k` powers, parentheses, and
//! ` (x) ` separating tensor legs.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{NcPoly, TensorPoly2, TensorPoly3};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
    pub input: String,
}

impl ParseError {
    fn new(position: usize, message: impl Into<String>, input: &str) -> Self {
        ParseError { position, message: message.into(), input: input.to_string() }
    }

    /// Two-line diagnostic with a caret under the offending column.
    pub fn caret(&self) -> String {
        let col = self.input[..self.position.min(self.input.len())].chars().count();
        format!("{}\n{}^", self.input, " ".repeat(col))
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at column {}: {}\n{}", self.position + 1, self.message, self.caret())
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Gen(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Tensor,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => k += 1,
            b'0'..=b'9' => {
                let start = k;
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                let v: BigInt = src[start..k].parse().expect("digits");
                out.push((start, Tok::Int(v)));
            }
            b'X' => {
                let start = k;
                k += 1;
                let ds = k;
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                if ds == k {
                    return Err(ParseError::new(start, "expected generator index after 'X'", src));
                }
                let idx: usize = src[ds..k]
                    .parse()
                    .map_err(|_| ParseError::new(ds, "generator index too large", src))?;
                if idx == 0 || idx > 255 {
                    return Err(ParseError::new(ds, "generator index must be in 1..=255", src));
                }
                out.push((start, Tok::Gen(idx - 1)));
            }
            b'(' => {
                if src[k..].starts_with("(x)") {
                    out.push((k, Tok::Tensor));
                    k += 3;
                } else {
                    out.push((k, Tok::LParen));
                    k += 1;
                }
            }
            b')' => {
                out.push((k, Tok::RParen));
                k += 1;
            }
            b'+' => {
                out.push((k, Tok::Plus));
                k += 1;
            }
            b'-' => {
                out.push((k, Tok::Minus));
                k += 1;
            }
            b'*' => {
                out.push((k, Tok::Star));
                k += 1;
            }
            b'/' => {
                out.push((k, Tok::Slash));
                k += 1;
            }
            b'^' => {
                out.push((k, Tok::Caret));
                k += 1;
            }
            _ => {
                let ch = src[k..].chars().next().unwrap_or('?');
                return Err(ParseError::new(k, format!("unexpected character '{ch}'"), src));
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: &'a [(usize, Tok)],
    pos: usize,
    n: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.src.len(), |(o, _)| *o)
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.offset(), msg, self.src)
    }

    fn expr(&mut self) -> Result<NcPoly, ParseError> {
        let mut acc = NcPoly::zero(self.n);
        let mut sign = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                -Rational::one()
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                Rational::one()
            }
            _ => Rational::one(),
        };
        loop {
            let t = self.term()?;
            acc = &acc + &t.scale(&sign);
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    sign = Rational::one();
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    sign = -Rational::one();
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<NcPoly, ParseError> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let f = self.power()?;
                    acc = &acc * &f;
                }
                Some(Tok::Int(_)) | Some(Tok::Gen(_)) | Some(Tok::LParen) => {
                    let f = self.power()?;
                    acc = &acc * &f;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<NcPoly, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            match self.peek().cloned() {
                Some(Tok::Int(k)) => {
                    let k: usize = k.try_into().map_err(|_| self.err("exponent too large"))?;
                    if k > 64 {
                        return Err(self.err("exponent too large"));
                    }
                    self.pos += 1;
                    return Ok(base.pow(k));
                }
                _ => return Err(self.err("expected integer exponent after '^'")),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<NcPoly, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                let mut q = Rational::from_integer(v);
                if let Some(Tok::Slash) = self.peek() {
                    self.pos += 1;
                    match self.peek().cloned() {
                        Some(Tok::Int(d)) if !d.is_zero() => {
                            self.pos += 1;
                            q /= Rational::from_integer(d);
                        }
                        Some(Tok::Int(_)) => return Err(self.err("division by zero")),
                        _ => return Err(self.err("expected integer denominator after '/'")),
                    }
                }
                Ok(NcPoly::constant(self.n, q))
            }
            Some(Tok::Gen(i)) => {
                if i >= self.n {
                    return Err(self.err(format!("generator X{} exceeds n = {}", i + 1, self.n)));
                }
                self.pos += 1;
                Ok(NcPoly::generator(self.n, i).expect("checked range"))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(e)
                    }
                    _ => Err(self.err("expected ')'")),
                }
            }
            Some(Tok::Tensor) => Err(self.err("unexpected tensor separator '(x)'")),
            Some(_) => Err(self.err("expected a number, generator, or '('")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

fn infer_n(toks: &[(usize, Tok)]) -> usize {
    toks.iter()
        .filter_map(|(_, t)| if let Tok::Gen(i) = t { Some(i + 1) } else { None })
        .max()
        .unwrap_or(1)
}

fn split_legs(src: &str, toks: &[(usize, Tok)], n: usize) -> Result<Vec<NcPoly>, ParseError> {
    if toks.is_empty() {
        let o = if src.trim().is_empty() { 0 } else { src.len() };
        return Err(ParseError::new(o, "empty input", src));
    }
    let mut legs = Vec::new();
    let mut start = 0;
    let mut depth = 0i32;
    for k in 0..=toks.len() {
        let boundary = match toks.get(k) {
            None => true,
            Some((_, Tok::LParen)) => {
                depth += 1;
                false
            }
            Some((_, Tok::RParen)) => {
                depth -= 1;
                false
            }
            Some((_, Tok::Tensor)) => depth == 0,
            _ => false,
        };
        if boundary {
            let slice = &toks[start..k];
            if slice.is_empty() {
                let off = toks.get(k).map_or(src.len(), |(o, _)| *o);
                return Err(ParseError::new(off, "empty tensor leg", src));
            }
            let mut p = Parser { src, toks: slice, pos: 0, n };
            let leg = p.expr()?;
            if p.pos != slice.len() {
                return Err(p.err("unexpected token"));
            }
            legs.push(leg);
            start = k + 1;
        }
    }
    Ok(legs)
}

fn parse_legs(src: &str, n: Option<usize>, expected: usize) -> Result<Vec<NcPoly>, ParseError> {
    let toks = lex(src)?;
    let n = n.unwrap_or_else(|| infer_n(&toks));
    let legs = split_legs(src, &toks, n)?;
    if legs.len() != expected {
        return Err(ParseError::new(0, format!("expected {} tensor leg(s), found {}", expected, legs.len()), src));
    }
    Ok(legs)
}

/// Parses a polynomial over `n` generators (inferred from the largest index if `None`).
pub fn parse_poly(src: &str, n: Option<usize>) -> Result<NcPoly, ParseError> {
    Ok(parse_legs(src, n, 1)?.remove(0))
}

/// Parses `a (x) b`; each leg may itself be a sum, expanded bilinearly.
pub fn parse_tensor2(src: &str, n: Option<usize>) -> Result<TensorPoly2, ParseError> {
    let legs = parse_legs(src, n, 2)?;
    Ok(TensorPoly2::from_legs([&legs[0], &legs[1]]).expect("same n"))
}

/// Parses a sum of simple rank-2 tensors such as `X1 (x) X2 + 2*(1 (x) X1)`.
///
/// Top-level `+`/`-` between tensors are handled by splitting on a trailing
/// leg boundary, so `a (x) b + c (x) d` reads as two simple tensors.
pub fn parse_tensor2_sum(src: &str, n: Option<usize>) -> Result<TensorPoly2, ParseError> {
    parse_tensor_sum::<2>(src, n)
}

pub fn parse_tensor3(src: &str, n: Option<usize>) -> Result<TensorPoly3, ParseError> {
    let legs = parse_legs(src, n, 3)?;
    Ok(TensorPoly3::from_legs([&legs[0], &legs[1], &legs[2]]).expect("same n"))
}

fn parse_tensor_sum<const R: usize>(src: &str, n: Option<usize>) -> Result<super::TensorPoly<R>, ParseError> {
    let toks = lex(src)?;
    let n = n.unwrap_or_else(|| infer_n(&toks));
    // Summands are separated by top-level +/- once R-1 leg separators have
    // been seen (or, for a parenthesised summand, after its closing paren).
    let mut pieces: Vec<(Rational, usize, usize)> = Vec::new();
    let mut sign = Rational::one();
    let mut k = 0;
    if let Some((_, Tok::Minus)) = toks.first() {
        sign = -Rational::one();
        k = 1;
    }
    let mut start = k;
    let mut depth = 0i32;
    let mut seps = 0;
    let mut nested = false;
    while k < toks.len() {
        match &toks[k].1 {
            Tok::LParen => depth += 1,
            Tok::RParen => depth -= 1,
            Tok::Tensor if depth == 0 => seps += 1,
            Tok::Tensor => nested = true,
            Tok::Plus | Tok::Minus if depth == 0 && (seps == R - 1 || (seps == 0 && nested)) => {
                pieces.push((sign.clone(), start, k));
                sign = if toks[k].1 == Tok::Minus { -Rational::one() } else { Rational::one() };
                start = k + 1;
                seps = 0;
                nested = false;
            }
            _ => {}
        }
        k += 1;
    }
    pieces.push((sign, start, toks.len()));

    let mut out = super::TensorPoly::<R>::zero(n);
    for (sign, a, b) in pieces {
        let t = parse_summand::<R>(src, &toks[a..b], n)?;
        out = &out + &t.scale(&sign);
    }
    Ok(out)
}

// `coef * ( simple )`, `( simple )`, or a bare simple tensor.
fn parse_summand<const R: usize>(src: &str, toks: &[(usize, Tok)], n: usize) -> Result<super::TensorPoly<R>, ParseError> {
    let off = |k: usize| toks.get(k).map_or(src.len(), |(o, _)| *o);
    if toks.is_empty() {
        return Err(ParseError::new(off(0), "empty tensor summand", src));
    }
    if let Some(open) = toks.iter().position(|(_, t)| *t == Tok::LParen) {
        let wrapped = toks.last().map(|(_, t)| t) == Some(&Tok::RParen)
            && matching_paren(toks, open) == Some(toks.len() - 1)
            && toks[open + 1..toks.len() - 1].iter().any(|(_, t)| *t == Tok::Tensor);
        if wrapped {
            let coef = if open == 0 {
                Rational::one()
            } else {
                let prefix = &toks[..open];
                let prefix = match prefix.last() {
                    Some((_, Tok::Star)) => &prefix[..prefix.len() - 1],
                    _ => prefix,
                };
                let mut p = Parser { src, toks: prefix, pos: 0, n };
                let c = p.expr()?;
                if p.pos != prefix.len() || c.degree().unwrap_or(0) > 0 {
                    return Err(ParseError::new(off(0), "tensor coefficient must be a rational constant", src));
                }
                c.constant_term()
            };
            let inner = parse_simple::<R>(src, &toks[open + 1..toks.len() - 1], n)?;
            return Ok(inner.scale(&coef));
        }
    }
    parse_simple::<R>(src, toks, n)
}

fn matching_paren(toks: &[(usize, Tok)], open: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (k, (_, t)) in toks.iter().enumerate().skip(open) {
        match t {
            Tok::LParen => depth += 1,
            Tok::RParen => {
                depth -= 1;
                if depth == 0 {
                    return Some(k);
                }
            }
            _ => {}
        }
    }
    None
}

fn parse_simple<const R: usize>(src: &str, toks: &[(usize, Tok)], n: usize) -> Result<super::TensorPoly<R>, ParseError> {
    let legs = split_legs(src, toks, n)?;
    if legs.len() != R {
        let o = toks.first().map_or(src.len(), |(o, _)| *o);
        return Err(ParseError::new(o, format!("expected {} tensor leg(s), found {}", R, legs.len()), src));
    }
    let refs: [&NcPoly; R] = std::array::from_fn(|i| &legs[i]);
    Ok(super::TensorPoly::<R>::from_legs(refs).expect("same n"))
}

impl FromStr for NcPoly {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_poly(s, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::Word;
    use crate::rational::{frac, int};

    #[test]
    fn parses_products_and_sums() {
        let p = parse_poly("X1 X2 - 2*X2^2 + 1/2", Some(2)).unwrap();
        let expected = NcPoly::from_terms(
            2,
            [
                (Word::from_letters([0, 1]), int(1)),
                (Word::from_letters([1, 1]), int(-2)),
                (Word::unit(), frac(1, 2)),
            ],
        );
        assert_eq!(p, expected);
        let q = parse_poly("(X1+X2)*(X1-X2)", None).unwrap();
        assert_eq!(q.n(), 2);
        assert_eq!(q.num_terms(), 4);
        assert_eq!(parse_poly("-X1", None).unwrap(), NcPoly::generator(1, 0).unwrap().scale(&int(-1)));
    }

    #[test]
    fn display_round_trip() {
        let p = parse_poly("3 - 1/2*X2*X1 + X1^3 - X2", Some(3)).unwrap();
        let printed = p.to_string();
        assert_eq!(parse_poly(&printed, Some(3)).unwrap(), p);
    }

    #[test]
    fn tensors() {
        let t = parse_tensor2("X1 (x) X2", None).unwrap();
        assert_eq!(t, TensorPoly2::simple(2, [Word::letter(0), Word::letter(1)], int(1)));
        let t3 = parse_tensor3("1 (x) X3 (x) 1", None).unwrap();
        assert_eq!(t3.total_degree(), Some(1));
        let s = parse_tensor2_sum("X1 (x) X2 - 2*X2 (x) 1 + (1 (x) X1)", Some(2)).unwrap();
        assert_eq!(s.num_terms(), 3);
        assert_eq!(s.coeff(&[Word::letter(1), Word::unit()]), int(-2));
        assert_eq!(parse_tensor2_sum(&s.to_string(), Some(2)).unwrap(), s);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_poly("X1 + * X2", None).unwrap_err();
        assert_eq!(e.position, 5);
        assert!(e.caret().ends_with("     ^"));
        let e = parse_poly("X1 + X3", Some(2)).unwrap_err();
        assert_eq!(e.position, 5);
        let e = parse_poly("X1 + Y", None).unwrap_err();
        assert_eq!(e.position, 5);
        assert!(parse_poly("(X1", None).is_err());
        assert!(parse_poly("1/0", None).is_err());
        assert!(parse_poly("", None).is_err());
        assert!(parse_tensor2("X1", None).is_err());
    }
}
