use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::Word;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Element of the free algebra `Q<X_1, ..., X_n>` in canonical form:
/// terms sorted by graded order, no stored zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NcPoly {
    n: usize,
    terms: BTreeMap<Word, Rational>,
}

impl NcPoly {
    pub fn zero(n: usize) -> Self {
        NcPoly { n, terms: BTreeMap::new() }
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, Rational::one())
    }

    pub fn constant(n: usize, c: Rational) -> Self {
        Self::monomial(n, Word::unit(), c)
    }

    /// The generator `X_{i+1}` (0-based index `i`).
    pub fn generator(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        Ok(Self::monomial(n, Word::letter(i), Rational::one()))
    }

    pub fn monomial(n: usize, w: Word, c: Rational) -> Self {
        let mut p = Self::zero(n);
        p.add_term(w, c);
        p
    }

    /// Linear form `sum_j coeffs[j] X_j`.
    pub fn linear(coeffs: &[Rational]) -> Self {
        let n = coeffs.len();
        let mut p = Self::zero(n);
        for (j, c) in coeffs.iter().enumerate() {
            p.add_term(Word::letter(j), c.clone());
        }
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Word, Rational)>>(n: usize, terms: I) -> Self {
        let mut p = Self::zero(n);
        for (w, c) in terms {
            p.add_term(w, c);
        }
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, w: &Word) -> Rational {
        self.terms.get(w).cloned().unwrap_or_else(Rational::zero)
    }

    /// Constant coefficient.
    pub fn constant_term(&self) -> Rational {
        self.coeff(&Word::unit())
    }

    /// Largest word length, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(Word::len).max()
    }

    pub fn add_term(&mut self, w: Word, c: Rational) {
        if c.is_zero() {
            return;
        }
        debug_assert!(w.max_letter().is_none_or(|m| m < self.n));
        match self.terms.entry(w) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> NcPoly {
        if c.is_zero() {
            return NcPoly::zero(self.n);
        }
        NcPoly {
            n: self.n,
            terms: self.terms.iter().map(|(w, v)| (w.clone(), v * c)).collect(),
        }
    }

    fn check_n(&self, other: &NcPoly) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GeneratorMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &NcPoly) -> Result<NcPoly> {
        self.check_n(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &NcPoly) -> Result<NcPoly> {
        self.check_n(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), -c.clone());
        }
        Ok(out)
    }

    /// Free-algebra product (concatenation, extended bilinearly).
    pub fn checked_mul(&self, other: &NcPoly) -> Result<NcPoly> {
        self.check_n(other)?;
        let mut out = NcPoly::zero(self.n);
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                out.add_term(u.concat(v), a * b);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: usize) -> NcPoly {
        let mut out = NcPoly::one(self.n);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Reverses every word; coefficients are real so conjugation is trivial.
    pub fn star(&self) -> NcPoly {
        NcPoly {
            n: self.n,
            terms: self.terms.iter().map(|(w, c)| (w.reversed(), c.clone())).collect(),
        }
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.star() == *self
    }

    /// Applies a linear functional on words, extended linearly.
    pub fn eval_linear<F: FnMut(&Word) -> Rational>(&self, mut f: F) -> Rational {
        let mut acc = Rational::zero();
        for (w, c) in &self.terms {
            let v = f(w);
            if !v.is_zero() {
                acc += c * v;
            }
        }
        acc
    }

    /// Substitutes `images[j]` for `X_j`; the result lives over `images[0].n()` generators.
    pub fn substitute(&self, images: &[NcPoly]) -> Result<NcPoly> {
        if images.len() != self.n {
            return Err(Error::GeneratorMismatch { left: self.n, right: images.len() });
        }
        let m = images.first().map_or(self.n, NcPoly::n);
        let mut out = NcPoly::zero(m);
        for (w, c) in &self.terms {
            let mut prod = NcPoly::constant(m, c.clone());
            for &b in w.letters() {
                prod = prod.checked_mul(&images[b as usize])?;
            }
            out = out.checked_add(&prod)?;
        }
        Ok(out)
    }
}

impl Add for &NcPoly {
    type Output = NcPoly;
    fn add(self, rhs: &NcPoly) -> NcPoly {
        self.checked_add(rhs).expect("generator count mismatch in +")
    }
}

impl Sub for &NcPoly {
    type Output = NcPoly;
    fn sub(self, rhs: &NcPoly) -> NcPoly {
        self.checked_sub(rhs).expect("generator count mismatch in -")
    }
}

impl Mul for &NcPoly {
    type Output = NcPoly;
    fn mul(self, rhs: &NcPoly) -> NcPoly {
        self.checked_mul(rhs).expect("generator count mismatch in *")
    }
}

impl Neg for &NcPoly {
    type Output = NcPoly;
    fn neg(self) -> NcPoly {
        self.scale(&-Rational::one())
    }
}

pub(crate) fn write_term(f: &mut fmt::Formatter<'_>, first: bool, c: &Rational, body: &str, body_is_unit: bool) -> fmt::Result {
    let neg = c < &Rational::zero();
    let mag = if neg { -c.clone() } else { c.clone() };
    if first {
        if neg {
            write!(f, "-")?;
        }
    } else if neg {
        write!(f, " - ")?;
    } else {
        write!(f, " + ")?;
    }
    if body_is_unit {
        write!(f, "{}", rational::format(&mag))
    } else if mag.is_one() {
        write!(f, "{body}")
    } else {
        write!(f, "{}*{body}", rational::format(&mag))
    }
}

impl fmt::Display for NcPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (w, c)) in self.terms.iter().enumerate() {
            write_term(f, k == 0, c, &w.to_string(), w.is_empty())?;
        }
        Ok(())
    }
}
