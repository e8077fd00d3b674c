use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::{One, Zero};

use super::poly::write_term;
use super::{NcPoly, Word};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Element of the `R`-fold algebraic tensor power of the free algebra,
/// stored as a canonical map from word tuples to coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorPoly<const R: usize> {
    n: usize,
    terms: BTreeMap<[Word; R], Rational>,
}

/// `M0 (x) M0`, the codomain of the free difference quotients.
pub type TensorPoly2 = TensorPoly<2>;
/// `M0 (x) M0 (x) M0`, the codomain of second-order quotients.
pub type TensorPoly3 = TensorPoly<3>;

impl<const R: usize> TensorPoly<R> {
    pub fn zero(n: usize) -> Self {
        TensorPoly { n, terms: BTreeMap::new() }
    }

    pub fn simple(n: usize, legs: [Word; R], c: Rational) -> Self {
        let mut t = Self::zero(n);
        t.add_term(legs, c);
        t
    }

    /// `1 (x) ... (x) 1`.
    pub fn unit(n: usize) -> Self {
        Self::simple(n, std::array::from_fn(|_| Word::unit()), Rational::one())
    }

    pub fn from_terms<I: IntoIterator<Item = ([Word; R], Rational)>>(n: usize, terms: I) -> Self {
        let mut t = Self::zero(n);
        for (legs, c) in terms {
            t.add_term(legs, c);
        }
        t
    }

    /// Tensor product of `R` polynomials.
    pub fn from_legs(legs: [&NcPoly; R]) -> Result<Self> {
        let n = legs[0].n();
        if let Some(bad) = legs.iter().find(|p| p.n() != n) {
            return Err(Error::GeneratorMismatch { left: n, right: bad.n() });
        }
        let mut acc: Vec<(Vec<Word>, Rational)> = vec![(Vec::new(), Rational::one())];
        for leg in legs {
            let mut next = Vec::with_capacity(acc.len() * leg.num_terms());
            for (ws, c) in &acc {
                for (w, d) in leg.terms() {
                    let mut v = ws.clone();
                    v.push(w.clone());
                    next.push((v, c * d));
                }
            }
            acc = next;
        }
        let mut t = Self::zero(n);
        for (ws, c) in acc {
            let legs: [Word; R] = ws.try_into().expect("leg count");
            t.add_term(legs, c);
        }
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[Word; R], &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, legs: &[Word; R]) -> Rational {
        self.terms.get(legs).cloned().unwrap_or_else(Rational::zero)
    }

    /// Largest total word length over all simple tensors.
    pub fn total_degree(&self) -> Option<usize> {
        self.terms.keys().map(|ws| ws.iter().map(Word::len).sum()).max()
    }

    pub fn leg_degree(&self, leg: usize) -> Option<usize> {
        self.terms.keys().map(|ws| ws[leg].len()).max()
    }

    pub fn add_term(&mut self, legs: [Word; R], c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(legs) {
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

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.n);
        }
        TensorPoly { n: self.n, terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect() }
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::GeneratorMismatch { left: self.n, right: n });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_n(other.n)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_n(other.n)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), -c.clone());
        }
        Ok(out)
    }

    /// `a (w_1 (x) ... (x) w_R) b = a w_1 (x) ... (x) w_R b`, the outer bimodule action.
    pub fn bimodule_act(a: &NcPoly, t: &Self, b: &NcPoly) -> Result<Self> {
        t.check_n(a.n())?;
        t.check_n(b.n())?;
        let mut out = Self::zero(t.n);
        for (legs, c) in &t.terms {
            for (u, x) in a.terms() {
                for (v, y) in b.terms() {
                    let mut new_legs = legs.clone();
                    new_legs[0] = u.concat(&new_legs[0]);
                    new_legs[R - 1] = new_legs[R - 1].concat(v);
                    out.add_term(new_legs, c * x * y);
                }
            }
        }
        Ok(out)
    }

    /// Applies `f` to one leg, turning each simple tensor into a linear
    /// combination of simple tensors of rank `S`.
    pub fn map_terms<const S: usize, F>(&self, mut f: F) -> TensorPoly<S>
    where
        F: FnMut(&[Word; R]) -> Vec<([Word; S], Rational)>,
    {
        let mut out = TensorPoly::<S>::zero(self.n);
        for (legs, c) in &self.terms {
            for (new_legs, d) in f(legs) {
                out.add_term(new_legs, c * d);
            }
        }
        out
    }

    /// Legwise star `a (x) b -> a* (x) b*`, the involution of `M (x) M^op`.
    pub fn star_legs(&self) -> Self {
        TensorPoly {
            n: self.n,
            terms: self.terms.iter().map(|(ws, c)| (ws.clone().map(|w| w.reversed()), c.clone())).collect(),
        }
    }
}

impl TensorPoly2 {
    /// Hilbert-Schmidt real structure `(a (x) b)^dagger = b* (x) a*`.
    pub fn dagger(&self) -> Self {
        TensorPoly {
            n: self.n,
            terms: self.terms.iter().map(|([a, b], c)| ([b.reversed(), a.reversed()], c.clone())).collect(),
        }
    }

    /// Flip `a (x) b -> b (x) a`.
    pub fn flip(&self) -> Self {
        TensorPoly {
            n: self.n,
            terms: self.terms.iter().map(|([a, b], c)| ([b.clone(), a.clone()], c.clone())).collect(),
        }
    }

    /// Right-leg multiplication `(a (x) b) # (x (x) y) = ax (x) yb`, which is
    /// also the product of `M (x) M^op`.
    pub fn sharp(&self, other: &Self) -> Result<Self> {
        self.check_n(other.n)?;
        let mut out = Self::zero(self.n);
        for ([a, b], c) in &self.terms {
            for ([x, y], d) in &other.terms {
                out.add_term([a.concat(x), y.concat(b)], c * d);
            }
        }
        Ok(out)
    }

    /// `(a (x) b) # (d (x) e (x) f) = ad (x) e (x) bf`.
    pub fn sharp3(&self, other: &TensorPoly3) -> Result<TensorPoly3> {
        self.check_n(other.n)?;
        let mut out = TensorPoly3::zero(self.n);
        for ([a, b], c) in &self.terms {
            for ([d, e, f], k) in &other.terms {
                out.add_term([a.concat(d), e.clone(), b.concat(f)], c * k);
            }
        }
        Ok(out)
    }

    /// Multiplication map `a (x) b -> ab`.
    pub fn multiply_legs(&self) -> NcPoly {
        NcPoly::from_terms(self.n, self.terms.iter().map(|([a, b], c)| (a.concat(b), c.clone())))
    }
}

pub fn bimodule_act(a: &NcPoly, u: &TensorPoly2, b: &NcPoly) -> Result<TensorPoly2> {
    TensorPoly2::bimodule_act(a, u, b)
}

pub fn sharp2(u: &TensorPoly2, v: &TensorPoly2) -> Result<TensorPoly2> {
    u.sharp(v)
}

pub fn sharp23(u: &TensorPoly2, c: &TensorPoly3) -> Result<TensorPoly3> {
    u.sharp3(c)
}

impl<const R: usize> Add for &TensorPoly<R> {
    type Output = TensorPoly<R>;
    fn add(self, rhs: &TensorPoly<R>) -> TensorPoly<R> {
        self.checked_add(rhs).expect("generator count mismatch in +")
    }
}

impl<const R: usize> Sub for &TensorPoly<R> {
    type Output = TensorPoly<R>;
    fn sub(self, rhs: &TensorPoly<R>) -> TensorPoly<R> {
        self.checked_sub(rhs).expect("generator count mismatch in -")
    }
}

impl<const R: usize> Neg for &TensorPoly<R> {
    type Output = TensorPoly<R>;
    fn neg(self) -> TensorPoly<R> {
        self.scale(&-Rational::one())
    }
}

impl<const R: usize> fmt::Display for TensorPoly<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (legs, c)) in self.terms.iter().enumerate() {
            let body = legs.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" (x) ");
            let body = if R > 1 && !c.is_one() && !(-c.clone()).is_one() { format!("({body})") } else { body };
            write_term(f, k == 0, c, &body, false)?;
        }
        Ok(())
    }
}
