//! Free difference quotients, cyclic gradients and second-order quotients on
//! the free algebra. Everything here is pure and exact.

use num_traits::One;

use crate::error::{Error, Result};
use crate::ncpoly::{NcPoly, TensorPoly2, TensorPoly3, Word};
use crate::rational::Rational;

fn check_index(i: usize, n: usize) -> Result<()> {
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    Ok(())
}

fn word_fdq(i: usize, w: &Word) -> impl Iterator<Item = ([Word; 2], Rational)> + '_ {
    w.splits_at(i).map(|(u, v)| ([u, v], Rational::one()))
}

/// `d_i p`: each occurrence `w = u X_i v` contributes `u (x) v`.
pub fn fdq(i: usize, p: &NcPoly) -> Result<TensorPoly2> {
    check_index(i, p.n())?;
    let mut out = TensorPoly2::zero(p.n());
    for (w, c) in p.terms() {
        for (legs, _) in word_fdq(i, w) {
            out.add_term(legs, c.clone());
        }
    }
    Ok(out)
}

/// The vector `(d_1 p, ..., d_n p)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gradient {
    components: Vec<TensorPoly2>,
}

impl Gradient {
    pub fn of(p: &NcPoly) -> Gradient {
        Gradient { components: (0..p.n()).map(|i| fdq(i, p).expect("index in range")).collect() }
    }

    pub fn from_components(components: Vec<TensorPoly2>) -> Gradient {
        Gradient { components }
    }

    pub fn components(&self) -> &[TensorPoly2] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Cyclic gradient `D_i p = sum_{p = A X_i B} B A`.
pub fn cyclic_grad(i: usize, p: &NcPoly) -> Result<NcPoly> {
    check_index(i, p.n())?;
    let mut out = NcPoly::zero(p.n());
    for (w, c) in p.terms() {
        for (a, b) in w.splits_at(i) {
            out.add_term(b.concat(&a), c.clone());
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Leg {
    Left,
    Right,
}

/// `(d_j (x) id) U` or `(id (x) d_j) U`.
pub fn tensor_fdq(j: usize, side: Leg, u: &TensorPoly2) -> Result<TensorPoly3> {
    check_index(j, u.n())?;
    Ok(u.map_terms(|[a, b]| match side {
        Leg::Left => word_fdq(j, a).map(|([x, y], c)| ([x, y, b.clone()], c)).collect(),
        Leg::Right => word_fdq(j, b).map(|([x, y], c)| ([a.clone(), x, y], c)).collect(),
    }))
}

/// `(d_i (x) id) o d_j`.
pub fn second_fdq_left(i: usize, j: usize, p: &NcPoly) -> Result<TensorPoly3> {
    check_index(i, p.n())?;
    tensor_fdq(i, Leg::Left, &fdq(j, p)?)
}

/// `(id (x) d_i) o d_j`.
pub fn second_fdq_right(i: usize, j: usize, p: &NcPoly) -> Result<TensorPoly3> {
    check_index(i, p.n())?;
    tensor_fdq(i, Leg::Right, &fdq(j, p)?)
}

/// `sum_i [D_i V, X_i]`, which vanishes identically for every `V`.
pub fn cyclic_commutator_sum(v: &NcPoly) -> NcPoly {
    let n = v.n();
    let mut acc = NcPoly::zero(n);
    for i in 0..n {
        let d = cyclic_grad(i, v).expect("index in range");
        let x = NcPoly::generator(n, i).expect("index in range");
        acc = &acc + &(&(&d * &x) - &(&x * &d));
    }
    acc
}
