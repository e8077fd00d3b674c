//! The trace of a free semicircular family with prescribed covariance,
//! evaluated exactly through non-crossing pairings, and the inner products
//! it induces on the free algebra and its tensor powers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::calculus::fdq;
use crate::error::{Error, Result};
use crate::exact::QMatrix;
use crate::ncpoly::{NcPoly, TensorPoly, TensorPoly2, Word};
use crate::rational::{self, Rational};

/// Symmetric positive-definite covariance `C` of a semicircular family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CovarianceModel {
    n: usize,
    c: QMatrix,
}

impl CovarianceModel {
    pub fn new(c: QMatrix) -> Result<Self> {
        if !c.is_square() || c.rows() == 0 {
            return Err(Error::InvalidModel("covariance must be a non-empty square matrix".into()));
        }
        if !c.is_symmetric() {
            return Err(Error::InvalidModel("covariance is not symmetric".into()));
        }
        if !c.is_positive_definite() {
            return Err(Error::InvalidModel("covariance is not positive definite".into()));
        }
        Ok(CovarianceModel { n: c.rows(), c })
    }

    /// The standard free semicircular family, `C = I_n`.
    pub fn standard(n: usize) -> Self {
        CovarianceModel { n, c: QMatrix::identity(n) }
    }

    /// Model whose conjugate system is `xi = A X`, i.e. `C = A^{-1}`.
    pub fn from_precision(a: &QMatrix) -> Result<Self> {
        if !a.is_symmetric() || !a.is_positive_definite() {
            return Err(Error::InvalidModel("quadratic form A must be symmetric positive definite".into()));
        }
        Self::new(a.inverse()?)
    }

    pub fn diagonal_precision(diag: &[Rational]) -> Result<Self> {
        Self::from_precision(&QMatrix::diagonal(diag))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn covariance(&self) -> &QMatrix {
        &self.c
    }

    pub fn entry(&self, i: usize, j: usize) -> &Rational {
        &self.c[(i, j)]
    }

    /// `A = C^{-1}`.
    pub fn precision(&self) -> QMatrix {
        self.c.inverse().expect("positive definite covariance is invertible")
    }

    /// The linear conjugate system `xi_i = sum_j A_ij X_j`.
    pub fn linear_conjugates(&self) -> Vec<NcPoly> {
        let a = self.precision();
        (0..self.n).map(|i| NcPoly::linear(a.row(i))).collect()
    }

    /// Same model with generators relabeled: new index `k` is old `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Self::new(QMatrix::from_fn(self.n, self.n, |i, j| self.c[(perm[i], perm[j])].clone()))
    }
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    n: usize,
    #[serde(rename = "C")]
    c: Vec<Vec<String>>,
}

impl Serialize for CovarianceModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelRepr { n: self.n, c: self.c.to_strings() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CovarianceModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = ModelRepr::deserialize(d)?;
        let rows = repr
            .c
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| rational::parse(s).ok_or_else(|| D::Error::custom(format!("bad rational '{s}'"))))
                    .collect::<std::result::Result<Vec<_>, _>>()
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let c = QMatrix::from_rows(rows).map_err(D::Error::custom)?;
        if c.rows() != repr.n {
            return Err(D::Error::custom(format!("n = {} but C has {} rows", repr.n, c.rows())));
        }
        CovarianceModel::new(c).map_err(D::Error::custom)
    }
}

/// Memo table of word traces. Guarded so that concurrent readers always see
/// complete entries; values are deterministic so races only cost recomputation.
#[derive(Debug, Default)]
pub struct PairingCache {
    table: Mutex<HashMap<Vec<u8>, Rational>>,
}

impl PairingCache {
    fn get(&self, w: &[u8]) -> Option<Rational> {
        self.table.lock().expect("cache poisoned").get(w).cloned()
    }

    fn insert(&self, w: &[u8], v: Rational) {
        self.table.lock().expect("cache poisoned").insert(w.to_vec(), v);
    }

    pub fn len(&self) -> usize {
        self.table.lock().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A covariance model together with its trace cache. Cheap to clone.
#[derive(Clone, Debug)]
pub struct SemicircularState {
    model: Arc<CovarianceModel>,
    cache: Arc<PairingCache>,
}

impl SemicircularState {
    pub fn new(model: CovarianceModel) -> Self {
        SemicircularState { model: Arc::new(model), cache: Arc::new(PairingCache::default()) }
    }

    pub fn standard(n: usize) -> Self {
        Self::new(CovarianceModel::standard(n))
    }

    pub fn model(&self) -> &CovarianceModel {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.model.n
    }

    pub fn cache(&self) -> &PairingCache {
        &self.cache
    }

    /// Sum over non-crossing pair partitions of the letters of `w`, each
    /// pair `{a, b}` weighted by `C[w_a][w_b]`. Computed by pairing the first
    /// letter with every admissible partner and recursing on the inside and
    /// outside segments.
    pub fn trace_word(&self, w: &Word) -> Rational {
        self.trace_letters(w.letters())
    }

    fn trace_letters(&self, w: &[u8]) -> Rational {
        if w.is_empty() {
            return Rational::one();
        }
        if w.len() % 2 == 1 {
            return Rational::zero();
        }
        if w.len() == 2 {
            return self.model.c[(w[0] as usize, w[1] as usize)].clone();
        }
        if let Some(v) = self.cache.get(w) {
            return v;
        }
        let first = w[0] as usize;
        let mut acc = Rational::zero();
        for k in (1..w.len()).step_by(2) {
            let weight = &self.model.c[(first, w[k] as usize)];
            if weight.is_zero() {
                continue;
            }
            let inside = self.trace_letters(&w[1..k]);
            if inside.is_zero() {
                continue;
            }
            let outside = self.trace_letters(&w[k + 1..]);
            if outside.is_zero() {
                continue;
            }
            acc += weight * inside * outside;
        }
        self.cache.insert(w, acc.clone());
        acc
    }

    pub fn trace(&self, p: &NcPoly) -> Rational {
        p.eval_linear(|w| self.trace_word(w))
    }

    /// `<w, v> = tau(v* w)` on words.
    pub fn inner_words(&self, w: &Word, v: &Word) -> Rational {
        let mut letters: Vec<u8> = v.letters().iter().rev().copied().collect();
        letters.extend_from_slice(w.letters());
        self.trace_letters(&letters)
    }

    /// `<p, q> = tau(q* p)`.
    pub fn inner(&self, p: &NcPoly, q: &NcPoly) -> Rational {
        let mut acc = Rational::zero();
        for (w, a) in p.terms() {
            for (v, b) in q.terms() {
                let t = self.inner_words(w, v);
                if !t.is_zero() {
                    acc += a * b * t;
                }
            }
        }
        acc
    }

    pub fn norm_sq(&self, p: &NcPoly) -> Rational {
        self.inner(p, p)
    }

    /// Legwise inner product, `<a (x) b, c (x) d> = tau(c* a) tau(d* b)`,
    /// extended bilinearly; the opposite leg is identified with `L^2(M)`.
    pub fn tensor_inner<const R: usize>(&self, u: &TensorPoly<R>, v: &TensorPoly<R>) -> Rational {
        let mut acc = Rational::zero();
        for (ws, a) in u.terms() {
            for (vs, b) in v.terms() {
                let mut prod = a * b;
                for k in 0..R {
                    if prod.is_zero() {
                        break;
                    }
                    prod *= self.inner_words(&ws[k], &vs[k]);
                }
                if !prod.is_zero() {
                    acc += prod;
                }
            }
        }
        acc
    }

    pub fn tensor_norm_sq<const R: usize>(&self, u: &TensorPoly<R>) -> Rational {
        self.tensor_inner(u, u)
    }

    /// `(tau (x) tau)(U)`.
    pub fn trace2(&self, u: &TensorPoly2) -> Rational {
        let mut acc = Rational::zero();
        for ([a, b], c) in u.terms() {
            let t = self.trace_word(a);
            if !t.is_zero() {
                acc += c * t * self.trace_word(b);
            }
        }
        acc
    }

    /// `(tau (x) id)(U)`.
    pub fn slice_left(&self, u: &TensorPoly2) -> NcPoly {
        let mut out = NcPoly::zero(u.n());
        for ([a, b], c) in u.terms() {
            out.add_term(b.clone(), c * self.trace_word(a));
        }
        out
    }

    /// `(id (x) tau)(U)`.
    pub fn slice_right(&self, u: &TensorPoly2) -> NcPoly {
        let mut out = NcPoly::zero(u.n());
        for ([a, b], c) in u.terms() {
            out.add_term(a.clone(), c * self.trace_word(b));
        }
        out
    }

    /// `tau(xi_i P) - (tau (x) tau)(d_i P)`; zero iff the conjugate relation holds at `P`.
    pub fn conjugate_relation_residual(&self, i: usize, xi: &NcPoly, p: &NcPoly) -> Result<Rational> {
        let lhs = self.trace(&xi.checked_mul(p)?);
        let rhs = self.trace2(&fdq(i, p)?);
        Ok(lhs - rhs)
    }

    /// Gram matrix `G[a][b] = <w_a, w_b>` of a list of words.
    pub fn gram(&self, basis: &[Word]) -> QMatrix {
        let m = basis.len();
        let mut g = QMatrix::zeros(m, m);
        for a in 0..m {
            for b in 0..=a {
                let v = self.inner_words(&basis[a], &basis[b]);
                g[(a, b)] = v.clone();
                g[(b, a)] = v;
            }
        }
        g
    }

    /// `p - tau(p) 1`.
    pub fn center(&self, p: &NcPoly) -> NcPoly {
        p - &NcPoly::constant(p.n(), self.trace(p))
    }

    /// `||p - tau(p)||^2`.
    pub fn variance(&self, p: &NcPoly) -> Rational {
        let t = self.trace(p);
        self.norm_sq(p) - &t * &t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::parse_poly;
    use crate::rational::{frac, int};

    /// Brute-force oracle: enumerate every pair partition, keep non-crossing ones.
    fn brute_trace(w: &[u8], c: &QMatrix) -> Rational {
        fn pairings(points: &[usize]) -> Vec<Vec<(usize, usize)>> {
            if points.is_empty() {
                return vec![vec![]];
            }
            let mut out = vec![];
            for k in 1..points.len() {
                let rest: Vec<usize> =
                    points[1..].iter().enumerate().filter(|(j, _)| j + 1 != k).map(|(_, &p)| p).collect();
                for mut tail in pairings(&rest) {
                    tail.push((points[0], points[k]));
                    out.push(tail);
                }
            }
            out
        }
        if w.len() % 2 == 1 {
            return Rational::zero();
        }
        let pts: Vec<usize> = (0..w.len()).collect();
        let mut acc = Rational::zero();
        for pi in pairings(&pts) {
            let crossing = pi.iter().any(|&(a, b)| pi.iter().any(|&(c2, d)| a < c2 && c2 < b && b < d));
            if crossing {
                continue;
            }
            let mut prod = Rational::one();
            for (a, b) in pi {
                prod *= &c[(w[a] as usize, w[b] as usize)];
            }
            acc += prod;
        }
        acc
    }

    fn corr_model() -> CovarianceModel {
        CovarianceModel::new(
            QMatrix::from_rows(vec![vec![int(1), frac(1, 2)], vec![frac(1, 2), int(2)]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn word_trace_examples() {
        let st = SemicircularState::standard(2);
        assert_eq!(st.trace_word(&Word::from_letters([0, 0])), int(1));
        assert_eq!(st.trace_word(&Word::from_letters([0, 1, 0, 1])), int(0));
        assert_eq!(st.trace_word(&Word::unit()), int(1));
        assert_eq!(st.trace_word(&Word::from_letters([0])), int(0));
        let s1 = SemicircularState::standard(1);
        let moments: Vec<_> = [4, 6, 8].iter().map(|&k| s1.trace_word(&Word::from_letters(vec![0; k]))).collect();
        assert_eq!(moments, vec![int(2), int(5), int(14)]);
    }

    #[test]
    fn catalan_recursion_oracle() {
        // tau(s^{m+1}) = sum_{k=0}^{m-1} tau(s^k) tau(s^{m-1-k}), built without pairings.
        let mut m = vec![int(1), int(0)];
        for k in 1..12 {
            let next = (0..k).fold(int(0), |acc, j| acc + &m[j] * &m[k - 1 - j]);
            m.push(next);
        }
        let st = SemicircularState::standard(1);
        for (k, expected) in m.iter().enumerate() {
            assert_eq!(&st.trace_word(&Word::from_letters(vec![0; k])), expected, "moment {k}");
        }
    }

    #[test]
    fn matches_brute_force() {
        let model = corr_model();
        let st = SemicircularState::new(model.clone());
        for w in Word::all_up_to(2, 6) {
            assert_eq!(st.trace_word(&w), brute_trace(w.letters(), model.covariance()), "{w}");
        }
    }

    #[test]
    fn poly_trace_and_inner() {
        let st = SemicircularState::standard(2);
        assert_eq!(st.trace(&NcPoly::one(2)), int(1));
        assert_eq!(st.trace(&parse_poly("X1", Some(2)).unwrap()), int(0));
        let x1 = parse_poly("X1", Some(2)).unwrap();
        let x2 = parse_poly("X2", Some(2)).unwrap();
        assert_eq!(st.inner(&x1, &x1), int(1));
        let corr = SemicircularState::new(
            CovarianceModel::new(
                QMatrix::from_rows(vec![vec![int(1), frac(1, 2)], vec![frac(1, 2), int(1)]]).unwrap(),
            )
            .unwrap(),
        );
        assert_eq!(corr.inner(&x1, &x2), frac(1, 2));
    }

    #[test]
    fn tensor_inner_examples() {
        let st = SemicircularState::standard(2);
        let u = TensorPoly2::unit(2);
        assert_eq!(st.tensor_inner(&u, &u), int(1));
        // ||x (x) 1 - 1 (x) x||^2 = 2 ||x - tau(x)||^2 for centered x
        let x = st.center(&parse_poly("X1 X2 + X1^2 + 2 X2", Some(2)).unwrap());
        let one = NcPoly::one(2);
        let t = &TensorPoly2::from_legs([&x, &one]).unwrap() - &TensorPoly2::from_legs([&one, &x]).unwrap();
        assert_eq!(st.tensor_norm_sq(&t), int(2) * st.norm_sq(&x));
    }

    #[test]
    fn conjugate_relation_examples() {
        let st = SemicircularState::standard(2);
        let x1 = parse_poly("X1", Some(2)).unwrap();
        let x2 = parse_poly("X2", Some(2)).unwrap();
        assert_eq!(st.conjugate_relation_residual(0, &x2, &x1).unwrap(), int(-1));
        for w in Word::all_up_to(2, 6) {
            let p = NcPoly::monomial(2, w, int(1));
            assert_eq!(st.conjugate_relation_residual(0, &x1, &p).unwrap(), int(0));
        }
        // A-model: C = A^{-1}, xi = A X
        let a = QMatrix::from_rows(vec![vec![int(2), int(1)], vec![int(1), int(3)]]).unwrap();
        let model = CovarianceModel::from_precision(&a).unwrap();
        let xi = model.linear_conjugates();
        let st = SemicircularState::new(model);
        for w in Word::all_up_to(2, 6) {
            let p = NcPoly::monomial(2, w, int(1));
            for (i, x) in xi.iter().enumerate() {
                assert_eq!(st.conjugate_relation_residual(i, x, &p).unwrap(), int(0));
            }
        }
    }

    #[test]
    fn gram_positive_definite() {
        let st = SemicircularState::new(corr_model());
        let g = st.gram(&Word::all_up_to(2, 4));
        assert!(g.is_positive_definite());
        let s1 = SemicircularState::standard(1);
        assert!(s1.gram(&Word::all_up_to(1, 6)).is_positive_definite());
    }

    #[test]
    fn model_validation_and_json() {
        let bad = QMatrix::from_rows(vec![vec![int(1), int(2)], vec![int(2), int(1)]]).unwrap();
        assert!(CovarianceModel::new(bad).is_err());
        let asym = QMatrix::from_rows(vec![vec![int(1), int(0)], vec![int(1), int(1)]]).unwrap();
        assert!(CovarianceModel::new(asym).is_err());

        let m = corr_model();
        let js = serde_json::to_string(&m).unwrap();
        assert_eq!(js, r#"{"n":2,"C":[["1","1/2"],["1/2","2"]]}"#);
        let back: CovarianceModel = serde_json::from_str(&js).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<CovarianceModel>(r#"{"n":3,"C":[["1"]]}"#).is_err());
    }
}
