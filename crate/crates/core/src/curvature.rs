//! Conjugate systems from potentials, the Jacobian `J = (d_j xi_i)`, its
//! symmetries, the right-leg action `R_T` and the curvature certificates
//! built on it (CD lower bound, Brascamp-Lieb bound).

use num_traits::Zero;
use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

use crate::calculus::{cyclic_grad, fdq};
use crate::eigen;
use crate::error::{Error, Result};
use crate::exact::QMatrix;
use crate::ncpoly::{NcPoly, TensorPoly2};
use crate::rational::{self, Rational};
use crate::spectral::{OperatorMatrix, TensorSpace};
use crate::state::SemicircularState;

/// A self-adjoint potential `V`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PotentialSpec {
    v: NcPoly,
}

impl PotentialSpec {
    pub fn new(v: NcPoly) -> Result<Self> {
        if !v.is_self_adjoint() {
            return Err(Error::NotSelfAdjoint);
        }
        Ok(PotentialSpec { v })
    }

    /// `V = 1/2 sum_{ij} A_ij X_i X_j`.
    pub fn quadratic(a: &QMatrix) -> Result<Self> {
        if !a.is_symmetric() {
            return Err(Error::InvalidModel("quadratic form matrix must be symmetric".into()));
        }
        let n = a.rows();
        let half = rational::frac(1, 2);
        let mut v = NcPoly::zero(n);
        for i in 0..n {
            for j in 0..n {
                let w = crate::ncpoly::Word::from_letters([i, j]);
                v.add_term(w, &a[(i, j)] * &half);
            }
        }
        Self::new(v)
    }

    pub fn poly(&self) -> &NcPoly {
        &self.v
    }

    pub fn n(&self) -> usize {
        self.v.n()
    }
}

/// `xi_i = D_i V`.
pub fn conjugates_from_potential(v: &PotentialSpec) -> Vec<NcPoly> {
    (0..v.n()).map(|i| cyclic_grad(i, v.poly()).expect("index in range")).collect()
}

/// `entries[i][j] = d_j xi_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JacobianTensor {
    entries: Vec<Vec<TensorPoly2>>,
}

impl JacobianTensor {
    pub fn of(xi: &[NcPoly]) -> Result<Self> {
        let n = xi.len();
        let mut entries = Vec::with_capacity(n);
        for x in xi {
            if x.n() != n {
                return Err(Error::ConjugateLength { got: n, expected: x.n() });
            }
            entries.push((0..n).map(|j| fdq(j, x)).collect::<Result<Vec<_>>>()?);
        }
        Ok(JacobianTensor { entries })
    }

    pub fn from_entries(entries: Vec<Vec<TensorPoly2>>) -> Result<Self> {
        let n = entries.len();
        for row in &entries {
            if row.len() != n {
                return Err(Error::InvalidModel("Jacobian must be square".into()));
            }
            if let Some(bad) = row.iter().find(|t| t.n() != n) {
                return Err(Error::GeneratorMismatch { left: n, right: bad.n() });
            }
        }
        Ok(JacobianTensor { entries })
    }

    /// `c (1 (x) 1) (x) I_n`.
    pub fn scalar(n: usize, c: &Rational) -> Self {
        let entries = (0..n)
            .map(|i| {
                (0..n).map(|j| if i == j { TensorPoly2::unit(n).scale(c) } else { TensorPoly2::zero(n) }).collect()
            })
            .collect();
        JacobianTensor { entries }
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &TensorPoly2 {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<TensorPoly2>] {
        &self.entries
    }

    /// Largest total degree over all entries.
    pub fn degree(&self) -> usize {
        self.entries.iter().flatten().filter_map(TensorPoly2::total_degree).max().unwrap_or(0)
    }

    /// `(T*)_ij = star_legs(T_ji)`.
    pub fn adjoint(&self) -> Self {
        let n = self.n();
        JacobianTensor {
            entries: (0..n).map(|i| (0..n).map(|j| self.entries[j][i].star_legs()).collect()).collect(),
        }
    }

    /// Matrix product with `#` entries: `(T # S)_ij = sum_k T_ik # S_kj`.
    pub fn sharp(&self, other: &Self) -> Result<Self> {
        let n = self.n();
        if other.n() != n {
            return Err(Error::GeneratorMismatch { left: n, right: other.n() });
        }
        let mut entries = vec![vec![TensorPoly2::zero(n); n]; n];
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                for k in 0..n {
                    *e = &*e + &self.entries[i][k].sharp(&other.entries[k][j])?;
                }
            }
        }
        Ok(JacobianTensor { entries })
    }

    pub fn sub(&self, other: &Self) -> Self {
        JacobianTensor {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(TensorPoly2::is_zero)
    }

    pub fn symmetries(&self) -> JacobianSymmetries {
        let n = self.n();
        let mut s = JacobianSymmetries { schwarz: true, star: true, dagger: true };
        for i in 0..n {
            for j in 0..n {
                let e = &self.entries[i][j];
                s.schwarz &= *e == self.entries[j][i].flip();
                s.star &= e.star_legs() == self.entries[j][i];
                s.dagger &= e.dagger() == *e;
            }
        }
        s
    }
}

impl Serialize for JacobianTensor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Term {
            left: String,
            right: String,
            coef: String,
        }
        let mut seq = s.serialize_seq(Some(self.n()))?;
        for row in &self.entries {
            let row: Vec<Vec<Term>> = row
                .iter()
                .map(|t| {
                    t.terms()
                        .map(|([a, b], c)| Term { left: a.to_string(), right: b.to_string(), coef: rational::format(c) })
                        .collect()
                })
                .collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct JacobianSymmetries {
    /// `J_ij = flip(J_ji)`.
    pub schwarz: bool,
    /// `star_legs(J_ij) = J_ji`.
    pub star: bool,
    /// `J_ij^dagger = J_ij`.
    pub dagger: bool,
}

impl JacobianSymmetries {
    pub fn all(&self) -> bool {
        self.schwarz && self.star && self.dagger
    }
}

/// `(R_T eta)_i = sum_j eta_j # T_ji`.
pub fn right_leg_apply(t: &JacobianTensor, eta: &[TensorPoly2]) -> Result<Vec<TensorPoly2>> {
    let n = t.n();
    if eta.len() != n {
        return Err(Error::ConjugateLength { got: eta.len(), expected: n });
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = TensorPoly2::zero(n);
        for (j, e) in eta.iter().enumerate() {
            acc = &acc + &e.sharp(t.entry(j, i))?;
        }
        out.push(acc);
    }
    Ok(out)
}

/// `sum_i <eta_i, zeta_i>`.
pub fn block_inner(eta: &[TensorPoly2], zeta: &[TensorPoly2], state: &SemicircularState) -> Rational {
    eta.iter().zip(zeta).fold(Rational::zero(), |acc, (a, b)| acc + state.tensor_inner(a, b))
}

/// Block Gram matrix of the `n`-fold direct sum of a tensor space.
fn block_gram(space: &TensorSpace) -> QMatrix {
    let m = space.dim();
    let n = space.n();
    QMatrix::from_fn(n * m, n * m, |a, b| if a / m == b / m { space.gram()[(a % m, b % m)].clone() } else { Rational::zero() })
}

/// Matrix of `R_T` on `n` copies of the truncated tensor space; index `i*m + a`
/// is basis tensor `a` in component `i`.
///
/// The form `<R_T e_b, e_a>` is always exact. When `R_T` maps the space into
/// itself (constant entries, or enough headroom) the exact action is stored
/// too; otherwise the operator is the Galerkin compression.
pub fn right_leg_matrix(t: &JacobianTensor, space: &TensorSpace) -> Result<OperatorMatrix> {
    let n = t.n();
    if space.n() != n {
        return Err(Error::GeneratorMismatch { left: n, right: space.n() });
    }
    let m = space.dim();
    let st = space.state();
    let gram = block_gram(space);
    let mut form = QMatrix::zeros(n * m, n * m);
    let mut action = Some(QMatrix::zeros(n * m, n * m));
    for j in 0..n {
        for b in 0..m {
            let e = space.element(b);
            for i in 0..n {
                let image = e.sharp(t.entry(j, i))?;
                if image.is_zero() {
                    continue;
                }
                for a in 0..m {
                    form[(i * m + a, j * m + b)] = st.tensor_inner(&image, &space.element(a));
                }
                if let Some(act) = action.as_mut() {
                    match space.coords(&image) {
                        Ok(c) => {
                            for (a, v) in c.into_iter().enumerate() {
                                act[(i * m + a, j * m + b)] = v;
                            }
                        }
                        Err(_) => action = None,
                    }
                }
            }
        }
    }
    match action {
        Some(act) => {
            let op = OperatorMatrix::from_action("right_leg", act, &gram)?;
            if *op.form() != form {
                return Err(Error::IdentityViolation("right-leg action disagrees with its Gram form".into()));
            }
            Ok(op)
        }
        None => Ok(OperatorMatrix::from_form("right_leg (Galerkin)", form, &gram)),
    }
}

/// Block coordinates of `eta` on the direct-sum space.
pub fn block_coords(eta: &[TensorPoly2], space: &TensorSpace) -> Result<Vec<Rational>> {
    let mut v = Vec::with_capacity(eta.len() * space.dim());
    for e in eta {
        v.extend(space.coords(e)?);
    }
    Ok(v)
}

#[derive(Clone, Debug, Serialize)]
pub struct CdCertificate {
    pub min_eigenvalue: f64,
    pub degree: usize,
    /// Always "numeric certificate at degree d": a state- and truncation-relative
    /// lower bound, not positivity in the C*-sense.
    pub label: String,
    /// True when the truncated operator was an exact restriction.
    pub exact_restriction: bool,
    pub tol: f64,
}

impl CdCertificate {
    pub fn certifies(&self, c: f64) -> bool {
        self.min_eigenvalue >= c - self.tol
    }
}

/// Smallest eigenvalue of the symmetrized right-leg matrix in the tensor G-metric.
pub fn cd_certificate(t: &JacobianTensor, space: &TensorSpace, tol: f64) -> Result<CdCertificate> {
    let op = right_leg_matrix(t, space)?;
    let e = eigen::generalized_symmetric(&eigen::symmetrize(&op.form().to_f64()), &op.gram().to_f64())?;
    Ok(CdCertificate {
        min_eigenvalue: e.values[0],
        degree: space.degree(),
        label: format!("numeric certificate at degree {}", space.degree()),
        exact_restriction: op.action().is_some(),
        tol,
    })
}

/// Exact check of a sum-of-squares witness `J - c (1 (x) 1) I_n = Q* # Q`.
/// Returns the residual matrix, zero iff the witness is valid.
pub fn sos_witness_residual(j: &JacobianTensor, q: &JacobianTensor, c: &Rational) -> Result<JacobianTensor> {
    let qq = q.adjoint().sharp(q)?;
    Ok(j.sub(&JacobianTensor::scalar(j.n(), c)).sub(&qq))
}

#[derive(Clone, Debug, Serialize)]
pub struct BlBound {
    /// `||Y - tau(Y)||^2`.
    pub variance: f64,
    /// `<R_J^{-1} dY, dY>`.
    pub bl_value: f64,
    /// `E(Y) / c`.
    pub plain_bound: f64,
    pub energy: f64,
    pub c: f64,
    /// `Var <= BL <= E/c` within `tol`.
    pub ordered: bool,
    /// True when exact rational inversion was used.
    pub exact: bool,
    pub tol: f64,
}

/// Brascamp-Lieb right-hand side and the two bounds around it. `c` is the
/// curvature constant used for the plain bound; `J^{-1}` is realized as the
/// inverse of the truncated right-leg matrix.
pub fn bl_bound(y: &NcPoly, t: &JacobianTensor, space: &TensorSpace, c: f64, tol: f64) -> Result<BlBound> {
    if c.is_nan() || c <= 0.0 {
        return Err(Error::InvalidConfig(format!("curvature constant must be positive, got {c}")));
    }
    let st = space.state();
    let grad: Vec<TensorPoly2> = (0..y.n()).map(|i| fdq(i, y)).collect::<Result<_>>()?;
    let v = block_coords(&grad, space)?;
    let op = right_leg_matrix(t, space)?;
    let gram = op.gram();
    let gv = gram.mul_vec(&v);
    let (bl_value, exact) = match op.form().inverse() {
        Ok(kinv) if op.action().is_some() => (rational::to_f64(&kinv.bilinear(&gv, &gv)), true),
        Ok(_) | Err(_) => {
            let k = eigen::symmetrize(&op.form().to_f64());
            let chol = nalgebra::Cholesky::new(k).ok_or(Error::Singular)?;
            let g = nalgebra::DVector::from_iterator(gv.len(), gv.iter().map(rational::to_f64));
            (g.dot(&chol.solve(&g)), false)
        }
    };
    let variance = rational::to_f64(&st.variance(y));
    let energy = rational::to_f64(&block_inner(&grad, &grad, st));
    let plain_bound = energy / c;
    let slack = tol * (1.0 + plain_bound.abs());
    Ok(BlBound {
        variance,
        bl_value,
        plain_bound,
        energy,
        c,
        ordered: variance <= bl_value + slack && bl_value <= plain_bound + slack,
        exact,
        tol,
    })
}

/// Free Fisher information `sum_i ||xi_i||^2`.
pub fn fisher_information(xi: &[NcPoly], state: &SemicircularState) -> Rational {
    xi.iter().fold(Rational::zero(), |acc, x| acc + state.norm_sq(x))
}

/// `xi_j - tau(xi_j) - (id (x) tau)[sum_i X_i . d_j xi_i - d_j xi_i . X_i]`,
/// with the outer bimodule actions. Returns the residual and its squared norm.
pub fn clark_ocone_residual(
    j: usize,
    xi: &[NcPoly],
    t: &JacobianTensor,
    state: &SemicircularState,
) -> Result<(NcPoly, Rational)> {
    let n = xi.len();
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, n });
    }
    let one = NcPoly::one(n);
    let mut inner = TensorPoly2::zero(n);
    for i in 0..n {
        let x = NcPoly::generator(n, i)?;
        let e = t.entry(i, j);
        inner = &inner + &TensorPoly2::bimodule_act(&x, e, &one)?;
        inner = &inner - &TensorPoly2::bimodule_act(&one, e, &x)?;
    }
    let lhs = state.center(&xi[j]);
    let r = &lhs - &state.slice_right(&inner);
    let norm = state.norm_sq(&r);
    Ok((r, norm))
}

/// Scalar multiple of the identity on the tensor space, for comparisons.
pub fn is_identity_action(op: &OperatorMatrix) -> bool {
    op.action().is_some_and(|a| *a == QMatrix::identity(a.rows()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::{parse_poly, parse_tensor2};
    use crate::rational::{frac, int};
    use crate::state::CovarianceModel;

    fn p(s: &str, n: usize) -> NcPoly {
        parse_poly(s, Some(n)).unwrap()
    }

    fn unit_scale(n: usize, c: i64) -> TensorPoly2 {
        TensorPoly2::unit(n).scale(&int(c))
    }

    fn quartic(eps: Rational) -> PotentialSpec {
        let v = &p("1/2 X1^2 + 1/2 X2^2", 2) + &p("X1 X2 X1 X2 + X2 X1 X2 X1", 2).scale(&(eps * frac(1, 2)));
        PotentialSpec::new(v).unwrap()
    }

    #[test]
    fn conjugates_examples() {
        let v = PotentialSpec::new(p("1/2 X1^2 + 1/2 X2^2 + 1/2 X3^2", 3)).unwrap();
        assert_eq!(conjugates_from_potential(&v), vec![p("X1", 3), p("X2", 3), p("X3", 3)]);
        let a = QMatrix::from_rows(vec![vec![int(2), int(1)], vec![int(1), int(3)]]).unwrap();
        let xi = conjugates_from_potential(&PotentialSpec::quadratic(&a).unwrap());
        assert_eq!(xi, vec![p("2 X1 + X2", 2), p("X1 + 3 X2", 2)]);
        let xi = conjugates_from_potential(&quartic(frac(1, 10)));
        assert_eq!(xi[0], p("X1 + 1/5 X2 X1 X2", 2));
        assert!(matches!(PotentialSpec::new(p("X1 X2", 2)), Err(Error::NotSelfAdjoint)));
    }

    #[test]
    fn jacobian_examples() {
        let j = JacobianTensor::of(&[p("X1", 2), p("X2", 2)]).unwrap();
        assert_eq!(j, JacobianTensor::scalar(2, &int(1)));
        let j = JacobianTensor::of(&[p("2 X1 + X2", 2), p("X1 + 3 X2", 2)]).unwrap();
        assert_eq!(*j.entry(0, 1), unit_scale(2, 1));
        assert_eq!(*j.entry(1, 1), unit_scale(2, 3));
        let j = JacobianTensor::of(&conjugates_from_potential(&quartic(int(1)))).unwrap();
        assert_eq!(j.entry(0, 1).total_degree(), Some(2));
        assert!(j.symmetries().all());
    }

    #[test]
    fn right_leg_identity_and_multiplication() {
        let st = SemicircularState::standard(2);
        let ts = TensorSpace::new(st, 2).unwrap();
        let op = right_leg_matrix(&JacobianTensor::scalar(2, &int(1)), &ts).unwrap();
        assert!(is_identity_action(&op));

        let s = JacobianTensor::from_entries(vec![
            vec![parse_tensor2("X1 (x) 1", Some(2)).unwrap(), unit_scale(2, 2)],
            vec![parse_tensor2("1 (x) X2", Some(2)).unwrap(), parse_tensor2("X2 (x) X1", Some(2)).unwrap()],
        ])
        .unwrap();
        let t = JacobianTensor::from_entries(vec![
            vec![unit_scale(2, -1), parse_tensor2("X2 X2 (x) 1", Some(2)).unwrap()],
            vec![parse_tensor2("X1 (x) X1", Some(2)).unwrap(), unit_scale(2, 3)],
        ])
        .unwrap();
        let eta = vec![parse_tensor2("X1 (x) X2", Some(2)).unwrap(), parse_tensor2("1 (x) X1 X2", Some(2)).unwrap()];
        let lhs = right_leg_apply(&s, &right_leg_apply(&t, &eta).unwrap()).unwrap();
        let rhs = right_leg_apply(&t.sharp(&s).unwrap(), &eta).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn right_leg_star_structure() {
        let a = QMatrix::from_rows(vec![vec![int(2), frac(1, 2)], vec![frac(1, 2), int(1)]]).unwrap();
        let st = SemicircularState::new(CovarianceModel::from_precision(&a).unwrap());
        let t = JacobianTensor::from_entries(vec![
            vec![parse_tensor2("X1 (x) X2", Some(2)).unwrap(), unit_scale(2, 2)],
            vec![parse_tensor2("X2 X1 (x) 1", Some(2)).unwrap(), parse_tensor2("1 (x) X1", Some(2)).unwrap()],
        ])
        .unwrap();
        let eta = vec![parse_tensor2("X1 (x) X2", Some(2)).unwrap(), parse_tensor2("1 (x) X1 X2", Some(2)).unwrap()];
        let zeta = vec![parse_tensor2("X2 (x) 1", Some(2)).unwrap(), parse_tensor2("X1 X1 (x) X2", Some(2)).unwrap()];
        let lhs = block_inner(&right_leg_apply(&t, &eta).unwrap(), &zeta, &st);
        let rhs = block_inner(&eta, &right_leg_apply(&t.adjoint(), &zeta).unwrap(), &st);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn cd_examples() {
        let st = SemicircularState::standard(2);
        let ts = TensorSpace::new(st, 2).unwrap();
        let c = cd_certificate(&JacobianTensor::scalar(2, &int(1)), &ts, 1e-8).unwrap();
        assert!((c.min_eigenvalue - 1.0).abs() < 1e-8 && c.label == "numeric certificate at degree 2");

        let st = SemicircularState::new(CovarianceModel::diagonal_precision(&[int(1), int(2)]).unwrap());
        let ts = TensorSpace::new(st.clone(), 2).unwrap();
        let j = JacobianTensor::of(&st.model().linear_conjugates()).unwrap();
        let c = cd_certificate(&j, &ts, 1e-8).unwrap();
        assert!((c.min_eigenvalue - 1.0).abs() < 1e-8 && c.exact_restriction);

        let mut bad = JacobianTensor::scalar(2, &int(1));
        bad.entries[0][0] = unit_scale(2, -2);
        assert!(cd_certificate(&bad, &ts, 1e-8).unwrap().min_eigenvalue < 0.0);
    }

    #[test]
    fn sos_witness() {
        let a = QMatrix::from_rows(vec![vec![int(2), int(1)], vec![int(1), int(2)]]).unwrap();
        let j = JacobianTensor::of(&CovarianceModel::from_precision(&a).unwrap().linear_conjugates()).unwrap();
        // A - 1 = [[1,1],[1,1]] = q^T q with q = [[1,1],[0,0]]
        let q = JacobianTensor::from_entries(vec![vec![unit_scale(2, 1), unit_scale(2, 1)], vec![TensorPoly2::zero(2); 2]])
            .unwrap();
        assert!(sos_witness_residual(&j, &q, &int(1)).unwrap().is_zero());
        assert!(!sos_witness_residual(&j, &q, &int(2)).unwrap().is_zero());
    }

    #[test]
    fn bl_examples() {
        let st = SemicircularState::standard(2);
        let ts = TensorSpace::new(st.clone(), 1).unwrap();
        let id = JacobianTensor::scalar(2, &int(1));
        let b = bl_bound(&p("X1", 2), &id, &ts, 1.0, 1e-10).unwrap();
        assert_eq!((b.variance, b.bl_value, b.plain_bound), (1.0, 1.0, 1.0));
        let b = bl_bound(&p("X1^2", 2), &id, &ts, 1.0, 1e-10).unwrap();
        assert!((b.variance - 1.0).abs() < 1e-12 && (b.bl_value - 2.0).abs() < 1e-12 && b.ordered);

        let st = SemicircularState::new(CovarianceModel::diagonal_precision(&[int(2), int(1)]).unwrap());
        let ts = TensorSpace::new(st.clone(), 1).unwrap();
        let j = JacobianTensor::of(&st.model().linear_conjugates()).unwrap();
        let b = bl_bound(&p("X1", 2), &j, &ts, 1.0, 1e-10).unwrap();
        assert!((b.variance - 0.5).abs() < 1e-12 && (b.bl_value - 0.5).abs() < 1e-12);
        assert!((b.plain_bound - 1.0).abs() < 1e-12 && b.ordered && b.exact);
    }

    #[test]
    fn fisher_examples() {
        let st = SemicircularState::standard(3);
        assert_eq!(fisher_information(&st.model().linear_conjugates(), &st), int(3));
        let a = QMatrix::from_rows(vec![vec![int(2), int(1)], vec![int(1), int(3)]]).unwrap();
        let st = SemicircularState::new(CovarianceModel::from_precision(&a).unwrap());
        assert_eq!(fisher_information(&st.model().linear_conjugates(), &st), int(5));
    }

    #[test]
    fn clark_ocone_examples() {
        let st = SemicircularState::standard(2);
        let xi = st.model().linear_conjugates();
        let j = JacobianTensor::of(&xi).unwrap();
        assert!(clark_ocone_residual(0, &xi, &j, &st).unwrap().1.is_zero());
        let xi = conjugates_from_potential(&quartic(frac(1, 3)));
        let j = JacobianTensor::of(&xi).unwrap();
        let a = QMatrix::from_rows(vec![vec![int(2), int(1)], vec![int(1), int(3)]]).unwrap();
        let st = SemicircularState::new(CovarianceModel::from_precision(&a).unwrap());
        for k in 0..2 {
            assert!(clark_ocone_residual(k, &xi, &j, &st).unwrap().0.is_zero());
        }
    }
}
