//! Degree-truncated realizations of the free Laplacian `Delta = sum_i d_i* d_i`,
//! its tensor extension, resolvents, Dirichlet energies and the free
//! Poincare constant.
//!
//! Operators are assembled exactly over the rationals. With a linear
//! conjugate system `Delta` preserves polynomial degree, so the truncated
//! matrices are exact restrictions, not approximations. Eigenvalue problems
//! run once in floating point on the converted matrices.

use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::calculus::{fdq, tensor_fdq, Leg};
use crate::curvature::JacobianTensor;
use crate::eigen::{self, Cluster, GeneralizedEigen};
use crate::error::{Error, Result};
use crate::exact::QMatrix;
use crate::ncpoly::{NcPoly, TensorPoly2, Word};
use crate::rational::{self, Rational};
use crate::state::SemicircularState;

pub const DEFAULT_TOL: f64 = 1e-8;

/// All words of length at most `d`, their exact Gram matrix, and the state.
#[derive(Clone, Debug)]
pub struct TruncatedSpace {
    state: SemicircularState,
    degree: usize,
    basis: Vec<Word>,
    index: HashMap<Word, usize>,
    gram: QMatrix,
}

impl TruncatedSpace {
    pub fn new(state: SemicircularState, degree: usize) -> Result<Self> {
        let basis = Word::all_up_to(state.n(), degree);
        let gram = state.gram(&basis);
        if !gram.is_positive_definite() {
            return Err(Error::InvalidModel("Gram matrix of the monomial basis is not positive definite".into()));
        }
        let index = basis.iter().cloned().enumerate().map(|(k, w)| (w, k)).collect();
        Ok(TruncatedSpace { state, degree, basis, index, gram })
    }

    /// `(n^{d+1} - 1)/(n - 1)` for `n >= 2`, `d + 1` for `n = 1`.
    pub fn expected_dim(n: usize, d: usize) -> usize {
        if n == 1 {
            d + 1
        } else {
            (n.pow(d as u32 + 1) - 1) / (n - 1)
        }
    }

    pub fn state(&self) -> &SemicircularState {
        &self.state
    }

    pub fn n(&self) -> usize {
        self.state.n()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Word] {
        &self.basis
    }

    pub fn gram(&self) -> &QMatrix {
        &self.gram
    }

    pub fn check_degree(&self, p: &NcPoly) -> Result<()> {
        match p.degree() {
            Some(d) if d > self.degree => Err(Error::DegreeOverflow { degree: d, bound: self.degree }),
            _ => Ok(()),
        }
    }

    pub fn coords(&self, p: &NcPoly) -> Result<Vec<Rational>> {
        self.check_degree(p)?;
        let mut v = vec![Rational::zero(); self.dim()];
        for (w, c) in p.terms() {
            v[self.index[w]] = c.clone();
        }
        Ok(v)
    }

    pub fn poly(&self, coords: &[Rational]) -> NcPoly {
        NcPoly::from_terms(self.n(), self.basis.iter().cloned().zip(coords.iter().cloned()))
    }

    pub fn element(&self, k: usize) -> NcPoly {
        NcPoly::monomial(self.n(), self.basis[k].clone(), Rational::one())
    }

    /// `tau(e_b)` for every basis word.
    pub fn traces(&self) -> Vec<Rational> {
        self.basis.iter().map(|w| self.state.trace_word(w)).collect()
    }

    pub fn label(&self, k: usize) -> String {
        self.basis[k].to_string()
    }
}

/// Word pairs `a (x) b` with `|a| + |b| <= d`, with the legwise Gram matrix.
#[derive(Clone, Debug)]
pub struct TensorSpace {
    state: SemicircularState,
    degree: usize,
    basis: Vec<[Word; 2]>,
    index: HashMap<[Word; 2], usize>,
    gram: QMatrix,
}

impl TensorSpace {
    pub fn new(state: SemicircularState, degree: usize) -> Result<Self> {
        let n = state.n();
        let mut basis = Vec::new();
        for total in 0..=degree {
            for left in 0..=total {
                for a in Word::all_of_length(n, left) {
                    for b in Word::all_of_length(n, total - left) {
                        basis.push([a.clone(), b]);
                    }
                }
            }
        }
        let m = basis.len();
        let mut gram = QMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = state.inner_words(&basis[i][0], &basis[j][0]) * state.inner_words(&basis[i][1], &basis[j][1]);
                gram[(i, j)] = v.clone();
                gram[(j, i)] = v;
            }
        }
        let index = basis.iter().cloned().enumerate().map(|(k, w)| (w, k)).collect();
        Ok(TensorSpace { state, degree, basis, index, gram })
    }

    pub fn state(&self) -> &SemicircularState {
        &self.state
    }

    pub fn n(&self) -> usize {
        self.state.n()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[[Word; 2]] {
        &self.basis
    }

    pub fn gram(&self) -> &QMatrix {
        &self.gram
    }

    pub fn coords(&self, u: &TensorPoly2) -> Result<Vec<Rational>> {
        if let Some(d) = u.total_degree() {
            if d > self.degree {
                return Err(Error::DegreeOverflow { degree: d, bound: self.degree });
            }
        }
        let mut v = vec![Rational::zero(); self.dim()];
        for (legs, c) in u.terms() {
            v[self.index[legs]] = c.clone();
        }
        Ok(v)
    }

    pub fn tensor(&self, coords: &[Rational]) -> TensorPoly2 {
        TensorPoly2::from_terms(self.n(), self.basis.iter().cloned().zip(coords.iter().cloned()))
    }

    pub fn element(&self, k: usize) -> TensorPoly2 {
        TensorPoly2::simple(self.n(), self.basis[k].clone(), Rational::one())
    }

    pub fn label(&self, k: usize) -> String {
        format!("{} (x) {}", self.basis[k][0], self.basis[k][1])
    }
}

/// Matrix avatar of an operator `L` on a truncated space.
///
/// `form[a][b] = <L e_b, e_a>` is always available; `action` holds the
/// coefficient matrix (column `b` = coordinates of `L e_b`) when `L` maps the
/// space into itself. When both exist, `form = gram * action`.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub name: String,
    action: Option<QMatrix>,
    form: QMatrix,
    gram: QMatrix,
}

impl OperatorMatrix {
    pub fn from_action(name: impl Into<String>, action: QMatrix, gram: &QMatrix) -> Result<Self> {
        let form = gram.mul(&action)?;
        Ok(OperatorMatrix { name: name.into(), action: Some(action), form, gram: gram.clone() })
    }

    pub fn from_form(name: impl Into<String>, form: QMatrix, gram: &QMatrix) -> Self {
        OperatorMatrix { name: name.into(), action: None, form, gram: gram.clone() }
    }

    pub fn dim(&self) -> usize {
        self.form.rows()
    }

    pub fn action(&self) -> Option<&QMatrix> {
        self.action.as_ref()
    }

    pub fn form(&self) -> &QMatrix {
        &self.form
    }

    pub fn gram(&self) -> &QMatrix {
        &self.gram
    }

    /// Coefficient matrix in floating point; the Galerkin compression
    /// `G^{-1} form` when the exact action is unavailable.
    pub fn action_f64(&self) -> Result<DMatrix<f64>> {
        if let Some(a) = &self.action {
            return Ok(a.to_f64());
        }
        let chol = Cholesky::new(self.gram.to_f64()).ok_or_else(|| Error::Eigen("Gram matrix not positive definite".into()))?;
        Ok(chol.solve(&self.form.to_f64()))
    }

    /// Generalized eigenproblem of the symmetric part of the form against the Gram matrix.
    pub fn spectrum(&self, tol: f64) -> Result<Spectrum> {
        let e = eigen::generalized_symmetric(&eigen::symmetrize(&self.form.to_f64()), &self.gram.to_f64())?;
        let clusters = eigen::cluster(&e.values, tol);
        Ok(Spectrum { eigen: e, clusters, tol })
    }

    /// True when the form is symmetric, i.e. the operator is self-adjoint in the G-metric.
    pub fn is_self_adjoint(&self) -> bool {
        self.form.is_symmetric()
    }
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigen: GeneralizedEigen,
    pub clusters: Vec<Cluster>,
    pub tol: f64,
}

impl Spectrum {
    pub fn values(&self) -> &[f64] {
        &self.eigen.values
    }

    /// CSV with one row per eigenvalue: value, multiplicity of its cluster,
    /// then eigenvector coefficients in the monomial basis.
    pub fn to_csv(&self, labels: &[String]) -> String {
        let mut out = String::from("value,multiplicity");
        for l in labels {
            out.push(',');
            out.push_str(&csv_field(l));
        }
        out.push('\n');
        let mut k = 0;
        for c in &self.clusters {
            for _ in 0..c.multiplicity {
                out.push_str(&format!("{:.12},{}", self.eigen.values[k], c.multiplicity));
                for r in 0..self.eigen.vectors.nrows() {
                    out.push_str(&format!(",{:.12}", clean(self.eigen.vectors[(r, k)])));
                }
                out.push('\n');
                k += 1;
            }
        }
        out
    }
}

fn clean(x: f64) -> f64 {
    if x.abs() < 1e-14 {
        0.0
    } else {
        x
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Rejects conjugate vectors that would leak out of a degree truncation.
pub fn check_linear_conjugates(xi: &[NcPoly], n: usize) -> Result<()> {
    if xi.len() != n {
        return Err(Error::ConjugateLength { got: xi.len(), expected: n });
    }
    for (i, x) in xi.iter().enumerate() {
        if x.n() != n {
            return Err(Error::GeneratorMismatch { left: n, right: x.n() });
        }
        if let Some(d) = x.degree() {
            if d > 1 {
                return Err(Error::NonLinearConjugate { index: i, degree: d });
            }
        }
    }
    Ok(())
}

/// `d_i*(p (x) q) = p xi_i q - p (tau (x) id)(d_i q) - (id (x) tau)(d_i p) q`, extended linearly.
pub fn adjoint_fdq(i: usize, u: &TensorPoly2, xi: &[NcPoly], state: &SemicircularState) -> Result<NcPoly> {
    let n = u.n();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    if xi.len() != n {
        return Err(Error::ConjugateLength { got: xi.len(), expected: n });
    }
    let mut out = NcPoly::zero(n);
    for ([a, b], c) in u.terms() {
        let p = NcPoly::monomial(n, a.clone(), c.clone());
        let q = NcPoly::monomial(n, b.clone(), Rational::one());
        let main = &(&p * &xi[i]) * &q;
        let left = &p * &state.slice_left(&fdq(i, &q)?);
        let right = &state.slice_right(&fdq(i, &p)?) * &q;
        out = &(&(&out + &main) - &left) - &right;
    }
    Ok(out)
}

/// `Delta p = sum_i d_i*(d_i p)`, symbolically.
pub fn laplacian_poly(p: &NcPoly, xi: &[NcPoly], state: &SemicircularState) -> Result<NcPoly> {
    let mut out = NcPoly::zero(p.n());
    for i in 0..p.n() {
        out = &out + &adjoint_fdq(i, &fdq(i, p)?, xi, state)?;
    }
    Ok(out)
}

/// `Delta (x) id + id (x) Delta` on a tensor, symbolically.
pub fn tensor_laplacian_poly(u: &TensorPoly2, xi: &[NcPoly], state: &SemicircularState) -> Result<TensorPoly2> {
    let n = u.n();
    let mut out = TensorPoly2::zero(n);
    for ([a, b], c) in u.terms() {
        let pa = NcPoly::monomial(n, a.clone(), c.clone());
        let pb = NcPoly::monomial(n, b.clone(), Rational::one());
        let left = TensorPoly2::from_legs([&laplacian_poly(&pa, xi, state)?, &pb])?;
        let right = TensorPoly2::from_legs([&pa, &laplacian_poly(&pb, xi, state)?])?;
        out = &(&out + &left) + &right;
    }
    Ok(out)
}

/// Dirichlet form `sum_i <d_i Y, d_i Z>`.
pub fn dirichlet_pairing(y: &NcPoly, z: &NcPoly, state: &SemicircularState) -> Result<Rational> {
    let mut acc = Rational::zero();
    for i in 0..y.n() {
        acc += state.tensor_inner(&fdq(i, y)?, &fdq(i, z)?);
    }
    Ok(acc)
}

/// `E(Y) = sum_i ||d_i Y||^2`.
pub fn dirichlet_energy(y: &NcPoly, space: &TruncatedSpace) -> Result<Rational> {
    space.check_degree(y)?;
    dirichlet_pairing(y, y, space.state())
}

/// Exact matrix of the Dirichlet form on the monomial basis.
pub fn dirichlet_form(space: &TruncatedSpace) -> Result<QMatrix> {
    let m = space.dim();
    let n = space.n();
    let grads: Vec<Vec<TensorPoly2>> =
        (0..m).map(|k| (0..n).map(|i| fdq(i, &space.element(k))).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
    let mut k = QMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..=a {
            let mut acc = Rational::zero();
            for (gb, ga) in grads[b].iter().zip(&grads[a]) {
                acc += space.state().tensor_inner(gb, ga);
            }
            k[(a, b)] = acc.clone();
            k[(b, a)] = acc;
        }
    }
    Ok(k)
}

/// Matrix of `Delta` on the truncated space, built column by column from
/// the adjoint formula and checked exactly against the Dirichlet form
/// (`G * action == form`). A mismatch means `xi` is not the conjugate system
/// of the state.
pub fn laplacian(space: &TruncatedSpace, xi: &[NcPoly]) -> Result<OperatorMatrix> {
    check_linear_conjugates(xi, space.n())?;
    let m = space.dim();
    let mut action = QMatrix::zeros(m, m);
    for b in 0..m {
        let col = space.coords(&laplacian_poly(&space.element(b), xi, space.state())?)?;
        for (a, v) in col.into_iter().enumerate() {
            action[(a, b)] = v;
        }
    }
    let op = OperatorMatrix::from_action("laplacian", action, space.gram())?;
    let form = dirichlet_form(space)?;
    if op.form != form {
        return Err(Error::IdentityViolation(
            "adjoint-formula Laplacian disagrees with the Gram-adjoint Dirichlet form; xi is not conjugate to the model"
                .into(),
        ));
    }
    Ok(op)
}

#[derive(Clone, Debug, Serialize)]
pub struct PoincareResult {
    /// `1 / lambda_1`.
    pub constant: f64,
    /// `lambda_1`, the spectral gap on centered vectors.
    pub gap: f64,
    /// Multiplicity of the gap eigenvalue within tolerance.
    pub gap_multiplicity: usize,
    /// Minimizing centered vector, coordinates in the monomial basis, unit G-norm.
    pub minimizer: Vec<f64>,
    pub tol: f64,
}

/// Restriction of the Dirichlet form and Gram matrix to the centered
/// subspace, spanned by `e_b - tau(e_b) 1` for every non-unit word.
pub(crate) fn centered_pencil(space: &TruncatedSpace, form: &QMatrix) -> (QMatrix, QMatrix, Vec<Rational>) {
    let t = space.traces();
    let m = space.dim() - 1;
    let g = space.gram();
    let gc = QMatrix::from_fn(m, m, |a, b| &g[(a + 1, b + 1)] - &t[a + 1] * &t[b + 1]);
    // d(1) = 0, so the energy form is unchanged by centering.
    let kc = QMatrix::from_fn(m, m, |a, b| form[(a + 1, b + 1)].clone());
    (kc, gc, t)
}

pub(crate) fn uncenter(y: &[f64], traces: &[Rational]) -> Vec<f64> {
    let mut v = Vec::with_capacity(y.len() + 1);
    let shift: f64 = y.iter().zip(&traces[1..]).map(|(c, t)| c * rational::to_f64(t)).sum();
    v.push(-shift);
    v.extend_from_slice(y);
    v
}

/// Best free Poincare constant on the truncated space: `1 / lambda_1`, with
/// `lambda_1` the minimum of `E(f) / ||f||^2` over centered `f`.
pub fn poincare_constant(space: &TruncatedSpace, tol: f64) -> Result<PoincareResult> {
    if space.dim() < 2 {
        return Err(Error::Eigen("truncated space has no centered directions".into()));
    }
    let form = dirichlet_form(space)?;
    let (kc, gc, traces) = centered_pencil(space, &form);
    let e = eigen::generalized_symmetric(&kc.to_f64(), &gc.to_f64())?;
    let gap = e.values[0];
    if gap <= tol {
        return Err(Error::Eigen(format!("Dirichlet form degenerates on centered vectors (lambda_1 = {gap:e})")));
    }
    let gap_multiplicity = e.values.iter().take_while(|v| (*v - gap).abs() <= tol).count();
    let y: Vec<f64> = e.vectors.column(0).iter().copied().collect();
    Ok(PoincareResult { constant: 1.0 / gap, gap, gap_multiplicity, minimizer: uncenter(&y, &traces), tol })
}

/// Matrix of `Delta (x) id + id (x) Delta` on word pairs of total degree `<= d`,
/// cross-checked exactly against the tensor Dirichlet form
/// `sum_j <(d_j (x) id)U, (d_j (x) id)V> + <(id (x) d_j)U, (id (x) d_j)V>`.
pub fn tensor_laplacian(space: &TensorSpace, xi: &[NcPoly]) -> Result<OperatorMatrix> {
    check_linear_conjugates(xi, space.n())?;
    let m = space.dim();
    let n = space.n();
    let mut action = QMatrix::zeros(m, m);
    for b in 0..m {
        let col = space.coords(&tensor_laplacian_poly(&space.element(b), xi, space.state())?)?;
        for (a, v) in col.into_iter().enumerate() {
            action[(a, b)] = v;
        }
    }
    let op = OperatorMatrix::from_action("tensor_laplacian", action, space.gram())?;
    let mut grads = Vec::with_capacity(m);
    for k in 0..m {
        let e = space.element(k);
        let mut g = Vec::with_capacity(2 * n);
        for j in 0..n {
            g.push(tensor_fdq(j, Leg::Left, &e)?);
            g.push(tensor_fdq(j, Leg::Right, &e)?);
        }
        grads.push(g);
    }
    let mut form = QMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..=a {
            let mut acc = Rational::zero();
            for (x, y) in grads[b].iter().zip(&grads[a]) {
                acc += space.state().tensor_inner(x, y);
            }
            form[(a, b)] = acc.clone();
            form[(b, a)] = acc;
        }
    }
    if op.form != form {
        return Err(Error::IdentityViolation("tensor Dirichlet identity fails on the truncated tensor space".into()));
    }
    Ok(op)
}

/// `<Delta^(x) U, V>` and the tensor Dirichlet form, evaluated symbolically.
pub fn tensor_dirichlet_sides(
    u: &TensorPoly2,
    v: &TensorPoly2,
    xi: &[NcPoly],
    state: &SemicircularState,
) -> Result<(Rational, Rational)> {
    let lhs = state.tensor_inner(&tensor_laplacian_poly(u, xi, state)?, v);
    let mut rhs = Rational::zero();
    for j in 0..u.n() {
        for side in [Leg::Left, Leg::Right] {
            rhs += state.tensor_inner(&tensor_fdq(j, side, u)?, &tensor_fdq(j, side, v)?);
        }
    }
    Ok((lhs, rhs))
}

/// `eta_alpha = alpha (alpha + L)^{-1}` on the coefficient space.
pub fn resolvent(alpha: f64, l: &OperatorMatrix) -> Result<OperatorMatrix> {
    if alpha.is_nan() || alpha <= 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidConfig(format!("resolvent parameter must be positive, got {alpha}")));
    }
    let action = l
        .action()
        .ok_or_else(|| Error::InvalidConfig("resolvent needs an operator that preserves the space".into()))?;
    let a = rational::from_f64(alpha).expect("finite");
    let shifted = QMatrix::identity(l.dim()).scale(&a).add(action);
    // alpha > 0 and L >= 0 in the G-metric, so the shift is invertible.
    let inv = shifted.inverse().expect("alpha + L is invertible for alpha > 0");
    OperatorMatrix::from_action(format!("resolvent(alpha={alpha})"), inv.scale(&a), l.gram())
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolventProperties {
    pub alpha: f64,
    /// `||eta(1) - 1||`, exact then converted.
    pub unital_residual: f64,
    /// `max_b |tau(eta e_b) - tau(e_b)|`, exact then converted.
    pub trace_residual: f64,
    /// Operator norm of `eta` in the G-metric.
    pub l2_norm: f64,
    /// Operator norm of `id - eta` in the G-metric (bounded by 2).
    pub defect_norm: f64,
}

pub fn resolvent_properties(alpha: f64, eta: &OperatorMatrix, space: &TruncatedSpace) -> Result<ResolventProperties> {
    let act = eta.action().ok_or_else(|| Error::InvalidConfig("resolvent has no action matrix".into()))?;
    let m = space.dim();
    let unit_idx = 0;
    let mut diff = act.column(unit_idx);
    diff[unit_idx] -= Rational::one();
    let unital = space.gram().bilinear(&diff, &diff);
    let traces = space.traces();
    let mut trace_residual = Rational::zero();
    for b in 0..m {
        let col = act.column(b);
        let t: Rational = col.iter().zip(&traces).fold(Rational::zero(), |acc, (c, t)| acc + c * t);
        let r = (t - &traces[b]).abs();
        if r > trace_residual {
            trace_residual = r;
        }
    }
    let g = space.gram().to_f64();
    let a = act.to_f64();
    let l2_norm = eigen::operator_norm_in_metric(&a, &g)?;
    let defect = DMatrix::identity(m, m) - &a;
    let defect_norm = eigen::operator_norm_in_metric(&defect, &g)?;
    Ok(ResolventProperties {
        alpha,
        unital_residual: rational::to_f64(&unital).max(0.0).sqrt(),
        trace_residual: rational::to_f64(&trace_residual),
        l2_norm,
        defect_norm,
    })
}

/// Second-gradient energy, computed two ways that must agree exactly:
/// `sum_i <Delta^(x) d_i Y, d_i Y>` and
/// `sum_{i,j} ||(d_j (x) id) d_i Y||^2 + ||(id (x) d_j) d_i Y||^2`.
pub fn energy2(y: &NcPoly, space: &TruncatedSpace, xi: &[NcPoly]) -> Result<Rational> {
    space.check_degree(y)?;
    check_linear_conjugates(xi, space.n())?;
    let st = space.state();
    let mut via_laplacian = Rational::zero();
    let mut via_second = Rational::zero();
    for i in 0..y.n() {
        let g = fdq(i, y)?;
        via_laplacian += st.tensor_inner(&tensor_laplacian_poly(&g, xi, st)?, &g);
        for j in 0..y.n() {
            via_second += st.tensor_norm_sq(&tensor_fdq(j, Leg::Left, &g)?);
            via_second += st.tensor_norm_sq(&tensor_fdq(j, Leg::Right, &g)?);
        }
    }
    if via_laplacian != via_second {
        return Err(Error::IdentityViolation(format!(
            "second-gradient energy mismatch: {} vs {}",
            rational::format(&via_laplacian),
            rational::format(&via_second)
        )));
    }
    Ok(via_second)
}

/// `C_xi(Y) = sum_{i,j} <d_j Y # d_i xi_j, d_i Y>`; `d_i xi_j` is entry `(j, i)` of the Jacobian.
pub fn curvature_contraction(y: &NcPoly, jac: &JacobianTensor, state: &SemicircularState) -> Result<Rational> {
    let n = y.n();
    if jac.n() != n {
        return Err(Error::GeneratorMismatch { left: n, right: jac.n() });
    }
    let grads: Vec<TensorPoly2> = (0..n).map(|i| fdq(i, y)).collect::<Result<_>>()?;
    let mut acc = Rational::zero();
    for i in 0..n {
        for j in 0..n {
            acc += state.tensor_inner(&grads[j].sharp(jac.entry(j, i))?, &grads[i]);
        }
    }
    Ok(acc)
}

/// `d_i Delta x - Delta^(x) d_i x - sum_j d_j x # d_i xi_j`, which vanishes
/// identically; returns the residual tensor and its squared norm.
pub fn almost_commutation_residual(
    i: usize,
    x: &NcPoly,
    xi: &[NcPoly],
    state: &SemicircularState,
) -> Result<(TensorPoly2, Rational)> {
    check_linear_conjugates(xi, x.n())?;
    let lhs = fdq(i, &laplacian_poly(x, xi, state)?)?;
    let mut rhs = tensor_laplacian_poly(&fdq(i, x)?, xi, state)?;
    for (j, xj) in xi.iter().enumerate() {
        rhs = &rhs + &fdq(j, x)?.sharp(&fdq(i, xj)?)?;
    }
    let r = &lhs - &rhs;
    let norm = state.tensor_norm_sq(&r);
    Ok((r, norm))
}

/// Float evaluation helper: `v^T M v` for an exact matrix.
pub fn quadratic_f64(m: &QMatrix, v: &[f64]) -> f64 {
    let mf = m.to_f64();
    let dv = DVector::from_column_slice(v);
    (dv.transpose() * mf * &dv)[(0, 0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::parse_poly;
    use crate::rational::{frac, int};
    use crate::state::CovarianceModel;

    fn std_space(n: usize, d: usize) -> TruncatedSpace {
        TruncatedSpace::new(SemicircularState::standard(n), d).unwrap()
    }

    fn a_model(diag: &[Rational]) -> SemicircularState {
        SemicircularState::new(CovarianceModel::diagonal_precision(diag).unwrap())
    }

    #[test]
    fn dims() {
        assert_eq!(std_space(2, 4).dim(), TruncatedSpace::expected_dim(2, 4));
        assert_eq!(std_space(1, 3).dim(), 4);
        assert_eq!(TruncatedSpace::expected_dim(3, 3), 40);
    }

    #[test]
    fn adjoint_examples() {
        let st = SemicircularState::standard(1);
        let xi = vec![parse_poly("X1", Some(1)).unwrap()];
        let one = TensorPoly2::unit(1);
        assert_eq!(adjoint_fdq(0, &one, &xi, &st).unwrap(), xi[0]);
        let u = TensorPoly2::from_legs([&NcPoly::one(1), &xi[0]]).unwrap();
        assert_eq!(adjoint_fdq(0, &u, &xi, &st).unwrap(), parse_poly("X1^2 - 1", Some(1)).unwrap());
    }

    #[test]
    fn adjoint_duality_exact() {
        let a = QMatrix::from_rows(vec![vec![int(2), int(1)], vec![int(1), int(3)]]).unwrap();
        let model = CovarianceModel::from_precision(&a).unwrap();
        let xi = model.linear_conjugates();
        let st = SemicircularState::new(model);
        let us = ["X1 (x) X2", "X2 X1 (x) 1", "1 (x) X1 X1", "X2 (x) X2 X1"];
        for u in us {
            let u = crate::ncpoly::parse_tensor2(u, Some(2)).unwrap();
            for h in Word::all_up_to(2, 4) {
                let h = NcPoly::monomial(2, h, int(1));
                for i in 0..2 {
                    let lhs = st.inner(&adjoint_fdq(i, &u, &xi, &st).unwrap(), &h);
                    let rhs = st.tensor_inner(&u, &fdq(i, &h).unwrap());
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn laplacian_one_variable_spectrum() {
        let sp = std_space(1, 3);
        let xi = sp.state().model().linear_conjugates();
        let l = laplacian(&sp, &xi).unwrap();
        let s = l.spectrum(DEFAULT_TOL).unwrap();
        for (v, e) in s.values().iter().zip([0.0, 1.0, 2.0, 3.0]) {
            assert!((v - e).abs() < 1e-10, "{v} vs {e}");
        }
        // Delta(1) = 0 and tau o Delta = 0 columnwise
        let act = l.action().unwrap();
        assert!(act.column(0).iter().all(Zero::is_zero));
        let t = sp.traces();
        for b in 0..sp.dim() {
            let tr = act.column(b).iter().zip(&t).fold(int(0), |acc, (c, t)| acc + c * t);
            assert!(tr.is_zero());
        }
    }

    #[test]
    fn nonlinear_conjugates_rejected() {
        let sp = std_space(1, 2);
        let xi = vec![parse_poly("X1^3", Some(1)).unwrap()];
        assert!(matches!(laplacian(&sp, &xi), Err(Error::NonLinearConjugate { index: 0, degree: 3 })));
    }

    #[test]
    fn wrong_conjugates_detected() {
        let sp = std_space(2, 2);
        let xi = vec![parse_poly("2 X1", Some(2)).unwrap(), parse_poly("X2", Some(2)).unwrap()];
        assert!(matches!(laplacian(&sp, &xi), Err(Error::IdentityViolation(_))));
    }

    #[test]
    fn energy_examples() {
        let sp = std_space(2, 3);
        assert_eq!(dirichlet_energy(&parse_poly("X1", Some(2)).unwrap(), &sp).unwrap(), int(1));
        assert_eq!(dirichlet_energy(&NcPoly::one(2), &sp).unwrap(), int(0));
        assert!(matches!(
            dirichlet_energy(&parse_poly("X1^4", Some(2)).unwrap(), &sp),
            Err(Error::DegreeOverflow { degree: 4, bound: 3 })
        ));
    }

    #[test]
    fn poincare_a_model() {
        let sp = TruncatedSpace::new(a_model(&[int(1), int(2)]), 3).unwrap();
        let r = poincare_constant(&sp, DEFAULT_TOL).unwrap();
        assert!((r.constant - 1.0).abs() < 1e-8);
        // minimizer proportional to X1
        let x1 = sp.basis().iter().position(|w| *w == Word::letter(0)).unwrap();
        let others: f64 = r.minimizer.iter().enumerate().filter(|(k, _)| *k != x1).map(|(_, v)| v.abs()).sum();
        assert!(others < 1e-8 && (r.minimizer[x1].abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn tensor_laplacian_examples() {
        let st = a_model(&[int(2), int(3)]);
        let xi = st.model().linear_conjugates();
        let ts = TensorSpace::new(st.clone(), 2).unwrap();
        let op = tensor_laplacian(&ts, &xi).unwrap();
        let unit_col = op.action().unwrap().column(0);
        assert!(unit_col.iter().all(Zero::is_zero));
        // X1 (x) X2 is an eigenvector with eigenvalue a_1 + a_2
        let u = crate::ncpoly::parse_tensor2("X1 (x) X2", Some(2)).unwrap();
        let lu = tensor_laplacian_poly(&u, &xi, &st).unwrap();
        assert_eq!(lu, u.scale(&int(5)));
    }

    #[test]
    fn resolvent_properties_standard() {
        let sp = std_space(2, 3);
        let xi = sp.state().model().linear_conjugates();
        let l = laplacian(&sp, &xi).unwrap();
        let mut last = f64::INFINITY;
        for alpha in [1.0, 10.0, 100.0] {
            let eta = resolvent(alpha, &l).unwrap();
            let p = resolvent_properties(alpha, &eta, &sp).unwrap();
            assert!(p.unital_residual <= 1e-10 && p.trace_residual <= 1e-10);
            assert!(p.l2_norm <= 1.0 + 1e-10);
            assert!(p.defect_norm <= 2.0 + 1e-10);
            assert!(p.defect_norm < last);
            last = p.defect_norm;
        }
        assert!(resolvent(0.0, &l).is_err());
        assert!(resolvent(-1.0, &l).is_err());
    }

    #[test]
    fn energy2_examples() {
        let sp = std_space(2, 3);
        let xi = sp.state().model().linear_conjugates();
        assert_eq!(energy2(&parse_poly("X1", Some(2)).unwrap(), &sp, &xi).unwrap(), int(0));
        assert_eq!(energy2(&parse_poly("X1^2", Some(2)).unwrap(), &sp, &xi).unwrap(), int(2));
    }

    #[test]
    fn almost_commutation_examples() {
        let st = SemicircularState::standard(2);
        let xi = st.model().linear_conjugates();
        let (_, r) = almost_commutation_residual(0, &parse_poly("X1", Some(2)).unwrap(), &xi, &st).unwrap();
        assert!(r.is_zero());
        let st = a_model(&[int(1), int(2)]);
        let xi = st.model().linear_conjugates();
        for i in 0..2 {
            let (_, r) = almost_commutation_residual(i, &parse_poly("X1 X2", Some(2)).unwrap(), &xi, &st).unwrap();
            assert!(r.is_zero());
        }
        let _ = frac(1, 2);
    }
}
