//! The free Obata pipeline: saturators of the Poincare inequality, affine
//! rigidity, orthogonal splitting, and semicircularity and freeness of the
//! split directions.

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::curvature::{cd_certificate, CdCertificate, JacobianTensor};
use crate::eigen;
use crate::error::{Error, Result};
use crate::exact::{rref_f64, QMatrix};
use crate::ncpoly::{NcPoly, Word};
use crate::rational::{self, Rational};
use crate::spectral::{self, laplacian, laplacian_poly, OperatorMatrix, TensorSpace, TruncatedSpace};
use crate::state::SemicircularState;

const MAX_RATIONAL_DEN: i64 = 1000;

/// Eigenvectors of `Delta` at eigenvalue 1 among centered vectors.
#[derive(Clone, Debug)]
pub struct Saturators {
    pub eigenvalues: Vec<f64>,
    /// Full coordinates in the monomial basis, G-orthonormal.
    pub vectors: Vec<Vec<f64>>,
    /// Rational basis of the same eigenspace with `Delta f = f` verified
    /// exactly, when the float vectors could be rationalized.
    pub exact: Option<Vec<NcPoly>>,
}

impl Saturators {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// The eigenspace basis as polynomials: the exact basis when available,
    /// otherwise the float vectors converted to binary rationals.
    pub fn polys(&self, space: &TruncatedSpace) -> Vec<NcPoly> {
        match &self.exact {
            Some(p) => p.clone(),
            None => self.vectors.iter().map(|v| dyadic_poly(space, v)).collect(),
        }
    }
}

pub fn dyadic_poly(space: &TruncatedSpace, v: &[f64]) -> NcPoly {
    space.poly(&v.iter().map(|x| rational::from_f64(*x).unwrap_or_else(Rational::zero)).collect::<Vec<_>>())
}

pub fn find_saturators(space: &TruncatedSpace, lap: &OperatorMatrix, xi: &[NcPoly], tol: f64) -> Result<Saturators> {
    if space.dim() < 2 {
        return Ok(Saturators { eigenvalues: vec![], vectors: vec![], exact: Some(vec![]) });
    }
    let (kc, gc, traces) = spectral::centered_pencil(space, lap.form());
    let e = eigen::generalized_symmetric(&kc.to_f64(), &gc.to_f64())?;
    let mut eigenvalues = Vec::new();
    let mut vectors = Vec::new();
    for (k, v) in e.values.iter().enumerate() {
        if (v - 1.0).abs() <= tol {
            eigenvalues.push(*v);
            let y: Vec<f64> = e.vectors.column(k).iter().copied().collect();
            vectors.push(spectral::uncenter(&y, &traces));
        }
    }
    let exact = rationalize(space, &vectors, xi);
    Ok(Saturators { eigenvalues, vectors, exact })
}

/// Rational basis of the span of `vectors`: float RREF, continued-fraction
/// rounding, then an exact check of `Delta f = f` and `tau(f) = 0`.
fn rationalize(space: &TruncatedSpace, vectors: &[Vec<f64>], xi: &[NcPoly]) -> Option<Vec<NcPoly>> {
    if vectors.is_empty() {
        return Some(vec![]);
    }
    let rows = DMatrix::from_fn(vectors.len(), space.dim(), |i, j| vectors[i][j]);
    let r = rref_f64(&rows, 1e-9);
    if r.nrows() != vectors.len() {
        return None;
    }
    let mut out = Vec::with_capacity(r.nrows());
    for i in 0..r.nrows() {
        let coords: Option<Vec<Rational>> =
            r.row(i).iter().map(|x| rational::approximate(*x, MAX_RATIONAL_DEN, 1e-9)).collect();
        let f = space.poly(&coords?);
        let lf = laplacian_poly(&f, xi, space.state()).ok()?;
        if lf != f || !space.state().trace(&f).is_zero() {
            return None;
        }
        out.push(f);
    }
    Some(out)
}

/// G-norm of `f` minus its G-orthogonal projection onto `span{1, X_1, ..., X_n}`.
pub fn affine_check(f: &NcPoly, space: &TruncatedSpace) -> Result<f64> {
    let v: Vec<f64> = space.coords(f)?.iter().map(rational::to_f64).collect();
    affine_residual_f64(&v, space)
}

pub fn affine_residual_f64(v: &[f64], space: &TruncatedSpace) -> Result<f64> {
    let g = space.gram().to_f64();
    // Graded order puts 1, X_1, ..., X_n first.
    let s = (space.n() + 1).min(space.dim());
    let gss = g.view((0, 0), (s, s)).into_owned();
    let x = nalgebra::DVector::from_column_slice(v);
    let gx = &g * &x;
    let rhs = gx.rows(0, s).into_owned();
    let chol = nalgebra::Cholesky::new(gss.clone()).ok_or_else(|| Error::Eigen("affine Gram block not positive definite".into()))?;
    let a = chol.solve(&rhs);
    let mut resid = x.clone();
    for k in 0..s {
        resid[k] -= a[k];
    }
    Ok(resid.dot(&(&g * &resid)).max(0.0).sqrt())
}

/// `(1/2 (f + f*), 1/2 (f - f*))`. Over the rationals the second component is
/// the skew-adjoint part; the imaginary part of `f` is `-i` times it.
pub fn realify(f: &NcPoly) -> (NcPoly, NcPoly) {
    let half = rational::frac(1, 2);
    let s = f.star();
    ((f + &s).scale(&half), (f - &s).scale(&half))
}

/// Coefficients of `X_1, ..., X_n` in `f`.
pub fn linear_part(f: &NcPoly) -> Vec<Rational> {
    (0..f.n()).map(|j| f.coeff(&Word::letter(j))).collect()
}

/// Completes orthonormal rows `u` to an orthogonal matrix by Gram-Schmidt
/// over the seeds `e_1, ..., e_n`; the last added row is negated if needed so
/// that `det U = +1`.
pub fn orthogonal_completion(u: &[Vec<f64>], n: usize, tol: f64) -> Result<DMatrix<f64>> {
    let r = u.len();
    if r > n || u.iter().any(|row| row.len() != n) {
        return Err(Error::RankDeficient);
    }
    let mut rows: Vec<nalgebra::DVector<f64>> = u.iter().map(|v| nalgebra::DVector::from_column_slice(v)).collect();
    for a in 0..r {
        for b in 0..=a {
            let target = if a == b { 1.0 } else { 0.0 };
            let dev = (rows[a].dot(&rows[b]) - target).abs();
            if dev > tol {
                return Err(Error::NotOrthogonal(dev));
            }
        }
    }
    for k in 0..n {
        if rows.len() == n {
            break;
        }
        let mut v = nalgebra::DVector::zeros(n);
        v[k] = 1.0;
        for _ in 0..2 {
            for q in &rows {
                let d = q.dot(&v);
                v -= q * d;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            rows.push(v / norm);
        }
    }
    let mut m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    if r < n && m.determinant() < 0.0 {
        m.row_mut(n - 1).neg_mut();
    }
    Ok(m)
}

/// Exact variant: rows of the result are mutually orthogonal (not normalized);
/// the first rows are the input rows, orthogonalized in order.
pub fn orthogonal_completion_exact(u: &[Vec<Rational>], n: usize) -> Result<QMatrix> {
    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(n);
    let dot = |a: &[Rational], b: &[Rational]| a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y);
    let reduce = |rows: &[Vec<Rational>], v: &[Rational]| {
        let mut v = v.to_vec();
        for q in rows {
            let c = dot(q, &v) / dot(q, q);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= &c * y;
            }
        }
        v
    };
    for row in u {
        if row.len() != n {
            return Err(Error::RankDeficient);
        }
        let v = reduce(&rows, row);
        if v.iter().all(Zero::is_zero) {
            return Err(Error::RankDeficient);
        }
        rows.push(v);
    }
    for k in 0..n {
        if rows.len() == n {
            break;
        }
        let e: Vec<Rational> = (0..n).map(|j| if j == k { Rational::one() } else { Rational::zero() }).collect();
        let v = reduce(&rows, &e);
        if !v.iter().all(Zero::is_zero) {
            rows.push(v);
        }
    }
    QMatrix::from_rows(rows)
}

#[derive(Clone, Debug)]
pub struct ChangeOfVariables {
    /// `Y_i = sum_j B_ij (X_j - tau(X_j))`.
    pub y: Vec<NcPoly>,
    /// `xi_{Y_i} = sum_j B_ij xi_j / |B_i|^2`.
    pub xi_y: Vec<NcPoly>,
    /// `B C B^T`.
    pub covariance: QMatrix,
}

/// Linear change of variables along a matrix `B` with mutually orthogonal
/// rows (orthogonal up to row scaling).
pub fn change_of_variables(b: &QMatrix, state: &SemicircularState, xi: &[NcPoly], tol: f64) -> Result<ChangeOfVariables> {
    let n = state.n();
    if b.rows() != n || b.cols() != n || xi.len() != n {
        return Err(Error::InvalidConfig("change of variables needs an n x n matrix".into()));
    }
    let bbt = b.mul(&b.transpose())?;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            let scale = (rational::to_f64(&bbt[(i, i)]) * rational::to_f64(&bbt[(j, j)])).sqrt();
            worst = worst.max(rational::to_f64(&bbt[(i, j)]).abs() / scale);
        }
    }
    if worst > tol {
        return Err(Error::NotOrthogonal(worst));
    }
    let gens: Vec<NcPoly> = (0..n).map(|j| state.center(&NcPoly::generator(n, j).expect("in range"))).collect();
    let mut y = Vec::with_capacity(n);
    let mut xi_y = Vec::with_capacity(n);
    for i in 0..n {
        let norm = &bbt[(i, i)];
        if norm.is_zero() {
            return Err(Error::RankDeficient);
        }
        let mut yi = NcPoly::zero(n);
        let mut xii = NcPoly::zero(n);
        for j in 0..n {
            yi = &yi + &gens[j].scale(&b[(i, j)]);
            xii = &xii + &xi[j].scale(&(&b[(i, j)] / norm));
        }
        y.push(yi);
        xi_y.push(xii);
    }
    let covariance = b.mul(state.model().covariance())?.mul(&b.transpose())?;
    Ok(ChangeOfVariables { y, xi_y, covariance })
}

/// Moments of the standard semicircle by the recursion
/// `m_{k+2} = sum_{j=0}^{k} m_j m_{k-j}`.
pub fn semicircle_moments(max: usize) -> Vec<Rational> {
    let mut m = vec![Rational::zero(); max + 1];
    m[0] = Rational::one();
    for k in 2..=max {
        let mut acc = Rational::zero();
        for j in 0..=k - 2 {
            acc += &m[j] * &m[k - 2 - j];
        }
        m[k] = acc;
    }
    m
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub order: usize,
    /// Normalized moment `tau(f^m) / Var(f)^{m/2}` for even `m`, raw `tau(f^m)` for odd `m`.
    pub value: String,
    pub expected: String,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SemicircularCheck {
    pub variance: String,
    pub moments: Vec<MomentRow>,
    pub max_residual: f64,
    pub exact_zero: bool,
}

pub fn semicircular_check(f: &NcPoly, state: &SemicircularState, max_moment: usize) -> Result<SemicircularCheck> {
    let f = state.center(f);
    let var = state.norm_sq(&f);
    if var.is_zero() {
        return Err(Error::InvalidModel("semicircular check of a zero-variance element".into()));
    }
    let expected = semicircle_moments(max_moment);
    let mut moments = Vec::with_capacity(max_moment);
    let mut max_residual: f64 = 0.0;
    let mut exact_zero = true;
    let mut power = NcPoly::one(f.n());
    for (m, target) in expected.iter().enumerate().skip(1) {
        power = &power * &f;
        let t = state.trace(&power);
        let value = if m % 2 == 0 {
            let mut v = t;
            for _ in 0..m / 2 {
                v /= &var;
            }
            v
        } else {
            t
        };
        let res = (&value - target).abs();
        exact_zero &= res.is_zero();
        let r = rational::to_f64(&res);
        max_residual = max_residual.max(r);
        moments.push(MomentRow {
            order: m,
            value: rational::format(&value),
            expected: rational::format(target),
            residual: r,
        });
    }
    Ok(SemicircularCheck { variance: rational::format(&var), moments, max_residual, exact_zero })
}

#[derive(Clone, Debug, Serialize)]
pub struct FreenessCheck {
    pub family_a: Vec<usize>,
    pub family_b: Vec<usize>,
    pub max_degree: usize,
    pub products_checked: usize,
    pub max_residual: f64,
    pub exact_zero: bool,
}

/// Maximum of `|tau(a_1 b_1 a_2 ...)|` over alternating products of at least
/// two centered words, each in one family, of total degree `<= max_degree`.
pub fn freeness_check(a: &[NcPoly], b: &[NcPoly], state: &SemicircularState, max_degree: usize) -> Result<(usize, Rational)> {
    if a.is_empty() || b.is_empty() {
        return Ok((0, Rational::zero()));
    }
    let n = state.n();
    let families = [centered_words(a, state, max_degree), centered_words(b, state, max_degree)];
    let mut count = 0;
    let mut worst = Rational::zero();
    for start in 0..2 {
        let mut stack: Vec<(NcPoly, usize, usize, usize)> = vec![(NcPoly::one(n), start, 0, 0)];
        while let Some((cur, fam, deg, factors)) = stack.pop() {
            for (k, words) in families[fam].iter().enumerate() {
                let d = k + 1;
                if deg + d > max_degree {
                    break;
                }
                for w in words {
                    let next = &cur * w;
                    if factors + 1 >= 2 {
                        count += 1;
                        let t = state.trace(&next).abs();
                        if t > worst {
                            worst = t;
                        }
                    }
                    stack.push((next, 1 - fam, deg + d, factors + 1));
                }
            }
        }
    }
    Ok((count, worst))
}

/// Centered products of the family's generators, grouped by length.
fn centered_words(family: &[NcPoly], state: &SemicircularState, max_degree: usize) -> Vec<Vec<NcPoly>> {
    let n = state.n();
    let mut out: Vec<Vec<NcPoly>> = Vec::with_capacity(max_degree);
    let mut raw: Vec<NcPoly> = vec![NcPoly::one(n)];
    for _ in 0..max_degree {
        raw = raw.iter().flat_map(|p| family.iter().map(move |g| p * g)).collect();
        out.push(raw.iter().map(|p| state.center(p)).collect());
    }
    out
}

/// `tau(f g) - (tau (x) tau)(sum_k c_k d_k g)` for `f = sum_k c_k X_k`.
/// Vanishes for every `g` exactly when `C c = c`.
pub fn stein_residual(c: &[Rational], g: &NcPoly, state: &SemicircularState) -> Result<Rational> {
    let n = state.n();
    let f = NcPoly::linear(c);
    let lhs = state.trace(&f.checked_mul(g)?);
    let mut rhs = Rational::zero();
    for (k, ck) in c.iter().enumerate() {
        if !ck.is_zero() {
            rhs += ck * state.trace2(&crate::calculus::fdq(k, g)?);
        }
    }
    debug_assert_eq!(f.n(), n);
    Ok(lhs - rhs)
}

#[derive(Clone, Debug, Serialize)]
pub struct RigidityTolerances {
    pub eigen: f64,
    pub affine: f64,
    pub orthogonality: f64,
    pub moments: f64,
    pub max_moment: usize,
    pub freeness_degree: usize,
    pub stein_degree: usize,
    pub cd_degree: usize,
}

impl Default for RigidityTolerances {
    fn default() -> Self {
        RigidityTolerances {
            eigen: 1e-8,
            affine: 1e-8,
            orthogonality: 1e-12,
            moments: 1e-10,
            max_moment: 8,
            freeness_degree: 6,
            stein_degree: 5,
            cd_degree: 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SaturatorEntry {
    pub poly: String,
    /// Unit coefficient vector in `R^n`.
    pub u: Vec<f64>,
    pub affine_residual: f64,
    pub skew_part_zero: bool,
    pub energy: f64,
    pub energy2: f64,
    /// `E2(Y) - (E(Y) - C_xi(Y))`.
    pub energy_identity_residual: f64,
    pub stein_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitDirection {
    pub index: usize,
    pub y: String,
    pub variance: String,
    /// `xi_{Y} - Y / Var(Y)` in L^2.
    pub conjugate_residual: f64,
    pub semicircular: SemicircularCheck,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Split { r: usize, message: String },
    Vacuous { message: String },
    Failed { stage: String, message: String },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        !matches!(self, Verdict::Failed { .. })
    }

    pub fn message(&self) -> &str {
        match self {
            Verdict::Split { message, .. } | Verdict::Vacuous { message } | Verdict::Failed { message, .. } => message,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RigidityReport {
    pub n: usize,
    pub degree: usize,
    pub cd: CdCertificate,
    pub r: usize,
    pub exact: bool,
    pub saturators: Vec<SaturatorEntry>,
    /// Rows of the orthogonal completion `U`.
    pub u_matrix: Vec<Vec<f64>>,
    pub covariance_y: Vec<Vec<String>>,
    pub directions: Vec<SplitDirection>,
    pub freeness: Vec<FreenessCheck>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    pub tolerances: RigidityTolerances,
}

impl RigidityReport {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

fn fail(stage: &str, message: impl Into<String>) -> Verdict {
    Verdict::Failed { stage: stage.into(), message: message.into() }
}

/// Runs the full pipeline on the degree-`d` truncation.
pub fn obata_report(state: &SemicircularState, xi: &[NcPoly], d: usize, tols: &RigidityTolerances) -> Result<RigidityReport> {
    let n = state.n();
    let space = TruncatedSpace::new(state.clone(), d)?;
    let lap = laplacian(&space, xi)?;
    let jac = JacobianTensor::of(xi)?;
    let tspace = TensorSpace::new(state.clone(), tols.cd_degree)?;
    let cd = cd_certificate(&jac, &tspace, tols.eigen)?;
    let mut report = RigidityReport {
        n,
        degree: d,
        cd: cd.clone(),
        r: 0,
        exact: false,
        saturators: vec![],
        u_matrix: vec![],
        covariance_y: vec![],
        directions: vec![],
        freeness: vec![],
        verdict: fail("cd", ""),
        notes: vec![format!(
            "the eigenspace at 1 is computed in a degree-{d} truncation, so its finite dimension is an artifact of truncation and does not verify a finiteness hypothesis"
        )],
        tolerances: tols.clone(),
    };
    if !cd.certifies(1.0) {
        report.verdict =
            fail("cd", format!("curvature certificate {:.6} below 1; saturator analysis not applicable", cd.min_eigenvalue));
        return Ok(report);
    }
    let sat = find_saturators(&space, &lap, xi, tols.eigen)?;
    report.r = sat.dim();
    report.exact = sat.exact.is_some();
    if sat.dim() == 0 {
        report.verdict = Verdict::Vacuous { message: "no saturator; rigidity hypothesis vacuous".into() };
        return Ok(report);
    }
    if sat.dim() > n {
        report.verdict = fail("find_saturators", format!("eigenspace dimension {} exceeds n = {n}", sat.dim()));
        return Ok(report);
    }
    let polys = sat.polys(&space);
    let mut coeffs: Vec<Vec<Rational>> = Vec::with_capacity(polys.len());
    for f in &polys {
        let (re, skew) = realify(f);
        let affine = affine_check(&re, &space)?;
        let e = spectral::dirichlet_energy(&re, &space)?;
        let e2 = spectral::energy2(&re, &space, xi)?;
        let c = spectral::curvature_contraction(&re, &jac, state)?;
        let identity = &e2 - &(&e - &c);
        let lin = linear_part(&re);
        let mut stein: f64 = 0.0;
        for w in Word::all_up_to(n, tols.stein_degree) {
            let g = NcPoly::monomial(n, w, Rational::one());
            stein = stein.max(rational::to_f64(&stein_residual(&lin, &g, state)?).abs());
        }
        let lin_f: Vec<f64> = lin.iter().map(rational::to_f64).collect();
        let norm = lin_f.iter().map(|x| x * x).sum::<f64>().sqrt();
        report.saturators.push(SaturatorEntry {
            poly: re.to_string(),
            u: lin_f.iter().map(|x| x / norm).collect(),
            affine_residual: affine,
            skew_part_zero: skew.is_zero(),
            energy: rational::to_f64(&e),
            energy2: rational::to_f64(&e2),
            energy_identity_residual: rational::to_f64(&identity).abs(),
            stein_residual: stein,
        });
        coeffs.push(lin);
    }
    if let Some(bad) = report.saturators.iter().find(|s| s.affine_residual > tols.affine) {
        report.verdict = fail("affine_check", format!("saturator {} is not affine (residual {:e})", bad.poly, bad.affine_residual));
        return Ok(report);
    }
    if let Some(bad) = report.saturators.iter().find(|s| s.energy2.abs() > tols.moments || s.stein_residual > tols.moments) {
        report.verdict = fail("energy2", format!("saturator {} has nonzero second-gradient energy or Stein defect", bad.poly));
        return Ok(report);
    }

    let b = if report.exact {
        orthogonal_completion_exact(&coeffs, n)?
    } else {
        // Orthonormalize float coefficient rows, then complete.
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for c in &coeffs {
            let mut v: Vec<f64> = c.iter().map(rational::to_f64).collect();
            for q in &rows {
                let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
            }
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            rows.push(v.iter().map(|x| x / nv).collect());
        }
        let u = orthogonal_completion(&rows, n, 1e-10)?;
        QMatrix::from_fn(n, n, |i, j| rational::from_f64(u[(i, j)]).unwrap_or_else(Rational::zero))
    };
    let bf = b.to_f64();
    report.u_matrix = (0..n)
        .map(|i| {
            let row = bf.row(i);
            let nr = row.norm();
            row.iter().map(|x| x / nr).collect()
        })
        .collect();
    let change = match change_of_variables(&b, state, xi, if report.exact { 0.0 } else { 1e-10 }) {
        Ok(c) => c,
        Err(e) => {
            report.verdict = fail("change_of_variables", e.to_string());
            return Ok(report);
        }
    };
    report.covariance_y = change.covariance.to_strings();
    let ystate = state;
    for k in 0..n {
        let y = &change.y[k];
        let var = ystate.variance(y);
        let target = y.scale(&(Rational::one() / &var));
        let conj = ystate.norm_sq(&(&change.xi_y[k] - &target));
        let semicircular = semicircular_check(y, ystate, tols.max_moment)?;
        report.directions.push(SplitDirection {
            index: k,
            y: y.to_string(),
            variance: rational::format(&var),
            conjugate_residual: rational::to_f64(&conj).max(0.0).sqrt(),
            semicircular,
        });
    }
    let r = report.r;
    let tol_m = if report.exact { 0.0 } else { tols.moments };
    if let Some(bad) = report.directions[..r]
        .iter()
        .find(|d| d.semicircular.max_residual > tol_m || d.conjugate_residual > tol_m)
    {
        report.verdict = fail(
            "semicircular_check",
            format!("direction {} fails semicircularity (moment residual {:e})", bad.y, bad.semicircular.max_residual),
        );
        return Ok(report);
    }
    let mut pairs: Vec<(Vec<usize>, Vec<usize>)> = (0..r).map(|k| (vec![k], (0..n).filter(|&j| j != k).collect())).collect();
    if r > 1 && r < n {
        pairs.push(((0..r).collect(), (r..n).collect()));
    }
    for (fa, fb) in pairs {
        let a: Vec<NcPoly> = fa.iter().map(|&k| change.y[k].clone()).collect();
        let bb: Vec<NcPoly> = fb.iter().map(|&k| change.y[k].clone()).collect();
        let (count, worst) = freeness_check(&a, &bb, ystate, tols.freeness_degree)?;
        report.freeness.push(FreenessCheck {
            family_a: fa,
            family_b: fb,
            max_degree: tols.freeness_degree,
            products_checked: count,
            max_residual: rational::to_f64(&worst),
            exact_zero: worst.is_zero(),
        });
    }
    if let Some(bad) = report.freeness.iter().find(|f| f.max_residual > tol_m) {
        report.verdict = fail("freeness_check", format!("families {:?} / {:?} not free (residual {:e})", bad.family_a, bad.family_b, bad.max_residual));
        return Ok(report);
    }
    report.verdict = Verdict::Split {
        r,
        message: format!("splits off L(F_{r}) factor (numerically certified at degree {d})"),
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::parse_poly;
    use crate::rational::{frac, int};
    use crate::state::CovarianceModel;

    fn p(s: &str, n: usize) -> NcPoly {
        parse_poly(s, Some(n)).unwrap()
    }

    fn a_state(rows: Vec<Vec<Rational>>) -> SemicircularState {
        SemicircularState::new(CovarianceModel::from_precision(&QMatrix::from_rows(rows).unwrap()).unwrap())
    }

    fn binomial_catalan(k: u64) -> u64 {
        let mut c: u64 = 1;
        for i in 0..k {
            c = c * 2 * (2 * i + 1) / (i + 2);
        }
        c
    }

    #[test]
    fn recursion_gives_catalan() {
        let m = semicircle_moments(12);
        for k in 0..=6u64 {
            assert_eq!(m[2 * k as usize], int(binomial_catalan(k) as i64));
            if k < 6 {
                assert!(m[2 * k as usize + 1].is_zero());
            }
        }
    }

    #[test]
    fn saturators_examples() {
        let st = SemicircularState::standard(2);
        let xi = st.model().linear_conjugates();
        let sp = TruncatedSpace::new(st, 3).unwrap();
        let lap = laplacian(&sp, &xi).unwrap();
        let s = find_saturators(&sp, &lap, &xi, 1e-8).unwrap();
        assert_eq!(s.exact.unwrap(), vec![p("X1", 2), p("X2", 2)]);

        let st = a_state(vec![vec![int(1), int(0)], vec![int(0), int(2)]]);
        let xi = st.model().linear_conjugates();
        let sp = TruncatedSpace::new(st, 3).unwrap();
        let s = find_saturators(&sp, &laplacian(&sp, &xi).unwrap(), &xi, 1e-8).unwrap();
        assert_eq!(s.exact.unwrap(), vec![p("X1", 2)]);

        let st = a_state(vec![vec![frac(3, 2), int(0)], vec![int(0), int(2)]]);
        let xi = st.model().linear_conjugates();
        let sp = TruncatedSpace::new(st, 3).unwrap();
        assert_eq!(find_saturators(&sp, &laplacian(&sp, &xi).unwrap(), &xi, 1e-8).unwrap().dim(), 0);
    }

    #[test]
    fn affine_examples() {
        let sp = TruncatedSpace::new(SemicircularState::standard(1), 3).unwrap();
        assert!(affine_check(&p("X1", 1), &sp).unwrap() < 1e-12);
        assert!((affine_check(&p("X1 + X1^2", 1), &sp).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn realify_examples() {
        let (re, im) = realify(&p("X1", 2));
        assert_eq!((re, im.is_zero()), (p("X1", 2), true));
        let (re, im) = realify(&p("X1 X2", 2));
        assert_eq!(re, p("1/2 X1 X2 + 1/2 X2 X1", 2));
        assert_eq!(im, p("1/2 X1 X2 - 1/2 X2 X1", 2));
    }

    #[test]
    fn completion_examples() {
        let u = orthogonal_completion(&[vec![1.0, 0.0]], 2, 1e-12).unwrap();
        assert!((u - DMatrix::identity(2, 2)).amax() < 1e-15);
        let u = orthogonal_completion(&[vec![0.6, 0.8]], 2, 1e-12).unwrap();
        assert!((u[(1, 0)] + 0.8).abs() < 1e-12 && (u[(1, 1)] - 0.6).abs() < 1e-12);
        assert!(orthogonal_completion(&[vec![1.0, 1.0]], 2, 1e-12).is_err());
        let e = orthogonal_completion_exact(&[vec![frac(3, 5), frac(4, 5)]], 2).unwrap();
        assert_eq!(e.row(1), &[frac(16, 25), frac(-12, 25)]);
        assert!(orthogonal_completion_exact(&[vec![int(1), int(0)], vec![int(2), int(0)]], 2).is_err());
    }

    #[test]
    fn change_of_variables_examples() {
        let st = SemicircularState::standard(2);
        let xi = st.model().linear_conjugates();
        let c = change_of_variables(&QMatrix::identity(2), &st, &xi, 0.0).unwrap();
        assert_eq!(c.y, xi);
        let b = QMatrix::from_rows(vec![vec![int(3), int(4)], vec![int(-4), int(3)]]).unwrap();
        let c = change_of_variables(&b, &st, &xi, 0.0).unwrap();
        assert_eq!(c.covariance, QMatrix::identity(2).scale(&int(25)));
        let skew = QMatrix::from_rows(vec![vec![int(1), int(1)], vec![int(0), int(1)]]).unwrap();
        assert!(matches!(change_of_variables(&skew, &st, &xi, 1e-12), Err(Error::NotOrthogonal(_))));
    }

    #[test]
    fn semicircular_examples() {
        let st = SemicircularState::standard(2);
        let s = semicircular_check(&p("X1", 2), &st, 8).unwrap();
        assert!(s.exact_zero);
        assert_eq!(s.moments[7].value, "14");
        assert!(semicircular_check(&p("X1 + X2", 2), &st, 8).unwrap().exact_zero);
        let s = semicircular_check(&p("X1^2 - 1", 2), &st, 4).unwrap();
        assert!(!s.exact_zero && s.moments[3].residual > 0.0);
    }

    #[test]
    fn freeness_examples() {
        let st = SemicircularState::standard(2);
        let (count, worst) = freeness_check(&[p("X1", 2)], &[p("X2", 2)], &st, 6).unwrap();
        assert!(worst.is_zero() && count > 0);
        let c = QMatrix::from_rows(vec![vec![int(1), frac(1, 2)], vec![frac(1, 2), int(1)]]).unwrap();
        let st = SemicircularState::new(CovarianceModel::new(c).unwrap());
        let (_, worst) = freeness_check(&[p("X1", 2)], &[p("X2", 2)], &st, 2).unwrap();
        assert_eq!(worst, frac(1, 2));
    }

    #[test]
    fn stein_examples() {
        let st = a_state(vec![vec![int(1), int(0)], vec![int(0), int(2)]]);
        for w in Word::all_up_to(2, 4) {
            let g = NcPoly::monomial(2, w, int(1));
            assert!(stein_residual(&[int(1), int(0)], &g, &st).unwrap().is_zero());
        }
        let g = p("X2", 2);
        assert!(!stein_residual(&[int(0), int(1)], &g, &st).unwrap().is_zero());
    }

    #[test]
    fn pipeline_examples() {
        let tols = RigidityTolerances::default();
        let st = SemicircularState::standard(2);
        let r = obata_report(&st, &st.model().linear_conjugates(), 4, &tols).unwrap();
        assert!(matches!(r.verdict, Verdict::Split { r: 2, .. }), "{:?}", r.verdict);

        // spectrum {1, 3/2}, eigenvector (3/5, 4/5) at 1
        let st = a_state(vec![vec![frac(33, 25), frac(-6, 25)], vec![frac(-6, 25), frac(59, 50)]]);
        let r = obata_report(&st, &st.model().linear_conjugates(), 3, &tols).unwrap();
        assert!(matches!(r.verdict, Verdict::Split { r: 1, .. }), "{:?}", r.verdict);
        assert!(r.exact);
        assert_eq!(r.saturators[0].poly, "X1 + 4/3*X2");
        // |b_1|^2 = 25/9 at variance 1; |b_2|^2 = 16/25 at variance 2/3
        assert_eq!(r.directions[0].variance, "25/9");
        assert_eq!(r.directions[1].variance, "32/75");
        assert!((r.u_matrix[0][0] - 0.6).abs() < 1e-12 && (r.u_matrix[1][0] - 0.8).abs() < 1e-12);

        let st = a_state(vec![vec![frac(5, 4), int(0)], vec![int(0), frac(3, 2)]]);
        let r = obata_report(&st, &st.model().linear_conjugates(), 3, &tols).unwrap();
        assert_eq!(r.verdict.message(), "no saturator; rigidity hypothesis vacuous");
    }
}
