//! Floating-point symmetric-definite generalized eigenproblems `K v = lambda G v`,
//! reduced to standard form by the Cholesky congruence `L^{-1} K L^{-T}`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct GeneralizedEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, orthonormal in the `G` inner product.
    pub vectors: DMatrix<f64>,
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn generalized_symmetric(k: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<GeneralizedEigen> {
    let n = k.nrows();
    if k.shape() != (n, n) || g.shape() != (n, n) {
        return Err(Error::Eigen(format!("shape mismatch {:?} vs {:?}", k.shape(), g.shape())));
    }
    if n == 0 {
        return Ok(GeneralizedEigen { values: vec![], vectors: DMatrix::zeros(0, 0) });
    }
    let chol = Cholesky::new(symmetrize(g)).ok_or_else(|| Error::Eigen("Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv_k = l
        .solve_lower_triangular(&symmetrize(k))
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let s = l
        .solve_lower_triangular(&linv_k.transpose())
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let eig = SymmetricEigen::try_new(symmetrize(&s), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lt = l.transpose();
    let mut vectors = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (col, &idx) in order.iter().enumerate() {
        values.push(eig.eigenvalues[idx]);
        let y: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
        let x = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::Eigen("back substitution failed".into()))?;
        vectors.set_column(col, &x);
    }
    Ok(GeneralizedEigen { values, vectors })
}

/// Groups ascending values whose consecutive gaps are at most `tol`.
pub fn cluster(values: &[f64], tol: f64) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    let mut members: Vec<f64> = Vec::new();
    for &v in values {
        if let Some(&last) = members.last() {
            if (v - last).abs() > tol {
                out.push(Cluster::from_members(&members));
                members.clear();
            }
        }
        members.push(v);
    }
    if !members.is_empty() {
        out.push(Cluster::from_members(&members));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
}

impl Cluster {
    fn from_members(m: &[f64]) -> Self {
        Cluster { value: m.iter().sum::<f64>() / m.len() as f64, multiplicity: m.len() }
    }
}

/// Largest singular value of `A` as an operator on `(R^n, <.,.>_G)`.
pub fn operator_norm_in_metric(a: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<f64> {
    // ||A||_G^2 = lambda_max of A^T G A relative to G.
    let k = a.transpose() * g * a;
    let e = generalized_symmetric(&k, g)?;
    Ok(e.values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}
