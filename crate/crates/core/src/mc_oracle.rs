//! Monte-Carlo cross-check of exact traces on correlated GUE matrices.
//!
//! Each trial draws `n` independent GUE matrices `S_j`, normalized so that
//! `H = (A + A*)/sqrt(2)` with `A` having i.i.d. complex Gaussian entries of
//! variance `1/N` (real and imaginary parts each `1/(2N)`). Off-diagonal
//! entries of `H` then have variance `1/N` and the diagonal is real with
//! variance `1/N`. The correlated family is `X = C^{1/2} S`.
//!
//! Trial `t` uses a ChaCha8 stream seeded with `splitmix64(seed + (t+1) * GOLDEN)`,
//! so results do not depend on the order in which trials run.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ncpoly::{NcPoly, Word};
use crate::rational;
use crate::state::CovarianceModel;

pub const MAX_DEGREE: usize = 10;
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Clone, Debug)]
pub struct McConfig {
    pub size: usize,
    pub trials: usize,
    pub seed: u64,
    pub model: CovarianceModel,
}

impl McConfig {
    pub fn new(size: usize, trials: usize, seed: u64, model: CovarianceModel) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidConfig(format!("matrix size must be at least 2, got {size}")));
        }
        if trials < 1 {
            return Err(Error::InvalidConfig("at least one trial is required".into()));
        }
        Ok(McConfig { size, trials, seed, model })
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    splitmix64(seed.wrapping_add((trial as u64 + 1).wrapping_mul(GOLDEN)))
}

/// Complex matrix as separate real and imaginary parts.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl CMatrix {
    pub fn identity(n: usize) -> Self {
        CMatrix { re: DMatrix::identity(n, n), im: DMatrix::zeros(n, n) }
    }

    pub fn size(&self) -> usize {
        self.re.nrows()
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        CMatrix {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn scale_add(&mut self, c: f64, other: &CMatrix) {
        self.re += &other.re * c;
        self.im += &other.im * c;
    }

    /// `Re Tr(self * other)` in `O(N^2)`.
    pub fn trace_product_re(&self, other: &CMatrix) -> f64 {
        let n = self.size();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.re[(i, j)] * other.re[(j, i)] - self.im[(i, j)] * other.im[(j, i)];
            }
        }
        acc
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.re - self.re.transpose()).amax() <= tol && (&self.im + self.im.transpose()).amax() <= tol
    }
}

pub fn sample_gue(size: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let sd = (1.0 / (2.0 * size as f64)).sqrt();
    let mut draw = || {
        DMatrix::from_fn(size, size, |_, _| {
            let z: f64 = StandardNormal.sample(rng);
            z * sd
        })
    };
    let are = draw();
    let aim = draw();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix { re: (&are + are.transpose()) * s, im: (&aim - aim.transpose()) * s }
}

/// Symmetric square root of the covariance.
pub fn covariance_sqrt(model: &CovarianceModel) -> DMatrix<f64> {
    let e = SymmetricEigen::new(model.covariance().to_f64());
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|v| v.max(0.0).sqrt()));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

pub fn sample_family(cfg: &McConfig, trial: usize) -> Vec<CMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, trial));
    let n = cfg.n();
    let s: Vec<CMatrix> = (0..n).map(|_| sample_gue(cfg.size, &mut rng)).collect();
    let root = covariance_sqrt(&cfg.model);
    (0..n)
        .map(|i| {
            let mut x = CMatrix { re: DMatrix::zeros(cfg.size, cfg.size), im: DMatrix::zeros(cfg.size, cfg.size) };
            for (j, sj) in s.iter().enumerate() {
                if root[(i, j)] != 0.0 {
                    x.scale_add(root[(i, j)], sj);
                }
            }
            x
        })
        .collect()
}

/// Products `X_w` for words, built from cached shorter prefixes.
struct WordProducts<'a> {
    family: &'a [CMatrix],
    cache: HashMap<Word, CMatrix>,
}

impl<'a> WordProducts<'a> {
    fn new(family: &'a [CMatrix]) -> Self {
        WordProducts { family, cache: HashMap::new() }
    }

    fn get(&mut self, w: &Word) -> &CMatrix {
        if !self.cache.contains_key(w) {
            let letters = w.letters();
            let m = match letters.len() {
                0 => CMatrix::identity(self.family[0].size()),
                1 => self.family[letters[0] as usize].clone(),
                k => {
                    let prefix = Word::from_bytes(&letters[..k - 1]);
                    let last = letters[k - 1] as usize;
                    let family = self.family;
                    self.get(&prefix).mul(&family[last])
                }
            };
            self.cache.insert(w.clone(), m);
        }
        &self.cache[w]
    }

    /// `tr_N(X_w) = Re Tr(X_u X_v) / N` with `w = uv` split in half.
    fn normalized_trace(&mut self, w: &Word) -> f64 {
        let letters = w.letters();
        let size = self.family[0].size() as f64;
        if letters.is_empty() {
            return 1.0;
        }
        let h = letters.len().div_ceil(2);
        let u = Word::from_bytes(&letters[..h]);
        let v = Word::from_bytes(&letters[h..]);
        self.get(&u);
        self.get(&v);
        self.cache[&u].trace_product_re(&self.cache[&v]) / size
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Standard error of the mean over trials (0 for a single trial).
    pub stderr: f64,
}

/// Estimates `tau(p)` for every polynomial from the same samples.
pub fn mc_traces(polys: &[NcPoly], cfg: &McConfig) -> Result<Vec<McEstimate>> {
    for p in polys {
        if p.n() != cfg.n() {
            return Err(Error::GeneratorMismatch { left: cfg.n(), right: p.n() });
        }
        if let Some(d) = p.degree() {
            if d > MAX_DEGREE {
                return Err(Error::DegreeOverflow { degree: d, bound: MAX_DEGREE });
            }
        }
    }
    let mut samples = vec![Vec::with_capacity(cfg.trials); polys.len()];
    for t in 0..cfg.trials {
        let family = sample_family(cfg, t);
        let mut products = WordProducts::new(&family);
        for (k, p) in polys.iter().enumerate() {
            let mut acc = 0.0;
            for (w, c) in p.terms() {
                let c = rational::to_f64(c);
                acc += if w.is_empty() { c } else { c * products.normalized_trace(w) };
            }
            samples[k].push(acc);
        }
    }
    Ok(samples.into_iter().map(|s| summarize(&s)).collect())
}

pub fn mc_trace(p: &NcPoly, cfg: &McConfig) -> Result<McEstimate> {
    Ok(mc_traces(std::slice::from_ref(p), cfg)?.remove(0))
}

fn summarize(s: &[f64]) -> McEstimate {
    let t = s.len() as f64;
    let mean = s.iter().sum::<f64>() / t;
    let stderr = if s.len() > 1 {
        let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0);
        (var / t).sqrt()
    } else {
        0.0
    };
    McEstimate { mean, stderr }
}

/// Fixed regression corpus of words (degree `<= 8`, two generators) used by
/// the cross-check; halves are shared so the per-trial product cache stays small.
pub const CORPUS: [&str; 20] = [
    "X1^2",
    "X2^2",
    "X1 X2",
    "X1^4",
    "X2^4",
    "X1 X2 X1 X2",
    "X1 X1 X2 X2",
    "X1 X2 X2 X1",
    "X1^6",
    "X1 X2 X1 X2 X1 X2",
    "X1 X1 X2 X2 X1 X1",
    "X1 X2 X2 X2 X2 X1",
    "X1^3",
    "X1 X2 X1",
    "X1^8",
    "X2^8",
    "X1 X2 X1 X2 X1 X2 X1 X2",
    "X1 X1 X2 X2 X1 X1 X2 X2",
    "X1 X1 X1 X1 X2 X2 X2 X2",
    "X1 X2 X2 X1 X1 X2 X2 X1",
];

#[derive(Clone, Debug, Serialize)]
pub struct CrosscheckRow {
    pub word: String,
    pub exact: String,
    pub mean: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Crosscheck {
    pub size: usize,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<CrosscheckRow>,
    pub failures: usize,
}

/// Compares MC estimates with exact traces; a row passes when
/// `|mc - exact| <= 4 (stderr + c0 / N)`.
pub fn crosscheck(words: &[NcPoly], cfg: &McConfig, c0: f64) -> Result<Crosscheck> {
    let state = crate::state::SemicircularState::new(cfg.model.clone());
    let est = mc_traces(words, cfg)?;
    let mut rows = Vec::with_capacity(words.len());
    for (p, e) in words.iter().zip(est) {
        let exact = state.trace(p);
        let bound = 4.0 * (e.stderr + c0 / cfg.size as f64);
        rows.push(CrosscheckRow {
            word: p.to_string(),
            exact: rational::format(&exact),
            mean: e.mean,
            stderr: e.stderr,
            bound,
            pass: (e.mean - rational::to_f64(&exact)).abs() <= bound,
        });
    }
    let failures = rows.iter().filter(|r| !r.pass).count();
    Ok(Crosscheck { size: cfg.size, trials: cfg.trials, seed: cfg.seed, rows, failures })
}

/// Corpus words expressible with `n` generators; for `n = 1` only the powers of `X1` remain.
pub fn corpus(n: usize) -> Result<Vec<NcPoly>> {
    if n == 0 {
        return Err(Error::InvalidConfig("corpus needs at least one generator".into()));
    }
    Ok(CORPUS.iter().filter_map(|s| crate::ncpoly::parse_poly(s, Some(n)).ok()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::parse_poly;

    fn cfg(size: usize, trials: usize) -> McConfig {
        McConfig::new(size, trials, 7, CovarianceModel::standard(2)).unwrap()
    }

    #[test]
    fn rejects_bad_config() {
        assert!(McConfig::new(1, 3, 0, CovarianceModel::standard(1)).is_err());
        assert!(McConfig::new(4, 0, 0, CovarianceModel::standard(1)).is_err());
    }

    #[test]
    fn gue_is_hermitian_with_unit_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = sample_gue(200, &mut rng);
        assert!(h.is_hermitian(1e-14));
        let m2 = h.trace_product_re(&h) / 200.0;
        assert!((m2 - 1.0).abs() < 0.05, "{m2}");
    }

    #[test]
    fn unit_polynomial_is_exact() {
        let e = mc_trace(&NcPoly::one(2), &cfg(4, 3)).unwrap();
        assert_eq!((e.mean, e.stderr), (1.0, 0.0));
    }

    #[test]
    fn degree_cap() {
        let p = parse_poly("X1^11", Some(2)).unwrap();
        assert!(matches!(mc_trace(&p, &cfg(4, 1)), Err(Error::DegreeOverflow { degree: 11, bound: 10 })));
    }

    #[test]
    fn deterministic_streams() {
        let p = parse_poly("X1 X2 X1 X2 + X1^2", Some(2)).unwrap();
        let a = mc_trace(&p, &cfg(30, 3)).unwrap();
        let b = mc_trace(&p, &cfg(30, 3)).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_ne!(trial_seed(7, 0), trial_seed(7, 1));
    }

    #[test]
    fn moments_near_exact() {
        let c = cfg(120, 6);
        let e = mc_traces(
            &[parse_poly("X1^4", Some(2)).unwrap(), parse_poly("X1 X2 X1 X2", Some(2)).unwrap()],
            &c,
        )
        .unwrap();
        assert!((e[0].mean - 2.0).abs() < 0.1, "{:?}", e[0]);
        assert!(e[1].mean.abs() < 0.05, "{:?}", e[1]);
    }

    #[test]
    fn correlated_second_moments() {
        let cov = crate::exact::QMatrix::from_rows(vec![
            vec![rational::int(1), rational::frac(1, 2)],
            vec![rational::frac(1, 2), rational::int(2)],
        ])
        .unwrap();
        let c = McConfig::new(100, 4, 3, CovarianceModel::new(cov).unwrap()).unwrap();
        let e = mc_traces(
            &[
                parse_poly("X1 X2", Some(2)).unwrap(),
                parse_poly("X2^2", Some(2)).unwrap(),
                parse_poly("X1", Some(2)).unwrap(),
            ],
            &c,
        )
        .unwrap();
        assert!((e[0].mean - 0.5).abs() < 0.05 && (e[1].mean - 2.0).abs() < 0.1 && e[2].mean.abs() < 0.05);
    }
}
