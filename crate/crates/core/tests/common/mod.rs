#![allow(dead_code)]

use freeprob_core::exact::QMatrix;
use freeprob_core::rational::{frac, int};
use freeprob_core::{NcPoly, Rational, TensorPoly2, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_rational(rng: &mut ChaCha8Rng) -> Rational {
    let num = rng.random_range(-4i64..=4);
    let den = rng.random_range(1i64..=3);
    if num == 0 {
        frac(1, den)
    } else {
        frac(num, den)
    }
}

pub fn random_word(rng: &mut ChaCha8Rng, n: usize, max_len: usize) -> Word {
    let len = rng.random_range(0..=max_len);
    Word::from_letters((0..len).map(|_| rng.random_range(0..n)))
}

pub fn random_poly(rng: &mut ChaCha8Rng, n: usize, max_deg: usize, max_terms: usize) -> NcPoly {
    let terms = rng.random_range(1..=max_terms);
    let mut p = NcPoly::zero(n);
    for _ in 0..terms {
        p.add_term(random_word(rng, n, max_deg), small_rational(rng));
    }
    p
}

pub fn random_self_adjoint(rng: &mut ChaCha8Rng, n: usize, max_deg: usize, max_terms: usize) -> NcPoly {
    let p = random_poly(rng, n, max_deg, max_terms);
    &p + &p.star()
}

pub fn random_tensor2(rng: &mut ChaCha8Rng, n: usize, max_total: usize, max_terms: usize) -> TensorPoly2 {
    let terms = rng.random_range(1..=max_terms);
    let mut t = TensorPoly2::zero(n);
    for _ in 0..terms {
        let left = rng.random_range(0..=max_total);
        let a = random_word(rng, n, left);
        let b = random_word(rng, n, max_total - a.len());
        t.add_term([a, b], small_rational(rng));
    }
    t
}

/// `B^T B + I` with small integer `B`: symmetric positive definite.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> QMatrix {
    let b = QMatrix::from_fn(n, n, |_, _| int(rng.random_range(-2i64..=2)));
    b.transpose().mul(&b).unwrap().add(&QMatrix::identity(n))
}

pub fn catalan(k: u64) -> u64 {
    // C_k = binom(2k, k) / (k + 1)
    let mut b: u64 = 1;
    for i in 0..k {
        b = b * (2 * k - i) / (i + 1);
    }
    b / (k + 1)
}
