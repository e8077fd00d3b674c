//! Exact rational scalars shared by every module.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Huge numerators/denominators: divide in floating point after scaling.
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact binary value of a finite float.
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Best rational approximation with denominator at most `max_den`, accepted
/// only if it lies within `tol` of `x`.
pub fn approximate(x: f64, max_den: i64, tol: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac_part = r - a as f64;
        if frac_part.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac_part;
    }
    if k1 == 0 {
        return None;
    }
    let cand = frac(h1, k1);
    if (to_f64(&cand) - x).abs() <= tol {
        Some(cand)
    } else {
        None
    }
}

/// `p/q` for non-integers, plain integer otherwise.
pub fn format(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, s),
    };
    let value = match body.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Rational::new(n, d)
        }
        None => {
            if let Ok(n) = body.parse::<BigInt>() {
                Rational::from_integer(n)
            } else {
                // decimal literal such as 0.25
                let (whole, digits) = body.split_once('.')?;
                if !whole.chars().chain(digits.chars()).all(|c| c.is_ascii_digit()) {
                    return None;
                }
                let scale = BigInt::from(10u32).pow(digits.len() as u32);
                let n: BigInt = format!("{whole}{digits}").parse().ok()?;
                Rational::new(n, scale)
            }
        }
    };
    Some(if neg { -value } else { value })
}

pub fn abs(q: &Rational) -> Rational {
    q.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse("3/6"), Some(frac(1, 2)));
        assert_eq!(parse("-2"), Some(int(-2)));
        assert_eq!(parse("0.25"), Some(frac(1, 4)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(format(&frac(-3, 4)), "-3/4");
        assert_eq!(format(&int(7)), "7");
    }

    #[test]
    fn approximation() {
        assert_eq!(approximate(0.6000000000001, 1000, 1e-9), Some(frac(3, 5)));
        assert_eq!(approximate(-1.0, 1000, 1e-9), Some(int(-1)));
        assert_eq!(approximate(std::f64::consts::FRAC_1_SQRT_2, 1000, 1e-12), None);
    }
}
