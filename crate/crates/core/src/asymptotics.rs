//! Exact evaluation of the two leading correction terms for `α([3]^n)`,
//! their closed-form asymptotics, Motzkin numbers and terminating Gauss
//! hypergeometric sums.
//!
//! Identities are checked in exact rationals. Asymptotic ratios are taken
//! in `f64` log-space so that `3^n`-scale magnitudes never overflow.

use num_bigint::{BigInt, BigUint};
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, refused, Result};
use crate::poset::layer_size;

/// `sqrt((1 + 2√2) / (2√2 π))`, the prefix of the closed form, to 10 digits.
pub const CLOSED_FORM_PREFIX: f64 = 0.656_391_213_9;

/// `(1 + 2√2) / 2`, the exponential base of the closed form.
pub fn closed_form_base() -> f64 {
    (1.0 + 2.0 * std::f64::consts::SQRT_2) / 2.0
}

fn big(v: u64) -> BigInt {
    BigInt::from(v)
}

fn pow2(e: i64) -> BigRational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

/// `C(n, 2k+1) C(2k+1, k)`: the number of points of `L_{n-1}` in `[3]^n`
/// with `k` twos.
fn type_count(n: u64, k: u64) -> BigInt {
    binomial(big(n), big(2 * k + 1)) * binomial(big(2 * k + 1), big(k))
}

fn t1_term(n: u64, k: u64) -> BigRational {
    BigRational::from_integer(type_count(n, k) * 2) * pow2(-((n - k) as i64))
}

fn t2_term(n: u64, k: u64) -> BigRational {
    let (nn, kk) = (BigInt::from(n), BigInt::from(k));
    // n^2 - 3(k+1)n + k(9k+17)/4, kept over the common denominator 4.
    let poly4 = &nn * &nn * 4 - (&kk + 1) * &nn * 12 + &kk * (&kk * 9 + 17);
    BigRational::new(type_count(n, k) * poly4, big(4)) * pow2(-2 * (n - k) as i64)
}

fn k_range(n: u64) -> impl DoubleEndedIterator<Item = u64> {
    // 0 <= k < n/2
    0..n.div_ceil(2)
}

/// Summation direction for the exact sums; both must agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumOrder {
    Forward,
    Backward,
}

fn sum_terms(n: u64, order: SumOrder, term: fn(u64, u64) -> BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    match order {
        SumOrder::Forward => k_range(n).for_each(|k| acc += term(n, k)),
        SumOrder::Backward => k_range(n).rev().for_each(|k| acc += term(n, k)),
    }
    acc
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(domain!("n must be at least 1"));
    }
    Ok(())
}

/// `T1(n) = 2 Σ_{0<=k<n/2} C(n,2k+1) C(2k+1,k) 2^{-(n-k)}`.
pub fn t1(n: usize) -> Result<BigRational> {
    t1_ordered(n, SumOrder::Forward)
}

pub fn t1_ordered(n: usize, order: SumOrder) -> Result<BigRational> {
    check_n(n)?;
    Ok(sum_terms(n as u64, order, t1_term))
}

/// `T2(n) = Σ_{0<=k<n/2} C(n,2k+1) C(2k+1,k) (n^2 - 3(k+1)n + k(9k+17)/4) 2^{-2(n-k)}`.
pub fn t2(n: usize) -> Result<BigRational> {
    t2_ordered(n, SumOrder::Forward)
}

pub fn t2_ordered(n: usize, order: SumOrder) -> Result<BigRational> {
    check_n(n)?;
    Ok(sum_terms(n as u64, order, t2_term))
}

/// Natural logarithm of a positive big integer without overflow.
pub fn ln_biguint(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural logarithm of the absolute value of a nonzero rational.
pub fn ln_abs_rational(v: &BigRational) -> f64 {
    let num = v.numer().abs().to_biguint().unwrap_or_default();
    let den = v.denom().abs().to_biguint().unwrap_or_default();
    ln_biguint(&num) - ln_biguint(&den)
}

/// Lossy conversion of a rational to `f64`, accurate for large and tiny values.
pub fn rational_to_f64(v: &BigRational) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    let mag = ln_abs_rational(v).exp();
    if v.is_negative() {
        -mag
    } else {
        mag
    }
}

/// `ln` of `sqrt((1+2√2)/(2√2π)) n^{-1/2} ((1+2√2)/2)^n`.
pub fn ln_closed_form(n: usize) -> Result<f64> {
    check_n(n)?;
    let s2 = std::f64::consts::SQRT_2;
    let prefix = ((1.0 + 2.0 * s2) / (2.0 * s2 * std::f64::consts::PI)).ln() / 2.0;
    Ok(prefix - 0.5 * (n as f64).ln() + n as f64 * closed_form_base().ln())
}

/// The closed-form asymptotic for `T1(n)`; overflows to infinity past `n ≈ 1090`.
pub fn closed_form(n: usize) -> Result<f64> {
    Ok(ln_closed_form(n)?.exp())
}

/// `T1(n) / closed_form(n)`, evaluated through logarithms.
pub fn t1_closed_form_ratio(n: usize) -> Result<f64> {
    Ok((ln_abs_rational(&t1(n)?) - ln_closed_form(n)?).exp())
}

/// Motzkin numbers `M_0, .., M_len-1`.
pub fn motzkin_numbers(len: usize) -> Vec<BigUint> {
    let mut m: Vec<BigUint> = Vec::with_capacity(len);
    for i in 0..len {
        let v = if i < 2 {
            BigUint::one()
        } else {
            // M_i = M_{i-1} + Σ_{k=0}^{i-2} M_k M_{i-2-k}
            let conv: BigUint = (0..=i - 2).map(|k| &m[k] * &m[i - 2 - k]).sum();
            &m[i - 1] + conv
        };
        m.push(v);
    }
    m
}

pub fn motzkin(n: usize) -> BigUint {
    motzkin_numbers(n + 1).pop().unwrap_or_else(BigUint::one)
}

fn nonpositive_integer(q: &BigRational) -> Option<u64> {
    (q.is_integer() && !q.is_positive()).then(|| q.numer().abs().to_u64()).flatten()
}

/// Terminating Gauss hypergeometric sum `2F1(a, b; c; z)` in exact rationals.
/// One of `a`, `b` must be a non-positive integer.
pub fn gauss_2f1_terminating(a: &BigRational, b: &BigRational, c: &BigRational, z: &BigRational) -> Result<BigRational> {
    let terms = match (nonpositive_integer(a), nonpositive_integer(b)) {
        (Some(x), Some(y)) => x.min(y),
        (Some(x), None) | (None, Some(x)) => x,
        (None, None) => return Err(refused!("series does not terminate: no non-positive integer upper parameter")),
    };
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    for k in 0..terms {
        let kq = BigRational::from_integer(BigInt::from(k));
        let denom = (c + &kq) * (&kq + BigRational::one());
        if denom.is_zero() {
            return Err(domain!("lower parameter c = {c} hits a pole"));
        }
        term = term * (a + &kq) * (b + &kq) * z / denom;
        sum += &term;
    }
    Ok(sum)
}

/// `n 2^{1-n} 2F1(1/2 - n/2, 1 - n/2; 2; 8)`.
pub fn t1_hypergeometric(n: usize) -> Result<BigRational> {
    check_n(n)?;
    let half = BigRational::new(big(1), big(2));
    let nh = BigRational::new(BigInt::from(n), big(2));
    let a = &half - &nh;
    let b = BigRational::one() - &nh;
    let f = gauss_2f1_terminating(&a, &b, &BigRational::from_integer(big(2)), &BigRational::from_integer(big(8)))?;
    Ok(f * BigRational::from_integer(BigInt::from(n)) * pow2(1 - n as i64))
}

/// `ln` of the large-`λ` approximation of `2F1(a-λ, b-λ; c; z)`:
/// `Γ(c) z^{1/4} / (2√π) λ^{1/2-c} (1 + z^{-1/2})^{c-a+λ} / (z^{-1/2})^{λ-a} / (1+√z)^{b-λ}`.
pub fn ln_hyper_asymptotic(a: f64, b: f64, c: f64, z: f64, lambda: f64) -> Result<f64> {
    if z <= 0.0 || lambda <= 0.0 {
        return Err(domain!("need z > 0 and lambda > 0"));
    }
    let rz = z.sqrt();
    Ok(ln_gamma(c) + z.ln() / 4.0 - (2.0 * std::f64::consts::PI.sqrt()).ln() + (0.5 - c) * lambda.ln()
        + (c - a + lambda) * (1.0 + 1.0 / rz).ln()
        + (lambda - a) * rz.ln()
        - (b - lambda) * (1.0 + rz).ln())
}

pub fn hyper_asymptotic(a: f64, b: f64, c: f64, z: f64, lambda: f64) -> Result<f64> {
    Ok(ln_hyper_asymptotic(a, b, c, z, lambda)?.exp())
}

/// Ratio of the exact `2F1(1/2 - n/2, 1 - n/2; 2; z)` to its approximation.
pub fn hyper_ratio(n: usize, z: u64) -> Result<f64> {
    check_n(n)?;
    let half = BigRational::new(big(1), big(2));
    let nh = BigRational::new(BigInt::from(n), big(2));
    let exact = gauss_2f1_terminating(
        &(&half - &nh),
        &(BigRational::one() - &nh),
        &BigRational::from_integer(big(2)),
        &BigRational::from_integer(BigInt::from(z)),
    )?;
    Ok((ln_abs_rational(&exact) - ln_hyper_asymptotic(0.5, 1.0, 2.0, z as f64, n as f64 / 2.0)?).exp())
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticEstimate {
    pub n: usize,
    #[serde(serialize_with = "crate::report::ser_biguint")]
    pub middle_layer: BigUint,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub t1: BigRational,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub t2: BigRational,
    /// `ℓ_n + (T1 + T2) / ln 2`.
    pub log2_alpha_estimate: f64,
}

pub fn estimate(n: usize) -> Result<AsymptoticEstimate> {
    let middle_layer = layer_size(3, n, n)?;
    let (a, b) = (t1(n)?, t2(n)?);
    let corr = rational_to_f64(&(&a + &b));
    let log2_alpha_estimate = middle_layer.to_f64().unwrap_or(f64::INFINITY) + corr / std::f64::consts::LN_2;
    Ok(AsymptoticEstimate { n, middle_layer, t1: a, t2: b, log2_alpha_estimate })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn t1_examples() {
        assert_eq!(t1(2).unwrap(), q(1, 1));
        assert_eq!(t1(3).unwrap(), q(9, 4));
        assert!(t1(0).is_err());
    }

    #[test]
    fn t2_examples() {
        assert_eq!(t2(2).unwrap(), q(-1, 4));
        for n in 1..40 {
            assert_eq!(t2_ordered(n, SumOrder::Forward).unwrap(), t2_ordered(n, SumOrder::Backward).unwrap());
            assert_eq!(t1_ordered(n, SumOrder::Forward).unwrap(), t1_ordered(n, SumOrder::Backward).unwrap());
        }
    }

    #[test]
    fn closed_form_constants() {
        let s2 = std::f64::consts::SQRT_2;
        let prefix = ((1.0 + 2.0 * s2) / (2.0 * s2 * std::f64::consts::PI)).sqrt();
        assert!((prefix - CLOSED_FORM_PREFIX).abs() < 1e-10);
        assert!((closed_form_base() - 1.914_213_562_4).abs() < 1e-10);
        let v = closed_form(1).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn motzkin_values() {
        let m = motzkin_numbers(10);
        let want = [1u32, 1, 2, 4, 9, 21, 51, 127, 323, 835];
        assert_eq!(m, want.iter().map(|&v| BigUint::from(v)).collect::<Vec<_>>());
        assert_eq!(motzkin(0), BigUint::one());
    }

    #[test]
    fn hypergeometric() {
        let one = BigRational::one();
        assert_eq!(gauss_2f1_terminating(&BigRational::zero(), &q(3, 7), &q(2, 1), &q(8, 1)).unwrap(), one);
        assert!(gauss_2f1_terminating(&q(1, 2), &q(3, 2), &q(2, 1), &q(8, 1)).is_err());
        assert_eq!(t1_hypergeometric(4).unwrap(), t1(4).unwrap());
        assert_eq!(t1_hypergeometric(5).unwrap(), t1(5).unwrap());
        assert!(hyper_asymptotic(0.5, 1.0, 2.0, 8.0, 1.0).unwrap().is_finite());
    }

    #[test]
    fn log_of_big_values() {
        let v = BigUint::one() << 5000u32;
        assert!((ln_biguint(&v) - 5000.0 * std::f64::consts::LN_2).abs() < 1e-9);
        assert!((rational_to_f64(&q(-3, 8)) + 0.375).abs() < 1e-15);
    }
}
