//! Local limit estimates for the rank of a uniform point of `[t]^n`: the
//! rank is a sum `S_n` of `n` independent uniform steps on `{0, …, t-1}`,
//! and `P(S_n = j) = ℓ_j(t, n) / t^n`. The Edgeworth correction up to order
//! `1/n` is compared with exact layer sizes.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::asymptotics::rational_to_f64;
use crate::error::{domain, Result};
use crate::poset::{layer_sizes, middle_rank};
use crate::report::ser_rational;

/// Uniform law on `{0, …, t-1}` with exact cumulants.
#[derive(Debug, Clone, Serialize)]
pub struct LatticeStepLaw {
    pub t: usize,
    #[serde(serialize_with = "ser_rational")]
    pub mean: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub variance: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub kappa3: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub kappa4: BigRational,
}

impl LatticeStepLaw {
    /// Cumulants from exact central moments.
    pub fn new(t: usize) -> Result<Self> {
        if t < 2 {
            return Err(domain!("step law needs t >= 2, got {t}"));
        }
        let tq = BigRational::from_integer(BigInt::from(t));
        let values: Vec<BigRational> = (0..t).map(|v| BigRational::from_integer(BigInt::from(v))).collect();
        let mean = values.iter().fold(BigRational::zero(), |a, v| a + v) / &tq;
        let moment = |k: i32| {
            values.iter().fold(BigRational::zero(), |a, v| a + num_traits::pow(v - &mean, k as usize)) / &tq
        };
        let variance = moment(2);
        let kappa3 = moment(3);
        let kappa4 = moment(4) - BigRational::from_integer(3.into()) * &variance * &variance;
        Ok(LatticeStepLaw { t, mean, variance, kappa3, kappa4 })
    }

    pub fn sigma(&self) -> f64 {
        rational_to_f64(&self.variance).sqrt()
    }

    fn floats(&self) -> (f64, f64, f64, f64) {
        (rational_to_f64(&self.mean), self.sigma(), rational_to_f64(&self.kappa3), rational_to_f64(&self.kappa4))
    }
}

/// Probabilists' Hermite polynomial by `H_{k+1} = x H_k - k H_{k-1}`.
pub fn hermite(k: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for i in 0..k {
        let next = x * cur - i as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn std_normal_density(x: f64) -> f64 {
    (-x * x / 2.0).exp() / (2.0 * PI).sqrt()
}

/// First (`i = 1`) and second (`i = 2`) Edgeworth correction terms.
pub fn q_polynomial(i: usize, x: f64, law: &LatticeStepLaw) -> Result<f64> {
    let (_, s, k3, k4) = law.floats();
    let phi = std_normal_density(x);
    match i {
        1 => Ok(phi * hermite(3, x) * k3 / (6.0 * s.powi(3))),
        2 => Ok(phi * (hermite(6, x) * k3 * k3 / (72.0 * s.powi(6)) + hermite(4, x) * k4 / (24.0 * s.powi(4)))),
        _ => Err(domain!("only q_1 and q_2 are available, got i = {i}")),
    }
}

/// Standardised lattice point `x_j = (j - nμ) / (σ√n)`.
pub fn x_value(law: &LatticeStepLaw, n: usize, j: usize) -> f64 {
    let (mu, s, _, _) = law.floats();
    (j as f64 - n as f64 * mu) / (s * (n as f64).sqrt())
}

/// Edgeworth estimate of `σ√n · P(S_n = j)` without the remainder.
pub fn esseen_estimate(t: usize, n: usize, j: usize) -> Result<f64> {
    let law = LatticeStepLaw::new(t)?;
    check_range(t, n, j)?;
    esseen_with(&law, n, j)
}

fn esseen_with(law: &LatticeStepLaw, n: usize, j: usize) -> Result<f64> {
    let x = x_value(law, n, j);
    let nf = n as f64;
    Ok(std_normal_density(x) + q_polynomial(1, x, law)? / nf.sqrt() + q_polynomial(2, x, law)? / nf)
}

fn check_range(t: usize, n: usize, j: usize) -> Result<()> {
    if n == 0 {
        return Err(domain!("n must be positive"));
    }
    if j > (t - 1) * n {
        return Err(domain!("j = {j} exceeds the top rank {}", (t - 1) * n));
    }
    Ok(())
}

/// `P(S_n = j)` for every `j`, exactly.
pub fn exact_probabilities(t: usize, n: usize) -> Result<Vec<BigRational>> {
    let sizes = layer_sizes(t, n)?;
    let total = BigInt::from(t).pow(n as u32);
    Ok(sizes.into_iter().map(|l| BigRational::new(BigInt::from(l), total.clone())).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct LltRow {
    pub t: usize,
    pub n: usize,
    pub j: usize,
    /// `σ√n · P(S_n = j)`.
    pub exact: f64,
    pub estimate: f64,
    pub abs_error: f64,
    pub scaled_error: f64,
}

/// One row per rank `j`.
pub fn llt_table(t: usize, n: usize) -> Result<Vec<LltRow>> {
    let law = LatticeStepLaw::new(t)?;
    check_range(t, n, 0)?;
    let scale = law.sigma() * (n as f64).sqrt();
    exact_probabilities(t, n)?
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let exact = scale * rational_to_f64(p);
            let estimate = esseen_with(&law, n, j)?;
            let abs_error = (exact - estimate).abs();
            Ok(LltRow { t, n, j, exact, estimate, abs_error, scaled_error: n as f64 * abs_error })
        })
        .collect()
}

/// Largest absolute error over `j`.
pub fn max_error(t: usize, n: usize) -> Result<f64> {
    Ok(llt_table(t, n)?.iter().map(|r| r.abs_error).fold(0.0, f64::max))
}

pub fn to_csv(rows: &[LltRow]) -> String {
    let mut out = String::from("t,n,j,exact,estimate,abs_error,n_abs_error\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{:.12e},{:.12e},{:.6e},{:.6e}", r.t, r.n, r.j, r.exact, r.estimate, r.abs_error, r.scaled_error);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerRatioPrediction {
    pub t: usize,
    pub n: usize,
    /// Central rank `m = ⌊(t-1)n/2⌋`.
    pub m: usize,
    pub x_lower: f64,
    pub x_upper: f64,
    pub predicted: f64,
    pub exact: f64,
    pub relative_error: f64,
    /// `t²n(ratio - 1)` for the prediction and the exact ratio.
    pub predicted_excess: f64,
    pub exact_excess: f64,
}

/// Predicted `P(S_n = m) / P(S_n = m-1)` against exact `ℓ_m / ℓ_{m-1}`.
pub fn llt_layer_ratio(t: usize, n: usize) -> Result<LayerRatioPrediction> {
    let law = LatticeStepLaw::new(t)?;
    let m = middle_rank(t, n);
    if n == 0 || m == 0 {
        return Err(domain!("no layer below the centre for t = {t}, n = {n}"));
    }
    let predicted = esseen_with(&law, n, m)? / esseen_with(&law, n, m - 1)?;
    let sizes = layer_sizes(t, n)?;
    let exact = rational_to_f64(&BigRational::new(BigInt::from(sizes[m].clone()), BigInt::from(sizes[m - 1].clone())));
    let excess = |r: f64| (t * t * n) as f64 * (r - 1.0);
    Ok(LayerRatioPrediction {
        t,
        n,
        m,
        x_lower: x_value(&law, n, m - 1),
        x_upper: x_value(&law, n, m),
        predicted,
        exact,
        relative_error: (predicted / exact - 1.0).abs(),
        predicted_excess: excess(predicted),
        exact_excess: excess(exact),
    })
}

/// Whether the exact probabilities sum to one.
pub fn probabilities_sum_to_one(t: usize, n: usize) -> Result<bool> {
    Ok(exact_probabilities(t, n)?.iter().fold(BigRational::zero(), |a, p| a + p).is_one())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, 1.7), 1.0);
        for x in [-2.0, -0.5, 0.0, 0.3, 1.9] {
            let closed = x * x * x * x - 6.0 * x * x + 3.0;
            assert!((hermite(4, x) - closed).abs() < 1e-12);
        }
        assert_eq!(hermite(4, 0.0), 3.0);
        assert_eq!(hermite(3, 1.0), -2.0);
    }

    #[test]
    fn step_law_cumulants() {
        for t in 2..9usize {
            let law = LatticeStepLaw::new(t).unwrap();
            assert!(law.kappa3.is_zero());
            let t4 = BigInt::from(t.pow(4)) - 1;
            assert_eq!(law.kappa4, -BigRational::new(t4, 120.into()));
            assert_eq!(law.variance, BigRational::new(BigInt::from(t * t - 1), 12.into()));
        }
        assert!(LatticeStepLaw::new(1).is_err());
    }

    #[test]
    fn q2_at_zero() {
        let law = LatticeStepLaw::new(3).unwrap();
        assert_eq!(q_polynomial(1, 0.7, &law).unwrap(), 0.0);
        // σ⁴ = 4/9, κ₄ = -2/3.
        let want = std_normal_density(0.0) * 3.0 * (-2.0 / 3.0) / (24.0 * 4.0 / 9.0);
        assert!((q_polynomial(2, 0.0, &law).unwrap() - want).abs() < 1e-15);
        let q = |x| q_polynomial(2, x, &law).unwrap();
        assert!((q(1.3) - q(-1.3)).abs() < 1e-15);
    }

    #[test]
    fn centre_and_symmetry() {
        let est = esseen_estimate(3, 10, 10).unwrap();
        let want = (1.0 + 3.0 * (-2.0 / 3.0) / (24.0 * 4.0 / 9.0 * 10.0)) / (2.0 * PI).sqrt();
        assert!((est - want).abs() < 1e-14);
        for j in 0..=20 {
            let a = esseen_estimate(3, 10, j).unwrap();
            let b = esseen_estimate(3, 10, 20 - j).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
        assert!(esseen_estimate(3, 10, 21).is_err());
    }

    #[test]
    fn ratio_parity_cases() {
        let r = llt_layer_ratio(4, 5).unwrap();
        let s = LatticeStepLaw::new(4).unwrap().sigma() * 5f64.sqrt();
        assert!((r.x_lower + 1.5 / s).abs() < 1e-14);
        assert!((r.x_upper + 0.5 / s).abs() < 1e-14);
        let b = llt_layer_ratio(2, 11).unwrap();
        assert!((b.exact - 462.0 / 330.0).abs() < 1e-14);
        assert!(b.relative_error < 0.05);
    }

    #[test]
    fn exact_mass() {
        assert!(probabilities_sum_to_one(3, 12).unwrap());
        assert!(probabilities_sum_to_one(5, 7).unwrap());
    }

    #[test]
    fn csv_shape() {
        let rows = llt_table(3, 4).unwrap();
        let csv = to_csv(&rows);
        assert_eq!(csv.lines().count(), 10);
        assert!(csv.starts_with("t,n,j,exact,estimate,abs_error,n_abs_error"));
    }
}
