//! Markov-chain sampling of uniform antichains of the three middle layers
//! `L_{[n-1, n+1]}` of `[3]^n`, with defect statistics (points off the
//! middle layer) and their comparison against exact tallies and the
//! first-order cluster sum.
//!
//! The chain is heat-bath Glauber dynamics: pick a uniform site and a fair
//! coin; heads inserts the site if that keeps an antichain, tails removes
//! it. Every move is reversible with equal probability both ways, so the
//! uniform law is stationary, and self-loops make the chain aperiodic.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::asymptotics::{rational_to_f64, t1};
use crate::error::{domain, refused, Result};
use crate::exact_count::{defect_distribution_exact, enumerate_antichains, SubposetSpec};
use crate::poset::{LayerSlice, Point};

/// Largest `n` the sampler accepts.
pub const MAX_N: usize = 10;
/// Fewest samples accepted by [`normality_diagnostics`].
pub const MIN_NORMALITY_SAMPLES: usize = 10_000;
const BATCHES: usize = 20;

/// An antichain of `L_{[n-1, n+1]}` with per-site counts of selected
/// comparable points.
#[derive(Debug, Clone)]
pub struct AntichainState {
    n: usize,
    points: Vec<Point>,
    /// 0, 1, 2 for the lower, middle and upper layer.
    level: Vec<u8>,
    comparable: Vec<Vec<u32>>,
    /// Same-layer defect sites sharing a middle neighbour.
    linked: Vec<Vec<u32>>,
    selected: Vec<bool>,
    conflicts: Vec<u16>,
    defects: usize,
}

impl AntichainState {
    /// The empty antichain.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_N {
            return Err(domain!("sampler supports 1 <= n <= {MAX_N}, got {n}"));
        }
        let slice = LayerSlice::new(3, n, n - 1, n + 1)?;
        let len = slice.len();
        let level: Vec<u8> = (0..len).map(|i| (slice.point(i).rank() + 1 - n) as u8).collect();
        let two_up = |i: usize| slice.up(i).iter().flat_map(|&j| slice.up(j as usize).iter().copied());
        let two_down = |i: usize| slice.down(i).iter().flat_map(|&j| slice.down(j as usize).iter().copied());
        let mut comparable = Vec::with_capacity(len);
        let mut linked = Vec::with_capacity(len);
        for i in 0..len {
            let mut c: Vec<u32> = slice.up(i).iter().chain(slice.down(i)).copied().collect();
            let mut l: Vec<u32> = Vec::new();
            match level[i] {
                0 => {
                    c.extend(two_up(i));
                    l.extend(slice.up(i).iter().flat_map(|&j| slice.down(j as usize).iter().copied()));
                }
                2 => {
                    c.extend(two_down(i));
                    l.extend(slice.down(i).iter().flat_map(|&j| slice.up(j as usize).iter().copied()));
                }
                _ => {}
            }
            c.sort_unstable();
            c.dedup();
            l.sort_unstable();
            l.dedup();
            l.retain(|&j| j as usize != i);
            comparable.push(c);
            linked.push(l);
        }
        Ok(AntichainState {
            n,
            points: slice.points().to_vec(),
            level,
            comparable,
            linked,
            selected: vec![false; len],
            conflicts: vec![0; len],
            defects: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, site: usize) -> &Point {
        &self.points[site]
    }

    pub fn site_of(&self, p: &Point) -> Option<usize> {
        self.points.iter().position(|q| q == p)
    }

    pub fn contains(&self, site: usize) -> bool {
        self.selected[site]
    }

    pub fn selected_sites(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.selected[i])
    }

    /// `|I ∖ L_n|`.
    pub fn defects(&self) -> usize {
        self.defects
    }

    /// Inserts (`coin = true`) or removes (`coin = false`) `site` when the
    /// result is an antichain; returns whether the state changed.
    pub fn glauber_step(&mut self, site: usize, coin: bool) -> bool {
        let changed = if coin {
            if self.selected[site] || self.conflicts[site] > 0 {
                false
            } else {
                self.selected[site] = true;
                for &c in &self.comparable[site] {
                    self.conflicts[c as usize] += 1;
                }
                true
            }
        } else if self.selected[site] {
            self.selected[site] = false;
            for &c in &self.comparable[site] {
                self.conflicts[c as usize] -= 1;
            }
            true
        } else {
            false
        };
        if changed && self.level[site] != 1 {
            if coin {
                self.defects += 1;
            } else {
                self.defects -= 1;
            }
        }
        changed
    }

    /// Full pairwise check, independent of the cached counts.
    pub fn is_antichain(&self) -> bool {
        let sel: Vec<&Point> = self.selected_sites().map(|i| &self.points[i]).collect();
        sel.iter().enumerate().all(|(i, p)| sel[i + 1..].iter().all(|q| !p.comparable(q)))
    }

    /// Sizes of the components of the defect set, points being joined when
    /// they share a middle-layer neighbour.
    pub fn defect_components(&self) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut sizes = Vec::new();
        for s in self.selected_sites().filter(|&i| self.level[i] != 1) {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![s];
            let mut size = 0;
            while let Some(v) = stack.pop() {
                size += 1;
                for &w in &self.linked[v] {
                    let w = w as usize;
                    if self.selected[w] && !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            sizes.push(size);
        }
        sizes
    }

    /// Whether every defect component has at most two points.
    pub fn in_small_defect_class(&self) -> bool {
        self.defect_components().iter().all(|&s| s <= 2)
    }

    fn bits(&self) -> u64 {
        self.selected_sites().fold(0u64, |m, i| m | 1 << i)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChainConfig {
    pub n: usize,
    pub samples: usize,
    /// Defaults to `50 |state|` steps.
    pub burn_in: Option<u64>,
    /// Defaults to `|state|` steps.
    pub thinning: Option<u64>,
    pub seed: u64,
    /// Independent chains; the samples are split evenly between them.
    pub chains: usize,
}

impl ChainConfig {
    pub fn new(n: usize, samples: usize, seed: u64) -> Self {
        ChainConfig { n, samples, burn_in: None, thinning: None, seed, chains: 1 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleStats {
    pub n: usize,
    pub seed: u64,
    pub samples: usize,
    pub burn_in: u64,
    pub thinning: u64,
    pub chains: usize,
    /// `histogram[k]` samples had `k` defects.
    pub histogram: Vec<u64>,
    /// Empirical cumulants `κ̂₁ … κ̂₄` of the defect count.
    pub cumulants: [f64; 4],
    /// Batch-means standard errors of `κ̂₁` and `κ̂₂`.
    pub se_mean: f64,
    pub se_variance: f64,
    pub t1: f64,
    pub mean_over_t1: f64,
    pub variance_over_t1: f64,
    /// Fraction of samples whose defect components all have size at most two.
    pub small_defect_fraction: f64,
    pub small_defect_se: f64,
    /// Empirical `E (1/2)^{defects}` and its standard error.
    pub pgf_half: f64,
    pub pgf_half_se: f64,
}

struct ChainOutput {
    defects: Vec<u32>,
    small: Vec<bool>,
}

fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

fn run_chain(n: usize, samples: usize, burn_in: u64, thinning: u64, mut rng: ChaCha8Rng) -> Result<ChainOutput> {
    let mut state = AntichainState::new(n)?;
    let len = state.len();
    let step = |state: &mut AntichainState, rng: &mut ChaCha8Rng| {
        let site = rng.gen_range(0..len);
        let coin = rng.gen::<bool>();
        state.glauber_step(site, coin);
    };
    for _ in 0..burn_in {
        step(&mut state, &mut rng);
    }
    let mut out = ChainOutput { defects: Vec::with_capacity(samples), small: Vec::with_capacity(samples) };
    for _ in 0..samples {
        for _ in 0..thinning {
            step(&mut state, &mut rng);
        }
        out.defects.push(state.defects() as u32);
        out.small.push(state.in_small_defect_class());
    }
    Ok(out)
}

/// Plain cumulants `(mean, m₂, m₃, m₄ - 3m₂²)` of a sample.
pub fn cumulants(data: &[f64]) -> [f64; 4] {
    if data.is_empty() {
        return [0.0; 4];
    }
    let len = data.len() as f64;
    let mean = data.iter().sum::<f64>() / len;
    let m = |k: i32| data.iter().map(|x| (x - mean).powi(k)).sum::<f64>() / len;
    let m2 = m(2);
    [mean, m2, m(3), m(4) - 3.0 * m2 * m2]
}

/// Standard error of the mean of `f` from batch means over each chain.
fn batch_se(chains: &[Vec<f64>]) -> f64 {
    let mut means = Vec::new();
    for c in chains {
        let size = c.len() / BATCHES;
        if size == 0 {
            continue;
        }
        means.extend(c.chunks_exact(size).map(|b| b.iter().sum::<f64>() / size as f64));
    }
    if means.len() < 2 {
        return f64::NAN;
    }
    let k = means.len() as f64;
    let mu = means.iter().sum::<f64>() / k;
    (means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
}

/// Runs the configured chains and summarises the defect counts.
pub fn sample_defects(config: ChainConfig) -> Result<SampleStats> {
    if config.samples == 0 || config.chains == 0 {
        return Err(domain!("need at least one sample and one chain"));
    }
    let len = AntichainState::new(config.n)?.len() as u64;
    let burn_in = config.burn_in.unwrap_or(50 * len);
    let thinning = config.thinning.unwrap_or(len).max(1);
    let per_chain = config.samples.div_ceil(config.chains);
    let outputs: Vec<ChainOutput> = (0..config.chains)
        .into_par_iter()
        .map(|c| {
            let take = per_chain.min(config.samples - (c * per_chain).min(config.samples));
            run_chain(config.n, take, burn_in, thinning, chain_rng(config.seed, c))
        })
        .collect::<Result<_>>()?;

    let all: Vec<f64> = outputs.iter().flat_map(|o| o.defects.iter().map(|&d| d as f64)).collect();
    let k = cumulants(&all);
    let mut histogram = vec![0u64; all.iter().fold(0.0f64, |a, &b| a.max(b)) as usize + 1];
    for &d in &all {
        histogram[d as usize] += 1;
    }
    let per = |f: &dyn Fn(&ChainOutput, usize) -> f64| -> Vec<Vec<f64>> {
        outputs.iter().map(|o| (0..o.defects.len()).map(|i| f(o, i)).collect()).collect()
    };
    let mean = k[0];
    let sq = per(&|o, i| (o.defects[i] as f64 - mean).powi(2));
    let small = per(&|o, i| o.small[i] as u8 as f64);
    let pgf = per(&|o, i| 0.5f64.powi(o.defects[i] as i32));
    let avg = |v: &[Vec<f64>]| v.iter().flatten().sum::<f64>() / all.len() as f64;
    let t1 = rational_to_f64(&t1(config.n)?);
    Ok(SampleStats {
        n: config.n,
        seed: config.seed,
        samples: all.len(),
        burn_in,
        thinning,
        chains: config.chains,
        histogram,
        cumulants: k,
        se_mean: batch_se(&per(&|o, i| o.defects[i] as f64)),
        se_variance: batch_se(&sq),
        t1,
        mean_over_t1: k[0] / t1,
        variance_over_t1: k[1] / t1,
        small_defect_fraction: avg(&small),
        small_defect_se: batch_se(&small),
        pgf_half: avg(&pgf),
        pgf_half_se: batch_se(&pgf),
    })
}

/// Exact mean and variance of the defect count under the uniform law.
pub fn exact_defect_moments(n: usize) -> Result<(BigRational, BigRational)> {
    let tally = defect_distribution_exact(n)?;
    let total: BigUint = tally.values().sum();
    let moment = |p: u32| -> BigRational {
        let s: BigUint = tally.iter().map(|(&k, c)| c * BigUint::from(k).pow(p)).sum();
        BigRational::new(s.into(), total.clone().into())
    };
    let mean = moment(1);
    let var = moment(2) - &mean * &mean;
    Ok((mean, var))
}

/// Exact `E (1/2)^{defects}`.
pub fn exact_pgf_half(n: usize) -> Result<BigRational> {
    let tally = defect_distribution_exact(n)?;
    let total: BigUint = tally.values().sum();
    let mut acc = BigRational::zero();
    for (&k, c) in &tally {
        acc += BigRational::new(c.clone().into(), (BigUint::from(1u8) << k).into());
    }
    Ok(acc / BigRational::from_integer(total.into()))
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusReport {
    pub n: usize,
    pub antichains: u64,
    pub small_defect: u64,
    pub fraction: f64,
}

/// Exact share of antichains whose defect components have size at most
/// two, by enumeration.
pub fn exact_defect_census(n: usize) -> Result<CensusReport> {
    if n > 3 {
        return Err(refused!("exact census enumerates antichains and supports n <= 3, got {n}"));
    }
    let mut state = AntichainState::new(n)?;
    let spec = SubposetSpec::range(3, n, n - 1, n + 1);
    let (mut total, mut small) = (0u64, 0u64);
    for ac in enumerate_antichains(&spec)? {
        let sites: Vec<usize> = ac.iter().map(|p| state.site_of(p).expect("point of the slice")).collect();
        for &s in &sites {
            state.glauber_step(s, true);
        }
        total += 1;
        small += state.in_small_defect_class() as u64;
        for &s in &sites {
            state.glauber_step(s, false);
        }
    }
    Ok(CensusReport { n, antichains: total, small_defect: small, fraction: small as f64 / total as f64 })
}

/// Fraction of samples in the small-defect class with its standard error.
pub fn defect_structure_census(stats: &SampleStats) -> (f64, f64) {
    (stats.small_defect_fraction, stats.small_defect_se)
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformityReport {
    pub n: usize,
    pub steps: u64,
    pub thinning: u64,
    pub observations: u64,
    pub support: usize,
    pub counts: Vec<u64>,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub critical_99: f64,
    pub pass: bool,
}

/// Default recording interval of [`uniformity_check`] in multiples of the
/// state size; one state size of steps leaves enough correlation to
/// inflate the χ² statistic.
pub const UNIFORMITY_THINNING_FACTOR: u64 = 10;

/// Runs one chain for `steps` steps from the empty antichain, records the
/// state every `thinning` steps (default `10 |state|`) and compares the visit counts with the
/// uniform law over every antichain by a χ² test at the 99% level.
pub fn uniformity_check(n: usize, steps: u64, thinning: Option<u64>, seed: u64) -> Result<UniformityReport> {
    if n > 3 {
        return Err(refused!("uniformity check enumerates antichains and supports n <= 3, got {n}"));
    }
    let mut state = AntichainState::new(n)?;
    let spec = SubposetSpec::range(3, n, n - 1, n + 1);
    let index: HashMap<u64, usize> = enumerate_antichains(&spec)?
        .enumerate()
        .map(|(i, ac)| (ac.iter().fold(0u64, |m, p| m | 1 << state.site_of(p).expect("point of the slice")), i))
        .collect();
    let support = index.len();
    let len = state.len();
    let thinning = thinning.unwrap_or(UNIFORMITY_THINNING_FACTOR * len as u64).max(1);
    let mut counts = vec![0u64; support];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in 1..=steps {
        let site = rng.gen_range(0..len);
        let coin = rng.gen::<bool>();
        state.glauber_step(site, coin);
        if s % thinning == 0 {
            counts[index[&state.bits()]] += 1;
        }
    }
    let observations: u64 = counts.iter().sum();
    let expected = observations as f64 / support as f64;
    let chi_square = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let df = support - 1;
    let critical_99 = ChiSquared::new(df as f64).map_err(|e| domain!("{e}"))?.inverse_cdf(0.99);
    Ok(UniformityReport {
        n,
        steps,
        thinning,
        observations,
        support,
        counts,
        chi_square,
        degrees_of_freedom: df,
        critical_99,
        pass: chi_square <= critical_99,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalityReport {
    pub n: usize,
    pub samples: usize,
    /// `κ̂₃ / κ̂₂^{3/2}` and `κ̂₄ / κ̂₂²`.
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Variance of the standardised count, 1 up to rounding.
    pub standardized_variance: f64,
    /// Supremum distance between the standardised empirical CDF and `Φ`.
    pub ks_distance: f64,
}

pub fn normality_diagnostics(stats: &SampleStats) -> Result<NormalityReport> {
    if stats.samples < MIN_NORMALITY_SAMPLES {
        return Err(refused!(
            "normality diagnostics need at least {MIN_NORMALITY_SAMPLES} samples, got {}",
            stats.samples
        ));
    }
    let [mean, var, k3, k4] = stats.cumulants;
    if var <= 0.0 {
        return Err(refused!("defect count has zero sample variance"));
    }
    let sd = var.sqrt();
    let total = stats.samples as f64;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut below = 0.0;
    let mut ks: f64 = 0.0;
    let mut std_var = 0.0;
    for (k, &c) in stats.histogram.iter().enumerate() {
        let z = (k as f64 - mean) / sd;
        let phi = normal.cdf(z);
        ks = ks.max((below / total - phi).abs());
        below += c as f64;
        ks = ks.max((below / total - phi).abs());
        std_var += c as f64 * z * z;
    }
    Ok(NormalityReport {
        n: stats.n,
        samples: stats.samples,
        skewness: k3 / var.powf(1.5),
        excess_kurtosis: k4 / (var * var),
        standardized_variance: std_var / total,
        ks_distance: ks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[u8]) -> Point {
        Point::new(3, c.to_vec()).unwrap()
    }

    #[test]
    fn moves_respect_comparability() {
        let mut s = AntichainState::new(2).unwrap();
        let mid = s.site_of(&pt(&[1, 1])).unwrap();
        assert!(s.glauber_step(mid, true));
        let below = s.site_of(&pt(&[0, 1])).unwrap();
        assert!(!s.glauber_step(below, true));
        let side = s.site_of(&pt(&[0, 2])).unwrap();
        assert!(s.glauber_step(side, true));
        assert_eq!(s.defects(), 0);
        assert!(s.glauber_step(mid, false));
        assert!(s.glauber_step(below, false) == false);
        assert!(s.is_antichain());
    }

    #[test]
    fn removals_reach_empty_set() {
        let mut s = AntichainState::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let site = rng.gen_range(0..s.len());
            s.glauber_step(site, rng.gen());
            assert!(s.is_antichain());
        }
        let sites: Vec<usize> = s.selected_sites().collect();
        for site in sites {
            assert!(s.glauber_step(site, false));
            assert!(s.is_antichain());
        }
        assert_eq!(s.selected_sites().count(), 0);
        assert_eq!(s.defects(), 0);
    }

    #[test]
    fn exact_references_small() {
        let (mean, _) = exact_defect_moments(2).unwrap();
        assert_eq!(mean, BigRational::new(2.into(), 3.into()));
        let c = exact_defect_census(2).unwrap();
        assert_eq!((c.antichains, c.small_defect), (18, 18));
        assert!(exact_defect_census(4).is_err());
    }

    #[test]
    fn cumulant_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data: Vec<f64> = (0..5000).map(|_| rng.gen::<f64>().powi(3)).collect();
        let (a, b) = (1.7, 2.5);
        let scaled: Vec<f64> = data.iter().map(|x| (x - a) / b).collect();
        let k = cumulants(&data);
        let ks = cumulants(&scaled);
        assert!((ks[0] - (k[0] - a) / b).abs() < 1e-12);
        for l in 1..4 {
            let want = k[l] / b.powi(l as i32 + 1);
            assert!((ks[l] - want).abs() < 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn short_run_statistics() {
        let stats = sample_defects(ChainConfig::new(2, 2000, 5)).unwrap();
        assert_eq!(stats.histogram.iter().sum::<u64>(), 2000);
        assert_eq!(stats.burn_in, 350);
        assert!(normality_diagnostics(&stats).is_err());
        assert!(sample_defects(ChainConfig::new(11, 10, 1)).is_err());
    }
}
