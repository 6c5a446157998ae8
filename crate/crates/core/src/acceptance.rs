//! The nine acceptance checks, each returning a one-line verdict. Shared by
//! the `acceptance` integration test and the `all-acceptance` command.

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Signed;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::asymptotics::{rational_to_f64, t1, t1_closed_form_ratio, t1_hypergeometric, t2};
use crate::clt_sim::{exact_defect_moments, sample_defects, uniformity_check, ChainConfig};
use crate::containers::container_trials;
use crate::error::Result;
use crate::exact_count::{count_antichains_brute, count_antichains_layered, macmahon_box, SubposetSpec};
use crate::isoperimetry::{
    chain_of, log_concavity_check, motzkin_gap_check, tsai_scd, validate_scd, verify_clements_lindstrom,
    CheckMode, EmpiricalConstants, DEFAULT_SAMPLES,
};
use crate::kp::kp_check_all;
use crate::llt::{llt_layer_ratio, max_error};
use crate::polymer::{cluster_sums, partition_function_exact, ModelKind, PolymerModel};
use crate::poset::{enumerate_layer, Point};

/// Criteria that cannot be met at the sizes they are stated for; their
/// checks run unchanged and report FAIL.
pub const KNOWN_UNATTAINABLE: &[u8] = &[3, 8];

#[derive(Debug, Clone)]
pub struct AcceptanceConfig {
    pub seed: u64,
    /// Samples per sampler run.
    pub samples: usize,
    pub constants_file: PathBuf,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        AcceptanceConfig {
            seed: 2024,
            samples: 100_000,
            constants_file: PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/constants.json")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    #[serde(skip)]
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "criterion {} {verdict} [{}] {} ({:.1}s)", self.id, self.title, self.detail, self.seconds)
    }
}

struct Checks {
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks { failed: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failed.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    fn finish(self, id: u8, title: &'static str, start: Instant) -> Outcome {
        let mut detail = self.notes.join("; ");
        if !self.failed.is_empty() {
            detail = format!("failed: {}; {detail}", self.failed.join(", "));
        }
        Outcome { id, title, pass: self.failed.is_empty(), detail, seconds: start.elapsed().as_secs_f64() }
    }
}

fn wrap(id: u8, title: &'static str, body: impl FnOnce(&mut Checks) -> Result<()>) -> Outcome {
    let start = Instant::now();
    let mut c = Checks::new();
    if let Err(e) = body(&mut c) {
        c.check(false, format!("error: {e}"));
    }
    c.finish(id, title, start)
}

pub fn exact_counts() -> Outcome {
    wrap(1, "exact counts", |c| {
        let want = [4u32, 20, 980];
        for (n, &w) in (1..=3).zip(&want) {
            let layered = count_antichains_layered(&SubposetSpec::full(3, n))?.count;
            c.check(layered == BigUint::from(w), format!("layered α([3]^{n}) = {layered}"));
        }
        let macmahon = macmahon_box(3, 3, 3);
        c.check(macmahon == BigUint::from(980u32), format!("box formula gives {macmahon}"));
        let mut ranges = 0;
        for n in 1..=3 {
            let top = 2 * n;
            for lo in 0..=top {
                for hi in lo..=top {
                    let spec = SubposetSpec::range(3, n, lo, hi);
                    let b = count_antichains_brute(&spec)?.count;
                    let l = count_antichains_layered(&spec)?.count;
                    c.check(b == l, format!("n={n} [{lo},{hi}] brute {b} vs layered {l}"));
                    ranges += 1;
                }
            }
        }
        c.note(format!("α = 4, 20, 980; brute = layered on {ranges} layer ranges"));
        Ok(())
    })
}

/// A random antichain of `L_{[n+1, 2n]}` in `[3]^n` with one to three points.
pub fn random_antichain_above(n: usize, rng: &mut impl Rng) -> Result<Vec<Point>> {
    let mut pool: Vec<Point> = Vec::new();
    for k in n + 1..=2 * n {
        pool.extend(enumerate_layer(3, n, k)?);
    }
    pool.shuffle(rng);
    let target = rng.gen_range(1..=3);
    let mut out: Vec<Point> = Vec::new();
    for p in pool {
        if out.len() == target {
            break;
        }
        if out.iter().all(|q| !q.comparable(&p)) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

fn pow2(k: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(1) << k)
}

pub fn polymer_identities(seed: u64) -> Outcome {
    wrap(2, "polymer identities", |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut checked = 0;
        for n in 2..=3 {
            let model = PolymerModel::central(n)?;
            let lhs = pow2(model.middle_size()) * partition_function_exact(&model)?;
            let alpha = count_antichains_layered(&SubposetSpec::range(3, n, n - 1, n + 1))?.count;
            c.check(lhs == BigRational::from_integer(alpha.clone().into()), format!("central n={n}: {lhs} vs {alpha}"));
            checked += 1;
            let mut exclusions = vec![Vec::new()];
            for _ in 0..5 {
                exclusions.push(random_antichain_above(n, &mut rng)?);
            }
            for x in exclusions {
                let model = PolymerModel::three_layer(n, &x, false)?;
                let lhs = pow2(model.middle_size()) * partition_function_exact(&model)?;
                let spec = SubposetSpec::range(3, n, n - 2, n).with_exclusion(x.clone());
                let alpha = count_antichains_layered(&spec)?.count;
                let shown: Vec<String> = x.iter().map(|p| p.to_string()).collect();
                c.check(
                    lhs == BigRational::from_integer(alpha.clone().into()),
                    format!("three-layer n={n} X={{{}}}: {lhs} vs {alpha}", shown.join(",")),
                );
                checked += 1;
            }
        }
        c.note(format!("{checked} identities exact"));
        Ok(())
    })
}

pub fn cluster_sum_trends() -> Outcome {
    wrap(3, "cluster sums", |c| {
        let mut abs3 = Vec::new();
        let mut ratio8 = f64::NAN;
        for n in 3..=8 {
            let cap = if n <= 4 { 2 } else { 3 };
            let sums = cluster_sums(&PolymerModel::central(n)?, cap)?;
            if n <= 6 {
                c.check(sums.by_size[1] == t1(n)?, format!("size-1 sum ≠ T1 at n={n}"));
                c.check(sums.by_size[2] == t2(n)?, format!("size-2 sum ≠ T2 at n={n}"));
            }
            if n >= 5 {
                abs3.push(rational_to_f64(&sums.abs_by_size[3]));
            }
            if n == 8 {
                ratio8 = rational_to_f64(&(sums.by_size[2].abs() / &sums.by_size[1]));
            }
        }
        let decreasing = abs3.windows(2).all(|w| w[1] < w[0]);
        c.check(decreasing, "size-3 absolute sums not strictly decreasing over n=5..8");
        c.check(ratio8 < 0.1, format!("|size-2|/size-1 = {ratio8:.4} at n=8"));
        c.note(format!(
            "T1, T2 exact for n=3..6; Σ|size-3| over n=5..8 = {}; |size-2|/size-1 at n=8 = {ratio8:.4}",
            abs3.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", ")
        ));
        Ok(())
    })
}

pub fn hypergeometric_identity() -> Outcome {
    wrap(4, "hypergeometric identity", |c| {
        for n in 1..=30 {
            c.check(t1(n)? == t1_hypergeometric(n)?, format!("T1({n}) differs from the 2F1 form"));
        }
        let ns = [50, 100, 200, 400];
        let ratios: Vec<f64> = ns.iter().map(|&n| t1_closed_form_ratio(n)).collect::<Result<_>>()?;
        let gaps: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
        c.check(gaps.windows(2).all(|w| w[1] < w[0]), "ratio not approaching 1 monotonically");
        c.check(gaps[3] < 0.05, format!("ratio at n=400 is {:.4}", ratios[3]));
        c.note(format!(
            "2F1 form exact for n ≤ 30; T1/closed form at n=50,100,200,400: {}",
            ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(", ")
        ));
        Ok(())
    })
}

pub fn isoperimetry_suite(seed: u64) -> Outcome {
    wrap(5, "isoperimetry", |c| {
        for (t, n) in [(3, 3), (4, 2)] {
            let r = verify_clements_lindstrom(t, n, DEFAULT_SAMPLES, seed)?;
            c.check(matches!(r.mode, CheckMode::Exhaustive), format!("({t},{n}) not exhaustive"));
            c.check(r.holds(), format!("({t},{n}) has {} violations", r.violations));
        }
        for t in 2..=5 {
            for n in 1..=10 {
                c.check(log_concavity_check(t, n)?.holds, format!("log-concavity fails at ({t},{n})"));
            }
        }
        for n in 3..=12 {
            c.check(motzkin_gap_check(n)?.holds, format!("middle-layer gap fails at n={n}"));
        }
        for (t, n) in [(2, 4), (3, 4), (4, 3)] {
            let chains = tsai_scd(t, n)?;
            let r = validate_scd(t, n, &chains)?;
            c.check(r.valid, format!("SCD of [{t}]^{n} invalid"));
            c.check(BigUint::from(r.chains) == r.middle_layer, format!("SCD of [{t}]^{n} has {} chains", r.chains));
        }
        let x = Point::new(4, vec![0, 2, 1, 3, 2, 1])?;
        let want: Vec<Point> = [[0, 2, 1, 3, 0, 1], [0, 2, 1, 3, 1, 1], [0, 2, 1, 3, 2, 1], [0, 2, 1, 3, 2, 2], [0, 2, 1, 3, 2, 3]]
            .iter()
            .map(|v| Point::new(4, v.to_vec()))
            .collect::<Result<_>>()?;
        c.check(chain_of(&x).points == want, "worked chain differs");
        c.note("CL exhaustive on (3,3),(4,2); log-concave t ≤ 5, n ≤ 10; gap n=3..12; SCDs valid; worked chain reproduced");
        Ok(())
    })
}

pub fn container_suite(seed: u64) -> Outcome {
    wrap(6, "containers", |c| {
        let mut notes = Vec::new();
        for n in 5..=7 {
            let r = container_trials(n, 1000, 100, seed)?;
            c.check(r.audit.codegree == 1, format!("codegree {} at n={n}", r.audit.codegree));
            c.check(r.audit.dominance, format!("degree dominance fails at n={n}"));
            c.check(r.kappa_failures == 0, format!("κ bound fails {} times at n={n}", r.kappa_failures));
            c.check(r.phi_failures == 0, format!("φ conditions fail {} times at n={n}", r.phi_failures));
            c.check(r.psi_failures == 0, format!("ψ conditions fail {} times at n={n}", r.psi_failures));
            c.check(r.cover_failures == 0, format!("cover bound fails {} times at n={n}", r.cover_failures));
            notes.push(format!(
                "n={n}: Δ=1, δ={:.3}, φ={}, ψ={}, mean T₀ draws {:.2}",
                r.audit.delta, r.phi, r.psi, r.mean_draws
            ));
        }
        c.note(notes.join("; "));
        Ok(())
    })
}

/// Relative tolerance of the central layer-ratio prediction at t=3, n=10.
pub const LLT_RATIO_TOLERANCE: f64 = 0.01;

pub fn llt_suite() -> Outcome {
    wrap(7, "local limit", |c| {
        let scaled: Vec<f64> = [20, 40, 80, 160].iter().map(|&n| Ok(n as f64 * max_error(3, n)?)).collect::<Result<_>>()?;
        c.check(scaled.windows(2).all(|w| w[1] < w[0]), "n·error not decreasing");
        let r = llt_layer_ratio(3, 10)?;
        c.check(r.relative_error < LLT_RATIO_TOLERANCE, format!("ratio error {:.2e}", r.relative_error));
        c.note(format!(
            "n·max error at n=20,40,80,160: {}; ratio {:.5} vs exact {:.5}",
            scaled.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", "),
            r.predicted,
            r.exact
        ));
        Ok(())
    })
}

pub fn sampling_suite(seed: u64, samples: usize) -> Outcome {
    wrap(8, "sampling", |c| {
        let u = uniformity_check(2, 1_000_000, None, seed)?;
        c.check(u.pass, format!("χ² = {:.2} above {:.2}", u.chi_square, u.critical_99));
        let mut means = Vec::new();
        let ratio = |n: usize| -> Result<(f64, f64, f64)> {
            let s = sample_defects(ChainConfig::new(n, samples, seed.wrapping_add(n as u64)))?;
            Ok((s.mean_over_t1, s.variance_over_t1, s.small_defect_fraction))
        };
        for n in 2..=4 {
            let s = sample_defects(ChainConfig::new(n, samples, seed.wrapping_add(100 + n as u64)))?;
            let exact = rational_to_f64(&exact_defect_moments(n)?.0);
            let z = (s.cumulants[0] - exact) / s.se_mean;
            c.check(z.abs() <= 3.0, format!("mean at n={n} off by {z:.2} SE"));
            means.push(format!("n={n} {:.4} vs {exact:.4} ({z:+.2} SE)", s.cumulants[0]));
        }
        let (m4, v4, _) = ratio(4)?;
        let mut fractions = Vec::new();
        let mut at8 = (0.0, 0.0);
        for n in 5..=8 {
            let (m, v, f) = ratio(n)?;
            fractions.push(f);
            if n == 8 {
                at8 = (m, v);
            }
        }
        c.check((at8.0 - 1.0).abs() < (m4 - 1.0).abs(), format!("κ̂1/T1 {:.3} at n=8 vs {m4:.3} at n=4", at8.0));
        c.check((at8.1 - 1.0).abs() < (v4 - 1.0).abs(), format!("κ̂2/T1 {:.3} at n=8 vs {v4:.3} at n=4", at8.1));
        c.check(fractions.windows(2).all(|w| w[1] >= w[0]), "small-defect fraction decreasing over n=5..8");
        c.note(format!(
            "χ² {:.2} (crit {:.2}); means {}; κ̂1/T1 {m4:.3}→{:.3}, κ̂2/T1 {v4:.3}→{:.3}; small-defect fraction n=5..8 {}",
            u.chi_square,
            u.critical_99,
            means.join(", "),
            at8.0,
            at8.1,
            fractions.iter().map(|f| format!("{f:.4}")).collect::<Vec<_>>().join(", ")
        ));
        Ok(())
    })
}

pub fn kp_certificates(constants_file: &std::path::Path) -> Outcome {
    wrap(9, "truncated KP certificates", |c| {
        let constants = EmpiricalConstants::read(constants_file)?;
        let k = constants.kp();
        for kind in [ModelKind::Central, ModelKind::ThreeLayer] {
            let reports = kp_check_all(kind, 20, 2, &k)?;
            let bad = reports.iter().filter(|r| !r.pass).count();
            let worst = reports.iter().map(|r| r.partial_sum / r.f_target).fold(0.0, f64::max);
            c.check(bad == 0, format!("{kind:?}: {bad} anchors fail"));
            c.note(format!("{kind:?}: {} anchors, worst sum/f = {worst:.2e}", reports.len()));
        }
        c.note(format!("c = {:.4}, c' = {:.5} (constants {})", k.c, k.c_prime, constants.version));
        Ok(())
    })
}

/// Runs every criterion in order.
pub fn run_all(config: &AcceptanceConfig) -> Vec<Outcome> {
    run_each(config, |_| {})
}

/// Runs every criterion, handing each outcome to `sink` as it completes.
pub fn run_each(config: &AcceptanceConfig, mut sink: impl FnMut(&Outcome)) -> Vec<Outcome> {
    let runners: Vec<Box<dyn Fn() -> Outcome + '_>> = vec![
        Box::new(exact_counts),
        Box::new(|| polymer_identities(config.seed)),
        Box::new(cluster_sum_trends),
        Box::new(hypergeometric_identity),
        Box::new(|| isoperimetry_suite(config.seed)),
        Box::new(|| container_suite(config.seed)),
        Box::new(llt_suite),
        Box::new(|| sampling_suite(config.seed, config.samples)),
        Box::new(|| kp_certificates(&config.constants_file)),
    ];
    runners
        .iter()
        .map(|r| {
            let o = r();
            sink(&o);
            o
        })
        .collect()
}

/// Whether every criterion outside [`KNOWN_UNATTAINABLE`] passed.
pub fn attainable_all_pass(outcomes: &[Outcome]) -> bool {
    outcomes.iter().all(|o| o.pass || KNOWN_UNATTAINABLE.contains(&o.id))
}
