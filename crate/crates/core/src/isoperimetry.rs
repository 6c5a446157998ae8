//! Isoperimetry on the layers of `[t]^n`: compression, the
//! Clements–Lindström containments, normalized matching, layer ratios,
//! expansion bounds for sets below the middle, Tsai's symmetric chain
//! decomposition and the two-middle-layer inequality.
//!
//! Subset checks are exhaustive when the source layer has at most
//! [`EXHAUSTIVE_MAX_POINTS`] points (walked in Gray-code order so each step
//! costs one vertex's degree) and fall back to seeded uniform sampling
//! otherwise. Sampled reports are labeled as such.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::motzkin;
use crate::error::{domain, refused, Result};
use crate::kp::KpConstants;
use crate::poset::{enumerate_all, layer_sizes, middle_rank, require_layer, LayerSlice, Point, PointSet};
use crate::report::{ser_biguint, ser_rational};

pub const EXHAUSTIVE_MAX_POINTS: usize = 22;
pub const DEFAULT_SAMPLES: usize = 100_000;
/// Largest grid handled by the whole-poset operations (SCD, structure counts).
pub const MAX_GRID_POINTS: usize = 200_000;

fn grid_points(t: usize, n: usize) -> Result<usize> {
    let total = (t as f64).powi(n as i32);
    if t < 2 || n == 0 {
        return Err(domain!("need t >= 2 and n >= 1"));
    }
    if total > MAX_GRID_POINTS as f64 {
        return Err(refused!("[{t}]^{n} has {total} points, above {MAX_GRID_POINTS}"));
    }
    Ok(total as usize)
}

fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(num.into(), den.into())
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// The first `|S|` points of the layer of `S` in lexicographic order.
pub fn compress<'a>(set: &PointSet<'a>) -> Result<PointSet<'a>> {
    segment(set, true)
}

/// The last `|S|` points of the layer of `S` in lexicographic order.
pub fn last_segment<'a>(set: &PointSet<'a>) -> Result<PointSet<'a>> {
    segment(set, false)
}

fn segment<'a>(set: &PointSet<'a>, first: bool) -> Result<PointSet<'a>> {
    let slice = set.slice();
    let Some(k) = require_layer(set, "compression")? else {
        return Ok(slice.empty_set());
    };
    let r = slice.layer_range(k);
    let s = set.len();
    Ok(if first { slice.set_from_indices(r.start..r.start + s) } else { slice.set_from_indices(r.end - s..r.end) })
}

/// How a family of subsets was examined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum CheckMode {
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

impl CheckMode {
    fn join(self, other: CheckMode) -> CheckMode {
        if self == CheckMode::Exhaustive {
            other
        } else {
            self
        }
    }
}

/// Comparability between two layers, in local lexicographic positions.
struct LayerGraph {
    from_points: Vec<Point>,
    to_len: usize,
    nbrs: Vec<Vec<u32>>,
}

impl LayerGraph {
    fn new(t: usize, n: usize, from: usize, to: usize) -> Result<Self> {
        if from == to {
            return Err(domain!("layers must differ"));
        }
        let slice = LayerSlice::new(t, n, from.min(to), from.max(to))?;
        let fr = slice.layer_range(from);
        let tr = slice.layer_range(to);
        let mut nbrs = Vec::with_capacity(fr.len());
        for i in fr.clone() {
            let mut frontier = vec![i as u32];
            for _ in 0..from.abs_diff(to) {
                let mut next: Vec<u32> = frontier
                    .iter()
                    .flat_map(|&p| if to > from { slice.up(p as usize) } else { slice.down(p as usize) })
                    .copied()
                    .collect();
                next.sort_unstable();
                next.dedup();
                frontier = next;
            }
            nbrs.push(frontier.into_iter().map(|p| p - tr.start as u32).collect());
        }
        Ok(LayerGraph { from_points: fr.map(|i| slice.point(i).clone()).collect(), to_len: tr.len(), nbrs })
    }

    fn from_len(&self) -> usize {
        self.from_points.len()
    }

    fn shadow_len(&self, members: &[usize], scratch: &mut Vec<bool>) -> usize {
        scratch.clear();
        scratch.resize(self.to_len, false);
        let mut count = 0;
        for &m in members {
            for &y in &self.nbrs[m] {
                if !std::mem::replace(&mut scratch[y as usize], true) {
                    count += 1;
                }
            }
        }
        count
    }

    /// `(min position + 1, max position + 1)` of the shadow of each prefix
    /// (`first`) or suffix of the source layer, by size.
    fn segment_extremes(&self, first: bool) -> Vec<(usize, usize)> {
        let len = self.from_len();
        let mut out = vec![(usize::MAX, 0); len + 1];
        let (mut lo, mut hi) = (usize::MAX, 0);
        for s in 1..=len {
            let p = if first { s - 1 } else { len - s };
            for &y in &self.nbrs[p] {
                lo = lo.min(y as usize + 1);
                hi = hi.max(y as usize + 1);
            }
            out[s] = (lo, hi);
        }
        out
    }

    /// Sizes of the shadows of suffixes (`first = false`) or prefixes.
    fn segment_shadow_sizes(&self, first: bool) -> Vec<usize> {
        let len = self.from_len();
        let mut seen = vec![false; self.to_len];
        let mut count = 0;
        let mut out = vec![0; len + 1];
        for s in 1..=len {
            let p = if first { s - 1 } else { len - s };
            for &y in &self.nbrs[p] {
                if !std::mem::replace(&mut seen[y as usize], true) {
                    count += 1;
                }
            }
            out[s] = count;
        }
        out
    }

    /// Calls `visit(size, shadow size, members)` for subsets of the source
    /// layer: every nonempty subset when the layer is small, otherwise
    /// `samples` uniform random subsets. `members` is built on demand.
    fn walk(&self, samples: usize, seed: u64, mut visit: impl FnMut(usize, usize, &dyn Fn() -> Vec<usize>)) -> (CheckMode, u64) {
        let len = self.from_len();
        if len <= EXHAUSTIVE_MAX_POINTS {
            let mut cover = vec![0u32; self.to_len];
            let mut covered = 0usize;
            let mut mask = 0u64;
            for k in 1u64..(1u64 << len) {
                let b = k.trailing_zeros() as usize;
                mask ^= 1 << b;
                if mask >> b & 1 == 1 {
                    for &y in &self.nbrs[b] {
                        covered += (cover[y as usize] == 0) as usize;
                        cover[y as usize] += 1;
                    }
                } else {
                    for &y in &self.nbrs[b] {
                        cover[y as usize] -= 1;
                        covered -= (cover[y as usize] == 0) as usize;
                    }
                }
                let m = mask;
                visit(m.count_ones() as usize, covered, &|| (0..len).filter(|&i| m >> i & 1 == 1).collect());
            }
            (CheckMode::Exhaustive, (1u64 << len) - 1)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut scratch = Vec::new();
            let mut done = 0u64;
            for _ in 0..samples {
                let members: Vec<usize> = (0..len).filter(|_| rng.gen::<bool>()).collect();
                if members.is_empty() {
                    continue;
                }
                let shadow = self.shadow_len(&members, &mut scratch);
                visit(members.len(), shadow, &|| members.clone());
                done += 1;
            }
            (CheckMode::Sampled { samples, seed }, done)
        }
    }

    fn describe(&self, members: &[usize]) -> Vec<String> {
        members.iter().map(|&i| self.from_points[i].to_string()).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClWitness {
    pub layer: usize,
    /// `"down"` for `N-(C(S)) ⊆ C(N-(S))`, `"up"` for `N+(L(S)) ⊆ L(N+(S))`.
    pub direction: &'static str,
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClReport {
    pub t: usize,
    pub n: usize,
    #[serde(flatten)]
    pub mode: CheckMode,
    pub subsets_checked: u64,
    pub violations: u64,
    pub witness: Option<ClWitness>,
}

impl ClReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `N-(C(S)) ⊆ C(N-(S))` and `N+(L(S)) ⊆ L(N+(S))` for subsets of
/// every layer. Both right-hand sides are segments determined by a shadow
/// size, so each containment reduces to comparing the extreme position of
/// a precomputed segment shadow against `|N±(S)|`; the test is still
/// setwise.
pub fn verify_clements_lindstrom(t: usize, n: usize, samples: usize, seed: u64) -> Result<ClReport> {
    grid_points(t, n)?;
    let top = (t - 1) * n;
    let mut report =
        ClReport { t, n, mode: CheckMode::Exhaustive, subsets_checked: 0, violations: 0, witness: None };
    for k in 0..=top {
        if k > 0 {
            let g = LayerGraph::new(t, n, k, k - 1)?;
            let need = g.segment_extremes(true);
            let (mode, count) = g.walk(samples, seed ^ (2 * k as u64), |s, shadow, members| {
                if need[s].1 > shadow {
                    report.violations += 1;
                    report.witness.get_or_insert_with(|| ClWitness {
                        layer: k,
                        direction: "down",
                        set: g.describe(&members()),
                    });
                }
            });
            report.mode = report.mode.join(mode);
            report.subsets_checked += count;
        }
        if k < top {
            let g = LayerGraph::new(t, n, k, k + 1)?;
            let need = g.segment_extremes(false);
            let to_len = g.to_len;
            let (mode, count) = g.walk(samples, seed ^ (2 * k as u64 + 1), |s, shadow, members| {
                if need[s].0 <= to_len - shadow {
                    report.violations += 1;
                    report.witness.get_or_insert_with(|| ClWitness { layer: k, direction: "up", set: g.describe(&members()) });
                }
            });
            report.mode = report.mode.join(mode);
            report.subsets_checked += count;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct NmpReport {
    pub t: usize,
    pub n: usize,
    pub from: usize,
    pub to: usize,
    #[serde(flatten)]
    pub mode: CheckMode,
    pub subsets_checked: u64,
    #[serde(serialize_with = "ser_rational")]
    pub min_ratio: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub target: BigRational,
    pub minimizer: Vec<String>,
    pub holds: bool,
}

/// Minimum of `|N(A)|/|A|` over nonempty `A ⊆ L_from`, where `N(A)` is the
/// set of points of `L_to` comparable to some element of `A`, against
/// `ℓ_to/ℓ_from`.
pub fn normalized_matching_check(t: usize, n: usize, from: usize, to: usize, samples: usize, seed: u64) -> Result<NmpReport> {
    let g = LayerGraph::new(t, n, from, to)?;
    let mut best: Option<(usize, usize)> = None;
    let mut minimizer = Vec::new();
    let (mode, subsets_checked) = g.walk(samples, seed, |s, shadow, members| {
        let better = match best {
            None => true,
            Some((bn, bs)) => shadow * bs < bn * s,
        };
        if better {
            best = Some((shadow, s));
            minimizer = g.describe(&members());
        }
    });
    let (num, den) = best.ok_or_else(|| domain!("layer {from} is empty"))?;
    let min_ratio = ratio(num, den);
    let target = ratio(g.to_len, g.from_len());
    Ok(NmpReport { t, n, from, to, mode, subsets_checked, holds: min_ratio >= target, min_ratio, target, minimizer })
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerRatio {
    pub t: usize,
    pub n: usize,
    pub j: usize,
    /// `ℓ_j / ℓ_{j-1}`.
    #[serde(serialize_with = "ser_rational")]
    pub ratio: BigRational,
    /// `t^2 n (ratio - 1)`.
    pub c_emp: f64,
}

pub fn layer_ratio(t: usize, n: usize, j: usize) -> Result<LayerRatio> {
    let sizes = layer_sizes(t, n)?;
    if j == 0 || j >= sizes.len() {
        return Err(domain!("layer index {j} outside 1..={}", sizes.len() - 1));
    }
    let r = BigRational::new(sizes[j].clone().into(), sizes[j - 1].clone().into());
    let c_emp = (t * t * n) as f64 * to_f64(&(r.clone() - BigRational::one()));
    Ok(LayerRatio { t, n, j, ratio: r, c_emp })
}

/// `ℓ_m / ℓ_{m-1}` at the middle for every `t` in `ts` and `2 <= n <= n_max`,
/// returning the smallest implied constant with the full list.
pub fn middle_ratio_floor(ts: &[usize], n_max: usize) -> Result<(LayerRatio, Vec<LayerRatio>)> {
    let mut all = Vec::new();
    for &t in ts {
        for n in 2..=n_max {
            all.push(layer_ratio(t, n, middle_rank(t, n))?);
        }
    }
    let floor = all
        .iter()
        .min_by(|a, b| a.c_emp.total_cmp(&b.c_emp))
        .cloned()
        .ok_or_else(|| domain!("empty grid"))?;
    Ok((floor, all))
}

#[derive(Debug, Clone, Serialize)]
pub struct LogConcavityReport {
    pub t: usize,
    pub n: usize,
    pub holds: bool,
    /// Indices `j` with `ℓ_j^2 < ℓ_{j-1} ℓ_{j+1}`.
    pub failures: Vec<usize>,
}

/// Exact check of `ℓ_j^2 >= ℓ_{j-1} ℓ_{j+1}` along the whole rank sequence.
pub fn log_concavity_check(t: usize, n: usize) -> Result<LogConcavityReport> {
    let l = layer_sizes(t, n)?;
    let failures: Vec<usize> = (1..l.len().saturating_sub(1)).filter(|&j| &l[j] * &l[j] < &l[j - 1] * &l[j + 1]).collect();
    Ok(LogConcavityReport { t, n, holds: failures.is_empty(), failures })
}

#[derive(Debug, Clone, Serialize)]
pub struct MotzkinGap {
    pub n: usize,
    #[serde(serialize_with = "ser_biguint")]
    pub middle: BigUint,
    #[serde(serialize_with = "ser_biguint")]
    pub below: BigUint,
    #[serde(serialize_with = "ser_biguint")]
    pub motzkin: BigUint,
    pub holds: bool,
}

/// `ℓ_n >= ℓ_{n-1} + M_{n-2}` in `[3]^n`, `n >= 2`.
pub fn motzkin_gap_check(n: usize) -> Result<MotzkinGap> {
    if n < 2 {
        return Err(domain!("n must be at least 2"));
    }
    let l = layer_sizes(3, n)?;
    let m = motzkin(n - 2);
    let holds = l[n] >= &l[n - 1] + &m;
    Ok(MotzkinGap { n, middle: l[n].clone(), below: l[n - 1].clone(), motzkin: m, holds })
}

/// Bracket structure of a point: block `i` holds `x_i` right brackets then
/// `t - 1 - x_i` left brackets, brackets are matched left to right, and
/// unmatched ones are replaced by `*`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BracketStructure {
    symbols: Vec<u8>,
    block: usize,
}

impl BracketStructure {
    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn unmatched(&self) -> usize {
        self.symbols.iter().filter(|&&c| c == b'*').count()
    }

    pub fn fully_matched(&self) -> bool {
        self.unmatched() == 0
    }
}

impl fmt::Display for BracketStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, chunk) in self.symbols.chunks(self.block).enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            f.write_str(std::str::from_utf8(chunk).expect("ascii"))?;
        }
        Ok(())
    }
}

fn bracket_configuration(x: &Point) -> Vec<u8> {
    let b = x.t() - 1;
    x.coords().iter().flat_map(|&c| (0..b).map(move |k| if k < c as usize { b')' } else { b'(' })).collect()
}

pub fn bracket_structure(x: &Point) -> BracketStructure {
    let mut symbols = bracket_configuration(x);
    let mut open = Vec::new();
    let mut matched = vec![false; symbols.len()];
    for (i, &c) in symbols.iter().enumerate() {
        if c == b'(' {
            open.push(i);
        } else if let Some(j) = open.pop() {
            matched[i] = true;
            matched[j] = true;
        }
    }
    for (s, m) in symbols.iter_mut().zip(matched) {
        if !m {
            *s = b'*';
        }
    }
    BracketStructure { symbols, block: x.t() - 1 }
}

/// A saturated chain, listed upward.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymmetricChain {
    #[serde(serialize_with = "ser_points")]
    pub points: Vec<Point>,
}

fn ser_points<S: serde::Serializer>(v: &[Point], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|p| p.to_string()))
}

impl SymmetricChain {
    pub fn start_rank(&self) -> usize {
        self.points[0].rank()
    }

    pub fn end_rank(&self) -> usize {
        self.points[self.points.len() - 1].rank()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_saturated(&self) -> bool {
        self.points.windows(2).all(|w| w[0].is_lt(&w[1]) && w[1].rank() == w[0].rank() + 1)
    }

    pub fn is_symmetric(&self) -> bool {
        let p = &self.points[0];
        self.start_rank() + self.end_rank() == (p.t() - 1) * p.n()
    }
}

/// The chain `C_x` of points sharing the bracket structure of `x`: the
/// unmatched positions always read `)…)(…(`, and moving up the chain turns
/// the leftmost unmatched `(` into `)`.
pub fn chain_of(x: &Point) -> SymmetricChain {
    let structure = bracket_structure(x);
    let config = bracket_configuration(x);
    let stars: Vec<usize> = (0..config.len()).filter(|&i| structure.symbols[i] == b'*').collect();
    let b = x.t() - 1;
    let points = (0..=stars.len())
        .map(|r| {
            let mut c = config.clone();
            for (k, &pos) in stars.iter().enumerate() {
                c[pos] = if k < r { b')' } else { b'(' };
            }
            let coords = c.chunks(b).map(|blk| blk.iter().filter(|&&s| s == b')').count() as u8).collect();
            Point::new(x.t(), coords).expect("block counts stay in range")
        })
        .collect();
    SymmetricChain { points }
}

/// Tsai's decomposition: points grouped by bracket structure, each class
/// sorted by rank. Chains are listed by their lowest point.
pub fn tsai_scd(t: usize, n: usize) -> Result<Vec<SymmetricChain>> {
    grid_points(t, n)?;
    let mut classes: HashMap<BracketStructure, Vec<Point>> = HashMap::new();
    for p in enumerate_all(t, n)? {
        classes.entry(bracket_structure(&p)).or_default().push(p);
    }
    let mut chains: Vec<SymmetricChain> = classes
        .into_values()
        .map(|mut pts| {
            pts.sort_by_key(|p| p.rank());
            SymmetricChain { points: pts }
        })
        .collect();
    chains.sort_by(|a, b| a.start_rank().cmp(&b.start_rank()).then_with(|| a.points[0].cmp(&b.points[0])));
    Ok(chains)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScdReport {
    pub t: usize,
    pub n: usize,
    pub chains: usize,
    #[serde(serialize_with = "ser_biguint")]
    pub middle_layer: BigUint,
    pub partition: bool,
    pub saturated: bool,
    pub symmetric: bool,
    /// The chain successor map `L_{m-1} -> L_m` is injective and misses
    /// exactly the points whose chain starts at `L_m`.
    pub successor_injection: bool,
    pub valid: bool,
}

pub fn validate_scd(t: usize, n: usize, chains: &[SymmetricChain]) -> Result<ScdReport> {
    let total = grid_points(t, n)?;
    let sizes = layer_sizes(t, n)?;
    let m = middle_rank(t, n);
    let mut seen: HashMap<&Point, usize> = HashMap::new();
    for c in chains {
        for p in &c.points {
            *seen.entry(p).or_insert(0) += 1;
        }
    }
    let partition = seen.len() == total && seen.values().all(|&k| k == 1) && chains.iter().all(|c| !c.is_empty());
    let saturated = chains.iter().all(SymmetricChain::is_saturated);
    let symmetric = chains.iter().all(SymmetricChain::is_symmetric);
    let successor_injection = if m == 0 {
        true
    } else {
        let mut image = 0usize;
        let mut starts_at_m = 0usize;
        for c in chains {
            let ranks: Vec<usize> = c.points.iter().map(Point::rank).collect();
            if ranks.contains(&(m - 1)) && ranks.contains(&m) {
                image += 1;
            }
            if c.start_rank() == m {
                starts_at_m += 1;
            }
        }
        let below = sizes[m - 1].to_usize().unwrap_or(usize::MAX);
        let middle = sizes[m].to_usize().unwrap_or(usize::MAX);
        image == below && image + starts_at_m == middle
    };
    let count_ok = BigUint::from(chains.len()) == sizes[m];
    Ok(ScdReport {
        t,
        n,
        chains: chains.len(),
        middle_layer: sizes[m].clone(),
        partition,
        saturated,
        symmetric,
        successor_injection,
        valid: partition && saturated && symmetric && successor_injection && count_ok,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FullyMatchedReport {
    pub n: usize,
    pub fully_matched: u64,
    #[serde(serialize_with = "ser_biguint")]
    pub motzkin_lower: BigUint,
    /// Chains of Tsai's decomposition consisting of one middle point.
    pub singleton_chains: u64,
    #[serde(serialize_with = "ser_biguint")]
    pub layer_gap: BigUint,
    pub holds: bool,
}

/// Points of `L_n(3, n)` whose brackets are all matched, compared with
/// `M_{n-2}`, and the singleton-chain count compared with `ℓ_n - ℓ_{n-1}`.
pub fn fully_matched_count(n: usize) -> Result<FullyMatchedReport> {
    if n < 2 {
        return Err(domain!("n must be at least 2"));
    }
    let chains = tsai_scd(3, n)?;
    let fully_matched =
        crate::poset::enumerate_layer(3, n, n)?.iter().filter(|p| bracket_structure(p).fully_matched()).count() as u64;
    let singleton_chains = chains.iter().filter(|c| c.len() == 1).count() as u64;
    let l = layer_sizes(3, n)?;
    let layer_gap = &l[n] - &l[n - 1];
    let motzkin_lower = motzkin(n - 2);
    let holds = BigUint::from(fully_matched) >= motzkin_lower && BigUint::from(singleton_chains) == layer_gap;
    Ok(FullyMatchedReport { n, fully_matched, motzkin_lower, singleton_chains, layer_gap, holds })
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop36Single {
    pub size: usize,
    pub up_shadow: usize,
    /// `|N+(S)| >= |S|(n - |S|)/2`.
    pub part_a: bool,
    /// `|N+(S)| >= (1 + c/(t^2 n))|S|`.
    pub part_b: bool,
    /// `|N+(S)| >= c' n |S| / t` whenever `|S| <= n^4`.
    pub part_c: bool,
}

/// The three expansion bounds for one set `S` inside a layer below the
/// middle.
pub fn prop36_set(set: &PointSet<'_>, constants: &KpConstants) -> Result<Prop36Single> {
    let slice = set.slice();
    let (t, n) = (slice.t(), slice.n());
    let Some(i) = require_layer(set, "the expansion bounds")? else {
        return Ok(Prop36Single { size: 0, up_shadow: 0, part_a: true, part_b: true, part_c: true });
    };
    if i >= middle_rank(t, n) {
        return Err(domain!("layer {i} is not below the middle"));
    }
    if !slice.contains_layer(i + 1) {
        return Err(domain!("the slice must contain layer {}", i + 1));
    }
    let up = set.up_shadow().len();
    Ok(single(t, n, set.len(), up, constants))
}

fn single(t: usize, n: usize, s: usize, up: usize, k: &KpConstants) -> Prop36Single {
    let (sf, uf, nf, tf) = (s as f64, up as f64, n as f64, t as f64);
    Prop36Single {
        size: s,
        up_shadow: up,
        part_a: 2 * up + s * s >= s * n,
        part_b: uf >= (1.0 + k.c / (tf * tf * nf)) * sf,
        part_c: sf > nf.powi(4) || uf >= k.c_prime * nf * sf / tf,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop36Report {
    pub t: usize,
    pub n: usize,
    pub i: usize,
    pub max_size: usize,
    #[serde(flatten)]
    pub mode: CheckMode,
    pub sets_checked: u64,
    pub violations_a: u64,
    pub violations_b: u64,
    pub violations_c: u64,
    /// Smallest `2|N+(S)| - |S|(n - |S|)` seen.
    pub worst_slack_a: i64,
    /// Smallest `|N+(S)|/|S|` seen.
    #[serde(serialize_with = "ser_rational")]
    pub min_expansion: BigRational,
    /// Smallest `t |N+(S)| / (n |S|)` seen over `|S| <= n^4`.
    pub min_small_set_ratio: f64,
    /// Every singleton of the layer has more than `n/2` upper neighbours.
    pub singletons_above_half: bool,
}

/// Scans subsets of `L_i` with at most `max_size` points against the three
/// expansion bounds: exhaustively for small layers, otherwise by sampling
/// random sets of uniformly chosen size.
pub fn prop36_check(
    t: usize,
    n: usize,
    i: usize,
    max_size: usize,
    constants: &KpConstants,
    samples: usize,
    seed: u64,
) -> Result<Prop36Report> {
    if i >= middle_rank(t, n) {
        return Err(domain!("layer {i} is not below the middle {}", middle_rank(t, n)));
    }
    let g = LayerGraph::new(t, n, i, i + 1)?;
    let max_size = max_size.min(g.from_len());
    let mut r = Prop36Report {
        t,
        n,
        i,
        max_size,
        mode: CheckMode::Exhaustive,
        sets_checked: 0,
        violations_a: 0,
        violations_b: 0,
        violations_c: 0,
        worst_slack_a: i64::MAX,
        min_expansion: ratio(usize::MAX, 1),
        min_small_set_ratio: f64::INFINITY,
        singletons_above_half: g.nbrs.iter().all(|nb| 2 * nb.len() > n),
    };
    let mut record = |s: usize, up: usize| {
        let one = single(t, n, s, up, constants);
        r.sets_checked += 1;
        r.violations_a += !one.part_a as u64;
        r.violations_b += !one.part_b as u64;
        r.violations_c += !one.part_c as u64;
        r.worst_slack_a = r.worst_slack_a.min(2 * up as i64 - (s * n) as i64 + (s * s) as i64);
        let e = ratio(up, s);
        if e < r.min_expansion {
            r.min_expansion = e;
        }
        if (s as f64) <= (n as f64).powi(4) {
            r.min_small_set_ratio = r.min_small_set_ratio.min(t as f64 * up as f64 / (n * s) as f64);
        }
    };
    if g.from_len() <= EXHAUSTIVE_MAX_POINTS {
        g.walk(0, seed, |s, up, _| {
            if s <= max_size {
                record(s, up);
            }
        });
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scratch = Vec::new();
        for _ in 0..samples {
            let s = rng.gen_range(1..=max_size);
            let members = rand::seq::index::sample(&mut rng, g.from_len(), s).into_vec();
            let up = g.shadow_len(&members, &mut scratch);
            record(s, up);
        }
        r.mode = CheckMode::Sampled { samples, seed };
    }
    Ok(r)
}

/// `min |N+(S)|` over `S ⊆ L_i` of each size, attained by the last lex
/// segment.
pub fn min_up_shadow_by_size(t: usize, n: usize, i: usize) -> Result<Vec<usize>> {
    Ok(LayerGraph::new(t, n, i, i + 1)?.segment_shadow_sizes(false))
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoMiddleReport {
    pub t: usize,
    pub n: usize,
    /// The upper middle layer `m + 1`.
    pub layer: usize,
    pub prefixes_checked: usize,
    /// Smallest `|N-(S)|/|S|` over lex prefixes with `|S| <= ℓ_{m+1}/2`.
    #[serde(serialize_with = "ser_rational")]
    pub min_ratio: BigRational,
    /// `t^2 n (min_ratio - 1)`.
    pub c_emp: f64,
    /// Every such prefix has first coordinate at most `t/2`.
    pub prefixes_in_low_blocks: bool,
    pub lex_last_down_degree: usize,
    /// Minimum over all subsets of the half-size bound, when the layer is
    /// small enough to enumerate.
    #[serde(serialize_with = "ser_opt_rational")]
    pub exhaustive_min_ratio: Option<BigRational>,
    pub holds: bool,
}

fn ser_opt_rational<S: serde::Serializer>(v: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(r) => ser_rational(r, s),
        None => s.serialize_none(),
    }
}

/// Expansion from the upper middle layer down when `(t-1)n` is odd, over
/// compressed sets of at most half the layer (all sets when the layer is
/// small).
pub fn two_middle_layers_check(t: usize, n: usize) -> Result<TwoMiddleReport> {
    if (t - 1) * n % 2 == 0 {
        return Err(refused!("(t-1)n = {} is even; [{t}]^{n} has a single middle layer", (t - 1) * n));
    }
    grid_points(t, n)?;
    let m = middle_rank(t, n);
    let g = LayerGraph::new(t, n, m + 1, m)?;
    let half = g.from_len() / 2;
    let sizes = g.segment_shadow_sizes(true);
    let mut min_ratio: Option<BigRational> = None;
    for s in 1..=half {
        let r = ratio(sizes[s], s);
        if min_ratio.as_ref().is_none_or(|b| &r < b) {
            min_ratio = Some(r);
        }
    }
    let min_ratio = min_ratio.ok_or_else(|| domain!("upper middle layer has fewer than two points"))?;
    let prefixes_in_low_blocks = g.from_points[..half].iter().all(|p| 2 * p.coords()[0] as usize <= t);
    let lex_last_down_degree = g.nbrs[g.from_len() - 1].len();
    let exhaustive_min_ratio = if g.from_len() <= EXHAUSTIVE_MAX_POINTS {
        let mut best: Option<(usize, usize)> = None;
        g.walk(0, 0, |s, shadow, _| {
            if s <= half && best.is_none_or(|(bn, bs)| shadow * bs < bn * s) {
                best = Some((shadow, s));
            }
        });
        best.map(|(a, b)| ratio(a, b))
    } else {
        None
    };
    let c_emp = (t * t * n) as f64 * (to_f64(&min_ratio) - 1.0);
    let exhaustive_ok = exhaustive_min_ratio.as_ref().is_none_or(|e| e == &min_ratio);
    let holds = min_ratio > BigRational::one() && prefixes_in_low_blocks && lex_last_down_degree >= 2 && exhaustive_ok;
    Ok(TwoMiddleReport {
        t,
        n,
        layer: m + 1,
        prefixes_checked: half,
        min_ratio,
        c_emp,
        prefixes_in_low_blocks,
        lex_last_down_degree,
        exhaustive_min_ratio,
        holds,
    })
}

pub const CONSTANTS_VERSION: &str = "1.0.0";

/// Instances scanned when estimating the isoperimetric constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsGrid {
    /// Chain lengths for the middle layer-ratio constant `c`.
    pub ratio_t: Vec<usize>,
    pub ratio_n_max: usize,
    /// Dimensions of `[3]^n` for the small-set constant `c'`.
    pub expansion_n: Vec<usize>,
}

impl Default for ConstantsGrid {
    fn default() -> Self {
        ConstantsGrid { ratio_t: vec![2, 3, 4, 5], ratio_n_max: 30, expansion_n: (3..=10).collect() }
    }
}

/// Published empirical constants consumed by the KP checker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConstants {
    pub version: String,
    /// Smallest `t^2 n (ℓ_m/ℓ_{m-1} - 1)` over the ratio grid.
    pub c: f64,
    /// Where `c` is attained, as `[t, n]`.
    pub c_at: [usize; 2],
    /// Smallest `3 |N+(S)| / (n |S|)` over `S ⊆ L_i(3, n)`, `i < n`,
    /// `|S| <= n^4`, computed exactly through last lex segments.
    pub c_prime: f64,
    /// Where `c'` is attained, as `[n, i, |S|]`.
    pub c_prime_at: [usize; 3],
    /// Smallest `|N+(S)| - |S|(n - |S|)/2` over the same sets.
    pub worst_slack: f64,
    pub grid: ConstantsGrid,
}

impl EmpiricalConstants {
    pub fn kp(&self) -> KpConstants {
        KpConstants { c: self.c, c_prime: self.c_prime }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let c: EmpiricalConstants = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if c.version != CONSTANTS_VERSION {
            return Err(domain!("constants file version {} is not {CONSTANTS_VERSION}", c.version));
        }
        Ok(c)
    }
}

pub fn estimate_constants(grid: &ConstantsGrid) -> Result<EmpiricalConstants> {
    let (floor, _) = middle_ratio_floor(&grid.ratio_t, grid.ratio_n_max)?;
    let mut c_prime = f64::INFINITY;
    let mut c_prime_at = [0; 3];
    let mut worst_slack = f64::INFINITY;
    for &n in &grid.expansion_n {
        for i in 0..middle_rank(3, n) {
            let mins = min_up_shadow_by_size(3, n, i)?;
            for (s, &up) in mins.iter().enumerate().skip(1) {
                if (s as f64) > (n as f64).powi(4) {
                    break;
                }
                let v = 3.0 * up as f64 / (n * s) as f64;
                if v < c_prime {
                    c_prime = v;
                    c_prime_at = [n, i, s];
                }
                worst_slack = worst_slack.min(up as f64 - 0.5 * (s * n) as f64 + 0.5 * (s * s) as f64);
            }
        }
    }
    Ok(EmpiricalConstants {
        version: CONSTANTS_VERSION.to_string(),
        c: floor.c_emp,
        c_at: [floor.t, floor.n],
        c_prime,
        c_prime_at,
        worst_slack,
        grid: grid.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::enumerate_layer;

    fn pt(t: usize, c: &[u8]) -> Point {
        Point::new(t, c.to_vec()).unwrap()
    }

    #[test]
    fn compression_examples() {
        let slice = LayerSlice::layer(3, 2, 1).unwrap();
        let s = slice.set_from_points([&pt(3, &[1, 0])]).unwrap();
        assert_eq!(compress(&s).unwrap().points(), vec![&pt(3, &[0, 1])]);
        assert_eq!(last_segment(&s).unwrap().points(), vec![&pt(3, &[1, 0])]);
        let full = slice.layer_set(1);
        assert_eq!(compress(&full).unwrap(), full);
        assert!(compress(&slice.empty_set()).unwrap().is_empty());
    }

    #[test]
    fn bracket_structure_of_worked_point() {
        let x = pt(4, &[0, 2, 1, 3, 2, 1]);
        assert_eq!(bracket_structure(&x).to_string(), "(((|))(|)((|)))|**(|)**");
    }

    #[test]
    fn worked_chain() {
        let x = pt(4, &[0, 2, 1, 3, 2, 1]);
        let expected: Vec<Point> = [[0, 2, 1, 3, 0, 1], [0, 2, 1, 3, 1, 1], [0, 2, 1, 3, 2, 1], [0, 2, 1, 3, 2, 2], [0, 2, 1, 3, 2, 3]]
            .iter()
            .map(|c| pt(4, c))
            .collect();
        assert_eq!(chain_of(&x).points, expected);
    }

    #[test]
    fn small_decompositions() {
        for (t, n, count) in [(2, 3, 3), (3, 2, 3)] {
            let chains = tsai_scd(t, n).unwrap();
            assert_eq!(chains.len(), count);
            assert!(validate_scd(t, n, &chains).unwrap().valid);
        }
    }

    #[test]
    fn chain_rule_matches_grouping() {
        for (t, n) in [(2, 4), (3, 4), (4, 3), (5, 2)] {
            for c in tsai_scd(t, n).unwrap() {
                for p in &c.points {
                    assert_eq!(chain_of(p), c);
                }
            }
        }
    }

    #[test]
    fn fully_matched_small() {
        let r = fully_matched_count(2).unwrap();
        assert_eq!(r.fully_matched, 1);
        assert!(r.holds);
        let only: Vec<Point> =
            enumerate_layer(3, 2, 2).unwrap().into_iter().filter(|p| bracket_structure(p).fully_matched()).collect();
        assert_eq!(only, vec![pt(3, &[0, 2])]);
    }

    #[test]
    fn clements_lindstrom_small() {
        for (t, n) in [(2, 3), (3, 2), (3, 3), (4, 2)] {
            let r = verify_clements_lindstrom(t, n, 0, 1).unwrap();
            assert_eq!(r.mode, CheckMode::Exhaustive);
            assert!(r.holds(), "{r:?}");
        }
    }

    #[test]
    fn compression_does_not_grow_shadows() {
        let slice = LayerSlice::new(3, 3, 0, 6).unwrap();
        for k in 1..=6 {
            let r = slice.layer_range(k);
            for mask in 1u32..(1 << r.len()) {
                let s = slice.set_from_indices(r.clone().filter(|i| mask >> (i - r.start) & 1 == 1));
                let c = compress(&s).unwrap();
                assert!(s.down_shadow().len() >= c.down_shadow().len());
                assert_eq!(compress(&c).unwrap(), c);
            }
        }
    }

    #[test]
    fn normalized_matching_small() {
        let r = normalized_matching_check(3, 3, 1, 2, 0, 0).unwrap();
        assert!(r.holds);
        assert_eq!(r.target, ratio(6, 3));
        let r = normalized_matching_check(3, 3, 0, 3, 0, 0).unwrap();
        assert!(r.holds);
    }

    #[test]
    fn layer_ratio_values() {
        let r = layer_ratio(3, 2, 2).unwrap();
        assert_eq!(r.ratio, ratio(3, 2));
        assert!((r.c_emp - 9.0).abs() < 1e-12);
        assert!(layer_ratio(3, 2, 0).is_err());
    }

    #[test]
    fn motzkin_gap_small() {
        for n in 3..=10 {
            assert!(motzkin_gap_check(n).unwrap().holds);
        }
    }

    #[test]
    fn prop36_small_layer() {
        let k = KpConstants { c: 1.0, c_prime: 0.1 };
        let r = prop36_check(3, 4, 2, 6, &k, 0, 0).unwrap();
        assert_eq!(r.mode, CheckMode::Exhaustive);
        assert_eq!(r.violations_a, 0);
        assert!(r.singletons_above_half);
        let slice = LayerSlice::new(3, 4, 2, 3).unwrap();
        let s = slice.layer_set(2);
        let one = prop36_set(&s, &k).unwrap();
        assert_eq!(one.up_shadow, 16);
        assert!(prop36_set(&LayerSlice::new(3, 4, 4, 5).unwrap().layer_set(4), &k).is_err());
    }

    #[test]
    fn two_middle_layers() {
        let r = two_middle_layers_check(4, 3).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(two_middle_layers_check(3, 3).is_err());
    }

    #[test]
    fn last_segments_minimize_up_shadows() {
        let slice = LayerSlice::new(3, 4, 2, 3).unwrap();
        let r = slice.layer_range(2);
        let mins = min_up_shadow_by_size(3, 4, 2).unwrap();
        let mut best = vec![usize::MAX; r.len() + 1];
        for mask in 1u32..(1 << r.len()) {
            let s = slice.set_from_indices(r.clone().filter(|i| mask >> (i - r.start) & 1 == 1));
            best[s.len()] = best[s.len()].min(s.up_shadow().len());
        }
        assert_eq!(&mins[1..], &best[1..]);
    }

    #[test]
    fn constants_round_trip() {
        let grid = ConstantsGrid { ratio_t: vec![3], ratio_n_max: 8, expansion_n: vec![3, 4, 5] };
        let c = estimate_constants(&grid).unwrap();
        assert!(c.c > 0.0 && c.c_prime > 0.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("constants.json");
        c.write(&path).unwrap();
        assert_eq!(EmpiricalConstants::read(&path).unwrap(), c);
    }
}
