//! Exact antichain counts for layer ranges of `[t]^n`.
//!
//! Two independent counters are provided: a subset scan over all point
//! subsets, and a downset recursion that walks the layers bottom-up and
//! sums over admissible lower layers with a superset-sum transform.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{domain, refused, Result};
use crate::poset::{check_grid, restrict_above, LayerSlice, Point};

/// Largest number of points the subset scan accepts.
pub const BRUTE_MAX_POINTS: usize = 27;

/// Default widest layer accepted by the downset recursion.
pub const DEFAULT_MAX_WIDTH: usize = 22;

/// A layer range of `[t]^n`, optionally restricted to the points not below
/// any element of `exclusion`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubposetSpec {
    pub t: usize,
    pub n: usize,
    pub k_low: usize,
    pub k_high: usize,
    pub exclusion: Vec<Point>,
}

impl SubposetSpec {
    pub fn range(t: usize, n: usize, k_low: usize, k_high: usize) -> Self {
        SubposetSpec { t, n, k_low, k_high, exclusion: Vec::new() }
    }

    pub fn full(t: usize, n: usize) -> Self {
        Self::range(t, n, 0, (t - 1) * n)
    }

    pub fn with_exclusion(mut self, exclusion: Vec<Point>) -> Self {
        self.exclusion = exclusion;
        self
    }

    /// Materializes the restricted point set.
    pub fn build(&self) -> Result<Subposet> {
        check_grid(self.t, self.n)?;
        if self.k_low > self.k_high {
            return Ok(Subposet::empty(self.clone()));
        }
        let slice = LayerSlice::new(self.t, self.n, self.k_low, self.k_high)?;
        let kept = restrict_above(&slice, &self.exclusion)?;
        let mut layers: Vec<Vec<usize>> = Vec::new();
        let mut local = vec![usize::MAX; slice.len()];
        for k in self.k_low..=self.k_high {
            let members: Vec<usize> = slice.layer_range(k).filter(|&i| kept.contains(i)).collect();
            for (j, &i) in members.iter().enumerate() {
                local[i] = j;
            }
            layers.push(members);
        }
        let points: Vec<Vec<Point>> =
            layers.iter().map(|l| l.iter().map(|&i| slice.point(i).clone()).collect()).collect();
        // Lower covers of each point in the previous kept layer, as local indices.
        let down: Vec<Vec<Vec<usize>>> = layers
            .iter()
            .map(|l| {
                l.iter()
                    .map(|&i| {
                        slice
                            .down(i)
                            .iter()
                            .map(|&j| j as usize)
                            .filter(|&j| kept.contains(j))
                            .map(|j| local[j])
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(Subposet { spec: self.clone(), points, down })
    }
}

/// The points of a [`SubposetSpec`], grouped by layer, with lower covers.
#[derive(Debug, Clone)]
pub struct Subposet {
    spec: SubposetSpec,
    points: Vec<Vec<Point>>,
    down: Vec<Vec<Vec<usize>>>,
}

impl Subposet {
    fn empty(spec: SubposetSpec) -> Self {
        Subposet { spec, points: Vec::new(), down: Vec::new() }
    }

    pub fn spec(&self) -> &SubposetSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.points.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn layers(&self) -> &[Vec<Point>] {
        &self.points
    }

    pub fn max_width(&self) -> usize {
        self.points.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// All points, layer by layer.
    pub fn flat_points(&self) -> Vec<Point> {
        self.points.iter().flatten().cloned().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMethod {
    Brute,
    LayeredDp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountResult {
    #[serde(serialize_with = "crate::report::ser_biguint")]
    pub count: BigUint,
    pub method: CountMethod,
    pub spec: SubposetSpec,
    pub points: usize,
}

/// Comparability masks over the flattened point list.
fn comparability_masks(points: &[Point]) -> Vec<u32> {
    points
        .iter()
        .map(|p| {
            points
                .iter()
                .enumerate()
                .filter(|(_, q)| *q != p && p.comparable(q))
                .fold(0u32, |m, (j, _)| m | (1 << j))
        })
        .collect()
}

fn brute_points(spec: &SubposetSpec) -> Result<Vec<Point>> {
    let pts = spec.build()?.flat_points();
    if pts.len() > BRUTE_MAX_POINTS {
        return Err(refused!(
            "subset scan over {} points exceeds the limit of {BRUTE_MAX_POINTS}",
            pts.len()
        ));
    }
    Ok(pts)
}

/// Counts antichains by scanning every subset of the points.
pub fn count_antichains_brute(spec: &SubposetSpec) -> Result<CountResult> {
    let pts = brute_points(spec)?;
    let comp = comparability_masks(&pts);
    let mut count: u64 = 0;
    for mask in 0u64..(1u64 << pts.len()) {
        let m = mask as u32;
        let mut rest = m;
        let mut ok = true;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            if comp[i] & m != 0 {
                ok = false;
                break;
            }
            rest &= rest - 1;
        }
        count += ok as u64;
    }
    Ok(CountResult { count: BigUint::from(count), method: CountMethod::Brute, spec: spec.clone(), points: pts.len() })
}

/// Lazy stream over the antichains of a small subposet, each yielded once
/// as a sorted point list.
pub struct Antichains {
    points: Vec<Point>,
    comp: Vec<u32>,
    // Depth-first frontier: (next index to decide, chosen mask, blocked mask).
    stack: Vec<(usize, u32, u32)>,
}

impl Iterator for Antichains {
    type Item = Vec<Point>;

    fn next(&mut self) -> Option<Self::Item> {
        let len = self.points.len();
        while let Some((i, chosen, blocked)) = self.stack.pop() {
            if i == len {
                let set = (0..len).filter(|&j| chosen >> j & 1 == 1).map(|j| self.points[j].clone()).collect();
                return Some(set);
            }
            self.stack.push((i + 1, chosen, blocked));
            if blocked >> i & 1 == 0 {
                self.stack.push((i + 1, chosen | 1 << i, blocked | self.comp[i]));
            }
        }
        None
    }
}

pub fn enumerate_antichains(spec: &SubposetSpec) -> Result<Antichains> {
    let points = brute_points(spec)?;
    let comp = comparability_masks(&points);
    Ok(Antichains { points, comp, stack: vec![(0, 0, 0)] })
}

/// Masks of lower covers for each point of a layer, over the previous layer.
fn cover_masks(down: &[Vec<usize>]) -> Vec<u32> {
    down.iter().map(|d| d.iter().fold(0u32, |m, &j| m | (1 << j))).collect()
}

/// `out[T]` = union of `masks[i]` over `i in T`, for every subset `T`.
fn union_table(masks: &[u32]) -> Vec<u32> {
    let mut out = vec![0u32; 1 << masks.len()];
    for t in 1..out.len() {
        let low = t.trailing_zeros() as usize;
        out[t] = out[t & (t - 1)] | masks[low];
    }
    out
}

/// In-place superset sums: `f[S] <- sum over T ⊇ S of f[T]`.
fn superset_sum(f: &mut [BigUint], width: usize) {
    for b in 0..width {
        let bit = 1usize << b;
        for s in 0..f.len() {
            if s & bit == 0 {
                let (lo, hi) = f.split_at_mut(s | bit);
                lo[s] += &hi[0];
            }
        }
    }
}

/// Counts antichains through the downset bijection, one layer at a time.
pub fn count_antichains_layered(spec: &SubposetSpec) -> Result<CountResult> {
    count_antichains_layered_with(spec, DEFAULT_MAX_WIDTH)
}

pub fn count_antichains_layered_with(spec: &SubposetSpec, max_width: usize) -> Result<CountResult> {
    let sub = spec.build()?;
    let width = sub.max_width();
    if width > max_width || width > 30 {
        return Err(refused!("widest layer has {width} points, limit is {}", max_width.min(30)));
    }
    let count = count_downsets(&sub);
    Ok(CountResult { count, method: CountMethod::LayeredDp, spec: spec.clone(), points: sub.len() })
}

fn count_downsets(sub: &Subposet) -> BigUint {
    let layers = sub.layers();
    if layers.is_empty() {
        return BigUint::one();
    }
    // f[S]: downsets of the layers so far whose top layer part is S.
    let mut f = vec![BigUint::one(); 1 << layers[0].len()];
    for k in 1..layers.len() {
        superset_sum(&mut f, layers[k - 1].len());
        let need = union_table(&cover_masks(&sub.down[k]));
        f = need.iter().map(|&m| f[m as usize].clone()).collect();
    }
    f.iter().sum()
}

/// Number of points in `[3]^n`'s middle layer and its neighbours, used for
/// the defect tally limits.
const DEFECT_MAX_MIDDLE: usize = 22;
const DEFECT_MAX_SIDE: usize = 20;

/// Plane partitions in an `a × b × c` box, by MacMahon's product
/// `∏ (i + j + k - 1) / (i + j + k - 2)`. This equals the number of
/// antichains of `[a] × [b] × [c]`.
pub fn macmahon_box(a: usize, b: usize, c: usize) -> BigUint {
    let mut num = BigUint::from(1u8);
    let mut den = BigUint::from(1u8);
    for i in 1..=a {
        for j in 1..=b {
            for k in 1..=c {
                num *= BigUint::from(i + j + k - 1);
                den *= BigUint::from(i + j + k - 2);
            }
        }
    }
    num / den
}

/// Tally of `|I \ L_n|` over all antichains `I` of `L_{[n-1, n+1]}` in `[3]^n`.
///
/// An antichain splits into a lower part `A ⊆ L_{n-1}`, an upper part
/// `B ⊆ L_{n+1}` whose middle-layer neighbourhoods are disjoint, and any
/// subset of the middle points outside both neighbourhoods. The count for
/// each defect size is a weighted disjointness sum, evaluated with a
/// subset transform over middle-layer masks.
pub fn defect_distribution_exact(n: usize) -> Result<BTreeMap<usize, BigUint>> {
    if !(1..=4).contains(&n) {
        return Err(refused!("exact defect tally supports 1 <= n <= 4, got {n}"));
    }
    let slice = LayerSlice::new(3, n, n - 1, n + 1)?;
    let mid = slice.layer_range(n);
    let (lo, hi) = (slice.layer_range(n - 1), slice.layer_range(n + 1));
    let w = mid.len();
    if w > DEFECT_MAX_MIDDLE || lo.len() > DEFECT_MAX_SIDE {
        return Err(refused!("layers too wide for the exact defect tally"));
    }
    let nb_mask = |i: usize| -> u32 {
        slice.hasse_neighbors(i).filter(|j| mid.contains(j)).fold(0u32, |m, j| m | 1 << (j - mid.start))
    };
    let lower: Vec<u32> = lo.clone().map(nb_mask).collect();
    let upper: Vec<u32> = hi.clone().map(nb_mask).collect();
    let lower_union = union_table(&lower);
    let upper_union = union_table(&upper);
    let full = (1u32 << w) - 1;

    let mut tally: BTreeMap<usize, BigUint> = BTreeMap::new();
    for r in 0..=upper.len() {
        // h[M] = sum over upper parts of size r with neighbourhood C ⊆ M of 2^{|M \ C|}.
        let mut h = vec![0u64; 1 << w];
        for (t, &c) in upper_union.iter().enumerate() {
            if (t as u32).count_ones() as usize == r {
                h[c as usize] += 1;
            }
        }
        for b in 0..w {
            let bit = 1usize << b;
            for m in 0..h.len() {
                if m & bit != 0 {
                    h[m] += 2 * h[m ^ bit];
                }
            }
        }
        let mut by_size = vec![0u128; lower.len() + 1];
        for (s, &b) in lower_union.iter().enumerate() {
            by_size[(s as u32).count_ones() as usize] += h[(full & !b) as usize] as u128;
        }
        for (s, v) in by_size.into_iter().enumerate() {
            if v > 0 {
                *tally.entry(s + r).or_insert_with(BigUint::zero) += BigUint::from(v);
            }
        }
    }
    Ok(tally)
}

/// Same tally by enumerating every antichain; limited to small `n`.
pub fn defect_distribution_brute(n: usize) -> Result<BTreeMap<usize, BigUint>> {
    if n == 0 {
        return Err(domain!("n must be positive"));
    }
    let mut tally = BTreeMap::new();
    for a in enumerate_antichains(&SubposetSpec::range(3, n, n - 1, n + 1))? {
        let defects = a.iter().filter(|p| p.rank() != n).count();
        *tally.entry(defects).or_insert_with(BigUint::zero) += 1u32;
    }
    Ok(tally)
}

/// `M_3(t, n) = α([t]^n) + 1`.
pub fn ramsey_m3(t: usize, n: usize) -> Result<BigUint> {
    Ok(count_antichains_layered(&SubposetSpec::full(t, n))?.count + 1u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn small_counts() {
        assert_eq!(count_antichains_brute(&SubposetSpec::full(3, 1)).unwrap().count, big(4));
        assert_eq!(count_antichains_brute(&SubposetSpec::full(3, 2)).unwrap().count, big(20));
        assert_eq!(count_antichains_brute(&SubposetSpec::range(3, 2, 1, 3)).unwrap().count, big(18));
        assert_eq!(count_antichains_layered(&SubposetSpec::full(3, 2)).unwrap().count, big(20));
        assert_eq!(count_antichains_layered(&SubposetSpec::full(3, 3)).unwrap().count, big(980));
    }

    #[test]
    fn brute_refuses_large() {
        assert!(matches!(
            count_antichains_brute(&SubposetSpec::range(3, 4, 3, 4)),
            Err(crate::Error::Refused(_))
        ));
        assert!(count_antichains_layered_with(&SubposetSpec::full(3, 3), 5).is_err());
    }

    #[test]
    fn stream_examples() {
        let all: Vec<_> = enumerate_antichains(&SubposetSpec::full(3, 1)).unwrap().collect();
        assert_eq!(all.len(), 4);
        assert!(all.contains(&vec![]));
        let empty = SubposetSpec::range(3, 2, 3, 2);
        assert_eq!(enumerate_antichains(&empty).unwrap().count(), 1);
        assert_eq!(count_antichains_layered(&empty).unwrap().count, big(1));
        assert_eq!(enumerate_antichains(&SubposetSpec::range(3, 2, 1, 3)).unwrap().count(), 18);
    }

    #[test]
    fn defect_tallies() {
        let d2 = defect_distribution_exact(2).unwrap();
        assert_eq!(d2, BTreeMap::from([(0, big(8)), (1, big(8)), (2, big(2))]));
        let d1 = defect_distribution_exact(1).unwrap();
        assert_eq!(d1, BTreeMap::from([(0, big(2)), (1, big(2))]));
        for n in 1..=3 {
            assert_eq!(defect_distribution_exact(n).unwrap(), defect_distribution_brute(n).unwrap());
        }
    }

    #[test]
    fn ramsey() {
        assert_eq!(ramsey_m3(3, 1).unwrap(), big(5));
        assert_eq!(ramsey_m3(3, 2).unwrap(), big(21));
        assert_eq!(ramsey_m3(3, 3).unwrap(), big(981));
    }
}
