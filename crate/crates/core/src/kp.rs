//! Truncated Kotecký–Preiss certificates for the layer polymer models at
//! sizes where the layers cannot be indexed.
//!
//! Points are handled by coordinates. For an anchor `v`, every polymer `B`
//! with `|B| <= cutoff` that is incompatible with `{v}` is generated once,
//! and the sum `Σ |w(B)| e^{f(B) + g(B)}` is compared with `f({v})`.
//! Polymers are tallied by `(size, weight exponent)` so several choices of
//! `g` can be evaluated on the same enumeration.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{domain, refused, Result};
use crate::poset::Point;
use crate::polymer::ModelKind;

/// Largest cutoff accepted; size-3 neighbourhoods at `n = 20` already run to
/// hundreds of millions of sets.
pub const KP_MAX_CUTOFF: usize = 3;

pub const TRUNCATION_NOTE: &str = "partial sum over incompatible polymers of at most `size_cutoff` vertices only; \
     larger polymers are not enumerated, so PASS certifies the truncated inequality";

/// Isoperimetric constants feeding `g` on mid-sized polymers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpConstants {
    /// Layer-expansion constant: `ℓ_j / ℓ_{j-1} >= 1 + c/(t^2 n)`.
    pub c: f64,
    /// Small-set expansion constant: `|N+(S)| >= c' n |S| / t`.
    pub c_prime: f64,
}

impl KpConstants {
    /// `C = min(c/9, c'/3)`.
    pub fn big_c(&self) -> f64 {
        (self.c / 9.0).min(self.c_prime / 3.0)
    }
}

/// `f(A) = |A| ln 2 / n^2`.
pub fn kp_f(n: usize, size: usize) -> f64 {
    size as f64 * std::f64::consts::LN_2 / (n * n) as f64
}

/// The three-regime `g`: quadratic-penalty regime up to `n/10`, linear in
/// `C n |A|` up to `n^4`, and `f` beyond.
pub fn kp_g(n: usize, size: usize, big_c: f64) -> f64 {
    let (nf, a) = (n as f64, size as f64);
    let ln2 = std::f64::consts::LN_2;
    if a <= nf / 10.0 {
        ((nf - 2.0) / 2.0 * a - a * a) * ln2 - 10.0 * a * nf.ln()
    } else if a <= nf.powi(4) {
        0.9 * big_c * nf * a * ln2
    } else {
        a / (nf * nf) * ln2
    }
}

/// Number of incompatible polymers with a given size and weight `2^exponent`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KpTerm {
    pub size: usize,
    pub exponent: i64,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KPReport {
    pub model: ModelKind,
    pub n: usize,
    pub vertex: String,
    /// Number of coordinates equal to 2 (lower side) or 0 (upper side).
    pub vertex_type: usize,
    pub size_cutoff: usize,
    pub terms: Vec<KpTerm>,
    pub partial_sum: f64,
    pub f_target: f64,
    pub margin: f64,
    pub pass: bool,
    /// The same partial sum with `g` replaced by `max(g, 0)`.
    pub partial_sum_g_nonnegative: f64,
    pub margin_g_nonnegative: f64,
    pub disclaimer: &'static str,
}

struct Geometry {
    kind: ModelKind,
    n: usize,
}

impl Geometry {
    fn footprint(&self, x: &Point) -> Vec<Point> {
        if x.rank() < self.n {
            x.up_neighbors()
        } else {
            x.down_neighbors()
        }
    }

    /// Polymer vertices sharing a middle point with `b`.
    fn around_middle(&self, b: &Point) -> Vec<Point> {
        let mut out = b.down_neighbors();
        if self.kind == ModelKind::Central {
            out.extend(b.up_neighbors());
        }
        out
    }

    /// Same-side vertices at Hasse distance 2 from `x`.
    fn linked(&self, x: &Point) -> Vec<Point> {
        let mut out: Vec<Point> = self
            .footprint(x)
            .iter()
            .flat_map(|b| if x.rank() < self.n { b.down_neighbors() } else { b.up_neighbors() })
            .filter(|y| y != x)
            .collect();
        out.sort();
        out.dedup();
        out
    }

    fn weight_exponent(&self, set: &[Point]) -> i64 {
        let foot: HashSet<Point> = set.iter().flat_map(|x| self.footprint(x)).collect();
        let foot = foot.len() as i64;
        match self.kind {
            ModelKind::Central | ModelKind::ThreeLayerPrime => -foot,
            ModelKind::ThreeLayer => {
                let members: HashSet<&Point> = set.iter().collect();
                let cands: HashSet<Point> = set.iter().flat_map(|x| x.down_neighbors()).collect();
                let interior =
                    cands.iter().filter(|v| v.up_neighbors().iter().all(|u| members.contains(u))).count() as i64;
                interior - foot
            }
        }
    }
}

/// Tallies every polymer of at most `cutoff` vertices incompatible with the
/// singleton `{anchor}`.
pub fn incompatible_terms(kind: ModelKind, anchor: &Point, cutoff: usize) -> Result<Vec<KpTerm>> {
    let n = anchor.n();
    if anchor.t() != 3 {
        return Err(domain!("anchor must lie in [3]^n"));
    }
    let rank_ok = match kind {
        ModelKind::Central => anchor.rank() + 1 == n || anchor.rank() == n + 1,
        _ => anchor.rank() + 1 == n,
    };
    if !rank_ok {
        return Err(domain!("anchor {anchor} is not a polymer vertex of the {kind:?} model"));
    }
    if cutoff > KP_MAX_CUTOFF {
        return Err(refused!("size cutoff {cutoff} exceeds {KP_MAX_CUTOFF}"));
    }
    let geo = Geometry { kind, n };
    let mut tally: BTreeMap<(usize, i64), u64> = BTreeMap::new();
    if cutoff == 0 {
        return Ok(Vec::new());
    }
    let mut seeds: Vec<Point> = geo.footprint(anchor).iter().flat_map(|b| geo.around_middle(b)).collect();
    seeds.sort();
    seeds.dedup();

    let mut level: HashSet<Vec<Point>> = seeds.into_iter().map(|s| vec![s]).collect();
    for size in 1..=cutoff {
        for set in &level {
            *tally.entry((size, geo.weight_exponent(set))).or_insert(0) += 1;
        }
        if size == cutoff {
            break;
        }
        let mut next = HashSet::new();
        for set in &level {
            for p in set {
                for z in geo.linked(p) {
                    if set.binary_search(&z).is_err() {
                        let mut grown = set.clone();
                        let at = grown.binary_search(&z).unwrap_err();
                        grown.insert(at, z);
                        next.insert(grown);
                    }
                }
            }
        }
        level = next;
    }
    Ok(tally.into_iter().map(|((size, exponent), count)| KpTerm { size, exponent, count }).collect())
}

/// Truncated check of `Σ_{B ≁ {v}} |w(B)| e^{f(B)+g(B)} <= f({v})` at one
/// anchor with caller-supplied `f` and `g` (functions of the polymer size).
pub fn kp_check_with(
    kind: ModelKind,
    anchor: &Point,
    cutoff: usize,
    f: impl Fn(usize) -> f64,
    g: impl Fn(usize) -> f64,
) -> Result<KPReport> {
    let n = anchor.n();
    let terms = incompatible_terms(kind, anchor, cutoff)?;
    let ln2 = std::f64::consts::LN_2;
    let sum_with = |g: &dyn Fn(usize) -> f64| -> f64 {
        terms.iter().map(|t| t.count as f64 * (t.exponent as f64 * ln2 + f(t.size) + g(t.size)).exp()).sum()
    };
    let partial_sum = sum_with(&g);
    let clamped = sum_with(&|s| g(s).max(0.0));
    let f_target = f(1);
    let vertex_type = if anchor.rank() < n { anchor.count(2) } else { anchor.count(0) };
    Ok(KPReport {
        model: kind,
        n,
        vertex: anchor.to_string(),
        vertex_type,
        size_cutoff: cutoff,
        terms,
        partial_sum,
        f_target,
        margin: f_target - partial_sum,
        pass: partial_sum <= f_target,
        partial_sum_g_nonnegative: clamped,
        margin_g_nonnegative: f_target - clamped,
        disclaimer: TRUNCATION_NOTE,
    })
}

/// [`kp_check_with`] using `f = |A| ln 2 / n^2` and the three-regime `g`.
pub fn kp_check(kind: ModelKind, anchor: &Point, cutoff: usize, constants: &KpConstants) -> Result<KPReport> {
    let n = anchor.n();
    let big_c = constants.big_c();
    kp_check_with(kind, anchor, cutoff, |s| kp_f(n, s), |s| kp_g(n, s, big_c))
}

/// One representative of each vertex orbit under coordinate permutations:
/// `k` twos, `k + 1` zeros and ones elsewhere on `L_{n-1}`, and the duals on
/// `L_{n+1}` for the central model. Coordinate permutations preserve the
/// models, so these anchors cover every vertex.
pub fn anchor_representatives(kind: ModelKind, n: usize) -> Result<Vec<Point>> {
    if n < 2 {
        return Err(domain!("n must be at least 2"));
    }
    let mut out = Vec::new();
    for k in 0..=(n - 1) / 2 {
        let mut coords = vec![2u8; k];
        coords.extend(std::iter::repeat(0u8).take(k + 1));
        coords.extend(std::iter::repeat(1u8).take(n - 2 * k - 1));
        out.push(Point::new(3, coords)?);
    }
    if kind == ModelKind::Central {
        let upper: Vec<Point> = out.iter().map(Point::dual).collect();
        out.extend(upper);
    }
    Ok(out)
}

/// `kp_check` at every anchor representative. The three-layer models are
/// checked with `X = ∅`: excluding points only removes polymers, so this is
/// the largest left-hand side over all `X`.
pub fn kp_check_all(kind: ModelKind, n: usize, cutoff: usize, constants: &KpConstants) -> Result<Vec<KPReport>> {
    anchor_representatives(kind, n)?.iter().map(|a| kp_check(kind, a, cutoff, constants)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymer::PolymerModel;

    const CONSTS: KpConstants = KpConstants { c: 1.0, c_prime: 1.0 };

    fn indexed_terms(model: &PolymerModel, anchor: &Point, cutoff: usize) -> Vec<KpTerm> {
        let id = model.vertex_id(anchor).unwrap();
        let me = model.polymer(&[id]);
        let mut tally: BTreeMap<(usize, i64), u64> = BTreeMap::new();
        for p in model.all_polymers(cutoff) {
            if !p.compatible(&me) {
                *tally.entry((p.len(), model.weight_exponent(&p))).or_insert(0) += 1;
            }
        }
        tally.into_iter().map(|((size, exponent), count)| KpTerm { size, exponent, count }).collect()
    }

    #[test]
    fn matches_indexed_models() {
        for n in 3..=5 {
            let central = PolymerModel::central(n).unwrap();
            let three = PolymerModel::three_layer(n, &[], false).unwrap();
            let prime = PolymerModel::three_layer(n, &[], true).unwrap();
            for cutoff in 0..=3 {
                for a in anchor_representatives(ModelKind::Central, n).unwrap() {
                    assert_eq!(incompatible_terms(ModelKind::Central, &a, cutoff).unwrap(), indexed_terms(&central, &a, cutoff));
                }
                for a in anchor_representatives(ModelKind::ThreeLayer, n).unwrap() {
                    assert_eq!(incompatible_terms(ModelKind::ThreeLayer, &a, cutoff).unwrap(), indexed_terms(&three, &a, cutoff));
                    assert_eq!(
                        incompatible_terms(ModelKind::ThreeLayerPrime, &a, cutoff).unwrap(),
                        indexed_terms(&prime, &a, cutoff)
                    );
                }
            }
        }
    }

    #[test]
    fn anchors_in_one_orbit_agree() {
        let a = Point::new(3, vec![2, 0, 0, 1, 1, 1]).unwrap();
        let b = Point::new(3, vec![1, 0, 1, 2, 1, 0]).unwrap();
        for kind in [ModelKind::Central, ModelKind::ThreeLayer] {
            assert_eq!(incompatible_terms(kind, &a, 2).unwrap(), incompatible_terms(kind, &b, 2).unwrap());
        }
        let up = a.dual();
        let lo = incompatible_terms(ModelKind::Central, &a, 2).unwrap();
        assert_eq!(incompatible_terms(ModelKind::Central, &up, 2).unwrap(), lo);
    }

    #[test]
    fn cutoff_zero_is_trivial() {
        let a = &anchor_representatives(ModelKind::Central, 8).unwrap()[0];
        let r = kp_check(ModelKind::Central, a, 0, &CONSTS).unwrap();
        assert_eq!(r.partial_sum, 0.0);
        assert!(r.pass);
        assert_eq!(r.margin, r.f_target);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mid = Point::new(3, vec![1, 1, 1]).unwrap();
        assert!(kp_check(ModelKind::Central, &mid, 2, &CONSTS).is_err());
        let upper = Point::new(3, vec![2, 1, 1]).unwrap();
        assert!(kp_check(ModelKind::ThreeLayer, &upper, 2, &CONSTS).is_err());
        let a = Point::new(3, vec![0, 1, 1]).unwrap();
        assert!(kp_check(ModelKind::ThreeLayer, &a, 4, &CONSTS).is_err());
    }

    #[test]
    fn g_regimes() {
        let n = 40;
        let ln2 = std::f64::consts::LN_2;
        assert!((kp_g(n, 2, 0.1) - ((19.0 * 2.0 - 4.0) * ln2 - 20.0 * 40f64.ln())).abs() < 1e-12);
        assert!((kp_g(n, 5, 0.1) - 0.9 * 0.1 * 40.0 * 5.0 * ln2).abs() < 1e-12);
        let huge = 40usize.pow(4) + 1;
        assert!((kp_g(n, huge, 0.1) - kp_f(n, huge)).abs() < 1e-9);
        assert_eq!(KpConstants { c: 0.9, c_prime: 0.6 }.big_c(), 0.1);
    }
}
