//! Points, layers and Hasse-diagram neighbourhoods of the product of chains
//! `[t]^n = {0, .., t-1}^n` ordered coordinatewise.
//!
//! Lexicographic order on coordinate vectors is the canonical point order
//! throughout the crate: layers are enumerated in increasing lex order and
//! every [`LayerSlice`] indexes its points in that order, layer by layer.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::ops::Range;

use fixedbitset::FixedBitSet;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Largest chain length supported (coordinates are stored as bytes).
pub const MAX_CHAIN_LEN: usize = 64;

pub(crate) fn check_grid(t: usize, n: usize) -> Result<()> {
    if t < 2 || t > MAX_CHAIN_LEN {
        return Err(domain!("chain length t = {t} outside [2, {MAX_CHAIN_LEN}]"));
    }
    if n < 1 {
        return Err(domain!("dimension n must be at least 1"));
    }
    Ok(())
}

fn check_rank(t: usize, n: usize, k: usize) -> Result<()> {
    check_grid(t, n)?;
    if k > (t - 1) * n {
        return Err(domain!("layer {k} outside [0, {}] for t = {t}, n = {n}", (t - 1) * n));
    }
    Ok(())
}

/// A point of `[t]^n`.
///
/// `Ord` is the lexicographic order on coordinates; the poset order is
/// exposed separately through [`Point::is_le`] and [`Point::is_lt`].
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<u8>,
    t: u8,
    rank: u32,
}

impl Point {
    pub fn new(t: usize, coords: Vec<u8>) -> Result<Self> {
        check_grid(t, coords.len())?;
        if let Some(c) = coords.iter().find(|&&c| c as usize >= t) {
            return Err(domain!("coordinate {c} not below chain length {t}"));
        }
        let rank = coords.iter().map(|&c| c as u32).sum();
        Ok(Point { coords, t: t as u8, rank })
    }

    /// Unchecked constructor for coordinates already known to be valid.
    pub(crate) fn from_valid(t: usize, coords: Vec<u8>) -> Self {
        let rank = coords.iter().map(|&c| c as u32).sum();
        Point { coords, t: t as u8, rank }
    }

    pub fn coords(&self) -> &[u8] {
        &self.coords
    }

    pub fn t(&self) -> usize {
        self.t as usize
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn rank(&self) -> usize {
        self.rank as usize
    }

    /// Number of coordinates equal to `value`.
    pub fn count(&self, value: u8) -> usize {
        self.coords.iter().filter(|&&c| c == value).count()
    }

    pub fn up_degree(&self) -> usize {
        self.n() - self.count(self.t - 1)
    }

    pub fn down_degree(&self) -> usize {
        self.n() - self.count(0)
    }

    /// Points covering `self`: one coordinate raised by one.
    pub fn up_neighbors(&self) -> Vec<Point> {
        let top = self.t - 1;
        (0..self.n())
            .filter(|&i| self.coords[i] < top)
            .map(|i| {
                let mut c = self.coords.clone();
                c[i] += 1;
                Point { coords: c, t: self.t, rank: self.rank + 1 }
            })
            .collect()
    }

    /// Points covered by `self`: one coordinate lowered by one.
    pub fn down_neighbors(&self) -> Vec<Point> {
        (0..self.n())
            .filter(|&i| self.coords[i] > 0)
            .map(|i| {
                let mut c = self.coords.clone();
                c[i] -= 1;
                Point { coords: c, t: self.t, rank: self.rank - 1 }
            })
            .collect()
    }

    /// Poset order: `self <= other` coordinatewise.
    pub fn is_le(&self, other: &Point) -> bool {
        self.coords.len() == other.coords.len()
            && self.coords.iter().zip(&other.coords).all(|(a, b)| a <= b)
    }

    /// Strict poset order.
    pub fn is_lt(&self, other: &Point) -> bool {
        self.rank < other.rank && self.is_le(other)
    }

    pub fn comparable(&self, other: &Point) -> bool {
        self.is_le(other) || other.is_le(self)
    }

    /// The order-reversing involution `u -> (t-1)*1 - u`.
    pub fn dual(&self) -> Point {
        let top = self.t - 1;
        Point::from_valid(self.t(), self.coords.iter().map(|&c| top - c).collect())
    }

    /// Zero/one/two counts of a point of `[3]^n`.
    pub fn vertex_type(&self) -> Result<VertexType> {
        if self.t != 3 {
            return Err(Error::Unsupported(format!(
                "vertex types are defined for t = 3, got t = {}",
                self.t
            )));
        }
        Ok(VertexType { zeros: self.count(0), ones: self.count(1), twos: self.count(2) })
    }
}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        self.coords.cmp(&other.coords).then(self.t.cmp(&other.t))
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Type `(a, b, c)` of a point of `[3]^n`: numbers of zeros, ones and twos.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexType {
    pub zeros: usize,
    pub ones: usize,
    pub twos: usize,
}

impl VertexType {
    pub fn n(&self) -> usize {
        self.zeros + self.ones + self.twos
    }

    pub fn up_degree(&self) -> usize {
        self.n() - self.twos
    }

    pub fn down_degree(&self) -> usize {
        self.n() - self.zeros
    }
}

/// Layer sizes `l_0, .., l_{(t-1)n}`: coefficients of `(1 + z + .. + z^{t-1})^n`.
pub fn layer_sizes(t: usize, n: usize) -> Result<Vec<BigUint>> {
    check_grid(t, n)?;
    let mut coeffs = vec![BigUint::one()];
    for _ in 0..n {
        let mut next = vec![BigUint::zero(); coeffs.len() + t - 1];
        for (k, c) in coeffs.iter().enumerate() {
            for slot in &mut next[k..k + t] {
                *slot += c;
            }
        }
        coeffs = next;
    }
    Ok(coeffs)
}

/// `l_k(t, n)`, the number of points of rank `k`.
pub fn layer_size(t: usize, n: usize, k: usize) -> Result<BigUint> {
    check_rank(t, n, k)?;
    Ok(layer_sizes(t, n)?.swap_remove(k))
}

/// Index of the (lower) middle layer, `floor((t-1)n/2)`.
pub fn middle_rank(t: usize, n: usize) -> usize {
    (t - 1) * n / 2
}

/// All points of rank `k`, in strictly increasing lexicographic order.
pub fn enumerate_layer(t: usize, n: usize, k: usize) -> Result<Vec<Point>> {
    check_rank(t, n, k)?;
    let mut out = Vec::new();
    let mut coords = vec![0u8; n];
    fill_layer(t, n, 0, k, &mut coords, &mut out);
    Ok(out)
}

fn fill_layer(t: usize, n: usize, pos: usize, remaining: usize, coords: &mut [u8], out: &mut Vec<Point>) {
    if pos == n {
        if remaining == 0 {
            out.push(Point::from_valid(t, coords.to_vec()));
        }
        return;
    }
    let room_after = (t - 1) * (n - pos - 1);
    let lo = remaining.saturating_sub(room_after);
    let hi = remaining.min(t - 1);
    for v in lo..=hi {
        coords[pos] = v as u8;
        fill_layer(t, n, pos + 1, remaining - v, coords, out);
    }
}

/// All points of `[t]^n`, layer by layer.
pub fn enumerate_all(t: usize, n: usize) -> Result<Vec<Point>> {
    check_grid(t, n)?;
    let mut out = Vec::new();
    for k in 0..=(t - 1) * n {
        out.extend(enumerate_layer(t, n, k)?);
    }
    Ok(out)
}

/// A range of consecutive layers of `[t]^n` with a dense point index and the
/// Hasse adjacency between the layers it contains.
#[derive(Clone, Debug)]
pub struct LayerSlice {
    t: usize,
    n: usize,
    k_low: usize,
    k_high: usize,
    points: Vec<Point>,
    offsets: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    up: Vec<Vec<u32>>,
    down: Vec<Vec<u32>>,
}

impl LayerSlice {
    pub fn new(t: usize, n: usize, k_low: usize, k_high: usize) -> Result<Self> {
        check_rank(t, n, k_high)?;
        if k_low > k_high {
            return Err(domain!("empty layer range [{k_low}, {k_high}]"));
        }
        let mut points = Vec::new();
        let mut offsets = Vec::with_capacity(k_high - k_low + 2);
        for k in k_low..=k_high {
            offsets.push(points.len());
            points.extend(enumerate_layer(t, n, k)?);
        }
        offsets.push(points.len());
        let index: HashMap<Vec<u8>, usize> =
            points.iter().enumerate().map(|(i, p)| (p.coords.clone(), i)).collect();
        let lookup = |p: &Point| index.get(&p.coords).map(|&i| i as u32);
        let up = points.iter().map(|p| p.up_neighbors().iter().filter_map(lookup).collect()).collect();
        let down = points.iter().map(|p| p.down_neighbors().iter().filter_map(lookup).collect()).collect();
        Ok(LayerSlice { t, n, k_low, k_high, points, offsets, index, up, down })
    }

    /// A single layer.
    pub fn layer(t: usize, n: usize, k: usize) -> Result<Self> {
        Self::new(t, n, k, k)
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_low(&self) -> usize {
        self.k_low
    }

    pub fn k_high(&self) -> usize {
        self.k_high
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn contains_layer(&self, k: usize) -> bool {
        (self.k_low..=self.k_high).contains(&k)
    }

    /// Positions of the points of layer `k`.
    pub fn layer_range(&self, k: usize) -> Range<usize> {
        if !self.contains_layer(k) {
            return 0..0;
        }
        let j = k - self.k_low;
        self.offsets[j]..self.offsets[j + 1]
    }

    pub fn position(&self, p: &Point) -> Option<usize> {
        if p.t() != self.t || p.n() != self.n {
            return None;
        }
        self.index.get(&p.coords).copied()
    }

    /// Up-neighbours of position `i` that lie inside the slice.
    pub fn up(&self, i: usize) -> &[u32] {
        &self.up[i]
    }

    /// Down-neighbours of position `i` that lie inside the slice.
    pub fn down(&self, i: usize) -> &[u32] {
        &self.down[i]
    }

    /// Hasse neighbours (both directions) inside the slice.
    pub fn hasse_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.up[i].iter().chain(&self.down[i]).map(|&j| j as usize)
    }

    pub fn empty_set(&self) -> PointSet<'_> {
        PointSet { slice: self, bits: FixedBitSet::with_capacity(self.len()) }
    }

    pub fn full_set(&self) -> PointSet<'_> {
        let mut s = self.empty_set();
        s.bits.insert_range(..);
        s
    }

    pub fn layer_set(&self, k: usize) -> PointSet<'_> {
        let mut s = self.empty_set();
        s.bits.insert_range(self.layer_range(k));
        s
    }

    pub fn set_from_points<'p, I>(&self, pts: I) -> Result<PointSet<'_>>
    where
        I: IntoIterator<Item = &'p Point>,
    {
        let mut s = self.empty_set();
        for p in pts {
            let i = self.position(p).ok_or_else(|| domain!("point {p} not in layer slice"))?;
            s.bits.insert(i);
        }
        Ok(s)
    }

    pub fn set_from_indices<I: IntoIterator<Item = usize>>(&self, idx: I) -> PointSet<'_> {
        let mut s = self.empty_set();
        for i in idx {
            s.bits.insert(i);
        }
        s
    }
}

/// A subset of a [`LayerSlice`], stored as a bit-vector over slice positions.
#[derive(Clone)]
pub struct PointSet<'a> {
    slice: &'a LayerSlice,
    bits: FixedBitSet,
}

impl PartialEq for PointSet<'_> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.slice, other.slice) && self.bits == other.bits
    }
}

impl Eq for PointSet<'_> {}

impl fmt::Debug for PointSet<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.points()).finish()
    }
}

impl<'a> PointSet<'a> {
    pub fn slice(&self) -> &'a LayerSlice {
        self.slice
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits.contains(i)
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        self.slice.position(p).is_some_and(|i| self.bits.contains(i))
    }

    pub fn insert(&mut self, i: usize) {
        self.bits.insert(i);
    }

    pub fn remove(&mut self, i: usize) {
        self.bits.set(i, false);
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn points(&self) -> Vec<&'a Point> {
        let slice = self.slice;
        self.bits.ones().map(|i| slice.point(i)).collect()
    }

    pub fn is_subset(&self, other: &PointSet<'_>) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn union(&self, other: &PointSet<'a>) -> PointSet<'a> {
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        PointSet { slice: self.slice, bits }
    }

    pub fn intersection(&self, other: &PointSet<'a>) -> PointSet<'a> {
        let mut bits = self.bits.clone();
        bits.intersect_with(&other.bits);
        PointSet { slice: self.slice, bits }
    }

    pub fn difference(&self, other: &PointSet<'a>) -> PointSet<'a> {
        let mut bits = self.bits.clone();
        bits.difference_with(&other.bits);
        PointSet { slice: self.slice, bits }
    }

    /// The single layer containing every element, if there is one.
    /// The empty set reports `None`.
    pub fn single_layer(&self) -> Option<usize> {
        let mut ranks = self.indices().map(|i| self.slice.point(i).rank());
        let first = ranks.next()?;
        ranks.all(|r| r == first).then_some(first)
    }

    /// Up-neighbours of the set that lie in the slice.
    pub fn up_shadow(&self) -> PointSet<'a> {
        let mut out = self.slice.empty_set();
        for i in self.indices() {
            for &j in self.slice.up(i) {
                out.bits.insert(j as usize);
            }
        }
        out
    }

    /// Down-neighbours of the set that lie in the slice.
    pub fn down_shadow(&self) -> PointSet<'a> {
        let mut out = self.slice.empty_set();
        for i in self.indices() {
            for &j in self.slice.down(i) {
                out.bits.insert(j as usize);
            }
        }
        out
    }
}

pub(crate) fn require_layer(set: &PointSet<'_>, what: &str) -> Result<Option<usize>> {
    if set.is_empty() {
        return Ok(None);
    }
    set.single_layer().map(Some).ok_or_else(|| domain!("{what} requires a set inside one layer"))
}

/// Partition of `set` into 2-linked components: maximal subsets connected
/// when points at Hasse distance at most two are joined. Paths are taken in
/// the Hasse diagram of the ambient slice, so they may pass through slice
/// points that are not in `set`.
pub fn two_linked_components<'a>(set: &PointSet<'a>) -> Vec<PointSet<'a>> {
    let slice = set.slice();
    let mut seen = FixedBitSet::with_capacity(slice.len());
    let mut comps = Vec::new();
    for start in set.indices() {
        if seen.contains(start) {
            continue;
        }
        let mut comp = slice.empty_set();
        let mut queue = VecDeque::from([start]);
        seen.insert(start);
        while let Some(v) = queue.pop_front() {
            comp.insert(v);
            for w in slice.hasse_neighbors(v) {
                let mut visit = |x: usize| {
                    if set.contains(x) && !seen.contains(x) {
                        seen.insert(x);
                        queue.push_back(x);
                    }
                };
                visit(w);
                for x in slice.hasse_neighbors(w) {
                    visit(x);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// Whether `set` is 2-linked (the empty set counts as not linked).
pub fn is_two_linked(set: &PointSet<'_>) -> bool {
    !set.is_empty() && two_linked_components(set).len() == 1
}

/// Upward closure `[A] = {v in L_i : N+(v) ⊆ N+(A)}` of a set inside one layer.
/// The slice must contain layer `i + 1` unless `i` is the top rank.
pub fn closure<'a>(set: &PointSet<'a>, layer: usize) -> Result<PointSet<'a>> {
    let slice = set.slice();
    if let Some(k) = require_layer(set, "closure")? {
        if k != layer {
            return Err(domain!("set lies in layer {k}, not {layer}"));
        }
    }
    if !slice.contains_layer(layer) {
        return Err(domain!("layer {layer} not in slice"));
    }
    let top = (slice.t() - 1) * slice.n();
    if layer < top && !slice.contains_layer(layer + 1) {
        return Err(domain!("closure in layer {layer} needs layer {} in the slice", layer + 1));
    }
    let shadow = set.up_shadow();
    let mut out = slice.empty_set();
    for v in slice.layer_range(layer) {
        if slice.up(v).iter().all(|&w| shadow.contains(w as usize)) {
            out.insert(v);
        }
    }
    Ok(out)
}

/// `int(A) = {v in L_{i-1} : N+(v) ⊆ A}` for `A` inside layer `i >= 1`.
pub fn interior<'a>(set: &PointSet<'a>, layer: usize) -> Result<PointSet<'a>> {
    let slice = set.slice();
    if let Some(k) = require_layer(set, "interior")? {
        if k != layer {
            return Err(domain!("set lies in layer {k}, not {layer}"));
        }
    }
    if layer == 0 || !slice.contains_layer(layer) || !slice.contains_layer(layer - 1) {
        return Err(domain!("interior of layer {layer} needs layers {} and {layer}", layer.wrapping_sub(1)));
    }
    let mut out = slice.empty_set();
    for v in slice.layer_range(layer - 1) {
        if slice.up(v).iter().all(|&w| set.contains(w as usize)) {
            out.insert(v);
        }
    }
    Ok(out)
}

/// Points of layer `k` adjacent in the Hasse diagram to some element of
/// `set`; every element must lie in layer `k - 1` or `k + 1`.
pub fn boundary<'a>(set: &PointSet<'a>, k: usize) -> Result<PointSet<'a>> {
    let slice = set.slice();
    if !slice.contains_layer(k) {
        return Err(domain!("boundary layer {k} not in slice"));
    }
    let mut out = slice.empty_set();
    for i in set.indices() {
        let r = slice.point(i).rank();
        if r + 1 == k {
            slice.up(i).iter().for_each(|&j| out.insert(j as usize));
        } else if r == k + 1 {
            slice.down(i).iter().for_each(|&j| out.insert(j as usize));
        } else {
            return Err(domain!("point {} is not adjacent to layer {k}", slice.point(i)));
        }
    }
    Ok(out)
}

/// `Y^X`: the points of the slice not strictly below any element of `above`.
/// Every element of `above` must lie strictly above the slice.
pub fn restrict_above<'a>(slice: &'a LayerSlice, above: &[Point]) -> Result<PointSet<'a>> {
    for x in above {
        if x.t() != slice.t() || x.n() != slice.n() {
            return Err(domain!("point {x} is not in [{}]^{}", slice.t(), slice.n()));
        }
        if x.rank() <= slice.k_high() {
            return Err(domain!("exclusion point {x} is not above layer {}", slice.k_high()));
        }
    }
    let mut out = slice.empty_set();
    for (i, p) in slice.points().iter().enumerate() {
        if !above.iter().any(|x| p.is_lt(x)) {
            out.insert(i);
        }
    }
    Ok(out)
}

/// Appends `n - i` twos to a point of `[3]^n`, landing in `[3]^{2n-i}`.
pub fn embed_phi(i: usize, p: &Point) -> Result<Point> {
    if p.t() != 3 {
        return Err(Error::Unsupported("the embedding is defined on [3]^n".into()));
    }
    let n = p.n();
    if i >= n {
        return Err(domain!("embedding index i = {i} must be below n = {n}"));
    }
    let mut coords = p.coords().to_vec();
    coords.extend(std::iter::repeat(2u8).take(n - i));
    Ok(Point::from_valid(3, coords))
}

/// Outcome of the exhaustive check that the embedding maps
/// `L(n)^X_{[j,i]}` bijectively and order-preservingly onto
/// `L(2n-i)^{X'}_{[2n-2i+j, 2n-i]}` with `X' = phi(X) ∪ Y`.
#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingReport {
    pub n: usize,
    pub i: usize,
    pub j: usize,
    pub source_size: usize,
    pub target_size: usize,
    pub injective: bool,
    pub image_in_target: bool,
    pub surjective: bool,
    pub order_preserving: bool,
}

impl EmbeddingReport {
    pub fn holds(&self) -> bool {
        self.injective && self.image_in_target && self.surjective && self.order_preserving
    }
}

pub fn verify_embedding(n: usize, i: usize, j: usize, above: &[Point]) -> Result<EmbeddingReport> {
    if j > i || i >= n {
        return Err(domain!("need j <= i < n, got j = {j}, i = {i}, n = {n}"));
    }
    let big_n = 2 * n - i;
    let src_slice = LayerSlice::new(3, n, j, i)?;
    let src = restrict_above(&src_slice, above)?;
    let mut exclusion: Vec<Point> = above.iter().map(|x| embed_phi(i, x)).collect::<Result<_>>()?;
    for pos in n..big_n {
        let mut c = vec![2u8; big_n];
        c[pos] = 1;
        exclusion.push(Point::from_valid(3, c));
    }
    let tgt_slice = LayerSlice::new(3, big_n, 2 * n - 2 * i + j, big_n)?;
    let tgt = restrict_above(&tgt_slice, &exclusion)?;

    let images: Vec<Point> = src.points().into_iter().map(|p| embed_phi(i, p)).collect::<Result<_>>()?;
    let mut sorted = images.clone();
    sorted.sort();
    sorted.dedup();
    let injective = sorted.len() == images.len();
    let image_in_target = images.iter().all(|q| tgt.contains_point(q));
    let surjective = image_in_target && injective && images.len() == tgt.len();
    let src_pts = src.points();
    let order_preserving = src_pts.iter().enumerate().all(|(a, p)| {
        src_pts.iter().enumerate().all(|(b, q)| p.is_le(q) == images[a].is_le(&images[b]))
    });
    Ok(EmbeddingReport {
        n,
        i,
        j,
        source_size: src.len(),
        target_size: tgt.len(),
        injective,
        image_in_target,
        surjective,
        order_preserving,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[u8]) -> Point {
        Point::new(3, c.to_vec()).unwrap()
    }

    #[test]
    fn layer_enumeration_examples() {
        assert_eq!(enumerate_layer(3, 2, 2).unwrap(), vec![pt(&[0, 2]), pt(&[1, 1]), pt(&[2, 0])]);
        assert_eq!(enumerate_layer(3, 1, 0).unwrap(), vec![pt(&[0])]);
        let two = enumerate_layer(2, 2, 1).unwrap();
        assert_eq!(two.iter().map(|p| p.coords().to_vec()).collect::<Vec<_>>(), vec![vec![0, 1], vec![1, 0]]);
        assert!(enumerate_layer(3, 2, 5).is_err());
    }

    #[test]
    fn layer_sizes_match_enumeration() {
        assert_eq!(layer_size(3, 2, 2).unwrap(), BigUint::from(3u32));
        assert_eq!(layer_size(3, 4, 4).unwrap(), BigUint::from(19u32));
        for t in 2..=5 {
            for n in 1..=5 {
                let sizes = layer_sizes(t, n).unwrap();
                assert_eq!(sizes[0], BigUint::one());
                for (k, s) in sizes.iter().enumerate() {
                    assert_eq!(*s, BigUint::from(enumerate_layer(t, n, k).unwrap().len()));
                }
            }
        }
    }

    #[test]
    fn neighbours() {
        assert_eq!(pt(&[1, 2]).up_neighbors(), vec![pt(&[2, 2])]);
        assert!(pt(&[0, 0, 0]).down_neighbors().is_empty());
        let p = pt(&[1, 1]);
        let mut up = p.up_neighbors();
        up.sort();
        assert_eq!(up, vec![pt(&[1, 2]), pt(&[2, 1])]);
        let mut down = p.down_neighbors();
        down.sort();
        assert_eq!(down, vec![pt(&[0, 1]), pt(&[1, 0])]);
    }

    #[test]
    fn vertex_types() {
        let v = pt(&[0, 1, 2]).vertex_type().unwrap();
        assert_eq!((v.zeros, v.ones, v.twos), (1, 1, 1));
        assert_eq!((v.up_degree(), v.down_degree()), (2, 2));
        let ones = pt(&[1, 1, 1, 1]).vertex_type().unwrap();
        assert_eq!((ones.up_degree(), ones.down_degree()), (4, 4));
        for n in 2..=7 {
            for u in enumerate_layer(3, n, n - 1).unwrap() {
                let k = u.count(2);
                let ty = u.vertex_type().unwrap();
                assert_eq!((ty.zeros, ty.ones, ty.twos), (k + 1, n - 2 * k - 1, k));
                assert_eq!(ty.up_degree(), u.up_neighbors().len());
            }
        }
        assert!(Point::new(4, vec![0, 1]).unwrap().vertex_type().is_err());
    }

    #[test]
    fn two_linked_examples() {
        let s = LayerSlice::new(3, 2, 0, 2).unwrap();
        let a = s.set_from_points(&[pt(&[0, 1]), pt(&[1, 0])]).unwrap();
        assert_eq!(two_linked_components(&a).len(), 1);
        let single = s.set_from_points(&[pt(&[1, 1])]).unwrap();
        assert_eq!(two_linked_components(&single), vec![single.clone()]);

        let s3 = LayerSlice::new(3, 3, 1, 3).unwrap();
        let far = s3.set_from_points(&[pt(&[2, 0, 0]), pt(&[0, 0, 2])]).unwrap();
        assert_eq!(two_linked_components(&far).len(), 2);
    }

    #[test]
    fn closure_interior_boundary() {
        let s = LayerSlice::new(3, 2, 0, 2).unwrap();
        assert!(closure(&s.empty_set(), 1).unwrap().is_empty());
        let a = s.set_from_points(&[pt(&[0, 1])]).unwrap();
        let b = boundary(&a, 2).unwrap();
        assert_eq!(b, s.set_from_points(&[pt(&[0, 2]), pt(&[1, 1])]).unwrap());
        let int = interior(&s.layer_set(1), 1).unwrap();
        assert_eq!(int, s.set_from_points(&[pt(&[0, 0])]).unwrap());
        assert!(boundary(&s.layer_set(0), 2).is_err());
    }

    #[test]
    fn small_sets_have_empty_interior() {
        let n = 10;
        let s = LayerSlice::new(3, n, n - 2, n - 1).unwrap();
        let range = s.layer_range(n - 1);
        let a = s.set_from_indices(range.take(n / 10));
        assert!(interior(&a, n - 1).unwrap().is_empty());
    }

    #[test]
    fn restrict_above_examples() {
        let y = LayerSlice::layer(3, 2, 1).unwrap();
        assert_eq!(restrict_above(&y, &[]).unwrap(), y.full_set());
        assert!(restrict_above(&y, &[pt(&[2, 2])]).unwrap().is_empty());
        // (1,2) dominates both (0,1) and (1,0); (0,2) dominates only (0,1).
        assert!(restrict_above(&y, &[pt(&[1, 2])]).unwrap().is_empty());
        let r = restrict_above(&y, &[pt(&[0, 2])]).unwrap();
        assert_eq!(r, y.set_from_points(&[pt(&[1, 0])]).unwrap());
        assert!(restrict_above(&y, &[pt(&[1, 0])]).is_err());
    }

    #[test]
    fn embedding() {
        assert_eq!(embed_phi(1, &pt(&[0, 1])).unwrap(), pt(&[0, 1, 2]));
        assert!(embed_phi(1, &pt(&[1])).is_err());
        let rep = verify_embedding(3, 2, 1, &[]).unwrap();
        assert!(rep.holds(), "{rep:?}");
        assert_eq!(rep.source_size, 3 + 6);
    }
}
