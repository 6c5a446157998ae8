//! Polymer models on the layers around the middle of `[3]^n`, Ursell
//! functions, cluster enumeration and exact partition functions.
//!
//! Two families are built here:
//!
//! * the central model: polymers are 2-linked subsets of `L_{n-1}` or of
//!   `L_{n+1}`, weighted `2^{-|∂A|}`, compatible when their boundaries in
//!   `L_n` are disjoint;
//! * the three-layer model over `L^X_{[n-2, n]}`: polymers are 2-linked
//!   subsets of `L^X_{n-1}`, weighted `2^{|int A| - |N+(A)|}` (or
//!   `2^{-|N+(A)|}` for the primed variant), compatible when their union is
//!   not 2-linked.
//!
//! In both, two points on the same side are 2-linked exactly when they share
//! a neighbour in the middle layer, and two polymers are compatible exactly
//! when their middle-layer footprints are disjoint. All structure below is
//! phrased through those footprints.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, refused, Result};
use crate::poset::{restrict_above, LayerSlice, Point};

/// Largest incompatibility graph accepted by [`ursell`].
pub const URSELL_MAX_VERTICES: usize = 7;

/// Edge list of the complete graph on `k` vertices, in a fixed order.
fn edge_pairs(k: usize) -> Vec<(usize, usize)> {
    (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect()
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// `k! φ(G)`: the signed count of connected spanning edge subsets of `G`.
/// `adj[i]` is the neighbour mask of vertex `i`.
fn ursell_scaled(adj: &[u32]) -> i64 {
    let k = adj.len();
    let edges: Vec<(usize, usize)> = edge_pairs(k).into_iter().filter(|&(i, j)| adj[i] >> j & 1 == 1).collect();
    let mut total = 0i64;
    let mut parent = vec![0usize; k];
    for mask in 0u64..(1u64 << edges.len()) {
        for (i, p) in parent.iter_mut().enumerate() {
            *p = i;
        }
        let mut comps = k;
        for (e, &(i, j)) in edges.iter().enumerate() {
            if mask >> e & 1 == 1 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                    comps -= 1;
                }
            }
        }
        if comps == 1 {
            total += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
        }
    }
    total
}

fn factorial(k: usize) -> i64 {
    (1..=k as i64).product()
}

/// Ursell function `φ(G) = (1/|V|!) Σ_{spanning connected E' ⊆ E} (-1)^{|E'|}`.
/// Disconnected graphs give zero.
pub fn ursell(adj: &[u32]) -> Result<BigRational> {
    if adj.is_empty() {
        return Err(domain!("the Ursell function needs at least one vertex"));
    }
    if adj.len() > URSELL_MAX_VERTICES {
        return Err(refused!("graph has {} vertices, limit is {URSELL_MAX_VERTICES}", adj.len()));
    }
    let k = adj.len();
    for (i, &m) in adj.iter().enumerate() {
        if m >> i & 1 == 1 || m >> k != 0 || (0..k).any(|j| (m >> j & 1) != (adj[j] >> i & 1)) {
            return Err(domain!("adjacency masks must describe a simple undirected graph"));
        }
    }
    Ok(BigRational::new(BigInt::from(ursell_scaled(adj)), BigInt::from(factorial(k))))
}

/// Adjacency masks from an edge list.
pub fn graph_from_edges(k: usize, edges: &[(usize, usize)]) -> Vec<u32> {
    let mut adj = vec![0u32; k];
    for &(i, j) in edges {
        adj[i] |= 1 << j;
        adj[j] |= 1 << i;
    }
    adj
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Central model with weight `2^{-|∂A|}`.
    Central,
    /// Three-layer model with weight `2^{|int A| - |N+(A)|}`.
    ThreeLayer,
    /// Three-layer model with weight `2^{-|N+(A)|}`.
    ThreeLayerPrime,
}

/// A polymer: a 2-linked vertex set with its cached footprint and interior.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polymer {
    /// Sorted vertex ids of the model.
    pub vertices: Vec<u32>,
    /// Sorted ids of the middle-layer points adjacent to the polymer.
    pub footprint: Vec<u32>,
    /// `|int A|` (zero for the central model).
    pub interior: u32,
}

impl Polymer {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn compatible(&self, other: &Polymer) -> bool {
        disjoint(&self.footprint, &other.footprint)
    }
}

fn disjoint(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return false,
        }
    }
    true
}

fn pow2(e: i64) -> BigRational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

/// An indexed polymer model over `[3]^n`.
#[derive(Debug, Clone)]
pub struct PolymerModel {
    kind: ModelKind,
    n: usize,
    exclusion: Vec<Point>,
    vertices: Vec<Point>,
    side: Vec<u8>,
    footprint: Vec<Vec<u32>>,
    middle: Vec<Point>,
    link: Vec<Vec<u32>>,
    /// Up-neighbour vertex ids of each layer-`(n-2)` point whose whole upper
    /// neighbourhood lies among the vertices (three-layer models only).
    interior_cands: Vec<Vec<u32>>,
    /// For each vertex, the interior candidates below it.
    below: Vec<Vec<u32>>,
}

impl PolymerModel {
    /// The central model on `L_{[n-1, n+1]}`.
    pub fn central(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(domain!("n must be at least 1"));
        }
        let slice = LayerSlice::new(3, n, n - 1, n + 1)?;
        let mid = slice.layer_range(n);
        let mut vertices = Vec::new();
        let mut side = Vec::new();
        let mut footprint = Vec::new();
        for (s, k) in [(0u8, n - 1), (1u8, n + 1)] {
            for i in slice.layer_range(k) {
                vertices.push(slice.point(i).clone());
                side.push(s);
                let mut f: Vec<u32> =
                    slice.hasse_neighbors(i).filter(|j| mid.contains(j)).map(|j| (j - mid.start) as u32).collect();
                f.sort_unstable();
                footprint.push(f);
            }
        }
        let middle = mid.map(|i| slice.point(i).clone()).collect();
        let mut model = PolymerModel {
            kind: ModelKind::Central,
            n,
            exclusion: Vec::new(),
            vertices,
            side,
            footprint,
            middle,
            link: Vec::new(),
            interior_cands: Vec::new(),
            below: Vec::new(),
        };
        model.build_links();
        Ok(model)
    }

    /// The three-layer model on `L^X_{[n-2, n]}` with `X ⊆ L_{[n+1, 2n]}`.
    pub fn three_layer(n: usize, exclusion: &[Point], prime: bool) -> Result<Self> {
        if n < 2 {
            return Err(domain!("the three-layer model needs n >= 2"));
        }
        let slice = LayerSlice::new(3, n, n - 2, n)?;
        let kept = restrict_above(&slice, exclusion)?;
        let mid_ids: HashMap<usize, u32> = slice
            .layer_range(n)
            .filter(|&i| kept.contains(i))
            .enumerate()
            .map(|(j, i)| (i, j as u32))
            .collect();
        let vert_ids: HashMap<usize, u32> = slice
            .layer_range(n - 1)
            .filter(|&i| kept.contains(i))
            .enumerate()
            .map(|(j, i)| (i, j as u32))
            .collect();
        let mut order: Vec<(usize, u32)> = vert_ids.iter().map(|(&i, &j)| (i, j)).collect();
        order.sort_by_key(|&(_, j)| j);
        let mut vertices = Vec::new();
        let mut footprint = Vec::new();
        for &(i, _) in &order {
            vertices.push(slice.point(i).clone());
            let mut f: Vec<u32> = slice
                .up(i)
                .iter()
                .map(|&j| *mid_ids.get(&(j as usize)).expect("upper neighbours of kept points are kept"))
                .collect();
            f.sort_unstable();
            footprint.push(f);
        }
        let mut middle_order: Vec<(usize, u32)> = mid_ids.iter().map(|(&i, &j)| (i, j)).collect();
        middle_order.sort_by_key(|&(_, j)| j);
        let middle = middle_order.iter().map(|&(i, _)| slice.point(i).clone()).collect();

        let mut interior_cands = Vec::new();
        let mut below = vec![Vec::new(); vertices.len()];
        for i in slice.layer_range(n - 2) {
            let ups: Option<Vec<u32>> = slice.up(i).iter().map(|&j| vert_ids.get(&(j as usize)).copied()).collect();
            if let Some(ups) = ups {
                let c = interior_cands.len() as u32;
                for &u in &ups {
                    below[u as usize].push(c);
                }
                interior_cands.push(ups);
            }
        }
        let mut model = PolymerModel {
            kind: if prime { ModelKind::ThreeLayerPrime } else { ModelKind::ThreeLayer },
            n,
            exclusion: exclusion.to_vec(),
            side: vec![0; vertices.len()],
            vertices,
            footprint,
            middle,
            link: Vec::new(),
            interior_cands,
            below,
        };
        model.build_links();
        Ok(model)
    }

    fn build_links(&mut self) {
        let mut by_mid: Vec<Vec<u32>> = vec![Vec::new(); self.middle.len()];
        for (v, f) in self.footprint.iter().enumerate() {
            for &b in f {
                by_mid[b as usize].push(v as u32);
            }
        }
        self.link = (0..self.vertices.len())
            .map(|v| {
                let mut out: Vec<u32> = self.footprint[v]
                    .iter()
                    .flat_map(|&b| by_mid[b as usize].iter().copied())
                    .filter(|&u| u as usize != v && self.side[u as usize] == self.side[v])
                    .collect();
                out.sort_unstable();
                out.dedup();
                out
            })
            .collect();
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn exclusion(&self) -> &[Point] {
        &self.exclusion
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex_id(&self, p: &Point) -> Option<u32> {
        self.vertices.iter().position(|q| q == p).map(|i| i as u32)
    }

    /// Size of the middle layer (`ℓ_n`, or `|L^X_n|`).
    pub fn middle_size(&self) -> usize {
        self.middle.len()
    }

    pub fn side(&self, v: u32) -> u8 {
        self.side[v as usize]
    }

    /// Same-side vertices at Hasse distance two.
    pub fn linked(&self, v: u32) -> &[u32] {
        &self.link[v as usize]
    }

    pub fn footprint(&self, v: u32) -> &[u32] {
        &self.footprint[v as usize]
    }

    /// Builds the polymer record for a vertex set; the set need not be
    /// 2-linked (weights then describe the whole set).
    pub fn polymer(&self, verts: &[u32]) -> Polymer {
        let mut vertices = verts.to_vec();
        vertices.sort_unstable();
        vertices.dedup();
        let mut footprint: Vec<u32> = vertices.iter().flat_map(|&v| self.footprint[v as usize].iter().copied()).collect();
        footprint.sort_unstable();
        footprint.dedup();
        let interior = if self.kind == ModelKind::Central { 0 } else { self.interior_count(&vertices) };
        Polymer { vertices, footprint, interior }
    }

    fn interior_count(&self, sorted: &[u32]) -> u32 {
        let mut cands: Vec<u32> = sorted.iter().flat_map(|&v| self.below[v as usize].iter().copied()).collect();
        cands.sort_unstable();
        cands.dedup();
        cands
            .into_iter()
            .filter(|&c| self.interior_cands[c as usize].iter().all(|u| sorted.binary_search(u).is_ok()))
            .count() as u32
    }

    /// Base-2 exponent of the polymer weight.
    pub fn weight_exponent(&self, p: &Polymer) -> i64 {
        let foot = p.footprint.len() as i64;
        match self.kind {
            ModelKind::Central | ModelKind::ThreeLayerPrime => -foot,
            ModelKind::ThreeLayer => p.interior as i64 - foot,
        }
    }

    pub fn weight(&self, p: &Polymer) -> BigRational {
        pow2(self.weight_exponent(p))
    }

    /// Whether a vertex set is 2-linked.
    pub fn is_two_linked(&self, verts: &[u32]) -> bool {
        self.components(verts).len() == 1
    }

    /// 2-linked components of a vertex set.
    pub fn components(&self, verts: &[u32]) -> Vec<Vec<u32>> {
        let set: HashSet<u32> = verts.iter().copied().collect();
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut sorted = verts.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for &s in &sorted {
            if !seen.insert(s) {
                continue;
            }
            let mut comp = vec![s];
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &u in self.linked(v) {
                    if set.contains(&u) && seen.insert(u) {
                        comp.push(u);
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Standard ceiling `(e Δ^2)^{s-1}` on 2-linked sets of size `s`
    /// through a vertex, with `Δ` the largest Hasse degree (`2n`).
    pub fn linked_set_ceiling(&self, size: usize) -> f64 {
        let delta = 2.0 * self.n as f64;
        (std::f64::consts::E * delta * delta).powi(size.saturating_sub(1) as i32)
    }

    /// Every 2-linked set of at most `max_size` vertices containing `anchor`,
    /// each exactly once.
    pub fn enumerate_polymers(&self, anchor: u32, max_size: usize, budget: f64) -> Result<Vec<Polymer>> {
        if anchor as usize >= self.vertices.len() {
            return Err(domain!("anchor {anchor} is not a polymer vertex"));
        }
        let ceiling = self.linked_set_ceiling(max_size);
        if ceiling > budget {
            return Err(refused!("enumeration ceiling {ceiling:.3e} exceeds budget {budget:.3e}"));
        }
        let mut out = Vec::new();
        connected_sets(&self.link, anchor, max_size, |_| true, &mut |s| out.push(self.polymer(s)));
        Ok(out)
    }

    /// Every polymer of at most `max_size` vertices, each once (rooted at its
    /// smallest vertex id).
    pub fn all_polymers(&self, max_size: usize) -> Vec<Polymer> {
        let mut out = Vec::new();
        for root in 0..self.vertices.len() as u32 {
            connected_sets(&self.link, root, max_size, |u| u > root, &mut |s| out.push(self.polymer(s)));
        }
        out
    }
}

/// Enumerates the connected vertex sets containing `root` of size at most
/// `max_size`, restricted to vertices passing `allow`, each exactly once.
fn connected_sets<F, V>(adj: &[Vec<u32>], root: u32, max_size: usize, allow: F, visit: &mut V)
where
    F: Fn(u32) -> bool,
    V: FnMut(&[u32]),
{
    if max_size == 0 {
        return;
    }
    let mut marks = vec![0u16; adj.len()];
    let mut sub = vec![root];
    mark(&mut marks, adj, root, true);
    let ext: Vec<u32> = adj[root as usize].iter().copied().filter(|&u| allow(u)).collect();
    extend_sets(adj, &allow, max_size, &mut sub, ext, &mut marks, visit);
}

fn mark(marks: &mut [u16], adj: &[Vec<u32>], v: u32, add: bool) {
    for &u in adj[v as usize].iter().chain(std::iter::once(&v)) {
        if add {
            marks[u as usize] += 1;
        } else {
            marks[u as usize] -= 1;
        }
    }
}

fn extend_sets<F, V>(
    adj: &[Vec<u32>],
    allow: &F,
    max_size: usize,
    sub: &mut Vec<u32>,
    mut ext: Vec<u32>,
    marks: &mut [u16],
    visit: &mut V,
) where
    F: Fn(u32) -> bool,
    V: FnMut(&[u32]),
{
    visit(sub);
    if sub.len() == max_size {
        return;
    }
    while let Some(w) = ext.pop() {
        let mut next = ext.clone();
        next.extend(adj[w as usize].iter().copied().filter(|&u| allow(u) && marks[u as usize] == 0));
        mark(marks, adj, w, true);
        sub.push(w);
        extend_sets(adj, allow, max_size, sub, next, marks, visit);
        sub.pop();
        mark(marks, adj, w, false);
    }
}

/// A cluster: an ordered polymer sequence with connected incompatibility graph.
#[derive(Debug, Clone, Serialize)]
pub struct Cluster {
    /// Indices into the polymer list the cluster was drawn from.
    pub polymers: Vec<usize>,
    /// Incompatibility graph over positions, as neighbour masks.
    pub graph: Vec<u32>,
    pub size: usize,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub weight: BigRational,
}

/// Exact cluster-weight totals by cluster size.
#[derive(Debug, Clone, Default)]
pub struct ClusterSums {
    /// `by_size[k]` = Σ_{‖Γ‖ = k} w(Γ).
    pub by_size: Vec<BigRational>,
    /// `abs_by_size[k]` = Σ_{‖Γ‖ = k} |w(Γ)|.
    pub abs_by_size: Vec<BigRational>,
    /// Number of ordered clusters of each size.
    pub counts: Vec<u128>,
}

impl ClusterSums {
    /// Σ_{‖Γ‖ = k} w(Γ) ‖Γ‖^m.
    pub fn moment(&self, k: usize, m: u32) -> BigRational {
        self.by_size.get(k).cloned().unwrap_or_else(BigRational::zero) * BigRational::from_integer(BigInt::from(k).pow(m))
    }
}

/// Scale making every per-support contribution an integer: all multiplicity
/// denominators divide `7!`.
const SCALE: i128 = 5040;

/// Integer numerators keyed by a base-2 exponent, stored densely.
#[derive(Default, Clone)]
struct ExpBuckets {
    low: i64,
    vals: Vec<i128>,
}

impl ExpBuckets {
    fn add(&mut self, e: i64, v: i128) {
        if self.vals.is_empty() {
            self.low = e;
        }
        if e < self.low {
            let grow = (self.low - e) as usize;
            self.vals.splice(0..0, std::iter::repeat(0).take(grow));
            self.low = e;
        }
        let i = (e - self.low) as usize;
        if i >= self.vals.len() {
            self.vals.resize(i + 1, 0);
        }
        self.vals[i] += v;
    }

    fn merge(&mut self, other: &ExpBuckets) {
        for (i, &v) in other.vals.iter().enumerate() {
            if v != 0 {
                self.add(other.low + i as i64, v);
            }
        }
    }

    fn total(&self) -> BigRational {
        let mut out = BigRational::zero();
        for (i, &v) in self.vals.iter().enumerate() {
            if v != 0 {
                out += BigRational::new(BigInt::from(v), BigInt::from(SCALE)) * pow2(self.low + i as i64);
            }
        }
        out
    }
}

#[derive(Default)]
struct Accumulator {
    signed: Vec<ExpBuckets>,
    abs: Vec<ExpBuckets>,
    counts: Vec<u128>,
    ursell_cache: HashMap<(usize, u32), i64>,
}

impl Accumulator {
    fn add(&mut self, size: usize, exponent: i64, scaled: i128, orderings: u128) {
        if self.signed.len() <= size {
            self.signed.resize_with(size + 1, ExpBuckets::default);
            self.abs.resize_with(size + 1, ExpBuckets::default);
            self.counts.resize(size + 1, 0);
        }
        self.signed[size].add(exponent, scaled);
        self.abs[size].add(exponent, scaled.abs());
        self.counts[size] += orderings;
    }

    fn merge(mut self, other: Accumulator) -> Accumulator {
        for size in 0..other.signed.len() {
            if self.signed.len() <= size {
                self.signed.resize_with(size + 1, ExpBuckets::default);
                self.abs.resize_with(size + 1, ExpBuckets::default);
                self.counts.resize(size + 1, 0);
            }
            self.signed[size].merge(&other.signed[size]);
            self.abs[size].merge(&other.abs[size]);
            self.counts[size] += other.counts[size];
        }
        self
    }

    fn ursell_scaled(&mut self, adj: &[u32]) -> i64 {
        let k = adj.len();
        match k {
            1 => return 1,
            2 => return if adj[0] != 0 { -1 } else { 0 },
            3 => {
                let edges = (adj[0].count_ones() + adj[1].count_ones() + adj[2].count_ones()) / 2;
                return match edges {
                    3 => 2,
                    2 => 1,
                    _ => 0,
                };
            }
            _ => {}
        }
        let key = edge_pairs(k)
            .iter()
            .enumerate()
            .fold(0u32, |m, (e, &(i, j))| if adj[i] >> j & 1 == 1 { m | 1 << e } else { m });
        *self.ursell_cache.entry((k, key)).or_insert_with(|| ursell_scaled(adj))
    }

    fn finish(self, cap: usize) -> ClusterSums {
        let collect = |b: &[ExpBuckets]| {
            (0..=cap).map(|k| b.get(k).map(ExpBuckets::total).unwrap_or_else(BigRational::zero)).collect()
        };
        let counts = (0..=cap).map(|k| self.counts.get(k).copied().unwrap_or(0)).collect();
        ClusterSums { by_size: collect(&self.signed), abs_by_size: collect(&self.abs), counts }
    }
}

fn multinomial(ms: &[usize]) -> u128 {
    let total: usize = ms.iter().sum();
    let mut r: u128 = (1..=total as u128).product();
    for &m in ms {
        r /= (1..=m as u128).product::<u128>();
    }
    r
}

/// Incompatibility graph of the sequence that lists support polymer `i`
/// `ms[i]` times, support order first.
fn expanded_graph(support_adj: &[u32], ms: &[usize]) -> Vec<u32> {
    let owner: Vec<usize> = ms.iter().enumerate().flat_map(|(i, &m)| std::iter::repeat(i).take(m)).collect();
    let k = owner.len();
    (0..k)
        .map(|a| {
            (0..k)
                .filter(|&b| b != a && (owner[a] == owner[b] || support_adj[owner[a]] >> owner[b] & 1 == 1))
                .fold(0u32, |m, b| m | 1 << b)
        })
        .collect()
}

/// Calls `f` with every multiplicity vector `m_i >= 1` with
/// `Σ m_i sizes_i <= cap` and `Σ m_i <= URSELL_MAX_VERTICES`.
fn for_each_multiplicity(sizes: &[usize], cap: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(sizes: &[usize], cap: usize, ms: &mut Vec<usize>, used: usize, f: &mut impl FnMut(&[usize])) {
        let i = ms.len();
        if i == sizes.len() {
            if ms.iter().sum::<usize>() <= URSELL_MAX_VERTICES {
                f(ms);
            }
            return;
        }
        let rest: usize = sizes[i + 1..].iter().sum();
        let mut m = 1;
        while used + m * sizes[i] + rest <= cap {
            ms.push(m);
            rec(sizes, cap, ms, used + m * sizes[i], f);
            ms.pop();
            m += 1;
        }
    }
    rec(sizes, cap, &mut Vec::with_capacity(sizes.len()), 0, f);
}

/// Polymers of bounded size with an inverted footprint index, the search
/// space for cluster supports.
struct PolymerIndex {
    polymers: Vec<Polymer>,
    exponents: Vec<i64>,
    /// `by_foot[s][b]` lists the ids of polymers with `s` vertices whose
    /// footprint contains middle point `b`.
    by_foot: Vec<Vec<Vec<u32>>>,
}

/// Per-walk scratch space: adjacency counters to `N[S]` and a dedup stamp.
struct Scratch {
    blocked: Vec<u16>,
    seen: Vec<u32>,
    stamp: u32,
}

impl Scratch {
    fn new(len: usize) -> Self {
        Scratch { blocked: vec![0; len], seen: vec![0; len], stamp: 0 }
    }
}

impl PolymerIndex {
    fn new(model: &PolymerModel, max_size: usize) -> Self {
        let mut polymers = model.all_polymers(max_size);
        polymers.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.vertices.cmp(&b.vertices)));
        let exponents = polymers.iter().map(|p| model.weight_exponent(p)).collect();
        let mut by_foot = vec![vec![Vec::new(); model.middle_size()]; max_size + 1];
        for (id, p) in polymers.iter().enumerate() {
            for &b in &p.footprint {
                by_foot[p.len()][b as usize].push(id as u32);
            }
        }
        PolymerIndex { polymers, exponents, by_foot }
    }

    fn len_of(&self, p: u32) -> usize {
        self.polymers[p as usize].len()
    }

    /// Incompatible polymers of `p` with id greater than `root` and at most
    /// `max_len` vertices, each once.
    fn neighbors(&self, p: u32, root: u32, max_len: usize, scratch: &mut Scratch) -> Vec<u32> {
        scratch.stamp += 1;
        let stamp = scratch.stamp;
        let mut out = Vec::new();
        for lists in self.by_foot.iter().take(max_len + 1) {
            for &b in &self.polymers[p as usize].footprint {
                for &q in &lists[b as usize] {
                    if q > root && q != p && scratch.seen[q as usize] != stamp {
                        scratch.seen[q as usize] = stamp;
                        out.push(q);
                    }
                }
            }
        }
        out
    }

    /// Enumerates connected supports rooted at `root` (its smallest id)
    /// whose total size is at most `cap`, calling `f` with each support.
    fn supports_from(&self, root: u32, cap: usize, scratch: &mut Scratch, f: &mut impl FnMut(&[u32])) {
        let root_len = self.len_of(root);
        if root_len > cap {
            return;
        }
        let budget = cap - root_len;
        let mut sub = vec![root];
        let ext = self.neighbors(root, root, budget, scratch);
        for &q in &ext {
            scratch.blocked[q as usize] += 1;
        }
        self.extend(budget, root, &mut sub, ext.clone(), scratch, f);
        for &q in &ext {
            scratch.blocked[q as usize] -= 1;
        }
    }

    fn extend(
        &self,
        budget: usize,
        root: u32,
        sub: &mut Vec<u32>,
        mut ext: Vec<u32>,
        scratch: &mut Scratch,
        f: &mut impl FnMut(&[u32]),
    ) {
        f(sub);
        while let Some(w) = ext.pop() {
            let wl = self.len_of(w);
            if wl > budget {
                continue;
            }
            let rem = budget - wl;
            sub.push(w);
            if rem == 0 {
                f(sub);
                sub.pop();
                continue;
            }
            let fresh: Vec<u32> = self
                .neighbors(w, root, rem, scratch)
                .into_iter()
                .filter(|&q| scratch.blocked[q as usize] == 0 && !sub.contains(&q))
                .collect();
            let mut next: Vec<u32> = ext.iter().copied().filter(|&q| self.len_of(q) <= rem).collect();
            next.extend_from_slice(&fresh);
            for &q in &fresh {
                scratch.blocked[q as usize] += 1;
            }
            self.extend(rem, root, sub, next, scratch, f);
            for &q in &fresh {
                scratch.blocked[q as usize] -= 1;
            }
            sub.pop();
        }
    }

    fn support_graph(&self, support: &[u32]) -> Vec<u32> {
        (0..support.len())
            .map(|i| {
                (0..support.len())
                    .filter(|&j| {
                        j != i
                            && !self.polymers[support[i] as usize].compatible(&self.polymers[support[j] as usize])
                    })
                    .fold(0u32, |m, j| m | 1 << j)
            })
            .collect()
    }

    fn accumulate(&self, support: &[u32], cap: usize, acc: &mut Accumulator) {
        let sizes: Vec<usize> = support.iter().map(|&p| self.len_of(p)).collect();
        let adj = self.support_graph(support);
        for_each_multiplicity(&sizes, cap, &mut |ms| {
            let g = expanded_graph(&adj, ms);
            let scaled_ursell = acc.ursell_scaled(&g) as i128;
            if scaled_ursell == 0 {
                return;
            }
            let denom: i128 = ms.iter().map(|&m| (1..=m as i128).product::<i128>()).product();
            let exponent: i64 = support.iter().zip(ms).map(|(&p, &m)| self.exponents[p as usize] * m as i64).sum();
            let size: usize = sizes.iter().zip(ms).map(|(s, m)| s * m).sum();
            acc.add(size, exponent, scaled_ursell * (SCALE / denom), multinomial(ms));
        });
    }
}

/// Exact `Σ_{‖Γ‖ = k} w(Γ)` and `Σ |w(Γ)|` for every `k <= cap`.
///
/// Supports (sets of distinct polymers with connected incompatibility graph)
/// are enumerated once each; every support contributes all of its orderings
/// and multiplicities at once. Polymers of exactly `cap` vertices can only
/// form single-polymer clusters and are streamed instead of indexed.
pub fn cluster_sums(model: &PolymerModel, cap: usize) -> Result<ClusterSums> {
    if cap == 0 {
        return Ok(ClusterSums { by_size: vec![BigRational::zero()], abs_by_size: vec![BigRational::zero()], counts: vec![0] });
    }
    if cap > URSELL_MAX_VERTICES {
        return Err(refused!("cluster size cap {cap} exceeds {URSELL_MAX_VERTICES}"));
    }
    let index = PolymerIndex::new(model, cap - 1);
    let roots: Vec<u32> = (0..index.polymers.len() as u32).collect();
    let chunk = roots.len().div_ceil(rayon::current_num_threads() * 8).max(1);
    let acc = roots
        .par_chunks(chunk)
        .map(|chunk| {
            let mut acc = Accumulator::default();
            let mut scratch = Scratch::new(index.polymers.len());
            for &r in chunk {
                index.supports_from(r, cap, &mut scratch, &mut |s| index.accumulate(s, cap, &mut acc));
            }
            acc
        })
        .reduce(Accumulator::default, Accumulator::merge);

    let verts: Vec<u32> = (0..model.vertices.len() as u32).collect();
    let chunk = verts.len().div_ceil(rayon::current_num_threads() * 8).max(1);
    let top = verts
        .par_chunks(chunk)
        .map(|chunk| {
            let mut acc = Accumulator::default();
            for &root in chunk {
                connected_sets(&model.link, root, cap, |u| u > root, &mut |s| {
                    if s.len() == cap {
                        let p = model.polymer(s);
                        acc.add(cap, model.weight_exponent(&p), SCALE, 1);
                    }
                });
            }
            acc
        })
        .reduce(Accumulator::default, Accumulator::merge);
    Ok(acc.merge(top).finish(cap))
}

/// `Σ_{‖Γ‖ = k} w(Γ) ‖Γ‖^m`.
pub fn cluster_sum(model: &PolymerModel, k: usize, m: u32) -> Result<BigRational> {
    Ok(cluster_sums(model, k)?.moment(k, m))
}

fn distinct_permutations(items: &[usize]) -> Vec<Vec<usize>> {
    let mut sorted = items.to_vec();
    sorted.sort_unstable();
    let mut out = vec![sorted.clone()];
    // Next lexicographic permutation until exhausted.
    loop {
        let Some(i) = (0..sorted.len().saturating_sub(1)).rev().find(|&i| sorted[i] < sorted[i + 1]) else {
            break;
        };
        let j = (i + 1..sorted.len()).rev().find(|&j| sorted[j] > sorted[i]).expect("pivot has a successor");
        sorted.swap(i, j);
        sorted[i + 1..].reverse();
        out.push(sorted.clone());
    }
    out
}

/// Lists every cluster of total size at most `cap` as an explicit ordered
/// sequence. `polymers` receives the polymer list the clusters index into.
pub fn enumerate_clusters(model: &PolymerModel, cap: usize, limit: usize) -> Result<(Vec<Polymer>, Vec<Cluster>)> {
    if cap > URSELL_MAX_VERTICES {
        return Err(refused!("cluster size cap {cap} exceeds {URSELL_MAX_VERTICES}"));
    }
    let index = PolymerIndex::new(model, cap);
    let mut clusters = Vec::new();
    let mut cache = Accumulator::default();
    let mut scratch = Scratch::new(index.polymers.len());
    for root in 0..index.polymers.len() as u32 {
        let mut supports = Vec::new();
        index.supports_from(root, cap, &mut scratch, &mut |s| supports.push(s.to_vec()));
        for support in supports {
            let sizes: Vec<usize> = support.iter().map(|&p| index.polymers[p as usize].len()).collect();
            let mut err = None;
            for_each_multiplicity(&sizes, cap, &mut |ms| {
                let items: Vec<usize> =
                    support.iter().zip(ms).flat_map(|(&p, &m)| std::iter::repeat(p as usize).take(m)).collect();
                for seq in distinct_permutations(&items) {
                    if clusters.len() >= limit {
                        err = Some(refused!("more than {limit} clusters"));
                        return;
                    }
                    let k = seq.len();
                    let graph: Vec<u32> = (0..k)
                        .map(|a| {
                            (0..k)
                                .filter(|&b| {
                                    b != a && !index.polymers[seq[a]].compatible(&index.polymers[seq[b]])
                                })
                                .fold(0u32, |m, b| m | 1 << b)
                        })
                        .collect();
                    let phi = BigRational::new(BigInt::from(cache.ursell_scaled(&graph)), BigInt::from(factorial(k)));
                    let exponent: i64 = seq.iter().map(|&p| index.exponents[p]).sum();
                    let size = seq.iter().map(|&p| index.polymers[p].len()).sum();
                    clusters.push(Cluster { polymers: seq, graph, size, weight: phi * pow2(exponent) });
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
    }
    Ok((index.polymers, clusters))
}

/// Default cap on the number of polymers for exhaustive configuration sums.
pub const CONFIG_POLYMER_LIMIT: usize = 1 << 14;

/// Sums `Π_{γ ∈ Λ} w(γ) z^{|γ|}` over all polymer configurations `Λ`,
/// grouped by total size. Coefficient `j` collects configurations covering
/// `j` vertices.
pub fn configuration_polynomial(model: &PolymerModel) -> Result<Vec<BigRational>> {
    if model.vertices.len() > 24 {
        return Err(refused!("{} polymer vertices is too many for exhaustive configurations", model.vertices.len()));
    }
    let polymers = model.all_polymers(model.vertices.len());
    if polymers.len() > CONFIG_POLYMER_LIMIT {
        return Err(refused!("{} polymers exceeds the configuration limit {CONFIG_POLYMER_LIMIT}", polymers.len()));
    }
    let exps: Vec<i64> = polymers.iter().map(|p| model.weight_exponent(p)).collect();
    // Exponent-keyed integer counts per total size.
    let mut counts: BTreeMap<(usize, i64), u64> = BTreeMap::new();
    let mut used = vec![false; model.middle_size()];
    fn rec(
        polymers: &[Polymer],
        exps: &[i64],
        start: usize,
        used: &mut [bool],
        size: usize,
        exp: i64,
        counts: &mut BTreeMap<(usize, i64), u64>,
    ) {
        *counts.entry((size, exp)).or_insert(0) += 1;
        for i in start..polymers.len() {
            let p = &polymers[i];
            if p.footprint.iter().any(|&b| used[b as usize]) {
                continue;
            }
            p.footprint.iter().for_each(|&b| used[b as usize] = true);
            rec(polymers, exps, i + 1, used, size + p.len(), exp + exps[i], counts);
            p.footprint.iter().for_each(|&b| used[b as usize] = false);
        }
    }
    rec(&polymers, &exps, 0, &mut used, 0, 0, &mut counts);
    let mut out = vec![BigRational::zero(); model.vertices.len() + 1];
    for ((size, e), c) in counts {
        out[size] += BigRational::from_integer(BigInt::from(c)) * pow2(e);
    }
    while out.len() > 1 && out.last().is_some_and(|c| c.is_zero()) {
        out.pop();
    }
    Ok(out)
}

/// Exact partition function `Ξ`: the configuration polynomial at `z = 1`.
pub fn partition_function_exact(model: &PolymerModel) -> Result<BigRational> {
    Ok(configuration_polynomial(model)?.into_iter().sum())
}

/// Tilted partition function `Ξ̃(z)` of the central model as polynomial
/// coefficients in `z`.
pub fn defect_pgf(n: usize) -> Result<Vec<BigRational>> {
    if n > 3 {
        return Err(refused!("exact tilted partition function supports n <= 3, got {n}"));
    }
    configuration_polynomial(&PolymerModel::central(n)?)
}

/// Evaluates a polynomial with rational coefficients.
pub fn eval_poly(coeffs: &[BigRational], z: &BigRational) -> BigRational {
    coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * z + c)
}

/// Derivative coefficients.
pub fn derivative(coeffs: &[BigRational]) -> Vec<BigRational> {
    coeffs.iter().enumerate().skip(1).map(|(i, c)| c * BigRational::from_integer(BigInt::from(i))).collect()
}

/// Whether every weight is positive and `0 < w'(A) <= w(A)` across models.
pub fn weight_dominates(primed: &PolymerModel, plain: &PolymerModel, p: &Polymer) -> bool {
    let (a, b) = (primed.weight(p), plain.weight(p));
    a.is_positive() && a <= b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn ursell_values() {
        assert_eq!(ursell(&[0]).unwrap(), q(1, 1));
        assert_eq!(ursell(&graph_from_edges(2, &[(0, 1)])).unwrap(), q(-1, 2));
        assert_eq!(ursell(&graph_from_edges(3, &[(0, 1), (1, 2), (0, 2)])).unwrap(), q(1, 3));
        assert_eq!(ursell(&graph_from_edges(3, &[(0, 1), (1, 2)])).unwrap(), q(1, 6));
        assert_eq!(ursell(&graph_from_edges(3, &[(0, 1)])).unwrap(), q(0, 1));
        assert!(ursell(&[0; 8]).is_err());
        // K_k gives (-1)^{k-1}/k.
        for k in 1..=6usize {
            let edges = edge_pairs(k);
            let sign = if k % 2 == 1 { 1 } else { -1 };
            assert_eq!(ursell(&graph_from_edges(k, &edges)).unwrap(), q(sign, k as i64));
        }
    }

    #[test]
    fn small_central_model() {
        let m = PolymerModel::central(2).unwrap();
        assert_eq!(m.middle_size(), 3);
        assert_eq!(partition_function_exact(&m).unwrap(), q(9, 4));
        let pgf = defect_pgf(2).unwrap();
        assert_eq!(pgf, vec![q(1, 1), q(1, 1), q(1, 4)]);
    }

    #[test]
    fn anchored_polymers() {
        let m = PolymerModel::three_layer(2, &[], false).unwrap();
        let a = m.vertex_id(&Point::new(3, vec![0, 1]).unwrap()).unwrap();
        let ps = m.enumerate_polymers(a, 2, 1e9).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(m.enumerate_polymers(a, 1, 1e9).unwrap().len(), 1);
        assert!(m.enumerate_polymers(a, 9, 10.0).is_err());
    }

    #[test]
    fn three_layer_small() {
        let m = PolymerModel::three_layer(2, &[], false).unwrap();
        assert_eq!(partition_function_exact(&m).unwrap(), q(7, 4));
    }

    #[test]
    fn size_two_sum_small() {
        let m = PolymerModel::central(2).unwrap();
        let s = cluster_sums(&m, 2).unwrap();
        assert_eq!(s.by_size[1], q(1, 1));
        assert_eq!(s.by_size[2], q(-1, 4));
    }

    #[test]
    fn permutations() {
        assert_eq!(distinct_permutations(&[1, 1, 2]).len(), 3);
        assert_eq!(distinct_permutations(&[1, 2, 3]).len(), 6);
        assert_eq!(multinomial(&[2, 1]), 3);
    }
}
