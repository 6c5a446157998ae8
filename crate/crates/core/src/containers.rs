//! Per-instance container constructions on a bipartite graph `X ∪ Y`
//! (usually two consecutive layers of `[3]^n`, the lower one as `X`): the
//! irregularity parameter κ, greedy Lovász–Stein covers, φ-approximations
//! built from a sampled `T₀`, and the deterministic ψ-approximation
//! procedure. Every output is checked against its defining conditions.
//!
//! Sets are sorted `u32` index lists into `X` or `Y`; the total order used
//! by the ψ procedure is the index order, which is the lexicographic order
//! of the points.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::poset::{LayerSlice, Point};

/// A bipartite graph with measured degree parameters.
#[derive(Debug, Clone)]
pub struct BipartiteInstance {
    x_points: Vec<Point>,
    y_points: Vec<Point>,
    adj_x: Vec<Vec<u32>>,
    adj_y: Vec<Vec<u32>>,
    min_degree: usize,
    d: usize,
}

/// Degree census of a [`BipartiteInstance`].
#[derive(Debug, Clone, Serialize)]
pub struct DegreeAudit {
    pub x_len: usize,
    pub y_len: usize,
    pub min_degree_x: usize,
    pub max_degree_x: usize,
    pub min_degree_y: usize,
    pub max_degree_y: usize,
    /// Largest degree.
    pub d: usize,
    /// Smallest degree divided by `d`.
    pub delta: f64,
    /// Largest common neighbourhood of two distinct vertices on one side.
    pub codegree: usize,
    /// `d(v) >= d(w)` on every edge `v ∈ X, w ∈ Y`.
    pub dominance: bool,
    pub dominance_failures: usize,
}

impl BipartiteInstance {
    /// Layers `lower` (as `X`) and `lower + 1` (as `Y`) of `[t]^n`.
    pub fn layers(t: usize, n: usize, lower: usize) -> Result<Self> {
        let slice = LayerSlice::new(t, n, lower, lower + 1)?;
        let xr = slice.layer_range(lower);
        let yr = slice.layer_range(lower + 1);
        let adj_x = xr.clone().map(|i| slice.up(i).iter().map(|&j| j - yr.start as u32).collect()).collect();
        let x_points = xr.map(|i| slice.point(i).clone()).collect();
        let y_points: Vec<Point> = yr.map(|i| slice.point(i).clone()).collect();
        let y_len = y_points.len();
        Ok(Self::build(x_points, y_points, adj_x, y_len))
    }

    /// A bipartite graph from `X`-side adjacency lists; points are not
    /// attached.
    pub fn from_adjacency(adj_x: Vec<Vec<u32>>, y_len: usize) -> Result<Self> {
        if adj_x.iter().flatten().any(|&y| y as usize >= y_len) {
            return Err(domain!("neighbour index outside Y"));
        }
        Ok(Self::build(Vec::new(), Vec::new(), adj_x, y_len))
    }

    fn build(x_points: Vec<Point>, y_points: Vec<Point>, mut adj_x: Vec<Vec<u32>>, y_len: usize) -> Self {
        let mut adj_y = vec![Vec::new(); y_len];
        for (x, nb) in adj_x.iter_mut().enumerate() {
            nb.sort_unstable();
            nb.dedup();
            for &y in nb.iter() {
                adj_y[y as usize].push(x as u32);
            }
        }
        let mut inst = BipartiteInstance { x_points, y_points, adj_x, adj_y, min_degree: 0, d: 0 };
        inst.refresh_degrees();
        inst
    }

    fn refresh_degrees(&mut self) {
        let degs = self.adj_x.iter().chain(&self.adj_y).map(Vec::len);
        self.min_degree = degs.clone().min().unwrap_or(0);
        self.d = degs.max().unwrap_or(0);
    }

    pub fn x_len(&self) -> usize {
        self.adj_x.len()
    }

    pub fn y_len(&self) -> usize {
        self.adj_y.len()
    }

    pub fn x_point(&self, i: u32) -> Option<&Point> {
        self.x_points.get(i as usize)
    }

    pub fn y_point(&self, i: u32) -> Option<&Point> {
        self.y_points.get(i as usize)
    }

    pub fn neighbors_x(&self, x: u32) -> &[u32] {
        &self.adj_x[x as usize]
    }

    pub fn neighbors_y(&self, y: u32) -> &[u32] {
        &self.adj_y[y as usize]
    }

    /// Largest degree `d`.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Smallest degree, `δd`.
    pub fn min_degree(&self) -> usize {
        self.min_degree
    }

    pub fn audit(&self) -> DegreeAudit {
        let stats = |adj: &[Vec<u32>]| {
            (adj.iter().map(Vec::len).min().unwrap_or(0), adj.iter().map(Vec::len).max().unwrap_or(0))
        };
        let (min_x, max_x) = stats(&self.adj_x);
        let (min_y, max_y) = stats(&self.adj_y);
        let dominance_failures = self
            .adj_x
            .iter()
            .map(|nb| nb.iter().filter(|&&y| self.adj_y[y as usize].len() > nb.len()).count())
            .sum();
        DegreeAudit {
            x_len: self.x_len(),
            y_len: self.y_len(),
            min_degree_x: min_x,
            max_degree_x: max_x,
            min_degree_y: min_y,
            max_degree_y: max_y,
            d: self.d,
            delta: if self.d == 0 { 0.0 } else { self.min_degree as f64 / self.d as f64 },
            codegree: codegree(&self.adj_y).max(codegree(&self.adj_x)),
            dominance: dominance_failures == 0,
            dominance_failures,
        }
    }

    /// `N(A) ⊆ Y`.
    pub fn neighborhood(&self, a: &[u32]) -> Vec<u32> {
        let mut out: Vec<u32> = a.iter().flat_map(|&x| self.adj_x[x as usize].iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `N(B) ⊆ X` for `B ⊆ Y`.
    pub fn neighborhood_y(&self, b: &[u32]) -> Vec<u32> {
        let mut out: Vec<u32> = b.iter().flat_map(|&y| self.adj_y[y as usize].iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `[A] = {v ∈ X : N(v) ⊆ N(A)}`.
    pub fn closure(&self, a: &[u32]) -> Vec<u32> {
        let g = self.mask_y(&self.neighborhood(a));
        let cands = self.neighborhood_y(&self.neighborhood(a));
        cands.into_iter().filter(|&v| self.adj_x[v as usize].iter().all(|&y| g[y as usize])).collect()
    }

    /// Whether `A ⊆ X` is connected when vertices sharing a neighbour are
    /// joined.
    pub fn is_two_linked(&self, a: &[u32]) -> bool {
        if a.is_empty() {
            return false;
        }
        let inside = self.mask_x(a);
        let mut seen = vec![false; self.x_len()];
        let mut stack = vec![a[0]];
        seen[a[0] as usize] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &y in &self.adj_x[v as usize] {
                for &u in &self.adj_y[y as usize] {
                    if inside[u as usize] && !seen[u as usize] {
                        seen[u as usize] = true;
                        count += 1;
                        stack.push(u);
                    }
                }
            }
        }
        count == a.len()
    }

    /// A random 2-linked subset of `X` with `size` vertices (fewer if the
    /// component of the start vertex is smaller), grown from a uniform start
    /// by adding uniform vertices at distance two.
    pub fn random_two_linked(&self, size: usize, rng: &mut impl Rng) -> Vec<u32> {
        if self.x_len() == 0 || size == 0 {
            return Vec::new();
        }
        let mut inside = vec![false; self.x_len()];
        let start = rng.gen_range(0..self.x_len() as u32);
        inside[start as usize] = true;
        let mut set = vec![start];
        while set.len() < size {
            let mut frontier: Vec<u32> = set
                .iter()
                .flat_map(|&v| self.adj_x[v as usize].iter())
                .flat_map(|&y| self.adj_y[y as usize].iter().copied())
                .filter(|&u| !inside[u as usize])
                .collect();
            frontier.sort_unstable();
            frontier.dedup();
            if frontier.is_empty() {
                break;
            }
            let pick = frontier[rng.gen_range(0..frontier.len())];
            inside[pick as usize] = true;
            set.push(pick);
        }
        set.sort_unstable();
        set
    }

    fn mask_x(&self, a: &[u32]) -> Vec<bool> {
        mask(self.x_len(), a)
    }

    fn mask_y(&self, b: &[u32]) -> Vec<bool> {
        mask(self.y_len(), b)
    }

    fn degree_into(&self, x: u32, b: &[bool]) -> usize {
        self.adj_x[x as usize].iter().filter(|&&y| b[y as usize]).count()
    }

    fn degree_into_x(&self, y: u32, a: &[bool]) -> usize {
        self.adj_y[y as usize].iter().filter(|&&x| a[x as usize]).count()
    }
}

fn mask(len: usize, idx: &[u32]) -> Vec<bool> {
    let mut m = vec![false; len];
    for &i in idx {
        m[i as usize] = true;
    }
    m
}

fn from_mask(m: &[bool]) -> Vec<u32> {
    m.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u32).collect()
}

fn codegree(adj_other: &[Vec<u32>]) -> usize {
    let mut pairs: HashMap<(u32, u32), usize> = HashMap::new();
    for nb in adj_other {
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                *pairs.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
    }
    pairs.into_values().max().unwrap_or(0)
}

/// Degree audit of layers `lower`, `lower + 1` of `[t]^n`.
pub fn degree_audit(t: usize, n: usize, lower: usize) -> Result<(BipartiteInstance, DegreeAudit)> {
    let inst = BipartiteInstance::layers(t, n, lower)?;
    let audit = inst.audit();
    Ok((inst, audit))
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaReport {
    pub size: usize,
    /// `a = |[A]|`.
    pub closure: usize,
    /// `g = |N(A)|`.
    pub neighborhood: usize,
    pub kappa: usize,
    /// `d (g - a)`.
    pub bound: usize,
    pub holds: bool,
}

/// `κ(A) = |∇(N(A), X ∖ [A])|`.
pub fn kappa(inst: &BipartiteInstance, a: &[u32]) -> usize {
    let closed = inst.mask_x(&inst.closure(a));
    inst.neighborhood(a).iter().map(|&y| inst.adj_y[y as usize].iter().filter(|&&x| !closed[x as usize]).count()).sum()
}

/// κ together with the bound `κ <= d(g - a)`.
pub fn kappa_report(inst: &BipartiteInstance, a: &[u32]) -> KappaReport {
    let closure = inst.closure(a).len();
    let neighborhood = inst.neighborhood(a).len();
    let k = kappa(inst, a);
    let bound = inst.d() * neighborhood.saturating_sub(closure);
    KappaReport { size: a.len(), closure, neighborhood, kappa: k, bound, holds: k <= bound && closure <= neighborhood }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverReport {
    pub cover: Vec<u32>,
    pub bound: f64,
    pub within_bound: bool,
}

/// Greedy cover of `U` by `W`: repeatedly take the `w` covering the most
/// uncovered vertices (smallest index on ties). `adj_u[u]` lists the
/// neighbours of `u` in `W = 0..w_len`; `x` must not exceed any degree in
/// `U` and `y` must bound the `U`-degree of every `w`. The result is
/// compared with `(|W|/x)(1 + ln y)`.
pub fn lovasz_stein_cover(adj_u: &[Vec<u32>], w_len: usize, x: usize, y: usize) -> Result<CoverReport> {
    if adj_u.is_empty() {
        return Ok(CoverReport { cover: Vec::new(), bound: 0.0, within_bound: true });
    }
    let mut adj_w = vec![Vec::new(); w_len];
    for (u, nb) in adj_u.iter().enumerate() {
        if nb.is_empty() {
            return Err(domain!("vertex {u} of U has no neighbour and cannot be covered"));
        }
        if nb.len() < x {
            return Err(domain!("vertex {u} of U has degree {} below x = {x}", nb.len()));
        }
        for &w in nb {
            if w as usize >= w_len {
                return Err(domain!("neighbour {w} outside W"));
            }
            adj_w[w as usize].push(u as u32);
        }
    }
    if let Some(w) = adj_w.iter().position(|nb| nb.len() > y) {
        return Err(domain!("vertex {w} of W has degree {} above y = {y}", adj_w[w].len()));
    }
    let mut covered = vec![false; adj_u.len()];
    let mut gain: Vec<usize> = adj_w.iter().map(Vec::len).collect();
    let mut left = adj_u.len();
    let mut cover = Vec::new();
    while left > 0 {
        let (best, _) = gain.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).expect("W nonempty");
        cover.push(best as u32);
        for &u in &adj_w[best] {
            if !std::mem::replace(&mut covered[u as usize], true) {
                left -= 1;
                for &w in &adj_u[u as usize] {
                    gain[w as usize] -= 1;
                }
            }
        }
    }
    cover.sort_unstable();
    let bound = w_len as f64 / x.max(1) as f64 * (1.0 + (y.max(1) as f64).ln());
    Ok(CoverReport { within_bound: cover.len() as f64 <= bound, cover, bound })
}

/// Parameters of the φ-approximation construction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhiParams {
    pub phi: usize,
    pub seed: u64,
    pub retry_budget: usize,
    /// Replaces the sampling probability `10Δ ln d / (φ δ d)` when set.
    pub p_override: Option<f64>,
}

impl PhiParams {
    pub fn new(phi: usize, seed: u64) -> Self {
        PhiParams { phi, seed, retry_budget: 1000, p_override: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiApprox {
    pub f_prime: Vec<u32>,
    pub phi: usize,
    /// Sampling probability actually used (capped at 1).
    pub p: f64,
    pub attempts: usize,
    /// Failures of `|T₀| <= 3gp`, `|∇(T₀, X∖[A])| <= 3κp` and
    /// `|G^φ ∖ N(N_[A](T₀))| <= 3g/d^10` over all attempts.
    pub condition_failures: [usize; 3],
    pub t0: usize,
    pub t0_prime: usize,
    pub t1: usize,
    pub cover_within_bound: bool,
    /// `G^φ ⊆ F'`.
    pub contains_g_phi: bool,
    /// `F' ⊆ G`.
    pub inside_g: bool,
    /// `N(F') ⊇ [A]`.
    pub covers_closure: bool,
}

impl PhiApprox {
    pub fn valid(&self) -> bool {
        self.contains_g_phi && self.inside_g && self.covers_closure
    }
}

/// `G^φ = {v ∈ N(A) : d_[A](v) > φ}`.
pub fn g_phi(inst: &BipartiteInstance, a: &[u32], phi: usize) -> Vec<u32> {
    let closed = inst.mask_x(&inst.closure(a));
    inst.neighborhood(a).into_iter().filter(|&v| inst.degree_into_x(v, &closed) > phi).collect()
}

/// φ-approximation by the sampling construction: draw `T₀ ⊆ G` with
/// probability `p` per vertex until the three size conditions hold, set
/// `L = N(N_[A](T₀)) ∪ (G^φ ∖ N(N_[A](T₀)))`, cover `[A] ∖ N(L)` from
/// `G ∖ L` greedily and return `F' = L ∪ T₁`.
pub fn phi_approximation(inst: &BipartiteInstance, a: &[u32], params: PhiParams) -> Result<PhiApprox> {
    let phi = params.phi;
    let dd = inst.min_degree();
    if phi < 1 || phi + 1 > dd {
        return Err(domain!("φ = {phi} outside [1, δd - 1] = [1, {}]", dd.saturating_sub(1)));
    }
    let closure = inst.closure(a);
    let closed = inst.mask_x(&closure);
    let g = inst.neighborhood(a);
    let gphi = g_phi(inst, a, phi);
    let k = kappa(inst, a);
    let d = inst.d() as f64;
    let codeg = inst.audit().codegree.max(1) as f64;
    let p = params.p_override.unwrap_or(10.0 * codeg * d.ln() / (phi as f64 * dd as f64)).min(1.0);
    let gl = g.len() as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut failures = [0usize; 3];
    let mut chosen = None;
    let mut attempts = 0;
    while attempts < params.retry_budget {
        attempts += 1;
        let t0: Vec<u32> = g.iter().copied().filter(|_| rng.gen_bool(p)).collect();
        let reach = inst.neighborhood(&inst.neighborhood_y(&t0).into_iter().filter(|&x| closed[x as usize]).collect::<Vec<_>>());
        let reach_mask = inst.mask_y(&reach);
        let escaping: usize = t0.iter().map(|&y| inst.adj_y[y as usize].iter().filter(|&&x| !closed[x as usize]).count()).sum();
        let missed: Vec<u32> = gphi.iter().copied().filter(|&v| !reach_mask[v as usize]).collect();
        let ok = [
            t0.len() as f64 <= 3.0 * gl * p,
            escaping as f64 <= 3.0 * k as f64 * p,
            missed.len() as f64 <= 3.0 * gl / d.powi(10),
        ];
        for (f, &o) in failures.iter_mut().zip(&ok) {
            *f += !o as usize;
        }
        if ok.iter().all(|&o| o) {
            chosen = Some((t0, reach, missed));
            break;
        }
    }
    let Some((t0, reach, missed)) = chosen else {
        return Err(Error::Failed(format!(
            "no admissible T₀ in {attempts} attempts; condition failures {failures:?}"
        )));
    };
    let mut l = reach;
    l.extend(&missed);
    l.sort_unstable();
    l.dedup();
    let l_mask = inst.mask_y(&l);
    let near_l = inst.mask_x(&inst.neighborhood_y(&l));
    let uncovered: Vec<u32> = closure.iter().copied().filter(|&u| !near_l[u as usize]).collect();
    let w: Vec<u32> = g.iter().copied().filter(|&v| !l_mask[v as usize]).collect();
    let w_pos: HashMap<u32, u32> = w.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
    let adj_u: Vec<Vec<u32>> = uncovered
        .iter()
        .map(|&u| inst.adj_x[u as usize].iter().filter_map(|y| w_pos.get(y).copied()).collect())
        .collect();
    let x_deg = adj_u.iter().map(Vec::len).min().unwrap_or(0);
    let mut y_deg = vec![0usize; w.len()];
    for nb in &adj_u {
        for &j in nb {
            y_deg[j as usize] += 1;
        }
    }
    let cover = lovasz_stein_cover(&adj_u, w.len(), x_deg, y_deg.into_iter().max().unwrap_or(0))?;
    let t1: Vec<u32> = cover.cover.iter().map(|&j| w[j as usize]).collect();
    let mut f_prime = l;
    f_prime.extend(&t1);
    f_prime.sort_unstable();

    let fm = inst.mask_y(&f_prime);
    let gm = inst.mask_y(&g);
    let reached = inst.mask_x(&inst.neighborhood_y(&f_prime));
    Ok(PhiApprox {
        phi,
        p,
        attempts,
        condition_failures: failures,
        t0: t0.len(),
        t0_prime: missed.len(),
        t1: t1.len(),
        cover_within_bound: cover.within_bound,
        contains_g_phi: gphi.iter().all(|&v| fm[v as usize]),
        inside_g: f_prime.iter().all(|&v| gm[v as usize]),
        covers_closure: closure.iter().all(|&u| reached[u as usize]),
        f_prime,
    })
}

/// Output of the ψ procedure with its checks.
#[derive(Debug, Clone, Serialize)]
pub struct ApproxPair {
    pub s: Vec<u32>,
    pub f: Vec<u32>,
    pub psi: usize,
    /// Step 1 and step 2 iteration counts.
    pub steps: [usize; 2],
    /// `F ⊆ G` and `S ⊇ [A]`.
    pub containment: bool,
    /// `d_F(u) >= d(u) - ψ` for `u ∈ S`.
    pub s_degree: bool,
    /// `d_{X∖S}(v) >= d(v) - ψ` for `v ∈ Y ∖ F`.
    pub complement_degree: bool,
    pub kappa: usize,
    /// `|S ∖ [A]|`, `|∇(S ∖ [A], F)|` and `|G ∖ F|`.
    pub excess: usize,
    pub excess_edges: usize,
    pub missing: usize,
    /// `(s - a)(δd - ψ) <= |∇(S∖[A], F)| <= κ` and `|G∖F|(δd - ψ) <= κ`.
    pub excess_bounds: bool,
    /// `|∇(S, Y∖F)|` and its bound `min(ψ s, ψ|S∖[A]| + d|G∖F|)`.
    pub boundary_edges: usize,
    pub boundary_bound: usize,
    /// `s δd <= f δd + |∇(S, Y∖F)|`.
    pub size_bound: bool,
}

impl ApproxPair {
    pub fn valid(&self) -> bool {
        self.containment && self.s_degree && self.complement_degree
    }

    pub fn consequences_hold(&self) -> bool {
        self.excess_bounds && self.boundary_edges <= self.boundary_bound && self.size_bound
    }
}

/// The two-step ψ procedure. Step 1 adds `N(u)` to `F'` for the smallest
/// `u ∈ [A]` with `d_{G∖F'}(u) > ψ` until none is left; `S''` is then every
/// `u` with `d_{F''}(u) >= d(u) - ψ`. Step 2 removes `N(v)` from `S''` for
/// the smallest `v ∈ Y ∖ G` with `d_{S''}(v) > ψ`. Finally
/// `F = F'' ∪ {v : d_S(v) > ψ}`.
pub fn psi_approximation(inst: &BipartiteInstance, a: &[u32], f_prime: &[u32], psi: usize) -> Result<ApproxPair> {
    let dd = inst.min_degree();
    if psi < 1 || psi + 1 > dd {
        return Err(domain!("ψ = {psi} outside [1, δd - 1] = [1, {}]", dd.saturating_sub(1)));
    }
    let closure = inst.closure(a);
    let closed = inst.mask_x(&closure);
    let g = inst.neighborhood(a);
    let gm = inst.mask_y(&g);
    let mut fm = inst.mask_y(f_prime);
    let mut steps = [0usize; 2];

    loop {
        let not_f: Vec<bool> = (0..inst.y_len()).map(|v| gm[v] && !fm[v]).collect();
        let Some(&u) = closure.iter().find(|&&u| inst.degree_into(u, &not_f) > psi) else { break };
        for &y in &inst.adj_x[u as usize] {
            fm[y as usize] = true;
        }
        steps[0] += 1;
    }
    let mut sm: Vec<bool> = (0..inst.x_len() as u32)
        .map(|u| inst.degree_into(u, &fm) + psi >= inst.adj_x[u as usize].len())
        .collect();
    loop {
        let Some(v) = (0..inst.y_len() as u32).find(|&v| !gm[v as usize] && inst.degree_into_x(v, &sm) > psi) else {
            break;
        };
        for &x in &inst.adj_y[v as usize] {
            sm[x as usize] = false;
        }
        steps[1] += 1;
    }
    for v in 0..inst.y_len() as u32 {
        if inst.degree_into_x(v, &sm) > psi {
            fm[v as usize] = true;
        }
    }
    let s = from_mask(&sm);
    let f = from_mask(&fm);

    let containment = f.iter().all(|&v| gm[v as usize]) && closure.iter().all(|&u| sm[u as usize]);
    let s_degree = s.iter().all(|&u| inst.degree_into(u, &fm) + psi >= inst.adj_x[u as usize].len());
    let not_s: Vec<bool> = sm.iter().map(|&b| !b).collect();
    let complement_degree = (0..inst.y_len() as u32)
        .filter(|&v| !fm[v as usize])
        .all(|v| inst.degree_into_x(v, &not_s) + psi >= inst.adj_y[v as usize].len());

    let k = kappa(inst, a);
    let excess_set: Vec<u32> = s.iter().copied().filter(|&u| !closed[u as usize]).collect();
    let excess_edges: usize = excess_set.iter().map(|&u| inst.degree_into(u, &fm)).sum();
    let missing = g.iter().filter(|&&v| !fm[v as usize]).count();
    let slack = dd - psi;
    let excess_bounds = excess_set.len() * slack <= excess_edges && excess_edges <= k && missing * slack <= k;
    let not_f: Vec<bool> = fm.iter().map(|&b| !b).collect();
    let boundary_edges: usize = s.iter().map(|&u| inst.degree_into(u, &not_f)).sum();
    let boundary_bound = (psi * s.len()).min(psi * excess_set.len() + inst.d() * missing);
    let size_bound = s.len() * dd <= f.len() * dd + boundary_edges;

    Ok(ApproxPair {
        psi,
        steps,
        containment,
        s_degree,
        complement_degree,
        kappa: k,
        excess: excess_set.len(),
        excess_edges,
        missing,
        excess_bounds,
        boundary_edges,
        boundary_bound,
        size_bound,
        s,
        f,
    })
}

/// Default `φ = max(1, ⌊n/4⌋)` and `ψ = ⌈√n⌉`, both capped at `δd - 1`.
pub fn default_phi_psi(inst: &BipartiteInstance, n: usize) -> (usize, usize) {
    let cap = inst.min_degree().saturating_sub(1).max(1);
    let phi = (n / 4).max(1).min(cap);
    let psi = ((n as f64).sqrt().ceil() as usize).max(1).min(cap);
    (phi, psi)
}

/// Summary of seeded container trials on layers `n-1`, `n` of `[3]^n`.
#[derive(Debug, Clone, Serialize)]
pub struct ContainerTrials {
    pub n: usize,
    pub seed: u64,
    pub audit: DegreeAudit,
    pub phi: usize,
    pub psi: usize,
    pub kappa_sets: usize,
    pub kappa_failures: usize,
    pub runs: usize,
    pub phi_failures: usize,
    pub psi_failures: usize,
    pub cover_failures: usize,
    /// Mean number of `T₀` draws per φ-approximation.
    pub mean_draws: f64,
    /// Runs where feeding `F` back into the ψ procedure reproduced `(S, F)`.
    pub psi_fixed_points: usize,
}

impl ContainerTrials {
    pub fn pass(&self) -> bool {
        self.audit.codegree == 1
            && self.audit.dominance
            && self.kappa_failures == 0
            && self.phi_failures == 0
            && self.psi_failures == 0
            && self.cover_failures == 0
    }
}

/// Largest random 2-linked set drawn by [`container_trials`].
pub const TRIAL_MAX_SET: usize = 12;

/// Checks κ on `kappa_sets` random 2-linked sets, then runs `runs`
/// φ-approximations (every other one with `p = 1/2`) each followed by the
/// ψ procedure. Set sizes are uniform in `1..=12`.
pub fn container_trials(n: usize, kappa_sets: usize, runs: usize, seed: u64) -> Result<ContainerTrials> {
    if n < 2 {
        return Err(domain!("container trials need n >= 2, got {n}"));
    }
    let (inst, audit) = degree_audit(3, n, n - 1)?;
    let (phi, psi) = default_phi_psi(&inst, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
    let mut kappa_failures = 0;
    for _ in 0..kappa_sets {
        let size = rng.gen_range(1..=TRIAL_MAX_SET);
        let a = inst.random_two_linked(size, &mut rng);
        kappa_failures += !kappa_report(&inst, &a).holds as usize;
    }
    let (mut phi_failures, mut psi_failures, mut cover_failures, mut draws, mut fixed) = (0, 0, 0, 0, 0);
    for run in 0..runs as u64 {
        let size = rng.gen_range(1..=TRIAL_MAX_SET);
        let a = inst.random_two_linked(size, &mut rng);
        let mut params = PhiParams::new(phi, seed.wrapping_add(run));
        if run % 2 == 1 {
            params.p_override = Some(0.5);
        }
        let f = phi_approximation(&inst, &a, params)?;
        phi_failures += !f.valid() as usize;
        cover_failures += !f.cover_within_bound as usize;
        draws += f.attempts;
        let pair = psi_approximation(&inst, &a, &f.f_prime, psi)?;
        psi_failures += !(pair.valid() && pair.consequences_hold()) as usize;
        let again = psi_approximation(&inst, &a, &pair.f, psi)?;
        fixed += (again.s == pair.s && again.f == pair.f) as usize;
    }
    Ok(ContainerTrials {
        n,
        seed,
        audit,
        phi,
        psi,
        kappa_sets,
        kappa_failures,
        runs,
        phi_failures,
        psi_failures,
        cover_failures,
        mean_draws: if runs == 0 { 0.0 } else { draws as f64 / runs as f64 },
        psi_fixed_points: fixed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_small_layer_graph() {
        let inst = BipartiteInstance::layers(3, 2, 1).unwrap();
        // X = {(0,1),(1,0)}, Y = {(0,2),(1,1),(2,0)}.
        let a = [0u32];
        let r = kappa_report(&inst, &a);
        assert_eq!(r.neighborhood, 2);
        assert_eq!(r.closure, 1);
        // N(A) = {(0,2),(1,1)}; (1,1) also touches (1,0), which is outside [A].
        assert_eq!(r.kappa, 1);
        assert!(r.holds);
        let full = [0u32, 1];
        assert_eq!(kappa(&inst, &full), 0);
    }

    #[test]
    fn cover_examples() {
        let k33 = vec![vec![0, 1, 2]; 3];
        let r = lovasz_stein_cover(&k33, 3, 3, 3).unwrap();
        assert_eq!(r.cover.len(), 1);
        assert!(r.within_bound);
        assert!(lovasz_stein_cover(&[], 3, 1, 1).unwrap().cover.is_empty());
        assert!(lovasz_stein_cover(&[vec![]], 3, 0, 1).is_err());

        let inst = BipartiteInstance::layers(3, 3, 2).unwrap();
        let adj_u: Vec<Vec<u32>> = (0..inst.y_len() as u32).map(|y| inst.neighbors_y(y).to_vec()).collect();
        let x = adj_u.iter().map(Vec::len).min().unwrap();
        let y = (0..inst.x_len() as u32).map(|v| inst.neighbors_x(v).len()).max().unwrap();
        let r = lovasz_stein_cover(&adj_u, inst.x_len(), x, y).unwrap();
        assert!(r.within_bound);
        let hit = inst.neighborhood(&r.cover);
        assert_eq!(hit.len(), inst.y_len());
    }

    #[test]
    fn audit_middle_pair() {
        let (_, a) = degree_audit(3, 6, 5).unwrap();
        assert_eq!(a.codegree, 1);
        assert!(a.dominance);
        assert!(a.delta >= 0.5);
    }

    #[test]
    fn closed_set_phi_is_whole_neighbourhood() {
        let inst = BipartiteInstance::layers(3, 5, 4).unwrap();
        let all: Vec<u32> = (0..inst.x_len() as u32).collect();
        let r = phi_approximation(&inst, &all, PhiParams::new(1, 3)).unwrap();
        assert!(r.valid());
        assert_eq!(r.f_prime, inst.neighborhood(&all));
    }

    #[test]
    fn psi_on_empty_set() {
        let inst = BipartiteInstance::layers(3, 5, 4).unwrap();
        let r = psi_approximation(&inst, &[], &[], 2).unwrap();
        assert!(r.valid());
        assert!(r.f.is_empty());
    }

    #[test]
    fn random_sets_are_two_linked() {
        let inst = BipartiteInstance::layers(3, 5, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for size in 1..10 {
            let a = inst.random_two_linked(size, &mut rng);
            assert_eq!(a.len(), size);
            assert!(inst.is_two_linked(&a));
        }
    }

    #[test]
    fn sampled_t0_retries() {
        let inst = BipartiteInstance::layers(3, 7, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = inst.random_two_linked(12, &mut rng);
        let mut params = PhiParams::new(1, 5);
        params.p_override = Some(0.3);
        let r = phi_approximation(&inst, &a, params).unwrap();
        assert!(r.valid());
        assert!(r.p < 1.0);
    }
}
