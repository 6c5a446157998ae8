//! Cross-checks of library results against independent computations written
//! here from first principles.

use std::collections::BTreeMap;

use antichain_core::asymptotics::{t1, t2};
use antichain_core::exact_count::{
    count_antichains_layered, defect_distribution_brute, defect_distribution_exact, macmahon_box, SubposetSpec,
};
use antichain_core::isoperimetry::fully_matched_count;
use antichain_core::polymer::{cluster_sums, enumerate_clusters, graph_from_edges, ursell, PolymerModel};
use antichain_core::poset::layer_sizes;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;

fn rat(v: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(v.clone()))
}

/// Downsets of `[3]^3` as 27-bit masks, from height functions on a 3×3
/// grid that are non-increasing along both axes.
fn downsets_of_cube() -> Vec<u32> {
    let mut out = Vec::new();
    let mut h = [0u8; 9];
    fn rec(pos: usize, h: &mut [u8; 9], out: &mut Vec<u32>) {
        if pos == 9 {
            let mut mask = 0u32;
            for (cell, &height) in h.iter().enumerate() {
                for k in 0..height as usize {
                    mask |= 1 << (cell * 3 + k);
                }
            }
            out.push(mask);
            return;
        }
        let (i, j) = (pos / 3, pos % 3);
        let mut cap = 3;
        if i > 0 {
            cap = cap.min(h[pos - 3]);
        }
        if j > 0 {
            cap = cap.min(h[pos - 1]);
        }
        for v in 0..=cap {
            h[pos] = v;
            rec(pos + 1, h, out);
        }
    }
    rec(0, &mut h, &mut out);
    out
}

#[test]
fn cube_downsets_match_box_formula() {
    let d = downsets_of_cube();
    assert_eq!(d.len(), 980);
    assert_eq!(macmahon_box(3, 3, 3), BigUint::from(980u32));
    assert_eq!(macmahon_box(2, 2, 2), BigUint::from(20u32));
    assert_eq!(count_antichains_layered(&SubposetSpec::full(3, 3)).unwrap().count, BigUint::from(980u32));
}

#[test]
fn four_cube_by_multichains_of_downsets() {
    // A downset of [3]^4 is a chain D0 ⊇ D1 ⊇ D2 of downsets of [3]^3.
    let d = downsets_of_cube();
    let sub = |a: u32, b: u32| a & !b == 0;
    let mut total: u64 = 0;
    for &mid in &d {
        let above = d.iter().filter(|&&x| sub(mid, x)).count() as u64;
        let below = d.iter().filter(|&&x| sub(x, mid)).count() as u64;
        total += above * below;
    }
    assert_eq!(total, 17_792_748);
    assert_eq!(count_antichains_layered(&SubposetSpec::full(3, 4)).unwrap().count, BigUint::from(total));
}

/// `ln(P(z)/P(0))` up to `z^order`.
fn log_series(p: &BTreeMap<usize, BigUint>, order: usize) -> Vec<BigRational> {
    let p0 = rat(&p[&0]);
    let q: Vec<BigRational> =
        (0..=order).map(|k| p.get(&k).map(|c| rat(c) / &p0).unwrap_or_else(BigRational::zero)).collect();
    let mut l = vec![BigRational::zero(); order + 1];
    for k in 1..=order {
        let kk = BigRational::from_integer(k.into());
        let mut acc = &kk * &q[k];
        for j in 1..k {
            acc -= BigRational::from_integer(j.into()) * &l[j] * &q[k - j];
        }
        l[k] = acc / kk;
    }
    l
}

#[test]
fn cluster_sums_are_log_coefficients_of_defect_generating_function() {
    for n in 2..=4 {
        let tally = if n <= 3 { defect_distribution_brute(n).unwrap() } else { defect_distribution_exact(n).unwrap() };
        let ell = layer_sizes(3, n).unwrap()[n].clone();
        assert_eq!(tally[&0], BigUint::from(1u8) << usize::try_from(ell).unwrap());
        let logs = log_series(&tally, 3);
        let sums = cluster_sums(&PolymerModel::central(n).unwrap(), 3).unwrap();
        for k in 1..=3 {
            assert_eq!(sums.by_size[k], logs[k], "n={n}, size {k}");
        }
    }
}

#[test]
fn defect_tallies_agree() {
    for n in 1..=3 {
        assert_eq!(defect_distribution_exact(n).unwrap(), defect_distribution_brute(n).unwrap());
    }
}

#[test]
fn cluster_stream_matches_sums() {
    for n in 2..=4 {
        let model = PolymerModel::central(n).unwrap();
        let (_, clusters) = enumerate_clusters(&model, 3, 1 << 22).unwrap();
        let sums = cluster_sums(&model, 3).unwrap();
        for k in 1..=3 {
            let (mut signed, mut abs, mut count) = (BigRational::zero(), BigRational::zero(), 0u128);
            for c in clusters.iter().filter(|c| c.size == k) {
                signed += &c.weight;
                abs += num_traits::Signed::abs(&c.weight);
                count += 1;
            }
            assert_eq!(signed, sums.by_size[k]);
            assert_eq!(abs, sums.abs_by_size[k]);
            assert_eq!(count, sums.counts[k]);
        }
        if n >= 3 {
            assert_eq!(sums.by_size[1], t1(n).unwrap());
            assert_eq!(sums.by_size[2], t2(n).unwrap());
        }
    }
}

/// `(1/k!) Σ (-1)^{|E|}` over connected spanning edge subsets.
fn ursell_by_subsets(k: usize, edges: &[(usize, usize)]) -> BigRational {
    let mut total = BigInt::zero();
    for mask in 0u32..(1 << edges.len()) {
        let mut parent: Vec<usize> = (0..k).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        let mut comps = k;
        for (e, &(a, b)) in edges.iter().enumerate() {
            if mask >> e & 1 == 1 {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra] = rb;
                    comps -= 1;
                }
            }
        }
        if comps == 1 {
            total += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
        }
    }
    let fact: u64 = (1..=k as u64).product();
    BigRational::new(total, BigInt::from(fact))
}

#[test]
fn ursell_matches_subset_expansion() {
    let mut state = 0x9e37_79b9_u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    for _ in 0..200 {
        let k = 1 + (next() % 5) as usize;
        let mut edges = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                if next() % 2 == 0 {
                    edges.push((a, b));
                }
            }
        }
        let want = ursell_by_subsets(k, &edges);
        assert_eq!(ursell(&graph_from_edges(k, &edges)).unwrap(), want, "k={k} edges={edges:?}");
    }
}

/// Motzkin paths of length `n` with no flat step on the axis.
fn axis_free_motzkin(n: usize) -> u64 {
    let mut f = vec![0u64; n + 2];
    f[0] = 1;
    for _ in 0..n {
        let mut g = vec![0u64; n + 2];
        for h in 0..=n {
            if f[h] == 0 {
                continue;
            }
            g[h + 1] += f[h];
            if h > 0 {
                g[h - 1] += f[h];
                g[h] += f[h];
            }
        }
        f = g;
    }
    f[0]
}

#[test]
fn fully_matched_points_count_axis_free_paths() {
    for n in 2..=10 {
        let r = fully_matched_count(n).unwrap();
        assert_eq!(r.fully_matched, axis_free_motzkin(n), "n={n}");
        let l = layer_sizes(3, n).unwrap();
        assert_eq!(BigUint::from(r.fully_matched), &l[n] - &l[n - 1]);
        assert!(r.holds);
    }
}

#[test]
fn layer_sizes_sum_to_grid_size() {
    for t in 2..=5usize {
        for n in 1..=8usize {
            let total: BigUint = layer_sizes(t, n).unwrap().into_iter().sum();
            assert_eq!(total, BigUint::from(t).pow(n as u32));
        }
    }
}
