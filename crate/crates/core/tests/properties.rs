//! Property tests for invariants that hold on every input.

use antichain_core::clt_sim::{cumulants, AntichainState};
use antichain_core::containers::{kappa_report, lovasz_stein_cover, psi_approximation, BipartiteInstance};
use antichain_core::llt::{esseen_estimate, hermite};
use antichain_core::poset::layer_sizes;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(n: usize) -> BipartiteInstance {
    BipartiteInstance::layers(3, n, n - 1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_is_monotone_and_extensive(n in 4usize..7, seed in any::<u64>(), size in 1usize..10, extra in 0usize..6) {
        let inst = instance(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = inst.random_two_linked(size, &mut rng);
        let mut b = a.clone();
        for _ in 0..extra {
            b.push(rng.gen_range(0..inst.x_len() as u32));
        }
        b.sort_unstable();
        b.dedup();
        let (ca, cb) = (inst.closure(&a), inst.closure(&b));
        prop_assert!(a.iter().all(|v| ca.binary_search(v).is_ok()));
        prop_assert!(ca.iter().all(|v| cb.binary_search(v).is_ok()));
        prop_assert!(kappa_report(&inst, &a).holds);
        prop_assert!(kappa_report(&inst, &b).holds);
    }

    #[test]
    fn psi_output_meets_its_conditions(n in 5usize..8, seed in any::<u64>(), size in 1usize..12, psi in 1usize..3, keep in 0.0f64..1.0) {
        let inst = instance(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = inst.random_two_linked(size, &mut rng);
        let g = inst.neighborhood(&a);
        let f_prime: Vec<u32> = g.into_iter().filter(|_| rng.gen_bool(keep)).collect();
        let pair = psi_approximation(&inst, &a, &f_prime, psi).unwrap();
        prop_assert!(pair.valid());
        prop_assert!(pair.consequences_hold());
    }

    #[test]
    fn greedy_cover_covers_within_bound(u in 1usize..30, w in 1usize..20, deg in 1usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let deg = deg.min(w);
        let adj: Vec<Vec<u32>> = (0..u)
            .map(|_| {
                let mut nb: Vec<u32> = (0..w as u32).collect();
                for i in 0..deg {
                    let j = rng.gen_range(i..w);
                    nb.swap(i, j);
                }
                nb.truncate(deg);
                nb
            })
            .collect();
        let mut wdeg = vec![0usize; w];
        for nb in &adj {
            for &x in nb {
                wdeg[x as usize] += 1;
            }
        }
        let r = lovasz_stein_cover(&adj, w, deg, *wdeg.iter().max().unwrap()).unwrap();
        prop_assert!(r.within_bound);
        prop_assert!(adj.iter().all(|nb| nb.iter().any(|x| r.cover.binary_search(x).is_ok())));
    }

    #[test]
    fn glauber_moves_preserve_antichains(n in 1usize..5, seed in any::<u64>()) {
        let mut s = AntichainState::new(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..300 {
            let site = rng.gen_range(0..s.len());
            s.glauber_step(site, rng.gen());
        }
        prop_assert!(s.is_antichain());
        let off_middle = s.selected_sites().filter(|&i| s.point(i).rank() != n).count();
        prop_assert_eq!(off_middle, s.defects());
    }

    #[test]
    fn estimate_is_symmetric(t in 2usize..6, n in 1usize..40, j in 0usize..200) {
        let top = (t - 1) * n;
        let j = j % (top + 1);
        let a = esseen_estimate(t, n, j).unwrap();
        let b = esseen_estimate(t, n, top - j).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn hermite_matches_explicit_forms(x in -5.0f64..5.0) {
        let x2 = x * x;
        prop_assert!((hermite(2, x) - (x2 - 1.0)).abs() < 1e-9);
        prop_assert!((hermite(5, x) - (x2 * x2 * x - 10.0 * x2 * x + 15.0 * x)).abs() < 1e-8);
        prop_assert!((hermite(6, x) - (x2 * x2 * x2 - 15.0 * x2 * x2 + 45.0 * x2 - 15.0)).abs() < 1e-7);
    }

    #[test]
    fn layer_sizes_are_symmetric(t in 2usize..6, n in 1usize..10) {
        let l = layer_sizes(t, n).unwrap();
        let top = l.len() - 1;
        prop_assert!((0..=top).all(|j| l[j] == l[top - j]));
    }

    #[test]
    fn cumulants_scale(a in -3.0f64..3.0, b in 0.5f64..4.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..500).map(|_| rng.gen::<f64>().powi(2)).collect();
        let k = cumulants(&data);
        let ks = cumulants(&data.iter().map(|x| (x - a) / b).collect::<Vec<_>>());
        for l in 1..4 {
            let want = k[l] / b.powi(l as i32 + 1);
            prop_assert!((ks[l] - want).abs() <= 1e-9 * want.abs().max(1e-6));
        }
    }
}
