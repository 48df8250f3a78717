use ftn_core::allocation::{apply_allocation, waterfill, PowerAllocation, SubcarrierSnrs};
use proptest::prelude::*;

fn wf(g: &[f64]) -> PowerAllocation {
    waterfill(&SubcarrierSnrs::new(g.to_vec()).unwrap()).unwrap()
}

fn rate(g: &[f64], p: &[f64]) -> f64 {
    g.iter().zip(p).map(|(g, p)| (1.0 + g * p).log2()).sum()
}

#[test]
fn two_carriers_match_grid_search() {
    for g in [[1.0, 1.0], [10.0, 0.5], [2.0, 0.3], [100.0, 0.01], [0.2, 0.21], [5.0, 4.0]] {
        let a = wf(&g);
        let steps = 200_000;
        let best = (0..=steps)
            .map(|k| {
                let p = 2.0 * k as f64 / steps as f64;
                rate(&g, &[p, 2.0 - p])
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((rate(&g, &a.powers) - best).abs() < 1e-8, "{g:?}");
        assert!(rate(&g, &a.powers) >= best - 1e-12);
    }
}

#[test]
fn three_carriers_match_grid_search() {
    let g = [3.0, 0.4, 0.9];
    let a = wf(&g);
    let steps = 600;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=steps {
        for j in 0..=steps - i {
            let p = [3.0 * i as f64 / steps as f64, 3.0 * j as f64 / steps as f64];
            best = best.max(rate(&g, &[p[0], p[1], 3.0 - p[0] - p[1]]));
        }
    }
    assert!(rate(&g, &a.powers) >= best - 1e-12);
    assert!(rate(&g, &a.powers) - best < 1e-4);
}

#[test]
fn example_allocations() {
    let a = wf(&[1.0, 1.0, 1.0, 1.0]);
    assert_eq!(a.powers, vec![1.0; 4]);
    let a = wf(&[10.0, 0.01]);
    assert_eq!(a.powers, vec![2.0, 0.0]);
    assert_eq!(apply_allocation(&[10.0, 0.01], &a.powers).unwrap(), vec![20.0, 0.0]);
}

fn gammas() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 1e-4f64..1e4], 1..64)
        .prop_filter("needs a usable carrier", |g| g.iter().any(|&x| x > 0.0))
}

proptest! {
    #[test]
    fn powers_sum_to_carrier_count(g in gammas()) {
        let a = wf(&g);
        prop_assert!(a.powers.iter().all(|&p| p >= 0.0));
        let total: f64 = a.powers.iter().sum();
        prop_assert!((total - g.len() as f64).abs() < 1e-9 * g.len() as f64);
    }

    #[test]
    fn water_level_conditions(g in gammas()) {
        let a = wf(&g);
        let level = a.water_level();
        for (&gi, &p) in g.iter().zip(&a.powers) {
            if gi == 0.0 {
                prop_assert_eq!(p, 0.0);
            } else if p > 0.0 {
                prop_assert!((p + 1.0 / gi - level).abs() < 1e-9 * level.max(1.0 / gi));
            } else {
                prop_assert!(1.0 / gi >= level * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn stronger_carriers_get_more_power(g in gammas()) {
        let a = wf(&g);
        for i in 0..g.len() {
            for j in 0..g.len() {
                if g[i] > g[j] {
                    prop_assert!(a.powers[i] >= a.powers[j]);
                }
            }
        }
    }

    #[test]
    fn permutation_equivariant(g in gammas(), seed in any::<u64>()) {
        let n = g.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let shuffled: Vec<f64> = perm.iter().map(|&i| g[i]).collect();
        let a = wf(&g);
        let b = wf(&shuffled);
        for (k, &i) in perm.iter().enumerate() {
            prop_assert!((b.powers[k] - a.powers[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn no_feasible_move_helps(g in gammas(), from in any::<prop::sample::Index>(), to in any::<prop::sample::Index>(), frac in 0.0f64..1.0) {
        // Shifting power between two carriers never raises the rate.
        let a = wf(&g);
        let (i, j) = (from.index(g.len()), to.index(g.len()));
        prop_assume!(i != j);
        let mut p = a.powers.clone();
        let d = p[i] * frac;
        p[i] -= d;
        p[j] += d;
        prop_assert!(rate(&g, &p) <= rate(&g, &a.powers) + 1e-9);
    }
}
