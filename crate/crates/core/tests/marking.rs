use afem::mark::{binning, brute_force_doerfler, greedy, DOERFLER_SLACK};
use proptest::prelude::*;

fn values(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 1e-6f64..10.0, Just(1.0)], 1..=max_len)
}

fn theta() -> impl Strategy<Value = f64> {
    (1u32..=100).prop_map(|k| k as f64 / 100.0)
}

fn marked_sum(v: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| v[i]).sum()
}

proptest! {
    #[test]
    fn both_strategies_satisfy_the_bulk_criterion(v in values(64), theta in theta()) {
        let total: f64 = v.iter().sum();
        for m in [greedy(&v, theta).unwrap(), binning(&v, theta).unwrap()] {
            prop_assert!(m.indices.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(m.indices.iter().all(|&i| i < v.len()));
            if total > 0.0 {
                prop_assert!(marked_sum(&v, &m.indices) >= theta * total - 2.0 * DOERFLER_SLACK * total);
                prop_assert!(m.achieved >= theta - 2.0 * DOERFLER_SLACK);
            } else {
                prop_assert!(m.is_empty());
            }
        }
    }

    #[test]
    fn greedy_is_minimal_and_binning_within_factor_two(v in values(12), theta in theta()) {
        let g = greedy(&v, theta).unwrap().len();
        prop_assert_eq!(g, brute_force_doerfler(&v, theta).unwrap());
        prop_assert!(binning(&v, theta).unwrap().len() <= 2 * g);
    }

    #[test]
    fn marked_values_are_permutation_invariant(v in values(24), theta in theta(), seed in any::<u64>()) {
        let n = v.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let w: Vec<f64> = perm.iter().map(|&i| v[i]).collect();
        let sorted = |x: Vec<f64>| { let mut x = x; x.sort_by(f64::total_cmp); x };
        let a = greedy(&v, theta).unwrap();
        let b = greedy(&w, theta).unwrap();
        prop_assert_eq!(
            sorted(a.indices.iter().map(|&i| v[i]).collect()),
            sorted(b.indices.iter().map(|&i| w[i]).collect())
        );
    }
}

#[test]
fn theta_one_marks_every_positive_index() {
    let v = [0.5, 0.0, 2.0, 1e-9];
    assert_eq!(greedy(&v, 1.0).unwrap().indices, vec![0, 2, 3]);
    assert_eq!(binning(&v, 1.0).unwrap().indices, vec![0, 2, 3]);
}

#[test]
fn single_positive_index_for_any_theta() {
    for theta in [0.01, 0.5, 1.0] {
        assert_eq!(binning(&[0.0, 0.0, 3.0], theta).unwrap().indices, vec![2]);
    }
}
