use num_complex::Complex64;
use proptest::prelude::*;
use rand::seq::SliceRandom;

use weighted_gc::coding::{balanced_scheme, decode_identity_error, validate_params, weight_scheme};
use weighted_gc::numkit::normalize_scores;
use weighted_gc::rng::seeded;
use weighted_gc::sketch::{make_partition, sample_weighted};

/// Feasible (n, k, d) with n ≤ 10.
fn small_params() -> impl Strategy<Value = (usize, usize, usize)> {
    (2usize..=10, 1usize..=10, 1usize..=10)
        .prop_filter("feasible", |&(n, k, d)| validate_params(n, k, d).is_ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn weighted_decoding_recovers_weights(
        (n, k, d) in small_params(),
        raw in prop::collection::vec(-10.0f64..10.0, 10),
        seed in any::<u64>(),
    ) {
        let scheme = balanced_scheme(n, k, d).unwrap();
        let f = scheme.params.responders;
        let w: Vec<Complex64> = raw[..k].iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let bt = weight_scheme(&scheme, &w).unwrap();
        let mut workers: Vec<usize> = (0..n).collect();
        workers.shuffle(&mut seeded(seed));
        let mut set = workers[..f].to_vec();
        set.sort_unstable();
        let a = scheme.decode_vector(&set).unwrap();
        prop_assert!(decode_identity_error(&a, &bt, &w) <= 1e-8);
    }

    #[test]
    fn mask_is_balanced_and_zero_off_support((n, k, d) in small_params()) {
        let scheme = balanced_scheme(n, k, d).unwrap();
        let p = scheme.params;
        for i in 0..n {
            prop_assert_eq!(scheme.mask.row_support(i).len(), p.parts_per_worker);
            for j in 0..k {
                if !scheme.mask.get(i, j) {
                    prop_assert_eq!(scheme.b[(i, j)], Complex64::new(0.0, 0.0));
                }
            }
        }
        for j in 0..k {
            prop_assert_eq!(scheme.mask.col_support(j).len(), d);
        }
    }

    #[test]
    fn sampler_weights_sum_to_draws(
        raw in prop::collection::vec(0.0f64..1.0, 24),
        k in 1usize..40,
        seed in any::<u64>(),
    ) {
        prop_assume!(raw.iter().any(|&v| v > 0.0));
        let pi = normalize_scores(&raw).unwrap();
        let plan = make_partition(24, 6, &pi).unwrap();
        let sp = sample_weighted(&plan, k, &mut seeded(seed)).unwrap();
        prop_assert_eq!(sp.total_weight(), k);
        prop_assert_eq!(sp.num_draws(), k);
        prop_assert!(sp.num_distinct() <= k.min(6));
        prop_assert!(sp.distinct_parts.windows(2).all(|w| w[0] < w[1]));
        for (j, &part) in sp.distinct_parts.iter().enumerate() {
            prop_assert!(plan.block_scores()[part] > 0.0);
            prop_assert!(sp.rescale[j].is_finite() && sp.rescale[j] > 0.0);
        }
    }

    #[test]
    fn partition_covers_rows(
        raw in prop::collection::vec(0.01f64..1.0, 30),
        parts in prop::sample::select(vec![1usize, 2, 3, 5, 6, 10, 15, 30]),
    ) {
        let pi = normalize_scores(&raw).unwrap();
        let plan = make_partition(30, parts, &pi).unwrap();
        let mut next = 0;
        for r in plan.part_ranges() {
            prop_assert_eq!(r.start, next);
            prop_assert_eq!(r.len(), 30 / parts);
            next = r.end;
        }
        prop_assert_eq!(next, 30);
        prop_assert!((plan.block_scores().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}
