use kinbm::distributions::{InflatedGammaPrior, KinbmParams, ParetoMixParams};
use kinbm::numerics::{chi_square_sf, regularized_incomplete_beta};
use proptest::prelude::*;

/// kINBM parameters with NB means in [0.05, 4] and shapes in [0.2, 30].
fn kinbm_params() -> impl Strategy<Value = KinbmParams> {
    (1usize..=3, 0u32..=3)
        .prop_flat_map(|(c, k)| {
            (
                Just(k),
                0.0f64..0.6,
                prop::collection::vec(0.05f64..1.0, c),
                prop::collection::vec(0.2f64..30.0, c),
                prop::collection::vec(0.05f64..4.0, c),
            )
        })
        .prop_map(|(k, infl, nb, shapes, means)| {
            let total: f64 = nb.iter().sum();
            let mut weights = vec![infl];
            weights.extend(nb.iter().map(|w| w / total * (1.0 - infl)));
            let taus = shapes.iter().zip(&means).map(|(a, m)| a * a / m).collect();
            KinbmParams::new(k, weights, shapes, taus).unwrap()
        })
}

proptest! {
    #[test]
    fn pmf_sums_to_one_and_matches_mean(p in kinbm_params()) {
        let pmf: Vec<f64> = (0..3000u64).map(|y| p.log_pmf(y).exp()).collect();
        let total: f64 = pmf.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "total {total}");
        let mean: f64 = pmf.iter().enumerate().map(|(y, q)| y as f64 * q).sum();
        prop_assert!((mean - p.mean()).abs() < 1e-8 * (1.0 + p.mean()), "{mean} vs {}", p.mean());
    }

    #[test]
    fn cdf_is_cumulative_pmf(p in kinbm_params()) {
        let mut acc = 0.0;
        for r in 0..40u64 {
            acc += p.log_pmf(r).exp();
            prop_assert!((p.cdf(r) - acc).abs() < 1e-10, "r={r}: {} vs {acc}", p.cdf(r));
        }
    }

    #[test]
    fn mixing_law_round_trip(p in kinbm_params()) {
        let back = InflatedGammaPrior::from_kinbm(&p).unwrap().to_kinbm().unwrap();
        for y in 0..30u64 {
            prop_assert!((back.log_pmf(y) - p.log_pmf(y)).abs() < 1e-10);
        }
    }

    #[test]
    fn sampling_is_reproducible(p in kinbm_params(), seed in any::<u64>()) {
        prop_assert_eq!(p.sample(500, seed), p.sample(500, seed));
    }

    #[test]
    fn pareto_cdf_is_a_distribution_function(
        tails in prop::collection::vec(1.05f64..8.0, 1..=3),
        z in prop::collection::vec(0.0f64..1e5, 2..20),
    ) {
        let m = tails.len();
        let p = ParetoMixParams::new(vec![1.0 / m as f64; m], tails, vec![100.0; m]).unwrap();
        let mut z = z;
        z.sort_by(f64::total_cmp);
        let values: Vec<f64> = z.iter().map(|&v| p.cdf(v)).collect();
        prop_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(values.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn incomplete_beta_reflection(x in 0.001f64..0.999, a in 0.1f64..50.0, b in 0.1f64..50.0) {
        let left = regularized_incomplete_beta(x, a, b).unwrap();
        let right = regularized_incomplete_beta(1.0 - x, b, a).unwrap();
        prop_assert!((left + right - 1.0).abs() < 1e-12, "{left} + {right}");
    }

    #[test]
    fn chi_square_tail_decreases(x in 0.0f64..200.0, step in 0.01f64..10.0, df in 1u32..30) {
        let a = chi_square_sf(x, f64::from(df)).unwrap();
        let b = chi_square_sf(x + step, f64::from(df)).unwrap();
        prop_assert!((0.0..=1.0).contains(&a) && b <= a);
    }
}
