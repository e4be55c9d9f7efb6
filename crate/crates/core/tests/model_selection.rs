use kinbm::model_selection::{aic_value, sbic_value, vuong_from_pointwise, VuongCorrection};
use proptest::prelude::*;

fn ids() -> (String, String) {
    ("a".to_string(), "b".to_string())
}

proptest! {
    #[test]
    fn vuong_is_antisymmetric(
        pairs in prop::collection::vec((-8.0f64..0.0, -8.0f64..0.0), 5..200),
        df1 in 1usize..10,
        df2 in 1usize..10,
    ) {
        let (l1, l2): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        for corr in [VuongCorrection::None, VuongCorrection::Aic, VuongCorrection::Schwarz] {
            let ab = vuong_from_pointwise(ids(), &l1, &l2, (df1, df2), corr);
            let ba = vuong_from_pointwise(("b".into(), "a".into()), &l2, &l1, (df2, df1), corr);
            match (ab, ba) {
                (Ok(ab), Ok(ba)) => {
                    prop_assert_eq!(ab.statistic, -ba.statistic);
                    prop_assert_eq!(ab.p_value, ba.p_value);
                    prop_assert!((0.0..=1.0).contains(&ab.p_value));
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "only one direction failed"),
            }
        }
    }

    #[test]
    fn identical_pointwise_is_inconclusive(l in prop::collection::vec(-8.0f64..0.0, 1..100)) {
        let r = vuong_from_pointwise(ids(), &l, &l, (3, 3), VuongCorrection::None).unwrap();
        prop_assert_eq!(r.statistic, 0.0);
        prop_assert_eq!(r.p_value, 1.0);
        prop_assert_eq!(r.winner.as_str(), "inconclusive");
    }

    #[test]
    fn criteria_penalise_parameters(loglik in -1e5f64..0.0, df in 1usize..50, n in 10.0f64..1e6) {
        prop_assert!(aic_value(loglik, df + 1) > aic_value(loglik, df));
        prop_assert!(sbic_value(loglik, df + 1, n) > sbic_value(loglik, df, n));
    }
}
