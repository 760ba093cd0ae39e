use cbdt::evaluation::{eap, paired_ttest, pehe, trimmed_mean};
use proptest::prelude::*;

proptest! {
    #[test]
    fn eap_increases_with_each_cost(
        // costs keep train * infer / 1000 below 1 even after scaling, where EAP is defined
        p in 0.01..5.0f64, tr in 0.01..10.0f64, inf in 0.01..10.0f64, factor in 1.01..5.0f64,
    ) {
        let base = eap(p, tr, inf).unwrap();
        prop_assert!(base > 0.0);
        prop_assert!(eap(p * factor, tr, inf).unwrap() > base);
        prop_assert!(eap(p, tr * factor, inf).unwrap() > base);
        prop_assert!(eap(p, tr, inf * factor).unwrap() > base);
    }

    #[test]
    fn ttest_is_antisymmetric(
        pairs in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3..30),
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let ab = paired_ttest(&a, &b).unwrap();
        let ba = paired_ttest(&b, &a).unwrap();
        prop_assert_eq!(ab.t_stat, -ba.t_stat);
        prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
    }

    #[test]
    fn pehe_is_zero_only_on_truth(tau in prop::collection::vec(-5.0..5.0f64, 1..50), shift in 0.1..2.0f64) {
        prop_assert_eq!(pehe(&tau, &tau).unwrap().sqrt, 0.0);
        let moved: Vec<f64> = tau.iter().map(|t| t + shift).collect();
        prop_assert!((pehe(&moved, &tau).unwrap().sqrt - shift).abs() < 1e-9);
    }

    #[test]
    fn trimmed_mean_lies_within_range(values in prop::collection::vec(-100.0..100.0f64, 1..40)) {
        let m = trimmed_mean(&values);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(m >= lo - 1e-9 && m <= hi + 1e-9);
    }
}

#[test]
fn constant_differences_are_degenerate() {
    let t = paired_ttest(&[1.0, 2.0, 3.0], &[0.5, 1.5, 2.5]).unwrap();
    assert!(t.degenerate);
    assert_eq!(t.p_value, 0.0);
    let same = paired_ttest(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
    assert!(same.degenerate);
    assert_eq!(same.p_value, 1.0);
}
