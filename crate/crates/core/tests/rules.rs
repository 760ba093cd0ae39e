use cbdt::dataset::{generate_synthetic, CausalDataset, SyntheticSpec};
use cbdt::estimator::FnEstimator;
use cbdt::rules::{extract_rules, rule_fidelity, RuleExtractionSpec, RuleSet};
use proptest::prelude::*;

fn data(seed: u64) -> CausalDataset {
    generate_synthetic(&SyntheticSpec {
        n: 600,
        d: 3,
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn spec(depth: usize) -> RuleExtractionSpec {
    RuleExtractionSpec {
        surrogate_depth: depth,
        bootstrap_draws: 50,
        ..Default::default()
    }
}

#[test]
fn piecewise_model_is_reproduced_exactly() {
    let ds = data(1);
    let model = FnEstimator {
        n_features: 3,
        f: |x: &[f64]| if x[0] <= 0.0 { -1.0 } else if x[1] <= 0.3 { 0.5 } else { 2.0 },
    };
    let rules = extract_rules(&model, &ds, &spec(3)).unwrap();
    assert_eq!(rules.rules.len(), 3);
    let fid = rule_fidelity(&rules, &model, &ds).unwrap();
    assert_eq!(fid.fidelity, 1.0);
    assert_eq!(fid.covered_fraction, 1.0);
}

#[test]
fn rules_survive_json() {
    let ds = data(2);
    let model = FnEstimator {
        n_features: 3,
        f: |x: &[f64]| x[0] + 0.5 * x[2],
    };
    let rules = extract_rules(&model, &ds, &spec(2)).unwrap();
    let text = serde_json::to_string(&rules).unwrap();
    let back: RuleSet = serde_json::from_str(&text).unwrap();
    assert_eq!(back, rules);
}

#[test]
fn rules_partition_the_rows() {
    let ds = data(3);
    let model = FnEstimator {
        n_features: 3,
        f: |x: &[f64]| (x[0] * x[1]).sin(),
    };
    let rules = extract_rules(&model, &ds, &spec(3)).unwrap();
    for i in 0..ds.n() {
        let row = ds.features().row(i);
        assert_eq!(rules.rules.iter().filter(|r| r.covers(row)).count(), 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn fidelity_grows_with_depth(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64, seed in 0u64..1000) {
        let ds = data(seed);
        let model = FnEstimator { n_features: 3, f: move |x: &[f64]| a * x[0] + b * x[1].abs() + c * x[2] * x[0] };
        let mut last = 0.0;
        for depth in 1..=4 {
            let rules = extract_rules(&model, &ds, &spec(depth)).unwrap();
            prop_assert!(rules.rules.len() <= 1 << depth);
            let f = rule_fidelity(&rules, &model, &ds).unwrap().fidelity;
            prop_assert!(f >= last - 1e-12, "depth {depth}: {f} < {last}");
            last = f;
        }
    }
}
