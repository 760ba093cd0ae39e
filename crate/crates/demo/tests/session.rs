use cbdt_demo::session::{efficiency, parse_options, Session, Surface, TrainOptions};

fn small(surface: Surface) -> TrainOptions {
    TrainOptions {
        surface,
        n: 600,
        noise_sigma: 0.1,
        rounds: 40,
        ..Default::default()
    }
}

#[test]
fn training_reports_one_entry_per_round() {
    let (_, summary) = Session::train(&small(Surface::Smooth)).unwrap();
    assert_eq!(summary.rounds, 40);
    assert_eq!(summary.loss.len(), 40);
    assert_eq!(summary.lambda.len(), 40);
    assert!(summary.pehe_sqrt.is_finite() && summary.pehe_sqrt > 0.0);
    assert!(!summary.points.is_empty() && summary.points.len() <= 600);
    assert!((summary.ate_error - (summary.ate_hat - summary.ate_true).abs()).abs() < 1e-12);
}

#[test]
fn training_is_deterministic() {
    let (a, sa) = Session::train(&small(Surface::Smooth)).unwrap();
    let (b, sb) = Session::train(&small(Surface::Smooth)).unwrap();
    assert_eq!(a.model_json().unwrap(), b.model_json().unwrap());
    assert_eq!(sa.pehe_sqrt.to_bits(), sb.pehe_sqrt.to_bits());
}

#[test]
fn step_rules_split_on_the_first_feature() {
    let (session, _) = Session::train(&TrainOptions {
        rounds: 100,
        n: 2000,
        ..small(Surface::Step)
    })
    .unwrap();
    let rules = session.rules(2, 0.05).unwrap();
    assert!(rules.rules.len() >= 2);
    assert!(rules.fidelity > 0.9, "fidelity {}", rules.fidelity);
    assert!(rules.rules.iter().any(|r| r.text.contains("x1")), "{:?}", rules.rules);
    let total: f64 = rules.rules.iter().map(|r| r.support).sum();
    assert!((total - rules.covered_fraction).abs() < 1e-9);
}

#[test]
fn options_are_validated() {
    let parsed = parse_options(r#"{"surface": "step", "rounds": 10}"#).unwrap();
    assert_eq!(parsed.surface, Surface::Step);
    assert_eq!(parsed.rounds, 10);
    assert_eq!(parsed.n, TrainOptions::default().n);
    assert!(parse_options(r#"{"n": 10}"#).is_err());
    assert!(parse_options(r#"{"surface": "wavy"}"#).is_err());
}

#[test]
fn efficiency_matches_definition_and_rejects_large_costs() {
    let v = efficiency(0.5, 2.0, 5.0).unwrap();
    assert!((v - 0.5 / -(0.01f64).log10()).abs() < 1e-12);
    assert!(efficiency(0.5, 100.0, 100.0).is_err());
}
