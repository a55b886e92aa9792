use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fmpd::jets::{homogeneity_ladder, jet_check, jet_evaluate, MAX_ORDER_X, MAX_ORDER_Y};
use fmpd::spaces::{self, Params};

#[test]
fn jets_match_stencils_on_every_catalog_space() {
    for (k, d) in spaces::catalog().iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(70 + k as u64);
        for _ in 0..3 {
            let (x, y) = d.sample_point(&mut rng);
            let report = jet_check(&d.space, &x, &y, k as u64).unwrap();
            report.check(1e-6).unwrap_or_else(|e| panic!("{}: {e}", d.name));
            assert!(homogeneity_ladder(&d.space, &x, &y).unwrap() <= 1e-9, "{}", d.name);
        }
    }
}

#[test]
fn sphere_jet_entries_are_exact() {
    let d = spaces::build("sphere", &Params::new()).unwrap();
    let (t, p, a, b) = (0.9917779362074994, 4.32773749832318, 2.8918177369246703, -0.032985342872016016);
    let jet = jet_evaluate(&d.space, &[t, p], &[a, b], MAX_ORDER_X, MAX_ORDER_Y).unwrap();
    // L = a² + sin²θ b²; reference digits from a 40-digit evaluation.
    assert!((jet.value() - 8.363_372_066_024_116).abs() < 1e-14);
    assert!((jet.get(&[0, 0], &[]).unwrap() - -8.729_040_392_117_024e-4).abs() < 1e-18);
    assert!((jet.get(&[0], &[1, 1]).unwrap() - 2.0 * (2.0 * t).sin()).abs() < 1e-15);
    assert_eq!(jet.get(&[], &[0, 0, 0]), Some(0.0));
    assert_eq!(jet.get(&[0, 0, 1], &[]), None);
}

#[test]
fn corrupted_randers_is_rejected() {
    let mut params = Params::new();
    params.insert("b1".into(), 1.2);
    assert!(spaces::build("randers-const", &params).is_err());
}
