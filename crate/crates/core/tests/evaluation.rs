mod common;

use std::collections::BTreeMap;

use alexis::evaluation::*;
use common::{brute_force_agreement, random_matrix, ERROR_LABELS};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn perfect_agreement_fixture() {
    let recs = load_annotations(include_str!("fixtures/annotations_perfect.xml")).unwrap();
    let report = agreement_report(&error_type_matrix(&recs)).unwrap();
    assert_eq!(report.alpha, 1.0);
    assert!(!report.degenerate);
    assert_eq!(report.accuracy, 1.0);
    assert!(report
        .pairwise_alpha
        .iter()
        .flatten()
        .flatten()
        .all(|a| *a == 1.0));
    assert!(consensus(&recs)
        .iter()
        .all(|c| c.best_generation == Some(0) && c.mean_rating == 4.0));
}

#[test]
fn random_fixture_matches_committed_oracle() {
    let recs = load_annotations(include_str!("fixtures/annotations_random.xml")).unwrap();
    let oracle: serde_json::Value =
        serde_json::from_str(include_str!("fixtures/annotations_random.oracle.json")).unwrap();
    let m = error_type_matrix(&recs);
    let report = agreement_report(&m).unwrap();
    assert!((report.alpha - oracle["alpha"].as_f64().unwrap()).abs() < 1e-9);
    assert!((report.accuracy - oracle["accuracy"].as_f64().unwrap()).abs() < 1e-9);
    for i in 0..5 {
        for j in i + 1..5 {
            let key = format!("{}-{}", i + 1, j + 1);
            let a = report.pairwise_alpha[i][j].unwrap();
            let c = report.pairwise_accuracy[i][j].unwrap();
            assert!(
                (a - oracle["pairwise_alpha"][&key].as_f64().unwrap()).abs() < 1e-9,
                "{key}"
            );
            assert!(
                (c - oracle["pairwise_accuracy"][&key].as_f64().unwrap()).abs() < 1e-9,
                "{key}"
            );
        }
        assert!(report.pairwise_alpha[i][..=i].iter().all(Option::is_none));
    }
}

#[test]
fn alpha_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let m = random_matrix(&mut rng, 5, 50, &ERROR_LABELS, 0.1);
        let (alpha, acc) = brute_force_agreement(&m);
        let cm = coincidence_matrix(&m).unwrap();
        assert!((krippendorff_alpha(&cm).unwrap().value - alpha).abs() < 1e-9);
        assert!((accuracy(&cm).unwrap() - acc).abs() < 1e-12);
    }
}

#[test]
fn independent_labels_give_alpha_near_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base: Vec<&str> = (0..2000).map(|i| ERROR_LABELS[i % 6]).collect();
    let rows: Vec<Vec<&str>> = (0..5)
        .map(|_| {
            let mut r = base.clone();
            r.shuffle(&mut rng);
            r
        })
        .collect();
    let a = krippendorff_alpha(
        &coincidence_matrix(&ReliabilityMatrix::from_labels(&rows).unwrap()).unwrap(),
    )
    .unwrap();
    assert!(a.value.abs() < 0.05, "{}", a.value);
}

#[test]
fn single_label_everywhere_is_degenerate() {
    let m = ReliabilityMatrix::from_labels(&[vec!["a", "a"], vec!["a", "a"]]).unwrap();
    let a = krippendorff_alpha(&coincidence_matrix(&m).unwrap()).unwrap();
    assert_eq!(
        a,
        Alpha {
            value: 1.0,
            degenerate: true
        }
    );
}

#[test]
fn coincidences_are_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = random_matrix(&mut rng, 4, 30, &ERROR_LABELS, 0.2);
    let cm = coincidence_matrix(&m).unwrap();
    for c in 0..cm.labels.len() {
        for k in 0..cm.labels.len() {
            assert!((cm.o[c][k] - cm.o[k][c]).abs() < 1e-12);
        }
    }
}

#[test]
fn consensus_on_random_fixture() {
    let recs = load_annotations(include_str!("fixtures/annotations_random.xml")).unwrap();
    let c = consensus(&recs);
    assert_eq!(c.len(), 30);
    let mut by_sentence: BTreeMap<&str, Vec<&AnnotationRecord>> = BTreeMap::new();
    for r in &recs {
        by_sentence.entry(&r.sentence_id).or_default().push(r);
    }
    for s in &c {
        let rs = &by_sentence[s.sentence_id.as_str()];
        if let Some(e) = s.error_type {
            assert!(2 * rs.iter().filter(|r| r.error_type == e).count() > rs.len());
        }
        let mean = rs.iter().map(|r| r.rating as f64).sum::<f64>() / rs.len() as f64;
        assert_eq!(s.mean_rating, mean);
    }
}
