//! Oracles shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use alexis::evaluation::ReliabilityMatrix;
use rand::Rng;

/// Alpha and accuracy by listing every ordered pair of pairable values.
/// Within a unit of m values each pair weighs 1/(m-1).
pub fn brute_force_agreement(r: &ReliabilityMatrix) -> (f64, f64) {
    let mut pairable: Vec<&str> = Vec::new();
    let mut disagree = 0.0;
    let mut agree = 0.0;
    for u in 0..r.units() {
        let vals: Vec<&str> = r
            .values
            .iter()
            .filter_map(|row| row[u].as_deref())
            .collect();
        let m = vals.len();
        if m < 2 {
            continue;
        }
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                if vals[i] == vals[j] {
                    agree += 1.0 / (m - 1) as f64;
                } else {
                    disagree += 1.0 / (m - 1) as f64;
                }
            }
        }
        pairable.extend(vals);
    }
    let n = pairable.len() as f64;
    let mut expected_pairs = 0.0;
    for i in 0..pairable.len() {
        for j in 0..pairable.len() {
            if i != j && pairable[i] != pairable[j] {
                expected_pairs += 1.0;
            }
        }
    }
    let d_o = disagree / n;
    let d_e = expected_pairs / (n * (n - 1.0));
    (1.0 - d_o / d_e, agree / n)
}

/// Observers x units of labels drawn from `labels`, each cell missing with probability `missing`.
pub fn random_matrix<R: Rng>(
    rng: &mut R,
    observers: usize,
    units: usize,
    labels: &[&str],
    missing: f64,
) -> ReliabilityMatrix {
    // A shared "true" label per unit keeps alpha away from zero.
    let truth: Vec<&str> = (0..units)
        .map(|_| labels[rng.gen_range(0..labels.len())])
        .collect();
    let values = (0..observers)
        .map(|_| {
            (0..units)
                .map(|u| {
                    if rng.gen_bool(missing) {
                        None
                    } else if rng.gen_bool(0.6) {
                        Some(truth[u].to_string())
                    } else {
                        Some(labels[rng.gen_range(0..labels.len())].to_string())
                    }
                })
                .collect()
        })
        .collect();
    ReliabilityMatrix::new(values).unwrap()
}

pub const ERROR_LABELS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
