use std::collections::BTreeMap;

use proptest::prelude::*;

use qoscomp::leveling::{compute_utility, filter_eligible, LevelScheme, ScoredService};
use qoscomp::qos::{normalize_all, NormalizedQosVector, Polarity, QosAttribute, QosVector, Schema};

fn schema(polarities: &[Polarity]) -> Schema {
    Schema::new(
        polarities
            .iter()
            .enumerate()
            .map(|(i, &p)| QosAttribute::new(format!("q{i}"), p, ""))
            .collect(),
    )
    .unwrap()
}

fn polarity() -> impl Strategy<Value = Polarity> {
    prop_oneof![Just(Polarity::Positive), Just(Polarity::Negative)]
}

/// Candidate sets of 1..12 services over 1..5 attributes.
fn candidate_set() -> impl Strategy<Value = (Vec<Polarity>, Vec<Vec<f64>>)> {
    prop::collection::vec(polarity(), 1..5).prop_flat_map(|pols| {
        let k = pols.len();
        let rows = prop::collection::vec(prop::collection::vec(-1e6..1e6f64, k), 1..12);
        (Just(pols), rows)
    })
}

fn vectors(rows: &[Vec<f64>]) -> Vec<QosVector> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            QosVector::new(
                format!("s{i}"),
                r.iter().enumerate().map(|(j, &v)| (format!("q{j}"), v)).collect(),
            )
        })
        .collect()
}

fn nv(values: &[f64]) -> NormalizedQosVector {
    NormalizedQosVector {
        service_id: "s".into(),
        values: values
            .iter()
            .enumerate()
            .map(|(i, &v)| (format!("q{i}"), v))
            .collect::<BTreeMap<_, _>>(),
    }
}

proptest! {
    #[test]
    fn normalized_values_lie_in_unit_interval((pols, rows) in candidate_set()) {
        let (_, normalized) = normalize_all(&vectors(&rows), &schema(&pols)).unwrap();
        for n in &normalized {
            for &v in n.values.values() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn scaling_preserves_order_by_polarity((pols, rows) in candidate_set()) {
        let (_, normalized) = normalize_all(&vectors(&rows), &schema(&pols)).unwrap();
        for (j, pol) in pols.iter().enumerate() {
            let key = format!("q{j}");
            for a in 0..rows.len() {
                for b in 0..rows.len() {
                    if rows[a][j] < rows[b][j] {
                        let (na, nb) = (normalized[a].values[&key], normalized[b].values[&key]);
                        match pol {
                            Polarity::Positive => prop_assert!(na <= nb),
                            Polarity::Negative => prop_assert!(na >= nb),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn equal_values_scale_to_one(pols in prop::collection::vec(polarity(), 1..5), v in -1e6..1e6f64, n in 1usize..6) {
        let rows = vec![vec![v; pols.len()]; n];
        let (_, normalized) = normalize_all(&vectors(&rows), &schema(&pols)).unwrap();
        for x in normalized.iter().flat_map(|n| n.values.values()) {
            prop_assert_eq!(*x, 1.0);
        }
    }

    #[test]
    fn utility_decreases_with_level(values in prop::collection::vec(0.0..=1.0f64, 1..6)) {
        let scheme = LevelScheme::default();
        let n = nv(&values);
        let u: Vec<f64> = (1..=3).map(|l| compute_utility(&n, l, &scheme).unwrap()).collect();
        prop_assert!(u[0] >= u[1] && u[1] >= u[2]);
        prop_assert!((0.0..=1.0).contains(&u[0]));
    }

    #[test]
    fn utility_increases_with_any_value(values in prop::collection::vec(0.0..=1.0f64, 1..6), idx in 0usize..6, bump in 0.0..=1.0f64, level in 1usize..=3) {
        let scheme = LevelScheme::default();
        let idx = idx % values.len();
        let mut better = values.clone();
        better[idx] = (better[idx] + bump).min(1.0);
        let u = compute_utility(&nv(&values), level, &scheme).unwrap();
        let v = compute_utility(&nv(&better), level, &scheme).unwrap();
        prop_assert!(v >= u);
    }

    #[test]
    fn filter_keeps_exactly_those_above(utilities in prop::collection::vec(0.0..=1.0f64, 0..20), threshold in 0.0..=1.0f64) {
        let scored: Vec<ScoredService> = utilities
            .iter()
            .enumerate()
            .map(|(i, &u)| ScoredService {
                service_id: format!("s{i}"),
                normalized: nv(&[u]),
                level: 1,
                utility: u,
            })
            .collect();
        let kept = filter_eligible(&scored, threshold);
        let expected: Vec<&str> = scored
            .iter()
            .filter(|s| s.utility > threshold)
            .map(|s| s.service_id.as_str())
            .collect();
        let got: Vec<&str> = kept.iter().map(|s| s.service_id.as_str()).collect();
        prop_assert_eq!(got, expected);
    }
}
