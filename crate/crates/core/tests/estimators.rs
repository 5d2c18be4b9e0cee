use auditsel_core::estimators::{
    estimate, estimate_pw, estimate_px_given_w, variance_pw, variance_px_given_w,
};
use auditsel_core::{AuditedData, AuditedRecord, PopulationMargins};
use proptest::prelude::*;

fn rec(w: usize, x: usize, y: usize) -> AuditedRecord {
    AuditedRecord { w, x, y }
}

/// Two strata, two categories, written out term by term.
#[test]
fn two_stratum_example_matches_direct_sums() {
    // y = 0: (w,x) = (0,0) x3, (0,1) x1, (1,1) x2         n = 6
    // y = 1: (w,x) = (0,0) x1, (1,0) x1, (1,1) x2         n = 4
    let mut records = Vec::new();
    records.extend(std::iter::repeat_n(rec(0, 0, 0), 3));
    records.push(rec(0, 1, 0));
    records.extend(std::iter::repeat_n(rec(1, 1, 0), 2));
    records.push(rec(0, 0, 1));
    records.push(rec(1, 0, 1));
    records.extend(std::iter::repeat_n(rec(1, 1, 1), 2));
    let data = AuditedData::new(&records, 2, 2, 2).unwrap();
    let margins = PopulationMargins::new(vec![0.7, 0.3]).unwrap();

    let pw0 = 0.7 * (4.0 / 6.0) + 0.3 * (1.0 / 4.0);
    let pw1 = 0.7 * (2.0 / 6.0) + 0.3 * (3.0 / 4.0);
    let pw = estimate_pw(&data, &margins).unwrap();
    assert!((pw[0] - pw0).abs() < 1e-15 && (pw[1] - pw1).abs() < 1e-15);

    // P(X = 0 | W = 0) and P(X = 1 | W = 1).
    let r00 = (0.7 * (3.0 / 6.0) + 0.3 * (1.0 / 4.0)) / pw0;
    let r11 = (0.7 * (2.0 / 6.0) + 0.3 * (2.0 / 4.0)) / pw1;
    let ratios = estimate_px_given_w(&data, &margins).unwrap();
    assert!((ratios[0][0].unwrap() - r00).abs() < 1e-15);
    assert!((ratios[1][1].unwrap() - r11).abs() < 1e-15);

    let v_pw0 = 0.49 / 6.0 * (4.0 / 6.0) * (2.0 / 6.0) + 0.09 / 4.0 * 0.25 * 0.75;
    assert!((variance_pw(&data, &margins).unwrap()[0] - v_pw0).abs() < 1e-15);

    let term =
        |a: f64, b: f64, r: f64| a * (1.0 - a) + r * r * b * (1.0 - b) - 2.0 * r * a * (1.0 - b);
    let v_r00 = (0.49 / 6.0 * term(3.0 / 6.0, 4.0 / 6.0, r00)
        + 0.09 / 4.0 * term(1.0 / 4.0, 1.0 / 4.0, r00))
        / (pw0 * pw0);
    let got = variance_px_given_w(&data, &margins).unwrap()[0][0].unwrap();
    assert!((got - v_r00).abs() < 1e-14, "{got} vs {v_r00}");
}

#[test]
fn single_stratum_collapses_to_raw_proportions() {
    let records = vec![
        rec(0, 0, 0),
        rec(0, 1, 0),
        rec(1, 1, 0),
        rec(0, 0, 0),
        rec(2, 2, 0),
    ];
    let data = AuditedData::from_records(&records, 1).unwrap();
    let margins = PopulationMargins::new(vec![1.0]).unwrap();
    let pw = estimate_pw(&data, &margins).unwrap();
    assert_eq!(pw, vec![0.6, 0.2, 0.2]);
    let ratios = estimate_px_given_w(&data, &margins).unwrap();
    assert!((ratios[0][0].unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert!((ratios[0][1].unwrap() - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn variance_of_a_fair_coin() {
    let records: Vec<_> = (0..100).map(|k| rec(k % 2, 0, 0)).collect();
    let data = AuditedData::new(&records, 2, 1, 1).unwrap();
    let margins = PopulationMargins::new(vec![1.0]).unwrap();
    assert!((variance_pw(&data, &margins).unwrap()[0] - 0.0025).abs() < 1e-15);
}

fn data_strategy() -> impl Strategy<Value = (AuditedData, PopulationMargins, Vec<AuditedRecord>)> {
    (1usize..=3, 1usize..=3, 1usize..=4)
        .prop_flat_map(|(h, i, j)| {
            let records = prop::collection::vec((0..h, 0..i, 0..j), 1..60);
            let weights = prop::collection::vec(0.05f64..1.0, j);
            (Just((h, i, j)), records, weights)
        })
        .prop_filter_map("empty stratum", |((h, i, j), raw, weights)| {
            let records: Vec<_> = raw.into_iter().map(|(w, x, y)| rec(w, x, y)).collect();
            let data = AuditedData::new(&records, h, i, j).ok()?;
            if data.stratum_sizes().contains(&0) {
                return None;
            }
            let total: f64 = weights.iter().sum();
            let margins =
                PopulationMargins::new(weights.iter().map(|w| w / total).collect()).ok()?;
            Some((data, margins, records))
        })
}

proptest! {
    #[test]
    fn shares_sum_to_one((data, margins, _) in data_strategy()) {
        let pw = estimate_pw(&data, &margins).unwrap();
        prop_assert!((pw.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for row in estimate_px_given_w(&data, &margins).unwrap() {
            if row.iter().all(Option::is_some) {
                prop_assert!((row.iter().map(|r| r.unwrap()).sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn variances_are_nonnegative((data, margins, _) in data_strategy()) {
        let report = estimate(&data, &margins).unwrap();
        prop_assert!(report.pw.iter().all(|e| e.variance >= 0.0));
        prop_assert!(report.px_given_w.iter().flatten().flatten().all(|e| e.variance >= 0.0));
    }

    #[test]
    fn duplicating_records_halves_variance((data, margins, records) in data_strategy()) {
        let doubled: Vec<_> = records.iter().chain(&records).copied().collect();
        let twice = AuditedData::new(&doubled, data.w_categories(), data.x_categories(), data.y_categories()).unwrap();
        let (a, b) = (variance_pw(&data, &margins).unwrap(), variance_pw(&twice, &margins).unwrap());
        for (v1, v2) in a.iter().zip(&b) {
            prop_assert!((v1 / 2.0 - v2).abs() <= 1e-15 * v1.max(1.0));
        }
    }
}
