use auditsel_core::table::deviance_from_counts;
use auditsel_core::{AdjustedTable, ContingencyTable3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fits `(XY)(YZ)` by iterative proportional fitting from a uniform start.
fn ipf_fit(i_n: usize, j_n: usize, n: &[f64]) -> Vec<f64> {
    let idx = |i: usize, j: usize, k: usize| (i * j_n + j) * 2 + k;
    let mut fit = vec![1.0; n.len()];
    for _ in 0..100 {
        let mut change: f64 = 0.0;
        for i in 0..i_n {
            for j in 0..j_n {
                let target = n[idx(i, j, 0)] + n[idx(i, j, 1)];
                let cur = fit[idx(i, j, 0)] + fit[idx(i, j, 1)];
                for k in 0..2 {
                    let new = if cur > 0.0 {
                        fit[idx(i, j, k)] * target / cur
                    } else {
                        0.0
                    };
                    change = change.max((new - fit[idx(i, j, k)]).abs());
                    fit[idx(i, j, k)] = new;
                }
            }
        }
        for j in 0..j_n {
            for k in 0..2 {
                let target: f64 = (0..i_n).map(|i| n[idx(i, j, k)]).sum();
                let cur: f64 = (0..i_n).map(|i| fit[idx(i, j, k)]).sum();
                for i in 0..i_n {
                    let new = if cur > 0.0 {
                        fit[idx(i, j, k)] * target / cur
                    } else {
                        0.0
                    };
                    change = change.max((new - fit[idx(i, j, k)]).abs());
                    fit[idx(i, j, k)] = new;
                }
            }
        }
        if change < 1e-13 {
            break;
        }
    }
    fit
}

fn g_statistic(n: &[f64], fit: &[f64]) -> f64 {
    2.0 * n
        .iter()
        .zip(fit)
        .filter(|(&o, _)| o > 0.0)
        .map(|(&o, &e)| o * (o / e).ln())
        .sum::<f64>()
}

fn random_table(
    rng: &mut ChaCha8Rng,
    max_i: usize,
    max_j: usize,
    max_count: u64,
) -> ContingencyTable3 {
    loop {
        let i = rng.gen_range(1..=max_i);
        let j = rng.gen_range(1..=max_j);
        let counts = (0..i * j * 2)
            .map(|_| rng.gen_range(0..=max_count))
            .collect();
        if let Ok(t) = ContingencyTable3::new(i, j, counts) {
            return t;
        }
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

#[test]
fn explicit_form_matches_ipf_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let t = random_table(&mut rng, 6, 5, 200);
        let n = t.counts_f64();
        let oracle = g_statistic(&n, &ipf_fit(t.x_categories(), t.y_categories(), &n));
        assert!(
            relative_gap(t.deviance(), oracle) < 1e-9,
            "{t:?}: {} vs {oracle}",
            t.deviance()
        );
    }
}

#[test]
fn fitted_counts_match_ipf_and_margins() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let counts = (0..16).map(|_| rng.gen_range(0..40)).collect();
    let t = ContingencyTable3::new(4, 2, counts).unwrap();
    let fit = t.fitted_counts();
    let oracle = ipf_fit(4, 2, &t.counts_f64());
    for (a, b) in fit.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-9);
    }
    for x in 0..4 {
        for y in 0..2 {
            let s = (x * 2 + y) * 2;
            assert!((fit[s] + fit[s + 1] - t.stratum_total(x, y) as f64).abs() < 1e-9);
        }
    }
    for y in 0..2 {
        for z in 0..2 {
            let m: f64 = (0..4).map(|x| fit[(x * 2 + y) * 2 + z]).sum();
            assert!((m - t.layer_total(y, z) as f64).abs() < 1e-9);
        }
    }
}

#[test]
fn constant_term_is_invariant_under_adjustment() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = ContingencyTable3::new(3, 3, (0..18).map(|_| rng.gen_range(1..60)).collect()).unwrap();
    let c = t.constant_term();
    let xlogx = |v: f64| if v > 0.0 { v * v.ln() } else { 0.0 };
    for _ in 0..10 {
        let dp: Vec<f64> = (0..9)
            .map(|s| rng.gen::<f64>() * t.counts()[2 * s] as f64)
            .collect();
        let dm: Vec<f64> = (0..9)
            .map(|s| rng.gen::<f64>() * t.counts()[2 * s + 1] as f64)
            .collect();
        let adj = AdjustedTable::new(t.clone(), dp, dm).unwrap();
        let m = adj.adjusted_counts();
        let cells: f64 = m.iter().map(|&v| xlogx(v)).sum();
        let layers: f64 = (0..3)
            .flat_map(|y| (0..2).map(move |z| (y, z)))
            .map(|(y, z)| xlogx((0..3).map(|x| m[(x * 3 + y) * 2 + z]).sum()))
            .sum();
        let rest = adj.deviance() - (2.0 * cells - 2.0 * layers);
        assert!((rest - c).abs() < 1e-8 * c.abs().max(1.0), "{rest} vs {c}");
    }
}

#[test]
fn real_valued_counts_and_slack() {
    let d = deviance_from_counts(2, 1, &[10.5, 9.5, 9.5, 10.5]).unwrap();
    let oracle = g_statistic(
        &[10.5, 9.5, 9.5, 10.5],
        &ipf_fit(2, 1, &[10.5, 9.5, 9.5, 10.5]),
    );
    assert!(relative_gap(d, oracle) < 1e-12);
    assert!(deviance_from_counts(2, 1, &[-1e-10, 2.0, 3.0, 4.0]).is_ok());
    assert!(deviance_from_counts(2, 1, &[-1e-6, 2.0, 3.0, 4.0]).is_err());
}

fn table_strategy() -> impl Strategy<Value = ContingencyTable3> {
    (1usize..=5, 1usize..=4)
        .prop_flat_map(|(i, j)| {
            (
                Just(i),
                Just(j),
                prop::collection::vec(0u64..100, i * j * 2),
            )
        })
        .prop_filter_map("empty", |(i, j, c)| ContingencyTable3::new(i, j, c).ok())
}

proptest! {
    #[test]
    fn deviance_is_nonnegative(t in table_strategy()) {
        prop_assert!(t.deviance() >= 0.0);
    }

    #[test]
    fn both_forms_agree(t in table_strategy()) {
        prop_assert!(relative_gap(t.deviance(), t.likelihood_ratio_deviance()) < 1e-9);
    }

    #[test]
    fn zero_deviance_iff_fitted_equals_observed(t in table_strategy()) {
        let fit = t.fitted_counts();
        let same = t.counts_f64().iter().zip(&fit).all(|(a, b)| (a - b).abs() < 1e-9);
        prop_assert_eq!(same, t.deviance() < 1e-9);
    }

    #[test]
    fn label_permutations_leave_deviance_unchanged(t in table_strategy(), sx in any::<u64>(), sy in any::<u64>()) {
        let (i_n, j_n) = (t.x_categories(), t.y_categories());
        let mut rng = ChaCha8Rng::seed_from_u64(sx ^ sy.rotate_left(17));
        let mut px: Vec<usize> = (0..i_n).collect();
        let mut py: Vec<usize> = (0..j_n).collect();
        for v in [&mut px, &mut py] {
            for a in (1..v.len()).rev() {
                let b = rng.gen_range(0..=a);
                v.swap(a, b);
            }
        }
        let mut counts = vec![0; t.counts().len()];
        for x in 0..i_n {
            for y in 0..j_n {
                for z in 0..2 {
                    counts[(px[x] * j_n + py[y]) * 2 + z] = t.count(x, y, z);
                }
            }
        }
        let p = ContingencyTable3::new(i_n, j_n, counts).unwrap();
        prop_assert!(relative_gap(p.deviance(), t.deviance()) < 1e-10);
    }

    #[test]
    fn adjustment_preserves_margins(t in table_strategy(), fracs in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 20)) {
        let strata = t.x_categories() * t.y_categories();
        let dp: Vec<f64> = (0..strata).map(|s| fracs[s].0 * t.counts()[2 * s] as f64).collect();
        let dm: Vec<f64> = (0..strata).map(|s| fracs[s].1 * t.counts()[2 * s + 1] as f64).collect();
        let adj = AdjustedTable::new(t.clone(), dp, dm).unwrap();
        let m = adj.adjusted_counts();
        for s in 0..strata {
            prop_assert!(m[2 * s] >= -1e-9 && m[2 * s + 1] >= -1e-9);
            prop_assert!((m[2 * s] + m[2 * s + 1] - t.stratum_total(s / t.y_categories(), s % t.y_categories()) as f64).abs() < 1e-9);
        }
        let adjusted_constant = {
            let n = m.iter().map(|v| v.max(0.0)).collect::<Vec<_>>();
            let strata_sum: f64 = (0..strata).map(|s| { let v = n[2 * s] + n[2 * s + 1]; if v > 0.0 { v * v.ln() } else { 0.0 } }).sum();
            let y_sum: f64 = (0..t.y_categories()).map(|y| {
                let v: f64 = (0..t.x_categories()).map(|x| n[(x * t.y_categories() + y) * 2] + n[(x * t.y_categories() + y) * 2 + 1]).sum();
                if v > 0.0 { v * v.ln() } else { 0.0 }
            }).sum();
            2.0 * y_sum - 2.0 * strata_sum
        };
        prop_assert!((adjusted_constant - t.constant_term()).abs() < 1e-8 * t.constant_term().abs().max(1.0));
    }
}
