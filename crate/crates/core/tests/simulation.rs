use auditsel_core::simulation::{
    build_joint, draw_population, joint_index, run_condition, summarize, Condition, ConditionSpec,
};
use auditsel_core::stats::chi_square_quantile;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn table1(wx: u8, wy: u8, xz: u8) -> Condition {
    Condition::new(wx, wy, xz).unwrap()
}

#[test]
fn population_draws_follow_the_joint() {
    let joint = build_joint(&table1(4, 2, 4).blocks()).unwrap();
    let n = 1_000_000;
    let units = draw_population(&joint, n, &mut ChaCha8Rng::seed_from_u64(1));
    let mut observed = vec![0f64; 54];
    for u in &units {
        observed[joint_index(u.w, u.x, u.y, u.z as usize)] += 1.0;
    }
    let stat: f64 = observed
        .iter()
        .zip(joint.probs())
        .filter(|(_, &p)| p > 0.0)
        .map(|(&o, &p)| (o - n as f64 * p).powi(2) / (n as f64 * p))
        .sum();
    let df = joint.probs().iter().filter(|&&p| p > 0.0).count() - 1;
    assert!(stat < chi_square_quantile(df, 0.99).unwrap(), "{stat}");
}

#[test]
fn audit_flag_is_independent_of_w_given_x() {
    let joint = build_joint(&table1(4, 4, 4).blocks()).unwrap();
    let units = draw_population(&joint, 1_000_000, &mut ChaCha8Rng::seed_from_u64(2));
    let mut c = [[[0f64; 2]; 3]; 3];
    for u in &units {
        c[u.x][u.w][u.z as usize] += 1.0;
    }
    let n = units.len() as f64;
    let mut mi = 0.0;
    for x in 0..3 {
        let nx: f64 = c[x].iter().flatten().sum();
        for w in 0..3 {
            for z in 0..2 {
                let nwz = c[x][w][z];
                if nwz == 0.0 {
                    continue;
                }
                let nw = c[x][w][0] + c[x][w][1];
                let nz: f64 = (0..3).map(|v| c[x][v][z]).sum();
                mi += nwz / n * (nwz * nx / (nw * nz)).ln();
            }
        }
    }
    assert!(mi < 1e-3, "{mi}");
}

#[test]
fn baseline_condition_audits_three_percent() {
    let joint = build_joint(&table1(1, 1, 1).blocks()).unwrap();
    let expected = 10_000.0 * joint.audit_fraction();
    assert!((expected - 300.0).abs() < 1.0, "{expected}");
}

#[test]
fn replicates_are_reproducible_and_never_worse() {
    let mut spec = ConditionSpec::desk(table1(1, 1, 4));
    spec.replicates = 6;
    spec.solver.attempts = 8;
    let a = run_condition(&spec, 12).unwrap();
    let b = run_condition(&spec, 12).unwrap();
    assert_eq!(a, b);
    for r in &a {
        assert!(r.deviance_after <= r.deviance_before + 1e-9);
        assert!(r.relative_deviance().unwrap() >= 0.0);
        assert!(r.audit_size_after <= r.audit_size_before + 100);
    }
}

#[test]
fn selective_audit_bias_shrinks() {
    let mut spec = ConditionSpec::desk(table1(1, 1, 4));
    spec.replicates = 20;
    spec.solver.attempts = 10;
    let results = run_condition(&spec, 3).unwrap();
    let s = summarize("selective", &results);
    assert!(s.mean_abs_bias_pw_after[0] < s.mean_abs_bias_pw_before[0]);
    assert!(s.median_relative_deviance < 0.5);
}

#[test]
fn unoptimized_runs_keep_the_initial_sample() {
    let mut spec = ConditionSpec::desk(table1(2, 2, 1));
    spec.replicates = 3;
    spec.optimize = false;
    for r in run_condition(&spec, 4).unwrap() {
        assert_eq!(r.pw_before, r.pw_after);
        assert_eq!(r.deviance_before, r.deviance_after);
    }
}
