use auditsel_core::sampler::Action;
use auditsel_core::solver::SolverConfig;
use auditsel_core::{optimize, realize, AuditPlan, ContingencyTable3, UnitRecord};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashMap};

fn null_plan(table: ContingencyTable3, dp: Vec<u64>, dm: Vec<u64>) -> AuditPlan {
    let d = table.deviance();
    AuditPlan {
        base: table,
        delta_plus: dp,
        delta_minus: dm,
        deviance_before: d,
        continuous_deviance: d,
        continuous_objective: d,
        achieved_deviance: d,
        cutoff: 0.0,
        accepted: false,
        attempts_run: 0,
        best_attempt_index: None,
    }
}

fn units_for(table: &ContingencyTable3) -> Vec<UnitRecord> {
    let mut out = Vec::new();
    for x in 0..table.x_categories() {
        for y in 0..table.y_categories() {
            for z in 0..2 {
                for k in 0..table.count(x, y, z) {
                    out.push(UnitRecord::new(format!("{x}-{y}-{z}-{k:04}"), x, y, z == 1));
                }
            }
        }
    }
    out
}

#[test]
fn inclusion_frequency_is_uniform() {
    let table = ContingencyTable3::new(1, 1, vec![4, 1]).unwrap();
    let units = units_for(&table);
    let plan = null_plan(table, vec![2], vec![0]);
    let mut hits: HashMap<String, u32> = HashMap::new();
    let draws = 10_000;
    for seed in 0..draws {
        for id in realize(&plan, &units, seed).unwrap().added {
            *hits.entry(id).or_default() += 1;
        }
    }
    // Binomial(10000, 1/2): sd = 50.
    assert_eq!(hits.len(), 4);
    for (id, h) in hits {
        assert!((h as f64 - 5000.0).abs() <= 150.0, "{id}: {h}");
    }
}

#[test]
fn realized_selection_reproduces_plan_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let table =
        ContingencyTable3::new(3, 2, (0..12).map(|_| rng.gen_range(5..60)).collect()).unwrap();
    let cfg = SolverConfig {
        m_plus: 25,
        m_minus: 10,
        attempts: 6,
        master_seed: 2,
        ..Default::default()
    };
    let plan = optimize(&table, &cfg).unwrap();
    let units = units_for(&table);
    let sel = realize(&plan, &units, 99).unwrap();
    let final_table = ContingencyTable3::tabulate(
        3,
        2,
        units.iter().map(|u| (u.x, u.y, sel.action(u).final_z())),
    )
    .unwrap();
    assert_eq!(final_table, plan.adjusted_table());
    assert_eq!(sel.final_sample.len() as u64, plan.final_audit_size());
    let added: BTreeSet<_> = sel.added.iter().collect();
    assert!(sel.removed.iter().all(|r| !added.contains(r)));
    for (s, (&dp, &dm)) in plan.delta_plus.iter().zip(&plan.delta_minus).enumerate() {
        let (x, y) = (s / 2, s % 2);
        let count = |a: Action| {
            units
                .iter()
                .filter(|u| u.x == x && u.y == y && sel.action(u) == a)
                .count() as u64
        };
        assert_eq!(count(Action::Add), dp);
        assert_eq!(count(Action::Remove), dm);
    }
}

#[test]
fn input_order_does_not_matter() {
    let table = ContingencyTable3::new(2, 2, vec![10, 3, 8, 2, 12, 5, 9, 4]).unwrap();
    let plan = null_plan(table.clone(), vec![3, 2, 1, 4], vec![1, 0, 2, 0]);
    let units = units_for(&table);
    let mut shuffled = units.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(5));
    assert_eq!(
        realize(&plan, &units, 42).unwrap(),
        realize(&plan, &shuffled, 42).unwrap()
    );
}

#[test]
fn strata_draw_independently() {
    // Adding a populated stratum leaves the draws of existing strata unchanged.
    let small = ContingencyTable3::new(1, 2, vec![10, 3, 8, 2]).unwrap();
    let large = ContingencyTable3::new(2, 2, vec![10, 3, 8, 2, 7, 7, 6, 1]).unwrap();
    let a = realize(
        &null_plan(small.clone(), vec![4, 3], vec![1, 1]),
        &units_for(&small),
        8,
    )
    .unwrap();
    let b = realize(
        &null_plan(large.clone(), vec![4, 3, 2, 2], vec![1, 1, 3, 0]),
        &units_for(&large),
        8,
    )
    .unwrap();
    let in_first_row = |ids: &[String]| {
        ids.iter()
            .filter(|id| id.starts_with("0-"))
            .cloned()
            .collect::<Vec<_>>()
    };
    assert_eq!(in_first_row(&a.added), in_first_row(&b.added));
    assert_eq!(in_first_row(&a.removed), in_first_row(&b.removed));
}

#[test]
fn replay_is_deterministic_and_seed_sensitive() {
    let table = ContingencyTable3::new(2, 1, vec![40, 3, 30, 6]).unwrap();
    let plan = null_plan(table.clone(), vec![10, 5], vec![0, 2]);
    let units = units_for(&table);
    assert_eq!(
        realize(&plan, &units, 1).unwrap(),
        realize(&plan, &units, 1).unwrap()
    );
    assert_ne!(
        realize(&plan, &units, 1).unwrap().added,
        realize(&plan, &units, 2).unwrap().added
    );
}
