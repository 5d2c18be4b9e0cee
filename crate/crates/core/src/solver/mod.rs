//! Multi-start minimization of the deviance over audit additions and removals.
//!
//! The problem: choose real `delta_plus[ij]` in `[0, n_ij0]` and
//! `delta_minus[ij]` in `[0, n_ij1]` with `sum delta_plus <= M+` and
//! `sum delta_minus <= M-` minimizing the deviance of the adjusted table
//! `m_ij1 = n_ij1 + delta_plus - delta_minus`, `m_ij0 = n_ij0 - delta_plus + delta_minus`
//! (or a penalized variant, see [`Objective`]).
//!
//! [`optimize`] runs `attempts` barrier solves from random starts, normalizes
//! each so no stratum both gains and loses units, rounds it to whole units,
//! keeps the best integer plan and compares the resulting deviance to the chi-square
//! cutoff with `J (I - 1)` degrees of freedom.

use alloc::vec;
use alloc::vec::Vec;

mod barrier;
mod exact;
mod objective;
mod rounding;
mod start;

pub use exact::EXACT_BUDGET_LIMIT;
pub use objective::{gradient, objective, objective_at, Gradient, Objective, DEFAULT_LAMBDA};
pub use rounding::{normalize_deltas, normalize_integer_deltas, round_to_integer_plan};
pub use start::INTERIOR_OFFSET;

use crate::rng::{self, domain};
use crate::stats::chi_square_cutoff;
use crate::table::{AdjustedTable, ContingencyTable3};
use crate::{Error, Result};
use barrier::Problem;

/// Fractions `(l, u)` of the total bounds from which random starting totals
/// are drawn, for additions and removals respectively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartBounds {
    pub plus: (f64, f64),
    pub minus: (f64, f64),
}

impl Default for StartBounds {
    fn default() -> Self {
        Self {
            plus: (0.1, 0.9),
            minus: (0.1, 0.9),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Maximum number of units added to the audit sample.
    pub m_plus: u64,
    /// Maximum number of previously audited units removed.
    pub m_minus: u64,
    pub attempts: usize,
    pub start_bounds: StartBounds,
    pub objective: Objective,
    /// Significance level of the acceptance cutoff.
    pub alpha: f64,
    /// Relative change of the barrier objective that ends a barrier round.
    pub inner_tol: f64,
    /// Step budget per barrier round.
    pub max_inner_iters: usize,
    pub barrier_rounds: usize,
    /// Factor applied to the barrier weight after each round.
    pub barrier_shrink: f64,
    pub initial_barrier: f64,
    /// Budget of single-unit moves in the integer local search after rounding.
    /// Zero disables it.
    pub polish_moves: usize,
    pub master_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            m_plus: 0,
            m_minus: 0,
            attempts: 50,
            start_bounds: StartBounds::default(),
            objective: Objective::Deviance,
            alpha: 0.05,
            inner_tol: 1e-8,
            max_inner_iters: 500,
            barrier_rounds: 8,
            barrier_shrink: 0.2,
            initial_barrier: 1.0,
            polish_moves: 10_000,
            master_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |(l, u): (f64, f64)| 0.0 < l && l < u && u < 1.0;
        if !in_unit(self.start_bounds.plus) {
            return Err(Error::InvalidConfig("start_bounds.plus"));
        }
        if !in_unit(self.start_bounds.minus) {
            return Err(Error::InvalidConfig("start_bounds.minus"));
        }
        self.objective.validate()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::InvalidConfig("inner_tol"));
        }
        if self.max_inner_iters == 0 {
            return Err(Error::InvalidConfig("max_inner_iters"));
        }
        if !(self.barrier_shrink > 0.0 && self.barrier_shrink < 1.0) {
            return Err(Error::InvalidConfig("barrier_shrink"));
        }
        if !(self.initial_barrier > 0.0) {
            return Err(Error::InvalidConfig("initial_barrier"));
        }
        Ok(())
    }
}

/// Integer audit plan: how many units to add and remove per `(x, y)` stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditPlan {
    pub base: ContingencyTable3,
    /// Units moved into the audit sample, indexed `x * J + y`.
    pub delta_plus: Vec<u64>,
    /// Units moved out of the audit sample, indexed `x * J + y`.
    pub delta_minus: Vec<u64>,
    pub deviance_before: f64,
    /// Deviance of the continuous optimum before rounding.
    pub continuous_deviance: f64,
    /// Best continuous objective over all attempts and the unadjusted table.
    pub continuous_objective: f64,
    /// Deviance of the integer plan.
    pub achieved_deviance: f64,
    pub cutoff: f64,
    pub accepted: bool,
    pub attempts_run: usize,
    /// Attempt that produced the kept solution; `None` when the plan is the
    /// null plan or came from the exact small-budget search.
    pub best_attempt_index: Option<usize>,
}

impl AuditPlan {
    /// Adjusted counts `m_ijk` in table layout.
    pub fn adjusted_counts(&self) -> Vec<u64> {
        let mut m = self.base.counts().to_vec();
        for s in 0..self.delta_plus.len() {
            m[2 * s + 1] = m[2 * s + 1] + self.delta_plus[s] - self.delta_minus[s];
            m[2 * s] = m[2 * s] + self.delta_minus[s] - self.delta_plus[s];
        }
        m
    }

    pub fn adjusted_table(&self) -> ContingencyTable3 {
        ContingencyTable3::new(
            self.base.x_categories(),
            self.base.y_categories(),
            self.adjusted_counts(),
        )
        .expect("adjustment preserves the table shape and total")
    }

    pub fn total_added(&self) -> u64 {
        self.delta_plus.iter().sum()
    }

    pub fn total_removed(&self) -> u64 {
        self.delta_minus.iter().sum()
    }

    /// Size of the final audit sample.
    pub fn final_audit_size(&self) -> u64 {
        self.base.audit_size() + self.total_added() - self.total_removed()
    }

    /// Checks every bound of the optimization problem and the normalized form.
    pub fn satisfies_constraints(&self, m_plus: u64, m_minus: u64) -> bool {
        let b = &self.base;
        let yc = b.y_categories();
        self.total_added() <= m_plus
            && self.total_removed() <= m_minus
            && (0..self.delta_plus.len()).all(|s| {
                let (x, y) = (s / yc, s % yc);
                self.delta_plus[s] <= b.count(x, y, 0)
                    && self.delta_minus[s] <= b.count(x, y, 1)
                    && (self.delta_plus[s] == 0 || self.delta_minus[s] == 0)
            })
    }
}

/// Outcome of a single barrier solve.
#[derive(Debug, Clone)]
pub struct SingleSolve {
    pub adjusted: AdjustedTable,
    pub start_objective: f64,
    pub objective: f64,
    pub iterations: usize,
    /// Barrier objective after every accepted step, one vector per barrier round.
    pub trace: Vec<Vec<f64>>,
}

/// Minimizes the configured objective from `start`, which must lie strictly
/// inside every bound (deltas whose family is fixed at zero must be zero).
pub fn solve_single(start: &AdjustedTable, config: &SolverConfig) -> Result<SingleSolve> {
    config.validate()?;
    let base = start.base();
    let problem = Problem::new(base, config.m_plus, config.m_minus, config.objective);
    let vars = problem
        .gather(start.delta_plus(), start.delta_minus())
        .map_err(|_| Error::AttemptFailed { attempt: 0 })?;
    let start_objective = objective(start, config.objective);
    let solution = problem.solve(&vars, config, 0)?;
    let strata = base.x_categories() * base.y_categories();
    let (mut dp, mut dm) = (vec![0.0; strata], vec![0.0; strata]);
    problem.scatter(&solution.vars, &mut dp, &mut dm);
    Ok(SingleSolve {
        adjusted: AdjustedTable::new(base.clone(), dp, dm)?,
        start_objective,
        objective: solution.objective,
        iterations: solution.iterations,
        trace: solution.trace,
    })
}

/// Random strictly feasible starting table for `attempt`.
pub fn starting_table(
    table: &ContingencyTable3,
    config: &SolverConfig,
    attempt: usize,
) -> AdjustedTable {
    let problem = Problem::new(table, config.m_plus, config.m_minus, config.objective);
    let mut rng = rng::stream(config.master_seed, &[domain::ATTEMPT, attempt as u64]);
    let vars = start::starting_point(&problem, &config.start_bounds, &mut rng);
    let strata = table.x_categories() * table.y_categories();
    let (mut dp, mut dm) = (vec![0.0; strata], vec![0.0; strata]);
    problem.scatter(&vars, &mut dp, &mut dm);
    AdjustedTable::new(table.clone(), dp, dm).expect("starting point lies inside the cell bounds")
}

fn run_attempt(
    problem: &Problem,
    config: &SolverConfig,
    attempt: usize,
) -> Result<(f64, Vec<f64>)> {
    let mut rng = rng::stream(config.master_seed, &[domain::ATTEMPT, attempt as u64]);
    let start = start::starting_point(problem, &config.start_bounds, &mut rng);
    let solution = problem.solve(&start, config, attempt)?;
    Ok((solution.objective, solution.vars))
}

fn run_attempts(problem: &Problem, config: &SolverConfig) -> Vec<Result<(f64, Vec<f64>)>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..config.attempts)
            .into_par_iter()
            .map(|a| run_attempt(problem, config, a))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..config.attempts)
            .map(|a| run_attempt(problem, config, a))
            .collect()
    }
}

/// Runs the full multi-start procedure and returns an integer plan.
///
/// The best continuous attempt (ties to the lower index) is normalized,
/// rounded and polished. When the budgets are at most
/// [`EXACT_BUDGET_LIMIT`], an exact integer search supplies a second
/// candidate. The null plan is kept unless a candidate strictly beats it.
pub fn optimize(table: &ContingencyTable3, config: &SolverConfig) -> Result<AuditPlan> {
    config.validate()?;
    if table.x_categories() < 2 {
        return Err(Error::InvalidDimensions {
            x_categories: table.x_categories(),
            y_categories: table.y_categories(),
        });
    }
    let zeros_available: u64 = table.counts().iter().step_by(2).sum();
    if config.m_plus > zeros_available {
        return Err(Error::InvalidConfig("m_plus"));
    }
    if config.m_minus > table.audit_size() {
        return Err(Error::InvalidConfig("m_minus"));
    }
    let cutoff = chi_square_cutoff(table.degrees_of_freedom(), config.alpha)?;
    let deviance_before = table.deviance();
    let strata = table.x_categories() * table.y_categories();
    let problem = Problem::new(table, config.m_plus, config.m_minus, config.objective);
    let null_objective = config.objective.value(deviance_before, 0.0);

    let mut best_objective = null_objective;
    let mut best: Option<(usize, Vec<f64>)> = None;
    let mut failures = 0;
    for (attempt, result) in run_attempts(&problem, config).into_iter().enumerate() {
        match result {
            Ok((value, vars)) if value < best_objective => {
                best_objective = value;
                best = Some((attempt, vars));
            }
            Ok(_) => {}
            Err(_) => failures += 1,
        }
    }
    if config.attempts > 0 && failures == config.attempts {
        return Err(Error::AllAttemptsFailed {
            attempts: config.attempts,
        });
    }

    let (mut dp, mut dm) = (vec![0.0; strata], vec![0.0; strata]);
    if let Some((_, vars)) = &best {
        problem.scatter(vars, &mut dp, &mut dm);
    }
    let (dp, dm) = normalize_deltas(&dp, &dm);
    let continuous_deviance = problem.eval.deviance(&dp, &dm);

    let as_f64 = |v: &[u64]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
    let integer_objective = |ip: &[u64], im: &[u64]| {
        let (fp, fm) = (as_f64(ip), as_f64(im));
        let moves = fp.iter().chain(&fm).sum();
        config
            .objective
            .value(problem.eval.deviance(&fp, &fm), moves)
    };
    let (mut ip, mut im) = (vec![0; strata], vec![0; strata]);
    let mut best_integer = null_objective;
    let mut best_attempt_index = None;
    if let Some((attempt, _)) = best {
        let (rp, rm) = round_to_integer_plan(
            table,
            &dp,
            &dm,
            config.m_plus,
            config.m_minus,
            config.objective,
        );
        let (rp, rm) = rounding::polish(
            table,
            &rp,
            &rm,
            config.m_plus,
            config.m_minus,
            config.objective,
            config.polish_moves,
        );
        let value = integer_objective(&rp, &rm);
        if value < best_integer {
            (ip, im, best_integer) = (rp, rm, value);
            best_attempt_index = Some(attempt);
        }
    }
    if config.attempts > 0 {
        if let Some((ep, em)) =
            exact::exact_small_budget(table, config.m_plus, config.m_minus, config.objective)
        {
            if integer_objective(&ep, &em) < best_integer {
                (ip, im) = (ep, em);
                best_attempt_index = None;
            }
        }
    }
    let mut achieved = problem.eval.deviance(&as_f64(&ip), &as_f64(&im));
    if achieved > deviance_before {
        ip = vec![0; strata];
        im = vec![0; strata];
        achieved = deviance_before;
    }
    if ip.iter().chain(&im).all(|&v| v == 0) {
        achieved = deviance_before;
    }
    Ok(AuditPlan {
        base: table.clone(),
        delta_plus: ip,
        delta_minus: im,
        deviance_before,
        continuous_deviance,
        continuous_objective: best_objective,
        achieved_deviance: achieved,
        cutoff,
        accepted: achieved <= cutoff,
        attempts_run: config.attempts,
        best_attempt_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(x: usize, y: usize, c: &[u64]) -> ContingencyTable3 {
        ContingencyTable3::new(x, y, c.to_vec()).unwrap()
    }

    #[test]
    fn independent_table_yields_null_plan() {
        let t = table(2, 1, &[10, 10, 10, 10]);
        let cfg = SolverConfig {
            m_plus: 5,
            m_minus: 5,
            attempts: 10,
            ..Default::default()
        };
        let plan = optimize(&t, &cfg).unwrap();
        assert!(plan
            .delta_plus
            .iter()
            .chain(&plan.delta_minus)
            .all(|&v| v == 0));
        assert!(plan.achieved_deviance < 1e-10);
        assert!(plan.accepted);
    }

    #[test]
    fn zero_attempts_return_base_table() {
        let t = table(2, 1, &[30, 10, 10, 30]);
        let cfg = SolverConfig {
            m_plus: 5,
            m_minus: 5,
            attempts: 0,
            ..Default::default()
        };
        let plan = optimize(&t, &cfg).unwrap();
        assert_eq!(plan.achieved_deviance, t.deviance());
        assert_eq!(plan.total_added() + plan.total_removed(), 0);
    }

    #[test]
    fn bounds_larger_than_table_are_rejected() {
        let t = table(2, 1, &[3, 10, 2, 30]);
        let cfg = SolverConfig {
            m_plus: 6,
            attempts: 1,
            ..Default::default()
        };
        assert_eq!(optimize(&t, &cfg), Err(Error::InvalidConfig("m_plus")));
        let cfg = SolverConfig {
            m_minus: 41,
            attempts: 1,
            ..Default::default()
        };
        assert_eq!(optimize(&t, &cfg), Err(Error::InvalidConfig("m_minus")));
    }

    #[test]
    fn config_validation_names_fields() {
        let bad = SolverConfig {
            start_bounds: StartBounds {
                plus: (0.5, 0.4),
                minus: (0.1, 0.9),
            },
            ..Default::default()
        };
        assert_eq!(
            bad.validate(),
            Err(Error::InvalidConfig("start_bounds.plus"))
        );
        let bad = SolverConfig {
            objective: Objective::LinearPenalty { lambda: -1.0 },
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(Error::InvalidConfig("lambda")));
        let bad = SolverConfig {
            alpha: 1.5,
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(Error::InvalidAlpha(1.5)));
    }

    #[test]
    fn selective_table_improves() {
        // X = 0 heavily over-audited in both strata.
        let t = table(3, 2, &[100, 30, 120, 25, 100, 5, 110, 4, 90, 3, 100, 2]);
        let cfg = SolverConfig {
            m_plus: 40,
            m_minus: 20,
            attempts: 8,
            master_seed: 11,
            ..Default::default()
        };
        let plan = optimize(&t, &cfg).unwrap();
        assert!(
            plan.achieved_deviance < 0.2 * plan.deviance_before,
            "{plan:?}"
        );
        assert!(plan.satisfies_constraints(40, 20));
        let again = optimize(&t, &cfg).unwrap();
        assert_eq!(plan, again);
    }
}
