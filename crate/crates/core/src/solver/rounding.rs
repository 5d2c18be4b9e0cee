//! Normalization and integerization of continuous plans.

use alloc::vec::Vec;

use super::objective::{Evaluator, Objective};
use crate::math::round;
use crate::table::ContingencyTable3;

/// Replaces `(delta_plus, delta_minus)` in every stratum by the equivalent
/// pair with the same net change in which at most one side is nonzero.
pub fn normalize_deltas(delta_plus: &[f64], delta_minus: &[f64]) -> (Vec<f64>, Vec<f64>) {
    delta_plus
        .iter()
        .zip(delta_minus)
        .map(|(&p, &m)| ((p - m).max(0.0), (m - p).max(0.0)))
        .unzip()
}

/// Integer version of [`normalize_deltas`].
pub fn normalize_integer_deltas(delta_plus: &[u64], delta_minus: &[u64]) -> (Vec<u64>, Vec<u64>) {
    delta_plus
        .iter()
        .zip(delta_minus)
        .map(|(&p, &m)| (p.saturating_sub(m), m.saturating_sub(p)))
        .unzip()
}

/// Objective evaluator over integer deltas that caches per-`Y` deviance terms,
/// so single-unit moves cost `O(I)`.
struct CachedObjective<'a> {
    eval: &'a Evaluator,
    kind: Objective,
    dp: Vec<f64>,
    dm: Vec<f64>,
    by_y: Vec<f64>,
    moves: f64,
}

impl<'a> CachedObjective<'a> {
    fn new(eval: &'a Evaluator, kind: Objective, dp: &[u64], dm: &[u64]) -> Self {
        let dp: Vec<f64> = dp.iter().map(|&v| v as f64).collect();
        let dm: Vec<f64> = dm.iter().map(|&v| v as f64).collect();
        let by_y = (0..eval.y_categories)
            .map(|y| eval.y_deviance(y, &dp, &dm))
            .collect();
        let moves = dp.iter().sum::<f64>() + dm.iter().sum::<f64>();
        Self {
            eval,
            kind,
            dp,
            dm,
            by_y,
            moves,
        }
    }

    fn value(&self) -> f64 {
        self.kind
            .value(self.by_y.iter().sum::<f64>().max(0.0), self.moves)
    }

    /// Objective after applying `changes` (stratum, d_plus, d_minus), without
    /// committing them.
    fn value_after(&mut self, changes: &[(usize, f64, f64)]) -> f64 {
        self.apply(changes, 1.0);
        let v = self.value();
        self.apply(changes, -1.0);
        v
    }

    fn apply(&mut self, changes: &[(usize, f64, f64)], sign: f64) {
        let yc = self.eval.y_categories;
        for &(s, a, b) in changes {
            self.dp[s] += sign * a;
            self.dm[s] += sign * b;
            self.moves += sign * (a + b);
        }
        for &(s, _, _) in changes {
            let y = s % yc;
            self.by_y[y] = self.eval.y_deviance(y, &self.dp, &self.dm);
        }
    }
}

/// Tolerance below which two objective values are treated as equal.
fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Rounds continuous deltas to the nearest integers, then repairs violated
/// total bounds by repeatedly removing the single unit whose removal raises
/// the objective least (ties remove from the highest stratum index first,
/// so lower `(x, y)` indices keep their units).
pub fn round_to_integer_plan(
    table: &ContingencyTable3,
    delta_plus: &[f64],
    delta_minus: &[f64],
    m_plus: u64,
    m_minus: u64,
    kind: Objective,
) -> (Vec<u64>, Vec<u64>) {
    let eval = Evaluator::new(table);
    let nearest = |v: f64, cap: f64| round(v.max(0.0)).min(cap) as u64;
    let mut dp: Vec<u64> = delta_plus
        .iter()
        .zip(&eval.n0)
        .map(|(&v, &c)| nearest(v, c))
        .collect();
    let mut dm: Vec<u64> = delta_minus
        .iter()
        .zip(&eval.n1)
        .map(|(&v, &c)| nearest(v, c))
        .collect();
    let mut cache = CachedObjective::new(&eval, kind, &dp, &dm);
    repair(&mut cache, &mut dp, m_plus, true);
    repair(&mut cache, &mut dm, m_minus, false);
    (dp, dm)
}

fn repair(cache: &mut CachedObjective<'_>, deltas: &mut [u64], cap: u64, plus: bool) {
    let change = |s: usize, d: f64| if plus { (s, d, 0.0) } else { (s, 0.0, d) };
    while deltas.iter().sum::<u64>() > cap {
        let mut best: Option<(usize, f64)> = None;
        for s in 0..deltas.len() {
            if deltas[s] == 0 {
                continue;
            }
            let v = cache.value_after(&[change(s, -1.0)]);
            match best {
                Some((_, b)) if v > b && !ties(v, b) => {}
                Some((_, b)) if ties(v, b) => best = Some((s, b.min(v))),
                _ => best = Some((s, v)),
            }
        }
        let (s, _) = best.expect("positive total has a positive cell");
        deltas[s] -= 1;
        cache.apply(&[change(s, -1.0)], 1.0);
    }
}

/// Above this many candidate steps, pair moves are limited to shifts.
const PAIR_STEP_LIMIT: usize = 64;

/// Integer local search: repeatedly applies the best strictly improving
/// single-unit step (add or drop one unit on either side of one stratum).
/// When no single step improves, the best improving pair of steps is
/// applied instead; on tables with more than [`PAIR_STEP_LIMIT`] candidate
/// steps only pairs shifting one unit between strata are tried. Every bound
/// and the normalized form are kept.
pub(crate) fn polish(
    table: &ContingencyTable3,
    delta_plus: &[u64],
    delta_minus: &[u64],
    m_plus: u64,
    m_minus: u64,
    kind: Objective,
    max_moves: usize,
) -> (Vec<u64>, Vec<u64>) {
    let eval = Evaluator::new(table);
    let mut dp = delta_plus.to_vec();
    let mut dm = delta_minus.to_vec();
    let mut cache = CachedObjective::new(&eval, kind, &dp, &dm);
    let strata = dp.len();
    let n0: Vec<u64> = eval.n0.iter().map(|&v| v as u64).collect();
    let n1: Vec<u64> = eval.n1.iter().map(|&v| v as u64).collect();

    for _ in 0..max_moves {
        let current = cache.value();
        let sum_p = dp.iter().sum::<u64>() as i64;
        let sum_m = dm.iter().sum::<u64>() as i64;
        let feasible = |moves: &[(usize, f64, f64)]| {
            let (mut total_p, mut total_m) = (sum_p, sum_m);
            for (k, &(s, _, _)) in moves.iter().enumerate() {
                if moves[..k].iter().any(|m| m.0 == s) {
                    continue;
                }
                let (mut p, mut m) = (dp[s] as i64, dm[s] as i64);
                for &(_, a, b) in moves.iter().filter(|m| m.0 == s) {
                    p += a as i64;
                    m += b as i64;
                    total_p += a as i64;
                    total_m += b as i64;
                }
                if p < 0 || m < 0 || p > n0[s] as i64 || m > n1[s] as i64 || (p > 0 && m > 0) {
                    return false;
                }
            }
            total_p <= m_plus as i64 && total_m <= m_minus as i64
        };
        let steps: Vec<(usize, f64, f64)> = (0..strata)
            .flat_map(|s| [(s, 1.0, 0.0), (s, -1.0, 0.0), (s, 0.0, 1.0), (s, 0.0, -1.0)])
            .filter(|&(s, a, b)| {
                let (p, m) = (dp[s] as f64 + a, dm[s] as f64 + b);
                p >= 0.0 && m >= 0.0 && p <= n0[s] as f64 && m <= n1[s] as f64
            })
            .collect();
        type Candidate = Option<([(usize, f64, f64); 2], usize, f64)>;
        let mut best: Candidate = None;
        let consider = |cache: &mut CachedObjective<'_>,
                        best: &mut Candidate,
                        moves: [(usize, f64, f64); 2],
                        len: usize| {
            if !feasible(&moves[..len]) {
                return;
            }
            let v = cache.value_after(&moves[..len]);
            let improves = v < current && !ties(v, current);
            if improves && best.is_none_or(|(_, _, b)| v < b && !ties(v, b)) {
                *best = Some((moves, len, v));
            }
        };
        for &step in &steps {
            consider(&mut cache, &mut best, [step, step], 1);
        }
        if best.is_none() {
            let all_pairs = steps.len() <= PAIR_STEP_LIMIT;
            for (k, &a) in steps.iter().enumerate() {
                for &b in &steps[k..] {
                    if a.0 == b.0 && a.1 + b.1 == 0.0 && a.2 + b.2 == 0.0 {
                        continue;
                    }
                    // Large tables only shift one unit between strata.
                    let shift = a.1 + b.1 == 0.0 && a.2 + b.2 == 0.0;
                    if !all_pairs && !shift {
                        continue;
                    }
                    consider(&mut cache, &mut best, [a, b], 2);
                }
            }
        }
        let Some((moves, len, _)) = best else { break };
        for &(s, a, b) in &moves[..len] {
            dp[s] = (dp[s] as i64 + a as i64) as u64;
            dm[s] = (dm[s] as i64 + b as i64) as u64;
        }
        cache.apply(&moves[..len], 1.0);
    }
    (dp, dm)
}
