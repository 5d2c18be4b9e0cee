//! Log-barrier interior-point minimization over the free deltas.
//!
//! Free variables are `delta_plus` for strata with `n_ij0 > 0` and
//! `delta_minus` for strata with `n_ij1 > 0` (a zero total bound fixes the
//! whole family at zero). Box bounds and the two total bounds enter through
//! logarithmic barriers. Each barrier round runs scaled gradient descent with
//! a backtracking line search; the scaling is the diagonal of the Hessian plus
//! the rank-one curvature of the total-bound barrier, inverted exactly with
//! Sherman-Morrison so that moves along an active total bound are not
//! throttled.

use alloc::vec;
use alloc::vec::Vec;

use super::objective::{Evaluator, Objective};
use super::SolverConfig;
use crate::math::ln;
use crate::table::ContingencyTable3;
use crate::{Error, Result};

const ARMIJO: f64 = 1e-4;
const FRACTION_TO_BOUNDARY: f64 = 0.995;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub eval: Evaluator,
    pub kind: Objective,
    /// Strata whose `delta_plus` is free.
    pub plus: Vec<usize>,
    /// Strata whose `delta_minus` is free.
    pub minus: Vec<usize>,
    pub plus_cap: f64,
    pub minus_cap: f64,
    upper: Vec<f64>,
}

/// Result of one barrier solve.
#[derive(Debug, Clone)]
pub(crate) struct Solution {
    /// Best iterate by true objective (the start included).
    pub vars: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Barrier objective after every accepted step, one vector per round.
    pub trace: Vec<Vec<f64>>,
}

impl Problem {
    pub fn new(table: &ContingencyTable3, m_plus: u64, m_minus: u64, kind: Objective) -> Self {
        let eval = Evaluator::new(table);
        let plus: Vec<usize> = if m_plus > 0 {
            (0..eval.strata()).filter(|&s| eval.n0[s] > 0.0).collect()
        } else {
            Vec::new()
        };
        let minus: Vec<usize> = if m_minus > 0 {
            (0..eval.strata()).filter(|&s| eval.n1[s] > 0.0).collect()
        } else {
            Vec::new()
        };
        let upper = plus
            .iter()
            .map(|&s| eval.n0[s])
            .chain(minus.iter().map(|&s| eval.n1[s]))
            .collect();
        Self {
            eval,
            kind,
            plus,
            minus,
            plus_cap: m_plus as f64,
            minus_cap: m_minus as f64,
            upper,
        }
    }

    pub fn dimension(&self) -> usize {
        self.plus.len() + self.minus.len()
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Writes free variables into full-length delta arrays.
    pub fn scatter(&self, vars: &[f64], dp: &mut [f64], dm: &mut [f64]) {
        dp.iter_mut().for_each(|v| *v = 0.0);
        dm.iter_mut().for_each(|v| *v = 0.0);
        let (vp, vm) = vars.split_at(self.plus.len());
        for (&s, &v) in self.plus.iter().zip(vp) {
            dp[s] = v;
        }
        for (&s, &v) in self.minus.iter().zip(vm) {
            dm[s] = v;
        }
    }

    /// Reads free variables from full-length delta arrays; errors if a fixed
    /// delta is nonzero.
    pub fn gather(&self, dp: &[f64], dm: &[f64]) -> Result<Vec<f64>> {
        let yc = self.eval.y_categories;
        for s in 0..dp.len() {
            if dp[s] != 0.0 && !self.plus.contains(&s) || dm[s] != 0.0 && !self.minus.contains(&s) {
                return Err(Error::InfeasibleAdjustment {
                    x: s / yc,
                    y: s % yc,
                });
            }
        }
        Ok(self
            .plus
            .iter()
            .map(|&s| dp[s])
            .chain(self.minus.iter().map(|&s| dm[s]))
            .collect())
    }

    fn block_sums(&self, vars: &[f64]) -> (f64, f64) {
        let (vp, vm) = vars.split_at(self.plus.len());
        (vp.iter().sum(), vm.iter().sum())
    }

    pub fn strictly_feasible(&self, vars: &[f64]) -> bool {
        let inside = vars
            .iter()
            .zip(&self.upper)
            .all(|(&v, &u)| v > 0.0 && v < u);
        let (sp, sm) = self.block_sums(vars);
        inside
            && (self.plus.is_empty() || sp < self.plus_cap)
            && (self.minus.is_empty() || sm < self.minus_cap)
    }

    fn barrier(&self, vars: &[f64]) -> f64 {
        if !self.strictly_feasible(vars) {
            return f64::INFINITY;
        }
        let mut b = 0.0;
        for (&v, &u) in vars.iter().zip(&self.upper) {
            b -= ln(v) + ln(u - v);
        }
        let (sp, sm) = self.block_sums(vars);
        if !self.plus.is_empty() {
            b -= ln(self.plus_cap - sp);
        }
        if !self.minus.is_empty() {
            b -= ln(self.minus_cap - sm);
        }
        b
    }
}

/// Scratch buffers for one solve.
struct Work {
    dp: Vec<f64>,
    dm: Vec<f64>,
    grad_dev: Vec<f64>,
    hess_dev: Vec<f64>,
}

impl Work {
    fn new(strata: usize) -> Self {
        Self {
            dp: vec![0.0; strata],
            dm: vec![0.0; strata],
            grad_dev: vec![0.0; strata],
            hess_dev: vec![0.0; strata],
        }
    }
}

impl Problem {
    fn true_objective(&self, vars: &[f64], work: &mut Work) -> f64 {
        self.scatter(vars, &mut work.dp, &mut work.dm);
        let d = self.eval.deviance(&work.dp, &work.dm);
        let moves: f64 = vars.iter().sum();
        self.kind.value(d, moves)
    }

    /// Objective gradient and curvature diagonal in free-variable order.
    fn objective_derivatives(
        &self,
        vars: &[f64],
        work: &mut Work,
        grad: &mut [f64],
        diag: &mut [f64],
    ) {
        self.scatter(vars, &mut work.dp, &mut work.dm);
        self.eval
            .deviance_gradient(&work.dp, &work.dm, &mut work.grad_dev, &mut work.hess_dev);
        let d = self.eval.deviance(&work.dp, &work.dm);
        let moves: f64 = vars.iter().sum();
        let np = self.plus.len();
        for (k, &s) in self.plus.iter().enumerate() {
            grad[k] = self.kind.partial(d, moves, work.grad_dev[s]);
            diag[k] = work.hess_dev[s];
        }
        for (k, &s) in self.minus.iter().enumerate() {
            grad[np + k] = self.kind.partial(d, moves, -work.grad_dev[s]);
            diag[np + k] = work.hess_dev[s];
        }
    }

    /// Largest step along `dir` that stays strictly inside every bound.
    fn max_step(&self, vars: &[f64], dir: &[f64]) -> f64 {
        let mut alpha = f64::INFINITY;
        for ((&v, &d), &u) in vars.iter().zip(dir).zip(&self.upper) {
            if d < 0.0 {
                alpha = alpha.min(-v / d);
            } else if d > 0.0 {
                alpha = alpha.min((u - v) / d);
            }
        }
        let np = self.plus.len();
        let (sp, sm) = self.block_sums(vars);
        let dsp: f64 = dir[..np].iter().sum();
        let dsm: f64 = dir[np..].iter().sum();
        if np > 0 && dsp > 0.0 {
            alpha = alpha.min((self.plus_cap - sp) / dsp);
        }
        if !self.minus.is_empty() && dsm > 0.0 {
            alpha = alpha.min((self.minus_cap - sm) / dsm);
        }
        alpha
    }

    /// Minimizes the objective from a strictly feasible start.
    pub fn solve(&self, start: &[f64], config: &SolverConfig, attempt: usize) -> Result<Solution> {
        let n = self.dimension();
        if start.len() != n || !self.strictly_feasible(start) {
            return Err(Error::AttemptFailed { attempt });
        }
        let mut work = Work::new(self.eval.strata());
        let mut vars = start.to_vec();
        let mut best_obj = self.true_objective(&vars, &mut work);
        if !best_obj.is_finite() {
            return Err(Error::AttemptFailed { attempt });
        }
        let mut best = vars.clone();
        let mut trace = Vec::with_capacity(config.barrier_rounds);
        let mut iterations = 0;
        if n == 0 {
            return Ok(Solution {
                vars,
                objective: best_obj,
                iterations,
                trace,
            });
        }

        let np = self.plus.len();
        let mut grad = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut dir = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut mu = config.initial_barrier;

        for _ in 0..config.barrier_rounds {
            let mut phi = self.true_objective(&vars, &mut work) + mu * self.barrier(&vars);
            let mut round = vec![phi];
            for _ in 0..config.max_inner_iters {
                self.objective_derivatives(&vars, &mut work, &mut grad, &mut diag);
                let (sp, sm) = self.block_sums(&vars);
                for k in 0..n {
                    let (v, u) = (vars[k], self.upper[k]);
                    let total_slack = if k < np {
                        self.plus_cap - sp
                    } else {
                        self.minus_cap - sm
                    };
                    grad[k] += mu * (-1.0 / v + 1.0 / (u - v) + 1.0 / total_slack);
                    diag[k] += mu * (1.0 / (v * v) + 1.0 / ((u - v) * (u - v)));
                }
                let c_plus = mu / ((self.plus_cap - sp) * (self.plus_cap - sp));
                let c_minus = mu / ((self.minus_cap - sm) * (self.minus_cap - sm));
                rank_one_solve(&diag[..np], c_plus, &grad[..np], &mut dir[..np]);
                rank_one_solve(&diag[np..], c_minus, &grad[np..], &mut dir[np..]);

                let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
                if !(slope < 0.0) {
                    break;
                }
                let mut alpha = (FRACTION_TO_BOUNDARY * self.max_step(&vars, &dir)).min(1.0);
                let mut accepted = None;
                for _ in 0..MAX_BACKTRACKS {
                    for k in 0..n {
                        trial[k] = vars[k] + alpha * dir[k];
                    }
                    let b = self.barrier(&trial);
                    if b.is_finite() {
                        let f = self.true_objective(&trial, &mut work);
                        let candidate = f + mu * b;
                        if candidate <= phi + ARMIJO * alpha * slope {
                            accepted = Some((f, candidate));
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                let Some((f, candidate)) = accepted else {
                    break;
                };
                if !candidate.is_finite() {
                    return Err(Error::AttemptFailed { attempt });
                }
                core::mem::swap(&mut vars, &mut trial);
                iterations += 1;
                round.push(candidate);
                if f < best_obj {
                    best_obj = f;
                    best.copy_from_slice(&vars);
                }
                let change = phi - candidate;
                phi = candidate;
                if change <= config.inner_tol * phi.abs().max(1.0) {
                    break;
                }
            }
            trace.push(round);
            mu *= config.barrier_shrink;
        }
        Ok(Solution {
            vars: best,
            objective: best_obj,
            iterations,
            trace,
        })
    }
}

/// Solves `(diag(d) + c 1 1^T) x = -g`.
fn rank_one_solve(d: &[f64], c: f64, g: &[f64], x: &mut [f64]) {
    if d.is_empty() {
        return;
    }
    let mut dg = 0.0;
    let mut d1 = 0.0;
    for k in 0..d.len() {
        dg += g[k] / d[k];
        d1 += 1.0 / d[k];
    }
    let shift = c * dg / (1.0 + c * d1);
    for k in 0..d.len() {
        x[k] = (-g[k] + shift) / d[k];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_solve_matches_dense() {
        let d = [2.0, 3.0, 5.0];
        let c = 0.7;
        let g = [1.0, -2.0, 0.5];
        let mut x = [0.0; 3];
        rank_one_solve(&d, c, &g, &mut x);
        let sum: f64 = x.iter().sum();
        for k in 0..3 {
            let lhs = d[k] * x[k] + c * sum;
            assert!((lhs + g[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_bounds_fix_families() {
        let table = ContingencyTable3::new(2, 1, vec![5, 2, 0, 6]).unwrap();
        let p = Problem::new(&table, 3, 0, Objective::Deviance);
        assert_eq!(p.plus, vec![0]);
        assert!(p.minus.is_empty());
        let p = Problem::new(&table, 3, 2, Objective::Deviance);
        assert_eq!(p.minus, vec![0, 1]);
    }
}
