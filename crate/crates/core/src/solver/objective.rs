//! Objective functions over `(delta_plus, delta_minus)` and their gradients.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{exp, ln};
use crate::table::{AdjustedTable, ContingencyTable3, NEGATIVE_SLACK};
use crate::{Error, Result};

/// Which function of the adjusted table is minimized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// The deviance `D(m)` itself.
    Deviance,
    /// `D(m) + lambda * sum(delta_plus + delta_minus)`.
    LinearPenalty { lambda: f64 },
    /// `D(m) + exp(-D(m) / kappa) * sum(delta_plus + delta_minus)`.
    ///
    /// The penalty only matters once `D` is small relative to `kappa`.
    ExponentialPenalty { kappa: f64 },
}

/// Default `lambda` for [`Objective::LinearPenalty`].
pub const DEFAULT_LAMBDA: f64 = 0.01;

impl Objective {
    /// Exponential penalty with `kappa = cutoff / 10`, so that `D / kappa > 10`
    /// for every rejected table.
    pub fn exponential_for_cutoff(cutoff: f64) -> Self {
        Objective::ExponentialPenalty {
            kappa: cutoff / 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Objective::Deviance => Ok(()),
            Objective::LinearPenalty { lambda } if lambda > 0.0 && lambda.is_finite() => Ok(()),
            Objective::LinearPenalty { .. } => Err(Error::InvalidConfig("lambda")),
            Objective::ExponentialPenalty { kappa } if kappa > 0.0 && kappa.is_finite() => Ok(()),
            Objective::ExponentialPenalty { .. } => Err(Error::InvalidConfig("kappa")),
        }
    }

    #[inline]
    pub(crate) fn value(&self, deviance: f64, moves: f64) -> f64 {
        match *self {
            Objective::Deviance => deviance,
            Objective::LinearPenalty { lambda } => deviance + lambda * moves,
            Objective::ExponentialPenalty { kappa } => deviance + exp(-deviance / kappa) * moves,
        }
    }

    /// Partial derivative with respect to one delta, given that delta's
    /// partial of the deviance. Each delta enters `moves` with coefficient one.
    #[inline]
    pub(crate) fn partial(&self, deviance: f64, moves: f64, d_deviance: f64) -> f64 {
        match *self {
            Objective::Deviance => d_deviance,
            Objective::LinearPenalty { lambda } => d_deviance + lambda,
            Objective::ExponentialPenalty { kappa } => {
                d_deviance + exp(-deviance / kappa) * (1.0 - d_deviance * moves / kappa)
            }
        }
    }
}

/// Per-stratum counts of a base table, indexed `s = x * J + y`.
#[derive(Debug, Clone)]
pub(crate) struct Evaluator {
    pub x_categories: usize,
    pub y_categories: usize,
    pub n0: Vec<f64>,
    pub n1: Vec<f64>,
}

impl Evaluator {
    pub fn new(table: &ContingencyTable3) -> Self {
        let (xc, yc) = (table.x_categories(), table.y_categories());
        let mut n0 = Vec::with_capacity(xc * yc);
        let mut n1 = Vec::with_capacity(xc * yc);
        for x in 0..xc {
            for y in 0..yc {
                n0.push(table.count(x, y, 0) as f64);
                n1.push(table.count(x, y, 1) as f64);
            }
        }
        Self {
            x_categories: xc,
            y_categories: yc,
            n0,
            n1,
        }
    }

    pub fn strata(&self) -> usize {
        self.n0.len()
    }

    #[inline]
    pub fn adjusted(&self, s: usize, dp: &[f64], dm: &[f64]) -> (f64, f64) {
        let net = dp[s] - dm[s];
        ((self.n0[s] - net).max(0.0), (self.n1[s] + net).max(0.0))
    }

    /// Layer totals `(m_+j0, m_+j1)`.
    pub fn layers(&self, y: usize, dp: &[f64], dm: &[f64]) -> (f64, f64) {
        let mut l = (0.0, 0.0);
        for x in 0..self.x_categories {
            let (a, b) = self.adjusted(x * self.y_categories + y, dp, dm);
            l.0 += a;
            l.1 += b;
        }
        l
    }

    /// Contribution of stratum `Y = y` to the deviance, evaluated as
    /// `2 sum m ln(m / fitted)` so that large, nearly independent tables do
    /// not lose precision to cancellation.
    pub fn y_deviance(&self, y: usize, dp: &[f64], dm: &[f64]) -> f64 {
        let (l0, l1) = self.layers(y, dp, dm);
        let total = l0 + l1;
        if total <= 0.0 {
            return 0.0;
        }
        let mut d = 0.0;
        for x in 0..self.x_categories {
            let (a, b) = self.adjusted(x * self.y_categories + y, dp, dm);
            let row = a + b;
            if a > 0.0 {
                d += a * ln(a * total / (row * l0));
            }
            if b > 0.0 {
                d += b * ln(b * total / (row * l1));
            }
        }
        2.0 * d
    }

    pub fn deviance(&self, dp: &[f64], dm: &[f64]) -> f64 {
        let d: f64 = (0..self.y_categories)
            .map(|y| self.y_deviance(y, dp, dm))
            .sum();
        d.max(0.0)
    }

    /// First stratum holding units with an empty adjusted cell, if any.
    pub fn boundary_stratum(&self, dp: &[f64], dm: &[f64]) -> Option<usize> {
        (0..self.strata()).find(|&s| {
            let (a, b) = self.adjusted(s, dp, dm);
            self.n0[s] + self.n1[s] > 0.0 && (a <= 0.0 || b <= 0.0)
        })
    }

    /// Deviance gradient with respect to `delta_plus`, per stratum; the
    /// `delta_minus` gradient is its negation. Also returns the diagonal of
    /// the deviance Hessian. Strata with an empty adjusted cell get zeros.
    pub fn deviance_gradient(&self, dp: &[f64], dm: &[f64], grad: &mut [f64], hess: &mut [f64]) {
        let yc = self.y_categories;
        for y in 0..yc {
            let (l0, l1) = self.layers(y, dp, dm);
            for x in 0..self.x_categories {
                let s = x * yc + y;
                let (a, b) = self.adjusted(s, dp, dm);
                if a <= 0.0 || b <= 0.0 {
                    grad[s] = 0.0;
                    hess[s] = 0.0;
                    continue;
                }
                grad[s] = 2.0 * (ln(b) - ln(a) - ln(l1) + ln(l0));
                let exact = 2.0 * (1.0 / a + 1.0 / b - 1.0 / l0 - 1.0 / l1);
                hess[s] = exact.max(0.02 * (1.0 / a + 1.0 / b));
            }
        }
    }
}

/// Gradient over every stratum, indexed `x * J + y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub delta_plus: Vec<f64>,
    pub delta_minus: Vec<f64>,
}

fn moves(dp: &[f64], dm: &[f64]) -> f64 {
    dp.iter().sum::<f64>() + dm.iter().sum::<f64>()
}

/// Objective value of a (per-cell feasible) adjusted table.
pub fn objective(adjusted: &AdjustedTable, kind: Objective) -> f64 {
    let eval = Evaluator::new(adjusted.base());
    let (dp, dm) = (adjusted.delta_plus(), adjusted.delta_minus());
    kind.value(eval.deviance(dp, dm), moves(dp, dm))
}

/// Objective value for raw deltas, checked against the per-cell bounds and,
/// when given, the total bounds `(M+, M-)`.
pub fn objective_at(
    base: &ContingencyTable3,
    delta_plus: &[f64],
    delta_minus: &[f64],
    totals: Option<(u64, u64)>,
    kind: Objective,
) -> Result<f64> {
    let adjusted = AdjustedTable::new(base.clone(), delta_plus.to_vec(), delta_minus.to_vec())?;
    if let Some((mp, mm)) = totals {
        let sp: f64 = delta_plus.iter().sum();
        let sm: f64 = delta_minus.iter().sum();
        if sp > mp as f64 + NEGATIVE_SLACK || sm > mm as f64 + NEGATIVE_SLACK {
            return Err(Error::InfeasibleAdjustment { x: 0, y: 0 });
        }
    }
    Ok(objective(&adjusted, kind))
}

/// Analytic gradient of the objective with respect to every delta.
///
/// Strata without units get zero entries. A stratum holding units must have
/// both adjusted cells strictly positive.
pub fn gradient(adjusted: &AdjustedTable, kind: Objective) -> Result<Gradient> {
    let eval = Evaluator::new(adjusted.base());
    let (dp, dm) = (adjusted.delta_plus(), adjusted.delta_minus());
    let mut g = vec![0.0; eval.strata()];
    let mut h = vec![0.0; eval.strata()];
    if let Some(s) = eval.boundary_stratum(dp, dm) {
        let yc = eval.y_categories;
        return Err(Error::BoundaryPoint {
            x: s / yc,
            y: s % yc,
        });
    }
    eval.deviance_gradient(dp, dm, &mut g, &mut h);
    let d = eval.deviance(dp, dm);
    let total = moves(dp, dm);
    let populated = |s: usize| eval.n0[s] + eval.n1[s] > 0.0;
    let delta_plus = (0..g.len())
        .map(|s| {
            if populated(s) {
                kind.partial(d, total, g[s])
            } else {
                0.0
            }
        })
        .collect();
    let delta_minus = (0..g.len())
        .map(|s| {
            if populated(s) {
                kind.partial(d, total, -g[s])
            } else {
                0.0
            }
        })
        .collect();
    Ok(Gradient {
        delta_plus,
        delta_minus,
    })
}
