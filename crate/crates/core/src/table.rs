//! The observed `(X, Y, Z)` cross-classification and the deviance of the
//! independence model `(XY)(YZ)`.
//!
//! Cells are addressed with 0-based `(x, y, z)` indices; `z = 1` is the audit
//! layer. Storage is row-major over `(x, y)` with the two `z` layers adjacent.
//!
//! Audit inclusion is unproblematic when it depends on `X` only through `Y`,
//! i.e. when `Pr(Z = 1 | X, Y) = Pr(Z = 1 | Y)`. The deviance measures the
//! departure from that requirement in the observed table. When the true
//! variable `W` has no direct association with `Z` given `(X, Y)`, the
//! conditional deviance of the `W`-augmented models reduces to the same
//! quantity, so only `(X, Y, Z)` needs to be analysed.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::xlogx;
use crate::{Error, Result};

/// Numerical slack below zero tolerated for real-valued counts.
pub const NEGATIVE_SLACK: f64 = 1e-9;

/// Integer counts `n_ijk` over `I` categories of `X`, `J` of `Y` and the audit flag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ContingencyTable3 {
    x_categories: usize,
    y_categories: usize,
    counts: Vec<u64>,
}

#[inline]
pub(crate) fn cell_index(y_categories: usize, x: usize, y: usize, z: usize) -> usize {
    (x * y_categories + y) * 2 + z
}

impl ContingencyTable3 {
    /// Builds a table from a flat buffer laid out as `[(x * J + y) * 2 + z]`.
    pub fn new(x_categories: usize, y_categories: usize, counts: Vec<u64>) -> Result<Self> {
        if x_categories == 0 || y_categories == 0 || counts.len() != x_categories * y_categories * 2
        {
            return Err(Error::InvalidDimensions {
                x_categories,
                y_categories,
            });
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::EmptyTable);
        }
        Ok(Self {
            x_categories,
            y_categories,
            counts,
        })
    }

    /// Builds a table from `counts[x][y] = [n_xy0, n_xy1]`.
    pub fn from_nested(counts: &[Vec<[u64; 2]>]) -> Result<Self> {
        let x_categories = counts.len();
        let y_categories = counts.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(x_categories * y_categories * 2);
        for row in counts {
            if row.len() != y_categories {
                return Err(Error::InvalidDimensions {
                    x_categories,
                    y_categories,
                });
            }
            for cell in row {
                flat.extend_from_slice(cell);
            }
        }
        Self::new(x_categories, y_categories, flat)
    }

    /// Tabulates `(x, y, z)` triples (0-based) into a table.
    pub fn tabulate<I>(x_categories: usize, y_categories: usize, units: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, bool)>,
    {
        let mut counts = vec![0u64; x_categories * y_categories * 2];
        for (x, y, z) in units {
            if x >= x_categories || y >= y_categories {
                return Err(Error::InvalidDimensions {
                    x_categories,
                    y_categories,
                });
            }
            counts[cell_index(y_categories, x, y, z as usize)] += 1;
        }
        Self::new(x_categories, y_categories, counts)
    }

    pub fn x_categories(&self) -> usize {
        self.x_categories
    }

    pub fn y_categories(&self) -> usize {
        self.y_categories
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    #[inline]
    pub fn count(&self, x: usize, y: usize, z: usize) -> u64 {
        self.counts[cell_index(self.y_categories, x, y, z)]
    }

    /// `n_ij+`.
    pub fn stratum_total(&self, x: usize, y: usize) -> u64 {
        self.count(x, y, 0) + self.count(x, y, 1)
    }

    /// `n_+jk`.
    pub fn layer_total(&self, y: usize, z: usize) -> u64 {
        (0..self.x_categories).map(|x| self.count(x, y, z)).sum()
    }

    /// `n_+j+`.
    pub fn y_total(&self, y: usize) -> u64 {
        self.layer_total(y, 0) + self.layer_total(y, 1)
    }

    /// `N`.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Size of the current audit sample, `n = sum n_ij1`.
    pub fn audit_size(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).sum()
    }

    /// Degrees of freedom of the independence model, `J (I - 1)`.
    pub fn degrees_of_freedom(&self) -> usize {
        self.y_categories * (self.x_categories - 1)
    }

    pub fn counts_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// Independence-model fitted counts `n_ij+ n_+jk / n_+j+`.
    pub fn fitted_counts(&self) -> Vec<f64> {
        fitted_from_counts(self.x_categories, self.y_categories, &self.counts_f64())
    }

    /// The part of the deviance that depends only on the `(X, Y)` margins.
    pub fn constant_term(&self) -> f64 {
        constant_from_counts(self.x_categories, self.y_categories, &self.counts_f64())
    }

    pub fn deviance(&self) -> f64 {
        deviance_explicit(self.x_categories, self.y_categories, &self.counts_f64())
    }

    /// Deviance evaluated against the fitted counts rather than through the margins.
    pub fn likelihood_ratio_deviance(&self) -> f64 {
        deviance_via_fitted(self.x_categories, self.y_categories, &self.counts_f64())
    }
}

/// A base table with real-valued moves `delta_plus` (from `z = 0` to `z = 1`)
/// and `delta_minus` (from `z = 1` to `z = 0`) per `(x, y)` stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedTable {
    base: ContingencyTable3,
    delta_plus: Vec<f64>,
    delta_minus: Vec<f64>,
}

impl AdjustedTable {
    /// Checks `0 <= delta_plus <= n_ij0` and `0 <= delta_minus <= n_ij1` with
    /// [`NEGATIVE_SLACK`] tolerance. Deltas are indexed `x * J + y`.
    pub fn new(
        base: ContingencyTable3,
        delta_plus: Vec<f64>,
        delta_minus: Vec<f64>,
    ) -> Result<Self> {
        let strata = base.x_categories * base.y_categories;
        if delta_plus.len() != strata || delta_minus.len() != strata {
            return Err(Error::InvalidDimensions {
                x_categories: base.x_categories,
                y_categories: base.y_categories,
            });
        }
        for x in 0..base.x_categories {
            for y in 0..base.y_categories {
                let s = x * base.y_categories + y;
                let (dp, dm) = (delta_plus[s], delta_minus[s]);
                let ok = dp.is_finite()
                    && dm.is_finite()
                    && dp >= -NEGATIVE_SLACK
                    && dm >= -NEGATIVE_SLACK
                    && dp <= base.count(x, y, 0) as f64 + NEGATIVE_SLACK
                    && dm <= base.count(x, y, 1) as f64 + NEGATIVE_SLACK;
                if !ok {
                    return Err(Error::InfeasibleAdjustment { x, y });
                }
            }
        }
        Ok(Self {
            base,
            delta_plus,
            delta_minus,
        })
    }

    /// The unadjusted table.
    pub fn identity(base: ContingencyTable3) -> Self {
        let strata = base.x_categories * base.y_categories;
        Self {
            base,
            delta_plus: vec![0.0; strata],
            delta_minus: vec![0.0; strata],
        }
    }

    pub fn base(&self) -> &ContingencyTable3 {
        &self.base
    }

    pub fn delta_plus(&self) -> &[f64] {
        &self.delta_plus
    }

    pub fn delta_minus(&self) -> &[f64] {
        &self.delta_minus
    }

    /// Total number of moved units, `sum (delta_plus + delta_minus)`.
    pub fn total_moves(&self) -> f64 {
        self.delta_plus.iter().sum::<f64>() + self.delta_minus.iter().sum::<f64>()
    }

    /// `m_ijk` in the same layout as the base counts.
    pub fn adjusted_counts(&self) -> Vec<f64> {
        let j = self.base.y_categories;
        let mut m = self.base.counts_f64();
        for (s, (&dp, &dm)) in self.delta_plus.iter().zip(&self.delta_minus).enumerate() {
            let net = dp - dm;
            m[s * 2 + 1] += net;
            m[s * 2] -= net;
        }
        debug_assert_eq!(m.len(), self.base.x_categories * j * 2);
        m
    }

    pub fn deviance(&self) -> f64 {
        deviance_explicit(
            self.base.x_categories,
            self.base.y_categories,
            &self.adjusted_counts(),
        )
    }
}

/// Deviance of the independence model for real-valued counts in table layout.
///
/// Rejects counts below `-1e-9`; tiny negative counts inside the slack are
/// treated as zero.
pub fn deviance_from_counts(
    x_categories: usize,
    y_categories: usize,
    counts: &[f64],
) -> Result<f64> {
    if x_categories == 0 || y_categories == 0 || counts.len() != x_categories * y_categories * 2 {
        return Err(Error::InvalidDimensions {
            x_categories,
            y_categories,
        });
    }
    for x in 0..x_categories {
        for y in 0..y_categories {
            for z in 0..2 {
                let v = counts[cell_index(y_categories, x, y, z)];
                if !(v >= -NEGATIVE_SLACK) {
                    return Err(Error::NegativeCount { x, y, z, value: v });
                }
            }
        }
    }
    Ok(deviance_explicit(x_categories, y_categories, counts))
}

/// `C = 2 sum_j n_+j+ ln n_+j+ - 2 sum_ij n_ij+ ln n_ij+`.
pub(crate) fn constant_from_counts(x_categories: usize, y_categories: usize, m: &[f64]) -> f64 {
    let mut c = 0.0;
    for y in 0..y_categories {
        let mut y_total = 0.0;
        for x in 0..x_categories {
            let s = m[cell_index(y_categories, x, y, 0)] + m[cell_index(y_categories, x, y, 1)];
            y_total += s;
            c -= xlogx(s);
        }
        c += xlogx(y_total);
    }
    2.0 * c
}

/// `D = C + 2 sum m ln m - 2 sum m_+jk ln m_+jk`, clamped at zero within slack.
pub(crate) fn deviance_explicit(x_categories: usize, y_categories: usize, m: &[f64]) -> f64 {
    let mut d = 0.0;
    for y in 0..y_categories {
        let (mut l0, mut l1) = (0.0, 0.0);
        let mut cells = 0.0;
        let mut strata = 0.0;
        for x in 0..x_categories {
            let a = m[cell_index(y_categories, x, y, 0)].max(0.0);
            let b = m[cell_index(y_categories, x, y, 1)].max(0.0);
            l0 += a;
            l1 += b;
            cells += xlogx(a) + xlogx(b);
            strata += xlogx(a + b);
        }
        d += cells - strata - xlogx(l0) - xlogx(l1) + xlogx(l0 + l1);
    }
    clamp_deviance(2.0 * d)
}

#[inline]
pub(crate) fn clamp_deviance(d: f64) -> f64 {
    // D >= 0 analytically; negative values are cancellation error.
    if d < 0.0 {
        0.0
    } else {
        d
    }
}

pub(crate) fn fitted_from_counts(x_categories: usize, y_categories: usize, m: &[f64]) -> Vec<f64> {
    let mut fitted = vec![0.0; m.len()];
    for y in 0..y_categories {
        let mut layer = [0.0f64; 2];
        for x in 0..x_categories {
            for (z, l) in layer.iter_mut().enumerate() {
                *l += m[cell_index(y_categories, x, y, z)];
            }
        }
        let y_total = layer[0] + layer[1];
        if y_total <= 0.0 {
            continue;
        }
        for x in 0..x_categories {
            let s = m[cell_index(y_categories, x, y, 0)] + m[cell_index(y_categories, x, y, 1)];
            for (z, l) in layer.iter().enumerate() {
                fitted[cell_index(y_categories, x, y, z)] = s * l / y_total;
            }
        }
    }
    fitted
}

pub(crate) fn deviance_via_fitted(x_categories: usize, y_categories: usize, m: &[f64]) -> f64 {
    let fitted = fitted_from_counts(x_categories, y_categories, m);
    let d: f64 = m
        .iter()
        .zip(&fitted)
        .filter(|(&o, _)| o > 0.0)
        .map(|(&o, &e)| o * crate::math::ln(o / e))
        .sum();
    clamp_deviance(2.0 * d)
}
