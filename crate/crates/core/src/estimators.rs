//! Stratified estimators from an audited sample.
//!
//! With known population shares `P_y` of the background strata, the share of
//! true category `w` is estimated by `sum_y P_y p(w | y)` and the measurement
//! error probability `P(X = x | W = w)` by the combined ratio
//! `sum_y P_y p(w, x | y) / sum_y P_y p(w | y)`, where `p(. | y)` are plain
//! sample proportions within stratum `y`. Variances treat the audit sample as
//! a stratified simple random sample with `Y` as the stratifier, conditional
//! on the realized stratum sizes, and without finite population correction.
//!
//! Under an optimized design these variances tend to be conservative.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;
use crate::{Error, Result};

/// Known population proportions of the `Y` strata.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationMargins {
    proportions: Vec<f64>,
}

impl PopulationMargins {
    pub fn new(proportions: Vec<f64>) -> Result<Self> {
        let sum: f64 = proportions.iter().sum();
        if proportions.is_empty()
            || proportions.iter().any(|&p| !(p >= 0.0) || !p.is_finite())
            || (sum - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidMargins);
        }
        Ok(Self { proportions })
    }

    /// Proportions from population counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidMargins);
        }
        Self::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    pub fn proportions(&self) -> &[f64] {
        &self.proportions
    }

    pub fn len(&self) -> usize {
        self.proportions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proportions.is_empty()
    }
}

/// One audited unit: true category `w`, observed category `x`, stratum `y` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AuditedRecord {
    pub w: usize,
    pub x: usize,
    pub y: usize,
}

/// Cross-tabulated audit sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditedData {
    w_categories: usize,
    x_categories: usize,
    y_categories: usize,
    /// `n_y`.
    stratum_sizes: Vec<u64>,
    /// Counts indexed `(w * I + x) * J + y`.
    counts: Vec<u64>,
}

impl AuditedData {
    pub fn new(
        records: &[AuditedRecord],
        w_categories: usize,
        x_categories: usize,
        y_categories: usize,
    ) -> Result<Self> {
        if records.is_empty() || w_categories == 0 || x_categories == 0 || y_categories == 0 {
            return Err(Error::InvalidDimensions {
                x_categories,
                y_categories,
            });
        }
        let mut counts = vec![0u64; w_categories * x_categories * y_categories];
        let mut stratum_sizes = vec![0u64; y_categories];
        for r in records {
            if r.w >= w_categories || r.x >= x_categories || r.y >= y_categories {
                return Err(Error::InvalidDimensions {
                    x_categories,
                    y_categories,
                });
            }
            counts[(r.w * x_categories + r.x) * y_categories + r.y] += 1;
            stratum_sizes[r.y] += 1;
        }
        Ok(Self {
            w_categories,
            x_categories,
            y_categories,
            stratum_sizes,
            counts,
        })
    }

    /// Infers the number of `W` and `X` categories from the records.
    pub fn from_records(records: &[AuditedRecord], y_categories: usize) -> Result<Self> {
        let h = records.iter().map(|r| r.w + 1).max().unwrap_or(0);
        let i = records.iter().map(|r| r.x + 1).max().unwrap_or(0);
        Self::new(records, h, i, y_categories)
    }

    pub fn w_categories(&self) -> usize {
        self.w_categories
    }

    pub fn x_categories(&self) -> usize {
        self.x_categories
    }

    pub fn y_categories(&self) -> usize {
        self.y_categories
    }

    pub fn stratum_sizes(&self) -> &[u64] {
        &self.stratum_sizes
    }

    pub fn sample_size(&self) -> u64 {
        self.stratum_sizes.iter().sum()
    }

    fn joint(&self, w: usize, x: usize, y: usize) -> u64 {
        self.counts[(w * self.x_categories + x) * self.y_categories + y]
    }

    /// `p(w | y)`; zero for an empty stratum.
    pub fn p_w_given_y(&self, w: usize, y: usize) -> f64 {
        let n = self.stratum_sizes[y];
        if n == 0 {
            return 0.0;
        }
        let c: u64 = (0..self.x_categories).map(|x| self.joint(w, x, y)).sum();
        c as f64 / n as f64
    }

    /// `p(w, x | y)`; zero for an empty stratum.
    pub fn p_wx_given_y(&self, w: usize, x: usize, y: usize) -> f64 {
        let n = self.stratum_sizes[y];
        if n == 0 {
            return 0.0;
        }
        self.joint(w, x, y) as f64 / n as f64
    }
}

fn check(data: &AuditedData, margins: &PopulationMargins) -> Result<()> {
    if margins.len() != data.y_categories {
        return Err(Error::InvalidMargins);
    }
    let empty: Vec<usize> = (0..data.y_categories)
        .filter(|&y| margins.proportions[y] > 0.0 && data.stratum_sizes[y] == 0)
        .collect();
    if !empty.is_empty() {
        return Err(Error::EmptyStrata(empty));
    }
    Ok(())
}

/// Weighted sum `sum_y P_y f(y)` over strata with positive share.
fn stratified(data: &AuditedData, margins: &PopulationMargins, f: impl Fn(usize) -> f64) -> f64 {
    (0..data.y_categories)
        .filter(|&y| margins.proportions[y] > 0.0)
        .map(|y| margins.proportions[y] * f(y))
        .sum()
}

/// Weighted sum `sum_y P_y^2 / n_y f(y)` over strata with positive share.
fn stratified_variance(
    data: &AuditedData,
    margins: &PopulationMargins,
    f: impl Fn(usize) -> f64,
) -> f64 {
    (0..data.y_categories)
        .filter(|&y| margins.proportions[y] > 0.0)
        .map(|y| {
            let p = margins.proportions[y];
            p * p / data.stratum_sizes[y] as f64 * f(y)
        })
        .sum()
}

/// Estimated share of every true category `w`.
pub fn estimate_pw(data: &AuditedData, margins: &PopulationMargins) -> Result<Vec<f64>> {
    check(data, margins)?;
    Ok((0..data.w_categories)
        .map(|w| stratified(data, margins, |y| data.p_w_given_y(w, y)))
        .collect())
}

/// Combined ratio estimates of `P(X = x | W = w)`, indexed `[w][x]`; `None`
/// where the estimated share of `w` is zero.
pub fn estimate_px_given_w(
    data: &AuditedData,
    margins: &PopulationMargins,
) -> Result<Vec<Vec<Option<f64>>>> {
    let pw = estimate_pw(data, margins)?;
    Ok((0..data.w_categories)
        .map(|w| {
            (0..data.x_categories)
                .map(|x| {
                    (pw[w] > 0.0)
                        .then(|| stratified(data, margins, |y| data.p_wx_given_y(w, x, y)) / pw[w])
                })
                .collect()
        })
        .collect())
}

/// Stratified variance of each estimated share.
pub fn variance_pw(data: &AuditedData, margins: &PopulationMargins) -> Result<Vec<f64>> {
    check(data, margins)?;
    Ok((0..data.w_categories)
        .map(|w| {
            stratified_variance(data, margins, |y| {
                let p = data.p_w_given_y(w, y);
                p * (1.0 - p)
            })
        })
        .collect())
}

/// Linearized variance of each combined ratio estimate, indexed `[w][x]`,
/// with the number of negative rounding results clamped to zero.
fn variance_px_given_w_counted(
    data: &AuditedData,
    margins: &PopulationMargins,
) -> Result<(Vec<Vec<Option<f64>>>, usize)> {
    let pw = estimate_pw(data, margins)?;
    let ratios = estimate_px_given_w(data, margins)?;
    let mut clamped = 0;
    let table = (0..data.w_categories)
        .map(|w| {
            (0..data.x_categories)
                .map(|x| {
                    let r = ratios[w][x]?;
                    let v = stratified_variance(data, margins, |y| {
                        let a = data.p_wx_given_y(w, x, y);
                        let b = data.p_w_given_y(w, y);
                        a * (1.0 - a) + r * r * b * (1.0 - b) - 2.0 * r * a * (1.0 - b)
                    }) / (pw[w] * pw[w]);
                    if v < 0.0 {
                        if v < -1e-12 {
                            clamped += 1;
                        }
                        Some(0.0)
                    } else {
                        Some(v)
                    }
                })
                .collect()
        })
        .collect();
    Ok((table, clamped))
}

pub fn variance_px_given_w(
    data: &AuditedData,
    margins: &PopulationMargins,
) -> Result<Vec<Vec<Option<f64>>>> {
    variance_px_given_w_counted(data, margins).map(|(v, _)| v)
}

/// A point estimate with its estimated variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub variance: f64,
}

impl Estimate {
    pub fn std_error(&self) -> f64 {
        sqrt(self.variance.max(0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    /// Estimated share of each true category.
    pub pw: Vec<Estimate>,
    /// Estimated `P(X = x | W = w)` indexed `[w][x]`; `None` when the share of `w` is zero.
    pub px_given_w: Vec<Vec<Option<Estimate>>>,
    pub stratum_sizes: Vec<u64>,
    /// Strata without audited units (all have zero population share).
    pub empty_strata: Vec<usize>,
    /// Strata with a single audited unit, where the variance is degenerate.
    pub thin_strata: Vec<usize>,
    /// Count of ratio variances that came out negative beyond `-1e-12` and were clamped.
    pub clamped_variances: usize,
}

/// All estimates and variances in one report.
pub fn estimate(data: &AuditedData, margins: &PopulationMargins) -> Result<EstimateReport> {
    let pw_values = estimate_pw(data, margins)?;
    let pw_var = variance_pw(data, margins)?;
    let ratios = estimate_px_given_w(data, margins)?;
    let (ratio_var, clamped_variances) = variance_px_given_w_counted(data, margins)?;
    let pw = pw_values
        .iter()
        .zip(&pw_var)
        .map(|(&value, &variance)| Estimate { value, variance })
        .collect();
    let px_given_w = ratios
        .iter()
        .zip(&ratio_var)
        .map(|(row, vrow)| {
            row.iter()
                .zip(vrow)
                .map(|(r, v)| {
                    Some(Estimate {
                        value: (*r)?,
                        variance: (*v)?,
                    })
                })
                .collect()
        })
        .collect();
    Ok(EstimateReport {
        pw,
        px_given_w,
        stratum_sizes: data.stratum_sizes.clone(),
        empty_strata: (0..data.y_categories)
            .filter(|&y| data.stratum_sizes[y] == 0)
            .collect(),
        thin_strata: (0..data.y_categories)
            .filter(|&y| data.stratum_sizes[y] == 1)
            .collect(),
        clamped_variances,
    })
}
