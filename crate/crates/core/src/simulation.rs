//! Simulation study: synthetic populations with known `W`, the full
//! select-realize-estimate pipeline per replicate, and summary metrics.
//!
//! Populations follow the log-linear model `(WX)(WY)(XZ)`: the joint
//! probability of `(w, x, y, z)` is proportional to the product of three
//! bivariate blocks, one per relation, each available in four strengths.
//! `X`, `Y` and `W` have three categories each.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::estimators::{self, AuditedData, AuditedRecord, Estimate, PopulationMargins};
use crate::rng::{self, derive_seed, domain};
use crate::sampler::{realize, UnitRecord};
use crate::solver::{optimize, AuditPlan, SolverConfig};
use crate::table::ContingencyTable3;
use crate::{Error, Result};

pub const CATEGORIES: usize = 3;

type Block3 = [[f64; 3]; 3];

/// `Z x X` blocks; the audit row is what varies.
const XZ_BLOCKS: [[[f64; 3]; 2]; 4] = [
    [[0.323, 0.323, 0.323], [0.010, 0.010, 0.010]],
    [[0.323, 0.323, 0.323], [0.012, 0.010, 0.008]],
    [[0.323, 0.323, 0.323], [0.015, 0.010, 0.005]],
    [[0.323, 0.323, 0.323], [0.018, 0.010, 0.002]],
];

/// `X x W` blocks.
const WX_BLOCKS: [Block3; 4] = [
    [[0.333, 0.0, 0.0], [0.0, 0.333, 0.0], [0.0, 0.0, 0.333]],
    [
        [0.267, 0.033, 0.033],
        [0.033, 0.267, 0.033],
        [0.033, 0.033, 0.267],
    ],
    [
        [0.333, 0.0, 0.0],
        [0.017, 0.300, 0.017],
        [0.033, 0.033, 0.267],
    ],
    [
        [0.300, 0.017, 0.017],
        [0.033, 0.267, 0.033],
        [0.050, 0.050, 0.233],
    ],
];

/// `Y x W` blocks.
const WY_BLOCKS: [Block3; 4] = [
    [
        [0.267, 0.033, 0.033],
        [0.033, 0.267, 0.033],
        [0.033, 0.033, 0.267],
    ],
    [
        [0.200, 0.067, 0.067],
        [0.067, 0.200, 0.067],
        [0.067, 0.067, 0.267],
    ],
    [
        [0.300, 0.017, 0.017],
        [0.033, 0.267, 0.033],
        [0.050, 0.050, 0.233],
    ],
    [
        [0.267, 0.033, 0.033],
        [0.067, 0.200, 0.067],
        [0.100, 0.100, 0.133],
    ],
];

/// The three bivariate blocks that define a population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blocks {
    /// `xz[z][x]`.
    pub xz: [[f64; 3]; 2],
    /// `wx[x][w]`.
    pub wx: Block3,
    /// `wy[y][w]`.
    pub wy: Block3,
}

/// A simulation condition: one strength level (1 to 4) per relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Condition {
    pub wx: u8,
    pub wy: u8,
    pub xz: u8,
}

impl Condition {
    pub fn new(wx: u8, wy: u8, xz: u8) -> Result<Self> {
        let ok = |v: u8| (1..=4).contains(&v);
        if !(ok(wx) && ok(wy) && ok(xz)) {
            return Err(Error::InvalidConfig("condition"));
        }
        Ok(Self { wx, wy, xz })
    }

    /// Parses labels like `WX1,WY1,XZ4` (any order, case-insensitive).
    pub fn parse(label: &str) -> Result<Self> {
        let (mut wx, mut wy, mut xz) = (None, None, None);
        for part in label.split(',') {
            let part = part.trim().to_ascii_uppercase();
            let (name, level) = part.split_at(part.len().min(2));
            let level: u8 = level
                .parse()
                .map_err(|_| Error::InvalidConfig("condition"))?;
            match name {
                "WX" => wx = Some(level),
                "WY" => wy = Some(level),
                "XZ" => xz = Some(level),
                _ => return Err(Error::InvalidConfig("condition")),
            }
        }
        match (wx, wy, xz) {
            (Some(a), Some(b), Some(c)) => Self::new(a, b, c),
            _ => Err(Error::InvalidConfig("condition")),
        }
    }

    pub fn label(&self) -> String {
        format!("WX{},WY{},XZ{}", self.wx, self.wy, self.xz)
    }

    pub fn blocks(&self) -> Blocks {
        Blocks {
            xz: XZ_BLOCKS[self.xz as usize - 1],
            wx: WX_BLOCKS[self.wx as usize - 1],
            wy: WY_BLOCKS[self.wy as usize - 1],
        }
    }
}

/// Probabilities over `(w, x, y, z)`, indexed `((w * 3 + x) * 3 + y) * 2 + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    probs: Vec<f64>,
}

#[inline]
pub fn joint_index(w: usize, x: usize, y: usize, z: usize) -> usize {
    ((w * CATEGORIES + x) * CATEGORIES + y) * 2 + z
}

/// Multiplies the three blocks cell by cell and normalizes to one.
pub fn build_joint(blocks: &Blocks) -> Result<JointDistribution> {
    let entries = blocks
        .xz
        .iter()
        .flatten()
        .chain(blocks.wx.iter().flatten())
        .chain(blocks.wy.iter().flatten());
    if entries.clone().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::ZeroMass);
    }
    let mut probs = vec![0.0; CATEGORIES * CATEGORIES * CATEGORIES * 2];
    for w in 0..CATEGORIES {
        for x in 0..CATEGORIES {
            for y in 0..CATEGORIES {
                for z in 0..2 {
                    probs[joint_index(w, x, y, z)] =
                        blocks.xz[z][x] * blocks.wx[x][w] * blocks.wy[y][w];
                }
            }
        }
    }
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(JointDistribution { probs })
}

impl JointDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, w: usize, x: usize, y: usize, z: usize) -> f64 {
        self.probs[joint_index(w, x, y, z)]
    }

    /// Marginal `Pr(Z = 1)`.
    pub fn audit_fraction(&self) -> f64 {
        self.probs.iter().skip(1).step_by(2).sum()
    }

    fn cumulative(&self, keep_z: bool) -> Vec<f64> {
        let mut acc = 0.0;
        if keep_z {
            self.probs
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect()
        } else {
            self.probs
                .chunks(2)
                .map(|c| {
                    acc += c[0] + c[1];
                    acc
                })
                .collect()
        }
    }
}

/// One synthetic unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimUnit {
    pub w: usize,
    pub x: usize,
    pub y: usize,
    pub z: bool,
}

fn sample_cell<R: Rng>(rng: &mut R, cumulative: &[f64]) -> usize {
    let u: f64 = rng.gen::<f64>() * cumulative[cumulative.len() - 1];
    cumulative
        .partition_point(|&c| c <= u)
        .min(cumulative.len() - 1)
}

/// Draws `size` independent units from the joint distribution.
pub fn draw_population<R: Rng>(
    joint: &JointDistribution,
    size: usize,
    rng: &mut R,
) -> Vec<SimUnit> {
    let cumulative = joint.cumulative(true);
    (0..size)
        .map(|_| {
            let c = sample_cell(rng, &cumulative);
            let z = c % 2 == 1;
            let c = c / 2;
            SimUnit {
                w: c / 9,
                x: (c / 3) % 3,
                y: c % 3,
                z,
            }
        })
        .collect()
}

/// Draws `(w, x, y)` from the joint with `Z` summed out; `z` is left false.
pub fn draw_fixed_population<R: Rng>(
    joint: &JointDistribution,
    size: usize,
    rng: &mut R,
) -> Vec<SimUnit> {
    let cumulative = joint.cumulative(false);
    (0..size)
        .map(|_| {
            let c = sample_cell(rng, &cumulative);
            SimUnit {
                w: c / 9,
                x: (c / 3) % 3,
                y: c % 3,
                z: false,
            }
        })
        .collect()
}

/// Draws a fresh audit flag for every unit with `Pr(Z = 1 | X = x)` taken
/// from the `Z x X` block.
pub fn draw_audit_flags<R: Rng>(units: &mut [SimUnit], xz: &[[f64; 3]; 2], rng: &mut R) {
    for u in units {
        let pi = xz[1][u.x] / (xz[0][u.x] + xz[1][u.x]);
        u.z = rng.gen::<f64>() < pi;
    }
}

/// `(X, Y, Z)` table of a population.
pub fn observed_table(units: &[SimUnit]) -> Result<ContingencyTable3> {
    ContingencyTable3::tabulate(
        CATEGORIES,
        CATEGORIES,
        units.iter().map(|u| (u.x, u.y, u.z)),
    )
}

/// Finite-population truths.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationTruth {
    pub pw: Vec<f64>,
    /// `[w][x]`.
    pub px_given_w: Vec<Vec<f64>>,
    pub y_counts: Vec<u64>,
}

pub fn population_truth(units: &[SimUnit]) -> PopulationTruth {
    let mut wx = [[0u64; 3]; 3];
    let mut y_counts = vec![0u64; CATEGORIES];
    for u in units {
        wx[u.w][u.x] += 1;
        y_counts[u.y] += 1;
    }
    let n = units.len() as f64;
    let pw = (0..3)
        .map(|w| wx[w].iter().sum::<u64>() as f64 / n)
        .collect();
    let px_given_w = (0..3)
        .map(|w| {
            let tot: u64 = wx[w].iter().sum();
            (0..3)
                .map(|x| {
                    if tot > 0 {
                        wx[w][x] as f64 / tot as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    PopulationTruth {
        pw,
        px_given_w,
        y_counts,
    }
}

/// Estimates from the audited units selected by `in_sample`.
fn estimate_from<F: Fn(usize) -> bool>(
    units: &[SimUnit],
    margins: &PopulationMargins,
    in_sample: F,
) -> Result<estimators::EstimateReport> {
    let records: Vec<AuditedRecord> = units
        .iter()
        .enumerate()
        .filter(|(g, _)| in_sample(*g))
        .map(|(_, u)| AuditedRecord {
            w: u.w,
            x: u.x,
            y: u.y,
        })
        .collect();
    let data = AuditedData::new(&records, CATEGORIES, CATEGORIES, CATEGORIES)?;
    estimators::estimate(&data, margins)
}

pub fn unit_id(g: usize) -> String {
    format!("g{g:07}")
}

/// Runs the plan on a population and returns the final audit flags.
fn apply_plan(units: &[SimUnit], plan: &AuditPlan, seed: u64) -> Result<Vec<bool>> {
    let records: Vec<UnitRecord> = units
        .iter()
        .enumerate()
        .map(|(g, u)| UnitRecord::new(unit_id(g), u.x, u.y, u.z))
        .collect();
    let selection = realize(plan, &records, seed)?;
    Ok(records
        .iter()
        .map(|r| selection.action(r).final_z())
        .collect())
}

/// Settings for one simulated condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSpec {
    pub condition: Condition,
    pub population_size: usize,
    pub replicates: usize,
    /// Solver settings; `master_seed` is replaced per replicate.
    pub solver: SolverConfig,
    /// When false the initial audit sample is estimated from directly.
    pub optimize: bool,
}

impl ConditionSpec {
    /// 100 replicates, 50 attempts.
    pub fn desk(condition: Condition) -> Self {
        Self {
            condition,
            population_size: 10_000,
            replicates: 100,
            solver: SolverConfig {
                m_plus: 100,
                m_minus: 10,
                attempts: 50,
                ..SolverConfig::default()
            },
            optimize: true,
        }
    }

    /// 1,000 replicates, 200 attempts.
    pub fn paper(condition: Condition) -> Self {
        Self {
            replicates: 1_000,
            solver: SolverConfig {
                m_plus: 100,
                m_minus: 10,
                attempts: 200,
                ..SolverConfig::default()
            },
            ..Self::desk(condition)
        }
    }
}

/// Metrics of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub seed: u64,
    pub deviance_before: f64,
    pub deviance_after: f64,
    pub audit_size_before: u64,
    pub audit_size_after: u64,
    pub accepted: bool,
    pub truth: PopulationTruth,
    pub pw_before: Vec<Estimate>,
    pub pw_after: Vec<Estimate>,
    pub px_given_w_before: Vec<Vec<Option<Estimate>>>,
    pub px_given_w_after: Vec<Vec<Option<Estimate>>>,
}

impl ReplicateResult {
    /// `deviance_after / deviance_before`; `None` when the initial deviance is zero.
    pub fn relative_deviance(&self) -> Option<f64> {
        (self.deviance_before > 0.0).then(|| self.deviance_after / self.deviance_before)
    }

    pub fn bias_pw_before(&self, w: usize) -> f64 {
        self.pw_before[w].value - self.truth.pw[w]
    }

    pub fn bias_pw_after(&self, w: usize) -> f64 {
        self.pw_after[w].value - self.truth.pw[w]
    }

    pub fn bias_px_given_w_before(&self, x: usize, w: usize) -> Option<f64> {
        self.px_given_w_before[w][x].map(|e| e.value - self.truth.px_given_w[w][x])
    }

    pub fn bias_px_given_w_after(&self, x: usize, w: usize) -> Option<f64> {
        self.px_given_w_after[w][x].map(|e| e.value - self.truth.px_given_w[w][x])
    }
}

fn run_replicate(
    spec: &ConditionSpec,
    joint: &JointDistribution,
    master_seed: u64,
    r: usize,
) -> Result<ReplicateResult> {
    let seed = derive_seed(master_seed, &[domain::REPLICATE, r as u64]);
    let mut rng = rng::stream(seed, &[domain::POPULATION]);
    let units = draw_population(joint, spec.population_size, &mut rng);
    let truth = population_truth(&units);
    let margins = PopulationMargins::from_counts(&truth.y_counts)?;
    let table = observed_table(&units)?;
    let before = estimate_from(&units, &margins, |g| units[g].z)?;

    let (deviance_after, after, final_size, accepted) = if spec.optimize {
        let config = SolverConfig {
            master_seed: derive_seed(seed, &[domain::ATTEMPT]),
            ..spec.solver.clone()
        };
        let plan = optimize(&table, &config)?;
        let flags = apply_plan(&units, &plan, derive_seed(seed, &[domain::REALIZE]))?;
        let after = estimate_from(&units, &margins, |g| flags[g])?;
        (
            plan.achieved_deviance,
            after,
            plan.final_audit_size(),
            plan.accepted,
        )
    } else {
        let cutoff =
            crate::stats::chi_square_cutoff(table.degrees_of_freedom(), spec.solver.alpha)?;
        (
            table.deviance(),
            before.clone(),
            table.audit_size(),
            table.deviance() <= cutoff,
        )
    };

    Ok(ReplicateResult {
        replicate: r,
        seed,
        deviance_before: table.deviance(),
        deviance_after,
        audit_size_before: table.audit_size(),
        audit_size_after: final_size,
        accepted,
        truth,
        pw_before: before.pw,
        pw_after: after.pw,
        px_given_w_before: before.px_given_w,
        px_given_w_after: after.px_given_w,
    })
}

fn map_indices<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Simulates every replicate of a condition. Each replicate draws its own
/// population of `population_size` units, so the initial audit sample follows
/// the `Z x X` block.
pub fn run_condition(spec: &ConditionSpec, master_seed: u64) -> Result<Vec<ReplicateResult>> {
    let joint = build_joint(&spec.condition.blocks())?;
    map_indices(spec.replicates, |r| {
        run_replicate(spec, &joint, master_seed, r).map_err(|e| Error::Replicate {
            index: r,
            source: alloc::boxed::Box::new(e),
        })
    })
    .into_iter()
    .collect()
}

/// Aggregates of a condition run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSummary {
    pub label: String,
    pub replicates: usize,
    pub median_relative_deviance: f64,
    /// Share of replicates with relative deviance below one.
    pub improved_fraction: f64,
    /// Mean bias of each estimated share, before and after.
    pub mean_bias_pw_before: Vec<f64>,
    pub mean_bias_pw_after: Vec<f64>,
    /// Monte-Carlo standard error of those means.
    pub mc_se_pw_before: Vec<f64>,
    pub mc_se_pw_after: Vec<f64>,
    pub mean_abs_bias_pw_before: Vec<f64>,
    pub mean_abs_bias_pw_after: Vec<f64>,
    /// `[w][x]` mean bias of the error probabilities.
    pub mean_bias_px_given_w_before: Vec<Vec<f64>>,
    pub mean_bias_px_given_w_after: Vec<Vec<f64>>,
    pub accepted_fraction: f64,
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = mean(v);
    crate::math::sqrt(v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64)
}

pub(crate) fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn summarize(label: &str, results: &[ReplicateResult]) -> ConditionSummary {
    let rel: Vec<f64> = results
        .iter()
        .filter_map(ReplicateResult::relative_deviance)
        .collect();
    let per_w = |f: &dyn Fn(&ReplicateResult, usize) -> f64| -> Vec<Vec<f64>> {
        (0..CATEGORIES)
            .map(|w| results.iter().map(|r| f(r, w)).collect())
            .collect()
    };
    let before = per_w(&|r, w| r.bias_pw_before(w));
    let after = per_w(&|r, w| r.bias_pw_after(w));
    let sqrt_n = crate::math::sqrt(results.len() as f64);
    let xw = |f: &dyn Fn(&ReplicateResult, usize, usize) -> Option<f64>| -> Vec<Vec<f64>> {
        (0..CATEGORIES)
            .map(|w| {
                (0..CATEGORIES)
                    .map(|x| {
                        mean(
                            &results
                                .iter()
                                .filter_map(|r| f(r, x, w))
                                .collect::<Vec<_>>(),
                        )
                    })
                    .collect()
            })
            .collect()
    };
    ConditionSummary {
        label: String::from(label),
        replicates: results.len(),
        median_relative_deviance: median(&rel),
        improved_fraction: rel.iter().filter(|&&r| r < 1.0).count() as f64
            / rel.len().max(1) as f64,
        mean_bias_pw_before: before.iter().map(|v| mean(v)).collect(),
        mean_bias_pw_after: after.iter().map(|v| mean(v)).collect(),
        mc_se_pw_before: before.iter().map(|v| sample_sd(v) / sqrt_n).collect(),
        mc_se_pw_after: after.iter().map(|v| sample_sd(v) / sqrt_n).collect(),
        mean_abs_bias_pw_before: before
            .iter()
            .map(|v| mean(&v.iter().map(|b| b.abs()).collect::<Vec<_>>()))
            .collect(),
        mean_abs_bias_pw_after: after
            .iter()
            .map(|v| mean(&v.iter().map(|b| b.abs()).collect::<Vec<_>>()))
            .collect(),
        mean_bias_px_given_w_before: xw(&|r, x, w| r.bias_px_given_w_before(x, w)),
        mean_bias_px_given_w_after: xw(&|r, x, w| r.bias_px_given_w_after(x, w)),
        accepted_fraction: results.iter().filter(|r| r.accepted).count() as f64
            / results.len().max(1) as f64,
    }
}

/// One row of the variance study.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceRow {
    pub label: String,
    pub optimized: bool,
    pub replicates: usize,
    /// Empirical standard deviation of each estimated share.
    pub sd_pw: Vec<f64>,
    /// Mean estimated standard error divided by the empirical sd.
    pub se_sd_pw: Vec<f64>,
    /// `[w][x]`.
    pub sd_px_given_w: Vec<Vec<f64>>,
    pub se_sd_px_given_w: Vec<Vec<f64>>,
}

/// A variance-study condition: fixed population, repeated audit draws.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceCondition {
    pub condition: Condition,
    pub optimize: bool,
}

impl VarianceCondition {
    pub fn label(&self) -> String {
        if self.optimize {
            self.condition.label()
        } else {
            format!("{}*", self.condition.label())
        }
    }

    /// `WX4 x WY1..4 x XZ4` with optimization plus the non-selective benchmark
    /// `WX4, WY1, XZ1` without.
    pub fn standard_set() -> Vec<Self> {
        let mut set: Vec<Self> = (1..=4)
            .map(|wy| Self {
                condition: Condition { wx: 4, wy, xz: 4 },
                optimize: true,
            })
            .collect();
        set.push(Self {
            condition: Condition {
                wx: 4,
                wy: 1,
                xz: 1,
            },
            optimize: false,
        });
        set
    }
}

struct Draw {
    pw: Vec<Estimate>,
    pxw: Vec<Vec<Option<Estimate>>>,
}

/// For each condition, draws one fixed population of `population_size`
/// units, then `replicates` independent audit samples from it according to
/// the `Z x X` block, runs the procedure when requested and compares the mean
/// estimated standard error with the empirical sd across replicates.
pub fn run_variance_study(
    conditions: &[VarianceCondition],
    population_size: usize,
    replicates: usize,
    solver: &SolverConfig,
    master_seed: u64,
) -> Result<Vec<VarianceRow>> {
    let mut rows = Vec::with_capacity(conditions.len());
    for (c, cond) in conditions.iter().enumerate() {
        let blocks = cond.condition.blocks();
        let joint = build_joint(&blocks)?;
        let mut rng = rng::stream(master_seed, &[domain::POPULATION, c as u64]);
        let population = draw_fixed_population(&joint, population_size, &mut rng);
        let truth = population_truth(&population);
        let margins = PopulationMargins::from_counts(&truth.y_counts)?;

        let draws: Vec<Result<Draw>> = map_indices(replicates, |r| {
            let seed = derive_seed(master_seed, &[domain::AUDIT, c as u64, r as u64]);
            let mut units = population.clone();
            draw_audit_flags(&mut units, &blocks.xz, &mut rng::stream(seed, &[]));
            let report = if cond.optimize {
                let table = observed_table(&units)?;
                let config = SolverConfig {
                    master_seed: derive_seed(seed, &[domain::ATTEMPT]),
                    ..solver.clone()
                };
                let plan = optimize(&table, &config)?;
                let flags = apply_plan(&units, &plan, derive_seed(seed, &[domain::REALIZE]))?;
                estimate_from(&units, &margins, |g| flags[g])?
            } else {
                estimate_from(&units, &margins, |g| units[g].z)?
            };
            Ok(Draw {
                pw: report.pw,
                pxw: report.px_given_w,
            })
        });
        let draws: Vec<Draw> = draws
            .into_iter()
            .enumerate()
            .map(|(r, d)| {
                d.map_err(|e| Error::Replicate {
                    index: r,
                    source: alloc::boxed::Box::new(e),
                })
            })
            .collect::<Result<_>>()?;

        let ratio = |values: &[f64], ses: &[f64]| {
            let sd = sample_sd(values);
            (sd, mean(ses) / sd)
        };
        let mut sd_pw = Vec::new();
        let mut se_sd_pw = Vec::new();
        for w in 0..CATEGORIES {
            let values: Vec<f64> = draws.iter().map(|d| d.pw[w].value).collect();
            let ses: Vec<f64> = draws.iter().map(|d| d.pw[w].std_error()).collect();
            let (sd, r) = ratio(&values, &ses);
            sd_pw.push(sd);
            se_sd_pw.push(r);
        }
        let mut sd_pxw = vec![vec![0.0; CATEGORIES]; CATEGORIES];
        let mut se_sd_pxw = vec![vec![0.0; CATEGORIES]; CATEGORIES];
        for w in 0..CATEGORIES {
            for x in 0..CATEGORIES {
                let est: Vec<Estimate> = draws.iter().filter_map(|d| d.pxw[w][x]).collect();
                let values: Vec<f64> = est.iter().map(|e| e.value).collect();
                let ses: Vec<f64> = est.iter().map(|e| e.std_error()).collect();
                let (sd, r) = ratio(&values, &ses);
                sd_pxw[w][x] = sd;
                se_sd_pxw[w][x] = r;
            }
        }
        rows.push(VarianceRow {
            label: cond.label(),
            optimized: cond.optimize,
            replicates,
            sd_pw,
            se_sd_pw,
            sd_px_given_w: sd_pxw,
            se_sd_px_given_w: se_sd_pxw,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_blocks_give_uniform_joint() {
        let blocks = Blocks {
            xz: [[1.0; 3]; 2],
            wx: [[1.0; 3]; 3],
            wy: [[1.0; 3]; 3],
        };
        let joint = build_joint(&blocks).unwrap();
        for &p in joint.probs() {
            assert!((p - 1.0 / 54.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_mass_is_rejected() {
        let blocks = Blocks {
            xz: [[0.0; 3]; 2],
            wx: [[1.0; 3]; 3],
            wy: [[1.0; 3]; 3],
        };
        assert_eq!(build_joint(&blocks), Err(Error::ZeroMass));
    }

    #[test]
    fn baseline_audit_fraction() {
        let joint = build_joint(&Condition::new(1, 1, 1).unwrap().blocks()).unwrap();
        assert!((joint.audit_fraction() - 0.03 / 0.999).abs() < 1e-12);
    }

    #[test]
    fn condition_labels_round_trip() {
        let c = Condition::parse("wx4, WY2 ,XZ3").unwrap();
        assert_eq!(
            c,
            Condition {
                wx: 4,
                wy: 2,
                xz: 3
            }
        );
        assert_eq!(Condition::parse(&c.label()).unwrap(), c);
        assert!(Condition::parse("WX5,WY1,XZ1").is_err());
        assert!(Condition::parse("WX1,WY1").is_err());
    }

    #[test]
    fn median_and_sd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((sample_sd(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
    }
}
