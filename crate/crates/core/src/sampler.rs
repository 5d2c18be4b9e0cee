//! Unit-level realization of an integer audit plan.
//!
//! Within each `(x, y)` stratum, `delta_plus` units are drawn by simple random
//! sampling without replacement from the units currently outside the audit
//! sample and moved in; `delta_minus` units are drawn the same way from the
//! originally audited units and moved out. Pools are sorted by unit id before
//! a partial Fisher-Yates shuffle, and each stratum has its own random stream
//! keyed by `(seed, x, y)`, so the result does not depend on input order or on
//! which other strata exist.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::rng::{self, domain};
use crate::solver::AuditPlan;
use crate::{Error, Result};

/// One unit of the observed population. Category indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UnitRecord {
    pub unit_id: String,
    pub x: usize,
    pub y: usize,
    pub z_initial: bool,
}

impl UnitRecord {
    pub fn new(unit_id: impl Into<String>, x: usize, y: usize, z_initial: bool) -> Self {
        Self {
            unit_id: unit_id.into(),
            x,
            y,
            z_initial,
        }
    }
}

/// What happens to a unit under a realized plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    /// Moved into the audit sample.
    Add,
    /// Moved out of the audit sample.
    Remove,
    /// Stays in the audit sample.
    KeepIn,
    /// Stays outside the audit sample.
    KeepOut,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Add => "add",
            Action::Remove => "remove",
            Action::KeepIn => "keep-in",
            Action::KeepOut => "keep-out",
        }
    }

    /// Audit flag after the plan is applied.
    pub fn final_z(self) -> bool {
        matches!(self, Action::Add | Action::KeepIn)
    }
}

/// A realized selection. All id lists are sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSelection {
    pub added: Vec<String>,
    pub removed: Vec<String>,
    pub final_sample: Vec<String>,
    /// Inclusion probability `delta_plus / n_ij0` of units outside the initial
    /// audit sample, per stratum `x * J + y` (zero for empty pools).
    pub inclusion_probability: Vec<f64>,
    pub seed: u64,
}

impl SampleSelection {
    pub fn action(&self, unit: &UnitRecord) -> Action {
        let id = unit.unit_id.as_str();
        let contains = |v: &[String]| v.binary_search_by(|u| u.as_str().cmp(id)).is_ok();
        match (
            unit.z_initial,
            unit.z_initial && contains(&self.removed),
            contains(&self.added),
        ) {
            (true, true, _) => Action::Remove,
            (true, false, _) => Action::KeepIn,
            (false, _, true) => Action::Add,
            (false, _, false) => Action::KeepOut,
        }
    }
}

/// Draws `k` items uniformly without replacement from the sorted `pool`.
fn draw<'a, R: Rng>(rng: &mut R, pool: &mut [&'a str], k: usize) -> Vec<&'a str> {
    let n = pool.len();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    pool[..k].to_vec()
}

/// Realizes `plan` on the unit list. The unit counts per stratum and audit
/// flag must equal the plan's base table.
pub fn realize(plan: &AuditPlan, units: &[UnitRecord], seed: u64) -> Result<SampleSelection> {
    let base = &plan.base;
    let (xc, yc) = (base.x_categories(), base.y_categories());
    let strata = xc * yc;
    let mut outside: Vec<Vec<&str>> = vec![Vec::new(); strata];
    let mut inside: Vec<Vec<&str>> = vec![Vec::new(); strata];
    let mut seen = BTreeSet::new();
    for unit in units {
        if unit.x >= xc || unit.y >= yc {
            return Err(Error::CategoryOutOfRange {
                unit_id: unit.unit_id.clone(),
            });
        }
        if !seen.insert(unit.unit_id.as_str()) {
            return Err(Error::DuplicateUnit(unit.unit_id.clone()));
        }
        let s = unit.x * yc + unit.y;
        if unit.z_initial {
            inside[s].push(&unit.unit_id);
        } else {
            outside[s].push(&unit.unit_id);
        }
    }
    for s in 0..strata {
        let (x, y) = (s / yc, s % yc);
        for (z, pool) in [(0, &outside[s]), (1, &inside[s])] {
            let expected = base.count(x, y, z);
            if pool.len() as u64 != expected {
                return Err(Error::StratumMismatch {
                    x,
                    y,
                    z,
                    plan: expected,
                    units: pool.len() as u64,
                });
            }
        }
    }

    let mut added = Vec::new();
    let mut removed = Vec::new();
    let mut inclusion_probability = vec![0.0; strata];
    for s in 0..strata {
        let (x, y) = (s / yc, s % yc);
        let path = |z: u64| [domain::STRATUM, x as u64, y as u64, z];
        let pool = &mut outside[s];
        pool.sort_unstable();
        if !pool.is_empty() {
            inclusion_probability[s] = plan.delta_plus[s] as f64 / pool.len() as f64;
        }
        let mut rng_add = rng::stream(seed, &path(0));
        added.extend(draw(&mut rng_add, pool, plan.delta_plus[s] as usize));
        let pool = &mut inside[s];
        pool.sort_unstable();
        let mut rng_remove = rng::stream(seed, &path(1));
        removed.extend(draw(&mut rng_remove, pool, plan.delta_minus[s] as usize));
    }
    added.sort_unstable();
    removed.sort_unstable();

    let removed_set: BTreeSet<&str> = removed.iter().copied().collect();
    let mut final_sample: Vec<String> = units
        .iter()
        .filter(|u| u.z_initial && !removed_set.contains(u.unit_id.as_str()))
        .map(|u| u.unit_id.clone())
        .chain(added.iter().map(|&s| String::from(s)))
        .collect();
    final_sample.sort_unstable();

    Ok(SampleSelection {
        added: added.into_iter().map(String::from).collect(),
        removed: removed.into_iter().map(String::from).collect(),
        final_sample,
        inclusion_probability,
        seed,
    })
}
