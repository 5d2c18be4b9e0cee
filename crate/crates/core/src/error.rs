use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Table dimensions are unusable (`I < 2`, `J < 1`, or a buffer of the wrong length).
    InvalidDimensions {
        x_categories: usize,
        y_categories: usize,
    },
    /// A cell count is negative beyond numerical slack. Indices are 0-based.
    NegativeCount {
        x: usize,
        y: usize,
        z: usize,
        value: f64,
    },
    /// The table has no observations at all.
    EmptyTable,
    /// An adjustment moves more units than a cell holds, or violates a total bound.
    InfeasibleAdjustment { x: usize, y: usize },
    /// A gradient was requested at a point where a free cell is empty.
    BoundaryPoint { x: usize, y: usize },
    /// An optimization attempt left the feasible region.
    AttemptFailed { attempt: usize },
    /// Every optimization attempt failed.
    AllAttemptsFailed { attempts: usize },
    /// A configuration field is out of range. The payload names the field.
    InvalidConfig(&'static str),
    /// Significance level outside the open unit interval.
    InvalidAlpha(f64),
    /// Probability outside `[0, 1)` passed to a quantile function.
    InvalidProbability(f64),
    /// Chi-square degrees of freedom must be at least one.
    InvalidDegreesOfFreedom,
    /// Unit counts of a stratum disagree with the plan's base table.
    StratumMismatch {
        x: usize,
        y: usize,
        z: usize,
        plan: u64,
        units: u64,
    },
    /// A unit refers to a category outside the table.
    CategoryOutOfRange { unit_id: String },
    /// The same unit identifier appears twice.
    DuplicateUnit(String),
    /// Strata with positive population share but no audited units (0-based `y`).
    EmptyStrata(Vec<usize>),
    /// Population margins are negative or do not sum to one.
    InvalidMargins,
    /// A probability block has zero total mass or negative entries.
    ZeroMass,
    /// An error raised while processing one simulation replicate.
    Replicate { index: usize, source: Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDimensions { x_categories, y_categories } => write!(
                f,
                "invalid table dimensions: {x_categories} X categories (need >= 2), {y_categories} Y categories (need >= 1)"
            ),
            Error::NegativeCount { x, y, z, value } => {
                write!(f, "negative count {value} in cell (x={}, y={}, z={z})", x + 1, y + 1)
            }
            Error::EmptyTable => f.write_str("table has no observations"),
            Error::InfeasibleAdjustment { x, y } => {
                write!(f, "infeasible adjustment in stratum (x={}, y={})", x + 1, y + 1)
            }
            Error::BoundaryPoint { x, y } => write!(
                f,
                "gradient undefined: stratum (x={}, y={}) has an empty cell",
                x + 1,
                y + 1
            ),
            Error::AttemptFailed { attempt } => {
                write!(f, "optimization attempt {attempt} left the feasible region")
            }
            Error::AllAttemptsFailed { attempts } => {
                write!(f, "all {attempts} optimization attempts failed")
            }
            Error::InvalidConfig(field) => write!(f, "invalid configuration value for `{field}`"),
            Error::InvalidAlpha(a) => write!(f, "significance level {a} is not in (0, 1)"),
            Error::InvalidProbability(p) => write!(f, "probability {p} is not in [0, 1)"),
            Error::InvalidDegreesOfFreedom => f.write_str("degrees of freedom must be >= 1"),
            Error::StratumMismatch { x, y, z, plan, units } => write!(
                f,
                "stratum (x={}, y={}, z={z}): plan expects {plan} units, unit list has {units}",
                x + 1,
                y + 1
            ),
            Error::CategoryOutOfRange { unit_id } => {
                write!(f, "unit `{unit_id}` has a category outside the table")
            }
            Error::DuplicateUnit(id) => write!(f, "duplicate unit id `{id}`"),
            Error::EmptyStrata(strata) => {
                f.write_str("no audited units in populated strata y =")?;
                for s in strata {
                    write!(f, " {}", s + 1)?;
                }
                Ok(())
            }
            Error::InvalidMargins => {
                f.write_str("population margins must be nonnegative and sum to 1")
            }
            Error::ZeroMass => f.write_str("probability block has zero mass or negative entries"),
            Error::Replicate { index, source } => write!(f, "replicate {index}: {source}"),
        }
    }
}

impl core::error::Error for Error {}
