//! Sparse integer scoring systems trained for social welfare under group
//! fairness constraints, solved exactly by a built-in branch-and-bound.

pub mod data;
pub mod error;
pub mod fairness;
pub mod fixtures;
pub mod lp;
pub mod mip;
pub mod model;
pub mod report;
pub mod scalar;
pub mod solver;
pub mod theory;
pub mod train;
pub mod welfare;

pub use num_rational::BigRational;

/// Exact scalar used for data, metrics and certificates.
pub type Rational = BigRational;
/// Floating scalar used inside the LP relaxation.
pub type Float = f64;

pub use data::{binarize, load_csv, split, undersample, BinarizeConfig, ColumnKind, RawTable, Schema};
pub use error::{Error, Result};
pub use fairness::{fairness_level, group_index, FairnessNotion, GroupIndex};
pub use model::{loss_vector, predict, score, weighted_error, Dataset, Grouping, ScoringSystem};
pub use mip::{build, LossLinking, MipModel, Problem, SideConstraints, SignConstraint, SolveMode};
pub use report::{evaluate, parse_scorecard, render_scorecard, Report};
pub use scalar::Scalar;
pub use solver::{brute_force, solve, solve_lexicographic, Solution, SolveStatus, SolverConfig};
pub use train::{fit, Fit};
pub use welfare::{WeightMode, WelfareParams};
