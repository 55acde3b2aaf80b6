//! Lower bounds on the minimal adversarial risk of multiclass classification.
//!
//! The risk under a budgeted attack is `1 - v / N`, where `v` is the value
//! of a covering LP whose columns are label-distinct point sets
//! ("configurations"). This crate builds those columns (by exhaustive
//! enumeration or genetic search), solves the reduced LP, and handles the
//! W2-penalized variant through genetic column generation.

pub mod configuration;
pub mod data;
pub mod gencol;
pub mod geometry;
pub mod lp;
pub mod report;
pub mod search;

pub use configuration::{ConfigError, Configuration, ConfigurationPool, CostKind, CostModel};
pub use data::{DataError, LabeledDataset, SyntheticSpec};
pub use gencol::{certify_optimality, gencol_w2, GencolError, GencolParams, W2RiskReport};
pub use geometry::{GeometryError, Metric};
pub use lp::{LpError, LpSolution, ReducedProblem};
pub use report::{emit_risk_curve, RiskCurve, RiskPoint};
pub use search::{exhaustive_search, genetic_search, ConvergenceTrace, GeneticParams, SearchError};
