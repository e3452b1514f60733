//! Mixed-integer model of the synthesis problem.
//!
//! Models are explicit lists of variables, rows and special ordered sets so
//! that they can be validated against candidate designs and handed to
//! external solvers. Three variants are built: the exact non-convex model,
//! its convex relaxation with piecewise-linear over-estimators and sector
//! selectors, and the model with a first-sample block selection used by
//! branch and bound.

mod assign;
mod build;
mod config;
mod export;
mod ir;
pub mod names;
mod sos;
mod validate;

pub use assign::{
    complete_relaxations, design_values, extract_linkage, grid_segment, linkage_values,
    parking_spot, sos1_bit, topology_values, AssignError,
};
pub use build::{
    binary_budget, breakpoints, build_exact, build_geometric_exact, build_micp_relaxation,
    build_minlp, build_topological, max_overestimation_gap, SectorTable,
};
pub use config::{BoxConstraint, ConfigError, MotorKind, NodeClass, SynthesisConfig};
pub use export::{export, lp_row_count, to_lp, ExportError, ExportFormat, ExportOptions};
pub use ir::{
    eval_quadratic, is_psd, BinaryCount, IrError, LinearConstraint, Metadata, ModelIR, ModelKind,
    Objective, QuadraticConstraint, Sense, SosKind, SosSet, Tag, VarKind, Variable, MODEL_VERSION,
};
pub use sos::{encode_sos1, encode_sos2, log2_ceil, sos_satisfied};
pub use validate::{
    validate, validate_with_tol, Residual, ResidualKind, ValidateError, Validation, VALIDATION_TOL,
};
