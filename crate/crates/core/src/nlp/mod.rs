//! Local continuous optimisation.
//!
//! Two flavours live here. [`NlpProblem`] turns a model with its integer
//! decisions pinned into a smooth problem over node trajectories, solved by
//! an augmented Lagrangian whose subproblems use projected L-BFGS. Phase I
//! only seeks feasibility; phase II then lowers the objective. The second
//! flavour works directly on a [`Linkage`](crate::kinematics::Linkage) in
//! minimal coordinates using adjoint gradients.

mod lbfgs;
mod problem;
mod refine;
mod solver;

pub use lbfgs::{minimize_box, projected_gradient_norm, InnerOutcome, LineStep, ARMIJO_C};
pub use problem::{Fixings, NlpProblem};
pub use refine::{polish_linkage, refine_linkage};
pub use solver::{
    solve_phase1, solve_phase1_both, solve_phase2, IterationRecord, NlpError, NlpResult,
    NlpSettings, NlpStatus,
};
