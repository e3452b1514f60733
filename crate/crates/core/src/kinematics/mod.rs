//! Minimal-coordinate linkages: representation, forward kinematics,
//! tracking objective and its adjoint gradient.
//!
//! A linkage is a list of nodes in topological order. Node 1 is the motor,
//! every other node is either fixed to the ground or hangs off two
//! lower-index parents through two rigid links. Positions of a movable node
//! follow from its parents by the law of cosines, so a single sweep over the
//! list places every node for a given motor parameter `t`.

mod curve;
mod forward;
mod gradient;
mod linkage;
mod matching;
mod objective;
mod render;

pub use curve::{resample_closed, CurveMode, TargetCurve};
pub use forward::{
    forward_kinematics, law_of_cosine, motor_position, sample_times, trace, trace_at,
    KinematicsError, Trajectory, TriangleViolation, VALIDITY_MARGIN,
};
pub use gradient::{
    jacobian_adjoint, jacobian_adjoint_with_margin, kinematic_jacobian_det, parameter_layout,
    parameters, signed_area, with_parameters, Gradient, Param, SINGULAR_MARGIN,
};
pub use linkage::{
    Linkage, LinkageError, MotorSpec, Movable, NodeDef, NodeKind, Orientation, Spin,
};
pub use matching::min_cost_assignment;
pub use objective::{matching, objective, objective_or_inf, tracking_error, ObjectiveBreakdown};
pub use render::trajectory_svg;
