//! Joint topology and geometry synthesis of planar linkages.

pub mod bb;
pub mod cli;
pub mod control;
pub mod geometry;
pub mod job;
pub mod kinematics;
pub mod model;
pub mod nlp;
pub mod planted;
pub mod sa;
pub mod service;
pub mod solution;
pub mod topology;
