//! Resistive 1-ports built from identical power-law conductors.
//!
//! A [`Digraph`] fixes the topology, a [`ConductanceLaw`] the element
//! characteristic `i = sum_p D_p v^alpha_p`. [`solve`] finds the DC operating
//! point; [`superpose`] compares the node-wise connection of two or more
//! one-term realizations with their parallel connection and
//! [`evaluate_bounds`] checks every error bound on that comparison.
//! [`sweep`] studies potentials as functions of the exponent and of the
//! coefficients; [`campaign`] runs all checks over random topologies.

pub mod campaign;
pub mod error;
pub mod fixtures;
pub mod generator;
pub mod law;
pub mod netlist;
pub mod solver;
pub mod superposition;
pub mod sweep;
pub mod topology;

pub use error::{Error, Result};
pub use law::{parse_participants, ConductanceLaw, PowerTerm};
pub use solver::{input_current_via_b, phi, solve, wing_current, OperatingPoint, SolverConfig};
pub use superposition::{
    bounds_power, bounds_s2, double_inequality_violations, evaluate_bounds, statement2_check,
    statement3_check, superpose, tellegen_check, tellegen_identity, BoundEntry, BoundId, BoundSet,
    Case, Superposition, SuperpositionReport,
};
pub use topology::{
    classify_branches, f_connect, stepwise_connect, sum_laws, BranchClassification, ConnectionPlan,
    Digraph, MergeTree,
};
