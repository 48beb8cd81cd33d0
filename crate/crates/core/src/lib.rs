// NaN-rejecting checks are written as `!(x <= tol)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod formulas;
pub mod graph;
pub mod linalg;
pub mod lti;
pub mod lyapunov;
pub mod model;
pub mod problem_file;
pub mod report;
pub mod resource_allocation;
pub mod simulate;
pub mod variants;

pub use error::{Error, Result};
pub use graph::{GraphKind, OrientedGraph};
pub use lti::{GramianResult, Stability, StateSpace};
pub use model::{DisturbanceConfig, Equilibrium, QuadraticProgram, TimeConstants, TimeScale};
pub use problem_file::{ProblemFile, QpFile};
pub use report::H2Report;
pub use resource_allocation::{RaFormulation, RaTimeConstants, ResourceAllocationProblem};
pub use simulate::{SimulationConfig, SimulationEstimate};
pub use variants::VariantSpec;
