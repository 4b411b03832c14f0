pub mod cones;
pub mod generators;
pub mod ipm;
pub mod kkt;
pub mod preprocess;
pub mod problem;
pub mod sparse;

pub use cones::ConeSet;
pub use ipm::{solve, SolveResult, Solver, SolverSettings, Status};
pub use kkt::PrecisionMode;
pub use problem::{ConeSpec, ProblemData, ValidationError};
pub use sparse::CsrMatrix;
