//! Physics-aware Gaussian RBF extreme learning machines for linear PDEs.
//!
//! A fixed Gaussian basis is placed over the unit square, the PDE and its
//! boundary conditions are collocated into one dense linear system, and the
//! output weights come from a single truncated-SVD least-squares solve.

pub mod assembly;
pub mod config;
pub mod error;
pub mod execution;
pub mod geometry;
pub mod lsq;
pub mod operators;
pub mod pai;
pub mod pipeline;
pub mod postprocess;
pub mod problems;
pub mod rbf;
pub mod sweep;

pub use assembly::{assemble, AssemblyOptions, CollocationSystem, RowLabel};
pub use config::{GridLayout, RunConfig};
pub use error::{Error, Result};
pub use execution::Execution;
pub use geometry::{BoundarySide, CollocationSet, Point2};
pub use lsq::{pseudo_inverse_solve, solve_least_squares, SolveReport};
pub use operators::{BoundaryCondition, LinearPdeOperator, PdeProblem};
pub use pai::{PaiConfig, Placement};
pub use pipeline::{run, RunOutcome, RunReport};
pub use postprocess::Solution;
pub use problems::{MmsSpec, Preset};
pub use rbf::{DerivOrder, RbfBasis, RbfUnit};
pub use sweep::{run_sweep, AxisSpec, SweepAxis, SweepRow, SweepSpec};
