//! Exact soliton solutions of the three-level Λ Maxwell-Bloch system built
//! by Darboux dressing and nonlinear superposition, imprint diagnostics, and
//! an independent finite-difference integrator used as an oracle.

pub mod algebra;
pub mod darboux;
pub mod error;
pub mod mbsolver;
pub mod observables;
pub mod superposition;
pub mod system;
pub mod tolerances;

pub use algebra::{ComplexMat3, ComplexVec3};
pub use darboux::{SolitonKind, SolitonSpec};
pub use error::{Error, Result};
pub use superposition::{HFormula, OrderedSolution};
pub use system::{SolutionState, SystemParams};
