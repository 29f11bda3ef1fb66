//! Streaming semidefinite programming with a sketched log-barrier Newton method.
//!
//! The solver works on the dual of
//!
//! ```text
//!     max <C, X>  s.t.  <A_i, X> = b_i,  X ⪰ 0
//! ```
//!
//! i.e. `min bᵀy` over `S(y) = Σ y_i A_i − C ⪰ 0`, reading the constraint
//! matrices `A_1..A_m` from a replayable [`ConstraintStream`] and never holding
//! more than O(1) of them in memory. The Newton system is built from a
//! TensorSRHT sketch of `(S^{-1/2} ⊗ S^{-1/2}) vec(A_i)`, so each interior point
//! iteration costs three sequential passes over the constraints and
//! O(n² + s·m + m²) words of working space.
//!
//! Modules:
//! - [`instance`]: binary instance format, constraint stream, generators.
//! - [`linalg`]: symmetric kernels (inverse square root, FWHT, Kronecker oracles).
//! - [`sketch`]: TensorSRHT seeds and the two-step fast application.
//! - [`hessian`]: exact and sketched Hessians, spectral comparison.
//! - [`ipm`]: the streaming interior point driver.
//! - [`ledger`]: word-level space accounting.

pub mod error;
pub mod hessian;
pub mod instance;
pub mod ipm;
pub mod ledger;
pub mod linalg;
pub mod sketch;

pub use error::{Result, SdpError};
pub use hessian::{HessianKind, HessianMatrix, SpectralRatio};
pub use instance::{ConstraintStream, InstanceData, InstanceStats, SdpHeader, SdpInstance};
pub use ipm::{IpmState, Solution, SolverConfig, TraceRecord};
pub use ledger::{Category, LedgerSnapshot, SpaceLedger};
pub use linalg::{SlackFactors, SymMatrix};
pub use sketch::{SketchSeed, SketchWorkspace, SketchedBasis};
