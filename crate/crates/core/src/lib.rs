//! Adaptive lowest-order finite elements in two dimensions.
//!
//! The crate implements the SOLVE, ESTIMATE, MARK, REFINE loop on conforming
//! triangulations refined by newest-vertex bisection, together with the
//! machinery needed to check the loop's convergence properties numerically:
//!
//! - [`mesh`]: triangulations, bisection with closure, overlays, patches and the
//!   modified mesh-size function `h(T, k)`.
//! - [`assembly`]: P1 assembly for second-order elliptic problems with mixed
//!   Dirichlet, Neumann and Robin boundary conditions.
//! - [`solve`]: Krylov solvers in exact and estimator-coupled inexact mode, and a
//!   Picard iteration for strongly monotone problems.
//! - [`estimate`]: residual, facet-based and gradient-recovery estimators and
//!   data oscillations.
//! - [`mark`]: Dörfler marking, exact-minimal and binned.
//! - [`adapt`]: the adaptive driver with per-level telemetry and rate fitting.
//! - [`verify`]: empirical checks of stability, reduction, discrete reliability,
//!   orthogonality and the mesh-refinement properties.

pub mod adapt;
pub mod assembly;
mod clock;
pub mod error;
pub mod estimate;
pub mod mark;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod solve;
pub mod sparse;
pub mod telemetry;
pub mod verify;
pub mod vtk;

pub use adapt::{run_adaptive, AdaptiveConfig, AdaptiveRun};
pub use assembly::{assemble, DiscreteFunction, LinearSystem};
pub use error::{AdaptError, AssemblyError, EstimateError, MarkError, MeshError, SolveError};
pub use estimate::{EstimatorKind, LocalIndicators};
pub use mark::{MarkedSet, MarkingStrategy};
pub use mesh::{BoundaryLabel, ElementSet, Mesh, ModifiedMeshSize, Point};
pub use problem::ProblemSpec;
