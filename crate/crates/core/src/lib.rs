//! Constrained minimization of a noncoercive Dirichlet-type functional on
//! disks and annuli, with rearrangement tools for detecting foliated Schwarz
//! symmetry and anti-symmetry of the minimizers.

pub mod error;
pub mod experiment;
pub mod functional;
pub mod grid;
pub mod minimize;
mod precond;
pub mod rearrange;
pub mod spectral;

pub use error::{Error, Result};
pub use functional::{FKind, FSpec, Multipliers, ProblemParams};
pub use grid::{build_polar_grid, DomainKind, Field, Mirror, PolarGrid, RadialDomain};
pub use minimize::{Init, MinimizeResult, SolveOptions, Subspace};
pub use rearrange::{HOrder, HalfPlane, SymmetryReport};
pub use spectral::{NeumannMode, Parity};
