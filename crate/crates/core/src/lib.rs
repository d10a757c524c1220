//! Numerical toolkit for incompatibility-driven metastability in martensitic
//! phase transformations.
//!
//! The crate is organised by subsystem:
//!
//! * [`linalg`]: 3×3 kernels (symmetric eigensystems, signed SVD, trace
//!   maximisation over SO(3)).
//! * [`wells`]: energy wells, symmetry variants and well-based energy densities.
//! * [`compatibility`]: rank-one tests, twin and habit-plane solvers.
//! * [`deadload`]: biaxial dead-load minimisers, the equal-energy curve and the
//!   metastability-loss bound with its laminate counterexample.
//! * [`layers`]: transition-layer constants and the radial layer optimiser.
//! * [`counterexamples`]: rooms-and-passages, zero-gradient layer and the
//!   L¹-bounded splitting sequence.
//! * [`relax`]: a 2D finite-element relaxation probe of metastability.

pub mod compatibility;
pub mod counterexamples;
pub mod deadload;
pub mod error;
pub mod layers;
pub mod linalg;
pub mod presets;
pub mod quad;
pub mod relax;
pub mod wells;

pub use error::{Error, Result};
pub use linalg::{Mat3, Rotation, Stretch, Vec3};
