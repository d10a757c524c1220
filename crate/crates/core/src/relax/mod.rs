//! Finite-element relaxation probe for a two-well energy on the unit square:
//! piecewise-affine deformations on a crossed triangulation, a smoothed
//! double-well density, quasi-Newton descent and seeded nucleation trials.

mod descent;
mod energy;
mod mesh;
mod trial;

pub use descent::{descend, Descent, StepRule};
pub use energy::DoubleWell2D;
pub use mesh::MeshDeformation;
pub use trial::{laminate_strip_trial, nucleation_trial, plant_nucleus, StripOutcome, TrialConfig, TrialSummary};
