use crate::linalg::{dot, Mat3};

use super::WellFamily;

/// dist(A, ℳ) at or below this counts as membership in the wells.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// Constrained-theory density relative to a reference point on the wells:
/// −T·(A − reference) on ℳ and +∞ elsewhere.
///
/// `load` is the dead load T_τ, `reference` is R₁^τU₁.
pub fn constrained_energy(a: &Mat3, load: &Mat3, reference: &Mat3, wells: &WellFamily) -> f64 {
    let (d, _) = wells.distance(a);
    if d <= MEMBERSHIP_TOL {
        -dot(load, &(a - reference))
    } else {
        f64::INFINITY
    }
}
