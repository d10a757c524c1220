//! Energy wells SO(3)U, symmetry-generated variant families, and the energy
//! densities built on them.

mod constrained;
mod dilatational;
mod hypotheses;

pub use constrained::{constrained_energy, MEMBERSHIP_TOL};
pub use dilatational::{DilatationalEnergy, DilatationalSpec, KSet};
pub use hypotheses::{check_hypotheses, Growth, HypothesisReport, WellEnergy};

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error};
use crate::linalg::{Mat3, Rotation, Stretch};

/// Frobenius distance below which two variants are considered equal.
pub const VARIANT_DEDUP_TOL: f64 = 1e-8;

/// A rotation well SO(3)U.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Well {
    pub stretch: Stretch,
}

impl Well {
    pub fn new(stretch: Stretch) -> Self {
        Self { stretch }
    }

    pub fn u(&self) -> &Mat3 {
        self.stretch.matrix()
    }

    /// Closest point R*U of the well to `a`.
    pub fn nearest(&self, a: &Mat3) -> Mat3 {
        let r = Rotation::nearest(&(a * self.u()));
        r.matrix() * self.u()
    }

    /// Frobenius distance from `a` to the well.
    pub fn distance(&self, a: &Mat3) -> f64 {
        (a - self.nearest(a)).norm()
    }
}

/// Point groups of the parent lattice, as sets of rotations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryGroup {
    /// The 24 rotations of the cube.
    Cubic,
    /// The 8 rotations of a square prism with axis e₃.
    Tetragonal,
    /// The 4 rotations of a rectangular box.
    Orthorhombic,
    Identity,
}

impl SymmetryGroup {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Cubic => "cubic",
            Self::Tetragonal => "tetragonal",
            Self::Orthorhombic => "orthorhombic",
            Self::Identity => "identity",
        }
    }

    /// Group rotations in a fixed order starting with the identity.
    pub fn rotations(&self) -> Vec<Mat3> {
        let perms: [[usize; 3]; 6] =
            [[0, 1, 2], [1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0], [2, 0, 1]];
        let signs: [[f64; 3]; 8] = [
            [1.0, 1.0, 1.0],
            [-1.0, -1.0, 1.0],
            [-1.0, 1.0, -1.0],
            [1.0, -1.0, -1.0],
            [-1.0, -1.0, -1.0],
            [1.0, 1.0, -1.0],
            [1.0, -1.0, 1.0],
            [-1.0, 1.0, 1.0],
        ];
        let mut out = Vec::new();
        for p in perms {
            for s in signs {
                let mut q = Mat3::zeros();
                for i in 0..3 {
                    q[(i, p[i])] = s[i];
                }
                if q.determinant() < 0.0 {
                    continue;
                }
                let keep = match self {
                    Self::Cubic => true,
                    Self::Tetragonal => p[2] == 2,
                    Self::Orthorhombic => p == [0, 1, 2],
                    Self::Identity => p == [0, 1, 2] && s == [1.0, 1.0, 1.0],
                };
                if keep {
                    out.push(q);
                }
            }
        }
        out
    }
}

impl fmt::Display for SymmetryGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SymmetryGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cubic" => Ok(Self::Cubic),
            "tetragonal" => Ok(Self::Tetragonal),
            "orthorhombic" => Ok(Self::Orthorhombic),
            "identity" | "triclinic" => Ok(Self::Identity),
            other => Err(invalid(format!("unknown symmetry group '{other}'"))),
        }
    }
}

/// Distinct variants {Q U₁ Qᵀ : Q ∈ G}.
#[derive(Clone, Debug)]
pub struct WellFamily {
    pub variants: Vec<Well>,
    pub group: SymmetryGroup,
}

impl WellFamily {
    pub fn generate(u1: &Stretch, group: SymmetryGroup) -> Self {
        let mut variants: Vec<Well> = Vec::new();
        for q in group.rotations() {
            let v = u1.conjugate(&q);
            let dup = variants
                .iter()
                .any(|w| (w.u() - v.matrix()).norm() <= VARIANT_DEDUP_TOL);
            if !dup {
                variants.push(Well::new(v));
            }
        }
        Self { variants, group }
    }

    /// Family made of explicitly listed wells.
    pub fn from_wells(variants: Vec<Well>) -> Self {
        Self { variants, group: SymmetryGroup::Identity }
    }

    pub fn len(&self) -> usize {
        self.variants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variants.is_empty()
    }

    /// Distance to the union of the wells, with the index of the closest.
    pub fn distance(&self, a: &Mat3) -> (f64, usize) {
        self.variants
            .iter()
            .enumerate()
            .map(|(i, w)| (w.distance(a), i))
            .fold((f64::INFINITY, 0), |best, cur| if cur.0 < best.0 { cur } else { best })
    }
}

/// Variant list for `u1` under `group`; validates positive definiteness of a
/// raw matrix input.
pub fn variants(u1: &Mat3, group: SymmetryGroup) -> crate::Result<WellFamily> {
    let u = Stretch::new(*u1)?;
    Ok(WellFamily::generate(&u, group))
}
