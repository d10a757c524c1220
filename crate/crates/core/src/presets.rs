//! Built-in material data.

use crate::linalg::{Mat3, Stretch};

/// Measured CuAlNi orthorhombic lattice parameters (α, β, γ).
pub const CUALNI_LATTICE: (f64, f64, f64) = (1.0619, 0.9178, 1.0230);

/// The six orthorhombic variant stretches generated by lattice parameters
/// (α, β, γ), listed in the conventional order: the pairs share the
/// β-axis e₃, e₂, e₁ respectively and differ by the sign of the shear.
pub fn orthorhombic_variants(alpha: f64, beta: f64, gamma: f64) -> [Mat3; 6] {
    let p = 0.5 * (alpha + gamma);
    let m = 0.5 * (alpha - gamma);
    [
        Mat3::new(p, m, 0.0, m, p, 0.0, 0.0, 0.0, beta),
        Mat3::new(p, -m, 0.0, -m, p, 0.0, 0.0, 0.0, beta),
        Mat3::new(p, 0.0, m, 0.0, beta, 0.0, m, 0.0, p),
        Mat3::new(p, 0.0, -m, 0.0, beta, 0.0, -m, 0.0, p),
        Mat3::new(beta, 0.0, 0.0, 0.0, p, m, 0.0, m, p),
        Mat3::new(beta, 0.0, 0.0, 0.0, p, -m, 0.0, -m, p),
    ]
}

/// First orthorhombic variant for lattice parameters (α, β, γ).
pub fn orthorhombic_u1(alpha: f64, beta: f64, gamma: f64) -> crate::Result<Stretch> {
    Stretch::new(orthorhombic_variants(alpha, beta, gamma)[0])
}

pub fn cualni_variants() -> [Mat3; 6] {
    let (a, b, g) = CUALNI_LATTICE;
    orthorhombic_variants(a, b, g)
}

pub fn cualni_u1() -> Stretch {
    Stretch::new(cualni_variants()[0]).expect("preset is positive definite")
}

pub fn cualni_u2() -> Stretch {
    Stretch::new(cualni_variants()[1]).expect("preset is positive definite")
}

/// Form I → Form II transformation stretch of terephthalic acid.
pub fn terephthalic() -> Stretch {
    Stretch::new(Mat3::new(
        0.970, 0.038, -0.121, //
        0.038, 0.835, -0.017, //
        -0.121, -0.017, 1.298,
    ))
    .expect("preset is positive definite")
}
