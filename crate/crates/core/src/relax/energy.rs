use nalgebra::{Matrix2, Vector2};

use super::mesh::MeshDeformation;
use crate::compatibility::{rank_one_test, RankOne};
use crate::error::{invalid, Result};

/// W(A) = min_s(|A − A₁|^p, |A − A₂|^p − δ) with the soft minimum
/// min_s(u, v) = −s·log(e^{−u/s} + e^{−v/s}).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleWell2D {
    pub a1: Matrix2<f64>,
    pub a2: Matrix2<f64>,
    pub delta: f64,
    pub smoothing: f64,
    pub p: f64,
}

impl DoubleWell2D {
    pub const DEFAULT_SMOOTHING: f64 = 1e-2;

    pub fn new(a1: Matrix2<f64>, a2: Matrix2<f64>, delta: f64, smoothing: f64, p: f64) -> Result<Self> {
        if (a2 - a1).norm() <= 1e-12 * (1.0 + a1.norm()) {
            return Err(invalid("wells must be distinct"));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(invalid("well depth δ must be non-negative"));
        }
        if !(smoothing > 0.0) {
            return Err(invalid("smoothing width must be positive"));
        }
        if !(p >= 2.0) {
            return Err(invalid("growth exponent must be at least 2"));
        }
        Ok(Self { a1, a2, delta, smoothing, p })
    }

    /// e₂⊗e₂ and (e₁+e₂)⊗(e₁+e₂): rank(A₂ − A₁) = 2.
    pub fn incompatible(delta: f64) -> Result<Self> {
        let a1 = Matrix2::new(0.0, 0.0, 0.0, 1.0);
        let a2 = Matrix2::new(1.0, 1.0, 1.0, 1.0);
        Self::new(a1, a2, delta, Self::DEFAULT_SMOOTHING, 2.0)
    }

    /// e₂⊗e₂ and e₂⊗e₂ + e₁⊗e₂: rank-one connected with normal e₂.
    pub fn rank_one(delta: f64) -> Result<Self> {
        let a1 = Matrix2::new(0.0, 0.0, 0.0, 1.0);
        let a2 = Matrix2::new(0.0, 1.0, 0.0, 1.0);
        Self::new(a1, a2, delta, Self::DEFAULT_SMOOTHING, 2.0)
    }

    pub fn connection(&self) -> RankOne<2> {
        rank_one_test(&self.a1, &self.a2)
    }

    /// Wells expressed in reference coordinates rotated so that a rank-one
    /// normal becomes e₂; incompatible pairs are returned unchanged.
    pub fn aligned(&self) -> Self {
        match self.connection() {
            RankOne::Connected { n, degenerate: false, .. } => {
                // Q maps n to e₂; A(x) = A Qᵀ (Qx)
                let q = Matrix2::new(n[1], -n[0], n[0], n[1]);
                Self { a1: self.a1 * q.transpose(), a2: self.a2 * q.transpose(), ..*self }
            }
            _ => *self,
        }
    }

    fn parts(&self, a: &Matrix2<f64>) -> (f64, f64, Matrix2<f64>, Matrix2<f64>) {
        let d1 = a - self.a1;
        let d2 = a - self.a2;
        let (n1, n2) = (d1.norm_squared(), d2.norm_squared());
        let half = 0.5 * self.p;
        let u = n1.powf(half);
        let v = n2.powf(half) - self.delta;
        let du = if n1 > 0.0 { d1 * (self.p * n1.powf(half - 1.0)) } else { Matrix2::zeros() };
        let dv = if n2 > 0.0 { d2 * (self.p * n2.powf(half - 1.0)) } else { Matrix2::zeros() };
        (u, v, du, dv)
    }

    pub fn density(&self, a: &Matrix2<f64>) -> f64 {
        let (u, v, _, _) = self.parts(a);
        let s = self.smoothing;
        u.min(v) - s * (-(u - v).abs() / s).exp().ln_1p()
    }

    /// dW/dA.
    pub fn density_gradient(&self, a: &Matrix2<f64>) -> Matrix2<f64> {
        let (u, v, du, dv) = self.parts(a);
        // weight of u in the soft minimum, 1/(1 + e^{(u−v)/s})
        let z = (u - v) / self.smoothing;
        let wu = if z > 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        };
        du * wu + dv * (1.0 - wu)
    }

    /// Σ over triangles of area × W(element gradient).
    pub fn total_energy(&self, mesh: &MeshDeformation) -> f64 {
        self.energy_of(mesh, &mesh.values)
    }

    pub fn energy_of(&self, mesh: &MeshDeformation, values: &[Vector2<f64>]) -> f64 {
        (0..mesh.triangles.len()).map(|t| mesh.area(t) * self.density(&mesh.element_gradient(values, t))).sum()
    }

    /// Energy and its gradient with respect to the flattened nodal values.
    pub fn energy_and_gradient(&self, mesh: &MeshDeformation, values: &[Vector2<f64>]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; 2 * values.len()];
        let mut energy = 0.0;
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let a = mesh.element_gradient(values, t);
            let area = mesh.area(t);
            energy += area * self.density(&a);
            // dE/d[y₁ − y₀, y₂ − y₀] = area · W'(A) · E⁻ᵀ
            let g = self.density_gradient(&a) * mesh.inv_edges(t).transpose() * area;
            for r in 0..2 {
                grad[2 * tri[1] + r] += g[(r, 0)];
                grad[2 * tri[2] + r] += g[(r, 1)];
                grad[2 * tri[0] + r] -= g[(r, 0)] + g[(r, 1)];
            }
        }
        (energy, grad)
    }
}
