//! Small dense kernels on 3×3 (and, where needed, 2×2) real matrices.

use nalgebra::{DMatrix, Matrix3, Quaternion, SMatrix, SVector, UnitQuaternion, Vector3};
use rand::Rng;

use crate::error::{invalid, numeric, precondition, Result};

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;

/// Orthogonality and determinant tolerance for [`Rotation`].
pub const ROTATION_TOL: f64 = 1e-12;
/// Symmetry tolerance for [`Stretch`].
pub const STRETCH_SYMMETRY_TOL: f64 = 1e-12;
/// Symmetry tolerance accepted by [`sym_eigen`], relative to ‖S‖.
pub const EIGEN_SYMMETRY_TOL: f64 = 1e-10;
/// Residual contract of [`sym_eigen`], relative to ‖S‖.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-10;

/// A proper rotation: RᵀR = 1 and det R = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn new(m: Mat3) -> Result<Self> {
        if !m.iter().all(|x| x.is_finite()) {
            return Err(invalid("rotation has non-finite entries"));
        }
        let orth = (m.transpose() * m - Mat3::identity()).amax();
        let det = m.determinant();
        if orth > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
            return Err(invalid(format!(
                "not a proper rotation (|RᵀR - 1| = {orth:e}, det = {det})"
            )));
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Rotation by `angle` radians about `axis` (normalised internally).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Result<Self> {
        let norm = axis.norm();
        if !(norm > 0.0) || !angle.is_finite() {
            return Err(invalid("axis must be non-zero and angle finite"));
        }
        let u = nalgebra::Unit::new_unchecked(axis / norm);
        Ok(Self(*nalgebra::Rotation3::from_axis_angle(&u, angle).matrix()))
    }

    /// Nearest rotation to `m` in the Frobenius norm.
    pub fn nearest(m: &Mat3) -> Self {
        max_trace_rotation(&m.transpose()).rotation
    }

    /// Uniformly distributed rotation (Shoemake's subgroup algorithm).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let u3: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
        let q = Quaternion::new(b * u3.cos(), a * u2.sin(), a * u2.cos(), b * u3.sin());
        let r = UnitQuaternion::from_quaternion(q).to_rotation_matrix();
        Self(*r.matrix())
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, other: &Rotation) -> Self {
        Self(self.0 * other.0)
    }
}

/// A symmetric positive-definite stretch tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stretch(Mat3);

impl Stretch {
    pub fn new(m: Mat3) -> Result<Self> {
        if !m.iter().all(|x| x.is_finite()) {
            return Err(invalid("stretch has non-finite entries"));
        }
        let asym = (m - m.transpose()).amax();
        if asym > STRETCH_SYMMETRY_TOL * m.amax().max(1.0) {
            return Err(invalid(format!("stretch is not symmetric (asymmetry {asym:e})")));
        }
        let sym = 0.5 * (m + m.transpose());
        let eig = sym_eigen(&sym)?;
        if eig.values[0] <= 0.0 {
            return Err(invalid(format!(
                "stretch is not positive definite (smallest eigenvalue {})",
                eig.values[0]
            )));
        }
        Ok(Self(sym))
    }

    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// Q U Qᵀ for a rotation Q.
    pub fn conjugate(&self, q: &Mat3) -> Self {
        let m = q * self.0 * q.transpose();
        Self(0.5 * (m + m.transpose()))
    }

    pub fn eigen(&self) -> EigenSystem {
        sym_eigen(&self.0).expect("stretch is symmetric by construction")
    }
}

/// Ascending eigenvalues with a right-handed orthonormal frame of eigenvectors
/// stored column-wise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenSystem {
    pub values: [f64; 3],
    pub vectors: Mat3,
}

impl EigenSystem {
    pub fn vector(&self, i: usize) -> Vec3 {
        self.vectors.column(i).into_owned()
    }
}

/// Symmetric eigendecomposition with ascending eigenvalues.
pub fn sym_eigen(s: &Mat3) -> Result<EigenSystem> {
    if !s.iter().all(|x| x.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    let scale = s.norm();
    let asym = (s - s.transpose()).amax();
    if asym > EIGEN_SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) && asym > 0.0 {
        return Err(precondition(format!("matrix is not symmetric (asymmetry {asym:e})")));
    }
    let sym = 0.5 * (s + s.transpose());
    let eig = sym.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vectors = Mat3::zeros();
    let mut values = [0.0; 3];
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    if vectors.determinant() < 0.0 {
        let c = -vectors.column(2);
        vectors.set_column(2, &c);
    }
    for i in 0..3 {
        let v = vectors.column(i);
        let r = (sym * v - values[i] * v).norm();
        if r > EIGEN_RESIDUAL_TOL * scale.max(f64::MIN_POSITIVE) && r > 0.0 {
            return Err(numeric(format!("eigen residual {r:e} exceeds contract")));
        }
    }
    Ok(EigenSystem { values, vectors })
}

/// Singular value factorisation M = U diag(σ) Vᵀ with σ descending.
#[derive(Clone, Copy, Debug)]
pub struct Svd3 {
    pub u: Mat3,
    pub sigma: [f64; 3],
    pub v: Mat3,
}

pub fn svd3(m: &Mat3) -> Svd3 {
    let svd = m.svd(true, true);
    let u0 = svd.u.expect("requested U");
    let vt0 = svd.v_t.expect("requested Vᵀ");
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut u = Mat3::zeros();
    let mut v = Mat3::zeros();
    let mut sigma = [0.0; 3];
    for (dst, &src) in order.iter().enumerate() {
        sigma[dst] = svd.singular_values[src];
        u.set_column(dst, &u0.column(src));
        v.set_column(dst, &vt0.row(src).transpose());
    }
    Svd3 { u, sigma, v }
}

/// Singular values, descending.
pub fn singular_values(m: &Mat3) -> [f64; 3] {
    svd3(m).sigma
}

/// Result of maximising tr(RM) over SO(3).
#[derive(Clone, Copy, Debug)]
pub struct TraceMax {
    pub rotation: Rotation,
    pub value: f64,
    /// False when the maximiser is not unique (the rotation returned is one
    /// of the maximisers, chosen deterministically from the input bits).
    pub unique: bool,
}

/// max over R ∈ SO(3) of tr(RM), attained at R = V D Uᵀ for M = U Σ Vᵀ with
/// D = diag(1, 1, sign det(VUᵀ)).
pub fn max_trace_rotation(m: &Mat3) -> TraceMax {
    let Svd3 { u, sigma, v } = svd3(m);
    let d = if (v * u.transpose()).determinant() < 0.0 { -1.0 } else { 1.0 };
    let dm = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, d));
    let r = v * dm * u.transpose();
    // re-orthonormalise so the rotation invariant holds to rounding
    let r = orthonormalize(&r);
    let value = sigma[0] + sigma[1] + d * sigma[2];
    let tol = 1e-10 * sigma[0].max(f64::MIN_POSITIVE);
    let unique = sigma[1] > tol && !(d < 0.0 && (sigma[1] - sigma[2]).abs() <= tol);
    TraceMax { rotation: Rotation(r), value, unique }
}

fn orthonormalize(r: &Mat3) -> Mat3 {
    // one Newton step of the polar iteration: R <- (R + R^{-T}) / 2
    match r.try_inverse() {
        Some(inv) => 0.5 * (r + inv.transpose()),
        None => *r,
    }
}

pub fn outer(a: &Vec3, b: &Vec3) -> Mat3 {
    a * b.transpose()
}

/// Frobenius inner product A·B = tr(AᵀB).
pub fn dot(a: &Mat3, b: &Mat3) -> f64 {
    a.component_mul(b).sum()
}

/// Fix the sign of a unit vector so its largest-magnitude component is
/// positive (first index wins ties).
pub(crate) fn canonical_sign<const D: usize>(n: &SVector<f64, D>) -> f64 {
    let mut best = 0;
    for i in 1..D {
        if n[i].abs() > n[best].abs() + 1e-14 {
            best = i;
        }
    }
    if n[best] < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Descending singular values and leading singular pair of a square matrix of
/// any static size.
pub(crate) fn leading_singular<const D: usize>(
    m: &SMatrix<f64, D, D>,
) -> (Vec<f64>, SVector<f64, D>, SVector<f64, D>) {
    // the fixed-size factorisations are used where available: the dynamic
    // one loses accuracy on some exactly rank-deficient inputs
    macro_rules! fixed {
        ($t:ty) => {{
            let fm = <$t>::from_iterator(m.iter().copied());
            let svd = fm.svd(true, true);
            let u = svd.u.expect("requested U");
            let vt = svd.v_t.expect("requested Vᵀ");
            let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
            (sv, DMatrix::from_iterator(D, D, u.iter().copied()), DMatrix::from_iterator(D, D, vt.iter().copied()))
        }};
    }
    let (sv, u, vt) = match D {
        2 => fixed!(nalgebra::Matrix2<f64>),
        3 => fixed!(Matrix3<f64>),
        _ => {
            let svd = DMatrix::from_column_slice(D, D, m.as_slice()).svd(true, true);
            let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
            (sv, svd.u.expect("requested U"), svd.v_t.expect("requested Vᵀ"))
        }
    };
    let mut order: Vec<usize> = (0..D).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| sv[i]).collect();
    let top = order[0];
    let lu = SVector::<f64, D>::from_iterator(u.column(top).iter().copied());
    let lv = SVector::<f64, D>::from_iterator(vt.row(top).iter().copied());
    (sigma, lu, lv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_eigen() {
        let e = sym_eigen(&Mat3::identity()).unwrap();
        assert_eq!(e.values, [1.0, 1.0, 1.0]);
        assert!((e.vectors.determinant() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rotated_diagonal_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = Mat3::from_diagonal(&Vec3::new(5.0, 2.0, 3.0));
        for _ in 0..20 {
            let q = Rotation::random(&mut rng);
            let s = q.matrix() * d * q.matrix().transpose();
            let e = sym_eigen(&s).unwrap();
            for (got, want) in e.values.iter().zip([2.0, 3.0, 5.0]) {
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_nonsymmetric() {
        let mut s = Mat3::identity();
        s[(0, 1)] = 1e-3;
        assert!(matches!(sym_eigen(&s), Err(crate::Error::Precondition(_))));
    }

    #[test]
    fn rotation_constructor_checks() {
        assert!(Rotation::new(Mat3::identity()).is_ok());
        assert!(Rotation::new(-Mat3::identity()).is_err());
        assert!(Rotation::new(Mat3::identity() * 1.001).is_err());
    }

    #[test]
    fn stretch_constructor_checks() {
        assert!(Stretch::new(Mat3::identity()).is_ok());
        assert!(Stretch::new(Mat3::from_diagonal(&Vec3::new(1.0, -1.0, 1.0))).is_err());
        let mut m = Mat3::identity();
        m[(0, 2)] = 0.1;
        assert!(Stretch::new(m).is_err());
    }

    #[test]
    fn trace_max_identity_and_rotation() {
        let t = max_trace_rotation(&Mat3::identity());
        assert!((t.value - 3.0).abs() < 1e-14);
        assert!((t.rotation.matrix() - Mat3::identity()).amax() < 1e-14);

        let q = Rotation::from_axis_angle(&Vec3::new(1.0, 2.0, -0.5), 0.9).unwrap();
        let t = max_trace_rotation(&q.matrix().transpose());
        assert!((t.value - 3.0).abs() < 1e-12);
        assert!((t.rotation.matrix() - q.matrix()).amax() < 1e-12);
        assert!(t.unique);
    }

    #[test]
    fn trace_max_reflection_value_and_flag() {
        let m = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        let t = max_trace_rotation(&m);
        assert!((t.value - 1.0).abs() < 1e-14);
        assert!(!t.unique);
        assert!((dot(&t.rotation.matrix().transpose(), &m) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_max_is_deterministic() {
        let m = Mat3::from_diagonal(&Vec3::new(2.0, 1.0, -1.0));
        let a = max_trace_rotation(&m);
        let b = max_trace_rotation(&m);
        assert_eq!(a.rotation.matrix(), b.rotation.matrix());
    }
}
