//! Rank-one compatibility: two-matrix rank tests, the middle-eigenvalue
//! criterion, the two-solution twinning equation RU = F + a⊗n, and the
//! austenite/twinned-martensite habit-plane chain.

use nalgebra::{SMatrix, SVector};

use crate::error::{numeric, precondition, Result};
use crate::linalg::{
    canonical_sign, leading_singular, outer, svd3, sym_eigen, Mat3, Rotation, Stretch, Vec3,
};

/// Relative singular-value threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-10;
/// |λ₂ − 1| at or below this counts as λ₂ = 1.
pub const MIDDLE_EIGENVALUE_TOL: f64 = 1e-8;
/// Residual contract of a twin solution, relative to ‖F‖.
pub const TWIN_RESIDUAL_TOL: f64 = 1e-10;
/// Residual contract of a habit solution.
pub const HABIT_RESIDUAL_TOL: f64 = 1e-9;

/// Outcome of the two-matrix rank test on B − A.
#[derive(Clone, Debug, PartialEq)]
pub enum RankOne<const D: usize> {
    /// B − A = a⊗n with ‖n‖ = 1. `degenerate` marks B = A (a = 0).
    Connected { a: SVector<f64, D>, n: SVector<f64, D>, degenerate: bool },
    Disconnected { rank: usize },
}

impl<const D: usize> RankOne<D> {
    pub fn is_connected(&self) -> bool {
        matches!(self, Self::Connected { .. })
    }
}

pub fn rank_one_test<const D: usize>(a: &SMatrix<f64, D, D>, b: &SMatrix<f64, D, D>) -> RankOne<D> {
    let diff = b - a;
    let scale = a.norm().max(b.norm());
    let (sigma, u, v) = leading_singular(&diff);
    if sigma[0] <= 1e-15 * scale || sigma[0] == 0.0 {
        let mut n = SVector::<f64, D>::zeros();
        n[0] = 1.0;
        return RankOne::Connected { a: SVector::zeros(), n, degenerate: true };
    }
    let rank = sigma.iter().filter(|&&s| s > RANK_TOL * sigma[0]).count();
    if rank > 1 {
        return RankOne::Disconnected { rank };
    }
    let sgn = canonical_sign(&v);
    RankOne::Connected { a: u * (sigma[0] * sgn), n: v * sgn, degenerate: false }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    /// λ₂ = 1 with λ₁ < 1 < λ₃: two rank-one connections to SO(3).
    Compatible,
    /// λ₂ ≠ 1: no rank-one connection to SO(3).
    NoConnection,
    /// U = 1: the wells coincide.
    Coincident,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Compatible => "compatible",
            Self::NoConnection => "no_rank_one_connection",
            Self::Coincident => "coincident",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MiddleEigenvalue {
    pub eigenvalues: [f64; 3],
    pub lambda2: f64,
    pub gap: f64,
    pub classification: Classification,
}

/// Middle-eigenvalue test for rank-one connections between SO(3) and SO(3)U.
pub fn middle_eigenvalue_gap(u: &Stretch) -> MiddleEigenvalue {
    middle_eigenvalue_gap_tol(u, MIDDLE_EIGENVALUE_TOL)
}

pub fn middle_eigenvalue_gap_tol(u: &Stretch, tol: f64) -> MiddleEigenvalue {
    let ev = u.eigen().values;
    let gap = ev[1] - 1.0;
    let classification = if ev.iter().all(|l| (l - 1.0).abs() <= tol) {
        Classification::Coincident
    } else if gap.abs() <= tol {
        Classification::Compatible
    } else {
        Classification::NoConnection
    };
    MiddleEigenvalue { eigenvalues: ev, lambda2: ev[1], gap, classification }
}

/// A solution (R, a, n) of RG = F + a⊗n with ‖n‖ = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwinSolution {
    pub rotation: Rotation,
    pub a: Vec3,
    pub n: Vec3,
    /// ‖RG − F − a⊗n‖.
    pub residual: f64,
}

impl TwinSolution {
    pub fn shear(&self) -> Mat3 {
        outer(&self.a, &self.n)
    }
}

/// Both rotations R with RU = F + a⊗n. Empty when the middle eigenvalue of
/// C = F⁻ᵀUᵀUF⁻¹ differs from 1.
pub fn twin_solutions(f: &Mat3, u: &Stretch) -> Result<Vec<TwinSolution>> {
    rank_one_rotations(f, u.matrix())
}

/// Solutions (R, a, n) of RG = F + a⊗n for invertible F, G.
pub fn rank_one_rotations(f: &Mat3, g: &Mat3) -> Result<Vec<TwinSolution>> {
    let fnorm = f.norm();
    let det_f = f.determinant();
    if !(det_f.abs() > 1e-12 * fnorm.powi(3)) {
        return Err(precondition("F must be invertible"));
    }
    let f_inv = f.try_inverse().ok_or_else(|| precondition("F must be invertible"))?;
    let gm = g * f_inv;
    let gm_inv = gm.try_inverse().ok_or_else(|| precondition("G must be invertible"))?;
    let c = gm.transpose() * gm;
    let eig = sym_eigen(&(0.5 * (c + c.transpose())))?;
    let [l1, l2, l3] = eig.values;
    if eig.values.iter().all(|l| (l - 1.0).abs() <= MIDDLE_EIGENVALUE_TOL) {
        return Err(precondition("C = 1: the wells coincide at F"));
    }
    if (l2 - 1.0).abs() > MIDDLE_EIGENVALUE_TOL || !(l1 < 1.0 && l3 > 1.0) {
        return Ok(Vec::new());
    }
    let (e1, e3) = (eig.vector(0), eig.vector(2));
    let span = l3 - l1;
    let mut out = Vec::with_capacity(2);
    for kappa in [1.0, -1.0] {
        let b = e1 * (l3 * (1.0 - l1) / span).sqrt() + e3 * (kappa * (l1 * (l3 - 1.0) / span).sqrt());
        let m = (e1 * -(1.0 - l1).sqrt() + e3 * (kappa * (l3 - 1.0).sqrt()))
            * ((l3.sqrt() - l1.sqrt()) / span.sqrt());
        let q = (Mat3::identity() + outer(&b, &m)) * gm_inv;
        let r = Rotation::nearest(&q);
        out.push(factor_difference(r, f, g, fnorm)?);
    }
    if (out[0].shear() - out[1].shear()).norm() <= 1e-6 * fnorm {
        return Err(numeric("twin solutions are not distinct"));
    }
    Ok(out)
}

// rank-one factorisation of RG − F, validated against the residual contract
fn factor_difference(r: Rotation, f: &Mat3, g: &Mat3, fnorm: f64) -> Result<TwinSolution> {
    let d = r.matrix() * g - f;
    let s = svd3(&d);
    let n0 = s.v.column(0).into_owned();
    let sgn = canonical_sign(&n0);
    let n = n0 * sgn;
    let a = s.u.column(0).into_owned() * (s.sigma[0] * sgn);
    let residual = (d - outer(&a, &n)).norm();
    if residual > TWIN_RESIDUAL_TOL * fnorm {
        return Err(numeric(format!(
            "rank-one residual {residual:e} exceeds {:e}",
            TWIN_RESIDUAL_TOL * fnorm
        )));
    }
    Ok(TwinSolution { rotation: r, a, n, residual })
}

/// Austenite/twinned-martensite interface: R(Uᵢ + λa⊗n) = 1 + b⊗m.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HabitSolution {
    pub lambda: f64,
    pub rotation: Rotation,
    pub b: Vec3,
    pub m: Vec3,
    pub twin: TwinSolution,
    /// ‖R(Uᵢ + λa⊗n) − 1 − b⊗m‖.
    pub residual: f64,
}

/// Number of grid intervals for the volume-fraction root scan.
pub const HABIT_GRID: usize = 512;

/// Habit-plane solutions for the laminate Uᵢ + λ a⊗n built from a twin
/// (a, n) between well i and a second well, over λ ∈ (0, 1).
pub fn habit_solutions(ui: &Stretch, twin: &TwinSolution) -> Result<Vec<HabitSolution>> {
    let u = ui.matrix();
    let shear = twin.shear();
    if shear.norm() <= 1e-12 * u.norm() {
        return Ok(Vec::new());
    }
    let fl = |lam: f64| u + shear * lam;
    let g = |lam: f64| {
        let f = fl(lam);
        (f.transpose() * f - Mat3::identity()).determinant()
    };
    let mut roots = Vec::new();
    let mut prev = (0.0, g(0.0));
    for k in 1..=HABIT_GRID {
        let x = k as f64 / HABIT_GRID as f64;
        let gx = g(x);
        if gx == 0.0 && k < HABIT_GRID {
            roots.push(x);
        } else if prev.1 != 0.0 && gx != 0.0 && prev.1.signum() != gx.signum() {
            roots.push(bisect(&g, prev.0, x, prev.1));
        }
        prev = (x, gx);
    }
    let mut out = Vec::new();
    for lam in roots {
        if !(lam > 0.0 && lam < 1.0) {
            continue;
        }
        let f = fl(lam);
        let ev = sym_eigen(&(f.transpose() * f))?.values;
        if (ev[1] - 1.0).abs() > MIDDLE_EIGENVALUE_TOL.sqrt() {
            continue;
        }
        for sol in rank_one_rotations(&Mat3::identity(), &f).unwrap_or_default() {
            let residual =
                (sol.rotation.matrix() * f - Mat3::identity() - sol.shear()).norm();
            if residual <= HABIT_RESIDUAL_TOL {
                out.push(HabitSolution {
                    lambda: lam,
                    rotation: sol.rotation,
                    b: sol.a,
                    m: sol.n,
                    twin: *twin,
                    residual,
                });
            }
        }
    }
    Ok(out)
}

fn bisect<G: Fn(f64) -> f64>(g: &G, mut lo: f64, mut hi: f64, mut glo: f64) -> f64 {
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, Vector2};

    #[test]
    fn constructed_rank_one_recovered() {
        let a = Mat3::new(1.0, 0.2, 0.0, -0.1, 0.9, 0.3, 0.0, 0.0, 1.2);
        let (av, nv) = (Vec3::new(0.3, -0.2, 0.5), Vec3::new(1.0, 2.0, -2.0) / 3.0);
        let b = a + outer(&av, &nv);
        match rank_one_test(&a, &b) {
            RankOne::Connected { a: ra, n: rn, degenerate } => {
                assert!(!degenerate);
                assert!((outer(&ra, &rn) - outer(&av, &nv)).norm() < 1e-14);
                assert!((rn.norm() - 1.0).abs() < 1e-14);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn incompatible_pair_in_two_dimensions() {
        let e1 = Vector2::new(1.0, 0.0);
        let e2 = Vector2::new(0.0, 1.0);
        let a1: Matrix2<f64> = e2 * e2.transpose();
        let a2: Matrix2<f64> = (e1 + e2) * (e1 + e2).transpose();
        assert_eq!(rank_one_test(&a1, &a2), RankOne::Disconnected { rank: 2 });
    }

    #[test]
    fn equal_matrices_degenerate() {
        let a = Mat3::identity();
        match rank_one_test(&a, &a) {
            RankOne::Connected { a, degenerate, .. } => {
                assert!(degenerate);
                assert_eq!(a, Vec3::zeros());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn middle_eigenvalue_classes() {
        let t = middle_eigenvalue_gap(&crate::presets::terephthalic());
        assert!((t.lambda2 - 0.939).abs() < 1e-3);
        assert_eq!(t.classification, Classification::NoConnection);
        let id = middle_eigenvalue_gap(&Stretch::identity());
        assert_eq!(id.gap, 0.0);
        assert_eq!(id.classification, Classification::Coincident);
        let d = Stretch::new(Mat3::from_diagonal(&Vec3::new(1.1, 1.0, 0.9))).unwrap();
        let m = middle_eigenvalue_gap(&d);
        assert_eq!(m.gap, 0.0);
        assert_eq!(m.classification, Classification::Compatible);
    }

    #[test]
    fn twins_of_diagonal_stretch() {
        let d = Stretch::new(Mat3::from_diagonal(&Vec3::new(1.1, 1.0, 0.9))).unwrap();
        let sols = twin_solutions(&Mat3::identity(), &d).unwrap();
        assert_eq!(sols.len(), 2);
        for s in &sols {
            let r = s.rotation.matrix() * d.matrix() - Mat3::identity() - s.shear();
            assert!(r.norm() < 1e-10);
        }
    }

    #[test]
    fn terephthalic_has_no_twins_with_identity() {
        let sols = twin_solutions(&Mat3::identity(), &crate::presets::terephthalic()).unwrap();
        assert!(sols.is_empty());
    }

    #[test]
    fn identity_well_is_degenerate() {
        assert!(twin_solutions(&Mat3::identity(), &Stretch::identity()).is_err());
    }

    #[test]
    fn singular_target_rejected() {
        let f = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0));
        assert!(twin_solutions(&f, &Stretch::identity()).is_err());
    }
}
