//! Biaxial dead loading of a two-variant martensite: per-well minimisers of
//! the loading-device energy −T·A, the equal-energy curve σ₂ = f(σ₁), the
//! metastability-loss bound τ⁺ with its Schmid residual, and the laminate
//! competitor that defeats metastability beyond τ⁺.

use rayon::prelude::*;

use crate::compatibility::{twin_solutions, TwinSolution};
use crate::error::{invalid, numeric, precondition, regime, Result};
use crate::linalg::{dot, max_trace_rotation, outer, singular_values, Mat3, Rotation, Stretch, Vec3};
use crate::quad::gl_integrate;
use crate::wells::{constrained_energy, Well, WellFamily};

/// T = σ₁ e₁⊗e₁ + σ₂ e₂⊗e₂ with an orthonormal machine pair (e₁, e₂).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiaxialLoad {
    pub sigma1: f64,
    pub sigma2: f64,
    pub e1: Vec3,
    pub e2: Vec3,
}

impl BiaxialLoad {
    pub fn new(sigma1: f64, sigma2: f64, e1: Vec3, e2: Vec3) -> Result<Self> {
        if !(sigma1 > 0.0 && sigma2 > 0.0) || !sigma1.is_finite() || !sigma2.is_finite() {
            return Err(invalid(format!("tractions must be positive, got ({sigma1}, {sigma2})")));
        }
        let basis = MachineBasis::new(e1, e2)?;
        Ok(Self { sigma1, sigma2, e1: basis.e1, e2: basis.e2 })
    }

    /// Load along the standard axes e₁ = (1,0,0), e₂ = (0,1,0).
    pub fn standard(sigma1: f64, sigma2: f64) -> Result<Self> {
        Self::new(sigma1, sigma2, Vec3::x(), Vec3::y())
    }

    pub fn matrix(&self) -> Mat3 {
        outer(&self.e1, &self.e1) * self.sigma1 + outer(&self.e2, &self.e2) * self.sigma2
    }
}

/// Orthonormal pair (e₁, e₂) spanning the loading plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MachineBasis {
    pub e1: Vec3,
    pub e2: Vec3,
}

impl MachineBasis {
    pub fn new(e1: Vec3, e2: Vec3) -> Result<Self> {
        if (e1.norm() - 1.0).abs() > 1e-12 || (e2.norm() - 1.0).abs() > 1e-12 || e1.dot(&e2).abs() > 1e-12 {
            return Err(invalid("machine basis vectors must be orthonormal"));
        }
        Ok(Self { e1, e2 })
    }

    pub fn standard() -> Self {
        Self { e1: Vec3::x(), e2: Vec3::y() }
    }

    pub fn rotated(&self, q: &Rotation) -> Self {
        Self { e1: q.matrix() * self.e1, e2: q.matrix() * self.e2 }
    }

    pub fn load(&self, sigma1: f64, sigma2: f64) -> Mat3 {
        outer(&self.e1, &self.e1) * sigma1 + outer(&self.e2, &self.e2) * sigma2
    }
}

/// Rotation taking material-basis components to machine-basis components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Orientation(pub Rotation);

impl Orientation {
    /// Material basis equal to the machine basis.
    pub fn aligned() -> Self {
        Self(Rotation::identity())
    }

    pub fn axis_angle(axis: &Vec3, angle: f64) -> Result<Self> {
        Ok(Self(Rotation::from_axis_angle(axis, angle)?))
    }

    /// Machine-frame form Q U Qᵀ of a material-frame stretch.
    pub fn to_machine(&self, u: &Stretch) -> Stretch {
        u.conjugate(self.0.matrix())
    }
}

/// Minimiser of −T·RU over R ∈ SO(3).
#[derive(Clone, Copy, Debug)]
pub struct WellMin {
    pub rotation: Rotation,
    pub value: f64,
    pub unique: bool,
}

impl WellMin {
    pub fn point(&self, u: &Mat3) -> Mat3 {
        self.rotation.matrix() * u
    }
}

/// Minimises −T·RU for a machine-frame stretch U and load matrix T.
pub fn well_minimizer_matrix(t: &Mat3, u: &Mat3) -> WellMin {
    // −T·RU = −tr(R U Tᵀ)
    let tm = max_trace_rotation(&(u * t.transpose()));
    WellMin { rotation: tm.rotation, value: -tm.value, unique: tm.unique }
}

/// Minimiser of −T·RU′ with U′ the machine-frame form of `u`.
pub fn well_minimizer(load: &BiaxialLoad, u: &Stretch, orient: &Orientation) -> WellMin {
    well_minimizer_matrix(&load.matrix(), orient.to_machine(u).matrix())
}

/// Two wells in machine components together with the machine basis.
#[derive(Clone, Debug)]
pub struct DeadLoadSetup {
    pub u1: Stretch,
    pub u2: Stretch,
    pub basis: MachineBasis,
    /// True when the wells were exchanged so that well 1 is favoured at
    /// small σ₂.
    pub swapped: bool,
}

/// Relative energy difference below which two wells are treated as
/// indistinguishable by the load.
const DEGENERACY_TOL: f64 = 1e-12;

impl DeadLoadSetup {
    /// Machine-frame setup from material-frame stretches; wells are swapped
    /// if needed so well 1 wins at small σ₂.
    pub fn new(u1: &Stretch, u2: &Stretch, orient: &Orientation, basis: MachineBasis) -> Result<Self> {
        let mut s = Self {
            u1: orient.to_machine(u1),
            u2: orient.to_machine(u2),
            basis,
            swapped: false,
        };
        let (lo, hi) = (s.gap(1.0, 1e-3), s.gap(1.0, 1e3));
        let degenerate = |g: f64, scale: f64| g.abs() <= DEGENERACY_TOL * scale;
        if degenerate(lo, 1.0) && degenerate(hi, 1e3) {
            return Err(regime(
                "wells never exchange stability: the two well energies coincide for every biaxial load in this orientation",
            ));
        }
        if lo > 0.0 {
            std::mem::swap(&mut s.u1, &mut s.u2);
            s.swapped = true;
        }
        Ok(s)
    }

    pub fn load(&self, sigma1: f64, sigma2: f64) -> Mat3 {
        self.basis.load(sigma1, sigma2)
    }

    pub fn minimizers(&self, sigma1: f64, sigma2: f64) -> (WellMin, WellMin) {
        let t = self.load(sigma1, sigma2);
        (
            well_minimizer_matrix(&t, self.u1.matrix()),
            well_minimizer_matrix(&t, self.u2.matrix()),
        )
    }

    /// min-energy(well 1) − min-energy(well 2).
    pub fn gap(&self, sigma1: f64, sigma2: f64) -> f64 {
        let (m1, m2) = self.minimizers(sigma1, sigma2);
        m1.value - m2.value
    }

    /// Root σ₂ = f(σ₁) of the energy gap.
    pub fn curve_point(&self, sigma1: f64) -> Result<f64> {
        if !(sigma1 > 0.0) {
            return Err(invalid("σ₁ must be positive"));
        }
        let mut lo = 1e-3 * sigma1;
        let mut glo = self.gap(sigma1, lo);
        while glo >= 0.0 && lo > 1e-12 * sigma1 {
            lo *= 0.5;
            glo = self.gap(sigma1, lo);
        }
        let mut hi = sigma1;
        let mut ghi = self.gap(sigma1, hi);
        while ghi <= 0.0 && hi < 1e6 * sigma1 {
            hi *= 2.0;
            ghi = self.gap(sigma1, hi);
        }
        if !(glo < 0.0 && ghi > 0.0) {
            return Err(regime(format!(
                "wells never exchange stability along σ₁ = {sigma1}"
            )));
        }
        while hi - lo > 1e-13 * hi {
            let mid = 0.5 * (lo + hi);
            let g = self.gap(sigma1, mid);
            if g < 0.0 {
                lo = mid;
            } else if g > 0.0 {
                hi = mid;
            } else {
                return Ok(mid);
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub sigma1: f64,
    pub sigma2: f64,
    /// Second singular value of R₂U₂ − R₁U₁ at the curve point.
    pub rank_gap: f64,
}

#[derive(Clone, Debug)]
pub struct CurveTable {
    pub points: Vec<CurvePoint>,
    pub swapped: bool,
}

/// Tabulates σ₂ = f(σ₁) on the grid, with the rank gap of the equi-minimisers.
pub fn equal_energy_curve(setup: &DeadLoadSetup, sigma1_grid: &[f64]) -> Result<CurveTable> {
    let points: Vec<CurvePoint> = sigma1_grid
        .par_iter()
        .map(|&s1| {
            let f = setup.curve_point(s1)?;
            let (m1, m2) = setup.minimizers(s1, f);
            let d = m2.point(setup.u2.matrix()) - m1.point(setup.u1.matrix());
            Ok(CurvePoint { sigma1: s1, sigma2: f, rank_gap: singular_values(&d)[1] })
        })
        .collect::<Result<_>>()?;
    for w in points.windows(2) {
        if w[1].sigma1 > w[0].sigma1 && w[1].sigma2 <= w[0].sigma2 {
            return Err(numeric(format!(
                "curve is not increasing between σ₁ = {} and {}",
                w[0].sigma1, w[1].sigma1
            )));
        }
    }
    Ok(CurveTable { points, swapped: setup.swapped })
}

/// Load path T_τ = T(σ₁°, f(σ₁°)) + c₂τ(d₁e₁⊗e₁ + d₂e₂⊗e₂).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoadPath {
    pub sigma1: f64,
    pub sigma2: f64,
    pub c2: f64,
    pub direction: (f64, f64),
}

impl LoadPath {
    pub fn at(&self, tau: f64) -> (f64, f64) {
        (
            self.sigma1 + self.c2 * tau * self.direction.0,
            self.sigma2 + self.c2 * tau * self.direction.1,
        )
    }
}

/// State along the load path: the loaded variant-1 point and its twin partners.
#[derive(Clone, Debug)]
pub struct PathState {
    pub tau: f64,
    pub load: Mat3,
    /// R₁^τU₁.
    pub reference: Mat3,
    pub partners: Vec<TwinSolution>,
    /// W_τ(partner) − W_τ(R₁^τU₁) for each partner.
    pub values: Vec<f64>,
}

impl PathState {
    pub fn best(&self) -> usize {
        if self.values[1] < self.values[0] {
            1
        } else {
            0
        }
    }

    pub fn phi(&self) -> f64 {
        self.values[self.best()]
    }
}

#[derive(Clone, Debug)]
pub struct HysteresisBound {
    pub tau_plus: f64,
    pub path: LoadPath,
    /// Radius of the neighbourhood of K₁ that R₁^τU₁ stays in for τ ∈ [0, 1].
    pub eps: f64,
    /// Preferred rank-one partner B = R̂U₂.
    pub partner: Mat3,
    pub a: Vec3,
    pub n: Vec3,
    /// |a·T_{τ⁺} n|.
    pub schmid_residual: f64,
    /// ‖B − R₁^{τ⁺}U₁ − a⊗n‖.
    pub rank_one_residual: f64,
    /// |W(B_a) − W(B_b)| at τ⁺.
    pub partner_gap: f64,
    pub swapped: bool,
}

/// Number of τ samples used to verify that R₁^τU₁ stays near K₁.
pub const MEMBERSHIP_SAMPLES: usize = 65;
/// Number of τ samples in the root scan of φ on [0, 1].
pub const TAU_SCAN: usize = 256;

impl DeadLoadSetup {
    /// Variant-1 point and its twin partners at τ along `path`.
    pub fn path_state(&self, path: &LoadPath, tau: f64) -> Result<PathState> {
        let (s1, s2) = path.at(tau);
        let t = self.load(s1, s2);
        let m1 = well_minimizer_matrix(&t, self.u1.matrix());
        let reference = m1.point(self.u1.matrix());
        let partners = twin_solutions(&reference, &self.u2)?;
        if partners.len() != 2 {
            return Err(regime(format!("no twin partners of the variant-1 state at τ = {tau}")));
        }
        let wells = WellFamily::from_wells(vec![Well::new(self.u1), Well::new(self.u2)]);
        let values = partners
            .iter()
            .map(|p| {
                let b = p.rotation.matrix() * self.u2.matrix();
                constrained_energy(&b, &t, &reference, &wells)
            })
            .collect::<Vec<_>>();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(numeric(format!("twin partner left the wells at τ = {tau}")));
        }
        Ok(PathState { tau, load: t, reference, partners, values })
    }

    fn membership_ok(&self, path: &LoadPath, k1: &Mat3, eps: f64) -> bool {
        (0..MEMBERSHIP_SAMPLES).all(|i| {
            let tau = i as f64 / (MEMBERSHIP_SAMPLES - 1) as f64;
            let (s1, s2) = path.at(tau);
            let t = self.load(s1, s2);
            let p = well_minimizer_matrix(&t, self.u1.matrix()).point(self.u1.matrix());
            (p - k1).norm() <= eps
        })
    }

    /// Smallest τ⁺ ∈ (0, 1] where a twin partner of R₁^τU₁ ties with it in
    /// W_τ, along σ₂ ↦ f(σ₁°) + c₂τ (or the given direction).
    ///
    /// `c2 = None` picks the largest power of two ≤ 0.1·f(σ₁°) keeping
    /// R₁^τU₁ in N_ε(K₁), ε = 0.2·|K₁ − K₂|.
    pub fn hysteresis_bound(&self, sigma1: f64, c2: Option<f64>, direction: (f64, f64)) -> Result<HysteresisBound> {
        let f0 = self.curve_point(sigma1)?;
        let (m1, m2) = self.minimizers(sigma1, f0);
        let k1 = m1.point(self.u1.matrix());
        let k2 = m2.point(self.u2.matrix());
        let eps = 0.2 * (k1 - k2).norm();
        let mut path = LoadPath { sigma1, sigma2: f0, c2: 0.0, direction };
        match c2 {
            Some(c) => {
                if !(c > 0.0) {
                    return Err(invalid("c₂ must be positive"));
                }
                path.c2 = c;
                if !self.membership_ok(&path, &k1, eps) {
                    return Err(precondition(format!(
                        "c₂ = {c} moves R₁^τU₁ outside N_ε(K₁) with ε = {eps}"
                    )));
                }
            }
            None => {
                let mut c = 2f64.powi((0.1 * f0).log2().floor() as i32);
                path.c2 = c;
                let mut tries = 0;
                while !self.membership_ok(&path, &k1, eps) {
                    c *= 0.5;
                    path.c2 = c;
                    tries += 1;
                    if tries > 60 {
                        return Err(numeric("no admissible c₂ found"));
                    }
                }
            }
        }

        let s0 = self.path_state(&path, 0.0)?;
        if s0.phi() < 0.0 {
            return Err(numeric("variant 1 is not metastable at τ = 0"));
        }
        let mut prev = s0;
        let mut bracket = None;
        for k in 1..=TAU_SCAN {
            let tau = k as f64 / TAU_SCAN as f64;
            let s = self.path_state(&path, tau)?;
            if s.phi() <= 0.0 {
                bracket = Some((prev.tau, tau));
                break;
            }
            prev = s;
        }
        let (mut lo, mut hi) =
            bracket.ok_or_else(|| regime("no metastability loss in range τ ∈ (0, 1]"))?;
        while hi - lo > 1e-14 {
            let mid = 0.5 * (lo + hi);
            if self.path_state(&path, mid)?.phi() > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tau_plus = 0.5 * (lo + hi);
        let st = self.path_state(&path, tau_plus)?;
        let i = st.best();
        let p = &st.partners[i];
        let partner = p.rotation.matrix() * self.u2.matrix();
        Ok(HysteresisBound {
            tau_plus,
            path,
            eps,
            partner,
            a: p.a,
            n: p.n,
            schmid_residual: p.a.dot(&(st.load * p.n)).abs(),
            rank_one_residual: (partner - st.reference - p.shear()).norm(),
            partner_gap: (st.values[0] - st.values[1]).abs(),
            swapped: self.swapped,
        })
    }
}

/// Axis-aligned box domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl BoxDomain {
    pub fn new(lo: Vec3, hi: Vec3) -> Result<Self> {
        if (0..3).any(|i| !(hi[i] > lo[i])) {
            return Err(invalid("box must have positive side lengths"));
        }
        Ok(Self { lo, hi })
    }

    pub fn volume(&self) -> f64 {
        (self.hi - self.lo).product()
    }

    pub fn contains_interior(&self, x: &Vec3) -> bool {
        (0..3).all(|i| x[i] > self.lo[i] && x[i] < self.hi[i])
    }

    pub fn center(&self) -> Vec3 {
        0.5 * (self.lo + self.hi)
    }

    /// Volume of {x ∈ box : (x − x₀)·n ≥ t}.
    pub fn halfspace_volume(&self, x0: &Vec3, n: &Vec3, t: f64) -> f64 {
        // {w·x ≤ c} with w = −n, c = −t − n·x₀, in coordinates relative to lo
        let sides = self.hi - self.lo;
        let w = -n;
        let c = -t - n.dot(x0) + n.dot(&self.lo);
        lower_box_volume(&sides, &w, c)
    }
}

// volume of {x ∈ [0, L] : w·x ≤ c}
fn lower_box_volume(sides: &Vec3, w: &Vec3, c: f64) -> f64 {
    let scale: f64 = (0..3).map(|i| w[i].abs() * sides[i]).sum();
    let mut ls = Vec::new();
    let mut ws = Vec::new();
    let mut c = c;
    let mut extra = 1.0;
    for i in 0..3 {
        if w[i].abs() * sides[i] <= 1e-9 * scale {
            extra *= sides[i];
        } else if w[i] < 0.0 {
            // reflect x_i -> L_i - x_i
            c -= w[i] * sides[i];
            ls.push(sides[i]);
            ws.push(-w[i]);
        } else {
            ls.push(sides[i]);
            ws.push(w[i]);
        }
    }
    let d = ls.len();
    if d == 0 {
        return if c >= 0.0 { extra } else { 0.0 };
    }
    let full: f64 = ls.iter().product();
    let top: f64 = ls.iter().zip(&ws).map(|(l, w)| l * w).sum();
    if c <= 0.0 {
        return 0.0;
    }
    if c >= top {
        return full * extra;
    }
    let fact = (1..=d).product::<usize>() as f64;
    let wprod: f64 = ws.iter().product();
    let mut sum = 0.0;
    for mask in 0..(1usize << d) {
        let mut shift = 0.0;
        let mut parity = 1.0;
        for j in 0..d {
            if mask & (1 << j) != 0 {
                shift += ws[j] * ls[j];
                parity = -parity;
            }
        }
        let r = c - shift;
        if r > 0.0 {
            sum += parity * r.powi(d as i32);
        }
    }
    (sum / (fact * wprod)).clamp(0.0, full) * extra
}

#[derive(Clone, Debug)]
pub struct LaminateCompetitor {
    pub tau1: f64,
    pub xi: f64,
    /// ℰ(y_ξ) − ℰ(y*).
    pub energy_gap: f64,
    /// ‖y_ξ − R₁^{τ₁}U₁(x − x₀)‖_{L¹(Ω)}.
    pub l1_distance: f64,
    /// C(Ω) in l1_distance ≤ C(Ω)ξ|a|; here vol(Ω).
    pub l1_constant: f64,
    pub slab_volume: f64,
    pub partner: Mat3,
    pub a: Vec3,
    pub n: Vec3,
}

impl DeadLoadSetup {
    /// Three-piece competitor y_ξ built on the better twin partner at τ₁:
    /// R₁U₁(x − x₀) behind the slab, B(x − x₀) inside it, shifted by ξa after.
    pub fn laminate_counterexample(
        &self,
        path: &LoadPath,
        tau1: f64,
        xi: f64,
        x0: &Vec3,
        domain: &BoxDomain,
    ) -> Result<LaminateCompetitor> {
        if !(xi > 0.0) {
            return Err(invalid("slab width ξ must be positive"));
        }
        let st = self.path_state(path, tau1)?;
        let i = st.best();
        let p = &st.partners[i];
        let n = p.n;
        if !domain.contains_interior(x0) || !domain.contains_interior(&(x0 + n * xi)) {
            return Err(precondition("slab {0 ≤ (x − x₀)·n ≤ ξ} leaves the domain"));
        }
        let slab_volume =
            domain.halfspace_volume(x0, &n, 0.0) - domain.halfspace_volume(x0, &n, xi);
        let energy_gap = slab_volume * st.values[i];
        // |y_ξ − y*| = |a|·min(max(s, 0), ξ) with s = (x − x₀)·n
        let vertices: Vec<f64> = (0..8)
            .map(|m| {
                let v = Vec3::new(
                    if m & 1 == 0 { domain.lo.x } else { domain.hi.x },
                    if m & 2 == 0 { domain.lo.y } else { domain.hi.y },
                    if m & 4 == 0 { domain.lo.z } else { domain.hi.z },
                );
                (v - x0).dot(&n)
            })
            .collect();
        let mut knots = vec![0.0, xi];
        knots.extend(vertices.iter().copied().filter(|&s| s > 0.0 && s < xi));
        knots.sort_by(f64::total_cmp);
        let mut integral = 0.0;
        for w in knots.windows(2) {
            if w[1] > w[0] {
                integral += gl_integrate(|t| domain.halfspace_volume(x0, &n, t), w[0], w[1], 4);
            }
        }
        let l1_distance = p.a.norm() * integral;
        Ok(LaminateCompetitor {
            tau1,
            xi,
            energy_gap,
            l1_distance,
            l1_constant: domain.volume(),
            slab_volume,
            partner: p.rotation.matrix() * self.u2.matrix(),
            a: p.a,
            n,
        })
    }
}

/// Frobenius inner product −T·(B − A) for a rank-one pair.
pub fn resolved_energy(load: &Mat3, a: &Vec3, n: &Vec3) -> f64 {
    -dot(load, &outer(a, n))
}
