//! Polyconvex isotropic density with two dilatational wells k₁SO(3), k₂SO(3):
//!
//! W₀(A) = c₁(λ₁^α + λ₂^α + λ₃^α) + h(λ₁λ₂λ₃),   W_τ(A) = W₀(A) − τ H(det A),
//!
//! where λᵢ are the principal stretches, h = h̄ + h̃ is convex, h̄ vanishes
//! exactly on {k³ : k ∈ k₁ ∪ k₂} and H is a smooth bump equal to one on
//! {k³ : k ∈ k₂}.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, numeric, Result};
use crate::linalg::{max_trace_rotation, singular_values, Mat3, Rotation};

use super::hypotheses::{Growth, WellEnergy};

/// Compact subset of (0, ∞) given as a finite union of closed intervals
/// (a point is a degenerate interval).
#[derive(Clone, Debug, PartialEq)]
pub struct KSet {
    intervals: Vec<(f64, f64)>,
}

impl KSet {
    pub fn points(ks: &[f64]) -> Result<Self> {
        Self::intervals(ks.iter().map(|&k| (k, k)).collect())
    }

    pub fn intervals(mut iv: Vec<(f64, f64)>) -> Result<Self> {
        if iv.is_empty() {
            return Err(invalid("empty well set"));
        }
        for &(lo, hi) in &iv {
            if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
                return Err(invalid(format!("invalid interval [{lo}, {hi}] in (0, ∞)")));
            }
        }
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in iv {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn as_slice(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn min(&self) -> f64 {
        self.intervals[0].0
    }

    pub fn max(&self) -> f64 {
        self.intervals[self.intervals.len() - 1].1
    }

    fn gap_to(&self, other: &KSet) -> f64 {
        let mut g = f64::INFINITY;
        for &(a0, a1) in &self.intervals {
            for &(b0, b1) in &other.intervals {
                let d = if a1 < b0 {
                    b0 - a1
                } else if b1 < a0 {
                    a0 - b1
                } else {
                    0.0
                };
                g = g.min(d);
            }
        }
        g
    }

    fn cubed(&self) -> Vec<(f64, f64)> {
        self.intervals.iter().map(|&(l, u)| (l.powi(3), u.powi(3))).collect()
    }

    /// Distance from `a` to the set {kR : k ∈ self, R ∈ SO(3)}.
    pub fn well_distance(&self, a: &Mat3) -> f64 {
        let tm = max_trace_rotation(&a.transpose());
        let r = tm.rotation.matrix();
        let k_free = tm.value / 3.0;
        self.intervals
            .iter()
            .map(|&(l, u)| (a - r * k_free.clamp(l, u)).norm())
            .fold(f64::INFINITY, f64::min)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Mat3 {
        let (l, u) = self.intervals[rng.gen_range(0..self.intervals.len())];
        let k = if u > l { rng.gen_range(l..=u) } else { l };
        Rotation::random(rng).matrix() * k
    }
}

fn dist_to_union(t: f64, set: &[(f64, f64)]) -> f64 {
    set.iter()
        .map(|&(l, u)| if t < l { l - t } else if t > u { t - u } else { 0.0 })
        .fold(f64::INFINITY, f64::min)
}

/// Quintic smoothstep 6x⁵ − 15x⁴ + 10x³ on [0, 1].
fn smootherstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (x * (6.0 * x - 15.0) + 10.0)
}

// factor of h̄ vanishing on one interval [l, u] of det values, with its first
// two derivatives
fn factor(t: f64, l: f64, u: f64) -> (f64, f64, f64) {
    if l == u {
        let d = t - l;
        (d * d, 2.0 * d, 2.0)
    } else if t > u {
        let d = t - u;
        (d.powi(4), 4.0 * d.powi(3), 12.0 * d * d)
    } else if t < l {
        let d = l - t;
        (d.powi(4), -4.0 * d.powi(3), 12.0 * d * d)
    } else {
        (0.0, 0.0, 0.0)
    }
}

// h̃ on [b, b + 1]: its second derivative is g(u) = κ₀(1 − u/ℓ)₊ + amp·β(u)
// with β a biweight bump of centre m and half-width w.
#[derive(Clone, Debug)]
struct Blend {
    v0: f64,
    s0: f64,
    v1: f64,
    kappa0: f64,
    ell: f64,
    amp: f64,
    m: f64,
    w: f64,
}

impl Blend {
    fn build(c1: f64, alpha: f64, b: f64) -> Result<Self> {
        let e = alpha / 3.0;
        let v0 = -3.0 * c1 * b.powf(e);
        let s0 = -c1 * alpha * b.powf(e - 1.0);
        let v1 = -3.0 * c1 * (b + 1.0).powf(e);
        let kappa0 = c1 * alpha * (3.0 - alpha) / 3.0 * b.powf(e - 2.0);
        let slope_total = -s0;
        let lift = v1 - v0 - s0;
        if !(lift > 0.0 && lift < slope_total) {
            return Err(numeric("tangent condition for the h̃ blend fails"));
        }
        let mut ell = 1.0;
        for _ in 0..80 {
            let s_rem = slope_total - 0.5 * kappa0 * ell;
            let e_rem = lift - kappa0 * (0.5 * ell - ell * ell / 6.0);
            if s_rem > 0.0 && e_rem > 0.0 && e_rem < s_rem {
                let m = 1.0 - e_rem / s_rem;
                let w = 0.999 * m.min(1.0 - m);
                let amp = s_rem / (16.0 * w / 15.0);
                return Ok(Self { v0, s0, v1, kappa0, ell, amp, m, w });
            }
            ell *= 0.5;
        }
        Err(numeric("could not build a convex h̃ blend"))
    }

    fn ramp(&self, u: f64) -> (f64, f64, f64) {
        // ∫₀ᵘ(u − s)q(s) ds, ∫₀ᵘ q, q for q(s) = (1 − s/ℓ)₊
        let l = self.ell;
        if u <= l {
            (u * u / 2.0 - u.powi(3) / (6.0 * l), u - u * u / (2.0 * l), 1.0 - u / l)
        } else {
            (u * l / 2.0 - l * l / 6.0, l / 2.0, 0.0)
        }
    }

    fn bump(&self, u: f64) -> (f64, f64, f64) {
        let (m, w) = (self.m, self.w);
        let x = ((u - m) / w).clamp(-1.0, 1.0);
        let p0 = |x: f64| x - 2.0 * x.powi(3) / 3.0 + x.powi(5) / 5.0;
        let p1 = |x: f64| x * x / 2.0 - x.powi(4) / 2.0 + x.powi(6) / 6.0;
        let b1 = w * (p0(x) - p0(-1.0));
        let b2 = w * (m * (p0(x) - p0(-1.0)) + w * (p1(x) - p1(-1.0)));
        let beta = if (u - m).abs() < w { (1.0 - x * x).powi(2) } else { 0.0 };
        (u * b1 - b2, b1, beta)
    }

    fn eval(&self, u: f64) -> (f64, f64, f64) {
        let (r0, r1, r2) = self.ramp(u);
        let (q0, q1, q2) = self.bump(u);
        (
            self.v0 + self.s0 * u + self.kappa0 * r0 + self.amp * q0,
            self.s0 + self.kappa0 * r1 + self.amp * q1,
            self.kappa0 * r2 + self.amp * q2,
        )
    }
}

/// Assembled density data.
#[derive(Clone, Debug)]
pub struct DilatationalSpec {
    k1: KSet,
    k2: KSet,
    alpha: f64,
    c1: f64,
    c1_min: f64,
    a: f64,
    b: f64,
    rho: f64,
    zeros: Vec<(f64, f64)>,
    n2: Vec<(f64, f64)>,
    blend: Blend,
}

impl DilatationalSpec {
    /// Builds the density. `c1` defaults to twice the smallest coefficient
    /// that makes h convex on [a, b]; a user value below that bound is
    /// rejected. `bump_width` caps the support half-width of H.
    pub fn new(k1: KSet, k2: KSet, alpha: f64, c1: Option<f64>, bump_width: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 3.0) {
            return Err(invalid(format!("exponent α = {alpha} must lie in (1, 3)")));
        }
        if !(bump_width > 0.0) {
            return Err(invalid("bump width must be positive"));
        }
        let gap = k1.gap_to(&k2);
        if !(gap > 0.0) {
            return Err(invalid("k₁ and k₂ must be disjoint"));
        }
        let mut zeros: Vec<(f64, f64)> = k1.cubed();
        zeros.extend(k2.cubed());
        zeros.sort_by(|x, y| x.0.total_cmp(&y.0));
        let z_min = zeros[0].0;
        let z_max = zeros.iter().map(|z| z.1).fold(0.0, f64::max);
        let a = 0.5 * z_min;
        let b = 1.25 * z_max;

        let n1 = k1.cubed();
        let n2 = k2.cubed();
        let mut det_gap = f64::INFINITY;
        for &(l1, u1) in &n1 {
            for &(l2, u2) in &n2 {
                det_gap = det_gap.min(if u1 < l2 { l2 - u1 } else { l1 - u2 });
            }
        }
        let rho = bump_width.min(0.5 * det_gap);

        let mut spec = Self {
            k1,
            k2,
            alpha,
            c1: 1.0,
            c1_min: 0.0,
            a,
            b,
            rho,
            zeros,
            n2,
            blend: Blend::build(1.0, alpha, b)?,
        };
        let c1_min = spec.curvature_bound();
        let c1 = match c1 {
            Some(c) if c > c1_min && c > 0.0 => c,
            Some(c) => {
                return Err(invalid(format!(
                    "c₁ = {c} does not exceed the convexity bound {c1_min}"
                )))
            }
            None if c1_min > 0.0 => 2.0 * c1_min,
            None => 1.0,
        };
        spec.c1 = c1;
        spec.c1_min = c1_min;
        spec.blend = Blend::build(c1, alpha, b)?;
        spec.verify_convexity()?;
        Ok(spec)
    }

    // smallest c₁ with h̄'' + c₁α(3−α)/3·t^{α/3−2} ≥ 0 on [a, b], on a grid
    fn curvature_bound(&self) -> f64 {
        let n = 8192;
        let e = self.alpha / 3.0;
        let mut worst = f64::NEG_INFINITY;
        for i in 0..=n {
            let t = self.a + (self.b - self.a) * i as f64 / n as f64;
            let need = -self.hbar_derivs(t).2 * 3.0 * t.powf(2.0 - e)
                / (self.alpha * (3.0 - self.alpha));
            worst = worst.max(need);
        }
        worst
    }

    fn verify_convexity(&self) -> Result<()> {
        let n = 20000;
        let hi = self.b + 2.0;
        for i in 1..=n {
            let t = hi * i as f64 / n as f64;
            let d2 = self.h_second(t);
            if d2 < -1e-12 * (1.0 + self.h(t).abs()) {
                return Err(numeric(format!("assembled h is not convex near t = {t}")));
            }
        }
        Ok(())
    }

    pub fn k1(&self) -> &KSet {
        &self.k1
    }

    pub fn k2(&self) -> &KSet {
        &self.k2
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    /// Convexity threshold that c₁ must exceed.
    pub fn c1_min(&self) -> f64 {
        self.c1_min
    }

    /// Lower bound of h: −3c₁(b+1)^{α/3}.
    pub fn c0(&self) -> f64 {
        self.blend.v1
    }

    /// Bracket [a, b] of the zero set of h̄.
    pub fn bracket(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Support half-width of the bump H.
    pub fn bump_width(&self) -> f64 {
        self.rho
    }

    fn hbar_derivs(&self, t: f64) -> (f64, f64, f64) {
        let fs: Vec<(f64, f64, f64)> =
            self.zeros.iter().map(|&(l, u)| factor(t, l, u)).collect();
        let mut v = 1.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for (i, fi) in fs.iter().enumerate() {
            v *= fi.0;
            let mut p1 = fi.1;
            let mut p2 = fi.2;
            for (j, fj) in fs.iter().enumerate() {
                if j != i {
                    p1 *= fj.0;
                    p2 *= fj.0;
                }
            }
            d1 += p1;
            d2 += p2;
            for (k, fk) in fs.iter().enumerate().skip(i + 1) {
                let mut p = 2.0 * fi.1 * fk.1;
                for (j, fj) in fs.iter().enumerate() {
                    if j != i && j != k {
                        p *= fj.0;
                    }
                }
                d2 += p;
            }
        }
        (v, d1, d2)
    }

    /// h̄(t); +∞ for t ≤ 0.
    pub fn hbar(&self, t: f64) -> f64 {
        if t <= 0.0 {
            f64::INFINITY
        } else {
            self.hbar_derivs(t).0
        }
    }

    /// h̃(t) for t > 0.
    pub fn htilde(&self, t: f64) -> f64 {
        self.htilde_derivs(t).0
    }

    fn htilde_derivs(&self, t: f64) -> (f64, f64, f64) {
        let e = self.alpha / 3.0;
        let c1 = self.c1;
        if t <= self.b {
            (
                -3.0 * c1 * t.powf(e),
                -c1 * self.alpha * t.powf(e - 1.0),
                c1 * self.alpha * (3.0 - self.alpha) / 3.0 * t.powf(e - 2.0),
            )
        } else if t < self.b + 1.0 {
            self.blend.eval(t - self.b)
        } else {
            (self.blend.v1, 0.0, 0.0)
        }
    }

    /// h = h̄ + h̃; +∞ for t ≤ 0.
    pub fn h(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::INFINITY;
        }
        self.hbar_derivs(t).0 + self.htilde_derivs(t).0
    }

    /// h′′(t) for t > 0.
    pub fn h_second(&self, t: f64) -> f64 {
        self.hbar_derivs(t).2 + self.htilde_derivs(t).2
    }

    /// Smooth bump H(t) ∈ [0, 1], equal to 1 on {k³ : k ∈ k₂}.
    pub fn bump(&self, t: f64) -> f64 {
        1.0 - smootherstep(dist_to_union(t, &self.n2) / self.rho)
    }

    /// W₀(A); +∞ when det A ≤ 0.
    pub fn w0(&self, a: &Mat3) -> f64 {
        let det = a.determinant();
        if !(det > 0.0) {
            return f64::INFINITY;
        }
        let s = singular_values(a);
        self.c1 * s.iter().map(|l| l.powf(self.alpha)).sum::<f64>() + self.h(det)
    }

    /// W_τ(A) = W₀(A) − τH(det A).
    pub fn energy(&self, a: &Mat3, tau: f64) -> f64 {
        let w = self.w0(a);
        if w.is_finite() {
            w - tau * self.bump(a.determinant())
        } else {
            w
        }
    }

    /// Constants (c₀, c₁′) with W₀(A) ≥ c₀ + c₁′|A|^α for det A > 0.
    pub fn growth(&self) -> (f64, f64) {
        (self.c0(), self.c1 * 1f64.min(3f64.powf(1.0 - 0.5 * self.alpha)))
    }
}

/// W_τ bound to a fixed τ, for the hypothesis checker.
#[derive(Clone, Debug)]
pub struct DilatationalEnergy {
    pub spec: DilatationalSpec,
    pub tau: f64,
}

impl WellEnergy<3> for DilatationalEnergy {
    fn energy(&self, a: &Mat3) -> f64 {
        self.spec.energy(a, self.tau)
    }

    fn dist_parent(&self, a: &Mat3) -> f64 {
        self.spec.k1.well_distance(a)
    }

    fn dist_product(&self, a: &Mat3) -> f64 {
        self.spec.k2.well_distance(a)
    }

    fn sample_parent(&self, rng: &mut ChaCha8Rng) -> Mat3 {
        self.spec.k1.sample(rng)
    }

    fn sample_product(&self, rng: &mut ChaCha8Rng) -> Mat3 {
        self.spec.k2.sample(rng)
    }

    fn separation(&self) -> f64 {
        3f64.sqrt() * self.spec.k1.gap_to(&self.spec.k2)
    }

    fn growth(&self) -> Growth {
        let (c0, c1) = self.spec.growth();
        Growth { c0: c0 - self.tau, c1, p: self.spec.alpha }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vec3;
    use rand::SeedableRng;

    fn two_points() -> DilatationalSpec {
        DilatationalSpec::new(
            KSet::points(&[1.0]).unwrap(),
            KSet::points(&[1.2]).unwrap(),
            2.0,
            None,
            0.05,
        )
        .unwrap()
    }

    #[test]
    fn zero_on_wells() {
        let s = two_points();
        let r = Rotation::from_axis_angle(&Vec3::new(1.0, 1.0, 0.0), 0.4).unwrap();
        assert!(s.energy(r.matrix(), 0.0).abs() < 1e-13);
        assert!(s.energy(&(r.matrix() * 1.2), 0.0).abs() < 1e-12);
        assert!((s.energy(&(r.matrix() * 1.2), 0.3) + 0.3).abs() < 1e-12);
        assert!(s.energy(r.matrix(), 0.3).abs() < 1e-13);
    }

    #[test]
    fn nonpositive_determinant_is_infinite() {
        let s = two_points();
        let m = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert_eq!(s.energy(&m, 0.0), f64::INFINITY);
        assert_eq!(s.energy(&Mat3::zeros(), 0.0), f64::INFINITY);
    }

    #[test]
    fn blend_matches_endpoints() {
        let s = two_points();
        let b = s.b;
        let below = s.htilde_derivs(b);
        let just = s.blend.eval(0.0);
        assert!((below.0 - just.0).abs() < 1e-12);
        assert!((below.1 - just.1).abs() < 1e-12);
        assert!((below.2 - just.2).abs() < 1e-9);
        let end = s.blend.eval(1.0);
        assert!((end.0 - s.c0()).abs() < 1e-12);
        assert!(end.1.abs() < 1e-12);
        assert!(end.2.abs() < 1e-12);
    }

    #[test]
    fn rejects_overlap_and_bad_exponent() {
        let k = KSet::points(&[1.0]).unwrap();
        assert!(DilatationalSpec::new(k.clone(), k.clone(), 2.0, None, 0.1).is_err());
        let k2 = KSet::points(&[1.1]).unwrap();
        assert!(DilatationalSpec::new(k.clone(), k2.clone(), 3.0, None, 0.1).is_err());
        assert!(DilatationalSpec::new(k, k2, 2.0, Some(1e-9), 0.1).is_err());
    }

    #[test]
    fn interval_wells() {
        let s = DilatationalSpec::new(
            KSet::intervals(vec![(0.9, 1.0)]).unwrap(),
            KSet::intervals(vec![(1.2, 1.25)]).unwrap(),
            1.5,
            None,
            0.05,
        )
        .unwrap();
        for k in [0.9, 0.95, 1.0, 1.2, 1.22] {
            assert!(s.energy(&(Mat3::identity() * k), 0.0).abs() < 1e-12, "k = {k}");
        }
        assert!(s.energy(&(Mat3::identity() * 1.1), 0.0) > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = s.k2.sample(&mut rng);
        assert!(s.k2.well_distance(&a) < 1e-12);
    }
}
