//! Transition-layer constants: convex-body geometry, the lower bound on the
//! layer constant γ, the optimal radial layer between two dilatation wells
//! (an upper bound on γ), and the metastability threshold δ₀.

use crate::error::{invalid, numeric, Result};
use crate::quad::adaptive;

/// Volume of the n-ball of radius r.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    // V_n = V_{n−2}·2π/n with V_0 = 1, V_1 = 2
    let mut v = if n % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if n % 2 == 0 { 2 } else { 3 };
    while k <= n {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v * r.powi(n as i32)
}

/// Convex body summarised by inner radius, outer radius and volume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvexBody {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub volume: f64,
    pub dim: usize,
}

impl ConvexBody {
    pub fn new(inner_radius: f64, outer_radius: f64, volume: f64, dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(inner_radius > 0.0 && inner_radius <= outer_radius) || !outer_radius.is_finite() {
            return Err(invalid(format!(
                "need 0 < r ≤ R, got r = {inner_radius}, R = {outer_radius}"
            )));
        }
        let (lo, hi) = (ball_volume(dim, inner_radius), ball_volume(dim, outer_radius));
        if !(volume >= lo * (1.0 - 1e-12) && volume <= hi * (1.0 + 1e-12)) {
            return Err(invalid(format!(
                "volume {volume} outside the ball bounds [{lo}, {hi}]"
            )));
        }
        Ok(Self { inner_radius, outer_radius, volume, dim })
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        Self::new(radius, radius, ball_volume(dim, radius), dim)
    }

    /// Cube of the given side length.
    pub fn cube(dim: usize, side: f64) -> Result<Self> {
        Self::new(0.5 * side, 0.5 * side * (dim as f64).sqrt(), side.powi(dim as i32), dim)
    }
}

/// E(C) = √(1 − r²/R²).
pub fn eccentricity(body: &ConvexBody) -> f64 {
    let q = body.inner_radius / body.outer_radius;
    (1.0 - q * q).max(0.0).sqrt()
}

/// γ = min(γ₁·vol(C)/vol(Ω), γ₀·5⁻ⁿ(1 − E²)^{n/2}) with γ₁ = min(γ₀, 1/4).
pub fn gamma_lower_bound(gamma0: f64, body: &ConvexBody, vol_omega: f64) -> Result<f64> {
    if !(gamma0 > 0.0) {
        return Err(invalid("γ₀ must be positive"));
    }
    if !(vol_omega > 0.0) || body.volume > vol_omega * (1.0 + 1e-12) {
        return Err(invalid("need 0 < vol(C) ≤ vol(Ω)"));
    }
    let n = body.dim as i32;
    let gamma1 = gamma0.min(0.25);
    let e = eccentricity(body);
    let first = gamma1 * body.volume / vol_omega;
    let second = gamma0 * 5f64.powi(-n) * (1.0 - e * e).powf(0.5 * n as f64);
    Ok(first.min(second))
}

/// Radial transition layer between the dilatations λ·1 (inside) and μ·1
/// (outside) on the annulus ε < |x| < kε.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerProfile {
    pub lambda: f64,
    pub mu: f64,
    pub n: usize,
    pub eps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialLayer {
    pub k_star: f64,
    pub rho_min: f64,
    /// Upper bound on γ: the smaller optimal ratio over both nucleus phases.
    pub gamma_upper: f64,
    /// λ = μ: no layer is needed.
    pub degenerate: bool,
}

impl LayerProfile {
    pub fn new(lambda: f64, mu: f64, n: usize, eps: f64) -> Result<Self> {
        if !(lambda > 0.0 && mu > 0.0) {
            return Err(invalid("dilatations must be positive"));
        }
        if n < 2 {
            return Err(invalid("dimension must be at least 2"));
        }
        if !(eps > 0.0) {
            return Err(invalid("inner radius must be positive"));
        }
        Ok(Self { lambda, mu, n, eps })
    }

    fn check_k(k: f64) -> Result<()> {
        if !(k > 1.0) || !k.is_finite() {
            return Err(invalid(format!("layer width ratio k = {k} must exceed 1")));
        }
        Ok(())
    }

    fn coefficients(&self, k: f64) -> (f64, f64) {
        let kn = k.powi(self.n as i32);
        let slope = (kn * self.mu - self.lambda) / (kn - 1.0);
        let singular = (self.lambda - self.mu) * (self.eps * k).powi(self.n as i32) / (kn - 1.0);
        (slope, singular)
    }

    /// r(R) on [ε, kε]: the minimiser of the layer energy with r(ε) = λε,
    /// r(kε) = μkε.
    pub fn profile(&self, k: f64, radius: f64) -> f64 {
        let (a, b) = self.coefficients(k);
        a * radius + b * radius.powi(1 - self.n as i32)
    }

    /// r′(R).
    pub fn profile_derivative(&self, k: f64, radius: f64) -> f64 {
        let (a, b) = self.coefficients(k);
        a + b * (1.0 - self.n as f64) * radius.powi(-(self.n as i32))
    }

    /// Layer-to-nucleus energy ratio
    /// ρ(k) = (kⁿ−1)/n + (kⁿμ−λ)²/(kⁿ−1) + (n−1)(λ−μ)²kⁿ/(kⁿ−1).
    pub fn rho(&self, k: f64) -> Result<f64> {
        Self::check_k(k)?;
        let n = self.n as f64;
        let kn = k.powi(self.n as i32);
        let d = self.lambda - self.mu;
        Ok((kn - 1.0) / n
            + (kn * self.mu - self.lambda).powi(2) / (kn - 1.0)
            + (n - 1.0) * d * d * kn / (kn - 1.0))
    }

    /// ρ(k) by adaptive quadrature of ∫ s^{n−1}(1 + (n−1)(r/R)² + r′²) ds
    /// over s = R/ε ∈ [1, k].
    pub fn rho_quadrature(&self, k: f64) -> Result<f64> {
        Self::check_k(k)?;
        let n = self.n as i32;
        let integrand = |s: f64| {
            let radius = s * self.eps;
            let r = self.profile(k, radius);
            let dr = self.profile_derivative(k, radius);
            s.powi(n - 1) * (1.0 + (n - 1) as f64 * (r / radius).powi(2) + dr * dr)
        };
        adaptive(integrand, 1.0, k, 1e-12)
    }

    /// kⁿ at the optimum: 1 + n|λ−μ|/√(1+nμ²).
    pub fn k_star_power(&self) -> f64 {
        let n = self.n as f64;
        1.0 + n * (self.lambda - self.mu).abs() / (1.0 + n * self.mu * self.mu).sqrt()
    }

    pub fn k_star(&self) -> f64 {
        self.k_star_power().powf(1.0 / self.n as f64)
    }

    /// min over k > 1 of ρ(k): (n−1)d² + 2|d|√(1+nμ²) − 2μd, d = λ − μ.
    pub fn rho_min(&self) -> f64 {
        rho_min_formula(self.lambda, self.mu, self.n)
    }

    /// min(ρ_min(λ, μ), ρ_min(μ, λ)).
    pub fn gamma_upper(&self) -> f64 {
        rho_min_formula(self.lambda, self.mu, self.n).min(rho_min_formula(self.mu, self.lambda, self.n))
    }

    /// Optimal width, minimum ratio and γ upper bound, cross-checked against
    /// the closed-form ρ(k*).
    pub fn radial_layer(&self) -> Result<RadialLayer> {
        if self.lambda == self.mu {
            return Ok(RadialLayer { k_star: 1.0, rho_min: 0.0, gamma_upper: 0.0, degenerate: true });
        }
        let k_star = self.k_star();
        let rho_min = self.rho_min();
        let at_star = self.rho(k_star)?;
        if (at_star - rho_min).abs() > 1e-10 * rho_min.max(1.0) {
            return Err(numeric(format!(
                "ρ(k*) = {at_star} disagrees with ρ_min = {rho_min}"
            )));
        }
        Ok(RadialLayer { k_star, rho_min, gamma_upper: self.gamma_upper(), degenerate: false })
    }
}

fn rho_min_formula(lambda: f64, mu: f64, n: usize) -> f64 {
    let n = n as f64;
    let d = lambda - mu;
    (n - 1.0) * d * d + 2.0 * d.abs() * (1.0 + n * mu * mu).sqrt() - 2.0 * mu * d
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThresholdBranch {
    /// c₀ ≥ c₁.
    GrowthDominated,
    /// α ≤ c₀ < c₁.
    OffsetDominated,
    /// α > c₀ and c₁ > c₀.
    Interpolated,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Threshold {
    /// K with W ≥ K(1 + |A|^p) away from both wells.
    pub k: f64,
    /// δ₀ = (K/2)·min(γ, Δ·min(1, γ)).
    pub delta0: f64,
    pub branch: ThresholdBranch,
}

/// Constant K from the growth constants (c₀, c₁), the floor α away from
/// the wells, and the threshold depth δ₀ given γ and Δ.
pub fn metastability_threshold(c0: f64, c1: f64, alpha: f64, p: f64, gamma: f64, delta: f64) -> Result<Threshold> {
    if !(c1 > 0.0 && alpha > 0.0 && gamma > 0.0 && delta > 0.0 && p > 1.0) || !c0.is_finite() {
        return Err(invalid("need c₁ > 0, α > 0, γ > 0, Δ > 0, p > 1 and finite c₀"));
    }
    let (k, branch) = if c0 >= c1 {
        (c1, ThresholdBranch::GrowthDominated)
    } else if alpha <= c0 {
        (c0, ThresholdBranch::OffsetDominated)
    } else {
        (alpha * c1 / (alpha + c1 - c0), ThresholdBranch::Interpolated)
    };
    assert!(k > 0.0, "K must be positive on every branch");
    let delta0 = 0.5 * k * gamma.min(delta * gamma.min(1.0));
    Ok(Threshold { k, delta0, branch })
}
