//! Explicit constructions showing where transition-layer estimates break:
//! rooms joined by thin corridors, a three-piece map whose transition set
//! carries zero gradient, and a sequence bounded in L¹ that splits two
//! gradients across a vanishing strip.

use nalgebra::{Matrix2, SMatrix, SVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::quad::gauss_legendre;

/// Rooms Q_j = (a_j, 0) + h_j(−1, 1)² joined by corridors
/// C_j = [a_j + h_j, a_{j+1} − h_{j+1}] × (−d_j, d_j) of length l_j.
#[derive(Clone, Debug, PartialEq)]
pub struct RoomsPassages {
    /// Room half-sides h_1, …, h_J.
    pub h: Vec<f64>,
    /// Corridor lengths l_1, …, l_{J−1}.
    pub l: Vec<f64>,
    /// Corridor half-thicknesses d_1, …, d_{J−1}.
    pub d: Vec<f64>,
}

impl RoomsPassages {
    pub fn new(h: Vec<f64>, l: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        if h.len() < 2 || l.len() + 1 != h.len() || d.len() != l.len() {
            return Err(invalid("need J ≥ 2 rooms with J − 1 corridor lengths and thicknesses"));
        }
        if h.iter().chain(&l).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(invalid("room sizes and corridor lengths must be positive"));
        }
        if h.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("room half-sides must decrease"));
        }
        for (j, &dj) in d.iter().enumerate() {
            if !(dj > 0.0 && dj < h[j + 1]) {
                return Err(invalid(format!(
                    "corridor {} half-thickness {dj} must lie in (0, h_{} = {})",
                    j + 1,
                    j + 2,
                    h[j + 1]
                )));
            }
        }
        Ok(Self { h, l, d })
    }

    /// h_j = l_j = 2^{−j}, j = 1..=rooms, corridor j of half-thickness
    /// `fraction`·h_{j+1} with 0 < fraction < 1.
    pub fn dyadic(rooms: usize, fraction: f64) -> Result<Self> {
        if rooms < 2 {
            return Err(invalid("need at least two rooms"));
        }
        let h: Vec<f64> = (1..=rooms).map(|j| 0.5f64.powi(j as i32)).collect();
        let l: Vec<f64> = (1..rooms).map(|j| 0.5f64.powi(j as i32)).collect();
        let d = (1..rooms).map(|j| fraction * h[j]).collect();
        Self::new(h, l, d)
    }

    pub fn rooms(&self) -> usize {
        self.h.len()
    }

    /// Room centres a_j (1-based index j ↦ element j − 1).
    pub fn centres(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.h.len()];
        for j in 1..self.h.len() {
            a[j] = a[j - 1] + self.h[j - 1] + self.l[j - 1] + self.h[j];
        }
        a
    }

    /// Copy with corridor `j` (1-based) set to half-thickness `d`.
    pub fn with_corridor(&self, j: usize, d: f64) -> Result<Self> {
        let mut dd = self.d.clone();
        dd[j - 1] = d;
        Self::new(self.h.clone(), self.l.clone(), dd)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoomsRatio {
    /// ∫ over C_{j−1} ∪ C_j of (1 + |Dy|^p).
    pub layer_energy: f64,
    /// 4h_j².
    pub nucleus_volume: f64,
    pub ratio: f64,
}

// ∫ over [x0, x0 + len] × (−d, d) of (1 + |G(x)|^p) with G(x) = base + s(x)Δ +
// (Δx)⊗e₁/len, s(x) = (x₁ − x0)/len rising (sgn = 1) or falling (sgn = −1)
fn corridor_energy(x0: f64, len: f64, d: f64, base: &Matrix2<f64>, delta: &Matrix2<f64>, p: f64) -> f64 {
    let even = p.fract() == 0.0 && (p as i64) % 2 == 0;
    let (nodes, panels) = if even { ((p as usize) / 2 + 2, 1) } else { (12, 8) };
    let (gx, gw) = gauss_legendre(nodes);
    let mut total = 0.0;
    for i in 0..panels {
        let (lo1, hi1) = (x0 + len * i as f64 / panels as f64, x0 + len * (i + 1) as f64 / panels as f64);
        for k in 0..panels {
            let (lo2, hi2) = (-d + 2.0 * d * k as f64 / panels as f64, -d + 2.0 * d * (k + 1) as f64 / panels as f64);
            let (m1, r1) = (0.5 * (lo1 + hi1), 0.5 * (hi1 - lo1));
            let (m2, r2) = (0.5 * (lo2 + hi2), 0.5 * (hi2 - lo2));
            for (xa, wa) in gx.iter().zip(&gw) {
                for (xb, wb) in gx.iter().zip(&gw) {
                    let x = Vector2::new(m1 + r1 * xa, m2 + r2 * xb);
                    let s = (x[0] - x0) / len;
                    let dx = delta * x;
                    let g = base + delta * s + Matrix2::new(dx[0], 0.0, dx[1], 0.0) / len;
                    let n2 = g.norm_squared();
                    let gp = if even { n2.powi((p as i32) / 2) } else { n2.powf(0.5 * p) };
                    total += wa * wb * r1 * r2 * (1.0 + gp);
                }
            }
        }
    }
    total
}

/// Energy of the transition corridors around room j (1-based, 2 ≤ j ≤ J−1)
/// for the map equal to A₂x in Q_j, A₁x away from Q_j and its corridors, and
/// linearly interpolated in x₁ along C_{j−1} and C_j.
pub fn rooms_ratio(geom: &RoomsPassages, a1: &Matrix2<f64>, a2: &Matrix2<f64>, p: f64, j: usize) -> Result<RoomsRatio> {
    if !(p >= 1.0) {
        return Err(invalid("exponent p must be at least 1"));
    }
    let rooms = geom.rooms();
    if j < 2 || j + 1 > rooms {
        return Err(invalid(format!("room index j = {j} must satisfy 2 ≤ j ≤ {}", rooms - 1)));
    }
    let a = geom.centres();
    let (jm, jj) = (j - 2, j - 1); // zero-based indices of C_{j−1} and room j
    let delta = a2 - a1;
    // C_{j−1}: y = sA₂x + (1−s)A₁x, s from 0 to 1
    let start_prev = a[jm] + geom.h[jm];
    let e_prev = corridor_energy(start_prev, geom.l[jm], geom.d[jm], a1, &delta, p);
    // C_j: y = sA₁x + (1−s)A₂x = A₂x + s(A₁ − A₂)x
    let start_next = a[jj] + geom.h[jj];
    let e_next = corridor_energy(start_next, geom.l[jj], geom.d[jj], a2, &(-delta), p);
    let layer_energy = e_prev + e_next;
    let nucleus_volume = 4.0 * geom.h[jj] * geom.h[jj];
    Ok(RoomsRatio { layer_energy, nucleus_volume, ratio: layer_energy / nucleus_volume })
}

/// Largest common half-thickness d (up to bisection accuracy) of the two
/// corridors next to room j for which the ratio falls below `target`.
pub fn corridor_for_ratio(
    geom: &RoomsPassages,
    a1: &Matrix2<f64>,
    a2: &Matrix2<f64>,
    p: f64,
    j: usize,
    target: f64,
) -> Result<f64> {
    if !(target > 0.0) {
        return Err(invalid("target ratio must be positive"));
    }
    let ratio_at = |d: f64| -> Result<f64> {
        let g = geom.with_corridor(j - 1, d)?.with_corridor(j, d)?;
        Ok(rooms_ratio(&g, a1, a2, p, j)?.ratio)
    };
    let mut hi = 0.999 * geom.h[j - 1].min(geom.h[j]);
    if ratio_at(hi)? < target {
        return Ok(hi);
    }
    let mut lo = hi;
    while ratio_at(lo)? >= target {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(invalid("target ratio not reachable"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio_at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(lo)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroGradientLayer {
    /// ∫ over the transition set of |Dy|^p (the gradient vanishes there).
    pub layer_gradient_energy: f64,
    /// Area of {x₂ ≥ 1−δ, x₁ + x₂ ≤ 2−δ}.
    pub layer_measure: f64,
    /// min of the two phase areas, δ²/2.
    pub min_phase_volume: f64,
}

/// Three-piece map on (0,1)² with gradients e₂⊗e₂, 0 and (e₁+e₂)⊗(e₁+e₂).
pub fn zero_gradient_layer(delta: f64) -> Result<ZeroGradientLayer> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("δ must lie in (0, 1)"));
    }
    Ok(ZeroGradientLayer {
        layer_gradient_energy: 0.0,
        layer_measure: delta * (1.0 - delta) + 0.5 * delta * delta,
        min_phase_volume: (0.5 * delta * delta).min(1.0 - delta),
    })
}

/// The three-piece deformation y_δ at x ∈ (0,1)².
pub fn zero_gradient_map(delta: f64, x: &Vector2<f64>) -> Vector2<f64> {
    if x[1] < 1.0 - delta {
        Vector2::new(0.0, x[1])
    } else if x[0] + x[1] <= 2.0 - delta {
        Vector2::new(0.0, 1.0 - delta)
    } else {
        let s = x[0] + x[1];
        Vector2::new(s + delta - 2.0, s - 1.0)
    }
}

/// Gradient of y_δ on each piece.
pub fn zero_gradient_gradient(delta: f64, x: &Vector2<f64>) -> Matrix2<f64> {
    if x[1] < 1.0 - delta {
        Matrix2::new(0.0, 0.0, 0.0, 1.0)
    } else if x[0] + x[1] <= 2.0 - delta {
        Matrix2::zeros()
    } else {
        Matrix2::new(1.0, 1.0, 1.0, 1.0)
    }
}

/// Splitting sequence y⁽ʲ⁾ on [−1, 1]^D: Ax for x₁ ≤ 0, Bx for x₁ ≥ 1/j,
/// and jx₁Bx + (1 − jx₁)Ax in between.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L1Sequence<const D: usize> {
    pub a: SMatrix<f64, D, D>,
    pub b: SMatrix<f64, D, D>,
    pub j: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L1Report {
    /// ∫ |Dy⁽ʲ⁾| over [−1, 1]^D.
    pub l1_norm: f64,
    /// Measure of the strip {0 < x₁ < 1/j}.
    pub strip_measure: f64,
    /// j-independent bound 2^{D−1}(|A| + |B| + max(|A|, |B|) + √D|B − A|).
    pub bound: f64,
    /// Largest deviation of the gradient formula from central differences
    /// at sampled strip points.
    pub gradient_residual: f64,
}

impl<const D: usize> L1Sequence<D> {
    pub fn new(a: SMatrix<f64, D, D>, b: SMatrix<f64, D, D>, j: u32) -> Result<Self> {
        if j == 0 {
            return Err(invalid("sequence index j must be at least 1"));
        }
        Ok(Self { a, b, j })
    }

    /// The strip formula extended as a polynomial to all x.
    pub fn strip_map(&self, x: &SVector<f64, D>) -> SVector<f64, D> {
        let s = self.j as f64 * x[0];
        self.b * x * s + self.a * x * (1.0 - s)
    }

    pub fn map(&self, x: &SVector<f64, D>) -> SVector<f64, D> {
        if x[0] <= 0.0 {
            self.a * x
        } else if x[0] >= 1.0 / self.j as f64 {
            self.b * x
        } else {
            self.strip_map(x)
        }
    }

    /// jx₁B + (1 − jx₁)A + j(B − A)x⊗e₁ inside the strip.
    pub fn strip_gradient(&self, x: &SVector<f64, D>) -> SMatrix<f64, D, D> {
        let j = self.j as f64;
        let s = j * x[0];
        let mut g = self.b * s + self.a * (1.0 - s);
        let col = (self.b - self.a) * x * j;
        for i in 0..D {
            g[(i, 0)] += col[i];
        }
        g
    }

    pub fn strip_measure(&self) -> f64 {
        2f64.powi(D as i32 - 1) / self.j as f64
    }

    pub fn bound(&self) -> f64 {
        let (na, nb) = (self.a.norm(), self.b.norm());
        2f64.powi(D as i32 - 1) * (na + nb + na.max(nb) + (D as f64).sqrt() * (self.b - self.a).norm())
    }

    /// ∫ |Dy| over the strip by tensor Gauss–Legendre quadrature.
    fn strip_integral(&self) -> f64 {
        let (gx, gw) = gauss_legendre(20);
        let panels = 4usize;
        let width = 1.0 / self.j as f64;
        let total_pts = (gx.len() * panels).pow(D as u32);
        let per_axis = gx.len() * panels;
        let mut sum = 0.0;
        for idx in 0..total_pts {
            let mut rem = idx;
            let mut x = SVector::<f64, D>::zeros();
            let mut w = 1.0;
            for axis in 0..D {
                let k = rem % per_axis;
                rem /= per_axis;
                let (panel, node) = (k / gx.len(), k % gx.len());
                let (lo, hi) = if axis == 0 { (0.0, width) } else { (-1.0, 1.0) };
                let step = (hi - lo) / panels as f64;
                let a = lo + step * panel as f64;
                x[axis] = a + 0.5 * step * (gx[node] + 1.0);
                w *= 0.5 * step * gw[node];
            }
            sum += w * self.strip_gradient(&x).norm();
        }
        sum
    }

    pub fn report(&self, samples: usize, seed: u64) -> L1Report {
        let half = 2f64.powi(D as i32 - 1);
        let width = 1.0 / self.j as f64;
        let outside = half * self.a.norm() + half * (1.0 - width) * self.b.norm();
        let l1_norm = outside + self.strip_integral();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1e-3;
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x = SVector::<f64, D>::from_fn(|i, _| {
                if i == 0 {
                    rng.gen_range(0.0..width)
                } else {
                    rng.gen_range(-1.0..1.0)
                }
            });
            let g = self.strip_gradient(&x);
            for c in 0..D {
                let mut xp = x;
                let mut xm = x;
                xp[c] += h;
                xm[c] -= h;
                let fd = (self.strip_map(&xp) - self.strip_map(&xm)) / (2.0 * h);
                for r in 0..D {
                    worst = worst.max((fd[r] - g[(r, c)]).abs());
                }
            }
        }
        L1Report { l1_norm, strip_measure: self.strip_measure(), bound: self.bound(), gradient_residual: worst }
    }
}
