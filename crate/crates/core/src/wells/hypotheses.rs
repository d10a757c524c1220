//! Sampling-based check of the structural hypotheses on a two-well density:
//! a zero floor near the parent wells, the product-well depth, the floor
//! away from both wells, and the growth bound.

use nalgebra::SMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{precondition, Result};

/// Growth constants of W ≥ c₀ + c₁|A|^p.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Growth {
    pub c0: f64,
    pub c1: f64,
    pub p: f64,
}

/// A density with a parent well set K₁ and a product well set K₂ in D×D
/// matrices.
pub trait WellEnergy<const D: usize>: Sync {
    fn energy(&self, a: &SMatrix<f64, D, D>) -> f64;
    fn dist_parent(&self, a: &SMatrix<f64, D, D>) -> f64;
    fn dist_product(&self, a: &SMatrix<f64, D, D>) -> f64;
    fn sample_parent(&self, rng: &mut ChaCha8Rng) -> SMatrix<f64, D, D>;
    fn sample_product(&self, rng: &mut ChaCha8Rng) -> SMatrix<f64, D, D>;
    /// dist(K₁, K₂).
    fn separation(&self) -> f64;
    fn growth(&self) -> Growth;
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport {
    /// min W over N_{ε/2}(K₁); should vanish.
    pub parent_min: f64,
    /// −min W over N_ε(K₂).
    pub delta_measured: f64,
    /// inf W outside N_ε(K₁) ∪ N_ε(K₂), inside the search box.
    pub alpha_measured: f64,
    /// All finite samples satisfy the growth bound to −1e−9.
    pub growth_ok: bool,
    /// Smallest W − c₀ − c₁|A|^p seen.
    pub growth_margin: f64,
    pub samples: usize,
}

const CHUNK: usize = 256;

#[derive(Clone, Copy, PartialEq)]
enum Region {
    Parent,
    Product,
    Outside,
}

struct Scan<const D: usize> {
    best: f64,
    arg: Option<SMatrix<f64, D, D>>,
    growth_margin: f64,
    count: usize,
}

fn random_ball<const D: usize>(rng: &mut ChaCha8Rng, radius: f64) -> SMatrix<f64, D, D> {
    use rand::Rng;
    let g = SMatrix::<f64, D, D>::from_fn(|_, _| StandardNormal.sample(rng));
    let dim = (D * D) as f64;
    let r = radius * rng.gen::<f64>().powf(1.0 / dim);
    g * (r / g.norm().max(f64::MIN_POSITIVE))
}

fn random_shell<const D: usize>(rng: &mut ChaCha8Rng, r0: f64, r1: f64) -> SMatrix<f64, D, D> {
    use rand::Rng;
    let g = SMatrix::<f64, D, D>::from_fn(|_, _| StandardNormal.sample(rng));
    let r = rng.gen_range(r0..r1);
    g * (r / g.norm().max(f64::MIN_POSITIVE))
}

fn feasible<const D: usize, W: WellEnergy<D>>(
    w: &W,
    region: Region,
    eps: f64,
    half_box: f64,
    a: &SMatrix<f64, D, D>,
) -> bool {
    match region {
        Region::Parent => w.dist_parent(a) <= 0.5 * eps,
        Region::Product => w.dist_product(a) <= eps,
        Region::Outside => {
            a.amax() <= half_box && w.dist_parent(a) > eps && w.dist_product(a) > eps
        }
    }
}

fn draw<const D: usize, W: WellEnergy<D>>(
    w: &W,
    region: Region,
    eps: f64,
    half_box: f64,
    index: usize,
    rng: &mut ChaCha8Rng,
) -> SMatrix<f64, D, D> {
    use rand::Rng;
    match region {
        // every eighth sample sits exactly on the well
        Region::Parent => {
            let base = w.sample_parent(rng);
            if index % 8 == 0 {
                base
            } else {
                base + random_ball(rng, 0.5 * eps)
            }
        }
        Region::Product => {
            let base = w.sample_product(rng);
            if index % 8 == 0 {
                base
            } else {
                base + random_ball(rng, eps)
            }
        }
        Region::Outside => match index % 3 {
            0 => SMatrix::<f64, D, D>::from_fn(|_, _| rng.gen_range(-half_box..half_box)),
            1 => w.sample_parent(rng) + random_shell(rng, eps, 3.0 * eps),
            _ => w.sample_product(rng) + random_shell(rng, eps, 3.0 * eps),
        },
    }
}

fn scan<const D: usize, W: WellEnergy<D>>(
    w: &W,
    region: Region,
    eps: f64,
    half_box: f64,
    budget: usize,
    seed: u64,
    stream: u64,
) -> Scan<D> {
    let g = w.growth();
    let chunks = budget.div_ceil(CHUNK);
    let parts: Vec<Scan<D>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream * (1 << 32) + c as u64);
            let mut s = Scan { best: f64::INFINITY, arg: None, growth_margin: f64::INFINITY, count: 0 };
            let n = CHUNK.min(budget - c * CHUNK);
            for i in 0..n {
                let a = draw(w, region, eps, half_box, c * CHUNK + i, &mut rng);
                if !feasible(w, region, eps, half_box, &a) {
                    continue;
                }
                let e = w.energy(&a);
                s.count += 1;
                if e.is_finite() {
                    s.growth_margin = s.growth_margin.min(e - g.c0 - g.c1 * a.norm().powf(g.p));
                }
                if e < s.best {
                    s.best = e;
                    s.arg = Some(a);
                }
            }
            s
        })
        .collect();
    // reduce in chunk order so ties resolve identically on every run
    let mut out = Scan { best: f64::INFINITY, arg: None, growth_margin: f64::INFINITY, count: 0 };
    for p in parts {
        out.count += p.count;
        out.growth_margin = out.growth_margin.min(p.growth_margin);
        if p.best < out.best {
            out.best = p.best;
            out.arg = p.arg;
        }
    }
    out
}

// compass search restricted to the region
fn refine<const D: usize, W: WellEnergy<D>>(
    w: &W,
    region: Region,
    eps: f64,
    half_box: f64,
    start: SMatrix<f64, D, D>,
) -> f64 {
    let mut x = start;
    let mut fx = w.energy(&x);
    let mut step = 0.25 * eps;
    while step > 1e-10 {
        let mut improved = false;
        for k in 0..D * D {
            for sgn in [1.0, -1.0] {
                let mut y = x;
                y[k] += sgn * step;
                if !feasible(w, region, eps, half_box, &y) {
                    continue;
                }
                let fy = w.energy(&y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    fx
}

/// Estimates the hypothesis quantities of `w` by seeded sampling of the
/// three regions followed by compass-search refinement of the best sample.
///
/// `half_box` bounds the search box [−half_box, half_box]^{D×D} used for the
/// region away from both wells; it must contain sampled points of both wells.
pub fn check_hypotheses<const D: usize, W: WellEnergy<D>>(
    w: &W,
    eps: f64,
    budget: usize,
    seed: u64,
    half_box: f64,
) -> Result<HypothesisReport> {
    let sep = w.separation();
    if !(eps > 0.0) || !(eps < 0.5 * sep) {
        return Err(precondition(format!(
            "ε = {eps} must be positive and below half the well separation {sep}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..32 {
        let p = w.sample_parent(&mut rng);
        let q = w.sample_product(&mut rng);
        if p.amax() > half_box || q.amax() > half_box {
            return Err(precondition("search box does not contain both wells"));
        }
    }
    let per = (budget / 3).max(CHUNK);
    let regions = [Region::Parent, Region::Product, Region::Outside];
    let mut mins = [0.0; 3];
    let mut growth_margin = f64::INFINITY;
    let mut samples = 0;
    for (i, region) in regions.into_iter().enumerate() {
        let s = scan(w, region, eps, half_box, per, seed, i as u64 + 1);
        samples += s.count;
        growth_margin = growth_margin.min(s.growth_margin);
        mins[i] = match s.arg {
            Some(a) => refine(w, region, eps, half_box, a).min(s.best),
            None => s.best,
        };
    }
    Ok(HypothesisReport {
        parent_min: mins[0],
        delta_measured: -mins[1],
        alpha_measured: mins[2],
        growth_ok: growth_margin >= -1e-9,
        growth_margin,
        samples,
    })
}
