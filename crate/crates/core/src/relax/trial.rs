use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::descent::{descend, StepRule};
use super::energy::DoubleWell2D;
use super::mesh::MeshDeformation;
use crate::compatibility::RankOne;
use crate::error::{invalid, precondition, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialConfig {
    pub nucleus_radius: f64,
    pub cells: usize,
    pub trials: usize,
    pub seed: u64,
    pub descent_budget: usize,
    /// Amplitude of the uniform nodal perturbation added to each start.
    pub noise: f64,
    pub step_rule: StepRule,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            nucleus_radius: 1.0 / 16.0,
            cells: 64,
            trials: 1000,
            seed: 0,
            descent_budget: 60,
            noise: 1e-4,
            step_rule: StepRule::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialSummary {
    pub trials: usize,
    /// Trials whose final energy fell below −tol.
    pub lowered_count: usize,
    /// Trials abandoned because the descent produced a non-finite energy.
    pub aborted_count: usize,
    /// Smallest final energy over completed trials (the parent state has 0).
    pub min_energy_gap: f64,
    pub tol: f64,
    pub final_energies: Vec<f64>,
}

/// Planted nucleus: gradient A₂ inside the disc |x − c| ≤ r, A₁ outside
/// r + h, and a linear blend across the one-element ring between.
pub fn plant_nucleus(mesh: &mut MeshDeformation, w: &DoubleWell2D, centre: Vector2<f64>, radius: f64) {
    let h = mesh.spacing();
    let (a1, a2) = (w.a1, w.a2);
    mesh.set_values(|x| {
        let inner = a1 * centre + a2 * (x - centre);
        let outer = a1 * x;
        let theta = (((x - centre).norm() - radius) / h).clamp(0.0, 1.0);
        inner * (1.0 - theta) + outer * theta
    });
}

/// Seeded nucleation experiment: plant a small nucleus of the product well,
/// relax it, and count the trials that end strictly below the parent energy.
pub fn nucleation_trial(w: &DoubleWell2D, cfg: &TrialConfig) -> Result<TrialSummary> {
    let r = cfg.nucleus_radius;
    if !(r > 0.0 && r < 0.25) {
        return Err(invalid("nucleus radius must lie in (0, 1/4)"));
    }
    let base = MeshDeformation::crossed(cfg.cells)?;
    let h = base.spacing();
    let margin = r + 2.0 * h;
    if margin >= 0.5 {
        return Err(invalid("mesh too coarse for the nucleus radius"));
    }
    let tol = 1e-9 * base.volume();
    let results: Vec<Option<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            let centre = Vector2::new(rng.gen_range(margin..1.0 - margin), rng.gen_range(margin..1.0 - margin));
            let mut mesh = base.clone();
            plant_nucleus(&mut mesh, w, centre, r);
            if cfg.noise > 0.0 {
                for v in mesh.values.iter_mut() {
                    v[0] += rng.gen_range(-cfg.noise..cfg.noise);
                    v[1] += rng.gen_range(-cfg.noise..cfg.noise);
                }
            }
            let out = descend(&mesh, w, cfg.descent_budget, cfg.step_rule);
            let last = *out.energies.last().expect("energy trace is never empty");
            (!out.diverged && last.is_finite()).then_some(last)
        })
        .collect();
    let final_energies: Vec<f64> = results.iter().map(|r| r.unwrap_or(f64::NAN)).collect();
    let completed: Vec<f64> = results.iter().flatten().copied().collect();
    Ok(TrialSummary {
        trials: cfg.trials,
        lowered_count: completed.iter().filter(|&&e| e < -tol).count(),
        aborted_count: cfg.trials - completed.len(),
        min_energy_gap: completed.iter().copied().fold(f64::INFINITY, f64::min),
        tol,
        final_energies,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StripOutcome {
    pub strip_volume: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// −δ·(strip volume)/2.
    pub threshold: f64,
}

/// Laminate start for a rank-one pair: gradient A₂ on a full-width strip of
/// grid rows around x₂ = 1/2 and A₁ elsewhere, followed by descent.
pub fn laminate_strip_trial(
    w: &DoubleWell2D,
    cells: usize,
    strip_width: f64,
    descent_budget: usize,
    rule: StepRule,
) -> Result<StripOutcome> {
    let w = w.aligned();
    let a = match w.connection() {
        RankOne::Connected { degenerate: false, .. } => (w.a2 - w.a1) * Vector2::new(0.0, 1.0),
        _ => return Err(precondition("laminate strip needs rank-one connected wells")),
    };
    let mut mesh = MeshDeformation::crossed(cells)?;
    let h = mesh.spacing();
    let rows = ((strip_width / h).round() as usize).clamp(1, cells);
    let lo = ((cells - rows) / 2) as f64 * h;
    let hi = lo + rows as f64 * h;
    let a1: Matrix2<f64> = w.a1;
    mesh.set_values(|x| a1 * x + a * (x[1].clamp(lo, hi) - lo));
    let initial_energy = w.total_energy(&mesh);
    let out = descend(&mesh, &w, descent_budget, rule);
    let strip_volume = hi - lo;
    Ok(StripOutcome {
        strip_volume,
        initial_energy,
        final_energy: *out.energies.last().expect("energy trace is never empty"),
        threshold: -0.5 * w.delta * strip_volume,
    })
}
