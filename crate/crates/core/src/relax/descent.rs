use std::collections::VecDeque;

use nalgebra::Vector2;

use super::energy::DoubleWell2D;
use super::mesh::MeshDeformation;

/// Limited-memory quasi-Newton directions with Armijo backtracking.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRule {
    pub memory: usize,
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Stop once the gradient norm falls below this value.
    pub gradient_tol: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        Self { memory: 8, armijo: 1e-4, max_backtracks: 40, gradient_tol: 1e-12 }
    }
}

#[derive(Clone, Debug)]
pub struct Descent {
    pub mesh: MeshDeformation,
    /// Energy before the first step and after each accepted step.
    pub energies: Vec<f64>,
    pub steps: usize,
    /// Line search failed to decrease the energy.
    pub stalled: bool,
    /// A non-finite energy or gradient was produced.
    pub diverged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn to_values(flat: &[f64]) -> Vec<Vector2<f64>> {
    flat.chunks_exact(2).map(|c| Vector2::new(c[0], c[1])).collect()
}

/// Runs up to `steps` iterations; the energy sequence is non-increasing.
pub fn descend(mesh: &MeshDeformation, w: &DoubleWell2D, steps: usize, rule: StepRule) -> Descent {
    let mut x = mesh.flat_values();
    let (mut f, mut g) = w.energy_and_gradient(mesh, &mesh.values);
    let mut energies = vec![f];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let (mut stalled, mut diverged) = (false, !f.is_finite());
    let mut taken = 0;

    while taken < steps && !diverged {
        if dot(&g, &g).sqrt() <= rule.gradient_tol {
            break;
        }
        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let scale = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= scale);
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut t = if history.is_empty() { 1.0 / dot(&g, &g).sqrt().max(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..rule.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let values = to_values(&trial);
            let (ft, gt) = w.energy_and_gradient(mesh, &values);
            if !ft.is_finite() {
                t *= 0.5;
                continue;
            }
            if ft <= f + rule.armijo * t * slope && ft <= f {
                accepted = Some((trial, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            stalled = true;
            break;
        };
        if gn.iter().any(|v| !v.is_finite()) {
            diverged = true;
            break;
        }
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if history.len() == rule.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        f = fn_;
        g = gn;
        energies.push(f);
        taken += 1;
    }
    let mut out = mesh.clone();
    out.set_flat_values(&x);
    Descent { mesh: out, energies, steps: taken, stalled, diverged }
}
