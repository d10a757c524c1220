//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform random rotation from a normalised Gaussian quaternion.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    loop {
        let q = Quaternion::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 1e-3 && n <= 1.0 {
            return UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner();
        }
    }
}

fn axis_rotation(w: &Vector3<f64>) -> Matrix3<f64> {
    nalgebra::Rotation3::new(*w).into_inner()
}

/// Maximises f over SO(3): `samples` random rotations, then compass search on
/// left-multiplied axis-angle perturbations of the best one.
pub fn brute_force_max(f: impl Fn(&Matrix3<f64>) -> f64, samples: usize, seed: u64) -> (Matrix3<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = Matrix3::identity();
    let mut fb = f(&best);
    for _ in 0..samples {
        let r = random_rotation(&mut rng);
        let v = f(&r);
        if v > fb {
            fb = v;
            best = r;
        }
    }
    let mut step = 0.1;
    while step > 1e-12 {
        let mut improved = false;
        for k in 0..3 {
            for sgn in [1.0, -1.0] {
                let mut w = Vector3::zeros();
                w[k] = sgn * step;
                let r = axis_rotation(&w) * best;
                let v = f(&r);
                if v > fb {
                    fb = v;
                    best = r;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, fb)
}

/// Finite-difference solve of (R^{n−1} r′)′ = (n−1)R^{n−3} r on [ε, kε] with
/// r(ε) = λε, r(kε) = μkε, using the Thomas algorithm on `points` nodes.
pub fn radial_bvp(lambda: f64, mu: f64, n: usize, eps: f64, k: f64, points: usize) -> Vec<(f64, f64)> {
    let m = points - 1;
    let h = (k - 1.0) * eps / m as f64;
    let radius = |i: f64| eps + i * h;
    let nn = n as i32;
    let inner = m - 1;
    let (mut sub, mut diag, mut sup, mut rhs) = (vec![0.0; inner], vec![0.0; inner], vec![0.0; inner], vec![0.0; inner]);
    let (left, right) = (lambda * eps, mu * k * eps);
    for row in 0..inner {
        let i = (row + 1) as f64;
        let wl = radius(i - 0.5).powi(nn - 1);
        let wr = radius(i + 0.5).powi(nn - 1);
        sub[row] = wl / (h * h);
        sup[row] = wr / (h * h);
        diag[row] = -(wl + wr) / (h * h) - (n as f64 - 1.0) * radius(i).powi(nn - 3);
    }
    rhs[0] -= sub[0] * left;
    rhs[inner - 1] -= sup[inner - 1] * right;
    // forward sweep
    for row in 1..inner {
        let w = sub[row] / diag[row - 1];
        diag[row] -= w * sup[row - 1];
        rhs[row] -= w * rhs[row - 1];
    }
    let mut r = vec![0.0; inner];
    r[inner - 1] = rhs[inner - 1] / diag[inner - 1];
    for row in (0..inner - 1).rev() {
        r[row] = (rhs[row] - sup[row] * r[row + 1]) / diag[row];
    }
    let mut out = Vec::with_capacity(points);
    out.push((eps, left));
    for (row, v) in r.into_iter().enumerate() {
        out.push((radius((row + 1) as f64), v));
    }
    out.push((k * eps, right));
    out
}

/// Coefficient of determination of the least-squares line through (x, y).
pub fn linear_r2(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

/// Non-symmetric orientation of the CuAlNi lattice used where the aligned
/// orientation leaves the two wells indistinguishable under biaxial load.
pub fn generic_cualni_setup() -> metastab::deadload::DeadLoadSetup {
    use metastab::deadload::{DeadLoadSetup, MachineBasis, Orientation};
    use metastab::presets::{cualni_u1, cualni_u2};
    let orient = Orientation::axis_angle(&Vector3::new(0.3, 0.5, 1.0), 0.7).unwrap();
    DeadLoadSetup::new(&cualni_u1(), &cualni_u2(), &orient, MachineBasis::standard()).unwrap()
}
