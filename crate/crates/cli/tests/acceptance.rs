//! Acceptance suite: one PASS/FAIL line per criterion, timed against its
//! runtime limit. Exits nonzero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use metastab::compatibility::twin_solutions;
use metastab::counterexamples::{corridor_for_ratio, rooms_ratio, zero_gradient_layer, L1Sequence, RoomsPassages};
use metastab::deadload::{equal_energy_curve, well_minimizer_matrix, BoxDomain, DeadLoadSetup, MachineBasis, Orientation};
use metastab::layers::{gamma_lower_bound, metastability_threshold, ConvexBody, LayerProfile, ThresholdBranch};
use metastab::presets::{cualni_u1, cualni_u2, CUALNI_LATTICE};
use metastab::relax::{
    laminate_strip_trial, nucleation_trial, plant_nucleus, DoubleWell2D, MeshDeformation, StepRule, TrialConfig,
};
use metastab::{Mat3, Vec3};
use nalgebra::{Matrix2, Matrix3, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Check = Result<String, String>;

const BIN: &str = env!("CARGO_BIN_EXE_metastab");

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cli(args: &[&str]) -> Result<(String, Duration), String> {
    let start = Instant::now();
    let out = Command::new(BIN).args(args).output().map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok((String::from_utf8(out.stdout).map_err(|e| e.to_string())?, elapsed))
}

fn cli_json(args: &[&str]) -> Result<Value, String> {
    let (text, _) = cli(args)?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn matrix_of(v: &Value) -> Option<Mat3> {
    let rows = v.as_array()?;
    let mut m = Mat3::zeros();
    for (i, row) in rows.iter().enumerate() {
        for (j, x) in row.as_array()?.iter().enumerate() {
            m[(i, j)] = x.as_f64()?;
        }
    }
    Some(m)
}

fn terephthalic_eigenvalues() -> Check {
    let doc = cli_json(&["lambda2", "--preset", "terephthalic"])?;
    let ev: Vec<f64> = doc["eigenvalues"].as_array().ok_or("no eigenvalues")?.iter().filter_map(Value::as_f64).collect();
    for (got, want) in ev.iter().zip([0.825, 0.939, 1.339]) {
        ensure((got - want).abs() <= 1e-3, || format!("eigenvalue {got} vs {want}"))?;
    }
    ensure(ev.len() == 3, || "expected three eigenvalues".into())?;
    ensure(doc["compatible"] == Value::Bool(false), || "classified as rank-one connected".into())?;
    Ok(format!("eigenvalues {:.4} {:.4} {:.4}, {}", ev[0], ev[1], ev[2], doc["classification"]))
}

fn cualni_variants() -> Check {
    let doc = cli_json(&["variants", "--preset", "cualni"])?;
    let (a, b, g) = CUALNI_LATTICE;
    let (p, m) = ((a + g) / 2.0, (a - g) / 2.0);
    let expected = [
        Mat3::new(p, m, 0.0, m, p, 0.0, 0.0, 0.0, b),
        Mat3::new(p, -m, 0.0, -m, p, 0.0, 0.0, 0.0, b),
        Mat3::new(p, 0.0, m, 0.0, b, 0.0, m, 0.0, p),
        Mat3::new(p, 0.0, -m, 0.0, b, 0.0, -m, 0.0, p),
        Mat3::new(b, 0.0, 0.0, 0.0, p, m, 0.0, m, p),
        Mat3::new(b, 0.0, 0.0, 0.0, p, -m, 0.0, -m, p),
    ];
    let got: Vec<Mat3> =
        doc["variants"].as_array().ok_or("no variants")?.iter().map(matrix_of).collect::<Option<_>>().ok_or("bad matrix")?;
    ensure(got.len() == 6, || format!("{} variants", got.len()))?;
    let mut worst: f64 = 0.0;
    for (u, e) in got.iter().zip(&expected) {
        worst = worst.max((u - e).abs().max());
    }
    ensure(worst <= 1e-12, || format!("max entry error {worst:.3e}"))?;
    Ok(format!("6 variants, max entry error {worst:.1e}"))
}

fn twin_count() -> Check {
    let setup = common::generic_cualni_setup();
    let hb = setup.hysteresis_bound(1.0, None, (0.0, 1.0)).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for tau in [0.01, 0.05] {
        let f = setup.path_state(&hb.path, tau).map_err(|e| e.to_string())?.reference;
        let sols = twin_solutions(&f, &setup.u2).map_err(|e| e.to_string())?;
        ensure(sols.len() == 2, || format!("τ = {tau}: {} solutions", sols.len()))?;
        for s in &sols {
            let r = (s.rotation.matrix() * setup.u2.matrix() - f - s.shear()).norm() / f.norm();
            worst = worst.max(r);
        }
    }
    ensure(worst <= 1e-10, || format!("relative residual {worst:.3e}"))?;
    Ok(format!("2 solutions at τ = 0.01 and 0.05 on the loaded path, relative residual {worst:.1e}"))
}

// 10⁶-sample brute-force check of both minimisers at every curve point.
fn curve_checks(setup: &DeadLoadSetup) -> Check {
    let grid: Vec<f64> = (0..16).map(|i| 0.5 + 1.5 * i as f64 / 15.0).collect();
    let table = equal_energy_curve(setup, &grid).map_err(|e| e.to_string())?;
    for w in table.points.windows(2) {
        ensure(w[1].sigma2 > w[0].sigma2, || format!("not increasing at σ₁ = {}", w[1].sigma1))?;
    }
    let min_gap = table.points.iter().map(|p| p.rank_gap).fold(f64::INFINITY, f64::min);
    ensure(min_gap > 1e-6, || format!("rank gap {min_gap:.3e}"))?;
    let mut worst: f64 = 0.0;
    for (k, p) in table.points.iter().enumerate() {
        let t = setup.load(p.sigma1, p.sigma2);
        for (w, u) in [setup.u1.matrix(), setup.u2.matrix()].into_iter().enumerate() {
            let m = well_minimizer_matrix(&t, u);
            let (r, best) = common::brute_force_max(|r| (t.transpose() * r * u).trace(), 1_000_000, (2 * k + w) as u64);
            worst = worst.max((-best - m.value).abs()).max((r * u - m.point(u)).norm());
        }
    }
    ensure(worst <= 1e-6, || format!("brute-force mismatch {worst:.3e}"))?;
    Ok(format!("16 points increasing, min rank gap {min_gap:.4}, brute-force mismatch {worst:.1e}"))
}

fn curve_properties() -> Check {
    let generic = curve_checks(&common::generic_cualni_setup());
    let note = match &generic {
        Ok(s) => format!("axis (0.3, 0.5, 1), angle 0.7: {s}"),
        Err(e) => format!("axis (0.3, 0.5, 1), angle 0.7 also fails: {e}"),
    };
    println!("    note: {note}");
    let aligned = DeadLoadSetup::new(&cualni_u1(), &cualni_u2(), &Orientation::aligned(), MachineBasis::standard())
        .map_err(|e| format!("aligned bases: {e}"))?;
    curve_checks(&aligned)
}

fn schmid_residual() -> Check {
    let setup = common::generic_cualni_setup();
    let hb = setup.hysteresis_bound(1.0, None, (0.0, 1.0)).map_err(|e| e.to_string())?;
    ensure(hb.tau_plus > 0.0, || "τ⁺ not positive".into())?;
    let t = setup.load(hb.path.at(hb.tau_plus).0, hb.path.at(hb.tau_plus).1);
    let schmid = hb.a.dot(&(t * hb.n)).abs();
    ensure(schmid < 1e-8, || format!("|a·Tn| = {schmid:.3e}"))?;
    let domain = BoxDomain::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 0.1)).map_err(|e| e.to_string())?;
    let x0 = domain.center();
    let gap = |f: f64| {
        setup.laminate_counterexample(&hb.path, f * hb.tau_plus, 0.01, &x0, &domain).map(|c| c.energy_gap).map_err(|e| e.to_string())
    };
    let (above, below) = (gap(1.01)?, gap(0.99)?);
    ensure(above < 0.0, || format!("gap at 1.01τ⁺ is {above:.3e}"))?;
    ensure(below >= 0.0, || format!("gap at 0.99τ⁺ is {below:.3e}"))?;
    Ok(format!(
        "axis (0.3, 0.5, 1), angle 0.7: τ⁺ = {:.6}, |a·Tn| = {schmid:.1e}, gaps {below:.2e} / {above:.2e}",
        hb.tau_plus
    ))
}

fn radial_layers() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut quad, mut opt, mut bvp): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..20 {
        let lambda = rng.gen_range(0.6..1.6);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let mu = lambda + sign * rng.gen_range(0.01..0.5);
        let n = rng.gen_range(2..=4usize);
        let p = LayerProfile::new(lambda, mu, n, 1.0).map_err(|e| e.to_string())?;
        let ks = p.k_star();
        for k in [1.1, 1.5, 2.0, ks] {
            let a = p.rho(k).map_err(|e| e.to_string())?;
            let b = p.rho_quadrature(k).map_err(|e| e.to_string())?;
            quad = quad.max((a - b).abs() / a.abs().max(1.0));
        }
        let at_star = p.rho(ks).map_err(|e| e.to_string())?;
        opt = opt.max((at_star - p.rho_min()).abs() / p.rho_min().abs().max(1.0));
        let sol = common::radial_bvp(lambda, mu, n, 1.0, ks, 4096);
        let err = sol.iter().map(|(r, v)| (v - p.profile(ks, *r)).abs()).fold(0.0, f64::max);
        bvp = bvp.max(err);
    }
    ensure(quad < 1e-8, || format!("closed form vs quadrature {quad:.3e}"))?;
    ensure(opt < 1e-10, || format!("ρ(k*) vs ρ_min {opt:.3e}"))?;
    ensure(bvp < 1e-4, || format!("boundary-value sup error {bvp:.3e}"))?;
    for (lambda, n) in [(0.9, 2), (1.0, 3), (1.3, 4)] {
        let r = LayerProfile::new(lambda, lambda, n, 1.0).and_then(|p| p.radial_layer()).map_err(|e| e.to_string())?;
        ensure(r.rho_min == 0.0, || format!("λ = μ = {lambda}: ρ_min = {}", r.rho_min))?;
    }
    Ok(format!("quadrature {quad:.1e}, optimum {opt:.1e}, boundary-value {bvp:.1e}, λ = μ gives 0"))
}

fn constant_formulas() -> Check {
    // (c₀, c₁, α) → (K, branch), γ = Δ = 1
    let table = [
        (2.0, 1.0, 0.3, 1.0, ThresholdBranch::GrowthDominated),
        (1.0, 1.0, 5.0, 1.0, ThresholdBranch::GrowthDominated),
        (0.7, 1.0, 0.5, 0.7, ThresholdBranch::OffsetDominated),
        (0.4, 2.0, 0.4, 0.4, ThresholdBranch::OffsetDominated),
        (0.5, 1.0, 2.0, 0.8, ThresholdBranch::Interpolated),
        (-1.0, 1.0, 1.0, 1.0 / 3.0, ThresholdBranch::Interpolated),
    ];
    for (c0, c1, alpha, k, branch) in table {
        let t = metastability_threshold(c0, c1, alpha, 2.0, 1.0, 1.0).map_err(|e| e.to_string())?;
        ensure(t.branch == branch && (t.k - k).abs() < 1e-15, || format!("({c0}, {c1}, {alpha}): K = {} {:?}", t.k, t.branch))?;
        ensure((t.delta0 - 0.5 * k).abs() < 1e-15, || format!("δ₀ = {}", t.delta0))?;
    }
    let k = |c0: f64, c1: f64, a: f64| metastability_threshold(c0, c1, a, 2.0, 0.5, 0.3).map(|t| t.k);
    let h = 1e-13;
    let mut jump: f64 = 0.0;
    for (c0, c1, a) in [(1.0, 1.0, 0.5), (1.0, 1.0, 2.0), (0.6, 1.0, 0.6), (0.3, 2.0, 0.3)] {
        jump = jump.max((k(c0 + h, c1, a).map_err(|e| e.to_string())? - k(c0 - h, c1, a).map_err(|e| e.to_string())?).abs());
        jump = jump.max((k(c0, c1, a + h).map_err(|e| e.to_string())? - k(c0, c1, a - h).map_err(|e| e.to_string())?).abs());
    }
    ensure(jump < 1e-12, || format!("branch jump {jump:.3e}"))?;
    let disc = ConvexBody::ball(2, 1.0).map_err(|e| e.to_string())?;
    let g = gamma_lower_bound(1.0, &disc, disc.volume).map_err(|e| e.to_string())?;
    ensure((g - 0.04).abs() < 1e-15, || format!("γ = {g}"))?;
    Ok(format!("{} triples, max jump {jump:.1e}, γ = {g}", table.len()))
}

fn noone_pair() -> (Matrix2<f64>, Matrix2<f64>) {
    let e2 = Vector2::new(0.0, 1.0);
    let s = Vector2::new(1.0, 1.0);
    (e2 * e2.transpose(), s * s.transpose())
}

fn rooms_scaling() -> Check {
    let (a1, a2) = noone_pair();
    let base = RoomsPassages::dyadic(6, 0.5).map_err(|e| e.to_string())?;
    let j = 2;
    let ds: Vec<f64> = (0..16).map(|i| 1e-6 * 10f64.powf(3.0 * i as f64 / 15.0)).collect();
    let mut ratios = Vec::new();
    for &d in &ds {
        let g = base.with_corridor(j - 1, d).and_then(|g| g.with_corridor(j, d)).map_err(|e| e.to_string())?;
        let r = rooms_ratio(&g, &a1, &a2, 2.0, j).map_err(|e| e.to_string())?;
        ensure(r.nucleus_volume == 4.0 * 0.25 * 0.25, || format!("nucleus volume {}", r.nucleus_volume))?;
        ratios.push(r.ratio);
    }
    let defect = 1.0 - common::linear_r2(&ds, &ratios);
    ensure(defect <= 1e-12, || format!("1 − R² = {defect:.3e}"))?;
    for target in [0.04, 1e-3, 1e-5] {
        let d = corridor_for_ratio(&base, &a1, &a2, 2.0, j, target).map_err(|e| e.to_string())?;
        let g = base.with_corridor(j - 1, d).and_then(|g| g.with_corridor(j, d)).map_err(|e| e.to_string())?;
        let r = rooms_ratio(&g, &a1, &a2, 2.0, j).map_err(|e| e.to_string())?;
        ensure(r.ratio <= target * (1.0 + 1e-9), || format!("target {target}: ratio {}", r.ratio))?;
    }
    Ok(format!("d ∈ [1e-6, 1e-3]: 1 − R² = {defect:.1e}, nucleus volume 4h², targets 0.04, 1e-3, 1e-5 reached"))
}

fn zero_gradient() -> Check {
    for delta in [0.1, 0.01] {
        let z = zero_gradient_layer(delta).map_err(|e| e.to_string())?;
        ensure(z.min_phase_volume == delta * delta / 2.0, || format!("δ = {delta}: {}", z.min_phase_volume))?;
        ensure(z.layer_gradient_energy == 0.0, || format!("δ = {delta}: layer energy {}", z.layer_gradient_energy))?;
    }
    Ok("min phase volume δ²/2 and zero layer energy for δ = 0.1, 0.01".into())
}

fn gradient_error(w: &DoubleWell2D, m: &MeshDeformation, dofs: &[usize]) -> f64 {
    let (_, g) = w.energy_and_gradient(m, &m.values);
    let x = m.flat_values();
    let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut probe = m.clone();
    for &k in dofs {
        let mut xp = x.clone();
        xp[k] += h;
        probe.set_flat_values(&xp);
        let ep = w.total_energy(&probe);
        xp[k] -= 2.0 * h;
        probe.set_flat_values(&xp);
        let em = w.total_energy(&probe);
        worst = worst.max(((ep - em) / (2.0 * h) - g[k]).abs() / scale);
    }
    worst
}

fn metastability_probe() -> Check {
    let w = DoubleWell2D::incompatible(0.01).map_err(|e| e.to_string())?;
    let s = nucleation_trial(&w, &TrialConfig::default()).map_err(|e| e.to_string())?;
    ensure(s.aborted_count == 0, || format!("{} aborted trials", s.aborted_count))?;
    ensure(s.lowered_count == 0, || format!("lowered_count = {}", s.lowered_count))?;

    let r1 = DoubleWell2D::rank_one(0.01).map_err(|e| e.to_string())?;
    let strip = laminate_strip_trial(&r1, 64, 0.125, 60, StepRule::default()).map_err(|e| e.to_string())?;
    ensure(strip.final_energy < strip.threshold, || {
        format!("strip ends at {:.3e}, threshold {:.3e}", strip.final_energy, strip.threshold)
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut fd: f64 = 0.0;
    for (cells, count) in [(8, usize::MAX), (64, 400)] {
        let mut m = MeshDeformation::crossed(cells).map_err(|e| e.to_string())?;
        plant_nucleus(&mut m, &w, Vector2::new(0.5, 0.5), if cells == 8 { 0.25 } else { 1.0 / 16.0 });
        for v in m.values.iter_mut() {
            v[0] += rng.gen_range(-0.01..0.01);
            v[1] += rng.gen_range(-0.01..0.01);
        }
        let len = 2 * m.values.len();
        let dofs: Vec<usize> = if count >= len { (0..len).collect() } else { (0..count).map(|_| rng.gen_range(0..len)).collect() };
        fd = fd.max(gradient_error(&w, &m, &dofs));
    }
    ensure(fd < 1e-5, || format!("gradient relative error {fd:.3e}"))?;
    Ok(format!(
        "1000 trials, lowered 0, min gap {:.2e}; strip {:.3e} < {:.3e}; gradient error {fd:.1e}",
        s.min_energy_gap, strip.final_energy, strip.threshold
    ))
}

fn l1_sequence() -> Check {
    let (a, b) = noone_pair();
    let c2 = L1Sequence::<2>::new(a, b, 1).map_err(|e| e.to_string())?.report(1000, 0).bound;
    let (a3, b3): (Matrix3<f64>, Matrix3<f64>) = (*cualni_u1().matrix(), *cualni_u2().matrix());
    let c3 = L1Sequence::<3>::new(a3, b3, 1).map_err(|e| e.to_string())?.report(1000, 0).bound;
    let (mut top, mut residual): (f64, f64) = (0.0, 0.0);
    for j in [1, 10, 100, 1000] {
        let r2 = L1Sequence::<2>::new(a, b, j).map_err(|e| e.to_string())?.report(1000, j as u64);
        let r3 = L1Sequence::<3>::new(a3, b3, j).map_err(|e| e.to_string())?.report(1000, j as u64);
        ensure(r2.l1_norm <= 1.05 * c2, || format!("n = 2, j = {j}: {} > 1.05·{c2}", r2.l1_norm))?;
        ensure(r3.l1_norm <= 1.05 * c3, || format!("n = 3, j = {j}: {} > 1.05·{c3}", r3.l1_norm))?;
        top = top.max(r2.l1_norm / c2).max(r3.l1_norm / c3);
        residual = residual.max(r2.gradient_residual).max(r3.gradient_residual);
    }
    ensure(residual < 1e-12, || format!("gradient residual {residual:.3e}"))?;
    Ok(format!("max norm/bound {top:.3}, gradient residual {residual:.1e}"))
}

fn determinism() -> Check {
    let runs: &[&[&str]] = &[
        &["variants", "--preset", "cualni"],
        &["twin", "--preset", "cualni"],
        &["lambda2", "--preset", "terephthalic"],
        &["habit", "--preset", "cualni", "--pair", "1,3"],
        &["curve", "--preset", "cualni", "--axis", "0.3,0.5,1", "--angle", "0.7"],
        &["hysteresis", "--preset", "cualni", "--axis", "0.3,0.5,1", "--angle", "0.7"],
        &["radial", "--lambda", "1.1", "--mu", "1.5", "--n", "3"],
        &["gamma"],
        &["threshold", "--c0", "0.5", "--c1", "1", "--alpha", "2", "--gamma", "1", "--delta", "1"],
        &["rooms"],
        &["rooms", "--target", "0.04"],
        &["noone", "--delta", "0.01"],
        &["l1seq", "--n", "3"],
        &["relax", "--cells", "32", "--trials", "40", "--seed", "5"],
        &["relax", "--pair", "rank-one", "--cells", "32", "--trials", "8"],
        &["report", "--preset", "cualni", "--axis", "0.3,0.5,1", "--angle", "0.7"],
        &["report", "--preset", "terephthalic"],
    ];
    for args in runs {
        let (a, _) = cli(args)?;
        let (b, _) = cli(args)?;
        ensure(a == b, || format!("{args:?} differs between runs"))?;
    }
    Ok(format!("{} commands byte-identical across two runs", runs.len()))
}

fn timed_cli(limit: Duration, args: &[&str], check: fn() -> Check) -> Check {
    let (_, t) = cli(args)?;
    ensure(t < limit, || format!("CLI took {:.2} s", t.as_secs_f64()))?;
    check()
}

fn main() {
    let criteria: Vec<(&str, Option<Duration>, Box<dyn Fn() -> Check>)> = vec![
        ("terephthalic eigenvalues", Some(Duration::from_secs(1)), Box::new(|| {
            timed_cli(Duration::from_secs(1), &["lambda2", "--preset", "terephthalic"], terephthalic_eigenvalues)
        })),
        ("CuAlNi variants", Some(Duration::from_secs(1)), Box::new(|| {
            timed_cli(Duration::from_secs(1), &["variants", "--preset", "cualni"], cualni_variants)
        })),
        ("twin count", Some(Duration::from_secs(1)), Box::new(twin_count)),
        ("curve properties", Some(Duration::from_secs(30)), Box::new(curve_properties)),
        ("Schmid residual", Some(Duration::from_secs(30)), Box::new(schmid_residual)),
        ("radial layer agreement", Some(Duration::from_secs(60)), Box::new(radial_layers)),
        ("constant formulas", Some(Duration::from_secs(1)), Box::new(constant_formulas)),
        ("rooms-and-passages scaling", Some(Duration::from_secs(5)), Box::new(rooms_scaling)),
        ("zero-gradient layer", Some(Duration::from_secs(1)), Box::new(zero_gradient)),
        ("metastability probe", Some(Duration::from_secs(600)), Box::new(metastability_probe)),
        ("L1 sequence", Some(Duration::from_secs(5)), Box::new(l1_sequence)),
        ("determinism", None, Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let t = start.elapsed();
        let over = limit.is_some_and(|l| t > l);
        let budget = limit.map(|l| format!(" / {} s", l.as_secs())).unwrap_or_default();
        let (status, detail) = match (&result, over) {
            (Ok(s), false) => ("PASS", s.clone()),
            (Ok(s), true) => ("FAIL", format!("over time limit; {s}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} {:>2} {name} ({:.2} s{budget}): {detail}", i + 1, t.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
