//! Subcommand implementations.

use std::path::Path;

use metastab::compatibility::{habit_solutions, middle_eigenvalue_gap, twin_solutions, Classification, TwinSolution};
use metastab::counterexamples::{corridor_for_ratio, rooms_ratio, zero_gradient_layer, L1Sequence, RoomsPassages};
use metastab::deadload::{equal_energy_curve, BoxDomain, DeadLoadSetup, MachineBasis, Orientation};
use metastab::layers::{gamma_lower_bound, metastability_threshold, eccentricity, ConvexBody, LayerProfile, ThresholdBranch};
use metastab::relax::{laminate_strip_trial, nucleation_trial, DoubleWell2D, StepRule, TrialConfig};
use metastab::wells::WellFamily;
use metastab::{Mat3, Stretch, Vec3};
use nalgebra::{Matrix2, Matrix3};
use serde_json::{json, Value};

use crate::spec::{parse_alloy_spec, preset, AlloySpec, Source};
use crate::{CliError, Command, OrientationArgs, Output, SpecArgs};

type Res<T> = Result<T, CliError>;

pub fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|_| "expected three comma-separated numbers".to_string())
}

pub fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected i,j")?;
    Ok((a.trim().parse().map_err(|_| "bad index")?, b.trim().parse().map_err(|_| "bad index")?))
}

pub fn parse_pair_f64(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated numbers")?;
    Ok((a.trim().parse().map_err(|_| "bad number")?, b.trim().parse().map_err(|_| "bad number")?))
}

/// lo:hi:count with count ≥ 1.
pub fn parse_range(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected lo:hi:count".into());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| "bad lower bound")?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| "bad upper bound")?;
    let n: usize = parts[2].trim().parse().map_err(|_| "bad count")?;
    if n == 0 || !(lo <= hi) {
        return Err("need lo ≤ hi and count ≥ 1".into());
    }
    Ok((lo, hi, n))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn mat_json(m: &Mat3) -> Value {
    json!((0..3).map(|i| (0..3).map(|j| m[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn vec_json(v: &Vec3) -> Value {
    json!([v[0], v[1], v[2]])
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn load_spec(args: &SpecArgs) -> Res<AlloySpec> {
    match (&args.preset, &args.spec) {
        (Some(name), None) => preset(name),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
            parse_alloy_spec(&text)
        }
        _ => Err(CliError::parse("give exactly one of --preset or --spec")),
    }
}

fn orientation(spec: &AlloySpec, o: &OrientationArgs) -> Res<Orientation> {
    match (o.axis, o.angle) {
        (Some(axis), Some(angle)) => Ok(Orientation::axis_angle(&Vec3::from(axis), angle)?),
        _ => Ok(spec.orientation),
    }
}

fn family(spec: &AlloySpec) -> WellFamily {
    WellFamily::generate(&spec.u1, spec.symmetry)
}

fn variant_pair(spec: &AlloySpec, pair: (usize, usize)) -> Res<(WellFamily, Stretch, Stretch)> {
    let fam = family(spec);
    let (i, j) = pair;
    if i == 0 || j == 0 || i > fam.len() || j > fam.len() {
        return Err(CliError::parse(format!("pair: indices must lie in 1..={}", fam.len())));
    }
    let ui = fam.variants[i - 1].stretch;
    let uj = fam.variants[j - 1].stretch;
    Ok((fam, ui, uj))
}

fn spec_json(spec: &AlloySpec) -> Value {
    let source = match spec.source {
        Source::Explicit => json!({"kind": "explicit"}),
        Source::Lattice(l) => json!({"kind": "lattice", "parameters": l}),
    };
    json!({
        "name": spec.name,
        "u1": mat_json(spec.u1.matrix()),
        "symmetry": spec.symmetry.name(),
        "source": source,
    })
}

fn twin_json(t: &TwinSolution) -> Value {
    json!({
        "rotation": mat_json(t.rotation.matrix()),
        "a": vec_json(&t.a),
        "n": vec_json(&t.n),
        "residual": t.residual,
    })
}

fn setup_for(spec: &AlloySpec, orient: &Orientation) -> Res<DeadLoadSetup> {
    let fam = family(spec);
    if fam.len() < 2 {
        return Err(CliError::parse("the dead-load analysis needs at least two variants"));
    }
    Ok(DeadLoadSetup::new(&fam.variants[0].stretch, &fam.variants[1].stretch, orient, MachineBasis::standard())?)
}

pub fn dispatch(cmd: &Command) -> Res<Output> {
    match cmd {
        Command::Variants(args) => variants(&load_spec(args)?),
        Command::Twin { spec, pair } => twin(&load_spec(spec)?, *pair),
        Command::Lambda2(args) => lambda2(&load_spec(args)?),
        Command::Habit { spec, pair } => habit(&load_spec(spec)?, *pair),
        Command::Curve { spec, orientation: o, sigma1 } => {
            let s = load_spec(spec)?;
            curve(&s, &orientation(&s, o)?, *sigma1)
        }
        Command::Hysteresis { spec, orientation: o, sigma1, c2, direction, xi, factors } => {
            let s = load_spec(spec)?;
            let orient = orientation(&s, o)?;
            hysteresis(&s, &orient, *sigma1, *c2, *direction, *xi, factors)
        }
        Command::Radial { lambda, mu, n, k } => radial(*lambda, *mu, *n, *k),
        Command::Gamma { gamma0, body, n, vol_omega } => gamma(*gamma0, body, *n, *vol_omega),
        Command::Threshold { c0, c1, alpha, p, gamma, delta } => threshold(*c0, *c1, *alpha, *p, *gamma, *delta),
        Command::Rooms { rooms, room, d, p, target } => rooms_cmd(*rooms, *room, *d, *p, *target),
        Command::Noone { delta } => noone(*delta),
        Command::L1seq { j, n, samples, seed } => l1seq(j, *n, *samples, *seed),
        Command::Relax { pair, delta, cells, trials, seed, radius, budget, trace } => {
            relax(pair, *delta, *cells, *trials, *seed, *radius, *budget, trace.as_deref())
        }
        Command::Report { spec, orientation: o } => {
            let s = load_spec(spec)?;
            let orient = orientation(&s, o)?;
            report(&s, &orient, o.axis.is_some() || s.orientation_given)
        }
    }
}

fn variants(spec: &AlloySpec) -> Res<Output> {
    let fam = family(spec);
    Ok(Output::Json(json!({
        "schema": "metastab/variants/v1",
        "alloy": spec_json(spec),
        "group": spec.symmetry.name(),
        "count": fam.len(),
        "variants": fam.variants.iter().map(|w| mat_json(w.u())).collect::<Vec<_>>(),
    })))
}

fn twin(spec: &AlloySpec, pair: (usize, usize)) -> Res<Output> {
    let (_, ui, uj) = variant_pair(spec, pair)?;
    let sols = twin_solutions(ui.matrix(), &uj)?;
    Ok(Output::Json(json!({
        "schema": "metastab/twin/v1",
        "alloy": spec.name,
        "pair": [pair.0, pair.1],
        "count": sols.len(),
        "solutions": sols.iter().map(twin_json).collect::<Vec<_>>(),
    })))
}

fn lambda2(spec: &AlloySpec) -> Res<Output> {
    let r = middle_eigenvalue_gap(&spec.u1);
    Ok(Output::Json(json!({
        "schema": "metastab/lambda2/v1",
        "alloy": spec.name,
        "eigenvalues": r.eigenvalues,
        "lambda2": r.lambda2,
        "gap": r.gap,
        "compatible": r.classification == Classification::Compatible,
        "classification": r.classification.label(),
    })))
}

fn habit(spec: &AlloySpec, pair: (usize, usize)) -> Res<Output> {
    let (_, ui, uj) = variant_pair(spec, pair)?;
    let twins = twin_solutions(ui.matrix(), &uj)?;
    let mut entries = Vec::new();
    for (k, t) in twins.iter().enumerate() {
        for h in habit_solutions(&ui, t)? {
            entries.push(json!({
                "twin": k + 1,
                "lambda": h.lambda,
                "rotation": mat_json(h.rotation.matrix()),
                "b": vec_json(&h.b),
                "m": vec_json(&h.m),
                "residual": h.residual,
            }));
        }
    }
    Ok(Output::Json(json!({
        "schema": "metastab/habit/v1",
        "alloy": spec.name,
        "pair": [pair.0, pair.1],
        "twins": twins.iter().map(twin_json).collect::<Vec<_>>(),
        "count": entries.len(),
        "solutions": entries,
    })))
}

fn csv_text(header: &[&str], rows: &[Vec<f64>]) -> Res<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::parse(e.to_string()))?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string())).map_err(|e| CliError::parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of numbers is UTF-8"))
}

fn curve(spec: &AlloySpec, orient: &Orientation, grid: (f64, f64, usize)) -> Res<Output> {
    let setup = setup_for(spec, orient)?;
    let table = equal_energy_curve(&setup, &linspace(grid.0, grid.1, grid.2))?;
    let rows: Vec<Vec<f64>> = table.points.iter().map(|p| vec![p.sigma1, p.sigma2, p.rank_gap]).collect();
    Ok(Output::Csv(csv_text(&["sigma1", "sigma2", "rank_gap"], &rows)?))
}

fn hysteresis_json(
    spec: &AlloySpec,
    orient: &Orientation,
    sigma1: Option<f64>,
    c2: Option<f64>,
    direction: Option<(f64, f64)>,
    xi: f64,
    factors: &[f64],
) -> Res<Value> {
    let setup = setup_for(spec, orient)?;
    let load = spec.load;
    let sigma1 = sigma1.or(load.and_then(|l| l.sigma1)).unwrap_or(1.0);
    let c2 = c2.or(load.and_then(|l| l.c2));
    let direction = direction.or(load.and_then(|l| l.direction.map(|d| (d[0], d[1])))).unwrap_or((0.0, 1.0));
    let hb = setup.hysteresis_bound(sigma1, c2, direction)?;
    let domain = BoxDomain::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 0.1))?;
    let x0 = domain.center();
    let mut laminates = Vec::new();
    for &f in factors {
        let lc = setup.laminate_counterexample(&hb.path, f * hb.tau_plus, xi, &x0, &domain)?;
        laminates.push(json!({
            "factor": f,
            "tau1": lc.tau1,
            "xi": lc.xi,
            "energy_gap": lc.energy_gap,
            "l1_distance": lc.l1_distance,
            "l1_constant": lc.l1_constant,
            "slab_volume": lc.slab_volume,
        }));
    }
    Ok(json!({
        "tau_plus": hb.tau_plus,
        "sigma1": hb.path.sigma1,
        "sigma2": hb.path.sigma2,
        "c2": hb.path.c2,
        "direction": [hb.path.direction.0, hb.path.direction.1],
        "eps": hb.eps,
        "partner": mat_json(&hb.partner),
        "a": vec_json(&hb.a),
        "n": vec_json(&hb.n),
        "schmid_residual": hb.schmid_residual,
        "rank_one_residual": hb.rank_one_residual,
        "partner_gap": hb.partner_gap,
        "swapped": hb.swapped,
        "stress_scale": load.and_then(|l| l.stress_scale).unwrap_or(1.0),
        "laminates": laminates,
    }))
}

fn hysteresis(
    spec: &AlloySpec,
    orient: &Orientation,
    sigma1: Option<f64>,
    c2: Option<f64>,
    direction: Option<(f64, f64)>,
    xi: f64,
    factors: &[f64],
) -> Res<Output> {
    let mut v = hysteresis_json(spec, orient, sigma1, c2, direction, xi, factors)?;
    v["schema"] = json!("metastab/hysteresis/v1");
    v["alloy"] = json!(spec.name);
    Ok(Output::Json(v))
}

fn radial(lambda: f64, mu: f64, n: usize, k: Option<f64>) -> Res<Output> {
    let p = LayerProfile::new(lambda, mu, n, 1.0)?;
    let r = p.radial_layer()?;
    let rho_k = match k {
        Some(k) => json!({"k": k, "rho": p.rho(k)?}),
        None => Value::Null,
    };
    Ok(Output::Json(json!({
        "schema": "metastab/radial/v1",
        "lambda": lambda,
        "mu": mu,
        "n": n,
        "k_star": r.k_star,
        "rho_min": r.rho_min,
        "gamma_upper": r.gamma_upper,
        "degenerate": r.degenerate,
        "at_k": rho_k,
    })))
}

fn gamma(gamma0: f64, body: &str, n: usize, vol_omega: Option<f64>) -> Res<Output> {
    let c = match body {
        "ball" => ConvexBody::ball(n, 1.0)?,
        "cube" => ConvexBody::cube(n, 1.0)?,
        other => return Err(CliError::parse(format!("body: unknown body '{other}'"))),
    };
    let vol = vol_omega.unwrap_or(c.volume);
    let g = gamma_lower_bound(gamma0, &c, vol)?;
    Ok(Output::Json(json!({
        "schema": "metastab/gamma/v1",
        "gamma0": gamma0,
        "body": body,
        "n": n,
        "vol_omega": vol,
        "eccentricity": eccentricity(&c),
        "gamma": g,
    })))
}

fn threshold(c0: f64, c1: f64, alpha: f64, p: f64, gamma: f64, delta: f64) -> Res<Output> {
    let t = metastability_threshold(c0, c1, alpha, p, gamma, delta)?;
    let branch = match t.branch {
        ThresholdBranch::GrowthDominated => "growth_dominated",
        ThresholdBranch::OffsetDominated => "offset_dominated",
        ThresholdBranch::Interpolated => "interpolated",
    };
    Ok(Output::Json(json!({
        "schema": "metastab/threshold/v1",
        "inputs": {"c0": c0, "c1": c1, "alpha": alpha, "p": p, "gamma": gamma, "delta": delta},
        "k": t.k,
        "delta0": t.delta0,
        "branch": branch,
    })))
}

fn noone_pair() -> (Matrix2<f64>, Matrix2<f64>) {
    (Matrix2::new(0.0, 0.0, 0.0, 1.0), Matrix2::new(1.0, 1.0, 1.0, 1.0))
}

fn rooms_cmd(rooms: usize, room: usize, d: (f64, f64, usize), p: f64, target: Option<f64>) -> Res<Output> {
    let (a1, a2) = noone_pair();
    let base = RoomsPassages::dyadic(rooms, 0.5)?;
    if room < 2 || room + 1 > rooms {
        return Err(CliError::parse(format!("room: index must satisfy 2 ≤ j ≤ {}", rooms - 1)));
    }
    if let Some(t) = target {
        let dt = corridor_for_ratio(&base, &a1, &a2, p, room, t)?;
        let g = base.with_corridor(room - 1, dt)?.with_corridor(room, dt)?;
        let r = rooms_ratio(&g, &a1, &a2, p, room)?;
        return Ok(Output::Json(json!({
            "schema": "metastab/rooms/v1",
            "room": room,
            "p": p,
            "target": t,
            "d": dt,
            "layer_energy": r.layer_energy,
            "nucleus_volume": r.nucleus_volume,
            "ratio": r.ratio,
        })));
    }
    if !(d.0 > 0.0) {
        return Err(CliError::parse("d: thicknesses must be positive"));
    }
    let mut rows = Vec::new();
    for dj in logspace(d.0, d.1, d.2) {
        let g = base.with_corridor(room - 1, dj)?.with_corridor(room, dj)?;
        let r = rooms_ratio(&g, &a1, &a2, p, room)?;
        rows.push(vec![dj, r.layer_energy, r.nucleus_volume, r.ratio]);
    }
    Ok(Output::Csv(csv_text(&["d", "layer_energy", "nucleus_volume", "ratio"], &rows)?))
}

fn noone(delta: f64) -> Res<Output> {
    let z = zero_gradient_layer(delta)?;
    Ok(Output::Json(json!({
        "schema": "metastab/noone/v1",
        "delta": delta,
        "layer_gradient_energy": z.layer_gradient_energy,
        "layer_measure": z.layer_measure,
        "min_phase_volume": z.min_phase_volume,
    })))
}

fn l1seq(js: &[u32], n: usize, samples: usize, seed: u64) -> Res<Output> {
    if js.is_empty() {
        return Err(CliError::parse("j: at least one index required"));
    }
    let mut entries = Vec::new();
    let mut bound = 0.0;
    for &j in js {
        let rep = match n {
            2 => {
                let (a, b) = noone_pair();
                L1Sequence::<2>::new(a, b, j)?.report(samples, seed)
            }
            3 => {
                let a: Matrix3<f64> = *metastab::presets::cualni_u1().matrix();
                let b: Matrix3<f64> = *metastab::presets::cualni_u2().matrix();
                L1Sequence::<3>::new(a, b, j)?.report(samples, seed)
            }
            _ => return Err(CliError::parse("n: dimension must be 2 or 3")),
        };
        bound = rep.bound;
        entries.push(json!({
            "j": j,
            "l1_norm": rep.l1_norm,
            "strip_measure": rep.strip_measure,
            "gradient_residual": rep.gradient_residual,
        }));
    }
    Ok(Output::Json(json!({
        "schema": "metastab/l1seq/v1",
        "n": n,
        "bound": bound,
        "entries": entries,
    })))
}

#[allow(clippy::too_many_arguments)]
fn relax(
    pair: &str,
    delta: f64,
    cells: usize,
    trials: usize,
    seed: u64,
    radius: f64,
    budget: usize,
    trace: Option<&Path>,
) -> Res<Output> {
    let w = match pair {
        "incompatible" => DoubleWell2D::incompatible(delta)?,
        "rank-one" => DoubleWell2D::rank_one(delta)?,
        other => return Err(CliError::parse(format!("pair: unknown well pair '{other}'"))),
    };
    let cfg = TrialConfig { nucleus_radius: radius, cells, trials, seed, descent_budget: budget, ..Default::default() };
    let s = nucleation_trial(&w, &cfg)?;
    if let Some(path) = trace {
        let rows: Vec<Vec<f64>> = s.final_energies.iter().enumerate().map(|(k, e)| vec![k as f64, *e]).collect();
        std::fs::write(path, csv_text(&["trial", "final_energy"], &rows)?)
            .map_err(|e| CliError::parse(format!("cannot write {}: {e}", path.display())))?;
    }
    let strip = if pair == "rank-one" {
        let o = laminate_strip_trial(&w, cells, 2.0 * radius, budget, StepRule::default())?;
        json!({
            "strip_volume": o.strip_volume,
            "initial_energy": o.initial_energy,
            "final_energy": o.final_energy,
            "threshold": o.threshold,
        })
    } else {
        Value::Null
    };
    let m2 = |m: &Matrix2<f64>| json!([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]);
    Ok(Output::Json(json!({
        "schema": "metastab/relax/v1",
        "wells": {"pair": pair, "a1": m2(&w.a1), "a2": m2(&w.a2)},
        "delta": delta,
        "smoothing": w.smoothing,
        "cells": cells,
        "nucleus_radius": radius,
        "descent_budget": budget,
        "trials": s.trials,
        "lowered_count": s.lowered_count,
        "aborted_count": s.aborted_count,
        "min_energy_gap": finite_or_null(s.min_energy_gap),
        "tol": s.tol,
        "strip": strip,
    })))
}

fn error_json(e: &CliError) -> Value {
    json!({"code": e.code, "message": e.message})
}

fn report(spec: &AlloySpec, orient: &Orientation, orientation_given: bool) -> Res<Output> {
    let fam = family(spec);
    let l2 = middle_eigenvalue_gap(&spec.u1);
    let mut doc = json!({
        "schema": "metastab/report/v1",
        "alloy": spec_json(spec),
        "orientation": {"matrix": mat_json(orient.0.matrix()), "given": orientation_given},
        "variants": {"count": fam.len()},
        "lambda2": {
            "eigenvalues": l2.eigenvalues,
            "lambda2": l2.lambda2,
            "compatible": l2.classification == Classification::Compatible,
            "classification": l2.classification.label(),
        },
    });
    if fam.len() >= 2 {
        let (u1, u2) = (fam.variants[0].stretch, fam.variants[1].stretch);
        let twins = twin_solutions(u1.matrix(), &u2).map_err(CliError::from)?;
        let mut habits = 0;
        for t in &twins {
            habits += habit_solutions(&u1, t)?.len();
        }
        doc["twins"] = json!({"count": twins.len(), "solutions": twins.iter().map(twin_json).collect::<Vec<_>>()});
        doc["habit"] = json!({"count": habits});
        let curve = setup_for(spec, orient).and_then(|setup| {
            Ok(equal_energy_curve(&setup, &linspace(0.5, 2.0, 16)).map_err(CliError::from)?)
        });
        doc["curve"] = match curve {
            Ok(t) => json!({
                "ok": true,
                "swapped": t.swapped,
                "points": t.points.iter().map(|p| json!([p.sigma1, p.sigma2, p.rank_gap])).collect::<Vec<_>>(),
            }),
            Err(e) => json!({"ok": false, "error": error_json(&e)}),
        };
        doc["hysteresis"] = match hysteresis_json(spec, orient, None, None, None, 0.01, &[0.99, 1.01]) {
            Ok(v) => json!({"ok": true, "result": v}),
            Err(e) => json!({"ok": false, "error": error_json(&e)}),
        };
    }
    Ok(Output::Json(doc))
}
