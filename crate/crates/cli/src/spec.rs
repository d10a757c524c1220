//! Alloy specification documents (TOML) and built-in presets.

use std::str::FromStr;

use metastab::deadload::Orientation;
use metastab::presets;
use metastab::wells::SymmetryGroup;
use metastab::{Mat3, Rotation, Stretch, Vec3};
use serde::Deserialize;

use crate::CliError;

/// Current document version.
pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    version: Option<u32>,
    name: Option<String>,
    u1: Option<[[f64; 3]; 3]>,
    lattice: Option<[f64; 3]>,
    symmetry: Option<String>,
    orientation: Option<RawOrientation>,
    load: Option<LoadSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOrientation {
    axis: Option<[f64; 3]>,
    angle: Option<f64>,
    matrix: Option<[[f64; 3]; 3]>,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LoadSpec {
    /// Multiple of the stress scale at which the hysteresis path starts.
    pub sigma1: Option<f64>,
    pub c2: Option<f64>,
    pub direction: Option<[f64; 2]>,
    /// Declared stress scale; loads are dimensionless multiples of it.
    pub stress_scale: Option<f64>,
}

/// How U₁ was specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    Explicit,
    Lattice([f64; 3]),
}

#[derive(Debug, Clone)]
pub struct AlloySpec {
    pub name: String,
    pub u1: Stretch,
    pub source: Source,
    pub symmetry: SymmetryGroup,
    pub orientation: Orientation,
    pub orientation_given: bool,
    pub load: Option<LoadSpec>,
}

fn mat(rows: &[[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| rows[i][j])
}

/// Parses and validates a TOML alloy document.
pub fn parse_alloy_spec(text: &str) -> Result<AlloySpec, CliError> {
    let raw: RawSpec = toml::from_str(text).map_err(|e| CliError::parse(format!("spec: {}", e.message())))?;
    match raw.version {
        Some(SPEC_VERSION) => {}
        Some(v) => return Err(CliError::parse(format!("version: unsupported spec version {v}"))),
        None => return Err(CliError::parse("version: missing required field")),
    }
    let (u1m, source) = match (raw.u1, raw.lattice) {
        (Some(_), Some(_)) => {
            return Err(CliError::parse("u1, lattice: conflicting fields, give exactly one"));
        }
        (None, None) => return Err(CliError::parse("u1, lattice: one of the two is required")),
        (Some(rows), None) => (mat(&rows), Source::Explicit),
        (None, Some(l)) => {
            if l.iter().any(|v| !(*v > 0.0)) {
                return Err(CliError::parse("lattice: parameters must be positive"));
            }
            (presets::orthorhombic_variants(l[0], l[1], l[2])[0], Source::Lattice(l))
        }
    };
    let u1 = Stretch::new(u1m).map_err(|e| CliError::parse(format!("u1: {e}")))?;
    let symmetry = match raw.symmetry.as_deref() {
        Some(s) => SymmetryGroup::from_str(s).map_err(|e| CliError::parse(format!("symmetry: {e}")))?,
        None => match source {
            Source::Lattice(_) => SymmetryGroup::Cubic,
            Source::Explicit => SymmetryGroup::Identity,
        },
    };
    let (orientation, orientation_given) = match raw.orientation {
        None => (Orientation::aligned(), false),
        Some(o) => (parse_orientation(&o)?, true),
    };
    if let Some(load) = &raw.load {
        if let Some(s) = load.sigma1 {
            if !(s > 0.0) {
                return Err(CliError::parse("load.sigma1: must be positive"));
            }
        }
        if let Some(s) = load.stress_scale {
            if !(s > 0.0) {
                return Err(CliError::parse("load.stress_scale: must be positive"));
            }
        }
    }
    Ok(AlloySpec {
        name: raw.name.unwrap_or_else(|| "unnamed".into()),
        u1,
        source,
        symmetry,
        orientation,
        orientation_given,
        load: raw.load,
    })
}

fn parse_orientation(o: &RawOrientation) -> Result<Orientation, CliError> {
    match (o.matrix, o.axis, o.angle) {
        (Some(m), None, None) => Rotation::new(mat(&m))
            .map(Orientation)
            .map_err(|e| CliError::parse(format!("orientation.matrix: {e}"))),
        (None, Some(axis), Some(angle)) => Orientation::axis_angle(&Vec3::from(axis), angle)
            .map_err(|e| CliError::parse(format!("orientation.axis: {e}"))),
        (None, None, None) => Ok(Orientation::aligned()),
        _ => Err(CliError::parse("orientation: give either matrix or both axis and angle")),
    }
}

/// Built-in documents.
pub fn preset(name: &str) -> Result<AlloySpec, CliError> {
    let (a, b, g) = presets::CUALNI_LATTICE;
    let text = match name.to_ascii_lowercase().as_str() {
        "cualni" => format!("version = 1\nname = \"cualni\"\nlattice = [{a}, {b}, {g}]\nsymmetry = \"cubic\"\n"),
        "terephthalic" => {
            let u = presets::terephthalic();
            let m = u.matrix();
            format!(
                "version = 1\nname = \"terephthalic\"\nsymmetry = \"identity\"\nu1 = [[{}, {}, {}], [{}, {}, {}], [{}, {}, {}]]\n",
                m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 0)], m[(1, 1)], m[(1, 2)], m[(2, 0)], m[(2, 1)], m[(2, 2)]
            )
        }
        other => return Err(CliError::parse(format!("preset: unknown preset '{other}'"))),
    };
    parse_alloy_spec(&text)
}
