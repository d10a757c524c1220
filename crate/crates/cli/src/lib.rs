//! Command-line front end: alloy specs, subcommand dispatch and
//! deterministic CSV/JSON reports.

pub mod commands;
pub mod spec;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use spec::{parse_alloy_spec, preset, AlloySpec};

/// Exit status for malformed input or violated preconditions.
pub const EXIT_PARSE: i32 = 2;
/// Exit status for numerical failures.
pub const EXIT_NUMERIC: i32 = 3;
/// Exit status when the requested regime does not exist.
pub const EXIT_REGIME: i32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn parse(msg: impl Into<String>) -> Self {
        Self { code: EXIT_PARSE, message: msg.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<metastab::Error> for CliError {
    fn from(e: metastab::Error) -> Self {
        use metastab::Error::*;
        let code = match e {
            InvalidInput(_) | Precondition(_) => EXIT_PARSE,
            Numeric(_) => EXIT_NUMERIC,
            Regime(_) => EXIT_REGIME,
        };
        Self { code, message: e.to_string() }
    }
}

/// Rendered artifact of a subcommand.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Json(serde_json::Value),
    Csv(String),
}

impl Output {
    pub fn render(&self) -> String {
        match self {
            Output::Json(v) => {
                let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialise");
                s.push('\n');
                s
            }
            Output::Csv(s) => s.clone(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "metastab", version, about = "Energy-well, compatibility and metastability analyses")]
pub struct Cli {
    /// Write the artifact to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct SpecArgs {
    /// Built-in alloy: cualni or terephthalic.
    #[arg(long, conflicts_with = "spec")]
    pub preset: Option<String>,
    /// Alloy specification document (TOML).
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct OrientationArgs {
    /// Rotation axis of the material basis relative to the machine basis.
    #[arg(long, value_parser = commands::parse_vec3, requires = "angle")]
    pub axis: Option<[f64; 3]>,
    /// Rotation angle in radians.
    #[arg(long, requires = "axis", allow_hyphen_values = true)]
    pub angle: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Symmetry-related variants of U₁.
    Variants(SpecArgs),
    /// Twin solutions between two variants.
    Twin {
        #[command(flatten)]
        spec: SpecArgs,
        /// 1-based variant indices i,j.
        #[arg(long, default_value = "1,2", value_parser = commands::parse_pair)]
        pair: (usize, usize),
    },
    /// Middle-eigenvalue test of U₁ against the identity well.
    Lambda2(SpecArgs),
    /// Austenite/twinned-martensite habit planes.
    Habit {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value = "1,2", value_parser = commands::parse_pair)]
        pair: (usize, usize),
    },
    /// Equal-energy curve σ₂ = f(σ₁) of the first two variants (CSV).
    Curve {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        orientation: OrientationArgs,
        /// σ₁ grid as lo:hi:count.
        #[arg(long, default_value = "0.5:2.0:16", value_parser = commands::parse_range)]
        sigma1: (f64, f64, usize),
    },
    /// Loss-of-metastability parameter and laminate competitors.
    Hysteresis {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        orientation: OrientationArgs,
        #[arg(long)]
        sigma1: Option<f64>,
        #[arg(long)]
        c2: Option<f64>,
        /// Load-path direction d1,d2.
        #[arg(long, value_parser = commands::parse_pair_f64, allow_hyphen_values = true)]
        direction: Option<(f64, f64)>,
        /// Slab width of the laminate competitor.
        #[arg(long, default_value_t = 0.01)]
        xi: f64,
        /// Multiples of τ⁺ at which competitors are evaluated.
        #[arg(long, default_value = "0.99,1.01", value_delimiter = ',')]
        factors: Vec<f64>,
    },
    /// Optimal radial transition layer.
    Radial {
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
        #[arg(long)]
        n: usize,
        /// Also report ρ at this layer width ratio.
        #[arg(long)]
        k: Option<f64>,
    },
    /// Transition-layer constant γ for a convex body.
    Gamma {
        #[arg(long, default_value_t = 1.0)]
        gamma0: f64,
        /// ball or cube.
        #[arg(long, default_value = "ball")]
        body: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Volume of Ω; defaults to the body volume.
        #[arg(long)]
        vol_omega: Option<f64>,
    },
    /// Metastability threshold constants K and δ₀.
    Threshold {
        #[arg(long, allow_hyphen_values = true)]
        c0: f64,
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Rooms-and-passages ratio sweep over the corridor thickness (CSV).
    Rooms {
        #[arg(long, default_value_t = 6)]
        rooms: usize,
        /// Room index j with 2 ≤ j ≤ rooms − 1.
        #[arg(long, default_value_t = 2)]
        room: usize,
        /// Corridor half-thickness grid lo:hi:count (logarithmic).
        #[arg(long, default_value = "1e-6:1e-3:16", value_parser = commands::parse_range)]
        d: (f64, f64, usize),
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Report the thickness reaching this ratio instead of a sweep (JSON).
        #[arg(long)]
        target: Option<f64>,
    },
    /// Zero-gradient transition layer.
    Noone {
        #[arg(long)]
        delta: f64,
    },
    /// L¹-bounded splitting sequence.
    L1seq {
        #[arg(long, default_value = "1,10,100,1000", value_delimiter = ',')]
        j: Vec<u32>,
        /// Dimension, 2 or 3.
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Nucleation relaxation trials on a two-well energy.
    Relax {
        /// incompatible or rank-one.
        #[arg(long, default_value = "incompatible")]
        pair: String,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 64)]
        cells: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0625)]
        radius: f64,
        #[arg(long, default_value_t = 60)]
        budget: usize,
        /// Write the per-trial final energies to this CSV file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Full pipeline for one alloy as a single JSON document.
    Report {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        orientation: OrientationArgs,
    },
}

/// Parses `args`, runs the subcommand and writes its artifact; returns the
/// process exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { 0 };
        }
    };
    match commands::dispatch(&cli.command) {
        Ok(out) => {
            let text = out.render();
            let written = match &cli.out {
                Some(path) => std::fs::write(path, text.as_bytes()).map_err(|e| e.to_string()),
                None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("error: cannot write output: {e}");
                    EXIT_PARSE
                }
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
