use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "mocapvar", version, about = "Closed-form 3D reconstruction uncertainty for multi-camera rigs")]
pub struct Cli {
    /// Random seed; overrides the scenario file seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Fused closed-form covariance at a point.
    Eval(EvalArgs),
    /// Monte Carlo covariance next to the closed form.
    McCompare(McCompareArgs),
    /// Percent std difference versus camera count on a 256-camera ring.
    Fig4(Fig4Args),
    /// 1σ ellipses for camera pairs at several angles on a 16-camera ring.
    Fig5(Fig5Args),
    /// Overall std on a voxel grid spanning the room.
    ErrorMap(ErrorMapArgs),
    /// Pair ranking and greedy camera subset at a point.
    Select(SelectArgs),
    /// Emit a ring scenario file.
    RingGen(RingGenArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval(_) => "eval",
            Command::McCompare(_) => "mc-compare",
            Command::Fig4(_) => "fig4",
            Command::Fig5(_) => "fig5",
            Command::ErrorMap(_) => "error-map",
            Command::Select(_) => "select",
            Command::RingGen(_) => "ring-gen",
        }
    }

    pub fn default_format(&self) -> Format {
        match self {
            Command::Fig4(_) | Command::Fig5(_) => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Target as x,y,z in meters.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub point: [f64; 3],
    /// Camera ids to fuse (default: all).
    #[arg(long, value_delimiter = ',')]
    pub subset: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorArg {
    Gls,
    Midpoint,
}

#[derive(Debug, Args, Serialize)]
pub struct McCompareArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub point: [f64; 3],
    #[arg(long, value_delimiter = ',')]
    pub subset: Option<Vec<u32>>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Gls)]
    pub estimator: EstimatorArg,
}

#[derive(Debug, Args, Serialize)]
pub struct Fig4Args {
    /// Camera counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2,4,16,64", num_args = 0..)]
    pub m_list: Vec<usize>,
    /// Random points per camera count.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 256)]
    pub ring_size: usize,
    #[arg(long, default_value_t = 10.0)]
    pub radius: f64,
    #[arg(long, default_value_t = mocapvar::scenario::DEFAULT_FOCAL)]
    pub focal: f64,
    #[arg(long, default_value_t = mocapvar::scenario::DEFAULT_PIXEL_SIGMA)]
    pub sigma: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct Fig5Args {
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    /// Also write 64-point polylines of both 1σ curves to this CSV.
    #[arg(long)]
    pub curves: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ErrorMapArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Voxel counts as nx,ny,nz.
    #[arg(long, value_parser = parse_dims)]
    pub dims: [usize; 3],
    /// Grid CSV destination.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub subset: Option<Vec<u32>>,
    /// Also run Monte Carlo per voxel and report the speed ratio.
    #[arg(long)]
    pub with_mc: bool,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SelectArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub point: [f64; 3],
    /// Size of the greedy subset.
    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct RingGenArgs {
    #[arg(long)]
    pub cameras: usize,
    #[arg(long, default_value_t = 10.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub height: f64,
    #[arg(long, default_value_t = mocapvar::scenario::DEFAULT_FOCAL)]
    pub focal: f64,
    #[arg(long, default_value_t = mocapvar::scenario::DEFAULT_PIXEL_SIGMA)]
    pub sigma: f64,
    /// `limit`, `finite-default`, or a finite M in m².
    #[arg(long, default_value = "limit")]
    pub m_policy: String,
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

pub fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let v = parse_floats(s)?;
    match v.as_slice() {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok([*x, *y, *z]),
        _ => Err(format!("expected three finite numbers x,y,z, got {s:?}")),
    }
}

pub fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [a, b, c] if v.iter().all(|&d| d > 0) => Ok([*a, *b, *c]),
        _ => Err(format!("expected three positive integers nx,ny,nz, got {s:?}")),
    }
}
