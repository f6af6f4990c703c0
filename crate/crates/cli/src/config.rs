use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Command {
    /// Area and boundary data of a clipped vertical catenoid.
    Catenoid,
    /// The area-minimizing scale of centred catenoids in [-1, 1].
    Lambda0,
    /// Marginally stable pieces cut out by tangent cones.
    Ms,
    /// Sharp spanning thresholds F(L₋) and L_crit.
    Threshold,
    /// Minimal annulus from Weierstrass data.
    Annulus,
    /// Lowest eigenvalue of -d²/ds² + κ² on a closed curve.
    Oval,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Catenoid => "catenoid",
            Command::Lambda0 => "lambda0",
            Command::Ms => "ms",
            Command::Threshold => "threshold",
            Command::Annulus => "annulus",
            Command::Oval => "oval",
        }
    }

    /// Tolerance keys with their defaults.
    fn tolerances(self) -> &'static [(&'static str, f64)] {
        match self {
            Command::Annulus => &[("eps", 1e-6), ("residual", 1e-8)],
            Command::Oval => &[("tolerance", 1e-8)],
            _ => &[],
        }
    }

    /// Grid keys with their defaults and minimums.
    fn grid(self) -> &'static [(&'static str, usize, usize)] {
        match self {
            Command::Catenoid => &[("height_nodes", 256, 8), ("angle_nodes", 64, 8)],
            Command::Lambda0 => &[],
            Command::Ms => &[("mesh", 4096, 16)],
            Command::Threshold => &[("mesh", 1024, 16)],
            Command::Annulus => &[("levels", 64, 5), ("nodes", 256, 16), ("profile_levels", 21, 5)],
            Command::Oval => &[("start", 64, 32), ("max", 2048, 64)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "mincat", version, about = "Catenoid geometry, spanning thresholds, minimal annuli and the ovals functional")]
pub struct Args {
    pub command: Command,
    /// JSON input document.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file; defaults to $CATENOID_OUT_DIR/<command>.<ext>, else stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance override, KEY=VAL (repeatable).
    #[arg(long = "tol", value_name = "KEY=VAL")]
    pub tol: Vec<String>,
    /// Grid override, KEY=VAL (repeatable).
    #[arg(long = "grid", value_name = "KEY=VAL")]
    pub grid: Vec<String>,
    /// Linear sweep A:B:N (N points, endpoints included).
    #[arg(long, value_name = "A:B:N", allow_hyphen_values = true)]
    pub sweep: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

impl Sweep {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::Config(format!("sweep must be A:B:N, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let from: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let to: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if !(from.is_finite() && to.is_finite()) || count == 0 {
            return Err(bad());
        }
        Ok(Self { from, to, count })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.from];
        }
        let step = (self.to - self.from) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.to } else { self.from + step * i as f64 }).collect()
    }
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub grid: BTreeMap<String, usize>,
    pub sweep: Option<Sweep>,
}

fn split_pair(s: &str) -> Result<(&str, &str), CliError> {
    s.split_once('=').map(|(k, v)| (k.trim(), v.trim())).ok_or_else(|| CliError::Config(format!("expected KEY=VAL, got {s:?}")))
}

impl RunConfig {
    pub fn from_args(args: Args) -> Result<Self, CliError> {
        let command = args.command;
        let mut tolerances: BTreeMap<String, f64> = command.tolerances().iter().map(|&(k, v)| (k.to_string(), v)).collect();
        for t in &args.tol {
            let (k, v) = split_pair(t)?;
            if !tolerances.contains_key(k) {
                let known: Vec<&str> = command.tolerances().iter().map(|t| t.0).collect();
                return Err(CliError::Config(format!("unknown tolerance {k:?} for {} (known: {known:?})", command.name())));
            }
            let v: f64 = v.parse().map_err(|_| CliError::Config(format!("tolerance {k} is not a number: {v:?}")))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("tolerance {k} must be positive, got {v}")));
            }
            tolerances.insert(k.to_string(), v);
        }
        let mut grid: BTreeMap<String, usize> = command.grid().iter().map(|&(k, v, _)| (k.to_string(), v)).collect();
        for g in &args.grid {
            let (k, v) = split_pair(g)?;
            let Some(&(_, _, min)) = command.grid().iter().find(|e| e.0 == k) else {
                let known: Vec<&str> = command.grid().iter().map(|g| g.0).collect();
                return Err(CliError::Config(format!("unknown grid key {k:?} for {} (known: {known:?})", command.name())));
            };
            let v: usize = v.parse().map_err(|_| CliError::Config(format!("grid {k} is not a non-negative integer: {v:?}")))?;
            if v < min {
                return Err(CliError::Config(format!("grid {k} = {v} is below the minimum {min}")));
            }
            grid.insert(k.to_string(), v);
        }
        if command == Command::Oval && grid["max"] < 2 * grid["start"] {
            return Err(CliError::Config(format!("grid max = {} must be at least twice start = {}", grid["max"], grid["start"])));
        }
        let sweep = args.sweep.as_deref().map(Sweep::parse).transpose()?;
        if sweep.is_some() && !matches!(command, Command::Catenoid | Command::Ms | Command::Threshold) {
            return Err(CliError::Config(format!("{} does not take --sweep", command.name())));
        }
        // A sweep is a table, so it defaults to CSV.
        let format = args.format.unwrap_or(if sweep.is_some() { Format::Csv } else { Format::Json });
        Ok(Self {
            command,
            input_path: args.input,
            output_path: args.output,
            format,
            seed: args.seed,
            tolerances,
            grid,
            sweep,
        })
    }
}
