//! Command-line flags and the validated run configuration.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;
use weilrep_core::local_ring::is_odd_prime;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("p = {0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Subcommand)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Weil representation of Sp(2l', F_p): homomorphism, intertwining, parabolic and Gauss-sum checks.
    Field,
    /// Model of Sp(b_n) over Z/p^(n+1): orbit decomposition, characters, shell dimensions.
    Ring,
    /// Restriction to an elliptic torus: multiplicities, appearance criteria, weight vectors.
    Torus,
    /// Full battery at small default parameters.
    Selfcheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Unramified,
    Ramified,
}

#[derive(Debug, Parser)]
#[command(
    name = "weilrep",
    version,
    about = "Weil representations of finite symplectic groups over Z/p^(n+1)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Residue characteristic (odd prime).
    #[arg(long, global = true, default_value_t = 3)]
    pub p: u64,
    /// Rank r of the lattice (for `field`, the rank l' of Sp(2l', F_p)).
    #[arg(long = "r", visible_alias = "rank", global = true, default_value_t = 1)]
    pub r: usize,
    /// Number of twisted coordinate pairs, 0 <= l <= r.
    #[arg(long = "l", global = true, default_value_t = 0)]
    pub l: usize,
    /// Truncation: scalars live in Z/p^(n+1).
    #[arg(long = "n", global = true, default_value_t = 1)]
    pub n: u32,
    #[arg(long, value_enum, global = true, default_value_t = KindArg::Unramified)]
    pub kind: KindArg,
    /// Valuation of u for unramified tori (0 autodual, 1 non-autodual).
    #[arg(long, global = true, default_value_t = 0)]
    pub uval: u32,
    /// Largest group enumerated by closure; larger groups give skipped checks.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub cap_group: usize,
    /// Largest representation dimension built.
    #[arg(long, global = true, default_value_t = 2000)]
    pub cap_dim: usize,
    /// Tolerance for floating comparisons.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    /// Seed for sampled pairs.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "WEILREP_JOBS")]
    pub jobs: Option<usize>,
    /// Include wall-clock timings in the report (breaks byte-identical reruns).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub p: u64,
    pub r: usize,
    pub l: usize,
    pub n: u32,
    pub kind: KindArg,
    pub uval: u32,
    pub cap_group: usize,
    pub cap_dim: usize,
    pub tol: f64,
    pub seed: u64,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub jobs: Option<usize>,
    #[serde(skip)]
    pub timing: bool,
}

impl Cli {
    pub fn into_config(self) -> Result<RunConfig, ConfigError> {
        let cfg = RunConfig {
            command: self.command,
            p: self.p,
            r: self.r,
            l: self.l,
            n: self.n,
            kind: self.kind,
            uval: self.uval,
            cap_group: self.cap_group,
            cap_dim: self.cap_dim,
            tol: self.tol,
            seed: self.seed,
            out: self.out,
            jobs: self.jobs,
            timing: self.timing,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !is_odd_prime(self.p) {
            return Err(ConfigError::NotOddPrime(self.p));
        }
        if self.cap_group == 0 {
            return Err(ConfigError::NonPositive("--cap-group"));
        }
        if self.cap_dim == 0 {
            return Err(ConfigError::NonPositive("--cap-dim"));
        }
        if self.jobs == Some(0) {
            return Err(ConfigError::NonPositive("--jobs"));
        }
        if !(self.tol > 0.0) {
            return Err(ConfigError::NonPositive("--tol"));
        }
        match self.command {
            Command::Field if !(1..=2).contains(&self.r) => Err(ConfigError::Invalid(format!(
                "field needs rank 1 or 2, got {}",
                self.r
            ))),
            Command::Ring if self.r == 0 || self.l > self.r => Err(ConfigError::Invalid(format!(
                "need 0 <= l <= r and r >= 1, got r = {}, l = {}",
                self.r, self.l
            ))),
            Command::Ring | Command::Torus if self.n == 0 => Err(ConfigError::NonPositive("--n")),
            Command::Torus if matches!(self.kind, KindArg::Unramified) && self.uval > 1 => Err(
                ConfigError::Invalid(format!("uval must be 0 or 1, got {}", self.uval)),
            ),
            _ => Ok(()),
        }
    }

    /// Defaults used by `selfcheck` sub-runs and tests.
    pub fn with(command: Command) -> Self {
        RunConfig {
            command,
            p: 3,
            r: 1,
            l: 0,
            n: 1,
            kind: KindArg::Unramified,
            uval: 0,
            cap_group: 100_000,
            cap_dim: 2000,
            tol: 1e-8,
            seed: 1,
            out: None,
            jobs: None,
            timing: false,
        }
    }
}
