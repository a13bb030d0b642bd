//! Experiment configuration: a TOML file whose keys mirror the command-line
//! flags. Flags win over the file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use casse_briques::dynamics::Direction;
use casse_briques::num::{parse_q, Sign, Slope, Q};
use clap::{Args, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Rational,
    Float,
}

/// Deliberate faults for checking that the verification suites notice them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// Evaluates the hole-entry offset one column to the right.
    BetaOffByOne,
}

/// Every key is optional; each subcommand documents its defaults.
/// Rationals are written `"num/den"`.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Strip width.
    #[serde(rename = "K")]
    #[arg(long = "K", short = 'K')]
    pub k: Option<i64>,
    /// Base depth of the strip, or the frontier height.
    #[arg(long)]
    pub h: Option<String>,
    /// `p/q` (rise over run), `vertical`, or a decimal.
    #[arg(long)]
    pub slope: Option<String>,
    /// Direction angle in radians; overrides `slope`.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Abscissa on the strip base.
    #[arg(long)]
    pub x1: Option<String>,
    /// Plane start inside the origin cell.
    #[arg(long)]
    pub x0: Option<String>,
    #[arg(long)]
    pub y0: Option<String>,
    #[arg(long)]
    pub n_returns: Option<usize>,
    #[arg(long)]
    pub max_events: Option<u64>,
    #[arg(long)]
    pub burn: Option<usize>,
    #[arg(long)]
    pub keep: Option<usize>,
    /// Grid resolution: starts per axis, or initial abscissas per height.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub h_grid: Option<Vec<String>>,
    #[arg(long)]
    pub max_hits: Option<usize>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Corner guard of the float backend.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub link_radius: Option<i64>,
    #[arg(long)]
    pub transient_radius: Option<i64>,
    #[arg(long)]
    pub max_preperiod: Option<usize>,
    #[arg(long)]
    pub max_period: Option<usize>,
    /// Required branch count when searching for a periodic orbit.
    #[arg(long)]
    pub branches: Option<usize>,
    /// Lockstep length of the verification suites.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Random tuples drawn by the verification suites.
    #[arg(long)]
    pub tuples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mutate: Option<Mutation>,
    /// Longest side of PGM renders, in pixels.
    #[arg(long)]
    pub image_size: Option<usize>,
    /// Main output: CSV table or JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub pgm: Option<PathBuf>,
    /// Destruction log CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Destruction log CSV to render instead of simulating.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($base:expr, $over:expr, $($f:ident),* $(,)?) => {
        ExperimentConfig { $($f: $over.$f.or($base.$f)),* }
    };
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Keys set in `flags` replace those of `self`.
    pub fn merged(self, flags: ExperimentConfig) -> Self {
        merge_fields!(
            self,
            flags,
            k,
            h,
            slope,
            theta,
            x1,
            x0,
            y0,
            n_returns,
            max_events,
            burn,
            keep,
            grid,
            h_grid,
            max_hits,
            backend,
            epsilon,
            link_radius,
            transient_radius,
            max_preperiod,
            max_period,
            branches,
            steps,
            tuples,
            seed,
            mutate,
            image_size,
            out,
            svg,
            pgm,
            log,
            input,
        )
    }

    pub fn rational(field: &Option<String>, name: &str, default: &str) -> Result<Q> {
        let s = field.as_deref().unwrap_or(default);
        parse_q(s).with_context(|| format!("key {name}"))
    }

    pub fn h_or(&self, default: &str) -> Result<Q> {
        Self::rational(&self.h, "h", default)
    }

    pub fn k_or(&self, default: i64) -> Result<i64> {
        let k = self.k.unwrap_or(default);
        if k < 1 {
            bail!("K must be at least 1, got {k}");
        }
        Ok(k)
    }

    pub fn slope_or(&self, default: &str) -> Result<Slope> {
        if let Some(t) = self.theta {
            return Slope::real(t.tan().abs()).context("key theta");
        }
        let s = self.slope.as_deref().unwrap_or(default);
        s.parse::<Slope>()
            .with_context(|| format!("key slope = {s:?}"))
    }

    /// Direction from `theta` when given, else up and to the right.
    pub fn direction_or(&self, default_slope: &str) -> Result<Direction> {
        let slope = self.slope_or(default_slope)?;
        Ok(match self.theta {
            Some(t) => {
                let sign = |v: f64| if v < 0.0 { Sign::Neg } else { Sign::Pos };
                Direction::new(slope, sign(t.cos()), sign(t.sin()))
            }
            None => Direction::up_right(slope),
        })
    }

    /// Rational when the slope allows it, unless the float backend is asked for.
    pub fn backend_for(&self, slope: Slope) -> Result<BackendKind> {
        match (self.backend, slope.is_exact()) {
            (Some(BackendKind::Rational), false) => {
                bail!("the rational backend needs a rational slope, got {slope}")
            }
            (Some(b), _) => Ok(b),
            (None, true) => Ok(BackendKind::Rational),
            (None, false) => Ok(BackendKind::Float),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(casse_briques::num::FLOAT_EPS)
    }

    pub fn h_grid_or(&self, default: impl FnOnce() -> Vec<Q>) -> Result<Vec<Q>> {
        match &self.h_grid {
            Some(list) => list
                .iter()
                .map(|s| parse_q(s).with_context(|| format!("h_grid entry {s:?}")))
                .collect(),
            None => Ok(default()),
        }
    }
}
