//! Strict JSON run configuration.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use gkdv_core::evolution::{EvolveOptions, Scheme};
use gkdv_core::{Grid, ModelParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    GroundState,
    Direction,
    Pohozaev,
    SharpConstant,
    Petviashvili,
    Evolve,
    GwpCheck,
    Spectrum,
    Instability,
    Lambda,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::GroundState => "ground-state",
            Command::Direction => "direction",
            Command::Pohozaev => "pohozaev",
            Command::SharpConstant => "sharp-constant",
            Command::Petviashvili => "petviashvili",
            Command::Evolve => "evolve",
            Command::GwpCheck => "gwp-check",
            Command::Spectrum => "spectrum",
            Command::Instability => "instability",
            Command::Lambda => "lambda",
        }
    }
}

/// Grid size and period; the period is given either directly or in units of π.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default)]
    pub length: Option<f64>,
    #[serde(default)]
    pub length_pi: Option<f64>,
}

impl GridConfig {
    pub fn build(&self) -> Result<Arc<Grid>, Failure> {
        let length = match (self.length, self.length_pi) {
            (Some(l), None) => l,
            (None, Some(m)) => m * PI,
            _ => return Err(Failure::validation("grid needs exactly one of `length` and `length_pi`")),
        };
        Ok(Grid::new(self.n, length)?)
    }
}

fn default_omega() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must agree with the command line when present.
    #[serde(default)]
    pub command: Option<Command>,
    pub params: ModelParams,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub options: Option<serde_json::Value>,
}

impl RunConfig {
    pub fn grid(&self) -> Result<Arc<Grid>, Failure> {
        self.grid
            .as_ref()
            .ok_or_else(|| Failure::validation("this command needs a `grid`"))?
            .build()
    }

    /// Command options with unknown keys rejected; absent options take defaults.
    pub fn options<T: DeserializeOwned + Default>(&self) -> Result<T, Failure> {
        match &self.options {
            None => Ok(T::default()),
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|e| Failure::validation(format!("invalid options: {e}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoOptions {}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DirectionOptions {
    pub scan_points: usize,
}

impl Default for DirectionOptions {
    fn default() -> Self {
        DirectionOptions { scan_points: 4096 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundStateOptions {
    /// Also emit `profile.csv` with columns x,u,v.
    pub write_profile: bool,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        GroundStateOptions { write_profile: false }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PetviashviliConfig {
    pub max_iter: usize,
    pub tol: f64,
    /// Seed direction `(x₀, y₀)`; the first maximizer of F when absent.
    pub seed_direction: Option<[f64; 2]>,
}

impl Default for PetviashviliConfig {
    fn default() -> Self {
        PetviashviliConfig { max_iter: 500, tol: 1e-12, seed_direction: None }
    }
}

/// Time-stepping fields shared by the evolution commands.
#[derive(Debug, Clone, Copy)]
pub struct StepConfig {
    pub dt: f64,
    pub t_end: f64,
    pub dealias: f64,
    pub filter_order: Option<u32>,
    pub record_every: usize,
    pub scheme: Scheme,
}

impl StepConfig {
    fn with(dt: f64, t_end: f64) -> Self {
        let o = EvolveOptions::new(dt, t_end);
        StepConfig {
            dt,
            t_end,
            dealias: o.dealias,
            filter_order: o.filter_order,
            record_every: o.record_every,
            scheme: o.scheme,
        }
    }

    pub fn evolve_options(&self) -> Result<EvolveOptions, Failure> {
        let o = EvolveOptions {
            dt: self.dt,
            t_end: self.t_end,
            dealias: self.dealias,
            filter_order: self.filter_order,
            record_every: self.record_every,
            scheme: self.scheme,
        };
        o.validate()?;
        Ok(o)
    }
}

macro_rules! step_options {
    ($name:ident { $($field:ident : $ty:ty = $default:expr),* $(,)? } dt = $dt:expr, t_end = $t_end:expr) => {
        #[derive(Debug, Clone, Copy, Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct $name {
            pub dt: f64,
            pub t_end: f64,
            pub dealias: f64,
            pub filter_order: Option<u32>,
            pub record_every: usize,
            pub scheme: Scheme,
            $(pub $field: $ty,)*
        }

        impl Default for $name {
            fn default() -> Self {
                let s = StepConfig::with($dt, $t_end);
                $name {
                    dt: s.dt,
                    t_end: s.t_end,
                    dealias: s.dealias,
                    filter_order: s.filter_order,
                    record_every: s.record_every,
                    scheme: s.scheme,
                    $($field: $default,)*
                }
            }
        }

        impl $name {
            pub fn step(&self) -> StepConfig {
                StepConfig {
                    dt: self.dt,
                    t_end: self.t_end,
                    dealias: self.dealias,
                    filter_order: self.filter_order,
                    record_every: self.record_every,
                    scheme: self.scheme,
                }
            }
        }
    };
}

step_options!(EvolveConfig { scale: f64 = 1.0, shift: f64 = 0.0 } dt = 1e-3, t_end = 1.0);
step_options!(GwpConfig { scale: f64 = 0.5, sweep_pairs: usize = 100 } dt = 1e-3, t_end = 5.0);
step_options!(InstabilityConfig { eps: f64 = 0.01 } dt = 1e-3, t_end = 5.0);

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumOptions {
    /// Relative spectral-gap floor, multiplied by ω.
    pub gap_floor: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { gap_floor: gkdv_core::spectral::GAP_FLOOR }
    }
}
