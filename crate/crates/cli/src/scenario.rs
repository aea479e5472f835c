//! Scenario files: the simulator's network config plus run length and
//! optional routing/quantization demo sections.

use basedlab_core::quant::SqueezeParams;
use basedlab_core::routing::{DistanceAggregate, RoutingMetric};
use basedlab_core::sim::{BrainId, NetworkConfig};
use serde::Deserialize;

use crate::errors::{AppError, AppResult};

#[derive(Debug, Clone, Deserialize)]
pub struct GeneratedItems {
    pub count: u64,
    pub dim: usize,
}

/// Routing demo over the simulated peers' embedding histories.
#[derive(Debug, Clone, Deserialize)]
pub struct RoutingSection {
    /// Explicit item embeddings, row per item.
    #[serde(default)]
    pub items: Option<Vec<Vec<f64>>>,
    /// Or items generated from the scenario seed.
    #[serde(default)]
    pub generate: Option<GeneratedItems>,
    /// Restrict to one brain's registered peers (default: all peers).
    #[serde(default)]
    pub brain: Option<BrainId>,
    #[serde(default)]
    pub aggregate: DistanceAggregate,
    #[serde(default)]
    pub metric: RoutingMetric,
}

/// Quantization demo: squeeze a matrix with the configured parameters.
#[derive(Debug, Clone, Deserialize)]
pub struct QuantSection {
    pub matrix: Vec<Vec<f64>>,
    #[serde(flatten)]
    pub params: SqueezeParamsConfig,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SqueezeParamsConfig {
    #[serde(default = "default_levels")]
    pub levels: u32,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_levels() -> u32 {
    basedlab_core::defaults::QUANT_LEVELS
}

fn default_threshold() -> f64 {
    basedlab_core::defaults::ADAPTIVE_THRESHOLD
}

fn default_alpha() -> f64 {
    basedlab_core::defaults::SCALE_FACTOR
}

impl SqueezeParamsConfig {
    pub fn to_params(&self) -> SqueezeParams {
        SqueezeParams {
            quant_levels: self.levels,
            adaptive_threshold: self.threshold,
            scale_factor: self.alpha,
        }
    }
}

/// A complete scenario file.
#[derive(Debug, Clone, Deserialize)]
pub struct Scenario {
    /// Run length in years of the emission clock (default 1.0).
    #[serde(default)]
    pub years: Option<f64>,
    /// Run length in blocks; takes precedence over `years`.
    #[serde(default)]
    pub blocks: Option<u64>,
    #[serde(default)]
    pub routing: Option<RoutingSection>,
    #[serde(default)]
    pub quant: Option<QuantSection>,
    #[serde(flatten)]
    pub network: NetworkConfig,
}

impl Scenario {
    /// Resolved run length in blocks.
    pub fn run_blocks(&self, blocks_per_year: u64) -> AppResult<u64> {
        if let Some(blocks) = self.blocks {
            return Ok(blocks);
        }
        let years = self.years.unwrap_or(1.0);
        if !years.is_finite() || years < 0.0 {
            return Err(AppError::validation(format!(
                "years: {years} must be non-negative"
            )));
        }
        Ok((years * blocks_per_year as f64).round() as u64)
    }
}
