//! basedlab-core: the quantitative mechanisms of the BasedAI network as a
//! deterministic, desk-scale library.
//!
//! - [`econ`]: emission schedule and halving, Brain acquisition burn curve,
//!   reward splitting and distribution, validator percentile rule, APY
//!   projection, compute-unit pricing.
//! - [`consensus`]: inter-peer weight/trust matrices, stake-weighted
//!   consensus, sigmoid reward scaling, Credits, the enforcer-weight
//!   transition, composite incentives, leave-one-out scoring.
//! - [`routing`]: embedding-radius distances and nearest-peer work
//!   distribution with covariance diagnostics.
//! - [`fhe_cost`]: arithmetic-expression parsing and the three-mode
//!   encryption step-cost model with fusion planning.
//! - [`quant`]: dynamic quantization pipeline, quantization-aware-training
//!   round trips, toy multi-head attention with budgeted head selection.
//! - [`sim`]: a deterministic block-by-block network simulator composing the
//!   above, with an append-only event log and state digests.

pub mod consensus;
pub mod defaults;
pub mod econ;
pub mod fhe_cost;
pub mod quant;
pub mod routing;
pub mod sim;
pub mod token;
pub mod util;

pub use token::{TokenAmount, TokenError, BASE_UNITS_PER_TOKEN};
