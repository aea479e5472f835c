//! Token economics: emission schedule and halving, Brain acquisition burn
//! curve, reward splitting and distribution, validator activity percentile,
//! APY projection, and compute-unit pricing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::defaults;
use crate::token::{apportion, TokenAmount, TokenError};

#[derive(Debug, Error, PartialEq, Clone)]
pub enum EconError {
    #[error("year {0} is out of range (years are 1-based)")]
    YearOutOfRange(u64),
    #[error("brain supply exhausted: {0} already issued of {max}", max = defaults::MAX_BRAINS)]
    SupplyExhausted(u64),
    #[error("fraction {value} out of range for {what}")]
    FractionOutOfRange { what: &'static str, value: f64 },
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("prompt units {prompt} exceed model context of {context} compute units")]
    ContextExceeded { prompt: u64, context: u64 },
    #[error(transparent)]
    Token(#[from] TokenError),
}

/// Emission parameters: genesis reward, year length in blocks, halving cadence.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct EmissionSchedule {
    pub genesis_block_reward: TokenAmount,
    pub blocks_per_year: u64,
    pub halving_interval_years: u64,
}

impl Default for EmissionSchedule {
    fn default() -> Self {
        EmissionSchedule {
            genesis_block_reward: TokenAmount::from_tokens(defaults::GENESIS_BLOCK_REWARD_TOKENS),
            blocks_per_year: defaults::EMISSION_BLOCKS_PER_YEAR,
            halving_interval_years: defaults::HALVING_INTERVAL_YEARS,
        }
    }
}

impl EmissionSchedule {
    /// Block reward in year `year` (1-based): genesis / 2^(halvings).
    ///
    /// Division is by right shift, so the result floors once the reward
    /// stops being representable in base units (a 10-token genesis divides
    /// exactly through year 11) and reaches zero after 63 halvings.
    pub fn block_reward(&self, year: u64) -> Result<TokenAmount, EconError> {
        if year < 1 {
            return Err(EconError::YearOutOfRange(year));
        }
        let halvings = (year - 1) / self.halving_interval_years.max(1);
        if halvings >= 64 {
            return Ok(TokenAmount::ZERO);
        }
        Ok(TokenAmount::from_base_units(
            self.genesis_block_reward.base_units() >> halvings,
        ))
    }

    /// Total emission for year `year`: block reward times blocks per year.
    pub fn annual_emission(&self, year: u64) -> Result<TokenAmount, EconError> {
        Ok(self.block_reward(year)?.checked_mul(self.blocks_per_year)?)
    }

    /// Year containing `height` (1-based; height 0 is the genesis block).
    pub fn year_of_block(&self, height: u64) -> u64 {
        1 + height / self.blocks_per_year
    }

    /// Reward minted at block `height`.
    pub fn emission_at_block(&self, height: u64) -> TokenAmount {
        self.block_reward(self.year_of_block(height))
            .expect("year_of_block is always >= 1")
    }
}

/// Pepecoin price of the next burn-method Brain given how many were already
/// issued that way: 1,000 plus 200 per prior burn.
pub fn burn_cost(already_burn_issued: u64) -> Result<TokenAmount, EconError> {
    if already_burn_issued >= defaults::MAX_BRAINS as u64 {
        return Err(EconError::SupplyExhausted(already_burn_issued));
    }
    let pepecoin = defaults::BURN_BASE_PEPECOIN + defaults::BURN_STEP_PEPECOIN * already_burn_issued;
    Ok(TokenAmount::from_tokens(pepecoin))
}

/// Total Pepecoin burned if `count` Brains are acquired by burning:
/// the arithmetic series sum of `burn_cost(0..count)`.
pub fn cumulative_burn(count: u64) -> Result<TokenAmount, EconError> {
    if count > defaults::MAX_BRAINS as u64 {
        return Err(EconError::SupplyExhausted(count));
    }
    let base = defaults::BURN_BASE_PEPECOIN as u128 * count as u128;
    let steps = defaults::BURN_STEP_PEPECOIN as u128 * (count as u128 * count.saturating_sub(1) as u128 / 2);
    let total = u64::try_from(base + steps).map_err(|_| TokenError::Overflow)?;
    Ok(TokenAmount::from_tokens(total))
}

/// Splits a reward between node operators and the Brain owner.
///
/// Nodes get floor(total * (1 - owner_fraction)); the owner gets the rest
/// including any rounding remainder, so the two always sum to the input.
pub fn split_reward(
    total: TokenAmount,
    owner_fraction: f64,
) -> Result<(TokenAmount, TokenAmount), EconError> {
    if !(0.0..=1.0).contains(&owner_fraction) {
        return Err(EconError::FractionOutOfRange {
            what: "owner_fraction",
            value: owner_fraction,
        });
    }
    let nodes = total.mul_frac_floor(1.0 - owner_fraction)?;
    let owner = total - nodes;
    Ok((nodes, owner))
}

/// A Brain's stake and performance standing for reward distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BrainStakeProfile {
    pub brain_id: u32,
    pub total_stake: TokenAmount,
    /// Operational performance in [0, 1]; an exogenous scenario signal.
    pub performance: f64,
    pub owner_fraction: f64,
}

impl BrainStakeProfile {
    pub fn new(brain_id: u32, total_stake: TokenAmount, performance: f64) -> Self {
        BrainStakeProfile {
            brain_id,
            total_stake,
            performance,
            owner_fraction: defaults::OWNER_FRACTION,
        }
    }
}

/// The reward stake cap: 0.5% of the aggregate network stake.
pub fn stake_cap(aggregate_network_stake: TokenAmount) -> TokenAmount {
    aggregate_network_stake
        .mul_ratio_floor(defaults::STAKE_CAP_NUM, defaults::STAKE_CAP_DEN)
        .expect("cap ratio is < 1")
}

/// Distributes one block reward across Brains.
///
/// The base pool, `(1 - bonus_pool_fraction) * reward`, is split in
/// proportion to `min(stake, cap) * performance`; the remainder forms a
/// bonus pool split equally among the ceil(0.3 * n) highest-performance
/// brains (performance ties resolve to the lower brain id). All rounding is
/// largest-remainder, so the outputs sum to `reward` exactly.
///
/// `stake_cap` is the absolute cap amount when the caller enforces the 0.5%
/// aggregate-stake rule (`None` disables capping, e.g. for standalone
/// proportional splits).
pub fn distribute_block_reward(
    profiles: &[BrainStakeProfile],
    reward: TokenAmount,
    bonus_pool_fraction: f64,
    stake_cap: Option<TokenAmount>,
) -> Result<Vec<TokenAmount>, EconError> {
    if profiles.is_empty() {
        return Err(EconError::DegenerateInput("no brain profiles"));
    }
    if !(0.0..=1.0).contains(&bonus_pool_fraction) {
        return Err(EconError::FractionOutOfRange {
            what: "bonus_pool_fraction",
            value: bonus_pool_fraction,
        });
    }
    let mut weights = Vec::with_capacity(profiles.len());
    for p in profiles {
        if !(0.0..=1.0).contains(&p.performance) {
            return Err(EconError::FractionOutOfRange {
                what: "performance",
                value: p.performance,
            });
        }
        let effective = match stake_cap {
            Some(cap) => p.total_stake.min(cap),
            None => p.total_stake,
        };
        weights.push(effective.base_units() as f64 * p.performance);
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(EconError::DegenerateInput(
            "all capped stake x performance weights are zero",
        ));
    }

    let base_pool = reward.mul_frac_floor(1.0 - bonus_pool_fraction)?;
    let bonus_pool = reward - base_pool;

    let mut allocations = apportion(base_pool, &weights)?;

    if !bonus_pool.is_zero() {
        let slots = bonus_slot_count(profiles.len());
        let mut ranked: Vec<usize> = (0..profiles.len()).collect();
        ranked.sort_by(|&a, &b| {
            profiles[b]
                .performance
                .partial_cmp(&profiles[a].performance)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(profiles[a].brain_id.cmp(&profiles[b].brain_id))
        });
        let winners = &ranked[..slots];
        let bonus_parts = apportion(bonus_pool, &vec![1.0; winners.len()])?;
        for (&idx, part) in winners.iter().zip(bonus_parts) {
            allocations[idx] = allocations[idx].checked_add(part)?;
        }
    }

    Ok(allocations)
}

/// Number of bonus slots: ceil(0.3 * n).
pub fn bonus_slot_count(n: usize) -> usize {
    ((n as u64 * defaults::BONUS_TOP_FRACTION_NUM + defaults::BONUS_TOP_FRACTION_DEN - 1)
        / defaults::BONUS_TOP_FRACTION_DEN) as usize
}

/// Indices of validators whose stake reaches the 70th percentile
/// (nearest-rank) of the given stakes.
pub fn active_validators(stakes: &[TokenAmount]) -> Result<Vec<usize>, EconError> {
    if stakes.is_empty() {
        return Err(EconError::DegenerateInput("no validator stakes"));
    }
    let mut sorted: Vec<TokenAmount> = stakes.to_vec();
    sorted.sort();
    let n = stakes.len() as u64;
    let rank = (defaults::ACTIVE_PERCENTILE_NUM * n + defaults::ACTIVE_PERCENTILE_DEN - 1)
        / defaults::ACTIVE_PERCENTILE_DEN;
    let threshold = sorted[(rank as usize).max(1) - 1];
    Ok((0..stakes.len()).filter(|&i| stakes[i] >= threshold).collect())
}

/// Projects a stake compounded annually at `apy`, flooring to base units
/// each year.
pub fn project_stake(amount: TokenAmount, apy: f64, years: u32) -> Result<TokenAmount, EconError> {
    if !apy.is_finite() || apy < 0.0 {
        return Err(EconError::FractionOutOfRange {
            what: "apy",
            value: apy,
        });
    }
    let mut value = amount;
    for _ in 0..years {
        value = value.checked_add(value.mul_frac_floor(apy)?)?;
    }
    Ok(value)
}

/// Published per-model compute-unit pricing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelPricing {
    pub name: String,
    /// Short lookup alias, e.g. "gpt-4".
    pub alias: String,
    pub prompt_cost_per_1k: TokenAmount,
    pub completion_cost_per_1k: TokenAmount,
    pub context_units: u64,
}

impl ModelPricing {
    fn new(name: &str, alias: &str, prompt: &str, completion: &str, context: u64) -> Self {
        ModelPricing {
            name: name.to_string(),
            alias: alias.to_string(),
            prompt_cost_per_1k: prompt.parse().expect("static pricing literal"),
            completion_cost_per_1k: completion.parse().expect("static pricing literal"),
            context_units: context,
        }
    }
}

/// The published operating-cost catalog for popular hosted models.
pub fn model_catalog() -> Vec<ModelPricing> {
    vec![
        ModelPricing::new("OpenAI: GPT-4", "gpt-4", "0.03", "0.06", 8191),
        ModelPricing::new("OpenAI: GPT-3.5 Turbo", "gpt-3.5-turbo", "0.01", "0.02", 4095),
        ModelPricing::new("Google: PaLM 2 Chat", "palm-2-chat", "0.00025", "0.0005", 36864),
        ModelPricing::new("Anthropic: Claude v2", "claude-v2", "0.008", "0.024", 200000),
        ModelPricing::new("Mistral: Medium", "mistral-medium", "0.002778", "0.008333", 32000),
        ModelPricing::new(
            "Nous: Hermes 2 Mistral 8x7B DPO",
            "hermes-2-mistral-8x7b-dpo",
            "0.00018",
            "0.00054",
            8192,
        ),
        ModelPricing::new("Meta: Llama v2 70B Chat", "llama-v2-70b-chat", "0.0007", "0.0009", 4096),
        ModelPricing::new("Perplexity: PPLX 70B Chat", "pplx-70b-chat", "0.0007", "0.0028", 4096),
        ModelPricing::new("Goliath 120B", "goliath-120b", "0.0125", "0.0125", 6144),
        ModelPricing::new("Synthia 70B", "synthia-70b", "0.005", "0.005", 8192),
    ]
}

/// Finds a catalog entry by exact name or alias (case-insensitive).
pub fn find_model(name: &str) -> Option<ModelPricing> {
    let needle = name.to_lowercase();
    model_catalog()
        .into_iter()
        .find(|m| m.name.to_lowercase() == needle || m.alias == needle)
}

/// $BASED cost of a request: per-1k prompt and completion unit pricing,
/// floored once over the combined numerator.
pub fn quote_compute_cost(
    pricing: &ModelPricing,
    prompt_units: u64,
    completion_units: u64,
) -> Result<TokenAmount, EconError> {
    if prompt_units > pricing.context_units {
        return Err(EconError::ContextExceeded {
            prompt: prompt_units,
            context: pricing.context_units,
        });
    }
    let numerator = prompt_units as u128 * pricing.prompt_cost_per_1k.base_units() as u128
        + completion_units as u128 * pricing.completion_cost_per_1k.base_units() as u128;
    let units = u64::try_from(numerator / 1000).map_err(|_| TokenError::Overflow)?;
    Ok(TokenAmount::from_base_units(units))
}
