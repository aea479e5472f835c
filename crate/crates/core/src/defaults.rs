//! Network default constants, collected in one place.
//!
//! Every CLI report echoes [`provenance_line`] so output files are
//! self-describing about the constants they were produced under.

use crate::token::TokenAmount;

/// $BASED minted per block at genesis.
pub const GENESIS_BLOCK_REWARD_TOKENS: u64 = 10;
/// Seconds per block.
pub const BLOCK_SECONDS: u64 = 10;
/// Blocks per emission year (365 days x 8,640 blocks/day); reproduces the
/// published annual emission table exactly.
pub const EMISSION_BLOCKS_PER_YEAR: u64 = 3_153_600;
/// Blocks per year used by the enforcer-weight transition clock.
pub const ENFORCER_BLOCKS_PER_YEAR: u64 = 3_155_760;
/// Emission halves every this many years.
pub const HALVING_INTERVAL_YEARS: u64 = 1;

/// Brain slots network-wide.
pub const MAX_BRAINS: u32 = 1024;
/// Validator slots per Brain.
pub const MAX_VALIDATORS: usize = 256;
/// Miner slots per Brain.
pub const MAX_MINERS: usize = 1792;
/// Brain ids reserved for network-operated roles.
pub const RESERVED_BRAIN_IDS: [u32; 8] = [0, 1, 2, 3, 4, 5, 6, 47];

/// Pepecoin burned for the first burn-method Brain.
pub const BURN_BASE_PEPECOIN: u64 = 1_000;
/// Pepecoin added to the burn price per Brain already burn-issued.
pub const BURN_STEP_PEPECOIN: u64 = 200;
/// Pepecoin locked by the stake acquisition method.
pub const STAKE_METHOD_PEPECOIN: u64 = 100_000;
/// Stake-method lock: 90 days of 10-second blocks.
pub const STAKE_LOCK_BLOCKS: u64 = 777_600;

/// Share of each Brain's emission that goes to the owner by default.
pub const OWNER_FRACTION: f64 = 0.25;
/// Validator share of the node pool by default (miners get the rest).
pub const VALIDATOR_SHARE: f64 = 0.5;
/// Default bonus pool carved out for the top-performing brains (the
/// published scheme names the mechanism but not the size, so it defaults
/// off).
pub const BONUS_POOL_FRACTION: f64 = 0.0;
/// Fraction of brains eligible for the performance bonus pool.
pub const BONUS_TOP_FRACTION_NUM: u64 = 3;
pub const BONUS_TOP_FRACTION_DEN: u64 = 10;
/// Reward stake cap: 0.5% of aggregate network stake, as a ratio.
pub const STAKE_CAP_NUM: u64 = 5;
pub const STAKE_CAP_DEN: u64 = 1000;
/// GigaBrain threshold: 0.5% of total network stake.
pub const GIGABRAIN_NUM: u64 = 5;
pub const GIGABRAIN_DEN: u64 = 1000;
/// Active-validator cutoff percentile (nearest-rank).
pub const ACTIVE_PERCENTILE_NUM: u64 = 70;
pub const ACTIVE_PERCENTILE_DEN: u64 = 100;

/// Peer registration fee default, adjustable per Brain owner.
pub fn registration_fee() -> TokenAmount {
    TokenAmount::from_tokens(100)
}

/// Permanent-memory ("memorize") fee default.
pub fn memorize_fee() -> TokenAmount {
    TokenAmount::ZERO
}

/// Sigmoid steepness for consensus reward scaling.
pub const SIGMOID_LAMBDA: f64 = 10.0;

/// Quantization defaults.
pub const QUANT_LEVELS: u32 = 256;
pub const ADAPTIVE_THRESHOLD: f64 = 0.1;
pub const SCALE_FACTOR: f64 = 0.5;

/// One compact line describing the constants in force, for report headers.
pub fn provenance_line() -> String {
    format!(
        "defaults: reward={}/block block={}s blocks_per_year={} enforcer_year={} \
         brains<={} validators<={} miners<={} burn={}+{} stake_method={}x{}blk \
         owner={} fee={} stake_cap={}/{} quant={}/{}/{} lambda={}",
        GENESIS_BLOCK_REWARD_TOKENS,
        BLOCK_SECONDS,
        EMISSION_BLOCKS_PER_YEAR,
        ENFORCER_BLOCKS_PER_YEAR,
        MAX_BRAINS,
        MAX_VALIDATORS,
        MAX_MINERS,
        BURN_BASE_PEPECOIN,
        BURN_STEP_PEPECOIN,
        STAKE_METHOD_PEPECOIN,
        STAKE_LOCK_BLOCKS,
        OWNER_FRACTION,
        registration_fee(),
        STAKE_CAP_NUM,
        STAKE_CAP_DEN,
        QUANT_LEVELS,
        ADAPTIVE_THRESHOLD,
        SCALE_FACTOR,
        SIGMOID_LAMBDA,
    )
}
