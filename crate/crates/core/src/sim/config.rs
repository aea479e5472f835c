//! Simulation configuration: genesis declarations plus timed actions.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::consensus::BetaMode;
use crate::defaults;
use crate::econ::EmissionSchedule;
use crate::token::TokenAmount;

use super::{AccountId, BrainId, PeerId, SimError};

/// A peer's declared role (fixed for its lifetime).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeerRole {
    Validator,
    Miner,
}

/// How a Brain was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcquisitionMethod {
    #[default]
    Burn,
    StakedPepecoin,
}

/// Per-year performance signal; a bare number repeats forever.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerformanceSeries {
    Constant(f64),
    PerYear(Vec<f64>),
}

impl Default for PerformanceSeries {
    fn default() -> Self {
        PerformanceSeries::Constant(1.0)
    }
}

impl PerformanceSeries {
    /// Performance for a 1-based year; series clamp to their last entry.
    pub fn at_year(&self, year: u64) -> f64 {
        match self {
            PerformanceSeries::Constant(v) => *v,
            PerformanceSeries::PerYear(values) => {
                let idx = (year.max(1) as usize - 1).min(values.len() - 1);
                values[idx]
            }
        }
    }

    fn validate(&self) -> Result<(), String> {
        let check = |v: f64| {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                Err(format!("performance {v} outside [0,1]"))
            } else {
                Ok(())
            }
        };
        match self {
            PerformanceSeries::Constant(v) => check(*v),
            PerformanceSeries::PerYear(values) => {
                if values.is_empty() {
                    return Err("performance series is empty".to_string());
                }
                values.iter().try_for_each(|&v| check(v))
            }
        }
    }
}

/// An inter-peer weight override inside one Brain's evaluation graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightEdge {
    pub from: PeerId,
    pub to: PeerId,
    pub w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BrainConfig {
    pub id: BrainId,
    pub owner: AccountId,
    #[serde(default)]
    pub acquisition: AcquisitionMethod,
    #[serde(default = "defaults::registration_fee")]
    pub registration_fee: TokenAmount,
    #[serde(default)]
    pub memorize_fee: TokenAmount,
    #[serde(default = "default_owner_fraction")]
    pub owner_fraction: f64,
    #[serde(default = "default_validator_share")]
    pub validator_share: f64,
    #[serde(default)]
    pub performance: PerformanceSeries,
    /// Weight assumed between every distinct peer pair unless overridden.
    #[serde(default = "default_weight")]
    pub default_weight: f64,
    #[serde(default)]
    pub weights: Vec<WeightEdge>,
}

fn default_owner_fraction() -> f64 {
    defaults::OWNER_FRACTION
}

fn default_validator_share() -> f64 {
    defaults::VALIDATOR_SHARE
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeerConfig {
    pub id: PeerId,
    pub account: AccountId,
    pub role: PeerRole,
    /// Brains this peer is memorized at from genesis (no fee applied).
    #[serde(default)]
    pub memorized: Vec<BrainId>,
    /// Brains this peer is registered at from genesis (implies memorized).
    #[serde(default)]
    pub registered: Vec<BrainId>,
    /// Embeddings of previously processed work, for routing.
    #[serde(default)]
    pub history: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccountConfig {
    pub id: AccountId,
    #[serde(default)]
    pub based: TokenAmount,
    #[serde(default)]
    pub pepecoin: TokenAmount,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StakeConfig {
    pub account: AccountId,
    pub brain: BrainId,
    #[serde(default)]
    pub validator: Option<PeerId>,
    pub amount: TokenAmount,
}

/// Votes a GigaBrain can cast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallotChoice {
    Up,
    Down,
    Abstain,
}

/// A state transition requested by the scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    AcquireBrain {
        account: AccountId,
        method: AcquisitionMethod,
    },
    DeactivateBrain {
        brain: BrainId,
    },
    Memorize {
        brain: BrainId,
        peer: PeerId,
    },
    RegisterPeer {
        brain: BrainId,
        peer: PeerId,
        role: PeerRole,
    },
    Stake {
        account: AccountId,
        brain: BrainId,
        #[serde(default)]
        validator: Option<PeerId>,
        amount: TokenAmount,
    },
    Unstake {
        account: AccountId,
        brain: BrainId,
        #[serde(default)]
        validator: Option<PeerId>,
        amount: TokenAmount,
    },
    SetRegistrationFee {
        brain: BrainId,
        fee: TokenAmount,
    },
    SetMemorizeFee {
        brain: BrainId,
        fee: TokenAmount,
    },
    SetPerformance {
        brain: BrainId,
        value: f64,
    },
    Vote {
        proposal: String,
        ballots: std::collections::BTreeMap<BrainId, BallotChoice>,
    },
}

impl Action {
    /// Short description for rejection events.
    pub fn describe(&self) -> String {
        match self {
            Action::AcquireBrain { account, method } => {
                format!("acquire_brain({account}, {method:?})")
            }
            Action::DeactivateBrain { brain } => format!("deactivate_brain({brain})"),
            Action::Memorize { brain, peer } => format!("memorize({brain}, {peer})"),
            Action::RegisterPeer { brain, peer, role } => {
                format!("register_peer({brain}, {peer}, {role:?})")
            }
            Action::Stake {
                account,
                brain,
                validator,
                amount,
            } => format!("stake({account}, {brain}, {validator:?}, {amount})"),
            Action::Unstake {
                account,
                brain,
                validator,
                amount,
            } => format!("unstake({account}, {brain}, {validator:?}, {amount})"),
            Action::SetRegistrationFee { brain, fee } => {
                format!("set_registration_fee({brain}, {fee})")
            }
            Action::SetMemorizeFee { brain, fee } => format!("set_memorize_fee({brain}, {fee})"),
            Action::SetPerformance { brain, value } => {
                format!("set_performance({brain}, {value})")
            }
            Action::Vote { proposal, .. } => format!("vote({proposal:?})"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimedAction {
    pub block: u64,
    #[serde(flatten)]
    pub action: Action,
}

/// Genesis declarations plus scheduled actions; the full input to
/// [`super::Simulation::new`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub emission: Option<EmissionSchedule>,
    #[serde(default)]
    pub beta_mode: BetaMode,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub tft_accuracy: f64,
    #[serde(default)]
    pub bonus_pool_fraction: f64,
    /// Emit per-block emission/reward/credit events. Disable for
    /// long-horizon runs where only lifecycle events and summaries matter.
    #[serde(default = "default_true")]
    pub record_rewards: bool,
    #[serde(default)]
    pub accounts: Vec<AccountConfig>,
    #[serde(default)]
    pub brains: Vec<BrainConfig>,
    #[serde(default)]
    pub peers: Vec<PeerConfig>,
    #[serde(default)]
    pub stakes: Vec<StakeConfig>,
    #[serde(default)]
    pub actions: Vec<TimedAction>,
}

fn default_lambda() -> f64 {
    defaults::SIGMOID_LAMBDA
}

fn default_true() -> bool {
    true
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            seed: 0,
            emission: None,
            beta_mode: BetaMode::default(),
            lambda: default_lambda(),
            tft_accuracy: 0.0,
            bonus_pool_fraction: 0.0,
            record_rewards: true,
            accounts: Vec::new(),
            brains: Vec::new(),
            peers: Vec::new(),
            stakes: Vec::new(),
            actions: Vec::new(),
        }
    }
}

impl NetworkConfig {
    /// Structural validation with field-path diagnostics.
    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |path: &str, reason: String| {
            Err(SimError::InvalidConfig {
                path: path.to_string(),
                reason,
            })
        };

        if !(0.0..=1.0).contains(&self.bonus_pool_fraction) {
            return fail(
                "bonus_pool_fraction",
                format!("{} outside [0,1]", self.bonus_pool_fraction),
            );
        }
        if !(0.0..=1.0).contains(&self.tft_accuracy) {
            return fail("tft_accuracy", format!("{} outside [0,1]", self.tft_accuracy));
        }
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return fail("lambda", format!("{} must be positive", self.lambda));
        }

        let mut account_ids = BTreeSet::new();
        for (i, account) in self.accounts.iter().enumerate() {
            if account.id.is_empty() {
                return fail(&format!("accounts[{i}].id"), "empty".to_string());
            }
            if !account_ids.insert(account.id.clone()) {
                return fail(&format!("accounts[{i}].id"), format!("duplicate {:?}", account.id));
            }
        }

        if self.brains.len() > defaults::MAX_BRAINS as usize {
            return fail(
                "brains",
                format!(
                    "{} brains declared, network caps at {}",
                    self.brains.len(),
                    defaults::MAX_BRAINS
                ),
            );
        }
        let mut brain_ids = BTreeSet::new();
        for (i, brain) in self.brains.iter().enumerate() {
            let path = format!("brains[{i}]");
            if brain.id >= defaults::MAX_BRAINS {
                return fail(&format!("{path}.id"), format!("{} out of 0..{}", brain.id, defaults::MAX_BRAINS));
            }
            if !brain_ids.insert(brain.id) {
                return fail(&format!("{path}.id"), format!("duplicate {}", brain.id));
            }
            if !account_ids.contains(&brain.owner) {
                return fail(&format!("{path}.owner"), format!("unknown account {:?}", brain.owner));
            }
            if !(0.0..=1.0).contains(&brain.owner_fraction) {
                return fail(&format!("{path}.owner_fraction"), format!("{} outside [0,1]", brain.owner_fraction));
            }
            if !(0.0..=1.0).contains(&brain.validator_share) {
                return fail(&format!("{path}.validator_share"), format!("{} outside [0,1]", brain.validator_share));
            }
            if !(0.0..=1.0).contains(&brain.default_weight) {
                return fail(&format!("{path}.default_weight"), format!("{} outside [0,1]", brain.default_weight));
            }
            if let Err(reason) = brain.performance.validate() {
                return fail(&format!("{path}.performance"), reason);
            }
            for (j, edge) in brain.weights.iter().enumerate() {
                if !(0.0..=1.0).contains(&edge.w) || !edge.w.is_finite() {
                    return fail(&format!("{path}.weights[{j}].w"), format!("{} outside [0,1]", edge.w));
                }
            }
        }

        let mut peer_ids = BTreeSet::new();
        for (i, peer) in self.peers.iter().enumerate() {
            let path = format!("peers[{i}]");
            if !peer_ids.insert(peer.id) {
                return fail(&format!("{path}.id"), format!("duplicate {}", peer.id));
            }
            if !account_ids.contains(&peer.account) {
                return fail(&format!("{path}.account"), format!("unknown account {:?}", peer.account));
            }
            for (j, brain) in peer.memorized.iter().chain(&peer.registered).enumerate() {
                if !brain_ids.contains(brain) {
                    return fail(&format!("{path}.memorized/registered[{j}]"), format!("unknown brain {brain}"));
                }
            }
            let dim = peer.history.first().map(Vec::len);
            for (j, e) in peer.history.iter().enumerate() {
                if Some(e.len()) != dim || e.iter().any(|v| !v.is_finite()) {
                    return fail(&format!("{path}.history[{j}]"), "ragged or non-finite embedding".to_string());
                }
            }
        }

        for (i, stake) in self.stakes.iter().enumerate() {
            let path = format!("stakes[{i}]");
            if !account_ids.contains(&stake.account) {
                return fail(&format!("{path}.account"), format!("unknown account {:?}", stake.account));
            }
            if !brain_ids.contains(&stake.brain) {
                return fail(&format!("{path}.brain"), format!("unknown brain {}", stake.brain));
            }
            if let Some(v) = stake.validator {
                if !peer_ids.contains(&v) {
                    return fail(&format!("{path}.validator"), format!("unknown peer {v}"));
                }
            }
            if stake.amount.is_zero() {
                return fail(&format!("{path}.amount"), "zero stake".to_string());
            }
        }
        Ok(())
    }
}
