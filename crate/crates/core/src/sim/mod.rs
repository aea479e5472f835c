//! Deterministic network simulator: Brain lifecycle, peer registration,
//! staking, per-block reward distribution, credit accrual, and GigaBrain
//! governance, driven by a scenario configuration.

pub mod config;
pub mod events;
mod runner;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::consensus::ConsensusError;
use crate::defaults;
use crate::econ::{self, EconError};
use crate::routing::Embedding;
use crate::token::{TokenAmount, TokenError};

pub use config::{
    AccountConfig, AcquisitionMethod, Action, BallotChoice, BrainConfig, NetworkConfig,
    PeerConfig, PeerRole, PerformanceSeries, StakeConfig, TimedAction, WeightEdge,
};
pub use events::{Event, EventKind, VoteOutcome};
pub use runner::{CreditsRow, Simulation, YearSummaryRow};

pub type AccountId = String;
pub type PeerId = u64;
pub type BrainId = u32;

#[derive(Debug, Error, PartialEq, Clone)]
pub enum SimError {
    #[error("invalid config at {path}: {reason}")]
    InvalidConfig { path: String, reason: String },
    #[error("unknown brain {0}")]
    UnknownBrain(BrainId),
    #[error("brain {0} is inactive")]
    BrainInactive(BrainId),
    #[error("unknown peer {0}")]
    UnknownPeer(PeerId),
    #[error("unknown account {0:?}")]
    UnknownAccount(AccountId),
    #[error("brain supply exhausted ({0} active)")]
    SupplyExhausted(u32),
    #[error("no unreserved brain id is available")]
    NoBrainIdAvailable,
    #[error("account {account:?} has {available} $BASED, needs {needed}")]
    InsufficientBased {
        account: AccountId,
        needed: TokenAmount,
        available: TokenAmount,
    },
    #[error("account {account:?} has {available} Pepecoin, needs {needed}")]
    InsufficientPepecoin {
        account: AccountId,
        needed: TokenAmount,
        available: TokenAmount,
    },
    #[error("brain {brain} has no free {role:?} slot")]
    CapacityFull { brain: BrainId, role: PeerRole },
    #[error("peer {peer} already memorized at brain {brain}")]
    AlreadyMemorized { brain: BrainId, peer: PeerId },
    #[error("peer {peer} is not memorized at brain {brain}")]
    NotMemorized { brain: BrainId, peer: PeerId },
    #[error("peer {peer} already registered at brain {brain}")]
    AlreadyRegistered { brain: BrainId, peer: PeerId },
    #[error("peer {peer} is declared as {actual:?}, not {requested:?}")]
    RoleMismatch {
        peer: PeerId,
        requested: PeerRole,
        actual: PeerRole,
    },
    #[error("peer {peer} is not a registered validator of brain {brain}")]
    NotAValidator { brain: BrainId, peer: PeerId },
    #[error("brain {0} was burn-acquired and cannot be deactivated")]
    NotDeactivatable(BrainId),
    #[error("brain {brain} Pepecoin lock active until block {until}")]
    LockActive { brain: BrainId, until: u64 },
    #[error("position holds {available}, cannot unstake {needed}")]
    InsufficientPosition {
        needed: TokenAmount,
        available: TokenAmount,
    },
    #[error("amount must be positive")]
    ZeroAmount,
    #[error(transparent)]
    Econ(#[from] EconError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Token(#[from] TokenError),
}

/// Account holdings in both currencies.
#[derive(Debug, Clone, Default, Serialize, PartialEq, Eq)]
pub struct Balances {
    pub based: TokenAmount,
    pub pepecoin: TokenAmount,
}

/// A network slot hosting a computational task.
#[derive(Debug, Clone, Serialize)]
pub struct Brain {
    pub id: BrainId,
    pub owner: AccountId,
    pub acquisition: AcquisitionMethod,
    pub active: bool,
    pub registration_fee: TokenAmount,
    pub memorize_fee: TokenAmount,
    pub owner_fraction: f64,
    pub validator_share: f64,
    pub performance: PerformanceSeries,
    /// Performance value in force this block.
    pub current_performance: f64,
    pub memorized: BTreeSet<PeerId>,
    pub validators: BTreeSet<PeerId>,
    pub miners: BTreeSet<PeerId>,
    pub locked_pepecoin: TokenAmount,
    pub lock_until_block: Option<u64>,
    pub default_weight: f64,
    #[serde(serialize_with = "serialize_edges")]
    pub weight_edges: BTreeMap<(PeerId, PeerId), f64>,
}

impl Brain {
    /// Registered peers in ascending id order; the index base for this
    /// brain's weight/stake vectors.
    pub fn peer_order(&self) -> Vec<PeerId> {
        let mut ids: Vec<PeerId> = self.validators.union(&self.miners).copied().collect();
        ids.sort_unstable();
        ids
    }

    pub fn weight_between(&self, from: PeerId, to: PeerId) -> f64 {
        if from == to {
            return 0.0;
        }
        self.weight_edges
            .get(&(from, to))
            .copied()
            .unwrap_or(self.default_weight)
    }
}

fn serialize_edges<S: Serializer>(
    edges: &BTreeMap<(PeerId, PeerId), f64>,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    let flat: Vec<(PeerId, PeerId, f64)> =
        edges.iter().map(|(&(a, b), &w)| (a, b, w)).collect();
    flat.serialize(serializer)
}

/// A miner or validator identity.
#[derive(Debug, Clone, Serialize)]
pub struct Peer {
    pub id: PeerId,
    pub account: AccountId,
    pub role: PeerRole,
    pub history: Vec<Embedding>,
}

/// Key of a stake position: stakes are per (account, brain) and optionally
/// target a specific validator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PositionKey {
    pub account: AccountId,
    pub brain: BrainId,
    pub validator: Option<PeerId>,
}

fn serialize_positions<S: Serializer>(
    positions: &BTreeMap<PositionKey, TokenAmount>,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Record<'a> {
        account: &'a AccountId,
        brain: BrainId,
        validator: Option<PeerId>,
        amount: TokenAmount,
    }
    let flat: Vec<Record<'_>> = positions
        .iter()
        .map(|(key, &amount)| Record {
            account: &key.account,
            brain: key.brain,
            validator: key.validator,
            amount,
        })
        .collect();
    flat.serialize(serializer)
}

/// Full simulator state. All collections are ordered so serialization and
/// iteration are deterministic.
#[derive(Debug, Clone, Serialize)]
pub struct NetworkState {
    pub block_height: u64,
    pub rng_seed: u64,
    pub brains: BTreeMap<BrainId, Brain>,
    pub peers: BTreeMap<PeerId, Peer>,
    pub balances: BTreeMap<AccountId, Balances>,
    #[serde(serialize_with = "serialize_positions")]
    pub positions: BTreeMap<PositionKey, TokenAmount>,
    pub credits: BTreeMap<PeerId, f64>,
    /// Brains ever issued through the burn method (drives the price curve).
    pub burn_issued: u64,
    pub pepecoin_burned: TokenAmount,
    pub minted: TokenAmount,
    pub distributed: TokenAmount,
    pub withheld: TokenAmount,
}

/// Result of a governance vote.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct VoteReport {
    pub outcome: VoteOutcome,
    pub gigabrains: usize,
    pub down_votes: usize,
    pub rejected_ballots: Vec<BrainId>,
}

impl NetworkState {
    fn empty(seed: u64) -> Self {
        NetworkState {
            block_height: 0,
            rng_seed: seed,
            brains: BTreeMap::new(),
            peers: BTreeMap::new(),
            balances: BTreeMap::new(),
            positions: BTreeMap::new(),
            credits: BTreeMap::new(),
            burn_issued: 0,
            pepecoin_burned: TokenAmount::ZERO,
            minted: TokenAmount::ZERO,
            distributed: TokenAmount::ZERO,
            withheld: TokenAmount::ZERO,
        }
    }

    /// Genesis state from a validated config. Deterministic for a given
    /// config and seed.
    pub fn new(config: &NetworkConfig) -> Result<Self, SimError> {
        config.validate()?;
        let mut state = NetworkState::empty(config.seed);
        for account in &config.accounts {
            state.balances.insert(
                account.id.clone(),
                Balances {
                    based: account.based,
                    pepecoin: account.pepecoin,
                },
            );
        }
        for brain_cfg in &config.brains {
            let mut brain = Brain {
                id: brain_cfg.id,
                owner: brain_cfg.owner.clone(),
                acquisition: brain_cfg.acquisition,
                active: true,
                registration_fee: brain_cfg.registration_fee,
                memorize_fee: brain_cfg.memorize_fee,
                owner_fraction: brain_cfg.owner_fraction,
                validator_share: brain_cfg.validator_share,
                performance: brain_cfg.performance.clone(),
                current_performance: brain_cfg.performance.at_year(1),
                memorized: BTreeSet::new(),
                validators: BTreeSet::new(),
                miners: BTreeSet::new(),
                locked_pepecoin: TokenAmount::ZERO,
                lock_until_block: None,
                default_weight: brain_cfg.default_weight,
                weight_edges: BTreeMap::new(),
            };
            if brain_cfg.acquisition == AcquisitionMethod::StakedPepecoin {
                // Genesis stake-method brains carry their lock already
                // satisfied; the locked Pepecoin is an endowment.
                brain.locked_pepecoin = TokenAmount::from_tokens(defaults::STAKE_METHOD_PEPECOIN);
                brain.lock_until_block = Some(0);
            }
            for edge in &brain_cfg.weights {
                brain.weight_edges.insert((edge.from, edge.to), edge.w);
            }
            state.brains.insert(brain.id, brain);
        }
        for brain_cfg in &config.brains {
            if brain_cfg.acquisition == AcquisitionMethod::Burn {
                state.burn_issued += 1;
            }
        }
        for peer_cfg in &config.peers {
            state.peers.insert(
                peer_cfg.id,
                Peer {
                    id: peer_cfg.id,
                    account: peer_cfg.account.clone(),
                    role: peer_cfg.role,
                    history: peer_cfg.history.iter().cloned().map(Embedding).collect(),
                },
            );
        }
        // Genesis memorizations/registrations apply without fees.
        for peer_cfg in &config.peers {
            for brain_id in peer_cfg.memorized.iter().chain(&peer_cfg.registered) {
                let brain = state.brains.get_mut(brain_id).expect("validated");
                brain.memorized.insert(peer_cfg.id);
            }
            for brain_id in &peer_cfg.registered {
                let brain = state.brains.get_mut(brain_id).expect("validated");
                let (set, cap) = match peer_cfg.role {
                    PeerRole::Validator => (&mut brain.validators, defaults::MAX_VALIDATORS),
                    PeerRole::Miner => (&mut brain.miners, defaults::MAX_MINERS),
                };
                if set.len() >= cap {
                    return Err(SimError::InvalidConfig {
                        path: format!("peers (brain {brain_id})"),
                        reason: format!("more than {cap} genesis {:?}s", peer_cfg.role),
                    });
                }
                set.insert(peer_cfg.id);
            }
        }
        for stake in &config.stakes {
            if let Some(v) = stake.validator {
                let brain = state.brains.get(&stake.brain).expect("validated");
                if !brain.validators.contains(&v) {
                    return Err(SimError::InvalidConfig {
                        path: "stakes".to_string(),
                        reason: format!(
                            "validator {v} is not registered at brain {}",
                            stake.brain
                        ),
                    });
                }
            }
            let key = PositionKey {
                account: stake.account.clone(),
                brain: stake.brain,
                validator: stake.validator,
            };
            let entry = state.positions.entry(key).or_insert(TokenAmount::ZERO);
            *entry = entry.checked_add(stake.amount)?;
        }
        for peer in state.peers.values() {
            state.credits.entry(peer.id).or_insert(0.0);
        }
        Ok(state)
    }

    pub fn active_brain_count(&self) -> u32 {
        self.brains.values().filter(|b| b.active).count() as u32
    }

    fn balance_mut(&mut self, account: &str) -> Result<&mut Balances, SimError> {
        self.balances
            .get_mut(account)
            .ok_or_else(|| SimError::UnknownAccount(account.to_string()))
    }

    fn debit_based(&mut self, account: &str, amount: TokenAmount) -> Result<(), SimError> {
        let balance = self.balance_mut(account)?;
        if balance.based < amount {
            return Err(SimError::InsufficientBased {
                account: account.to_string(),
                needed: amount,
                available: balance.based,
            });
        }
        balance.based -= amount;
        Ok(())
    }

    fn credit_based(&mut self, account: &str, amount: TokenAmount) {
        self.balances
            .entry(account.to_string())
            .or_default()
            .based += amount;
    }

    fn debit_pepecoin(&mut self, account: &str, amount: TokenAmount) -> Result<(), SimError> {
        let balance = self.balance_mut(account)?;
        if balance.pepecoin < amount {
            return Err(SimError::InsufficientPepecoin {
                account: account.to_string(),
                needed: amount,
                available: balance.pepecoin,
            });
        }
        balance.pepecoin -= amount;
        Ok(())
    }

    fn next_brain_id(&self) -> Option<BrainId> {
        (0..defaults::MAX_BRAINS)
            .find(|id| !defaults::RESERVED_BRAIN_IDS.contains(id) && !self.brains.contains_key(id))
    }

    fn brain(&self, id: BrainId) -> Result<&Brain, SimError> {
        self.brains.get(&id).ok_or(SimError::UnknownBrain(id))
    }

    fn active_brain_mut(&mut self, id: BrainId) -> Result<&mut Brain, SimError> {
        let brain = self.brains.get_mut(&id).ok_or(SimError::UnknownBrain(id))?;
        if !brain.active {
            return Err(SimError::BrainInactive(id));
        }
        Ok(brain)
    }

    /// Acquires a new Brain by burning Pepecoin (price rises 200 per prior
    /// burn) or by locking 100,000 Pepecoin for 90 days of blocks.
    pub fn acquire_brain(
        &mut self,
        method: AcquisitionMethod,
        account: &str,
    ) -> Result<(BrainId, EventKind), SimError> {
        let active = self.active_brain_count();
        if active >= defaults::MAX_BRAINS {
            return Err(SimError::SupplyExhausted(active));
        }
        if !self.balances.contains_key(account) {
            return Err(SimError::UnknownAccount(account.to_string()));
        }
        let id = self.next_brain_id().ok_or(SimError::NoBrainIdAvailable)?;
        let cost = match method {
            AcquisitionMethod::Burn => econ::burn_cost(self.burn_issued)?,
            AcquisitionMethod::StakedPepecoin => {
                TokenAmount::from_tokens(defaults::STAKE_METHOD_PEPECOIN)
            }
        };
        self.debit_pepecoin(account, cost)?;
        let mut brain = Brain {
            id,
            owner: account.to_string(),
            acquisition: method,
            active: true,
            registration_fee: defaults::registration_fee(),
            memorize_fee: defaults::memorize_fee(),
            owner_fraction: defaults::OWNER_FRACTION,
            validator_share: defaults::VALIDATOR_SHARE,
            performance: PerformanceSeries::default(),
            current_performance: 1.0,
            memorized: BTreeSet::new(),
            validators: BTreeSet::new(),
            miners: BTreeSet::new(),
            locked_pepecoin: TokenAmount::ZERO,
            lock_until_block: None,
            default_weight: 1.0,
            weight_edges: BTreeMap::new(),
        };
        match method {
            AcquisitionMethod::Burn => {
                self.burn_issued += 1;
                self.pepecoin_burned = self.pepecoin_burned.checked_add(cost)?;
            }
            AcquisitionMethod::StakedPepecoin => {
                brain.locked_pepecoin = cost;
                brain.lock_until_block = Some(self.block_height + defaults::STAKE_LOCK_BLOCKS);
            }
        }
        self.brains.insert(id, brain);
        Ok((
            id,
            EventKind::BrainAcquired {
                brain: id,
                account: account.to_string(),
                method,
                cost,
            },
        ))
    }

    /// Returns staked Pepecoin and frees the supply slot. Only stake-method
    /// brains past their lock can deactivate.
    pub fn deactivate_brain(&mut self, brain_id: BrainId) -> Result<EventKind, SimError> {
        let height = self.block_height;
        let brain = self.brains.get_mut(&brain_id).ok_or(SimError::UnknownBrain(brain_id))?;
        if !brain.active {
            return Err(SimError::BrainInactive(brain_id));
        }
        if brain.acquisition != AcquisitionMethod::StakedPepecoin {
            return Err(SimError::NotDeactivatable(brain_id));
        }
        let until = brain.lock_until_block.unwrap_or(0);
        if height < until {
            return Err(SimError::LockActive {
                brain: brain_id,
                until,
            });
        }
        let refund = brain.locked_pepecoin;
        brain.locked_pepecoin = TokenAmount::ZERO;
        brain.active = false;
        let owner = brain.owner.clone();
        self.balances.entry(owner).or_default().pepecoin += refund;
        Ok(EventKind::BrainDeactivated {
            brain: brain_id,
            refunded: refund,
        })
    }

    /// Permanent-memory registration of a peer address at a Brain; may carry
    /// an owner-configured fee. Atomic: on error the state is unchanged.
    pub fn memorize(&mut self, brain_id: BrainId, peer_id: PeerId) -> Result<EventKind, SimError> {
        let peer_account = self
            .peers
            .get(&peer_id)
            .ok_or(SimError::UnknownPeer(peer_id))?
            .account
            .clone();
        let brain = self.active_brain_mut(brain_id)?;
        if brain.memorized.contains(&peer_id) {
            return Err(SimError::AlreadyMemorized {
                brain: brain_id,
                peer: peer_id,
            });
        }
        let fee = brain.memorize_fee;
        let owner = brain.owner.clone();
        self.debit_based(&peer_account, fee)?;
        self.credit_based(&owner, fee);
        self.brains
            .get_mut(&brain_id)
            .expect("checked")
            .memorized
            .insert(peer_id);
        self.credits.entry(peer_id).or_insert(0.0);
        Ok(EventKind::PeerMemorized {
            brain: brain_id,
            peer: peer_id,
            fee,
        })
    }

    /// Registers a memorized peer into a role slot, paying the current
    /// registration fee to the owner. Fee changes after registration do not
    /// affect peers already in (they are grandfathered).
    pub fn register_peer(
        &mut self,
        brain_id: BrainId,
        peer_id: PeerId,
        role: PeerRole,
    ) -> Result<EventKind, SimError> {
        let peer = self.peers.get(&peer_id).ok_or(SimError::UnknownPeer(peer_id))?;
        if peer.role != role {
            return Err(SimError::RoleMismatch {
                peer: peer_id,
                requested: role,
                actual: peer.role,
            });
        }
        let peer_account = peer.account.clone();
        let brain = self.active_brain_mut(brain_id)?;
        if !brain.memorized.contains(&peer_id) {
            return Err(SimError::NotMemorized {
                brain: brain_id,
                peer: peer_id,
            });
        }
        if brain.validators.contains(&peer_id) || brain.miners.contains(&peer_id) {
            return Err(SimError::AlreadyRegistered {
                brain: brain_id,
                peer: peer_id,
            });
        }
        let (occupied, cap) = match role {
            PeerRole::Validator => (brain.validators.len(), defaults::MAX_VALIDATORS),
            PeerRole::Miner => (brain.miners.len(), defaults::MAX_MINERS),
        };
        if occupied >= cap {
            return Err(SimError::CapacityFull {
                brain: brain_id,
                role,
            });
        }
        let fee = brain.registration_fee;
        let owner = brain.owner.clone();
        self.debit_based(&peer_account, fee)?;
        self.credit_based(&owner, fee);
        let brain = self.brains.get_mut(&brain_id).expect("checked");
        match role {
            PeerRole::Validator => brain.validators.insert(peer_id),
            PeerRole::Miner => brain.miners.insert(peer_id),
        };
        Ok(EventKind::PeerRegistered {
            brain: brain_id,
            peer: peer_id,
            role,
            fee,
        })
    }

    /// Stakes $BASED to a Brain, optionally targeting one of its registered
    /// validators.
    pub fn stake(
        &mut self,
        account: &str,
        brain_id: BrainId,
        validator: Option<PeerId>,
        amount: TokenAmount,
    ) -> Result<EventKind, SimError> {
        if amount.is_zero() {
            return Err(SimError::ZeroAmount);
        }
        let brain = self.brain(brain_id)?;
        if !brain.active {
            return Err(SimError::BrainInactive(brain_id));
        }
        if let Some(v) = validator {
            if !brain.validators.contains(&v) {
                return Err(SimError::NotAValidator {
                    brain: brain_id,
                    peer: v,
                });
            }
        }
        self.debit_based(account, amount)?;
        let key = PositionKey {
            account: account.to_string(),
            brain: brain_id,
            validator,
        };
        let entry = self.positions.entry(key).or_insert(TokenAmount::ZERO);
        *entry = entry.checked_add(amount)?;
        Ok(EventKind::Staked {
            account: account.to_string(),
            brain: brain_id,
            validator,
            amount,
        })
    }

    /// Withdraws part or all of a stake position back to the account.
    pub fn unstake(
        &mut self,
        account: &str,
        brain_id: BrainId,
        validator: Option<PeerId>,
        amount: TokenAmount,
    ) -> Result<EventKind, SimError> {
        if amount.is_zero() {
            return Err(SimError::ZeroAmount);
        }
        let key = PositionKey {
            account: account.to_string(),
            brain: brain_id,
            validator,
        };
        let held = self.positions.get(&key).copied().unwrap_or(TokenAmount::ZERO);
        if held < amount {
            return Err(SimError::InsufficientPosition {
                needed: amount,
                available: held,
            });
        }
        if held == amount {
            self.positions.remove(&key);
        } else {
            self.positions.insert(key, held - amount);
        }
        self.credit_based(account, amount);
        Ok(EventKind::Unstaked {
            account: account.to_string(),
            brain: brain_id,
            validator,
            amount,
        })
    }

    pub fn set_registration_fee(
        &mut self,
        brain_id: BrainId,
        fee: TokenAmount,
    ) -> Result<EventKind, SimError> {
        self.active_brain_mut(brain_id)?.registration_fee = fee;
        Ok(EventKind::RegistrationFeeSet {
            brain: brain_id,
            fee,
        })
    }

    pub fn set_memorize_fee(
        &mut self,
        brain_id: BrainId,
        fee: TokenAmount,
    ) -> Result<EventKind, SimError> {
        self.active_brain_mut(brain_id)?.memorize_fee = fee;
        Ok(EventKind::MemorizeFeeSet { brain: brain_id, fee })
    }

    pub fn set_performance(&mut self, brain_id: BrainId, value: f64) -> Result<EventKind, SimError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(SimError::InvalidConfig {
                path: "performance".to_string(),
                reason: format!("{value} outside [0,1]"),
            });
        }
        let brain = self.active_brain_mut(brain_id)?;
        brain.performance = PerformanceSeries::Constant(value);
        brain.current_performance = value;
        Ok(EventKind::PerformanceSet {
            brain: brain_id,
            value,
        })
    }

    /// Total $BASED staked to a brain (all positions).
    pub fn brain_stake(&self, brain_id: BrainId) -> TokenAmount {
        self.positions
            .iter()
            .filter(|(key, _)| key.brain == brain_id)
            .map(|(_, &amount)| amount)
            .sum()
    }

    /// Total $BASED staked network-wide.
    pub fn total_stake(&self) -> TokenAmount {
        self.positions.values().copied().sum()
    }

    /// Brains holding at least 0.5% of the total network stake. Each carries
    /// exactly one governance vote no matter how far past the threshold it
    /// is.
    pub fn gigabrain_set(&self) -> Vec<BrainId> {
        let mut totals: BTreeMap<BrainId, u128> = BTreeMap::new();
        let mut network: u128 = 0;
        for (key, &amount) in &self.positions {
            if self.brains.get(&key.brain).map(|b| b.active) != Some(true) {
                continue;
            }
            *totals.entry(key.brain).or_insert(0) += amount.base_units() as u128;
            network += amount.base_units() as u128;
        }
        if network == 0 {
            return Vec::new();
        }
        totals
            .into_iter()
            .filter(|&(_, stake)| {
                stake * defaults::GIGABRAIN_DEN as u128 >= network * defaults::GIGABRAIN_NUM as u128
            })
            .map(|(brain, _)| brain)
            .collect()
    }

    /// Tallies a governance vote. Proposals pass by default; they fail only
    /// when strictly more than half of the GigaBrains vote down. Ballots
    /// from non-GigaBrains are rejected and reported.
    pub fn vote(&self, ballots: &BTreeMap<BrainId, BallotChoice>) -> VoteReport {
        let gigabrains: BTreeSet<BrainId> = self.gigabrain_set().into_iter().collect();
        let mut down = 0usize;
        let mut rejected = Vec::new();
        for (&brain, &choice) in ballots {
            if !gigabrains.contains(&brain) {
                rejected.push(brain);
                continue;
            }
            if choice == BallotChoice::Down {
                down += 1;
            }
        }
        let outcome = if down * 2 > gigabrains.len() {
            VoteOutcome::Fail
        } else {
            VoteOutcome::Pass
        };
        VoteReport {
            outcome,
            gigabrains: gigabrains.len(),
            down_votes: down,
            rejected_ballots: rejected,
        }
    }

    /// SHA-256 over the canonical JSON serialization of the state.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("state serializes");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let out = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in out {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}
