//! The block-stepping simulation loop.
//!
//! Per block, in a fixed order: mint the emission, allocate it across brains
//! (stake capped at 0.5% of aggregate, weighted by performance), split each
//! brain's allocation between owner and nodes, pay the node pools to active
//! validators and miners by incentive weight, accrue credits, then apply the
//! actions queued for the block in scenario order.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::consensus::{self, BetaSchedule, IncentiveParams, StakeVector, WeightMatrix};
use crate::econ::{self, BrainStakeProfile, EmissionSchedule};
use crate::token::{apportion, TokenAmount};

use super::config::{Action, NetworkConfig};
use super::events::{Event, EventKind};
use super::{AccountId, BrainId, NetworkState, PeerId, SimError};

/// Per-brain totals for one closed (or partial) year.
#[derive(Debug, Clone, Serialize)]
pub struct YearSummaryRow {
    pub year: u64,
    pub minted: TokenAmount,
    pub distributed: TokenAmount,
    pub withheld: TokenAmount,
    pub brain: BrainId,
    pub reward_total: TokenAmount,
    pub owner_reward: TokenAmount,
    pub validator_rewards: TokenAmount,
    pub miner_rewards: TokenAmount,
    pub staker_rewards: TokenAmount,
    pub stake_start: TokenAmount,
    pub stake_end: TokenAmount,
    /// Staker rewards over starting stake, when a starting stake existed.
    pub realized_apy: Option<f64>,
    pub gigabrain: bool,
    pub consensus_peers: Vec<PeerId>,
}

/// Credit balance of one peer at a year boundary.
#[derive(Debug, Clone, Serialize)]
pub struct CreditsRow {
    pub year: u64,
    pub peer: PeerId,
    pub credits: f64,
}

#[derive(Debug, Clone, Default)]
struct BrainYearAccumulator {
    reward_total: TokenAmount,
    owner: TokenAmount,
    validators: TokenAmount,
    miners: TokenAmount,
    stakers: TokenAmount,
}

/// A deterministic scenario run: owns the state, the event log, and the
/// pending action queue.
pub struct Simulation {
    state: NetworkState,
    emission: EmissionSchedule,
    beta: BetaSchedule,
    lambda: f64,
    tft_accuracy: f64,
    bonus_pool_fraction: f64,
    record_rewards: bool,
    pending: BTreeMap<u64, Vec<Action>>,
    events: Vec<Event>,
    year_acc: BTreeMap<BrainId, BrainYearAccumulator>,
    year_start_minted: TokenAmount,
    year_start_distributed: TokenAmount,
    year_start_withheld: TokenAmount,
    year_start_stakes: BTreeMap<BrainId, TokenAmount>,
    /// Block height through which year summaries have been emitted.
    year_closed_through: u64,
    summaries: Vec<YearSummaryRow>,
    credit_rows: Vec<CreditsRow>,
}

impl Simulation {
    pub fn new(config: &NetworkConfig) -> Result<Self, SimError> {
        let state = NetworkState::new(config)?;
        let mut pending: BTreeMap<u64, Vec<Action>> = BTreeMap::new();
        for timed in &config.actions {
            pending
                .entry(timed.block)
                .or_default()
                .push(timed.action.clone());
        }
        let year_start_stakes = state
            .brains
            .keys()
            .map(|&id| (id, state.brain_stake(id)))
            .collect();
        Ok(Simulation {
            state,
            emission: config.emission.clone().unwrap_or_default(),
            beta: BetaSchedule {
                mode: config.beta_mode,
                ..Default::default()
            },
            lambda: config.lambda,
            tft_accuracy: config.tft_accuracy,
            bonus_pool_fraction: config.bonus_pool_fraction,
            record_rewards: config.record_rewards,
            pending,
            events: Vec::new(),
            year_acc: BTreeMap::new(),
            year_start_minted: TokenAmount::ZERO,
            year_start_distributed: TokenAmount::ZERO,
            year_start_withheld: TokenAmount::ZERO,
            year_start_stakes,
            year_closed_through: 0,
            summaries: Vec::new(),
            credit_rows: Vec::new(),
        })
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut NetworkState {
        &mut self.state
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn summaries(&self) -> &[YearSummaryRow] {
        &self.summaries
    }

    pub fn credit_rows(&self) -> &[CreditsRow] {
        &self.credit_rows
    }

    pub fn emission_schedule(&self) -> &EmissionSchedule {
        &self.emission
    }

    fn log(&mut self, kind: EventKind) {
        self.events.push(Event {
            block: self.state.block_height,
            kind,
        });
    }

    /// Queue an action for a future block (actions apply at the end of their
    /// block, after rewards).
    pub fn enqueue(&mut self, block: u64, action: Action) {
        self.pending.entry(block).or_default().push(action);
    }

    /// Applies one action immediately, logging the outcome. Rejected actions
    /// leave the state unchanged and produce an `action_rejected` event.
    pub fn apply_action(&mut self, action: &Action) {
        let result: Result<EventKind, SimError> = match action {
            Action::AcquireBrain { account, method } => self
                .state
                .acquire_brain(*method, account)
                .map(|(_, event)| event),
            Action::DeactivateBrain { brain } => self.state.deactivate_brain(*brain),
            Action::Memorize { brain, peer } => self.state.memorize(*brain, *peer),
            Action::RegisterPeer { brain, peer, role } => {
                self.state.register_peer(*brain, *peer, *role)
            }
            Action::Stake {
                account,
                brain,
                validator,
                amount,
            } => self.state.stake(account, *brain, *validator, *amount),
            Action::Unstake {
                account,
                brain,
                validator,
                amount,
            } => self.state.unstake(account, *brain, *validator, *amount),
            Action::SetRegistrationFee { brain, fee } => {
                self.state.set_registration_fee(*brain, *fee)
            }
            Action::SetMemorizeFee { brain, fee } => self.state.set_memorize_fee(*brain, *fee),
            Action::SetPerformance { brain, value } => self.state.set_performance(*brain, *value),
            Action::Vote { proposal, ballots } => {
                let report = self.state.vote(ballots);
                Ok(EventKind::VoteHeld {
                    proposal: proposal.clone(),
                    outcome: report.outcome,
                    gigabrains: report.gigabrains,
                    down_votes: report.down_votes,
                    rejected_ballots: report.rejected_ballots,
                })
            }
        };
        match result {
            Ok(event) => self.log(event),
            Err(error) => self.log(EventKind::ActionRejected {
                description: action.describe(),
                reason: error.to_string(),
            }),
        }
    }

    /// Advances the simulation by one block.
    pub fn step_block(&mut self) {
        let height = self.state.block_height;
        let year = self.emission.year_of_block(height);

        // Refresh per-brain performance from the year series.
        for brain in self.state.brains.values_mut() {
            brain.current_performance = brain.performance.at_year(year);
        }

        let minted = self.emission.emission_at_block(height);
        self.state.minted = self
            .state
            .minted
            .checked_add(minted)
            .expect("supply fits u64");
        if self.record_rewards && !minted.is_zero() {
            self.log(EventKind::Emission { minted });
        }

        let index = self.stake_index();
        self.distribute_emission(minted, &index);
        self.accrue_credits(&index);

        if let Some(actions) = self.pending.remove(&height) {
            for action in actions {
                self.apply_action(&action);
            }
        }

        debug_assert_eq!(
            self.state.minted,
            self.state
                .distributed
                .checked_add(self.state.withheld)
                .expect("fits"),
            "conservation broken at block {height}"
        );

        self.state.block_height += 1;
        if self.state.block_height % self.emission.blocks_per_year == 0 {
            self.close_year(year);
        }
    }

    /// Steps until `target` blocks have been simulated in total.
    pub fn run_to_block(&mut self, target: u64) {
        while self.state.block_height < target {
            self.step_block();
        }
        // A partial year at the end still gets a summary.
        if self.state.block_height > self.year_closed_through {
            let year = self
                .emission
                .year_of_block(self.state.block_height.saturating_sub(1));
            self.close_year(year);
        }
    }

    pub fn digest(&self) -> String {
        self.state.digest()
    }

    fn withhold(&mut self, amount: TokenAmount, reason: &str) {
        if amount.is_zero() {
            return;
        }
        self.state.withheld = self.state.withheld.checked_add(amount).expect("fits");
        if self.record_rewards {
            self.log(EventKind::Withheld {
                amount,
                reason: reason.to_string(),
            });
        }
    }

    /// Stake index for one block: per-brain totals, per-(brain, validator)
    /// totals, and staker positions per validator.
    fn stake_index(&self) -> StakeIndex {
        let mut index = StakeIndex::default();
        for (key, &amount) in &self.state.positions {
            let active = self
                .state
                .brains
                .get(&key.brain)
                .map(|b| b.active)
                .unwrap_or(false);
            if !active {
                continue;
            }
            *index.brain_totals.entry(key.brain).or_insert(TokenAmount::ZERO) += amount;
            if let Some(v) = key.validator {
                *index
                    .validator_totals
                    .entry((key.brain, v))
                    .or_insert(TokenAmount::ZERO) += amount;
                index
                    .validator_stakers
                    .entry((key.brain, v))
                    .or_default()
                    .push((key.account.clone(), amount));
            } else {
                *index
                    .untargeted(key.brain) += amount;
            }
        }
        index
    }

    fn distribute_emission(&mut self, minted: TokenAmount, index: &StakeIndex) {
        if minted.is_zero() {
            return;
        }
        let profiles: Vec<BrainStakeProfile> = self
            .state
            .brains
            .values()
            .filter(|b| b.active)
            .map(|b| BrainStakeProfile {
                brain_id: b.id,
                total_stake: index
                    .brain_totals
                    .get(&b.id)
                    .copied()
                    .unwrap_or(TokenAmount::ZERO),
                performance: b.current_performance,
                owner_fraction: b.owner_fraction,
            })
            .collect();
        if profiles.is_empty() {
            self.withhold(minted, "no active brains");
            return;
        }
        let aggregate: TokenAmount = index.brain_totals.values().copied().sum();
        let cap = econ::stake_cap(aggregate);
        let allocations = match econ::distribute_block_reward(
            &profiles,
            minted,
            self.bonus_pool_fraction,
            Some(cap),
        ) {
            Ok(allocations) => allocations,
            Err(_) => {
                self.withhold(minted, "no stake-weighted recipients");
                return;
            }
        };
        for (profile, allocation) in profiles.iter().zip(allocations) {
            if allocation.is_zero() {
                continue;
            }
            self.pay_brain(profile.brain_id, allocation, index);
        }
    }

    fn pay_brain(&mut self, brain_id: BrainId, allocation: TokenAmount, index: &StakeIndex) {
        let brain = self.state.brains.get(&brain_id).expect("profiled");
        let owner = brain.owner.clone();
        let owner_fraction = brain.owner_fraction;
        let validator_share = brain.validator_share;
        let peer_order = brain.peer_order();
        let validators: Vec<PeerId> = brain.validators.iter().copied().collect();
        let miners: Vec<PeerId> = brain.miners.iter().copied().collect();

        let (node_pool, owner_reward) =
            econ::split_reward(allocation, owner_fraction).expect("validated fraction");
        self.state.credit_based(&owner, owner_reward);
        self.state.distributed = self
            .state
            .distributed
            .checked_add(owner_reward)
            .expect("fits");
        let acc = self.year_acc.entry(brain_id).or_default();
        acc.reward_total += allocation;
        acc.owner += owner_reward;

        if node_pool.is_zero() {
            return;
        }
        if peer_order.is_empty() {
            self.withhold(node_pool, "brain has no registered peers");
            return;
        }

        let validator_pool = node_pool
            .mul_frac_floor(validator_share)
            .expect("validated fraction");
        let miner_pool = node_pool - validator_pool;

        let incentive = self.incentive_for(brain_id, &peer_order, index);

        let mut validator_payouts: BTreeMap<PeerId, TokenAmount> = BTreeMap::new();
        let mut staker_payouts: BTreeMap<AccountId, TokenAmount> = BTreeMap::new();
        let mut miner_payouts: BTreeMap<PeerId, TokenAmount> = BTreeMap::new();

        // Validator pool: only validators at or above the 70th stake
        // percentile are active; their incentive weights split the pool.
        if !validator_pool.is_zero() {
            if validators.is_empty() {
                self.withhold(validator_pool, "no validators registered");
            } else {
                let stakes: Vec<TokenAmount> = validators
                    .iter()
                    .map(|v| {
                        index
                            .validator_totals
                            .get(&(brain_id, *v))
                            .copied()
                            .unwrap_or(TokenAmount::ZERO)
                    })
                    .collect();
                let active = econ::active_validators(&stakes).expect("non-empty");
                let mut weights: Vec<f64> = validators
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        if active.contains(&i) {
                            let peer_idx =
                                peer_order.iter().position(|p| p == v).expect("ordered");
                            incentive[peer_idx]
                        } else {
                            0.0
                        }
                    })
                    .collect();
                // No incentive signal: the pool still divides equally among
                // the active validators.
                if weights.iter().all(|&w| w == 0.0) {
                    for &i in &active {
                        weights[i] = 1.0;
                    }
                }
                let parts = apportion(validator_pool, &weights).expect("active set non-empty");
                for (v, part) in validators.iter().zip(parts) {
                    if part.is_zero() {
                        continue;
                    }
                    validator_payouts.insert(*v, part);
                    self.pay_validator_share(brain_id, *v, part, index, &mut staker_payouts);
                }
            }
        }

        // Miner pool: incentive weights across the brain's miners.
        if !miner_pool.is_zero() {
            if miners.is_empty() {
                self.withhold(miner_pool, "no miners registered");
            } else {
                let mut weights: Vec<f64> = miners
                    .iter()
                    .map(|m| {
                        let peer_idx = peer_order.iter().position(|p| p == m).expect("ordered");
                        incentive[peer_idx]
                    })
                    .collect();
                if weights.iter().all(|&w| w == 0.0) {
                    weights = vec![1.0; miners.len()];
                }
                let parts = apportion(miner_pool, &weights).expect("miners non-empty");
                for (m, part) in miners.iter().zip(parts) {
                    if part.is_zero() {
                        continue;
                    }
                    let account = self.state.peers[m].account.clone();
                    self.state.credit_based(&account, part);
                    self.state.distributed =
                        self.state.distributed.checked_add(part).expect("fits");
                    miner_payouts.insert(*m, part);
                }
            }
        }

        let validator_total: TokenAmount = validator_payouts.values().copied().sum();
        let miner_total: TokenAmount = miner_payouts.values().copied().sum();
        let staker_total: TokenAmount = staker_payouts.values().copied().sum();
        let acc = self.year_acc.entry(brain_id).or_default();
        acc.validators += validator_total;
        acc.miners += miner_total;
        acc.stakers += staker_total;

        if self.record_rewards {
            let owner_amount = owner_reward;
            self.log(EventKind::BrainReward {
                brain: brain_id,
                total: allocation,
                owner: owner_amount,
                validator_pool,
                miner_pool,
                validators: validator_payouts,
                miners: miner_payouts,
                stakers: staker_payouts,
            });
        }
    }

    /// A validator's slice goes pro-rata to its stakers; with no stakers the
    /// validator's own account keeps it.
    fn pay_validator_share(
        &mut self,
        brain_id: BrainId,
        validator: PeerId,
        amount: TokenAmount,
        index: &StakeIndex,
        staker_payouts: &mut BTreeMap<AccountId, TokenAmount>,
    ) {
        let stakers = index
            .validator_stakers
            .get(&(brain_id, validator))
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        if stakers.is_empty() {
            let account = self.state.peers[&validator].account.clone();
            self.state.credit_based(&account, amount);
            self.state.distributed = self.state.distributed.checked_add(amount).expect("fits");
            return;
        }
        let weights: Vec<f64> = stakers
            .iter()
            .map(|(_, stake)| stake.base_units() as f64)
            .collect();
        let parts = apportion(amount, &weights).expect("staker stakes are positive");
        for ((account, _), part) in stakers.iter().zip(parts) {
            if part.is_zero() {
                continue;
            }
            self.state.credit_based(account, part);
            self.state.distributed = self.state.distributed.checked_add(part).expect("fits");
            *staker_payouts
                .entry(account.clone())
                .or_insert(TokenAmount::ZERO) += part;
        }
    }

    /// Incentive weights over a brain's peers: stake share times the sigmoid
    /// consensus multiplier, plus the enforcer term.
    fn incentive_for(&self, brain_id: BrainId, peer_order: &[PeerId], index: &StakeIndex) -> Vec<f64> {
        let brain = &self.state.brains[&brain_id];
        let n = peer_order.len();
        let weights = self.brain_weight_matrix(brain, peer_order);
        let stakes = Self::peer_stake_vector(brain_id, peer_order, index);
        let params = IncentiveParams {
            lambda: self.lambda,
            tft_accuracy: self.tft_accuracy,
            beta: self.beta.clone(),
        };
        let t_years = self.state.block_height as f64 / self.beta.blocks_per_year as f64;
        let stake_vector = StakeVector::new(stakes).expect("non-negative stakes");
        consensus::incentive_weights(&weights, &stake_vector, &params, t_years, None)
            .unwrap_or_else(|_| vec![1.0 / n as f64; n])
    }

    fn brain_weight_matrix(&self, brain: &super::Brain, peer_order: &[PeerId]) -> WeightMatrix {
        let n = peer_order.len();
        let mut w = WeightMatrix::zeros(n);
        for (i, &from) in peer_order.iter().enumerate() {
            for (j, &to) in peer_order.iter().enumerate() {
                if i != j {
                    w.set(i, j, brain.weight_between(from, to)).expect("validated");
                }
            }
        }
        w
    }

    /// Per-peer stake fractions inside one brain: validator-targeted stake
    /// accrues to the targeted validator; brain-level stake backs every
    /// registered peer equally. Falls back to uniform when nothing is staked.
    fn peer_stake_vector(brain_id: BrainId, peer_order: &[PeerId], index: &StakeIndex) -> Vec<f64> {
        let n = peer_order.len();
        let untargeted = index
            .untargeted_totals
            .get(&brain_id)
            .copied()
            .unwrap_or(TokenAmount::ZERO)
            .as_tokens_f64();
        let mut stakes: Vec<f64> = peer_order
            .iter()
            .map(|&peer| {
                index
                    .validator_totals
                    .get(&(brain_id, peer))
                    .copied()
                    .unwrap_or(TokenAmount::ZERO)
                    .as_tokens_f64()
                    + untargeted / n as f64
            })
            .collect();
        if stakes.iter().sum::<f64>() <= 0.0 {
            stakes = vec![1.0; n];
        }
        stakes
    }

    fn accrue_credits(&mut self, index: &StakeIndex) {
        let brain_ids: Vec<BrainId> = self
            .state
            .brains
            .values()
            .filter(|b| b.active && !(b.validators.is_empty() && b.miners.is_empty()))
            .map(|b| b.id)
            .collect();
        for brain_id in brain_ids {
            let brain = &self.state.brains[&brain_id];
            let peer_order = brain.peer_order();
            let weights = self.brain_weight_matrix(brain, &peer_order);
            let raw = Self::peer_stake_vector(brain_id, &peer_order, index);
            let total: f64 = raw.iter().sum();
            let shares: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let stake_vector = StakeVector::new(shares).expect("normalized");
            let delta = consensus::credits_update(&weights, &stake_vector).expect("square");
            let mut deltas = BTreeMap::new();
            for (&peer, &d) in peer_order.iter().zip(&delta) {
                if d != 0.0 {
                    *self.state.credits.entry(peer).or_insert(0.0) += d;
                    deltas.insert(peer, d);
                }
            }
            if self.record_rewards && !deltas.is_empty() {
                self.log(EventKind::CreditsAccrued {
                    brain: brain_id,
                    deltas,
                });
            }
        }
    }

    fn close_year(&mut self, year: u64) {
        let minted_this_year = self.state.minted - self.year_start_minted;
        let distributed_this_year = self.state.distributed - self.year_start_distributed;
        let withheld_this_year = self.state.withheld - self.year_start_withheld;
        self.log(EventKind::YearClosed {
            year,
            minted: minted_this_year,
            distributed: distributed_this_year,
            withheld: withheld_this_year,
        });

        let gigabrains: Vec<BrainId> = self.state.gigabrain_set();
        let index = self.stake_index();
        let brain_ids: Vec<BrainId> = self.state.brains.keys().copied().collect();
        for brain_id in brain_ids {
            let acc = self.year_acc.get(&brain_id).cloned().unwrap_or_default();
            let stake_start = self
                .year_start_stakes
                .get(&brain_id)
                .copied()
                .unwrap_or(TokenAmount::ZERO);
            let stake_end = self.state.brain_stake(brain_id);
            let realized_apy = if stake_start.is_zero() {
                None
            } else {
                Some(acc.stakers.as_tokens_f64() / stake_start.as_tokens_f64())
            };
            let brain = &self.state.brains[&brain_id];
            let consensus_peers = if brain.active {
                let peer_order = brain.peer_order();
                if peer_order.is_empty() {
                    Vec::new()
                } else {
                    let weights = self.brain_weight_matrix(brain, &peer_order);
                    let trust = consensus::trust_from_weights(&weights);
                    let raw = Self::peer_stake_vector(brain_id, &peer_order, &index);
                    let stake_vector = StakeVector::new(raw).expect("non-negative");
                    match consensus::consensus_set(&trust, &stake_vector) {
                        Ok(set) => peer_order
                            .iter()
                            .zip(set)
                            .filter(|(_, in_set)| *in_set)
                            .map(|(&peer, _)| peer)
                            .collect(),
                        Err(_) => Vec::new(),
                    }
                }
            } else {
                Vec::new()
            };
            self.summaries.push(YearSummaryRow {
                year,
                minted: minted_this_year,
                distributed: distributed_this_year,
                withheld: withheld_this_year,
                brain: brain_id,
                reward_total: acc.reward_total,
                owner_reward: acc.owner,
                validator_rewards: acc.validators,
                miner_rewards: acc.miners,
                staker_rewards: acc.stakers,
                stake_start,
                stake_end,
                realized_apy,
                gigabrain: gigabrains.contains(&brain_id),
                consensus_peers,
            });
        }
        for (&peer, &credits) in &self.state.credits {
            self.credit_rows.push(CreditsRow {
                year,
                peer,
                credits,
            });
        }

        self.year_acc.clear();
        self.year_closed_through = self.state.block_height;
        self.year_start_minted = self.state.minted;
        self.year_start_distributed = self.state.distributed;
        self.year_start_withheld = self.state.withheld;
        self.year_start_stakes = self
            .state
            .brains
            .keys()
            .map(|&id| (id, self.state.brain_stake(id)))
            .collect();
    }
}

/// One-pass index over stake positions for a block.
#[derive(Debug, Default)]
struct StakeIndex {
    brain_totals: BTreeMap<BrainId, TokenAmount>,
    validator_totals: BTreeMap<(BrainId, PeerId), TokenAmount>,
    validator_stakers: BTreeMap<(BrainId, PeerId), Vec<(AccountId, TokenAmount)>>,
    untargeted_totals: BTreeMap<BrainId, TokenAmount>,
}

impl StakeIndex {
    fn untargeted(&mut self, brain: BrainId) -> &mut TokenAmount {
        self.untargeted_totals.entry(brain).or_insert(TokenAmount::ZERO)
    }
}
