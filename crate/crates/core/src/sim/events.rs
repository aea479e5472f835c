//! Append-only event log records, exported as JSON lines.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::token::TokenAmount;

use super::config::{AcquisitionMethod, PeerRole};
use super::{AccountId, BrainId, PeerId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VoteOutcome {
    Pass,
    Fail,
}

/// One event log record.
#[derive(Debug, Clone, Serialize)]
pub struct Event {
    pub block: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Emission {
        minted: TokenAmount,
    },
    BrainReward {
        brain: BrainId,
        total: TokenAmount,
        owner: TokenAmount,
        validator_pool: TokenAmount,
        miner_pool: TokenAmount,
        /// Validator share by peer (kept by the validator's account when it
        /// has no stakers).
        validators: BTreeMap<PeerId, TokenAmount>,
        miners: BTreeMap<PeerId, TokenAmount>,
        /// Staker payouts by account, from validator shares.
        stakers: BTreeMap<AccountId, TokenAmount>,
    },
    Withheld {
        amount: TokenAmount,
        reason: String,
    },
    CreditsAccrued {
        brain: BrainId,
        deltas: BTreeMap<PeerId, f64>,
    },
    BrainAcquired {
        brain: BrainId,
        account: AccountId,
        method: AcquisitionMethod,
        cost: TokenAmount,
    },
    BrainDeactivated {
        brain: BrainId,
        refunded: TokenAmount,
    },
    PeerMemorized {
        brain: BrainId,
        peer: PeerId,
        fee: TokenAmount,
    },
    PeerRegistered {
        brain: BrainId,
        peer: PeerId,
        role: PeerRole,
        fee: TokenAmount,
    },
    Staked {
        account: AccountId,
        brain: BrainId,
        validator: Option<PeerId>,
        amount: TokenAmount,
    },
    Unstaked {
        account: AccountId,
        brain: BrainId,
        validator: Option<PeerId>,
        amount: TokenAmount,
    },
    RegistrationFeeSet {
        brain: BrainId,
        fee: TokenAmount,
    },
    MemorizeFeeSet {
        brain: BrainId,
        fee: TokenAmount,
    },
    PerformanceSet {
        brain: BrainId,
        value: f64,
    },
    VoteHeld {
        proposal: String,
        outcome: VoteOutcome,
        gigabrains: usize,
        down_votes: usize,
        rejected_ballots: Vec<BrainId>,
    },
    ActionRejected {
        description: String,
        reason: String,
    },
    YearClosed {
        year: u64,
        minted: TokenAmount,
        distributed: TokenAmount,
        withheld: TokenAmount,
    },
}

impl Event {
    /// Canonical single-line JSON encoding.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }
}
