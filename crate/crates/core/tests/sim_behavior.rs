//! Behavior, safety, and determinism checks for the network simulator.

use std::collections::BTreeMap;

use basedlab_core::defaults;
use basedlab_core::sim::{
    AccountConfig, AcquisitionMethod, Action, BallotChoice, BrainConfig, NetworkConfig,
    NetworkState, PeerConfig, PeerRole, PerformanceSeries, Simulation, StakeConfig, TimedAction,
    VoteOutcome,
};
use basedlab_core::token::TokenAmount;
use basedlab_core::util::SplitMix64;

fn tokens(s: &str) -> TokenAmount {
    s.parse().unwrap()
}

fn base_config() -> NetworkConfig {
    NetworkConfig {
        seed: 7,
        accounts: vec![
            AccountConfig {
                id: "owner".into(),
                based: tokens("100000"),
                pepecoin: tokens("1000000"),
            },
            AccountConfig {
                id: "val".into(),
                based: tokens("5000"),
                pepecoin: TokenAmount::ZERO,
            },
            AccountConfig {
                id: "min".into(),
                based: tokens("5000"),
                pepecoin: TokenAmount::ZERO,
            },
            AccountConfig {
                id: "staker".into(),
                based: tokens("50000"),
                pepecoin: tokens("500000"),
            },
        ],
        brains: vec![BrainConfig {
            id: 10,
            owner: "owner".into(),
            acquisition: AcquisitionMethod::Burn,
            registration_fee: tokens("100"),
            memorize_fee: TokenAmount::ZERO,
            owner_fraction: 0.25,
            validator_share: 0.5,
            performance: PerformanceSeries::Constant(1.0),
            default_weight: 1.0,
            weights: vec![],
        }],
        peers: vec![
            PeerConfig {
                id: 1,
                account: "val".into(),
                role: PeerRole::Validator,
                memorized: vec![],
                registered: vec![10],
                history: vec![],
            },
            PeerConfig {
                id: 2,
                account: "min".into(),
                role: PeerRole::Miner,
                memorized: vec![],
                registered: vec![10],
                history: vec![],
            },
        ],
        stakes: vec![StakeConfig {
            account: "staker".into(),
            brain: 10,
            validator: Some(1),
            amount: tokens("10000"),
        }],
        ..Default::default()
    }
}

#[test]
fn genesis_is_deterministic() {
    let config = base_config();
    let a = NetworkState::new(&config).unwrap();
    let b = NetworkState::new(&config).unwrap();
    assert_eq!(a.digest(), b.digest());
}

#[test]
fn config_rejects_duplicate_and_oversized_declarations() {
    let mut config = base_config();
    config.brains.push(config.brains[0].clone());
    let err = NetworkState::new(&config).unwrap_err().to_string();
    assert!(err.contains("brains[1].id"), "got {err}");

    let mut config = base_config();
    config.brains = (0..1025)
        .map(|i| BrainConfig {
            id: i as u32,
            owner: "owner".into(),
            acquisition: AcquisitionMethod::Burn,
            registration_fee: tokens("100"),
            memorize_fee: TokenAmount::ZERO,
            owner_fraction: 0.25,
            validator_share: 0.5,
            performance: PerformanceSeries::Constant(1.0),
            default_weight: 1.0,
            weights: vec![],
        })
        .collect();
    let err = NetworkState::new(&config).unwrap_err().to_string();
    assert!(err.contains("caps at 1024"), "got {err}");

    let mut config = base_config();
    config.stakes[0].account = "nobody".into();
    let err = NetworkState::new(&config).unwrap_err().to_string();
    assert!(err.contains("stakes[0].account"), "got {err}");
}

#[test]
fn first_block_pays_owner_quarter_and_nodes_rest() {
    let mut sim = Simulation::new(&base_config()).unwrap();
    sim.step_block();
    let state = sim.state();
    // 10 minted: 2.5 to the owner, 7.5 to nodes (3.75 validator side going
    // to the sole staker, 3.75 to the miner).
    assert_eq!(state.minted, tokens("10"));
    assert_eq!(state.distributed, tokens("10"));
    assert_eq!(state.withheld, TokenAmount::ZERO);
    assert_eq!(state.balances["owner"].based, tokens("100002.5"));
    // Genesis stake positions are endowments on top of the configured
    // balances, so the staker keeps its 50,000 and earns the validator side.
    assert_eq!(state.balances["staker"].based, tokens("50003.75"));
    assert_eq!(state.balances["min"].based, tokens("5003.75"));
    // The validator itself holds no stakers' slice.
    assert_eq!(state.balances["val"].based, tokens("5000"));
}

#[test]
fn zero_stake_network_withholds_emission() {
    let mut config = base_config();
    config.stakes.clear();
    let mut sim = Simulation::new(&config).unwrap();
    sim.step_block();
    let state = sim.state();
    assert_eq!(state.minted, tokens("10"));
    assert_eq!(state.distributed, TokenAmount::ZERO);
    assert_eq!(state.withheld, tokens("10"));
}

#[test]
fn burn_acquisition_follows_price_curve_and_destroys_pepecoin() {
    let config = base_config();
    let mut sim = Simulation::new(&config).unwrap();
    // One burn brain exists from genesis, so the next burn costs 1,200.
    let before = sim.state().balances["staker"].pepecoin;
    let (id, _) = sim
        .state_mut()
        .acquire_brain(AcquisitionMethod::Burn, "staker")
        .unwrap();
    assert_eq!(sim.state().balances["staker"].pepecoin, before - tokens("1200"));
    assert_eq!(sim.state().pepecoin_burned, tokens("1200"));
    assert!(!defaults::RESERVED_BRAIN_IDS.contains(&id));

    // Stake acquisition locks 100,000 and records the 90-day lock.
    let (id2, _) = sim
        .state_mut()
        .acquire_brain(AcquisitionMethod::StakedPepecoin, "staker")
        .unwrap();
    let brain = &sim.state().brains[&id2];
    assert_eq!(brain.locked_pepecoin, tokens("100000"));
    assert_eq!(brain.lock_until_block, Some(defaults::STAKE_LOCK_BLOCKS));
    assert_eq!(
        sim.state().balances["staker"].pepecoin,
        before - tokens("1200") - tokens("100000")
    );
}

#[test]
fn deactivation_rules() {
    let mut config = base_config();
    config.accounts.push(AccountConfig {
        id: "whale".into(),
        based: TokenAmount::ZERO,
        pepecoin: tokens("200000"),
    });
    let mut sim = Simulation::new(&config).unwrap();

    // Burn-acquired brains can never deactivate.
    let err = sim.state_mut().deactivate_brain(10).unwrap_err();
    assert!(err.to_string().contains("cannot be deactivated"));

    let (id, _) = sim
        .state_mut()
        .acquire_brain(AcquisitionMethod::StakedPepecoin, "whale")
        .unwrap();
    // Lock still active.
    let err = sim.state_mut().deactivate_brain(id).unwrap_err();
    assert!(err.to_string().contains("lock active"));

    // Fast-forward past the lock; the Pepecoin comes back and supply frees.
    let active_before = sim.state().active_brain_count();
    sim.state_mut().block_height = defaults::STAKE_LOCK_BLOCKS;
    sim.state_mut().deactivate_brain(id).unwrap();
    assert_eq!(sim.state().balances["whale"].pepecoin, tokens("200000"));
    assert_eq!(sim.state().active_brain_count(), active_before - 1);
}

#[test]
fn memorize_then_register_with_fees_and_grandfathering() {
    let mut config = base_config();
    config.accounts.push(AccountConfig {
        id: "late".into(),
        based: tokens("150"),
        pepecoin: TokenAmount::ZERO,
    });
    config.peers.push(PeerConfig {
        id: 3,
        account: "late".into(),
        role: PeerRole::Validator,
        memorized: vec![],
        registered: vec![],
        history: vec![],
    });
    let mut sim = Simulation::new(&config).unwrap();
    let state = sim.state_mut();

    // Not memorized yet.
    let err = state.register_peer(10, 3, PeerRole::Validator).unwrap_err();
    assert!(err.to_string().contains("not memorized"));

    state.memorize(10, 3).unwrap();
    let err = state.memorize(10, 3).unwrap_err();
    assert!(err.to_string().contains("already memorized"));

    // Role must match the declaration.
    let err = state.register_peer(10, 3, PeerRole::Miner).unwrap_err();
    assert!(err.to_string().contains("declared as"));

    state.register_peer(10, 3, PeerRole::Validator).unwrap();
    assert_eq!(state.balances["late"].based, tokens("50"));
    assert_eq!(state.balances["owner"].based, tokens("100100"));

    // Raising the fee afterwards does not disturb existing registrations.
    state.set_registration_fee(10, tokens("200")).unwrap();
    assert!(state.brains[&10].validators.contains(&3));
    assert_eq!(state.balances["late"].based, tokens("50"));
}

#[test]
fn fees_must_be_payable_atomically() {
    let mut config = base_config();
    config.accounts.push(AccountConfig {
        id: "poor".into(),
        based: tokens("3"),
        pepecoin: TokenAmount::ZERO,
    });
    config.peers.push(PeerConfig {
        id: 4,
        account: "poor".into(),
        role: PeerRole::Miner,
        memorized: vec![],
        registered: vec![],
        history: vec![],
    });
    let mut sim = Simulation::new(&config).unwrap();
    let state = sim.state_mut();
    state.set_memorize_fee(10, tokens("5")).unwrap();

    // Memorize fee 5 vs balance 3: rejected, state unchanged.
    let digest_before = state.digest();
    let err = state.memorize(10, 4).unwrap_err();
    assert!(err.to_string().contains("$BASED"), "got {err}");
    assert!(err.to_string().contains("has 3"), "got {err}");
    assert_eq!(state.digest(), digest_before);
}

#[test]
fn capacity_limits_hold_under_random_command_sequences() {
    let mut rng = SplitMix64::new(99);
    let mut config = base_config();
    // A deep-pocketed operator hammering the network.
    config.accounts.push(AccountConfig {
        id: "op".into(),
        based: tokens("10000000"),
        pepecoin: tokens("400000000"),
    });
    for i in 0..600u64 {
        config.peers.push(PeerConfig {
            id: 100 + i,
            account: "op".into(),
            role: if i % 3 == 0 {
                PeerRole::Miner
            } else {
                PeerRole::Validator
            },
            memorized: vec![10],
            registered: vec![],
            history: vec![],
        });
    }
    let mut sim = Simulation::new(&config).unwrap();
    for _ in 0..3000 {
        match rng.next_below(5) {
            0 => {
                let method = if rng.next_below(2) == 0 {
                    AcquisitionMethod::Burn
                } else {
                    AcquisitionMethod::StakedPepecoin
                };
                let _ = sim.state_mut().acquire_brain(method, "op");
            }
            1 => {
                let peer = 100 + rng.next_below(600);
                let role = sim.state().peers[&peer].role;
                let _ = sim.state_mut().register_peer(10, peer, role);
            }
            2 => {
                let amount = TokenAmount::from_tokens(1 + rng.next_below(50));
                let _ = sim.state_mut().stake("op", 10, None, amount);
            }
            3 => {
                let pick = rng.next_below(sim.state().brains.len() as u64) as usize;
                let brain = *sim.state().brains.keys().nth(pick).unwrap();
                let _ = sim.state_mut().deactivate_brain(brain);
            }
            _ => sim.step_block(),
        }
        let state = sim.state();
        assert!(state.active_brain_count() <= defaults::MAX_BRAINS);
        for brain in state.brains.values() {
            assert!(brain.validators.len() <= defaults::MAX_VALIDATORS);
            assert!(brain.miners.len() <= defaults::MAX_MINERS);
        }
    }
}

#[test]
fn per_block_conservation_and_balance_accounting() {
    let mut config = base_config();
    config.actions = vec![
        TimedAction {
            block: 3,
            action: Action::Stake {
                account: "staker".into(),
                brain: 10,
                validator: None,
                amount: tokens("500"),
            },
        },
        TimedAction {
            block: 6,
            action: Action::Unstake {
                account: "staker".into(),
                brain: 10,
                validator: Some(1),
                amount: tokens("250"),
            },
        },
    ];
    let mut sim = Simulation::new(&config).unwrap();
    let genesis_liquid: TokenAmount = sim
        .state()
        .balances
        .values()
        .map(|b| b.based)
        .sum();
    let genesis_staked = sim.state().total_stake();

    for _ in 0..10 {
        sim.step_block();
        let state = sim.state();
        assert_eq!(
            state.minted,
            state.distributed.checked_add(state.withheld).unwrap()
        );
        // All $BASED anywhere = genesis endowment + distributed emissions.
        let liquid: TokenAmount = state.balances.values().map(|b| b.based).sum();
        let total = liquid.checked_add(state.total_stake()).unwrap();
        let expected = genesis_liquid
            .checked_add(genesis_staked)
            .unwrap()
            .checked_add(state.distributed)
            .unwrap();
        assert_eq!(total, expected);
    }
}

#[test]
fn identical_runs_have_identical_logs_and_digests() {
    let config = base_config();
    let mut a = Simulation::new(&config).unwrap();
    let mut b = Simulation::new(&config).unwrap();
    a.run_to_block(50);
    b.run_to_block(50);
    let log_a: Vec<String> = a.events().iter().map(|e| e.to_json_line()).collect();
    let log_b: Vec<String> = b.events().iter().map(|e| e.to_json_line()).collect();
    assert_eq!(log_a, log_b);
    assert_eq!(a.digest(), b.digest());
}

#[test]
fn gigabrain_threshold_and_votes() {
    let mut config = base_config();
    config.brains.push(BrainConfig {
        id: 11,
        owner: "owner".into(),
        acquisition: AcquisitionMethod::Burn,
        registration_fee: tokens("100"),
        memorize_fee: TokenAmount::ZERO,
        owner_fraction: 0.25,
        validator_share: 0.5,
        performance: PerformanceSeries::Constant(0.5),
        default_weight: 1.0,
        weights: vec![],
    });
    // Brain 10 holds 10,000 staked; give brain 11 the smallest stake whose
    // share reaches 0.5% of the resulting total (199x >= 10,000 tokens).
    config.stakes.push(StakeConfig {
        account: "staker".into(),
        brain: 11,
        validator: None,
        amount: tokens("50.251256282"),
    });
    let sim = Simulation::new(&config).unwrap();
    let gigabrains = sim.state().gigabrain_set();
    assert!(gigabrains.contains(&10));
    assert!(gigabrains.contains(&11), "boundary share counts as reached");

    // Pass by default; fail only on a strict down-vote majority.
    let mut ballots = BTreeMap::new();
    assert_eq!(sim.state().vote(&ballots).outcome, VoteOutcome::Pass);
    ballots.insert(10, BallotChoice::Down);
    // One of two GigaBrains voting down is not a strict majority.
    assert_eq!(sim.state().vote(&ballots).outcome, VoteOutcome::Pass);
    ballots.insert(11, BallotChoice::Down);
    assert_eq!(sim.state().vote(&ballots).outcome, VoteOutcome::Fail);
    ballots.insert(99, BallotChoice::Down);
    let report = sim.state().vote(&ballots);
    assert_eq!(report.rejected_ballots, vec![99]);
    assert_eq!(report.down_votes, 2);
}

#[test]
fn cap_effect_excess_stake_buys_nothing() {
    // Both brains sit far above the 0.5% cap, so both compete at the cap;
    // pushing yet more stake into brain 10 must not change its allocation.
    let mut config = base_config();
    config.brains.push(BrainConfig {
        id: 12,
        owner: "owner".into(),
        acquisition: AcquisitionMethod::Burn,
        registration_fee: tokens("100"),
        memorize_fee: TokenAmount::ZERO,
        owner_fraction: 0.25,
        validator_share: 0.5,
        performance: PerformanceSeries::Constant(1.0),
        default_weight: 1.0,
        weights: vec![],
    });
    config.stakes.push(StakeConfig {
        account: "staker".into(),
        brain: 12,
        validator: None,
        amount: tokens("8000"),
    });

    let brain_10_reward = |extra: Option<TokenAmount>| -> TokenAmount {
        let mut config = config.clone();
        if let Some(extra) = extra {
            config.stakes.push(StakeConfig {
                account: "owner".into(),
                brain: 10,
                validator: None,
                amount: extra,
            });
        }
        let mut sim = Simulation::new(&config).unwrap();
        sim.step_block();
        sim.events()
            .iter()
            .find_map(|event| match &event.kind {
                basedlab_core::sim::EventKind::BrainReward { brain: 10, total, .. } => {
                    Some(*total)
                }
                _ => None,
            })
            .expect("brain 10 rewarded")
    };

    let base = brain_10_reward(None);
    let boosted = brain_10_reward(Some(tokens("90000")));
    assert_eq!(base, boosted);
    assert_eq!(base, tokens("5"));
}

#[test]
fn vote_majority_boundary() {
    // Four gigabrains, two down-votes: not a strict majority, passes.
    let mut config = base_config();
    config.stakes.clear();
    for (i, id) in [20u32, 21, 22, 23].iter().enumerate() {
        config.brains.push(BrainConfig {
            id: *id,
            owner: "owner".into(),
            acquisition: AcquisitionMethod::Burn,
            registration_fee: tokens("100"),
            memorize_fee: TokenAmount::ZERO,
            owner_fraction: 0.25,
            validator_share: 0.5,
            performance: PerformanceSeries::Constant(1.0),
            default_weight: 1.0,
            weights: vec![],
        });
        config.stakes.push(StakeConfig {
            account: "staker".into(),
            brain: *id,
            validator: None,
            amount: TokenAmount::from_tokens(100 + i as u64),
        });
    }
    let sim = Simulation::new(&config).unwrap();
    assert_eq!(sim.state().gigabrain_set(), vec![20, 21, 22, 23]);

    let mut ballots = BTreeMap::new();
    ballots.insert(20, BallotChoice::Down);
    ballots.insert(21, BallotChoice::Down);
    ballots.insert(22, BallotChoice::Up);
    assert_eq!(sim.state().vote(&ballots).outcome, VoteOutcome::Pass);

    // Three of four down is a strict majority: fails.
    ballots.insert(22, BallotChoice::Down);
    assert_eq!(sim.state().vote(&ballots).outcome, VoteOutcome::Fail);
}

#[test]
fn queued_actions_apply_in_scenario_order_and_rejections_log() {
    let mut config = base_config();
    config.actions = vec![
        // Applies fine.
        TimedAction {
            block: 2,
            action: Action::SetPerformance {
                brain: 10,
                value: 0.5,
            },
        },
        // Rejected: unknown brain.
        TimedAction {
            block: 2,
            action: Action::DeactivateBrain { brain: 999 },
        },
    ];
    let mut sim = Simulation::new(&config).unwrap();
    sim.run_to_block(4);
    let kinds: Vec<String> = sim
        .events()
        .iter()
        .map(|e| e.to_json_line())
        .filter(|line| line.contains("performance_set") || line.contains("action_rejected"))
        .collect();
    assert_eq!(kinds.len(), 2);
    assert!(kinds[0].contains("performance_set"));
    assert!(kinds[1].contains("action_rejected"));
    assert!(kinds[1].contains("unknown brain 999"));
}
