//! `simulate`: run a scenario file and emit its artifacts.

use std::io::Write;
use std::path::{Path, PathBuf};

use basedlab_core::defaults;
use basedlab_core::quant::{squeeze_forward, SampleMatrix};
use basedlab_core::routing::{distribute_work_with, Embedding, PeerHistory, RoutingOptions};
use basedlab_core::sim::Simulation;
use basedlab_core::util;
use serde_json::json;

use crate::errors::{AppError, AppResult};
use crate::io;
use crate::scenario::{RoutingSection, Scenario};

pub struct SimulateArgs {
    pub scenario: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub fn run(args: SimulateArgs) -> AppResult<String> {
    let mut scenario: Scenario = io::read_json(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.network.seed = seed;
    }
    let mut sim = Simulation::new(&scenario.network).map_err(AppError::validation)?;
    let blocks = scenario.run_blocks(sim.emission_schedule().blocks_per_year)?;
    log::info!(
        "running scenario {} for {blocks} blocks (seed {})",
        args.scenario.display(),
        scenario.network.seed
    );
    sim.run_to_block(blocks);

    let digest = sim.digest();
    let state = sim.state();

    let routing_result = match &scenario.routing {
        Some(section) => Some(run_routing_section(section, &scenario, &sim)?),
        None => None,
    };
    let quant_result = match &scenario.quant {
        Some(section) => {
            let matrix = SampleMatrix::from_rows(section.matrix.clone())
                .map_err(AppError::validation)?;
            let squeezed = squeeze_forward(&matrix, &section.params.to_params())
                .map_err(AppError::validation)?;
            Some(squeezed)
        }
        None => None,
    };

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        write_events(dir, &sim)?;
        write_summary(dir, &sim)?;
        write_credits(dir, &sim)?;
        std::fs::write(dir.join("digest.txt"), format!("{digest}\n"))?;
        if let Some(result) = &routing_result {
            std::fs::write(
                dir.join("routing_assignment.json"),
                serde_json::to_string_pretty(result).expect("json"),
            )?;
        }
        if let Some(squeezed) = &quant_result {
            std::fs::write(dir.join("quantized.csv"), io::matrix_to_csv(squeezed))?;
        }
    }

    let mut out = format!("# {}\n", defaults::provenance_line());
    out.push_str(&format!("blocks simulated: {}\n", state.block_height));
    out.push_str(&format!("minted: {} $BASED\n", state.minted));
    out.push_str(&format!("distributed: {} $BASED\n", state.distributed));
    out.push_str(&format!("withheld: {} $BASED\n", state.withheld));
    out.push_str(&format!("pepecoin burned: {}\n", state.pepecoin_burned));
    out.push_str(&format!("events: {}\n", sim.events().len()));
    out.push_str(&format!("gigabrains: {:?}\n", state.gigabrain_set()));
    out.push_str(&format!("state_digest: {digest}\n"));
    Ok(out)
}

fn run_routing_section(
    section: &RoutingSection,
    scenario: &Scenario,
    sim: &Simulation,
) -> AppResult<serde_json::Value> {
    let items: Vec<Embedding> = match (&section.items, &section.generate) {
        (Some(rows), _) => rows.iter().cloned().map(Embedding).collect(),
        (None, Some(generated)) => (0..generated.count)
            .map(|i| Embedding(util::hash_embedding(scenario.network.seed, i, generated.dim)))
            .collect(),
        (None, None) => {
            return Err(AppError::validation(
                "routing: provide items or generate {count, dim}",
            ))
        }
    };
    let state = sim.state();
    let peers: Vec<PeerHistory> = state
        .peers
        .values()
        .filter(|peer| match section.brain {
            Some(brain_id) => state
                .brains
                .get(&brain_id)
                .map(|b| b.validators.contains(&peer.id) || b.miners.contains(&peer.id))
                .unwrap_or(false),
            None => true,
        })
        .map(|peer| PeerHistory {
            peer_id: peer.id,
            previous_embeddings: peer.history.clone(),
        })
        .collect();
    let options = RoutingOptions {
        aggregate: section.aggregate,
        metric: section.metric,
    };
    let assignment =
        distribute_work_with(&items, &peers, &options).map_err(AppError::validation)?;
    Ok(json!({
        "defaults": defaults::provenance_line(),
        "items": items.len(),
        "brain": section.brain,
        "assignments": assignment.assignments,
    }))
}

fn write_events(dir: &Path, sim: &Simulation) -> AppResult<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(dir.join("events.jsonl"))?);
    for event in sim.events() {
        writeln!(file, "{}", event.to_json_line())?;
    }
    Ok(())
}

fn write_summary(dir: &Path, sim: &Simulation) -> AppResult<()> {
    let mut out = String::new();
    out.push_str(&format!("# {}\n", defaults::provenance_line()));
    out.push_str(
        "year,minted,distributed,withheld,brain,reward_total,owner_reward,validator_rewards,miner_rewards,staker_rewards,stake_start,stake_end,realized_apy,gigabrain,consensus_peers\n",
    );
    for row in sim.summaries() {
        let apy = row
            .realized_apy
            .map(|v| format!("{v:.6}"))
            .unwrap_or_default();
        let consensus = row
            .consensus_peers
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.year,
            row.minted,
            row.distributed,
            row.withheld,
            row.brain,
            row.reward_total,
            row.owner_reward,
            row.validator_rewards,
            row.miner_rewards,
            row.staker_rewards,
            row.stake_start,
            row.stake_end,
            apy,
            row.gigabrain,
            consensus,
        ));
    }
    std::fs::write(dir.join("summary.csv"), out)?;
    Ok(())
}

fn write_credits(dir: &Path, sim: &Simulation) -> AppResult<()> {
    let mut out = String::new();
    out.push_str("year,peer,credits\n");
    for row in sim.credit_rows() {
        out.push_str(&format!("{},{},{}\n", row.year, row.peer, row.credits));
    }
    std::fs::write(dir.join("credits.csv"), out)?;
    Ok(())
}
