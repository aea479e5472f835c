//! `econ` subcommands: emission table, per-block reward, burn audit,
//! compute pricing, APY projection.

use basedlab_core::defaults;
use basedlab_core::econ::{
    self, cumulative_burn, model_catalog, project_stake, EmissionSchedule,
};
use basedlab_core::token::TokenAmount;
use clap::Subcommand;
use serde_json::json;

use crate::errors::{AppError, AppResult};
use crate::OutputFormat;

/// Total Pepecoin the whitepaper states would burn if all Brains were
/// burn-acquired; differs from the arithmetic series implied by its own
/// +200-per-Brain price rule. The burn audit reports the divergence.
const PUBLISHED_TOTAL_BURN: &str = "107563530";

#[derive(Debug, Subcommand)]
pub enum EconCommand {
    /// Reproduce the annual emission schedule.
    Table {
        /// Number of years to print.
        #[arg(long, default_value_t = 10)]
        years: u64,
    },
    /// Block reward at a given chain height.
    Block {
        #[arg(long)]
        height: u64,
    },
    /// Audit the Brain-acquisition burn curve.
    Burn {
        /// Number of burn-acquired Brains to account for.
        #[arg(long, default_value_t = 1024)]
        count: u64,
    },
    /// Price a model request in $BASED.
    Quote {
        /// Model name or alias (see `econ quote --model list`).
        #[arg(long)]
        model: String,
        /// Prompt compute units.
        #[arg(long, default_value_t = 0)]
        prompt: u64,
        /// Completion compute units.
        #[arg(long, default_value_t = 0)]
        completion: u64,
    },
    /// Project a stake compounded annually.
    Apy {
        #[arg(long)]
        amount: TokenAmount,
        /// Annual percentage yield as a fraction, e.g. 0.19.
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 1)]
        years: u32,
    },
}

pub fn run(command: EconCommand, format: OutputFormat) -> AppResult<String> {
    match command {
        EconCommand::Table { years } => table(years, format),
        EconCommand::Block { height } => block(height, format),
        EconCommand::Burn { count } => burn(count, format),
        EconCommand::Quote {
            model,
            prompt,
            completion,
        } => quote(&model, prompt, completion, format),
        EconCommand::Apy {
            amount,
            rate,
            years,
        } => apy(amount, rate, years, format),
    }
}

fn table(years: u64, format: OutputFormat) -> AppResult<String> {
    if years < 1 {
        return Err(AppError::validation("--years must be at least 1"));
    }
    let schedule = EmissionSchedule::default();
    let enforcer = basedlab_core::consensus::BetaSchedule {
        mode: basedlab_core::consensus::BetaMode::TableLookup,
        ..Default::default()
    };
    let mut rows = Vec::new();
    for year in 1..=years {
        let reward = schedule.block_reward(year).map_err(AppError::validation)?;
        let emission = schedule.annual_emission(year).map_err(AppError::validation)?;
        let weight = enforcer.beta((year - 1) as f64);
        rows.push((year, reward, emission, weight));
    }
    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&json!({
            "defaults": defaults::provenance_line(),
            "rows": rows.iter().map(|(year, reward, emission, weight)| json!({
                "year": year,
                "block_reward": reward,
                "emission": emission,
                "tft_enforcer_weight": weight,
            })).collect::<Vec<_>>(),
        }))
        .expect("json")),
        _ => {
            let mut out = format!("# {}\n", defaults::provenance_line());
            out.push_str("year,block_reward,based_emission,tft_enforcer_weight\n");
            for (year, reward, emission, weight) in rows {
                out.push_str(&format!("{year},{reward},{emission},{weight}\n"));
            }
            Ok(out)
        }
    }
}

fn block(height: u64, format: OutputFormat) -> AppResult<String> {
    let schedule = EmissionSchedule::default();
    let reward = schedule.emission_at_block(height);
    let year = schedule.year_of_block(height);
    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&json!({
            "defaults": defaults::provenance_line(),
            "height": height,
            "year": year,
            "block_reward": reward,
        }))
        .expect("json")),
        _ => Ok(format!(
            "# {}\nheight {height} is in year {year}: block reward {reward} $BASED\n",
            defaults::provenance_line()
        )),
    }
}

fn burn(count: u64, format: OutputFormat) -> AppResult<String> {
    let total = cumulative_burn(count).map_err(AppError::validation)?;
    let next_cost = econ::burn_cost(count).ok();
    let published: TokenAmount = PUBLISHED_TOTAL_BURN.parse().expect("static literal");
    let divergence_note = if count == defaults::MAX_BRAINS as u64 {
        let delta = published.saturating_sub(total);
        Some(format!(
            "series total {total} diverges from the whitepaper's published figure {published} by {delta}"
        ))
    } else {
        None
    };
    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&json!({
            "defaults": defaults::provenance_line(),
            "count": count,
            "cumulative_burn_pepecoin": total,
            "next_burn_cost_pepecoin": next_cost,
            "divergence": divergence_note,
        }))
        .expect("json")),
        _ => {
            let mut out = format!("# {}\n", defaults::provenance_line());
            out.push_str(&format!(
                "cumulative Pepecoin burned for {count} brains: {total}\n"
            ));
            if let Some(next) = next_cost {
                out.push_str(&format!("next burn acquisition would cost: {next}\n"));
            }
            if let Some(note) = divergence_note {
                out.push_str(&format!("note: {note}\n"));
            }
            Ok(out)
        }
    }
}

fn quote(model: &str, prompt: u64, completion: u64, format: OutputFormat) -> AppResult<String> {
    if model == "list" {
        let mut out = format!("# {}\n", defaults::provenance_line());
        out.push_str("name,alias,prompt_cost_per_1k,completion_cost_per_1k,context_units\n");
        for m in model_catalog() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                m.name, m.alias, m.prompt_cost_per_1k, m.completion_cost_per_1k, m.context_units
            ));
        }
        return Ok(out);
    }
    let pricing = econ::find_model(model).ok_or_else(|| {
        AppError::validation(format!(
            "unknown model {model:?}; try `econ quote --model list`"
        ))
    })?;
    let cost = econ::quote_compute_cost(&pricing, prompt, completion)
        .map_err(AppError::validation)?;
    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&json!({
            "defaults": defaults::provenance_line(),
            "model": pricing.name,
            "prompt_units": prompt,
            "completion_units": completion,
            "cost_based": cost,
        }))
        .expect("json")),
        _ => Ok(format!(
            "# {}\n{}: {prompt} prompt + {completion} completion units = {cost} $BASED\n",
            defaults::provenance_line(),
            pricing.name
        )),
    }
}

fn apy(amount: TokenAmount, rate: f64, years: u32, format: OutputFormat) -> AppResult<String> {
    let projected = project_stake(amount, rate, years).map_err(AppError::validation)?;
    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&json!({
            "defaults": defaults::provenance_line(),
            "amount": amount,
            "rate": rate,
            "years": years,
            "projected": projected,
        }))
        .expect("json")),
        _ => Ok(format!(
            "# {}\n{amount} $BASED at {rate} APY over {years} year(s) -> {projected} $BASED\n",
            defaults::provenance_line()
        )),
    }
}
