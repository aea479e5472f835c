//! `consensus`: evaluate the trust pipeline on a JSON-described instance.

use std::path::PathBuf;

use basedlab_core::consensus::{
    adaptive_reweight, consensus_mass, consensus_set, credits_update, incentive_weights,
    loo_contribution_scores, sigmoid_scale, trust_from_weights, BetaMode, BetaSchedule,
    CreditsLedger, IncentiveParams, StakeVector, WeightMatrix,
};
use basedlab_core::defaults;
use serde::Deserialize;
use serde_json::json;

use crate::errors::{AppError, AppResult};
use crate::io;
use crate::OutputFormat;

#[derive(Debug, Deserialize)]
struct ConsensusInput {
    weights: Vec<Vec<f64>>,
    stakes: Vec<f64>,
    #[serde(default = "default_lambda")]
    lambda: f64,
    #[serde(default)]
    t_years: f64,
    #[serde(default)]
    beta_mode: BetaMode,
    #[serde(default)]
    tft_accuracy: f64,
    /// Optional leave-one-out demo: per-peer predictions averaged into an
    /// ensemble scored against a target vector.
    #[serde(default)]
    loo: Option<LooInput>,
    /// Optional adaptive reweighting demo.
    #[serde(default)]
    reweight: Option<ReweightInput>,
}

fn default_lambda() -> f64 {
    defaults::SIGMOID_LAMBDA
}

#[derive(Debug, Deserialize)]
struct LooInput {
    predictions: Vec<Vec<f64>>,
    target: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct ReweightInput {
    credits: Vec<f64>,
    contribution: Vec<f64>,
    rate: f64,
}

pub fn run(input_path: PathBuf, format: OutputFormat) -> AppResult<String> {
    let input: ConsensusInput = io::read_json(&input_path)?;
    let weights = WeightMatrix::from_rows(input.weights).map_err(AppError::validation)?;
    let stakes = StakeVector::new(input.stakes).map_err(AppError::validation)?;

    let trust = trust_from_weights(&weights);
    let mass = consensus_mass(&trust, &stakes).map_err(AppError::validation)?;
    let in_consensus = consensus_set(&trust, &stakes).map_err(AppError::validation)?;
    let sigmoid = sigmoid_scale(&trust, &stakes, input.lambda).map_err(AppError::validation)?;
    let credits_delta = credits_update(&weights, &stakes).map_err(AppError::validation)?;
    let beta_schedule = BetaSchedule {
        mode: input.beta_mode,
        ..Default::default()
    };
    let beta = beta_schedule.beta(input.t_years);
    let params = IncentiveParams {
        lambda: input.lambda,
        tft_accuracy: input.tft_accuracy,
        beta: beta_schedule,
    };
    let incentive = incentive_weights(&weights, &stakes, &params, input.t_years, None)
        .map_err(AppError::validation)?;

    let loo_scores = match &input.loo {
        Some(loo) => {
            let n = loo.predictions.len();
            for (i, row) in loo.predictions.iter().enumerate() {
                if row.len() != loo.target.len() {
                    return Err(AppError::validation(format!(
                        "loo.predictions[{i}] has {} entries, target has {}",
                        row.len(),
                        loo.target.len()
                    )));
                }
            }
            let scores = loo_contribution_scores::<_, AppError>(
                |subset| {
                    if subset.is_empty() {
                        return Ok(f64::MAX);
                    }
                    let dims = loo.target.len();
                    let mut mse = 0.0;
                    for d in 0..dims {
                        let mean: f64 = subset
                            .iter()
                            .map(|&p| loo.predictions[p][d])
                            .sum::<f64>()
                            / subset.len() as f64;
                        mse += (mean - loo.target[d]) * (mean - loo.target[d]);
                    }
                    Ok(mse / dims as f64)
                },
                n,
            )?;
            Some(scores)
        }
        None => None,
    };

    let reweighted = match &input.reweight {
        Some(rw) => {
            let ledger = CreditsLedger {
                credits: rw.credits.clone(),
            };
            Some(
                adaptive_reweight(&weights, &ledger, &rw.contribution, rw.rate)
                    .map_err(AppError::validation)?
                    .rows(),
            )
        }
        None => None,
    };

    let body = json!({
        "defaults": defaults::provenance_line(),
        "trust": trust.rows(),
        "consensus_mass": mass,
        "consensus_set": in_consensus,
        "sigmoid_scale": sigmoid,
        "credits_delta": credits_delta,
        "beta": beta,
        "incentive_weights": incentive,
        "loo_scores": loo_scores,
        "reweighted": reweighted,
    });
    match format {
        OutputFormat::Json | OutputFormat::Csv => {
            Ok(serde_json::to_string_pretty(&body).expect("json"))
        }
        OutputFormat::Text => {
            let mut out = format!("# {}\n", defaults::provenance_line());
            out.push_str(&format!("consensus mass: {mass:?}\n"));
            out.push_str(&format!("in consensus:   {in_consensus:?}\n"));
            out.push_str(&format!("sigmoid scale:  {sigmoid:?}\n"));
            out.push_str(&format!("credits delta:  {credits_delta:?}\n"));
            out.push_str(&format!("beta({}) = {beta}\n", input.t_years));
            out.push_str(&format!("incentive:      {incentive:?}\n"));
            if let Some(scores) = loo_scores {
                out.push_str(&format!("loo scores:     {scores:?}\n"));
            }
            if reweighted.is_some() {
                out.push_str("reweighted matrix available via --format json\n");
            }
            Ok(out)
        }
    }
}
