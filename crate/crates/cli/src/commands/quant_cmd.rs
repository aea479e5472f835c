//! `quantize`, `qat`, and `heads` subcommands.

use std::path::PathBuf;

use basedlab_core::defaults;
use basedlab_core::quant::{
    adaptive_scale, head_significance, heads_above_threshold, qat_roundtrip, row_stddev,
    select_heads, squeeze_forward, HeadSpec, HeadWeights, QatParams, SampleMatrix, SelectionMode,
    SqueezeParams,
};
use serde::Deserialize;
use serde_json::json;

use crate::errors::{AppError, AppResult};
use crate::io;
use crate::OutputFormat;

pub struct QuantizeArgs {
    pub input: PathBuf,
    pub levels: u32,
    pub threshold: f64,
    pub alpha: f64,
    pub output: Option<PathBuf>,
    pub stats: bool,
}

pub fn run_quantize(args: QuantizeArgs, format: OutputFormat) -> AppResult<String> {
    let matrix = io::read_matrix(&args.input)?;
    let params = SqueezeParams {
        quant_levels: args.levels,
        adaptive_threshold: args.threshold,
        scale_factor: args.alpha,
    };
    params.validate().map_err(AppError::validation)?;
    let squeezed = squeeze_forward(&matrix, &params).map_err(AppError::validation)?;
    let csv = io::matrix_to_csv(&squeezed);

    if let Some(path) = &args.output {
        std::fs::write(path, &csv)?;
    }

    let stats = args.stats.then(|| {
        let sigmas = row_stddev(&matrix);
        let scaled = adaptive_scale(&matrix, &params).expect("validated");
        sigmas
            .iter()
            .enumerate()
            .map(|(i, sigma)| {
                let factor = if *sigma > params.adaptive_threshold {
                    params.scale_factor
                } else {
                    1.0 / params.scale_factor
                };
                let row = scaled.row(i);
                let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                json!({
                    "row": i,
                    "stddev": sigma,
                    "scale": factor,
                    "scaled_min": min,
                    "scaled_max": max,
                    "step": if max > min { (max - min) / (params.quant_levels - 1) as f64 } else { 0.0 },
                })
            })
            .collect::<Vec<_>>()
    });

    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&json!({
            "defaults": defaults::provenance_line(),
            "levels": params.quant_levels,
            "threshold": params.adaptive_threshold,
            "alpha": params.scale_factor,
            "rows": squeezed.n_rows(),
            "cols": squeezed.n_cols(),
            "stats": stats,
            "quantized": squeezed.to_rows(),
        }))
        .expect("json")),
        _ => {
            let mut out = format!("# {}\n", defaults::provenance_line());
            if let Some(stats) = &stats {
                for entry in stats {
                    out.push_str(&format!(
                        "# row {} stddev={} scale={} step={}\n",
                        entry["row"], entry["stddev"], entry["scale"], entry["step"]
                    ));
                }
            }
            out.push_str(&csv);
            Ok(out)
        }
    }
}

pub struct QatArgs {
    pub input: PathBuf,
    pub mu: f64,
    pub sigma: f64,
    pub qscale: f64,
    pub qzero: f64,
}

pub fn run_qat(args: QatArgs, format: OutputFormat) -> AppResult<String> {
    let matrix = io::read_matrix(&args.input)?;
    let params = QatParams {
        mu: args.mu,
        sigma: args.sigma,
        q_scale: args.qscale,
        q_zero: args.qzero,
    };
    params.validate().map_err(AppError::validation)?;

    let mut max_abs_err = 0.0f64;
    let mut sum_abs_err = 0.0f64;
    let mut violations = 0u64;
    let bound = 0.5 * params.sigma;
    let total = (matrix.n_rows() * matrix.n_cols()) as f64;
    for i in 0..matrix.n_rows() {
        for j in 0..matrix.n_cols() {
            let x = matrix.get(i, j);
            let rt = qat_roundtrip(x, &params).map_err(AppError::validation)?;
            let err = (rt - x).abs();
            max_abs_err = max_abs_err.max(err);
            sum_abs_err += err;
            if err > bound {
                violations += 1;
            }
        }
    }

    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&json!({
            "defaults": defaults::provenance_line(),
            "mu": params.mu,
            "sigma": params.sigma,
            "q_scale": params.q_scale,
            "q_zero": params.q_zero,
            "values": total as u64,
            "max_abs_error": max_abs_err,
            "mean_abs_error": sum_abs_err / total,
            "bound": bound,
            "violations": violations,
        }))
        .expect("json")),
        _ => Ok(format!(
            "# {}\nround-trip over {} values: max |err| = {max_abs_err}, mean |err| = {}, bound 0.5*sigma = {bound}, violations = {violations}\n",
            defaults::provenance_line(),
            total as u64,
            sum_abs_err / total,
        )),
    }
}

#[derive(Debug, Deserialize)]
struct HeadSpecFile {
    heads: Vec<HeadMatrices>,
    w_output: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
struct HeadMatrices {
    wq: Vec<Vec<f64>>,
    wk: Vec<Vec<f64>>,
    wv: Vec<Vec<f64>>,
}

pub struct HeadsArgs {
    pub scores: Option<String>,
    pub costs: Option<String>,
    pub budget: f64,
    pub mode: SelectionMode,
    pub spec: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub theta: Option<f64>,
}

pub fn run_heads(args: HeadsArgs, format: OutputFormat) -> AppResult<String> {
    let scores: Vec<f64> = match (&args.scores, &args.spec) {
        (Some(raw), None) => io::parse_f64_list(raw, "scores")?,
        (None, Some(spec_path)) => {
            let input = args.input.as_ref().ok_or_else(|| {
                AppError::validation("--in is required when scoring from --spec")
            })?;
            let reference = args.reference.as_ref().ok_or_else(|| {
                AppError::validation("--reference is required when scoring from --spec")
            })?;
            let file: HeadSpecFile = io::read_json(spec_path)?;
            let heads: Result<Vec<HeadWeights>, AppError> = file
                .heads
                .into_iter()
                .map(|h| {
                    Ok(HeadWeights {
                        wq: SampleMatrix::from_rows(h.wq).map_err(AppError::validation)?,
                        wk: SampleMatrix::from_rows(h.wk).map_err(AppError::validation)?,
                        wv: SampleMatrix::from_rows(h.wv).map_err(AppError::validation)?,
                    })
                })
                .collect();
            let w_output =
                SampleMatrix::from_rows(file.w_output).map_err(AppError::validation)?;
            let spec = HeadSpec::new(heads?, w_output).map_err(AppError::validation)?;
            let x = io::read_matrix(input)?;
            let reference = io::read_matrix(reference)?;
            head_significance(&spec, &x, &reference).map_err(AppError::validation)?
        }
        _ => {
            return Err(AppError::validation(
                "provide either --scores or --spec (with --in and --reference)",
            ))
        }
    };

    let costs: Vec<f64> = match &args.costs {
        Some(raw) => io::parse_f64_list(raw, "costs")?,
        None => vec![1.0; scores.len()],
    };

    let selected =
        select_heads(&scores, &costs, args.budget, args.mode).map_err(AppError::validation)?;
    let total_score: f64 = selected.iter().map(|&h| scores[h]).sum();
    let total_cost: f64 = selected.iter().map(|&h| costs[h]).sum();
    let above_theta = args.theta.map(|theta| heads_above_threshold(&scores, theta));

    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&json!({
            "defaults": defaults::provenance_line(),
            "scores": scores,
            "costs": costs,
            "budget": args.budget,
            "selected": selected,
            "total_score": total_score,
            "total_cost": total_cost,
            "above_theta": above_theta,
        }))
        .expect("json")),
        _ => {
            let mut out = format!("# {}\n", defaults::provenance_line());
            out.push_str(&format!(
                "selected heads: {selected:?} (score {total_score}, cost {total_cost} < budget {})\n",
                args.budget
            ));
            if let Some(above) = above_theta {
                out.push_str(&format!("heads above theta: {above:?}\n"));
            }
            Ok(out)
        }
    }
}
