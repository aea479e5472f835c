//! Dynamic quantization pipeline (per-row deviation, adaptive scaling,
//! level quantization), quantization-aware-training round trips, and a toy
//! multi-head attention stack with significance scoring and budgeted head
//! selection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::defaults;

#[derive(Debug, Error, PartialEq, Clone)]
pub enum QuantError {
    #[error("matrix must be non-empty")]
    EmptyMatrix,
    #[error("row {row} has {got} columns, expected {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("invalid parameter {what}: {value}")]
    InvalidParameter { what: &'static str, value: f64 },
    #[error("dimension mismatch: {0}")]
    ShapeMismatch(String),
    #[error("head index {0} out of range")]
    HeadOutOfRange(usize),
    #[error("exact selection supports at most {max} heads, got {got}")]
    TooManyHeadsForExact { got: usize, max: usize },
}

/// Dense row-major N x M matrix of samples (rows) by features (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, QuantError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(QuantError::EmptyMatrix);
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(QuantError::RaggedRow {
                    row: i,
                    got: row.len(),
                    expected: cols,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(QuantError::NonFinite { row: i, col: j });
                }
                data.push(v);
            }
        }
        Ok(SampleMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        SampleMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Identity-like matrix (ones on the main diagonal), not necessarily
    /// square.
    pub fn identity(rows: usize, cols: usize) -> Self {
        let mut m = SampleMatrix::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m.data[i * cols + i] = 1.0;
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn matmul(&self, rhs: &SampleMatrix) -> Result<SampleMatrix, QuantError> {
        if self.cols != rhs.rows {
            return Err(QuantError::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = SampleMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let lhs = self.get(i, k);
                if lhs == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += lhs * rhs.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> SampleMatrix {
        let mut out = SampleMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j);
            }
        }
        out
    }

    /// Mean squared deviation from `other`, element-wise.
    pub fn mse(&self, other: &SampleMatrix) -> Result<f64, QuantError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(QuantError::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sum / self.data.len() as f64)
    }
}

/// Squeeze pipeline parameters: quantization levels, the deviation threshold
/// that separates scale-down from scale-up, and the scale factor.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SqueezeParams {
    pub quant_levels: u32,
    pub adaptive_threshold: f64,
    pub scale_factor: f64,
}

impl Default for SqueezeParams {
    fn default() -> Self {
        SqueezeParams {
            quant_levels: defaults::QUANT_LEVELS,
            adaptive_threshold: defaults::ADAPTIVE_THRESHOLD,
            scale_factor: defaults::SCALE_FACTOR,
        }
    }
}

impl SqueezeParams {
    pub fn validate(&self) -> Result<(), QuantError> {
        if self.quant_levels < 2 {
            return Err(QuantError::InvalidParameter {
                what: "quant_levels",
                value: self.quant_levels as f64,
            });
        }
        if !self.adaptive_threshold.is_finite() {
            return Err(QuantError::InvalidParameter {
                what: "adaptive_threshold",
                value: self.adaptive_threshold,
            });
        }
        if !self.scale_factor.is_finite() || self.scale_factor <= 0.0 || self.scale_factor >= 1.0 {
            return Err(QuantError::InvalidParameter {
                what: "scale_factor",
                value: self.scale_factor,
            });
        }
        Ok(())
    }
}

/// Population standard deviation of each row: sqrt(sum((x - mean)^2) / M).
pub fn row_stddev(x: &SampleMatrix) -> Vec<f64> {
    let m = x.n_cols() as f64;
    (0..x.n_rows())
        .map(|i| {
            let row = x.row(i);
            let mean: f64 = row.iter().sum::<f64>() / m;
            let var: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
            var.sqrt()
        })
        .collect()
}

/// Scales each row by `scale_factor` when its deviation exceeds the
/// threshold (strictly), and by `1 / scale_factor` otherwise. Deviations are
/// measured on the input, before any scaling.
pub fn adaptive_scale(x: &SampleMatrix, params: &SqueezeParams) -> Result<SampleMatrix, QuantError> {
    params.validate()?;
    let sigmas = row_stddev(x);
    let mut out = x.clone();
    for (i, sigma) in sigmas.iter().enumerate() {
        let factor = if *sigma > params.adaptive_threshold {
            params.scale_factor
        } else {
            1.0 / params.scale_factor
        };
        for j in 0..x.n_cols() {
            out.set(i, j, x.get(i, j) * factor);
        }
    }
    Ok(out)
}

// Forgives tiny floating-point shortfalls when a value that already sits on
// a grid level is re-quantized.
const LEVEL_NUDGE: f64 = 1e-12;

/// Quantizes each row onto its own uniform grid of `levels` points spanning
/// [min, max]: q = floor((x - min) / step) * step + min. Degenerate rows
/// (max == min) pass through unchanged; row endpoints always map to
/// themselves.
pub fn quantize_rows(x: &SampleMatrix, levels: u32) -> Result<SampleMatrix, QuantError> {
    if levels < 2 {
        return Err(QuantError::InvalidParameter {
            what: "quant_levels",
            value: levels as f64,
        });
    }
    let mut out = x.clone();
    for i in 0..x.n_rows() {
        let row = x.row(i);
        let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == min {
            continue;
        }
        let step = (max - min) / (levels - 1) as f64;
        for j in 0..x.n_cols() {
            let ratio = (x.get(i, j) - min) / step;
            let level = (ratio + ratio * LEVEL_NUDGE + LEVEL_NUDGE).floor() as u32;
            let level = level.min(levels - 1);
            let q = if level == levels - 1 {
                max
            } else {
                min + level as f64 * step
            };
            out.set(i, j, q);
        }
    }
    Ok(out)
}

/// The full squeeze forward pass: adaptive scaling, then row quantization.
pub fn squeeze_forward(x: &SampleMatrix, params: &SqueezeParams) -> Result<SampleMatrix, QuantError> {
    let scaled = adaptive_scale(x, params)?;
    quantize_rows(&scaled, params.quant_levels)
}

/// Quantization-aware-training parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct QatParams {
    pub mu: f64,
    pub sigma: f64,
    pub q_scale: f64,
    pub q_zero: f64,
}

impl QatParams {
    pub fn validate(&self) -> Result<(), QuantError> {
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(QuantError::InvalidParameter {
                what: "sigma",
                value: self.sigma,
            });
        }
        if !self.q_scale.is_finite() || self.q_scale == 0.0 {
            return Err(QuantError::InvalidParameter {
                what: "q_scale",
                value: self.q_scale,
            });
        }
        if !self.mu.is_finite() || !self.q_zero.is_finite() {
            return Err(QuantError::InvalidParameter {
                what: "mu/q_zero",
                value: if self.mu.is_finite() { self.q_zero } else { self.mu },
            });
        }
        Ok(())
    }
}

/// Q(x) = round((x - mu) / sigma) * q_scale + q_zero, rounding half away
/// from zero.
pub fn qat_quantize(x: f64, p: &QatParams) -> Result<f64, QuantError> {
    p.validate()?;
    Ok(((x - p.mu) / p.sigma).round() * p.q_scale + p.q_zero)
}

/// Inverse mapping: Q^-1(q) = ((q - q_zero) / q_scale) * sigma + mu.
pub fn qat_dequantize(q: f64, p: &QatParams) -> Result<f64, QuantError> {
    p.validate()?;
    Ok(((q - p.q_zero) / p.q_scale) * p.sigma + p.mu)
}

/// The simulated-quantization forward pass Q^-1(Q(x)); its residual against
/// x is bounded by sigma / 2.
pub fn qat_roundtrip(x: f64, p: &QatParams) -> Result<f64, QuantError> {
    qat_dequantize(qat_quantize(x, p)?, p)
}

/// Per-head projection weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeadWeights {
    pub wq: SampleMatrix,
    pub wk: SampleMatrix,
    pub wv: SampleMatrix,
}

/// A k-head attention block: per-head query/key/value projections plus the
/// output projection applied to the concatenated head outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeadSpec {
    pub heads: Vec<HeadWeights>,
    pub w_output: SampleMatrix,
}

impl HeadSpec {
    pub fn new(heads: Vec<HeadWeights>, w_output: SampleMatrix) -> Result<Self, QuantError> {
        if heads.is_empty() {
            return Err(QuantError::ShapeMismatch("no heads".to_string()));
        }
        let d_model = heads[0].wq.n_rows();
        let mut concat_width = 0;
        for (i, head) in heads.iter().enumerate() {
            if head.wq.n_rows() != d_model
                || head.wk.n_rows() != d_model
                || head.wv.n_rows() != d_model
            {
                return Err(QuantError::ShapeMismatch(format!(
                    "head {i}: projection input dims disagree with d_model {d_model}"
                )));
            }
            if head.wq.n_cols() != head.wk.n_cols() {
                return Err(QuantError::ShapeMismatch(format!(
                    "head {i}: query width {} != key width {}",
                    head.wq.n_cols(),
                    head.wk.n_cols()
                )));
            }
            concat_width += head.wv.n_cols();
        }
        if w_output.n_rows() != concat_width {
            return Err(QuantError::ShapeMismatch(format!(
                "concatenated head width {concat_width} does not match output rows {}",
                w_output.n_rows()
            )));
        }
        Ok(HeadSpec { heads, w_output })
    }

    pub fn head_count(&self) -> usize {
        self.heads.len()
    }
}

/// Row-wise softmax attention weights for Q K^T / sqrt(d_k); every row sums
/// to one.
pub fn attention_weights(q: &SampleMatrix, k: &SampleMatrix) -> Result<SampleMatrix, QuantError> {
    if q.n_cols() != k.n_cols() {
        return Err(QuantError::ShapeMismatch(format!(
            "query width {} != key width {}",
            q.n_cols(),
            k.n_cols()
        )));
    }
    let scale = 1.0 / (q.n_cols() as f64).sqrt();
    let scores = q.matmul(&k.transpose())?;
    let mut out = SampleMatrix::zeros(scores.n_rows(), scores.n_cols());
    for i in 0..scores.n_rows() {
        let row = scores.row(i);
        let max = row
            .iter()
            .map(|v| v * scale)
            .fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|v| (v * scale - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        for (j, e) in exps.iter().enumerate() {
            out.set(i, j, e / total);
        }
    }
    Ok(out)
}

/// Scaled dot-product attention forward pass over the active heads; inactive
/// heads contribute zero blocks to the concatenation.
pub fn mha_forward(
    spec: &HeadSpec,
    x: &SampleMatrix,
    active_heads: &[usize],
) -> Result<SampleMatrix, QuantError> {
    for &h in active_heads {
        if h >= spec.head_count() {
            return Err(QuantError::HeadOutOfRange(h));
        }
    }
    let n = x.n_rows();
    let concat_width = spec.w_output.n_rows();
    let mut concat = SampleMatrix::zeros(n, concat_width);
    let mut offset = 0;
    for (h, head) in spec.heads.iter().enumerate() {
        let width = head.wv.n_cols();
        if active_heads.contains(&h) {
            let q = x.matmul(&head.wq)?;
            let k = x.matmul(&head.wk)?;
            let v = x.matmul(&head.wv)?;
            let weights = attention_weights(&q, &k)?;
            let head_out = weights.matmul(&v)?;
            for i in 0..n {
                for j in 0..width {
                    concat.set(i, offset + j, head_out.get(i, j));
                }
            }
        }
        offset += width;
    }
    concat.matmul(&spec.w_output)
}

/// Significance of each head: the increase in reconstruction error against
/// `reference_output` when that head is masked out, clamped at zero.
pub fn head_significance(
    spec: &HeadSpec,
    eval_input: &SampleMatrix,
    reference_output: &SampleMatrix,
) -> Result<Vec<f64>, QuantError> {
    let all: Vec<usize> = (0..spec.head_count()).collect();
    let full = mha_forward(spec, eval_input, &all)?;
    let full_err = full.mse(reference_output)?;
    let mut scores = Vec::with_capacity(spec.head_count());
    for h in 0..spec.head_count() {
        let without: Vec<usize> = all.iter().copied().filter(|&i| i != h).collect();
        let masked = mha_forward(spec, eval_input, &without)?;
        let masked_err = masked.mse(reference_output)?;
        scores.push((masked_err - full_err).max(0.0));
    }
    Ok(scores)
}

/// Heads with significance strictly above the threshold.
pub fn heads_above_threshold(scores: &[f64], theta: f64) -> Vec<usize> {
    (0..scores.len()).filter(|&h| scores[h] > theta).collect()
}

/// Selection strategy for [`select_heads`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    /// Exact for up to 20 heads, greedy beyond.
    #[default]
    Auto,
    Exact,
    Greedy,
}

const EXACT_AUTO_LIMIT: usize = 20;
const EXACT_HARD_LIMIT: usize = 25;

/// Picks the head subset maximizing total significance subject to total
/// cost strictly below `c_max`.
///
/// Exact mode enumerates every subset (score ties resolve to the
/// lexicographically smallest index set); greedy mode adds heads by
/// descending score/cost ratio. Returns the selected indices in ascending
/// order.
pub fn select_heads(
    scores: &[f64],
    costs: &[f64],
    c_max: f64,
    mode: SelectionMode,
) -> Result<Vec<usize>, QuantError> {
    if scores.len() != costs.len() {
        return Err(QuantError::ShapeMismatch(format!(
            "{} scores vs {} costs",
            scores.len(),
            costs.len()
        )));
    }
    for &c in costs {
        if !c.is_finite() || c <= 0.0 {
            return Err(QuantError::InvalidParameter {
                what: "cost",
                value: c,
            });
        }
    }
    for &s in scores {
        if !s.is_finite() {
            return Err(QuantError::InvalidParameter {
                what: "score",
                value: s,
            });
        }
    }
    let k = scores.len();
    let exact = match mode {
        SelectionMode::Exact => {
            if k > EXACT_HARD_LIMIT {
                return Err(QuantError::TooManyHeadsForExact {
                    got: k,
                    max: EXACT_HARD_LIMIT,
                });
            }
            true
        }
        SelectionMode::Greedy => false,
        SelectionMode::Auto => k <= EXACT_AUTO_LIMIT,
    };
    if exact {
        Ok(select_exact(scores, costs, c_max))
    } else {
        Ok(select_greedy(scores, costs, c_max))
    }
}

fn select_exact(scores: &[f64], costs: &[f64], c_max: f64) -> Vec<usize> {
    let k = scores.len();
    let mut best_indices: Vec<usize> = Vec::new();
    let mut best_score = 0.0_f64;
    for mask in 0u32..(1u32 << k) {
        let mut total_cost = 0.0;
        let mut total_score = 0.0;
        let mut indices = Vec::new();
        for h in 0..k {
            if mask & (1 << h) != 0 {
                total_cost += costs[h];
                total_score += scores[h];
                indices.push(h);
            }
        }
        if total_cost >= c_max {
            continue;
        }
        if total_score > best_score || (total_score == best_score && indices < best_indices) {
            best_score = total_score;
            best_indices = indices;
        }
    }
    best_indices
}

fn select_greedy(scores: &[f64], costs: &[f64], c_max: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scores[a] / costs[a];
        let rb = scores[b] / costs[b];
        rb.partial_cmp(&ra)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut total_cost = 0.0;
    let mut picked = Vec::new();
    for h in order {
        if scores[h] <= 0.0 {
            continue;
        }
        if total_cost + costs[h] < c_max {
            total_cost += costs[h];
            picked.push(h);
        }
    }
    picked.sort_unstable();
    picked
}
