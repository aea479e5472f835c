//! Property checks for quantization, QAT, and head selection.

use basedlab_core::quant::{
    attention_weights, head_significance, mha_forward, qat_roundtrip, quantize_rows, row_stddev,
    select_heads, squeeze_forward, HeadSpec, HeadWeights, QatParams, SampleMatrix, SelectionMode,
    SqueezeParams,
};
use basedlab_core::util::SplitMix64;

fn random_matrix(rng: &mut SplitMix64, rows: usize, cols: usize, span: f64) -> SampleMatrix {
    SampleMatrix::from_rows(
        (0..rows)
            .map(|_| (0..cols).map(|_| rng.next_range_f64(-span, span)).collect())
            .collect(),
    )
    .unwrap()
}

#[test]
fn row_stddev_matches_moment_oracle() {
    let mut rng = SplitMix64::new(1);
    for _ in 0..200 {
        let rows = 1 + rng.next_below(16) as usize;
        let cols = 1 + rng.next_below(16) as usize;
        let x = random_matrix(&mut rng, rows, cols, 5.0);
        let sigma = row_stddev(&x);
        for (i, &s) in sigma.iter().enumerate() {
            // E[x^2] - E[x]^2 as the second route.
            let row = x.row(i);
            let m = row.len() as f64;
            let mean = row.iter().sum::<f64>() / m;
            let mean_sq = row.iter().map(|v| v * v).sum::<f64>() / m;
            let oracle = (mean_sq - mean * mean).max(0.0).sqrt();
            assert!((s - oracle).abs() < 1e-9, "row {i}: {s} vs {oracle}");
        }
    }
}

#[test]
fn quantization_grid_membership_and_endpoints() {
    let mut rng = SplitMix64::new(2);
    for _ in 0..200 {
        let rows = 1 + rng.next_below(64) as usize;
        let cols = 1 + rng.next_below(64) as usize;
        let levels = 2 + rng.next_below(255) as u32;
        let x = random_matrix(&mut rng, rows, cols, 10.0);
        let q = quantize_rows(&x, levels).unwrap();
        for i in 0..rows {
            let row = x.row(i);
            let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let step = (max - min) / (levels - 1) as f64;
            for j in 0..cols {
                let value = q.get(i, j);
                let on_grid = (0..levels - 1).any(|m| value == min + m as f64 * step)
                    || value == max;
                assert!(on_grid, "value {value} off-grid (min {min}, step {step})");
                if x.get(i, j) == min {
                    assert_eq!(value, min);
                }
                if x.get(i, j) == max {
                    assert_eq!(value, max);
                }
            }
        }
    }
}

#[test]
fn quantization_is_idempotent() {
    let mut rng = SplitMix64::new(3);
    for _ in 0..200 {
        let rows = 1 + rng.next_below(32) as usize;
        let cols = 1 + rng.next_below(32) as usize;
        let levels = 2 + rng.next_below(64) as u32;
        let x = random_matrix(&mut rng, rows, cols, 8.0);
        let once = quantize_rows(&x, levels).unwrap();
        let twice = quantize_rows(&once, levels).unwrap();
        assert_eq!(once, twice);
    }
}

#[test]
fn quantization_preserves_row_order_and_level_count() {
    let mut rng = SplitMix64::new(4);
    for _ in 0..200 {
        let cols = 2 + rng.next_below(64) as usize;
        let levels = 2 + rng.next_below(30) as u32;
        let x = random_matrix(&mut rng, 1, cols, 3.0);
        let q = quantize_rows(&x, levels).unwrap();
        let row = x.row(0);
        let quantized = q.row(0);
        for a in 0..cols {
            for b in 0..cols {
                if row[a] <= row[b] {
                    assert!(quantized[a] <= quantized[b], "order broken");
                }
            }
        }
        let mut distinct: Vec<f64> = quantized.to_vec();
        distinct.sort_by(|x, y| x.partial_cmp(y).unwrap());
        distinct.dedup();
        assert!(distinct.len() as u32 <= levels);
    }
}

#[test]
fn squeeze_output_has_bounded_level_count() {
    let mut rng = SplitMix64::new(5);
    for _ in 0..100 {
        let params = SqueezeParams {
            quant_levels: 2 + rng.next_below(50) as u32,
            adaptive_threshold: rng.next_f64(),
            scale_factor: 0.1 + rng.next_f64() * 0.8,
        };
        let rows = 1 + rng.next_below(20) as usize;
        let cols = 1 + rng.next_below(20) as usize;
        let x = random_matrix(&mut rng, rows, cols, 4.0);
        let out = squeeze_forward(&x, &params).unwrap();
        for i in 0..out.n_rows() {
            let mut distinct: Vec<f64> = out.row(i).to_vec();
            distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
            distinct.dedup();
            assert!(distinct.len() as u32 <= params.quant_levels);
        }
    }
}

#[test]
fn qat_residual_bounded_by_half_sigma() {
    let mut rng = SplitMix64::new(6);
    let mut checked = 0u32;
    while checked < 10_000 {
        let params = QatParams {
            mu: rng.next_range_f64(-50.0, 50.0),
            sigma: 0.01 + rng.next_f64() * 10.0,
            q_scale: if rng.next_f64() < 0.5 {
                0.1 + rng.next_f64() * 5.0
            } else {
                -(0.1 + rng.next_f64() * 5.0)
            },
            q_zero: rng.next_range_f64(-20.0, 20.0),
        };
        for _ in 0..10 {
            let x = rng.next_range_f64(-100.0, 100.0);
            let roundtrip = qat_roundtrip(x, &params).unwrap();
            assert!(
                (roundtrip - x).abs() <= 0.5 * params.sigma + 1e-9,
                "x={x} params={params:?} roundtrip={roundtrip}"
            );
            checked += 1;
        }
    }
}

fn random_head(rng: &mut SplitMix64, d_model: usize, d_head: usize) -> HeadWeights {
    HeadWeights {
        wq: random_matrix(rng, d_model, d_head, 1.0),
        wk: random_matrix(rng, d_model, d_head, 1.0),
        wv: random_matrix(rng, d_model, d_head, 1.0),
    }
}

#[test]
fn head_significance_matches_mask_oracle_and_permutes() {
    let mut rng = SplitMix64::new(7);
    let d_model = 8;
    let d_head = 4;
    let k = 4;
    let heads: Vec<HeadWeights> = (0..k).map(|_| random_head(&mut rng, d_model, d_head)).collect();
    let w_output = random_matrix(&mut rng, k * d_head, d_model, 1.0);
    let spec = HeadSpec::new(heads.clone(), w_output.clone()).unwrap();
    let x = random_matrix(&mut rng, 5, d_model, 1.0);
    let reference = random_matrix(&mut rng, 5, d_model, 1.0);

    let scores = head_significance(&spec, &x, &reference).unwrap();

    // Independent mask-and-evaluate oracle.
    let all: Vec<usize> = (0..k).collect();
    let full_err = mha_forward(&spec, &x, &all).unwrap().mse(&reference).unwrap();
    for h in 0..k {
        let mask: Vec<usize> = all.iter().copied().filter(|&i| i != h).collect();
        let err = mha_forward(&spec, &x, &mask).unwrap().mse(&reference).unwrap();
        let expected = (err - full_err).max(0.0);
        assert!((scores[h] - expected).abs() < 1e-9);
    }

    // Swapping two heads (and their W_O row blocks) swaps their scores.
    let mut swapped_heads = heads.clone();
    swapped_heads.swap(0, 1);
    let mut rows = w_output.to_rows();
    for offset in 0..d_head {
        rows.swap(offset, d_head + offset);
    }
    let swapped_out = SampleMatrix::from_rows(rows).unwrap();
    let swapped_spec = HeadSpec::new(swapped_heads, swapped_out).unwrap();
    let swapped_scores = head_significance(&swapped_spec, &x, &reference).unwrap();
    assert!((scores[0] - swapped_scores[1]).abs() < 1e-9);
    assert!((scores[1] - swapped_scores[0]).abs() < 1e-9);
    for h in 2..k {
        assert!((scores[h] - swapped_scores[h]).abs() < 1e-9);
    }
}

/// Recursive subset enumeration, independent of the bitmask implementation.
fn best_subset_recursive(scores: &[f64], costs: &[f64], c_max: f64) -> Vec<usize> {
    fn recurse(
        idx: usize,
        scores: &[f64],
        costs: &[f64],
        c_max: f64,
        current: &mut Vec<usize>,
        cost_acc: f64,
        score_acc: f64,
        best: &mut (f64, Vec<usize>),
    ) {
        if idx == scores.len() {
            if cost_acc < c_max
                && (score_acc > best.0 || (score_acc == best.0 && *current < best.1))
            {
                *best = (score_acc, current.clone());
            }
            return;
        }
        recurse(idx + 1, scores, costs, c_max, current, cost_acc, score_acc, best);
        current.push(idx);
        recurse(
            idx + 1,
            scores,
            costs,
            c_max,
            current,
            cost_acc + costs[idx],
            score_acc + scores[idx],
            best,
        );
        current.pop();
    }
    let mut best = (0.0, Vec::new());
    recurse(0, scores, costs, c_max, &mut Vec::new(), 0.0, 0.0, &mut best);
    best.1
}

#[test]
fn exact_selection_matches_recursive_enumeration() {
    let mut rng = SplitMix64::new(8);
    for round in 0..100 {
        let k = 1 + rng.next_below(15) as usize;
        let scores: Vec<f64> = (0..k).map(|_| rng.next_f64() * 10.0).collect();
        let costs: Vec<f64> = (0..k).map(|_| 0.1 + rng.next_f64() * 5.0).collect();
        let c_max = rng.next_f64() * costs.iter().sum::<f64>() * 1.2;
        let got = select_heads(&scores, &costs, c_max, SelectionMode::Exact).unwrap();
        let want = best_subset_recursive(&scores, &costs, c_max);
        assert_eq!(got, want, "round {round}");
    }
}

#[test]
fn attention_rows_always_normalize() {
    let mut rng = SplitMix64::new(15);
    for _ in 0..100 {
        let n = 1 + rng.next_below(8) as usize;
        let d = 1 + rng.next_below(8) as usize;
        let q = random_matrix(&mut rng, n, d, 3.0);
        let k = random_matrix(&mut rng, n, d, 3.0);
        let a = attention_weights(&q, &k).unwrap();
        for i in 0..n {
            let sum: f64 = a.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }
}
