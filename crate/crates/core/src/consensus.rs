//! Inter-peer trust machinery: weight and trust matrices, the stake-weighted
//! consensus predicate, sigmoid reward scaling, Credits accrual, the enforcer
//! weighting transition, the composite incentive, leave-one-out contribution
//! scoring, and adaptive reweighting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::defaults;

#[derive(Debug, Error, PartialEq, Clone)]
pub enum ConsensusError {
    #[error("weight matrix must be square, got {rows} rows with a row of length {cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    ShapeMismatch(String),
    #[error("entry {value} at ({i},{j}) outside [0,1] or not finite")]
    EntryOutOfRange { i: usize, j: usize, value: f64 },
    #[error("stake vector has zero total stake")]
    DegenerateStake,
    #[error("invalid parameter {what}: {value}")]
    InvalidParameter { what: &'static str, value: f64 },
}

/// Per-peer stakes. Raw values are kept; [`StakeVector::normalized`] is used
/// wherever the consensus predicate needs stake shares.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StakeVector {
    values: Vec<f64>,
}

impl StakeVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ConsensusError> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(ConsensusError::EntryOutOfRange { i, j: 0, value: v });
            }
        }
        Ok(StakeVector { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stake shares summing to 1; errors when all stakes are zero.
    pub fn normalized(&self) -> Result<Vec<f64>, ConsensusError> {
        let total: f64 = self.values.iter().sum();
        if total <= 0.0 {
            return Err(ConsensusError::DegenerateStake);
        }
        Ok(self.values.iter().map(|v| v / total).collect())
    }
}

/// Dense n x n matrix of inter-peer evaluative scores in [0, 1];
/// `get(i, j)` is peer i's score of peer j. The diagonal is ignored by all
/// trust computations.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ConsensusError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ConsensusError::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(ConsensusError::EntryOutOfRange { i, j, value: v });
                }
                data.push(v);
            }
        }
        Ok(WeightMatrix { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        WeightMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<(), ConsensusError> {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(ConsensusError::EntryOutOfRange { i, j, value });
        }
        self.data[i * self.n + j] = value;
        Ok(())
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].to_vec())
            .collect()
    }
}

/// 0/1 mutual-ranking trust edges derived from a [`WeightMatrix`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TrustMatrix {
    n: usize,
    data: Vec<bool>,
}

impl TrustMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.data[i * self.n + j] = value;
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .map(|&b| b as u8)
                    .collect()
            })
            .collect()
    }
}

/// Trust is mutual ranking: an edge between i and j exists iff both scored
/// each other above zero. Self-trust is excluded.
pub fn trust_from_weights(w: &WeightMatrix) -> TrustMatrix {
    let n = w.n();
    let mut data = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j && w.get(i, j) > 0.0 && w.get(j, i) > 0.0 {
                data[i * n + j] = true;
            }
        }
    }
    TrustMatrix { n, data }
}

fn check_dims(n: usize, s: &StakeVector) -> Result<(), ConsensusError> {
    if s.len() != n {
        return Err(ConsensusError::ShapeMismatch(format!(
            "trust matrix is {n}x{n} but stake vector has length {}",
            s.len()
        )));
    }
    Ok(())
}

/// Per-peer trusting-stake mass: c_i = sum_j t[j][i] * normalized_stake_j.
pub fn consensus_mass(t: &TrustMatrix, s: &StakeVector) -> Result<Vec<f64>, ConsensusError> {
    check_dims(t.n(), s)?;
    let shares = s.normalized()?;
    let n = t.n();
    let mut mass = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            if t.get(j, i) {
                mass[i] += shares[j];
            }
        }
    }
    Ok(mass)
}

/// Peers trusted by strictly more than half of the network stake.
pub fn consensus_set(t: &TrustMatrix, s: &StakeVector) -> Result<Vec<bool>, ConsensusError> {
    Ok(consensus_mass(t, s)?.into_iter().map(|c| c > 0.5).collect())
}

/// Differentiable consensus multiplier: 1 / (1 + exp(-lambda * (c_i - 0.5))).
pub fn sigmoid_scale(
    t: &TrustMatrix,
    s: &StakeVector,
    lambda: f64,
) -> Result<Vec<f64>, ConsensusError> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(ConsensusError::InvalidParameter {
            what: "lambda",
            value: lambda,
        });
    }
    Ok(consensus_mass(t, s)?
        .into_iter()
        .map(|c| 1.0 / (1.0 + (-lambda * (c - 0.5)).exp()))
        .collect())
}

/// Credit accruals per peer: delta_i = sum_j w[i][j] * s_j. The scorer
/// accrues credit weighted by the scored peer's stake.
pub fn credits_update(w: &WeightMatrix, s: &StakeVector) -> Result<Vec<f64>, ConsensusError> {
    if s.len() != w.n() {
        return Err(ConsensusError::ShapeMismatch(format!(
            "weight matrix is {0}x{0} but stake vector has length {1}",
            w.n(),
            s.len()
        )));
    }
    let n = w.n();
    let mut delta = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += w.get(i, j) * s.values()[j];
        }
        delta[i] = acc;
    }
    Ok(delta)
}

/// Non-negative per-peer credit balances.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct CreditsLedger {
    pub credits: Vec<f64>,
}

impl CreditsLedger {
    pub fn new(n: usize) -> Self {
        CreditsLedger {
            credits: vec![0.0; n],
        }
    }

    pub fn accrue(&mut self, delta: &[f64]) -> Result<(), ConsensusError> {
        if delta.len() != self.credits.len() {
            return Err(ConsensusError::ShapeMismatch(format!(
                "ledger has {} peers, delta has {}",
                self.credits.len(),
                delta.len()
            )));
        }
        for (c, d) in self.credits.iter_mut().zip(delta) {
            *c += d;
        }
        Ok(())
    }

    /// Credit shares summing to 1, or all zeros when no credit exists yet.
    pub fn shares(&self) -> Vec<f64> {
        let total: f64 = self.credits.iter().sum();
        if total <= 0.0 {
            return vec![0.0; self.credits.len()];
        }
        self.credits.iter().map(|c| c / total).collect()
    }
}

/// How the enforcer weighting beta(t) evolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BetaMode {
    /// 0 through year two, then linear up to 0.9 at year four, then 1.
    #[default]
    TextLinear,
    /// The published per-year table: years 1-2 -> 0, years 3-4 -> 0.9,
    /// year 5 on -> 1.
    TableLookup,
}

/// The enforcer-weight transition clock.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BetaSchedule {
    pub mode: BetaMode,
    pub blocks_per_year: u64,
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule {
            mode: BetaMode::TextLinear,
            blocks_per_year: defaults::ENFORCER_BLOCKS_PER_YEAR,
        }
    }
}

impl BetaSchedule {
    /// beta as a function of elapsed years since genesis.
    pub fn beta(&self, t_years: f64) -> f64 {
        let t = t_years.max(0.0);
        match self.mode {
            BetaMode::TextLinear => {
                if t <= 2.0 {
                    0.0
                } else if t <= 4.0 {
                    0.45 * (t - 2.0)
                } else {
                    1.0
                }
            }
            BetaMode::TableLookup => {
                // Elapsed time t falls in schedule year floor(t) + 1.
                let year = t.floor() as u64 + 1;
                match year {
                    1 | 2 => 0.0,
                    3 | 4 => 0.9,
                    _ => 1.0,
                }
            }
        }
    }

    /// beta at a block height using this schedule's year length.
    pub fn beta_at_block(&self, height: u64) -> f64 {
        self.beta(height as f64 / self.blocks_per_year as f64)
    }
}

/// Composite incentive inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncentiveParams {
    pub lambda: f64,
    /// Exogenous enforcer accuracy signal in [0, 1].
    pub tft_accuracy: f64,
    pub beta: BetaSchedule,
}

impl Default for IncentiveParams {
    fn default() -> Self {
        IncentiveParams {
            lambda: defaults::SIGMOID_LAMBDA,
            tft_accuracy: 0.0,
            beta: BetaSchedule::default(),
        }
    }
}

/// Per-peer distribution weights I_i = R_i * C_i + beta(t) * accuracy,
/// normalized to sum to one.
///
/// R_i defaults to the peer's normalized stake share (override with
/// `base_rewards`); C_i is the sigmoid consensus multiplier. Returns all
/// zeros when the total incentive is zero.
pub fn incentive_weights(
    w: &WeightMatrix,
    s: &StakeVector,
    params: &IncentiveParams,
    t_years: f64,
    base_rewards: Option<&[f64]>,
) -> Result<Vec<f64>, ConsensusError> {
    if !(0.0..=1.0).contains(&params.tft_accuracy) {
        return Err(ConsensusError::InvalidParameter {
            what: "tft_accuracy",
            value: params.tft_accuracy,
        });
    }
    let trust = trust_from_weights(w);
    let scale = sigmoid_scale(&trust, s, params.lambda)?;
    let base: Vec<f64> = match base_rewards {
        Some(r) => {
            if r.len() != s.len() {
                return Err(ConsensusError::ShapeMismatch(format!(
                    "base_rewards has length {}, expected {}",
                    r.len(),
                    s.len()
                )));
            }
            r.to_vec()
        }
        None => s.normalized()?,
    };
    let beta = params.beta.beta(t_years);
    let raw: Vec<f64> = base
        .iter()
        .zip(&scale)
        .map(|(r, c)| r * c + beta * params.tft_accuracy)
        .collect();
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Ok(vec![0.0; raw.len()]);
    }
    Ok(raw.into_iter().map(|v| v / total).collect())
}

/// Leave-one-out contribution scores against a loss oracle over peer
/// subsets: score_i = max(0, loss(all \ {i}) - loss(all)).
pub fn loo_contribution_scores<F, E>(mut loss_oracle: F, n: usize) -> Result<Vec<f64>, E>
where
    F: FnMut(&[usize]) -> Result<f64, E>,
{
    let all: Vec<usize> = (0..n).collect();
    let full_loss = loss_oracle(&all)?;
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let without: Vec<usize> = (0..n).filter(|&p| p != i).collect();
        let loss = loss_oracle(&without)?;
        scores.push((loss - full_loss).max(0.0));
    }
    Ok(scores)
}

/// Nudges weights toward measured contributions: for each edge (i, j),
/// w' = clamp(w + rate * (contribution_j - credit_share_j) * w, 0, 1).
/// Peers whose credit share outruns their measured contribution are damped.
pub fn adaptive_reweight(
    w: &WeightMatrix,
    credits: &CreditsLedger,
    measured_contribution: &[f64],
    rate: f64,
) -> Result<WeightMatrix, ConsensusError> {
    if !(0.0..=1.0).contains(&rate) || !rate.is_finite() {
        return Err(ConsensusError::InvalidParameter {
            what: "rate",
            value: rate,
        });
    }
    let n = w.n();
    if credits.credits.len() != n || measured_contribution.len() != n {
        return Err(ConsensusError::ShapeMismatch(format!(
            "weights are {n}x{n}, credits {} and contributions {}",
            credits.credits.len(),
            measured_contribution.len()
        )));
    }
    let shares = credits.shares();
    let mut out = WeightMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let divergence = measured_contribution[j] - shares[j];
            let updated = (w.get(i, j) * (1.0 + rate * divergence)).clamp(0.0, 1.0);
            out.data[i * n + j] = updated;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(rows: &[&[f64]]) -> WeightMatrix {
        WeightMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn trust_requires_mutual_ranking() {
        let w = weights(&[&[0.0, 0.5], &[0.0, 0.0]]);
        let t = trust_from_weights(&w);
        assert!(!t.get(0, 1));
        assert!(!t.get(1, 0));

        let w = weights(&[&[0.0, 0.5], &[0.2, 0.0]]);
        let t = trust_from_weights(&w);
        assert!(t.get(0, 1));
        assert!(t.get(1, 0));

        let zeros = WeightMatrix::zeros(3);
        let t = trust_from_weights(&zeros);
        for i in 0..3 {
            for j in 0..3 {
                assert!(!t.get(i, j));
            }
        }
    }

    #[test]
    fn trust_diagonal_excluded() {
        let w = weights(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let t = trust_from_weights(&w);
        assert!(!t.get(0, 0));
        assert!(!t.get(1, 1));
    }

    #[test]
    fn weight_matrix_validation() {
        assert!(WeightMatrix::from_rows(vec![vec![0.0, 0.5]]).is_err());
        assert!(WeightMatrix::from_rows(vec![vec![0.0, 1.5], vec![0.0, 0.0]]).is_err());
        assert!(WeightMatrix::from_rows(vec![vec![0.0, f64::NAN], vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn consensus_strict_majority_of_stake() {
        let w = weights(&[&[0.0, 0.5], &[0.2, 0.0]]);
        let t = trust_from_weights(&w);
        let s = StakeVector::new(vec![0.6, 0.4]).unwrap();
        let set = consensus_set(&t, &s).unwrap();
        // Peer 1 is trusted by 60% of stake; peer 0 only by 40%.
        assert_eq!(set, vec![false, true]);

        // Exactly half the stake does not reach consensus.
        let s = StakeVector::new(vec![0.5, 0.5]).unwrap();
        let set = consensus_set(&t, &s).unwrap();
        assert_eq!(set, vec![false, false]);

        let t = trust_from_weights(&WeightMatrix::zeros(2));
        let set = consensus_set(&t, &s).unwrap();
        assert_eq!(set, vec![false, false]);
    }

    #[test]
    fn consensus_rejects_zero_stake() {
        let t = trust_from_weights(&WeightMatrix::zeros(2));
        let s = StakeVector::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(
            consensus_set(&t, &s),
            Err(ConsensusError::DegenerateStake)
        );
    }

    #[test]
    fn sigmoid_midpoint_and_extremes() {
        // c = 0.5 must land exactly on the sigmoid midpoint.
        let w = weights(&[&[0.0, 0.5], &[0.2, 0.0]]);
        let t = trust_from_weights(&w);
        let s = StakeVector::new(vec![0.5, 0.5]).unwrap();
        let m = sigmoid_scale(&t, &s, 10.0).unwrap();
        assert!((m[0] - 0.5).abs() < 1e-15);
        assert!((m[1] - 0.5).abs() < 1e-15);

        // Fully trusted and fully untrusted peers at lambda = 10.
        let n = 3;
        let mut t = trust_from_weights(&WeightMatrix::zeros(n));
        // Peers 1 and 2 hold all stake and both trust peer 0.
        t.set(1, 0, true);
        t.set(2, 0, true);
        let s = StakeVector::new(vec![0.0, 0.5, 0.5]).unwrap();
        let m = sigmoid_scale(&t, &s, 10.0).unwrap();
        assert!((m[0] - 0.9933071490757153).abs() < 1e-12);
        assert!((m[1] - 0.006692850924284856).abs() < 1e-12);

        assert!(sigmoid_scale(&t, &s, 0.0).is_err());
    }

    #[test]
    fn credits_update_examples() {
        let w = weights(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let s = StakeVector::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(credits_update(&w, &s).unwrap(), vec![0.7, 0.0]);

        let zeros = WeightMatrix::zeros(4);
        let s = StakeVector::new(vec![0.25; 4]).unwrap();
        assert_eq!(credits_update(&zeros, &s).unwrap(), vec![0.0; 4]);

        let s_bad = StakeVector::new(vec![0.5]).unwrap();
        assert!(credits_update(&zeros, &s_bad).is_err());
    }

    #[test]
    fn beta_modes() {
        let text = BetaSchedule::default();
        let table = BetaSchedule {
            mode: BetaMode::TableLookup,
            ..Default::default()
        };
        assert_eq!(text.beta(1.0), 0.0);
        assert_eq!(table.beta(1.0), 0.0);
        assert!((text.beta(3.0) - 0.45).abs() < 1e-15);
        assert_eq!(table.beta(3.0), 0.9);
        assert_eq!(text.beta(5.0), 1.0);
        assert_eq!(table.beta(5.0), 1.0);
        // Yearly boundary of the transition window.
        assert_eq!(text.beta(2.0), 0.0);
        assert!((text.beta(4.0) - 0.9).abs() < 1e-15);
        assert_eq!(text.beta(4.000001) , 1.0);
    }

    #[test]
    fn beta_at_block_uses_enforcer_clock() {
        let schedule = BetaSchedule::default();
        assert_eq!(schedule.beta_at_block(0), 0.0);
        assert_eq!(schedule.beta_at_block(defaults::ENFORCER_BLOCKS_PER_YEAR * 2), 0.0);
        assert!(schedule.beta_at_block(defaults::ENFORCER_BLOCKS_PER_YEAR * 3) > 0.0);
    }

    #[test]
    fn incentive_composition() {
        let w = weights(&[&[0.0, 0.5], &[0.2, 0.0]]);
        let s = StakeVector::new(vec![0.6, 0.4]).unwrap();
        let params = IncentiveParams::default();
        let out = incentive_weights(&w, &s, &params, 0.0, None).unwrap();
        // I proportional to [0.6 * sigmoid(-1), 0.4 * sigmoid(1)].
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let expected_raw = [0.6 * sig(-1.0), 0.4 * sig(1.0)];
        let total: f64 = expected_raw.iter().sum();
        for (got, want) in out.iter().zip(expected_raw.iter().map(|v| v / total)) {
            assert!((got - want).abs() < 1e-12);
        }

        // Zero accuracy adds nothing even at beta = 1.
        let late = incentive_weights(&w, &s, &params, 9.0, None).unwrap();
        for (a, b) in late.iter().zip(&out) {
            assert!((a - b).abs() < 1e-12);
        }

        let bad = IncentiveParams {
            tft_accuracy: 1.5,
            ..Default::default()
        };
        assert!(incentive_weights(&w, &s, &bad, 0.0, None).is_err());
    }

    #[test]
    fn loo_scores() {
        // Constant oracle: nobody contributes.
        let scores =
            loo_contribution_scores::<_, std::convert::Infallible>(|_| Ok(1.0), 4).unwrap();
        assert_eq!(scores, vec![0.0; 4]);

        // Oracle counting missing peers: every removal costs exactly one.
        let scores = loo_contribution_scores::<_, std::convert::Infallible>(
            |subset| Ok((5 - subset.len()) as f64),
            5,
        )
        .unwrap();
        assert_eq!(scores, vec![1.0; 5]);

        // Errors propagate.
        let failing = loo_contribution_scores::<_, String>(|_| Err("down".to_string()), 2);
        assert!(failing.is_err());
    }

    #[test]
    fn adaptive_reweight_behavior() {
        let w = weights(&[&[0.0, 0.8], &[0.6, 0.0]]);
        let mut ledger = CreditsLedger::new(2);
        ledger.accrue(&[1.0, 1.0]).unwrap();

        // Contributions equal to credit shares leave W unchanged.
        let same = adaptive_reweight(&w, &ledger, &[0.5, 0.5], 0.5).unwrap();
        assert_eq!(same, w);

        // Rate zero leaves W unchanged regardless of divergence.
        let frozen = adaptive_reweight(&w, &ledger, &[1.0, 0.0], 0.0).unwrap();
        assert_eq!(frozen, w);

        // Peer 1 measured at zero contribution while holding half the
        // credit: its incoming weights shrink by rate * divergence.
        let damped = adaptive_reweight(&w, &ledger, &[0.5, 0.0], 0.5).unwrap();
        assert!((damped.get(0, 1) - 0.8 * (1.0 - 0.25)).abs() < 1e-15);
        assert_eq!(damped.get(1, 0), 0.6);

        assert!(adaptive_reweight(&w, &ledger, &[0.5], 0.5).is_err());
        assert!(adaptive_reweight(&w, &ledger, &[0.5, 0.5], 1.5).is_err());
    }
}
