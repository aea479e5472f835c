//! Embedding-radius work routing: distances from a current embedding to a
//! peer's history, covariance diagnostics, and nearest-peer assignment of
//! work items.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Clone)]
pub enum RoutingError {
    #[error("no peers to route to")]
    NoPeers,
    #[error("peer {0} appears more than once")]
    DuplicatePeerId(u64),
    #[error("embedding history is empty")]
    EmptyHistory,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding contains a non-finite value")]
    NonFinite,
    #[error("need at least two embeddings, got {0}")]
    TooFewEmbeddings(usize),
    #[error("covariance matrix is singular and cannot back a mahalanobis metric")]
    SingularCovariance,
}

/// A fixed-dimension embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    fn validate(&self) -> Result<(), RoutingError> {
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(RoutingError::NonFinite);
        }
        Ok(())
    }

    pub fn euclidean(&self, other: &Embedding) -> Result<f64, RoutingError> {
        if self.dim() != other.dim() {
            return Err(RoutingError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

/// A peer and the embeddings of work it has already processed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeerHistory {
    pub peer_id: u64,
    pub previous_embeddings: Vec<Embedding>,
}

/// Distances from `current` to each previous embedding, in order.
pub fn embedding_radius(
    current: &Embedding,
    previous: &[Embedding],
) -> Result<Vec<f64>, RoutingError> {
    if previous.is_empty() {
        return Err(RoutingError::EmptyHistory);
    }
    current.validate()?;
    previous
        .iter()
        .map(|p| {
            p.validate()?;
            current.euclidean(p)
        })
        .collect()
}

/// Sample covariance (divide by n - 1) of a set of embeddings; symmetric and
/// positive semidefinite up to rounding.
pub fn covariance_matrix(embeddings: &[Embedding]) -> Result<Vec<Vec<f64>>, RoutingError> {
    if embeddings.len() < 2 {
        return Err(RoutingError::TooFewEmbeddings(embeddings.len()));
    }
    let d = embeddings[0].dim();
    for e in embeddings {
        e.validate()?;
        if e.dim() != d {
            return Err(RoutingError::DimensionMismatch {
                expected: d,
                got: e.dim(),
            });
        }
    }
    let n = embeddings.len() as f64;
    let mut mean = vec![0.0; d];
    for e in embeddings {
        for (m, v) in mean.iter_mut().zip(e.values()) {
            *m += v / n;
        }
    }
    let mut cov = vec![vec![0.0; d]; d];
    for e in embeddings {
        let dev: Vec<f64> = e.values().iter().zip(&mean).map(|(v, m)| v - m).collect();
        for a in 0..d {
            for b in 0..d {
                cov[a][b] += dev[a] * dev[b] / (n - 1.0);
            }
        }
    }
    Ok(cov)
}

/// How per-item peer distance aggregates over a peer's history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceAggregate {
    /// Closest history entry wins.
    #[default]
    Min,
    /// Mean distance over the history.
    Mean,
}

/// Distance metric between embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoutingMetric {
    #[default]
    Euclidean,
    /// Mahalanobis distance under the pooled covariance of all peer
    /// histories. Experimental alternative, off by default.
    Mahalanobis,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct RoutingOptions {
    pub aggregate: DistanceAggregate,
    pub metric: RoutingMetric,
}

/// Item-to-peer assignment; every input item index appears exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkAssignment {
    pub assignments: BTreeMap<u64, Vec<usize>>,
}

impl WorkAssignment {
    pub fn items_of(&self, peer_id: u64) -> &[usize] {
        self.assignments
            .get(&peer_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn total_items(&self) -> usize {
        self.assignments.values().map(Vec::len).sum()
    }
}

/// Routes each item to the peer with the minimum aggregated distance between
/// the item's embedding and that peer's history.
///
/// Peers with empty histories sit at infinite distance; distance ties break
/// to the lowest peer id. When every peer history is empty the items are
/// assigned round-robin by index over ascending peer ids.
pub fn distribute_work(
    item_embeddings: &[Embedding],
    peers: &[PeerHistory],
) -> Result<WorkAssignment, RoutingError> {
    distribute_work_with(item_embeddings, peers, &RoutingOptions::default())
}

pub fn distribute_work_with(
    item_embeddings: &[Embedding],
    peers: &[PeerHistory],
    options: &RoutingOptions,
) -> Result<WorkAssignment, RoutingError> {
    if peers.is_empty() {
        return Err(RoutingError::NoPeers);
    }
    let mut assignments: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for peer in peers {
        if assignments.insert(peer.peer_id, Vec::new()).is_some() {
            return Err(RoutingError::DuplicatePeerId(peer.peer_id));
        }
    }

    let all_empty = peers.iter().all(|p| p.previous_embeddings.is_empty());
    if all_empty {
        let mut ids: Vec<u64> = peers.iter().map(|p| p.peer_id).collect();
        ids.sort_unstable();
        for (idx, item) in item_embeddings.iter().enumerate() {
            item.validate()?;
            assignments
                .get_mut(&ids[idx % ids.len()])
                .expect("id present")
                .push(idx);
        }
        return Ok(WorkAssignment { assignments });
    }

    let metric = build_metric(item_embeddings, peers, options)?;

    let mut order: Vec<&PeerHistory> = peers.iter().collect();
    order.sort_by_key(|p| p.peer_id);

    for (idx, item) in item_embeddings.iter().enumerate() {
        item.validate()?;
        let mut best: Option<(f64, u64)> = None;
        for peer in &order {
            let d = peer_distance(item, peer, options.aggregate, &metric)?;
            let closer = match best {
                None => d.is_finite(),
                Some((best_d, _)) => d < best_d,
            };
            if closer {
                best = Some((d, peer.peer_id));
            }
        }
        let (_, winner) = best.expect("at least one peer has history");
        assignments.get_mut(&winner).expect("id present").push(idx);
    }
    Ok(WorkAssignment { assignments })
}

enum Metric {
    Euclidean,
    Mahalanobis { inverse: Vec<Vec<f64>> },
}

fn build_metric(
    items: &[Embedding],
    peers: &[PeerHistory],
    options: &RoutingOptions,
) -> Result<Metric, RoutingError> {
    match options.metric {
        RoutingMetric::Euclidean => Ok(Metric::Euclidean),
        RoutingMetric::Mahalanobis => {
            let pooled: Vec<Embedding> = peers
                .iter()
                .flat_map(|p| p.previous_embeddings.iter().cloned())
                .collect();
            let _ = items;
            let cov = covariance_matrix(&pooled)?;
            let inverse = invert_ridged(cov)?;
            Ok(Metric::Mahalanobis { inverse })
        }
    }
}

fn metric_distance(metric: &Metric, a: &Embedding, b: &Embedding) -> Result<f64, RoutingError> {
    match metric {
        Metric::Euclidean => a.euclidean(b),
        Metric::Mahalanobis { inverse } => {
            if a.dim() != b.dim() || a.dim() != inverse.len() {
                return Err(RoutingError::DimensionMismatch {
                    expected: inverse.len(),
                    got: a.dim().max(b.dim()),
                });
            }
            let diff: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
            let mut quad = 0.0;
            for (i, di) in diff.iter().enumerate() {
                for (j, dj) in diff.iter().enumerate() {
                    quad += di * inverse[i][j] * dj;
                }
            }
            Ok(quad.max(0.0).sqrt())
        }
    }
}

fn peer_distance(
    item: &Embedding,
    peer: &PeerHistory,
    aggregate: DistanceAggregate,
    metric: &Metric,
) -> Result<f64, RoutingError> {
    if peer.previous_embeddings.is_empty() {
        return Ok(f64::INFINITY);
    }
    let mut min = f64::INFINITY;
    let mut sum = 0.0;
    for prev in &peer.previous_embeddings {
        prev.validate()?;
        let d = metric_distance(metric, item, prev)?;
        min = min.min(d);
        sum += d;
    }
    Ok(match aggregate {
        DistanceAggregate::Min => min,
        DistanceAggregate::Mean => sum / peer.previous_embeddings.len() as f64,
    })
}

/// Gauss-Jordan inverse with a small ridge added to the diagonal when the
/// plain matrix is singular.
fn invert_ridged(mut m: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, RoutingError> {
    let d = m.len();
    let trace: f64 = (0..d).map(|i| m[i][i]).sum();
    let ridge = (trace / d as f64).max(1e-12) * 1e-9;
    for i in 0..d {
        m[i][i] += ridge;
    }
    let mut inv: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..d {
        let pivot_row = (col..d)
            .max_by(|&a, &b| {
                m[a][col]
                    .abs()
                    .partial_cmp(&m[b][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if m[pivot_row][col].abs() < 1e-300 {
            return Err(RoutingError::SingularCovariance);
        }
        m.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let pivot = m[col][col];
        for j in 0..d {
            m[col][j] /= pivot;
            inv[col][j] /= pivot;
        }
        for row in 0..d {
            if row != col {
                let factor = m[row][col];
                if factor != 0.0 {
                    for j in 0..d {
                        m[row][j] -= factor * m[col][j];
                        inv[row][j] -= factor * inv[col][j];
                    }
                }
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(values: &[f64]) -> Embedding {
        Embedding(values.to_vec())
    }

    #[test]
    fn radius_pythagorean() {
        let distances = embedding_radius(&emb(&[0.0, 0.0]), &[emb(&[3.0, 4.0])]).unwrap();
        assert_eq!(distances, vec![5.0]);
    }

    #[test]
    fn radius_zero_for_identical() {
        let history = vec![emb(&[1.0, 2.0]), emb(&[0.5, 0.5])];
        let distances = embedding_radius(&emb(&[0.5, 0.5]), &history).unwrap();
        assert_eq!(distances[1], 0.0);
    }

    #[test]
    fn radius_errors() {
        assert_eq!(
            embedding_radius(&emb(&[0.0]), &[]),
            Err(RoutingError::EmptyHistory)
        );
        assert!(matches!(
            embedding_radius(&emb(&[0.0]), &[emb(&[0.0, 1.0])]),
            Err(RoutingError::DimensionMismatch { .. })
        ));
        assert_eq!(
            embedding_radius(&emb(&[f64::NAN]), &[emb(&[0.0])]),
            Err(RoutingError::NonFinite)
        );
    }

    #[test]
    fn covariance_hand_computed() {
        let cov = covariance_matrix(&[emb(&[0.0, 0.0]), emb(&[1.0, 1.0])]).unwrap();
        assert_eq!(cov, vec![vec![0.5, 0.5], vec![0.5, 0.5]]);

        let same = covariance_matrix(&vec![emb(&[2.0, 3.0]); 4]).unwrap();
        assert_eq!(same, vec![vec![0.0, 0.0], vec![0.0, 0.0]]);

        assert!(covariance_matrix(&[emb(&[1.0])]).is_err());
    }

    #[test]
    fn single_peer_takes_everything() {
        let peers = vec![PeerHistory {
            peer_id: 9,
            previous_embeddings: vec![emb(&[0.0, 0.0])],
        }];
        let items = vec![emb(&[1.0, 1.0]), emb(&[5.0, 5.0])];
        let assignment = distribute_work(&items, &peers).unwrap();
        assert_eq!(assignment.items_of(9), &[0, 1]);
    }

    #[test]
    fn closest_history_wins() {
        let peers = vec![
            PeerHistory {
                peer_id: 1,
                previous_embeddings: vec![emb(&[1.0, 0.0])],
            },
            PeerHistory {
                peer_id: 2,
                previous_embeddings: vec![emb(&[5.0, 0.0])],
            },
        ];
        let assignment = distribute_work(&[emb(&[0.0, 0.0])], &peers).unwrap();
        assert_eq!(assignment.items_of(1), &[0]);
        assert!(assignment.items_of(2).is_empty());
    }

    #[test]
    fn equidistant_tie_breaks_to_lower_id() {
        let peers = vec![
            PeerHistory {
                peer_id: 7,
                previous_embeddings: vec![emb(&[1.0, 0.0])],
            },
            PeerHistory {
                peer_id: 3,
                previous_embeddings: vec![emb(&[-1.0, 0.0])],
            },
        ];
        let assignment = distribute_work(&[emb(&[0.0, 0.0])], &peers).unwrap();
        assert_eq!(assignment.items_of(3), &[0]);
    }

    #[test]
    fn empty_history_peer_is_skipped() {
        let peers = vec![
            PeerHistory {
                peer_id: 1,
                previous_embeddings: vec![emb(&[10.0])],
            },
            PeerHistory {
                peer_id: 0,
                previous_embeddings: vec![],
            },
        ];
        let assignment = distribute_work(&[emb(&[0.0])], &peers).unwrap();
        assert_eq!(assignment.items_of(1), &[0]);
        assert!(assignment.items_of(0).is_empty());
    }

    #[test]
    fn all_empty_histories_round_robin() {
        let peers = vec![
            PeerHistory {
                peer_id: 5,
                previous_embeddings: vec![],
            },
            PeerHistory {
                peer_id: 2,
                previous_embeddings: vec![],
            },
        ];
        let items = vec![emb(&[0.0]), emb(&[1.0]), emb(&[2.0])];
        let assignment = distribute_work(&items, &peers).unwrap();
        assert_eq!(assignment.items_of(2), &[0, 2]);
        assert_eq!(assignment.items_of(5), &[1]);
    }

    #[test]
    fn rejects_bad_peer_sets() {
        assert_eq!(distribute_work(&[], &[]), Err(RoutingError::NoPeers));
        let dup = vec![
            PeerHistory {
                peer_id: 1,
                previous_embeddings: vec![],
            },
            PeerHistory {
                peer_id: 1,
                previous_embeddings: vec![],
            },
        ];
        assert_eq!(
            distribute_work(&[], &dup),
            Err(RoutingError::DuplicatePeerId(1))
        );
    }

    #[test]
    fn mean_aggregate_changes_choice() {
        // Peer 1 has one very close and one very far embedding; peer 2 is
        // moderately close twice. Min prefers peer 1, mean prefers peer 2.
        let peers = vec![
            PeerHistory {
                peer_id: 1,
                previous_embeddings: vec![emb(&[0.1]), emb(&[100.0])],
            },
            PeerHistory {
                peer_id: 2,
                previous_embeddings: vec![emb(&[1.0]), emb(&[1.5])],
            },
        ];
        let item = [emb(&[0.0])];
        let min_pick = distribute_work(&item, &peers).unwrap();
        assert_eq!(min_pick.items_of(1), &[0]);
        let mean_pick = distribute_work_with(
            &item,
            &peers,
            &RoutingOptions {
                aggregate: DistanceAggregate::Mean,
                metric: RoutingMetric::Euclidean,
            },
        )
        .unwrap();
        assert_eq!(mean_pick.items_of(2), &[0]);
    }

    #[test]
    fn mahalanobis_mode_runs() {
        let peers = vec![
            PeerHistory {
                peer_id: 1,
                previous_embeddings: vec![emb(&[0.0, 0.0]), emb(&[1.0, 0.2]), emb(&[2.0, -0.1])],
            },
            PeerHistory {
                peer_id: 2,
                previous_embeddings: vec![emb(&[10.0, 5.0]), emb(&[11.0, 5.5])],
            },
        ];
        let assignment = distribute_work_with(
            &[emb(&[0.5, 0.1]), emb(&[10.5, 5.2])],
            &peers,
            &RoutingOptions {
                aggregate: DistanceAggregate::Min,
                metric: RoutingMetric::Mahalanobis,
            },
        )
        .unwrap();
        assert_eq!(assignment.items_of(1), &[0]);
        assert_eq!(assignment.items_of(2), &[1]);
    }
}
