//! `route`: nearest-peer assignment of work items from CSV/JSON inputs.

use std::path::PathBuf;

use basedlab_core::defaults;
use basedlab_core::routing::{
    covariance_matrix, distribute_work_with, embedding_radius, DistanceAggregate, Embedding,
    PeerHistory, RoutingMetric, RoutingOptions,
};
use serde::Deserialize;
use serde_json::json;

use crate::errors::{AppError, AppResult};
use crate::io;
use crate::OutputFormat;

#[derive(Debug, Deserialize)]
struct PeerFile {
    peer_id: u64,
    #[serde(default)]
    previous_embeddings: Vec<Vec<f64>>,
}

pub struct RouteArgs {
    pub items: PathBuf,
    pub peers: PathBuf,
    pub aggregate: DistanceAggregate,
    pub metric: RoutingMetric,
    pub covariance: bool,
    pub radii: bool,
    pub output: Option<PathBuf>,
}

pub fn run(args: RouteArgs, format: OutputFormat) -> AppResult<String> {
    let items_matrix = io::read_matrix(&args.items)?;
    let items: Vec<Embedding> = (0..items_matrix.n_rows())
        .map(|i| Embedding(items_matrix.row(i).to_vec()))
        .collect();
    let peer_files: Vec<PeerFile> = io::read_json(&args.peers)?;
    let peers: Vec<PeerHistory> = peer_files
        .into_iter()
        .map(|p| PeerHistory {
            peer_id: p.peer_id,
            previous_embeddings: p.previous_embeddings.into_iter().map(Embedding).collect(),
        })
        .collect();

    let options = RoutingOptions {
        aggregate: args.aggregate,
        metric: args.metric,
    };
    let assignment =
        distribute_work_with(&items, &peers, &options).map_err(AppError::validation)?;

    let covariance = if args.covariance {
        Some(covariance_matrix(&items).map_err(AppError::validation)?)
    } else {
        None
    };

    // Per-item distance vectors to each peer's history, when asked.
    let radii = if args.radii {
        let mut all = Vec::new();
        for item in &items {
            let mut per_peer = serde_json::Map::new();
            for peer in &peers {
                if peer.previous_embeddings.is_empty() {
                    continue;
                }
                let distances = embedding_radius(item, &peer.previous_embeddings)
                    .map_err(AppError::validation)?;
                per_peer.insert(peer.peer_id.to_string(), json!(distances));
            }
            all.push(serde_json::Value::Object(per_peer));
        }
        Some(all)
    } else {
        None
    };

    let body = json!({
        "defaults": defaults::provenance_line(),
        "items": items.len(),
        "aggregate": options.aggregate,
        "metric": options.metric,
        "assignments": assignment.assignments,
        "covariance": covariance,
        "radii": radii,
    });
    let rendered = serde_json::to_string_pretty(&body).expect("json");
    if let Some(path) = &args.output {
        std::fs::write(path, &rendered)?;
    }
    match format {
        OutputFormat::Json | OutputFormat::Csv => Ok(rendered),
        OutputFormat::Text => {
            let mut out = format!("# {}\n", defaults::provenance_line());
            for (peer, indices) in &assignment.assignments {
                out.push_str(&format!("peer {peer}: {} item(s) {indices:?}\n", indices.len()));
            }
            Ok(out)
        }
    }
}
