//! Link-prediction splits, scoring with zero-fill candidate adjacency, and
//! AUC / AP metrics.

mod metrics;
mod predict;
mod split;

pub use metrics::{auc, average_precision, Metrics};
pub use predict::{embed_full_graph, evaluate, predict_links, score_pairs, EvalReport, MetricsDocument, PairScores};
pub use split::{make_newnode_split, make_observed_split, EvalSplit, Pair, SplitManifest, Task};
