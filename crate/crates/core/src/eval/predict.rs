use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{EvalSplit, Metrics, Pair, Task};
use crate::graph::{build_candidate, normalize_adjacency, with_self_loops, SelfLoops};
use crate::model::{edge_prob, encode_dense, ModelParams, ModelVariant};
use crate::numeric::Matrix;

/// Deterministic latent means for every node of the full graph, indexed by
/// full-graph id.
///
/// New nodes enter through a candidate adjacency with zero fill
/// probability: they keep only their self-loop, so their codes come from
/// their attributes alone.
pub fn embed_full_graph(
    params: &ModelParams,
    variant: ModelVariant,
    split: &EvalSplit,
    self_loops: SelfLoops,
) -> Result<Matrix> {
    if params.dims().input != split.full_features.cols() {
        return Err(Error::Dimension {
            op: "predict_links",
            left: params.w0.shape(),
            right: split.full_features.shape(),
        });
    }
    let hidden = split.hidden_nodes();
    let layout: Vec<usize> = split.observed_nodes.iter().chain(&hidden).copied().collect();

    let operator = if variant.uses_adjacency() {
        let base = if hidden.is_empty() {
            match self_loops {
                SelfLoops::All => with_self_loops(split.observed.adjacency()),
                SelfLoops::NewOnly => split.observed.adjacency().clone(),
            }
        } else {
            // p̃ = 0 never consults the generator.
            let mut unused = rand::rngs::mock::StepRng::new(0, 0);
            build_candidate(split.observed.adjacency(), hidden.len(), 0.0, &mut unused)?.with_self_loops(self_loops)
        };
        Some(normalize_adjacency(&base)?.into_matrix())
    } else {
        None
    };
    let features = split.full_features.select_rows(&layout);
    let latent = encode_dense(operator.as_ref(), &features, params)?;

    let mut z = Matrix::zeros(split.n_full(), latent.latent_dim());
    for (k, &v) in layout.iter().enumerate() {
        z.row_mut(v).copy_from_slice(latent.mean.row(k));
    }
    Ok(z)
}

/// Scores for the four query sets of a split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScores {
    pub val_pos: Vec<f64>,
    pub val_neg: Vec<f64>,
    pub test_pos: Vec<f64>,
    pub test_neg: Vec<f64>,
}

pub fn score_pairs(z: &Matrix, pairs: &[Pair]) -> Vec<f64> {
    pairs.iter().map(|&(u, v)| edge_prob(z, u, v)).collect()
}

/// Edge probabilities for every query pair, decoded from mean embeddings.
pub fn predict_links(
    params: &ModelParams,
    variant: ModelVariant,
    split: &EvalSplit,
    self_loops: SelfLoops,
) -> Result<PairScores> {
    let z = embed_full_graph(params, variant, split, self_loops)?;
    Ok(PairScores {
        val_pos: score_pairs(&z, &split.val_pos),
        val_neg: score_pairs(&z, &split.val_neg),
        test_pos: score_pairs(&z, &split.test_pos),
        test_neg: score_pairs(&z, &split.test_neg),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub val: Option<Metrics>,
    pub test: Metrics,
}

/// Test metrics, plus validation metrics when the split has validation
/// queries of both classes.
pub fn evaluate(
    params: &ModelParams,
    variant: ModelVariant,
    split: &EvalSplit,
    self_loops: SelfLoops,
) -> Result<EvalReport> {
    let s = predict_links(params, variant, split, self_loops)?;
    let val = Metrics::from_scores(&s.val_pos, &s.val_neg).ok();
    let test = Metrics::from_scores(&s.test_pos, &s.test_neg)?;
    Ok(EvalReport { val, test })
}

/// The metrics document written by the command-line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub task: Task,
    pub variant: ModelVariant,
    pub auc: f64,
    pub ap: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<Metrics>,
    #[serde(default)]
    pub config: serde_json::Value,
}

impl MetricsDocument {
    pub fn new(task: Task, variant: ModelVariant, report: &EvalReport, seed: u64, config: serde_json::Value) -> Self {
        MetricsDocument {
            task,
            variant,
            auc: report.test.auc,
            ap: report.test.ap,
            n_pos: report.test.n_pos,
            n_neg: report.test.n_neg,
            seed,
            validation: report.val,
            config,
        }
    }
}
