//! The two link-prediction protocols: edges of held-out isolated nodes, and
//! held-out edges of the observed graph.

use std::fmt;
use std::str::FromStr;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::numeric::Matrix;

pub type Pair = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Predict every edge touching nodes that were absent during training.
    NewNodes,
    /// Predict edges removed from the training graph.
    ObservedGraph,
}

impl Task {
    pub fn tag(self) -> &'static str {
        match self {
            Task::NewNodes => "new_nodes",
            Task::ObservedGraph => "observed_graph",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "new_nodes" => Ok(Task::NewNodes),
            "observed_graph" => Ok(Task::ObservedGraph),
            _ => Err(Error::contract(format!("unknown task {s:?}"))),
        }
    }
}

/// Training graph plus labelled query pairs. Pairs use node ids of the full
/// graph with `u < v`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSplit {
    pub task: Task,
    /// Full-graph ids of the training nodes; node `k` of `observed` is
    /// `observed_nodes[k]`. Sorted ascending.
    pub observed_nodes: Vec<usize>,
    pub observed: Graph,
    pub full_features: Matrix,
    pub val_pos: Vec<Pair>,
    pub val_neg: Vec<Pair>,
    pub test_pos: Vec<Pair>,
    pub test_neg: Vec<Pair>,
}

impl EvalSplit {
    pub fn n_full(&self) -> usize {
        self.full_features.rows()
    }

    /// Full-graph ids absent from the training graph, ascending.
    pub fn hidden_nodes(&self) -> Vec<usize> {
        let mut observed = vec![false; self.n_full()];
        for &v in &self.observed_nodes {
            observed[v] = true;
        }
        (0..self.n_full()).filter(|&v| !observed[v]).collect()
    }

    pub fn query_pos(&self) -> Vec<Pair> {
        self.val_pos.iter().chain(&self.test_pos).copied().collect()
    }

    pub fn query_neg(&self) -> Vec<Pair> {
        self.val_neg.iter().chain(&self.test_neg).copied().collect()
    }

    /// Training edges in full-graph ids.
    pub fn observed_edges(&self) -> Vec<Pair> {
        self.observed
            .edges()
            .into_iter()
            .map(|(u, v)| (self.observed_nodes[u], self.observed_nodes[v]))
            .collect()
    }

    pub fn to_manifest(&self) -> SplitManifest {
        SplitManifest {
            task: self.task,
            n: self.n_full(),
            observed_nodes: self.observed_nodes.clone(),
            observed_edges: self.observed_edges(),
            val_pos: self.val_pos.clone(),
            val_neg: self.val_neg.clone(),
            test_pos: self.test_pos.clone(),
            test_neg: self.test_neg.clone(),
        }
    }

    /// Rebuilds a split from its manifest and the full dataset features.
    pub fn from_manifest(m: &SplitManifest, full_features: Matrix) -> Result<Self> {
        if full_features.rows() != m.n {
            return Err(Error::contract(format!(
                "split manifest covers {} nodes but the dataset has {}",
                m.n,
                full_features.rows()
            )));
        }
        let mut local = vec![usize::MAX; m.n];
        for (k, &v) in m.observed_nodes.iter().enumerate() {
            if v >= m.n {
                return Err(Error::contract(format!("observed node {v} out of range")));
            }
            local[v] = k;
        }
        let edges = m
            .observed_edges
            .iter()
            .map(|&(u, v)| match (local.get(u), local.get(v)) {
                (Some(&a), Some(&b)) if a != usize::MAX && b != usize::MAX => Ok((a, b)),
                _ => Err(Error::contract(format!(
                    "observed edge ({u},{v}) leaves the observed nodes"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let observed = Graph::from_edges(
            m.observed_nodes.len(),
            &edges,
            full_features.select_rows(&m.observed_nodes),
        )?;
        Ok(EvalSplit {
            task: m.task,
            observed_nodes: m.observed_nodes.clone(),
            observed,
            full_features,
            val_pos: m.val_pos.clone(),
            val_neg: m.val_neg.clone(),
            test_pos: m.test_pos.clone(),
            test_neg: m.test_neg.clone(),
        })
    }
}

/// Serialisable form of an [`EvalSplit`], without the feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub task: Task,
    pub n: usize,
    pub observed_nodes: Vec<usize>,
    pub observed_edges: Vec<Pair>,
    pub val_pos: Vec<Pair>,
    pub val_neg: Vec<Pair>,
    pub test_pos: Vec<Pair>,
    pub test_neg: Vec<Pair>,
}

fn ordered((u, v): Pair) -> Pair {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Samples `count` distinct pairs from `candidates` without replacement.
fn sample_pairs<R: Rng + ?Sized>(candidates: impl Iterator<Item = Pair>, count: usize, rng: &mut R) -> Vec<Pair> {
    let mut picked = candidates.choose_multiple(rng, count);
    picked.shuffle(rng);
    picked
}

/// Keeps a uniform `frac_observed` share of the nodes as the training graph;
/// every edge touching a left-out node is a positive query, matched by as
/// many unconnected pairs that also touch a left-out node. Queries are split
/// evenly between validation and test.
pub fn make_newnode_split<R: Rng + ?Sized>(g: &Graph, frac_observed: f64, rng: &mut R) -> Result<EvalSplit> {
    if !(frac_observed > 0.0 && frac_observed < 1.0) {
        return Err(Error::contract(format!(
            "observed fraction must lie strictly between 0 and 1, got {frac_observed}"
        )));
    }
    let n = g.n();
    let n_obs = (frac_observed * n as f64).round() as usize;
    if n_obs == 0 || n_obs >= n {
        return Err(Error::contract(format!(
            "observing {n_obs} of {n} nodes leaves no observed or no new nodes"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut observed_nodes = perm[..n_obs].to_vec();
    observed_nodes.sort_unstable();
    let mut is_obs = vec![false; n];
    for &v in &observed_nodes {
        is_obs[v] = true;
    }

    let touches_hidden = |(u, v): Pair| !is_obs[u] || !is_obs[v];
    let mut positives: Vec<Pair> = g.edges().into_iter().filter(|&p| touches_hidden(p)).collect();
    if positives.len() < 2 {
        return Err(Error::contract(format!(
            "only {} edges touch the new nodes; use a denser graph or a smaller observed fraction",
            positives.len()
        )));
    }
    let candidates = (0..n)
        .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
        .filter(|&p| touches_hidden(p) && !g.has_edge(p.0, p.1));
    let mut negatives = sample_pairs(candidates, positives.len(), rng);
    if negatives.len() < positives.len() {
        return Err(Error::contract(format!(
            "{} positive pairs but only {} unconnected pairs touch the new nodes",
            positives.len(),
            negatives.len()
        )));
    }
    positives.shuffle(rng);

    let (val_pos, test_pos) = halve(positives);
    let (val_neg, test_neg) = halve(std::mem::take(&mut negatives));
    Ok(EvalSplit {
        task: Task::NewNodes,
        observed: g.induced_subgraph(&observed_nodes),
        observed_nodes,
        full_features: g.features().clone(),
        val_pos,
        val_neg,
        test_pos,
        test_neg,
    })
}

fn halve(mut v: Vec<Pair>) -> (Vec<Pair>, Vec<Pair>) {
    let test = v.split_off(v.len() / 2);
    (v, test)
}

/// Removes `⌊val_frac·E⌋` and `⌊test_frac·E⌋` uniformly chosen edges from the
/// training graph and pairs each set with as many sampled non-edges.
pub fn make_observed_split<R: Rng + ?Sized>(
    g: &Graph,
    val_frac: f64,
    test_frac: f64,
    rng: &mut R,
) -> Result<EvalSplit> {
    if !(val_frac >= 0.0 && test_frac >= 0.0 && val_frac + test_frac < 1.0) {
        return Err(Error::contract(format!(
            "edge fractions must be non-negative and sum below 1, got {val_frac} + {test_frac}"
        )));
    }
    let mut edges = g.edges();
    let e = edges.len() as f64;
    let n_val = (e * val_frac + 1e-9).floor() as usize;
    let n_test = (e * test_frac + 1e-9).floor() as usize;
    if (val_frac > 0.0 && n_val == 0) || (test_frac > 0.0 && n_test == 0) {
        return Err(Error::contract(format!(
            "{} edges are not enough to hold out {val_frac} and {test_frac} of them",
            edges.len()
        )));
    }
    edges.shuffle(rng);
    let test_pos = edges[..n_test].to_vec();
    let val_pos = edges[n_test..n_test + n_val].to_vec();
    let kept = &edges[n_test + n_val..];

    let n = g.n();
    let candidates = (0..n)
        .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
        .filter(|&(u, v)| !g.has_edge(u, v));
    let mut negatives = sample_pairs(candidates, n_val + n_test, rng);
    if negatives.len() < n_val + n_test {
        return Err(Error::contract("not enough unconnected pairs for negative queries"));
    }
    let test_neg = negatives.split_off(n_val);
    let val_neg = negatives;

    let mut kept: Vec<Pair> = kept.iter().copied().map(ordered).collect();
    kept.sort_unstable();
    Ok(EvalSplit {
        task: Task::ObservedGraph,
        observed_nodes: (0..n).collect(),
        observed: g.with_edges(&kept)?,
        full_features: g.features().clone(),
        val_pos,
        val_neg,
        test_pos,
        test_neg,
    })
}
