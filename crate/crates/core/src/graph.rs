//! Graphs, node orderings, growth schedules and the adjacency operators the
//! encoder consumes.
//!
//! A growing graph is replayed as a sequence: nodes are visited in a sampled
//! [`NodeOrdering`], split into contiguous batches by a [`GrowthSchedule`],
//! and each incoming batch is attached to the nodes seen so far through a
//! [`CandidateAdjacency`] in which every new node is linked to every earlier
//! node (and to the other new nodes) independently with probability `p̃`.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Undirected graph with a dense binary adjacency and one attribute row per
/// node.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Matrix,
    features: Matrix,
}

impl Graph {
    /// Validates symmetry, zero diagonal, binary entries and feature rows.
    pub fn new(adjacency: Matrix, features: Matrix) -> Result<Self> {
        let n = adjacency.rows();
        if adjacency.cols() != n {
            return Err(Error::contract(format!(
                "adjacency must be square, got {}x{}",
                n,
                adjacency.cols()
            )));
        }
        if features.rows() != n {
            return Err(Error::Dimension {
                op: "graph",
                left: adjacency.shape(),
                right: features.shape(),
            });
        }
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::contract(format!("self-loop on node {i}")));
            }
            for j in 0..i {
                let a = adjacency[(i, j)];
                if a != 0.0 && a != 1.0 {
                    return Err(Error::contract(format!("non-binary adjacency entry ({i},{j}) = {a}")));
                }
                if a != adjacency[(j, i)] {
                    return Err(Error::contract(format!("asymmetric adjacency at ({i},{j})")));
                }
            }
        }
        Ok(Graph { adjacency, features })
    }

    /// Builds a graph from undirected edges; duplicates collapse, self-loops
    /// are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], features: Matrix) -> Result<Self> {
        let mut adjacency = Matrix::zeros(n, n);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::contract(format!("edge ({u},{v}) out of range for {n} nodes")));
            }
            if u == v {
                return Err(Error::contract(format!("self-loop on node {u}")));
            }
            adjacency[(u, v)] = 1.0;
            adjacency[(v, u)] = 1.0;
        }
        Graph::new(adjacency, features)
    }

    pub fn n(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[(u, v)] != 0.0
    }

    /// Edges as `(u, v)` with `u < v`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        (self.adjacency.sum() / 2.0).round() as usize
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n())
            .map(|i| self.adjacency.row(i).iter().filter(|&&a| a != 0.0).count())
            .collect()
    }

    /// Fraction of node pairs that are connected.
    pub fn density(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        self.edge_count() as f64 / (n * (n - 1) / 2) as f64
    }

    /// Induced subgraph on `nodes`; node `k` of the result is `nodes[k]`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        Graph {
            adjacency: self.adjacency.select_square(nodes),
            features: self.features.select_rows(nodes),
        }
    }

    /// Same nodes and features, different edge set.
    pub fn with_edges(&self, edges: &[(usize, usize)]) -> Result<Graph> {
        Graph::from_edges(self.n(), edges, self.features.clone())
    }
}

/// A permutation of `0..n`. Node `i` of a graph is moved to position `pi[i]`
/// by [`apply_ordering`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeOrdering(Vec<usize>);

impl NodeOrdering {
    pub fn new(pi: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; pi.len()];
        for &p in &pi {
            if p >= pi.len() || seen[p] {
                return Err(Error::contract(format!("{pi:?} is not a permutation")));
            }
            seen[p] = true;
        }
        Ok(NodeOrdering(pi))
    }

    pub fn identity(n: usize) -> Self {
        NodeOrdering((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> NodeOrdering {
        let mut inv = vec![0; self.0.len()];
        for (i, &p) in self.0.iter().enumerate() {
            inv[p] = i;
        }
        NodeOrdering(inv)
    }

    /// Node ids listed by position: entry `k` is the node placed at
    /// position `k`.
    pub fn sequence(&self) -> Vec<usize> {
        self.inverse().0
    }
}

/// Uniformly random permutation of `0..n` (Fisher–Yates).
pub fn sample_ordering<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<NodeOrdering> {
    if n == 0 {
        return Err(Error::contract("cannot order an empty node set"));
    }
    let mut pi: Vec<usize> = (0..n).collect();
    pi.shuffle(rng);
    Ok(NodeOrdering(pi))
}

/// Relabels nodes so that node `i` becomes node `pi[i]`; adjacency rows and
/// columns and feature rows move together.
pub fn apply_ordering(g: &Graph, pi: &NodeOrdering) -> Result<Graph> {
    if pi.len() != g.n() {
        return Err(Error::contract(format!(
            "ordering of length {} applied to graph with {} nodes",
            pi.len(),
            g.n()
        )));
    }
    let seq = pi.sequence();
    Ok(g.induced_subgraph(&seq))
}

/// Contiguous batches of ordering positions. The first batch is the seed
/// subgraph; each later batch is one growth transition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthSchedule {
    batches: Vec<Range<usize>>,
}

impl GrowthSchedule {
    pub fn batches(&self) -> &[Range<usize>] {
        &self.batches
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.batches.iter().map(|b| b.len()).collect()
    }

    pub fn num_transitions(&self) -> usize {
        self.batches.len() - 1
    }
}

/// Splits `n` positions into `num_batches` contiguous batches whose sizes
/// differ by at most one, larger batches first.
pub fn build_schedule(n: usize, num_batches: usize) -> Result<GrowthSchedule> {
    if num_batches == 0 || num_batches > n {
        return Err(Error::contract(format!(
            "cannot split {n} nodes into {num_batches} non-empty batches"
        )));
    }
    let base = n / num_batches;
    let extra = n % num_batches;
    let mut batches = Vec::with_capacity(num_batches);
    let mut start = 0;
    for b in 0..num_batches {
        let len = base + usize::from(b < extra);
        batches.push(start..start + len);
        start += len;
    }
    Ok(GrowthSchedule { batches })
}

/// Which diagonal entries are set before normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfLoops {
    /// Every node gets a self-loop.
    #[default]
    All,
    /// Only nodes introduced by the current candidate matrix.
    NewOnly,
}

/// Observed adjacency over `n_old` nodes extended by `n_new` nodes whose
/// edges are Bernoulli(`p_tilde`) fills.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateAdjacency {
    matrix: Matrix,
    n_old: usize,
    p_tilde: f64,
}

impl CandidateAdjacency {
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn n_old(&self) -> usize {
        self.n_old
    }

    pub fn n_new(&self) -> usize {
        self.matrix.rows() - self.n_old
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn p_tilde(&self) -> f64 {
        self.p_tilde
    }

    /// The matrix that gets normalised: new-node diagonals are already set;
    /// [`SelfLoops::All`] also sets the old ones.
    pub fn with_self_loops(&self, policy: SelfLoops) -> Matrix {
        let mut m = self.matrix.clone();
        if policy == SelfLoops::All {
            for i in 0..self.n_old {
                m[(i, i)] = 1.0;
            }
        }
        m
    }
}

/// Attaches `n_new` nodes to the observed adjacency `a_obs`.
///
/// Old–new and new–new pairs are filled independently with probability
/// `p_tilde`; one uniform draw is consumed per such pair regardless of
/// `p_tilde`, so the stream position depends only on the sizes.
pub fn build_candidate<R: Rng + ?Sized>(
    a_obs: &Matrix,
    n_new: usize,
    p_tilde: f64,
    rng: &mut R,
) -> Result<CandidateAdjacency> {
    if !(0.0..=1.0).contains(&p_tilde) {
        return Err(Error::contract(format!("p_tilde must lie in [0, 1], got {p_tilde}")));
    }
    if n_new == 0 {
        return Err(Error::contract("candidate matrix needs at least one new node"));
    }
    if a_obs.rows() != a_obs.cols() {
        return Err(Error::contract("observed adjacency must be square"));
    }
    let t = a_obs.rows();
    let size = t + n_new;
    let mut m = Matrix::zeros(size, size);
    for i in 0..t {
        m.row_mut(i)[..t].copy_from_slice(a_obs.row(i));
    }
    for j in t..size {
        m[(j, j)] = 1.0;
        for i in 0..j {
            if rng.gen::<f64>() < p_tilde {
                m[(i, j)] = 1.0;
                m[(j, i)] = 1.0;
            }
        }
    }
    Ok(CandidateAdjacency {
        matrix: m,
        n_old: t,
        p_tilde,
    })
}

/// `D^{-1/2} A D^{-1/2}` for a base matrix that already carries its
/// self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    matrix: Matrix,
    degrees: Vec<usize>,
}

impl NormalizedAdjacency {
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }
}

pub fn normalize_adjacency(base: &Matrix) -> Result<NormalizedAdjacency> {
    let n = base.rows();
    if base.cols() != n {
        return Err(Error::contract("adjacency must be square"));
    }
    let degrees: Vec<usize> = (0..n)
        .map(|i| base.row(i).iter().filter(|&&a| a != 0.0).count())
        .collect();
    if let Some(i) = degrees.iter().position(|&d| d == 0) {
        return Err(Error::contract(format!(
            "node {i} has zero degree; add a self-loop before normalising"
        )));
    }
    let matrix = Matrix::from_fn(n, n, |i, j| {
        let a = base[(i, j)];
        if a == 0.0 {
            0.0
        } else {
            a / ((degrees[i] * degrees[j]) as f64).sqrt()
        }
    });
    Ok(NormalizedAdjacency { matrix, degrees })
}

/// Adjacency plus the identity.
pub fn with_self_loops(adjacency: &Matrix) -> Matrix {
    let mut m = adjacency.clone();
    for i in 0..m.rows() {
        m[(i, i)] = 1.0;
    }
    m
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn path3() -> Matrix {
        Matrix::from_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    }

    #[test]
    fn normalize_two_connected_nodes() {
        let n = normalize_adjacency(&Matrix::filled(2, 2, 1.0)).unwrap();
        assert_eq!(n.matrix(), &Matrix::filled(2, 2, 0.5));
    }

    #[test]
    fn normalize_isolated_node() {
        let n = normalize_adjacency(&Matrix::identity(1)).unwrap();
        assert_eq!(n.matrix()[(0, 0)], 1.0);
    }

    #[test]
    fn normalize_path() {
        let n = normalize_adjacency(&with_self_loops(&path3())).unwrap();
        assert!((n.matrix()[(0, 1)] - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!((n.matrix()[(0, 1)] - 0.40825).abs() < 1e-5);
        assert_eq!(n.degrees(), &[2, 3, 2]);
        assert!(n.matrix().is_symmetric());
    }

    #[test]
    fn normalize_rejects_zero_degree() {
        assert!(normalize_adjacency(&path3().select_square(&[0, 2])).is_err());
    }

    #[test]
    fn candidate_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = path3();
        let c0 = build_candidate(&a, 2, 0.0, &mut rng).unwrap();
        let mut want = Matrix::zeros(5, 5);
        for i in 0..3 {
            want.row_mut(i)[..3].copy_from_slice(a.row(i));
        }
        want[(3, 3)] = 1.0;
        want[(4, 4)] = 1.0;
        assert_eq!(c0.matrix(), &want);

        let c1 = build_candidate(&a, 2, 1.0, &mut rng).unwrap();
        for i in 0..5 {
            for j in 3..5 {
                assert_eq!(c1.matrix()[(i, j)], 1.0);
                assert_eq!(c1.matrix()[(j, i)], 1.0);
            }
        }
        assert_eq!(c1.matrix().select_square(&[0, 1, 2]), a);
    }

    #[test]
    fn candidate_rejects_bad_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(build_candidate(&path3(), 1, 1.5, &mut rng).is_err());
        assert!(build_candidate(&path3(), 1, -0.1, &mut rng).is_err());
        assert!(build_candidate(&path3(), 0, 0.5, &mut rng).is_err());
    }

    #[test]
    fn candidate_self_loop_policy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = build_candidate(&path3(), 1, 0.0, &mut rng).unwrap();
        let new_only = c.with_self_loops(SelfLoops::NewOnly);
        assert_eq!(new_only[(0, 0)], 0.0);
        assert_eq!(new_only[(3, 3)], 1.0);
        let all = c.with_self_loops(SelfLoops::All);
        assert!((0..4).all(|i| all[(i, i)] == 1.0));
    }

    #[test]
    fn ordering_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_ordering(1, &mut rng).unwrap().as_slice(), &[0]);
        assert!(sample_ordering(0, &mut rng).is_err());
        assert!(NodeOrdering::new(vec![0, 0, 1]).is_err());
        let pi = NodeOrdering::new(vec![2, 0, 1]).unwrap();
        assert_eq!(pi.sequence(), vec![1, 2, 0]);
        assert_eq!(pi.inverse().inverse(), pi);
    }

    #[test]
    fn apply_ordering_length_mismatch() {
        let g = Graph::new(path3(), Matrix::zeros(3, 1)).unwrap();
        assert!(apply_ordering(&g, &NodeOrdering::identity(4)).is_err());
        assert_eq!(apply_ordering(&g, &NodeOrdering::identity(3)).unwrap(), g);
    }

    #[test]
    fn schedule_sizes() {
        assert_eq!(build_schedule(9, 3).unwrap().sizes(), vec![3, 3, 3]);
        assert_eq!(build_schedule(10, 3).unwrap().sizes(), vec![4, 3, 3]);
        let one = build_schedule(7, 1).unwrap();
        assert_eq!(one.sizes(), vec![7]);
        assert_eq!(one.num_transitions(), 0);
        assert!(build_schedule(3, 4).is_err());
        assert!(build_schedule(3, 0).is_err());
    }

    #[test]
    fn graph_validation() {
        assert!(Graph::new(Matrix::identity(2), Matrix::zeros(2, 1)).is_err());
        let asym = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        assert!(Graph::new(asym, Matrix::zeros(2, 1)).is_err());
        assert!(Graph::new(path3(), Matrix::zeros(2, 1)).is_err());
        let g = Graph::from_edges(4, &[(0, 1), (1, 0), (2, 3)], Matrix::zeros(4, 2)).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (2, 3)]);
        assert_eq!(g.edge_count(), 2);
        assert!((g.density() - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn empty_graph_normalises_through_self_loops() {
        let g = Graph::from_edges(3, &[], Matrix::zeros(3, 1)).unwrap();
        let n = normalize_adjacency(&with_self_loops(g.adjacency())).unwrap();
        assert_eq!(n.matrix(), &Matrix::identity(3));
    }
}
