//! Dataset interchange and a synthetic attributed graph generator.
//!
//! A dataset directory holds two whitespace-separated text files:
//!
//! * `features.tsv`: one line per node: `<node id> <x_1> ... <x_d>`. Node
//!   ids are arbitrary tokens; nodes are numbered `0..n` in file order.
//! * `edges.tsv`: one undirected edge per line: `<node id> <node id>`.
//!   Duplicates (in either direction) and self-loops are dropped.
//!
//! Blank lines and lines starting with `#` are ignored in both files.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_schedule, Graph};
use crate::numeric::Matrix;

pub const FEATURES_FILE: &str = "features.tsv";
pub const EDGES_FILE: &str = "edges.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Every entry is 0 or 1 (bag-of-words style).
    Binary,
    Real,
}

impl FeatureKind {
    pub fn detect(features: &Matrix) -> Self {
        if features.as_slice().iter().all(|&v| v == 0.0 || v == 1.0) {
            FeatureKind::Binary
        } else {
            FeatureKind::Real
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub name: String,
    pub graph: Graph,
    pub feature_kind: FeatureKind,
    /// Original id token of each node.
    pub node_ids: Vec<String>,
    pub dropped_self_loops: usize,
    pub dropped_duplicates: usize,
}

impl DatasetBundle {
    pub fn from_graph(name: impl Into<String>, graph: Graph) -> Self {
        DatasetBundle {
            name: name.into(),
            feature_kind: FeatureKind::detect(graph.features()),
            node_ids: (0..graph.n()).map(|i| i.to_string()).collect(),
            graph,
            dropped_self_loops: 0,
            dropped_duplicates: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Scale each feature row to sum to one (rows summing to zero are left
    /// untouched).
    pub row_normalize: bool,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(dir: &Path) -> Result<DatasetBundle> {
    load_dataset_with(dir, LoadOptions::default())
}

pub fn load_dataset_with(dir: &Path, opts: LoadOptions) -> Result<DatasetBundle> {
    let fpath = dir.join(FEATURES_FILE);
    let epath = dir.join(EDGES_FILE);
    let parse_err = |path: &PathBuf, line: usize, msg: String| Error::Parse {
        path: path.clone(),
        line,
        msg,
    };

    let text = read(&fpath)?;
    let mut node_ids = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut values = Vec::new();
    let mut dim: Option<usize> = None;
    for (line, l) in content_lines(&text) {
        let mut tokens = l.split_whitespace();
        let id = tokens.next().expect("non-empty line").to_string();
        let row = tokens
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_err(&fpath, line, format!("bad number {t:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(parse_err(
                    &fpath,
                    line,
                    format!("expected {d} features, found {}", row.len()),
                ))
            }
            _ => {}
        }
        if index.insert(id.clone(), node_ids.len()).is_some() {
            return Err(parse_err(&fpath, line, format!("duplicate node id {id:?}")));
        }
        node_ids.push(id);
        values.extend(row);
    }
    let n = node_ids.len();
    let mut features = Matrix::from_vec(n, dim.unwrap_or(0), values)?;
    if opts.row_normalize {
        for i in 0..n {
            let s: f64 = features.row(i).iter().sum();
            if s != 0.0 {
                features.row_mut(i).iter_mut().for_each(|v| *v /= s);
            }
        }
    }

    let text = read(&epath)?;
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    let (mut self_loops, mut duplicates) = (0, 0);
    for (line, l) in content_lines(&text) {
        let tokens: Vec<&str> = l.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(parse_err(
                &epath,
                line,
                format!("expected two node ids, found {}", tokens.len()),
            ));
        }
        let lookup = |t: &str| {
            index
                .get(t)
                .copied()
                .ok_or_else(|| parse_err(&epath, line, format!("unknown node id {t:?}")))
        };
        let (u, v) = (lookup(tokens[0])?, lookup(tokens[1])?);
        if u == v {
            self_loops += 1;
            continue;
        }
        let key = (u.min(v), u.max(v));
        if !seen.insert(key) {
            duplicates += 1;
            continue;
        }
        edges.push(key);
    }

    let graph = Graph::from_edges(n, &edges, features)?;
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Ok(DatasetBundle {
        name,
        feature_kind: FeatureKind::detect(graph.features()),
        graph,
        node_ids,
        dropped_self_loops: self_loops,
        dropped_duplicates: duplicates,
    })
}

/// Writes `features.tsv` and `edges.tsv` so that [`load_dataset`] recovers
/// the same adjacency and bit-identical features.
pub fn write_dataset(bundle: &DatasetBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let g = &bundle.graph;
    let ids: Vec<String> = if bundle.node_ids.len() == g.n() {
        bundle.node_ids.clone()
    } else {
        (0..g.n()).map(|i| i.to_string()).collect()
    };

    let mut out = String::new();
    for (i, id) in ids.iter().enumerate() {
        out.push_str(id);
        for v in g.features().row(i) {
            write!(out, "\t{v}").expect("writing to a String");
        }
        out.push('\n');
    }
    let fpath = dir.join(FEATURES_FILE);
    fs::write(&fpath, out).map_err(|e| Error::io(fpath, e))?;

    let mut out = String::new();
    for (u, v) in g.edges() {
        writeln!(out, "{}\t{}", ids[u], ids[v]).expect("writing to a String");
    }
    let epath = dir.join(EDGES_FILE);
    fs::write(&epath, out).map_err(|e| Error::io(epath, e))
}

/// Parameters of [`gen_sbm`], kept together for configs and manifests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub n: usize,
    pub blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub d0: usize,
    pub signal: f64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        SbmConfig {
            n: 300,
            blocks: 3,
            p_in: 0.1,
            p_out: 0.01,
            d0: 30,
            signal: 0.9,
        }
    }
}

impl SbmConfig {
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DatasetBundle> {
        gen_sbm(self.n, self.blocks, self.p_in, self.p_out, self.d0, self.signal, rng)
    }
}

/// Planted-partition graph with block-informative attributes.
///
/// Nodes fall into `k_blocks` contiguous blocks of near-equal size. Pairs in
/// the same block connect with probability `p_in`, others with `p_out`.
/// Block `b` owns feature columns `b·w .. (b+1)·w` with `w = d0 / k_blocks`;
/// each feature is `signal · indicator + (1 - signal) · N(0, 1)`.
pub fn gen_sbm<R: Rng + ?Sized>(
    n: usize,
    k_blocks: usize,
    p_in: f64,
    p_out: f64,
    d0: usize,
    signal: f64,
    rng: &mut R,
) -> Result<DatasetBundle> {
    if !(0.0 <= p_out && p_out < p_in && p_in <= 1.0) {
        return Err(Error::contract(format!(
            "need 0 <= p_out < p_in <= 1, got p_in={p_in}, p_out={p_out}"
        )));
    }
    if k_blocks == 0 || d0 < k_blocks || n < k_blocks {
        return Err(Error::contract(format!(
            "need 1 <= k_blocks <= min(n, d0), got k={k_blocks}, n={n}, d0={d0}"
        )));
    }
    if !(0.0..=1.0).contains(&signal) {
        return Err(Error::contract(format!("signal must lie in [0, 1], got {signal}")));
    }

    let mut block = vec![0; n];
    for (b, range) in build_schedule(n, k_blocks)?.batches().iter().enumerate() {
        block[range.clone()].iter_mut().for_each(|x| *x = b);
    }

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if block[i] == block[j] { p_in } else { p_out };
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }

    let width = d0 / k_blocks;
    let mut features = Matrix::zeros(n, d0);
    for (i, &b) in block.iter().enumerate() {
        let lo = b * width;
        for (c, x) in features.row_mut(i).iter_mut().enumerate() {
            let indicator = if (lo..lo + width).contains(&c) { 1.0 } else { 0.0 };
            let noise: f64 = rng.sample(StandardNormal);
            *x = signal * indicator + (1.0 - signal) * noise;
        }
    }

    let graph = Graph::from_edges(n, &edges, features)?;
    Ok(DatasetBundle::from_graph("sbm", graph))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn write(dir: &Path, features: &str, edges: &str) {
        fs::write(dir.join(FEATURES_FILE), features).unwrap();
        fs::write(dir.join(EDGES_FILE), edges).unwrap();
    }

    #[test]
    fn dedups_and_drops_self_loops() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a 1 0\nb 0 1\n", "a b\nb a\na a\n");
        let d = load_dataset(dir.path()).unwrap();
        assert_eq!(d.graph.edges(), vec![(0, 1)]);
        assert_eq!(d.dropped_duplicates, 1);
        assert_eq!(d.dropped_self_loops, 1);
        assert_eq!(d.feature_kind, FeatureKind::Binary);
    }

    #[test]
    fn unknown_id_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a 1\nb 2\n", "a b\n# comment\na c\n");
        let err = load_dataset(dir.path()).unwrap_err();
        match err {
            Error::Parse { line, ref msg, .. } => {
                assert_eq!(line, 3);
                assert!(msg.contains("\"c\""));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_features_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a 1 2\nb 3\n", "");
        assert!(matches!(load_dataset(dir.path()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn row_normalisation() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a 1 3\nb 0 0\n", "a b\n");
        let d = load_dataset_with(dir.path(), LoadOptions { row_normalize: true }).unwrap();
        assert_eq!(d.graph.features().row(0), &[0.25, 0.75]);
        assert_eq!(d.graph.features().row(1), &[0.0, 0.0]);
    }

    #[test]
    fn sbm_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = gen_sbm(6, 2, 1.0, 0.0, 4, 1.0, &mut rng).unwrap();
        assert_eq!(d.graph.edges(), vec![(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]);
        let f = d.graph.features();
        assert_eq!(f.row(0), f.row(2));
        assert_eq!(f.row(3), f.row(5));
        assert_eq!(f.row(0), &[1.0, 1.0, 0.0, 0.0]);
        assert_ne!(f.row(0), f.row(3));
    }

    #[test]
    fn sbm_rejects_bad_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(gen_sbm(10, 2, 0.1, 0.2, 4, 0.5, &mut rng).is_err());
        assert!(gen_sbm(10, 2, 1.1, 0.2, 4, 0.5, &mut rng).is_err());
        assert!(gen_sbm(10, 5, 0.5, 0.2, 4, 0.5, &mut rng).is_err());
        assert!(gen_sbm(10, 2, 0.5, 0.2, 4, 1.5, &mut rng).is_err());
    }
}
