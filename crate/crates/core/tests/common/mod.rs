#![allow(dead_code)]

use ggcn::data::gen_sbm;
use ggcn::graph::Graph;
use ggcn::numeric::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi graph with Gaussian features.
pub fn random_graph(n: usize, p: f64, d: usize, seed: u64) -> Graph {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges, Matrix::random_normal(n, d, &mut r)).unwrap()
}

pub fn sbm(n: usize, seed: u64) -> Graph {
    gen_sbm(n, 3, 0.3, 0.03, 12, 0.8, &mut rng(seed)).unwrap().graph
}

/// Probability that a positive outscores a negative, by direct pair counting.
pub fn brute_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &p in pos {
        for &n in neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

/// Mean precision at the rank of each positive, ranks by descending score
/// with ties broken by input position.
pub fn brute_ap(scores: &[f64], labels: &[bool]) -> f64 {
    let n = scores.len();
    let rank_of = |i: usize| {
        (0..n)
            .filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i))
            .count()
            + 1
    };
    let mut total = 0.0;
    let mut positives = 0;
    for i in 0..n {
        if labels[i] {
            positives += 1;
            let r = rank_of(i);
            let hits = (0..n).filter(|&j| labels[j] && rank_of(j) <= r).count();
            total += hits as f64 / r as f64;
        }
    }
    total / positives as f64
}

/// KL between two scalar Gaussians by trapezoid integration of q·ln(q/p).
pub fn numeric_kl_1d(mq: f64, sq: f64, mp: f64, sp: f64) -> f64 {
    let lo = mq - 12.0 * sq;
    let hi = mq + 12.0 * sq;
    let steps = 200_000;
    let h = (hi - lo) / steps as f64;
    let ln_pdf =
        |x: f64, m: f64, s: f64| -0.5 * ((x - m) / s).powi(2) - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
    let f = |x: f64| {
        let lq = ln_pdf(x, mq, sq);
        lq.exp() * (lq - ln_pdf(x, mp, sp))
    };
    let mut acc = 0.5 * (f(lo) + f(hi));
    for k in 1..steps {
        acc += f(lo + k as f64 * h);
    }
    acc * h
}

/// Symmetric normalisation by straightforward loops.
pub fn naive_normalize(a: &Matrix) -> Matrix {
    let n = a.rows();
    let deg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).sum()).collect();
    Matrix::from_fn(n, n, |i, j| a[(i, j)] / (deg[i] * deg[j]).sqrt())
}
