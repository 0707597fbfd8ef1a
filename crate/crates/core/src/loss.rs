//! Reconstruction and KL terms of the per-step negative ELBO.
//!
//! Each growth step contributes `recon + β·kl`, where `recon` is the mean
//! weighted cross-entropy over unordered off-diagonal node pairs and `kl`
//! sums the divergence of the posterior from the adaptive prior over every
//! node and latent dimension. A training sequence sums its steps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GaussianLatent, LatentVars};
use crate::numeric::{Matrix, Tape, Var, LOG_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub recon: f64,
    pub kl: f64,
    pub total: f64,
    pub beta: f64,
}

impl LossBreakdown {
    pub fn new(recon: f64, kl: f64, beta: f64) -> Self {
        LossBreakdown {
            recon,
            kl,
            total: recon + beta * kl,
            beta,
        }
    }
}

/// Which node pairs are reconstructed at a growth step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconTarget {
    /// True adjacency among every node present after the step.
    #[default]
    All,
    /// True adjacency among the nodes that were present before the step.
    OldOnly,
}

fn check_square_pair(op: &'static str, p: &Matrix, a: &Matrix) -> Result<()> {
    if p.shape() != a.shape() || p.rows() != p.cols() {
        return Err(Error::Dimension {
            op,
            left: p.shape(),
            right: a.shape(),
        });
    }
    Ok(())
}

/// `#non-edge pairs / #edge pairs` over unordered off-diagonal pairs of a
/// binary target; 1 when the target has no edges.
pub fn default_pos_weight(target: &Matrix) -> f64 {
    let n = target.rows();
    let pairs = n * n.saturating_sub(1) / 2;
    let mut edges = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if target[(i, j)] != 0.0 {
                edges += 1;
            }
        }
    }
    if edges == 0 {
        1.0
    } else {
        (pairs - edges) as f64 / edges as f64
    }
}

/// Mean weighted binary cross-entropy between edge probabilities `p` and a
/// binary target over pairs `i < j`.
pub fn recon_loss(p: &Matrix, target: &Matrix, pos_weight: f64) -> Result<f64> {
    check_square_pair("recon_loss", p, target)?;
    let n = p.rows();
    let pairs = n * n.saturating_sub(1) / 2;
    if pairs == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let (prob, a) = (p[(i, j)], target[(i, j)]);
            total -= pos_weight * a * prob.max(LOG_FLOOR).ln() + (1.0 - a) * (1.0 - prob).max(LOG_FLOOR).ln();
        }
    }
    Ok(total / pairs as f64)
}

/// `KL(q ‖ prior)` summed over every node and latent dimension.
pub fn kl_diag_gaussians(q: &GaussianLatent, prior: &GaussianLatent) -> Result<f64> {
    if q.mean.shape() != prior.mean.shape() {
        return Err(Error::Dimension {
            op: "kl_diag_gaussians",
            left: q.mean.shape(),
            right: prior.mean.shape(),
        });
    }
    let mut kl = 0.0;
    for k in 0..q.mean.len() {
        let (mq, lq) = (q.mean.as_slice()[k], q.log_std.as_slice()[k]);
        let (mp, lp) = (prior.mean.as_slice()[k], prior.log_std.as_slice()[k]);
        kl += lp - lq + ((2.0 * lq).exp() + (mq - mp).powi(2)) / (2.0 * (2.0 * lp).exp()) - 0.5;
    }
    Ok(kl)
}

pub fn step_loss(
    p: &Matrix,
    target: &Matrix,
    q: &GaussianLatent,
    prior: &GaussianLatent,
    beta: f64,
    pos_weight: f64,
) -> Result<LossBreakdown> {
    check_beta(beta)?;
    let recon = recon_loss(p, target, pos_weight)?;
    let kl = kl_diag_gaussians(q, prior)?;
    Ok(LossBreakdown::new(recon, kl, beta))
}

/// Sum of the per-step totals.
pub fn sequence_loss(steps: &[LossBreakdown]) -> Result<f64> {
    if steps.is_empty() {
        return Err(Error::contract("sequence loss over zero steps"));
    }
    Ok(steps.iter().map(|s| s.total).sum())
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::contract(format!("beta must be non-negative, got {beta}")));
    }
    Ok(())
}

/// Negative ELBO of the static graph autoencoder: reconstruction plus the
/// KL to a standard-normal prior in its `-½ Σ (1 + 2 log σ - μ² - σ²)` form.
pub fn gcn_vae_objective(p: &Matrix, target: &Matrix, q: &GaussianLatent, pos_weight: f64) -> Result<f64> {
    let recon = recon_loss(p, target, pos_weight)?;
    let kl: f64 = q
        .mean
        .as_slice()
        .iter()
        .zip(q.log_std.as_slice())
        .map(|(&m, &ls)| -0.5 * (1.0 + 2.0 * ls - m * m - (2.0 * ls).exp()))
        .sum();
    Ok(recon + kl)
}

/// [`kl_diag_gaussians`] recorded on a tape.
pub fn kl_on_tape(tape: &mut Tape, q: &LatentVars, prior: &LatentVars) -> Result<Var> {
    let d = tape.sub(q.mean, prior.mean)?;
    let d2 = tape.mul(d, d)?;
    let two_lq = tape.scale(q.log_std, 2.0);
    let var_q = tape.exp(two_lq);
    let num = tape.add(var_q, d2)?;
    let neg_two_lp = tape.scale(prior.log_std, -2.0);
    let inv_var_p = tape.exp(neg_two_lp);
    let ratio = tape.mul(num, inv_var_p)?;
    let half = tape.scale(ratio, 0.5);
    let log_ratio = tape.sub(prior.log_std, q.log_std)?;
    let per_entry = tape.add(log_ratio, half)?;
    let shifted = tape.add_scalar(per_entry, -0.5);
    Ok(tape.sum(shifted))
}

/// [`recon_loss`] of the inner-product decoder applied to `z`, recorded on a
/// tape.
pub fn recon_on_tape(tape: &mut Tape, z: Var, target: &Matrix, pos_weight: f64) -> Result<Var> {
    let logits = tape.gram(z);
    tape.pair_bce_with_logits(logits, target, pos_weight)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::decode_edge_probs;

    fn scalar_latent(m: f64, ls: f64) -> GaussianLatent {
        GaussianLatent::new(Matrix::scalar(m), Matrix::scalar(ls)).unwrap()
    }

    #[test]
    fn recon_single_pair_half() {
        let p = Matrix::filled(2, 2, 0.5);
        let a = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        assert!((recon_loss(&p, &a, 1.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn recon_perfect_prediction_is_near_zero() {
        let a = Matrix::from_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let p = a.map(|v| if v == 1.0 { 1.0 - 1e-13 } else { 1e-13 });
        assert!(recon_loss(&p, &a, 2.0).unwrap() < 1e-11);
    }

    #[test]
    fn pos_weight_scales_positive_terms_only() {
        let a = Matrix::from_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let p = Matrix::filled(3, 3, 0.3);
        let l1 = recon_loss(&p, &a, 1.0).unwrap();
        let l2 = recon_loss(&p, &a, 2.0).unwrap();
        let pos = -(0.3f64.ln()) / 3.0;
        assert!((l2 - l1 - pos).abs() < 1e-15);
    }

    #[test]
    fn recon_rejects_mismatch() {
        assert!(recon_loss(&Matrix::zeros(2, 2), &Matrix::zeros(3, 3), 1.0).is_err());
    }

    #[test]
    fn kl_closed_forms() {
        let q = scalar_latent(0.3, -0.4);
        assert!(kl_diag_gaussians(&q, &q).unwrap().abs() <= 1e-12);
        let kl = kl_diag_gaussians(&scalar_latent(1.0, 0.0), &scalar_latent(0.0, 0.0)).unwrap();
        assert!((kl - 0.5).abs() < 1e-15);
        let kl = kl_diag_gaussians(&scalar_latent(0.0, 2f64.ln()), &scalar_latent(0.0, 0.0)).unwrap();
        assert!((kl - (-(2f64.ln()) + 2.0 - 0.5)).abs() < 1e-15);
        assert!((kl - 0.80685).abs() < 1e-5);
        assert!(kl_diag_gaussians(&q, &GaussianLatent::standard_normal(2, 1)).is_err());
    }

    #[test]
    fn step_and_sequence() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = Matrix::random_normal(6, 3, &mut rng);
        let p = decode_edge_probs(&z).unwrap();
        let mut a = Matrix::zeros(6, 6);
        for (i, j) in [(0, 1), (1, 2), (3, 5)] {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        let q = GaussianLatent::new(
            Matrix::random_normal(6, 3, &mut rng),
            Matrix::random_normal(6, 3, &mut rng),
        )
        .unwrap();
        let prior = GaussianLatent::standard_normal(6, 3);
        let w = default_pos_weight(&a);
        assert_eq!(w, 4.0);
        let beta = 0.37;
        let s = step_loss(&p, &a, &q, &prior, beta, w).unwrap();
        let want = recon_loss(&p, &a, w).unwrap() + beta * kl_diag_gaussians(&q, &prior).unwrap();
        assert!((s.total - want).abs() < 1e-12);
        assert_eq!(step_loss(&p, &a, &q, &prior, 0.0, w).unwrap().total, s.recon);
        assert_eq!(step_loss(&p, &a, &q, &q, 1.0, w).unwrap().total, s.recon);
        assert!(step_loss(&p, &a, &q, &prior, -1.0, w).is_err());

        let one = LossBreakdown::new(1.0, 0.0, 1.0);
        let two = LossBreakdown::new(2.0, 0.5, 1.0);
        assert_eq!(sequence_loss(&[one]).unwrap(), 1.0);
        assert_eq!(sequence_loss(&[one, two]).unwrap(), 3.5);
        assert_eq!(sequence_loss(&[two, one]).unwrap(), 3.5);
        assert!(sequence_loss(&[]).is_err());
    }

    #[test]
    fn tape_terms_match_value_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = GaussianLatent::new(
            Matrix::random_normal(5, 2, &mut rng),
            Matrix::random_normal(5, 2, &mut rng),
        )
        .unwrap();
        let prior = GaussianLatent::new(
            Matrix::random_normal(5, 2, &mut rng),
            Matrix::random_normal(5, 2, &mut rng),
        )
        .unwrap();
        let mut tape = Tape::new();
        let qv = LatentVars::constant(&q, &mut tape);
        let pv = LatentVars::constant(&prior, &mut tape);
        let kl = kl_on_tape(&mut tape, &qv, &pv).unwrap();
        let want = kl_diag_gaussians(&q, &prior).unwrap();
        assert!((tape.value(kl)[(0, 0)] - want).abs() < 1e-12);

        let z = Matrix::random_normal(5, 2, &mut rng);
        let target = Matrix::from_fn(5, 5, |i, j| if i != j && (i + j) % 2 == 1 { 1.0 } else { 0.0 });
        let zv = tape.constant(z.clone());
        let r = recon_on_tape(&mut tape, zv, &target, 1.7).unwrap();
        let want = recon_loss(&decode_edge_probs(&z).unwrap(), &target, 1.7).unwrap();
        assert!((tape.value(r)[(0, 0)] - want).abs() < 1e-12);
    }

    #[test]
    fn kl_nonnegative_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let q = scalar_latent(rng.gen_range(-3.0..3.0), rng.gen_range(-2.0..2.0));
            let p = scalar_latent(rng.gen_range(-3.0..3.0), rng.gen_range(-2.0..2.0));
            assert!(kl_diag_gaussians(&q, &p).unwrap() >= 0.0);
        }
    }
}
