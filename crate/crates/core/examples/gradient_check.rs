//! Compares reverse-mode gradients of the full growth loss with central
//! finite differences on a small random graph.
//!
//!     cargo run --release --example gradient_check

use ggcn::data::gen_sbm;
use ggcn::model::{ModelParams, ModelVariant};
use ggcn::numeric::{finite_difference_grad, max_relative_error};
use ggcn::train::{plan_loss, plan_loss_and_grads, sample_plan, PriorGrad, RngStreams, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ggcn::Result<()> {
    let g = gen_sbm(12, 2, 0.6, 0.1, 4, 0.7, &mut ChaCha8Rng::seed_from_u64(1))?.graph;
    let cfg = TrainConfig {
        hidden_dim: 8,
        latent_dim: 4,
        // Finite differences see the prior move with the weights, so the
        // analytic side must too.
        prior_grad: PriorGrad::On,
        ..TrainConfig::default()
    };
    let mut rngs = RngStreams::new(0);
    let params = ModelParams::init(cfg.dims(g.feature_dim()), &mut rngs.init);
    let plan = sample_plan(&g, ModelVariant::GGcn, &cfg, cfg.p_tilde.resolve(&g), &mut rngs)?;

    let (loss, steps, analytic) = plan_loss_and_grads(&g, &params, &plan, &cfg)?;
    println!("loss {loss:.6} over {} growth steps", steps.len());
    for (k, s) in steps.iter().enumerate() {
        println!("  step {k}: recon {:.5}  kl {:.5}", s.recon, s.kl);
    }

    let numeric = finite_difference_grad(
        |w| {
            plan_loss(
                &g,
                &ModelParams::from_tensors(w[0].clone(), w[1].clone(), w[2].clone())?,
                &plan,
                &cfg,
            )
        },
        &params.to_vec(),
        1e-5,
    )?;
    for (name, (a, n)) in ["W0", "W1", "W2"].iter().zip(analytic.iter().zip(&numeric)) {
        let err = max_relative_error(std::slice::from_ref(a), std::slice::from_ref(n), 1e-6);
        println!("{name} {:?}: max relative error {err:.2e}", a.shape());
    }
    Ok(())
}
