//! Classic link prediction: removes 10% / 5% of the edges for validation
//! and test, trains on the rest and reports validation metrics while
//! training.
//!
//!     cargo run --release --example observed_graph_link_prediction

use ggcn::data::SbmConfig;
use ggcn::eval::{evaluate, make_observed_split};
use ggcn::model::ModelVariant;
use ggcn::train::{train_with, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ggcn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = SbmConfig::default().generate(&mut rng)?.graph;
    let split = make_observed_split(&g, 0.1, 0.05, &mut rng)?;
    println!(
        "{} training edges, {} validation and {} test positives",
        split.observed.edge_count(),
        split.val_pos.len(),
        split.test_pos.len()
    );

    let cfg = TrainConfig {
        hidden_dim: 32,
        latent_dim: 16,
        beta: 5e-5,
        ..TrainConfig::default()
    };
    for variant in ModelVariant::ALL {
        let trained = train_with(&split.observed, variant, &cfg, |rec, params| {
            if rec.iteration % 50 != 49 {
                return None;
            }
            let val = evaluate(params, variant, &split, cfg.self_loops).ok()?.val?;
            println!("  {variant} iter {:>3}: val AUC {:.4}", rec.iteration + 1, val.auc);
            Some(val)
        })?;
        let test = evaluate(&trained.params, variant, &split, cfg.self_loops)?.test;
        println!(
            "{:<8} test AUC {:.4} AP {:.4}",
            variant.display_name(),
            test.auc,
            test.ap
        );
    }
    Ok(())
}
