//! Cold-start link prediction: hides 30% of the nodes of a block-model
//! graph, trains all three models on the rest and scores the edges of the
//! hidden nodes. Averages over several seeds.
//!
//!     cargo run --release --example new_node_link_prediction -- [seeds] [beta]

use ggcn::data::gen_sbm;
use ggcn::eval::{evaluate, make_newnode_split};
use ggcn::model::ModelVariant;
use ggcn::train::{train, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ggcn::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map_or(5, |s| s.parse().expect("seed count"));
    let beta: f64 = args.next().map_or(5e-5, |s| s.parse().expect("beta"));

    let mut auc = [0.0; 3];
    let mut ap = [0.0; 3];
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = gen_sbm(300, 3, 0.1, 0.01, 30, 0.9, &mut rng)?.graph;
        let split = make_newnode_split(&g, 0.7, &mut rng)?;
        let cfg = TrainConfig {
            hidden_dim: 32,
            latent_dim: 16,
            beta,
            seed,
            ..TrainConfig::default()
        };
        for (k, variant) in ModelVariant::ALL.into_iter().enumerate() {
            let trained = train(&split.observed, variant, &cfg)?;
            let m = evaluate(&trained.params, variant, &split, cfg.self_loops)?.test;
            println!(
                "seed {seed} {:<8} AUC {:.4} AP {:.4}",
                variant.display_name(),
                m.auc,
                m.ap
            );
            auc[k] += m.auc / seeds as f64;
            ap[k] += m.ap / seeds as f64;
        }
    }
    println!("\nmean over {seeds} seeds (beta {beta}):");
    for (k, variant) in ModelVariant::ALL.into_iter().enumerate() {
        println!("  {:<8} AUC {:.4} AP {:.4}", variant.display_name(), auc[k], ap[k]);
    }
    Ok(())
}
