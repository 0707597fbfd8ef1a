//! Writes a synthetic dataset in the TSV layout, loads it back, and stores
//! a new-node split as a JSON manifest.
//!
//!     cargo run --example dataset_files -- [dir]

use std::path::PathBuf;

use ggcn::data::{load_dataset, write_dataset, SbmConfig, EDGES_FILE, FEATURES_FILE};
use ggcn::eval::{make_newnode_split, EvalSplit};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "target/example-dataset".into()),
    );
    std::fs::create_dir_all(&dir)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let bundle = SbmConfig {
        n: 90,
        ..SbmConfig::default()
    }
    .generate(&mut rng)?;
    write_dataset(&bundle, &dir)?;
    println!("wrote {} and {} under {}", FEATURES_FILE, EDGES_FILE, dir.display());

    let loaded = load_dataset(&dir)?;
    assert_eq!(loaded.graph, bundle.graph);
    println!(
        "reloaded {} nodes, {} edges, {:?} features",
        loaded.graph.n(),
        loaded.graph.edge_count(),
        loaded.feature_kind
    );

    let split = make_newnode_split(&loaded.graph, 0.7, &mut rng)?;
    let manifest = split.to_manifest();
    let path = dir.join("split.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&manifest).expect("manifest serialises"),
    )?;
    let back = EvalSplit::from_manifest(&manifest, loaded.graph.features().clone())?;
    assert_eq!(back, split);
    println!(
        "split: {} observed nodes, {} hidden, {} query pairs -> {}",
        split.observed_nodes.len(),
        split.hidden_nodes().len(),
        split.query_pos().len() + split.query_neg().len(),
        path.display()
    );
    Ok(())
}
