//! Walks through one training iteration's view of a graph: a random node
//! ordering, the batch schedule, and the candidate adjacency each growth
//! step feeds to the encoder.
//!
//!     cargo run --example growth_schedule

use ggcn::graph::{build_candidate, build_schedule, normalize_adjacency, sample_ordering, Graph, SelfLoops};
use ggcn::numeric::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn show(m: &Matrix) {
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.2}")).collect();
        println!("    {}", row.join(" "));
    }
}

fn main() -> ggcn::Result<()> {
    let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (0, 7), (1, 5)];
    let g = Graph::from_edges(8, &edges, Matrix::identity(8))?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    let ordering = sample_ordering(g.n(), &mut rng)?;
    let seq = ordering.sequence();
    let schedule = build_schedule(g.n(), 3)?;
    println!("arrival order: {seq:?}");
    println!("batch sizes:   {:?}", schedule.sizes());

    for batch in schedule.batches().iter().skip(1) {
        let old = &seq[..batch.start];
        let incoming = &seq[batch.clone()];
        let a_obs = g.adjacency().select_square(old);
        let cand = build_candidate(&a_obs, incoming.len(), g.density(), &mut rng)?;
        println!(
            "\nold {old:?} + new {incoming:?}, fill probability {:.3}",
            cand.p_tilde()
        );
        println!("  candidate adjacency:");
        show(cand.matrix());
        println!("  normalised operator:");
        show(normalize_adjacency(&cand.with_self_loops(SelfLoops::All))?.matrix());
    }
    Ok(())
}
