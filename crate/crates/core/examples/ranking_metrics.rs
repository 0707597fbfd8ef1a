//! AUC and average precision on a hand-sized example, including ties.
//!
//!     cargo run --example ranking_metrics

use ggcn::eval::{auc, average_precision, Metrics};

fn main() -> ggcn::Result<()> {
    let scores = [0.9, 0.8, 0.8, 0.4, 0.3, 0.1];
    let labels = [true, false, true, true, false, false];
    println!("scores {scores:?}");
    println!("labels {labels:?}");
    println!("AUC {:.4}", auc(&scores, &labels)?);
    println!("AP  {:.4}", average_precision(&scores, &labels)?);

    let m = Metrics::from_scores(&[0.7, 0.7], &[0.7, 0.2])?;
    println!("all-tied positive against one tied negative: AUC {:.3}", m.auc);
    Ok(())
}
