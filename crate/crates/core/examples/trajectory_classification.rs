//! Desk-scale synthetic flow classification: which of two holes does a
//! trajectory pass?
//!
//! cargo run --release --example trajectory_classification -- [seed] [arch]

use std::time::Instant;

use simplicial_attention::experiment::{train, Dataset, RunConfig};
use simplicial_attention::san::Architecture;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(Ok(0), |s| s.parse())?;
    let arch = args.next().map_or(Ok(Architecture::San), |s| {
        Architecture::parse(&s).ok_or_else(|| anyhow::anyhow!("unknown architecture {s}"))
    })?;

    let mut config = RunConfig::trajectory(seed);
    config.arch = arch;
    let data = Dataset::generate(&config)?;
    let counts = data.complex().counts();
    println!("complex: {} vertices, {} edges, {} triangles", counts[0], counts[1], counts[2]);

    let start = Instant::now();
    let outcome = train(&config, &data)?;
    for m in outcome.metrics.iter().filter(|m| m.epoch % 10 == 0) {
        println!("epoch {:4}  loss {:.4}  lr {:.5}  train {:.3}  test {:.3}", m.epoch, m.loss, m.lr, m.train_acc, m.test_acc);
    }
    let last = outcome.last();
    println!(
        "{arch}: {} epochs ({:?}), test accuracy {:.3}, {:.1}s",
        outcome.metrics.len(),
        outcome.stop,
        last.test_acc,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
