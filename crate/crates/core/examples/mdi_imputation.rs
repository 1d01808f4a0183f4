//! Citation imputation on a synthetic co-authorship complex: several masks,
//! attention against the convolutional reduction of the same size.
//!
//! cargo run --release --example mdi_imputation -- [masks] [max_epochs] [seed] [lr]

use std::time::Instant;

use simplicial_attention::data::coauthorship_complex;
use simplicial_attention::experiment::{mdi_mask_study, mean_accuracy, RunConfig};
use simplicial_attention::san::Architecture;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let masks: usize = args.first().map_or(Ok(3), |s| s.parse())?;
    let seed: u64 = args.get(2).map_or(Ok(0), |s| s.parse())?;
    let mut config = RunConfig::mdi(seed);
    if let Some(e) = args.get(1) {
        config.optim.max_epochs = e.parse()?;
    }
    if let Some(lr) = args.get(3) {
        config.optim.lr = lr.parse()?;
    }

    let complex = coauthorship_complex(&config.data.mdi.complex)?;
    println!(
        "complex: counts {:?}, imputing order {} with {:.0}% hidden",
        complex.counts(),
        config.data.mdi.order,
        100.0 * config.data.mdi.missing_fraction
    );

    let archs = [Architecture::San, Architecture::Scnn];
    let start = Instant::now();
    let results = mdi_mask_study(&config, &archs, masks)?;
    for r in &results {
        println!(
            "mask {}  {:5}  hidden ±5% {:.3}  all {:.3}  epochs {}",
            r.mask, r.arch, r.accuracy, r.accuracy_all, r.epochs
        );
    }
    for arch in archs {
        println!("{arch}: mean hidden accuracy {:.3}", mean_accuracy(&results, arch));
    }
    println!("{:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
