//! The architectures the attentional layer reduces to, their settings and
//! parameter counts, plus a finite-difference gradient check of each.
//!
//! cargo run --release --example reductions

use simplicial_attention::experiment::{gradcheck, gradcheck_complex, RunConfig};
use simplicial_attention::san::{param_count, reduction_config, Architecture};

fn main() -> anyhow::Result<()> {
    let base = RunConfig::trajectory(0);
    let complex = gradcheck_complex();
    println!("{:16} {:>4} {:>4} {:>4} {:>9} {:>7} {:>8} {:>10}", "arch", "J_d", "J_u", "tied", "attention", "params", "model", "gradcheck");
    for arch in [
        Architecture::San,
        Architecture::SanNoHarmonic,
        Architecture::Scnn,
        Architecture::Snn,
        Architecture::Sat,
    ] {
        let layer = reduction_config(arch, &base.model.layers[0]);
        let mut cfg = base.clone();
        cfg.arch = arch;
        let model = cfg.resolved_model();
        let report = gradcheck(&model, &complex, 0, 1e-4, None)?;
        println!(
            "{:16} {:>4} {:>4} {:>4} {:>9} {:>7} {:>8} {:>10.1e}",
            arch.name(),
            layer.j_down,
            layer.j_up,
            layer.tie_weights,
            layer.attention_enabled,
            param_count(&layer),
            model.param_count(),
            report.max_relative_error
        );
    }
    Ok(())
}
