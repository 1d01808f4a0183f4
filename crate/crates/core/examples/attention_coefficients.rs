//! One attentional layer on a small complex: the learned upper and lower
//! attention Laplacians, the layer output and the output of a convolutional
//! layer of the same shape.
//!
//! cargo run --release --example attention_coefficients -- [seed]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use simplicial_attention::hodge::ProjectorSpec;
use simplicial_attention::nn::Activation;
use simplicial_attention::san::{
    reduction_config, san_layer_forward, scn_layer_forward, Architecture, HarmonicMode, LayerOperators,
    SanLayerConfig, SanLayerParams,
};
use simplicial_attention::{Matrix, SimplicialComplex, SparseMatrix};

fn print_rows(name: &str, m: &SparseMatrix) {
    println!("{name}");
    for r in 0..m.n_rows() {
        let (cols, vals) = m.row(r);
        let entries: Vec<String> = cols.iter().zip(vals).map(|(c, v)| format!("{c}:{v:.3}")).collect();
        println!("  edge {r}: {}", entries.join("  "));
    }
}

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(0), |s| s.parse())?;
    // filled triangle 0-1-2 glued to the hollow square 2-3-4-5
    let complex = SimplicialComplex::build(&[vec![0, 1, 2], vec![2, 3], vec![3, 4], vec![4, 5], vec![2, 5]])?;
    let config = SanLayerConfig::new(2, 3, 2)
        .with_harmonic(HarmonicMode::Projector(ProjectorSpec::new(0.3, 10)))
        .with_activation(Activation::Tanh);
    let ops = LayerOperators::new(&complex, 1, &config.harmonic)?;
    let params = SanLayerParams::init(&config, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));

    let z = Matrix::from_vec(complex.count(1), 2, (0..2 * complex.count(1)).map(|i| (i as f64 * 0.7).sin()).collect());
    let att = &params.attention(&z, &ops, &config)?[0];
    print_rows("upper attention (rows sum to 1 over upper neighbours)", &att.l_up_att);
    print_rows("lower attention", &att.l_down_att);

    let out = san_layer_forward(&z, &ops, &params, &config)?;
    let plain = reduction_config(Architecture::Scnn, &config);
    let plain_params = SanLayerParams::init(&plain, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
    let conv = scn_layer_forward(&z, &LayerOperators::new(&complex, 1, &plain.harmonic)?, &plain_params, &plain)?;
    println!("output row 0, attention   {:?}", out.row(0));
    println!("output row 0, convolution {:?}", conv.row(0));
    Ok(())
}
