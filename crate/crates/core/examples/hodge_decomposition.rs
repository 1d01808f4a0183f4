//! Splits a random edge flow on the synthetic two-hole mesh into gradient,
//! curl and harmonic parts and checks what each part carries.
//!
//! cargo run --release --example hodge_decomposition -- [seed]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simplicial_attention::data::{generate_synthetic_flow, FlowParams};
use simplicial_attention::hodge::{curl, divergence, harmonic_dimension, hodge_decompose};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(0), |s| s.parse())?;
    let flow = generate_synthetic_flow(&FlowParams::desk_scale(seed))?;
    let c = &flow.complex;
    let l = c.laplacian(1)?;
    let (b1, b2) = (c.incidence_matrix(1)?, c.incidence_matrix(2)?);
    println!("mesh {:?}, harmonic dimension {}", c.counts(), harmonic_dimension(&l.full, None)?);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..c.count(1)).map(|_| rng.random_range(-1.0..1.0)).collect();
    let parts = hodge_decompose(&x, &l.down, &l.up)?;

    println!("{:14} {:>9} {:>12} {:>12}", "part", "norm", "|div|", "|curl|");
    for (name, v) in [
        ("signal", &x),
        ("irrotational", &parts.irrotational),
        ("solenoidal", &parts.solenoidal),
        ("harmonic", &parts.harmonic),
    ] {
        println!("{name:14} {:9.4} {:12.2e} {:12.2e}", norm(v), norm(&divergence(&b1, v)?), norm(&curl(&b2, v)?));
    }

    let squares: f64 = [&parts.irrotational, &parts.solenoidal, &parts.harmonic].iter().map(|v| norm(v).powi(2)).sum();
    println!("energy split error {:.1e}", (squares - norm(&x).powi(2)).abs());

    // a trajectory is mostly harmonic plus a gradient from start to end
    let t = &flow.train[0];
    let tp = hodge_decompose(&t.signal, &l.down, &l.up)?;
    println!(
        "trajectory 0 (label {}): norms irrotational {:.3}, solenoidal {:.3}, harmonic {:.3}",
        t.label,
        norm(&tp.irrotational),
        norm(&tp.solenoidal),
        norm(&tp.harmonic)
    );
    Ok(())
}
