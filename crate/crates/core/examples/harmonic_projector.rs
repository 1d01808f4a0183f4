//! Sparse harmonic projector `(I - εL)^J` against the exact kernel
//! projector, for several steps and orders.
//!
//! cargo run --release --example harmonic_projector -- [seed]

use simplicial_attention::data::{generate_synthetic_flow, FlowParams};
use simplicial_attention::hodge::{
    estimate_lambda_max, exact_harmonic_projector, sparse_harmonic_projector, spectral_basis, ProjectorSpec,
};

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(0), |s| s.parse())?;
    let flow = generate_synthetic_flow(&FlowParams::desk_scale(seed))?;
    let l = flow.complex.laplacian(1)?.full;
    let basis = spectral_basis(&l, None)?;
    let lambda_max = *basis.eigenvalues.last().unwrap_or(&0.0);
    let smallest = basis.eigenvalues.get(basis.harmonic_dim).copied().unwrap_or(0.0);
    println!(
        "{} edges, harmonic dimension {}, spectrum [{smallest:.4}, {lambda_max:.4}], power estimate {:.4}",
        l.n_rows(),
        basis.harmonic_dim,
        estimate_lambda_max(&l)
    );

    let exact = exact_harmonic_projector(&l, None)?;
    let bound = ProjectorSpec::admissible_bound(&l);
    println!("admissible ε ≤ {bound:.4}; 0.9 would be clamped: {}", 0.9 > bound);

    let orders = [1, 2, 5, 10, 50, 200];
    print!("{:>8}", "ε \\ J");
    orders.iter().for_each(|j| print!("{j:>10}"));
    println!();
    for eps in [0.5 / lambda_max, 1.0 / lambda_max, 1.9 / lambda_max] {
        print!("{eps:8.4}");
        for &j in &orders {
            let p = sparse_harmonic_projector(&l, &ProjectorSpec::new(eps, j))?;
            print!("{:10.2e}", p.to_dense().sub(&exact).frobenius_norm());
        }
        println!();
    }
    Ok(())
}
