use rand::seq::index::sample;
use rand::Rng;

use super::DataError;
use crate::complex::SimplicialComplex;

/// Closure of `triangles` random triangles and `edges` random edges on
/// `n_vertices` vertices. Coincident draws collapse, so the counts are upper
/// bounds.
pub fn random_complex<R: Rng + ?Sized>(
    n_vertices: usize,
    triangles: usize,
    edges: usize,
    rng: &mut R,
) -> Result<SimplicialComplex, DataError> {
    if n_vertices < 3 {
        return Err(DataError::InvalidParameter("random complexes need at least 3 vertices".into()));
    }
    let mut tops: Vec<Vec<usize>> = Vec::with_capacity(triangles + edges);
    for _ in 0..triangles {
        tops.push(sample(rng, n_vertices, 3).into_vec());
    }
    for _ in 0..edges {
        tops.push(sample(rng, n_vertices, 2).into_vec());
    }
    if tops.is_empty() {
        return Err(DataError::EmptyInput);
    }
    Ok(SimplicialComplex::build(&tops)?)
}
