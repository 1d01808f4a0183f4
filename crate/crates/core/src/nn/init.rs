use rand::Rng;

use crate::dense::Matrix;

/// Xavier/Glorot uniform initialisation: entries drawn from
/// `U(-b, b)` with `b = gain · sqrt(6 / (fan_in + fan_out))`, where
/// `fan_in = rows` and `fan_out = cols`.
pub fn xavier_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Matrix {
    let bound = gain * (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| if bound == 0.0 { 0.0 } else { rng.random_range(-bound..=bound) }).collect();
    Matrix::from_vec(rows, cols, data)
}
