//! Shared fixtures for the kernel benchmarks.

use matmult_core::law::real_matrix;
use matmult_core::MatrixLaw;

pub use matmult_core::law::{rademacher_law, sl2_law};

/// A centered law on `d×d` real matrices: `m` fixed atoms and their negatives.
pub fn dense_law(d: usize, m: usize) -> MatrixLaw {
    let mut atoms = Vec::with_capacity(2 * m);
    for a in 0..m {
        let entries: Vec<f64> = (0..d * d)
            .map(|i| ((a * d * d + i + 1) as f64 * 0.7).sin())
            .collect();
        let b = real_matrix(d, &entries);
        atoms.push(b.clone());
        atoms.push(-b);
    }
    MatrixLaw::uniform(atoms).expect("fixture law is valid")
}
