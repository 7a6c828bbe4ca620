//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use matmult_core::law::hs_norm_sqr;
use matmult_core::{CMatrix, Complex64, LiftedOperator, MatrixLaw};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `a_n = E‖X_1⋯X_n‖^{2k}` by enumerating all `m^n` words.
pub fn word_moments(law: &MatrixLaw, k: usize, n_max: usize) -> Vec<f64> {
    let d = law.dim();
    let mut out = vec![(d as f64).powi(k as i32)];
    // (product, weight) over all words of the current length
    let mut layer = vec![(CMatrix::identity(d, d), 1.0)];
    for _ in 1..=n_max {
        let mut next = Vec::with_capacity(layer.len() * law.len());
        for (w, p) in &layer {
            for (a, &q) in law.atoms().iter().zip(law.weights()) {
                next.push((w * a, p * q));
            }
        }
        out.push(
            next.iter()
                .map(|(w, p)| p * hs_norm_sqr(w).powi(k as i32))
                .sum(),
        );
        layer = next;
    }
    out
}

fn kron_power(m: &CMatrix, k: usize) -> CMatrix {
    let mut out = m.clone();
    for _ in 1..k {
        out = out.kronecker(m);
    }
    out
}

/// Applies `v ↦ Σ p_i (B_i*)^{⊗k} v B_i^{⊗k}` to the symmetric tensor with
/// monomial coordinates `coords` (complex flavor) and reads the image back in
/// the same coordinates.
pub fn kronecker_apply(
    law: &MatrixLaw,
    op: &LiftedOperator,
    coords: &[Complex64],
) -> Vec<Complex64> {
    let d = law.dim();
    let k = op.k;
    let size = d.pow(k as u32);
    let digits = |mut idx: usize| -> Vec<usize> {
        let mut v = vec![0; k];
        for slot in v.iter_mut().rev() {
            *slot = idx % d;
            idx /= d;
        }
        v
    };
    let position: std::collections::HashMap<Vec<u16>, usize> = op
        .basis
        .iter()
        .enumerate()
        .map(|(i, m)| (m.clone(), i))
        .collect();
    let unit_of = |i: usize, j: usize| -> u16 {
        op.units.iter().position(|&u| u == (i, j)).expect("unit") as u16
    };
    let tuple = |r: usize, c: usize| -> Vec<u16> {
        let (ri, ci) = (digits(r), digits(c));
        let mut t: Vec<u16> = ri.iter().zip(&ci).map(|(&i, &j)| unit_of(i, j)).collect();
        t.sort_unstable();
        t
    };
    let v = CMatrix::from_fn(size, size, |r, c| coords[position[&tuple(r, c)]]);
    let mut w = CMatrix::zeros(size, size);
    for (a, &p) in law.atoms().iter().zip(law.weights()) {
        let ak = kron_power(a, k);
        w += (ak.adjoint() * &v * &ak).scale(p);
    }
    let mut out = vec![Complex64::default(); op.l];
    for r in 0..size {
        for c in 0..size {
            let t = tuple(r, c);
            let (ri, ci) = (digits(r), digits(c));
            // the sorted tuple itself, in row/column digits
            let sorted: Vec<(usize, usize)> = t.iter().map(|&u| op.units[u as usize]).collect();
            let here: Vec<(usize, usize)> = ri.into_iter().zip(ci).collect();
            if here == sorted {
                out[position[&t]] = w[(r, c)];
            }
        }
    }
    out
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform law on `m` random `d×d` atoms with entries in `[−1, 1]`.
pub fn random_law(rng: &mut ChaCha8Rng, d: usize, m: usize, complex: bool) -> MatrixLaw {
    let atoms = (0..m)
        .map(|_| {
            CMatrix::from_fn(d, d, |_, _| {
                let re = rng.random_range(-1.0..=1.0);
                let im = if complex {
                    rng.random_range(-1.0..=1.0)
                } else {
                    0.0
                };
                Complex64::new(re, im)
            })
        })
        .collect();
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    MatrixLaw::new(atoms, raw.iter().map(|w| w / total).collect()).expect("valid random law")
}

pub fn random_coords(rng: &mut ChaCha8Rng, l: usize) -> Vec<Complex64> {
    (0..l)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// The law of `±X` for `X` drawn from `law`, which is centered.
pub fn symmetrized(law: &MatrixLaw) -> MatrixLaw {
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (a, &p) in law.atoms().iter().zip(law.weights()) {
        atoms.push(a.clone());
        atoms.push(-a);
        weights.extend([p / 2.0, p / 2.0]);
    }
    MatrixLaw::new(atoms, weights).expect("valid symmetrized law")
}
