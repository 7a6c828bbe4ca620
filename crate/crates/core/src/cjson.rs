//! Serde helpers writing complex numbers as `[re, im]` pairs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::ser::{SerializeSeq, Serializer};

pub fn complex<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&[c.re, c.im], s)
}

pub fn complex_vec<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for c in v {
        seq.serialize_element(&[c.re, c.im])?;
    }
    seq.end()
}

pub fn complex_vec_vec<S: Serializer>(v: &[Vec<Complex64>], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for row in v {
        let pairs: Vec<[f64; 2]> = row.iter().map(|c| [c.re, c.im]).collect();
        seq.serialize_element(&pairs)?;
    }
    seq.end()
}

/// Row-major list of rows.
pub fn matrix<S: Serializer>(m: &DMatrix<Complex64>, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<[f64; 2]> = (0..m.ncols())
            .map(|j| [m[(i, j)].re, m[(i, j)].im])
            .collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}
