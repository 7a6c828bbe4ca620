//! Finitely supported probability laws on d×d complex matrices.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub type CMatrix = DMatrix<Complex64>;

/// Allowed deviation of the total weight from 1.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Largest imaginary entry magnitude for which a law counts as real.
pub const REAL_TOL: f64 = 1e-14;
/// Default Hilbert–Schmidt tolerance for the mean-zero check.
pub const MEAN_ZERO_TOL: f64 = 1e-12;
/// Entrywise tolerance used when matching an atom with a negated atom.
pub const SYMMETRY_TOL: f64 = 1e-14;

/// Scalar field of a law, and the matching flavor of symmetric lift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl std::str::FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "real" => Ok(Field::Real),
            "complex" => Ok(Field::Complex),
            other => Err(Error::InvalidArgument(format!("unknown flavor {other:?}"))),
        }
    }
}

/// A law `Σ pᵢ δ_{Bᵢ}`. Immutable once built.
#[derive(Clone, Debug)]
pub struct MatrixLaw {
    dim: usize,
    atoms: Vec<CMatrix>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    field: Field,
}

impl MatrixLaw {
    pub fn new(atoms: Vec<CMatrix>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidLaw("a law needs at least one atom".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidLaw(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        let dim = atoms[0].nrows();
        if dim == 0 {
            return Err(Error::InvalidLaw(
                "matrix dimension must be positive".into(),
            ));
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.nrows() != dim || a.ncols() != dim {
                return Err(Error::InvalidLaw(format!(
                    "atom {i} is {}x{}, expected {dim}x{dim}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidLaw(format!(
                    "atom {i} has a non-finite entry"
                )));
            }
        }
        for (i, &p) in weights.iter().enumerate() {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::InvalidLaw(format!(
                    "weight {i} = {p} is not positive"
                )));
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidLaw(format!("weights sum to {total}, not 1")));
        }

        let max_imag = atoms
            .iter()
            .flat_map(|a| a.iter())
            .fold(0.0f64, |m, z| m.max(z.im.abs()));
        let field = if max_imag <= REAL_TOL {
            Field::Real
        } else {
            Field::Complex
        };

        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &p in &weights {
            acc += p;
            cumulative.push(acc);
        }

        Ok(Self {
            dim,
            atoms,
            weights,
            cumulative,
            field,
        })
    }

    /// Uniform law on a finite set of matrices.
    pub fn uniform(atoms: Vec<CMatrix>) -> Result<Self> {
        let m = atoms.len().max(1);
        Self::new(atoms, vec![1.0 / m as f64; m])
    }

    /// Law concentrated on a single matrix.
    pub fn deterministic(atom: CMatrix) -> Result<Self> {
        Self::new(vec![atom], vec![1.0])
    }

    /// Builds real atoms from row-major slices.
    pub fn from_real_atoms(dim: usize, atoms: &[&[f64]], weights: Vec<f64>) -> Result<Self> {
        let mats = atoms
            .iter()
            .map(|a| {
                if a.len() != dim * dim {
                    return Err(Error::InvalidLaw(format!(
                        "atom has {} entries, expected {}",
                        a.len(),
                        dim * dim
                    )));
                }
                Ok(real_matrix(dim, a))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(mats, weights)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: LawFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_law()
    }

    /// Serializes into the `.law.json` layout.
    pub fn to_json_string(&self) -> String {
        let atoms: Vec<Vec<Vec<[f64; 2]>>> = self
            .atoms
            .iter()
            .map(|a| {
                (0..self.dim)
                    .map(|i| {
                        (0..self.dim)
                            .map(|j| [a[(i, j)].re, a[(i, j)].im])
                            .collect()
                    })
                    .collect()
            })
            .collect();
        serde_json::json!({
            "dim": self.dim,
            "atoms": atoms,
            "weights": self.weights,
        })
        .to_string()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[CMatrix] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Index of the atom selected by a uniform variate `u ∈ [0, 1)`.
    #[inline]
    pub fn pick(&self, u: f64) -> usize {
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.atoms.len() - 1)
    }

    /// Draw number `index` of the sample stream keyed by `seed`.
    pub fn sample(&self, seed: u64, index: u64) -> &CMatrix {
        &self.atoms[self.pick(rng::uniform_at(seed, index))]
    }

    pub fn validate(&self, tol: f64) -> ValidationReport {
        let mut mean = CMatrix::zeros(self.dim, self.dim);
        let mut second = 0.0;
        for (a, &p) in self.atoms.iter().zip(&self.weights) {
            mean += a.scale(p);
            second += p * hs_norm_sqr(a);
        }
        let mean_hs = hs_norm_sqr(&mean).sqrt();
        let is_symmetric_law = self.is_symmetric();
        ValidationReport {
            // A symmetric law is centered exactly; float residue is not a counterexample.
            is_mean_zero: mean_hs <= tol || is_symmetric_law,
            mean,
            is_symmetric_law,
            second_hs_moment: second,
        }
    }

    /// True when the law is invariant under `B ↦ −B`.
    fn is_symmetric(&self) -> bool {
        // Group identical atoms, then compare the mass at B with the mass at −B.
        let close = |a: &CMatrix, b: &CMatrix, sign: f64| {
            a.iter()
                .zip(b.iter())
                .all(|(x, y)| (x - y * sign).norm() <= SYMMETRY_TOL)
        };
        let mass_at = |b: &CMatrix, sign: f64| -> f64 {
            self.atoms
                .iter()
                .zip(&self.weights)
                .filter(|(a, _)| close(a, b, sign))
                .map(|(_, &p)| p)
                .sum()
        };
        self.atoms
            .iter()
            .all(|b| (mass_at(b, 1.0) - mass_at(b, -1.0)).abs() <= WEIGHT_SUM_TOL)
    }
}

/// Summary statistics checked against the centering hypotheses.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    #[serde(serialize_with = "crate::cjson::matrix")]
    pub mean: CMatrix,
    pub is_mean_zero: bool,
    pub is_symmetric_law: bool,
    pub second_hs_moment: f64,
}

pub fn hs_norm_sqr(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn real_matrix(dim: usize, row_major: &[f64]) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| Complex64::new(row_major[i * dim + j], 0.0))
}

/// The eight-atom uniform law on `±I, ±[[1,1],[0,1]], ±[[1,−1],[0,1]], ±[[0,1],[−1,0]]`.
pub fn sl2_law() -> MatrixLaw {
    let base: [[f64; 4]; 4] = [
        [1.0, 0.0, 0.0, 1.0],
        [1.0, 1.0, 0.0, 1.0],
        [1.0, -1.0, 0.0, 1.0],
        [0.0, 1.0, -1.0, 0.0],
    ];
    let mut atoms = Vec::with_capacity(8);
    for b in &base {
        let m = real_matrix(2, b);
        atoms.push(m.clone());
        atoms.push(-m);
    }
    MatrixLaw::uniform(atoms).expect("static law is valid")
}

/// The d = 1 Rademacher law `±1` with equal weights.
pub fn rademacher_law() -> MatrixLaw {
    MatrixLaw::from_real_atoms(1, &[&[1.0], &[-1.0]], vec![0.5, 0.5]).expect("static law is valid")
}

#[derive(Deserialize)]
struct LawFile {
    dim: usize,
    atoms: Vec<Vec<Vec<Entry>>>,
    weights: Vec<Weight>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Pair([f64; 2]),
    Real(f64),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Weight {
    Number(f64),
    Text(String),
}

impl LawFile {
    fn into_law(self) -> Result<MatrixLaw> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::InvalidLaw("dim must be positive".into()));
        }
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for (idx, rows) in self.atoms.into_iter().enumerate() {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(Error::InvalidLaw(format!("atom {idx} is not {d}x{d}")));
            }
            let mut m = CMatrix::zeros(d, d);
            for (i, row) in rows.into_iter().enumerate() {
                for (j, e) in row.into_iter().enumerate() {
                    m[(i, j)] = match e {
                        Entry::Pair([re, im]) => Complex64::new(re, im),
                        Entry::Real(re) => Complex64::new(re, 0.0),
                    };
                }
            }
            atoms.push(m);
        }
        let weights = self
            .weights
            .iter()
            .map(|w| match w {
                Weight::Number(x) => Ok(*x),
                Weight::Text(s) => parse_weight(s),
            })
            .collect::<Result<Vec<_>>>()?;
        MatrixLaw::new(atoms, weights)
    }
}

/// Parses `"p/q"` with integer parts, or a plain decimal string.
fn parse_weight(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad weight {s:?}"));
    match s.split_once('/') {
        Some((num, den)) => {
            let num: i64 = num.trim().parse().map_err(|_| bad())?;
            let den: i64 = den.trim().parse().map_err(|_| bad())?;
            if den == 0 {
                return Err(bad());
            }
            Ok(num as f64 / den as f64)
        }
        None => s.parse().map_err(|_| bad()),
    }
}
