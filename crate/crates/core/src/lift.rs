//! Symmetric-power lifts of the transfer operator `A ↦ E[X* A X]`.
//!
//! The underlying space `W` is either the full matrix space `ℂ^{d×d}` (basis
//! `e_ij`, index `i·d + j`) or, for real laws, the symmetric matrices `S_d`
//! (basis `E_ii` and `E_ij + E_ji` for `i < j`, pairs in lexicographic order).
//! `Sym^k(W)` uses the monomial basis: for each sorted k-multiset `M` of
//! `W`-indices, `b_M` is the sum of all distinct orderings of
//! `w_{M_1} ⊗ … ⊗ w_{M_k}`. A symmetric tensor's coordinate on `b_M` is its
//! tensor entry at the sorted tuple `M`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::law::{CMatrix, Field, MatrixLaw};

/// Default upper limit for the lift dimension `l`.
pub const DEFAULT_DIM_CAP: usize = 2000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `binom(n, r)` as u128, saturating on overflow.
pub fn binomial(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Dimension of the underlying space `W`.
pub fn base_dim(d: usize, field: Field) -> usize {
    match field {
        Field::Complex => d * d,
        Field::Real => d * (d + 1) / 2,
    }
}

/// Lift dimension `binom(k + D − 1, k)` with `D = base_dim(d, field)`.
pub fn lift_dim(d: usize, k: usize, field: Field) -> u128 {
    let dd = base_dim(d, field) as u64;
    binomial(k as u64 + dd - 1, k as u64)
}

/// Matrix units spanning `W`, as `(i, j)` pairs with `i ≤ j` in the real case.
pub fn base_units(d: usize, field: Field) -> Vec<(usize, usize)> {
    match field {
        Field::Complex => (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).collect(),
        Field::Real => (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect(),
    }
}

/// Sorted multisets of `W`-indices for every degree `0..=k`.
#[derive(Clone, Debug)]
struct Levels {
    levels: Vec<Vec<Vec<u16>>>,
    lookup: Vec<HashMap<Vec<u16>, usize>>,
}

impl Levels {
    fn new(base: usize, k: usize) -> Self {
        let mut levels = vec![vec![Vec::new()]];
        for r in 1..=k {
            let mut next = Vec::new();
            for m in &levels[r - 1] {
                let start = m.last().copied().unwrap_or(0);
                for i in start..base as u16 {
                    let mut t = m.clone();
                    t.push(i);
                    next.push(t);
                }
            }
            levels.push(next);
        }
        let lookup = levels
            .iter()
            .map(|lv| lv.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect())
            .collect();
        Self { levels, lookup }
    }
}

/// Number of distinct orderings of a sorted multiset.
fn orbit_size(m: &[u16]) -> f64 {
    let mut size = 1.0;
    let mut pos = 1.0;
    let mut run = 0.0;
    for (idx, &v) in m.iter().enumerate() {
        run = if idx > 0 && m[idx - 1] == v {
            run + 1.0
        } else {
            1.0
        };
        size *= pos / run;
        pos += 1.0;
    }
    size
}

/// Matrix of `A ↦ X* A X` on `W` in the chosen basis (columns are images).
pub fn conjugation_matrix(x: &CMatrix, field: Field) -> CMatrix {
    let d = x.nrows();
    let units = base_units(d, field);
    let n = units.len();
    let mut m = CMatrix::zeros(n, n);
    for (col, &(i, j)) in units.iter().enumerate() {
        for (row, &(a, b)) in units.iter().enumerate() {
            let mut v = x[(i, a)].conj() * x[(j, b)];
            if field == Field::Real && i != j {
                v += x[(j, a)].conj() * x[(i, b)];
            }
            m[(row, col)] = v;
        }
    }
    m
}

/// Matrix representation of the symmetric lift of an operator on `W`.
struct SymPower {
    levels: Levels,
    /// `up[r][idx][i]`: index in level `r + 1` of multiset `idx` of level `r` joined with `i`.
    up: Vec<Vec<Vec<usize>>>,
    orbit: Vec<f64>,
}

impl SymPower {
    fn new(base: usize, k: usize) -> Self {
        let levels = Levels::new(base, k);
        let mut up = Vec::with_capacity(k);
        for r in 0..k {
            let table = levels.levels[r]
                .iter()
                .map(|m| {
                    (0..base as u16)
                        .map(|i| {
                            let mut t = m.clone();
                            let pos = t.partition_point(|&v| v <= i);
                            t.insert(pos, i);
                            levels.lookup[r + 1][&t]
                        })
                        .collect()
                })
                .collect();
            up.push(table);
        }
        let orbit = levels.levels[k].iter().map(|m| orbit_size(m)).collect();
        Self { levels, up, orbit }
    }

    fn k(&self) -> usize {
        self.levels.levels.len() - 1
    }

    fn basis(&self) -> &[Vec<u16>] {
        &self.levels.levels[self.k()]
    }

    /// Accumulates `weight · Sym^k(op)` into `out`.
    ///
    /// `b_M` maps to `orbit(M)·y^M` under the tensor-to-polynomial map, and
    /// `op^{⊗k}` becomes the substitution `y_j ↦ Σ_i op[i, j] y_i`; the column
    /// of `b_M` is the expanded product rescaled by `orbit(M) / orbit(N)`.
    fn accumulate(&self, op: &CMatrix, weight: f64, out: &mut CMatrix) {
        let k = self.k();
        let base = op.nrows();
        // polys[r][idx] = product of linear forms over multiset idx of level r,
        // as a dense vector over level r.
        let mut prev: Vec<Vec<Complex64>> = vec![vec![ONE]];
        for r in 1..=k {
            let lv = &self.levels.levels[r];
            let width = lv.len();
            let mut cur = Vec::with_capacity(width);
            for m in lv {
                let prefix = &m[..r - 1];
                let last = m[r - 1] as usize;
                let pidx = self.levels.lookup[r - 1][prefix];
                let p = &prev[pidx];
                let mut q = vec![ZERO; width];
                for (src, &c) in p.iter().enumerate() {
                    if c == ZERO {
                        continue;
                    }
                    let ups = &self.up[r - 1][src];
                    for i in 0..base {
                        let a = op[(i, last)];
                        if a != ZERO {
                            q[ups[i]] += c * a;
                        }
                    }
                }
                cur.push(q);
            }
            prev = cur;
        }
        for (col, poly) in prev.iter().enumerate() {
            let cm = self.orbit[col];
            for (row, &c) in poly.iter().enumerate() {
                if c != ZERO {
                    out[(row, col)] += c * (weight * cm / self.orbit[row]);
                }
            }
        }
    }
}

/// Transfer operator restricted to `Sym^k(W)`.
#[derive(Clone, Debug, Serialize)]
pub struct LiftedOperator {
    pub k: usize,
    pub field_flavor: Field,
    /// Matrix dimension `d` of the law.
    pub dim: usize,
    /// Matrix units spanning `W`, indexed by the entries of `basis`.
    pub units: Vec<(usize, usize)>,
    /// Sorted multisets of `units` indices, one per basis vector.
    pub basis: Vec<Vec<u16>>,
    #[serde(serialize_with = "crate::cjson::matrix")]
    pub rep: CMatrix,
    pub l: usize,
    /// Coordinates of `I_d^{⊗k}`.
    pub identity_vec: Vec<f64>,
    /// Trace functional: `Tr(v) = Σ_N trace_vec[N] · v_N`.
    pub trace_vec: Vec<f64>,
}

impl LiftedOperator {
    pub fn identity_vector(&self) -> DVector<Complex64> {
        DVector::from_iterator(
            self.l,
            self.identity_vec.iter().map(|&v| Complex64::new(v, 0.0)),
        )
    }

    /// Whether every entry of `rep` is real.
    pub fn is_real(&self) -> bool {
        self.rep.iter().all(|z| z.im == 0.0)
    }
}

/// Builds `v ↦ E[(X*)^{⊗k} v X^{⊗k}]` on the symmetric subspace.
pub fn build_transfer(law: &MatrixLaw, k: usize, flavor: Field) -> Result<LiftedOperator> {
    build_transfer_capped(law, k, flavor, DEFAULT_DIM_CAP)
}

pub fn build_transfer_capped(
    law: &MatrixLaw,
    k: usize,
    flavor: Field,
    cap: usize,
) -> Result<LiftedOperator> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    if flavor == Field::Real && law.field() != Field::Real {
        return Err(Error::FlavorMismatch);
    }
    let d = law.dim();
    let l = lift_dim(d, k, flavor);
    if l > cap as u128 {
        return Err(Error::CapExceeded {
            what: "lift dimension",
            value: l,
            cap: cap as u128,
        });
    }
    let l = l as usize;
    let units = base_units(d, flavor);
    let sym = SymPower::new(units.len(), k);
    debug_assert_eq!(sym.basis().len(), l);

    let mut rep = CMatrix::zeros(l, l);
    for (atom, &p) in law.atoms().iter().zip(law.weights()) {
        let op = conjugation_matrix(atom, flavor);
        sym.accumulate(&op, p, &mut rep);
    }
    if flavor == Field::Real {
        rep.iter_mut().for_each(|z| z.im = 0.0);
    }
    if rep.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite {
            what: "transfer operator",
            n: 0,
        });
    }

    let is_diag: Vec<bool> = units.iter().map(|&(i, j)| i == j).collect();
    let basis = sym.basis().to_vec();
    let identity_vec: Vec<f64> = basis
        .iter()
        .map(|m| {
            if m.iter().all(|&w| is_diag[w as usize]) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let trace_vec = identity_vec
        .iter()
        .zip(&sym.orbit)
        .map(|(&id, &c)| id * c)
        .collect();

    Ok(LiftedOperator {
        k,
        field_flavor: flavor,
        dim: d,
        units,
        basis,
        rep,
        l,
        identity_vec,
        trace_vec,
    })
}

/// `a_0, …, a_N` with `a_n = E‖X_1⋯X_n‖_HS^{2k}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentSequence {
    pub k: usize,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl MomentSequence {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Iterates `rep` on the identity vector and applies the trace functional.
pub fn exact_moment_sequence(op: &LiftedOperator, n_max: usize) -> Result<MomentSequence> {
    let tr = DVector::from_iterator(op.l, op.trace_vec.iter().map(|&v| Complex64::new(v, 0.0)));
    let mut v = op.identity_vector();
    let mut values = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            v = &op.rep * v;
        }
        let a = tr.dot(&v).re;
        if !a.is_finite() {
            return Err(Error::NonFinite {
                what: "moment sequence",
                n,
            });
        }
        values.push(a);
    }
    Ok(MomentSequence {
        k: op.k,
        dim: op.dim,
        values,
    })
}

/// Monic characteristic polynomial `x^l + c_1 x^{l−1} + … + c_l`.
#[derive(Clone, Debug, Serialize)]
pub struct CharPoly {
    #[serde(serialize_with = "crate::cjson::complex_vec")]
    pub coeffs: Vec<Complex64>,
}

impl CharPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs.iter().fold(ONE, |acc, &c| acc * x + c)
    }
}

/// Characteristic polynomial by the Faddeev–LeVerrier trace recursion.
pub fn char_poly(op: &LiftedOperator) -> Result<CharPoly> {
    char_poly_of(&op.rep)
}

pub fn char_poly_of(a: &CMatrix) -> Result<CharPoly> {
    let l = a.nrows();
    let identity = CMatrix::identity(l, l);
    let mut m = CMatrix::zeros(l, l);
    let mut prev = ONE;
    let mut coeffs = Vec::with_capacity(l);
    for j in 1..=l {
        m = a * &m + &identity * prev;
        let am = a * &m;
        let c = -am.trace() / j as f64;
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::NonFinite {
                what: "characteristic polynomial",
                n: j,
            });
        }
        coeffs.push(c);
        prev = c;
    }
    Ok(CharPoly { coeffs })
}

/// Relative residuals `|a_{n+l} + Σ c_i a_{n+l−i}| / max(1, |a_{n+l}|)`.
pub fn verify_recurrence(seq: &MomentSequence, cp: &CharPoly) -> Result<Vec<f64>> {
    let l = cp.degree();
    let a = &seq.values;
    if a.len() < l + 1 {
        return Err(Error::SequenceTooShort {
            needed: l + 1,
            got: a.len(),
        });
    }
    Ok((0..a.len() - l)
        .map(|n| {
            let mut s = Complex64::new(a[n + l], 0.0);
            for (i, &c) in cp.coeffs.iter().enumerate() {
                s += c * a[n + l - 1 - i];
            }
            s.norm() / a[n + l].abs().max(1.0)
        })
        .collect())
}

/// Numerical rank of the Hankel matrix `[a_{i+j}]`, i.e. the length of the
/// shortest linear recurrence the data supports at relative tolerance `tol`.
pub fn minimal_recurrence_length(seq: &MomentSequence, tol: f64) -> usize {
    let a = &seq.values;
    if a.is_empty() {
        return 0;
    }
    let size = a.len().div_ceil(2);
    let rows = size;
    let cols = a.len() + 1 - size;
    let h = DMatrix::from_fn(rows, cols, |i, j| a[i + j]);
    let sv = h.singular_values();
    let top = sv.iter().cloned().fold(0.0f64, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * top).count()
}
