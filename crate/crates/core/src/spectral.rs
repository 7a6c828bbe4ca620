//! Eigenvalue clustering and the exponential-polynomial form of moment sequences.
//!
//! A sequence obeying the recurrence of `p_T = Π (x − λ_i)^{m_i}` has the unique
//! representation `a_n = Σ g_i(n) λ_i^n` with `deg g_i < m_i`. The polynomials
//! are recovered by a confluent Vandermonde solve on `a_0, …, a_{l−1}`. A zero
//! eigenvalue contributes a transient that only affects `a_0, …, a_{ν−1}`, with
//! `ν` its Jordan index; it is reported in `transient`.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lift::{LiftedOperator, MomentSequence};

/// Base clustering radius, scaled by `1 + spectral scale`.
pub const CLUSTER_RADIUS: f64 = 1e-8;
/// Largest accepted condition estimate for the column-equilibrated fit.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative reconstruction tolerance for the fitted representation.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;
/// Coefficients below this fraction of the largest one do not count toward a degree.
const DEGREE_TOL: f64 = 1e-8;
/// Largest relative clustering radius; Jordan blocks beyond size 5 are not resolved.
pub const MAX_SPREAD: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct SpectralData {
    /// Distinct eigenvalues, descending real part, ties by descending imaginary part.
    #[serde(serialize_with = "crate::cjson::complex_vec")]
    pub lambdas: Vec<Complex64>,
    pub mults: Vec<usize>,
    /// Leading coefficient `b_i` of each `g_i`; equals `α_i·Tr(v_i)` when `T` is diagonalizable.
    #[serde(serialize_with = "crate::cjson::complex_vec")]
    pub betas: Vec<Complex64>,
    /// Coefficients of `g_i` in increasing degree (empty for a zero eigenvalue).
    #[serde(serialize_with = "crate::cjson::complex_vec_vec")]
    pub g_polys: Vec<Vec<Complex64>>,
    pub degrees: Vec<usize>,
    /// Contributions `h_j` added to `a_j` for `j` below the multiplicity of eigenvalue 0.
    #[serde(serialize_with = "crate::cjson::complex_vec")]
    pub transient: Vec<Complex64>,
    /// Largest real part among eigenvalues with `deg g_i > 0`.
    pub r: Option<f64>,
    pub l1: Vec<usize>,
    pub l2: Vec<usize>,
    pub l2_prime: Vec<usize>,
    pub l3: Vec<usize>,
    pub d_max: usize,
    pub condition: f64,
}

impl SpectralData {
    pub fn is_diagonalizable_fit(&self) -> bool {
        self.degrees.iter().all(|&d| d == 0)
    }

    /// Evaluates `Σ g_i(n) λ_i^n` plus the transient.
    pub fn reconstruct(&self, n: usize) -> Complex64 {
        let mut s = self.transient.get(n).copied().unwrap_or_default();
        for (lambda, g) in self.lambdas.iter().zip(&self.g_polys) {
            if g.is_empty() {
                continue;
            }
            s += poly_eval(g, n as f64) * lambda.powu(n as u32);
        }
        s
    }
}

fn poly_eval(g: &[Complex64], n: f64) -> Complex64 {
    g.iter()
        .rev()
        .fold(Complex64::default(), |acc, &c| acc * n + c)
}

/// Eigenvalues of `m`, using the real Schur form when `m` is real.
pub fn eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().all(|z| z.im == 0.0) {
        let real = m.map(|z| z.re);
        let schur = Schur::try_new(real, f64::EPSILON, 10_000 * n.max(10))
            .ok_or_else(|| Error::Integrity("real Schur iteration did not converge".into()))?;
        return Ok(schur.complex_eigenvalues().iter().copied().collect());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000 * n.max(10))
        .ok_or_else(|| Error::Integrity("complex Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Radius within which a cluster of `size` computed eigenvalues is merged.
///
/// A multiplicity-`m` eigenvalue in a Jordan block spreads by about `ε^{1/m}`,
/// so the radius grows with the prospective cluster size, up to [`MAX_SPREAD`].
pub fn cluster_radius(size: usize, scale: f64) -> f64 {
    let spread = (4.0 * f64::EPSILON.powf(1.0 / size.max(1) as f64)).min(MAX_SPREAD);
    (1.0 + scale)
        * if size <= 1 {
            CLUSTER_RADIUS
        } else {
            CLUSTER_RADIUS.max(spread)
        }
}

/// Groups eigenvalues into distinct values with multiplicities.
pub fn cluster_eigenvalues(eigs: &[Complex64], real_matrix: bool) -> Vec<(Complex64, usize)> {
    let scale = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // Repeatedly take the largest group of m eigenvalues lying within
    // cluster_radius(m) of one of its members.
    let mut remaining: Vec<Complex64> = eigs.to_vec();
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    while !remaining.is_empty() {
        let mut best: Option<(usize, Vec<usize>)> = None;
        for &z in &remaining {
            let mut order: Vec<(f64, usize)> = remaining
                .iter()
                .enumerate()
                .map(|(j, &w)| ((w - z).norm(), j))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let size = (1..=order.len())
                .rev()
                .find(|&m| order[m - 1].0 <= cluster_radius(m, scale))
                .unwrap_or(1);
            if best.as_ref().is_none_or(|(m, _)| size > *m) {
                best = Some((size, order[..size].iter().map(|&(_, j)| j).collect()));
            }
        }
        let (_, mut members) = best.expect("non-empty");
        if members.len() == 1 {
            clusters.extend(remaining.drain(..).map(|z| vec![z]));
            break;
        }
        members.sort_unstable();
        clusters.push(members.iter().map(|&j| remaining[j]).collect());
        for &j in members.iter().rev() {
            remaining.remove(j);
        }
    }

    let mut out: Vec<(Complex64, usize)> = clusters
        .into_iter()
        .map(|c| {
            let size = c.len();
            // the mean of a split Jordan cluster is accurate to rounding level
            let mut center = c.iter().sum::<Complex64>() / size as f64;
            let radius = cluster_radius(1, scale);
            if real_matrix && center.im.abs() <= radius {
                center.im = 0.0;
            }
            if center.norm() <= radius {
                center = Complex64::default();
            }
            (center, size)
        })
        .collect();
    let tie = cluster_radius(1, scale);
    out.sort_by(|(a, _), (b, _)| {
        if (a.re - b.re).abs() > tie {
            b.re.total_cmp(&a.re)
        } else {
            b.im.total_cmp(&a.im)
        }
    });
    out
}

/// Fits `a_n = Σ g_i(n) λ_i^n` using the eigenvalues of `op.rep`.
pub fn spectral_decompose(op: &LiftedOperator, seq: &MomentSequence) -> Result<SpectralData> {
    let eigs = eigenvalues(&op.rep)?;
    decompose_with_eigenvalues(&eigs, op.is_real(), seq)
}

pub fn decompose_with_eigenvalues(
    eigs: &[Complex64],
    real_matrix: bool,
    seq: &MomentSequence,
) -> Result<SpectralData> {
    let l = eigs.len();
    if seq.values.len() < l {
        return Err(Error::SequenceTooShort {
            needed: l,
            got: seq.values.len(),
        });
    }
    let clusters = cluster_eigenvalues(eigs, real_matrix);
    let scale = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);

    // The zero eigenvalue only perturbs a_0, …, a_{ν−1} where ν is its Jordan
    // index. Fitting from row m0 instead would extrapolate backwards through
    // λ^{−m0} and blow up the coefficients, so take the shortest transient
    // that reproduces the sequence.
    let zero = Complex64::default();
    let m0: usize = clusters.iter().filter(|c| c.0 == zero).map(|c| c.1).sum();
    let mut last_err = None;
    let mut fitted = None;
    for nu in 0..=m0 {
        match fit_from_row(&clusters, seq, l, nu) {
            Ok(data) => {
                fitted = Some(data);
                break;
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some(mut data) = fitted else {
        return Err(last_err.expect("at least one attempt"));
    };
    classify(&mut data, cluster_radius(1, scale));
    Ok(data)
}

/// Fits the nonzero clusters on rows `nu..nu + size` and takes `a_0, …, a_{nu−1}`
/// minus that fit as the transient.
fn fit_from_row(
    clusters: &[(Complex64, usize)],
    seq: &MomentSequence,
    l: usize,
    nu: usize,
) -> Result<SpectralData> {
    let zero = Complex64::default();
    let size = l - clusters
        .iter()
        .filter(|c| c.0 == zero)
        .map(|c| c.1)
        .sum::<usize>();
    // Column layout: nonzero cluster c owns the next m_c columns.
    let mut a = DMatrix::<Complex64>::zeros(size, size);
    let mut col = 0;
    for &(lambda, m) in clusters.iter().filter(|c| c.0 != zero) {
        for j in 0..m {
            for row in 0..size {
                let n = nu + row;
                a[(row, col)] = lambda.powu(n as u32) * (n as f64).powi(j as i32);
            }
            col += 1;
        }
    }

    let norms: Vec<f64> = (0..size).map(|j| a.column(j).norm()).collect();
    let mut equilibrated = a;
    for (j, &nrm) in norms.iter().enumerate() {
        if nrm > 0.0 {
            equilibrated.column_mut(j).scale_mut(1.0 / nrm);
        }
    }
    let condition = if size == 0 {
        1.0
    } else {
        let sv = equilibrated.singular_values();
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        }
    };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }

    let rhs = DVector::from_iterator(
        size,
        seq.values[nu..nu + size]
            .iter()
            .map(|&v| Complex64::new(v, 0.0)),
    );
    let y = if size == 0 {
        DVector::zeros(0)
    } else {
        equilibrated
            .lu()
            .solve(&rhs)
            .ok_or(Error::IllConditioned { condition })?
    };
    let mut nonzero_coef = y
        .iter()
        .zip(&norms)
        .map(|(v, &nrm)| if nrm > 0.0 { v / nrm } else { *v });

    let mut lambdas = Vec::with_capacity(clusters.len());
    let mut mults = Vec::with_capacity(clusters.len());
    let mut g_polys = Vec::with_capacity(clusters.len());
    let mut degrees = Vec::with_capacity(clusters.len());
    let mut betas = Vec::with_capacity(clusters.len());
    for &(lambda, m) in clusters {
        lambdas.push(lambda);
        mults.push(m);
        if lambda == zero {
            g_polys.push(Vec::new());
            degrees.push(0);
            betas.push(zero);
            continue;
        }
        let block: Vec<Complex64> = nonzero_coef.by_ref().take(m).collect();
        let top = block.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let degree = block
            .iter()
            .rposition(|c| c.norm() > DEGREE_TOL * top)
            .unwrap_or(0);
        betas.push(block[degree]);
        degrees.push(degree);
        g_polys.push(block);
    }

    let mut data = SpectralData {
        lambdas,
        mults,
        betas,
        g_polys,
        degrees,
        transient: Vec::new(),
        r: None,
        l1: Vec::new(),
        l2: Vec::new(),
        l2_prime: Vec::new(),
        l3: Vec::new(),
        d_max: 0,
        condition,
    };

    data.transient = (0..nu)
        .map(|j| Complex64::new(seq.values[j], 0.0) - data.reconstruct(j))
        .collect();

    for (n, &v) in seq.values.iter().enumerate().take(2 * l + 1) {
        let err = (data.reconstruct(n) - v).norm();
        if err > RECONSTRUCTION_TOL * v.abs().max(1.0) {
            return Err(Error::Integrity(format!(
                "exponential-polynomial fit misses a_{n} by {err:.3e}"
            )));
        }
    }
    Ok(data)
}

/// Fills `r`, the index sets `L1`, `L2`, `L2'`, `L3` and `d_max`.
fn classify(data: &mut SpectralData, tol: f64) {
    let r = data
        .lambdas
        .iter()
        .zip(&data.degrees)
        .filter(|(_, &d)| d > 0)
        .map(|(z, _)| z.re)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    data.r = r;
    let Some(r) = r else {
        data.l1 = (0..data.lambdas.len()).collect();
        return;
    };
    for (i, z) in data.lambdas.iter().enumerate() {
        if z.re > r + tol {
            data.l1.push(i);
        } else if z.re >= r - tol {
            data.l2.push(i);
        } else {
            data.l3.push(i);
        }
    }
    data.d_max = data.l2.iter().map(|&i| data.degrees[i]).max().unwrap_or(0);
    data.l2_prime = data
        .l2
        .iter()
        .copied()
        .filter(|&i| data.degrees[i] == data.d_max)
        .collect();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{real_matrix, sl2_law, CMatrix, Field, MatrixLaw};
    use crate::lift::{build_transfer, exact_moment_sequence};

    fn decompose(law: &MatrixLaw, k: usize, flavor: Field) -> SpectralData {
        let op = build_transfer(law, k, flavor).unwrap();
        let seq = exact_moment_sequence(&op, 2 * op.l + 2).unwrap();
        spectral_decompose(&op, &seq).unwrap()
    }

    #[test]
    fn sl2_spectrum_and_weights() {
        let sd = decompose(&sl2_law(), 1, Field::Real);
        let s3 = 3f64.sqrt();
        let want_l = [(3.0 + s3) / 4.0, 0.5, (3.0 - s3) / 4.0];
        let want_b = [1.0 + 2.0 / s3, 0.0, 1.0 - 2.0 / s3];
        assert_eq!(sd.mults, vec![1, 1, 1]);
        for i in 0..3 {
            assert!((sd.lambdas[i] - Complex64::new(want_l[i], 0.0)).norm() < 1e-12);
            assert!((sd.betas[i] - Complex64::new(want_b[i], 0.0)).norm() < 1e-10);
        }
        assert!(sd.is_diagonalizable_fit());
        assert_eq!(sd.r, None);
        assert_eq!(sd.l1, vec![0, 1, 2]);
    }

    #[test]
    fn identity_operator_single_cluster() {
        let law = MatrixLaw::deterministic(CMatrix::identity(2, 2)).unwrap();
        let sd = decompose(&law, 1, Field::Complex);
        assert_eq!(sd.lambdas, vec![Complex64::new(1.0, 0.0)]);
        assert_eq!(sd.mults, vec![4]);
        assert_eq!(sd.degrees, vec![0]);
        assert!((sd.betas[0] - Complex64::new(2.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn jordan_law_is_defective() {
        let law = MatrixLaw::deterministic(real_matrix(2, &[1.0, 1.0, 0.0, 1.0])).unwrap();
        let sd = decompose(&law, 1, Field::Real);
        assert_eq!(sd.mults, vec![3]);
        assert_eq!(sd.degrees, vec![2]);
        assert_eq!(sd.d_max, 2);
        assert_eq!(sd.l2_prime, vec![0]);
        assert!((sd.r.unwrap() - 1.0).abs() < 1e-12);
        for (got, want) in sd.g_polys[0].iter().zip([2.0, 0.0, 1.0]) {
            assert!((got - Complex64::new(want, 0.0)).norm() < 1e-8);
        }

        // the complex lift carries a Jordan block of size 3 next to a 1-block
        let sd = decompose(&law, 1, Field::Complex);
        assert_eq!(sd.mults, vec![4]);
        assert_eq!(sd.degrees, vec![2]);
    }

    #[test]
    fn zero_law_transient() {
        let law = MatrixLaw::deterministic(CMatrix::zeros(2, 2)).unwrap();
        let sd = decompose(&law, 1, Field::Complex);
        assert_eq!(sd.lambdas, vec![Complex64::default()]);
        assert_eq!(sd.mults, vec![4]);
        assert!((sd.transient[0] - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        assert!(sd.transient[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn conjugate_pairs_for_rotation() {
        // rotation by 60°: eigenvalues of the conjugation map are e^{±2iθ} and 1
        let (c, s) = (0.5f64, 3f64.sqrt() / 2.0);
        let law = MatrixLaw::deterministic(real_matrix(2, &[c, -s, s, c])).unwrap();
        let sd = decompose(&law, 1, Field::Real);
        let complex: Vec<_> = sd.lambdas.iter().filter(|z| z.im != 0.0).collect();
        assert_eq!(complex.len(), 2);
        assert!((complex[0] - complex[1].conj()).norm() < 1e-12);
        let idx: Vec<_> = (0..3).filter(|&i| sd.lambdas[i].im != 0.0).collect();
        assert!((sd.betas[idx[0]] - sd.betas[idx[1]].conj()).norm() < 1e-10);
    }

    #[test]
    fn clustering_orders_ties_by_imaginary_part() {
        let eigs = [
            Complex64::new(0.5, -1.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.5, 1.0),
        ];
        let cl = cluster_eigenvalues(&eigs, true);
        assert_eq!(cl[0].0, Complex64::new(2.0, 0.0));
        assert_eq!(cl[1].0, Complex64::new(0.5, 1.0));
        assert_eq!(cl[2].0, Complex64::new(0.5, -1.0));
    }

    #[test]
    fn short_sequence_rejected() {
        let op = build_transfer(&sl2_law(), 1, Field::Real).unwrap();
        let seq = exact_moment_sequence(&op, 1).unwrap();
        assert!(matches!(
            spectral_decompose(&op, &seq),
            Err(Error::SequenceTooShort { .. })
        ));
    }
}
