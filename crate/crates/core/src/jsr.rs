//! Spectral `2k`-radii and joint spectral radius brackets.
//!
//! `ρ_{2k}` is the `2k`-th root of the leading eigenvalue of the `k`-th lift.
//! The joint spectral radius bracket is a Gripenberg-style branch and bound over
//! products `W = A_{i_1} A_{i_2} ⋯ A_{i_n}`. Each node carries
//! `ν(W) = min_j ‖A_{i_1}⋯A_{i_j}‖^{1/j}` (spectral norm); a node is pruned once
//! `ν(W) ≤ lower + δ`. Every long product splits into prefixes that were either
//! pruned or reached the depth limit, so the largest `ν` over pruned and frontier
//! nodes bounds `ρ_∞` from above.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::law::{CMatrix, MatrixLaw};
use crate::lift::{build_transfer, exact_moment_sequence};
use crate::spectral::{cluster_eigenvalues, eigenvalues};

/// Tolerance on the imaginary part and sign of the leading lifted eigenvalue.
pub const LEADING_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct JsrOptions {
    pub delta: f64,
    pub max_depth: usize,
    /// Largest number of products evaluated.
    pub budget: u64,
}

impl Default for JsrOptions {
    fn default() -> Self {
        Self {
            delta: 1e-3,
            max_depth: 16,
            budget: 10_000_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct JsrBounds {
    pub lower: f64,
    pub upper: f64,
    /// Longest product length evaluated.
    pub depth: usize,
    pub delta: f64,
    /// False when the node budget stopped the search early.
    pub complete: bool,
    /// True when every branch was pruned before the depth limit.
    pub exhausted: bool,
    pub nodes: u64,
    /// Atom indices of a product attaining `lower`.
    pub best_product: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusLadder {
    pub ks: Vec<usize>,
    pub rho: Vec<f64>,
    /// `a_n^{1/(2kn)}` at `n = n_probe`, when requested.
    pub probes: Vec<Option<f64>>,
    pub n_probe: Option<usize>,
}

/// Leading eigenvalue of the `k`-th lift raised to `1/(2k)`.
pub fn rho_2k(law: &MatrixLaw, k: usize) -> Result<f64> {
    let op = build_transfer(law, k, law.field())?;
    let eigs = eigenvalues(&op.rep)?;
    let clusters = cluster_eigenvalues(&eigs, op.is_real());
    let (lead, _) = clusters
        .iter()
        .copied()
        .max_by(|a, b| a.0.norm().total_cmp(&b.0.norm()))
        .ok_or_else(|| Error::Integrity("empty spectrum".into()))?;
    let scale = lead.norm().max(1.0);
    if lead.im.abs() > LEADING_TOL * scale || lead.re < -LEADING_TOL * scale {
        return Err(Error::Integrity(format!(
            "leading lifted eigenvalue {lead} is not a non-negative real"
        )));
    }
    Ok(lead.re.max(0.0).powf(1.0 / (2 * k) as f64))
}

/// `ρ_2, ρ_4, …, ρ_{2 k_max}` with optional convergence probes.
pub fn rho_ladder(law: &MatrixLaw, k_max: usize, n_probe: Option<usize>) -> Result<RadiusLadder> {
    let mut ladder = RadiusLadder {
        ks: Vec::new(),
        rho: Vec::new(),
        probes: Vec::new(),
        n_probe,
    };
    for k in 1..=k_max {
        ladder.ks.push(k);
        ladder.rho.push(rho_2k(law, k)?);
        let probe = match n_probe {
            Some(n) if n > 0 => {
                let op = build_transfer(law, k, law.field())?;
                let seq = exact_moment_sequence(&op, n)?;
                Some(seq.values[n].max(0.0).powf(1.0 / (2 * k * n) as f64))
            }
            _ => None,
        };
        ladder.probes.push(probe);
    }
    Ok(ladder)
}

fn spectral_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].norm();
    }
    if m.nrows() == 2 {
        let f2: f64 = m.iter().map(|z| z.norm_sqr()).sum();
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let disc = (f2 * f2 - 4.0 * det.norm_sqr()).max(0.0).sqrt();
        return ((f2 + disc) / 2.0).sqrt();
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

fn spectral_radius(m: &CMatrix) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].norm();
    }
    if m.nrows() == 2 {
        let tr = m[(0, 0)] + m[(1, 1)];
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let disc = (tr * tr - det * 4.0).sqrt();
        return ((tr + disc) / 2.0).norm().max(((tr - disc) / 2.0).norm());
    }
    match eigenvalues(m) {
        Ok(e) => e.iter().map(|z| z.norm()).fold(0.0, f64::max),
        // eigenvalues only fail on non-finite input
        Err(_) => f64::NAN,
    }
}

struct Node {
    word: Vec<usize>,
    product: CMatrix,
    nu: f64,
}

struct Evaluated {
    node: Node,
    radius: f64,
}

pub fn gripenberg(atoms: &[CMatrix], opts: JsrOptions) -> Result<JsrBounds> {
    if atoms.is_empty() {
        return Err(Error::InvalidArgument("empty matrix set".into()));
    }
    if !(opts.delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must be positive, got {}",
            opts.delta
        )));
    }
    if opts.max_depth == 0 {
        return Err(Error::InvalidArgument("max_depth must be positive".into()));
    }
    let d = atoms[0].nrows();
    if atoms.iter().any(|a| a.nrows() != d || a.ncols() != d) {
        return Err(Error::InvalidArgument(
            "matrices must share one square shape".into(),
        ));
    }
    if atoms
        .iter()
        .any(|a| a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()))
    {
        return Err(Error::InvalidArgument("non-finite matrix entry".into()));
    }

    let mut lower = 0.0f64;
    let mut best_product = Vec::new();
    let mut pruned_max = 0.0f64;
    let mut nodes = 0u64;
    let mut complete = true;
    let mut depth = 0;

    let root = Node {
        word: Vec::new(),
        product: DMatrix::identity(d, d),
        nu: f64::INFINITY,
    };
    let mut frontier = vec![root];
    for level in 1..=opts.max_depth {
        let want = frontier.len() as u64 * atoms.len() as u64;
        if nodes + want > opts.budget {
            complete = false;
            break;
        }
        let children: Vec<Evaluated> = frontier
            .par_iter()
            .flat_map_iter(|parent| {
                atoms.iter().enumerate().map(move |(i, a)| {
                    let product = &parent.product * a;
                    let inv = 1.0 / level as f64;
                    let nu = parent.nu.min(spectral_norm(&product).powf(inv));
                    let radius = spectral_radius(&product).powf(inv);
                    let mut word = parent.word.clone();
                    word.push(i);
                    Evaluated {
                        node: Node { word, product, nu },
                        radius,
                    }
                })
            })
            .collect();
        nodes += children.len() as u64;
        depth = level;
        for c in &children {
            if c.radius > lower {
                lower = c.radius;
                best_product = c.node.word.clone();
            }
        }
        let mut next = Vec::with_capacity(children.len());
        for c in children {
            if c.node.nu <= lower + opts.delta {
                pruned_max = pruned_max.max(c.node.nu);
            } else {
                next.push(c.node);
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    let exhausted = frontier.is_empty();
    let frontier_max = frontier.iter().map(|n| n.nu).fold(0.0, f64::max);
    let upper = pruned_max.max(frontier_max).max(lower);
    if !lower.is_finite() || !upper.is_finite() {
        return Err(Error::NonFinite {
            what: "joint spectral radius bound",
            n: depth,
        });
    }
    Ok(JsrBounds {
        lower,
        upper,
        depth,
        delta: opts.delta,
        complete,
        exhausted,
        nodes,
        best_product,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{rademacher_law, real_matrix, sl2_law};
    use num_complex::Complex64;

    fn diag(a: f64, b: f64) -> CMatrix {
        real_matrix(2, &[a, 0.0, 0.0, b])
    }

    #[test]
    fn identity_set() {
        let b = gripenberg(&[CMatrix::identity(2, 2)], JsrOptions::default()).unwrap();
        assert_eq!(b.lower, 1.0);
        assert_eq!(b.upper, 1.0);
        assert!(b.exhausted && b.complete);
    }

    #[test]
    fn commuting_diagonals() {
        let b = gripenberg(&[diag(2.0, 0.0), diag(0.0, 3.0)], JsrOptions::default()).unwrap();
        assert!((b.lower - 3.0).abs() < 1e-12);
        assert!((b.upper - 3.0).abs() < 1e-12);
        assert_eq!(b.best_product, vec![1]);
    }

    #[test]
    fn sl2_bracket() {
        let law = sl2_law();
        let opts = JsrOptions {
            max_depth: 12,
            ..JsrOptions::default()
        };
        let b = gripenberg(law.atoms(), opts).unwrap();
        // ρ_∞² = 1.8173540… (seven decimals)
        assert!(
            b.lower.powi(2) < 1.8173541 && b.upper.powi(2) >= 1.8173540,
            "{b:?}"
        );
        assert!(b.upper - b.lower <= 0.02);
    }

    #[test]
    fn smaller_delta_never_worsens() {
        let atoms = [
            real_matrix(2, &[1.0, 1.0, 0.0, 1.0]),
            real_matrix(2, &[1.0, 0.0, 1.0, 1.0]),
        ];
        let coarse = gripenberg(
            &atoms,
            JsrOptions {
                delta: 0.1,
                max_depth: 10,
                ..Default::default()
            },
        )
        .unwrap();
        let fine = gripenberg(
            &atoms,
            JsrOptions {
                delta: 0.01,
                max_depth: 10,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(fine.lower >= coarse.lower - 1e-15);
        assert!(fine.upper <= coarse.upper + 1e-15);
        // golden ratio is attained by the product of the two shears
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(fine.lower <= phi + 1e-12 && phi <= fine.upper + 1e-12);
    }

    #[test]
    fn budget_flags_incomplete() {
        let law = sl2_law();
        let b = gripenberg(
            law.atoms(),
            JsrOptions {
                budget: 100,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!b.complete);
        assert!(b.lower <= b.upper);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(gripenberg(&[], JsrOptions::default()).is_err());
        let i = CMatrix::identity(2, 2);
        assert!(gripenberg(
            &[i.clone()],
            JsrOptions {
                delta: 0.0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(gripenberg(&[i, CMatrix::identity(3, 3)], JsrOptions::default()).is_err());
    }

    #[test]
    fn norms_match_svd() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.3, -1.0),
                Complex64::new(2.0, 0.5),
                Complex64::new(-0.7, 0.0),
                Complex64::new(1.1, 0.9),
            ],
        );
        let svd = m.singular_values().iter().cloned().fold(0.0, f64::max);
        assert!((spectral_norm(&m) - svd).abs() < 1e-12);
        let eig = eigenvalues(&m)
            .unwrap()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!((spectral_radius(&m) - eig).abs() < 1e-12);
    }

    #[test]
    fn sl2_radii() {
        let law = sl2_law();
        let want = ((3.0 + 3f64.sqrt()) / 4.0).sqrt();
        assert!((rho_2k(&law, 1).unwrap() - want).abs() < 1e-10);
        let ladder = rho_ladder(&law, 3, None).unwrap();
        assert!(ladder.rho.windows(2).all(|w| w[0] < w[1]));
        assert!(ladder.rho[2] < 1.34809);
    }

    #[test]
    fn trivial_ladders() {
        let r = rho_ladder(&rademacher_law(), 4, Some(10)).unwrap();
        for (&v, p) in r.rho.iter().zip(&r.probes) {
            assert!((v - 1.0).abs() < 1e-12);
            assert!((p.unwrap() - 1.0).abs() < 1e-12);
        }
        let id = MatrixLaw::deterministic(CMatrix::identity(3, 3)).unwrap();
        assert!((rho_2k(&id, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gelfand_probe() {
        let a = real_matrix(2, &[0.5, 1.0, 0.2, 0.9]);
        let law = MatrixLaw::deterministic(a.clone()).unwrap();
        let rho = spectral_radius(&a);
        let ladder = rho_ladder(&law, 1, Some(50)).unwrap();
        assert!((ladder.rho[0] - rho).abs() < 1e-10);
        assert!((ladder.probes[0].unwrap() / rho - 1.0).abs() < 0.05);
    }
}
