//! Selberg–Delange expansion of the second moment.
//!
//! For `a_n = Σ β_i λ_i^n` the second moment is `Σ_{n≤x} μ²(n) a_{ω(n)}`, and
//! each eigenvalue contributes
//! `x Σ_m C_{i,m} (log x)^{λ_i − m}` with
//! `C_{i,1} = β_i F(λ_i)` and
//! `C_{i,2} = β_i ((γλ_i − 1) P(λ_i) + P_s(λ_i)) / Γ(λ_i − 1)`.
//! A defective eigenvalue whose polynomial `g_j` has the maximal degree `d_max`
//! among those of largest real part contributes the leading term
//! `b_j λ_j^{d_max} F(λ_j) x (log x)^{λ_j − 1} (log log x)^{d_max}`.
//!
//! Eigenvalue 0 only affects `a_0, …, a_{m−1}` and carries no term.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::euler::EulerProducts;
use crate::gamma::recip_gamma;
use crate::spectral::SpectralData;
use crate::sum::ComplexNeumaier;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;
/// Largest supported truncation order.
pub const MAX_ORDER: usize = 2;
/// Allowed relative imaginary residue of a prediction.
pub const IMAG_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionTerm {
    #[serde(rename = "lambda", serialize_with = "crate::cjson::complex")]
    pub lambda: Complex64,
    pub m: usize,
    #[serde(rename = "C", serialize_with = "crate::cjson::complex")]
    pub c: Complex64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DefectiveTerm {
    #[serde(serialize_with = "crate::cjson::complex")]
    pub lambda: Complex64,
    pub d_max: usize,
    #[serde(rename = "C", serialize_with = "crate::cjson::complex")]
    pub c: Complex64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticExpansion {
    pub terms: Vec<ExpansionTerm>,
    pub defective_terms: Vec<DefectiveTerm>,
    #[serde(rename = "N")]
    pub order: usize,
    /// Exponent `Re λ_1 − N − 1` of `log x` in the error term.
    pub error_exponent: f64,
    pub prime_bound: u64,
}

impl AsymptoticExpansion {
    /// Constant `C_{i,m}` of the term with eigenvalue `lambda` and order `m`.
    pub fn constant(&self, lambda: Complex64, m: usize) -> Option<Complex64> {
        self.terms
            .iter()
            .find(|t| t.m == m && t.lambda == lambda)
            .map(|t| t.c)
    }
}

pub fn expansion_constants(
    spec: &SpectralData,
    order: usize,
    products: &EulerProducts,
) -> Result<AsymptoticExpansion> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    let one = Complex64::new(1.0, 0.0);
    let mut terms = Vec::new();
    let mut defective_terms = Vec::new();
    for (i, &lambda) in spec.lambdas.iter().enumerate() {
        if lambda == Complex64::default() {
            continue;
        }
        let beta = spec.betas[i];
        if spec.degrees[i] == 0 {
            let p = products.p(lambda)?.value;
            terms.push(ExpansionTerm {
                lambda,
                m: 1,
                c: beta * p * recip_gamma(lambda),
            });
            if order >= 2 {
                let ps = products.p_s(lambda)?.value;
                let c = beta * ((EULER_GAMMA * lambda - one) * p + ps) * recip_gamma(lambda - one);
                terms.push(ExpansionTerm { lambda, m: 2, c });
            }
        } else if spec.l2_prime.contains(&i) {
            let f = products.f(lambda)?.value;
            defective_terms.push(DefectiveTerm {
                lambda,
                d_max: spec.d_max,
                c: beta * lambda.powu(spec.d_max as u32) * f,
            });
        }
    }
    let lead = spec.lambdas.first().map_or(0.0, |z| z.re);
    Ok(AsymptoticExpansion {
        terms,
        defective_terms,
        order,
        error_exponent: lead - order as f64 - 1.0,
        prime_bound: products.prime_bound(),
    })
}

/// Evaluates the full expansion at `x`.
pub fn predict_second_moment(exp: &AsymptoticExpansion, x: f64) -> Result<f64> {
    predict_to_order(exp, x, exp.order)
}

/// Evaluates the terms with `m ≤ order` (plus the defective terms) at `x ≥ 2`.
pub fn predict_to_order(exp: &AsymptoticExpansion, x: f64, order: usize) -> Result<f64> {
    if !(x >= 2.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "prediction needs x >= 2, got {x}"
        )));
    }
    let lx = x.ln();
    let llx = lx.ln();
    let mut acc = ComplexNeumaier::default();
    let mut scale = 0.0;
    for t in exp.terms.iter().filter(|t| t.m <= order) {
        let v = t.c * ((t.lambda - t.m as f64) * llx).exp() * x;
        scale += v.norm();
        acc.add(v);
    }
    for t in &exp.defective_terms {
        let v = t.c * ((t.lambda - 1.0) * llx).exp() * llx.powi(t.d_max as i32) * x;
        scale += v.norm();
        acc.add(v);
    }
    let total = acc.value();
    if total.im.abs() > IMAG_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Integrity(format!(
            "prediction has imaginary residue {:.3e} at x = {x}",
            total.im
        )));
    }
    Ok(total.re)
}
