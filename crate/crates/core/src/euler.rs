//! Truncated Euler products `P(z) = Π_p (1 + z/p)(1 − 1/p)^z` and `∂_s P(s, z)|_{s=1}`.
//!
//! Each factor is accumulated in log space with compensated summation. The
//! truncation error is bounded from `|log factor| ≤ (|z|² + |z|)/p²` for
//! `p ≥ 2(|z| + 1)` and `Σ_{p>B} p^{−2} ≤ Σ_{odd n>B} n^{−2} ≤ 1/(2(B − 1))`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gamma::recip_gamma;
use crate::sieve::primes_up_to;
use crate::sum::ComplexNeumaier;

/// Default truncation point of the products.
pub const DEFAULT_PRIME_BOUND: u64 = 10_000_000;
/// Smallest accepted truncation point.
pub const MIN_PRIME_BOUND: u64 = 100;

/// A truncated product together with a bound on `|full − truncated|`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EulerProductValue {
    #[serde(serialize_with = "crate::cjson::complex")]
    pub value: Complex64,
    pub tail_bound: f64,
    pub prime_bound: u64,
}

/// Prime table reused across evaluations of `P`, `P_s` and `F`.
#[derive(Clone, Debug)]
pub struct EulerProducts {
    prime_bound: u64,
    primes: Vec<f64>,
    logs: Vec<f64>,
}

impl EulerProducts {
    pub fn new(prime_bound: u64) -> Result<Self> {
        if prime_bound < MIN_PRIME_BOUND {
            return Err(Error::InvalidArgument(format!(
                "prime bound {prime_bound} is below {MIN_PRIME_BOUND}"
            )));
        }
        let primes: Vec<f64> = primes_up_to(prime_bound)?
            .into_iter()
            .map(f64::from)
            .collect();
        let logs = primes.iter().map(|p| p.ln()).collect();
        Ok(Self {
            prime_bound,
            primes,
            logs,
        })
    }

    pub fn prime_bound(&self) -> u64 {
        self.prime_bound
    }

    fn check(&self, z: Complex64) -> Result<()> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite argument {z}")));
        }
        if (self.prime_bound as f64) < 2.0 * (z.norm() + 1.0) {
            return Err(Error::InvalidArgument(format!(
                "prime bound {} too small for |z| = {}",
                self.prime_bound,
                z.norm()
            )));
        }
        Ok(())
    }

    /// True when some factor `1 + z/p` vanishes, i.e. `z = −p` for a prime `p ≤ B`.
    fn hits_zero(&self, z: Complex64) -> bool {
        z.im == 0.0
            && z.re < 0.0
            && self
                .primes
                .binary_search_by(|p| p.total_cmp(&-z.re))
                .is_ok()
    }

    fn log_product(&self, z: Complex64) -> Complex64 {
        let mut acc = ComplexNeumaier::default();
        for &p in &self.primes {
            acc.add(ln_1p(z / p) + z * (-1.0 / p).ln_1p());
        }
        acc.value()
    }

    fn tail_exponent(&self, z: Complex64) -> f64 {
        let a = z.norm();
        (a * a + a) / (2.0 * (self.prime_bound as f64 - 1.0))
    }

    pub fn p(&self, z: Complex64) -> Result<EulerProductValue> {
        self.check(z)?;
        if self.hits_zero(z) {
            return Ok(self.value(Complex64::default(), 0.0));
        }
        if z == Complex64::default() {
            return Ok(self.value(Complex64::new(1.0, 0.0), 0.0));
        }
        let value = self.log_product(z).exp();
        let tail = value.norm() * self.tail_exponent(z).exp_m1();
        Ok(self.value(value, tail))
    }

    /// `∂_s P(s, z)` at `s = 1`, as `P(z)` times the logarithmic derivative.
    pub fn p_s(&self, z: Complex64) -> Result<EulerProductValue> {
        self.check(z)?;
        if z == Complex64::default() {
            return Ok(self.value(Complex64::default(), 0.0));
        }
        let one = Complex64::new(1.0, 0.0);
        if self.hits_zero(z) {
            // P vanishes through the factor at p = −z; only that factor's derivative survives.
            let p0 = -z.re;
            let mut acc = ComplexNeumaier::default();
            for &p in &self.primes {
                if p != p0 {
                    acc.add(ln_1p(z / p) + z * (-1.0 / p).ln_1p());
                }
            }
            // d/ds (1 + z p^{−s}) at s = 1 is −z ln p / p = ln p0 here.
            let rest = acc.value().exp() * (z * (-1.0 / p0).ln_1p()).exp();
            let value = rest * p0.ln();
            let tail = value.norm() * self.tail_exponent(z).exp_m1();
            return Ok(self.value(value, tail));
        }
        let mut acc = ComplexNeumaier::default();
        for (&p, &lp) in self.primes.iter().zip(&self.logs) {
            let bracket = one / (1.0 - 1.0 / p) - one / (one + z / p);
            acc.add(z * (lp / p) * bracket);
        }
        let log_deriv = acc.value();
        let p = self.log_product(z).exp();
        let value = p * log_deriv;

        let b = self.prime_bound as f64;
        let a = z.norm();
        let kappa = 1.0 / ((1.0 - 1.0 / b) * (1.0 - a / b));
        let sigma = kappa * a * (a + 1.0) * ((b - 1.0).ln() + 1.0) / (2.0 * (b - 1.0));
        let tau = self.tail_exponent(z);
        let tail = p.norm() * (tau.exp() * sigma + tau.exp_m1() * log_deriv.norm());
        Ok(self.value(value, tail))
    }

    /// `F(z) = P(z)/Γ(z)`.
    pub fn f(&self, z: Complex64) -> Result<EulerProductValue> {
        let p = self.p(z)?;
        let rg = recip_gamma(z);
        Ok(EulerProductValue {
            value: p.value * rg,
            tail_bound: p.tail_bound * rg.norm(),
            prime_bound: self.prime_bound,
        })
    }

    fn value(&self, value: Complex64, tail_bound: f64) -> EulerProductValue {
        EulerProductValue {
            value,
            tail_bound,
            prime_bound: self.prime_bound,
        }
    }
}

/// `ln(1 + w)` without cancellation for small `w`.
fn ln_1p(w: Complex64) -> Complex64 {
    let (a, b) = (w.re, w.im);
    let modulus = 0.5 * (2.0 * a + a * a + b * b).ln_1p();
    Complex64::new(modulus, b.atan2(1.0 + a))
}

pub fn euler_p(z: Complex64, prime_bound: u64) -> Result<EulerProductValue> {
    EulerProducts::new(prime_bound)?.p(z)
}

pub fn euler_p_s(z: Complex64, prime_bound: u64) -> Result<EulerProductValue> {
    EulerProducts::new(prime_bound)?.p_s(z)
}
