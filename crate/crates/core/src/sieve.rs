//! Squarefree and `ω(n)` tables from a linear smallest-prime-factor sieve.
//!
//! Memory: one `u32` (smallest prime factor) plus one byte (`ω(n)` in the low
//! bits, squarefree flag in the high bit) per `n`, about 500 MB at `x = 10^8`,
//! plus the prime list.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::ComplexNeumaier;

/// Default upper limit for `x`.
pub const DEFAULT_SIEVE_CAP: u64 = 100_000_000;
/// `ω(n) ≤ 8` for `n ≤ 10^8`; the histogram keeps one spare slot.
pub const HIST_LEN: usize = 10;

const SQUAREFREE_BIT: u8 = 0x80;
const OMEGA_MASK: u8 = 0x7f;

/// Primes `≤ n` by the sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Result<Vec<u32>> {
    if n > u32::MAX as u64 {
        return Err(Error::CapExceeded {
            what: "prime bound",
            value: n as u128,
            cap: u32::MAX as u128,
        });
    }
    let n = n as usize;
    if n < 2 {
        return Ok(Vec::new());
    }
    let mut composite = vec![false; n + 1];
    let mut i = 2;
    while i * i <= n {
        if !composite[i] {
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
        i += 1;
    }
    Ok((2..=n)
        .filter(|&k| !composite[k])
        .map(|k| k as u32)
        .collect())
}

#[derive(Clone, Debug)]
pub struct SieveTable {
    x_max: u64,
    spf: Vec<u32>,
    info: Vec<u8>,
    primes: Vec<u32>,
    hist: Vec<u64>,
}

/// Summary emitted by the `sieve-stats` command.
#[derive(Clone, Debug, Serialize)]
pub struct SieveStats {
    pub x: u64,
    pub squarefree_count: u64,
    pub hist: Vec<u64>,
}

pub fn build_sieve(x: u64) -> Result<SieveTable> {
    build_sieve_capped(x, DEFAULT_SIEVE_CAP)
}

pub fn build_sieve_capped(x: u64, cap: u64) -> Result<SieveTable> {
    if x < 1 {
        return Err(Error::InvalidArgument(
            "sieve bound must be at least 1".into(),
        ));
    }
    if x > cap {
        return Err(Error::CapExceeded {
            what: "sieve bound",
            value: x as u128,
            cap: cap as u128,
        });
    }
    let n = x as usize;
    let mut spf = vec![0u32; n + 1];
    let mut primes: Vec<u32> = Vec::new();
    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
        }
        let si = spf[i];
        for &p in &primes {
            if p > si {
                break;
            }
            let j = i * p as usize;
            if j > n {
                break;
            }
            spf[j] = p;
        }
    }

    let mut info = vec![0u8; n + 1];
    let mut hist = vec![0u64; HIST_LEN];
    info[1] = SQUAREFREE_BIT;
    hist[0] = 1;
    for i in 2..=n {
        let p = spf[i];
        let m = i / p as usize;
        let (omega, sqf) = if m == 1 {
            (1, true)
        } else {
            let prev = info[m];
            let repeated = spf[m] == p;
            (
                (prev & OMEGA_MASK) + u8::from(!repeated),
                prev & SQUAREFREE_BIT != 0 && !repeated,
            )
        };
        info[i] = omega | if sqf { SQUAREFREE_BIT } else { 0 };
        if sqf {
            hist[omega as usize] += 1;
        }
    }
    while hist.len() > 1 && *hist.last().unwrap() == 0 {
        hist.pop();
    }

    Ok(SieveTable {
        x_max: x,
        spf,
        info,
        primes,
        hist,
    })
}

impl SieveTable {
    pub fn x_max(&self) -> u64 {
        self.x_max
    }

    pub fn omega(&self, n: u64) -> u32 {
        (self.info[n as usize] & OMEGA_MASK) as u32
    }

    pub fn is_squarefree(&self, n: u64) -> bool {
        self.info[n as usize] & SQUAREFREE_BIT != 0
    }

    pub fn smallest_prime_factor(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    /// Largest prime factor of `n ≥ 2` (walks the smallest-prime-factor chain).
    pub fn largest_prime_factor(&self, n: u64) -> u64 {
        let mut m = n as usize;
        let mut last = 1;
        while m > 1 {
            last = self.spf[m];
            m /= last as usize;
        }
        last as u64
    }

    /// Distinct prime factors of `n` in ascending order.
    pub fn prime_factors(&self, n: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut m = n as usize;
        while m > 1 {
            let p = self.spf[m];
            if out.last() != Some(&(p as u64)) {
                out.push(p as u64);
            }
            m /= p as usize;
        }
        out
    }

    /// Primes `≤ x_max`.
    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// `N_{x,r}` for `r = 0, …, max ω` at `x = x_max`.
    pub fn hist(&self) -> &[u64] {
        &self.hist
    }

    /// Histogram for a smaller bound `x ≤ x_max`.
    pub fn hist_up_to(&self, x: u64) -> Vec<u64> {
        let x = x.min(self.x_max) as usize;
        let mut hist = vec![0u64; HIST_LEN];
        for &b in &self.info[1..=x] {
            if b & SQUAREFREE_BIT != 0 {
                hist[(b & OMEGA_MASK) as usize] += 1;
            }
        }
        while hist.len() > 1 && *hist.last().unwrap() == 0 {
            hist.pop();
        }
        hist
    }

    pub fn squarefree_count(&self) -> u64 {
        self.hist.iter().sum()
    }

    pub fn stats(&self) -> SieveStats {
        SieveStats {
            x: self.x_max,
            squarefree_count: self.squarefree_count(),
            hist: self.hist.clone(),
        }
    }
}

/// `Σ_{n≤x} μ²(n) z^{ω(n)} = Σ_r N_{x,r} z^r`.
pub fn sum_z_omega(table: &SieveTable, z: Complex64) -> Complex64 {
    sum_omega_power(table, z, 0)
}

/// `Σ_{n≤x} μ²(n) ω(n)^r z^{ω(n)} = Σ_s N_{x,s} s^r z^s`.
pub fn sum_omega_power(table: &SieveTable, z: Complex64, r: u32) -> Complex64 {
    let mut acc = ComplexNeumaier::default();
    let mut zs = Complex64::new(1.0, 0.0);
    for (s, &count) in table.hist.iter().enumerate() {
        let weight = if r == 0 {
            1.0
        } else {
            (s as f64).powi(r as i32)
        };
        acc.add(zs * (count as f64 * weight));
        zs *= z;
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: u64) -> (u32, bool) {
        let (mut m, mut omega, mut sqf) = (n, 0, true);
        let mut p = 2;
        while p * p <= m {
            if m % p == 0 {
                omega += 1;
                m /= p;
                if m % p == 0 {
                    sqf = false;
                    while m % p == 0 {
                        m /= p;
                    }
                }
            }
            p += 1;
        }
        if m > 1 {
            omega += 1;
        }
        (omega, sqf)
    }

    #[test]
    fn small_table() {
        let t = build_sieve(10).unwrap();
        let sqf: Vec<u64> = (1..=10).filter(|&n| t.is_squarefree(n)).collect();
        assert_eq!(sqf, vec![1, 2, 3, 5, 6, 7, 10]);
        assert_eq!(t.hist(), &[1, 4, 2]);
        assert_eq!(t.squarefree_count(), 7);
        assert_eq!(t.primes(), &[2, 3, 5, 7]);
    }

    #[test]
    fn trivial_bound() {
        let t = build_sieve(1).unwrap();
        assert_eq!(t.hist(), &[1]);
        assert!(t.primes().is_empty());
        assert!(build_sieve(0).is_err());
        assert!(matches!(
            build_sieve_capped(1000, 999),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn agrees_with_trial_division() {
        let t = build_sieve(10_000).unwrap();
        for n in 1..=10_000u64 {
            let (omega, sqf) = trial_division(n);
            assert_eq!(t.omega(n), omega, "n = {n}");
            assert_eq!(t.is_squarefree(n), sqf, "n = {n}");
            assert!(n == 1 || t.omega(n) as f64 <= (n as f64).log2());
        }
        assert_eq!(t.largest_prime_factor(2 * 3 * 7 * 7), 7);
        assert_eq!(t.largest_prime_factor(9973), 9973);
        assert_eq!(t.prime_factors(60), vec![2, 3, 5]);
    }

    #[test]
    fn squarefree_density() {
        let t = build_sieve(1_000_000).unwrap();
        let count = t.squarefree_count() as f64;
        let x = 1e6;
        assert!((count - 6.0 / std::f64::consts::PI.powi(2) * x).abs() <= 2.0 * x.sqrt());
        assert!((0.59..=0.62).contains(&(count / x)));
        assert_eq!(t.hist_up_to(10), vec![1, 4, 2]);
        assert_eq!(t.hist_up_to(1_000_000), t.hist().to_vec());
    }

    #[test]
    fn histogram_sums() {
        let t = build_sieve(10).unwrap();
        assert_eq!(
            sum_z_omega(&t, Complex64::new(2.0, 0.0)),
            Complex64::new(17.0, 0.0)
        );
        assert_eq!(
            sum_z_omega(&t, Complex64::new(1.0, 0.0)),
            Complex64::new(7.0, 0.0)
        );
        assert_eq!(
            sum_omega_power(&t, Complex64::new(1.0, 0.0), 1),
            Complex64::new(8.0, 0.0)
        );
        let z = Complex64::new(0.3, -1.1);
        assert_eq!(sum_omega_power(&t, z, 0), sum_z_omega(&t, z));
    }

    #[test]
    fn contraction_matches_naive_sum() {
        let t = build_sieve(100_000).unwrap();
        for z in [2i64, -3, 5] {
            let naive: i128 = (1..=100_000u64)
                .filter(|&n| t.is_squarefree(n))
                .map(|n| (z as i128).pow(t.omega(n)))
                .sum();
            let got = sum_z_omega(&t, Complex64::new(z as f64, 0.0));
            assert_eq!(got.re, naive as f64);
        }
        let z = Complex64::new(0.8, 0.6);
        assert!((sum_z_omega(&t, z.conj()) - sum_z_omega(&t, z).conj()).norm() == 0.0);
    }

    #[test]
    fn eratosthenes_small() {
        assert_eq!(
            primes_up_to(30).unwrap(),
            vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
        );
        assert!(primes_up_to(1).unwrap().is_empty());
    }
}
