//! Moments of `S_f(x) = Σ_{n≤x} f(n)`.
//!
//! * exactly for `k = 1`, through `E‖S_f(x)‖²_HS = Σ_r N_{x,r} a_r`;
//! * by Monte Carlo for any `k`;
//! * by enumerating every assignment of atoms to the primes `≤ x` (tiny `x`);
//! * through the square-tuple sum that bounds the higher moments.
//!
//! Monte Carlo trial `t` reads its atoms from random stream `t` of the seed,
//! one draw per prime in ascending order, so each trial is reproducible on its
//! own and the reduction runs in trial order.

use std::collections::HashMap;
use std::ops::{Add, AddAssign, Mul};

use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::law::{CMatrix, MatrixLaw};
use crate::lift::MomentSequence;
use crate::rng::KeyedStream;
use crate::sieve::{build_sieve, SieveTable};
use crate::sum::Neumaier;

/// Byte budget of the per-trial table of `f(n)`.
pub const MEMO_BYTES: usize = 64 << 20;
/// Largest number of atom assignments enumerated by [`brute_force_moment`].
pub const BRUTE_FORCE_CAP: u128 = 10_000_000;
/// Largest `x^{2k}` accepted by [`square_tuple_sum`].
pub const SQUARE_TUPLE_BUDGET: u128 = 100_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub x: u64,
    pub k: usize,
    pub exact: Option<f64>,
    pub mc_estimate: f64,
    pub mc_stderr: f64,
    pub trials: usize,
    pub predicted: Option<f64>,
    pub seed: u64,
}

/// `Σ_r N_{x,r} a_r` at `x = table.x_max()`.
///
/// This equals `E‖S_f(x)‖²_HS` when the law is centered: the cross terms
/// `E⟨f(n), f(n')⟩` vanish for `n ≠ n'` only if `E X = 0`.
pub fn exact_second_moment(table: &SieveTable, seq: &MomentSequence) -> Result<f64> {
    exact_second_moment_from_hist(table.hist(), seq)
}

/// `Σ_r N_{x,r} a_r` at `x ≤ table.x_max()`.
pub fn exact_second_moment_at(table: &SieveTable, x: u64, seq: &MomentSequence) -> Result<f64> {
    if x < 1 || x > table.x_max() {
        return Err(Error::InvalidArgument(format!(
            "x = {x} outside the sieve range 1..={}",
            table.x_max()
        )));
    }
    exact_second_moment_from_hist(&table.hist_up_to(x), seq)
}

fn exact_second_moment_from_hist(hist: &[u64], seq: &MomentSequence) -> Result<f64> {
    if seq.k != 1 {
        return Err(Error::InvalidArgument(format!(
            "the exact second moment needs k = 1, got k = {}",
            seq.k
        )));
    }
    if seq.values.len() < hist.len() {
        return Err(Error::SequenceTooShort {
            needed: hist.len(),
            got: seq.values.len(),
        });
    }
    let mut acc = Neumaier::default();
    for (&count, &a) in hist.iter().zip(&seq.values) {
        acc.add(count as f64 * a);
    }
    Ok(acc.value())
}

trait Scalar:
    Copy + Send + Sync + Zero + One + Add<Output = Self> + Mul<Output = Self> + AddAssign
{
    fn from_complex(z: Complex64) -> Self;
    fn to_complex(self) -> Complex64;
    fn abs2(self) -> f64;
}

impl Scalar for f64 {
    fn from_complex(z: Complex64) -> Self {
        z.re
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn abs2(self) -> f64 {
        self * self
    }
}

impl Scalar for Complex64 {
    fn from_complex(z: Complex64) -> Self {
        z
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
}

/// `c = a·b` for row-major `d×d` blocks.
#[inline]
fn mat_mul<T: Scalar>(a: &[T], b: &[T], c: &mut [T], d: usize) {
    for i in 0..d {
        for j in 0..d {
            let mut s = T::zero();
            for l in 0..d {
                s += a[i * d + l] * b[l * d + j];
            }
            c[i * d + j] = s;
        }
    }
}

/// Per-trial sampler over a fixed sieve range, with reusable buffers.
struct Kernel<'a, T> {
    d: usize,
    x: usize,
    table: &'a SieveTable,
    law: &'a MatrixLaw,
    atoms: Vec<Vec<T>>,
    identity: Vec<T>,
    primes: &'a [u32],
    memo_limit: usize,
}

struct Scratch<T> {
    choice: Vec<u32>,
    memo: Vec<T>,
    tmp: Vec<T>,
    acc: Vec<T>,
}

impl<'a, T: Scalar> Kernel<'a, T> {
    fn new(law: &'a MatrixLaw, table: &'a SieveTable, x: u64, memo_bytes: usize) -> Self {
        let d = law.dim();
        let flatten = |a: &CMatrix| -> Vec<T> {
            (0..d * d)
                .map(|i| T::from_complex(a[(i / d, i % d)]))
                .collect()
        };
        let atoms = law.atoms().iter().map(flatten).collect();
        let identity = flatten(&CMatrix::identity(d, d));
        let all = table.primes();
        let primes = &all[..all.partition_point(|&p| p as u64 <= x)];
        let per_entry = d * d * std::mem::size_of::<T>();
        let memo_limit = (x as usize).min(memo_bytes / per_entry);
        Self {
            d,
            x: x as usize,
            table,
            law,
            atoms,
            identity,
            primes,
            memo_limit,
        }
    }

    fn scratch(&self) -> Scratch<T> {
        let dd = self.d * self.d;
        Scratch {
            choice: vec![0; self.primes.len()],
            memo: vec![T::zero(); (self.memo_limit + 1) * dd],
            tmp: vec![T::zero(); dd],
            acc: vec![T::zero(); dd],
        }
    }

    fn atom_of_prime(&self, choice: &[u32], p: usize) -> &[T] {
        let rank = self
            .primes
            .binary_search(&(p as u32))
            .expect("prime in range");
        &self.atoms[choice[rank] as usize]
    }

    /// `Σ_{n≤x} f(n)` for one trial, row-major.
    fn partial_sum(&self, s: &mut Scratch<T>, seed: u64, trial: u64) -> Vec<T> {
        let d = self.d;
        let dd = d * d;
        let mut stream = KeyedStream::new(seed, trial);
        for c in s.choice.iter_mut() {
            *c = self.law.pick(stream.next_unit()) as u32;
        }
        let mut total = self.identity.clone();
        for n in 2..=self.x {
            if !self.table.is_squarefree(n as u64) {
                continue;
            }
            if n <= self.memo_limit {
                // f(n) = f(p)·f(n/p) with p the smallest prime factor of n
                let p = self.table.smallest_prime_factor(n as u64) as usize;
                let rest = n / p;
                let (head, tail) = s.memo.split_at_mut(n * dd);
                let out = &mut tail[..dd];
                if rest == 1 {
                    out.copy_from_slice(self.atom_of_prime(&s.choice, p));
                } else {
                    mat_mul(
                        &head[p * dd..(p + 1) * dd],
                        &head[rest * dd..(rest + 1) * dd],
                        out,
                        d,
                    );
                }
                for (t, v) in total.iter_mut().zip(out.iter()) {
                    *t += *v;
                }
            } else {
                s.acc.copy_from_slice(&self.identity);
                let mut m = n;
                while m > self.memo_limit {
                    let q = self.table.smallest_prime_factor(m as u64) as usize;
                    let fq = if q <= self.memo_limit {
                        &s.memo[q * dd..(q + 1) * dd]
                    } else {
                        self.atom_of_prime(&s.choice, q)
                    };
                    mat_mul(&s.acc, fq, &mut s.tmp, d);
                    std::mem::swap(&mut s.acc, &mut s.tmp);
                    m /= q;
                }
                if m > 1 {
                    mat_mul(&s.acc, &s.memo[m * dd..(m + 1) * dd], &mut s.tmp, d);
                    std::mem::swap(&mut s.acc, &mut s.tmp);
                }
                for (t, v) in total.iter_mut().zip(&s.acc) {
                    *t += *v;
                }
            }
        }
        total
    }

    fn to_matrix(&self, flat: &[T]) -> CMatrix {
        CMatrix::from_fn(self.d, self.d, |i, j| flat[i * self.d + j].to_complex())
    }
}

fn check_range(table: &SieveTable, x: u64) -> Result<()> {
    if x < 1 || x > table.x_max() {
        return Err(Error::InvalidArgument(format!(
            "x = {x} outside the sieve range 1..={}",
            table.x_max()
        )));
    }
    Ok(())
}

/// One Monte Carlo realization of `Σ_{n≤x} f(n)` with `x = table.x_max()`.
pub fn mc_partial_sum(law: &MatrixLaw, table: &SieveTable, seed: u64, trial: u64) -> CMatrix {
    mc_partial_sum_with(law, table, table.x_max(), seed, trial, MEMO_BYTES)
        .expect("x_max is in range")
}

/// As [`mc_partial_sum`] for `x ≤ table.x_max()` and an explicit memo budget in bytes.
pub fn mc_partial_sum_with(
    law: &MatrixLaw,
    table: &SieveTable,
    x: u64,
    seed: u64,
    trial: u64,
    memo_bytes: usize,
) -> Result<CMatrix> {
    check_range(table, x)?;
    let kernel = Kernel::<Complex64>::new(law, table, x, memo_bytes);
    let mut scratch = kernel.scratch();
    let flat = kernel.partial_sum(&mut scratch, seed, trial);
    Ok(kernel.to_matrix(&flat))
}

/// Mean and standard error of `‖S_f(x)‖^{2k}_HS` over `trials` trials at `x = table.x_max()`.
pub fn mc_moment(
    law: &MatrixLaw,
    table: &SieveTable,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<MomentReport> {
    mc_moment_at(law, table, table.x_max(), k, trials, seed)
}

pub fn mc_moment_at(
    law: &MatrixLaw,
    table: &SieveTable,
    x: u64,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<MomentReport> {
    check_range(table, x)?;
    if trials < 2 {
        return Err(Error::InvalidArgument(
            "Monte Carlo needs at least 2 trials".into(),
        ));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let samples = if law.field() == crate::law::Field::Real {
        samples_for::<f64>(law, table, x, k, trials, seed)
    } else {
        samples_for::<Complex64>(law, table, x, k, trials, seed)
    };
    let (mean, stderr) = mean_and_stderr(&samples);
    Ok(MomentReport {
        x,
        k,
        exact: None,
        mc_estimate: mean,
        mc_stderr: stderr,
        trials,
        predicted: None,
        seed,
    })
}

fn samples_for<T: Scalar>(
    law: &MatrixLaw,
    table: &SieveTable,
    x: u64,
    k: usize,
    trials: usize,
    seed: u64,
) -> Vec<f64> {
    let kernel = Kernel::<T>::new(law, table, x, MEMO_BYTES);
    (0..trials as u64)
        .into_par_iter()
        .map_init(
            || kernel.scratch(),
            |scratch, t| {
                let s = kernel.partial_sum(scratch, seed, t);
                let hs: f64 = s.iter().map(|v| v.abs2()).sum();
                hs.powi(k as i32)
            },
        )
        .collect()
}

fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mut sum = Neumaier::default();
    for &v in samples {
        sum.add(v);
    }
    let mean = sum.value() / n;
    let mut ss = Neumaier::default();
    for &v in samples {
        ss.add((v - mean) * (v - mean));
    }
    let var = ss.value() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Exact `E‖S_f(x)‖^{2k}_HS` by enumerating all `m^{π(x)}` atom assignments.
pub fn brute_force_moment(law: &MatrixLaw, x: u64, k: usize) -> Result<f64> {
    let d = law.dim();
    if x <= 1 {
        return Ok((d as f64).powi(k as i32));
    }
    let table = build_sieve(x)?;
    let primes: Vec<usize> = table.primes().iter().map(|&p| p as usize).collect();
    let m = law.len() as u128;
    let count = (0..primes.len()).try_fold(1u128, |acc, _| {
        acc.checked_mul(m).filter(|&v| v <= BRUTE_FORCE_CAP)
    });
    let Some(count) = count else {
        return Err(Error::CapExceeded {
            what: "brute-force assignments",
            value: m.saturating_pow(primes.len() as u32),
            cap: BRUTE_FORCE_CAP,
        });
    };
    let squarefree: Vec<Vec<usize>> = (2..=x)
        .filter(|&n| table.is_squarefree(n))
        .map(|n| {
            table
                .prime_factors(n)
                .into_iter()
                .map(|p| primes.binary_search(&(p as usize)).expect("prime"))
                .collect()
        })
        .collect();
    let atoms = law.atoms();
    let weights = law.weights();
    let mut digits = vec![0usize; primes.len()];
    let mut acc = Neumaier::default();
    for _ in 0..count {
        let mut s = CMatrix::identity(d, d);
        for ranks in &squarefree {
            let mut f = atoms[digits[ranks[0]]].clone();
            for &r in &ranks[1..] {
                f *= &atoms[digits[r]];
            }
            s += f;
        }
        let weight: f64 = digits.iter().map(|&i| weights[i]).product();
        let hs: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        acc.add(weight * hs.powi(k as i32));
        for dgt in digits.iter_mut() {
            *dgt += 1;
            if *dgt < atoms.len() {
                break;
            }
            *dgt = 0;
        }
    }
    Ok(acc.value())
}

/// `Σ μ²(n_1)⋯μ²(n_{2k}) m^{(ω(n_1)+⋯+ω(n_{2k}))/2}` over `n_i ≤ x` with `n_1⋯n_{2k}` a square.
pub fn square_tuple_sum(x: u64, k: usize, m_weight: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let budget = (x as u128).checked_pow(2 * k as u32).unwrap_or(u128::MAX);
    if budget > SQUARE_TUPLE_BUDGET {
        return Err(Error::CapExceeded {
            what: "square-tuple enumeration x^(2k)",
            value: budget,
            cap: SQUARE_TUPLE_BUDGET,
        });
    }
    if x <= 1 {
        return Ok(1.0);
    }
    let table = build_sieve(x)?;
    let m = m_weight as f64;
    if k == 1 {
        // n_1 n_2 is a square iff n_1 = n_2
        let mut acc = Neumaier::default();
        for n in (1..=x).filter(|&n| table.is_squarefree(n)) {
            acc.add(m.powi(table.omega(n) as i32));
        }
        return Ok(acc.value());
    }
    // Meet in the middle: both halves of the tuple must have the same prime-parity mask.
    let primes = table.primes();
    if primes.len() > 128 {
        return Err(Error::CapExceeded {
            what: "square-tuple prime count",
            value: primes.len() as u128,
            cap: 128,
        });
    }
    let elems: Vec<(u128, u32)> = (1..=x)
        .filter(|&n| table.is_squarefree(n))
        .map(|n| {
            let mask = table
                .prime_factors(n)
                .into_iter()
                .map(|p| 1u128 << primes.binary_search(&(p as u32)).expect("prime"))
                .fold(0, |a, b| a | b);
            (mask, table.omega(n))
        })
        .collect();
    let mut halves: HashMap<u128, Vec<u128>> = HashMap::from([(0u128, vec![1u128])]);
    for _ in 0..k {
        let mut next: HashMap<u128, Vec<u128>> = HashMap::new();
        for (mask, counts) in &halves {
            for &(em, ew) in &elems {
                let slot = next.entry(mask ^ em).or_default();
                let need = counts.len() + ew as usize;
                if slot.len() < need {
                    slot.resize(need, 0);
                }
                for (w, &c) in counts.iter().enumerate() {
                    slot[w + ew as usize] += c;
                }
            }
        }
        halves = next;
    }
    let mut acc = Neumaier::default();
    let mut keys: Vec<&u128> = halves.keys().collect();
    keys.sort_unstable();
    for key in keys {
        let counts = &halves[key];
        for (s, &a) in counts.iter().enumerate() {
            for (t, &b) in counts.iter().enumerate() {
                if a == 0 || b == 0 {
                    continue;
                }
                acc.add((a * b) as f64 * m.powf((s + t) as f64 / 2.0));
            }
        }
    }
    Ok(acc.value())
}
