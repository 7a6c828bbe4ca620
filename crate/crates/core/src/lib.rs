//! Random matrix-valued multiplicative functions.
//!
//! A random matrix-valued multiplicative function assigns i.i.d. random
//! d×d matrices `f(p)` to the primes and sets `f(p_1⋯p_r) = f(p_1)⋯f(p_r)`
//! for squarefree `n` with `p_1 < ⋯ < p_r` (and `f(n) = 0` otherwise). This
//! crate computes the quantities governing the moments
//! `E‖Σ_{n≤x} f(n)‖_HS^{2k}`:
//!
//! * [`law`]: finitely supported matrix laws, validation and sampling;
//! * [`lift`]: the transfer operator `A ↦ E[X*AX]`, its symmetric-power
//!   lifts, exact moment sequences and their linear recurrences;
//! * [`spectral`]: eigenvalue clustering and the exponential-polynomial fit
//!   `a_n = Σ g_i(n) λ_i^n`;
//! * [`euler`], [`gamma`] and [`asymptotic`]: Euler products, the complex
//!   gamma function and the Selberg–Delange second-moment expansion;
//! * [`sieve`]: squarefree and `ω(n)` tables;
//! * [`moments`]: exact, Monte Carlo and brute-force moments;
//! * [`jsr`]: spectral `2k`-radii and joint spectral radius brackets.

pub mod asymptotic;
pub mod cjson;
pub mod error;
pub mod euler;
pub mod gamma;
pub mod jsr;
pub mod law;
pub mod lift;
pub mod moments;
pub mod rng;
pub mod sieve;
pub mod spectral;
pub mod sum;

pub use asymptotic::{expansion_constants, predict_second_moment, AsymptoticExpansion};
pub use error::{Error, Result};
pub use euler::{EulerProductValue, EulerProducts};
pub use jsr::{gripenberg, rho_2k, rho_ladder, JsrBounds, JsrOptions, RadiusLadder};
pub use law::{CMatrix, Field, MatrixLaw, ValidationReport};
pub use lift::{
    build_transfer, char_poly, exact_moment_sequence, verify_recurrence, CharPoly, LiftedOperator,
    MomentSequence,
};
pub use moments::{
    brute_force_moment, exact_second_moment, mc_moment, mc_partial_sum, square_tuple_sum,
    MomentReport,
};
pub use num_complex::Complex64;
pub use sieve::{build_sieve, SieveTable};
pub use spectral::{spectral_decompose, SpectralData};
