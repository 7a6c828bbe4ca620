//! Complex gamma function (Lanczos approximation, g = 7, n = 9).

use std::f64::consts::PI;

use num_complex::Complex64;

const G: f64 = 7.0;
const COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Value of `Γ(z)`; the poles at `0, −1, −2, …` are represented explicitly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaValue {
    Finite(Complex64),
    Infinite,
}

impl GammaValue {
    /// `1/Γ(z)`, which is 0 at the poles.
    pub fn recip(self) -> Complex64 {
        match self {
            GammaValue::Finite(v) => v.inv(),
            GammaValue::Infinite => Complex64::new(0.0, 0.0),
        }
    }

    pub fn finite(self) -> Option<Complex64> {
        match self {
            GammaValue::Finite(v) => Some(v),
            GammaValue::Infinite => None,
        }
    }
}

fn is_pole(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0
}

pub fn gamma_complex(z: Complex64) -> GammaValue {
    if is_pole(z) {
        return GammaValue::Infinite;
    }
    if z.re < 0.5 {
        // reflection: Γ(z) Γ(1 − z) = π / sin(πz)
        let s = (z * PI).sin();
        let g = lanczos(Complex64::new(1.0, 0.0) - z);
        return GammaValue::Finite(Complex64::new(PI, 0.0) / (s * g));
    }
    GammaValue::Finite(lanczos(z))
}

/// `1/Γ(z)`, entire.
pub fn recip_gamma(z: Complex64) -> Complex64 {
    gamma_complex(z).recip()
}

fn lanczos(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::new(COEF[0], 0.0);
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    let log = (z + 0.5) * t.ln() - t + 0.5 * (2.0 * PI).ln() + x.ln();
    log.exp()
}
