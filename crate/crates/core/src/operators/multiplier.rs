use rustfft::num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

use super::ZERO;
use crate::grid::{advect, spectral, Field, Rank};
use crate::{Error, Result};

type ScalarFn = dyn Fn(&[f64; 3]) -> Complex64 + Send + Sync;
type MatrixFn = dyn Fn(&[f64; 3]) -> [[Complex64; 3]; 3] + Send + Sync;

/// A Fourier symbol evaluated at the raw wave vector `k != 0`.
#[derive(Clone)]
pub enum Symbol {
    /// Acts componentwise on fields of any rank.
    Scalar(Arc<ScalarFn>),
    /// Acts on vector fields, or on the first index of matrix fields.
    Matrix(Arc<MatrixFn>),
}

/// A Fourier multiplier with a degree-0 homogeneous symbol.
///
/// The symbol is only consulted on modes that are neither zero nor touching a
/// Nyquist plane; every other coefficient of the output is zero.
#[derive(Clone)]
pub struct Multiplier {
    name: String,
    symbol: Symbol,
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multiplier").field("name", &self.name).finish()
    }
}

impl Multiplier {
    pub fn scalar(
        name: impl Into<String>,
        f: impl Fn(&[f64; 3]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            symbol: Symbol::Scalar(Arc::new(f)),
        }
    }

    pub fn matrix(
        name: impl Into<String>,
        f: impl Fn(&[f64; 3]) -> [[Complex64; 3]; 3] + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            symbol: Symbol::Matrix(Arc::new(f)),
        }
    }

    /// Symbol 1: removes the mean (and Nyquist content).
    pub fn identity() -> Self {
        Self::scalar("identity", |_| Complex64::new(1.0, 0.0))
    }

    pub fn riesz(axis: usize) -> Self {
        Self::scalar(format!("R{}", axis + 1), move |k| {
            Complex64::new(0.0, k[axis] / norm(k))
        })
    }

    /// `R_i R_j`, symbol `-k_i k_j / |k|^2`.
    pub fn riesz_product(i: usize, j: usize) -> Self {
        Self::scalar(format!("R{}R{}", i + 1, j + 1), move |k| {
            Complex64::new(-k[i] * k[j] / norm2(k), 0.0)
        })
    }

    /// The Leray projector `I - k k^T / |k|^2` in dimension `d`.
    pub fn leray(d: usize) -> Self {
        Self::matrix("H", move |k| {
            let k2 = norm2(k);
            let mut m = [[ZERO; 3]; 3];
            for i in 0..d {
                for j in 0..d {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    m[i][j] = Complex64::new(delta - k[i] * k[j] / k2, 0.0);
                }
            }
            m
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    /// Largest deviation `|m(s k) - m(k)|` over the given wave vectors and
    /// scales. Zero for an exactly homogeneous symbol.
    pub fn homogeneity_defect(&self, ks: &[[f64; 3]], scales: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for k in ks {
            for &s in scales {
                let ks = [s * k[0], s * k[1], s * k[2]];
                let dev = match &self.symbol {
                    Symbol::Scalar(f) => (f(&ks) - f(k)).norm(),
                    Symbol::Matrix(f) => {
                        let (a, b) = (f(&ks), f(k));
                        let mut m = 0.0_f64;
                        for i in 0..3 {
                            for j in 0..3 {
                                m = m.max((a[i][j] - b[i][j]).norm());
                            }
                        }
                        m
                    }
                };
                worst = worst.max(dev);
            }
        }
        worst
    }

    /// Applies the multiplier to `f`.
    pub fn apply(&self, f: &Field) -> Result<Field> {
        let d = f.grid().d();
        match &self.symbol {
            Symbol::Scalar(s) => Ok(spectral::scale_spectrum(f, |m| {
                if m.is_singular_integral_active() {
                    s(&m.k)
                } else {
                    ZERO
                }
            })),
            Symbol::Matrix(s) => {
                let cols = match f.rank() {
                    Rank::Vector => 1,
                    Rank::Matrix => d,
                    Rank::Scalar => {
                        return Err(Error::RankMismatch {
                            expected: "vector or matrix".into(),
                            found: "scalar".into(),
                        })
                    }
                };
                Ok(spectral::map_spectrum(f, f.rank(), |m, inp, out| {
                    if !m.is_singular_integral_active() {
                        return;
                    }
                    let sym = s(&m.k);
                    for i in 0..d {
                        for c in 0..cols {
                            for j in 0..d {
                                out[i * cols + c] += sym[i][j] * inp[j * cols + c];
                            }
                        }
                    }
                }))
            }
        }
    }
}

fn norm2(k: &[f64; 3]) -> f64 {
    k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
}

fn norm(k: &[f64; 3]) -> f64 {
    norm2(k).sqrt()
}

/// Applies a Calderón–Zygmund multiplier.
pub fn cz_apply(k: &Multiplier, f: &Field) -> Result<Field> {
    k.apply(f)
}

/// Steady commutator `eta . grad (K f) - K (eta . grad f)`.
pub fn commutator_steady(eta: &Field, k: &Multiplier, f: &Field) -> Result<Field> {
    let a = advect(eta, &k.apply(f)?)?;
    let b = k.apply(&advect(eta, f)?)?;
    a.sub(&b)
}
