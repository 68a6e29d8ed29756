//! Initial data presets and seeded rough fields.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::Model;
use crate::grid::{spectral, Field, GridSpec, Rank};
use crate::operators::leray_h;
use crate::{Error, Result};

/// Named families of initial data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `u0 = 0`, `tau0 = 0`.
    Zero,
    /// Shear velocity `A sin(k x2) e1` and a single-mode state.
    SingleMode,
    /// Taylor-Green vortex with zero state.
    TaylorGreen,
    /// Random-phase fields with power-law spectrum.
    RoughEnvelope,
}

/// A preset together with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSpec {
    pub preset: Preset,
    pub amplitude: f64,
    /// Integer wavenumber of the single-mode preset.
    pub wavenumber: u32,
    pub seed: u64,
    /// Spectral decay `|k|^{-(alpha + d/2)}` of the rough preset.
    pub alpha: f64,
    /// Largest integer wavevector length kept by the rough preset; `None`
    /// keeps every mode below the Nyquist frequency.
    pub cutoff: Option<f64>,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            preset: Preset::SingleMode,
            amplitude: 0.1,
            wavenumber: 1,
            seed: 0,
            alpha: 0.5,
            cutoff: None,
        }
    }
}

/// Initial velocity and initial transported state.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub u0: Field,
    pub tau0: Field,
}

impl DataSpec {
    pub fn preset(preset: Preset, amplitude: f64) -> Self {
        Self {
            preset,
            amplitude,
            ..Self::default()
        }
    }

    pub fn build(&self, grid: &GridSpec, model: &Model) -> Result<InitialData> {
        if !self.amplitude.is_finite() {
            return Err(Error::NonFinite("amplitude"));
        }
        let a = self.amplitude;
        let rank = model.state_rank();
        let k = self.wavenumber as f64 * 2.0 * PI / grid.length();
        Ok(match self.preset {
            Preset::Zero => InitialData {
                u0: Field::zeros(grid, Rank::Vector),
                tau0: Field::zeros(grid, rank),
            },
            Preset::SingleMode => {
                let u0 = Field::vector_fn(grid, |x| [a * (k * x[1]).sin(), 0.0, 0.0]);
                let tau0 = match rank {
                    Rank::Matrix => Field::matrix_fn(grid, |x| {
                        let c = a * (k * x[0]).cos();
                        [[0.0, c, 0.0], [c, 0.0, 0.0], [0.0; 3]]
                    }),
                    Rank::Vector => Field::vector_fn(grid, |x| [0.0, a * (k * x[0]).sin(), 0.0]),
                    Rank::Scalar => Field::scalar_fn(grid, |x| a * (k * x[0]).cos()),
                };
                InitialData { u0, tau0 }
            }
            Preset::TaylorGreen => {
                let s = 2.0 * PI / grid.length();
                let u0 = if grid.d() == 2 {
                    Field::vector_fn(grid, |x| {
                        let (x1, x2) = (s * x[0], s * x[1]);
                        [a * x1.sin() * x2.cos(), -a * x1.cos() * x2.sin(), 0.0]
                    })
                } else {
                    Field::vector_fn(grid, |x| {
                        let (x1, x2, x3) = (s * x[0], s * x[1], s * x[2]);
                        [
                            a * x1.sin() * x2.cos() * x3.cos(),
                            -a * x1.cos() * x2.sin() * x3.cos(),
                            0.0,
                        ]
                    })
                };
                InitialData {
                    u0,
                    tau0: Field::zeros(grid, rank),
                }
            }
            Preset::RoughEnvelope => {
                let u0 = leray_h(&rough_field(grid, Rank::Vector, self.alpha, self.seed, 0, self.cutoff)?)?;
                let raw = rough_field(grid, rank, self.alpha, self.seed, 1, self.cutoff)?;
                let tau0 = match rank {
                    Rank::Matrix => raw.symmetrized()?,
                    Rank::Vector => leray_h(&raw)?,
                    Rank::Scalar => raw,
                };
                InitialData {
                    u0: u0.scale(a),
                    tau0: tau0.scale(a),
                }
            }
        })
    }
}

/// Phase in `[0, 2 pi)` attached to an integer wavevector and component.
/// Depends only on its arguments, so fields on refined grids share the
/// phases of the coarse modes.
pub fn envelope_phase(seed: u64, stream: u64, k: [i64; 3], component: usize) -> f64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in [stream, k[0] as u64, k[1] as u64, k[2] as u64, component as u64] {
        h = (h ^ v).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 31;
    }
    ChaCha8Rng::seed_from_u64(h).gen_range(0.0..2.0 * PI)
}

/// Sum of `|k|^{-(alpha + d/2)} cos(k . x + phase)` over the integer
/// wavevectors `0 < |k| <= cutoff` with no Nyquist component, one
/// independent phase per component. Normalized so that the coefficient
/// vector has unit Euclidean length per component.
pub fn rough_field(
    grid: &GridSpec,
    rank: Rank,
    alpha: f64,
    seed: u64,
    stream: u64,
    cutoff: Option<f64>,
) -> Result<Field> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("envelope exponent {alpha} must be positive")));
    }
    let d = grid.d();
    let exponent = alpha + 0.5 * d as f64;
    let cutoff = cutoff.unwrap_or(f64::INFINITY);
    let total = grid.len() as f64;
    let nc = rank.components(d);
    let mut spectra = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; nc];
    let mut energy = 0.0;
    for flat in 0..grid.len() {
        let idx = grid.multi_index(flat);
        let mut k = [0i64; 3];
        for a in 0..d {
            k[a] = grid.signed_mode(idx[a]);
        }
        if grid.mode(flat).nyquist {
            continue;
        }
        // One representative of each +-k pair.
        match k[..d].iter().find(|&&v| v != 0) {
            Some(&first) if first > 0 => {}
            _ => continue,
        }
        let norm = k[..d].iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
        if norm > cutoff {
            continue;
        }
        let amp = norm.powf(-exponent);
        energy += amp * amp;
        for (c, spec) in spectra.iter_mut().enumerate() {
            let phase = envelope_phase(seed, stream, k, c);
            spec[flat] = Complex64::from_polar(total * amp, phase);
        }
    }
    if energy == 0.0 {
        return Ok(Field::zeros(grid, rank));
    }
    let scale = energy.sqrt().recip();
    let comps = spectra
        .into_iter()
        .map(|s| spectral::inverse(grid, s).into_iter().map(|v| v * scale).collect())
        .collect();
    Field::from_components(grid, rank, comps)
}
