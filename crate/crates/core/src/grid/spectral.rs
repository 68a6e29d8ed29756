//! Real <-> spectral transforms and spectral calculus.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::{Field, GridSpec, Mode, Rank};
use crate::{Error, Result};

type Plan = Arc<dyn Fft<f64>>;

fn plan(n: usize, direction: FftDirection) -> Plan {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = plans.lock().unwrap_or_else(|e| e.into_inner());
    let key = (n, direction == FftDirection::Forward);
    guard
        .entry(key)
        .or_insert_with(|| FftPlanner::new().plan_fft(n, direction))
        .clone()
}

fn transform_in_place(grid: &GridSpec, data: &mut [Complex64], direction: FftDirection) {
    let n = grid.n();
    let fft = plan(n, direction);
    let total = grid.len();
    debug_assert_eq!(data.len(), total);

    // Last axis is contiguous.
    fft.process(data);

    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..grid.d() - 1 {
        let stride = n.pow((grid.d() - 1 - axis) as u32);
        let block = stride * n;
        for base in (0..total).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[start + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[start + j * stride] = *v;
                }
            }
        }
    }
}

/// Unnormalized forward DFT of real samples.
pub fn forward(grid: &GridSpec, values: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_in_place(grid, &mut data, FftDirection::Forward);
    data
}

/// Inverse DFT, normalized by `1/N`, keeping the real part.
pub fn inverse(grid: &GridSpec, mut spectrum: Vec<Complex64>) -> Vec<f64> {
    transform_in_place(grid, &mut spectrum, FftDirection::Inverse);
    let scale = 1.0 / grid.len() as f64;
    spectrum.into_iter().map(|c| c.re * scale).collect()
}

/// Applies a per-mode linear map from the input components to `out_rank`
/// components. The closure receives the mode, the input coefficients and a
/// zeroed output slice.
pub(crate) fn map_spectrum<F>(f: &Field, out_rank: Rank, mut symbol: F) -> Field
where
    F: FnMut(&Mode, &[Complex64], &mut [Complex64]),
{
    let grid = *f.grid();
    let d = grid.d();
    let n_in = f.rank().components(d);
    let n_out = out_rank.components(d);
    let spec = f.spectrum();
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![vec![zero; grid.len()]; n_out];
    let mut input = [zero; 9];
    let mut output = [zero; 9];
    for flat in 0..grid.len() {
        for c in 0..n_in {
            input[c] = spec[c][flat];
        }
        output[..n_out].fill(zero);
        let mode = grid.mode(flat);
        symbol(&mode, &input[..n_in], &mut output[..n_out]);
        for c in 0..n_out {
            out[c][flat] = output[c];
        }
    }
    Field::from_spectra(grid, out_rank, out)
}

/// Same as [`map_spectrum`] but componentwise with a scalar symbol.
pub(crate) fn scale_spectrum<F>(f: &Field, mut symbol: F) -> Field
where
    F: FnMut(&Mode) -> Complex64,
{
    let grid = *f.grid();
    let symbols: Vec<Complex64> = (0..grid.len()).map(|i| symbol(&grid.mode(i))).collect();
    let spectra = f
        .spectrum()
        .iter()
        .map(|s| s.iter().zip(&symbols).map(|(a, b)| a * b).collect())
        .collect();
    Field::from_spectra(grid, f.rank(), spectra)
}

/// `d f / d x_axis` by multiplication with `i k_axis`; the Nyquist
/// coefficient of the derivative is zero.
pub fn spectral_derivative(f: &Field, axis: usize) -> Result<Field> {
    let d = f.grid().d();
    if axis >= d {
        return Err(Error::InvalidAxis { axis, d });
    }
    Ok(scale_spectrum(f, |m| Complex64::new(0.0, m.kd[axis])))
}

/// Gradient, raising the rank by one: scalar -> vector, vector -> matrix with
/// `(grad u)_{ij} = d_j u_i`.
pub fn gradient(f: &Field) -> Result<Field> {
    let out_rank = match f.rank() {
        Rank::Scalar => Rank::Vector,
        Rank::Vector => Rank::Matrix,
        Rank::Matrix => {
            return Err(Error::RankMismatch {
                expected: "scalar or vector".into(),
                found: "matrix".into(),
            })
        }
    };
    let d = f.grid().d();
    Ok(map_spectrum(f, out_rank, |m, inp, out| {
        for (i, v) in inp.iter().enumerate() {
            for j in 0..d {
                out[i * d + j] = v * Complex64::new(0.0, m.kd[j]);
            }
        }
    }))
}

/// Divergence, lowering the rank by one. For matrices the last index is
/// contracted: `(div s)_i = sum_j d_j s_{ij}`.
pub fn divergence(f: &Field) -> Result<Field> {
    let d = f.grid().d();
    match f.rank() {
        Rank::Vector => Ok(map_spectrum(f, Rank::Scalar, |m, inp, out| {
            for j in 0..d {
                out[0] += inp[j] * Complex64::new(0.0, m.kd[j]);
            }
        })),
        Rank::Matrix => Ok(map_spectrum(f, Rank::Vector, |m, inp, out| {
            for i in 0..d {
                for j in 0..d {
                    out[i] += inp[i * d + j] * Complex64::new(0.0, m.kd[j]);
                }
            }
        })),
        Rank::Scalar => Err(Error::RankMismatch {
            expected: "vector or matrix".into(),
            found: "scalar".into(),
        }),
    }
}

/// 2/3-rule truncation: zeroes every mode with some `|m_j| > n/3`.
pub fn dealias(f: &Field) -> Field {
    scale_spectrum(f, |m| {
        if m.dealiased_out {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}
