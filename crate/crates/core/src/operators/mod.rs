//! Solution operators of the Stokes system and degree-0 Fourier multipliers.
//!
//! Symbols follow `R_j = i k_j / |k|` for the Riesz transforms and
//! `H = I - k k^T / |k|^2` for the Leray projector, so that `H = I + R ⊗ R`.
//! Every degree-0 symbol is zero on the zero mode and on modes touching a
//! Nyquist plane.

mod duhamel;
mod multiplier;

pub use duhamel::{
    commutator_g, commutator_u, op_g, op_g_steady, op_u, Duhamel, DuhamelSpectra,
};
pub use multiplier::{commutator_steady, cz_apply, Multiplier, Symbol};

use rustfft::num_complex::Complex64;

use crate::grid::{spectral, Field, Mode, Rank};
use crate::{Error, Result};

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("time"));
    }
    Ok(())
}

/// `e^{nu t Laplacian} f`, spectral multiplication by `exp(-nu |k|^2 t)`.
pub fn heat_semigroup_nu(f: &Field, t: f64, nu: f64) -> Result<Field> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    Ok(spectral::scale_spectrum(f, |m| {
        Complex64::new((-nu * m.k2 * t).exp(), 0.0)
    }))
}

/// Heat semigroup with unit viscosity.
pub fn heat_semigroup(f: &Field, t: f64) -> Result<Field> {
    heat_semigroup_nu(f, t, 1.0)
}

/// Riesz transform `R_i`, symbol `i k_i / |k|`.
pub fn riesz(f: &Field, axis: usize) -> Result<Field> {
    let d = f.grid().d();
    if axis >= d {
        return Err(Error::InvalidAxis { axis, d });
    }
    Ok(spectral::scale_spectrum(f, |m| riesz_symbol(m, axis)))
}

pub(crate) fn riesz_symbol(m: &Mode, axis: usize) -> Complex64 {
    if !m.is_singular_integral_active() {
        return ZERO;
    }
    Complex64::new(0.0, m.k[axis] / m.norm())
}

/// Leray projector entries `delta_ij - k_i k_j / |k|^2` at one mode.
pub(crate) fn leray_symbol(m: &Mode, d: usize) -> [[f64; 3]; 3] {
    let mut h = [[0.0; 3]; 3];
    if !m.is_singular_integral_active() {
        return h;
    }
    for i in 0..d {
        for j in 0..d {
            let delta = if i == j { 1.0 } else { 0.0 };
            h[i][j] = delta - m.k[i] * m.k[j] / m.k2;
        }
    }
    h
}

/// Leray projection onto divergence-free vector fields.
pub fn leray_h(v: &Field) -> Result<Field> {
    if v.rank() != Rank::Vector {
        return Err(Error::RankMismatch {
            expected: "vector".into(),
            found: v.rank().to_string(),
        });
    }
    let d = v.grid().d();
    Ok(spectral::map_spectrum(v, Rank::Vector, |m, inp, out| {
        let h = leray_symbol(m, d);
        for i in 0..d {
            for j in 0..d {
                out[i] += inp[j] * h[i][j];
            }
        }
    }))
}

/// `L(u0)(t) = e^{t Laplacian} u0` with unit viscosity.
pub fn op_l(u0: &Field, t: f64) -> Result<Field> {
    heat_semigroup(u0, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{divergence, gradient, GridSpec};

    fn g2(n: usize) -> GridSpec {
        GridSpec::torus(2, n).unwrap()
    }

    #[test]
    fn heat_decays_single_mode() {
        let g = g2(16);
        let f = Field::scalar_fn(&g, |x| x[0].sin());
        let h = heat_semigroup(&f, 0.5).unwrap();
        let want = Field::scalar_fn(&g, |x| (-0.5f64).exp() * x[0].sin());
        assert!(h.sub(&want).unwrap().max_abs() < 1e-12);
        assert!(heat_semigroup(&f, 0.0).unwrap().sub(&f).unwrap().max_abs() < 1e-12);
        let c = Field::scalar_fn(&g, |_| 2.5);
        assert!(heat_semigroup(&c, 3.0).unwrap().sub(&c).unwrap().max_abs() < 1e-12);
        assert!(matches!(heat_semigroup(&f, -1.0), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn riesz_of_sine() {
        // Symbol i k/|k| on k = +-1 maps sin to cos.
        let g = g2(16);
        let f = Field::scalar_fn(&g, |x| x[0].sin());
        let r = riesz(&f, 0).unwrap();
        let want = Field::scalar_fn(&g, |x| x[0].cos());
        assert!(r.sub(&want).unwrap().max_abs() < 1e-12);
        let f2 = Field::scalar_fn(&g, |x| x[1].sin());
        assert!(riesz(&f2, 0).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn riesz_squares_sum_to_minus_identity() {
        let g = g2(16);
        let f = Field::scalar_fn(&g, |x| (x[0] + 2.0 * x[1]).sin() + (3.0 * x[1]).cos());
        let r1 = riesz(&riesz(&f, 0).unwrap(), 0).unwrap();
        let r2 = riesz(&riesz(&f, 1).unwrap(), 1).unwrap();
        let s = r1.add(&r2).unwrap().add(&f).unwrap();
        assert!(s.max_abs() < 1e-12);
    }

    #[test]
    fn leray_kills_gradients_and_fixes_solenoidal() {
        let g = g2(16);
        let p = Field::scalar_fn(&g, |x| x[0].sin() * x[1].cos());
        let gp = gradient(&p).unwrap();
        assert!(leray_h(&gp).unwrap().max_abs() < 1e-12);
        // v = (-d2 psi, d1 psi), psi = sin x1 sin x2
        let v = Field::vector_fn(&g, |x| {
            [-x[0].sin() * x[1].cos(), x[0].cos() * x[1].sin(), 0.0]
        });
        assert!(leray_h(&v).unwrap().sub(&v).unwrap().max_abs() < 1e-12);
        assert!(leray_h(&Field::zeros(&g, Rank::Vector)).unwrap().is_zero());
    }

    #[test]
    fn op_l_keeps_divergence_free() {
        let g = g2(16);
        let u0 = Field::vector_fn(&g, |x| [x[1].sin(), 0.0, 0.0]);
        let u = op_l(&u0, 1.0).unwrap();
        let want = Field::vector_fn(&g, |x| [(-1.0f64).exp() * x[1].sin(), 0.0, 0.0]);
        assert!(u.sub(&want).unwrap().max_abs() < 1e-12);
        assert!(divergence(&u).unwrap().max_abs() < 1e-12);
    }
}
