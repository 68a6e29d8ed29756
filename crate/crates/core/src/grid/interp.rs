//! Off-grid evaluation of periodic fields.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{spectral, Field, GridSpec, Point};
use crate::{Error, Result};

/// Interpolation backend.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpKind {
    /// Periodic cubic B-spline through the samples (fourth order, local).
    #[default]
    Spline,
    /// Trigonometric interpolation (exact on resolved modes, O(N) per point).
    Trig,
}

/// A field prepared for repeated off-grid evaluation.
///
/// The spline backend stores prefiltered B-spline coefficients; the
/// trigonometric backend stores the normalized spectrum.
pub struct Interpolant {
    grid: GridSpec,
    kind: InterpKind,
    coeffs: Vec<Vec<f64>>,
    spectra: Vec<Vec<Complex64>>,
}

impl Interpolant {
    pub fn new(f: &Field, kind: InterpKind) -> Self {
        let grid = *f.grid();
        let scale = 1.0 / grid.len() as f64;
        match kind {
            InterpKind::Spline => {
                let filter = spline_filter(&grid);
                let coeffs = f
                    .spectrum()
                    .iter()
                    .map(|s| {
                        let filtered = s.iter().zip(&filter).map(|(a, w)| a * *w).collect();
                        spectral::inverse(&grid, filtered)
                    })
                    .collect();
                Self {
                    grid,
                    kind,
                    coeffs,
                    spectra: Vec::new(),
                }
            }
            InterpKind::Trig => {
                let spectra = f
                    .spectrum()
                    .iter()
                    .map(|s| s.iter().map(|c| c * scale).collect())
                    .collect();
                Self {
                    grid,
                    kind,
                    coeffs: Vec::new(),
                    spectra,
                }
            }
        }
    }

    pub fn kind(&self) -> InterpKind {
        self.kind
    }

    pub fn n_components(&self) -> usize {
        self.coeffs.len().max(self.spectra.len())
    }

    /// Evaluates every component at `x`, writing into `out`.
    pub fn eval_into(&self, x: &Point, out: &mut [f64]) {
        match self.kind {
            InterpKind::Spline => self.eval_spline(x, out),
            InterpKind::Trig => self.eval_trig(x, out),
        }
    }

    pub fn eval(&self, x: &Point) -> Vec<f64> {
        let mut out = vec![0.0; self.n_components()];
        self.eval_into(x, &mut out);
        out
    }

    /// Values at many points, one vector per component.
    pub fn eval_many(&self, points: &[Point]) -> Vec<Vec<f64>> {
        let nc = self.n_components();
        let mut out = vec![Vec::with_capacity(points.len()); nc];
        let mut buf = vec![0.0; nc];
        for x in points {
            self.eval_into(x, &mut buf);
            for (o, v) in out.iter_mut().zip(&buf) {
                o.push(*v);
            }
        }
        out
    }

    fn eval_spline(&self, x: &Point, out: &mut [f64]) {
        let g = &self.grid;
        let n = g.n();
        let h = g.spacing();
        let mut base = [0usize; 3];
        let mut w = [[0.0; 4]; 3];
        for a in 0..g.d() {
            let u = x[a] / h;
            let i0 = u.floor();
            let t = u - i0;
            base[a] = ((i0 as i64 - 1).rem_euclid(n as i64)) as usize;
            w[a] = bspline_weights(t);
        }
        out.fill(0.0);
        match g.d() {
            2 => {
                for p in 0..4 {
                    let row = ((base[0] + p) % n) * n;
                    for q in 0..4 {
                        let idx = row + (base[1] + q) % n;
                        let wt = w[0][p] * w[1][q];
                        for (o, c) in out.iter_mut().zip(&self.coeffs) {
                            *o += wt * c[idx];
                        }
                    }
                }
            }
            _ => {
                for p in 0..4 {
                    let plane = ((base[0] + p) % n) * n;
                    for q in 0..4 {
                        let row = (plane + (base[1] + q) % n) * n;
                        let wpq = w[0][p] * w[1][q];
                        for r in 0..4 {
                            let idx = row + (base[2] + r) % n;
                            let wt = wpq * w[2][r];
                            for (o, c) in out.iter_mut().zip(&self.coeffs) {
                                *o += wt * c[idx];
                            }
                        }
                    }
                }
            }
        }
    }

    fn eval_trig(&self, x: &Point, out: &mut [f64]) {
        let g = &self.grid;
        let n = g.n();
        let d = g.d();
        let unit = 2.0 * PI / g.length();
        let mut phases = vec![vec![Complex64::new(0.0, 0.0); n]; d];
        for a in 0..d {
            let step = Complex64::from_polar(1.0, unit * x[a]);
            // e^{i m x} for m = 0..n/2 by recurrence, re-anchored periodically
            // to keep round-off at the 1e-15 level.
            let mut z = Complex64::new(1.0, 0.0);
            for m in 0..=n / 2 {
                if m % 16 == 0 {
                    z = Complex64::from_polar(1.0, unit * x[a] * m as f64);
                }
                if m == n / 2 {
                    phases[a][m] = Complex64::new(z.re, 0.0);
                } else {
                    phases[a][m] = z;
                    if m > 0 {
                        phases[a][n - m] = z.conj();
                    }
                }
                z *= step;
            }
        }
        for (o, s) in out.iter_mut().zip(&self.spectra) {
            let mut total = Complex64::new(0.0, 0.0);
            match d {
                2 => {
                    for i in 0..n {
                        let row = &s[i * n..(i + 1) * n];
                        let mut inner = Complex64::new(0.0, 0.0);
                        for (c, e) in row.iter().zip(&phases[1]) {
                            inner += c * e;
                        }
                        total += inner * phases[0][i];
                    }
                }
                _ => {
                    for i in 0..n {
                        let mut mid = Complex64::new(0.0, 0.0);
                        for j in 0..n {
                            let start = (i * n + j) * n;
                            let mut inner = Complex64::new(0.0, 0.0);
                            for (c, e) in s[start..start + n].iter().zip(&phases[2]) {
                                inner += c * e;
                            }
                            mid += inner * phases[1][j];
                        }
                        total += mid * phases[0][i];
                    }
                }
            }
            *o = total.re;
        }
    }
}

/// Cubic B-spline weights for the four nodes `i0-1 .. i0+2` at fraction `t`.
fn bspline_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    let s = 1.0 - t;
    [
        s * s * s / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    ]
}

/// Per-mode inverse of the B-spline sampling symbol `prod (4 + 2 cos theta) / 6`.
fn spline_filter(grid: &GridSpec) -> Vec<f64> {
    let n = grid.n();
    let axis: Vec<f64> = (0..n)
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / n as f64;
            6.0 / (4.0 + 2.0 * theta.cos())
        })
        .collect();
    (0..grid.len())
        .map(|flat| {
            let idx = grid.multi_index(flat);
            (0..grid.d()).map(|a| axis[idx[a]]).product()
        })
        .collect()
}

/// Evaluates `f` at arbitrary points (wrapped periodically). Returns one
/// vector of values per component.
pub fn interpolate(f: &Field, points: &[Point], kind: InterpKind) -> Result<Vec<Vec<f64>>> {
    let d = f.grid().d();
    if points.iter().any(|p| p[..d].iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("interpolation points"));
    }
    Ok(Interpolant::new(f, kind).eval_many(points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sine_at_quarter_period() {
        let g = GridSpec::torus(2, 32).unwrap();
        let f = Field::scalar_fn(&g, |x| x[0].sin());
        for kind in [InterpKind::Spline, InterpKind::Trig] {
            let v = interpolate(&f, &[[PI / 2.0, 0.0, 0.0]], kind).unwrap();
            assert!((v[0][0] - 1.0).abs() < 1e-5, "{kind:?}: {}", v[0][0]);
        }
    }

    #[test]
    fn trig_reproduces_grid_samples() {
        let g = GridSpec::torus(2, 16).unwrap();
        let f = Field::scalar_fn(&g, |x| (x[0] * 3.0).sin() * (x[1]).exp().cos() + 0.2);
        let pts = g.points();
        let v = interpolate(&f, &pts, InterpKind::Trig).unwrap();
        for (a, b) in v[0].iter().zip(f.component(0)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn spline_reproduces_grid_samples() {
        let g = GridSpec::torus(3, 8).unwrap();
        let f = Field::scalar_fn(&g, |x| x[0].sin() + (x[1] - x[2]).cos());
        let v = interpolate(&f, &g.points(), InterpKind::Spline).unwrap();
        for (a, b) in v[0].iter().zip(f.component(0)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn trig_exact_on_resolved_modes_off_grid() {
        let g = GridSpec::torus(3, 8).unwrap();
        let exact = |x: &Point| (2.0 * x[0] - x[2]).sin() + (3.0 * x[1]).cos() * x[2].sin();
        let f = Field::scalar_fn(&g, exact);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Point> = (0..50)
            .map(|_| [rng.gen_range(-3.0..9.0), rng.gen_range(0.0..7.0), rng.gen_range(0.0..7.0)])
            .collect();
        let v = interpolate(&f, &pts, InterpKind::Trig).unwrap();
        for (p, val) in pts.iter().zip(&v[0]) {
            assert!((val - exact(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn spline_error_is_fourth_order() {
        let exact = |x: &Point| (4.0 * x[0] + x[1]).sin();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point> = (0..100)
            .map(|_| [rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI), 0.0])
            .collect();
        let err = |n: usize| {
            let g = GridSpec::torus(2, n).unwrap();
            let f = Field::scalar_fn(&g, exact);
            let v = interpolate(&f, &pts, InterpKind::Spline).unwrap();
            pts.iter()
                .zip(&v[0])
                .map(|(p, val)| (val - exact(p)).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(32), err(64));
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
        assert!(e2 < 1e-3);
    }

    #[test]
    fn non_finite_points_rejected() {
        let g = GridSpec::torus(2, 8).unwrap();
        let f = Field::zeros(&g, crate::Rank::Scalar);
        assert!(interpolate(&f, &[[f64::NAN, 0.0, 0.0]], InterpKind::Spline).is_err());
    }
}
