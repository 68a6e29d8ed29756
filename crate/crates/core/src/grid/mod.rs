//! Periodic grids, sampled fields and the spectral substrate.
//!
//! Everything lives on the torus `[0, L)^d`. Samples sit at `x_j = j L / n`
//! componentwise, stored row-major with the last axis fastest. Fields carry
//! a lazily computed spectral mirror (the unnormalized DFT of each component).
//!
//! Conventions used across the crate:
//!
//! * gradients are `(grad u)_{ij} = d u_i / d x_j`, stored at component `i * d + j`;
//! * the divergence of a matrix field contracts the last index, `(div s)_i = d_j s_{ij}`;
//! * odd spectral factors (`i k_j`) vanish on the Nyquist plane of axis `j`;
//! * degree-0 multipliers vanish on the zero mode and on every mode touching
//!   a Nyquist plane, so their algebraic identities hold exactly on the rest.

mod field;
mod interp;
mod path;
mod products;
pub mod snapshot;
pub mod spectral;
mod stencil;

pub use field::{Field, Rank};
pub use interp::{interpolate, InterpKind, Interpolant};
pub use path::{Path, TimeGrid};
pub use products::{advect, mat_vec, matmul, outer};
pub(crate) use products::matmul_raw;
pub use spectral::{dealias, divergence, gradient, spectral_derivative};
pub use stencil::Stencil;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

/// A point in physical space. Only the first `d` entries are meaningful.
pub type Point = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    d: usize,
    n: usize,
    length: f64,
}

impl GridSpec {
    pub fn new(d: usize, n: usize, length: f64) -> Result<Self> {
        if d != 2 && d != 3 {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {d}")));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and at least 8, got {n}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {length}")));
        }
        Ok(Self { d, n, length })
    }

    /// The `2 pi`-periodic box.
    pub fn torus(d: usize, n: usize) -> Result<Self> {
        Self::new(d, n, 2.0 * PI)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Total number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// The same box at twice the resolution.
    pub fn refined(&self) -> Self {
        Self {
            n: 2 * self.n,
            ..*self
        }
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let n = self.n;
        match self.d {
            2 => [flat / n, flat % n, 0],
            _ => [flat / (n * n), (flat / n) % n, flat % n],
        }
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        let n = self.n;
        match self.d {
            2 => idx[0] * n + idx[1],
            _ => (idx[0] * n + idx[1]) * n + idx[2],
        }
    }

    /// Flat index of `idx + offset`, wrapped periodically.
    pub fn shifted(&self, idx: [usize; 3], offset: [isize; 3]) -> usize {
        let n = self.n as isize;
        let mut out = [0usize; 3];
        for a in 0..self.d {
            out[a] = (idx[a] as isize + offset[a]).rem_euclid(n) as usize;
        }
        self.flat_index(out)
    }

    pub fn point(&self, flat: usize) -> Point {
        let idx = self.multi_index(flat);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.d {
            x[a] = idx[a] as f64 * h;
        }
        x
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Signed integer mode for a DFT index along one axis. The Nyquist index
    /// maps to `+n/2`.
    pub fn signed_mode(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Spectral information for the DFT coefficient at `flat`.
    pub fn mode(&self, flat: usize) -> Mode {
        let idx = self.multi_index(flat);
        let unit = 2.0 * PI / self.length;
        let nyq = self.n / 2;
        let cut = self.n as i64 / 3;
        let mut mode = Mode {
            k: [0.0; 3],
            kd: [0.0; 3],
            k2: 0.0,
            nyquist: false,
            dealiased_out: false,
        };
        for a in 0..self.d {
            let m = self.signed_mode(idx[a]);
            let k = unit * m as f64;
            mode.k[a] = k;
            mode.k2 += k * k;
            if idx[a] == nyq {
                mode.nyquist = true;
            } else {
                mode.kd[a] = k;
            }
            if m.abs() > cut {
                mode.dealiased_out = true;
            }
        }
        mode
    }

    /// Periodic distance between two points.
    pub fn periodic_distance(&self, a: &Point, b: &Point) -> f64 {
        let l = self.length;
        let mut s = 0.0;
        for c in 0..self.d {
            let mut dx = (a[c] - b[c]).rem_euclid(l);
            if dx > 0.5 * l {
                dx = l - dx;
            }
            s += dx * dx;
        }
        s.sqrt()
    }
}

/// Wave-vector data of one DFT coefficient.
#[derive(Clone, Copy, Debug)]
pub struct Mode {
    /// Full wave vector.
    pub k: [f64; 3],
    /// Wave vector used for odd factors; zero along Nyquist axes.
    pub kd: [f64; 3],
    /// `|k|^2` of the full wave vector.
    pub k2: f64,
    /// True when any axis sits on its Nyquist index.
    pub nyquist: bool,
    /// True when the 2/3 rule removes this mode.
    pub dealiased_out: bool,
}

impl Mode {
    pub fn is_zero(&self) -> bool {
        self.k2 == 0.0
    }

    /// Whether degree-0 multipliers act on this mode (neither zero nor Nyquist).
    pub fn is_singular_integral_active(&self) -> bool {
        !self.is_zero() && !self.nyquist
    }

    pub fn norm(&self) -> f64 {
        self.k2.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(1, 16, 1.0).is_err());
        assert!(GridSpec::new(4, 16, 1.0).is_err());
        assert!(GridSpec::new(2, 6, 1.0).is_err());
        assert!(GridSpec::new(2, 15, 1.0).is_err());
        assert!(GridSpec::new(2, 16, 0.0).is_err());
        assert!(GridSpec::new(3, 8, 1.0).is_ok());
    }

    #[test]
    fn points_follow_jl_over_n() {
        let g = GridSpec::new(2, 8, 4.0).unwrap();
        let x = g.point(g.flat_index([3, 5, 0]));
        assert_eq!(x[0], 1.5);
        assert_eq!(x[1], 2.5);
        let g3 = GridSpec::new(3, 8, 8.0).unwrap();
        for flat in [0, 17, 300, 511] {
            assert_eq!(g3.flat_index(g3.multi_index(flat)), flat);
        }
    }

    #[test]
    fn nyquist_modes_are_flagged() {
        let g = GridSpec::torus(2, 8).unwrap();
        let m = g.mode(g.flat_index([4, 1, 0]));
        assert!(m.nyquist);
        assert_eq!(m.kd[0], 0.0);
        assert_eq!(m.kd[1], 1.0);
        assert_eq!(m.k[0], 4.0);
        let m = g.mode(g.flat_index([7, 0, 0]));
        assert_eq!(m.k[0], -1.0);
        assert!(!m.nyquist);
    }

    #[test]
    fn periodic_distance_wraps() {
        let g = GridSpec::torus(2, 8).unwrap();
        let d = g.periodic_distance(&[0.1, 0.0, 0.0], &[2.0 * PI - 0.1, 0.0, 0.0]);
        assert!((d - 0.2).abs() < 1e-12);
    }
}
