use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::{Arc, OnceLock};

use super::{spectral, GridSpec, Point};
use crate::{Error, Result};

/// Tensor rank of a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rank {
    Scalar,
    Vector,
    Matrix,
}

impl Rank {
    pub fn components(self, d: usize) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => d,
            Rank::Matrix => d * d,
        }
    }

    pub fn order(self) -> usize {
        match self {
            Rank::Scalar => 0,
            Rank::Vector => 1,
            Rank::Matrix => 2,
        }
    }

    pub fn from_order(order: usize) -> Option<Self> {
        match order {
            0 => Some(Rank::Scalar),
            1 => Some(Rank::Vector),
            2 => Some(Rank::Matrix),
            _ => None,
        }
    }
}

impl std::fmt::Display for Rank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Rank::Scalar => "scalar",
            Rank::Vector => "vector",
            Rank::Matrix => "matrix",
        };
        f.write_str(s)
    }
}

/// A real rank-0/1/2 field sampled on a periodic grid.
///
/// Fields are immutable. Matrix components are stored row-major
/// (`(i, j)` at `i * d + j`); the symmetric flag is derived from the data
/// and set only when the stored arrays are exactly symmetric.
#[derive(Clone, Debug)]
pub struct Field {
    grid: GridSpec,
    rank: Rank,
    symmetric: bool,
    comps: Vec<Vec<f64>>,
    spectrum: OnceLock<Arc<Vec<Vec<Complex64>>>>,
}

impl Field {
    pub fn from_components(grid: &GridSpec, rank: Rank, comps: Vec<Vec<f64>>) -> Result<Self> {
        let want = rank.components(grid.d());
        if comps.len() != want {
            return Err(Error::RankMismatch {
                expected: format!("{want} components for a {rank} field"),
                found: format!("{} components", comps.len()),
            });
        }
        if comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch);
        }
        if comps.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field samples"));
        }
        Ok(Self::build(*grid, rank, comps))
    }

    /// Constructor for internally produced samples that are finite by construction.
    pub(crate) fn build(grid: GridSpec, rank: Rank, comps: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(comps.len(), rank.components(grid.d()));
        let symmetric = rank == Rank::Matrix && exactly_symmetric(grid.d(), &comps);
        Self {
            grid,
            rank,
            symmetric,
            comps,
            spectrum: OnceLock::new(),
        }
    }

    pub(crate) fn from_spectra(grid: GridSpec, rank: Rank, spectra: Vec<Vec<Complex64>>) -> Self {
        let comps = spectra
            .iter()
            .map(|s| spectral::inverse(&grid, s.clone()))
            .collect();
        let field = Self::build(grid, rank, comps);
        let _ = field.spectrum.set(Arc::new(spectra));
        field
    }

    pub fn zeros(grid: &GridSpec, rank: Rank) -> Self {
        Self::build(*grid, rank, vec![vec![0.0; grid.len()]; rank.components(grid.d())])
    }

    pub fn scalar_fn(grid: &GridSpec, f: impl Fn(&Point) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self::build(*grid, Rank::Scalar, vec![values])
    }

    /// Vector field from a closure; only the first `d` outputs are used.
    pub fn vector_fn(grid: &GridSpec, f: impl Fn(&Point) -> [f64; 3]) -> Self {
        let d = grid.d();
        let mut comps = vec![Vec::with_capacity(grid.len()); d];
        for i in 0..grid.len() {
            let v = f(&grid.point(i));
            for c in 0..d {
                comps[c].push(v[c]);
            }
        }
        Self::build(*grid, Rank::Vector, comps)
    }

    /// Matrix field from a closure; only the leading `d x d` block is used.
    pub fn matrix_fn(grid: &GridSpec, f: impl Fn(&Point) -> [[f64; 3]; 3]) -> Self {
        let d = grid.d();
        let mut comps = vec![Vec::with_capacity(grid.len()); d * d];
        for i in 0..grid.len() {
            let m = f(&grid.point(i));
            for r in 0..d {
                for c in 0..d {
                    comps[r * d + c].push(m[r][c]);
                }
            }
        }
        Self::build(*grid, Rank::Matrix, comps)
    }

    /// Constant identity matrix field.
    pub fn identity_matrix(grid: &GridSpec) -> Self {
        let d = grid.d();
        let comps = (0..d * d)
            .map(|c| vec![if c / d == c % d { 1.0 } else { 0.0 }; grid.len()])
            .collect();
        Self::build(*grid, Rank::Matrix, comps)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn n_components(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.comps
    }

    /// Component values at one grid point.
    pub fn value_at(&self, flat: usize) -> Vec<f64> {
        self.comps.iter().map(|c| c[flat]).collect()
    }

    /// Spectral mirror: the unnormalized DFT of every component, computed once.
    pub fn spectrum(&self) -> &[Vec<Complex64>] {
        self.spectrum.get_or_init(|| {
            Arc::new(
                self.comps
                    .iter()
                    .map(|c| spectral::forward(&self.grid, c))
                    .collect(),
            )
        })
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.grid == other.grid && self.rank == other.rank
    }

    fn check_shape(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.rank != other.rank {
            return Err(Error::RankMismatch {
                expected: self.rank.to_string(),
                found: other.rank.to_string(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Field, op: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.check_shape(other)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| op(x, y)).collect())
            .collect();
        Ok(Self::build(self.grid, self.rank, comps))
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Result<Field> {
        self.zip_with(other, |x, y| x + a * y)
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        let comps = self
            .comps
            .iter()
            .map(|c| c.iter().map(|&v| f(v)).collect())
            .collect();
        Self::build(self.grid, self.rank, comps)
    }

    /// Largest absolute sample over all components.
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().flatten().all(|&v| v == 0.0)
    }

    /// Grid mean of every component.
    pub fn means(&self) -> Vec<f64> {
        let n = self.grid.len() as f64;
        self.comps.iter().map(|c| c.iter().sum::<f64>() / n).collect()
    }

    /// The field with its per-component grid mean removed.
    pub fn mean_free(&self) -> Field {
        let means = self.means();
        let comps = self
            .comps
            .iter()
            .zip(means)
            .map(|(c, m)| c.iter().map(|v| v - m).collect())
            .collect();
        Self::build(self.grid, self.rank, comps)
    }

    pub fn transpose(&self) -> Result<Field> {
        if self.rank != Rank::Matrix {
            return Err(Error::RankMismatch {
                expected: "matrix".into(),
                found: self.rank.to_string(),
            });
        }
        let d = self.grid.d();
        let comps = (0..d * d)
            .map(|c| self.comps[(c % d) * d + c / d].clone())
            .collect();
        Ok(Self::build(self.grid, self.rank, comps))
    }

    /// `(s + s^T) / 2` with exactly mirrored entries.
    pub fn symmetrized(&self) -> Result<Field> {
        if self.rank != Rank::Matrix {
            return Err(Error::RankMismatch {
                expected: "matrix".into(),
                found: self.rank.to_string(),
            });
        }
        let d = self.grid.d();
        let mut comps = self.comps.clone();
        for i in 0..d {
            for j in i + 1..d {
                let avg: Vec<f64> = self.comps[i * d + j]
                    .iter()
                    .zip(&self.comps[j * d + i])
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect();
                comps[j * d + i] = avg.clone();
                comps[i * d + j] = avg;
            }
        }
        Ok(Self::build(self.grid, self.rank, comps))
    }

    /// Every second sample along each axis; the inverse of embedding on a
    /// grid refined by [`GridSpec::refined`].
    pub fn restrict_to(&self, coarse: &GridSpec) -> Result<Field> {
        if coarse.d() != self.grid.d()
            || coarse.length() != self.grid.length()
            || self.grid.n() != 2 * coarse.n()
        {
            return Err(Error::GridMismatch);
        }
        let comps = self
            .comps
            .iter()
            .map(|c| {
                (0..coarse.len())
                    .map(|i| {
                        let mut idx = coarse.multi_index(i);
                        for a in idx.iter_mut().take(coarse.d()) {
                            *a *= 2;
                        }
                        c[self.grid.flat_index(idx)]
                    })
                    .collect()
            })
            .collect();
        Ok(Self::build(*coarse, self.rank, comps))
    }
}

fn exactly_symmetric(d: usize, comps: &[Vec<f64>]) -> bool {
    for i in 0..d {
        for j in i + 1..d {
            if comps[i * d + j] != comps[j * d + i] {
                return false;
            }
        }
    }
    true
}

impl std::ops::Add for &Field {
    type Output = Field;

    /// Panics on shape mismatch; use [`Field::add`] for a checked sum.
    fn add(self, rhs: &Field) -> Field {
        Field::add(self, rhs).expect("field shapes must match")
    }
}

impl std::ops::Sub for &Field {
    type Output = Field;

    fn sub(self, rhs: &Field) -> Field {
        Field::sub(self, rhs).expect("field shapes must match")
    }
}

impl std::ops::Mul<f64> for &Field {
    type Output = Field;

    fn mul(self, rhs: f64) -> Field {
        self.scale(rhs)
    }
}
