use serde::{Deserialize, Serialize};

use super::{Field, GridSpec, Rank};
use crate::{Error, Result};

/// Uniform time grid `t_m = m T / M`, `m = 0..=M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    final_time: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(final_time: f64, steps: usize) -> Result<Self> {
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::InvalidTimeGrid(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidTimeGrid("at least one step required".into()));
        }
        Ok(Self { final_time, steps })
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn n_nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.final_time / self.steps as f64
    }

    pub fn node(&self, m: usize) -> f64 {
        if m == self.steps {
            self.final_time
        } else {
            m as f64 * self.final_time / self.steps as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|m| self.node(m)).collect()
    }

    /// The same interval with twice as many steps.
    pub fn refined(&self) -> Self {
        Self {
            steps: 2 * self.steps,
            ..*self
        }
    }

    /// Locates `t` as `(m, theta)` with `t = (1 - theta) t_m + theta t_{m+1}`.
    pub fn locate(&self, t: f64) -> Result<(usize, f64)> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let tol = 1e-12 * self.final_time;
        if t > self.final_time + tol {
            return Err(Error::TimeOutOfRange {
                t,
                final_time: self.final_time,
            });
        }
        let s = (t / self.dt()).min(self.steps as f64);
        let m = (s.floor() as usize).min(self.steps - 1);
        Ok((m, (s - m as f64).clamp(0.0, 1.0)))
    }

    /// Node index of `t` when it coincides with a node up to round-off.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let (m, theta) = self.locate(t).ok()?;
        if theta < 1e-9 {
            Some(m)
        } else if theta > 1.0 - 1e-9 {
            Some(m + 1)
        } else {
            None
        }
    }
}

/// A field per node of a [`TimeGrid`], all on one grid with one rank.
#[derive(Clone, Debug)]
pub struct Path {
    time: TimeGrid,
    frames: Vec<Field>,
}

impl Path {
    pub fn new(time: TimeGrid, frames: Vec<Field>) -> Result<Self> {
        if frames.len() != time.n_nodes() {
            return Err(Error::InvalidTimeGrid(format!(
                "{} frames for {} nodes",
                frames.len(),
                time.n_nodes()
            )));
        }
        let first = &frames[0];
        for f in &frames[1..] {
            if f.grid() != first.grid() {
                return Err(Error::GridMismatch);
            }
            if f.rank() != first.rank() {
                return Err(Error::RankMismatch {
                    expected: first.rank().to_string(),
                    found: f.rank().to_string(),
                });
            }
        }
        Ok(Self { time, frames })
    }

    pub fn constant(time: TimeGrid, f: &Field) -> Self {
        Self {
            time,
            frames: vec![f.clone(); time.n_nodes()],
        }
    }

    pub fn zeros(time: TimeGrid, grid: &GridSpec, rank: Rank) -> Self {
        Self::constant(time, &Field::zeros(grid, rank))
    }

    /// Builds frames from `f(m, t_m)`.
    pub fn from_fn(time: TimeGrid, f: impl FnMut(usize, f64) -> Field) -> Result<Self> {
        let mut f = f;
        let frames = (0..time.n_nodes()).map(|m| f(m, time.node(m))).collect();
        Self::new(time, frames)
    }

    pub fn try_from_fn(
        time: TimeGrid,
        mut f: impl FnMut(usize, f64) -> Result<Field>,
    ) -> Result<Self> {
        let frames = (0..time.n_nodes())
            .map(|m| f(m, time.node(m)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(time, frames)
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn grid(&self) -> &GridSpec {
        self.frames[0].grid()
    }

    pub fn rank(&self) -> Rank {
        self.frames[0].rank()
    }

    pub fn frames(&self) -> &[Field] {
        &self.frames
    }

    pub fn frame(&self, m: usize) -> &Field {
        &self.frames[m]
    }

    pub fn last(&self) -> &Field {
        self.frames.last().expect("paths have at least two frames")
    }

    pub fn into_frames(self) -> Vec<Field> {
        self.frames
    }

    /// Piecewise-linear value at time `t`.
    pub fn at(&self, t: f64) -> Result<Field> {
        let (m, theta) = self.time.locate(t)?;
        if theta == 0.0 {
            return Ok(self.frames[m].clone());
        }
        if theta == 1.0 {
            return Ok(self.frames[m + 1].clone());
        }
        self.frames[m]
            .scale(1.0 - theta)
            .axpy(theta, &self.frames[m + 1])
    }

    pub fn map(&self, f: impl FnMut(&Field) -> Field) -> Path {
        Path {
            time: self.time,
            frames: self.frames.iter().map(f).collect(),
        }
    }

    pub fn try_map(&self, f: impl FnMut(&Field) -> Result<Field>) -> Result<Path> {
        let frames = self.frames.iter().map(f).collect::<Result<Vec<_>>>()?;
        Path::new(self.time, frames)
    }

    fn check_compatible(&self, other: &Path) -> Result<()> {
        if self.time != other.time {
            return Err(Error::InvalidTimeGrid("paths on different time grids".into()));
        }
        Ok(())
    }

    pub fn sub(&self, other: &Path) -> Result<Path> {
        self.check_compatible(other)?;
        let frames = self
            .frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Path {
            time: self.time,
            frames,
        })
    }

    pub fn add(&self, other: &Path) -> Result<Path> {
        self.check_compatible(other)?;
        let frames = self
            .frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Path {
            time: self.time,
            frames,
        })
    }

    /// `self + a * other`, framewise.
    pub fn axpy(&self, a: f64, other: &Path) -> Result<Path> {
        self.check_compatible(other)?;
        let frames = self
            .frames
            .iter()
            .zip(&other.frames)
            .map(|(x, y)| x.axpy(a, y))
            .collect::<Result<Vec<_>>>()?;
        Ok(Path {
            time: self.time,
            frames,
        })
    }

    pub fn scale(&self, a: f64) -> Path {
        self.map(|f| f.scale(a))
    }

    pub fn max_abs(&self) -> f64 {
        self.frames.iter().map(Field::max_abs).fold(0.0, f64::max)
    }
}
