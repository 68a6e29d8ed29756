//! Duhamel operators `U(sigma)(t) = int_0^t e^{(t-s) nu Laplacian} H div sigma(s) ds`
//! and `G = grad U`, evaluated by an exponential integrator.
//!
//! Between frames `sigma` is taken linear in time. For each mode with decay
//! rate `mu = nu |k|^2` and step `h` the update is
//!
//! ```text
//! U(t_{m+1}) = e^{-mu h} U(t_m) + w_a D_m + w_b D_{m+1}
//! w_a = (1 - e^{-x}(1 + x)) / (mu^2 h),   w_b = (1 - e^{-x}) / mu - w_a,   x = mu h
//! ```
//!
//! where `D_m` is the transform of `H div sigma(t_m)`. Both weights are
//! exact integrals of the linear interpolant against the heat factor.

use rustfft::num_complex::Complex64;

use super::{check_time, heat_semigroup_nu, leray_symbol, riesz_symbol, ZERO};
use crate::grid::{advect, Field, GridSpec, Path, Rank, TimeGrid};
use crate::{Error, Result};

type Spectra = Vec<Vec<Complex64>>;

/// Heat-flow solution operators with viscosity `nu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Duhamel {
    nu: f64,
}

impl Default for Duhamel {
    fn default() -> Self {
        Self { nu: 1.0 }
    }
}

/// Step weights `(e^{-x}, w_a, w_b)` for decay rate `mu` and step `h`.
pub(crate) fn step_weights(mu: f64, h: f64) -> (f64, f64, f64) {
    let x = mu * h;
    let decay = (-x).exp();
    if x < 0.5 {
        // Series in x for phi1 = (1 - e^{-x})/x and phi2 = (1 - e^{-x}(1+x))/x^2.
        let (mut phi1, mut phi2) = (0.0, 0.0);
        let mut fact = 1.0; // (j+1)!
        let mut pow = 1.0; // (-x)^j
        for j in 0..30 {
            fact *= (j + 1) as f64;
            phi1 += pow / fact;
            phi2 += pow * (j + 1) as f64 / (fact * (j + 2) as f64);
            pow *= -x;
        }
        let wa = h * phi2;
        (decay, wa, h * phi1 - wa)
    } else {
        let phi1 = -(-x).exp_m1() / mu;
        let wa = (1.0 - decay * (1.0 + x)) / (mu * mu * h);
        (decay, wa, phi1 - wa)
    }
}

/// Velocity spectra of `U(sigma)` at every node of the time grid.
pub struct DuhamelSpectra {
    grid: GridSpec,
    time: TimeGrid,
    nodes: Vec<Spectra>,
}

impl DuhamelSpectra {
    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    /// `U(sigma)(t_m)`.
    pub fn velocity(&self, m: usize) -> Field {
        Field::from_spectra(self.grid, Rank::Vector, self.nodes[m].clone())
    }

    /// `G(sigma)(t_m) = grad U(sigma)(t_m)`.
    pub fn gradient(&self, m: usize) -> Field {
        gradient_of_spectra(&self.grid, &self.nodes[m])
    }

    pub fn velocity_path(&self) -> Path {
        let frames = (0..self.nodes.len()).map(|m| self.velocity(m)).collect();
        Path::new(self.time, frames).expect("one frame per node")
    }

    pub fn gradient_path(&self) -> Path {
        let frames = (0..self.nodes.len()).map(|m| self.gradient(m)).collect();
        Path::new(self.time, frames).expect("one frame per node")
    }
}

fn gradient_of_spectra(grid: &GridSpec, u: &Spectra) -> Field {
    let d = grid.d();
    let mut out = vec![vec![ZERO; grid.len()]; d * d];
    for flat in 0..grid.len() {
        let m = grid.mode(flat);
        for i in 0..d {
            for j in 0..d {
                out[i * d + j][flat] = u[i][flat] * Complex64::new(0.0, m.kd[j]);
            }
        }
    }
    Field::from_spectra(*grid, Rank::Matrix, out)
}

fn expect_stress(sigma: &Path) -> Result<()> {
    if sigma.rank() != Rank::Matrix {
        return Err(Error::RankMismatch {
            expected: "matrix".into(),
            found: sigma.rank().to_string(),
        });
    }
    Ok(())
}

/// Transform of `H div s` for one matrix frame.
fn source(s: &Field) -> Spectra {
    let g = s.grid();
    let d = g.d();
    let spec = s.spectrum();
    let mut out = vec![vec![ZERO; g.len()]; d];
    for flat in 0..g.len() {
        let m = g.mode(flat);
        if !m.is_singular_integral_active() {
            continue;
        }
        let mut div = [ZERO; 3];
        for l in 0..d {
            for c in 0..d {
                div[l] += spec[l * d + c][flat] * Complex64::new(0.0, m.kd[c]);
            }
        }
        let h = leray_symbol(&m, d);
        for i in 0..d {
            let mut acc = ZERO;
            for l in 0..d {
                acc += div[l] * h[i][l];
            }
            out[i][flat] = acc;
        }
    }
    out
}

impl Duhamel {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "viscosity must be positive, got {nu}"
            )));
        }
        Ok(Self { nu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn heat(&self, f: &Field, t: f64) -> Result<Field> {
        heat_semigroup_nu(f, t, self.nu)
    }

    /// `L(u0)(t) = e^{t nu Laplacian} u0`.
    pub fn op_l(&self, u0: &Field, t: f64) -> Result<Field> {
        self.heat(u0, t)
    }

    /// `L(u0)` at every node of `time`.
    pub fn op_l_path(&self, u0: &Field, time: TimeGrid) -> Result<Path> {
        Path::try_from_fn(time, |_, t| self.op_l(u0, t))
    }

    fn rates(&self, grid: &GridSpec) -> Vec<f64> {
        (0..grid.len()).map(|i| self.nu * grid.mode(i).k2).collect()
    }

    /// Runs the recursion up to node `upto`, keeping every node when `keep_all`.
    fn march(&self, sigma: &Path, upto: usize, keep_all: bool) -> (Vec<Spectra>, Spectra) {
        let grid = *sigma.grid();
        let d = grid.d();
        let h = sigma.time().dt();
        let weights: Vec<_> = self
            .rates(&grid)
            .into_iter()
            .map(|mu| step_weights(mu, h))
            .collect();
        let mut u = vec![vec![ZERO; grid.len()]; d];
        let mut kept = Vec::new();
        if keep_all {
            kept.push(u.clone());
        }
        let mut d_old = source(sigma.frame(0));
        for m in 0..upto {
            let d_new = source(sigma.frame(m + 1));
            for i in 0..d {
                for (flat, (e, wa, wb)) in weights.iter().enumerate() {
                    u[i][flat] = u[i][flat] * *e + d_old[i][flat] * *wa + d_new[i][flat] * *wb;
                }
            }
            if keep_all {
                kept.push(u.clone());
            }
            d_old = d_new;
        }
        (kept, u)
    }

    /// `U(sigma)` spectra at every node.
    pub fn spectra(&self, sigma: &Path) -> Result<DuhamelSpectra> {
        expect_stress(sigma)?;
        let (nodes, _) = self.march(sigma, sigma.time().steps(), true);
        Ok(DuhamelSpectra {
            grid: *sigma.grid(),
            time: *sigma.time(),
            nodes,
        })
    }

    fn velocity_spectrum_at(&self, sigma: &Path, t: f64) -> Result<Spectra> {
        expect_stress(sigma)?;
        check_time(t)?;
        let time = sigma.time();
        if let Some(m) = time.node_index(t) {
            return Ok(self.march(sigma, m, false).1);
        }
        let (m, theta) = time.locate(t)?;
        let (_, mut u) = self.march(sigma, m, false);
        let grid = *sigma.grid();
        let hp = theta * time.dt();
        let d_old = source(sigma.frame(m));
        let d_next = source(sigma.frame(m + 1));
        for (flat, mu) in self.rates(&grid).into_iter().enumerate() {
            let (e, wa, wb) = step_weights(mu, hp);
            for i in 0..grid.d() {
                let d_end = d_old[i][flat] * (1.0 - theta) + d_next[i][flat] * theta;
                u[i][flat] = u[i][flat] * e + d_old[i][flat] * wa + d_end * wb;
            }
        }
        Ok(u)
    }

    /// `U(sigma)(t)` for `0 <= t <= T`; off-node times use the linear
    /// interpolant of `sigma` on the last partial interval.
    pub fn op_u(&self, sigma: &Path, t: f64) -> Result<Field> {
        let u = self.velocity_spectrum_at(sigma, t)?;
        Ok(Field::from_spectra(*sigma.grid(), Rank::Vector, u))
    }

    /// `G(sigma)(t) = grad U(sigma)(t)`.
    pub fn op_g(&self, sigma: &Path, t: f64) -> Result<Field> {
        let u = self.velocity_spectrum_at(sigma, t)?;
        Ok(gradient_of_spectra(sigma.grid(), &u))
    }

    pub fn op_u_path(&self, sigma: &Path) -> Result<Path> {
        Ok(self.spectra(sigma)?.velocity_path())
    }

    pub fn op_g_path(&self, sigma: &Path) -> Result<Path> {
        Ok(self.spectra(sigma)?.gradient_path())
    }

    /// Closed form of `G` for a time-independent stress:
    /// `(1 - e^{t nu Laplacian}) / nu  R H R . sigma`, entry `(i, j)` being
    /// `R_j sum_{l,m} H_il R_m sigma_lm`.
    pub fn op_g_steady(&self, sigma: &Field, t: f64) -> Result<Field> {
        check_time(t)?;
        if sigma.rank() != Rank::Matrix {
            return Err(Error::RankMismatch {
                expected: "matrix".into(),
                found: sigma.rank().to_string(),
            });
        }
        let g = *sigma.grid();
        let d = g.d();
        let nu = self.nu;
        Ok(crate::grid::spectral::map_spectrum(
            sigma,
            Rank::Matrix,
            |m, inp, out| {
                if !m.is_singular_integral_active() {
                    return;
                }
                let factor = -(-nu * m.k2 * t).exp_m1() / nu;
                let h = leray_symbol(m, d);
                let mut rs = [ZERO; 3];
                for l in 0..d {
                    for c in 0..d {
                        rs[l] += riesz_symbol(m, c) * inp[l * d + c];
                    }
                }
                for i in 0..d {
                    let mut hrs = ZERO;
                    for l in 0..d {
                        hrs += rs[l] * h[i][l];
                    }
                    for j in 0..d {
                        out[i * d + j] = riesz_symbol(m, j) * hrs * factor;
                    }
                }
            },
        ))
    }

    /// Framewise `eta(s) . grad sigma(s)`.
    fn transported(eta: &Path, sigma: &Path) -> Result<Path> {
        if eta.time() != sigma.time() {
            return Err(Error::InvalidTimeGrid("eta and sigma on different time grids".into()));
        }
        let frames = eta
            .frames()
            .iter()
            .zip(sigma.frames())
            .map(|(e, s)| advect(e, s))
            .collect::<Result<Vec<_>>>()?;
        Path::new(*sigma.time(), frames)
    }

    /// `[eta . grad, U](sigma)(t) = eta(t) . grad U(sigma)(t) - U(eta . grad sigma)(t)`.
    pub fn commutator_u(&self, eta: &Path, sigma: &Path, t: f64) -> Result<Field> {
        let inner = Self::transported(eta, sigma)?;
        let a = advect(&eta.at(t)?, &self.op_u(sigma, t)?)?;
        a.sub(&self.op_u(&inner, t)?)
    }

    /// `[eta . grad, G](sigma)(t) = eta(t) . grad G(sigma)(t) - G(eta . grad sigma)(t)`.
    pub fn commutator_g(&self, eta: &Path, sigma: &Path, t: f64) -> Result<Field> {
        let inner = Self::transported(eta, sigma)?;
        let a = advect(&eta.at(t)?, &self.op_g(sigma, t)?)?;
        a.sub(&self.op_g(&inner, t)?)
    }

    /// Both commutators at every node, sharing the Duhamel marches.
    pub fn commutator_paths(&self, eta: &Path, sigma: &Path) -> Result<(Path, Path)> {
        let inner = self.spectra(&Self::transported(eta, sigma)?)?;
        let outer = self.spectra(sigma)?;
        let mut cu = Vec::new();
        let mut cg = Vec::new();
        for m in 0..eta.time().n_nodes() {
            let e = eta.frame(m);
            cu.push(advect(e, &outer.velocity(m))?.sub(&inner.velocity(m))?);
            cg.push(advect(e, &outer.gradient(m))?.sub(&inner.gradient(m))?);
        }
        Ok((Path::new(*eta.time(), cu)?, Path::new(*eta.time(), cg)?))
    }
}

/// `U(sigma)(t)` with unit viscosity.
pub fn op_u(sigma: &Path, t: f64) -> Result<Field> {
    Duhamel::default().op_u(sigma, t)
}

/// `G(sigma)(t)` with unit viscosity.
pub fn op_g(sigma: &Path, t: f64) -> Result<Field> {
    Duhamel::default().op_g(sigma, t)
}

/// Closed-form `G` of a steady stress with unit viscosity.
pub fn op_g_steady(sigma: &Field, t: f64) -> Result<Field> {
    Duhamel::default().op_g_steady(sigma, t)
}

pub fn commutator_u(eta: &Path, sigma: &Path, t: f64) -> Result<Field> {
    Duhamel::default().commutator_u(eta, sigma, t)
}

pub fn commutator_g(eta: &Path, sigma: &Path, t: f64) -> Result<Field> {
    Duhamel::default().commutator_g(eta, sigma, t)
}
