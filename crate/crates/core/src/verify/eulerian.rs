//! Eulerian pseudo-spectral reference solver.
//!
//! Integrates `u_t = nu Laplacian u + H div(S(s) [- u ⊗ u])` together with
//! `s_t + u . grad s = F(grad u, s)` by the integrating-factor (Lawson) RK4
//! scheme: the heat flow is applied exactly to `u`, the remaining terms are
//! evaluated pseudo-spectrally with 2/3 dealiasing. Shares no code with the
//! Lagrangian iteration beyond field primitives and the constitutive law.

use crate::dynamics::Model;
use crate::grid::{advect, dealias, divergence, gradient, outer, Field, Path, TimeGrid};
use crate::operators::{heat_semigroup_nu, leray_h};
use crate::solver::{Branch, SolverConfig};
use crate::{Error, Result};

/// Eulerian velocity, transported state and momentum stress at every node.
#[derive(Clone, Debug)]
pub struct EulerianRun {
    pub u: Path,
    pub state: Path,
    pub stress: Path,
}

#[derive(Clone)]
struct Pair {
    u: Field,
    s: Field,
}

impl Pair {
    fn axpy(&self, a: f64, o: &Pair) -> Result<Pair> {
        Ok(Pair {
            u: self.u.axpy(a, &o.u)?,
            s: self.s.axpy(a, &o.s)?,
        })
    }

    fn heat(&self, h: f64, nu: f64) -> Result<Pair> {
        Ok(Pair {
            u: heat_semigroup_nu(&self.u, h, nu)?,
            s: self.s.clone(),
        })
    }

    fn finite(&self) -> bool {
        let ok = |f: &Field| f.components().iter().flatten().all(|v| v.is_finite());
        ok(&self.u) && ok(&self.s)
    }
}

struct Rhs<'a> {
    model: &'a Model,
    inertia: bool,
}

impl Rhs<'_> {
    fn eval(&self, y: &Pair) -> Result<Pair> {
        let mut forcing = self.model.stress(&y.s)?;
        if self.inertia {
            forcing = forcing.sub(&outer(&y.u, &y.u)?)?;
        }
        let u = leray_h(&divergence(&forcing)?)?;
        let growth = dealias(&self.model.eval_field(&gradient(&y.u)?, &y.s)?);
        let s = growth.sub(&advect(&y.u, &y.s)?)?;
        Ok(Pair { u, s })
    }
}

/// Solves the Eulerian system on the time grid of `config` from `(u0, s0)`.
///
/// Logs a warning when `max|u| dt / h > 1`; returns [`Error::BlowUp`] when a
/// non-finite value appears.
pub fn eulerian_reference(config: &SolverConfig, u0: &Field, s0: &Field) -> Result<EulerianRun> {
    config.validate()?;
    let time: TimeGrid = config.time()?;
    let nu = config.nu;
    let h = time.dt();
    let rhs = Rhs {
        model: &config.model,
        inertia: config.branch == Branch::NavierStokes,
    };
    let spacing = u0.grid().spacing();
    let mut y = Pair {
        u: u0.clone(),
        s: s0.clone(),
    };
    let mut us = vec![y.u.clone()];
    let mut ss = vec![y.s.clone()];
    let mut warned = false;
    for m in 0..time.steps() {
        let cfl = y.u.max_abs() * h / spacing;
        if cfl > 1.0 && !warned {
            log::warn!("Eulerian reference: CFL number {cfl:.3} exceeds 1 at t = {}", time.node(m));
            warned = true;
        }
        let k1 = rhs.eval(&y)?;
        let k2 = rhs.eval(&y.axpy(0.5 * h, &k1)?.heat(0.5 * h, nu)?)?;
        let k3 = rhs.eval(&y.heat(0.5 * h, nu)?.axpy(0.5 * h, &k2)?)?;
        let k4 = rhs.eval(&y.heat(h, nu)?.axpy(h, &k3.heat(0.5 * h, nu)?)?)?;
        let mid = k2.axpy(1.0, &k3)?.heat(0.5 * h, nu)?;
        y = y
            .heat(h, nu)?
            .axpy(h / 6.0, &k1.heat(h, nu)?)?
            .axpy(h / 3.0, &mid)?
            .axpy(h / 6.0, &k4)?;
        if !y.finite() {
            return Err(Error::BlowUp {
                time: time.node(m + 1),
            });
        }
        us.push(y.u.clone());
        ss.push(y.s.clone());
    }
    let stress = ss.iter().map(|s| config.model.stress(s)).collect::<Result<Vec<_>>>()?;
    Ok(EulerianRun {
        u: Path::new(time, us)?,
        state: Path::new(time, ss)?,
        stress: Path::new(time, stress)?,
    })
}
