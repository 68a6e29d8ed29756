//! Lagrangian fixed-point formulation and its Picard iteration.
//!
//! A state is a path of flow maps `X = id + chi`, the transported state `tau`
//! in label coordinates and, for the Navier-Stokes branch, the Lagrangian
//! velocity `v`. One application of the map `S` to a state
//!
//! 1. inverts every frame of `X` and forms the Eulerian stress
//!    `sigma = S(tau o X^{-1})` (minus `(v ⊗ v) o X^{-1}` with inertia),
//! 2. evaluates `u = L(u0) + U(sigma)` and `grad u` at every node,
//! 3. pulls them back to labels, `U = u o X`, `g = grad u o X`,
//! 4. returns `X_new = id + int U` (trapezoid rule), `tau_new` from
//!    `d tau / dt = F(g, tau)`, and `v_new = U` for Navier-Stokes.

mod linearized;

pub use linearized::{linearized_maps, Direction, Linearization};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dynamics::Model;
use crate::grid::{divergence, gradient, outer, Field, GridSpec, InterpKind, Path, Rank, TimeGrid};
use crate::lagrangian::{compose, FlowMap};
use crate::norms::{p1_norm, p_distance, NormParams};
use crate::operators::Duhamel;
use crate::{Error, Result};

/// Which momentum balance closes the system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Time-dependent Stokes: no inertia.
    Stokes,
    /// Navier-Stokes: inertia `u . grad u` carried by the Lagrangian velocity.
    NavierStokes,
}

impl Branch {
    /// Default branch of a built-in law: MHD carries inertia, the rest do not.
    pub fn default_for(model: &Model) -> Self {
        match model {
            Model::Mhd => Branch::NavierStokes,
            _ => Branch::Stokes,
        }
    }
}

/// Parameters of the Picard iteration.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub params: NormParams,
    pub final_time: f64,
    pub steps: usize,
    /// Radius of the invariant set in the Lipschitz-in-time norm; `None`
    /// reports but does not enforce it.
    pub gamma: Option<f64>,
    pub tol_fp: f64,
    pub max_iter: usize,
    pub branch: Branch,
    pub model: Model,
    pub nu: f64,
    /// Weight of the velocity difference in the Navier-Stokes distance.
    pub delta: f64,
    pub interp: InterpKind,
    /// Store elapsed seconds in the history; off keeps outputs reproducible.
    pub record_wall_time: bool,
}

impl SolverConfig {
    pub fn new(model: Model, final_time: f64, steps: usize) -> Self {
        Self {
            params: NormParams::default(),
            final_time,
            steps,
            gamma: None,
            tol_fp: 1e-9,
            max_iter: 50,
            branch: Branch::default_for(&model),
            model,
            nu: 1.0,
            delta: 0.25,
            interp: InterpKind::Spline,
            record_wall_time: false,
        }
    }

    pub fn time(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.final_time, self.steps)
    }

    pub fn duhamel(&self) -> Result<Duhamel> {
        Duhamel::new(self.nu)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.time()?;
        self.duhamel()?;
        if !(self.tol_fp > 0.0) {
            return Err(Error::InvalidParameter(format!("tol_fp = {} must be positive", self.tol_fp)));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0) {
                return Err(Error::InvalidParameter(format!("gamma = {g} must be positive")));
            }
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta = {} must be positive", self.delta)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if !matches!(self.model.state_rank(), Rank::Vector | Rank::Matrix) {
            return Err(Error::InvalidParameter(format!(
                "model {} has a scalar state",
                self.model.name()
            )));
        }
        Ok(())
    }

    fn inertia(&self) -> bool {
        self.branch == Branch::NavierStokes
    }
}

/// A path of flow maps with the transported state and, on the Navier-Stokes
/// branch, the Lagrangian velocity. All paths share one time grid.
#[derive(Clone, Debug)]
pub struct LagrangianState {
    chi: Path,
    tau: Path,
    v: Option<Path>,
}

impl LagrangianState {
    pub fn new(chi: Path, tau: Path, v: Option<Path>) -> Result<Self> {
        if chi.rank() != Rank::Vector {
            return Err(Error::RankMismatch {
                expected: "vector".into(),
                found: chi.rank().to_string(),
            });
        }
        let same = |p: &Path| p.time() == chi.time() && p.grid() == chi.grid();
        if !same(&tau) || !v.as_ref().is_none_or(same) {
            return Err(Error::GridMismatch);
        }
        if let Some(v) = &v {
            if v.rank() != Rank::Vector {
                return Err(Error::RankMismatch {
                    expected: "vector".into(),
                    found: v.rank().to_string(),
                });
            }
        }
        Ok(Self { chi, tau, v })
    }

    /// The Picard starting point: identity maps, `tau = tau0` at all times and,
    /// when `v0` is given, `v = v0`.
    pub fn initial(time: TimeGrid, tau0: &Field, v0: Option<Path>) -> Result<Self> {
        let chi = Path::zeros(time, tau0.grid(), Rank::Vector);
        Self::new(chi, Path::constant(time, tau0), v0)
    }

    pub fn time(&self) -> &TimeGrid {
        self.chi.time()
    }

    pub fn grid(&self) -> &GridSpec {
        self.chi.grid()
    }

    /// Displacements `chi = X - id`.
    pub fn chi(&self) -> &Path {
        &self.chi
    }

    pub fn tau(&self) -> &Path {
        &self.tau
    }

    pub fn v(&self) -> Option<&Path> {
        self.v.as_ref()
    }

    pub fn flow_map(&self, m: usize) -> FlowMap {
        FlowMap::new(self.chi.frame(m).clone()).expect("vector displacement")
    }

    /// Flow map at an arbitrary time, linear in time between frames.
    pub fn flow_map_at(&self, t: f64) -> Result<FlowMap> {
        FlowMap::new(self.chi.at(t)?)
    }

    /// Largest `|grad chi|_inf` over the frames.
    pub fn deformation(&self) -> Result<f64> {
        let mut worst = 0.0_f64;
        for m in 0..self.time().n_nodes() {
            worst = worst.max(self.flow_map(m).deformation()?);
        }
        Ok(worst)
    }

    /// `|(X - id, tau[, v])|` in the Lipschitz-in-time norm.
    pub fn radius(&self, params: &NormParams) -> Result<f64> {
        p1_norm(&self.chi, &self.tau, self.v.as_ref(), params)
    }

    /// Distance to `other` in the path norm, with the velocity weighted by `delta`.
    pub fn distance(&self, other: &LagrangianState, params: &NormParams, delta: f64) -> Result<f64> {
        let v = match (&self.v, &other.v) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(Error::InvalidParameter("only one state carries a velocity".into())),
        };
        p_distance((&self.chi, &other.chi), (&self.tau, &other.tau), v, params, delta)
    }
}

/// Fields produced while evaluating the map `S` on a state.
#[derive(Clone, Debug)]
pub struct Evaluation {
    /// `X^{-1}` per frame.
    pub inverse: Vec<FlowMap>,
    /// Eulerian state `tau o X^{-1}`.
    pub state_eulerian: Path,
    /// Eulerian momentum stress `S(tau o X^{-1})`, without the inertial part.
    pub stress: Path,
    /// Eulerian velocity and its gradient.
    pub u: Path,
    pub grad_u: Path,
    /// Lagrangian velocity `u o X` and gradient `g = grad u o X`.
    pub velocity: Path,
    pub g: Path,
}

pub(super) fn check_u0(u0: &Field, grid: &GridSpec) -> Result<()> {
    if u0.rank() != Rank::Vector {
        return Err(Error::RankMismatch {
            expected: "vector".into(),
            found: u0.rank().to_string(),
        });
    }
    if u0.grid() != grid {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Evaluates `u`, `grad u` and their pull-backs at every node.
/// `inertia` subtracts `U((v ⊗ v) o X^{-1})` (requires a velocity path).
pub fn evaluate(
    config: &SolverConfig,
    state: &LagrangianState,
    u0: &Field,
    inertia: bool,
) -> Result<Evaluation> {
    check_u0(u0, state.grid())?;
    if inertia && state.v.is_none() {
        return Err(Error::InvalidParameter("inertia requires a velocity path".into()));
    }
    let time = *state.time();
    let kind = config.interp;
    let duhamel = config.duhamel()?;
    let frames = eulerian_frames(config, state, inertia)?;
    let spectra = duhamel.spectra(&frames.forcing)?;
    let grad_u0 = gradient(u0)?;
    let mut u = Vec::with_capacity(time.n_nodes());
    let mut grad_u = Vec::with_capacity(time.n_nodes());
    let mut velocity = Vec::with_capacity(time.n_nodes());
    let mut g = Vec::with_capacity(time.n_nodes());
    for m in 0..time.n_nodes() {
        let t = time.node(m);
        let um = duhamel.heat(u0, t)?.add(&spectra.velocity(m))?;
        let gm = duhamel.heat(&grad_u0, t)?.add(&spectra.gradient(m))?;
        let x = state.flow_map(m);
        velocity.push(compose(&um, &x, kind)?);
        g.push(compose(&gm, &x, kind)?);
        u.push(um);
        grad_u.push(gm);
    }
    Ok(Evaluation {
        inverse: frames.inverse,
        state_eulerian: frames.state_eulerian,
        stress: frames.stress,
        u: Path::new(time, u)?,
        grad_u: Path::new(time, grad_u)?,
        velocity: Path::new(time, velocity)?,
        g: Path::new(time, g)?,
    })
}

pub(super) struct EulerianFrames {
    pub(super) inverse: Vec<FlowMap>,
    pub(super) state_eulerian: Path,
    pub(super) stress: Path,
    /// `stress [- (v ⊗ v) o X^{-1}]`, the argument of the Duhamel operators.
    pub(super) forcing: Path,
}

pub(super) fn eulerian_frames(config: &SolverConfig, state: &LagrangianState, inertia: bool) -> Result<EulerianFrames> {
    let time = *state.time();
    let kind = config.interp;
    let n = time.n_nodes();
    let (mut inverse, mut state_e, mut stress, mut forcing) =
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for m in 0..n {
        let a = state.flow_map(m).invert(kind)?;
        let te = compose(state.tau.frame(m), &a, kind)?;
        let s = config.model.stress(&te)?;
        let f = match (&state.v, inertia) {
            (Some(v), true) => {
                let ve = compose(v.frame(m), &a, kind)?;
                s.sub(&outer(&ve, &ve)?)?
            }
            _ => s.clone(),
        };
        inverse.push(a);
        state_e.push(te);
        stress.push(s);
        forcing.push(f);
    }
    Ok(EulerianFrames {
        inverse,
        state_eulerian: Path::new(time, state_e)?,
        stress: Path::new(time, stress)?,
        forcing: Path::new(time, forcing)?,
    })
}

fn pulled_back(
    config: &SolverConfig,
    state: &LagrangianState,
    u0: &Field,
    t: f64,
    inertia: bool,
    grad: bool,
) -> Result<Field> {
    check_u0(u0, state.grid())?;
    if inertia && state.v.is_none() {
        return Err(Error::InvalidParameter("inertia requires a velocity path".into()));
    }
    let duhamel = config.duhamel()?;
    let forcing = eulerian_frames(config, state, inertia)?.forcing;
    let eulerian = if grad {
        duhamel.heat(&gradient(u0)?, t)?.add(&duhamel.op_g(&forcing, t)?)?
    } else {
        duhamel.heat(u0, t)?.add(&duhamel.op_u(&forcing, t)?)?
    };
    compose(&eulerian, &state.flow_map_at(t)?, config.interp)
}

/// Lagrangian velocity `(L(u0) + U(sigma)) o X` at time `t`, without inertia.
pub fn cal_u(config: &SolverConfig, state: &LagrangianState, u0: &Field, t: f64) -> Result<Field> {
    pulled_back(config, state, u0, t, false, false)
}

/// `cal_u` minus the inertial term `U((v ⊗ v) o X^{-1}) o X`.
pub fn cal_v(config: &SolverConfig, state: &LagrangianState, u0: &Field, t: f64) -> Result<Field> {
    pulled_back(config, state, u0, t, true, false)
}

/// `g = grad u o X` at time `t`; includes inertia on the Navier-Stokes branch.
pub fn lag_g(config: &SolverConfig, state: &LagrangianState, u0: &Field, t: f64) -> Result<Field> {
    pulled_back(config, state, u0, t, config.inertia(), true)
}

/// `X_new(t_m) = a + int_0^{t_m} velocity`, trapezoid rule over the frames.
fn integrate_displacement(velocity: &Path) -> Result<Path> {
    let time = *velocity.time();
    let h = time.dt();
    let mut chi = vec![Field::zeros(velocity.grid(), Rank::Vector)];
    for m in 0..time.steps() {
        let step = velocity.frame(m).add(velocity.frame(m + 1))?;
        chi.push(chi[m].axpy(0.5 * h, &step)?);
    }
    Path::new(time, chi)
}

/// One application of the fixed-point map, returning the new state and the
/// evaluation of the old one.
pub fn apply_s_with(
    config: &SolverConfig,
    state: &LagrangianState,
    u0: &Field,
    tau0: &Field,
) -> Result<(LagrangianState, Evaluation)> {
    let ev = evaluate(config, state, u0, config.inertia())?;
    let chi = integrate_displacement(&ev.velocity)?;
    for m in 0..chi.time().n_nodes() {
        let def = FlowMap::new(chi.frame(m).clone())?.deformation()?;
        if def > 0.5 {
            return Err(Error::InvariantViolation {
                frame: m,
                what: format!("|grad chi|_inf = {def:.4} exceeds 1/2"),
            });
        }
    }
    let tau = config.model.integrate_tau(&ev.g, tau0)?;
    let v = config.inertia().then(|| ev.velocity.clone());
    Ok((LagrangianState::new(chi, tau, v)?, ev))
}

/// One application of the fixed-point map.
pub fn apply_s(
    config: &SolverConfig,
    state: &LagrangianState,
    u0: &Field,
    tau0: &Field,
) -> Result<LagrangianState> {
    Ok(apply_s_with(config, state, u0, tau0)?.0)
}

/// One row of the convergence history.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Path-norm distance between successive iterates.
    pub distance: f64,
    /// `distance / previous distance`; absent for the first iterate.
    pub ratio: Option<f64>,
    /// Seconds since the start, or 0 unless wall-time recording is on.
    pub wall_time: f64,
}

/// A converged fixed point with its Eulerian reconstruction.
#[derive(Clone, Debug)]
pub struct Solution {
    pub state: LagrangianState,
    pub history: Vec<IterationRecord>,
    pub evaluation: Evaluation,
    /// Invariant-set radius of the solution.
    pub radius: f64,
}

impl Solution {
    pub fn u(&self) -> &Path {
        &self.evaluation.u
    }

    /// Eulerian momentum stress.
    pub fn sigma(&self) -> &Path {
        &self.evaluation.stress
    }
}

/// Initial guess of the Picard iteration for the configured branch.
pub fn initial_guess(config: &SolverConfig, u0: &Field, tau0: &Field) -> Result<LagrangianState> {
    let time = config.time()?;
    let v0 = if config.inertia() {
        Some(config.duhamel()?.op_l_path(u0, time)?)
    } else {
        None
    };
    LagrangianState::initial(time, tau0, v0)
}

fn check_data(config: &SolverConfig, u0: &Field, tau0: &Field) -> Result<()> {
    check_u0(u0, tau0.grid())?;
    if tau0.rank() != config.model.state_rank() {
        return Err(Error::RankMismatch {
            expected: config.model.state_rank().to_string(),
            found: tau0.rank().to_string(),
        });
    }
    let div = divergence(u0)?.max_abs();
    let scale = gradient(u0)?.max_abs().max(1.0);
    if div > 1e-10 * scale {
        return Err(Error::InvalidParameter(format!(
            "initial velocity has divergence {div:e}"
        )));
    }
    Ok(())
}

/// Picard iteration from the default initial guess.
pub fn picard_solve(config: &SolverConfig, u0: &Field, tau0: &Field) -> Result<Solution> {
    check_data(config, u0, tau0)?;
    let start = initial_guess(config, u0, tau0)?;
    picard_from(config, u0, tau0, start)
}

/// Picard iteration from a caller-provided initial guess.
///
/// Stops when successive iterates are closer than `tol_fp`. Gives up with
/// [`Error::NonConvergence`] after `max_iter` iterates or once the distance
/// has grown three times in a row.
pub fn picard_from(
    config: &SolverConfig,
    u0: &Field,
    tau0: &Field,
    start: LagrangianState,
) -> Result<Solution> {
    config.validate()?;
    check_data(config, u0, tau0)?;
    if config.inertia() != start.v.is_some() {
        return Err(Error::InvalidParameter(
            "initial guess must carry a velocity exactly on the Navier-Stokes branch".into(),
        ));
    }
    let clock = Instant::now();
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut z = start;
    let mut growing = 0;
    for iteration in 1..=config.max_iter {
        let next = apply_s(config, &z, u0, tau0)?;
        let distance = next.distance(&z, &config.params, config.delta)?;
        let ratio = history.last().map(|h| distance / h.distance);
        history.push(IterationRecord {
            iteration,
            distance,
            ratio,
            wall_time: if config.record_wall_time {
                clock.elapsed().as_secs_f64()
            } else {
                0.0
            },
        });
        log::debug!("picard iteration {iteration}: distance {distance:e}");
        z = next;
        if !distance.is_finite() {
            return Err(Error::NonConvergence { history });
        }
        if distance < config.tol_fp {
            let radius = z.radius(&config.params)?;
            if let Some(gamma) = config.gamma {
                if radius > gamma {
                    return Err(Error::InvariantViolation {
                        frame: z.time().steps(),
                        what: format!("radius {radius:.4e} exceeds gamma = {gamma:.4e}"),
                    });
                }
            }
            let evaluation = evaluate(config, &z, u0, config.inertia())?;
            return Ok(Solution {
                state: z,
                history,
                evaluation,
                radius,
            });
        }
        growing = match ratio {
            Some(r) if r > 1.0 => growing + 1,
            _ => 0,
        };
        if growing >= 3 {
            return Err(Error::NonConvergence { history });
        }
    }
    Err(Error::NonConvergence { history })
}

#[cfg(test)]
mod tests;
