//! Directional derivatives of the Lagrangian nonlinearities.
//!
//! For a direction `(X', tau'[, v'])` write `eta = X' o X^{-1}` and
//! `delta = tau' o X^{-1}`. With `sigma` the Eulerian forcing of the state,
//!
//! ```text
//! U' o X^{-1} = eta . grad L(u0) + L(u0') + [eta . grad, U](sigma) + U(sigma')
//! g' o X^{-1} = eta . grad grad L(u0) + grad L(u0') + [eta . grad, G](sigma) + G(sigma')
//! T'          = D1F(g, tau) g' + D2F(g, tau) tau'
//! ```
//!
//! where `sigma' = DS(tau o X^{-1}) delta`, less `(v ⊗ v' + v' ⊗ v) o X^{-1}`
//! when inertia is present. The label gradient follows from
//! `grad_a U' = g' grad_a X + g grad_a X'`.

use super::{check_u0, eulerian_frames, LagrangianState, SolverConfig};
use crate::grid::{advect, gradient, matmul_raw, outer, Field, Path, Rank};
use crate::lagrangian::compose;
use crate::{Error, Result};

/// A tangent direction `(X', tau'[, v'])` at a state; `chi` holds `X'`.
#[derive(Clone, Debug)]
pub struct Direction {
    pub chi: Path,
    pub tau: Path,
    pub v: Option<Path>,
}

impl Direction {
    pub fn zeros(state: &LagrangianState) -> Self {
        let time = *state.time();
        let grid = state.grid();
        Self {
            chi: Path::zeros(time, grid, Rank::Vector),
            tau: Path::zeros(time, grid, state.tau().rank()),
            v: state.v().map(|_| Path::zeros(time, grid, Rank::Vector)),
        }
    }

    /// `state + eps * self`.
    pub fn displace(&self, state: &LagrangianState, eps: f64) -> Result<LagrangianState> {
        let v = match (state.v(), &self.v) {
            (Some(v), Some(dv)) => Some(v.axpy(eps, dv)?),
            (Some(v), None) => Some(v.clone()),
            (None, _) => None,
        };
        LagrangianState::new(
            state.chi().axpy(eps, &self.chi)?,
            state.tau().axpy(eps, &self.tau)?,
            v,
        )
    }
}

/// Derivatives of the Lagrangian nonlinearities at one time.
#[derive(Clone, Debug)]
pub struct Linearization {
    /// `U'`, without inertia.
    pub du: Field,
    /// `V'`, with inertia; present on states carrying a velocity.
    pub dv: Option<Field>,
    /// `g'` for the configured branch.
    pub dg: Field,
    /// `T' = DF(g, tau)(g', tau')`.
    pub dtau: Field,
    /// `g' grad_a X + g grad_a X'`, the label gradient of the branch velocity derivative.
    pub grad_dvelocity: Field,
}

/// Derivatives of `U`, `g`, `T` (and `V`) at `state` along `dir`, with
/// initial-velocity perturbation `du0`, at time `t`.
pub fn linearized_maps(
    config: &SolverConfig,
    state: &LagrangianState,
    dir: &Direction,
    u0: &Field,
    du0: &Field,
    t: f64,
) -> Result<Linearization> {
    check_u0(u0, state.grid())?;
    check_u0(du0, state.grid())?;
    if dir.chi.time() != state.time() || dir.tau.time() != state.time() {
        return Err(Error::InvalidTimeGrid("direction and state on different time grids".into()));
    }
    let inertia = state.v().is_some();
    if config.inertia() && !inertia {
        return Err(Error::InvalidParameter("inertia requires a velocity path".into()));
    }
    let kind = config.interp;
    let model = &config.model;
    let duhamel = config.duhamel()?;
    let time = *state.time();
    let frames = eulerian_frames(config, state, inertia)?;

    let mut eta = Vec::with_capacity(time.n_nodes());
    let mut ds = Vec::with_capacity(time.n_nodes());
    let mut ds_inertial = Vec::with_capacity(time.n_nodes());
    for m in 0..time.n_nodes() {
        let a = &frames.inverse[m];
        eta.push(compose(dir.chi.frame(m), a, kind)?);
        let delta = compose(dir.tau.frame(m), a, kind)?;
        let s = model.stress_d(frames.state_eulerian.frame(m), &delta)?;
        if let Some(v) = state.v() {
            let ve = compose(v.frame(m), a, kind)?;
            let dve = match &dir.v {
                Some(dv) => compose(dv.frame(m), a, kind)?,
                None => Field::zeros(state.grid(), Rank::Vector),
            };
            let w = outer(&ve, &dve)?.add(&outer(&dve, &ve)?)?;
            ds_inertial.push(s.sub(&w)?);
        }
        ds.push(s);
    }
    let eta = Path::new(time, eta)?;
    let ds = Path::new(time, ds)?;
    let eta_t = eta.at(t)?;

    let lu0 = duhamel.heat(u0, t)?;
    let grad_lu0 = duhamel.heat(&gradient(u0)?, t)?;
    let base_u = advect(&eta_t, &lu0)?.add(&duhamel.heat(du0, t)?)?;
    let base_g = advect(&eta_t, &grad_lu0)?.add(&duhamel.heat(&gradient(du0)?, t)?)?;

    let x = state.flow_map_at(t)?;
    let du_e = base_u
        .add(&duhamel.commutator_u(&eta, &frames.stress, t)?)?
        .add(&duhamel.op_u(&ds, t)?)?;
    let du = compose(&du_e, &x, kind)?;

    let dv = if inertia {
        let ds_i = Path::new(time, ds_inertial)?;
        let dv_e = base_u
            .add(&duhamel.commutator_u(&eta, &frames.forcing, t)?)?
            .add(&duhamel.op_u(&ds_i, t)?)?;
        let dg_e = base_g
            .add(&duhamel.commutator_g(&eta, &frames.forcing, t)?)?
            .add(&duhamel.op_g(&ds_i, t)?)?;
        Some((compose(&dv_e, &x, kind)?, dg_e))
    } else {
        None
    };
    let (forcing, dg_e) = match (&dv, config.inertia()) {
        (Some((_, dg_e)), true) => (&frames.forcing, dg_e.clone()),
        _ => (
            &frames.stress,
            base_g
                .add(&duhamel.commutator_g(&eta, &frames.stress, t)?)?
                .add(&duhamel.op_g(&ds, t)?)?,
        ),
    };
    let dg = compose(&dg_e, &x, kind)?;
    let g = compose(&grad_lu0.add(&duhamel.op_g(forcing, t)?)?, &x, kind)?;

    let dtau = model.eval_df_field(&g, &state.tau().at(t)?, &dg, &dir.tau.at(t)?)?;
    let grad_dvelocity = matmul_raw(&dg, &x.grad_label()?)
        .add(&matmul_raw(&g, &gradient(&dir.chi.at(t)?)?))?;
    Ok(Linearization {
        du,
        dv: dv.map(|(f, _)| f),
        dg,
        dtau,
        grad_dvelocity,
    })
}
