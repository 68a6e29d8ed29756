//! Fitted-shape checks of the Duhamel operator and commutator bounds.

use super::{BoundCheckReport, BOUND_SLACK};
use crate::grid::{advect, Field, GridSpec, Path, TimeGrid};
use crate::norms::{
    norm_1alpha, norm_alpha, norm_alpha_p, path_norm_beta, path_sup, sup_norm, NormParams,
    SpatialNorm,
};
use crate::operators::{commutator_steady, Duhamel, Multiplier};
use crate::{Error, Result};

/// A time-dependent field sampled at arbitrary times.
pub type TimeFamily<'a> = &'a dyn Fn(f64) -> Field;

fn path_of(family: TimeFamily, t: f64, steps: usize) -> Result<Path> {
    Path::from_fn(TimeGrid::new(t, steps)?, |_, s| family(s))
}

fn largest(times: &[f64]) -> Result<usize> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("empty time sweep".into()));
    }
    Ok(times
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap())
}

fn max_over_frames(path: &Path, params: &NormParams) -> f64 {
    path.frames()
        .iter()
        .map(|f| norm_alpha_p(f, params))
        .fold(0.0, f64::max)
}

/// `sup_t |U(sigma)|_{alpha,p} <= C sqrt(T) sup_t |sigma|_{alpha,p}` over a sweep of final times.
pub fn check_u_bound(
    sigma: TimeFamily,
    times: &[f64],
    steps: usize,
    params: &NormParams,
    duhamel: &Duhamel,
) -> Result<BoundCheckReport> {
    let fit = largest(times)?;
    let mut pts = Vec::new();
    for &t in times {
        let s = path_of(sigma, t, steps)?;
        let u = duhamel.op_u_path(&s)?;
        let rhs = t.sqrt() * path_sup(&s, SpatialNorm::AlphaP, params)?;
        pts.push((t, max_over_frames(&u, params), rhs));
    }
    Ok(BoundCheckReport::fitted("u-bound", 0.5, &pts, fit, BOUND_SLACK))
}

/// `sup_t |G(sigma)|_{alpha,p} <= C |sigma|_{C^beta(C^{alpha,p})}`.
pub fn check_g_bound(
    sigma: TimeFamily,
    times: &[f64],
    steps: usize,
    params: &NormParams,
    duhamel: &Duhamel,
) -> Result<BoundCheckReport> {
    let fit = largest(times)?;
    let mut pts = Vec::new();
    for &t in times {
        let s = path_of(sigma, t, steps)?;
        let g = duhamel.op_g_path(&s)?;
        let rhs = path_norm_beta(&s, params.beta, SpatialNorm::AlphaP, params)?.total();
        pts.push((t, max_over_frames(&g, params), rhs));
    }
    Ok(BoundCheckReport::fitted("g-bound", 0.0, &pts, fit, BOUND_SLACK))
}

/// `sup_t |[eta . grad, G] sigma|_{alpha,p} <= C |eta|_{C^beta(C^{1+alpha})} |sigma|_{C^beta(C^{alpha,p})}`.
pub fn check_comm_g_bound(
    eta: TimeFamily,
    sigma: TimeFamily,
    times: &[f64],
    steps: usize,
    params: &NormParams,
    duhamel: &Duhamel,
) -> Result<BoundCheckReport> {
    let fit = largest(times)?;
    let mut pts = Vec::new();
    for &t in times {
        let s = path_of(sigma, t, steps)?;
        let e = path_of(eta, t, steps)?;
        let (_, cg) = duhamel.commutator_paths(&e, &s)?;
        let rhs = path_norm_beta(&e, params.beta, SpatialNorm::OneAlpha, params)?.total()
            * path_norm_beta(&s, params.beta, SpatialNorm::AlphaP, params)?.total();
        pts.push((t, max_over_frames(&cg, params), rhs));
    }
    Ok(BoundCheckReport::fitted("comm-g", 0.0, &pts, fit, BOUND_SLACK))
}

/// `sup_t |[eta . grad, U] sigma|_{alpha,p} <= C (T^{1-beta} |eta|_{C^beta(C^alpha)}
/// + T^{1/2} |eta|_{L^inf(C^{1+alpha})}) |sigma|_{L^inf(C^{alpha,p})}`.
pub fn check_comm_u_bound(
    eta: TimeFamily,
    sigma: TimeFamily,
    times: &[f64],
    steps: usize,
    params: &NormParams,
    duhamel: &Duhamel,
) -> Result<BoundCheckReport> {
    let fit = largest(times)?;
    let mut pts = Vec::new();
    for &t in times {
        let s = path_of(sigma, t, steps)?;
        let e = path_of(eta, t, steps)?;
        let (cu, _) = duhamel.commutator_paths(&e, &s)?;
        let eta_beta = path_norm_beta(&e, params.beta, SpatialNorm::Alpha, params)?.total();
        let eta_sup = path_sup(&e, SpatialNorm::OneAlpha, params)?;
        let shape = (t.powf(1.0 - params.beta) * eta_beta + t.sqrt() * eta_sup)
            * path_sup(&s, SpatialNorm::AlphaP, params)?;
        pts.push((t, max_over_frames(&cu, params), shape));
    }
    Ok(BoundCheckReport::fitted("comm-u", 1.0 - params.beta, &pts, fit, BOUND_SLACK))
}

/// Inputs of the steady-commutator refinement study: fields are generated
/// per grid so the study can refine them.
pub struct SteadyCommInputs<'a> {
    pub eta: &'a dyn Fn(&GridSpec) -> Field,
    pub sigma: &'a dyn Fn(&GridSpec) -> Field,
    pub multiplier: Multiplier,
    /// Grids in refinement order.
    pub grids: Vec<GridSpec>,
}

/// Resolution study of `[eta . grad, K] sigma` for a degree-0 multiplier `K`.
///
/// Passes when, between the coarsest and finest grid, the `C^alpha` norm of
/// the commutator changes by less than 15%, the supremum of the single term
/// `eta . grad K sigma` grows by at least 1.3, and
/// `|[eta . grad, K] sigma|_{alpha,p} <= C |eta|_{C^{1+alpha}} |sigma|_{alpha,p}`
/// holds with `C` fitted on the coarsest grid.
pub fn check_steady_comm_bound(
    inputs: &SteadyCommInputs,
    params: &NormParams,
) -> Result<BoundCheckReport> {
    if inputs.grids.len() < 2 {
        return Err(Error::InvalidParameter("refinement study needs two grids".into()));
    }
    let mut pts = Vec::new();
    let mut comm_alpha = Vec::new();
    let mut term_sup = Vec::new();
    for g in &inputs.grids {
        let eta = (inputs.eta)(g);
        let sigma = (inputs.sigma)(g);
        let c = commutator_steady(&eta, &inputs.multiplier, &sigma)?;
        let term = advect(&eta, &inputs.multiplier.apply(&sigma)?)?;
        comm_alpha.push(norm_alpha(&c, params));
        term_sup.push(sup_norm(&term));
        let shape = norm_1alpha(&eta, params)? * norm_alpha_p(&sigma, params);
        pts.push((g.n() as f64, norm_alpha_p(&c, params), shape));
    }
    let last = pts.len() - 1;
    let change = (comm_alpha[last] - comm_alpha[0]).abs() / comm_alpha[0];
    let growth = term_sup[last] / term_sup[0];
    let mut report = BoundCheckReport::fitted("steady-comm", 0.0, &pts, 0, BOUND_SLACK)
        .with_detail("commutator_alpha_change", change)
        .with_detail("term_sup_growth", growth);
    for (g, (a, s)) in inputs.grids.iter().zip(comm_alpha.iter().zip(&term_sup)) {
        report = report
            .with_detail(&format!("commutator_alpha_n{}", g.n()), *a)
            .with_detail(&format!("term_sup_n{}", g.n()), *s);
    }
    if !(change < 0.15) {
        report = report.fail("commutator_norm_not_stable");
    }
    if !(growth >= 1.3) {
        report = report.fail("term_growth_below_1.3");
    }
    Ok(report)
}
