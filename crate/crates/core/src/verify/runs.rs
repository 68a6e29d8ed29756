//! Checks that run the Lagrangian solver: contraction, data dependence,
//! uniqueness, chord-arc bounds and the cross-validation against the
//! Eulerian reference.

use serde::Serialize;

use super::{eulerian_reference, BoundCheckReport, Sample, BOUND_SLACK};
use crate::data::rough_field;
use crate::grid::{Field, GridSpec, Path, Rank, Stencil, TimeGrid};
use crate::lagrangian::{chord_arc, lambda_path, FlowMap};
use crate::norms::{lp_norm, norm_1alpha_p, norm_alpha_p, path_norm_beta, path_sup, sup_norm, SpatialNorm};
use crate::solver::{
    apply_s, initial_guess, picard_from, picard_solve, IterationRecord, LagrangianState, Solution,
    SolverConfig,
};
use crate::{Error, Result};

/// Per-frame differences between the Lagrangian solution and the Eulerian reference.
#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub times: Vec<f64>,
    pub linf_u: Vec<f64>,
    pub l2_u: Vec<f64>,
    pub linf_state: Vec<f64>,
    pub l2_state: Vec<f64>,
    /// Last Picard distance.
    pub residual: f64,
    pub iterations: usize,
    #[serde(skip)]
    pub history: Vec<IterationRecord>,
}

impl Comparison {
    /// Largest velocity or state difference over all frames.
    pub fn max_difference(&self) -> f64 {
        self.linf_u
            .iter()
            .chain(&self.linf_state)
            .fold(0.0, |a, &b| a.max(b))
    }
}

/// Runs both solvers on the same data and records their differences.
pub fn compare_solvers(config: &SolverConfig, u0: &Field, tau0: &Field) -> Result<Comparison> {
    let sol = picard_solve(config, u0, tau0)?;
    let eul = eulerian_reference(config, u0, tau0)?;
    let time = config.time()?;
    let mut c = Comparison {
        times: time.nodes(),
        linf_u: Vec::new(),
        l2_u: Vec::new(),
        linf_state: Vec::new(),
        l2_state: Vec::new(),
        residual: sol.history.last().map_or(0.0, |h| h.distance),
        iterations: sol.history.len(),
        history: sol.history.clone(),
    };
    for m in 0..time.n_nodes() {
        let du = sol.u().frame(m).sub(eul.u.frame(m))?;
        let ds = sol.evaluation.state_eulerian.frame(m).sub(eul.state.frame(m))?;
        c.linf_u.push(sup_norm(&du));
        c.l2_u.push(lp_norm(&du, 2.0));
        c.linf_state.push(sup_norm(&ds));
        c.l2_state.push(lp_norm(&ds, 2.0));
    }
    Ok(c)
}

/// Chord-arc ratios of every frame of a converged run against
/// `lambda(t) = exp(int_0^t |grad u|_inf)`.
pub fn check_chord_arc(solution: &Solution, stencil: Stencil, slack: f64) -> Result<BoundCheckReport> {
    let lambda = lambda_path(&solution.evaluation.grad_u);
    let time = *solution.state.time();
    let maps: Vec<FlowMap> = (0..time.n_nodes()).map(|m| solution.state.flow_map(m)).collect();
    chord_arc_report("chord-arc", &maps, &lambda, &time, stencil, slack)
}

fn chord_arc_report(
    name: &str,
    maps: &[FlowMap],
    lambda: &[f64],
    time: &TimeGrid,
    stencil: Stencil,
    slack: f64,
) -> Result<BoundCheckReport> {
    let mut samples = Vec::new();
    let mut first_violation = None;
    for (m, x) in maps.iter().enumerate() {
        let r = chord_arc(x, lambda[m], stencil, slack)?;
        if !r.within_bounds() && first_violation.is_none() {
            first_violation = Some(m);
        }
        samples.push(Sample {
            scale: time.node(m),
            measured: r.max_ratio.max(1.0 / r.min_ratio),
            bound: lambda[m] * (1.0 + slack),
        });
    }
    Ok(BoundCheckReport {
        bound_name: name.to_string(),
        fitted_constant: 1.0,
        scaling_exponent: 0.0,
        samples,
        details: vec![("lambda_final".into(), *lambda.last().unwrap())],
        pass: first_violation.is_none(),
        first_violation,
    })
}

/// The explicit steady shear `u = c sin(x2) e1`, whose flow map is
/// `X(a, t) = a + t c sin(a2) e1` and whose chord-arc constant is
/// `lambda = e^{c t}`. Reports the ratios and, as a detail, the largest
/// deviation of the quadrature `lambda` from `e^{c t}`.
pub fn shear_chord_arc(grid: &GridSpec, c: f64, time: TimeGrid, stencil: Stencil, slack: f64) -> Result<BoundCheckReport> {
    let grad = Field::matrix_fn(grid, |x| [[0.0, c * x[1].cos(), 0.0], [0.0; 3], [0.0; 3]]);
    let lambda = lambda_path(&Path::constant(time, &grad));
    let mut deviation = 0.0_f64;
    let mut maps = Vec::new();
    for (m, l) in lambda.iter().enumerate() {
        let t = time.node(m);
        deviation = deviation.max((l - (c.abs() * t).exp()).abs());
        maps.push(FlowMap::new(Field::vector_fn(grid, |x| [t * c * x[1].sin(), 0.0, 0.0]))?);
    }
    Ok(chord_arc_report("shear-chord-arc", &maps, &lambda, &time, stencil, slack)?
        .with_detail("lambda_deviation", deviation))
}

/// Inputs of the contraction study.
#[derive(Clone, Debug)]
pub struct ContractionInputs {
    pub config: SolverConfig,
    pub u0: Field,
    pub tau0: Field,
    /// Final times, in decreasing order.
    pub times: Vec<f64>,
    pub seed: u64,
    /// Supremum of the random perturbation profiles.
    pub size: f64,
}

fn smooth_profile(grid: &GridSpec, rank: Rank, seed: u64, stream: u64, size: f64) -> Result<Field> {
    let f = rough_field(grid, rank, 1.5, seed, stream, Some(2.5))?;
    let m = f.max_abs();
    Ok(if m > 0.0 { f.scale(size / m) } else { f })
}

/// `state + t * profile` on each path, with seeded smooth profiles.
fn perturbed(state: &LagrangianState, seed: u64, size: f64) -> Result<LagrangianState> {
    let g = *state.grid();
    let time = *state.time();
    let ramp = |f: Field| Path::from_fn(time, |_, t| f.scale(t));
    let chi = ramp(smooth_profile(&g, Rank::Vector, seed, 10, size)?)?;
    let tau = ramp(smooth_profile(&g, state.tau().rank(), seed, 11, size)?)?;
    let v = match state.v() {
        Some(v) => Some(v.add(&ramp(smooth_profile(&g, Rank::Vector, seed, 12, size)?)?)?),
        None => None,
    };
    LagrangianState::new(state.chi().add(&chi)?, state.tau().add(&tau)?, v)
}

/// Ratios `|S z1 - S z2| / |z1 - z2|` for two seeded states around the
/// initial guess, per final time. Passes when some ratio is at most 1/2 and
/// the ratios decrease with the final time.
pub fn check_contraction(inputs: &ContractionInputs) -> Result<BoundCheckReport> {
    let mut samples = Vec::new();
    for &t in &inputs.times {
        let mut cfg = inputs.config.clone();
        cfg.final_time = t;
        let base = initial_guess(&cfg, &inputs.u0, &inputs.tau0)?;
        let z1 = perturbed(&base, inputs.seed, inputs.size)?;
        let z2 = perturbed(&base, inputs.seed.wrapping_add(1), inputs.size)?;
        let s1 = apply_s(&cfg, &z1, &inputs.u0, &inputs.tau0)?;
        let s2 = apply_s(&cfg, &z2, &inputs.u0, &inputs.tau0)?;
        let before = z1.distance(&z2, &cfg.params, cfg.delta)?;
        let after = s1.distance(&s2, &cfg.params, cfg.delta)?;
        samples.push(Sample {
            scale: t,
            measured: after / before,
            bound: 0.5,
        });
    }
    let mut order: Vec<&Sample> = samples.iter().collect();
    order.sort_by(|a, b| b.scale.total_cmp(&a.scale));
    let monotone = order.windows(2).all(|w| w[1].measured <= w[0].measured);
    let best = samples.iter().map(|s| s.measured).fold(f64::INFINITY, f64::min);
    let first_violation = None;
    Ok(BoundCheckReport {
        bound_name: "contraction".into(),
        fitted_constant: 0.5,
        scaling_exponent: 0.0,
        samples,
        details: vec![
            ("monotone".into(), if monotone { 1.0 } else { 0.0 }),
            ("min_ratio".into(), best),
        ],
        pass: monotone && best <= 0.5,
        first_violation,
    })
}

/// Direction of an initial-data perturbation.
#[derive(Clone, Debug)]
pub struct Perturbation {
    pub du0: Field,
    pub dtau0: Field,
}

fn solution_difference(a: &Solution, b: &Solution, config: &SolverConfig) -> Result<f64> {
    let p = &config.params;
    let dx = a.state.chi().sub(b.state.chi())?;
    let dtau = a.state.tau().sub(b.state.tau())?;
    let dv = a.evaluation.velocity.sub(&b.evaluation.velocity)?;
    Ok(path_norm_beta(&dx, p.beta, SpatialNorm::OneAlphaP, p)?.total()
        + path_norm_beta(&dtau, p.beta, SpatialNorm::AlphaP, p)?.total()
        + path_sup(&dv, SpatialNorm::OneAlphaP, p)?)
}

/// Solves from `(u0, tau0)` and from `(u0 + eps du0, tau0 + eps dtau0)` for
/// every `eps` and measures `|X2 - X1|_{C^beta(C^{1+alpha,p})} + |tau2 - tau1|_{C^beta(C^{alpha,p})}
/// + |d_t X2 - d_t X1|_{L^inf(C^{1+alpha,p})}`.
///
/// The constant is fitted against `eps (|du0|_{1+alpha,p} + |dtau0|_{alpha,p})`
/// at the largest `eps`; the check also requires each ratio between `eps`
/// and `eps / 2` runs to lie in `[1.8, 2.2]`.
pub fn check_lipschitz_data(
    config: &SolverConfig,
    u0: &Field,
    tau0: &Field,
    pert: &Perturbation,
    epsilons: &[f64],
) -> Result<BoundCheckReport> {
    if epsilons.is_empty() {
        return Err(Error::InvalidParameter("no perturbation sizes".into()));
    }
    let base = picard_solve(config, u0, tau0)?;
    let size = norm_1alpha_p(&pert.du0, &config.params)? + norm_alpha_p(&pert.dtau0, &config.params);
    let mut pts = Vec::new();
    for &eps in epsilons {
        let sol = picard_solve(config, &u0.axpy(eps, &pert.du0)?, &tau0.axpy(eps, &pert.dtau0)?)?;
        pts.push((eps, solution_difference(&sol, &base, config)?, eps * size));
    }
    let fit = (0..pts.len()).max_by(|&a, &b| pts[a].0.total_cmp(&pts[b].0)).unwrap();
    let mut report = BoundCheckReport::fitted("lipschitz", 1.0, &pts, fit, BOUND_SLACK);
    let mut linear = true;
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            if (pts[j].0 * 2.0 - pts[i].0).abs() <= 1e-12 * pts[i].0 {
                let r = pts[i].1 / pts[j].1;
                report = report.with_detail(&format!("ratio_{:e}", pts[i].0), r);
                linear &= (1.8..=2.2).contains(&r);
            }
        }
    }
    if !linear {
        report = report.fail("nonlinear_scaling");
    }
    Ok(report)
}

/// Solves twice with identical data, once from the default initial guess and
/// once from a seeded perturbation of it, and compares the fixed points.
pub fn check_uniqueness(config: &SolverConfig, u0: &Field, tau0: &Field, seed: u64) -> Result<BoundCheckReport> {
    let a = picard_solve(config, u0, tau0)?;
    let start = perturbed(&initial_guess(config, u0, tau0)?, seed, 0.05)?;
    let b = picard_from(config, u0, tau0, start)?;
    let distance = a.state.distance(&b.state, &config.params, config.delta)?;
    let bound = 2.0 * config.tol_fp;
    Ok(BoundCheckReport {
        bound_name: "uniqueness".into(),
        fitted_constant: 2.0,
        scaling_exponent: 0.0,
        samples: vec![Sample {
            scale: config.final_time,
            measured: distance,
            bound,
        }],
        details: vec![
            ("iterations_default".into(), a.history.len() as f64),
            ("iterations_perturbed".into(), b.history.len() as f64),
        ],
        pass: distance <= bound,
        first_violation: (distance > bound).then_some(0),
    })
}
