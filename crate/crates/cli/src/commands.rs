//! The `solve`, `verify` and `compare` subcommands.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Result};
use lagflow::data::rough_field;
use lagflow::grid::{divergence, snapshot, Field, GridSpec, Rank};
use lagflow::lagrangian::lambda_path;
use lagflow::norms::{composite_norms, NormParams, Perturbation as NormInput};
use lagflow::operators::Multiplier;
use lagflow::solver::{picard_solve, IterationRecord, Solution};
use lagflow::verify::{self, BoundCheckReport, ContractionInputs, SteadyCommInputs};
use serde::Serialize;

use crate::config::RunConfig;

/// Names accepted by `verify --check`.
pub const CHECKS: [&str; 9] = [
    "u-bound",
    "g-bound",
    "comm-g",
    "comm-u",
    "steady-comm",
    "chord-arc",
    "lipschitz",
    "uniqueness",
    "contraction",
];

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_history(dir: &Path, history: &[IterationRecord]) -> Result<()> {
    write_csv(&dir.join("history.csv"), history)
}

#[derive(Serialize)]
struct FrameRow {
    t: f64,
    u_linf: f64,
    stress_linf: f64,
    div_u_linf: f64,
    deformation: f64,
    lambda: f64,
}

fn frame_rows(sol: &Solution) -> Result<Vec<FrameRow>> {
    let lambda = lambda_path(&sol.evaluation.grad_u);
    let time = *sol.state.time();
    let mut rows = Vec::new();
    for m in 0..time.n_nodes() {
        let u = sol.u().frame(m);
        rows.push(FrameRow {
            t: time.node(m),
            u_linf: u.max_abs(),
            stress_linf: sol.sigma().frame(m).max_abs(),
            div_u_linf: divergence(u)?.max_abs(),
            deformation: sol.state.flow_map(m).deformation()?,
            lambda: lambda[m],
        });
    }
    Ok(rows)
}

/// Runs the Picard iteration and writes the history, per-frame diagnostics,
/// the norm report and optional snapshots.
pub fn solve(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.write_resolved(out)?;
    let grid = cfg.grid_spec()?;
    let solver = cfg.solver_config()?;
    let data = cfg.data.build(&grid, &solver.model)?;
    let sol = match picard_solve(&solver, &data.u0, &data.tau0) {
        Ok(s) => s,
        Err(e) => {
            if let lagflow::Error::NonConvergence { history } = &e {
                write_history(out, history)?;
            }
            return Err(e.into());
        }
    };
    write_history(out, &sol.history)?;
    write_csv(&out.join("frames.csv"), &frame_rows(&sol)?)?;
    let report = composite_norms(
        &NormInput {
            x: sol.state.chi(),
            tau: sol.state.tau(),
            v: sol.state.v(),
            u0: Some(&data.u0),
        },
        &solver.params,
        solver.delta,
    )?;
    write_csv(&out.join("norms.csv"), &[report])?;
    if cfg.snapshots {
        let dir = out.join("snapshots");
        let time = *sol.state.time();
        for m in 0..time.n_nodes() {
            snapshot::write(&dir, &format!("u.t{m:04}"), sol.u().frame(m), time.node(m))?;
            snapshot::write(&dir, &format!("sigma.t{m:04}"), sol.sigma().frame(m), time.node(m))?;
        }
    }
    let last = sol.history.last().map_or(0.0, |h| h.distance);
    println!("converged in {} iterations, residual {last:.3e}", sol.history.len());
    Ok(())
}

/// Rough symmetric stress of the configured envelope.
fn rough_stress(cfg: &RunConfig, grid: &GridSpec) -> Result<Field> {
    Ok(rough_field(grid, Rank::Matrix, cfg.data.alpha, cfg.data.seed, 100, cfg.data.cutoff)?.symmetrized()?)
}

fn smooth_eta(grid: &GridSpec) -> Field {
    Field::vector_fn(grid, |x| [0.3 * x[1].sin(), 0.2 * (x[0] + x[1]).cos(), 0.1 * x[0].sin()])
}

/// Runs one named check.
pub fn run_check(cfg: &RunConfig, name: &str) -> Result<BoundCheckReport> {
    let grid = cfg.grid_spec()?;
    let solver = cfg.solver_config()?;
    let v = &cfg.verify;
    let duhamel = solver.duhamel()?;
    let p = &solver.params;
    let base = rough_stress(cfg, &grid)?;
    let eta0 = smooth_eta(&grid);
    let sigma = |t: f64| base.scale(1.0 + t);
    let eta = |t: f64| eta0.scale(1.0 + 2.0 * t);
    let data = || cfg.data.build(&grid, &solver.model);
    let report = match name {
        "u-bound" => verify::check_u_bound(&sigma, &v.times, v.sweep_steps, p, &duhamel)?,
        "g-bound" => verify::check_g_bound(&sigma, &v.times, v.sweep_steps, p, &duhamel)?,
        "comm-g" => verify::check_comm_g_bound(&eta, &sigma, &v.times, v.sweep_steps, p, &duhamel)?,
        "comm-u" => verify::check_comm_u_bound(&eta, &sigma, &v.times, v.sweep_steps, p, &duhamel)?,
        "steady-comm" => {
            let rough = |g: &GridSpec| {
                rough_field(g, Rank::Scalar, cfg.data.alpha, cfg.data.seed, 101, None).expect("valid grid")
            };
            let grids = v
                .steady_grids
                .iter()
                .map(|&n| GridSpec::new(grid.d(), n, grid.length()))
                .collect::<lagflow::Result<Vec<_>>>()?;
            verify::check_steady_comm_bound(
                &SteadyCommInputs {
                    eta: &smooth_eta,
                    sigma: &rough,
                    multiplier: Multiplier::riesz_product(0, 1),
                    grids,
                },
                &NormParams { alpha: v.steady_alpha, ..*p },
            )?
        }
        "chord-arc" => {
            let d = data()?;
            let sol = picard_solve(&solver, &d.u0, &d.tau0)?;
            verify::check_chord_arc(&sol, p.stencil, v.chord_slack)?
        }
        "lipschitz" => {
            let d = data()?;
            let du0 = lagflow::operators::leray_h(&rough_field(&grid, Rank::Vector, 1.5, cfg.data.seed, 102, Some(3.0))?)?;
            let dtau0 = rough_field(&grid, solver.model.state_rank(), 1.5, cfg.data.seed, 103, Some(3.0))?;
            let dtau0 = if dtau0.rank() == Rank::Matrix { dtau0.symmetrized()? } else { dtau0 };
            let mut tight = solver.clone();
            tight.tol_fp = tight.tol_fp.min(1e-12);
            tight.max_iter = tight.max_iter.max(60);
            let pert = verify::Perturbation {
                du0: du0.scale(1.0 / du0.max_abs().max(1e-300)),
                dtau0: dtau0.scale(1.0 / dtau0.max_abs().max(1e-300)),
            };
            verify::check_lipschitz_data(&tight, &d.u0, &d.tau0, &pert, &v.epsilons)?
        }
        "uniqueness" => {
            let d = data()?;
            verify::check_uniqueness(&solver, &d.u0, &d.tau0, cfg.data.seed)?
        }
        "contraction" => {
            let d = data()?;
            verify::check_contraction(&ContractionInputs {
                config: solver.clone(),
                u0: d.u0,
                tau0: d.tau0,
                times: v.times.clone(),
                seed: cfg.data.seed,
                size: v.perturbation_size,
            })?
        }
        other => bail!(UnknownCheck(other.to_string())),
    };
    Ok(report)
}

/// `verify --check` named a check that does not exist.
#[derive(Debug)]
pub struct UnknownCheck(pub String);

impl std::fmt::Display for UnknownCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "unknown check '{}' (expected one of {} or all)", self.0, CHECKS.join(", "))
    }
}

impl std::error::Error for UnknownCheck {}

#[derive(Serialize)]
struct SampleRow {
    scale: f64,
    measured: f64,
    bound: f64,
    within: bool,
}

#[derive(Serialize)]
struct DetailRow<'a> {
    key: &'a str,
    value: f64,
}

fn write_report(dir: &Path, r: &BoundCheckReport) -> Result<()> {
    let rows: Vec<SampleRow> = r
        .samples
        .iter()
        .map(|s| SampleRow {
            scale: s.scale,
            measured: s.measured,
            bound: s.bound,
            within: s.measured <= s.bound,
        })
        .collect();
    write_csv(&dir.join(format!("{}.csv", r.bound_name)), &rows)?;
    let mut details = vec![
        DetailRow { key: "fitted_constant", value: r.fitted_constant },
        DetailRow { key: "scaling_exponent", value: r.scaling_exponent },
        DetailRow { key: "pass", value: if r.pass { 1.0 } else { 0.0 } },
    ];
    details.extend(r.details.iter().map(|(k, v)| DetailRow { key: k, value: *v }));
    write_csv(&dir.join(format!("{}.details.csv", r.bound_name)), &details)
}

/// Runs the requested checks; returns whether all passed.
pub fn verify(cfg: &RunConfig, out: &Path, check: &str) -> Result<bool> {
    let names: Vec<&str> = if check == "all" {
        CHECKS.to_vec()
    } else if CHECKS.contains(&check) {
        vec![check]
    } else {
        bail!(UnknownCheck(check.to_string()));
    };
    cfg.write_resolved(out)?;
    let mut summary = fs::File::create(out.join("summary.txt"))?;
    let mut all = true;
    for name in names {
        let r = run_check(cfg, name)?;
        write_report(out, &r)?;
        let line = r.summary();
        writeln!(summary, "{line}")?;
        println!("{line}");
        all &= r.pass;
    }
    Ok(all)
}

#[derive(Serialize)]
struct CompareRow {
    t: f64,
    linf_u: f64,
    l2_u: f64,
    linf_state: f64,
    l2_state: f64,
}

#[derive(Serialize)]
struct RefinementRow {
    n: usize,
    steps: usize,
    max_difference: f64,
    ratio: Option<f64>,
}

/// Runs both solvers and writes the difference time series; with
/// `compare.refinements > 0` also the refinement table.
pub fn compare(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.write_resolved(out)?;
    let mut refinement = Vec::new();
    for level in 0..=cfg.compare.refinements {
        let mut c = cfg.clone();
        c.grid.n <<= level;
        c.solver.steps <<= level;
        let grid = c.grid_spec()?;
        let solver = c.solver_config()?;
        let data = c.data.build(&grid, &solver.model)?;
        let cmp = verify::compare_solvers(&solver, &data.u0, &data.tau0)?;
        if level == 0 {
            let rows: Vec<CompareRow> = (0..cmp.times.len())
                .map(|m| CompareRow {
                    t: cmp.times[m],
                    linf_u: cmp.linf_u[m],
                    l2_u: cmp.l2_u[m],
                    linf_state: cmp.linf_state[m],
                    l2_state: cmp.l2_state[m],
                })
                .collect();
            write_csv(&out.join("compare.csv"), &rows)?;
            write_history(out, &cmp.history)?;
        }
        let diff = cmp.max_difference();
        let ratio = refinement
            .last()
            .map(|r: &RefinementRow| r.max_difference / diff);
        println!("n = {}, steps = {}: max difference {diff:.3e}", c.grid.n, c.solver.steps);
        refinement.push(RefinementRow {
            n: c.grid.n,
            steps: c.solver.steps,
            max_difference: diff,
            ratio,
        });
    }
    if cfg.compare.refinements > 0 {
        write_csv(&out.join("refinement.csv"), &refinement)?;
    }
    Ok(())
}
