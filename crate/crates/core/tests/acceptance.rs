//! Acceptance suite: nine criteria, one pass/fail line each.
//!
//! Runs without the libtest harness so the lines are always printed; the
//! process exits nonzero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lagflow::data::{rough_field, DataSpec, Preset};
use lagflow::dynamics::Model;
use lagflow::grid::{divergence, gradient, Field, GridSpec, Path, Rank, Stencil, TimeGrid};
use lagflow::norms::NormParams;
use lagflow::operators::{leray_h, op_g, op_g_steady, op_u, Duhamel, Multiplier};
use lagflow::solver::{
    apply_s, cal_u, cal_v, initial_guess, lag_g, linearized_maps, picard_solve, Direction,
    LagrangianState, SolverConfig,
};
use lagflow::verify::{
    check_chord_arc, check_comm_u_bound, check_contraction, check_lipschitz_data,
    check_steady_comm_bound, check_u_bound, check_uniqueness, compare_solvers, shear_chord_arc,
    ContractionInputs, Perturbation, SteadyCommInputs,
};

type Outcome = Result<String, String>;

fn grid(n: usize) -> GridSpec {
    GridSpec::torus(2, n).unwrap()
}

fn unit(f: Field) -> Field {
    let m = f.max_abs();
    f.scale(1.0 / m)
}

fn require(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn shear_stress(g: &GridSpec, a: f64) -> Field {
    Field::matrix_fn(g, |x| {
        let c = a * x[0].cos();
        [[0.0, c, 0.0], [c, 0.0, 0.0], [0.0; 3]]
    })
}

fn operator_exactness() -> Outcome {
    let g = grid(64);
    let phi = rough_field(&g, Rank::Scalar, 1.5, 1, 0, Some(10.0)).unwrap();
    let grad = unit(gradient(&phi).unwrap());
    let kill = leray_h(&grad).unwrap().max_abs();
    let w = unit(leray_h(&rough_field(&g, Rank::Vector, 1.5, 1, 1, Some(10.0)).unwrap()).unwrap());
    let fix = leray_h(&w).unwrap().sub(&w).unwrap().max_abs();
    let v = unit(rough_field(&g, Rank::Vector, 1.5, 1, 2, Some(10.0)).unwrap());
    let hv = leray_h(&v).unwrap();
    let idem = leray_h(&hv).unwrap().sub(&hv).unwrap().max_abs();
    let s = unit(rough_field(&g, Rank::Matrix, 1.5, 1, 3, Some(10.0)).unwrap().symmetrized().unwrap());
    let sigma = Path::from_fn(TimeGrid::new(0.2, 8).unwrap(), |_, t| s.scale(1.0 + t)).unwrap();
    let mut div = 0.0_f64;
    for t in [0.05, 0.1, 0.2] {
        div = div.max(divergence(&op_u(&sigma, t).unwrap()).unwrap().max_abs());
    }
    let at0 = op_u(&sigma, 0.0).unwrap().max_abs();
    let worst = kill.max(fix).max(idem).max(div).max(at0);
    require(
        worst <= 1e-12,
        format!("H grad {kill:.1e}, H w - w {fix:.1e}, HH - H {idem:.1e}, div U {div:.1e}, U(0) {at0:.1e}"),
    )
}

fn closed_forms() -> Outcome {
    // Constant stress a cos(x1)(e1 e2 + e2 e1): H div = (0, -a sin x1), so
    // U = (1 - e^{-t})(0, -a sin x1) and G_21 = -(1 - e^{-t}) a cos x1.
    let g = grid(32);
    let a = 0.7;
    let s = shear_stress(&g, a);
    let sigma = Path::constant(TimeGrid::new(0.5, 10).unwrap(), &s);
    let mut err = 0.0_f64;
    for t in [0.1_f64, 0.25, 0.5] {
        let f = -(-t).exp_m1();
        let u = Field::vector_fn(&g, |x| [0.0, -a * f * x[0].sin(), 0.0]);
        let gr = Field::matrix_fn(&g, |x| [[0.0; 3], [-a * f * x[0].cos(), 0.0, 0.0], [0.0; 3]]);
        err = err.max(op_u(&sigma, t).unwrap().sub(&u).unwrap().max_abs());
        err = err.max(op_g(&sigma, t).unwrap().sub(&gr).unwrap().max_abs());
        err = err.max(op_g_steady(&s, t).unwrap().sub(&gr).unwrap().max_abs());
    }
    // Step halving against the steady closed form, modulated in time:
    // sigma(t) = cos(w t) s gives G(t) = k^2 int_0^t e^{-k^2 (t - r)} cos(w r) dr G_inf.
    let (t, w, k2): (f64, f64, f64) = (0.5, 6.0, 1.0);
    let g_inf = op_g_steady(&s, 60.0).unwrap();
    let exact = g_inf.scale(k2 * (k2 * (w * t).cos() + w * (w * t).sin() - k2 * (-k2 * t).exp()) / (k2 * k2 + w * w));
    let mut errs = Vec::new();
    for m in [8usize, 16, 32] {
        let path = Path::from_fn(TimeGrid::new(t, m).unwrap(), |_, r| s.scale((w * r).cos())).unwrap();
        errs.push(op_g(&path, t).unwrap().sub(&exact).unwrap().max_abs());
    }
    let ratios: Vec<f64> = errs.windows(2).map(|e| e[0] / e[1]).collect();
    let ok = err <= 1e-8 && ratios.iter().all(|r| (3.5..=4.5).contains(r));
    require(ok, format!("closed-form error {err:.1e}, halving errors {errs:?}, ratios {ratios:.3?}"))
}

fn steady_commutator() -> Outcome {
    let eta = |g: &GridSpec| Field::vector_fn(g, |x| [0.5 * x[1].sin(), 0.3 * x[0].cos(), 0.0]);
    let sigma = |g: &GridSpec| rough_field(g, Rank::Scalar, 0.5, 0, 0, None).unwrap();
    let inputs = SteadyCommInputs {
        eta: &eta,
        sigma: &sigma,
        multiplier: Multiplier::riesz_product(0, 1),
        grids: vec![grid(64), grid(128)],
    };
    // The envelope fields lie in C^a only for a < 0.5; the commutator norm is
    // sampled at a = 0.3, strictly inside that range.
    let params = NormParams { alpha: 0.3, ..NormParams::default() };
    let r = check_steady_comm_bound(&inputs, &params).unwrap();
    require(
        r.pass,
        format!(
            "C^alpha change {:.3}, term sup growth {:.3}, C = {:.3e}, n=128 measured/bound {:.3}",
            r.detail("commutator_alpha_change").unwrap(),
            r.detail("term_sup_growth").unwrap(),
            r.fitted_constant,
            r.samples[1].measured / r.samples[1].bound
        ),
    )
}

fn time_scalings() -> Outcome {
    let g = grid(32);
    let base = rough_field(&g, Rank::Matrix, 0.5, 2, 0, None).unwrap().symmetrized().unwrap();
    let sigma = |t: f64| base.scale(1.0 + t);
    let eta0 = Field::vector_fn(&g, |x| [0.3 * x[1].sin(), 0.2 * (x[0] + x[1]).cos(), 0.0]);
    let eta = |t: f64| eta0.scale(1.0 + 2.0 * t);
    let times = [0.2, 0.1, 0.05, 0.025];
    let p = NormParams::default();
    let d = Duhamel::default();
    let u = check_u_bound(&sigma, &times, 16, &p, &d).unwrap();
    let cu = check_comm_u_bound(&eta, &sigma, &times, 16, &p, &d).unwrap();
    let slack = |r: &lagflow::verify::BoundCheckReport| {
        r.samples.iter().map(|s| s.measured / s.bound).fold(0.0, f64::max)
    };
    require(
        u.pass && cu.pass,
        format!("{} max measured/bound {:.3}; {} max measured/bound {:.3}", u.summary(), slack(&u), cu.summary(), slack(&cu)),
    )
}

fn contraction() -> Outcome {
    let g = grid(32);
    let mut lines = Vec::new();
    let mut ok = true;
    for model in [Model::OldroydB, Model::Mhd] {
        let config = SolverConfig::new(model.clone(), 0.2, 16);
        let d = DataSpec::preset(Preset::SingleMode, 0.1).build(&g, &config.model).unwrap();
        let r = check_contraction(&ContractionInputs {
            config,
            u0: d.u0,
            tau0: d.tau0,
            times: vec![0.2, 0.1, 0.05, 0.025],
            seed: 7,
            size: 0.05,
        })
        .unwrap();
        ok &= r.pass;
        let ratios: Vec<f64> = r.samples.iter().map(|s| s.measured).collect();
        lines.push(format!("{}: ratios {:?}", model.name(), ratios));
    }
    require(ok, lines.join("; "))
}

fn picard_and_cross_validation() -> Outcome {
    let mut diffs = Vec::new();
    let mut residual = 0.0_f64;
    for n in [32usize, 64] {
        let g = grid(n);
        let mut cfg = SolverConfig::new(Model::OldroydB, 0.1, n);
        cfg.tol_fp = 1e-9;
        let d = DataSpec::preset(Preset::SingleMode, 0.1).build(&g, &cfg.model).unwrap();
        let c = compare_solvers(&cfg, &d.u0, &d.tau0).unwrap();
        residual = residual.max(c.residual);
        diffs.push(c.max_difference());
    }
    let ratio = diffs[0] / diffs[1];
    require(
        residual < 1e-8 && diffs[1] <= 1e-3 && ratio >= 3.0,
        format!("residual {residual:.1e}, L-inf difference (32, 64) = {diffs:?}, ratio {ratio:.2}"),
    )
}

fn lipschitz_and_uniqueness() -> Outcome {
    let g = grid(32);
    let mut lines = Vec::new();
    let mut ok = true;
    for model in [Model::OldroydB, Model::Mhd] {
        let mut cfg = SolverConfig::new(model.clone(), 0.1, 16);
        let d = DataSpec::preset(Preset::SingleMode, 0.1).build(&g, &cfg.model).unwrap();
        let pert = Perturbation {
            du0: DataSpec::preset(Preset::TaylorGreen, 1.0).build(&g, &cfg.model).unwrap().u0,
            dtau0: d.tau0.scale(10.0),
        };
        cfg.tol_fp = 1e-12;
        cfg.max_iter = 60;
        let lip = check_lipschitz_data(&cfg, &d.u0, &d.tau0, &pert, &[1e-2, 5e-3]).unwrap();
        cfg.tol_fp = 1e-9;
        let uni = check_uniqueness(&cfg, &d.u0, &d.tau0, 3).unwrap();
        ok &= lip.pass && uni.pass;
        lines.push(format!(
            "{}: eps ratio {:.4}, C(T) {:.3}, guess distance {:.1e}",
            model.name(),
            lip.detail("ratio_1e-2").unwrap_or(f64::NAN),
            lip.fitted_constant,
            uni.samples[0].measured
        ));
    }
    require(ok, lines.join("; "))
}

fn probe_direction(z: &LagrangianState) -> Direction {
    let g = *z.grid();
    let time = *z.time();
    let chi = Path::from_fn(time, |_, t| {
        Field::vector_fn(&g, |x| [0.05 * t * x[1].cos(), 0.04 * t * (x[0] + x[1]).sin(), 0.0])
    })
    .unwrap();
    let tau = Path::from_fn(time, |_, t| match z.tau().rank() {
        Rank::Matrix => Field::matrix_fn(&g, |x| {
            let c = 0.1 * (1.0 + t) * x[1].sin();
            [[c, 0.05 * x[0].cos(), 0.0], [0.05 * x[0].cos(), -c, 0.0], [0.0; 3]]
        }),
        _ => Field::vector_fn(&g, |x| [0.1 * (1.0 + t) * x[1].sin(), 0.05 * x[0].cos(), 0.0]),
    })
    .unwrap();
    let v = z.v().map(|_| {
        Path::constant(time, &Field::vector_fn(&g, |x| [0.1 * (2.0 * x[1]).cos(), 0.1 * x[0].sin(), 0.0]))
    });
    Direction { chi, tau, v }
}

/// Worst relative error of the analytic derivatives against central differences.
fn linearization_error(model: Model, amplitude: f64, t: f64) -> (f64, f64) {
    let g = grid(32);
    let cfg = SolverConfig::new(model, 0.2, 8);
    let d = DataSpec::preset(Preset::SingleMode, amplitude).build(&g, &cfg.model).unwrap();
    let z = apply_s(&cfg, &initial_guess(&cfg, &d.u0, &d.tau0).unwrap(), &d.u0, &d.tau0).unwrap();
    let dir = probe_direction(&z);
    let du0 = Field::vector_fn(&g, |x| [0.1 * x[1].cos(), 0.1 * (2.0 * x[0]).cos(), 0.0]);
    let eps = 1e-4;
    let lin = linearized_maps(&cfg, &z, &dir, &d.u0, &du0, t).unwrap();
    let (zp, zm) = (dir.displace(&z, eps).unwrap(), dir.displace(&z, -eps).unwrap());
    let (up, um) = (d.u0.axpy(eps, &du0).unwrap(), d.u0.axpy(-eps, &du0).unwrap());
    let fd = |a: Field, b: Field| a.sub(&b).unwrap().scale(0.5 / eps);
    let rel = |a: &Field, b: &Field| a.sub(b).unwrap().max_abs() / b.max_abs();
    let rhs = |z: &LagrangianState, u: &Field| {
        cfg.model.eval_field(&lag_g(&cfg, z, u, t).unwrap(), &z.tau().at(t).unwrap()).unwrap()
    };
    let mut worst = rel(&lin.du, &fd(cal_u(&cfg, &zp, &up, t).unwrap(), cal_u(&cfg, &zm, &um, t).unwrap()));
    worst = worst.max(rel(&lin.dg, &fd(lag_g(&cfg, &zp, &up, t).unwrap(), lag_g(&cfg, &zm, &um, t).unwrap())));
    worst = worst.max(rel(&lin.dtau, &fd(rhs(&zp, &up), rhs(&zm, &um))));
    // Label gradient of the velocity that moves the particles: V on the
    // inertial branch, U otherwise.
    let grad_u = |z: &LagrangianState, u: &Field| {
        let vel = if lin.dv.is_some() { cal_v(&cfg, z, u, t) } else { cal_u(&cfg, z, u, t) };
        gradient(&vel.unwrap()).unwrap()
    };
    worst = worst.max(rel(&lin.grad_dvelocity, &fd(grad_u(&zp, &up), grad_u(&zm, &um))));
    if let Some(dv) = &lin.dv {
        worst = worst.max(rel(dv, &fd(cal_v(&cfg, &zp, &up, t).unwrap(), cal_v(&cfg, &zm, &um, t).unwrap())));
    }
    let at0 = linearized_maps(&cfg, &z, &dir, &d.u0, &du0, 0.0).unwrap();
    (worst, at0.du.sub(&du0).unwrap().max_abs())
}

fn linearization() -> Outcome {
    let (stokes, s0) = linearization_error(Model::OldroydB, 0.2, 0.15);
    let (ns, n0) = linearization_error(Model::Mhd, 0.3, 0.2);
    require(
        stokes < 1e-3 && ns < 1e-3 && s0 == 0.0 && n0 == 0.0,
        format!("relative FD error Oldroyd-B {stokes:.1e}, MHD {ns:.1e}; |U'(0) - u0'| = {:.1e}", s0.max(n0)),
    )
}

fn chord_arc() -> Outcome {
    let g = grid(32);
    let mut lines = Vec::new();
    let mut ok = true;
    for model in [Model::OldroydB, Model::Mhd] {
        let cfg = SolverConfig::new(model.clone(), 0.1, 16);
        let d = DataSpec::preset(Preset::RoughEnvelope, 0.1).build(&g, &cfg.model).unwrap();
        let sol = picard_solve(&cfg, &d.u0, &d.tau0).unwrap();
        let r = check_chord_arc(&sol, Stencil::Dyadic, 0.02).unwrap();
        ok &= r.pass;
        lines.push(format!("{}: lambda(T) {:.4}", model.name(), r.detail("lambda_final").unwrap()));
    }
    let shear = shear_chord_arc(&g, 0.8, TimeGrid::new(0.5, 16).unwrap(), Stencil::Dyadic, 0.02).unwrap();
    let dev = shear.detail("lambda_deviation").unwrap();
    ok &= shear.pass && dev < 1e-12;
    lines.push(format!("shear |lambda - e^(ct)| {dev:.1e}"));
    require(ok, lines.join("; "))
}

struct Criterion {
    number: usize,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { number: 1, name: "operator exactness", budget: Duration::from_secs(1), run: operator_exactness },
        Criterion { number: 2, name: "closed-form oracles", budget: Duration::from_secs(10), run: closed_forms },
        Criterion { number: 3, name: "steady commutator", budget: Duration::from_secs(60), run: steady_commutator },
        Criterion { number: 4, name: "time scalings", budget: Duration::from_secs(120), run: time_scalings },
        Criterion { number: 5, name: "contraction", budget: Duration::from_secs(300), run: contraction },
        Criterion { number: 6, name: "Picard and cross-validation", budget: Duration::from_secs(300), run: picard_and_cross_validation },
        Criterion { number: 7, name: "Lipschitz data and uniqueness", budget: Duration::from_secs(300), run: lipschitz_and_uniqueness },
        Criterion { number: 8, name: "linearization", budget: Duration::from_secs(120), run: linearization },
        Criterion { number: 9, name: "chord-arc", budget: Duration::from_secs(60), run: chord_arc },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (ok, msg) = match outcome {
            Ok(m) => (elapsed <= c.budget, m),
            Err(m) => (false, m),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {} {}: {} [{:.2}s of {}s] {}",
            c.number,
            c.name,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            msg
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
