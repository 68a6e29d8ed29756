use super::*;
use crate::data::{DataSpec, Preset};
use crate::operators::op_g_steady;

fn grid(n: usize) -> GridSpec {
    GridSpec::torus(2, n).unwrap()
}

fn shear_stress(g: &GridSpec, a: f64) -> Field {
    Field::matrix_fn(g, |x| {
        let c = a * x[0].cos();
        [[0.0, c, 0.0], [c, 0.0, 0.0], [0.0; 3]]
    })
}

/// `U` of the constant stress `a cos(x1) (e1 ⊗ e2 + e2 ⊗ e1)`.
fn shear_velocity(g: &GridSpec, a: f64, t: f64) -> Field {
    let f = -(-t).exp_m1();
    Field::vector_fn(g, |x| [0.0, -a * f * x[0].sin(), 0.0])
}

fn oldroyd(t: f64, m: usize) -> SolverConfig {
    SolverConfig::new(Model::OldroydB, t, m)
}

#[test]
fn cal_u_vanishes_on_zero_data() {
    let g = grid(16);
    let cfg = oldroyd(0.2, 4);
    let z = LagrangianState::initial(cfg.time().unwrap(), &Field::zeros(&g, Rank::Matrix), None)
        .unwrap();
    let u0 = Field::zeros(&g, Rank::Vector);
    assert!(cal_u(&cfg, &z, &u0, 0.13).unwrap().is_zero());
    assert!(lag_g(&cfg, &z, &u0, 0.2).unwrap().is_zero());
}

#[test]
fn cal_u_reduces_to_heat_flow() {
    let g = grid(16);
    let cfg = oldroyd(0.2, 4);
    let z = LagrangianState::initial(cfg.time().unwrap(), &Field::zeros(&g, Rank::Matrix), None)
        .unwrap();
    let u0 = Field::vector_fn(&g, |x| [(2.0 * x[1]).sin(), 0.0, 0.0]);
    let u = cal_u(&cfg, &z, &u0, 0.15).unwrap();
    let want = u0.scale((-4.0 * 0.15f64).exp());
    assert!(u.sub(&want).unwrap().max_abs() < 1e-13);
}

#[test]
fn frozen_identity_matches_closed_forms() {
    let g = grid(16);
    let cfg = oldroyd(0.4, 8);
    let sigma = shear_stress(&g, 0.3);
    let z = LagrangianState::initial(cfg.time().unwrap(), &sigma, None).unwrap();
    let u0 = Field::zeros(&g, Rank::Vector);
    for t in [0.1, 0.25, 0.4] {
        let u = cal_u(&cfg, &z, &u0, t).unwrap();
        assert!(u.sub(&shear_velocity(&g, 0.3, t)).unwrap().max_abs() < 1e-13);
        let gr = lag_g(&cfg, &z, &u0, t).unwrap();
        assert!(gr.sub(&op_g_steady(&sigma, t).unwrap()).unwrap().max_abs() < 1e-13);
    }
}

#[test]
fn velocity_with_zero_inertia_equals_cal_u() {
    let g = grid(16);
    let cfg = SolverConfig::new(Model::Mhd, 0.2, 4);
    let data = DataSpec::preset(Preset::SingleMode, 0.2).build(&g, &cfg.model).unwrap();
    let time = cfg.time().unwrap();
    let z = LagrangianState::initial(time, &data.tau0, Some(Path::zeros(time, &g, Rank::Vector)))
        .unwrap();
    let a = cal_u(&cfg, &z, &data.u0, 0.2).unwrap();
    let b = cal_v(&cfg, &z, &data.u0, 0.2).unwrap();
    assert!(a.sub(&b).unwrap().max_abs() < 1e-15);
    let z = initial_guess(&cfg, &data.u0, &data.tau0).unwrap();
    let v0 = cal_v(&cfg, &z, &data.u0, 0.0).unwrap();
    assert!(v0.sub(&data.u0).unwrap().max_abs() < 1e-15);
}

#[test]
fn inertia_of_frozen_velocity() {
    let g = grid(16);
    let cfg = SolverConfig::new(Model::Mhd, 0.2, 4);
    let time = cfg.time().unwrap();
    let u0 = Field::zeros(&g, Rank::Vector);
    // A shear has div(v ⊗ v) = 0.
    let v = Path::constant(time, &Field::vector_fn(&g, |x| [0.0, 0.5 * x[0].sin(), 0.0]));
    let z = LagrangianState::initial(time, &Field::zeros(&g, Rank::Vector), Some(v)).unwrap();
    assert!(cal_v(&cfg, &z, &u0, 0.2).unwrap().max_abs() < 1e-14);
    // v = a (sin x2, sin 2x1): div(v ⊗ v) = a^2/2 [sin(2x1 + x2) (1, 2) + sin(2x1 - x2) (1, -2)],
    // whose solenoidal part is a^2/2 [sin(2x1 + x2) (-3, 6) + sin(2x1 - x2) (-3, -6)] / 5.
    let a = 0.5;
    let v = Path::constant(time, &Field::vector_fn(&g, |x| [a * x[1].sin(), a * (2.0 * x[0]).sin(), 0.0]));
    let z = LagrangianState::initial(time, &Field::zeros(&g, Rank::Vector), Some(v)).unwrap();
    let t = 0.2;
    let got = cal_v(&cfg, &z, &u0, t).unwrap();
    let f = -(-5.0 * t).exp_m1() / 5.0 * a * a / 10.0;
    let want = Field::vector_fn(&g, |x| {
        let (p, q) = ((2.0 * x[0] + x[1]).sin(), (2.0 * x[0] - x[1]).sin());
        [-f * (-3.0 * p - 3.0 * q), -f * (6.0 * p - 6.0 * q), 0.0]
    });
    assert!(got.sub(&want).unwrap().max_abs() < 1e-13);
}

#[test]
fn trivial_mhd_state_is_exact_fixed_point() {
    let g = grid(16);
    let cfg = SolverConfig::new(Model::Mhd, 0.2, 4);
    let zero = Field::zeros(&g, Rank::Vector);
    let z = initial_guess(&cfg, &zero, &zero).unwrap();
    let s = apply_s(&cfg, &z, &zero, &zero).unwrap();
    assert!(s.chi().max_abs() == 0.0 && s.tau().max_abs() == 0.0);
    assert!(s.v().unwrap().max_abs() == 0.0);
    let sol = picard_solve(&cfg, &zero, &zero).unwrap();
    assert_eq!(sol.history.len(), 1);
    assert_eq!(sol.history[0].distance, 0.0);
}

#[test]
fn first_iterate_integrates_closed_form() {
    let g = grid(16);
    let (t_final, m) = (0.4, 16);
    let mut cfg = oldroyd(t_final, m);
    cfg.interp = InterpKind::Trig;
    let sigma = shear_stress(&g, 0.3);
    let u0 = Field::zeros(&g, Rank::Vector);
    let z = initial_guess(&cfg, &u0, &sigma).unwrap();
    let s = apply_s(&cfg, &z, &u0, &sigma).unwrap();
    let time = cfg.time().unwrap();
    let h = time.dt();
    let mut acc = Field::zeros(&g, Rank::Vector);
    for k in 0..m {
        let step = shear_velocity(&g, 0.3, time.node(k)).add(&shear_velocity(&g, 0.3, time.node(k + 1))).unwrap();
        acc = acc.axpy(0.5 * h, &step).unwrap();
        assert!(s.chi().frame(k + 1).sub(&acc).unwrap().max_abs() < 1e-13);
    }
    // Against the exact integral t - (1 - e^{-t}): trapezoid error O(h^2).
    let exact = t_final + (-t_final).exp_m1();
    let want = Field::vector_fn(&g, |x| [0.0, -0.3 * exact * x[0].sin(), 0.0]);
    assert!(s.chi().last().sub(&want).unwrap().max_abs() < 0.3 * h * h * t_final);
}

fn smooth_oldroyd_data(g: &GridSpec) -> (Field, Field) {
    let u0 = Field::vector_fn(g, |x| [0.2 * x[1].sin(), 0.1 * x[0].cos(), 0.0]);
    let tau0 = Field::matrix_fn(g, |x| {
        let a = 0.2 * x[0].cos();
        let b = 0.1 * (x[0] + x[1]).sin();
        [[a, b, 0.0], [b, -a, 0.0], [0.0; 3]]
    });
    (u0, tau0)
}

#[test]
fn picard_contracts_and_stays_incompressible() {
    let g = grid(16);
    let mut cfg = oldroyd(0.1, 8);
    cfg.tol_fp = 1e-10;
    let (u0, tau0) = smooth_oldroyd_data(&g);
    let sol = picard_solve(&cfg, &u0, &tau0).unwrap();
    for rec in &sol.history[1..] {
        assert!(rec.ratio.unwrap() <= 0.5, "ratio {:?}", rec.ratio);
    }
    for u in sol.u().frames() {
        assert!(divergence(u).unwrap().max_abs() < 1e-10);
    }
    let again = apply_s(&cfg, &sol.state, &u0, &tau0).unwrap();
    let residual = again.distance(&sol.state, &cfg.params, cfg.delta).unwrap();
    assert!(residual < cfg.tol_fp, "residual {residual:e}");
    assert!(sol.history.iter().all(|r| r.wall_time == 0.0));
}

#[test]
fn label_gradient_identity() {
    let g = grid(32);
    let cfg = oldroyd(0.2, 8);
    let (u0, tau0) = smooth_oldroyd_data(&g);
    let mut z = initial_guess(&cfg, &u0, &tau0).unwrap();
    for _ in 0..2 {
        z = apply_s(&cfg, &z, &u0, &tau0).unwrap();
    }
    let (_, ev) = apply_s_with(&cfg, &z, &u0, &tau0).unwrap();
    for m in [4, 8] {
        let lhs = gradient(ev.velocity.frame(m)).unwrap();
        let rhs = crate::grid::matmul_raw(ev.g.frame(m), &z.flow_map(m).grad_label().unwrap());
        let err = lhs.sub(&rhs).unwrap().max_abs();
        assert!(err < 1e-6 * rhs.max_abs(), "frame {m}: {err:e}");
    }
}

#[test]
fn navier_stokes_velocity_matches_map_derivative() {
    let g = grid(16);
    let mut errs = Vec::new();
    for m in [8, 16] {
        let mut cfg = SolverConfig::new(Model::Mhd, 0.2, m);
        cfg.tol_fp = 1e-11;
        let data = DataSpec::preset(Preset::SingleMode, 0.3).build(&g, &cfg.model).unwrap();
        let u0 = Field::vector_fn(&g, |x| [0.3 * x[1].sin(), 0.2 * x[0].sin(), 0.0]);
        let sol = picard_solve(&cfg, &u0, &data.tau0).unwrap();
        let chi = sol.state.chi();
        let v = sol.state.v().unwrap();
        let h = chi.time().dt();
        let mut worst = 0.0_f64;
        for k in 0..m {
            let dx = chi.frame(k + 1).sub(chi.frame(k)).unwrap().scale(1.0 / h);
            let t_half = (k as f64 + 0.5) * h;
            let v_half = cal_v(&cfg, &sol.state, &u0, t_half).unwrap();
            worst = worst.max(dx.sub(&v_half).unwrap().max_abs());
        }
        // By construction the quotient is also the frame mean of v.
        let mid = v.frame(0).add(v.frame(1)).unwrap().scale(0.5);
        let dx = chi.frame(1).scale(1.0 / h);
        assert!(dx.sub(&mid).unwrap().max_abs() < 1e-14);
        errs.push(worst);
    }
    assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
}

#[test]
fn large_time_does_not_converge() {
    let g = grid(16);
    let mut cfg = oldroyd(3.0, 8);
    cfg.max_iter = 8;
    let (u0, tau0) = smooth_oldroyd_data(&g);
    let u0 = u0.scale(20.0);
    let tau0 = tau0.scale(20.0);
    match picard_solve(&cfg, &u0, &tau0) {
        Err(Error::NonConvergence { history }) => assert!(!history.is_empty()),
        Err(Error::InvariantViolation { .. }) | Err(Error::Growth { .. }) => {}
        other => panic!("expected failure, got {:?}", other.map(|s| s.history)),
    }
}

#[test]
fn rejects_divergent_initial_velocity() {
    let g = grid(16);
    let cfg = oldroyd(0.1, 4);
    let u0 = Field::vector_fn(&g, |x| [x[0].sin(), 0.0, 0.0]);
    let tau0 = Field::zeros(&g, Rank::Matrix);
    assert!(matches!(
        picard_solve(&cfg, &u0, &tau0),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn linearization_trivial_cases() {
    let g = grid(16);
    let cfg = oldroyd(0.2, 4);
    let (u0, tau0) = smooth_oldroyd_data(&g);
    let z = apply_s(&cfg, &initial_guess(&cfg, &u0, &tau0).unwrap(), &u0, &tau0).unwrap();
    let zero_dir = Direction::zeros(&z);
    let zero_u = Field::zeros(&g, Rank::Vector);
    let lin = linearized_maps(&cfg, &z, &zero_dir, &u0, &zero_u, 0.13).unwrap();
    assert!(lin.du.max_abs() < 1e-15 && lin.dg.max_abs() < 1e-15 && lin.dtau.max_abs() < 1e-15);
    let du0 = Field::vector_fn(&g, |x| [0.0, (2.0 * x[0]).cos(), 0.0]);
    let lin = linearized_maps(&cfg, &z, &zero_dir, &u0, &du0, 0.0).unwrap();
    assert_eq!(lin.du.component(1), du0.component(1));
    assert_eq!(lin.du.component(0), du0.component(0));
}

fn fd_check(cfg: &SolverConfig, z: &LagrangianState, dir: &Direction, u0: &Field, du0: &Field, t: f64) {
    let eps = 1e-4;
    let lin = linearized_maps(cfg, z, dir, u0, du0, t).unwrap();
    let zp = dir.displace(z, eps).unwrap();
    let zm = dir.displace(z, -eps).unwrap();
    let up = u0.axpy(eps, du0).unwrap();
    let um = u0.axpy(-eps, du0).unwrap();
    let fd = |a: Field, b: Field| a.sub(&b).unwrap().scale(0.5 / eps);
    let rel = |a: &Field, b: &Field| a.sub(b).unwrap().max_abs() / b.max_abs();
    let du = fd(cal_u(cfg, &zp, &up, t).unwrap(), cal_u(cfg, &zm, &um, t).unwrap());
    assert!(rel(&lin.du, &du) < 1e-3, "dU {:e}", rel(&lin.du, &du));
    let dg = fd(lag_g(cfg, &zp, &up, t).unwrap(), lag_g(cfg, &zm, &um, t).unwrap());
    assert!(rel(&lin.dg, &dg) < 1e-3, "dg {:e}", rel(&lin.dg, &dg));
    if let Some(dv) = &lin.dv {
        let fdv = fd(cal_v(cfg, &zp, &up, t).unwrap(), cal_v(cfg, &zm, &um, t).unwrap());
        assert!(rel(dv, &fdv) < 1e-3, "dV {:e}", rel(dv, &fdv));
    }
}

fn direction_for(z: &LagrangianState, rank: Rank) -> Direction {
    let g = *z.grid();
    let time = *z.time();
    let chi = Path::from_fn(time, |_, t| {
        Field::vector_fn(&g, |x| [0.05 * t * x[1].cos(), 0.04 * t * (x[0] + x[1]).sin(), 0.0])
    })
    .unwrap();
    let tau = Path::from_fn(time, |_, t| match rank {
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

#[test]
fn linearization_matches_finite_differences_stokes() {
    let g = grid(32);
    let cfg = oldroyd(0.2, 8);
    let (u0, tau0) = smooth_oldroyd_data(&g);
    let z = apply_s(&cfg, &initial_guess(&cfg, &u0, &tau0).unwrap(), &u0, &tau0).unwrap();
    let dir = direction_for(&z, Rank::Matrix);
    let du0 = Field::vector_fn(&g, |x| [0.0, 0.1 * (2.0 * x[0]).cos(), 0.0]);
    fd_check(&cfg, &z, &dir, &u0, &du0, 0.15);
}

#[test]
fn linearization_matches_finite_differences_navier_stokes() {
    let g = grid(32);
    let cfg = SolverConfig::new(Model::Mhd, 0.2, 8);
    let data = DataSpec::preset(Preset::SingleMode, 0.3).build(&g, &cfg.model).unwrap();
    let z0 = initial_guess(&cfg, &data.u0, &data.tau0).unwrap();
    let z = apply_s(&cfg, &z0, &data.u0, &data.tau0).unwrap();
    let dir = direction_for(&z, Rank::Vector);
    let du0 = Field::vector_fn(&g, |x| [0.1 * x[1].cos(), 0.0, 0.0]);
    fd_check(&cfg, &z, &dir, &data.u0, &du0, 0.2);
}
