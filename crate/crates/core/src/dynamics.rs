//! Constitutive laws `d tau / dt = F(g, tau)` along particle paths and the
//! stress each state contributes to the momentum balance.
//!
//! Values are passed as flat row-major slices: `g` has `d * d` entries and
//! `tau` has `d` (vector state) or `d * d` (matrix state) entries.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grid::{dealias, Field, Path, Rank, TimeGrid};
use crate::{Error, Result};

/// A user-supplied constitutive law with its exact derivatives.
pub trait CustomLaw: Send + Sync {
    fn name(&self) -> &str;

    /// Rank of the transported state `tau`.
    fn state_rank(&self) -> Rank;

    /// `out = F(g, tau)`.
    fn eval(&self, d: usize, g: &[f64], tau: &[f64], out: &mut [f64]);

    /// `out = D1F(g, tau) dg + D2F(g, tau) dtau`.
    fn eval_d(&self, d: usize, g: &[f64], tau: &[f64], dg: &[f64], dtau: &[f64], out: &mut [f64]);

    /// Upper bound of `|F(g, tau)|` over `|g| <= g_sup`, `|tau| <= tau_sup`
    /// (Frobenius/Euclidean norms).
    fn growth_envelope(&self, g_sup: f64, tau_sup: f64) -> f64;

    /// Momentum stress `S(tau)`; the default is `tau` itself (matrix states only).
    fn stress(&self, d: usize, tau: &[f64], out: &mut [f64]) {
        let _ = d;
        out.copy_from_slice(tau);
    }

    /// `DS(tau) dtau`.
    fn stress_d(&self, d: usize, tau: &[f64], dtau: &[f64], out: &mut [f64]) {
        let _ = (d, tau);
        out.copy_from_slice(dtau);
    }
}

/// Catalogue of constitutive laws.
#[derive(Clone)]
pub enum Model {
    /// `F(g, tau) = g tau + tau g^T - tau + g + g^T`, stress `tau`.
    OldroydB,
    /// Ideal MHD: state `b`, `F(g, b) = g b`, stress `b ⊗ b`.
    Mhd,
    Custom(Arc<dyn CustomLaw>),
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Serializable selector of the built-in laws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    OldroydB,
    Mhd,
}

impl From<ModelKind> for Model {
    fn from(k: ModelKind) -> Self {
        match k {
            ModelKind::OldroydB => Model::OldroydB,
            ModelKind::Mhd => Model::Mhd,
        }
    }
}

/// `out = a b` for `d x d` row-major matrices.
fn mm(d: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += a[i * d + k] * b[k * d + j];
            }
            out[i * d + j] = s;
        }
    }
}

/// `out = a b^T`.
fn mmt(d: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += a[i * d + k] * b[j * d + k];
            }
            out[i * d + j] = s;
        }
    }
}

fn mv(d: usize, m: &[f64], v: &[f64], out: &mut [f64]) {
    for i in 0..d {
        out[i] = (0..d).map(|j| m[i * d + j] * v[j]).sum();
    }
}

impl Model {
    pub fn name(&self) -> &str {
        match self {
            Model::OldroydB => "oldroyd-b",
            Model::Mhd => "mhd",
            Model::Custom(c) => c.name(),
        }
    }

    pub fn state_rank(&self) -> Rank {
        match self {
            Model::OldroydB => Rank::Matrix,
            Model::Mhd => Rank::Vector,
            Model::Custom(c) => c.state_rank(),
        }
    }

    pub fn state_len(&self, d: usize) -> usize {
        self.state_rank().components(d)
    }

    fn check(&self, d: usize, g: &[f64], tau: &[f64]) -> Result<()> {
        if g.len() != d * d {
            return Err(Error::RankMismatch {
                expected: format!("{} gradient entries", d * d),
                found: format!("{}", g.len()),
            });
        }
        if tau.len() != self.state_len(d) {
            return Err(Error::RankMismatch {
                expected: format!("{} state entries", self.state_len(d)),
                found: format!("{}", tau.len()),
            });
        }
        Ok(())
    }

    /// Unchecked evaluation into a buffer of the state length.
    pub(crate) fn eval_into(&self, d: usize, g: &[f64], tau: &[f64], out: &mut [f64]) {
        match self {
            Model::OldroydB => {
                let mut p = [0.0; 9];
                let mut q = [0.0; 9];
                mm(d, g, tau, &mut p);
                mmt(d, tau, g, &mut q);
                // Grouped so that symmetric tau gives an exactly symmetric result.
                for i in 0..d {
                    for j in 0..d {
                        let c = i * d + j;
                        out[c] = (p[c] + q[c]) - tau[c] + (g[c] + g[j * d + i]);
                    }
                }
            }
            Model::Mhd => mv(d, g, tau, out),
            Model::Custom(c) => c.eval(d, g, tau, out),
        }
    }

    pub(crate) fn eval_d_into(
        &self,
        d: usize,
        g: &[f64],
        tau: &[f64],
        dg: &[f64],
        dtau: &[f64],
        out: &mut [f64],
    ) {
        match self {
            Model::OldroydB => {
                let mut a = [0.0; 9];
                let mut b = [0.0; 9];
                let mut c = [0.0; 9];
                let mut e = [0.0; 9];
                mm(d, dg, tau, &mut a);
                mmt(d, tau, dg, &mut b);
                mm(d, g, dtau, &mut c);
                mmt(d, dtau, g, &mut e);
                for i in 0..d {
                    for j in 0..d {
                        let k = i * d + j;
                        out[k] = (a[k] + b[k]) + (c[k] + e[k]) - dtau[k] + (dg[k] + dg[j * d + i]);
                    }
                }
            }
            Model::Mhd => {
                let mut a = [0.0; 3];
                let mut b = [0.0; 3];
                mv(d, dg, tau, &mut a);
                mv(d, g, dtau, &mut b);
                for i in 0..d {
                    out[i] = a[i] + b[i];
                }
            }
            Model::Custom(c) => c.eval_d(d, g, tau, dg, dtau, out),
        }
    }

    /// `F(g, tau)` at one point.
    pub fn eval_f(&self, d: usize, g: &[f64], tau: &[f64]) -> Result<Vec<f64>> {
        self.check(d, g, tau)?;
        let mut out = vec![0.0; self.state_len(d)];
        self.eval_into(d, g, tau, &mut out);
        Ok(out)
    }

    /// `D1F(g, tau) dg + D2F(g, tau) dtau` at one point.
    pub fn eval_df(
        &self,
        d: usize,
        g: &[f64],
        tau: &[f64],
        dg: &[f64],
        dtau: &[f64],
    ) -> Result<Vec<f64>> {
        self.check(d, g, tau)?;
        self.check(d, dg, dtau)?;
        let mut out = vec![0.0; self.state_len(d)];
        self.eval_d_into(d, g, tau, dg, dtau, &mut out);
        Ok(out)
    }

    /// Upper bound of `|F|` over the box `|g| <= g_sup`, `|tau| <= tau_sup`.
    pub fn growth_envelope(&self, g_sup: f64, tau_sup: f64) -> f64 {
        match self {
            Model::OldroydB => 2.0 * g_sup * tau_sup + tau_sup + 2.0 * g_sup,
            Model::Mhd => g_sup * tau_sup,
            Model::Custom(c) => c.growth_envelope(g_sup, tau_sup),
        }
    }

    pub(crate) fn stress_into(&self, d: usize, tau: &[f64], out: &mut [f64]) {
        match self {
            Model::OldroydB => out.copy_from_slice(tau),
            Model::Mhd => {
                for i in 0..d {
                    for j in 0..d {
                        out[i * d + j] = tau[i] * tau[j];
                    }
                }
            }
            Model::Custom(c) => c.stress(d, tau, out),
        }
    }

    pub(crate) fn stress_d_into(&self, d: usize, tau: &[f64], dtau: &[f64], out: &mut [f64]) {
        match self {
            Model::OldroydB => out.copy_from_slice(dtau),
            Model::Mhd => {
                for i in 0..d {
                    for j in 0..d {
                        out[i * d + j] = tau[i] * dtau[j] + dtau[i] * tau[j];
                    }
                }
            }
            Model::Custom(c) => c.stress_d(d, tau, dtau, out),
        }
    }

    /// Whether the momentum stress is a nonlinear (product) function of the state.
    fn stress_is_product(&self) -> bool {
        !matches!(self, Model::OldroydB)
    }

    fn check_state(&self, tau: &Field) -> Result<()> {
        if tau.rank() != self.state_rank() {
            return Err(Error::RankMismatch {
                expected: self.state_rank().to_string(),
                found: tau.rank().to_string(),
            });
        }
        Ok(())
    }

    /// Momentum stress field `S(tau)`. Nonlinear stresses are pointwise
    /// products and are dealiased.
    pub fn stress(&self, tau: &Field) -> Result<Field> {
        self.check_state(tau)?;
        let g = *tau.grid();
        let d = g.d();
        let s = pointwise(tau, None, Rank::Matrix, |t, _, out| self.stress_into(d, t, out));
        Ok(if self.stress_is_product() { dealias(&s) } else { s })
    }

    /// Linearized stress `DS(tau) dtau`.
    pub fn stress_d(&self, tau: &Field, dtau: &Field) -> Result<Field> {
        self.check_state(tau)?;
        self.check_state(dtau)?;
        let d = tau.grid().d();
        let s = pointwise(tau, Some(dtau), Rank::Matrix, |t, dt, out| {
            self.stress_d_into(d, t, dt, out)
        });
        Ok(if self.stress_is_product() { dealias(&s) } else { s })
    }

    /// `F(g, tau)` at every grid point, without dealiasing.
    pub fn eval_field(&self, g: &Field, tau: &Field) -> Result<Field> {
        self.check_state(tau)?;
        check_gradient(g, tau)?;
        let d = g.grid().d();
        Ok(pointwise(g, Some(tau), self.state_rank(), |gv, tv, out| {
            self.eval_into(d, gv, tv, out)
        }))
    }

    /// `D1F(g, tau) dg + D2F(g, tau) dtau` at every grid point.
    pub fn eval_df_field(&self, g: &Field, tau: &Field, dg: &Field, dtau: &Field) -> Result<Field> {
        self.check_state(tau)?;
        self.check_state(dtau)?;
        check_gradient(g, tau)?;
        check_gradient(dg, tau)?;
        let grid = *g.grid();
        let d = grid.d();
        let (ng, nt) = (d * d, self.state_len(d));
        let mut comps = vec![vec![0.0; grid.len()]; nt];
        let (mut gv, mut tv, mut dgv, mut dtv, mut out) =
            ([0.0; 9], [0.0; 9], [0.0; 9], [0.0; 9], [0.0; 9]);
        for p in 0..grid.len() {
            for c in 0..ng {
                gv[c] = g.component(c)[p];
                dgv[c] = dg.component(c)[p];
            }
            for c in 0..nt {
                tv[c] = tau.component(c)[p];
                dtv[c] = dtau.component(c)[p];
            }
            self.eval_d_into(d, &gv[..ng], &tv[..nt], &dgv[..ng], &dtv[..nt], &mut out[..nt]);
            for c in 0..nt {
                comps[c][p] = out[c];
            }
        }
        Field::from_components(&grid, self.state_rank(), comps)
    }

    /// Integrates `d tau / dt = F(g(t), tau)` at every label with classical
    /// RK4 on the time grid of `g_path`, taking `g` linear in time between
    /// frames. Returns `tau` at every node.
    pub fn integrate_tau(&self, g_path: &Path, tau0: &Field) -> Result<Path> {
        self.check_state(tau0)?;
        if g_path.rank() != Rank::Matrix {
            return Err(Error::RankMismatch {
                expected: "matrix".into(),
                found: g_path.rank().to_string(),
            });
        }
        if g_path.grid() != tau0.grid() {
            return Err(Error::GridMismatch);
        }
        let time = *g_path.time();
        let grid = *tau0.grid();
        let d = grid.d();
        let (ng, nt) = (d * d, self.state_len(d));
        let h = time.dt();
        let mut state: Vec<Vec<f64>> = tau0.components().to_vec();
        let mut frames = vec![tau0.clone()];
        let (mut g0, mut gm, mut g1) = ([0.0; 9], [0.0; 9], [0.0; 9]);
        let (mut y, mut tmp) = ([0.0; 9], [0.0; 9]);
        let (mut k1, mut k2, mut k3, mut k4) = ([0.0; 9], [0.0; 9], [0.0; 9], [0.0; 9]);
        for m in 0..time.steps() {
            let (ga, gb) = (g_path.frame(m), g_path.frame(m + 1));
            for p in 0..grid.len() {
                for c in 0..ng {
                    g0[c] = ga.component(c)[p];
                    g1[c] = gb.component(c)[p];
                    gm[c] = 0.5 * (g0[c] + g1[c]);
                }
                for c in 0..nt {
                    y[c] = state[c][p];
                }
                self.eval_into(d, &g0[..ng], &y[..nt], &mut k1[..nt]);
                for c in 0..nt {
                    tmp[c] = y[c] + 0.5 * h * k1[c];
                }
                self.eval_into(d, &gm[..ng], &tmp[..nt], &mut k2[..nt]);
                for c in 0..nt {
                    tmp[c] = y[c] + 0.5 * h * k2[c];
                }
                self.eval_into(d, &gm[..ng], &tmp[..nt], &mut k3[..nt]);
                for c in 0..nt {
                    tmp[c] = y[c] + h * k3[c];
                }
                self.eval_into(d, &g1[..ng], &tmp[..nt], &mut k4[..nt]);
                for c in 0..nt {
                    let v = y[c] + h / 6.0 * (k1[c] + 2.0 * (k2[c] + k3[c]) + k4[c]);
                    if !v.is_finite() {
                        return Err(Error::Growth {
                            time: time.node(m + 1),
                        });
                    }
                    state[c][p] = v;
                }
            }
            frames.push(Field::build(grid, tau0.rank(), state.clone()));
        }
        Path::new(time, frames)
    }

    /// Solution of the comparison ODE `K' = envelope(g_sup, K)`, `K(0) = tau0_sup`,
    /// at every node of `time` (RK4 on a 16x finer grid).
    pub fn comparison_bound(&self, g_sup: f64, tau0_sup: f64, time: TimeGrid) -> Vec<f64> {
        let sub = 16;
        let h = time.dt() / sub as f64;
        let f = |k: f64| self.growth_envelope(g_sup, k);
        let mut k = tau0_sup;
        let mut out = vec![k];
        for _ in 0..time.steps() {
            for _ in 0..sub {
                let a = f(k);
                let b = f(k + 0.5 * h * a);
                let c = f(k + 0.5 * h * b);
                let e = f(k + h * c);
                k += h / 6.0 * (a + 2.0 * (b + c) + e);
            }
            out.push(k);
        }
        out
    }
}

fn check_gradient(g: &Field, tau: &Field) -> Result<()> {
    if g.rank() != Rank::Matrix {
        return Err(Error::RankMismatch {
            expected: "matrix".into(),
            found: g.rank().to_string(),
        });
    }
    if g.grid() != tau.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Applies `op(a(x), b(x), out)` at every point.
fn pointwise(
    a: &Field,
    b: Option<&Field>,
    out_rank: Rank,
    mut op: impl FnMut(&[f64], &[f64], &mut [f64]),
) -> Field {
    let grid = *a.grid();
    let na = a.n_components();
    let nb = b.map_or(0, Field::n_components);
    let no = out_rank.components(grid.d());
    let mut comps = vec![vec![0.0; grid.len()]; no];
    let (mut av, mut bv, mut ov) = ([0.0; 9], [0.0; 9], [0.0; 9]);
    for p in 0..grid.len() {
        for c in 0..na {
            av[c] = a.component(c)[p];
        }
        if let Some(b) = b {
            for c in 0..nb {
                bv[c] = b.component(c)[p];
            }
        }
        op(&av[..na], &bv[..nb], &mut ov[..no]);
        for c in 0..no {
            comps[c][p] = ov[c];
        }
    }
    Field::build(grid, out_rank, comps)
}

/// Free-function form of [`Model::eval_f`].
pub fn eval_f(model: &Model, d: usize, g: &[f64], tau: &[f64]) -> Result<Vec<f64>> {
    model.eval_f(d, g, tau)
}

/// Free-function form of [`Model::eval_df`].
pub fn eval_df(
    model: &Model,
    d: usize,
    g: &[f64],
    tau: &[f64],
    dg: &[f64],
    dtau: &[f64],
) -> Result<Vec<f64>> {
    model.eval_df(d, g, tau, dg, dtau)
}

/// Free-function form of [`Model::integrate_tau`].
pub fn integrate_tau(model: &Model, g_path: &Path, tau0: &Field) -> Result<Path> {
    model.integrate_tau(g_path, tau0)
}
