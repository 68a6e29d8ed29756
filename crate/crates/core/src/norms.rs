//! Sampled norms of fields and time paths.
//!
//! Pointwise magnitudes are Euclidean for vectors and Frobenius for
//! matrices. Hölder seminorms are maxima over the point pairs of a
//! [`Stencil`] with periodic distances, so they are lower bounds of the
//! continuum seminorm that become exact for [`Stencil::Full`] on the grid.
//!
//! Spatial norms:
//!
//! * `|f|_{alpha,p} = |f|_inf + [f]_alpha + |f|_p`
//! * `|f|_{1+alpha,p} = |f|_inf + |grad f|_inf + [grad f]_alpha + |f|_p + |grad f|_p`
//!
//! Path norms: `|f|_{C^beta(B)} = sup_t |f(t)|_B + sup_{s != t} |f(t) - f(s)|_B / |t - s|^beta`.

use serde::{Deserialize, Serialize};

use crate::grid::{gradient, Field, Path, Stencil};
use crate::{Error, Result};

/// Exponents and sampling stencil shared by every norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormParams {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub stencil: Stencil,
}

impl Default for NormParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.75,
            p: 2.0,
            stencil: Stencil::Dyadic,
        }
    }
}

impl NormParams {
    /// Checks `0 < alpha < 1`, `1/2 < beta < 1`, `1 < p < inf`.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha = {} outside (0, 1)", self.alpha)));
        }
        if !(self.beta > 0.5 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!("beta = {} outside (1/2, 1)", self.beta)));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p = {} outside (1, inf)", self.p)));
        }
        Ok(())
    }
}

fn magnitude_sq(f: &Field, p: usize) -> f64 {
    f.components().iter().map(|c| c[p] * c[p]).sum()
}

/// `max_x |f(x)|`.
pub fn sup_norm(f: &Field) -> f64 {
    (0..f.grid().len())
        .map(|p| magnitude_sq(f, p))
        .fold(0.0, f64::max)
        .sqrt()
}

/// `(sum_x |f(x)|^p h^d)^{1/p}`.
pub fn lp_norm(f: &Field, p: f64) -> f64 {
    let g = f.grid();
    let s: f64 = (0..g.len()).map(|i| magnitude_sq(f, i).powf(0.5 * p)).sum();
    (s * g.cell_volume()).powf(1.0 / p)
}

/// `max |f(x) - f(y)| / |x - y|^alpha` over the pairs `(x, x + o)` of the stencil.
pub fn holder_seminorm_with(f: &Field, alpha: f64, stencil: Stencil) -> f64 {
    let g = f.grid();
    let d = g.d();
    let h = g.spacing();
    let comps = f.components();
    let mut best = 0.0_f64;
    for o in stencil.offsets(g) {
        let dist: f64 = o[..d].iter().map(|&v| (v as f64 * h).powi(2)).sum::<f64>().sqrt();
        let mut worst = 0.0_f64;
        for p in 0..g.len() {
            let q = g.shifted(g.multi_index(p), o);
            let s: f64 = comps.iter().map(|c| (c[q] - c[p]).powi(2)).sum();
            worst = worst.max(s);
        }
        best = best.max(worst.sqrt() / dist.powf(alpha));
    }
    best
}

/// Hölder seminorm on the dyadic stencil.
pub fn holder_seminorm(f: &Field, alpha: f64) -> f64 {
    holder_seminorm_with(f, alpha, Stencil::Dyadic)
}

/// `|f|_inf + [f]_alpha`.
pub fn norm_alpha(f: &Field, params: &NormParams) -> f64 {
    sup_norm(f) + holder_seminorm_with(f, params.alpha, params.stencil)
}

/// `|f|_{alpha,p} = |f|_inf + [f]_alpha + |f|_p`.
pub fn norm_alpha_p(f: &Field, params: &NormParams) -> f64 {
    norm_alpha(f, params) + lp_norm(f, params.p)
}

/// `|f|_inf + |grad f|_inf + [grad f]_alpha`.
pub fn norm_1alpha(f: &Field, params: &NormParams) -> Result<f64> {
    let g = gradient(f)?;
    Ok(sup_norm(f) + norm_alpha(&g, params))
}

/// `|f|_{1+alpha,p}`.
pub fn norm_1alpha_p(f: &Field, params: &NormParams) -> Result<f64> {
    let g = gradient(f)?;
    Ok(one_alpha_p_with_gradient(f, &g, params))
}

fn one_alpha_p_with_gradient(f: &Field, g: &Field, params: &NormParams) -> f64 {
    sup_norm(f) + lp_norm(f, params.p) + norm_alpha_p(g, params)
}

/// Spatial norm applied to each frame of a path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpatialNorm {
    Sup,
    Lp,
    Alpha,
    AlphaP,
    OneAlpha,
    OneAlphaP,
}

impl SpatialNorm {
    fn needs_gradient(self) -> bool {
        matches!(self, SpatialNorm::OneAlpha | SpatialNorm::OneAlphaP)
    }

    pub fn eval(self, f: &Field, params: &NormParams) -> Result<f64> {
        match self {
            SpatialNorm::OneAlpha => norm_1alpha(f, params),
            SpatialNorm::OneAlphaP => norm_1alpha_p(f, params),
            _ => Ok(Prepared::plain(f.clone()).norm(self, params)),
        }
    }
}

/// A frame together with its gradient when the norm needs it. Gradients are
/// linear, so differences of prepared frames stay consistent.
struct Prepared {
    f: Field,
    grad: Option<Field>,
}

impl Prepared {
    fn plain(f: Field) -> Self {
        Self { f, grad: None }
    }

    fn new(f: &Field, norm: SpatialNorm) -> Result<Self> {
        let grad = if norm.needs_gradient() { Some(gradient(f)?) } else { None };
        Ok(Self { f: f.clone(), grad })
    }

    fn diff(&self, other: &Prepared) -> Result<Prepared> {
        let grad = match (&self.grad, &other.grad) {
            (Some(a), Some(b)) => Some(a.sub(b)?),
            _ => None,
        };
        Ok(Prepared {
            f: self.f.sub(&other.f)?,
            grad,
        })
    }

    fn norm(&self, norm: SpatialNorm, params: &NormParams) -> f64 {
        match norm {
            SpatialNorm::Sup => sup_norm(&self.f),
            SpatialNorm::Lp => lp_norm(&self.f, params.p),
            SpatialNorm::Alpha => norm_alpha(&self.f, params),
            SpatialNorm::AlphaP => norm_alpha_p(&self.f, params),
            SpatialNorm::OneAlpha => {
                sup_norm(&self.f) + norm_alpha(self.grad.as_ref().expect("gradient prepared"), params)
            }
            SpatialNorm::OneAlphaP => one_alpha_p_with_gradient(
                &self.f,
                self.grad.as_ref().expect("gradient prepared"),
                params,
            ),
        }
    }
}

/// The two parts of a time-Hölder path norm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PathNorm {
    /// `sup_t |f(t)|`.
    pub sup: f64,
    /// `sup_{s != t} |f(t) - f(s)| / |t - s|^beta`.
    pub seminorm: f64,
}

impl PathNorm {
    pub fn total(&self) -> f64 {
        self.sup + self.seminorm
    }
}

/// `sup_t |f(t)|` in the given spatial norm.
pub fn path_sup(path: &Path, norm: SpatialNorm, params: &NormParams) -> Result<f64> {
    let mut best = 0.0_f64;
    for f in path.frames() {
        best = best.max(Prepared::new(f, norm)?.norm(norm, params));
    }
    Ok(best)
}

/// Time-Hölder norm of a path with exponent `beta` in `(0, 1]`.
///
/// The seminorm is the exact maximum over all node pairs. Pairs are visited
/// in decreasing order of the triangle-inequality bound
/// `sum_{s <= m < t} |f(m+1) - f(m)| / |t - s|^beta` and skipped once that
/// bound cannot beat the current maximum.
pub fn path_norm_beta(
    path: &Path,
    beta: f64,
    norm: SpatialNorm,
    params: &NormParams,
) -> Result<PathNorm> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter(format!("beta = {beta} outside (0, 1]")));
    }
    let prepared = path
        .frames()
        .iter()
        .map(|f| Prepared::new(f, norm))
        .collect::<Result<Vec<_>>>()?;
    let sup = prepared
        .iter()
        .map(|p| p.norm(norm, params))
        .fold(0.0, f64::max);
    let nodes = path.time().nodes();
    let m = nodes.len();
    let mut steps = Vec::with_capacity(m - 1);
    for w in prepared.windows(2) {
        steps.push(w[1].diff(&w[0])?.norm(norm, params));
    }
    let mut prefix = vec![0.0];
    for s in &steps {
        prefix.push(prefix.last().unwrap() + s);
    }
    let mut best = 0.0_f64;
    for (i, s) in steps.iter().enumerate() {
        best = best.max(s / (nodes[i + 1] - nodes[i]).powf(beta));
    }
    let mut candidates = Vec::new();
    for i in 0..m {
        for j in i + 2..m {
            let bound = (prefix[j] - prefix[i]) / (nodes[j] - nodes[i]).powf(beta);
            candidates.push((bound, i, j));
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (bound, i, j) in candidates {
        if bound * (1.0 + 1e-12) <= best {
            break;
        }
        let v = prepared[j].diff(&prepared[i])?.norm(norm, params);
        best = best.max(v / (nodes[j] - nodes[i]).powf(beta));
    }
    Ok(PathNorm {
        sup,
        seminorm: best,
    })
}

/// Lipschitz-in-time norm: the `beta = 1` case, whose maximum is attained
/// on consecutive nodes.
pub fn path_norm_lip(path: &Path, norm: SpatialNorm, params: &NormParams) -> Result<PathNorm> {
    path_norm_beta(path, 1.0, norm, params)
}

/// Constituents of a perturbation `(X', tau', v', u'(0))`. `x` holds the
/// displacement difference, i.e. `X'` as a vector path.
pub struct Perturbation<'a> {
    pub x: &'a Path,
    pub tau: &'a Path,
    pub v: Option<&'a Path>,
    pub u0: Option<&'a Field>,
}

/// Measured norms of a perturbation and the composite quantities built from them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct NormReport {
    /// `sup_t |X'(t)|_inf`.
    pub l_inf: f64,
    /// `sup_t |X'(t)|_p`.
    pub l_p: f64,
    /// `sup_t [X'(t)]_alpha`.
    pub holder_semi: f64,
    /// `sup_t |X'(t)|_{1+alpha,p}`.
    pub c1_alpha_p: f64,
    /// `|X'|_{C^beta(C^{1+alpha,p})}`.
    pub path_beta: f64,
    /// `|X'|_{Lip(C^{1+alpha,p})}`.
    pub path_lip: f64,
    /// `|X'|_{C^beta(C^{alpha,p})} + |X'|_{L^inf(C^{1+alpha,p})} + |tau'|_{L^inf(C^{alpha,p})} + |u'(0)|_{alpha,p}`.
    pub n: f64,
    /// `|X'|_{C^beta(C^{1+alpha,p})} + |tau'|_{C^beta(C^{alpha,p})} + |u'(0)|_{1+alpha,p}`.
    pub m: f64,
    /// `M + |v'|_{L^inf(C^{1+alpha,p})}`.
    pub m1: f64,
    /// `|X'|_{C^beta(C^{1+alpha,p})} + |tau'|_{C^beta(C^{alpha,p})}`.
    pub p: f64,
    /// `P + delta |v'|_{L^inf(C^{1+alpha,p})}`.
    pub p_delta: f64,
}

/// Assembles every constituent norm of `pert` and the composites `N`, `M`,
/// `M1`, `P` and the `delta`-weighted `P`.
pub fn composite_norms(pert: &Perturbation, params: &NormParams, delta: f64) -> Result<NormReport> {
    use SpatialNorm::*;
    let x = pert.x;
    let x_beta_1a = path_norm_beta(x, params.beta, OneAlphaP, params)?;
    let x_beta_a = path_norm_beta(x, params.beta, AlphaP, params)?;
    let x_lip = path_norm_lip(x, OneAlphaP, params)?;
    let tau_beta = path_norm_beta(pert.tau, params.beta, AlphaP, params)?;
    let v_sup = match pert.v {
        Some(v) => path_sup(v, OneAlphaP, params)?,
        None => 0.0,
    };
    let (u0_a, u0_1a) = match pert.u0 {
        Some(u) => (norm_alpha_p(u, params), norm_1alpha_p(u, params)?),
        None => (0.0, 0.0),
    };
    let p = x_beta_1a.total() + tau_beta.total();
    let m = p + u0_1a;
    Ok(NormReport {
        l_inf: path_sup(x, Sup, params)?,
        l_p: path_sup(x, Lp, params)?,
        holder_semi: x
            .frames()
            .iter()
            .map(|f| holder_seminorm_with(f, params.alpha, params.stencil))
            .fold(0.0, f64::max),
        c1_alpha_p: x_beta_1a.sup,
        path_beta: x_beta_1a.total(),
        path_lip: x_lip.total(),
        n: x_beta_a.total() + x_beta_1a.sup + tau_beta.sup + u0_a,
        m,
        m1: m + v_sup,
        p,
        p_delta: p + delta * v_sup,
    })
}

/// The `P` distance between two states, `|X1 - X2|_{C^beta(C^{1+alpha,p})} +
/// |tau1 - tau2|_{C^beta(C^{alpha,p})} (+ delta |v1 - v2|_{L^inf(C^{1+alpha,p})})`.
pub fn p_distance(
    x: (&Path, &Path),
    tau: (&Path, &Path),
    v: Option<(&Path, &Path)>,
    params: &NormParams,
    delta: f64,
) -> Result<f64> {
    let dx = x.0.sub(x.1)?;
    let dtau = tau.0.sub(tau.1)?;
    let mut total = path_norm_beta(&dx, params.beta, SpatialNorm::OneAlphaP, params)?.total()
        + path_norm_beta(&dtau, params.beta, SpatialNorm::AlphaP, params)?.total();
    if let Some((v1, v2)) = v {
        total += delta * path_sup(&v1.sub(v2)?, SpatialNorm::OneAlphaP, params)?;
    }
    Ok(total)
}

/// The Lipschitz-in-time analogue of [`p_distance`] (`P_1`), used for the
/// invariant-set radius.
pub fn p1_norm(x: &Path, tau: &Path, v: Option<&Path>, params: &NormParams) -> Result<f64> {
    let mut total = path_norm_lip(x, SpatialNorm::OneAlphaP, params)?.total()
        + path_norm_lip(tau, SpatialNorm::AlphaP, params)?.total();
    if let Some(v) = v {
        total += path_sup(v, SpatialNorm::OneAlphaP, params)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, Rank, TimeGrid};
    use std::f64::consts::PI;

    fn params() -> NormParams {
        NormParams::default()
    }

    #[test]
    fn parameter_ranges() {
        assert!(params().validate().is_ok());
        for bad in [
            NormParams { alpha: 1.0, ..params() },
            NormParams { beta: 0.5, ..params() },
            NormParams { p: 1.0, ..params() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn constant_has_zero_seminorm() {
        let g = GridSpec::torus(2, 16).unwrap();
        let f = Field::scalar_fn(&g, |_| 4.0);
        assert_eq!(holder_seminorm(&f, 0.5), 0.0);
    }

    #[test]
    fn seminorm_is_homogeneous() {
        let g = GridSpec::torus(2, 16).unwrap();
        let f = Field::scalar_fn(&g, |x| x[0].sin() * x[1].cos());
        let a = holder_seminorm(&f, 0.3);
        let b = holder_seminorm(&f.scale(-2.5), 0.3);
        assert!((b - 2.5 * a).abs() <= 1e-14 * b);
    }

    #[test]
    fn full_stencil_equals_brute_force_pairs() {
        let g = GridSpec::torus(2, 16).unwrap();
        let f = Field::scalar_fn(&g, |x| x[0].sin());
        let pts = g.points();
        let mut brute = 0.0_f64;
        for i in 0..g.len() {
            for j in 0..g.len() {
                if i != j {
                    let q = (f.component(0)[i] - f.component(0)[j]).abs()
                        / g.periodic_distance(&pts[i], &pts[j]).sqrt();
                    brute = brute.max(q);
                }
            }
        }
        let est = holder_seminorm_with(&f, 0.5, Stencil::Full);
        assert!((est - brute).abs() < 1e-12 * brute);
        assert!(holder_seminorm(&f, 0.5) <= est + 1e-15);
    }

    #[test]
    fn l2_of_sine() {
        let g = GridSpec::torus(2, 16).unwrap();
        let f = Field::scalar_fn(&g, |x| x[0].sin());
        assert!((lp_norm(&f, 2.0) - (2.0 * PI * PI).sqrt()).abs() < 1e-12);
        assert_eq!(norm_alpha_p(&Field::zeros(&g, Rank::Scalar), &params()), 0.0);
    }

    #[test]
    fn constant_path_norm_is_frame_norm() {
        let g = GridSpec::torus(2, 16).unwrap();
        let f = Field::vector_fn(&g, |x| [x[0].sin(), x[1].cos(), 0.0]);
        let p = Path::constant(TimeGrid::new(0.5, 5).unwrap(), &f);
        let pn = path_norm_beta(&p, 0.75, SpatialNorm::OneAlphaP, &params()).unwrap();
        assert_eq!(pn.seminorm, 0.0);
        assert!((pn.sup - norm_1alpha_p(&f, &params()).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn linear_path_lip_part() {
        let g = GridSpec::torus(2, 16).unwrap();
        let f0 = Field::scalar_fn(&g, |x| x[0].sin() + 0.5 * x[1].cos());
        let p = Path::from_fn(TimeGrid::new(1.0, 8).unwrap(), |_, t| f0.scale(t)).unwrap();
        let pn = path_norm_lip(&p, SpatialNorm::AlphaP, &params()).unwrap();
        let want = norm_alpha_p(&f0, &params());
        assert!((pn.seminorm - want).abs() < 1e-12 * want);
    }

    #[test]
    fn sqrt_path_matches_pair_enumeration() {
        let g = GridSpec::torus(2, 8).unwrap();
        let f0 = Field::scalar_fn(&g, |x| x[0].cos());
        let time = TimeGrid::new(1.0, 12).unwrap();
        let p = Path::from_fn(time, |_, t| f0.scale(t.sqrt())).unwrap();
        let pn = path_norm_beta(&p, 0.5, SpatialNorm::Sup, &params()).unwrap();
        let nodes = time.nodes();
        let mut brute = 0.0_f64;
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                let q = (nodes[j].sqrt() - nodes[i].sqrt()) / (nodes[j] - nodes[i]).sqrt();
                brute = brute.max(q);
            }
        }
        let want = sup_norm(&f0) * brute;
        assert!((pn.seminorm - want).abs() < 1e-12 * want);
    }

    #[test]
    fn composites_of_zero_and_single_constituent() {
        let g = GridSpec::torus(2, 8).unwrap();
        let time = TimeGrid::new(0.5, 4).unwrap();
        let zx = Path::zeros(time, &g, Rank::Vector);
        let zt = Path::zeros(time, &g, Rank::Matrix);
        let r = composite_norms(
            &Perturbation { x: &zx, tau: &zt, v: Some(&zx), u0: None },
            &params(),
            0.3,
        )
        .unwrap();
        assert_eq!(r, NormReport::default());
        let v = Path::constant(time, &Field::vector_fn(&g, |x| [x[1].sin(), 0.0, 0.0]));
        let r = composite_norms(
            &Perturbation { x: &zx, tau: &zt, v: Some(&v), u0: None },
            &params(),
            0.3,
        )
        .unwrap();
        let vn = path_sup(&v, SpatialNorm::OneAlphaP, &params()).unwrap();
        assert_eq!(r.m1, vn);
        assert_eq!(r.p_delta, 0.3 * vn);
        assert_eq!(r.p, 0.0);
    }
}
