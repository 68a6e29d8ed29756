//! Flow maps `X(a) = a + chi(a)` with periodic displacement `chi`.

use crate::grid::{gradient, Field, GridSpec, InterpKind, Interpolant, Path, Point, Rank, Stencil};
use crate::linalg;
use crate::{Error, Result};

/// Largest round-trip residual accepted by [`FlowMap::invert`].
pub const INVERSION_TOLERANCE: f64 = 1e-10;
/// Iteration cap of [`FlowMap::invert`].
pub const INVERSION_MAX_ITER: usize = 50;

/// A Lagrangian map on the torus, stored through its displacement.
#[derive(Clone, Debug)]
pub struct FlowMap {
    chi: Field,
}

impl FlowMap {
    pub fn identity(grid: &GridSpec) -> Self {
        Self {
            chi: Field::zeros(grid, Rank::Vector),
        }
    }

    pub fn new(chi: Field) -> Result<Self> {
        if chi.rank() != Rank::Vector {
            return Err(Error::RankMismatch {
                expected: "vector".into(),
                found: chi.rank().to_string(),
            });
        }
        Ok(Self { chi })
    }

    pub fn chi(&self) -> &Field {
        &self.chi
    }

    pub fn into_chi(self) -> Field {
        self.chi
    }

    pub fn grid(&self) -> &GridSpec {
        self.chi.grid()
    }

    pub fn is_identity(&self) -> bool {
        self.chi.is_zero()
    }

    /// Images `a + chi(a)` of the grid points, not wrapped into the box.
    pub fn positions(&self) -> Vec<Point> {
        let g = self.grid();
        (0..g.len())
            .map(|i| {
                let mut p = g.point(i);
                for (a, x) in p.iter_mut().enumerate().take(g.d()) {
                    *x += self.chi.component(a)[i];
                }
                p
            })
            .collect()
    }

    /// Label gradient `grad_a X = I + grad chi`.
    pub fn grad_label(&self) -> Result<Field> {
        let g = self.grid();
        if self.is_identity() {
            return Ok(Field::identity_matrix(g));
        }
        Field::identity_matrix(g).add(&gradient(&self.chi)?)
    }

    /// `max_a |grad chi(a)|` in the pointwise operator norm; the invariant-set
    /// test requires it to stay at most `1/2`.
    pub fn deformation(&self) -> Result<f64> {
        if self.is_identity() {
            return Ok(0.0);
        }
        Ok(sup_operator_norm(&gradient(&self.chi)?))
    }

    /// The inverse map `A = X^{-1}`, `A(x) = x + alpha(x)`.
    ///
    /// Each grid point is solved by the fixed-point iteration
    /// `a <- x - chi(a)`, switching to Newton steps with the interpolated
    /// Jacobian when the contraction is slow. Iterates until the residual
    /// stops decreasing or reaches round-off.
    pub fn invert(&self, kind: InterpKind) -> Result<FlowMap> {
        let g = *self.grid();
        if self.is_identity() {
            return Ok(self.clone());
        }
        let d = g.d();
        let chi_i = Interpolant::new(&self.chi, kind);
        let jac_i = Interpolant::new(&gradient(&self.chi)?, kind);
        let floor = 1e-14 * g.length().max(1.0);
        let mut alpha = vec![vec![0.0; g.len()]; d];
        let mut c = [0.0; 3];
        let mut jac = [0.0; 9];
        for i in 0..g.len() {
            let x = g.point(i);
            let mut a = x;
            let mut res = f64::INFINITY;
            let mut newton = false;
            let mut iterations = 0;
            loop {
                chi_i.eval_into(&a, &mut c[..d]);
                let mut r = [0.0; 3];
                for k in 0..d {
                    r[k] = a[k] + c[k] - x[k];
                }
                let norm = r[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm <= floor || (norm >= res && res <= INVERSION_TOLERANCE) {
                    res = res.min(norm);
                    break;
                }
                if iterations >= INVERSION_MAX_ITER {
                    res = res.min(norm);
                    break;
                }
                if norm > 0.25 * res {
                    newton = true;
                }
                res = norm;
                iterations += 1;
                let step = if newton {
                    jac_i.eval_into(&a, &mut jac[..d * d]);
                    for k in 0..d {
                        jac[k * d + k] += 1.0;
                    }
                    linalg::solve(&jac[..d * d], &r[..d], d).unwrap_or(r)
                } else {
                    r
                };
                for k in 0..d {
                    a[k] -= step[k];
                }
            }
            if !(res <= INVERSION_TOLERANCE) {
                return Err(Error::Inversion {
                    point: i,
                    residual: res,
                    iterations,
                });
            }
            for k in 0..d {
                alpha[k][i] = a[k] - x[k];
            }
        }
        FlowMap::new(Field::from_components(&g, Rank::Vector, alpha)?)
    }

    /// `max_x |X(A(x)) - x|` with `self = X`, evaluated by interpolation.
    pub fn round_trip_residual(&self, inverse: &FlowMap, kind: InterpKind) -> f64 {
        let g = self.grid();
        let targets = inverse.positions();
        let chi = Interpolant::new(&self.chi, kind);
        let mut worst = 0.0_f64;
        let mut c = [0.0; 3];
        for (i, a) in targets.iter().enumerate() {
            chi.eval_into(a, &mut c[..g.d()]);
            let x = g.point(i);
            let r: f64 = (0..g.d())
                .map(|k| (a[k] + c[k] - x[k]).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        worst
    }
}

/// Free-function form of [`FlowMap::invert`].
pub fn invert_map(x: &FlowMap, kind: InterpKind) -> Result<FlowMap> {
    x.invert(kind)
}

/// `f o X`: `f` evaluated at the images of the grid points.
pub fn compose(f: &Field, x: &FlowMap, kind: InterpKind) -> Result<Field> {
    if f.grid() != x.grid() {
        return Err(Error::GridMismatch);
    }
    if x.is_identity() {
        return Ok(f.clone());
    }
    let values = Interpolant::new(f, kind).eval_many(&x.positions());
    Field::from_components(f.grid(), f.rank(), values)
}

/// Free-function form of [`FlowMap::grad_label`].
pub fn grad_label(x: &FlowMap) -> Result<Field> {
    x.grad_label()
}

/// `max_x |m(x)|` over a matrix field in the pointwise operator norm.
pub fn sup_operator_norm(m: &Field) -> f64 {
    let g = m.grid();
    let d = g.d();
    let mut buf = [0.0; 9];
    let mut worst = 0.0_f64;
    for p in 0..g.len() {
        for (c, b) in buf.iter_mut().enumerate().take(d * d) {
            *b = m.component(c)[p];
        }
        worst = worst.max(linalg::op_norm(&buf[..d * d], d));
    }
    worst
}

/// `lambda(t_m) = exp(int_0^{t_m} |grad u|_inf ds)` by the trapezoid rule over
/// the frames of `grad_u`.
pub fn lambda_path(grad_u: &Path) -> Vec<f64> {
    let dt = grad_u.time().dt();
    let sup: Vec<f64> = grad_u.frames().iter().map(sup_operator_norm).collect();
    let mut acc = 0.0;
    let mut out = vec![1.0];
    for w in sup.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc.exp());
    }
    out
}

/// Extreme chord-arc ratios `|a - b| / |X(a) - X(b)|` of one map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChordArcReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub lambda: f64,
    /// Relative slack applied to both ends of `[1/lambda, lambda]`.
    pub slack: f64,
}

impl ChordArcReport {
    pub fn within_bounds(&self) -> bool {
        self.min_ratio >= (1.0 - self.slack) / self.lambda
            && self.max_ratio <= self.lambda * (1.0 + self.slack)
    }
}

/// Samples chord-arc ratios over the pairs `(a, a + o)` for every grid point
/// `a` and every stencil offset `o`. Differences are taken on the lift of
/// `X`, so `X(a + o) - X(a) = o h + chi(a + o) - chi(a)`.
pub fn chord_arc(x: &FlowMap, lambda: f64, stencil: Stencil, slack: f64) -> Result<ChordArcReport> {
    if !(lambda >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "chord-arc constant must be at least 1, got {lambda}"
        )));
    }
    let g = x.grid();
    let d = g.d();
    let h = g.spacing();
    let chi = x.chi();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for o in stencil.offsets(g) {
        let label: f64 = o[..d].iter().map(|&v| (v as f64 * h).powi(2)).sum::<f64>().sqrt();
        for p in 0..g.len() {
            let q = g.shifted(g.multi_index(p), o);
            let mut img = 0.0;
            for k in 0..d {
                let dk = o[k] as f64 * h + chi.component(k)[q] - chi.component(k)[p];
                img += dk * dk;
            }
            let ratio = label / img.sqrt();
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    Ok(ChordArcReport {
        min_ratio: lo,
        max_ratio: hi,
        lambda,
        slack,
    })
}
