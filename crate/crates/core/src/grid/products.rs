//! Pointwise tensor products of fields, each followed by 2/3 dealiasing.

use rustfft::num_complex::Complex64;

use super::{spectral, Field, Rank};
use crate::{Error, Result};

fn expect_rank(f: &Field, rank: Rank) -> Result<()> {
    if f.rank() != rank {
        return Err(Error::RankMismatch {
            expected: rank.to_string(),
            found: f.rank().to_string(),
        });
    }
    Ok(())
}

fn same_grid(a: &Field, b: &Field) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `(m v)_i = sum_j m_ij v_j`.
pub fn mat_vec(m: &Field, v: &Field) -> Result<Field> {
    expect_rank(m, Rank::Matrix)?;
    expect_rank(v, Rank::Vector)?;
    same_grid(m, v)?;
    Ok(spectral::dealias(&mat_vec_raw(m, v)))
}

pub(crate) fn mat_vec_raw(m: &Field, v: &Field) -> Field {
    let g = *m.grid();
    let d = g.d();
    let comps = (0..d)
        .map(|i| {
            (0..g.len())
                .map(|p| (0..d).map(|j| m.component(i * d + j)[p] * v.component(j)[p]).sum())
                .collect()
        })
        .collect();
    Field::build(g, Rank::Vector, comps)
}

/// Pointwise matrix product `(a b)_ij = sum_k a_ik b_kj`.
pub fn matmul(a: &Field, b: &Field) -> Result<Field> {
    expect_rank(a, Rank::Matrix)?;
    expect_rank(b, Rank::Matrix)?;
    same_grid(a, b)?;
    Ok(spectral::dealias(&matmul_raw(a, b)))
}

pub(crate) fn matmul_raw(a: &Field, b: &Field) -> Field {
    let g = *a.grid();
    let d = g.d();
    let comps = (0..d * d)
        .map(|c| {
            let (i, j) = (c / d, c % d);
            (0..g.len())
                .map(|p| {
                    (0..d)
                        .map(|k| a.component(i * d + k)[p] * b.component(k * d + j)[p])
                        .sum()
                })
                .collect()
        })
        .collect();
    Field::build(g, Rank::Matrix, comps)
}

/// `(u ⊗ v)_ij = u_i v_j`.
pub fn outer(u: &Field, v: &Field) -> Result<Field> {
    expect_rank(u, Rank::Vector)?;
    expect_rank(v, Rank::Vector)?;
    same_grid(u, v)?;
    Ok(spectral::dealias(&outer_raw(u, v)))
}

pub(crate) fn outer_raw(u: &Field, v: &Field) -> Field {
    let g = *u.grid();
    let d = g.d();
    let comps = (0..d * d)
        .map(|c| {
            let (a, b) = (u.component(c / d), v.component(c % d));
            a.iter().zip(b).map(|(x, y)| x * y).collect()
        })
        .collect();
    Field::build(g, Rank::Matrix, comps)
}

/// Transport derivative `eta . grad f`, applied componentwise to `f` of any rank.
pub fn advect(eta: &Field, f: &Field) -> Result<Field> {
    expect_rank(eta, Rank::Vector)?;
    same_grid(eta, f)?;
    let g = *f.grid();
    let d = g.d();
    let modes: Vec<_> = (0..g.len()).map(|i| g.mode(i)).collect();
    let comps = f
        .spectrum()
        .iter()
        .map(|s| {
            let mut acc = vec![0.0; g.len()];
            for j in 0..d {
                let dj: Vec<Complex64> = s
                    .iter()
                    .zip(&modes)
                    .map(|(c, m)| c * Complex64::new(0.0, m.kd[j]))
                    .collect();
                let dj = spectral::inverse(&g, dj);
                for ((a, e), v) in acc.iter_mut().zip(eta.component(j)).zip(&dj) {
                    *a += e * v;
                }
            }
            acc
        })
        .collect();
    Ok(spectral::dealias(&Field::build(g, f.rank(), comps)))
}
