//! Small dense linear algebra on `d x d` matrices stored row-major in slices.

/// Determinant of a 2x2 or 3x3 row-major matrix.
pub fn det(m: &[f64], d: usize) -> f64 {
    match d {
        2 => m[0] * m[3] - m[1] * m[2],
        _ => {
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                + m[2] * (m[3] * m[7] - m[4] * m[6])
        }
    }
}

/// Solves `m x = b` by Cramer's rule; `None` when `m` is singular.
pub fn solve(m: &[f64], b: &[f64], d: usize) -> Option<[f64; 3]> {
    let dm = det(m, d);
    if dm == 0.0 || !dm.is_finite() {
        return None;
    }
    let mut x = [0.0; 3];
    let mut tmp = [0.0; 9];
    for c in 0..d {
        tmp[..d * d].copy_from_slice(&m[..d * d]);
        for r in 0..d {
            tmp[r * d + c] = b[r];
        }
        x[c] = det(&tmp, d) / dm;
    }
    Some(x)
}

/// Frobenius norm.
pub fn frobenius(m: &[f64]) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Operator (spectral) norm: the largest singular value.
pub fn op_norm(m: &[f64], d: usize) -> f64 {
    match d {
        2 => {
            // Singular values of [[a, b], [c, e]] in closed form.
            let (a, b, c, e) = (m[0], m[1], m[2], m[3]);
            let s1 = (a + e).hypot(c - b);
            let s2 = (a - e).hypot(c + b);
            0.5 * (s1 + s2)
        }
        _ => {
            let mut s = [0.0; 9];
            for i in 0..3 {
                for j in 0..3 {
                    s[i * 3 + j] = (0..3).map(|k| m[k * 3 + i] * m[k * 3 + j]).sum();
                }
            }
            sym3_max_eigenvalue(s).max(0.0).sqrt()
        }
    }
}

/// Largest eigenvalue of a symmetric 3x3 matrix by cyclic Jacobi rotations.
fn sym3_max_eigenvalue(mut a: [f64; 9]) -> f64 {
    for _ in 0..50 {
        let off = a[1] * a[1] + a[2] * a[2] + a[5] * a[5];
        let scale = a[0] * a[0] + a[4] * a[4] + a[8] * a[8] + 2.0 * off;
        if off <= 1e-32 * scale || off == 0.0 {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p * 3 + q];
            if apq == 0.0 {
                continue;
            }
            let app = a[p * 3 + p];
            let aqq = a[q * 3 + q];
            let theta = (aqq - app) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // A <- J^T A J with J the (p, q) rotation.
            for k in 0..3 {
                let akp = a[k * 3 + p];
                let akq = a[k * 3 + q];
                a[k * 3 + p] = c * akp - s * akq;
                a[k * 3 + q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p * 3 + k];
                let aqk = a[q * 3 + k];
                a[p * 3 + k] = c * apk - s * aqk;
                a[q * 3 + k] = s * apk + c * aqk;
            }
        }
    }
    a[0].max(a[4]).max(a[8])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_op_norm(m: &[f64], d: usize) -> f64 {
        // Maximize |m x| over a dense sample of unit vectors.
        let mut best = 0.0_f64;
        let steps = if d == 2 { 4000 } else { 200 };
        for i in 0..steps {
            let th = std::f64::consts::PI * i as f64 / steps as f64;
            let phis = if d == 2 { 1 } else { 2 * steps };
            for j in 0..phis {
                let ph = 2.0 * std::f64::consts::PI * j as f64 / phis as f64;
                let x = if d == 2 {
                    [th.cos(), th.sin(), 0.0]
                } else {
                    [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
                };
                let mut n2 = 0.0;
                for r in 0..d {
                    let v: f64 = (0..d).map(|c| m[r * d + c] * x[c]).sum();
                    n2 += v * v;
                }
                best = best.max(n2.sqrt());
            }
        }
        best
    }

    #[test]
    fn op_norm_of_shear() {
        // [[1, c], [0, 1]] has largest singular value (c + sqrt(c^2 + 4)) / 2.
        let c = 0.2;
        let want = (c + (c * c + 4.0_f64).sqrt()) / 2.0;
        assert!((op_norm(&[1.0, c, 0.0, 1.0], 2) - want).abs() < 1e-14);
        let m3 = [1.0, c, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        assert!((op_norm(&m3, 3) - want).abs() < 1e-12);
    }

    #[test]
    fn solve_inverts() {
        let m = [2.0, 1.0, 0.5, 0.0, 3.0, 1.0, 1.0, 0.0, 4.0];
        let x = solve(&m, &[1.0, 2.0, 3.0], 3).unwrap();
        for r in 0..3 {
            let v: f64 = (0..3).map(|c| m[r * 3 + c] * x[c]).sum();
            assert!((v - [1.0, 2.0, 3.0][r]).abs() < 1e-13);
        }
        assert!(solve(&[1.0, 2.0, 2.0, 4.0], &[1.0, 1.0], 2).is_none());
    }

    proptest! {
        #[test]
        fn op_norm_matches_sampling_2d(v in prop::array::uniform4(-2.0f64..2.0)) {
            let exact = op_norm(&v, 2);
            let sampled = brute_op_norm(&v, 2);
            prop_assert!(exact >= sampled - 1e-12);
            prop_assert!(exact <= sampled * (1.0 + 1e-4) + 1e-12);
        }

        #[test]
        fn op_norm_bounded_by_frobenius_3d(v in prop::array::uniform9(-2.0f64..2.0)) {
            let s = op_norm(&v, 3);
            prop_assert!(s <= frobenius(&v) + 1e-12);
            prop_assert!(s >= frobenius(&v) / 3f64.sqrt() - 1e-12);
            let sampled = brute_op_norm(&v, 3);
            prop_assert!(s >= sampled - 1e-12);
            prop_assert!(s <= sampled * (1.0 + 1e-3) + 1e-12);
        }
    }
}
