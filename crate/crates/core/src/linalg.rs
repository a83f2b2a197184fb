//! Small dense linear algebra for the fixed-size problems in this crate.

use num_complex::Complex64 as C64;
use num_traits::Zero;

/// Smallest pivot, relative to the largest diagonal entry, accepted by
/// [`cholesky`].
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
///
/// Returns `None` when a pivot falls below `PIVOT_TOLERANCE` times the
/// largest diagonal entry, which is how callers detect singular or badly
/// conditioned normal equations.
pub fn cholesky<const N: usize>(a: &[[f64; N]; N]) -> Option<[[f64; N]; N]> {
    let scale = (0..N).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    let mut l = [[0.0; N]; N];
    for j in 0..N {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > PIVOT_TOLERANCE * scale) {
            return None;
        }
        let d = d.sqrt();
        l[j][j] = d;
        for i in (j + 1)..N {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / d;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the Cholesky factor `L`.
pub fn cholesky_solve<const N: usize>(l: &[[f64; N]; N], b: &[f64; N]) -> [f64; N] {
    let mut y = [0.0; N];
    for i in 0..N {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = [0.0; N];
    for i in (0..N).rev() {
        let mut s = y[i];
        for k in (i + 1)..N {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Inverse of a symmetric positive definite matrix, or `None` if singular.
pub fn spd_inverse<const N: usize>(a: &[[f64; N]; N]) -> Option<[[f64; N]; N]> {
    let l = cholesky(a)?;
    let mut inv = [[0.0; N]; N];
    for j in 0..N {
        let mut e = [0.0; N];
        e[j] = 1.0;
        let col = cholesky_solve(&l, &e);
        for i in 0..N {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

/// Eigenvalues of a Hermitian matrix in ascending order (cyclic complex
/// Jacobi rotations). Only the upper triangle is trusted to be consistent
/// with the lower one; the input is not checked for Hermiticity.
pub fn hermitian_eigenvalues<const N: usize>(a: &[[C64; N]; N]) -> [f64; N] {
    let mut m = *a;
    let norm: f64 = m
        .iter()
        .flat_map(|row| row.iter())
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 {
        return [0.0; N];
    }

    for _sweep in 0..64 {
        let off: f64 = (0..N)
            .flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * norm {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                rotate(&mut m, p, q);
            }
        }
    }

    let mut eig = [0.0; N];
    for (i, e) in eig.iter_mut().enumerate() {
        *e = m[i][i].re;
    }
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    eig
}

// Zeroes m[p][q] with the unitary J = diag-phase(q) · Givens(p, q), m ← J† m J.
fn rotate<const N: usize>(m: &mut [[C64; N]; N], p: usize, q: usize) {
    let apq = m[p][q];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let app = m[p][p].re;
    let aqq = m[q][q].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // Columns p and q of J; every other column is the identity.
    let conj = phase.conj();
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -conj * s;
    let jqq = conj * c;

    // m ← m J (columns p, q)
    for row in m.iter_mut() {
        let mp = row[p];
        let mq = row[q];
        row[p] = mp * jpp + mq * jqp;
        row[q] = mp * jpq + mq * jqq;
    }
    // m ← J† m (rows p, q)
    for col in 0..N {
        let mp = m[p][col];
        let mq = m[q][col];
        m[p][col] = jpp.conj() * mp + jqp.conj() * mq;
        m[q][col] = jpq.conj() * mp + jqq.conj() * mq;
    }
    m[p][q] = C64::zero();
    m[q][p] = C64::zero();
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cholesky_solves_small_system() {
        let a = [[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let b = [1.0, 2.0, 3.0];
        let l = cholesky(&a).unwrap();
        let x = cholesky_solve(&l, &b);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i][j] * x[j]).sum();
            assert_relative_eq!(r, b[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = [[1.0, 2.0], [2.0, 4.0]];
        assert!(cholesky(&a).is_none());
        assert!(spd_inverse(&[[0.0; 2]; 2]).is_none());
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
        let inv = spd_inverse(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| a[i][k] * inv[k][j]).sum();
                assert_relative_eq!(v, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eigenvalues_of_diagonal_and_complex_2x2() {
        let z = C64::zero();
        let d = [[C64::new(3.0, 0.0), z], [z, C64::new(-1.0, 0.0)]];
        assert_eq!(hermitian_eigenvalues(&d), [-1.0, 3.0]);

        // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
        let h = [
            [C64::new(1.0, 0.0), C64::new(0.0, 1.0)],
            [C64::new(0.0, -1.0), C64::new(1.0, 0.0)],
        ];
        let e = hermitian_eigenvalues(&h);
        assert_relative_eq!(e[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(e[1], 2.0, epsilon = 1e-14);
    }
}
