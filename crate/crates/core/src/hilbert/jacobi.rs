//! Cyclic Jacobi diagonalization of complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` by a diagonal
//! unitary on index `q`, then applies a real Jacobi rotation to the resulting
//! real symmetric 2x2 block. The accumulated rotations form the eigenvector
//! matrix.

use super::{ComplexMatrix, OrthonormalBasis, SpectralDecomposition, StateVector};
use crate::error::{Error, Result};
use crate::phase::C64;

/// Largest dimension accepted by [`eigendecompose_hermitian`].
pub const MAX_DIM: usize = 256;

const HERMITIAN_TOL: f64 = 1e-10;
const OFF_DIAGONAL_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 64;

/// Diagonalizes a Hermitian matrix.
///
/// `eps_deg` is the absolute tolerance for grouping degenerate levels; pass
/// `None` for the default `1e-9 * max |E_n|`. Eigenvalues come back ascending
/// and each eigenvector has its largest-magnitude component (the first one on
/// ties) real and positive.
pub fn eigendecompose_hermitian(
    h: &ComplexMatrix,
    eps_deg: Option<f64>,
) -> Result<SpectralDecomposition> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            found: h.cols(),
        });
    }
    let n = h.rows();
    if n > MAX_DIM {
        return Err(Error::DimensionTooLarge {
            dim: n,
            max: MAX_DIM,
        });
    }
    if let Some(index) = h
        .as_slice()
        .iter()
        .position(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::NonFinite { index });
    }
    let (deviation, row, col) = h.hermitian_defect();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian {
            row,
            col,
            deviation,
        });
    }

    // Work on the exactly Hermitian part.
    let mut a = ComplexMatrix::from_fn(n, n, |i, j| 0.5 * (h[(i, j)] + h[(j, i)].conj()));
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(1.0);

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off < OFF_DIAGONAL_TOL * scale {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::ConvergenceFailure {
                off_norm: off,
                sweeps,
            });
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors: Vec<StateVector> = order
        .iter()
        .enumerate()
        .map(|(k, &i)| fix_phase(v.column(i), k))
        .collect();
    let basis = OrthonormalBasis::from_vectors(vectors)?;
    let max_abs = eigenvalues.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let eps = eps_deg.unwrap_or(1e-9 * max_abs);
    SpectralDecomposition::from_eigenpairs(eigenvalues, basis, eps)
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Zeroes `a[p][q]` by `a <- G^dagger a G`, accumulating `v <- v G`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Pivot negligible against both diagonal entries: rotation would be the identity.
    if r < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = C64::new(0.0, 0.0);
        a[(q, p)] = C64::new(0.0, 0.0);
        return;
    }
    let phase = apq / r; // e^{i phi}
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // G restricted to (p, q): [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
    let g_pp = C64::new(c, 0.0);
    let g_pq = C64::new(s, 0.0);
    let g_qp = -s * phase.conj();
    let g_qq = c * phase.conj();

    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
}

fn fix_phase(mut column: Vec<C64>, k: usize) -> StateVector {
    let max = column.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = column
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-10))
        .unwrap_or(0);
    let z = column[pivot];
    let f = z.conj() / z.norm();
    for x in &mut column {
        *x *= f;
    }
    column[pivot] = C64::new(column[pivot].re, 0.0);
    // Rotations preserve the norm only to rounding; restore it exactly.
    StateVector::normalized(column, k.to_string()).expect("eigenvector has unit norm")
}
