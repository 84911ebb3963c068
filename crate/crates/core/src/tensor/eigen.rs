//! Minimal eigenvalue of a Hermitian matrix via cyclic Jacobi rotations.
//!
//! A Hermitian H = A + iB (A symmetric, B antisymmetric) embeds into the
//! real symmetric 2n × 2n matrix ⎡A −B⎤⎣B A⎦ whose spectrum is that of H
//! with every eigenvalue doubled, so the smallest diagonal entry after
//! diagonalization is exactly the quantity positivity checks need. Jacobi
//! is quadratically convergent and unconditionally stable, which is all
//! that is required for the small (≤ 8 × 8) matrices this crate verifies.

use num_complex::Complex64;

/// Smallest eigenvalue of a Hermitian `dim` × `dim` matrix given row-major.
///
/// Hermiticity is the caller's responsibility (the density-matrix
/// constructor already enforces it); the symmetric embedding below quietly
/// symmetrizes any residual rounding asymmetry.
pub(crate) fn min_eigenvalue_hermitian(entries: &[Complex64], dim: usize) -> f64 {
    let n = 2 * dim;
    let mut m = vec![0.0f64; n * n];
    for r in 0..dim {
        for c in 0..dim {
            let z = entries[r * dim + c];
            m[r * n + c] = z.re;
            m[(r + dim) * n + (c + dim)] = z.re;
            m[r * n + (c + dim)] = -z.im;
            m[(r + dim) * n + c] = z.im;
        }
    }
    // Symmetrize to guard against rounding in the input.
    for r in 0..n {
        for c in (r + 1)..n {
            let avg = 0.5 * (m[r * n + c] + m[c * n + r]);
            m[r * n + c] = avg;
            m[c * n + r] = avg;
        }
    }
    jacobi_min_eigenvalue(&mut m, n)
}

/// Cyclic Jacobi on a real symmetric matrix, returning the smallest
/// eigenvalue. Destroys the input buffer.
fn jacobi_min_eigenvalue(m: &mut [f64], n: usize) -> f64 {
    const MAX_SWEEPS: usize = 64;
    const OFF_TOL: f64 = 1e-14;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for r in 0..n {
            for c in (r + 1)..n {
                off += 2.0 * m[r * n + c] * m[r * n + c];
            }
        }
        if off.sqrt() < OFF_TOL {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() < OFF_TOL / (n as f64) {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                // Smaller-angle root for stability.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = cos * mkp - sin * mkq;
                    m[k * n + q] = sin * mkp + cos * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = cos * mpk - sin * mqk;
                    m[q * n + k] = sin * mpk + cos * mqk;
                }
            }
        }
    }
    (0..n).map(|k| m[k * n + k]).fold(f64::INFINITY, f64::min)
}
