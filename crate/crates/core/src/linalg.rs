//! One-sided Jacobi singular value decomposition.
//!
//! Used instead of `nalgebra`'s bidiagonal SVD, which returns inaccurate factors
//! for some rank-deficient inputs; Jacobi keeps null vectors and tiny singular
//! values accurate to working precision.

use nalgebra::DMatrix;

use crate::projective::Scalar;

const MAX_SWEEPS: usize = 80;
const ORTH_TOL: f64 = 1e-15;

/// Right singular vectors and singular values of `a` (`r × c`).
///
/// Returns `(v, sigma)` with `v` unitary `c × c`, columns ordered by descending
/// `sigma` (length `c`; structurally zero values included when `r < c`).
pub fn jacobi_svd<T: Scalar>(a: &DMatrix<T>) -> (DMatrix<T>, Vec<f64>) {
    let (r, c) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<T>::identity(c, c);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..c {
            for q in p + 1..c {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = T::zero();
                for i in 0..r {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    alpha += x.modulus_squared();
                    beta += y.modulus_squared();
                    gamma += x.conjugate() * y;
                }
                let g = gamma.modulus();
                if g == 0.0 || g <= ORTH_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma.unscale(g).conjugate();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let (cs_t, sn_t) = (T::from_real(cs), T::from_real(sn));
                for i in 0..r {
                    let x = w[(i, p)];
                    let y = w[(i, q)] * phase;
                    w[(i, p)] = x * cs_t - y * sn_t;
                    w[(i, q)] = x * sn_t + y * cs_t;
                }
                for i in 0..c {
                    let x = v[(i, p)];
                    let y = v[(i, q)] * phase;
                    v[(i, p)] = x * cs_t - y * sn_t;
                    v[(i, q)] = x * sn_t + y * cs_t;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..c).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut vs = DMatrix::zeros(c, c);
    for (dst, &src) in order.iter().enumerate() {
        vs.set_column(dst, &v.column(src));
    }
    (vs, order.iter().map(|&j| norms[j]).collect())
}

/// Singular values of `a`, descending, `min(r, c)` of them.
pub fn singular_values<T: Scalar>(a: &DMatrix<T>) -> Vec<f64> {
    let (r, c) = a.shape();
    let (_, mut s) = if r >= c { jacobi_svd(a) } else { jacobi_svd(&a.adjoint()) };
    s.truncate(r.min(c));
    s
}
