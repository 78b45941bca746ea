//! Polar decomposition `x = u·h`, `u` unitary, `h = (x*x)^{1/2}` positive.

use super::{eig_hermitian, CMatrix};
use crate::error::Error;
use crate::tol;
use crate::Result;
use num_complex::Complex64;

/// Polar decomposition of an invertible matrix.
pub fn polar(x: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let g = x.adjoint().mul(x);
    let (d, q) = eig_hermitian(&g)?;
    let min = d.first().copied().unwrap_or(0.0);
    if min <= tol::SINGULAR {
        return Err(Error::Singular {
            min_sv: min.max(0.0).sqrt(),
        });
    }
    let sqrt_vals: Vec<Complex64> = d.iter().map(|&t| Complex64::new(t.sqrt(), 0.0)).collect();
    let inv_sqrt: Vec<Complex64> = d
        .iter()
        .map(|&t| Complex64::new(1.0 / t.sqrt(), 0.0))
        .collect();
    let h = CMatrix::diag(&sqrt_vals).conjugate_by(&q);
    let h_inv = CMatrix::diag(&inv_sqrt).conjugate_by(&q);
    let mut u = x.mul(&h_inv);
    // One Newton touch-up keeps u*u - 1 at machine precision even when x is
    // moderately ill-conditioned.
    let correction = u.adjoint().mul(&u).dist_to_identity();
    if correction > 1e-12 {
        let three_halves = CMatrix::identity(x.dim()).scale(Complex64::new(1.5, 0.0));
        let half_uu = u.adjoint().mul(&u).scale(Complex64::new(0.5, 0.0));
        u = u.mul(&three_halves.sub(&half_uu));
    }
    Ok((u, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    #[test]
    fn unitary_input_gives_trivial_h() {
        let q = sample::random_unitary(4, 5);
        let (u, h) = polar(&q).unwrap();
        assert!(h.dist_to_identity() < 1e-10);
        assert!(u.sub(&q).op_norm() < 1e-10);
    }

    #[test]
    fn positive_diagonal_input() {
        let x = CMatrix::diag_real(&[2.0, 0.5]);
        let (u, h) = polar(&x).unwrap();
        assert!(u.dist_to_identity() < 1e-12);
        assert!(h.sub(&x).op_norm() < 1e-12);
    }

    #[test]
    fn random_invertible_residuals() {
        let x = sample::random_invertible(4, 99);
        let (u, h) = polar(&x).unwrap();
        assert!(u.mul(&h).sub(&x).op_norm() <= 1e-10 * (1.0 + x.op_norm()));
        assert!(u.adjoint().mul(&u).dist_to_identity() <= 1e-10);
        assert!(h.is_positive_invertible(1e-10));
    }

    #[test]
    fn singular_rejected() {
        let mut x = CMatrix::identity(3);
        x[(2, 2)] = Complex64::new(0.0, 0.0);
        assert!(matches!(polar(&x), Err(Error::Singular { .. })));
    }
}
