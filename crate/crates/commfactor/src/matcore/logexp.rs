//! Logarithms, exponentials and square roots via spectral calculus.
//!
//! All of these act on normal inputs (Hermitian or unitary), which is the
//! only place the engine needs them; branch selection for the unitary
//! logarithm is explicit and reported.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::{eig_hermitian, eig_normal_kind, CMatrix, EigKind};
use crate::error::Error;
use crate::tol;
use crate::Result;

/// `e^{i h}` for Hermitian `h`.
pub fn exp_i_hermitian(h: &CMatrix) -> Result<CMatrix> {
    let (d, q) = eig_hermitian(h)?;
    let phases: Vec<Complex64> = d.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
    Ok(CMatrix::diag(&phases).conjugate_by(&q))
}

/// `e^{h}` for Hermitian `h` (positive invertible result).
pub fn exp_hermitian(h: &CMatrix) -> Result<CMatrix> {
    let (d, q) = eig_hermitian(h)?;
    let vals: Vec<Complex64> = d.iter().map(|&t| Complex64::new(t.exp(), 0.0)).collect();
    Ok(CMatrix::diag(&vals).conjugate_by(&q))
}

/// Principal square root of a positive invertible matrix.
pub fn sqrt_positive(h: &CMatrix) -> Result<CMatrix> {
    let (d, q) = eig_hermitian(h)?;
    if d.first().map_or(true, |&lo| lo <= 0.0) {
        return Err(Error::Singular {
            min_sv: d.first().copied().unwrap_or(0.0),
        });
    }
    let vals: Vec<Complex64> = d.iter().map(|&t| Complex64::new(t.sqrt(), 0.0)).collect();
    Ok(CMatrix::diag(&vals).conjugate_by(&q))
}

/// Hermitian logarithm of a positive invertible matrix.
pub fn log_positive(h: &CMatrix) -> Result<CMatrix> {
    let (d, q) = eig_hermitian(h)?;
    if d.first().map_or(true, |&lo| lo <= 0.0) {
        return Err(Error::Singular {
            min_sv: d.first().copied().unwrap_or(0.0),
        });
    }
    let vals: Vec<Complex64> = d.iter().map(|&t| Complex64::new(t.ln(), 0.0)).collect();
    Ok(CMatrix::diag(&vals).conjugate_by(&q))
}

/// Hermitian `a` with `e^{ia} = u`, all eigenvalues on the principal branch.
pub fn principal_log_unitary(u: &CMatrix) -> Result<CMatrix> {
    let (vals, q) = eig_normal_kind(u, EigKind::Unitary)?;
    let phases: Vec<f64> = vals
        .iter()
        .map(|v| {
            let mut a = v.arg();
            if a <= -PI {
                a += 2.0 * PI;
            }
            a
        })
        .collect();
    let a = CMatrix::diag_real(&phases).conjugate_by(&q);
    Ok(a.add(&a.adjoint()).scale(Complex64::new(0.5, 0.0)))
}

/// Hermitian `a` with `e^{ia} = u` and `Σ eigenvalues(a) = target_sum`.
///
/// Each eigenphase starts on the principal branch in (−π, π]; the surplus
/// `(target_sum − Σ principal)/2π` must be an integer, distributed as whole
/// 2π shifts. Positive shifts go to the smallest phases first, negative
/// shifts to the largest, so the spread of the corrected phases stays
/// minimal.
pub fn log_unitary(u: &CMatrix, target_sum: f64) -> Result<CMatrix> {
    let defect = u.adjoint().mul(u).dist_to_identity();
    if defect > tol::STRUCTURAL {
        return Err(Error::NotUnitary { defect });
    }
    let (vals, q) = eig_normal_kind(u, EigKind::Unitary)?;
    let n = u.dim();
    let mut phases: Vec<f64> = vals
        .iter()
        .map(|v| {
            let mut a = v.arg();
            if a <= -PI {
                a += 2.0 * PI;
            }
            a
        })
        .collect();
    let base: f64 = phases.iter().sum();
    let shift = (target_sum - base) / (2.0 * PI);
    let m = shift.round();
    if (shift - m).abs() > 1e-6 {
        return Err(Error::BranchInfeasible {
            target: target_sum,
            base,
        });
    }
    let mut m = m as i64;
    // phases are ascending (eig order); spend shifts from the appropriate end.
    let mut idx_low = 0usize;
    let mut idx_high = n;
    while m > 0 {
        if idx_low >= n {
            return Err(Error::BranchInfeasible {
                target: target_sum,
                base,
            });
        }
        phases[idx_low] += 2.0 * PI;
        idx_low += 1;
        m -= 1;
    }
    while m < 0 {
        if idx_high == 0 {
            return Err(Error::BranchInfeasible {
                target: target_sum,
                base,
            });
        }
        idx_high -= 1;
        phases[idx_high] -= 2.0 * PI;
        m += 1;
    }
    let a = CMatrix::diag_real(&phases).conjugate_by(&q);
    // Exact Hermitian symmetrization of the assembled result.
    Ok(a.add(&a.adjoint()).scale(Complex64::new(0.5, 0.0)))
}
