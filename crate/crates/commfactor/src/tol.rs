//! Default tolerances.
//!
//! Two families cover almost everything: structural predicates (is this
//! unitary / positive / a projection) and reconstruction residuals of exact
//! algebraic identities evaluated in f64. Reconstruction tolerances scale
//! with the input norm.

/// Structural predicates: `||x*x - 1||`, `||x - x*||`, block orthogonality.
pub const STRUCTURAL: f64 = 1e-8;

/// Base for reconstruction assertions; use `recon(norm)` for the scaled form.
pub const RECON_BASE: f64 = 1e-9;

/// Reconstruction tolerance scaled by the magnitude of the data.
pub fn recon(norm: f64) -> f64 {
    RECON_BASE * (1.0 + norm)
}

/// Invertibility threshold on the smallest singular value.
pub const SINGULAR: f64 = 1e-12;

/// Quadrature convergence target for the determinant path integral.
pub const QUADRATURE: f64 = 1e-9;

/// Δ-residue below which an element counts as determinant-trivial.
pub const DET_TRIVIAL: f64 = 1e-6;

/// Δ-residue above which numeric noise can be ruled out; between this and
/// [`DET_TRIVIAL`] the pipeline proceeds but records a warning.
pub const DET_NOISE: f64 = 1e-8;

/// Sup-norm reconstruction target for path factorizations (grid 257).
pub const PATH_RECON: f64 = 1e-6;

/// Default grid size for matrix paths.
pub const DEFAULT_GRID: usize = 257;

/// Hard cap on grid refinement.
pub const MAX_GRID: usize = 4097;

/// Per-level slack used by the recursive block factorization in place of the
/// vanishing ε-schedule of the abstract construction.
pub const SELECT_EPS: f64 = 1e-3;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_ordering() {
        assert!(SINGULAR < RECON_BASE);
        assert!(RECON_BASE < STRUCTURAL);
        assert!(DET_NOISE < DET_TRIVIAL);
        assert!(QUADRATURE < PATH_RECON);
    }
}
