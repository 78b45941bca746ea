//! Error type shared by all modules.
//!
//! Variants are named after the precondition or numerical failure they
//! report; where a quantitative margin is available it is carried in the
//! variant so callers (and certificates) can show both sides of a failed
//! inequality.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix dimensions do not match: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("matrix is singular or below the invertibility tolerance (min singular value {min_sv:.3e})")]
    Singular { min_sv: f64 },

    #[error("matrix is not normal: ||xx* - x*x|| = {defect:.3e} exceeds {tol:.3e}")]
    NotNormal { defect: f64, tol: f64 },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("matrix is not unitary: ||x*x - 1|| = {defect:.3e}")]
    NotUnitary { defect: f64 },

    #[error("no 2π-shift assignment reaches the requested eigenvalue sum (target {target:.6}, base {base:.6})")]
    BranchInfeasible { target: f64, base: f64 },

    #[error("sample {index} of the path is singular")]
    SingularSample { index: usize },

    #[error("quadrature did not converge: last two refinements differ by {delta:.3e}")]
    NonConvergentQuadrature { delta: f64 },

    #[error("path endpoints differ by {0:.3e}")]
    EndpointMismatch(f64),

    #[error("eigenvalue tracking ambiguous at sample {index}: competing matchings differ by {value_gap:.3e}")]
    TrackingAmbiguous { index: usize, value_gap: f64 },

    #[error("path is not {0} within tolerance")]
    NotStructured(&'static str),

    #[error("parameter {0} outside the admissible range {1}")]
    OutOfRange(f64, &'static str),

    #[error("|alpha| = {0} is not 1 within tolerance")]
    NotUnitModulus(f64),

    #[error("lambda = {0} is not positive")]
    NonPositive(f64),

    #[error("grid too coarse to certify the oscillation/validity bound near sample {index}")]
    ResolutionTooCoarse { index: usize },

    #[error("values do not sum to zero: sum = {0:.3e}")]
    SumNotZero(f64),

    #[error("eigenfunction range violates the open interval (-π/2, π/2): max |φ| = {0:.6}")]
    RangeViolation(f64),

    #[error("diagonal block {which} is singular at level {level}")]
    BlockSingular { which: &'static str, level: usize },

    #[error("Schur condition violated at level {level}: cross term {lhs:.3e} ≥ 1/||(qxq)^-1|| = {rhs:.3e}")]
    SchurConditionViolated { lhs: f64, rhs: f64, level: usize },

    #[error("no admissible projection of rank {rank}: best candidate margin {margin:.3e}")]
    NoAdmissibleProjection { rank: usize, margin: f64 },

    #[error("input is neither positive invertible nor within 1/10 of a unitary (distance {dist:.4})")]
    PreconditionDistance { dist: f64 },

    #[error("matrix is not block-unitriangular: off-pattern mass {0:.3e}")]
    NotUnitriangular(f64),

    #[error("block-scalar spread too small for the graded solve: min ratio gap {0:.3e}")]
    IllConditioned(f64),

    #[error("determinant obstruction: Δ residue {residue:.6e} exceeds tolerance {tol:.1e}")]
    DeterminantObstruction { residue: f64, tol: f64 },

    #[error("strategy precondition violated: {0}")]
    StrategyPreconditionViolated(String),

    #[error("descent schedule infeasible: {0}")]
    ScheduleInfeasible(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
