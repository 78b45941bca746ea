//! Factorization containers with certificates.
//!
//! A factorization is an ordered list of factor pairs whose commutators
//! multiply back to the input (times an optional residual). The certificate
//! records what an independent checker must reproduce: the reconstruction
//! error, the count, and the largest factor distance to the identity.

use crate::matcore::CMatrix;
use crate::pathfun::{self, MatrixPath};
use crate::su2fact::CommutatorPair;
use crate::Result;

/// Re-verifiable summary of a factorization.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub recon_err: f64,
    pub count: usize,
    pub max_factor_dist_to_1: f64,
    pub strategy: String,
    /// Largest similarity condition number among invertible kernels, when any
    /// were used.
    pub max_condition: Option<f64>,
    /// Δ-residue in the warn band (proceeded despite nonzero residue).
    pub obstruction_warning: Option<f64>,
}

impl Certificate {
    pub fn new(strategy: &str) -> Self {
        Certificate {
            recon_err: 0.0,
            count: 0,
            max_factor_dist_to_1: 0.0,
            strategy: strategy.to_string(),
            max_condition: None,
            obstruction_warning: None,
        }
    }
}

/// Matrix-valued factorization.
#[derive(Debug, Clone)]
pub struct MatrixFactorization {
    pub pairs: Vec<CommutatorPair>,
    pub residual: Option<CMatrix>,
    pub certificate: Certificate,
}

impl MatrixFactorization {
    /// Re-multiply all commutators (times the residual).
    pub fn product(&self) -> Result<CMatrix> {
        let dim = self
            .pairs
            .first()
            .map(|p| p.x.dim())
            .or_else(|| self.residual.as_ref().map(|r| r.dim()))
            .unwrap_or(0);
        let mut acc = CMatrix::identity(dim);
        for p in &self.pairs {
            acc = acc.mul(&p.value()?);
        }
        if let Some(r) = &self.residual {
            acc = acc.mul(r);
        }
        Ok(acc)
    }

    /// Populate the certificate against the intended target.
    pub fn certify(&mut self, target: &CMatrix) -> Result<()> {
        let prod = if self.pairs.is_empty() && self.residual.is_none() {
            CMatrix::identity(target.dim())
        } else {
            self.product()?
        };
        self.certificate.recon_err = prod.sub(target).op_norm();
        self.certificate.count = self.pairs.len();
        self.certificate.max_factor_dist_to_1 = self
            .pairs
            .iter()
            .map(|p| p.max_dist_to_1())
            .fold(0.0, f64::max);
        Ok(())
    }
}

/// Path-valued factor pair.
#[derive(Debug, Clone)]
pub struct PathPair {
    pub x: MatrixPath,
    pub y: MatrixPath,
    pub norm_x_to_1: f64,
    pub norm_y_to_1: f64,
}

impl PathPair {
    pub fn new(x: MatrixPath, y: MatrixPath) -> Self {
        let norm_x_to_1 = x.max_dist_to_identity();
        let norm_y_to_1 = y.max_dist_to_identity();
        PathPair {
            x,
            y,
            norm_x_to_1,
            norm_y_to_1,
        }
    }

    pub fn identity(dim: usize, grid: Vec<f64>) -> Self {
        Self::new(
            MatrixPath::identity(dim, grid.clone()),
            MatrixPath::identity(dim, grid),
        )
    }

    pub fn value(&self) -> Result<MatrixPath> {
        pathfun::path_commutator(&self.x, &self.y)
    }

    pub fn max_dist_to_1(&self) -> f64 {
        self.norm_x_to_1.max(self.norm_y_to_1)
    }
}

/// Path-valued factorization.
#[derive(Debug, Clone)]
pub struct PathFactorization {
    pub pairs: Vec<PathPair>,
    pub residual: Option<MatrixPath>,
    pub certificate: Certificate,
}

impl PathFactorization {
    pub fn product(&self) -> Result<MatrixPath> {
        let (dim, grid) = match (self.pairs.first(), &self.residual) {
            (Some(p), _) => (p.x.dim(), p.x.grid().to_vec()),
            (None, Some(r)) => (r.dim(), r.grid().to_vec()),
            (None, None) => (0, vec![0.0, 1.0]),
        };
        let mut acc = MatrixPath::identity(dim, grid);
        for p in &self.pairs {
            acc = pathfun::path_multiply(&acc, &p.value()?)?;
        }
        if let Some(r) = &self.residual {
            acc = pathfun::path_multiply(&acc, r)?;
        }
        Ok(acc)
    }

    pub fn certify(&mut self, target: &MatrixPath) -> Result<()> {
        let prod = if self.pairs.is_empty() && self.residual.is_none() {
            MatrixPath::identity(target.dim(), target.grid().to_vec())
        } else {
            self.product()?
        };
        self.certificate.recon_err = pathfun::sup_distance(&prod, target)?;
        self.certificate.count = self.pairs.len();
        self.certificate.max_factor_dist_to_1 = self
            .pairs
            .iter()
            .map(|p| p.max_dist_to_1())
            .fold(0.0, f64::max);
        Ok(())
    }
}
