//! Dense complex matrix numerics.
//!
//! [`CMatrix`] is a plain row-major dense square complex matrix. Everything
//! here is sized for desk dimensions (n ≤ 128): decompositions are O(n³)
//! with no blocking, and all values are immutable once built.

mod eig;
mod logexp;
mod lu;
mod polar;

pub use eig::{eig_hermitian, eig_normal, eig_normal_kind, EigKind};
pub use logexp::{
    exp_hermitian, exp_i_hermitian, log_positive, log_unitary, principal_log_unitary,
    sqrt_positive,
};
pub use lu::LuFactors;
pub use polar::polar;

use num_complex::Complex64;
use std::fmt;

use crate::error::Error;
use crate::tol;
use crate::Result;

pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense square complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimMismatch(dim, row.len()));
            }
            for (j, z) in row.iter().enumerate() {
                m[(i, j)] = *z;
            }
        }
        Ok(m)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diag(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, z) in values.iter().enumerate() {
            m[(i, i)] = *z;
        }
        m
    }

    pub fn diag_real(values: &[f64]) -> Self {
        Self::diag(&values.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch in mul");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row_k = &other.entries[k * n..(k + 1) * n];
                let row_out = &mut out.entries[i * n..(i + 1) * n];
                for (o, b) in row_out.iter_mut().zip(row_k.iter()) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim);
        CMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim);
        CMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, z: Complex64) -> CMatrix {
        CMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(|a| a * z).collect(),
        }
    }

    /// `self * v` for a column vector.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v.iter())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Operator (spectral) norm: largest singular value.
    pub fn op_norm(&self) -> f64 {
        match self.dim {
            0 => 0.0,
            1 => self.entries[0].norm(),
            2 => {
                let (smax, _) = singular_values_2x2(self);
                smax
            }
            _ => {
                // λ_max(x*x), computed via the Hermitian eigensolver.
                let g = self.adjoint().mul(self);
                let evs = eig::hermitian_eigenvalues(&g);
                evs.last().copied().unwrap_or(0.0).max(0.0).sqrt()
            }
        }
    }

    /// Smallest singular value.
    pub fn min_singular_value(&self) -> f64 {
        match self.dim {
            0 => 0.0,
            1 => self.entries[0].norm(),
            2 => {
                let (_, smin) = singular_values_2x2(self);
                smin
            }
            _ => {
                let g = self.adjoint().mul(self);
                let evs = eig::hermitian_eigenvalues(&g);
                evs.first().copied().unwrap_or(0.0).max(0.0).sqrt()
            }
        }
    }

    /// `||self - 1||` in operator norm.
    pub fn dist_to_identity(&self) -> f64 {
        self.sub(&CMatrix::identity(self.dim)).op_norm()
    }

    /// Condition number σ_max/σ_min.
    pub fn condition_number(&self) -> f64 {
        let smin = self.min_singular_value();
        if smin == 0.0 {
            f64::INFINITY
        } else {
            self.op_norm() / smin
        }
    }

    pub fn determinant(&self) -> Complex64 {
        lu::determinant(self)
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        lu::inverse(self)
    }

    /// Multiplicative commutator `x y x⁻¹ y⁻¹`.
    pub fn commutator(&self, y: &CMatrix) -> Result<CMatrix> {
        if self.dim != y.dim {
            return Err(Error::DimMismatch(self.dim, y.dim));
        }
        let xi = self.inverse()?;
        let yi = y.inverse()?;
        Ok(self.mul(y).mul(&xi).mul(&yi))
    }

    /// Conjugation `q self q*`.
    pub fn conjugate_by(&self, q: &CMatrix) -> CMatrix {
        q.mul(self).mul(&q.adjoint())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.adjoint().mul(self).dist_to_identity() <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.sub(&self.adjoint()).op_norm() <= tol * (1.0 + self.op_norm())
    }

    pub fn is_positive_invertible(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol) {
            return false;
        }
        let evs = eig::hermitian_eigenvalues(self);
        evs.first().map_or(false, |&lo| lo > tol)
    }

    pub fn is_projection(&self, tol: f64) -> bool {
        let idem = self.mul(self).sub(self).op_norm();
        let herm = self.sub(&self.adjoint()).op_norm();
        idem + herm <= tol
    }

    pub fn is_invertible(&self, tol: f64) -> bool {
        self.min_singular_value() > tol
    }

    /// Submatrix on the given (row, column) index set.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CMatrix {
        assert_eq!(rows.len(), cols.len());
        let k = rows.len();
        let mut m = CMatrix::zeros(k);
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }

    /// Embed a smaller matrix at the diagonal offset, identity elsewhere.
    pub fn embed_at(dim: usize, offset: usize, block: &CMatrix) -> CMatrix {
        assert!(offset + block.dim() <= dim);
        let mut m = CMatrix::identity(dim);
        for i in 0..block.dim() {
            for j in 0..block.dim() {
                m[(offset + i, offset + j)] = block[(i, j)];
            }
        }
        m
    }

    /// Direct sum of square blocks.
    pub fn block_diag(blocks: &[CMatrix]) -> CMatrix {
        let dim: usize = blocks.iter().map(|b| b.dim()).sum();
        let mut m = CMatrix::zeros(dim);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.dim() {
                for j in 0..b.dim() {
                    m[(off + i, off + j)] = b[(i, j)];
                }
            }
            off += b.dim();
        }
        m
    }

    /// Permutation matrix `P` with `P e_j = e_{perm[j]}`, i.e.
    /// `P[(perm[j], j)] = 1`.
    pub fn permutation(perm: &[usize]) -> CMatrix {
        let n = perm.len();
        let mut m = CMatrix::zeros(n);
        for (j, &i) in perm.iter().enumerate() {
            m[(i, j)] = ONE;
        }
        m
    }
}

/// Closed-form singular values of a 2×2 complex matrix, (σ_max, σ_min).
fn singular_values_2x2(m: &CMatrix) -> (f64, f64) {
    // Eigenvalues of the 2×2 Gram matrix.
    let a = m[(0, 0)].norm_sqr() + m[(1, 0)].norm_sqr();
    let d = m[(0, 1)].norm_sqr() + m[(1, 1)].norm_sqr();
    let b = m[(0, 0)].conj() * m[(0, 1)] + m[(1, 0)].conj() * m[(1, 1)];
    let tr = a + d;
    let disc = ((a - d) * (a - d) + 4.0 * b.norm_sqr()).max(0.0).sqrt();
    let hi = 0.5 * (tr + disc);
    let lo = 0.5 * (tr - disc);
    (hi.max(0.0).sqrt(), lo.max(0.0).sqrt())
}

/// Orthogonal projection with its rank.
///
/// Rank equals the rounded trace; Murray–von Neumann equivalence in `M_n`
/// reduces to equality of ranks, which is how `p ∼ q` is tested here.
#[derive(Debug, Clone)]
pub struct Projection {
    matrix: CMatrix,
    rank: usize,
}

impl Projection {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_projection(tol::STRUCTURAL) {
            return Err(Error::InvalidInput(
                "matrix is not an orthogonal projection within tolerance".into(),
            ));
        }
        let tr = matrix.trace().re;
        let rank = tr.round() as usize;
        if (tr - rank as f64).abs() > tol::STRUCTURAL * matrix.dim() as f64 {
            return Err(Error::InvalidInput(format!(
                "projection trace {tr} is not close to an integer"
            )));
        }
        Ok(Projection { matrix, rank })
    }

    /// Coordinate projection onto `range..range+rank` in dimension `dim`.
    pub fn coordinate(dim: usize, offset: usize, rank: usize) -> Self {
        let mut m = CMatrix::zeros(dim);
        for i in offset..offset + rank {
            m[(i, i)] = ONE;
        }
        Projection { matrix: m, rank }
    }

    /// `q p q*` for unitary `q` (stays a projection of the same rank).
    pub fn conjugate_by(&self, q: &CMatrix) -> Self {
        Projection {
            matrix: self.matrix.conjugate_by(q),
            rank: self.rank,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Murray–von Neumann equivalence (equal rank in `M_n`).
    pub fn equivalent(&self, other: &Projection) -> bool {
        self.rank == other.rank
    }

    pub fn complement(&self) -> Projection {
        Projection {
            matrix: CMatrix::identity(self.dim()).sub(&self.matrix),
            rank: self.dim() - self.rank,
        }
    }
}

/// Ordered orthogonal projections summing to the identity.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    blocks: Vec<Projection>,
    total_dim: usize,
}

impl BlockDecomposition {
    pub fn new(blocks: Vec<Projection>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("empty block decomposition".into()));
        }
        let total_dim = blocks[0].dim();
        let mut sum = CMatrix::zeros(total_dim);
        let mut ranks = 0usize;
        for (i, p) in blocks.iter().enumerate() {
            if p.dim() != total_dim {
                return Err(Error::DimMismatch(total_dim, p.dim()));
            }
            ranks += p.rank();
            sum = sum.add(p.matrix());
            for q in blocks.iter().skip(i + 1) {
                let cross = p.matrix().mul(q.matrix()).op_norm();
                if cross > tol::STRUCTURAL {
                    return Err(Error::InvalidInput(format!(
                        "blocks {i} and a later block are not orthogonal: ||p_i p_j|| = {cross:.3e}"
                    )));
                }
            }
        }
        if ranks != total_dim || sum.dist_to_identity() > tol::STRUCTURAL * total_dim as f64 {
            return Err(Error::InvalidInput(format!(
                "block ranks sum to {ranks}, expected {total_dim}"
            )));
        }
        Ok(BlockDecomposition { blocks, total_dim })
    }

    /// Coordinate decomposition with the given consecutive ranks.
    pub fn coordinate(ranks: &[usize]) -> Self {
        let total_dim: usize = ranks.iter().sum();
        let mut blocks = Vec::with_capacity(ranks.len());
        let mut off = 0;
        for &r in ranks {
            blocks.push(Projection::coordinate(total_dim, off, r));
            off += r;
        }
        BlockDecomposition { blocks, total_dim }
    }

    pub fn blocks(&self) -> &[Projection] {
        &self.blocks
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.blocks.iter().map(|p| p.rank()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn commutator_of_identity_is_identity() {
        let one = CMatrix::identity(3);
        let y = sample::random_invertible(3, 7);
        let k = one.commutator(&y).unwrap();
        assert!(k.dist_to_identity() < 1e-12);
    }

    #[test]
    fn commutator_of_commuting_diagonals_is_identity() {
        let x = CMatrix::diag(&[c(2.0, 0.0), c(0.0, 1.0)]);
        let y = CMatrix::diag(&[c(0.5, 0.5), c(3.0, 0.0)]);
        let k = x.commutator(&y).unwrap();
        assert!(k.dist_to_identity() < 1e-14);
    }

    #[test]
    fn shear_commutator_hand_value() {
        // x = [[1,1],[0,1]], y = [[1,0],[1,1]]:
        // xy = [[2,1],[1,1]], x⁻¹y⁻¹ = [[1,-1],[0,1]][[1,0],[-1,1]] = [[2,-1],[-1,1]]
        // (x,y) = [[2,1],[1,1]]·[[2,-1],[-1,1]] = [[3,-1],[1,0]]
        let x = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]])
            .unwrap();
        let y = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(1.0, 0.0), c(1.0, 0.0)]])
            .unwrap();
        let k = x.commutator(&y).unwrap();
        let expect = CMatrix::from_rows(&[
            vec![c(3.0, 0.0), c(-1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        assert!(k.sub(&expect).op_norm() < 1e-12, "{k:?}");
        assert!((k.determinant() - ONE).norm() < 1e-12);
    }

    #[test]
    fn commutator_determinant_one() {
        for seed in 0..5 {
            let x = sample::random_invertible(4, seed);
            let y = sample::random_invertible(4, seed + 100);
            let k = x.commutator(&y).unwrap();
            assert!((k.determinant() - ONE).norm() < 1e-10);
        }
    }

    #[test]
    fn unitary_conjugation_is_isometric() {
        for seed in 0..8 {
            let q = sample::random_unitary(5, seed);
            let x = sample::random_invertible(5, seed + 50);
            let d1 = x.dist_to_identity();
            let d2 = x.conjugate_by(&q).dist_to_identity();
            assert!((d1 - d2).abs() <= 1e-12 * (1.0 + d1), "{d1} vs {d2}");
        }
    }

    #[test]
    fn op_norm_of_diagonal() {
        let m = CMatrix::diag(&[c(3.0, 0.0), c(0.0, -4.0), c(1.0, 0.0)]);
        assert!((m.op_norm() - 4.0).abs() < 1e-12);
        assert!((m.min_singular_value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_rank_from_trace() {
        let p = Projection::coordinate(5, 1, 2);
        assert_eq!(p.rank(), 2);
        assert!(p.matrix().is_projection(1e-14));
        let q = sample::random_unitary(5, 3);
        let pc = p.conjugate_by(&q);
        assert_eq!(pc.rank(), 2);
        assert!(Projection::new(pc.matrix().clone()).is_ok());
    }

    #[test]
    fn block_decomposition_invariants() {
        let d = BlockDecomposition::coordinate(&[2, 3, 3]);
        assert_eq!(d.total_dim(), 8);
        assert_eq!(d.ranks(), vec![2, 3, 3]);
        // Conjugated decomposition still passes validation.
        let q = sample::random_unitary(8, 11);
        let blocks: Vec<Projection> = d.blocks().iter().map(|p| p.conjugate_by(&q)).collect();
        assert!(BlockDecomposition::new(blocks).is_ok());
    }

    #[test]
    fn permutation_matrix_acts_on_basis() {
        // perm[j] = destination of e_j.
        let p = CMatrix::permutation(&[2, 0, 1]);
        let v = p.mul_vec(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!((v[2] - ONE).norm() < 1e-15);
        assert!(p.is_unitary(1e-15));
    }
}
