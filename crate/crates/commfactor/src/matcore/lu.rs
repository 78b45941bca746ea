//! LU decomposition with partial pivoting: determinant, solve, inverse.

use num_complex::Complex64;

use super::{CMatrix, ONE, ZERO};
use crate::error::Error;
use crate::Result;

/// Packed LU factors of a square matrix.
pub struct LuFactors {
    lu: CMatrix,
    piv: Vec<usize>,
    sign: f64,
    singular: bool,
}

pub fn factor(a: &CMatrix) -> LuFactors {
    let n = a.dim();
    let mut lu = a.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut singular = false;

    for k in 0..n {
        let mut max_row = k;
        let mut max_val = lu[(k, k)].norm();
        for i in k + 1..n {
            let v = lu[(i, k)].norm();
            if v > max_val {
                max_val = v;
                max_row = i;
            }
        }
        if max_val == 0.0 {
            singular = true;
            continue;
        }
        if max_row != k {
            piv.swap(k, max_row);
            sign = -sign;
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(max_row, j)];
                lu[(max_row, j)] = tmp;
            }
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let m = lu[(i, k)] / pivot;
            lu[(i, k)] = m;
            if m != ZERO {
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] -= m * v;
                }
            }
        }
    }
    LuFactors {
        lu,
        piv,
        sign,
        singular,
    }
}

impl LuFactors {
    pub fn determinant(&self) -> Complex64 {
        if self.singular {
            return ZERO;
        }
        let mut det = Complex64::new(self.sign, 0.0);
        for i in 0..self.lu.dim() {
            det *= self.lu[(i, i)];
        }
        det
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.lu.dim();
        if self.singular {
            return Err(Error::Singular { min_sv: 0.0 });
        }
        // Apply the row permutation, then forward/back substitution.
        let mut x: Vec<Complex64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            let d = self.lu[(i, i)];
            if d.norm() == 0.0 {
                return Err(Error::Singular { min_sv: 0.0 });
            }
            x[i] = s / d;
        }
        Ok(x)
    }
}

pub fn determinant(a: &CMatrix) -> Complex64 {
    factor(a).determinant()
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    let n = a.dim();
    let f = factor(a);
    if f.singular {
        return Err(Error::Singular { min_sv: 0.0 });
    }
    let mut out = CMatrix::zeros(n);
    let mut e = vec![ZERO; n];
    for j in 0..n {
        e[j] = ONE;
        let col = f.solve(&e)?;
        e[j] = ZERO;
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    #[test]
    fn determinant_of_triangular() {
        let mut m = CMatrix::identity(3);
        m[(0, 0)] = Complex64::new(3.0, 0.0);
        m[(1, 1)] = Complex64::new(0.0, 5.0);
        m[(2, 2)] = Complex64::new(2.0, 0.0);
        m[(0, 2)] = Complex64::new(9.0, -4.0);
        let d = determinant(&m);
        assert!((d - Complex64::new(0.0, 30.0)).norm() < 1e-12);
    }

    #[test]
    fn inverse_roundtrip() {
        for seed in 0..6 {
            let a = sample::random_invertible(6, seed);
            let ai = inverse(&a).unwrap();
            assert!(a.mul(&ai).dist_to_identity() < 1e-10);
            assert!(ai.mul(&a).dist_to_identity() < 1e-10);
        }
    }

    #[test]
    fn determinant_is_multiplicative() {
        let a = sample::random_invertible(5, 1);
        let b = sample::random_invertible(5, 2);
        let d1 = determinant(&a.mul(&b));
        let d2 = determinant(&a) * determinant(&b);
        assert!((d1 - d2).norm() < 1e-9 * d2.norm());
    }

    #[test]
    fn singular_matrix_reports() {
        let mut m = CMatrix::zeros(3);
        m[(0, 1)] = ONE;
        assert!(inverse(&m).is_err());
        assert_eq!(determinant(&m), ZERO);
    }
}
