//! Eigendecomposition for Hermitian and normal matrices.
//!
//! Hermitian: Householder tridiagonalization followed by implicit QL with
//! Wilkinson shifts (the classic tql2 scheme, carried out on the real
//! symmetric tridiagonal form obtained after phase-normalizing the
//! off-diagonal).
//!
//! Normal: split `x = h1 + i h2` into commuting Hermitian parts, diagonalize
//! `h1`, then refine every degenerate `h1`-cluster with the compression of
//! `h2`. Eigenvalues are recovered as Rayleigh quotients and the residual
//! `||xQ - QΛ||` is checked before returning.

use num_complex::Complex64;

use super::{CMatrix, ONE, ZERO};
use crate::error::Error;
use crate::tol;
use crate::Result;

const MAX_QL_ITER: usize = 60;

/// Requested eigenvalue ordering for [`eig_normal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigKind {
    /// Detect: Hermitian input sorts ascending-real, otherwise by argument.
    Auto,
    /// Ascending real part (input treated as Hermitian).
    Hermitian,
    /// Ascending principal argument in (−π, π], ties by ascending imaginary
    /// part then original index.
    Unitary,
}

/// Hermitian eigendecomposition, eigenvalues ascending.
///
/// Returns `(eigenvalues, q)` with `a = q · diag(λ) · q*`.
pub fn eig_hermitian(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let (d, z) = tridiag_ql(a, true)?;
    Ok((d, z.expect("vectors requested")))
}

/// Eigenvalues only (ascending); skips eigenvector accumulation.
pub(crate) fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    match tridiag_ql(a, false) {
        Ok((d, _)) => d,
        // Non-convergence on a Hermitian matrix is effectively unreachable;
        // fall back to the Frobenius bound so norms stay finite.
        Err(_) => {
            let f = a.frobenius_norm();
            vec![-f, f]
        }
    }
}

/// Householder tridiagonalization + implicit QL. `with_vectors` controls
/// whether the transform is accumulated.
fn tridiag_ql(a: &CMatrix, with_vectors: bool) -> Result<(Vec<f64>, Option<CMatrix>)> {
    let n = a.dim();
    if n == 0 {
        return Ok((vec![], Some(CMatrix::identity(0))));
    }
    if n == 1 {
        return Ok((vec![a[(0, 0)].re], Some(CMatrix::identity(1))));
    }

    let mut t = a.clone();
    // Symmetrize: the algorithm assumes exact Hermitian data.
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (t[(i, j)] + t[(j, i)].conj());
            t[(i, j)] = avg;
            t[(j, i)] = avg.conj();
        }
        let di = t[(i, i)].re;
        t[(i, i)] = Complex64::new(di, 0.0);
    }

    let mut q = if with_vectors {
        Some(CMatrix::identity(n))
    } else {
        None
    };

    // Householder reduction to Hermitian tridiagonal.
    let mut u = vec![ZERO; n];
    let mut p = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1; // size of the trailing column below the diagonal
        let mut nrm2 = 0.0;
        for i in 0..m {
            nrm2 += t[(k + 1 + i, k)].norm_sqr();
        }
        let nrm = nrm2.sqrt();
        if nrm <= f64::MIN_POSITIVE {
            continue;
        }
        let x0 = t[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        // u = x + phase·||x||·e1 reflects x onto −phase·||x||·e1.
        for i in 0..m {
            u[i] = t[(k + 1 + i, k)];
        }
        u[0] += phase * nrm;
        let unorm2: f64 = u[..m].iter().map(|z| z.norm_sqr()).sum();
        if unorm2 <= f64::MIN_POSITIVE {
            continue;
        }
        let tau = 2.0 / unorm2;

        // p = τ · B · u on the trailing block B = t[k+1.., k+1..].
        for i in 0..m {
            let mut s = ZERO;
            for j in 0..m {
                s += t[(k + 1 + i, k + 1 + j)] * u[j];
            }
            p[i] = s * tau;
        }
        // w = p − (τ/2)(u*p) u
        let upu: Complex64 = u[..m]
            .iter()
            .zip(p[..m].iter())
            .map(|(ui, pi)| ui.conj() * pi)
            .sum();
        let kappa = upu * (tau / 2.0);
        for i in 0..m {
            p[i] -= kappa * u[i];
        }
        // B ← B − w u* − u w*
        for i in 0..m {
            for j in 0..m {
                let delta = p[i] * u[j].conj() + u[i] * p[j].conj();
                t[(k + 1 + i, k + 1 + j)] -= delta;
            }
        }
        // Column k and row k.
        t[(k + 1, k)] = -phase * nrm;
        t[(k, k + 1)] = (-phase * nrm).conj();
        for i in 1..m {
            t[(k + 1 + i, k)] = ZERO;
            t[(k, k + 1 + i)] = ZERO;
        }
        // Q ← Q (I − τ u u*)
        if let Some(q) = q.as_mut() {
            for r in 0..n {
                let mut s = ZERO;
                for j in 0..m {
                    s += q[(r, k + 1 + j)] * u[j];
                }
                s *= tau;
                for j in 0..m {
                    let uj = u[j].conj();
                    q[(r, k + 1 + j)] -= s * uj;
                }
            }
        }
    }

    // Phase-normalize the off-diagonal to real non-negative.
    let mut d: Vec<f64> = (0..n).map(|i| t[(i, i)].re).collect();
    let mut e = vec![0.0f64; n];
    let mut scale_prev = ONE;
    for i in 1..n {
        let ei = t[(i, i - 1)];
        let mag = ei.norm();
        let scale_i = if mag > 0.0 {
            (ei / mag) * scale_prev
        } else {
            scale_prev
        };
        e[i - 1] = mag; // subdiagonal connecting d[i-1], d[i], stored shifted
        if let Some(q) = q.as_mut() {
            if scale_i != ONE {
                for r in 0..n {
                    q[(r, i)] = q[(r, i)] * scale_i;
                }
            }
        }
        scale_prev = scale_i;
    }
    e[n - 1] = 0.0;

    // Implicit QL with Wilkinson-style shift (tql2).
    let eps = f64::EPSILON;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITER {
                return Err(Error::NoConvergence { iterations: iter });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let mut s = 1.0;
            let mut c = 1.0;
            let mut pshift = 0.0;
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= pshift;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - pshift;
                r = (d[i] - g) * s + 2.0 * c * b;
                pshift = s * r;
                d[i + 1] = g + pshift;
                g = c * r - b;
                if let Some(q) = q.as_mut() {
                    for k in 0..n {
                        f = q[(k, i + 1)].re;
                        let fi = q[(k, i + 1)].im;
                        let qre = q[(k, i)].re;
                        let qim = q[(k, i)].im;
                        q[(k, i + 1)] = Complex64::new(s * qre + c * f, s * qim + c * fi);
                        q[(k, i)] = Complex64::new(c * qre - s * f, c * qim - s * fi);
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= pshift;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // Sort ascending, carrying columns.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let d_sorted: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let q_sorted = q.map(|q| {
        let mut out = CMatrix::zeros(n);
        for (newj, &oldj) in order.iter().enumerate() {
            for i in 0..n {
                out[(i, newj)] = q[(i, oldj)];
            }
        }
        out
    });
    Ok((d_sorted, q_sorted))
}

/// Eigendecomposition of a normal matrix with the documented ordering.
///
/// Returns `(eigenvalues, q)` with `x ≈ q · diag(λ) · q*`, `q` unitary.
pub fn eig_normal(x: &CMatrix) -> Result<(Vec<Complex64>, CMatrix)> {
    eig_normal_kind(x, EigKind::Auto)
}

pub fn eig_normal_kind(x: &CMatrix, kind: EigKind) -> Result<(Vec<Complex64>, CMatrix)> {
    let n = x.dim();
    let scale = x.op_norm().max(1e-300);
    let xadj = x.adjoint();
    let defect = x.mul(&xadj).sub(&xadj.mul(x)).op_norm();
    let ntol = tol::STRUCTURAL * scale * scale;
    if defect > ntol {
        return Err(Error::NotNormal { defect, tol: ntol });
    }

    let hermitian_input = x.sub(&xadj).op_norm() <= tol::STRUCTURAL * (1.0 + scale);
    if hermitian_input && kind != EigKind::Unitary {
        let h = x.add(&xadj).scale(Complex64::new(0.5, 0.0));
        let (d, q) = eig_hermitian(&h)?;
        let vals: Vec<Complex64> = d.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        return Ok((vals, q));
    }

    let h1 = x.add(&xadj).scale(Complex64::new(0.5, 0.0));
    let h2 = x.sub(&xadj).scale(Complex64::new(0.0, -0.5));
    let (lam1, q0) = eig_hermitian(&h1)?;

    // Cluster-tolerance ladder: refine degenerate h1-clusters with h2; if the
    // residual shows clusters were split too finely, coarsen and retry.
    let base = f64::EPSILON * scale * (n as f64);
    let target = tol::RECON_BASE * (1.0 + scale) * (n as f64).sqrt();
    let mut best: Option<(f64, Vec<Complex64>, CMatrix)> = None;
    for ladder in [100.0, 1e6, 1e9] {
        let ctol = base * ladder;
        let (vals, q) = refine_clusters(x, &h2, &lam1, &q0, ctol)?;
        let residual = residual_norm(x, &vals, &q);
        if best.as_ref().map_or(true, |(r, _, _)| residual < *r) {
            best = Some((residual, vals, q));
        }
        if residual <= target {
            break;
        }
    }
    let (residual, vals, q) = best.unwrap();
    if residual > target * 1e3 {
        return Err(Error::NoConvergence { iterations: 0 });
    }

    let (vals, q) = sort_eigenpairs(vals, q, kind, hermitian_input);
    Ok((vals, q))
}

fn refine_clusters(
    x: &CMatrix,
    h2: &CMatrix,
    lam1: &[f64],
    q0: &CMatrix,
    ctol: f64,
) -> Result<(Vec<Complex64>, CMatrix)> {
    let n = x.dim();
    let mut q = q0.clone();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && lam1[end] - lam1[end - 1] <= ctol {
            end += 1;
        }
        let size = end - start;
        if size > 1 {
            // Compress h2 onto the cluster and rediagonalize.
            let cols: Vec<usize> = (start..end).collect();
            let mut b = CMatrix::zeros(size);
            for (bi, &ci) in cols.iter().enumerate() {
                // v = h2 · q_ci
                let v: Vec<Complex64> = (0..n)
                    .map(|r| {
                        (0..n)
                            .map(|k| h2[(r, k)] * q[(k, ci)])
                            .sum()
                    })
                    .collect();
                for (bj, &cj) in cols.iter().enumerate() {
                    let mut s = ZERO;
                    for r in 0..n {
                        s += q[(r, cj)].conj() * v[r];
                    }
                    b[(bj, bi)] = s;
                }
            }
            let (_, v) = eig_hermitian(&b)?;
            // q[:, cluster] ← q[:, cluster] · v
            let mut newcols = vec![vec![ZERO; size]; n];
            for r in 0..n {
                for bj in 0..size {
                    let mut s = ZERO;
                    for bi in 0..size {
                        s += q[(r, cols[bi])] * v[(bi, bj)];
                    }
                    newcols[r][bj] = s;
                }
            }
            for r in 0..n {
                for bj in 0..size {
                    q[(r, cols[bj])] = newcols[r][bj];
                }
            }
        }
        start = end;
    }
    // Rayleigh quotients.
    let vals: Vec<Complex64> = (0..n)
        .map(|j| {
            let col: Vec<Complex64> = (0..n).map(|r| q[(r, j)]).collect();
            let xv = x.mul_vec(&col);
            col.iter().zip(xv.iter()).map(|(a, b)| a.conj() * b).sum()
        })
        .collect();
    Ok((vals, q))
}

fn residual_norm(x: &CMatrix, vals: &[Complex64], q: &CMatrix) -> f64 {
    let n = x.dim();
    let mut worst = 0.0f64;
    for j in 0..n {
        let col: Vec<Complex64> = (0..n).map(|r| q[(r, j)]).collect();
        let xv = x.mul_vec(&col);
        let mut s = 0.0;
        for r in 0..n {
            s += (xv[r] - vals[j] * col[r]).norm_sqr();
        }
        worst = worst.max(s.sqrt());
    }
    worst
}

fn sort_eigenpairs(
    vals: Vec<Complex64>,
    q: CMatrix,
    kind: EigKind,
    hermitian_input: bool,
) -> (Vec<Complex64>, CMatrix) {
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    let by_real = matches!(kind, EigKind::Hermitian) || (kind == EigKind::Auto && hermitian_input);
    if by_real {
        order.sort_by(|&i, &j| {
            vals[i]
                .re
                .partial_cmp(&vals[j].re)
                .unwrap()
                .then(i.cmp(&j))
        });
    } else {
        // Principal argument in (−π, π], ties by ascending imaginary part
        // then original index.
        let key = |z: &Complex64| {
            let mut a = z.arg();
            if a <= -std::f64::consts::PI {
                a += 2.0 * std::f64::consts::PI;
            }
            a
        };
        order.sort_by(|&i, &j| {
            key(&vals[i])
                .partial_cmp(&key(&vals[j]))
                .unwrap()
                .then(vals[i].im.partial_cmp(&vals[j].im).unwrap())
                .then(i.cmp(&j))
        });
    }
    let vals_sorted: Vec<Complex64> = order.iter().map(|&i| vals[i]).collect();
    let mut q_sorted = CMatrix::zeros(n);
    for (newj, &oldj) in order.iter().enumerate() {
        for i in 0..n {
            q_sorted[(i, newj)] = q[(i, oldj)];
        }
    }
    (vals_sorted, q_sorted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reconstruct(vals: &[Complex64], q: &CMatrix) -> CMatrix {
        q.mul(&CMatrix::diag(vals)).mul(&q.adjoint())
    }

    #[test]
    fn identity_eigenvalues() {
        let (vals, _) = eig_normal(&CMatrix::identity(3)).unwrap();
        for v in vals {
            assert!((v - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn already_diagonal_sorted_by_argument() {
        let u = CMatrix::diag(&[c(0.0, 1.0), c(0.0, -1.0)]);
        let (vals, q) = eig_normal_kind(&u, EigKind::Unitary).unwrap();
        assert!((vals[0] - c(0.0, -1.0)).norm() < 1e-12, "{vals:?}");
        assert!((vals[1] - c(0.0, 1.0)).norm() < 1e-12);
        // q is a permutation of the basis up to phases.
        assert!(q.is_unitary(1e-12));
        assert!(reconstruct(&vals, &q).sub(&u).op_norm() < 1e-12);
    }

    #[test]
    fn hermitian_eig_reconstructs() {
        for n in [2usize, 3, 5, 8, 16, 33] {
            let h = sample::random_hermitian(n, n as u64);
            let (d, q) = eig_hermitian(&h).unwrap();
            assert!(q.is_unitary(1e-10), "q not unitary at n={n}");
            let rec = q.mul(&CMatrix::diag_real(&d)).mul(&q.adjoint());
            let err = rec.sub(&h).op_norm();
            assert!(err < 1e-10 * (1.0 + h.op_norm()), "n={n}, err={err:.3e}");
            for w in d.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn random_unitary_eig_reconstructs() {
        let u = sample::random_unitary(5, 42);
        let (vals, q) = eig_normal(&u).unwrap();
        let err = reconstruct(&vals, &q).sub(&u).op_norm();
        assert!(err <= 1e-10, "reconstruction error {err:.3e}");
        for v in &vals {
            assert!((v.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_unitary_spectrum_is_refined() {
        // cos is two-to-one: phases ±θ collide in the Hermitian part, the
        // imaginary part must separate them.
        let phases = [0.7, -0.7, 0.3, -0.3, 0.0];
        let d = CMatrix::diag(&phases.map(|t| Complex64::from_polar(1.0, t)));
        let q = sample::random_unitary(5, 9);
        let u = d.conjugate_by(&q);
        let (vals, qq) = eig_normal(&u).unwrap();
        let err = reconstruct(&vals, &qq).sub(&u).op_norm();
        assert!(err < 1e-10, "err={err:.3e}");
        let mut got: Vec<f64> = vals.iter().map(|v| v.arg()).collect();
        let mut want = phases.to_vec();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g - w).abs() < 1e-10);
        }
    }

    #[test]
    fn large_normal_reconstruction() {
        // n = 64 unitary: relative residual within 1e-9.
        let u = sample::random_unitary(64, 7);
        let (vals, q) = eig_normal(&u).unwrap();
        let err = reconstruct(&vals, &q).sub(&u).op_norm();
        assert!(err <= 1e-9, "err={err:.3e}");
    }

    #[test]
    fn non_normal_rejected() {
        let mut m = CMatrix::identity(2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(eig_normal(&m), Err(Error::NotNormal { .. })));
    }

    #[test]
    fn multiple_eigenvalue_block() {
        // -I has a genuinely multiple eigenvalue; any unitary q works.
        let u = CMatrix::identity(3).scale(c(-1.0, 0.0));
        let (vals, q) = eig_normal(&u).unwrap();
        assert!(q.is_unitary(1e-12));
        for v in vals {
            assert!((v + ONE).norm() < 1e-12);
        }
    }
}
