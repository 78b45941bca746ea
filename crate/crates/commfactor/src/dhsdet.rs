//! The de la Harpe–Skandalis determinant on matrices and matrix paths.
//!
//! The raw invariant of a path ξ is `(1/2πi)∫ τ(ξ'(t) ξ(t)⁻¹) dt`; on `M_n`
//! with the normalized trace its class modulo the trace lattice `(1/n)ℤ`
//! decides determinant-triviality: the class is zero exactly when
//! `det x = 1`. [`DhsValue`] carries the raw value together with the lattice
//! reduction and the distance to zero.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::Error;
use crate::matcore::CMatrix;
use crate::par;
use crate::pathfun::MatrixPath;
use crate::tol;
use crate::Result;

/// Trace functional on `M_n`: normalized (`Tr/n`, τ(1) = 1) or plain `Tr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Normalized,
    Unnormalized,
}

#[derive(Debug, Clone, Copy)]
pub struct TraceFunctional {
    pub dim: usize,
    pub normalization: Normalization,
}

impl TraceFunctional {
    pub fn normalized(dim: usize) -> Self {
        TraceFunctional {
            dim,
            normalization: Normalization::Normalized,
        }
    }

    pub fn unnormalized(dim: usize) -> Self {
        TraceFunctional {
            dim,
            normalization: Normalization::Unnormalized,
        }
    }

    pub fn apply(&self, x: &CMatrix) -> Complex64 {
        let t = x.trace();
        match self.normalization {
            Normalization::Normalized => t / self.dim as f64,
            Normalization::Unnormalized => t,
        }
    }

    /// Step of the image lattice τ(K₀(M_n)) ⊂ ℝ.
    pub fn lattice_step(&self) -> f64 {
        match self.normalization {
            Normalization::Normalized => 1.0 / self.dim as f64,
            Normalization::Unnormalized => 1.0,
        }
    }
}

/// A determinant value: raw number, the lattice it is reduced against, the
/// reduced residue and its distance to zero.
#[derive(Debug, Clone, Copy)]
pub struct DhsValue {
    pub raw: Complex64,
    pub lattice_step: f64,
    pub residue: Complex64,
    pub dist_to_zero: f64,
}

impl DhsValue {
    /// Reduce the real part of `raw` into `[-step/2, step/2)`; the imaginary
    /// part is untouched (the lattice is real).
    pub fn reduce(raw: Complex64, lattice_step: f64) -> Self {
        let step = lattice_step;
        let shifted = (raw.re / step + 0.5).floor();
        let re = raw.re - shifted * step;
        // Guard the half-open convention against rounding at the boundary.
        let re = if re >= step / 2.0 { re - step } else { re };
        let residue = Complex64::new(re, raw.im);
        DhsValue {
            raw,
            lattice_step: step,
            residue,
            dist_to_zero: residue.norm(),
        }
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.dist_to_zero <= tol
    }

    /// The integer lattice multiple removed during reduction.
    pub fn lattice_multiple(&self) -> i64 {
        ((self.raw.re - self.residue.re) / self.lattice_step).round() as i64
    }
}

/// Difference of two path invariants, reduced against the lattice.
#[derive(Debug, Clone, Copy)]
pub struct HomotopyDefect {
    /// `Δ̃(ξ₁) - Δ̃(ξ₂)` before reduction.
    pub raw_difference: Complex64,
    /// Nearest lattice multiple of the real part.
    pub lattice_multiple: i64,
    /// `|raw_difference - multiple·step|`: zero for homotopic paths.
    pub residual: f64,
}

/// Raw path integral `(1/2πi) ∫ τ(ξ' ξ⁻¹) dt` of the interpolant.
///
/// Piecewise-linear segments have constant derivative, so the integrand is a
/// smooth rational function per segment; composite 3-point Gauss with
/// adaptive bisection resolves it to the quadrature tolerance. Segments whose
/// endpoint determinants rotate by π/2 or more are rejected: the interpolant
/// would not resolve the winding the samples suggest.
pub fn path_determinant(xi: &MatrixPath, tau: &TraceFunctional) -> Result<Complex64> {
    if tau.dim != xi.dim() {
        return Err(Error::DimMismatch(tau.dim, xi.dim()));
    }
    let n = xi.len();
    for (i, s) in xi.samples().iter().enumerate() {
        if !s.is_invertible(tol::SINGULAR) {
            return Err(Error::SingularSample { index: i });
        }
    }
    // Winding sanity per segment.
    let dets: Vec<Complex64> = xi.samples().iter().map(|m| m.determinant()).collect();
    for i in 0..n - 1 {
        let rot = crate::pathfun::wrap_to_pi(dets[i + 1].arg() - dets[i].arg()).abs();
        if rot >= PI / 2.0 {
            return Err(Error::ResolutionTooCoarse { index: i });
        }
    }

    let unitary_valued = xi.is_unitary_valued(tol::STRUCTURAL * 10.0);
    let seg_tol = tol::QUADRATURE / (n - 1) as f64;
    let segments: Vec<Result<Complex64>> = {
        let xi_ref = &xi;
        par::map_indices(n - 1, move |i| {
            let a = xi_ref.sample(i);
            let b = xi_ref.sample(i + 1);
            let h = xi_ref.grid()[i + 1] - xi_ref.grid()[i];
            let slope = b.sub(a).scale(Complex64::new(1.0 / h, 0.0));
            // f(w) = τ(slope · ξ(w)⁻¹), w ∈ [0, h] local coordinate.
            let f = |w: f64| -> Result<Complex64> {
                let x = a.add(&slope.scale(Complex64::new(w, 0.0)));
                let xi_inv = x.inverse().map_err(|_| Error::SingularSample { index: i })?;
                Ok(tau.apply(&slope.mul(&xi_inv)))
            };
            adaptive_gauss(&f, 0.0, h, seg_tol, 0)
        })
    };
    let mut total = Complex64::new(0.0, 0.0);
    for seg in segments {
        total += seg?;
    }
    let value = total / Complex64::new(0.0, 2.0 * PI);
    if unitary_valued && value.im.abs() > 1e-8 {
        return Err(Error::NonConvergentQuadrature { delta: value.im.abs() });
    }
    Ok(value)
}

/// Three-point Gauss–Legendre on `[a, b]`.
fn gauss3(f: &dyn Fn(f64) -> Result<Complex64>, a: f64, b: f64) -> Result<Complex64> {
    const X: f64 = 0.7745966692414834; // sqrt(3/5)
    const W0: f64 = 0.8888888888888888; // 8/9
    const W1: f64 = 0.5555555555555556; // 5/9
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let v = f(mid)? * W0 + f(mid - half * X)? * W1 + f(mid + half * X)? * W1;
    Ok(v * half)
}

fn adaptive_gauss(
    f: &dyn Fn(f64) -> Result<Complex64>,
    a: f64,
    b: f64,
    eps: f64,
    depth: usize,
) -> Result<Complex64> {
    let whole = gauss3(f, a, b)?;
    let mid = 0.5 * (a + b);
    let left = gauss3(f, a, mid)?;
    let right = gauss3(f, mid, b)?;
    let delta = (left + right - whole).norm();
    if delta <= eps || (b - a) < 1e-14 {
        return Ok(left + right);
    }
    if depth > 40 {
        return Err(Error::NonConvergentQuadrature { delta });
    }
    let l = adaptive_gauss(f, a, mid, eps / 2.0, depth + 1)?;
    let r = adaptive_gauss(f, mid, b, eps / 2.0, depth + 1)?;
    Ok(l + r)
}

/// Closed-form determinant value of a single invertible matrix.
///
/// Any path from 1 to `x` integrates to
/// `(Arg det x + 2πk)/(2πn) − i·ln|det x|/(2πn)` for some winding `k`; the
/// class modulo the lattice is therefore computable from `det x` alone, and
/// it is zero exactly when `det x = 1`.
pub fn matrix_determinant_value(x: &CMatrix, tau: &TraceFunctional) -> Result<DhsValue> {
    if tau.dim != x.dim() {
        return Err(Error::DimMismatch(tau.dim, x.dim()));
    }
    let det = x.determinant();
    if det.norm() < tol::SINGULAR {
        return Err(Error::Singular { min_sv: det.norm() });
    }
    let n_eff = match tau.normalization {
        Normalization::Normalized => x.dim() as f64,
        Normalization::Unnormalized => 1.0,
    };
    let raw = Complex64::new(det.arg() / (2.0 * PI * n_eff), -det.norm().ln() / (2.0 * PI * n_eff));
    Ok(DhsValue::reduce(raw, tau.lattice_step()))
}

/// Determinant value of a path treated as a curve: the raw integral reduced
/// against the lattice.
pub fn path_determinant_value(xi: &MatrixPath, tau: &TraceFunctional) -> Result<DhsValue> {
    let raw = path_determinant(xi, tau)?;
    Ok(DhsValue::reduce(raw, tau.lattice_step()))
}

/// `|Δ̃(ξ₁) − Δ̃(ξ₂)|` for same-endpoint paths, reduced modulo the lattice.
///
/// Homotopic paths give residual ≈ 0; loops differing by a nontrivial class
/// report the lattice multiple.
pub fn homotopy_defect(
    xi1: &MatrixPath,
    xi2: &MatrixPath,
    tau: &TraceFunctional,
) -> Result<HomotopyDefect> {
    if xi1.dim() != xi2.dim() {
        return Err(Error::DimMismatch(xi1.dim(), xi2.dim()));
    }
    let d0 = xi1.start().sub(xi2.start()).op_norm();
    let d1 = xi1.end().sub(xi2.end()).op_norm();
    if d0 > 1e-9 || d1 > 1e-9 {
        return Err(Error::EndpointMismatch(d0.max(d1)));
    }
    let v1 = path_determinant(xi1, tau)?;
    let v2 = path_determinant(xi2, tau)?;
    let diff = v1 - v2;
    let step = tau.lattice_step();
    let multiple = (diff.re / step).round();
    let residual = Complex64::new(diff.re - multiple * step, diff.im).norm();
    Ok(HomotopyDefect {
        raw_difference: diff,
        lattice_multiple: multiple as i64,
        residual,
    })
}

/// Concatenation `ξ₁ * ξ₂` with time halved; requires `ξ₁(1) = ξ₂(0)`.
pub fn concat(xi1: &MatrixPath, xi2: &MatrixPath) -> Result<MatrixPath> {
    if xi1.dim() != xi2.dim() {
        return Err(Error::DimMismatch(xi1.dim(), xi2.dim()));
    }
    let gap = xi1.end().sub(xi2.start()).op_norm();
    if gap > 1e-9 {
        return Err(Error::EndpointMismatch(gap));
    }
    let mut grid: Vec<f64> = xi1.grid().iter().map(|&t| t / 2.0).collect();
    let mut samples: Vec<CMatrix> = xi1.samples().to_vec();
    for (i, &t) in xi2.grid().iter().enumerate() {
        if i == 0 {
            continue; // shared junction sample
        }
        grid.push(0.5 + t / 2.0);
        samples.push(xi2.sample(i).clone());
    }
    MatrixPath::new(grid, samples)
}

/// Matrix-form continuity at zero: a δ that guarantees
/// `dist_to_zero(Δ(x)) < ε` whenever `||x − y|| < δ` and `det y = 1`,
/// for inputs bounded by `norm_bound` in dimension `n`.
///
/// `|det x − det y| ≤ n·δ·(max(||x||,||y||))^{n−1}` and the residue of a
/// point with `|det − 1| = c` is at most `c/(π·n)`-ish for small `c`; the
/// schedule below folds both with a factor-2 margin.
pub fn continuity_delta(eps: f64, n: usize, norm_bound: f64) -> f64 {
    let growth = n as f64 * norm_bound.powi(n as i32 - 1);
    (eps * PI * n as f64) / (2.0 * growth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathfun::uniform_grid;
    use crate::sample;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn loop_path(points: usize) -> MatrixPath {
        MatrixPath::from_fn(2, uniform_grid(points), |t| {
            CMatrix::diag(&[Complex64::from_polar(1.0, 2.0 * PI * t), c(1.0, 0.0)])
        })
        .unwrap()
    }

    #[test]
    fn constant_path_is_zero() {
        let x = sample::random_invertible(3, 4);
        let xi = MatrixPath::constant(x, uniform_grid(17)).unwrap();
        let v = path_determinant(&xi, &TraceFunctional::normalized(3)).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn winding_loop_is_one_half() {
        let xi = loop_path(257);
        let v = path_determinant(&xi, &TraceFunctional::normalized(2)).unwrap();
        assert!((v - c(0.5, 0.0)).norm() <= 1e-9, "got {v}");
    }

    #[test]
    fn exponential_path_closed_form() {
        // ξ(t) = e^{tA} for Hermitian A: Δ̃ = Tr(A)/(2πi·n).
        for seed in [3u64, 8, 15] {
            let n = 3;
            let a = sample::random_hermitian(n, seed);
            let xi = MatrixPath::from_fn(n, uniform_grid(257), |t| {
                crate::matcore::exp_hermitian(&a.scale(c(t, 0.0))).unwrap()
            })
            .unwrap();
            let v = path_determinant(&xi, &TraceFunctional::normalized(n)).unwrap();
            let expect = a.trace() / Complex64::new(0.0, 2.0 * PI * n as f64);
            assert!((v - expect).norm() < 1e-9, "seed {seed}: {v} vs {expect}");
        }
    }

    #[test]
    fn identity_matrix_residue_zero() {
        let v = matrix_determinant_value(&CMatrix::identity(4), &TraceFunctional::normalized(4))
            .unwrap();
        assert!(v.dist_to_zero < 1e-15);
        assert!(v.is_zero(1e-8));
    }

    #[test]
    fn minus_identity_2x2_residue_zero() {
        // det = 1, so the class vanishes even though the matrix is far from 1.
        let m = CMatrix::identity(2).scale(c(-1.0, 0.0));
        let v = matrix_determinant_value(&m, &TraceFunctional::normalized(2)).unwrap();
        assert!(v.dist_to_zero < 1e-12, "residue {}", v.dist_to_zero);
    }

    #[test]
    fn phase_in_m3_reduces_into_third_lattice() {
        // Independent scalar oracle for the closed form.
        for seed in 0..10u64 {
            let theta = sample::uniform(seed ^ 0xdead, -0.49, 0.49);
            let x = CMatrix::diag(&[
                Complex64::from_polar(1.0, 2.0 * PI * theta),
                c(1.0, 0.0),
                c(1.0, 0.0),
            ]);
            let v = matrix_determinant_value(&x, &TraceFunctional::normalized(3)).unwrap();
            // Oracle: reduce θ/3 into [-1/6, 1/6).
            let step: f64 = 1.0 / 3.0;
            let raw = theta / 3.0;
            let mut expect = raw - (raw / step + 0.5).floor() * step;
            if expect >= step / 2.0 {
                expect -= step;
            }
            assert!(
                (v.residue.re - expect).abs() < 1e-12,
                "θ={theta}: {} vs {expect}",
                v.residue.re
            );
            assert!(v.residue.im.abs() < 1e-12);
        }
    }

    #[test]
    fn residue_detects_determinant_one() {
        for seed in 0..20u64 {
            let n = 2 + (seed % 5) as usize;
            let tau = TraceFunctional::normalized(n);
            let good = sample::random_det_one(n, seed);
            let v = matrix_determinant_value(&good, &tau).unwrap();
            assert!(v.dist_to_zero <= 1e-9, "det-one rejected: {}", v.dist_to_zero);

            let bad = good.scale(c(1.02, 0.0));
            let v = matrix_determinant_value(&bad, &tau).unwrap();
            assert!(v.dist_to_zero > 1e-4, "det≠1 accepted");
        }
    }

    #[test]
    fn commutator_residue_vanishes() {
        for seed in 0..5u64 {
            let x = sample::random_invertible(4, seed);
            let y = sample::random_invertible(4, seed + 31);
            let k = x.commutator(&y).unwrap();
            let v = matrix_determinant_value(&k, &TraceFunctional::normalized(4)).unwrap();
            assert!(v.dist_to_zero <= 1e-9, "residue {}", v.dist_to_zero);
        }
    }

    #[test]
    fn normalized_and_unnormalized_scale() {
        let x = sample::random_invertible(5, 9);
        let vn = matrix_determinant_value(&x, &TraceFunctional::normalized(5)).unwrap();
        let vu = matrix_determinant_value(&x, &TraceFunctional::unnormalized(5)).unwrap();
        assert!((vn.raw * c(5.0, 0.0) - vu.raw).norm() < 1e-12);
        assert!((vn.lattice_step * 5.0 - vu.lattice_step).abs() < 1e-15);
    }

    #[test]
    fn additivity_over_concatenation() {
        for seed in 0..6u64 {
            let n = 2;
            let h1 = sample::random_traceless_hermitian(n, seed, 0.9);
            let h2 = sample::random_traceless_hermitian(n, seed + 77, 1.1);
            let mid = crate::matcore::exp_i_hermitian(&h1).unwrap();
            let xi1 = MatrixPath::from_fn(n, uniform_grid(129), |t| {
                crate::matcore::exp_i_hermitian(&h1.scale(c(t, 0.0))).unwrap()
            })
            .unwrap();
            let xi2 = MatrixPath::from_fn(n, uniform_grid(129), |t| {
                mid.mul(&crate::matcore::exp_i_hermitian(&h2.scale(c(t, 0.0))).unwrap())
            })
            .unwrap();
            let tau = TraceFunctional::normalized(n);
            let va = path_determinant(&xi1, &tau).unwrap();
            let vb = path_determinant(&xi2, &tau).unwrap();
            let cat = concat(&xi1, &xi2).unwrap();
            let vc = path_determinant(&cat, &tau).unwrap();
            assert!((vc - va - vb).norm() <= 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn multiplicativity_for_products_from_identity() {
        for seed in 0..4u64 {
            let n = 3;
            let h1 = sample::random_traceless_hermitian(n, seed + 5, 0.8);
            let h2 = sample::random_traceless_hermitian(n, seed + 55, 0.7);
            let xi = MatrixPath::from_fn(n, uniform_grid(257), |t| {
                crate::matcore::exp_i_hermitian(&h1.scale(c(t, 0.0))).unwrap()
            })
            .unwrap();
            let eta = MatrixPath::from_fn(n, uniform_grid(257), |t| {
                crate::matcore::exp_i_hermitian(&h2.scale(c(t, 0.0))).unwrap()
            })
            .unwrap();
            let prod = crate::pathfun::path_multiply(&xi, &eta).unwrap();
            let tau = TraceFunctional::normalized(n);
            let v = path_determinant(&prod, &tau).unwrap();
            let v1 = path_determinant(&xi, &tau).unwrap();
            let v2 = path_determinant(&eta, &tau).unwrap();
            assert!((v - v1 - v2).norm() <= 1e-8, "seed {seed}");
        }
    }

    #[test]
    fn continuity_at_zero_schedule() {
        // ε = 1e-2, δ = 1e-3 on the documented schedule: perturbations of a
        // det-one matrix stay within ε in residue.
        let eps = 1e-2;
        for seed in 0..10u64 {
            let n = 3 + (seed % 3) as usize;
            let y = sample::random_det_one(n, seed);
            let delta: f64 = 1e-3;
            assert!(delta <= continuity_delta(eps, n, y.op_norm() + delta));
            let pert = sample::random_hermitian(n, seed + 999);
            let pert = pert.scale(c(0.9 * delta / pert.op_norm(), 0.0));
            let x = y.add(&pert);
            let v = matrix_determinant_value(&x, &TraceFunctional::normalized(n)).unwrap();
            assert!(v.dist_to_zero < eps, "residue {} at seed {seed}", v.dist_to_zero);
        }
    }

    #[test]
    fn homotopy_same_path_and_reparametrization() {
        let n = 2;
        let h = sample::random_traceless_hermitian(n, 13, 1.0);
        let xi = MatrixPath::from_fn(n, uniform_grid(129), |t| {
            crate::matcore::exp_i_hermitian(&h.scale(c(t, 0.0))).unwrap()
        })
        .unwrap();
        let tau = TraceFunctional::normalized(n);
        let same = homotopy_defect(&xi, &xi, &tau).unwrap();
        assert!(same.residual < 1e-12);
        assert_eq!(same.lattice_multiple, 0);
        // Reparametrized: t ↦ t².
        let eta = MatrixPath::from_fn(n, uniform_grid(257), |t| {
            crate::matcore::exp_i_hermitian(&h.scale(c(t * t, 0.0))).unwrap()
        })
        .unwrap();
        let rep = homotopy_defect(&xi, &eta, &tau).unwrap();
        assert!(rep.residual <= 1e-8, "residual {}", rep.residual);
        assert!((rep.raw_difference.norm()) <= 1e-8);
    }

    #[test]
    fn homotopy_loop_vs_constant_reports_multiple() {
        let xi = loop_path(257);
        let e = MatrixPath::identity(2, uniform_grid(257));
        let tau = TraceFunctional::normalized(2);
        let d = homotopy_defect(&xi, &e, &tau).unwrap();
        assert_eq!(d.lattice_multiple, 1);
        assert!((d.raw_difference.re - 0.5).abs() <= 1e-9);
        assert!(d.residual <= 1e-9);
    }

    #[test]
    fn trace_is_tracial() {
        for seed in 0..10u64 {
            let a = sample::random_invertible(4, seed);
            let b = sample::random_invertible(4, seed + 17);
            let tau = TraceFunctional::normalized(4);
            let d = (tau.apply(&a.mul(&b)) - tau.apply(&b.mul(&a))).norm();
            assert!(d < 1e-12);
        }
        assert!((TraceFunctional::normalized(7).apply(&CMatrix::identity(7)) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_sample_rejected() {
        let mut bad = CMatrix::identity(2);
        bad[(0, 0)] = c(0.0, 0.0);
        let mut samples = vec![CMatrix::identity(2); 9];
        samples[4] = bad;
        let xi = MatrixPath::new(uniform_grid(9), samples).unwrap();
        match path_determinant(&xi, &TraceFunctional::normalized(2)) {
            Err(Error::SingularSample { index }) => assert_eq!(index, 4),
            other => panic!("expected SingularSample, got {other:?}"),
        }
    }

    #[test]
    fn coarse_winding_rejected() {
        // 5 points around the full circle: adjacent determinants rotate by
        // π/2 exactly, which the branch guard must refuse.
        let xi = loop_path(5);
        assert!(matches!(
            path_determinant(&xi, &TraceFunctional::normalized(2)),
            Err(Error::ResolutionTooCoarse { .. })
        ));
    }
}
