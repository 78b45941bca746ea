//! Seeded random matrix generators used by tests, demos and the CLI.
//!
//! Everything is deterministic given the seed (ChaCha8 stream), so any run
//! can be reproduced exactly.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::matcore::{exp_hermitian, exp_i_hermitian, CMatrix};

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; avoids pulling in rand_distr.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Complex Ginibre matrix: i.i.d. standard complex Gaussian entries.
pub fn ginibre(n: usize, seed: u64) -> CMatrix {
    let mut rng = rng_for(seed);
    CMatrix::from_fn(n, |_, _| {
        Complex64::new(standard_normal(&mut rng), standard_normal(&mut rng))
            * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-ish random unitary via QR of a Ginibre matrix (Gram–Schmidt with
/// positive diagonal normalization).
pub fn random_unitary(n: usize, seed: u64) -> CMatrix {
    let g = ginibre(n, seed);
    let mut cols: Vec<Vec<Complex64>> = (0..n)
        .map(|j| (0..n).map(|i| g[(i, j)]).collect())
        .collect();
    for j in 0..n {
        for k in 0..j {
            let proj: Complex64 = cols[k]
                .iter()
                .zip(cols[j].iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            for i in 0..n {
                let c = cols[k][i];
                cols[j][i] -= proj * c;
            }
        }
        let nrm: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in cols[j].iter_mut() {
            *z /= nrm;
        }
    }
    CMatrix::from_fn(n, |i, j| cols[j][i])
}

/// Random special unitary (det = 1): Haar unitary divided by a det root.
pub fn random_special_unitary(n: usize, seed: u64) -> CMatrix {
    let u = random_unitary(n, seed);
    let det = u.determinant();
    let phase = det.arg() / n as f64;
    u.scale(Complex64::from_polar(1.0, -phase))
}

/// Random Hermitian with entries O(1).
pub fn random_hermitian(n: usize, seed: u64) -> CMatrix {
    let g = ginibre(n, seed);
    g.add(&g.adjoint()).scale(Complex64::new(0.5, 0.0))
}

/// Random traceless Hermitian, operator norm exactly `norm`.
pub fn random_traceless_hermitian(n: usize, seed: u64, norm: f64) -> CMatrix {
    let mut h = random_hermitian(n, seed);
    let tr = h.trace().re / n as f64;
    for i in 0..n {
        h[(i, i)] -= Complex64::new(tr, 0.0);
    }
    let current = h.op_norm();
    if current == 0.0 {
        return h;
    }
    h.scale(Complex64::new(norm / current, 0.0))
}

/// Random positive definite with spectrum in roughly [e^{-1}, e].
pub fn random_positive_definite(n: usize, seed: u64) -> CMatrix {
    let h = random_traceless_hermitian(n, seed, 1.0);
    exp_hermitian(&h).expect("hermitian exp")
}

/// Random positive definite with det exactly 1 (traceless Hermitian log).
pub fn random_positive_det_one(n: usize, seed: u64, log_norm: f64) -> CMatrix {
    let h = random_traceless_hermitian(n, seed, log_norm);
    exp_hermitian(&h).expect("hermitian exp")
}

/// Random invertible, well-conditioned (unitary × positive with mild
/// spectrum).
pub fn random_invertible(n: usize, seed: u64) -> CMatrix {
    let u = random_unitary(n, seed);
    let p = random_positive_definite(n, seed.wrapping_add(0x9e37_79b9));
    u.mul(&p)
}

/// Random invertible with det exactly 1 within rounding.
pub fn random_det_one(n: usize, seed: u64) -> CMatrix {
    let u = random_special_unitary(n, seed);
    let p = random_positive_det_one(n, seed.wrapping_add(0x51f1), 0.6);
    u.mul(&p)
}

/// Unitary at controlled distance from 1: `||u - 1|| = dist` exactly
/// (up to rounding), with zero-sum phases so `det u = 1`.
pub fn unitary_near_identity(n: usize, seed: u64, dist: f64) -> CMatrix {
    // ||e^{ih} - 1|| = |e^{i·||h||} - 1| = 2 sin(||h||/2).
    let theta = 2.0 * (dist / 2.0).asin();
    let h = random_traceless_hermitian(n, seed, theta);
    exp_i_hermitian(&h).expect("hermitian exp")
}

/// Invertible at controlled distance from a unitary:
/// `dist(x, unitaries) = ||h - 1||` with `h = e^{s}`, s Hermitian traceless.
pub fn near_unitary(n: usize, seed: u64, dist: f64) -> CMatrix {
    let u = random_special_unitary(n, seed);
    let s = random_traceless_hermitian(n, seed.wrapping_add(0xabcd), (1.0 + dist).ln());
    let h = exp_hermitian(&s).expect("hermitian exp");
    u.mul(&h)
}

/// Uniform draw in [lo, hi] from the seeded stream.
pub fn uniform(seed: u64, lo: f64, hi: f64) -> f64 {
    rng_for(seed).gen_range(lo..hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_is_unitary() {
        for n in [2, 3, 7] {
            let u = random_unitary(n, 1);
            assert!(u.is_unitary(1e-12));
        }
    }

    #[test]
    fn special_unitary_det_one() {
        let u = random_special_unitary(5, 2);
        assert!((u.determinant() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn det_one_invertible() {
        let x = random_det_one(6, 3);
        assert!((x.determinant() - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn controlled_distance_to_identity() {
        let u = unitary_near_identity(4, 4, 0.01);
        assert!((u.dist_to_identity() - 0.01).abs() < 1e-6);
        assert!((u.determinant() - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn near_unitary_distance() {
        let x = near_unitary(5, 5, 0.05);
        let (_, h) = crate::matcore::polar(&x).unwrap();
        let d = h.dist_to_identity();
        assert!((d - 0.05).abs() < 5e-3, "dist to unitary = {d}");
    }

    #[test]
    fn deterministic_given_seed() {
        let a = random_invertible(4, 77);
        let b = random_invertible(4, 77);
        assert!(a.sub(&b).op_norm() == 0.0);
    }
}
