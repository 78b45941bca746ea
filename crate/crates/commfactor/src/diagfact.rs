//! Diagonal matrix paths as bounded products of commutators.
//!
//! Given sorted (or at least continuous) zero-sum eigenvalue functions
//! φ_1..φ_m on `[0,1]`, the diagonal path `diag(e^{iφ})` (resp. `diag(e^{φ})`
//! in the invertible case) factors into a fixed number of commutator pairs:
//!
//! * [`factor_diag_path_u4`] — 4 unitary pairs when every φ stays inside
//!   (−π/2, π/2), with factor norms `≤ √2·||u−1||^{1/2}`;
//! * [`factor_diag_path_u16`] — 16 unitary pairs with no range restriction
//!   (and no norm estimate);
//! * [`factor_diag_path_gl4`] — 4 invertible pairs for real exponents, with
//!   factor norms `≤ 2·||z−1||^{1/2}` in the `||z−1|| ≤ 1/2` regime.
//!
//! The pipeline in all three: cover `[0,1]` by intervals on which a fixed
//! prefix-sum permutation stays admissible, take a tent partition of unity
//! subordinate to the cover, conjugate each localized piece into paired
//! `±prefix` blocks, and realize every 2×2 block by a kernel from
//! [`crate::su2fact`]. Interval indices interleave odd/even so that pieces
//! merged into one commutator have disjoint supports.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::Error;
use crate::factorization::{Certificate, PathFactorization, PathPair};
use crate::matcore::{exp_i_hermitian, principal_log_unitary, CMatrix};
use crate::pathfun::{EigenFunctions, MatrixPath};
use crate::su2fact;

use crate::Result;

/// Open-interval cover of `[0,1]` with one anchor per interval.
///
/// Intervals are stored as closed grid-index ranges; consecutive ranges
/// overlap in exactly one grid cell and ranges two apart are disjoint, so no
/// point lies in three intervals.
#[derive(Debug, Clone)]
pub struct IntervalCover {
    /// Closed grid-index ranges `[start, end]`, left to right.
    pub index_ranges: Vec<(usize, usize)>,
    /// The same intervals in `[0,1]` coordinates (open).
    pub intervals: Vec<(f64, f64)>,
    /// Anchor angle per interval.
    pub anchors: Vec<f64>,
}

impl IntervalCover {
    pub fn len(&self) -> usize {
        self.index_ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_ranges.is_empty()
    }

    /// How many intervals contain grid point `i` (supports are open, so the
    /// shared endpoints of the closed ranges do not count twice).
    pub fn membership_count(&self, i: usize) -> usize {
        self.index_ranges
            .iter()
            .filter(|&&(s, e)| i > s && i < e || (s == 0 && i == 0) || (i == e && self.is_last(e)))
            .count()
    }

    fn is_last(&self, e: usize) -> bool {
        self.index_ranges.last().map_or(false, |&(_, le)| le == e)
    }
}

/// Tent partition of unity subordinate to a chained cover.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    /// `functions[j][i]` = f_j at grid point i.
    pub functions: Vec<Vec<f64>>,
}

impl PartitionOfUnity {
    /// Tents over the cover's index ranges: 1 on the core, linear over the
    /// single-cell overlaps, 0 outside.
    pub fn tents(cover: &IntervalCover, npts: usize) -> Self {
        let k = cover.index_ranges.len();
        let mut functions = vec![vec![0.0; npts]; k];
        for (j, &(s, e)) in cover.index_ranges.iter().enumerate() {
            let f = &mut functions[j];
            let lo = if j == 0 { s } else { s + 1 };
            let hi = if j == k - 1 { e } else { e - 1 };
            for v in f.iter_mut().take(hi + 1).skip(lo) {
                *v = 1.0;
            }
            // endpoints of interior ramps stay 0; the single-cell overlap
            // between consecutive tents makes the two ramps sum to 1.
        }
        PartitionOfUnity { functions }
    }

    pub fn validate(&self, cover: &IntervalCover) -> Result<()> {
        let npts = self.functions[0].len();
        for i in 0..npts {
            let sum: f64 = self.functions.iter().map(|f| f[i]).sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "partition of unity sums to {sum} at point {i}"
                )));
            }
        }
        for (j, f) in self.functions.iter().enumerate() {
            let (s, e) = cover.index_ranges[j];
            for (i, &v) in f.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidInput("tent out of [0,1]".into()));
                }
                if v > 0.0 && (i < s || i > e) {
                    return Err(Error::InvalidInput(format!(
                        "tent {j} supported outside its interval at {i}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Chain cover for a sampled scalar function: maximal intervals on which the
/// oscillation stays strictly below `2·osc` around the midpoint anchor.
pub fn build_cover(theta: &[f64], grid: &[f64], osc: f64) -> Result<IntervalCover> {
    if theta.len() != grid.len() || theta.len() < 2 {
        return Err(Error::InvalidInput("theta/grid length mismatch".into()));
    }
    if !(osc > 0.0) {
        return Err(Error::OutOfRange(osc, "positive oscillation"));
    }
    let n = theta.len();
    let mut ranges = Vec::new();
    let mut anchors = Vec::new();
    let mut s = 0usize;
    loop {
        let mut lo = theta[s];
        let mut hi = theta[s];
        let mut e = s;
        while e + 1 < n {
            let cand_lo = lo.min(theta[e + 1]);
            let cand_hi = hi.max(theta[e + 1]);
            if cand_hi - cand_lo < 2.0 * osc {
                lo = cand_lo;
                hi = cand_hi;
                e += 1;
            } else {
                break;
            }
        }
        if e == s {
            // Not even one segment fits: the grid cannot certify the bound.
            return Err(Error::ResolutionTooCoarse { index: s + 1 });
        }
        ranges.push((s, e));
        anchors.push(0.5 * (lo + hi));
        if e == n - 1 {
            break;
        }
        s = e - 1;
    }
    let intervals = ranges
        .iter()
        .map(|&(s, e)| (grid[s], grid[e]))
        .collect::<Vec<_>>();
    Ok(IntervalCover {
        index_ranges: ranges,
        intervals,
        anchors,
    })
}

/// Permutation σ of zero-sum reals keeping every prefix sum inside
/// `[min φ, max φ]`.
///
/// Greedy rule: while the running sum is ≥ 0, append the unused value of
/// opposite (or zero) sign closest to zero, and symmetrically for negative
/// running sums; ties break on the smaller index. An opposing-sign value
/// always exists while any nonzero values remain (the remainder sums to the
/// negated running sum), and each step keeps the prefix inside the range.
pub fn prefix_sum_permutation(phis: &[f64]) -> Result<Vec<usize>> {
    let m = phis.len();
    let total: f64 = phis.iter().sum();
    let scale = phis.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
    if total.abs() > 1e-9 * scale * m as f64 {
        return Err(Error::SumNotZero(total));
    }
    let mut used = vec![false; m];
    let mut order = Vec::with_capacity(m);
    let mut running = 0.0f64;
    for _ in 0..m {
        let mut best: Option<usize> = None;
        // Prefer the opposing sign, closest to zero.
        for (i, &v) in phis.iter().enumerate() {
            if used[i] {
                continue;
            }
            let opposing = if running >= 0.0 { v <= 0.0 } else { v >= 0.0 };
            if !opposing {
                continue;
            }
            match best {
                None => best = Some(i),
                Some(b) => {
                    if v.abs() < phis[b].abs() {
                        best = Some(i)
                    }
                }
            }
        }
        // Degenerate remainder (all same sign as the running sum, which then
        // must be numerically zero): take the smallest in magnitude.
        if best.is_none() {
            for (i, &v) in phis.iter().enumerate() {
                if used[i] {
                    continue;
                }
                match best {
                    None => best = Some(i),
                    Some(b) => {
                        if v.abs() < phis[b].abs() {
                            best = Some(i)
                        }
                    }
                }
            }
        }
        let pick = best.expect("values remain");
        used[pick] = true;
        running += phis[pick];
        order.push(pick);
    }
    Ok(order)
}

/// Check the prefix property of a permutation against a tolerance.
pub fn prefix_property_holds(phis: &[f64], order: &[usize], slack: f64) -> bool {
    let lo = phis.iter().cloned().fold(f64::INFINITY, f64::min) - slack;
    let hi = phis.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + slack;
    let mut run = 0.0;
    for &i in order {
        run += phis[i];
        if run < lo || run > hi {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Shared scaffolding for the diagonal-path factorizations.
// ---------------------------------------------------------------------------

/// The paired block layout of the two interleaved diagonals:
/// `E1 = diag(ψ1, −ψ1, ψ3, −ψ3, …)`, `E2 = diag(0, ψ2, −ψ2, ψ4, −ψ4, …)`
/// (entrywise `E1 + E2 = prefix-difference = the permuted diagonal`).
/// A block is `(position, ψ-index)`; positions are 0-based, ψ 0-based.
pub(crate) fn paired_blocks(m: usize, layer: usize) -> Vec<(usize, usize)> {
    let mut blocks = Vec::new();
    match layer {
        0 => {
            let mut pos = 0;
            while pos + 1 < m {
                blocks.push((pos, pos));
                pos += 2;
            }
        }
        1 => {
            let mut pos = 1;
            while pos + 1 < m {
                blocks.push((pos, pos));
                pos += 2;
            }
        }
        _ => unreachable!(),
    }
    blocks
}

/// Validity of a fixed σ on grid point `i` with slack δ.
fn sigma_valid_at(phis: &[Vec<f64>], order: &[usize], i: usize, delta: f64) -> bool {
    let vals: Vec<f64> = phis.iter().map(|row| row[i]).collect();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min) - delta;
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + delta;
    let mut run = 0.0;
    for &k in order {
        run += vals[k];
        if run < lo || run > hi {
            return false;
        }
    }
    true
}

/// Cover of `[0,1]` by intervals carrying a fixed admissible permutation.
fn build_sigma_cover(phis: &[Vec<f64>], delta: f64) -> Result<(IntervalCover, Vec<Vec<usize>>)> {
    let npts = phis[0].len();
    let mut ranges = Vec::new();
    let mut sigmas: Vec<Vec<usize>> = Vec::new();
    let mut s = 0usize;
    loop {
        let anchor_vals: Vec<f64> = phis.iter().map(|row| row[s]).collect();
        let sigma = prefix_sum_permutation(&anchor_vals)?;
        if !sigma_valid_at(phis, &sigma, s, delta) {
            return Err(Error::ResolutionTooCoarse { index: s });
        }
        let mut e = s;
        while e + 1 < npts && sigma_valid_at(phis, &sigma, e + 1, delta) {
            e += 1;
        }
        if e == s {
            return Err(Error::ResolutionTooCoarse { index: s + 1 });
        }
        ranges.push((s, e));
        sigmas.push(sigma);
        if e == npts - 1 {
            break;
        }
        s = e - 1;
    }
    let cover = IntervalCover {
        intervals: ranges.iter().map(|&(a, b)| (a as f64, b as f64)).collect(),
        index_ranges: ranges,
        anchors: vec![0.0; sigmas.len()],
    };
    Ok((cover, sigmas))
}

/// Permutation matrix `x` with `x · diag(v) · x* = diag(v[σ(0)], v[σ(1)], …)`.
fn sigma_matrix(sigma: &[usize]) -> CMatrix {
    let m = sigma.len();
    let mut x = CMatrix::zeros(m);
    for (k, &src) in sigma.iter().enumerate() {
        x[(k, src)] = Complex64::new(1.0, 0.0);
    }
    x
}

#[derive(Clone, Copy, PartialEq)]
enum KernelKind {
    Su2,
    Shear,
}

/// Zero-sum validation; returns the scale used for tolerances.
fn check_zero_sum(phis: &[Vec<f64>]) -> Result<()> {
    let m = phis.len();
    let npts = phis[0].len();
    let scale = phis
        .iter()
        .flat_map(|r| r.iter().map(|v| v.abs()))
        .fold(1.0f64, f64::max);
    for i in 0..npts {
        let s: f64 = phis.iter().map(|r| r[i]).sum();
        if s.abs() > 1e-8 * scale * m as f64 {
            return Err(Error::SumNotZero(s));
        }
    }
    Ok(())
}

/// The diagonal path `diag(e^{iφ})` (unitary) or `diag(e^{φ})` (invertible).
pub fn diag_path_of(phi: &EigenFunctions, unitary: bool) -> MatrixPath {
    let npts = phi.grid.len();
    let samples = (0..npts)
        .map(|i| {
            let vals: Vec<Complex64> = (0..phi.dim)
                .map(|k| {
                    if unitary {
                        Complex64::from_polar(1.0, phi.values[k][i])
                    } else {
                        Complex64::new(phi.values[k][i].exp(), 0.0)
                    }
                })
                .collect();
            CMatrix::diag(&vals)
        })
        .collect();
    MatrixPath::new(phi.grid.clone(), samples).expect("diag path")
}

/// Norm-controlled 4-pair factorization (range inside (−π/2, π/2)).
pub fn factor_diag_path_u4(phi: &EigenFunctions) -> Result<PathFactorization> {
    factor_4_inner(&phi.values, &phi.grid, KernelKind::Su2, "diag_u4")
}

/// Invertible 4-pair factorization (no range restriction on the exponents).
pub fn factor_diag_path_gl4(phi: &EigenFunctions) -> Result<PathFactorization> {
    factor_4_inner(&phi.values, &phi.grid, KernelKind::Shear, "diag_gl4")
}

/// 4-pair route on raw (continuous, possibly unsorted) slot functions.
pub(crate) fn factor_slots_u4(phis: &[Vec<f64>], grid: &[f64]) -> Result<PathFactorization> {
    factor_4_inner(phis, grid, KernelKind::Su2, "diag_u4")
}

pub(crate) fn factor_slots_gl4(phis: &[Vec<f64>], grid: &[f64]) -> Result<PathFactorization> {
    factor_4_inner(phis, grid, KernelKind::Shear, "diag_gl4")
}

fn factor_4_inner(
    phis: &[Vec<f64>],
    grid: &[f64],
    kernel: KernelKind,
    strategy: &str,
) -> Result<PathFactorization> {
    let m = phis.len();
    let npts = grid.len();
    check_zero_sum(phis)?;

    // Sup distance of the target to 1 drives the δ-margins and the bounds.
    let unorm = match kernel {
        KernelKind::Su2 => phis
            .iter()
            .flat_map(|r| r.iter().map(|&v| su2fact::circle_dist(v)))
            .fold(0.0f64, f64::max),
        KernelKind::Shear => phis
            .iter()
            .flat_map(|r| r.iter().map(|&v| (v.exp() - 1.0f64).abs()))
            .fold(0.0f64, f64::max),
    };
    let target = diag_path_from_slots(phis, grid, kernel == KernelKind::Su2);
    let mut fact = PathFactorization {
        pairs: Vec::new(),
        residual: None,
        certificate: Certificate::new(strategy),
    };
    if unorm == 0.0 {
        for _ in 0..4 {
            fact.pairs.push(PathPair::identity(m, grid.to_vec()));
        }
        fact.certify(&target)?;
        return Ok(fact);
    }

    let delta = match kernel {
        KernelKind::Su2 => {
            let maxabs = phis
                .iter()
                .flat_map(|r| r.iter().map(|v| v.abs()))
                .fold(0.0f64, f64::max);
            let margin = PI / 2.0 - maxabs;
            if margin <= 0.0 {
                return Err(Error::RangeViolation(maxabs));
            }
            // |e^{iδ} − 1| < ||u−1|| keeps the √2 bound chain intact.
            let branch = 2.0 * (0.999 * (unorm / 2.0).min(1.0)).asin();
            (PI / 4.0).min(margin / 2.0).min(branch)
        }
        KernelKind::Shear => (PI / 4.0).min(0.5 * unorm),
    };

    let (cover, sigmas) = build_sigma_cover(phis, delta)?;
    let pou = PartitionOfUnity::tents(&cover, npts);
    pou.validate(&cover)?;

    let mut max_condition = 1.0f64;
    // Paper slot order: (odd, layer 1), (even, layer 1), (odd, 2), (even, 2).
    for layer in [0usize, 1] {
        for parity in [0usize, 1] {
            let blocks_cache: Vec<(usize, usize)> = paired_blocks(m, layer);
            let mut xs: Vec<CMatrix> = Vec::with_capacity(npts);
            let mut ys: Vec<CMatrix> = Vec::with_capacity(npts);
            for i in 0..npts {
                let mut v = CMatrix::identity(m);
                let mut w = CMatrix::identity(m);
                for (j, &(_s, _e)) in cover.index_ranges.iter().enumerate() {
                    if j % 2 != parity {
                        continue;
                    }
                    let f = pou.functions[j][i];
                    if f == 0.0 {
                        continue;
                    }
                    let sigma = &sigmas[j];
                    // Prefix sums of the permuted values, scaled by the tent.
                    let mut prefix = Vec::with_capacity(m);
                    let mut run = 0.0;
                    for &src in sigma {
                        run += phis[src][i];
                        prefix.push(f * run);
                    }
                    let (vb, wb, cond) = block_kernels(&prefix, &blocks_cache, m, kernel)?;
                    max_condition = max_condition.max(cond);
                    let x = sigma_matrix(sigma);
                    // x* (block) x acts in the original coordinates.
                    let xv = vb.conjugate_by(&x.adjoint());
                    let xw = wb.conjugate_by(&x.adjoint());
                    v = v.mul(&xv);
                    w = w.mul(&xw);
                }
                xs.push(v);
                ys.push(w);
            }
            fact.pairs.push(PathPair::new(
                MatrixPath::new(grid.to_vec(), xs)?,
                MatrixPath::new(grid.to_vec(), ys)?,
            ));
        }
    }
    if kernel == KernelKind::Shear {
        fact.certificate.max_condition = Some(max_condition);
    }
    fact.certify(&target)?;
    Ok(fact)
}

fn diag_path_from_slots(phis: &[Vec<f64>], grid: &[f64], unitary: bool) -> MatrixPath {
    let npts = grid.len();
    let m = phis.len();
    let samples = (0..npts)
        .map(|i| {
            let vals: Vec<Complex64> = (0..m)
                .map(|k| {
                    if unitary {
                        Complex64::from_polar(1.0, phis[k][i])
                    } else {
                        Complex64::new(phis[k][i].exp(), 0.0)
                    }
                })
                .collect();
            CMatrix::diag(&vals)
        })
        .collect();
    MatrixPath::new(grid.to_vec(), samples).expect("diag path")
}

/// Assemble the m×m factor pair realizing one interleaved diagonal layer at a
/// single grid point: 2×2 kernels on the paired blocks, identity on the rest.
fn block_kernels(
    prefix: &[f64],
    blocks: &[(usize, usize)],
    m: usize,
    kernel: KernelKind,
) -> Result<(CMatrix, CMatrix, f64)> {
    let mut v = CMatrix::identity(m);
    let mut w = CMatrix::identity(m);
    let mut cond = 1.0f64;
    for &(pos, psi_idx) in blocks {
        let angle = prefix[psi_idx];
        if angle == 0.0 {
            continue;
        }
        let pair = match kernel {
            KernelKind::Su2 => su2fact::su2_diag_commutator(angle)?,
            KernelKind::Shear => {
                let ker = su2fact::invertible_diag_commutator(angle.exp())?;
                cond = cond.max(ker.similarity_condition);
                ker.pair
            }
        };
        for a in 0..2 {
            for b in 0..2 {
                v[(pos + a, pos + b)] = pair.x[(a, b)];
                w[(pos + a, pos + b)] = pair.y[(a, b)];
            }
        }
    }
    Ok((v, w, cond))
}

// ---------------------------------------------------------------------------
// General-angle (16-pair) route.
// ---------------------------------------------------------------------------

/// Per-block scalar data of the general-angle kernel: anchor and oscillation
/// angle functions split by inner-interval parity, plus the localization
/// cutoff already applied. The four functions sum to `g·θ` pointwise.
struct ScalarAngleSlots {
    anchor: [Vec<f64>; 2],
    osc: [Vec<f64>; 2],
}

/// Inner construction for one scalar angle function θ supported anywhere.
///
/// `localize`: indices where the cutoff g must reach zero get a linear ramp
/// of `ramp` cells just outside the support of θ; inside the support g ≡ 1,
/// so all four returned functions vanish wherever g does, and the pointwise
/// identity `Σ slots = g·θ = θ on supp θ` holds exactly.
fn scalar_angle_slots(
    theta: &[f64],
    grid: &[f64],
    osc: f64,
    ramp: usize,
) -> Result<ScalarAngleSlots> {
    let n = theta.len();
    let cover = build_cover(theta, grid, osc)?;
    let pou = PartitionOfUnity::tents(&cover, n);

    // Localization cutoff: 1 on supp θ, linear to 0 over `ramp` cells.
    let supp: Vec<bool> = theta.iter().map(|&v| v != 0.0).collect();
    let mut g = vec![0.0f64; n];
    for i in 0..n {
        if supp[i] {
            g[i] = 1.0;
        } else {
            // Distance in cells to the nearest support point.
            let mut dist = usize::MAX;
            for d in 1..=ramp {
                if (i >= d && supp[i - d]) || (i + d < n && supp[i + d]) {
                    dist = d;
                    break;
                }
            }
            if dist <= ramp {
                g[i] = 1.0 - dist as f64 / (ramp + 1) as f64;
            }
        }
    }

    let mut slots = ScalarAngleSlots {
        anchor: [vec![0.0; n], vec![0.0; n]],
        osc: [vec![0.0; n], vec![0.0; n]],
    };
    for (q, f) in pou.functions.iter().enumerate() {
        let parity = q % 2;
        let anchor = cover.anchors[q];
        for i in 0..n {
            if f[i] == 0.0 {
                continue;
            }
            slots.anchor[parity][i] += g[i] * f[i] * anchor;
            slots.osc[parity][i] += g[i] * f[i] * (theta[i] - anchor);
        }
    }
    Ok(slots)
}

/// Lemma-2.3-style 4-pair factorization of `diag(e^{iθ}, e^{-iθ})` in `M_2`
/// for an arbitrary continuous angle function θ.
///
/// Pairs 1 and 3 carry the fixed symmetry `w = [[0,1],[1,0]]`; all other
/// factors are identity outside a `delta`-neighbourhood of `{θ ≠ 0}`.
pub fn factor_scalar_angle_path(
    theta: &[f64],
    grid: &[f64],
    ramp_cells: usize,
) -> Result<PathFactorization> {
    let n = grid.len();
    let slots = scalar_angle_slots(theta, grid, PI / 4.0, ramp_cells)?;
    let swap = CMatrix::from_rows(&[
        vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    ])
    .expect("2x2");
    let mut fact = PathFactorization {
        pairs: Vec::new(),
        residual: None,
        certificate: Certificate::new("scalar_angle_4"),
    };
    for parity in [0usize, 1] {
        // Anchor pair: (diag(e^{iA}, 1), swap).
        let av: Vec<CMatrix> = (0..n)
            .map(|i| {
                CMatrix::diag(&[
                    Complex64::from_polar(1.0, slots.anchor[parity][i]),
                    Complex64::new(1.0, 0.0),
                ])
            })
            .collect();
        fact.pairs.push(PathPair::new(
            MatrixPath::new(grid.to_vec(), av)?,
            MatrixPath::constant(swap.clone(), grid.to_vec())?,
        ));
        // Oscillation pair: SU(2) kernels at the localized angles.
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for i in 0..n {
            let pair = su2fact::su2_diag_commutator(slots.osc[parity][i])?;
            xs.push(pair.x);
            ys.push(pair.y);
        }
        fact.pairs.push(PathPair::new(
            MatrixPath::new(grid.to_vec(), xs)?,
            MatrixPath::new(grid.to_vec(), ys)?,
        ));
    }
    let target = MatrixPath::new(
        grid.to_vec(),
        (0..n)
            .map(|i| {
                CMatrix::diag(&[
                    Complex64::from_polar(1.0, theta[i]),
                    Complex64::from_polar(1.0, -theta[i]),
                ])
            })
            .collect(),
    )?;
    fact.certify(&target)?;
    Ok(fact)
}

/// General 16-pair factorization of `diag(e^{iφ_1}, …, e^{iφ_m})`.
pub fn factor_diag_path_u16(phi: &EigenFunctions) -> Result<PathFactorization> {
    factor_u16_slots(&phi.values, &phi.grid)
}

pub(crate) fn factor_u16_slots(phis: &[Vec<f64>], grid: &[f64]) -> Result<PathFactorization> {
    let m = phis.len();
    let npts = grid.len();
    check_zero_sum(phis)?;
    let target = diag_path_from_slots(phis, grid, true);

    let mut fact = PathFactorization {
        pairs: Vec::new(),
        residual: None,
        certificate: Certificate::new("diag_u16"),
    };
    let all_zero = phis.iter().all(|r| r.iter().all(|&v| v == 0.0));
    if all_zero {
        for _ in 0..16 {
            fact.pairs.push(PathPair::identity(m, grid.to_vec()));
        }
        fact.certify(&target)?;
        return Ok(fact);
    }

    let delta = 0.1; // σ-slack only; the inner kernels handle any range
    let (cover, sigmas) = build_sigma_cover(phis, delta)?;
    let pou = PartitionOfUnity::tents(&cover, npts);
    pou.validate(&cover)?;
    let ramp = 2usize;

    // Outer slot order: layers 1,2 × parity odd,even × inner slots 1..4.
    for layer in [0usize, 1] {
        for parity in [0usize, 1] {
            let members: Vec<usize> = (0..cover.len()).filter(|j| j % 2 == parity).collect();
            // Per member j: the four inner factor paths (anchor/osc × inner
            // parity) across all blocks, in the original coordinates.
            let blocks = paired_blocks(m, layer);
            // Collect per-j data.
            struct MemberData {
                v: [Vec<CMatrix>; 4], // inner slots r = 0..4
                w_osc: [Vec<CMatrix>; 2],
                anchor_w: CMatrix,
                support: Vec<bool>,
            }
            let mut member_data: Vec<MemberData> = Vec::new();
            for &j in &members {
                let f = &pou.functions[j];
                let sigma = &sigmas[j];
                // ψ functions of interval j (prefix sums × tent).
                let mut psi: Vec<Vec<f64>> = vec![vec![0.0; npts]; m];
                for i in 0..npts {
                    if f[i] == 0.0 {
                        continue;
                    }
                    let mut run = 0.0;
                    for (l, &src) in sigma.iter().enumerate() {
                        run += phis[src][i];
                        psi[l][i] = f[i] * run;
                    }
                }
                let x = sigma_matrix(sigma);
                // Anchor W: block-diagonal swap pattern in the x_j frame.
                let mut sw = CMatrix::identity(m);
                for &(pos, _) in &blocks {
                    sw[(pos, pos)] = Complex64::new(0.0, 0.0);
                    sw[(pos + 1, pos + 1)] = Complex64::new(0.0, 0.0);
                    sw[(pos, pos + 1)] = Complex64::new(1.0, 0.0);
                    sw[(pos + 1, pos)] = Complex64::new(1.0, 0.0);
                }
                let anchor_w = sw.conjugate_by(&x.adjoint());

                let mut v: [Vec<CMatrix>; 4] = [
                    vec![CMatrix::identity(m); npts],
                    vec![CMatrix::identity(m); npts],
                    vec![CMatrix::identity(m); npts],
                    vec![CMatrix::identity(m); npts],
                ];
                let mut w_osc: [Vec<CMatrix>; 2] =
                    [vec![CMatrix::identity(m); npts], vec![CMatrix::identity(m); npts]];
                let mut support = vec![false; npts];
                for &(pos, psi_idx) in &blocks {
                    let slots = scalar_angle_slots(&psi[psi_idx], grid, PI / 4.0, ramp)?;
                    for i in 0..npts {
                        for ip in 0..2 {
                            let aval = slots.anchor[ip][i];
                            if aval != 0.0 {
                                support[i] = true;
                                let d = Complex64::from_polar(1.0, aval);
                                // diag(e^{iA}, 1) on the block, inner slot 2·ip.
                                let r = 2 * ip;
                                v[r][i][(pos, pos)] = d;
                            }
                            let oval = slots.osc[ip][i];
                            if oval != 0.0 {
                                support[i] = true;
                                let pair = su2fact::su2_diag_commutator(oval)?;
                                let r = 2 * ip + 1;
                                for a in 0..2 {
                                    for b in 0..2 {
                                        v[r][i][(pos + a, pos + b)] = pair.x[(a, b)];
                                        w_osc[ip][i][(pos + a, pos + b)] = pair.y[(a, b)];
                                    }
                                }
                            }
                        }
                    }
                }
                // Conjugate everything by x_j (permutation).
                let xa = x.adjoint();
                for r in 0..4 {
                    for item in v[r].iter_mut() {
                        *item = item.conjugate_by(&xa);
                    }
                }
                for ip in 0..2 {
                    for item in w_osc[ip].iter_mut() {
                        *item = item.conjugate_by(&xa);
                    }
                }
                member_data.push(MemberData {
                    v,
                    w_osc,
                    anchor_w,
                    support,
                });
            }

            // Merge members (disjoint supports inside one parity class).
            for r in 0..4 {
                let mut xs = vec![CMatrix::identity(m); npts];
                for md in &member_data {
                    for i in 0..npts {
                        if !md.support[i] {
                            continue;
                        }
                        xs[i] = xs[i].mul(&md.v[r][i]);
                    }
                }
                let w_path = if r % 2 == 1 {
                    // Oscillation slot: merge the kernel w's pointwise.
                    let ip = (r - 1) / 2;
                    let mut ws = vec![CMatrix::identity(m); npts];
                    for md in &member_data {
                        for i in 0..npts {
                            if !md.support[i] {
                                continue;
                            }
                            ws[i] = ws[i].mul(&md.w_osc[ip][i]);
                        }
                    }
                    MatrixPath::new(grid.to_vec(), ws)?
                } else {
                    // Anchor slot: constant on each member's tube, unitary
                    // geodesic across the gaps.
                    anchor_w_path(
                        grid,
                        &member_data
                            .iter()
                            .map(|md| (md.support.clone(), md.anchor_w.clone()))
                            .collect::<Vec<_>>(),
                        m,
                    )?
                };
                fact.pairs
                    .push(PathPair::new(MatrixPath::new(grid.to_vec(), xs)?, w_path));
            }
        }
    }
    fact.certify(&target)?;
    Ok(fact)
}

/// Piece together the anchor-side `w` path: constant `W_j` wherever member j
/// is active, geodesic interpolation in the unitary group across the gaps
/// (where the paired `v` is identity, so the commutator is unaffected).
fn anchor_w_path(
    grid: &[f64],
    members: &[(Vec<bool>, CMatrix)],
    m: usize,
) -> Result<MatrixPath> {
    let npts = grid.len();
    let active: Vec<(usize, usize, &CMatrix)> = members
        .iter()
        .filter_map(|(supp, w)| {
            let lo = supp.iter().position(|&b| b)?;
            let hi = supp.iter().rposition(|&b| b)?;
            Some((lo, hi, w))
        })
        .collect();
    if active.is_empty() {
        return Ok(MatrixPath::identity(m, grid.to_vec()));
    }
    // Sanity: tubes must be disjoint and ordered.
    for w in active.windows(2) {
        if w[1].0 <= w[0].1 {
            return Err(Error::ResolutionTooCoarse { index: w[1].0 });
        }
    }
    let mut samples: Vec<CMatrix> = Vec::with_capacity(npts);
    // Before the first tube and on it: constant.
    for seg in 0..active.len() {
        let (lo, hi, w) = active[seg];
        if seg == 0 {
            for _ in 0..lo {
                samples.push(w.clone());
            }
        }
        for _ in lo..=hi {
            samples.push(w.clone());
        }
        if seg + 1 < active.len() {
            // Geodesic to the next tube across (hi, next_lo).
            let (next_lo, _, w2) = active[seg + 1];
            let gap = next_lo - hi - 1;
            if gap > 0 {
                let step = w.adjoint().mul(w2);
                let log = principal_log_unitary(&step)?;
                for g in 1..=gap {
                    let tau = g as f64 / (gap + 1) as f64;
                    let part = exp_i_hermitian(&log.scale(Complex64::new(tau, 0.0)))?;
                    samples.push(w.mul(&part));
                }
            }
        } else {
            for _ in hi + 1..npts {
                samples.push(w.clone());
            }
        }
    }
    debug_assert_eq!(samples.len(), npts);
    MatrixPath::new(grid.to_vec(), samples)
}
