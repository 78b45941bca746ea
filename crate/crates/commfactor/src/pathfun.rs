//! Sampled matrix functions on `[0,1]`: the concrete model of `M_m(C[0,1])`.
//!
//! A [`MatrixPath`] stores samples on a grid and interpolates linearly in the
//! entries. Because the operator norm is convex and each entry is linear on a
//! segment, the sup over the grid of any norm expression in the interpolant
//! is attained at grid points — so grid maxima are exact for interpolants and
//! lower bounds for the continuous functions being sampled.

use num_complex::Complex64;

use crate::error::Error;
use crate::matcore::{eig_normal_kind, polar, CMatrix, EigKind};
use crate::par;
use crate::tol;
use crate::Result;

/// Sampled matrix function on a grid of `[0,1]`, piecewise linear in entries.
#[derive(Debug, Clone)]
pub struct MatrixPath {
    dim: usize,
    grid: Vec<f64>,
    samples: Vec<CMatrix>,
}

/// Sorted continuous eigenvalue functions of a tracked path (radians for the
/// unitary kind, plain reals for the self-adjoint kind).
#[derive(Debug, Clone)]
pub struct EigenFunctions {
    pub dim: usize,
    pub grid: Vec<f64>,
    /// `values[k][i]` = φ_k at grid point i; pointwise ascending in `k`.
    pub values: Vec<Vec<f64>>,
}

/// What `track_eigenfunctions` diagonalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackKind {
    /// Unitary-valued path; functions are branch-tracked arguments.
    Unitary,
    /// Hermitian-valued path; functions are eigenvalues.
    SelfAdjoint,
}

/// Raw tracking output: continuous (unsorted) eigenvalue slots plus a frame
/// that stays grid-continuous through crossings. The factorization pipeline
/// consumes this form; the public sorted form is derived from it.
#[derive(Debug, Clone)]
pub struct TrackedPath {
    pub grid: Vec<f64>,
    /// `slots[k][i]`: k-th continuous eigenvalue function at grid point i.
    pub slots: Vec<Vec<f64>>,
    /// Unitary frame per grid point; column k pairs with slot k.
    pub frame: Vec<CMatrix>,
}

pub fn uniform_grid(points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points)
        .map(|i| i as f64 / (points - 1) as f64)
        .collect()
}

impl MatrixPath {
    pub fn new(grid: Vec<f64>, samples: Vec<CMatrix>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != samples.len() {
            return Err(Error::InvalidInput(format!(
                "grid has {} points for {} samples",
                grid.len(),
                samples.len()
            )));
        }
        if (grid[0] - 0.0).abs() > 1e-12 || (grid[grid.len() - 1] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput("grid must span [0,1]".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("grid must be strictly increasing".into()));
        }
        let dim = samples[0].dim();
        if samples.iter().any(|s| s.dim() != dim) {
            return Err(Error::InvalidInput("samples of mixed dimension".into()));
        }
        Ok(MatrixPath { dim, grid, samples })
    }

    pub fn from_fn(dim: usize, grid: Vec<f64>, f: impl Fn(f64) -> CMatrix + Sync) -> Result<Self> {
        let samples = par::map_indices(grid.len(), |i| f(grid[i]));
        let _ = dim;
        Self::new(grid, samples)
    }

    pub fn constant(value: CMatrix, grid: Vec<f64>) -> Result<Self> {
        let samples = vec![value; grid.len()];
        Self::new(grid, samples)
    }

    pub fn identity(dim: usize, grid: Vec<f64>) -> Self {
        let samples = vec![CMatrix::identity(dim); grid.len()];
        MatrixPath { dim, grid, samples }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn samples(&self) -> &[CMatrix] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &CMatrix {
        &self.samples[i]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> &CMatrix {
        &self.samples[0]
    }

    pub fn end(&self) -> &CMatrix {
        &self.samples[self.samples.len() - 1]
    }

    /// Piecewise-linear interpolation at `t ∈ [0,1]`.
    pub fn value_at(&self, t: f64) -> CMatrix {
        let t = t.clamp(0.0, 1.0);
        match self.grid.binary_search_by(|g| g.partial_cmp(&t).unwrap()) {
            Ok(i) => self.samples[i].clone(),
            Err(i) => {
                let (lo, hi) = (i - 1, i);
                let w = (t - self.grid[lo]) / (self.grid[hi] - self.grid[lo]);
                self.samples[lo]
                    .scale(Complex64::new(1.0 - w, 0.0))
                    .add(&self.samples[hi].scale(Complex64::new(w, 0.0)))
            }
        }
    }

    /// Resample onto another grid by interpolation.
    pub fn resample(&self, grid: &[f64]) -> Result<Self> {
        let samples: Vec<CMatrix> = grid.iter().map(|&t| self.value_at(t)).collect();
        Self::new(grid.to_vec(), samples)
    }

    pub fn pointwise_unary(&self, f: impl Fn(&CMatrix) -> CMatrix + Sync) -> Self {
        let samples = par::map_indices(self.len(), |i| f(&self.samples[i]));
        MatrixPath {
            dim: samples[0].dim(),
            grid: self.grid.clone(),
            samples,
        }
    }

    pub fn try_pointwise_unary(
        &self,
        f: impl Fn(usize, &CMatrix) -> Result<CMatrix> + Sync,
    ) -> Result<Self> {
        let samples = par::try_map_indices(self.len(), |i| f(i, &self.samples[i]))?;
        MatrixPath::new(self.grid.clone(), samples)
    }

    pub fn adjoint_pointwise(&self) -> Self {
        self.pointwise_unary(|m| m.adjoint())
    }

    pub fn inverse_pointwise(&self) -> Result<Self> {
        self.try_pointwise_unary(|i, m| m.inverse().map_err(|_| Error::SingularSample { index: i }))
    }

    pub fn is_unitary_valued(&self, tol: f64) -> bool {
        self.samples.iter().all(|m| m.is_unitary(tol))
    }

    pub fn is_invertible_valued(&self, tol: f64) -> bool {
        self.samples.iter().all(|m| m.is_invertible(tol))
    }

    pub fn is_positive_valued(&self, tol: f64) -> bool {
        self.samples.iter().all(|m| m.is_positive_invertible(tol))
    }

    /// sup over the grid of `||x(s) - 1||`.
    pub fn max_dist_to_identity(&self) -> f64 {
        self.samples
            .iter()
            .map(|m| m.dist_to_identity())
            .fold(0.0, f64::max)
    }
}

/// Union of two sorted grids (deduplicated within 1e-12).
pub fn union_grid(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let v = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => {
                if x < y - 1e-12 {
                    i += 1;
                    x
                } else if y < x - 1e-12 {
                    j += 1;
                    y
                } else {
                    i += 1;
                    j += 1;
                    x
                }
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => break,
        };
        out.push(v);
    }
    out
}

/// Pointwise product on the union grid.
pub fn path_multiply(a: &MatrixPath, b: &MatrixPath) -> Result<MatrixPath> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(a.dim(), b.dim()));
    }
    let grid = union_grid(a.grid(), b.grid());
    let aa = a.resample(&grid)?;
    let bb = b.resample(&grid)?;
    let samples = par::map_indices(grid.len(), |i| aa.sample(i).mul(bb.sample(i)));
    MatrixPath::new(grid, samples)
}

/// Product of a sequence of paths, left to right, on the common union grid.
pub fn path_product(paths: &[MatrixPath]) -> Result<MatrixPath> {
    let first = paths
        .first()
        .ok_or_else(|| Error::InvalidInput("empty path product".into()))?;
    let mut acc = first.clone();
    for p in &paths[1..] {
        acc = path_multiply(&acc, p)?;
    }
    Ok(acc)
}

/// Pointwise commutator path `x y x⁻¹ y⁻¹`.
pub fn path_commutator(x: &MatrixPath, y: &MatrixPath) -> Result<MatrixPath> {
    if x.dim() != y.dim() {
        return Err(Error::DimMismatch(x.dim(), y.dim()));
    }
    let grid = union_grid(x.grid(), y.grid());
    let xx = x.resample(&grid)?;
    let yy = y.resample(&grid)?;
    let samples = par::try_map_indices(grid.len(), |i| {
        xx.sample(i)
            .commutator(yy.sample(i))
            .map_err(|_| Error::SingularSample { index: i })
    })?;
    MatrixPath::new(grid, samples)
}

/// sup over the union grid of the operator-norm distance.
///
/// Exact for the interpolants (norms of linear segments peak at endpoints);
/// a lower bound for the underlying continuous functions.
pub fn sup_distance(a: &MatrixPath, b: &MatrixPath) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(a.dim(), b.dim()));
    }
    let grid = union_grid(a.grid(), b.grid());
    let aa = a.resample(&grid)?;
    let bb = b.resample(&grid)?;
    let dists = par::map_indices(grid.len(), |i| aa.sample(i).sub(bb.sample(i)).op_norm());
    Ok(dists.into_iter().fold(0.0, f64::max))
}

impl EigenFunctions {
    /// Pointwise-sorted check plus the declared continuity modulus.
    pub fn validate(&self, max_jump: f64) -> Result<()> {
        for i in 0..self.grid.len() {
            for k in 1..self.dim {
                if self.values[k][i] < self.values[k - 1][i] - 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "eigenfunctions not sorted at sample {i}"
                    )));
                }
            }
        }
        for k in 0..self.dim {
            for i in 1..self.grid.len() {
                if (self.values[k][i] - self.values[k][i - 1]).abs() > max_jump {
                    return Err(Error::ResolutionTooCoarse { index: i });
                }
            }
        }
        Ok(())
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    /// Σ_k φ_k at each grid point.
    pub fn pointwise_sum(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.values.iter().map(|row| row[i]).sum())
            .collect()
    }

    /// max over grid and k of |φ_k|.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|row| row.iter().map(|v| v.abs()))
            .fold(0.0, f64::max)
    }
}

/// Continuous eigenvalue tracking along a structured path.
///
/// Pointwise `u(s) = q(s)·diag(e^{iφ_k(s)})·q(s)*` (unitary kind) or
/// `q(s)·diag(φ_k(s))·q(s)*` (self-adjoint kind). Adjacent samples are
/// matched by a minimal-cost assignment; degenerate clusters are re-mixed
/// toward the previous frame so the frame stays grid-continuous through
/// crossings. A final monotone re-sort yields the sorted [`EigenFunctions`]
/// (with the frame columns permuted alongside, pointwise).
pub fn track_eigenfunctions(
    u: &MatrixPath,
    kind: TrackKind,
) -> Result<(EigenFunctions, MatrixPath)> {
    let tracked = track_slots(u, kind)?;
    let (sorted, frame) = tracked.into_sorted();
    Ok((sorted, frame))
}

impl TrackedPath {
    /// Sort slots pointwise (permuting frame columns alongside).
    pub fn into_sorted(self) -> (EigenFunctions, MatrixPath) {
        let npts = self.grid.len();
        let m = self.slots.len();
        let mut values = vec![vec![0.0; npts]; m];
        let mut frames = Vec::with_capacity(npts);
        for i in 0..npts {
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| self.slots[a][i].partial_cmp(&self.slots[b][i]).unwrap());
            for (k, &slot) in order.iter().enumerate() {
                values[k][i] = self.slots[slot][i];
            }
            let q = &self.frame[i];
            let n = q.dim();
            let mut qp = CMatrix::zeros(n);
            for (k, &slot) in order.iter().enumerate() {
                for r in 0..n {
                    qp[(r, k)] = q[(r, slot)];
                }
            }
            frames.push(qp);
        }
        let dim = m;
        (
            EigenFunctions {
                dim,
                grid: self.grid.clone(),
                values,
            },
            MatrixPath::new(self.grid, frames).expect("frame path"),
        )
    }

    pub fn pointwise_sum(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.slots.iter().map(|row| row[i]).sum())
            .collect()
    }
}

/// Tracking that keeps the raw (continuous, unsorted) slot functions.
pub fn track_slots(u: &MatrixPath, kind: TrackKind) -> Result<TrackedPath> {
    let m = u.dim();
    let npts = u.len();
    match kind {
        TrackKind::Unitary => {
            if !u.is_unitary_valued(tol::STRUCTURAL * 10.0) {
                return Err(Error::NotStructured("unitary-valued"));
            }
        }
        TrackKind::SelfAdjoint => {
            if !u
                .samples()
                .iter()
                .all(|s| s.is_hermitian(tol::STRUCTURAL * 10.0))
            {
                return Err(Error::NotStructured("Hermitian-valued"));
            }
        }
    }

    let eig_kind = match kind {
        TrackKind::Unitary => EigKind::Unitary,
        TrackKind::SelfAdjoint => EigKind::Hermitian,
    };
    // Per-sample decompositions are independent.
    let raw: Vec<(Vec<Complex64>, CMatrix)> =
        par::try_map_indices(npts, |i| eig_normal_kind(u.sample(i), eig_kind))?;

    let mut slots = vec![vec![0.0f64; npts]; m];
    let mut frames: Vec<CMatrix> = Vec::with_capacity(npts);

    // Sample 0: take the solver order.
    let (vals0, q0) = &raw[0];
    for k in 0..m {
        slots[k][0] = match kind {
            TrackKind::Unitary => vals0[k].arg(),
            TrackKind::SelfAdjoint => vals0[k].re,
        };
    }
    frames.push(q0.clone());

    for i in 1..npts {
        let (vals, q) = &raw[i];
        let new_raw: Vec<f64> = vals
            .iter()
            .map(|v| match kind {
                TrackKind::Unitary => v.arg(),
                TrackKind::SelfAdjoint => v.re,
            })
            .collect();
        let prev: Vec<f64> = (0..m).map(|k| slots[k][i - 1]).collect();

        // Frame overlap |⟨q_prev_k, q_new_j⟩| breaks value ties at crossings.
        let prev_frame = frames[i - 1].clone();
        let n = q.dim();
        let mut overlap = vec![vec![0.0f64; m]; m];
        for (k, row) in overlap.iter_mut().enumerate() {
            for (j, o) in row.iter_mut().enumerate() {
                let mut ip = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    ip += prev_frame[(r, k)].conj() * q[(r, j)];
                }
                *o = ip.norm();
            }
        }
        const FRAME_WEIGHT: f64 = 1e-4;
        let cost = |k: usize, j: usize| -> f64 {
            let d = match kind {
                TrackKind::Unitary => wrap_to_pi(new_raw[j] - prev[k]).abs(),
                TrackKind::SelfAdjoint => (new_raw[j] - prev[k]).abs(),
            };
            d + FRAME_WEIGHT * (1.0 - overlap[k][j])
        };
        let assign = hungarian(m, &cost);

        // Ambiguity check: a pairwise swap that costs (almost) nothing but
        // lands on genuinely different values means the grid cannot decide.
        for k in 0..m {
            for l in k + 1..m {
                let cur = cost(k, assign[k]) + cost(l, assign[l]);
                let swapped = cost(k, assign[l]) + cost(l, assign[k]);
                let gap = swapped - cur;
                let value_gap = match kind {
                    TrackKind::Unitary => wrap_to_pi(new_raw[assign[k]] - new_raw[assign[l]]).abs(),
                    TrackKind::SelfAdjoint => (new_raw[assign[k]] - new_raw[assign[l]]).abs(),
                };
                if gap.abs() <= 1e-12 && value_gap > 1e-6 && cur > 1e-9 {
                    return Err(Error::TrackingAmbiguous {
                        index: i,
                        value_gap,
                    });
                }
            }
        }

        // Accumulate continuous values and build the permuted frame.
        let mut qp = CMatrix::zeros(n);
        for k in 0..m {
            let j = assign[k];
            slots[k][i] = match kind {
                TrackKind::Unitary => prev[k] + wrap_to_pi(new_raw[j] - prev[k]),
                TrackKind::SelfAdjoint => new_raw[j],
            };
            for r in 0..n {
                qp[(r, k)] = q[(r, j)];
            }
        }

        // Re-mix (nearly) degenerate clusters toward the previous frame, then
        // phase-align every column.
        let slot_vals_here: Vec<f64> = (0..m).map(|k| slots[k][i]).collect();
        remix_degenerate_clusters(&mut qp, &prev_frame, &slot_vals_here, kind);
        for k in 0..m {
            let mut ip = Complex64::new(0.0, 0.0);
            for r in 0..n {
                ip += prev_frame[(r, k)].conj() * qp[(r, k)];
            }
            if ip.norm() > 1e-12 {
                let phase = ip.conj() / ip.norm();
                for r in 0..n {
                    let z = qp[(r, k)];
                    qp[(r, k)] = z * phase;
                }
            }
        }
        frames.push(qp);
    }

    Ok(TrackedPath {
        grid: u.grid().to_vec(),
        slots,
        frame: frames,
    })
}

pub(crate) fn wrap_to_pi(x: f64) -> f64 {
    let mut y = x % (2.0 * std::f64::consts::PI);
    if y > std::f64::consts::PI {
        y -= 2.0 * std::f64::consts::PI;
    } else if y <= -std::f64::consts::PI {
        y += 2.0 * std::f64::consts::PI;
    }
    y
}

/// Within clusters of (numerically) equal diagonal values the eigenbasis is
/// arbitrary; rotate it onto the previous frame's columns (closest unitary of
/// the overlap matrix) so the frame varies continuously through crossings.
///
/// Clustering uses the freshly assigned slot values at this sample, i.e. the
/// diagonal the frame must reproduce — remixing within a value-cluster leaves
/// the pointwise reconstruction unchanged.
fn remix_degenerate_clusters(
    qp: &mut CMatrix,
    prev_frame: &CMatrix,
    slot_vals: &[f64],
    kind: TrackKind,
) {
    let n = qp.dim();
    let m = slot_vals.len();
    let ctol = 1e-7;
    let close = |a: f64, b: f64| -> bool {
        match kind {
            TrackKind::Unitary => wrap_to_pi(a - b).abs() <= ctol,
            TrackKind::SelfAdjoint => (a - b).abs() <= ctol,
        }
    };
    let mut visited = vec![false; m];
    for k in 0..m {
        if visited[k] {
            continue;
        }
        let mut cluster = vec![k];
        visited[k] = true;
        for l in k + 1..m {
            if !visited[l] && close(slot_vals[k], slot_vals[l]) {
                cluster.push(l);
                visited[l] = true;
            }
        }
        if cluster.len() < 2 {
            continue;
        }
        let c = cluster.len();
        // Overlap O = Qnew* Qprev on the cluster columns.
        let mut overlap = CMatrix::zeros(c);
        for (a, &ka) in cluster.iter().enumerate() {
            for (b, &kb) in cluster.iter().enumerate() {
                let mut s = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    s += qp[(r, ka)].conj() * prev_frame[(r, kb)];
                }
                overlap[(a, b)] = s;
            }
        }
        if let Ok((w, _)) = polar(&overlap) {
            // Qnew_cluster ← Qnew_cluster · w
            let mut newcols = vec![vec![Complex64::new(0.0, 0.0); c]; n];
            for r in 0..n {
                for b in 0..c {
                    let mut s = Complex64::new(0.0, 0.0);
                    for a in 0..c {
                        s += qp[(r, cluster[a])] * w[(a, b)];
                    }
                    newcols[r][b] = s;
                }
            }
            for (b, &kb) in cluster.iter().enumerate() {
                for r in 0..n {
                    qp[(r, kb)] = newcols[r][b];
                }
            }
        }
    }
}

/// O(n³) Hungarian algorithm (shortest augmenting paths, 1-based internal
/// indexing) for a square assignment problem given by a cost closure.
/// Returns `assign[row] = col`.
pub(crate) fn hungarian(n: usize, cost: &dyn Fn(usize, usize) -> f64) -> Vec<usize> {
    if n == 0 {
        return vec![];
    }
    const INF: f64 = f64::INFINITY;
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1]; // p[col] = row matched to col
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn multiply_by_identity_path() {
        let grid = uniform_grid(33);
        let a = MatrixPath::from_fn(2, grid.clone(), |t| {
            CMatrix::diag(&[Complex64::from_polar(1.0, t), c(1.0, 0.0)])
        })
        .unwrap();
        let e = MatrixPath::identity(2, grid);
        let prod = path_multiply(&a, &e).unwrap();
        assert!(sup_distance(&prod, &a).unwrap() < 1e-15);
    }

    #[test]
    fn constant_product() {
        let grid = uniform_grid(9);
        let x = sample::random_invertible(3, 1);
        let y = sample::random_invertible(3, 2);
        let a = MatrixPath::constant(x.clone(), grid.clone()).unwrap();
        let b = MatrixPath::constant(y.clone(), grid.clone()).unwrap();
        let prod = path_multiply(&a, &b).unwrap();
        let expect = MatrixPath::constant(x.mul(&y), grid).unwrap();
        assert!(sup_distance(&prod, &expect).unwrap() < 1e-12);
    }

    #[test]
    fn pointwise_product_against_direct() {
        let grid = uniform_grid(101);
        let r = sample::random_unitary(2, 5);
        let a = MatrixPath::from_fn(2, grid.clone(), |t| {
            r.mul(&CMatrix::diag(&[
                Complex64::from_polar(1.0, PI * t),
                Complex64::from_polar(1.0, -PI * t),
            ]))
        })
        .unwrap();
        let b = MatrixPath::from_fn(2, grid.clone(), |t| {
            CMatrix::diag(&[Complex64::from_polar(1.0, 0.5 * t), c(1.0, 0.0)])
        })
        .unwrap();
        let prod = path_multiply(&a, &b).unwrap();
        for (i, &t) in grid.iter().enumerate() {
            let direct = a.value_at(t).mul(&b.value_at(t));
            assert!(prod.sample(i).sub(&direct).op_norm() < 1e-12);
        }
    }

    #[test]
    fn sup_distance_scalar_case() {
        // diag(e^{iπs}, 1) vs identity peaks at s=1 with |e^{iπ}-1| = 2.
        let grid = uniform_grid(65);
        let a = MatrixPath::from_fn(2, grid.clone(), |t| {
            CMatrix::diag(&[Complex64::from_polar(1.0, PI * t), c(1.0, 0.0)])
        })
        .unwrap();
        let e = MatrixPath::identity(2, grid);
        let d = sup_distance(&a, &e).unwrap();
        assert!((d - 2.0).abs() < 1e-12, "sup = {d}");
    }

    #[test]
    fn refinement_never_decreases_sup() {
        let grid = uniform_grid(17);
        let a = MatrixPath::from_fn(2, grid.clone(), |t| {
            CMatrix::diag(&[Complex64::from_polar(1.0, 2.0 * t), c(1.0, 0.0)])
        })
        .unwrap();
        let e = MatrixPath::identity(2, grid);
        let coarse = sup_distance(&a, &e).unwrap();
        let fine_grid = uniform_grid(33);
        let af = a.resample(&fine_grid).unwrap();
        let ef = MatrixPath::identity(2, fine_grid);
        let fine = sup_distance(&af, &ef).unwrap();
        assert!(fine >= coarse - 1e-15);
    }

    #[test]
    fn track_constant_diagonal() {
        let grid = uniform_grid(33);
        let u = MatrixPath::constant(
            CMatrix::diag(&[
                Complex64::from_polar(1.0, PI / 4.0),
                Complex64::from_polar(1.0, -PI / 4.0),
            ]),
            grid,
        )
        .unwrap();
        let (phi, frame) = track_eigenfunctions(&u, TrackKind::Unitary).unwrap();
        for i in 0..phi.grid.len() {
            assert!((phi.values[0][i] + PI / 4.0).abs() < 1e-10);
            assert!((phi.values[1][i] - PI / 4.0).abs() < 1e-10);
        }
        // Pointwise reconstruction.
        for i in 0..u.len() {
            let d = CMatrix::diag(&[
                Complex64::from_polar(1.0, phi.values[0][i]),
                Complex64::from_polar(1.0, phi.values[1][i]),
            ]);
            let rec = d.conjugate_by(frame.sample(i));
            assert!(rec.sub(u.sample(i)).op_norm() < 1e-9);
        }
    }

    #[test]
    fn track_constructed_rotation_recovers_phases() {
        // u(s) = r(s) diag(e^{is}, e^{-is}) r(s)* for a smooth unitary path r.
        let grid = uniform_grid(257);
        let h = sample::random_traceless_hermitian(2, 12, 1.0);
        let u = MatrixPath::from_fn(2, grid, |t| {
            let r = crate::matcore::exp_i_hermitian(&h.scale(c(t, 0.0))).unwrap();
            CMatrix::diag(&[
                Complex64::from_polar(1.0, t),
                Complex64::from_polar(1.0, -t),
            ])
            .conjugate_by(&r)
        })
        .unwrap();
        let (phi, frame) = track_eigenfunctions(&u, TrackKind::Unitary).unwrap();
        for (i, &t) in phi.grid.clone().iter().enumerate() {
            assert!((phi.values[0][i] + t).abs() < 1e-6, "at {t}");
            assert!((phi.values[1][i] - t).abs() < 1e-6);
        }
        // Reconstruction certificate.
        let rec = MatrixPath::new(
            phi.grid.clone(),
            (0..phi.grid.len())
                .map(|i| {
                    CMatrix::diag(&[
                        Complex64::from_polar(1.0, phi.values[0][i]),
                        Complex64::from_polar(1.0, phi.values[1][i]),
                    ])
                    .conjugate_by(frame.sample(i))
                })
                .collect(),
        )
        .unwrap();
        assert!(sup_distance(&u, &rec).unwrap() < 1e-6);
    }

    #[test]
    fn crossing_sorted_output_is_continuous() {
        // Hermitian path with raw eigenvalues (s, 1-s): sorted output is
        // (min, max), continuous with a kink at the crossing.
        let grid = uniform_grid(65);
        let u = MatrixPath::from_fn(2, grid, |t| CMatrix::diag_real(&[t, 1.0 - t])).unwrap();
        let (phi, _) = track_eigenfunctions(&u, TrackKind::SelfAdjoint).unwrap();
        phi.validate(0.1).unwrap();
        for (i, &t) in phi.grid.clone().iter().enumerate() {
            assert!((phi.values[0][i] - t.min(1.0 - t)).abs() < 1e-10);
            assert!((phi.values[1][i] - t.max(1.0 - t)).abs() < 1e-10);
        }
    }

    #[test]
    fn tracked_sum_continuous_on_det_constant_path() {
        let grid = uniform_grid(129);
        let u = MatrixPath::from_fn(2, grid, |t| {
            CMatrix::diag(&[
                Complex64::from_polar(1.0, 2.0 * PI * t),
                Complex64::from_polar(1.0, -2.0 * PI * t),
            ])
        })
        .unwrap();
        let tracked = track_slots(&u, TrackKind::Unitary).unwrap();
        let sums = tracked.pointwise_sum();
        for w in sums.windows(2) {
            assert!((w[1] - w[0]).abs() < 1e-9);
        }
        // Branch tracking goes past ±π without wrapping.
        let maxval = tracked
            .slots
            .iter()
            .flat_map(|r| r.iter().copied())
            .fold(f64::MIN, f64::max);
        assert!(maxval > 1.5 * PI);
    }

    #[test]
    fn hungarian_small_cases() {
        let costs = [[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [3.0, 6.0, 9.0]];
        let a = hungarian(3, &|i, j| costs[i][j]);
        // Optimal: anti-diagonal (3+4+3=10 beats diagonal 1+4+9=14).
        assert_eq!(a, vec![2, 1, 0]);
        let b = hungarian(1, &|_, _| 5.0);
        assert_eq!(b, vec![0]);
    }

    #[test]
    fn grid_refinement_stable_at_shared_points() {
        let h = sample::random_traceless_hermitian(3, 21, 1.2);
        let build = |pts: usize| {
            MatrixPath::from_fn(3, uniform_grid(pts), |t| {
                crate::matcore::exp_i_hermitian(&h.scale(c(t, 0.0))).unwrap()
            })
            .unwrap()
        };
        let coarse = build(129);
        let fine = build(257);
        let (pc, _) = track_eigenfunctions(&coarse, TrackKind::Unitary).unwrap();
        let (pf, _) = track_eigenfunctions(&fine, TrackKind::Unitary).unwrap();
        for k in 0..3 {
            for i in 0..129 {
                let vc = pc.values[k][i];
                let vf = pf.values[k][2 * i];
                assert!((vc - vf).abs() < 1e-7, "slot {k} point {i}: {vc} vs {vf}");
            }
        }
    }
}
