//! Gauge-continuous instantaneous eigendecomposition along a parameter path,
//! and construction of the exact counterdiabatic field.
//!
//! Eigenstates are tracked across grid points by maximum-overlap continuation
//! (energy-sorted order breaks at avoided crossings), with automatic grid
//! bisection until adjacent overlaps exceed the tracking threshold. Phases are
//! fixed by discrete parallel transport: ⟨n_{λ_k}|n_{λ_{k+1}}⟩ is made real
//! and non-negative.

use num_complex::Complex64 as C64;

use crate::control::ControlHamiltonian;
use crate::error::{Error, Result};
use crate::operator::{CMat, Operator};

/// Tracking/validation options for frame construction and CD evaluation.
#[derive(Clone, Debug)]
pub struct FrameOptions {
    /// Gap floor as a fraction of the local spectral range. Near-degeneracies
    /// below it abort with a diagnostic rather than silently producing huge CD
    /// amplitudes.
    pub gap_floor_rel: f64,
    /// Minimum acceptable |⟨n(λ_k)|n(λ_{k+1})⟩| before the interval is bisected.
    pub min_overlap: f64,
    /// Hard cap on total grid points after refinement.
    pub max_points: usize,
    /// Symmetry sector label per *basis state*. When present, the CD sum and
    /// the gap guard are restricted within sectors; states that exactly cross
    /// must be declared in different sectors by the caller.
    pub sectors: Option<Vec<usize>>,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self { gap_floor_rel: 1e-8, min_overlap: 0.8, max_points: 1 << 16, sectors: None }
    }
}

/// Instantaneous eigensystem over a parameter grid, gauge-continuous, with
/// per-point Berry connections i⟨n|∂_λ n⟩ from central differences.
#[derive(Clone, Debug)]
pub struct SpectralFrame {
    grid: Vec<f64>,
    energies: Vec<Vec<f64>>,
    vectors: Vec<CMat>,
    berry: Vec<Vec<C64>>,
    state_sectors: Option<Vec<usize>>,
    options: FrameOptions,
}

/// Eigendecomposition with eigenvalues sorted ascending and a deterministic
/// per-column phase (largest-magnitude component made real positive).
pub fn sorted_eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let se = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let mut vals = Vec::with_capacity(n);
    let mut vecs = CMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vals.push(se.eigenvalues[k]);
        let mut best = 0usize;
        let mut best_mag = 0.0;
        for i in 0..n {
            let mag = se.eigenvectors[(i, k)].norm();
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        let phase = {
            let z = se.eigenvectors[(best, k)];
            if z.norm() == 0.0 { C64::new(1.0, 0.0) } else { z / z.norm() }
        };
        for i in 0..n {
            vecs[(i, col)] = se.eigenvectors[(i, k)] * phase.conj();
        }
    }
    (vals, vecs)
}

/// One sweep of 2×2 Jacobi rotations on the residual V†HV, polishing the
/// eigenpairs. The base solver leaves ~1e-8-level contamination in small
/// eigenvector components; the CD field divides small matrix elements by
/// small gaps, so it needs the componentwise accuracy this restores.
fn refine_eigenpairs(h: &CMat, vals: &mut [f64], vecs: &mut CMat) {
    let n = vals.len();
    let mut r = vecs.adjoint() * h * &*vecs;
    for _ in 0..2 {
        for a in 0..n {
            for b in (a + 1)..n {
                let w = r[(a, b)];
                let wmag = w.norm();
                if wmag < 1e-300 {
                    continue;
                }
                // stable complex Jacobi rotation (phase-absorbed real form)
                let alpha = r[(a, a)].re;
                let beta = r[(b, b)].re;
                let phase = w / C64::new(wmag, 0.0); // e^{iφ}
                let zeta = (beta - alpha) / (2.0 * wmag);
                let t = -zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = [[c, −s],[s·e^{−iφ}, c·e^{−iφ}]] (column phases free)
                let (ja0, ja1) = (C64::new(c, 0.0), phase.conj() * s);
                let (jb0, jb1) = (C64::new(-s, 0.0), phase.conj() * c);
                for i in 0..n {
                    let va = vecs[(i, a)];
                    let vb = vecs[(i, b)];
                    vecs[(i, a)] = va * ja0 + vb * ja1;
                    vecs[(i, b)] = va * jb0 + vb * jb1;
                }
                // residual follows the rotation: R ← J†RJ
                for i in 0..n {
                    let ria = r[(i, a)];
                    let rib = r[(i, b)];
                    r[(i, a)] = ria * ja0 + rib * ja1;
                    r[(i, b)] = ria * jb0 + rib * jb1;
                }
                for j in 0..n {
                    let raj = r[(a, j)];
                    let rbj = r[(b, j)];
                    r[(a, j)] = ja0.conj() * raj + ja1.conj() * rbj;
                    r[(b, j)] = jb0.conj() * raj + jb1.conj() * rbj;
                }
                // exact post-rotation diagonal, sidestepping the cancellation
                r[(a, a)] = C64::new(alpha + t * wmag, 0.0);
                r[(b, b)] = C64::new(beta - t * wmag, 0.0);
                r[(a, b)] = C64::new(0.0, 0.0);
                r[(b, a)] = C64::new(0.0, 0.0);
            }
        }
    }
    for k in 0..n {
        vals[k] = r[(k, k)].re;
    }
    // restore ascending order if rotations reshuffled near-degenerate pairs
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| vals[x].partial_cmp(&vals[y]).unwrap());
    if order.iter().enumerate().any(|(i, &k)| i != k) {
        let old_vals = vals.to_vec();
        let old_vecs = vecs.clone();
        for (col, &k) in order.iter().enumerate() {
            vals[col] = old_vals[k];
            for i in 0..n {
                vecs[(i, col)] = old_vecs[(i, k)];
            }
        }
    }
}

/// [`sorted_eigh`] plus Jacobi polishing of the eigenpairs.
pub fn sorted_eigh_refined(m: &CMat) -> (Vec<f64>, CMat) {
    let (mut vals, mut vecs) = sorted_eigh(m);
    refine_eigenpairs(m, &mut vals, &mut vecs);
    (vals, vecs)
}

/// Greedy maximum-overlap assignment between a reference eigenbasis and a
/// freshly diagonalized one. Returns (permutation, worst matched |overlap|):
/// `perm[slot] = column of fresh basis continuing reference state slot`.
pub(crate) fn match_states_pub(reference: &CMat, fresh: &CMat) -> (Vec<usize>, f64) {
    match_states(reference, fresh)
}

pub(crate) fn align_to_pub(
    reference: &CMat,
    vals: &[f64],
    vecs: &CMat,
    perm: &[usize],
) -> (Vec<f64>, CMat) {
    align_to(reference, vals, vecs, perm)
}

fn match_states(reference: &CMat, fresh: &CMat) -> (Vec<usize>, f64) {
    let n = reference.ncols();
    let overlap = reference.adjoint() * fresh;
    let mut entries: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for slot in 0..n {
        for j in 0..n {
            entries.push((overlap[(slot, j)].norm(), slot, j));
        }
    }
    entries.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut assigned = 0;
    let mut worst: f64 = 1.0;
    for (mag, slot, j) in entries {
        if perm[slot] == usize::MAX && !used[j] {
            perm[slot] = j;
            used[j] = true;
            worst = worst.min(mag);
            assigned += 1;
            if assigned == n {
                break;
            }
        }
    }
    (perm, worst)
}

/// Apply a permutation and parallel-transport phase fix so that
/// ⟨ref_n|new_n⟩ is real ≥ 0 for every n.
fn align_to(reference: &CMat, vals: &[f64], vecs: &CMat, perm: &[usize]) -> (Vec<f64>, CMat) {
    let n = reference.ncols();
    let mut out_vals = vec![0.0; n];
    let mut out_vecs = CMat::zeros(n, n);
    for slot in 0..n {
        let j = perm[slot];
        out_vals[slot] = vals[j];
        let mut ov = C64::new(0.0, 0.0);
        for i in 0..n {
            ov += reference[(i, slot)].conj() * vecs[(i, j)];
        }
        let phase = if ov.norm() == 0.0 { C64::new(1.0, 0.0) } else { ov / ov.norm() };
        for i in 0..n {
            out_vecs[(i, slot)] = vecs[(i, j)] * phase.conj();
        }
    }
    (out_vals, out_vecs)
}

/// Sector label of each eigenstate, by where its weight sits in the declared
/// basis-state labels.
fn eigenstate_sectors(vecs: &CMat, basis_sectors: &[usize]) -> Vec<usize> {
    let n = vecs.ncols();
    let max_label = basis_sectors.iter().copied().max().unwrap_or(0);
    let mut out = Vec::with_capacity(n);
    for col in 0..n {
        let mut weight = vec![0.0; max_label + 1];
        for i in 0..n {
            weight[basis_sectors[i]] += vecs[(i, col)].norm_sqr();
        }
        let mut best = 0;
        for (l, w) in weight.iter().enumerate() {
            if *w > weight[best] {
                best = l;
            }
        }
        out.push(best);
    }
    out
}

fn spectral_range(vals: &[f64]) -> f64 {
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Minimum gap among pairs that share a sector (all pairs when no sectors are
/// declared). Returns None when no pair is subject to the guard.
fn guarded_min_gap(vals: &[f64], sectors: Option<&[usize]>) -> Option<f64> {
    let n = vals.len();
    let mut min_gap: Option<f64> = None;
    for a in 0..n {
        for b in (a + 1)..n {
            if let Some(s) = sectors {
                if s[a] != s[b] {
                    continue;
                }
            }
            let g = (vals[a] - vals[b]).abs();
            min_gap = Some(min_gap.map_or(g, |m: f64| m.min(g)));
        }
    }
    min_gap
}

/// Instantaneous eigendecomposition along `grid`, tracked by maximum overlap
/// with grid refinement, continuity-gauged.
pub fn eigendecompose_continuous(
    h: &ControlHamiltonian,
    grid: &[f64],
    options: &FrameOptions,
) -> Result<SpectralFrame> {
    if grid.len() < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 points".into()));
    }
    let increasing = grid[1] > grid[0];
    let strictly_monotone = grid.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
    if !strictly_monotone {
        return Err(Error::InvalidParameter("grid must be strictly monotone".into()));
    }
    if let Some(s) = &options.sectors {
        if s.len() != h.dim() {
            return Err(Error::DimensionMismatch(s.len(), h.dim()));
        }
    }

    let mut lambdas: Vec<f64> = Vec::with_capacity(grid.len());
    let mut energies: Vec<Vec<f64>> = Vec::new();
    let mut vectors: Vec<CMat> = Vec::new();

    let (vals0, vecs0) = sorted_eigh(&h.at(grid[0]));
    check_gap(grid[0], &vals0, &vecs0, options)?;
    lambdas.push(grid[0]);
    energies.push(vals0);
    vectors.push(vecs0);

    for &target in &grid[1..] {
        // walk towards `target`, bisecting whenever tracking confidence drops
        let mut pending = vec![target];
        while let Some(&next) = pending.last() {
            let prev_l = *lambdas.last().unwrap();
            let prev_v = vectors.last().unwrap();
            let (vals, vecs) = sorted_eigh(&h.at(next));
            let (perm, worst) = match_states(prev_v, &vecs);
            if worst <= options.min_overlap {
                if lambdas.len() + pending.len() >= options.max_points
                    || (next - prev_l).abs() < 1e-13 * (grid[grid.len() - 1] - grid[0]).abs()
                {
                    return Err(Error::TrackingLost { lambda: next, overlap: worst });
                }
                pending.push(0.5 * (prev_l + next));
                continue;
            }
            let (vals, vecs) = align_to(prev_v, &vals, &vecs, &perm);
            check_gap(next, &vals, &vecs, options)?;
            lambdas.push(next);
            energies.push(vals);
            vectors.push(vecs);
            pending.pop();
        }
    }

    // Berry connections i⟨n|∂_λ n⟩ by central differences on the gauged frame.
    let np = lambdas.len();
    let dim = h.dim();
    let mut berry = vec![vec![C64::new(0.0, 0.0); dim]; np];
    for k in 0..np {
        let (ka, kb) = if k == 0 {
            (0, 1)
        } else if k == np - 1 {
            (np - 2, np - 1)
        } else {
            (k - 1, k + 1)
        };
        let dl = lambdas[kb] - lambdas[ka];
        for n in 0..dim {
            let mut d = C64::new(0.0, 0.0);
            for i in 0..dim {
                d += vectors[k][(i, n)].conj() * (vectors[kb][(i, n)] - vectors[ka][(i, n)]);
            }
            berry[k][n] = C64::i() * d / C64::new(dl, 0.0);
        }
    }

    let state_sectors = options
        .sectors
        .as_ref()
        .map(|s| eigenstate_sectors(&vectors[0], s));

    Ok(SpectralFrame {
        grid: lambdas,
        energies,
        vectors,
        berry,
        state_sectors,
        options: options.clone(),
    })
}

fn check_gap(lambda: f64, vals: &[f64], vecs: &CMat, options: &FrameOptions) -> Result<()> {
    let sectors = options
        .sectors
        .as_ref()
        .map(|s| eigenstate_sectors(vecs, s));
    let range = spectral_range(vals);
    let floor = options.gap_floor_rel * range;
    if let Some(gap) = guarded_min_gap(vals, sectors.as_deref()) {
        if gap < floor || range == 0.0 {
            return Err(Error::NearDegeneracy { lambda, gap, floor });
        }
    }
    Ok(())
}

impl SpectralFrame {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn energies(&self, k: usize) -> &[f64] {
        &self.energies[k]
    }

    pub fn vectors(&self, k: usize) -> &CMat {
        &self.vectors[k]
    }

    /// i⟨n|∂_λ n⟩ at grid point k (in the frame's own gauge).
    pub fn berry_connection(&self, k: usize) -> &[C64] {
        &self.berry[k]
    }

    /// Symmetry-sector label of each tracked state, when sectors were declared.
    pub fn state_sectors(&self) -> Option<&[usize]> {
        self.state_sectors.as_deref()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn options(&self) -> &FrameOptions {
        &self.options
    }

    pub fn covers(&self, lambda: f64) -> bool {
        let lo = self.grid[0].min(*self.grid.last().unwrap());
        let hi = self.grid[0].max(*self.grid.last().unwrap());
        lambda >= lo - 1e-12 * (hi - lo) && lambda <= hi + 1e-12 * (hi - lo)
    }

    fn nearest_index(&self, lambda: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, l) in self.grid.iter().enumerate() {
            let d = (l - lambda).abs();
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }

    /// Fresh eigendecomposition at an arbitrary λ, permuted and phase-aligned
    /// to the tracked order of the nearest grid point.
    pub fn eigensystem_at(&self, h: &ControlHamiltonian, lambda: f64) -> Result<(Vec<f64>, CMat)> {
        if !self.covers(lambda) {
            return Err(Error::InvalidParameter(format!("λ = {lambda} outside frame grid")));
        }
        let kref = self.nearest_index(lambda);
        let (vals, vecs) = sorted_eigh(&h.at(lambda));
        let (perm, worst) = match_states(&self.vectors[kref], &vecs);
        if worst <= self.options.min_overlap {
            return Err(Error::TrackingLost { lambda, overlap: worst });
        }
        Ok(align_to(&self.vectors[kref], &vals, &vecs, &perm))
    }
}

/// The exact counterdiabatic field at (λ, λ̇):
/// H_CD = i λ̇ Σ_{n, m≠n} |n⟩⟨n|∂_λH|m⟩⟨m| / (E_m − E_n),
/// with the sum restricted within declared symmetry sectors.
pub fn cd_field(
    frame: &SpectralFrame,
    h: &ControlHamiltonian,
    lambda: f64,
    lambda_dot: f64,
) -> Result<Operator> {
    if !frame.covers(lambda) {
        return Err(Error::InvalidParameter(format!("λ = {lambda} outside frame grid")));
    }
    cd_field_direct(h, lambda, lambda_dot, &frame.options)
}

/// Frame-free CD evaluation; the projector structure of the sum is gauge
/// invariant, so no continuation is needed — only sector labels and the gap
/// guard.
pub fn cd_field_direct(
    h: &ControlHamiltonian,
    lambda: f64,
    lambda_dot: f64,
    options: &FrameOptions,
) -> Result<Operator> {
    let n = h.dim();
    if lambda_dot == 0.0 {
        return Ok(Operator::zeros(n));
    }
    let (vals, vecs) = sorted_eigh_refined(&h.at(lambda));
    let sectors = options.sectors.as_ref().map(|s| eigenstate_sectors(&vecs, s));
    let range = spectral_range(&vals);
    let floor = options.gap_floor_rel * range;
    let dh = h.derivative_at(lambda);
    // M = V† (∂H) V in the instantaneous eigenbasis
    let m = vecs.adjoint() * &dh * &vecs;
    let mut k = CMat::zeros(n, n); // coefficient matrix in the eigenbasis
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            if let Some(s) = &sectors {
                if s[a] != s[b] {
                    continue;
                }
            }
            let gap = vals[b] - vals[a];
            if gap.abs() < floor || range == 0.0 {
                return Err(Error::Degeneracy { lambda, gap: gap.abs() });
            }
            k[(a, b)] = C64::i() * C64::new(lambda_dot, 0.0) * m[(a, b)] / C64::new(gap, 0.0);
        }
    }
    let out = &vecs * k * vecs.adjoint();
    // hermitize away floating-point asymmetry before tagging
    let herm = (&out + out.adjoint()) * C64::new(0.5, 0.0);
    Operator::hermitian(herm)
}

/// Closed-form two-level counterdiabatic coefficient for H = λσz + Ωσx:
/// f_CD = −½ λ̇ Ω / (λ² + Ω²). The caller forms f_CD·σy.
pub fn cd_field_lz(lambda: f64, lambda_dot: f64, omega: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::InvalidParameter(
            "Ω = 0: Landau-Zener model degenerates to crossing levels".into(),
        ));
    }
    Ok(-0.5 * lambda_dot * omega / (lambda * lambda + omega * omega))
}
