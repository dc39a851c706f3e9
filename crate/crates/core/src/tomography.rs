// Copyright 2026 The fockdistill Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


//! Maximum-likelihood reconstruction from homodyne samples and loss
//! calibration from a heralded single-photon state.
//!
//! Each measurement outcome is a POVM element `Π_j` built from quadrature
//! eigenstates `⟨n|x, θ⟩ = ψ_n(x) e^{inθ}`. Two-mode records only carry the
//! phase sum θ1 + θ2, so their element is averaged over the unknown phase
//! difference; it then splits into blocks of fixed `n1 - n2`. Elements are
//! stored as blocks over a subset of basis indices, either rank one or dense.

use alloc::vec;
use alloc::vec::Vec;
use alloc::format;
use core::f64::consts::TAU;

#[allow(unused_imports)] // unused when a dependent links std
use num_traits::Float;

use crate::fock::{DensityOperator, FockCutoff, ModeCount};
use crate::homodyne::{fold_angle, hermite_functions, QuadratureGrid};
use crate::linalg::CMatrix;
use crate::{Error, Result, C64};

/// Two-mode outcome annotated with the local oscillator phase sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoModeRecord {
    pub x1: f64,
    pub x2: f64,
    pub theta_sum: f64,
}

/// Single-mode outcome; `phase` is `None` when the local oscillator phase
/// was not tracked.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleModeRecord {
    pub x: f64,
    pub phase: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Binning {
    Off,
    /// Bin to [`DEFAULT_MAX_BINS`] elements from [`AUTO_BINNING_THRESHOLD`] samples on.
    Auto,
    /// Always bin, with at most this many elements.
    MaxBins(usize),
}

pub const DEFAULT_MAX_BINS: usize = 10_000;
pub const AUTO_BINNING_THRESHOLD: usize = 200_000;
/// Phase bins used when binning, per turn.
pub const PHASE_BINS: usize = 64;
/// Two-mode datasets must populate at least this many phase-sum bins of
/// width 2π/[`COVERAGE_BINS`].
pub const MIN_PHASE_COVERAGE: usize = 8;
pub const COVERAGE_BINS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconstructionOptions {
    pub cutoff: FockCutoff,
    pub max_iterations: usize,
    /// Stop once `|ΔL| / |L|` falls below this.
    pub tolerance: f64,
    pub binning: Binning,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self { cutoff: FockCutoff::new(3).unwrap(), max_iterations: 2000, tolerance: 1e-9, binning: Binning::Auto }
    }
}

impl ReconstructionOptions {
    pub fn with_cutoff(n_max: usize) -> Result<Self> {
        Ok(Self { cutoff: FockCutoff::new(n_max)?, ..Self::default() })
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter { name: "tolerance", value: self.tolerance });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter { name: "max_iterations", value: 0.0 });
        }
        if let Binning::MaxBins(0) = self.binning {
            return Err(Error::InvalidParameter { name: "max_bins", value: 0.0 });
        }
        Ok(())
    }

    fn max_bins(&self, samples: usize) -> Option<usize> {
        match self.binning {
            Binning::Off => None,
            Binning::Auto if samples < AUTO_BINNING_THRESHOLD => None,
            Binning::Auto => Some(DEFAULT_MAX_BINS),
            Binning::MaxBins(n) => Some(n),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub state: DensityOperator,
    /// Log-likelihood of every iterate, starting with the maximally mixed state.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Number of distinct POVM elements after optional binning.
    pub elements: usize,
}

/// Rank-one projector onto the single-mode quadrature eigenstate `|x, θ⟩`.
pub fn homodyne_projector(x: f64, theta: f64, cutoff: FockCutoff) -> CMatrix {
    let mut psi = vec![0.0; cutoff.dim()];
    hermite_functions(x, &mut psi);
    let v: Vec<C64> = psi.iter().enumerate().map(|(n, &p)| C64::from_polar(p, n as f64 * theta)).collect();
    CMatrix::outer(&v)
}

/// Number of phase-sum bins of width 2π/[`COVERAGE_BINS`] that contain data.
pub fn phase_coverage(theta_sums: impl IntoIterator<Item = f64>) -> usize {
    let mut seen = [false; COVERAGE_BINS];
    for t in theta_sums {
        if t.is_finite() {
            seen[bin_of_angle(t, COVERAGE_BINS)] = true;
        }
    }
    seen.iter().filter(|&&s| s).count()
}

fn bin_of_angle(theta: f64, bins: usize) -> usize {
    let b = (fold_angle(theta) / TAU * bins as f64) as usize;
    b.min(bins - 1)
}

struct Block {
    start: usize,
    len: usize,
    values: usize,
    dense: bool,
}

/// All POVM elements of a dataset in flat storage.
struct Povm {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<C64>,
    blocks: Vec<Block>,
    /// `(weight, first block, end block)` per element.
    elements: Vec<(f64, usize, usize)>,
}

impl Povm {
    fn new(dim: usize) -> Self {
        Self { dim, indices: Vec::new(), values: Vec::new(), blocks: Vec::new(), elements: Vec::new() }
    }

    fn begin(&mut self, weight: f64) {
        self.elements.push((weight, self.blocks.len(), self.blocks.len()));
    }

    fn push_block(&mut self, indices: &[usize], values: &[C64], dense: bool) {
        debug_assert_eq!(values.len(), if dense { indices.len() * indices.len() } else { indices.len() });
        self.blocks.push(Block { start: self.indices.len(), len: indices.len(), values: self.values.len(), dense });
        self.indices.extend_from_slice(indices);
        self.values.extend_from_slice(values);
        self.elements.last_mut().expect("begin first").2 += 1;
    }

    fn probability(&self, rho: &[C64], element: usize, scratch: &mut Vec<C64>) -> f64 {
        let (_, b0, b1) = self.elements[element];
        let d = self.dim;
        let mut p = 0.0;
        for block in &self.blocks[b0..b1] {
            let idx = &self.indices[block.start..block.start + block.len];
            if block.dense {
                // Tr(ρΠ) = Σ ρ_ba Π_ab
                let m = &self.values[block.values..block.values + block.len * block.len];
                for (a, &ia) in idx.iter().enumerate() {
                    for (b, &ib) in idx.iter().enumerate() {
                        p += (rho[ib * d + ia] * m[a * block.len + b]).re;
                    }
                }
            } else {
                let w = &self.values[block.values..block.values + block.len];
                scratch.clear();
                scratch.extend(idx.iter().map(|&ia| idx.iter().zip(w).map(|(&ib, &wb)| rho[ia * d + ib] * wb).sum::<C64>()));
                p += w.iter().zip(scratch.iter()).map(|(wa, ua)| (wa.conj() * ua).re).sum::<f64>();
            }
        }
        p
    }

    fn accumulate(&self, out: &mut [C64], element: usize, factor: f64) {
        let (_, b0, b1) = self.elements[element];
        let d = self.dim;
        for block in &self.blocks[b0..b1] {
            let idx = &self.indices[block.start..block.start + block.len];
            if block.dense {
                let m = &self.values[block.values..block.values + block.len * block.len];
                for (a, &ia) in idx.iter().enumerate() {
                    for (b, &ib) in idx.iter().enumerate() {
                        out[ia * d + ib] += m[a * block.len + b] * factor;
                    }
                }
            } else {
                let w = &self.values[block.values..block.values + block.len];
                for (a, &ia) in idx.iter().enumerate() {
                    let wa = w[a] * factor;
                    for (b, &ib) in idx.iter().enumerate() {
                        out[ia * d + ib] += wa * w[b].conj();
                    }
                }
            }
        }
    }

    /// Log-likelihood of `rho` and the operator `R = Σ f_j Π_j / p_j`.
    fn evaluate(&self, rho: &CMatrix, with_r: bool) -> (f64, CMatrix) {
        let total: f64 = self.elements.iter().map(|e| e.0).sum();
        let mut r = CMatrix::zeros(if with_r { self.dim } else { 0 });
        let mut scratch = Vec::new();
        let mut ll = 0.0;
        for j in 0..self.elements.len() {
            let w = self.elements[j].0;
            let p = self.probability(rho.as_slice(), j, &mut scratch).max(f64::MIN_POSITIVE);
            ll += w * p.ln();
            if with_r {
                self.accumulate(r.as_mut_slice(), j, w / (total * p));
            }
        }
        (ll, r)
    }
}

/// `∫_a^b ψ_m ψ_n dx` for all `m, n < dim`, by composite Simpson's rule.
fn pair_integrals(a: f64, b: f64, dim: usize) -> Vec<f64> {
    const INTERVALS: usize = 16;
    let h = (b - a) / INTERVALS as f64;
    let mut out = vec![0.0; dim * dim];
    let mut psi = vec![0.0; dim];
    for k in 0..=INTERVALS {
        let w = if k == 0 || k == INTERVALS {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        hermite_functions(a + k as f64 * h, &mut psi);
        for m in 0..dim {
            for n in 0..dim {
                out[m * dim + n] += w * h / 3.0 * psi[m] * psi[n];
            }
        }
    }
    out
}

/// Equal-width bins spanning the data range.
struct Axis {
    min: f64,
    width: f64,
    bins: usize,
}

impl Axis {
    fn spanning(values: impl Iterator<Item = f64>, bins: usize) -> Self {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let width = ((hi - lo) / bins as f64).max(1e-12);
        Self { min: lo, width, bins }
    }

    fn bin(&self, x: f64) -> usize {
        (((x - self.min) / self.width) as usize).min(self.bins - 1)
    }

    fn edges(&self, k: usize) -> (f64, f64) {
        (self.min + k as f64 * self.width, self.min + (k + 1) as f64 * self.width)
    }
}

fn check_support(x: f64) -> Result<()> {
    if QuadratureGrid::default().contains(x) {
        Ok(())
    } else {
        Err(Error::OutsideGrid(x))
    }
}

fn two_mode_povm(records: &[TwoModeRecord], cutoff: FockCutoff, max_bins: Option<usize>) -> Povm {
    let d = cutoff.dim();
    let mut povm = Povm::new(cutoff.two_mode_dim());
    let n_max = cutoff.n_max() as isize;
    // basis indices grouped by n1 - n2
    let blocks: Vec<Vec<(usize, usize)>> = (-n_max..=n_max)
        .map(|k| {
            (0..d)
                .filter_map(|n2| {
                    let n1 = n2 as isize + k;
                    (0..d as isize).contains(&n1).then_some((n1 as usize, n2))
                })
                .collect()
        })
        .collect();
    let mut idx = Vec::new();
    let mut vals = Vec::new();

    match max_bins {
        None => {
            let (mut psi1, mut psi2) = (vec![0.0; d], vec![0.0; d]);
            for r in records {
                hermite_functions(r.x1, &mut psi1);
                hermite_functions(r.x2, &mut psi2);
                povm.begin(1.0);
                for block in &blocks {
                    idx.clear();
                    vals.clear();
                    for &(n1, n2) in block {
                        idx.push(cutoff.index(n1, n2));
                        vals.push(C64::from_polar(psi1[n1] * psi2[n2], n2 as f64 * r.theta_sum));
                    }
                    povm.push_block(&idx, &vals, false);
                }
            }
        }
        Some(max_bins) => {
            let nx = ((max_bins / PHASE_BINS) as f64).sqrt().floor().max(1.0) as usize;
            let ax1 = Axis::spanning(records.iter().map(|r| r.x1), nx);
            let ax2 = Axis::spanning(records.iter().map(|r| r.x2), nx);
            let cell = |r: &TwoModeRecord| (ax1.bin(r.x1) * nx + ax2.bin(r.x2)) * PHASE_BINS + bin_of_angle(r.theta_sum, PHASE_BINS);
            let mut stats = vec![(0usize, C64::new(0.0, 0.0)); nx * nx * PHASE_BINS];
            for r in records {
                let s = &mut stats[cell(r)];
                s.0 += 1;
                s.1 += C64::from_polar(1.0, r.theta_sum);
            }
            let ints1: Vec<Vec<f64>> = (0..nx).map(|k| { let (a, b) = ax1.edges(k); pair_integrals(a, b, d) }).collect();
            let ints2: Vec<Vec<f64>> = (0..nx).map(|k| { let (a, b) = ax2.edges(k); pair_integrals(a, b, d) }).collect();
            for (c, &(count, phasor)) in stats.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let s = phasor.arg();
                let (i1, i2) = (c / PHASE_BINS / nx, c / PHASE_BINS % nx);
                let (m1, m2) = (&ints1[i1], &ints2[i2]);
                povm.begin(count as f64);
                for block in &blocks {
                    idx.clear();
                    vals.clear();
                    for &(a1, a2) in block {
                        idx.push(cutoff.index(a1, a2));
                        for &(b1, b2) in block {
                            let mag = m1[a1 * d + b1] * m2[a2 * d + b2];
                            vals.push(C64::from_polar(mag, (a2 as f64 - b2 as f64) * s));
                        }
                    }
                    povm.push_block(&idx, &vals, true);
                }
            }
        }
    }
    povm
}

fn single_mode_povm(records: &[SingleModeRecord], cutoff: FockCutoff, max_bins: Option<usize>) -> Povm {
    let d = cutoff.dim();
    let mut povm = Povm::new(d);
    let all: Vec<usize> = (0..d).collect();
    let mut psi = vec![0.0; d];
    match max_bins {
        None => {
            for r in records {
                hermite_functions(r.x, &mut psi);
                povm.begin(1.0);
                match r.phase {
                    Some(theta) => {
                        let v: Vec<C64> = psi.iter().enumerate().map(|(n, &p)| C64::from_polar(p, n as f64 * theta)).collect();
                        povm.push_block(&all, &v, false);
                    }
                    None => {
                        for (n, &p) in psi.iter().enumerate().take(d) {
                            povm.push_block(&[n], &[C64::new(p, 0.0)], false);
                        }
                    }
                }
            }
        }
        Some(max_bins) => {
            let phased = records.iter().any(|r| r.phase.is_some());
            let phase_bins = if phased { PHASE_BINS } else { 1 };
            let nx = (max_bins / phase_bins).max(1);
            let ax = Axis::spanning(records.iter().map(|r| r.x), nx);
            // records without a phase go to their own column
            let cols = phase_bins + 1;
            let mut stats = vec![(0usize, C64::new(0.0, 0.0)); nx * cols];
            for r in records {
                let col = r.phase.map_or(phase_bins, |t| bin_of_angle(t, phase_bins));
                let s = &mut stats[ax.bin(r.x) * cols + col];
                s.0 += 1;
                s.1 += C64::from_polar(1.0, r.phase.unwrap_or(0.0));
            }
            for (c, &(count, phasor)) in stats.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let (a, b) = ax.edges(c / cols);
                let m = pair_integrals(a, b, d);
                povm.begin(count as f64);
                if c % cols == phase_bins {
                    for n in 0..d {
                        povm.push_block(&[n], &[C64::new(m[n * d + n], 0.0)], true);
                    }
                } else {
                    let t = phasor.arg();
                    let vals: Vec<C64> = (0..d * d)
                        .map(|k| C64::from_polar(m[k], (k / d) as f64 * t - (k % d) as f64 * t))
                        .collect();
                    povm.push_block(&all, &vals, true);
                }
            }
        }
    }
    povm
}

fn iterate(povm: &Povm, modes: ModeCount, opts: &ReconstructionOptions) -> Result<Reconstruction> {
    let dim = povm.dim;
    let mut rho = CMatrix::identity(dim).scaled(1.0 / dim as f64);
    let (mut ll, mut r) = povm.evaluate(&rho, true);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let (next, next_ll, next_r) = step(povm, &rho, &r, ll);
        let change = (next_ll - ll).abs() / ll.abs().max(f64::MIN_POSITIVE);
        rho = next;
        ll = next_ll;
        r = next_r;
        trace.push(ll);
        if change < opts.tolerance {
            converged = true;
            break;
        }
    }
    let state = finish(rho, modes, opts.cutoff)?;
    Ok(Reconstruction { state, log_likelihood: trace, iterations, converged, elements: povm.elements.len() })
}

/// One `ρ → RρR / Tr` update. Should the likelihood drop, the step is
/// retried with `(1 + εR)/(1 + ε)` for shrinking ε, which always ascends for
/// small enough ε.
fn step(povm: &Povm, rho: &CMatrix, r: &CMatrix, ll: f64) -> (CMatrix, f64, CMatrix) {
    let dim = rho.dim();
    let apply = |op: &CMatrix| {
        let mut out = op.matmul(rho).matmul(op);
        let t = out.trace().re;
        out.scale(1.0 / t);
        hermitize(&mut out);
        out
    };
    let next = apply(r);
    let (next_ll, next_r) = povm.evaluate(&next, true);
    if next_ll >= ll - 1e-12 * ll.abs() {
        return (next, next_ll, next_r);
    }
    let mut eps = 1.0;
    for _ in 0..40 {
        let mut op = CMatrix::identity(dim);
        op.add_scaled(r, eps);
        let trial = apply(&op);
        let (trial_ll, trial_r) = povm.evaluate(&trial, true);
        if trial_ll >= ll {
            return (trial, trial_ll, trial_r);
        }
        eps *= 0.5;
    }
    (rho.clone(), ll, r.clone())
}

fn hermitize(m: &mut CMatrix) {
    let n = m.dim();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in i + 1..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

fn finish(mut rho: CMatrix, modes: ModeCount, cutoff: FockCutoff) -> Result<DensityOperator> {
    hermitize(&mut rho);
    let t = rho.trace().re;
    rho.scale(1.0 / t);
    DensityOperator::new(rho, modes, cutoff)
}

/// Reconstructs a two-mode state from records annotated with the phase sum.
///
/// Fails with [`Error::PhaseMissing`] on a non-finite phase,
/// [`Error::OutsideGrid`] on a quadrature beyond the sampling grid and
/// [`Error::InsufficientData`] when fewer than [`MIN_PHASE_COVERAGE`] phase
/// bins are populated.
pub fn maxlik_two_mode(records: &[TwoModeRecord], opts: &ReconstructionOptions) -> Result<Reconstruction> {
    opts.validate()?;
    if records.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    for (i, r) in records.iter().enumerate() {
        if !r.theta_sum.is_finite() {
            return Err(Error::PhaseMissing(i));
        }
        check_support(r.x1)?;
        check_support(r.x2)?;
    }
    let coverage = phase_coverage(records.iter().map(|r| r.theta_sum));
    if coverage < MIN_PHASE_COVERAGE {
        return Err(Error::InsufficientData(format!(
            "phase sum covers {coverage} of {COVERAGE_BINS} bins, need {MIN_PHASE_COVERAGE}"
        )));
    }
    let povm = two_mode_povm(records, opts.cutoff, opts.max_bins(records.len()));
    iterate(&povm, ModeCount::Two, opts)
}

/// Reconstructs a single-mode state. Records without a phase constrain only
/// the photon-number populations.
pub fn maxlik_single_mode(records: &[SingleModeRecord], opts: &ReconstructionOptions) -> Result<Reconstruction> {
    opts.validate()?;
    if records.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    for (i, r) in records.iter().enumerate() {
        if r.phase.is_some_and(|t| !t.is_finite()) {
            return Err(Error::PhaseMissing(i));
        }
        check_support(r.x)?;
    }
    let povm = single_mode_povm(records, opts.cutoff, opts.max_bins(records.len()));
    iterate(&povm, ModeCount::One, opts)
}

pub const DEFAULT_MULTIPHOTON_THRESHOLD: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossEstimate {
    /// Transmission η.
    pub eta: f64,
    /// Binomial standard error, when the sample count is known.
    pub stderr: Option<f64>,
}

/// Transmission of a lossy single photon, `ρ11 / (ρ00 + ρ11)`.
pub fn estimate_loss(rho: &DensityOperator, samples: Option<usize>) -> Result<LossEstimate> {
    estimate_loss_with_threshold(rho, samples, DEFAULT_MULTIPHOTON_THRESHOLD)
}

pub fn estimate_loss_with_threshold(rho: &DensityOperator, samples: Option<usize>, threshold: f64) -> Result<LossEstimate> {
    if rho.mode_count() != ModeCount::One {
        return Err(Error::WrongModeCount { expected: 1 });
    }
    let pops = rho.populations();
    let population: f64 = pops.iter().skip(2).sum();
    if population > threshold {
        return Err(Error::MultiPhotonPopulation { population, threshold });
    }
    let (p0, p1) = (pops[0], pops[1]);
    if !(p0 + p1 > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let eta = p1 / (p0 + p1);
    let stderr = samples.filter(|&n| n > 0).map(|n| (eta * (1.0 - eta) / n as f64).sqrt());
    Ok(LossEstimate { eta, stderr })
}
