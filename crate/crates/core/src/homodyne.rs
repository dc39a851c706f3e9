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

//! Homodyne statistics of Fock-basis states.
//!
//! Quadratures follow `x = (a + a†)/√2`, the quadrature eigenstate at local
//! oscillator phase θ has amplitudes `⟨n|x, θ⟩ = ψ_n(x) e^{inθ}`, and the
//! joint density of a two-mode measurement is
//! `p(x1, x2) = Σ ρ_{(m1 m2),(n1 n2)} ψ_{m1} ψ_{n1} ψ_{m2} ψ_{n2} e^{i(n1-m1)θ1 + i(n2-m2)θ2}`.
//!
//! Products `ψ_m ψ_n` are grouped by unordered pair `{m, n}`; a phased state
//! then becomes a real coupling matrix between mode-1 and mode-2 pairs, and
//! grid integrals of the pair products are shared by every phase setting.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[allow(unused_imports)] // unused when a dependent links std
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fock::{DensityOperator, ModeCount};
use crate::{Error, Result, C64};

/// Fills `out[n] = ψ_n(x)` using the normalized three-term recurrence
/// `ψ_{n+1} = √(2/(n+1)) x ψ_n - √(n/(n+1)) ψ_{n-1}`.
pub fn hermite_functions(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if out.len() > 1 {
        out[1] = core::f64::consts::SQRT_2 * x * out[0];
    }
    for n in 1..out.len().saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
}

pub(crate) fn fold_angle(theta: f64) -> f64 {
    let t = num_traits::Euclid::rem_euclid(&theta, &TAU);
    // rem_euclid can round up to exactly TAU
    if t >= TAU { 0.0 } else { t }
}

/// Local oscillator phases of the two homodyne detectors, folded to `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhasePair {
    pub theta1: f64,
    pub theta2: f64,
}

impl PhasePair {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        Self { theta1: fold_angle(theta1), theta2: fold_angle(theta2) }
    }

    /// Phases with the given sum and difference.
    pub fn from_sum_difference(sum: f64, difference: f64) -> Self {
        Self::new(0.5 * (sum + difference), 0.5 * (sum - difference))
    }

    /// `θ1 + θ2` folded to `[0, 2π)`.
    pub fn sum(&self) -> f64 {
        fold_angle(self.theta1 + self.theta2)
    }

    pub fn difference(&self) -> f64 {
        fold_angle(self.theta1 - self.theta2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSample {
    pub x1: f64,
    pub x2: f64,
    pub phases: PhasePair,
}

/// Which correlated quadrature combination: `x1 - x2` or `x1 + x2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn combine(self, x1: f64, x2: f64) -> f64 {
        match self {
            Sign::Minus => x1 - x2,
            Sign::Plus => x1 + x2,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Minus => '-',
            Sign::Plus => '+',
        }
    }
}

/// Vacuum-normalized variance of `x1 ∓ x2` for a two-mode squeezed vacuum
/// with squeezing `zeta` seen through transmission `eta` in both modes:
/// `(1-η) + η[cosh 2ζ ∓ cos(θ1+θ2) sinh 2ζ]`, the minus branch belonging to
/// the difference.
pub fn variance_model(zeta: f64, eta: f64, theta_sum: f64, sign: Sign) -> f64 {
    let s = match sign {
        Sign::Minus => -1.0,
        Sign::Plus => 1.0,
    };
    (1.0 - eta) + eta * ((2.0 * zeta).cosh() + s * theta_sum.cos() * (2.0 * zeta).sinh())
}

/// `∂/∂ζ` of [`variance_model`].
pub fn variance_model_dzeta(zeta: f64, eta: f64, theta_sum: f64, sign: Sign) -> f64 {
    let s = match sign {
        Sign::Minus => -1.0,
        Sign::Plus => 1.0,
    };
    2.0 * eta * ((2.0 * zeta).sinh() + s * theta_sum.cos() * (2.0 * zeta).cosh())
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VarianceEstimate {
    pub variance: f64,
    pub stderr: f64,
}

/// Unbiased sample variance of `x1 ∓ x2`; the double vacuum gives 1, so no
/// further normalization is applied. The standard error is `√(2/(N-1)) V`.
pub fn empirical_variance<I>(pairs: I, sign: Sign) -> Result<VarianceEstimate>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    // Welford
    let mut n = 0usize;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (x1, x2) in pairs {
        let v = sign.combine(x1, x2);
        n += 1;
        let delta = v - mean;
        mean += delta / n as f64;
        m2 += delta * (v - mean);
    }
    if n < 2 {
        return Err(Error::InsufficientData(alloc::format!("{n} samples, need at least 2")));
    }
    let dof = (n - 1) as f64;
    let variance = m2 / dof;
    Ok(VarianceEstimate { variance, stderr: (2.0 / dof).sqrt() * variance })
}

/// One point of a phase-dependent variance curve.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VariancePoint {
    pub theta_sum: f64,
    pub sign: Sign,
    pub variance: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VarianceCurve {
    pub points: Vec<VariancePoint>,
}

/// Uniform quadrature grid used for tabulated CDFs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self { min: -8.0, max: 8.0, points: 1 << 12 }
    }
}

impl QuadratureGrid {
    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.min + j as f64 * self.step()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }
}

/// Unordered index pairs `{m, n}`, `m ≤ n`, of a single-mode basis.
#[derive(Clone, Debug)]
struct PairTable {
    dim: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairTable {
    fn new(dim: usize) -> Self {
        let pairs = (0..dim).flat_map(|m| (m..dim).map(move |n| (m, n))).collect();
        Self { dim, pairs }
    }

    fn len(&self) -> usize {
        self.pairs.len()
    }

    fn index(&self, m: usize, n: usize) -> usize {
        let (a, b) = if m <= n { (m, n) } else { (n, m) };
        // rows before `a` hold dim + (dim-1) + ... + (dim-a+1) entries
        a * self.dim - a * a.saturating_sub(1) / 2 + (b - a)
    }

    /// `ψ_m(x) ψ_n(x)` for every pair.
    fn products(&self, psi: &[f64], out: &mut [f64]) {
        for (o, &(m, n)) in out.iter_mut().zip(&self.pairs) {
            *o = psi[m] * psi[n];
        }
    }
}

/// A two-mode state at fixed phases, reduced to real pair couplings.
#[derive(Clone, Debug)]
struct PhasedModel {
    table: PairTable,
    /// `(mode-1 pair, mode-2 pair, weight)`
    coupling: Vec<(usize, usize, f64)>,
    marginal1: Vec<f64>,
    marginal2: Vec<f64>,
}

impl PhasedModel {
    fn new(entries: &[SparseEntry], dim: usize, phases: PhasePair) -> Self {
        let table = PairTable::new(dim);
        let np = table.len();
        let mut dense = vec![0.0; np * np];
        let ph1: Vec<C64> = (0..dim as i64 * 2).map(|k| C64::from_polar(1.0, (k - dim as i64) as f64 * phases.theta1)).collect();
        let ph2: Vec<C64> = (0..dim as i64 * 2).map(|k| C64::from_polar(1.0, (k - dim as i64) as f64 * phases.theta2)).collect();
        for e in entries {
            let d1 = (e.n1 as i64 - e.m1 as i64 + dim as i64) as usize;
            let d2 = (e.n2 as i64 - e.m2 as i64 + dim as i64) as usize;
            let w = (e.value * ph1[d1] * ph2[d2]).re;
            dense[table.index(e.m1, e.n1) * np + table.index(e.m2, e.n2)] += w;
        }
        let mut coupling = Vec::new();
        let mut marginal1 = vec![0.0; np];
        let mut marginal2 = vec![0.0; np];
        for q in 0..np {
            for p in 0..np {
                let w = dense[q * np + p];
                if w == 0.0 {
                    continue;
                }
                coupling.push((q, p, w));
                // ∫ψ_m ψ_n = δ_mn
                if table.pairs[p].0 == table.pairs[p].1 {
                    marginal1[q] += w;
                }
                if table.pairs[q].0 == table.pairs[q].1 {
                    marginal2[p] += w;
                }
            }
        }
        Self { table, coupling, marginal1, marginal2 }
    }

    fn density(&self, x1: f64, x2: f64) -> f64 {
        let (p1, p2) = (self.pair_products(x1), self.pair_products(x2));
        self.coupling.iter().map(|&(q, p, w)| w * p1[q] * p2[p]).sum()
    }

    fn marginal(&self, which: usize, x: f64) -> f64 {
        let coeffs = if which == 0 { &self.marginal1 } else { &self.marginal2 };
        self.pair_products(x).iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }

    fn pair_products(&self, x: f64) -> Vec<f64> {
        let mut psi = vec![0.0; self.table.dim];
        hermite_functions(x, &mut psi);
        let mut out = vec![0.0; self.table.len()];
        self.table.products(&psi, &mut out);
        out
    }
}

#[derive(Clone, Copy, Debug)]
struct SparseEntry {
    m1: usize,
    m2: usize,
    n1: usize,
    n2: usize,
    value: C64,
}

/// Populations below this are dropped from the effective basis.
const NEGLIGIBLE_POPULATION: f64 = 1e-15;

/// Nonzero two-mode entries restricted to the smallest basis holding all
/// non-negligible population.
fn sparse_entries(rho: &DensityOperator) -> Result<(Vec<SparseEntry>, usize)> {
    if rho.mode_count() != ModeCount::Two {
        return Err(Error::WrongModeCount { expected: 2 });
    }
    let cut = rho.cutoff();
    let m = rho.matrix();
    let mut dim = 1;
    for i in 0..m.dim() {
        if m[(i, i)].re > NEGLIGIBLE_POPULATION {
            let (a, b) = cut.photon_numbers(i);
            dim = dim.max(a.max(b) + 1);
        }
    }
    let mut entries = Vec::new();
    for i in 0..m.dim() {
        let (m1, m2) = cut.photon_numbers(i);
        if m1 >= dim || m2 >= dim {
            continue;
        }
        for j in 0..m.dim() {
            let (n1, n2) = cut.photon_numbers(j);
            if n1 >= dim || n2 >= dim {
                continue;
            }
            let value = m[(i, j)];
            if value.norm() > 1e-300 {
                entries.push(SparseEntry { m1, m2, n1, n2, value });
            }
        }
    }
    Ok((entries, dim))
}

/// Joint and marginal quadrature densities of a two-mode state at fixed
/// local oscillator phases.
#[derive(Clone, Debug)]
pub struct QuadraturePdf {
    model: PhasedModel,
    phases: PhasePair,
}

impl QuadraturePdf {
    pub fn phases(&self) -> PhasePair {
        self.phases
    }

    pub fn density(&self, x1: f64, x2: f64) -> f64 {
        self.model.density(x1, x2)
    }

    /// Marginal density of one detector's outcome.
    pub fn marginal(&self, mode: crate::fock::Mode, x: f64) -> f64 {
        match mode {
            crate::fock::Mode::First => self.model.marginal(0, x),
            crate::fock::Mode::Second => self.model.marginal(1, x),
        }
    }
}

pub fn quadrature_pdf(rho: &DensityOperator, phases: PhasePair) -> Result<QuadraturePdf> {
    let (entries, dim) = sparse_entries(rho)?;
    Ok(QuadraturePdf { model: PhasedModel::new(&entries, dim, phases), phases })
}

/// Phase-independent tables for drawing quadrature pairs from one state.
///
/// `x1` is drawn from its marginal by inverse CDF on the grid, then `x2`
/// from the conditional density given `x1`. Both CDFs are linear
/// combinations of the cumulative grid integrals of `ψ_m ψ_n`.
#[derive(Clone, Debug)]
pub struct QuadratureSampler {
    grid: QuadratureGrid,
    dim: usize,
    entries: Vec<SparseEntry>,
    /// Cumulative trapezoid integrals, `[j * pairs + p]`.
    cumulative: Vec<f64>,
    pairs: usize,
}

impl QuadratureSampler {
    pub fn new(rho: &DensityOperator, grid: QuadratureGrid) -> Result<Self> {
        let (entries, dim) = sparse_entries(rho)?;
        let table = PairTable::new(dim);
        let np = table.len();
        let h = grid.step();
        let mut cumulative = vec![0.0; grid.points * np];
        let mut psi = vec![0.0; dim];
        let mut prev = vec![0.0; np];
        let mut cur = vec![0.0; np];
        for j in 0..grid.points {
            hermite_functions(grid.x(j), &mut psi);
            table.products(&psi, &mut cur);
            if j > 0 {
                for p in 0..np {
                    cumulative[j * np + p] = cumulative[(j - 1) * np + p] + 0.5 * h * (prev[p] + cur[p]);
                }
            }
            core::mem::swap(&mut prev, &mut cur);
        }
        Ok(Self { grid, dim, entries, cumulative, pairs: np })
    }

    pub fn grid(&self) -> QuadratureGrid {
        self.grid
    }

    /// Prepares sampling at one phase setting. Fails with
    /// [`Error::DegeneratePdf`] if less than 99.9% of the probability lies on
    /// the grid.
    pub fn at_phases(&self, phases: PhasePair) -> Result<PhasedSampler<'_>> {
        let model = PhasedModel::new(&self.entries, self.dim, phases);
        let np = self.pairs;
        let cdf1: Vec<f64> = (0..self.grid.points)
            .map(|j| {
                let row = &self.cumulative[j * np..(j + 1) * np];
                row.iter().zip(&model.marginal1).map(|(a, b)| a * b).sum()
            })
            .collect();
        let mass = *cdf1.last().unwrap_or(&0.0);
        if !(mass > 0.999) {
            return Err(Error::DegeneratePdf(mass));
        }
        Ok(PhasedSampler { sampler: self, model, cdf1, phases })
    }
}

/// Sampler bound to one phase setting.
#[derive(Clone, Debug)]
pub struct PhasedSampler<'a> {
    sampler: &'a QuadratureSampler,
    model: PhasedModel,
    cdf1: Vec<f64>,
    phases: PhasePair,
}

impl PhasedSampler<'_> {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> QuadratureSample {
        let s = self.sampler;
        let np = s.pairs;
        let mut psi = vec![0.0; s.dim];
        let mut prod = vec![0.0; np];
        let mut cond = vec![0.0; np];
        loop {
            let x1 = invert_tabulated(s.grid, rng.gen::<f64>(), |j| self.cdf1[j]);
            hermite_functions(x1, &mut psi);
            self.model.table.products(&psi, &mut prod);
            cond.iter_mut().for_each(|c| *c = 0.0);
            for &(q, p, w) in &self.model.coupling {
                cond[p] += w * prod[q];
            }
            let cdf2 = |j: usize| -> f64 {
                s.cumulative[j * np..(j + 1) * np].iter().zip(&cond).map(|(a, b)| a * b).sum()
            };
            let total = cdf2(s.grid.points - 1);
            if !(total > 0.0) {
                // x1 landed where rounding made the conditional vanish
                continue;
            }
            let x2 = invert_tabulated(s.grid, rng.gen::<f64>(), cdf2);
            return QuadratureSample { x1, x2, phases: self.phases };
        }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<QuadratureSample> {
        (0..count).map(|_| self.sample(rng)).collect()
    }
}

/// Inverse of a tabulated nondecreasing CDF, linear within grid cells.
/// `cdf` is evaluated lazily so conditional tables need not be materialized.
fn invert_tabulated(grid: QuadratureGrid, u: f64, cdf: impl Fn(usize) -> f64) -> f64 {
    let last = grid.points - 1;
    let target = u * cdf(last);
    let (mut lo, mut hi) = (0usize, last);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if cdf(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (f_lo, f_hi) = (cdf(lo), cdf(hi));
    let frac = if f_hi > f_lo { ((target - f_lo) / (f_hi - f_lo)).clamp(0.0, 1.0) } else { 0.5 };
    grid.x(lo) + frac * grid.step()
}

/// Draws `count` i.i.d. quadrature pairs at fixed phases; deterministic for
/// a given seed.
pub fn sample_quadratures(
    rho: &DensityOperator,
    phases: PhasePair,
    count: usize,
    seed: u64,
) -> Result<Vec<QuadratureSample>> {
    if count == 0 {
        return Err(Error::InvalidParameter { name: "count", value: 0.0 });
    }
    let sampler = QuadratureSampler::new(rho, QuadratureGrid::default())?;
    let phased = sampler.at_phases(phases)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(phased.sample_n(count, &mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{apply_loss, LossSpec};
    use crate::fock::{tmsv_state, FockCutoff, Mode, PureState};

    fn cut(n: usize) -> FockCutoff {
        FockCutoff::new(n).unwrap()
    }

    /// ψ_n from the explicit physicists' Hermite polynomials.
    fn psi_explicit(n: usize, x: f64) -> f64 {
        let h = match n {
            0 => 1.0,
            1 => 2.0 * x,
            2 => 4.0 * x * x - 2.0,
            3 => 8.0 * x.powi(3) - 12.0 * x,
            4 => 16.0 * x.powi(4) - 48.0 * x * x + 12.0,
            _ => unreachable!(),
        };
        let fact = [1.0, 1.0, 2.0, 6.0, 24.0][n];
        h * (-0.5 * x * x).exp() / (2f64.powi(n as i32) * fact * PI.sqrt()).sqrt()
    }

    #[test]
    fn recurrence_matches_explicit_polynomials() {
        let mut out = [0.0; 5];
        for &x in &[-3.1, -0.7, 0.0, 0.4, 2.5] {
            hermite_functions(x, &mut out);
            for (n, &v) in out.iter().enumerate() {
                assert!((v - psi_explicit(n, x)).abs() < 1e-14, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn hermite_functions_are_orthonormal_up_to_high_order() {
        let grid = QuadratureGrid { min: -14.0, max: 14.0, points: 4001 };
        let n = 60;
        let mut table = vec![vec![0.0; n + 1]; grid.points];
        for (j, row) in table.iter_mut().enumerate() {
            hermite_functions(grid.x(j), row);
        }
        for a in [0, 1, 7, 30, 60] {
            for b in [0, 1, 7, 30, 60] {
                let s: f64 = table.iter().map(|r| r[a] * r[b]).sum::<f64>() * grid.step();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((s - expected).abs() < 1e-10, "<{a}|{b}> = {s}");
            }
        }
    }

    #[test]
    fn pair_index_is_a_bijection() {
        let t = PairTable::new(7);
        for (k, &(m, n)) in t.pairs.iter().enumerate() {
            assert_eq!(t.index(m, n), k);
            assert_eq!(t.index(n, m), k);
        }
    }

    #[test]
    fn phases_fold_into_one_turn() {
        let p = PhasePair::new(-0.5, 7.0);
        assert!((p.theta1 - (TAU - 0.5)).abs() < 1e-15);
        assert!((p.theta2 - (7.0 - TAU)).abs() < 1e-15);
        let q = PhasePair::from_sum_difference(1.0, 0.4);
        assert!((q.sum() - 1.0).abs() < 1e-15);
        assert!((q.difference() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn vacuum_density_is_gaussian() {
        let rho = PureState::vacuum(cut(3)).to_density().unwrap();
        let pdf = quadrature_pdf(&rho, PhasePair::new(0.3, 1.9)).unwrap();
        for &(x1, x2) in &[(0.0, 0.0), (0.5, -1.2), (2.0, 1.0)] {
            let expected = (-(x1 * x1) - x2 * x2).exp() / PI;
            assert!((pdf.density(x1, x2) - expected).abs() < 1e-15);
        }
        // marginal variance 1/2
        let g = QuadratureGrid { min: -8.0, max: 8.0, points: 801 };
        let var: f64 = (0..g.points).map(|j| g.x(j).powi(2) * pdf.marginal(Mode::First, g.x(j))).sum::<f64>() * g.step();
        assert!((var - 0.5).abs() < 1e-12);
    }

    /// Trapezoid (spectrally accurate for these Gaussians) moments of the joint density.
    fn grid_moments(pdf: &QuadraturePdf, sign: Sign) -> (f64, f64, f64) {
        let g = QuadratureGrid { min: -8.0, max: 8.0, points: 161 };
        let h = g.step();
        let (mut mass, mut second, mut min) = (0.0, 0.0, f64::INFINITY);
        for i in 0..g.points {
            for j in 0..g.points {
                let p = pdf.density(g.x(i), g.x(j));
                min = min.min(p);
                mass += p * h * h;
                second += sign.combine(g.x(i), g.x(j)).powi(2) * p * h * h;
            }
        }
        (mass, second, min)
    }

    #[test]
    fn lossless_tmsv_difference_variance_is_exponentially_squeezed() {
        let zeta: f64 = 0.19;
        let rho = tmsv_state(zeta, cut(12)).unwrap().to_density().unwrap();
        let pdf = quadrature_pdf(&rho, PhasePair::from_sum_difference(0.0, 1.3)).unwrap();
        let (mass, second, _) = grid_moments(&pdf, Sign::Minus);
        assert!((mass - 1.0).abs() < 1e-10);
        assert!((second - (-2.0 * zeta).exp()).abs() < 1e-10);
        let (_, anti, _) = grid_moments(&pdf, Sign::Plus);
        assert!((anti - (2.0 * zeta).exp()).abs() < 1e-10);
    }

    #[test]
    fn lossy_tmsv_density_is_normalized_and_nonnegative() {
        let rho = tmsv_state(0.19, cut(15)).unwrap().to_density().unwrap();
        let lossy = apply_loss(&rho, &LossSpec::uniform(0.42).unwrap()).unwrap();
        let pdf = quadrature_pdf(&lossy, PhasePair::new(0.7, 2.1)).unwrap();
        let (mass, _, min) = grid_moments(&pdf, Sign::Minus);
        assert!((mass - 1.0).abs() < 1e-6);
        assert!(min > -1e-10);
    }

    #[test]
    fn model_values() {
        assert_eq!(variance_model(0.0, 0.42, 1.1, Sign::Minus), 1.0);
        assert_eq!(variance_model(0.0, 0.9, 0.0, Sign::Plus), 1.0);
        // 0.58 + 0.42 e^{-0.38}
        assert!((variance_model(0.19, 0.42, 0.0, Sign::Minus) - 0.867_221_791_869_189_4).abs() < 1e-12);
        // only the phase sum enters
        let split_a = PhasePair::new(0.2, 0.9).sum();
        let split_b = PhasePair::new(1.0, 0.1).sum();
        assert_eq!(variance_model(0.3, 0.5, split_a, Sign::Plus), variance_model(0.3, 0.5, split_b, Sign::Plus));
    }

    #[test]
    fn model_derivative_matches_finite_difference() {
        for &(z, t, s) in &[(0.19, 0.0, Sign::Minus), (0.36, 1.2, Sign::Plus), (0.05, 2.9, Sign::Minus)] {
            let h = 1e-6;
            let fd = (variance_model(z + h, 0.42, t, s) - variance_model(z - h, 0.42, t, s)) / (2.0 * h);
            assert!((fd - variance_model_dzeta(z, 0.42, t, s)).abs() < 1e-8);
        }
    }

    #[test]
    fn empirical_variance_edge_cases() {
        let same = [(0.3, 0.1); 10];
        let v = empirical_variance(same.iter().copied(), Sign::Minus).unwrap();
        assert_eq!(v.variance, 0.0);
        assert_eq!(v.stderr, 0.0);
        assert!(matches!(empirical_variance([(0.0, 0.0)], Sign::Plus), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn vacuum_sampling_statistics() {
        let rho = PureState::vacuum(cut(2)).to_density().unwrap();
        let s = sample_quadratures(&rho, PhasePair::new(0.4, 1.0), 100_000, 11).unwrap();
        let mean = s.iter().map(|q| q.x1).sum::<f64>() / s.len() as f64;
        let var = s.iter().map(|q| (q.x1 - mean).powi(2)).sum::<f64>() / (s.len() - 1) as f64;
        assert!((var - 0.5).abs() < 0.01, "var {var}");
        let v = empirical_variance(s.iter().map(|q| (q.x1, q.x2)), Sign::Minus).unwrap();
        assert!((v.variance - 1.0).abs() < 0.01);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let rho = tmsv_state(0.3, cut(8)).unwrap().to_density().unwrap();
        let p = PhasePair::new(0.2, 0.3);
        let a = sample_quadratures(&rho, p, 500, 42).unwrap();
        let b = sample_quadratures(&rho, p, 500, 42).unwrap();
        let c = sample_quadratures(&rho, p, 500, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn lossy_tmsv_sampled_variance_matches_model() {
        let rho = tmsv_state(0.19, cut(15)).unwrap().to_density().unwrap();
        let lossy = apply_loss(&rho, &LossSpec::uniform(0.42).unwrap()).unwrap();
        let s = sample_quadratures(&lossy, PhasePair::from_sum_difference(0.0, 2.0), 100_000, 5).unwrap();
        let v = empirical_variance(s.iter().map(|q| (q.x1, q.x2)), Sign::Minus).unwrap();
        assert!((v.variance - 0.867).abs() < 0.015, "{}", v.variance);
    }

    #[test]
    fn zero_count_rejected() {
        let rho = PureState::vacuum(cut(2)).to_density().unwrap();
        assert!(sample_quadratures(&rho, PhasePair::new(0.0, 0.0), 0, 1).is_err());
    }

    #[test]
    fn mass_off_grid_is_degenerate() {
        let rho = PureState::fock(12, 0, cut(12)).unwrap().to_density().unwrap();
        let narrow = QuadratureGrid { min: -1.0, max: 1.0, points: 256 };
        let sampler = QuadratureSampler::new(&rho, narrow).unwrap();
        assert!(matches!(sampler.at_phases(PhasePair::new(0.0, 0.0)), Err(Error::DegeneratePdf(_))));
    }
}
