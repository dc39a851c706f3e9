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

//! Two-mode truncated Fock space: pure states, density operators and the
//! elementary ladder and phase operations.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // unused when a dependent links std
use num_traits::Float;

use crate::linalg::{self, CMatrix};
use crate::{Error, Result, C64};

/// Maximum photon number kept per mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockCutoff(usize);

impl FockCutoff {
    pub const DEFAULT: FockCutoff = FockCutoff(15);

    pub fn new(n_max: usize) -> Result<Self> {
        if n_max >= 1 {
            Ok(Self(n_max))
        } else {
            Err(Error::InvalidCutoff(n_max))
        }
    }

    #[inline]
    pub fn n_max(self) -> usize {
        self.0
    }

    /// Basis size of a single mode, `n_max + 1`.
    #[inline]
    pub fn dim(self) -> usize {
        self.0 + 1
    }

    #[inline]
    pub fn two_mode_dim(self) -> usize {
        self.dim() * self.dim()
    }

    /// Row-major position of `|n1, n2⟩`.
    #[inline]
    pub fn index(self, n1: usize, n2: usize) -> usize {
        n1 * self.dim() + n2
    }

    #[inline]
    pub fn photon_numbers(self, index: usize) -> (usize, usize) {
        (index / self.dim(), index % self.dim())
    }
}

impl Default for FockCutoff {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    First,
    Second,
}

impl Mode {
    pub fn other(self) -> Mode {
        match self {
            Mode::First => Mode::Second,
            Mode::Second => Mode::First,
        }
    }
}

/// Amplitudes over `|n1, n2⟩`, row-major, possibly unnormalized.
///
/// `weight` accumulates the squared norms divided out by [`PureState::normalize`],
/// so the probability of a chain of heralded operations is the product of
/// the weights along the way.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
    cutoff: FockCutoff,
    weight: f64,
    normalized: bool,
    tail_warning: bool,
}

impl PureState {
    /// Wraps raw amplitudes; the state is flagged unnormalized.
    pub fn from_amplitudes(amplitudes: Vec<C64>, cutoff: FockCutoff) -> Result<Self> {
        if amplitudes.len() != cutoff.two_mode_dim() {
            return Err(Error::DimensionMismatch {
                expected: cutoff.two_mode_dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self { amplitudes, cutoff, weight: 1.0, normalized: false, tail_warning: false })
    }

    /// The basis state `|n1, n2⟩`.
    pub fn fock(n1: usize, n2: usize, cutoff: FockCutoff) -> Result<Self> {
        if n1 > cutoff.n_max() || n2 > cutoff.n_max() {
            return Err(Error::DimensionMismatch { expected: cutoff.n_max(), found: n1.max(n2) });
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); cutoff.two_mode_dim()];
        amplitudes[cutoff.index(n1, n2)] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes, cutoff, weight: 1.0, normalized: true, tail_warning: false })
    }

    pub fn vacuum(cutoff: FockCutoff) -> Self {
        Self::fock(0, 0, cutoff).expect("vacuum fits any cutoff")
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, n1: usize, n2: usize) -> C64 {
        self.amplitudes[self.cutoff.index(n1, n2)]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Product of the squared norms removed by earlier normalizations.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Set when the truncated tail of a constructed state exceeded `1e-10`.
    pub fn tail_warning(&self) -> bool {
        self.tail_warning
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Relative population with `n1 = n_max` or `n2 = n_max`.
    pub fn top_layer_population(&self) -> f64 {
        let n = self.cutoff.n_max();
        let total = self.norm_sqr();
        if total == 0.0 {
            return 0.0;
        }
        let top: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let (a, b) = self.cutoff.photon_numbers(*i);
                a == n || b == n
            })
            .map(|(_, c)| c.norm_sqr())
            .sum();
        top / total
    }

    /// Rescales to unit norm, multiplying the squared norm into `weight`.
    pub fn normalize(&self) -> Result<PureState> {
        let norm_sqr = self.norm_sqr();
        if !(norm_sqr > 0.0) || !norm_sqr.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let inv = 1.0 / norm_sqr.sqrt();
        Ok(PureState {
            amplitudes: self.amplitudes.iter().map(|c| c * inv).collect(),
            cutoff: self.cutoff,
            weight: self.weight * norm_sqr,
            normalized: true,
            tail_warning: self.tail_warning,
        })
    }

    /// `a` on the chosen mode: `a|n⟩ = √n |n-1⟩`. The result is unnormalized;
    /// its squared norm is `⟨ψ|a†a|ψ⟩`.
    pub fn annihilate(&self, mode: Mode) -> PureState {
        let cut = self.cutoff;
        let mut out = vec![C64::new(0.0, 0.0); cut.two_mode_dim()];
        for n1 in 0..cut.dim() {
            for n2 in 0..cut.dim() {
                let c = self.amplitudes[cut.index(n1, n2)];
                match mode {
                    Mode::First if n1 > 0 => {
                        out[cut.index(n1 - 1, n2)] += c * (n1 as f64).sqrt();
                    }
                    Mode::Second if n2 > 0 => {
                        out[cut.index(n1, n2 - 1)] += c * (n2 as f64).sqrt();
                    }
                    _ => {}
                }
            }
        }
        self.derived(out)
    }

    /// `a†` on the chosen mode; population pushed above `n_max` is dropped.
    pub fn create(&self, mode: Mode) -> PureState {
        let cut = self.cutoff;
        let n_max = cut.n_max();
        let mut out = vec![C64::new(0.0, 0.0); cut.two_mode_dim()];
        for n1 in 0..cut.dim() {
            for n2 in 0..cut.dim() {
                let c = self.amplitudes[cut.index(n1, n2)];
                match mode {
                    Mode::First if n1 < n_max => {
                        out[cut.index(n1 + 1, n2)] += c * ((n1 + 1) as f64).sqrt();
                    }
                    Mode::Second if n2 < n_max => {
                        out[cut.index(n1, n2 + 1)] += c * ((n2 + 1) as f64).sqrt();
                    }
                    _ => {}
                }
            }
        }
        self.derived(out)
    }

    /// `exp(iθ n̂)` on the chosen mode. Norm and normalization flag are kept.
    pub fn phase_shift(&self, mode: Mode, theta: f64) -> PureState {
        let cut = self.cutoff;
        let phases: Vec<C64> = (0..cut.dim()).map(|n| C64::from_polar(1.0, theta * n as f64)).collect();
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let (n1, n2) = cut.photon_numbers(i);
                let n = if mode == Mode::First { n1 } else { n2 };
                c * phases[n]
            })
            .collect();
        PureState { amplitudes, ..self.clone() }
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// `ρ = |ψ⟩⟨ψ| / ⟨ψ|ψ⟩`
    pub fn to_density(&self) -> Result<DensityOperator> {
        let normed = self.normalize()?;
        Ok(DensityOperator {
            matrix: CMatrix::outer(&normed.amplitudes),
            modes: ModeCount::Two,
            cutoff: self.cutoff,
        })
    }

    fn derived(&self, amplitudes: Vec<C64>) -> PureState {
        PureState {
            amplitudes,
            cutoff: self.cutoff,
            weight: self.weight,
            normalized: false,
            tail_warning: self.tail_warning,
        }
    }
}

/// Two-mode squeezed vacuum `√(1-λ²) Σ λⁿ |n, n⟩` with `λ = tanh ζ`,
/// truncated at the cutoff and renormalized.
///
/// The tail warning is raised when `λ^(2(n_max+1)) ≥ 1e-10`.
pub fn tmsv_state(zeta: f64, cutoff: FockCutoff) -> Result<PureState> {
    if !zeta.is_finite() || zeta < 0.0 {
        return Err(Error::InvalidParameter { name: "zeta", value: zeta });
    }
    let lambda = zeta.tanh();
    let prefactor = (1.0 - lambda * lambda).sqrt();
    let mut amplitudes = vec![C64::new(0.0, 0.0); cutoff.two_mode_dim()];
    let mut power = 1.0;
    for n in 0..cutoff.dim() {
        amplitudes[cutoff.index(n, n)] = C64::new(prefactor * power, 0.0);
        power *= lambda;
    }
    let tail = lambda.powi(2 * cutoff.dim() as i32);
    let mut state = PureState::from_amplitudes(amplitudes, cutoff)?.normalize()?;
    // truncation renormalization is not a herald event
    state.weight = 1.0;
    state.tail_warning = tail >= 1e-10;
    Ok(state)
}

/// Number of modes a density operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModeCount {
    One,
    Two,
}

impl ModeCount {
    pub fn count(self) -> usize {
        match self {
            ModeCount::One => 1,
            ModeCount::Two => 2,
        }
    }

    pub fn from_count(count: usize) -> Result<Self> {
        match count {
            1 => Ok(ModeCount::One),
            2 => Ok(ModeCount::Two),
            other => Err(Error::InvalidParameter { name: "mode_count", value: other as f64 }),
        }
    }

    pub fn dim(self, cutoff: FockCutoff) -> usize {
        match self {
            ModeCount::One => cutoff.dim(),
            ModeCount::Two => cutoff.two_mode_dim(),
        }
    }
}

/// Hermitian, unit-trace operator over a one- or two-mode truncated basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
    modes: ModeCount,
    cutoff: FockCutoff,
}

/// Elementwise tolerance for Hermiticity and trace.
pub const DENSITY_TOLERANCE: f64 = 1e-10;
/// Most negative eigenvalue accepted as truncation noise.
pub const EIGENVALUE_FLOOR: f64 = -1e-8;

impl DensityOperator {
    /// Validates Hermiticity and unit trace (not positivity; see
    /// [`DensityOperator::check_positive`]).
    pub fn new(matrix: CMatrix, modes: ModeCount, cutoff: FockCutoff) -> Result<Self> {
        let expected = modes.dim(cutoff);
        if matrix.dim() != expected {
            return Err(Error::DimensionMismatch { expected, found: matrix.dim() });
        }
        let dev = matrix.hermitian_deviation();
        if !(dev <= DENSITY_TOLERANCE) {
            return Err(Error::NotHermitian(dev));
        }
        let tr = matrix.trace().re;
        if !((tr - 1.0).abs() <= DENSITY_TOLERANCE) {
            return Err(Error::InvalidParameter { name: "trace", value: tr });
        }
        Ok(Self { matrix, modes, cutoff })
    }

    /// Divides by the trace; fails on zero trace.
    pub fn from_unnormalized(mut matrix: CMatrix, modes: ModeCount, cutoff: FockCutoff) -> Result<(Self, f64)> {
        let tr = matrix.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::ZeroNorm);
        }
        matrix.scale(1.0 / tr);
        Ok((Self::new(matrix, modes, cutoff)?, tr))
    }

    pub(crate) fn from_parts_unchecked(matrix: CMatrix, modes: ModeCount, cutoff: FockCutoff) -> Self {
        Self { matrix, modes, cutoff }
    }

    /// `|n⟩⟨n|` on a single mode.
    pub fn single_mode_fock(n: usize, cutoff: FockCutoff) -> Result<Self> {
        if n > cutoff.n_max() {
            return Err(Error::DimensionMismatch { expected: cutoff.n_max(), found: n });
        }
        let mut m = CMatrix::zeros(cutoff.dim());
        m[(n, n)] = C64::new(1.0, 0.0);
        Ok(Self { matrix: m, modes: ModeCount::One, cutoff })
    }

    /// Diagonal single-mode state with the given photon-number distribution.
    pub fn single_mode_diagonal(populations: &[f64], cutoff: FockCutoff) -> Result<Self> {
        if populations.len() > cutoff.dim() {
            return Err(Error::DimensionMismatch { expected: cutoff.dim(), found: populations.len() });
        }
        let mut diag = vec![0.0; cutoff.dim()];
        diag[..populations.len()].copy_from_slice(populations);
        Self::new(CMatrix::diagonal(&diag), ModeCount::One, cutoff)
    }

    /// `Σ pᵢ ρᵢ`; weights must sum to one and operators must share shape.
    pub fn mixture(components: &[(f64, &DensityOperator)]) -> Result<Self> {
        let (_, first) = components.first().ok_or(Error::ZeroNorm)?;
        let mut m = CMatrix::zeros(first.dim());
        for (p, rho) in components {
            rho.check_same_shape(first)?;
            m.add_scaled(&rho.matrix, *p);
        }
        Self::new(m, first.modes, first.cutoff)
    }

    /// `a ⊗ b` for two single-mode operators with the same cutoff.
    pub fn tensor(a: &DensityOperator, b: &DensityOperator) -> Result<Self> {
        if a.modes != ModeCount::One || b.modes != ModeCount::One {
            return Err(Error::WrongModeCount { expected: 1 });
        }
        a.check_same_shape(b)?;
        let d = a.cutoff.dim();
        let m = CMatrix::from_fn(d * d, |i, j| {
            a.matrix[(i / d, j / d)] * b.matrix[(i % d, j % d)]
        });
        Ok(Self { matrix: m, modes: ModeCount::Two, cutoff: a.cutoff })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn mode_count(&self) -> ModeCount {
        self.modes
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    /// Two-mode matrix element `⟨m1, m2|ρ|n1, n2⟩`.
    pub fn element(&self, (m1, m2): (usize, usize), (n1, n2): (usize, usize)) -> C64 {
        let c = self.cutoff;
        self.matrix[(c.index(m1, m2), c.index(n1, n2))]
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::eigvalsh(&self.matrix)?.first().copied().unwrap_or(0.0))
    }

    /// Fails if an eigenvalue is below [`EIGENVALUE_FLOOR`].
    pub fn check_positive(&self) -> Result<()> {
        let min = self.min_eigenvalue()?;
        if min >= EIGENVALUE_FLOOR {
            Ok(())
        } else {
            Err(Error::InvalidParameter { name: "min_eigenvalue", value: min })
        }
    }

    /// Population with any mode in its top Fock layer.
    pub fn top_layer_population(&self) -> f64 {
        let n = self.cutoff.n_max();
        (0..self.dim())
            .filter(|&i| match self.modes {
                ModeCount::One => i == n,
                ModeCount::Two => {
                    let (a, b) = self.cutoff.photon_numbers(i);
                    a == n || b == n
                }
            })
            .map(|i| self.matrix[(i, i)].re)
            .sum()
    }

    /// Reduced single-mode state of `keep`.
    pub fn reduced(&self, keep: Mode) -> Result<DensityOperator> {
        if self.modes != ModeCount::Two {
            return Err(Error::WrongModeCount { expected: 2 });
        }
        let c = self.cutoff;
        let d = c.dim();
        let m = CMatrix::from_fn(d, |a, b| {
            (0..d)
                .map(|k| match keep {
                    Mode::First => self.matrix[(c.index(a, k), c.index(b, k))],
                    Mode::Second => self.matrix[(c.index(k, a), c.index(k, b))],
                })
                .sum()
        });
        Ok(DensityOperator { matrix: m, modes: ModeCount::One, cutoff: c })
    }

    /// Photon-number populations of a single-mode state, or of the joint
    /// basis in row-major order for two modes.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// Projects onto a smaller cutoff and renormalizes, or zero-pads onto a
    /// larger one.
    pub fn with_cutoff(&self, cutoff: FockCutoff) -> Result<DensityOperator> {
        let old = self.cutoff;
        let keep = old.dim().min(cutoff.dim());
        let m = match self.modes {
            ModeCount::One => CMatrix::from_fn(cutoff.dim(), |i, j| {
                if i < keep && j < keep { self.matrix[(i, j)] } else { C64::new(0.0, 0.0) }
            }),
            ModeCount::Two => CMatrix::from_fn(cutoff.two_mode_dim(), |i, j| {
                let (a1, a2) = cutoff.photon_numbers(i);
                let (b1, b2) = cutoff.photon_numbers(j);
                if a1 < keep && a2 < keep && b1 < keep && b2 < keep {
                    self.matrix[(old.index(a1, a2), old.index(b1, b2))]
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        };
        Ok(Self::from_unnormalized(m, self.modes, cutoff)?.0)
    }

    pub(crate) fn check_same_shape(&self, other: &DensityOperator) -> Result<()> {
        if self.modes != other.modes {
            return Err(Error::WrongModeCount { expected: self.modes.count() });
        }
        if self.cutoff != other.cutoff {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }

    /// If `Tr ρ² = 1` within `1e-10`, the state vector (global phase fixed by
    /// making its largest component real).
    pub fn as_pure(&self) -> Option<Vec<C64>> {
        if (self.purity() - 1.0).abs() > 1e-10 {
            return None;
        }
        let n = self.dim();
        let j = (0..n).max_by(|&a, &b| self.matrix[(a, a)].re.total_cmp(&self.matrix[(b, b)].re))?;
        let pivot = self.matrix[(j, j)].re.sqrt();
        Some((0..n).map(|i| self.matrix[(i, j)] / pivot).collect())
    }
}

/// Uhlmann fidelity `(Tr √(√a b √a))²`. When either argument is pure this
/// reduces to `⟨ψ|ρ|ψ⟩`, which is evaluated directly.
pub fn fidelity(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    a.check_same_shape(b)?;
    let f = if let Some(psi) = a.as_pure() {
        b.matrix.expectation(&psi).re
    } else if let Some(psi) = b.as_pure() {
        a.matrix.expectation(&psi).re
    } else {
        let sa = linalg::psd_sqrt(&a.matrix)?;
        let mut inner = sa.matmul(&b.matrix).matmul(&sa);
        // restore exact Hermiticity lost to rounding in the products
        let adj = inner.adjoint();
        inner.add_scaled(&adj, 1.0);
        inner.scale(0.5);
        let s: f64 = linalg::eigvalsh(&inner)?.iter().map(|&l| l.max(0.0).sqrt()).sum();
        s * s
    };
    Ok(f.clamp(0.0, 1.0))
}
