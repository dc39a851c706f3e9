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

//! Non-unitary maps: bosonic loss, the photon-subtraction tap with its
//! heralding detectors, and conditioning on click patterns.
//!
//! A tap of transmissivity `T` followed by a detector on the tapped arm is
//! the loss channel with transmission `1 - T` in which the `k`-photon Kraus
//! branch is additionally weighted by the detector's response to `k`
//! photons. Threshold detectors are diagonal in photon number, so the
//! ancilla never needs to be represented explicitly and its cutoff is that
//! of the system.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // unused when a dependent links std
use num_traits::Float;

use crate::error::check_unit_interval;
use crate::fock::{DensityOperator, FockCutoff, Mode, ModeCount};
use crate::linalg::CMatrix;
use crate::{Error, Result, C64};

/// Per-mode transmission efficiencies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossSpec {
    pub eta: [f64; 2],
}

impl LossSpec {
    pub fn uniform(eta: f64) -> Result<Self> {
        Self::per_mode(eta, eta)
    }

    pub fn per_mode(eta1: f64, eta2: f64) -> Result<Self> {
        check_unit_interval("eta", eta1)?;
        check_unit_interval("eta", eta2)?;
        Ok(Self { eta: [eta1, eta2] })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DetectorModel {
    /// Click means exactly `a ρ a†`; tap parameters are ignored.
    IdealAnnihilation,
    /// Non-number-resolving detector behind a beamsplitter tap.
    Threshold,
}

/// Photon-subtraction tap on one mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TapSpec {
    /// Fraction of the mode's intensity sent to the detector.
    pub transmissivity: f64,
    pub detector_efficiency: f64,
    pub model: DetectorModel,
}

impl TapSpec {
    pub fn threshold(transmissivity: f64, detector_efficiency: f64) -> Result<Self> {
        check_unit_interval("tap_transmissivity", transmissivity)?;
        check_unit_interval("detector_efficiency", detector_efficiency)?;
        Ok(Self { transmissivity, detector_efficiency, model: DetectorModel::Threshold })
    }

    pub fn ideal() -> Self {
        Self { transmissivity: 0.0, detector_efficiency: 1.0, model: DetectorModel::IdealAnnihilation }
    }

    fn validate(&self) -> Result<()> {
        check_unit_interval("tap_transmissivity", self.transmissivity)?;
        check_unit_interval("detector_efficiency", self.detector_efficiency)?;
        Ok(())
    }
}

/// Requirement on one detector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Herald {
    Click,
    NoClick,
    Ignore,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HeraldPattern {
    pub mode1: Herald,
    pub mode2: Herald,
}

impl HeraldPattern {
    /// The four mutually exclusive outcomes of two detectors.
    pub const EXHAUSTIVE: [HeraldPattern; 4] = [
        HeraldPattern::new(Herald::NoClick, Herald::NoClick),
        HeraldPattern::new(Herald::Click, Herald::NoClick),
        HeraldPattern::new(Herald::NoClick, Herald::Click),
        HeraldPattern::new(Herald::Click, Herald::Click),
    ];

    pub const fn new(mode1: Herald, mode2: Herald) -> Self {
        Self { mode1, mode2 }
    }

    pub fn get(&self, mode: Mode) -> Herald {
        match mode {
            Mode::First => self.mode1,
            Mode::Second => self.mode2,
        }
    }
}

/// Conditional state and the probability of its herald pattern.
#[derive(Clone, Debug)]
pub struct Heralded {
    pub state: DensityOperator,
    /// Pattern probability for threshold detectors; for the ideal model this
    /// is the squared norm `Tr(a ρ a†)`.
    pub probability: f64,
}

/// Diagonal threshold-detector POVM: `Π_noclick = (1-η_d)^n̂`,
/// `Π_click = 1 - Π_noclick`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdPovm {
    pub no_click: Vec<f64>,
    pub click: Vec<f64>,
}

impl ThresholdPovm {
    /// Click probability for a single-mode state.
    pub fn click_probability(&self, rho: &DensityOperator) -> Result<f64> {
        if rho.mode_count() != ModeCount::One {
            return Err(Error::WrongModeCount { expected: 1 });
        }
        if rho.dim() != self.click.len() {
            return Err(Error::DimensionMismatch { expected: self.click.len(), found: rho.dim() });
        }
        Ok(rho.populations().iter().zip(&self.click).map(|(p, c)| p * c).sum())
    }
}

pub fn detector_povm(eta_d: f64, cutoff: FockCutoff) -> Result<ThresholdPovm> {
    check_unit_interval("detector_efficiency", eta_d)?;
    let no_click: Vec<f64> = (0..cutoff.dim()).map(|n| (1.0 - eta_d).powi(n as i32)).collect();
    let click = no_click.iter().map(|p| 1.0 - p).collect();
    Ok(ThresholdPovm { no_click, click })
}

/// `√(C(n,k) η^(n-k) (1-η)^k)` indexed `[k][n]`, zero for `n < k`.
fn damping_coefficients(eta: f64, dim: usize) -> Vec<Vec<f64>> {
    let mut binom = vec![vec![0.0f64; dim]; dim];
    for n in 0..dim {
        binom[n][0] = 1.0;
        for k in 1..=n {
            binom[n][k] = binom[n - 1][k - 1] + if k < n { binom[n - 1][k] } else { 0.0 };
        }
    }
    (0..dim)
        .map(|k| {
            (0..dim)
                .map(|n| {
                    if n < k {
                        0.0
                    } else {
                        (binom[n][k] * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32)).sqrt()
                    }
                })
                .collect()
        })
        .collect()
}

/// Kraus operators `A_k = Σ_n √(C(n,k) η^(n-k) (1-η)^k) |n-k⟩⟨n|`,
/// `k = 0..=n_max`, of the single-mode loss channel.
pub fn loss_kraus_operators(eta: f64, cutoff: FockCutoff) -> Result<Vec<CMatrix>> {
    check_unit_interval("eta", eta)?;
    let d = cutoff.dim();
    let coef = damping_coefficients(eta, d);
    Ok(coef
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let mut a = CMatrix::zeros(d);
            for n in k..d {
                a[(n - k, n)] = C64::new(row[n], 0.0);
            }
            a
        })
        .collect())
}

/// Splits a basis index into (photon number of `mode`, index of the rest)
/// and back.
#[derive(Clone, Copy)]
struct LocalIndex {
    modes: ModeCount,
    cutoff: FockCutoff,
    mode: Mode,
}

impl LocalIndex {
    fn split(&self, i: usize) -> (usize, usize) {
        match self.modes {
            ModeCount::One => (i, 0),
            ModeCount::Two => {
                let (n1, n2) = self.cutoff.photon_numbers(i);
                match self.mode {
                    Mode::First => (n1, n2),
                    Mode::Second => (n2, n1),
                }
            }
        }
    }

    fn join(&self, local: usize, rest: usize) -> usize {
        match (self.modes, self.mode) {
            (ModeCount::One, _) => local,
            (ModeCount::Two, Mode::First) => self.cutoff.index(local, rest),
            (ModeCount::Two, Mode::Second) => self.cutoff.index(rest, local),
        }
    }
}

/// `Σ_k w(k) A_k ρ A_k†` with `A_k` the loss Kraus operators acting on `mode`.
fn weighted_damping(
    matrix: &CMatrix,
    modes: ModeCount,
    cutoff: FockCutoff,
    mode: Mode,
    eta: f64,
    weight: impl Fn(usize) -> f64,
) -> CMatrix {
    let d = cutoff.dim();
    let coef = damping_coefficients(eta, d);
    let weights: Vec<f64> = (0..d).map(weight).collect();
    let idx = LocalIndex { modes, cutoff, mode };
    let dim = matrix.dim();
    let mut out = CMatrix::zeros(dim);
    for i in 0..dim {
        let (a, ra) = idx.split(i);
        for j in 0..dim {
            let (b, rb) = idx.split(j);
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d - a.max(b) {
                let w = weights[k];
                if w == 0.0 {
                    continue;
                }
                let src = matrix[(idx.join(a + k, ra), idx.join(b + k, rb))];
                acc += src * (w * coef[k][a + k] * coef[k][b + k]);
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// `a ρ a†` on `mode`.
fn annihilate_matrix(matrix: &CMatrix, modes: ModeCount, cutoff: FockCutoff, mode: Mode) -> CMatrix {
    let d = cutoff.dim();
    let idx = LocalIndex { modes, cutoff, mode };
    CMatrix::from_fn(matrix.dim(), |i, j| {
        let (a, ra) = idx.split(i);
        let (b, rb) = idx.split(j);
        if a + 1 >= d || b + 1 >= d {
            return C64::new(0.0, 0.0);
        }
        matrix[(idx.join(a + 1, ra), idx.join(b + 1, rb))] * (((a + 1) * (b + 1)) as f64).sqrt()
    })
}

/// Loss with transmission `eta` on one mode (generalized amplitude damping).
pub fn loss_channel(rho: &DensityOperator, mode: Mode, eta: f64) -> Result<DensityOperator> {
    check_unit_interval("eta", eta)?;
    if rho.mode_count() == ModeCount::One && mode != Mode::First {
        return Err(Error::WrongModeCount { expected: 2 });
    }
    let out = weighted_damping(rho.matrix(), rho.mode_count(), rho.cutoff(), mode, eta, |_| 1.0);
    Ok(DensityOperator::from_parts_unchecked(out, rho.mode_count(), rho.cutoff()))
}

/// Independent loss on both modes of a two-mode state.
pub fn apply_loss(rho: &DensityOperator, loss: &LossSpec) -> Result<DensityOperator> {
    if rho.mode_count() != ModeCount::Two {
        return Err(Error::WrongModeCount { expected: 2 });
    }
    let first = loss_channel(rho, Mode::First, loss.eta[0])?;
    loss_channel(&first, Mode::Second, loss.eta[1])
}

fn herald_weight(herald: Herald, eta_d: f64) -> impl Fn(usize) -> f64 {
    move |k| {
        let miss = (1.0 - eta_d).powi(k as i32);
        match herald {
            Herald::Click => 1.0 - miss,
            Herald::NoClick => miss,
            Herald::Ignore => 1.0,
        }
    }
}

fn tap_mode(matrix: &CMatrix, rho: &DensityOperator, mode: Mode, tap: &TapSpec, herald: Herald) -> CMatrix {
    match tap.model {
        DetectorModel::Threshold => weighted_damping(
            matrix,
            rho.mode_count(),
            rho.cutoff(),
            mode,
            1.0 - tap.transmissivity,
            herald_weight(herald, tap.detector_efficiency),
        ),
        DetectorModel::IdealAnnihilation => match herald {
            Herald::Click => annihilate_matrix(matrix, rho.mode_count(), rho.cutoff(), mode),
            Herald::NoClick | Herald::Ignore => matrix.clone(),
        },
    }
}

/// Taps both modes of `rho` and conditions on `pattern`.
///
/// Fails with [`Error::HeraldImpossible`] when the pattern cannot occur
/// (e.g. a click requested from vacuum; there are no dark counts).
pub fn tap_and_herald(rho: &DensityOperator, taps: &[TapSpec; 2], pattern: HeraldPattern) -> Result<Heralded> {
    if rho.mode_count() != ModeCount::Two {
        return Err(Error::WrongModeCount { expected: 2 });
    }
    if pattern.mode1 == Herald::Ignore && pattern.mode2 == Herald::Ignore {
        return Err(Error::UnconditionedPattern);
    }
    taps[0].validate()?;
    taps[1].validate()?;
    let first = tap_mode(rho.matrix(), rho, Mode::First, &taps[0], pattern.mode1);
    let both = tap_mode(&first, rho, Mode::Second, &taps[1], pattern.mode2);
    let probability = both.trace().re;
    if !(probability > f64::MIN_POSITIVE) {
        return Err(Error::HeraldImpossible);
    }
    let (state, _) = DensityOperator::from_unnormalized(both, ModeCount::Two, rho.cutoff())?;
    Ok(Heralded { state, probability })
}

/// The state after both taps with the detector outcomes discarded.
pub fn tap_unmeasured(rho: &DensityOperator, taps: &[TapSpec; 2]) -> Result<DensityOperator> {
    if rho.mode_count() != ModeCount::Two {
        return Err(Error::WrongModeCount { expected: 2 });
    }
    let first = tap_mode(rho.matrix(), rho, Mode::First, &taps[0], Herald::Ignore);
    let both = tap_mode(&first, rho, Mode::Second, &taps[1], Herald::Ignore);
    Ok(DensityOperator::from_parts_unchecked(both, ModeCount::Two, rho.cutoff()))
}
