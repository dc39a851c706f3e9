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


//! Simulation of the distillation experiment: squeezed vacuum, tap
//! beamsplitters with heralding detectors, downstream loss, and blocks of
//! homodyne data for each herald class.
//!
//! Heralded events are rare in the laboratory; here every block draws a
//! fixed number of samples from each exact conditional state instead of
//! rejection-sampling pulses.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::{apply_loss, tap_and_herald, DetectorModel, Herald, HeraldPattern, LossSpec, TapSpec};
use crate::error::check_unit_interval;
use crate::fock::{tmsv_state, DensityOperator, FockCutoff};
use crate::homodyne::{PhasePair, PhasedSampler, QuadratureGrid, QuadratureSampler};
use crate::{Error, Result};

/// Parameters of a simulated run.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentConfig {
    pub zeta: f64,
    /// Transmission after the tap, per mode.
    pub eta: [f64; 2],
    pub tap_transmissivity: f64,
    pub detector_efficiency: f64,
    pub detector_model: DetectorModel,
    pub cutoff: usize,
    pub blocks: usize,
    /// No-click pulses per block.
    pub pulses_per_block: usize,
    /// Samples per block for each heralded class.
    pub samples_per_setting: usize,
    pub reconstruction_cutoff: usize,
    /// Number of evenly spaced phase-sum settings cycled over the blocks.
    pub phase_steps: usize,
    pub seed: u64,
    pub rate: RateParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            zeta: 0.19,
            eta: [0.42, 0.42],
            tap_transmissivity: 0.11,
            detector_efficiency: 0.6,
            detector_model: DetectorModel::Threshold,
            cutoff: 15,
            blocks: 240,
            pulses_per_block: 9500,
            samples_per_setting: 1000,
            reconstruction_cutoff: 3,
            phase_steps: 24,
            seed: 0,
            rate: RateParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta >= 0.0 && self.zeta.is_finite()) {
            return Err(Error::InvalidParameter { name: "zeta", value: self.zeta });
        }
        check_unit_interval("eta", self.eta[0])?;
        check_unit_interval("eta", self.eta[1])?;
        check_unit_interval("tap_transmissivity", self.tap_transmissivity)?;
        check_unit_interval("detector_efficiency", self.detector_efficiency)?;
        FockCutoff::new(self.cutoff)?;
        FockCutoff::new(self.reconstruction_cutoff)?;
        let counts = [
            ("blocks", self.blocks, 1),
            ("pulses_per_block", self.pulses_per_block, 2),
            ("samples_per_setting", self.samples_per_setting, 2),
            ("phase_steps", self.phase_steps, 1),
        ];
        for (name, value, min) in counts {
            if value < min {
                return Err(Error::InvalidParameter { name, value: value as f64 });
            }
        }
        self.rate.validate()
    }

    pub fn cutoff(&self) -> Result<FockCutoff> {
        FockCutoff::new(self.cutoff)
    }

    pub fn taps(&self) -> Result<[TapSpec; 2]> {
        let tap = match self.detector_model {
            DetectorModel::Threshold => TapSpec::threshold(self.tap_transmissivity, self.detector_efficiency)?,
            DetectorModel::IdealAnnihilation => TapSpec::ideal(),
        };
        Ok([tap, tap])
    }

    /// Phase sum scheduled for a block.
    pub fn scheduled_phase_sum(&self, block_id: usize) -> f64 {
        TAU * (block_id % self.phase_steps) as f64 / self.phase_steps as f64
    }

    /// Transmission seen by the mode-2 photon of a mode-1 herald: the tap
    /// loses it unless it was reflected or missed by the detector.
    pub fn heralded_transmission(&self) -> f64 {
        let (t, d) = (self.tap_transmissivity, self.detector_efficiency);
        match self.detector_model {
            DetectorModel::Threshold => self.eta[1] * (1.0 - t) / (1.0 - t * d),
            DetectorModel::IdealAnnihilation => self.eta[1],
        }
    }
}

/// Source and detection figures entering the coincidence rate.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateParams {
    /// Pulse repetition rate, Hz.
    pub repetition_rate: f64,
    /// Pair probability per pulse.
    pub pair_probability: f64,
    /// Transmission of the spectral and spatial filters in each herald arm.
    pub filter_transmission: f64,
}

impl Default for RateParams {
    fn default() -> Self {
        Self { repetition_rate: 76e6, pair_probability: 0.04, filter_transmission: 0.1 }
    }
}

impl RateParams {
    fn validate(&self) -> Result<()> {
        if !(self.repetition_rate >= 0.0 && self.repetition_rate.is_finite()) {
            return Err(Error::InvalidParameter { name: "repetition_rate", value: self.repetition_rate });
        }
        check_unit_interval("pair_probability", self.pair_probability)?;
        check_unit_interval("filter_transmission", self.filter_transmission)?;
        Ok(())
    }
}

/// Expected two-detector coincidence rate in Hz: each herald arm needs a
/// photon tapped, filtered and detected.
pub fn coincidence_rate(rate: &RateParams, tap_transmissivity: f64, detector_efficiency: f64) -> f64 {
    let arm = tap_transmissivity * rate.filter_transmission * detector_efficiency;
    rate.repetition_rate * rate.pair_probability * arm * arm
}

/// Detector outcomes retained by the analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum HeraldClass {
    /// Neither detector clicked: the initial state.
    None,
    /// Only the mode-1 detector clicked: single subtraction.
    ModeOneOnly,
    /// Both clicked: the distilled state.
    Both,
}

impl HeraldClass {
    pub const ALL: [HeraldClass; 3] = [HeraldClass::None, HeraldClass::ModeOneOnly, HeraldClass::Both];

    pub fn pattern(self) -> HeraldPattern {
        match self {
            HeraldClass::None => HeraldPattern::new(Herald::NoClick, Herald::NoClick),
            HeraldClass::ModeOneOnly => HeraldPattern::new(Herald::Click, Herald::NoClick),
            HeraldClass::Both => HeraldPattern::new(Herald::Click, Herald::Click),
        }
    }

    pub fn clicks(self) -> (bool, bool) {
        match self {
            HeraldClass::None => (false, false),
            HeraldClass::ModeOneOnly => (true, false),
            HeraldClass::Both => (true, true),
        }
    }

    pub fn from_clicks(click1: bool, click2: bool) -> Option<HeraldClass> {
        match (click1, click2) {
            (false, false) => Some(HeraldClass::None),
            (true, false) => Some(HeraldClass::ModeOneOnly),
            (true, true) => Some(HeraldClass::Both),
            (false, true) => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HeraldClass::None => "none",
            HeraldClass::ModeOneOnly => "mode1",
            HeraldClass::Both => "both",
        }
    }
}

/// Exact states entering the homodyne detectors.
#[derive(Clone, Debug)]
pub struct ConditionalStates {
    pub none: DensityOperator,
    pub mode_one_only: DensityOperator,
    pub both: DensityOperator,
    /// No-click state with the taps removed.
    pub compensated: DensityOperator,
    /// Herald probability per class, in [`HeraldClass::ALL`] order.
    pub probabilities: [f64; 3],
    /// Population of the top Fock layer of the squeezed vacuum.
    pub top_layer_population: f64,
}

impl ConditionalStates {
    pub fn compute(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let source = tmsv_state(config.zeta, config.cutoff()?)?;
        let top_layer_population = source.top_layer_population();
        let rho = source.to_density()?;
        let taps = config.taps()?;
        let loss = LossSpec::per_mode(config.eta[0], config.eta[1])?;
        let mut states = Vec::with_capacity(3);
        let mut probabilities = [0.0; 3];
        for (k, class) in HeraldClass::ALL.into_iter().enumerate() {
            let h = tap_and_herald(&rho, &taps, class.pattern())?;
            probabilities[k] = h.probability;
            states.push(apply_loss(&h.state, &loss)?);
        }
        let compensated = apply_loss(&rho, &loss)?;
        let both = states.pop().expect("three classes");
        let mode_one_only = states.pop().expect("three classes");
        let none = states.pop().expect("three classes");
        Ok(Self { none, mode_one_only, both, compensated, probabilities, top_layer_population })
    }

    pub fn get(&self, class: HeraldClass) -> &DensityOperator {
        match class {
            HeraldClass::None => &self.none,
            HeraldClass::ModeOneOnly => &self.mode_one_only,
            HeraldClass::Both => &self.both,
        }
    }

    pub fn probability(&self, class: HeraldClass) -> f64 {
        self.probabilities[class as usize]
    }
}

/// One homodyne pulse. `theta_sum` is NaN until the phase has been
/// recovered from the data.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PulseRecord {
    pub block_id: usize,
    pub pulse_index: usize,
    pub click1: bool,
    pub click2: bool,
    pub theta_sum: f64,
    pub x1: f64,
    pub x2: f64,
}

impl PulseRecord {
    pub fn class(&self) -> Option<HeraldClass> {
        HeraldClass::from_clicks(self.click1, self.click2)
    }
}

/// Simulated data of one block and its true phases.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub block_id: usize,
    pub phases: PhasePair,
    /// Heralded records first (mode-1-only, then both), then no-click pulses.
    pub records: Vec<PulseRecord>,
}

/// Samplers for every herald class, shared by all blocks.
pub struct Simulator {
    config: ExperimentConfig,
    samplers: [QuadratureSampler; 3],
}

impl Simulator {
    pub fn new(config: &ExperimentConfig, states: &ConditionalStates) -> Result<Self> {
        config.validate()?;
        let grid = QuadratureGrid::default();
        let samplers = [
            QuadratureSampler::new(&states.none, grid)?,
            QuadratureSampler::new(&states.mode_one_only, grid)?,
            QuadratureSampler::new(&states.both, grid)?,
        ];
        Ok(Self { config: config.clone(), samplers })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    /// Blocks are independent: block `b` uses stream `b` of the seeded
    /// generator, so they can be produced in any order.
    pub fn simulate_block(&self, block_id: usize) -> Result<Block> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(block_id as u64);
        let sum = self.config.scheduled_phase_sum(block_id);
        let theta1 = rng.gen::<f64>() * TAU;
        let phases = PhasePair::new(theta1, sum - theta1);

        let heralded = 2 * self.config.samples_per_setting;
        let mut records = Vec::with_capacity(heralded + self.config.pulses_per_block);
        let plan = [
            (HeraldClass::ModeOneOnly, self.config.samples_per_setting),
            (HeraldClass::Both, self.config.samples_per_setting),
            (HeraldClass::None, self.config.pulses_per_block),
        ];
        for (class, count) in plan {
            let sampler: PhasedSampler<'_> = self.samplers[class as usize].at_phases(phases)?;
            let (click1, click2) = class.clicks();
            for _ in 0..count {
                let q = sampler.sample(&mut rng);
                records.push(PulseRecord {
                    block_id,
                    pulse_index: records.len(),
                    click1,
                    click2,
                    theta_sum: f64::NAN,
                    x1: q.x1,
                    x2: q.x2,
                });
            }
        }
        Ok(Block { block_id, phases, records })
    }

    /// All blocks in order.
    pub fn simulate(&self) -> Result<Vec<Block>> {
        (0..self.config.blocks).map(|b| self.simulate_block(b)).collect()
    }
}
