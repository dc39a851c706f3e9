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


//! Runs built from the core routines, with blocks simulated in parallel.

use std::path::Path;

use fockdistill_core::experiment::{Block, ConditionalStates, ExperimentConfig, HeraldClass, PulseRecord, Simulator};
use fockdistill_core::report::{annotate, calibrate_loss, calibrate_zeta, recover_phases};
use fockdistill_core::tomography::{LossEstimate, ReconstructionOptions};
use rayon::prelude::*;
use serde::Serialize;

use crate::config;
use crate::formats::{self, TruthRow};
use crate::Result;

pub const QUADRATURES: &str = "quadratures.csv";
pub const TRUTH: &str = "truth.csv";
pub const CONFIG: &str = "config.txt";
pub const STATES_DIR: &str = "states";

/// Model states and simulated blocks of one configuration.
pub struct Run {
    pub states: ConditionalStates,
    pub blocks: Vec<Block>,
}

/// Simulates every block; the result does not depend on the thread count.
pub fn simulate(config: &ExperimentConfig) -> Result<Run> {
    let states = ConditionalStates::compute(config)?;
    let sim = Simulator::new(config, &states)?;
    let blocks = (0..config.blocks)
        .into_par_iter()
        .map(|b| sim.simulate_block(b))
        .collect::<fockdistill_core::Result<Vec<_>>>()?;
    Ok(Run { states, blocks })
}

/// Herald statistics written next to the exact states.
#[derive(Clone, Debug, Serialize)]
pub struct StateSummary {
    pub herald_probabilities: [f64; 3],
    pub top_layer_population: f64,
    pub coincidence_rate_hz: f64,
    pub heralded_transmission: f64,
}

/// Writes quadratures, true phases, the resolved config and the exact states.
pub fn write_run(dir: &Path, config: &ExperimentConfig, run: &Run) -> Result<()> {
    formats::write_quadratures(&dir.join(QUADRATURES), run.blocks.iter().flat_map(|b| &b.records))?;
    formats::write_csv(&dir.join(TRUTH), run.blocks.iter().map(TruthRow::of))?;
    let path = dir.join(CONFIG);
    std::fs::write(&path, config::render(config)).map_err(|e| crate::Error::io(path, e))?;
    let states = dir.join(STATES_DIR);
    for class in HeraldClass::ALL {
        formats::write_density(&states.join(format!("{}.json", class.name())), run.states.get(class))?;
    }
    formats::write_density(&states.join("compensated.json"), &run.states.compensated)?;
    let summary = StateSummary {
        herald_probabilities: run.states.probabilities,
        top_layer_population: run.states.top_layer_population,
        coincidence_rate_hz: fockdistill_core::experiment::coincidence_rate(
            &config.rate,
            config.tap_transmissivity,
            config.detector_efficiency,
        ),
        heralded_transmission: config.heralded_transmission(),
    };
    formats::write_json(&states.join("summary.json"), &summary)
}

/// Calibration that precedes any per-class fit or reconstruction.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Calibration {
    pub transmission: LossEstimate,
    /// Squeezing used to invert block variances into phases, when needed.
    pub zeta_calibration: Option<f64>,
}

/// Calibrates the transmission unless given and recovers block phases for
/// records that carry none.
pub fn calibrate(records: &mut [PulseRecord], transmission: Option<f64>, opts: &ReconstructionOptions) -> Result<Calibration> {
    let transmission = match transmission {
        Some(eta) => LossEstimate { eta, stderr: None },
        None => calibrate_loss(records, opts)?,
    };
    let zeta_calibration = if records.iter().any(|r| r.theta_sum.is_nan()) {
        let zeta = calibrate_zeta(records, transmission.eta)?;
        let phases = recover_phases(records, zeta, transmission.eta)?;
        annotate(records, &phases);
        Some(zeta)
    } else {
        None
    };
    Ok(Calibration { transmission, zeta_calibration })
}
