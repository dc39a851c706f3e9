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


//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are skipped. Keys are the field
//! names of [`ExperimentConfig`], with `eta` setting both modes and `eta1`,
//! `eta2` setting one. Later assignments win.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use fockdistill_core::channels::DetectorModel;
use fockdistill_core::experiment::ExperimentConfig;

use crate::{Error, Result};

pub const KEYS: [&str; 17] = [
    "zeta",
    "eta",
    "eta1",
    "eta2",
    "tap_transmissivity",
    "detector_efficiency",
    "detector_model",
    "cutoff",
    "blocks",
    "pulses_per_block",
    "samples_per_setting",
    "reconstruction_cutoff",
    "phase_steps",
    "seed",
    "repetition_rate",
    "pair_probability",
    "filter_transmission",
];

/// Ordered assignments read from a file and the command line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assignments {
    entries: Vec<(String, String)>,
}

impl Assignments {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            entries.push((key.trim().to_string(), value.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.push((key.to_string(), value.into()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn extend(&mut self, other: Assignments) {
        self.entries.extend(other.entries);
    }

    /// Applies every assignment on top of the defaults and validates.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::default();
        for (key, value) in &self.entries {
            apply(&mut c, key, value)?;
        }
        c.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(c)
    }

    /// Like [`resolve`](Self::resolve) but requires an explicit seed.
    pub fn resolve_seeded(&self) -> Result<ExperimentConfig> {
        if self.get("seed").is_none() {
            return Err(Error::Config("`seed` is required".into()));
        }
        self.resolve()
    }
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("`{key}`: cannot parse {value:?}")))
}

fn apply(c: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "zeta" => c.zeta = number(key, value)?,
        "eta" => c.eta = [number(key, value)?; 2],
        "eta1" => c.eta[0] = number(key, value)?,
        "eta2" => c.eta[1] = number(key, value)?,
        "tap_transmissivity" => c.tap_transmissivity = number(key, value)?,
        "detector_efficiency" => c.detector_efficiency = number(key, value)?,
        "detector_model" => {
            c.detector_model = match value {
                "threshold" => DetectorModel::Threshold,
                "ideal" => DetectorModel::IdealAnnihilation,
                _ => return Err(Error::Config(format!("`detector_model`: expected threshold or ideal, got {value:?}"))),
            }
        }
        "cutoff" => c.cutoff = number(key, value)?,
        "blocks" => c.blocks = number(key, value)?,
        "pulses_per_block" => c.pulses_per_block = number(key, value)?,
        "samples_per_setting" => c.samples_per_setting = number(key, value)?,
        "reconstruction_cutoff" => c.reconstruction_cutoff = number(key, value)?,
        "phase_steps" => c.phase_steps = number(key, value)?,
        "seed" => c.seed = number(key, value)?,
        "repetition_rate" => c.rate.repetition_rate = number(key, value)?,
        "pair_probability" => c.rate.pair_probability = number(key, value)?,
        "filter_transmission" => c.rate.filter_transmission = number(key, value)?,
        _ => return Err(Error::Config(format!("unknown key `{key}`"))),
    }
    Ok(())
}

/// Renders a configuration that [`Assignments::parse`] reads back exactly.
pub fn render(c: &ExperimentConfig) -> String {
    let model = match c.detector_model {
        DetectorModel::Threshold => "threshold",
        DetectorModel::IdealAnnihilation => "ideal",
    };
    let mut s = String::new();
    s.push_str("# phase sum: evenly spaced over phase_steps settings, cycled by block\n");
    s.push_str("# phase difference: uniform on [0, 2pi), independent per block\n");
    let lines: [(&str, String); 16] = [
        ("zeta", c.zeta.to_string()),
        ("eta1", c.eta[0].to_string()),
        ("eta2", c.eta[1].to_string()),
        ("tap_transmissivity", c.tap_transmissivity.to_string()),
        ("detector_efficiency", c.detector_efficiency.to_string()),
        ("detector_model", model.to_string()),
        ("cutoff", c.cutoff.to_string()),
        ("blocks", c.blocks.to_string()),
        ("pulses_per_block", c.pulses_per_block.to_string()),
        ("samples_per_setting", c.samples_per_setting.to_string()),
        ("reconstruction_cutoff", c.reconstruction_cutoff.to_string()),
        ("phase_steps", c.phase_steps.to_string()),
        ("seed", c.seed.to_string()),
        ("repetition_rate", c.rate.repetition_rate.to_string()),
        ("pair_probability", c.rate.pair_probability.to_string()),
        ("filter_transmission", c.rate.filter_transmission.to_string()),
    ];
    for (k, v) in lines {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_later_assignments() {
        let a = Assignments::parse("# run\n\nzeta = 0.3\neta=0.5\neta2 = 0.7\nzeta = 0.25\n").unwrap();
        let c = a.resolve().unwrap();
        assert_eq!(c.zeta, 0.25);
        assert_eq!(c.eta, [0.5, 0.7]);
    }

    #[test]
    fn rejects_bad_input() {
        for text in ["zeta", "color = red", "blocks = -1", "zeta = -0.1", "detector_model = pnr"] {
            let r = Assignments::parse(text).and_then(|a| a.resolve());
            assert!(matches!(r, Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn seed_required_when_asked() {
        let a = Assignments::parse("zeta = 0.2").unwrap();
        assert!(matches!(a.resolve_seeded(), Err(Error::Config(_))));
        assert!(a.resolve().is_ok());
    }

    #[test]
    fn render_round_trip() {
        let mut c = ExperimentConfig { zeta: 0.1 + 0.2, seed: 17, ..Default::default() };
        c.eta = [0.3, 1.0 / 3.0];
        c.detector_model = DetectorModel::IdealAnnihilation;
        let back = Assignments::parse(&render(&c)).unwrap().resolve().unwrap();
        assert_eq!(back, c);
    }
}
