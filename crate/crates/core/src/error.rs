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

use alloc::string::String;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("Fock cutoff must be at least 1, got {0}")]
    InvalidCutoff(usize),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("herald pattern has zero probability")]
    HeraldImpossible,

    #[error("herald pattern must condition on at least one mode")]
    UnconditionedPattern,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("operation requires a {expected}-mode state")]
    WrongModeCount { expected: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("quadrature distribution has negligible mass on the sampling grid ({0:e})")]
    DegeneratePdf(f64),

    #[error("sample quadrature {0} lies outside the grid support")]
    OutsideGrid(f64),

    #[error("sample {0} has no phase annotation")]
    PhaseMissing(usize),

    #[error("zero squeezing carries no phase information")]
    NoPhaseInformation,

    #[error("population above one photon is {population:.4}, above threshold {threshold:.4}")]
    MultiPhotonPopulation { population: f64, threshold: f64 },

    #[error("degenerate variance curve: {0}")]
    DegenerateCurve(String),

    #[error("missing report variant: {0}")]
    MissingVariant(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}
