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


use std::path::PathBuf;

use fockdistill_core::Error as CoreError;

/// Errors of the file-level and command-line layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format { path: path.into(), message: message.to_string() }
    }

    /// Process exit status: 2 invalid config, 3 herald impossible,
    /// 4 insufficient data, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            Error::Core(e) => match e {
                CoreError::InvalidParameter { .. } | CoreError::InvalidCutoff(_) => 2,
                CoreError::HeraldImpossible => 3,
                CoreError::InsufficientData(_)
                | CoreError::DegenerateCurve(_)
                | CoreError::NoPhaseInformation
                | CoreError::PhaseMissing(_)
                | CoreError::OutsideGrid(_)
                | CoreError::MultiPhotonPopulation { .. } => 4,
                _ => 1,
            },
            Error::Io { .. } | Error::Format { .. } => 1,
        }
    }
}
