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


//! On-disk formats: density JSON, quadrature and truth CSV, plot series.
//!
//! Two-mode basis states |n1,n2⟩ are indexed row-major, n1 slow and n2
//! fast; density entries are the matrix rows in that order.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use fockdistill_core::experiment::{Block, PulseRecord};
use fockdistill_core::fock::{DensityOperator, ModeCount};
use fockdistill_core::homodyne::VarianceCurve;
use fockdistill_core::linalg::CMatrix;
use fockdistill_core::C64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const BASIS_ORDERING: &str = "row-major |n1,n2>, n1 slow, n2 fast";

/// Serialized density matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityJson {
    pub mode_count: usize,
    pub n_max: usize,
    #[serde(default = "ordering")]
    pub ordering: String,
    pub entries: Vec<[f64; 2]>,
}

fn ordering() -> String {
    BASIS_ORDERING.to_string()
}

impl DensityJson {
    pub fn of(rho: &DensityOperator) -> Self {
        Self {
            mode_count: rho.mode_count().count(),
            n_max: rho.cutoff().n_max(),
            ordering: ordering(),
            entries: rho.matrix().as_slice().iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn to_density(&self) -> fockdistill_core::Result<DensityOperator> {
        let modes = ModeCount::from_count(self.mode_count)?;
        let cutoff = fockdistill_core::fock::FockCutoff::new(self.n_max)?;
        let data = self.entries.iter().map(|&[re, im]| C64::new(re, im)).collect();
        DensityOperator::new(CMatrix::from_row_major(data)?, modes, cutoff)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::format(path, e))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    finish(w, path)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let mut text = String::new();
    File::open(path).and_then(|mut f| f.read_to_string(&mut text)).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e))
}

pub fn write_density(path: &Path, rho: &DensityOperator) -> Result<()> {
    write_json(path, &DensityJson::of(rho))
}

pub fn read_density(path: &Path) -> Result<DensityOperator> {
    Ok(read_json::<DensityJson>(path)?.to_density()?)
}

#[derive(Serialize, Deserialize)]
struct QuadratureRow {
    block_id: usize,
    pulse_index: usize,
    click1: u8,
    click2: u8,
    theta_sum: f64,
    x1: f64,
    x2: f64,
}

fn flag(path: &Path, v: u8) -> Result<bool> {
    match v {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(Error::format(path, format!("click flag must be 0 or 1, got {v}"))),
    }
}

/// One row per pulse; `theta_sum` is `NaN` where no phase was recovered.
pub fn write_quadratures<'a>(path: &Path, records: impl IntoIterator<Item = &'a PulseRecord>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in records {
        w.serialize(QuadratureRow {
            block_id: r.block_id,
            pulse_index: r.pulse_index,
            click1: r.click1 as u8,
            click2: r.click2 as u8,
            theta_sum: r.theta_sum,
            x1: r.x1,
            x2: r.x2,
        })
        .map_err(|e| Error::format(path, e))?;
    }
    let inner = w.into_inner().map_err(|e| Error::format(path, e.error()))?;
    finish(inner, path)
}

pub fn read_quadratures(path: &Path) -> Result<Vec<PulseRecord>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| Error::format(path, e))?;
    let mut out = Vec::new();
    for row in rd.deserialize::<QuadratureRow>() {
        let r = row.map_err(|e| Error::format(path, e))?;
        out.push(PulseRecord {
            block_id: r.block_id,
            pulse_index: r.pulse_index,
            click1: flag(path, r.click1)?,
            click2: flag(path, r.click2)?,
            theta_sum: r.theta_sum,
            x1: r.x1,
            x2: r.x2,
        });
    }
    Ok(out)
}

/// True local-oscillator phases of every block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub block_id: usize,
    pub theta1: f64,
    pub theta2: f64,
    pub theta_sum: f64,
}

impl TruthRow {
    pub fn of(block: &Block) -> Self {
        Self {
            block_id: block.block_id,
            theta1: block.phases.theta1,
            theta2: block.phases.theta2,
            theta_sum: block.phases.sum(),
        }
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row).map_err(|e| Error::format(path, e))?;
    }
    let inner = w.into_inner().map_err(|e| Error::format(path, e.error()))?;
    finish(inner, path)
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| Error::format(path, e))?;
    rd.deserialize().map(|r| r.map_err(|e| Error::format(path, e))).collect()
}

/// A row of the variance-versus-phase plot series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub series: String,
    pub theta_sum: f64,
    pub sign: char,
    pub variance: f64,
    pub stderr: f64,
}

pub fn variance_rows(series: &str, curve: &VarianceCurve) -> Vec<VarianceRow> {
    curve
        .points
        .iter()
        .map(|p| VarianceRow {
            series: series.to_string(),
            theta_sum: p.theta_sum,
            sign: p.sign.symbol(),
            variance: p.variance,
            stderr: p.stderr,
        })
        .collect()
}

/// One element ⟨m1,m2|ρ|n1,n2⟩ of the low photon number plot series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub series: String,
    pub m1: usize,
    pub m2: usize,
    pub n1: usize,
    pub n2: usize,
    pub re: f64,
    pub im: f64,
}

/// Elements with every photon number at most `n_max`.
pub fn density_rows(series: &str, rho: &DensityOperator, n_max: usize) -> Vec<DensityRow> {
    let n = n_max.min(rho.cutoff().n_max());
    let mut out = Vec::new();
    let pairs: Vec<(usize, usize)> = (0..=n).flat_map(|a| (0..=n).map(move |b| (a, b))).collect();
    for &(m1, m2) in &pairs {
        for &(n1, n2) in &pairs {
            let c = rho.element((m1, m2), (n1, n2));
            out.push(DensityRow { series: series.to_string(), m1, m2, n1, n2, re: c.re, im: c.im });
        }
    }
    out
}
