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


//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fockdistill_core::experiment::{ConditionalStates, ExperimentConfig, HeraldClass};
use fockdistill_core::fit::{fit_variance_curve, ZetaFit};
use fockdistill_core::metrics::MetricsReport;
use fockdistill_core::report::{analyze, block_curve, exact_curve, tomography_records, Analysis, AnalysisOptions, ReportInputs, TableOneReport};
use fockdistill_core::tomography::{maxlik_two_mode, Binning, ReconstructionOptions};
use serde::Serialize;

use crate::config::Assignments;
use crate::formats::{self, density_rows, variance_rows};
use crate::pipeline::{self, Calibration};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "fockdistill", version, about = "Simulate and analyse heralded two-mode squeezed light")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a run: quadrature CSV, true phases and exact states.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the squeezing parameter to the variance curve of one class.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        /// Write JSON here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximum-likelihood density matrix of one class.
    Reconstruct {
        #[command(flatten)]
        data: DataArgs,
        /// Photon number cutoff of the reconstruction.
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        #[arg(long, default_value_t = 2000)]
        max_iterations: usize,
        /// Bin the data above this many samples; 0 disables binning.
        #[arg(long)]
        max_bins: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Entanglement and squeezing figures of a density JSON.
    Metrics {
        #[arg(long)]
        input: PathBuf,
        /// Attach a fitted squeezing parameter to the report.
        #[arg(long)]
        fitted_zeta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Table of fitted and reconstructed parameters for a simulated run.
    Report {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Variance curves and low photon number density elements as CSV.
    Plotdata {
        #[command(flatten)]
        run: RunArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    None,
    Mode1,
    Both,
}

impl From<ClassArg> for HeraldClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::None => HeraldClass::None,
            ClassArg::Mode1 => HeraldClass::ModeOneOnly,
            ClassArg::Both => HeraldClass::Both,
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Quadrature CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ClassArg::Both)]
    class: ClassArg,
    /// Use this transmission instead of calibrating it from the data.
    #[arg(long)]
    transmission: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Directory written by `simulate`.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Second reconstruction cutoff reported alongside the main one; 0 disables it.
    #[arg(long, default_value_t = 5)]
    alternate_cutoff: usize,
    /// Skip the split-half uncertainty of the log-negativities.
    #[arg(long)]
    no_split_half: bool,
}

/// Configuration file plus one override flag per key.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// Flat key = value file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "zeta")]
    pub zeta: Option<String>,
    #[arg(long = "eta")]
    pub eta: Option<String>,
    #[arg(long = "eta1")]
    pub eta1: Option<String>,
    #[arg(long = "eta2")]
    pub eta2: Option<String>,
    #[arg(long = "tap_transmissivity")]
    pub tap_transmissivity: Option<String>,
    #[arg(long = "detector_efficiency")]
    pub detector_efficiency: Option<String>,
    #[arg(long = "detector_model")]
    pub detector_model: Option<String>,
    #[arg(long = "cutoff")]
    pub cutoff: Option<String>,
    #[arg(long = "blocks")]
    pub blocks: Option<String>,
    #[arg(long = "pulses_per_block")]
    pub pulses_per_block: Option<String>,
    #[arg(long = "samples_per_setting")]
    pub samples_per_setting: Option<String>,
    #[arg(long = "reconstruction_cutoff")]
    pub reconstruction_cutoff: Option<String>,
    #[arg(long = "phase_steps")]
    pub phase_steps: Option<String>,
    #[arg(long = "seed")]
    pub seed: Option<String>,
    #[arg(long = "repetition_rate")]
    pub repetition_rate: Option<String>,
    #[arg(long = "pair_probability")]
    pub pair_probability: Option<String>,
    #[arg(long = "filter_transmission")]
    pub filter_transmission: Option<String>,
}

impl ConfigArgs {
    /// File assignments (from `default_file` when no `--config` is given)
    /// followed by the flags, in key order.
    pub fn assignments(&self, default_file: Option<&Path>) -> Result<Assignments> {
        let mut a = match self.config.as_deref().or(default_file) {
            Some(path) => Assignments::read(path)?,
            None => Assignments::default(),
        };
        let flags = [
            ("zeta", &self.zeta),
            ("eta", &self.eta),
            ("eta1", &self.eta1),
            ("eta2", &self.eta2),
            ("tap_transmissivity", &self.tap_transmissivity),
            ("detector_efficiency", &self.detector_efficiency),
            ("detector_model", &self.detector_model),
            ("cutoff", &self.cutoff),
            ("blocks", &self.blocks),
            ("pulses_per_block", &self.pulses_per_block),
            ("samples_per_setting", &self.samples_per_setting),
            ("reconstruction_cutoff", &self.reconstruction_cutoff),
            ("phase_steps", &self.phase_steps),
            ("seed", &self.seed),
            ("repetition_rate", &self.repetition_rate),
            ("pair_probability", &self.pair_probability),
            ("filter_transmission", &self.filter_transmission),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                a.set(key, v.clone());
            }
        }
        Ok(a)
    }
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => formats::write_json(path, value),
        None => {
            let text = serde_json::to_string_pretty(value).map_err(|e| Error::format("<stdout>", e))?;
            writeln!(std::io::stdout(), "{text}").map_err(|e| Error::io("<stdout>", e))
        }
    }
}

#[derive(Serialize)]
struct FitOutput {
    class: &'static str,
    calibration: Calibration,
    fit: ZetaFit,
    reduced_chi2: f64,
}

#[derive(Serialize)]
struct ReconstructionSummary {
    class: &'static str,
    samples: usize,
    iterations: usize,
    converged: bool,
    final_log_likelihood: f64,
}

fn load(data: &DataArgs, opts: &ReconstructionOptions) -> Result<(Vec<fockdistill_core::experiment::PulseRecord>, Calibration)> {
    let mut records = formats::read_quadratures(&data.input)?;
    let calibration = pipeline::calibrate(&mut records, data.transmission, opts)?;
    Ok((records, calibration))
}

/// Resolved configuration, exact states and analysis of a simulated run.
struct Analysed {
    config: ExperimentConfig,
    states: ConditionalStates,
    analysis: Analysis,
}

fn analyse_run(args: &RunArgs) -> Result<Analysed> {
    let config = args.config.assignments(Some(&args.input.join(pipeline::CONFIG)))?.resolve()?;
    let mut records = formats::read_quadratures(&args.input.join(pipeline::QUADRATURES))?;
    for r in &mut records {
        r.theta_sum = f64::NAN;
    }
    let states = ConditionalStates::compute(&config)?;
    let opts = AnalysisOptions {
        alternate_cutoff: (args.alternate_cutoff > 0).then_some(args.alternate_cutoff),
        split_half: !args.no_split_half,
        ..AnalysisOptions::for_config(&config)?
    };
    let analysis = analyze(&config, &mut records, &opts)?;
    Ok(Analysed { config, states, analysis })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out } => {
            let config = config.assignments(None)?.resolve_seeded()?;
            let run = pipeline::simulate(&config)?;
            pipeline::write_run(&out, &config, &run)
        }
        Command::Fit { data, out } => {
            let (records, calibration) = load(&data, &ReconstructionOptions::default())?;
            let class = HeraldClass::from(data.class);
            let fit = fit_variance_curve(&block_curve(&records, class)?, calibration.transmission.eta)?;
            emit(out.as_deref(), &FitOutput { class: class.name(), calibration, fit, reduced_chi2: fit.reduced_chi2() })
        }
        Command::Reconstruct { data, n_max, max_iterations, max_bins, out } => {
            let mut opts = ReconstructionOptions { max_iterations, ..ReconstructionOptions::with_cutoff(n_max)? };
            opts.binning = match max_bins {
                None => Binning::Auto,
                Some(0) => Binning::Off,
                Some(n) => Binning::MaxBins(n),
            };
            let (records, _) = load(&data, &ReconstructionOptions::default())?;
            let class = HeraldClass::from(data.class);
            let samples = tomography_records(&records, class, None);
            let r = maxlik_two_mode(&samples, &opts)?;
            formats::write_density(&out, &r.state)?;
            let summary = ReconstructionSummary {
                class: class.name(),
                samples: samples.len(),
                iterations: r.iterations,
                converged: r.converged,
                final_log_likelihood: r.log_likelihood.last().copied().unwrap_or(f64::NAN),
            };
            let text = serde_json::to_string(&summary).map_err(|e| Error::format("<stderr>", e))?;
            eprintln!("{text}");
            Ok(())
        }
        Command::Metrics { input, fitted_zeta, out } => {
            let rho = formats::read_density(&input)?;
            let mut report = MetricsReport::of(&rho)?;
            if let Some(z) = fitted_zeta {
                report = report.with_fitted_zeta(z);
            }
            emit(out.as_deref(), &report)
        }
        Command::Report { run, format, out } => {
            let a = analyse_run(&run)?;
            let report = TableOneReport::build(ReportInputs {
                config: Some(&a.config),
                states: Some(&a.states),
                analysis: Some(&a.analysis),
            })?;
            match format {
                Format::Json => emit(out.as_deref(), &report),
                Format::Text => {
                    let text = report.render_text();
                    match out {
                        Some(path) => std::fs::write(&path, text).map_err(|e| Error::io(path, e)),
                        None => write!(std::io::stdout(), "{text}").map_err(|e| Error::io("<stdout>", e)),
                    }
                }
            }
        }
        Command::Plotdata { run, out } => {
            let a = analyse_run(&run)?;
            let series = [
                (HeraldClass::None, &a.analysis.no_click_curve),
                (HeraldClass::ModeOneOnly, &a.analysis.single_curve),
                (HeraldClass::Both, &a.analysis.dual_curve),
            ];
            let mut variances = Vec::new();
            for (class, curve) in series {
                variances.extend(variance_rows(class.name(), curve));
            }
            for (class, _) in series {
                let model = exact_curve(a.states.get(class), 49)?;
                variances.extend(variance_rows(&format!("model_{}", class.name()), &model));
            }
            formats::write_csv(&out.join("variances.csv"), variances)?;

            let mut density = Vec::new();
            for class in HeraldClass::ALL {
                density.extend(density_rows(class.name(), &a.analysis.reconstruction(class).state, 2));
            }
            for class in HeraldClass::ALL {
                density.extend(density_rows(&format!("model_{}", class.name()), a.states.get(class), 2));
            }
            formats::write_csv(&out.join("density.csv"), density)
        }
    }
}
