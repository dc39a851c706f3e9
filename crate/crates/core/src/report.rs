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


//! Analysis of simulated runs and the summary table comparing the initial,
//! tap-compensated, dual-subtracted and single-subtracted states.
//!
//! The analysis only sees pulse records. It calibrates the transmission
//! from the mode-2 photon of mode-1 heralds, the squeezing from the
//! phase-independent sum `V- + V+` of no-click blocks, recovers each block's
//! phase sum from its no-click `x1 - x2` variance, and then fits and
//! reconstructs every herald class.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{LN_10, PI};
use core::fmt::Write;

#[allow(unused_imports)] // unused when a dependent links std
use num_traits::Float;

use crate::experiment::{ConditionalStates, ExperimentConfig, HeraldClass, PulseRecord};
use crate::fit::{distillation_gain, fit_variance_curve, phase_from_variance, ZetaFit, MIN_BLOCK_PULSES};
use crate::fock::{DensityOperator, FockCutoff};
use crate::homodyne::{empirical_variance, variance_model, Sign, VarianceCurve, VariancePoint};
use crate::metrics::{log_negativity, min_correlated_variance, squeezing_db};
use crate::tomography::{
    estimate_loss, maxlik_single_mode, maxlik_two_mode, Binning, LossEstimate, ReconstructionOptions,
    SingleModeRecord, TwoModeRecord, DEFAULT_MAX_BINS,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisOptions {
    pub reconstruction: ReconstructionOptions,
    /// Larger cutoff reported alongside the main reconstruction.
    pub alternate_cutoff: Option<usize>,
    /// Estimate reconstruction uncertainties from even and odd blocks.
    pub split_half: bool,
}

impl AnalysisOptions {
    pub fn for_config(config: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            reconstruction: ReconstructionOptions::with_cutoff(config.reconstruction_cutoff)?,
            alternate_cutoff: Some(5),
            split_half: true,
        })
    }
}

fn class_records(records: &[PulseRecord], class: HeraldClass) -> impl Iterator<Item = &PulseRecord> {
    records.iter().filter(move |r| r.class() == Some(class))
}

fn by_block<'a>(records: impl Iterator<Item = &'a PulseRecord>) -> BTreeMap<usize, Vec<(f64, f64)>> {
    let mut out: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        out.entry(r.block_id).or_default().push((r.x1, r.x2));
    }
    out
}

/// Transmission estimate from the phase-averaged mode-2 state heralded by a
/// mode-1 click.
pub fn calibrate_loss(records: &[PulseRecord], opts: &ReconstructionOptions) -> Result<LossEstimate> {
    let samples: Vec<SingleModeRecord> =
        class_records(records, HeraldClass::ModeOneOnly).map(|r| SingleModeRecord { x: r.x2, phase: None }).collect();
    if samples.is_empty() {
        return Err(Error::InsufficientData("no mode-1 heralded records".into()));
    }
    let rho = maxlik_single_mode(&samples, opts)?.state;
    estimate_loss(&rho, Some(samples.len()))
}

/// Squeezing from `V- + V+ = 2[(1-η) + η cosh 2ζ]`, which holds at every
/// phase, averaged over the no-click blocks.
pub fn calibrate_zeta(records: &[PulseRecord], eta: f64) -> Result<f64> {
    let blocks = by_block(class_records(records, HeraldClass::None));
    if blocks.is_empty() {
        return Err(Error::InsufficientData("no no-click records".into()));
    }
    let mut total = 0.0;
    for pairs in blocks.values() {
        let minus = empirical_variance(pairs.iter().copied(), Sign::Minus)?.variance;
        let plus = empirical_variance(pairs.iter().copied(), Sign::Plus)?.variance;
        total += 0.5 * (minus + plus);
    }
    let mean = total / blocks.len() as f64;
    if !(eta > 0.0) {
        return Err(Error::NoPhaseInformation);
    }
    let cosh = ((mean - (1.0 - eta)) / eta).max(1.0);
    Ok(0.5 * cosh.acosh())
}

/// Phase sum in `[0, π]` of every block, from its no-click pulses.
pub fn recover_phases(records: &[PulseRecord], zeta: f64, eta: f64) -> Result<BTreeMap<usize, f64>> {
    let blocks = by_block(class_records(records, HeraldClass::None));
    let mut out = BTreeMap::new();
    for (block, pairs) in blocks {
        if pairs.len() < MIN_BLOCK_PULSES {
            return Err(Error::InsufficientData(format!(
                "block {block} has {} no-click pulses, need {MIN_BLOCK_PULSES}",
                pairs.len()
            )));
        }
        let v = empirical_variance(pairs, Sign::Minus)?.variance;
        out.insert(block, phase_from_variance(v, zeta, eta)?);
    }
    Ok(out)
}

/// Writes recovered phases into the records; blocks without one keep NaN.
pub fn annotate(records: &mut [PulseRecord], phases: &BTreeMap<usize, f64>) {
    for r in records {
        r.theta_sum = phases.get(&r.block_id).copied().unwrap_or(f64::NAN);
    }
}

/// One point per block and sign from the annotated records of a class.
pub fn block_curve(records: &[PulseRecord], class: HeraldClass) -> Result<VarianceCurve> {
    let mut blocks: BTreeMap<usize, (f64, Vec<(f64, f64)>)> = BTreeMap::new();
    for r in class_records(records, class) {
        blocks.entry(r.block_id).or_insert_with(|| (r.theta_sum, Vec::new())).1.push((r.x1, r.x2));
    }
    let mut points = Vec::new();
    for (block, (theta, pairs)) in blocks {
        if !theta.is_finite() {
            return Err(Error::PhaseMissing(block));
        }
        for sign in [Sign::Minus, Sign::Plus] {
            let v = empirical_variance(pairs.iter().copied(), sign)?;
            points.push(VariancePoint { theta_sum: theta, sign, variance: v.variance, stderr: v.stderr });
        }
    }
    Ok(VarianceCurve { points })
}

/// Records of one class pooled into equal-width bins of the annotated phase
/// over `[0, π]`; each point sits at the mean phase of its members.
pub fn binned_curve(records: &[PulseRecord], class: HeraldClass, bins: usize) -> Result<VarianceCurve> {
    let bins = bins.max(1);
    let mut pooled: Vec<(f64, Vec<(f64, f64)>)> = (0..bins).map(|_| (0.0, Vec::new())).collect();
    for r in class_records(records, class) {
        if !r.theta_sum.is_finite() {
            return Err(Error::PhaseMissing(r.block_id));
        }
        let t = r.theta_sum.clamp(0.0, PI);
        let k = ((t / PI * bins as f64) as usize).min(bins - 1);
        pooled[k].0 += t;
        pooled[k].1.push((r.x1, r.x2));
    }
    let mut points = Vec::new();
    for (sum, pairs) in pooled {
        if pairs.len() < 2 {
            continue;
        }
        let theta = sum / pairs.len() as f64;
        for sign in [Sign::Minus, Sign::Plus] {
            let v = empirical_variance(pairs.iter().copied(), sign)?;
            points.push(VariancePoint { theta_sum: theta, sign, variance: v.variance, stderr: v.stderr });
        }
    }
    Ok(VarianceCurve { points })
}

/// Annotated records of one class in the form used by the reconstruction,
/// optionally restricted to blocks of one parity.
pub fn tomography_records(records: &[PulseRecord], class: HeraldClass, parity: Option<usize>) -> Vec<TwoModeRecord> {
    class_records(records, class)
        .filter(|r| parity.is_none_or(|p| r.block_id % 2 == p))
        .map(|r| TwoModeRecord { x1: r.x1, x2: r.x2, theta_sum: r.theta_sum })
        .collect()
}

/// A measured quantity and its standard uncertainty, when one is available.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Measured {
    pub value: f64,
    pub uncertainty: Option<f64>,
}

impl Measured {
    pub fn new(value: f64, uncertainty: f64) -> Self {
        Self { value, uncertainty: Some(uncertainty.abs()) }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, uncertainty: None }
    }
}

/// Reconstruction of one herald class.
#[derive(Clone, Debug)]
pub struct ClassReconstruction {
    pub state: DensityOperator,
    pub log_negativity: Measured,
    pub alternate: Option<(usize, f64)>,
    pub iterations: usize,
    pub converged: bool,
    pub samples: usize,
}

fn reconstruct_class(records: &[PulseRecord], class: HeraldClass, opts: &AnalysisOptions) -> Result<ClassReconstruction> {
    let data = tomography_records(records, class, None);
    let r = maxlik_two_mode(&data, &opts.reconstruction)?;
    let e = log_negativity(&r.state)?;
    let uncertainty = if opts.split_half {
        // each half is binned like the full set so their spread reflects sampling only
        let half_opts = ReconstructionOptions {
            binning: match opts.reconstruction.binning {
                Binning::Auto if data.len() >= crate::tomography::AUTO_BINNING_THRESHOLD => Binning::MaxBins(DEFAULT_MAX_BINS),
                b => b,
            },
            ..opts.reconstruction
        };
        let mut halves = [0.0; 2];
        for (p, h) in halves.iter_mut().enumerate() {
            let part = tomography_records(records, class, Some(p));
            *h = log_negativity(&maxlik_two_mode(&part, &half_opts)?.state)?;
        }
        Some(0.5 * (halves[0] - halves[1]).abs())
    } else {
        None
    };
    let alternate = match opts.alternate_cutoff {
        Some(n) if n != opts.reconstruction.cutoff.n_max() => {
            let alt = ReconstructionOptions { cutoff: FockCutoff::new(n)?, ..opts.reconstruction };
            Some((n, log_negativity(&maxlik_two_mode(&data, &alt)?.state)?))
        }
        _ => None,
    };
    Ok(ClassReconstruction {
        state: r.state,
        log_negativity: Measured { value: e, uncertainty },
        alternate,
        iterations: r.iterations,
        converged: r.converged,
        samples: data.len(),
    })
}

/// Everything extracted from the pulse records of a run.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub loss: LossEstimate,
    pub zeta_calibration: f64,
    pub phases: BTreeMap<usize, f64>,
    pub no_click_curve: VarianceCurve,
    pub dual_curve: VarianceCurve,
    pub single_curve: VarianceCurve,
    pub initial_fit: ZetaFit,
    pub compensated_fit: ZetaFit,
    pub dual_fit: ZetaFit,
    pub initial: ClassReconstruction,
    pub dual: ClassReconstruction,
    pub single: ClassReconstruction,
}

impl Analysis {
    pub fn reconstruction(&self, class: HeraldClass) -> &ClassReconstruction {
        match class {
            HeraldClass::None => &self.initial,
            HeraldClass::ModeOneOnly => &self.single,
            HeraldClass::Both => &self.dual,
        }
    }
}

/// Runs the full analysis. `records` get their phase sums annotated.
pub fn analyze(config: &ExperimentConfig, records: &mut [PulseRecord], opts: &AnalysisOptions) -> Result<Analysis> {
    config.validate()?;
    let loss = calibrate_loss(records, &opts.reconstruction)?;
    let eta = loss.eta;
    let zeta_calibration = calibrate_zeta(records, eta)?;
    let phases = recover_phases(records, zeta_calibration, eta)?;
    annotate(records, &phases);

    let no_click_curve = block_curve(records, HeraldClass::None)?;
    let dual_curve = block_curve(records, HeraldClass::Both)?;
    let single_curve = block_curve(records, HeraldClass::ModeOneOnly)?;
    let initial_fit = fit_variance_curve(&no_click_curve, eta)?;
    let compensated_fit = fit_variance_curve(&no_click_curve, compensated_transmission(eta, config))?;
    let dual_fit = fit_variance_curve(&dual_curve, eta)?;

    Ok(Analysis {
        loss,
        zeta_calibration,
        phases,
        no_click_curve,
        dual_curve,
        single_curve,
        initial_fit,
        compensated_fit,
        dual_fit,
        initial: reconstruct_class(records, HeraldClass::None, opts)?,
        dual: reconstruct_class(records, HeraldClass::Both, opts)?,
        single: reconstruct_class(records, HeraldClass::ModeOneOnly, opts)?,
    })
}

/// Transmission with the tap loss divided out.
pub fn compensated_transmission(eta: f64, config: &ExperimentConfig) -> f64 {
    (eta / (1.0 - config.tap_transmissivity)).min(1.0)
}

/// Noise-free variance curve of a state: both signs at evenly spaced phases
/// over `[0, π]`, with no uncertainties.
pub fn exact_curve(rho: &DensityOperator, points: usize) -> Result<VarianceCurve> {
    let moments = crate::metrics::QuadratureMoments::of(rho)?;
    let mut out = Vec::new();
    for k in 0..points {
        let theta = PI * k as f64 / (points - 1).max(1) as f64;
        for sign in [Sign::Minus, Sign::Plus] {
            let phases = crate::homodyne::PhasePair::from_sum_difference(theta, 0.0);
            out.push(VariancePoint { theta_sum: theta, sign, variance: moments.correlated_variance(phases, sign), stderr: 0.0 });
        }
    }
    Ok(VarianceCurve { points: out })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RowKind {
    Initial,
    InitialCompensated,
    DualSubtracted,
    SingleSubtracted,
}

impl RowKind {
    pub const ALL: [RowKind; 4] = [RowKind::Initial, RowKind::InitialCompensated, RowKind::DualSubtracted, RowKind::SingleSubtracted];

    pub fn label(self) -> &'static str {
        match self {
            RowKind::Initial => "initial",
            RowKind::InitialCompensated => "initial, tap compensated",
            RowKind::DualSubtracted => "dual-subtracted",
            RowKind::SingleSubtracted => "single-subtracted",
        }
    }
}

/// Values predicted from the exact simulated states.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelValues {
    pub fitted_zeta: Option<f64>,
    pub squeezing_db: Option<f64>,
    pub log_negativity: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TableRow {
    pub kind: RowKind,
    pub fitted_zeta: Option<Measured>,
    pub squeezing_db: Option<Measured>,
    pub log_negativity: Option<Measured>,
    /// Log-negativity of the reconstruction at the alternate cutoff.
    pub log_negativity_alternate: Option<f64>,
    pub model: ModelValues,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TableOneReport {
    pub rows: Vec<TableRow>,
    pub reconstruction_cutoff: usize,
    pub alternate_cutoff: Option<usize>,
    pub transmission: LossEstimate,
    /// Transmission the calibration should recover.
    pub expected_transmission: f64,
    pub zeta_calibration: f64,
    /// Dual-subtracted over initial log-negativity, measured.
    pub log_negativity_ratio: Option<f64>,
    pub model_log_negativity_ratio: f64,
    /// `tanh ζ` after over before distillation, from the fits.
    pub distillation_gain: Option<f64>,
    pub herald_probabilities: [f64; 3],
    pub coincidence_rate_hz: f64,
}

/// Inputs of [`TableOneReport::build`]; every variant must be present.
#[derive(Clone, Copy, Debug, Default)]
pub struct ReportInputs<'a> {
    pub config: Option<&'a ExperimentConfig>,
    pub states: Option<&'a ConditionalStates>,
    pub analysis: Option<&'a Analysis>,
}

fn squeezing_from_fit(fit: &ZetaFit, eta: f64) -> Result<Measured> {
    let v = variance_model(fit.zeta, eta, 0.0, Sign::Minus);
    let dv = 2.0 * eta * (-2.0 * fit.zeta).exp() * fit.stderr;
    Ok(Measured::new(squeezing_db(v)?, 10.0 / LN_10 * dv / v))
}

fn model_row(rho: &DensityOperator, eta: Option<f64>) -> Result<ModelValues> {
    let fitted_zeta = match eta {
        Some(eta) => Some(fit_variance_curve(&exact_curve(rho, 13)?, eta)?.zeta),
        None => None,
    };
    let squeezing = match eta {
        Some(_) => Some(squeezing_db(min_correlated_variance(rho)?.variance)?),
        None => None,
    };
    Ok(ModelValues { fitted_zeta, squeezing_db: squeezing, log_negativity: log_negativity(rho)? })
}

impl TableOneReport {
    pub fn build(inputs: ReportInputs<'_>) -> Result<Self> {
        let config = inputs.config.ok_or(Error::MissingVariant("configuration"))?;
        let states = inputs.states.ok_or(Error::MissingVariant("model states"))?;
        let a = inputs.analysis.ok_or(Error::MissingVariant("analysis"))?;
        let eta = a.loss.eta;
        let eta_model = config.heralded_transmission();
        let eta_comp = compensated_transmission(eta, config);
        let eta_comp_model = compensated_transmission(eta_model, config);
        let with_alt = |r: &ClassReconstruction| r.alternate.map(|(_, e)| e);

        let rows = alloc::vec![
            TableRow {
                kind: RowKind::Initial,
                fitted_zeta: Some(Measured::new(a.initial_fit.zeta, a.initial_fit.stderr)),
                squeezing_db: Some(squeezing_from_fit(&a.initial_fit, eta)?),
                log_negativity: Some(a.initial.log_negativity),
                log_negativity_alternate: with_alt(&a.initial),
                model: model_row(&states.none, Some(eta_model))?,
            },
            TableRow {
                kind: RowKind::InitialCompensated,
                fitted_zeta: Some(Measured::new(a.compensated_fit.zeta, a.compensated_fit.stderr)),
                squeezing_db: Some(squeezing_from_fit(&a.compensated_fit, eta_comp)?),
                log_negativity: None,
                log_negativity_alternate: None,
                model: model_row(&states.compensated, Some(eta_comp_model))?,
            },
            TableRow {
                kind: RowKind::DualSubtracted,
                fitted_zeta: Some(Measured::new(a.dual_fit.zeta, a.dual_fit.stderr)),
                squeezing_db: Some(squeezing_from_fit(&a.dual_fit, eta)?),
                log_negativity: Some(a.dual.log_negativity),
                log_negativity_alternate: with_alt(&a.dual),
                model: model_row(&states.both, Some(eta_model))?,
            },
            TableRow {
                kind: RowKind::SingleSubtracted,
                fitted_zeta: None,
                squeezing_db: None,
                log_negativity: Some(a.single.log_negativity),
                log_negativity_alternate: with_alt(&a.single),
                model: model_row(&states.mode_one_only, None)?,
            },
        ];
        let initial_en = a.initial.log_negativity.value;
        let log_negativity_ratio = (initial_en > 0.0).then(|| a.dual.log_negativity.value / initial_en);
        let model_log_negativity_ratio = rows[2].model.log_negativity / rows[0].model.log_negativity;
        let distillation_gain = (a.initial_fit.zeta > 0.0).then(|| distillation_gain(a.initial_fit.zeta, a.dual_fit.zeta));
        Ok(Self {
            rows,
            reconstruction_cutoff: a.initial.state.cutoff().n_max(),
            alternate_cutoff: a.initial.alternate.map(|(n, _)| n),
            transmission: a.loss,
            expected_transmission: eta_model,
            zeta_calibration: a.zeta_calibration,
            log_negativity_ratio,
            model_log_negativity_ratio,
            distillation_gain,
            herald_probabilities: states.probabilities,
            coincidence_rate_hz: crate::experiment::coincidence_rate(&config.rate, config.tap_transmissivity, config.detector_efficiency),
        })
    }

    pub fn row(&self, kind: RowKind) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.kind == kind)
    }

    /// Aligned plain-text rendering.
    pub fn render_text(&self) -> String {
        fn cell(m: Option<Measured>, digits: usize) -> String {
            match m {
                Some(Measured { value, uncertainty: Some(u) }) => format!("{value:.digits$} ± {u:.digits$}"),
                Some(Measured { value, uncertainty: None }) => format!("{value:.digits$}"),
                None => String::from("N/A"),
            }
        }
        fn opt(v: Option<f64>, digits: usize) -> String {
            v.map_or_else(|| String::from("N/A"), |v| format!("{v:.digits$}"))
        }
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<26}{:>18}{:>20}{:>18}{:>12}{:>10}{:>10}{:>10}",
            "state", "fitted zeta", "max squeezing, dB", "log-negativity", "E_N alt", "model ζ", "model dB", "model E_N"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<26}{:>18}{:>20}{:>18}{:>12}{:>10}{:>10}{:>10}",
                r.kind.label(),
                cell(r.fitted_zeta, 3),
                cell(r.squeezing_db, 3),
                cell(r.log_negativity, 3),
                opt(r.log_negativity_alternate, 3),
                opt(r.model.fitted_zeta, 3),
                opt(r.model.squeezing_db, 3),
                format!("{:.3}", r.model.log_negativity),
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "reconstruction cutoff: {} (alternate: {})", self.reconstruction_cutoff, opt(self.alternate_cutoff.map(|n| n as f64), 0));
        let _ = writeln!(
            s,
            "calibrated transmission: {} (expected {:.4})",
            cell(Some(Measured { value: self.transmission.eta, uncertainty: self.transmission.stderr }), 4),
            self.expected_transmission
        );
        let _ = writeln!(s, "calibrated squeezing: {:.4}", self.zeta_calibration);
        let _ = writeln!(
            s,
            "log-negativity ratio dual/initial: {} (model {:.3})",
            opt(self.log_negativity_ratio, 3),
            self.model_log_negativity_ratio
        );
        let _ = writeln!(s, "distillation gain tanh ζ after/before: {}", opt(self.distillation_gain, 3));
        let p = self.herald_probabilities;
        let _ = writeln!(s, "herald probabilities: none {:.6}, mode 1 only {:.6}, both {:.6}", p[0], p[1], p[2]);
        let _ = writeln!(s, "expected coincidence rate: {:.1} Hz", self.coincidence_rate_hz);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::Simulator;

    fn run(config: &ExperimentConfig) -> (ConditionalStates, Vec<PulseRecord>) {
        let states = ConditionalStates::compute(config).unwrap();
        let sim = Simulator::new(config, &states).unwrap();
        let recs = sim.simulate().unwrap().into_iter().flat_map(|b| b.records).collect();
        (states, recs)
    }

    fn small() -> ExperimentConfig {
        ExperimentConfig { cutoff: 10, blocks: 24, pulses_per_block: 2000, samples_per_setting: 400, seed: 4, ..Default::default() }
    }

    #[test]
    fn zeta_calibration_is_phase_independent() {
        // lossy squeezed vacuum without taps: V- + V+ pins ζ at every phase
        let c = ExperimentConfig { tap_transmissivity: 0.0, ..small() };
        let states = ConditionalStates::compute(&ExperimentConfig { tap_transmissivity: 0.02, ..c.clone() }).unwrap();
        let sampler = crate::homodyne::QuadratureSampler::new(&states.compensated, Default::default()).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2);
        let mut recs = Vec::new();
        for b in 0..24 {
            let at = sampler.at_phases(crate::homodyne::PhasePair::from_sum_difference(c.scheduled_phase_sum(b), 0.3)).unwrap();
            for (i, q) in at.sample_n(4000, &mut rng).into_iter().enumerate() {
                recs.push(PulseRecord { block_id: b, pulse_index: i, click1: false, click2: false, theta_sum: f64::NAN, x1: q.x1, x2: q.x2 });
            }
        }
        let z = calibrate_zeta(&recs, 0.42).unwrap();
        assert!((z - 0.19).abs() < 0.01, "{z}");
    }

    #[test]
    fn annotate_and_curves() {
        let (_, mut recs) = run(&small());
        let mut phases = BTreeMap::new();
        for b in 0..24 {
            phases.insert(b, b as f64 * 0.1);
        }
        phases.remove(&5);
        annotate(&mut recs, &phases);
        assert!(recs.iter().filter(|r| r.block_id == 5).all(|r| r.theta_sum.is_nan()));
        assert!(matches!(block_curve(&recs, HeraldClass::None), Err(Error::PhaseMissing(5))));
        phases.insert(5, 0.5);
        annotate(&mut recs, &phases);
        let curve = block_curve(&recs, HeraldClass::Both).unwrap();
        assert_eq!(curve.points.len(), 48);
        let binned = binned_curve(&recs, HeraldClass::Both, 6).unwrap();
        assert!(binned.points.len() <= 12);
        assert!(binned.points.iter().all(|p| (0.0..=PI).contains(&p.theta_sum)));
        assert_eq!(tomography_records(&recs, HeraldClass::Both, Some(1)).len(), 12 * 400);
    }

    #[test]
    fn missing_inputs_are_reported() {
        let c = small();
        assert!(matches!(
            TableOneReport::build(ReportInputs { config: Some(&c), ..Default::default() }),
            Err(Error::MissingVariant(_))
        ));
        let (_, recs) = run(&c);
        let no_heralds: Vec<_> = recs.iter().copied().filter(|r| !r.click1).collect();
        let opts = AnalysisOptions::for_config(&c).unwrap();
        assert!(matches!(analyze(&c, &mut no_heralds.clone(), &opts), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn small_run_report_layout() {
        let c = small();
        let (states, mut recs) = run(&c);
        let opts = AnalysisOptions { alternate_cutoff: None, split_half: false, ..AnalysisOptions::for_config(&c).unwrap() };
        let a = analyze(&c, &mut recs, &opts).unwrap();
        assert!(recs.iter().all(|r| (0.0..=PI).contains(&r.theta_sum)));
        let report = TableOneReport::build(ReportInputs { config: Some(&c), states: Some(&states), analysis: Some(&a) }).unwrap();
        assert_eq!(report.rows.len(), 4);
        let kinds: Vec<_> = report.rows.iter().map(|r| r.kind).collect();
        assert_eq!(kinds, RowKind::ALL);
        let single = report.row(RowKind::SingleSubtracted).unwrap();
        assert!(single.fitted_zeta.is_none() && single.squeezing_db.is_none());
        for r in &report.rows {
            for m in [r.fitted_zeta, r.squeezing_db, r.log_negativity].into_iter().flatten() {
                assert!(m.uncertainty.is_none_or(|u| u >= 0.0));
            }
        }
        let text = report.render_text();
        let single_line = text.lines().find(|l| l.starts_with("single-subtracted")).unwrap();
        assert_eq!(single_line.matches("N/A").count(), 5);
        assert!(text.lines().nth(1).unwrap().starts_with("initial"));
        assert!((report.coincidence_rate_hz - 132.4).abs() < 0.1);
    }

    #[test]
    fn squeezing_uncertainty_propagates() {
        let fit = ZetaFit { zeta: 0.2, stderr: 0.01, chi2: 1.0, dof: 1, unit_weights: false };
        let m = squeezing_from_fit(&fit, 0.5).unwrap();
        let db = |z: f64| squeezing_db(variance_model(z, 0.5, 0.0, Sign::Minus)).unwrap();
        let fd = (db(0.2 + 1e-6) - db(0.2 - 1e-6)) / 2e-6 * 0.01;
        assert!((m.uncertainty.unwrap() - fd.abs()).abs() < 1e-8);
        assert!((m.value - db(0.2)).abs() < 1e-12);
    }
}
