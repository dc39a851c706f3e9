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


//! Fitting the lossy two-mode squeezed vacuum variance model to measured
//! curves, and recovering the local oscillator phase sum of a block from its
//! difference variance.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[allow(unused_imports)] // unused when a dependent links std
use num_traits::Float;

use crate::homodyne::{empirical_variance, fold_angle, variance_model, variance_model_dzeta, Sign, VarianceCurve};
use crate::{error::check_unit_interval, Error, Result};

pub const MIN_FIT_POINTS: usize = 5;
/// Phase recovery needs at least this many pulses in a block.
pub const MIN_BLOCK_PULSES: usize = 100;
/// Upper end of the initial ζ scan.
const ZETA_SCAN_MAX: f64 = 2.0;
const ZETA_SCAN_STEPS: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZetaFit {
    pub zeta: f64,
    /// One standard deviation from the curvature of χ².
    pub stderr: f64,
    pub chi2: f64,
    pub dof: usize,
    /// True when some point had no usable standard error; the fit then used
    /// unit weights and scaled `stderr` by the residual spread.
    pub unit_weights: bool,
}

impl ZetaFit {
    pub fn reduced_chi2(&self) -> f64 {
        self.chi2 / self.dof as f64
    }
}

/// The phase at which a point's variance follows the minus branch: the plus
/// branch at θ equals the minus branch at θ + π.
fn effective_phase(theta_sum: f64, sign: Sign) -> f64 {
    match sign {
        Sign::Minus => fold_angle(theta_sum),
        Sign::Plus => fold_angle(theta_sum + PI),
    }
}

/// Length of the shortest arc containing every angle.
fn circular_span(angles: &mut [f64]) -> f64 {
    angles.sort_by(f64::total_cmp);
    let n = angles.len();
    let mut largest_gap = angles[0] + TAU - angles[n - 1];
    for w in angles.windows(2) {
        largest_gap = largest_gap.max(w[1] - w[0]);
    }
    TAU - largest_gap
}

/// Weighted least-squares fit of ζ with η fixed.
///
/// Requires [`MIN_FIT_POINTS`] points whose effective phases span at least
/// half a turn. A curve with no phase spread at all fails with
/// [`Error::DegenerateCurve`], one with too little with
/// [`Error::InsufficientData`].
pub fn fit_variance_curve(curve: &VarianceCurve, eta: f64) -> Result<ZetaFit> {
    let eta = check_unit_interval("eta", eta)?;
    if eta == 0.0 {
        return Err(Error::NoPhaseInformation);
    }
    let pts = &curve.points;
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!("{} curve points, need {MIN_FIT_POINTS}", pts.len())));
    }
    if let Some(p) = pts.iter().find(|p| !(p.variance.is_finite() && p.theta_sum.is_finite())) {
        return Err(Error::InvalidParameter { name: "variance", value: p.variance });
    }
    let mut phases: Vec<f64> = pts.iter().map(|p| effective_phase(p.theta_sum, p.sign)).collect();
    let span = circular_span(&mut phases);
    if span < 1e-12 {
        return Err(Error::DegenerateCurve("all points share one phase".into()));
    }
    if span < PI - 1e-9 {
        return Err(Error::InsufficientData(format!("phase coverage {span:.3} rad, need half a turn")));
    }

    let unit_weights = pts.iter().any(|p| !(p.stderr > 0.0));
    let weights: Vec<f64> = pts.iter().map(|p| if unit_weights { 1.0 } else { 1.0 / (p.stderr * p.stderr) }).collect();
    let chi2 = |zeta: f64| -> f64 {
        pts.iter()
            .zip(&weights)
            .map(|(p, w)| w * (p.variance - variance_model(zeta, eta, p.theta_sum, p.sign)).powi(2))
            .sum()
    };

    let mut zeta = 0.0;
    let mut best = f64::INFINITY;
    for k in 0..=ZETA_SCAN_STEPS {
        let z = ZETA_SCAN_MAX * k as f64 / ZETA_SCAN_STEPS as f64;
        let c = chi2(z);
        if c < best {
            (zeta, best) = (z, c);
        }
    }
    // Gauss-Newton polish from the best scan point
    for _ in 0..100 {
        let (mut num, mut den) = (0.0, 0.0);
        for (p, w) in pts.iter().zip(&weights) {
            let r = p.variance - variance_model(zeta, eta, p.theta_sum, p.sign);
            let j = variance_model_dzeta(zeta, eta, p.theta_sum, p.sign);
            num += w * j * r;
            den += w * j * j;
        }
        if !(den > 0.0) {
            break;
        }
        let next = (zeta + num / den).max(0.0);
        if chi2(next) > chi2(zeta) {
            break;
        }
        let done = (next - zeta).abs() <= 1e-15 * zeta.max(1.0);
        zeta = next;
        if done {
            break;
        }
    }

    let information: f64 = pts
        .iter()
        .zip(&weights)
        .map(|(p, w)| w * variance_model_dzeta(zeta, eta, p.theta_sum, p.sign).powi(2))
        .sum();
    let dof = pts.len() - 1;
    let chi2 = chi2(zeta);
    let mut stderr = if information > 0.0 { information.sqrt().recip() } else { f64::INFINITY };
    if unit_weights {
        stderr *= (chi2 / dof as f64).sqrt();
    }
    Ok(ZetaFit { zeta, stderr, chi2, dof, unit_weights })
}

/// Phase sum in `[0, π]` implied by a difference variance, by inverting the
/// variance model. Values outside the model's range clip to 0 or π.
pub fn phase_from_variance(v_minus: f64, zeta: f64, eta: f64) -> Result<f64> {
    let eta = check_unit_interval("eta", eta)?;
    if !(zeta >= 0.0 && zeta.is_finite()) {
        return Err(Error::InvalidParameter { name: "zeta", value: zeta });
    }
    let s = (2.0 * zeta).sinh();
    if zeta == 0.0 || eta == 0.0 || s == 0.0 {
        return Err(Error::NoPhaseInformation);
    }
    let c = ((2.0 * zeta).cosh() + (1.0 - eta) / eta - v_minus / eta) / s;
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Phase sum of one block of quadrature pairs, from its `x1 - x2` variance.
pub fn recover_block_phase<I>(pairs: I, zeta: f64, eta: f64) -> Result<f64>
where
    I: IntoIterator<Item = (f64, f64)>,
    I::IntoIter: ExactSizeIterator,
{
    let pairs = pairs.into_iter();
    if pairs.len() < MIN_BLOCK_PULSES {
        return Err(Error::InsufficientData(format!("{} pulses in block, need {MIN_BLOCK_PULSES}", pairs.len())));
    }
    let v = empirical_variance(pairs, Sign::Minus)?;
    phase_from_variance(v.variance, zeta, eta)
}

/// Ratio of effective `λ = tanh ζ` after and before distillation.
pub fn distillation_gain(zeta_before: f64, zeta_after: f64) -> f64 {
    zeta_after.tanh() / zeta_before.tanh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homodyne::VariancePoint;
    use alloc::vec;

    fn model_curve(zeta: f64, eta: f64, thetas: &[f64], sign: Sign) -> VarianceCurve {
        VarianceCurve {
            points: thetas
                .iter()
                .map(|&t| {
                    let v = variance_model(zeta, eta, t, sign);
                    VariancePoint { theta_sum: t, sign, variance: v, stderr: 0.01 * v }
                })
                .collect(),
        }
    }

    fn grid(n: usize, span: f64) -> Vec<f64> {
        (0..n).map(|k| span * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn noiseless_curve_recovers_zeta() {
        for sign in [Sign::Minus, Sign::Plus] {
            let f = fit_variance_curve(&model_curve(0.19, 0.42, &grid(12, TAU * 11.0 / 12.0), sign), 0.42).unwrap();
            assert!((f.zeta - 0.19).abs() < 1e-6, "{}", f.zeta);
            assert!(f.chi2 < 1e-12);
            assert_eq!(f.dof, 11);
            assert!(!f.unit_weights);
        }
        // a curve of both branches over a half turn
        let mut curve = model_curve(0.358, 0.42, &grid(6, PI), Sign::Minus);
        curve.points.extend(model_curve(0.358, 0.42, &grid(6, PI), Sign::Plus).points);
        assert!((fit_variance_curve(&curve, 0.42).unwrap().zeta - 0.358).abs() < 1e-6);
    }

    #[test]
    fn stderr_matches_fisher_information() {
        let curve = model_curve(0.3, 0.6, &grid(8, PI), Sign::Minus);
        let f = fit_variance_curve(&curve, 0.6).unwrap();
        let info: f64 = curve
            .points
            .iter()
            .map(|p| (variance_model_dzeta(0.3, 0.6, p.theta_sum, p.sign) / p.stderr).powi(2))
            .sum();
        assert!((f.stderr - info.sqrt().recip()).abs() < 1e-9);
    }

    #[test]
    fn zero_stderr_falls_back_to_unit_weights() {
        let mut curve = model_curve(0.25, 0.5, &grid(10, PI), Sign::Minus);
        for (k, p) in curve.points.iter_mut().enumerate() {
            p.stderr = 0.0;
            p.variance += if k % 2 == 0 { 0.01 } else { -0.01 };
        }
        let f = fit_variance_curve(&curve, 0.5).unwrap();
        assert!(f.unit_weights);
        assert!(f.stderr.is_finite() && f.stderr > 0.0);
        assert!((f.zeta - 0.25).abs() < 0.02);
    }

    #[test]
    fn coverage_guards() {
        let same = model_curve(0.2, 0.4, &[1.0; 6], Sign::Minus);
        assert!(matches!(fit_variance_curve(&same, 0.4), Err(Error::DegenerateCurve(_))));
        let narrow = model_curve(0.2, 0.4, &grid(8, 2.0), Sign::Minus);
        assert!(matches!(fit_variance_curve(&narrow, 0.4), Err(Error::InsufficientData(_))));
        let few = model_curve(0.2, 0.4, &grid(4, PI), Sign::Minus);
        assert!(matches!(fit_variance_curve(&few, 0.4), Err(Error::InsufficientData(_))));
        // two distinct phases half a turn apart cover the requirement
        let mut pair = model_curve(0.2, 0.4, &[0.0, 0.0, 0.0], Sign::Minus);
        pair.points.extend(model_curve(0.2, 0.4, &[PI, PI], Sign::Minus).points);
        assert!(fit_variance_curve(&pair, 0.4).is_ok());
        // plus at θ counts as minus at θ + π
        let mut mixed = model_curve(0.2, 0.4, &[0.1, 0.1, 0.1], Sign::Minus);
        mixed.points.extend(model_curve(0.2, 0.4, &[0.1, 0.1], Sign::Plus).points);
        assert!(fit_variance_curve(&mixed, 0.4).is_ok());
    }

    #[test]
    fn circular_span_wraps() {
        assert!((circular_span(&mut [6.0, 0.2, 0.1]) - (0.2 + TAU - 6.0)).abs() < 1e-12);
        assert_eq!(circular_span(&mut [1.0]), 0.0);
    }

    #[test]
    fn phase_inversion_endpoints() {
        let (z, e) = (0.19, 0.42);
        let vmin = variance_model(z, e, 0.0, Sign::Minus);
        let vmax = variance_model(z, e, PI, Sign::Minus);
        assert!(phase_from_variance(vmin, z, e).unwrap().abs() < 1e-6);
        assert!((phase_from_variance(vmax, z, e).unwrap() - PI).abs() < 1e-6);
        assert_eq!(phase_from_variance(vmin - 0.1, z, e).unwrap(), 0.0);
        assert_eq!(phase_from_variance(vmax + 0.1, z, e).unwrap(), PI);
        for t in [0.3, 1.0, 2.0] {
            let v = variance_model(z, e, t, Sign::Minus);
            assert!((phase_from_variance(v, z, e).unwrap() - t).abs() < 1e-9);
        }
        assert!(matches!(phase_from_variance(1.0, 0.0, e), Err(Error::NoPhaseInformation)));
    }

    #[test]
    fn short_blocks_rejected() {
        let pairs = vec![(0.1, 0.2); 99];
        assert!(matches!(recover_block_phase(pairs, 0.2, 0.5), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn gain_of_ideal_small_squeezing_subtraction() {
        assert!((distillation_gain(0.19, 0.19) - 1.0).abs() < 1e-15);
        let l: f64 = 0.01;
        assert!((distillation_gain(l.atanh(), (2.0 * l).atanh()) - 2.0).abs() < 1e-12);
    }
}
