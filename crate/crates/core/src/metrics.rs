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


//! Entanglement and squeezing figures of merit.

use alloc::vec::Vec;
use core::f64::consts::{LN_2, TAU};

#[allow(unused_imports)] // unused when a dependent links std
use num_traits::Float;

use crate::fock::{DensityOperator, ModeCount};
use crate::homodyne::{PhasePair, Sign};
use crate::linalg::{self, CMatrix};
use crate::{Error, Result, C64};

/// Eigenvalues of the partial transpose closer to zero than this are not
/// counted as negative.
pub const NEGATIVITY_ZERO_TOLERANCE: f64 = 1e-9;

fn require_two_modes(rho: &DensityOperator) -> Result<()> {
    match rho.mode_count() {
        ModeCount::Two => Ok(()),
        ModeCount::One => Err(Error::WrongModeCount { expected: 2 }),
    }
}

/// Transpose on the second mode:
/// `⟨m1, m2|ρ^Γ|n1, n2⟩ = ⟨m1, n2|ρ|n1, m2⟩`.
pub fn partial_transpose(rho: &DensityOperator) -> Result<CMatrix> {
    require_two_modes(rho)?;
    let c = rho.cutoff();
    let m = rho.matrix();
    Ok(CMatrix::from_fn(rho.dim(), |row, col| {
        let (m1, m2) = c.photon_numbers(row);
        let (n1, n2) = c.photon_numbers(col);
        m[(c.index(m1, n2), c.index(n1, m2))]
    }))
}

/// Sum of the magnitudes of the negative partial-transpose eigenvalues.
pub fn negativity(rho: &DensityOperator) -> Result<f64> {
    let pt = partial_transpose(rho)?;
    let values = linalg::eigvalsh(&pt)?;
    Ok(values.iter().filter(|&&l| l < -NEGATIVITY_ZERO_TOLERANCE).map(|l| -l).sum())
}

/// `log2(1 + 2N)`.
pub fn log_negativity_from_negativity(negativity: f64) -> f64 {
    (1.0 + 2.0 * negativity).ln() / LN_2
}

pub fn log_negativity(rho: &DensityOperator) -> Result<f64> {
    negativity(rho).map(log_negativity_from_negativity)
}

/// `-10 log10(V)` for a variance normalized to the double-vacuum level.
pub fn squeezing_db(min_variance: f64) -> Result<f64> {
    if min_variance > 0.0 && min_variance.is_finite() {
        Ok(-10.0 * min_variance.log10())
    } else {
        Err(Error::InvalidParameter { name: "min_variance", value: min_variance })
    }
}

/// First and second ladder moments of a two-mode state, enough to evaluate
/// any quadrature variance of `x1(θ1) ∓ x2(θ2)`.
///
/// The quadrature measured at phase θ is `(a e^{-iθ} + a† e^{iθ})/√2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureMoments {
    pub a: [C64; 2],
    pub a_sq: [C64; 2],
    pub n: [f64; 2],
    /// `⟨a1 a2⟩`
    pub a1_a2: C64,
    /// `⟨a1 a2†⟩`
    pub a1_a2_dag: C64,
}

impl QuadratureMoments {
    pub fn of(rho: &DensityOperator) -> Result<Self> {
        require_two_modes(rho)?;
        let c = rho.cutoff();
        let d = c.dim();
        let m = rho.matrix();
        let sqrt = |k: usize| (k as f64).sqrt();
        let zero = C64::new(0.0, 0.0);
        let mut out = QuadratureMoments { a: [zero; 2], a_sq: [zero; 2], n: [0.0; 2], a1_a2: zero, a1_a2_dag: zero };
        // ⟨O⟩ = Σ ⟨k|ρ|j⟩⟨j|O|k⟩ for ladder operators with a single nonzero ⟨j|O|k⟩ per k
        for n1 in 0..d {
            for n2 in 0..d {
                let k = c.index(n1, n2);
                let add = |j1: usize, j2: usize, coef: f64| -> C64 { m[(k, c.index(j1, j2))] * coef };
                out.n[0] += m[(k, k)].re * n1 as f64;
                out.n[1] += m[(k, k)].re * n2 as f64;
                if n1 >= 1 {
                    out.a[0] += add(n1 - 1, n2, sqrt(n1));
                }
                if n2 >= 1 {
                    out.a[1] += add(n1, n2 - 1, sqrt(n2));
                }
                if n1 >= 2 {
                    out.a_sq[0] += add(n1 - 2, n2, sqrt(n1) * sqrt(n1 - 1));
                }
                if n2 >= 2 {
                    out.a_sq[1] += add(n1, n2 - 2, sqrt(n2) * sqrt(n2 - 1));
                }
                if n1 >= 1 && n2 >= 1 {
                    out.a1_a2 += add(n1 - 1, n2 - 1, sqrt(n1) * sqrt(n2));
                }
                if n1 >= 1 && n2 + 1 < d {
                    out.a1_a2_dag += add(n1 - 1, n2 + 1, sqrt(n1) * sqrt(n2 + 1));
                }
            }
        }
        Ok(out)
    }

    fn mean(&self, mode: usize, theta: f64) -> f64 {
        2f64.sqrt() * (self.a[mode] * C64::from_polar(1.0, -theta)).re
    }

    fn second(&self, mode: usize, theta: f64) -> f64 {
        (self.a_sq[mode] * C64::from_polar(1.0, -2.0 * theta)).re + self.n[mode] + 0.5
    }

    /// Variance of `x1(θ1) ∓ x2(θ2)`; the double vacuum gives 1.
    pub fn correlated_variance(&self, phases: PhasePair, sign: Sign) -> f64 {
        let (t1, t2) = (phases.theta1, phases.theta2);
        let cross = (self.a1_a2 * C64::from_polar(1.0, -(t1 + t2))).re
            + (self.a1_a2_dag * C64::from_polar(1.0, -(t1 - t2))).re;
        let s = match sign {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        };
        let second = self.second(0, t1) + self.second(1, t2) + 2.0 * s * cross;
        let mean = self.mean(0, t1) + s * self.mean(1, t2);
        second - mean * mean
    }

    /// Smallest `x1 - x2` variance over both local oscillator phases. The sum
    /// quadrature needs no separate search: shifting θ2 by π swaps the signs.
    pub fn min_correlated_variance(&self) -> MinimumVariance {
        let f = |t1: f64, t2: f64| self.correlated_variance(PhasePair::new(t1, t2), Sign::Minus);
        const GRID: usize = 48;
        let h = TAU / GRID as f64;
        let (mut t1, mut t2, mut best) = (0.0, 0.0, f64::INFINITY);
        for i in 0..GRID {
            for j in 0..GRID {
                let v = f(i as f64 * h, j as f64 * h);
                if v < best {
                    (t1, t2, best) = (i as f64 * h, j as f64 * h, v);
                }
            }
        }
        let mut width = h;
        for _ in 0..40 {
            t1 = golden_min(|t| f(t, t2), t1 - width, t1 + width);
            t2 = golden_min(|t| f(t1, t), t2 - width, t2 + width);
            width = (width * 0.7).max(1e-9);
        }
        let phases = PhasePair::new(t1, t2);
        MinimumVariance { variance: self.correlated_variance(phases, Sign::Minus), phases }
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-12 {
        if fc < fd {
            (b, d, fd) = (d, c, fc);
            c = b - r * (b - a);
            fc = f(c);
        } else {
            (a, c, fc) = (c, d, fd);
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimumVariance {
    pub variance: f64,
    /// Phases (for `x1 - x2`) attaining the minimum.
    pub phases: PhasePair,
}

/// Smallest correlated variance of a two-mode state over all phase settings.
pub fn min_correlated_variance(rho: &DensityOperator) -> Result<MinimumVariance> {
    Ok(QuadratureMoments::of(rho)?.min_correlated_variance())
}

/// Figures of merit of one state.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub log_negativity: f64,
    pub negativity: f64,
    pub min_variance: f64,
    pub squeezing_db: f64,
    pub fitted_zeta: Option<f64>,
}

impl MetricsReport {
    pub fn of(rho: &DensityOperator) -> Result<Self> {
        let negativity = negativity(rho)?;
        let min_variance = min_correlated_variance(rho)?.variance;
        Ok(MetricsReport {
            log_negativity: log_negativity_from_negativity(negativity),
            negativity,
            min_variance,
            squeezing_db: squeezing_db(min_variance)?,
            fitted_zeta: None,
        })
    }

    pub fn with_fitted_zeta(mut self, zeta: f64) -> Self {
        self.fitted_zeta = Some(zeta);
        self
    }
}

/// Negativities of a batch of states, e.g. for a loss sweep.
pub fn log_negativities(states: &[DensityOperator]) -> Result<Vec<f64>> {
    states.iter().map(log_negativity).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{apply_loss, LossSpec};
    use crate::fock::{tmsv_state, FockCutoff, Mode, PureState};
    use crate::homodyne::variance_model;
    use proptest::prelude::*;

    fn cut(n: usize) -> FockCutoff {
        FockCutoff::new(n).unwrap()
    }

    fn bell() -> DensityOperator {
        let c = cut(1);
        let s = 0.5f64.sqrt();
        let mut amps = alloc::vec![C64::new(0.0, 0.0); 4];
        amps[c.index(0, 0)] = C64::new(s, 0.0);
        amps[c.index(1, 1)] = C64::new(s, 0.0);
        PureState::from_amplitudes(amps, c).unwrap().to_density().unwrap()
    }

    fn single(pops: &[f64], n_max: usize) -> DensityOperator {
        DensityOperator::single_mode_diagonal(pops, cut(n_max)).unwrap()
    }

    #[test]
    fn bell_state_negativity() {
        let rho = bell();
        let values = linalg::eigvalsh(&partial_transpose(&rho).unwrap()).unwrap();
        assert!((values[0] + 0.5).abs() < 1e-12);
        assert!((log_negativity(&rho).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn partial_transpose_is_an_involution_preserving_trace() {
        let rho = apply_loss(&tmsv_state(0.3, cut(5)).unwrap().to_density().unwrap(), &LossSpec::per_mode(0.7, 0.5).unwrap()).unwrap();
        let pt = partial_transpose(&rho).unwrap();
        assert!(pt.hermitian_deviation() < 1e-15);
        assert!((pt.trace().re - 1.0).abs() < 1e-12);
        let back = DensityOperator::new(pt, ModeCount::Two, rho.cutoff()).unwrap();
        assert_eq!(partial_transpose(&back).unwrap(), *rho.matrix());
    }

    #[test]
    fn single_mode_input_rejected() {
        assert!(matches!(negativity(&single(&[1.0, 0.0], 1)), Err(Error::WrongModeCount { .. })));
    }

    #[test]
    fn product_states_and_mixtures_are_ppt() {
        let coherent_like = PureState::from_amplitudes(
            alloc::vec![C64::new(0.8, 0.0), C64::new(0.0, 0.6), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            cut(1),
        )
        .unwrap()
        .to_density()
        .unwrap()
        .reduced(Mode::First)
        .unwrap();
        let thermal = single(&[0.7, 0.3], 1);
        let a = DensityOperator::tensor(&coherent_like, &thermal).unwrap();
        let b = DensityOperator::tensor(&thermal, &coherent_like).unwrap();
        for rho in [&a, &b] {
            assert!(negativity(rho).unwrap().abs() < 1e-9);
            assert!(linalg::eigvalsh(&partial_transpose(rho).unwrap()).unwrap()[0] > -1e-12);
        }
        let mix = DensityOperator::mixture(&[(0.35, &a), (0.65, &b)]).unwrap();
        assert!(log_negativity(&mix).unwrap().abs() < 1e-9);
    }

    #[test]
    fn pure_tmsv_matches_closed_form() {
        for zeta in [0.1, 0.19, 0.3, 0.358] {
            let rho = tmsv_state(zeta, cut(15)).unwrap().to_density().unwrap();
            let e = log_negativity(&rho).unwrap();
            assert!((e - 2.0 * zeta / LN_2).abs() < 1e-4, "zeta {zeta}: {e}");
        }
        let e = log_negativity(&tmsv_state(0.19, cut(15)).unwrap().to_density().unwrap()).unwrap();
        assert!((e - 0.5482).abs() < 1e-4);
    }

    #[test]
    fn dual_subtracted_tmsv_matches_closed_form() {
        let zeta: f64 = 0.19;
        let l = zeta.tanh();
        let rho = tmsv_state(zeta, cut(15))
            .unwrap()
            .annihilate(Mode::First)
            .annihilate(Mode::Second)
            .to_density()
            .unwrap();
        let expected = ((1.0 + l).powi(3) / ((1.0 - l) * (1.0 + l * l))).log2();
        assert!((log_negativity(&rho).unwrap() - expected).abs() < 1e-3);
        assert!((expected - 0.9948).abs() < 1e-4);
    }

    #[test]
    fn negativity_decreases_with_loss() {
        let rho = tmsv_state(0.19, cut(12)).unwrap().to_density().unwrap();
        let mut last = f64::INFINITY;
        for eta in [1.0, 0.8, 0.6, 0.42, 0.2] {
            let e = log_negativity(&apply_loss(&rho, &LossSpec::uniform(eta).unwrap()).unwrap()).unwrap();
            assert!(e <= last + 1e-12, "eta {eta}");
            last = e;
        }
    }

    #[test]
    fn squeezing_db_values() {
        assert_eq!(squeezing_db(1.0).unwrap(), 0.0);
        assert!((squeezing_db(0.86722).unwrap() - 0.619).abs() < 1e-3);
        assert!(squeezing_db(0.0).is_err());
        assert!(squeezing_db(-0.2).is_err());
    }

    #[test]
    fn vacuum_variance_is_one_at_every_phase() {
        let m = QuadratureMoments::of(&PureState::vacuum(cut(3)).to_density().unwrap()).unwrap();
        for &(t1, t2) in &[(0.0, 0.0), (0.4, 2.2), (5.0, 1.0)] {
            for sign in [Sign::Minus, Sign::Plus] {
                assert!((m.correlated_variance(PhasePair::new(t1, t2), sign) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn lossy_tmsv_minimum_matches_model() {
        let rho = apply_loss(&tmsv_state(0.19, cut(15)).unwrap().to_density().unwrap(), &LossSpec::uniform(0.42).unwrap()).unwrap();
        let min = min_correlated_variance(&rho).unwrap();
        assert!((min.variance - 0.867_221_791_869_189_4).abs() < 1e-9, "{}", min.variance);
        assert!((min.variance - 0.86722).abs() < 1e-5);
        let m = QuadratureMoments::of(&rho).unwrap();
        for s in [0.0, 0.9, 2.0, 3.1] {
            for sign in [Sign::Minus, Sign::Plus] {
                let v = m.correlated_variance(PhasePair::from_sum_difference(s, 0.77), sign);
                assert!((v - variance_model(0.19, 0.42, s, sign)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn displaced_means_are_subtracted() {
        // (|0⟩ + |1⟩)/√2 on mode 1, vacuum on mode 2: ⟨x1⟩ = 1/√2 at θ1 = 0
        let c = cut(2);
        let mut amps = alloc::vec![C64::new(0.0, 0.0); 9];
        amps[c.index(0, 0)] = C64::new(0.5f64.sqrt(), 0.0);
        amps[c.index(1, 0)] = C64::new(0.5f64.sqrt(), 0.0);
        let rho = PureState::from_amplitudes(amps, c).unwrap().to_density().unwrap();
        let m = QuadratureMoments::of(&rho).unwrap();
        // ⟨x1²⟩ = 1/2 + ⟨n⟩ = 1, ⟨x1⟩² = 1/2, plus vacuum 1/2 on mode 2
        assert!((m.correlated_variance(PhasePair::new(0.0, 0.0), Sign::Minus) - 1.0).abs() < 1e-14);
        // at θ1 = π/2 the mean vanishes
        let v = m.correlated_variance(PhasePair::new(core::f64::consts::FRAC_PI_2, 0.0), Sign::Plus);
        assert!((v - 1.5).abs() < 1e-14);
    }

    #[test]
    fn report_fields_are_consistent() {
        let rho = apply_loss(&tmsv_state(0.25, cut(10)).unwrap().to_density().unwrap(), &LossSpec::uniform(0.6).unwrap()).unwrap();
        let r = MetricsReport::of(&rho).unwrap().with_fitted_zeta(0.25);
        assert!((r.log_negativity - log_negativity_from_negativity(r.negativity)).abs() < 1e-12);
        assert!((r.squeezing_db + 10.0 * r.min_variance.log10()).abs() < 1e-12);
        assert_eq!(r.fitted_zeta, Some(0.25));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn tmsv_negativity_matches_schmidt_sum(zeta in 0.0f64..0.4, eta in 0.05f64..1.0) {
            let rho = tmsv_state(zeta, cut(8)).unwrap().to_density().unwrap();
            let lossy = apply_loss(&rho, &LossSpec::uniform(eta).unwrap()).unwrap();
            let e = log_negativity(&lossy).unwrap();
            prop_assert!(e >= 0.0);
            prop_assert!(e <= log_negativity(&rho).unwrap() + 1e-12);
            let m = min_correlated_variance(&lossy).unwrap().variance;
            prop_assert!((m - variance_model(zeta, eta, 0.0, Sign::Minus)).abs() < 1e-6);
        }
    }
}
