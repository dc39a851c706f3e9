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


//! Repeated-fit calibration of the squeezing fit and block phase recovery.

use std::f64::consts::TAU;

use fockdistill_core::channels::{apply_loss, LossSpec};
use fockdistill_core::fit::{fit_variance_curve, recover_block_phase};
use fockdistill_core::fock::{tmsv_state, DensityOperator, FockCutoff};
use fockdistill_core::homodyne::{
    empirical_variance, PhasePair, QuadratureGrid, QuadratureSampler, Sign, VarianceCurve, VariancePoint,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lossy_tmsv(zeta: f64, eta: f64) -> DensityOperator {
    let rho = tmsv_state(zeta, FockCutoff::new(15).unwrap()).unwrap().to_density().unwrap();
    apply_loss(&rho, &LossSpec::uniform(eta).unwrap()).unwrap()
}

#[test]
fn fitted_zeta_is_within_three_sigma_over_twenty_seeds() {
    let sampler = QuadratureSampler::new(&lossy_tmsv(0.19, 0.42), QuadratureGrid::default()).unwrap();
    let mut pulls = Vec::new();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::new();
        for k in 0..12 {
            let sum = TAU * k as f64 / 12.0;
            let samples = sampler.at_phases(PhasePair::from_sum_difference(sum, 0.5)).unwrap().sample_n(10_000, &mut rng);
            let v = empirical_variance(samples.iter().map(|q| (q.x1, q.x2)), Sign::Minus).unwrap();
            points.push(VariancePoint { theta_sum: sum, sign: Sign::Minus, variance: v.variance, stderr: v.stderr });
        }
        let fit = fit_variance_curve(&VarianceCurve { points }, 0.42).unwrap();
        let pull = (fit.zeta - 0.19) / fit.stderr;
        assert!(pull.abs() < 3.0, "seed {seed}: zeta {} ± {}", fit.zeta, fit.stderr);
        pulls.push(pull);
    }
    // the quoted uncertainty is neither wildly small nor wildly large
    let rms = (pulls.iter().map(|p| p * p).sum::<f64>() / pulls.len() as f64).sqrt();
    assert!(rms > 0.5 && rms < 1.6, "pull rms {rms}");
}

#[test]
fn block_phase_is_recovered_within_a_tenth_of_a_radian() {
    let (zeta, eta) = (0.5, 0.9);
    let sampler = QuadratureSampler::new(&lossy_tmsv(zeta, eta), QuadratureGrid::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for sum in [0.3, 1.0, 2.0] {
        let block = sampler.at_phases(PhasePair::from_sum_difference(sum, 2.2)).unwrap().sample_n(9500, &mut rng);
        let theta = recover_block_phase(block.iter().map(|q| (q.x1, q.x2)).collect::<Vec<_>>(), zeta, eta).unwrap();
        assert!((theta - sum).abs() < 0.1, "{sum}: recovered {theta}");
    }
}
