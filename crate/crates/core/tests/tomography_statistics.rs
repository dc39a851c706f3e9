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


//! Statistical behaviour of the maximum-likelihood reconstruction.

use std::f64::consts::TAU;

use fockdistill_core::channels::{apply_loss, LossSpec};
use fockdistill_core::fock::{fidelity, tmsv_state, DensityOperator, FockCutoff, Mode};
use fockdistill_core::metrics::log_negativity;
use fockdistill_core::tomography::{
    maxlik_single_mode, maxlik_two_mode, ReconstructionOptions, SingleModeRecord, TwoModeRecord,
};
use fockdistill_core::homodyne::{PhasePair, QuadratureGrid, QuadratureSampler};
use fockdistill_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sampled(rho: &DensityOperator, count: usize, settings: usize, seed: u64) -> Vec<TwoModeRecord> {
    let sampler = QuadratureSampler::new(rho, QuadratureGrid::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per = count / settings;
    let mut out = Vec::with_capacity(count);
    for k in 0..settings {
        let sum = TAU * k as f64 / settings as f64;
        let t1 = rng.gen::<f64>() * TAU;
        let at = sampler.at_phases(PhasePair::new(t1, sum - t1)).unwrap();
        out.extend(at.sample_n(per, &mut rng).into_iter().map(|q| TwoModeRecord { x1: q.x1, x2: q.x2, theta_sum: sum }));
    }
    out
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn fidelity_improves_with_sample_count() {
    let rho = apply_loss(
        &tmsv_state(0.3, FockCutoff::new(10).unwrap()).unwrap().to_density().unwrap(),
        &LossSpec::uniform(0.7).unwrap(),
    )
    .unwrap();
    let opts = ReconstructionOptions::default();
    let truth = rho.with_cutoff(opts.cutoff).unwrap();
    let mut medians = Vec::new();
    for count in [1_000, 10_000, 100_000] {
        let f: Vec<f64> = (0..5)
            .map(|seed| {
                let r = maxlik_two_mode(&sampled(&rho, count, 24, seed), &opts).unwrap();
                fidelity(&r.state, &truth).unwrap()
            })
            .collect();
        medians.push(median(f));
    }
    assert!(medians[0] < medians[1] && medians[1] < medians[2], "{medians:?}");
    assert!(medians[2] > 0.995, "{medians:?}");
}

#[test]
fn dual_subtracted_closure() {
    let dual = tmsv_state(0.19, FockCutoff::new(12).unwrap())
        .unwrap()
        .annihilate(Mode::First)
        .annihilate(Mode::Second)
        .to_density()
        .unwrap();
    let rho = apply_loss(&dual, &LossSpec::uniform(0.42).unwrap()).unwrap();
    let data = sampled(&rho, 200_000, 12, 77);
    let r = maxlik_two_mode(&data, &ReconstructionOptions::default()).unwrap();
    let e_true = log_negativity(&rho).unwrap();
    let e_hat = log_negativity(&r.state).unwrap();
    assert!((e_hat - e_true).abs() < 0.03, "{e_hat} vs {e_true}");
    for w in r.log_likelihood.windows(2) {
        assert!(w[1] >= w[0] - 1e-12 * w[0].abs());
    }
}

#[test]
fn single_phase_sum_is_refused() {
    let rho = tmsv_state(0.3, FockCutoff::new(8).unwrap()).unwrap().to_density().unwrap();
    let data = sampled(&rho, 5_000, 1, 1);
    assert!(matches!(maxlik_two_mode(&data, &ReconstructionOptions::default()), Err(Error::InsufficientData(_))));
}

#[test]
fn phase_tracked_single_mode_vacuum() {
    // boundary states keep populations of order 1/√N, see the module tests
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let records: Vec<SingleModeRecord> = (0..100_000)
        .map(|_| {
            let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
            let v: f64 = rng.gen();
            SingleModeRecord { x: (-u.ln()).sqrt() * (TAU * v).cos(), phase: Some(rng.gen::<f64>() * TAU) }
        })
        .collect();
    let r = maxlik_single_mode(&records, &ReconstructionOptions::default()).unwrap();
    let vacuum = DensityOperator::single_mode_fock(0, FockCutoff::new(3).unwrap()).unwrap();
    let f = fidelity(&r.state, &vacuum).unwrap();
    assert!(f > 0.995, "{f}");
}
