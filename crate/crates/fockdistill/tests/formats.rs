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


use fockdistill::config::{render, Assignments};
use fockdistill::core::experiment::{ExperimentConfig, PulseRecord};
use fockdistill::core::fock::{tmsv_state, DensityOperator, FockCutoff};
use fockdistill::core::channels::{apply_loss, LossSpec};
use fockdistill::formats::{read_density, read_quadratures, write_density, write_quadratures, DensityJson, BASIS_ORDERING};
use proptest::prelude::*;

fn lossy_tmsv(zeta: f64, eta1: f64, eta2: f64, n_max: usize) -> DensityOperator {
    let rho = tmsv_state(zeta, FockCutoff::new(n_max).unwrap()).unwrap().to_density().unwrap();
    apply_loss(&rho, &LossSpec::per_mode(eta1, eta2).unwrap()).unwrap()
}

#[test]
fn density_json_layout() {
    let rho = lossy_tmsv(0.3, 0.8, 0.6, 2);
    let json = DensityJson::of(&rho);
    assert_eq!((json.mode_count, json.n_max), (2, 2));
    assert_eq!(json.ordering, BASIS_ORDERING);
    assert_eq!(json.entries.len(), 81);
    // ⟨0,0|ρ|1,1⟩ sits in row 0, column 1·3+1
    let c = rho.element((0, 0), (1, 1));
    assert_eq!(json.entries[4], [c.re, c.im]);
}

#[test]
fn quadrature_csv_keeps_nan_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.csv");
    let records = vec![
        PulseRecord { block_id: 0, pulse_index: 0, click1: true, click2: false, theta_sum: f64::NAN, x1: -1.25, x2: 0.1 },
        PulseRecord { block_id: 3, pulse_index: 7, click1: true, click2: true, theta_sum: 2.5, x1: 1e-300, x2: -7.999 },
    ];
    write_quadratures(&path, &records).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("block_id,pulse_index,click1,click2,theta_sum,x1,x2\n0,0,1,0,NaN,"));
    let back = read_quadratures(&path).unwrap();
    assert!(back[0].theta_sum.is_nan());
    assert_eq!(back[1], records[1]);
    assert_eq!((back[0].click1, back[0].click2, back[0].x1), (true, false, -1.25));
}

#[test]
fn rejects_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "block_id,pulse_index,click1,click2,theta_sum,x1,x2\n0,0,2,0,NaN,0,0\n").unwrap();
    assert!(read_quadratures(&csv).is_err());
    let json = dir.path().join("bad.json");
    std::fs::write(&json, r#"{"mode_count":2,"n_max":1,"entries":[[1,0],[0,0]]}"#).unwrap();
    assert!(read_density(&json).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn density_round_trip_is_exact(zeta in 0.0f64..0.5, eta1 in 0.0f64..=1.0, eta2 in 0.0f64..=1.0, n_max in 1usize..5) {
        let rho = lossy_tmsv(zeta, eta1, eta2, n_max);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.json");
        write_density(&path, &rho).unwrap();
        let back = read_density(&path).unwrap();
        prop_assert_eq!(back.matrix(), rho.matrix());
        prop_assert_eq!(back.cutoff(), rho.cutoff());
    }

    #[test]
    fn quadrature_round_trip_is_exact(rows in prop::collection::vec((0usize..50, any::<bool>(), any::<bool>(), -8.0f64..8.0, -8.0f64..8.0, 0.0f64..3.2), 1..40)) {
        let records: Vec<PulseRecord> = rows.iter().enumerate().map(|(i, &(b, c1, c2, x1, x2, t))| PulseRecord {
            block_id: b, pulse_index: i, click1: c1, click2: c2, theta_sum: t, x1, x2,
        }).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.csv");
        write_quadratures(&path, &records).unwrap();
        prop_assert_eq!(read_quadratures(&path).unwrap(), records);
    }

    #[test]
    fn config_render_round_trip(zeta in 0.0f64..1.0, eta1 in 0.0f64..=1.0, eta2 in 0.0f64..=1.0, t in 0.0f64..=1.0, blocks in 1usize..1000, seed in any::<u64>()) {
        let mut c = ExperimentConfig { zeta, tap_transmissivity: t, blocks, seed, ..Default::default() };
        c.eta = [eta1, eta2];
        prop_assert_eq!(Assignments::parse(&render(&c)).unwrap().resolve().unwrap(), c);
    }
}
