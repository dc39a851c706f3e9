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

//! Truncated Fock-space simulation of two-mode squeezed vacuum distillation
//! by heralded photon subtraction.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs; randomness comes from explicitly seeded
//! generators. File formats, configuration parsing and the command-line
//! front end live in the `fockdistill` companion crate.
//!
//! Conventions used throughout:
//!
//! * Two-mode basis vectors `|n1, n2⟩` are stored row-major, `n1` slow and
//!   `n2` fast.
//! * Quadratures are `x = (a + a†)/√2`, so the vacuum variance of a single
//!   mode is 1/2 and the vacuum variance of `x1 ∓ x2` is exactly 1.

#![no_std]
// negated comparisons double as NaN guards
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channels;
mod error;
pub mod experiment;
pub mod fit;
pub mod fock;
pub mod homodyne;
pub mod linalg;
pub mod metrics;
pub mod report;
pub mod tomography;

pub use error::{Error, Result};

/// Complex amplitude type used everywhere in the crate.
pub type C64 = num_complex::Complex64;
