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

//! Dense complex square matrices and a cyclic Jacobi eigensolver for
//! Hermitian matrices.
//!
//! Matrices here are small (at most a few hundred rows), so the solver
//! favours reproducibility over speed. Before rotating, the matrix is split
//! into the connected components of its sparsity graph; density operators
//! with a conserved photon-number difference, and their partial transposes,
//! decompose into many small blocks that are diagonalized independently.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

#[allow(unused_imports)] // unused when a dependent links std
use num_traits::Float;

use crate::{Error, Result, C64};

/// Relative off-diagonal Frobenius norm at which Jacobi sweeps stop.
pub const EIGEN_TOLERANCE: f64 = 1e-12;

const MAX_SWEEPS: usize = 64;

/// Row-major dense complex square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major entries; fails unless `data.len()` is a
    /// perfect square.
    pub fn from_row_major(data: Vec<C64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        Ok(Self { dim, data })
    }

    /// `|v⟩⟨v|`
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&mut self, factor: f64) {
        for z in &mut self.data {
            *z *= factor;
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.scale(factor);
        self
    }

    /// `self += factor * other`
    pub fn add_scaled(&mut self, other: &CMatrix, factor: f64) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b * factor;
        }
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in row.iter().enumerate() {
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let other_row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim;
        (0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `⟨v|M|v⟩`
    pub fn expectation(&self, v: &[C64]) -> C64 {
        let mv = self.mul_vec(v);
        v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum()
    }

    /// Largest elementwise `|M - M†|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `Tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> C64 {
        let n = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Eigen-decomposition `M = V diag(λ) V†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        (0..self.vectors.dim()).map(|i| self.vectors[(i, k)]).collect()
    }

    /// `V f(diag λ) V†`
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.vectors.dim();
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = CMatrix::zeros(n);
        for (k, &w) in fl.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * w;
                if vik == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations, applied independently to each connected block.
///
/// Fails with [`Error::NotHermitian`] if the input deviates from its adjoint
/// by more than `1e-10` elementwise.
pub fn eigh(m: &CMatrix) -> Result<HermitianEigen> {
    let dev = m.hermitian_deviation();
    if !(dev <= 1e-10) {
        return Err(Error::NotHermitian(dev));
    }
    let n = m.dim();
    let mut values = vec![0.0; n];
    let mut vectors = CMatrix::zeros(n);

    for block in connected_blocks(m) {
        let b = block.len();
        let mut sub = CMatrix::from_fn(b, |i, j| {
            // symmetrize so rounding noise in the input cannot bias the rotations
            let a = m[(block[i], block[j])];
            let c = m[(block[j], block[i])].conj();
            (a + c) * 0.5
        });
        let mut v = CMatrix::identity(b);
        jacobi_in_place(&mut sub, &mut v);
        for (k, &col) in block.iter().enumerate() {
            values[col] = sub[(k, k)].re;
            for (i, &row) in block.iter().enumerate() {
                vectors[(row, col)] = v[(i, k)];
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let sorted_vectors = CMatrix::from_fn(n, |i, k| vectors[(i, order[k])]);
    Ok(HermitianEigen { values: sorted_values, vectors: sorted_vectors })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &CMatrix) -> Result<Vec<f64>> {
    eigh(m).map(|e| e.values)
}

/// Principal square root of a positive semidefinite Hermitian matrix;
/// negative eigenvalues (truncation noise) are clamped to zero.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    Ok(eigh(m)?.map_spectrum(|l| l.max(0.0).sqrt()))
}

/// Index sets of the connected components of the graph with an edge
/// wherever `m[i][j] != 0`.
fn connected_blocks(m: &CMatrix) -> Vec<Vec<usize>> {
    let n = m.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if m[(i, j)] != C64::new(0.0, 0.0) || m[(j, i)] != C64::new(0.0, 0.0) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut root_slot = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[root_slot[r]].push(i);
    }
    blocks
}

/// Diagonalizes `a` in place, accumulating the rotations into the columns
/// of `v`.
fn jacobi_in_place(a: &mut CMatrix, v: &mut CMatrix) {
    let n = a.dim();
    if n < 2 {
        return;
    }
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return;
    }
    let zero = C64::new(0.0, 0.0);
    let mut polishing = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        // one extra sweep after reaching tolerance; convergence is quadratic
        if off == 0.0 || polishing {
            break;
        }
        polishing = off <= EIGEN_TOLERANCE * scale;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r < f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // U restricted to (p, q): [[c, s], [-s e*, c e*]] with e the phase of a_pq
                let u_qp = -phase.conj() * s;
                let u_qq = phase.conj() * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c + akq * u_qp;
                    a[(k, q)] = akp * s + akq * u_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c + aqk * u_qp.conj();
                    a[(q, k)] = apk * s + aqk * u_qq.conj();
                }
                a[(p, q)] = zero;
                a[(q, p)] = zero;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c + vkq * u_qp;
                    v[(k, q)] = vkp * s + vkq * u_qq;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(dim: usize, entries: &[(f64, f64)]) -> CMatrix {
        let mut m = CMatrix::zeros(dim);
        let mut it = entries.iter().cycle();
        for i in 0..dim {
            let &(d, _) = it.next().unwrap();
            m[(i, i)] = c(d, 0.0);
            for j in (i + 1)..dim {
                let &(re, im) = it.next().unwrap();
                m[(i, j)] = c(re, im);
                m[(j, i)] = c(re, -im);
            }
        }
        m
    }

    #[test]
    fn diagonal_matrix_is_its_own_spectrum() {
        let e = eigh(&CMatrix::diagonal(&[3.0, -1.0, 2.0])).unwrap();
        assert_eq!(e.values, [-1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_y_has_unit_eigenvalues() {
        let mut m = CMatrix::zeros(2);
        m[(0, 1)] = c(0.0, -1.0);
        m[(1, 0)] = c(0.0, 1.0);
        let e = eigh(&m).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::zeros(2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(eigh(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn block_split_matches_dense_result() {
        // two decoupled 2x2 blocks interleaved as {0, 2} and {1, 3}
        let mut m = CMatrix::diagonal(&[1.0, 2.0, 3.0, 4.0]);
        m[(0, 2)] = c(0.5, 0.5);
        m[(2, 0)] = c(0.5, -0.5);
        m[(1, 3)] = c(0.0, 1.0);
        m[(3, 1)] = c(0.0, -1.0);
        let blocks = connected_blocks(&m);
        assert_eq!(blocks, vec![vec![0, 2], vec![1, 3]]);
        let e = eigh(&m).unwrap();
        // closed form for [[a, b], [b*, d]]: (a+d)/2 ± sqrt(((a-d)/2)^2 + |b|^2)
        let r1 = (1.0f64 + 0.5).sqrt();
        let r2 = (1.0f64 + 1.0).sqrt();
        let mut expected = [2.0 - r1, 2.0 + r1, 3.0 - r2, 3.0 + r2];
        expected.sort_by(f64::total_cmp);
        for (a, b) in e.values.iter().zip(expected) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let m = random_hermitian(4, &[(0.3, 0.1), (0.2, -0.05), (0.1, 0.0)]);
        let m = m.matmul(&m); // make PSD
        let s = psd_sqrt(&m).unwrap();
        assert!(s.matmul(&s).max_abs_diff(&m) < 1e-12);
    }

    proptest! {
        #[test]
        fn decomposition_reconstructs_input(
            dim in 1usize..9,
            entries in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40),
        ) {
            let m = random_hermitian(dim, &entries);
            let e = eigh(&m).unwrap();
            // trace equals the eigenvalue sum
            prop_assert!((m.trace().re - e.values.iter().sum::<f64>()).abs() < 1e-10);
            for k in 0..dim {
                let v = e.vector(k);
                let mv = m.mul_vec(&v);
                let resid: f64 = mv.iter().zip(&v).map(|(a, b)| (a - b * e.values[k]).norm_sqr()).sum::<f64>().sqrt();
                prop_assert!(resid < 1e-9, "residual {}", resid);
            }
            let back = e.map_spectrum(|l| l);
            prop_assert!(back.max_abs_diff(&m) < 1e-10);
        }
    }
}
