//! Square matricization, vectorization and their inverses.
//!
//! For an order-`2d` tensor over `n` indices, `matr` puts the first `d`
//! indices on the rows and the last `d` on the columns of an `n^d x n^d`
//! matrix, each group read as a base-`n` number with the first index most
//! significant. `vect` flattens the same way. Both are therefore plain
//! row-major reshapes of the dense tensor.

use std::collections::HashMap;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{domain, shape, Error, Result};
use crate::extensions::PartialSymmetricTensor;
use crate::tensor::{GeneralTensor, SuperSymmetricTensor};

/// Relative tolerance below which a matrix counts as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Default certification threshold on `sigma_2 / sigma_1`.
pub const RANK_ONE_TOL: f64 = 1e-6;

/// Dense real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    /// Wrap `m` after checking it is square and symmetric to [`SYMMETRY_TOL`]
    /// (relative to its largest entry); the stored matrix is the exact
    /// symmetric part.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return shape(format!("matrix is {}x{}, expected square", m.nrows(), m.ncols()));
        }
        let scale = m.amax().max(1.0);
        let violation = asymmetry(&m);
        if violation > SYMMETRY_TOL * scale {
            return domain(format!("matrix is not symmetric (max |a_ij - a_ji| = {violation:e})"));
        }
        Ok(Self::from_symmetric_part(m))
    }

    /// `(m + m^T) / 2` without any check.
    pub fn from_symmetric_part(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// `v v^T`.
    pub fn outer(v: &[f64]) -> Self {
        let v = DVector::from_column_slice(v);
        Self(&v * v.transpose())
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// `tr(A B)`, which for symmetric matrices is the entrywise inner product.
    pub fn dot(&self, other: &Self) -> f64 {
        self.0.dot(&other.0)
    }

    /// Eigenvalues (unsorted) and the matching orthonormal eigenvectors as columns.
    pub fn eigen(&self) -> (DVector<f64>, DMatrix<f64>) {
        let e = SymmetricEigen::new(self.0.clone());
        (e.eigenvalues, e.eigenvectors)
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        self.0.clone().symmetric_eigenvalues()
    }

    /// Sum of singular values, i.e. of absolute eigenvalues.
    pub fn nuclear_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|v| v.abs()).sum()
    }

    /// `sum_i lambda_i u_i u_i^T` over the given eigenpairs.
    pub(crate) fn from_eigen(values: &[f64], vectors: &DMatrix<f64>) -> Self {
        let n = vectors.nrows();
        let mut m = DMatrix::zeros(n, n);
        for (k, &lam) in values.iter().enumerate() {
            if lam != 0.0 {
                let u = vectors.column(k);
                m.ger(lam, &u, &u, 1.0);
            }
        }
        Self::from_symmetric_part(m)
    }
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

impl Add for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn add(self, rhs: Self) -> SymmetricMatrix {
        SymmetricMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn sub(self, rhs: Self) -> SymmetricMatrix {
        SymmetricMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn mul(self, rhs: f64) -> SymmetricMatrix {
        SymmetricMatrix(&self.0 * rhs)
    }
}

fn checked_pow(n: usize, d: usize) -> Result<usize> {
    n.checked_pow(d as u32)
        .ok_or_else(|| Error::Shape(format!("{n}^{d} overflows")))
}

/// Row/column position of the `d` leading (or trailing) tensor indices.
/// Position = sum_j i_j n^{d-1-j}, the 0-based form of the 1-based
/// `sum_j (i_j - 1) n^{d-j} + 1`.
pub fn group_position(indices: &[usize], n: usize) -> usize {
    indices.iter().fold(0, |acc, &i| acc * n + i)
}

/// Inverse of [`group_position`]: the `d` base-`n` digits of `pos`, most
/// significant first.
pub fn group_indices(mut pos: usize, n: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; d];
    for slot in out.iter_mut().rev() {
        *slot = pos % n;
        pos /= n;
    }
    out
}

/// Square matricization of an even-order super-symmetric tensor.
pub fn matr(f: &SuperSymmetricTensor) -> Result<SymmetricMatrix> {
    if !f.order().is_multiple_of(2) {
        return domain(format!("square matricization needs even order, got {}", f.order()));
    }
    let n = f.n();
    let d = f.order() / 2;
    let size = checked_pow(n, d)?;
    let mut m = DMatrix::zeros(size, size);
    let mut key = Vec::with_capacity(2 * d);
    for r in 0..size {
        let row = group_indices(r, n, d);
        for c in r..size {
            key.clear();
            key.extend_from_slice(&row);
            key.extend(group_indices(c, n, d));
            key.sort_unstable();
            let v = f.value_canonical(&key);
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
    }
    Ok(SymmetricMatrix(m))
}

/// Reshape an `n^d x n^d` matrix back into an order-`2d` dense tensor. The
/// result is super-symmetric only when `x` lies in the image of [`matr`].
pub fn matr_inv(x: &SymmetricMatrix, n: usize, d: usize) -> Result<GeneralTensor> {
    let size = checked_pow(n, d)?;
    if x.size() != size {
        return shape(format!("matrix of size {} is not {n}^{d} = {size}", x.size()));
    }
    let mut data = Vec::with_capacity(size * size);
    for r in 0..size {
        data.extend(x.0.row(r).iter());
    }
    GeneralTensor::new(vec![n; 2 * d], data)
}

/// Flatten a tensor; the first index is most significant.
pub fn vect(t: &GeneralTensor) -> Vec<f64> {
    t.data().to_vec()
}

/// Inverse of [`vect`] for an order-`m` tensor of dimension `n`.
pub fn vect_inv(v: &[f64], n: usize, m: usize) -> Result<GeneralTensor> {
    let len = checked_pow(n, m)?;
    if v.len() != len {
        return shape(format!("vector of length {} is not {n}^{m} = {len}", v.len()));
    }
    GeneralTensor::new(vec![n; m], v.to_vec())
}

/// Outcome of a super-symmetry check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryCheck {
    pub symmetric: bool,
    /// Largest `|t_a - t_b|` over index pairs in the same permutation class.
    pub max_violation: f64,
}

pub fn is_super_symmetric(t: &GeneralTensor, tol: f64) -> SymmetryCheck {
    if t.cubic_dim().is_none() {
        return SymmetryCheck {
            symmetric: false,
            max_violation: f64::INFINITY,
        };
    }
    let mut range: HashMap<Vec<usize>, (f64, f64)> = HashMap::new();
    t.for_each(|idx, v| {
        let mut key = idx.to_vec();
        key.sort_unstable();
        let e = range.entry(key).or_insert((v, v));
        e.0 = e.0.min(v);
        e.1 = e.1.max(v);
    });
    let max_violation = range.values().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    SymmetryCheck {
        symmetric: max_violation <= tol,
        max_violation,
    }
}

/// Rank-one diagnostic of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneDiagnostic {
    /// `sigma_2 / sigma_1`; zero for an exactly rank-one matrix.
    pub ratio: f64,
    /// Eigenvalue of largest magnitude.
    pub eigenvalue: f64,
    /// Unit eigenvector of `eigenvalue`, largest-magnitude component positive.
    pub eigenvector: Vec<f64>,
    /// Singular values (absolute eigenvalues), descending.
    pub singular_values: Vec<f64>,
}

impl RankOneDiagnostic {
    pub fn is_rank_one(&self, tol: f64) -> bool {
        self.ratio <= tol
    }
}

/// Flip `v` so its largest-magnitude component is positive.
pub fn normalize_sign(v: &mut [f64]) {
    let lead = v
        .iter()
        .copied()
        .fold(0.0f64, |best, a| if a.abs() > best.abs() { a } else { best });
    if lead < 0.0 {
        v.iter_mut().for_each(|a| *a = -*a);
    }
}

pub fn rank_one_ratio(x: &SymmetricMatrix) -> Result<RankOneDiagnostic> {
    let (values, vectors) = x.eigen();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()));
    let lead = order[0];
    let sigma1 = values[lead].abs();
    if sigma1 == 0.0 {
        return Err(Error::Degenerate("rank diagnostic of the zero matrix".into()));
    }
    let sigma2 = order.get(1).map_or(0.0, |&k| values[k].abs());
    let mut eigenvector: Vec<f64> = vectors.column(lead).iter().copied().collect();
    normalize_sign(&mut eigenvector);
    Ok(RankOneDiagnostic {
        ratio: sigma2 / sigma1,
        eigenvalue: values[lead],
        eigenvector,
        singular_values: order.iter().map(|&k| values[k].abs()).collect(),
    })
}

/// Square rearrangement of a partial-symmetric tensor over `(n, m, n, m)`:
/// entry `(i1 m + i2, i3 m + i4)` holds `G[i1, i2, i3, i4]`.
pub fn matr_partial(g: &PartialSymmetricTensor) -> Result<SymmetricMatrix> {
    let violation = g.symmetry_violation();
    let scale = g.dense().data().iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if violation > SYMMETRY_TOL * scale {
        return domain(format!("tensor is not partial-symmetric (violation {violation:e})"));
    }
    let size = g.n() * g.m();
    let data = g.dense().data();
    Ok(SymmetricMatrix::from_symmetric_part(DMatrix::from_row_slice(
        size, size, data,
    )))
}

/// Inverse of [`matr_partial`]: reshape an `nm x nm` matrix to `(n, m, n, m)`.
pub fn matr_partial_inv(x: &SymmetricMatrix, n: usize, m: usize) -> Result<GeneralTensor> {
    if x.size() != n * m {
        return shape(format!("matrix of size {} is not {n}*{m}", x.size()));
    }
    let mut data = Vec::with_capacity(n * m * n * m);
    for r in 0..n * m {
        data.extend(x.0.row(r).iter());
    }
    GeneralTensor::new(vec![n, m, n, m], data)
}

/// Mode-`mode` unfolding: row index is the `mode`-th tensor index, the column
/// index enumerates the remaining indices with the earliest one varying
/// fastest (`j = sum_{k != mode} i_k J_k`, `J_k = prod_{l < k, l != mode} n_l`).
pub fn mode_n_unfold(t: &GeneralTensor, mode: usize) -> Result<DMatrix<f64>> {
    let dims = t.dims();
    if mode >= dims.len() {
        return domain(format!("mode {mode} out of range for order {}", dims.len()));
    }
    let mut strides = vec![0usize; dims.len()];
    let mut acc = 1;
    for k in 0..dims.len() {
        if k != mode {
            strides[k] = acc;
            acc *= dims[k];
        }
    }
    let mut out = DMatrix::zeros(dims[mode], acc);
    t.for_each(|idx, v| {
        let col: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        out[(idx[mode], col)] = v;
    });
    Ok(out)
}
