//! Closed-form operators used by the ADMM iterations.
//!
//! * [`project_c`]: Euclidean projection onto the affine set
//!   `C = { X symmetric : tr(X) = 1, matr^{-1}(X) super-symmetric }`.
//! * [`shrink_nuclear`]: proximal operator of `tau * ||.||_*`.
//! * [`project_psd`]: projection onto the positive semidefinite cone.
//!
//! The affine projection works class by class. Writing `|c|` for the number
//! of matrix entries in a symmetry class `c` and `t_c` for the number of those
//! entries lying on the diagonal, minimizing `sum_c |c| (x_c - z_c)^2` subject
//! to `sum_c t_c x_c = 1` gives
//!
//! ```text
//! x_c = zhat_c + (lambda / 2) * t_c / |c|,
//! lambda / 2 = (1 - sum_c t_c zhat_c) / sum_c t_c^2 / |c|,
//! ```
//!
//! where `zhat_c` is the class average of `Z`. For the super-symmetric
//! structure the only classes touching the diagonal are the even classes
//! `1^{2k_1} ... n^{2k_n}` with `t_c = d! / prod k_j!`, so `t_c / |c|` is the
//! coefficient `alpha(k, d)`.

use std::collections::{BTreeMap, HashMap};

use crate::error::{shape, Error, Result};
use crate::matricize::{group_indices, SymmetricMatrix};
use crate::tensor::{class_size, multinomial, MonomialSignature};
use nalgebra::DMatrix;

/// `alpha(k, d) = (d! / prod k_j!) / ((2d)! / prod (2 k_j)!)`.
pub fn alpha(k: &MonomialSignature, d: usize) -> Result<f64> {
    let num = multinomial(d, k)? as f64;
    let den = class_size(&k.even_index()) as f64;
    Ok(num / den)
}

/// Affine projection onto `{ X : X constant on each class, sum of diagonal = 1 }`
/// for a fixed partition of the matrix entries into classes.
#[derive(Debug, Clone)]
pub(crate) struct ClassProjector {
    size: usize,
    /// Class of entry `(r, c)`, stored row-major.
    entry_class: Vec<u32>,
    class_size: Vec<f64>,
    /// Number of diagonal entries per class.
    trace_weight: Vec<f64>,
    /// `sum_c t_c^2 / |c|`.
    denom: f64,
}

impl ClassProjector {
    /// `class_of(r, c)` must be symmetric in its arguments and return ids in
    /// `0..num_classes`.
    pub(crate) fn new(size: usize, num_classes: usize, mut class_of: impl FnMut(usize, usize) -> usize) -> Self {
        let mut entry_class = vec![0u32; size * size];
        let mut class_size = vec![0.0; num_classes];
        let mut trace_weight = vec![0.0; num_classes];
        for r in 0..size {
            for c in 0..size {
                let id = class_of(r, c);
                entry_class[r * size + c] = id as u32;
                class_size[id] += 1.0;
                if r == c {
                    trace_weight[id] += 1.0;
                }
            }
        }
        let denom = trace_weight
            .iter()
            .zip(&class_size)
            .filter(|(t, _)| **t > 0.0)
            .map(|(t, s)| t * t / s)
            .sum();
        Self {
            size,
            entry_class,
            class_size,
            trace_weight,
            denom,
        }
    }

    pub(crate) fn size(&self) -> usize {
        self.size
    }

    /// Class averages of `z`.
    fn class_means(&self, z: &DMatrix<f64>) -> Vec<f64> {
        let mut sums = vec![0.0; self.class_size.len()];
        for r in 0..self.size {
            for c in 0..self.size {
                sums[self.entry_class[r * self.size + c] as usize] += z[(r, c)];
            }
        }
        sums.iter()
            .zip(&self.class_size)
            .map(|(s, n)| if *n > 0.0 { s / n } else { 0.0 })
            .collect()
    }

    /// Projection of `z` and the multiplier `lambda` of the trace constraint.
    pub(crate) fn project(&self, z: &DMatrix<f64>) -> (SymmetricMatrix, f64) {
        debug_assert_eq!(z.nrows(), self.size);
        let mut x = self.class_means(z);
        let trace: f64 = x.iter().zip(&self.trace_weight).map(|(v, t)| v * t).sum();
        let half_lambda = (1.0 - trace) / self.denom;
        for ((v, t), s) in x.iter_mut().zip(&self.trace_weight).zip(&self.class_size) {
            if *t > 0.0 {
                *v += half_lambda * t / s;
            }
        }
        let m = DMatrix::from_fn(self.size, self.size, |r, c| {
            x[self.entry_class[r * self.size + c] as usize]
        });
        (SymmetricMatrix::from_symmetric_part(m), 2.0 * half_lambda)
    }
}

/// Coefficients of the affine projection onto `C` for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionCoefficients {
    pub alpha: BTreeMap<MonomialSignature, f64>,
    /// Multiplier of the trace constraint.
    pub lambda: f64,
}

/// Projector onto `C` for fixed `(n, d)`; the entry-to-class table is built
/// once and reused across calls.
#[derive(Debug, Clone)]
pub struct CProjector {
    n: usize,
    d: usize,
    inner: ClassProjector,
    alpha: BTreeMap<MonomialSignature, f64>,
}

impl CProjector {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return shape(format!("projection needs n, d >= 1, got n={n}, d={d}"));
        }
        let size = n
            .checked_pow(d as u32)
            .ok_or_else(|| Error::Shape(format!("{n}^{d} overflows")))?;
        let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
        let rows: Vec<Vec<usize>> = (0..size).map(|r| group_indices(r, n, d)).collect();
        let mut key = Vec::with_capacity(2 * d);
        let mut table = vec![0usize; size * size];
        for r in 0..size {
            for c in r..size {
                key.clear();
                key.extend_from_slice(&rows[r]);
                key.extend_from_slice(&rows[c]);
                key.sort_unstable();
                let next = ids.len();
                let id = *ids.entry(key.clone()).or_insert(next);
                table[r * size + c] = id;
                table[c * size + r] = id;
            }
        }
        let inner = ClassProjector::new(size, ids.len(), |r, c| table[r * size + c]);
        let mut alpha_map = BTreeMap::new();
        for key in ids.keys() {
            if let Some(k) = MonomialSignature::from_even_index(key, n) {
                let a = alpha(&k, d)?;
                alpha_map.insert(k, a);
            }
        }
        Ok(Self {
            n,
            d,
            inner,
            alpha: alpha_map,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn project(&self, z: &SymmetricMatrix) -> Result<SymmetricMatrix> {
        Ok(self.project_with_coefficients(z)?.0)
    }

    pub fn project_with_coefficients(&self, z: &SymmetricMatrix) -> Result<(SymmetricMatrix, ProjectionCoefficients)> {
        if z.size() != self.inner.size() {
            return shape(format!(
                "matrix of size {} for n={}, d={} (expected {})",
                z.size(),
                self.n,
                self.d,
                self.inner.size()
            ));
        }
        let (x, lambda) = self.inner.project(z.matrix());
        Ok((
            x,
            ProjectionCoefficients {
                alpha: self.alpha.clone(),
                lambda,
            },
        ))
    }

    pub(crate) fn project_raw(&self, z: &DMatrix<f64>) -> SymmetricMatrix {
        self.inner.project(z).0
    }
}

/// Projection of `z` onto `C` for tensors of dimension `n` and order `2d`.
pub fn project_c(z: &SymmetricMatrix, n: usize, d: usize) -> Result<SymmetricMatrix> {
    CProjector::new(n, d)?.project(z)
}

/// Singular value shrinkage `U diag(max(sigma - tau, 0)) V^T`, computed from
/// the eigendecomposition: each eigenvalue moves toward zero by `tau`.
pub fn shrink_nuclear(m: &SymmetricMatrix, tau: f64) -> SymmetricMatrix {
    debug_assert!(tau >= 0.0);
    let (values, vectors) = m.eigen();
    let shrunk: Vec<f64> = values.iter().map(|&v| v.signum() * (v.abs() - tau).max(0.0)).collect();
    SymmetricMatrix::from_eigen(&shrunk, &vectors)
}

/// Nearest positive semidefinite matrix in Frobenius norm.
pub fn project_psd(m: &SymmetricMatrix) -> SymmetricMatrix {
    let (values, vectors) = m.eigen();
    let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    SymmetricMatrix::from_eigen(&clipped, &vectors)
}
