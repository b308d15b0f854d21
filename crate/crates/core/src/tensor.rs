//! Super-symmetric and general dense tensors.
//!
//! Indices are 0-based throughout the crate. A super-symmetric tensor stores one
//! value per permutation class, keyed by the class's non-decreasing
//! representative; a general tensor is a dense row-major array (last index
//! varies fastest).

use std::collections::BTreeMap;

use crate::error::{domain, shape, Error, Result};
use crate::rng;

// ---------------------------------------------------------------------------
// Combinatorics
// ---------------------------------------------------------------------------

/// `C(n, k)` as an exact integer.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Number of distinct arrangements of a multiset with the given multiplicities.
fn multiset_arrangements(counts: impl IntoIterator<Item = usize>) -> u64 {
    let mut total: u64 = 0;
    let mut acc: u128 = 1;
    for c in counts {
        for i in 1..=c as u64 {
            total += 1;
            acc = acc * total as u128 / i as u128;
        }
    }
    acc as u64
}

/// Sorted (non-decreasing) rearrangement of `idx`, after checking every
/// component is below `n`.
pub fn canonical_index(idx: &[usize], n: usize) -> Result<Vec<usize>> {
    if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
        return domain(format!("index component {bad} out of range for dimension {n}"));
    }
    let mut c = idx.to_vec();
    c.sort_unstable();
    Ok(c)
}

/// `m! / prod_j (count of j)!`: the number of distinct permutations of `idx`.
pub fn class_size(idx: &[usize]) -> u64 {
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    let mut counts = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        counts.push(j - i);
        i = j;
    }
    multiset_arrangements(counts)
}

/// A permutation class of tensor indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexClass {
    pub canonical: Vec<usize>,
    pub multiplicity: u64,
}

impl IndexClass {
    pub fn of(idx: &[usize], n: usize) -> Result<Self> {
        let canonical = canonical_index(idx, n)?;
        let multiplicity = class_size(&canonical);
        Ok(Self {
            canonical,
            multiplicity,
        })
    }
}

/// Exponent vector `k` of a monomial `x_1^{k_1} ... x_n^{k_n}`; an element of
/// `K(n, d)` when the exponents sum to `d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MonomialSignature(Vec<usize>);

impl MonomialSignature {
    pub fn new(k: Vec<usize>) -> Self {
        Self(k)
    }

    pub fn exponents(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `d! / prod k_j!` with `d` the signature's own degree.
    pub fn multinomial(&self) -> u64 {
        multiset_arrangements(self.0.iter().copied())
    }

    /// Canonical index `1^{2k_1} 2^{2k_2} ... n^{2k_n}` (0-based) of the even
    /// diagonal class this signature labels.
    pub fn even_index(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(j, &k)| std::iter::repeat_n(j, 2 * k))
            .collect()
    }

    /// Inverse of [`MonomialSignature::even_index`]: `Some` when every index in
    /// `idx` occurs an even number of times.
    pub fn from_even_index(idx: &[usize], n: usize) -> Option<Self> {
        let mut counts = vec![0usize; n];
        for &i in idx {
            if i >= n {
                return None;
            }
            counts[i] += 1;
        }
        if counts.iter().any(|c| c % 2 == 1) {
            return None;
        }
        Some(Self(counts.into_iter().map(|c| c / 2).collect()))
    }
}

/// `d! / prod k_j!`, rejecting signatures whose exponents do not sum to `d`.
pub fn multinomial(d: usize, k: &MonomialSignature) -> Result<u64> {
    if k.degree() != d {
        return domain(format!(
            "signature {:?} sums to {}, expected {d}",
            k.exponents(),
            k.degree()
        ));
    }
    Ok(k.multinomial())
}

/// Every element of `K(n, d)` exactly once, in ascending lexicographic order.
pub fn enumerate_signatures(n: usize, d: usize) -> Vec<MonomialSignature> {
    fn rec(pos: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<MonomialSignature>) {
        if pos + 1 == n {
            cur.push(left);
            out.push(MonomialSignature(cur.clone()));
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(pos + 1, n, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    rec(0, n, d, &mut Vec::with_capacity(n), &mut out);
    out
}

/// All non-decreasing `m`-tuples over `0..n` in lexicographic order.
pub fn canonical_indices(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i, n, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, m, &mut Vec::with_capacity(m), &mut out);
    out
}

// ---------------------------------------------------------------------------
// Row-major index arithmetic
// ---------------------------------------------------------------------------

/// Row-major linear offset of `idx` in an array of shape `dims`.
pub fn linear_index(idx: &[usize], dims: &[usize]) -> usize {
    debug_assert_eq!(idx.len(), dims.len());
    idx.iter().zip(dims).fold(0, |acc, (&i, &n)| acc * n + i)
}

/// Inverse of [`linear_index`].
pub fn multi_index(mut lin: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for (slot, &n) in idx.iter_mut().zip(dims).rev() {
        *slot = lin % n;
        lin /= n;
    }
    idx
}

fn advance(idx: &mut [usize], dims: &[usize]) -> bool {
    for k in (0..dims.len()).rev() {
        idx[k] += 1;
        if idx[k] < dims[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

// ---------------------------------------------------------------------------
// General tensors
// ---------------------------------------------------------------------------

/// Dense multi-way array of shape `dims`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl GeneralTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return shape(format!("dimensions must be positive, got {dims:?}"));
        }
        let len: usize = dims.iter().product();
        if len != data.len() {
            return shape(format!("shape {dims:?} needs {len} values, got {}", data.len()));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = dims.iter().product();
        Self::new(dims, vec![0.0; len])
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(dims)?;
        let mut idx = vec![0; t.dims.len()];
        for slot in t.data.iter_mut() {
            *slot = f(&idx);
            advance(&mut idx, &t.dims);
        }
        Ok(t)
    }

    /// Outer product `x^1 ⊗ x^2 ⊗ ... ⊗ x^m`.
    pub fn outer(vectors: &[&[f64]]) -> Result<Self> {
        let dims = vectors.iter().map(|v| v.len()).collect();
        Self::from_fn(dims, |idx| idx.iter().zip(vectors).map(|(&i, v)| v[i]).product())
    }

    pub fn random_gaussian(dims: Vec<usize>, seed: u64) -> Result<Self> {
        let mut rng = rng::seeded(seed);
        Self::from_fn(dims, |_| rng::standard_normal(&mut rng))
    }

    pub fn random_uniform(dims: Vec<usize>, seed: u64) -> Result<Self> {
        let mut rng = rng::seeded(seed);
        Self::from_fn(dims, |_| rng::symmetric_uniform(&mut rng))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Common dimension when every mode has the same size.
    pub fn cubic_dim(&self) -> Option<usize> {
        let n = self.dims[0];
        self.dims.iter().all(|&k| k == n).then_some(n)
    }

    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        self.check_index(idx)?;
        Ok(self.data[linear_index(idx, &self.dims)])
    }

    pub fn set(&mut self, idx: &[usize], value: f64) -> Result<()> {
        self.check_index(idx)?;
        let lin = linear_index(idx, &self.dims);
        self.data[lin] = value;
        Ok(())
    }

    fn check_index(&self, idx: &[usize]) -> Result<()> {
        if idx.len() != self.dims.len() {
            return shape(format!(
                "index of length {} for an order-{} tensor",
                idx.len(),
                self.dims.len()
            ));
        }
        if idx.iter().zip(&self.dims).any(|(&i, &n)| i >= n) {
            return domain(format!("index {idx:?} out of range for shape {:?}", self.dims));
        }
        Ok(())
    }

    /// Visit every `(index, value)` pair in row-major order.
    pub fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut idx = vec![0; self.dims.len()];
        for &v in &self.data {
            f(&idx, v);
            advance(&mut idx, &self.dims);
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn check_vectors(&self, xs: &[&[f64]], skip: Option<usize>) -> Result<()> {
        if xs.len() != self.order() {
            return shape(format!(
                "{} vectors supplied for an order-{} tensor",
                xs.len(),
                self.order()
            ));
        }
        for (k, (x, &n)) in xs.iter().zip(&self.dims).enumerate() {
            if Some(k) != skip && x.len() != n {
                return shape(format!("vector {k} has length {}, expected {n}", x.len()));
            }
        }
        Ok(())
    }

    /// Multilinear form `A(x^1, ..., x^m)`.
    pub fn eval_multilinear(&self, xs: &[&[f64]]) -> Result<f64> {
        self.check_vectors(xs, None)?;
        let mut buf = self.data.clone();
        let mut len = buf.len();
        for (x, &n) in xs.iter().zip(&self.dims).rev() {
            len /= n;
            for r in 0..len {
                let row = &buf[r * n..(r + 1) * n];
                let s = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
                buf[r] = s;
            }
        }
        Ok(buf[0])
    }

    /// Contraction with every vector except the one in position `mode`:
    /// the vector `g` with `g_i = A(x^1, ..., e_i, ..., x^m)`. The entry of
    /// `xs` at `mode` is ignored.
    pub fn contract_except(&self, xs: &[&[f64]], mode: usize) -> Result<Vec<f64>> {
        if mode >= self.order() {
            return domain(format!("mode {mode} out of range for order {}", self.order()));
        }
        self.check_vectors(xs, Some(mode))?;
        let mut buf = self.data.clone();
        // Trailing modes first: the buffer shrinks to shape dims[..=mode].
        let mut len = buf.len();
        for k in (mode + 1..self.order()).rev() {
            let n = self.dims[k];
            let x = xs[k];
            len /= n;
            for r in 0..len {
                let s = buf[r * n..(r + 1) * n].iter().zip(x.iter()).map(|(a, b)| a * b).sum();
                buf[r] = s;
            }
        }
        // Leading modes: contract the slowest index of shape dims[k..=mode].
        for k in 0..mode {
            let n = self.dims[k];
            let x = xs[k];
            let stride = len / n;
            for r in 0..stride {
                let mut s = 0.0;
                for (i, &xi) in x.iter().enumerate() {
                    s += buf[i * stride + r] * xi;
                }
                buf[r] = s;
            }
            len = stride;
        }
        buf.truncate(self.dims[mode]);
        Ok(buf)
    }

    /// Average over every permutation class; requires equal dimensions.
    pub fn symmetrize(&self) -> Result<SuperSymmetricTensor> {
        let n = self
            .cubic_dim()
            .ok_or_else(|| Error::Shape(format!("cannot symmetrize non-cubic shape {:?}", self.dims)))?;
        let mut sums: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        let mut key = Vec::with_capacity(self.order());
        self.for_each(|idx, v| {
            key.clear();
            key.extend_from_slice(idx);
            key.sort_unstable();
            match sums.get_mut(&key) {
                Some(s) => *s += v,
                None => {
                    sums.insert(key.clone(), v);
                }
            }
        });
        let values = sums
            .into_iter()
            .filter_map(|(k, s)| {
                let avg = s / class_size(&k) as f64;
                (avg != 0.0).then_some((k, avg))
            })
            .collect();
        Ok(SuperSymmetricTensor {
            n,
            order: self.order(),
            values,
        })
    }
}

// ---------------------------------------------------------------------------
// Super-symmetric tensors
// ---------------------------------------------------------------------------

/// A tensor invariant under every permutation of its indices, stored once per
/// permutation class. Missing classes are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperSymmetricTensor {
    n: usize,
    order: usize,
    values: BTreeMap<Vec<usize>, f64>,
}

impl SuperSymmetricTensor {
    pub fn zeros(n: usize, order: usize) -> Result<Self> {
        if n == 0 || order == 0 {
            return shape(format!("dimension and order must be positive, got n={n}, m={order}"));
        }
        Ok(Self {
            n,
            order,
            values: BTreeMap::new(),
        })
    }

    /// Build from `(index, value)` pairs. Indices may be given in any order but
    /// two entries landing on the same permutation class are rejected.
    pub fn from_entries(n: usize, order: usize, entries: impl IntoIterator<Item = (Vec<usize>, f64)>) -> Result<Self> {
        let mut t = Self::zeros(n, order)?;
        for (idx, v) in entries {
            if idx.len() != order {
                return shape(format!("index {idx:?} has length {}, expected {order}", idx.len()));
            }
            let key = canonical_index(&idx, n)?;
            if t.values.insert(key.clone(), v).is_some() {
                return domain(format!("duplicate entry for permutation class {key:?}"));
            }
        }
        Ok(t)
    }

    /// Evaluate `f` once per canonical class; exact zeros are not stored.
    pub fn from_fn(n: usize, order: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(n, order)?;
        for key in canonical_indices(n, order) {
            let v = f(&key);
            if v != 0.0 {
                t.values.insert(key, v);
            }
        }
        Ok(t)
    }

    /// `lambda * a ⊗ a ⊗ ... ⊗ a` with `order` factors.
    pub fn rank_one(lambda: f64, a: &[f64], order: usize) -> Result<Self> {
        Self::from_fn(a.len(), order, |idx| {
            lambda * idx.iter().map(|&i| a[i]).product::<f64>()
        })
    }

    /// Symmetrization of a dense array with i.i.d. standard normal entries.
    pub fn random_gaussian(n: usize, order: usize, seed: u64) -> Result<Self> {
        GeneralTensor::random_gaussian(vec![n; order], seed)?.symmetrize()
    }

    /// Symmetrization of a dense array with i.i.d. uniform(-1, 1) entries.
    pub fn random_uniform(n: usize, order: usize, seed: u64) -> Result<Self> {
        GeneralTensor::random_uniform(vec![n; order], seed)?.symmetrize()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored (nonzero or explicitly set) classes.
    pub fn stored_len(&self) -> usize {
        self.values.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.values.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        if idx.len() != self.order {
            return shape(format!("index of length {} for order {}", idx.len(), self.order));
        }
        let key = canonical_index(idx, self.n)?;
        Ok(self.values.get(&key).copied().unwrap_or(0.0))
    }

    /// Value at an index already known to be canonical and in range.
    pub(crate) fn value_canonical(&self, key: &[usize]) -> f64 {
        self.values.get(key).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, idx: &[usize], value: f64) -> Result<()> {
        if idx.len() != self.order {
            return shape(format!("index of length {} for order {}", idx.len(), self.order));
        }
        let key = canonical_index(idx, self.n)?;
        self.values.insert(key, value);
        Ok(())
    }

    /// `F_{i...i}`.
    pub fn diagonal(&self, i: usize) -> f64 {
        self.value_canonical(&vec![i; self.order])
    }

    /// Index and value of the largest diagonal entry `F_{i...i}`.
    pub fn max_diagonal(&self) -> (usize, f64) {
        (0..self.n).map(|i| (i, self.diagonal(i))).fold(
            (0, f64::NEG_INFINITY),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        )
    }

    pub fn is_zero(&self) -> bool {
        self.values.values().all(|&v| v == 0.0)
    }

    pub fn to_dense(&self) -> GeneralTensor {
        let mut key = Vec::with_capacity(self.order);
        GeneralTensor::from_fn(vec![self.n; self.order], |idx| {
            key.clear();
            key.extend_from_slice(idx);
            key.sort_unstable();
            self.value_canonical(&key)
        })
        .expect("positive dims")
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.order != other.order {
            return shape(format!(
                "tensors live in different spaces: (n={}, m={}) vs (n={}, m={})",
                self.n, self.order, other.n, other.order
            ));
        }
        Ok(())
    }

    /// `sum over the full index space of f * g`, computed per class.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_space(other)?;
        Ok(self
            .values
            .iter()
            .map(|(k, &v)| class_size(k) as f64 * v * other.value_canonical(k))
            .sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner(self).expect("same space").sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut t = self.clone();
        t.values.values_mut().for_each(|v| *v *= c);
        t
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let mut t = self.clone();
        for (k, &v) in &other.values {
            *t.values.entry(k.clone()).or_insert(0.0) += c * v;
        }
        Ok(t)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return shape(format!("vector of length {} for dimension {}", x.len(), self.n));
        }
        Ok(())
    }

    /// Homogeneous form `F(x, ..., x)`.
    pub fn eval_homogeneous(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self
            .values
            .iter()
            .map(|(k, &v)| class_size(k) as f64 * v * k.iter().map(|&i| x[i]).product::<f64>())
            .sum())
    }

    /// `F(x, ..., x, ·)`: the vector `g` with `g_j = F(x, ..., x, e_j)`. The
    /// gradient of the homogeneous form is `order * g`.
    pub fn contract_homogeneous(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let m = self.order as f64;
        let mut g = vec![0.0; self.n];
        for (k, &v) in &self.values {
            let w = class_size(k) as f64 * v / m;
            let mut pos = 0;
            while pos < k.len() {
                let j = k[pos];
                let mut end = pos;
                while end < k.len() && k[end] == j {
                    end += 1;
                }
                let count = (end - pos) as f64;
                // Product over the index with one copy of j removed.
                let rest: f64 = k
                    .iter()
                    .enumerate()
                    .filter(|&(t, _)| t != pos)
                    .map(|(_, &i)| x[i])
                    .product();
                g[j] += w * count * rest;
                pos = end;
            }
        }
        Ok(g)
    }

    pub fn eval_multilinear(&self, xs: &[&[f64]]) -> Result<f64> {
        if xs.len() != self.order {
            return shape(format!("{} vectors for an order-{} tensor", xs.len(), self.order));
        }
        self.to_dense().eval_multilinear(xs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn canonical_index_examples() {
        assert_eq!(canonical_index(&[2, 0, 1, 0], 3).unwrap(), vec![0, 0, 1, 2]);
        assert_eq!(canonical_index(&[0, 0, 0, 0], 1).unwrap(), vec![0, 0, 0, 0]);
        assert_eq!(canonical_index(&[1, 0], 2).unwrap(), vec![0, 1]);
        assert!(matches!(canonical_index(&[3, 0], 3), Err(Error::Domain(_))));
    }

    #[test]
    fn class_size_examples() {
        assert_eq!(class_size(&[0, 0, 1, 1]), 6);
        assert_eq!(class_size(&[0, 1, 2]), 6);
        assert_eq!(class_size(&[0, 0, 0, 0]), 1);
    }

    #[test]
    fn multinomial_examples() {
        let s = |k: &[usize]| MonomialSignature::new(k.to_vec());
        assert_eq!(multinomial(2, &s(&[1, 1])).unwrap(), 2);
        assert_eq!(multinomial(2, &s(&[2, 0])).unwrap(), 1);
        assert_eq!(multinomial(3, &s(&[2, 1, 0])).unwrap(), 3);
        assert!(multinomial(3, &s(&[1, 1])).is_err());
    }

    #[test]
    fn signature_enumeration() {
        let sigs = enumerate_signatures(2, 2);
        let raw: Vec<_> = sigs.iter().map(|s| s.exponents().to_vec()).collect();
        assert_eq!(raw, vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(enumerate_signatures(3, 2).len(), 6);
        assert_eq!(
            enumerate_signatures(1, 5)
                .iter()
                .map(|s| s.exponents().to_vec())
                .collect::<Vec<_>>(),
            vec![vec![5]]
        );
    }

    #[test]
    fn multinomial_theorem_at_all_ones() {
        for n in 1..=6usize {
            for d in 0..=4usize {
                let total: u64 = enumerate_signatures(n, d).iter().map(|k| k.multinomial()).sum();
                assert_eq!(total, (n as u64).pow(d as u32), "n={n} d={d}");
                assert_eq!(
                    enumerate_signatures(n, d).len() as u64,
                    binomial((n + d - 1) as u64, d as u64)
                );
            }
        }
    }

    #[test]
    fn class_multiplicities_cover_index_space() {
        for n in 1..=4usize {
            for m in 1..=6usize {
                let classes = canonical_indices(n, m);
                assert_eq!(classes.len() as u64, binomial((n + m - 1) as u64, m as u64));
                let total: u64 = classes.iter().map(|c| class_size(c)).sum();
                assert_eq!(total, (n as u64).pow(m as u32));
            }
        }
    }

    #[test]
    fn even_index_round_trip() {
        let k = MonomialSignature::new(vec![1, 0, 2]);
        assert_eq!(k.even_index(), vec![0, 0, 2, 2, 2, 2]);
        assert_eq!(MonomialSignature::from_even_index(&k.even_index(), 3), Some(k));
        assert_eq!(MonomialSignature::from_even_index(&[0, 1], 2), None);
    }

    #[test]
    fn symmetrize_averages_class() {
        let t = GeneralTensor::new(vec![2, 2], vec![0.0, 4.0, 0.0, 0.0]).unwrap();
        let s = t.symmetrize().unwrap();
        assert_eq!(s.get(&[0, 1]).unwrap(), 2.0);
        assert_eq!(s.get(&[1, 0]).unwrap(), 2.0);
        assert!(matches!(
            GeneralTensor::zeros(vec![2, 3]).unwrap().symmetrize(),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn symmetrize_is_idempotent() {
        let t = GeneralTensor::random_gaussian(vec![3; 4], 11).unwrap();
        let once = t.symmetrize().unwrap();
        let twice = once.to_dense().symmetrize().unwrap();
        for (k, v) in once.entries() {
            assert!(close(v, twice.get(k).unwrap(), 1e-14));
        }
        assert_eq!(once.stored_len(), twice.stored_len());
    }

    #[test]
    fn symmetrize_preserves_homogeneous_form() {
        let t = GeneralTensor::random_gaussian(vec![3; 4], 5).unwrap();
        let s = t.symmetrize().unwrap();
        let mut rng = rng::seeded(6);
        for _ in 0..20 {
            let x = rng::unit_vector(&mut rng, 3);
            let dense = t.eval_multilinear(&[&x, &x, &x, &x]).unwrap();
            assert!(close(s.eval_homogeneous(&x).unwrap(), dense, 1e-12));
        }
    }

    #[test]
    fn eval_examples() {
        let a = [1.0, 1.0];
        let f = SuperSymmetricTensor::rank_one(1.0, &a, 4).unwrap();
        let e1 = [1.0, 0.0];
        assert_eq!(f.eval_multilinear(&[&e1, &e1, &e1, &e1]).unwrap(), 1.0);
        assert!(close(f.eval_homogeneous(&[1.0, 1.0]).unwrap(), 16.0, 1e-15));
        assert_eq!(f.eval_homogeneous(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(f.eval_homogeneous(&[1.0]).is_err());
    }

    #[test]
    fn eval_multilinear_matches_naive_loop() {
        let t = GeneralTensor::random_gaussian(vec![2, 3, 4], 3).unwrap();
        let xs: Vec<Vec<f64>> = vec![vec![0.3, -1.0], vec![1.0, 2.0, 0.5], vec![-0.2, 0.1, 0.7, 1.1]];
        let refs: Vec<&[f64]> = xs.iter().map(|v| v.as_slice()).collect();
        let mut naive = 0.0;
        t.for_each(|idx, v| naive += v * xs[0][idx[0]] * xs[1][idx[1]] * xs[2][idx[2]]);
        assert!(close(t.eval_multilinear(&refs).unwrap(), naive, 1e-13));
        assert!(t.eval_multilinear(&refs[..2]).is_err());
    }

    #[test]
    fn contract_except_matches_naive_loop() {
        let t = GeneralTensor::random_gaussian(vec![2, 3, 4, 2], 9).unwrap();
        let xs: Vec<Vec<f64>> = vec![
            vec![0.3, -1.0],
            vec![1.0, 2.0, 0.5],
            vec![-0.2, 0.1, 0.7, 1.1],
            vec![0.4, 0.9],
        ];
        let refs: Vec<&[f64]> = xs.iter().map(|v| v.as_slice()).collect();
        for mode in 0..4 {
            let g = t.contract_except(&refs, mode).unwrap();
            let mut naive = vec![0.0; t.dims()[mode]];
            t.for_each(|idx, v| {
                let w: f64 = (0..4).filter(|&k| k != mode).map(|k| xs[k][idx[k]]).product();
                naive[idx[mode]] += v * w;
            });
            for (a, b) in g.iter().zip(&naive) {
                assert!(close(*a, *b, 1e-13), "mode {mode}");
            }
        }
    }

    #[test]
    fn rank_one_examples() {
        let f = SuperSymmetricTensor::rank_one(1.0, &[1.0, 2.0], 2).unwrap();
        assert_eq!(f.get(&[0, 0]).unwrap(), 1.0);
        assert_eq!(f.get(&[0, 1]).unwrap(), 2.0);
        assert_eq!(f.get(&[1, 1]).unwrap(), 4.0);

        let g = SuperSymmetricTensor::rank_one(-1.0, &[1.0, 0.0], 4).unwrap();
        assert_eq!(g.stored_len(), 1);
        assert_eq!(g.get(&[0, 0, 0, 0]).unwrap(), -1.0);

        let a = [1.0, 1.0, 1.0];
        let h = SuperSymmetricTensor::rank_one(1.0, &a, 4).unwrap();
        assert!(close(h.eval_homogeneous(&a).unwrap(), 81.0, 1e-15));
    }

    #[test]
    fn inner_examples() {
        let f = SuperSymmetricTensor::random_gaussian(3, 4, 1).unwrap();
        let dense = f.to_dense();
        let ff: f64 = dense.data().iter().map(|v| v * v).sum();
        assert!(close(f.inner(&f).unwrap(), ff, 1e-13));

        let e1 = SuperSymmetricTensor::rank_one(1.0, &[1.0, 0.0], 2).unwrap();
        let e2 = SuperSymmetricTensor::rank_one(1.0, &[0.0, 1.0], 2).unwrap();
        assert_eq!(e1.inner(&e2).unwrap(), 0.0);

        let g = SuperSymmetricTensor::random_gaussian(3, 4, 2).unwrap();
        let naive: f64 = dense.data().iter().zip(g.to_dense().data()).map(|(a, b)| a * b).sum();
        assert!(close(f.inner(&g).unwrap(), naive, 1e-13));

        let x = [0.6, 0.0, 0.8];
        let r = SuperSymmetricTensor::rank_one(1.0, &x, 4).unwrap();
        assert!(close(f.inner(&r).unwrap(), f.eval_homogeneous(&x).unwrap(), 1e-12));
    }

    #[test]
    fn random_gaussian_is_deterministic() {
        let a = SuperSymmetricTensor::random_gaussian(4, 3, 42).unwrap();
        let b = SuperSymmetricTensor::random_gaussian(4, 3, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, SuperSymmetricTensor::random_gaussian(4, 3, 43).unwrap());
    }

    #[test]
    fn random_gaussian_entry_has_zero_mean() {
        let key = [0usize, 1, 2, 3];
        let trials = 10_000;
        let mean: f64 = (0..trials)
            .map(|s| {
                SuperSymmetricTensor::random_gaussian(4, 4, s)
                    .unwrap()
                    .get(&key)
                    .unwrap()
            })
            .sum::<f64>()
            / trials as f64;
        // The entry averages 24 normals: standard deviation of the mean is ~0.002.
        assert!(mean.abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn contract_homogeneous_is_scaled_gradient() {
        let f = SuperSymmetricTensor::random_gaussian(3, 4, 8).unwrap();
        let x = [0.2, -0.7, 0.4];
        let g = f.contract_homogeneous(&x).unwrap();
        let h = 1e-6;
        for j in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fd = (f.eval_homogeneous(&xp).unwrap() - f.eval_homogeneous(&xm).unwrap()) / (2.0 * h);
            assert!((4.0 * g[j] - fd).abs() < 1e-7);
        }
    }

    #[test]
    fn duplicate_canonical_entries_are_rejected() {
        let err = SuperSymmetricTensor::from_entries(2, 2, vec![(vec![0, 1], 1.0), (vec![1, 0], 2.0)]);
        assert!(matches!(err, Err(Error::Domain(_))));
    }
}
