//! Reductions of non-super-symmetric problems to the matrix relaxations.
//!
//! * bi-quadratic: `max G(x, y, x, y)` over unit `x`, `y`, for a
//!   partial-symmetric `G`, through its own SDP relaxation;
//! * tri-linear and quadri-linear forms, rewritten as bi-quadratic forms;
//! * even-order multilinear forms, embedded in one super-symmetric tensor
//!   over the stacked blocks;
//! * odd orders, squared into an even order.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::admm::{run_admm, Method, SolverConfig, Termination};
use crate::error::{domain, shape, Error, Result};
use crate::extraction::{mbi_refine, PrincipalComponent};
use crate::matricize::{matr_partial, normalize_sign, rank_one_ratio, SymmetricMatrix};
use crate::projection::ClassProjector;
use crate::rng;
use crate::tensor::{linear_index, GeneralTensor, SuperSymmetricTensor};

const PARTIAL_TOL: f64 = 1e-12;
const FALLBACK_RESTARTS: usize = 5;

/// Fourth-order tensor over `(n, m, n, m)` with
/// `G[i, j, k, l] = G[k, j, i, l] = G[i, l, k, j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSymmetricTensor {
    n: usize,
    m: usize,
    data: GeneralTensor,
}

/// The orbit of `(i, j, k, l)` under the two swaps, identity first.
fn orbit(idx: [usize; 4]) -> [[usize; 4]; 4] {
    let [i, j, k, l] = idx;
    [[i, j, k, l], [k, j, i, l], [i, l, k, j], [k, l, i, j]]
}

impl PartialSymmetricTensor {
    /// Wraps a dense `(n, m, n, m)` tensor, checking the symmetry.
    pub fn new(data: GeneralTensor) -> Result<Self> {
        let (n, m) = Self::check_dims(data.dims())?;
        let g = Self { n, m, data };
        let scale = g.data.data().iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let violation = g.symmetry_violation();
        if violation > PARTIAL_TOL * scale {
            return domain(format!("tensor is not partial-symmetric (violation {violation:e})"));
        }
        Ok(g)
    }

    fn check_dims(dims: &[usize]) -> Result<(usize, usize)> {
        match dims {
            [n, m, n2, m2] if n == n2 && m == m2 && *n > 0 && *m > 0 => Ok((*n, *m)),
            _ => shape(format!("expected dims (n, m, n, m), got {dims:?}")),
        }
    }

    /// Average over the partial-symmetry orbit of every entry.
    pub fn symmetrize(t: &GeneralTensor) -> Result<Self> {
        let (n, m) = Self::check_dims(t.dims())?;
        let dims = t.dims().to_vec();
        let src = t.data();
        let data = GeneralTensor::from_fn(dims.clone(), |idx| {
            // Sum in a fixed order so every orbit member gets the same bits.
            let mut o = orbit([idx[0], idx[1], idx[2], idx[3]]);
            o.sort_unstable();
            o.iter().map(|p| src[linear_index(p, &dims)]).sum::<f64>() / 4.0
        })?;
        Ok(Self { n, m, data })
    }

    pub fn zeros(n: usize, m: usize) -> Result<Self> {
        Self::new(GeneralTensor::zeros(vec![n, m, n, m])?)
    }

    /// `lambda a (x) b (x) a (x) b`.
    pub fn rank_one(lambda: f64, a: &[f64], b: &[f64]) -> Result<Self> {
        let t = GeneralTensor::outer(&[a, b, a, b])?;
        let data: Vec<f64> = t.data().iter().map(|v| lambda * v).collect();
        Self::new(GeneralTensor::new(t.dims().to_vec(), data)?)
    }

    /// Symmetrized tensor with i.i.d. standard normal entries before averaging.
    pub fn random_gaussian(n: usize, m: usize, seed: u64) -> Result<Self> {
        Self::symmetrize(&GeneralTensor::random_gaussian(vec![n, m, n, m], seed)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dense(&self) -> &GeneralTensor {
        &self.data
    }

    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        self.data.get(idx)
    }

    /// Largest `|G[p] - G[q]|` over orbit pairs.
    pub fn symmetry_violation(&self) -> f64 {
        let dims = self.data.dims().to_vec();
        let src = self.data.data();
        let mut worst = 0.0f64;
        self.data.for_each(|idx, v| {
            for p in &orbit([idx[0], idx[1], idx[2], idx[3]])[1..] {
                worst = worst.max((v - src[linear_index(p, &dims)]).abs());
            }
        });
        worst
    }

    /// `G(x, y, x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.data.eval_multilinear(&[x, y, x, y])
    }
}

/// Projector onto `{ X : tr X = 1, matr_partial^{-1}(X) partial-symmetric }`.
/// Orbits have at most four entries and the only orbits touching the
/// diagonal are the singletons `(i, j, i, j)`, so the projection averages
/// each orbit and then adds `(1 - tr) / (nm)` to the diagonal.
fn partial_projector(n: usize, m: usize) -> ClassProjector {
    let size = n * m;
    ClassProjector::new(size, size * size, |r, c| {
        let (i, j, k, l) = (r / m, r % m, c / m, c % m);
        let canon = [i.min(k), j.min(l), i.max(k), j.max(l)];
        (canon[0] * m + canon[1]) * size + canon[2] * m + canon[3]
    })
}

/// Projection onto the bi-quadratic feasible set.
pub fn project_partial(z: &SymmetricMatrix, n: usize, m: usize) -> Result<SymmetricMatrix> {
    if z.size() != n * m {
        return shape(format!("matrix of size {} for n={n}, m={m}", z.size()));
    }
    Ok(partial_projector(n, m).project(z.matrix()).0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiquadraticSolution {
    /// `G(x*, y*, x*, y*)`.
    pub lambda_star: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub certified: bool,
    /// `tr(G X)` at the relaxation's solution.
    pub objective: f64,
    pub rank_one_ratio: f64,
    pub iterations: usize,
    pub termination: Termination,
}

/// Left and right dominant singular vectors of an `n x m` matrix.
fn dominant_pair(a: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let left = SymmetricEigen::new(a * a.transpose());
    let mut x: Vec<f64> = left
        .eigenvectors
        .column(left.eigenvalues.imax())
        .iter()
        .copied()
        .collect();
    let right = SymmetricEigen::new(a.transpose() * a);
    let mut y: Vec<f64> = right
        .eigenvectors
        .column(right.eigenvalues.imax())
        .iter()
        .copied()
        .collect();
    normalize_sign(&mut x);
    normalize_sign(&mut y);
    (x, y)
}

fn best_of_blocks(g: &PartialSymmetricTensor, blocks: &[Vec<f64>]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let mut best = (f64::NEG_INFINITY, blocks[0].clone(), blocks[1].clone());
    for xi in [0, 2] {
        for yi in [1, 3] {
            let v = g.eval(&blocks[xi], &blocks[yi])?;
            if v > best.0 {
                best = (v, blocks[xi].clone(), blocks[yi].clone());
            }
        }
    }
    Ok(best)
}

/// MBI over `(x, y, x, y)` on `G + shift (x^T x)(y^T y)`.
fn biquadratic_fallback(
    g: &PartialSymmetricTensor,
    x0: &[f64],
    y0: &[f64],
    seed: u64,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (n, m) = (g.n, g.m);
    let shift = 6.0 * g.data.frobenius_norm().max(1.0);
    let src = g.data.data().to_vec();
    let dims = vec![n, m, n, m];
    let form = GeneralTensor::from_fn(dims.clone(), |idx| {
        let base = src[linear_index(idx, &dims)];
        if idx[0] == idx[2] && idx[1] == idx[3] {
            base + shift
        } else {
            base
        }
    })?;
    let mut r = rng::seeded(seed);
    let mut starts = vec![(x0.to_vec(), y0.to_vec())];
    starts.extend((0..FALLBACK_RESTARTS).map(|_| (rng::unit_vector(&mut r, n), rng::unit_vector(&mut r, m))));
    let mut best = (f64::NEG_INFINITY, x0.to_vec(), y0.to_vec());
    for (xs, ys) in starts {
        let run = mbi_refine(&form, &[xs.clone(), ys.clone(), xs, ys], 1e-12, 10_000)?;
        let cand = best_of_blocks(g, &run.blocks)?;
        if cand.0 > best.0 {
            best = cand;
        }
    }
    Ok(best)
}

/// SDP relaxation of the bi-quadratic problem, solved by ADMM.
pub fn solve_biquadratic(g: &PartialSymmetricTensor, cfg: &SolverConfig) -> Result<BiquadraticSolution> {
    let (n, m) = (g.n, g.m);
    let gmat = matr_partial(g)?;
    if gmat.matrix().amax() == 0.0 {
        return Err(Error::Degenerate("the zero tensor has no principal component".into()));
    }
    let size = n * m;
    let best = (0..size)
        .max_by(|&a, &b| gmat.get(a, a).total_cmp(&gmat.get(b, b)))
        .unwrap_or(0);
    let mut e = vec![0.0; size];
    e[best] = 1.0;
    let y0 = SymmetricMatrix::outer(&e);
    let projector = partial_projector(n, m);
    let out = run_admm(&gmat, y0, |z| projector.project(z).0, Method::Sdp, cfg)?;

    let objective = gmat.dot(&out.x);
    let diag = rank_one_ratio(&out.x)?;
    let a = DMatrix::from_row_slice(n, m, &diag.eigenvector);
    let (x, y) = dominant_pair(&a);
    let certified = diag.is_rank_one(cfg.rank_tol);
    let (lambda_star, x, y) = if certified {
        (g.eval(&x, &y)?, x, y)
    } else {
        biquadratic_fallback(g, &x, &y, cfg.seed)?
    };
    Ok(BiquadraticSolution {
        lambda_star,
        x,
        y,
        certified,
        objective,
        rank_one_ratio: diag.ratio,
        iterations: out.iterations,
        termination: out.termination,
    })
}

/// `G[i, j, u, v] = sum_k (F[i, j, k] F[u, v, k] + F[i, v, k] F[u, j, k]) / 2`,
/// so that `G(x, y, x, y) = ||F(x, y, .)||^2`.
pub fn trilinear_to_biquadratic(f: &GeneralTensor) -> Result<PartialSymmetricTensor> {
    let [n, m, l] = match f.dims() {
        [a, b, c] => [*a, *b, *c],
        dims => return domain(format!("tri-linear reduction needs order 3, got dims {dims:?}")),
    };
    let src = f.data();
    let at = |i: usize, j: usize, k: usize| src[(i * m + j) * l + k];
    let data = GeneralTensor::from_fn(vec![n, m, n, m], |idx| {
        let (i, j, u, v) = (idx[0], idx[1], idx[2], idx[3]);
        (0..l)
            .map(|k| at(i, j, k) * at(u, v, k) + at(i, v, k) * at(u, j, k))
            .sum::<f64>()
            / 2.0
    })?;
    PartialSymmetricTensor::new(data)
}

/// Stacked-block bookkeeping for an embedding into one larger dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockEmbedding {
    pub block_offsets: Vec<usize>,
    pub block_sizes: Vec<usize>,
    pub total_dim: usize,
}

impl BlockEmbedding {
    pub fn new(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return shape(format!("block sizes must be positive, got {sizes:?}"));
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut acc = 0;
        for s in sizes {
            offsets.push(acc);
            acc += s;
        }
        Ok(Self {
            block_offsets: offsets,
            block_sizes: sizes.to_vec(),
            total_dim: acc,
        })
    }

    pub fn stack(&self, blocks: &[&[f64]]) -> Result<Vec<f64>> {
        if blocks.len() != self.block_sizes.len() || blocks.iter().zip(&self.block_sizes).any(|(b, s)| b.len() != *s) {
            return shape("block lengths do not match the embedding");
        }
        Ok(blocks.iter().flat_map(|b| b.iter().copied()).collect())
    }

    pub fn split(&self, y: &[f64]) -> Result<Vec<Vec<f64>>> {
        if y.len() != self.total_dim {
            return shape(format!(
                "vector of length {} for total dimension {}",
                y.len(),
                self.total_dim
            ));
        }
        Ok(self
            .block_offsets
            .iter()
            .zip(&self.block_sizes)
            .map(|(o, s)| y[*o..o + s].to_vec())
            .collect())
    }

    /// Splits and normalizes every block; a zero block is degenerate.
    pub fn split_normalized(&self, y: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.split(y)?
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm <= 1e-12 {
                    Err(Error::Degenerate(format!("block {i} vanished at recovery")))
                } else {
                    Ok(b.iter().map(|v| v / norm).collect())
                }
            })
            .collect()
    }
}

/// Partial-symmetric tensor over `(n1 + n3, n2 + n4, n1 + n3, n2 + n4)` whose
/// value at `((x1; x3), (x2; x4))` is `F(x1, x2, x3, x4)`.
pub fn quadrilinear_to_biquadratic(f: &GeneralTensor) -> Result<PartialSymmetricTensor> {
    let [n1, n2, n3, n4] = match f.dims() {
        [a, b, c, d] => [*a, *b, *c, *d],
        dims => return domain(format!("quadri-linear reduction needs order 4, got dims {dims:?}")),
    };
    let (p, q) = (n1 + n3, n2 + n4);
    // Zero-padded copy: F sits in the block (first, first, second, second).
    let mut padded = GeneralTensor::zeros(vec![p, q, p, q])?;
    f.for_each(|idx, v| {
        let at = [idx[0], idx[1], n1 + idx[2], n2 + idx[3]];
        padded.set(&at, v).expect("index within padded dims");
    });
    let dims = vec![p, q, p, q];
    let src = padded.data();
    let data = GeneralTensor::from_fn(dims.clone(), |idx| {
        let (a, b, c, d) = (idx[0], idx[1], idx[2], idx[3]);
        let g = |i: [usize; 4]| src[linear_index(&i, &dims)];
        (g([a, b, c, d]) + g([a, d, c, b]) + g([c, b, a, d]) + g([c, d, a, b])) / 4.0
    })?;
    PartialSymmetricTensor::new(data)
}

/// Super-symmetric tensor over the stacked dimension `sum n_i` with
/// `T(y, ..., y) = F(y_1, ..., y_{2d})` for the blocks `y_i` of `y`.
pub fn multilinear_embed(f: &GeneralTensor) -> Result<(SuperSymmetricTensor, BlockEmbedding)> {
    let order = f.order();
    if order == 0 || !order.is_multiple_of(2) {
        return domain(format!("multilinear embedding needs an even order, got {order}"));
    }
    let emb = BlockEmbedding::new(f.dims())?;
    let big = vec![emb.total_dim; order];
    let mut g = GeneralTensor::zeros(big)?;
    let mut at = vec![0usize; order];
    f.for_each(|idx, v| {
        for (k, i) in idx.iter().enumerate() {
            at[k] = emb.block_offsets[k] + i;
        }
        g.set(&at, v).expect("index within embedded dims");
    });
    Ok((g.symmetrize()?, emb))
}

/// `G = sym(sum_k F[.., k] (x) F[.., k])`, of order `4d` for `F` of order
/// `2d + 1`, so that `G(x, ..., x) = ||F(x, ..., x, .)||^2`.
pub fn odd_to_even(f: &SuperSymmetricTensor) -> Result<SuperSymmetricTensor> {
    let order = f.order();
    if order.is_multiple_of(2) || order < 3 {
        return domain(format!("odd_to_even needs an odd order of at least 3, got {order}"));
    }
    let n = f.n();
    let dense = f.to_dense();
    let rows = n.pow((order - 1) as u32);
    // Unfold as rows x n with the last index as column, then form M M^T.
    let m = DMatrix::from_row_slice(rows, n, dense.data());
    let h = &m * m.transpose();
    let data: Vec<f64> = (0..rows)
        .flat_map(|r| h.row(r).iter().copied().collect::<Vec<_>>())
        .collect();
    let t = GeneralTensor::new(vec![n; 2 * (order - 1)], data)?;
    t.symmetrize()
}

/// Principal component of an odd-order `F` from a direction found on its
/// squared tensor: the sign makes `F(x, ..., x) >= 0`.
pub fn odd_component(f: &SuperSymmetricTensor, x: &[f64], certified: bool) -> Result<PrincipalComponent> {
    let mut x = x.to_vec();
    let mut v = f.eval_homogeneous(&x)?;
    if v < 0.0 {
        x.iter_mut().for_each(|a| *a = -*a);
        v = -v;
    }
    if v == 0.0 {
        normalize_sign(&mut x);
    }
    Ok(PrincipalComponent {
        lambda_star: v,
        x_star: x,
        certified,
    })
}

/// Solution of a multilinear problem `max F(x^1, ..., x^p)` over unit blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearSolution {
    /// `F` evaluated at `blocks`.
    pub value: f64,
    pub blocks: Vec<Vec<f64>>,
    pub certified: bool,
    pub iterations: usize,
}

/// `max F(x, y, z)` through the bi-quadratic form of `||F(x, y, .)||^2`.
pub fn solve_trilinear(f: &GeneralTensor, cfg: &SolverConfig) -> Result<MultilinearSolution> {
    let g = trilinear_to_biquadratic(f)?;
    let sol = solve_biquadratic(&g, cfg)?;
    let w = f.contract_except(&[&sol.x, &sol.y, &[]], 2)?;
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Degenerate("F(x, y, .) vanished at the recovered pair".into()));
    }
    let z: Vec<f64> = w.iter().map(|v| v / norm).collect();
    let value = f.eval_multilinear(&[&sol.x, &sol.y, &z])?;
    Ok(MultilinearSolution {
        value,
        blocks: vec![sol.x, sol.y, z],
        certified: sol.certified,
        iterations: sol.iterations,
    })
}

/// Flips the sign of the last block when that makes the value positive.
fn fix_last_sign(f: &GeneralTensor, blocks: &mut [Vec<f64>]) -> Result<f64> {
    let refs: Vec<&[f64]> = blocks.iter().map(Vec::as_slice).collect();
    let v = f.eval_multilinear(&refs)?;
    if v < 0.0 {
        let last = blocks.len() - 1;
        blocks[last].iter_mut().for_each(|a| *a = -*a);
        return Ok(-v);
    }
    Ok(v)
}

/// `max F(x1, x2, x3, x4)` through the padded bi-quadratic form.
pub fn solve_quadrilinear(f: &GeneralTensor, cfg: &SolverConfig) -> Result<MultilinearSolution> {
    let t = quadrilinear_to_biquadratic(f)?;
    let sol = solve_biquadratic(&t, cfg)?;
    let d = f.dims();
    let ex = BlockEmbedding::new(&[d[0], d[2]])?.split_normalized(&sol.x)?;
    let ey = BlockEmbedding::new(&[d[1], d[3]])?.split_normalized(&sol.y)?;
    let mut blocks = vec![ex[0].clone(), ey[0].clone(), ex[1].clone(), ey[1].clone()];
    let value = fix_last_sign(f, &mut blocks)?;
    Ok(MultilinearSolution {
        value,
        blocks,
        certified: sol.certified,
        iterations: sol.iterations,
    })
}

/// `max F(x^1, ..., x^{2d})` through the super-symmetric embedding.
pub fn solve_multilinear(f: &GeneralTensor, method: Method, cfg: &SolverConfig) -> Result<MultilinearSolution> {
    let (t, emb) = multilinear_embed(f)?;
    if t.is_zero() {
        return Err(Error::Degenerate("the zero tensor has no principal component".into()));
    }
    let (pc, report) = crate::extraction::solve_leading_pc(&t, method, cfg)?;
    let mut blocks = emb.split_normalized(&pc.x_star)?;
    let value = fix_last_sign(f, &mut blocks)?;
    Ok(MultilinearSolution {
        value,
        blocks,
        certified: pc.certified,
        iterations: report.iterations,
    })
}
