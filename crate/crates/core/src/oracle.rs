//! Brute-force references for small instances.
//!
//! Everything here trades speed for independence from the solver code paths:
//! grid searches over spheres with a local polish, a dense equality-constrained
//! least-squares projection, and multistart local ascent.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{domain, shape, Error, Result};
use crate::extensions::PartialSymmetricTensor;
use crate::extraction::{mbi_refine, orient, shifted_dense, MBI_SHIFT};
use crate::matricize::{group_indices, SymmetricMatrix};
use crate::rng;
use crate::tensor::{GeneralTensor, SuperSymmetricTensor};

/// Largest matrix size accepted by the dense KKT solvers.
pub const KKT_MAX_SIZE: usize = 36;
/// Largest number of grid combinations evaluated by the multilinear grid.
pub const GRID_MAX_POINTS: usize = 20_000_000;
const POLISH_CANDIDATES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    /// One unit vector per block (a single entry for homogeneous forms).
    pub argmax: Vec<Vec<f64>>,
    pub grid_resolution: usize,
    pub polished: bool,
}

/// Default grid resolution per angle.
pub fn default_resolution(n: usize) -> usize {
    if n <= 2 {
        720
    } else {
        180
    }
}

/// Points on the unit sphere in `R^n`, `n <= 3`, covering every direction up
/// to sign: a half circle for `n = 2`, and `theta in [0, pi]`, `phi in [0, pi)`
/// for `n = 3`.
pub fn hemisphere_grid(n: usize, resolution: usize) -> Result<Vec<Vec<f64>>> {
    if resolution == 0 {
        return domain("grid resolution must be positive");
    }
    let step = std::f64::consts::PI / resolution as f64;
    match n {
        1 => Ok(vec![vec![1.0]]),
        2 => Ok((0..resolution)
            .map(|k| {
                let t = k as f64 * step;
                vec![t.cos(), t.sin()]
            })
            .collect()),
        3 => {
            let mut pts = Vec::with_capacity((resolution + 1) * resolution);
            for i in 0..=resolution {
                let theta = i as f64 * step;
                for j in 0..resolution {
                    let phi = j as f64 * step;
                    pts.push(vec![theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
                }
            }
            Ok(pts)
        }
        _ => Err(Error::CostGuard(format!(
            "sphere grids are limited to n <= 3, got n = {n}"
        ))),
    }
}

fn full_sphere_grid(n: usize, resolution: usize) -> Result<Vec<Vec<f64>>> {
    let half = hemisphere_grid(n, resolution)?;
    let neg: Vec<Vec<f64>> = half.iter().map(|p| p.iter().map(|v| -v).collect()).collect();
    Ok(half.into_iter().chain(neg).collect())
}

fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (norm > 0.0).then(|| v.iter().map(|a| a / norm).collect())
}

/// Projected gradient ascent with backtracking on `F(x, ..., x)` over the
/// unit sphere.
fn polish_homogeneous(f: &SuperSymmetricTensor, x0: &[f64]) -> Result<(f64, Vec<f64>)> {
    let order = f.order() as f64;
    let mut x = x0.to_vec();
    let mut value = f.eval_homogeneous(&x)?;
    let mut step = 1.0;
    for _ in 0..5000 {
        let g: Vec<f64> = f.contract_homogeneous(&x)?.iter().map(|v| order * v).collect();
        let mut improved = false;
        while step > 1e-16 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            if let Some(t) = normalized(&trial) {
                let v = f.eval_homogeneous(&t)?;
                if v > value {
                    improved = v - value > 1e-16 * value.abs().max(1.0);
                    x = t;
                    value = v;
                    step *= 2.0;
                    break;
                }
            }
            step /= 2.0;
        }
        if !improved {
            break;
        }
    }
    Ok((value, x))
}

/// Indices of the `k` largest values, ties broken by lowest index.
fn top_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Global maximum of `F(x, ..., x)` on the unit sphere for `n <= 3`, by grid
/// search followed by a local polish of the best grid points. Odd orders use
/// the full sphere.
pub fn sphere_grid_max(f: &SuperSymmetricTensor, resolution: usize) -> Result<OracleResult> {
    let n = f.n();
    let grid = if f.order().is_multiple_of(2) {
        hemisphere_grid(n, resolution)?
    } else {
        full_sphere_grid(n, resolution)?
    };
    let values = grid
        .iter()
        .map(|p| f.eval_homogeneous(p))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = (f64::NEG_INFINITY, grid[0].clone());
    for i in top_indices(&values, POLISH_CANDIDATES) {
        let (v, x) = polish_homogeneous(f, &grid[i])?;
        if v > best.0 {
            best = (v, x);
        }
    }
    let (value, x) = if f.order().is_multiple_of(2) {
        orient(f, best.1)?
    } else {
        (best.0, best.1)
    };
    Ok(OracleResult {
        value,
        argmax: vec![x],
        grid_resolution: resolution,
        polished: true,
    })
}

/// Dense solve of `min ||x - z||^2 s.t. A x = b` through `(A A^T)^{-1}`.
fn equality_ls(z: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let gram = a * a.transpose();
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Degenerate("constraint matrix lost full row rank".into()))?;
    let resid = a * z - b;
    Ok(z - a.transpose() * chol.solve(&resid))
}

/// Equality-constrained least squares onto matrices that are constant on the
/// classes given by `key` and have unit trace. One chain of equalities per
/// class plus the trace row.
fn kkt_classes<K: std::hash::Hash + Eq>(
    z: &SymmetricMatrix,
    key: impl Fn(usize, usize) -> K,
) -> Result<SymmetricMatrix> {
    let size = z.size();
    if size > KKT_MAX_SIZE {
        return Err(Error::CostGuard(format!(
            "dense KKT solve limited to size {KKT_MAX_SIZE}, got {size}"
        )));
    }
    let vars = size * size;
    let mut classes: HashMap<K, Vec<usize>> = HashMap::new();
    for r in 0..size {
        for c in 0..size {
            let k = key(r, c);
            classes.entry(k).or_default().push(r * size + c);
        }
    }
    let mut rows: Vec<(usize, usize)> = Vec::new();
    for members in classes.values() {
        for w in members.windows(2) {
            rows.push((w[0], w[1]));
        }
    }
    let m = rows.len() + 1;
    let mut a = DMatrix::<f64>::zeros(m, vars);
    for (i, (p, q)) in rows.iter().enumerate() {
        a[(i, *p)] = 1.0;
        a[(i, *q)] = -1.0;
    }
    for d in 0..size {
        a[(m - 1, d * size + d)] = 1.0;
    }
    let mut b = DVector::zeros(m);
    b[m - 1] = 1.0;
    let zv = DVector::from_iterator(vars, (0..vars).map(|k| z.get(k / size, k % size)));
    let x = equality_ls(&zv, &a, &b)?;
    Ok(SymmetricMatrix::from_symmetric_part(DMatrix::from_fn(
        size,
        size,
        |r, c| x[r * size + c],
    )))
}

/// Reference projection onto `C` by a dense KKT solve.
pub fn kkt_project(z: &SymmetricMatrix, n: usize, d: usize) -> Result<SymmetricMatrix> {
    if n.checked_pow(d as u32) != Some(z.size()) {
        return shape(format!("matrix of size {} for n={n}, d={d}", z.size()));
    }
    kkt_classes(z, |r, c| {
        let mut k = group_indices(r, n, d);
        k.extend(group_indices(c, n, d));
        k.sort_unstable();
        k
    })
}

/// Reference projection onto the bi-quadratic feasible set.
pub fn kkt_project_partial(z: &SymmetricMatrix, n: usize, m: usize) -> Result<SymmetricMatrix> {
    if z.size() != n * m {
        return shape(format!("matrix of size {} for n={n}, m={m}", z.size()));
    }
    kkt_classes(z, |r, c| {
        let (i, j, k, l) = (r / m, r % m, c / m, c % m);
        let mut orbit = [[i, j, k, l], [k, j, i, l], [i, l, k, j], [k, l, i, j]];
        orbit.sort_unstable();
        orbit[0]
    })
}

/// Best local maximum of `F(x, ..., x)` over `restarts` random starts. For
/// even orders each start runs block ascent on `F(x, ..., x) + 6 (x^T x)^d`
/// and the best block is then polished on `F` itself; odd orders go straight
/// to the polish.
pub fn multistart_local(f: &SuperSymmetricTensor, restarts: usize, seed: u64) -> Result<OracleResult> {
    if restarts == 0 {
        return domain("at least one restart is needed");
    }
    let even = f.order().is_multiple_of(2);
    let form = if even { Some(shifted_dense(f, MBI_SHIFT)?) } else { None };
    let mut r = rng::seeded(seed);
    let mut best = (f64::NEG_INFINITY, vec![]);
    for _ in 0..restarts {
        let start = rng::unit_vector(&mut r, f.n());
        let candidates = match &form {
            Some(form) => mbi_refine(form, &vec![start; form.order()], 1e-12, 10_000)?.blocks,
            None => vec![start],
        };
        for b in &candidates {
            let (v, x) = polish_homogeneous(f, b)?;
            if v > best.0 {
                best = (v, x);
            }
        }
    }
    let (value, x) = if even { orient(f, best.1)? } else { best };
    Ok(OracleResult {
        value,
        argmax: vec![x],
        grid_resolution: 0,
        polished: true,
    })
}

/// Top eigenpair of a symmetric matrix.
fn top_eigen(m: DMatrix<f64>) -> (f64, Vec<f64>) {
    let e = SymmetricEigen::new(m);
    let k = e.eigenvalues.imax();
    (e.eigenvalues[k], e.eigenvectors.column(k).iter().copied().collect())
}

/// `M[j, l] = sum_{i, k} G[i, j, k, l] x_i x_k`.
fn y_quadratic(g: &PartialSymmetricTensor, x: &[f64]) -> DMatrix<f64> {
    let (n, m) = (g.n(), g.m());
    let data = g.dense().data();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..n {
        for k in 0..n {
            let w = x[i] * x[k];
            if w == 0.0 {
                continue;
            }
            for j in 0..m {
                for l in 0..m {
                    out[(j, l)] += w * data[((i * m + j) * n + k) * m + l];
                }
            }
        }
    }
    out
}

/// `M[i, k] = sum_{j, l} G[i, j, k, l] y_j y_l`.
fn x_quadratic(g: &PartialSymmetricTensor, y: &[f64]) -> DMatrix<f64> {
    let (n, m) = (g.n(), g.m());
    let data = g.dense().data();
    DMatrix::from_fn(n, n, |i, k| {
        let mut s = 0.0;
        for j in 0..m {
            for l in 0..m {
                s += data[((i * m + j) * n + k) * m + l] * y[j] * y[l];
            }
        }
        s
    })
}

/// Global maximum of `G(x, y, x, y)` for `n <= 3`: grid over `x`, exact
/// maximization over `y` by the top eigenvector, then alternating polish.
pub fn biquadratic_grid_max(g: &PartialSymmetricTensor, resolution: usize) -> Result<OracleResult> {
    let grid = hemisphere_grid(g.n(), resolution)?;
    let values: Vec<f64> = grid.iter().map(|x| top_eigen(y_quadratic(g, x)).0).collect();
    let mut best = (f64::NEG_INFINITY, vec![], vec![]);
    for i in top_indices(&values, POLISH_CANDIDATES) {
        let mut x = grid[i].clone();
        let (mut v, mut y) = top_eigen(y_quadratic(g, &x));
        for _ in 0..10_000 {
            let (_, nx) = top_eigen(x_quadratic(g, &y));
            let (nv, ny) = top_eigen(y_quadratic(g, &nx));
            let gain = nv - v;
            x = nx;
            y = ny;
            v = v.max(nv);
            if gain <= 1e-15 * v.abs().max(1.0) {
                break;
            }
        }
        let v = g.eval(&x, &y)?;
        if v > best.0 {
            best = (v, x, y);
        }
    }
    Ok(OracleResult {
        value: best.0,
        argmax: vec![best.1, best.2],
        grid_resolution: resolution,
        polished: true,
    })
}

/// `F(x^1, ..., x^{p-2}, ., .)` as a matrix.
fn last_two(f: &GeneralTensor, xs: &[&[f64]]) -> DMatrix<f64> {
    let dims = f.dims();
    let p = dims.len();
    let (a, b) = (dims[p - 2], dims[p - 1]);
    let mut buf = f.data().to_vec();
    let mut len = buf.len();
    for (k, x) in xs.iter().enumerate() {
        let stride = len / dims[k];
        for r in 0..stride {
            let mut s = 0.0;
            for (i, &xi) in x.iter().enumerate() {
                s += buf[i * stride + r] * xi;
            }
            buf[r] = s;
        }
        len = stride;
    }
    DMatrix::from_row_slice(a, b, &buf[..a * b])
}

/// Global maximum of `F(x^1, ..., x^p)` over unit blocks for `p >= 2`: grid
/// over the first `p - 2` blocks (each of dimension at most 3), the last two
/// blocks exactly by the top singular pair, then block-ascent polish.
pub fn multilinear_grid_max(f: &GeneralTensor, resolution: usize) -> Result<OracleResult> {
    let dims = f.dims().to_vec();
    let p = dims.len();
    if p < 2 {
        return domain("multilinear grid needs at least two blocks");
    }
    let grids = dims[..p - 2]
        .iter()
        .map(|&n| hemisphere_grid(n, resolution))
        .collect::<Result<Vec<_>>>()?;
    let total = grids.iter().try_fold(1usize, |acc, g| acc.checked_mul(g.len()));
    match total {
        Some(t) if t <= GRID_MAX_POINTS => {}
        _ => return Err(Error::CostGuard("multilinear grid too large".into())),
    }
    let total = total.unwrap_or(0);
    let point = |mut lin: usize| -> Vec<&[f64]> {
        let mut out = vec![&[][..]; p - 2];
        for k in (0..p - 2).rev() {
            out[k] = grids[k][lin % grids[k].len()].as_slice();
            lin /= grids[k].len();
        }
        out
    };
    let values: Vec<f64> = (0..total)
        .map(|lin| last_two(f, &point(lin)).singular_values().max())
        .collect();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for lin in top_indices(&values, POLISH_CANDIDATES) {
        let head = point(lin);
        let svd = last_two(f, &head).svd(true, true);
        let k = svd.singular_values.imax();
        let u = svd
            .u
            .as_ref()
            .expect("left vectors")
            .column(k)
            .iter()
            .copied()
            .collect::<Vec<_>>();
        let v = svd
            .v_t
            .as_ref()
            .expect("right vectors")
            .row(k)
            .iter()
            .copied()
            .collect::<Vec<_>>();
        let mut starts: Vec<Vec<f64>> = head.iter().map(|h| h.to_vec()).collect();
        starts.push(u);
        starts.push(v);
        let run = mbi_refine(f, &starts, 1e-15, 10_000)?;
        let refs: Vec<&[f64]> = run.blocks.iter().map(Vec::as_slice).collect();
        let value = f.eval_multilinear(&refs)?;
        if value > best.0 {
            best = (value, run.blocks);
        }
    }
    Ok(OracleResult {
        value: best.0,
        argmax: best.1,
        grid_resolution: resolution,
        polished: true,
    })
}
