//! From a matrix solution back to a tensor principal component.
//!
//! A certified solution `X = y y^T` gives `x` through the mode-1 unfolding of
//! `vect^{-1}(y)`. Otherwise the solution is post-processed by block
//! coordinate ascent (MBI) on the multilinear form of `matr^{-1}(X)`.

use nalgebra::SymmetricEigen;

use crate::admm::{self, Method, SolveReport, SolverConfig};
use crate::error::{domain, shape, Error, Result};
use crate::extensions;
use crate::matricize::{
    is_super_symmetric, matr_inv, mode_n_unfold, normalize_sign, rank_one_ratio, vect_inv, SymmetricMatrix,
};
use crate::projection::alpha;
use crate::rng;
use crate::tensor::{GeneralTensor, MonomialSignature, SuperSymmetricTensor};

/// Number of random restarts added to the recovered start in the fallback.
pub const DEFAULT_RESTARTS: usize = 5;
/// Shift weight used to make the homogeneous form friendlier to MBI.
pub const MBI_SHIFT: f64 = 6.0;

const FEASIBILITY_TOL: f64 = 1e-8;
const MBI_TOL: f64 = 1e-12;
const MBI_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalComponent {
    /// `F(x*, ..., x*)`.
    pub lambda_star: f64,
    pub x_star: Vec<f64>,
    /// The rank-one certificate held, so `x*` is globally optimal for the
    /// relaxation's tolerance.
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Extraction {
    RankOne(PrincipalComponent),
    NotRankOne {
        ratio: f64,
        /// Eigenvalues of `X` by decreasing magnitude.
        spectrum: Vec<f64>,
    },
}

/// Dominant direction `x` of a vector `y` with `vect^{-1}(y) ~ x (x) ... (x) x`.
pub fn recover_vector(y: &[f64], n: usize, d: usize) -> Result<Vec<f64>> {
    let t = vect_inv(y, n, d)?;
    let mut x = if d == 1 {
        y.to_vec()
    } else {
        let u = mode_n_unfold(&t, 0)?;
        let gram = &u * u.transpose();
        let e = SymmetricEigen::new(gram);
        let lead = e.eigenvalues.imax();
        e.eigenvectors.column(lead).iter().copied().collect()
    };
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Degenerate(
            "cannot recover a direction from the zero vector".into(),
        ));
    }
    x.iter_mut().for_each(|a| *a /= norm);
    Ok(x)
}

/// Picks the sign of `x` with the larger value of `F`; on a tie the largest
/// component is made positive. Returns `(F(x, ..., x), x)`.
pub fn orient(f: &SuperSymmetricTensor, mut x: Vec<f64>) -> Result<(f64, Vec<f64>)> {
    let plus = f.eval_homogeneous(&x)?;
    let neg: Vec<f64> = x.iter().map(|a| -a).collect();
    let minus = f.eval_homogeneous(&neg)?;
    let scale = plus.abs().max(minus.abs()).max(1.0);
    if (plus - minus).abs() <= 1e-14 * scale {
        normalize_sign(&mut x);
        let v = f.eval_homogeneous(&x)?;
        Ok((v, x))
    } else if plus > minus {
        Ok((plus, x))
    } else {
        Ok((minus, neg))
    }
}

fn check_feasible(x: &SymmetricMatrix, n: usize, d: usize) -> Result<()> {
    let size = n.pow(d as u32);
    if x.size() != size {
        return shape(format!("matrix of size {} for n={n}, d={d}", x.size()));
    }
    if (x.trace() - 1.0).abs() > FEASIBILITY_TOL {
        return domain(format!("X is not trace one (trace {})", x.trace()));
    }
    let check = is_super_symmetric(&matr_inv(x, n, d)?, FEASIBILITY_TOL);
    if !check.symmetric {
        return domain(format!(
            "X is not a super-symmetric matricization (violation {:e})",
            check.max_violation
        ));
    }
    Ok(())
}

/// Rank-one certificate and vector recovery for a feasible `X`.
pub fn extract(f: &SuperSymmetricTensor, x: &SymmetricMatrix, rank_tol: f64) -> Result<Extraction> {
    if !f.order().is_multiple_of(2) {
        return domain("extraction needs an even-order tensor");
    }
    let n = f.n();
    let d = f.order() / 2;
    check_feasible(x, n, d)?;
    let diag = rank_one_ratio(x)?;
    if !diag.is_rank_one(rank_tol) {
        let (values, _) = x.eigen();
        let mut spectrum: Vec<f64> = values.iter().copied().collect();
        spectrum.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        return Ok(Extraction::NotRankOne {
            ratio: diag.ratio,
            spectrum,
        });
    }
    let v = recover_vector(&diag.eigenvector, n, d)?;
    let (lambda_star, x_star) = orient(f, v)?;
    Ok(Extraction::RankOne(PrincipalComponent {
        lambda_star,
        x_star,
        certified: true,
    }))
}

/// Outcome of block coordinate ascent on a multilinear form.
#[derive(Debug, Clone, PartialEq)]
pub struct MbiResult {
    /// Block with the best homogeneous value of the form.
    pub x: Vec<f64>,
    pub blocks: Vec<Vec<f64>>,
    /// Multilinear value at `blocks`.
    pub value: f64,
    /// Multilinear value after each sweep.
    pub trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (norm > 0.0 && norm.is_finite()).then(|| v.iter().map(|a| a / norm).collect())
}

/// Cyclic block ascent on `form(x^1, ..., x^m)` over unit vectors. Each block
/// update sets `x^i` to the normalized partial gradient, which maximizes the
/// form in that block. Stops once a sweep improves the value by less than
/// `tol * max(1, |value|)`.
pub fn mbi_refine(form: &GeneralTensor, starts: &[Vec<f64>], tol: f64, max_sweeps: usize) -> Result<MbiResult> {
    let m = form.order();
    if starts.len() != m {
        return shape(format!("{} start blocks for an order-{m} form", starts.len()));
    }
    let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (i, s) in starts.iter().enumerate() {
        if s.len() != form.dims()[i] {
            return shape(format!(
                "start block {i} has length {}, expected {}",
                s.len(),
                form.dims()[i]
            ));
        }
        blocks.push(unit(s).ok_or_else(|| Error::Degenerate(format!("start block {i} is zero")))?);
    }
    let eval = |blocks: &[Vec<f64>]| {
        let refs: Vec<&[f64]> = blocks.iter().map(Vec::as_slice).collect();
        form.eval_multilinear(&refs)
    };
    let mut value = eval(&blocks)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        for i in 0..m {
            let refs: Vec<&[f64]> = blocks.iter().map(Vec::as_slice).collect();
            let g = form.contract_except(&refs, i)?;
            if let Some(u) = unit(&g) {
                blocks[i] = u;
            }
        }
        let next = eval(&blocks)?;
        trace.push(next);
        let gain = next - value;
        value = next.max(value);
        if gain <= tol * value.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    let mut best = blocks[0].clone();
    if form.cubic_dim().is_some() {
        let mut best_val = f64::NEG_INFINITY;
        for b in &blocks {
            let args: Vec<&[f64]> = vec![b.as_slice(); m];
            let v = form.eval_multilinear(&args)?;
            if v > best_val {
                best_val = v;
                best = b.clone();
            }
        }
    }
    Ok(MbiResult {
        x: best,
        blocks,
        value,
        trace,
        sweeps,
        converged,
    })
}

/// Dense form of `F(x, ..., x) + shift (x^T x)^d`.
pub fn shifted_dense(f: &SuperSymmetricTensor, shift: f64) -> Result<GeneralTensor> {
    if !f.order().is_multiple_of(2) {
        return domain("the shift needs an even order");
    }
    let d = f.order() / 2;
    let n = f.n();
    let mut t = f.to_dense();
    let dims = t.dims().to_vec();
    let mut idx = vec![0usize; dims.len()];
    for v in t.data_mut() {
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        if let Some(k) = MonomialSignature::from_even_index(&sorted, n) {
            *v += shift * alpha(&k, d)?;
        }
        for pos in (0..idx.len()).rev() {
            idx[pos] += 1;
            if idx[pos] < dims[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
    Ok(t)
}

/// Smallest value of `T(x^1, ..., x^d, x^1, ..., x^d)` over `probes` random
/// unit tuples, relative to the Frobenius norm of `T`. Nonnegative for a
/// co-quadratic positive semidefinite form.
pub fn check_co_quadratic_psd(form: &GeneralTensor, probes: usize, seed: u64) -> Result<f64> {
    let m = form.order();
    let n = form
        .cubic_dim()
        .ok_or_else(|| Error::Shape("co-quadratic check needs a cubic tensor".into()))?;
    if !m.is_multiple_of(2) {
        return domain("co-quadratic check needs an even order");
    }
    let d = m / 2;
    let scale = form.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut r = rng::seeded(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..probes {
        let xs: Vec<Vec<f64>> = (0..d).map(|_| rng::unit_vector(&mut r, n)).collect();
        let args: Vec<&[f64]> = (0..m).map(|i| xs[i % d].as_slice()).collect();
        worst = worst.min(form.eval_multilinear(&args)? / scale);
    }
    Ok(worst)
}

/// Principal component read off a solution, with the fallback applied when
/// the certificate fails.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub pc: PrincipalComponent,
    pub ratio: f64,
    /// Set when the fallback ran.
    pub fallback: Option<MbiResult>,
}

/// Multistart MBI on `form`, each start replicated across all blocks. Returns
/// the run whose best block scores highest on `f`.
pub fn mbi_multistart(
    f: &SuperSymmetricTensor,
    form: &GeneralTensor,
    starts: &[Vec<f64>],
) -> Result<(f64, Vec<f64>, MbiResult)> {
    let m = form.order();
    let mut best: Option<(f64, Vec<f64>, MbiResult)> = None;
    for s in starts {
        let run = mbi_refine(form, &vec![s.clone(); m], MBI_TOL, MBI_MAX_SWEEPS)?;
        for b in &run.blocks {
            let (v, x) = orient(f, b.clone())?;
            if best.as_ref().is_none_or(|(bv, _, _)| v > *bv) {
                best = Some((v, x, run.clone()));
            }
        }
    }
    best.ok_or_else(|| Error::Domain("no start vectors".into()))
}

/// Certificate check on `x`, falling back to MBI when it fails. The fallback
/// works on `matr^{-1}(X)` when that form passes the co-quadratic probe and
/// on the shifted form of `F` otherwise; the winner is polished by ascent on
/// the shifted form of `F`.
pub fn recover(f: &SuperSymmetricTensor, x: &SymmetricMatrix, rank_tol: f64, seed: u64) -> Result<Recovery> {
    let n = f.n();
    let d = f.order() / 2;
    match extract(f, x, rank_tol)? {
        Extraction::RankOne(pc) => Ok(Recovery {
            pc,
            ratio: rank_one_ratio(x)?.ratio,
            fallback: None,
        }),
        Extraction::NotRankOne { ratio, .. } => {
            let diag = rank_one_ratio(x)?;
            let mut starts = vec![recover_vector(&diag.eigenvector, n, d)?];
            let mut r = rng::seeded(seed);
            starts.extend((0..DEFAULT_RESTARTS).map(|_| rng::unit_vector(&mut r, n)));

            let relaxed = matr_inv(x, n, d)?;
            let shifted = shifted_dense(f, MBI_SHIFT * f.frobenius_norm().max(1.0))?;
            let form = if check_co_quadratic_psd(&relaxed, 100, seed)? >= -1e-9 {
                &relaxed
            } else {
                &shifted
            };
            let (_, x0, run) = mbi_multistart(f, form, &starts)?;
            let (lambda_star, x_star, _) = mbi_multistart(f, &shifted, &[x0])?;
            Ok(Recovery {
                pc: PrincipalComponent {
                    lambda_star,
                    x_star,
                    certified: false,
                },
                ratio,
                fallback: Some(run),
            })
        }
    }
}

/// `F - lambda* x* (x) ... (x) x*`.
pub fn deflate(f: &SuperSymmetricTensor, pc: &PrincipalComponent) -> Result<SuperSymmetricTensor> {
    let r = SuperSymmetricTensor::rank_one(1.0, &pc.x_star, f.order())?;
    f.add_scaled(-pc.lambda_star, &r)
}

/// End-to-end leading principal component. Odd orders are squared first.
pub fn solve_leading_pc(
    f: &SuperSymmetricTensor,
    method: Method,
    cfg: &SolverConfig,
) -> Result<(PrincipalComponent, SolveReport)> {
    if f.order() % 2 == 1 {
        let g = extensions::odd_to_even(f)?;
        let report = admm::solve(&g, method, cfg)?;
        let pc = extensions::odd_component(f, &report.extracted_x, report.certified)?;
        return Ok((pc, report));
    }
    let report = admm::solve(f, method, cfg)?;
    let pc = PrincipalComponent {
        lambda_star: report.extracted_lambda,
        x_star: report.extracted_x.clone(),
        certified: report.certified,
    };
    Ok((pc, report))
}
