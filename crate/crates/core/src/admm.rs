//! ADMM drivers for the two convex relaxations of even-order tensor PCA.
//!
//! Both work on the split `X = Y` with `X` in the affine set `C` and `Y`
//! carrying the second term:
//!
//! ```text
//! nuclear penalty:  max tr(F X) - rho ||Y||_*   s.t. X in C, X = Y
//! SDP relaxation:   max tr(F X)                 s.t. X in C, X = Y, Y psd
//! ```
//!
//! One iteration is
//!
//! ```text
//! X <- P_C(Y + mu Lambda)
//! Y <- shrink(X - mu (Lambda - F), mu rho)     (nuclear penalty)
//! Y <- P_psd(X + mu F - mu Lambda)             (SDP)
//! Lambda <- Lambda - (X - Y) / mu
//! ```
//!
//! and the run stops once `||X_k - X_{k-1}|| / ||X_{k-1}|| + ||X_k - Y_k|| <= tol`.

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};
use crate::extraction::{self, Recovery};
use crate::matricize::{matr, rank_one_ratio, SymmetricMatrix};
use crate::projection::{project_psd, shrink_nuclear, CProjector};
use crate::tensor::SuperSymmetricTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Nuclear-norm penalty model.
    Nnp,
    /// Semidefinite relaxation.
    Sdp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Nnp => "nnp",
            Method::Sdp => "sdp",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nnp" => Ok(Method::Nnp),
            "sdp" => Ok(Method::Sdp),
            other => domain(format!("unknown method '{other}' (expected nnp or sdp)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Weight of the nuclear norm penalty.
    pub rho: f64,
    /// ADMM step parameter.
    pub mu: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Threshold on `sigma_2 / sigma_1` for the rank-one certificate.
    pub rank_tol: f64,
    /// Seed for the random restarts of the fallback refinement.
    pub seed: u64,
    /// Keep per-iteration residuals in the report.
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 10.0,
            mu: 0.5,
            tol: 1e-6,
            max_iter: 50_000,
            rank_tol: 1e-6,
            seed: 0,
            record_history: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.rho) || !positive(self.mu) || !positive(self.rank_tol) {
            return domain("rho, mu and rank_tol must be positive");
        }
        if !positive(self.tol) || self.tol >= 1.0 {
            return domain(format!("tol must lie in (0, 1), got {}", self.tol));
        }
        if self.max_iter == 0 {
            return domain("max_iter must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterCap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub rel_change: f64,
    pub primal_residual: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: Method,
    /// `tr(F X)` at the final iterate.
    pub objective: f64,
    pub nuclear_norm: f64,
    pub iterations: usize,
    /// `||X - Y||_F`.
    pub primal_residual: f64,
    /// `||X_k - X_{k-1}||_F / ||X_{k-1}||_F`.
    pub rel_change: f64,
    pub rank_one_ratio: f64,
    /// Absolute sum of the negative eigenvalues of `X`.
    pub neg_eig_mass: f64,
    pub extracted_lambda: f64,
    pub extracted_x: Vec<f64>,
    /// Whether the rank-one certificate held.
    pub certified: bool,
    pub termination: Termination,
    /// Slack in the feasibility lower bound: for the penalty model
    /// `tr(FX) - rho ||X||_* - (max_i F_{i..i} - rho)`, for the SDP
    /// `tr(FX) - max_i F_{i..i}`. Nonnegative up to `tol` at an optimum.
    pub lower_bound_margin: f64,
    pub x: SymmetricMatrix,
    pub y: SymmetricMatrix,
    pub history: Vec<IterationRecord>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Raw result of the iteration, before any tensor-level post-processing.
#[derive(Debug, Clone)]
pub(crate) struct AdmmOutcome {
    pub x: SymmetricMatrix,
    pub y: SymmetricMatrix,
    pub iterations: usize,
    pub rel_change: f64,
    pub primal_residual: f64,
    pub termination: Termination,
    pub history: Vec<IterationRecord>,
}

/// Generic ADMM loop: `project` maps a matrix onto the affine feasible set.
pub(crate) fn run_admm(
    fmat: &SymmetricMatrix,
    y0: SymmetricMatrix,
    project: impl Fn(&DMatrix<f64>) -> SymmetricMatrix,
    method: Method,
    cfg: &SolverConfig,
) -> Result<AdmmOutcome> {
    cfg.validate()?;
    let size = fmat.size();
    let mu = cfg.mu;
    let f = fmat.matrix();
    let mut y = y0;
    let mut lambda = DMatrix::<f64>::zeros(size, size);
    let mut x_prev = DMatrix::<f64>::zeros(size, size);
    let mut x = SymmetricMatrix::zeros(size);
    let mut history = Vec::new();
    let mut rel_change = f64::INFINITY;
    let mut primal_residual = f64::INFINITY;

    for iter in 1..=cfg.max_iter {
        x = project(&(y.matrix() + &lambda * mu));
        debug_assert!((x.trace() - 1.0).abs() < 1e-9, "X iterate left the trace-one set");

        let arg = match method {
            Method::Nnp => x.matrix() - (&lambda - f) * mu,
            Method::Sdp => x.matrix() + (f - &lambda) * mu,
        };
        let arg = SymmetricMatrix::from_symmetric_part(arg);
        y = match method {
            Method::Nnp => shrink_nuclear(&arg, mu * cfg.rho),
            Method::Sdp => project_psd(&arg),
        };

        let diff = x.matrix() - y.matrix();
        lambda -= &diff / mu;

        let prev_norm = x_prev.norm();
        let change = (x.matrix() - &x_prev).norm();
        rel_change = if prev_norm > 0.0 { change / prev_norm } else { change };
        primal_residual = diff.norm();
        if cfg.record_history {
            history.push(IterationRecord {
                rel_change,
                primal_residual,
            });
        }
        if rel_change + primal_residual <= cfg.tol {
            return Ok(AdmmOutcome {
                x,
                y,
                iterations: iter,
                rel_change,
                primal_residual,
                termination: Termination::Converged,
                history,
            });
        }
        x_prev.copy_from(x.matrix());
    }
    Ok(AdmmOutcome {
        x,
        y,
        iterations: cfg.max_iter,
        rel_change,
        primal_residual,
        termination: Termination::IterCap,
        history,
    })
}

/// `|sum of negative eigenvalues|`.
pub fn neg_eig_mass(x: &SymmetricMatrix) -> f64 {
    -x.eigenvalues().iter().filter(|v| **v < 0.0).sum::<f64>()
}

fn check_input(f: &SuperSymmetricTensor) -> Result<usize> {
    if !f.order().is_multiple_of(2) || f.order() == 0 {
        return domain(format!("matrix relaxation needs an even order, got {}", f.order()));
    }
    if f.is_zero() {
        return Err(Error::Degenerate("the zero tensor has no principal component".into()));
    }
    Ok(f.order() / 2)
}

pub(crate) fn solve_with(f: &SuperSymmetricTensor, method: Method, cfg: &SolverConfig) -> Result<SolveReport> {
    let d = check_input(f)?;
    let n = f.n();
    let fmat = matr(f)?;
    let projector = CProjector::new(n, d)?;
    let (best, best_diag) = f.max_diagonal();
    let mut e = vec![0.0; n];
    e[best] = 1.0;
    let y0 = matr(&SuperSymmetricTensor::rank_one(1.0, &e, 2 * d)?)?;

    let out = run_admm(&fmat, y0, |z| projector.project_raw(z), method, cfg)?;

    let objective = fmat.dot(&out.x);
    let nuclear_norm = out.x.nuclear_norm();
    let lower_bound_margin = match method {
        Method::Nnp => objective - cfg.rho * nuclear_norm - (best_diag - cfg.rho),
        Method::Sdp => objective - best_diag,
    };
    let diag = rank_one_ratio(&out.x)?;
    let recovery: Recovery = extraction::recover(f, &out.x, cfg.rank_tol, cfg.seed)?;
    Ok(SolveReport {
        method,
        objective,
        nuclear_norm,
        iterations: out.iterations,
        primal_residual: out.primal_residual,
        rel_change: out.rel_change,
        rank_one_ratio: diag.ratio,
        neg_eig_mass: neg_eig_mass(&out.x),
        extracted_lambda: recovery.pc.lambda_star,
        extracted_x: recovery.pc.x_star.clone(),
        certified: recovery.pc.certified,
        termination: out.termination,
        lower_bound_margin,
        x: out.x,
        y: out.y,
        history: out.history,
    })
}

/// Nuclear-norm penalty model.
pub fn solve_nnp(f: &SuperSymmetricTensor, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_with(f, Method::Nnp, cfg)
}

/// Semidefinite relaxation.
pub fn solve_sdp(f: &SuperSymmetricTensor, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_with(f, Method::Sdp, cfg)
}

pub fn solve(f: &SuperSymmetricTensor, method: Method, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_with(f, method, cfg)
}
