//! Dispatch from a tensor file to the matching solver.

use serde::Serialize;
use tensorpca::admm::Termination;
use tensorpca::extensions::{solve_biquadratic, solve_multilinear, solve_quadrilinear, solve_trilinear};
use tensorpca::oracle::{
    biquadratic_grid_max, default_resolution, multilinear_grid_max, multistart_local, sphere_grid_max,
};
use tensorpca::{solve_leading_pc, Error, Method, SolverConfig};

use crate::format::TensorData;

/// Result of `solve`, common to every tensor kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOutput {
    pub kind: &'static str,
    /// Reduction applied before solving.
    pub route: &'static str,
    pub method: &'static str,
    pub certified: bool,
    /// Objective value at the returned vectors.
    pub lambda: f64,
    /// One unit vector per block; a single vector for super-symmetric input.
    pub x: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub relaxation_objective: Option<f64>,
    pub rank_one_ratio: Option<f64>,
    pub primal_residual: Option<f64>,
    pub rel_change: Option<f64>,
    pub nuclear_norm: Option<f64>,
    pub neg_eig_mass: Option<f64>,
}

pub fn solve_tensor(t: &TensorData, method: Method, cfg: &SolverConfig) -> Result<SolveOutput, Error> {
    let kind = t.kind().name();
    match t {
        TensorData::SuperSymmetric(f) => {
            let (pc, r) = solve_leading_pc(f, method, cfg)?;
            Ok(SolveOutput {
                kind,
                route: if f.order() % 2 == 1 { "odd_to_even" } else { "direct" },
                method: method.name(),
                certified: pc.certified,
                lambda: pc.lambda_star,
                x: vec![pc.x_star],
                iterations: r.iterations,
                converged: r.converged(),
                relaxation_objective: Some(r.objective),
                rank_one_ratio: Some(r.rank_one_ratio),
                primal_residual: Some(r.primal_residual),
                rel_change: Some(r.rel_change),
                nuclear_norm: Some(r.nuclear_norm),
                neg_eig_mass: Some(r.neg_eig_mass),
            })
        }
        TensorData::PartialSymmetric(g) => {
            let s = solve_biquadratic(g, cfg)?;
            Ok(SolveOutput {
                kind,
                route: "biquadratic",
                method: Method::Sdp.name(),
                certified: s.certified,
                lambda: s.lambda_star,
                x: vec![s.x, s.y],
                iterations: s.iterations,
                converged: s.termination == Termination::Converged,
                relaxation_objective: Some(s.objective),
                rank_one_ratio: Some(s.rank_one_ratio),
                primal_residual: None,
                rel_change: None,
                nuclear_norm: None,
                neg_eig_mass: None,
            })
        }
        TensorData::General(f) => {
            let (route, sol) = match f.order() {
                3 => ("trilinear", solve_trilinear(f, cfg)?),
                4 => ("quadrilinear", solve_quadrilinear(f, cfg)?),
                k if k % 2 == 0 => ("multilinear_embed", solve_multilinear(f, method, cfg)?),
                k => {
                    return Err(Error::Domain(format!(
                        "general tensors of odd order {k} > 3 are not supported"
                    )))
                }
            };
            let method = if route == "multilinear_embed" {
                method
            } else {
                Method::Sdp
            };
            Ok(SolveOutput {
                kind,
                route,
                method: method.name(),
                certified: sol.certified,
                lambda: sol.value,
                x: sol.blocks,
                iterations: sol.iterations,
                converged: true,
                relaxation_objective: None,
                rank_one_ratio: None,
                primal_residual: None,
                rel_change: None,
                nuclear_norm: None,
                neg_eig_mass: None,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleOutput {
    pub kind: &'static str,
    pub strategy: &'static str,
    pub value: f64,
    pub argmax: Vec<Vec<f64>>,
    pub grid_resolution: usize,
}

/// Brute-force reference value: a sphere grid when the dimension allows it,
/// multistart local search otherwise.
pub fn oracle_tensor(
    t: &TensorData,
    resolution: Option<usize>,
    restarts: usize,
    seed: u64,
) -> Result<OracleOutput, Error> {
    let kind = t.kind().name();
    let (strategy, r) = match t {
        TensorData::SuperSymmetric(f) if f.n() <= 3 => {
            let res = resolution.unwrap_or_else(|| default_resolution(f.n()));
            ("sphere_grid", sphere_grid_max(f, res)?)
        }
        TensorData::SuperSymmetric(f) => ("multistart", multistart_local(f, restarts, seed)?),
        TensorData::PartialSymmetric(g) => {
            let res = resolution.unwrap_or_else(|| default_resolution(g.n()));
            ("biquadratic_grid", biquadratic_grid_max(g, res)?)
        }
        TensorData::General(f) => ("multilinear_grid", multilinear_grid_max(f, resolution.unwrap_or(90))?),
    };
    Ok(OracleOutput {
        kind,
        strategy,
        value: r.value,
        argmax: r.argmax,
        grid_resolution: r.grid_resolution,
    })
}
