//! Batch runs over random instances, summarized as CSV rows.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use tensorpca::extensions::{solve_biquadratic, PartialSymmetricTensor};
use tensorpca::oracle::{biquadratic_grid_max, default_resolution, multistart_local, sphere_grid_max};
use tensorpca::{solve_leading_pc, Error, GeneralTensor, Method, SolverConfig, SuperSymmetricTensor};

/// Agreement threshold between a solver value and the oracle value.
pub const ORACLE_MATCH_TOL: f64 = 1e-3;
const ORACLE_RESTARTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    Gaussian,
    Uniform,
}

impl std::str::FromStr for Distribution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gaussian" => Ok(Distribution::Gaussian),
            "uniform" => Ok(Distribution::Uniform),
            other => Err(format!("unknown distribution '{other}' (expected gaussian or uniform)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    SuperSymmetric { n: usize, order: usize },
    Biquadratic { n: usize, m: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub family: Family,
    pub dist: Distribution,
    /// Ignored for the bi-quadratic family, which always uses the SDP model.
    pub methods: Vec<Method>,
    pub trials: usize,
    /// Trial `i` uses seed `seed_base + i`.
    pub seed_base: u64,
    pub cfg: SolverConfig,
    /// Also compute a brute-force reference value per instance.
    pub oracle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub n: usize,
    pub m: Option<usize>,
    pub order: usize,
    pub method: &'static str,
    pub trials: usize,
    pub rank_one_count: usize,
    pub mean_iter: f64,
    pub mean_objective: f64,
    pub mean_wall_time: f64,
    pub failed_trials: usize,
    /// Largest relaxation-objective gap between methods on the same instance.
    pub max_objective_diff: Option<f64>,
    pub oracle_matches: Option<usize>,
}

pub const CSV_HEADER: &str = "n,m,order,method,trials,rank_one_count,mean_iter,mean_objective,mean_wall_time,failed_trials,max_objective_diff,oracle_matches";

impl ExperimentRow {
    pub fn to_csv(&self) -> String {
        let opt_usize = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{:.3},{:.10},{:.6},{},{},{}",
            self.n,
            opt_usize(self.m),
            self.order,
            self.method,
            self.trials,
            self.rank_one_count,
            self.mean_iter,
            self.mean_objective,
            self.mean_wall_time,
            self.failed_trials,
            self.max_objective_diff.map(|v| format!("{v:.3e}")).unwrap_or_default(),
            opt_usize(self.oracle_matches),
        )
    }
}

pub fn to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
struct MethodOutcome {
    certified: bool,
    iterations: usize,
    lambda: f64,
    relaxation: f64,
    seconds: f64,
    converged: bool,
}

#[derive(Debug, Clone)]
struct TrialOutcome {
    per_method: Vec<Result<MethodOutcome, String>>,
    oracle: Option<f64>,
}

enum Instance {
    Sym(SuperSymmetricTensor),
    Partial(PartialSymmetricTensor),
}

fn generate(family: Family, dist: Distribution, seed: u64) -> Result<Instance, Error> {
    Ok(match family {
        Family::SuperSymmetric { n, order } => Instance::Sym(match dist {
            Distribution::Gaussian => SuperSymmetricTensor::random_gaussian(n, order, seed)?,
            Distribution::Uniform => SuperSymmetricTensor::random_uniform(n, order, seed)?,
        }),
        Family::Biquadratic { n, m } => Instance::Partial(match dist {
            Distribution::Gaussian => PartialSymmetricTensor::random_gaussian(n, m, seed)?,
            Distribution::Uniform => {
                PartialSymmetricTensor::symmetrize(&GeneralTensor::random_uniform(vec![n, m, n, m], seed)?)?
            }
        }),
    })
}

fn run_trial(spec: &ExperimentSpec, methods: &[Method], index: usize) -> Result<TrialOutcome, Error> {
    let seed = spec.seed_base + index as u64;
    let instance = generate(spec.family, spec.dist, seed)?;
    let mut cfg = spec.cfg.clone();
    cfg.seed = seed;
    let per_method = methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let out = match &instance {
                Instance::Sym(f) => solve_leading_pc(f, method, &cfg).map(|(pc, r)| MethodOutcome {
                    certified: pc.certified,
                    iterations: r.iterations,
                    lambda: pc.lambda_star,
                    relaxation: r.objective,
                    seconds: 0.0,
                    converged: r.converged(),
                }),
                Instance::Partial(g) => solve_biquadratic(g, &cfg).map(|s| MethodOutcome {
                    certified: s.certified,
                    iterations: s.iterations,
                    lambda: s.lambda_star,
                    relaxation: s.objective,
                    seconds: 0.0,
                    converged: s.termination == tensorpca::admm::Termination::Converged,
                }),
            };
            out.map(|mut o| {
                o.seconds = start.elapsed().as_secs_f64();
                o
            })
            .map_err(|e| e.to_string())
        })
        .collect();
    let oracle = if spec.oracle {
        Some(match &instance {
            Instance::Sym(f) if f.n() <= 3 => sphere_grid_max(f, default_resolution(f.n()))?.value,
            Instance::Sym(f) => multistart_local(f, ORACLE_RESTARTS, seed)?.value,
            Instance::Partial(g) => biquadratic_grid_max(g, default_resolution(g.n()))?.value,
        })
    } else {
        None
    };
    Ok(TrialOutcome { per_method, oracle })
}

/// Runs every trial on the current rayon pool. Output does not depend on the
/// number of threads: trials are seeded by index and collected in order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentRow>, Error> {
    spec.cfg.validate()?;
    if spec.trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let methods: Vec<Method> = match spec.family {
        Family::Biquadratic { .. } => vec![Method::Sdp],
        Family::SuperSymmetric { .. } if spec.methods.is_empty() => {
            return Err(Error::Domain("at least one method is required".into()))
        }
        Family::SuperSymmetric { .. } => spec.methods.clone(),
    };
    let outcomes: Vec<TrialOutcome> = (0..spec.trials)
        .into_par_iter()
        .map(|i| run_trial(spec, &methods, i))
        .collect::<Result<_, _>>()?;

    let max_diff = if methods.len() > 1 {
        let mut worst = 0.0f64;
        for t in &outcomes {
            let vals: Vec<f64> = t
                .per_method
                .iter()
                .filter_map(|o| o.as_ref().ok())
                .map(|o| o.relaxation)
                .collect();
            for a in &vals {
                for b in &vals {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        Some(worst)
    } else {
        None
    };

    let (n, m, order) = match spec.family {
        Family::SuperSymmetric { n, order } => (n, None, order),
        Family::Biquadratic { n, m } => (n, Some(m), 4),
    };
    let rows = methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let ok: Vec<&MethodOutcome> = outcomes.iter().filter_map(|t| t.per_method[k].as_ref().ok()).collect();
            let failed = outcomes
                .iter()
                .filter(|t| t.per_method[k].as_ref().map_or(true, |o| !o.converged))
                .count();
            let mean = |f: &dyn Fn(&MethodOutcome) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|o| f(o)).sum::<f64>() / ok.len() as f64
                }
            };
            let oracle_matches = spec.oracle.then(|| {
                outcomes
                    .iter()
                    .filter(|t| match (&t.per_method[k], t.oracle) {
                        (Ok(o), Some(v)) => (o.lambda - v).abs() <= ORACLE_MATCH_TOL * v.abs().max(1.0),
                        _ => false,
                    })
                    .count()
            });
            ExperimentRow {
                n,
                m,
                order,
                method: method.name(),
                trials: spec.trials,
                rank_one_count: ok.iter().filter(|o| o.certified).count(),
                mean_iter: mean(&|o| o.iterations as f64),
                mean_objective: mean(&|o| o.lambda),
                mean_wall_time: mean(&|o| o.seconds),
                failed_trials: failed,
                max_objective_diff: max_diff,
                oracle_matches,
            }
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(trials: usize) -> ExperimentSpec {
        ExperimentSpec {
            family: Family::SuperSymmetric { n: 3, order: 4 },
            dist: Distribution::Gaussian,
            methods: vec![Method::Nnp, Method::Sdp],
            trials,
            seed_base: 7,
            cfg: SolverConfig::default(),
            oracle: false,
        }
    }

    #[test]
    fn rows_per_method() {
        let rows = run_experiment(&spec(4)).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].method, "nnp");
        assert_eq!(rows[1].method, "sdp");
        for r in &rows {
            assert_eq!(r.trials, 4);
            assert!(r.rank_one_count <= 4);
            assert!(r.max_objective_diff.unwrap() < 1e-3);
        }
    }

    #[test]
    fn independent_of_thread_count() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_experiment(&spec(6)).unwrap())
        };
        let strip = |rows: Vec<ExperimentRow>| {
            rows.into_iter()
                .map(|r| (r.rank_one_count, r.mean_iter, r.mean_objective, r.max_objective_diff))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(run(1)), strip(run(3)));
    }

    #[test]
    fn csv_layout() {
        let rows = run_experiment(&spec(2)).unwrap();
        let csv = to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        let cols = CSV_HEADER.split(',').count();
        assert!(lines[1..].iter().all(|l| l.split(',').count() == cols));
        assert!(lines[1].starts_with("3,,4,nnp,2,"));
    }

    #[test]
    fn biquadratic_family_uses_sdp() {
        let mut s = spec(2);
        s.family = Family::Biquadratic { n: 2, m: 3 };
        s.oracle = true;
        let rows = run_experiment(&s).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].method, "sdp");
        assert_eq!(rows[0].m, Some(3));
        assert!(rows[0].oracle_matches.is_some());
    }

    #[test]
    fn rejects_zero_trials() {
        assert!(run_experiment(&spec(0)).is_err());
    }
}
