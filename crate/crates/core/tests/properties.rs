use nalgebra::DMatrix;
use proptest::prelude::*;
use tensorpca::admm::{neg_eig_mass, solve};
use tensorpca::extensions::{quadrilinear_to_biquadratic, trilinear_to_biquadratic, PartialSymmetricTensor};
use tensorpca::extraction::{deflate, extract, mbi_refine, Extraction, PrincipalComponent};
use tensorpca::matricize::{is_super_symmetric, matr, matr_inv, rank_one_ratio, vect, vect_inv};
use tensorpca::oracle::{kkt_project, sphere_grid_max};
use tensorpca::projection::{project_c, project_psd, shrink_nuclear};
use tensorpca::tensor::{canonical_indices, class_size, enumerate_signatures, multinomial};
use tensorpca::{GeneralTensor, Method, SolverConfig, SuperSymmetricTensor, SymmetricMatrix};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn max_diff(a: &SuperSymmetricTensor, b: &SuperSymmetricTensor) -> f64 {
    let (a, b) = (a.to_dense(), b.to_dense());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (n > 1e-3).then(|| v.iter().map(|a| a / n).collect())
}

fn sym_matrix(size: usize) -> impl Strategy<Value = SymmetricMatrix> {
    prop::collection::vec(-3.0f64..3.0, size * size)
        .prop_map(move |v| SymmetricMatrix::from_symmetric_part(DMatrix::from_vec(size, size, v)))
}

fn orthogonal(size: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, size * size).prop_map(move |v| DMatrix::from_vec(size, size, v).qr().q())
}

/// `(n, order, seed)` for a random super-symmetric tensor.
fn tensor_params(max_n: usize, orders: &'static [usize]) -> impl Strategy<Value = (usize, usize, u64)> {
    (1..=max_n, prop::sample::select(orders), any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inner_with_rank_one_is_evaluation((n, m, seed) in tensor_params(4, &[2, 3, 4, 5]), x in prop::collection::vec(-1.0f64..1.0, 4)) {
        let Some(x) = normalized(&x[..n]) else { return Ok(()) };
        let f = SuperSymmetricTensor::random_gaussian(n, m, seed).unwrap();
        let r = SuperSymmetricTensor::rank_one(1.0, &x, m).unwrap();
        prop_assert!(rel(f.inner(&r).unwrap(), f.eval_homogeneous(&x).unwrap()) < 1e-12);
    }

    #[test]
    fn symmetrize_is_idempotent_linear_and_preserves_forms(s1 in any::<u64>(), s2 in any::<u64>(), c in -2.0f64..2.0, x in prop::collection::vec(-1.0f64..1.0, 3)) {
        let a = GeneralTensor::random_gaussian(vec![3; 4], s1).unwrap();
        let b = GeneralTensor::random_gaussian(vec![3; 4], s2).unwrap();
        let sa = a.symmetrize().unwrap();
        let again = sa.to_dense().symmetrize().unwrap();
        prop_assert!(max_diff(&sa, &again) < 1e-12);
        let mut comb = a.clone();
        for (o, v) in comb.data_mut().iter_mut().zip(b.data()) {
            *o += c * v;
        }
        let lhs = comb.symmetrize().unwrap();
        let rhs = sa.add_scaled(c, &b.symmetrize().unwrap()).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) < 1e-12);
        let xs: [&[f64]; 4] = [&x, &x, &x, &x];
        prop_assert!(rel(sa.eval_homogeneous(&x).unwrap(), a.eval_multilinear(&xs).unwrap()) < 1e-12);
    }

    #[test]
    fn matr_round_trip_and_isometry((n, m, seed) in tensor_params(4, &[2, 4, 6])) {
        let f = SuperSymmetricTensor::random_gaussian(n, m, seed).unwrap();
        let x = matr(&f).unwrap();
        let back = matr_inv(&x, n, m / 2).unwrap();
        let dense = f.to_dense();
        prop_assert_eq!(back.data(), dense.data());
        prop_assert!(rel(x.frobenius_norm(), f.frobenius_norm()) < 1e-14);
    }

    #[test]
    fn vect_round_trip_is_exact(d0 in 1usize..4, d1 in 1usize..4, d2 in 1usize..4, seed in any::<u64>()) {
        let t = GeneralTensor::random_gaussian(vec![d0, d1, d2], seed).unwrap();
        let v = vect(&t);
        if d0 == d1 && d1 == d2 {
            let back = vect_inv(&v, d0, 3).unwrap();
            prop_assert_eq!(back.data(), t.data());
        }
        prop_assert_eq!(v.len(), d0 * d1 * d2);
    }

    #[test]
    fn rank_one_tensors_matricize_to_rank_one(n in 1usize..=4, d in 1usize..=2, lambda in 0.1f64..5.0, neg in any::<bool>(), a in prop::collection::vec(-1.0f64..1.0, 4)) {
        let Some(a) = normalized(&a[..n]) else { return Ok(()) };
        let lambda = if neg { -lambda } else { lambda };
        let f = SuperSymmetricTensor::rank_one(lambda, &a, 2 * d).unwrap();
        prop_assert!(rank_one_ratio(&matr(&f).unwrap()).unwrap().ratio <= 1e-10);
    }

    #[test]
    fn symmetric_rank_one_vectors_lift_to_rank_one_tensors(n in 1usize..=4, d in 1usize..=2, a in prop::collection::vec(-1.0f64..1.0, 4)) {
        let Some(a) = normalized(&a[..n]) else { return Ok(()) };
        // y = a^{(x) d} is a unit vector whose reshaping is super-symmetric rank one.
        let y = vect(&SuperSymmetricTensor::rank_one(1.0, &a, d).unwrap().to_dense());
        let t = matr_inv(&SymmetricMatrix::outer(&y), n, d).unwrap();
        let want = SuperSymmetricTensor::rank_one(1.0, &a, 2 * d).unwrap().to_dense();
        for (p, q) in t.data().iter().zip(want.data()) {
            prop_assert!((p - q).abs() <= 1e-8);
        }
    }

    #[test]
    fn trace_identity((n, seed) in (1usize..=5, any::<u64>()), d in 1usize..=2, a in prop::collection::vec(-1.0f64..1.0, 5)) {
        let Some(a) = normalized(&a[..n]) else { return Ok(()) };
        let f = SuperSymmetricTensor::random_gaussian(n, 2 * d, seed).unwrap();
        let y = vect(&SuperSymmetricTensor::rank_one(1.0, &a, d).unwrap().to_dense());
        let lhs = matr(&f).unwrap().dot(&SymmetricMatrix::outer(&y));
        prop_assert!(rel(lhs, f.eval_homogeneous(&a).unwrap()) < 1e-12);
    }

    #[test]
    fn project_c_is_feasible_idempotent_and_non_expansive(n in 1usize..=3, v1 in prop::collection::vec(-3.0f64..3.0, 81), v2 in prop::collection::vec(-3.0f64..3.0, 81)) {
        let k = n * n;
        let z = |v: &[f64]| SymmetricMatrix::from_symmetric_part(DMatrix::from_column_slice(k, k, &v[..k * k]));
        let (z1, z2) = (z(&v1), z(&v2));
        let p1 = project_c(&z1, n, 2).unwrap();
        let p2 = project_c(&z2, n, 2).unwrap();
        prop_assert!((p1.trace() - 1.0).abs() < 1e-14);
        prop_assert!(is_super_symmetric(&matr_inv(&p1, n, 2).unwrap(), 1e-12).symmetric);
        prop_assert!((project_c(&p1, n, 2).unwrap().matrix() - p1.matrix()).amax() < 1e-12);
        prop_assert!((p1.matrix() - p2.matrix()).norm() <= (z1.matrix() - z2.matrix()).norm() + 1e-10);
        prop_assert!((p1.matrix() - kkt_project(&z1, n, 2).unwrap().matrix()).amax() < 1e-8);
    }

    #[test]
    fn spectral_operators_commute_with_conjugation(m in sym_matrix(5), q in orthogonal(5), tau in 0.0f64..2.0) {
        let conj = |a: &SymmetricMatrix| SymmetricMatrix::from_symmetric_part(&q * a.matrix() * q.transpose());
        let lhs = shrink_nuclear(&conj(&m), tau);
        let rhs = conj(&shrink_nuclear(&m, tau));
        prop_assert!((lhs.matrix() - rhs.matrix()).amax() < 1e-10);
        let lhs = project_psd(&conj(&m));
        let rhs = conj(&project_psd(&m));
        prop_assert!((lhs.matrix() - rhs.matrix()).amax() < 1e-10);
    }

    #[test]
    fn extraction_recovers_rank_one(n in 1usize..=5, d in 1usize..=2, lambda in 0.1f64..5.0, a in prop::collection::vec(-1.0f64..1.0, 5)) {
        let Some(u) = normalized(&a[..n]) else { return Ok(()) };
        let f = SuperSymmetricTensor::rank_one(lambda, &u, 2 * d).unwrap();
        let x = matr(&SuperSymmetricTensor::rank_one(1.0, &u, 2 * d).unwrap()).unwrap();
        let Extraction::RankOne(pc) = extract(&f, &x, 1e-6).unwrap() else {
            return Err(TestCaseError::fail("not rank one"));
        };
        prop_assert!((pc.lambda_star - lambda).abs() < 1e-8);
        let dot: f64 = pc.x_star.iter().zip(&u).map(|(p, q)| p * q).sum();
        prop_assert!((dot.abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn mbi_is_monotone(n in 2usize..=4, seed in any::<u64>()) {
        let form = GeneralTensor::random_gaussian(vec![n; 4], seed).unwrap();
        let start: Vec<Vec<f64>> = (0..4).map(|k| normalized(&(0..n).map(|i| ((i + k + 1) as f64).sin()).collect::<Vec<_>>()).unwrap()).collect();
        let r = mbi_refine(&form, &start, 1e-12, 200).unwrap();
        let first = form.eval_multilinear(&start.iter().map(Vec::as_slice).collect::<Vec<_>>()).unwrap();
        prop_assert!(r.trace.first().is_none_or(|&v| v >= first - 1e-12));
        for w in r.trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn deflate_is_linear(seed in any::<u64>(), c in -2.0f64..2.0, a in prop::collection::vec(-1.0f64..1.0, 3)) {
        let Some(u) = normalized(&a) else { return Ok(()) };
        let f = SuperSymmetricTensor::random_gaussian(3, 4, seed).unwrap();
        let pc = PrincipalComponent { lambda_star: 1.5, x_star: u.clone(), certified: true };
        let d1 = deflate(&f.scaled(c), &PrincipalComponent { lambda_star: c * 1.5, ..pc.clone() }).unwrap();
        let d2 = deflate(&f, &pc).unwrap().scaled(c);
        prop_assert!(max_diff(&d1, &d2) < 1e-12);
    }

    #[test]
    fn reductions_are_partially_symmetric(seed in any::<u64>(), dims in prop::collection::vec(1usize..=3, 4)) {
        let f3 = GeneralTensor::random_gaussian(dims[..3].to_vec(), seed).unwrap();
        prop_assert!(trilinear_to_biquadratic(&f3).unwrap().symmetry_violation() <= 1e-12);
        let f4 = GeneralTensor::random_gaussian(dims.clone(), seed).unwrap();
        let g = quadrilinear_to_biquadratic(&f4).unwrap();
        prop_assert!(g.symmetry_violation() <= 1e-12);
        // Padding: entries pairing the same block twice are exactly zero.
        let (n1, n2) = (dims[0], dims[1]);
        let mut ok = true;
        g.dense().for_each(|idx, v| {
            if ((idx[0] < n1) == (idx[2] < n1) || (idx[1] < n2) == (idx[3] < n2)) && v != 0.0 {
                ok = false;
            }
        });
        prop_assert!(ok);
    }

    #[test]
    fn random_partial_tensors_are_partially_symmetric(n in 1usize..=3, m in 1usize..=3, seed in any::<u64>()) {
        prop_assert!(PartialSymmetricTensor::random_gaussian(n, m, seed).unwrap().symmetry_violation() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solver_is_deterministic_and_iterates_obey_nuclear_identity(n in 2usize..=4, seed in any::<u64>(), sdp in any::<bool>()) {
        let f = SuperSymmetricTensor::random_gaussian(n, 4, seed).unwrap();
        let method = if sdp { Method::Sdp } else { Method::Nnp };
        let cfg = SolverConfig::default();
        let a = solve(&f, method, &cfg).unwrap();
        let b = solve(&f, method, &cfg).unwrap();
        prop_assert_eq!(a.x.matrix(), b.x.matrix());
        prop_assert_eq!(a.iterations, b.iterations);
        prop_assert!((a.x.nuclear_norm() - (1.0 + 2.0 * neg_eig_mass(&a.x))).abs() < 1e-10);
    }

    #[test]
    fn sdp_bounds_the_grid_optimum(n in 2usize..=3, seed in any::<u64>()) {
        let f = SuperSymmetricTensor::random_gaussian(n, 4, seed).unwrap();
        let r = solve(&f, Method::Sdp, &SolverConfig::default()).unwrap();
        let g = sphere_grid_max(&f, 90).unwrap();
        prop_assert!(r.objective >= g.value - 1e-5, "upper bound {} below feasible {}", r.objective, g.value);
        if r.certified {
            prop_assert!((r.objective - g.value).abs() < 1e-3);
            prop_assert!(rel(r.extracted_lambda, r.objective) < 1e-5);
        }
    }
}

#[test]
fn multinomials_sum_to_power() {
    for n in 1..=6 {
        for d in 1..=4 {
            let total: u64 = enumerate_signatures(n, d)
                .iter()
                .map(|k| multinomial(d, k).unwrap())
                .sum();
            assert_eq!(total, (n as u64).pow(d as u32), "n={n} d={d}");
        }
    }
}

#[test]
fn class_sizes_cover_the_full_index_set() {
    for n in 1..=4 {
        for m in 1..=6 {
            let total: u64 = canonical_indices(n, m).iter().map(|c| class_size(c)).sum();
            assert_eq!(total, (n as u64).pow(m as u32), "n={n} m={m}");
        }
    }
}

#[test]
fn solvers_reach_the_stopping_rule() {
    let cfg = SolverConfig::default();
    for i in 0..50u64 {
        let n = 2 + (i % 5) as usize;
        let f = SuperSymmetricTensor::random_gaussian(n, 4, 40_000 + i).unwrap();
        for method in [Method::Nnp, Method::Sdp] {
            let r = solve(&f, method, &cfg).unwrap();
            assert!(r.converged(), "seed {i} {method:?}");
            assert!(r.primal_residual <= cfg.tol, "seed {i} residual {}", r.primal_residual);
        }
    }
}

#[test]
fn deflation_removes_an_orthogonal_component() {
    let e1 = [1.0, 0.0, 0.0];
    let e2 = [0.0, 0.6, 0.8];
    let f = SuperSymmetricTensor::rank_one(3.0, &e1, 4)
        .unwrap()
        .add_scaled(1.0, &SuperSymmetricTensor::rank_one(1.0, &e2, 4).unwrap())
        .unwrap();
    let pc = PrincipalComponent {
        lambda_star: 3.0,
        x_star: e1.to_vec(),
        certified: true,
    };
    let rest = deflate(&f, &pc).unwrap();
    let want = SuperSymmetricTensor::rank_one(1.0, &e2, 4).unwrap();
    assert!(max_diff(&rest, &want) < 1e-12);
}
