//! Leading principal component of higher-order tensors.
//!
//! An even-order super-symmetric tensor `F` of order `2d` is unfolded by the
//! square matricization [`matricize::matr`] into an `n^d x n^d` symmetric
//! matrix. A super-symmetric tensor is rank one exactly when its square
//! matricization is, so the tensor eigenvalue problem
//! `max F(x, ..., x) s.t. ||x|| = 1` becomes a rank-constrained matrix program.
//! Two convex surrogates of that program are solved with a structure-exploiting
//! ADMM ([`admm`]): a nuclear-norm penalty model and an SDP relaxation. Both
//! return rank-one solutions on the overwhelming majority of instances, which
//! certifies global optimality; [`extraction`] turns the matrix back into a
//! vector and falls back to block improvement when the certificate fails.
//!
//! [`extensions`] reduces bi-quadratic, tri-linear, quadri-linear, general
//! even-order multi-linear and odd-order problems onto the same machinery, and
//! [`oracle`] provides brute-force references for small instances.

pub mod admm;
pub mod error;
pub mod extensions;
pub mod extraction;
pub mod matricize;
pub mod oracle;
pub mod projection;
pub mod rng;
pub mod tensor;

pub use admm::{solve_nnp, solve_sdp, Method, SolveReport, SolverConfig, Termination};
pub use error::{Error, Result};
pub use extraction::{solve_leading_pc, PrincipalComponent};
pub use matricize::SymmetricMatrix;
pub use tensor::{GeneralTensor, SuperSymmetricTensor};
