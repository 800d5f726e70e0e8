//! Dense 3-way tensor decompositions and multi-start uniqueness auditing.
//!
//! The crate provides HOSVD (Tucker with orthonormal factors) fitted by
//! alternating eigenvector updates, ParaFac/CP fitted by alternating least
//! squares, the one-sided T1 decomposition used as a PCA warm start, and an
//! audit harness that runs seven very different starting points per test and
//! measures whether they end up at the same solution.
//!
//! ```
//! use tensoraudit::{generate, hosvd, init};
//!
//! let x = generate::random_uniform([8, 8, 8], 7);
//! let bundle = init::make_init_bundle(&x, [3, 3, 3], 1).unwrap();
//! let start = &bundle.starts[0];
//! let (model, trace) = hosvd::hosvd_run(&x, [3, 3, 3], &start.v0, &start.w0, 20).unwrap();
//! assert_eq!(trace.objective.len(), 20);
//! assert!(model.u.orthonormality_error() < 1e-10);
//! ```

// `!(x > 0.0)` also rejects NaN; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod audit;
pub mod error;
pub mod format;
pub mod generate;
pub mod hosvd;
pub mod images;
pub mod init;
pub mod linalg;
pub mod parafac;
pub mod report;
pub mod rng;
pub mod scramble;
pub mod spectrum;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{reconstruct_hosvd, reconstruct_parafac, CoreTensor, FactorMatrix, Mode, Tensor3};
