//! Heat kernels of the classical weighted Jacobi, ball and simplex operators:
//! closed-form and spectral-series evaluation, a monomial Gram–Schmidt oracle,
//! and empirical checks of the two-sided Gaussian bounds.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ball;
pub mod cubature;
pub mod domain;
pub mod envelope;
pub mod error;
pub mod heat1d;
pub mod jacobi;
pub mod oracle;
pub mod selftest;
pub mod simplex;

pub use ball::{BallHeatKernel, BallPoint, BallWeight};
pub use cubature::Cubature;
pub use domain::{Domain, HeatKernel};
pub use envelope::{
    EnvelopeCheck, EnvelopeFit, EnvelopeSample, KernelSource, ScanConfig, ScanResult,
};
pub use error::{Error, Result};
pub use heat1d::{IntervalHeatKernel, TruncationPlan, DEFAULT_T_MIN};
pub use jacobi::{IntervalWeight, QuadratureRule};
pub use oracle::{MultiPoly, OrthonormalBasis};
pub use simplex::{SimplexHeatKernel, SimplexPoint, SimplexWeight};
