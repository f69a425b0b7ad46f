//! Eikonal solvers through the screened Poisson equation.
//!
//! The nonlinear eikonal `|grad S| = f` is replaced by the linear equation
//! `-hbar^2 lap phi + f^2 phi = sum_k delta(x - y_k)`, whose solution gives
//! `S = -hbar log phi` in the limit of small `hbar`. Two solvers are provided:
//! a perturbation series of Green's-function convolutions ([`perturb`]) and a
//! five-point finite-difference system ([`sparse`]). [`sweep`] is a classical
//! fast-sweeping solver used as a reference, and [`plan`] and [`sfs`] apply the
//! solvers to path planning and shape from shading.

// `!(x > 0.0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod error;
mod fft;
pub mod field;
pub mod fixtures;
pub mod io;
pub mod kernels;
pub mod perturb;
pub mod plan;
pub mod report;
pub mod sfs;
pub mod sparse;
pub mod sweep;

pub use error::{Error, Result};
pub use field::{GridSpec, ScalarField, SourceSet};
pub use report::{Backend, SolveReport};
