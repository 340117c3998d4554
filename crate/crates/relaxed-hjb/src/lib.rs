//! Numerical toolkit for exploration-regularized stochastic exit-time control.
//!
//! The library solves Dirichlet problems of the form
//!
//! ```text
//! H_eps(L_1 u + f_1, ..., L_K u + f_K) = 0   in O,      u = g   on the boundary,
//! ```
//!
//! where each `L_k` is a uniformly elliptic operator attached to one of `K`
//! actions and `H_eps` is a smooth-max generator scaled by an exploration
//! weight `eps` (`H_eps(x) = eps * H(x / eps)`, plain max at `eps = 0`).
//! The gradient of `H_eps` at the residual vector is a relaxed feedback
//! control: a probability distribution over actions at every state.
//!
//! What lives where:
//!
//! - [`smoothmax`]: the generators (log-sum-exp, a square-root smoother and a
//!   piecewise-quartic local smoother), their scaled families, gradients,
//!   Hessians, the exploration-cost identity and the local-exactness test.
//! - [`model`]: coefficient bundles on a box domain, perturbations and
//!   discrete Hölder norms.
//! - [`discretize`]: uniform tensor grids and monotone (M-matrix) finite
//!   difference stencils.
//! - [`solver`]: policy iteration for the regularized problem, Howard's
//!   algorithm at `eps = 0`, frozen-policy linear solves and feedback-control
//!   extraction.
//! - [`analysis`]: eps-sweeps against the explicit first-order bound,
//!   perturbation-stability sweeps, first-order sensitivity solves and
//!   control-convergence diagnostics.
//! - [`simulate`]: Euler-Maruyama simulation of the relaxed dynamics up to
//!   the exit time, verifying the PDE value by Monte Carlo.
//! - [`config`] / [`cli`]: the experiment harness behind the `relaxed-hjb`
//!   binary (plain-text configs, CSV artifacts, run manifests).
//!
//! The `examples/` directory contains one runnable example per capability;
//! `examples/generators.rs` is a good place to start.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod discretize;
mod error;
pub mod expr;
mod linalg;
pub mod model;
pub mod problems;
pub mod rng;
pub mod simulate;
pub mod smoothmax;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::SymMatrix;
