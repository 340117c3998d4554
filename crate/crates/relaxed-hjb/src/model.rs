//! Coefficient bundles for the exit-time control problem.
//!
//! An [`ActionModel`] carries, per action `k`, the diffusion matrix field
//! `a_k` (already in PDE form, i.e. half the squared volatility), the drift
//! `b_k`, the nonnegative discount `c_k` and the running reward `f_k`,
//! together with the exit reward `g` on an axis-aligned box and a uniform
//! ellipticity constant `nu` with `2 a_k >= nu I` everywhere.
//!
//! Coefficients are closures over the state, so one model can be sampled on
//! any grid; everything downstream works node-sampled.

use std::sync::Arc;

use crate::discretize::Grid;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// A scalar coefficient as a function of the state.
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Helper for constant coefficients.
pub fn constant(v: f64) -> ScalarField {
    Arc::new(move |_| v)
}

/// Axis-aligned box `[lo_1, hi_1] x ... x [lo_n, hi_n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidArgument("mismatched box bounds".into()));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if h.partial_cmp(l) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::InvalidArgument(format!(
                    "degenerate box: [{l}, {h}]"
                )));
            }
        }
        Ok(BoxDomain { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Euclidean diameter (the long diagonal).
    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains_open(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| v > l && v < h)
    }
}

/// Coefficients of one action's elliptic operator and reward.
#[derive(Clone)]
pub struct ActionCoefficients {
    /// Upper triangle of the symmetric diffusion matrix, row-major:
    /// `[a11]` in 1-D, `[a11, a12, a22]` in 2-D.
    pub diffusion: Vec<ScalarField>,
    /// Drift components, one per axis.
    pub drift: Vec<ScalarField>,
    /// Discount rate, must be nonnegative on the domain.
    pub discount: ScalarField,
    /// Running reward.
    pub reward: ScalarField,
}

/// The full coefficient bundle.
#[derive(Clone)]
pub struct ActionModel {
    pub dim: usize,
    pub domain: BoxDomain,
    /// Uniform ellipticity constant: `2 a_k(x) >= nu I` for all nodes/actions.
    pub ellipticity: f64,
    pub actions: Vec<ActionCoefficients>,
    /// Exit reward paid on the boundary.
    pub exit_reward: ScalarField,
}

impl std::fmt::Debug for ActionModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ActionModel")
            .field("dim", &self.dim)
            .field("actions", &self.actions.len())
            .field("domain", &self.domain)
            .field("ellipticity", &self.ellipticity)
            .finish_non_exhaustive()
    }
}

fn triangle_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

// Index into the packed upper triangle.
fn tri_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // row offset for row i in an upper-triangular packing
    i * dim - i * (i + 1) / 2 + j
}

impl ActionModel {
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    /// Diffusion matrix of action `k` at `x`.
    pub fn diffusion_at(&self, k: usize, x: &[f64]) -> SymMatrix {
        let n = self.dim;
        let mut m = SymMatrix::zero(n);
        for i in 0..n {
            for j in i..n {
                let v = (self.actions[k].diffusion[tri_index(n, i, j)])(x);
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn drift_at(&self, k: usize, x: &[f64], out: &mut [f64]) {
        for (o, b) in out.iter_mut().zip(&self.actions[k].drift) {
            *o = b(x);
        }
    }

    pub fn discount_at(&self, k: usize, x: &[f64]) -> f64 {
        (self.actions[k].discount)(x)
    }

    pub fn reward_at(&self, k: usize, x: &[f64]) -> f64 {
        (self.actions[k].reward)(x)
    }

    pub fn exit_reward_at(&self, x: &[f64]) -> f64 {
        (self.exit_reward)(x)
    }
}

/// Per-action coefficient deltas with the same shapes as the base model.
#[derive(Clone)]
pub struct PerturbationSpec {
    pub actions: Vec<ActionCoefficients>,
    pub exit_reward: ScalarField,
}

impl PerturbationSpec {
    /// The zero perturbation for a model of this shape.
    pub fn zero(dim: usize, num_actions: usize) -> Self {
        let zero_action = || ActionCoefficients {
            diffusion: (0..triangle_len(dim)).map(|_| constant(0.0)).collect(),
            drift: (0..dim).map(|_| constant(0.0)).collect(),
            discount: constant(0.0),
            reward: constant(0.0),
        };
        PerturbationSpec {
            actions: (0..num_actions).map(|_| zero_action()).collect(),
            exit_reward: constant(0.0),
        }
    }

    /// Replaces the running-reward delta of action `k`.
    pub fn with_reward_delta(mut self, k: usize, delta: ScalarField) -> Self {
        self.actions[k].reward = delta;
        self
    }

    /// Replaces the exit-reward delta.
    pub fn with_exit_delta(mut self, delta: ScalarField) -> Self {
        self.exit_reward = delta;
        self
    }

    /// Replaces the diffusion delta (packed upper-triangle slot `slot`).
    pub fn with_diffusion_delta(mut self, k: usize, slot: usize, delta: ScalarField) -> Self {
        self.actions[k].diffusion[slot] = delta;
        self
    }

    /// Replaces the drift delta along `axis`.
    pub fn with_drift_delta(mut self, k: usize, axis: usize, delta: ScalarField) -> Self {
        self.actions[k].drift[axis] = delta;
        self
    }

    /// Replaces the discount delta of action `k`.
    pub fn with_discount_delta(mut self, k: usize, delta: ScalarField) -> Self {
        self.actions[k].discount = delta;
        self
    }
}

fn shifted(base: &ScalarField, delta: &ScalarField, t: f64) -> ScalarField {
    let base = Arc::clone(base);
    let delta = Arc::clone(delta);
    Arc::new(move |x| base(x) + t * delta(x))
}

/// `base + t * delta`, re-validated on `grid` (ellipticity and discount
/// signs must survive the shift).
pub fn apply_perturbation(
    base: &ActionModel,
    spec: &PerturbationSpec,
    t: f64,
    grid: &Grid,
) -> Result<ActionModel> {
    if spec.actions.len() != base.actions.len() {
        return Err(Error::Perturbation(format!(
            "delta has {} actions, base has {}",
            spec.actions.len(),
            base.actions.len()
        )));
    }
    let actions = base
        .actions
        .iter()
        .zip(&spec.actions)
        .map(|(b, d)| ActionCoefficients {
            diffusion: b
                .diffusion
                .iter()
                .zip(&d.diffusion)
                .map(|(bb, dd)| shifted(bb, dd, t))
                .collect(),
            drift: b
                .drift
                .iter()
                .zip(&d.drift)
                .map(|(bb, dd)| shifted(bb, dd, t))
                .collect(),
            discount: shifted(&b.discount, &d.discount, t),
            reward: shifted(&b.reward, &d.reward, t),
        })
        .collect();
    let model = ActionModel {
        dim: base.dim,
        domain: base.domain.clone(),
        ellipticity: base.ellipticity,
        actions,
        exit_reward: shifted(&base.exit_reward, &spec.exit_reward, t),
    };
    validate(&model, grid).map_err(|e| match e {
        Error::Model(msg) => Error::Perturbation(msg),
        other => other,
    })?;
    Ok(model)
}

/// Validation diagnostics: extreme values seen across the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Smallest diffusion eigenvalue over all nodes and actions.
    pub min_diffusion_eig: f64,
    /// Smallest discount value.
    pub min_discount: f64,
    /// Sup norms per action of `|b|_1`, `|c|`, `|f|`.
    pub sup_drift_l1: Vec<f64>,
    pub sup_discount: Vec<f64>,
    pub sup_reward: Vec<f64>,
    /// Sup norm of the exit reward.
    pub sup_exit: f64,
}

/// Checks ellipticity (`min eig a_k >= nu/2`) and `c_k >= 0` at every node.
pub fn validate(model: &ActionModel, grid: &Grid) -> Result<Diagnostics> {
    if grid.dim() != model.dim {
        return Err(Error::Model(format!(
            "grid dimension {} does not match model dimension {}",
            grid.dim(),
            model.dim
        )));
    }
    let kk = model.num_actions();
    let mut min_eig = f64::INFINITY;
    let mut min_c = f64::INFINITY;
    let mut sup_b = vec![0.0f64; kk];
    let mut sup_c = vec![0.0f64; kk];
    let mut sup_f = vec![0.0f64; kk];
    let mut sup_g: f64 = 0.0;
    let mut drift = vec![0.0; model.dim];
    let bound = model.ellipticity / 2.0 - 1e-12;
    for node in 0..grid.num_nodes() {
        let x = grid.coords(node);
        sup_g = sup_g.max(model.exit_reward_at(&x).abs());
        for k in 0..kk {
            let a = model.diffusion_at(k, &x);
            let eig = a.min_eigenvalue();
            if eig < bound {
                return Err(Error::Model(format!(
                    "ellipticity violated at node {node} (x = {x:?}), action {k}: \
                     min eigenvalue {eig} < nu/2 = {}",
                    model.ellipticity / 2.0
                )));
            }
            min_eig = min_eig.min(eig);
            let c = model.discount_at(k, &x);
            if c < 0.0 {
                return Err(Error::Model(format!(
                    "negative discount at node {node} (x = {x:?}), action {k}: {c}"
                )));
            }
            min_c = min_c.min(c);
            model.drift_at(k, &x, &mut drift);
            let b1: f64 = drift.iter().map(|v| v.abs()).sum();
            sup_b[k] = sup_b[k].max(b1);
            sup_c[k] = sup_c[k].max(c);
            sup_f[k] = sup_f[k].max(model.reward_at(k, &x).abs());
        }
    }
    Ok(Diagnostics {
        min_diffusion_eig: min_eig,
        min_discount: min_c,
        sup_drift_l1: sup_b,
        sup_discount: sup_c,
        sup_reward: sup_f,
        sup_exit: sup_g,
    })
}

/// Discrete Hölder-norm report for a grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteNormReport {
    /// Sup norms of the derivative levels `0..=order` (level `m` sums the
    /// sup norms of all order-`m` difference quotients).
    pub sup: Vec<f64>,
    /// Hölder seminorm at exponent `beta` of the highest level.
    pub seminorm: f64,
    /// Sum of all parts: the discrete `|.|_{order,beta}` analog.
    pub combined: f64,
}

// Difference quotient along `axis`: centered in the interior, one-sided at
// the two boundary layers.
fn diff_axis(field: &[f64], grid: &Grid, axis: usize) -> Vec<f64> {
    let mut out = vec![0.0; field.len()];
    let h = grid.spacing(axis);
    for node in 0..field.len() {
        let idx = grid.multi_index(node);
        let m = grid.shape()[axis];
        let i = idx[axis];
        let v = if i == 0 {
            (field[grid.neighbor(node, axis, 1)] - field[node]) / h
        } else if i == m - 1 {
            (field[node] - field[grid.neighbor(node, axis, -1)]) / h
        } else {
            (field[grid.neighbor(node, axis, 1)] - field[grid.neighbor(node, axis, -1)]) / (2.0 * h)
        };
        out[node] = v;
    }
    out
}

// Second difference along `axis`; shifted stencil on the boundary layers
// (exact on quadratics everywhere).
fn diff2_axis(field: &[f64], grid: &Grid, axis: usize) -> Vec<f64> {
    let mut out = vec![0.0; field.len()];
    let h2 = grid.spacing(axis) * grid.spacing(axis);
    for (node, slot) in out.iter_mut().enumerate() {
        let idx = grid.multi_index(node);
        let m = grid.shape()[axis];
        let i = idx[axis];
        let centered_at = if i == 0 {
            grid.neighbor(node, axis, 1)
        } else if i == m - 1 {
            grid.neighbor(node, axis, -1)
        } else {
            node
        };
        *slot = (field[grid.neighbor(centered_at, axis, 1)] - 2.0 * field[centered_at]
            + field[grid.neighbor(centered_at, axis, -1)])
            / h2;
    }
    out
}

// All distinct difference-quotient fields of the given derivative order.
fn derivative_fields(field: &[f64], grid: &Grid, order: usize) -> Vec<Vec<f64>> {
    match order {
        0 => vec![field.to_vec()],
        1 => (0..grid.dim()).map(|a| diff_axis(field, grid, a)).collect(),
        2 => {
            let mut fields = Vec::new();
            for a in 0..grid.dim() {
                fields.push(diff2_axis(field, grid, a));
                for b in (a + 1)..grid.dim() {
                    let da = diff_axis(field, grid, a);
                    fields.push(diff_axis(&da, grid, b));
                }
            }
            fields
        }
        _ => panic!("derivative order {order} not supported"),
    }
}

fn sup_norm(field: &[f64]) -> f64 {
    field.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Exact pairwise Hölder seminorm over a node set with coordinates.
///
/// Quadratic in the node count; fine at desk scale.
pub fn pairwise_holder_seminorm(values: &[f64], coords: &[Vec<f64>], beta: f64) -> f64 {
    let n = values.len();
    let mut best = 0.0f64;
    for p in 0..n {
        for q in (p + 1)..n {
            let dist: f64 = coords[p]
                .iter()
                .zip(&coords[q])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let ratio = (values[p] - values[q]).abs() / dist.powf(beta);
            best = best.max(ratio);
        }
    }
    best
}

/// Discrete analog of the Hölder norm `|field|_{order,beta}` on the grid.
///
/// Sup norms use all nodes; derivatives are difference quotients (one-sided
/// at the boundary); the seminorm is the exact pairwise maximum over nodes.
pub fn discrete_norm(field: &[f64], grid: &Grid, order: usize, beta: f64) -> DiscreteNormReport {
    assert!(order <= 2, "order must be 0, 1 or 2");
    assert!(beta > 0.0 && beta <= 1.0, "beta must lie in (0, 1]");
    assert_eq!(field.len(), grid.num_nodes());
    let coords: Vec<Vec<f64>> = (0..grid.num_nodes()).map(|i| grid.coords(i)).collect();
    let mut sup = Vec::with_capacity(order + 1);
    for m in 0..=order {
        let fields = derivative_fields(field, grid, m);
        sup.push(fields.iter().map(|f| sup_norm(f)).sum());
    }
    let top = derivative_fields(field, grid, order);
    let seminorm: f64 = top
        .iter()
        .map(|f| pairwise_holder_seminorm(f, &coords, beta))
        .sum();
    let combined = sup.iter().sum::<f64>() + seminorm;
    DiscreteNormReport {
        sup,
        seminorm,
        combined,
    }
}

// |phi|_{0,beta} = sup + pairwise seminorm, for node-sampled differences.
fn holder_norm0(diff: &[f64], coords: &[Vec<f64>], beta: f64) -> f64 {
    sup_norm(diff) + pairwise_holder_seminorm(diff, coords, beta)
}

/// Discrete perturbation size: the aggregate Hölder norm of the coefficient
/// differences,
///
/// ```text
/// max_k [ max_ij |a - a'|_beta + max_i |b - b'|_beta + |c - c'|_beta + |f - f'|_beta ]
///   + |g - g'|_{2,beta}
/// ```
///
/// evaluated node-sampled on `grid`.
pub fn perturbation_size(
    base: &ActionModel,
    perturbed: &ActionModel,
    grid: &Grid,
    beta: f64,
) -> f64 {
    let n = grid.num_nodes();
    let coords: Vec<Vec<f64>> = (0..n).map(|i| grid.coords(i)).collect();
    let sample = |f: &ScalarField, g: &ScalarField| -> Vec<f64> {
        coords.iter().map(|x| f(x) - g(x)).collect()
    };
    let mut worst_action = 0.0f64;
    for (b, p) in base.actions.iter().zip(&perturbed.actions) {
        let a_part = b
            .diffusion
            .iter()
            .zip(&p.diffusion)
            .map(|(bb, pp)| holder_norm0(&sample(bb, pp), &coords, beta))
            .fold(0.0f64, f64::max);
        let b_part = b
            .drift
            .iter()
            .zip(&p.drift)
            .map(|(bb, pp)| holder_norm0(&sample(bb, pp), &coords, beta))
            .fold(0.0f64, f64::max);
        let c_part = holder_norm0(&sample(&b.discount, &p.discount), &coords, beta);
        let f_part = holder_norm0(&sample(&b.reward, &p.reward), &coords, beta);
        worst_action = worst_action.max(a_part + b_part + c_part + f_part);
    }
    let g_diff = sample(&base.exit_reward, &perturbed.exit_reward);
    let g_part = discrete_norm(&g_diff, grid, 2, beta).combined;
    worst_action + g_part
}
