//! Smooth-max generators and their scaled families.
//!
//! A generator is a convex `H: R^K -> R` squeezed between the pointwise max
//! and `max + c0`. Scaling by the exploration weight gives
//! `H_eps(x) = eps * H(x / eps)` (the plain max at `eps = 0`), whose gradient
//! is a point on the probability simplex: the relaxed control attached to the
//! residual vector `x`. Three generators are provided:
//!
//! - `Entropy`: `H(x) = ln sum_k exp(x_k)`, `c0 = ln K`; the gradient is the
//!   softmax and the induced exploration reward is Shannon entropy.
//! - `Chks`: nested applications of the two-dimensional square-root smoother
//!   `(sqrt((x1-x2)^2 + 1) + x1 + x2) / 2`.
//! - `Zang`: nested applications of a piecewise-quartic smoother that agrees
//!   with the max once the two arguments are at least 1/2 apart, so the
//!   scaled family reproduces the max (and a pure exploitation control)
//!   exactly wherever one residual component dominates by `eps * theta`.
//!
//! For `K > 2` the tree smoothers split indices at `floor((K+1)/2)` and pass
//! singleton ranges through the identity. The local-exactness constant of
//! the `Zang` tree is assembled bottom-up from the composition rule
//! `theta = max(theta_l, theta_r, c_l + 1/2, c_r + 1/2)` with node excess
//! `c = 3/32 + max(c_l, c_r)`.

use crate::error::{Error, Result};

/// Tolerance used when validating that weights form a distribution.
const SIMPLEX_SUM_TOL: f64 = 1e-10;
/// Negative entries above this magnitude are errors, below it they clamp to 0.
const SIMPLEX_NEG_TOL: f64 = 1e-12;

/// Choice of exploration-reward generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// The exact pointwise max; only meaningful on `eps = 0` code paths.
    Max,
    /// Log-sum-exp (softmax gradient, Shannon entropy reward).
    Entropy,
    /// Square-root smoothing, recursively composed.
    Chks,
    /// Piecewise-quartic local smoothing, recursively composed.
    Zang,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Max => "max",
            GeneratorKind::Entropy => "entropy",
            GeneratorKind::Chks => "chks",
            GeneratorKind::Zang => "zang",
        }
    }
}

/// A point on the probability simplex over `K` actions.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector {
    weights: Vec<f64>,
}

impl SimplexVector {
    /// Validates and, where allowed, repairs the weights.
    ///
    /// Entries below `-1e-12` and sums further than `1e-10` from 1 are hard
    /// errors. Tiny negatives clamp to 0 (with renormalization); otherwise
    /// the weights are kept bitwise as supplied.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty simplex vector".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        let mut needs_repair = false;
        for &w in &weights {
            if !w.is_finite() || w < -SIMPLEX_NEG_TOL {
                return Err(Error::InvalidArgument(format!(
                    "weight {w} outside the simplex"
                )));
            }
            if !(0.0..=1.0).contains(&w) {
                needs_repair = true;
            }
        }
        if !needs_repair {
            return Ok(SimplexVector { weights });
        }
        let mut repaired: Vec<f64> = weights.iter().map(|w| w.clamp(0.0, 1.0)).collect();
        let s: f64 = repaired.iter().sum();
        for w in &mut repaired {
            *w /= s;
        }
        Ok(SimplexVector { weights: repaired })
    }

    /// The uniform distribution over `k` actions.
    pub fn uniform(k: usize) -> Self {
        SimplexVector {
            weights: vec![1.0 / k as f64; k],
        }
    }

    /// The Dirac distribution on action `index` (0-based).
    pub fn unit(k: usize, index: usize) -> Self {
        let mut w = vec![0.0; k];
        w[index] = 1.0;
        SimplexVector { weights: w }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// True when some weight is above `1 - tol` (a numerically pure action).
    pub fn is_unit(&self, tol: f64) -> bool {
        self.weights.iter().any(|&w| w >= 1.0 - tol)
    }

    /// l1 distance to another distribution.
    pub fn l1_distance(&self, other: &SimplexVector) -> f64 {
        self.weights
            .iter()
            .zip(other.weights())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

impl std::ops::Index<usize> for SimplexVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.weights[i]
    }
}

/// Shannon exploration reward `rho(lambda) = sum_k lambda_k ln(lambda_k)`,
/// with `0 ln 0 = 0`. Lies in `[-ln K, 0]`.
pub fn rho_entropy(lambda: &SimplexVector) -> f64 {
    lambda
        .weights()
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| w * w.ln())
        .sum()
}

/// Active set of the max subdifferential: `{k : x_k >= max_j x_j - tol}`.
///
/// A singleton means `x` sits where the max is differentiable at resolution
/// `tol`; ties are resolved by the tolerance, never by coordinate order.
pub fn subdiff_max(x: &[f64], tol: f64) -> Vec<usize> {
    assert!(tol > 0.0, "tolerance must be positive");
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    x.iter()
        .enumerate()
        .filter(|(_, &v)| v >= m - tol)
        .map(|(k, _)| k)
        .collect()
}

// Binary recursion tree over coordinate ranges, stored as a flat arena with
// the root last. Leaves are single coordinates, pairs combine two subtrees
// through the 2-D smoother.
#[derive(Debug, Clone)]
enum TreeNode {
    Leaf(usize),
    Pair { left: usize, right: usize },
}

/// A generator together with its action count, sandwich constant and
/// (when defined) local-exactness constant. Immutable and thread-safe.
#[derive(Debug, Clone)]
pub struct SmoothMaxFamily {
    kind: GeneratorKind,
    k: usize,
    c0: f64,
    theta_sloc: Option<f64>,
    nodes: Vec<TreeNode>,
}

// Value and partial derivatives of a 2-D smoother at (a, b):
// (value, dH/da, dH/db, phi'') where the Hessian is phi'' * [[1,-1],[-1,1]].
fn pair_chks(a: f64, b: f64) -> (f64, f64, f64, f64) {
    let d = a - b;
    let r = (d * d + 1.0).sqrt();
    let t = d / r;
    let value = (r + a + b) / 2.0;
    let phi2 = 1.0 / (2.0 * r * r * r);
    (value, (t + 1.0) / 2.0, (1.0 - t) / 2.0, phi2)
}

fn pair_zang(a: f64, b: f64) -> (f64, f64, f64, f64) {
    let d = a - b;
    if d > 0.5 {
        (a, 1.0, 0.0, 0.0)
    } else if d < -0.5 {
        (b, 0.0, 1.0, 0.0)
    } else {
        let d2 = d * d;
        let value = -0.5 * d2 * d2 + 0.75 * d2 + (a + b) / 2.0 + 3.0 / 32.0;
        let t = -2.0 * d2 * d + 1.5 * d;
        (value, t + 0.5, 0.5 - t, -6.0 * d2 + 1.5)
    }
}

impl SmoothMaxFamily {
    /// Builds the generator for `k` actions.
    ///
    /// `Chks` and `Zang` require `k >= 2`; all kinds require `k >= 1`.
    pub fn new(kind: GeneratorKind, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("action count must be >= 1".into()));
        }
        let tree_based = matches!(kind, GeneratorKind::Chks | GeneratorKind::Zang);
        if tree_based && k < 2 {
            return Err(Error::InvalidArgument(format!(
                "{} requires at least 2 actions",
                kind.name()
            )));
        }
        let mut nodes = Vec::new();
        if tree_based {
            build_tree(0, k, &mut nodes);
        }
        let c0 = match kind {
            GeneratorKind::Max => 0.0,
            GeneratorKind::Entropy => (k as f64).ln(),
            GeneratorKind::Chks => (((k - 1) as f64).log2() + 1.0) / 2.0,
            GeneratorKind::Zang => 3.0 * (((k - 1) as f64).log2() + 1.0) / 32.0,
        };
        let theta_sloc = match kind {
            GeneratorKind::Max => Some(0.0),
            GeneratorKind::Zang => {
                let root = nodes.len() - 1;
                Some(sloc_constants(&nodes, root).0)
            }
            _ => None,
        };
        Ok(SmoothMaxFamily {
            kind,
            k,
            c0,
            theta_sloc,
            nodes,
        })
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    /// Number of actions `K`.
    pub fn num_actions(&self) -> usize {
        self.k
    }

    /// Sandwich constant: `max(x) <= H(x) <= max(x) + c0`.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Local-exactness constant, when the generator has one
    /// (`Zang` and `Max`; `None` for `Entropy` and `Chks`).
    pub fn theta_sloc(&self) -> Option<f64> {
        self.theta_sloc
    }

    /// Unscaled generator value `H(x)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.check_len(x);
        match self.kind {
            GeneratorKind::Max => max_of(x),
            GeneratorKind::Entropy => log_sum_exp(x),
            _ => self.tree_value(x),
        }
    }

    /// Scaled value `H_eps(x) = eps * H(x / eps)` (`max(x)` at `eps = 0`).
    ///
    /// The entropy branch is evaluated in max-shifted form so small `eps`
    /// never overflows the exponentials.
    pub fn eval_scaled(&self, eps: f64, x: &[f64]) -> f64 {
        self.check_len(x);
        assert!(eps >= 0.0, "eps must be nonnegative");
        if eps == 0.0 {
            return max_of(x);
        }
        match self.kind {
            GeneratorKind::Max => max_of(x),
            GeneratorKind::Entropy => {
                let m = max_of(x);
                let s: f64 = x.iter().map(|&v| ((v - m) / eps).exp()).sum();
                m + eps * s.ln()
            }
            _ => {
                let y: Vec<f64> = x.iter().map(|&v| v / eps).collect();
                eps * self.tree_value(&y)
            }
        }
    }

    /// Gradient of the scaled generator, a point on the simplex.
    ///
    /// Requires `eps > 0` and a smooth kind; use [`subdiff_max`] for the
    /// set-valued `eps = 0` object.
    pub fn grad_scaled(&self, eps: f64, x: &[f64]) -> Result<SimplexVector> {
        let mut out = vec![0.0; self.k];
        self.grad_scaled_into(eps, x, &mut out)?;
        SimplexVector::new(out)
    }

    /// Gradient written into a caller-provided buffer (no simplex repair).
    pub fn grad_scaled_into(&self, eps: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_len(x);
        if eps <= 0.0 {
            return Err(Error::InvalidArgument(
                "gradient needs eps > 0; the eps = 0 subdifferential is set-valued".into(),
            ));
        }
        match self.kind {
            GeneratorKind::Max => Err(Error::Capability(
                "the max generator has no single-valued gradient".into(),
            )),
            GeneratorKind::Entropy => {
                let m = max_of(x);
                let mut s = 0.0;
                for (o, &v) in out.iter_mut().zip(x) {
                    let e = ((v - m) / eps).exp();
                    *o = e;
                    s += e;
                }
                for o in out.iter_mut() {
                    *o /= s;
                }
                Ok(())
            }
            _ => {
                let y: Vec<f64> = x.iter().map(|&v| v / eps).collect();
                out.fill(0.0);
                let root = self.nodes.len() - 1;
                let vals = self.forward_values(&y);
                self.backward_grad(root, 1.0, &vals, out);
                Ok(())
            }
        }
    }

    /// Hessian of the scaled generator, `K x K` row-major.
    ///
    /// Symmetric positive semi-definite with zero row sums (the gradient
    /// never leaves the simplex). Requires `eps > 0`.
    pub fn hess_scaled(&self, eps: f64, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x);
        if eps <= 0.0 {
            return Err(Error::InvalidArgument("Hessian needs eps > 0".into()));
        }
        let k = self.k;
        match self.kind {
            GeneratorKind::Max => Err(Error::Capability("the max generator has no Hessian".into())),
            GeneratorKind::Entropy => {
                let p = self.grad_scaled(eps, x)?;
                let p = p.weights();
                let mut h = vec![0.0; k * k];
                for i in 0..k {
                    for j in 0..k {
                        let v = if i == j {
                            p[i] * (1.0 - p[i])
                        } else {
                            -p[i] * p[j]
                        };
                        h[i * k + j] = v / eps;
                    }
                }
                Ok(h)
            }
            _ => {
                let y: Vec<f64> = x.iter().map(|&v| v / eps).collect();
                let root = self.nodes.len() - 1;
                let mut hess = vec![0.0; k * k];
                let mut grad = vec![0.0; k];
                self.value_grad_hess(root, &y, &mut grad, &mut hess);
                for h in hess.iter_mut() {
                    *h /= eps;
                }
                Ok(hess)
            }
        }
    }

    /// Exploration cost `eps * rho(grad H_eps(x))` via the conjugacy identity
    /// `eps rho(grad H_eps(x)) = x . grad H_eps(x) - H_eps(x)`.
    ///
    /// The result lies in `[-eps * c0, 0]` up to rounding.
    pub fn exploration_cost(&self, eps: f64, x: &[f64]) -> Result<f64> {
        let g = self.grad_scaled(eps, x)?;
        let dot: f64 = x.iter().zip(g.weights()).map(|(a, b)| a * b).sum();
        Ok(dot - self.eval_scaled(eps, x))
    }

    /// Whether the scaled local-exactness gap condition holds at `x`:
    /// some coordinate dominates every other by at least `eps * theta`.
    ///
    /// When true, `eval_scaled` equals the max and `grad_scaled` is a unit
    /// vector, up to rounding of the pass-through branch. Errors for
    /// generators without a local-exactness constant.
    pub fn sloc_holds_at(&self, eps: f64, x: &[f64]) -> Result<bool> {
        self.check_len(x);
        assert!(eps > 0.0, "eps must be positive");
        let theta = self.theta_sloc.ok_or_else(|| {
            Error::Capability(format!(
                "{} has no local-exactness constant",
                self.kind.name()
            ))
        })?;
        let gap = eps * theta;
        'outer: for k in 0..self.k {
            for j in 0..self.k {
                if j != k && x[k] < x[j] + gap {
                    continue 'outer;
                }
            }
            return Ok(true);
        }
        Ok(false)
    }

    fn check_len(&self, x: &[f64]) {
        assert_eq!(x.len(), self.k, "expected {} components", self.k);
        debug_assert!(x.iter().all(|v| v.is_finite()), "non-finite input");
    }

    fn pair(&self, a: f64, b: f64) -> (f64, f64, f64, f64) {
        match self.kind {
            GeneratorKind::Chks => pair_chks(a, b),
            GeneratorKind::Zang => pair_zang(a, b),
            _ => unreachable!("pair smoother on a non-tree generator"),
        }
    }

    fn tree_value(&self, y: &[f64]) -> f64 {
        *self.forward_values(y).last().unwrap()
    }

    // Post-order values of every tree node (arena order is already post-order).
    fn forward_values(&self, y: &[f64]) -> Vec<f64> {
        let mut vals = vec![0.0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            vals[i] = match *node {
                TreeNode::Leaf(c) => y[c],
                TreeNode::Pair { left, right } => self.pair(vals[left], vals[right]).0,
            };
        }
        vals
    }

    fn backward_grad(&self, idx: usize, scale: f64, vals: &[f64], out: &mut [f64]) {
        match self.nodes[idx] {
            TreeNode::Leaf(c) => out[c] += scale,
            TreeNode::Pair { left, right } => {
                let (_, d1, d2, _) = self.pair(vals[left], vals[right]);
                self.backward_grad(left, scale * d1, vals, out);
                self.backward_grad(right, scale * d2, vals, out);
            }
        }
    }

    // Full chain rule through the tree. Children are disjoint in support, so
    // the cross term collapses to a rank-one update along (g_l - g_r).
    fn value_grad_hess(&self, idx: usize, y: &[f64], grad: &mut [f64], hess: &mut [f64]) -> f64 {
        let k = self.k;
        match self.nodes[idx] {
            TreeNode::Leaf(c) => {
                grad.fill(0.0);
                grad[c] = 1.0;
                hess.fill(0.0);
                y[c]
            }
            TreeNode::Pair { left, right } => {
                let mut gl = vec![0.0; k];
                let mut hl = vec![0.0; k * k];
                let vl = self.value_grad_hess(left, y, &mut gl, &mut hl);
                let mut gr = vec![0.0; k];
                let mut hr = vec![0.0; k * k];
                let vr = self.value_grad_hess(right, y, &mut gr, &mut hr);
                let (v, d1, d2, phi2) = self.pair(vl, vr);
                for i in 0..k {
                    grad[i] = d1 * gl[i] + d2 * gr[i];
                }
                for i in 0..k {
                    for j in 0..k {
                        let diff_i = gl[i] - gr[i];
                        let diff_j = gl[j] - gr[j];
                        hess[i * k + j] =
                            d1 * hl[i * k + j] + d2 * hr[i * k + j] + phi2 * diff_i * diff_j;
                    }
                }
                v
            }
        }
    }
}

// Splits [lo, lo + len) at ceil(len / 2) = floor((len + 1) / 2),
// recursively; appends the subtree in post-order and returns its root.
fn build_tree(lo: usize, len: usize, nodes: &mut Vec<TreeNode>) -> usize {
    if len == 1 {
        nodes.push(TreeNode::Leaf(lo));
        return nodes.len() - 1;
    }
    let k0 = len.div_ceil(2);
    let left = build_tree(lo, k0, nodes);
    let right = build_tree(lo + k0, len - k0, nodes);
    nodes.push(TreeNode::Pair { left, right });
    nodes.len() - 1
}

// (theta, excess) for the Zang tree: leaves are exact with zero excess; a
// pair node composes its children with the 2-D smoother's own constants
// theta = 1/2 and excess = 3/32.
fn sloc_constants(nodes: &[TreeNode], idx: usize) -> (f64, f64) {
    match nodes[idx] {
        TreeNode::Leaf(_) => (0.0, 0.0),
        TreeNode::Pair { left, right } => {
            let (tl, cl) = sloc_constants(nodes, left);
            let (tr, cr) = sloc_constants(nodes, right);
            let theta = tl.max(tr).max(cl + 0.5).max(cr + 0.5);
            let excess = 3.0 / 32.0 + cl.max(cr);
            (theta, excess)
        }
    }
}

#[inline]
fn max_of(x: &[f64]) -> f64 {
    x.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

#[inline]
fn log_sum_exp(x: &[f64]) -> f64 {
    let m = max_of(x);
    let s: f64 = x.iter().map(|&v| (v - m).exp()).sum();
    m + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    const LN3: f64 = 1.0986122886681098;

    fn fd_grad(family: &SmoothMaxFamily, eps: f64, x: &[f64], h: f64) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        let mut xp = x.to_vec();
        for i in 0..x.len() {
            xp[i] = x[i] + h;
            let up = family.eval_scaled(eps, &xp);
            xp[i] = x[i] - h;
            let um = family.eval_scaled(eps, &xp);
            xp[i] = x[i];
            g[i] = (up - um) / (2.0 * h);
        }
        g
    }

    fn fd_hess(family: &SmoothMaxFamily, eps: f64, x: &[f64], h: f64) -> Vec<f64> {
        let k = x.len();
        let mut m = vec![0.0; k * k];
        let mut xp = x.to_vec();
        for j in 0..k {
            xp[j] = x[j] + h;
            let gp = family.grad_scaled(eps, &xp).unwrap();
            xp[j] = x[j] - h;
            let gm = family.grad_scaled(eps, &xp).unwrap();
            xp[j] = x[j];
            for i in 0..k {
                m[i * k + j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        m
    }

    #[test]
    fn family_constants() {
        let z2 = SmoothMaxFamily::new(GeneratorKind::Zang, 2).unwrap();
        assert_eq!(z2.theta_sloc(), Some(0.5));
        assert_eq!(z2.c0(), 3.0 / 32.0);

        let e3 = SmoothMaxFamily::new(GeneratorKind::Entropy, 3).unwrap();
        assert!((e3.c0() - LN3).abs() < 1e-15);
        assert_eq!(e3.theta_sloc(), None);

        let c2 = SmoothMaxFamily::new(GeneratorKind::Chks, 2).unwrap();
        assert_eq!(c2.c0(), 0.5);

        // K=3: pair over {0,1} composed with a pass-through leaf {2}
        let z3 = SmoothMaxFamily::new(GeneratorKind::Zang, 3).unwrap();
        assert_eq!(z3.theta_sloc(), Some(19.0 / 32.0));
        let z4 = SmoothMaxFamily::new(GeneratorKind::Zang, 4).unwrap();
        assert_eq!(z4.theta_sloc(), Some(19.0 / 32.0));

        assert!(SmoothMaxFamily::new(GeneratorKind::Zang, 1).is_err());
        assert!(SmoothMaxFamily::new(GeneratorKind::Chks, 0).is_err());
    }

    // Sampling oracle for the recursive constant: wherever one coordinate
    // dominates by theta, the tree must hand that coordinate through.
    #[test]
    fn zang_tree_exact_above_recursive_gap() {
        for k in [2usize, 3, 4, 6] {
            let family = SmoothMaxFamily::new(GeneratorKind::Zang, k).unwrap();
            let theta = family.theta_sloc().unwrap();
            let mut rng = CounterRng::new(2024, k as u64);
            for _ in 0..100_000 {
                let mut x: Vec<f64> = (0..k).map(|_| rng.uniform(-5.0, 5.0)).collect();
                let winner = rng.next_u64() as usize % k;
                let rest = x
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != winner)
                    .map(|(_, v)| *v)
                    .fold(f64::NEG_INFINITY, f64::max);
                x[winner] = rest + theta + rng.uniform(0.0, 4.0);
                assert_eq!(family.eval(&x), x[winner]);
                let g = family.grad_scaled(1.0, &x).unwrap();
                assert_eq!(g[winner], 1.0);
            }
        }
    }

    #[test]
    fn generator_values() {
        let e3 = SmoothMaxFamily::new(GeneratorKind::Entropy, 3).unwrap();
        assert!((e3.eval(&[0.0, 0.0, 0.0]) - LN3).abs() < 1e-15);

        let c2 = SmoothMaxFamily::new(GeneratorKind::Chks, 2).unwrap();
        assert!((c2.eval(&[0.0, 0.0]) - 0.5).abs() < 1e-15);

        let z2 = SmoothMaxFamily::new(GeneratorKind::Zang, 2).unwrap();
        assert!((z2.eval(&[0.0, 0.0]) - 3.0 / 32.0).abs() < 1e-15);
        assert_eq!(z2.eval(&[1.0, 0.0]), 1.0);
    }

    #[test]
    fn scaled_values() {
        let e3 = SmoothMaxFamily::new(GeneratorKind::Entropy, 3).unwrap();
        assert!((e3.eval_scaled(0.1, &[0.0, 0.0, 0.0]) - 0.1 * LN3).abs() < 1e-15);
        assert_eq!(e3.eval_scaled(0.0, &[3.0, -1.0, 2.0]), 3.0);
        let z2 = SmoothMaxFamily::new(GeneratorKind::Zang, 2).unwrap();
        assert_eq!(z2.eval_scaled(0.0, &[3.0, -1.0]), 3.0);
        // gap 1 >= eps * theta = 1/2: exact pass-through
        assert_eq!(z2.eval_scaled(1.0, &[1.0, 0.0]), 1.0);
    }

    #[test]
    fn gradients() {
        let e3 = SmoothMaxFamily::new(GeneratorKind::Entropy, 3).unwrap();
        let g = e3.grad_scaled(1.0, &[0.0, 0.0, 0.0]).unwrap();
        for i in 0..3 {
            assert!((g[i] - 1.0 / 3.0).abs() < 1e-15);
        }

        let z2 = SmoothMaxFamily::new(GeneratorKind::Zang, 2).unwrap();
        let g = z2.grad_scaled(1.0, &[1.0, 0.0]).unwrap();
        assert_eq!(g.weights(), &[1.0, 0.0]);

        let c2 = SmoothMaxFamily::new(GeneratorKind::Chks, 2).unwrap();
        let g = c2.grad_scaled(1.0, &[0.0, 0.0]).unwrap();
        assert!((g[0] - 0.5).abs() < 1e-15 && (g[1] - 0.5).abs() < 1e-15);
        let fd = fd_grad(&c2, 1.0, &[0.0, 0.0], 1e-6);
        for i in 0..2 {
            assert!((g[i] - fd[i]).abs() < 1e-7);
        }

        assert!(e3.grad_scaled(0.0, &[0.0, 0.0, 0.0]).is_err());
        let m2 = SmoothMaxFamily::new(GeneratorKind::Max, 2).unwrap();
        assert!(m2.grad_scaled(1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn hessians() {
        let e2 = SmoothMaxFamily::new(GeneratorKind::Entropy, 2).unwrap();
        let h = e2.hess_scaled(1.0, &[0.0, 0.0]).unwrap();
        let expect = [0.25, -0.25, -0.25, 0.25];
        for i in 0..4 {
            assert!((h[i] - expect[i]).abs() < 1e-15);
        }

        let z2 = SmoothMaxFamily::new(GeneratorKind::Zang, 2).unwrap();
        let h = z2.hess_scaled(1.0, &[1.0, 0.0]).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));

        let c3 = SmoothMaxFamily::new(GeneratorKind::Chks, 3).unwrap();
        let mut rng = CounterRng::new(5, 0);
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let h = c3.hess_scaled(0.5, &x).unwrap();
            let fd = fd_hess(&c3, 0.5, &x, 1e-6);
            for i in 0..9 {
                assert!(
                    (h[i] - fd[i]).abs() < 1e-5,
                    "entry {i}: {} vs {}",
                    h[i],
                    fd[i]
                );
            }
        }
    }

    #[test]
    fn exploration_costs() {
        let e3 = SmoothMaxFamily::new(GeneratorKind::Entropy, 3).unwrap();
        let c = e3.exploration_cost(1.0, &[0.0, 0.0, 0.0]).unwrap();
        assert!((c + LN3).abs() < 1e-14);
        assert!((c - rho_entropy(&SimplexVector::uniform(3))).abs() < 1e-14);

        let z2 = SmoothMaxFamily::new(GeneratorKind::Zang, 2).unwrap();
        assert_eq!(z2.exploration_cost(1.0, &[1.0, 0.0]).unwrap(), 0.0);

        // closed-form entropy cross-check at eps = 0.5, x = (1, 0)
        let e2 = SmoothMaxFamily::new(GeneratorKind::Entropy, 2).unwrap();
        let eps = 0.5;
        let x = [1.0, 0.0];
        let p = e2.grad_scaled(eps, &x).unwrap();
        let direct = eps * rho_entropy(&p);
        let via_identity = e2.exploration_cost(eps, &x).unwrap();
        assert!((direct - via_identity).abs() < 1e-12);
    }

    #[test]
    fn subdifferential_active_sets() {
        assert_eq!(subdiff_max(&[3.0, 1.0, 2.0], 1e-9), vec![0]);
        assert_eq!(subdiff_max(&[1.0, 1.0, 0.0], 1e-9), vec![0, 1]);
        assert_eq!(subdiff_max(&[1.0, 1.0 - 1e-12, 0.0], 1e-9), vec![0, 1]);
    }

    #[test]
    fn sloc_predicate() {
        let z2 = SmoothMaxFamily::new(GeneratorKind::Zang, 2).unwrap();
        assert!(z2.sloc_holds_at(1.0, &[1.0, 0.0]).unwrap());
        assert!(!z2.sloc_holds_at(4.0, &[1.0, 0.0]).unwrap());

        let z4 = SmoothMaxFamily::new(GeneratorKind::Zang, 4).unwrap();
        let theta = z4.theta_sloc().unwrap();
        let x = [theta + 0.01, 0.0, -0.3, 0.0];
        assert!(z4.sloc_holds_at(1.0, &x).unwrap());
        let g = z4.grad_scaled(1.0, &x).unwrap();
        assert_eq!(g.weights(), &[1.0, 0.0, 0.0, 0.0]);

        let e2 = SmoothMaxFamily::new(GeneratorKind::Entropy, 2).unwrap();
        assert!(e2.sloc_holds_at(1.0, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn rho_entropy_values() {
        assert_eq!(rho_entropy(&SimplexVector::unit(2, 0)), 0.0);
        let u4 = rho_entropy(&SimplexVector::uniform(4));
        assert!((u4 + 4.0f64.ln()).abs() < 1e-15);
        let v = SimplexVector::new(vec![0.7, 0.3]).unwrap();
        let expect = 0.7 * 0.7f64.ln() + 0.3 * 0.3f64.ln();
        assert!((rho_entropy(&v) - expect).abs() < 1e-15);
        assert!((expect + 0.6108643020548935).abs() < 1e-12);
    }

    #[test]
    fn simplex_vector_repair_rules() {
        // tiny negative clamps and renormalizes
        let v = SimplexVector::new(vec![1.0 + 5e-13, -5e-13]).unwrap();
        assert!(v.weights()[1] == 0.0);
        assert!((v.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // bigger violations are errors
        assert!(SimplexVector::new(vec![1.1, -0.1]).is_err());
        assert!(SimplexVector::new(vec![0.6, 0.6]).is_err());
        // clean inputs are kept bitwise
        let w = vec![0.25, 0.75];
        let v = SimplexVector::new(w.clone()).unwrap();
        assert_eq!(v.weights(), w.as_slice());
    }

    #[test]
    fn translation_covariance_all_kinds() {
        let mut rng = CounterRng::new(77, 0);
        for kind in [
            GeneratorKind::Entropy,
            GeneratorKind::Chks,
            GeneratorKind::Zang,
        ] {
            let family = SmoothMaxFamily::new(kind, 5).unwrap();
            for _ in 0..200 {
                let x: Vec<f64> = (0..5).map(|_| rng.uniform(-10.0, 10.0)).collect();
                let s = rng.uniform(-3.0, 3.0);
                let shifted: Vec<f64> = x.iter().map(|&v| v + s).collect();
                for eps in [1.0, 0.1] {
                    let a = family.eval_scaled(eps, &shifted);
                    let b = family.eval_scaled(eps, &x) + s;
                    assert!((a - b).abs() < 1e-10, "{kind:?} eps={eps}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn leaf_pair_swap_equivariance() {
        // coordinates 0 and 1 form a leaf pair for K = 4
        let mut rng = CounterRng::new(78, 0);
        for kind in [GeneratorKind::Chks, GeneratorKind::Zang] {
            let family = SmoothMaxFamily::new(kind, 4).unwrap();
            for _ in 0..200 {
                let x: Vec<f64> = (0..4).map(|_| rng.uniform(-5.0, 5.0)).collect();
                let mut xs = x.clone();
                xs.swap(0, 1);
                let g = family.grad_scaled(0.7, &x).unwrap();
                let gs = family.grad_scaled(0.7, &xs).unwrap();
                assert!((g[0] - gs[1]).abs() < 1e-12);
                assert!((g[1] - gs[0]).abs() < 1e-12);
                assert!((g[2] - gs[2]).abs() < 1e-12);
            }
        }
    }
}
