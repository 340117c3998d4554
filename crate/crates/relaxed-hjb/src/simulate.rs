//! Monte-Carlo verification of the PDE value.
//!
//! The relaxed state dynamics mixes the per-action coefficients through the
//! feedback distribution: drift `b~ = sum_k lambda_k b_k` and squared
//! volatility `s~ s~^T = sum_k lambda_k 2 a_k`, with `s~` the symmetric PSD
//! square root. Paths are stepped by Euler-Maruyama until they leave the
//! open box, accumulating the discounted running reward (including the
//! exploration bonus, re-derived from the stored base residual) and the exit
//! reward at the boundary.
//!
//! Exit detection is per step: a step whose endpoint lands outside stops the
//! path, and in between a Brownian-bridge test catches excursions that cross
//! a face and come back within the step (the plain endpoint test alone
//! biases the exit time by O(sqrt(dt)), which a 1e-4 step cannot hide at
//! 10^4-path resolution). The bridge test uses the per-axis marginal
//! variance; with a diagonal mixed diffusion it is exact.
//!
//! Paths use per-path counter-derived seeds and a fixed pairwise reduction,
//! so estimates are bitwise reproducible for any thread count.

use crate::discretize::Grid;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::model::ActionModel;
use crate::rng::CounterRng;
use crate::smoothmax::{SimplexVector, SmoothMaxFamily};
use crate::solver::SolveResult;

/// Symmetric PSD square root via eigendecomposition.
///
/// Eigenvalues in `[-tol, 0)` clamp to zero; anything below `-tol` is an
/// error. Satisfies `S * S = A` to roughly machine precision.
pub fn psd_sqrt(a: &SymMatrix, tol: f64) -> Result<SymMatrix> {
    let n = a.dim();
    let (eigs, vecs) = a.sym_eig();
    if eigs[0] < -tol {
        return Err(Error::NotPsd(format!(
            "smallest eigenvalue {} below -{tol}",
            eigs[0]
        )));
    }
    let mut s = SymMatrix::zero(n);
    for (lam, v) in eigs.iter().zip(&vecs) {
        let root = lam.max(0.0).sqrt();
        for i in 0..n {
            for j in i..n {
                let val = s.get(i, j) + root * v[i] * v[j];
                s.set(i, j, val);
            }
        }
    }
    Ok(s)
}

/// Mixed drift and volatility at a state under a given distribution.
pub fn mix_at(
    model: &ActionModel,
    x: &[f64],
    lambda: &SimplexVector,
) -> Result<(Vec<f64>, SymMatrix)> {
    let n = model.dim;
    let mut drift = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut a2 = SymMatrix::zero(n);
    for k in 0..model.num_actions() {
        let w = lambda[k];
        model.drift_at(k, x, &mut b);
        for (d, bi) in drift.iter_mut().zip(&b) {
            *d += w * bi;
        }
        let ak = model.diffusion_at(k, x);
        for i in 0..n {
            for j in i..n {
                let v = a2.get(i, j) + w * 2.0 * ak.get(i, j);
                a2.set(i, j, v);
            }
        }
    }
    let sigma = psd_sqrt(&a2, 1e-9)?;
    Ok((drift, sigma))
}

/// Mixed coefficients sampled at every interior node.
#[derive(Debug, Clone)]
pub struct MixedDiffusion {
    /// `sum_k lambda_k b_k` per interior node.
    pub drift: Vec<Vec<f64>>,
    /// Symmetric PSD square root of `sum_k lambda_k 2 a_k` per interior node.
    pub sigma: Vec<SymMatrix>,
}

/// Builds the relaxed-dynamics coefficients for a feedback control field.
pub fn mixed_coefficients(
    model: &ActionModel,
    grid: &Grid,
    control: &[SimplexVector],
) -> Result<MixedDiffusion> {
    let mut drift = Vec::with_capacity(control.len());
    let mut sigma = Vec::with_capacity(control.len());
    for (&node, lambda) in grid.interior().iter().zip(control) {
        let x = grid.coords(node);
        let (b, s) = mix_at(model, &x, lambda)?;
        drift.push(b);
        sigma.push(s);
    }
    Ok(MixedDiffusion { drift, sigma })
}

/// Monte-Carlo run controls.
#[derive(Debug, Clone)]
pub struct McOptions {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub threads: usize,
    /// Hard per-path step cap (exit is a.s. finite; hitting the cap is a
    /// diagnostic error).
    pub step_cap: usize,
    /// Enable the within-step Brownian-bridge crossing test.
    pub bridge_exit: bool,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            n_paths: 10_000,
            dt: 1e-4,
            seed: 42,
            threads: 1,
            step_cap: 10_000_000,
            bridge_exit: true,
        }
    }
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n_paths)`.
    pub stderr: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
}

// Deterministic pairwise sum (order fixed by the slice layout).
fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let (a, b) = v.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

struct PathContext<'a> {
    model: &'a ActionModel,
    grid: &'a Grid,
    control: &'a [SimplexVector],
    /// Exploration cost per interior node (zero at eps = 0).
    explore: &'a [f64],
    opts: &'a McOptions,
    start: &'a [f64],
}

fn run_path(ctx: &PathContext<'_>, path: usize) -> Result<f64> {
    let model = ctx.model;
    let n = model.dim;
    let dt = ctx.opts.dt;
    let sqrt_dt = dt.sqrt();
    let lo = &model.domain.lo;
    let hi = &model.domain.hi;
    let mut rng = CounterRng::new(ctx.opts.seed, path as u64);

    let mut x: Vec<f64> = ctx.start.to_vec();
    let mut gamma = 1.0f64;
    let mut total = 0.0f64;
    let mut b = vec![0.0; n];
    let mut noise = vec![0.0; n];
    let mut x_new = vec![0.0; n];

    for _step in 0..ctx.opts.step_cap {
        let rank = ctx
            .grid
            .interior_rank(ctx.grid.nearest_interior(&x))
            .expect("clamped lookup is interior");
        let lambda = &ctx.control[rank];

        // mixed coefficients at the exact state
        let (drift, sigma) = mix_at(model, &x, lambda)?;
        let mut c_mix = 0.0;
        let mut f_mix = 0.0;
        for k in 0..model.num_actions() {
            c_mix += lambda[k] * model.discount_at(k, &x);
            f_mix += lambda[k] * model.reward_at(k, &x);
        }

        total += gamma * (f_mix - ctx.explore[rank]) * dt;
        gamma *= (-c_mix * dt).exp();

        for v in noise.iter_mut() {
            *v = rng.next_normal();
        }
        sigma.matvec(&noise, &mut b);
        for i in 0..n {
            x_new[i] = x[i] + drift[i] * dt + sqrt_dt * b[i];
        }

        // endpoint exit
        let endpoint_out = x_new
            .iter()
            .zip(lo.iter().zip(hi))
            .any(|(v, (l, h))| *v <= *l || *v >= *h);
        if endpoint_out {
            let clamped: Vec<f64> = x_new
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect();
            return Ok(total + gamma * model.exit_reward_at(&clamped));
        }

        // within-step crossing test against each face
        if ctx.opts.bridge_exit {
            let mut crossed: Option<Vec<f64>> = None;
            for axis in 0..n {
                let var = sigma
                    .as_slice()
                    .chunks(n)
                    .nth(axis)
                    .map(|row| row.iter().map(|v| v * v).sum::<f64>())
                    .unwrap_or(0.0)
                    * dt;
                if var <= 0.0 {
                    continue;
                }
                let p_lo = (-2.0 * (x[axis] - lo[axis]) * (x_new[axis] - lo[axis]) / var).exp();
                let p_hi = (-2.0 * (hi[axis] - x[axis]) * (hi[axis] - x_new[axis]) / var).exp();
                let u = rng.next_f64();
                if u < p_lo {
                    let mut exit = x_new.clone();
                    exit[axis] = lo[axis];
                    crossed = Some(exit);
                } else if u < p_lo + p_hi {
                    let mut exit = x_new.clone();
                    exit[axis] = hi[axis];
                    crossed = Some(exit);
                }
                if crossed.is_some() {
                    break;
                }
            }
            if let Some(mut exit) = crossed {
                for (v, (l, h)) in exit.iter_mut().zip(lo.iter().zip(hi)) {
                    *v = v.clamp(*l, *h);
                }
                return Ok(total + gamma * model.exit_reward_at(&exit));
            }
        }
        std::mem::swap(&mut x, &mut x_new);
    }
    Err(Error::StepCap {
        path,
        cap: ctx.opts.step_cap,
    })
}

/// Simulates the relaxed dynamics under the solved feedback control and
/// estimates the value at `x0`.
///
/// The control (and exploration cost) is looked up at the nearest interior
/// node; all other coefficients are evaluated at the exact state.
pub fn simulate_value(
    model: &ActionModel,
    grid: &Grid,
    solve: &SolveResult,
    family: &SmoothMaxFamily,
    x0: &[f64],
    opts: &McOptions,
) -> Result<McEstimate> {
    if !model.domain.contains_open(x0) {
        return Err(Error::InvalidArgument(format!(
            "start point {x0:?} is not strictly inside the domain"
        )));
    }
    if opts.n_paths == 0 {
        return Err(Error::InvalidArgument("need at least one path".into()));
    }
    let ni = grid.num_interior();
    assert_eq!(solve.control.len(), ni, "control/grid mismatch");

    // exploration cost per node via the conjugacy identity at the stored
    // base residual
    let kk = model.num_actions();
    let mut explore = vec![0.0; ni];
    if solve.eps > 0.0 {
        let mut buf = vec![0.0; kk];
        for (i, cost) in explore.iter_mut().enumerate() {
            for (k, rk) in solve.residual.iter().enumerate() {
                buf[k] = rk[i];
            }
            let lambda = &solve.control[i];
            let dot: f64 = buf.iter().zip(lambda.weights()).map(|(a, b)| a * b).sum();
            *cost = dot - family.eval_scaled(solve.eps, &buf);
        }
    }

    let ctx = PathContext {
        model,
        grid,
        control: &solve.control,
        explore: &explore,
        opts,
        start: x0,
    };

    let mut values = vec![0.0f64; opts.n_paths];
    let threads = opts.threads.max(1).min(opts.n_paths);
    if threads == 1 {
        for (p, slot) in values.iter_mut().enumerate() {
            *slot = run_path(&ctx, p)?;
        }
    } else {
        let chunk = opts.n_paths.div_ceil(threads);
        let errors = std::sync::Mutex::new(Vec::<Error>::new());
        std::thread::scope(|scope| {
            for (c, slice) in values.chunks_mut(chunk).enumerate() {
                let ctx = &ctx;
                let errors = &errors;
                scope.spawn(move || {
                    for (off, slot) in slice.iter_mut().enumerate() {
                        match run_path(ctx, c * chunk + off) {
                            Ok(v) => *slot = v,
                            Err(e) => {
                                errors.lock().unwrap().push(e);
                                return;
                            }
                        }
                    }
                });
            }
        });
        if let Some(e) = errors.into_inner().unwrap().into_iter().next() {
            return Err(e);
        }
    }

    let n = opts.n_paths as f64;
    let mean = pairwise_sum(&values) / n;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let stderr = if opts.n_paths > 1 {
        (pairwise_sum(&sq) / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        stderr,
        n_paths: opts.n_paths,
        dt: opts.dt,
        seed: opts.seed,
    })
}
