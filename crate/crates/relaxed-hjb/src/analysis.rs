//! Quantitative experiments on top of the solver.
//!
//! - [`eps_sweep`]: vanishing-regularization study. Checks the solved gaps
//!   `u_eps - u_0` against the explicit first-order bound
//!   `(exp[(max_k sum_i |b_k^i|_0 / (nu/2) + 1) diam(O)] - 1) * 2 eps c0 / nu`
//!   and the nodewise monotonicity of `u_eps` in `eps`.
//! - [`stability_sweep`]: perturbation study. Sizes each coefficient
//!   perturbation with the discrete Hölder aggregate and records how the
//!   optimal value, the optimal control and the frozen-policy (suboptimal)
//!   value move relative to it.
//! - [`solve_sensitivity`] / [`validate_sensitivity`]: the first-order
//!   sensitivity equation — one frozen-policy linear solve — plus a
//!   Richardson-style remainder table confirming the expansion order.
//! - [`control_convergence`]: distance of the relaxed control to the pure
//!   exploitation strategy on the strict-complementarity mask, with the
//!   exactness flag for locally exact generators.

use crate::discretize::{assemble_lk, DiscreteSystem, Grid};
use crate::error::{Error, Result};
use crate::model::{
    apply_perturbation, discrete_norm, pairwise_holder_seminorm, perturbation_size, validate,
    ActionModel, PerturbationSpec,
};
use crate::smoothmax::{SimplexVector, SmoothMaxFamily};
use crate::solver::{
    solve_hjb_system, solve_linear_dirichlet, solve_suboptimal, SolveResult, SolverOptions,
};

/// One row of a vanishing-regularization sweep.
#[derive(Debug, Clone)]
pub struct EpsSweepRow {
    pub eps: f64,
    /// `sup (u_eps - u_0)` over all nodes.
    pub sup_gap: f64,
    /// Right side of the printed first-order bound.
    pub bound_rhs: f64,
    /// Nodewise `u_prev >= u_eps - 2 tol` against the previous (larger) eps.
    pub monotone_ok: bool,
    /// Discrete `|u_eps - u_0|_{2,beta}` analog.
    pub c2beta_gap: f64,
    /// Sup of `|lambda_eps - lambda*|_1` on the strict mask, when nonempty.
    pub control_distance: Option<f64>,
}

/// Evaluates the explicit error-bound right side with drift sup-norms taken
/// over grid nodes.
pub fn error_bound_rhs(
    model: &ActionModel,
    grid: &Grid,
    family: &SmoothMaxFamily,
    eps: f64,
) -> f64 {
    let nu = model.ellipticity;
    let mut drift = vec![0.0; model.dim];
    let mut max_b = 0.0f64;
    for k in 0..model.num_actions() {
        let mut comp_sup = vec![0.0f64; model.dim];
        for node in 0..grid.num_nodes() {
            let x = grid.coords(node);
            model.drift_at(k, &x, &mut drift);
            for (s, b) in comp_sup.iter_mut().zip(&drift) {
                *s = s.max(b.abs());
            }
        }
        max_b = max_b.max(comp_sup.iter().sum());
    }
    let exponent = (max_b / (nu / 2.0) + 1.0) * grid.diameter();
    (exponent.exp() - 1.0) * 2.0 * eps * family.c0() / nu
}

// Gap between the largest and second-largest entry.
fn top_two_gap(r: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &v in r {
        if v > best {
            second = best;
            best = v;
        } else if v > second {
            second = v;
        }
    }
    best - second
}

/// Interior ranks where the reference residual has a strict top-two gap,
/// eroded by one grid layer (every axis neighbor must be an interior node
/// passing the same threshold).
pub fn strict_mask(grid: &Grid, reference_residual: &[Vec<f64>], gap_threshold: f64) -> Vec<usize> {
    let ni = grid.num_interior();
    let kk = reference_residual.len();
    let mut buf = vec![0.0; kk];
    let mut passes = vec![false; ni];
    for (i, pass) in passes.iter_mut().enumerate() {
        for (k, rk) in reference_residual.iter().enumerate() {
            buf[k] = rk[i];
        }
        *pass = top_two_gap(&buf) >= gap_threshold;
    }
    let mut mask = Vec::new();
    'node: for (i, &node) in grid.interior().iter().enumerate() {
        if !passes[i] {
            continue;
        }
        for axis in 0..grid.dim() {
            for offset in [-1isize, 1] {
                let nb = grid.neighbor(node, axis, offset);
                match grid.interior_rank(nb) {
                    Some(r) if passes[r] => {}
                    _ => continue 'node,
                }
            }
        }
        mask.push(i);
    }
    mask
}

/// Solves the reference problem at `eps = 0` and then each positive `eps`
/// (given strictly descending), recording gaps, bound conformance and
/// monotonicity.
#[allow(clippy::too_many_arguments)]
pub fn eps_sweep(
    model: &ActionModel,
    grid: &Grid,
    family: &SmoothMaxFamily,
    eps_list: &[f64],
    opts: &SolverOptions,
    beta: f64,
    gap_threshold: f64,
) -> Result<Vec<EpsSweepRow>> {
    if eps_list.iter().any(|&e| e <= 0.0) {
        return Err(Error::InvalidArgument(
            "eps sweep entries must be positive (eps = 0 is the internal reference)".into(),
        ));
    }
    if eps_list.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidArgument(
            "eps sweep entries must be strictly descending".into(),
        ));
    }
    validate(model, grid)?;
    let sys = DiscreteSystem::build(model, grid)?;
    let (reference, _) = solve_hjb_system(&sys, grid, family, 0.0, opts)?;
    let mask = strict_mask(grid, &reference.residual, gap_threshold);

    let mut rows = Vec::with_capacity(eps_list.len());
    let mut prev_u: Option<Vec<f64>> = None;
    for &eps in eps_list {
        let (solved, _) = solve_hjb_system(&sys, grid, family, eps, opts)?;
        let gap: Vec<f64> = solved
            .u
            .iter()
            .zip(&reference.u)
            .map(|(a, b)| a - b)
            .collect();
        let sup_gap = gap.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let monotone_ok = match &prev_u {
            None => true,
            Some(prev) => prev
                .iter()
                .zip(&solved.u)
                .all(|(p, c)| *p >= c - 2.0 * opts.tolerance),
        };
        let control_distance = if mask.is_empty() {
            None
        } else {
            Some(
                mask.iter()
                    .map(|&i| solved.control[i].l1_distance(&reference.control[i]))
                    .fold(0.0, f64::max),
            )
        };
        rows.push(EpsSweepRow {
            eps,
            sup_gap,
            bound_rhs: error_bound_rhs(model, grid, family, eps),
            monotone_ok,
            c2beta_gap: discrete_norm(&gap, grid, 2, beta).combined,
            control_distance,
        });
        prev_u = Some(solved.u);
    }
    Ok(rows)
}

/// One row of a perturbation-stability sweep.
#[derive(Debug, Clone)]
pub struct StabilityRow {
    pub t: f64,
    /// Discrete perturbation size at this `t`.
    pub e_per: f64,
    /// Discrete `|u_hat - u|_{2,beta}` analog.
    pub value_gap_norm: f64,
    /// Summed component-wise `|lambda_hat - lambda|_beta` over interior nodes.
    pub control_gap_norm: f64,
    /// Discrete `|u_hat - u_bar|_{2,beta}` analog (optimal vs frozen policy).
    pub subopt_gap_norm: f64,
}

/// A stability sweep plus the worst violation of the performance-gap
/// direction `u_hat >= u_bar` seen across the sweep (nonpositive when the
/// inequality held everywhere).
#[derive(Debug, Clone)]
pub struct StabilitySweep {
    pub rows: Vec<StabilityRow>,
    pub max_subopt_violation: f64,
}

// |lambda_hat - lambda|_beta summed over components, on interior nodes.
fn control_field_norm(a: &[SimplexVector], b: &[SimplexVector], grid: &Grid, beta: f64) -> f64 {
    let coords: Vec<Vec<f64>> = grid.interior().iter().map(|&n| grid.coords(n)).collect();
    let kk = a[0].len();
    let mut total = 0.0;
    for k in 0..kk {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x[k] - y[k]).collect();
        let sup = diff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        total += sup + pairwise_holder_seminorm(&diff, &coords, beta);
    }
    total
}

/// Solves the perturbed problem and the frozen-policy problem at every `t`
/// and sizes the three gaps against the perturbation size.
#[allow(clippy::too_many_arguments)]
pub fn stability_sweep(
    base_model: &ActionModel,
    spec: &PerturbationSpec,
    t_list: &[f64],
    grid: &Grid,
    family: &SmoothMaxFamily,
    eps: f64,
    beta: f64,
    opts: &SolverOptions,
) -> Result<StabilitySweep> {
    validate(base_model, grid)?;
    let base_sys = DiscreteSystem::build(base_model, grid)?;
    let (base, _) = solve_hjb_system(&base_sys, grid, family, eps, opts)?;
    let mut rows = Vec::with_capacity(t_list.len());
    let mut max_violation = f64::NEG_INFINITY;
    for &t in t_list {
        let perturbed = apply_perturbation(base_model, spec, t, grid)?;
        let psys = DiscreteSystem::build(&perturbed, grid)?;
        let (hat, _) = solve_hjb_system(&psys, grid, family, eps, opts)?;
        let bar = solve_suboptimal(&base, family, &psys, grid)?;
        let value_gap: Vec<f64> = hat.u.iter().zip(&base.u).map(|(a, b)| a - b).collect();
        let subopt_gap: Vec<f64> = hat.u.iter().zip(&bar).map(|(a, b)| a - b).collect();
        max_violation = max_violation.max(
            bar.iter()
                .zip(&hat.u)
                .map(|(b, h)| b - h)
                .fold(f64::NEG_INFINITY, f64::max),
        );
        rows.push(StabilityRow {
            t,
            e_per: perturbation_size(base_model, &perturbed, grid, beta),
            value_gap_norm: discrete_norm(&value_gap, grid, 2, beta).combined,
            control_gap_norm: control_field_norm(&hat.control, &base.control, grid, beta),
            subopt_gap_norm: discrete_norm(&subopt_gap, grid, 2, beta).combined,
        });
    }
    Ok(StabilitySweep {
        rows,
        max_subopt_violation: max_violation,
    })
}

/// First-order response of the value and control to a coefficient
/// perturbation direction.
#[derive(Debug, Clone)]
pub struct SensitivityResult {
    /// `delta u` on all nodes (boundary = exit-reward delta).
    pub delta_u: Vec<f64>,
    /// `delta lambda` per interior node; rows sum to zero (tangent to the
    /// simplex).
    pub delta_lambda: Vec<Vec<f64>>,
}

// The perturbation direction viewed as a coefficient bundle, so the delta
// operators can be assembled by the ordinary stencil machinery.
fn delta_model(base: &ActionModel, spec: &PerturbationSpec) -> ActionModel {
    ActionModel {
        dim: base.dim,
        domain: base.domain.clone(),
        ellipticity: 0.0,
        actions: spec.actions.clone(),
        exit_reward: spec.exit_reward.clone(),
    }
}

/// Solves the sensitivity equation at a converged base solve: one linear
/// Dirichlet solve with the base mixing, forced by the delta operators
/// applied to the base value.
///
/// The control response uses the generator Hessian at the base residual,
/// so `eps > 0` is required.
pub fn solve_sensitivity(
    model: &ActionModel,
    grid: &Grid,
    family: &SmoothMaxFamily,
    eps: f64,
    base: &SolveResult,
    spec: &PerturbationSpec,
) -> Result<SensitivityResult> {
    if eps <= 0.0 {
        return Err(Error::InvalidArgument(
            "sensitivity needs eps > 0 (the control map is not differentiable at eps = 0)".into(),
        ));
    }
    if base.eps != eps {
        return Err(Error::InvalidArgument(
            "base solve eps does not match the requested eps".into(),
        ));
    }
    let kk = model.num_actions();
    let ni = grid.num_interior();
    let base_sys = DiscreteSystem::build(model, grid)?;
    let dmodel = delta_model(model, spec);
    // delta-coefficient operators, upwinded like the base scheme
    let delta_ops = (0..kk)
        .map(|k| assemble_lk(&dmodel, k, grid, Some(model)))
        .collect::<Result<Vec<_>>>()?;
    let delta_f: Vec<Vec<f64>> = (0..kk)
        .map(|k| {
            grid.interior()
                .iter()
                .map(|&n| dmodel.reward_at(k, &grid.coords(n)))
                .collect()
        })
        .collect();
    let delta_g: Vec<f64> = (0..grid.num_nodes())
        .map(|n| dmodel.exit_reward_at(&grid.coords(n)))
        .collect();

    // forcing per action: w_k = L^delta_k u + delta f_k
    let mut w: Vec<Vec<f64>> = Vec::with_capacity(kk);
    for k in 0..kk {
        let mut wk = delta_ops[k].apply(&base.u);
        for (v, df) in wk.iter_mut().zip(&delta_f[k]) {
            *v += df;
        }
        w.push(wk);
    }
    let source: Vec<f64> = (0..ni)
        .map(|i| (0..kk).map(|k| base.control[i][k] * w[k][i]).sum())
        .collect();
    let delta_u = solve_linear_dirichlet(&base.control, &base_sys.ops, grid, &source, &delta_g)?;

    // delta lambda = Hess H_eps(r_base) (L delta_u + w)
    let mut delta_lambda = Vec::with_capacity(ni);
    let l_delta_u: Vec<Vec<f64>> = base_sys.ops.iter().map(|op| op.apply(&delta_u)).collect();
    let mut rbuf = vec![0.0; kk];
    let mut zbuf = vec![0.0; kk];
    for i in 0..ni {
        for k in 0..kk {
            rbuf[k] = base.residual[k][i];
            zbuf[k] = l_delta_u[k][i] + w[k][i];
        }
        let hess = family.hess_scaled(eps, &rbuf)?;
        let mut dl = vec![0.0; kk];
        for (r, dl_r) in dl.iter_mut().enumerate() {
            *dl_r = (0..kk).map(|c| hess[r * kk + c] * zbuf[c]).sum();
        }
        delta_lambda.push(dl);
    }
    Ok(SensitivityResult {
        delta_u,
        delta_lambda,
    })
}

/// One row of the first-order remainder table.
#[derive(Debug, Clone)]
pub struct RemainderRow {
    pub t: f64,
    /// `sup |S(t) - u - t delta_u|` over all nodes.
    pub remainder: f64,
    /// `log2(remainder(previous t) / remainder(t))` when the previous row's
    /// `t` is exactly twice this one.
    pub order: Option<f64>,
}

/// Re-solves the full problem at `theta + t * delta` for each probe scale
/// and measures the first-order expansion remainder.
pub fn validate_sensitivity(
    model: &ActionModel,
    grid: &Grid,
    family: &SmoothMaxFamily,
    eps: f64,
    spec: &PerturbationSpec,
    t_list: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<RemainderRow>> {
    let sys = DiscreteSystem::build(model, grid)?;
    let (base, _) = solve_hjb_system(&sys, grid, family, eps, opts)?;
    let sens = solve_sensitivity(model, grid, family, eps, &base, spec)?;
    let mut rows: Vec<RemainderRow> = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let perturbed = apply_perturbation(model, spec, t, grid)?;
        let (solved, _) = solve_hjb_system(
            &DiscreteSystem::build(&perturbed, grid)?,
            grid,
            family,
            eps,
            opts,
        )?;
        let remainder = solved
            .u
            .iter()
            .zip(&base.u)
            .zip(&sens.delta_u)
            .map(|((s, u), du)| (s - u - t * du).abs())
            .fold(0.0, f64::max);
        let order = rows.last().and_then(|prev: &RemainderRow| {
            let halves = (prev.t - 2.0 * t).abs() <= 1e-9 * prev.t.abs();
            (halves && remainder > 0.0).then(|| (prev.remainder / remainder).log2())
        });
        rows.push(RemainderRow {
            t,
            remainder,
            order,
        });
    }
    Ok(rows)
}

/// One row of the control-convergence table.
#[derive(Debug, Clone)]
pub struct ControlConvergenceRow {
    pub eps: f64,
    /// Sup of `|lambda_eps - lambda*|_1` over the mask (`None` if empty).
    pub sup_distance: Option<f64>,
    /// For locally exact generators, whether `lambda_eps == lambda*`
    /// bitwise on the mask; only reported once `eps <= gap_threshold/theta`.
    pub exact: Option<bool>,
}

/// Control-convergence diagnostics on the strict-complementarity mask.
#[derive(Debug, Clone)]
pub struct ControlConvergenceReport {
    /// Interior ranks forming the mask.
    pub mask: Vec<usize>,
    pub rows: Vec<ControlConvergenceRow>,
    /// Set when the mask is empty (no strict argmax anywhere).
    pub warning: Option<String>,
}

/// Compares the relaxed controls against the pure exploitation strategy of
/// the `eps = 0` solve, restricted to the strict mask.
pub fn control_convergence(
    model: &ActionModel,
    grid: &Grid,
    family: &SmoothMaxFamily,
    eps_list: &[f64],
    gap_threshold: f64,
    opts: &SolverOptions,
) -> Result<ControlConvergenceReport> {
    if gap_threshold <= 0.0 {
        return Err(Error::InvalidArgument(
            "gap threshold must be positive".into(),
        ));
    }
    validate(model, grid)?;
    let sys = DiscreteSystem::build(model, grid)?;
    let (reference, _) = solve_hjb_system(&sys, grid, family, 0.0, opts)?;
    let mask = strict_mask(grid, &reference.residual, gap_threshold);
    let warning = mask.is_empty().then(|| {
        format!(
            "strict mask is empty at gap threshold {gap_threshold}: \
             no node has a unique argmax at this resolution"
        )
    });
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        if eps <= 0.0 {
            return Err(Error::InvalidArgument(
                "control convergence probes need eps > 0".into(),
            ));
        }
        let (solved, _) = solve_hjb_system(&sys, grid, family, eps, opts)?;
        let sup_distance = (!mask.is_empty()).then(|| {
            mask.iter()
                .map(|&i| solved.control[i].l1_distance(&reference.control[i]))
                .fold(0.0, f64::max)
        });
        let exact = match family.theta_sloc() {
            Some(theta) if theta > 0.0 && eps <= gap_threshold / theta && !mask.is_empty() => Some(
                mask.iter()
                    .all(|&i| solved.control[i].weights() == reference.control[i].weights()),
            ),
            _ => None,
        };
        rows.push(ControlConvergenceRow {
            eps,
            sup_distance,
            exact,
        });
    }
    Ok(ControlConvergenceReport {
        mask,
        rows,
        warning,
    })
}

/// Records the discrete `|delta u|_{2,beta}` analog across `eps` — a trend
/// table for the blow-up of the sensitivity as exploration vanishes. No
/// quantitative rate is asserted; the table is emitted for inspection.
pub fn eps_scaling_probe(
    model: &ActionModel,
    grid: &Grid,
    family: &SmoothMaxFamily,
    eps_list: &[f64],
    spec: &PerturbationSpec,
    beta: f64,
    opts: &SolverOptions,
) -> Result<Vec<(f64, f64)>> {
    let sys = DiscreteSystem::build(model, grid)?;
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let (base, _) = solve_hjb_system(&sys, grid, family, eps, opts)?;
        let sens = solve_sensitivity(model, grid, family, eps, &base, spec)?;
        rows.push((eps, discrete_norm(&sens.delta_u, grid, 2, beta).combined));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{constant, BoxDomain};
    use crate::problems;
    use crate::smoothmax::GeneratorKind;
    use crate::solver::solve_hjb;

    const LN3: f64 = 1.0986122886681098;

    fn grid_1d(nodes: usize) -> Grid {
        Grid::build(&BoxDomain::new(vec![0.0], vec![1.0]).unwrap(), &[nodes]).unwrap()
    }

    #[test]
    fn bound_rhs_closed_forms() {
        let grid = grid_1d(101);
        let model = problems::uniform_f(3);
        let family = SmoothMaxFamily::new(GeneratorKind::Entropy, 3).unwrap();
        let eps = 0.1;
        let expect = (std::f64::consts::E - 1.0) * eps * LN3;
        assert!((error_bound_rhs(&model, &grid, &family, eps) - expect).abs() < 1e-12);
        assert_eq!(error_bound_rhs(&model, &grid, &family, 0.0), 0.0);

        // drift with sum of component sups = 1, nu = 2, c0 = ln 2
        let mut drifted = problems::uniform_f(2);
        for a in &mut drifted.actions {
            a.drift = vec![constant(1.0)];
        }
        let e2 = SmoothMaxFamily::new(GeneratorKind::Entropy, 2).unwrap();
        let expect = (2.0f64.exp() - 1.0) * 0.1 * 2.0f64.ln();
        assert!((error_bound_rhs(&drifted, &grid, &e2, 0.1) - expect).abs() < 1e-12);
    }

    #[test]
    fn eps_sweep_uniform_f() {
        let model = problems::uniform_f(3);
        let grid = grid_1d(201);
        let family = SmoothMaxFamily::new(GeneratorKind::Entropy, 3).unwrap();
        let opts = SolverOptions::default();
        let eps_list = [0.4, 0.2, 0.1, 0.05];
        let rows = eps_sweep(&model, &grid, &family, &eps_list, &opts, 0.5, 0.5).unwrap();
        for row in &rows {
            let ratio = row.sup_gap / row.eps;
            assert!(
                (ratio - LN3 / 8.0).abs() <= 0.02 * (LN3 / 8.0),
                "eps {}: ratio {ratio}",
                row.eps
            );
            assert!(row.sup_gap >= -2.0 * opts.tolerance);
            assert!(row.sup_gap <= row.bound_rhs + 2.0 * opts.tolerance);
            assert!(row.monotone_ok);
            // all actions tie: no strict mask anywhere
            assert!(row.control_distance.is_none());
        }
    }

    #[test]
    fn eps_sweep_exact_regularization() {
        let model = problems::two_action_gap();
        let grid = grid_1d(101);
        let family = SmoothMaxFamily::new(GeneratorKind::Zang, 2).unwrap();
        let opts = SolverOptions::default();
        let rows = eps_sweep(&model, &grid, &family, &[1.0, 0.5, 0.1], &opts, 0.5, 0.5).unwrap();
        for row in &rows {
            assert!(row.sup_gap.abs() <= 2.0 * opts.tolerance, "eps {}", row.eps);
            assert_eq!(row.control_distance, Some(0.0));
        }
    }

    #[test]
    fn eps_sweep_rejects_bad_lists() {
        let model = problems::uniform_f(2);
        let grid = grid_1d(21);
        let family = SmoothMaxFamily::new(GeneratorKind::Entropy, 2).unwrap();
        let opts = SolverOptions::default();
        assert!(eps_sweep(&model, &grid, &family, &[0.1, 0.2], &opts, 0.5, 0.5).is_err());
        assert!(eps_sweep(&model, &grid, &family, &[0.1, 0.0], &opts, 0.5, 0.5).is_err());
    }

    #[test]
    fn stability_zero_and_uniform_shift() {
        let model = problems::uniform_f(2);
        let grid = grid_1d(101);
        let family = SmoothMaxFamily::new(GeneratorKind::Entropy, 2).unwrap();
        let opts = SolverOptions::default();
        let mut spec = PerturbationSpec::zero(1, 2);
        for k in 0..2 {
            spec = spec.with_reward_delta(k, constant(1.0));
        }
        let sweep = stability_sweep(
            &model,
            &spec,
            &[0.0, 0.2, 0.1],
            &grid,
            &family,
            0.1,
            0.5,
            &opts,
        )
        .unwrap();
        let zero_row = &sweep.rows[0];
        assert!(zero_row.value_gap_norm <= 2e-10);
        assert!(zero_row.subopt_gap_norm <= 2e-10);
        assert_eq!(zero_row.e_per, 0.0);
        for row in &sweep.rows[1..] {
            assert!((row.e_per - row.t).abs() < 1e-12);
        }
        assert!(sweep.max_subopt_violation <= 2e-10);
    }

    #[test]
    fn stability_sup_part_ratio_is_one_eighth() {
        let model = problems::uniform_f(2);
        let grid = grid_1d(101);
        let family = SmoothMaxFamily::new(GeneratorKind::Entropy, 2).unwrap();
        let opts = SolverOptions::default();
        let mut spec = PerturbationSpec::zero(1, 2);
        for k in 0..2 {
            spec = spec.with_reward_delta(k, constant(1.0));
        }
        let sys = DiscreteSystem::build(&model, &grid).unwrap();
        let (base, _) = solve_hjb_system(&sys, &grid, &family, 0.1, &opts).unwrap();
        let t = 0.3;
        let perturbed = apply_perturbation(&model, &spec, t, &grid).unwrap();
        let (hat, _) = solve_hjb_system(
            &DiscreteSystem::build(&perturbed, &grid).unwrap(),
            &grid,
            &family,
            0.1,
            &opts,
        )
        .unwrap();
        let gap: Vec<f64> = hat.u.iter().zip(&base.u).map(|(a, b)| a - b).collect();
        let sup = discrete_norm(&gap, &grid, 2, 0.5).sup[0];
        let e = perturbation_size(&model, &perturbed, &grid, 0.5);
        assert!((sup / e - 1.0 / 8.0).abs() < 1e-9, "ratio {}", sup / e);
    }

    #[test]
    fn stability_exact_regularization_control_is_perturbation_proof() {
        let model = problems::two_action_gap();
        let grid = grid_1d(101);
        let family = SmoothMaxFamily::new(GeneratorKind::Zang, 2).unwrap();
        let opts = SolverOptions::default();
        // small reward bumps keep the gap above eps * theta everywhere
        let spec = PerturbationSpec::zero(1, 2).with_reward_delta(1, constant(1.0));
        let sweep = stability_sweep(
            &model,
            &spec,
            &[0.1, 0.05, 0.01],
            &grid,
            &family,
            1.0,
            0.5,
            &opts,
        )
        .unwrap();
        for row in &sweep.rows {
            assert_eq!(row.control_gap_norm, 0.0, "t = {}", row.t);
        }
    }

    #[test]
    fn sensitivity_zero_direction() {
        let model = problems::uniform_f(2);
        let grid = grid_1d(51);
        let family = SmoothMaxFamily::new(GeneratorKind::Entropy, 2).unwrap();
        let opts = SolverOptions::default();
        let base = solve_hjb(&model, &grid, &family, 0.1, &opts).unwrap();
        let spec = PerturbationSpec::zero(1, 2);
        let sens = solve_sensitivity(&model, &grid, &family, 0.1, &base, &spec).unwrap();
        assert!(sens.delta_u.iter().all(|&v| v.abs() < 1e-14));
        assert!(sens
            .delta_lambda
            .iter()
            .all(|row| row.iter().all(|&v| v.abs() < 1e-14)));
    }

    #[test]
    fn sensitivity_closed_forms() {
        let model = problems::uniform_f(3);
        let grid = grid_1d(101);
        let family = SmoothMaxFamily::new(GeneratorKind::Entropy, 3).unwrap();
        let opts = SolverOptions::default();
        let base = solve_hjb(&model, &grid, &family, 0.1, &opts).unwrap();

        // reward shift s on every action: delta u = s x(1-x)/2 at nodes
        let s = 0.7;
        let mut spec = PerturbationSpec::zero(1, 3);
        for k in 0..3 {
            spec = spec.with_reward_delta(k, constant(s));
        }
        let sens = solve_sensitivity(&model, &grid, &family, 0.1, &base, &spec).unwrap();
        for (n, &v) in sens.delta_u.iter().enumerate() {
            let x = grid.coords(n)[0];
            assert!((v - s * x * (1.0 - x) / 2.0).abs() < 1e-11);
        }
        for row in &sens.delta_lambda {
            let sum: f64 = row.iter().sum();
            assert!(sum.abs() < 1e-9);
        }

        // boundary shift: delta u is identically s (c = 0)
        let spec = PerturbationSpec::zero(1, 3).with_exit_delta(constant(s));
        let sens = solve_sensitivity(&model, &grid, &family, 0.1, &base, &spec).unwrap();
        for &v in &sens.delta_u {
            assert!((v - s).abs() < 1e-11);
        }
    }

    #[test]
    fn remainder_table_linear_case_is_exact() {
        let model = problems::uniform_f(3);
        let grid = grid_1d(101);
        let family = SmoothMaxFamily::new(GeneratorKind::Entropy, 3).unwrap();
        let opts = SolverOptions::default();
        let mut spec = PerturbationSpec::zero(1, 3);
        for k in 0..3 {
            spec = spec.with_reward_delta(k, constant(1.0));
        }
        let rows = validate_sensitivity(
            &model,
            &grid,
            &family,
            0.1,
            &spec,
            &[0.0, 0.2, 0.1, 0.05],
            &opts,
        )
        .unwrap();
        assert!(rows[0].remainder <= 2.0 * opts.tolerance);
        for row in &rows[1..] {
            assert!(row.remainder <= 5.0 * opts.tolerance, "t = {}", row.t);
        }
    }

    #[test]
    fn remainder_table_order_two_on_nonlinear_case() {
        let model = problems::two_action_gap();
        let grid = grid_1d(101);
        let family = SmoothMaxFamily::new(GeneratorKind::Entropy, 2).unwrap();
        let opts = SolverOptions::default();
        let spec = PerturbationSpec::zero(1, 2).with_reward_delta(1, constant(1.0));
        let rows = validate_sensitivity(
            &model,
            &grid,
            &family,
            0.5,
            &spec,
            &[0.1, 0.05, 0.025],
            &opts,
        )
        .unwrap();
        assert!(rows[1].order.unwrap() >= 1.5, "order {:?}", rows[1].order);
        assert!(rows[2].order.unwrap() >= 1.5, "order {:?}", rows[2].order);
    }

    #[test]
    fn control_convergence_gap_problem() {
        let model = problems::two_action_gap();
        let grid = grid_1d(101);
        let opts = SolverOptions::default();

        let zang = SmoothMaxFamily::new(GeneratorKind::Zang, 2).unwrap();
        let report =
            control_convergence(&model, &grid, &zang, &[1.0, 0.5, 0.2], 0.5, &opts).unwrap();
        assert!(report.warning.is_none());
        assert!(!report.mask.is_empty());
        for row in &report.rows {
            assert_eq!(row.sup_distance, Some(0.0));
            assert_eq!(row.exact, Some(true), "eps {}", row.eps);
        }

        let entropy = SmoothMaxFamily::new(GeneratorKind::Entropy, 2).unwrap();
        let report =
            control_convergence(&model, &grid, &entropy, &[1.0, 0.5, 0.2], 0.5, &opts).unwrap();
        for row in &report.rows {
            let expect = 2.0 / (1.0 + (1.0 / row.eps).exp());
            let got = row.sup_distance.unwrap();
            assert!(
                (got - expect).abs() < 1e-6,
                "eps {}: {got} vs {expect}",
                row.eps
            );
            assert!(row.exact.is_none());
        }
    }

    #[test]
    fn control_convergence_empty_mask_warns() {
        let model = problems::uniform_f(3);
        let grid = grid_1d(51);
        let family = SmoothMaxFamily::new(GeneratorKind::Entropy, 3).unwrap();
        let report = control_convergence(
            &model,
            &grid,
            &family,
            &[0.5],
            0.5,
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(report.warning.is_some());
        assert!(report.rows[0].sup_distance.is_none());
    }

    #[test]
    fn eps_scaling_probe_cases() {
        let grid = grid_1d(51);
        let opts = SolverOptions::default();

        // linear case: the response does not depend on eps at all
        let model = problems::uniform_f(2);
        let family = SmoothMaxFamily::new(GeneratorKind::Entropy, 2).unwrap();
        let mut spec = PerturbationSpec::zero(1, 2);
        for k in 0..2 {
            spec = spec.with_reward_delta(k, constant(1.0));
        }
        let rows =
            eps_scaling_probe(&model, &grid, &family, &[0.4, 0.2, 0.1], &spec, 0.5, &opts).unwrap();
        for w in rows.windows(2) {
            assert!((w[0].1 - w[1].1).abs() < 1e-9);
        }

        // zero direction gives zeros
        let zero = PerturbationSpec::zero(1, 2);
        let rows =
            eps_scaling_probe(&model, &grid, &family, &[0.2, 0.1], &zero, 0.5, &opts).unwrap();
        assert!(rows.iter().all(|r| r.1 < 1e-12));

        // switching problem: trend recorded (norm grows as eps shrinks here)
        let switchy = problems::sign_switch_drift();
        let spec = PerturbationSpec::zero(1, 2).with_reward_delta(1, constant(1.0));
        let rows = eps_scaling_probe(
            &switchy,
            &grid,
            &family,
            &[0.4, 0.2, 0.1, 0.05],
            &spec,
            0.5,
            &opts,
        )
        .unwrap();
        for w in rows.windows(2) {
            assert!(
                w[1].1 >= w[0].1 - 1e-9,
                "norm shrank as eps fell: {} -> {}",
                w[0].1,
                w[1].1
            );
        }
    }

    #[test]
    fn sensitivity_rejects_eps_zero() {
        let model = problems::uniform_f(2);
        let grid = grid_1d(21);
        let family = SmoothMaxFamily::new(GeneratorKind::Entropy, 2).unwrap();
        let base = solve_hjb(&model, &grid, &family, 0.0, &SolverOptions::default()).unwrap();
        let spec = PerturbationSpec::zero(1, 2);
        assert!(solve_sensitivity(&model, &grid, &family, 0.0, &base, &spec).is_err());
    }
}
