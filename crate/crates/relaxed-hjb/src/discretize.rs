//! Uniform tensor grids and monotone finite-difference stencils.
//!
//! Second derivatives use centered three-point differences, first
//! derivatives are upwinded on the drift sign, and mixed derivatives use the
//! seven-point stencil, admissible only under pointwise diagonal dominance
//! of the diffusion matrix. The assembled rows then have the M-matrix sign
//! pattern (off-diagonals >= 0, diagonal <= 0, row sums <= 0 when the
//! discount is nonnegative), so every convex mixture of action operators
//! satisfies a discrete maximum principle.

use crate::error::{Error, Result};
use crate::model::{ActionModel, BoxDomain};

/// Uniform tensor-product grid on a box.
#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    shape: Vec<usize>,
    lo: Vec<f64>,
    h: Vec<f64>,
    strides: Vec<usize>,
    interior: Vec<usize>,
    interior_rank: Vec<usize>,
    diameter: f64,
}

const NOT_INTERIOR: usize = usize::MAX;

impl Grid {
    /// Builds a grid with the given node counts per axis (>= 3 each).
    pub fn build(domain: &BoxDomain, nodes_per_axis: &[usize]) -> Result<Self> {
        let dim = domain.dim();
        if nodes_per_axis.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "expected {dim} node counts, got {}",
                nodes_per_axis.len()
            )));
        }
        if nodes_per_axis.iter().any(|&m| m < 3) {
            return Err(Error::InvalidArgument(
                "need at least 3 nodes per axis".into(),
            ));
        }
        let h: Vec<f64> = (0..dim)
            .map(|a| (domain.hi[a] - domain.lo[a]) / (nodes_per_axis[a] - 1) as f64)
            .collect();
        let mut strides = vec![1usize; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * nodes_per_axis[a + 1];
        }
        let total: usize = nodes_per_axis.iter().product();
        let mut interior = Vec::new();
        let mut interior_rank = vec![NOT_INTERIOR; total];
        for (node, rank) in interior_rank.iter_mut().enumerate() {
            let mut inside = true;
            let mut rem = node;
            for (stride, &m) in strides.iter().zip(nodes_per_axis) {
                let i = rem / stride;
                rem %= stride;
                if i == 0 || i == m - 1 {
                    inside = false;
                    break;
                }
            }
            if inside {
                *rank = interior.len();
                interior.push(node);
            }
        }
        Ok(Grid {
            dim,
            shape: nodes_per_axis.to_vec(),
            lo: domain.lo.clone(),
            h,
            strides,
            interior,
            interior_rank,
            diameter: domain.diameter(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    pub fn num_nodes(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn num_interior(&self) -> usize {
        self.interior.len()
    }

    /// Flat indices of interior nodes, in row-major order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Position of a flat node inside [`Grid::interior`], if interior.
    pub fn interior_rank(&self, node: usize) -> Option<usize> {
        match self.interior_rank[node] {
            NOT_INTERIOR => None,
            r => Some(r),
        }
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.interior_rank[node] != NOT_INTERIOR
    }

    /// Flat indices of boundary nodes.
    pub fn boundary(&self) -> Vec<usize> {
        (0..self.num_nodes())
            .filter(|&n| !self.is_interior(n))
            .collect()
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        let mut rem = node;
        self.strides
            .iter()
            .map(|stride| {
                let i = rem / stride;
                rem %= stride;
                i
            })
            .collect()
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        let idx = self.multi_index(node);
        (0..self.dim)
            .map(|a| self.lo[a] + idx[a] as f64 * self.h[a])
            .collect()
    }

    /// Flat index of the node shifted by `offset` steps along `axis`.
    #[inline]
    pub fn neighbor(&self, node: usize, axis: usize, offset: isize) -> usize {
        (node as isize + offset * self.strides[axis] as isize) as usize
    }

    /// Nearest interior node to an arbitrary point (per-axis rounding,
    /// clamped away from the boundary).
    pub fn nearest_interior(&self, x: &[f64]) -> usize {
        let mut node = 0usize;
        for (a, &v) in x.iter().enumerate() {
            let raw = ((v - self.lo[a]) / self.h[a]).round() as isize;
            let i = raw.clamp(1, self.shape[a] as isize - 2) as usize;
            node += i * self.strides[a];
        }
        node
    }

    /// Euclidean diameter of the underlying box.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }
}

/// Sparse finite-difference rows of one action's elliptic operator over the
/// interior nodes. Entries may reference boundary nodes.
#[derive(Debug, Clone)]
pub struct StencilOperator {
    pub action: usize,
    /// One row per interior node (in interior order): `(flat node, coeff)`.
    rows: Vec<Vec<(usize, f64)>>,
}

impl StencilOperator {
    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    /// Applies the operator to a full grid function (boundary values of `u`
    /// feed the stencils that reach the boundary). Output lives on interior
    /// nodes in interior order.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, c)| c * u[j]).sum())
            .collect()
    }
}

/// Assembles the operator of action `k` on `grid`.
///
/// `upwind_from` selects the drift-sign used for one-sided first
/// differences; pass `None` for the model's own drift. Passing the base
/// model keeps a coefficient-delta operator consistent with the
/// linearization of the base scheme.
pub fn assemble_lk(
    model: &ActionModel,
    k: usize,
    grid: &Grid,
    upwind_from: Option<&ActionModel>,
) -> Result<StencilOperator> {
    let dim = grid.dim();
    let mut rows = Vec::with_capacity(grid.num_interior());
    let mut worst: Option<(usize, f64)> = None;
    let mut drift = vec![0.0; dim];
    let mut up_drift = vec![0.0; dim];
    for &node in grid.interior() {
        let x = grid.coords(node);
        let a = model.diffusion_at(k, &x);
        model.drift_at(k, &x, &mut drift);
        match upwind_from {
            Some(m) => m.drift_at(k, &x, &mut up_drift),
            None => up_drift.copy_from_slice(&drift),
        }
        let c = model.discount_at(k, &x);
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(3 * dim + 3);
        let mut diag = -c;

        for axis in 0..dim {
            let h = grid.spacing(axis);
            let aii = a.get(axis, axis);
            let w = aii / (h * h);
            row.push((grid.neighbor(node, axis, 1), w));
            row.push((grid.neighbor(node, axis, -1), w));
            diag -= 2.0 * w;

            let b = drift[axis];
            let sign = if up_drift[axis] != 0.0 {
                up_drift[axis]
            } else {
                b
            };
            if b != 0.0 {
                if sign > 0.0 {
                    row.push((grid.neighbor(node, axis, 1), b / h));
                    diag -= b / h;
                } else {
                    row.push((grid.neighbor(node, axis, -1), -b / h));
                    diag += b / h;
                }
            }
        }

        // mixed derivatives (2-D): seven-point stencil, requires
        // |a12| <= min(a11 h2/h1, a22 h1/h2) for nonnegative off-diagonals
        for ai in 0..dim {
            for aj in (ai + 1)..dim {
                let a12 = a.get(ai, aj);
                if a12 == 0.0 {
                    continue;
                }
                let (hi, hj) = (grid.spacing(ai), grid.spacing(aj));
                let cap = (a.get(ai, ai) * hj / hi).min(a.get(aj, aj) * hi / hj);
                let violation = a12.abs() - cap;
                if violation > 1e-12 {
                    if worst.is_none_or(|(_, v)| violation > v) {
                        worst = Some((node, violation));
                    }
                    continue;
                }
                let w = a12.abs() / (hi * hj);
                let s: isize = if a12 >= 0.0 { 1 } else { -1 };
                // corner pair aligned (a12 > 0) or anti-aligned (a12 < 0)
                let pp = grid.neighbor(grid.neighbor(node, ai, 1), aj, s);
                let mm = grid.neighbor(grid.neighbor(node, ai, -1), aj, -s);
                row.push((pp, w));
                row.push((mm, w));
                row.push((grid.neighbor(node, ai, 1), -w));
                row.push((grid.neighbor(node, ai, -1), -w));
                row.push((grid.neighbor(node, aj, s), -w));
                row.push((grid.neighbor(node, aj, -s), -w));
                diag += 2.0 * w;
            }
        }

        row.push((node, diag));
        // merge duplicate column references
        row.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (j, v) in row {
            match merged.last_mut() {
                Some((jj, vv)) if *jj == j => *vv += v,
                _ => merged.push((j, v)),
            }
        }
        rows.push(merged);
    }
    if let Some((node, violation)) = worst {
        let x = grid.coords(node);
        return Err(Error::Discretization(format!(
            "mixed-derivative stencil not monotone for action {k}: \
             |a12| exceeds diagonal dominance by {violation:.3e} at node {node} (x = {x:?})"
        )));
    }
    Ok(StencilOperator { action: k, rows })
}

/// A model sampled onto a grid: assembled operators, rewards on interior
/// nodes and exit rewards on all nodes.
pub struct DiscreteSystem {
    pub ops: Vec<StencilOperator>,
    /// Running rewards per action at interior nodes (interior order).
    pub rewards: Vec<Vec<f64>>,
    /// Exit reward sampled at every node (used on the boundary).
    pub exit: Vec<f64>,
}

impl DiscreteSystem {
    pub fn build(model: &ActionModel, grid: &Grid) -> Result<Self> {
        let kk = model.num_actions();
        let ops = (0..kk)
            .map(|k| assemble_lk(model, k, grid, None))
            .collect::<Result<Vec<_>>>()?;
        let rewards = (0..kk)
            .map(|k| {
                grid.interior()
                    .iter()
                    .map(|&n| model.reward_at(k, &grid.coords(n)))
                    .collect()
            })
            .collect();
        let exit = (0..grid.num_nodes())
            .map(|n| model.exit_reward_at(&grid.coords(n)))
            .collect();
        Ok(DiscreteSystem { ops, rewards, exit })
    }

    pub fn num_actions(&self) -> usize {
        self.ops.len()
    }

    /// Residual components `r_k = L_k u + f_k` on interior nodes.
    pub fn residual_components(&self, u: &[f64]) -> Vec<Vec<f64>> {
        self.ops
            .iter()
            .zip(&self.rewards)
            .map(|(op, f)| {
                let mut r = op.apply(u);
                for (ri, fi) in r.iter_mut().zip(f) {
                    *ri += fi;
                }
                r
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{constant, ActionCoefficients, BoxDomain};
    use std::sync::Arc;

    fn model_1d(a: f64, b: f64, c: f64) -> ActionModel {
        ActionModel {
            dim: 1,
            domain: BoxDomain::new(vec![0.0], vec![1.0]).unwrap(),
            ellipticity: 2.0 * a,
            actions: vec![ActionCoefficients {
                diffusion: vec![constant(a)],
                drift: vec![constant(b)],
                discount: constant(c),
                reward: constant(0.0),
            }],
            exit_reward: constant(0.0),
        }
    }

    #[test]
    fn grid_construction() {
        let d = BoxDomain::new(vec![0.0], vec![1.0]).unwrap();
        let g = Grid::build(&d, &[11]).unwrap();
        assert!((g.spacing(0) - 0.1).abs() < 1e-15);
        assert_eq!(g.interior(), (1..10).collect::<Vec<_>>().as_slice());

        let d2 = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let g2 = Grid::build(&d2, &[5, 5]).unwrap();
        assert_eq!(g2.num_interior(), 9);
        assert_eq!(g2.boundary().len(), 16);

        let d3 = BoxDomain::new(vec![0.0], vec![2.0]).unwrap();
        let g3 = Grid::build(&d3, &[21]).unwrap();
        assert!((g3.spacing(0) - 0.1).abs() < 1e-15);

        assert!(Grid::build(&d, &[2]).is_err());
    }

    #[test]
    fn stencil_rows_1d() {
        let g = Grid::build(&BoxDomain::new(vec![0.0], vec![1.0]).unwrap(), &[11]).unwrap();
        let op = assemble_lk(&model_1d(1.0, 0.0, 0.0), 0, &g, None).unwrap();
        // row at interior node 1 references nodes 0,1,2 with (100, -200, 100)
        let row = &op.rows()[0];
        assert_eq!(row.len(), 3);
        assert!((row[0].1 - 100.0).abs() < 1e-9);
        assert!((row[1].1 + 200.0).abs() < 1e-9);
        assert!((row[2].1 - 100.0).abs() < 1e-9);

        // positive drift adds a forward difference (0, -20, 20)
        let op = assemble_lk(&model_1d(1.0, 2.0, 0.0), 0, &g, None).unwrap();
        let row = &op.rows()[0];
        assert!((row[0].1 - 100.0).abs() < 1e-9);
        assert!((row[1].1 + 220.0).abs() < 1e-9);
        assert!((row[2].1 - 120.0).abs() < 1e-9);
    }

    #[test]
    fn exact_on_quadratics() {
        let g = Grid::build(&BoxDomain::new(vec![0.0], vec![1.0]).unwrap(), &[11]).unwrap();
        let op = assemble_lk(&model_1d(1.0, 0.0, 0.0), 0, &g, None).unwrap();
        let u: Vec<f64> = (0..11).map(|i| (i as f64 * 0.1).powi(2)).collect();
        for v in op.apply(&u) {
            assert!((v - 2.0).abs() < 1e-9, "L x^2 = {v}");
        }
    }

    #[test]
    fn apply_annihilates_constants_and_linears() {
        let g = Grid::build(&BoxDomain::new(vec![0.0], vec![1.0]).unwrap(), &[21]).unwrap();
        let op = assemble_lk(&model_1d(0.7, -1.3, 0.0), 0, &g, None).unwrap();
        let ones = vec![1.0; 21];
        for v in op.apply(&ones) {
            assert!(v.abs() < 1e-9);
        }
        let op = assemble_lk(&model_1d(0.7, 0.0, 0.0), 0, &g, None).unwrap();
        let lin: Vec<f64> = (0..21).map(|i| 3.0 * (i as f64 * 0.05) - 1.0).collect();
        for v in op.apply(&lin) {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn second_order_consistency_on_sine() {
        // applying to sin(pi x) converges to -pi^2 a sin(pi x) at rate >= 1.9
        let d = BoxDomain::new(vec![0.0], vec![1.0]).unwrap();
        let mut errs = Vec::new();
        for nodes in [41usize, 81] {
            let g = Grid::build(&d, &[nodes]).unwrap();
            let op = assemble_lk(&model_1d(1.0, 0.0, 0.0), 0, &g, None).unwrap();
            let u: Vec<f64> = (0..nodes)
                .map(|i| (std::f64::consts::PI * g.coords(i)[0]).sin())
                .collect();
            let lu = op.apply(&u);
            let err = grid_error(&g, &lu, |x| {
                -std::f64::consts::PI.powi(2) * (std::f64::consts::PI * x).sin()
            });
            errs.push(err);
        }
        let rate = (errs[0] / errs[1]).log2();
        assert!(rate >= 1.9, "observed rate {rate}");
    }

    fn grid_error(g: &Grid, lu: &[f64], exact: impl Fn(f64) -> f64) -> f64 {
        g.interior()
            .iter()
            .zip(lu)
            .map(|(&n, &v)| (v - exact(g.coords(n)[0])).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn m_matrix_sign_pattern() {
        // 2-D with positive and negative off-diagonal diffusion plus drift
        let domain = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let grid = Grid::build(&domain, &[7, 7]).unwrap();
        for a12 in [0.4, -0.4] {
            let model = ActionModel {
                dim: 2,
                domain: domain.clone(),
                ellipticity: 1.0,
                actions: vec![ActionCoefficients {
                    diffusion: vec![constant(1.0), constant(a12), constant(1.0)],
                    drift: vec![constant(1.5), constant(-0.5)],
                    discount: constant(0.3),
                    reward: constant(0.0),
                }],
                exit_reward: constant(0.0),
            };
            let op = assemble_lk(&model, 0, &grid, None).unwrap();
            for (row, &node) in op.rows().iter().zip(grid.interior()) {
                let mut sum = 0.0;
                for &(j, v) in row {
                    if j == node {
                        assert!(v <= 0.0, "diagonal {v} at node {node}");
                    } else {
                        assert!(v >= -1e-13, "off-diagonal {v} at node {node} -> {j}");
                    }
                    sum += v;
                }
                assert!(sum <= 1e-9, "row sum {sum} at node {node}");
            }
        }
    }

    #[test]
    fn mixed_term_requires_dominance() {
        let domain = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let grid = Grid::build(&domain, &[7, 7]).unwrap();
        let model = ActionModel {
            dim: 2,
            domain,
            ellipticity: 0.1,
            actions: vec![ActionCoefficients {
                diffusion: vec![constant(1.0), constant(1.2), constant(1.0)],
                drift: vec![constant(0.0), constant(0.0)],
                discount: constant(0.0),
                reward: constant(0.0),
            }],
            exit_reward: constant(0.0),
        };
        let err = assemble_lk(&model, 0, &grid, None).unwrap_err();
        assert!(format!("{err}").contains("not monotone"));
    }

    #[test]
    fn mixed_stencil_exact_on_bilinear() {
        let domain = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let grid = Grid::build(&domain, &[9, 9]).unwrap();
        let model = ActionModel {
            dim: 2,
            domain,
            ellipticity: 1.0,
            actions: vec![ActionCoefficients {
                diffusion: vec![constant(1.0), constant(0.5), constant(1.0)],
                drift: vec![constant(0.0), constant(0.0)],
                discount: constant(0.0),
                reward: constant(0.0),
            }],
            exit_reward: constant(0.0),
        };
        let op = assemble_lk(&model, 0, &grid, None).unwrap();
        let u: Vec<f64> = (0..grid.num_nodes())
            .map(|n| {
                let x = grid.coords(n);
                x[0] * x[1]
            })
            .collect();
        // a11 uxx + 2 a12 uxy + a22 uyy = 2 * 0.5 = 1 on u = xy
        for v in op.apply(&u) {
            assert!((v - 1.0).abs() < 1e-9, "got {v}");
        }
    }

    #[test]
    fn residual_components_basics() {
        let d = BoxDomain::new(vec![0.0], vec![1.0]).unwrap();
        let g = Grid::build(&d, &[11]).unwrap();
        let model = ActionModel {
            dim: 1,
            domain: d,
            ellipticity: 2.0,
            actions: vec![
                ActionCoefficients {
                    diffusion: vec![constant(1.0)],
                    drift: vec![constant(0.0)],
                    discount: constant(0.0),
                    reward: Arc::new(|x: &[f64]| 1.0 + x[0]),
                },
                ActionCoefficients {
                    diffusion: vec![constant(1.0)],
                    drift: vec![constant(0.0)],
                    discount: constant(0.0),
                    reward: Arc::new(|x: &[f64]| 1.0 + x[0]),
                },
            ],
            exit_reward: constant(0.0),
        };
        let sys = DiscreteSystem::build(&model, &g).unwrap();
        // u = 0: r_k = f_k
        let r = sys.residual_components(&vec![0.0; g.num_nodes()]);
        for (i, &n) in g.interior().iter().enumerate() {
            assert_eq!(r[0][i], 1.0 + g.coords(n)[0]);
        }
        // identical actions agree bitwise
        let u: Vec<f64> = (0..g.num_nodes()).map(|i| (i as f64).sin()).collect();
        let r = sys.residual_components(&u);
        assert_eq!(r[0], r[1]);
    }
}
