//! Small dense symmetric matrices and a banded LU solver.
//!
//! The spatial dimension is 1 or 2 and grids are tensor products, so this
//! is all the linear algebra the crate needs: a cyclic Jacobi eigensolver
//! for tiny symmetric matrices and an LU factorization of banded M-matrix
//! systems (no pivoting; the assembled operators are weakly diagonally
//! dominant, which keeps elimination stable).

use crate::error::{Error, Result};

/// Dense symmetric matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zero(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = SymMatrix::zero(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    /// Builds from row-major entries; the input must be symmetric.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (data[i * dim + j], data[j * dim + i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::InvalidArgument(format!(
                        "matrix not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(SymMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self * other`, returned dense (not necessarily symmetric in general,
    /// but used here only for symmetric products like `S * S`).
    pub fn matmul(&self, other: &SymMatrix) -> SymMatrix {
        let n = self.dim;
        let mut out = SymMatrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.get(i, k) * other.get(k, j);
                }
                out.data[i * n + j] = s;
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = x
                .iter()
                .enumerate()
                .map(|(j, xj)| self.get(i, j) * xj)
                .sum();
        }
    }

    /// Eigenvalues and eigenvectors by cyclic Jacobi rotations.
    ///
    /// Returns `(eigenvalues, columns)` with eigenvalues sorted ascending and
    /// `columns[k]` the matching unit eigenvector.
    pub fn sym_eig(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        // Quadratically convergent; 30 sweeps is far beyond what n <= 2 needs.
        for _sweep in 0..30 {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
            if off.sqrt() < 1e-15 * (1.0 + frob(&a)) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = 0.5 * (aqq - app) / apq;
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
            .map(|j| (a[j * n + j], (0..n).map(|i| v[i * n + j]).collect()))
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let eigs = pairs.iter().map(|p| p.0).collect();
        let vecs = pairs.into_iter().map(|p| p.1).collect();
        (eigs, vecs)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.sym_eig().0[0]
    }
}

fn frob(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Banded matrix with half-bandwidth `bw`, stored by diagonals.
///
/// Row `i` holds columns `i-bw ..= i+bw`. Factorization is in-place LU
/// without pivoting.
pub struct Banded {
    n: usize,
    bw: usize,
    // data[i * (2bw+1) + (bw + j - i)] = A[i][j]
    data: Vec<f64>,
    factored: bool,
}

impl Banded {
    pub fn new(n: usize, bw: usize) -> Self {
        Banded {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
            factored: false,
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (2 * self.bw + 1) + (self.bw + j) - i
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j + self.bw >= i && j <= i + self.bw);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.bw < i || j > i + self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn factor(&mut self) -> Result<()> {
        let (n, bw) = (self.n, self.bw);
        for k in 0..n {
            let pivot = self.data[self.idx(k, k)];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Discretization(format!(
                    "zero or non-finite pivot at row {k} in banded LU"
                )));
            }
            let imax = (k + bw).min(n - 1);
            for i in (k + 1)..=imax {
                let lik = self.get(i, k) / pivot;
                if lik != 0.0 {
                    let jmax = (k + bw).min(n - 1);
                    for j in (k + 1)..=jmax {
                        let akj = self.data[self.idx(k, j)];
                        if akj != 0.0 {
                            let p = self.idx(i, j);
                            self.data[p] -= lik * akj;
                        }
                    }
                }
                let p = self.idx(i, k);
                self.data[p] = lik;
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves `A x = b` using the stored factorization.
    #[allow(clippy::needless_range_loop)] // substitution reads x[j] while writing x[i]
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert!(self.factored, "factor() must run before solve()");
        let (n, bw) = (self.n, self.bw);
        let mut x = b.to_vec();
        for i in 0..n {
            let jmin = i.saturating_sub(bw);
            let mut s = x[i];
            for j in jmin..i {
                s -= self.data[self.idx(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let jmax = (i + bw).min(n - 1);
            let mut s = x[i];
            for j in (i + 1)..=jmax {
                s -= self.data[self.idx(i, j)] * x[j];
            }
            x[i] = s / self.data[self.idx(i, i)];
        }
        x
    }
}
