//! Small dense helpers and a restarted Lanczos solver shared by exact
//! diagonalization and the DMRG local eigenproblem.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(v: &mut [f64], s: f64) {
    v.iter_mut().for_each(|x| *x *= s);
}

/// Reproducible start vector with entries uniform in [−1, 1).
pub fn seeded_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Row-major matrix product `C = alpha·A·B + beta·C` with explicit strides.
///
/// `a` is `m × k` with strides `(rsa, csa)`, `b` is `k × n`, `c` is `m × n`.
#[allow(clippy::too_many_arguments)]
#[inline]
pub fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
    (rsc, csc): (usize, usize),
) {
    if m == 0 || n == 0 {
        return;
    }
    if k > 0 {
        debug_assert!(a.len() > (m - 1) * rsa + (k - 1) * csa);
        debug_assert!(b.len() > (k - 1) * rsb + (n - 1) * csb);
    }
    debug_assert!(c.len() > (m - 1) * rsc + (n - 1) * csc);
    // SAFETY: bounds checked above (in debug) and by construction at call
    // sites; strides describe disjoint, in-range views of the slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Krylov vectors per restart cycle.
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Absolute residual target `‖Hx − θx‖`.
    pub tol: f64,
    /// Fail with `NoConvergence` when the target is missed; otherwise return
    /// the last Ritz pair.
    pub strict: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { krylov_dim: 60, max_restarts: 200, tol: 1e-10, strict: true }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub matvecs: usize,
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for q in against {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
}

/// Lowest eigenpair of the tridiagonal matrix with diagonal `alpha` and
/// off-diagonal `beta` (`beta.len() ≥ alpha.len() − 1`).
fn lowest_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (imin, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty tridiagonal");
    (value, eig.eigenvectors.column(imin).iter().copied().collect())
}

/// Lowest eigenpair of a real symmetric operator restricted to the
/// orthogonal complement of `locked`, by explicitly restarted Lanczos with
/// full reorthogonalization.
pub fn lanczos_lowest<F>(
    apply: F,
    start: &[f64],
    locked: &[Vec<f64>],
    opts: &LanczosOptions,
) -> Result<Eigenpair>
where
    F: Fn(&[f64], &mut [f64]),
{
    let dim = start.len();
    let mut x = start.to_vec();
    orthogonalize(&mut x, locked);
    let nx = norm(&x);
    if nx == 0.0 || !nx.is_finite() {
        return Err(Error::NoConvergence { iterations: 0, residual: f64::NAN });
    }
    scale(&mut x, 1.0 / nx);

    let free = dim.saturating_sub(locked.len()).max(1);
    let m_max = opts.krylov_dim.min(free).max(1);
    let mut w = vec![0.0; dim];
    let mut matvecs = 0;
    let mut last_residual = f64::INFINITY;

    for restart in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m_max);
        let mut alpha = Vec::with_capacity(m_max);
        let mut beta: Vec<f64> = Vec::with_capacity(m_max);
        basis.push(x.clone());
        loop {
            let j = basis.len() - 1;
            apply(&basis[j], &mut w);
            matvecs += 1;
            let a = dot(&basis[j], &w);
            alpha.push(a);
            orthogonalize(&mut w, locked);
            orthogonalize(&mut w, &basis);
            let b = norm(&w);
            if basis.len() == m_max || b <= 1e-14 * a.abs().max(1.0) {
                break;
            }
            // residual estimate β_m |y_m| of the current Ritz vector
            if basis.len() % 4 == 0 {
                let (_, y) = lowest_ritz(&alpha, &beta);
                if b * y[y.len() - 1].abs() < 0.1 * opts.tol {
                    break;
                }
            }
            beta.push(b);
            let mut next = w.clone();
            scale(&mut next, 1.0 / b);
            basis.push(next);
        }

        let (_, y) = lowest_ritz(&alpha, &beta);

        x.iter_mut().for_each(|v| *v = 0.0);
        for (coef, q) in y.iter().zip(&basis) {
            axpy(*coef, q, &mut x);
        }
        orthogonalize(&mut x, locked);
        let nx = norm(&x);
        scale(&mut x, 1.0 / nx);

        apply(&x, &mut w);
        matvecs += 1;
        let value = dot(&x, &w);
        axpy(-value, &x, &mut w);
        orthogonalize(&mut w, locked);
        let residual = norm(&w);
        last_residual = residual;
        if residual <= opts.tol || (!opts.strict && restart == opts.max_restarts) {
            return Ok(Eigenpair { value, vector: x, residual, matvecs });
        }
    }
    Err(Error::NoConvergence { iterations: matvecs, residual: last_residual })
}

/// All eigenpairs of a dense symmetric matrix, ascending.
pub fn dense_symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lanczos_matches_dense_on_random_symmetric() {
        let n = 80;
        let r = seeded_vector(n * n, 3);
        let m = DMatrix::from_fn(n, n, |i, j| r[i * n + j] + r[j * n + i]);
        let (vals, _) = dense_symmetric_eigen(m.clone());
        let apply = |x: &[f64], y: &mut [f64]| {
            let xv = nalgebra::DVector::from_column_slice(x);
            y.copy_from_slice((&m * xv).as_slice());
        };
        let start = seeded_vector(n, 7);
        let opts = LanczosOptions { krylov_dim: 30, ..Default::default() };
        let e0 = lanczos_lowest(apply, &start, &[], &opts).unwrap();
        assert!((e0.value - vals[0]).abs() < 1e-10);
        let e1 = lanczos_lowest(apply, &start, &[e0.vector.clone()], &opts).unwrap();
        assert!((e1.value - vals[1]).abs() < 1e-10);
    }

    #[test]
    fn lanczos_resolves_exact_degeneracy_by_deflation() {
        // diag(−1, −1, 0, 1, 2, ...)
        let n = 40;
        let d: Vec<f64> = (0..n).map(|i| if i < 2 { -1.0 } else { i as f64 - 2.0 }).collect();
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = d[i] * x[i];
            }
        };
        let start = seeded_vector(n, 11);
        let opts = LanczosOptions::default();
        let a = lanczos_lowest(apply, &start, &[], &opts).unwrap();
        let b = lanczos_lowest(apply, &start, &[a.vector.clone()], &opts).unwrap();
        assert!((a.value + 1.0).abs() < 1e-12);
        assert!((b.value + 1.0).abs() < 1e-12);
        assert!(dot(&a.vector, &b.vector).abs() < 1e-10);
    }

    #[test]
    fn gemm_row_major_product() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; // 2x3
        let b = [1.0, 0.0, 0.0, 1.0, 1.0, 1.0]; // 3x2
        let mut c = [0.0; 4];
        gemm(2, 3, 2, 1.0, &a, (3, 1), &b, (2, 1), 0.0, &mut c, (2, 1));
        assert_eq!(c, [4.0, 5.0, 10.0, 11.0]);
    }
}
