//! Dense symmetric eigen-solvers used by the SDP engine and the spectral oracles.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par, Side};
use rand::Rng as _;

use crate::error::{DksError, Result};
use crate::rng;

/// Eigenvalues in ascending order with matching eigenvector columns.
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

pub fn mat_from_row_major(n: usize, a: &[f64]) -> Mat<f64> {
    assert_eq!(a.len(), n * n);
    Mat::from_fn(n, n, |i, j| a[i * n + j])
}

pub fn sym_eigen(a: MatRef<'_, f64>) -> Result<SymEigen> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| DksError::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let values = (0..a.nrows()).map(|i| s[i]).collect();
    Ok(SymEigen {
        values,
        vectors: evd.U().to_owned(),
    })
}

pub fn sym_eigenvalues(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| DksError::Eigen(format!("{e:?}")))
}

fn check_symmetric(n: usize, a: &[f64]) -> Result<()> {
    if a.len() != n * n {
        return Err(DksError::param(format!("expected {} entries, got {}", n * n, a.len())));
    }
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for i in 0..n {
        for j in 0..i {
            if (a[i * n + j] - a[j * n + i]).abs() > 1e-12 * scale {
                return Err(DksError::param(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Largest absolute eigenvalue of a symmetric row-major matrix.
///
/// Power iteration on the square of the matrix; falls back to a full
/// eigendecomposition when the iteration has not settled.
pub fn spectral_norm(n: usize, a: &[f64]) -> Result<f64> {
    check_symmetric(n, a)?;
    if n == 0 {
        return Ok(0.0);
    }
    let m = mat_from_row_major(n, a);
    let full = |m: &Mat<f64>| -> Result<f64> {
        let ev = sym_eigenvalues(m.as_ref())?;
        Ok(ev[0].abs().max(ev[n - 1].abs()))
    };
    if n <= 256 {
        return full(&m);
    }
    let mut r = rng::stream(0x5eed, n as u64);
    let mut v = Mat::<f64>::from_fn(n, 1, |_, _| r.random::<f64>() - 0.5);
    let mut w = Mat::<f64>::zeros(n, 1);
    let mut u = Mat::<f64>::zeros(n, 1);
    normalize(&mut v);
    for _ in 0..300 {
        matmul(&mut w, Accum::Replace, &m, &v, 1.0, Par::Seq);
        matmul(&mut u, Accum::Replace, &m, &w, 1.0, Par::Seq);
        let theta = dot(&v, &u);
        let mut res = 0.0;
        for i in 0..n {
            res += (u[(i, 0)] - theta * v[(i, 0)]).powi(2);
        }
        if theta > 0.0 && res.sqrt() <= 1e-11 * theta {
            return Ok(theta.sqrt());
        }
        v.copy_from(&u);
        if normalize(&mut v) == 0.0 {
            return Ok(0.0);
        }
    }
    full(&m)
}

fn dot(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    (0..a.nrows()).map(|i| a[(i, 0)] * b[(i, 0)]).sum()
}

fn normalize(v: &mut Mat<f64>) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        for i in 0..v.nrows() {
            v[(i, 0)] /= norm;
        }
    }
    norm
}

/// Orthonormalises the columns of `q` in place (two passes of modified
/// Gram-Schmidt against `basis` and among themselves). Columns that collapse
/// are replaced by fresh random directions.
fn orthonormalize(basis: &[Mat<f64>], q: &mut Mat<f64>, r: &mut rng::Rng) {
    let n = q.nrows();
    for j in 0..q.ncols() {
        let mut attempts = 0;
        loop {
            let before = col_norm(q, j);
            for _ in 0..2 {
                for b in basis {
                    for c in 0..b.ncols() {
                        let h: f64 = (0..n).map(|i| b[(i, c)] * q[(i, j)]).sum();
                        for i in 0..n {
                            q[(i, j)] -= h * b[(i, c)];
                        }
                    }
                }
                for c in 0..j {
                    let h: f64 = (0..n).map(|i| q[(i, c)] * q[(i, j)]).sum();
                    for i in 0..n {
                        let qc = q[(i, c)];
                        q[(i, j)] -= h * qc;
                    }
                }
            }
            let after = col_norm(q, j);
            if after > 1e-8 * before.max(1e-300) && after > 0.0 {
                for i in 0..n {
                    q[(i, j)] /= after;
                }
                break;
            }
            attempts += 1;
            assert!(attempts < 8, "could not extend an orthonormal basis");
            for i in 0..n {
                q[(i, j)] = r.random::<f64>() - 0.5;
            }
        }
    }
}

fn col_norm(q: &Mat<f64>, j: usize) -> f64 {
    (0..q.nrows()).map(|i| q[(i, j)].powi(2)).sum::<f64>().sqrt()
}

/// Top eigenpairs of a symmetric matrix from a block Krylov subspace.
pub struct PartialEigen {
    /// Ritz values in descending order.
    pub values: Vec<f64>,
    /// Ritz vectors (one column per value).
    pub vectors: Mat<f64>,
    /// Residual norms `||A u - theta u||`.
    pub residuals: Vec<f64>,
}

/// Rayleigh-Ritz on the block Krylov space `[V, AV, .., A^(steps-1) V]`,
/// where `V` holds `warm` columns padded with random ones up to `block`.
/// Returns the top `block` Ritz pairs.
pub fn block_krylov_top(
    a: MatRef<'_, f64>,
    warm: Option<MatRef<'_, f64>>,
    block: usize,
    steps: usize,
    seed: u64,
) -> PartialEigen {
    let n = a.nrows();
    let block = block.min(n).max(1);
    let steps = steps.max(1).min(n.div_ceil(block));
    let mut r = rng::stream(seed, 0x6b72);
    let mut v0 = Mat::<f64>::zeros(n, block);
    let w_cols = warm.map_or(0, |w| w.ncols().min(block));
    for j in 0..block {
        for i in 0..n {
            v0[(i, j)] = if j < w_cols {
                warm.unwrap()[(i, j)]
            } else {
                r.random::<f64>() - 0.5
            };
        }
    }
    orthonormalize(&[], &mut v0, &mut r);

    let mut basis: Vec<Mat<f64>> = vec![v0];
    let mut images: Vec<Mat<f64>> = Vec::new();
    for s in 0..steps {
        let mut av = Mat::<f64>::zeros(n, block);
        matmul(&mut av, Accum::Replace, a, &basis[s], 1.0, Par::Seq);
        images.push(av.clone());
        if s + 1 < steps {
            let mut next = av;
            orthonormalize(&basis, &mut next, &mut r);
            basis.push(next);
        }
    }
    let dim = block * basis.len();
    let q = Mat::<f64>::from_fn(n, dim, |i, j| basis[j / block][(i, j % block)]);
    let aq = Mat::<f64>::from_fn(n, dim, |i, j| images[j / block][(i, j % block)]);
    let mut h = Mat::<f64>::zeros(dim, dim);
    matmul(&mut h, Accum::Replace, q.transpose(), &aq, 1.0, Par::Seq);
    let hs = Mat::<f64>::from_fn(dim, dim, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
    let evd = hs
        .self_adjoint_eigen(Side::Lower)
        .expect("small projected eigenproblem");
    let s = evd.S().column_vector();
    let y = evd.U();
    let take = block.min(dim);
    let cols: Vec<usize> = (0..take).map(|c| dim - 1 - c).collect();
    let ysel = Mat::<f64>::from_fn(dim, take, |i, c| y[(i, cols[c])]);
    let mut u = Mat::<f64>::zeros(n, take);
    matmul(&mut u, Accum::Replace, &q, &ysel, 1.0, Par::Seq);
    let mut au = Mat::<f64>::zeros(n, take);
    matmul(&mut au, Accum::Replace, &aq, &ysel, 1.0, Par::Seq);
    let values: Vec<f64> = cols.iter().map(|&c| s[c]).collect();
    let residuals = (0..take)
        .map(|c| {
            (0..n)
                .map(|i| (au[(i, c)] - values[c] * u[(i, c)]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    PartialEigen {
        values,
        vectors: u,
        residuals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Vec<f64> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = r.random::<f64>() - 0.5;
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        a
    }

    #[test]
    fn spectral_norm_small_cases() {
        assert_eq!(spectral_norm(2, &[3.0, 0.0, 0.0, -5.0]).unwrap(), 5.0);
        let ones = vec![1.0; 36];
        assert!((spectral_norm(6, &ones).unwrap() - 6.0).abs() < 1e-12);
        assert!(spectral_norm(2, &[0.0, 1.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn spectral_norm_matches_full_eigendecomposition() {
        for (n, seed) in [(50, 1), (300, 2)] {
            let a = random_symmetric(n, seed);
            let ev = sym_eigenvalues(mat_from_row_major(n, &a).as_ref()).unwrap();
            let want = ev[0].abs().max(ev[n - 1].abs());
            let got = spectral_norm(n, &a).unwrap();
            assert!((got - want).abs() <= 1e-9 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn power_iteration_path() {
        // rank-one plus small noise: the power iteration settles quickly
        let n = 400;
        let mut a = random_symmetric(n, 5);
        for x in a.iter_mut() {
            *x = 1.0 + 1e-3 * *x;
        }
        let ev = sym_eigenvalues(mat_from_row_major(n, &a).as_ref()).unwrap();
        let got = spectral_norm(n, &a).unwrap();
        assert!((got - ev[n - 1]).abs() <= 1e-9 * ev[n - 1]);
    }

    #[test]
    fn krylov_recovers_low_rank_top() {
        let n = 200;
        let noise = random_symmetric(n, 9);
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let y: Vec<f64> = (0..n).map(|_| r.random::<f64>() - 0.5).collect();
        let a = Mat::<f64>::from_fn(n, n, |i, j| {
            5.0 * x[i] * x[j] + 2.0 * y[i] * y[j] - 0.1 * noise[i * n + j].abs() * (i == j) as u8 as f64
        });
        let full = sym_eigen(a.as_ref()).unwrap();
        let mut warm = None;
        let mut part = block_krylov_top(a.as_ref(), None, 6, 4, 1);
        for cycle in 0..6 {
            if part.residuals[..2].iter().all(|&res| res < 1e-10) {
                break;
            }
            warm = Some(part.vectors.clone());
            part = block_krylov_top(a.as_ref(), warm.as_ref().map(|w| w.as_ref()), 6, 4, 2 + cycle);
        }
        let _ = warm;
        assert!((part.values[0] - full.values[n - 1]).abs() < 1e-9);
        assert!((part.values[1] - full.values[n - 2]).abs() < 1e-9);
    }
}
