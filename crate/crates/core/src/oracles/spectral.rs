//! Expander certificates and Monte-Carlo calibration of the spectral constant.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{DksError, Result};
use crate::graph::WeightedGraph;
use crate::linalg::{mat_from_row_major, spectral_norm, sym_eigenvalues};
use crate::rng;
use crate::scalar::Scalar;

const CERT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpanderCertificate {
    pub certified: bool,
    pub regular: bool,
    /// Largest adjacency eigenvalue.
    pub lambda_1: f64,
    /// `max_{i >= 2} |lambda_i|`.
    pub lambda_rest: f64,
}

/// Checks that `graph` is `d_prime`-regular with every non-top adjacency
/// eigenvalue bounded by `lambda` in absolute value.
pub fn certify_expander<T: Scalar>(graph: &WeightedGraph<T>, d_prime: f64, lambda: f64) -> Result<ExpanderCertificate> {
    let m = graph.vertex_count();
    if m == 0 {
        return Err(DksError::Domain("expander certificate of an empty graph".into()));
    }
    let regular = graph
        .degrees()
        .iter()
        .all(|d| (d.as_f64() - d_prime).abs() <= CERT_TOL);
    let ev = sym_eigenvalues(mat_from_row_major(m, &graph.dense_adjacency()).as_ref())?;
    let lambda_1 = ev[m - 1];
    let lambda_rest = if m == 1 {
        0.0
    } else {
        ev[0].abs().max(ev[m - 2].abs())
    };
    Ok(ExpanderCertificate {
        certified: regular && lambda_rest <= lambda + CERT_TOL,
        regular,
        lambda_1,
        lambda_rest,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiCalibration {
    /// Largest observed ratio `||B|| / sqrt(n p)`.
    pub xi: f64,
    pub ratios: Vec<f64>,
}

/// Centred cross-edge matrix: `A_ij - p` on the `S x (V \ S)` blocks with
/// `S = {0, .., k-1}`, zero elsewhere. Row-major, symmetric.
pub fn centered_cross_matrix(n: usize, k: usize, p: f64, r: &mut rng::Rng) -> Vec<f64> {
    let mut b = vec![0.0; n * n];
    for i in 0..k {
        for j in k..n {
            let a = if r.random_bool(p) { 1.0 } else { 0.0 };
            b[i * n + j] = a - p;
            b[j * n + i] = a - p;
        }
    }
    b
}

/// `||B|| / sqrt(n p)` for one sampled `B`; trial `t` always uses stream `t`.
pub fn xi_trial(n: usize, k: usize, p: f64, seed: u64, trial: u64) -> Result<f64> {
    let mut r = rng::stream(seed, trial);
    let b = centered_cross_matrix(n, k, p, &mut r);
    Ok(spectral_norm(n, &b)? / (n as f64 * p).sqrt())
}

pub fn calibrate_xi(n: usize, k: usize, p: f64, trials: usize, seed: u64) -> Result<XiCalibration> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(DksError::param(format!("p must lie in (0, 1], got {p}")));
    }
    if trials == 0 {
        return Err(DksError::param("calibration needs at least one trial"));
    }
    if k == 0 || k >= n {
        return Err(DksError::param(format!("need 0 < k < n, got k = {k}, n = {n}")));
    }
    let ratios = (0..trials as u64)
        .map(|t| xi_trial(n, k, p, seed, t))
        .collect::<Result<Vec<_>>>()?;
    let xi = ratios.iter().copied().fold(0.0, f64::max);
    Ok(XiCalibration { xi, ratios })
}
