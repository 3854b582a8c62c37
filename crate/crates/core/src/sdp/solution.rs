use std::io::{BufRead, Write};

use faer::MatRef;
use serde::{Deserialize, Serialize};

use crate::error::{DksError, Result};
use crate::graph::VertexSubset;
use crate::linalg::{sym_eigen, sym_eigenvalues};

/// Largest violation of each constraint family, recomputed from `G`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// `|sum_i G_ii - k|`
    pub trace: f64,
    /// `max_i (sum_j G_ij - k G_ii)_+`
    pub row_sum: f64,
    /// `max_{i != j} (-G_ij)_+`
    pub nonneg: f64,
    /// `max_{i != j} (G_ij - G_ii)_+`
    pub dominance: f64,
    /// `max_i (G_ii - 1)_+`
    pub cap: f64,
    /// `max_i |G_iI - G_ii|`
    pub tie: f64,
    /// `|G_II - 1|`
    pub unit: f64,
    /// `max |G_ij - G_ji|`
    pub asymmetry: f64,
    pub min_eigenvalue: f64,
    /// Pair with the largest negative entry, if any entry is negative.
    pub worst_nonneg: Option<(usize, usize)>,
    /// Ordered pair `(i, j)` with the largest `G_ij - G_ii`, if positive.
    pub worst_dominance: Option<(usize, usize)>,
}

impl FeasibilityReport {
    /// Largest linear-family violation with the trace and row-sum families
    /// divided by `k`.
    pub fn max_scaled(&self, k: usize) -> f64 {
        let k = k.max(1) as f64;
        [
            self.trace / k,
            self.row_sum / k,
            self.nonneg,
            self.dominance,
            self.cap,
            self.tie,
            self.unit,
            self.asymmetry,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Largest unscaled violation, including negative curvature.
    pub fn max_violation(&self) -> f64 {
        [
            self.trace,
            self.row_sum,
            self.nonneg,
            self.dominance,
            self.cap,
            self.tie,
            self.unit,
            self.asymmetry,
            (-self.min_eigenvalue).max(0.0),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Every feasibility invariant of a solution at tolerance `tol`.
    pub fn within(&self, tol: f64, k: usize) -> bool {
        self.max_scaled(k) <= tol && self.min_eigenvalue >= -tol
    }
}

/// Recomputes every constraint residual of a row-major Gram matrix of side `n + 1`.
pub fn feasibility_report(n: usize, k: usize, gram: &[f64]) -> Result<FeasibilityReport> {
    let dim = n + 1;
    if gram.len() != dim * dim {
        return Err(DksError::param(format!("Gram matrix needs {} entries, got {}", dim * dim, gram.len())));
    }
    let g = |i: usize, j: usize| gram[i * dim + j];
    let mut r = FeasibilityReport {
        trace: ((0..n).map(|i| g(i, i)).sum::<f64>() - k as f64).abs(),
        unit: (g(n, n) - 1.0).abs(),
        ..Default::default()
    };
    for i in 0..n {
        let gii = g(i, i);
        r.cap = r.cap.max(gii - 1.0);
        r.tie = r.tie.max((g(i, n) - gii).abs()).max((g(n, i) - gii).abs());
        let mut row = 0.0;
        for j in 0..n {
            let gij = g(i, j);
            row += gij;
            if i == j {
                continue;
            }
            r.asymmetry = r.asymmetry.max((gij - g(j, i)).abs());
            if -gij > r.nonneg {
                r.nonneg = -gij;
                r.worst_nonneg = Some((i.min(j), i.max(j)));
            }
            if gij - gii > r.dominance {
                r.dominance = gij - gii;
                r.worst_dominance = Some((i, j));
            }
        }
        r.row_sum = r.row_sum.max(row - k as f64 * gii);
    }
    let sym: Vec<f64> = (0..dim * dim)
        .map(|idx| 0.5 * (gram[idx] + gram[(idx % dim) * dim + idx / dim]))
        .collect();
    r.min_eigenvalue = sym_eigenvalues(MatRef::from_row_major_slice(&sym, dim, dim))?[0];
    Ok(r)
}

/// Gram matrix of the integral solution: `X_i = I` for `i` in `s`, zero elsewhere.
pub fn indicator_gram(n: usize, s: &VertexSubset) -> Vec<f64> {
    let dim = n + 1;
    let mut on: Vec<usize> = s.members().to_vec();
    on.push(n);
    let mut gram = vec![0.0; dim * dim];
    for &i in &on {
        for &j in &on {
            gram[i * dim + j] = 1.0;
        }
    }
    gram
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Largest constraint residual of the splitting (trace and row sums divided by k).
    pub primal: f64,
    /// Relative stationarity residual.
    pub dual: f64,
    /// `|objective - dual_objective| / (1 + |objective|)`
    pub gap: f64,
    pub dual_objective: f64,
    pub families: FeasibilityReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub full_eigendecompositions: usize,
    pub partial_eigendecompositions: usize,
    pub wall_seconds: f64,
    /// Part of `wall_seconds` spent in PSD projections.
    #[serde(default)]
    pub projection_seconds: f64,
}

/// Output of the SDP solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub n: usize,
    pub k: usize,
    /// Row-major `(n+1) x (n+1)` Gram matrix; index `n` is the unit vector.
    pub gram: Vec<f64>,
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub converged: bool,
    pub tol: f64,
    pub stats: SolveStats,
}

impl SdpSolution {
    pub fn dimension(&self) -> usize {
        self.n + 1
    }

    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.gram[i * (self.n + 1) + j]
    }

    /// Accuracy of `objective` against the true optimum, `tol (1 + |objective|)`.
    pub fn objective_tolerance(&self) -> f64 {
        self.tol * (1.0 + self.objective.abs())
    }

    /// `||X_i||^2` clamped into `[0, 1]`.
    pub fn norm_sq(&self, i: usize) -> f64 {
        self.g(i, i).clamp(0.0, 1.0)
    }

    /// Copy with diagonal entries clamped into `[0, 1]` and the unit-vector
    /// row and column re-tied to the diagonal.
    pub fn clamped(&self) -> SdpSolution {
        let mut out = self.clone();
        let dim = self.n + 1;
        for i in 0..self.n {
            let d = self.norm_sq(i);
            out.gram[i * dim + i] = d;
            out.gram[i * dim + self.n] = d;
            out.gram[self.n * dim + i] = d;
        }
        out.gram[self.n * dim + self.n] = 1.0;
        out
    }

    /// Builds a solution record around a given Gram matrix (used for
    /// hand-made fixtures and loaded dumps).
    pub fn from_gram(n: usize, k: usize, gram: Vec<f64>, objective: f64) -> Result<SdpSolution> {
        let families = feasibility_report(n, k, &gram)?;
        Ok(SdpSolution {
            n,
            k,
            gram,
            objective,
            residuals: Residuals {
                primal: families.max_scaled(k),
                dual: 0.0,
                gap: 0.0,
                dual_objective: objective,
                families,
            },
            iterations: 0,
            converged: true,
            tol: 0.0,
            stats: SolveStats::default(),
        })
    }
}

/// Factor `G = V V^T` after clamping negative eigenvalues to zero. Returns
/// one vector per row of `G`, of length equal to the number of eigenvalues
/// above roundoff (`1e-12` relative to the largest).
pub fn extract_vectors(solution: &SdpSolution) -> Result<Vec<Vec<f64>>> {
    let dim = solution.dimension();
    let sym: Vec<f64> = (0..dim * dim)
        .map(|idx| 0.5 * (solution.gram[idx] + solution.gram[(idx % dim) * dim + idx / dim]))
        .collect();
    let evd = sym_eigen(MatRef::from_row_major_slice(&sym, dim, dim))?;
    let floor = 1e-12 * evd.values[dim - 1].max(1.0);
    let keep: Vec<usize> = (0..dim).rev().filter(|&c| evd.values[c] > floor).collect();
    Ok((0..dim)
        .map(|i| {
            keep.iter()
                .map(|&c| evd.vectors[(i, c)] * evd.values[c].sqrt())
                .collect()
        })
        .collect())
}

#[derive(Serialize, Deserialize)]
struct DumpHeader {
    n: usize,
    k: usize,
    objective: f64,
    residuals: Residuals,
    iterations: usize,
    converged: bool,
    tol: f64,
    stats: SolveStats,
}

/// Solution dump: one JSON summary line, then the Gram matrix row by row.
pub fn write_solution<W: Write>(solution: &SdpSolution, out: &mut W) -> Result<()> {
    let header = DumpHeader {
        n: solution.n,
        k: solution.k,
        objective: solution.objective,
        residuals: solution.residuals.clone(),
        iterations: solution.iterations,
        converged: solution.converged,
        tol: solution.tol,
        stats: solution.stats.clone(),
    };
    writeln!(out, "{}", serde_json::to_string(&header).expect("plain data"))?;
    let dim = solution.dimension();
    let mut line = String::new();
    for row in solution.gram.chunks(dim) {
        line.clear();
        for (j, x) in row.iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&x.to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_solution<R: BufRead>(input: R) -> Result<SdpSolution> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| DksError::parse_at("header", "empty solution file"))??;
    let header: DumpHeader = serde_json::from_str(&first).map_err(|e| DksError::Parse {
        path: "header".into(),
        line: 1,
        column: e.column(),
        message: e.to_string(),
    })?;
    let dim = header.n + 1;
    let mut gram = Vec::with_capacity(dim * dim);
    for (r, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let before = gram.len();
        for tok in line.split_whitespace() {
            gram.push(tok.parse::<f64>().map_err(|e| DksError::Parse {
                path: format!("gram[{r}]"),
                line: r + 2,
                column: 0,
                message: e.to_string(),
            })?);
        }
        if gram.len() - before != dim {
            return Err(DksError::Parse {
                path: format!("gram[{r}]"),
                line: r + 2,
                column: 0,
                message: format!("expected {dim} entries"),
            });
        }
    }
    if gram.len() != dim * dim {
        return Err(DksError::parse_at("gram", format!("expected {dim} rows")));
    }
    Ok(SdpSolution {
        n: header.n,
        k: header.k,
        gram,
        objective: header.objective,
        residuals: header.residuals,
        iterations: header.iterations,
        converged: header.converged,
        tol: header.tol,
        stats: header.stats,
    })
}
