//! Operator-splitting (ADMM) solver for the relaxation.
//!
//! Variables are the diagonal `t` and the off-diagonal vertex block `Y` of
//! `G = [[Diag(t) + Y, t], [t^T, 1]]`, so the tie and unit constraints hold by
//! construction. Every other family is a splitting block with its own
//! penalty, and the PSD block is projected with a full eigendecomposition
//! while its rank is high and with a warm-started block Krylov method once
//! the rank has collapsed. The x-update is solved exactly in `O(n^2)`.

use std::time::Instant;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par};
use serde::{Deserialize, Serialize};

use super::problem::SdpProblem;
use super::solution::{feasibility_report, Residuals, SdpSolution, SolveStats};
use crate::error::{DksError, Result};
use crate::linalg::{block_krylov_top, sym_eigen};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Residuals are evaluated every this many iterations.
    pub check_every: usize,
    /// Over-relaxation factor in (0, 2).
    pub relaxation: f64,
    /// Proximal weight on the x-update.
    pub sigma: f64,
    /// Common multiplier on all penalties.
    pub rho_scale: f64,
    /// Rebalance the penalties every this many iterations when one residual
    /// dominates the other by more than 10x; 0 disables.
    pub adapt_every: usize,
    /// Allow low-rank PSD projections.
    pub partial_eigen: bool,
    /// Force a full eigendecomposition at least this often.
    pub full_every: usize,
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-5,
            max_iter: 50_000,
            check_every: 10,
            relaxation: 1.6,
            sigma: 1e-6,
            rho_scale: 1.0,
            adapt_every: 100,
            partial_eigen: true,
            full_every: 200,
            verbose: false,
        }
    }
}

/// Solves the relaxation to tolerance `tol` (residuals and relative gap).
pub fn solve(problem: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution> {
    solve_with(
        problem,
        &SolverOptions {
            tol,
            max_iter,
            ..SolverOptions::default()
        },
    )
}

const TILE: usize = 64;

struct Projector {
    dim: usize,
    warm: Option<Mat<f64>>,
    rank: usize,
    since_full: usize,
    full_every: usize,
    partial_enabled: bool,
    full_count: usize,
    partial_count: usize,
    seconds: f64,
}

impl Projector {
    fn new(dim: usize, opts: &SolverOptions) -> Self {
        Projector {
            dim,
            warm: None,
            rank: dim,
            since_full: 0,
            full_every: opts.full_every.max(1),
            partial_enabled: opts.partial_eigen && dim > 200,
            full_count: 0,
            partial_count: 0,
            seconds: 0.0,
        }
    }

    /// Writes the projection of `m` onto the PSD cone into `out`
    /// (both column-major and symmetric). Returns whether the projection
    /// came from a full eigendecomposition.
    fn project(&mut self, m: &[f64], out: &mut [f64], force_full: bool, seed: u64) -> Result<bool> {
        let dim = self.dim;
        let mref = MatRef::from_column_major_slice(m, dim, dim);
        let pad = (self.rank / 4).max(6);
        let try_partial = self.partial_enabled
            && !force_full
            && self.since_full < self.full_every
            && (self.rank + pad) * 8 <= dim;
        if try_partial {
            let mut block = self.rank + pad;
            let mut warm = self.warm.take();
            for cycle in 0..4u64 {
                let pe = block_krylov_top(mref, warm.as_ref().map(|w| w.as_ref()), block, 3, seed.wrapping_mul(8) + cycle);
                let top = pe.values[0].max(0.0);
                let thr = 1e-10 * top.max(1.0);
                let r = pe.values.iter().take_while(|&&v| v > thr).count();
                let resid_ok = pe.residuals[..r].iter().all(|&res| res <= 1e-8 * top.max(1.0));
                if r + 2 <= block && resid_ok {
                    self.apply(&pe.values[..r], pe.vectors.as_ref(), out);
                    self.rank = r;
                    self.warm = Some(pe.vectors);
                    self.since_full += 1;
                    self.partial_count += 1;
                    return Ok(false);
                }
                if r + 2 > block {
                    block = r + pad + 2;
                    if block * 8 > dim {
                        break;
                    }
                }
                warm = Some(pe.vectors);
            }
        }
        let evd = sym_eigen(mref)?;
        let top = evd.values[dim - 1].max(0.0);
        let thr = 1e-10 * top.max(1.0);
        let r = evd.values.iter().rev().take_while(|&&v| v > thr).count();
        let vecs = Mat::<f64>::from_fn(dim, r.max(1), |i, c| evd.vectors[(i, dim - 1 - c)]);
        let vals: Vec<f64> = (0..r).map(|c| evd.values[dim - 1 - c]).collect();
        self.apply(&vals, vecs.as_ref().subcols(0, r), out);
        self.rank = r;
        self.warm = Some(vecs);
        self.since_full = 0;
        self.full_count += 1;
        Ok(true)
    }

    fn apply(&self, values: &[f64], vectors: MatRef<'_, f64>, out: &mut [f64]) {
        let dim = self.dim;
        let r = values.len();
        let mut dst = MatMut::from_column_major_slice_mut(out, dim, dim);
        if r == 0 {
            dst.fill(0.0);
            return;
        }
        let u = vectors.subcols(0, r);
        let scaled = Mat::<f64>::from_fn(dim, r, |i, c| u[(i, c)] * values[c]);
        matmul(dst.as_mut(), Accum::Replace, &scaled, u.transpose(), 1.0, Par::Seq);
        // enforce exact symmetry
        for jb in (0..dim).step_by(TILE) {
            for ib in (jb..dim).step_by(TILE) {
                for j in jb..(jb + TILE).min(dim) {
                    for i in ib.max(j + 1)..(ib + TILE).min(dim) {
                        let avg = 0.5 * (out[j * dim + i] + out[i * dim + j]);
                        out[j * dim + i] = avg;
                        out[i * dim + j] = avg;
                    }
                }
            }
        }
    }
}

/// Penalties: PSD, non-negativity, dominance, row sums, cap, trace.
#[derive(Clone, Copy)]
struct Rho {
    p: f64,
    n: f64,
    d: f64,
    r: f64,
    c: f64,
    e: f64,
}

impl Rho {
    fn scaled(self, f: f64) -> Rho {
        Rho {
            p: self.p * f,
            n: self.n * f,
            d: self.d * f,
            r: self.r * f,
            c: self.c * f,
            e: self.e * f,
        }
    }
}

struct Admm {
    n: usize,
    dim: usize,
    k: f64,
    cs: f64,
    rho: Rho,
    alpha: f64,
    sigma: f64,
    /// Scaled adjacency `cs * A`, upper triangle of a row-major `n x n` array.
    a: Vec<f64>,
    t: Vec<f64>,
    /// Upper triangle of `Y`.
    y: Vec<f64>,
    tx: Vec<f64>,
    yx: Vec<f64>,
    ht: Vec<f64>,
    /// PSD slack and dual, full column-major `dim x dim`.
    zp: Vec<f64>,
    wp: Vec<f64>,
    m: Vec<f64>,
    proj: Vec<f64>,
    zn: Vec<f64>,
    wn: Vec<f64>,
    /// Ordered dominance pairs: entry `i * n + j` is `Y_ij - t_i <= 0`.
    zd: Vec<f64>,
    wd: Vec<f64>,
    zr: Vec<f64>,
    wr: Vec<f64>,
    zc: Vec<f64>,
    wc: Vec<f64>,
    ze: f64,
    we: f64,
}

/// Calls `f(i, j)` for every `i < j < n`, tile by tile.
#[inline(always)]
fn for_pairs(n: usize, mut f: impl FnMut(usize, usize)) {
    for ib in (0..n).step_by(TILE) {
        for jb in (ib..n).step_by(TILE) {
            for i in ib..(ib + TILE).min(n) {
                for j in jb.max(i + 1)..(jb + TILE).min(n) {
                    f(i, j);
                }
            }
        }
    }
}

impl Admm {
    fn new(prob: &SdpProblem, opts: &SolverOptions) -> Self {
        let n = prob.n;
        let dim = n + 1;
        let k = prob.k as f64;
        let max_w = prob.max_weight();
        let cs = if max_w > 0.0 { 1.0 / max_w } else { 1.0 };
        let mut a = vec![0.0; n * n];
        for &(u, v, w) in &prob.edges {
            a[u * n + v] = w * cs;
        }
        let s = opts.rho_scale;
        Admm {
            n,
            dim,
            k,
            cs,
            rho: Rho {
                p: s,
                n: s,
                d: s,
                r: s / (n as f64 + k * k),
                c: s,
                e: 10.0 * s,
            },
            alpha: opts.relaxation,
            sigma: opts.sigma,
            a,
            t: vec![k / n as f64; n],
            y: vec![0.0; n * n],
            tx: vec![0.0; n],
            yx: vec![0.0; n * n],
            ht: vec![0.0; n],
            zp: vec![0.0; dim * dim],
            wp: vec![0.0; dim * dim],
            m: vec![0.0; dim * dim],
            proj: vec![0.0; dim * dim],
            zn: vec![0.0; n * n],
            wn: vec![0.0; n * n],
            zd: vec![0.0; n * n],
            wd: vec![0.0; n * n],
            zr: vec![0.0; n],
            wr: vec![0.0; n],
            zc: vec![0.0; n],
            wc: vec![0.0; n],
            ze: 0.0,
            we: 0.0,
        }
    }

    /// Solves the 2x2 system in (row sums of Y, t) for one component.
    fn solve2(&self, g: f64, h: f64, mean: bool) -> (f64, f64) {
        let n = self.n as f64;
        let km1 = self.k - 1.0;
        let Rho { p, n: rn, d, r, c, e } = self.rho;
        let a = self.sigma + 2.0 * p + rn + 2.0 * d;
        let cc = self.sigma + 3.0 * p + c + (n - 1.0) * d;
        let fac = if mean { 2.0 * n - 2.0 } else { n - 2.0 };
        let m11 = a + r * fac;
        let m12 = -(d * fac + r * fac * km1);
        let m21 = -(d + km1 * r);
        let m22 = cc + km1 * km1 * r + if mean { e * n } else { 0.0 };
        let det = m11 * m22 - m12 * m21;
        ((g * m22 - m12 * h) / det, (m11 * h - m21 * g) / det)
    }

    fn iterate(&mut self, projector: &mut Projector, force_full: bool, seed: u64) -> Result<bool> {
        let (n, dim) = (self.n, self.dim);
        let Rho { p: rp, n: rn, d: rd, r: rr, c: rc, e: re } = self.rho;
        let km1 = self.k - 1.0;
        let (alpha, sigma) = (self.alpha, self.sigma);

        // right-hand side: sigma x - q + A^T (rho z - w)
        let mut g = vec![0.0; n];
        for i in 0..n {
            let pii = rp * self.zp[i * dim + i] - self.wp[i * dim + i];
            let pin = rp * self.zp[i * dim + n] - self.wp[i * dim + n];
            let ri = rr * self.zr[i] - self.wr[i];
            self.ht[i] = sigma * self.t[i] + pii + 2.0 * pin - km1 * ri + (rc * self.zc[i] - self.wc[i]) + (re * self.ze - self.we);
        }
        {
            let (zp, wp, zn, wn, zd, wd) = (&self.zp, &self.wp, &self.zn, &self.wn, &self.zd, &self.wd);
            let (y, a, yx, ht, zr, wr) = (&self.y, &self.a, &mut self.yx, &mut self.ht, &self.zr, &self.wr);
            for_pairs(n, |i, j| {
                let ij = i * n + j;
                let ji = j * n + i;
                let pij = rp * zp[j * dim + i] - wp[j * dim + i];
                let dij = rd * zd[ij] - wd[ij];
                let dji = rd * zd[ji] - wd[ji];
                let h = sigma * y[ij]
                    + a[ij]
                    + 2.0 * pij
                    + (rn * zn[ij] - wn[ij])
                    + dij
                    + dji
                    + (rr * zr[i] - wr[i])
                    + (rr * zr[j] - wr[j]);
                yx[ij] = h;
                g[i] += h;
                g[j] += h;
                ht[i] -= dij;
                ht[j] -= dji;
            });
        }

        // exact x-update
        let nf = n as f64;
        let gm = g.iter().sum::<f64>() / nf;
        let hm = self.ht.iter().sum::<f64>() / nf;
        let (um, tm) = self.solve2(gm, hm, true);
        let mut rvec = vec![0.0; n];
        for i in 0..n {
            let (u0, t0) = self.solve2(g[i] - gm, self.ht[i] - hm, false);
            self.tx[i] = t0 + tm;
            rvec[i] = (u0 + um) - km1 * self.tx[i];
        }
        let acoef = sigma + 2.0 * rp + rn + 2.0 * rd;

        // relaxed block updates and the PSD argument M = v + W / rho + E
        let mut rowsum = vec![0.0; n];
        {
            let (tx, yx, y) = (&self.tx, &mut self.yx, &mut self.y);
            let (zp, wp, m) = (&self.zp, &self.wp, &mut self.m);
            let (zn, wn, zd, wd) = (&mut self.zn, &mut self.wn, &mut self.zd, &mut self.wd);
            for_pairs(n, |i, j| {
                let ij = i * n + j;
                let ji = j * n + i;
                let yv = (yx[ij] + rd * (tx[i] + tx[j]) - rr * (rvec[i] + rvec[j])) / acoef;
                yx[ij] = yv;
                rowsum[i] += yv;
                rowsum[j] += yv;

                let v = alpha * yv + (1.0 - alpha) * zn[ij];
                let z = (v + wn[ij] / rn).max(0.0);
                wn[ij] += rn * (v - z);
                zn[ij] = z;

                let v = alpha * (yv - tx[i]) + (1.0 - alpha) * zd[ij];
                let z = (v + wd[ij] / rd).min(0.0);
                wd[ij] += rd * (v - z);
                zd[ij] = z;
                let v = alpha * (yv - tx[j]) + (1.0 - alpha) * zd[ji];
                let z = (v + wd[ji] / rd).min(0.0);
                wd[ji] += rd * (v - z);
                zd[ji] = z;

                let c1 = j * dim + i;
                let c2 = i * dim + j;
                let mv = alpha * yv + (1.0 - alpha) * zp[c1] + wp[c1] / rp;
                m[c1] = mv;
                m[c2] = mv;

                y[ij] = alpha * yv + (1.0 - alpha) * y[ij];
            });
        }
        let mut tsum = 0.0;
        for i in 0..n {
            let tv = self.tx[i];
            tsum += tv;
            let ii = i * dim + i;
            self.m[ii] = alpha * tv + (1.0 - alpha) * self.zp[ii] + self.wp[ii] / rp;
            let c = i * dim + n;
            let mv = alpha * tv + (1.0 - alpha) * self.zp[c] + self.wp[c] / rp;
            self.m[c] = mv;
            self.m[n * dim + i] = mv;

            let v = alpha * (rowsum[i] - km1 * tv) + (1.0 - alpha) * self.zr[i];
            let z = (v + self.wr[i] / rr).min(0.0);
            self.wr[i] += rr * (v - z);
            self.zr[i] = z;

            let v = alpha * tv + (1.0 - alpha) * self.zc[i];
            let z = (v + self.wc[i] / rc).min(1.0);
            self.wc[i] += rc * (v - z);
            self.zc[i] = z;

            self.t[i] = alpha * tv + (1.0 - alpha) * self.t[i];
        }
        let v = alpha * tsum + (1.0 - alpha) * self.ze;
        self.we += re * (v - self.k);
        self.ze = self.k;
        let nn = n * dim + n;
        self.m[nn] = (1.0 - alpha) * self.zp[nn] + self.wp[nn] / rp + 1.0;

        let clock = Instant::now();
        let exact = projector.project(&self.m, &mut self.proj, force_full, seed)?;
        projector.seconds += clock.elapsed().as_secs_f64();
        for idx in 0..dim * dim {
            let pv = self.proj[idx];
            self.wp[idx] = rp * (self.m[idx] - pv);
            self.zp[idx] = pv;
        }
        self.zp[nn] -= 1.0;
        Ok(exact)
    }

    /// Primal residual, dual residual, objective, dual objective.
    fn residuals(&self) -> (f64, f64, f64, f64) {
        let (n, dim) = (self.n, self.dim);
        let km1 = self.k - 1.0;
        let mut prim: f64 = 0.0;
        let mut dual: f64 = 0.0;
        let mut rows = vec![0.0; n];
        let mut dt = vec![0.0; n];
        let mut obj = 0.0;
        for i in 0..n {
            dt[i] = self.wp[i * dim + i] + 2.0 * self.wp[i * dim + n] - km1 * self.wr[i] + self.wc[i] + self.we;
        }
        for_pairs(n, |i, j| {
            let ij = i * n + j;
            let ji = j * n + i;
            let yv = self.y[ij];
            rows[i] += yv;
            rows[j] += yv;
            obj += self.a[ij] * yv;
            prim = prim
                .max((yv - self.zp[j * dim + i]).abs())
                .max((yv - self.zn[ij]).abs())
                .max((yv - self.t[i] - self.zd[ij]).abs())
                .max((yv - self.t[j] - self.zd[ji]).abs());
            let dy = 2.0 * self.wp[j * dim + i] + self.wn[ij] + self.wd[ij] + self.wd[ji] + self.wr[i] + self.wr[j];
            dual = dual.max((dy - self.a[ij]).abs());
            dt[i] -= self.wd[ij];
            dt[j] -= self.wd[ji];
        });
        let mut tsum = 0.0;
        for i in 0..n {
            let ti = self.t[i];
            tsum += ti;
            prim = prim
                .max((ti - self.zp[i * dim + i]).abs())
                .max((ti - self.zp[i * dim + n]).abs())
                .max((rows[i] - km1 * ti - self.zr[i]).abs() / self.k)
                .max((ti - self.zc[i]).abs());
            dual = dual.max(dt[i].abs());
        }
        prim = prim.max((tsum - self.ze).abs() / self.k).max(self.zp[n * dim + n].abs());
        let wc_pos: f64 = self.wc.iter().map(|w| w.max(0.0)).sum();
        let dobj = (wc_pos + self.we * self.k - self.wp[n * dim + n]) / self.cs;
        (prim, dual, obj / self.cs, dobj)
    }

    fn gram(&self) -> Vec<f64> {
        let (n, dim) = (self.n, self.dim);
        let mut g = vec![0.0; dim * dim];
        for i in 0..n {
            g[i * dim + i] = self.t[i];
            g[i * dim + n] = self.t[i];
            g[n * dim + i] = self.t[i];
            for j in i + 1..n {
                let v = self.y[i * n + j];
                g[i * dim + j] = v;
                g[j * dim + i] = v;
            }
        }
        g[n * dim + n] = 1.0;
        g
    }
}

/// [`solve`] with explicit options.
pub fn solve_with(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    let start = Instant::now();
    if !(opts.tol > 0.0) || !(opts.relaxation > 0.0 && opts.relaxation < 2.0) {
        return Err(DksError::param("solver needs tol > 0 and relaxation in (0, 2)"));
    }
    let (n, k) = (problem.n, problem.k);
    if k == 0 || k > n {
        return Err(DksError::param(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let mut admm = Admm::new(problem, opts);
    let mut projector = Projector::new(n + 1, opts);
    let check_every = opts.check_every.max(1);
    let mut force_full = false;
    let mut last_exact = false;
    let mut target = opts.tol;
    let mut last: Option<(f64, f64, f64, f64)> = None;
    let mut iterations = 0;
    let mut rho_factor = 1.0;
    while iterations < opts.max_iter {
        last_exact = admm.iterate(&mut projector, force_full, iterations as u64)?;
        iterations += 1;
        let due = iterations % check_every == 0 || force_full || iterations == opts.max_iter;
        force_full = false;
        if !due {
            continue;
        }
        let (prim, dual, obj, dobj) = admm.residuals();
        let gap = (obj - dobj).abs() / (1.0 + obj.abs());
        last = Some((prim, dual, obj, dobj));
        if opts.verbose {
            eprintln!(
                "iter {iterations:6} obj {obj:.8e} dobj {dobj:.8e} prim {prim:.2e} dual {dual:.2e} gap {gap:.2e} rho x{rho_factor} rank {} full {} partial {} proj {:.1}s {:.1}s",
                projector.rank,
                projector.full_count,
                projector.partial_count,
                projector.seconds,
                start.elapsed().as_secs_f64()
            );
        }
        if prim.max(dual).max(gap) > target {
            if opts.adapt_every > 0 && iterations % opts.adapt_every == 0 {
                // duals are stored unscaled, so the penalties can change freely
                let f = if prim > 10.0 * dual {
                    2.0
                } else if dual > 10.0 * prim {
                    0.5
                } else {
                    1.0
                };
                let next = rho_factor * f;
                if f != 1.0 && (1e-3..=1e3).contains(&next) {
                    rho_factor = next;
                    admm.rho = admm.rho.scaled(f);
                }
            }
            continue;
        }
        if !last_exact {
            // confirm on an iteration that used an exact projection
            force_full = true;
            continue;
        }
        let gram = admm.gram();
        let families = feasibility_report(n, k, &gram)?;
        if families.within(opts.tol, k) {
            let stats = SolveStats {
                full_eigendecompositions: projector.full_count,
                partial_eigendecompositions: projector.partial_count,
                wall_seconds: start.elapsed().as_secs_f64(),
                projection_seconds: projector.seconds,
            };
            return Ok(finish(problem, gram, (prim, dual, gap, dobj), families, iterations, true, opts.tol, stats));
        }
        // residuals met but the recomputed invariants are not: tighten
        target *= 0.5;
    }
    let gram = admm.gram();
    let families = feasibility_report(n, k, &gram)?;
    let (prim, dual, obj, dobj) = last.unwrap_or_else(|| admm.residuals());
    let gap = (obj - dobj).abs() / (1.0 + obj.abs());
    let stats = SolveStats {
        full_eigendecompositions: projector.full_count,
        partial_eigendecompositions: projector.partial_count,
        wall_seconds: start.elapsed().as_secs_f64(),
        projection_seconds: projector.seconds,
    };
    let _ = last_exact;
    Err(DksError::NonConverged(Box::new(finish(
        problem,
        gram,
        (prim, dual, gap, dobj),
        families,
        iterations,
        false,
        opts.tol,
        stats,
    ))))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    problem: &SdpProblem,
    gram: Vec<f64>,
    (primal, dual, gap, dual_objective): (f64, f64, f64, f64),
    families: super::solution::FeasibilityReport,
    iterations: usize,
    converged: bool,
    tol: f64,
    stats: SolveStats,
) -> SdpSolution {
    let objective = problem.objective(&gram);
    SdpSolution {
        n: problem.n,
        k: problem.k,
        gram,
        objective,
        residuals: Residuals {
            primal,
            dual,
            gap,
            dual_objective,
            families,
        },
        iterations,
        converged,
        tol,
        stats,
    }
}
