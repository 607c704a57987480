//! Dense linear programming and the ℓ1 approximation of the admission problem.
//!
//! [`solve_lp`] is a Mehrotra predictor–corrector interior-point method for
//!
//! ```text
//! minimize    cost^T x
//! subject to  G x <= h,   lower <= x <= upper
//! ```
//!
//! working on the inequality form `G x + s = h, s >= 0` with dual `z >= 0`.
//! Bounds are appended as extra rows. Each solution carries its residuals
//! and duality gap so callers can check optimality without trusting internals.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{excess, NormalizedChannel, SolverSolution};
use crate::numerics::{dot, norm_inf, Cholesky, DenseMatrix};

pub const LP_TOL: f64 = 1e-8;
pub const LP_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    cost: Vec<f64>,
    g: DenseMatrix,
    h: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LpProblem {
    pub fn new(cost: Vec<f64>, g: DenseMatrix, h: Vec<f64>) -> Result<Self> {
        let n = cost.len();
        if g.cols() != n && g.rows() > 0 {
            return Err(Error::Dimension(format!(
                "G has {} columns for {n} variables",
                g.cols()
            )));
        }
        if g.rows() != h.len() {
            return Err(Error::Dimension(format!(
                "G has {} rows but h has {} entries",
                g.rows(),
                h.len()
            )));
        }
        if cost.iter().chain(&h).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("LP data"));
        }
        Ok(Self {
            g: if g.rows() == 0 { DenseMatrix::zeros(0, n) } else { g },
            h,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            cost,
        })
    }

    /// Variable bounds; use infinities for free directions.
    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = self.cost.len();
        if lower.len() != n || upper.len() != n {
            return Err(Error::Dimension("bounds must have one entry per variable".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l.is_nan() || u.is_nan() || l > u) {
            return Err(Error::Config("inconsistent variable bounds".into()));
        }
        self.lower = lower;
        self.upper = upper;
        Ok(self)
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    /// Stacks `G`, `-I` rows for finite lower bounds and `I` rows for finite
    /// upper bounds into a single inequality system.
    fn stacked(&self) -> (DenseMatrix, Vec<f64>, Vec<usize>, Vec<usize>) {
        let n = self.num_vars();
        let lo_idx: Vec<usize> = (0..n).filter(|&j| self.lower[j].is_finite()).collect();
        let hi_idx: Vec<usize> = (0..n).filter(|&j| self.upper[j].is_finite()).collect();
        let m = self.g.rows() + lo_idx.len() + hi_idx.len();
        let mut data = Vec::with_capacity(m * n);
        let mut h = self.h.clone();
        data.extend_from_slice(self.g.as_slice());
        for &j in &lo_idx {
            let mut row = vec![0.0; n];
            row[j] = -1.0;
            data.extend(row);
            h.push(-self.lower[j]);
        }
        for &j in &hi_idx {
            let mut row = vec![0.0; n];
            row[j] = 1.0;
            data.extend(row);
            h.push(self.upper[j]);
        }
        let g = DenseMatrix::from_row_major(m, n, data).expect("stacked rows are consistent");
        (g, h, lo_idx, hi_idx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Multipliers of `G x <= h`.
    pub z: Vec<f64>,
    /// Multipliers of the lower / upper bounds (zero where a bound is absent).
    pub z_lower: Vec<f64>,
    pub z_upper: Vec<f64>,
    pub objective: f64,
    /// `||G x + s - h||_inf / (1 + ||h||_inf)`.
    pub primal_residual: f64,
    /// `||G^T z + cost||_inf / (1 + ||cost||_inf)`.
    pub dual_residual: f64,
    /// `max(|primal - dual objective|, s^T z)`.
    pub gap: f64,
    pub iterations: usize,
    pub status: LpStatus,
    pub diagnostic: Option<String>,
}

impl LpSolution {
    /// True when the residuals and gap meet `tol`.
    pub fn is_certified(&self, tol: f64) -> bool {
        self.primal_residual <= tol && self.dual_residual <= tol && self.gap <= tol * (1.0 + self.objective.abs())
    }
}

/// Fraction of the distance to the boundary taken by each step.
const STEP_FRACTION: f64 = 0.99;

fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(1.0, f64::min)
}

/// `G^T diag(w) G`.
fn weighted_gram(g: &DenseMatrix, w: &[f64]) -> DenseMatrix {
    let n = g.cols();
    let mut out = DenseMatrix::zeros(n, n);
    for (i, wi) in w.iter().enumerate() {
        let row = g.row(i);
        for a in 0..n {
            let ra = row[a] * wi;
            if ra == 0.0 {
                continue;
            }
            for b in a..n {
                out[(a, b)] += ra * row[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            out[(a, b)] = out[(b, a)];
        }
    }
    out
}

/// Factors `m`, adding the smallest diagonal shift that makes it succeed.
fn factor_regularized(m: &DenseMatrix) -> Result<Cholesky> {
    let scale = (0..m.rows()).fold(0.0_f64, |s, i| s.max(m[(i, i)].abs())).max(1.0);
    let mut shift = 0.0;
    for _ in 0..40 {
        if let Ok(ch) = Cholesky::factor_shifted(m, shift) {
            return Ok(ch);
        }
        shift = if shift == 0.0 { 1e-14 * scale } else { shift * 10.0 };
    }
    Err(Error::NotPositiveDefinite)
}

/// Solves an LP to tolerance `tol`, certifying the result.
pub fn solve_lp(prob: &LpProblem, tol: f64, max_iter: usize) -> Result<LpSolution> {
    let n = prob.num_vars();
    let (g, h, lo_idx, hi_idx) = prob.stacked();
    let m = g.rows();
    let c = &prob.cost;
    let split = |z: &[f64]| {
        let mut z_lower = vec![0.0; n];
        let mut z_upper = vec![0.0; n];
        let base = prob.g.rows();
        for (r, &j) in lo_idx.iter().enumerate() {
            z_lower[j] = z[base + r];
        }
        for (r, &j) in hi_idx.iter().enumerate() {
            z_upper[j] = z[base + lo_idx.len() + r];
        }
        (z[..base].to_vec(), z_lower, z_upper)
    };

    if m == 0 {
        let bounded = c.iter().all(|v| *v == 0.0);
        return Ok(LpSolution {
            x: vec![0.0; n],
            z: Vec::new(),
            z_lower: vec![0.0; n],
            z_upper: vec![0.0; n],
            objective: 0.0,
            primal_residual: 0.0,
            dual_residual: norm_inf(c) / (1.0 + norm_inf(c)),
            gap: 0.0,
            iterations: 0,
            status: if bounded {
                LpStatus::Optimal
            } else {
                LpStatus::Unbounded
            },
            diagnostic: (!bounded).then(|| "no constraints and a non-zero cost".into()),
        });
    }

    // Least-squares starting point, shifted into the positive orthant.
    let gram = factor_regularized(&weighted_gram(&g, &vec![1.0; m]))?;
    let mut x = gram.solve(&g.tr_mul_vec(&h));
    let gx = g.mul_vec(&x);
    let mut s: Vec<f64> = h.iter().zip(&gx).map(|(h, v)| h - v).collect();
    let w = gram.solve(&c.iter().map(|v| -v).collect::<Vec<_>>());
    let mut z = g.mul_vec(&w);
    for v in [&mut s, &mut z] {
        let worst = v.iter().cloned().fold(f64::INFINITY, f64::min);
        if worst < 1.0 {
            let shift = 1.0 - worst.min(0.0);
            v.iter_mut().for_each(|e| *e += shift);
        }
    }

    let h_norm = norm_inf(&h);
    let c_norm = norm_inf(c);
    let mut last = None;
    for it in 0..=max_iter {
        let gx = g.mul_vec(&x);
        let rp: Vec<f64> = (0..m).map(|i| gx[i] + s[i] - h[i]).collect();
        let gtz = g.tr_mul_vec(&z);
        let rd: Vec<f64> = (0..n).map(|j| gtz[j] + c[j]).collect();
        let pobj = dot(c, &x);
        let dobj = -dot(&h, &z);
        let sz = dot(&s, &z);
        let pres = norm_inf(&rp) / (1.0 + h_norm);
        let dres = norm_inf(&rd) / (1.0 + c_norm);
        let gap = (pobj - dobj).abs().max(sz);

        let finish = |status: LpStatus, diagnostic: Option<String>| {
            let (zi, z_lower, z_upper) = split(&z);
            LpSolution {
                x: x.clone(),
                z: zi,
                z_lower,
                z_upper,
                objective: pobj,
                primal_residual: pres,
                dual_residual: dres,
                gap,
                iterations: it,
                status,
                diagnostic,
            }
        };

        if pres <= tol && dres <= tol && gap <= tol * (1.0 + pobj.abs()) {
            return Ok(finish(LpStatus::Optimal, None));
        }
        let htz = dot(&h, &z);
        if htz < 0.0 {
            let farkas = norm_inf(&gtz) / -htz;
            if farkas <= tol {
                return Ok(finish(
                    LpStatus::Infeasible,
                    Some(format!(
                        "Farkas certificate with residual {farkas:e}; primal residual {pres:e}"
                    )),
                ));
            }
        }
        if pobj < 0.0 {
            let ray: Vec<f64> = (0..m).map(|i| (gx[i] + s[i]) / -pobj).collect();
            let ray_res = norm_inf(&ray);
            if ray_res <= tol {
                return Ok(finish(
                    LpStatus::Unbounded,
                    Some(format!("improving ray with residual {ray_res:e}")),
                ));
            }
        }
        if it == max_iter {
            last = Some(finish(
                LpStatus::MaxIter,
                Some(format!("residuals {pres:e} / {dres:e}, gap {gap:e}")),
            ));
            break;
        }

        let mu = sz / m as f64;
        let wgt: Vec<f64> = (0..m).map(|i| z[i] / s[i]).collect();
        let kkt = factor_regularized(&weighted_gram(&g, &wgt))?;

        // Newton direction for the complementarity target `rc`.
        let direction = |rc: &[f64]| {
            let inner: Vec<f64> = (0..m).map(|i| wgt[i] * (rp[i] - rc[i] / z[i])).collect();
            let gti = g.tr_mul_vec(&inner);
            let rhs: Vec<f64> = (0..n).map(|j| -rd[j] - gti[j]).collect();
            let dx = kkt.solve(&rhs);
            let gdx = g.mul_vec(&dx);
            let dz: Vec<f64> = (0..m).map(|i| wgt[i] * (gdx[i] + rp[i] - rc[i] / z[i])).collect();
            let ds: Vec<f64> = (0..m).map(|i| (-rc[i] - s[i] * dz[i]) / z[i]).collect();
            (dx, ds, dz)
        };

        let rc_aff: Vec<f64> = (0..m).map(|i| s[i] * z[i]).collect();
        let (_, ds_a, dz_a) = direction(&rc_aff);
        let ap = max_step(&s, &ds_a);
        let ad = max_step(&z, &dz_a);
        let mu_aff = (0..m)
            .map(|i| (s[i] + ap * ds_a[i]) * (z[i] + ad * dz_a[i]))
            .sum::<f64>()
            / m as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let rc: Vec<f64> = (0..m).map(|i| s[i] * z[i] + ds_a[i] * dz_a[i] - sigma * mu).collect();
        let (dx, ds, dz) = direction(&rc);
        if dx.iter().chain(&ds).chain(&dz).any(|v| !v.is_finite()) {
            last = Some(finish(LpStatus::MaxIter, Some("non-finite Newton direction".into())));
            break;
        }
        let ap = (STEP_FRACTION * max_step(&s, &ds)).min(1.0);
        let ad = (STEP_FRACTION * max_step(&z, &dz)).min(1.0);
        for j in 0..n {
            x[j] += ap * dx[j];
        }
        for i in 0..m {
            s[i] += ap * ds[i];
            z[i] += ad * dz[i];
        }
    }
    let sol = last.expect("loop exits through a return or sets the last iterate");
    log::warn!("LP solver stopped without certificate: {:?}", sol.diagnostic);
    Ok(sol)
}

/// ℓ1 approximation: minimize `||c - A q||_1 + alpha pbar^T q` over `0 <= q <= e`.
///
/// `|q_e|` is modelled by epigraph variables `t >= +-(c - A q)`. The returned
/// excess `c - A q` may be negative (over-served links).
pub fn solve_l1_approx(chan: &NormalizedChannel, alpha: f64) -> Result<SolverSolution> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
    }
    let k = chan.len();
    let a = chan.a();
    let mut cost: Vec<f64> = chan.budget_w().iter().map(|b| alpha * b).collect();
    cost.extend(std::iter::repeat_n(1.0, k));

    let mut g = DenseMatrix::zeros(2 * k, 2 * k);
    let mut h = Vec::with_capacity(2 * k);
    for i in 0..k {
        for j in 0..k {
            g[(i, j)] = -a[(i, j)];
            g[(k + i, j)] = a[(i, j)];
        }
        g[(i, k + i)] = -1.0;
        g[(k + i, k + i)] = -1.0;
    }
    h.extend(chan.c().iter().map(|v| -v));
    h.extend_from_slice(chan.c());

    let mut lower = vec![0.0; k];
    lower.extend(std::iter::repeat_n(f64::NEG_INFINITY, k));
    let mut upper = vec![1.0; k];
    upper.extend(std::iter::repeat_n(f64::INFINITY, k));
    let prob = LpProblem::new(cost, g, h)?.with_bounds(lower, upper)?;
    let lp = solve_lp(&prob, LP_TOL, LP_MAX_ITER)?;

    let q: Vec<f64> = lp.x[..k].iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let q_e = excess(chan, &q);
    let objective = q_e.iter().map(|v| v.abs()).sum::<f64>() + alpha * chan.watts(&q);
    Ok(SolverSolution {
        s: q.iter().map(|v| 1.0 - v).collect(),
        q_e,
        q,
        objective,
        kkt_residual: lp
            .primal_residual
            .max(lp.dual_residual)
            .max(lp.gap / (1.0 + lp.objective.abs())),
        barrier_stages: 0,
        newton_steps: lp.iterations,
        converged: lp.status == LpStatus::Optimal,
    })
}
