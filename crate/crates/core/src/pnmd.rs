//! ℓp-guided deflation (PNMD).
//!
//! The guidance problem, for `0 < p < 1`, is
//!
//! ```text
//! minimize    sum_k (q_e)_k^p + alpha pbar^T q
//! subject to  q_e = c - A q,  s = e - q,  q >= 0,  q_e >= 0,  s >= 0
//! ```
//!
//! Eliminating `q_e` and `s` leaves a problem in `q` alone over the polytope
//! `{q >= 0, e - q >= 0, c - A q >= 0}`. [`solve_lp_norm`] attacks it with a
//! log-barrier continuation and damped, regularized Newton steps, stopping at
//! an ε-KKT point. The objective is concave in `q_e`, so only local optimality
//! is claimed.
//!
//! The slacks `q_e` and `s` are carried as state and updated along with `q`
//! instead of being recomputed from it: near a supported link `(q_e)_k` is
//! many orders of magnitude below `c_k`, and recomputing `c - A q` would wipe
//! out its relative precision (and with it the barrier gradient).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{LinkNetwork, NormalizedChannel, SolverSolution};
use crate::nlpd::{
    alpha_bounds, argmax_first, deflate, rho_branch, Alpha2Mode, AlphaBranch, AlphaParams, Guidance, IterationStats,
};
use crate::numerics::{dot, norm_inf, Cholesky, DenseMatrix};
use crate::AdmissionResult;

/// Barrier-solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IpmParams {
    /// Exponent of the sparsity surrogate.
    pub p: f64,
    /// Target KKT residual.
    pub epsilon: f64,
    /// Initial barrier weight; `None` uses `max(1, G(q0)) / (3K)`.
    pub mu0: Option<f64>,
    pub mu_shrink: f64,
    pub max_newton_per_stage: usize,
    /// Largest fraction of the distance to the boundary a step may cover.
    pub boundary_fraction: f64,
    /// Smallest Hessian shift tried when the Hessian is indefinite.
    pub regularization_floor: f64,
    /// Permits `p = 1` so the solver can be checked against the LP.
    pub allow_convex: bool,
    /// Also start from one point per link that leans toward serving that
    /// link alone, and keep the best certified result.
    pub solo_starts: bool,
}

impl Default for IpmParams {
    fn default() -> Self {
        Self {
            p: 0.5,
            epsilon: 1e-6,
            mu0: None,
            mu_shrink: 0.2,
            max_newton_per_stage: 100,
            boundary_fraction: 0.99,
            regularization_floor: 1e-10,
            allow_convex: false,
            solo_starts: true,
        }
    }
}

impl IpmParams {
    pub fn validate(&self) -> Result<()> {
        let p_ok = (self.p > 0.0 && self.p < 1.0) || (self.allow_convex && self.p == 1.0);
        if !p_ok {
            return Err(Error::Config(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if !(self.mu_shrink > 0.0 && self.mu_shrink < 1.0) {
            return Err(Error::Config("mu_shrink must lie in (0, 1)".into()));
        }
        if !(self.boundary_fraction > 0.0 && self.boundary_fraction < 1.0) {
            return Err(Error::Config("boundary_fraction must lie in (0, 1)".into()));
        }
        if let Some(mu0) = self.mu0 {
            if !(mu0 > 0.0 && mu0.is_finite()) {
                return Err(Error::Config("mu0 must be positive".into()));
            }
        }
        if self.max_newton_per_stage == 0 || !(self.regularization_floor > 0.0) {
            return Err(Error::Config(
                "Newton budget and regularization floor must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Upper bound on the number of barrier stages for a given `mu0`.
    pub fn stage_bound(&self, mu0: f64) -> usize {
        if mu0 <= self.epsilon {
            return 1;
        }
        ((mu0 / self.epsilon).ln() / (1.0 / self.mu_shrink).ln())
            .ceil()
            .max(1.0) as usize
    }
}

/// Weight of the power term for the ℓp problem.
///
/// `c1 * alpha1` when `rho(I - A) >= 1`, else `min(c2 * alpha1, c3 * alpha2)`.
pub fn alpha_pnmd(chan: &NormalizedChannel, c1: f64, c2: f64, c3: f64, mode: Alpha2Mode) -> Result<AlphaParams> {
    if !(0.0 < c1 && c1 < 1.0 && 0.0 < c2 && c2 < 1.0 && c3 > c2) {
        return Err(Error::Config(format!(
            "need 0 < c1, c2 < 1 and c3 > c2; got c1 = {c1}, c2 = {c2}, c3 = {c3}"
        )));
    }
    let (alpha1, alpha2) = alpha_bounds(chan, mode);
    let (rho, branch) = rho_branch(chan);
    let alpha = match branch {
        AlphaBranch::RhoAtLeastOne => c1 * alpha1,
        AlphaBranch::RhoBelowOne => (c2 * alpha1).min(c3 * alpha2),
    };
    Ok(AlphaParams {
        c1,
        c2,
        c3: Some(c3),
        alpha1,
        alpha2,
        rho,
        alpha,
        branch,
    })
}

/// A strictly interior point with its slacks.
#[derive(Debug, Clone)]
struct Iterate {
    q: Vec<f64>,
    /// `c - A q`
    r: Vec<f64>,
    /// `e - q`
    s: Vec<f64>,
}

impl Iterate {
    fn from_q(chan: &NormalizedChannel, q: Vec<f64>) -> Self {
        let r = crate::model::excess(chan, &q);
        let s = q.iter().map(|v| 1.0 - v).collect();
        Self { q, r, s }
    }

    fn is_interior(&self) -> bool {
        self.q
            .iter()
            .chain(&self.r)
            .chain(&self.s)
            .all(|v| *v > 0.0 && v.is_finite())
    }
}

/// The barrier problem for fixed `(alpha, p)`.
struct Barrier<'a> {
    chan: &'a NormalizedChannel,
    /// `alpha * pbar`
    price: Vec<f64>,
    p: f64,
}

impl<'a> Barrier<'a> {
    fn new(chan: &'a NormalizedChannel, alpha: f64, p: f64) -> Self {
        Self {
            chan,
            price: chan.budget_w().iter().map(|b| alpha * b).collect(),
            p,
        }
    }

    fn objective(&self, x: &Iterate) -> f64 {
        x.r.iter().map(|r| r.powf(self.p)).sum::<f64>() + dot(&self.price, &x.q)
    }

    fn value(&self, x: &Iterate, mu: f64) -> f64 {
        let logs: f64 = x.q.iter().chain(&x.r).chain(&x.s).map(|v| v.ln()).sum();
        self.objective(x) - mu * logs
    }

    /// `grad G - J^T lambda` with `lambda_i = mu / g_i`.
    fn gradient(&self, x: &Iterate, mu: f64) -> Vec<f64> {
        let w: Vec<f64> = x.r.iter().map(|r| mu / r - self.p * r.powf(self.p - 1.0)).collect();
        let mut g = self.chan.a().tr_mul_vec(&w);
        for (j, gj) in g.iter_mut().enumerate() {
            *gj += self.price[j] - mu / x.q[j] + mu / x.s[j];
        }
        g
    }

    fn hessian(&self, x: &Iterate, mu: f64) -> DenseMatrix {
        let k = x.q.len();
        let a = self.chan.a();
        let d: Vec<f64> =
            x.r.iter()
                .map(|r| mu / (r * r) + self.p * (self.p - 1.0) * r.powf(self.p - 2.0))
                .collect();
        let mut h = DenseMatrix::zeros(k, k);
        for (row, dk) in d.iter().enumerate() {
            let ar = a.row(row);
            for i in 0..k {
                let v = ar[i] * dk;
                if v == 0.0 {
                    continue;
                }
                for j in i..k {
                    h[(i, j)] += v * ar[j];
                }
            }
        }
        for i in 0..k {
            for j in 0..i {
                h[(i, j)] = h[(j, i)];
            }
            h[(i, i)] += mu / (x.q[i] * x.q[i]) + mu / (x.s[i] * x.s[i]);
        }
        h
    }

    /// Largest step along `d` keeping every slack non-negative.
    fn step_to_boundary(&self, x: &Iterate, d: &[f64], dr: &[f64]) -> f64 {
        let mut t = f64::INFINITY;
        for ((dj, q), s) in d.iter().zip(&x.q).zip(&x.s) {
            if *dj < 0.0 {
                t = t.min(q / -dj);
            } else if *dj > 0.0 {
                t = t.min(s / dj);
            }
        }
        for (r, v) in x.r.iter().zip(dr) {
            if *v < 0.0 {
                t = t.min(r / -v);
            }
        }
        t
    }

    fn moved(&self, x: &Iterate, d: &[f64], dr: &[f64], t: f64) -> Iterate {
        Iterate {
            q: x.q.iter().zip(d).map(|(q, d)| q + t * d).collect(),
            r: x.r.iter().zip(dr).map(|(r, v)| r + t * v).collect(),
            s: x.s.iter().zip(d).map(|(s, d)| s - t * d).collect(),
        }
    }
}

/// Maximum number of shifted factorizations before giving up on Newton.
const MAX_FACTORIZATIONS: usize = 60;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const MAX_STAGE_RESTARTS: usize = 3;

/// Symmetrically equilibrates `h + shift I` and factors it.
fn factor_scaled(h: &DenseMatrix, shift: f64) -> Option<(Cholesky, Vec<f64>)> {
    let k = h.rows();
    let scale: Vec<f64> = (0..k)
        .map(|i| {
            let d = (h[(i, i)] + shift).abs();
            if d > 0.0 && d.is_finite() {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut m = h.clone();
    for i in 0..k {
        m[(i, i)] += shift;
    }
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] *= scale[i] * scale[j];
        }
    }
    Cholesky::factor_shifted(&m, 0.0).ok().map(|ch| (ch, scale))
}

/// Descent direction: regularized Newton, or steepest descent when no
/// shift up to `floor * 2^59` makes the Hessian positive definite.
fn newton_direction(h: &DenseMatrix, g: &[f64], floor: f64) -> (Vec<f64>, bool) {
    let diag_scale = (0..h.rows()).fold(1.0_f64, |m, i| m.max(h[(i, i)].abs()));
    let mut shift = 0.0;
    for attempt in 0..MAX_FACTORIZATIONS {
        if let Some((ch, scale)) = factor_scaled(h, shift) {
            let rhs: Vec<f64> = g.iter().zip(&scale).map(|(g, s)| -g * s).collect();
            let y = ch.solve(&rhs);
            return (y.iter().zip(&scale).map(|(y, s)| y * s).collect(), true);
        }
        shift = if attempt == 0 { floor * diag_scale } else { shift * 2.0 };
    }
    log::debug!("Hessian stayed indefinite after {MAX_FACTORIZATIONS} shifts; using the gradient");
    (g.iter().map(|v| -v).collect(), false)
}

#[derive(Debug, Default)]
struct StageOutcome {
    newton_steps: usize,
    centered: bool,
    lost_interior: bool,
}

/// Minimizes the barrier function at weight `mu` starting from `x`.
fn center(barrier: &Barrier<'_>, x: &mut Iterate, mu: f64, params: &IpmParams, boundary_fraction: f64) -> StageOutcome {
    let mut out = StageOutcome::default();
    let a = barrier.chan.a();
    for _ in 0..params.max_newton_per_stage {
        let g = barrier.gradient(x, mu);
        if norm_inf(&g) <= mu {
            out.centered = true;
            return out;
        }
        let (d, _) = newton_direction(&barrier.hessian(x, mu), &g, params.regularization_floor);
        let dr: Vec<f64> = a.mul_vec(&d).into_iter().map(|v| -v).collect();
        let slope = dot(&g, &d);
        if !(slope < 0.0) || d.iter().any(|v| !v.is_finite()) {
            return out;
        }
        let mut t = (boundary_fraction * barrier.step_to_boundary(x, &d, &dr)).min(1.0);
        let base = barrier.value(x, mu);
        let noise = 1e-14 * (1.0 + base.abs());
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = barrier.moved(x, &d, &dr, t);
            if trial.is_interior() {
                let v = barrier.value(&trial, mu);
                if v <= base + ARMIJO * t * slope || (v <= base + noise && -slope * t <= noise) {
                    accepted = Some(trial);
                    break;
                }
            }
            t *= 0.5;
        }
        out.newton_steps += 1;
        match accepted {
            Some(next) => *x = next,
            None => return out,
        }
        if !x.is_interior() {
            out.lost_interior = true;
            return out;
        }
    }
    out.centered = norm_inf(&barrier.gradient(x, mu)) <= mu;
    out
}

/// Starting point `t e` with `t = min(0.5, min_k c_k / (2 max(1, max_k |[A e]_k|)))`.
pub fn starting_point(chan: &NormalizedChannel) -> Vec<f64> {
    let ae = chan.a().mul_vec(&vec![1.0; chan.len()]);
    let c_min = chan.c().iter().cloned().fold(f64::INFINITY, f64::min);
    let t = (c_min / (2.0 * norm_inf(&ae).max(1.0))).min(0.5);
    vec![t; chan.len()]
}

/// KKT residual of the ℓp problem at an interior `q` for barrier weight `mu`.
///
/// `max(||grad G(q) - J^T lambda||_inf, max_i lambda_i g_i(q))` with the
/// barrier multipliers `lambda_i = mu / g_i(q)` over the 3K constraint slacks.
/// Points on or outside the boundary get an infinite residual.
pub fn kkt_residual(chan: &NormalizedChannel, alpha: f64, p: f64, q: &[f64], mu: f64) -> f64 {
    let x = Iterate::from_q(chan, q.to_vec());
    if !x.is_interior() {
        return f64::INFINITY;
    }
    residual_at(&Barrier::new(chan, alpha, p), &x, mu)
}

fn residual_at(barrier: &Barrier<'_>, x: &Iterate, mu: f64) -> f64 {
    norm_inf(&barrier.gradient(x, mu)).max(mu)
}

/// Starting points that push link `k` to within 1% of its excess boundary
/// while the others stay at [`starting_point`].
pub fn solo_starting_points(chan: &NormalizedChannel) -> Vec<Vec<f64>> {
    let q0 = starting_point(chan);
    let r0 = crate::model::excess(chan, &q0);
    (0..chan.len())
        .map(|k| {
            let mut q = q0.clone();
            q[k] += 0.99 * r0[k].min(1.0 - q0[k]);
            q
        })
        .collect()
}

/// Solves the ℓp guidance problem to an ε-KKT point.
///
/// The objective is concave, so its local minima sit at vertices of the
/// feasible polytope and the one reached depends on the start. With
/// `solo_starts` the solver also runs from [`solo_starting_points`] and
/// returns the converged result of least objective (the [`starting_point`]
/// run wins ties, and is returned if nothing converges). `newton_steps`
/// then counts all runs.
pub fn solve_lp_norm(chan: &NormalizedChannel, alpha: f64, params: &IpmParams) -> Result<SolverSolution> {
    let mut best = solve_lp_norm_from(chan, alpha, params, starting_point(chan))?;
    if !params.solo_starts || chan.len() < 2 {
        return Ok(best);
    }
    let mut steps = best.newton_steps;
    for q0 in solo_starting_points(chan) {
        let Ok(sol) = solve_lp_norm_from(chan, alpha, params, q0) else {
            continue;
        };
        steps += sol.newton_steps;
        if sol.converged && (!best.converged || sol.objective < best.objective) {
            best = sol;
        }
    }
    best.newton_steps = steps;
    Ok(best)
}

/// [`solve_lp_norm`] from a caller-chosen strictly interior `q0`.
pub fn solve_lp_norm_from(
    chan: &NormalizedChannel,
    alpha: f64,
    params: &IpmParams,
    q0: Vec<f64>,
) -> Result<SolverSolution> {
    params.validate()?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
    }
    let k = chan.len();
    if q0.len() != k {
        return Err(Error::Dimension(format!("q0 has length {}, expected {k}", q0.len())));
    }
    let barrier = Barrier::new(chan, alpha, params.p);
    let mut x = Iterate::from_q(chan, q0);
    if !x.is_interior() {
        return Err(Error::Config("ℓp starting point is not strictly interior".into()));
    }
    let mu0 = params
        .mu0
        .unwrap_or_else(|| barrier.objective(&x).max(1.0) / (3 * k) as f64);

    let bound = params.stage_bound(mu0);
    let mut mu = mu0;
    let mut stages = 0;
    let mut newton_steps = 0;
    while stages < bound {
        stages += 1;
        mu = if stages == bound {
            params.epsilon
        } else {
            (mu * params.mu_shrink).max(params.epsilon)
        };
        let entry = x.clone();
        let mut fraction = params.boundary_fraction;
        for attempt in 0..=MAX_STAGE_RESTARTS {
            let out = center(&barrier, &mut x, mu, params, fraction);
            newton_steps += out.newton_steps;
            if !out.lost_interior {
                if !out.centered {
                    log::debug!("stage at mu = {mu:e} left uncentered after {} steps", out.newton_steps);
                }
                break;
            }
            log::debug!("lost interiority at mu = {mu:e}; restart {}", attempt + 1);
            x = entry.clone();
            fraction *= 0.5;
        }
        if mu <= params.epsilon {
            break;
        }
    }

    let residual = residual_at(&barrier, &x, mu);
    let converged = x.is_interior() && residual <= params.epsilon;
    if !converged {
        log::debug!(
            "ℓp solve ended with KKT residual {residual:e} (target {:e})",
            params.epsilon
        );
    }
    Ok(SolverSolution {
        objective: barrier.objective(&x),
        q: x.q,
        q_e: x.r,
        s: x.s,
        kkt_residual: residual,
        barrier_stages: stages,
        newton_steps,
        converged,
    })
}

/// Link with the largest interference-plus-noise footprint under powers `q`:
/// `sum_{j != k} |a_kj| q_j + q_k sum_{j != k} |a_jk| + c_k`.
pub fn removal_index_smart(chan: &NormalizedChannel, q: &[f64]) -> (usize, f64) {
    let k = chan.len();
    let metrics: Vec<f64> = (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i)
                .map(|j| chan.gain(i, j) * q[j] + chan.gain(j, i) * q[i])
                .sum::<f64>()
                + chan.c()[i]
        })
        .collect();
    let pos = argmax_first(&metrics);
    (pos, metrics[pos])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PnmdParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub alpha2: Alpha2Mode,
    pub ipm: IpmParams,
}

impl Default for PnmdParams {
    fn default() -> Self {
        Self {
            c1: 0.2,
            c2: 0.2,
            c3: 4.0,
            alpha2: Alpha2Mode::Default,
            ipm: IpmParams::default(),
        }
    }
}

/// Runs the ℓp-guided deflation algorithm.
pub fn run_pnmd(net: &LinkNetwork, params: &PnmdParams) -> Result<AdmissionResult> {
    params.ipm.validate()?;
    alpha_pnmd(
        &NormalizedChannel::from_network(net)?,
        params.c1,
        params.c2,
        params.c3,
        params.alpha2,
    )?;
    deflate(net, "pnmd", |ch| {
        let alpha = alpha_pnmd(ch, params.c1, params.c2, params.c3, params.alpha2)?;
        let sol = solve_lp_norm(ch, alpha.alpha, &params.ipm)?;
        if !sol.converged {
            log::warn!(
                "ℓp solve on {} links stopped at KKT residual {:e}; ranking with its last iterate",
                ch.len(),
                sol.kkt_residual
            );
        }
        let (position, metric) = removal_index_smart(ch, &sol.q);
        Ok(Guidance {
            position,
            metric,
            stats: IterationStats {
                links: ch.len(),
                alpha: alpha.alpha,
                objective: sol.objective,
                kkt_residual: sol.kkt_residual,
                barrier_stages: sol.barrier_stages,
                newton_steps: sol.newton_steps,
                converged: sol.converged,
                removed: ch.link_ids()[position],
            },
        })
    })
}
