//! Exact supportability of a link set, Foschini–Miljanic power control, and
//! an exhaustive optimal-admission oracle for small networks.
//!
//! A set is supportable iff `rho(I - A) < 1` and the minimal solution
//! `q* = A^{-1} c` fits the budgets (`q* <= e`). The deflation loops use this
//! certificate for every stopping decision; solver outputs only rank links.

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::NormalizedChannel;
use crate::numerics::{self, SPECTRAL_MAX_ITER, SPECTRAL_TOL};

/// `rho(I - A)` must be below `1 - RHO_MARGIN`.
pub const RHO_MARGIN: f64 = 1e-12;
/// Componentwise slack allowed on `q* <= e`.
pub const BUDGET_SLACK: f64 = 1e-9;
/// Largest channel accepted by [`brute_force_optimum`].
pub const ORACLE_MAX_LINKS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FeasibilityReason {
    Ok,
    RhoGe1,
    BudgetExceeded,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityCertificate {
    pub feasible: bool,
    pub rho: f64,
    /// Minimal normalized powers `A^{-1} c`, when the solve succeeded.
    pub qstar: Option<Vec<f64>>,
    pub reason: FeasibilityReason,
}

/// Decides whether every link of `chan` can meet its target within budget.
pub fn is_supportable(chan: &NormalizedChannel) -> FeasibilityCertificate {
    let numerical = |rho: f64, qstar: Option<Vec<f64>>| FeasibilityCertificate {
        feasible: false,
        rho,
        qstar,
        reason: FeasibilityReason::Numerical,
    };
    let est = match numerics::spectral_radius(&chan.cross_interference(), SPECTRAL_TOL, SPECTRAL_MAX_ITER) {
        Ok(est) => est,
        Err(_) => return numerical(f64::NAN, None),
    };
    let limit = 1.0 - RHO_MARGIN;
    let rho_below = if est.converged {
        est.rho < limit
    } else if est.upper < limit {
        true
    } else if est.lower >= limit {
        false
    } else {
        log::debug!("spectral radius unconverged near 1: {est:?}");
        return numerical(est.rho, None);
    };

    let qstar = numerics::solve_linear(chan.a(), chan.c()).ok();
    if !rho_below {
        return FeasibilityCertificate {
            feasible: false,
            rho: est.rho,
            qstar,
            reason: FeasibilityReason::RhoGe1,
        };
    }
    let Some(q) = qstar else {
        return numerical(est.rho, None);
    };
    // A is a non-singular M-matrix here, so A^{-1} >= 0 and q* >= c > 0.
    if q.iter().any(|&v| v < -BUDGET_SLACK) {
        log::warn!("negative minimal power despite rho < 1; rho = {}", est.rho);
        return numerical(est.rho, Some(q));
    }
    let fits = q.iter().all(|&v| v <= 1.0 + BUDGET_SLACK);
    FeasibilityCertificate {
        feasible: fits,
        rho: est.rho,
        qstar: Some(q),
        reason: if fits {
            FeasibilityReason::Ok
        } else {
            FeasibilityReason::BudgetExceeded
        },
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FmOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub keep_trace: bool,
}

impl Default for FmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 1_000_000,
            keep_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FmRun {
    /// Last iterate.
    pub q: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `q(0), q(1), ...` when requested.
    pub trace: Vec<Vec<f64>>,
}

/// Iterates are abandoned once they exceed this magnitude.
const FM_BLOWUP: f64 = 1e100;

/// Normalized Foschini–Miljanic iteration `q(t+1) = (I - A) q(t) + c`.
///
/// The map is not clamped to the budget box; budget violations are the
/// certificate's business.
pub fn foschini_miljanic(chan: &NormalizedChannel, q0: &[f64], opts: FmOptions) -> Result<FmRun> {
    let k = chan.len();
    if q0.len() != k {
        return Err(Error::Dimension(format!("q0 has length {}, expected {k}", q0.len())));
    }
    if q0.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Config("q0 must lie in [0, 1]".into()));
    }
    let cross = chan.cross_interference();
    let mut q = q0.to_vec();
    let mut trace = Vec::new();
    if opts.keep_trace {
        trace.push(q.clone());
    }
    for it in 1..=opts.max_iter {
        let mut next = cross.mul_vec(&q);
        for (n, c) in next.iter_mut().zip(chan.c()) {
            *n += c;
        }
        let step = next.iter().zip(&q).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        q = next;
        if opts.keep_trace {
            trace.push(q.clone());
        }
        if step <= opts.tol {
            return Ok(FmRun {
                q,
                iterations: it,
                converged: true,
                trace,
            });
        }
        if !step.is_finite() || numerics::norm_inf(&q) > FM_BLOWUP {
            return Ok(FmRun {
                q,
                iterations: it,
                converged: false,
                trace,
            });
        }
    }
    Ok(FmRun {
        q,
        iterations: opts.max_iter,
        converged: false,
        trace,
    })
}

/// Maximum admissible set with minimum total power.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// Original link ids, ascending (printed 1-based). Empty when no single
    /// link fits its budget.
    #[serde(serialize_with = "crate::nlpd::one_based_vec")]
    pub best_set: Vec<usize>,
    pub qstar: Vec<f64>,
    pub total_power_w: f64,
    /// `(K - |S0|) + alpha * pbar_S^T q*_S`.
    pub l0_objective: f64,
}

/// Exhaustive search over subsets, largest cardinality first.
///
/// Among feasible subsets of maximum size the one with least total power
/// wins; power ties (relative 1e-12) go to the lexicographically smallest set.
pub fn brute_force_optimum(chan: &NormalizedChannel, alpha: f64) -> Result<OracleResult> {
    let k = chan.len();
    if k > ORACLE_MAX_LINKS {
        return Err(Error::TooManyLinks {
            links: k,
            cap: ORACLE_MAX_LINKS,
        });
    }
    let ids = chan.link_ids();
    for size in (1..=k).rev() {
        let mut best: Option<(Vec<usize>, Vec<f64>, f64)> = None;
        for subset in (0..k).combinations(size) {
            let picked: Vec<usize> = subset.iter().map(|&p| ids[p]).collect();
            let sub = chan.restrict(&picked)?;
            let cert = is_supportable(&sub);
            if !cert.feasible {
                continue;
            }
            let q = cert.qstar.expect("feasible certificate carries q*");
            let power = sub.watts(&q);
            let better = match &best {
                None => true,
                Some((_, _, p)) => power < *p && (p - power) > 1e-12 * p.abs(),
            };
            if better {
                best = Some((picked, q, power));
            }
        }
        if let Some((set, q, power)) = best {
            return Ok(OracleResult {
                l0_objective: (k - set.len()) as f64 + alpha * power,
                best_set: set,
                qstar: q,
                total_power_w: power,
            });
        }
    }
    Ok(OracleResult {
        best_set: Vec::new(),
        qstar: Vec::new(),
        total_power_w: 0.0,
        l0_objective: k as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseMatrix;
    use crate::testutil::symmetric_channel;

    #[test]
    fn certificates_for_symmetric_pairs() {
        let c = is_supportable(&symmetric_channel(0.4));
        assert!(c.feasible);
        assert_eq!(c.reason, FeasibilityReason::Ok);
        assert!((c.rho - 0.4).abs() < 1e-9);
        for q in c.qstar.unwrap() {
            assert!((q - 5.0 / 6.0).abs() < 1e-9);
        }

        let c = is_supportable(&symmetric_channel(0.6));
        assert!(!c.feasible);
        assert_eq!(c.reason, FeasibilityReason::BudgetExceeded);
        assert!((c.rho - 0.6).abs() < 1e-9);
        for q in c.qstar.unwrap() {
            assert!((q - 1.25).abs() < 1e-9);
        }

        let c = is_supportable(&symmetric_channel(1.2));
        assert!(!c.feasible);
        assert_eq!(c.reason, FeasibilityReason::RhoGe1);
        assert!((c.rho - 1.2).abs() < 1e-9);
    }

    #[test]
    fn boundary_rho_is_infeasible() {
        let c = is_supportable(&symmetric_channel(1.0));
        assert!(!c.feasible);
        assert_eq!(c.reason, FeasibilityReason::RhoGe1);
    }

    #[test]
    fn fm_single_link_one_step() {
        let ch = NormalizedChannel::from_parts(DenseMatrix::identity(1), vec![0.5], vec![1.0]).unwrap();
        let run = foschini_miljanic(
            &ch,
            &[0.0],
            FmOptions {
                keep_trace: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(run.converged);
        assert_eq!(run.trace[1], vec![0.5]);
        assert_eq!(run.q, vec![0.5]);
        assert_eq!(run.iterations, 2);
    }

    #[test]
    fn fm_symmetric_pair_trace() {
        let run = foschini_miljanic(
            &symmetric_channel(0.4),
            &[0.0, 0.0],
            FmOptions {
                keep_trace: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(run.converged);
        assert_eq!(run.trace[1], vec![0.5, 0.5]);
        assert!((run.trace[2][0] - 0.7).abs() < 1e-15);
        assert!((run.trace[2][1] - 0.7).abs() < 1e-15);
        for q in &run.q {
            assert!((q - 5.0 / 6.0).abs() < 1e-11);
        }
    }

    #[test]
    fn fm_diverges_when_rho_above_one() {
        let run = foschini_miljanic(&symmetric_channel(1.2), &[0.0, 0.0], FmOptions::default()).unwrap();
        assert!(!run.converged);
        assert!(run.q.iter().all(|v| *v > 1.0));
    }

    #[test]
    fn fm_rejects_bad_start() {
        let ch = symmetric_channel(0.4);
        assert!(foschini_miljanic(&ch, &[0.0], FmOptions::default()).is_err());
        assert!(foschini_miljanic(&ch, &[0.0, 1.5], FmOptions::default()).is_err());
    }

    #[test]
    fn oracle_examples() {
        let r = brute_force_optimum(&symmetric_channel(0.4), 0.5).unwrap();
        assert_eq!(r.best_set, vec![0, 1]);
        assert!((r.total_power_w - 2.0 * 0.2 * 5.0 / 6.0).abs() < 1e-9);
        assert!((r.l0_objective - 0.5 * r.total_power_w).abs() < 1e-12);

        let r = brute_force_optimum(&symmetric_channel(0.6), 0.5).unwrap();
        assert_eq!(r.best_set, vec![0]);
        assert!((r.qstar[0] - 0.5).abs() < 1e-12);
        assert!((r.l0_objective - (1.0 + 0.5 * 0.1)).abs() < 1e-12);

        let lone = NormalizedChannel::from_parts(DenseMatrix::identity(1), vec![1.5], vec![1.0]).unwrap();
        let r = brute_force_optimum(&lone, 0.5).unwrap();
        assert!(r.best_set.is_empty());
        assert_eq!(r.l0_objective, 1.0);
    }

    #[test]
    fn oracle_prefers_lower_power_among_equal_size() {
        // links 0 and 1 conflict; link 1 needs less power than link 0
        let a = DenseMatrix::from_rows(&[vec![1.0, -0.9], vec![-0.9, 1.0]]).unwrap();
        let ch = NormalizedChannel::from_parts(a, vec![0.5, 0.5], vec![1.0, 0.5]).unwrap();
        let r = brute_force_optimum(&ch, 0.1).unwrap();
        assert_eq!(r.best_set, vec![1]);
    }

    #[test]
    fn oracle_cap_enforced() {
        let k = ORACLE_MAX_LINKS + 1;
        let ch = NormalizedChannel::from_parts(DenseMatrix::identity(k), vec![0.5; k], vec![1.0; k]).unwrap();
        assert!(matches!(
            brute_force_optimum(&ch, 0.01),
            Err(Error::TooManyLinks { links: 17, cap: 16 })
        ));
    }
}
