//! Self-checks run by `jpac verify`.
//!
//! Each check draws its own instances from the benchmark generator, so a
//! failing seed can be replayed. The suites are small versions of the
//! workspace's test suites, meant for sanity-checking a build in place.

use serde::Serialize;

use crate::bench::{generate_instance, trial_seed, InstanceConfig};
use crate::feasibility::{brute_force_optimum, foschini_miljanic, is_supportable, FmOptions};
use crate::lp::{solve_l1_approx, LP_TOL};
use crate::model::{excess, sinr, LinkNetwork, NormalizedChannel};
use crate::nlpd::{necessary_condition, run_nlpd, NlpdParams};
use crate::numerics::DenseMatrix;
use crate::pnmd::{run_pnmd, solve_lp_norm, IpmParams, PnmdParams};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// First failing case, if any.
    pub detail: Option<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct Tally {
    name: &'static str,
    cases: usize,
    failures: usize,
    detail: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            failures: 0,
            detail: None,
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.detail.is_none() {
                self.detail = Some(detail());
            }
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            name: self.name,
            cases: self.cases,
            failures: self.failures,
            detail: self.detail,
        }
    }
}

/// Ids `0..k` kept by the bits of `mask`, or all of them for an empty mask.
fn subset(k: usize, mask: u64) -> Vec<usize> {
    let ids: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
    if ids.is_empty() {
        (0..k).collect()
    } else {
        ids
    }
}

fn instance(seed: u64, k: usize, i: usize) -> Result<(LinkNetwork, NormalizedChannel, u64)> {
    let s = trial_seed(seed, k, i);
    let net = generate_instance(&InstanceConfig::default(), k, s)?;
    let chan = NormalizedChannel::from_network(&net)?;
    Ok((net, chan, s))
}

fn two_link_closed_forms() -> Result<CheckOutcome> {
    let mut t = Tally::new("two-link closed forms");
    for (g, feasible, q, margin) in [
        (0.4, true, 5.0 / 6.0, 0.2),
        (0.6, false, 1.25, -0.2),
        (1.2, false, 0.0, -1.2),
    ] {
        let a = DenseMatrix::from_rows(&[vec![1.0, -g], vec![-g, 1.0]])?;
        let chan = NormalizedChannel::from_parts(a, vec![0.5, 0.5], vec![0.2, 0.2])?;
        let cert = is_supportable(&chan);
        t.record(cert.feasible == feasible, || {
            format!("g = {g}: feasible = {}", cert.feasible)
        });
        if g < 1.0 {
            let qs = cert.qstar.clone().unwrap_or_default();
            t.record(qs.iter().all(|v| (v - q).abs() < 1e-9), || {
                format!("g = {g}: q* = {qs:?}")
            });
        }
        let m = necessary_condition(&chan).margin;
        t.record((m - margin).abs() < 1e-9, || format!("g = {g}: margin = {m}"));
    }
    Ok(t.finish())
}

fn certificate_matches_power_control(seed: u64, rounds: usize) -> Result<CheckOutcome> {
    let mut t = Tally::new("certificate agrees with power control");
    for i in 0..rounds {
        let (_, chan, s) = instance(seed, 8, i)?;
        let ids = subset(8, trial_seed(s, 0, 0));
        let sub = chan.restrict(&ids)?;
        let cert = is_supportable(&sub);
        let fm = foschini_miljanic(&sub, &vec![0.0; sub.len()], FmOptions::default())?;
        let fm_ok = fm.converged && fm.q.iter().all(|&v| v <= 1.0 + 1e-9);
        t.record(cert.feasible == fm_ok, || {
            format!("seed {s}, links {ids:?}: certificate {} vs FM {fm_ok}", cert.feasible)
        });
        if cert.feasible {
            let q = cert.qstar.as_deref().unwrap_or_default();
            let worst = excess(&sub, q).into_iter().fold(0.0, f64::max);
            t.record(worst <= 1e-9, || format!("seed {s}: q* misses a target by {worst:e}"));
        }
    }
    Ok(t.finish())
}

fn necessary_condition_sound(seed: u64, rounds: usize) -> Result<CheckOutcome> {
    let mut t = Tally::new("necessary condition on feasible sets");
    for i in 0..rounds {
        let (_, chan, s) = instance(seed, 10, i)?;
        let ids = subset(10, trial_seed(s, 1, 0) & trial_seed(s, 2, 0));
        let sub = chan.restrict(&ids)?;
        if is_supportable(&sub).feasible {
            let m = necessary_condition(&sub).margin;
            t.record(m >= -1e-12, || format!("seed {s}, links {ids:?}: margin {m:e}"));
        }
    }
    Ok(t.finish())
}

fn convex_solvers_agree(seed: u64, rounds: usize) -> Result<CheckOutcome> {
    let mut t = Tally::new("barrier solver at p = 1 matches the LP");
    let ipm = IpmParams {
        p: 1.0,
        allow_convex: true,
        epsilon: 1e-8,
        ..IpmParams::default()
    };
    for i in 0..rounds {
        let (_, chan, s) = instance(seed, 6, i)?;
        let alpha = 0.2 / chan.budget_w().iter().sum::<f64>();
        let lp = solve_l1_approx(&chan, alpha)?;
        t.record(lp.converged && lp.kkt_residual <= LP_TOL, || {
            format!("seed {s}: LP residual {:e}", lp.kkt_residual)
        });
        let bar = solve_lp_norm(&chan, alpha, &ipm)?;
        let gap = (bar.objective - lp.objective).abs();
        t.record(bar.converged && gap <= 1e-5, || {
            format!("seed {s}: objective gap {gap:e}")
        });
    }
    Ok(t.finish())
}

fn admissions_are_valid(seed: u64, rounds: usize) -> Result<CheckOutcome> {
    let mut t = Tally::new("admissions are supportable and within the optimum");
    for i in 0..rounds {
        let (net, chan, s) = instance(seed, 7, i)?;
        let alpha = 0.2 / chan.budget_w().iter().sum::<f64>();
        let best = brute_force_optimum(&chan, alpha)?.best_set.len();
        let nlpd = run_nlpd(&net, &NlpdParams::default())?;
        let pnmd = run_pnmd(&net, &PnmdParams::default())?;
        for r in [&nlpd, &pnmd] {
            let p = r.full_powers(net.len());
            let achieved = sinr(&net, &p);
            let met = r
                .supported
                .iter()
                .all(|&k| achieved[k] >= net.target()[k] * (1.0 - 1e-6) && p[k] <= net.budget_w()[k] * (1.0 + 1e-9));
            t.record(met && r.supported.len() <= best, || {
                format!(
                    "seed {s}: {} supports {:?} (optimum {best}, targets met: {met})",
                    r.algorithm, r.supported
                )
            });
        }
    }
    Ok(t.finish())
}

/// Runs every check with `rounds` random cases each.
pub fn run_checks(seed: u64, rounds: usize) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        two_link_closed_forms()?,
        certificate_matches_power_control(seed, rounds)?,
        necessary_condition_sound(seed, rounds)?,
        convex_solvers_agree(seed, rounds.min(50))?,
        admissions_are_valid(seed, rounds.min(50))?,
    ])
}
