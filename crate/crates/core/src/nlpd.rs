//! ℓ1-guided deflation (NLPD) and the deflation machinery shared with PNMD.
//!
//! Both algorithms run the same outer loop:
//!
//! 1. normalize the network to `(A, c)`;
//! 2. drop the strongest interferers until the necessary condition
//!    `(mu+)^T e - (mu- + e)^T c >= 0` holds, with `mu = A^T e`;
//! 3. while the current set is not supportable, solve a sparse approximation
//!    on it and drop the link the solution points at;
//! 4. try to re-admit removed links one at a time;
//! 5. compute final powers with Foschini–Miljanic on the supported set.
//!
//! Only step 3's guidance differs: NLPD solves the ℓ1 problem and ranks links
//! by excess-power coupling. Every stopping decision comes from the exact
//! certificate in [`crate::feasibility`].

use std::time::Instant;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::feasibility::{self, FeasibilityCertificate, FmOptions};
use crate::lp;
use crate::model::{LinkNetwork, NormalizedChannel, SolverSolution};
use crate::numerics::{self, SPECTRAL_MAX_ITER, SPECTRAL_TOL};

/// Relative tolerance under which two metric values count as tied.
const TIE_TOL: f64 = 1e-12;

/// Index of the largest value; near-ties go to the smallest index.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let slack = TIE_TOL * max.abs().max(f64::MIN_POSITIVE);
    values
        .iter()
        .position(|&v| v >= max - slack)
        .expect("argmax of an empty slice")
}

pub(crate) fn one_based<S: Serializer>(id: &usize, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(*id as u64 + 1)
}

pub(crate) fn one_based_vec<S: Serializer>(ids: &[usize], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(ids.iter().map(|i| i + 1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecessaryConditionReport {
    pub mu: Vec<f64>,
    pub mu_plus: Vec<f64>,
    pub mu_minus: Vec<f64>,
    pub margin: f64,
    pub holds: bool,
}

/// Checks the necessary condition for the whole channel to be supportable.
pub fn necessary_condition(chan: &NormalizedChannel) -> NecessaryConditionReport {
    let mu = chan.a().tr_mul_vec(&vec![1.0; chan.len()]);
    let mu_plus: Vec<f64> = mu.iter().map(|v| v.max(0.0)).collect();
    let mu_minus: Vec<f64> = mu.iter().map(|v| (-v).max(0.0)).collect();
    let margin = mu_plus.iter().sum::<f64>() - mu_minus.iter().zip(chan.c()).map(|(m, c)| (m + 1.0) * c).sum::<f64>();
    NecessaryConditionReport {
        mu,
        mu_plus,
        mu_minus,
        margin,
        holds: margin >= 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Stage {
    Pre,
    Admission,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Removal {
    pub stage: Stage,
    /// Original link id (printed 1-based).
    #[serde(serialize_with = "one_based")]
    pub link: usize,
    pub metric: f64,
}

/// Interference-plus-noise metric of every link: `sum_j |a_kj| + sum_j |a_jk| + c_k`.
pub fn footprint_metrics(chan: &NormalizedChannel) -> Vec<f64> {
    let k = chan.len();
    (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i)
                .map(|j| chan.gain(i, j) + chan.gain(j, i))
                .sum::<f64>()
                + chan.c()[i]
        })
        .collect()
}

/// Removes the strongest interferer until the necessary condition holds.
///
/// Returns `None` when every link had to go (only possible when the last
/// link alone has `c > 1`).
pub fn preprocess(chan: &NormalizedChannel) -> Result<(Option<NormalizedChannel>, Vec<Removal>)> {
    let mut current = chan.clone();
    let mut removed = Vec::new();
    loop {
        if necessary_condition(&current).holds {
            return Ok((Some(current), removed));
        }
        let metrics = footprint_metrics(&current);
        let pos = argmax_first(&metrics);
        let id = current.link_ids()[pos];
        removed.push(Removal {
            stage: Stage::Pre,
            link: id,
            metric: metrics[pos],
        });
        let rest: Vec<usize> = current.link_ids().iter().cloned().filter(|&l| l != id).collect();
        if rest.is_empty() {
            return Ok((None, removed));
        }
        current = current.restrict(&rest)?;
    }
}

/// Link to drop after an ℓ1 solve, as `(position, metric)`.
///
/// Metric: `sum_{j != k} (|a_kj| [q_e]_j + |a_jk| [q_e]_k)` with negative
/// excess clamped to zero. When every metric vanishes the link with the
/// largest `c_k` is returned instead.
pub fn removal_index_l1(chan: &NormalizedChannel, q_e: &[f64]) -> (usize, f64) {
    let k = chan.len();
    if q_e.iter().any(|v| *v < 0.0) {
        log::debug!("clamping negative excess entries before the removal metric");
    }
    let e: Vec<f64> = q_e.iter().map(|v| v.max(0.0)).collect();
    let metrics: Vec<f64> = (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i)
                .map(|j| chan.gain(i, j) * e[j] + chan.gain(j, i) * e[i])
                .sum()
        })
        .collect();
    if metrics.iter().all(|m| *m == 0.0) {
        let pos = argmax_first(chan.c());
        log::info!("all removal metrics are zero; falling back to largest normalized noise");
        return (pos, chan.c()[pos]);
    }
    let pos = argmax_first(&metrics);
    (pos, metrics[pos])
}

/// How the secondary bound `alpha2` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Alpha2Mode {
    /// `alpha2 = alpha1`.
    #[default]
    Default,
    /// A fixed value supplied by the caller.
    Value(f64),
}

impl std::str::FromStr for Alpha2Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "default" {
            return Ok(Alpha2Mode::Default);
        }
        let value = s
            .strip_prefix("value:")
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| Error::Config(format!("alpha2 mode must be `default` or `value:<x>`, got `{s}`")))?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Config(format!("alpha2 must be positive, got {value}")));
        }
        Ok(Alpha2Mode::Value(value))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaBranch {
    /// `rho(I - A) >= 1`, or not certifiably below 1.
    RhoAtLeastOne,
    RhoBelowOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: Option<f64>,
    pub alpha1: f64,
    pub alpha2: f64,
    pub rho: f64,
    pub alpha: f64,
    pub branch: AlphaBranch,
}

/// `rho(I - A)` and whether it is certifiably below one.
pub(crate) fn rho_branch(chan: &NormalizedChannel) -> (f64, AlphaBranch) {
    match numerics::spectral_radius(&chan.cross_interference(), SPECTRAL_TOL, SPECTRAL_MAX_ITER) {
        Ok(est) if (est.converged && est.rho < 1.0) || est.upper < 1.0 => (est.rho, AlphaBranch::RhoBelowOne),
        Ok(est) => (est.rho, AlphaBranch::RhoAtLeastOne),
        Err(_) => (f64::NAN, AlphaBranch::RhoAtLeastOne),
    }
}

pub(crate) fn alpha_bounds(chan: &NormalizedChannel, mode: Alpha2Mode) -> (f64, f64) {
    let alpha1 = 1.0 / chan.budget_w().iter().sum::<f64>();
    let alpha2 = match mode {
        Alpha2Mode::Default => alpha1,
        Alpha2Mode::Value(v) => v,
    };
    (alpha1, alpha2)
}

/// Weight of the power term for the ℓ1 problem.
pub fn alpha_nlpd(chan: &NormalizedChannel, c1: f64, c2: f64, mode: Alpha2Mode) -> Result<AlphaParams> {
    if !(0.0 < c1 && c1 <= c2 && c2 < 1.0) {
        return Err(Error::Config(format!(
            "need 0 < c1 <= c2 < 1, got c1 = {c1}, c2 = {c2}"
        )));
    }
    let (alpha1, alpha2) = alpha_bounds(chan, mode);
    let (rho, branch) = rho_branch(chan);
    let alpha = match branch {
        AlphaBranch::RhoAtLeastOne => c1 * alpha1,
        AlphaBranch::RhoBelowOne => c2 * alpha1.min(alpha2),
    };
    Ok(AlphaParams {
        c1,
        c2,
        c3: None,
        alpha1,
        alpha2,
        rho,
        alpha,
        branch,
    })
}

/// Re-admits removed links that fit next to the supported set.
///
/// Candidates are tried in ascending order of their removal metric (ties by
/// id); each is kept iff the enlarged set is supportable. Returns the new
/// supported set (ascending) and the re-admitted ids in the order admitted.
pub fn readmit(full: &NormalizedChannel, supported: &[usize], removed: &[Removal]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut order: Vec<&Removal> = removed.iter().collect();
    order.sort_by(|a, b| a.metric.total_cmp(&b.metric).then(a.link.cmp(&b.link)));
    let mut current = supported.to_vec();
    let mut readmitted = Vec::new();
    for r in order {
        let mut trial = current.clone();
        trial.push(r.link);
        trial.sort_unstable();
        if feasibility::is_supportable(&full.restrict(&trial)?).feasible {
            log::debug!("re-admitted link {}", r.link + 1);
            current = trial;
            readmitted.push(r.link);
        } else {
            log::debug!("link {} still conflicts; left out", r.link + 1);
        }
    }
    Ok((current, readmitted))
}

/// Per-iteration record of the admission stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationStats {
    pub links: usize,
    pub alpha: f64,
    pub objective: f64,
    pub kkt_residual: f64,
    pub barrier_stages: usize,
    pub newton_steps: usize,
    pub converged: bool,
    #[serde(serialize_with = "one_based")]
    pub removed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageStats {
    pub preprocess_s: f64,
    pub admission_s: f64,
    pub readmit_s: f64,
    pub power_control_s: f64,
    pub total_s: f64,
    /// Interior-point / Newton iterations summed over all solves.
    pub solver_iterations: usize,
    pub fm_iterations: usize,
}

/// Outcome of a deflation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissionResult {
    pub algorithm: String,
    /// Supported link ids, ascending (printed 1-based).
    #[serde(serialize_with = "one_based_vec")]
    pub supported: Vec<usize>,
    /// Transmit powers in watts, aligned with `supported`.
    pub powers_watts: Vec<f64>,
    pub total_power_w: f64,
    pub removal_trace: Vec<Removal>,
    #[serde(serialize_with = "one_based_vec")]
    pub readmitted: Vec<usize>,
    pub certificate: Option<FeasibilityCertificate>,
    pub stats: StageStats,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub iterations: Vec<IterationStats>,
}

impl AdmissionResult {
    /// Powers for every link of the original network (zero for dropped links).
    pub fn full_powers(&self, k: usize) -> Vec<f64> {
        let mut p = vec![0.0; k];
        for (id, w) in self.supported.iter().zip(&self.powers_watts) {
            p[*id] = *w;
        }
        p
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// What a guide hands back to the deflation loop.
pub(crate) struct Guidance {
    pub position: usize,
    pub metric: f64,
    pub stats: IterationStats,
}

/// The shared deflation loop; `guide` picks the link to drop from an
/// unsupportable channel.
pub(crate) fn deflate<F>(net: &LinkNetwork, algorithm: &str, mut guide: F) -> Result<AdmissionResult>
where
    F: FnMut(&NormalizedChannel) -> Result<Guidance>,
{
    let t0 = Instant::now();
    let full = NormalizedChannel::from_network(net)?;
    let mut stats = StageStats::default();

    let (mut current, mut trace) = preprocess(&full)?;
    stats.preprocess_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let mut iterations = Vec::new();
    while let Some(ch) = current.take() {
        if feasibility::is_supportable(&ch).feasible {
            current = Some(ch);
            break;
        }
        let (position, metric) = if ch.len() == 1 {
            (0, ch.c()[0])
        } else {
            let g = guide(&ch)?;
            stats.solver_iterations += g.stats.newton_steps;
            iterations.push(g.stats);
            (g.position, g.metric)
        };
        let id = ch.link_ids()[position];
        trace.push(Removal {
            stage: Stage::Admission,
            link: id,
            metric,
        });
        let rest: Vec<usize> = ch.link_ids().iter().cloned().filter(|&l| l != id).collect();
        current = if rest.is_empty() {
            None
        } else {
            Some(ch.restrict(&rest)?)
        };
    }
    stats.admission_s = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let kept = current.map(|c| c.link_ids().to_vec()).unwrap_or_default();
    let (supported, readmitted) = readmit(&full, &kept, &trace)?;
    stats.readmit_s = t2.elapsed().as_secs_f64();

    let t3 = Instant::now();
    let (powers_watts, certificate) = if supported.is_empty() {
        (Vec::new(), None)
    } else {
        let ch = full.restrict(&supported)?;
        let cert = feasibility::is_supportable(&ch);
        let fm = feasibility::foschini_miljanic(&ch, &vec![0.0; ch.len()], FmOptions::default())?;
        stats.fm_iterations = fm.iterations;
        let q = if fm.converged {
            fm.q
        } else {
            log::warn!("Foschini–Miljanic did not converge; using the certificate's minimal powers");
            cert.qstar.clone().ok_or(Error::NonFinite("final power allocation"))?
        };
        let p = q.iter().zip(ch.budget_w()).map(|(q, b)| q * b).collect();
        (p, Some(cert))
    };
    stats.power_control_s = t3.elapsed().as_secs_f64();
    stats.total_s = t0.elapsed().as_secs_f64();

    Ok(AdmissionResult {
        algorithm: algorithm.to_string(),
        total_power_w: powers_watts.iter().sum(),
        supported,
        powers_watts,
        removal_trace: trace,
        readmitted,
        certificate,
        stats,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NlpdParams {
    pub c1: f64,
    pub c2: f64,
    pub alpha2: Alpha2Mode,
}

impl Default for NlpdParams {
    fn default() -> Self {
        Self {
            c1: 0.2,
            c2: 0.2,
            alpha2: Alpha2Mode::Default,
        }
    }
}

fn lp_guidance(chan: &NormalizedChannel, params: &NlpdParams) -> Result<Guidance> {
    let alpha = alpha_nlpd(chan, params.c1, params.c2, params.alpha2)?;
    let solved: Option<SolverSolution> = match lp::solve_l1_approx(chan, alpha.alpha) {
        Ok(sol) if sol.converged => Some(sol),
        Ok(sol) => {
            log::warn!(
                "ℓ1 solve not certified (residual {:e}); removing by footprint",
                sol.kkt_residual
            );
            None
        }
        Err(e) => {
            log::warn!("ℓ1 solve failed ({e}); removing by footprint");
            None
        }
    };
    let (position, metric, sol_stats) = match &solved {
        Some(sol) => {
            let (pos, m) = removal_index_l1(chan, &sol.q_e);
            (pos, m, (sol.objective, sol.kkt_residual, sol.newton_steps, true))
        }
        None => {
            let metrics = footprint_metrics(chan);
            let pos = argmax_first(&metrics);
            (pos, metrics[pos], (f64::NAN, f64::NAN, 0, false))
        }
    };
    Ok(Guidance {
        position,
        metric,
        stats: IterationStats {
            links: chan.len(),
            alpha: alpha.alpha,
            objective: sol_stats.0,
            kkt_residual: sol_stats.1,
            barrier_stages: 0,
            newton_steps: sol_stats.2,
            converged: sol_stats.3,
            removed: chan.link_ids()[position],
        },
    })
}

/// Runs the ℓ1-guided deflation algorithm.
pub fn run_nlpd(net: &LinkNetwork, params: &NlpdParams) -> Result<AdmissionResult> {
    alpha_nlpd(
        &NormalizedChannel::from_network(net)?,
        params.c1,
        params.c2,
        params.alpha2,
    )?;
    deflate(net, "nlpd", |ch| lp_guidance(ch, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sinr;
    use crate::numerics::DenseMatrix;
    use crate::testutil::{channel_from_abs, symmetric_channel, symmetric_network};

    #[test]
    fn necessary_condition_examples() {
        let one = NormalizedChannel::from_parts(DenseMatrix::identity(1), vec![0.5], vec![0.2]).unwrap();
        let r = necessary_condition(&one);
        assert_eq!(r.mu, vec![1.0]);
        assert!((r.margin - 0.5).abs() < 1e-15 && r.holds);

        let r = necessary_condition(&symmetric_channel(0.4));
        for m in &r.mu {
            assert!((m - 0.6).abs() < 1e-15);
        }
        assert!((r.margin - 0.2).abs() < 1e-12 && r.holds);

        let r = necessary_condition(&symmetric_channel(0.6));
        assert!((r.margin + 0.2).abs() < 1e-12 && !r.holds);
        for ((p, m), mu) in r.mu_plus.iter().zip(&r.mu_minus).zip(&r.mu) {
            assert_eq!(p - m, *mu);
            assert!(p.min(*m) == 0.0);
        }
    }

    #[test]
    fn preprocess_examples() {
        let ch = channel_from_abs(&[&[0.0, 0.6], &[0.3, 0.0]], &[0.5, 0.4], &[1.0, 1.0]);
        let m = footprint_metrics(&ch);
        assert!((m[0] - 1.4).abs() < 1e-12 && (m[1] - 1.3).abs() < 1e-12);

        let (rest, removed) = preprocess(&symmetric_channel(0.6)).unwrap();
        assert_eq!(removed.len(), 1);
        assert_eq!(removed[0].link, 0);
        assert!((removed[0].metric - 1.7).abs() < 1e-12);
        assert_eq!(rest.unwrap().link_ids(), &[1]);

        let (rest, removed) = preprocess(&symmetric_channel(0.4)).unwrap();
        assert!(removed.is_empty());
        assert_eq!(rest.unwrap().len(), 2);

        let lone = NormalizedChannel::from_parts(DenseMatrix::identity(1), vec![1.5], vec![1.0]).unwrap();
        let (rest, removed) = preprocess(&lone).unwrap();
        assert!(rest.is_none());
        assert_eq!(removed.len(), 1);
    }

    #[test]
    fn l1_removal_examples() {
        let ch = channel_from_abs(
            &[&[0.0, 0.5, 0.2], &[0.1, 0.0, 0.2], &[0.4, 0.2, 0.0]],
            &[0.5; 3],
            &[1.0; 3],
        );
        let (pos, metric) = removal_index_l1(&ch, &[0.3, 0.0, 0.1]);
        assert_eq!(pos, 0);
        assert!((metric - 0.17).abs() < 1e-12);

        // degenerate: fallback to largest c
        let ch2 = channel_from_abs(&[&[0.0, 0.5], &[0.1, 0.0]], &[0.3, 0.6], &[1.0; 2]);
        assert_eq!(removal_index_l1(&ch2, &[0.0, 0.0]), (1, 0.6));
        // negative excess behaves like zero
        assert_eq!(removal_index_l1(&ch2, &[-0.2, 0.0]).0, 1);

        // K = 2: both metrics coincide, so link 1 is chosen
        let ch3 = channel_from_abs(&[&[0.0, 0.7], &[0.2, 0.0]], &[0.5, 0.5], &[1.0; 2]);
        assert_eq!(removal_index_l1(&ch3, &[0.3, 0.9]).0, 0);
    }

    #[test]
    fn alpha_examples() {
        let a = alpha_nlpd(&symmetric_channel(1.2), 0.2, 0.2, Alpha2Mode::Default).unwrap();
        assert_eq!(a.branch, AlphaBranch::RhoAtLeastOne);
        assert!((a.alpha1 - 2.5).abs() < 1e-12 && (a.alpha - 0.5).abs() < 1e-12);

        let a = alpha_nlpd(&symmetric_channel(0.4), 0.2, 0.2, Alpha2Mode::Default).unwrap();
        assert_eq!(a.branch, AlphaBranch::RhoBelowOne);
        assert!((a.alpha - 0.5).abs() < 1e-12);
        assert!(a.alpha < a.alpha1);

        let a = alpha_nlpd(&symmetric_channel(0.4), 0.1, 0.2, Alpha2Mode::Value(1.0)).unwrap();
        assert!((a.alpha - 0.2).abs() < 1e-12);

        let net = symmetric_network(0.4);
        let scaled = LinkNetwork::new(
            net.gains().clone(),
            net.noise_w().to_vec(),
            net.target().to_vec(),
            vec![2.0, 2.0],
        )
        .unwrap();
        let a10 = alpha_nlpd(
            &NormalizedChannel::from_network(&scaled).unwrap(),
            0.2,
            0.2,
            Alpha2Mode::Default,
        )
        .unwrap();
        assert!((a10.alpha1 - 0.25).abs() < 1e-12);

        assert!(alpha_nlpd(&symmetric_channel(0.4), 0.3, 0.2, Alpha2Mode::Default).is_err());
        assert!(alpha_nlpd(&symmetric_channel(0.4), 0.2, 1.0, Alpha2Mode::Default).is_err());
    }

    #[test]
    fn alpha2_mode_parsing() {
        assert_eq!("default".parse::<Alpha2Mode>().unwrap(), Alpha2Mode::Default);
        assert_eq!("value:0.5".parse::<Alpha2Mode>().unwrap(), Alpha2Mode::Value(0.5));
        assert!("value:-1".parse::<Alpha2Mode>().is_err());
        assert!("bogus".parse::<Alpha2Mode>().is_err());
    }

    #[test]
    fn readmit_examples() {
        // {0,1} conflict, {0,2} and {1,2} are fine, {0,1,2} is not
        let ch = channel_from_abs(
            &[&[0.0, 0.9, 0.1], &[0.9, 0.0, 0.1], &[0.1, 0.1, 0.0]],
            &[0.5; 3],
            &[1.0; 3],
        );
        assert!(!feasibility::is_supportable(&ch.restrict(&[0, 1]).unwrap()).feasible);
        assert!(feasibility::is_supportable(&ch.restrict(&[0, 2]).unwrap()).feasible);

        let (s, r) = readmit(&ch, &[2], &[]).unwrap();
        assert_eq!((s, r), (vec![2], vec![]));

        let removed = [
            Removal {
                stage: Stage::Pre,
                link: 1,
                metric: 0.7,
            },
            Removal {
                stage: Stage::Admission,
                link: 0,
                metric: 0.5,
            },
        ];
        let (s, r) = readmit(&ch, &[2], &removed).unwrap();
        assert_eq!(s, vec![0, 2]);
        assert_eq!(r, vec![0]);

        let (s, r) = readmit(
            &symmetric_channel(0.6),
            &[1],
            &[Removal {
                stage: Stage::Pre,
                link: 0,
                metric: 1.7,
            }],
        )
        .unwrap();
        assert_eq!((s, r), (vec![1], vec![]));
    }

    #[test]
    fn run_nlpd_examples() {
        let res = run_nlpd(&symmetric_network(0.4), &NlpdParams::default()).unwrap();
        assert_eq!(res.supported, vec![0, 1]);
        for p in &res.powers_watts {
            assert!((p - 0.2 * 5.0 / 6.0).abs() < 1e-9);
        }

        let res = run_nlpd(&symmetric_network(0.6), &NlpdParams::default()).unwrap();
        assert_eq!(res.supported.len(), 1);
        assert!((res.powers_watts[0] - 0.1).abs() < 1e-9);

        let lone = LinkNetwork::new(DenseMatrix::identity(1), vec![0.3], vec![1.0], vec![0.2]).unwrap();
        let res = run_nlpd(&lone, &NlpdParams::default()).unwrap();
        assert!(res.supported.is_empty() && res.powers_watts.is_empty());
        assert!(res.certificate.is_none());
    }

    #[test]
    fn final_powers_meet_targets() {
        let net = symmetric_network(0.4);
        let res = run_nlpd(&net, &NlpdParams::default()).unwrap();
        let s = sinr(&net, &res.full_powers(2));
        for (s, g) in s.iter().zip(net.target()) {
            assert!(*s >= g * (1.0 - 1e-6));
        }
    }

    #[test]
    fn json_ids_are_one_based() {
        let res = run_nlpd(&symmetric_network(0.6), &NlpdParams::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&res.to_json_string().unwrap()).unwrap();
        assert_eq!(v["supported"], serde_json::json!([2]));
        assert_eq!(v["removal_trace"][0]["link"], 1);
        assert_eq!(v["removal_trace"][0]["stage"], "PRE");
    }
}
