//! Physical network instances and their normalized channel form.
//!
//! A [`LinkNetwork`] holds gains in linear units, noise in watts, SINR targets
//! as linear ratios and budgets in watts. Decibel quantities are converted once
//! at the boundary ([`db_to_linear`], [`dbm_to_watts`]).
//!
//! Every algorithm works on the [`NormalizedChannel`] `(A, c)`: with
//! `q_k = p_k / pbar_k`, link `k` meets its target iff `[A q - c]_k >= 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// A K-link interference network.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkNetwork {
    /// `gains[(k, j)]`: gain from transmitter `j` to receiver `k`.
    gains: DenseMatrix,
    noise_w: Vec<f64>,
    target: Vec<f64>,
    budget_w: Vec<f64>,
}

impl LinkNetwork {
    pub fn new(gains: DenseMatrix, noise_w: Vec<f64>, target: Vec<f64>, budget_w: Vec<f64>) -> Result<Self> {
        let k = gains.rows();
        if k == 0 {
            return Err(Error::InvalidNetwork("network needs at least one link".into()));
        }
        if !gains.is_square() {
            return Err(Error::InvalidNetwork(format!(
                "gain matrix is {}x{}",
                gains.rows(),
                gains.cols()
            )));
        }
        for (name, v) in [("eta", &noise_w), ("gamma", &target), ("pbar", &budget_w)] {
            if v.len() != k {
                return Err(Error::InvalidNetwork(format!(
                    "{name} has length {}, expected {k}",
                    v.len()
                )));
            }
            if let Some(bad) = v.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::InvalidNetwork(format!(
                    "{name}[{}] = {} must be finite and positive",
                    bad + 1,
                    v[bad]
                )));
            }
        }
        for i in 0..k {
            for j in 0..k {
                let g = gains[(i, j)];
                if !(g.is_finite() && g >= 0.0) {
                    return Err(Error::InvalidNetwork(format!(
                        "gain ({}, {}) = {g} must be finite and non-negative",
                        i + 1,
                        j + 1
                    )));
                }
            }
            if gains[(i, i)] <= 0.0 {
                return Err(Error::InvalidNetwork(format!(
                    "direct gain of link {} must be positive",
                    i + 1
                )));
            }
        }
        Ok(Self {
            gains,
            noise_w,
            target,
            budget_w,
        })
    }

    pub fn len(&self) -> usize {
        self.noise_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noise_w.is_empty()
    }

    pub fn gains(&self) -> &DenseMatrix {
        &self.gains
    }

    pub fn noise_w(&self) -> &[f64] {
        &self.noise_w
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn budget_w(&self) -> &[f64] {
        &self.budget_w
    }

    /// The sub-network on `links` (0-based, in the given order).
    pub fn subnetwork(&self, links: &[usize]) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::EmptySelection);
        }
        if let Some(&bad) = links.iter().find(|&&l| l >= self.len()) {
            return Err(Error::UnknownLink(bad));
        }
        let pick = |v: &[f64]| links.iter().map(|&l| v[l]).collect::<Vec<_>>();
        Self::new(
            self.gains.principal(links),
            pick(&self.noise_w),
            pick(&self.target),
            pick(&self.budget_w),
        )
    }

    pub fn to_json_doc(&self) -> NetworkDoc {
        NetworkDoc {
            k: self.len(),
            gains: self.gains.as_slice().to_vec(),
            eta_dbm: None,
            eta_watts: Some(Scalar::Vector(self.noise_w.clone())),
            gamma_db: None,
            gamma_linear: Some(Scalar::Vector(self.target.clone())),
            pbar_watts: Scalar::Vector(self.budget_w.clone()),
        }
    }

    pub fn from_json_doc(doc: &NetworkDoc) -> Result<Self> {
        let k = doc.k;
        let gains = DenseMatrix::from_row_major(k, k, doc.gains.clone())
            .map_err(|e| Error::InvalidNetwork(format!("G: {e}")))?;
        let noise = match (&doc.eta_dbm, &doc.eta_watts) {
            (Some(dbm), None) => dbm.expand(k, "eta_dbm")?.into_iter().map(dbm_to_watts).collect(),
            (None, Some(w)) => w.expand(k, "eta_watts")?,
            _ => {
                return Err(Error::InvalidNetwork(
                    "exactly one of eta_dbm / eta_watts is required".into(),
                ))
            }
        };
        let target = match (&doc.gamma_db, &doc.gamma_linear) {
            (Some(db), None) => db.expand(k, "gamma_db")?.into_iter().map(db_to_linear).collect(),
            (None, Some(lin)) => lin.expand(k, "gamma_linear")?,
            _ => {
                return Err(Error::InvalidNetwork(
                    "exactly one of gamma_db / gamma_linear is required".into(),
                ))
            }
        };
        let budget = doc.pbar_watts.expand(k, "pbar_watts")?;
        Self::new(gains, noise, target, budget)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_json_doc(&serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_json_doc())?)
    }
}

/// A per-link quantity given either once for all links or per link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Uniform(f64),
    Vector(Vec<f64>),
}

impl Scalar {
    fn expand(&self, k: usize, name: &str) -> Result<Vec<f64>> {
        match self {
            Scalar::Uniform(v) => Ok(vec![*v; k]),
            Scalar::Vector(v) if v.len() == k => Ok(v.clone()),
            Scalar::Vector(v) => Err(Error::InvalidNetwork(format!(
                "{name} has {} entries, expected {k}",
                v.len()
            ))),
        }
    }
}

/// JSON document form of a [`LinkNetwork`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDoc {
    #[serde(rename = "K")]
    pub k: usize,
    /// Row-major `K*K` gains, entry `k*K + j` is transmitter `j` to receiver `k`.
    #[serde(rename = "G")]
    pub gains: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_dbm: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_watts: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_db: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_linear: Option<Scalar>,
    pub pbar_watts: Scalar,
}

/// SINR at each receiver for transmit powers `p_watts`.
pub fn sinr(net: &LinkNetwork, p_watts: &[f64]) -> Vec<f64> {
    let g = &net.gains;
    (0..net.len())
        .map(|k| {
            let interference: f64 = (0..net.len()).filter(|&j| j != k).map(|j| g[(k, j)] * p_watts[j]).sum();
            g[(k, k)] * p_watts[k] / (net.noise_w[k] + interference)
        })
        .collect()
}

/// The normalized channel `(A, c)` of a network, or of a subset of its links.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedChannel {
    a: DenseMatrix,
    c: Vec<f64>,
    budget_w: Vec<f64>,
    link_ids: Vec<usize>,
}

impl NormalizedChannel {
    pub fn from_network(net: &LinkNetwork) -> Result<Self> {
        let k = net.len();
        let g = &net.gains;
        let mut a = DenseMatrix::identity(k);
        let mut c = Vec::with_capacity(k);
        for i in 0..k {
            let direct = g[(i, i)] * net.budget_w[i];
            c.push(net.target[i] * net.noise_w[i] / direct);
            for j in 0..k {
                if j != i {
                    a[(i, j)] = -net.target[i] * g[(i, j)] * net.budget_w[j] / direct;
                }
            }
        }
        if c.iter().chain(a.as_slice()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidNetwork(
                "normalization overflowed; gains or budgets are too extreme".into(),
            ));
        }
        if c.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidNetwork("normalized noise underflowed to zero".into()));
        }
        Ok(Self {
            a,
            c,
            budget_w: net.budget_w.clone(),
            link_ids: (0..k).collect(),
        })
    }

    /// Builds a channel directly from `(A, c, pbar)`.
    pub fn from_parts(a: DenseMatrix, c: Vec<f64>, budget_w: Vec<f64>) -> Result<Self> {
        let k = c.len();
        if k == 0 {
            return Err(Error::EmptySelection);
        }
        if a.rows() != k || a.cols() != k || budget_w.len() != k {
            return Err(Error::Dimension("A, c and pbar must agree in size".into()));
        }
        for i in 0..k {
            if a[(i, i)] != 1.0 {
                return Err(Error::InvalidNetwork(format!("a_{0}{0} must be 1", i + 1)));
            }
            if (0..k).any(|j| j != i && a[(i, j)] > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "row {} of A has a positive off-diagonal entry",
                    i + 1
                )));
            }
        }
        if c.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidNetwork("c must be finite and positive".into()));
        }
        if budget_w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidNetwork("pbar must be finite and positive".into()));
        }
        Ok(Self {
            a,
            c,
            budget_w,
            link_ids: (0..k).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn budget_w(&self) -> &[f64] {
        &self.budget_w
    }

    /// Original (0-based) ids of the links in this channel, ascending.
    pub fn link_ids(&self) -> &[usize] {
        &self.link_ids
    }

    /// Absolute value of an entry of `A`.
    pub fn gain(&self, k: usize, j: usize) -> f64 {
        self.a[(k, j)].abs()
    }

    /// `I - A`: the non-negative cross-interference matrix.
    pub fn cross_interference(&self) -> DenseMatrix {
        let k = self.len();
        let mut b = DenseMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    b[(i, j)] = -self.a[(i, j)];
                }
            }
        }
        b
    }

    /// Restricts to the links whose original ids are in `ids`.
    ///
    /// The result keeps ids in ascending order regardless of input order.
    pub fn restrict(&self, ids: &[usize]) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::EmptySelection);
        }
        let mut positions = Vec::with_capacity(ids.len());
        for &id in ids {
            let pos = self.link_ids.binary_search(&id).map_err(|_| Error::UnknownLink(id))?;
            positions.push(pos);
        }
        positions.sort_unstable();
        positions.dedup();
        Ok(Self {
            a: self.a.principal(&positions),
            c: positions.iter().map(|&p| self.c[p]).collect(),
            budget_w: positions.iter().map(|&p| self.budget_w[p]).collect(),
            link_ids: positions.iter().map(|&p| self.link_ids[p]).collect(),
        })
    }

    /// Position of an original link id within this channel.
    pub fn position(&self, id: usize) -> Option<usize> {
        self.link_ids.binary_search(&id).ok()
    }

    /// Total power in watts for normalized powers `q`.
    pub fn watts(&self, q: &[f64]) -> f64 {
        q.iter().zip(&self.budget_w).map(|(q, b)| q * b).sum()
    }
}

/// Excess power vector `c - A q`.
pub fn excess(chan: &NormalizedChannel, q: &[f64]) -> Vec<f64> {
    let aq = chan.a.mul_vec(q);
    chan.c.iter().zip(aq).map(|(c, v)| c - v).collect()
}

/// Solution of one of the sparse approximation problems.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSolution {
    /// Normalized powers.
    pub q: Vec<f64>,
    /// Excess power `c - A q`.
    pub q_e: Vec<f64>,
    /// Budget slack `e - q`.
    pub s: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub barrier_stages: usize,
    pub newton_steps: usize,
    pub converged: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric(g: f64) -> LinkNetwork {
        let gains = DenseMatrix::from_rows(&[vec![1.0, g], vec![g, 1.0]]).unwrap();
        LinkNetwork::new(gains, vec![0.1; 2], vec![1.0; 2], vec![0.2; 2]).unwrap()
    }

    #[test]
    fn single_link_normalization() {
        let net = LinkNetwork::new(DenseMatrix::identity(1), vec![0.1], vec![1.0], vec![0.2]).unwrap();
        let ch = NormalizedChannel::from_network(&net).unwrap();
        assert_eq!(ch.a()[(0, 0)], 1.0);
        assert!((ch.c()[0] - 0.5).abs() < 1e-15);
        assert_eq!(ch.link_ids(), &[0]);
    }

    #[test]
    fn symmetric_pair_normalization() {
        let ch = NormalizedChannel::from_network(&symmetric(0.4)).unwrap();
        assert!((ch.a()[(0, 1)] + 0.4).abs() < 1e-15);
        assert!((ch.a()[(1, 0)] + 0.4).abs() < 1e-15);
        assert_eq!(ch.a()[(1, 1)], 1.0);
        for c in ch.c() {
            assert!((c - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn decibel_conversion() {
        assert!((db_to_linear(2.0) - 1.584_893_192_461_113_5).abs() < 1e-12);
        assert!((dbm_to_watts(-90.0) - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn sinr_examples() {
        let net = LinkNetwork::new(DenseMatrix::identity(1), vec![0.1], vec![1.0], vec![0.2]).unwrap();
        assert!((sinr(&net, &[0.2])[0] - 2.0).abs() < 1e-15);
        assert_eq!(sinr(&symmetric(0.4), &[0.0, 0.0]), vec![0.0, 0.0]);
        // q = 5/6 on both links sits exactly at target
        let p = 5.0 / 6.0 * 0.2;
        for s in sinr(&symmetric(0.4), &[p, p]) {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn excess_examples() {
        let ch = NormalizedChannel::from_network(&symmetric(0.4)).unwrap();
        assert_eq!(excess(&ch, &[0.0, 0.0]), ch.c().to_vec());
        let qe = excess(&ch, &[0.5, 0.5]);
        for v in qe {
            assert!((v - 0.2).abs() < 1e-15);
        }
        let single = NormalizedChannel::from_parts(DenseMatrix::identity(1), vec![0.5], vec![0.2]).unwrap();
        assert_eq!(excess(&single, &[0.5]), vec![0.0]);
    }

    #[test]
    fn restrict_examples() {
        let ch = NormalizedChannel::from_network(&symmetric(0.4)).unwrap();
        assert_eq!(ch.restrict(&[0, 1]).unwrap(), ch);
        let one = ch.restrict(&[1]).unwrap();
        assert_eq!(one.a()[(0, 0)], 1.0);
        assert_eq!(one.c(), &[ch.c()[1]]);
        assert_eq!(one.link_ids(), &[1]);
        assert!(matches!(ch.restrict(&[]), Err(Error::EmptySelection)));
        assert!(matches!(ch.restrict(&[5]), Err(Error::UnknownLink(5))));

        let a = DenseMatrix::from_rows(&[vec![1.0, -0.1, -0.2], vec![-0.3, 1.0, -0.4], vec![-0.5, -0.6, 1.0]]).unwrap();
        let three = NormalizedChannel::from_parts(a, vec![0.1, 0.2, 0.3], vec![1.0, 2.0, 3.0]).unwrap();
        let sub = three.restrict(&[2, 0]).unwrap();
        assert_eq!(sub.link_ids(), &[0, 2]);
        assert_eq!(sub.a().as_slice(), &[1.0, -0.2, -0.5, 1.0]);
        assert_eq!(sub.c(), &[0.1, 0.3]);
        assert_eq!(sub.budget_w(), &[1.0, 3.0]);
    }

    #[test]
    fn invalid_networks_rejected() {
        let g = DenseMatrix::from_rows(&[vec![0.0, 0.1], vec![0.1, 1.0]]).unwrap();
        assert!(LinkNetwork::new(g, vec![0.1; 2], vec![1.0; 2], vec![0.2; 2]).is_err());
        assert!(LinkNetwork::new(DenseMatrix::identity(2), vec![0.1], vec![1.0; 2], vec![0.2; 2]).is_err());
        assert!(LinkNetwork::new(DenseMatrix::identity(1), vec![0.1], vec![-1.0], vec![0.2]).is_err());
        assert!(LinkNetwork::new(DenseMatrix::zeros(0, 0), vec![], vec![], vec![]).is_err());
    }

    #[test]
    fn extreme_gains_overflow_is_reported() {
        let g = DenseMatrix::from_rows(&[vec![1e-300, 1e300], vec![1e300, 1.0]]).unwrap();
        let net = LinkNetwork::new(g, vec![1.0; 2], vec![1.0; 2], vec![1e10; 2]).unwrap();
        assert!(matches!(
            NormalizedChannel::from_network(&net),
            Err(Error::InvalidNetwork(_))
        ));
    }

    #[test]
    fn json_accepts_decibel_and_scalar_forms() {
        let doc = r#"{"K": 2, "G": [1.0, 0.4, 0.4, 1.0], "eta_dbm": -90,
                      "gamma_db": [2, 2], "pbar_watts": 0.2}"#;
        let net = LinkNetwork::from_json_str(doc).unwrap();
        assert!((net.noise_w()[1] - 1e-12).abs() < 1e-24);
        assert!((net.target()[0] - db_to_linear(2.0)).abs() < 1e-15);
        assert_eq!(net.budget_w(), &[0.2, 0.2]);

        let back = LinkNetwork::from_json_str(&net.to_json_string().unwrap()).unwrap();
        assert_eq!(back, net);

        let both = r#"{"K": 1, "G": [1.0], "eta_dbm": -90, "eta_watts": 1e-12,
                       "gamma_linear": 1, "pbar_watts": 1}"#;
        assert!(LinkNetwork::from_json_str(both).is_err());
        let short = r#"{"K": 2, "G": [1.0, 0.0, 0.0], "eta_watts": 1,
                        "gamma_linear": 1, "pbar_watts": 1}"#;
        assert!(LinkNetwork::from_json_str(short).is_err());
    }
}
