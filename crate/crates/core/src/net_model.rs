//! Network configurations and constant channel coefficients.
//!
//! Indices are 0-based in the API and 1-based in every serialized form
//! (JSON configs, CSV headers, CLI output).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seeds::{rng_for, Domain};
use crate::{Error, Result};

/// Which message structure the network carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NetworkKind {
    /// K-user interference channel: transmitter k talks to receiver k only.
    #[serde(rename = "ic")]
    Ic,
    /// Each receiver requests an arbitrary subset of the K messages.
    #[serde(rename = "general")]
    General,
    /// Every transmitter has an independent message for every receiver.
    #[serde(rename = "x")]
    X,
}

/// A validated network description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkConfig {
    kind: NetworkKind,
    tx_antennas: Vec<usize>,
    rx_antennas: Vec<usize>,
    /// Requested transmitters per receiver, sorted, 0-based. Empty for X networks.
    demands: Vec<Vec<usize>>,
}

/// Build and validate a configuration.
///
/// `demands` uses 1-based transmitter indices and must be given exactly when
/// `kind` is [`NetworkKind::General`].
pub fn make_config(
    kind: NetworkKind,
    k: usize,
    j: usize,
    m: Vec<usize>,
    n: Vec<usize>,
    demands: Option<Vec<Vec<usize>>>,
) -> Result<NetworkConfig> {
    if k == 0 || j == 0 {
        return Err(Error::InvalidConfig("K and J must be at least 1".into()));
    }
    if m.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "M has {} entries, expected K={k}",
            m.len()
        )));
    }
    if n.len() != j {
        return Err(Error::DimensionMismatch(format!(
            "N has {} entries, expected J={j}",
            n.len()
        )));
    }
    if m.iter().chain(n.iter()).any(|&a| a == 0) {
        return Err(Error::InvalidConfig("antenna counts must be at least 1".into()));
    }
    let demands = match kind {
        NetworkKind::Ic => {
            if j != k {
                return Err(Error::InvalidConfig(format!("IC requires J=K (got K={k}, J={j})")));
            }
            if demands.is_some() {
                return Err(Error::InvalidConfig("demands are implicit for IC".into()));
            }
            (0..k).map(|i| vec![i]).collect()
        }
        NetworkKind::X => {
            if demands.is_some() {
                return Err(Error::InvalidConfig("demands are implicit for X networks".into()));
            }
            Vec::new()
        }
        NetworkKind::General => {
            let sets = demands
                .ok_or_else(|| Error::InvalidConfig("general-demand network needs demands".into()))?;
            if sets.len() != j {
                return Err(Error::DimensionMismatch(format!(
                    "demands has {} sets, expected J={j}",
                    sets.len()
                )));
            }
            let mut out = Vec::with_capacity(j);
            for (rx, set) in sets.into_iter().enumerate() {
                if set.is_empty() {
                    return Err(Error::InvalidConfig(format!("empty demand set at receiver {}", rx + 1)));
                }
                let mut zero_based = Vec::with_capacity(set.len());
                for tx in set {
                    if tx == 0 || tx > k {
                        return Err(Error::InvalidConfig(format!(
                            "demand index {tx} at receiver {} outside 1..={k}",
                            rx + 1
                        )));
                    }
                    zero_based.push(tx - 1);
                }
                zero_based.sort_unstable();
                let before = zero_based.len();
                zero_based.dedup();
                if zero_based.len() != before {
                    return Err(Error::InvalidConfig(format!(
                        "duplicate demand index at receiver {}",
                        rx + 1
                    )));
                }
                out.push(zero_based);
            }
            out
        }
    };
    Ok(NetworkConfig {
        kind,
        tx_antennas: m,
        rx_antennas: n,
        demands,
    })
}

impl NetworkConfig {
    pub fn kind(&self) -> NetworkKind {
        self.kind
    }

    pub fn num_tx(&self) -> usize {
        self.tx_antennas.len()
    }

    pub fn num_rx(&self) -> usize {
        self.rx_antennas.len()
    }

    pub fn tx_antennas(&self) -> &[usize] {
        &self.tx_antennas
    }

    pub fn rx_antennas(&self) -> &[usize] {
        &self.rx_antennas
    }

    /// Transmitters whose message receiver `j` decodes (0-based).
    ///
    /// For X networks every transmitter has a message for every receiver.
    pub fn wanted(&self, j: usize) -> Vec<usize> {
        match self.kind {
            NetworkKind::X => (0..self.num_tx()).collect(),
            _ => self.demands[j].clone(),
        }
    }

    /// Transmitters that only interfere at receiver `j` (the complement of its demand set).
    pub fn unwanted(&self, j: usize) -> Vec<usize> {
        match self.kind {
            NetworkKind::X => Vec::new(),
            _ => (0..self.num_tx())
                .filter(|k| self.demands[j].binary_search(k).is_err())
                .collect(),
        }
    }

    /// `(M, N)` when every transmitter has M antennas and every receiver has N.
    pub fn uniform_antennas(&self) -> Option<(usize, usize)> {
        let m = self.tx_antennas[0];
        let n = self.rx_antennas[0];
        (self.tx_antennas.iter().all(|&a| a == m) && self.rx_antennas.iter().all(|&a| a == n))
            .then_some((m, n))
    }

    /// Demand sets with 1-based indices, as stored in config files.
    pub fn demands_one_based(&self) -> Option<Vec<Vec<usize>>> {
        (self.kind == NetworkKind::General)
            .then(|| self.demands.iter().map(|s| s.iter().map(|k| k + 1).collect()).collect())
    }
}

/// On-disk JSON form of a configuration plus the experiment seed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub kind: NetworkKind,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(rename = "M")]
    pub m: Vec<usize>,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demands: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub seed: u64,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn to_config(&self) -> Result<NetworkConfig> {
        make_config(
            self.kind,
            self.k,
            self.j,
            self.m.clone(),
            self.n.clone(),
            self.demands.clone(),
        )
    }

    pub fn from_config(config: &NetworkConfig, seed: u64) -> Self {
        ConfigFile {
            kind: config.kind(),
            k: config.num_tx(),
            j: config.num_rx(),
            m: config.tx_antennas().to_vec(),
            n: config.rx_antennas().to_vec(),
            demands: config.demands_one_based(),
            seed,
        }
    }
}

/// All real coefficients `h[j][k][r][t]`, stored flat in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMatrix {
    tx_antennas: Vec<usize>,
    rx_antennas: Vec<usize>,
    /// Start of block (j, k) in `entries`.
    offsets: Vec<usize>,
    entries: Vec<f64>,
}

impl ChannelMatrix {
    /// Build from explicit values in `(j, k, r, t)` lexicographic order.
    pub fn from_entries(config: &NetworkConfig, entries: Vec<f64>) -> Result<Self> {
        let (offsets, total) = block_offsets(config);
        if entries.len() != total {
            return Err(Error::DimensionMismatch(format!(
                "channel has {} entries, expected {total}",
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|h| !h.is_finite() || **h == 0.0) {
            return Err(Error::InvalidArgument(format!(
                "channel coefficients must be finite and nonzero (got {bad})"
            )));
        }
        Ok(ChannelMatrix {
            tx_antennas: config.tx_antennas().to_vec(),
            rx_antennas: config.rx_antennas().to_vec(),
            offsets,
            entries,
        })
    }

    #[inline]
    fn index(&self, j: usize, k: usize, r: usize, t: usize) -> usize {
        let m = self.tx_antennas[k];
        debug_assert!(r < self.rx_antennas[j] && t < m);
        self.offsets[j * self.tx_antennas.len() + k] + r * m + t
    }

    /// Coefficient from antenna `t` of transmitter `k` to antenna `r` of receiver `j`.
    #[inline]
    pub fn h(&self, j: usize, k: usize, r: usize, t: usize) -> f64 {
        self.entries[self.index(j, k, r, t)]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn num_tx(&self) -> usize {
        self.tx_antennas.len()
    }

    pub fn num_rx(&self) -> usize {
        self.rx_antennas.len()
    }

    /// True when the dimensions agree with `config`.
    pub fn matches(&self, config: &NetworkConfig) -> bool {
        self.tx_antennas == config.tx_antennas() && self.rx_antennas == config.rx_antennas()
    }
}

fn block_offsets(config: &NetworkConfig) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(config.num_rx() * config.num_tx());
    let mut acc = 0;
    for &nj in config.rx_antennas() {
        for &mk in config.tx_antennas() {
            offsets.push(acc);
            acc += nj * mk;
        }
    }
    (offsets, acc)
}

/// Draw every coefficient with magnitude uniform on [0.5, 2] and a uniform sign.
///
/// The result is a pure function of `(config, seed)`.
pub fn sample_channel(config: &NetworkConfig, seed: u64) -> ChannelMatrix {
    let (offsets, total) = block_offsets(config);
    let mut rng = rng_for(seed, Domain::Channel);
    let entries = (0..total)
        .map(|_| {
            let mag: f64 = rng.gen_range(0.5..=2.0);
            if rng.gen_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    ChannelMatrix {
        tx_antennas: config.tx_antennas().to_vec(),
        rx_antennas: config.rx_antennas().to_vec(),
        offsets,
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ic(k: usize, m: usize, n: usize) -> NetworkConfig {
        make_config(NetworkKind::Ic, k, k, vec![m; k], vec![n; k], None).unwrap()
    }

    #[test]
    fn ic_demands_are_singletons() {
        let cfg = ic(3, 2, 3);
        for j in 0..3 {
            assert_eq!(cfg.wanted(j), vec![j]);
        }
        assert_eq!(cfg.unwanted(0), vec![1, 2]);
    }

    #[test]
    fn general_demand_config() {
        let cfg = make_config(
            NetworkKind::General,
            3,
            2,
            vec![2, 2, 2],
            vec![2, 2],
            Some(vec![vec![1, 2], vec![3]]),
        )
        .unwrap();
        assert_eq!(cfg.wanted(0), vec![0, 1]);
        assert_eq!(cfg.unwanted(0), vec![2]);
        assert_eq!(cfg.unwanted(1), vec![0, 1]);
    }

    #[test]
    fn ic_requires_square() {
        let err = make_config(NetworkKind::Ic, 2, 3, vec![1, 1], vec![1, 1, 1], None).unwrap_err();
        assert!(err.to_string().contains("IC requires J=K"), "{err}");
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            make_config(NetworkKind::X, 2, 2, vec![1], vec![1, 1], None),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(make_config(NetworkKind::General, 2, 1, vec![1, 1], vec![1], Some(vec![vec![]])).is_err());
        assert!(make_config(NetworkKind::General, 2, 1, vec![1, 1], vec![1], Some(vec![vec![3]])).is_err());
        assert!(make_config(NetworkKind::General, 2, 1, vec![1, 1], vec![1], None).is_err());
        assert!(make_config(NetworkKind::Ic, 2, 2, vec![1, 1], vec![1, 1], Some(vec![vec![1], vec![2]])).is_err());
        assert!(make_config(NetworkKind::X, 2, 2, vec![1, 0], vec![1, 1], None).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = ic(3, 2, 2);
        let a = sample_channel(&cfg, 7);
        let b = sample_channel(&cfg, 7);
        let c = sample_channel(&cfg, 8);
        assert_eq!(a.entries(), b.entries());
        assert!(a.entries().iter().zip(c.entries()).any(|(x, y)| x != y));
        assert_eq!(a.entries().len(), 3 * 3 * 4);
    }

    #[test]
    fn indexing_matches_lexicographic_layout() {
        let cfg = make_config(NetworkKind::X, 2, 2, vec![1, 2], vec![3, 1], None).unwrap();
        let values: Vec<f64> = (1..=12).map(|v| v as f64).collect();
        let ch = ChannelMatrix::from_entries(&cfg, values).unwrap();
        // block (0,0): 3x1, block (0,1): 3x2, block (1,0): 1x1, block (1,1): 1x2
        assert_eq!(ch.h(0, 0, 2, 0), 3.0);
        assert_eq!(ch.h(0, 1, 0, 1), 5.0);
        assert_eq!(ch.h(1, 0, 0, 0), 10.0);
        assert_eq!(ch.h(1, 1, 0, 1), 12.0);
        assert!(ChannelMatrix::from_entries(&cfg, vec![1.0; 11]).is_err());
        let mut zeros = vec![1.0; 9];
        zeros[4] = 0.0;
        assert!(ChannelMatrix::from_entries(&cfg, zeros).is_err());
    }

    #[test]
    fn config_file_rejects_unknown_fields() {
        let text = r#"{"kind":"ic","K":2,"J":2,"M":[1,1],"N":[1,1],"seed":0,"extra":1}"#;
        assert!(ConfigFile::from_json(text).is_err());
    }

    proptest! {
        #[test]
        fn sampled_magnitudes_in_range(seed in any::<u64>(), k in 1usize..4, m in 1usize..3, n in 1usize..3) {
            let cfg = ic(k, m, n);
            let ch = sample_channel(&cfg, seed);
            for h in ch.entries() {
                prop_assert!(h.abs() >= 0.5 && h.abs() <= 2.0);
            }
        }

        #[test]
        fn config_json_round_trip(
            kind in prop_oneof![Just(NetworkKind::Ic), Just(NetworkKind::General), Just(NetworkKind::X)],
            k in 1usize..5,
            j in 1usize..4,
            seed in any::<u64>(),
            ant in proptest::collection::vec(1usize..4, 9),
        ) {
            let j = if kind == NetworkKind::Ic { k } else { j };
            let m = ant[..k].to_vec();
            let n = ant[4..4 + j].to_vec();
            let demands = (kind == NetworkKind::General)
                .then(|| (0..j).map(|rx| vec![rx % k + 1]).collect());
            let cfg = make_config(kind, k, j, m, n, demands).unwrap();
            let file = ConfigFile::from_config(&cfg, seed);
            let back = ConfigFile::from_json(&file.to_json()).unwrap();
            prop_assert_eq!(&back, &file);
            prop_assert_eq!(back.to_config().unwrap(), cfg);
        }
    }
}
