//! Monomial transmit directions.
//!
//! A direction is a monomial in the channel coefficients that act as
//! generators, optionally multiplied by a power of a per-stream constant δ.
//! Directions are stored as exact integer exponent vectors; floating-point
//! values only appear in [`eval_direction`].
//!
//! Generator order is lexicographic on `(j, k, r, t)` (receiver, transmitter,
//! receive antenna, transmit antenna) and direction order is lexicographic on
//! the exponent vector, so the exponent vector of a direction is also its
//! mixed-radix rank inside its set.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::Serialize;

use crate::net_model::{ChannelMatrix, NetworkConfig, NetworkKind};
use crate::seeds::{rng_for, Domain};
use crate::{Error, Result};

/// Default bound on `D + D'` for one stream's direction sets.
pub const DEFAULT_DIRECTION_CAP: u64 = 100_000;

/// One channel coefficient `h[rx][tx][rx_ant][tx_ant]` used as a monomial generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Generator {
    pub rx: usize,
    pub tx: usize,
    pub rx_ant: usize,
    pub tx_ant: usize,
}

/// Which direction family a generator list belongs to.
///
/// Interference channels and general-demand networks share one family; X
/// networks build one family per target receiver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Shared,
    Target(usize),
}

/// Ordered generator coordinates of one family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorIndex {
    family: Family,
    coords: Vec<Generator>,
}

impl GeneratorIndex {
    pub fn new(config: &NetworkConfig, family: Family) -> Result<Self> {
        let k_count = config.num_tx();
        let j_count = config.num_rx();
        let mut coords = Vec::new();
        let push_link = |coords: &mut Vec<Generator>, rx: usize, tx: usize| {
            for rx_ant in 0..config.rx_antennas()[rx] {
                for tx_ant in 0..config.tx_antennas()[tx] {
                    coords.push(Generator { rx, tx, rx_ant, tx_ant });
                }
            }
        };
        match (config.kind(), family) {
            (NetworkKind::Ic | NetworkKind::General, Family::Shared) => {
                // IC is the general-demand network with W_j = {j}.
                for rx in 0..j_count {
                    for tx in config.unwanted(rx) {
                        push_link(&mut coords, rx, tx);
                    }
                }
            }
            (NetworkKind::X, Family::Target(target)) => {
                if target >= j_count {
                    return Err(Error::InvalidArgument(format!(
                        "target receiver {} outside 1..={j_count}",
                        target + 1
                    )));
                }
                for rx in (0..j_count).filter(|&rx| rx != target) {
                    for tx in 0..k_count {
                        push_link(&mut coords, rx, tx);
                    }
                }
            }
            (kind, family) => {
                return Err(Error::InvalidArgument(format!(
                    "family {family:?} does not apply to {kind:?} networks"
                )))
            }
        }
        Ok(GeneratorIndex { family, coords })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[Generator] {
        &self.coords
    }

    pub fn position(&self, g: &Generator) -> Option<usize> {
        self.coords.binary_search(g).ok()
    }
}

/// Families a configuration uses: one shared family, or one per receiver for X networks.
pub fn families(config: &NetworkConfig) -> Vec<Family> {
    match config.kind() {
        NetworkKind::X => (0..config.num_rx()).map(Family::Target).collect(),
        _ => vec![Family::Shared],
    }
}

/// Identifies the δ constant multiplying a stream's directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeltaTag {
    /// Stream `l` of an interference channel or general-demand network.
    Stream(usize),
    /// Stream `l` of the messages intended for receiver `rx` in an X network.
    Pair { rx: usize, stream: usize },
}

impl DeltaTag {
    fn id(self) -> u64 {
        match self {
            DeltaTag::Stream(l) => l as u64,
            DeltaTag::Pair { rx, stream } => ((rx as u64 + 1) << 32) | stream as u64,
        }
    }

    fn one_based(self) -> Vec<usize> {
        match self {
            DeltaTag::Stream(l) => vec![l + 1],
            DeltaTag::Pair { rx, stream } => vec![rx + 1, stream + 1],
        }
    }
}

/// Sampled δ constants, uniform on [1/2, 1].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Deltas {
    values: BTreeMap<DeltaTag, f64>,
}

impl Deltas {
    /// Draw one δ per tag. Each tag has its own random stream, so the value of a
    /// tag does not depend on which other tags are requested.
    pub fn sample(seed: u64, tags: impl IntoIterator<Item = DeltaTag>) -> Self {
        let values = tags
            .into_iter()
            .map(|tag| {
                let mut rng = rng_for(seed, Domain::Deltas(tag.id()));
                (tag, rng.gen_range(0.5..=1.0))
            })
            .collect();
        Deltas { values }
    }

    pub fn from_values(values: impl IntoIterator<Item = (DeltaTag, f64)>) -> Self {
        Deltas {
            values: values.into_iter().collect(),
        }
    }

    pub fn get(&self, tag: DeltaTag) -> Option<f64> {
        self.values.get(&tag).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (DeltaTag, f64)> + '_ {
        self.values.iter().map(|(t, v)| (*t, *v))
    }
}

/// Base sets hold exponents `0..=n-1`, extended sets `0..=n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SetKind {
    Base,
    Extended,
}

/// One monomial direction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Direction {
    pub exponents: Vec<u16>,
    pub delta_tag: Option<DeltaTag>,
    /// Total power of δ: the sum of the exponents, plus one for the standalone
    /// stream factor carried by transmitted (base) directions.
    pub delta_exponent: u32,
}

impl Direction {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().map(|&a| a as u32).sum()
    }
}

/// All directions of one stream, base or extended.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet {
    directions: Vec<Direction>,
    n: u32,
    kind: SetKind,
    num_generators: usize,
    delta_tag: Option<DeltaTag>,
}

impl DirectionSet {
    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    pub fn delta_tag(&self) -> Option<DeltaTag> {
        self.delta_tag
    }

    pub fn num_generators(&self) -> usize {
        self.num_generators
    }

    fn radix(&self) -> u64 {
        match self.kind {
            SetKind::Base => self.n as u64,
            SetKind::Extended => self.n as u64 + 1,
        }
    }

    /// Index of the direction with exactly these exponents, if it is a member.
    ///
    /// The candidate slot comes from the mixed-radix rank and is then compared
    /// against the stored record, so a hit certifies monomial identity.
    pub fn position(&self, exponents: &[u16]) -> Option<usize> {
        if exponents.len() != self.num_generators {
            return None;
        }
        let radix = self.radix();
        let mut rank: u64 = 0;
        for &a in exponents {
            if a as u64 >= radix {
                return None;
            }
            rank = rank * radix + a as u64;
        }
        let idx = rank as usize;
        (self.directions.get(idx)?.exponents == exponents).then_some(idx)
    }

    /// Evaluate every direction on a channel.
    pub fn evaluate(&self, channel: &ChannelMatrix, generators: &GeneratorIndex, deltas: &Deltas) -> Result<Vec<f64>> {
        self.directions
            .iter()
            .map(|d| eval_direction(d, channel, generators, deltas))
            .collect()
    }

    /// JSON list of `{exponents, delta_tag, delta_exponent}` records with 1-based tags.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Record<'a> {
            exponents: &'a [u16],
            delta_tag: Option<Vec<usize>>,
            delta_exponent: u32,
        }
        let records: Vec<Record> = self
            .directions
            .iter()
            .map(|d| Record {
                exponents: &d.exponents,
                delta_tag: d.delta_tag.map(DeltaTag::one_based),
                delta_exponent: d.delta_exponent,
            })
            .collect();
        serde_json::to_value(records).expect("direction records serialize")
    }
}

/// Generator count and exact set sizes for one family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectionCounts {
    pub family: Family,
    /// Number of generator coordinates `E`.
    pub generators: usize,
    /// `D = n^E`.
    pub base: BigUint,
    /// `D' = (n+1)^E`.
    pub extended: BigUint,
}

impl DirectionCounts {
    /// `D + D'` as a machine integer when it fits under `cap`.
    pub fn check_cap(&self, cap: u64) -> Result<(usize, usize)> {
        let total = &self.base + &self.extended;
        if total > BigUint::from(cap) {
            return Err(Error::cap(
                "direction sets D + D'",
                format!("D={}, D'={} (D+D'={total})", self.base, self.extended),
                cap,
            ));
        }
        Ok((
            self.base.to_usize().expect("below cap"),
            self.extended.to_usize().expect("below cap"),
        ))
    }
}

/// Exact direction counts for every family of `config`.
pub fn direction_counts(config: &NetworkConfig, n: u32) -> Result<Vec<DirectionCounts>> {
    if n == 0 {
        return Err(Error::InvalidArgument("degree parameter n must be at least 1".into()));
    }
    families(config)
        .into_iter()
        .map(|family| {
            let e = GeneratorIndex::new(config, family)?.len();
            Ok(DirectionCounts {
                family,
                generators: e,
                base: pow_big(n as u64, e),
                extended: pow_big(n as u64 + 1, e),
            })
        })
        .collect()
}

fn pow_big(base: u64, exp: usize) -> BigUint {
    let mut acc = BigUint::one();
    let b = BigUint::from(base);
    for _ in 0..exp {
        acc *= &b;
    }
    acc
}

/// Build the direction set of every stream of one family.
///
/// Returns one set per stream index `0..streams`. With `with_deltas`, stream
/// `l` is tagged with its δ: base directions carry `δ^(Σα + 1)` and extended
/// directions `δ^(Σα)`, which is exactly the δ power of a base direction after
/// one more generator factor. The cap applies to `D + D'` of one stream.
pub fn build_directions(
    config: &NetworkConfig,
    n: u32,
    family: Family,
    streams: usize,
    with_deltas: bool,
    kind: SetKind,
    cap: u64,
) -> Result<Vec<DirectionSet>> {
    let counts = direction_counts(config, n)?
        .into_iter()
        .find(|c| c.family == family)
        .ok_or_else(|| Error::InvalidArgument(format!("family {family:?} not used by this network")))?;
    counts.check_cap(cap)?;
    let e = counts.generators;
    let max_exp = match kind {
        SetKind::Base => n - 1,
        SetKind::Extended => n,
    } as u16;

    let exponent_vectors = enumerate_box(e, max_exp);
    let standalone = u32::from(kind == SetKind::Base);
    Ok((0..streams)
        .map(|l| {
            let delta_tag = with_deltas.then_some(match family {
                Family::Shared => DeltaTag::Stream(l),
                Family::Target(rx) => DeltaTag::Pair { rx, stream: l },
            });
            let directions = exponent_vectors
                .iter()
                .map(|alpha| {
                    let degree: u32 = alpha.iter().map(|&a| a as u32).sum();
                    Direction {
                        exponents: alpha.clone(),
                        delta_tag,
                        delta_exponent: if delta_tag.is_some() { degree + standalone } else { 0 },
                    }
                })
                .collect();
            DirectionSet {
                directions,
                n,
                kind,
                num_generators: e,
                delta_tag,
            }
        })
        .collect())
}

/// All vectors in `{0..=max}^len`, lexicographic order.
fn enumerate_box(len: usize, max: u16) -> Vec<Vec<u16>> {
    let mut out = Vec::new();
    let mut cur = vec![0u16; len];
    loop {
        out.push(cur.clone());
        // odometer, last coordinate fastest
        let mut pos = len;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if cur[pos] < max {
                cur[pos] += 1;
                for c in cur[pos + 1..].iter_mut() {
                    *c = 0;
                }
                break;
            }
        }
    }
}

/// Evaluate `∏ h^α · δ^(delta_exponent)` on a channel.
pub fn eval_direction(
    direction: &Direction,
    channel: &ChannelMatrix,
    generators: &GeneratorIndex,
    deltas: &Deltas,
) -> Result<f64> {
    if direction.exponents.len() != generators.len() {
        return Err(Error::DimensionMismatch(format!(
            "direction has {} exponents, generator index has {}",
            direction.exponents.len(),
            generators.len()
        )));
    }
    let mut value = 1.0f64;
    for (g, &a) in generators.coords().iter().zip(&direction.exponents) {
        if a > 0 {
            value *= channel.h(g.rx, g.tx, g.rx_ant, g.tx_ant).powi(a as i32);
        }
    }
    if let Some(tag) = direction.delta_tag {
        let delta = deltas
            .get(tag)
            .ok_or_else(|| Error::InvalidArgument(format!("no δ sampled for {tag:?}")))?;
        value *= delta.powi(direction.delta_exponent as i32);
    }
    if !value.is_finite() || value == 0.0 {
        return Err(Error::Overflow(format!(
            "direction of total degree {} (δ power {}) leaves double range",
            direction.degree(),
            direction.delta_exponent
        )));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_model::{make_config, sample_channel};
    use std::collections::HashSet;

    fn ic(k: usize, m: usize, n: usize) -> NetworkConfig {
        make_config(NetworkKind::Ic, k, k, vec![m; k], vec![n; k], None).unwrap()
    }

    fn counts(cfg: &NetworkConfig, n: u32) -> (usize, u64, u64) {
        let c = &direction_counts(cfg, n).unwrap()[0];
        (c.generators, c.base.to_u64().unwrap(), c.extended.to_u64().unwrap())
    }

    #[test]
    fn ic_counts() {
        assert_eq!(counts(&ic(2, 1, 1), 2), (2, 4, 9));
        assert_eq!(counts(&ic(3, 1, 1), 2), (6, 64, 729));
        assert_eq!(counts(&ic(2, 2, 2), 1), (8, 1, 256));
    }

    #[test]
    fn general_and_x_generator_counts() {
        let g = make_config(
            NetworkKind::General,
            3,
            2,
            vec![2, 2, 2],
            vec![2, 2],
            Some(vec![vec![1, 2], vec![3]]),
        )
        .unwrap();
        // receiver 1 hears transmitter 3, receiver 2 hears 1 and 2: 3 links of 4 coefficients
        assert_eq!(counts(&g, 1).0, 12);
        let x = make_config(NetworkKind::X, 3, 2, vec![1, 2, 1], vec![2, 3], None).unwrap();
        let c = direction_counts(&x, 2).unwrap();
        assert_eq!(c.len(), 2);
        // target 1 uses links into receiver 2 (3 antennas): 3 * (1+2+1) = 12
        assert_eq!(c[0].generators, 12);
        assert_eq!(c[1].generators, 2 * 4);
    }

    #[test]
    fn big_counts_do_not_overflow() {
        let c = &direction_counts(&ic(4, 3, 3), 5).unwrap()[0];
        assert_eq!(c.generators, 4 * 3 * 9);
        assert_eq!(c.base, pow_big(5, 108));
        assert!(matches!(c.check_cap(DEFAULT_DIRECTION_CAP), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn generator_order_is_lexicographic() {
        let idx = GeneratorIndex::new(&ic(3, 1, 2), Family::Shared).unwrap();
        assert!(idx.coords().windows(2).all(|w| w[0] < w[1]));
        assert!(idx.coords().iter().all(|g| g.rx != g.tx));
        assert!(GeneratorIndex::new(&ic(3, 1, 2), Family::Target(0)).is_err());
    }

    #[test]
    fn n_one_gives_the_unit_direction() {
        let sets = build_directions(&ic(2, 1, 1), 1, Family::Shared, 1, false, SetKind::Base, 1000).unwrap();
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].directions().len(), 1);
        assert_eq!(sets[0].directions()[0].exponents, vec![0, 0]);
        let ch = sample_channel(&ic(2, 1, 1), 3);
        let gens = GeneratorIndex::new(&ic(2, 1, 1), Family::Shared).unwrap();
        let v = eval_direction(&sets[0].directions()[0], &ch, &gens, &Deltas::default()).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn n_two_enumerates_binary_vectors() {
        let sets = build_directions(&ic(2, 1, 1), 2, Family::Shared, 1, false, SetKind::Base, 1000).unwrap();
        let exps: Vec<_> = sets[0].directions().iter().map(|d| d.exponents.clone()).collect();
        assert_eq!(exps, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn k3_n3_directions_pairwise_distinct() {
        let sets = build_directions(&ic(3, 1, 1), 3, Family::Shared, 1, false, SetKind::Base, 100_000).unwrap();
        let set = &sets[0];
        assert_eq!(set.len(), 729);
        let distinct: HashSet<_> = set.directions().iter().map(|d| d.exponents.clone()).collect();
        assert_eq!(distinct.len(), 729);
        for (i, d) in set.directions().iter().enumerate() {
            assert_eq!(set.position(&d.exponents), Some(i));
        }
    }

    #[test]
    fn evaluated_values_are_distinct() {
        let cfg = ic(3, 1, 1);
        let ch = sample_channel(&cfg, 11);
        let gens = GeneratorIndex::new(&cfg, Family::Shared).unwrap();
        let set = &build_directions(&cfg, 2, Family::Shared, 1, false, SetKind::Extended, 100_000).unwrap()[0];
        let mut vals = set.evaluate(&ch, &gens, &Deltas::default()).unwrap();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in vals.windows(2) {
            let scale = w[0].abs().max(w[1].abs());
            assert!((w[1] - w[0]).abs() > 1e-12 * scale, "{} ~ {}", w[0], w[1]);
        }
    }

    #[test]
    fn single_factor_evaluation() {
        let cfg = ic(2, 1, 1);
        let ch = ChannelMatrix::from_entries(&cfg, vec![1.0, 1.7, -0.6, 1.0]).unwrap();
        let gens = GeneratorIndex::new(&cfg, Family::Shared).unwrap();
        assert_eq!(gens.coords()[0], Generator { rx: 0, tx: 1, rx_ant: 0, tx_ant: 0 });
        let d = Direction {
            exponents: vec![1, 0],
            delta_tag: None,
            delta_exponent: 0,
        };
        assert_eq!(eval_direction(&d, &ch, &gens, &Deltas::default()).unwrap(), 1.7);
    }

    #[test]
    fn evaluation_matches_naive_loop() {
        let cfg = ic(2, 1, 1);
        let gens = GeneratorIndex::new(&cfg, Family::Shared).unwrap();
        for seed in 0..20 {
            let ch = sample_channel(&cfg, seed);
            let deltas = Deltas::sample(seed, [DeltaTag::Stream(0)]);
            let set = &build_directions(&cfg, 2, Family::Shared, 1, true, SetKind::Base, 1000).unwrap()[0];
            for d in set.directions() {
                // independent path: repeated multiplication over explicit (j,k) pairs
                let mut naive = 1.0;
                for _ in 0..d.exponents[0] {
                    naive *= ch.entries()[1]; // h[1][2]
                }
                for _ in 0..d.exponents[1] {
                    naive *= ch.entries()[2]; // h[2][1]
                }
                for _ in 0..d.delta_exponent {
                    naive *= deltas.get(DeltaTag::Stream(0)).unwrap();
                }
                let v = eval_direction(d, &ch, &gens, &deltas).unwrap();
                assert!((v - naive).abs() <= 1e-14 * naive.abs());
            }
        }
    }

    #[test]
    fn delta_exponents() {
        let cfg = ic(2, 1, 1);
        let base = &build_directions(&cfg, 2, Family::Shared, 2, true, SetKind::Base, 1000).unwrap();
        assert_eq!(base.len(), 2);
        assert_eq!(base[1].delta_tag(), Some(DeltaTag::Stream(1)));
        for d in base[1].directions() {
            assert_eq!(d.delta_exponent, d.degree() + 1);
        }
        let ext = &build_directions(&cfg, 2, Family::Shared, 1, true, SetKind::Extended, 1000).unwrap()[0];
        for d in ext.directions() {
            assert_eq!(d.delta_exponent, d.degree());
        }
    }

    #[test]
    fn deltas_in_range_and_stable() {
        let tags = [DeltaTag::Stream(0), DeltaTag::Stream(1), DeltaTag::Pair { rx: 1, stream: 0 }];
        let a = Deltas::sample(5, tags);
        let b = Deltas::sample(5, [DeltaTag::Stream(1)]);
        assert_eq!(a.get(DeltaTag::Stream(1)), b.get(DeltaTag::Stream(1)));
        for (_, v) in a.iter() {
            assert!((0.5..=1.0).contains(&v));
        }
        assert_ne!(a.get(DeltaTag::Stream(0)), a.get(DeltaTag::Stream(1)));
    }

    #[test]
    fn cap_refusal_names_counts() {
        let err = build_directions(&ic(3, 1, 1), 4, Family::Shared, 1, false, SetKind::Base, 1000).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("D=4096") && msg.contains("D'=15625") && msg.contains("1000"), "{msg}");
    }

    #[test]
    fn closure_under_generator_increment() {
        for (cfg, n) in [(ic(3, 1, 1), 2u32), (ic(2, 2, 2), 1), (ic(2, 1, 1), 3)] {
            let base = &build_directions(&cfg, n, Family::Shared, 1, false, SetKind::Base, 100_000).unwrap()[0];
            let ext = &build_directions(&cfg, n, Family::Shared, 1, false, SetKind::Extended, 100_000).unwrap()[0];
            assert_eq!(ext.len(), (n as usize + 1).pow(base.num_generators() as u32));
            for d in base.directions() {
                for g in 0..base.num_generators() {
                    let mut e = d.exponents.clone();
                    e[g] += 1;
                    assert!(ext.position(&e).is_some());
                }
            }
        }
    }

    #[test]
    fn json_export() {
        let sets = build_directions(&ic(2, 1, 1), 2, Family::Shared, 1, true, SetKind::Base, 1000).unwrap();
        let v = sets[0].to_json();
        assert_eq!(v[3]["exponents"], serde_json::json!([1, 1]));
        assert_eq!(v[3]["delta_tag"], serde_json::json!([1]));
        assert_eq!(v[3]["delta_exponent"], 3);
    }
}
