//! Transmit signals, per-receiver generator matrices and alignment checks.
//!
//! A [`Scheme`] fixes the direction sets of every stream for one channel
//! realisation. From it, [`encode`] produces transmit values and
//! [`build_receive_model`] assembles the matrix `A = W·[useful | interference]`
//! whose integer combinations are the noiseless received points.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use crate::directions::{
    build_directions, families, Deltas, DirectionSet, Family, Generator, GeneratorIndex,
    SetKind,
};
use crate::net_model::{ChannelMatrix, NetworkConfig, NetworkKind};
use crate::regions::Rational;
use crate::seeds::{rng_for, Domain};
use crate::{Error, Result};

/// Default bound on the column count of one receive model.
pub const DEFAULT_COLUMN_CAP: usize = 1_000_000;

/// Integer stream counts for a rational DoF point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamAllocation {
    /// Least common multiplier making every `ρ·d/M` an integer.
    pub rho: u64,
    /// Streams per message: indexed by transmitter for IC and general
    /// networks, by `rx * K + tx` for X networks.
    pub dbar: Vec<usize>,
    pub dof_point: Vec<Rational>,
}

/// Choose the least `ρ` with `ρ·d/M` integral for every message.
///
/// `point` holds one entry per transmitter (IC, general) or `J·K` entries in
/// `rx * K + tx` order (X).
pub fn allocate_streams(config: &NetworkConfig, point: &[Rational]) -> Result<StreamAllocation> {
    let k = config.num_tx();
    let expected = match config.kind() {
        NetworkKind::X => config.num_rx() * k,
        _ => k,
    };
    if point.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "DoF point has {} entries, expected {expected}",
            point.len()
        )));
    }
    let per_antenna: Vec<Rational> = point
        .iter()
        .enumerate()
        .map(|(idx, d)| {
            if *d < Rational::zero() {
                return Err(Error::InvalidArgument(format!("negative DoF entry {d}")));
            }
            Ok(d / Rational::from_integer(config.tx_antennas()[idx % k].into()))
        })
        .collect::<Result<_>>()?;
    let rho = per_antenna
        .iter()
        .fold(num_bigint::BigInt::from(1), |acc, r| acc.lcm(r.denom()));
    let rho_r = Rational::from_integer(rho.clone());
    let dbar = per_antenna
        .iter()
        .map(|r| {
            (r * &rho_r)
                .to_integer()
                .to_usize()
                .ok_or_else(|| Error::Overflow(format!("stream count {} does not fit", r * &rho_r)))
        })
        .collect::<Result<_>>()?;
    Ok(StreamAllocation {
        rho: rho
            .to_u64()
            .ok_or_else(|| Error::Overflow(format!("rho = {rho} does not fit in 64 bits")))?,
        dbar,
        dof_point: point.to_vec(),
    })
}

/// A message of the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Message {
    /// The message of transmitter `k` (IC and general networks).
    Tx(usize),
    /// The message from `tx` to `rx` (X networks).
    Pair { rx: usize, tx: usize },
}

impl Message {
    pub fn tx(self) -> usize {
        match self {
            Message::Tx(k) => k,
            Message::Pair { tx, .. } => tx,
        }
    }

    /// 1-based label used in serialized output.
    pub fn label(self) -> String {
        match self {
            Message::Tx(k) => format!("{}", k + 1),
            Message::Pair { rx, tx } => format!("{}<-{}", rx + 1, tx + 1),
        }
    }
}

/// Shape and position of one message inside a [`SymbolVector`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageLayout {
    pub message: Message,
    family: usize,
    pub streams: usize,
    pub directions: usize,
    pub antennas: usize,
    pub offset: usize,
}

impl MessageLayout {
    pub fn len(&self) -> usize {
        self.streams * self.directions * self.antennas
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of symbol `(stream l, direction i, antenna t)`.
    pub fn index(&self, l: usize, i: usize, t: usize) -> usize {
        self.offset + (l * self.directions + i) * self.antennas + t
    }
}

struct FamilyScheme {
    generators: GeneratorIndex,
    base: Vec<DirectionSet>,
    extended: Vec<DirectionSet>,
    base_values: Vec<Vec<f64>>,
}

/// Direction sets and their values for every stream of every message on one channel.
pub struct Scheme {
    config: NetworkConfig,
    channel: ChannelMatrix,
    n: u32,
    allocation: StreamAllocation,
    families: Vec<FamilyScheme>,
    deltas: Deltas,
    messages: Vec<MessageLayout>,
}

impl Scheme {
    /// Build the scheme. δ constants are drawn from `seed`; `cap` bounds `D + D'`.
    ///
    /// Streams are told apart by δ whenever a family carries more than one
    /// stream, and always in X networks, where the sets aligned at different
    /// receivers would otherwise share the constant monomial.
    pub fn new(
        config: &NetworkConfig,
        channel: &ChannelMatrix,
        n: u32,
        allocation: &StreamAllocation,
        seed: u64,
        cap: u64,
    ) -> Result<Self> {
        if !channel.matches(config) {
            return Err(Error::DimensionMismatch("channel does not match configuration".into()));
        }
        let k = config.num_tx();
        let expected = match config.kind() {
            NetworkKind::X => config.num_rx() * k,
            _ => k,
        };
        if allocation.dbar.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "allocation has {} messages, expected {expected}",
                allocation.dbar.len()
            )));
        }
        let fams = families(config);
        let mut tags = Vec::new();
        let mut family_schemes = Vec::with_capacity(fams.len());
        for family in fams {
            let streams = match family {
                Family::Shared => allocation.dbar.iter().copied().max().unwrap_or(0),
                Family::Target(rx) => allocation.dbar[rx * k..(rx + 1) * k].iter().copied().max().unwrap_or(0),
            };
            let with_deltas = config.kind() == NetworkKind::X || streams > 1;
            let base = build_directions(config, n, family, streams, with_deltas, SetKind::Base, cap)?;
            let extended = build_directions(config, n, family, streams, with_deltas, SetKind::Extended, cap)?;
            tags.extend(base.iter().filter_map(|s| s.delta_tag()));
            family_schemes.push(FamilyScheme {
                generators: GeneratorIndex::new(config, family)?,
                base,
                extended,
                base_values: Vec::new(),
            });
        }
        let deltas = Deltas::sample(seed, tags);
        for fs in &mut family_schemes {
            fs.base_values = fs
                .base
                .iter()
                .map(|set| set.evaluate(channel, &fs.generators, &deltas))
                .collect::<Result<_>>()?;
        }

        let mut messages = Vec::new();
        let mut offset = 0;
        for (idx, &streams) in allocation.dbar.iter().enumerate() {
            let (message, family) = match config.kind() {
                NetworkKind::X => (Message::Pair { rx: idx / k, tx: idx % k }, idx / k),
                _ => (Message::Tx(idx), 0),
            };
            let layout = MessageLayout {
                message,
                family,
                streams,
                directions: family_schemes[family].base.first().map_or(0, DirectionSet::len),
                antennas: config.tx_antennas()[message.tx()],
                offset,
            };
            offset += layout.len();
            messages.push(layout);
        }

        Ok(Scheme {
            config: config.clone(),
            channel: channel.clone(),
            n,
            allocation: allocation.clone(),
            families: family_schemes,
            deltas,
            messages,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn channel(&self) -> &ChannelMatrix {
        &self.channel
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn allocation(&self) -> &StreamAllocation {
        &self.allocation
    }

    pub fn deltas(&self) -> &Deltas {
        &self.deltas
    }

    pub fn messages(&self) -> &[MessageLayout] {
        &self.messages
    }

    pub fn symbol_len(&self) -> usize {
        self.messages.iter().map(MessageLayout::len).sum()
    }

    /// Messages decoded at receiver `rx`.
    pub fn wanted(&self, rx: usize) -> Vec<&MessageLayout> {
        self.messages.iter().filter(|m| self.is_wanted(m.message, rx)).collect()
    }

    /// Messages that interfere at receiver `rx`.
    pub fn interfering(&self, rx: usize) -> Vec<&MessageLayout> {
        self.messages.iter().filter(|m| !self.is_wanted(m.message, rx)).collect()
    }

    fn is_wanted(&self, message: Message, rx: usize) -> bool {
        match message {
            Message::Tx(k) => self.config.wanted(rx).contains(&k),
            Message::Pair { rx: target, .. } => target == rx,
        }
    }

    /// Base direction set of stream `l` of a message.
    pub fn base_set(&self, layout: &MessageLayout, l: usize) -> &DirectionSet {
        &self.families[layout.family].base[l]
    }

    /// Extended direction set that absorbs stream `l` of a message.
    pub fn extended_set(&self, layout: &MessageLayout, l: usize) -> &DirectionSet {
        &self.families[layout.family].extended[l]
    }

    pub fn generators(&self, layout: &MessageLayout) -> &GeneratorIndex {
        &self.families[layout.family].generators
    }

    /// Evaluated base directions of stream `l` of a message, δ factors included.
    pub fn base_values(&self, layout: &MessageLayout, l: usize) -> &[f64] {
        &self.families[layout.family].base_values[l]
    }

    /// Power normaliser: the largest per-antenna sum of squared direction values.
    pub fn nu2(&self) -> f64 {
        let mut per_tx = vec![0.0f64; self.config.num_tx()];
        for m in &self.messages {
            for l in 0..m.streams {
                per_tx[m.message.tx()] += self.base_values(m, l).iter().map(|v| v * v).sum::<f64>();
            }
        }
        per_tx.into_iter().fold(0.0, f64::max)
    }
}

/// Integer symbols of every message, with the scaling `λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolVector {
    values: Vec<i64>,
    q: u64,
    lambda: f64,
}

impl SymbolVector {
    pub fn new(scheme: &Scheme, values: Vec<i64>, q: u64, lambda: f64) -> Result<Self> {
        if values.len() != scheme.symbol_len() {
            return Err(Error::DimensionMismatch(format!(
                "{} symbols given, scheme carries {}",
                values.len(),
                scheme.symbol_len()
            )));
        }
        if let Some(v) = values.iter().find(|v| v.unsigned_abs() > q) {
            return Err(Error::InvalidArgument(format!("symbol {v} outside [-{q}, {q}]")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        Ok(SymbolVector { values, q, lambda })
    }

    /// Uniform symbols in `[-Q, Q]`.
    pub fn random(scheme: &Scheme, q: u64, lambda: f64, rng: &mut impl Rng) -> Result<Self> {
        let qi = q as i64;
        let values = (0..scheme.symbol_len()).map(|_| rng.gen_range(-qi..=qi)).collect();
        Self::new(scheme, values, q, lambda)
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Transmit value of every antenna: `x[k][t] = λ Σ q·T` summed over the
/// messages of transmitter `k`.
pub fn encode(scheme: &Scheme, symbols: &SymbolVector) -> Result<Vec<Vec<f64>>> {
    if symbols.values.len() != scheme.symbol_len() {
        return Err(Error::DimensionMismatch(format!(
            "{} symbols given, scheme carries {}",
            symbols.values.len(),
            scheme.symbol_len()
        )));
    }
    let mut x: Vec<Vec<f64>> = scheme.config.tx_antennas().iter().map(|&m| vec![0.0; m]).collect();
    for m in &scheme.messages {
        let xk = &mut x[m.message.tx()];
        for l in 0..m.streams {
            let values = scheme.base_values(m, l);
            for (i, &v) in values.iter().enumerate() {
                for (t, xt) in xk.iter_mut().enumerate() {
                    *xt += v * symbols.values[m.index(l, i, t)] as f64;
                }
            }
        }
    }
    for xk in &mut x {
        for xt in xk.iter_mut() {
            *xt *= symbols.lambda;
        }
    }
    Ok(x)
}

/// Noiseless received signal before weighting: `y[r] = Σ_k Σ_t h[rx][k][r][t]·x[k][t]`.
pub fn propagate(channel: &ChannelMatrix, rx_antennas: usize, rx: usize, x: &[Vec<f64>]) -> Vec<f64> {
    (0..rx_antennas)
        .map(|r| {
            x.iter()
                .enumerate()
                .map(|(k, xk)| xk.iter().enumerate().map(|(t, v)| channel.h(rx, k, r, t) * v).sum::<f64>())
                .sum()
        })
        .collect()
}

/// One monomial that failed the membership check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub message: Message,
    pub stream: usize,
    pub generator: Generator,
    pub exponents: Vec<u16>,
}

/// Outcome of [`verify_alignment`] at one receiver.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignmentReport {
    pub rx: usize,
    /// Interfering monomials looked up.
    pub checked: u64,
    pub violations: Vec<Violation>,
    /// Distinct extended directions hit by interference, one entry per aligned group.
    pub occupied: Vec<usize>,
    /// Size `D'` of each aligned group.
    pub group_sizes: Vec<usize>,
}

impl AlignmentReport {
    pub fn is_aligned(&self) -> bool {
        self.violations.is_empty() && self.occupied.iter().zip(&self.group_sizes).all(|(o, s)| o <= s)
    }
}

/// Aligned interference group at a receiver: one extended set, identified by
/// the direction family and the stream index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct GroupKey {
    family: usize,
    stream: usize,
}

fn interference_groups(scheme: &Scheme, rx: usize) -> Vec<GroupKey> {
    let set: BTreeSet<GroupKey> = scheme
        .interfering(rx)
        .into_iter()
        .flat_map(|m| (0..m.streams).map(move |l| GroupKey { family: m.family, stream: l }))
        .collect();
    set.into_iter().collect()
}

/// Walk every interfering (symbol, receive antenna) pair and locate the
/// extended direction it lands on. `visit` gets the group position, the
/// member index (or `None` for a failed lookup) and the symbol context.
fn walk_interference(
    scheme: &Scheme,
    rx: usize,
    groups: &[GroupKey],
    mut visit: impl FnMut(usize, Option<usize>, &MessageLayout, usize, usize, Generator, &[u16]),
) {
    let n_rx = scheme.config.rx_antennas()[rx];
    for m in scheme.interfering(rx) {
        let gens = scheme.generators(m);
        for l in 0..m.streams {
            let group = groups
                .binary_search(&GroupKey { family: m.family, stream: l })
                .expect("group collected from the same messages");
            let base = scheme.base_set(m, l);
            let ext = scheme.extended_set(m, l);
            for r in 0..n_rx {
                for t in 0..m.antennas {
                    let g = Generator { rx, tx: m.message.tx(), rx_ant: r, tx_ant: t };
                    let gpos = gens.position(&g);
                    for (i, d) in base.directions().iter().enumerate() {
                        let mut e = d.exponents.clone();
                        let member = gpos.and_then(|p| {
                            e[p] += 1;
                            let idx = ext.position(&e)?;
                            let target = &ext.directions()[idx];
                            // the δ power of h·T must equal that of the member
                            (target.delta_tag == d.delta_tag && target.delta_exponent == d.delta_exponent)
                                .then_some(idx)
                        });
                        visit(group, member, m, l, i * m.antennas + t, g, &e);
                    }
                }
            }
        }
    }
}

/// Certify that every interfering monomial at `rx` is a member of its extended set.
pub fn verify_alignment(scheme: &Scheme, rx: usize) -> Result<AlignmentReport> {
    if rx >= scheme.config.num_rx() {
        return Err(Error::InvalidArgument(format!("receiver {} outside 1..={}", rx + 1, scheme.config.num_rx())));
    }
    let groups = interference_groups(scheme, rx);
    let group_sizes: Vec<usize> = groups
        .iter()
        .map(|gk| scheme.families[gk.family].extended[gk.stream].len())
        .collect();
    let mut hit: Vec<Vec<bool>> = group_sizes.iter().map(|&s| vec![false; s]).collect();
    let mut checked = 0u64;
    let mut violations = Vec::new();
    walk_interference(scheme, rx, &groups, |group, member, m, l, _, g, e| {
        checked += 1;
        match member {
            Some(idx) => hit[group][idx] = true,
            None => violations.push(Violation {
                message: m.message,
                stream: l,
                generator: g,
                exponents: e.to_vec(),
            }),
        }
    });
    Ok(AlignmentReport {
        rx,
        checked,
        violations,
        occupied: hit.iter().map(|h| h.iter().filter(|&&b| b).count()).collect(),
        group_sizes,
    })
}

/// How the receiver mixes its antennas before decoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    /// Unit diagonal, off-diagonal entries uniform on [1/2, 1], drawn from the seed.
    Random(u64),
    Identity,
}

/// Contiguous column range of one wanted message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnSpan {
    pub message: Message,
    pub start: usize,
    pub len: usize,
}

/// Generator matrix of one receiver.
#[derive(Clone, Debug)]
pub struct ReceiveModel {
    rx: usize,
    a: DMatrix<f64>,
    w: DMatrix<f64>,
    useful_spans: Vec<ColumnSpan>,
    useful_columns: usize,
    interference_columns: usize,
    groups: usize,
    /// Symbol feeding each useful column.
    useful_symbols: Vec<usize>,
    /// (symbol, column) pairs accumulated into interference integers.
    interference_map: Vec<(usize, usize)>,
    multiplicity: Vec<u32>,
    weight_redraws: u32,
}

fn draw_weights(rows: usize, seed: u64, rx: usize) -> (DMatrix<f64>, u32) {
    let mut rng = rng_for(seed, Domain::Weights(rx));
    let mut redraws = 0;
    loop {
        let w: DMatrix<f64> = DMatrix::from_fn(rows, rows, |a, b| if a == b { 1.0 } else { rng.gen_range(0.5..=1.0) });
        if w.determinant().abs() > 1e-9 {
            return (w, redraws);
        }
        redraws += 1;
    }
}

/// Assemble `A = W·[useful | interference]` for receiver `rx`.
///
/// Useful columns follow each wanted message, then transmit antenna, stream
/// and direction. Interference columns follow receive antenna, aligned group
/// and extended direction, giving one block per antenna.
pub fn build_receive_model(scheme: &Scheme, rx: usize, weighting: Weighting, column_cap: usize) -> Result<ReceiveModel> {
    let config = &scheme.config;
    if rx >= config.num_rx() {
        return Err(Error::InvalidArgument(format!("receiver {} outside 1..={}", rx + 1, config.num_rx())));
    }
    let rows = config.rx_antennas()[rx];
    let wanted = scheme.wanted(rx);
    let groups = interference_groups(scheme, rx);
    let useful_columns: usize = wanted.iter().map(|m| m.len()).sum();
    let group_widths: Vec<usize> = groups
        .iter()
        .map(|gk| scheme.families[gk.family].extended[gk.stream].len())
        .collect();
    let per_antenna: usize = group_widths.iter().sum();
    let interference_columns = rows * per_antenna;
    let total = useful_columns + interference_columns;
    if total > column_cap {
        return Err(Error::cap(format!("receive model columns at receiver {}", rx + 1), total, column_cap));
    }

    let mut b = DMatrix::<f64>::zeros(rows, total);
    let mut useful_spans = Vec::new();
    let mut useful_symbols = Vec::with_capacity(useful_columns);
    let mut col = 0;
    for m in &wanted {
        let start = col;
        for t in 0..m.antennas {
            for l in 0..m.streams {
                for (i, v) in scheme.base_values(m, l).iter().enumerate() {
                    for r in 0..rows {
                        b[(r, col)] = scheme.channel.h(rx, m.message.tx(), r, t) * v;
                    }
                    useful_symbols.push(m.index(l, i, t));
                    col += 1;
                }
            }
        }
        useful_spans.push(ColumnSpan { message: m.message, start, len: col - start });
    }

    let mut group_offsets = Vec::with_capacity(groups.len());
    let mut acc = 0;
    for w in &group_widths {
        group_offsets.push(acc);
        acc += w;
    }
    for (gi, gk) in groups.iter().enumerate() {
        let fs = &scheme.families[gk.family];
        let values = fs.extended[gk.stream].evaluate(&scheme.channel, &fs.generators, &scheme.deltas)?;
        for r in 0..rows {
            let start = useful_columns + r * per_antenna + group_offsets[gi];
            for (idx, v) in values.iter().enumerate() {
                b[(r, start + idx)] = *v;
            }
        }
    }

    let mut interference_map = Vec::new();
    let mut failure = None;
    walk_interference(scheme, rx, &groups, |group, member, m, l, slot, g, e| {
        let r = g.rx_ant;
        match member {
            Some(idx) => {
                let (i, t) = (slot / m.antennas, slot % m.antennas);
                let column = useful_columns + r * per_antenna + group_offsets[group] + idx;
                interference_map.push((m.index(l, i, t), column));
            }
            None if failure.is_none() => {
                failure = Some(format!(
                    "message {} stream {} generator (j={}, k={}, r={}, t={}) exponents {:?}",
                    m.message.label(),
                    l + 1,
                    g.rx + 1,
                    g.tx + 1,
                    g.rx_ant + 1,
                    g.tx_ant + 1,
                    e
                ))
            }
            None => {}
        }
    });
    if let Some(msg) = failure {
        return Err(Error::AlignmentViolation(msg));
    }
    let mut multiplicity = vec![0u32; total];
    for c in multiplicity.iter_mut().take(useful_columns) {
        *c = 1;
    }
    for &(_, column) in &interference_map {
        multiplicity[column] += 1;
    }

    let (w, weight_redraws) = match weighting {
        Weighting::Random(seed) => draw_weights(rows, seed, rx),
        Weighting::Identity => (DMatrix::identity(rows, rows), 0),
    };
    let a = &w * b;
    Ok(ReceiveModel {
        rx,
        a,
        w,
        useful_spans,
        useful_columns,
        interference_columns,
        groups: groups.len(),
        useful_symbols,
        interference_map,
        multiplicity,
        weight_redraws,
    })
}

impl ReceiveModel {
    /// Build a model directly from a matrix with every column useful and unit
    /// multiplicity. Used for standalone lattice experiments.
    pub fn from_matrix(a: DMatrix<f64>) -> Self {
        let rows = a.nrows();
        Self::with_weights(a, DMatrix::identity(rows, rows))
    }

    /// Like [`ReceiveModel::from_matrix`], with `a` already weighted by `w`.
    pub fn with_weights(a: DMatrix<f64>, w: DMatrix<f64>) -> Self {
        assert_eq!(w.nrows(), a.nrows(), "weighting matrix must match the row count");
        let cols = a.ncols();
        ReceiveModel {
            rx: 0,
            a,
            w,
            useful_spans: Vec::new(),
            useful_columns: cols,
            interference_columns: 0,
            groups: 0,
            useful_symbols: (0..cols).collect(),
            interference_map: Vec::new(),
            multiplicity: vec![1; cols],
            weight_redraws: 0,
        }
    }

    pub fn rx(&self) -> usize {
        self.rx
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn noise_cov(&self) -> DMatrix<f64> {
        &self.w * self.w.transpose()
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    /// Total column count `G`.
    pub fn g(&self) -> usize {
        self.a.ncols()
    }

    pub fn useful_columns(&self) -> usize {
        self.useful_columns
    }

    pub fn interference_columns(&self) -> usize {
        self.interference_columns
    }

    pub fn useful_spans(&self) -> &[ColumnSpan] {
        &self.useful_spans
    }

    /// Number of aligned interference groups.
    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn weight_redraws(&self) -> u32 {
        self.weight_redraws
    }

    /// How many symbols of magnitude at most `Q` add into each column.
    pub fn multiplicity(&self) -> &[u32] {
        &self.multiplicity
    }

    /// Largest possible magnitude of each integer coordinate for symbols in `[-Q, Q]`.
    pub fn radii(&self, q: u64) -> Vec<u64> {
        self.multiplicity.iter().map(|&c| c as u64 * q).collect()
    }

    /// The joint integer vector `u` with `λ·A·u` equal to the weighted noiseless signal.
    pub fn integer_vector(&self, symbols: &SymbolVector) -> Vec<i64> {
        let mut u = vec![0i64; self.g()];
        for (c, &s) in self.useful_symbols.iter().enumerate() {
            u[c] = symbols.values()[s];
        }
        for &(s, c) in &self.interference_map {
            u[c] += symbols.values()[s];
        }
        u
    }

    /// `λ·A·u`.
    pub fn assemble(&self, u: &[i64], lambda: f64) -> Vec<f64> {
        let uv = DVector::from_iterator(u.len(), u.iter().map(|&v| v as f64));
        (&self.a * uv * lambda).iter().copied().collect()
    }

    pub fn apply_weights(&self, y: &[f64]) -> Vec<f64> {
        (&self.w * DVector::from_column_slice(y)).iter().copied().collect()
    }

    /// Row-major CSV dump with a commented header carrying `j`, `G` and the column spans.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# j={},rows={},G={}", self.rx + 1, self.rows(), self.g());
        let _ = writeln!(
            out,
            "# useful={},interference={},groups={}",
            self.useful_columns, self.interference_columns, self.groups
        );
        for span in &self.useful_spans {
            let _ = writeln!(out, "# message={},start={},len={}", span.message.label(), span.start, span.len);
        }
        for r in 0..self.rows() {
            let row: Vec<String> = (0..self.g()).map(|c| format!("{:e}", self.a[(r, c)])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_model::{make_config, sample_channel};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn r(a: i64, b: i64) -> Rational {
        Rational::new(a.into(), b.into())
    }

    fn ic(k: usize, m: usize, n: usize) -> NetworkConfig {
        make_config(NetworkKind::Ic, k, k, vec![m; k], vec![n; k], None).unwrap()
    }

    fn scheme(cfg: &NetworkConfig, n: u32, dbar: Vec<usize>, seed: u64) -> Scheme {
        let alloc = StreamAllocation { rho: 1, dbar, dof_point: Vec::new() };
        let ch = sample_channel(cfg, seed);
        Scheme::new(cfg, &ch, n, &alloc, seed, 100_000).unwrap()
    }

    #[test]
    fn allocation_examples() {
        let a = allocate_streams(&ic(2, 1, 1), &[r(1, 2), r(1, 2)]).unwrap();
        assert_eq!((a.rho, a.dbar), (2, vec![1, 1]));
        let a = allocate_streams(&ic(3, 2, 3), &[r(6, 5), r(6, 5), r(6, 5)]).unwrap();
        assert_eq!((a.rho, a.dbar), (5, vec![3, 3, 3]));
        let x = make_config(NetworkKind::X, 2, 2, vec![1, 1], vec![1, 1], None).unwrap();
        let a = allocate_streams(&x, &vec![r(1, 3); 4]).unwrap();
        assert_eq!((a.rho, a.dbar), (3, vec![1; 4]));
        let a = allocate_streams(&ic(2, 1, 1), &[r(0, 1), r(0, 1)]).unwrap();
        assert_eq!((a.rho, a.dbar), (1, vec![0, 0]));
        assert!(allocate_streams(&ic(2, 1, 1), &[r(-1, 2), r(1, 2)]).is_err());
        assert!(allocate_streams(&ic(2, 1, 1), &[r(1, 2)]).is_err());
    }

    #[test]
    fn encode_single_direction() {
        let cfg = ic(2, 1, 1);
        let s = scheme(&cfg, 1, vec![1, 1], 0);
        let sym = SymbolVector::new(&s, vec![3, 0], 3, 0.5).unwrap();
        let x = encode(&s, &sym).unwrap();
        assert_eq!(x[0], vec![1.5]);
        assert_eq!(x[1], vec![0.0]);
    }

    #[test]
    fn encode_inner_product() {
        // K=2, N=1, n=2 has directions {1, h21, h12, h12·h21}; choose h12=1.25, h21=1.
        let cfg = ic(2, 1, 1);
        let ch = ChannelMatrix::from_entries(&cfg, vec![1.0, 1.25, 1.0, 1.0]).unwrap();
        let alloc = StreamAllocation { rho: 1, dbar: vec![1, 0], dof_point: Vec::new() };
        let s = Scheme::new(&cfg, &ch, 2, &alloc, 0, 1000).unwrap();
        // direction order is (0,0), (0,1), (1,0), (1,1); (1,0) is h12
        let sym = SymbolVector::new(&s, vec![1, 0, -1, 0], 1, 2.0).unwrap();
        let x = encode(&s, &sym).unwrap();
        assert!((x[0][0] - 2.0 * (1.0 - 1.25)).abs() < 1e-15);
    }

    #[test]
    fn encode_matches_naive_sum() {
        let cfg = make_config(NetworkKind::X, 2, 2, vec![2, 1], vec![1, 2], None).unwrap();
        let s = scheme(&cfg, 1, vec![1, 2, 1, 1], 4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sym = SymbolVector::random(&s, 2, 0.3, &mut rng).unwrap();
        let x = encode(&s, &sym).unwrap();
        for k in 0..2 {
            for t in 0..cfg.tx_antennas()[k] {
                let mut naive = 0.0;
                for m in s.messages().iter().filter(|m| m.message.tx() == k) {
                    for l in 0..m.streams {
                        for (i, v) in s.base_values(m, l).iter().enumerate() {
                            naive += 0.3 * v * sym.values()[m.index(l, i, t)] as f64;
                        }
                    }
                }
                assert!((x[k][t] - naive).abs() <= 1e-12 * naive.abs().max(1.0));
            }
        }
    }

    #[test]
    fn symbol_range_enforced() {
        let cfg = ic(2, 1, 1);
        let s = scheme(&cfg, 1, vec![1, 1], 0);
        assert!(SymbolVector::new(&s, vec![2, 0], 1, 1.0).is_err());
        assert!(SymbolVector::new(&s, vec![1], 1, 1.0).is_err());
    }

    #[test]
    fn alignment_single_generator() {
        let s = scheme(&ic(2, 1, 1), 1, vec![1, 1], 0);
        let rep = verify_alignment(&s, 0).unwrap();
        assert_eq!(rep.checked, 1);
        assert!(rep.is_aligned());
        assert_eq!(rep.occupied, vec![1]);
        assert_eq!(rep.group_sizes, vec![4]);
    }

    #[test]
    fn alignment_k3_n2() {
        let s = scheme(&ic(3, 1, 1), 2, vec![1, 1, 1], 1);
        for rx in 0..3 {
            let rep = verify_alignment(&s, rx).unwrap();
            assert_eq!(rep.checked, 2 * 64);
            assert!(rep.violations.is_empty());
            assert_eq!(rep.group_sizes, vec![729]);
        }
    }

    #[test]
    fn alignment_x_network() {
        let cfg = make_config(NetworkKind::X, 2, 2, vec![1, 1], vec![1, 1], None).unwrap();
        let s = scheme(&cfg, 2, vec![1; 4], 2);
        let rep = verify_alignment(&s, 1).unwrap();
        assert!(rep.is_aligned());
        // both transmitters' streams for receiver 1, each with D = 4 directions
        assert_eq!(rep.checked, 8);
        assert!(rep.occupied[0] <= rep.group_sizes[0]);
    }

    #[test]
    fn model_shapes() {
        let s = scheme(&ic(2, 1, 1), 1, vec![1, 1], 0);
        let m = build_receive_model(&s, 0, Weighting::Random(0), DEFAULT_COLUMN_CAP).unwrap();
        assert_eq!((m.rows(), m.useful_columns(), m.interference_columns()), (1, 1, 4));

        let s = scheme(&ic(2, 1, 1), 2, vec![1, 1], 0);
        let m = build_receive_model(&s, 0, Weighting::Random(0), DEFAULT_COLUMN_CAP).unwrap();
        assert_eq!(m.g(), 4 + 9);

        let s = scheme(&ic(2, 2, 2), 1, vec![1, 1], 0);
        let m = build_receive_model(&s, 0, Weighting::Identity, DEFAULT_COLUMN_CAP).unwrap();
        assert_eq!((m.rows(), m.g()), (2, 2 + 2 * 256));
        // off-diagonal antenna blocks are zero without weighting
        for c in 0..m.interference_columns() {
            let col = m.useful_columns() + c;
            let block = c / 256;
            for r in 0..2 {
                assert_eq!(m.a()[(r, col)] == 0.0, r != block, "row {r} col {col}");
            }
        }
        let mw = build_receive_model(&s, 0, Weighting::Random(3), DEFAULT_COLUMN_CAP).unwrap();
        assert!(mw.a().iter().all(|v| *v != 0.0));
    }

    #[test]
    fn general_and_x_g_formula() {
        let cfg = make_config(
            NetworkKind::General,
            3,
            2,
            vec![2, 2, 2],
            vec![2, 2],
            Some(vec![vec![1, 2], vec![3]]),
        )
        .unwrap();
        let s = scheme(&cfg, 1, vec![1, 2, 1], 5);
        let d_ext = 2usize.pow(12);
        let m0 = build_receive_model(&s, 0, Weighting::Random(5), DEFAULT_COLUMN_CAP).unwrap();
        // useful: M·D·(1+2) with D=1; interference: N·D'·max d̄ over {3}
        assert_eq!(m0.g(), 2 * 3 + 2 * d_ext);
        let m1 = build_receive_model(&s, 1, Weighting::Random(5), DEFAULT_COLUMN_CAP).unwrap();
        assert_eq!(m1.g(), 2 + 2 * d_ext * 2);

        let x = make_config(NetworkKind::X, 2, 2, vec![1, 1], vec![1, 1], None).unwrap();
        let s = scheme(&x, 2, vec![1, 1, 1, 2], 5);
        let m = build_receive_model(&s, 0, Weighting::Random(5), DEFAULT_COLUMN_CAP).unwrap();
        assert_eq!(m.g(), 4 * 2 + 9 * 2);
    }

    #[test]
    fn column_cap_refuses() {
        let s = scheme(&ic(2, 2, 2), 1, vec![1, 1], 0);
        let err = build_receive_model(&s, 0, Weighting::Identity, 100).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
    }

    #[test]
    fn weights_have_unit_diagonal() {
        let s = scheme(&ic(2, 1, 3), 1, vec![1, 0], 0);
        let m = build_receive_model(&s, 0, Weighting::Random(1), DEFAULT_COLUMN_CAP).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let v = m.w()[(a, b)];
                if a == b {
                    assert_eq!(v, 1.0);
                } else {
                    assert!((0.5..=1.0).contains(&v));
                }
            }
        }
        assert!(m.w().determinant().abs() > 1e-9);
    }

    #[test]
    fn multiplicities() {
        let s = scheme(&ic(3, 1, 1), 2, vec![1, 1, 1], 1);
        let m = build_receive_model(&s, 0, Weighting::Random(1), DEFAULT_COLUMN_CAP).unwrap();
        let interference = &m.multiplicity()[m.useful_columns()..];
        // the constant member is never reached
        assert_eq!(interference[0], 0);
        assert!(interference.iter().all(|&c| c <= 2));
        assert_eq!(interference.iter().map(|&c| c as usize).sum::<usize>(), 2 * 64);
    }

    fn reconstruct(cfg: &NetworkConfig, n: u32, dbar: Vec<usize>, seed: u64, q: u64) -> f64 {
        let s = scheme(cfg, n, dbar, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lambda = 0.37;
        let sym = SymbolVector::random(&s, q, lambda, &mut rng).unwrap();
        let x = encode(&s, &sym).unwrap();
        let mut worst: f64 = 0.0;
        for rx in 0..cfg.num_rx() {
            let m = build_receive_model(&s, rx, Weighting::Random(seed), DEFAULT_COLUMN_CAP).unwrap();
            let physical = m.apply_weights(&propagate(s.channel(), cfg.rx_antennas()[rx], rx, &x));
            let assembled = m.assemble(&m.integer_vector(&sym), lambda);
            let u = m.integer_vector(&sym);
            let scale: f64 = (0..m.rows())
                .map(|r| (0..m.g()).map(|c| (lambda * m.a()[(r, c)] * u[c] as f64).abs()).sum::<f64>())
                .fold(1e-300, f64::max);
            for (p, a) in physical.iter().zip(&assembled) {
                worst = worst.max((p - a).abs() / scale);
            }
        }
        worst
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn exact_reconstruction_ic(seed in 0u64..1000, q in 1u64..4, n in 1u32..3) {
            prop_assert!(reconstruct(&ic(3, 1, 1), n, vec![1, 1, 1], seed, q) < 1e-10);
        }

        #[test]
        fn exact_reconstruction_multistream(seed in 0u64..1000) {
            prop_assert!(reconstruct(&ic(2, 2, 2), 1, vec![2, 1], seed, 2) < 1e-10);
        }

        #[test]
        fn exact_reconstruction_x(seed in 0u64..1000) {
            let x = make_config(NetworkKind::X, 2, 2, vec![1, 1], vec![1, 1], None).unwrap();
            prop_assert!(reconstruct(&x, 2, vec![1, 1, 1, 1], seed, 1) < 1e-10);
        }

        #[test]
        fn bookkeeping(seed in 0u64..1000) {
            let s = scheme(&ic(3, 1, 1), 2, vec![1, 1, 1], seed);
            for rx in 0..3 {
                let m = build_receive_model(&s, rx, Weighting::Random(seed), DEFAULT_COLUMN_CAP).unwrap();
                prop_assert_eq!(m.useful_columns() + m.interference_columns(), m.g());
                prop_assert!(m.interference_columns() <= m.rows() * 729 * m.groups());
            }
        }
    }

    #[test]
    fn csv_header() {
        let s = scheme(&ic(2, 1, 1), 1, vec![1, 1], 0);
        let m = build_receive_model(&s, 1, Weighting::Random(0), DEFAULT_COLUMN_CAP).unwrap();
        let csv = m.to_csv();
        assert!(csv.starts_with("# j=2,rows=1,G=5\n"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1);
    }
}
