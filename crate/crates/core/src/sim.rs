//! Power sweeps of the full link and empirical DoF slopes.

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::align::{
    build_receive_model, encode, propagate, ReceiveModel, Scheme, SymbolVector, Weighting, DEFAULT_COLUMN_CAP,
};
use crate::directions::DEFAULT_DIRECTION_CAP;
use crate::lattice::{
    colored_noise, min_distance_in, union_bound, whitened_matrix, CodeParams, Decoder, ErrorEstimate,
    SearchBox, DEFAULT_CODEBOOK_CAP, DEFAULT_ENUM_CAP,
};
use crate::net_model::{sample_channel, NetworkConfig};
use crate::regions::{DofPoint, Rational};
use crate::seeds::{rng_for, Domain};
use crate::{allocate_streams, Error, Result};

/// Block-error threshold below which a sweep row counts as reliable.
pub const RELIABILITY_THRESHOLD: f64 = 0.1;

const TRIAL_CHUNK: u64 = 256;

/// Which integer box the receivers search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoxKind {
    /// Every coordinate in `[-Q, Q]`.
    Uniform,
    /// Each coordinate bounded by the largest integer the scheme can produce there.
    Structural,
}

/// A complete sweep description; the report is a pure function of it.
#[derive(Clone, Debug)]
pub struct ExperimentPlan {
    pub config: NetworkConfig,
    pub seed: u64,
    pub n: u32,
    pub dof_point: DofPoint,
    /// Strictly increasing normalised powers `P0`.
    pub p0_grid: Vec<f64>,
    pub epsilon: f64,
    pub delta_slack: Option<f64>,
    pub trials: u64,
    pub search: BoxKind,
    pub direction_cap: u64,
    pub codebook_cap: u64,
    pub enum_cap: u64,
}

impl ExperimentPlan {
    /// Plan with default caps, `P0 ∈ {10², …, 10⁸}` and ε = 1/2.
    pub fn new(config: NetworkConfig, n: u32, dof_point: DofPoint, seed: u64) -> Self {
        ExperimentPlan {
            config,
            seed,
            n,
            dof_point,
            p0_grid: (2..=8).map(|e| 10f64.powi(e)).collect(),
            epsilon: 0.5,
            delta_slack: None,
            trials: 1000,
            search: BoxKind::Structural,
            direction_cap: DEFAULT_DIRECTION_CAP,
            codebook_cap: DEFAULT_CODEBOOK_CAP,
            enum_cap: DEFAULT_ENUM_CAP,
        }
    }
}

/// One sweep point at one receiver.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeRow {
    pub p0: f64,
    pub p: f64,
    /// 1-based.
    pub receiver: usize,
    pub q: u64,
    pub lambda: f64,
    /// Whitened minimum distance times `λ`, when the enumeration fits the cap.
    pub d_min: Option<f64>,
    pub bound: Option<f64>,
    pub useful_symbols: usize,
    /// Useful symbols times `ln(2Q+1)`, nats per channel use.
    pub rate: f64,
    pub error: ErrorEstimate,
    /// `rate / (0.5 ln P0)`.
    pub slope_p0: f64,
    /// `rate / (0.5 ln P)`.
    pub slope_p: f64,
    /// Largest mean per-antenna transmit power seen over the trials.
    pub mean_power: f64,
}

/// Least-squares DoF estimate, or an explicit refusal.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum SlopeEstimate {
    Estimate { slope: f64, stderr: f64, rows_used: usize },
    Inconclusive { reliable_rows: usize, required: usize },
}

impl SlopeEstimate {
    pub fn slope(&self) -> Option<f64> {
        match self {
            SlopeEstimate::Estimate { slope, .. } => Some(*slope),
            SlopeEstimate::Inconclusive { .. } => None,
        }
    }
}

/// Fit `rate = d · x` over rows with block error below `threshold`.
///
/// `rows` holds `(x, rate, block_error)` with `x = 0.5 ln P`. The fit has no
/// intercept, matching `R = d · 0.5 log P`.
pub fn slope_estimate(rows: &[(f64, f64, f64)], threshold: f64) -> SlopeEstimate {
    let reliable: Vec<(f64, f64)> = rows.iter().filter(|r| r.2 < threshold).map(|r| (r.0, r.1)).collect();
    if reliable.len() < 3 {
        return SlopeEstimate::Inconclusive {
            reliable_rows: reliable.len(),
            required: 3,
        };
    }
    let sxx: f64 = reliable.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = reliable.iter().map(|(x, y)| x * y).sum();
    let slope = sxy / sxx;
    let rss: f64 = reliable.iter().map(|(x, y)| (y - slope * x).powi(2)).sum();
    let stderr = (rss / (reliable.len() - 1) as f64 / sxx).sqrt();
    SlopeEstimate::Estimate {
        slope,
        stderr,
        rows_used: reliable.len(),
    }
}

/// Per-receiver predictions and fitted slopes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReceiverSummary {
    /// 1-based.
    pub receiver: usize,
    pub useful_symbols: usize,
    pub columns: usize,
    pub antennas: usize,
    /// `useful · N / (G + N)`; `ND/(D+D'+1)` for a single stream and antenna pair.
    #[serde(serialize_with = "ser_rational")]
    pub finite_n: Rational,
    /// `useful · (1-ε)/(1+w)`: the slope the `Q` schedule targets.
    pub schedule: f64,
    /// Sum of the DoF-point entries decoded at this receiver.
    #[serde(serialize_with = "ser_rational")]
    pub asymptotic: Rational,
    pub slope_p0: SlopeEstimate,
    pub slope_p: SlopeEstimate,
    /// Block error never rises between consecutive points with equal `Q`
    /// beyond the earlier point's confidence interval.
    pub error_monotone: bool,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeReport {
    pub rows: Vec<SlopeRow>,
    pub receivers: Vec<ReceiverSummary>,
    pub nu2: f64,
    /// Largest columns-per-row ratio over receivers.
    pub w: f64,
    pub epsilon: f64,
    pub search: BoxKind,
}

/// Column header of [`SlopeReport::to_csv`].
pub const SLOPE_CSV_HEADER: &str =
    "P0,P,receiver,Q,lambda,d_min,bound,useful_symbols,rate,empirical_err,ci_lo,ci_hi,slope_P0,slope_P";

impl SlopeReport {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        let mut out = String::from(SLOPE_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{:e},{:e},{},{},{:e},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                r.p0,
                r.p,
                r.receiver,
                r.q,
                r.lambda,
                opt(r.d_min),
                opt(r.bound),
                r.useful_symbols,
                r.rate,
                r.error.rate,
                r.error.ci_lo,
                r.error.ci_hi,
                r.slope_p0,
                r.slope_p
            ));
        }
        out
    }
}

/// `ND / (D + D' + 1)` in exact arithmetic.
pub fn finite_n_prediction(antennas: usize, d: usize, d_ext: usize) -> Rational {
    Rational::new((antennas * d).into(), (d + d_ext + 1).into())
}

struct Setup {
    scheme: Scheme,
    models: Vec<ReceiveModel>,
    w: f64,
    nu2: f64,
}

fn setup(plan: &ExperimentPlan) -> Result<Setup> {
    if plan.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if plan.p0_grid.is_empty() || plan.p0_grid.windows(2).any(|w| w[1] <= w[0]) || plan.p0_grid[0] <= 0.0 {
        return Err(Error::InvalidArgument("power grid must be positive and strictly increasing".into()));
    }
    let config = &plan.config;
    let allocation = allocate_streams(config, &plan.dof_point)?;
    let channel = sample_channel(config, plan.seed);
    let scheme = Scheme::new(config, &channel, plan.n, &allocation, plan.seed, plan.direction_cap)?;
    let models = (0..config.num_rx())
        .map(|j| build_receive_model(&scheme, j, Weighting::Random(plan.seed), DEFAULT_COLUMN_CAP))
        .collect::<Result<Vec<_>>>()?;
    let w = models
        .iter()
        .map(|m| m.g() as f64 / m.rows() as f64)
        .fold(0.0, f64::max);
    let nu2 = scheme.nu2();
    if nu2 <= 0.0 {
        return Err(Error::InvalidArgument("the DoF point carries no streams".into()));
    }
    Ok(Setup { scheme, models, w, nu2 })
}

fn search_box(kind: BoxKind, model: &ReceiveModel, q: u64) -> SearchBox {
    match kind {
        BoxKind::Uniform => SearchBox::Uniform(q),
        BoxKind::Structural => SearchBox::structural(model, q),
    }
}

/// Sweep the plan's power grid and decode every receiver at every point.
pub fn run_link_experiment(plan: &ExperimentPlan) -> Result<SlopeReport> {
    let Setup { scheme, models, w, nu2 } = setup(plan)?;
    let params: Vec<CodeParams> = plan
        .p0_grid
        .iter()
        .map(|&p0| CodeParams::from_p0(p0, plan.epsilon, w, nu2, plan.delta_slack))
        .collect::<Result<_>>()?;

    // refuse before running anything if the largest codebook is too big
    let top = params.last().expect("non-empty grid");
    let decoder_sizes: Vec<f64> = models
        .iter()
        .map(|m| {
            search_box(plan.search, m, top.q)
                .radii(m.g())
                .map(|r| r.iter().map(|&x| (2 * x + 1) as f64).product())
        })
        .collect::<Result<_>>()?;
    if let Some(size) = decoder_sizes.iter().copied().find(|&s| s > plan.codebook_cap as f64) {
        return Err(Error::cap("decoder codebook at the largest P0", format!("{size:.0} codewords"), plan.codebook_cap));
    }

    let whitened: Vec<_> = models.iter().map(whitened_matrix).collect::<Result<_>>()?;
    let rows_per_point: Vec<Vec<SlopeRow>> = params
        .par_iter()
        .enumerate()
        .map(|(pi, cp)| run_point(plan, &scheme, &models, &whitened, cp, pi as u64))
        .collect::<Result<_>>()?;
    let rows: Vec<SlopeRow> = rows_per_point.into_iter().flatten().collect();

    let receivers = models
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let mine: Vec<&SlopeRow> = rows.iter().filter(|r| r.receiver == j + 1).collect();
            let fit = |x: &dyn Fn(&SlopeRow) -> f64| {
                let pts: Vec<(f64, f64, f64)> = mine.iter().map(|r| (x(r), r.rate, r.error.rate)).collect();
                slope_estimate(&pts, RELIABILITY_THRESHOLD)
            };
            let useful = m.useful_columns();
            let asymptotic = scheme
                .wanted(j)
                .iter()
                .map(|layout| {
                    let idx = scheme.messages().iter().position(|l| l.message == layout.message).expect("own layout");
                    plan.dof_point[idx].clone()
                })
                .fold(Rational::zero(), |a, b| a + b);
            ReceiverSummary {
                receiver: j + 1,
                useful_symbols: useful,
                columns: m.g(),
                antennas: m.rows(),
                finite_n: Rational::new((useful * m.rows()).into(), (m.g() + m.rows()).into()),
                schedule: useful as f64 * (1.0 - plan.epsilon) / (1.0 + w),
                asymptotic,
                slope_p0: fit(&|r| 0.5 * r.p0.ln()),
                slope_p: fit(&|r| 0.5 * r.p.ln()),
                error_monotone: mine
                    .windows(2)
                    .filter(|p| p[0].q == p[1].q)
                    .all(|p| p[1].error.rate <= p[0].error.ci_hi),
            }
        })
        .collect();

    Ok(SlopeReport {
        rows,
        receivers,
        nu2,
        w,
        epsilon: plan.epsilon,
        search: plan.search,
    })
}

fn run_point(
    plan: &ExperimentPlan,
    scheme: &Scheme,
    models: &[ReceiveModel],
    whitened: &[nalgebra::DMatrix<f64>],
    cp: &CodeParams,
    point: u64,
) -> Result<Vec<SlopeRow>> {
    let boxes: Vec<SearchBox> = models.iter().map(|m| search_box(plan.search, m, cp.q)).collect();
    let decoders = models
        .iter()
        .zip(&boxes)
        .map(|(m, b)| Decoder::new(m, cp.lambda, b, plan.codebook_cap))
        .collect::<Result<Vec<_>>>()?;
    let rx_antennas = plan.config.rx_antennas();
    let chunks = plan.trials.div_ceil(TRIAL_CHUNK);

    // per chunk: block errors per receiver, summed x² per transmit antenna
    let tallies: Vec<(Vec<u64>, Vec<Vec<f64>>)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<_> {
            let mut rng = rng_for(plan.seed, Domain::Sweep((point << 32) | chunk));
            let mut errors = vec![0u64; models.len()];
            let mut power: Vec<Vec<f64>> = plan.config.tx_antennas().iter().map(|&m| vec![0.0; m]).collect();
            let end = ((chunk + 1) * TRIAL_CHUNK).min(plan.trials);
            for _ in chunk * TRIAL_CHUNK..end {
                let symbols = SymbolVector::random(scheme, cp.q, cp.lambda, &mut rng)?;
                let x = encode(scheme, &symbols)?;
                for (acc, xk) in power.iter_mut().zip(&x) {
                    for (a, v) in acc.iter_mut().zip(xk) {
                        *a += v * v;
                    }
                }
                for (j, (model, decoder)) in models.iter().zip(&decoders).enumerate() {
                    let clean = propagate(scheme.channel(), rx_antennas[j], j, &x);
                    let mut y = model.apply_weights(&clean);
                    for (yi, ni) in y.iter_mut().zip(colored_noise(model.w(), &mut rng)) {
                        *yi += ni;
                    }
                    let truth = model.integer_vector(&symbols);
                    let guess = decoder.decode(&y);
                    let useful = model.useful_columns();
                    if guess[..useful] != truth[..useful] {
                        errors[j] += 1;
                    }
                }
            }
            Ok((errors, power))
        })
        .collect::<Result<_>>()?;

    let mut errors = vec![0u64; models.len()];
    let mut power: Vec<f64> = vec![0.0; plan.config.tx_antennas().iter().sum()];
    for (e, p) in &tallies {
        for (a, b) in errors.iter_mut().zip(e) {
            *a += b;
        }
        for (a, b) in power.iter_mut().zip(p.iter().flatten()) {
            *a += b;
        }
    }
    let mean_power = power.iter().map(|p| p / plan.trials as f64).fold(0.0, f64::max);

    let ln_levels = ((2 * cp.q + 1) as f64).ln();
    models
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let distance = min_distance_in(&whitened[j], &boxes[j], cp.q, cp.delta_slack, plan.enum_cap).ok();
            let d_min = distance.map(|d| d.d_min * cp.lambda);
            let codebook: f64 = boxes[j]
                .radii(m.g())?
                .iter()
                .filter(|&&r| r > 0)
                .map(|&r| (2 * r + 1) as f64)
                .product();
            let bound = d_min.map(|d| union_bound(codebook, d));
            let rate = m.useful_columns() as f64 * ln_levels;
            Ok(SlopeRow {
                p0: cp.p0,
                p: cp.p,
                receiver: j + 1,
                q: cp.q,
                lambda: cp.lambda,
                d_min,
                bound,
                useful_symbols: m.useful_columns(),
                rate,
                error: ErrorEstimate::from_counts(errors[j], plan.trials),
                slope_p0: rate / (0.5 * cp.p0.ln()),
                slope_p: rate / (0.5 * cp.p.ln()),
                mean_power,
            })
        })
        .collect()
}
