//! Code parameters, minimum distances and exhaustive ML decoding.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::align::ReceiveModel;
use crate::seeds::{rng_for, Domain};
use crate::{Error, Result};

/// Default bound on distance-enumeration candidates.
pub const DEFAULT_ENUM_CAP: u64 = 100_000_000;
/// Default bound on decoder codebook size.
pub const DEFAULT_CODEBOOK_CAP: u64 = 1_000_000;

const TRIAL_CHUNK: u64 = 256;

/// Constellation radius and scaling for one power level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CodeParams {
    /// Per-antenna power.
    pub p: f64,
    /// Normalised power `P / ν²`.
    pub p0: f64,
    pub epsilon: f64,
    pub delta_slack: f64,
    pub w: f64,
    pub q: u64,
    pub lambda: f64,
    pub nu2: f64,
}

/// Pick `Q = max(1, ⌊P0^((1-ε)/(2(1+w)))⌋)` and `λ = √P0 / Q`.
///
/// `delta_slack` defaults to `ε(1+w)/(2(1-ε))` and must lie in `(0, ε(1+w)/(1-ε))`.
pub fn choose_code_params(p: f64, epsilon: f64, w: f64, nu2: f64, delta_slack: Option<f64>) -> Result<CodeParams> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("power must be positive, got {p}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::InvalidArgument(format!("w must be positive, got {w}")));
    }
    if !(nu2 > 0.0 && nu2.is_finite()) {
        return Err(Error::InvalidArgument(format!("nu2 must be positive, got {nu2}")));
    }
    let max_delta = epsilon * (1.0 + w) / (1.0 - epsilon);
    let delta_slack = delta_slack.unwrap_or(max_delta / 2.0);
    if !(delta_slack > 0.0 && delta_slack < max_delta) {
        return Err(Error::InvalidArgument(format!(
            "delta slack {delta_slack} outside (0, {max_delta})"
        )));
    }
    let p0 = p / nu2;
    let radius = p0.powf((1.0 - epsilon) / (2.0 * (1.0 + w)));
    // absorb rounding just below an integer
    let q = ((radius * (1.0 + 1e-12)).floor() as u64).max(1);
    let lambda = p0.sqrt() / q as f64;
    Ok(CodeParams {
        p,
        p0,
        epsilon,
        delta_slack,
        w,
        q,
        lambda,
        nu2,
    })
}

impl CodeParams {
    /// Same schedule, parameterised by `P0` instead of `P`.
    pub fn from_p0(p0: f64, epsilon: f64, w: f64, nu2: f64, delta_slack: Option<f64>) -> Result<Self> {
        choose_code_params(p0 * nu2, epsilon, w, nu2, delta_slack)
    }

    /// `λ²Q²ν²`, the worst-case per-antenna power.
    pub fn peak_power(&self) -> f64 {
        self.lambda * self.lambda * (self.q * self.q) as f64 * self.nu2
    }
}

/// Codeword search region: every coordinate in `[-Q, Q]`, or individual radii.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchBox {
    Uniform(u64),
    Radii(Vec<u64>),
}

impl SearchBox {
    /// Radii of the `m` coordinates.
    pub fn radii(&self, m: usize) -> Result<Vec<u64>> {
        match self {
            SearchBox::Uniform(q) => Ok(vec![*q; m]),
            SearchBox::Radii(r) if r.len() == m => Ok(r.clone()),
            SearchBox::Radii(r) => Err(Error::DimensionMismatch(format!(
                "search box has {} radii, model has {m} columns",
                r.len()
            ))),
        }
    }

    /// The structural box of a receive model: each column's largest reachable integer.
    pub fn structural(model: &ReceiveModel, q: u64) -> Self {
        SearchBox::Radii(model.radii(q))
    }
}

fn box_size(radii: &[u64], scale: u64) -> f64 {
    radii.iter().map(|&r| (2 * scale * r + 1) as f64).product()
}

/// Result of an exhaustive minimum-distance search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceReport {
    pub d_min: f64,
    /// Minimising difference vector, first nonzero coordinate positive.
    pub argmin: Vec<i64>,
    pub q: u64,
    pub rows: usize,
    pub columns: usize,
    pub delta: f64,
    /// `Q^(-m/n - δ)`.
    pub bound_diophantine: f64,
    pub passes_diophantine: bool,
    pub bound_explicit: Option<f64>,
    pub passes_explicit: Option<bool>,
    /// Candidate difference vectors evaluated.
    pub enumerated: u64,
}

impl DistanceReport {
    /// Attach the explicit bound `λ(2(K-1)NQ)^(-(D+D') - δ)`.
    pub fn with_explicit_bound(mut self, lambda: f64, k: usize, n: usize, d: f64, d_ext: f64) -> Self {
        let bound = explicit_bound(lambda, k, n, self.q, d, d_ext, self.delta);
        self.bound_explicit = Some(bound);
        self.passes_explicit = Some(self.d_min >= bound);
        self
    }
}

/// `Q^(-m/n - δ)`.
pub fn diophantine_bound(q: u64, m: usize, n: usize, delta: f64) -> f64 {
    (q as f64).powf(-(m as f64) / n as f64 - delta)
}

/// `λ(2(K-1)NQ)^(-(D+D') - δ)`.
pub fn explicit_bound(lambda: f64, k: usize, n: usize, q: u64, d: f64, d_ext: f64, delta: f64) -> f64 {
    let base = 2.0 * (k.saturating_sub(1) * n) as f64 * q as f64;
    lambda * base.powf(-(d + d_ext) - delta)
}

/// Minimum of `‖A q‖₂` over nonzero differences `q ∈ [-2Q, 2Q]^m`.
pub fn min_distance(a: &DMatrix<f64>, q: u64, delta: f64, cap: u64) -> Result<DistanceReport> {
    min_distance_in(a, &SearchBox::Uniform(q), q, delta, cap)
}

/// Minimum distance between codewords of `search`: differences range over
/// twice each radius. `q` only enters the Diophantine bound.
pub fn min_distance_in(a: &DMatrix<f64>, search: &SearchBox, q: u64, delta: f64, cap: u64) -> Result<DistanceReport> {
    let m = a.ncols();
    let rows = a.nrows();
    if m == 0 || rows == 0 {
        return Err(Error::InvalidArgument("matrix must be non-empty".into()));
    }
    if q == 0 {
        return Err(Error::InvalidArgument("Q must be at least 1".into()));
    }
    let radii: Vec<i64> = search.radii(m)?.into_iter().map(|r| 2 * r as i64).collect();
    let candidates = box_size(&search.radii(m)?, 2);
    if candidates > cap as f64 {
        return Err(Error::cap("distance enumeration", format!("{candidates:.0} candidates"), cap));
    }
    let columns: Vec<Vec<f64>> = (0..m).map(|c| a.column(c).iter().copied().collect()).collect();

    // Canonical representatives: coordinates before `lead` are zero and the
    // leading coordinate is positive.
    let chunks: Vec<(usize, i64)> = (0..m)
        .flat_map(|lead| (1..=radii[lead]).map(move |v| (lead, v)))
        .collect();
    if chunks.is_empty() {
        return Err(Error::InvalidArgument("search box contains no nonzero difference".into()));
    }
    let results: Vec<(f64, Vec<i64>, u64)> = chunks
        .par_iter()
        .map(|&(lead, v)| {
            let mut q_vec = vec![0i64; m];
            q_vec[lead] = v;
            let partial: Vec<f64> = columns[lead].iter().map(|x| x * v as f64).collect();
            let mut best = (f64::INFINITY, Vec::new(), 0u64);
            dfs(&columns, &radii, lead + 1, &partial, &mut q_vec, &mut best);
            best
        })
        .collect();
    let enumerated = results.iter().map(|r| r.2).sum();
    let (d2, argmin, _) = results
        .into_iter()
        .min_by(|a, b| cmp_candidate((a.0, &a.1), (b.0, &b.1)))
        .expect("non-empty");
    let d_min = d2.sqrt();
    let bound_diophantine = diophantine_bound(q, m, rows, delta);
    Ok(DistanceReport {
        d_min,
        argmin,
        q,
        rows,
        columns: m,
        delta,
        bound_diophantine,
        passes_diophantine: d_min >= bound_diophantine,
        bound_explicit: None,
        passes_explicit: None,
        enumerated,
    })
}

fn cmp_candidate(a: (f64, &[i64]), b: (f64, &[i64])) -> Ordering {
    a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then_with(|| a.1.cmp(b.1))
}

fn dfs(
    columns: &[Vec<f64>],
    radii: &[i64],
    depth: usize,
    partial: &[f64],
    q_vec: &mut Vec<i64>,
    best: &mut (f64, Vec<i64>, u64),
) {
    if depth == columns.len() {
        let norm2: f64 = partial.iter().map(|x| x * x).sum();
        best.2 += 1;
        if cmp_candidate((norm2, q_vec), (best.0, &best.1)) == Ordering::Less {
            best.0 = norm2;
            best.1 = q_vec.clone();
        }
        return;
    }
    let r = radii[depth];
    let mut next = partial.to_vec();
    for v in -r..=r {
        for (dst, (p, c)) in next.iter_mut().zip(partial.iter().zip(&columns[depth])) {
            *dst = p + c * v as f64;
        }
        q_vec[depth] = v;
        dfs(columns, radii, depth + 1, &next, q_vec, best);
    }
    q_vec[depth] = 0;
}

/// `L⁻¹A` where `WWᵀ = LLᵀ`: the matrix in which Euclidean distance is the
/// noise-covariance-aware metric.
pub fn whitened_matrix(model: &ReceiveModel) -> Result<DMatrix<f64>> {
    let chol = model
        .noise_cov()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("noise covariance is not positive definite".into()))?;
    Ok(chol.l().solve_lower_triangular(model.a()).expect("Cholesky factor is invertible"))
}

/// Exhaustive ML decoder over a fixed codebook.
pub struct Decoder {
    rows: usize,
    radii: Vec<u64>,
    l: DMatrix<f64>,
    /// Whitened `λ·A·u` for every codeword in lexicographic order.
    table: Vec<f64>,
    count: usize,
}

impl Decoder {
    pub fn new(model: &ReceiveModel, lambda: f64, search: &SearchBox, cap: u64) -> Result<Self> {
        let m = model.g();
        let radii = search.radii(m)?;
        let size = box_size(&radii, 1);
        if size > cap as f64 {
            return Err(Error::cap("decoder codebook", format!("{size:.0} codewords"), cap));
        }
        let count = size as usize;
        let chol = model
            .noise_cov()
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("noise covariance is not positive definite".into()))?;
        let l = chol.l();
        let wa = l.solve_lower_triangular(model.a()).expect("Cholesky factor is invertible") * lambda;
        let rows = model.rows();
        let active: Vec<usize> = (0..m).filter(|&c| radii[c] > 0).collect();
        let mut table = vec![0.0; count * rows];
        let mut u: Vec<i64> = active.iter().map(|&c| -(radii[c] as i64)).collect();
        for idx in 0..count {
            let point = &mut table[idx * rows..(idx + 1) * rows];
            for (slot, &c) in active.iter().enumerate() {
                let v = u[slot] as f64;
                for (r, p) in point.iter_mut().enumerate() {
                    *p += wa[(r, c)] * v;
                }
            }
            for slot in (0..active.len()).rev() {
                if u[slot] < radii[active[slot]] as i64 {
                    u[slot] += 1;
                    break;
                }
                u[slot] = -(radii[active[slot]] as i64);
            }
        }
        Ok(Decoder {
            rows,
            radii,
            l,
            table,
            count,
        })
    }

    pub fn codebook_size(&self) -> usize {
        self.count
    }

    pub fn radii(&self) -> &[u64] {
        &self.radii
    }

    /// Integer vector of codeword `index` in lexicographic order.
    pub fn codeword(&self, mut index: usize) -> Vec<i64> {
        let mut u = vec![0i64; self.radii.len()];
        for c in (0..self.radii.len()).rev() {
            let width = 2 * self.radii[c] as usize + 1;
            u[c] = (index % width) as i64 - self.radii[c] as i64;
            index /= width;
        }
        u
    }

    /// Lexicographic rank of `u`, if it lies in the box.
    pub fn rank(&self, u: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for (c, &v) in u.iter().enumerate() {
            let r = self.radii[c] as i64;
            if v.abs() > r {
                return None;
            }
            idx = idx * (2 * r as usize + 1) + (v + r) as usize;
        }
        Some(idx)
    }

    /// Index of the codeword minimising `(y - λAu)ᵀ(WWᵀ)⁻¹(y - λAu)`; the
    /// lexicographically first wins ties.
    pub fn decode_index(&self, y: &[f64]) -> usize {
        let z = self
            .l
            .solve_lower_triangular(&DVector::from_column_slice(y))
            .expect("Cholesky factor is invertible");
        let mut best = (f64::INFINITY, 0usize);
        for idx in 0..self.count {
            let point = &self.table[idx * self.rows..(idx + 1) * self.rows];
            let d: f64 = point.iter().zip(z.iter()).map(|(p, zi)| (zi - p) * (zi - p)).sum();
            if d < best.0 {
                best = (d, idx);
            }
        }
        best.1
    }

    pub fn decode(&self, y: &[f64]) -> Vec<i64> {
        self.codeword(self.decode_index(y))
    }
}

/// ML estimate of the integer vector behind `y`.
pub fn ml_decode(y: &[f64], model: &ReceiveModel, lambda: f64, search: &SearchBox, cap: u64) -> Result<Vec<i64>> {
    if y.len() != model.rows() {
        return Err(Error::DimensionMismatch(format!(
            "received vector has {} entries, model has {} rows",
            y.len(),
            model.rows()
        )));
    }
    Ok(Decoder::new(model, lambda, search, cap)?.decode(y))
}

/// Union bounds on the block error probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorBound {
    /// `(2Q+1)^m exp(-d²/8)`.
    pub union: f64,
    /// `(3Q)^m exp(-d²/8)`.
    pub loose: f64,
}

/// Union bound `codewords · exp(-d²/8)` for an arbitrary codebook size.
pub fn union_bound(codewords: f64, d_min: f64) -> f64 {
    codewords * (-d_min * d_min / 8.0).exp()
}

pub fn error_prob_bound(m: usize, q: u64, d_min: f64) -> ErrorBound {
    let tail = (-d_min * d_min / 8.0).exp();
    ErrorBound {
        union: ((2 * q + 1) as f64).powi(m as i32) * tail,
        loose: ((3 * q) as f64).powi(m as i32) * tail,
    }
}

/// Empirical block error with a 95% Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub trials: u64,
    pub errors: u64,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl ErrorEstimate {
    pub fn from_counts(errors: u64, trials: u64) -> Self {
        let (ci_lo, ci_hi) = wilson(errors, trials);
        ErrorEstimate {
            trials,
            errors,
            rate: errors as f64 / trials as f64,
            ci_lo,
            ci_hi,
        }
    }
}

fn wilson(errors: u64, trials: u64) -> (f64, f64) {
    let z = 1.96f64;
    let n = trials as f64;
    let p = errors as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Draw `n` rows of colored noise `W z` with `z ~ N(0, I)`.
pub(crate) fn colored_noise(w: &DMatrix<f64>, rng: &mut impl Rng) -> Vec<f64> {
    let z = DVector::from_iterator(w.ncols(), (0..w.ncols()).map(|_| rng.sample::<f64, _>(StandardNormal)));
    (w * z).iter().copied().collect()
}

/// Block error rate of ML decoding with codewords uniform over `search`.
///
/// `noise_scale` multiplies the unit-variance noise; zero gives noiseless trials.
pub fn monte_carlo_error(
    model: &ReceiveModel,
    lambda: f64,
    search: &SearchBox,
    trials: u64,
    noise_scale: f64,
    seed: u64,
    cap: u64,
) -> Result<ErrorEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let decoder = Decoder::new(model, lambda, search, cap)?;
    let chunks = trials.div_ceil(TRIAL_CHUNK);
    let errors: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = rng_for(seed, Domain::Noise(chunk));
            let start = chunk * TRIAL_CHUNK;
            let end = (start + TRIAL_CHUNK).min(trials);
            let mut errors = 0;
            for _ in start..end {
                let idx = rng.gen_range(0..decoder.codebook_size());
                let u = decoder.codeword(idx);
                let mut y = model.assemble(&u, lambda);
                if noise_scale > 0.0 {
                    for (yi, ni) in y.iter_mut().zip(colored_noise(model.w(), &mut rng)) {
                        *yi += noise_scale * ni;
                    }
                }
                if decoder.decode_index(&y) != idx {
                    errors += 1;
                }
            }
            errors
        })
        .sum();
    Ok(ErrorEstimate::from_counts(errors, trials))
}
