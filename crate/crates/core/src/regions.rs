//! Achievable and outer DoF regions in exact rational arithmetic.
//!
//! A region keeps two descriptions of the same polytope: the compact forms
//! (sums of maxima, or sums of the largest few coordinates) evaluated
//! directly, and their expansion into plain linear constraints used for vertex
//! enumeration and optimisation.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::json;

use crate::net_model::{NetworkConfig, NetworkKind};
use crate::{Error, Result};

pub type Rational = BigRational;
/// A DoF point: one entry per transmitter, or `rx * K + tx` for X networks.
pub type DofPoint = Vec<Rational>;

/// Default bound on X-network selector expansions.
pub const DEFAULT_SELECTOR_CAP: usize = 4096;
pub const MAX_VERTEX_DIM: usize = 6;
pub const MAX_VERTEX_CONSTRAINTS: usize = 64;
pub const MAX_OUTER_USERS: usize = 8;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

fn int(v: usize) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Parse `"3"`, `"-2/5"` or a finite decimal such as `"0.25"`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    if let Ok(r) = Rational::from_str(t) {
        return Ok(r);
    }
    let bad = || Error::InvalidArgument(format!("not a rational number: {text:?}"));
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, t),
    };
    let (whole, frac) = body.split_once('.').ok_or_else(bad)?;
    if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) || !whole.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let num = BigInt::from_str(&digits).map_err(|_| bad())? * sign;
    let den = BigInt::from(10u32).pow(frac.len() as u32);
    Ok(Rational::new(num, den))
}

/// `a·x ≤ b`, labelled with its origin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub rhs: Rational,
    pub label: String,
}

impl Constraint {
    pub fn holds(&self, point: &[Rational]) -> bool {
        dot(&self.coeffs, point) <= self.rhs
    }
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// Compact inequality evaluated without expansion.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Form {
    /// `Σ c·d + Σ_groups max_{(i, c) ∈ group} c·d_i ≤ rhs`
    MaxSum {
        linear: Vec<(usize, Rational)>,
        groups: Vec<Vec<(usize, Rational)>>,
        rhs: Rational,
        label: String,
    },
    /// `Σ_{fixed} d + (sum of the largest `count` entries of `pool`) ≤ rhs`
    TopSum {
        fixed: Vec<usize>,
        pool: Vec<usize>,
        count: usize,
        rhs: Rational,
        label: String,
    },
}

impl Form {
    fn holds(&self, point: &[Rational]) -> bool {
        match self {
            Form::MaxSum { linear, groups, rhs, .. } => {
                let mut total: Rational = linear.iter().map(|(i, c)| c * &point[*i]).sum();
                for g in groups {
                    if let Some(m) = g.iter().map(|(i, c)| c * &point[*i]).max() {
                        total += m;
                    }
                }
                total <= *rhs
            }
            Form::TopSum { fixed, pool, count, rhs, .. } => {
                let mut vals: Vec<&Rational> = pool.iter().map(|&i| &point[i]).collect();
                vals.sort_by(|a, b| b.cmp(a));
                let top: Rational = vals.into_iter().take(*count).cloned().sum();
                let base: Rational = fixed.iter().map(|&i| point[i].clone()).sum();
                base + top <= *rhs
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionKind {
    Inner,
    Outer,
}

/// A bounded polytope of DoF points.
#[derive(Clone, Debug)]
pub struct DofRegion {
    kind: RegionKind,
    provenance: String,
    variables: Vec<String>,
    bounds: Vec<Constraint>,
    forms: Vec<Form>,
    expanded: Option<Vec<Constraint>>,
}

fn unit(dim: usize, entries: impl IntoIterator<Item = (usize, Rational)>) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); dim];
    for (i, c) in entries {
        v[i] += c;
    }
    v
}

fn basic_bounds(variables: &[String], caps: &[usize]) -> Vec<Constraint> {
    let dim = variables.len();
    let mut out = Vec::with_capacity(2 * dim);
    for (i, name) in variables.iter().enumerate() {
        out.push(Constraint {
            coeffs: unit(dim, [(i, -Rational::one())]),
            rhs: Rational::zero(),
            label: format!("nonnegativity of {name}"),
        });
    }
    for (i, name) in variables.iter().enumerate() {
        out.push(Constraint {
            coeffs: unit(dim, [(i, Rational::one())]),
            rhs: int(caps[i]),
            label: format!("single-user bound on {name}"),
        });
    }
    out
}

fn variable_names(config: &NetworkConfig) -> Vec<String> {
    let k = config.num_tx();
    match config.kind() {
        NetworkKind::X => (0..config.num_rx() * k)
            .map(|i| format!("d{},{}", i / k + 1, i % k + 1))
            .collect(),
        _ => (1..=k).map(|i| format!("d{i}")).collect(),
    }
}

/// Achievable region of a configuration.
pub fn inner_region(config: &NetworkConfig) -> Result<DofRegion> {
    inner_region_with_cap(config, DEFAULT_SELECTOR_CAP)
}

/// [`inner_region`] with an explicit bound on X-network selector expansions.
/// Past the bound the region is kept in compact form only.
pub fn inner_region_with_cap(config: &NetworkConfig, selector_cap: usize) -> Result<DofRegion> {
    let k = config.num_tx();
    let m = config.tx_antennas();
    let n = config.rx_antennas();
    let variables = variable_names(config);
    let dim = variables.len();
    let mut forms = Vec::new();
    let caps: Vec<usize>;
    let provenance;
    match config.kind() {
        NetworkKind::Ic | NetworkKind::General => {
            provenance = if config.kind() == NetworkKind::Ic {
                "interference-channel achievable region".to_string()
            } else {
                "general-demand region".to_string()
            };
            for (j, &nj) in n.iter().enumerate() {
                let wanted = config.wanted(j);
                let linear = wanted.iter().map(|&tx| (tx, rat(1, nj as i64))).collect();
                let group: Vec<(usize, Rational)> =
                    config.unwanted(j).into_iter().map(|tx| (tx, rat(1, m[tx] as i64))).collect();
                forms.push(Form::MaxSum {
                    linear,
                    groups: vec![group],
                    rhs: Rational::one(),
                    label: format!("receiver {}", j + 1),
                });
            }
            caps = (0..k)
                .map(|tx| {
                    (0..config.num_rx())
                        .filter(|&j| config.wanted(j).contains(&tx))
                        .map(|j| n[j])
                        .fold(m[tx], usize::min)
                })
                .collect();
        }
        NetworkKind::X => {
            provenance = "X-network achievable region".to_string();
            let j_count = config.num_rx();
            for (j, &nj) in n.iter().enumerate() {
                let linear = (0..k).map(|tx| (j * k + tx, rat(1, nj as i64))).collect();
                let groups = (0..j_count)
                    .filter(|&jh| jh != j)
                    .map(|jh| (0..k).map(|tx| (jh * k + tx, rat(1, m[tx] as i64))).collect())
                    .collect();
                forms.push(Form::MaxSum {
                    linear,
                    groups,
                    rhs: Rational::one(),
                    label: format!("receiver {}", j + 1),
                });
            }
            caps = (0..dim).map(|i| m[i % k].min(n[i / k])).collect();
        }
    }
    let bounds = basic_bounds(&variables, &caps);
    let expanded = expand_forms(dim, &forms, selector_cap);
    Ok(DofRegion {
        kind: RegionKind::Inner,
        provenance,
        variables,
        bounds,
        forms,
        expanded,
    })
}

/// Linear expansion of compact forms; `None` past `cap` constraints.
fn expand_forms(dim: usize, forms: &[Form], cap: usize) -> Option<Vec<Constraint>> {
    let mut out = Vec::new();
    for form in forms {
        match form {
            Form::MaxSum { linear, groups, rhs, label } => {
                // max_i a_i ≤ b holds iff every a_i ≤ b: one constraint per selector
                let live: Vec<&Vec<(usize, Rational)>> = groups.iter().filter(|g| !g.is_empty()).collect();
                let count = live.iter().try_fold(1usize, |acc, g| acc.checked_mul(g.len()))?;
                if out.len().checked_add(count)? > cap {
                    return None;
                }
                for mut code in 0..count {
                    let mut coeffs = unit(dim, linear.iter().cloned());
                    let mut picked = Vec::with_capacity(live.len());
                    for g in live.iter().rev() {
                        let (i, coef) = &g[code % g.len()];
                        code /= g.len();
                        coeffs[*i] += coef;
                        picked.push(i + 1);
                    }
                    picked.reverse();
                    let label = if picked.is_empty() {
                        label.clone()
                    } else {
                        format!("{label}, interferers {picked:?}")
                    };
                    out.push(Constraint { coeffs, rhs: rhs.clone(), label });
                }
            }
            Form::TopSum { fixed, pool, count, rhs, label } => {
                for subset in subsets(pool, *count) {
                    let coeffs = unit(dim, fixed.iter().chain(&subset).map(|&i| (i, Rational::one())));
                    out.push(Constraint {
                        coeffs,
                        rhs: rhs.clone(),
                        label: format!("{label}, T2={:?}", subset.iter().map(|i| i + 1).collect::<Vec<_>>()),
                    });
                    if out.len() > cap {
                        return None;
                    }
                }
            }
        }
    }
    Some(out)
}

/// All `size`-subsets of `items`, lexicographic.
fn subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn rec(items: &[usize], size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < size - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, size, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, size, 0, &mut cur, &mut out);
    out
}

/// Transmitter-grouping outer bound for a `(K, [M], [N])` interference channel.
///
/// Every group size `g`, every first group `T1` of size `g`, and every second
/// group `T2` of size `min(K-g, ⌊gN/M⌋)` among the remaining users contributes
/// `Σ_T1 d ≤ g·min(M,N)`, `Σ_T2 d ≤ |T2|·min(M,N)` and `Σ_T1 d + Σ_T2 d ≤ gN`.
pub fn outer_region(k: usize, m: usize, n: usize) -> Result<DofRegion> {
    if k == 0 || m == 0 || n == 0 {
        return Err(Error::InvalidArgument("K, M and N must be at least 1".into()));
    }
    if k > MAX_OUTER_USERS {
        return Err(Error::cap("outer-bound subsets", format!("K={k}"), format!("K<={MAX_OUTER_USERS}")));
    }
    let variables: Vec<String> = (1..=k).map(|i| format!("d{i}")).collect();
    let mn = m.min(n);
    let users: Vec<usize> = (0..k).collect();
    let mut forms = Vec::new();
    for g in 1..=k {
        let s = (k - g).min(g * n / m);
        for t1 in subsets(&users, g) {
            let rest: Vec<usize> = users.iter().copied().filter(|u| !t1.contains(u)).collect();
            let name = format!("g={g}, T1={:?}", t1.iter().map(|i| i + 1).collect::<Vec<_>>());
            forms.push(Form::TopSum {
                fixed: t1.clone(),
                pool: Vec::new(),
                count: 0,
                rhs: int(g * mn),
                label: format!("{name}: first group"),
            });
            if s > 0 {
                forms.push(Form::TopSum {
                    fixed: Vec::new(),
                    pool: rest.clone(),
                    count: s,
                    rhs: int(s * mn),
                    label: format!("{name}: second group"),
                });
            }
            forms.push(Form::TopSum {
                fixed: t1,
                pool: rest,
                count: s,
                rhs: int(g * n),
                label: format!("{name}: both groups"),
            });
        }
    }
    let expanded = expand_forms(k, &forms, usize::MAX).map(dedupe);
    Ok(DofRegion {
        kind: RegionKind::Outer,
        provenance: "transmitter-grouping outer bound".into(),
        bounds: basic_bounds(&variables, &vec![mn; k]),
        variables,
        forms,
        expanded,
    })
}

/// Keep one constraint per coefficient vector, with the smallest right-hand side.
fn dedupe(constraints: Vec<Constraint>) -> Vec<Constraint> {
    let mut best: BTreeMap<Vec<Rational>, Constraint> = BTreeMap::new();
    let mut order = Vec::new();
    for c in constraints {
        match best.get(&c.coeffs) {
            Some(prev) if prev.rhs <= c.rhs => {}
            Some(_) => {
                best.insert(c.coeffs.clone(), c);
            }
            None => {
                order.push(c.coeffs.clone());
                best.insert(c.coeffs.clone(), c);
            }
        }
    }
    order.into_iter().map(|k| best.remove(&k).expect("present")).collect()
}

impl DofRegion {
    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn is_expanded(&self) -> bool {
        self.expanded.is_some()
    }

    /// Every linear constraint: bounds followed by the expanded forms.
    pub fn constraints(&self) -> Result<Vec<Constraint>> {
        let expanded = self.expanded.as_ref().ok_or_else(|| {
            Error::Unsupported("region is too large to expand into linear constraints".into())
        })?;
        Ok(self.bounds.iter().chain(expanded).cloned().collect())
    }

    fn check_dim(&self, point: &[Rational]) -> Result<()> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} entries, region has {}",
                point.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Membership by linear constraints when expanded, else by direct evaluation.
    pub fn contains(&self, point: &[Rational]) -> Result<bool> {
        self.check_dim(point)?;
        match &self.expanded {
            Some(expanded) => Ok(self.bounds.iter().chain(expanded).all(|c| c.holds(point))),
            None => self.contains_direct(point),
        }
    }

    /// Membership by evaluating the compact max/top-sum forms.
    pub fn contains_direct(&self, point: &[Rational]) -> Result<bool> {
        self.check_dim(point)?;
        Ok(self.bounds.iter().all(|c| c.holds(point)) && self.forms.iter().all(|f| f.holds(point)))
    }

    /// Constraints violated by `point`.
    pub fn violated(&self, point: &[Rational]) -> Result<Vec<Constraint>> {
        self.check_dim(point)?;
        Ok(self.constraints()?.into_iter().filter(|c| !c.holds(point)).collect())
    }

    /// Vertices by brute force over constraint subsets, sorted and deduplicated.
    pub fn vertices(&self) -> Result<Vec<DofPoint>> {
        let dim = self.dim();
        let constraints = dedupe(self.constraints()?);
        if dim > MAX_VERTEX_DIM {
            return Err(Error::cap("vertex enumeration dimension", dim, MAX_VERTEX_DIM));
        }
        if constraints.len() > MAX_VERTEX_CONSTRAINTS {
            return Err(Error::cap("vertex enumeration constraints", constraints.len(), MAX_VERTEX_CONSTRAINTS));
        }
        let idx: Vec<usize> = (0..constraints.len()).collect();
        let firsts: Vec<usize> = (0..constraints.len()).collect();
        let found: Vec<BTreeSet<DofPoint>> = firsts
            .par_iter()
            .map(|&first| {
                let mut local = BTreeSet::new();
                for rest in subsets(&idx[first + 1..], dim - 1) {
                    let rows: Vec<&Constraint> =
                        std::iter::once(first).chain(rest).map(|i| &constraints[i]).collect();
                    if let Some(x) = solve(&rows) {
                        if constraints.iter().all(|c| c.holds(&x)) {
                            local.insert(x);
                        }
                    }
                }
                local
            })
            .collect();
        let all: BTreeSet<DofPoint> = found.into_iter().flatten().collect();
        Ok(all.into_iter().collect())
    }

    /// Largest value of `objective · d` and a maximising vertex.
    pub fn maximize(&self, objective: &[Rational]) -> Result<(Rational, DofPoint)> {
        self.check_dim(objective)?;
        self.vertices()?
            .into_iter()
            .map(|v| (dot(objective, &v), v))
            .fold(None, |best: Option<(Rational, DofPoint)>, cand| match best {
                Some(b) if b.0 >= cand.0 => Some(b),
                _ => Some(cand),
            })
            .ok_or_else(|| Error::InvalidArgument("region is empty".into()))
    }

    /// Largest total DoF.
    pub fn maximize_sum(&self) -> Result<(Rational, DofPoint)> {
        self.maximize(&vec![Rational::one(); self.dim()])
    }

    /// `{variables, provenance, constraints: [{coeffs, rhs, label}]}` with rationals as strings.
    pub fn to_json(&self) -> serde_json::Value {
        let list = |cs: &[Constraint]| -> Vec<serde_json::Value> {
            cs.iter()
                .map(|c| {
                    json!({
                        "coeffs": c.coeffs.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                        "rhs": c.rhs.to_string(),
                        "label": c.label,
                    })
                })
                .collect()
        };
        let mut value = json!({
            "kind": match self.kind { RegionKind::Inner => "inner", RegionKind::Outer => "outer" },
            "provenance": self.provenance,
            "variables": self.variables,
            "expanded": self.expanded.is_some(),
        });
        let constraints = match &self.expanded {
            Some(e) => list(&self.bounds.iter().chain(e).cloned().collect::<Vec<_>>()),
            None => list(&self.bounds),
        };
        value["constraints"] = serde_json::Value::Array(constraints);
        value
    }

    /// Vertices as CSV with one column per variable.
    pub fn vertices_csv(&self) -> Result<String> {
        let mut out = self.variables.join(",");
        out.push('\n');
        for v in self.vertices()? {
            out.push_str(&v.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

/// Unique solution of the square system formed by the constraint rows, if any.
fn solve(rows: &[&Constraint]) -> Option<DofPoint> {
    let n = rows.len();
    let mut a: Vec<Vec<Rational>> = rows
        .iter()
        .map(|c| {
            let mut r = c.coeffs.clone();
            r.push(c.rhs.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v /= &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let src = a[col].clone();
                for (d, s) in a[r].iter_mut().zip(&src) {
                    *d -= &f * s;
                }
            }
        }
    }
    Some(a.into_iter().map(|mut r| r.pop().expect("augmented column")).collect())
}

/// Outer total-DoF bound and the zero-forcing achievable value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OuterTotal {
    /// `min_g gNK / min{K, ⌊g(N+M)/M⌋}`.
    pub outer: Rational,
    /// Smallest `g` attaining the minimum.
    pub g: usize,
    /// `min{max(M,N), K·min(M,N)}`.
    pub zero_forcing: Rational,
}

pub fn outer_total_dof(k: usize, m: usize, n: usize) -> Result<OuterTotal> {
    if k == 0 || m == 0 || n == 0 {
        return Err(Error::InvalidArgument("K, M and N must be at least 1".into()));
    }
    let (outer, g) = (1..=k)
        .map(|g| (rat((g * n * k) as i64, k.min(g * (n + m) / m) as i64), g))
        .fold(None, |best: Option<(Rational, usize)>, cand| match best {
            Some(b) if b.0 <= cand.0 => Some(b),
            _ => Some(cand),
        })
        .expect("K >= 1");
    Ok(OuterTotal {
        outer,
        g,
        zero_forcing: int(m.max(n).min(k * m.min(n))),
    })
}

/// One closed-form total-DoF value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaRow {
    pub label: String,
    pub value: Rational,
    /// Symmetric point attaining the value, when the formula comes with one.
    pub witness: Option<DofPoint>,
}

/// Every closed form that applies to the configuration.
pub fn total_dof_formulas(config: &NetworkConfig) -> Result<Vec<FormulaRow>> {
    let k = config.num_tx();
    let j = config.num_rx();
    let mut rows = Vec::new();
    let uniform = config.uniform_antennas();
    match (config.kind(), uniform) {
        (NetworkKind::Ic, Some((m, n))) => {
            if m == n {
                rows.push(FormulaRow {
                    label: "NK/2".into(),
                    value: rat((n * k) as i64, 2),
                    witness: Some(vec![rat(n as i64, 2); k]),
                });
            }
            let sym = rat((m * n) as i64, (m + n) as i64);
            rows.push(FormulaRow {
                label: "KMN/(M+N)".into(),
                value: &sym * int(k),
                witness: Some(vec![sym; k]),
            });
            let outer = outer_total_dof(k, m, n)?;
            rows.push(FormulaRow {
                label: "outer bound min_g gNK/min{K,floor(g(N+M)/M)}".into(),
                value: outer.outer,
                witness: None,
            });
            rows.push(FormulaRow {
                label: "zero-forcing min{max(M,N),K*min(M,N)}".into(),
                value: outer.zero_forcing,
                witness: None,
            });
        }
        (NetworkKind::X, Some((m, n))) => {
            if m == n {
                let w = rat(n as i64, (k + j - 1) as i64);
                rows.push(FormulaRow {
                    label: "KJN/(K+J-1)".into(),
                    value: &w * int(k * j),
                    witness: Some(vec![w; k * j]),
                });
            }
            if m == 1 && k > n {
                let w = rat(n as i64, (k + n * (j - 1)) as i64);
                rows.push(FormulaRow {
                    label: "NKJ/(K+N(J-1))".into(),
                    value: &w * int(k * j),
                    witness: Some(vec![w; k * j]),
                });
            }
            if m == 1 && k <= n {
                rows.push(FormulaRow {
                    label: "single-user bound N".into(),
                    value: int(n),
                    witness: None,
                });
            }
        }
        (NetworkKind::General, _) => {
            let (value, point) = inner_region(config)?.maximize_sum()?;
            rows.push(FormulaRow {
                label: "max sum over general-demand region".into(),
                value,
                witness: Some(point),
            });
        }
        _ => {}
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_model::make_config;
    use proptest::prelude::*;

    fn ic(k: usize, m: usize, n: usize) -> NetworkConfig {
        make_config(NetworkKind::Ic, k, k, vec![m; k], vec![n; k], None).unwrap()
    }

    fn pt(v: &[(i64, i64)]) -> DofPoint {
        v.iter().map(|&(a, b)| rat(a, b)).collect()
    }

    #[test]
    fn parse() {
        assert_eq!(parse_rational("3").unwrap(), rat(3, 1));
        assert_eq!(parse_rational("-2/6").unwrap(), rat(-1, 3));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.").is_err());
    }

    #[test]
    fn ic_membership() {
        let r = inner_region(&ic(3, 2, 2)).unwrap();
        assert!(r.contains(&pt(&[(1, 1), (1, 1), (1, 1)])).unwrap());
        assert!(!r.contains(&pt(&[(2, 1), (1, 1), (1, 1)])).unwrap());
        let r = inner_region(&ic(3, 2, 3)).unwrap();
        let p = pt(&[(6, 5); 3]);
        assert!(r.contains(&p).unwrap());
        let bumped = pt(&[(6, 5), (6, 5), (61, 50)]);
        assert!(!r.contains(&bumped).unwrap());
    }

    #[test]
    fn general_membership() {
        let cfg = make_config(
            NetworkKind::General,
            3,
            2,
            vec![2, 2, 2],
            vec![2, 2],
            Some(vec![vec![1, 2], vec![3]]),
        )
        .unwrap();
        let r = inner_region(&cfg).unwrap();
        assert!(r.contains(&pt(&[(1, 1), (1, 2), (1, 2)])).unwrap());
        assert!(!r.contains(&pt(&[(1, 1), (1, 1), (1, 2)])).unwrap());
    }

    #[test]
    fn ic_maximum() {
        let (v, p) = inner_region(&ic(3, 2, 2)).unwrap().maximize_sum().unwrap();
        assert_eq!(v, rat(3, 1));
        assert_eq!(p, pt(&[(1, 1); 3]));
    }

    #[test]
    fn single_user_is_boxed() {
        let (v, _) = inner_region(&ic(1, 2, 3)).unwrap().maximize_sum().unwrap();
        assert_eq!(v, rat(2, 1));
        let (v, _) = outer_region(1, 2, 3).unwrap().maximize_sum().unwrap();
        assert_eq!(v, rat(2, 1));
    }

    #[test]
    fn outer_examples() {
        let r = outer_region(3, 2, 2).unwrap();
        assert!(r.contains(&pt(&[(1, 1); 3])).unwrap());
        assert!(!r.contains(&pt(&[(1, 1), (1, 1), (11, 10)])).unwrap());
        assert_eq!(outer_region(3, 1, 1).unwrap().maximize_sum().unwrap().0, rat(3, 2));
        assert!(outer_region(9, 1, 1).is_err());
    }

    #[test]
    fn outer_totals() {
        let o = outer_total_dof(3, 1, 1).unwrap();
        assert_eq!((o.outer, o.g), (rat(3, 2), 1));
        let o = outer_total_dof(5, 2, 3).unwrap();
        assert_eq!((o.outer, o.g), (rat(6, 1), 2));
        let o = outer_total_dof(2, 1, 3).unwrap();
        assert_eq!((o.outer, o.zero_forcing), (rat(3, 1), rat(2, 1)));
        for k in 1..8 {
            assert!(outer_total_dof(k, 2, 3).unwrap().outer <= outer_total_dof(k + 1, 2, 3).unwrap().outer);
        }
    }

    #[test]
    fn formulas() {
        let x = make_config(NetworkKind::X, 2, 2, vec![1, 1], vec![1, 1], None).unwrap();
        let rows = total_dof_formulas(&x).unwrap();
        assert_eq!(rows[0].label, "KJN/(K+J-1)");
        assert_eq!(rows[0].value, rat(4, 3));
        assert_eq!(rows[0].witness.as_ref().unwrap()[0], rat(1, 3));
        let rows = total_dof_formulas(&ic(3, 2, 2)).unwrap();
        assert_eq!((rows[0].label.as_str(), rows[0].value.clone()), ("NK/2", rat(3, 1)));
        let simo = make_config(NetworkKind::X, 3, 2, vec![1; 3], vec![2; 2], None).unwrap();
        let rows = total_dof_formulas(&simo).unwrap();
        let row = rows.iter().find(|r| r.label == "NKJ/(K+N(J-1))").unwrap();
        assert_eq!(row.value, rat(12, 5));
        assert_eq!(row.witness.as_ref().unwrap()[0], rat(2, 5));
    }

    #[test]
    fn formula_witnesses_are_members() {
        for cfg in [
            ic(3, 2, 3),
            ic(4, 2, 2),
            make_config(NetworkKind::X, 2, 2, vec![2, 2], vec![2, 2], None).unwrap(),
            make_config(NetworkKind::X, 3, 2, vec![1; 3], vec![2; 2], None).unwrap(),
        ] {
            let region = inner_region(&cfg).unwrap();
            for row in total_dof_formulas(&cfg).unwrap() {
                if let Some(w) = row.witness {
                    assert!(region.contains(&w).unwrap(), "{}", row.label);
                    assert_eq!(w.iter().cloned().sum::<Rational>(), row.value);
                }
            }
        }
    }

    #[test]
    fn x_selector_expansion_and_cap() {
        let x = make_config(NetworkKind::X, 3, 3, vec![1; 3], vec![2; 3], None).unwrap();
        let r = inner_region(&x).unwrap();
        // 3 receivers, each 3^2 selectors
        assert_eq!(r.constraints().unwrap().len(), 2 * 9 + 27);
        let small = inner_region_with_cap(&x, 10).unwrap();
        assert!(!small.is_expanded());
        assert!(small.vertices().is_err());
        let p = vec![rat(1, 5); 9];
        assert_eq!(small.contains(&p).unwrap(), r.contains(&p).unwrap());
    }

    #[test]
    fn vertices_of_pairwise_region() {
        let v = inner_region(&ic(2, 1, 1)).unwrap().vertices().unwrap();
        assert_eq!(v, vec![pt(&[(0, 1), (0, 1)]), pt(&[(0, 1), (1, 1)]), pt(&[(1, 1), (0, 1)])]);
        let csv = inner_region(&ic(2, 1, 1)).unwrap().vertices_csv().unwrap();
        assert!(csv.starts_with("d1,d2\n0,0\n"));
        assert!(!csv.contains('/'));
        let csv = inner_region(&ic(3, 1, 1)).unwrap().vertices_csv().unwrap();
        assert!(csv.lines().any(|l| l == "1/2,1/2,1/2"));
    }

    #[test]
    fn vertex_caps() {
        let r = inner_region(&ic(7, 1, 1)).unwrap();
        assert!(matches!(r.vertices(), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn scaling_doubles_vertices() {
        let a = inner_region(&ic(3, 1, 2)).unwrap().vertices().unwrap();
        let b = inner_region(&ic(3, 2, 4)).unwrap().vertices().unwrap();
        let doubled: Vec<DofPoint> = a.iter().map(|v| v.iter().map(|x| x * rat(2, 1)).collect()).collect();
        assert_eq!(doubled, b);
    }

    #[test]
    fn json_shape() {
        let v = inner_region(&ic(2, 1, 1)).unwrap().to_json();
        assert_eq!(v["variables"], json!(["d1", "d2"]));
        assert_eq!(v["constraints"][4]["coeffs"], json!(["1", "1"]));
        assert_eq!(v["constraints"][4]["rhs"], json!("1"));
    }

    fn point_strategy(dim: usize) -> impl Strategy<Value = DofPoint> {
        proptest::collection::vec((0i64..12, 1i64..7), dim)
            .prop_map(|v| v.into_iter().map(|(a, b)| rat(a, b)).collect())
    }

    proptest! {
        #[test]
        fn expansion_matches_direct_ic(p in point_strategy(3), m in 1usize..4, n in 1usize..4) {
            let r = inner_region(&ic(3, m, n)).unwrap();
            prop_assert_eq!(r.contains(&p).unwrap(), r.contains_direct(&p).unwrap());
        }

        #[test]
        fn expansion_matches_direct_x(p in point_strategy(6)) {
            let x = make_config(NetworkKind::X, 3, 2, vec![1, 2, 1], vec![2, 3], None).unwrap();
            let r = inner_region(&x).unwrap();
            prop_assert_eq!(r.contains(&p).unwrap(), r.contains_direct(&p).unwrap());
        }

        #[test]
        fn expansion_matches_direct_outer(p in point_strategy(4), m in 1usize..4, n in 1usize..4) {
            let r = outer_region(4, m, n).unwrap();
            prop_assert_eq!(r.contains(&p).unwrap(), r.contains_direct(&p).unwrap());
        }

        #[test]
        fn sampled_inner_points_lie_in_outer(p in point_strategy(3)) {
            let inner = inner_region(&ic(3, 2, 3)).unwrap();
            let outer = outer_region(3, 2, 3).unwrap();
            if inner.contains(&p).unwrap() {
                prop_assert!(outer.contains(&p).unwrap());
            }
        }
    }
}
