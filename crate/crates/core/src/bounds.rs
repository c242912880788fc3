//! Bound ingredients and theorem right-hand sides.
//!
//! Sums over task groups run over all `2^M - 1` nonempty subsets of
//! `{0, …, M-1}`, encoded as bitmasks; per-group inputs are stored in a
//! [`GroupTable`] indexed by mask. `(b - a)` is the width of the loss
//! range throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{group_masks, GroupIndex, MAX_ENUMERATED_TASKS};

/// Per-group estimates with standard errors, indexed by group mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTable {
    pub task_count: usize,
    values: Vec<Option<f64>>,
    errors: Vec<f64>,
}

impl GroupTable {
    /// Every group missing.
    pub fn empty(task_count: usize) -> Result<Self> {
        check_m(task_count)?;
        let len = 1usize << task_count;
        Ok(GroupTable {
            task_count,
            values: vec![None; len],
            errors: vec![0.0; len],
        })
    }

    /// Every group set to `value` with zero error.
    pub fn constant(task_count: usize, value: f64) -> Result<Self> {
        let mut t = GroupTable::empty(task_count)?;
        for mask in group_masks(task_count)? {
            t.set(mask, value, 0.0);
        }
        Ok(t)
    }

    pub fn set(&mut self, mask: u32, value: f64, standard_error: f64) {
        self.values[mask as usize] = Some(value);
        self.errors[mask as usize] = standard_error;
    }

    pub fn clear(&mut self, mask: u32) {
        self.values[mask as usize] = None;
    }

    pub fn get(&self, mask: u32) -> Option<f64> {
        self.values.get(mask as usize).copied().flatten()
    }

    pub fn error(&self, mask: u32) -> f64 {
        self.errors[mask as usize]
    }

    /// Masks of groups with no value.
    pub fn missing(&self) -> Vec<u32> {
        (1..self.values.len() as u32).filter(|&m| self.values[m as usize].is_none()).collect()
    }
}

/// A number, or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Value(f64),
    Inconclusive(String),
}

impl Quantity {
    pub fn value(&self) -> Option<f64> {
        match self {
            Quantity::Value(v) => Some(*v),
            Quantity::Inconclusive(_) => None,
        }
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 || m > MAX_ENUMERATED_TASKS {
        return Err(Error::Budget {
            what: "task groups".into(),
            size: m,
            limit: MAX_ENUMERATED_TASKS,
        });
    }
    Ok(())
}

fn check_inputs(xi: &[f64], range: f64) -> Result<()> {
    check_m(xi.len())?;
    if xi.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::config("xi", "thresholds must be positive and finite"));
    }
    if !(range > 0.0) || !range.is_finite() {
        return Err(Error::config("loss", "loss range must be positive"));
    }
    Ok(())
}

fn members(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| mask & (1 << i) != 0)
}

/// Nonempty submasks of `mask`.
fn submasks(mask: u32) -> impl Iterator<Item = u32> {
    let mut sub = mask;
    std::iter::from_fn(move || {
        if sub == 0 {
            return None;
        }
        let out = sub;
        sub = (sub - 1) & mask;
        Some(out)
    })
}

fn gamma_over(mask: u32, xi: &[f64], range: f64, squared_sum: bool) -> f64 {
    submasks(mask)
        .map(|s| {
            let m = s.count_ones() as f64;
            let denom = if squared_sum {
                members(s).map(|i| xi[i]).sum::<f64>().powi(2)
            } else {
                members(s).map(|i| xi[i] * xi[i]).sum::<f64>()
            };
            m * range * range / denom
        })
        .sum()
}

fn full_mask(m: usize) -> u32 {
    ((1u64 << m) - 1) as u32
}

/// `Γ(Λ) = Σ_S |S|(b-a)² / Σ_{i∈S} ξ_i²`.
pub fn gamma_lambda(xi: &[f64], range: f64) -> Result<f64> {
    check_inputs(xi, range)?;
    Ok(gamma_over(full_mask(xi.len()), xi, range, false))
}

/// `Γ₂ = Σ_S |S|(b-a)² / (Σ_{i∈S} ξ_i)²`.
pub fn gamma2(xi: &[f64], range: f64) -> Result<f64> {
    check_inputs(xi, range)?;
    Ok(gamma_over(full_mask(xi.len()), xi, range, true))
}

/// Sum of a group table over the nonempty submasks of `mask`, with the
/// standard error of the sum (errors treated as independent).
fn table_sum(table: &GroupTable, mask: u32) -> std::result::Result<(f64, f64), String> {
    let mut total = 0.0;
    let mut var = 0.0;
    let mut missing = Vec::new();
    for s in submasks(mask) {
        match table.get(s) {
            Some(v) => {
                total += v;
                var += table.error(s).powi(2);
            }
            None => missing.push(s),
        }
    }
    if missing.is_empty() {
        Ok((total, var.sqrt()))
    } else {
        missing.sort_unstable();
        let names: Vec<String> = missing
            .iter()
            .map(|&s| GroupIndex::from_mask(table.task_count, s).map_or_else(|_| format!("{s:#b}"), |g| g.to_string()))
            .collect();
        Err(format!("undefined estimate for groups {}", names.join(", ")))
    }
}

/// `Υ(Λ) = Σ_S φ(S)`; inconclusive if any group lacks an estimate.
pub fn upsilon_lambda(phi: &GroupTable) -> Quantity {
    match table_sum(phi, full_mask(phi.task_count)) {
        Ok((v, _)) => Quantity::Value(v),
        Err(reason) => Quantity::Inconclusive(reason),
    }
}

/// `Υ(Λ)` with its standard error.
pub fn upsilon_with_error(phi: &GroupTable) -> std::result::Result<(f64, f64), String> {
    table_sum(phi, full_mask(phi.task_count))
}

/// Symmetric table of pairwise covariances; only `i < j` entries are read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTable {
    pub task_count: usize,
    values: Vec<Option<f64>>,
}

impl PairTable {
    pub fn empty(task_count: usize) -> Self {
        PairTable {
            task_count,
            values: vec![None; task_count * task_count],
        }
    }

    pub fn zeros(task_count: usize) -> Self {
        let mut t = PairTable::empty(task_count);
        for i in 0..task_count {
            for j in i + 1..task_count {
                t.set(i, j, 0.0);
            }
        }
        t
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (a, b) = (i.min(j), i.max(j));
        self.values[a * self.task_count + b] = Some(value);
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (a, b) = (i.min(j), i.max(j));
        self.values[a * self.task_count + b]
    }
}

/// `Υ₂ = Σ_S 8 Σ_{i<j∈S} Cov(i, j) / (Σ_{i∈S} ξ_i)²`.
pub fn upsilon2(cov: &PairTable, xi: &[f64]) -> Result<Quantity> {
    check_inputs(xi, 1.0)?;
    if cov.task_count != xi.len() {
        return Err(Error::config("covariance", "pair table size does not match ξ"));
    }
    let mut total = 0.0;
    for s in group_masks(xi.len())? {
        let idx: Vec<usize> = members(s).collect();
        let mut pair_sum = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                match cov.get(i, j) {
                    Some(c) => pair_sum += c,
                    None => return Ok(Quantity::Inconclusive(format!("missing covariance for tasks {} and {}", i + 1, j + 1))),
                }
            }
        }
        let denom = idx.iter().map(|&i| xi[i]).sum::<f64>().powi(2);
        total += 8.0 * pair_sum / denom;
    }
    Ok(Quantity::Value(total))
}

/// Outcome of a sample-size condition `N ≥ N_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "status", content = "n_min")]
pub enum Condition {
    Satisfied(f64),
    Violated(f64),
    /// The denominator `1 - 2Υ` is not positive, so no `N` qualifies.
    Unsatisfiable,
    Inconclusive,
}

impl Condition {
    pub fn holds(&self) -> bool {
        matches!(self, Condition::Satisfied(_))
    }

    pub fn n_min(&self) -> Option<f64> {
        match self {
            Condition::Satisfied(n) | Condition::Violated(n) => Some(*n),
            _ => None,
        }
    }
}

/// `N ≥ 8Γ / (1 - 2Υ)`.
pub fn sample_condition(n: usize, gamma: f64, upsilon: Option<f64>) -> Condition {
    let Some(u) = upsilon else {
        return Condition::Inconclusive;
    };
    let denom = 1.0 - 2.0 * u;
    if denom <= 0.0 {
        return Condition::Unsatisfiable;
    }
    let n_min = 8.0 * gamma / denom;
    if n as f64 >= n_min {
        Condition::Satisfied(n_min)
    } else {
        Condition::Violated(n_min)
    }
}

/// `2^{M+2} · exp(ln_cover) · exp(-N Σ ξ_m² / (32 M² (b-a)²))`, the common
/// right-hand side of the large-deviation and covariance bounds.
/// `ln_cover` is the log product-cover number at radius `ξ/8` on `2N`
/// samples.
pub fn thm1_rhs(n: usize, xi: &[f64], range: f64, ln_cover: f64) -> Result<f64> {
    check_inputs(xi, range)?;
    let m = xi.len() as f64;
    let sq: f64 = xi.iter().map(|x| x * x).sum();
    let expo = -(n as f64) * sq / (32.0 * m * m * range * range);
    Ok(2f64.powi(xi.len() as i32 + 2) * ln_cover.exp() * expo.exp())
}

/// `2^M · max_f Pr{s ≤ 2ξ}`.
pub fn thm2_rhs(factors: &[f64], task_count: usize) -> Result<f64> {
    check_m(task_count)?;
    if factors.is_empty() {
        return Err(Error::config("factors", "need at least one candidate factor"));
    }
    if factors.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Domain("probability factors must lie in [0, 1]".into()));
    }
    Ok(2f64.powi(task_count as i32) * factors.iter().copied().fold(0.0, f64::max))
}

/// `(8(b-a)²/ξ², 8(b-a)² / (((2^M-1)^{-1} + 2) ξ²))`.
pub fn stl_and_remark3_thresholds(task_count: usize, range: f64, xi_min: f64) -> Result<(f64, f64)> {
    if !(xi_min > 0.0) {
        return Err(Error::config("xi", "threshold must be positive"));
    }
    if task_count == 0 || task_count > 62 {
        return Err(Error::config("task_count", "must be in 1..=62"));
    }
    let r2 = range * range;
    let stl = 8.0 * r2 / (xi_min * xi_min);
    let groups = ((1u64 << task_count) - 1) as f64;
    let remark3 = 8.0 * r2 / ((1.0 / groups + 2.0) * xi_min * xi_min);
    Ok((stl, remark3))
}

/// Per-group inputs of the consistency bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm3Inputs {
    pub n: usize,
    pub xi: Vec<f64>,
    pub range: f64,
    /// EDDM per group.
    pub eddm: GroupTable,
    /// Log product-cover number of each group's projection (radius `ξ/8`,
    /// `2N` samples).
    pub ln_cover: GroupTable,
    /// `Pr{s_λ ≤ 2ξ_λ, λ ∉ S}` keyed by the group `S`; the full group's
    /// complement is empty, so its factor is 1.
    pub complement_factor: GroupTable,
}

/// Sum over groups `S` of
/// `2^|S| · Pr{s_λ ≤ 2ξ_λ, λ ∉ S} · (φ^N(S) + 2^{|S|+2} 𝒩(S) exp(-N Σ_{λ∈S} ξ_λ² / (32 M² (b-a)²)))`.
///
/// Returns the raw sum, which can be negative when EDDM terms are; callers
/// compare probabilities against `max(raw, 0)`.
pub fn thm3_rhs(inputs: &Thm3Inputs) -> Result<Quantity> {
    check_inputs(&inputs.xi, inputs.range)?;
    let m = inputs.xi.len();
    let mm = m as f64;
    let mut total = 0.0;
    let mut missing = Vec::new();
    for s in group_masks(m)? {
        let size = s.count_ones() as i32;
        let factor = if s == full_mask(m) { Some(1.0) } else { inputs.complement_factor.get(s) };
        let (Some(factor), Some(phi), Some(ln_cover)) = (factor, inputs.eddm.get(s), inputs.ln_cover.get(s)) else {
            missing.push(GroupIndex::from_mask(m, s)?.to_string());
            continue;
        };
        let sq: f64 = members(s).map(|i| inputs.xi[i].powi(2)).sum();
        let expo = -(inputs.n as f64) * sq / (32.0 * mm * mm * inputs.range * inputs.range);
        total += 2f64.powi(size) * factor * (phi + 2f64.powi(size + 2) * ln_cover.exp() * expo.exp());
    }
    if missing.is_empty() {
        Ok(Quantity::Value(total))
    } else {
        Ok(Quantity::Inconclusive(format!("missing inputs for groups {}", missing.join(", "))))
    }
}

/// `N ≥ max_S 8Γ(S) / (1 - 2Υ(S))`, each `Γ(S)`, `Υ(S)` summed over the
/// nonempty subsets of `S`.
pub fn thm3_condition(n: usize, xi: &[f64], range: f64, phi: &GroupTable) -> Result<Condition> {
    check_inputs(xi, range)?;
    let mut worst: Option<f64> = None;
    for s in group_masks(xi.len())? {
        let gamma = gamma_over(s, xi, range, false);
        let upsilon = match table_sum(phi, s) {
            Ok((v, _)) => v,
            Err(_) => return Ok(Condition::Inconclusive),
        };
        match sample_condition(n, gamma, Some(upsilon)) {
            Condition::Unsatisfiable => return Ok(Condition::Unsatisfiable),
            c => {
                let need = c.n_min().expect("finite requirement");
                worst = Some(worst.map_or(need, |w: f64| w.max(need)));
            }
        }
    }
    let need = worst.expect("at least one group");
    Ok(if n as f64 >= need {
        Condition::Satisfied(need)
    } else {
        Condition::Violated(need)
    })
}

/// Three-state verdict of the finite-sample trend and validity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// One EDDM (or other) measurement at sample size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub n: usize,
    pub value: Option<f64>,
    pub standard_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Consistency {
    ConsistentTrend,
    NotConsistent,
    Inconclusive,
}

/// Finite-sample surrogate for the limit condition: over increasing `N`,
/// every group's `|EDDM|` must be non-increasing within three combined
/// standard errors and `ln 𝒩 / N` must be non-increasing.
pub fn consistency_trend(eddm: &[Vec<TrendPoint>], ln_cover: &[Vec<(usize, f64)>]) -> Consistency {
    let mut inconclusive = false;
    for series in eddm {
        if series.len() < 3 || series.windows(2).any(|w| w[0].n >= w[1].n) {
            inconclusive = true;
            continue;
        }
        for w in series.windows(2) {
            let (Some(a), Some(b)) = (w[0].value, w[1].value) else {
                inconclusive = true;
                continue;
            };
            if b.abs() > a.abs() + 3.0 * (w[0].standard_error + w[1].standard_error) {
                return Consistency::NotConsistent;
            }
        }
    }
    for series in ln_cover {
        if series.len() < 3 {
            inconclusive = true;
            continue;
        }
        for w in series.windows(2) {
            if w[1].1 / w[1].0 as f64 > w[0].1 / w[0].0 as f64 + 1e-12 {
                return Consistency::NotConsistent;
            }
        }
    }
    if inconclusive {
        Consistency::Inconclusive
    } else {
        Consistency::ConsistentTrend
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suitability {
    Suitable,
    Unsuitable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub verdict: Suitability,
    pub reasons: Vec<String>,
}

/// Whether a combination of tasks suits simultaneous learning: requires
/// `Υ < 1/2` and, for every group, EDDM `≤ 0` shrinking to zero with `N`.
/// Each rule passes or fails only when three standard errors clear the
/// threshold.
pub fn validity_check(upsilon: Option<(f64, f64)>, eddm: &[(String, Vec<TrendPoint>)]) -> ValidityReport {
    let mut reasons = Vec::new();
    let rule1 = match upsilon {
        None => {
            reasons.push("Υ undefined: some group estimate is missing".to_string());
            Verdict::Inconclusive
        }
        Some((u, se)) if u + 3.0 * se < 0.5 => {
            reasons.push(format!("Υ = {u:.4} ± {se:.4} < 1/2"));
            Verdict::Pass
        }
        Some((u, se)) if u - 3.0 * se >= 0.5 => {
            reasons.push(format!("Υ ≥ 1/2 (Υ = {u:.4} ± {se:.4})"));
            Verdict::Fail
        }
        Some((u, se)) => {
            reasons.push(format!("Υ = {u:.4} ± {se:.4} straddles 1/2"));
            Verdict::Inconclusive
        }
    };
    let mut rule2 = Verdict::Pass;
    for (name, series) in eddm {
        if series.len() < 3 {
            reasons.push(format!("group {name}: fewer than 3 sample sizes"));
            rule2 = worse(rule2, Verdict::Inconclusive);
            continue;
        }
        if series.iter().any(|p| p.value.is_none()) {
            reasons.push(format!("group {name}: undefined EDDM"));
            rule2 = worse(rule2, Verdict::Inconclusive);
            continue;
        }
        if let Some(p) = series.iter().find(|p| p.value.unwrap() - 3.0 * p.standard_error > 0.0) {
            reasons.push(format!("group {name}: EDDM > 0 at N = {} ({:.4})", p.n, p.value.unwrap()));
            rule2 = worse(rule2, Verdict::Fail);
            continue;
        }
        let last = series.last().unwrap();
        if last.value.unwrap().abs() > 3.0 * last.standard_error {
            reasons.push(format!("group {name}: EDDM not yet within error of 0 at N = {}", last.n));
            rule2 = worse(rule2, Verdict::Inconclusive);
        }
    }
    if rule2 == Verdict::Pass {
        reasons.push("every EDDM ≤ 0 and vanishing".to_string());
    }
    let verdict = match worse(rule1, rule2) {
        Verdict::Pass => Suitability::Suitable,
        Verdict::Fail => Suitability::Unsuitable,
        Verdict::Inconclusive => Suitability::Inconclusive,
    };
    ValidityReport { verdict, reasons }
}

fn worse(a: Verdict, b: Verdict) -> Verdict {
    match (a, b) {
        (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
        (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
        _ => Verdict::Pass,
    }
}

/// Everything a bound report is computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    pub xi: Vec<f64>,
    pub oddm: GroupTable,
    pub covariance: PairTable,
    /// Log product-cover numbers of every group projection; the full
    /// group's entry feeds the large-deviation bounds.
    pub ln_cover: GroupTable,
    pub thm3: Thm3Inputs,
    /// `max_f Pr{s ≤ 2ξ}` over all tasks.
    pub small_prob: Option<f64>,
    /// Group sums run over cluster representatives rather than tasks.
    #[serde(default)]
    pub clustered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub task_count: usize,
    pub n: usize,
    pub xi: Vec<f64>,
    pub gamma: f64,
    pub gamma2: f64,
    pub upsilon: Quantity,
    pub upsilon_standard_error: Option<f64>,
    pub upsilon2: Quantity,
    pub thm1_rhs: Quantity,
    pub thm2_rhs: Quantity,
    pub thm3_rhs: Quantity,
    pub thm4_rhs: Quantity,
    pub thm1_condition: Condition,
    pub thm3_condition: Condition,
    pub thm4_condition: Condition,
    pub stl_threshold: f64,
    pub remark3_threshold: f64,
    /// `(2^M - 1) / (1 - 2Υ) < 1`: fewer samples needed than a single task.
    pub fewer_samples_than_stl: Option<bool>,
    pub vacuous: Vec<String>,
    pub clustered: bool,
    pub notes: Vec<String>,
}

impl BoundReport {
    /// Header of [`BoundReport::csv_row`].
    pub const CSV_HEADER: &'static str = "task_count,n,xi_min,gamma,gamma2,upsilon,upsilon2,thm1_rhs,thm2_rhs,thm3_rhs,thm4_rhs,n_min_thm1,n_min_thm4,thm1_condition,thm4_condition,stl_threshold,remark3_threshold";

    pub fn csv_row(&self) -> String {
        fn q(v: &Quantity) -> String {
            v.value().map_or_else(|| "NA".to_string(), |x| format!("{x:e}"))
        }
        fn c(v: &Condition) -> (String, &'static str) {
            match v {
                Condition::Satisfied(n) => (format!("{n:e}"), "satisfied"),
                Condition::Violated(n) => (format!("{n:e}"), "violated"),
                Condition::Unsatisfiable => ("unsatisfiable".into(), "unsatisfiable"),
                Condition::Inconclusive => ("NA".into(), "inconclusive"),
            }
        }
        let (n1, s1) = c(&self.thm1_condition);
        let (n4, s4) = c(&self.thm4_condition);
        let xi_min = self.xi.iter().copied().fold(f64::INFINITY, f64::min);
        format!(
            "{},{},{:e},{:e},{:e},{},{},{},{},{},{},{},{},{},{},{:e},{:e}",
            self.task_count,
            self.n,
            xi_min,
            self.gamma,
            self.gamma2,
            q(&self.upsilon),
            q(&self.upsilon2),
            q(&self.thm1_rhs),
            q(&self.thm2_rhs),
            q(&self.thm3_rhs),
            q(&self.thm4_rhs),
            n1,
            n4,
            s1,
            s4,
            self.stl_threshold,
            self.remark3_threshold
        )
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Evaluates every bound quantity.
pub fn evaluate(inputs: &BoundInputs) -> Result<BoundReport> {
    let range = inputs.upper - inputs.lower;
    check_inputs(&inputs.xi, range)?;
    let m = inputs.xi.len();
    if inputs.oddm.task_count != m || inputs.ln_cover.task_count != m {
        return Err(Error::config("inputs", "group tables do not match ξ"));
    }
    let gamma = gamma_lambda(&inputs.xi, range)?;
    let g2 = gamma2(&inputs.xi, range)?;
    let (upsilon, upsilon_se) = match upsilon_with_error(&inputs.oddm) {
        Ok((v, se)) => (Quantity::Value(v), Some(se)),
        Err(reason) => (Quantity::Inconclusive(reason), None),
    };
    let ups2 = upsilon2(&inputs.covariance, &inputs.xi)?;
    let full = full_mask(m);
    let large = match inputs.ln_cover.get(full) {
        Some(ln) => Quantity::Value(thm1_rhs(inputs.n, &inputs.xi, range, ln)?),
        None => Quantity::Inconclusive("missing cover number of the full class".into()),
    };
    let thm2 = match inputs.small_prob {
        Some(p) => Quantity::Value(thm2_rhs(&[p], m)?),
        None => Quantity::Inconclusive("missing small-deviation factor".into()),
    };
    let thm3 = thm3_rhs(&inputs.thm3)?;
    let thm1_condition = sample_condition(inputs.n, gamma, upsilon.value());
    let thm4_condition = match (upsilon.value(), ups2.value()) {
        (Some(u), Some(u2)) => sample_condition(inputs.n, g2, Some(u + u2)),
        _ => Condition::Inconclusive,
    };
    let thm3_condition = thm3_condition(inputs.n, &inputs.xi, range, &inputs.oddm)?;
    let xi_min = inputs.xi.iter().copied().fold(f64::INFINITY, f64::min);
    let (stl, remark3) = stl_and_remark3_thresholds(m, range, xi_min)?;
    let fewer = upsilon.value().map(|u| {
        let denom = 1.0 - 2.0 * u;
        denom > 0.0 && ((1u64 << m) - 1) as f64 / denom < 1.0
    });
    let mut vacuous = Vec::new();
    for (name, q) in [("thm1", &large), ("thm2", &thm2), ("thm3", &thm3), ("thm4", &large)] {
        if q.value().is_some_and(|v| v >= 1.0) {
            vacuous.push(name.to_string());
        }
    }
    let mut notes = vec![
        "suprema are taken over a finite candidate set, so measured probabilities are lower bounds of the class-wide ones".to_string(),
        "entropy numbers maximize over finitely many sample draws and under-estimate the supremum over sample sets".to_string(),
    ];
    if m == 1 {
        notes.push(
            "with one task the covariance form has no pairs (Υ₂ = 0); it reproduces the single-task bound only because the self-covariance term is absent"
                .to_string(),
        );
    }
    if inputs.clustered {
        notes.push("group sums run over cluster representatives (clustered approximation)".to_string());
    }
    Ok(BoundReport {
        task_count: m,
        n: inputs.n,
        xi: inputs.xi.clone(),
        gamma,
        gamma2: g2,
        upsilon,
        upsilon_standard_error: upsilon_se,
        upsilon2: ups2,
        thm1_rhs: large.clone(),
        thm2_rhs: thm2,
        thm3_rhs: thm3,
        thm4_rhs: large,
        thm1_condition,
        thm3_condition,
        thm4_condition,
        stl_threshold: stl,
        remark3_threshold: remark3,
        fewer_samples_than_stl: fewer,
        vacuous,
        clustered: inputs.clustered,
        notes,
    })
}
