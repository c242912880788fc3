//! Constrained linear hypothesis classes.
//!
//! A [`HypothesisVector`] holds one weight vector per task. The joint
//! search space is cut down by a per-task norm bound `‖w_m‖ ≤ B` and a
//! coupling constraint of budget `c`:
//!
//! * mean-coupled: `Σ_m ‖w_m - w̄‖² ≤ c`,
//! * norm-ball: `Σ_m ‖w_m‖² ≤ c`.
//!
//! Suprema over the class are approximated by maxima over a finite
//! [`CandidateSet`], which lower-bounds every supremum.

use std::io::{BufRead, Write};

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupIndex;
use crate::seed::{self, streams};
use crate::task::LossSpec;

/// Slack allowed by the membership test.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Candidates closer than this in stacked-weight space are duplicates.
pub const DEDUP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisVector {
    task_count: usize,
    dim: usize,
    weights: Vec<f64>,
}

impl HypothesisVector {
    pub fn zeros(task_count: usize, dim: usize) -> Self {
        HypothesisVector {
            task_count,
            dim,
            weights: vec![0.0; task_count * dim],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let task_count = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        if task_count == 0 || dim == 0 {
            return Err(Error::config("weights", "need at least one task and one dimension"));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::config("weights", "every task needs the same dimension"));
        }
        Ok(HypothesisVector {
            task_count,
            dim,
            weights: rows.concat(),
        })
    }

    pub fn from_flat(task_count: usize, dim: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != task_count * dim {
            return Err(Error::config("weights", format!("expected {} values, got {}", task_count * dim, weights.len())));
        }
        Ok(HypothesisVector { task_count, dim, weights })
    }

    pub fn task_count(&self) -> usize {
        self.task_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn task(&self, m: usize) -> &[f64] {
        &self.weights[m * self.dim..(m + 1) * self.dim]
    }

    #[inline]
    pub fn task_mut(&mut self, m: usize) -> &mut [f64] {
        &mut self.weights[m * self.dim..(m + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.weights.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for m in 0..self.task_count {
            for (a, w) in mean.iter_mut().zip(self.task(m)) {
                *a += w;
            }
        }
        let inv = 1.0 / self.task_count as f64;
        mean.iter_mut().for_each(|a| *a *= inv);
        mean
    }

    pub fn distance(&self, other: &HypothesisVector) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        sq_norm(&self.weights)
    }
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    MeanCoupled,
    NormBall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedClass {
    /// Per-task bound `B` on `‖w_m‖₂`.
    pub base_radius: f64,
    pub coupling: Coupling,
    /// Coupling budget `c`.
    pub budget: f64,
    #[serde(default)]
    pub loss: LossSpec,
}

impl ConstrainedClass {
    pub fn new(base_radius: f64, coupling: Coupling, budget: f64, loss: LossSpec) -> Result<Self> {
        let class = ConstrainedClass {
            base_radius,
            coupling,
            budget,
            loss,
        };
        class.validate()?;
        Ok(class)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_radius >= 0.0 && self.base_radius.is_finite()) {
            return Err(Error::config("base_radius", "must be finite and nonnegative"));
        }
        if !(self.budget >= 0.0) || self.budget.is_nan() {
            return Err(Error::config("budget", "coupling budget must be nonnegative"));
        }
        self.loss.validate()
    }

    /// Left-hand side of the coupling constraint.
    pub fn coupling_value(&self, h: &HypothesisVector) -> f64 {
        match self.coupling {
            Coupling::NormBall => h.norm_sq(),
            Coupling::MeanCoupled => {
                let mean = h.mean();
                (0..h.task_count())
                    .map(|m| h.task(m).iter().zip(&mean).map(|(w, c)| (w - c) * (w - c)).sum::<f64>())
                    .sum()
            }
        }
    }

    fn contains_within(&self, h: &HypothesisVector, tol: f64) -> bool {
        let b2 = self.base_radius * self.base_radius;
        (0..h.task_count()).all(|m| sq_norm(h.task(m)).sqrt() <= self.base_radius + tol || sq_norm(h.task(m)) <= b2)
            && self.coupling_value(h) <= self.budget + tol
    }

    /// Exact membership test with slack [`MEMBERSHIP_TOL`].
    pub fn contains(&self, h: &HypothesisVector) -> bool {
        self.contains_within(h, MEMBERSHIP_TOL)
    }

    /// Largest relative slack at which some constraint is active: `true`
    /// when `h` lies within `rel` of an active constraint.
    pub fn near_boundary(&self, h: &HypothesisVector, rel: f64) -> bool {
        let ball = (0..h.task_count()).any(|m| sq_norm(h.task(m)).sqrt() >= (1.0 - rel) * self.base_radius);
        let coupling = self.coupling_value(h) >= (1.0 - rel) * self.budget;
        ball || coupling
    }
}

/// Euclidean projection onto the class.
///
/// The norm-ball kind has a closed form (per-task radial shrinkage with a
/// common multiplier). The mean-coupled kind alternates the two exact
/// projections with Dykstra's correction and finishes with an exact
/// feasibility repair along the segment to a feasible anchor.
pub fn project_to_class(raw: &HypothesisVector, class: &ConstrainedClass) -> HypothesisVector {
    if class.contains_within(raw, 1e-12) {
        return raw.clone();
    }
    match class.coupling {
        Coupling::NormBall => project_norm_ball(raw, class.base_radius, class.budget),
        Coupling::MeanCoupled => project_mean_coupled(raw, class.base_radius, class.budget),
    }
}

fn project_norm_ball(raw: &HypothesisVector, radius: f64, budget: f64) -> HypothesisVector {
    let norms: Vec<f64> = (0..raw.task_count()).map(|m| sq_norm(raw.task(m)).sqrt()).collect();
    let target = |t: f64| -> f64 { norms.iter().map(|&r| (t * r).min(radius).powi(2)).sum() };
    // r_m = min(B, t ρ_m) with t = 1/(1+λ); t = 1 when the budget is slack
    let t = if target(1.0) <= budget {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if target(mid) <= budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let mut out = raw.clone();
    for (m, &rho) in norms.iter().enumerate() {
        if rho > 0.0 {
            let scale = (t * rho).min(radius) / rho;
            out.task_mut(m).iter_mut().for_each(|w| *w *= scale);
        }
    }
    out
}

fn project_balls(h: &mut HypothesisVector, radius: f64) {
    for m in 0..h.task_count() {
        let n = sq_norm(h.task(m)).sqrt();
        if n > radius {
            let s = if n > 0.0 { radius / n } else { 0.0 };
            h.task_mut(m).iter_mut().for_each(|w| *w *= s);
        }
    }
}

fn project_spread(h: &mut HypothesisVector, budget: f64) {
    let mean = h.mean();
    let spread: f64 = (0..h.task_count())
        .map(|m| h.task(m).iter().zip(&mean).map(|(w, c)| (w - c) * (w - c)).sum::<f64>())
        .sum();
    if spread > budget {
        let s = if spread > 0.0 { (budget / spread).sqrt() } else { 0.0 };
        for m in 0..h.task_count() {
            for (w, c) in h.task_mut(m).iter_mut().zip(&mean) {
                *w = c + s * (*w - c);
            }
        }
    }
}

fn project_mean_coupled(raw: &HypothesisVector, radius: f64, budget: f64) -> HypothesisVector {
    let len = raw.as_slice().len();
    let mut x = raw.clone();
    let mut p = vec![0.0; len];
    let mut q = vec![0.0; len];
    for _ in 0..20_000 {
        let prev = x.clone();
        // y = P_spread(x + p)
        let mut y = x.clone();
        y.as_mut_slice().iter_mut().zip(&p).for_each(|(a, b)| *a += b);
        let pre_y = y.clone();
        project_spread(&mut y, budget);
        p.iter_mut()
            .zip(pre_y.as_slice().iter().zip(y.as_slice()))
            .for_each(|(pi, (a, b))| *pi = a - b);
        // x = P_balls(y + q)
        let mut z = y.clone();
        z.as_mut_slice().iter_mut().zip(&q).for_each(|(a, b)| *a += b);
        let pre_z = z.clone();
        project_balls(&mut z, radius);
        q.iter_mut()
            .zip(pre_z.as_slice().iter().zip(z.as_slice()))
            .for_each(|(qi, (a, b))| *qi = a - b);
        x = z;
        if x.distance(&prev) <= 1e-15 * (1.0 + x.norm_sq().sqrt()) {
            break;
        }
    }
    repair_mean_coupled(x, radius, budget)
}

/// Pulls `x` toward the feasible anchor `(P_B(x̄), …, P_B(x̄))` just far
/// enough to satisfy both constraints exactly.
fn repair_mean_coupled(x: HypothesisVector, radius: f64, budget: f64) -> HypothesisVector {
    let mut anchor = x.mean();
    let an = sq_norm(&anchor).sqrt();
    if an > radius {
        let s = if an > 0.0 { radius / an } else { 0.0 };
        anchor.iter_mut().for_each(|a| *a *= s);
    }
    let mut t: f64 = 1.0;
    let spread: f64 = {
        let mean = x.mean();
        (0..x.task_count())
            .map(|m| x.task(m).iter().zip(&mean).map(|(w, c)| (w - c) * (w - c)).sum::<f64>())
            .sum()
    };
    if spread > budget {
        t = t.min((budget / spread).sqrt());
    }
    for m in 0..x.task_count() {
        // ‖a + t d‖² ≤ B², d = x_m - a
        let d: Vec<f64> = x.task(m).iter().zip(&anchor).map(|(w, a)| w - a).collect();
        let qa = sq_norm(&d);
        if qa == 0.0 {
            continue;
        }
        let qb = 2.0 * anchor.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
        let qc = sq_norm(&anchor) - radius * radius;
        if qa + qb + qc > 0.0 {
            let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
            let root = (-qb + disc.sqrt()) / (2.0 * qa);
            t = t.min(root.max(0.0));
        }
    }
    if t >= 1.0 {
        return x;
    }
    let mut out = x.clone();
    for m in 0..x.task_count() {
        for (w, a) in out.task_mut(m).iter_mut().zip(&anchor) {
            *w = a + t * (*w - a);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    RandomSample,
    CoverDerived,
    SolverPath,
    Imported,
}

/// Finite, deduplicated subset of a constrained class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    members: Vec<HypothesisVector>,
    provenance: Vec<Provenance>,
}

impl CandidateSet {
    pub fn empty() -> Self {
        CandidateSet {
            members: Vec::new(),
            provenance: Vec::new(),
        }
    }

    /// Builds a set from explicit members, rejecting any outside the class
    /// and silently dropping duplicates.
    pub fn from_members(class: &ConstrainedClass, members: Vec<HypothesisVector>, provenance: Provenance) -> Result<Self> {
        let mut set = CandidateSet::empty();
        for h in members {
            set.push(class, h, provenance)?;
        }
        Ok(set)
    }

    /// Adds a member; returns `false` when it duplicates an existing one.
    pub fn push(&mut self, class: &ConstrainedClass, h: HypothesisVector, provenance: Provenance) -> Result<bool> {
        if !class.contains(&h) {
            return Err(Error::Domain("candidate lies outside the constrained class".into()));
        }
        if let Some(first) = self.members.first() {
            if first.task_count() != h.task_count() || first.dim() != h.dim() {
                return Err(Error::config("candidates", "all candidates must share task count and dimension"));
            }
        }
        if self.members.iter().any(|g| g.distance(&h) <= DEDUP_TOL) {
            return Ok(false);
        }
        self.members.push(h);
        self.provenance.push(provenance);
        Ok(true)
    }

    pub fn members(&self) -> &[HypothesisVector] {
        &self.members
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn task_count(&self) -> usize {
        self.members.first().map_or(0, HypothesisVector::task_count)
    }

    pub fn dim(&self) -> usize {
        self.members.first().map_or(0, HypothesisVector::dim)
    }

    /// Weights of task `m` for every member, in member order.
    pub fn components(&self, m: usize) -> Vec<&[f64]> {
        self.members.iter().map(|h| h.task(m)).collect()
    }

    /// Members at the given indices, relabeled with `provenance`.
    pub fn subset(&self, indices: &[usize], provenance: Provenance) -> Self {
        CandidateSet {
            members: indices.iter().map(|&i| self.members[i].clone()).collect(),
            provenance: vec![provenance; indices.len()],
        }
    }

    /// Components of the listed tasks only, deduplicated. The result is a
    /// projection of the class, so membership is not rechecked.
    pub(crate) fn project_tasks(&self, tasks: &[usize]) -> Self {
        let mut out = CandidateSet::empty();
        for (h, &prov) in self.members.iter().zip(&self.provenance) {
            let rows = tasks.iter().map(|&m| h.task(m).to_vec()).collect();
            let g = HypothesisVector::from_rows(rows).expect("nonempty projection");
            if out.members.iter().all(|o| o.distance(&g) > DEDUP_TOL) {
                out.members.push(g);
                out.provenance.push(prov);
            }
        }
        out
    }

    /// CSV with header `candidate,task,w0..w{d-1}`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = String::from("candidate,task");
        for k in 0..self.dim() {
            header.push_str(&format!(",w{k}"));
        }
        writeln!(w, "{header}")?;
        for (c, h) in self.members.iter().enumerate() {
            for m in 0..h.task_count() {
                write!(w, "{c},{m}")?;
                for v in h.task(m) {
                    write!(w, ",{v:?}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }

    /// Reads the CSV layout of [`CandidateSet::write_csv`]; every member
    /// must lie in `class`.
    pub fn read_csv<R: BufRead>(reader: R, class: &ConstrainedClass) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty candidate file".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 3 || cols[0] != "candidate" || cols[1] != "task" {
            return Err(Error::Parse(format!("unexpected candidate header `{header}`")));
        }
        let dim = cols.len() - 2;
        let mut rows: Vec<(usize, usize, Vec<f64>)> = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != dim + 2 {
                return Err(Error::Parse(format!("line {}: expected {} fields", k + 2, dim + 2)));
            }
            let parse_idx = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("line {}: {e}", k + 2)));
            let c = parse_idx(fields[0])?;
            let m = parse_idx(fields[1])?;
            let w = fields[2..]
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", k + 2))))
                .collect::<Result<Vec<_>>>()?;
            rows.push((c, m, w));
        }
        let n_cand = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
        let n_task = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
        let mut grid: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; n_task]; n_cand];
        for (c, m, w) in rows {
            if grid[c][m].replace(w).is_some() {
                return Err(Error::Parse(format!("duplicate row for candidate {c}, task {m}")));
            }
        }
        let mut set = CandidateSet::empty();
        for (c, tasks) in grid.into_iter().enumerate() {
            let rows = tasks
                .into_iter()
                .enumerate()
                .map(|(m, w)| w.ok_or_else(|| Error::Parse(format!("candidate {c} lacks task {m}"))))
                .collect::<Result<Vec<_>>>()?;
            set.push(class, HypothesisVector::from_rows(rows)?, Provenance::Imported)?;
        }
        Ok(set)
    }
}

/// Samples `count` members of the class: Gaussian raw points, projected.
///
/// Even-indexed draws are pushed outward until infeasible before projecting,
/// so they land on the boundary; odd-indexed draws stay near the origin.
/// Duplicates are redrawn, so degenerate classes (e.g. a single feasible
/// point) return fewer than `count` members.
pub fn sample_class(class: &ConstrainedClass, task_count: usize, dim: usize, count: usize, seed: u64) -> Result<CandidateSet> {
    class.validate()?;
    if count == 0 {
        return Err(Error::config("count", "must be at least 1"));
    }
    if task_count == 0 || dim == 0 {
        return Err(Error::config("task_count", "task count and dimension must be positive"));
    }
    let scale = match class.coupling {
        Coupling::NormBall => class.base_radius.min((class.budget / task_count as f64).sqrt()),
        Coupling::MeanCoupled => class.base_radius,
    };
    let per_coord = scale / (dim as f64).sqrt();
    let mut rng = seed::rng(seed::derive_seed(seed, streams::CLASS_SAMPLE));
    let mut set = CandidateSet::empty();
    let mut draw = 0usize;
    let max_draws = 20 * count + 20;
    while set.len() < count && draw < max_draws {
        let outward = draw % 2 == 0;
        draw += 1;
        let spread = if outward { 2.0 } else { 0.35 };
        let mut raw = HypothesisVector::zeros(task_count, dim);
        raw.as_mut_slice()
            .iter_mut()
            .for_each(|w| *w = spread * per_coord * rng.sample::<f64, _>(StandardNormal));
        if outward && raw.norm_sq() > 0.0 {
            let mut guard = 0;
            while class.contains_within(&raw, 0.0) && guard < 64 {
                raw.as_mut_slice().iter_mut().for_each(|w| *w *= 2.0);
                guard += 1;
            }
        }
        let h = project_to_class(&raw, class);
        set.push(class, h, Provenance::RandomSample)?;
    }
    Ok(set)
}

/// Per-task component lists of a candidate set restricted to a group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupProjection {
    pub tasks: Vec<usize>,
    /// `components[k][c]` is candidate `c`'s weight vector for `tasks[k]`.
    pub components: Vec<Vec<Vec<f64>>>,
}

pub fn project_group(candidates: &CandidateSet, group: &GroupIndex) -> Result<GroupProjection> {
    if group.is_empty() {
        return Err(Error::Domain("projection onto an empty task group".into()));
    }
    if group.task_count() != candidates.task_count() {
        return Err(Error::config("group", "group and candidates disagree on the task count"));
    }
    Ok(GroupProjection {
        tasks: group.members().to_vec(),
        components: group
            .members()
            .iter()
            .map(|&m| candidates.components(m).into_iter().map(<[f64]>::to_vec).collect())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn class(coupling: Coupling, radius: f64, budget: f64) -> ConstrainedClass {
        ConstrainedClass::new(radius, coupling, budget, LossSpec::unit()).unwrap()
    }

    #[test]
    fn zero_budget_mean_coupling_collapses_samples() {
        let cls = class(Coupling::MeanCoupled, 2.0, 0.0);
        let set = sample_class(&cls, 3, 2, 10, 5).unwrap();
        assert_eq!(set.len(), 10);
        for h in set.members() {
            assert_eq!(h.task(0), h.task(1));
            assert_eq!(h.task(1), h.task(2));
        }
    }

    #[test]
    fn singleton_sample_is_deterministic() {
        let cls = class(Coupling::NormBall, 1.0, 1.5);
        let a = sample_class(&cls, 2, 3, 1, 42).unwrap();
        let b = sample_class(&cls, 2, 3, 1, 42).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a, b);
    }

    #[test]
    fn norm_ball_samples_are_members() {
        let cls = class(Coupling::NormBall, 10.0, 1.0);
        let set = sample_class(&cls, 2, 1, 200, 3).unwrap();
        for h in set.members() {
            assert!(h.task(0)[0].powi(2) + h.task(1)[0].powi(2) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn samples_cover_the_boundary() {
        for cls in [
            class(Coupling::NormBall, 1.0, 1.2),
            class(Coupling::MeanCoupled, 1.0, 0.3),
            class(Coupling::MeanCoupled, 0.5, 10.0),
        ] {
            let set = sample_class(&cls, 3, 4, 256, 9).unwrap();
            assert_eq!(set.len(), 256);
            let near = set.members().iter().filter(|h| cls.near_boundary(h, 0.01)).count();
            assert!(near * 4 >= set.len(), "{near} of {} near the boundary", set.len());
        }
    }

    #[test]
    fn negative_budget_is_rejected() {
        let bad = ConstrainedClass {
            base_radius: 1.0,
            coupling: Coupling::NormBall,
            budget: -1.0,
            loss: LossSpec::unit(),
        };
        assert!(matches!(sample_class(&bad, 2, 2, 4, 1), Err(Error::Config { .. })));
    }

    #[test]
    fn projection_examples() {
        let cls = class(Coupling::NormBall, 5.0, 1.0);
        let feasible = HypothesisVector::from_rows(vec![vec![0.3], vec![0.4]]).unwrap();
        assert_eq!(project_to_class(&feasible, &cls), feasible);

        let scalar = class(Coupling::NormBall, 10.0, 1.0);
        let p = project_to_class(&HypothesisVector::from_rows(vec![vec![3.0]]).unwrap(), &scalar);
        assert!((p.task(0)[0] - 1.0).abs() < 1e-12);

        let tied = class(Coupling::MeanCoupled, 10.0, 0.0);
        let raw = HypothesisVector::from_rows(vec![vec![1.0, -2.0], vec![3.0, 4.0]]).unwrap();
        let p = project_to_class(&raw, &tied);
        for m in 0..2 {
            assert!((p.task(m)[0] - 2.0).abs() < 1e-12);
            assert!((p.task(m)[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_coupled_projection_with_active_ball() {
        // mean (2, 0) lies outside the ball of radius 1
        let cls = class(Coupling::MeanCoupled, 1.0, 0.0);
        let raw = HypothesisVector::from_rows(vec![vec![1.0, 1.0], vec![3.0, -1.0]]).unwrap();
        let p = project_to_class(&raw, &cls);
        assert!(cls.contains(&p));
        for m in 0..2 {
            assert!((p.task(m)[0] - 1.0).abs() < 1e-6, "{:?}", p);
            assert!(p.task(m)[1].abs() < 1e-6);
        }
    }

    #[test]
    fn zero_budget_zero_radius_is_a_point() {
        let cls = class(Coupling::MeanCoupled, 0.0, 0.0);
        let raw = HypothesisVector::from_rows(vec![vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        let p = project_to_class(&raw, &cls);
        assert!(p.as_slice().iter().all(|w| w.abs() < 1e-12));
        let set = sample_class(&cls, 2, 2, 5, 1).unwrap();
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn membership_soundness_on_random_points() {
        let mut rng = seed::rng(77);
        let classes = [
            class(Coupling::NormBall, 0.7, 1.0),
            class(Coupling::MeanCoupled, 0.7, 0.2),
            class(Coupling::MeanCoupled, 2.0, 0.0),
        ];
        for k in 0..10_000 {
            let cls = &classes[k % classes.len()];
            let mut raw = HypothesisVector::zeros(3, 2);
            raw.as_mut_slice()
                .iter_mut()
                .for_each(|w| *w = 3.0 * rng.sample::<f64, _>(StandardNormal));
            let p = project_to_class(&raw, cls);
            assert!(cls.contains(&p), "{cls:?} {raw:?} -> {p:?}");
        }
    }

    #[test]
    fn norm_ball_projection_is_closest_among_probes() {
        let cls = class(Coupling::NormBall, 0.8, 1.0);
        let probes = sample_class(&cls, 2, 2, 1000, 8).unwrap();
        let mut rng = seed::rng(5);
        for _ in 0..100 {
            let mut raw = HypothesisVector::zeros(2, 2);
            raw.as_mut_slice()
                .iter_mut()
                .for_each(|w| *w = 2.0 * rng.sample::<f64, _>(StandardNormal));
            if cls.contains(&raw) {
                continue;
            }
            let p = project_to_class(&raw, &cls);
            let best = raw.distance(&p);
            for q in probes.members() {
                assert!(raw.distance(q) >= best - 1e-12);
            }
        }
    }

    #[test]
    fn group_projection_keeps_cardinality() {
        let cls = class(Coupling::NormBall, 1.0, 2.0);
        let set = sample_class(&cls, 3, 2, 10, 1).unwrap();
        let full = project_group(&set, &GroupIndex::full(3)).unwrap();
        assert_eq!(full.tasks, vec![0, 1, 2]);
        for (k, &m) in full.tasks.iter().enumerate() {
            for (c, h) in set.members().iter().enumerate() {
                assert_eq!(full.components[k][c], h.task(m));
            }
        }
        let single = project_group(&set, &GroupIndex::singleton(3, 1).unwrap()).unwrap();
        assert_eq!(single.components.len(), 1);
        assert_eq!(single.components[0].len(), 10);

        // c = 0 mean-coupled: components agree on a probe grid
        let tied = class(Coupling::MeanCoupled, 1.0, 0.0);
        let tset = sample_class(&tied, 2, 2, 10, 2).unwrap();
        let p0 = project_group(&tset, &GroupIndex::singleton(2, 0).unwrap()).unwrap();
        let p1 = project_group(&tset, &GroupIndex::singleton(2, 1).unwrap()).unwrap();
        for (a, b) in p0.components[0].iter().zip(&p1.components[0]) {
            for gx in [-1.0, 0.0, 0.5, 2.0] {
                for gy in [-2.0, 0.3, 1.0] {
                    let x = [gx, gy];
                    assert_eq!(crate::task::dot(&x, a), crate::task::dot(&x, b));
                }
            }
        }
    }

    #[test]
    fn candidate_csv_round_trip() {
        let cls = class(Coupling::MeanCoupled, 1.0, 0.5);
        let set = sample_class(&cls, 2, 3, 6, 4).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("candidate,task,w0,w1,w2\n"));
        let back = CandidateSet::read_csv(&buf[..], &cls).unwrap();
        assert_eq!(back.members(), set.members());
        assert!(back.provenance().iter().all(|p| *p == Provenance::Imported));
    }

    #[test]
    fn outside_members_rejected() {
        let cls = class(Coupling::NormBall, 1.0, 1.0);
        let out = HypothesisVector::from_rows(vec![vec![2.0]]).unwrap();
        assert!(CandidateSet::from_members(&cls, vec![out], Provenance::Imported).is_err());
        assert!(project_group(&CandidateSet::empty(), &GroupIndex::full(1)).is_err());
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(values in proptest::collection::vec(-4.0f64..4.0, 6), budget in 0.0f64..2.0, mean in any::<bool>()) {
            let cls = class(if mean { Coupling::MeanCoupled } else { Coupling::NormBall }, 1.0, budget);
            let raw = HypothesisVector::from_flat(3, 2, values).unwrap();
            let once = project_to_class(&raw, &cls);
            prop_assert!(cls.contains(&once));
            let twice = project_to_class(&once, &cls);
            prop_assert!(once.distance(&twice) <= 1e-12);
        }

        #[test]
        fn enlarging_budget_keeps_members(budget in 0.0f64..1.5, extra in 0.0f64..2.0, seed in 0u64..1000) {
            let small = class(Coupling::MeanCoupled, 1.0, budget);
            let large = class(Coupling::MeanCoupled, 1.0, budget + extra);
            let set = sample_class(&small, 3, 2, 16, seed).unwrap();
            prop_assert!(set.members().iter().all(|h| large.contains(h)));
        }
    }
}
