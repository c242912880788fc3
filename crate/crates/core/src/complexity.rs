//! Covering numbers on empirical metrics and the entropy numbers built
//! from them.
//!
//! Suprema over sample sets are approximated by maxima over a few seeded
//! draws, so every entropy value here is a lower-bound proxy for the
//! quantity it stands for.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{CandidateSet, ConstrainedClass};
use crate::seed::{self, streams};
use crate::task::{generate_tasks, MultiTaskDataset, TaskFamily};

/// Largest table the exact cover search accepts.
pub const EXACT_COVER_LIMIT: usize = 20;

const METRIC_TOL: f64 = 1e-9;

/// Pairwise distances over a finite list of functions.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMetricTable {
    size: usize,
    dist: Vec<f64>,
}

impl EmpiricalMetricTable {
    /// `d(f, g) = ((1/K) Σ_k |f_k - g_k|^p)^{1/p}` over the `K` sample
    /// values of each function.
    pub fn from_values(values: &[Vec<f64>], p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::config("p", "metric exponent must be finite and at least 1"));
        }
        let k = values.first().map_or(0, Vec::len);
        if values.iter().any(|v| v.len() != k) || (k == 0 && !values.is_empty()) {
            return Err(Error::config("values", "every function needs the same positive number of samples"));
        }
        let size = values.len();
        let mut dist = vec![0.0; size * size];
        for i in 0..size {
            for j in i + 1..size {
                let d = if p == 1.0 {
                    values[i].iter().zip(&values[j]).map(|(a, b)| (a - b).abs()).sum::<f64>() / k as f64
                } else {
                    (values[i].iter().zip(&values[j]).map(|(a, b)| (a - b).abs().powf(p)).sum::<f64>() / k as f64).powf(1.0 / p)
                };
                dist[i * size + j] = d;
                dist[j * size + i] = d;
            }
        }
        Ok(EmpiricalMetricTable { size, dist })
    }

    /// Table from an explicit matrix; checks it is a metric.
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(Error::config("metric", "distance matrix must be square"));
        }
        for i in 0..size {
            if rows[i][i] != 0.0 {
                return Err(Error::config("metric", format!("nonzero diagonal at {i}")));
            }
            for j in 0..size {
                let d = rows[i][j];
                if !(d >= 0.0) || !d.is_finite() || d != rows[j][i] {
                    return Err(Error::config("metric", format!("entry ({i}, {j}) is negative or asymmetric")));
                }
                for k in 0..size {
                    if rows[i][k] > d + rows[j][k] + METRIC_TOL {
                        return Err(Error::config("metric", format!("triangle inequality fails at ({i}, {j}, {k})")));
                    }
                }
            }
        }
        Ok(EmpiricalMetricTable {
            size,
            dist: rows.concat(),
        })
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.size + j]
    }

    /// Index of the center closest to `i`; the earliest listed on ties.
    pub fn nearest(&self, i: usize, centers: &[usize]) -> usize {
        let mut best = centers[0];
        for &c in &centers[1..] {
            if self.get(i, c) < self.get(i, best) {
                best = c;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverMethod {
    Greedy,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverResult {
    pub centers: Vec<usize>,
    pub radius: f64,
    pub size: usize,
    pub method: CoverMethod,
}

impl CoverResult {
    /// Every function lies within the radius of some center.
    pub fn validate(&self, table: &EmpiricalMetricTable) -> bool {
        self.size == self.centers.len() && (0..table.len()).all(|i| self.centers.iter().any(|&c| table.get(i, c) <= self.radius))
    }
}

/// Cover of the table by closed balls of radius `xi` centered at listed
/// functions.
///
/// Greedy is farthest-first traversal from function 0: it keeps adding the
/// function farthest from the current centers while that distance exceeds
/// `xi`. Its traversal order does not depend on `xi`, so its size is
/// non-increasing in `xi`. Exact searches center subsets by increasing size
/// and returns the first cover found in lexicographic order.
pub fn covering_number(table: &EmpiricalMetricTable, xi: f64, method: CoverMethod) -> Result<CoverResult> {
    if !(xi > 0.0) {
        return Err(Error::config("xi", "cover radius must be positive"));
    }
    let n = table.len();
    let centers = match method {
        CoverMethod::Greedy => {
            let mut centers = Vec::new();
            if n > 0 {
                centers.push(0);
                let mut gap: Vec<f64> = (0..n).map(|i| table.get(i, 0)).collect();
                loop {
                    let mut far = 0;
                    for i in 1..n {
                        if gap[i] > gap[far] {
                            far = i;
                        }
                    }
                    if gap[far] <= xi {
                        break;
                    }
                    centers.push(far);
                    for (i, g) in gap.iter_mut().enumerate() {
                        *g = g.min(table.get(i, far));
                    }
                }
            }
            centers
        }
        CoverMethod::Exact => {
            if n > EXACT_COVER_LIMIT {
                return Err(Error::Budget {
                    what: "exact cover table".into(),
                    size: n,
                    limit: EXACT_COVER_LIMIT,
                });
            }
            exact_cover(table, xi)
        }
    };
    Ok(CoverResult {
        size: centers.len(),
        centers,
        radius: xi,
        method,
    })
}

fn exact_cover(table: &EmpiricalMetricTable, xi: f64) -> Vec<usize> {
    let n = table.len();
    if n == 0 {
        return Vec::new();
    }
    let balls: Vec<u32> = (0..n)
        .map(|c| (0..n).filter(|&i| table.get(i, c) <= xi).fold(0u32, |m, i| m | (1 << i)))
        .collect();
    let all = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    for k in 1..=n {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            if combo.iter().fold(0u32, |m, &c| m | balls[c]) == all {
                return combo;
            }
            // next k-combination in lexicographic order
            let mut i = k;
            while i > 0 && combo[i - 1] == n - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..k {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    unreachable!("the full set always covers")
}

/// Entropy value with the draws it was taken over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UenResult {
    /// `max_r ln(cover size on draw r)`.
    pub value: f64,
    /// Draw achieving the maximum; the lowest index on ties.
    pub draw: usize,
    pub draw_seed: u64,
    pub sizes: Vec<usize>,
}

/// Seed of the `r`-th sample-set draw.
pub fn draw_seed(seed: u64, r: usize) -> u64 {
    seed::derive_path(seed, &[streams::COVER_DRAWS, r as u64])
}

fn draw_sets(family: &TaskFamily, n: usize, draws: usize, seed: u64) -> Result<Vec<MultiTaskDataset>> {
    if draws == 0 {
        return Err(Error::config("sample_draws", "need at least one draw"));
    }
    (0..draws).map(|r| generate_tasks(family, n, draw_seed(seed, r))).collect()
}

fn task_table(data: &MultiTaskDataset, m: usize, components: &[&[f64]], class: &ConstrainedClass, p: f64) -> Result<EmpiricalMetricTable> {
    let values: Vec<Vec<f64>> = components.iter().map(|w| data.tasks[m].losses(w, &class.loss)).collect();
    EmpiricalMetricTable::from_values(&values, p)
}

fn max_draw(sizes: &[usize]) -> usize {
    let mut best = 0;
    for (r, &s) in sizes.iter().enumerate() {
        if s > sizes[best] {
            best = r;
        }
    }
    best
}

/// Uniform entropy number proxy of task `m`'s loss class: the largest
/// `ln` greedy cover size at radius `xi` over `draws` seeded `n`-sample sets.
#[allow(clippy::too_many_arguments)]
pub fn uen(
    components: &[&[f64]],
    family: &TaskFamily,
    class: &ConstrainedClass,
    m: usize,
    xi: f64,
    n: usize,
    draws: usize,
    p: f64,
    seed: u64,
) -> Result<UenResult> {
    if m >= family.task_count() {
        return Err(Error::config("task", format!("no task {m}")));
    }
    if components.is_empty() {
        return Err(Error::config("components", "function list is empty"));
    }
    let sets = draw_sets(family, n, draws, seed)?;
    let sizes = sets
        .iter()
        .map(|d| Ok(covering_number(&task_table(d, m, components, class, p)?, xi, CoverMethod::Greedy)?.size))
        .collect::<Result<Vec<_>>>()?;
    let draw = max_draw(&sizes);
    Ok(UenResult {
        value: (sizes[draw] as f64).ln(),
        draw,
        draw_seed: draw_seed(seed, draw),
        sizes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpuenResult {
    /// `ln` of the number of occupied product cells.
    pub value: f64,
    pub occupied: usize,
    pub tasks: Vec<usize>,
    /// Per-task entropy on the draw that fixes that task's cover.
    pub per_task: Vec<UenResult>,
}

impl CpuenResult {
    /// `Σ_m ln(cover size)`, the entropy of the full product grid.
    pub fn product_bound(&self) -> f64 {
        self.per_task.iter().map(|u| u.value).sum()
    }
}

/// Product-cover entropy proxy for the candidates projected on `tasks`.
///
/// Each task's cover is the greedy cover on that task's sup-achieving draw
/// (lowest draw on ties). Every candidate maps to the tuple of its nearest
/// centers; the value is `ln` of the number of distinct tuples.
#[allow(clippy::too_many_arguments)]
pub fn cpuen(
    candidates: &CandidateSet,
    family: &TaskFamily,
    class: &ConstrainedClass,
    tasks: &[usize],
    xi: &[f64],
    n: usize,
    draws: usize,
    p: f64,
    seed: u64,
) -> Result<CpuenResult> {
    if candidates.is_empty() || candidates.task_count() != family.task_count() {
        return Err(Error::config("candidates", "candidate set does not match the task family"));
    }
    if tasks.is_empty() || tasks.iter().any(|&m| m >= family.task_count()) {
        return Err(Error::config("tasks", "need a nonempty list of valid tasks"));
    }
    if xi.len() != family.task_count() || xi.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::config("xi", "need one positive radius per task"));
    }
    let sets = draw_sets(family, n, draws, seed)?;
    let mut tables = Vec::with_capacity(tasks.len());
    let mut per_task = Vec::with_capacity(tasks.len());
    for &m in tasks {
        let comps = candidates.components(m);
        let per_draw = sets
            .iter()
            .map(|d| task_table(d, m, &comps, class, p))
            .collect::<Result<Vec<_>>>()?;
        let sizes = per_draw
            .iter()
            .map(|t| Ok(covering_number(t, xi[m], CoverMethod::Greedy)?.size))
            .collect::<Result<Vec<_>>>()?;
        let draw = max_draw(&sizes);
        per_task.push(UenResult {
            value: (sizes[draw] as f64).ln(),
            draw,
            draw_seed: draw_seed(seed, draw),
            sizes,
        });
        tables.push(per_draw.into_iter().nth(draw).expect("draw exists"));
    }
    let radii: Vec<f64> = tasks.iter().map(|&m| xi[m]).collect();
    let (occupied, _) = cpuen_from_tables(&tables, &radii)?;
    Ok(CpuenResult {
        value: (occupied as f64).ln(),
        occupied,
        tasks: tasks.to_vec(),
        per_task,
    })
}

/// Occupied-cell count for per-task tables over the same candidate list,
/// with the greedy covers it was computed from.
pub fn cpuen_from_tables(tables: &[EmpiricalMetricTable], radii: &[f64]) -> Result<(usize, Vec<CoverResult>)> {
    if tables.is_empty() || tables.len() != radii.len() {
        return Err(Error::config("tables", "need one radius per table"));
    }
    let size = tables[0].len();
    if tables.iter().any(|t| t.len() != size) {
        return Err(Error::config("tables", "tables must list the same candidates"));
    }
    let covers = tables
        .iter()
        .zip(radii)
        .map(|(t, &r)| covering_number(t, r, CoverMethod::Greedy))
        .collect::<Result<Vec<_>>>()?;
    let occupied = occupied_cells(tables, &covers);
    Ok((occupied, covers))
}

/// Number of distinct nearest-center tuples over the candidate list.
pub fn occupied_cells(tables: &[EmpiricalMetricTable], covers: &[CoverResult]) -> usize {
    let size = tables.first().map_or(0, EmpiricalMetricTable::len);
    let mut cells: Vec<Vec<usize>> = (0..size)
        .map(|c| tables.iter().zip(covers).map(|(t, cov)| t.nearest(c, &cov.centers)).collect())
        .collect();
    cells.sort_unstable();
    cells.dedup();
    cells.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::{sample_class, Coupling};
    use crate::task::{LossSpec, SyntheticFamily};
    use proptest::prelude::*;

    fn line(points: &[f64]) -> EmpiricalMetricTable {
        let values: Vec<Vec<f64>> = points.iter().map(|&p| vec![p]).collect();
        EmpiricalMetricTable::from_values(&values, 1.0).unwrap()
    }

    #[test]
    fn small_covers() {
        let same = line(&[0.3, 0.3, 0.3]);
        for method in [CoverMethod::Greedy, CoverMethod::Exact] {
            assert_eq!(covering_number(&same, 0.01, method).unwrap().size, 1);
            let two = line(&[0.0, 1.0]);
            assert_eq!(covering_number(&two, 0.4, method).unwrap().size, 2);
            assert_eq!(covering_number(&two, 2.0, method).unwrap().size, 1);
        }
        let five = line(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let exact = covering_number(&five, 1.0, CoverMethod::Exact).unwrap();
        assert_eq!(exact.size, 2);
        assert!(exact.validate(&five));
        assert!(covering_number(&five, 0.0, CoverMethod::Greedy).is_err());
    }

    #[test]
    fn exact_cover_budget() {
        let big = line(&(0..21).map(f64::from).collect::<Vec<_>>());
        assert!(matches!(covering_number(&big, 1.0, CoverMethod::Exact), Err(Error::Budget { .. })));
        assert!(covering_number(&big, 1.0, CoverMethod::Greedy).is_ok());
    }

    #[test]
    fn matrix_validation() {
        assert!(EmpiricalMetricTable::from_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
        assert!(EmpiricalMetricTable::from_matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        let bad_triangle = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]];
        assert!(EmpiricalMetricTable::from_matrix(bad_triangle).is_err());
    }

    #[test]
    fn product_cell_counts() {
        // six candidates; task 1 splits them into 3 groups, task 2 into 2
        let t1 = line(&[0.0, 0.0, 1.0, 1.0, 2.0, 2.0]);
        let t2 = line(&[0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let (occupied, covers) = cpuen_from_tables(&[t1, t2], &[0.1, 0.1]).unwrap();
        assert_eq!((covers[0].size, covers[1].size), (3, 2));
        assert_eq!(occupied, 6);
        assert!(((occupied as f64).ln() - 6f64.ln()).abs() < 1e-15);

        let t1 = line(&[0.0, 0.0, 1.0, 1.0, 2.0, 2.0]);
        let t2 = line(&[0.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
        let (occupied, covers) = cpuen_from_tables(&[t1, t2], &[0.1, 0.1]).unwrap();
        assert_eq!((covers[0].size, covers[1].size), (3, 2));
        assert_eq!(occupied, 4);
    }

    fn family() -> TaskFamily {
        SyntheticFamily {
            task_count: 2,
            input_dim: 3,
            relatedness: 0.3,
            noise_std: 0.2,
            weight_scale: 0.5,
            mean_shift: 0.0,
            input_scale: 1.0,
            seed: 4,
        }
        .build()
        .unwrap()
    }

    fn class() -> ConstrainedClass {
        ConstrainedClass::new(1.0, Coupling::MeanCoupled, 0.5, LossSpec::unit()).unwrap()
    }

    #[test]
    fn uen_degenerate_classes() {
        let fam = family();
        let w = [0.1, 0.2, 0.3];
        let r = uen(&[&w], &fam, &class(), 0, 0.05, 20, 3, 1.0, 1).unwrap();
        assert_eq!(r.value, 0.0);
        // two predictors whose clipped losses differ by less than ξ everywhere
        let w2 = [0.1, 0.2, 0.3 + 1e-6];
        let r = uen(&[&w, &w2], &fam, &class(), 0, 0.05, 20, 3, 1.0, 1).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn uen_monotone_in_radius() {
        let fam = family();
        let set = sample_class(&class(), 2, 3, 16, 2).unwrap();
        let comps = set.components(1);
        let wide = uen(&comps, &fam, &class(), 1, 0.1, 30, 4, 1.0, 8).unwrap();
        let narrow = uen(&comps, &fam, &class(), 1, 0.05, 30, 4, 1.0, 8).unwrap();
        assert!(narrow.value >= wide.value);
        for (a, b) in narrow.sizes.iter().zip(&wide.sizes) {
            assert!(a >= b);
        }
    }

    #[test]
    fn identical_candidates_have_zero_cpuen() {
        let fam = family();
        let cls = ConstrainedClass::new(1.0, Coupling::MeanCoupled, 0.0, LossSpec::unit()).unwrap();
        let one = sample_class(&cls, 2, 3, 1, 5).unwrap();
        let r = cpuen(&one, &fam, &cls, &[0, 1], &[0.01, 0.01], 20, 3, 1.0, 3).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn cpuen_below_product_of_covers() {
        let fam = family();
        for s in 0..10 {
            let set = sample_class(&class(), 2, 3, 16, s).unwrap();
            let r = cpuen(&set, &fam, &class(), &[0, 1], &[0.05, 0.08], 25, 3, 1.0, s).unwrap();
            let per: f64 = (0..2)
                .map(|m| uen(&set.components(m), &fam, &class(), m, [0.05, 0.08][m], 25, 3, 1.0, s).unwrap().value)
                .sum();
            assert!(r.value <= per + 1e-12);
            assert!((r.product_bound() - per).abs() < 1e-12);
        }
    }

    #[test]
    fn cpuen_monotone_in_radius() {
        let fam = family();
        for s in 0..40 {
            let set = sample_class(&class(), 2, 3, 16, 100 + s).unwrap();
            let base = [0.02 + 0.002 * s as f64, 0.04];
            let r = cpuen(&set, &fam, &class(), &[0, 1], &base, 25, 3, 1.0, s).unwrap();
            for grow in [[0.01, 0.0], [0.0, 0.02], [0.05, 0.05]] {
                let xi = [base[0] + grow[0], base[1] + grow[1]];
                let q = cpuen(&set, &fam, &class(), &[0, 1], &xi, 25, 3, 1.0, s).unwrap();
                assert!(q.value <= r.value + 1e-12, "seed {s}: {} > {}", q.value, r.value);
            }
        }
    }

    proptest! {
        #[test]
        fn greedy_dominates_exact(points in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 3), 1..10), xi in 0.05f64..0.6) {
            let table = EmpiricalMetricTable::from_values(&points, 1.0).unwrap();
            let g = covering_number(&table, xi, CoverMethod::Greedy).unwrap();
            let e = covering_number(&table, xi, CoverMethod::Exact).unwrap();
            prop_assert!(g.validate(&table));
            prop_assert!(e.validate(&table));
            prop_assert!(g.size >= e.size);
        }

        #[test]
        fn cover_size_monotone(points in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 2), 1..15), xi in 0.01f64..0.5, grow in 0.0f64..0.5) {
            let table = EmpiricalMetricTable::from_values(&points, 2.0).unwrap();
            for method in [CoverMethod::Greedy, CoverMethod::Exact] {
                let a = covering_number(&table, xi, method).unwrap();
                let b = covering_number(&table, xi + grow, method).unwrap();
                prop_assert!(b.size <= a.size);
            }
        }
    }
}
