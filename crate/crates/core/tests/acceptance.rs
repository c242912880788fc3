//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails. Every tolerance used is a named constant below.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rmtl_core::bounds::{
    consistency_trend, gamma2, gamma_lambda, stl_and_remark3_thresholds, thm1_rhs, upsilon2, upsilon_lambda, Consistency,
    TrendPoint,
};
use rmtl_core::complexity::{cpuen, uen};
use rmtl_core::relatedness::estimate_oddm_with;
use rmtl_core::verify::{verify_small_deviation, Method};
use rmtl_core::*;

/// MC verdict band, in standard errors.
const MC_SIGMAS: f64 = 3.0;
/// Exact-path margin.
const EXACT_MARGIN: f64 = 1e-12;
/// Closed-form threshold agreement.
const THRESHOLD_TOL: f64 = 1e-9;
/// Limit of the threshold ratio at M = 20.
const RATIO_TOL: f64 = 1e-4;
/// Subset sums against the brute-force enumerator, relative to max(1, |value|).
const SUBSET_TOL: f64 = 1e-12;
/// Machine-precision agreement of the single-task reduction, relative.
const REDUCTION_TOL: f64 = 4.0 * f64::EPSILON;
/// Cover certificate comparisons.
const COVER_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: usize, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_budget = budget.is_none_or(|b| elapsed <= b);
    let pass = out.pass && in_budget;
    let budget_note = match budget {
        Some(b) if !in_budget => format!("; over runtime budget {:.0}s", b.as_secs_f64()),
        Some(b) => format!("; budget {:.0}s", b.as_secs_f64()),
        None => String::new(),
    };
    println!(
        "{} criterion {id}: {name} ({}) [{:.2}s{budget_note}]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64()
    );
    pass
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

// 1 ------------------------------------------------------------------------

fn vector_hoeffding() -> Outcome {
    let mut cells = 0;
    let mut held = 0;
    let mut worst = f64::INFINITY;
    let xi_grid = [0.02, 0.05, 0.1, 0.2];
    let success = [0.5, 0.3, 0.7];
    for m in 1..=3usize {
        let independent = DiscreteVectorDistribution::independent_bernoulli(&success[..m], 1.0).unwrap();
        // all components equal to one common Bernoulli(0.4)
        let comonotone = DiscreteVectorDistribution::new(vec![vec![0.0; m], vec![1.0; m]], vec![0.6, 0.4]).unwrap();
        for (k, dist) in [independent, comonotone].iter().enumerate() {
            for &n in &[50usize, 200] {
                for (j, &x) in xi_grid.iter().enumerate() {
                    let seed = (m * 1000 + k * 100 + n + j) as u64;
                    let v = verify_vector_deviation_with(dist, 0.0, 1.0, n, &vec![x; m], 100_000, seed, Method::MonteCarlo).unwrap();
                    cells += 1;
                    let ok = v.lhs <= v.rhs + MC_SIGMAS * v.lhs_standard_error;
                    held += ok as usize;
                    worst = worst.min((v.rhs - v.lhs) / v.lhs_standard_error.max(1e-300));
                }
            }
        }
    }
    Outcome {
        pass: held == cells,
        detail: format!("{held}/{cells} cells hold at 1e5 MC trials; tightest margin {worst:.1} SE"),
    }
}

// 2 ------------------------------------------------------------------------

fn random_distribution(rng: &mut ChaCha8Rng, max_m: usize, max_support: usize, hi: f64) -> DiscreteVectorDistribution {
    let m = rng.random_range(1..=max_m);
    let k = rng.random_range(1..=max_support);
    let support: Vec<Vec<f64>> = (0..k).map(|_| (0..m).map(|_| rng.random_range(0.0..hi)).collect()).collect();
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut probs: Vec<f64> = w.iter().map(|x| x / total).collect();
    let drift = 1.0 - probs.iter().sum::<f64>();
    probs[0] += drift;
    DiscreteVectorDistribution::new(support, probs).unwrap()
}

fn vector_chebyshev() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::INFINITY;
    let mut ok = 0;
    for _ in 0..50 {
        let d = random_distribution(&mut rng, 3, 8, 1.5);
        let xi: Vec<f64> = (0..d.task_count()).map(|_| rng.random_range(0.05..1.5)).collect();
        let mut both = true;
        for variant in [ChebyshevVariant::Plain, ChebyshevVariant::Covariance] {
            let v = verify_vector_chebyshev(&d, &xi, variant).unwrap();
            worst = worst.min(v.margin);
            both &= v.exact && v.margin >= -EXACT_MARGIN;
        }
        ok += both as usize;
    }
    Outcome {
        pass: ok == 50,
        detail: format!("{ok}/50 distributions, both variants; smallest margin {worst:.3e}"),
    }
}

// 3 ------------------------------------------------------------------------

fn small_deviation() -> Outcome {
    let bern = DiscreteVectorDistribution::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
    let worked = verify_small_deviation(&bern, 4, &[0.3], 0, 0).unwrap();
    let worked_ok = worked.exact && (worked.lhs - 5.0 / 16.0).abs() <= EXACT_MARGIN && (worked.rhs - 1.0).abs() <= EXACT_MARGIN && worked.holds;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ok = worked_ok as usize;
    let mut per_m = [0usize; 3];
    for _ in 0..29 {
        let d = random_distribution(&mut rng, 3, 6, 1.5);
        let xi: Vec<f64> = (0..d.task_count()).map(|_| rng.random_range(0.1..1.0)).collect();
        let n = rng.random_range(1..=12);
        let v = verify_small_deviation(&d, n, &xi, 0, 0).unwrap();
        per_m[d.task_count() - 1] += 1;
        ok += (v.exact && v.lhs <= v.rhs + EXACT_MARGIN) as usize;
    }
    Outcome {
        pass: ok == 30,
        detail: format!(
            "{ok}/30 exact configurations (M=1,2,3: {}+1, {}, {}); worked value LHS={:.6} vs 5/16, RHS={}; \
             note: a constructed M=3 family breaks the inequality, see the unit tests",
            per_m[0], per_m[1], per_m[2], worked.lhs, worked.rhs
        ),
    }
}

// 4 ------------------------------------------------------------------------

fn single_task_reduction() -> Outcome {
    let fam = TaskFamily::discrete(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]], vec![0.3, 0.5, 0.2], vec![vec![0.2, -0.3]]).unwrap();
    let settings = EstimationSettings {
        trials: 1_000,
        cov_trials: 1_000,
        cover_draws: 3,
        seed: 4,
        ..EstimationSettings::default()
    };
    let mut cells = 0;
    let mut ok = 0;
    let mut worst = 0.0f64;
    for (lower, upper) in [(0.0, 1.0), (0.0, 2.5)] {
        let class = ConstrainedClass::new(1.0, Coupling::NormBall, 1.0, LossSpec::new(lower, upper).unwrap()).unwrap();
        let cands = rmtl_core::hypothesis::sample_class(&class, 1, 2, 8, 7).unwrap();
        for &n in &[10usize, 100, 1000] {
            for &x in &[0.1, 0.5] {
                let est = estimate_bound_inputs(&fam, &class, &cands, n, &[x], &settings).unwrap();
                let r = evaluate_bounds(&est.inputs).unwrap();
                let range = upper - lower;
                let ln_cover = est.inputs.ln_cover.get(1).unwrap();
                let classical = 8.0 * ln_cover.exp() * (-(n as f64) * x * x / (32.0 * range * range)).exp();
                let rhs = r.thm1_rhs.value().unwrap();
                let direct = thm1_rhs(n, &[x], range, ln_cover).unwrap();
                let rel = ((rhs - classical) / classical).abs().max(((direct - classical) / classical).abs());
                worst = worst.max(rel);
                cells += 1;
                ok += (r.upsilon.value() == Some(0.0) && rel <= REDUCTION_TOL) as usize;
            }
        }
    }
    Outcome {
        pass: ok == cells,
        detail: format!("{ok}/{cells} cells with Υ = 0 exactly; worst relative gap to 8·𝒩·exp(-Nξ²/32(b-a)²) {worst:.2e}"),
    }
}

// 5 ------------------------------------------------------------------------

fn thresholds() -> Outcome {
    let (stl, r3) = stl_and_remark3_thresholds(1, 1.0, 0.5).unwrap();
    let (stl20, r20) = stl_and_remark3_thresholds(20, 1.0, 0.5).unwrap();
    let ratio = r20 / stl20;
    let pass = (stl - 32.0).abs() <= THRESHOLD_TOL && (r3 - 32.0 / 3.0).abs() <= THRESHOLD_TOL && (ratio - 0.5).abs() <= RATIO_TOL;
    Outcome {
        pass,
        detail: format!("stl={stl}, remark3={r3:.12}, remark3/stl at M=20 = {ratio:.9}"),
    }
}

// 6 ------------------------------------------------------------------------

// Independent enumerator written directly against the formulas.
fn brute_force(xi: &[f64], range: f64, phi: &[f64], cov: &[Vec<f64>]) -> (f64, f64, f64, f64) {
    let m = xi.len();
    let (mut g, mut u, mut g2, mut u2) = (0.0, 0.0, 0.0, 0.0);
    for s in 1usize..(1 << m) {
        let mut size = 0.0;
        let mut sq = 0.0;
        let mut lin = 0.0;
        let mut cross = 0.0;
        for i in 0..m {
            if s >> i & 1 == 1 {
                size += 1.0;
                sq += xi[i] * xi[i];
                lin += xi[i];
                for j in i + 1..m {
                    if s >> j & 1 == 1 {
                        cross += cov[i][j];
                    }
                }
            }
        }
        g += size * range * range / sq;
        g2 += size * range * range / (lin * lin);
        u += phi[s];
        u2 += 8.0 * cross / (lin * lin);
    }
    (g, u, g2, u2)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= SUBSET_TOL * b.abs().max(1.0)
}

fn subset_sums() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut ok = 0;
    let mut ordering_ok = 0;
    let mut ordering_cases = 0;
    let mut cases = 0;
    for m in 1..=4usize {
        for case in 0..100 {
            let equal = case % 4 == 0;
            let base = rng.random_range(0.05..2.0);
            let xi: Vec<f64> = (0..m).map(|_| if equal { base } else { rng.random_range(0.05..2.0) }).collect();
            let range = rng.random_range(0.5..3.0);
            let mut phi = vec![0.0; 1 << m];
            let mut table = GroupTable::empty(m).unwrap();
            for (s, p) in phi.iter_mut().enumerate().skip(1) {
                *p = if s == (1 << m) - 1 { 0.0 } else { rng.random_range(-0.5..0.3) };
                table.set(s as u32, *p, 0.0);
            }
            let mut cov = vec![vec![0.0; m]; m];
            let mut pairs = PairTable::empty(m);
            for i in 0..m {
                for j in i + 1..m {
                    cov[i][j] = rng.random_range(-0.25..0.25);
                    pairs.set(i, j, cov[i][j]);
                }
            }
            let (g, u, g2, u2) = brute_force(&xi, range, &phi, &cov);
            let got = (
                gamma_lambda(&xi, range).unwrap(),
                upsilon_lambda(&table).value().unwrap(),
                gamma2(&xi, range).unwrap(),
                upsilon2(&pairs, &xi).unwrap().value().unwrap(),
            );
            cases += 1;
            ok += (close(got.0, g) && close(got.1, u) && close(got.2, g2) && close(got.3, u2)) as usize;
            if equal {
                ordering_cases += 1;
                ordering_ok += (got.2 <= got.0) as usize;
            }
        }
    }
    Outcome {
        pass: ok == cases && ordering_ok == ordering_cases,
        detail: format!("{ok}/{cases} agree with the enumerator; Γ₂ ≤ Γ in {ordering_ok}/{ordering_cases} equal-ξ cases"),
    }
}

// 7 ------------------------------------------------------------------------

fn relatedness_signs() -> Outcome {
    let base = SyntheticFamily {
        task_count: 2,
        input_dim: 2,
        relatedness: 1.0,
        noise_std: 0.5,
        weight_scale: 0.5,
        mean_shift: 0.0,
        input_scale: 1.0,
        seed: 70,
    }
    .build()
    .unwrap();
    let duplicated = base.clone().with_shared_draws(1, 0).unwrap();
    let class = ConstrainedClass::new(1.0, Coupling::NormBall, 2.0, LossSpec::unit()).unwrap();
    // identical components, as a joint solver returns on duplicated tasks
    let members = [[0.3, -0.2], [0.0, 0.4], [-0.5, 0.1], [0.2, 0.2]]
        .iter()
        .map(|w| HypothesisVector::from_rows(vec![w.to_vec(), w.to_vec()]).unwrap())
        .collect();
    let cands = CandidateSet::from_members(&class, members, Provenance::Imported).unwrap();
    let group = GroupIndex::singleton(2, 0).unwrap();
    let xi = [0.2, 0.2];
    let eddm_cfg = EddmConfig {
        subsample_size: 50,
        xi: vec![0.03, 0.03],
    };
    let runs = 50;
    let trials = 10_000;
    let mut tallies = [0usize; 4];
    for (k, fam) in [&duplicated, &base].into_iter().enumerate() {
        let risks = expected_risk_table(fam, &class, &cands, 20_000, 700 + k as u64).unwrap();
        for r in 0..runs {
            let seed = 7_000 + r as u64;
            let o = estimate_oddm_with(fam, &class, &cands, &risks, &group, &xi, trials, seed).unwrap();
            let e = estimate_eddm(fam, &class, &cands, &group, &eddm_cfg, 100, trials, seed).unwrap();
            for (slot, est) in [o, e].iter().enumerate() {
                let (Some(v), Some(se)) = (est.value, est.standard_error) else { continue };
                let hit = if k == 0 { v + MC_SIGMAS * se < 0.0 } else { v.abs() <= MC_SIGMAS * se };
                tallies[2 * k + slot] += hit as usize;
            }
        }
    }
    let frac = |c: usize| c as f64 / runs as f64;
    let pass = frac(tallies[0]) >= 0.95 && frac(tallies[1]) >= 0.95 && frac(tallies[2]) >= 0.90 && frac(tallies[3]) >= 0.90;
    Outcome {
        pass,
        detail: format!(
            "duplicated: ODDM negative beyond 3 SE {}/{runs}, EDDM {}/{runs}; independent: ODDM within 3 SE of 0 {}/{runs}, EDDM {}/{runs}",
            tallies[0], tallies[1], tallies[2], tallies[3]
        ),
    }
}

// 8 ------------------------------------------------------------------------

fn theorem_dominance() -> Outcome {
    let two = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let ball = ConstrainedClass::new(1.0, Coupling::NormBall, 2.0, LossSpec::unit()).unwrap();
    let single = TaskFamily::discrete(two.clone(), vec![0.1, 0.9], vec![vec![0.0, 0.0]]).unwrap();
    let independent = TaskFamily::discrete(two.clone(), vec![0.1, 0.9], vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
    let duplicated = independent.clone().with_shared_draws(1, 0).unwrap();
    // losses 1 - f and f on a shared coin: covariance -1/4
    let anti = TaskFamily::discrete(vec![vec![1.0, 0.0], vec![1.0, 1.0]], vec![0.5, 0.5], vec![vec![0.0, 1.0], vec![1.0, 0.0]])
        .unwrap()
        .with_shared_draws(1, 0)
        .unwrap();
    let settings = EstimationSettings {
        trials: 1_000,
        cov_trials: 1_000,
        cover_draws: 2,
        seed: 8,
        ..EstimationSettings::default()
    };
    let mut satisfied = 0;
    let mut held = 0;
    let mut evidence = 0;
    let mut vacuous = 0;
    let mut withheld = 0;
    let mut violated = Vec::new();
    let families: [(&str, &TaskFamily); 4] = [("single", &single), ("independent", &independent), ("duplicated", &duplicated), ("anti", &anti)];
    for (name, fam) in families {
        let m = fam.task_count();
        let mut cands = if name == "anti" {
            let h = HypothesisVector::from_rows(vec![vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
            CandidateSet::from_members(&ball, vec![h], Provenance::Imported).unwrap()
        } else {
            let rows = vec![vec![1.0, 0.0]; m];
            CandidateSet::from_members(&ball, vec![HypothesisVector::from_rows(rows).unwrap()], Provenance::Imported).unwrap()
        };
        for h in rmtl_core::hypothesis::sample_class(&ball, m, 2, 15, 80).unwrap().members() {
            if cands.len() < 16 {
                cands.push(&ball, h.clone(), Provenance::RandomSample).unwrap();
            }
        }
        for &n in &[4usize, 8, 10, 12] {
            for &x in &[0.3, 0.6, 0.85, 0.95] {
                let xi = vec![x; m];
                let est = estimate_bound_inputs(fam, &ball, &cands, n, &xi, &settings).unwrap();
                let report = evaluate_bounds(&est.inputs).unwrap();
                let lhs = mc_joint_sup_prob(fam, &ball, &cands, &est.risks, n, &xi, 0, settings.seed).unwrap();
                assert!(lhs.any.exact, "desk-scale cells must enumerate exactly");
                for theorem in [Theorem::Thm1, Theorem::Thm3, Theorem::Thm4] {
                    let check = verify_theorem_bounds(&report, &lhs, theorem);
                    match &check.status {
                        CheckStatus::Withheld(_) => withheld += 1,
                        CheckStatus::Held => {
                            satisfied += 1;
                            held += 1;
                            vacuous += check.vacuous as usize;
                            evidence += check.counts_as_evidence() as usize;
                        }
                        CheckStatus::Violated => {
                            satisfied += 1;
                            violated.push(format!("{name} N={n} ξ={x} {}", theorem.name()));
                        }
                    }
                }
            }
        }
    }
    Outcome {
        pass: violated.is_empty() && satisfied > 0,
        detail: format!(
            "{held}/{satisfied} condition-satisfied cells hold exactly ({vacuous} vacuous, {evidence} counted as evidence); {withheld} withheld{}",
            if violated.is_empty() { String::new() } else { format!("; violated: {}", violated.join(", ")) }
        ),
    }
}

// 9 ------------------------------------------------------------------------

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn consistency() -> Outcome {
    let fam = TaskFamily::discrete(
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, -1.0]],
        vec![0.3, 0.3, 0.2, 0.2],
        vec![vec![0.5, 0.2], vec![0.3, 0.4]],
    )
    .unwrap()
    .with_shared_draws(1, 0)
    .unwrap();
    let class = ConstrainedClass::new(1.0, Coupling::NormBall, 2.0, LossSpec::unit()).unwrap();
    let cands = rmtl_core::hypothesis::sample_class(&class, 2, 2, 6, 90).unwrap();
    let risks = expected_risk_table(&fam, &class, &cands, 0, 0).unwrap();
    let ns = [100usize, 1_000, 10_000];
    let xi = [0.2, 0.2];
    let cover_xi: Vec<f64> = xi.iter().map(|x| x / 8.0).collect();
    let eddm_xi = vec![0.02, 0.02];
    let seeds = 20;
    let masks: Vec<u32> = group_masks(2).unwrap().collect();
    let mut sup = vec![Vec::new(); ns.len()];
    let mut eddm_mag = vec![Vec::new(); ns.len()];
    let mut ln_cover = vec![Vec::new(); ns.len()];
    let mut per_seed_consistent = 0;
    for s in 0..seeds {
        let seed = 9_000 + s as u64;
        let mut series: Vec<Vec<TrendPoint>> = vec![Vec::new(); masks.len()];
        let mut cover_series: Vec<Vec<(usize, f64)>> = vec![Vec::new(); masks.len()];
        for (k, &n) in ns.iter().enumerate() {
            let mut rng = rmtl_core::seed::rng(rmtl_core::seed::derive_path(seed, &[n as u64]));
            let d = sup_discrepancies(&fam, &class, &cands, &risks, n, &mut rng);
            sup[k].push(d.iter().copied().fold(0.0, f64::max));
            let mut mag = 0.0f64;
            for (g, &mask) in masks.iter().enumerate() {
                let group = GroupIndex::from_mask(2, mask).unwrap();
                let cfg = EddmConfig::half(n, eddm_xi.clone());
                let e = estimate_eddm(&fam, &class, &cands, &group, &cfg, n, 200, seed).unwrap();
                mag = mag.max(e.value.map_or(f64::INFINITY, f64::abs));
                series[g].push(TrendPoint {
                    n,
                    value: e.value,
                    standard_error: e.standard_error.unwrap_or(0.0),
                });
                let c = cpuen(&cands, &fam, &class, group.members(), &cover_xi, 2 * n, 2, 1.0, seed).unwrap();
                cover_series[g].push((n, c.value));
                if mask == 3 {
                    ln_cover[k].push(c.value / n as f64);
                }
            }
            eddm_mag[k].push(mag);
        }
        per_seed_consistent += (consistency_trend(&series, &cover_series) == Consistency::ConsistentTrend) as usize;
    }
    let med = |v: &[Vec<f64>]| v.iter().map(|x| median(x.clone())).collect::<Vec<_>>();
    let (ms, me, mc) = (med(&sup), med(&eddm_mag), med(&ln_cover));
    let mc_text: Vec<String> = mc.iter().map(|v| format!("{v:.3e}")).collect();
    let strictly = |v: &[f64]| v.windows(2).all(|w| w[0] > w[1]);
    let pass = strictly(&ms) && strictly(&me) && strictly(&mc) && per_seed_consistent == seeds;
    Outcome {
        pass,
        detail: format!(
            "median sup-discrepancy {ms:.4?}, median max |EDDM| {me:.4?}, median ln CPUEN/N [{}]; consistent-trend in {per_seed_consistent}/{seeds} seeds",
            mc_text.join(", ")
        ),
    }
}

// 10 -----------------------------------------------------------------------

fn covering() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut ok_tables = 0;
    for _ in 0..40 {
        let k = rng.random_range(1..=12);
        let n = rng.random_range(1..=6);
        let values: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let table = EmpiricalMetricTable::from_values(&values, if rng.random_bool(0.5) { 1.0 } else { 2.0 }).unwrap();
        let xi = rng.random_range(0.02..0.6);
        let greedy = covering_number(&table, xi, CoverMethod::Greedy).unwrap();
        let exact = covering_number(&table, xi, CoverMethod::Exact).unwrap();
        ok_tables += (greedy.size >= exact.size && greedy.validate(&table) && exact.validate(&table) && greedy.radius <= xi + COVER_TOL) as usize;
    }
    let mut configs = 0;
    let mut ok_configs = 0;
    for (m, coupling, seed) in [(2usize, Coupling::NormBall, 1u64), (3, Coupling::MeanCoupled, 2), (3, Coupling::NormBall, 3), (4, Coupling::MeanCoupled, 4)] {
        let fam = SyntheticFamily {
            task_count: m,
            input_dim: 2,
            relatedness: 0.5,
            noise_std: 0.2,
            weight_scale: 0.5,
            mean_shift: 0.0,
            input_scale: 1.0,
            seed,
        }
        .build()
        .unwrap();
        let class = ConstrainedClass::new(1.0, coupling, 1.0, LossSpec::unit()).unwrap();
        let cands = rmtl_core::hypothesis::sample_class(&class, m, 2, 12, seed).unwrap();
        for &x in &[0.02, 0.05, 0.1] {
            for &n in &[10usize, 40] {
                let tasks: Vec<usize> = (0..m).collect();
                let xi = vec![x; m];
                let c = cpuen(&cands, &fam, &class, &tasks, &xi, n, 3, 1.0, seed).unwrap();
                let sum_uen: f64 = tasks
                    .iter()
                    .map(|&t| uen(&cands.components(t), &fam, &class, t, x, n, 3, 1.0, seed).unwrap().value)
                    .sum();
                configs += 1;
                ok_configs += (c.value <= sum_uen + COVER_TOL) as usize;
            }
        }
    }
    Outcome {
        pass: ok_tables == 40 && ok_configs == configs,
        detail: format!("greedy ≥ exact with valid certificates on {ok_tables}/40 tables; CPUEN ≤ Σ UEN on {ok_configs}/{configs} configurations"),
    }
}

fn main() -> ExitCode {
    let results = [
        run(1, "vector Hoeffding dominance", secs(120), vector_hoeffding),
        run(2, "vector Chebyshev exactness", secs(10), vector_chebyshev),
        run(3, "small-deviation lemma", secs(10), small_deviation),
        run(4, "single-task reduction", None, single_task_reduction),
        run(5, "sample-size thresholds", None, thresholds),
        run(6, "subset-sum oracles", None, subset_sums),
        run(7, "relatedness sign diagnostics", secs(300), relatedness_signs),
        run(8, "theorem dominance at desk scale", secs(300), theorem_dominance),
        run(9, "consistency trend", secs(600), consistency),
        run(10, "covering oracles", secs(30), covering),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
