//! The acceptance experiments A1 to A8, each returning a pass flag, a one-line detail and
//! plot-ready rows. Every experiment is a pure function of its [`SuiteConfig`].

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::equilibrium::{
    additive_equilibrium, bound_additive, bound_unit_values, bound_weighted, check_weighted_invariants,
    construct_eq_unweighted, construct_eq_weighted, cpv_star, deviation_utility, opt_with_costs, opt_with_costs_bnb,
    simplified_weighted_ratio, verify_eps_equilibrium, DevGrid, EquilibriumError, EquilibriumOutput,
};
use crate::generate::{generate_instance, FamilySpec, GenError, GenSpec};
use crate::learning::{
    check_convergence, check_structural_lemmas, run_dynamics, strict_instance, DynamicsConfig, LearningError,
    StrictSpec,
};
use crate::matroid::Matroid;
use crate::model::{BidGrid, GridError, Instance, ModelError, PriceVector};
use crate::scalar::Scalar;
use crate::selection::{greedy_bpb, optimal_select, Rule, SelectionError, TieBreak};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Generate(#[from] GenError),
    #[error(transparent)]
    Learning(#[from] LearningError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("unknown criterion `{0}`")]
    UnknownCriterion(String),
}

/// Deliberate corruption used to prove that a criterion can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Halve the prices of the modules the weighted construction selects.
    CorruptWeightedConstructor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteConfig {
    /// Fewer instances, seeds and rounds; results are marked as a smoke run.
    pub quick: bool,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl SuiteConfig {
    pub fn new(seed: u64) -> Self {
        SuiteConfig {
            quick: false,
            seed,
            fault: None,
        }
    }

    fn scale(&self, full: usize, quick: usize) -> usize {
        if self.quick {
            quick
        } else {
            full
        }
    }

    /// Seed of the `k`-th draw of stream `tag`.
    fn seed_for(&self, tag: u64, k: usize) -> u64 {
        self.seed.wrapping_add(tag << 40).wrapping_add(k as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Criterion {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    A7,
    A8,
}

impl Criterion {
    pub const ALL: [Criterion; 8] = [
        Criterion::A1,
        Criterion::A2,
        Criterion::A3,
        Criterion::A4,
        Criterion::A5,
        Criterion::A6,
        Criterion::A7,
        Criterion::A8,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Criterion::A1 => "A1",
            Criterion::A2 => "A2",
            Criterion::A3 => "A3",
            Criterion::A4 => "A4",
            Criterion::A5 => "A5",
            Criterion::A6 => "A6",
            Criterion::A7 => "A7",
            Criterion::A8 => "A8",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Criterion::A1 => "optimal selection rule collapses to one module",
            Criterion::A2 => "constructed equilibria verify exactly",
            Criterion::A3 => "additive equilibrium and critical ratio",
            Criterion::A4 => "approximation bounds",
            Criterion::A5 => "exhaustive grid audit of epsilon-equilibria",
            Criterion::A6 => "structural properties of equilibrium prices",
            Criterion::A7 => "learning dynamics converge (scaled)",
            Criterion::A8 => "greedy at cost equals matroid max-weight; matroid axioms",
        }
    }

    pub fn parse(s: &str) -> Result<Criterion, ExperimentError> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| ExperimentError::UnknownCriterion(s.to_string()))
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub criterion: Criterion,
    pub pass: bool,
    pub smoke: bool,
    pub detail: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CriterionResult {
    /// `A3 PASS additive equilibrium ...: detail`.
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let smoke = if self.smoke { " [smoke]" } else { "" };
        format!(
            "{} {verdict}{smoke} {}: {}",
            self.criterion,
            self.criterion.title(),
            self.detail
        )
    }
}

pub fn run_criterion(criterion: Criterion, cfg: &SuiteConfig) -> Result<CriterionResult, ExperimentError> {
    let (pass, detail, header, rows) = match criterion {
        Criterion::A1 => a1(cfg)?,
        Criterion::A2 => a2(cfg)?,
        Criterion::A3 => a3(cfg)?,
        Criterion::A4 => a4(cfg)?,
        Criterion::A5 => a5(cfg)?,
        Criterion::A6 => a6(cfg)?,
        Criterion::A7 => a7(cfg)?,
        Criterion::A8 => a8(cfg)?,
    };
    Ok(CriterionResult {
        criterion,
        pass,
        smoke: cfg.quick,
        detail,
        header,
        rows,
    })
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<CriterionResult>, ExperimentError> {
    Criterion::ALL.into_iter().map(|c| run_criterion(c, cfg)).collect()
}

/// Pass/fail summary with per-criterion detail; no timestamps.
pub fn summary_json(results: &[CriterionResult], cfg: &SuiteConfig) -> Value {
    json!({
        "mode": if cfg.quick { "smoke" } else { "full" },
        "seed": cfg.seed,
        "fault": cfg.fault,
        "pass": results.iter().all(|r| r.pass),
        "failed": results.iter().filter(|r| !r.pass).map(|r| r.criterion.id()).collect::<Vec<_>>(),
        "criteria": results.iter().map(|r| json!({
            "id": r.criterion.id(),
            "title": r.criterion.title(),
            "pass": r.pass,
            "detail": r.detail,
            "rows": r.rows.len(),
        })).collect::<Vec<_>>(),
    })
}

type Outcome = (bool, String, Vec<&'static str>, Vec<Vec<String>>);

fn s(x: &str) -> Scalar {
    x.parse().expect("literal scalar")
}

fn sv(xs: &[&str]) -> Vec<Scalar> {
    xs.iter().map(|x| s(x)).collect()
}

fn dec(x: &Scalar) -> String {
    x.to_decimal_string(6)
}

fn join(xs: &[Scalar]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn apply_fault(cfg: &SuiteConfig, mut out: EquilibriumOutput) -> EquilibriumOutput {
    if cfg.fault == Some(Fault::CorruptWeightedConstructor) {
        for &i in &out.selected {
            out.prices.0[i] = out.prices.get(i) / Scalar::from_int(2);
        }
    }
    out
}

/// One valuable module among `n − 1` equal ones, all free to produce and all posted at
/// the whole budget: the exhaustive rule can afford a single module.
fn a1(_cfg: &SuiteConfig) -> Result<Outcome, ExperimentError> {
    let extra = s("0.1");
    let mut rows = Vec::new();
    let mut pass = true;
    for n in [4usize, 8, 16] {
        let mut values = vec![Scalar::one(); n];
        values[0] = Scalar::one() + &extra;
        let inst = Instance::new(values, vec![Scalar::zero(); n], Scalar::one(), Matroid::free(n))?;
        let prices = PriceVector(vec![Scalar::one(); n]);
        let got = inst.value_of(&optimal_select(&inst, &prices)?.selected);
        let (_, opt) = opt_with_costs(&inst)?;
        let ratio = &got / &opt;
        let bound = Scalar::ratio(2, n as i64);
        let ok = got == Scalar::one() + &extra && opt == Scalar::from_int(n as i64) + &extra && ratio <= bound;
        pass &= ok;
        rows.push(vec![
            n.to_string(),
            got.to_string(),
            opt.to_string(),
            ratio.to_string(),
            dec(&ratio),
            bound.to_string(),
            ok.to_string(),
        ]);
    }
    let detail = format!(
        "ratios {}",
        rows.iter()
            .map(|r| format!("n={}: {}", r[0], r[4]))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok((
        pass,
        detail,
        vec!["n", "selected_value", "opt", "ratio", "ratio_decimal", "bound", "pass"],
        rows,
    ))
}

const A2_FAMILIES: [FamilySpec; 4] = [
    FamilySpec::Free,
    FamilySpec::Uniform { k: 3 },
    FamilySpec::Partition { blocks: 3, cap: 2 },
    FamilySpec::Graphic { vertices: 5 },
];

fn a2(cfg: &SuiteConfig) -> Result<Outcome, ExperimentError> {
    let per_family = cfg.scale(200, 15);
    let tb = TieBreak::ByCostRatio;
    let jobs: Vec<(usize, usize)> = (0..A2_FAMILIES.len())
        .flat_map(|f| (0..per_family).map(move |k| (f, k)))
        .collect();
    let rows: Vec<Vec<Vec<String>>> = jobs
        .par_iter()
        .map(|&(f, k)| -> Result<Vec<Vec<String>>, ExperimentError> {
            let family = A2_FAMILIES[f];
            let n = 2 + k % 9;
            let seed = cfg.seed_for(2, f * 100_000 + k);
            let mut out_rows = Vec::new();
            for unit in [false, true] {
                let spec = GenSpec {
                    unit_values: unit,
                    ..GenSpec::new(n, Scalar::ratio(1, 5), family)
                };
                let inst = generate_instance(&spec, seed)?;
                let (out, invariants) = if unit {
                    (construct_eq_unweighted(&inst, &tb)?, "n/a".to_string())
                } else {
                    let out = apply_fault(cfg, construct_eq_weighted(&inst, &tb)?);
                    let inv = match check_weighted_invariants(&inst, &out) {
                        Ok(()) => "ok".to_string(),
                        Err(e) => e.to_string(),
                    };
                    (out, inv)
                };
                // the unit-value construction targets the skip-infeasible greedy
                let rule = if unit { Rule::Skip } else { Rule::Bpb };
                let report = verify_eps_equilibrium(&inst, &out.prices, &Scalar::zero(), rule, &tb, &DevGrid::Exact)?;
                let ok = report.pass && (unit || invariants == "ok");
                out_rows.push(vec![
                    family.name().to_string(),
                    k.to_string(),
                    seed.to_string(),
                    n.to_string(),
                    if unit { "unit" } else { "weighted" }.to_string(),
                    report.pass.to_string(),
                    report.max_gain().to_string(),
                    invariants,
                    ok.to_string(),
                ]);
            }
            Ok(out_rows)
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<Vec<String>> = rows.into_iter().flatten().collect();
    let failures: Vec<&Vec<String>> = rows.iter().filter(|r| r[8] != "true").collect();
    let detail = match failures.first() {
        None => format!(
            "{} constructions verified at eps = 0 with invariants intact",
            rows.len()
        ),
        Some(r) => format!(
            "{} of {} constructions fail; first: {} #{} ({}), gain {}, invariants {}",
            failures.len(),
            rows.len(),
            r[0],
            r[1],
            r[4],
            r[6],
            r[7]
        ),
    };
    Ok((
        failures.is_empty(),
        detail,
        vec![
            "family",
            "index",
            "seed",
            "n",
            "values",
            "verified",
            "max_gain",
            "invariants",
            "pass",
        ],
        rows,
    ))
}

/// Independent float oracle for the critical cost-per-value: bisection on the
/// nondecreasing spend `x · Σ_{c(i) <= v(i)·x} v(i)`.
fn cpv_bisection(inst: &Instance) -> f64 {
    let values: Vec<f64> = inst.values().iter().map(Scalar::to_f64).collect();
    let costs: Vec<f64> = inst.costs().iter().map(Scalar::to_f64).collect();
    let budget = inst.budget().to_f64();
    let spend = |x: f64| {
        x * values
            .iter()
            .zip(&costs)
            .filter(|(v, c)| **c <= **v * x)
            .map(|(v, _)| v)
            .sum::<f64>()
    };
    let mut hi = 1.0;
    while spend(hi) <= budget && hi < 1e12 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spend(mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn a3(cfg: &SuiteConfig) -> Result<Outcome, ExperimentError> {
    let count = cfg.scale(200, 20);
    let eps = Scalar::ratio(1, 100);
    let tolerance = 2f64.powi(-40);
    let rows: Vec<Vec<String>> = (0..count)
        .into_par_iter()
        .map(|k| -> Result<Vec<String>, ExperimentError> {
            let n = 2 + k % 9;
            let seed = cfg.seed_for(3, k);
            let inst = generate_instance(&GenSpec::new(n, Scalar::ratio(1, 2), FamilySpec::Free), seed)?;
            let star = cpv_star(&inst)?;
            let oracle = cpv_bisection(&inst);
            let gap = (star.to_f64() - oracle).abs();
            let (out, case) = additive_equilibrium(&inst, &eps)?;
            let report = verify_eps_equilibrium(
                &inst,
                &out.prices,
                &eps,
                Rule::Bpb,
                &TieBreak::ByCostRatio,
                &DevGrid::Exact,
            )?;
            let ok = report.pass && gap <= tolerance;
            Ok(vec![
                k.to_string(),
                seed.to_string(),
                n.to_string(),
                star.to_string(),
                format!("{oracle:.17e}"),
                format!("{gap:.3e}"),
                format!("{case:?}"),
                report.max_gain().to_string(),
                report.pass.to_string(),
                ok.to_string(),
            ])
        })
        .collect::<Result<_, _>>()?;
    let bad = rows.iter().filter(|r| r[9] != "true").count();
    let worst_gap = rows
        .iter()
        .map(|r| r[5].parse::<f64>().unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let detail = format!(
        "{} of {count} instances verified at eps = 1/100; largest cpv* gap to bisection {worst_gap:.2e}",
        count - bad
    );
    Ok((
        bad == 0,
        detail,
        vec![
            "index",
            "seed",
            "n",
            "cpv_star",
            "bisection",
            "gap",
            "case",
            "max_gain",
            "verified",
            "pass",
        ],
        rows,
    ))
}

const A4_MATROIDS: [FamilySpec; 3] = [
    FamilySpec::Uniform { k: 15 },
    FamilySpec::Partition { blocks: 8, cap: 3 },
    FamilySpec::Graphic { vertices: 16 },
];

fn a4(cfg: &SuiteConfig) -> Result<Outcome, ExperimentError> {
    let count = cfg.scale(500, 30);
    let n = 40;
    let lambda = s("0.05");
    let min_cost = &lambda / Scalar::from_int(5);
    let eps = &min_cost / Scalar::from_int(100);
    let budget = Scalar::one();
    let additive_bound = bound_additive(&lambda, &eps, &min_cost).expect("bound defined at lambda = 0.05");
    let weighted_bound = bound_weighted(&lambda, &eps, &budget).expect("bound defined at lambda = 0.05");
    let floor = simplified_weighted_ratio(&lambda).expect("defined below 1/3");
    let base = GenSpec {
        min_cost: min_cost.clone(),
        lambda: &lambda - &eps,
        ..GenSpec::new(n, lambda.clone(), FamilySpec::Free)
    };

    let rows: Vec<Vec<String>> = (0..count)
        .into_par_iter()
        .map(|k| -> Result<Vec<String>, ExperimentError> {
            let seed = cfg.seed_for(4, k);
            let free = generate_instance(&base, seed)?;
            let (out, _) = additive_equilibrium(&free, &eps)?;
            let got = free.value_of(&out.selected);
            let (_, opt) = opt_with_costs_bnb(&free);
            let additive_ratio = &opt / &got;

            let family = A4_MATROIDS[k % A4_MATROIDS.len()];
            let inst = generate_instance(&GenSpec { family, ..base.clone() }, seed)?;
            let eq = construct_eq_weighted(&inst, &TieBreak::ByCostRatio)?;
            let got_w = inst.value_of(&eq.selected);
            let (_, opt_w) = opt_with_costs_bnb(&inst);
            let weighted_ratio = &opt_w / &got_w;
            let fraction = &got_w / &opt_w;
            Ok(vec![
                k.to_string(),
                seed.to_string(),
                dec(&additive_ratio),
                (additive_ratio <= additive_bound).to_string(),
                family.name().to_string(),
                dec(&weighted_ratio),
                (weighted_ratio <= weighted_bound).to_string(),
                dec(&fraction),
                fraction.to_string(),
            ])
        })
        .collect::<Result<_, _>>()?;
    let additive_bad = rows.iter().filter(|r| r[3] != "true").count();
    let weighted_bad = rows.iter().filter(|r| r[6] != "true").count();
    let worst = rows.iter().map(|r| s(&r[8])).min().unwrap_or_else(Scalar::one);
    let pass = additive_bad == 0 && weighted_bad == 0 && worst >= floor;
    let detail = format!(
        "additive violations {additive_bad}/{count} (bound {}), weighted violations {weighted_bad}/{count} (bound {}), worst weighted value fraction {} vs floor {}",
        dec(&additive_bound),
        dec(&weighted_bound),
        dec(&worst),
        dec(&floor)
    );
    Ok((
        pass,
        detail,
        vec![
            "index",
            "seed",
            "additive_opt_ratio",
            "additive_within_bound",
            "matroid",
            "weighted_opt_ratio",
            "weighted_within_bound",
            "weighted_value_fraction",
            "weighted_value_fraction_exact",
        ],
        rows,
    ))
}

/// Every price profile on `grid`, in lexicographic order of grid indices.
fn profiles(grid: &BidGrid, n: usize) -> Vec<PriceVector> {
    let k = grid.len();
    let total = k.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut prices = vec![Scalar::zero(); n];
            for slot in prices.iter_mut().rev() {
                *slot = grid.bids()[code % k].clone();
                code /= k;
            }
            PriceVector(prices)
        })
        .collect()
}

fn multisets(options: &[Scalar], size: usize) -> Vec<Vec<Scalar>> {
    if size == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, first) in options.iter().enumerate() {
        for mut rest in multisets(&options[i..], size - 1) {
            rest.insert(0, first.clone());
            out.push(rest);
        }
    }
    out
}

struct AuditRow {
    family: &'static str,
    costs: Vec<Scalar>,
    values: Vec<Scalar>,
    survivors: usize,
    worst: Option<Scalar>,
    bound: Scalar,
    ok: bool,
}

fn audit(
    inst: &Instance,
    grid: &BidGrid,
    eps: &Scalar,
    bound: &Scalar,
    family: &'static str,
) -> Result<AuditRow, ExperimentError> {
    let tb = TieBreak::ByCostRatio;
    let (_, opt) = opt_with_costs(inst)?;
    let mut survivors = 0;
    let mut worst: Option<Scalar> = None;
    let mut ok = true;
    for p in profiles(grid, inst.n()) {
        let report = verify_eps_equilibrium(inst, &p, eps, Rule::Bpb, &tb, &DevGrid::Exact)?;
        if !report.pass {
            continue;
        }
        survivors += 1;
        let got = inst.value_of(&greedy_bpb(inst, &p, &tb).selected);
        if got.is_zero() {
            ok &= opt.is_zero();
            continue;
        }
        let ratio = &opt / &got;
        ok &= ratio <= *bound;
        if worst.as_ref().is_none_or(|w| ratio > *w) {
            worst = Some(ratio);
        }
    }
    Ok(AuditRow {
        family,
        costs: inst.costs().to_vec(),
        values: inst.values().to_vec(),
        survivors,
        worst,
        bound: bound.clone(),
        ok,
    })
}

fn a5(cfg: &SuiteConfig) -> Result<Outcome, ExperimentError> {
    let budget = Scalar::one();
    let grid = BidGrid::new(&budget / Scalar::from_int(8), &budget)?;
    let cost_options = sv(&["1/8", "1/4", "3/8", "1/2"]);
    let value_options = sv(&["1", "2", "3"]);
    let mut cost_sets = multisets(&cost_options, 3);
    let mut value_sets = multisets(&value_options, 3);
    if cfg.quick {
        cost_sets.truncate(4);
        value_sets.truncate(3);
    }
    let mut designs: Vec<(Vec<Scalar>, Vec<Scalar>, bool)> = Vec::new();
    for costs in &cost_sets {
        for values in &value_sets {
            designs.push((costs.clone(), values.clone(), false));
        }
        designs.push((costs.clone(), vec![Scalar::one(); 3], true));
    }
    let audits: Vec<AuditRow> = designs
        .par_iter()
        .map(|(costs, values, uniform)| -> Result<AuditRow, ExperimentError> {
            let min_cost = costs.iter().min().cloned().unwrap_or_else(Scalar::one);
            let max_cost = costs.iter().max().cloned().unwrap_or_else(Scalar::one);
            let eps = &min_cost / Scalar::from_int(10);
            // costs sit in [m, λB − ε]
            let lambda = (&max_cost + &eps) / &budget;
            if *uniform {
                let inst = Instance::new(values.clone(), costs.clone(), budget.clone(), Matroid::uniform(3, 2))?;
                let bound = bound_unit_values(&lambda, &eps, &budget).expect("bound defined on the design grid");
                audit(&inst, &grid, &eps, &bound, "uniform2-unit")
            } else {
                let inst = Instance::new(values.clone(), costs.clone(), budget.clone(), Matroid::free(3))?;
                let bound = bound_additive(&lambda, &eps, &min_cost).expect("bound defined on the design grid");
                audit(&inst, &grid, &eps, &bound, "free")
            }
        })
        .collect::<Result<_, _>>()?;

    let mut rows: Vec<Vec<String>> = audits
        .iter()
        .map(|a| {
            vec![
                a.family.to_string(),
                join(&a.costs),
                join(&a.values),
                a.survivors.to_string(),
                a.worst.as_ref().map(dec).unwrap_or_default(),
                dec(&a.bound),
                a.ok.to_string(),
            ]
        })
        .collect();
    let grid_ok = audits.iter().all(|a| a.ok);
    let survivors: usize = audits.iter().map(|a| a.survivors).sum();

    // three unit-value modules costing 2, 3, 4 with budget 10; ties favour the third, then the first
    let tb = TieBreak::explicit(vec![2, 0, 1], 3)?;
    let abc = Instance::new(
        vec![Scalar::one(); 3],
        sv(&["2", "3", "4"]),
        Scalar::from_int(10),
        Matroid::free(3),
    )?;
    let mut abc_passing = 0;
    let steps = if cfg.quick {
        vec![s("5/4")]
    } else {
        vec![s("5/4"), s("1/2")]
    };
    for step in &steps {
        let g = BidGrid::new(step.clone(), abc.budget())?;
        let passing = profiles(&g, 3)
            .par_iter()
            .map(|p| verify_eps_equilibrium(&abc, p, &Scalar::zero(), Rule::Bpb, &tb, &DevGrid::Exact).map(|r| r.pass))
            .collect::<Result<Vec<bool>, _>>()?
            .into_iter()
            .filter(|&x| x)
            .count();
        abc_passing += passing;
        rows.push(vec![
            "abc-no-exact-eq".into(),
            join(abc.costs()),
            format!("grid step {step}"),
            passing.to_string(),
            String::new(),
            String::new(),
            (passing == 0).to_string(),
        ]);
    }
    let fours = PriceVector(sv(&["4", "4", "4"]));
    let stay = deviation_utility(&abc, &fours, 1, &s("4"), Rule::Bpb, &tb)?;
    let undercut = deviation_utility(&abc, &fours, 1, &s("3.5"), Rule::Bpb, &tb)?;
    let undercut_gain = &undercut - &stay;
    let fours_pass = verify_eps_equilibrium(&abc, &fours, &Scalar::zero(), Rule::Bpb, &tb, &DevGrid::Exact)?.pass;
    let fours_ok = !fours_pass && undercut_gain == s("0.5");
    rows.push(vec![
        "abc-fours".into(),
        join(abc.costs()),
        "4 4 4".into(),
        usize::from(fours_pass).to_string(),
        dec(&undercut_gain),
        String::new(),
        fours_ok.to_string(),
    ]);

    // one unit-value module and four worth ε/2, all free to produce, all posted at the budget
    let eps = s("0.1");
    let extra = 4;
    let mut values = vec![&eps / Scalar::from_int(2); extra + 1];
    values[0] = Scalar::one();
    let cheap = Instance::new(
        values,
        vec![Scalar::zero(); extra + 1],
        Scalar::one(),
        Matroid::free(extra + 1),
    )?;
    let ones = PriceVector(vec![Scalar::one(); extra + 1]);
    let ones_pass =
        verify_eps_equilibrium(&cheap, &ones, &eps, Rule::Bpb, &TieBreak::ByCostRatio, &DevGrid::Exact)?.pass;
    let got = cheap.value_of(&greedy_bpb(&cheap, &ones, &TieBreak::ByCostRatio).selected);
    let (_, opt) = opt_with_costs(&cheap)?;
    let cheap_ok = ones_pass
        && got == Scalar::one()
        && opt == Scalar::one() + Scalar::from_int(extra as i64) * &eps / Scalar::from_int(2);
    rows.push(vec![
        "zero-cost-all-ones".into(),
        join(cheap.costs()),
        join(cheap.values()),
        usize::from(ones_pass).to_string(),
        format!("{got} vs opt {opt}"),
        String::new(),
        cheap_ok.to_string(),
    ]);

    let pass = grid_ok && abc_passing == 0 && fours_ok && cheap_ok;
    let detail = format!(
        "{} designs, {survivors} surviving profiles, bound {}; three-module instance: {abc_passing} exact equilibria on the grid, undercut to 3.5 gains {}; all-ones zero-cost profile {}",
        audits.len(),
        if grid_ok { "held" } else { "VIOLATED" },
        undercut_gain,
        if ones_pass { "passes" } else { "fails" }
    );
    Ok((
        pass,
        detail,
        vec![
            "family",
            "costs",
            "values_or_note",
            "surviving_profiles",
            "worst_opt_ratio",
            "bound",
            "pass",
        ],
        rows,
    ))
}

/// `δ = 1/A6_Q²`. The local-stability constants need every cost above `10√δ`, which the
/// `δ^{1/3}` cost floor only guarantees once `δ < 10⁻⁶`; at `q = 30` it fails.
const A6_Q: u32 = 2000;

const A6_FAMILIES: [FamilySpec; 3] = [
    FamilySpec::Free,
    FamilySpec::Uniform { k: 2 },
    FamilySpec::Graphic { vertices: 3 },
];

fn a6(cfg: &SuiteConfig) -> Result<Outcome, ExperimentError> {
    let instances = cfg.scale(50, 5);
    let trials = cfg.scale(1000, 100);
    let tb = TieBreak::ByCostRatio;
    let rows: Vec<Vec<Vec<String>>> = (0..instances)
        .into_par_iter()
        .map(|k| -> Result<Vec<Vec<String>>, ExperimentError> {
            let spec = StrictSpec {
                n: 3,
                q: A6_Q,
                family: A6_FAMILIES[k % A6_FAMILIES.len()],
            };
            let seed = cfg.seed_for(6, k);
            let inst = strict_instance(&spec, seed)?;
            let eq = construct_eq_weighted(&inst, &tb)?;
            let report = check_structural_lemmas(&inst, &eq, &spec.delta(), trials, seed, &tb)?;
            Ok(report
                .checks()
                .iter()
                .map(|c| {
                    let ok = c.violation_count == 0 && c.checked == trials;
                    let witness = c
                        .violations
                        .first()
                        .map(|v| format!("{}: {}", join(&v.witness.0), v.detail))
                        .unwrap_or_default();
                    vec![
                        k.to_string(),
                        seed.to_string(),
                        spec.family.name().to_string(),
                        c.name.to_string(),
                        c.checked.to_string(),
                        c.skipped.to_string(),
                        c.violation_count.to_string(),
                        witness,
                        ok.to_string(),
                    ]
                })
                .collect())
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<Vec<String>> = rows.into_iter().flatten().collect();
    let violations: usize = rows.iter().map(|r| r[6].parse::<usize>().unwrap_or(0)).sum();
    let short = rows.iter().filter(|r| r[4] != trials.to_string()).count();
    let detail = format!("{instances} strict instances x 3 checks x {trials} trials: {violations} violations, {short} checks short of samples");
    Ok((
        violations == 0 && short == 0,
        detail,
        vec![
            "instance",
            "seed",
            "family",
            "check",
            "checked",
            "skipped",
            "violations",
            "first_witness",
            "pass",
        ],
        rows,
    ))
}

/// The learning-rate constant, frozen after one sweep over 0.25..16 on four exploratory
/// instances drawn with generator seeds 5000..5003 (not used by the evaluation): the
/// smallest value reaching the best convergence count.
pub const TUNED_C0: f64 = 2.0;

fn a7(cfg: &SuiteConfig) -> Result<Outcome, ExperimentError> {
    let instances = cfg.scale(10, 2);
    let seeds = cfg.scale(10, 3);
    let rounds: u64 = if cfg.quick { 20_000 } else { 200_000 };
    let window = if cfg.quick { 2_000 } else { 10_000 };
    let needed = (seeds * 7).div_ceil(10);
    let delta = s("0.05");
    let tb = TieBreak::ByCostRatio;

    let mut setups = Vec::new();
    for k in 0..instances {
        let n = 2 + k % 2;
        let family = if (k / 2) % 2 == 0 {
            FamilySpec::Free
        } else {
            FamilySpec::Uniform { k: n - 1 }
        };
        let spec = GenSpec {
            min_cost: s("0.1"),
            ..GenSpec::new(n, s("0.5"), family)
        };
        let seed = cfg.seed_for(7, k);
        let inst = generate_instance(&spec, seed)?;
        let eq = construct_eq_weighted(&inst, &tb)?;
        setups.push((k, seed, family, inst, eq));
    }
    let jobs: Vec<(usize, u64)> = (0..instances)
        .flat_map(|k| (0..seeds as u64).map(move |r| (k, r)))
        .collect();
    let outcomes: Vec<(bool, bool, PriceVector)> = jobs
        .par_iter()
        .map(|&(k, run)| -> Result<(bool, bool, PriceVector), ExperimentError> {
            let (_, seed, _, inst, eq) = &setups[k];
            let config = DynamicsConfig {
                c0: TUNED_C0,
                ..DynamicsConfig::new(delta.clone(), rounds, seed.wrapping_add(run))
            };
            let trace = run_dynamics(inst, &config)?;
            let all = check_convergence(&trace, &eq.prices, &delta, window)?;
            // diagnostic: the same test restricted to the modules selected at equilibrium
            let start = trace.rounds() - window;
            let selected_only = (start..trace.rounds()).all(|t| {
                eq.selected.iter().all(|&i| {
                    let gap = trace.price(t, i) - eq.prices.get(i);
                    &gap * &gap <= delta
                })
            });
            Ok((all, selected_only, trace.modal_prices(window)))
        })
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut passing_instances = 0;
    let mut selected_instances = 0;
    for (k, seed, family, inst, eq) in &setups {
        let mine = &outcomes[k * seeds..(k + 1) * seeds];
        let converged = mine.iter().filter(|o| o.0).count();
        let selected_converged = mine.iter().filter(|o| o.1).count();
        let ok = converged >= needed;
        passing_instances += usize::from(ok);
        selected_instances += usize::from(selected_converged >= needed);
        rows.push(vec![
            k.to_string(),
            seed.to_string(),
            inst.n().to_string(),
            family.name().to_string(),
            join(inst.costs()),
            join(inst.values()),
            eq.prices.0.iter().map(dec).collect::<Vec<_>>().join(" "),
            eq.selected
                .iter()
                .map(|i| (i + 1).to_string())
                .collect::<Vec<_>>()
                .join(" "),
            mine[0].2 .0.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "),
            format!("{converged}/{seeds}"),
            format!("{selected_converged}/{seeds}"),
            ok.to_string(),
        ]);
    }
    let detail = format!(
        "{passing_instances}/{instances} instances converge on >= {needed}/{seeds} seeds (T = {rounds}, window {window}, c0 = {TUNED_C0}); restricted to modules selected at equilibrium: {selected_instances}/{instances}"
    );
    Ok((
        passing_instances == instances,
        detail,
        vec![
            "instance",
            "seed",
            "n",
            "family",
            "costs",
            "values",
            "target",
            "selected",
            "modal_prices_first_seed",
            "converged",
            "converged_selected_only",
            "pass",
        ],
        rows,
    ))
}

/// First failed matroid axiom, by enumeration over all subsets (`n <= 12`): the empty
/// set is independent, independence is hereditary and augmentable, rank is the size of a
/// largest independent subset, and fundamental circuits are minimal dependent sets
/// through the added element.
pub fn matroid_axiom_violation(m: &Matroid) -> Option<String> {
    let n = m.ground_size();
    assert!(n <= 12, "axiom enumeration is exponential");
    let members = |mask: usize| -> Vec<usize> { (0..n).filter(|e| mask >> e & 1 == 1).collect() };
    let indep: Vec<bool> = (0..1usize << n).map(|mask| m.independent(&members(mask))).collect();
    if !indep[0] {
        return Some("empty set is dependent".into());
    }
    for mask in 0..1usize << n {
        let set = members(mask);
        if indep[mask] {
            if let Some(e) = set.iter().find(|&&e| !indep[mask & !(1 << e)]) {
                return Some(format!("{set:?} independent but dropping {e} is not"));
            }
        }
        let largest = (0..1usize << n)
            .filter(|&sub| sub & !mask == 0 && indep[sub])
            .map(|sub| sub.count_ones() as usize)
            .max()
            .unwrap_or(0);
        if m.rank_of(&set) != largest {
            return Some(format!(
                "rank of {set:?} is {} but its largest independent subset has {largest}",
                m.rank_of(&set)
            ));
        }
    }
    for small in (0..1usize << n).filter(|&a| indep[a]) {
        for big in (0..1usize << n).filter(|&b| indep[b] && b.count_ones() > small.count_ones()) {
            if !members(big & !small).iter().any(|&e| indep[small | 1 << e]) {
                return Some(format!(
                    "{:?} cannot be augmented from {:?}",
                    members(small),
                    members(big)
                ));
            }
        }
        let g = members(small);
        for e in (0..n).filter(|&e| small >> e & 1 == 0 && !indep[small | 1 << e]) {
            let circuit = m.circuit(&g, e);
            let cmask = circuit.iter().fold(0usize, |acc, &x| acc | 1 << x);
            let minimal = circuit.iter().all(|&x| indep[cmask & !(1 << x)]);
            if !circuit.contains(&e) || indep[cmask] || !minimal {
                return Some(format!("circuit of {e} over {g:?} is {circuit:?}"));
            }
        }
    }
    None
}

fn a8(cfg: &SuiteConfig) -> Result<Outcome, ExperimentError> {
    let count = cfg.scale(1000, 100);
    let families = [
        FamilySpec::Free,
        FamilySpec::Uniform { k: 3 },
        FamilySpec::Partition { blocks: 3, cap: 2 },
        FamilySpec::Graphic { vertices: 5 },
    ];
    let mut rows: Vec<Vec<String>> = (0..count)
        .into_par_iter()
        .map(|k| -> Result<Vec<String>, ExperimentError> {
            let n = 1 + k % 10;
            let family = families[k % families.len()];
            let seed = cfg.seed_for(8, k);
            let inst = generate_instance(&GenSpec::new(n, Scalar::one(), family), seed)?;
            // a budget no selection can exhaust stands in for an infinite one
            let unbounded = inst.with_budget(inst.costs().iter().sum::<Scalar>() + Scalar::one())?;
            let greedy = greedy_bpb(&unbounded, &unbounded.cost_prices(), &TieBreak::ByCostRatio).selected;
            let all: Vec<usize> = (0..n).collect();
            let best = inst.matroid().max_weight_independent(inst.values(), &all);
            let distinct = {
                let mut v = inst.values().to_vec();
                v.sort();
                v.windows(2).all(|w| w[0] != w[1])
            };
            let ok = inst.value_of(&greedy) == inst.value_of(&best) && (!distinct || greedy == best);
            Ok(vec![
                "greedy-vs-max-weight".into(),
                family.name().into(),
                n.to_string(),
                seed.to_string(),
                inst.value_of(&greedy).to_string(),
                inst.value_of(&best).to_string(),
                ok.to_string(),
            ])
        })
        .collect::<Result<_, _>>()?;

    let mut matroids: Vec<(String, Matroid)> = Vec::new();
    for n in 0..=8 {
        matroids.push((format!("free n={n}"), Matroid::free(n)));
        for k in 0..=n {
            matroids.push((format!("uniform n={n} k={k}"), Matroid::uniform(n, k)));
        }
    }
    let random = cfg.scale(30, 6);
    for k in 0..random {
        let n = 1 + k % 8;
        let seed = cfg.seed_for(80, k);
        for family in [
            FamilySpec::Partition { blocks: 3, cap: 2 },
            FamilySpec::Graphic { vertices: 4 },
        ] {
            let inst = generate_instance(&GenSpec::new(n, Scalar::one(), family), seed)?;
            matroids.push((format!("{} n={n} seed={seed}", family.name()), inst.matroid().clone()));
        }
    }
    let axioms: Vec<Vec<String>> = matroids
        .par_iter()
        .map(|(name, m)| {
            let violation = matroid_axiom_violation(m);
            vec![
                "axioms".into(),
                name.clone(),
                m.ground_size().to_string(),
                String::new(),
                String::new(),
                violation.clone().unwrap_or_default(),
                violation.is_none().to_string(),
            ]
        })
        .collect();
    let greedy_bad = rows.iter().filter(|r| r[6] != "true").count();
    let axiom_bad = axioms.iter().filter(|r| r[6] != "true").count();
    rows.extend(axioms);
    let detail = format!(
        "greedy mismatches {greedy_bad}/{count}; axiom failures {axiom_bad}/{}",
        matroids.len()
    );
    Ok((
        greedy_bad == 0 && axiom_bad == 0,
        detail,
        vec![
            "check",
            "family",
            "n",
            "seed",
            "greedy_value",
            "max_weight_value_or_violation",
            "pass",
        ],
        rows,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criterion_ids_round_trip() {
        for c in Criterion::ALL {
            assert_eq!(Criterion::parse(c.id()).unwrap(), c);
        }
        assert!(Criterion::parse("A9").is_err());
    }

    #[test]
    fn bisection_matches_breakpoint() {
        let inst = Instance::new(sv(&["1", "1"]), sv(&["0.3", "0.5"]), s("1"), Matroid::free(2)).unwrap();
        assert_eq!(cpv_star(&inst).unwrap(), s("1/2"));
        assert!((cpv_bisection(&inst) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn profile_enumeration() {
        let grid = BidGrid::new(s("1/2"), &s("1")).unwrap();
        let all = profiles(&grid, 2);
        assert_eq!(all.len(), 4);
        assert_eq!(all[1].0, sv(&["1/2", "1"]));
        assert_eq!(multisets(&sv(&["1", "2", "3"]), 3).len(), 10);
    }

    #[test]
    fn axiom_checker_accepts_implementations() {
        assert_eq!(matroid_axiom_violation(&Matroid::uniform(5, 2)), None);
        let g = Matroid::graphic(4, vec![(0, 1), (1, 2), (0, 2), (2, 3), (2, 3)]).unwrap();
        assert_eq!(matroid_axiom_violation(&g), None);
    }

    #[test]
    fn fault_breaks_constructor_soundness() {
        let cfg = SuiteConfig {
            quick: true,
            seed: 1,
            fault: Some(Fault::CorruptWeightedConstructor),
        };
        let result = run_criterion(Criterion::A2, &cfg).unwrap();
        assert!(!result.pass);
        assert!(result.line().starts_with("A2 FAIL [smoke]"));
    }
}
