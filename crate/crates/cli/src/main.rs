//! `pricecomp`: selection, equilibrium construction and verification, learning
//! simulations and the acceptance suite, all over exact JSON documents.
//!
//! Exit codes: 0 success, 1 a check failed (not an equilibrium, no convergence, a
//! criterion failed), 2 bad usage or unreadable input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pricecomp::equilibrium::{
    additive_equilibrium, construct_eq_unweighted, construct_eq_weighted, opt_with_costs_bnb, verify_eps_equilibrium,
    AdditiveCase, DevGrid, EquilibriumOutput,
};
use pricecomp::experiments::{run_criterion, summary_json, Criterion, Fault, SuiteConfig};
use pricecomp::generate::{generate_instance, FamilySpec, GenSpec};
use pricecomp::io::{load_instance, load_prices, save_instance};
use pricecomp::learning::{
    check_convergence, paper_switch_round, run_dynamics, DynamicsConfig, DynamicsTrace, RewardMode,
};
use pricecomp::{Instance, PriceVector, Rule, Scalar, TieBreak};

#[derive(Parser)]
#[command(
    name = "pricecomp",
    version,
    about = "Budget-constrained procurement pricing experiments"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "PRICECOMP_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random instance.
    Generate(GenerateArgs),
    /// Run a selection rule at given prices.
    Select(SelectArgs),
    /// Build equilibrium prices.
    ConstructEq(ConstructArgs),
    /// Check an ε-equilibrium by exact best-response search (exit 1 if it is not one).
    VerifyEq(VerifyArgs),
    /// Value of a rule's selection against the cost-known optimum.
    Approx(ApproxArgs),
    /// Multiplicative-weights price learning with distorted payments.
    Simulate(SimulateArgs),
    /// Simulations over several grid steps and seeds, one CSV row per run.
    Sweep(SweepArgs),
    /// Run the acceptance criteria A1 to A8 (exit 1 if any fails).
    PaperSuite(SuiteArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Tie {
    /// Higher value-to-cost ratio first.
    CostRatio,
    Index,
}

impl Tie {
    fn tie_break(self) -> TieBreak {
        match self {
            Tie::CostRatio => TieBreak::ByCostRatio,
            Tie::Index => TieBreak::ByIndex,
        }
    }
}

#[derive(Args)]
struct Output {
    /// Write here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl Output {
    fn emit(&self, bytes: &[u8]) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
            None => std::io::stdout().write_all(bytes).context("writing stdout"),
        }
    }

    fn json(&self, value: &Value) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.emit(&bytes)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    /// Largest cost as a fraction of the budget.
    #[arg(long)]
    lambda: Scalar,
    /// Smallest cost (default λB/5).
    #[arg(long)]
    min_cost: Option<Scalar>,
    #[arg(long, default_value = "1")]
    budget: Scalar,
    /// free, uniform:K, partition:BLOCKS:CAP or graphic:VERTICES.
    #[arg(long, default_value = "free", value_parser = parse_family)]
    family: FamilySpec,
    #[arg(long, default_value = "1")]
    min_value: Scalar,
    #[arg(long, default_value = "10")]
    max_value: Scalar,
    #[arg(long)]
    unit_values: bool,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long, default_value = "bpb")]
    rule: Rule,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    prices: PathBuf,
    #[arg(long, value_enum, default_value = "cost-ratio")]
    tie_break: Tie,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    /// Critical cost-per-value prices (free matroid; needs --eps).
    Additive,
    /// Circuit-freezing construction for the skip-infeasible greedy.
    Unweighted,
    /// Circuit-swap construction for the bang-per-buck greedy.
    Weighted,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    eps: Option<Scalar>,
    #[arg(long, value_enum, default_value = "cost-ratio")]
    tie_break: Tie,
    /// Include the per-iteration trace.
    #[arg(long)]
    trace: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    prices: PathBuf,
    #[arg(long, default_value = "0")]
    eps: Scalar,
    #[arg(long, default_value = "bpb")]
    rule: Rule,
    #[arg(long, value_enum, default_value = "cost-ratio")]
    tie_break: Tie,
    /// How close open interval ends are approached (default: a quarter of the smallest gap).
    #[arg(long)]
    eta: Option<Scalar>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    prices: PathBuf,
    #[arg(long, default_value = "bpb")]
    rule: Rule,
    #[arg(long, value_enum, default_value = "cost-ratio")]
    tie_break: Tie,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Clone)]
struct DynamicsArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    rounds: u64,
    /// Last round of the first payment phase (default: a third of the rounds).
    #[arg(long, conflicts_with = "paper_t0")]
    t0: Option<u64>,
    /// Use the phase switch from the convergence proof, ⌈n²/δ²²⌉ (capped at u64::MAX).
    #[arg(long)]
    paper_t0: bool,
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
    #[arg(long)]
    seed: u64,
    /// Runs per setting, seeded `seed, seed+1, ..`.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Refuse instances outside the regime of the convergence argument.
    #[arg(long)]
    strict_assumptions: bool,
    /// Reward a selected module with its price rather than price minus cost.
    #[arg(long)]
    gross: bool,
    /// Target prices (default: the weighted construction).
    #[arg(long)]
    target: Option<PathBuf>,
    /// Trailing rounds inspected for convergence and modal prices (default rounds/20).
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, value_enum, default_value = "cost-ratio")]
    tie_break: Tie,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    dynamics: DynamicsArgs,
    #[arg(long)]
    delta: Scalar,
    /// Per-round CSV trace (round, module, price, selected, reward) for every seed.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    dynamics: DynamicsArgs,
    /// Comma-separated grid steps.
    #[arg(long, value_delimiter = ',', required = true)]
    deltas: Vec<Scalar>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SuiteArgs {
    /// Directory for per-criterion CSVs and summary.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Reduced instances, seeds and rounds; results are marked as a smoke run.
    #[arg(long)]
    quick: bool,
    /// Comma-separated subset, e.g. A1,A3.
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// Corrupt the weighted construction to demonstrate a failing criterion.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

fn parse_family(s: &str) -> Result<FamilySpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |x: &str| x.parse::<usize>().map_err(|e| format!("`{x}`: {e}"));
    match parts.as_slice() {
        ["free"] => Ok(FamilySpec::Free),
        ["uniform", k] => Ok(FamilySpec::Uniform { k: num(k)? }),
        ["partition", blocks, cap] => Ok(FamilySpec::Partition {
            blocks: num(blocks)?,
            cap: num(cap)?,
        }),
        ["graphic", vertices] => Ok(FamilySpec::Graphic {
            vertices: num(vertices)?,
        }),
        _ => Err(format!(
            "unknown family `{s}` (free, uniform:K, partition:BLOCKS:CAP, graphic:VERTICES)"
        )),
    }
}

fn read_instance(path: &Path) -> Result<Instance> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    load_instance(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn read_prices(path: &Path, n: usize) -> Result<PriceVector> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    load_prices(&bytes, n).with_context(|| format!("parsing {}", path.display()))
}

fn ids(set: &[usize]) -> Value {
    json!(set.iter().map(|i| i + 1).collect::<Vec<_>>())
}

fn scalars(xs: &[Scalar]) -> Value {
    json!(xs.iter().map(Scalar::to_string).collect::<Vec<_>>())
}

fn exact(x: &Scalar) -> Value {
    json!({ "exact": x.to_string(), "decimal": x.to_decimal_string(12) })
}

fn generate(args: &GenerateArgs) -> Result<u8> {
    let min_cost = args
        .min_cost
        .clone()
        .unwrap_or_else(|| &args.lambda * &args.budget / Scalar::from_int(5));
    let spec = GenSpec {
        n: args.n,
        lambda: args.lambda.clone(),
        min_cost,
        budget: args.budget.clone(),
        values: (args.min_value.clone(), args.max_value.clone()),
        unit_values: args.unit_values,
        family: args.family,
    };
    let inst = generate_instance(&spec, args.seed)?;
    args.output.emit(&save_instance(&inst))?;
    Ok(0)
}

fn select(args: &SelectArgs) -> Result<u8> {
    let inst = read_instance(&args.instance)?;
    let p = read_prices(&args.prices, inst.n())?;
    let sel = args.rule.select(&inst, &p, &args.tie_break.tie_break())?;
    args.output.json(&json!({
        "rule": args.rule.name(),
        "selected": ids(&sel.selected),
        "spend": sel.spend.to_string(),
        "value": inst.value_of(&sel.selected).to_string(),
        "order": ids(&sel.inspection_order),
        "swaps": sel.swaps.iter().map(|s| json!({
            "removed": s.removed + 1,
            "added": s.added + 1,
            "circuit": ids(&s.circuit),
        })).collect::<Vec<_>>(),
        "terminated_at": sel.terminated_at.map(|i| i + 1),
    }))?;
    Ok(0)
}

fn equilibrium_json(inst: &Instance, out: &EquilibriumOutput, trace: bool) -> Value {
    let mut doc = json!({
        "prices": scalars(out.prices.as_slice()),
        "selected": ids(&out.selected),
        "value": inst.value_of(&out.selected).to_string(),
        "spend": out.prices.sum_over(&out.selected).to_string(),
        "order": ids(&out.order),
        "initial_order": ids(&out.initial_order),
        "last_iteration": out.last_iteration,
        "slack": out.slack.as_ref().map(Scalar::to_string),
    });
    if trace {
        doc["trace"] = json!(out
            .trace
            .iter()
            .map(|s| json!({
                "k": s.k,
                "inspected": s.inspected + 1,
                "frozen": ids(&s.frozen),
                "raising": ids(&s.raising),
                "prices": scalars(s.prices.as_slice()),
                "order": ids(&s.order),
                "circuit": s.circuit.as_deref().map(ids),
                "evicted": s.evicted.map(|i| i + 1),
                "rolled_back": s.rolled_back,
            }))
            .collect::<Vec<_>>());
    }
    doc
}

fn construct(args: &ConstructArgs) -> Result<u8> {
    let inst = read_instance(&args.instance)?;
    let tb = args.tie_break.tie_break();
    let (out, case) = match args.algo {
        Algo::Additive => {
            let Some(eps) = &args.eps else {
                bail!("--algo additive needs --eps")
            };
            let (out, case) = additive_equilibrium(&inst, eps)?;
            let case = match case {
                AdditiveCase::Breakpoint { module } => json!({ "breakpoint": module + 1 }),
                AdditiveCase::Interior => json!("interior"),
            };
            (out, Some(case))
        }
        Algo::Unweighted => (construct_eq_unweighted(&inst, &tb)?, None),
        Algo::Weighted => (construct_eq_weighted(&inst, &tb)?, None),
    };
    let mut doc = equilibrium_json(&inst, &out, args.trace);
    doc["algo"] = json!(args.algo.to_possible_value().map(|v| v.get_name().to_string()));
    if let Some(case) = case {
        doc["case"] = case;
    }
    args.output.json(&doc)?;
    Ok(0)
}

fn verify(args: &VerifyArgs) -> Result<u8> {
    let inst = read_instance(&args.instance)?;
    let p = read_prices(&args.prices, inst.n())?;
    let grid = match &args.eta {
        Some(eta) => DevGrid::ExactWithEta(eta.clone()),
        None => DevGrid::Exact,
    };
    let report = verify_eps_equilibrium(&inst, &p, &args.eps, args.rule, &args.tie_break.tie_break(), &grid)?;
    args.output.json(&json!({
        "pass": report.pass,
        "eps": report.eps.to_string(),
        "eta": report.eta.as_ref().map(Scalar::to_string),
        "max_gain": report.max_gain().to_string(),
        "violators": ids(&report.violators()),
        "modules": report.modules.iter().map(|m| json!({
            "module": m.module + 1,
            "price": m.price.to_string(),
            "utility": m.utility.to_string(),
            "best_price": m.best_price.to_string(),
            "best_utility": m.best_utility.to_string(),
            "gain": m.gain.to_string(),
            "candidates": m.candidates,
            "profitable": m.profitable,
        })).collect::<Vec<_>>(),
    }))?;
    Ok(if report.pass { 0 } else { 1 })
}

fn approx(args: &ApproxArgs) -> Result<u8> {
    let inst = read_instance(&args.instance)?;
    let p = read_prices(&args.prices, inst.n())?;
    let sel = args.rule.select(&inst, &p, &args.tie_break.tie_break())?;
    let got = inst.value_of(&sel.selected);
    let (best, opt) = opt_with_costs_bnb(&inst);
    let ratio = if opt.is_zero() { Scalar::one() } else { &got / &opt };
    args.output.json(&json!({
        "rule": args.rule.name(),
        "selected": ids(&sel.selected),
        "value": got.to_string(),
        "opt": opt.to_string(),
        "opt_set": ids(&best),
        "ratio": exact(&ratio),
    }))?;
    Ok(0)
}

struct Run {
    seed: u64,
    trace: DynamicsTrace,
    converged: bool,
    window: usize,
}

fn dynamics_config(args: &DynamicsArgs, inst: &Instance, delta: &Scalar, seed: u64) -> Result<DynamicsConfig> {
    let mut config = DynamicsConfig::new(delta.clone(), args.rounds, seed);
    if let Some(t0) = args.t0 {
        config.switch_round = t0;
    }
    if args.paper_t0 {
        let t0 = paper_switch_round(inst.n(), delta)?;
        config.switch_round = t0.to_i64().and_then(|x| u64::try_from(x).ok()).unwrap_or(u64::MAX);
    }
    config.c0 = args.c0;
    config.strict = args.strict_assumptions;
    config.mode = if args.gross { RewardMode::Gross } else { RewardMode::Net };
    config.tie_break = args.tie_break.tie_break();
    Ok(config)
}

fn target_prices(args: &DynamicsArgs, inst: &Instance) -> Result<(PriceVector, &'static str)> {
    Ok(match &args.target {
        Some(path) => (read_prices(path, inst.n())?, "file"),
        None => (
            construct_eq_weighted(inst, &args.tie_break.tie_break())?.prices,
            "weighted construction",
        ),
    })
}

fn run_seeds(args: &DynamicsArgs, inst: &Instance, delta: &Scalar, target: &PriceVector) -> Result<Vec<Run>> {
    let window = args.window.unwrap_or((args.rounds / 20).max(1) as usize);
    (0..args.seeds)
        .map(|k| {
            let seed = args.seed.wrapping_add(k);
            let trace = run_dynamics(inst, &dynamics_config(args, inst, delta, seed)?)?;
            let converged = check_convergence(&trace, target, delta, window)?;
            Ok(Run {
                seed,
                trace,
                converged,
                window,
            })
        })
        .collect()
}

fn simulate(args: &SimulateArgs) -> Result<u8> {
    let d = &args.dynamics;
    let inst = read_instance(&d.instance)?;
    let (target, source) = target_prices(d, &inst)?;
    let runs = run_seeds(d, &inst, &args.delta, &target)?;
    if let Some(path) = &args.trace {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(["seed", "round", "module", "price", "selected", "reward"])?;
        for run in &runs {
            for t in 0..run.trace.rounds() {
                for i in 0..run.trace.n() {
                    w.write_record([
                        run.seed.to_string(),
                        (t + 1).to_string(),
                        (i + 1).to_string(),
                        run.trace.price(t, i).to_string(),
                        u8::from(run.trace.is_selected(t, i)).to_string(),
                        format!("{:.12e}", run.trace.reward(t, i)),
                    ])?;
                }
            }
        }
        w.flush()?;
    }
    let converged = runs.iter().filter(|r| r.converged).count();
    args.output.json(&json!({
        "delta": args.delta.to_string(),
        "rounds": d.rounds,
        "target": scalars(target.as_slice()),
        "target_source": source,
        "converged_runs": converged,
        "runs": runs.iter().map(|r| json!({
            "seed": r.seed,
            "window": r.window,
            "modal_prices": scalars(r.trace.modal_prices(r.window).as_slice()),
            "final_prices": scalars(r.trace.prices(r.trace.rounds() - 1).as_slice()),
            "converged": r.converged,
        })).collect::<Vec<_>>(),
    }))?;
    Ok(if converged == runs.len() { 0 } else { 1 })
}

fn sweep(args: &SweepArgs) -> Result<u8> {
    let d = &args.dynamics;
    let inst = read_instance(&d.instance)?;
    let (target, _) = target_prices(d, &inst)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "delta",
        "seed",
        "rounds",
        "window",
        "modal_prices",
        "target",
        "converged",
    ])?;
    for delta in &args.deltas {
        for run in run_seeds(d, &inst, delta, &target)? {
            w.write_record([
                delta.to_string(),
                run.seed.to_string(),
                d.rounds.to_string(),
                run.window.to_string(),
                run.trace
                    .modal_prices(run.window)
                    .0
                    .iter()
                    .map(Scalar::to_string)
                    .collect::<Vec<_>>()
                    .join(" "),
                target.0.iter().map(Scalar::to_string).collect::<Vec<_>>().join(" "),
                run.converged.to_string(),
            ])?;
        }
    }
    args.output.emit(&w.into_inner()?)?;
    Ok(0)
}

fn paper_suite(args: &SuiteArgs) -> Result<u8> {
    let criteria = if args.only.is_empty() {
        Criterion::ALL.to_vec()
    } else {
        args.only
            .iter()
            .map(|s| Ok(Criterion::parse(s.trim())?))
            .collect::<Result<Vec<_>>>()?
    };
    let cfg = SuiteConfig {
        quick: args.quick,
        seed: args.seed,
        fault: args.inject_fault.then_some(Fault::CorruptWeightedConstructor),
    };
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut results = Vec::new();
    for c in criteria {
        let result = run_criterion(c, &cfg)?;
        println!("{}", result.line());
        let path = args.out.join(format!("{}.csv", c.id()));
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(&result.header)?;
        for row in &result.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        results.push(result);
    }
    let summary = summary_json(&results, &cfg);
    let mut bytes = serde_json::to_vec_pretty(&summary)?;
    bytes.push(b'\n');
    fs::write(args.out.join("summary.json"), bytes)?;
    Ok(if results.iter().all(|r| r.pass) { 0 } else { 1 })
}

fn run(cli: &Cli) -> Result<u8> {
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("starting the worker pool")?;
    }
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Select(a) => select(a),
        Command::ConstructEq(a) => construct(a),
        Command::VerifyEq(a) => verify(a),
        Command::Approx(a) => approx(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::PaperSuite(a) => paper_suite(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
