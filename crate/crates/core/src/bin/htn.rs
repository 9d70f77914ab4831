use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use htn::bench::{run_bench, BenchSpec};
use htn::generate::{gen_logistics, GenSpec};
use htn::io::{
    classify_domain, load_problem, parse_domain, parse_plan_json, parse_plan_text, plan_document, serialize_plan,
    ParseErrors, PlanFormat, SolutionInfo,
};
use htn::model::{EngineMode, Outcome, Plan, PlanningProblem, SearchStats, Style};
use htn::oracle::oracle_enumerate;
use htn::plan_engine::{all_plans_po, plan_po};
use htn::search::{AllPlans, EngineError, SearchConfig};
use htn::state_engine::{all_plans_state, plan_state};
use htn::validate::{validate_plan, Validation};

const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "htn", version, about = "Hierarchical task network planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    State,
    Plan,
}

#[derive(Clone, Copy, ValueEnum)]
enum StyleArg {
    Totd,
    Utd,
    Potd,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum FormatArg {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a plan.
    Solve {
        domain: PathBuf,
        problem: PathBuf,
        /// Overrides the problem's `:engine`.
        #[arg(long, value_enum)]
        engine: Option<EngineArg>,
        /// Overrides the problem's `:style`.
        #[arg(long, value_enum)]
        style: Option<StyleArg>,
        /// Maximum number of decompositions.
        #[arg(long)]
        budget: Option<u64>,
        /// Report every plan within the budget.
        #[arg(long)]
        all_solutions: bool,
        /// Add search statistics and, for the plan engine, the final network.
        #[arg(long)]
        explain: bool,
        /// Check plans with the independent validator before printing.
        #[arg(long)]
        validate: bool,
        /// Ignore protection requests of operators.
        #[arg(long)]
        no_protections: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
    },
    /// Check a plan (text, or a JSON document from `solve`) against a problem.
    Validate { domain: PathBuf, problem: PathBuf, plan: PathBuf },
    /// Enumerate every plan by brute force.
    Oracle {
        domain: PathBuf,
        problem: PathBuf,
        #[arg(long, default_value_t = 200)]
        depth: usize,
        #[arg(long)]
        no_protections: bool,
    },
    /// Write a random logistics problem.
    GenLogistics {
        #[arg(long, default_value_t = 1)]
        boxes: usize,
        #[arg(long, default_value_t = 2)]
        cities: usize,
        #[arg(long, default_value_t = 2)]
        locs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for the domain and problem files; without it both are
        /// printed as one JSON document.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the number of boxes over generated problems.
    Bench {
        /// Inclusive range such as `1..10`, or a single count.
        #[arg(long, default_value = "1..5")]
        boxes: String,
        #[arg(long, default_value_t = 3)]
        cities: usize,
        #[arg(long, default_value_t = 3)]
        locs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "state")]
        engine: Vec<EngineArg>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        parallel: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Structural class of a domain.
    Classify {
        domain: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Parse(ParseErrors),
    Engine(EngineError),
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        Failure::Engine(e)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load(domain: &Path, problem: &Path) -> Result<PlanningProblem, Failure> {
    let (dt, pt) = (read(domain)?, read(problem)?);
    load_problem(&dt, &domain.display().to_string(), &pt, &problem.display().to_string()).map_err(Failure::Parse)
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("documents serialize"));
}

fn check(plan: &Plan, problem: &PlanningProblem) -> Result<(), Failure> {
    match validate_plan(plan, problem) {
        Validation::Valid => Ok(()),
        v => Err(Failure::Input(format!("engine produced an invalid plan: {v}"))),
    }
}

#[allow(clippy::too_many_arguments)]
fn solve(
    domain: &Path,
    problem: &Path,
    engine: Option<EngineArg>,
    style: Option<StyleArg>,
    budget: Option<u64>,
    all: bool,
    explain: bool,
    validate: bool,
    protections: bool,
    format: FormatArg,
) -> Result<u8, Failure> {
    let problem = load(domain, problem)?;
    let mut config = SearchConfig::for_problem(&problem);
    if let Some(s) = style {
        config = config.with_style(match s {
            StyleArg::Totd => Style::Totd,
            StyleArg::Utd => Style::Utd,
            StyleArg::Potd => Style::Potd,
        });
    }
    if let Some(b) = budget {
        config = config.with_budget(b);
    }
    config.protections = protections;
    let engine = match engine {
        Some(EngineArg::State) => EngineMode::State,
        Some(EngineArg::Plan) => EngineMode::Plan,
        None => problem.def.engine,
    };

    if all {
        let AllPlans { plans, complete, stats } = match engine {
            EngineMode::State => all_plans_state(&problem, config)?,
            EngineMode::Plan => all_plans_po(&problem, config)?,
        };
        if validate {
            for p in &plans {
                check(p, &problem)?;
            }
        }
        let code = match (plans.is_empty(), complete) {
            (false, _) => 0,
            (true, true) => 1,
            (true, false) => 2,
        };
        if format == FormatArg::Text {
            for (i, p) in plans.iter().enumerate() {
                println!("; plan {i}");
                print!("{}", serialize_plan(p, PlanFormat::Text));
            }
            if !complete {
                println!("; budget exhausted, list may be incomplete");
            }
        } else {
            let docs: Vec<Value> = plans.iter().map(|p| plan_document("plan", Some(p), None, None)).collect();
            let mut doc = json!({"result": if code == 0 { "plan" } else if code == 1 { "no-solution" } else { "budget-exhausted" },
                "complete": complete, "plans": docs});
            if explain {
                doc["stats"] = serde_json::to_value(stats).expect("stats serialize");
            }
            print_json(&doc);
        }
        return Ok(code);
    }

    let (result, info): (_, Option<SolutionInfo>) = match engine {
        EngineMode::State => (plan_state(&problem, config)?, None),
        EngineMode::Plan => {
            let r = plan_po(&problem, config)?;
            (r.result, r.info)
        }
    };
    if let (true, Some(p)) = (validate, result.outcome.plan()) {
        check(p, &problem)?;
    }
    match format {
        FormatArg::Text => match &result.outcome {
            Outcome::Plan(p) => print!("{}", serialize_plan(p, PlanFormat::Text)),
            other => println!("; {}", other.label()),
        },
        FormatArg::Json => {
            let stats: Option<&SearchStats> = explain.then_some(&result.stats);
            let info = if explain { info.as_ref() } else { None };
            print_json(&plan_document(result.outcome.label(), result.outcome.plan(), stats, info));
        }
    }
    if explain && format == FormatArg::Text {
        eprintln!("{}", serde_json::to_string(&result.stats).expect("stats serialize"));
    }
    Ok(result.outcome.exit_code() as u8)
}

fn parse_range(text: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::Input(format!("bad range `{text}`, expected N or A..B"));
    match text.split_once("..") {
        Some((a, b)) => {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
            Ok((a..=b).collect())
        }
        None => Ok(vec![text.trim().parse().map_err(|_| bad())?]),
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Solve {
            domain,
            problem,
            engine,
            style,
            budget,
            all_solutions,
            explain,
            validate,
            no_protections,
            format,
        } => solve(&domain, &problem, engine, style, budget, all_solutions, explain, validate, !no_protections, format),
        Command::Validate { domain, problem, plan } => {
            let problem = load(&domain, &problem)?;
            let text = read(&plan)?;
            let plan = if text.trim_start().starts_with('{') {
                parse_plan_json(&text)
            } else {
                parse_plan_text(&text).map(|steps| Plan { steps, ..Plan::default() })
            }
            .map_err(Failure::Input)?;
            if plan.trace.roots.is_empty() && !problem.def.network.is_empty() {
                log::warn!("the plan has no decomposition trace; only executability is checked");
            }
            let v = validate_plan(&plan, &problem);
            let doc = match &v {
                Validation::Valid => json!({"valid": true}),
                Validation::Invalid { index, reason } => json!({"valid": false, "index": index, "reason": reason}),
            };
            print_json(&doc);
            Ok(if v.is_valid() { 0 } else { 1 })
        }
        Command::Oracle { domain, problem, depth, no_protections } => {
            let problem = load(&domain, &problem)?;
            let r = oracle_enumerate(&problem, depth, !no_protections)?;
            let plans: Vec<Vec<String>> = r.plans.iter().map(|p| p.iter().map(|s| s.to_string()).collect()).collect();
            print_json(&json!({"plans": plans, "count": plans.len(), "incomplete": r.incomplete, "nodes": r.nodes}));
            Ok(if !r.plans.is_empty() {
                0
            } else if r.incomplete {
                2
            } else {
                1
            })
        }
        Command::GenLogistics { boxes, cities, locs, seed, out } => {
            let g = gen_logistics(GenSpec { boxes, cities, locs_per_city: locs, seed })
                .map_err(|e| Failure::Input(e.to_string()))?;
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
                    let d = dir.join("logistics-routing.htd");
                    let p = dir.join(format!("logistics-b{boxes}-c{cities}-l{locs}-s{seed}.htp"));
                    for (path, text) in [(&d, &g.domain), (&p, &g.problem)] {
                        fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                        println!("{}", path.display());
                    }
                }
                None => print_json(&json!({"domain": g.domain, "problem": g.problem})),
            }
            Ok(0)
        }
        Command::Bench { boxes, cities, locs, seed, engine, budget, parallel, format } => {
            let spec = BenchSpec {
                boxes: parse_range(&boxes)?,
                cities,
                locs_per_city: locs,
                seed,
                engines: engine
                    .iter()
                    .map(|e| match e {
                        EngineArg::State => EngineMode::State,
                        EngineArg::Plan => EngineMode::Plan,
                    })
                    .collect(),
                budget,
                parallel,
            };
            let report = run_bench(&spec);
            match format {
                FormatArg::Text => print!("{}", report.to_text()),
                FormatArg::Json => println!("{}", report.to_json()),
            }
            Ok(if report.rows.iter().all(|r| r.exit_code == 0) { 0 } else { 1 })
        }
        Command::Classify { domain, format } => {
            let text = read(&domain)?;
            let d = parse_domain(&text, &domain.display().to_string()).map_err(Failure::Parse)?;
            let class = classify_domain(&d);
            match format {
                FormatArg::Text => println!("{class}"),
                FormatArg::Json => print_json(&serde_json::to_value(class).expect("classes serialize")),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Parse(errors)) => {
            for e in &errors.0 {
                eprintln!("{e}");
            }
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Engine(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
