//! One line per criterion: `PASS` or `FAIL`, then a short description and
//! what was measured. Exits non-zero when any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use htn::bench::{run_bench, BenchSpec};
use htn::fixtures;
use htn::io::{classify_domain, parse_domain, parse_problem, print_domain, CompoundSetting, OrderingSetting};
use htn::model::{EngineMode, Outcome, Plan, PlanningProblem, Step, TaskId};
use htn::oracle::oracle_enumerate;
use htn::plan_engine::{all_plans_po, propagate, PlanEngine, RefinementNode, ThreatKind};
use htn::search::SearchConfig;
use htn::state_engine::{all_plans_state, plan_state};
use htn::validate::{replay, validate_plan, Validation};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !($cond) {
            return Err(format!($($msg)+));
        }
    };
}

fn fig1_plan() -> Vec<Step> {
    vec![
        Step::new("!load-truck", &["t", "b", "l1"]),
        Step::new("!drive", &["t", "l1", "l2"]),
        Step::new("!unload-truck", &["t", "b", "l2"]),
        Step::new("!load-plane", &["p", "b", "l2"]),
        Step::new("!fly", &["p", "l2", "l4"]),
        Step::new("!unload-plane", &["p", "b", "l4"]),
    ]
}

fn state_plan(problem: &PlanningProblem) -> Result<Plan, String> {
    let r = plan_state(problem, SearchConfig::for_problem(problem)).map_err(|e| e.to_string())?;
    r.outcome.plan().cloned().ok_or_else(|| format!("state engine: {}", r.outcome.label()))
}

fn criterion_1() -> Check {
    let problem = fixtures::fig1();
    let start = Instant::now();
    let plan = state_plan(&problem)?;
    let elapsed = start.elapsed();
    ensure!(plan.steps == fig1_plan(), "got {:?}", plan.steps);
    for _ in 0..5 {
        ensure!(state_plan(&problem)? == plan, "a later run differed");
    }
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("6 steps, identical over 6 runs, {elapsed:?}"))
}

fn criterion_2() -> Check {
    let problem = fixtures::by_name("deliver-here").unwrap();
    let r = plan_state(&problem, SearchConfig::for_problem(&problem)).map_err(|e| e.to_string())?;
    let Outcome::Plan(plan) = &r.outcome else { return Err(r.outcome.label().into()) };
    ensure!(plan.steps.is_empty(), "steps {:?}", plan.steps);
    let d = &plan.trace.decompositions;
    ensure!(d.len() == 1 && d[0].rank == 3, "decompositions {d:?}");
    ensure!(r.stats.applications == 0, "{} applications", r.stats.applications);
    ensure!(r.stats.decompositions == 1, "{} decompositions counted", r.stats.decompositions);
    Ok("empty plan, one decomposition by branch 3, no applications".into())
}

fn establish_all(engine: &PlanEngine, node: RefinementNode) -> Result<RefinementNode, String> {
    let mut node = propagate(&node).ok_or("inconsistent start")?;
    while !node.agenda.is_empty() {
        node = engine.establish(&node, 0).into_iter().next().ok_or("unsupported obligation")?;
        node = propagate(&node).ok_or("inconsistent after establishing")?;
    }
    Ok(node)
}

fn criterion_3() -> Check {
    let problem = fixtures::fig3a();
    let engine = PlanEngine::new(&problem);
    let node = establish_all(&engine, engine.initial_node())?;
    let threats = engine.detect_interactions(&node);
    ensure!(threats.len() == 1, "fig3a threats {threats:?}");
    let th = &threats[0];
    ensure!(th.kind == ThreatKind::DeletedCondition, "kind {:?}", th.kind);
    let name = |id: TaskId| node.network.task(id).map(|t| t.to_string()).unwrap_or_default();
    ensure!(
        name(th.clobberer) == "(!drive t1 l2 l3)" && name(th.victim) == "(!unload-truck t1 b1 l2)",
        "clobberer {} victim {}",
        name(th.clobberer),
        name(th.victim)
    );
    ensure!(th.predicate.to_string() == "(truck-at t1 l2)", "predicate {}", th.predicate);
    let children = engine.resolve_threat(&node, th).map_err(|e| e.to_string())?;
    ensure!(children.len() == 1, "{} children", children.len());
    let added: Vec<_> = children[0].network.ordering.difference(&node.network.ordering).copied().collect();
    ensure!(added == vec![(th.victim, th.clobberer)], "added edges {added:?}");
    let lin = engine
        .linearise(&children[0].network)
        .map_err(|e| e.to_string())?
        .ok_or("resolved network has no executable linearisation")?;
    let steps: Vec<Step> = lin
        .order
        .iter()
        .map(|id| {
            let t = children[0].network.task(*id).unwrap();
            Step { name: t.name, args: t.args.iter().map(|a| a.as_const().unwrap()).collect() }
        })
        .collect();
    let v = replay(&steps, &problem);
    ensure!(v.is_valid(), "replay: {v}");

    let problem = fixtures::fig3b();
    let engine = PlanEngine::new(&problem);
    let node = establish_all(&engine, engine.initial_node())?;
    let threats = engine.detect_interactions(&node);
    ensure!(threats.len() == 1 && threats[0].kind == ThreatKind::DoubleCross, "fig3b threats {threats:?}");
    let children = engine.resolve_threat(&node, &threats[0]).map_err(|e| e.to_string())?;
    ensure!(children.is_empty(), "fig3b gave {} children", children.len());
    Ok("fig3a: one deleted-condition threat, one child, replays; fig3b: one double-cross, no children".into())
}

fn generated_small() -> Vec<(String, PlanningProblem)> {
    let mut out = Vec::new();
    for boxes in 1..=3 {
        for (cities, locs) in [(1, 3), (2, 2), (2, 3), (3, 2)] {
            for seed in [1, 2] {
                out.push((format!("b{boxes}-c{cities}-l{locs}-s{seed}"), common::generated(boxes, cities, locs, seed)));
            }
        }
    }
    out
}

fn steps_set(plans: &[Plan]) -> BTreeSet<Vec<Step>> {
    plans.iter().map(|p| p.steps.clone()).collect()
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let mut problems = generated_small();
    let mut skipped = Vec::new();
    for (name, _, _) in fixtures::ALL {
        problems.push((name.to_string(), fixtures::by_name(name).unwrap()));
    }
    let mut compared = 0;
    for (name, problem) in &problems {
        let config = SearchConfig::for_problem(problem);
        let oracle = match oracle_enumerate(problem, 200, config.protections) {
            Ok(o) => o,
            Err(e) => {
                // the state engine must refuse the same problem
                ensure!(all_plans_state(problem, config).is_err(), "{name}: oracle error {e} but the engine ran");
                skipped.push(name.clone());
                continue;
            }
        };
        ensure!(!oracle.incomplete, "{name}: oracle depth bound reached");
        if oracle.plans.len() > 200 {
            skipped.push(name.clone());
            continue;
        }
        let all = all_plans_state(problem, config).map_err(|e| format!("{name}: {e}"))?;
        ensure!(all.complete, "{name}: state engine search incomplete");
        let got = steps_set(&all.plans);
        ensure!(got == oracle.plans, "{name}: engine {} plans, oracle {}", got.len(), oracle.plans.len());
        compared += 1;
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("{compared} problems equal, skipped {skipped:?}, {elapsed:?}"))
}

fn criterion_5() -> Check {
    let mut checked = 0;
    let mut seed = 0;
    while checked < 20 {
        seed += 1;
        let boxes = 1 + (seed as usize % 3);
        let (cities, locs) = [(2, 2), (2, 3), (3, 2), (3, 3)][seed as usize % 4];
        let problem = common::generated(boxes, cities, locs, seed);
        let plan = state_plan(&problem)?;
        let v = validate_plan(&plan, &problem);
        ensure!(v.is_valid(), "seed {seed}: state plan invalid: {v}");
        let config = SearchConfig::for_problem(&problem);
        let all = all_plans_po(&problem, config).map_err(|e| format!("seed {seed}: {e}"))?;
        let hit = all.plans.iter().find(|p| p.steps == plan.steps);
        let Some(po) = hit else {
            return Err(format!("seed {seed}: state plan missing among {} plan-engine plans", all.plans.len()));
        };
        let v = validate_plan(po, &problem);
        ensure!(v.is_valid(), "seed {seed}: plan-engine plan invalid: {v}");
        checked += 1;
    }
    Ok(format!("{checked} generated problems, state plan found by the plan engine each time"))
}

fn criterion_6() -> Check {
    let mut corpus: Vec<(String, PlanningProblem)> =
        fixtures::ALL.iter().map(|(name, _, _)| (name.to_string(), fixtures::by_name(name).unwrap())).collect();
    corpus.extend(generated_small());
    let mut emitted = 0;
    let mut mutated = 0;
    let mut rejected_at = 0;
    for (name, problem) in &corpus {
        let config = SearchConfig::for_problem(problem);
        let mut plans = Vec::new();
        if let Ok(all) = all_plans_state(problem, config) {
            plans.extend(all.plans);
        }
        if let Ok(all) = all_plans_po(problem, config) {
            plans.extend(all.plans);
        }
        for p in &plans {
            let v = validate_plan(p, problem);
            ensure!(v.is_valid(), "{name}: emitted plan rejected: {v}\n{:?}", p.steps);
        }
        emitted += plans.len();
        let Some(plan) = plans.first() else { continue };
        let Ok(oracle) = oracle_enumerate(problem, 200, config.protections) else { continue };
        for m in common::mutants(plan, problem) {
            mutated += 1;
            let v = validate_plan(&m.plan, problem);
            let genuine = oracle.plans.contains(&m.plan.steps);
            let expected = common::first_bad_step(problem, &m.plan.steps, &m.plan.trace, 200_000);
            match v {
                Validation::Invalid { index, .. } if !genuine && index == expected => rejected_at += 1,
                _ => ensure!(
                    genuine,
                    "{name}: {} mutant at {} not rejected at {expected} ({v}) and not a plan: {:?}",
                    m.kind,
                    m.at,
                    m.plan.steps
                ),
            }
        }
    }
    ensure!(mutated > 0, "no mutants");
    ensure!(rejected_at * 100 >= mutated * 95, "{rejected_at}/{mutated} mutants rejected at the first bad step");
    Ok(format!("{emitted} emitted plans valid; {rejected_at}/{mutated} mutants rejected at the right index, rest are real plans"))
}

fn criterion_7() -> Check {
    let logistics = parse_domain(fixtures::LOGISTICS, "logistics.htd").map_err(|e| e.to_string())?;
    let c = classify_domain(&logistics);
    ensure!(
        c.compound_setting == CompoundSetting::Regular
            && c.recursive
            && c.ordering_setting == OrderingSetting::TotallyOrdered
            && c.variables,
        "logistics: {c}"
    );
    let blocks = parse_domain(fixtures::BLOCKS, "blocks.htd").map_err(|e| e.to_string())?;
    let b = classify_domain(&blocks);
    ensure!(
        b.compound_setting == CompoundSetting::Acyclic
            && !b.recursive
            && b.ordering_setting == OrderingSetting::TotallyOrdered
            && b.variables,
        "blocks: {b}"
    );
    for d in [&logistics, &blocks] {
        let again = parse_domain(&print_domain(d), "printed.htd").map_err(|e| e.to_string())?;
        ensure!(classify_domain(&again) == classify_domain(d), "classification changed after printing");
    }
    Ok(format!("logistics: {c}; blocks: {b}"))
}

fn criterion_8() -> Check {
    let mut texts: Vec<String> = fixtures::ALL.iter().map(|(_, d, _)| d.to_string()).collect();
    texts.extend((0..500).map(common::random_domain));
    for text in &texts {
        let d = parse_domain(text, "in.htd").map_err(|e| format!("{e}\n{text}"))?;
        let printed = print_domain(&d);
        let again = parse_domain(&printed, "out.htd").map_err(|e| format!("{e}\n{printed}"))?;
        ensure!(again == d && print_domain(&again) == printed, "round trip changed:\n{text}");
    }
    for (name, d, p) in fixtures::ALL {
        let dom = parse_domain(d, "d.htd").unwrap();
        let def = parse_problem(p, "p.htp", &dom).map_err(|e| e.to_string())?;
        let again = parse_problem(&htn::io::print_problem(&def), "q.htp", &dom).map_err(|e| e.to_string())?;
        ensure!(again == def, "{name}: problem round trip changed");
    }
    for (text, kind, token, nth) in common::MALFORMED_DOMAINS {
        let e = parse_domain(text, "bad.htd").err().ok_or_else(|| format!("accepted: {text}"))?;
        let e = e.first();
        ensure!(e.kind == *kind, "{text}: {e}");
        ensure!((e.span.line, e.span.column) == common::locate(text, token, *nth), "{text}: {e}");
    }
    let logistics = parse_domain(fixtures::LOGISTICS, "l.htd").unwrap();
    for (text, kind, token) in common::MALFORMED_PROBLEMS {
        let e = parse_problem(text, "bad.htp", &logistics).err().ok_or_else(|| format!("accepted: {text}"))?;
        let e = e.first();
        ensure!(e.kind == *kind, "{text}: {e}");
        ensure!((e.span.line, e.span.column) == common::locate(text, token, 0), "{text}: {e}");
    }
    let malformed = common::MALFORMED_DOMAINS.len() + common::MALFORMED_PROBLEMS.len();
    Ok(format!("{} domains round trip, {malformed} malformed inputs located", texts.len()))
}

fn criterion_9() -> Check {
    let dir = std::env::temp_dir().join(format!("htn-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let write = |name: &str, text: &str| {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let domain = write("logistics.htd", fixtures::LOGISTICS);
    let fig1 = write("fig1.htp", fixtures::FIG1);
    let noplane = write("noplane.htp", fixtures::FIG1_NOPLANE);
    let run = |problem: &std::path::Path, extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_htn"))
            .arg("solve")
            .arg(&domain)
            .arg(problem)
            .args(extra)
            .output()
            .map(|o| o.status.code())
            .map_err(|e| e.to_string())
    };
    let budget = run(&fig1, &["--budget", "1"])?;
    let unsolvable = run(&noplane, &["--budget", "100000"])?;
    let _ = std::fs::remove_dir_all(&dir);
    ensure!(budget == Some(2), "budget 1 exited {budget:?}");
    ensure!(unsolvable == Some(1), "no plane exited {unsolvable:?}");
    Ok("budget 1 exits 2, no plane exits 1".into())
}

fn criterion_10() -> Check {
    let start = Instant::now();
    let report = run_bench(&BenchSpec {
        boxes: (1..=10).collect(),
        cities: 3,
        locs_per_city: 3,
        seed: 1,
        engines: vec![EngineMode::State],
        budget: None,
        parallel: false,
    });
    let elapsed = start.elapsed();
    ensure!(report.rows.len() == 10, "{} rows", report.rows.len());
    for r in &report.rows {
        ensure!(r.exit_code == 0 && r.valid, "{}: {} valid={} {:?}", r.problem, r.result, r.valid, r.error);
    }
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!("10 rows, all plans valid, {elapsed:?}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("running example golden plan", criterion_1),
        ("phantomisation of a delivered box", criterion_2),
        ("interaction detection and resolution", criterion_3),
        ("oracle equivalence", criterion_4),
        ("totally ordered problems embed in the plan engine", criterion_5),
        ("validator soundness and mutation suite", criterion_6),
        ("domain classifier", criterion_7),
        ("parser round trip and error spans", criterion_8),
        ("budget honesty in the CLI", criterion_9),
        ("scalability smoke", criterion_10),
    ];
    let mut failed = 0;
    for (i, (what, run)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("PASS criterion {}: {what} ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {what} ({detail})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
