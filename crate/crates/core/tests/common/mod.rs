#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use htn::generate::{gen_logistics, GenSpec};
use htn::io::{load_problem, ErrorKind};
use htn::model::{
    apply, decompose_state, satisfying_bindings, Fresh, Plan, PlanningProblem, State, Step, Substitution, TaskNetwork,
    Term, Trace,
};

pub fn generated(boxes: usize, cities: usize, locs: usize, seed: u64) -> PlanningProblem {
    let g = gen_logistics(GenSpec { boxes, cities, locs_per_city: locs, seed }).unwrap();
    load_problem(&g.domain, "gen.htd", &g.problem, "gen.htp").unwrap()
}

/// Line, column (both from 1) of the `nth` occurrence of `needle`.
pub fn locate(text: &str, needle: &str, nth: usize) -> (usize, usize) {
    let offset = text.match_indices(needle).nth(nth).expect("needle occurs").0;
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = offset - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Index of the first step of `steps` that no execution of the decompositions
/// recorded in `trace` can reach; `steps.len()` when every step can be
/// executed in order, whether or not tasks are left over afterwards.
/// Breadth-first, bounded by `limit` nodes.
pub fn first_bad_step(problem: &PlanningProblem, steps: &[Step], trace: &Trace, limit: usize) -> usize {
    let mut network = problem.def.network.clone();
    network.close();
    let mut fresh = Fresh::after(&network);
    let mut queue = std::collections::VecDeque::from([(problem.initial_state.clone(), network, 0usize)]);
    let mut best = 0;
    let mut seen = 0;
    while let Some((state, network, k)) = queue.pop_front() {
        seen += 1;
        if seen > limit {
            break;
        }
        best = best.max(k);
        if k == steps.len() {
            continue;
        }
        let push =
            |queue: &mut std::collections::VecDeque<(State, TaskNetwork, usize)>, s, n, k| queue.push_back((s, n, k));
        for task in network.minimal_tasks() {
            if let Some(op) = problem.operator(task.name) {
                let step = &steps[k];
                let mut s = Substitution::new();
                if step.name != task.name || !s.unify_args(&task.args, &step.arg_terms()) {
                    continue;
                }
                let Ok(inst) = op.instantiate(&step.arg_terms()) else { continue };
                let Ok(next) = apply(&inst, &state) else { continue };
                let mut n = network.clone();
                n.remove_task(task.id);
                n.apply_subst(&s);
                push(&mut queue, next, n, k + 1);
                continue;
            }
            for r in trace.decompositions.iter().filter(|r| r.task.name == task.name) {
                let mut outer = Substitution::new();
                if !outer.unify_args(&task.args, &r.task.args) {
                    continue;
                }
                let Some(m) = problem.methods_for(task.name).find(|m| m.rank == r.rank) else { continue };
                let args = outer.apply_all(&task.args);
                let mut head = Substitution::new();
                if !head.unify_args(&m.head.params, &args)
                    || !r.sigma.iter().all(|(v, t)| head.unify_terms(Term::Var(*v), *t))
                {
                    continue;
                }
                let mut n = network.clone();
                n.apply_subst(&outer);
                for sigma in satisfying_bindings(&m.pre_pos, &m.pre_neg, &state, &head) {
                    if let Ok(d) = decompose_state(&state, &n, task.id, m, &sigma, &mut fresh) {
                        push(&mut queue, state.clone(), d.network, k);
                    }
                }
            }
        }
    }
    best
}

/// A step sequence with a single mutation and the position it was made at.
#[derive(Clone, Debug)]
pub struct Mutant {
    pub kind: &'static str,
    pub plan: Plan,
    pub at: usize,
}

/// Swaps of neighbouring distinct steps, single drops, and single argument
/// corruptions (each argument replaced by the next constant of the problem).
pub fn mutants(plan: &Plan, problem: &PlanningProblem) -> Vec<Mutant> {
    let mut out = Vec::new();
    let with = |steps: Vec<Step>| Plan { steps, ..plan.clone() };
    let n = plan.steps.len();
    for i in 0..n.saturating_sub(1) {
        if plan.steps[i] != plan.steps[i + 1] {
            let mut s = plan.steps.clone();
            s.swap(i, i + 1);
            out.push(Mutant { kind: "swap", plan: with(s), at: i });
        }
    }
    for i in 0..n {
        let mut s = plan.steps.clone();
        s.remove(i);
        // dropping one of two equal neighbours is the same as dropping the other
        let at = (i..n - 1).find(|&j| plan.steps[j] != plan.steps[j + 1]).unwrap_or(n - 1);
        out.push(Mutant { kind: "drop", plan: with(s), at });
    }
    let constants = problem.constants();
    for i in 0..n {
        for a in 0..plan.steps[i].args.len() {
            let cur = plan.steps[i].args[a];
            let pos = constants.iter().position(|c| *c == cur).unwrap_or(0);
            let next = constants[(pos + 1) % constants.len()];
            let mut s = plan.steps.clone();
            s[i].args[a] = next;
            out.push(Mutant { kind: "corrupt", plan: with(s), at: i });
        }
    }
    out
}

fn literal(rng: &mut ChaCha8Rng, preds: &[(String, usize)], vars: &[String], consts: bool) -> String {
    let (name, arity) = preds.choose(rng).unwrap();
    let mut s = format!("({name}");
    for _ in 0..*arity {
        if consts && rng.gen_bool(0.2) || vars.is_empty() {
            let _ = write!(s, " c{}", rng.gen_range(0..3));
        } else {
            let _ = write!(s, " {}", vars.choose(rng).unwrap());
        }
    }
    s.push(')');
    s
}

fn literals(rng: &mut ChaCha8Rng, preds: &[(String, usize)], vars: &[String], max: usize) -> Vec<String> {
    let mut set = BTreeSet::new();
    for _ in 0..rng.gen_range(0..=max) {
        set.insert(literal(rng, preds, vars, true));
    }
    set.into_iter().collect()
}

/// A syntactically and semantically valid random domain.
pub fn random_domain(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let preds: Vec<(String, usize)> =
        (0..rng.gen_range(1..5)).map(|i| (format!("p{i}"), rng.gen_range(0..4))).collect();
    let ops: Vec<(String, usize)> = (0..rng.gen_range(1..4)).map(|i| (format!("!o{i}"), rng.gen_range(0..4))).collect();
    let methods: Vec<(String, usize)> =
        (0..rng.gen_range(0..4)).map(|i| (format!("m{i}"), rng.gen_range(0..3))).collect();
    let params = |n: usize| -> Vec<String> { (0..n).map(|i| format!("?v{i}")).collect() };

    let mut out = format!("(define (domain random-{seed})\n  (:predicates");
    for (p, a) in &preds {
        let _ = write!(out, " ({p}{})", params(*a).iter().map(|v| format!(" {v}")).collect::<String>());
    }
    out.push(')');
    for (name, arity) in &ops {
        let vars = params(*arity);
        let head: String = vars.iter().map(|v| format!(" {v}")).collect();
        let _ = write!(out, "\n  (:operator ({name}{head})");
        let pos = literals(&mut rng, &preds, &vars, 3);
        let neg = literals(&mut rng, &preds, &vars, 1);
        let add = literals(&mut rng, &preds, &vars, 2);
        let del: Vec<String> = literals(&mut rng, &preds, &vars, 2).into_iter().filter(|d| !add.contains(d)).collect();
        let neg: String = neg.iter().map(|n| format!(" (not {n})")).collect();
        let _ = write!(out, "\n    (:pre{}{neg})", pos.iter().map(|p| format!(" {p}")).collect::<String>());
        let _ = write!(out, "\n    (:del{})", del.iter().map(|p| format!(" {p}")).collect::<String>());
        let _ = write!(out, "\n    (:add{})", add.iter().map(|p| format!(" {p}")).collect::<String>());
        if rng.gen_bool(0.2) {
            let _ = write!(out, "\n    (:protect {})", literal(&mut rng, &preds, &vars, true));
        }
        if *arity > 0 && rng.gen_bool(0.2) {
            let _ = write!(out, "\n    (:resource {})", vars.choose(&mut rng).unwrap());
        }
        out.push(')');
    }
    let tasks: Vec<(String, usize)> = ops.iter().chain(&methods).cloned().collect();
    for (name, arity) in &methods {
        let head = params(*arity);
        let _ = write!(out, "\n  (:method ({name}{})", head.iter().map(|v| format!(" {v}")).collect::<String>());
        let branches = rng.gen_range(1..4);
        let mut ranks: Vec<u32> = (1..=branches).collect();
        ranks.shuffle(&mut rng);
        for rank in ranks {
            let mut vars = head.clone();
            vars.push(format!("?w{rank}"));
            let pos: Vec<String> = (0..rng.gen_range(0..3)).map(|_| literal(&mut rng, &preds, &vars, true)).collect();
            let bound: Vec<String> = vars
                .iter()
                .filter(|v| head.contains(v) || pos.iter().any(|p| p.split([' ', ')']).any(|w| w == v.as_str())))
                .cloned()
                .collect();
            let neg: Vec<String> = (0..rng.gen_range(0..2)).map(|_| literal(&mut rng, &preds, &bound, true)).collect();
            let _ = write!(out, "\n    (:branch {rank}");
            if !pos.is_empty() || !neg.is_empty() {
                let _ = write!(
                    out,
                    " (:pre{}{})",
                    pos.iter().map(|p| format!(" {p}")).collect::<String>(),
                    neg.iter().map(|n| format!(" (not {n})")).collect::<String>()
                );
            }
            let n = rng.gen_range(0..4);
            let _ = write!(out, "\n      (:network (:tasks");
            for i in 0..n {
                let (t, a) = tasks.choose(&mut rng).unwrap();
                let args: String = (0..*a)
                    .map(|_| {
                        if rng.gen_bool(0.2) || vars.is_empty() {
                            format!(" c{}", rng.gen_range(0..3))
                        } else {
                            format!(" {}", vars.choose(&mut rng).unwrap())
                        }
                    })
                    .collect();
                let _ = write!(out, " (s{i} ({t}{args}))");
            }
            out.push(')');
            let pairs: Vec<String> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|_| rng.gen_bool(0.5))
                .map(|(i, j)| format!(" (s{i} s{j})"))
                .collect();
            if !pairs.is_empty() {
                let _ = write!(out, " (:order{})", pairs.concat());
            }
            if n > 0 && rng.gen_bool(0.3) {
                let _ = write!(out, " (:before {} s{})", literal(&mut rng, &preds, &vars, true), rng.gen_range(0..n));
            }
            if n > 0 && rng.gen_bool(0.2) {
                let _ = write!(out, " (:after s{} {})", rng.gen_range(0..n), literal(&mut rng, &preds, &vars, true));
            }
            if n > 1 && rng.gen_bool(0.2) {
                let _ = write!(out, " (:between s0 {} s{})", literal(&mut rng, &preds, &vars, true), n - 1);
            }
            if rng.gen_bool(0.3) {
                let v = vars.choose(&mut rng).unwrap();
                let _ = if rng.gen_bool(0.5) {
                    write!(out, " (:bind (= {v} c{}))", rng.gen_range(0..3))
                } else {
                    write!(out, " (:bind (not (= {v} c{})))", rng.gen_range(0..3))
                };
            }
            out.push_str("))");
        }
        out.push(')');
    }
    out.push_str(")\n");
    out
}

/// `(text, kind, offending token, occurrence)`; the expected position is
/// found by searching the text for the token.
pub const MALFORMED_DOMAINS: &[(&str, ErrorKind, &str, usize)] = &[
    ("(define (domain d)\n  (:operator (!a) (:pre (zzz))))", ErrorKind::Unknown, "zzz", 0),
    (
        "(define (domain d) (:predicates (p ?x))\n (:operator (!a ?x) (:add (p ?x ?x))))",
        ErrorKind::Arity,
        "(p ?x ?x)",
        0,
    ),
    ("(define (domain d) (:operator (a)))", ErrorKind::Namespace, "a)", 0),
    ("(define (domain d) (:method (!m) (:branch 1 (:network))))", ErrorKind::Namespace, "!m", 0),
    (
        "(define (domain d) (:predicates (p ?x))\n (:method (m) (:branch 1 (:pre (not (p ?y))) (:network))))",
        ErrorKind::UnsafeNegation,
        "(not",
        0,
    ),
    ("(define (domain d) (:method (m) (:branch 1 (:network)) (:branch 3 (:network))))", ErrorKind::Syntax, "3", 0),
    (
        "(define (domain d)\n  (:predicates (p ?x))\n  (:operator (!a ?x) (:pre (p ?x)) (:add (p ?y))))",
        ErrorKind::Variable,
        "(!a ?x)",
        0,
    ),
    (
        "(define (domain d) (:predicates (p ?x)) (:operator (!a ?x) (:del (p ?x)) (:add (p ?x))))",
        ErrorKind::Effect,
        "(!a ?x)",
        0,
    ),
    ("(define (domain d)\n  (:operator (!a) (:pre $)))", ErrorKind::Lexical, "$", 0),
    ("(define (domain d)\n  (:operator (!a) (:pre)", ErrorKind::Syntax, "(:operator", 0),
    ("(define (domain d) (:method (m) (:branch 1 (:network (:tasks (s1 (nope)))))))", ErrorKind::Unknown, "nope", 0),
];

pub const MALFORMED_PROBLEMS: &[(&str, ErrorKind, &str)] = &[
    ("(define (problem p) (:domain logistics)\n (:init (box-at b ?l)))", ErrorKind::Ground, "(box-at b ?l)"),
    ("(define (problem p) (:domain logistics) (:init (floats b)))", ErrorKind::Unknown, "floats"),
    (
        "(define (problem p) (:domain logistics) (:network (:tasks (g (deliver b l1)))))",
        ErrorKind::Arity,
        "(deliver b l1)",
    ),
    ("(define (problem p) (:domain logistics) (:engine fast))", ErrorKind::Syntax, "fast"),
];
