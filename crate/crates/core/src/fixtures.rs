//! Domains and problems shipped with the crate.

use crate::io::load_problem;
use crate::model::PlanningProblem;

pub const LOGISTICS: &str = include_str!("../fixtures/logistics.htd");
pub const LOGISTICS_PROTECT: &str = include_str!("../fixtures/logistics-protect.htd");
pub const FIG1: &str = include_str!("../fixtures/fig1.htp");
pub const FIG1_PLAN: &str = include_str!("../fixtures/fig1-plan.htp");
pub const FIG1_NOPLANE: &str = include_str!("../fixtures/fig1-noplane.htp");
pub const FIG1_TWO_TRUCKS: &str = include_str!("../fixtures/fig1-two-trucks.htp");
pub const DELIVER_HERE: &str = include_str!("../fixtures/deliver-here.htp");
pub const FIG3A: &str = include_str!("../fixtures/fig3a.htp");
pub const FIG3B_DOMAIN: &str = include_str!("../fixtures/fig3b.htd");
pub const FIG3B: &str = include_str!("../fixtures/fig3b.htp");
pub const BLOCKS: &str = include_str!("../fixtures/blocks.htd");
pub const STACK2: &str = include_str!("../fixtures/stack2.htp");

/// `(name, domain text, problem text)` for every shipped problem.
pub const ALL: &[(&str, &str, &str)] = &[
    ("fig1", LOGISTICS, FIG1),
    ("fig1-plan", LOGISTICS, FIG1_PLAN),
    ("fig1-noplane", LOGISTICS, FIG1_NOPLANE),
    ("fig1-two-trucks", LOGISTICS, FIG1_TWO_TRUCKS),
    ("fig1-protect", LOGISTICS_PROTECT, FIG1),
    ("deliver-here", LOGISTICS, DELIVER_HERE),
    ("fig3a", LOGISTICS, FIG3A),
    ("fig3b", FIG3B_DOMAIN, FIG3B),
    ("stack2", BLOCKS, STACK2),
];

fn load(name: &str, domain: &str, problem: &str) -> PlanningProblem {
    load_problem(domain, &format!("{name}.htd"), problem, &format!("{name}.htp"))
        .unwrap_or_else(|e| panic!("fixture {name} does not load: {e:?}"))
}

pub fn by_name(name: &str) -> Option<PlanningProblem> {
    ALL.iter().find(|(n, _, _)| *n == name).map(|(n, d, p)| load(n, d, p))
}

pub fn fig1() -> PlanningProblem {
    load("fig1", LOGISTICS, FIG1)
}

pub fn fig3a() -> PlanningProblem {
    load("fig3a", LOGISTICS, FIG3A)
}

pub fn fig3b() -> PlanningProblem {
    load("fig3b", FIG3B_DOMAIN, FIG3B)
}

pub fn stack2() -> PlanningProblem {
    load("stack2", BLOCKS, STACK2)
}
