use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Substitution, TaskId, TaskInstance, Term};
use crate::symbol::Symbol;

/// One ground action of a plan.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Step {
    pub name: Symbol,
    pub args: Vec<Symbol>,
}

impl Step {
    pub fn new(name: &str, args: &[&str]) -> Self {
        Step { name: Symbol::intern(name), args: args.iter().map(|a| Symbol::intern(a)).collect() }
    }

    pub fn arg_terms(&self) -> Vec<Term> {
        self.args.iter().map(|a| Term::Const(*a)).collect()
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// One compound task replaced by one method branch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionRecord {
    pub task: TaskInstance,
    pub method: Symbol,
    pub rank: u32,
    /// Values of the method's variables as written in the domain.
    pub sigma: Substitution,
    /// The tasks that replaced it, as they were when created.
    pub children: Vec<TaskInstance>,
}

/// How the plan came out of the initial task network.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub roots: Vec<TaskInstance>,
    pub decompositions: Vec<DecompositionRecord>,
}

impl Trace {
    /// Rewrites every recorded argument with bindings made later in search.
    pub fn finalize(&mut self, s: &Substitution) {
        for r in &mut self.roots {
            r.args = s.apply_all(&r.args);
        }
        for d in &mut self.decompositions {
            d.task.args = s.apply_all(&d.task.args);
            for c in &mut d.children {
                c.args = s.apply_all(&c.args);
            }
            let pairs: Vec<_> = d.sigma.iter().map(|(v, t)| (*v, s.resolve(*t))).collect();
            d.sigma = Substitution::from_pairs(pairs);
        }
    }

    pub fn record_for(&self, task: TaskId) -> Option<&DecompositionRecord> {
        self.decompositions.iter().find(|d| d.task.id == task)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Plan {
    pub steps: Vec<Step>,
    /// The primitive task each step executes, by position.
    pub step_tasks: Vec<TaskId>,
    pub trace: Trace,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub decompositions: u64,
    pub applications: u64,
    pub backtracks: u64,
    pub max_depth: u64,
    pub max_network_size: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Plan(Plan),
    NoSolution,
    BudgetExhausted,
}

impl Outcome {
    pub fn plan(&self) -> Option<&Plan> {
        match self {
            Outcome::Plan(p) => Some(p),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Plan(_) => "plan",
            Outcome::NoSolution => "no-solution",
            Outcome::BudgetExhausted => "budget-exhausted",
        }
    }

    /// Process exit status: 0 plan, 1 no solution, 2 budget exhausted.
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Plan(_) => 0,
            Outcome::NoSolution => 1,
            Outcome::BudgetExhausted => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchResult {
    pub outcome: Outcome,
    pub stats: SearchStats,
}
