//! Independent plan checking: replays the steps with nothing but operator
//! application, then checks that the decomposition trace really derives
//! them from the initial network.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{
    apply, Plan, PlanningProblem, State, Step, Substitution, TaskId, TaskInstance, TaskNetwork, Term, Trace,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validation {
    Valid,
    /// The first step at fault (the plan length for a missing step) and why.
    Invalid {
        index: usize,
        reason: String,
    },
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validation::Valid)
    }

    fn invalid(index: usize, reason: impl Into<String>) -> Self {
        Validation::Invalid { index, reason: reason.into() }
    }
}

impl fmt::Display for Validation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Validation::Valid => f.write_str("valid"),
            Validation::Invalid { index, reason } => write!(f, "invalid at step {index}: {reason}"),
        }
    }
}

fn replay_step(state: &State, step: &Step, problem: &PlanningProblem) -> Result<State, String> {
    let op = problem.operator(step.name).ok_or_else(|| format!("unknown operator {}", step.name))?;
    let inst = op.instantiate(&step.arg_terms()).map_err(|e| e.to_string())?;
    if let Some(p) = inst.pre_pos.iter().find(|p| !state.contains(p)) {
        return Err(format!("precondition {p} absent"));
    }
    if let Some(p) = inst.pre_neg.iter().find(|p| state.contains(p)) {
        return Err(format!("negative precondition {p} present"));
    }
    apply(&inst, state).map_err(|e| e.to_string())
}

/// Replays `steps` from the initial state.
pub fn replay(steps: &[Step], problem: &PlanningProblem) -> Validation {
    let mut state = problem.initial_state.clone();
    for (k, step) in steps.iter().enumerate() {
        match replay_step(&state, step, problem) {
            Ok(s) => state = s,
            Err(reason) => return Validation::invalid(k, reason),
        }
    }
    Validation::Valid
}

/// A leaf of the decomposition tree with the tasks it must come after.
struct Leaf {
    task: TaskInstance,
    after: BTreeSet<usize>,
}

struct Tree<'a> {
    problem: &'a PlanningProblem,
    trace: &'a Trace,
    records: BTreeMap<TaskId, usize>,
    leaves: Vec<Leaf>,
}

impl Tree<'_> {
    /// Expands the sibling group `tasks`, ordered by `order` on positions,
    /// into leaves; every leaf also follows `after`. Returns the indices of
    /// the leaves created.
    fn expand(
        &mut self,
        tasks: &[TaskInstance],
        order: &TaskNetwork,
        after: &BTreeSet<usize>,
    ) -> Result<Vec<usize>, String> {
        let mut below: Vec<Vec<usize>> = vec![Vec::new(); tasks.len()];
        let mut pending: Vec<usize> = (0..tasks.len()).collect();
        // siblings are expanded once all their predecessors are
        while !pending.is_empty() {
            let pos = pending
                .iter()
                .position(|&i| pending.iter().all(|&j| j == i || !order.precedes(TaskId(j as u32), TaskId(i as u32))))
                .ok_or("cyclic ordering in the trace")?;
            let i = pending.remove(pos);
            let mut req = after.clone();
            for (j, b) in below.iter().enumerate() {
                if order.precedes(TaskId(j as u32), TaskId(i as u32)) {
                    req.extend(b.iter().copied());
                }
            }
            below[i] = self.task(&tasks[i], &req)?;
        }
        Ok(below.into_iter().flatten().collect())
    }

    fn task(&mut self, task: &TaskInstance, after: &BTreeSet<usize>) -> Result<Vec<usize>, String> {
        if self.problem.is_primitive(task.name) {
            self.leaves.push(Leaf { task: task.clone(), after: after.clone() });
            return Ok(vec![self.leaves.len() - 1]);
        }
        let Some(&r) = self.records.get(&task.id) else {
            return Err(format!("compound task {task} is never decomposed"));
        };
        let rec = &self.trace.decompositions[r];
        let Some(m) = self.problem.methods_for(task.name).find(|m| m.rank == rec.rank && m.head.name == rec.method)
        else {
            return Err(format!("no method {}/{} for {task}", rec.method, rec.rank));
        };
        let inst = |t: &Term| rec.sigma.resolve(*t);
        let head: Vec<Term> = m.head.params.iter().map(inst).collect();
        if head != task.args {
            return Err(format!("method {}/{} does not match {task}", rec.method, rec.rank));
        }
        if m.network.tasks.len() != rec.children.len() {
            return Err(format!("{task} has {} children, its method {}", rec.children.len(), m.network.tasks.len()));
        }
        for (c, t) in rec.children.iter().zip(&m.network.tasks) {
            let args: Vec<Term> = t.args.iter().map(inst).collect();
            if c.name != t.name || c.args != args {
                return Err(format!("child {c} of {task} does not match ({} ...) in its method", t.name));
            }
        }
        let children = rec.children.clone();
        let order = positional(&m.network);
        self.expand(&children, &order, after)
    }
}

/// The ordering of `tn` with tasks renumbered by position.
fn positional(tn: &TaskNetwork) -> TaskNetwork {
    let index: BTreeMap<TaskId, u32> = tn.tasks.iter().enumerate().map(|(i, t)| (t.id, i as u32)).collect();
    let pairs: Vec<(u32, u32)> = tn.closure().iter().map(|(a, b)| (index[a], index[b])).collect();
    let tasks = tn.tasks.iter().enumerate().map(|(i, t)| TaskInstance { id: TaskId(i as u32), ..t.clone() }).collect();
    let mut out = TaskNetwork::new(tasks, &pairs);
    out.close();
    out
}

/// The primitive leaves the trace derives from the initial network.
fn leaves(plan: &Plan, problem: &PlanningProblem) -> Result<Vec<Leaf>, String> {
    let records: BTreeMap<TaskId, usize> =
        plan.trace.decompositions.iter().enumerate().map(|(i, d)| (d.task.id, i)).collect();
    let mut tree = Tree { problem, trace: &plan.trace, records, leaves: Vec::new() };
    let roots = &plan.trace.roots;
    let tn0 = &problem.def.network;
    if roots.len() != tn0.len()
        || roots.iter().zip(&tn0.tasks).any(|(r, t)| r.name != t.name || !args_match(&t.args, &r.args))
    {
        return Err("trace roots differ from the initial network".into());
    }
    tree.expand(roots, &positional(tn0), &BTreeSet::new())?;
    Ok(tree.leaves)
}

/// Terms of the initial network agree with their recorded values: constants
/// must be equal, a variable may have any value as long as it is consistent.
fn args_match(written: &[Term], recorded: &[Term]) -> bool {
    let mut s = Substitution::new();
    written.len() == recorded.len()
        && written.iter().zip(recorded).all(|(w, r)| match w {
            Term::Const(_) => w == r,
            Term::Var(_) => s.unify_terms(*w, *r),
        })
}

/// Replays the plan and, when it carries a decomposition trace, matches
/// every step with a primitive task of the trace whose predecessors have
/// all been executed. The first step failing either check is reported.
/// Without a trace only executability can be judged.
pub fn validate_plan(plan: &Plan, problem: &PlanningProblem) -> Validation {
    let traced = !plan.trace.roots.is_empty() || problem.def.network.is_empty();
    let tree = if traced {
        match leaves(plan, problem) {
            Ok(l) => Some(l),
            Err(e) => return Validation::invalid(0, e),
        }
    } else {
        None
    };
    let mut used = vec![false; tree.as_ref().map_or(0, Vec::len)];
    let mut state = problem.initial_state.clone();
    for (k, step) in plan.steps.iter().enumerate() {
        match replay_step(&state, step, problem) {
            Ok(s) => state = s,
            Err(reason) => return Validation::invalid(k, reason),
        }
        let Some(leaves) = &tree else { continue };
        let terms = step.arg_terms();
        let next = leaves.iter().enumerate().position(|(i, l)| {
            !used[i] && l.task.name == step.name && l.task.args == terms && l.after.iter().all(|a| used[*a])
        });
        match next {
            Some(i) => used[i] = true,
            None => return Validation::invalid(k, format!("{step} is not the next task of the decomposition")),
        }
    }
    if let Some(i) = used.iter().position(|u| !u) {
        let task = &tree.expect("leaves exist")[i].task;
        return Validation::invalid(plan.steps.len(), format!("{task} is never executed"));
    }
    Validation::Valid
}
