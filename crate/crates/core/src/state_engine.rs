//! Forward decomposition over explicit states with chronological backtracking.

use std::collections::{BTreeSet, HashSet};

use log::debug;

use crate::model::{
    apply, decompose_state, satisfying_bindings, DecompositionRecord, Fresh, OperatorInstance, Outcome, Plan,
    PlanningProblem, Predicate, SearchResult, SearchStats, State, Step, Style, Substitution, TaskId, TaskInstance,
    TaskNetwork, Term, Trace, Var,
};
use crate::search::{AllPlans, EngineError, SearchConfig};
use crate::symbol::Symbol;

/// Tasks without a predecessor. Under TOTD there must be exactly one.
pub fn frontier_tasks(tn: &TaskNetwork, style: Style) -> Result<Vec<&TaskInstance>, EngineError> {
    let minimal = tn.minimal_tasks();
    if style == Style::Totd && minimal.len() > 1 {
        let names: Vec<String> = minimal.iter().map(|t| t.to_string()).collect();
        return Err(EngineError::OrderingViolation(names.join(", ")));
    }
    Ok(minimal)
}

/// Updates the active protections for one ground step: cancellations first,
/// then deletions are checked against what is still protected, then new
/// requests are recorded. Returns the violated fact on failure.
pub fn check_protection(op: &OperatorInstance, active: &BTreeSet<Predicate>) -> Result<BTreeSet<Predicate>, Predicate> {
    let mut next = active.clone();
    for p in &op.unprotect {
        if !next.remove(p) {
            debug!("cancelling {p}, which is not protected");
        }
    }
    if let Some(p) = op.del.iter().find(|p| next.contains(*p)) {
        return Err(p.clone());
    }
    next.extend(op.protect.iter().cloned());
    Ok(next)
}

#[derive(Clone)]
struct Node {
    state: State,
    network: TaskNetwork,
    steps: Vec<Step>,
    step_tasks: Vec<TaskId>,
    trace: Vec<DecompositionRecord>,
    bindings: Substitution,
    protected: BTreeSet<Predicate>,
    depth: u64,
    /// Set on nodes produced by a decomposition; counted against the budget
    /// when the node is visited.
    decomposed: bool,
    applied: bool,
}

enum Stop {
    Solved,
    Exhausted,
    Budget,
}

struct Search<'a> {
    problem: &'a PlanningProblem,
    config: SearchConfig,
    fresh: Fresh,
    stats: SearchStats,
    roots: Vec<TaskInstance>,
}

impl<'a> Search<'a> {
    fn new(problem: &'a PlanningProblem, config: SearchConfig) -> (Self, Node) {
        let mut fresh = Fresh::after(&problem.def.network);
        let generation = fresh.generation();
        let mut network = problem.def.network.with_generation(generation);
        network.close();
        let roots = network.tasks.clone();
        let root = Node {
            state: problem.initial_state.clone(),
            network,
            steps: vec![],
            step_tasks: vec![],
            trace: vec![],
            bindings: Substitution::new(),
            protected: BTreeSet::new(),
            depth: 0,
            decomposed: false,
            applied: false,
        };
        let search = Search { problem, config, fresh, stats: SearchStats::default(), roots };
        (search, root)
    }

    fn plan_of(&self, node: &Node) -> Plan {
        let mut trace = Trace { roots: self.roots.clone(), decompositions: node.trace.clone() };
        trace.finalize(&node.bindings);
        Plan { steps: node.steps.clone(), step_tasks: node.step_tasks.clone(), trace }
    }

    /// Depth-first search calling `on_plan` for each solution; the callback
    /// returns false to stop.
    fn run(&mut self, root: Node, mut on_plan: impl FnMut(Plan) -> bool) -> Result<Stop, EngineError> {
        let mut stack = vec![root];
        let mut budget_hit = false;
        while let Some(node) = stack.pop() {
            if node.decomposed {
                if self.stats.decompositions >= self.config.budget.max_decompositions {
                    return Ok(Stop::Budget);
                }
                self.stats.decompositions += 1;
            }
            if node.applied {
                self.stats.applications += 1;
            }
            self.stats.nodes += 1;
            self.stats.max_depth = self.stats.max_depth.max(node.depth);
            self.stats.max_network_size = self.stats.max_network_size.max(node.network.len() as u64);
            if node.network.is_empty() {
                if !on_plan(self.plan_of(&node)) {
                    return Ok(Stop::Solved);
                }
                continue;
            }
            let mut children = self.expand(&node)?;
            let before = children.len();
            children.retain(|c| c.network.len() <= self.config.budget.max_network_size);
            if children.len() < before {
                budget_hit = true;
            }
            if children.is_empty() {
                self.stats.backtracks += 1;
            }
            stack.extend(children.into_iter().rev());
        }
        Ok(if budget_hit { Stop::Budget } else { Stop::Exhausted })
    }

    fn expand(&mut self, node: &Node) -> Result<Vec<Node>, EngineError> {
        let frontier: Vec<TaskInstance> =
            frontier_tasks(&node.network, self.config.style)?.into_iter().cloned().collect();
        let mut children = Vec::new();
        for task in &frontier {
            if self.problem.is_primitive(task.name) {
                self.apply_children(node, task, &mut children)?;
            } else {
                self.decompose_children(node, task, &mut children)?;
            }
        }
        Ok(children)
    }

    fn apply_children(&mut self, node: &Node, task: &TaskInstance, out: &mut Vec<Node>) -> Result<(), EngineError> {
        let op = self.problem.operator(task.name).ok_or(crate::model::ModelError::UnknownOperator(task.name))?;
        let inst = op.instantiate(&task.args)?;
        for sigma in satisfying_bindings(&inst.pre_pos, &inst.pre_neg, &node.state, &Substitution::new()) {
            for sigma in ground_leftovers(&inst.apply_subst(&sigma).args, sigma, self.problem.constants()) {
                let ground = inst.apply_subst(&sigma);
                let Ok(state) = apply(&ground, &node.state) else { continue };
                let protected = if self.config.protections {
                    match check_protection(&ground, &node.protected) {
                        Ok(p) => p,
                        Err(p) => {
                            debug!("{} deletes protected {p}", task);
                            continue;
                        }
                    }
                } else {
                    node.protected.clone()
                };
                let Some(step) = ground.step() else { continue };
                let mut network = node.network.clone();
                network.remove_task(task.id);
                network.apply_subst(&sigma);
                let mut bindings = node.bindings.clone();
                for (v, t) in sigma.iter() {
                    bindings.unify_terms(Term::Var(*v), *t);
                }
                let mut steps = node.steps.clone();
                steps.push(step);
                let mut step_tasks = node.step_tasks.clone();
                step_tasks.push(task.id);
                out.push(Node {
                    state,
                    network,
                    steps,
                    step_tasks,
                    trace: node.trace.clone(),
                    bindings,
                    protected,
                    depth: node.depth + 1,
                    decomposed: false,
                    applied: true,
                });
            }
        }
        Ok(())
    }

    fn decompose_children(&mut self, node: &Node, task: &TaskInstance, out: &mut Vec<Node>) -> Result<(), EngineError> {
        for m in self.problem.methods_for(task.name) {
            let mut base = Substitution::new();
            if !base.unify_args(&m.head.params, &task.args) {
                continue;
            }
            let start = out.len();
            for sigma in satisfying_bindings(&m.pre_pos, &m.pre_neg, &node.state, &base) {
                let d = match decompose_state(&node.state, &node.network, task.id, m, &sigma, &mut self.fresh) {
                    Ok(d) => d,
                    Err(e) => {
                        debug!("skipping {}: {e}", m.id());
                        continue;
                    }
                };
                let mut bindings = node.bindings.clone();
                for (v, t) in d.bindings.iter() {
                    bindings.unify_terms(Term::Var(*v), *t);
                }
                let mut trace = node.trace.clone();
                let children = d.children.iter().filter_map(|c| d.network.task(*c)).cloned().collect();
                trace.push(DecompositionRecord {
                    task: task.clone(),
                    method: m.head.name,
                    rank: m.rank,
                    sigma: d.sigma,
                    children,
                });
                out.push(Node {
                    state: node.state.clone(),
                    network: d.network,
                    steps: node.steps.clone(),
                    step_tasks: node.step_tasks.clone(),
                    trace,
                    bindings,
                    protected: node.protected.clone(),
                    depth: node.depth + 1,
                    decomposed: true,
                    applied: false,
                });
            }
            if self.config.commit_first_branch && out.len() > start {
                break;
            }
        }
        Ok(())
    }
}

/// Extends `sigma` so that every variable left in `args` is bound to a
/// problem constant, enumerating constants in first-occurrence order.
fn ground_leftovers(args: &[Term], sigma: Substitution, constants: &[Symbol]) -> Vec<Substitution> {
    let mut free: Vec<Var> = Vec::new();
    let mut seen = HashSet::new();
    for v in args.iter().filter_map(Term::as_var) {
        if seen.insert(v) {
            free.push(v);
        }
    }
    let mut out = vec![sigma];
    for v in free {
        out = out
            .into_iter()
            .flat_map(|s| {
                constants.iter().filter_map(move |c| {
                    let mut next = s.clone();
                    next.unify_terms(Term::Var(v), Term::Const(*c)).then_some(next)
                })
            })
            .collect();
    }
    out
}

/// Depth-first search for the first plan.
pub fn plan_state(problem: &PlanningProblem, config: SearchConfig) -> Result<SearchResult, EngineError> {
    let (mut search, root) = Search::new(problem, config);
    let mut found = None;
    let stop = search.run(root, |p| {
        found = Some(p);
        false
    })?;
    let outcome = match (found, stop) {
        (Some(p), _) => Outcome::Plan(p),
        (None, Stop::Budget) => Outcome::BudgetExhausted,
        (None, _) => Outcome::NoSolution,
    };
    Ok(SearchResult { outcome, stats: search.stats })
}

/// Every distinct step sequence reachable within the budget.
pub fn all_plans_state(problem: &PlanningProblem, config: SearchConfig) -> Result<AllPlans, EngineError> {
    let (mut search, root) = Search::new(problem, config);
    let mut seen: HashSet<Vec<Step>> = HashSet::new();
    let mut plans = Vec::new();
    let stop = search.run(root, |p| {
        if seen.insert(p.steps.clone()) {
            plans.push(p);
        }
        true
    })?;
    Ok(AllPlans { plans, complete: !matches!(stop, Stop::Budget), stats: search.stats })
}
