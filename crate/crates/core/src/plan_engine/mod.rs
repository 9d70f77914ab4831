//! Plan-space refinement: decompose compound tasks and manage constraints
//! until a primitive network with an executable linearisation is found.

mod establish;
mod interactions;
mod linearise;
mod propagate;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use log::debug;

use crate::io::SolutionInfo;
use crate::model::{
    decompose_po, satisfying_bindings, BindingConstraint, DecompositionRecord, Fresh, MethodPlan, MethodState,
    Operator, Outcome, Plan, PlanningProblem, Predicate, SearchResult, SearchStats, State, StateConstraint, Step,
    Substitution, TaskId, TaskInstance, TaskNetwork, Term, Trace, Var,
};
use crate::search::{AllPlans, EngineError, SearchConfig};
use crate::symbol::Symbol;

pub use linearise::Linearisation;
pub use propagate::{possibly_unify, propagate};

/// `producer` achieves `predicate` for `consumer`; `None` is the initial state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CausalLink {
    pub producer: Option<TaskId>,
    pub predicate: Predicate,
    pub consumer: TaskId,
}

impl fmt::Display for CausalLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.producer {
            Some(p) => write!(f, "{p} -{}-> {}", self.predicate, self.consumer),
            None => write!(f, "init -{}-> {}", self.predicate, self.consumer),
        }
    }
}

/// A pending `before(predicate, consumer)` condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obligation {
    pub predicate: Predicate,
    pub consumer: TaskId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ThreatKind {
    DeletedCondition,
    DoubleCross,
    Resource,
}

impl fmt::Display for ThreatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThreatKind::DeletedCondition => "deleted-condition",
            ThreatKind::DoubleCross => "double-cross",
            ThreatKind::Resource => "resource",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Threat {
    pub kind: ThreatKind,
    pub clobberer: TaskId,
    pub victim: TaskId,
    /// The condition at stake; for resource threats `(resource r)`.
    pub predicate: Predicate,
    /// The link the clobberer endangers, if any.
    pub link: Option<CausalLink>,
}

impl fmt::Display for Threat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} threat: {} against {} on {}", self.kind, self.clobberer, self.victim, self.predicate)
    }
}

/// A vertex of the plan space with its bookkeeping.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RefinementNode {
    pub network: TaskNetwork,
    pub links: Vec<CausalLink>,
    pub agenda: Vec<Obligation>,
    pub trace: Vec<DecompositionRecord>,
    /// Every binding folded into the network so far.
    pub subst: Substitution,
    pub log: Vec<String>,
    /// Primitive tasks whose preconditions are already on the agenda.
    registered: BTreeSet<TaskId>,
    depth: u64,
    decomposed: bool,
}

/// A solution found by the plan-based engine.
#[derive(Clone, Debug)]
pub struct Solution {
    pub plan: Plan,
    pub info: SolutionInfo,
}

#[derive(Clone, Debug)]
pub struct PoResult {
    pub result: SearchResult,
    pub info: Option<SolutionInfo>,
}

/// Methods and operators of a problem compiled for plan-space search.
///
/// A state-flavoured branch becomes a plan-flavoured method: precondition
/// literals on predicates no operator changes are kept as filters decided on
/// the initial state, the others move into a guard task with no effects,
/// ordered before the rest of the branch's network.
pub struct PlanEngine<'a> {
    problem: &'a PlanningProblem,
    operators: HashMap<Symbol, Operator>,
    methods: HashMap<Symbol, Vec<MethodPlan>>,
    guards: HashSet<Symbol>,
    may_add: HashMap<Symbol, BTreeSet<Symbol>>,
    may_del: HashMap<Symbol, BTreeSet<Symbol>>,
    fresh: Fresh,
    root_generation: u32,
}

fn guard_method(m: &MethodState, dynamic_pos: Vec<Predicate>, dynamic_neg: Vec<Predicate>) -> (MethodPlan, Operator) {
    let mut params: Vec<Var> = Vec::new();
    for v in dynamic_pos.iter().chain(&dynamic_neg).flat_map(|p| p.vars()) {
        if !params.contains(&v) {
            params.push(v);
        }
    }
    let name = Symbol::intern(&format!("!guard-{}-{}", m.head.name, m.rank));
    let mut op = Operator::new(name, &[]);
    op.params = params.clone();
    op.pre_pos = dynamic_pos;
    op.pre_neg = dynamic_neg;
    let mut network = m.network.clone();
    let gid = TaskId(network.max_id().map_or(0, |i| i.0 + 1));
    for t in &m.network.tasks {
        network.ordering.insert((gid, t.id));
    }
    network.tasks.push(TaskInstance { id: gid, name, args: params.into_iter().map(Term::Var).collect() });
    let plan = MethodPlan { head: m.head.clone(), rank: m.rank, network, filter_pos: vec![], filter_neg: vec![] };
    (plan, op)
}

impl<'a> PlanEngine<'a> {
    pub fn new(problem: &'a PlanningProblem) -> Self {
        let domain = &problem.domain;
        let mut operators: HashMap<Symbol, Operator> = domain.operators.iter().map(|o| (o.name, o.clone())).collect();
        let mut methods: HashMap<Symbol, Vec<MethodPlan>> = HashMap::new();
        let mut guards = HashSet::new();
        for m in &domain.methods {
            let (filter_pos, dynamic_pos): (Vec<_>, Vec<_>) =
                m.pre_pos.iter().cloned().partition(|p| domain.is_static(p.name));
            let (filter_neg, dynamic_neg): (Vec<_>, Vec<_>) =
                m.pre_neg.iter().cloned().partition(|p| domain.is_static(p.name));
            let mut plan = if dynamic_pos.is_empty() && dynamic_neg.is_empty() {
                MethodPlan {
                    head: m.head.clone(),
                    rank: m.rank,
                    network: m.network.clone(),
                    filter_pos: vec![],
                    filter_neg: vec![],
                }
            } else {
                let (plan, op) = guard_method(m, dynamic_pos, dynamic_neg);
                guards.insert(op.name);
                operators.insert(op.name, op);
                plan
            };
            plan.filter_pos = filter_pos;
            plan.filter_neg = filter_neg;
            methods.entry(m.head.name).or_default().push(plan);
        }
        for list in methods.values_mut() {
            list.sort_by_key(|m| m.rank);
        }
        let effects = |pick: fn(&Operator) -> &Vec<Predicate>| {
            let mut table: HashMap<Symbol, BTreeSet<Symbol>> = HashMap::new();
            loop {
                let mut changed = false;
                for (name, list) in &methods {
                    let mut acc = table.get(name).cloned().unwrap_or_default();
                    let before = acc.len();
                    for t in list.iter().flat_map(|m| &m.network.tasks) {
                        if let Some(op) = operators.get(&t.name) {
                            acc.extend(pick(op).iter().map(|p| p.name));
                        } else if let Some(sub) = table.get(&t.name) {
                            acc.extend(sub.iter().copied());
                        }
                    }
                    if acc.len() != before || !table.contains_key(name) {
                        changed |= acc.len() != before;
                        table.insert(*name, acc);
                    }
                }
                if !changed {
                    return table;
                }
            }
        };
        let may_add = effects(|o| &o.add);
        let may_del = effects(|o| &o.del);
        let mut fresh = Fresh::after(&problem.def.network);
        let root_generation = fresh.generation();
        PlanEngine { problem, operators, methods, guards, may_add, may_del, fresh, root_generation }
    }

    pub fn initial_state(&self) -> &State {
        &self.problem.initial_state
    }

    pub fn operator(&self, name: Symbol) -> Option<&Operator> {
        self.operators.get(&name)
    }

    pub fn is_primitive(&self, name: Symbol) -> bool {
        self.operators.contains_key(&name)
    }

    pub fn is_guard(&self, name: Symbol) -> bool {
        self.guards.contains(&name)
    }

    pub fn methods_for(&self, name: Symbol) -> &[MethodPlan] {
        self.methods.get(&name).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The root of the plan space: the initial network with its variables
    /// standardized apart and the preconditions of its primitive tasks on
    /// the agenda.
    pub fn initial_node(&self) -> RefinementNode {
        let mut network = self.problem.def.network.with_generation(self.root_generation);
        network.close();
        let mut node = RefinementNode { network, ..RefinementNode::default() };
        self.register(&mut node);
        node
    }

    fn roots(&self) -> Vec<TaskInstance> {
        self.problem.def.network.with_generation(self.root_generation).tasks
    }

    /// Puts the preconditions of newly arrived primitive tasks, and the
    /// `before` constraints on them, on the agenda.
    fn register(&self, node: &mut RefinementNode) {
        for t in &node.network.tasks {
            if node.registered.contains(&t.id) {
                continue;
            }
            let Some(op) = self.operators.get(&t.name) else { continue };
            node.registered.insert(t.id);
            if let Ok(inst) = op.instantiate(&t.args) {
                for p in inst.pre_pos {
                    node.agenda.push(Obligation { predicate: p, consumer: t.id });
                }
            }
            for c in &node.network.state_constraints {
                if let StateConstraint::Before(p, id) = c {
                    if *id == t.id {
                        node.agenda.push(Obligation { predicate: p.clone(), consumer: t.id });
                    }
                }
            }
        }
    }

    fn compound_tasks(&self, tn: &TaskNetwork) -> Vec<TaskId> {
        tn.tasks.iter().filter(|t| !self.is_primitive(t.name)).map(|t| t.id).collect()
    }

    /// The first compound task in the stable topological order by id.
    fn leftmost_compound(&self, tn: &TaskNetwork) -> Option<TaskId> {
        let compound: BTreeSet<TaskId> = self.compound_tasks(tn).into_iter().collect();
        if compound.is_empty() {
            return None;
        }
        let mut placed = BTreeSet::new();
        let mut remaining: BTreeSet<TaskId> = tn.ids().into_iter().collect();
        while !remaining.is_empty() {
            let next = *remaining
                .iter()
                .find(|t| tn.predecessors(**t).iter().all(|p| placed.contains(p)))
                .expect("propagated networks are acyclic");
            if compound.contains(&next) {
                return Some(next);
            }
            remaining.remove(&next);
            placed.insert(next);
        }
        None
    }

    /// Children of `node` obtained by decomposing `t` with every method
    /// whose head unifies and whose filters hold in the initial state.
    pub fn decompose(&mut self, node: &RefinementNode, t: TaskId) -> Vec<RefinementNode> {
        let Some(task) = node.network.task(t).cloned() else { return vec![] };
        let mut children = Vec::new();
        let methods = self.methods.get(&task.name).cloned().unwrap_or_default();
        for m in &methods {
            let d = match decompose_po(&node.network, t, m, &mut self.fresh) {
                Ok(d) => d,
                Err(e) => {
                    debug!("skipping {}: {e}", m.id());
                    continue;
                }
            };
            let pos: Vec<Predicate> = m.filter_pos.iter().map(|p| p.apply(&d.sigma).apply(&d.bindings)).collect();
            let neg: Vec<Predicate> = m.filter_neg.iter().map(|p| p.apply(&d.sigma).apply(&d.bindings)).collect();
            for beta in satisfying_bindings(&pos, &neg, &self.problem.initial_state, &Substitution::new()) {
                let mut network = d.network.clone();
                for (v, value) in beta.normalized().iter() {
                    network.bindings.push(BindingConstraint::eq(Term::Var(*v), *value));
                }
                let record_children: Vec<TaskInstance> = d
                    .children
                    .iter()
                    .filter_map(|c| network.task(*c))
                    .filter(|c| !self.is_guard(c.name))
                    .cloned()
                    .collect();
                let sigma = Substitution::from_pairs(d.sigma.iter().map(|(v, x)| (*v, beta.resolve(*x))));
                let mut child = RefinementNode {
                    network,
                    links: node.links.clone(),
                    agenda: node.agenda.clone(),
                    trace: node.trace.clone(),
                    subst: node.subst.clone(),
                    log: node.log.clone(),
                    registered: node.registered.clone(),
                    depth: node.depth + 1,
                    decomposed: true,
                };
                child.trace.push(DecompositionRecord {
                    task: task.clone(),
                    method: m.head.name,
                    rank: m.rank,
                    sigma,
                    children: record_children,
                });
                self.register(&mut child);
                children.push(child);
            }
        }
        children
    }

    /// Children binding the first remaining variable to each constant.
    fn ground_next(&self, node: &RefinementNode) -> Vec<RefinementNode> {
        let Some(v) = node.network.tasks.iter().flat_map(|t| t.args.iter()).find_map(Term::as_var) else {
            return vec![];
        };
        self.problem
            .constants()
            .iter()
            .map(|c| {
                let mut child = node.clone();
                child.depth += 1;
                child.decomposed = false;
                child.network.bindings.push(BindingConstraint::eq(Term::Var(v), Term::Const(*c)));
                child
            })
            .collect()
    }

    fn solution(&self, node: &RefinementNode, lin: &Linearisation) -> Solution {
        let mut steps = Vec::new();
        let mut step_tasks = Vec::new();
        for id in &lin.order {
            let t = node.network.task(*id).expect("linearised tasks exist");
            if self.is_guard(t.name) {
                continue;
            }
            let args = t.args.iter().map(|a| a.as_const().expect("linearised tasks are ground")).collect();
            steps.push(Step { name: t.name, args });
            step_tasks.push(*id);
        }
        let mut trace = Trace { roots: self.roots(), decompositions: node.trace.clone() };
        trace.finalize(&node.subst);
        let mut log = node.log.clone();
        for th in self.detect_interactions(node).iter().filter(|t| t.kind == ThreatKind::Resource) {
            log.push(format!("{th} (reported only)"));
        }
        let info = SolutionInfo {
            network: node.network.clone(),
            links: node.links.iter().map(|l| (l.producer, l.predicate.clone(), l.consumer)).collect(),
            threat_log: log,
        };
        Solution { plan: Plan { steps, step_tasks, trace }, info }
    }

    /// One refinement step: the children of a consistent node, or the
    /// solution it already is.
    fn refine(&mut self, node: RefinementNode, all: bool) -> Result<Expansion, EngineError> {
        let Some(node) = propagate(&node) else { return Ok(Expansion::Children(vec![])) };
        let Some(node) = self.simplify(&node) else { return Ok(Expansion::Children(vec![])) };
        let threats = self.detect_interactions(&node);
        if let Some(th) = threats.iter().find(|t| t.kind != ThreatKind::Resource) {
            let children = self.resolve_threat(&node, th)?;
            let note = format!("{th}: {} resolution(s)", children.len());
            return Ok(Expansion::Children(
                children
                    .into_iter()
                    .map(|mut c| {
                        c.log.push(note.clone());
                        c.depth = node.depth + 1;
                        c.decomposed = false;
                        c
                    })
                    .collect(),
            ));
        }
        if let Some(ob) = self.ready_obligation(&node) {
            let children = self
                .establish(&node, ob)
                .into_iter()
                .map(|mut c| {
                    c.depth = node.depth + 1;
                    c.decomposed = false;
                    c
                })
                .collect();
            return Ok(Expansion::Children(children));
        }
        if let Some(t) = self.leftmost_compound(&node.network) {
            return Ok(Expansion::Children(self.decompose(&node, t)));
        }
        if node.network.tasks.iter().any(|t| !t.is_ground()) {
            return Ok(Expansion::Children(self.ground_next(&node)));
        }
        let lins = if all {
            self.linearise_all(&node.network, 64)?
        } else {
            self.linearise(&node.network)?.into_iter().collect()
        };
        Ok(Expansion::Solutions(lins.iter().map(|l| self.solution(&node, l)).collect()))
    }

    fn run(
        &mut self,
        config: &SearchConfig,
        all: bool,
        mut on_solution: impl FnMut(Solution) -> bool,
    ) -> Result<(bool, SearchStats), EngineError> {
        let mut stats = SearchStats::default();
        let mut stack = vec![self.initial_node()];
        let mut budget_hit = false;
        while let Some(node) = stack.pop() {
            if node.decomposed {
                if stats.decompositions >= config.budget.max_decompositions {
                    return Ok((true, stats));
                }
                stats.decompositions += 1;
            }
            stats.nodes += 1;
            stats.max_depth = stats.max_depth.max(node.depth);
            stats.max_network_size = stats.max_network_size.max(node.network.len() as u64);
            match self.refine(node, all)? {
                Expansion::Solutions(sols) => {
                    if sols.is_empty() {
                        stats.backtracks += 1;
                    }
                    for s in sols {
                        if !on_solution(s) {
                            return Ok((false, stats));
                        }
                    }
                }
                Expansion::Children(mut children) => {
                    let before = children.len();
                    children.retain(|c| c.network.len() <= config.budget.max_network_size);
                    budget_hit |= children.len() < before;
                    if children.is_empty() {
                        stats.backtracks += 1;
                    }
                    stack.extend(children.into_iter().rev());
                }
            }
        }
        Ok((budget_hit, stats))
    }

    /// Depth-first refinement until the first solution.
    pub fn solve(&mut self, config: &SearchConfig) -> Result<PoResult, EngineError> {
        let mut found = None;
        let (budget_hit, stats) = self.run(config, false, |s| {
            found = Some(s);
            false
        })?;
        Ok(match found {
            Some(s) => PoResult { result: SearchResult { outcome: Outcome::Plan(s.plan), stats }, info: Some(s.info) },
            None => {
                let outcome = if budget_hit { Outcome::BudgetExhausted } else { Outcome::NoSolution };
                PoResult { result: SearchResult { outcome, stats }, info: None }
            }
        })
    }

    /// Every executable linearisation of every solution network, without
    /// duplicate step sequences.
    pub fn solve_all(&mut self, config: &SearchConfig) -> Result<AllPlans, EngineError> {
        let mut seen: HashSet<Vec<Step>> = HashSet::new();
        let mut plans = Vec::new();
        let (budget_hit, stats) = self.run(config, true, |s| {
            if seen.insert(s.plan.steps.clone()) {
                plans.push(s.plan);
            }
            true
        })?;
        Ok(AllPlans { plans, complete: !budget_hit, stats })
    }
}

enum Expansion {
    Children(Vec<RefinementNode>),
    Solutions(Vec<Solution>),
}

/// Plan-space search for the first solution.
pub fn plan_po(problem: &PlanningProblem, config: SearchConfig) -> Result<PoResult, EngineError> {
    PlanEngine::new(problem).solve(&config)
}

/// Every distinct plan the plan-space search finds within the budget.
pub fn all_plans_po(problem: &PlanningProblem, config: SearchConfig) -> Result<AllPlans, EngineError> {
    PlanEngine::new(problem).solve_all(&config)
}

/// Tasks that may come before `t` (those not required to follow it).
pub(crate) fn possibly_before(tn: &TaskNetwork, u: TaskId, t: TaskId) -> bool {
    u != t && !tn.precedes(t, u)
}
