use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{MethodPlan, MethodState, ModelError, Predicate, State, Substitution, Term, Var};
use crate::symbol::Symbol;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u32);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TaskInstance {
    pub id: TaskId,
    pub name: Symbol,
    pub args: Vec<Term>,
}

impl TaskInstance {
    pub fn new(id: u32, name: impl Into<Symbol>, args: &[&str]) -> Self {
        TaskInstance { id: TaskId(id), name: name.into(), args: args.iter().map(|a| Term::parse(a)).collect() }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|a| !a.is_var())
    }
}

impl fmt::Display for TaskInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// Codesignation (`equal`) or separation between two terms. At least one side
/// is a variable while the constraint is undecided.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct BindingConstraint {
    pub lhs: Term,
    pub rhs: Term,
    pub equal: bool,
}

impl BindingConstraint {
    pub fn eq(lhs: Term, rhs: Term) -> Self {
        BindingConstraint { lhs, rhs, equal: true }
    }

    pub fn ne(lhs: Term, rhs: Term) -> Self {
        BindingConstraint { lhs, rhs, equal: false }
    }

    pub fn apply(&self, s: &Substitution) -> Self {
        BindingConstraint { lhs: s.resolve(self.lhs), rhs: s.resolve(self.rhs), equal: self.equal }
    }
}

/// `before(p, t)`: p holds in the state right before t.
/// `after(t, p)`: p holds in the state right after t.
/// `between(t, p, u)`: p holds in every state from right after t up to right before u.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum StateConstraint {
    Before(Predicate, TaskId),
    After(TaskId, Predicate),
    Between(TaskId, Predicate, TaskId),
}

impl StateConstraint {
    pub fn predicate(&self) -> &Predicate {
        match self {
            StateConstraint::Before(p, _) | StateConstraint::After(_, p) | StateConstraint::Between(_, p, _) => p,
        }
    }

    pub fn mentions(&self, t: TaskId) -> bool {
        match self {
            StateConstraint::Before(_, a) | StateConstraint::After(a, _) => *a == t,
            StateConstraint::Between(a, _, b) => *a == t || *b == t,
        }
    }

    pub fn tasks(&self) -> Vec<TaskId> {
        match self {
            StateConstraint::Before(_, a) | StateConstraint::After(a, _) => vec![*a],
            StateConstraint::Between(a, _, b) => vec![*a, *b],
        }
    }

    pub fn map_tasks(&self, f: impl Fn(TaskId) -> TaskId) -> Self {
        match self {
            StateConstraint::Before(p, a) => StateConstraint::Before(p.clone(), f(*a)),
            StateConstraint::After(a, p) => StateConstraint::After(f(*a), p.clone()),
            StateConstraint::Between(a, p, b) => StateConstraint::Between(f(*a), p.clone(), f(*b)),
        }
    }

    pub fn map_predicate(&self, f: impl Fn(&Predicate) -> Predicate) -> Self {
        match self {
            StateConstraint::Before(p, a) => StateConstraint::Before(f(p), *a),
            StateConstraint::After(a, p) => StateConstraint::After(*a, f(p)),
            StateConstraint::Between(a, p, b) => StateConstraint::Between(*a, f(p), *b),
        }
    }
}

/// Labelled task instances with ordering, binding and state constraints.
///
/// Engines keep `ordering` transitively closed; networks read from files
/// hold whatever edges were written and are closed before use.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TaskNetwork {
    pub tasks: Vec<TaskInstance>,
    pub ordering: BTreeSet<(TaskId, TaskId)>,
    pub bindings: Vec<BindingConstraint>,
    pub state_constraints: Vec<StateConstraint>,
}

impl TaskNetwork {
    pub fn new(tasks: Vec<TaskInstance>, ordering: &[(u32, u32)]) -> Self {
        TaskNetwork {
            tasks,
            ordering: ordering.iter().map(|&(a, b)| (TaskId(a), TaskId(b))).collect(),
            ..TaskNetwork::default()
        }
    }

    /// A network whose tasks are ordered one after another.
    pub fn sequence(tasks: Vec<TaskInstance>) -> Self {
        let ordering = tasks.windows(2).map(|w| (w[0].id, w[1].id)).collect();
        let mut tn = TaskNetwork { tasks, ordering, ..TaskNetwork::default() };
        tn.close();
        tn
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn task(&self, id: TaskId) -> Option<&TaskInstance> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn contains(&self, id: TaskId) -> bool {
        self.tasks.iter().any(|t| t.id == id)
    }

    pub fn ids(&self) -> Vec<TaskId> {
        self.tasks.iter().map(|t| t.id).collect()
    }

    pub fn max_id(&self) -> Option<TaskId> {
        self.tasks.iter().map(|t| t.id).max()
    }

    /// `a ≺ b` according to the stored (closed) ordering.
    pub fn precedes(&self, a: TaskId, b: TaskId) -> bool {
        self.ordering.contains(&(a, b))
    }

    pub fn predecessors(&self, t: TaskId) -> Vec<TaskId> {
        self.ordering.iter().filter(|(_, b)| *b == t).map(|(a, _)| *a).collect()
    }

    pub fn successors(&self, t: TaskId) -> Vec<TaskId> {
        self.ordering.range((t, TaskId(0))..=(t, TaskId(u32::MAX))).map(|(_, b)| *b).collect()
    }

    pub fn closure(&self) -> BTreeSet<(TaskId, TaskId)> {
        let mut adj: BTreeMap<TaskId, Vec<TaskId>> = BTreeMap::new();
        for (a, b) in &self.ordering {
            adj.entry(*a).or_default().push(*b);
        }
        let mut out = BTreeSet::new();
        for &start in adj.keys() {
            let mut stack = adj[&start].clone();
            let mut seen = BTreeSet::new();
            while let Some(n) = stack.pop() {
                if seen.insert(n) {
                    out.insert((start, n));
                    if let Some(next) = adj.get(&n) {
                        stack.extend(next.iter().copied());
                    }
                }
            }
        }
        out
    }

    pub fn close(&mut self) {
        self.ordering = self.closure();
    }

    /// True if the transitive closure of the ordering is irreflexive.
    pub fn is_acyclic(&self) -> bool {
        !self.closure().iter().any(|(a, b)| a == b)
    }

    pub fn is_totally_ordered(&self) -> bool {
        let c = self.closure();
        if c.iter().any(|(a, b)| a == b) {
            return false;
        }
        for (i, a) in self.tasks.iter().enumerate() {
            for b in &self.tasks[i + 1..] {
                if !c.contains(&(a.id, b.id)) && !c.contains(&(b.id, a.id)) {
                    return false;
                }
            }
        }
        true
    }

    /// Tasks without a predecessor, in id order.
    pub fn minimal_tasks(&self) -> Vec<&TaskInstance> {
        let with_pred: BTreeSet<TaskId> = self.ordering.iter().map(|(_, b)| *b).collect();
        let mut out: Vec<&TaskInstance> = self.tasks.iter().filter(|t| !with_pred.contains(&t.id)).collect();
        out.sort_by_key(|t| t.id);
        out
    }

    /// Adds `a ≺ b` and keeps the ordering closed. Returns false, leaving the
    /// network unchanged, if the edge would create a cycle.
    pub fn add_ordering(&mut self, a: TaskId, b: TaskId) -> bool {
        if a == b || self.precedes(b, a) {
            return false;
        }
        if self.precedes(a, b) {
            return true;
        }
        let mut before: Vec<TaskId> = self.predecessors(a);
        before.push(a);
        let mut after: Vec<TaskId> = self.successors(b);
        after.push(b);
        for x in &before {
            for y in &after {
                self.ordering.insert((*x, *y));
            }
        }
        true
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut vs = BTreeSet::new();
        for t in &self.tasks {
            vs.extend(t.args.iter().filter_map(Term::as_var));
        }
        for b in &self.bindings {
            vs.extend([b.lhs, b.rhs].iter().filter_map(Term::as_var));
        }
        for c in &self.state_constraints {
            vs.extend(c.predicate().vars());
        }
        vs
    }

    pub fn apply_subst(&mut self, s: &Substitution) {
        if s.is_empty() {
            return;
        }
        for t in &mut self.tasks {
            t.args = s.apply_all(&t.args);
        }
        for b in &mut self.bindings {
            *b = b.apply(s);
        }
        for c in &mut self.state_constraints {
            *c = c.map_predicate(|p| p.apply(s));
        }
    }

    /// Replaces every variable of generation 0 with the same name at `generation`.
    pub fn with_generation(&self, generation: u32) -> TaskNetwork {
        let s = template_renaming(self.vars().into_iter(), generation);
        let mut out = self.clone();
        out.apply_subst(&s);
        out
    }

    /// Removes a task together with its ordering edges and the state
    /// constraints that mention it.
    pub fn remove_task(&mut self, id: TaskId) -> Option<TaskInstance> {
        let pos = self.tasks.iter().position(|t| t.id == id)?;
        let t = self.tasks.remove(pos);
        self.ordering.retain(|(a, b)| *a != id && *b != id);
        self.state_constraints.retain(|c| !c.mentions(id));
        Some(t)
    }
}

fn template_renaming(vars: impl Iterator<Item = Var>, generation: u32) -> Substitution {
    Substitution::from_pairs(vars.filter(|v| v.generation == 0).map(|v| (v, Term::Var(v.with_generation(generation)))))
}

/// Source of identifiers that are never reused within one search run.
#[derive(Clone, Debug)]
pub struct Fresh {
    next_task: u32,
    next_generation: u32,
}

impl Fresh {
    pub fn new() -> Self {
        Fresh { next_task: 0, next_generation: 1 }
    }

    /// Starts task ids after the largest id in `tn`.
    pub fn after(tn: &TaskNetwork) -> Self {
        Fresh { next_task: tn.max_id().map_or(0, |m| m.0 + 1), next_generation: 1 }
    }

    pub fn task_id(&mut self) -> TaskId {
        let id = TaskId(self.next_task);
        self.next_task += 1;
        id
    }

    pub fn generation(&mut self) -> u32 {
        let g = self.next_generation;
        self.next_generation += 1;
        g
    }
}

impl Default for Fresh {
    fn default() -> Self {
        Fresh::new()
    }
}

/// A copy of `tn` whose task ids are fresh. Labels, ordering, state
/// constraints and variables are carried over through the returned bijection.
pub fn rename_fresh(tn: &TaskNetwork, fresh: &mut Fresh) -> (TaskNetwork, BTreeMap<TaskId, TaskId>) {
    let map: BTreeMap<TaskId, TaskId> = tn.tasks.iter().map(|t| (t.id, fresh.task_id())).collect();
    let f = |id: TaskId| map.get(&id).copied().unwrap_or(id);
    let out = TaskNetwork {
        tasks: tn.tasks.iter().map(|t| TaskInstance { id: f(t.id), ..t.clone() }).collect(),
        ordering: tn.ordering.iter().map(|(a, b)| (f(*a), f(*b))).collect(),
        bindings: tn.bindings.clone(),
        state_constraints: tn.state_constraints.iter().map(|c| c.map_tasks(f)).collect(),
    };
    (out, map)
}

/// Result of replacing one compound task by a method's network.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub network: TaskNetwork,
    /// Ids of the new tasks, in the method's task order.
    pub children: Vec<TaskId>,
    /// Value of every method variable (as written in the domain).
    pub sigma: Substitution,
    /// Bindings the decomposition imposes on variables outside the method.
    pub bindings: Substitution,
}

fn inherit_ordering(tn_c: &TaskNetwork, t: TaskId, children: &[TaskId]) -> BTreeSet<(TaskId, TaskId)> {
    let mut ordering: BTreeSet<(TaskId, TaskId)> =
        tn_c.ordering.iter().filter(|(a, b)| *a != t && *b != t).copied().collect();
    for p in tn_c.predecessors(t) {
        for c in children {
            ordering.insert((p, *c));
        }
    }
    for s in tn_c.successors(t) {
        for c in children {
            ordering.insert((*c, s));
        }
    }
    ordering
}

fn splice_tasks(tn_c: &TaskNetwork, t: TaskId, new: Vec<TaskInstance>) -> Vec<TaskInstance> {
    let mut tasks = Vec::with_capacity(tn_c.tasks.len() + new.len());
    let mut new = Some(new);
    for task in &tn_c.tasks {
        if task.id == t {
            tasks.extend(new.take().unwrap_or_default());
        } else {
            tasks.push(task.clone());
        }
    }
    tasks
}

fn head_sigma(method_vars: impl Iterator<Item = Var>, generation: u32, s: &Substitution) -> Substitution {
    Substitution::from_pairs(method_vars.map(|v| (v, s.resolve(Term::Var(v.with_generation(generation)))))).normalized()
}

/// Plan-based decomposition: replaces `t` by a fresh copy of `m`'s network and
/// passes every ordering and state constraint on `t` down to the copies.
/// Head unification is recorded as equality binding constraints.
pub fn decompose_po(
    tn_c: &TaskNetwork,
    t: TaskId,
    m: &MethodPlan,
    fresh: &mut Fresh,
) -> Result<Decomposition, ModelError> {
    let task = tn_c.task(t).ok_or(ModelError::UnknownTask(t))?;
    if task.name != m.head.name || task.args.len() != m.head.params.len() {
        return Err(ModelError::LabelMismatch { task: task.to_string(), method: m.id() });
    }
    let generation = fresh.generation();
    let mut method_vars: BTreeSet<Var> = m.network.vars();
    method_vars.extend(m.head.params.iter().filter_map(Term::as_var));
    let rename = template_renaming(method_vars.iter().copied(), generation);
    let head = rename.apply_all(&m.head.params);
    let mut unifier = Substitution::new();
    if !unifier.unify_args(&head, &task.args) {
        return Err(ModelError::UnificationFailure { task: task.to_string(), method: m.id() });
    }
    let mut copy = m.network.clone();
    copy.apply_subst(&rename);
    let (copy, map) = rename_fresh(&copy, fresh);
    let children: Vec<TaskId> = m.network.tasks.iter().map(|x| map[&x.id]).collect();

    let mut state_constraints: Vec<StateConstraint> =
        tn_c.state_constraints.iter().filter(|c| !c.mentions(t)).cloned().collect();
    state_constraints.extend(copy.state_constraints.iter().cloned());
    for c in tn_c.state_constraints.iter().filter(|c| c.mentions(t)) {
        match c {
            StateConstraint::Before(p, _) => {
                state_constraints.extend(children.iter().map(|k| StateConstraint::Before(p.clone(), *k)))
            }
            StateConstraint::After(_, p) => {
                state_constraints.extend(children.iter().map(|k| StateConstraint::After(*k, p.clone())))
            }
            StateConstraint::Between(a, p, b) => {
                for k in &children {
                    let from = if *a == t { *k } else { *a };
                    let to = if *b == t { *k } else { *b };
                    state_constraints.push(StateConstraint::Between(from, p.clone(), to));
                }
            }
        }
    }

    let mut bindings = tn_c.bindings.clone();
    bindings.extend(copy.bindings.iter().copied());
    let unifier = unifier.normalized();
    for (v, value) in unifier.iter() {
        bindings.push(BindingConstraint::eq(Term::Var(*v), *value));
    }

    let network = TaskNetwork {
        tasks: splice_tasks(tn_c, t, copy.tasks),
        ordering: inherit_ordering(tn_c, t, &children).into_iter().chain(copy.ordering.iter().copied()).collect(),
        bindings,
        state_constraints,
    };
    let sigma = head_sigma(method_vars.into_iter(), generation, &unifier);
    let outside = unifier.restricted(|v| !(v.generation == generation));
    Ok(Decomposition { network, children, sigma, bindings: outside })
}

/// State-based decomposition in state `s`. `sigma` binds method variables
/// (as written in the domain) and may also bind variables of `tn_c`; the
/// method's precondition must hold in `s` under it. Variables of the method
/// network left unbound become fresh variables.
pub fn decompose_state(
    s: &State,
    tn_c: &TaskNetwork,
    t: TaskId,
    m: &MethodState,
    sigma: &Substitution,
    fresh: &mut Fresh,
) -> Result<Decomposition, ModelError> {
    let task = tn_c.task(t).ok_or(ModelError::UnknownTask(t))?;
    if task.name != m.head.name || task.args.len() != m.head.params.len() {
        return Err(ModelError::LabelMismatch { task: task.to_string(), method: m.id() });
    }
    let generation = fresh.generation();
    let method_vars = m.vars();
    let rename = template_renaming(method_vars.iter().copied(), generation);
    // carry the caller's bindings over to the renamed method variables
    let mut full = Substitution::new();
    for (v, value) in sigma.iter() {
        let key = rename.resolve(Term::Var(*v));
        let value = rename.resolve(*value);
        if !full.unify_terms(key, value) {
            return Err(ModelError::UnificationFailure { task: task.to_string(), method: m.id() });
        }
    }
    let head = rename.apply_all(&m.head.params);
    if !full.unify_args(&head, &task.args) {
        return Err(ModelError::UnificationFailure { task: task.to_string(), method: m.id() });
    }
    for p in &m.pre_pos {
        let g = p.apply(&rename).apply(&full);
        if !g.is_ground() || !s.contains(&g) {
            return Err(ModelError::MethodNotApplicable { method: m.id(), reason: format!("{g} does not hold") });
        }
    }
    for p in &m.pre_neg {
        let g = p.apply(&rename).apply(&full);
        if !g.is_ground() || s.contains(&g) {
            return Err(ModelError::MethodNotApplicable { method: m.id(), reason: format!("{g} holds") });
        }
    }

    let mut copy =
        TaskNetwork { tasks: m.network.tasks.clone(), ordering: m.network.ordering.clone(), ..TaskNetwork::default() };
    copy.close();
    copy.apply_subst(&rename);
    copy.apply_subst(&full);
    let (copy, map) = rename_fresh(&copy, fresh);
    let children: Vec<TaskId> = m.network.tasks.iter().map(|x| map[&x.id]).collect();

    let mut network = TaskNetwork {
        tasks: splice_tasks(tn_c, t, copy.tasks),
        ordering: inherit_ordering(tn_c, t, &children).into_iter().chain(copy.ordering).collect(),
        bindings: tn_c.bindings.clone(),
        state_constraints: tn_c.state_constraints.iter().filter(|c| !c.mentions(t)).cloned().collect(),
    };
    let outside = full.restricted(|v| v.generation != generation);
    network.apply_subst(&outside);
    let sigma = head_sigma(method_vars.into_iter(), generation, &full);
    Ok(Decomposition { network, children, sigma, bindings: outside })
}
