use std::collections::{BTreeSet, HashSet};

use super::PlanEngine;
use crate::model::{applicable, apply, OperatorInstance, Predicate, State, StateConstraint, TaskId, TaskNetwork};
use crate::search::EngineError;

/// A total order of a primitive network and the states it passes through.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Linearisation {
    pub order: Vec<TaskId>,
    /// `order.len() + 1` states, starting with the initial one.
    pub states: Vec<State>,
}

struct Walk<'n> {
    tn: &'n TaskNetwork,
    instances: Vec<(TaskId, OperatorInstance)>,
    cap: usize,
    found: Vec<Linearisation>,
    /// Dead ends already explored: placed tasks, facts, open intervals.
    failed: HashSet<(BTreeSet<TaskId>, Vec<Predicate>, Vec<usize>)>,
}

impl Walk<'_> {
    fn instance(&self, t: TaskId) -> &OperatorInstance {
        &self.instances.iter().find(|(id, _)| *id == t).expect("every task is instantiated").1
    }

    fn key(placed: &BTreeSet<TaskId>, s: &State, open: &[usize]) -> (BTreeSet<TaskId>, Vec<Predicate>, Vec<usize>) {
        let mut facts: Vec<Predicate> = s.iter().cloned().collect();
        facts.sort();
        (placed.clone(), facts, open.to_vec())
    }

    /// Extends a partial order; `open` holds the between-constraints whose
    /// interval has started. Returns whether anything was found below.
    fn step(
        &mut self,
        order: &mut Vec<TaskId>,
        states: &mut Vec<State>,
        placed: &mut BTreeSet<TaskId>,
        open: &mut [usize],
    ) -> bool {
        if self.found.len() >= self.cap {
            return true;
        }
        if order.len() == self.tn.len() {
            self.found.push(Linearisation { order: order.clone(), states: states.clone() });
            return true;
        }
        let key = Self::key(placed, states.last().expect("non-empty"), open);
        if self.failed.contains(&key) {
            return false;
        }
        let mut any = false;
        let candidates: Vec<TaskId> = self
            .tn
            .ids()
            .into_iter()
            .filter(|t| !placed.contains(t) && self.tn.predecessors(*t).iter().all(|p| placed.contains(p)))
            .collect();
        for t in candidates {
            let s = states.last().expect("non-empty").clone();
            let inst = self.instance(t).clone();
            if !applicable(&inst, &s).unwrap_or(false) {
                continue;
            }
            let constraints = &self.tn.state_constraints;
            let ok_before = constraints.iter().all(|c| match c {
                StateConstraint::Before(p, x) => *x != t || s.contains(p),
                // the interval must have started before its end task
                StateConstraint::Between(a, _, b) => *b != t || placed.contains(a),
                _ => true,
            });
            if !ok_before {
                continue;
            }
            let next = apply(&inst, &s).expect("checked applicable");
            let mut next_open: Vec<usize> = open
                .iter()
                .copied()
                .filter(|&i| !matches!(&constraints[i], StateConstraint::Between(_, _, b) if *b == t))
                .collect();
            for (i, c) in constraints.iter().enumerate() {
                if matches!(c, StateConstraint::Between(a, _, _) if *a == t) {
                    next_open.push(i);
                }
            }
            next_open.sort_unstable();
            let ok_after = constraints.iter().all(|c| match c {
                StateConstraint::After(x, p) => *x != t || next.contains(p),
                _ => true,
            }) && next_open.iter().all(|&i| next.contains(constraints[i].predicate()));
            if !ok_after {
                continue;
            }
            order.push(t);
            states.push(next);
            placed.insert(t);
            any |= self.step(order, states, placed, &mut next_open);
            order.pop();
            states.pop();
            placed.remove(&t);
            if self.found.len() >= self.cap {
                return true;
            }
        }
        if !any {
            self.failed.insert(key);
        }
        any
    }
}

impl PlanEngine<'_> {
    /// Executable total orders of a primitive, ground network consistent
    /// with its state constraints, in order of discovery (smallest ids
    /// first), at most `cap` of them.
    pub fn linearise_all(&self, tn: &TaskNetwork, cap: usize) -> Result<Vec<Linearisation>, EngineError> {
        let mut instances = Vec::new();
        for t in &tn.tasks {
            if !t.is_ground() {
                return Err(EngineError::NonGroundNetwork(t.to_string()));
            }
            let op = self.operator(t.name).ok_or_else(|| EngineError::NonGroundNetwork(format!("{t} is compound")))?;
            instances.push((t.id, op.instantiate(&t.args)?));
        }
        if let Some(c) = tn.state_constraints.iter().find(|c| !c.predicate().is_ground()) {
            return Err(EngineError::NonGroundNetwork(c.predicate().to_string()));
        }
        let mut walk = Walk { tn, instances, cap, found: Vec::new(), failed: HashSet::new() };
        let mut states = vec![self.initial_state().clone()];
        walk.step(&mut Vec::new(), &mut states, &mut BTreeSet::new(), &mut Vec::new());
        Ok(walk.found)
    }

    /// The first executable total order, if there is one.
    pub fn linearise(&self, tn: &TaskNetwork) -> Result<Option<Linearisation>, EngineError> {
        Ok(self.linearise_all(tn, 1)?.into_iter().next())
    }
}
