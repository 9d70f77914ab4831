//! Brute-force enumeration of every plan of a state-flavoured problem.
//!
//! Breadth-first over (state, network, steps), trying every frontier task,
//! every method branch and every binding, with no pruning of repeated
//! states. Slow on purpose; it backs the engines' tests.

use std::collections::{BTreeSet, VecDeque};

use crate::model::{
    apply, decompose_state, satisfying_bindings, Fresh, PlanningProblem, Predicate, State, Step, Style, Substitution,
    TaskNetwork, Term, Var,
};
use crate::search::EngineError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub plans: BTreeSet<Vec<Step>>,
    /// Some branch was cut off by the depth bound.
    pub incomplete: bool,
    pub nodes: u64,
}

struct Node {
    state: State,
    network: TaskNetwork,
    steps: Vec<Step>,
    protected: BTreeSet<Predicate>,
    depth: usize,
}

fn groundings(args: &[Term], constants: &[crate::symbol::Symbol]) -> Vec<Substitution> {
    let mut free: Vec<Var> = Vec::new();
    for v in args.iter().filter_map(Term::as_var) {
        if !free.contains(&v) {
            free.push(v);
        }
    }
    let mut out = vec![Substitution::new()];
    for v in free {
        let mut next = Vec::new();
        for s in &out {
            for c in constants {
                let mut e = s.clone();
                e.unify_terms(Term::Var(v), Term::Const(*c));
                next.push(e);
            }
        }
        out = next;
    }
    out
}

/// Every plan reachable in at most `depth_bound` expansions (each
/// decomposition or step counts one). Protections are honoured when
/// `protections` is set.
pub fn oracle_enumerate(
    problem: &PlanningProblem,
    depth_bound: usize,
    protections: bool,
) -> Result<OracleResult, EngineError> {
    let mut fresh = Fresh::after(&problem.def.network);
    let mut network = problem.def.network.clone();
    network.close();
    let mut queue = VecDeque::from([Node {
        state: problem.initial_state.clone(),
        network,
        steps: Vec::new(),
        protected: BTreeSet::new(),
        depth: 0,
    }]);
    let mut result = OracleResult { plans: BTreeSet::new(), incomplete: false, nodes: 0 };
    while let Some(node) = queue.pop_front() {
        result.nodes += 1;
        if node.network.is_empty() {
            result.plans.insert(node.steps);
            continue;
        }
        if node.depth >= depth_bound {
            result.incomplete = true;
            continue;
        }
        let frontier = node.network.minimal_tasks();
        if problem.def.style == Style::Totd && frontier.len() > 1 {
            let names: Vec<String> = frontier.iter().map(|t| t.to_string()).collect();
            return Err(EngineError::OrderingViolation(names.join(", ")));
        }
        for task in frontier {
            if let Some(op) = problem.operator(task.name) {
                let inst = op.instantiate(&task.args)?;
                for sigma in satisfying_bindings(&inst.pre_pos, &inst.pre_neg, &node.state, &Substitution::new()) {
                    let partial = inst.apply_subst(&sigma);
                    for rest in groundings(&partial.args, problem.constants()) {
                        let ground = partial.apply_subst(&rest);
                        let Ok(state) = apply(&ground, &node.state) else { continue };
                        let mut protected = node.protected.clone();
                        if protections {
                            for p in &ground.unprotect {
                                protected.remove(p);
                            }
                            if ground.del.iter().any(|d| protected.contains(d)) {
                                continue;
                            }
                            protected.extend(ground.protect.iter().cloned());
                        }
                        let mut network = node.network.clone();
                        network.remove_task(task.id);
                        network.apply_subst(&sigma);
                        network.apply_subst(&rest);
                        let mut steps = node.steps.clone();
                        steps.push(ground.step().expect("ground by construction"));
                        queue.push_back(Node { state, network, steps, protected, depth: node.depth + 1 });
                    }
                }
            } else {
                for m in problem.methods_for(task.name) {
                    let mut head = Substitution::new();
                    if !head.unify_args(&m.head.params, &task.args) {
                        continue;
                    }
                    for sigma in satisfying_bindings(&m.pre_pos, &m.pre_neg, &node.state, &head) {
                        let Ok(d) = decompose_state(&node.state, &node.network, task.id, m, &sigma, &mut fresh) else {
                            continue;
                        };
                        queue.push_back(Node {
                            state: node.state.clone(),
                            network: d.network,
                            steps: node.steps.clone(),
                            protected: node.protected.clone(),
                            depth: node.depth + 1,
                        });
                    }
                }
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fig1_has_exactly_one_plan() {
        let r = oracle_enumerate(&fixtures::fig1(), 50, true).unwrap();
        assert!(!r.incomplete);
        assert_eq!(r.plans.len(), 1);
        assert_eq!(r.plans.iter().next().unwrap().len(), 6);
    }

    #[test]
    fn delivered_box_needs_nothing() {
        let r = oracle_enumerate(&fixtures::by_name("deliver-here").unwrap(), 5, true).unwrap();
        assert_eq!(r.plans, BTreeSet::from([vec![]]));
    }

    #[test]
    fn two_trucks_two_plans() {
        let r = oracle_enumerate(&fixtures::by_name("fig1-two-trucks").unwrap(), 50, true).unwrap();
        assert_eq!(r.plans.len(), 2);
    }

    #[test]
    fn a_tight_bound_is_reported() {
        let r = oracle_enumerate(&fixtures::fig1(), 3, true).unwrap();
        assert!(r.incomplete && r.plans.is_empty());
    }
}
