use super::{possibly_before, possibly_unify, CausalLink, Obligation, PlanEngine, RefinementNode};
use crate::model::{BindingConstraint, Substitution, TaskId, Term};
use crate::symbol::Symbol;

fn bind(child: &mut RefinementNode, unifier: &Substitution) {
    for (v, t) in unifier.iter() {
        child.network.bindings.push(BindingConstraint::eq(Term::Var(*v), *t));
    }
}

impl PlanEngine<'_> {
    fn compound_may(&self, node: &RefinementNode, before: TaskId, table_add: bool, name: Symbol) -> bool {
        let table = if table_add { &self.may_add } else { &self.may_del };
        node.network.tasks.iter().any(|c| {
            !self.is_primitive(c.name)
                && possibly_before(&node.network, c.id, before)
                && table.get(&c.name).is_some_and(|s| s.contains(&name))
        })
    }

    /// Closes obligations the initial state settles for good and prunes
    /// nodes holding an obligation nothing could ever establish.
    pub(super) fn simplify(&self, node: &RefinementNode) -> Option<RefinementNode> {
        let seps: Vec<BindingConstraint> = node.network.bindings.iter().filter(|b| !b.equal).copied().collect();
        let s0 = self.initial_state();
        let mut out = node.clone();
        let mut agenda = Vec::with_capacity(node.agenda.len());
        for ob in &node.agenda {
            let t = ob.consumer;
            let p = &ob.predicate;
            let tn = &node.network;
            let primitive_deleter = tn.tasks.iter().any(|u| {
                possibly_before(tn, u.id, t)
                    && self
                        .operator(u.name)
                        .and_then(|op| op.instantiate(&u.args).ok())
                        .is_some_and(|i| i.del.iter().any(|d| possibly_unify(d, p, &seps).is_some()))
            });
            if p.is_ground() && s0.contains(p) && !primitive_deleter && !self.compound_may(node, t, false, p.name) {
                out.links.push(CausalLink { producer: None, predicate: p.clone(), consumer: t });
                continue;
            }
            let from_init = s0.iter().any(|f| possibly_unify(p, f, &seps).is_some());
            let from_task = tn.tasks.iter().any(|u| {
                possibly_before(tn, u.id, t)
                    && self
                        .operator(u.name)
                        .and_then(|op| op.instantiate(&u.args).ok())
                        .is_some_and(|i| i.add.iter().any(|a| possibly_unify(a, p, &seps).is_some()))
            });
            if !from_init && !from_task && !self.compound_may(node, t, true, p.name) {
                return None;
            }
            agenda.push(ob.clone());
        }
        out.agenda = agenda;
        Some(out)
    }

    /// Index of the first obligation no compound task could still produce.
    pub(super) fn ready_obligation(&self, node: &RefinementNode) -> Option<usize> {
        node.agenda.iter().position(|ob| !self.compound_may(node, ob.consumer, true, ob.predicate.name))
    }

    /// One child per way of supporting the obligation: initial facts in
    /// state order, then producing tasks by id.
    pub fn establish(&self, node: &RefinementNode, index: usize) -> Vec<RefinementNode> {
        let seps: Vec<BindingConstraint> = node.network.bindings.iter().filter(|b| !b.equal).copied().collect();
        let Obligation { predicate, consumer } = node.agenda[index].clone();
        let mut base = node.clone();
        base.agenda.remove(index);
        let mut children = Vec::new();
        for f in self.initial_state().iter() {
            if let Some(u) = possibly_unify(&predicate, f, &seps) {
                let mut child = base.clone();
                bind(&mut child, &u);
                child.links.push(CausalLink { producer: None, predicate: predicate.clone(), consumer });
                children.push(child);
            }
        }
        for t in &node.network.tasks {
            if !possibly_before(&node.network, t.id, consumer) {
                continue;
            }
            let Some(inst) = self.operator(t.name).and_then(|op| op.instantiate(&t.args).ok()) else { continue };
            for a in &inst.add {
                if let Some(u) = possibly_unify(a, &predicate, &seps) {
                    let mut child = base.clone();
                    if !child.network.add_ordering(t.id, consumer) {
                        continue;
                    }
                    bind(&mut child, &u);
                    child.links.push(CausalLink { producer: Some(t.id), predicate: predicate.clone(), consumer });
                    children.push(child);
                }
            }
        }
        children
    }
}
