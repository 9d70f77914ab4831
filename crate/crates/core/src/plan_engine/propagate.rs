use std::collections::{BTreeMap, BTreeSet};

use super::RefinementNode;
use crate::model::{BindingConstraint, Predicate, Substitution, Term};

/// Union-find over terms, used to fold codesignation constraints.
#[derive(Default)]
struct Classes {
    parent: BTreeMap<Term, Term>,
}

impl Classes {
    fn find(&mut self, t: Term) -> Term {
        let mut root = t;
        while let Some(&p) = self.parent.get(&root) {
            root = p;
        }
        let mut cur = t;
        while let Some(&p) = self.parent.get(&cur) {
            self.parent.insert(cur, root);
            cur = p;
        }
        root
    }

    /// Merges two classes, keeping a constant (or else the smaller
    /// variable) as representative. Fails on two distinct constants.
    fn union(&mut self, a: Term, b: Term) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return true;
        }
        let (keep, drop) = match (ra, rb) {
            (Term::Const(_), Term::Const(_)) => return false,
            (Term::Const(_), Term::Var(_)) => (ra, rb),
            (Term::Var(_), Term::Const(_)) => (rb, ra),
            _ => (ra.min(rb), ra.max(rb)),
        };
        self.parent.insert(drop, keep);
        true
    }
}

/// Folds equality constraints into every argument, drops decided
/// constraints and closes the ordering. `None` means the node is
/// inconsistent: a cyclic ordering, two constants forced equal, or a
/// separation between terms that are now identical.
pub fn propagate(node: &RefinementNode) -> Option<RefinementNode> {
    let mut classes = Classes::default();
    for b in node.network.bindings.iter().filter(|b| b.equal) {
        if !classes.union(b.lhs, b.rhs) {
            return None;
        }
    }
    let vars: Vec<Term> = classes.parent.keys().copied().filter(Term::is_var).collect();
    let sigma = Substitution::from_pairs(vars.into_iter().filter_map(|t| {
        let rep = classes.find(t);
        match t {
            Term::Var(v) if rep != t => Some((v, rep)),
            _ => None,
        }
    }));

    let mut out = node.clone();
    out.network.apply_subst(&sigma);
    for l in &mut out.links {
        l.predicate = l.predicate.apply(&sigma);
    }
    for o in &mut out.agenda {
        o.predicate = o.predicate.apply(&sigma);
    }
    for (v, t) in sigma.iter() {
        out.subst.unify_terms(Term::Var(*v), *t);
    }

    let mut seen = BTreeSet::new();
    let mut kept = Vec::new();
    for b in &out.network.bindings {
        if b.equal {
            continue;
        }
        if b.lhs == b.rhs {
            return None;
        }
        if !b.lhs.is_var() && !b.rhs.is_var() {
            continue;
        }
        let (lhs, rhs) = if b.lhs <= b.rhs { (b.lhs, b.rhs) } else { (b.rhs, b.lhs) };
        if seen.insert((lhs, rhs)) {
            kept.push(BindingConstraint::ne(lhs, rhs));
        }
    }
    out.network.bindings = kept;

    out.network.close();
    if out.network.ordering.iter().any(|(a, b)| a == b) {
        return None;
    }
    let mut seen_links = BTreeSet::new();
    out.links.retain(|l| seen_links.insert((l.producer, l.predicate.clone(), l.consumer)));
    Some(out)
}

/// A unifier of two predicates that respects the separation constraints.
pub fn possibly_unify(a: &Predicate, b: &Predicate, separations: &[BindingConstraint]) -> Option<Substitution> {
    let mut s = Substitution::new();
    if !s.unify_predicates(a, b) {
        return None;
    }
    let violated = separations.iter().any(|c| !c.equal && s.resolve(c.lhs) == s.resolve(c.rhs));
    (!violated).then_some(s)
}
