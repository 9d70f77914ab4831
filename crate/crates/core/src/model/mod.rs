//! First-order vocabulary, states, operators, task networks and methods.

mod bindings;
mod domain;
mod network;
mod plan;
mod state;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::symbol::Symbol;

pub use bindings::satisfying_bindings;
pub use domain::{
    Budget, Domain, EngineMode, MethodPlan, MethodState, Operator, PlanningProblem, ProblemDef, Style, TaskHead,
};
pub use network::{
    decompose_po, decompose_state, rename_fresh, BindingConstraint, Decomposition, Fresh, StateConstraint, TaskId,
    TaskInstance, TaskNetwork,
};
pub use plan::{DecompositionRecord, Outcome, Plan, SearchResult, SearchStats, Step, Trace};
pub use state::{applicable, apply, executable, OperatorInstance, State};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("{what} is not ground")]
    NonGround { what: String },
    #[error("{action} is not applicable: {reason}")]
    NotApplicable { action: String, reason: String },
    #[error("task {task} cannot be decomposed by a method for {method}")]
    LabelMismatch { task: String, method: String },
    #[error("arguments of {task} do not unify with method head {method}")]
    UnificationFailure { task: String, method: String },
    #[error("method {method} is not applicable: {reason}")]
    MethodNotApplicable { method: String, reason: String },
    #[error("task {0:?} is not in the network")]
    UnknownTask(TaskId),
    #[error("no operator named {0}")]
    UnknownOperator(Symbol),
    #[error("{name} expects {expected} arguments, got {got}")]
    Arity { name: Symbol, expected: usize, got: usize },
}

/// A variable. `generation` 0 is a variable as written in a source file;
/// higher generations are fresh copies made during search.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: Symbol,
    pub generation: u32,
}

impl Var {
    pub fn new(name: impl Into<Symbol>) -> Self {
        Var { name: name.into(), generation: 0 }
    }

    pub fn with_generation(self, generation: u32) -> Self {
        Var { name: self.name, generation }
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.generation == 0 {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}#{}", self.name, self.generation)
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Symbol),
    Var(Var),
}

impl Term {
    /// Builds a term from source text: `?x` is a variable, anything else a constant.
    pub fn parse(text: &str) -> Term {
        if text.starts_with('?') {
            match text.split_once('#').map(|(n, g)| (n, g.parse::<u32>())) {
                Some((name, Ok(g))) => Term::Var(Var::new(name).with_generation(g)),
                _ => Term::Var(Var::new(text)),
            }
        } else {
            Term::Const(Symbol::intern(text))
        }
    }

    pub fn constant(text: &str) -> Term {
        Term::Const(Symbol::intern(text))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_const(&self) -> Option<Symbol> {
        match self {
            Term::Const(c) => Some(*c),
            Term::Var(_) => None,
        }
    }

    pub fn as_var(&self) -> Option<Var> {
        match self {
            Term::Var(v) => Some(*v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Var(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Predicate {
    pub name: Symbol,
    pub args: Vec<Term>,
}

impl Predicate {
    pub fn new(name: impl Into<Symbol>, args: Vec<Term>) -> Self {
        Predicate { name: name.into(), args }
    }

    /// Shorthand for tests and fixtures: `Predicate::parse("truck-at ?t l1")`.
    pub fn parse(text: &str) -> Self {
        let mut parts = text.split_whitespace();
        let name = parts.next().expect("predicate needs a name");
        Predicate::new(name, parts.map(Term::parse).collect())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|a| !a.is_var())
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn apply(&self, subst: &Substitution) -> Predicate {
        Predicate { name: self.name, args: subst.apply_all(&self.args) }
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// Replaces every variable bound in `subst`; unbound variables stay in place.
pub fn ground(p: &Predicate, subst: &Substitution) -> Predicate {
    p.apply(subst)
}

/// Variable bindings. Bindings may chain (`?x -> ?y -> c`); lookups follow
/// the chain, and binding never introduces a cycle.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, Term)>) -> Self {
        let mut s = Substitution::new();
        for (v, t) in pairs {
            s.unify_terms(Term::Var(v), t);
        }
        s
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.bindings.iter()
    }

    pub fn get(&self, v: Var) -> Option<Term> {
        self.bindings.get(&v).copied()
    }

    pub fn contains(&self, v: Var) -> bool {
        self.bindings.contains_key(&v)
    }

    /// Follows the binding chain of `t` to its end.
    pub fn resolve(&self, t: Term) -> Term {
        let mut cur = t;
        // chains are acyclic, but never loop more than the number of bindings
        for _ in 0..=self.bindings.len() {
            match cur {
                Term::Var(v) => match self.bindings.get(&v) {
                    Some(next) => cur = *next,
                    None => return cur,
                },
                Term::Const(_) => return cur,
            }
        }
        cur
    }

    pub fn apply_all(&self, terms: &[Term]) -> Vec<Term> {
        terms.iter().map(|t| self.resolve(*t)).collect()
    }

    /// Unifies two terms under the current bindings, extending them on success.
    /// On failure the substitution is left unchanged.
    pub fn unify_terms(&mut self, a: Term, b: Term) -> bool {
        let a = self.resolve(a);
        let b = self.resolve(b);
        if a == b {
            return true;
        }
        match (a, b) {
            (Term::Var(v), other) | (other, Term::Var(v)) => {
                self.bindings.insert(v, other);
                true
            }
            (Term::Const(_), Term::Const(_)) => false,
        }
    }

    /// Unifies two argument lists position by position. On failure the
    /// substitution is left unchanged.
    pub fn unify_args(&mut self, a: &[Term], b: &[Term]) -> bool {
        if a.len() != b.len() {
            return false;
        }
        let snapshot = self.clone();
        for (x, y) in a.iter().zip(b) {
            if !self.unify_terms(*x, *y) {
                *self = snapshot;
                return false;
            }
        }
        true
    }

    pub fn unify_predicates(&mut self, a: &Predicate, b: &Predicate) -> bool {
        a.name == b.name && self.unify_args(&a.args, &b.args)
    }

    /// Rewrites every value to the end of its chain.
    pub fn normalize(&mut self) {
        let keys: Vec<Var> = self.bindings.keys().copied().collect();
        for k in keys {
            let resolved = self.resolve(Term::Var(k));
            self.bindings.insert(k, resolved);
        }
    }

    pub fn normalized(&self) -> Substitution {
        let mut s = self.clone();
        s.normalize();
        s
    }

    /// Bindings restricted to variables satisfying `keep`, fully resolved.
    pub fn restricted(&self, keep: impl Fn(Var) -> bool) -> Substitution {
        let bindings = self.bindings.keys().filter(|v| keep(**v)).map(|v| (*v, self.resolve(Term::Var(*v)))).collect();
        Substitution { bindings }
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}->{t}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn subst(pairs: &[(&str, &str)]) -> Substitution {
        Substitution::from_pairs(pairs.iter().map(|(v, t)| (Var::new(*v), Term::parse(t))))
    }

    #[test]
    fn ground_replaces_bound_variables() {
        let p = Predicate::parse("box-at ?b ?lf");
        let s = subst(&[("?b", "b1"), ("?lf", "l1")]);
        assert_eq!(ground(&p, &s), Predicate::parse("box-at b1 l1"));
    }

    #[test]
    fn empty_substitution_is_identity() {
        let p = Predicate::parse("box-at b1 l1");
        assert_eq!(ground(&p, &Substitution::new()), p);
    }

    #[test]
    fn partial_grounding_leaves_free_variables() {
        let p = Predicate::parse("on ?x ?y");
        let s = subst(&[("?x", "a")]);
        assert_eq!(ground(&p, &s), Predicate::parse("on a ?y"));
    }

    #[test]
    fn chains_resolve_to_their_end() {
        let s = subst(&[("?x", "?y"), ("?y", "c")]);
        assert_eq!(s.resolve(Term::parse("?x")), Term::parse("c"));
    }

    #[test]
    fn unify_rejects_constant_clash_without_side_effects() {
        let mut s = subst(&[("?x", "a")]);
        let before = s.clone();
        assert!(!s.unify_args(&[Term::parse("?y"), Term::parse("?x")], &[Term::parse("c"), Term::parse("b")]));
        assert_eq!(s, before);
    }

    #[test]
    fn unify_never_creates_cycles() {
        let mut s = Substitution::new();
        assert!(s.unify_terms(Term::parse("?a"), Term::parse("?b")));
        assert!(s.unify_terms(Term::parse("?b"), Term::parse("?a")));
        assert_eq!(s.len(), 1);
        assert_eq!(s.resolve(Term::parse("?a")), s.resolve(Term::parse("?b")));
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        prop_oneof![
            (0..4u8).prop_map(|i| Term::parse(&format!("?v{i}"))),
            (0..3u8).prop_map(|i| Term::parse(&format!("c{i}"))),
        ]
    }

    proptest! {
        #[test]
        fn normalized_substitution_is_idempotent(
            pairs in proptest::collection::vec((arb_term(), arb_term()), 0..8),
            args in proptest::collection::vec(arb_term(), 0..5),
        ) {
            let mut s = Substitution::new();
            for (a, b) in pairs {
                s.unify_terms(a, b);
            }
            s.normalize();
            let p = Predicate::new("p", args);
            let once = p.apply(&s);
            prop_assert_eq!(once.apply(&s), once.clone());
            for (v, t) in s.iter() {
                // normalized values are ends of chains
                prop_assert_eq!(s.resolve(*t), *t);
                prop_assert_ne!(Term::Var(*v), *t);
            }
        }
    }
}
