use std::fmt;

use indexmap::IndexSet;

use super::{ModelError, Predicate, Step, Substitution, Term};
use crate::symbol::Symbol;

/// A closed-world state: exactly the listed ground facts are true.
///
/// Facts keep insertion order (initial facts first, then added effects in
/// the order they were applied) so that binding enumeration is reproducible.
/// Equality is set equality.
#[derive(Clone, Default)]
pub struct State {
    facts: IndexSet<Predicate>,
}

impl State {
    pub fn new(facts: impl IntoIterator<Item = Predicate>) -> Result<State, ModelError> {
        let mut s = State::default();
        for f in facts {
            s.insert(f)?;
        }
        Ok(s)
    }

    pub fn insert(&mut self, fact: Predicate) -> Result<bool, ModelError> {
        if !fact.is_ground() {
            return Err(ModelError::NonGround { what: fact.to_string() });
        }
        Ok(self.facts.insert(fact))
    }

    pub fn contains(&self, fact: &Predicate) -> bool {
        self.facts.contains(fact)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Predicate> {
        self.facts.iter()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    fn remove(&mut self, fact: &Predicate) {
        self.facts.shift_remove(fact);
    }
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.facts.len() == other.facts.len() && self.facts.iter().all(|f| other.facts.contains(f))
    }
}

impl Eq for State {}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.facts.iter()).finish()
    }
}

/// An operator with its parameters replaced by the arguments of a task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorInstance {
    pub name: Symbol,
    pub args: Vec<Term>,
    pub pre_pos: Vec<Predicate>,
    pub pre_neg: Vec<Predicate>,
    pub add: Vec<Predicate>,
    pub del: Vec<Predicate>,
    pub protect: Vec<Predicate>,
    pub unprotect: Vec<Predicate>,
}

impl OperatorInstance {
    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|a| !a.is_var())
            && [&self.pre_pos, &self.pre_neg, &self.add, &self.del].iter().all(|ps| ps.iter().all(Predicate::is_ground))
    }

    pub fn apply_subst(&self, s: &Substitution) -> OperatorInstance {
        let map = |ps: &Vec<Predicate>| ps.iter().map(|p| p.apply(s)).collect();
        OperatorInstance {
            name: self.name,
            args: s.apply_all(&self.args),
            pre_pos: map(&self.pre_pos),
            pre_neg: map(&self.pre_neg),
            add: map(&self.add),
            del: map(&self.del),
            protect: map(&self.protect),
            unprotect: map(&self.unprotect),
        }
    }

    /// The ground step this instance denotes, if it is ground.
    pub fn step(&self) -> Option<Step> {
        let args = self.args.iter().map(Term::as_const).collect::<Option<Vec<_>>>()?;
        Some(Step { name: self.name, args })
    }

    fn label(&self) -> String {
        let mut s = format!("({}", self.name);
        for a in &self.args {
            s.push(' ');
            s.push_str(&a.to_string());
        }
        s.push(')');
        s
    }
}

/// `pre+ ⊆ s` and `pre- ∩ s = ∅`.
pub fn applicable(o: &OperatorInstance, s: &State) -> Result<bool, ModelError> {
    if !o.is_ground() {
        return Err(ModelError::NonGround { what: o.label() });
    }
    Ok(o.pre_pos.iter().all(|p| s.contains(p)) && !o.pre_neg.iter().any(|p| s.contains(p)))
}

/// `(s \ del) ∪ add`. The input state is not modified.
pub fn apply(o: &OperatorInstance, s: &State) -> Result<State, ModelError> {
    if !applicable(o, s)? {
        let reason = if let Some(p) = o.pre_pos.iter().find(|p| !s.contains(p)) {
            format!("precondition {p} absent")
        } else if let Some(p) = o.pre_neg.iter().find(|p| s.contains(p)) {
            format!("negative precondition {p} present")
        } else {
            "preconditions do not hold".to_owned()
        };
        return Err(ModelError::NotApplicable { action: o.label(), reason });
    }
    let mut next = s.clone();
    for d in &o.del {
        next.remove(d);
    }
    for a in &o.add {
        // ground by the check above
        next.facts.insert(a.clone());
    }
    Ok(next)
}

/// Replays `seq` from `s`. On success returns every intermediate state
/// (`seq.len() + 1` of them); on failure the index of the first step that is
/// not applicable (or not ground).
pub fn executable(seq: &[OperatorInstance], s: &State) -> Result<Vec<State>, usize> {
    let mut states = Vec::with_capacity(seq.len() + 1);
    states.push(s.clone());
    for (i, o) in seq.iter().enumerate() {
        let cur = states.last().expect("non-empty");
        match apply(o, cur) {
            Ok(next) => states.push(next),
            Err(_) => return Err(i),
        }
    }
    Ok(states)
}
