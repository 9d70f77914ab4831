use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ModelError, OperatorInstance, Predicate, State, Substitution, TaskNetwork, Term, Var};
use crate::symbol::Symbol;

/// Name and parameter list of an operator or method, e.g. `(deliver ?b ?lf ?lt)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskHead {
    pub name: Symbol,
    pub params: Vec<Term>,
}

impl fmt::Display for TaskHead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for p in &self.params {
            write!(f, " {p}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operator {
    pub name: Symbol,
    pub params: Vec<Var>,
    pub pre_pos: Vec<Predicate>,
    pub pre_neg: Vec<Predicate>,
    pub add: Vec<Predicate>,
    pub del: Vec<Predicate>,
    /// Facts this operator asks to keep true until cancelled.
    pub protect: Vec<Predicate>,
    /// Protections this operator cancels.
    pub unprotect: Vec<Predicate>,
    /// Parameters naming objects used as resources.
    pub resources: Vec<Var>,
}

impl Operator {
    pub fn new(name: impl Into<Symbol>, params: &[&str]) -> Self {
        Operator {
            name: name.into(),
            params: params.iter().map(|p| Var::new(*p)).collect(),
            pre_pos: vec![],
            pre_neg: vec![],
            add: vec![],
            del: vec![],
            protect: vec![],
            unprotect: vec![],
            resources: vec![],
        }
    }

    pub fn head(&self) -> TaskHead {
        TaskHead { name: self.name, params: self.params.iter().map(|v| Term::Var(*v)).collect() }
    }

    pub fn instantiate(&self, args: &[Term]) -> Result<OperatorInstance, ModelError> {
        if args.len() != self.params.len() {
            return Err(ModelError::Arity { name: self.name, expected: self.params.len(), got: args.len() });
        }
        let mut sigma = Substitution::new();
        for (v, a) in self.params.iter().zip(args) {
            if !sigma.unify_terms(Term::Var(*v), *a) {
                return Err(ModelError::UnificationFailure {
                    task: format!("{}", self.name),
                    method: self.head().to_string(),
                });
            }
        }
        let map = |ps: &Vec<Predicate>| ps.iter().map(|p| p.apply(&sigma)).collect();
        Ok(OperatorInstance {
            name: self.name,
            args: sigma.apply_all(args),
            pre_pos: map(&self.pre_pos),
            pre_neg: map(&self.pre_neg),
            add: map(&self.add),
            del: map(&self.del),
            protect: map(&self.protect),
            unprotect: map(&self.unprotect),
        })
    }

    pub fn resource_args(&self, args: &[Term]) -> Vec<Term> {
        self.resources.iter().filter_map(|r| self.params.iter().position(|p| p == r).map(|i| args[i])).collect()
    }
}

/// A state-based method branch: `(c(m), pre(m), tn(m))` plus its position in
/// the if-then-else ladder of its head.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodState {
    pub head: TaskHead,
    pub rank: u32,
    pub pre_pos: Vec<Predicate>,
    pub pre_neg: Vec<Predicate>,
    pub network: TaskNetwork,
}

impl MethodState {
    pub fn id(&self) -> String {
        format!("{}/{}", self.head.name, self.rank)
    }

    /// Every variable occurring in the head, preconditions or network.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut vs: BTreeSet<Var> = self.head.params.iter().filter_map(Term::as_var).collect();
        for p in self.pre_pos.iter().chain(&self.pre_neg) {
            vs.extend(p.vars());
        }
        vs.extend(self.network.vars());
        vs
    }

    pub fn is_plan_flavoured(&self) -> bool {
        self.pre_pos.is_empty() && self.pre_neg.is_empty()
    }
}

/// A plan-based method `(c(m), tn(m))`. Filter literals only mention
/// predicates no operator changes, so they are decided against the initial
/// state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodPlan {
    pub head: TaskHead,
    pub rank: u32,
    pub network: TaskNetwork,
    pub filter_pos: Vec<Predicate>,
    pub filter_neg: Vec<Predicate>,
}

impl MethodPlan {
    pub fn id(&self) -> String {
        format!("{}/{}", self.head.name, self.rank)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EngineMode {
    #[default]
    State,
    Plan,
}

/// Decomposition style: totally ordered, unordered or partially ordered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    #[default]
    Totd,
    Utd,
    Potd,
}

impl fmt::Display for EngineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineMode::State => "state",
            EngineMode::Plan => "plan",
        })
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Style::Totd => "totd",
            Style::Utd => "utd",
            Style::Potd => "potd",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_decompositions: u64,
    pub max_network_size: usize,
}

impl Budget {
    pub const DEFAULT_DECOMPOSITIONS: u64 = 100_000;

    pub fn new(max_decompositions: u64) -> Self {
        Budget { max_decompositions: max_decompositions.max(1), ..Budget::default() }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_decompositions: Self::DEFAULT_DECOMPOSITIONS, max_network_size: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Domain {
    pub name: Symbol,
    /// Declared predicate symbols with their arity, in declaration order.
    pub predicates: Vec<(Symbol, usize)>,
    pub operators: Vec<Operator>,
    pub methods: Vec<MethodState>,
}

impl Domain {
    pub fn operator(&self, name: Symbol) -> Option<&Operator> {
        self.operators.iter().find(|o| o.name == name)
    }

    /// Branches for `name`, ordered by rank.
    pub fn methods_for(&self, name: Symbol) -> Vec<&MethodState> {
        let mut ms: Vec<&MethodState> = self.methods.iter().filter(|m| m.head.name == name).collect();
        ms.sort_by_key(|m| m.rank);
        ms
    }

    pub fn primitive_names(&self) -> BTreeSet<Symbol> {
        self.operators.iter().map(|o| o.name).collect()
    }

    pub fn compound_names(&self) -> BTreeSet<Symbol> {
        self.methods.iter().map(|m| m.head.name).collect()
    }

    pub fn arity(&self, predicate: Symbol) -> Option<usize> {
        self.predicates.iter().find(|(n, _)| *n == predicate).map(|(_, a)| *a)
    }

    /// True when no operator adds or deletes facts of this predicate.
    pub fn is_static(&self, predicate: Symbol) -> bool {
        !self.operators.iter().any(|o| o.add.iter().chain(&o.del).any(|p| p.name == predicate))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemDef {
    pub name: Symbol,
    pub domain: Symbol,
    pub init: Vec<Predicate>,
    pub network: TaskNetwork,
    pub engine: EngineMode,
    pub style: Style,
    pub budget: u64,
}

impl Default for ProblemDef {
    fn default() -> Self {
        ProblemDef {
            name: Symbol::default(),
            domain: Symbol::default(),
            init: vec![],
            network: TaskNetwork::default(),
            engine: EngineMode::State,
            style: Style::Totd,
            budget: Budget::DEFAULT_DECOMPOSITIONS,
        }
    }
}

/// The tuple `(Q, T_p, T_c, O, M, tn_0, s_0)` with engine configuration.
#[derive(Clone, Debug)]
pub struct PlanningProblem {
    pub domain: Domain,
    pub def: ProblemDef,
    pub initial_state: State,
    operator_index: HashMap<Symbol, usize>,
    method_index: HashMap<Symbol, Vec<usize>>,
    constants: Vec<Symbol>,
}

impl PlanningProblem {
    pub fn new(domain: Domain, def: ProblemDef) -> Result<Self, ModelError> {
        let initial_state = State::new(def.init.iter().cloned())?;
        let operator_index = domain.operators.iter().enumerate().map(|(i, o)| (o.name, i)).collect();
        let mut method_index: HashMap<Symbol, Vec<usize>> = HashMap::new();
        for (i, m) in domain.methods.iter().enumerate() {
            method_index.entry(m.head.name).or_default().push(i);
        }
        for list in method_index.values_mut() {
            list.sort_by_key(|&i| domain.methods[i].rank);
        }
        for t in &def.network.tasks {
            let known = if t.name.is_primitive_name() {
                domain.operator(t.name).is_some()
            } else {
                method_index.contains_key(&t.name)
            };
            if !known {
                return Err(ModelError::LabelMismatch { task: t.to_string(), method: "<none>".into() });
            }
        }
        let mut constants = Vec::new();
        let mut seen = BTreeSet::new();
        let mut note = |t: &Term| {
            if let Term::Const(c) = t {
                if seen.insert(*c) {
                    constants.push(*c);
                }
            }
        };
        for f in &def.init {
            f.args.iter().for_each(&mut note);
        }
        for t in &def.network.tasks {
            t.args.iter().for_each(&mut note);
        }
        for o in &domain.operators {
            for p in o.pre_pos.iter().chain(&o.pre_neg).chain(&o.add).chain(&o.del) {
                p.args.iter().for_each(&mut note);
            }
        }
        for m in &domain.methods {
            m.head.params.iter().for_each(&mut note);
            for p in m.pre_pos.iter().chain(&m.pre_neg) {
                p.args.iter().for_each(&mut note);
            }
            for t in &m.network.tasks {
                t.args.iter().for_each(&mut note);
            }
        }
        Ok(PlanningProblem { domain, def, initial_state, operator_index, method_index, constants })
    }

    pub fn operator(&self, name: Symbol) -> Option<&Operator> {
        self.operator_index.get(&name).map(|&i| &self.domain.operators[i])
    }

    pub fn methods_for(&self, name: Symbol) -> impl Iterator<Item = &MethodState> {
        self.method_index.get(&name).into_iter().flat_map(move |ids| ids.iter().map(move |&i| &self.domain.methods[i]))
    }

    pub fn is_primitive(&self, name: Symbol) -> bool {
        self.operator_index.contains_key(&name)
    }

    pub fn is_compound(&self, name: Symbol) -> bool {
        self.method_index.contains_key(&name)
    }

    /// All constants of the problem in first-occurrence order; used to
    /// ground variables that no precondition constrains.
    pub fn constants(&self) -> &[Symbol] {
        &self.constants
    }

    pub fn budget(&self) -> Budget {
        Budget::new(self.def.budget)
    }

    pub fn with_initial_facts(&self, facts: Vec<Predicate>) -> Result<Self, ModelError> {
        let mut def = self.def.clone();
        def.init = facts;
        PlanningProblem::new(self.domain.clone(), def)
    }
}
