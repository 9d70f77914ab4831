use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::model::{Domain, TaskNetwork, Term};
use crate::symbol::Symbol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompoundSetting {
    PrimitiveOnly,
    Acyclic,
    Regular,
    Recursive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderingSetting {
    TotallyOrdered,
    PartiallyOrdered,
}

/// Structural settings of a domain, computed from its syntax alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DomainClass {
    pub compound_setting: CompoundSetting,
    /// Some compound task can reach itself in the method-call graph. A
    /// regular domain may also be recursive.
    pub recursive: bool,
    pub ordering_setting: OrderingSetting,
    pub variables: bool,
}

impl fmt::Display for DomainClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let compound = match self.compound_setting {
            CompoundSetting::PrimitiveOnly => "primitive-only",
            CompoundSetting::Acyclic => "acyclic",
            CompoundSetting::Regular => "regular",
            CompoundSetting::Recursive => "recursive",
        };
        let ordering = match self.ordering_setting {
            OrderingSetting::TotallyOrdered => "totally-ordered",
            OrderingSetting::PartiallyOrdered => "partially-ordered",
        };
        let recursion = if self.recursive { "recursive" } else { "non-recursive" };
        let vars = if self.variables { "with variables" } else { "without variables" };
        write!(f, "{compound}, {recursion}, {ordering}, {vars}")
    }
}

fn has_cycle(graph: &BTreeMap<Symbol, BTreeSet<Symbol>>) -> bool {
    // 0 = unvisited, 1 = on the current path, 2 = done
    fn visit(n: Symbol, g: &BTreeMap<Symbol, BTreeSet<Symbol>>, mark: &mut BTreeMap<Symbol, u8>) -> bool {
        match mark.get(&n) {
            Some(1) => return true,
            Some(2) => return false,
            _ => {}
        }
        mark.insert(n, 1);
        for m in g.get(&n).into_iter().flatten() {
            if visit(*m, g, mark) {
                return true;
            }
        }
        mark.insert(n, 2);
        false
    }
    let mut mark = BTreeMap::new();
    graph.keys().any(|n| visit(*n, graph, &mut mark))
}

fn is_regular(tn: &TaskNetwork, compound: &BTreeSet<Symbol>) -> bool {
    let calls: Vec<_> = tn.tasks.iter().filter(|t| compound.contains(&t.name)).collect();
    match calls.as_slice() {
        [] => true,
        [c] => {
            let closure = tn.closure();
            !tn.tasks.iter().any(|t| closure.contains(&(c.id, t.id)))
        }
        _ => false,
    }
}

pub fn classify_domain(d: &Domain) -> DomainClass {
    let compound: BTreeSet<Symbol> = d.compound_names();
    let mut graph: BTreeMap<Symbol, BTreeSet<Symbol>> = BTreeMap::new();
    for m in &d.methods {
        let calls = graph.entry(m.head.name).or_default();
        calls.extend(m.network.tasks.iter().map(|t| t.name).filter(|n| compound.contains(n)));
    }
    let recursive = has_cycle(&graph);
    let compound_setting = if compound.is_empty() {
        CompoundSetting::PrimitiveOnly
    } else if !recursive {
        CompoundSetting::Acyclic
    } else if d.methods.iter().all(|m| is_regular(&m.network, &compound)) {
        CompoundSetting::Regular
    } else {
        CompoundSetting::Recursive
    };
    let ordering_setting = if d.methods.iter().all(|m| m.network.is_totally_ordered()) {
        OrderingSetting::TotallyOrdered
    } else {
        OrderingSetting::PartiallyOrdered
    };
    let variables = d.operators.iter().any(|o| !o.params.is_empty())
        || d.methods.iter().any(|m| {
            m.head.params.iter().any(Term::is_var)
                || !m.network.vars().is_empty()
                || m.pre_pos.iter().chain(&m.pre_neg).any(|p| !p.is_ground())
        });
    DomainClass { compound_setting, recursive, ordering_setting, variables }
}
