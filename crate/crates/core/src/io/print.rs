use std::fmt::Write;

use crate::model::{
    BindingConstraint, Domain, EngineMode, MethodState, Operator, Predicate, ProblemDef, StateConstraint, TaskId,
    TaskNetwork,
};

fn label(id: TaskId) -> String {
    format!("t{}", id.0 + 1)
}

fn preds(ps: &[Predicate]) -> String {
    ps.iter().map(|p| format!(" {p}")).collect()
}

fn literals(pos: &[Predicate], neg: &[Predicate]) -> String {
    let mut s = preds(pos);
    for p in neg {
        let _ = write!(s, " (not {p})");
    }
    s
}

fn binding(b: &BindingConstraint) -> String {
    if b.equal {
        format!("(= {} {})", b.lhs, b.rhs)
    } else {
        format!("(not (= {} {}))", b.lhs, b.rhs)
    }
}

fn network(out: &mut String, tn: &TaskNetwork, indent: &str) {
    let _ = write!(out, "{indent}(:tasks");
    for t in &tn.tasks {
        let _ = write!(out, "\n{indent}  ({} {t})", label(t.id));
    }
    out.push(')');
    if !tn.ordering.is_empty() {
        let _ = write!(out, "\n{indent}(:order");
        for (a, b) in &tn.ordering {
            let _ = write!(out, " ({} {})", label(*a), label(*b));
        }
        out.push(')');
    }
    for c in &tn.state_constraints {
        let _ = match c {
            StateConstraint::Before(p, t) => write!(out, "\n{indent}(:before {p} {})", label(*t)),
            StateConstraint::After(t, p) => write!(out, "\n{indent}(:after {} {p})", label(*t)),
            StateConstraint::Between(t, p, u) => write!(out, "\n{indent}(:between {} {p} {})", label(*t), label(*u)),
        };
    }
    if !tn.bindings.is_empty() {
        let _ = write!(out, "\n{indent}(:bind");
        for b in &tn.bindings {
            let _ = write!(out, " {}", binding(b));
        }
        out.push(')');
    }
}

fn operator(out: &mut String, o: &Operator) {
    let _ = write!(out, "\n  (:operator {}", o.head());
    let _ = write!(out, "\n    (:pre{})", literals(&o.pre_pos, &o.pre_neg));
    let _ = write!(out, "\n    (:del{})", preds(&o.del));
    let _ = write!(out, "\n    (:add{})", preds(&o.add));
    if !o.protect.is_empty() {
        let _ = write!(out, "\n    (:protect{})", preds(&o.protect));
    }
    if !o.unprotect.is_empty() {
        let _ = write!(out, "\n    (:unprotect{})", preds(&o.unprotect));
    }
    if !o.resources.is_empty() {
        let vs: String = o.resources.iter().map(|v| format!(" {v}")).collect();
        let _ = write!(out, "\n    (:resource{vs})");
    }
    out.push(')');
}

fn branch(out: &mut String, m: &MethodState) {
    let _ = write!(out, "\n    (:branch {}", m.rank);
    if !m.pre_pos.is_empty() || !m.pre_neg.is_empty() {
        let _ = write!(out, "\n      (:pre{})", literals(&m.pre_pos, &m.pre_neg));
    }
    out.push_str("\n      (:network\n");
    network(out, &m.network, "        ");
    out.push_str("))");
}

/// Canonical text of a domain. Consecutive branches with the same head are
/// printed as one `:method` form.
pub fn print_domain(d: &Domain) -> String {
    let mut out = format!("(define (domain {})", d.name);
    if !d.predicates.is_empty() {
        out.push_str("\n  (:predicates");
        for (name, arity) in &d.predicates {
            let params: String = (1..=*arity).map(|i| format!(" ?a{i}")).collect();
            let _ = write!(out, "\n    ({name}{params})");
        }
        out.push(')');
    }
    for o in &d.operators {
        operator(&mut out, o);
    }
    let mut i = 0;
    while i < d.methods.len() {
        let head = &d.methods[i].head;
        let _ = write!(out, "\n  (:method {head}");
        while i < d.methods.len() && d.methods[i].head == *head {
            branch(&mut out, &d.methods[i]);
            i += 1;
        }
        out.push(')');
    }
    out.push_str(")\n");
    out
}

pub fn print_problem(p: &ProblemDef) -> String {
    let mut out = format!("(define (problem {})\n  (:domain {})\n  (:init", p.name, p.domain);
    for f in &p.init {
        let _ = write!(out, "\n    {f}");
    }
    out.push_str(")\n  (:network\n");
    network(&mut out, &p.network, "    ");
    out.push(')');
    let engine = match p.engine {
        EngineMode::State => "state",
        EngineMode::Plan => "plan",
    };
    let _ = write!(out, "\n  (:engine {engine})\n  (:style {})\n  (:budget {}))\n", p.style, p.budget);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{parse_domain, parse_problem};

    const DOMAIN: &str = "(define (domain d)
  (:predicates (p ?x) (q ?x ?y))
  (:operator (!a ?x) (:pre (p ?x) (not (q ?x ?x))) (:del (p ?x)) (:add (q ?x ?x)) (:resource ?x))
  (:method (m ?x)
    (:branch 1 (:pre (p ?x)) (:network (:tasks (s1 (!a ?x)) (s2 (!a ?y)) (s3 (m c)))
        (:order (s1 s2 s3)) (:before (p ?x) s2) (:after s1 (q ?x ?x)) (:between s1 (p c) s3)
        (:bind (= ?x ?y) (not (= ?y c)))))
    (:branch 2 (:network (:tasks)))))";

    #[test]
    fn domain_round_trips_and_is_byte_stable() {
        let d = parse_domain(DOMAIN, "d.htd").unwrap();
        let text = print_domain(&d);
        let again = parse_domain(&text, "printed.htd").unwrap();
        assert_eq!(again, d);
        assert_eq!(print_domain(&again), text);
    }

    #[test]
    fn empty_domain_prints_the_same_every_time() {
        let d = parse_domain("(define (domain e))", "e.htd").unwrap();
        assert_eq!(print_domain(&d), "(define (domain e))\n");
        assert_eq!(parse_domain(&print_domain(&d), "e.htd").unwrap(), d);
    }

    #[test]
    fn problem_round_trips() {
        let d = parse_domain(DOMAIN, "d.htd").unwrap();
        let text = "(define (problem p) (:domain d) (:init (p a) (q a b))
            (:network (:tasks (x (m a)) (y (!a ?z))) (:order (x y))) (:engine plan) (:style potd) (:budget 7))";
        let p = parse_problem(text, "p.htp", &d).unwrap();
        let again = parse_problem(&print_problem(&p), "printed.htp", &d).unwrap();
        assert_eq!(again, p);
    }
}
