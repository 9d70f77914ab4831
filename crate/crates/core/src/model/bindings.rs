use super::{Predicate, State, Substitution};

/// Every extension of `base` that grounds the variables of `pre_pos` so that
/// the ground positive literals are in `s` and no negative literal is.
///
/// Results are ordered lexicographically by (literal position in `pre_pos`,
/// fact position in `s`). A negative literal that is still non-ground after
/// matching is read as "no fact unifies with it".
pub fn satisfying_bindings(
    pre_pos: &[Predicate],
    pre_neg: &[Predicate],
    s: &State,
    base: &Substitution,
) -> Vec<Substitution> {
    let mut out = Vec::new();
    extend(pre_pos, pre_neg, s, base.clone(), &mut out);
    out
}

fn extend(pos: &[Predicate], neg: &[Predicate], s: &State, sigma: Substitution, out: &mut Vec<Substitution>) {
    let Some((first, rest)) = pos.split_first() else {
        if negatives_hold(neg, s, &sigma) {
            out.push(sigma);
        }
        return;
    };
    let lit = first.apply(&sigma);
    if lit.is_ground() {
        if s.contains(&lit) {
            extend(rest, neg, s, sigma, out);
        }
        return;
    }
    for fact in s.iter() {
        if fact.name != lit.name || fact.args.len() != lit.args.len() {
            continue;
        }
        let mut next = sigma.clone();
        if next.unify_args(&lit.args, &fact.args) {
            extend(rest, neg, s, next, out);
        }
    }
}

fn negatives_hold(neg: &[Predicate], s: &State, sigma: &Substitution) -> bool {
    neg.iter().all(|n| {
        let lit = n.apply(sigma);
        if lit.is_ground() {
            !s.contains(&lit)
        } else {
            !s.iter().any(|f| Substitution::new().unify_predicates(&lit, f))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Term, Var};

    fn p(text: &str) -> Predicate {
        Predicate::parse(text)
    }

    fn state(facts: &[&str]) -> State {
        State::new(facts.iter().map(|f| p(f))).unwrap()
    }

    fn value(s: &Substitution, v: &str) -> Term {
        s.resolve(Term::Var(Var::new(v)))
    }

    /// Independent enumeration: every assignment of state constants to the
    /// variables, filtered by direct membership tests.
    fn brute_force(pre: &[Predicate], neg: &[Predicate], s: &State, vars: &[&str]) -> Vec<Vec<Term>> {
        let mut consts: Vec<Term> = Vec::new();
        for f in s.iter() {
            for a in &f.args {
                if !consts.contains(a) {
                    consts.push(*a);
                }
            }
        }
        let mut out = Vec::new();
        let n = vars.len();
        let total = consts.len().pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let mut sigma = Substitution::new();
            let mut vals = Vec::new();
            for v in vars {
                let t = consts[c % consts.len()];
                c /= consts.len();
                sigma.unify_terms(Term::Var(Var::new(*v)), t);
                vals.push(t);
            }
            if pre.iter().all(|q| s.contains(&q.apply(&sigma))) && neg.iter().all(|q| !s.contains(&q.apply(&sigma))) {
                out.push(vals);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn two_boxes_give_two_bindings_in_fact_order() {
        let s = state(&["box-at b1 l1", "box-at b2 l1"]);
        let out = satisfying_bindings(&[p("box-at ?b l1")], &[], &s, &Substitution::new());
        assert_eq!(out.len(), 2);
        assert_eq!(value(&out[0], "?b"), Term::parse("b1"));
        assert_eq!(value(&out[1], "?b"), Term::parse("b2"));
        assert_eq!(brute_force(&[p("box-at ?b l1")], &[], &s, &["?b"]).len(), 2);
    }

    #[test]
    fn empty_conditions_yield_exactly_the_empty_substitution() {
        let out = satisfying_bindings(&[], &[], &state(&["a x"]), &Substitution::new());
        assert_eq!(out, vec![Substitution::new()]);
    }

    #[test]
    fn no_matching_fact_yields_nothing() {
        let s = state(&["truck-at t1 l1", "truck-at t2 l2"]);
        assert!(satisfying_bindings(&[p("truck-at ?t l9")], &[], &s, &Substitution::new()).is_empty());
    }

    #[test]
    fn agrees_with_brute_force_on_joins_and_negation() {
        let s = state(&[
            "adjacent l1 l2",
            "adjacent l2 l3",
            "adjacent l1 l3",
            "truck-at t1 l1",
            "truck-at t2 l2",
            "blocked l3",
        ]);
        let pre = [p("truck-at ?t ?a"), p("adjacent ?a ?b")];
        let neg = [p("blocked ?b")];
        let got = satisfying_bindings(&pre, &neg, &s, &Substitution::new());
        let mut rows: Vec<Vec<Term>> =
            got.iter().map(|g| vec![value(g, "?t"), value(g, "?a"), value(g, "?b")]).collect();
        let in_order = rows.clone();
        rows.sort();
        assert_eq!(rows, brute_force(&pre, &neg, &s, &["?t", "?a", "?b"]));
        // first literal's fact order dominates
        assert_eq!(in_order[0][0], Term::parse("t1"));
    }

    #[test]
    fn base_bindings_restrict_the_search() {
        let s = state(&["truck-at t1 l1", "truck-at t2 l1"]);
        let base = Substitution::from_pairs([(Var::new("?t"), Term::parse("t2"))]);
        let out = satisfying_bindings(&[p("truck-at ?t ?l")], &[], &s, &base);
        assert_eq!(out.len(), 1);
        assert_eq!(value(&out[0], "?l"), Term::parse("l1"));
    }
}
