use std::collections::{BTreeSet, HashMap};

use super::sexp::{read_all, Sexp};
use super::{ErrorKind, ParseError, ParseErrors, SourceSpan};
use crate::model::{
    BindingConstraint, Domain, EngineMode, MethodState, Operator, PlanningProblem, Predicate, ProblemDef,
    StateConstraint, Style, TaskHead, TaskId, TaskInstance, TaskNetwork, Term, Var,
};
use crate::symbol::Symbol;

type Res<T> = Result<T, ParseError>;

fn err<T>(kind: ErrorKind, span: &SourceSpan, message: impl Into<String>) -> Res<T> {
    Err(ParseError::new(kind, span.clone(), message))
}

fn list<'a>(x: &'a Sexp, what: &str) -> Res<&'a [Sexp]> {
    x.list().map_or_else(|| err(ErrorKind::Syntax, x.span(), format!("expected {what}, found `{x}`")), Ok)
}

fn atom<'a>(x: &'a Sexp, what: &str) -> Res<&'a str> {
    x.atom().map_or_else(|| err(ErrorKind::Syntax, x.span(), format!("expected {what}, found `{x}`")), Ok)
}

/// A list that starts with `keyword`; returns the remaining items.
fn keyword_list<'a>(x: &'a Sexp, keyword: &str) -> Res<&'a [Sexp]> {
    let items = list(x, &format!("({keyword} ...)"))?;
    match items.first().and_then(Sexp::atom) {
        Some(k) if k == keyword => Ok(&items[1..]),
        _ => err(ErrorKind::Syntax, x.span(), format!("expected ({keyword} ...)")),
    }
}

fn is_var(text: &str) -> bool {
    text.starts_with('?')
}

fn name_atom<'a>(x: &'a Sexp, what: &str) -> Res<&'a str> {
    let a = atom(x, what)?;
    if is_var(a) || a.starts_with(':') {
        return err(ErrorKind::Syntax, x.span(), format!("expected {what}, found `{a}`"));
    }
    Ok(a)
}

fn term(x: &Sexp) -> Res<Term> {
    let a = atom(x, "a term")?;
    if a.starts_with(':') || a == "?" {
        return err(ErrorKind::Syntax, x.span(), format!("`{a}` is not a term"));
    }
    Ok(Term::parse(a))
}

fn var(x: &Sexp) -> Res<Var> {
    match term(x)? {
        Term::Var(v) => Ok(v),
        Term::Const(c) => err(ErrorKind::Syntax, x.span(), format!("expected a variable, found `{c}`")),
    }
}

fn rank(x: &Sexp) -> Res<u32> {
    let a = atom(x, "a branch rank")?;
    a.parse().map_or_else(|_| err(ErrorKind::Syntax, x.span(), format!("`{a}` is not a rank")), Ok)
}

/// Names and arities visible while parsing a domain or problem.
struct Scope {
    predicates: HashMap<Symbol, usize>,
    tasks: HashMap<Symbol, usize>,
}

impl Scope {
    fn predicate(&self, x: &Sexp) -> Res<Predicate> {
        let items = list(x, "a predicate")?;
        let Some(first) = items.first() else {
            return err(ErrorKind::Syntax, x.span(), "empty predicate");
        };
        let name = Symbol::intern(name_atom(first, "a predicate name")?);
        let args = items[1..].iter().map(term).collect::<Res<Vec<_>>>()?;
        match self.predicates.get(&name) {
            None => err(ErrorKind::Unknown, first.span(), format!("predicate {name} is not declared")),
            Some(&n) if n != args.len() => {
                err(ErrorKind::Arity, x.span(), format!("predicate {name} takes {n} arguments, got {}", args.len()))
            }
            Some(_) => Ok(Predicate::new(name, args)),
        }
    }

    /// `(p ...)` or `(not (p ...))`; returns the polarity with the predicate.
    fn literal(&self, x: &Sexp) -> Res<(bool, Predicate, SourceSpan)> {
        if x.head() == Some("not") {
            let items = list(x, "a literal")?;
            if items.len() != 2 {
                return err(ErrorKind::Syntax, x.span(), "(not ...) takes exactly one predicate");
            }
            return Ok((false, self.predicate(&items[1])?, x.span().clone()));
        }
        Ok((true, self.predicate(x)?, x.span().clone()))
    }

    fn task_call(&self, x: &Sexp) -> Res<(Symbol, Vec<Term>)> {
        let items = list(x, "a task")?;
        let Some(first) = items.first() else {
            return err(ErrorKind::Syntax, x.span(), "empty task");
        };
        let name = Symbol::intern(name_atom(first, "a task name")?);
        let args = items[1..].iter().map(term).collect::<Res<Vec<_>>>()?;
        match self.tasks.get(&name) {
            None => err(ErrorKind::Unknown, first.span(), format!("no operator or method named {name}")),
            Some(&n) if n != args.len() => {
                err(ErrorKind::Arity, x.span(), format!("task {name} takes {n} arguments, got {}", args.len()))
            }
            Some(_) => Ok((name, args)),
        }
    }

    fn network(&self, sections: &[Sexp]) -> Res<TaskNetwork> {
        let mut tn = TaskNetwork::default();
        let mut labels: HashMap<String, TaskId> = HashMap::new();
        let mut seen_tasks = false;
        // tasks first, so the other sections can refer to labels in any order
        for s in sections {
            if s.head() == Some(":tasks") {
                if seen_tasks {
                    return err(ErrorKind::Syntax, s.span(), "duplicate :tasks section");
                }
                seen_tasks = true;
                for entry in keyword_list(s, ":tasks")? {
                    let items = list(entry, "(label (task ...))")?;
                    if items.len() != 2 {
                        return err(ErrorKind::Syntax, entry.span(), "expected (label (task ...))");
                    }
                    let label = name_atom(&items[0], "a task label")?;
                    let id = TaskId(tn.tasks.len() as u32);
                    if labels.insert(label.to_owned(), id).is_some() {
                        return err(ErrorKind::Syntax, items[0].span(), format!("duplicate task label {label}"));
                    }
                    let (name, args) = self.task_call(&items[1])?;
                    tn.tasks.push(TaskInstance { id, name, args });
                }
            }
        }
        let label = |x: &Sexp| -> Res<TaskId> {
            let l = atom(x, "a task label")?;
            labels
                .get(l)
                .copied()
                .map_or_else(|| err(ErrorKind::Unknown, x.span(), format!("no task labelled {l}")), Ok)
        };
        for s in sections {
            let Some(kw) = s.head() else {
                return err(ErrorKind::Syntax, s.span(), format!("unexpected `{s}` in network"));
            };
            let rest = &list(s, "a network section")?[1..];
            match kw {
                ":tasks" => {}
                ":order" => {
                    for chain in rest {
                        let items = list(chain, "(label label ...)")?;
                        if items.len() < 2 {
                            return err(ErrorKind::Syntax, chain.span(), "an ordering needs at least two labels");
                        }
                        let ids = items.iter().map(label).collect::<Res<Vec<_>>>()?;
                        for w in ids.windows(2) {
                            tn.ordering.insert((w[0], w[1]));
                        }
                    }
                }
                ":before" => {
                    let [p, t] = rest else {
                        return err(ErrorKind::Syntax, s.span(), "expected (:before predicate label)");
                    };
                    tn.state_constraints.push(StateConstraint::Before(self.predicate(p)?, label(t)?));
                }
                ":after" => {
                    let [t, p] = rest else {
                        return err(ErrorKind::Syntax, s.span(), "expected (:after label predicate)");
                    };
                    tn.state_constraints.push(StateConstraint::After(label(t)?, self.predicate(p)?));
                }
                ":between" => {
                    let [t, p, u] = rest else {
                        return err(ErrorKind::Syntax, s.span(), "expected (:between label predicate label)");
                    };
                    tn.state_constraints.push(StateConstraint::Between(label(t)?, self.predicate(p)?, label(u)?));
                }
                ":bind" => {
                    for b in rest {
                        tn.bindings.push(binding(b)?);
                    }
                }
                other => return err(ErrorKind::Syntax, s.span(), format!("unknown network section {other}")),
            }
        }
        if !tn.is_acyclic() {
            let at = sections.iter().find(|s| s.head() == Some(":order")).unwrap_or(&sections[0]);
            return err(ErrorKind::Syntax, at.span(), "ordering is cyclic");
        }
        Ok(tn)
    }
}

fn binding(x: &Sexp) -> Res<BindingConstraint> {
    let (equal, inner) = if x.head() == Some("not") {
        let items = list(x, "a binding")?;
        if items.len() != 2 {
            return err(ErrorKind::Syntax, x.span(), "(not ...) takes exactly one equation");
        }
        (false, &items[1])
    } else {
        (true, x)
    };
    let items = list(inner, "(= term term)")?;
    if items.len() != 3 || items[0].atom() != Some("=") {
        return err(ErrorKind::Syntax, inner.span(), "expected (= term term)");
    }
    let (lhs, rhs) = (term(&items[1])?, term(&items[2])?);
    if !lhs.is_var() && !rhs.is_var() {
        return err(ErrorKind::Syntax, inner.span(), "a binding constraint needs a variable");
    }
    Ok(BindingConstraint { lhs, rhs, equal })
}

/// `(define (KIND NAME) ...)`: returns the name and the remaining forms.
fn define<'a>(text: &str, file: &str, kind: &str, top: &'a [Sexp]) -> Res<(Symbol, &'a [Sexp])> {
    let whole = SourceSpan::new(file, 1, 1, text.len().max(1));
    let [form] = top else {
        let at = top.get(1).map(Sexp::span).unwrap_or(&whole);
        return err(ErrorKind::Syntax, at, format!("expected a single (define ({kind} ...) ...) form"));
    };
    let items = keyword_list(form, "define")?;
    let Some(header) = items.first() else {
        return err(ErrorKind::Syntax, form.span(), format!("missing ({kind} NAME)"));
    };
    let h = keyword_list(header, kind)?;
    let [name] = h else {
        return err(ErrorKind::Syntax, header.span(), format!("expected ({kind} NAME)"));
    };
    Ok((Symbol::intern(name_atom(name, "a name")?), &items[1..]))
}

pub fn parse_domain(text: &str, file: &str) -> Result<Domain, ParseErrors> {
    Ok(domain(text, file)?)
}

fn domain(text: &str, file: &str) -> Res<Domain> {
    let top = read_all(text, file)?;
    let (name, forms) = define(text, file, "domain", &top)?;
    let mut scope = Scope { predicates: HashMap::new(), tasks: HashMap::new() };
    let mut dom = Domain { name, ..Domain::default() };

    // declarations and heads first, so bodies may refer forward
    for f in forms {
        match f.head() {
            Some(":predicates") => {
                for p in keyword_list(f, ":predicates")? {
                    let items = list(p, "a predicate declaration")?;
                    let Some(first) = items.first() else {
                        return err(ErrorKind::Syntax, p.span(), "empty predicate declaration");
                    };
                    let n = Symbol::intern(name_atom(first, "a predicate name")?);
                    for v in &items[1..] {
                        var(v)?;
                    }
                    if scope.predicates.insert(n, items.len() - 1).is_some() {
                        return err(ErrorKind::Syntax, p.span(), format!("predicate {n} declared twice"));
                    }
                    dom.predicates.push((n, items.len() - 1));
                }
            }
            Some(kw @ (":operator" | ":method")) => {
                let rest = keyword_list(f, kw)?;
                let Some(head) = rest.first() else {
                    return err(ErrorKind::Syntax, f.span(), format!("{kw} needs a head"));
                };
                let items = list(head, "a head (name ?param ...)")?;
                let Some(first) = items.first() else {
                    return err(ErrorKind::Syntax, head.span(), "empty head");
                };
                let n = name_atom(first, "a task name")?;
                let primitive = n.starts_with('!');
                if (kw == ":operator") != primitive {
                    let msg = if primitive {
                        format!("method name {n} must not start with '!'")
                    } else {
                        format!("operator name {n} must start with '!'")
                    };
                    return err(ErrorKind::Namespace, first.span(), msg);
                }
                let n = Symbol::intern(n);
                let arity = items.len() - 1;
                match scope.tasks.insert(n, arity) {
                    Some(_) if kw == ":operator" => {
                        return err(ErrorKind::Syntax, head.span(), format!("operator {n} defined twice"));
                    }
                    Some(a) if a != arity => {
                        return err(
                            ErrorKind::Arity,
                            head.span(),
                            format!("method {n} was declared with {a} parameters"),
                        );
                    }
                    _ => {}
                }
            }
            Some(other) => return err(ErrorKind::Syntax, f.span(), format!("unknown domain section {other}")),
            None => return err(ErrorKind::Syntax, f.span(), format!("unexpected `{f}`")),
        }
    }

    let mut rank_spans: HashMap<Symbol, Vec<(u32, SourceSpan)>> = HashMap::new();
    for f in forms {
        match f.head() {
            Some(":operator") => dom.operators.push(operator(&scope, keyword_list(f, ":operator")?)?),
            Some(":method") => {
                for (m, span) in methods(&scope, keyword_list(f, ":method")?)? {
                    rank_spans.entry(m.head.name).or_default().push((m.rank, span));
                    dom.methods.push(m);
                }
            }
            _ => {}
        }
    }
    for (name, mut ranks) in rank_spans {
        ranks.sort_by_key(|(r, _)| *r);
        for (i, (r, span)) in ranks.iter().enumerate() {
            if *r != i as u32 + 1 {
                return err(
                    ErrorKind::Syntax,
                    span,
                    format!("branches of {name} must be ranked 1..{} without gaps or repeats", ranks.len()),
                );
            }
        }
    }
    Ok(dom)
}

fn operator(scope: &Scope, rest: &[Sexp]) -> Res<Operator> {
    let head = list(&rest[0], "an operator head")?;
    let mut op = Operator::new(head[0].atom().unwrap_or_default(), &[]);
    for p in &head[1..] {
        let v = var(p)?;
        if op.params.contains(&v) {
            return err(ErrorKind::Syntax, p.span(), format!("parameter {v} repeated"));
        }
        op.params.push(v);
    }
    let mut seen = BTreeSet::new();
    for section in &rest[1..] {
        let Some(kw) = section.head() else {
            return err(ErrorKind::Syntax, section.span(), format!("unexpected `{section}` in operator"));
        };
        if !seen.insert(kw.to_owned()) {
            return err(ErrorKind::Syntax, section.span(), format!("duplicate {kw} section"));
        }
        let items = &list(section, "an operator section")?[1..];
        let preds = || items.iter().map(|x| scope.predicate(x)).collect::<Res<Vec<_>>>();
        match kw {
            ":pre" => {
                for x in items {
                    let (positive, p, _) = scope.literal(x)?;
                    if positive {
                        op.pre_pos.push(p);
                    } else {
                        op.pre_neg.push(p);
                    }
                }
            }
            ":add" => op.add = preds()?,
            ":del" => op.del = preds()?,
            ":protect" => op.protect = preds()?,
            ":unprotect" => op.unprotect = preds()?,
            ":resource" => {
                for x in items {
                    let v = var(x)?;
                    if !op.params.contains(&v) {
                        return err(ErrorKind::Variable, x.span(), format!("{v} is not a parameter"));
                    }
                    op.resources.push(v);
                }
            }
            other => return err(ErrorKind::Syntax, section.span(), format!("unknown operator section {other}")),
        }
    }
    let all =
        op.pre_pos.iter().chain(&op.pre_neg).chain(&op.add).chain(&op.del).chain(&op.protect).chain(&op.unprotect);
    for p in all {
        if let Some(v) = p.vars().find(|v| !op.params.contains(v)) {
            return err(ErrorKind::Variable, rest[0].span(), format!("{v} in {p} is not a parameter of {}", op.name));
        }
    }
    if let Some(p) = op.add.iter().find(|p| op.del.contains(p)) {
        return err(ErrorKind::Effect, rest[0].span(), format!("{} both adds and deletes {p}", op.name));
    }
    Ok(op)
}

fn methods(scope: &Scope, rest: &[Sexp]) -> Res<Vec<(MethodState, SourceSpan)>> {
    let head_items = list(&rest[0], "a method head")?;
    let head = TaskHead {
        name: Symbol::intern(head_items[0].atom().unwrap_or_default()),
        params: head_items[1..].iter().map(term).collect::<Res<Vec<_>>>()?,
    };
    let head_vars: BTreeSet<Var> = head.params.iter().filter_map(Term::as_var).collect();
    let mut out = Vec::new();
    for b in &rest[1..] {
        let items = keyword_list(b, ":branch")?;
        let Some(r) = items.first() else {
            return err(ErrorKind::Syntax, b.span(), "a branch needs a rank");
        };
        let mut m = MethodState {
            head: head.clone(),
            rank: rank(r)?,
            pre_pos: vec![],
            pre_neg: vec![],
            network: TaskNetwork::default(),
        };
        let mut neg_spans = Vec::new();
        let mut seen = BTreeSet::new();
        for section in &items[1..] {
            let kw = section.head().unwrap_or_default();
            if !seen.insert(kw.to_owned()) {
                return err(ErrorKind::Syntax, section.span(), format!("duplicate {kw} section"));
            }
            match kw {
                ":pre" => {
                    for x in keyword_list(section, ":pre")? {
                        let (positive, p, span) = scope.literal(x)?;
                        if positive {
                            m.pre_pos.push(p);
                        } else {
                            m.pre_neg.push(p);
                            neg_spans.push(span);
                        }
                    }
                }
                ":network" => m.network = scope.network(keyword_list(section, ":network")?)?,
                _ => return err(ErrorKind::Syntax, section.span(), format!("unexpected `{section}` in branch")),
            }
        }
        if !seen.contains(":network") {
            return err(ErrorKind::Syntax, b.span(), "a branch needs a (:network ...) section");
        }
        let mut bound = head_vars.clone();
        bound.extend(m.pre_pos.iter().flat_map(|p| p.vars()));
        for (p, span) in m.pre_neg.iter().zip(&neg_spans) {
            if let Some(v) = p.vars().find(|v| !bound.contains(v)) {
                return err(ErrorKind::UnsafeNegation, span, format!("{v} occurs only in the negative literal {p}"));
            }
        }
        out.push((m, r.span().clone()));
    }
    Ok(out)
}

pub fn parse_problem(text: &str, file: &str, dom: &Domain) -> Result<ProblemDef, ParseErrors> {
    Ok(problem(text, file, dom)?)
}

fn problem(text: &str, file: &str, dom: &Domain) -> Res<ProblemDef> {
    let top = read_all(text, file)?;
    let (name, forms) = define(text, file, "problem", &top)?;
    let scope = Scope {
        predicates: dom.predicates.iter().copied().collect(),
        tasks: dom
            .operators
            .iter()
            .map(|o| (o.name, o.params.len()))
            .chain(dom.methods.iter().map(|m| (m.head.name, m.head.params.len())))
            .collect(),
    };
    let mut def = ProblemDef { name, ..ProblemDef::default() };
    let mut seen = BTreeSet::new();
    for f in forms {
        let Some(kw) = f.head() else {
            return err(ErrorKind::Syntax, f.span(), format!("unexpected `{f}`"));
        };
        if !seen.insert(kw.to_owned()) {
            return err(ErrorKind::Syntax, f.span(), format!("duplicate {kw} section"));
        }
        let rest = &list(f, "a problem section")?[1..];
        let single = || -> Res<&Sexp> {
            match rest {
                [x] => Ok(x),
                _ => err(ErrorKind::Syntax, f.span(), format!("{kw} takes one value")),
            }
        };
        match kw {
            ":domain" => {
                let x = single()?;
                let d = Symbol::intern(name_atom(x, "a domain name")?);
                if d != dom.name {
                    return err(ErrorKind::Unknown, x.span(), format!("problem is for domain {d}, not {}", dom.name));
                }
                def.domain = d;
            }
            ":init" => {
                for x in rest {
                    let p = scope.predicate(x)?;
                    if !p.is_ground() {
                        return err(ErrorKind::Ground, x.span(), format!("initial fact {p} has variables"));
                    }
                    def.init.push(p);
                }
            }
            ":network" => def.network = scope.network(rest)?,
            ":engine" => {
                let x = single()?;
                def.engine = match atom(x, "state or plan")? {
                    "state" => EngineMode::State,
                    "plan" => EngineMode::Plan,
                    other => return err(ErrorKind::Syntax, x.span(), format!("unknown engine {other}")),
                };
            }
            ":style" => {
                let x = single()?;
                def.style = match atom(x, "totd, utd or potd")? {
                    "totd" => Style::Totd,
                    "utd" => Style::Utd,
                    "potd" => Style::Potd,
                    other => return err(ErrorKind::Syntax, x.span(), format!("unknown style {other}")),
                };
            }
            ":budget" => {
                let x = single()?;
                let a = atom(x, "a budget")?;
                def.budget = match a.parse::<u64>() {
                    Ok(n) if n > 0 => n,
                    _ => {
                        return err(ErrorKind::Syntax, x.span(), format!("budget must be a positive integer, got {a}"))
                    }
                };
            }
            other => return err(ErrorKind::Syntax, f.span(), format!("unknown problem section {other}")),
        }
    }
    if !seen.contains(":domain") {
        def.domain = dom.name;
    }
    Ok(def)
}

/// Parses a domain and a problem and assembles the planning problem.
pub fn load_problem(
    domain_text: &str,
    domain_file: &str,
    problem_text: &str,
    problem_file: &str,
) -> Result<PlanningProblem, ParseErrors> {
    let dom = parse_domain(domain_text, domain_file)?;
    let def = parse_problem(problem_text, problem_file, &dom)?;
    PlanningProblem::new(dom, def).map_err(|e| {
        ParseErrors::from(ParseError::new(ErrorKind::Syntax, SourceSpan::new(problem_file, 1, 1, 1), e.to_string()))
    })
}
