use std::collections::BTreeMap;
use std::fmt::Write;

use serde_json::{json, Map, Value};

use crate::model::{
    DecompositionRecord, Plan, Predicate, SearchStats, Step, Substitution, TaskId, TaskInstance, TaskNetwork, Term,
    Trace,
};
use crate::symbol::Symbol;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanFormat {
    /// One step per line, `k: (name arg ...)`, counting from 0.
    Text,
    /// A JSON document with steps and the decomposition trace.
    Json,
}

/// Extra output of the plan-based engine.
#[derive(Clone, Debug, Default)]
pub struct SolutionInfo {
    pub network: TaskNetwork,
    /// `(producer, predicate, consumer)`; `None` stands for the initial state.
    pub links: Vec<(Option<TaskId>, Predicate, TaskId)>,
    pub threat_log: Vec<String>,
}

pub fn serialize_plan(plan: &Plan, format: PlanFormat) -> String {
    match format {
        PlanFormat::Text => {
            let mut out = String::new();
            for (k, s) in plan.steps.iter().enumerate() {
                let _ = writeln!(out, "{k}: {s}");
            }
            out
        }
        PlanFormat::Json => {
            let doc = plan_document("plan", Some(plan), None, None);
            serde_json::to_string_pretty(&doc).expect("plan documents serialize") + "\n"
        }
    }
}

fn trace_node(
    trace: &Trace,
    id: TaskId,
    label: String,
    steps: &BTreeMap<TaskId, usize>,
    records: &BTreeMap<TaskId, usize>,
) -> Value {
    let mut node = Map::new();
    node.insert("id".into(), json!(id.0));
    node.insert("task".into(), json!(label));
    if let Some(&k) = steps.get(&id) {
        node.insert("step".into(), json!(k));
    }
    if let Some(&r) = records.get(&id) {
        let rec = &trace.decompositions[r];
        node.insert("method".into(), json!(rec.method.as_str()));
        node.insert("branch".into(), json!(rec.rank));
        let sigma: Map<String, Value> = rec.sigma.iter().map(|(v, t)| (v.to_string(), json!(t.to_string()))).collect();
        node.insert("bindings".into(), Value::Object(sigma));
        let children: Vec<Value> =
            rec.children.iter().map(|c| trace_node(trace, c.id, c.to_string(), steps, records)).collect();
        node.insert("children".into(), Value::Array(children));
    }
    Value::Object(node)
}

/// The trace as a forest rooted at the initial tasks. Primitive leaves carry
/// the index of the step that executes them.
pub fn trace_tree(plan: &Plan) -> Value {
    let steps: BTreeMap<TaskId, usize> = plan.step_tasks.iter().enumerate().map(|(k, t)| (*t, k)).collect();
    let records: BTreeMap<TaskId, usize> =
        plan.trace.decompositions.iter().enumerate().map(|(i, d)| (d.task.id, i)).collect();
    let mut tree = Vec::new();
    for r in &plan.trace.roots {
        tree.push(trace_node(&plan.trace, r.id, r.to_string(), &steps, &records));
    }
    Value::Array(tree)
}

/// The structured output document of `solve`.
pub fn plan_document(
    result: &str,
    plan: Option<&Plan>,
    stats: Option<&SearchStats>,
    solution: Option<&SolutionInfo>,
) -> Value {
    let mut doc = Map::new();
    doc.insert("result".into(), json!(result));
    if let Some(p) = plan {
        let steps: Vec<Value> = p
            .steps
            .iter()
            .enumerate()
            .map(|(k, s)| {
                json!({
                    "index": k,
                    "name": s.name.as_str(),
                    "args": s.args.iter().map(|a| a.as_str()).collect::<Vec<_>>(),
                })
            })
            .collect();
        doc.insert("steps".into(), Value::Array(steps));
        doc.insert("trace".into(), trace_tree(p));
    }
    if let Some(s) = stats {
        doc.insert("stats".into(), serde_json::to_value(s).expect("stats serialize"));
    }
    if let Some(sol) = solution {
        let tasks: Vec<Value> =
            sol.network.tasks.iter().map(|t| json!({"id": t.id.0, "task": t.to_string()})).collect();
        let ordering: Vec<Value> = sol.network.ordering.iter().map(|(a, b)| json!([a.0, b.0])).collect();
        let links: Vec<Value> = sol
            .links
            .iter()
            .map(|(p, q, c)| {
                let producer = p.map_or(json!("init"), |t| json!(t.0));
                json!({"producer": producer, "predicate": q.to_string(), "consumer": c.0})
            })
            .collect();
        doc.insert("network".into(), json!({"tasks": tasks, "ordering": ordering, "links": links}));
        if !sol.threat_log.is_empty() {
            doc.insert("threat_log".into(), json!(sol.threat_log));
        }
    }
    Value::Object(doc)
}

fn task_of(id: u64, label: &str) -> Result<TaskInstance, String> {
    let inner = label
        .trim()
        .strip_prefix('(')
        .and_then(|b| b.strip_suffix(')'))
        .ok_or_else(|| format!("task {id}: expected (name arg ...), found {label}"))?;
    let mut parts = inner.split_whitespace();
    let name = parts.next().ok_or_else(|| format!("task {id}: empty task"))?;
    let id = u32::try_from(id).map_err(|_| format!("task id {id} out of range"))?;
    Ok(TaskInstance { id: TaskId(id), name: Symbol::intern(name), args: parts.map(Term::parse).collect() })
}

fn read_trace_node(v: &Value, plan: &mut Plan, steps: &mut BTreeMap<usize, TaskId>) -> Result<TaskInstance, String> {
    let id = v["id"].as_u64().ok_or("trace node without an id")?;
    let task = task_of(id, v["task"].as_str().ok_or("trace node without a task")?)?;
    if let Some(k) = v.get("step").and_then(Value::as_u64) {
        steps.insert(k as usize, task.id);
    }
    if let Some(method) = v.get("method").and_then(Value::as_str) {
        let rank = v["branch"].as_u64().ok_or("decomposition without a branch")? as u32;
        let mut pairs = Vec::new();
        if let Some(map) = v["bindings"].as_object() {
            for (var, value) in map {
                let var = Term::parse(var).as_var().ok_or_else(|| format!("{var} is not a variable"))?;
                pairs.push((var, Term::parse(value.as_str().ok_or("binding values are strings")?)));
            }
        }
        let mut children = Vec::new();
        for c in v["children"].as_array().map(Vec::as_slice).unwrap_or_default() {
            children.push(read_trace_node(c, plan, steps)?);
        }
        plan.trace.decompositions.push(DecompositionRecord {
            task: task.clone(),
            method: Symbol::intern(method),
            rank,
            sigma: Substitution::from_pairs(pairs),
            children,
        });
    }
    Ok(task)
}

/// Reads a plan document written by [`plan_document`], trace included.
pub fn parse_plan_json(text: &str) -> Result<Plan, String> {
    let doc: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let mut plan = Plan::default();
    for s in doc["steps"].as_array().ok_or("document has no steps")? {
        let name = s["name"].as_str().ok_or("step without a name")?;
        let args = s["args"]
            .as_array()
            .ok_or("step without args")?
            .iter()
            .map(|a| a.as_str().map(Symbol::intern).ok_or("arguments are strings"))
            .collect::<Result<Vec<_>, _>>()?;
        plan.steps.push(Step { name: Symbol::intern(name), args });
    }
    let mut steps = BTreeMap::new();
    if let Some(roots) = doc.get("trace").and_then(Value::as_array) {
        for r in roots {
            let root = read_trace_node(r, &mut plan, &mut steps)?;
            plan.trace.roots.push(root);
        }
    }
    if steps.len() == plan.steps.len() && steps.keys().copied().eq(0..plan.steps.len()) {
        plan.step_tasks = steps.into_values().collect();
    }
    Ok(plan)
}

/// Reads steps written as `k: (name arg ...)` or `(name arg ...)`, one per
/// line. Blank lines and `;` comments are skipped.
pub fn parse_plan_text(text: &str) -> Result<Vec<Step>, String> {
    let mut steps = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let body = match line.split_once(':') {
            Some((k, rest)) if k.trim().chars().all(|c| c.is_ascii_digit()) => rest.trim(),
            _ => line,
        };
        let inner = body
            .strip_prefix('(')
            .and_then(|b| b.strip_suffix(')'))
            .ok_or_else(|| format!("line {}: expected (name arg ...)", n + 1))?;
        let mut parts = inner.split_whitespace().map(|p| Symbol::intern(&p.to_ascii_lowercase()));
        let name = parts.next().ok_or_else(|| format!("line {}: empty step", n + 1))?;
        steps.push(Step { name, args: parts.collect() });
    }
    Ok(steps)
}
