use super::{possibly_unify, CausalLink, PlanEngine, RefinementNode, Threat, ThreatKind};
use crate::model::{BindingConstraint, OperatorInstance, Predicate, TaskId};
use crate::search::EngineError;

impl PlanEngine<'_> {
    fn instance(&self, node: &RefinementNode, t: TaskId) -> Option<OperatorInstance> {
        let task = node.network.task(t)?;
        self.operator(task.name)?.instantiate(&task.args).ok()
    }

    fn separations(&self, node: &RefinementNode) -> Vec<BindingConstraint> {
        node.network.bindings.iter().filter(|b| !b.equal).copied().collect()
    }

    /// Deleted-condition threats of primitive tasks against causal links,
    /// double-crosses where two tasks clobber each other with no way out,
    /// and resource contentions between unordered tasks.
    pub fn detect_interactions(&self, node: &RefinementNode) -> Vec<Threat> {
        let tn = &node.network;
        let seps = self.separations(node);
        let mut raw: Vec<Threat> = Vec::new();
        for u in &tn.tasks {
            let Some(inst) = self.instance(node, u.id) else { continue };
            if inst.del.is_empty() {
                continue;
            }
            for link in &node.links {
                if link.consumer == u.id || link.producer == Some(u.id) {
                    continue;
                }
                if link.producer.is_some_and(|p| tn.precedes(u.id, p)) || tn.precedes(link.consumer, u.id) {
                    continue;
                }
                if let Some(d) = inst.del.iter().find(|d| possibly_unify(d, &link.predicate, &seps).is_some()) {
                    raw.push(Threat {
                        kind: ThreatKind::DeletedCondition,
                        clobberer: u.id,
                        victim: link.consumer,
                        predicate: d.clone(),
                        link: Some(link.clone()),
                    });
                }
            }
        }

        // a pair that can only be demoted both ways round
        let stuck = |th: &Threat| {
            let link = th.link.as_ref().expect("deleted-condition threats carry a link");
            let ground = th.predicate.is_ground() && link.predicate.is_ground();
            let no_promotion = link.producer.is_none_or(|p| tn.precedes(p, th.clobberer));
            ground && no_promotion
        };
        let mut dropped = vec![false; raw.len()];
        let mut out = Vec::new();
        for i in 0..raw.len() {
            if dropped[i] {
                continue;
            }
            let a = &raw[i];
            let partner = (i + 1..raw.len()).find(|&j| {
                let b = &raw[j];
                !dropped[j] && b.clobberer == a.victim && b.victim == a.clobberer && stuck(a) && stuck(b)
            });
            match partner {
                Some(j) => {
                    dropped[j] = true;
                    let (lo, hi) = if a.clobberer <= raw[j].clobberer { (a, &raw[j]) } else { (&raw[j], a) };
                    out.push(Threat {
                        kind: ThreatKind::DoubleCross,
                        clobberer: lo.clobberer,
                        victim: hi.clobberer,
                        predicate: lo.predicate.clone(),
                        link: lo.link.clone(),
                    });
                }
                None => out.push(a.clone()),
            }
        }

        for (i, u) in tn.tasks.iter().enumerate() {
            let Some(op_u) = self.operator(u.name) else { continue };
            let ru = op_u.resource_args(&u.args);
            if ru.is_empty() {
                continue;
            }
            for v in &tn.tasks[i + 1..] {
                let Some(op_v) = self.operator(v.name) else { continue };
                if tn.precedes(u.id, v.id) || tn.precedes(v.id, u.id) {
                    continue;
                }
                let rv = op_v.resource_args(&v.args);
                if let Some(r) = ru.iter().find(|r| rv.contains(r)) {
                    out.push(Threat {
                        kind: ThreatKind::Resource,
                        clobberer: u.id,
                        victim: v.id,
                        predicate: Predicate::new("resource", vec![*r]),
                        link: None,
                    });
                }
            }
        }
        out
    }

    /// Refinements that remove `threat`: promotion, demotion, then one
    /// separation per argument that could still differ. Inconsistent
    /// refinements are dropped; a double-cross has none.
    pub fn resolve_threat(&self, node: &RefinementNode, threat: &Threat) -> Result<Vec<RefinementNode>, EngineError> {
        match threat.kind {
            ThreatKind::DoubleCross => return Ok(vec![]),
            ThreatKind::Resource => return Err(EngineError::UnknownThreatKind(threat.to_string())),
            ThreatKind::DeletedCondition => {}
        }
        let link: &CausalLink =
            threat.link.as_ref().ok_or_else(|| EngineError::UnknownThreatKind(threat.to_string()))?;
        let u = threat.clobberer;
        let mut children = Vec::new();
        let mut ordered = |a: TaskId, b: TaskId| {
            let mut child = node.clone();
            if child.network.add_ordering(a, b) {
                children.push(child);
            }
        };
        if let Some(p) = link.producer {
            ordered(u, p);
        }
        ordered(link.consumer, u);
        for (x, y) in threat.predicate.args.iter().zip(&link.predicate.args) {
            if x != y && (x.is_var() || y.is_var()) {
                let mut child = node.clone();
                child.network.bindings.push(BindingConstraint::ne(*x, *y));
                children.push(child);
            }
        }
        Ok(children)
    }
}
