//! Configuration and result types shared by both engines.

use thiserror::Error;

use crate::model::{Budget, ModelError, Plan, PlanningProblem, SearchStats, Style};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("network is not totally ordered; minimal tasks: {0}")]
    OrderingViolation(String),
    #[error("network still has free variables: {0}")]
    NonGroundNetwork(String),
    #[error("threat kind {0} cannot be resolved")]
    UnknownThreatKind(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    pub style: Style,
    pub budget: Budget,
    /// Stop at the first applicable branch of a method instead of
    /// backtracking into later branches.
    pub commit_first_branch: bool,
    /// Honour protection requests and cancellations written in the domain.
    pub protections: bool,
}

impl SearchConfig {
    pub fn for_problem(problem: &PlanningProblem) -> Self {
        SearchConfig {
            style: problem.def.style,
            budget: problem.budget(),
            commit_first_branch: false,
            protections: true,
        }
    }

    pub fn with_budget(mut self, max_decompositions: u64) -> Self {
        self.budget = Budget { max_decompositions: max_decompositions.max(1), ..self.budget };
        self
    }

    pub fn with_style(mut self, style: Style) -> Self {
        self.style = style;
        self
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { style: Style::Totd, budget: Budget::default(), commit_first_branch: false, protections: true }
    }
}

/// Every distinct plan found by an exhaustive run.
#[derive(Clone, Debug, Default)]
pub struct AllPlans {
    /// One plan per distinct step sequence, in discovery order.
    pub plans: Vec<Plan>,
    /// False when the budget cut the search short.
    pub complete: bool,
    pub stats: SearchStats,
}
