//! Size sweeps over generated logistics problems.

use std::fmt::Write;
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::generate::{gen_logistics, GenSpec};
use crate::io::load_problem;
use crate::model::{EngineMode, SearchStats};
use crate::plan_engine::plan_po;
use crate::search::SearchConfig;
use crate::state_engine::plan_state;
use crate::validate::validate_plan;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub problem: String,
    pub boxes: usize,
    pub cities: usize,
    pub locs_per_city: usize,
    pub engine: EngineMode,
    /// `plan`, `no-solution`, `budget-exhausted` or `error`.
    pub result: String,
    pub exit_code: i32,
    pub valid: bool,
    pub wall_ms: f64,
    pub stats: SearchStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub boxes: Vec<usize>,
    pub cities: usize,
    pub locs_per_city: usize,
    pub seed: u64,
    pub engines: Vec<EngineMode>,
    pub budget: Option<u64>,
    pub parallel: bool,
}

fn run_row(spec: &BenchSpec, boxes: usize, engine: EngineMode) -> BenchRow {
    let gen = GenSpec { boxes, cities: spec.cities, locs_per_city: spec.locs_per_city, seed: spec.seed };
    let mut row = BenchRow {
        problem: format!("logistics-b{boxes}-c{}-l{}-s{}", spec.cities, spec.locs_per_city, spec.seed),
        boxes,
        cities: spec.cities,
        locs_per_city: spec.locs_per_city,
        engine,
        result: "error".into(),
        exit_code: 3,
        valid: false,
        wall_ms: 0.0,
        stats: SearchStats::default(),
        error: None,
    };
    let problem = match gen_logistics(gen) {
        Ok(g) => load_problem(&g.domain, "generated.htd", &g.problem, "generated.htp").map_err(|e| e.to_string()),
        Err(e) => Err(e.to_string()),
    };
    let problem = match problem {
        Ok(p) => p,
        Err(e) => {
            row.error = Some(e);
            return row;
        }
    };
    let mut config = SearchConfig::for_problem(&problem);
    if let Some(b) = spec.budget {
        config = config.with_budget(b);
    }
    let start = Instant::now();
    let result = match engine {
        EngineMode::State => plan_state(&problem, config),
        EngineMode::Plan => plan_po(&problem, config).map(|r| r.result),
    };
    row.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok(r) => {
            row.result = r.outcome.label().into();
            row.exit_code = r.outcome.exit_code();
            row.valid = r.outcome.plan().is_some_and(|p| validate_plan(p, &problem).is_valid());
            row.stats = r.stats;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs every engine on every size. A failing row is recorded and the
/// sweep goes on.
pub fn run_bench(spec: &BenchSpec) -> BenchReport {
    let jobs: Vec<(usize, EngineMode)> =
        spec.boxes.iter().flat_map(|b| spec.engines.iter().map(move |e| (*b, *e))).collect();
    let mut rows: Vec<BenchRow> = if spec.parallel {
        thread::scope(|s| {
            let handles: Vec<_> = jobs.iter().map(|(b, e)| s.spawn(move || run_row(spec, *b, *e))).collect();
            handles.into_iter().map(|h| h.join().expect("bench rows do not panic")).collect()
        })
    } else {
        jobs.iter().map(|(b, e)| run_row(spec, *b, *e)).collect()
    };
    rows.sort_by_key(|r| (r.boxes, r.engine as u8));
    BenchReport { rows }
}

impl BenchReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<28} {:>5} {:>6} {:<17} {:>4} {:>5} {:>10} {:>8} {:>8} {:>8}\n",
            "problem", "boxes", "engine", "result", "exit", "valid", "ms", "nodes", "decomp", "backtr"
        );
        for r in &self.rows {
            let engine = match r.engine {
                EngineMode::State => "state",
                EngineMode::Plan => "plan",
            };
            let _ = writeln!(
                out,
                "{:<28} {:>5} {:>6} {:<17} {:>4} {:>5} {:>10.3} {:>8} {:>8} {:>8}",
                r.problem,
                r.boxes,
                engine,
                r.result,
                r.exit_code,
                r.valid,
                r.wall_ms,
                r.stats.nodes,
                r.stats.decompositions,
                r.stats.backtracks
            );
            if let Some(e) = &r.error {
                let _ = writeln!(out, "  error: {e}");
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(boxes: Vec<usize>) -> BenchSpec {
        BenchSpec {
            boxes,
            cities: 2,
            locs_per_city: 3,
            seed: 5,
            engines: vec![EngineMode::State],
            budget: None,
            parallel: true,
        }
    }

    #[test]
    fn rows_are_sorted_and_round_trip() {
        let report = run_bench(&spec(vec![3, 1, 2]));
        let sizes: Vec<usize> = report.rows.iter().map(|r| r.boxes).collect();
        assert_eq!(sizes, vec![1, 2, 3]);
        assert!(report.rows.iter().all(|r| r.exit_code == 0 && r.valid && r.wall_ms >= 0.0));
        assert_eq!(BenchReport::from_json(&report.to_json()).unwrap(), report);
    }

    #[test]
    fn a_bad_row_does_not_stop_the_sweep() {
        let report = run_bench(&spec(vec![0, 1]));
        assert_eq!(report.rows[0].result, "error");
        assert!(report.rows[0].error.is_some());
        assert_eq!(report.rows[1].exit_code, 0);
    }
}
