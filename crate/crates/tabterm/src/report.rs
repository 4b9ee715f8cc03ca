//! The JSON documents emitted by the command line: the full `check`
//! report and the per-query `run` document.
//!
//! Everything here is a plain serializable snapshot of library results.
//! Field order is serialization order; maps are sorted, so two runs over
//! the same input differ at most in `timing_ms`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::analysis::{
    build_dep_graph, check_simply_moded, check_well_chosen, check_well_moded,
    ModeReport,
};
use crate::engine::lg::lg_evaluate_opts;
use crate::engine::{call_set_sample, Budget};
use crate::prove::{Certificate, ProofReport, Verdict};
use crate::syntax::{
    display_atom, display_atom_generic, render_query_binding, Mode, Program, Query,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct ReportDoc {
    pub schema: u32,
    pub file: String,
    pub program: ProgramDoc,
    pub modes: ModesDoc,
    pub well_chosen: WellChosenDoc,
    pub quasi: GoalDoc,
    pub lg: GoalDoc,
    /// One bounded engine run per declared query.
    pub runs: Vec<RunDoc>,
    /// Wall-clock of the whole pipeline. The only unstable field.
    pub timing_ms: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProgramDoc {
    pub clauses: usize,
    pub predicates: Vec<String>,
    pub tabled: Vec<String>,
    pub queries: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModesDoc {
    /// Declared mode vectors, rendered as in the source (`path(i,i,o,o)`).
    pub declared: BTreeMap<String, String>,
    pub well_moded: bool,
    pub simply_moded: bool,
    /// Human-readable locations of the violations, if any.
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WellChosenDoc {
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One prover goal (quasi- or LG-termination) with its certificate and
/// the engine cross-checks that ran next to it.
#[derive(Debug, Clone, Serialize)]
pub struct GoalDoc {
    /// `proved` | `unproved-within-bound` | `inapplicable`.
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub bound: u64,
    pub constraints: usize,
    pub constraints_failed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    pub engine: Vec<EngineDoc>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EngineDoc {
    pub query: String,
    pub status: String,
    pub tables: usize,
    pub answers: usize,
}

/// A bounded engine run of one goal: the forest in summary, the answers
/// to the goal as bindings, and the LD call-set sample.
#[derive(Debug, Clone, Serialize)]
pub struct RunDoc {
    pub query: String,
    pub status: String,
    pub steps: usize,
    pub max_branch_depth: usize,
    pub trees: Vec<TreeDoc>,
    /// Bindings of the goal's variables, one entry per answer to the goal.
    pub answers: Vec<String>,
    /// Variant keys selected by a plain depth-first run, builtins excluded.
    pub call_set_sample: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeDoc {
    pub root: String,
    pub tabled: bool,
    pub answers: Vec<String>,
    pub answer_budget_hit: bool,
    pub depth_budget_hit: bool,
}

/// A query rendered with its declared variable names.
pub fn query_string(q: &Query) -> String {
    display_atom(&q.atom, &|v| {
        q.var_names.get(v).cloned().unwrap_or_else(|| format!("_G{v}"))
    })
}

impl GoalDoc {
    pub fn from_proof(rep: &ProofReport) -> GoalDoc {
        let (verdict, detail) = match &rep.verdict {
            Verdict::Proved => ("proved".to_string(), None),
            Verdict::UnprovedWithinBound => {
                ("unproved-within-bound".to_string(), rep.conflict.clone())
            }
            Verdict::Inapplicable(why) => {
                ("inapplicable".to_string(), Some(why.clone()))
            }
        };
        GoalDoc {
            verdict,
            detail,
            bound: rep.bound,
            constraints: rep.constraints.len(),
            constraints_failed: rep
                .constraints
                .iter()
                .filter(|c| c.satisfied == Some(false))
                .count(),
            certificate: rep.certificate.clone(),
            engine: rep
                .engine
                .iter()
                .map(|e| EngineDoc {
                    query: e.query.clone(),
                    status: e.status.to_string(),
                    tables: e.tables,
                    answers: e.answers,
                })
                .collect(),
        }
    }

    pub fn is_proved(&self) -> bool {
        self.verdict == "proved"
    }
}

pub fn run_doc(p: &Program, q: &Query, budget: &Budget, occurs_check: bool) -> RunDoc {
    let (forest, outcome) = lg_evaluate_opts(p, &q.atom, budget, occurs_check);
    let trees = forest
        .trees
        .iter()
        .map(|t| TreeDoc {
            root: display_atom_generic(&t.root),
            tabled: t.tabled,
            answers: t.answers.iter().map(display_atom_generic).collect(),
            answer_budget_hit: t.answer_budget_hit,
            depth_budget_hit: t.depth_budget_hit,
        })
        .collect();
    let answers = forest
        .top()
        .answers
        .iter()
        .map(|a| render_query_binding(q, a))
        .collect();
    let calls = call_set_sample(p, &q.atom, budget);
    RunDoc {
        query: query_string(q),
        status: outcome.status.to_string(),
        steps: outcome.stats.total_steps,
        max_branch_depth: outcome.stats.max_branch_depth,
        trees,
        answers,
        call_set_sample: calls.iter().map(display_atom_generic).collect(),
    }
}

fn mode_string(name: &str, modes: &[Mode]) -> String {
    if modes.is_empty() {
        return name.to_string();
    }
    let ms: Vec<&str> =
        modes.iter().map(|m| if *m == Mode::In { "i" } else { "o" }).collect();
    format!("{}({})", name, ms.join(","))
}

fn mode_violations(kind: &str, rep: &ModeReport, out: &mut Vec<String>) {
    let scopes = [("clause", &rep.clauses), ("query", &rep.queries)];
    for (scope, verdicts) in scopes {
        for (i, v) in verdicts.iter().enumerate() {
            for viol in &v.violations {
                out.push(format!(
                    "{kind}: {scope} {}, atom {}: {}",
                    i + 1,
                    viol.atom_index,
                    viol.reason
                ));
            }
        }
    }
}

/// Assemble the `check` document. `quasi` and `lg` come from the prover;
/// the analysis sections and the per-query runs are computed here.
pub fn build_report(
    file: &str,
    p: &Program,
    quasi: &ProofReport,
    lg: &ProofReport,
    budget: &Budget,
    occurs_check: bool,
) -> ReportDoc {
    let program = ProgramDoc {
        clauses: p.clauses.len(),
        predicates: p.preds.iter().map(|k| k.to_string()).collect(),
        tabled: p.effective_tabling().iter().map(|k| k.to_string()).collect(),
        queries: p.queries.iter().map(query_string).collect(),
        warnings: p.warnings.clone(),
    };

    let wm = check_well_moded(p);
    let sm = check_simply_moded(p);
    let mut violations = Vec::new();
    mode_violations("well-moded", &wm, &mut violations);
    mode_violations("simply-moded", &sm, &mut violations);
    let modes = ModesDoc {
        declared: p
            .modes
            .iter()
            .map(|(k, m)| (k.to_string(), mode_string(&k.name, m)))
            .collect(),
        well_moded: wm.ok,
        simply_moded: sm.ok,
        violations,
    };

    let g = build_dep_graph(p);
    let well_chosen = match check_well_chosen(&g, &p.effective_tabling()) {
        Ok(rep) => WellChosenDoc {
            ok: rep.well_chosen,
            witness: rep.witness.map(|(a, b)| format!("{a}, {b}")),
            error: None,
        },
        Err(e) => {
            WellChosenDoc { ok: false, witness: None, error: Some(e.to_string()) }
        }
    };

    let runs =
        p.queries.iter().map(|q| run_doc(p, q, budget, occurs_check)).collect();

    ReportDoc {
        schema: SCHEMA_VERSION,
        file: file.to_string(),
        program,
        modes,
        well_chosen,
        quasi: GoalDoc::from_proof(quasi),
        lg: GoalDoc::from_proof(lg),
        runs,
        timing_ms: 0,
    }
}
