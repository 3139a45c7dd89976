//! Analysis results and their JSON, text and Graphviz renderings.

use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::accel::{AccelRecord, CycleClass};
use crate::explorer::SymState;
use crate::model::Pta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Baseline,
    Accelerated,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Accelerated => "accelerated",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub model: String,
    pub mode: Mode,
    pub delta: f64,
    pub wcet: f64,
    pub states_explored: u64,
    pub accel_records: Vec<AccelRecord>,
    /// Sum of `(n - k) * m` over accelerated cycles: the number of states
    /// the acceleration predicts it saved.
    pub rg: u64,
    pub terminated: bool,
    pub wall_time: Duration,
    pub graph: Option<ZoneGraph>,
}

impl Report {
    pub fn to_doc(&self) -> ReportDoc {
        ReportDoc {
            model: self.model.clone(),
            mode: self.mode,
            delta: self.delta,
            wcet: self.wcet,
            states_explored: self.states_explored,
            rg: self.rg,
            terminated: self.terminated,
            cycles: self.accel_records.iter().map(CycleDoc::from).collect(),
        }
    }
}

/// Serializable view of a [`Report`]; field order fixes the JSON key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub model: String,
    pub mode: Mode,
    pub delta: f64,
    pub wcet: f64,
    pub states_explored: u64,
    pub rg: u64,
    pub terminated: bool,
    pub cycles: Vec<CycleDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleDoc {
    pub locations: Vec<String>,
    pub class: String,
    pub period: u64,
    pub sigma: f64,
    pub initial_prob: f64,
    pub k: u64,
    pub n: u64,
    pub contribution: f64,
    pub residual: f64,
    pub n_printed: f64,
    pub final_states: u64,
}

impl From<&AccelRecord> for CycleDoc {
    fn from(r: &AccelRecord) -> Self {
        CycleDoc {
            locations: r.cycle_locations.clone(),
            class: match r.class {
                CycleClass::Constant => "constant".into(),
                CycleClass::Periodic(_) => "periodic".into(),
            },
            period: r.class.period(),
            sigma: r.sigma,
            initial_prob: r.initial_prob,
            k: r.k,
            n: r.n,
            contribution: r.contribution,
            residual: r.residual,
            n_printed: r.n_printed,
            final_states: r.final_states.len() as u64,
        }
    }
}

/// Baseline and accelerated results for the same model and cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonDoc {
    pub baseline: ReportDoc,
    pub accelerated: ReportDoc,
    pub wcet_rel_diff: f64,
    pub rg_observed: i64,
    pub rg_formula: u64,
    pub rg_formula_check: bool,
}

impl ComparisonDoc {
    pub fn new(baseline: &Report, accelerated: &Report) -> Self {
        let observed = baseline.states_explored as i64 - accelerated.states_explored as i64;
        let scale = baseline.wcet.abs().max(f64::MIN_POSITIVE);
        ComparisonDoc {
            baseline: baseline.to_doc(),
            accelerated: accelerated.to_doc(),
            wcet_rel_diff: (baseline.wcet - accelerated.wcet).abs() / scale,
            rg_observed: observed,
            rg_formula: accelerated.rg,
            rg_formula_check: observed == accelerated.rg as i64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

pub fn emit_report(report: &Report, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(&report.to_doc()).expect("report is serializable"),
        Format::Text => text(report),
    }
}

pub fn emit_comparison(cmp: &ComparisonDoc, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(cmp).expect("report is serializable"),
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "baseline:    wcet {:.9} over {} states", cmp.baseline.wcet, cmp.baseline.states_explored);
            let _ = writeln!(
                s,
                "accelerated: wcet {:.9} over {} states",
                cmp.accelerated.wcet, cmp.accelerated.states_explored
            );
            let _ = writeln!(s, "relative wcet difference: {:e}", cmp.wcet_rel_diff);
            let _ = writeln!(
                s,
                "states saved: {} observed, {} predicted ({})",
                cmp.rg_observed,
                cmp.rg_formula,
                if cmp.rg_formula_check { "match" } else { "MISMATCH" }
            );
            s
        }
    }
}

fn text(r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model:      {}", r.model);
    let _ = writeln!(s, "mode:       {}", r.mode.as_str());
    let _ = writeln!(s, "delta:      {:e}", r.delta);
    let _ = writeln!(s, "wcet:       {:.9}", r.wcet);
    let _ = writeln!(s, "states:     {}", r.states_explored);
    let _ = writeln!(s, "terminated: {}", r.terminated);
    if r.mode == Mode::Accelerated {
        let _ = writeln!(s, "saved:      {}", r.rg);
    }
    let _ = writeln!(s, "time:       {:.3}s", r.wall_time.as_secs_f64());
    for c in &r.accel_records {
        let _ = writeln!(
            s,
            "cycle {}: {:?} sigma={} I={} k={} n={} contribution={:.9} residual={:e}",
            c.cycle_locations.join(" -> "),
            c.class,
            c.sigma,
            c.initial_prob,
            c.k,
            c.n,
            c.contribution,
            c.residual
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNode {
    pub location: String,
    pub zone: String,
    pub alpha: f64,
    pub cnt: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub label: String,
    /// Set on the edge standing for an accelerated cycle: `(n, k, contribution)`.
    pub collapsed: Option<(u64, u64, f64)>,
}

/// The explored part of the zone graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ZoneGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl ZoneGraph {
    pub fn add_node(&mut self, pta: &Pta, s: &SymState) -> usize {
        let names = pta.clock_names();
        self.nodes.push(GraphNode {
            location: pta.locations[s.loc].name.clone(),
            zone: s.zone.render(&names),
            alpha: s.alpha,
            cnt: s.cnt,
        });
        self.nodes.len() - 1
    }

    pub fn add_edge(&mut self, from: usize, to: usize, label: impl Into<String>) {
        self.edges.push(GraphEdge {
            from,
            to,
            label: label.into(),
            collapsed: None,
        });
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn emit_dot(graph: &ZoneGraph) -> String {
    let mut s = String::from("digraph zone_graph {\n  node [shape=record];\n");
    for (i, n) in graph.nodes.iter().enumerate() {
        let label = format!("{} | {} | {} | {}", n.location, n.zone, n.alpha, n.cnt);
        let _ = writeln!(s, "  n{i} [label=\"{{{}}}\"];", escape(&label).replace('<', "\\<").replace('>', "\\>"));
    }
    for e in &graph.edges {
        match e.collapsed {
            Some((n, k, c)) => {
                let _ = writeln!(
                    s,
                    "  n{} -> n{} [style=bold, label=\"{} x(n={n}, k={k}, contribution={c})\"];",
                    e.from,
                    e.to,
                    escape(&e.label)
                );
            }
            None => {
                let _ = writeln!(s, "  n{} -> n{} [label=\"{}\"];", e.from, e.to, escape(&e.label));
            }
        }
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_is_just_a_header() {
        let dot = emit_dot(&ZoneGraph::default());
        assert!(dot.starts_with("digraph"));
        assert!(!dot.contains("->"));
    }

    #[test]
    fn collapsed_edge_is_bold() {
        let mut g = ZoneGraph::default();
        g.nodes.push(GraphNode {
            location: "Start".into(),
            zone: "x<=1".into(),
            alpha: 0.999,
            cnt: 1,
        });
        g.edges.push(GraphEdge {
            from: 0,
            to: 0,
            label: "step".into(),
            collapsed: Some((13809, 2, 998.0)),
        });
        let dot = emit_dot(&g);
        assert!(dot.contains("n0 -> n0 [style=bold"));
        assert!(dot.contains("n=13809"));
        assert!(dot.contains("x\\<=1"));
    }
}
