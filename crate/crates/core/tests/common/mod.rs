#![allow(dead_code)]

use proptest::prelude::*;
use pwcet_core::accel::{compute_n, eval_formula, reweight, DelayFormula, DelayTerm, FixedPoint};
use pwcet_core::dbm::{Bound, Constraint, Dbm};
use pwcet_core::explorer::{negligible, wcet_baseline_with, BaselineOptions, Status, SymState};
use pwcet_core::model::{parse_model, Pta};

pub const CLOCKS: usize = 2;

/// A difference constraint over `x0`, two user clocks and `CLK`.
pub fn constraint() -> impl Strategy<Value = Constraint> {
    (0..=CLOCKS + 1, 0..=CLOCKS + 1, -6i64..=12, any::<bool>())
        .prop_filter("diagonal entry", |(i, j, _, _)| i != j)
        .prop_map(|(i, j, v, strict)| Constraint::new(i, j, Bound::new(v, strict)))
}

/// Nonempty canonical zones, mostly non-trivial.
pub fn zone() -> impl Strategy<Value = Dbm> {
    prop::collection::vec(constraint(), 0..6)
        .prop_map(|cs| {
            let base = if cs.len() % 2 == 0 { Dbm::universe(CLOCKS) } else { Dbm::zero(CLOCKS).up() };
            base.conjoin(cs)
        })
        .prop_filter("nonempty", |z| !z.is_empty())
}

pub fn closure_is_idempotent(z: &Dbm) -> bool {
    let once = z.clone().close();
    once.clone().close() == once
}

pub fn conjoin_commutes(z: &Dbm, a: Constraint, b: Constraint) -> bool {
    let ab = z.clone().conjoin([a]).conjoin([b]);
    let ba = z.clone().conjoin([b]).conjoin([a]);
    ab.is_empty() && ba.is_empty() || ab == ba
}

/// A one-location cycle with `weights[0]` on the loop and the rest on exits.
pub fn loop_model(weights: &[f64]) -> String {
    let mut s = String::from("clocks x\nlocation A initial invariant x <= 1\n");
    for i in 1..weights.len() {
        s.push_str(&format!("location E{i} final\n"));
    }
    s.push_str(&format!("edge A -> A guard x >= 1 reset x weight {:e}\n", weights[0]));
    for (i, w) in weights.iter().enumerate().skip(1) {
        s.push_str(&format!("edge A -> E{i} guard x >= 1 weight {w:e}\n"));
    }
    s
}

/// Positive weights summing to one; the first belongs to the loop edge.
pub fn weight_vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 2..6).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        raw.iter().map(|w| w / total).collect()
    })
}

/// Total outgoing weight of the loop location after reweighting, minus one.
pub fn reweight_error(weights: &[f64]) -> f64 {
    let pta = parse_model(&loop_model(weights)).expect("generated model parses");
    let s = SymState {
        loc: 0,
        zone: Dbm::zero(1),
        alpha: 1.0,
        sts: Status::InProgress,
        cnt: 1,
        head: Some(0),
        via: Some(0),
    };
    let fp = FixedPoint {
        earlier: s.clone(),
        later: SymState { cnt: 2, ..s },
        cycle_locations: vec![0],
        cycle_edges: vec![0],
        initial_prob: 1.0,
        trace: Vec::new(),
    };
    let out = reweight(&pta, &fp).expect("loop has exits");
    assert_eq!(out.edges[0].weight, 0.0);
    let total: f64 = out.out_edges(0).map(|e| e.weight).sum();
    (total - 1.0).abs()
}

pub fn formula() -> impl Strategy<Value = DelayFormula> {
    (
        0.001f64..0.9995,
        0.01f64..=1.0,
        prop::collection::vec(prop::collection::vec((0.05f64..=1.0, 0.0f64..1e3), 1..4), 1..4),
    )
        .prop_map(|(sigma, initial_prob, phases)| DelayFormula {
            sigma,
            initial_prob,
            phases: phases
                .into_iter()
                .map(|p| p.into_iter().map(|(prefix_product, t_max)| DelayTerm { prefix_product, t_max }).collect())
                .collect(),
        })
}

pub fn naive_sum(f: &DelayFormula, n: u64) -> f64 {
    (0..=n)
        .map(|a| f.initial_prob * f.sigma.powi(a as i32) * f.phase_delay(a as usize))
        .sum()
}

pub fn closed_form_matches(f: &DelayFormula, n: u64) -> bool {
    let closed = eval_formula(f, n);
    let naive = naive_sum(f, n);
    (closed - naive).abs() <= 1e-9 * naive.abs().max(1e-300)
}

/// `ℐσⁿ ≤ Δ < ℐσⁿ⁻¹`, up to the relative slack of the cutoff test.
pub fn compute_n_post(sigma: f64, initial_prob: f64, delta: f64) -> bool {
    let n = compute_n(sigma, initial_prob, delta).expect("sigma below one");
    let r = |n: u64| initial_prob * sigma.powf(n as f64);
    negligible(r(n), delta) && (n == 0 || !negligible(r(n - 1), delta))
}

/// Along every explored path, a location revisited in a later iteration of
/// its cycle carries strictly less probability mass.
pub fn alpha_decreases(pta: &Pta, delta: f64) -> bool {
    let opts = BaselineOptions {
        capture_graph: true,
        ..Default::default()
    };
    let Ok(report) = wcet_baseline_with(pta, delta, &opts) else {
        return true;
    };
    let g = report.graph.expect("graph captured");
    let mut parent = vec![None; g.nodes.len()];
    for e in &g.edges {
        parent[e.to] = Some(e.from);
    }
    for (i, node) in g.nodes.iter().enumerate() {
        if node.cnt == 0 {
            continue;
        }
        let mut at = parent[i];
        while let Some(p) = at {
            let q = &g.nodes[p];
            if q.location == node.location && q.cnt < node.cnt {
                if node.alpha >= q.alpha || node.alpha.is_nan() {
                    return false;
                }
                break;
            }
            at = parent[p];
        }
    }
    true
}
