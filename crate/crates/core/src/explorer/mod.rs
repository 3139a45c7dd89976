//! Symbolic successors, the non-accelerated reference exploration, subrun
//! utilities and a Monte Carlo simulator.

mod baseline;
mod simulate;
mod subrun;

use serde::{Deserialize, Serialize};

use crate::dbm::{clk_advance, Dbm, DbmError};
use crate::error::{AnalysisError, Result};
use crate::model::{CycleIndex, Edge, EdgeId, LocationId, Pta};

pub(crate) use baseline::traversal_exits;
pub use baseline::{check_termination, wcet_baseline, wcet_baseline_with, BaselineOptions};
pub use simulate::{simulate, simulate_with, SimOptions, SimStats};
pub use subrun::{enumerate_subruns, path_expectation, subrun_maxdelay, Subrun, SubrunStep};

/// Probabilities within this relative distance above the cutoff count as
/// having reached it, so decimal weights like `0.001 * 0.001` hit `1e-6`.
const CUTOFF_SLACK: f64 = 1e-9;

/// True when `p` is at or below the approximation bound `delta`.
pub fn negligible(p: f64, delta: f64) -> bool {
    p <= delta * (1.0 + CUTOFF_SLACK)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Unvisited,
    InProgress,
    Finished,
}

/// A node of the zone graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SymState {
    pub loc: LocationId,
    pub zone: Dbm,
    /// Probability of reaching this state.
    pub alpha: f64,
    pub sts: Status,
    /// Completed iterations of the cycle currently being traversed.
    pub cnt: u64,
    /// Location at which the current cycle was entered.
    pub head: Option<LocationId>,
    /// Edge that produced this state.
    pub via: Option<EdgeId>,
}

impl SymState {
    pub fn initial(pta: &Pta, index: &CycleIndex) -> Result<SymState> {
        let loc = pta.initial().ok_or(AnalysisError::NoInitialLocation)?;
        let zone = Dbm::zero(pta.clock_count()).conjoin(pta.locations[loc].invariant.dbm_constraints());
        Ok(SymState {
            loc,
            zone,
            alpha: 1.0,
            sts: Status::Unvisited,
            cnt: 0,
            head: index.cycle_of(loc).map(|_| loc),
            via: None,
        })
    }
}

/// Zone reached by letting time pass in `zone` at the source of `edge` and
/// then taking it; `None` when the edge is disabled.
pub fn succ_zone(zone: &Dbm, edge: &Edge, pta: &Pta) -> Option<Dbm> {
    let inv = &pta.locations[edge.source].invariant;
    let z = zone
        .clone()
        .conjoin(inv.dbm_constraints())
        .up()
        .conjoin(inv.dbm_constraints())
        .conjoin(edge.guard.dbm_constraints());
    if z.is_empty() {
        return None;
    }
    let z = z
        .reset(&edge.resets)
        .expect("model clocks are never CLK")
        .close()
        .conjoin(pta.locations[edge.target].invariant.dbm_constraints());
    (!z.is_empty()).then_some(z)
}

/// Position of a successor relative to the cycle structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleStep {
    pub head: Option<LocationId>,
    pub cnt: u64,
    /// The edge returns to the location where the cycle was entered.
    pub closes_iteration: bool,
}

pub fn cycle_step(index: &CycleIndex, from: &SymState, edge: &Edge) -> CycleStep {
    if index.is_cycle_edge(edge) {
        let head = from.head.unwrap_or(edge.source);
        if edge.target == head {
            return CycleStep {
                head: Some(head),
                cnt: from.cnt + 1,
                closes_iteration: true,
            };
        }
        return CycleStep {
            head: Some(head),
            cnt: from.cnt,
            closes_iteration: false,
        };
    }
    CycleStep {
        head: index.cycle_of(edge.target).map(|_| edge.target),
        cnt: 0,
        closes_iteration: false,
    }
}

/// Successor of `s` along `e`. The cycle counter is carried over unchanged;
/// callers apply [`cycle_step`].
pub fn succ(s: &SymState, e: &Edge, pta: &Pta) -> Result<SymState, SuccError> {
    let zone = succ_zone(&s.zone, e, pta).ok_or(SuccError::EdgeDisabled)?;
    Ok(SymState {
        loc: e.target,
        zone,
        alpha: s.alpha * e.weight,
        sts: Status::Unvisited,
        cnt: s.cnt,
        head: s.head,
        via: Some(e.id),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SuccError {
    #[error("edge disabled: the successor zone is empty")]
    EdgeDisabled,
}

/// Longest delay on the step between two zones, with the failure mapped
/// to the location where time could grow without bound.
pub(crate) fn step_delay(pta: &Pta, from: &SymState, to: &Dbm) -> Result<f64> {
    clk_advance(&from.zone, to).map_err(|e| match e {
        DbmError::UnboundedDelay => AnalysisError::WcetUnbounded {
            location: pta.locations[from.loc].name.clone(),
        },
        other => other.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbm::Bound;
    use crate::model::parse_model;

    fn example1() -> Pta {
        parse_model(include_str!("../../models/example1.pta")).unwrap()
    }

    #[test]
    fn example1_first_step() {
        let pta = example1();
        let idx = CycleIndex::new(&pta).unwrap();
        let s0 = SymState::initial(&pta, &idx).unwrap();
        let s1 = succ(&s0, &pta.edges[0], &pta).unwrap();
        assert_eq!(pta.locations[s1.loc].name, "l1");
        assert_eq!(s1.zone.clk_upper(), Ok(5));
        assert_eq!(s1.alpha, 0.4);
        let s2 = succ(&s1, &pta.edges[2], &pta).unwrap();
        assert_eq!(s2.alpha, 0.4);
        assert_eq!(step_delay(&pta, &s1, &s2.zone).unwrap(), 10.0);
    }

    #[test]
    fn guard_beyond_invariant_disables_edge() {
        let pta = parse_model(
            "clocks x\nlocation A initial invariant x <= 5\nlocation B final\nedge A -> B guard x >= 9 weight 1\n",
        )
        .unwrap();
        let idx = CycleIndex::new(&pta).unwrap();
        let s0 = SymState::initial(&pta, &idx).unwrap();
        assert_eq!(succ(&s0, &pta.edges[0], &pta), Err(SuccError::EdgeDisabled));
    }

    #[test]
    fn geometric_loop_context() {
        let pta = parse_model(include_str!("../../models/geometric_c.pta")).unwrap();
        let idx = CycleIndex::new(&pta).unwrap();
        let s0 = SymState::initial(&pta, &idx).unwrap();
        assert_eq!(s0.head, Some(0));
        let step = cycle_step(&idx, &s0, &pta.edges[0]);
        assert!(step.closes_iteration);
        assert_eq!(step.cnt, 1);
        let exit = cycle_step(&idx, &s0, &pta.edges[1]);
        assert_eq!(exit, CycleStep { head: None, cnt: 0, closes_iteration: false });
        let s1 = succ(&s0, &pta.edges[0], &pta).unwrap();
        assert_eq!(s1.zone.upper(1), Bound::LE_ZERO);
        assert_eq!(s1.zone.clk_upper(), Ok(1));
    }

    #[test]
    fn cutoff_absorbs_decimal_noise() {
        assert!(negligible(0.001 * 0.001, 1e-6));
        assert!(!negligible(1.01e-6, 1e-6));
        assert!(negligible(0.5e-6, 1e-6));
    }
}
