//! Cycle acceleration: fixed-point detection, delay formulas, iteration
//! counts, zone extrapolation and probability reweighting.

mod extrapolate;
mod formula;
mod reweight;

use serde::{Deserialize, Serialize};

use crate::error::{AnalysisError, Result};
use crate::explorer::{negligible, SymState};
use crate::model::{EdgeId, LocationId};

pub use extrapolate::{accelerate_zone_constant, accelerate_zone_periodic, periodic_precondition, AccelerationInconsistent};
pub use formula::{eval_formula, synth_formula, DelayFormula, DelayTerm};
pub use reweight::reweight;

/// Two visits of a cycle head whose zones agree on the active clocks.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub earlier: SymState,
    pub later: SymState,
    pub cycle_locations: Vec<LocationId>,
    pub cycle_edges: Vec<EdgeId>,
    /// Reach probability of the state at which the cycle was entered.
    pub initial_prob: f64,
    /// Explored states from `earlier` up to the parent of `later`.
    pub trace: Vec<SymState>,
}

impl FixedPoint {
    /// Iterations between the two matching visits.
    pub fn span(&self) -> u64 {
        self.later.cnt - self.earlier.cnt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleClass {
    Constant,
    Periodic(u64),
}

impl CycleClass {
    pub fn period(self) -> u64 {
        match self {
            CycleClass::Constant => 1,
            CycleClass::Periodic(k) => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccelRecord {
    pub cycle_locations: Vec<String>,
    pub class: CycleClass,
    pub sigma: f64,
    pub initial_prob: f64,
    pub k: u64,
    pub n: u64,
    /// Expected time added for the iterations that were not explored.
    pub contribution: f64,
    pub final_states: Vec<SymState>,
    /// Probability of still being in the cycle after `n` iterations.
    pub residual: f64,
    /// `ln Δ / ln(σ ℐ)`, which coincides with the ceiling-free `n` when `ℐ = 1`.
    pub n_printed: f64,
}

/// Looks for the most recent visit of `candidate.loc` in the current cycle
/// traversal whose zone matches on `active`. `passed` is the exploration
/// stack, ending with the parent of `candidate`. The state that entered the
/// cycle is never a match.
pub fn detect_cycle(candidate: &SymState, passed: &[SymState], active: &[usize]) -> Option<FixedPoint> {
    let head = candidate.head?;
    if candidate.loc != head || candidate.cnt == 0 {
        return None;
    }
    let target = candidate.zone.project_active(active);
    let mut found = None;
    let mut entry = None;
    for (i, s) in passed.iter().enumerate().rev() {
        if s.head != Some(head) {
            break;
        }
        if s.loc != head {
            continue;
        }
        if s.cnt == 0 {
            entry = Some(s.alpha);
            break;
        }
        if found.is_none() && s.cnt < candidate.cnt && s.zone.project_active(active) == target {
            found = Some(i);
        }
    }
    let (i, initial_prob) = (found?, entry?);
    let trace = passed[i..].to_vec();
    let m = trace[1..].iter().position(|s| s.loc == head).map_or(trace.len(), |p| p + 1);
    let cycle_locations = trace[..m].iter().map(|s| s.loc).collect();
    let mut cycle_edges: Vec<EdgeId> = trace[1..m].iter().filter_map(|s| s.via).collect();
    cycle_edges.push(trace.get(m).unwrap_or(candidate).via?);
    Some(FixedPoint {
        earlier: passed[i].clone(),
        later: candidate.clone(),
        cycle_locations,
        cycle_edges,
        initial_prob,
        trace,
    })
}

pub fn classify(fp: &FixedPoint) -> CycleClass {
    let span = fp.span();
    if fp.later.cnt <= 3 || span == 1 {
        CycleClass::Constant
    } else {
        CycleClass::Periodic(span)
    }
}

/// Smallest `n` with `ℐ σⁿ` at or below `delta`.
pub fn compute_n(sigma: f64, initial_prob: f64, delta: f64) -> Result<u64> {
    if sigma >= 1.0 {
        return Err(AnalysisError::NonConvergingCycle {
            cycle: Vec::new(),
            sigma,
        });
    }
    if sigma.is_nan() || sigma <= 0.0 || delta.is_nan() || delta <= 0.0 {
        return Err(AnalysisError::Usage(format!(
            "iteration count needs 0 < sigma < 1 and delta > 0, got sigma = {sigma}, delta = {delta}"
        )));
    }
    let residual = |n: u64| initial_prob * sigma.powf(n as f64);
    let mut n = ((delta / initial_prob).ln() / sigma.ln()).ceil().max(0.0) as u64;
    while n > 0 && negligible(residual(n - 1), delta) {
        n -= 1;
    }
    while !negligible(residual(n), delta) {
        n += 1;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbm::Dbm;
    use crate::explorer::Status;

    fn st(loc: LocationId, cnt: u64, upper: i64, alpha: f64) -> SymState {
        let zone = Dbm::zero(1).up().conjoin([crate::dbm::Constraint::upper(1, upper, false)]);
        SymState {
            loc,
            zone,
            alpha,
            sts: Status::InProgress,
            cnt,
            head: Some(0),
            via: Some(0),
        }
    }

    #[test]
    fn compute_n_examples() {
        assert_eq!(compute_n(0.001, 1.0, 1e-6).unwrap(), 2);
        assert_eq!(compute_n(0.999, 1.0, 1e-6).unwrap(), 13809);
        assert_eq!(compute_n(0.5, 2e-4, 1e-4).unwrap(), 1);
        assert!(matches!(compute_n(1.0, 1.0, 1e-6), Err(AnalysisError::NonConvergingCycle { .. })));
    }

    #[test]
    fn classify_examples() {
        let fp = |a: u64, b: u64| FixedPoint {
            earlier: st(0, a, 1, 1.0),
            later: st(0, b, 1, 1.0),
            cycle_locations: vec![0],
            cycle_edges: vec![0],
            initial_prob: 1.0,
            trace: vec![],
        };
        assert_eq!(classify(&fp(1, 2)), CycleClass::Constant);
        assert_eq!(classify(&fp(2, 5)), CycleClass::Periodic(3));
        assert_eq!(classify(&fp(0, 3)), CycleClass::Constant);
    }

    #[test]
    fn detection_skips_entry_state() {
        let entry = st(0, 0, 1, 1.0);
        let first = st(0, 1, 1, 0.9);
        // Matching zones, but the only earlier visit is the entry.
        assert!(detect_cycle(&first, std::slice::from_ref(&entry), &[1]).is_none());
        let second = st(0, 2, 1, 0.81);
        let fp = detect_cycle(&second, &[entry.clone(), first.clone()], &[1]).unwrap();
        assert_eq!((fp.earlier.cnt, fp.later.cnt), (1, 2));
        assert_eq!(fp.initial_prob, 1.0);
        assert_eq!(fp.cycle_locations, vec![0]);
        assert_eq!(fp.cycle_edges, vec![0]);
        let other = st(0, 2, 3, 0.81);
        assert!(detect_cycle(&other, &[entry, first], &[1]).is_none());
    }

    #[test]
    fn first_visit_is_not_a_fixed_point() {
        let mut s = st(0, 0, 1, 1.0);
        assert!(detect_cycle(&s, &[], &[1]).is_none());
        s.head = None;
        assert!(detect_cycle(&s, &[], &[1]).is_none());
    }
}
