use super::{step_delay, succ_zone, SymState};
use crate::error::{AnalysisError, Result};
use crate::model::{CycleIndex, EdgeId, LocationId, Pta};

#[derive(Debug, Clone, PartialEq)]
pub struct SubrunStep {
    /// Location the step leaves.
    pub location: LocationId,
    pub t_min: f64,
    pub t_max: f64,
    pub edge: EdgeId,
    pub probability: f64,
}

/// A symbolic path from the initial location.
#[derive(Debug, Clone, PartialEq)]
pub struct Subrun {
    pub steps: Vec<SubrunStep>,
    pub end: LocationId,
    pub ends_final: bool,
}

impl Subrun {
    pub fn probability(&self) -> f64 {
        self.steps.iter().map(|s| s.probability).product()
    }
}

/// `Σ_a (Π_{b<=a} p_b) * T_a^max` along the subrun.
pub fn subrun_maxdelay(r: &Subrun) -> Result<f64> {
    if !r.ends_final {
        return Err(AnalysisError::Usage(
            "subrun does not end in a final location".into(),
        ));
    }
    let mut prefix = 1.0;
    let mut total = 0.0;
    for s in &r.steps {
        prefix *= s.probability;
        total += prefix * s.t_max;
    }
    Ok(total)
}

/// Expected accumulated maximal delay, weighting each complete subrun once
/// by its probability.
pub fn path_expectation(runs: &[Subrun]) -> f64 {
    runs.iter()
        .map(|r| r.probability() * r.steps.iter().map(|s| s.t_max).sum::<f64>())
        .sum()
}

/// All maximal subruns of an acyclic automaton, in edge declaration order.
pub fn enumerate_subruns(pta: &Pta) -> Result<Vec<Subrun>> {
    if !pta.is_acyclic() {
        return Err(AnalysisError::Usage(
            "subrun enumeration needs an acyclic model".into(),
        ));
    }
    let index = CycleIndex::new(pta)?;
    let mut out = Vec::new();
    let mut steps = Vec::new();
    walk(pta, SymState::initial(pta, &index)?, &mut steps, &mut out)?;
    Ok(out)
}

fn walk(pta: &Pta, s: SymState, steps: &mut Vec<SubrunStep>, out: &mut Vec<Subrun>) -> Result<()> {
    let mut any = false;
    if !pta.locations[s.loc].is_final {
        for e in pta.out_edges(s.loc).filter(|e| e.weight > 0.0) {
            let Some(zone) = succ_zone(&s.zone, e, pta) else {
                continue;
            };
            any = true;
            let t_max = step_delay(pta, &s, &zone)?;
            let lower = |z: &crate::dbm::Dbm| {
                let clk = z.clk_index().expect("explored zones track CLK");
                z.lower(clk).value().map_or(0.0, |v| -v as f64)
            };
            steps.push(SubrunStep {
                location: s.loc,
                t_min: (lower(&zone) - lower(&s.zone)).max(0.0),
                t_max,
                edge: e.id,
                probability: e.weight,
            });
            let next = SymState {
                loc: e.target,
                zone,
                alpha: s.alpha * e.weight,
                via: Some(e.id),
                ..s.clone()
            };
            walk(pta, next, steps, out)?;
            steps.pop();
        }
    }
    if !any {
        out.push(Subrun {
            steps: steps.clone(),
            end: s.loc,
            ends_final: pta.locations[s.loc].is_final,
        });
    }
    Ok(())
}
