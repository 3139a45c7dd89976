use super::{CycleClass, FixedPoint};
use crate::dbm::{clk_advance, Dbm, DbmError};
use crate::error::{AnalysisError, Result};
use crate::model::Pta;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayTerm {
    /// Product of the cycle edge weights before this step.
    pub prefix_product: f64,
    pub t_max: f64,
}

/// Expected delay of the iterations of a cycle: iteration `a` contributes
/// `ℐ σ^a Σ_b prefix_b T_b` using the terms of phase `a mod phases.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayFormula {
    pub sigma: f64,
    pub initial_prob: f64,
    pub phases: Vec<Vec<DelayTerm>>,
}

impl DelayFormula {
    pub fn phase_delay(&self, phase: usize) -> f64 {
        self.phases[phase % self.phases.len()]
            .iter()
            .map(|t| t.prefix_product * t.t_max)
            .sum()
    }

    /// The same cycle entered later with probability `initial_prob`, with
    /// phase numbering unchanged.
    pub fn with_initial_prob(&self, initial_prob: f64) -> DelayFormula {
        DelayFormula {
            initial_prob,
            ..self.clone()
        }
    }
}

/// Builds the delay formula from the zones of one period of the cycle:
/// `zone_history[φ m + b]` is the zone at position `b` of phase `φ`, and the
/// history ends with the zone that closed the last phase.
pub fn synth_formula(fp: &FixedPoint, class: CycleClass, pta: &Pta, zone_history: &[Dbm]) -> Result<DelayFormula> {
    let m = fp.cycle_edges.len();
    let weights: Vec<f64> = fp.cycle_edges.iter().map(|&e| pta.edges[e].weight).collect();
    let sigma: f64 = weights.iter().product();
    let phases = match class {
        CycleClass::Constant => 1,
        CycleClass::Periodic(k) => k as usize,
    };
    if m == 0 || zone_history.len() < phases * m + 1 {
        return Err(AnalysisError::Usage(format!(
            "zone history of {} zones is too short for {phases} phase(s) of a {m}-step cycle",
            zone_history.len()
        )));
    }
    let mut out = Vec::with_capacity(phases);
    for phase in 0..phases {
        let mut prefix = 1.0;
        let mut terms = Vec::with_capacity(m);
        for (b, w) in weights.iter().enumerate() {
            let i = phase * m + b;
            let t_max = clk_advance(&zone_history[i], &zone_history[i + 1]).map_err(|e| match e {
                DbmError::UnboundedDelay => AnalysisError::WcetUnbounded {
                    location: pta.locations[fp.cycle_locations[b]].name.clone(),
                },
                other => other.into(),
            })?;
            terms.push(DelayTerm {
                prefix_product: prefix,
                t_max,
            });
            prefix *= w;
        }
        out.push(terms);
    }
    Ok(DelayFormula {
        sigma,
        initial_prob: fp.initial_prob,
        phases: out,
    })
}

/// `Σ_{i<count} r^i`.
fn geometric(r: f64, count: u64) -> f64 {
    if count == 0 {
        return 0.0;
    }
    if r == 0.0 {
        return 1.0;
    }
    -((count as f64) * r.ln()).exp_m1() / (1.0 - r)
}

/// Sum of the formula over iterations `0..=n`.
pub fn eval_formula(f: &DelayFormula, n: u64) -> f64 {
    let p = f.phases.len() as u64;
    let stride = f.sigma.powf(p as f64);
    let mut total = 0.0;
    for r in 0..p.min(n + 1) {
        let count = (n - r) / p + 1;
        total += f.phase_delay(r as usize) * f.sigma.powf(r as f64) * geometric(stride, count);
    }
    f.initial_prob * total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(sigma: f64, ip: f64, terms: &[(f64, f64)]) -> DelayFormula {
        DelayFormula {
            sigma,
            initial_prob: ip,
            phases: vec![terms
                .iter()
                .map(|&(prefix_product, t_max)| DelayTerm { prefix_product, t_max })
                .collect()],
        }
    }

    fn naive(f: &DelayFormula, n: u64) -> f64 {
        (0..=n)
            .map(|a| f.initial_prob * f.sigma.powf(a as f64) * f.phase_delay(a as usize))
            .sum()
    }

    #[test]
    fn short_geometric_cycle() {
        let f = constant(0.001, 0.001, &[(1.0, 1.0)]);
        let v = eval_formula(&f, 2);
        assert!((v - 0.001001001).abs() < 1e-15, "{v}");
    }

    #[test]
    fn long_geometric_cycle() {
        let f = constant(0.999, 0.999, &[(1.0, 1.0)]);
        let v = eval_formula(&f, 13809);
        assert!((v - 998.999).abs() < 1e-3, "{v}");
        assert!((v - naive(&f, 13809)).abs() <= 1e-9 * v);
    }

    #[test]
    fn single_pass() {
        let f = constant(0.9, 0.5, &[(1.0, 2.0), (0.9, 3.0)]);
        assert!((eval_formula(&f, 0) - 0.5 * (2.0 + 2.7)).abs() < 1e-15);
    }

    #[test]
    fn zero_delay_cycle() {
        let f = constant(0.5, 1.0, &[(1.0, 0.0)]);
        assert_eq!(eval_formula(&f, 100), 0.0);
    }

    #[test]
    fn periodic_phases() {
        let f = DelayFormula {
            sigma: 0.8,
            initial_prob: 1.0,
            phases: vec![
                vec![DelayTerm { prefix_product: 1.0, t_max: 1.0 }],
                vec![DelayTerm { prefix_product: 1.0, t_max: 4.0 }],
                vec![DelayTerm { prefix_product: 1.0, t_max: 2.0 }],
            ],
        };
        for n in [0, 1, 2, 3, 7, 50] {
            let (a, b) = (eval_formula(&f, n), naive(&f, n));
            assert!((a - b).abs() <= 1e-12 * b, "{n}: {a} vs {b}");
        }
    }
}
