use std::collections::BTreeSet;
use std::fmt;

use super::{enumerate_cycles, LocationId, Pta};

const DISTRIBUTION_TOLERANCE: f64 = 1e-12;
const CYCLE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InitialLocationCount(usize),
    NotPurelyProbabilistic { location: String },
    WeightOutOfRange { edge: usize, weight: f64 },
    DistributionNotNormalized { location: String, sum: f64 },
    FlatnessViolated { location: String },
    UnboundedInvariant { location: String },
    FinalNotTimeLocked { location: String },
    PossiblyZeno { cycle: Vec<String> },
}

impl Violation {
    pub fn severity(&self) -> Severity {
        match self {
            Violation::UnboundedInvariant { .. } | Violation::PossiblyZeno { .. } => Severity::Warning,
            _ => Severity::Error,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity() == Severity::Error
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity() {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: ")?;
        match self {
            Violation::InitialLocationCount(n) => write!(f, "expected exactly one initial location, found {n}"),
            Violation::NotPurelyProbabilistic { location } => {
                write!(f, "location {location} offers more than one distribution")
            }
            Violation::WeightOutOfRange { edge, weight } => {
                write!(f, "edge {edge} has weight {weight} outside (0, 1]")
            }
            Violation::DistributionNotNormalized { location, sum } => {
                write!(f, "outgoing weights of {location} sum to {sum}")
            }
            Violation::FlatnessViolated { location } => {
                write!(f, "location {location} lies on more than one cycle")
            }
            Violation::UnboundedInvariant { location } => {
                write!(f, "location {location} has no invariant upper bound")
            }
            Violation::FinalNotTimeLocked { location } => {
                write!(f, "final location {location} has outgoing edges")
            }
            Violation::PossiblyZeno { cycle } => write!(
                f,
                "cycle {} resets no clock that a cycle guard bounds from below",
                cycle.join(" -> ")
            ),
        }
    }
}

/// Static checks on a parsed automaton. Guards and invariants are
/// conjunctions by construction, so convexity always holds.
pub fn validate(pta: &Pta) -> Vec<Violation> {
    let mut out = Vec::new();
    let name = |l: LocationId| pta.locations[l].name.clone();

    let initials = pta.locations.iter().filter(|l| l.initial).count();
    if initials != 1 {
        out.push(Violation::InitialLocationCount(initials));
    }

    for e in &pta.edges {
        if !(e.weight > 0.0 && e.weight <= 1.0) {
            out.push(Violation::WeightOutOfRange {
                edge: e.id,
                weight: e.weight,
            });
        }
    }

    for (l, loc) in pta.locations.iter().enumerate() {
        let outs: Vec<_> = pta.out_edges(l).collect();
        if loc.is_final && !outs.is_empty() {
            out.push(Violation::FinalNotTimeLocked { location: name(l) });
        }
        if let Some(first) = outs.first() {
            if outs
                .iter()
                .any(|e| e.action != first.action || e.guard != first.guard)
            {
                out.push(Violation::NotPurelyProbabilistic { location: name(l) });
            } else {
                let sum: f64 = outs.iter().map(|e| e.weight).sum();
                if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
                    out.push(Violation::DistributionNotNormalized { location: name(l), sum });
                }
            }
        }
        if !loc.is_final && !loc.invariant.has_upper_bound() {
            out.push(Violation::UnboundedInvariant { location: name(l) });
        }
    }

    let cycles = enumerate_cycles(pta, CYCLE_LIMIT);
    let mut count = vec![0usize; pta.locations.len()];
    for c in &cycles {
        for &l in &c.locations {
            count[l] += 1;
        }
    }
    for (l, &n) in count.iter().enumerate() {
        if n > 1 {
            out.push(Violation::FlatnessViolated { location: name(l) });
        }
    }

    for c in &cycles {
        let reset: BTreeSet<usize> = c
            .edges
            .iter()
            .flat_map(|&e| pta.edges[e].resets.iter().copied())
            .collect();
        let progresses = c.edges.iter().any(|&e| {
            pta.edges[e]
                .guard
                .conjuncts
                .iter()
                .filter_map(|a| a.positive_lower_bound())
                .any(|clock| reset.contains(&clock))
        });
        if !progresses {
            out.push(Violation::PossiblyZeno {
                cycle: c.locations.iter().map(|&l| name(l)).collect(),
            });
        }
    }
    out
}
