//! Probabilistic timed automata: domain types, the textual model language
//! and the static checks run before any analysis.

mod parse;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::dbm::{Bound, Constraint};

pub use parse::{parse_model, ParseError, ParseErrorKind};
pub use validate::{validate, Severity, Violation};

pub type LocationId = usize;
pub type EdgeId = usize;

/// A model clock. Index 0 is the reference clock `x0`; user clocks are
/// numbered from 1 in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClockId {
    pub index: usize,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Lt,
    Le,
    Ge,
    Gt,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }

    pub fn is_upper(self) -> bool {
        matches!(self, Relation::Lt | Relation::Le)
    }
}

/// `left - right ~ bound`, where `right == 0` stands for the reference clock.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AtomicConstraint {
    pub left: usize,
    pub right: usize,
    pub relation: Relation,
    pub bound: i64,
}

impl AtomicConstraint {
    pub fn simple(clock: usize, relation: Relation, bound: i64) -> Self {
        AtomicConstraint {
            left: clock,
            right: 0,
            relation,
            bound,
        }
    }

    pub fn to_dbm(&self) -> Constraint {
        let (l, r, c) = (self.left, self.right, self.bound);
        match self.relation {
            Relation::Le => Constraint::new(l, r, Bound::le(c)),
            Relation::Lt => Constraint::new(l, r, Bound::lt(c)),
            Relation::Ge => Constraint::new(r, l, Bound::le(-c)),
            Relation::Gt => Constraint::new(r, l, Bound::lt(-c)),
        }
    }

    pub fn clocks(&self) -> impl Iterator<Item = usize> {
        [self.left, self.right].into_iter().filter(|&c| c != 0)
    }

    /// Positive lower bound on a single clock (`x >= c` with `c > 0`, or `x > c`).
    pub fn positive_lower_bound(&self) -> Option<usize> {
        if self.right != 0 {
            return None;
        }
        match self.relation {
            Relation::Ge if self.bound > 0 => Some(self.left),
            Relation::Gt if self.bound >= 0 => Some(self.left),
            _ => None,
        }
    }
}

/// A conjunction of atomic constraints; the empty conjunction is `true`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Conjunction {
    pub conjuncts: Vec<AtomicConstraint>,
}

pub type Guard = Conjunction;
pub type Invariant = Conjunction;

impl Conjunction {
    pub fn is_true(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn dbm_constraints(&self) -> impl Iterator<Item = Constraint> + '_ {
        self.conjuncts.iter().map(AtomicConstraint::to_dbm)
    }

    pub fn clocks(&self) -> impl Iterator<Item = usize> + '_ {
        self.conjuncts.iter().flat_map(AtomicConstraint::clocks)
    }

    pub fn has_upper_bound(&self) -> bool {
        self.conjuncts
            .iter()
            .any(|c| c.right == 0 && c.relation.is_upper())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Location {
    pub name: String,
    pub labels: Vec<String>,
    pub invariant: Invariant,
    pub initial: bool,
    pub is_final: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub source: LocationId,
    pub action: String,
    pub guard: Guard,
    pub resets: Vec<usize>,
    pub target: LocationId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pta {
    pub name: String,
    /// User clock names; clock `i` (1-based) is `clocks[i - 1]`.
    pub clocks: Vec<String>,
    pub locations: Vec<Location>,
    pub edges: Vec<Edge>,
}

impl Pta {
    pub fn clock_count(&self) -> usize {
        self.clocks.len()
    }

    pub fn clock(&self, index: usize) -> Option<ClockId> {
        index
            .checked_sub(1)
            .and_then(|i| self.clocks.get(i))
            .map(|name| ClockId {
                index,
                name: name.clone(),
            })
    }

    pub fn clock_index(&self, name: &str) -> Option<usize> {
        self.clocks.iter().position(|c| c == name).map(|i| i + 1)
    }

    pub fn location_index(&self, name: &str) -> Option<LocationId> {
        self.locations.iter().position(|l| l.name == name)
    }

    pub fn initial(&self) -> Option<LocationId> {
        self.locations.iter().position(|l| l.initial)
    }

    /// Outgoing edges in declaration order.
    pub fn out_edges(&self, loc: LocationId) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.source == loc)
    }

    pub fn clock_names(&self) -> Vec<&str> {
        self.clocks.iter().map(String::as_str).collect()
    }

    pub fn is_acyclic(&self) -> bool {
        enumerate_cycles(self, 1).is_empty()
    }
}

/// A simple cycle of the location graph: `edges[b]` leads from
/// `locations[b]` to `locations[(b + 1) % len]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle {
    pub locations: Vec<LocationId>,
    pub edges: Vec<EdgeId>,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// The same cycle starting at `head`.
    pub fn rotated_to(&self, head: LocationId) -> Option<Cycle> {
        let pos = self.locations.iter().position(|&l| l == head)?;
        let mut locations = self.locations.clone();
        let mut edges = self.edges.clone();
        locations.rotate_left(pos);
        edges.rotate_left(pos);
        Some(Cycle { locations, edges })
    }

    pub fn sigma(&self, pta: &Pta) -> f64 {
        self.edges.iter().map(|&e| pta.edges[e].weight).product()
    }
}

/// Enumerates simple cycles of the edge multigraph (parallel edges give
/// distinct cycles), stopping after `limit` cycles.
pub fn enumerate_cycles(pta: &Pta, limit: usize) -> Vec<Cycle> {
    fn dfs(
        pta: &Pta,
        start: LocationId,
        v: LocationId,
        on_path: &mut Vec<bool>,
        path: &mut Vec<EdgeId>,
        out: &mut Vec<Cycle>,
        limit: usize,
    ) {
        for e in pta.out_edges(v) {
            if out.len() >= limit {
                return;
            }
            let w = e.target;
            if w < start {
                continue;
            }
            path.push(e.id);
            if w == start {
                let locations = path.iter().map(|&id| pta.edges[id].source).collect();
                out.push(Cycle {
                    locations,
                    edges: path.clone(),
                });
            } else if !on_path[w] {
                on_path[w] = true;
                dfs(pta, start, w, on_path, path, out, limit);
                on_path[w] = false;
            }
            path.pop();
        }
    }

    let mut out = Vec::new();
    let mut on_path = vec![false; pta.locations.len()];
    for start in 0..pta.locations.len() {
        on_path[start] = true;
        dfs(pta, start, start, &mut on_path, &mut Vec::new(), &mut out, limit);
        on_path[start] = false;
        if out.len() >= limit {
            break;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("location {0} lies on more than one simple cycle")]
    NotFlat(String),
    #[error("locations {0:?} do not form a cycle")]
    NotACycle(Vec<LocationId>),
}

/// Cycle membership of every location of a flat automaton.
#[derive(Debug, Clone)]
pub struct CycleIndex {
    cycles: Vec<Cycle>,
    membership: Vec<Option<(usize, usize)>>,
}

impl CycleIndex {
    pub fn new(pta: &Pta) -> Result<Self, ModelError> {
        let cycles = enumerate_cycles(pta, 10_000);
        let mut membership = vec![None; pta.locations.len()];
        for (ci, cycle) in cycles.iter().enumerate() {
            for (pos, &loc) in cycle.locations.iter().enumerate() {
                if membership[loc].is_some() {
                    return Err(ModelError::NotFlat(pta.locations[loc].name.clone()));
                }
                membership[loc] = Some((ci, pos));
            }
        }
        Ok(CycleIndex { cycles, membership })
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    pub fn cycle_of(&self, loc: LocationId) -> Option<usize> {
        self.membership[loc].map(|(c, _)| c)
    }

    pub fn cycle(&self, id: usize) -> &Cycle {
        &self.cycles[id]
    }

    /// The edge that continues the cycle from `loc`, if `loc` is on one.
    pub fn cycle_edge_from(&self, loc: LocationId) -> Option<EdgeId> {
        self.membership[loc].map(|(c, pos)| self.cycles[c].edges[pos])
    }

    pub fn is_cycle_edge(&self, edge: &Edge) -> bool {
        self.cycle_edge_from(edge.source) == Some(edge.id)
    }
}

/// Clocks that can influence the evolution of a cycle: those read by an
/// invariant of a cycle location or a guard of a cycle edge. Resets only
/// assign zero, so no clock inherits a value from another.
pub fn active_clocks(pta: &Pta, cycle_locations: &[LocationId]) -> Result<BTreeSet<usize>, ModelError> {
    let not_cycle = || ModelError::NotACycle(cycle_locations.to_vec());
    if cycle_locations.is_empty() || cycle_locations.iter().any(|&l| l >= pta.locations.len()) {
        return Err(not_cycle());
    }
    let mut active = BTreeSet::new();
    let m = cycle_locations.len();
    for (b, &loc) in cycle_locations.iter().enumerate() {
        let next = cycle_locations[(b + 1) % m];
        let mut linked = false;
        for e in pta.out_edges(loc).filter(|e| e.target == next) {
            linked = true;
            active.extend(e.guard.clocks());
        }
        if !linked {
            return Err(not_cycle());
        }
        active.extend(pta.locations[loc].invariant.clocks());
    }
    Ok(active)
}

fn write_conjunction(f: &mut fmt::Formatter<'_>, pta: &Pta, c: &Conjunction) -> fmt::Result {
    for (i, a) in c.conjuncts.iter().enumerate() {
        if i > 0 {
            f.write_str(" & ")?;
        }
        f.write_str(&pta.clocks[a.left - 1])?;
        if a.right != 0 {
            write!(f, " - {}", pta.clocks[a.right - 1])?;
        }
        write!(f, " {} {}", a.relation.symbol(), a.bound)?;
    }
    Ok(())
}

fn write_clock_list(f: &mut fmt::Formatter<'_>, pta: &Pta, clocks: &[usize]) -> fmt::Result {
    for (i, &c) in clocks.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        f.write_str(&pta.clocks[c - 1])?;
    }
    Ok(())
}

/// Prints the automaton in the model language accepted by [`parse_model`].
impl fmt::Display for Pta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pta \"{}\"", self.name)?;
        if !self.clocks.is_empty() {
            writeln!(f, "clocks {}", self.clocks.join(", "))?;
        }
        for loc in &self.locations {
            write!(f, "location {}", loc.name)?;
            if loc.initial {
                f.write_str(" initial")?;
            }
            if loc.is_final {
                f.write_str(" final")?;
            }
            for label in &loc.labels {
                write!(f, " label {label}")?;
            }
            if !loc.invariant.is_true() {
                f.write_str(" invariant ")?;
                write_conjunction(f, self, &loc.invariant)?;
            }
            writeln!(f)?;
        }
        for e in &self.edges {
            write!(
                f,
                "edge {} -> {} action {}",
                self.locations[e.source].name, self.locations[e.target].name, e.action
            )?;
            if !e.guard.is_true() {
                f.write_str(" guard ")?;
                write_conjunction(f, self, &e.guard)?;
            }
            if !e.resets.is_empty() {
                f.write_str(" reset ")?;
                write_clock_list(f, self, &e.resets)?;
            }
            writeln!(f, " weight {}", e.weight)?;
        }
        Ok(())
    }
}
