use std::time::Instant;

use super::{cycle_step, negligible, step_delay, succ_zone, Status, SymState};
use crate::error::{AnalysisError, Result};
use crate::model::{CycleIndex, Pta};
use crate::report::{Mode, Report, ZoneGraph};

#[derive(Debug, Clone)]
pub struct BaselineOptions {
    pub max_states: u64,
    pub capture_graph: bool,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        BaselineOptions {
            max_states: 20_000_000,
            capture_graph: false,
        }
    }
}

pub fn wcet_baseline(pta: &Pta, delta: f64) -> Result<Report> {
    wcet_baseline_with(pta, delta, &BaselineOptions::default())
}

struct Frame {
    state: SymState,
    node: usize,
    children: Vec<(SymState, String)>,
    /// Some child leaves the cycle this state is on.
    exits: bool,
}

/// Unrolls every cycle until the probability of another iteration of its
/// head drops to `delta` or below.
pub fn wcet_baseline_with(pta: &Pta, delta: f64, opts: &BaselineOptions) -> Result<Report> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AnalysisError::InvalidDelta(delta));
    }
    let started = Instant::now();
    let index = CycleIndex::new(pta)?;
    let all_clocks: Vec<usize> = (1..=pta.clock_count()).collect();
    let mut graph = opts.capture_graph.then(ZoneGraph::default);

    let mut wcet = 0.0;
    let mut states: u64 = 1;
    let mut terminated = true;
    let mut stack: Vec<Frame> = Vec::new();
    let mut pending = Some((SymState::initial(pta, &index)?, None::<(usize, String)>));

    loop {
        if let Some((mut state, parent)) = pending.take() {
            state.sts = Status::InProgress;
            let node = match graph.as_mut() {
                Some(g) => {
                    let id = g.add_node(pta, &state);
                    if let Some((p, label)) = parent {
                        g.add_edge(p, id, label);
                    }
                    id
                }
                None => 0,
            };
            let mut children = Vec::new();
            let mut exits = false;
            if !pta.locations[state.loc].is_final {
                let mut pruned = false;
                for e in pta.out_edges(state.loc).filter(|e| e.weight > 0.0) {
                    let Some(zone) = succ_zone(&state.zone, e, pta) else {
                        continue;
                    };
                    let step = cycle_step(&index, &state, e);
                    let p = state.alpha * e.weight;
                    if step.closes_iteration {
                        let head = step.head.expect("closing edges have a head");
                        let cycle = index.cycle(index.cycle_of(head).expect("head is on a cycle"));
                        if cycle.sigma(pta) >= 1.0 {
                            let prev = stack
                                .iter()
                                .map(|f| &f.state)
                                .chain(std::iter::once(&state))
                                .rev()
                                .find(|s| s.loc == head && s.head == Some(head) && s.cnt + 1 == step.cnt);
                            if let Some(prev) = prev {
                                if prev.zone.project_active(&all_clocks) == zone.project_active(&all_clocks) {
                                    return Err(AnalysisError::NonConvergingCycle {
                                        cycle: cycle.locations.iter().map(|&l| pta.locations[l].name.clone()).collect(),
                                        sigma: cycle.sigma(pta),
                                    });
                                }
                            }
                        }
                        if negligible(p, delta) {
                            pruned = true;
                            continue;
                        }
                    }
                    wcet += p * step_delay(pta, &state, &zone)?;
                    states += 1;
                    if states > opts.max_states {
                        return Err(AnalysisError::StateBudgetExceeded(opts.max_states as usize));
                    }
                    children.push((
                        SymState {
                            loc: e.target,
                            zone,
                            alpha: p,
                            sts: Status::Unvisited,
                            cnt: step.cnt,
                            head: step.head,
                            via: Some(e.id),
                        },
                        e.action.clone(),
                    ));
                }
                exits = children.iter().any(|(c, _)| c.head != state.head);
                if children.is_empty() {
                    let frames = stack.iter().map(|f| (&f.state, f.exits));
                    if !pruned || !traversal_exits(&state, frames) {
                        terminated = false;
                    }
                }
            }
            children.reverse();
            stack.push(Frame {
                state,
                node,
                children,
                exits,
            });
        }
        let Some(top) = stack.last_mut() else { break };
        match top.children.pop() {
            Some((child, label)) => pending = Some((child, Some((top.node, label)))),
            None => {
                stack.pop();
            }
        }
    }

    Ok(Report {
        model: pta.name.clone(),
        mode: Mode::Baseline,
        delta,
        wcet,
        states_explored: states,
        accel_records: Vec::new(),
        rg: 0,
        terminated,
        wall_time: started.elapsed(),
        graph,
    })
}

/// Whether an ancestor in the same traversal of `state`'s cycle had a
/// successor leaving it. `ancestors` runs from the root.
pub(crate) fn traversal_exits<'a>(
    state: &SymState,
    ancestors: impl DoubleEndedIterator<Item = (&'a SymState, bool)>,
) -> bool {
    let Some(head) = state.head else { return false };
    for (s, exits) in ancestors.rev() {
        if s.head != Some(head) {
            break;
        }
        if exits {
            return true;
        }
        if s.loc == head && s.cnt == 0 {
            break;
        }
    }
    false
}

/// True when every explored branch ends in a final location, with cycles
/// cut off at `delta`.
pub fn check_termination(pta: &Pta, delta: f64) -> Result<bool> {
    Ok(wcet_baseline(pta, delta)?.terminated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    fn model(src: &str) -> Pta {
        parse_model(src).unwrap()
    }

    #[test]
    fn example1_expected_delay() {
        let pta = model(include_str!("../../models/example1.pta"));
        let r = wcet_baseline(&pta, 1e-6).unwrap();
        assert!((r.wcet - 15.0).abs() < 1e-12, "{}", r.wcet);
        assert_eq!(r.states_explored, 5);
        assert!(r.terminated);
    }

    #[test]
    fn example1_graph_shape() {
        let pta = model(include_str!("../../models/example1.pta"));
        let opts = BaselineOptions {
            capture_graph: true,
            ..Default::default()
        };
        let g = wcet_baseline_with(&pta, 1e-6, &opts).unwrap().graph.unwrap();
        assert_eq!(g.nodes.len(), 5);
        assert_eq!(g.edges.len(), 4);
    }

    #[test]
    fn geometric_short_loop() {
        let pta = model(include_str!("../../models/geometric_a.pta"));
        let r = wcet_baseline(&pta, 1e-6).unwrap();
        // Two head states and two exit states.
        assert_eq!(r.states_explored, 4);
        assert!((r.wcet - 1.000999).abs() < 1e-12, "{}", r.wcet);
    }

    #[test]
    fn geometric_long_loop() {
        let pta = model(include_str!("../../models/geometric_c.pta"));
        let r = wcet_baseline(&pta, 1e-6).unwrap();
        assert_eq!(r.states_explored, 2 * 13809);
        assert!((r.wcet - 999.999).abs() < 1e-3, "{}", r.wcet);
        assert!(r.terminated);
    }

    #[test]
    fn invariant_free_location_is_unbounded() {
        let pta = model("clocks x\nlocation A initial\nlocation B final\nedge A -> B weight 1\n");
        assert!(matches!(
            wcet_baseline(&pta, 1e-6),
            Err(AnalysisError::WcetUnbounded { location }) if location == "A"
        ));
    }

    #[test]
    fn inescapable_loop_does_not_converge() {
        let pta = model(
            "clocks x\nlocation A initial invariant x <= 2\nedge A -> A guard x >= 1 reset x weight 1\n",
        );
        assert!(matches!(wcet_baseline(&pta, 1e-6), Err(AnalysisError::NonConvergingCycle { .. })));
    }

    #[test]
    fn dead_end_is_not_terminated() {
        let pta = model(
            "clocks x\nlocation A initial invariant x <= 2\nlocation B invariant x <= 3\nlocation C final\nedge A -> B weight 1\nedge B -> C guard x >= 5 weight 1\n",
        );
        assert!(!check_termination(&pta, 1e-6).unwrap());
    }

    #[test]
    fn pruned_loop_with_exit_elsewhere_terminates() {
        let pta = model(include_str!("../../models/two_step.pta"));
        assert!(check_termination(&pta, 1e-6).unwrap());
    }

    #[test]
    fn loop_without_enabled_exit_does_not_terminate() {
        let pta = model(include_str!("../../models/inescapable.pta"));
        assert!(!check_termination(&pta, 1e-6).unwrap());
    }

    #[test]
    fn rejects_bad_delta() {
        let pta = model(include_str!("../../models/example1.pta"));
        assert!(matches!(wcet_baseline(&pta, 0.0), Err(AnalysisError::InvalidDelta(_))));
        assert!(matches!(wcet_baseline(&pta, 1.5), Err(AnalysisError::InvalidDelta(_))));
    }
}
