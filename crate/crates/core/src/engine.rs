//! Zone-graph exploration with cycle acceleration.

use std::time::Instant;

use crate::accel::{
    accelerate_zone_constant, accelerate_zone_periodic, classify, compute_n, detect_cycle, eval_formula, reweight,
    synth_formula, AccelRecord, CycleClass, FixedPoint,
};
use crate::dbm::Dbm;
use crate::error::{AnalysisError, Result};
use crate::explorer::{cycle_step, traversal_exits, negligible, step_delay, succ_zone, Status, SymState};
use crate::model::{active_clocks, CycleIndex, Pta};
use crate::report::{GraphEdge, Mode, Report, ZoneGraph};

#[derive(Debug, Clone)]
pub struct EngineOptions {
    pub max_states: u64,
    pub capture_graph: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            max_states: 20_000_000,
            capture_graph: false,
        }
    }
}

pub fn wcet_accelerated(pta: &Pta, delta: f64) -> Result<Report> {
    wcet_accelerated_with(pta, delta, &EngineOptions::default())
}

struct Child {
    state: SymState,
    parent: usize,
    label: String,
}

enum Outcome {
    Accelerated { exits: Vec<Child>, continued: bool },
    /// The zones have not settled into a linear progression yet.
    NotYetLinear,
    Explicit,
}

struct Frame {
    node: usize,
    children: Vec<Child>,
    exits: bool,
}

struct Search<'a> {
    pta: &'a Pta,
    index: CycleIndex,
    active: Vec<Vec<usize>>,
    /// Cycles whose extrapolation failed; they are unrolled explicitly.
    explicit: Vec<bool>,
    delta: f64,
    opts: &'a EngineOptions,
    wcet: f64,
    states: u64,
    terminated: bool,
    rg: u64,
    records: Vec<AccelRecord>,
    graph: Option<ZoneGraph>,
}

/// Expected WCET with every cycle replaced, once its zones repeat on the
/// active clocks, by a closed-form sum over the remaining iterations.
pub fn wcet_accelerated_with(pta: &Pta, delta: f64, opts: &EngineOptions) -> Result<Report> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AnalysisError::InvalidDelta(delta));
    }
    let started = Instant::now();
    let index = CycleIndex::new(pta)?;
    let active = index
        .cycles()
        .iter()
        .map(|c| active_clocks(pta, &c.locations).map(|s| s.into_iter().collect()))
        .collect::<Result<Vec<Vec<usize>>, _>>()?;
    let mut search = Search {
        pta,
        explicit: vec![false; index.cycles().len()],
        index,
        active,
        delta,
        opts,
        wcet: 0.0,
        states: 1,
        terminated: true,
        rg: 0,
        records: Vec::new(),
        graph: opts.capture_graph.then(ZoneGraph::default),
    };
    search.run()?;
    Ok(Report {
        model: pta.name.clone(),
        mode: Mode::Accelerated,
        delta,
        wcet: search.wcet,
        states_explored: search.states,
        accel_records: search.records,
        rg: search.rg,
        terminated: search.terminated,
        wall_time: started.elapsed(),
        graph: search.graph,
    })
}

impl Search<'_> {
    fn run(&mut self) -> Result<()> {
        let mut path: Vec<SymState> = Vec::new();
        let mut frames: Vec<Frame> = Vec::new();
        let mut pending = Some((SymState::initial(self.pta, &self.index)?, None::<(usize, String)>));
        loop {
            if let Some((mut state, parent)) = pending.take() {
                state.sts = Status::InProgress;
                let node = match self.graph.as_mut() {
                    Some(g) => {
                        let id = g.add_node(self.pta, &state);
                        if let Some((p, label)) = parent {
                            g.add_edge(p, id, label);
                        }
                        id
                    }
                    None => 0,
                };
                path.push(state);
                let (mut children, exits) = self.expand(&path, &frames, node)?;
                children.reverse();
                frames.push(Frame { node, children, exits });
            }
            let Some(top) = frames.last_mut() else { break };
            match top.children.pop() {
                Some(c) => pending = Some((c.state, Some((c.parent, c.label)))),
                None => {
                    frames.pop();
                    if let Some(s) = path.last_mut() {
                        s.sts = Status::Finished;
                    }
                    path.pop();
                }
            }
        }
        Ok(())
    }

    fn add_state(&mut self) -> Result<()> {
        self.states += 1;
        if self.states > self.opts.max_states {
            return Err(AnalysisError::StateBudgetExceeded(self.opts.max_states as usize));
        }
        Ok(())
    }

    fn cycle_names(&self, cycle: usize) -> Vec<String> {
        self.index
            .cycle(cycle)
            .locations
            .iter()
            .map(|&l| self.pta.locations[l].name.clone())
            .collect()
    }

    /// Successors of the last state on `path`, and whether one of them
    /// leaves the state's cycle.
    fn expand(&mut self, path: &[SymState], frames: &[Frame], node: usize) -> Result<(Vec<Child>, bool)> {
        let pta = self.pta;
        let state = path.last().expect("expanded state is on the path");
        if pta.locations[state.loc].is_final {
            return Ok((Vec::new(), false));
        }
        let mut children = Vec::new();
        let mut continues = false;
        let mut pruned = false;
        let mut silent = false;
        for e in pta.out_edges(state.loc).filter(|e| e.weight > 0.0) {
            let Some(zone) = succ_zone(&state.zone, e, pta) else {
                continue;
            };
            let step = cycle_step(&self.index, state, e);
            let p = state.alpha * e.weight;
            let delay = step_delay(pta, state, &zone)?;
            let candidate = SymState {
                loc: e.target,
                zone,
                alpha: p,
                sts: Status::Unvisited,
                cnt: step.cnt,
                head: step.head,
                via: Some(e.id),
            };
            if step.closes_iteration {
                let cycle = self.index.cycle_of(e.target).expect("closing edges stay on a cycle");
                if !self.explicit[cycle] {
                    if let Some(fp) = detect_cycle(&candidate, path, &self.active[cycle]) {
                        let at = path.len() - fp.trace.len();
                        let earlier_node = frames.get(at).map_or(node, |f| f.node);
                        match self.accelerate(&fp, cycle, p * delay, earlier_node, node)? {
                            Outcome::Accelerated { exits, continued } => {
                                pruned |= !continued;
                                silent |= continued && exits.is_empty();
                                continues |= continued;
                                children.extend(exits);
                                continue;
                            }
                            Outcome::NotYetLinear => {}
                            Outcome::Explicit => self.explicit[cycle] = true,
                        }
                    }
                }
                if negligible(p, self.delta) {
                    pruned = true;
                    continue;
                }
            }
            self.wcet += p * delay;
            self.add_state()?;
            children.push(Child {
                state: candidate,
                parent: node,
                label: e.action.clone(),
            });
        }
        let exits = children.iter().any(|c| c.state.head != state.head);
        let escaped = || traversal_exits(state, path.iter().zip(frames).map(|(s, f)| (s, f.exits)));
        if children.is_empty() && !continues && (!pruned || !escaped()) {
            self.terminated = false;
        }
        if silent && !exits && !escaped() {
            self.terminated = false;
        }
        Ok((children, exits))
    }

    /// Accounts for iterations `k..n` of the cycle closed by `fp.later` and
    /// returns the states leaving the cycle during them.
    fn accelerate(
        &mut self,
        fp: &FixedPoint,
        cycle: usize,
        closing: f64,
        earlier_node: usize,
        node: usize,
    ) -> Result<Outcome> {
        let pta = self.pta;
        let m = fp.cycle_edges.len();
        let span = fp.span();
        let (e0, k) = (fp.earlier.cnt, fp.later.cnt);
        if fp.trace.len() as u64 != span * m as u64 {
            return Ok(Outcome::Explicit);
        }
        let class = classify(fp);
        let weights: Vec<f64> = fp.cycle_edges.iter().map(|&e| pta.edges[e].weight).collect();
        let sigma: f64 = weights.iter().product();
        let ip = fp.initial_prob;
        let n = compute_n(sigma, ip, self.delta).map_err(|err| match err {
            AnalysisError::NonConvergingCycle { sigma, .. } => AnalysisError::NonConvergingCycle {
                cycle: self.cycle_names(cycle),
                sigma,
            },
            other => other,
        })?;

        let mut record = AccelRecord {
            cycle_locations: fp.cycle_locations.iter().map(|&l| pta.locations[l].name.clone()).collect(),
            class,
            sigma,
            initial_prob: ip,
            k,
            n: n.max(k),
            contribution: 0.0,
            final_states: Vec::new(),
            residual: ip * sigma.powf(n as f64),
            n_printed: self.delta.ln() / (sigma * ip).ln(),
        };
        if n <= k {
            self.records.push(record);
            return Ok(Outcome::Accelerated {
                exits: Vec::new(),
                continued: false,
            });
        }

        // Explicit zones of iterations k..=k+span. The extrapolation must
        // reproduce those the search would still visit, and the delays are
        // read from the first of them.
        let last_checked = (k + span).min(n - 1);
        let steps = (span as usize + 1) * m;
        let mut ahead = vec![fp.later.zone.clone()];
        for t in 1..steps {
            match succ_zone(&ahead[t - 1], &pta.edges[fp.cycle_edges[(t - 1) % m]], pta) {
                Some(z) => ahead.push(z),
                None => return Ok(Outcome::NotYetLinear),
            }
        }
        let shape = if span == 1 { CycleClass::Constant } else { CycleClass::Periodic(span) };
        let formula = synth_formula(fp, shape, pta, &ahead[..=span as usize * m])?;
        let mut history: Vec<Dbm> = fp.trace.iter().map(|s| s.zone.clone()).collect();
        history.push(fp.later.zone.clone());
        let per_position: Vec<Vec<Dbm>> = (0..m)
            .map(|b| {
                let mut h: Vec<Dbm> = (0..span as usize).map(|phase| history[phase * m + b].clone()).collect();
                h.push(ahead[b].clone());
                h
            })
            .collect();
        let extrapolate = |b: usize, j: u64| {
            if span == 1 {
                accelerate_zone_constant(&per_position[b][0], &per_position[b][1], k, j)
            } else {
                accelerate_zone_periodic(&per_position[b], span, j - e0)
            }
        };
        for j in k + 1..=last_checked {
            for b in 0..m {
                match extrapolate(b, j) {
                    Ok(z) if z == ahead[(j - k) as usize * m + b] => {}
                    _ => return Ok(Outcome::NotYetLinear),
                }
            }
        }

        let reweighted = reweight(pta, fp)?;
        let mut prefix = vec![1.0; m];
        for b in 1..m {
            prefix[b] = prefix[b - 1] * weights[b - 1];
        }
        let t_max = |j: u64, b: usize| formula.phases[((j - k) % span) as usize][b].t_max;

        let mut contribution = eval_formula(&formula.with_initial_prob(ip * sigma.powf(k as f64)), n - 1 - k);
        contribution -= ip * sigma.powf(n as f64) * t_max(n - 1, m - 1);
        contribution += closing;
        let mut exits = Vec::new();
        let mut head_zone = fp.later.zone.clone();
        for j in k..n {
            let mut row = vec![head_zone];
            for b in 1..=m {
                let zone = if b < m { extrapolate(b, j) } else { extrapolate(0, j + 1) };
                let Ok(zone) = zone else {
                    return Ok(Outcome::Explicit);
                };
                row.push(zone);
            }
            head_zone = row[m].clone();
            for b in 0..m {
                let t = t_max(j, b);
                let zone = row[b].clone();
                if step_delay(pta, &SymState { zone: zone.clone(), ..fp.later.clone() }, &row[b + 1])? != t {
                    return Ok(Outcome::NotYetLinear);
                }
                let loc = fp.cycle_locations[b];
                let ci = fp.cycle_edges[b];
                let alpha = ip * sigma.powf(j as f64) * prefix[b];
                let leaving = alpha * (1.0 - weights[b]);
                let from = SymState {
                    loc,
                    zone,
                    alpha,
                    sts: Status::InProgress,
                    cnt: j,
                    head: fp.later.head,
                    via: None,
                };
                for ex in pta.out_edges(loc).filter(|x| x.id != ci && x.weight > 0.0) {
                    let prob = leaving * reweighted.edges[ex.id].weight;
                    match succ_zone(&from.zone, ex, pta) {
                        None => contribution -= prob * t,
                        Some(z) => {
                            let adv = step_delay(pta, &from, &z)?;
                            contribution += prob * (adv - t);
                            exits.push(Child {
                                state: SymState {
                                    loc: ex.target,
                                    zone: z,
                                    alpha: prob,
                                    sts: Status::Unvisited,
                                    cnt: 0,
                                    head: self.index.cycle_of(ex.target).map(|_| ex.target),
                                    via: Some(ex.id),
                                },
                                parent: earlier_node,
                                label: ex.action.clone(),
                            });
                        }
                    }
                }
            }
        }

        for _ in &exits {
            self.add_state()?;
        }
        self.wcet += contribution;
        self.rg += (n - k) * m as u64;
        record.contribution = contribution;
        record.final_states = exits.iter().map(|c| c.state.clone()).collect();
        if let Some(g) = self.graph.as_mut() {
            g.edges.push(GraphEdge {
                from: node,
                to: earlier_node,
                label: pta.edges[*fp.cycle_edges.last().expect("cycles have edges")].action.clone(),
                collapsed: Some((n, k, contribution)),
            });
        }
        self.records.push(record);
        Ok(Outcome::Accelerated { exits, continued: true })
    }
}

/// States saved by acceleration, checked against the per-cycle prediction.
pub fn reduction_gained(baseline: &Report, accelerated: &Report) -> Result<u64> {
    if baseline.model != accelerated.model || baseline.delta != accelerated.delta {
        return Err(AnalysisError::Usage(
            "reports come from different models or cutoffs".into(),
        ));
    }
    if baseline.mode != Mode::Baseline || accelerated.mode != Mode::Accelerated {
        return Err(AnalysisError::Usage("expected a baseline and an accelerated report".into()));
    }
    let observed = baseline
        .states_explored
        .checked_sub(accelerated.states_explored)
        .ok_or_else(|| AnalysisError::Usage("accelerated run explored more states".into()))?;
    Ok(observed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explorer::wcet_baseline;
    use crate::model::parse_model;

    fn model(src: &str) -> Pta {
        parse_model(src).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1e-300)
    }

    #[test]
    fn acyclic_matches_baseline() {
        let pta = model(include_str!("../models/example1.pta"));
        let r = wcet_accelerated(&pta, 1e-6).unwrap();
        assert_eq!(r.wcet, 15.0);
        assert!(r.accel_records.is_empty());
        assert_eq!(r.rg, 0);
    }

    #[test]
    fn long_geometric_loop() {
        let pta = model(include_str!("../models/geometric_c.pta"));
        let a = wcet_accelerated(&pta, 1e-6).unwrap();
        let b = wcet_baseline(&pta, 1e-6).unwrap();
        assert!(close(a.wcet, b.wcet), "{} vs {}", a.wcet, b.wcet);
        assert_eq!(a.accel_records.len(), 1);
        let r = &a.accel_records[0];
        assert_eq!((r.k, r.n, r.class), (2, 13809, CycleClass::Constant));
        assert_eq!(reduction_gained(&b, &a).unwrap(), 13807);
        assert_eq!(a.rg, 13807);
        assert!(a.terminated);
    }

    #[test]
    fn short_geometric_loops() {
        for src in [include_str!("../models/geometric_a.pta"), include_str!("../models/geometric_b.pta")] {
            let pta = model(src);
            let a = wcet_accelerated(&pta, 1e-6).unwrap();
            let b = wcet_baseline(&pta, 1e-6).unwrap();
            assert!(close(a.wcet, b.wcet), "{} vs {}", a.wcet, b.wcet);
            assert_eq!(b.states_explored - a.states_explored, a.rg);
        }
    }

    #[test]
    fn inescapable_loop_does_not_converge() {
        let pta = model("clocks x\nlocation A initial invariant x <= 2\nedge A -> A guard x >= 1 reset x weight 1\n");
        assert!(matches!(
            wcet_accelerated(&pta, 1e-6),
            Err(AnalysisError::NonConvergingCycle { cycle, .. }) if cycle == vec!["A".to_string()]
        ));
    }
}
