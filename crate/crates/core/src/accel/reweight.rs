use super::FixedPoint;
use crate::error::{AnalysisError, Result};
use crate::model::Pta;

/// Moves the probability of every cycle edge with weight below one onto the
/// exits of its source location, proportionally to their weights, and sets
/// the cycle edge to zero.
pub fn reweight(pta: &Pta, fp: &FixedPoint) -> Result<Pta> {
    let mut out = pta.clone();
    for &ci in &fp.cycle_edges {
        let cycle_edge = &pta.edges[ci];
        if cycle_edge.weight >= 1.0 {
            continue;
        }
        let exits: Vec<usize> = pta
            .out_edges(cycle_edge.source)
            .filter(|e| e.id != ci)
            .map(|e| e.id)
            .collect();
        let total: f64 = exits.iter().map(|&e| pta.edges[e].weight).sum();
        if exits.is_empty() || total <= 0.0 {
            return Err(AnalysisError::NoExitEdge {
                cycle: fp.cycle_locations.iter().map(|&l| pta.locations[l].name.clone()).collect(),
                location: pta.locations[cycle_edge.source].name.clone(),
            });
        }
        for &e in &exits {
            let w = pta.edges[e].weight;
            if w > 0.0 && w < 1.0 {
                out.edges[e].weight = w + w * cycle_edge.weight / total;
            }
        }
        out.edges[ci].weight = 0.0;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbm::Dbm;
    use crate::explorer::{Status, SymState};
    use crate::model::parse_model;

    fn fp(locations: Vec<usize>, edges: Vec<usize>) -> FixedPoint {
        let s = SymState {
            loc: locations[0],
            zone: Dbm::zero(1),
            alpha: 1.0,
            sts: Status::InProgress,
            cnt: 1,
            head: Some(locations[0]),
            via: None,
        };
        FixedPoint {
            earlier: s.clone(),
            later: SymState { cnt: 2, ..s },
            cycle_locations: locations,
            cycle_edges: edges,
            initial_prob: 1.0,
            trace: vec![],
        }
    }

    #[test]
    fn single_exit_takes_everything() {
        let pta = parse_model(include_str!("../../models/geometric_c.pta")).unwrap();
        let r = reweight(&pta, &fp(vec![0], vec![0])).unwrap();
        assert_eq!(r.edges[0].weight, 0.0);
        assert!((r.edges[1].weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn proportional_split() {
        let pta = parse_model(
            "clocks x\nlocation A initial invariant x <= 1\nlocation B final\nlocation C final\n\
             edge A -> A guard x >= 1 reset x weight 0.5\nedge A -> B guard x >= 1 weight 0.3\nedge A -> C guard x >= 1 weight 0.2\n",
        )
        .unwrap();
        let r = reweight(&pta, &fp(vec![0], vec![0])).unwrap();
        assert!((r.edges[1].weight - 0.6).abs() < 1e-12);
        assert!((r.edges[2].weight - 0.4).abs() < 1e-12);
        assert!((r.edges.iter().map(|e| e.weight).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn certain_cycle_edge_is_untouched() {
        let pta = parse_model(
            "clocks x\nlocation A initial invariant x <= 1\nlocation B invariant x <= 1\nlocation C final\n\
             edge A -> B guard x >= 1 reset x weight 1\nedge B -> A guard x >= 1 reset x weight 0.9\nedge B -> C guard x >= 1 weight 0.1\n",
        )
        .unwrap();
        let r = reweight(&pta, &fp(vec![0, 1], vec![0, 1])).unwrap();
        assert_eq!(r.edges[0].weight, 1.0);
        assert_eq!(r.edges[1].weight, 0.0);
        assert!((r.edges[2].weight - 1.0).abs() < 1e-12);
    }
}
