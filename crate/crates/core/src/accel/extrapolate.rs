use thiserror::Error;

use crate::dbm::{Bound, Dbm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("extrapolated zone is inconsistent")]
pub struct AccelerationInconsistent;

fn linear(base: Bound, steps: &[(Bound, Bound, i64)], strict_from: Bound) -> Result<Bound, AccelerationInconsistent> {
    if strict_from.is_infinite() {
        return Ok(Bound::INFINITY);
    }
    let mut v = i128::from(base.value().ok_or(AccelerationInconsistent)?);
    for &(from, to, times) in steps {
        if times == 0 {
            continue;
        }
        let (a, b) = (from.value(), to.value());
        let (Some(a), Some(b)) = (a, b) else {
            return Err(AccelerationInconsistent);
        };
        v += i128::from(times) * (i128::from(b) - i128::from(a));
    }
    // Keep clear of the packed encoding's range.
    let v = i64::try_from(v).ok().filter(|v| v.abs() < i64::MAX >> 2).ok_or(AccelerationInconsistent)?;
    Ok(Bound::new(v, strict_from.is_strict()))
}

fn finish(d: Dbm) -> Result<Dbm, AccelerationInconsistent> {
    let d = d.close();
    if d.is_empty() {
        Err(AccelerationInconsistent)
    } else {
        Ok(d)
    }
}

/// Extends the per-iteration change between iterations `k - 1` and `k` of
/// every matrix entry linearly up to iteration `n`.
pub fn accelerate_zone_constant(d_km1: &Dbm, d_k: &Dbm, k: u64, n: u64) -> Result<Dbm, AccelerationInconsistent> {
    if d_km1.dim() != d_k.dim() || n < k {
        return Err(AccelerationInconsistent);
    }
    let times = i64::try_from(n - k).map_err(|_| AccelerationInconsistent)?;
    let mut out = d_k.clone();
    for i in 0..d_k.dim() {
        for j in 0..d_k.dim() {
            if i == j {
                continue;
            }
            let (a, b) = (d_km1.get(i, j), d_k.get(i, j));
            let v = linear(b, &[(a, b, times)], b)?;
            out.set(i, j, v);
        }
    }
    finish(out)
}

/// Extrapolates a zone sequence whose increments repeat every `k`
/// iterations. `history[i]` is the zone at iteration `i` for `i = 0..=k`.
pub fn accelerate_zone_periodic(history: &[Dbm], k: u64, n: u64) -> Result<Dbm, AccelerationInconsistent> {
    let len = usize::try_from(k).map_err(|_| AccelerationInconsistent)?;
    if k == 0 || history.len() != len + 1 || n < k {
        return Err(AccelerationInconsistent);
    }
    let dim = history[0].dim();
    if history.iter().any(|d| d.dim() != dim) {
        return Err(AccelerationInconsistent);
    }
    let periods = i64::try_from(n / k).map_err(|_| AccelerationInconsistent)?;
    let rem = (n % k) as usize;
    let shape = if rem == 0 { &history[len] } else { &history[rem] };
    let mut out = shape.clone();
    for i in 0..dim {
        for j in 0..dim {
            if i == j {
                continue;
            }
            let d0 = history[0].get(i, j);
            let dk = history[len].get(i, j);
            let dr = history[rem].get(i, j);
            if d0.is_infinite() || dk.is_infinite() || dr.is_infinite() {
                if dk.is_infinite() && (rem == 0 || dr.is_infinite()) {
                    out.set(i, j, Bound::INFINITY);
                    continue;
                }
                return Err(AccelerationInconsistent);
            }
            let v = linear(d0, &[(d0, dk, periods), (d0, dr, 1)], shape.get(i, j))?;
            out.set(i, j, v);
        }
    }
    finish(out)
}

/// The zones at the start and the end of the period agree on `active`.
pub fn periodic_precondition(history: &[Dbm], active: &[usize]) -> bool {
    match (history.first(), history.last()) {
        (Some(a), Some(b)) if history.len() > 1 => a.project_active(active) == b.project_active(active),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbm::Constraint;

    /// One user clock; CLK sits at index 2.
    fn clk_zone(clk_upper: i64) -> Dbm {
        Dbm::universe(1).conjoin([Constraint::upper(1, 1, false), Constraint::upper(2, clk_upper, false)])
    }

    fn clk_point(v: i64) -> Dbm {
        Dbm::zero(1).up().conjoin([Constraint::upper(2, v, false), Constraint::lower(2, v, false)])
    }

    #[test]
    fn constant_clk_growth() {
        let a = Dbm::universe(1).conjoin([Constraint::upper(2, 5, false)]);
        let b = Dbm::universe(1).conjoin([Constraint::upper(2, 10, false)]);
        let d = accelerate_zone_constant(&a, &b, 2, 100).unwrap();
        assert_eq!(d.clk_upper(), Ok(500));
    }

    #[test]
    fn constant_zero_extrapolation() {
        let a = clk_zone(5);
        let b = clk_zone(10);
        assert_eq!(accelerate_zone_constant(&a, &b, 3, 3).unwrap(), b);
    }

    #[test]
    fn reset_clock_is_unchanged() {
        let a = clk_zone(5);
        let b = clk_zone(6);
        let d = accelerate_zone_constant(&a, &b, 2, 40).unwrap();
        assert_eq!(d.upper(1), b.upper(1));
        assert_eq!(d.lower(1), b.lower(1));
        assert_eq!(d.clk_upper(), Ok(6 + 38));
    }

    #[test]
    fn periodic_rule() {
        let h = [clk_point(0), clk_point(3), clk_point(5)];
        let d = accelerate_zone_periodic(&h, 2, 7).unwrap();
        assert_eq!(d.clk_upper(), Ok(18));
        assert_eq!(accelerate_zone_periodic(&h, 2, 2).unwrap(), h[2]);
    }

    #[test]
    fn periodic_with_offset_base() {
        let h = [clk_point(2), clk_point(5), clk_point(7)];
        assert_eq!(accelerate_zone_periodic(&h, 2, 2).unwrap(), h[2]);
        assert_eq!(accelerate_zone_periodic(&h, 2, 3).unwrap().clk_upper(), Ok(10));
    }

    #[test]
    fn shrinking_to_empty_is_inconsistent() {
        // The lower bound of CLK overtakes its upper bound.
        let a = Dbm::universe(1).conjoin([Constraint::upper(2, 10, false), Constraint::lower(2, 1, false)]);
        let b = Dbm::universe(1).conjoin([Constraint::upper(2, 10, false), Constraint::lower(2, 2, false)]);
        assert_eq!(accelerate_zone_constant(&a, &b, 1, 50), Err(AccelerationInconsistent));
    }

    #[test]
    fn periodic_precondition_compares_active_clocks() {
        let h = [clk_zone(1), clk_zone(4), clk_zone(9)];
        assert!(periodic_precondition(&h, &[1]));
        let g = [clk_zone(1), Dbm::zero(1)];
        assert!(!periodic_precondition(&g, &[1]));
    }
}
