//! Difference bound matrices over the model clocks, the reference clock
//! `x0` (index 0) and, when present, the global elapsed-time clock `CLK`
//! at the last index.
//!
//! Entry `D[i][j]` bounds `x_i - x_j`. Bounds use the usual packed encoding
//! `(value << 1) | non_strict`, which makes the natural integer order the
//! bound order: `(m,<) < (m,<=) < (m+1,<)`.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DbmError {
    #[error("the elapsed-time clock CLK cannot be reset")]
    ResetClk,
    #[error("clock index {0} out of range for a zone of dimension {1}")]
    ClockOutOfRange(usize, usize),
    #[error("zone dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("zone has no CLK column")]
    NoClk,
    #[error("WCET may be unbounded: CLK has no finite upper bound")]
    UnboundedDelay,
}

/// One DBM entry.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bound(i64);

impl Bound {
    pub const INFINITY: Bound = Bound(i64::MAX);
    pub const LE_ZERO: Bound = Bound(1);
    pub const LT_ZERO: Bound = Bound(0);

    pub const fn le(value: i64) -> Bound {
        Bound((value << 1) | 1)
    }

    pub const fn lt(value: i64) -> Bound {
        Bound(value << 1)
    }

    pub fn new(value: i64, strict: bool) -> Bound {
        if strict {
            Bound::lt(value)
        } else {
            Bound::le(value)
        }
    }

    pub fn is_infinite(self) -> bool {
        self.0 == i64::MAX
    }

    /// `None` for infinity.
    pub fn value(self) -> Option<i64> {
        if self.is_infinite() {
            None
        } else {
            Some(self.0 >> 1)
        }
    }

    pub fn is_strict(self) -> bool {
        !self.is_infinite() && self.0 & 1 == 0
    }
}

impl std::ops::Add for Bound {
    type Output = Bound;

    fn add(self, rhs: Bound) -> Bound {
        if self.is_infinite() || rhs.is_infinite() {
            return Bound::INFINITY;
        }
        Bound(((self.0 & !1) + (rhs.0 & !1)) | (self.0 & rhs.0 & 1))
    }
}

impl fmt::Debug for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            None => write!(f, "(inf)"),
            Some(v) => write!(f, "({}, {})", v, if self.is_strict() { "<" } else { "<=" }),
        }
    }
}

/// A single difference constraint `x_i - x_j ≺ c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constraint {
    pub i: usize,
    pub j: usize,
    pub bound: Bound,
}

impl Constraint {
    pub fn new(i: usize, j: usize, bound: Bound) -> Self {
        Constraint { i, j, bound }
    }

    /// `x_i <= c` or `x_i < c`.
    pub fn upper(i: usize, value: i64, strict: bool) -> Self {
        Constraint::new(i, 0, Bound::new(value, strict))
    }

    /// `x_i >= c` or `x_i > c`.
    pub fn lower(i: usize, value: i64, strict: bool) -> Self {
        Constraint::new(0, i, Bound::new(-value, strict))
    }
}

/// How two zones relate as sets of valuations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZoneRelation {
    Equal,
    Subset,
    Superset,
    Incomparable,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dbm {
    dim: usize,
    clk: Option<usize>,
    m: Vec<Bound>,
}

impl Dbm {
    /// All clocks, `CLK` included, equal to zero. `user_clocks` excludes the
    /// reference clock and `CLK`.
    pub fn zero(user_clocks: usize) -> Self {
        let dim = user_clocks + 2;
        Dbm {
            dim,
            clk: Some(dim - 1),
            m: vec![Bound::LE_ZERO; dim * dim],
        }
    }

    /// Every non-negative valuation.
    pub fn universe(user_clocks: usize) -> Self {
        let mut d = Self::zero(user_clocks);
        for i in 0..d.dim {
            for j in 0..d.dim {
                if i != j {
                    d.m[i * d.dim + j] = if i == 0 { Bound::LE_ZERO } else { Bound::INFINITY };
                }
            }
        }
        d
    }

    /// Builds a zone from raw entries, row-major. The matrix is not closed.
    pub fn from_entries(dim: usize, has_clk: bool, entries: Vec<Bound>) -> Self {
        assert_eq!(entries.len(), dim * dim, "entry count must be dim*dim");
        Dbm {
            dim,
            clk: has_clk.then(|| dim - 1),
            m: entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn clk_index(&self) -> Option<usize> {
        self.clk
    }

    /// Number of model clocks (reference clock and `CLK` excluded).
    pub fn user_clocks(&self) -> usize {
        self.dim - 1 - usize::from(self.clk.is_some())
    }

    pub fn get(&self, i: usize, j: usize) -> Bound {
        self.m[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, b: Bound) {
        self.m[i * self.dim + j] = b;
    }

    pub fn upper(&self, i: usize) -> Bound {
        self.get(i, 0)
    }

    pub fn lower(&self, i: usize) -> Bound {
        self.get(0, i)
    }

    pub fn is_empty(&self) -> bool {
        (0..self.dim).any(|i| self.get(i, i) < Bound::LE_ZERO)
    }

    /// All-pairs shortest path tightening.
    pub fn close(mut self) -> Self {
        let n = self.dim;
        for k in 0..n {
            for i in 0..n {
                let dik = self.m[i * n + k];
                if dik.is_infinite() {
                    continue;
                }
                for j in 0..n {
                    let via = dik + self.m[k * n + j];
                    if via < self.m[i * n + j] {
                        self.m[i * n + j] = via;
                    }
                }
            }
            if self.m[k * n + k] < Bound::LE_ZERO {
                self.m[0] = Bound::LT_ZERO;
                return self;
            }
        }
        if self.is_empty() {
            self.m[0] = Bound::LT_ZERO;
        }
        self
    }

    /// Lets time elapse: drops every upper bound, `CLK` included.
    pub fn up(mut self) -> Self {
        if self.is_empty() {
            return self;
        }
        for i in 1..self.dim {
            self.set(i, 0, Bound::INFINITY);
        }
        self
    }

    /// Intersects with each constraint, keeping the matrix canonical.
    pub fn conjoin<I>(mut self, constraints: I) -> Self
    where
        I: IntoIterator<Item = Constraint>,
    {
        let n = self.dim;
        for c in constraints {
            if self.is_empty() {
                return self;
            }
            let (i, j, b) = (c.i, c.j, c.bound);
            if b >= self.get(i, j) {
                continue;
            }
            if self.get(j, i) + b < Bound::LE_ZERO {
                self.m[0] = Bound::LT_ZERO;
                return self;
            }
            self.set(i, j, b);
            for k in 0..n {
                let dki = self.get(k, i);
                if dki.is_infinite() {
                    continue;
                }
                let via_i = dki + b;
                for l in 0..n {
                    let cand = via_i + self.get(j, l);
                    if cand < self.get(k, l) {
                        self.set(k, l, cand);
                    }
                }
            }
        }
        self
    }

    /// Sets each listed clock to zero. Resetting `CLK` is rejected.
    pub fn reset(mut self, clocks: &[usize]) -> Result<Self, DbmError> {
        for &z in clocks {
            if Some(z) == self.clk {
                return Err(DbmError::ResetClk);
            }
            if z == 0 || z >= self.dim {
                return Err(DbmError::ClockOutOfRange(z, self.dim));
            }
        }
        if self.is_empty() {
            return Ok(self);
        }
        for &z in clocks {
            for j in 0..self.dim {
                let row = self.get(0, j);
                let col = self.get(j, 0);
                self.set(z, j, row);
                self.set(j, z, col);
            }
            self.set(z, z, Bound::LE_ZERO);
        }
        Ok(self)
    }

    /// Set relation between two canonical zones.
    pub fn relation(&self, other: &Dbm) -> Result<ZoneRelation, DbmError> {
        if self.dim != other.dim {
            return Err(DbmError::DimensionMismatch(self.dim, other.dim));
        }
        let (ae, be) = (self.is_empty(), other.is_empty());
        if ae || be {
            return Ok(match (ae, be) {
                (true, true) => ZoneRelation::Equal,
                (true, false) => ZoneRelation::Subset,
                _ => ZoneRelation::Superset,
            });
        }
        let mut sub = true;
        let mut sup = true;
        for (a, b) in self.m.iter().zip(&other.m) {
            match a.cmp(b) {
                Ordering::Less => sup = false,
                Ordering::Greater => sub = false,
                Ordering::Equal => {}
            }
        }
        Ok(match (sub, sup) {
            (true, true) => ZoneRelation::Equal,
            (true, false) => ZoneRelation::Subset,
            (false, true) => ZoneRelation::Superset,
            (false, false) => ZoneRelation::Incomparable,
        })
    }

    /// Restriction to `x0` and the listed clocks. `CLK` is always dropped.
    pub fn project_active(&self, active: &[usize]) -> Dbm {
        let mut keep: Vec<usize> = std::iter::once(0)
            .chain(active.iter().copied().filter(|&c| c != 0 && Some(c) != self.clk))
            .collect();
        keep[1..].sort_unstable();
        keep.dedup();
        let dim = keep.len();
        let mut m = Vec::with_capacity(dim * dim);
        for &i in &keep {
            for &j in &keep {
                m.push(self.get(i, j));
            }
        }
        Dbm { dim, clk: None, m }
    }

    /// Finite upper bound of `CLK`.
    pub fn clk_upper(&self) -> Result<i64, DbmError> {
        let clk = self.clk.ok_or(DbmError::NoClk)?;
        self.upper(clk).value().ok_or(DbmError::UnboundedDelay)
    }

    /// Renders the zone with the given model clock names (index 1 onwards).
    pub fn render(&self, names: &[&str]) -> String {
        if self.is_empty() {
            return "false".to_string();
        }
        let name = |i: usize| -> String {
            if Some(i) == self.clk {
                "CLK".to_string()
            } else {
                names
                    .get(i - 1)
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| format!("x{i}"))
            }
        };
        let mut parts = Vec::new();
        for i in 1..self.dim {
            let up = self.upper(i);
            let lo = self.lower(i);
            let lo_val = lo.value().map(|v| -v);
            let lo_op = if lo.is_strict() { "<" } else { "<=" };
            let up_op = if up.is_strict() { "<" } else { "<=" };
            match (lo_val, up.value()) {
                (Some(l), Some(u)) if l == u && !lo.is_strict() && !up.is_strict() => {
                    parts.push(format!("{}={}", name(i), u))
                }
                (Some(l), Some(u)) => parts.push(format!("{l}{lo_op}{}{up_op}{u}", name(i))),
                (Some(l), None) => {
                    let op = if lo.is_strict() { ">" } else { ">=" };
                    parts.push(format!("{}{op}{l}", name(i)))
                }
                (None, Some(u)) => parts.push(format!("{}{up_op}{u}", name(i))),
                (None, None) => {}
            }
        }
        for i in 1..self.dim {
            for j in 1..self.dim {
                if i == j {
                    continue;
                }
                let b = self.get(i, j);
                if let Some(v) = b.value() {
                    let op = if b.is_strict() { "<" } else { "<=" };
                    parts.push(format!("{}-{}{op}{v}", name(i), name(j)));
                }
            }
        }
        if parts.is_empty() {
            "true".to_string()
        } else {
            parts.join(" & ")
        }
    }

    /// True when the integer valuation (index 0 excluded) lies in the zone.
    pub fn contains_point(&self, point: &[i64]) -> bool {
        if self.is_empty() {
            return false;
        }
        let val = |i: usize| if i == 0 { 0 } else { point[i - 1] };
        (0..self.dim).all(|i| {
            (0..self.dim).all(|j| {
                let b = self.get(i, j);
                match b.value() {
                    None => true,
                    Some(c) => {
                        let diff = val(i) - val(j);
                        if b.is_strict() {
                            diff < c
                        } else {
                            diff <= c
                        }
                    }
                }
            })
        })
    }
}

impl fmt::Debug for Dbm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dbm[{}]", self.render(&[]))
    }
}

impl fmt::Display for Dbm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&[]))
    }
}

/// `|CLK_up(next) - CLK_up(prev)|`: the longest time that can elapse on the
/// step from `prev` to `next`.
pub fn clk_advance(prev: &Dbm, next: &Dbm) -> Result<f64, DbmError> {
    let a = prev.clk_upper()?;
    let b = next.clk_upper()?;
    Ok((b - a).abs() as f64)
}
