//! Finite unions of closed arcs of the circle `[0, 2π)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Disjoint, sorted closed intervals inside `[0, 2π]`. Arcs crossing `0` are
/// stored as two pieces.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalUnion {
    intervals: Vec<[f64; 2]>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self { intervals: vec![[0.0, TAU]] }
    }

    /// Union of arcs `[lo, hi]` with `lo ≤ hi`, taken modulo 2π.
    pub fn from_arcs<I: IntoIterator<Item = (f64, f64)>>(arcs: I) -> Self {
        let mut pieces = Vec::new();
        for (lo, hi) in arcs {
            if !(hi >= lo) {
                continue;
            }
            if hi - lo >= TAU {
                return Self::full();
            }
            let a = lo.rem_euclid(TAU);
            let b = a + (hi - lo);
            if b > TAU {
                pieces.push([a, TAU]);
                pieces.push([0.0, b - TAU]);
            } else {
                pieces.push([a, b]);
            }
        }
        Self::from_pieces(pieces)
    }

    /// Merges intervals already inside `[0, 2π]`.
    pub fn from_pieces(mut pieces: Vec<[f64; 2]>) -> Self {
        pieces.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        let mut out: Vec<[f64; 2]> = Vec::with_capacity(pieces.len());
        for p in pieces {
            match out.last_mut() {
                Some(last) if p[0] <= last[1] => last[1] = last[1].max(p[1]),
                _ => out.push(p),
            }
        }
        Self { intervals: out }
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|i| i[1] - i[0]).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        let x = x.rem_euclid(TAU);
        let k = self.intervals.partition_point(|i| i[0] <= x);
        k > 0 && x <= self.intervals[k - 1][1]
    }

    /// Closure of `[0, 2π) \ self`.
    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut cur = 0.0;
        for i in &self.intervals {
            if i[0] > cur {
                out.push([cur, i[0]]);
            }
            cur = cur.max(i[1]);
        }
        if cur < TAU {
            out.push([cur, TAU]);
        }
        Self { intervals: out }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        coverage_at_least(&[self.clone(), other.clone()], 2)
    }
}

/// Points of `[0, 2π)` lying in at least `threshold` of the unions.
pub fn coverage_at_least(unions: &[IntervalUnion], threshold: usize) -> IntervalUnion {
    if threshold == 0 {
        return IntervalUnion::full();
    }
    let mut events: Vec<(f64, i32)> = Vec::new();
    for u in unions {
        for i in &u.intervals {
            events.push((i[0], 1));
            events.push((i[1], -1));
        }
    }
    // openings before closings at equal coordinates keep touching pieces joined
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut out = Vec::new();
    let mut depth = 0i64;
    let mut open: Option<f64> = None;
    for (x, delta) in events {
        depth += delta as i64;
        if depth >= threshold as i64 {
            if open.is_none() {
                open = Some(x);
            }
        } else if let Some(lo) = open.take() {
            if x > lo {
                out.push([lo, x]);
            }
        }
    }
    IntervalUnion::from_pieces(out)
}
