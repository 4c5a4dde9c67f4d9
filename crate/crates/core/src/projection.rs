//! Perpendicular projection of the edge system onto `[0, 1)`, the induced
//! interval exchange, hitting sets and the splitting-free transport of edge
//! intervals.

use crate::error::{Error, Result};
use crate::flow::{self, Budget, DirectedPoint};
use crate::geom::Vec2;
use crate::scalar::Real;
use crate::surface::{EdgeRef, TranslationSurface};
use serde::Serialize;
use std::collections::HashMap;

/// Smallest admissible `|sin(angle between θ and an edge)|`.
pub const EDGE_MARGIN: f64 = 1e-6;

/// Default cap on the number of transport extensions.
pub const TRANSPORT_CAP: usize = 1_000_000;

/// Projection of the edges onto a line perpendicular to the flow, normalized
/// so that the images tile `[0, 1)` in representative-edge order.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectionMap<T> {
    pub theta: T,
    /// Unit normal `n`; the projection coordinate of a point `p` is `p · n`.
    pub normal: Vec2<T>,
    pub edges: Vec<EdgeRef>,
    /// Unnormalized projection length of each representative edge.
    pub h_lengths: Vec<T>,
    /// Left endpoints of the normalized images `H′_i`.
    pub starts: Vec<T>,
    pub c1: T,
    #[serde(skip)]
    index: HashMap<EdgeRef, usize>,
    #[serde(skip)]
    h_min: HashMap<EdgeRef, T>,
}

impl<T: Real> ProjectionMap<T> {
    pub fn new(surface: &TranslationSurface<T>, theta: T) -> Result<Self> {
        let d = Vec2::from_angle(theta);
        let normal = d.perp();
        let edges = surface.edges().to_vec();
        let mut h_lengths = Vec::with_capacity(edges.len());
        let mut index = HashMap::new();
        let mut h_min = HashMap::new();
        for (i, &e) in edges.iter().enumerate() {
            let v = surface.edge_vector(e);
            let hl = v.dot(normal).abs();
            if hl < v.norm() * T::lit(EDGE_MARGIN) {
                return Err(Error::DegenerateDirection { theta: theta.as_f64(), edge: (e.face, e.edge) });
            }
            h_lengths.push(hl);
            for side in [e, surface.partner(e)] {
                index.insert(side, i);
                let (a, b) = surface.edge_points(side);
                h_min.insert(side, a.dot(normal).min(b.dot(normal)));
            }
        }
        let c1: T = h_lengths.iter().copied().sum();
        let mut starts = Vec::with_capacity(edges.len());
        let mut acc = T::zero();
        for hl in &h_lengths {
            starts.push(acc / c1);
            acc = acc + *hl;
        }
        Ok(Self { theta, normal, edges, h_lengths, starts, c1, index, h_min })
    }

    /// Index of the representative of the glued pair containing `e`.
    pub fn rep_index(&self, e: EdgeRef) -> usize {
        self.index[&e]
    }

    /// Normalized image length `|H′_i|`.
    pub fn image_length(&self, i: usize) -> T {
        self.h_lengths[i] / self.c1
    }

    /// `ψ` of a face-local point lying on edge `e`.
    pub fn psi_point(&self, e: EdgeRef, p: Vec2<T>) -> T {
        let i = self.index[&e];
        self.starts[i] + (p.dot(self.normal) - self.h_min[&e]) / self.c1
    }

    /// `ψ` of the point at normalized position `s` along edge `e`.
    pub fn psi(&self, surface: &TranslationSurface<T>, e: EdgeRef, s: T) -> T {
        let (a, b) = surface.edge_points(e);
        self.psi_point(e, a + (b - a) * s)
    }

    /// Inverse of `ψ`: representative edge and position along it.
    pub fn locate(&self, surface: &TranslationSurface<T>, x: T) -> (EdgeRef, T) {
        let i = self.starts.partition_point(|&s| s <= x).saturating_sub(1);
        let e = self.edges[i];
        let (a, b) = surface.edge_points(e);
        let h = self.h_min[&e] + (x - self.starts[i]) * self.c1;
        let s = (h - a.dot(self.normal)) / (b - a).dot(self.normal);
        (e, s)
    }

    fn h_min_of(&self, e: EdgeRef) -> T {
        self.h_min[&e]
    }
}

pub fn build_projection<T: Real>(surface: &TranslationSurface<T>, theta: T) -> Result<ProjectionMap<T>> {
    ProjectionMap::new(surface, theta)
}

/// A maximal range of projection values on an inward edge over which the flow
/// leaves the face through the same edge.
#[derive(Clone, Copy, Debug)]
struct FaceBranch<T> {
    h_lo: T,
    h_hi: T,
    exit: usize,
    /// Face vertex whose projection bounds the range from below / above.
    lo_vertex: usize,
    hi_vertex: usize,
}

/// For one direction: for every face and every edge the flow enters through,
/// the exit edge as a piecewise constant function of the projection value.
struct FaceFlow<T> {
    d: Vec2<T>,
    n: Vec2<T>,
    tables: Vec<Vec<Option<Vec<FaceBranch<T>>>>>,
}

impl<T: Real> FaceFlow<T> {
    fn new(surface: &TranslationSurface<T>, theta: T) -> Self {
        let d = Vec2::from_angle(theta);
        let n = d.perp();
        let mut tables = Vec::with_capacity(surface.faces().len());
        for poly in surface.faces() {
            let nv = poly.len();
            let hv: Vec<T> = (0..nv).map(|i| poly.vertex(i).dot(n)).collect();
            let mut per_edge = Vec::with_capacity(nv);
            for e in 0..nv {
                let ev = poly.edge_vector(e);
                if d.cross(ev) >= T::zero() {
                    per_edge.push(None);
                    continue;
                }
                // inward edge: h decreases from vertex e to vertex e + 1
                let (hi_v, lo_v) = (e, (e + 1) % nv);
                let (h_lo, h_hi) = (hv[lo_v], hv[hi_v]);
                let mut cuts: Vec<(T, usize)> = (0..nv)
                    .filter(|&v| v != hi_v && v != lo_v && hv[v] > h_lo && hv[v] < h_hi)
                    .map(|v| (hv[v], v))
                    .collect();
                cuts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let mut bounds = vec![(h_lo, lo_v)];
                bounds.extend(cuts);
                bounds.push((h_hi, hi_v));
                let mut branches: Vec<FaceBranch<T>> = Vec::new();
                for w in bounds.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    if b.0 <= a.0 {
                        continue;
                    }
                    let mid = (a.0 + b.0) / T::lit(2.0);
                    let start = poly.vertex(e) + ev * ((mid - hv[e]) / ev.dot(n));
                    let exit = ray_exit(poly.vertices(), start, d, e);
                    match branches.last_mut() {
                        Some(last) if last.exit == exit => {
                            last.h_hi = b.0;
                            last.hi_vertex = b.1;
                        }
                        _ => branches.push(FaceBranch { h_lo: a.0, h_hi: b.0, exit, lo_vertex: a.1, hi_vertex: b.1 }),
                    }
                }
                per_edge.push(Some(branches));
            }
            tables.push(per_edge);
        }
        Self { d, n, tables }
    }

    fn branches(&self, face: usize, edge: usize) -> &[FaceBranch<T>] {
        self.tables[face][edge].as_deref().unwrap_or(&[])
    }
}

/// First edge other than `entry` hit by the ray from `p` in direction `d`.
fn ray_exit<T: Real>(verts: &[Vec2<T>], p: Vec2<T>, d: Vec2<T>, entry: usize) -> usize {
    let n = verts.len();
    let mut best = (T::infinity(), entry);
    for e in 0..n {
        if e == entry {
            continue;
        }
        let a = verts[e];
        let ev = verts[(e + 1) % n] - a;
        let den = d.cross(ev);
        if den <= T::zero() {
            continue;
        }
        let ap = a - p;
        let t = ap.cross(ev) / den;
        let s = ap.cross(d) / den;
        if t > T::zero() && s >= T::zero() && s <= T::one() && t < best.0 {
            best = (t, e);
        }
    }
    best.1
}

/// One branch of the exchange: `x ∈ [start, start + length)` maps to `x + offset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IetBranch<T> {
    pub start: T,
    pub length: T,
    pub offset: T,
}

/// First-return map of the flow to the projected edge system.
#[derive(Clone, Debug)]
pub struct IntervalExchange<T> {
    pub theta: T,
    pub branches: Vec<IetBranch<T>>,
    /// Branch boundaries (projections of vertices).
    pub singular_points: Vec<T>,
    images: Vec<IetBranch<T>>,
}

impl<T: Real> IntervalExchange<T> {
    pub fn apply(&self, x: T) -> T {
        let k = self.branches.partition_point(|b| b.start <= x).saturating_sub(1);
        wrap_unit(x + self.branches[k].offset)
    }

    pub fn inverse(&self, y: T) -> T {
        let k = self.images.partition_point(|b| b.start <= y).saturating_sub(1);
        wrap_unit(y - self.images[k].offset)
    }

    pub fn total_length(&self) -> T {
        self.branches.iter().map(|b| b.length).sum()
    }

    /// Orbit `x, T x, …` of `m` points.
    pub fn orbit(&self, x: T, m: usize) -> Vec<T> {
        let mut out = Vec::with_capacity(m);
        let mut cur = x;
        for _ in 0..m {
            out.push(cur);
            cur = self.apply(cur);
        }
        out
    }

    /// JSON array of `[start, length, offset]` triples.
    pub fn to_json(&self) -> String {
        let rows: Vec<[T; 3]> = self.branches.iter().map(|b| [b.start, b.length, b.offset]).collect();
        serde_json::to_string(&rows).expect("branches serialize")
    }
}

fn wrap_unit<T: Real>(x: T) -> T {
    if x < T::zero() {
        T::zero()
    } else if x >= T::one() {
        T::one() - T::epsilon()
    } else {
        x
    }
}

pub fn induced_iet<T: Real>(surface: &TranslationSurface<T>, theta: T) -> Result<IntervalExchange<T>> {
    let proj = ProjectionMap::new(surface, theta)?;
    let flow = FaceFlow::new(surface, theta);
    let mut branches = Vec::new();
    for (f, per_edge) in flow.tables.iter().enumerate() {
        for (e, table) in per_edge.iter().enumerate() {
            let Some(table) = table else { continue };
            let entry = EdgeRef::new(f, e);
            let i = proj.rep_index(entry);
            for b in table {
                let exit = EdgeRef::new(f, b.exit);
                let j = proj.rep_index(exit);
                let start = proj.starts[i] + (b.h_lo - proj.h_min_of(entry)) / proj.c1;
                let image = proj.starts[j] + (b.h_lo - proj.h_min_of(exit)) / proj.c1;
                branches.push(IetBranch { start, length: (b.h_hi - b.h_lo) / proj.c1, offset: image - start });
            }
        }
    }
    branches.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap());
    let mut images: Vec<IetBranch<T>> =
        branches.iter().map(|b| IetBranch { start: b.start + b.offset, length: b.length, offset: b.offset }).collect();
    images.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap());
    let singular_points = branches.iter().map(|b| b.start).collect();
    Ok(IntervalExchange { theta, branches, singular_points, images })
}

/// Projected crossing points `x_j = ψ(L(t_j))` of a traced segment.
#[derive(Clone, Debug, Serialize)]
pub struct HittingSet<T> {
    pub theta: T,
    pub points: Vec<T>,
    pub times: Vec<T>,
}

impl<T: Real> HittingSet<T> {
    /// Newline-delimited decimal values.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for x in &self.points {
            out.push_str(&x.to_string());
            out.push('\n');
        }
        out
    }
}

pub fn hitting_set<T: Real>(
    surface: &TranslationSurface<T>,
    start: DirectedPoint<T>,
    m: usize,
) -> Result<HittingSet<T>> {
    let proj = ProjectionMap::new(surface, start.theta)?;
    let seq = flow::trace(surface, start, Budget::MaxHits(m))?;
    let points = seq.hits.iter().map(|h| proj.psi(surface, h.edge, h.s)).collect();
    let times = seq.hits.iter().map(|h| h.t).collect();
    Ok(HittingSet { theta: start.theta, points, times })
}

/// An interval `Q_j R_j` of the transport, on representative edge `edge`,
/// with projected image `[x_lo, x_hi] ⊂ [0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransportedInterval<T> {
    pub j: i64,
    pub edge: EdgeRef,
    pub x_lo: T,
    pub x_hi: T,
}

/// A vertex where the transport split, placed in the developed plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TerminalVertex<T> {
    pub singularity: usize,
    pub developed: Vec2<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransportResult<T> {
    pub theta: T,
    /// Backward and forward splitting-free extension counts.
    pub u: usize,
    pub w: usize,
    /// Intervals ordered by `j` from `-u` to `w`.
    pub intervals: Vec<TransportedInterval<T>>,
    pub v0: Option<TerminalVertex<T>>,
    pub v1: Option<TerminalVertex<T>>,
    /// Unnormalized projection length of the seed.
    pub h_length: T,
    /// Longest run length `D` such that every `D` consecutive intervals are pairwise disjoint.
    pub disjoint_window: usize,
    /// True when the extension cap was reached before both sides split.
    pub partial: bool,
}

impl<T: Real> TransportResult<T> {
    /// `|V′₀V′₁|` when both ends split.
    pub fn saddle_length(&self) -> Option<T> {
        Some(self.v0?.developed.dist(self.v1?.developed))
    }

    /// Checks `c₄(u + w) > |V′₀V′₁|`.
    pub fn segment_bound_holds(&self, c4: T) -> Option<bool> {
        Some(c4 * T::from_usize_lossy(self.u + self.w) > self.saddle_length()?)
    }

    /// Scale exponent `n₀` with `|H(Q₀R₀)| = 1/(c₀² 2^{n₀+1})`.
    pub fn scale_exponent(&self, c0: T) -> T {
        (T::one() / (c0 * c0 * self.h_length * T::lit(2.0))).log2()
    }

    /// Empirical `(u + w)/2^{n₀}` and `D/2^{n₀}`.
    pub fn empirical_c5_c6(&self, c0: T) -> (T, T) {
        let scale = T::lit(2.0).powf(self.scale_exponent(c0));
        (T::from_usize_lossy(self.u + self.w) / scale, T::from_usize_lossy(self.disjoint_window) / scale)
    }
}

struct Carrier<T> {
    face: usize,
    edge: usize,
    offset: Vec2<T>,
    h0: T,
    h1: T,
}

enum Step<T> {
    Moved(Carrier<T>),
    Split(TerminalVertex<T>),
}

fn advance<T: Real>(surface: &TranslationSurface<T>, flow: &FaceFlow<T>, c: &Carrier<T>, tol: T) -> Step<T> {
    let poly = surface.face(c.face);
    let branches = flow.branches(c.face, c.edge);
    let split_at = |v: usize| {
        Step::Split(TerminalVertex { singularity: surface.vertex_class(c.face, v), developed: poly.vertex(v) + c.offset })
    };
    for b in branches {
        if b.h_lo >= c.h0 - tol && b.h_lo <= c.h1 + tol {
            return split_at(b.lo_vertex);
        }
        if b.h_hi >= c.h0 - tol && b.h_hi <= c.h1 + tol {
            return split_at(b.hi_vertex);
        }
    }
    let Some(b) = branches.iter().find(|b| b.h_lo < c.h0 && b.h_hi > c.h1) else {
        let v = branches.first().map_or(c.edge, |b| b.lo_vertex);
        return split_at(v);
    };
    let exit = EdgeRef::new(c.face, b.exit);
    let tr = surface.translation(exit);
    let p = surface.partner(exit);
    let dh = tr.dot(flow.n);
    Step::Moved(Carrier { face: p.face, edge: p.edge, offset: c.offset - tr, h0: c.h0 + dh, h1: c.h1 + dh })
}

/// Edge points of a carrier's projection range, on the entry edge.
fn carrier_points<T: Real>(surface: &TranslationSurface<T>, n: Vec2<T>, c: &Carrier<T>) -> (Vec2<T>, Vec2<T>) {
    let poly = surface.face(c.face);
    let a = poly.vertex(c.edge);
    let ev = poly.edge_vector(c.edge);
    let at = |h: T| a + ev * ((h - a.dot(n)) / ev.dot(n));
    (at(c.h0), at(c.h1))
}

fn record<T: Real>(
    surface: &TranslationSurface<T>,
    proj: &ProjectionMap<T>,
    n: Vec2<T>,
    c: &Carrier<T>,
    j: i64,
) -> TransportedInterval<T> {
    let e = EdgeRef::new(c.face, c.edge);
    let (p, q) = carrier_points(surface, n, c);
    let (x0, x1) = (proj.psi_point(e, p), proj.psi_point(e, q));
    let i = proj.rep_index(e);
    TransportedInterval { j, edge: proj.edges[i], x_lo: x0.min(x1), x_hi: x0.max(x1) }
}

/// Transports the seed interval `[s0, s1]` of edge `seed` forward and backward
/// along the flow until the image would contain a vertex projection.
pub fn transport_interval<T: Real>(
    surface: &TranslationSurface<T>,
    theta: T,
    seed: EdgeRef,
    s0: T,
    s1: T,
    cap: usize,
) -> Result<TransportResult<T>> {
    let proj = ProjectionMap::new(surface, theta)?;
    if !(s0 < s1) || s0 < T::zero() || s1 > T::one() {
        return Err(Error::InvalidParameter(format!("seed range [{s0}, {s1}] must satisfy 0 ≤ s0 < s1 ≤ 1")));
    }
    let tol = surface.c7() * T::rel_tol(1e-12);
    let mut out = Vec::new();
    let mut terminals = [None, None];
    let mut counts = [0usize, 0usize];
    let mut partial = false;

    // forward uses θ, backward uses θ + π with the opposite normal
    for (dir, angle) in [(1usize, theta), (0usize, theta + T::PI())] {
        let flow = FaceFlow::new(surface, angle);
        let (a, b) = surface.edge_points(seed);
        let (p0, p1) = (a + (b - a) * s0, a + (b - a) * s1);
        let inward = flow.d.cross(b - a) < T::zero();
        let (face, edge, offset) = if inward {
            (seed.face, seed.edge, Vec2::zero())
        } else {
            let p = surface.partner(seed);
            (p.face, p.edge, -surface.translation(seed))
        };
        let shift = offset.dot(flow.n);
        let (h0, h1) = (p0.dot(flow.n) - shift, p1.dot(flow.n) - shift);
        let mut c = Carrier { face, edge, offset, h0: h0.min(h1), h1: h0.max(h1) };
        if dir == 1 {
            out.push(record(surface, &proj, flow.n, &c, 0));
        }
        let budget = cap.saturating_sub(counts[0] + counts[1]);
        loop {
            if counts[dir] >= budget {
                partial = true;
                break;
            }
            match advance(surface, &flow, &c, tol) {
                Step::Moved(next) => {
                    c = next;
                    counts[dir] += 1;
                    let j = if dir == 1 { counts[dir] as i64 } else { -(counts[dir] as i64) };
                    out.push(record(surface, &proj, flow.n, &c, j));
                }
                Step::Split(v) => {
                    terminals[dir] = Some(v);
                    break;
                }
            }
        }
    }
    out.sort_by_key(|iv| iv.j);
    let (u, w) = (counts[0], counts[1]);
    let disjoint_window = max_disjoint_window(&out);
    let (a, b) = surface.edge_points(seed);
    let h_length = ((b - a) * (s1 - s0)).dot(proj.normal).abs();
    Ok(TransportResult {
        theta,
        u,
        w,
        intervals: out,
        v0: terminals[0],
        v1: terminals[1],
        h_length,
        disjoint_window,
        partial,
    })
}

/// Largest `D` such that every run of `D` consecutive intervals is pairwise
/// disjoint: the smallest index gap among overlapping pairs, or the total count.
pub fn max_disjoint_window<T: Real>(intervals: &[TransportedInterval<T>]) -> usize {
    let mut order: Vec<usize> = (0..intervals.len()).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (&intervals[a], &intervals[b]);
        p.edge.cmp(&q.edge).then(p.x_lo.partial_cmp(&q.x_lo).unwrap())
    });
    let mut best = intervals.len();
    for (k, &a) in order.iter().enumerate() {
        let p = &intervals[a];
        for &b in &order[k + 1..] {
            let q = &intervals[b];
            if q.edge != p.edge || q.x_lo >= p.x_hi {
                break;
            }
            best = best.min((p.j - q.j).unsigned_abs() as usize);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::TranslationSurface;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    #[test]
    fn torus_diagonal_projection() {
        let t = TranslationSurface::<f64>::unit_torus();
        let p = build_projection(&t, FRAC_PI_4).unwrap();
        assert!((p.c1 - SQRT_2).abs() < 1e-15);
        assert!((p.image_length(0) - 0.5).abs() < 1e-15);
        assert!((p.image_length(1) - 0.5).abs() < 1e-15);
        assert!(matches!(build_projection(&t, 0.0), Err(Error::DegenerateDirection { .. })));
    }

    #[test]
    fn psi_agrees_on_glued_edges() {
        let t = TranslationSurface::<f64>::unit_torus();
        let p = build_projection(&t, 0.9).unwrap();
        for s in [0.1, 0.5, 0.77] {
            let x = p.psi(&t, EdgeRef::new(0, 0), s);
            let y = p.psi(&t, EdgeRef::new(0, 2), 1.0 - s);
            assert!((x - y).abs() < 1e-15);
            let (e, s2) = p.locate(&t, x);
            assert_eq!(e, EdgeRef::new(0, 0));
            assert!((s2 - s).abs() < 1e-12);
        }
    }

    #[test]
    fn torus_iet_is_rotation() {
        let t = TranslationSurface::<f64>::unit_torus();
        let iet = induced_iet(&t, 1.1).unwrap();
        // a rotation: every branch moves by one of two amounts differing by 1
        let mut offsets: Vec<f64> = iet.branches.iter().map(|b| b.offset).collect();
        offsets.sort_by(f64::total_cmp);
        offsets.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        assert_eq!(offsets.len(), 2);
        assert!((offsets[1] - offsets[0] - 1.0).abs() < 1e-12);
        assert!((iet.total_length() - 1.0).abs() < 1e-12);
        for x in [0.01, 0.3, 0.6, 0.97] {
            assert!((iet.inverse(iet.apply(x)) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn iet_orbit_matches_trace() {
        let t = TranslationSurface::<f64>::unit_torus();
        let start = DirectedPoint::new(0, Vec2::new(0.2, 0.3), 1.01);
        let hs = hitting_set(&t, start, 200).unwrap();
        let iet = induced_iet(&t, start.theta).unwrap();
        let orbit = iet.orbit(hs.points[0], hs.points.len());
        for (a, b) in orbit.iter().zip(&hs.points) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn touching_seed_stops_immediately() {
        let t = TranslationSurface::<f64>::unit_torus();
        let r = transport_interval(&t, 1.0, EdgeRef::new(0, 0), 0.0, 0.01, TRANSPORT_CAP).unwrap();
        assert_eq!((r.u, r.w), (0, 0));
    }

    #[test]
    fn small_seed_transports_far() {
        let t = TranslationSurface::<f64>::unit_torus();
        let theta = (0.5f64 * (1.0 + 5f64.sqrt())).atan();
        let r = transport_interval(&t, theta, EdgeRef::new(0, 0), 0.4, 0.401, TRANSPORT_CAP).unwrap();
        assert!(r.u + r.w > 10);
        assert!(!r.partial);
        assert!(r.segment_bound_holds(t.c4()).unwrap());
        let x0 = r.intervals.iter().find(|i| i.j == 0).unwrap();
        for iv in &r.intervals {
            assert!(((iv.x_hi - iv.x_lo) - (x0.x_hi - x0.x_lo)).abs() < 1e-12);
        }
    }
}
