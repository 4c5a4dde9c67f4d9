//! Straight-line flow on a translation surface.
//!
//! Tracing happens in the developed plane: each visited face copy carries the
//! offset that places it along the straight line `origin + t·d`, so crossing
//! times are computed against the global line instead of being accumulated.

use crate::error::{Error, Result};
use crate::geom::{self, Vec2};
use crate::scalar::{wrap_angle, Real};
use crate::surface::{EdgeRef, TranslationSurface};
use serde::Serialize;
use std::fmt::Write as _;

/// A point inside a face together with a direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DirectedPoint<T> {
    pub face: usize,
    pub position: Vec2<T>,
    pub theta: T,
}

impl<T: Real> DirectedPoint<T> {
    pub fn new(face: usize, position: Vec2<T>, theta: T) -> Self {
        Self { face, position, theta: wrap_angle(theta) }
    }

    pub fn direction(&self) -> Vec2<T> {
        Vec2::from_angle(self.theta)
    }
}

/// When to stop a trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget<T> {
    MaxTime(T),
    MaxHits(usize),
}

/// One edge crossing: the edge left through, the normalized position along it,
/// and the crossing point on the developed line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HitRecord<T> {
    pub t: T,
    pub edge: EdgeRef,
    pub s: T,
    pub dev_point: Vec2<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HitSequence<T> {
    pub start: DirectedPoint<T>,
    pub hits: Vec<HitRecord<T>>,
    /// Position after the budget ran out.
    pub end: DirectedPoint<T>,
    pub elapsed: T,
}

impl<T: Real> HitSequence<T> {
    /// CSV with columns `t,face,edge,s,dev_x,dev_y`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,face,edge,s,dev_x,dev_y\n");
        for h in &self.hits {
            let _ = writeln!(out, "{},{},{},{},{},{}", h.t, h.edge.face, h.edge.edge, h.s, h.dev_point.x, h.dev_point.y);
        }
        out
    }
}

/// A face copy placed in the developed plane: local point `p` sits at `p + offset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlacedFace<T> {
    pub face: usize,
    pub offset: Vec2<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Development<T> {
    pub origin: Vec2<T>,
    pub theta: T,
    pub copies: Vec<PlacedFace<T>>,
    pub hits: Vec<HitRecord<T>>,
}

/// A straight piece of the trajectory inside one face, in face coordinates,
/// covering times `[t0, t1]`.
#[derive(Clone, Copy, Debug)]
pub struct Segment<T> {
    pub face: usize,
    pub a: Vec2<T>,
    pub b: Vec2<T>,
    pub t0: T,
    pub t1: T,
}

/// A convex cell inside a single face.
#[derive(Clone, Debug)]
pub struct RegionCell<T> {
    pub face: usize,
    pub polygon: Vec<Vec2<T>>,
}

struct Exit<T> {
    edge: usize,
    t: T,
    s: T,
}

/// Follows the flow from `start`, calling `on_segment` for every piece inside a
/// face and `on_hit` for every crossing. A `false` from `on_segment` stops the
/// walk early. Returns the end point and elapsed time.
pub fn walk<T: Real>(
    surface: &TranslationSurface<T>,
    start: DirectedPoint<T>,
    budget: Budget<T>,
    mut on_segment: impl FnMut(Segment<T>) -> bool,
    mut on_hit: impl FnMut(&HitRecord<T>, &PlacedFace<T>),
) -> Result<(DirectedPoint<T>, T)> {
    let d = start.direction();
    let vtol = surface.c7() * T::rel_tol(1e-12);
    let mut face = start.face;
    let mut offset = Vec2::zero();
    let origin = start.position;
    let mut entry: Option<usize> = None;
    let mut t_now = T::zero();
    let mut hits = 0usize;

    let poly = surface.face(face);
    for v in 0..poly.len() {
        if poly.vertex(v).dist(origin) < vtol {
            return Err(Error::VertexHit { t: 0.0, singularity: surface.vertex_class(face, v) });
        }
    }
    for e in 0..poly.len() {
        let (a, b) = poly.edge(e);
        if geom::distance_to_segment(origin, a, b) < surface.tol() {
            if d.cross(b - a) > T::zero() {
                let p = surface.partner(EdgeRef::new(face, e));
                offset -= surface.translation(EdgeRef::new(face, e));
                face = p.face;
                entry = Some(p.edge);
            } else {
                entry = Some(e);
            }
            break;
        }
    }

    loop {
        if let Budget::MaxHits(n) = budget {
            if hits >= n {
                return Ok((DirectedPoint { face, position: origin + d * t_now - offset, theta: start.theta }, t_now));
            }
        }
        let exit = find_exit(surface, face, offset, origin, d, entry, t_now, vtol)?;
        if let Budget::MaxTime(tmax) = budget {
            if exit.t >= tmax {
                on_segment(Segment {
                    face,
                    a: origin + d * t_now - offset,
                    b: origin + d * tmax - offset,
                    t0: t_now,
                    t1: tmax,
                });
                return Ok((DirectedPoint { face, position: origin + d * tmax - offset, theta: start.theta }, tmax));
            }
        }
        let dev = origin + d * exit.t;
        if !on_segment(Segment { face, a: origin + d * t_now - offset, b: dev - offset, t0: t_now, t1: exit.t }) {
            return Ok((DirectedPoint { face, position: dev - offset, theta: start.theta }, exit.t));
        }
        let edge = EdgeRef::new(face, exit.edge);
        let rec = HitRecord { t: exit.t, edge, s: exit.s, dev_point: dev };
        on_hit(&rec, &PlacedFace { face, offset });
        hits += 1;
        t_now = exit.t;
        let p = surface.partner(edge);
        offset -= surface.translation(edge);
        face = p.face;
        entry = Some(p.edge);
    }
}

#[allow(clippy::too_many_arguments)]
fn find_exit<T: Real>(
    surface: &TranslationSurface<T>,
    face: usize,
    offset: Vec2<T>,
    origin: Vec2<T>,
    d: Vec2<T>,
    entry: Option<usize>,
    t_now: T,
    vtol: T,
) -> Result<Exit<T>> {
    let poly = surface.face(face);
    let n = poly.len();
    let mut best: Option<Exit<T>> = None;
    for e in 0..n {
        if entry == Some(e) {
            continue;
        }
        let a = poly.vertex(e) + offset;
        let ev = poly.edge_vector(e);
        let den = d.cross(ev);
        if den <= T::zero() {
            continue;
        }
        let ao = a - origin;
        let t = ao.cross(ev) / den;
        let s = ao.cross(d) / den;
        let len = ev.norm();
        let stol = vtol / len;
        if s < -stol || s > T::one() + stol || t < t_now - vtol {
            continue;
        }
        if best.as_ref().is_none_or(|b| t < b.t) {
            best = Some(Exit { edge: e, t, s });
        }
    }
    let Some(exit) = best else {
        let here = origin + d * t_now - offset;
        let v = (0..n)
            .min_by(|&i, &j| poly.vertex(i).dist(here).partial_cmp(&poly.vertex(j).dist(here)).unwrap())
            .unwrap_or(0);
        return Err(Error::VertexHit { t: t_now.as_f64(), singularity: surface.vertex_class(face, v) });
    };
    let len = poly.edge_vector(exit.edge).norm();
    if exit.s * len < vtol {
        return Err(Error::VertexHit { t: exit.t.as_f64(), singularity: surface.vertex_class(face, exit.edge) });
    }
    if (T::one() - exit.s) * len < vtol {
        return Err(Error::VertexHit { t: exit.t.as_f64(), singularity: surface.vertex_class(face, exit.edge + 1) });
    }
    Ok(exit)
}

/// Records every edge crossing until the budget runs out.
pub fn trace<T: Real>(
    surface: &TranslationSurface<T>,
    start: DirectedPoint<T>,
    budget: Budget<T>,
) -> Result<HitSequence<T>> {
    let mut hits = Vec::new();
    let (end, elapsed) = walk(surface, start, budget, |_| true, |h, _| hits.push(*h))?;
    Ok(HitSequence { start, hits, end, elapsed })
}

/// Chain of `n_steps + 1` placed face copies the straight line passes through.
pub fn develop<T: Real>(
    surface: &TranslationSurface<T>,
    start: DirectedPoint<T>,
    n_steps: usize,
) -> Result<Development<T>> {
    let mut copies = Vec::with_capacity(n_steps + 1);
    let mut hits = Vec::with_capacity(n_steps);
    let (end, elapsed) = walk(
        surface,
        start,
        Budget::MaxHits(n_steps),
        |_| true,
        |h, placed| {
            copies.push(*placed);
            hits.push(*h);
        },
    )?;
    let dev_end = start.position + start.direction() * elapsed;
    copies.push(PlacedFace { face: end.face, offset: dev_end - end.position });
    Ok(Development { origin: start.position, theta: start.theta, copies, hits })
}

/// Total time in `[0, T]` spent inside the union of `region` cells.
pub fn occupancy<T: Real>(
    surface: &TranslationSurface<T>,
    start: DirectedPoint<T>,
    t_max: T,
    region: &[RegionCell<T>],
) -> Result<T> {
    let mut by_face: Vec<Vec<&[Vec2<T>]>> = vec![Vec::new(); surface.faces().len()];
    for c in region {
        by_face[c.face].push(&c.polygon);
    }
    let mut total = T::zero();
    walk(
        surface,
        start,
        Budget::MaxTime(t_max),
        |seg| {
            let dt = seg.t1 - seg.t0;
            for cell in &by_face[seg.face] {
                if let Some((u0, u1)) = geom::clip_segment_convex(seg.a, seg.b, cell) {
                    total = total + dt * (u1 - u0);
                }
            }
            true
        },
        |_, _| {},
    )?;
    Ok(total)
}

/// The whole of every face, split into convex pieces.
pub fn whole_surface_region<T: Real>(surface: &TranslationSurface<T>) -> Vec<RegionCell<T>> {
    let mut out = Vec::new();
    for (f, poly) in surface.faces().iter().enumerate() {
        if poly.is_convex() {
            out.push(RegionCell { face: f, polygon: poly.vertices().to_vec() });
        } else {
            for t in geom::triangulate(poly.vertices()) {
                out.push(RegionCell { face: f, polygon: t.iter().map(|&i| poly.vertex(i)).collect() });
            }
        }
    }
    out
}
