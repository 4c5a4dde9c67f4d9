//! Saddle connections, cylinders and the bad-direction sets built from them.

use crate::error::{Error, Result};
use crate::flow::{self, Budget, DirectedPoint};
use crate::geom::{self, Vec2};
use crate::intervals::IntervalUnion;
use crate::scalar::Real;
use crate::surface::{EdgeRef, TranslationSurface};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};

/// Default cap on visited triangles during one enumeration.
pub const NODE_BUDGET: usize = 200_000_000;

/// Directions closer than this are treated as equal.
pub const DIRECTION_TOL: f64 = 1e-12;

/// A straight segment between singularities with no singularity inside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SaddleConnectionRec<T> {
    pub holonomy: Vec2<T>,
    pub length: T,
    pub phi: T,
    pub start_sing: usize,
    pub end_sing: usize,
    /// Triangle and corner the connection leaves from.
    #[serde(skip)]
    pub corner: (usize, usize),
}

/// A cylinder of closed geodesics found next to a saddle connection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CylinderRec<T> {
    pub phi: T,
    pub circumference: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DirectionEntry {
    pub phi: f64,
    pub multiplicity: usize,
}

/// Sorted directions with the number of objects found in each.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DirectionSet {
    pub entries: Vec<DirectionEntry>,
}

impl DirectionSet {
    pub fn from_angles<I: IntoIterator<Item = f64>>(angles: I) -> Self {
        let mut v: Vec<f64> = angles.into_iter().collect();
        v.sort_by(f64::total_cmp);
        let mut entries: Vec<DirectionEntry> = Vec::new();
        for phi in v {
            match entries.last_mut() {
                Some(last) if phi - last.phi <= DIRECTION_TOL => last.multiplicity += 1,
                _ => entries.push(DirectionEntry { phi, multiplicity: 1 }),
            }
        }
        // 0 and 2π are the same direction
        if entries.len() > 1 {
            let last = entries[entries.len() - 1];
            if std::f64::consts::TAU - last.phi + entries[0].phi <= DIRECTION_TOL {
                entries[0].multiplicity += last.multiplicity;
                entries.pop();
            }
        }
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn angles(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.phi)
    }

    pub fn contains(&self, phi: f64) -> bool {
        let k = self.entries.partition_point(|e| e.phi < phi - DIRECTION_TOL);
        let near = |i: usize| self.entries.get(i).is_some_and(|e| (e.phi - phi).abs() <= DIRECTION_TOL);
        near(k) || (k > 0 && near(k - 1))
    }

    pub fn is_subset_of(&self, other: &DirectionSet) -> bool {
        self.entries.iter().all(|e| other.contains(e.phi))
    }
}

struct Tri<T> {
    face: usize,
    v: [usize; 3],
    p: [Vec2<T>; 3],
    /// Across edge `k` (corner `k` to `k + 1`): neighbour triangle, its edge,
    /// and the translation carrying this triangle's coordinates into its own.
    nbr: [(usize, usize, Vec2<T>); 3],
}

/// Triangulation of all faces with gluing data across every triangle edge.
struct Mesh<T> {
    tris: Vec<Tri<T>>,
}

impl<T: Real> Mesh<T> {
    fn new(surface: &TranslationSurface<T>) -> Self {
        let mut tris = Vec::new();
        let mut directed: HashMap<(usize, usize, usize), (usize, usize)> = HashMap::new();
        for (f, poly) in surface.faces().iter().enumerate() {
            for t in geom::triangulate(poly.vertices()) {
                let id = tris.len();
                for k in 0..3 {
                    directed.insert((f, t[k], t[(k + 1) % 3]), (id, k));
                }
                let p = [poly.vertex(t[0]), poly.vertex(t[1]), poly.vertex(t[2])];
                tris.push(Tri { face: f, v: t, p, nbr: [(usize::MAX, 0, Vec2::zero()); 3] });
            }
        }
        for id in 0..tris.len() {
            for k in 0..3 {
                let (f, a, b) = (tris[id].face, tris[id].v[k], tris[id].v[(k + 1) % 3]);
                let n = surface.face(f).len();
                let nb = if b == (a + 1) % n {
                    let e = EdgeRef::new(f, a);
                    let p = surface.partner(e);
                    let m = surface.face(p.face).len();
                    let (t2, k2) = directed[&(p.face, p.edge, (p.edge + 1) % m)];
                    (t2, k2, surface.translation(e))
                } else {
                    let (t2, k2) = directed[&(f, b, a)];
                    (t2, k2, Vec2::zero())
                };
                tris[id].nbr[k] = nb;
            }
        }
        Self { tris }
    }
}

struct Search<'a, T> {
    surface: &'a TranslationSurface<T>,
    mesh: &'a Mesh<T>,
    t_max: T,
    nodes: &'a AtomicUsize,
    budget: usize,
}

struct Wedge<T> {
    tri: usize,
    offset: Vec2<T>,
    edge: usize,
    lo: Vec2<T>,
    hi: Vec2<T>,
}

impl<T: Real> Search<'_, T> {
    fn inside(lo: Vec2<T>, q: Vec2<T>, hi: Vec2<T>) -> bool {
        let eps = T::rel_tol(1e-12);
        lo.cross(q) > eps * lo.norm() * q.norm() && q.cross(hi) > eps * q.norm() * hi.norm()
    }

    /// Distance from the origin to the part of segment `pq` inside the wedge.
    fn reach(p: Vec2<T>, q: Vec2<T>, lo: Vec2<T>, hi: Vec2<T>) -> T {
        let d = q - p;
        let (mut u0, mut u1) = (T::zero(), T::one());
        let slack = T::rel_tol(1e-12);
        for (c0, c1) in [(lo.cross(p), lo.cross(d)), (p.cross(hi), d.cross(hi))] {
            let c0 = c0 + slack * (p.norm() + d.norm()) * (lo.norm() + hi.norm());
            if c1 > T::zero() {
                u0 = u0.max(-c0 / c1);
            } else if c1 < T::zero() {
                u1 = u1.min(-c0 / c1);
            } else if c0 < T::zero() {
                return T::infinity();
            }
        }
        if u0 > u1 {
            return geom::distance_to_segment(Vec2::zero(), p, q);
        }
        let l2 = d.norm2();
        let u = if l2 > T::zero() { (-p.dot(d) / l2).max(u0).min(u1) } else { u0 };
        (p + d * u).norm()
    }

    fn corner(&self, tri: usize, k: usize) -> Result<Vec<SaddleConnectionRec<T>>> {
        let t = &self.mesh.tris[tri];
        let origin = t.p[k];
        let start_sing = self.surface.vertex_class(t.face, t.v[k]);
        let mut out = Vec::new();
        let lo = t.p[(k + 1) % 3] - origin;
        let hi = t.p[(k + 2) % 3] - origin;
        let mut push = |h: Vec2<T>, end: usize| {
            out.push(SaddleConnectionRec {
                holonomy: h,
                length: h.norm(),
                phi: h.angle(),
                start_sing,
                end_sing: end,
                corner: (tri, k),
            })
        };
        if lo.norm() <= self.t_max {
            push(lo, self.surface.vertex_class(t.face, t.v[(k + 1) % 3]));
        }
        let mut stack = vec![Wedge { tri, offset: -origin, edge: (k + 1) % 3, lo, hi }];
        while let Some(w) = stack.pop() {
            let cur = &self.mesh.tris[w.tri];
            let p = cur.p[w.edge] + w.offset;
            let q = cur.p[(w.edge + 1) % 3] + w.offset;
            if Self::reach(p, q, w.lo, w.hi) > self.t_max {
                continue;
            }
            if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.budget {
                return Err(Error::BudgetExhausted(self.budget));
            }
            let (nt, nk, tr) = cur.nbr[w.edge];
            let next = &self.mesh.tris[nt];
            let offset = w.offset - tr;
            let apex = next.p[(nk + 2) % 3] + offset;
            if Self::inside(w.lo, apex, w.hi) {
                if apex.norm() <= self.t_max {
                    push(apex, self.surface.vertex_class(next.face, next.v[(nk + 2) % 3]));
                }
                stack.push(Wedge { tri: nt, offset, edge: (nk + 1) % 3, lo: w.lo, hi: apex });
                stack.push(Wedge { tri: nt, offset, edge: (nk + 2) % 3, lo: apex, hi: w.hi });
            } else if w.lo.cross(apex) <= T::rel_tol(1e-12) * w.lo.norm() * apex.norm() {
                stack.push(Wedge { tri: nt, offset, edge: (nk + 2) % 3, lo: w.lo, hi: w.hi });
            } else {
                stack.push(Wedge { tri: nt, offset, edge: (nk + 1) % 3, lo: w.lo, hi: w.hi });
            }
        }
        Ok(out)
    }
}

fn sort_records<T: Real>(v: &mut [SaddleConnectionRec<T>]) {
    v.sort_by(|a, b| {
        a.phi
            .partial_cmp(&b.phi)
            .unwrap()
            .then(a.length.partial_cmp(&b.length).unwrap())
            .then(a.start_sing.cmp(&b.start_sing))
            .then(a.end_sing.cmp(&b.end_sing))
            .then(a.corner.cmp(&b.corner))
    });
}

/// All saddle connections of length at most `t_max`, one per oriented segment.
pub fn enumerate_saddle_connections<T: Real>(
    surface: &TranslationSurface<T>,
    t_max: T,
) -> Result<Vec<SaddleConnectionRec<T>>> {
    enumerate_with_budget(surface, t_max, NODE_BUDGET)
}

pub fn enumerate_with_budget<T: Real>(
    surface: &TranslationSurface<T>,
    t_max: T,
    budget: usize,
) -> Result<Vec<SaddleConnectionRec<T>>> {
    if !(t_max > T::zero()) {
        return Err(Error::NonpositiveInput { name: "T", value: t_max.as_f64() });
    }
    let mesh = Mesh::new(surface);
    let nodes = AtomicUsize::new(0);
    let search = Search { surface, mesh: &mesh, t_max, nodes: &nodes, budget };
    let corners: Vec<(usize, usize)> = (0..mesh.tris.len()).flat_map(|t| (0..3).map(move |k| (t, k))).collect();
    let parts: Vec<Vec<SaddleConnectionRec<T>>> =
        corners.par_iter().map(|&(t, k)| search.corner(t, k)).collect::<Result<_>>()?;
    let mut all: Vec<_> = parts.into_iter().flatten().collect();
    sort_records(&mut all);
    Ok(all)
}

/// CSV with columns `dx,dy,length,phi,start_sing,end_sing`.
pub fn saddle_csv<T: Real>(recs: &[SaddleConnectionRec<T>]) -> String {
    let mut out = String::from("dx,dy,length,phi,start_sing,end_sing\n");
    for r in recs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.holonomy.x, r.holonomy.y, r.length, r.phi, r.start_sing, r.end_sing
        );
    }
    out
}

/// Looks for a cylinder on the left of `rec`: a trajectory started just off the
/// connection, parallel to it, that closes up within time `t_max`.
fn probe_cylinder<T: Real>(
    surface: &TranslationSurface<T>,
    mesh: &Mesh<T>,
    rec: &SaddleConnectionRec<T>,
    t_max: T,
) -> Option<T> {
    let (tri, k) = rec.corner;
    let t = &mesh.tris[tri];
    let origin = t.p[k];
    let hi = t.p[(k + 2) % 3] - origin;
    let h = rec.holonomy;
    let gap = h.cross(hi).atan2(h.dot(hi));
    let alpha = T::lit(0.01).min(gap / T::lit(2.0));
    let opposite = t.p[(k + 2) % 3] - t.p[(k + 1) % 3];
    let height = (t.p[(k + 1) % 3] - origin).cross(opposite).abs() / opposite.norm();
    let r = height * T::lit(1e-3);
    let p = origin + Vec2::from_angle(rec.phi + alpha) * r;
    let tol = surface.c7() * T::rel_tol(1e-9);
    let mut found = None;
    let start = DirectedPoint::new(t.face, p, rec.phi);
    let horizon = t_max * (T::one() + T::rel_tol(1e-9)) + tol;
    let run = flow::walk(
        surface,
        start,
        Budget::MaxTime(horizon),
        |seg| {
            if seg.face != t.face || seg.t1 < r {
                return true;
            }
            let d = seg.b - seg.a;
            let l2 = d.norm2();
            if l2 == T::zero() {
                return true;
            }
            let u = ((p - seg.a).dot(d) / l2).max(T::zero()).min(T::one());
            let tt = seg.t0 + (seg.t1 - seg.t0) * u;
            if tt > r && (seg.a + d * u).dist(p) < tol * (T::one() + tt) {
                found = Some(tt);
                return false;
            }
            true
        },
        |_, _| {},
    );
    match run {
        Ok(_) => found,
        Err(_) => None,
    }
}

/// Saddle connections up to `t_max` together with the cylinders bounded by them.
#[derive(Clone, Debug, Serialize)]
pub struct SaddleCensus<T> {
    pub t_max: T,
    pub connections: Vec<SaddleConnectionRec<T>>,
    pub cylinders: Vec<CylinderRec<T>>,
}

impl<T: Real> SaddleCensus<T> {
    pub fn new(surface: &TranslationSurface<T>, t_max: T) -> Result<Self> {
        Self::with_budget(surface, t_max, NODE_BUDGET)
    }

    pub fn with_budget(surface: &TranslationSurface<T>, t_max: T, budget: usize) -> Result<Self> {
        let connections = enumerate_with_budget(surface, t_max, budget)?;
        let mesh = Mesh::new(surface);
        let mut cylinders: Vec<CylinderRec<T>> = connections
            .par_iter()
            .filter_map(|rec| {
                probe_cylinder(surface, &mesh, rec, t_max).map(|c| CylinderRec { phi: rec.phi, circumference: c })
            })
            .collect();
        cylinders.sort_by(|a, b| a.phi.partial_cmp(&b.phi).unwrap().then(a.circumference.partial_cmp(&b.circumference).unwrap()));
        Ok(Self { t_max, connections, cylinders })
    }

    fn check(&self, t: T) {
        assert!(t <= self.t_max * (T::one() + T::epsilon()), "census only covers lengths up to {}", self.t_max);
    }

    /// Directions of saddle connections of length at most `t`.
    pub fn n2(&self, t: T) -> DirectionSet {
        self.check(t);
        DirectionSet::from_angles(self.connections.iter().filter(|r| r.length <= t).map(|r| r.phi.as_f64()))
    }

    /// Directions of closed geodesics of length at most `t`.
    pub fn n1(&self, t: T) -> DirectionSet {
        self.check(t);
        DirectionSet::from_angles(self.cylinders.iter().filter(|c| c.circumference <= t).map(|c| c.phi.as_f64()))
    }

    /// Directions with lengths in `(t/2, t]`: closed geodesics, then saddle connections.
    pub fn annulus(&self, t: T) -> (DirectionSet, DirectionSet) {
        self.check(t);
        let half = t / T::lit(2.0);
        let n1 = DirectionSet::from_angles(
            self.cylinders.iter().filter(|c| c.circumference > half && c.circumference <= t).map(|c| c.phi.as_f64()),
        );
        let n2 = DirectionSet::from_angles(
            self.connections.iter().filter(|r| r.length > half && r.length <= t).map(|r| r.phi.as_f64()),
        );
        (n1, n2)
    }

    /// The bad-direction union for scale `n` and width constant `c0`.
    pub fn omega(&self, n: f64, c0: f64) -> IntervalUnion {
        let top = n.floor() as i64;
        let mut arcs = Vec::new();
        for m in 1..=top {
            let scale = T::lit(2f64.powi(m as i32));
            let (a, b) = self.annulus(scale);
            let half_width = 1.0 / (c0 * 2f64.powf(n + m as f64));
            for phi in a.angles().chain(b.angles()) {
                arcs.push((phi - half_width, phi + half_width));
            }
        }
        IntervalUnion::from_arcs(arcs)
    }
}

pub fn periodic_directions<T: Real>(surface: &TranslationSurface<T>, t_max: T) -> Result<DirectionSet> {
    Ok(SaddleCensus::new(surface, t_max)?.n1(t_max))
}

pub fn annulus_sets<T: Real>(surface: &TranslationSurface<T>, t_max: T) -> Result<(DirectionSet, DirectionSet)> {
    Ok(SaddleCensus::new(surface, t_max)?.annulus(t_max))
}

/// Union over `1 ≤ m ≤ ⌊n⌋` of arcs of half-width `1/(c₀2^{n+m})` around the
/// directions of closed geodesics and saddle connections with length in `(2^{m−1}, 2^m]`.
pub fn omega_set<T: Real>(surface: &TranslationSurface<T>, n: f64, c0: f64) -> Result<IntervalUnion> {
    if c0 < 4.0 {
        return Err(Error::InvalidParameter(format!("c0 = {c0} must be at least 4")));
    }
    if n < 1.0 {
        return Ok(IntervalUnion::empty());
    }
    let census = SaddleCensus::new(surface, T::lit(2f64.powi(n.floor() as i32)))?;
    Ok(census.omega(n, c0))
}

/// Least-squares fit of `count ≈ C★·T²` over a ladder of lengths.
#[derive(Clone, Debug, Serialize)]
pub struct CountingFit {
    pub ladder: Vec<f64>,
    pub counts: Vec<usize>,
    pub c_star: f64,
    /// Largest observed `count/T²`.
    pub max_ratio: f64,
}

pub fn fit_counting_constant<T: Real>(census: &SaddleCensus<T>, ladder: &[f64]) -> CountingFit {
    let counts: Vec<usize> = ladder.iter().map(|&t| census.n2(T::lit(t)).len()).collect();
    let num: f64 = ladder.iter().zip(&counts).map(|(t, &c)| c as f64 * t * t).sum();
    let den: f64 = ladder.iter().map(|t| t.powi(4)).sum();
    let max_ratio = ladder.iter().zip(&counts).map(|(t, &c)| c as f64 / (t * t)).fold(0.0, f64::max);
    CountingFit { ladder: ladder.to_vec(), counts, c_star: num / den, max_ratio }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_unit_length() {
        let t = TranslationSurface::<f64>::unit_torus();
        let recs = enumerate_saddle_connections(&t, 1.0).unwrap();
        let mut h: Vec<(i64, i64)> = recs.iter().map(|r| (r.holonomy.x as i64, r.holonomy.y as i64)).collect();
        h.sort();
        assert_eq!(h, vec![(-1, 0), (0, -1), (0, 1), (1, 0)]);
    }

    #[test]
    fn torus_cylinders_match_connections() {
        let t = TranslationSurface::<f64>::unit_torus();
        let census = SaddleCensus::new(&t, 5.0).unwrap();
        assert_eq!(census.n1(5.0), DirectionSet { entries: census.n2(5.0).entries.clone() });
        let (a, b) = census.annulus(1.0);
        assert_eq!(a.len(), 4);
        assert_eq!(b.len(), 4);
    }

    #[test]
    fn omega_empty_below_one() {
        let t = TranslationSurface::<f64>::unit_torus();
        assert!(omega_set(&t, 0.5, 16.0).unwrap().is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        let t = TranslationSurface::<f64>::unit_torus();
        assert!(matches!(enumerate_with_budget(&t, 30.0, 100), Err(Error::BudgetExhausted(100))));
    }
}
