//! Planar vectors and polygon primitives.

use crate::scalar::{wrap_angle, Real};
use serde::de::{Deserialize, Deserializer};
use serde::ser::{Serialize, SerializeTuple, Serializer};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// A point or displacement in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Unit vector of direction `theta`.
    #[inline]
    pub fn from_angle(theta: T) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, s)
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3d cross product.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm2(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    /// Counterclockwise quarter turn.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    /// Direction angle in `[0, 2π)`.
    #[inline]
    pub fn angle(self) -> T {
        wrap_angle(self.y.atan2(self.x))
    }

    #[inline]
    pub fn scale(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k)
    }

    #[inline]
    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }

    pub fn cast<U: Real>(self) -> Vec2<U> {
        Vec2::new(U::lit(self.x.as_f64()), U::lit(self.y.as_f64()))
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> AddAssign for Vec2<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> SubAssign for Vec2<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, k: T) -> Self {
        self.scale(k)
    }
}

impl<T: Real> Div<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn div(self, k: T) -> Self {
        Self::new(self.x / k, self.y / k)
    }
}

impl<T: Serialize> Serialize for Vec2<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&self.x)?;
        t.serialize_element(&self.y)?;
        t.end()
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Vec2<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (x, y) = <(T, T)>::deserialize(d)?;
        Ok(Vec2 { x, y })
    }
}

/// Signed area (positive for counterclockwise order).
pub fn signed_area<T: Real>(pts: &[Vec2<T>]) -> T {
    let n = pts.len();
    let mut acc = T::zero();
    for i in 0..n {
        acc = acc + pts[i].cross(pts[(i + 1) % n]);
    }
    acc / T::lit(2.0)
}

/// Largest distance between two vertices.
pub fn vertex_diameter<T: Real>(pts: &[Vec2<T>]) -> T {
    let mut d = T::zero();
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            d = d.max(a.dist(*b));
        }
    }
    d
}

/// Proper or touching intersection of closed segments `ab` and `cd`.
pub fn segments_intersect<T: Real>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>, d: Vec2<T>) -> bool {
    let o1 = (b - a).cross(c - a);
    let o2 = (b - a).cross(d - a);
    let o3 = (d - c).cross(a - c);
    let o4 = (d - c).cross(b - c);
    let z = T::zero();
    if ((o1 > z && o2 < z) || (o1 < z && o2 > z)) && ((o3 > z && o4 < z) || (o3 < z && o4 > z)) {
        return true;
    }
    let on = |p: Vec2<T>, q: Vec2<T>, r: Vec2<T>, o: T| {
        o == z && r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

/// True when no two non-adjacent edges meet and no vertex repeats.
pub fn is_simple<T: Real>(pts: &[Vec2<T>]) -> bool {
    let n = pts.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            if pts[i] == pts[j] {
                return false;
            }
        }
    }
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (c, d) = (pts[j], pts[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Interior angle at vertex `i` of a counterclockwise polygon, in `(0, 2π)`.
pub fn interior_angle<T: Real>(pts: &[Vec2<T>], i: usize) -> T {
    let n = pts.len();
    let prev = pts[(i + n - 1) % n];
    let cur = pts[i];
    let next = pts[(i + 1) % n];
    let out = next - cur;
    let back = prev - cur;
    // counterclockwise sweep from the outgoing edge to the reversed incoming edge
    wrap_angle(back.angle() - out.angle())
}

/// Even-odd point containment.
pub fn point_in_polygon<T: Real>(pts: &[Vec2<T>], p: Vec2<T>) -> bool {
    let n = pts.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (pts[i], pts[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn distance_to_segment<T: Real>(p: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> T {
    let ab = b - a;
    let l2 = ab.norm2();
    if l2 == T::zero() {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / l2).max(T::zero()).min(T::one());
    p.dist(a + ab * t)
}

/// Distance from `p` to the polygon boundary.
pub fn boundary_distance<T: Real>(pts: &[Vec2<T>], p: Vec2<T>) -> T {
    let n = pts.len();
    (0..n)
        .map(|i| distance_to_segment(p, pts[i], pts[(i + 1) % n]))
        .fold(T::infinity(), T::min)
}

/// Diameter of a large inscribed disc: grid search for the point farthest
/// from the boundary followed by compass refinement. Any interior point
/// yields a valid inscribed disc, so the result is a lower bound of the optimum.
pub fn inscribed_diameter<T: Real>(pts: &[Vec2<T>]) -> T {
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for p in pts {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let steps = 48usize;
    let span = hi - lo;
    let score = |p: Vec2<T>| {
        if point_in_polygon(pts, p) {
            boundary_distance(pts, p)
        } else {
            T::zero()
        }
    };
    let mut best = (T::zero(), (lo + hi) / T::lit(2.0));
    for i in 0..=steps {
        for j in 0..=steps {
            let p = Vec2::new(
                lo.x + span.x * T::from_usize_lossy(i) / T::from_usize_lossy(steps),
                lo.y + span.y * T::from_usize_lossy(j) / T::from_usize_lossy(steps),
            );
            let s = score(p);
            if s > best.0 {
                best = (s, p);
            }
        }
    }
    let mut step = span.x.max(span.y) / T::from_usize_lossy(steps);
    let min_step = step * T::lit(1e-7);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let dirs = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (r, r), (-r, r), (r, -r), (-r, -r)];
    while step > min_step {
        let mut improved = false;
        for (dx, dy) in dirs {
            let p = best.1 + Vec2::new(T::lit(dx), T::lit(dy)) * step;
            let s = score(p);
            if s > best.0 {
                best = (s, p);
                improved = true;
            }
        }
        if !improved {
            step = step / T::lit(2.0);
        }
    }
    best.0 * T::lit(2.0)
}

/// Clips a polygon against a convex counterclockwise window (Sutherland–Hodgman).
pub fn clip_polygon<T: Real>(subject: &[Vec2<T>], window: &[Vec2<T>]) -> Vec<Vec2<T>> {
    let mut out: Vec<Vec2<T>> = subject.to_vec();
    let m = window.len();
    for i in 0..m {
        if out.is_empty() {
            break;
        }
        let (a, b) = (window[i], window[(i + 1) % m]);
        let e = b - a;
        let inside = |p: Vec2<T>| e.cross(p - a) >= T::zero();
        let input = std::mem::take(&mut out);
        let k = input.len();
        for j in 0..k {
            let cur = input[j];
            let prev = input[(j + k - 1) % k];
            let (ci, pi) = (inside(cur), inside(prev));
            if ci != pi {
                let d = cur - prev;
                let denom = e.cross(d);
                if denom != T::zero() {
                    let t = e.cross(a - prev) / denom;
                    out.push(prev + d * t);
                }
            }
            if ci {
                out.push(cur);
            }
        }
    }
    out
}

/// Parameter range `[t0, t1] ⊂ [0, 1]` of segment `ab` inside a convex
/// counterclockwise polygon (Cyrus–Beck), or `None`.
pub fn clip_segment_convex<T: Real>(a: Vec2<T>, b: Vec2<T>, poly: &[Vec2<T>]) -> Option<(T, T)> {
    let d = b - a;
    let (mut t0, mut t1) = (T::zero(), T::one());
    let n = poly.len();
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let e = q - p;
        // inside: e × (x − p) ≥ 0
        let num = e.cross(a - p);
        let den = e.cross(d);
        if den == T::zero() {
            if num < T::zero() {
                return None;
            }
            continue;
        }
        let t = -num / den;
        if den > T::zero() {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

/// Ear-clipping triangulation of a simple counterclockwise polygon.
/// Returns index triples in counterclockwise order.
pub fn triangulate<T: Real>(pts: &[Vec2<T>]) -> Vec<[usize; 3]> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    let mut tris = Vec::with_capacity(pts.len().saturating_sub(2));
    let mut guard = 0usize;
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
            if (b - a).cross(c - b) <= T::zero() {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                if j == ia || j == ib || j == ic {
                    return false;
                }
                let p = pts[j];
                (b - a).cross(p - a) >= T::zero() && (c - b).cross(p - b) >= T::zero() && (a - c).cross(p - c) >= T::zero()
            });
            if blocked {
                continue;
            }
            tris.push([ia, ib, ic]);
            idx.remove(k);
            clipped = true;
            break;
        }
        guard += 1;
        if !clipped || guard > 4 * pts.len() {
            // degenerate input; fall back to a fan over what remains
            for k in 1..idx.len() - 1 {
                tris.push([idx[0], idx[k], idx[k + 1]]);
            }
            return tris;
        }
    }
    tris.push([idx[0], idx[1], idx[2]]);
    tris
}
