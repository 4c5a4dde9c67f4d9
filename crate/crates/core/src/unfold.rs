//! Unfolding of rational billiard tables into translation surfaces.

use crate::error::{Error, Result};
use crate::geom::{self, Vec2};
use crate::scalar::Real;
use crate::surface::{EdgeRef, Polygon, TranslationSurface};
use num_integer::Integer;
use num_rational::Ratio;
use std::collections::HashMap;

/// A polygon whose interior angles are rational multiples of π.
/// `angles[i]` is the angle at vertex `i` divided by π.
#[derive(Clone, Debug)]
pub struct RationalPolygon<T> {
    polygon: Polygon<T>,
    angles: Vec<Ratio<i64>>,
}

impl<T: Real> RationalPolygon<T> {
    /// Checks declared angles against the vertex geometry.
    pub fn new(vertices: Vec<Vec2<T>>, angles: Vec<Ratio<i64>>) -> Result<Self> {
        let polygon = Polygon::new(vertices)?;
        if angles.len() != polygon.len() {
            return Err(Error::InvalidParameter(format!(
                "{} angles for {} vertices",
                angles.len(),
                polygon.len()
            )));
        }
        for (i, a) in angles.iter().enumerate() {
            if *a.denom() < 1 || *a.numer() <= 0 {
                return Err(Error::DegeneratePolygon(format!("angle {a} at vertex {i}")));
            }
            let declared = T::PI() * T::lit(*a.numer() as f64) / T::lit(*a.denom() as f64);
            let err = (declared - polygon.interior_angle(i)).abs();
            if err > T::rel_tol(1e-9) {
                return Err(Error::AngleMismatch { vertex: i, error: err.as_f64() });
            }
        }
        Ok(Self { polygon, angles })
    }

    /// Recovers each angle as the simplest fraction of π with denominator at most `max_den`.
    pub fn from_vertices(vertices: Vec<Vec2<T>>, max_den: i64) -> Result<Self> {
        let polygon = Polygon::new(vertices)?;
        let mut angles = Vec::with_capacity(polygon.len());
        for i in 0..polygon.len() {
            let a = (polygon.interior_angle(i) / T::PI()).as_f64();
            let tol = T::rel_tol(1e-9).as_f64();
            let found = (1..=max_den).find_map(|q| {
                let p = (a * q as f64).round() as i64;
                ((a - p as f64 / q as f64).abs() < tol).then(|| Ratio::new(p, q))
            });
            angles.push(found.ok_or(Error::IrrationalAngle { vertex: i, cap: max_den })?);
        }
        Ok(Self { polygon, angles })
    }

    pub fn polygon(&self) -> &Polygon<T> {
        &self.polygon
    }

    pub fn angles(&self) -> &[Ratio<i64>] {
        &self.angles
    }

    /// Least common multiple of the angle denominators.
    pub fn order(&self) -> i64 {
        self.angles.iter().fold(1i64, |acc, a| acc.lcm(a.denom()))
    }
}

/// Linear part of a reflected copy: rotation by `2π·rot/N`, preceded by the
/// reflection across the x-axis when `reflect` is set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dihedral {
    pub rot: i64,
    pub reflect: bool,
}

impl Dihedral {
    fn compose(self, other: Dihedral, n: i64) -> Dihedral {
        let b = if self.reflect { -other.rot } else { other.rot };
        Dihedral { rot: (self.rot + b).rem_euclid(n), reflect: self.reflect ^ other.reflect }
    }

    fn inverse(self, n: i64) -> Dihedral {
        if self.reflect {
            self
        } else {
            Dihedral { rot: (-self.rot).rem_euclid(n), reflect: false }
        }
    }

    fn apply<T: Real>(self, v: Vec2<T>, n: i64) -> Vec2<T> {
        let v = if self.reflect { Vec2::new(v.x, -v.y) } else { v };
        let ang = T::two_pi() * T::lit(self.rot as f64) / T::lit(n as f64);
        let (s, c) = ang.sin_cos();
        Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
    }
}

/// A translation surface built from reflected copies of a billiard table,
/// with the data needed to fold points back onto the table.
#[derive(Clone, Debug)]
pub struct Unfolding<T> {
    pub surface: TranslationSurface<T>,
    /// Linear part of each copy; face `i` of the surface is copy `i`.
    pub copies: Vec<Dihedral>,
    /// Translation applied to each copy after its linear part.
    pub offsets: Vec<Vec2<T>>,
    /// Order `N` of the rotation subgroup.
    pub order: i64,
    /// Direction of the table's edge 0; copies live in a frame where it is horizontal.
    pub base_angle: T,
    base_origin: Vec2<T>,
}

impl<T: Real> Unfolding<T> {
    /// Maps a point of face `face` back to the original table coordinates.
    pub fn fold_point(&self, face: usize, p: Vec2<T>) -> Vec2<T> {
        let g = self.copies[face];
        let local = g.inverse(self.order).apply(p - self.offsets[face], self.order);
        let (s, c) = self.base_angle.sin_cos();
        Vec2::new(c * local.x - s * local.y, s * local.x + c * local.y) + self.base_origin
    }

    /// Maps a direction on face `face` to the billiard direction on the table.
    pub fn fold_direction(&self, face: usize, theta: T) -> T {
        let g = self.copies[face];
        let d = g.inverse(self.order).apply(Vec2::from_angle(theta), self.order);
        d.angle() + self.base_angle
    }

    /// Maps a table point and direction to face 0 of the unfolding (the identity copy).
    pub fn lift(&self, p: Vec2<T>, theta: T) -> (Vec2<T>, T) {
        let (s, c) = (-self.base_angle).sin_cos();
        let q = p - self.base_origin;
        let local = Vec2::new(c * q.x - s * q.y, s * q.x + c * q.y);
        (local + self.offsets[0], crate::scalar::wrap_angle(theta - self.base_angle))
    }
}

/// Builds the translation surface of a rational billiard table: `2N` copies,
/// `N` the lcm of the angle denominators, glued along reflected edges.
pub fn unfold_rational_polygon<T: Real>(poly: &RationalPolygon<T>) -> Result<TranslationSurface<T>> {
    unfold_with_copies(poly).map(|u| u.surface)
}

pub fn unfold_with_copies<T: Real>(poly: &RationalPolygon<T>) -> Result<Unfolding<T>> {
    let n_order = poly.order();
    let src = poly.polygon();
    let nv = src.len();
    let base_origin = src.vertex(0);
    let base_angle = src.edge_vector(0).angle();
    let (s, c) = (-base_angle).sin_cos();
    let base: Vec<Vec2<T>> = src
        .vertices()
        .iter()
        .map(|&v| {
            let q = v - base_origin;
            Vec2::new(c * q.x - s * q.y, s * q.x + c * q.y)
        })
        .collect();

    // edge j has direction k_j·π/N relative to edge 0; each turn adds π minus the angle
    let mut k = vec![0i64; nv];
    for j in 1..nv {
        let a = poly.angles()[j];
        let turn = n_order - a.numer() * (n_order / a.denom());
        k[j] = k[j - 1] + turn;
    }
    let gens: Vec<Dihedral> = k.iter().map(|&kj| Dihedral { rot: kj.rem_euclid(n_order), reflect: true }).collect();

    let identity = Dihedral { rot: 0, reflect: false };
    let mut index: HashMap<Dihedral, usize> = HashMap::new();
    let mut copies = vec![identity];
    index.insert(identity, 0);
    let mut head = 0;
    while head < copies.len() {
        let g = copies[head];
        for r in &gens {
            let h = g.compose(*r, n_order);
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry(h) {
                e.insert(copies.len());
                copies.push(h);
            }
        }
        head += 1;
    }

    let spacing = geom::vertex_diameter(&base) * T::lit(1.5);
    let mut faces = Vec::with_capacity(copies.len());
    let mut offsets = Vec::with_capacity(copies.len());
    for (ci, g) in copies.iter().enumerate() {
        let offset = Vec2::new(spacing * T::from_usize_lossy(ci), T::zero());
        let img: Vec<Vec2<T>> = base.iter().map(|&v| g.apply(v, n_order) + offset).collect();
        let verts = if g.reflect { (0..nv).map(|i| img[(nv - i) % nv]).collect() } else { img };
        faces.push(Polygon::new(verts)?);
        offsets.push(offset);
    }

    let local_edge = |g: Dihedral, j: usize| if g.reflect { nv - 1 - j } else { j };
    let mut pairing = Vec::with_capacity(copies.len() * nv / 2);
    for (ci, g) in copies.iter().enumerate() {
        for (j, r) in gens.iter().enumerate() {
            let cj = index[&g.compose(*r, n_order)];
            if ci < cj {
                pairing.push((EdgeRef::new(ci, local_edge(*g, j)), EdgeRef::new(cj, local_edge(copies[cj], j))));
            }
        }
    }
    let surface = TranslationSurface::build(faces, &pairing)?;
    Ok(Unfolding { surface, copies, offsets, order: n_order, base_angle, base_origin })
}
