//! Translation surfaces: polygon faces with edges glued by translation.

use crate::error::{Error, Result};
use crate::geom::{self, Vec2};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// A simple counterclockwise polygon.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon<T> {
    vertices: Vec<Vec2<T>>,
}

impl<T: Real> Polygon<T> {
    pub fn new(vertices: Vec<Vec2<T>>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegeneratePolygon(format!("{} vertices", vertices.len())));
        }
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(Error::DegeneratePolygon("non-finite coordinate".into()));
        }
        if !geom::is_simple(&vertices) {
            return Err(Error::DegeneratePolygon("self-intersecting boundary".into()));
        }
        let area = geom::signed_area(&vertices);
        if area <= T::zero() {
            return Err(Error::DegeneratePolygon(format!("signed area {area} is not positive")));
        }
        Ok(Self { vertices })
    }

    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(points.iter().map(|&(x, y)| Vec2::new(T::lit(x), T::lit(y))).collect())
    }

    #[inline]
    pub fn vertices(&self) -> &[Vec2<T>] {
        &self.vertices
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    #[inline]
    pub fn vertex(&self, i: usize) -> Vec2<T> {
        self.vertices[i % self.vertices.len()]
    }

    /// Endpoints of edge `i` (from vertex `i` to vertex `i + 1`).
    #[inline]
    pub fn edge(&self, i: usize) -> (Vec2<T>, Vec2<T>) {
        (self.vertex(i), self.vertex(i + 1))
    }

    #[inline]
    pub fn edge_vector(&self, i: usize) -> Vec2<T> {
        self.vertex(i + 1) - self.vertex(i)
    }

    pub fn area(&self) -> T {
        geom::signed_area(&self.vertices)
    }

    pub fn diameter(&self) -> T {
        geom::vertex_diameter(&self.vertices)
    }

    pub fn interior_angle(&self, i: usize) -> T {
        geom::interior_angle(&self.vertices, i)
    }

    pub fn contains(&self, p: Vec2<T>) -> bool {
        geom::point_in_polygon(&self.vertices, p)
    }

    pub fn is_convex(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| self.edge_vector(i).cross(self.edge_vector(i + 1)) >= T::zero())
    }

    fn scaled(&self, k: T) -> Self {
        Self { vertices: self.vertices.iter().map(|v| *v * k).collect() }
    }
}

/// Edge `edge` of face `face`; serialized as `[face, edge]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct EdgeRef {
    pub face: usize,
    pub edge: usize,
}

impl EdgeRef {
    #[inline]
    pub const fn new(face: usize, edge: usize) -> Self {
        Self { face, edge }
    }
}

impl From<[usize; 2]> for EdgeRef {
    fn from(a: [usize; 2]) -> Self {
        Self::new(a[0], a[1])
    }
}

impl From<EdgeRef> for [usize; 2] {
    fn from(e: EdgeRef) -> Self {
        [e.face, e.edge]
    }
}

/// A vertex equivalence class with its corners and total cone angle.
#[derive(Clone, Debug)]
pub struct Singularity<T> {
    /// `(face, vertex)` corners in counterclockwise order around the point.
    pub corners: Vec<(usize, usize)>,
    pub cone_angle: T,
}

impl<T: Real> Singularity<T> {
    /// Cone angle divided by 2π, rounded.
    pub fn multiplicity(&self) -> usize {
        (self.cone_angle / T::two_pi()).round().to_usize().unwrap_or(0)
    }
}

/// On-disk form of a surface.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceFile<T> {
    pub faces: Vec<Vec<Vec2<T>>>,
    pub pairings: Vec<[EdgeRef; 2]>,
}

/// A validated translation surface. Immutable after construction.
#[derive(Clone, Debug)]
pub struct TranslationSurface<T> {
    faces: Vec<Polygon<T>>,
    pairs: Vec<[EdgeRef; 2]>,
    partner: Vec<Vec<EdgeRef>>,
    translation: Vec<Vec<Vec2<T>>>,
    corner_class: Vec<Vec<usize>>,
    singularities: Vec<Singularity<T>>,
    edges: Vec<EdgeRef>,
    genus: usize,
    area: T,
    c2: T,
    c3: T,
    c7: T,
    tol: T,
}

impl<T: Real> TranslationSurface<T> {
    /// Validates faces and pairings and computes all derived data.
    pub fn build(faces: Vec<Polygon<T>>, pairing: &[(EdgeRef, EdgeRef)]) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::DegeneratePolygon("surface has no faces".into()));
        }
        let c7 = faces.iter().map(Polygon::diameter).fold(T::zero(), T::max);
        let tol = c7 * T::rel_tol(1e-9);

        let mut partner: Vec<Vec<Option<EdgeRef>>> = faces.iter().map(|f| vec![None; f.len()]).collect();
        let check = |e: EdgeRef| -> Result<()> {
            if e.face >= faces.len() || e.edge >= faces[e.face].len() {
                Err(Error::BadEdgeRef { face: e.face, edge: e.edge })
            } else {
                Ok(())
            }
        };
        for &(a, b) in pairing {
            check(a)?;
            check(b)?;
            if a == b {
                return Err(Error::EdgePairedTwice { face: a.face, edge: a.edge });
            }
            for (x, y) in [(a, b), (b, a)] {
                if partner[x.face][x.edge].is_some() {
                    return Err(Error::EdgePairedTwice { face: x.face, edge: x.edge });
                }
                partner[x.face][x.edge] = Some(y);
            }
        }
        let mut full = Vec::with_capacity(faces.len());
        for (f, row) in partner.iter().enumerate() {
            let mut r = Vec::with_capacity(row.len());
            for (e, p) in row.iter().enumerate() {
                r.push(p.ok_or(Error::UnpairedEdge { face: f, edge: e })?);
            }
            full.push(r);
        }
        let partner = full;

        let mut translation: Vec<Vec<Vec2<T>>> = faces.iter().map(|f| vec![Vec2::zero(); f.len()]).collect();
        for &(a, b) in pairing {
            let va = faces[a.face].edge_vector(a.edge);
            let vb = faces[b.face].edge_vector(b.edge);
            let (la, lb) = (va.norm(), vb.norm());
            if (la - lb).abs() > tol {
                return Err(Error::LengthMismatch(a.face, a.edge, b.face, b.edge, (la - lb).abs().as_f64()));
            }
            if (va + vb).norm() > tol {
                return Err(Error::NotAntiparallel(a.face, a.edge, b.face, b.edge));
            }
        }
        for (f, face) in faces.iter().enumerate() {
            for e in 0..face.len() {
                let p = partner[f][e];
                translation[f][e] = faces[p.face].vertex(p.edge + 1) - face.vertex(e);
            }
        }

        let components = count_components(faces.len(), pairing);
        if components != 1 {
            return Err(Error::Disconnected(components));
        }

        let (corner_class, singularities) = corner_cycles(&faces, &partner);
        let tau = T::two_pi();
        let mut excess = T::zero();
        for (class, s) in singularities.iter().enumerate() {
            let k = (s.cone_angle / tau).round();
            if k < T::one() || (s.cone_angle - k * tau).abs() > T::rel_tol(1e-7) * k {
                return Err(Error::BadConeAngle { class, angle: s.cone_angle.as_f64() });
            }
            excess = excess + (k - T::one());
        }
        let twice_g_minus_2 = excess.to_i64().unwrap_or(-1);
        if twice_g_minus_2 < -2 || twice_g_minus_2 % 2 != 0 {
            return Err(Error::GaussBonnet(excess.as_f64() * tau.as_f64()));
        }
        let genus = (twice_g_minus_2 / 2 + 1) as usize;

        let mut edges = Vec::new();
        for (f, face) in faces.iter().enumerate() {
            for e in 0..face.len() {
                let me = EdgeRef::new(f, e);
                if me < partner[f][e] {
                    edges.push(me);
                }
            }
        }

        let area = faces.iter().map(Polygon::area).sum();
        let c2 = faces.iter().map(|p| geom::inscribed_diameter(p.vertices())).fold(T::zero(), T::max);
        let c3 = faces
            .iter()
            .map(|p| (0..p.len()).map(|e| p.edge_vector(e).norm()).sum::<T>())
            .sum();

        Ok(Self {
            faces,
            pairs: pairing.iter().map(|&(a, b)| [a, b]).collect(),
            partner,
            translation,
            corner_class,
            singularities,
            edges,
            genus,
            area,
            c2,
            c3,
            c7,
            tol,
        })
    }

    /// The unit square with opposite sides glued.
    pub fn unit_torus() -> Self {
        Self::rectangle_torus(T::one(), T::one())
    }

    /// A `w × h` rectangle with opposite sides glued.
    pub fn rectangle_torus(w: T, h: T) -> Self {
        let z = T::zero();
        let sq = Polygon::new(vec![Vec2::new(z, z), Vec2::new(w, z), Vec2::new(w, h), Vec2::new(z, h)])
            .expect("rectangle is a valid polygon");
        Self::build(vec![sq], &[(EdgeRef::new(0, 0), EdgeRef::new(0, 2)), (EdgeRef::new(0, 1), EdgeRef::new(0, 3))])
            .expect("rectangle torus is valid")
    }

    pub fn from_file(file: SurfaceFile<T>) -> Result<Self> {
        let faces = file.faces.into_iter().map(Polygon::new).collect::<Result<Vec<_>>>()?;
        let pairing: Vec<_> = file.pairings.iter().map(|p| (p[0], p[1])).collect();
        Self::build(faces, &pairing)
    }

    pub fn to_file(&self) -> SurfaceFile<T> {
        SurfaceFile { faces: self.faces.iter().map(|f| f.vertices.clone()).collect(), pairings: self.pairs.clone() }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("surface serializes")
    }

    /// Uniformly scaled copy of area 1.
    pub fn normalize_area(&self) -> Self {
        let k = T::one() / self.area.sqrt();
        let faces = self.faces.iter().map(|f| f.scaled(k)).collect();
        let pairing: Vec<_> = self.pairs.iter().map(|p| (p[0], p[1])).collect();
        Self::build(faces, &pairing).expect("scaling preserves validity")
    }

    #[inline]
    pub fn faces(&self) -> &[Polygon<T>] {
        &self.faces
    }

    #[inline]
    pub fn face(&self, f: usize) -> &Polygon<T> {
        &self.faces[f]
    }

    pub fn pairings(&self) -> &[[EdgeRef; 2]] {
        &self.pairs
    }

    /// The edge glued to `e`.
    #[inline]
    pub fn partner(&self, e: EdgeRef) -> EdgeRef {
        self.partner[e.face][e.edge]
    }

    /// Translation carrying points of `e` onto the glued points of its partner.
    #[inline]
    pub fn translation(&self, e: EdgeRef) -> Vec2<T> {
        self.translation[e.face][e.edge]
    }

    /// One representative per glued pair, ordered by `(face, edge)`.
    #[inline]
    pub fn edges(&self) -> &[EdgeRef] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_vector(&self, e: EdgeRef) -> Vec2<T> {
        self.faces[e.face].edge_vector(e.edge)
    }

    pub fn edge_points(&self, e: EdgeRef) -> (Vec2<T>, Vec2<T>) {
        self.faces[e.face].edge(e.edge)
    }

    /// Singularity class of vertex `v` of face `f`.
    #[inline]
    pub fn vertex_class(&self, f: usize, v: usize) -> usize {
        self.corner_class[f][v % self.faces[f].len()]
    }

    pub fn singularities(&self) -> &[Singularity<T>] {
        &self.singularities
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn area(&self) -> T {
        self.area
    }

    /// Diameter of an inscribed disc, maximized over faces.
    pub fn c2(&self) -> T {
        self.c2
    }

    /// Total length of all polygon edges.
    pub fn c3(&self) -> T {
        self.c3
    }

    /// Twice the largest face diameter.
    pub fn c4(&self) -> T {
        self.c7 * T::lit(2.0)
    }

    /// Largest face diameter.
    pub fn c7(&self) -> T {
        self.c7
    }

    /// Coincidence tolerance scaled to the surface.
    pub fn tol(&self) -> T {
        self.tol
    }

    /// Shortest edge length.
    pub fn min_edge_length(&self) -> T {
        self.edges.iter().map(|&e| self.edge_vector(e).norm()).fold(T::infinity(), T::min)
    }

    /// True when this is a unit square with opposite sides glued.
    pub fn is_unit_torus(&self) -> bool {
        if self.faces.len() != 1 || self.faces[0].len() != 4 {
            return false;
        }
        let v = self.faces[0].vertices();
        let eps = T::lit(1e-12);
        let origin = v[0];
        let want = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let square = v
            .iter()
            .zip(want)
            .all(|(p, (x, y))| (p.x - origin.x - T::lit(x)).abs() < eps && (p.y - origin.y - T::lit(y)).abs() < eps);
        square && self.partner(EdgeRef::new(0, 0)) == EdgeRef::new(0, 2) && self.partner(EdgeRef::new(0, 1)) == EdgeRef::new(0, 3)
    }

    /// Face containing `p` (first match), if any.
    pub fn locate(&self, p: Vec2<T>) -> Option<usize> {
        self.faces.iter().position(|f| f.contains(p))
    }
}

fn count_components(n: usize, pairing: &[(EdgeRef, EdgeRef)]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in pairing {
        let (ra, rb) = (find(&mut parent, a.face), find(&mut parent, b.face));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

/// Walks corners around each identified vertex. Crossing edge `i` of face `f`
/// at its start vertex lands on the end vertex of the partner edge.
fn corner_cycles<T: Real>(faces: &[Polygon<T>], partner: &[Vec<EdgeRef>]) -> (Vec<Vec<usize>>, Vec<Singularity<T>>) {
    let mut class: Vec<Vec<usize>> = faces.iter().map(|f| vec![usize::MAX; f.len()]).collect();
    let mut sings = Vec::new();
    for f in 0..faces.len() {
        for v in 0..faces[f].len() {
            if class[f][v] != usize::MAX {
                continue;
            }
            let id = sings.len();
            let mut corners = Vec::new();
            let mut angle = T::zero();
            let (mut cf, mut cv) = (f, v);
            while class[cf][cv] == usize::MAX {
                class[cf][cv] = id;
                corners.push((cf, cv));
                angle = angle + faces[cf].interior_angle(cv);
                let p = partner[cf][cv];
                cf = p.face;
                cv = (p.edge + 1) % faces[cf].len();
            }
            corners.reverse();
            sings.push(Singularity { corners, cone_angle: angle });
        }
    }
    (class, sings)
}
