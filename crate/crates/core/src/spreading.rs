//! Spreading experiments: time spent by long geodesic segments in small grid
//! cells, star discrepancy, and the torus density probe.

use crate::error::{Error, Result};
use crate::flow::{self, Budget, DirectedPoint};
use crate::geom::{self, Vec2};
use crate::intervals::IntervalUnion;
use crate::surface::TranslationSurface;
use crate::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::fmt::Write as _;

/// Directions closer than this (in `|sin|`) to an edge direction are skipped.
pub const DIRECTION_MARGIN: f64 = 1e-6;

/// Face `face` intersected with the square `[ix/N, (ix+1)/N) × [iy/N, (iy+1)/N)`.
#[derive(Clone, Debug, Serialize)]
pub struct GridCell {
    pub face: usize,
    pub ix: i64,
    pub iy: i64,
    pub area: f64,
}

/// Axis-aligned grid of side `1/N` on every face, clipped to the faces.
#[derive(Clone, Debug, Serialize)]
pub struct CellGrid {
    pub n: usize,
    pub cells: Vec<GridCell>,
    #[serde(skip)]
    lookup: HashMap<(usize, i64, i64), usize>,
}

impl CellGrid {
    pub fn new<T: Real>(surface: &TranslationSurface<T>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("grid resolution N must be at least 1".into()));
        }
        let side = 1.0 / n as f64;
        let pieces = flow::whole_surface_region(surface);
        let mut cells = Vec::new();
        let mut lookup = HashMap::new();
        for (f, poly) in surface.faces().iter().enumerate() {
            let v: Vec<Vec2<f64>> = poly.vertices().iter().map(|p| p.cast()).collect();
            let (mut lo, mut hi) = (v[0], v[0]);
            for p in &v {
                lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
            }
            let own: Vec<Vec<Vec2<f64>>> = pieces
                .iter()
                .filter(|c| c.face == f)
                .map(|c| c.polygon.iter().map(|p| p.cast()).collect())
                .collect();
            let x0 = (lo.x * n as f64).floor() as i64;
            let x1 = (hi.x * n as f64).ceil() as i64;
            let y0 = (lo.y * n as f64).floor() as i64;
            let y1 = (hi.y * n as f64).ceil() as i64;
            for ix in x0..x1 {
                for iy in y0..y1 {
                    let (ax, ay) = (ix as f64 * side, iy as f64 * side);
                    let square = [
                        Vec2::new(ax, ay),
                        Vec2::new(ax + side, ay),
                        Vec2::new(ax + side, ay + side),
                        Vec2::new(ax, ay + side),
                    ];
                    let area: f64 = own
                        .iter()
                        .map(|piece| {
                            let c = geom::clip_polygon(piece, &square);
                            if c.len() < 3 { 0.0 } else { geom::signed_area(&c).abs() }
                        })
                        .sum();
                    if area > 1e-15 {
                        lookup.insert((f, ix, iy), cells.len());
                        cells.push(GridCell { face: f, ix, iy, area });
                    }
                }
            }
        }
        Ok(Self { n, cells, lookup })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    /// Cell of a point of face `face`, half-open in both coordinates.
    pub fn cell_of(&self, face: usize, p: Vec2<f64>) -> Option<usize> {
        let n = self.n as f64;
        self.lookup.get(&(face, (p.x * n).floor() as i64, (p.y * n).floor() as i64)).copied()
    }

    /// Time spent by `[0, t_max]` of the geodesic in each cell.
    pub fn occupancy<T: Real>(&self, surface: &TranslationSurface<T>, start: DirectedPoint<T>, t_max: T) -> Result<Vec<f64>> {
        let mut occ = vec![0.0; self.cells.len()];
        let n = self.n as f64;
        let mut cuts: Vec<f64> = Vec::new();
        flow::walk(
            surface,
            start,
            Budget::MaxTime(t_max),
            |seg| {
                let a: Vec2<f64> = seg.a.cast();
                let b: Vec2<f64> = seg.b.cast();
                let (t0, t1) = (seg.t0.as_f64(), seg.t1.as_f64());
                let d = b - a;
                cuts.clear();
                cuts.push(0.0);
                cuts.push(1.0);
                for (p0, dp) in [(a.x, d.x), (a.y, d.y)] {
                    if dp != 0.0 {
                        let (lo, hi) = ((p0 * n).min((p0 + dp) * n), (p0 * n).max((p0 + dp) * n));
                        let mut k = lo.floor() + 1.0;
                        while k < hi {
                            cuts.push((k / n - p0) / dp);
                            k += 1.0;
                        }
                    }
                }
                cuts.sort_by(f64::total_cmp);
                for w in cuts.windows(2) {
                    if w[1] <= w[0] {
                        continue;
                    }
                    let mid = a + d * ((w[0] + w[1]) / 2.0);
                    if let Some(c) = self.cell_of(seg.face, mid) {
                        occ[c] += (t1 - t0) * (w[1] - w[0]);
                    }
                }
                true
            },
            |_, _| {},
        )?;
        Ok(occ)
    }
}

/// Where sampled geodesics start.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum StartSpec {
    /// Every direction starts from the same point of face `face`.
    Fixed { face: usize, x: f64, y: f64 },
    /// `count` area-uniform random starts per direction.
    Random { count: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpreadConfig {
    pub n: usize,
    pub epsilon: f64,
    pub t: f64,
    pub directions: usize,
    pub seed: u64,
    pub starts: StartSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Passed,
    Failed,
    /// The geodesic hit a vertex before time `T`.
    VertexHit,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trial {
    pub face: usize,
    pub x: f64,
    pub y: f64,
    pub status: TrialStatus,
    pub occupancy: Vec<f64>,
    pub pass: Vec<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectionResult {
    pub theta: f64,
    /// Passed if every trial that did not hit a vertex passed.
    pub passed: Option<bool>,
    pub trials: Vec<Trial>,
    pub in_good_set: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpreadReport {
    pub config: SpreadConfig,
    pub cells: Vec<GridCell>,
    pub results: Vec<DirectionResult>,
    pub tested: usize,
    pub passed: usize,
    pub skipped_degenerate: usize,
    pub skipped_vertex: usize,
    pub pass_fraction: f64,
    /// Fraction of tested directions where passing agrees with membership in
    /// the supplied good-direction set.
    pub good_set_agreement: Option<f64>,
}

impl SpreadReport {
    /// Flattened rows `direction,cell_id,occupancy,expected,pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("direction,cell_id,occupancy,expected,pass\n");
        let t = self.config.t;
        for r in &self.results {
            for trial in &r.trials {
                for (i, (&o, &p)) in trial.occupancy.iter().zip(&trial.pass).enumerate() {
                    let _ = writeln!(out, "{},{},{},{},{}", r.theta, i, o, t * self.cells[i].area, p);
                }
            }
        }
        out
    }
}

/// Deterministic Kronecker sample of `[0, 2π)` with a seeded offset.
pub fn sample_directions(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u0: f64 = rng.gen();
    let g = (5f64.sqrt() - 1.0) / 2.0;
    (0..count).map(|i| std::f64::consts::TAU * (u0 + i as f64 * g).fract()).collect()
}

fn degenerate<T: Real>(surface: &TranslationSurface<T>, theta: f64) -> bool {
    let d = Vec2::from_angle(theta);
    surface.edges().iter().any(|&e| {
        let v: Vec2<f64> = surface.edge_vector(e).cast();
        (v.cross(d) / v.norm()).abs() < DIRECTION_MARGIN
    })
}

fn random_start<T: Real>(surface: &TranslationSurface<T>, rng: &mut ChaCha8Rng) -> (usize, Vec2<f64>) {
    let areas: Vec<f64> = surface.faces().iter().map(|p| p.area().as_f64()).collect();
    let total: f64 = areas.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    let mut face = areas.len() - 1;
    for (i, a) in areas.iter().enumerate() {
        if u < *a {
            face = i;
            break;
        }
        u -= a;
    }
    let v: Vec<Vec2<f64>> = surface.face(face).vertices().iter().map(|p| p.cast()).collect();
    let (mut lo, mut hi) = (v[0], v[0]);
    for p in &v {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    loop {
        let p = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if geom::point_in_polygon(&v, p) && geom::boundary_distance(&v, p) > 1e-9 {
            return (face, p);
        }
    }
}

/// Runs every sampled direction and start for time `T` and compares the time in
/// each cell `Q` with `T·area(Q)` up to the factor `1 ± ε`.
pub fn spread_experiment<T: Real>(
    surface: &TranslationSurface<T>,
    config: SpreadConfig,
    good: Option<&IntervalUnion>,
) -> Result<SpreadReport> {
    if (surface.area().as_f64() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("surface area {} is not 1; normalize first", surface.area())));
    }
    if !(config.t > 0.0) {
        return Err(Error::NonpositiveInput { name: "T", value: config.t });
    }
    if !(config.epsilon > 0.0) {
        return Err(Error::NonpositiveInput { name: "epsilon", value: config.epsilon });
    }
    if let StartSpec::Fixed { face, x, y } = config.starts {
        let poly = surface.faces().get(face).ok_or_else(|| Error::InvalidParameter(format!("no face {face}")))?;
        if !poly.contains(Vec2::new(T::lit(x), T::lit(y))) {
            return Err(Error::InvalidParameter(format!("start ({x}, {y}) is not inside face {face}")));
        }
    }
    let grid = CellGrid::new(surface, config.n)?;
    let thetas = sample_directions(config.directions, config.seed);
    let eps = config.epsilon;
    let results: Vec<Option<DirectionResult>> = thetas
        .par_iter()
        .enumerate()
        .map(|(i, &theta)| -> Result<Option<DirectionResult>> {
            if degenerate(surface, theta) {
                return Ok(None);
            }
            let starts: Vec<(usize, Vec2<f64>)> = match config.starts {
                StartSpec::Fixed { face, x, y } => vec![(face, Vec2::new(x, y))],
                StartSpec::Random { count } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    rng.set_stream(i as u64 + 1);
                    (0..count).map(|_| random_start(surface, &mut rng)).collect()
                }
            };
            let mut trials = Vec::with_capacity(starts.len());
            for (face, p) in starts {
                let start = DirectedPoint::new(face, p.cast(), T::lit(theta));
                let (status, occupancy, pass) = match grid.occupancy(surface, start, T::lit(config.t)) {
                    Ok(occ) => {
                        let pass: Vec<bool> = occ
                            .iter()
                            .zip(&grid.cells)
                            .map(|(&o, c)| {
                                let e = config.t * c.area;
                                (1.0 - eps) * e < o && o < (1.0 + eps) * e
                            })
                            .collect();
                        let st = if pass.iter().all(|&b| b) { TrialStatus::Passed } else { TrialStatus::Failed };
                        (st, occ, pass)
                    }
                    Err(Error::VertexHit { .. }) => (TrialStatus::VertexHit, Vec::new(), Vec::new()),
                    Err(e) => return Err(e),
                };
                trials.push(Trial { face, x: p.x, y: p.y, status, occupancy, pass });
            }
            let live: Vec<&Trial> = trials.iter().filter(|t| t.status != TrialStatus::VertexHit).collect();
            let passed = (!live.is_empty()).then(|| live.iter().all(|t| t.status == TrialStatus::Passed));
            Ok(Some(DirectionResult { theta, passed, trials, in_good_set: good.map(|g| g.contains(theta)) }))
        })
        .collect::<Result<_>>()?;
    let skipped_degenerate = results.iter().filter(|r| r.is_none()).count();
    let results: Vec<DirectionResult> = results.into_iter().flatten().collect();
    let skipped_vertex = results.iter().filter(|r| r.passed.is_none()).count();
    let tested = results.len() - skipped_vertex;
    let passed = results.iter().filter(|r| r.passed == Some(true)).count();
    let good_set_agreement = good.map(|_| {
        let agree = results.iter().filter(|r| r.passed.is_some() && r.passed == r.in_good_set).count();
        if tested == 0 { 0.0 } else { agree as f64 / tested as f64 }
    });
    Ok(SpreadReport {
        config,
        cells: grid.cells.clone(),
        results,
        tested,
        passed,
        skipped_degenerate,
        skipped_vertex,
        pass_fraction: if tested == 0 { 0.0 } else { passed as f64 / tested as f64 },
        good_set_agreement,
    })
}

/// Exact one-dimensional star discrepancy of a point set in `[0, 1)`.
pub fn star_discrepancy(points: &[f64]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("star discrepancy of an empty set".into()));
    }
    let mut x = points.to_vec();
    x.sort_by(f64::total_cmp);
    let m = x.len() as f64;
    Ok(x.iter()
        .enumerate()
        .map(|(i, &v)| ((i + 1) as f64 / m - v).max(v - i as f64 / m))
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeVerdict {
    pub alpha: f64,
    pub n: usize,
    pub c1: f64,
    pub passed: bool,
    /// Largest distance from a probe point to the segment.
    pub max_gap: f64,
    /// Smallest `C₁` at which every probe point is within `1/N`, if reached
    /// within the tested length.
    pub min_passing_c1: Option<f64>,
}

/// Fixed start of the probe line, away from every grid line.
pub const PROBE_START: (f64, f64) = (0.207_106_781_186_547_5, 0.366_025_403_784_438_6);

/// Checks that the line of slope `alpha` on the unit torus comes within `1/N`
/// of every point of a `2N × 2N` probe grid before time `C₁N`.
pub fn superdensity_probe<T: Real>(surface: &TranslationSurface<T>, alpha: f64, n: usize, c1: f64) -> Result<ProbeVerdict> {
    if !surface.is_unit_torus() {
        return Err(Error::NotATorus);
    }
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    if !(c1 > 0.0) {
        return Err(Error::NonpositiveInput { name: "C1", value: c1 });
    }
    let r = 1.0 / n as f64;
    let grid = 2 * n;
    let probes: Vec<Vec2<f64>> = (0..grid * grid)
        .map(|k| Vec2::new(((k % grid) as f64 + 0.5) / grid as f64, ((k / grid) as f64 + 0.5) / grid as f64))
        .collect();
    let mut nearest = vec![f64::INFINITY; probes.len()];
    let mut first = vec![f64::INFINITY; probes.len()];
    let theta = alpha.atan();
    let start = DirectedPoint::new(0, Vec2::new(T::lit(PROBE_START.0), T::lit(PROBE_START.1)), T::lit(theta));
    flow::walk(
        surface,
        start,
        Budget::MaxTime(T::lit(c1 * n as f64)),
        |seg| {
            let a: Vec2<f64> = seg.a.cast();
            let b: Vec2<f64> = seg.b.cast();
            let len = (b - a).norm();
            let t0 = seg.t0.as_f64();
            for (k, q) in probes.iter().enumerate() {
                for dx in [-1.0, 0.0, 1.0] {
                    for dy in [-1.0, 0.0, 1.0] {
                        let q = *q + Vec2::new(dx, dy);
                        nearest[k] = nearest[k].min(geom::distance_to_segment(q, a, b));
                        if len > 0.0 {
                            let d = (b - a) / len;
                            let along = (q - a).dot(d);
                            let off = (q - a).cross(d);
                            if off.abs() <= r {
                                let half = (r * r - off * off).sqrt();
                                let s = (along - half).max(0.0);
                                if s <= len && along + half >= 0.0 {
                                    first[k] = first[k].min(t0 + s);
                                }
                            }
                        } else if (q - a).norm() <= r {
                            first[k] = first[k].min(t0);
                        }
                    }
                }
            }
            true
        },
        |_, _| {},
    )?;
    let max_gap = nearest.iter().cloned().fold(0.0, f64::max);
    let last = first.iter().cloned().fold(0.0, f64::max);
    Ok(ProbeVerdict {
        alpha,
        n,
        c1,
        passed: max_gap <= r,
        max_gap,
        min_passing_c1: last.is_finite().then(|| last / n as f64),
    })
}
