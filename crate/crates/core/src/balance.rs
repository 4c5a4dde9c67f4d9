//! z-adic partition statistics, balance and anti-crowdedness of point sets in
//! `[0, 1)`, and the majority construction over direction sets.

use crate::error::{Error, Result};
use crate::intervals::{coverage_at_least, IntervalUnion};
use crate::saddle::SaddleCensus;
use crate::surface::TranslationSurface;
use crate::Real;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;

/// Largest supported number of cells at the finest depth.
pub const MAX_CELLS: u64 = 1 << 26;

/// Base `z = 2^{z₁}` and finest depth `p` of the partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionParams {
    z1: u32,
    p: u32,
}

impl PartitionParams {
    /// `z` must be a power of two (at least 2) so that cell indices are exact.
    pub fn new(z: u64, p: u32) -> Result<Self> {
        if z < 2 || !z.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("z = {z} must be a power of two ≥ 2")));
        }
        let z1 = z.trailing_zeros();
        if p == 0 {
            return Err(Error::InvalidParameter("depth p must be at least 1".into()));
        }
        if z1 as u64 * p as u64 > MAX_CELLS.trailing_zeros() as u64 {
            return Err(Error::InvalidParameter(format!("z^p = {z}^{p} exceeds {MAX_CELLS} cells")));
        }
        Ok(Self { z1, p })
    }

    pub fn z(&self) -> u64 {
        1 << self.z1
    }

    pub fn z1(&self) -> u32 {
        self.z1
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Number of cells at depth `h`, `z^h`.
    pub fn cells(&self, h: u32) -> u64 {
        1 << (self.z1 * h)
    }

    fn check_depth(&self, h: u32) {
        assert!(h <= self.p, "depth {h} exceeds p = {}", self.p);
    }
}

/// A multiset of points in `[0, 1)`, kept sorted.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PointSet {
    points: Vec<f64>,
}

impl PointSet {
    pub fn new(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("point set is empty".into()));
        }
        if let Some(&x) = points.iter().find(|x| !(0.0..1.0).contains(*x)) {
            return Err(Error::InvalidParameter(format!("point {x} outside [0, 1)")));
        }
        points.sort_by(f64::total_cmp);
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn cell_index(x: f64, cells: u64) -> usize {
    // multiplying by a power of two is exact
    ((x * cells as f64).floor() as u64).min(cells - 1) as usize
}

/// Counts in the half-open cells `[i/z^h, (i+1)/z^h)`.
pub fn cell_counts(x: &PointSet, params: &PartitionParams, h: u32) -> Vec<u64> {
    params.check_depth(h);
    let cells = params.cells(h);
    let mut counts = vec![0u64; cells as usize];
    for &v in &x.points {
        counts[cell_index(v, cells)] += 1;
    }
    counts
}

/// Counts of the points translated by `tau` modulo 1.
pub fn shifted_counts(x: &PointSet, tau: f64, params: &PartitionParams, h: u32) -> Vec<u64> {
    params.check_depth(h);
    let cells = params.cells(h);
    let mut counts = vec![0u64; cells as usize];
    for &v in &x.points {
        counts[cell_index((v + tau).rem_euclid(1.0), cells)] += 1;
    }
    counts
}

fn coarsen(fine: &[u64], z: usize) -> Vec<u64> {
    fine.chunks(z).map(|c| c.iter().sum()).collect()
}

fn sum_squares(c: &[u64]) -> i128 {
    c.iter().map(|&v| (v as i128) * (v as i128)).sum()
}

/// `S_h` as an exact fraction `numerator / z^{p−h}`.
///
/// Uses `Σ_children (c − c_h/z^{p−h})² = Σ c² − c_h²/z^{p−h}` over each depth-`h` cell.
fn s_h_exact(fine: &[u64], params: &PartitionParams, h: u32) -> (i128, u32) {
    let shift = params.z1 * (params.p - h);
    let mut coarse = fine.to_vec();
    for _ in h..params.p {
        coarse = coarsen(&coarse, params.z() as usize);
    }
    ((sum_squares(fine) << shift) - sum_squares(&coarse), shift)
}

fn ratio(num: i128, shift: u32) -> f64 {
    num as f64 / 2f64.powi(shift as i32)
}

/// `S_h(X; p)`: squared deviations of depth-`p` counts from their depth-`h`
/// conditional expectations.
pub fn s_h_statistic(x: &PointSet, params: &PartitionParams, h: u32) -> f64 {
    params.check_depth(h);
    let (n, s) = s_h_exact(&cell_counts(x, params, params.p), params, h);
    ratio(n, s)
}

/// All of `S_0, …, S_p`.
pub fn s_statistics(x: &PointSet, params: &PartitionParams) -> Vec<f64> {
    let fine = cell_counts(x, params, params.p);
    (0..=params.p).map(|h| {
        let (n, s) = s_h_exact(&fine, params, h);
        ratio(n, s)
    }).collect()
}

/// `S_h(X + τ; p)` for the points translated by `τ` modulo 1.
pub fn shifted_s_h(x: &PointSet, tau: f64, params: &PartitionParams, h: u32) -> f64 {
    params.check_depth(h);
    let (n, s) = s_h_exact(&shifted_counts(x, tau, params, params.p), params, h);
    ratio(n, s)
}

pub fn shifted_s0(x: &PointSet, tau: f64, params: &PartitionParams) -> f64 {
    shifted_s_h(x, tau, params, 0)
}

/// Midpoint-rule integral of `τ ↦ S_h(X + τ; p)` over `[lo, hi]` with `n` nodes.
pub fn integral_shifted(x: &PointSet, params: &PartitionParams, h: u32, lo: f64, hi: f64, n: usize) -> f64 {
    let step = (hi - lo) / n as f64;
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| shifted_s_h(x, lo + (i as f64 + 0.5) * step, params, h))
        .sum();
    total * step
}

/// `∫₀¹ S₀(X + τ; p) dτ` by the midpoint rule; `n` must be a multiple of `z^p`.
pub fn integral_s0(x: &PointSet, params: &PartitionParams, n: usize) -> Result<f64> {
    let cells = params.cells(params.p) as usize;
    if n == 0 || !n.is_multiple_of(cells) {
        return Err(Error::InvalidParameter(format!("quadrature size {n} is not a positive multiple of z^p = {cells}")));
    }
    Ok(integral_shifted(x, params, 0, 0.0, 1.0, n))
}

/// Exact `∫_lo^hi S_h(X + τ; p) dτ`, sweeping the shifts at which a point
/// crosses a depth-`p` cell boundary. Requires `0 ≤ hi − lo ≤ 1`.
pub fn integral_shifted_exact(x: &PointSet, params: &PartitionParams, h: u32, lo: f64, hi: f64) -> f64 {
    params.check_depth(h);
    assert!(hi >= lo && hi - lo <= 1.0, "need 0 ≤ hi − lo ≤ 1");
    let cells = params.cells(params.p);
    let cf = cells as f64;
    let per_parent = params.cells(params.p - h);
    let mut fine = vec![0i128; cells as usize];
    let mut events: Vec<(f64, usize)> = Vec::new();
    let mut cell_of = Vec::with_capacity(x.len());
    for (j, &v) in x.points.iter().enumerate() {
        let u = v + lo;
        let k0 = (u * cf).floor() as i64 + 1;
        cell_of.push((k0 - 1).rem_euclid(cells as i64) as u64);
        let mut k = k0;
        loop {
            let t = k as f64 / cf - v;
            if t > hi {
                break;
            }
            events.push((t, j));
            k += 1;
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for &c in &cell_of {
        fine[c as usize] += 1;
    }
    let mut coarse: Vec<i128> = vec![0; params.cells(h) as usize];
    for (i, &c) in fine.iter().enumerate() {
        coarse[i / per_parent as usize] += c;
    }
    let mut qf: i128 = fine.iter().map(|c| c * c).sum();
    let mut qc: i128 = coarse.iter().map(|c| c * c).sum();
    let pp = per_parent as i128;
    let value = |qf: i128, qc: i128| (qf * pp - qc) as f64 / pp as f64;
    let mut total = 0.0;
    let mut prev = lo;
    for (t, j) in events {
        total += (t - prev) * value(qf, qc);
        prev = t;
        let a = cell_of[j] as usize;
        let b = (a + 1) % cells as usize;
        qf += -2 * fine[a] + 1 + 2 * fine[b] + 1;
        fine[a] -= 1;
        fine[b] += 1;
        let (pa, pb) = (a / per_parent as usize, b / per_parent as usize);
        if pa != pb {
            qc += -2 * coarse[pa] + 1 + 2 * coarse[pb] + 1;
            coarse[pa] -= 1;
            coarse[pb] += 1;
        }
        cell_of[j] = b as u64;
    }
    total + (hi - prev) * value(qf, qc)
}

/// Checks `S₀ = Σ_{h<p}(S_h − S_{h+1})` and each difference against its
/// closed form over depth-`(h+1)` cells.
#[derive(Clone, Debug, Serialize)]
pub struct TelescopingReport {
    pub s: Vec<f64>,
    pub differences: Vec<f64>,
    pub closed_forms: Vec<f64>,
    pub s_p_is_zero: bool,
    pub sum_matches: bool,
    pub differences_nonnegative: bool,
    pub closed_forms_match: bool,
}

impl TelescopingReport {
    pub fn passed(&self) -> bool {
        self.s_p_is_zero && self.sum_matches && self.differences_nonnegative && self.closed_forms_match
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn telescoping_check(x: &PointSet, params: &PartitionParams) -> TelescopingReport {
    let p = params.p;
    let z = params.z() as usize;
    let fine = cell_counts(x, params, p);
    let exact: Vec<(i128, u32)> = (0..=p).map(|h| s_h_exact(&fine, params, h)).collect();
    let s: Vec<f64> = exact.iter().map(|&(n, sh)| ratio(n, sh)).collect();
    let mut levels = vec![fine.clone()];
    for _ in 0..p {
        let next = coarsen(levels.last().unwrap(), z);
        levels.push(next);
    }
    levels.reverse();
    let differences: Vec<f64> = (0..p as usize).map(|h| s[h] - s[h + 1]).collect();
    let closed_forms: Vec<f64> = (0..p as usize)
        .map(|h| {
            let parent = &levels[h];
            let child = &levels[h + 1];
            let num: i128 = child
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let d = z as i128 * c as i128 - parent[i / z] as i128;
                    d * d
                })
                .sum();
            // Σ (c − c_h/z)² / z^{p−h−1} = Σ (z c − c_h)² / z^{p−h+1}
            ratio(num, params.z1 * (p - h as u32 + 1))
        })
        .collect();
    let total: f64 = differences.iter().sum();
    TelescopingReport {
        s_p_is_zero: exact[p as usize].0 == 0,
        sum_matches: rel_close(s[0], total, 1e-9),
        differences_nonnegative: differences.iter().all(|&d| d >= -1e-12),
        closed_forms_match: differences.iter().zip(&closed_forms).all(|(&d, &c)| rel_close(d, c, 1e-9)),
        s,
        differences,
        closed_forms,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BalanceVerdict {
    pub balanced: bool,
    /// `|child ∩ X| − |parent ∩ X|/z` for each child cell.
    pub deviations: Vec<f64>,
    pub bound: f64,
}

/// `(δ; z)`-balance relative to the cell with 0-based digits `cell_path`.
pub fn is_balanced(x: &PointSet, delta: f64, params: &PartitionParams, cell_path: &[u64]) -> Result<BalanceVerdict> {
    let h = cell_path.len() as u32;
    if h >= params.p {
        return Err(Error::InvalidParameter(format!("cell depth {h} must be below p = {}", params.p)));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("δ = {delta} must lie in (0, 1)")));
    }
    let z = params.z();
    let mut index = 0u64;
    for &s in cell_path {
        if s >= z {
            return Err(Error::InvalidParameter(format!("digit {s} out of range for z = {z}")));
        }
        index = index * z + s;
    }
    let children = cell_counts(x, params, h + 1);
    let parent: u64 = children[(index * z) as usize..((index + 1) * z) as usize].iter().sum();
    let bound = delta * x.len() as f64 / (params.cells(h + 1) as f64);
    let deviations: Vec<f64> = (0..z)
        .map(|s| children[(index * z + s) as usize] as f64 - parent as f64 / z as f64)
        .collect();
    let balanced = deviations.iter().all(|d| d.abs() < bound);
    Ok(BalanceVerdict { balanced, deviations, bound })
}

/// Interval `[lo, hi]` holding more than `A·M·|I|` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrowdWitness {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AntiCrowdedVerdict {
    pub anti_crowded: bool,
    pub witness: Option<CrowdWitness>,
}

/// Decides whether every interval `I ⊂ [0,1)` with `|I| ≥ 1/M₁` holds at most
/// `A·M·|I|` points, by scanning windows of consecutive sorted points.
pub fn anti_crowded(x: &PointSet, a: f64, m1: f64) -> Result<AntiCrowdedVerdict> {
    let m = x.len();
    if !(a >= 2.0) {
        return Err(Error::InvalidParameter(format!("A = {a} must be at least 2")));
    }
    if !(m1 > 1.0 && m1 <= m as f64) {
        return Err(Error::InvalidParameter(format!("M₁ = {m1} must lie in (1, M]")));
    }
    let pts = &x.points;
    let am = a * m as f64;
    let min_len = 1.0 / m1;
    // g[j] = (j + 1) − A·M·x_j, suffix maxima with their arg
    let mut best = vec![(f64::NEG_INFINITY, usize::MAX); m + 1];
    for j in (0..m).rev() {
        let g = (j + 1) as f64 - am * pts[j];
        best[j] = if g > best[j + 1].0 { (g, j) } else { best[j + 1] };
    }
    let witness = |i: usize, j: usize| {
        let len = (pts[j] - pts[i]).max(min_len);
        let lo = pts[i].min(1.0 - len);
        let hi = (lo + len).max(pts[j]);
        let count = pts.partition_point(|&v| v <= hi) - pts.partition_point(|&v| v < lo);
        CrowdWitness { lo, hi, count }
    };
    for i in 0..m {
        // windows no wider than 1/M₁
        let short_end = pts.partition_point(|&v| v - pts[i] <= min_len);
        let k = short_end - i;
        if k as f64 > am * min_len {
            return Ok(AntiCrowdedVerdict { anti_crowded: false, witness: Some(witness(i, short_end - 1)) });
        }
        // wider windows: (j − i + 1) > A·M·(x_j − x_i)
        let (g, j) = best[short_end];
        if j != usize::MAX && g - i as f64 > -am * pts[i] {
            let k = j - i + 1;
            if k as f64 > am * (pts[j] - pts[i]) {
                return Ok(AntiCrowdedVerdict { anti_crowded: false, witness: Some(witness(i, j)) });
            }
        }
    }
    Ok(AntiCrowdedVerdict { anti_crowded: true, witness: None })
}

/// Per-depth counts, `S_h` values and verdicts for one point set.
#[derive(Clone, Debug, Serialize)]
pub struct BalanceReport {
    pub m: usize,
    pub z: u64,
    pub p: u32,
    pub delta: f64,
    pub counts: Vec<Vec<u64>>,
    pub s: Vec<f64>,
    /// `balanced[h][i]` for cell `i` at depth `h < p`.
    pub balanced: Vec<Vec<bool>>,
    pub telescoping: TelescopingReport,
    pub anti_crowded: Option<AntiCrowdedVerdict>,
    /// `A²M²/z^p`, present when anti-crowdedness was tested.
    pub s0_bound: Option<f64>,
}

pub fn balance_report(x: &PointSet, params: &PartitionParams, delta: f64, crowd: Option<(f64, f64)>) -> Result<BalanceReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("δ = {delta} must lie in (0, 1)")));
    }
    let z = params.z() as usize;
    let m = x.len();
    let counts: Vec<Vec<u64>> = (0..=params.p).map(|h| cell_counts(x, params, h)).collect();
    let balanced = (0..params.p as usize)
        .map(|h| {
            let bound = delta * m as f64 / params.cells(h as u32 + 1) as f64;
            counts[h]
                .iter()
                .enumerate()
                .map(|(i, &parent)| {
                    counts[h + 1][i * z..(i + 1) * z]
                        .iter()
                        .all(|&c| (c as f64 - parent as f64 / z as f64).abs() < bound)
                })
                .collect()
        })
        .collect();
    let anti = crowd.map(|(a, m1)| anti_crowded(x, a, m1)).transpose()?;
    let s0_bound = crowd.map(|(a, _)| a * a * (m * m) as f64 / params.cells(params.p) as f64);
    Ok(BalanceReport {
        m,
        z: params.z(),
        p: params.p,
        delta,
        s: s_statistics(x, params),
        counts,
        balanced,
        telescoping: telescoping_check(x, params),
        anti_crowded: anti,
        s0_bound,
    })
}

/// Smallest integer multiplicity meeting "at least `η·k`" (guarding against
/// products like `0.1 · 30` rounding up past an integer).
pub fn majority_threshold(eta: f64, k: usize) -> usize {
    ((eta * k as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Points of `[0, 2π)` lying in at least `η·k` of the `k` unions.
pub fn majority_set(us: &[IntervalUnion], eta: f64) -> Result<IntervalUnion> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("η = {eta} must lie in (0, 1)")));
    }
    if us.is_empty() {
        return Err(Error::InvalidParameter("majority of an empty family".into()));
    }
    Ok(coverage_at_least(us, majority_threshold(eta, us.len()).max(1)))
}

/// Lower bound `2π − δ − 2πη` on the majority set, with `δ` the largest
/// complement measure in the family.
pub fn majority_lower_bound(us: &[IntervalUnion], eta: f64) -> f64 {
    let delta = us.iter().map(|u| TAU - u.measure()).fold(0.0, f64::max);
    TAU - delta - TAU * eta
}

/// Scale and threshold choices for the good-direction set.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GoodDirectionParams {
    /// `log₂ N`.
    pub n1: f64,
    pub z1: u32,
    pub k: usize,
    pub c0: f64,
    pub eta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GoodDirections {
    pub params: GoodDirectionParams,
    pub set: IntervalUnion,
    pub measure: f64,
    /// `λ(Ω(n₁ + i z₁; c₀))` for `i = 0..=k`.
    pub omega_measures: Vec<f64>,
    /// `2π − 2δ − 2πη` with `δ` the largest measured `λ(Ω)`.
    pub nominal_bound: f64,
    /// Same with `η` replaced by `η k/(k − 1)`, since the count runs over `k − 1` sets.
    pub rigorous_bound: f64,
    pub target: f64,
    pub meets_target: bool,
}

/// Directions outside `Ω(n₁ + k z₁; c₀)` that also avoid at least `η k` of
/// `Ω(n₁ + i z₁; c₀)`, `0 ≤ i ≤ k − 2`.
pub fn good_directions<T: Real>(
    surface: &TranslationSurface<T>,
    gp: GoodDirectionParams,
    epsilon: f64,
    budget: usize,
) -> Result<GoodDirections> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("ε = {epsilon} must lie in (0, 1)")));
    }
    if gp.k == 0 || gp.z1 == 0 || !(gp.n1 >= 0.0) {
        return Err(Error::InvalidParameter("need k ≥ 1, z₁ ≥ 1 and N ≥ 1".into()));
    }
    if !(gp.eta > 0.0 && gp.eta < 1.0) || gp.c0 < 4.0 {
        return Err(Error::InvalidParameter("need η ∈ (0, 1) and c₀ ≥ 4".into()));
    }
    let scale = |i: usize| gp.n1 + (i as u32 * gp.z1) as f64;
    let top = scale(gp.k);
    let omegas: Vec<IntervalUnion> = if top >= 1.0 {
        let census = SaddleCensus::with_budget(surface, T::lit(2f64.powi(top.floor() as i32)), budget)?;
        (0..=gp.k).into_par_iter().map(|i| census.omega(scale(i), gp.c0)).collect()
    } else {
        vec![IntervalUnion::empty(); gp.k + 1]
    };
    let omega_measures: Vec<f64> = omegas.iter().map(IntervalUnion::measure).collect();
    let last = omegas[gp.k].complement();
    let votes: Vec<IntervalUnion> = omegas[..gp.k.saturating_sub(1)].iter().map(IntervalUnion::complement).collect();
    let threshold = majority_threshold(gp.eta, gp.k).max(1);
    let set = if votes.is_empty() { IntervalUnion::empty() } else { coverage_at_least(&votes, threshold).intersection(&last) };
    let measure = set.measure();
    let delta = omega_measures.iter().cloned().fold(0.0, f64::max);
    let nominal_bound = TAU - 2.0 * delta - TAU * gp.eta;
    let rigorous_bound = if gp.k >= 2 {
        TAU - 2.0 * delta - TAU * gp.eta * gp.k as f64 / (gp.k - 1) as f64
    } else {
        f64::NEG_INFINITY
    };
    let target = (1.0 - epsilon) * TAU;
    Ok(GoodDirections {
        params: gp,
        set,
        measure,
        omega_measures,
        nominal_bound,
        rigorous_bound,
        target,
        meets_target: measure >= target,
    })
}
