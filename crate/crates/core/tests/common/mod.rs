//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use num_integer::Integer;
use std::f64::consts::TAU;

/// Primitive lattice vectors of length at most `t`, sorted by angle in `[0, 2π)`.
pub fn primitive_vectors(t: f64) -> Vec<(i64, i64)> {
    let r = t.floor() as i64;
    let mut out = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            if (a, b) != (0, 0) && ((a * a + b * b) as f64) <= t * t && a.gcd(&b) == 1 {
                out.push((a, b));
            }
        }
    }
    out.sort_by(|p, q| angle(*p).total_cmp(&angle(*q)));
    out
}

fn angle((a, b): (i64, i64)) -> f64 {
    (b as f64).atan2(a as f64).rem_euclid(TAU)
}

/// Time a straight line on the unit torus spends in each `1/n × 1/n` square,
/// indexed `ix * n + iy`, computed from the unwrapped line in the plane.
pub fn torus_line_occupancy(x0: f64, y0: f64, theta: f64, t_max: f64, n: usize) -> Vec<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    let nf = n as f64;
    let mut times = vec![0.0, t_max];
    for (p0, dp) in [(x0, c), (y0, s)] {
        if dp.abs() < 1e-300 {
            continue;
        }
        let end = p0 + dp * t_max;
        let (lo, hi) = ((p0 * nf).min(end * nf), (p0 * nf).max(end * nf));
        let mut k = lo.floor() + 1.0;
        while k < hi {
            times.push((k / nf - p0) / dp);
            k += 1.0;
        }
    }
    times.sort_by(f64::total_cmp);
    let mut occ = vec![0.0; n * n];
    for w in times.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let tm = (w[0] + w[1]) / 2.0;
        let x = (x0 + c * tm).rem_euclid(1.0);
        let y = (y0 + s * tm).rem_euclid(1.0);
        let ix = ((x * nf).floor() as usize).min(n - 1);
        let iy = ((y * nf).floor() as usize).min(n - 1);
        occ[ix * n + iy] += w[1] - w[0];
    }
    occ
}

/// Whether some interval of length at least `1/m1` inside `[0, 1)` holds more
/// than `A·M·|I|` of the sorted points, checking every pair of endpoints.
pub fn naive_crowded(pts: &[f64], a: f64, m1: f64) -> bool {
    let am = a * pts.len() as f64;
    for i in 0..pts.len() {
        for j in i..pts.len() {
            let len = (pts[j] - pts[i]).max(1.0 / m1);
            if (j - i + 1) as f64 > am * len {
                return true;
            }
        }
    }
    false
}

/// Points of `pts` in the closed interval `[lo, hi]`.
pub fn count_in(pts: &[f64], lo: f64, hi: f64) -> usize {
    pts.iter().filter(|&&v| v >= lo && v <= hi).count()
}

/// `S_h` straight from its definition as a double loop over depth-`p` cells.
pub fn direct_s_h(pts: &[f64], z: u64, p: u32, h: u32) -> f64 {
    let fine = z.pow(p) as usize;
    let coarse = z.pow(h) as usize;
    let ratio = z.pow(p - h) as f64;
    let mut total = 0.0;
    for cell in 0..fine {
        let lo = cell as f64 / fine as f64;
        let hi = (cell + 1) as f64 / fine as f64;
        let c = pts.iter().filter(|&&x| x >= lo && x < hi).count() as f64;
        let parent = cell / (fine / coarse);
        let plo = parent as f64 / coarse as f64;
        let phi = (parent + 1) as f64 / coarse as f64;
        let cp = pts.iter().filter(|&&x| x >= plo && x < phi).count() as f64;
        total += (c - cp / ratio).powi(2);
    }
    total
}

/// `S_h − S_{h+1}` as a sum over depth-`h+1` cells of squared deviations from
/// a `1/z` share of the parent count.
pub fn closed_form_difference(pts: &[f64], z: u64, p: u32, h: u32) -> f64 {
    let child = z.pow(h + 1) as usize;
    let mut counts = vec![0f64; child];
    for &x in pts {
        counts[((x * child as f64).floor() as usize).min(child - 1)] += 1.0;
    }
    let zf = z as f64;
    let mut total = 0.0;
    for parent in 0..child / z as usize {
        let block = &counts[parent * z as usize..(parent + 1) * z as usize];
        let cp: f64 = block.iter().sum();
        total += block.iter().map(|c| (c - cp / zf).powi(2)).sum::<f64>();
    }
    total / zf.powi((p - h - 1) as i32)
}

/// Measure of the points lying in at least `threshold` of the families, by
/// counting the midpoints of a uniform grid of `nodes` cells over `[0, 2π)`.
pub fn grid_majority_measure(families: &[Vec<[f64; 2]>], threshold: usize, nodes: usize) -> f64 {
    let step = TAU / nodes as f64;
    let mut diff = vec![0i64; nodes + 1];
    for fam in families {
        for iv in fam {
            // node i has midpoint (i + 1/2)·step
            let first = ((iv[0] / step - 0.5).ceil().max(0.0)) as usize;
            let last = (iv[1] / step - 0.5).floor();
            if last < 0.0 {
                continue;
            }
            let last = (last as usize).min(nodes - 1);
            if first <= last {
                diff[first] += 1;
                diff[last + 1] -= 1;
            }
        }
    }
    let mut run = 0i64;
    let mut hits = 0usize;
    for d in &diff[..nodes] {
        run += d;
        if run >= threshold as i64 {
            hits += 1;
        }
    }
    hits as f64 * step
}

/// Circular gaps of points in `[0, 1)`.
pub fn circular_gaps(points: &[f64]) -> Vec<f64> {
    let mut x = points.to_vec();
    x.sort_by(f64::total_cmp);
    let mut gaps: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(1.0 - x[x.len() - 1] + x[0]);
    gaps
}

/// Number of clusters of values that differ by more than `tol`.
pub fn distinct_values(values: &[f64], tol: f64) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut last = f64::NEG_INFINITY;
    for x in v {
        if x - last > tol {
            count += 1;
        }
        last = x;
    }
    count
}

/// Distance between two points of the circle `[0, 1)`.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}
