//! Ledger of the effective constants: from a surface's measured geometry and a
//! target `ε` to the scale parameters `η, δ, z, k, C`.
//!
//! `k` and `C` are astronomically large for any interesting `ε`, so the
//! comparisons that involve them are carried out on base-2 logarithms.

use crate::error::{Error, Result};
use crate::projection::{transport_interval, ProjectionMap, TRANSPORT_CAP};
use crate::surface::TranslationSurface;
use crate::Real;
use serde::Serialize;
use std::f64::consts::PI;

/// Inputs that can only be measured, never derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Empirical {
    /// Quadratic growth constant of saddle connection counts.
    pub c_star: f64,
    /// Splitting-free extension rate of the transport process.
    pub c5: f64,
    /// Disjoint window rate of the transport process.
    pub c6: f64,
}

/// Transport rates at scale `n₀`, medians over the sampled directions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportRates {
    pub n0: u32,
    pub c5: f64,
    pub c6: f64,
    pub samples: usize,
    pub skipped: usize,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 { v[k] } else { (v[k - 1] + v[k]) / 2.0 }
}

/// Transports a seed of projected length `1/(c₀² c₁ 2^{n₀+1})` on the first
/// edge in each direction and records `(u + w)/2^{n₀}` and `D/2^{n₀}`.
pub fn measure_transport_rates<T: Real>(
    surface: &TranslationSurface<T>,
    c0: f64,
    n0: u32,
    directions: &[f64],
) -> Result<TransportRates> {
    let mut c5 = Vec::new();
    let mut c6 = Vec::new();
    let mut skipped = 0;
    let target = 1.0 / (c0 * c0 * 2f64.powi(n0 as i32 + 1));
    for &theta in directions {
        let Ok(proj) = ProjectionMap::new(surface, T::lit(theta)) else {
            skipped += 1;
            continue;
        };
        let width = target / proj.h_lengths[0].as_f64();
        if width >= 0.5 {
            skipped += 1;
            continue;
        }
        let centre = 0.381_966_011_250_105_1;
        let (s0, s1) = (centre - width / 2.0, centre + width / 2.0);
        let r = transport_interval(surface, T::lit(theta), proj.edges[0], T::lit(s0), T::lit(s1), TRANSPORT_CAP)?;
        if r.partial || r.u + r.w == 0 {
            skipped += 1;
            continue;
        }
        let (a, b) = r.empirical_c5_c6(T::lit(c0));
        c5.push(a.as_f64());
        c6.push(b.as_f64());
    }
    if c5.is_empty() {
        return Err(Error::InvalidParameter("no sampled direction gave a complete transport".into()));
    }
    Ok(TransportRates { n0, samples: c5.len(), skipped, c5: median(c5), c6: median(c6) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub name: &'static str,
    pub value: f64,
    pub formula: &'static str,
    pub provenance: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfaceConstants {
    pub epsilon: f64,
    pub c_star: f64,
    pub c0: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
    pub c10: f64,
    pub c11: f64,
    pub c12: f64,
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonpositiveInput { name, value })
    }
}

/// Evaluates the constant chain; `c₀` depends on `ε` through the measure
/// budget of the bad-direction sets.
pub fn derive_constants<T: Real>(surface: &TranslationSurface<T>, empirical: Empirical, epsilon: f64) -> Result<SurfaceConstants> {
    derive_from_geometry(
        surface.c2().as_f64(),
        surface.c3().as_f64(),
        surface.c4().as_f64(),
        surface.c7().as_f64(),
        empirical,
        epsilon,
    )
}

pub fn derive_from_geometry(c2: f64, c3: f64, c4: f64, c7: f64, empirical: Empirical, epsilon: f64) -> Result<SurfaceConstants> {
    let c_star = positive("C★", empirical.c_star)?;
    let c5 = positive("c5", empirical.c5)?;
    let c6 = positive("c6", empirical.c6)?;
    for (name, v) in [("c2", c2), ("c3", c3), ("c4", c4), ("c7", c7)] {
        positive(name, v)?;
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("ε = {epsilon} must lie in (0, 1)")));
    }
    let c0 = (16.0 * c_star / (PI * epsilon)).max(4.0);
    let c9 = 4.0 * c0 * c0 * c3 / c6;
    let c8 = 9.0 * (c9 + 2.0);
    let c10 = 1.0 / (4.0 * c8);
    let c11 = 4.0 * c9 / c10;
    let c12 = (256.0 * c0 * c0 * c3 * c9.powi(3) * c11 / (c6 * c10.powi(3))).max(1.0);
    Ok(SurfaceConstants { epsilon, c_star, c0, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12 })
}

impl SurfaceConstants {
    pub fn ledger(&self) -> Vec<LedgerEntry> {
        let e = |name, value, formula, provenance| LedgerEntry { name, value, formula, provenance };
        vec![
            e("C_star", self.c_star, "least-squares fit of count/T²", "measured: saddle connection census"),
            e("c2", self.c2, "largest inscribed circle diameter over faces", "surface geometry"),
            e("c3", self.c3, "total edge length", "surface geometry"),
            e("c4", self.c4, "2 · max face diameter", "surface geometry"),
            e("c5", self.c5, "median (u+w)/2^n0", "measured: interval transport"),
            e("c6", self.c6, "median disjoint window/2^n0", "measured: interval transport"),
            e("c7", self.c7, "max face diameter", "surface geometry"),
            e("c0", self.c0, "max(4, 16 C★/(π ε))", "derived"),
            e("c9", self.c9, "4 c0² c3 / c6", "derived"),
            e("c8", self.c8, "9 (c9 + 2)", "derived"),
            e("c10", self.c10, "1 / (4 c8)", "derived"),
            e("c11", self.c11, "4 c9 / c10", "derived"),
            e("c12", self.c12, "max(256 c0² c3 c9³ c11 / (c6 c10³), 1)", "derived"),
        ]
    }
}

/// One re-checked inequality, compared in the stated scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: &'static str,
    pub log2_scale: bool,
    pub holds: bool,
}

fn check(name: &'static str, lhs: f64, relation: &'static str, rhs: f64, log2_scale: bool) -> InequalityCheck {
    let holds = match relation {
        ">=" => lhs >= rhs,
        ">" => lhs > rhs,
        "<=" => lhs <= rhs,
        "<" => lhs < rhs,
        "==" => lhs == rhs,
        _ => unreachable!("unknown relation {relation}"),
    };
    InequalityCheck { name, lhs, rhs, relation, log2_scale, holds }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParameterChoice {
    pub epsilon: f64,
    pub n: f64,
    pub n1: f64,
    pub c0: f64,
    pub eta: f64,
    pub delta: f64,
    /// Crowding factor bound used in the checks, `A ≤ c9`.
    pub a: f64,
    pub z: f64,
    pub z1: u32,
    /// `⌊c12/ε⁹⌋ + 1`, rounded to the nearest double when huge.
    pub k: f64,
    pub log2_k: f64,
    pub k_exact: Option<u64>,
    pub log2_c: f64,
    /// `C` itself when it fits in a double.
    pub c: Option<f64>,
    pub checks: Vec<InequalityCheck>,
}

impl ParameterChoice {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Smallest `z₁` with `2^{z₁} ≥ x`.
fn ceil_log2(x: f64) -> u32 {
    let mut z1 = x.log2().ceil().max(1.0) as u32;
    while 2f64.powi(z1 as i32) < x {
        z1 += 1;
    }
    while z1 > 1 && 2f64.powi(z1 as i32 - 1) >= x {
        z1 -= 1;
    }
    z1
}

pub fn choose_parameters(k: &SurfaceConstants, n: f64) -> Result<ParameterChoice> {
    let eps = k.epsilon;
    if !(n >= 1.0) {
        return Err(Error::InvalidParameter(format!("N = {n} must be at least 1")));
    }
    let eps2 = eps * eps;
    let eta = eps / 2.0;
    let delta = k.c10 * eps2;
    let a = k.c9;
    let z_floor = k.c11 / eps2;
    let z1 = ceil_log2(z_floor);
    let z = 2f64.powi(z1 as i32);
    let ratio = k.c12 / eps.powi(9);
    let kk = ratio.floor() + 1.0;
    let k_exact = (kk < 2f64.powi(63)).then_some(kk as u64);
    let log2_k = kk.log2();
    let n1 = n.log2();
    let lead = (64.0 * k.c0 * k.c0 * k.c3 * k.c9 / (k.c10 * eps2)).max(2.0 * k.c0 * k.c0 * k.c3).max(k.c6);
    let log2_growth = 2.0 * ratio * (2.0 * k.c11 / eps2).log2();
    let log2_c = lead.log2() + log2_growth;
    let c = (log2_c < 1000.0).then(|| 2f64.powf(log2_c).ceil());
    let log2_m = log2_c + n1;
    // largest z^{h+1} reached, c0² c3 N z^{k−1}
    let log2_cell = (k.c0 * k.c0 * k.c3).log2() + n1 + z1 as f64 * (kk - 1.0);
    let log2_kz1 = log2_k + (z1 as f64).log2();

    let checks = vec![
        check("c0 covers the bad-direction budget", k.c0, ">=", (16.0 * k.c_star / (PI * eps)).max(4.0), false),
        check("eta is half of epsilon", eta, "==", eps / 2.0, false),
        check("c8 is 9(c9 + 2)", k.c8, "==", 9.0 * (k.c9 + 2.0), false),
        check("c8 delta equals epsilon²/4", k.c8 * delta, "<=", eps2 / 4.0 * (1.0 + 1e-12), false),
        check("c8 delta below epsilon/4", k.c8 * delta, "<", eps / 4.0, false),
        check("crowding factor at most c9", a, "<=", k.c9, false),
        check("c11 at least 4 c9/c10", k.c11, ">=", 4.0 * k.c9 / k.c10, false),
        check("z at least c11/epsilon²", z, ">=", z_floor, false),
        check("z below 2 c11/epsilon²", z, "<", 2.0 * z_floor, false),
        check("c11/epsilon² at least 3 c9/delta + 8", z_floor, ">=", 3.0 * k.c9 / delta + 8.0, false),
        check("z is large against the crowding factor", 2.0 * (z - 4.0) * delta - 4.0 * (a + delta), ">=", delta * z / 2.0, false),
        check("window restriction 8 A z^{h+1} <= delta M1", 4.0 * a / (delta * z), "<=", 1.0, false),
        check("c12 at least 1", k.c12, ">=", 1.0, false),
        check("k below 2 c12/epsilon⁹", log2_k, "<", (2.0 * ratio).log2(), true),
        check(
            "k exceeds the imbalance-count bound",
            log2_k,
            ">",
            (64.0 * k.c0 * k.c0 * k.c3 * a.powi(3) * z / (k.c6 * eta * delta.powi(3))).log2(),
            true,
        ),
        check("z^k below (2 c11/epsilon²)^{2 c12/epsilon⁹}", log2_kz1, "<", log2_growth.log2(), true),
        check("C meets its defining lower bound", log2_c, ">=", lead.log2() + log2_growth, true),
        check("delta M at least 64 z^{h+1}", delta.log2() + log2_m, ">=", 6.0 + log2_cell, true),
        check(
            "delta M at least 16 z^{h+1} (1 + log q)",
            delta.log2() + log2_m,
            ">=",
            (16.0 * (1.0 + k.c9.max(1.0).ln())).log2() + log2_cell,
            true,
        ),
        check(
            "M exceeds max(2 c0² c3, c6) N z^k",
            log2_m - n1,
            ">",
            (2.0 * k.c0 * k.c0 * k.c3).max(k.c6).log2() + 2f64.powf(log2_kz1),
            true,
        ),
    ];
    Ok(ParameterChoice {
        epsilon: eps,
        n,
        n1,
        c0: k.c0,
        eta,
        delta,
        a,
        z,
        z1,
        k: kk,
        log2_k,
        k_exact,
        log2_c,
        c,
        checks,
    })
}
