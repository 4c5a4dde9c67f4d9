use flatflow::saddle::{self, DirectionSet, SaddleCensus};
use flatflow::{Error, Surface};
use num_integer::Integer;
use proptest::prelude::*;
use std::f64::consts::TAU;

/// Primitive vectors `(a w, b h)` of length at most `t`.
fn rectangle_oracle(w: f64, h: f64, t: f64) -> Vec<(f64, f64)> {
    let (ra, rb) = ((t / w).floor() as i64, (t / h).floor() as i64);
    let mut out = Vec::new();
    for a in -ra..=ra {
        for b in -rb..=rb {
            let v = (a as f64 * w, b as f64 * h);
            if (a, b) != (0, 0) && a.gcd(&b) == 1 && (v.0 * v.0 + v.1 * v.1).sqrt() <= t {
                out.push(v);
            }
        }
    }
    out
}

#[test]
fn nonpositive_length_is_rejected() {
    let t = Surface::unit_torus();
    assert!(matches!(saddle::enumerate_saddle_connections(&t, 0.0), Err(Error::NonpositiveInput { .. })));
}

#[test]
fn small_budget_is_exhausted() {
    let t = Surface::unit_torus();
    assert!(matches!(saddle::enumerate_with_budget(&t, 30.0, 10), Err(Error::BudgetExhausted(10))));
}

#[test]
fn direction_sets_merge_near_duplicates() {
    let d = DirectionSet::from_angles([1.0, 1.0 + 1e-14, 2.0, TAU - 1e-14, 0.0]);
    assert_eq!(d.len(), 3);
    assert!(d.contains(1.0) && d.contains(2.0) && d.contains(0.0));
    assert!(DirectionSet::from_angles([2.0]).is_subset_of(&d));
    assert!(!d.is_subset_of(&DirectionSet::from_angles([2.0])));
}

#[test]
fn torus_cylinders_share_connection_directions() {
    let census = SaddleCensus::new(&Surface::unit_torus(), 12.0).unwrap();
    for t in [1.0, 3.0, 7.5, 12.0] {
        let (n1, n2) = (census.n1(t), census.n2(t));
        assert_eq!(n1.len(), n2.len(), "T={t}");
        assert!(n1.is_subset_of(&n2));
    }
}

#[test]
fn omega_shrinks_with_c0() {
    let t = Surface::unit_torus();
    let wide = saddle::omega_set(&t, 3.0, 8.0).unwrap().measure();
    let narrow = saddle::omega_set(&t, 3.0, 32.0).unwrap().measure();
    assert!(narrow < wide);
    assert!(saddle::omega_set(&t, 0.5, 8.0).unwrap().is_empty());
    assert!(saddle::omega_set(&t, 3.0, 2.0).is_err());
}

#[test]
fn csv_header_and_rows() {
    let recs = saddle::enumerate_saddle_connections(&Surface::unit_torus(), 2.5).unwrap();
    let csv = saddle::saddle_csv(&recs);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("dx,dy,length,phi,start_sing,end_sing"));
    assert_eq!(lines.count(), recs.len());
}

#[test]
fn counting_fit_on_the_torus() {
    let census = SaddleCensus::new(&Surface::unit_torus(), 20.0).unwrap();
    let fit = saddle::fit_counting_constant(&census, &[5.0, 10.0, 15.0, 20.0]);
    assert!((fit.c_star - 6.0 / std::f64::consts::PI).abs() < 0.15, "{}", fit.c_star);
    assert!(fit.max_ratio >= fit.c_star * 0.9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rectangle_tori_match_the_lattice(w in 0.4f64..2.5, h in 0.4f64..2.5, t in 1.0f64..8.0) {
        let s = Surface::rectangle_torus(w, h);
        let recs = saddle::enumerate_saddle_connections(&s, t).unwrap();
        let mut got: Vec<(f64, f64)> = recs.iter().map(|r| (r.holonomy.x, r.holonomy.y)).collect();
        let mut want = rectangle_oracle(w, h, t);
        // points within rounding of the circle may go either way
        want.retain(|v| ((v.0 * v.0 + v.1 * v.1).sqrt() - t).abs() > 1e-9);
        got.retain(|v| ((v.0 * v.0 + v.1 * v.1).sqrt() - t).abs() > 1e-9);
        prop_assert_eq!(got.len(), want.len());
        let key = |v: &(f64, f64)| ((v.0 * 1e6).round() as i64, (v.1 * 1e6).round() as i64);
        let mut g: Vec<_> = got.iter().map(key).collect();
        let mut o: Vec<_> = want.iter().map(key).collect();
        g.sort_unstable();
        o.sort_unstable();
        prop_assert_eq!(g, o);
    }

    #[test]
    fn counts_are_monotone_in_length(t1 in 1.0f64..10.0, t2 in 1.0f64..10.0) {
        let census = SaddleCensus::new(&Surface::unit_torus(), 10.0).unwrap();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(census.n2(lo).is_subset_of(&census.n2(hi)));
    }
}
