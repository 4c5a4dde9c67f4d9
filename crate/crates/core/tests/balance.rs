mod common;

use common::{closed_form_difference, direct_s_h, grid_majority_measure, naive_crowded};
use flatflow::balance::{self, PartitionParams, PointSet};
use flatflow::{IntervalUnion, Surface};
use proptest::prelude::*;

fn points() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..200)
}

fn params() -> impl Strategy<Value = (u64, u32)> {
    prop_oneof![(Just(2u64), 1u32..=6), (Just(4u64), 1u32..=3), (Just(8u64), 1u32..=2)]
}

#[test]
fn parameters_are_validated() {
    assert!(PartitionParams::new(3, 2).is_err());
    assert!(PartitionParams::new(1, 2).is_err());
    assert!(PartitionParams::new(2, 0).is_err());
    assert!(PartitionParams::new(2, 27).is_err());
    assert!(PointSet::new(vec![]).is_err());
    assert!(PointSet::new(vec![0.5, 1.0]).is_err());
    assert!(PointSet::new(vec![-0.1]).is_err());
}

#[test]
fn balanced_cell_examples() {
    let x = PointSet::new(vec![0.1, 0.2, 0.6, 0.7]).unwrap();
    let params = PartitionParams::new(2, 2).unwrap();
    let v = balance::is_balanced(&x, 0.5, &params, &[]).unwrap();
    assert!(v.balanced);
    assert_eq!(v.deviations, vec![0.0, 0.0]);
    let lopsided = PointSet::new(vec![0.1, 0.2, 0.3, 0.7]).unwrap();
    let v = balance::is_balanced(&lopsided, 0.5, &params, &[]).unwrap();
    assert!(!v.balanced);
    assert!(balance::is_balanced(&x, 0.5, &params, &[0, 1]).is_err());
    assert!(balance::is_balanced(&x, 0.5, &params, &[2]).is_err());
}

#[test]
fn quadrature_converges_to_the_exact_integral() {
    let x = PointSet::new((0..50).map(|i| ((i * 37) % 101) as f64 / 101.0).collect()).unwrap();
    let params = PartitionParams::new(2, 3).unwrap();
    let exact = balance::integral_shifted_exact(&x, &params, 0, 0.0, 1.0);
    let coarse = (balance::integral_s0(&x, &params, 1 << 10).unwrap() - exact).abs();
    let fine = (balance::integral_s0(&x, &params, 1 << 14).unwrap() - exact).abs();
    assert!(fine < coarse || fine < 1e-9);
    assert!(fine / exact < 1e-3);
    assert!(balance::integral_s0(&x, &params, 12).is_err());
}

#[test]
fn good_directions_on_the_torus() {
    let gp = balance::GoodDirectionParams { n1: 1.0, z1: 1, k: 4, c0: 64.0, eta: 0.25 };
    let g = balance::good_directions(&Surface::unit_torus(), gp, 0.5, flatflow::saddle::NODE_BUDGET).unwrap();
    assert_eq!(g.omega_measures.len(), 5);
    assert!(g.measure <= std::f64::consts::TAU);
    assert!(g.measure >= g.rigorous_bound - 1e-12);
}

proptest! {
    #[test]
    fn statistics_match_their_definition(pts in points(), (z, p) in params()) {
        let x = PointSet::new(pts).unwrap();
        let params = PartitionParams::new(z, p).unwrap();
        let s = balance::s_statistics(&x, &params);
        prop_assert_eq!(s[p as usize], 0.0);
        for h in 0..=p {
            let d = direct_s_h(x.points(), z, p, h);
            prop_assert!((s[h as usize] - d).abs() <= 1e-9 * d.max(1.0));
            prop_assert_eq!(s[h as usize], balance::s_h_statistic(&x, &params, h));
        }
        for h in 0..p {
            prop_assert!(s[h as usize] >= s[h as usize + 1]);
            let c = closed_form_difference(x.points(), z, p, h);
            prop_assert!((s[h as usize] - s[h as usize + 1] - c).abs() <= 1e-9 * c.max(1.0));
        }
        prop_assert!(balance::telescoping_check(&x, &params).passed());
    }

    #[test]
    fn cell_counts_sum_to_m(pts in points(), (z, p) in params(), tau in -2.0f64..2.0) {
        let x = PointSet::new(pts).unwrap();
        let params = PartitionParams::new(z, p).unwrap();
        for h in 0..=p {
            prop_assert_eq!(balance::cell_counts(&x, &params, h).iter().sum::<u64>(), x.len() as u64);
            prop_assert_eq!(balance::shifted_counts(&x, tau, &params, h).iter().sum::<u64>(), x.len() as u64);
        }
    }

    #[test]
    fn shifting_by_a_cell_permutes_counts(pts in points(), k in 0u64..16) {
        let x = PointSet::new(pts).unwrap();
        let params = PartitionParams::new(2, 4).unwrap();
        let s0 = balance::s_statistics(&x, &params)[0];
        let shifted = balance::shifted_s0(&x, k as f64 / 16.0, &params);
        prop_assert!((s0 - shifted).abs() <= 1e-9 * s0.max(1.0));
    }

    #[test]
    fn anti_crowded_scan_matches_pairs(pts in points(), a in 2.0f64..5.0, frac in 0.0f64..1.0) {
        let x = PointSet::new(pts).unwrap();
        prop_assume!(x.len() >= 2);
        let m1 = 1.0 + 1e-9 + frac * (x.len() as f64 - 1.0 - 1e-9);
        let v = balance::anti_crowded(&x, a, m1).unwrap();
        prop_assert_eq!(v.anti_crowded, !naive_crowded(x.points(), a, m1));
        if let Some(w) = v.witness {
            prop_assert!(w.count as f64 > a * x.len() as f64 * (w.hi - w.lo));
        }
    }

    #[test]
    fn majority_matches_the_grid(
        arcs in prop::collection::vec(prop::collection::vec((0.0f64..std::f64::consts::TAU, 0.0f64..1.5), 1..4), 1..8),
        eta in 0.05f64..0.95,
    ) {
        let us: Vec<IntervalUnion> = arcs
            .iter()
            .map(|a| IntervalUnion::from_arcs(a.iter().map(|&(lo, len)| (lo, lo + len))))
            .collect();
        let set = balance::majority_set(&us, eta).unwrap();
        let families: Vec<Vec<[f64; 2]>> = us.iter().map(|u| u.intervals().to_vec()).collect();
        let grid = grid_majority_measure(&families, balance::majority_threshold(eta, us.len()), 200_000);
        prop_assert!((grid - set.measure()).abs() < 1e-3);
        prop_assert!(set.measure() >= balance::majority_lower_bound(&us, eta) - 1e-12);
    }
}
