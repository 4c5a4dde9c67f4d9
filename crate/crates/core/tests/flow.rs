use flatflow::flow::{self, Budget, DirectedPoint};
use flatflow::{Error, Point, RationalPolygon, Surface};
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_4;

fn iso_triangle() -> Surface {
    let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
    let poly = RationalPolygon::from_vertices(v, 48).unwrap();
    flatflow::unfold::unfold_rational_polygon(&poly).unwrap().normalize_area()
}

/// Crossing times of the unwrapped line with the integer grid.
fn grid_crossings(x0: f64, y0: f64, theta: f64, count: usize) -> Vec<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    let mut times = Vec::new();
    for (p0, dp) in [(x0, c), (y0, s)] {
        let first = if dp > 0.0 { p0.floor() + 1.0 } else { p0.ceil() - 1.0 };
        for k in 0..count {
            let target = first + dp.signum() * k as f64;
            times.push((target - p0) / dp);
        }
    }
    times.sort_by(f64::total_cmp);
    times.truncate(count);
    times
}

#[test]
fn vertex_hit_is_reported() {
    let t = Surface::unit_torus();
    let start = DirectedPoint::new(0, Point::new(0.5, 0.5), FRAC_PI_4);
    match flow::trace(&t, start, Budget::MaxTime(2.0)) {
        Err(Error::VertexHit { t, .. }) => assert!((t - 0.5 * 2f64.sqrt()).abs() < 1e-12),
        other => panic!("expected a vertex hit, got {other:?}"),
    }
}

#[test]
fn time_budget_ends_at_the_right_point() {
    let t = Surface::unit_torus();
    let theta = 0.3;
    let start = DirectedPoint::new(0, Point::new(0.1, 0.2), theta);
    let seq = flow::trace(&t, start, Budget::MaxTime(7.5)).unwrap();
    assert!((seq.elapsed - 7.5).abs() < 1e-12);
    let x = (0.1 + 7.5 * theta.cos()).rem_euclid(1.0);
    let y = (0.2 + 7.5 * theta.sin()).rem_euclid(1.0);
    assert!((seq.end.position.x - x).abs() < 1e-9 && (seq.end.position.y - y).abs() < 1e-9);
}

#[test]
fn csv_has_one_row_per_hit() {
    let t = Surface::unit_torus();
    let seq = flow::trace(&t, DirectedPoint::new(0, Point::new(0.3, 0.4), 1.0), Budget::MaxHits(25)).unwrap();
    assert_eq!(seq.hits.len(), 25);
    assert_eq!(seq.to_csv().lines().count(), 26);
}

#[test]
fn development_ends_on_the_straight_line() {
    let s = iso_triangle();
    let start = DirectedPoint::new(0, s.face(0).vertices().iter().fold(Point::new(0.0, 0.0), |a, &p| a + p) / 3.0, 0.77);
    let dev = flow::develop(&s, start, 40).unwrap();
    assert_eq!(dev.copies.len(), 41);
    for h in &dev.hits {
        let off = h.dev_point - dev.origin;
        assert!(off.cross(start.direction()).abs() < 1e-9);
        assert!((off.norm() - h.t).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn torus_crossings_match_the_grid(theta in 0.05f64..1.5, x0 in 0.01f64..0.99, y0 in 0.01f64..0.99) {
        let t = Surface::unit_torus();
        let seq = match flow::trace(&t, DirectedPoint::new(0, Point::new(x0, y0), theta), Budget::MaxHits(60)) {
            Ok(s) => s,
            Err(Error::VertexHit { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let want = grid_crossings(x0, y0, theta, 60);
        for (h, w) in seq.hits.iter().zip(&want) {
            prop_assert!((h.t - w).abs() < 1e-9, "{} vs {}", h.t, w);
        }
    }

    #[test]
    fn whole_surface_occupancy_is_elapsed_time(theta in 0.0f64..std::f64::consts::TAU, t_max in 0.5f64..20.0) {
        let s = iso_triangle();
        let c = s.face(2).vertices().iter().fold(Point::new(0.0, 0.0), |a, &p| a + p) / 3.0;
        let region = flow::whole_surface_region(&s);
        match flow::occupancy(&s, DirectedPoint::new(2, c, theta), t_max, &region) {
            Ok(occ) => prop_assert!((occ - t_max).abs() < 1e-9 * t_max),
            Err(Error::VertexHit { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }
}
