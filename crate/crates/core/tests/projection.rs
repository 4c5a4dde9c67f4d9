use flatflow::flow::DirectedPoint;
use flatflow::projection::{self, TransportedInterval};
use flatflow::{EdgeRef, Error, Point, RationalPolygon, Surface};
use proptest::prelude::*;

fn iso_triangle() -> Surface {
    let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
    let poly = RationalPolygon::from_vertices(v, 48).unwrap();
    flatflow::unfold::unfold_rational_polygon(&poly).unwrap().normalize_area()
}

fn centroid(s: &Surface, f: usize) -> Point {
    let v = s.face(f).vertices();
    v.iter().fold(Point::new(0.0, 0.0), |a, &p| a + p) / v.len() as f64
}

fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn iv(j: i64, lo: f64, hi: f64) -> TransportedInterval<f64> {
    TransportedInterval { j, edge: EdgeRef::new(0, 0), x_lo: lo, x_hi: hi }
}

#[test]
fn degenerate_direction_is_rejected() {
    let t = Surface::unit_torus();
    assert!(matches!(projection::ProjectionMap::new(&t, 0.0), Err(Error::DegenerateDirection { .. })));
    assert!(matches!(projection::induced_iet(&t, std::f64::consts::FRAC_PI_2), Err(Error::DegenerateDirection { .. })));
}

#[test]
fn disjoint_window_examples() {
    assert_eq!(projection::max_disjoint_window(&[iv(0, 0.0, 0.1), iv(1, 0.2, 0.3), iv(2, 0.4, 0.5)]), 3);
    assert_eq!(projection::max_disjoint_window(&[iv(0, 0.0, 0.1), iv(1, 0.2, 0.3), iv(2, 0.05, 0.15)]), 2);
    assert_eq!(projection::max_disjoint_window(&[iv(0, 0.0, 0.1), iv(1, 0.1, 0.2)]), 2);
}

#[test]
fn triangle_orbit_matches_hitting_set() {
    let s = iso_triangle();
    for theta in [0.31, 1.17, 2.9, 4.4] {
        let hs = match projection::hitting_set(&s, DirectedPoint::new(3, centroid(&s, 3), theta), 400) {
            Ok(h) => h,
            Err(Error::VertexHit { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        let iet = projection::induced_iet(&s, theta).unwrap();
        assert!((iet.total_length() - 1.0).abs() < 1e-12);
        for (a, b) in iet.orbit(hs.points[0], hs.points.len()).iter().zip(&hs.points) {
            assert!(circle_dist(*a, *b) < 1e-9, "θ={theta}: {a} vs {b}");
        }
    }
}

#[test]
fn torus_transport_splits_at_the_vertex() {
    let t = Surface::unit_torus();
    let r = projection::transport_interval(&t, 0.9, EdgeRef::new(0, 0), 0.4, 0.401, projection::TRANSPORT_CAP).unwrap();
    assert!(!r.partial);
    assert!(r.v0.is_some() && r.v1.is_some());
    assert_eq!(r.intervals.len(), r.u + r.w + 1);
    assert_eq!(r.segment_bound_holds(t.c4()), Some(true));
}

proptest! {
    #[test]
    fn projection_images_fill_the_unit_interval(theta in 0.0f64..std::f64::consts::TAU) {
        let s = iso_triangle();
        let p = match projection::ProjectionMap::new(&s, theta) {
            Ok(p) => p,
            Err(Error::DegenerateDirection { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let total: f64 = (0..p.edges.len()).map(|i| p.image_length(i)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iet_inverse_undoes_apply(theta in 0.1f64..1.4, x in 0.0f64..1.0) {
        let s = iso_triangle();
        let iet = match projection::induced_iet(&s, theta) {
            Ok(i) => i,
            Err(Error::DegenerateDirection { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let y = iet.apply(x);
        prop_assert!((0.0..1.0).contains(&y));
        prop_assert!(circle_dist(iet.inverse(y), x) < 1e-12);
    }
}
