use kreinlab::geometry::*;
use proptest::prelude::*;

#[test]
fn disk_frames_are_orthonormal() {
    let d = unit_disk();
    for f in boundary_frames(&d, 32).unwrap() {
        let dot = f.tangent[0] * f.interior_normal[0] + f.tangent[1] * f.interior_normal[1];
        assert!(dot.abs() < 1e-12);
        assert!((f.tangent[0].hypot(f.tangent[1]) - 1.0).abs() < 1e-12);
        assert!((f.interior_normal[0].hypot(f.interior_normal[1]) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn boundary_counts_must_be_powers_of_two() {
    assert!(boundary_frames(&unit_disk(), 24).is_err());
    assert!(boundary_frames(&unit_disk(), 16).is_ok());
}

#[test]
fn rounded_square_length_matches_chord_sum() {
    let sq = unit_square_rounded(0.1).unwrap();
    let n = 20000;
    let mut total = 0.0;
    let mut prev = sq.curve.point(0.0);
    for i in 1..=n {
        let p = sq.curve.point(std::f64::consts::TAU * i as f64 / n as f64);
        total += (p[0] - prev[0]).hypot(p[1] - prev[1]);
        prev = p;
    }
    assert!((sq.boundary_length() - total).abs() < 1e-5, "{} vs {total}", sq.boundary_length());
    assert!((unit_disk().boundary_length() - std::f64::consts::TAU).abs() < 1e-12);
}

#[test]
fn chart_text_round_trip() {
    let d = unit_disk();
    let charts = charts_from_curve(&d.curve, 6, Smoothness::new(1, 1.0)).unwrap();
    let text = write_chart_text(&charts);
    let back = parse_chart_text(&text, Smoothness::new(1, 1.0)).unwrap();
    assert_eq!(back.len(), charts.len());
    for (a, b) in charts.iter().zip(&back) {
        for y in [-0.1, 0.0, 0.07] {
            let (p, q) = (a.boundary_point(y), b.boundary_point(y));
            assert!((p[0] - q[0]).abs() < 1e-9 && (p[1] - q[1]).abs() < 1e-9);
        }
    }
}

#[test]
fn chart_text_errors_name_the_line() {
    let e = parse_chart_text("1 0 0 1 0 0\n0.5\n0 x 0\n", Smoothness::new(1, 1.0)).unwrap_err();
    assert!(e.to_string().contains("line 3"), "{e}");
}

#[test]
fn holder_norm_of_a_line() {
    // f(y) = 2y on [-1, 1]: sup |f| = 2, sup |f'| = 2, f' constant so the seminorm vanishes
    let f = GraphFunction::from_fn(-1.0, 1.0, 41, "2y", Smoothness::new(1, 1.0), |y| 2.0 * y);
    assert!((holder_norm(&f, 1, 1.0).unwrap() - 2.0).abs() < 1e-9);
    // for k = 0, σ = 1 the seminorm is the Lipschitz constant
    assert!((holder_norm(&f, 0, 1.0).unwrap() - 4.0).abs() < 1e-9);
}

#[test]
fn holder_norm_rejects_bad_sigma() {
    let f = GraphFunction::from_fn(-1.0, 1.0, 41, "y", Smoothness::new(1, 0.5), |y| y);
    assert!(holder_norm(&f, 1, 0.0).is_err());
    assert!(holder_norm(&f, 1, 1.5).is_err());
}

proptest! {
    #[test]
    fn affine_frames_invert(a in 0.0f64..6.3, ox in -2.0f64..2.0, oy in -2.0f64..2.0, px in -3.0f64..3.0, py in -3.0f64..3.0) {
        let t = [a.cos(), a.sin()];
        let n = [-a.sin(), a.cos()];
        let map = AffineMap::frame([ox, oy], t, n);
        let back = map.to_world(map.to_chart([px, py]));
        prop_assert!((back[0] - px).abs() < 1e-12 && (back[1] - py).abs() < 1e-12);
        let reals = AffineMap::from_reals(map.to_reals()).unwrap();
        let q = reals.to_chart([px, py]);
        let q0 = map.to_chart([px, py]);
        prop_assert!((q[0] - q0[0]).abs() < 1e-12 && (q[1] - q0[1]).abs() < 1e-12);
    }

    #[test]
    fn disk_charts_flatten_and_unflatten(k in 0usize..6, s in -0.2f64..0.2, d in 0.0f64..0.05) {
        let charts = charts_from_curve(&unit_disk().curve, 6, Smoothness::new(1, 1.0)).unwrap();
        let c = &charts[k];
        let p = c.affine_map.to_world([s, c.graph.eval(s) + d]);
        if let Ok(z) = c.flatten(p) {
            let q = c.unflatten(z).unwrap();
            prop_assert!((p[0] - q[0]).abs() < 1e-10 && (p[1] - q[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn boundary_points_lie_on_the_circle(t in 0.0f64..6.283) {
        let p = unit_disk().curve.point(t);
        prop_assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
    }
}
