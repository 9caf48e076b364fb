use kreinlab::discretize::*;
use kreinlab::dtn::BoundaryOperator;
use kreinlab::geometry::unit_disk;
use kreinlab::linalg::{c, col, eye, frob, scale, to_vec, CMat};
use kreinlab::parameter::*;
use kreinlab::Complex64;
use proptest::prelude::*;

fn vec_strategy() -> impl Strategy<Value = Vec<Complex64>> {
    (3u32..8).prop_flat_map(|k| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1usize << k)
            .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
    })
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn frequencies_are_centered() {
    let f: Vec<i64> = (0..8).map(|k| frequency(k, 8)).collect();
    assert_eq!(f, vec![0, 1, 2, 3, -4, -3, -2, -1]);
}

#[test]
fn ray_grid_validation() {
    assert!(Ray::new(0.0, vec![0.5, 2.0]).is_err());
    assert!(Ray::new(0.0, vec![2.0, 2.0]).is_err());
    assert!(Ray::new(f64::NAN, vec![2.0]).is_err());
    let r = Ray::geometric(0.3, 2.0, 32.0, 5).unwrap();
    assert!((r.mu_grid[4] - 32.0).abs() < 1e-12 && (r.mu_grid[2] - 8.0).abs() < 1e-12);
    assert_eq!(r.lambda(2.0), -Complex64::from_polar(4.0, 0.3));
}

#[test]
fn sobolev_norm_rejects_negative_mu() {
    assert!(sobolev_norm_boundary(&[c(1.0, 0.0); 8], 0.5, -1.0).is_err());
}

#[test]
fn m_norm_decays_like_inverse_mu() {
    let op = EllipticOperatorSpec::laplace().with_shift(1.0);
    let model = assemble_on(&op, &unit_disk(), 0.2).unwrap();
    let ray = Ray::geometric(0.0, 2.0, 32.0, 6).unwrap();
    let fit = ray_decay_fit(&model, &BoundaryOperator::neumann(), &ray, RayQuantity::MNorm).unwrap();
    assert!((fit.slope + 1.0).abs() < 0.25, "slope {}", fit.slope);
    assert!(fit.skipped.is_empty());
}

#[test]
fn frozen_operator_is_constant() {
    let op = EllipticOperatorSpec::from_strings(["1 + x*x", "0", "0", "2 + y"], ["x", "0"], "1 + x*y", 1.0).unwrap();
    let f = frozen_operator(&op, [0.5, -1.0]);
    assert!(f.has_constant_principal_part());
    assert_eq!(f.a[0][0].eval(3.0, 3.0), Complex64::new(1.25, 0.0));
    assert_eq!(f.c.eval(-2.0, 7.0), Complex64::new(0.5, 0.0));
}

#[test]
fn disk_barycenter_is_the_origin() {
    let model = assemble_on(&EllipticOperatorSpec::laplace(), &unit_disk(), 0.2).unwrap();
    let b = barycenter(&model);
    assert!(b[0].abs() < 1e-12 && b[1].abs() < 1e-12, "{b:?}");
}

proptest! {
    #[test]
    fn dft_round_trip_and_parseval(phi in vec_strategy()) {
        let hat = dft(&phi);
        prop_assert!((l2(&hat) - l2(&phi)).abs() <= 1e-12 * (1.0 + l2(&phi)));
        let back = idft(&hat);
        let err: f64 = back.iter().zip(&phi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn order_reduction_group_law(phi in vec_strategy(), r in -2.0f64..2.0, s in -2.0f64..2.0) {
        let a = order_reduce_boundary(&order_reduce_boundary(&phi, r).unwrap(), s).unwrap();
        let b = order_reduce_boundary(&phi, r + s).unwrap();
        let err: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * (1.0 + l2(&b)));
    }

    #[test]
    fn multiplier_matrix_agrees_with_fft(phi in vec_strategy(), r in -1.0f64..1.0) {
        let m = phi.len();
        let dense = &lambda_matrix(m, r) * &col(&phi);
        let fast = order_reduce_boundary(&phi, r).unwrap();
        let err: f64 = to_vec(&dense).iter().zip(&fast).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * (1.0 + l2(&fast)));
    }

    #[test]
    fn order_reduction_is_an_isometry_between_scales(phi in vec_strategy(), s in -1.5f64..1.5, r in -1.5f64..1.5) {
        // ‖Λ^r φ‖_{s} = ‖φ‖_{s+r} at μ = 0
        let lhs = sobolev_norm_boundary(&order_reduce_boundary(&phi, r).unwrap(), s, 0.0).unwrap();
        let rhs = sobolev_norm_boundary(&phi, s + r, 0.0).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs));
    }

    #[test]
    fn norm_interpolation(phi in vec_strategy(), s0 in -1.0f64..1.0, ds in 0.0f64..2.0, t in 0.0f64..1.0, mu in 0.0f64..50.0) {
        let s1 = s0 + ds;
        let st = (1.0 - t) * s0 + t * s1;
        let mid = sobolev_norm_boundary(&phi, st, mu).unwrap();
        let a = sobolev_norm_boundary(&phi, s0, mu).unwrap();
        let b = sobolev_norm_boundary(&phi, s1, mu).unwrap();
        prop_assert!(mid <= a.powf(1.0 - t) * b.powf(t) * (1.0 + 1e-12));
    }

    #[test]
    fn norms_grow_with_mu_for_positive_order(phi in vec_strategy(), s in 0.0f64..2.0, mu in 0.0f64..20.0, dmu in 0.0f64..20.0) {
        let a = sobolev_norm_boundary(&phi, s, mu).unwrap();
        let b = sobolev_norm_boundary(&phi, s, mu + dmu).unwrap();
        prop_assert!(a <= b * (1.0 + 1e-14));
        // and ⟨μ⟩^{2s} ‖φ‖² ≤ ‖φ‖²_{s,μ}
        prop_assert!(mu_bracket(mu).powf(s) * l2(&phi) <= a * (1.0 + 1e-12));
    }

    #[test]
    fn certified_neumann_inverse_is_an_inverse(
        seed in prop::collection::vec(-1.0f64..1.0, 36),
        eps in 0.0f64..0.3,
    ) {
        // target = I + E with ‖E‖ small relative to its size, approx = I
        let e = CMat::from_fn(6, 6, |i, j| c(seed[6 * i + j], 0.0));
        let e = scale(&e, c(eps / frob(&e).max(1e-300), 0.0));
        let target = eye(6) + &e;
        match neumann_invert(&target, &eye(6)).unwrap() {
            NeumannInverse::Certified { inverse, rho, .. } => {
                prop_assert!(rho < 0.5);
                let r = &target * &inverse - eye(6);
                prop_assert!(frob(&r) < 1e-12);
            }
            NeumannInverse::Failed { rho } => prop_assert!(rho >= 0.5),
        }
    }

    #[test]
    fn failed_certificates_have_large_residual(k in 2.0f64..10.0) {
        let target = scale(&eye(4), c(k, 0.0));
        match neumann_invert(&target, &eye(4)).unwrap() {
            NeumannInverse::Failed { rho } => prop_assert!((rho - (k - 1.0)).abs() < 1e-10),
            NeumannInverse::Certified { .. } => prop_assert!(false, "certified with ‖R‖ ≥ 1/2"),
        }
    }

    #[test]
    fn linear_fit_recovers_lines(a in -3.0f64..3.0, b in -5.0f64..5.0) {
        let xs: Vec<f64> = (0..7).map(|k| k as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let (s, i) = linear_fit(&xs, &ys);
        prop_assert!((s - a).abs() < 1e-10 && (i - b).abs() < 1e-10);
    }
}
