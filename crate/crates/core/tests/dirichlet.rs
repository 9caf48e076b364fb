use kreinlab::dirichlet::*;
use kreinlab::discretize::*;
use kreinlab::geometry::{star_c11, unit_disk};
use kreinlab::linalg::{c, frob, CMat};
use kreinlab::suite::standard_operators;
use kreinlab::Complex64;

/// First zero of `J_0` by bisection on its power series.
fn j01() -> f64 {
    let j0 = |x: f64| {
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 1..60 {
            term *= -(x * x / 4.0) / (k * k) as f64;
            sum += term;
        }
        sum
    };
    let (mut a, mut b) = (2.0, 3.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if j0(a) * j0(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn poisson_reproduces_affine_functions() {
    let model = assemble_on(&EllipticOperatorSpec::laplace(), &star_c11(0.1).unwrap(), 0.15).unwrap();
    let k = poisson(&model, c(0.0, 0.0)).unwrap();
    let n = model.n();
    let f = |p: [f64; 2]| Complex64::new(2.0 * p[0] + 0.5 * p[1] - 1.0, 0.0);
    let phi = CMat::from_fn(model.m(), 1, |j, _| f(model.mesh.nodes[n + j]));
    let u = &k.matrix * &phi;
    for i in 0..n {
        assert!((u[(i, 0)] - f(model.mesh.nodes[i])).norm() < 1e-10);
    }
}

#[test]
fn poisson_solves_the_homogeneous_problem() {
    for op in standard_operators() {
        let model = assemble_on(&op, &unit_disk(), 0.2).unwrap();
        for lambda in [c(0.5, 0.3), c(-2.0, -0.5)] {
            assert!(poisson(&model, lambda).unwrap().residual(&model) < 1e-12);
            assert!(poisson_primed(&model, lambda).unwrap().residual(&model) < 1e-12);
        }
    }
}

#[test]
fn poisson_adjoint_is_the_conormal_resolvent() {
    let model = assemble_on(&standard_operators().remove(2), &unit_disk(), 0.2).unwrap();
    for lambda in [c(1.0, 1.0), c(-1.0, 2.0)] {
        assert!(poisson_adjoint_check(&model, lambda).unwrap() < 1e-10);
    }
}

#[test]
fn resolvent_inverts_the_dirichlet_block() {
    let model = assemble_on(&standard_operators().remove(1), &unit_disk(), 0.2).unwrap();
    let lambda = c(0.7, -0.4);
    let f = CMat::from_fn(model.n(), 2, |i, j| c((i + j) as f64 % 3.0, 1.0));
    let u = dirichlet_resolvent(&model, lambda, &f).unwrap();
    let r = model.a_ii.mul(&u) - kreinlab::linalg::scale(&u, lambda) - &f;
    assert!(frob(&r) / frob(&f) < 1e-12);
}

#[test]
fn harmonic_basis_spans_the_boundary() {
    let model = assemble_on(&standard_operators().remove(0), &unit_disk(), 0.25).unwrap();
    let b = harmonic_basis(&model, c(0.2, 0.1)).unwrap();
    assert_eq!(b.dim(), model.m());
    assert!(b.residual(&model) < 1e-12);
}

#[test]
fn first_dirichlet_eigenvalue_of_the_disk() {
    let model = assemble_on(&EllipticOperatorSpec::laplace(), &unit_disk(), 0.1).unwrap();
    let ev = dirichlet_spectrum(&model, 3).unwrap();
    let exact = j01().powi(2);
    assert!((ev[0].re - exact).abs() < 0.01 * exact, "{} vs {exact}", ev[0]);
    assert!(ev[0].im.abs() < 1e-8);
}

#[test]
fn factorizations_are_reused() {
    let model = assemble_on(&standard_operators().remove(0), &unit_disk(), 0.25).unwrap();
    let lambda = c(0.5, 0.5);
    let a = model.dirichlet_lu(lambda).unwrap();
    let b = model.dirichlet_lu(lambda).unwrap();
    assert!(std::sync::Arc::ptr_eq(&a, &b));
}
