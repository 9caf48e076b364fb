use kreinlab::discretize::*;
use kreinlab::dtn::*;
use kreinlab::geometry::unit_disk;
use kreinlab::linalg::{c, eye, frob, gram, CMat};
use kreinlab::suite::{standard_conditions, standard_lambdas, standard_operators};
use kreinlab::Complex64;

fn mode(m: usize, n: i64) -> CMat {
    CMat::from_fn(m, 1, |j, _| Complex64::from_polar(1.0, n as f64 * std::f64::consts::TAU * j as f64 / m as f64))
}

#[test]
fn disk_dtn_acts_on_fourier_modes_like_minus_n() {
    // harmonic r^n e^{inθ} has inward normal derivative -n
    let model = assemble_on(&EllipticOperatorSpec::laplace(), &unit_disk(), 0.1).unwrap();
    let m = model.m();
    let p = dtn(&model, c(0.0, 0.0)).unwrap();
    for n in 0..=4i64 {
        let phi = mode(m, n);
        let q = gram(&phi, &vec![1.0; m], &(&p.matrix * &phi))[(0, 0)] / m as f64;
        assert!((q.re + n as f64).abs() < 0.05 * n as f64 + 0.02, "n = {n}: {q}");
    }
}

#[test]
fn dtn_matches_conormal_of_extension() {
    let model = assemble_on(&standard_operators().remove(2), &unit_disk(), 0.2).unwrap();
    let phi = CMat::from_fn(model.m(), 3, |j, k| c((j * (k + 1)) as f64 % 5.0, k as f64));
    for lambda in [c(0.5, 0.3), c(-1.0, 2.0)] {
        assert!(dtn(&model, lambda).unwrap().residual(&model, &phi).unwrap() < 1e-12);
        assert!(dtn_primed(&model, lambda).unwrap().residual(&model, &phi).unwrap() < 1e-12);
    }
}

#[test]
fn modified_dtn_is_dtn_minus_c() {
    let model = assemble_on(&standard_operators().remove(0), &unit_disk(), 0.25).unwrap();
    let cop = BoundaryOperator::differential("0.3", "0.5").unwrap();
    let cm = cop.to_matrix(&model).unwrap();
    let lambda = c(1.0, 1.0);
    let a = dtn_modified(&model, lambda, &cm).unwrap();
    let b = dtn(&model, lambda).unwrap().matrix - &cm;
    assert!(frob(&(&a - &b)) / frob(&b) < 1e-13);
}

#[test]
fn m_function_inverts_l() {
    for op in standard_operators() {
        let model = assemble_on(&op, &unit_disk(), 0.2).unwrap();
        for cop in standard_conditions() {
            for &lambda in &standard_lambdas()[..3] {
                let r = m_function(&model, &cop, lambda).unwrap();
                assert!(r.residual <= 1e-10 * r.cond.max(1.0), "{} {}: {}", op.label, cop.label, r.residual);
                let l = l_lambda(&model, &cop.to_matrix(&model).unwrap(), lambda).unwrap();
                let prod = &r.m_matrix * &l + eye(model.m());
                assert!(frob(&prod) / (model.m() as f64).sqrt() <= 1e-10 * r.cond);
            }
        }
    }
}

#[test]
fn krein_formula_holds_for_standard_conditions() {
    let model = assemble_on(&standard_operators().remove(2), &unit_disk(), 0.2).unwrap();
    for cop in standard_conditions() {
        for &lambda in &standard_lambdas() {
            let k = krein_verify(&model, &cop, lambda).unwrap();
            let cond = k.cond_boundary * k.cond_dirichlet;
            assert!(k.residual <= 1e-10 * cond.max(1.0), "{} at {lambda}: {:.2e}", cop.label, k.residual);
        }
    }
}

#[test]
fn m_function_rejects_eigenvalues() {
    let model = assemble_on(&EllipticOperatorSpec::laplace(), &unit_disk(), 0.2).unwrap();
    // constants span the kernel of the Neumann problem for -Δ
    match m_function(&model, &BoundaryOperator::neumann(), c(0.0, 0.0)) {
        Err(kreinlab::Error::InSpectrum { .. }) => {}
        other => panic!("expected InSpectrum, got {other:?}"),
    }
}

#[test]
fn neumann_scan_finds_first_eigenvalue() {
    // j'_{1,1} = 1.841183781...
    let exact = 1.841_183_781_340_659_3_f64.powi(2);
    let model = assemble_on(&EllipticOperatorSpec::laplace(), &unit_disk(), 0.1).unwrap();
    let grid: Vec<Complex64> = (0..24).map(|i| c(2.5 + 2.0 * i as f64 / 23.0, 0.0)).collect();
    let scan = spectrum_scan(&model, &BoundaryOperator::neumann(), &grid).unwrap();
    let best = scan
        .candidates
        .iter()
        .map(|k| k.lambda.re)
        .min_by(|a, b| (a - exact).abs().total_cmp(&(b - exact).abs()))
        .expect("a candidate");
    assert!((best - exact).abs() < 0.02 * exact, "{best}");
}

#[test]
fn kernel_relation_at_a_neumann_eigenvalue() {
    let model = assemble_on(&EllipticOperatorSpec::laplace(), &unit_disk(), 0.2).unwrap();
    let cop = BoundaryOperator::neumann();
    let r = neumann_realization(&model, &cop).unwrap();
    let lambda = polish_eigenvalue(&model, &r, c(3.4, 0.0)).unwrap();
    let k = kernel_range_check(&model, &cop, lambda).unwrap();
    assert_eq!(k.dim_ker_l, k.dim_ker_a);
    assert_eq!(k.dim_ker_a, 2);
    assert!(k.kernel_angle < 1e-6 && k.range_angle < 1e-6, "{k:?}");
    assert_eq!(k.rank_defect, 0);
}

#[test]
fn ellipticity_of_neumann_and_failure_of_negative_multiplier() {
    let model = assemble_on(&EllipticOperatorSpec::laplace(), &unit_disk(), 0.2).unwrap();
    let frames = &model.mesh.frames;
    let ok = param_ellipticity_check(&model.op, &BoundaryOperator::neumann(), 0.0, frames, 64);
    assert!(ok.flag && (ok.margin - 1.0).abs() < 1e-9, "{ok:?}");
    let bad = param_ellipticity_check(&model.op, &BoundaryOperator::abs_multiplier(-2.0), 0.0, frames, 64);
    assert!(!bad.flag && bad.margin < 1e-3, "{bad:?}");
}

#[test]
fn golden_section_minimum() {
    let (x, fx) = golden_min(|x| (x - 1.3).powi(2) + 0.5, 0.0, 4.0, 1e-10);
    assert!((x - 1.3).abs() < 1e-6 && (fx - 0.5).abs() < 1e-12);
}

#[test]
fn fourier_modes_are_orthonormal() {
    let m = 32;
    let f = fourier_modes(m, 3);
    assert_eq!(f.ncols(), 7);
    let omega = std::f64::consts::TAU / m as f64;
    let g = gram(&f, &vec![omega; m], &f);
    assert!(frob(&(&g - eye(7))) < 1e-12);
}

#[test]
fn subspace_krein_formula() {
    let model = assemble_on(&standard_operators().remove(0), &unit_disk(), 0.2).unwrap();
    let x = fourier_modes(model.m(), 2);
    let (_, k) = subspace_realization(&model, &CMat::zeros(5, 5), &x, &x, c(0.5, 0.3)).unwrap();
    assert!(k.residual < 1e-8, "{:.2e}", k.residual);
}
