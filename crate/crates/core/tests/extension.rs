use kreinlab::dirichlet::poisson;
use kreinlab::discretize::*;
use kreinlab::dtn::{neumann_realization, BoundaryOperator};
use kreinlab::extension::*;
use kreinlab::geometry::unit_disk;
use kreinlab::linalg::{c, rel_diff, CMat};
use kreinlab::realization::probe_block;
use kreinlab::suite::{standard_conditions, standard_operators};

fn drift() -> DiscreteModel {
    assemble_on(&standard_operators().remove(2), &unit_disk(), 0.2).unwrap()
}

#[test]
fn t_and_realization_round_trip() {
    let model = drift();
    for cop in standard_conditions() {
        let r = neumann_realization(&model, &cop).unwrap();
        let ext = t_from_realization(&r, &model).unwrap();
        assert!(ext.validate(&model).unwrap() < 1e-10);
        let r2 = realization_from_t(&ext, &model).unwrap();
        assert!(rel_diff(&r.y, &r2.y) < 1e-10, "{}", cop.label);
        let ext2 = t_from_realization(&r2, &model).unwrap();
        let t2 = ext2.t_in_bases(&model, &ext.v_basis, &ext.w_basis);
        assert!(rel_diff(&ext.t_matrix, &t2) < 1e-10);
    }
}

#[test]
fn kernel_and_range_ranks_agree() {
    let model = assemble_on(&EllipticOperatorSpec::laplace(), &unit_disk(), 0.25).unwrap();
    for cop in [BoundaryOperator::neumann(), BoundaryOperator::robin(c(2.0, 0.0))] {
        let r = neumann_realization(&model, &cop).unwrap();
        let ext = t_from_realization(&r, &model).unwrap();
        let [ka, kt, ra, rt] = rank_identities(&ext, &r, &model).unwrap();
        assert_eq!(ka, kt, "{}", cop.label);
        assert_eq!(ra, rt, "{}", cop.label);
    }
    // -Δ with Neumann data annihilates constants
    let r = neumann_realization(&model, &BoundaryOperator::neumann()).unwrap();
    let ext = t_from_realization(&r, &model).unwrap();
    assert_eq!(rank_identities(&ext, &r, &model).unwrap()[0], 1);
}

#[test]
fn abstract_identities_at_several_lambdas() {
    let model = drift();
    let cop = BoundaryOperator::differential("0.3", "0.5").unwrap();
    let r = neumann_realization(&model, &cop).unwrap();
    let ext = t_from_realization(&r, &model).unwrap();
    let f = probe_block(model.n(), 4, 9);
    for lambda in [c(0.5, 0.3), c(-2.0, -0.5)] {
        let (a, b) = krein_abstract(&r, &ext, &model, lambda, &f).unwrap();
        assert!(rel_diff(&a, &b) < 1e-8);
        let (a, b) = diagram_sides(&ext, &r, &model, lambda).unwrap();
        assert!(rel_diff(&a, &b) < 1e-8);
        assert!(m_abstract_residual(&r, &ext, &model, lambda).unwrap() < 1e-8);
        let (a, b) = krein_t_lambda(&r, &model, lambda, &f).unwrap();
        assert!(rel_diff(&a, &b) < 1e-8);
    }
}

#[test]
fn decomposition_reassembles() {
    let model = drift();
    let lambda = c(1.0, 0.5);
    let u = probe_block(model.n() + model.m(), 3, 2);
    let (ug, uz) = decompose(&model, lambda, &u).unwrap();
    assert!(rel_diff(&(&ug + &uz), &u) < 1e-12);
    assert!(rel_diff(&ug, &gamma_part(&model, lambda, &u).unwrap()) < 1e-10);
}

#[test]
fn e_lambda_maps_poisson_operators() {
    // E^λ K⁰ = K^λ and F^λ K^λ = K⁰
    let model = drift();
    let lambda = c(0.5, -0.7);
    let k0 = poisson(&model, c(0.0, 0.0)).unwrap().matrix;
    let kl = poisson(&model, lambda).unwrap().matrix;
    let there = e_lambda(&model, lambda, Direction::Forward, &k0).unwrap();
    assert!(rel_diff(&there, &kl) < 1e-10);
    let back = e_lambda(&model, lambda, Direction::Inverse, &kl).unwrap();
    assert!(rel_diff(&back, &k0) < 1e-10);
}

#[test]
fn triplet_green_identity() {
    for op in standard_operators() {
        let model = assemble_on(&op, &unit_disk(), 0.25).unwrap();
        let t = boundary_triplet(&model).unwrap();
        let nm = model.n() + model.m();
        let d = t.green_defect(&model, &probe_block(nm, 4, 5), &probe_block(nm, 4, 6));
        assert!(d.iter().all(|&x| x < 1e-10), "{}: {d:?}", op.label);
    }
}

#[test]
fn triplet_realization_checks() {
    let model = drift();
    let m = model.m();
    let t = CMat::from_fn(m, m, |i, j| if i == j { c(0.5, 0.0) } else if i + 1 == j { c(0.1, 0.0) } else { c(0.0, 0.0) });
    let p = proposition_check(&model, &t, c(0.5, 0.3)).unwrap();
    assert!(p.defining < 1e-8 && p.adjoint < 1e-8 && p.consistency < 1e-8, "{p:?}");
}

#[test]
fn mismatched_t_is_rejected() {
    let model = drift();
    let (v, w) = full_null_spaces(&model).unwrap();
    let ext = ExtensionData::new(&model, v, w, CMat::zeros(2, 3), false);
    assert!(ext.is_err() || ext.unwrap().validate(&model).is_err());
}
