use std::sync::Arc;

use kreinlab::discretize::cache::{bit_identical, from_bytes, peek_header, to_bytes, VERSION};
use kreinlab::discretize::*;
use kreinlab::geometry::{unit_disk, unit_square_rounded};
use kreinlab::suite::{green_residual, standard_operators};
use kreinlab::Complex64;
use proptest::prelude::*;

fn drift_model(h: f64) -> DiscreteModel {
    assemble_on(&standard_operators().remove(2), &unit_disk(), h).unwrap()
}

#[test]
fn disk_mesh_tiles_the_inscribed_polygon() {
    let mesh = build_mesh(&unit_disk(), 0.15).unwrap();
    let m = mesh.n_boundary as f64;
    let total: f64 = (0..mesh.triangles.len()).map(|t| mesh.area(t)).sum();
    let polygon = 0.5 * m * (std::f64::consts::TAU / m).sin();
    assert!((total - polygon).abs() < 1e-10, "{total} vs {polygon}");
    assert!((0..mesh.triangles.len()).all(|t| mesh.area(t) > 0.0));
}

#[test]
fn boundary_nodes_follow_the_curve() {
    let mesh = build_mesh(&unit_disk(), 0.2).unwrap();
    for j in 0..mesh.n_boundary {
        let p = mesh.nodes[mesh.n_interior + j];
        assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn linear_functions_are_discretely_harmonic() {
    let model = assemble_on(&EllipticOperatorSpec::laplace(), &unit_square_rounded(0.2).unwrap(), 0.1).unwrap();
    let u: Vec<Complex64> = model
        .mesh
        .nodes
        .iter()
        .map(|p| Complex64::new(0.3 * p[0] - 1.7 * p[1] + 0.4, 0.0))
        .collect();
    let au = model.apply(&u).unwrap();
    let worst = au.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let size = model.a_ii.norm_inf() * u.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(worst < 1e-13 * size, "{worst} vs {size}");
}

#[test]
fn green_identity_holds_for_drift_operator() {
    let model = drift_model(0.2);
    assert!(green_residual(&model, 6, 3).unwrap() < 1e-12);
}

#[test]
fn green_identity_holds_for_variable_operator() {
    let model = assemble_on(&standard_operators().remove(1), &unit_disk(), 0.2).unwrap();
    assert!(green_residual(&model, 6, 4).unwrap() < 1e-12);
}

#[test]
fn dimension_errors() {
    let model = drift_model(0.25);
    assert!(model.apply(&vec![Complex64::new(0.0, 0.0); 3]).is_err());
    assert!(trace_dirichlet(&model, &[]).is_err());
}

#[test]
fn bad_expressions_are_rejected() {
    assert!(EllipticOperatorSpec::from_strings(["1", "0", "0", "1"], ["x +", "0"], "1", 1.0).is_err());
}

#[test]
fn cache_round_trip_and_header() {
    let model = drift_model(0.2);
    let bytes = to_bytes(&model);
    let h = peek_header(&bytes).unwrap();
    assert_eq!((h.version, h.n, h.m), (VERSION, model.n(), model.m()));
    assert_eq!(h.mesh_id, model.mesh.id());
    let back = from_bytes(&bytes, model.mesh.clone(), model.op.clone()).unwrap();
    assert!(bit_identical(&model, &back));
}

#[test]
fn cache_rejects_another_mesh() {
    let model = drift_model(0.2);
    let other = Arc::new(build_mesh(&unit_disk(), 0.25).unwrap());
    assert!(from_bytes(&to_bytes(&model), other, model.op.clone()).is_err());
}

#[test]
fn cache_reports_version_before_checksum() {
    let model = drift_model(0.25);
    let mut bytes = to_bytes(&model);
    bytes[8..12].copy_from_slice(&(VERSION + 7).to_le_bytes());
    let Err(e) = from_bytes(&bytes, model.mesh.clone(), model.op.clone()) else {
        panic!("version bump accepted");
    };
    assert!(e.to_string().contains("version"), "{e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn any_flipped_byte_is_detected(pos in 0.0f64..1.0, bit in 0u8..8) {
        let model = drift_model(0.3);
        let mut bytes = to_bytes(&model);
        let k = ((bytes.len() - 1) as f64 * pos) as usize;
        bytes[k] ^= 1 << bit;
        prop_assert!(from_bytes(&bytes, model.mesh.clone(), model.op.clone()).is_err());
    }

    #[test]
    fn any_truncation_is_detected(frac in 0.0f64..1.0) {
        let model = drift_model(0.3);
        let bytes = to_bytes(&model);
        let k = ((bytes.len() - 1) as f64 * frac) as usize;
        prop_assert!(from_bytes(&bytes[..k], model.mesh.clone(), model.op.clone()).is_err());
    }
}
