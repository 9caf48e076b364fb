//! The exact-identity suite: every identity that holds to rounding error on
//! the discrete model, evaluated for one boundary condition over a list of
//! spectral parameters.

use num_complex::Complex64;

use crate::dirichlet::poisson_adjoint_probe;
use crate::discretize::{green_defect, DiscreteModel, EllipticOperatorSpec};
use crate::dtn::{krein_verify, m_function_matrix, neumann_realization, BoundaryOperator};
use crate::error::Result;
use crate::extension::{
    boundary_triplet, diagram_sides_with, krein_abstract_with, krein_t_lambda_with, lambda_pieces_with, m_base,
    m_abstract_residual_with, t_from_realization,
};
use crate::linalg::{c, rel_diff, CMat};
use crate::realization::{adjoint_relation_residual, probe_block};

/// Default relative tolerance, multiplied by the condition estimate.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct IdentityRecord {
    pub identity: &'static str,
    pub lambda: Option<Complex64>,
    pub residual: f64,
    pub cond: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct IdentitySuite {
    pub mesh_id: String,
    pub operator: String,
    pub condition: String,
    pub records: Vec<IdentityRecord>,
}

impl IdentitySuite {
    pub fn pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn worst(&self) -> Option<&IdentityRecord> {
        self.records
            .iter()
            .max_by(|a, b| (a.residual / a.threshold).total_cmp(&(b.residual / b.threshold)))
    }
}

fn record(identity: &'static str, lambda: Option<Complex64>, residual: f64, cond: f64, tol: f64) -> IdentityRecord {
    let cond = if cond.is_finite() { cond.max(1.0) } else { cond };
    let threshold = tol * cond;
    IdentityRecord {
        identity,
        lambda,
        residual,
        cond,
        threshold,
        pass: residual <= threshold,
    }
}

/// Relative discrete Green defect over `count` pairs of random full vectors.
pub fn green_residual(model: &DiscreteModel, count: usize, seed: u64) -> Result<f64> {
    let nm = model.n() + model.m();
    let u = probe_block(nm, count, seed);
    let v = probe_block(nm, count, seed.wrapping_add(1));
    let mut worst = 0.0_f64;
    for k in 0..count {
        let uk: Vec<Complex64> = (0..nm).map(|i| u[(i, k)]).collect();
        let vk: Vec<Complex64> = (0..nm).map(|i| v[(i, k)]).collect();
        let d = green_defect(model, &uk, &vk)?;
        let au = model.apply(&uk)?;
        let apv = model.apply_adjoint(&vk)?;
        let n = model.n();
        let size = crate::discretize::inner(&au, &vk[..n], &model.w_i).norm()
            + crate::discretize::inner(&uk[..n], &apv, &model.w_i).norm();
        worst = worst.max(d / size.max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

/// Runs every identity for the Neumann-type condition `cop`.
pub fn identity_suite(
    model: &DiscreteModel,
    cop: &BoundaryOperator,
    lambdas: &[Complex64],
    seed: u64,
    tol: f64,
) -> Result<IdentitySuite> {
    let mut records = Vec::new();
    records.push(record("green", None, green_residual(model, 4, seed)?, 1.0, tol));
    let triplet = boundary_triplet(model)?;
    let nm = model.n() + model.m();
    let u = probe_block(nm, 4, seed ^ 0x7472);
    let v = probe_block(nm, 4, seed ^ 0x7473);
    let tg = triplet.green_defect(model, &u, &v).into_iter().fold(0.0, f64::max);
    records.push(record("triplet_green", None, tg, 1.0, tol));

    let r = neumann_realization(model, cop)?;
    let probe = probe_block(model.n(), 8, seed ^ 0x6164);
    records.push(record(
        "realization_adjoint",
        None,
        adjoint_relation_residual(model, &r, &probe),
        1.0,
        tol,
    ));
    let ext = t_from_realization(&r, model)?;
    let base = m_base(&ext, model)?;
    let cm = cop.to_matrix(model)?;
    let f: CMat = probe_block(model.n(), 8, seed ^ 0x6b72);
    for &lambda in lambdas {
        let l = Some(lambda);
        let kr = krein_verify(model, cop, lambda)?;
        let cond_d = kr.cond_dirichlet;
        let cond = cond_d * kr.cond_boundary;
        records.push(record("adjoint_trace", l, poisson_adjoint_probe(model, lambda, &f)?, cond_d, tol));
        records.push(record("krein_neumann", l, kr.residual, cond, tol));
        let mr = m_function_matrix(model, &cm, lambda)?;
        records.push(record("m_times_l", l, mr.residual, mr.cond, tol));
        let p = lambda_pieces_with(&r, &ext, &base, model, lambda)?;
        let (a, b) = krein_t_lambda_with(&r, model, lambda, &p.t_lambda, &f)?;
        records.push(record("krein_t_lambda", l, rel_diff(&a, &b), cond, tol));
        let (a, b) = krein_abstract_with(&r, model, &p, &f)?;
        records.push(record("krein_abstract", l, rel_diff(&a, &b), cond, tol));
        let (a, b) = diagram_sides_with(&ext, model, &p);
        records.push(record("diagram", l, rel_diff(&a, &b), cond, tol));
        records.push(record("m_abstract", l, m_abstract_residual_with(&ext, model, &p)?, cond, tol));
    }
    Ok(IdentitySuite {
        mesh_id: model.mesh.id(),
        operator: model.op.label.clone(),
        condition: cop.label.clone(),
        records,
    })
}

/// `-Δ + 1`, a variable-coefficient selfadjoint operator and a
/// non-selfadjoint operator with constant drift.
pub fn standard_operators() -> Vec<EllipticOperatorSpec> {
    let mut lap = EllipticOperatorSpec::laplace().with_shift(1.0);
    lap.label = "-lap+1".into();
    let mut var = EllipticOperatorSpec::from_strings(
        ["1 + 0.25*x*x", "0.2*x*y", "0.2*x*y", "1 + 0.25*y*y"],
        ["0", "0"],
        "1 + x*x",
        1.0,
    )
    .expect("valid expressions");
    var.label = "variable selfadjoint".into();
    let mut drift = EllipticOperatorSpec::from_strings(["1", "0", "0", "1"], ["0.8", "-0.5"], "1", 1.0)
        .expect("valid expressions");
    drift.label = "constant drift".into();
    vec![lap, var, drift]
}

/// `C = 0`, Robin `C = 2`, and the first-order `C = 0.3 ∂_t + 0.5`.
pub fn standard_conditions() -> Vec<BoundaryOperator> {
    vec![
        BoundaryOperator::neumann(),
        BoundaryOperator::robin(c(2.0, 0.0)),
        BoundaryOperator::differential("0.3", "0.5").expect("valid expressions"),
    ]
}

/// Six spectral parameters off the real axis.
pub fn standard_lambdas() -> Vec<Complex64> {
    vec![
        c(0.5, 0.3),
        c(-1.0, 2.0),
        c(2.0, -1.0),
        c(0.0, 3.0),
        c(-2.0, -0.5),
        c(4.0, 1.5),
    ]
}
