//! Dirichlet-to-Neumann maps, Neumann-type realizations, M-functions and the
//! Kreĭn resolvent formula, principal symbols and parameter-ellipticity.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::dirichlet::{poisson, poisson_primed, poisson_star};
use crate::discretize::{DiscreteModel, EllipticOperatorSpec};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{BoundaryFrame, Smoothness};
use crate::linalg::{
    adjoint, c, cond, eye, frob, gram, inverse, max_principal_angle, orthonormal_range,
    scale_cols, scale_rows, singular_values, CMat, ZERO,
};
use crate::parameter::{lambda_matrix, multiplier_matrix};
use crate::realization::{probe_block, weighted_star, Realization, RealizationKind};

pub type Symbol = Arc<dyn Fn(i64) -> Complex64 + Send + Sync>;

/// Frequency used to read off the homogeneous principal part of a multiplier.
const PRINCIPAL_PROBE: i64 = 1 << 20;

/// Number of probe columns for operator-norm residual estimates.
pub const PROBES: usize = 16;

#[derive(Clone)]
pub enum BoundaryKind {
    Matrix(CMat),
    /// Multiplier on the boundary-parameter frequencies, with principal part
    /// `c₊ |n|` for `n > 0` and `c₋ |n|` for `n < 0`.
    Multiplier { symbol: Symbol, principal: [Complex64; 2] },
    /// `b ∂_t + c` with `t` the boundary parameter.
    Differential { b: Expr, c: Expr },
}

impl fmt::Debug for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryKind::Matrix(m) => write!(f, "Matrix({}x{})", m.nrows(), m.ncols()),
            BoundaryKind::Multiplier { principal, .. } => {
                write!(f, "Multiplier(principal {principal:?})")
            }
            BoundaryKind::Differential { b, c } => write!(f, "Differential({b} d/dt + {c})"),
        }
    }
}

/// The boundary operator `C` of a Neumann-type condition `ν₁u = Cγ₀u`.
#[derive(Clone, Debug)]
pub struct BoundaryOperator {
    pub kind: BoundaryKind,
    pub smoothness: Smoothness,
    pub label: String,
}

impl BoundaryOperator {
    /// `C = 0`
    pub fn neumann() -> Self {
        BoundaryOperator {
            kind: BoundaryKind::Differential {
                b: Expr::zero(),
                c: Expr::zero(),
            },
            smoothness: Smoothness::new(0, 1.0),
            label: "neumann".into(),
        }
    }

    /// `C = c I`
    pub fn robin(value: Complex64) -> Self {
        BoundaryOperator {
            kind: BoundaryKind::Differential {
                b: Expr::zero(),
                c: Expr::constant(value),
            },
            smoothness: Smoothness::new(0, 1.0),
            label: format!("robin({value})"),
        }
    }

    /// `C = b ∂_t + c` with coefficients given as expressions in `x, y`.
    pub fn differential(b: &str, c: &str) -> Result<Self> {
        Ok(BoundaryOperator {
            kind: BoundaryKind::Differential {
                b: Expr::parse(b)?,
                c: Expr::parse(c)?,
            },
            smoothness: Smoothness::new(0, 1.0),
            label: format!("({b}) d/dt + ({c})"),
        })
    }

    pub fn multiplier<F>(label: &str, symbol: F) -> Self
    where
        F: Fn(i64) -> Complex64 + Send + Sync + 'static,
    {
        let p = PRINCIPAL_PROBE;
        let principal = [symbol(p) / p as f64, symbol(-p) / p as f64];
        BoundaryOperator {
            kind: BoundaryKind::Multiplier {
                symbol: Arc::new(symbol),
                principal,
            },
            smoothness: Smoothness::new(u32::MAX, 0.0),
            label: label.to_string(),
        }
    }

    /// `C = a |n|`
    pub fn abs_multiplier(a: f64) -> Self {
        Self::multiplier(&format!("{a}|n|"), move |n| c(a * n.abs() as f64, 0.0))
    }

    pub fn matrix(m: CMat, label: &str) -> Self {
        BoundaryOperator {
            kind: BoundaryKind::Matrix(m),
            smoothness: Smoothness::new(0, 0.0),
            label: label.to_string(),
        }
    }

    /// The `m × m` matrix acting on boundary samples.
    pub fn to_matrix(&self, model: &DiscreteModel) -> Result<CMat> {
        let m = model.m();
        match &self.kind {
            BoundaryKind::Matrix(x) => {
                if x.nrows() != m || x.ncols() != m {
                    return Err(Error::dim(m, x.nrows()));
                }
                Ok(x.clone())
            }
            BoundaryKind::Multiplier { symbol, .. } => Ok(multiplier_matrix(m, |n| symbol(n))),
            BoundaryKind::Differential { b, c: cc } => {
                let dt = TAU / m as f64;
                let mut out = CMat::zeros(m, m);
                for (j, fr) in model.mesh.frames.iter().enumerate() {
                    let [x, y] = fr.point;
                    let bj = b.eval(x, y);
                    out[(j, j)] += cc.eval(x, y);
                    out[(j, (j + 1) % m)] += bj / (2.0 * dt);
                    out[(j, (j + m - 1) % m)] -= bj / (2.0 * dt);
                }
                Ok(out)
            }
        }
    }

    /// Principal symbol `c⁰(x', ξ')` with `ξ'` dual to arclength.
    pub fn principal(&self, frame: &BoundaryFrame, xi: f64) -> Complex64 {
        match &self.kind {
            BoundaryKind::Matrix(_) => ZERO,
            BoundaryKind::Multiplier { principal, .. } => {
                let k = if xi >= 0.0 { principal[0] } else { principal[1] };
                k * (frame.speed * xi.abs())
            }
            BoundaryKind::Differential { b, .. } => {
                let [x, y] = frame.point;
                c(0.0, 1.0) * b.eval(x, y) * (frame.speed * xi)
            }
        }
    }
}

/// `P^λ = ν₁ K^λ` as an `m × m` matrix.
#[derive(Clone, Debug)]
pub struct DtNMap {
    pub lambda: Complex64,
    pub matrix: CMat,
    pub primed: bool,
    pub mesh_id: String,
}

impl DtNMap {
    /// Relative mismatch between `matrix·φ` and the conormal data of the
    /// Poisson extension of `φ`, over the columns of `phi`.
    pub fn residual(&self, model: &DiscreteModel, phi: &CMat) -> Result<f64> {
        let k = if self.primed {
            poisson_primed(model, self.lambda)?
        } else {
            poisson(model, self.lambda)?
        };
        let (d_i, d_b) = if self.primed {
            (&model.dp_i, &model.dp_b)
        } else {
            (&model.d_i, &model.d_b)
        };
        let nu = d_i.mul(&(&k.matrix * phi)) + d_b.mul(phi);
        let r = &self.matrix * phi - &nu;
        Ok(frob(&r) / frob(&nu).max(f64::MIN_POSITIVE))
    }
}

/// `P^λ = D_I K^λ + D_B`
pub fn dtn(model: &DiscreteModel, lambda: Complex64) -> Result<DtNMap> {
    let k = poisson(model, lambda)?;
    Ok(DtNMap {
        lambda,
        matrix: model.d_i.mul(&k.matrix) + model.d_b.to_dense(),
        primed: false,
        mesh_id: model.mesh.id(),
    })
}

/// `P'^λ = D'_I K'^λ + D'_B`
pub fn dtn_primed(model: &DiscreteModel, lambda: Complex64) -> Result<DtNMap> {
    let k = poisson_primed(model, lambda)?;
    Ok(DtNMap {
        lambda,
        matrix: model.dp_i.mul(&k.matrix) + model.dp_b.to_dense(),
        primed: true,
        mesh_id: model.mesh.id(),
    })
}

/// `P^λ_{γ₀, ν₁ - Cγ₀}`: the trace `ν₁ - Cγ₀` applied to Poisson
/// extensions. Equals `P^λ - C` by the notation identity.
pub fn dtn_modified(model: &DiscreteModel, lambda: Complex64, cm: &CMat) -> Result<CMat> {
    let k = poisson(model, lambda)?;
    let m = model.m();
    let mut out = CMat::zeros(m, m);
    for j in 0..m {
        let phi = CMat::from_fn(m, 1, |i, _| if i == j { c(1.0, 0.0) } else { ZERO });
        let ui = &k.matrix * &phi;
        let v = model.d_i.mul(&ui) + model.d_b.mul(&phi) - cm * &phi;
        out.col_mut(j).copy_from(v.col(0));
    }
    Ok(out)
}

/// `s₀ · i τ⁺` where `τ⁺` is the root with positive imaginary part of
/// `a⁰(ξ' t + τ n) - λ = 0` (`n` the interior normal, `t` the tangent).
pub fn dtn_principal_symbol(
    op: &EllipticOperatorSpec,
    frame: &BoundaryFrame,
    xi: f64,
    lambda: Complex64,
) -> Result<Complex64> {
    if xi == 0.0 && lambda == ZERO {
        return Err(Error::Precondition("(ξ', λ) = (0, 0)".into()));
    }
    let [x, y] = frame.point;
    let a = op.principal(x, y);
    let n = [c(frame.interior_normal[0], 0.0), c(frame.interior_normal[1], 0.0)];
    let t = [c(frame.tangent[0], 0.0), c(frame.tangent[1], 0.0)];
    let form = |u: [Complex64; 2], v: [Complex64; 2]| {
        let mut s = ZERO;
        for p in 0..2 {
            for q in 0..2 {
                s += u[p] * a[p][q] * v[q];
            }
        }
        s
    };
    let s0 = form(n, n);
    let q2 = s0;
    let q1 = (form(t, n) + form(n, t)) * xi;
    let q0 = form(t, t) * (xi * xi) - lambda;
    let disc = (q1 * q1 - q2 * q0 * 4.0).sqrt();
    let r1 = (-q1 + disc) / (q2 * 2.0);
    let r2 = (-q1 - disc) / (q2 * 2.0);
    let tol = 1e-14 * (r1.norm() + r2.norm());
    let tau = match (r1.im > tol, r2.im > tol) {
        (true, false) if r2.im < -tol => r1,
        (false, true) if r1.im < -tol => r2,
        _ => {
            return Err(Error::Ellipticity(format!(
                "no root separation at ξ' = {xi}, λ = {lambda}: roots {r1}, {r2}"
            )))
        }
    };
    Ok(s0 * c(0.0, 1.0) * tau)
}

#[derive(Clone, Debug)]
pub struct EllipticityReport {
    pub flag: bool,
    pub margin: f64,
    /// `(frame index, ξ', μ)` where the margin is attained.
    pub worst: (usize, f64, f64),
}

/// Minimum over frames and unit vectors `(ξ', μ)` (the symbols are
/// homogeneous of degree one, so the unit circle covers `ξ'² + μ² ≥ 1`) of
/// `|c⁰ - p^{λ,0}| / (ξ'² + μ²)^{1/2}` with `λ = -μ² e^{iθ}`.
pub fn param_ellipticity_check(
    op: &EllipticOperatorSpec,
    cop: &BoundaryOperator,
    theta: f64,
    frames: &[BoundaryFrame],
    samples: usize,
) -> EllipticityReport {
    let samples = samples.max(8);
    let rot = Complex64::from_polar(1.0, theta);
    let ratio = |fr: &BoundaryFrame, phi: f64| -> f64 {
        let (xi, mu) = (phi.cos(), phi.sin());
        let lambda = -rot * (mu * mu);
        match dtn_principal_symbol(op, fr, xi, lambda) {
            Ok(p) => (cop.principal(fr, xi) - p).norm(),
            Err(_) => 0.0,
        }
    };
    let mut best = (f64::INFINITY, (0, 1.0, 0.0));
    for (k, fr) in frames.iter().enumerate() {
        let h = PI / samples as f64;
        let vals: Vec<f64> = (0..=samples).map(|i| ratio(fr, i as f64 * h)).collect();
        for i in 0..=samples {
            let mut phi = i as f64 * h;
            let mut v = vals[i];
            let left = i == 0 || vals[i - 1] >= vals[i];
            let right = i == samples || vals[i + 1] >= vals[i];
            if left && right {
                let lo = (phi - h).max(0.0);
                let hi = (phi + h).min(PI);
                let (p, pv) = golden_min(|s| ratio(fr, s), lo, hi, 1e-13);
                if pv < v {
                    phi = p;
                    v = pv;
                }
            }
            if v < best.0 {
                best = (v, (k, phi.cos(), phi.sin()));
            }
        }
    }
    EllipticityReport {
        flag: best.0 > 1e-3,
        margin: best.0,
        worst: best.1,
    }
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= tol * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Realization of `ν₁u = Cγ₀u`: `u_B = (C - D_B)^{-1} D_I u_I`.
pub fn neumann_realization(model: &DiscreteModel, cop: &BoundaryOperator) -> Result<Realization> {
    let cm = cop.to_matrix(model)?;
    neumann_realization_matrix(model, cm, &cop.label)
}

pub fn neumann_realization_matrix(model: &DiscreteModel, cm: CMat, label: &str) -> Result<Realization> {
    let block = &cm - model.d_b.to_dense();
    let y = inverse(&block, "C - D_B").map_err(|_| {
        Error::Degenerate(format!(
            "boundary condition '{label}' is degenerate at this resolution: C - D_B is singular"
        ))
    })?;
    Ok(Realization::new(
        RealizationKind::NeumannType { c: cm },
        false,
        y,
        label,
    ))
}

/// `M_L(λ) = -(C - P^λ)^{-1}` with its inversion residual.
#[derive(Clone, Debug)]
pub struct MReport {
    pub lambda: Complex64,
    pub m_matrix: CMat,
    /// `‖M (C - P^λ) + I‖_F / √m`
    pub residual: f64,
    /// Condition number of `C - P^λ`.
    pub cond: f64,
}

/// `L^λ = C - P^λ`
pub fn l_lambda(model: &DiscreteModel, cm: &CMat, lambda: Complex64) -> Result<CMat> {
    Ok(cm - dtn(model, lambda)?.matrix)
}

pub fn m_function(model: &DiscreteModel, cop: &BoundaryOperator, lambda: Complex64) -> Result<MReport> {
    let cm = cop.to_matrix(model)?;
    m_function_matrix(model, &cm, lambda)
}

pub fn m_function_matrix(model: &DiscreteModel, cm: &CMat, lambda: Complex64) -> Result<MReport> {
    let l = l_lambda(model, cm, lambda)?;
    m_from_l(&l, lambda)
}

pub fn m_from_l(l: &CMat, lambda: Complex64) -> Result<MReport> {
    let k = cond(l);
    let inv = inverse(l, "C - P^λ").map_err(|_| Error::InSpectrum {
        lambda,
        detail: format!("C - P^λ is singular (condition {k:.3e}): λ is a spectrum candidate"),
    })?;
    if !(k < 1e14) {
        return Err(Error::InSpectrum {
            lambda,
            detail: format!("C - P^λ condition {k:.3e}: λ is a spectrum candidate"),
        });
    }
    let m = -inv;
    let r = &m * l + eye(l.nrows());
    Ok(MReport {
        lambda,
        residual: frob(&r) / (l.nrows() as f64).sqrt(),
        m_matrix: m,
        cond: k,
    })
}

/// `(Ã - λ)^{-1} F` against `(A_γ - λ)^{-1} F - K^λ M (K'^λ̄)^* F`.
#[derive(Clone, Debug)]
pub struct KreinReport {
    pub lambda: Complex64,
    /// `‖LHS - RHS‖_F / ‖LHS‖_F` over the probe block.
    pub residual: f64,
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    /// Condition number of the boundary operator inverted for `M`.
    pub cond_boundary: f64,
    /// `‖A_II - λ‖ / σ_min` estimate of the Dirichlet block.
    pub cond_dirichlet: f64,
    pub probes: usize,
    pub mesh_id: String,
}

/// `(K'^λ̄)^* F = W_B^{-1} K'^H W_I F`
pub fn poisson_star_apply(model: &DiscreteModel, lambda: Complex64, f: &CMat) -> Result<CMat> {
    let kp = poisson_primed(model, lambda.conj())?;
    Ok(&poisson_star(model, &kp) * f)
}

pub fn krein_verify(model: &DiscreteModel, cop: &BoundaryOperator, lambda: Complex64) -> Result<KreinReport> {
    let r = neumann_realization(model, cop)?;
    let cm = cop.to_matrix(model)?;
    let mr = m_function_matrix(model, &cm, lambda)?;
    let k = poisson(model, lambda)?;
    let f = probe_block(model.n(), PROBES, 0x6b72_6569);
    let lhs = r.resolvent(model, lambda, &f)?;
    let tail = &k.matrix * &(&mr.m_matrix * &poisson_star_apply(model, lambda, &f)?);
    let rhs = model.resolvent(lambda, &f)? - tail;
    Ok(krein_report(model, lambda, &lhs, &rhs, mr.cond))
}

pub(crate) fn krein_report(
    model: &DiscreteModel,
    lambda: Complex64,
    lhs: &CMat,
    rhs: &CMat,
    cond_boundary: f64,
) -> KreinReport {
    let lhs_norm = frob(lhs);
    let cond_dirichlet = model
        .dirichlet_lu(lambda)
        .map(|lu| lu.norm / lu.sigma_min_estimate)
        .unwrap_or(f64::INFINITY);
    KreinReport {
        lambda,
        residual: frob(&(lhs - rhs)) / lhs_norm.max(f64::MIN_POSITIVE),
        lhs_norm,
        rhs_norm: frob(rhs),
        cond_boundary,
        cond_dirichlet,
        probes: lhs.ncols(),
        mesh_id: model.mesh.id(),
    }
}

/// `W^{1/2} X W^{-1/2}`
fn balanced(x: &CMat, w: &[f64]) -> CMat {
    let s: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let inv: Vec<f64> = s.iter().map(|v| 1.0 / v).collect();
    scale_cols(&scale_rows(&s, x), &inv)
}

/// Basis of the numerical kernel of the square `x` for the weight `w`
/// (singular values below `rel_tol · σ_max` of the balanced matrix).
pub fn weighted_kernel(x: &CMat, w: &[f64], rel_tol: f64) -> Result<CMat> {
    let ns = crate::linalg::null_space(&balanced(x, w), rel_tol)?;
    let inv: Vec<f64> = w.iter().map(|v| 1.0 / v.sqrt()).collect();
    Ok(scale_rows(&inv, &ns))
}

/// Numerical kernel of `Ã - λ` from block inverse iteration at a nearby
/// shift and a Rayleigh-Ritz step. Ritz vectors with weighted residual below
/// `rel_tol · ‖A_II‖_∞` are kept.
pub fn realization_kernel(
    model: &DiscreteModel,
    r: &Realization,
    lambda: Complex64,
    block: usize,
    rel_tol: f64,
) -> Result<CMat> {
    let n = model.n();
    let w = &model.w_i;
    let shift = lambda + c(1e-4 * lambda.norm().max(1.0), 0.0);
    let lu = r.bordered_lu(model, shift)?;
    let mut q = orthonormal_range(&probe_block(n, block, 0x6b65_726e), w, 1e-14)?;
    for _ in 0..4 {
        let z = crate::realization::solve_bordered(&lu, model, &q);
        q = orthonormal_range(&z, w, 1e-14)?;
    }
    let aq = r.apply(model, &q) - crate::linalg::scale(&q, lambda);
    let small = gram(&aq, w, &aq);
    // right singular vectors of (Ã - λ)Q in the weighted norm
    let eig = small
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Decomposition(format!("eigen: {e:?}")))?;
    let vals = eig.S().column_vector();
    let vecs = eig.U();
    let tol = rel_tol * model.a_ii.norm_inf();
    let keep: Vec<usize> = (0..vals.nrows()).filter(|&i| vals[i].re.max(0.0).sqrt() <= tol).collect();
    let coeff = CMat::from_fn(q.ncols(), keep.len(), |i, j| vecs[(i, keep[j])]);
    Ok(&q * &coeff)
}

#[derive(Clone, Debug)]
pub struct KernelRangeReport {
    pub lambda: Complex64,
    pub dim_ker_l: usize,
    pub dim_ker_a: usize,
    /// Largest principal angle between `K^λ ker L^λ` and `ker(Ã - λ)`.
    pub kernel_angle: f64,
    pub dim_coker_l: usize,
    pub dim_coker_a: usize,
    /// Largest principal angle between `K'^λ̄ ker (L^λ)^*` and
    /// `H ⊖ ran(Ã - λ) = ker(Ã^* - λ̄)`.
    pub range_angle: f64,
    /// `rank(Ã - λ) - (N - m) - rank L^λ`, zero when the range relation holds
    /// dimensionally.
    pub rank_defect: i64,
}

pub fn kernel_range_check(
    model: &DiscreteModel,
    cop: &BoundaryOperator,
    lambda: Complex64,
) -> Result<KernelRangeReport> {
    let cm = cop.to_matrix(model)?;
    let r = neumann_realization_matrix(model, cm.clone(), &cop.label)?;
    let l = l_lambda(model, &cm, lambda)?;
    let tol = 1e-8;
    let ker_l = weighted_kernel(&l, &model.w_b, tol)?;
    let k = poisson(model, lambda)?;
    let from_l = &k.matrix * &ker_l;
    let block = 8;
    let ker_a = realization_kernel(model, &r, lambda, block, tol)?;
    let kernel_angle = max_principal_angle(&from_l, &ker_a, &model.w_i)?;

    let ls = weighted_star(&l, &model.w_b);
    let coker_l = weighted_kernel(&ls, &model.w_b, tol)?;
    let kp = poisson_primed(model, lambda.conj())?;
    let from_ls = &kp.matrix * &coker_l;
    let rs = r.adjoint(model);
    let coker_a = realization_kernel(model, &rs, lambda.conj(), block, tol)?;
    let range_angle = max_principal_angle(&from_ls, &coker_a, &model.w_i)?;

    let n = model.n() as i64;
    let m = model.m() as i64;
    let rank_a = n - ker_a.ncols() as i64;
    let rank_l = m - ker_l.ncols() as i64;
    Ok(KernelRangeReport {
        lambda,
        dim_ker_l: ker_l.ncols(),
        dim_ker_a: ker_a.ncols(),
        kernel_angle,
        dim_coker_l: coker_l.ncols(),
        dim_coker_a: coker_a.ncols(),
        range_angle,
        rank_defect: rank_a - (n - m) - rank_l,
    })
}

#[derive(Clone, Debug)]
pub struct ScanPoint {
    pub lambda: Complex64,
    /// Smallest singular value of the balanced `C - P^λ`; `None` where the
    /// Dirichlet block is singular.
    pub sigma_min: Option<f64>,
    pub sigma_max: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefineMethod {
    GoldenSection,
    ShiftInvert,
}

#[derive(Clone, Debug)]
pub struct Candidate {
    pub lambda: Complex64,
    /// `σ_min / σ_max` of `C - P^λ` at the refined point; `None` when the
    /// point is too close to the Dirichlet spectrum to evaluate.
    pub relative_sigma: Option<f64>,
    pub method: RefineMethod,
}

#[derive(Clone, Debug)]
pub struct ScanReport {
    pub points: Vec<ScanPoint>,
    pub candidates: Vec<Candidate>,
}

fn sigma_pair(model: &DiscreteModel, cm: &CMat, lambda: Complex64) -> Option<(f64, f64)> {
    let l = l_lambda(model, cm, lambda).ok()?;
    let s = singular_values(&balanced(&l, &model.w_b)).ok()?;
    Some((*s.last()?, s[0]))
}

/// Candidate eigenvalues of the Neumann-type realization along a path of
/// λ values: local minima of `σ_min(C - P^λ)` refined by golden-section
/// search. When refinement stalls (typically next to a Dirichlet
/// eigenvalue, as for large Robin coefficients) the eigenvalue of `Ã`
/// nearest the bracket is computed by shift-invert and kept if it lies in
/// the bracket.
pub fn spectrum_scan(model: &DiscreteModel, cop: &BoundaryOperator, grid: &[Complex64]) -> Result<ScanReport> {
    let cm = cop.to_matrix(model)?;
    let points: Vec<ScanPoint> = grid
        .iter()
        .map(|&lambda| {
            let s = sigma_pair(model, &cm, lambda);
            ScanPoint {
                lambda,
                sigma_min: s.map(|p| p.0),
                sigma_max: s.map(|p| p.1),
            }
        })
        .collect();
    let mut realization: Option<Realization> = None;
    let mut candidates: Vec<Candidate> = Vec::new();
    for k in 1..points.len().saturating_sub(1) {
        let (Some(a), Some(b), Some(cc)) = (
            points[k - 1].sigma_min,
            points[k].sigma_min,
            points[k + 1].sigma_min,
        ) else {
            continue;
        };
        if !(b < a && b <= cc) {
            continue;
        }
        let z0 = points[k - 1].lambda;
        let z1 = points[k + 1].lambda;
        let at = |t: f64| z0 + (z1 - z0) * t;
        let rel = |t: f64| {
            sigma_pair(model, &cm, at(t))
                .map(|(lo, hi)| lo / hi)
                .unwrap_or(f64::INFINITY)
        };
        let (t, v) = golden_min(rel, 0.0, 1.0, 1e-14);
        let mut found = None;
        if v < 1e-6 {
            found = Some(Candidate {
                lambda: at(t),
                relative_sigma: Some(v),
                method: RefineMethod::GoldenSection,
            });
        } else {
            if realization.is_none() {
                realization = Some(neumann_realization_matrix(model, cm.clone(), &cop.label)?);
            }
            let r = realization.as_ref().unwrap();
            let centre = points[k].lambda + c(1e-9 * points[k].lambda.norm().max(1.0), 0.0);
            if let Ok(eigs) = r.spectrum(model, centre, 1) {
                let e = eigs[0];
                // projection onto the bracket segment
                let d = z1 - z0;
                let s = ((e - z0) * d.conj()).re / d.norm_sqr();
                let off = (e - at(s.clamp(0.0, 1.0))).norm();
                if (0.0..=1.0).contains(&s) && off <= 1e-6 * e.norm().max(1.0) {
                    found = Some(Candidate {
                        lambda: e,
                        relative_sigma: sigma_pair(model, &cm, e)
                            .map(|(lo, hi)| lo / hi),
                        method: RefineMethod::ShiftInvert,
                    });
                }
            }
        }
        if let Some(cand) = found {
            if !candidates
                .iter()
                .any(|o| (o.lambda - cand.lambda).norm() <= 1e-8 * cand.lambda.norm().max(1.0))
            {
                candidates.push(cand);
            }
        }
    }
    Ok(ScanReport { points, candidates })
}

/// Eigenvalue of `Ã` nearest `guess`, computed by shift-invert on the
/// bordered system.
pub fn polish_eigenvalue(model: &DiscreteModel, r: &Realization, guess: Complex64) -> Result<Complex64> {
    let shift = guess + c(1e-4 * guess.norm().max(1.0), 0.0);
    Ok(r.spectrum(model, shift, 1)?[0])
}

/// `ω = 2π/m` and `J = W_B / ω`: the parameter inner product
/// `⟨a, b⟩ = ω b^H a` on boundary samples and the density relating it to
/// the boundary mass.
pub fn triplet_weights(model: &DiscreteModel) -> (f64, Vec<f64>) {
    let omega = TAU / model.m() as f64;
    (omega, model.w_b.iter().map(|w| w / omega).collect())
}

/// Fourier modes `e^{int}/√(2π)`, `|n| ≤ max_n`, orthonormal for the
/// parameter inner product.
pub fn fourier_modes(m: usize, max_n: i64) -> CMat {
    let ns: Vec<i64> = (-max_n..=max_n).collect();
    let s = 1.0 / TAU.sqrt();
    CMat::from_fn(m, ns.len(), |j, k| {
        Complex64::from_polar(s, ns[k] as f64 * TAU * j as f64 / m as f64)
    })
}

fn check_orthonormal(x: &CMat, omega: f64, what: &str) -> Result<()> {
    let g = scale(&adjoint(x), omega) * x;
    let r = frob(&(&g - eye(x.ncols())));
    if r > 1e-10 {
        return Err(Error::Precondition(format!(
            "{what} basis is not orthonormal (residual {r:.3e})"
        )));
    }
    Ok(())
}

fn scale(x: &CMat, s: f64) -> CMat {
    crate::linalg::scale(x, c(s, 0.0))
}

/// Pieces of the subspace condition `Γ₀u ∈ X₁`, `pr_{Y₁}(Γ₁u - L₁Γ₀u) = 0`.
struct SubspaceData {
    omega: f64,
    /// `Λ_{1/2} X₁`
    lx: CMat,
    /// `ω Y₁^H Λ_{1/2} J`
    ey: CMat,
}

fn subspace_data(model: &DiscreteModel, x1: &CMat, y1: &CMat, l1: &CMat) -> Result<SubspaceData> {
    let m = model.m();
    if x1.nrows() != m || y1.nrows() != m {
        return Err(Error::dim(m, x1.nrows().min(y1.nrows())));
    }
    if x1.ncols() != y1.ncols() {
        return Err(Error::dim(x1.ncols(), y1.ncols()));
    }
    if l1.nrows() != y1.ncols() || l1.ncols() != x1.ncols() {
        return Err(Error::dim(x1.ncols(), l1.nrows()));
    }
    let (omega, j) = triplet_weights(model);
    check_orthonormal(x1, omega, "X₁")?;
    check_orthonormal(y1, omega, "Y₁")?;
    let half = lambda_matrix(m, 0.5);
    Ok(SubspaceData {
        omega,
        lx: &half * x1,
        ey: scale_cols(&scale(&(adjoint(y1) * &half), omega), &j),
    })
}

/// Realization for `Γ₀u ∈ X₁`, `pr_{Y₁}(Γ₁u - L₁Γ₀u) = 0`, where
/// `Γ₀ = Λ_{-1/2}γ₀` and `Γ₁ = Λ_{1/2} J (ν₁ - P⁰γ₀)`; `X₁`, `Y₁` are
/// orthonormal for the parameter inner product and `L₁` acts between their
/// coordinates. Requires `0 ∉ spec(A_II)`.
pub fn subspace_realization_only(
    model: &DiscreteModel,
    l1: &CMat,
    x1: &CMat,
    y1: &CMat,
) -> Result<Realization> {
    let sd = subspace_data(model, x1, y1, l1)?;
    let p0 = dtn(model, ZERO)?.matrix - model.d_b.to_dense();
    let f = l1 + &sd.ey * &(&p0 * &sd.lx);
    let y = if x1.ncols() == 0 {
        CMat::zeros(model.m(), model.m())
    } else {
        let finv = inverse(&f, "subspace elimination").map_err(|_| {
            Error::Degenerate("subspace condition does not eliminate boundary values".into())
        })?;
        &sd.lx * &(&finv * &sd.ey)
    };
    let _ = sd.omega;
    Ok(Realization::new(
        RealizationKind::Subspace {
            x1: x1.clone(),
            y1: y1.clone(),
            l1: l1.clone(),
        },
        false,
        y,
        "subspace",
    ))
}

/// `L₁^λ = L₁ + ω Y₁^H Λ_{1/2} J (P⁰ - P^λ) Λ_{1/2} X₁`
pub fn subspace_l_lambda(
    model: &DiscreteModel,
    l1: &CMat,
    x1: &CMat,
    y1: &CMat,
    lambda: Complex64,
) -> Result<CMat> {
    let sd = subspace_data(model, x1, y1, l1)?;
    let diff = dtn(model, ZERO)?.matrix - dtn(model, lambda)?.matrix;
    Ok(l1 + &sd.ey * &(&diff * &sd.lx))
}

/// Subspace realization together with its Kreĭn check
/// `(Ã - λ)^{-1} = R - K^λ_{X₁} M_{L₁}(λ) (K'^λ̄_{Y₁})^*`.
pub fn subspace_realization(
    model: &DiscreteModel,
    l1: &CMat,
    x1: &CMat,
    y1: &CMat,
    lambda: Complex64,
) -> Result<(Realization, KreinReport)> {
    let r = subspace_realization_only(model, l1, x1, y1)?;
    let sd = subspace_data(model, x1, y1, l1)?;
    let f = probe_block(model.n(), PROBES, 0x7375_6273);
    let lhs = r.resolvent(model, lambda, &f)?;
    let mut rhs = model.resolvent(lambda, &f)?;
    let mut cb = 1.0;
    if x1.ncols() > 0 {
        let ll = subspace_l_lambda(model, l1, x1, y1, lambda)?;
        let mr = m_from_l(&ll, lambda)?;
        cb = mr.cond;
        let k = poisson(model, lambda)?;
        let kx = &k.matrix * &sd.lx;
        let ks = &sd.ey * &poisson_star_apply(model, lambda, &f)?;
        rhs = rhs - &kx * &(&mr.m_matrix * &ks);
    }
    let rep = krein_report(model, lambda, &lhs, &rhs, cb);
    Ok((r, rep))
}
