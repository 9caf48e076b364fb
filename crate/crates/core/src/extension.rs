//! Abstract extension theory on the discrete model: the decompositions
//! `u = u_γ^λ + u_ζ^λ`, the maps `E^λ`, `F^λ`, `G^λ_{V,W}`, the
//! correspondence between realizations `Ã` and operators `T: V → W`, the
//! boundary triplet, and the abstract M-function.
//!
//! `H` is the space of interior vectors with the mass inner product
//! `⟨x, y⟩ = y^H W_I x`. The null spaces `Z = ker A_max` and
//! `Z' = ker A'_max` consist of full vectors `(K⁰φ, φ)`; as subspaces of `H`
//! they are identified with their interior parts. Subspace bases are stored
//! as full vectors whose interior parts are orthonormal in `H`.

use num_complex::Complex64;

use crate::dirichlet::{poisson, poisson_primed};
use crate::discretize::DiscreteModel;
use crate::dtn::{dtn, dtn_primed, triplet_weights};
use crate::error::{Error, Result};
use crate::linalg::{
    adjoint, c, eye, frob, gram, inverse, lstsq, numerical_rank, orthonormal_range, rows, scale,
    scale_cols, scale_rows, vstack, CMat, ZERO,
};
use crate::parameter::lambda_matrix;
use crate::realization::{Realization, RealizationKind};

/// Rank threshold relative to the largest singular value.
pub const RANK_TOL: f64 = 1e-8;

/// `T: V → W` with `V ⊆ Z`, `W ⊆ Z'` (or the primed roles when
/// `primed`, i.e. for realizations of the adjoint model).
#[derive(Clone, Debug)]
pub struct ExtensionData {
    /// Full vectors spanning `V`, `(N + m) × dim V`.
    pub v_basis: CMat,
    /// Full vectors spanning `W`, `(N + m) × dim W`.
    pub w_basis: CMat,
    /// `dim W × dim V`
    pub t_matrix: CMat,
    pub primed: bool,
}

fn interior(model: &DiscreteModel, x: &CMat) -> CMat {
    rows(x, 0, model.n())
}

fn boundary(model: &DiscreteModel, x: &CMat) -> CMat {
    rows(x, model.n(), model.m())
}

/// `λ`-harmonic full vectors with boundary values `phi`, interior parts
/// orthonormalized in `H`. Directions below the rank threshold are dropped.
pub fn harmonic_span(model: &DiscreteModel, lambda: Complex64, phi: &CMat, primed: bool) -> Result<CMat> {
    let m = model.m();
    if phi.nrows() != m {
        return Err(Error::dim(m, phi.nrows()));
    }
    if phi.ncols() == 0 {
        return Ok(CMat::zeros(model.n() + m, 0));
    }
    let k = if primed {
        poisson_primed(model, lambda)?
    } else {
        poisson(model, lambda)?
    };
    let full = vstack(&(&k.matrix * phi), phi);
    orthonormalize_interior(model, &full)
}

/// Orthonormalized basis of all of `Z_λ` (or `Z'_λ`).
fn harmonic_full(model: &DiscreteModel, lambda: Complex64, primed: bool) -> Result<CMat> {
    let k = if primed {
        poisson_primed(model, lambda)?
    } else {
        poisson(model, lambda)?
    };
    orthonormalize_interior(model, &vstack(&k.matrix, &eye(model.m())))
}

/// Recombines the columns of full vectors so that interior parts are
/// orthonormal in `H`.
pub fn orthonormalize_interior(model: &DiscreteModel, full: &CMat) -> Result<CMat> {
    let vi = interior(model, full);
    let g = gram(&vi, &model.w_i, &vi);
    let eig = g
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Decomposition(format!("eigen: {e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let top = (0..s.nrows()).map(|i| s[i].re).fold(0.0, f64::max);
    let keep: Vec<usize> = (0..s.nrows())
        .filter(|&i| s[i].re > (RANK_TOL * RANK_TOL) * top)
        .collect();
    let coeff = CMat::from_fn(full.ncols(), keep.len(), |i, j| {
        u[(i, keep[j])] / s[keep[j]].re.sqrt()
    });
    Ok(full * &coeff)
}

impl ExtensionData {
    pub fn new(model: &DiscreteModel, v_basis: CMat, w_basis: CMat, t_matrix: CMat, primed: bool) -> Result<Self> {
        let ext = ExtensionData {
            v_basis,
            w_basis,
            t_matrix,
            primed,
        };
        ext.validate(model)?;
        Ok(ext)
    }

    /// Bases built from boundary data: `V = span (K⁰φ, φ)`,
    /// `W = span (K'⁰ψ, ψ)`. `T` is given in the resulting orthonormal
    /// coordinates.
    pub fn from_boundary(model: &DiscreteModel, phi: &CMat, psi: &CMat, t_matrix: CMat) -> Result<Self> {
        let v = harmonic_span(model, ZERO, phi, false)?;
        let w = harmonic_span(model, ZERO, psi, true)?;
        Self::new(model, v, w, t_matrix, false)
    }

    pub fn dim_v(&self) -> usize {
        self.v_basis.ncols()
    }

    pub fn dim_w(&self) -> usize {
        self.w_basis.ncols()
    }

    /// Largest of the membership and orthonormality residuals.
    pub fn validate(&self, model: &DiscreteModel) -> Result<f64> {
        let nm = model.n() + model.m();
        if self.v_basis.nrows() != nm || self.w_basis.nrows() != nm {
            return Err(Error::dim(nm, self.v_basis.nrows().min(self.w_basis.nrows())));
        }
        if self.t_matrix.nrows() != self.dim_w() || self.t_matrix.ncols() != self.dim_v() {
            return Err(Error::dim(self.dim_w(), self.t_matrix.nrows()));
        }
        let mut worst = 0.0_f64;
        for (basis, primed_space) in [(&self.v_basis, self.primed), (&self.w_basis, !self.primed)] {
            if basis.ncols() == 0 {
                continue;
            }
            let (a_ii, a_ib) = if primed_space {
                (&model.ap_ii, &model.ap_ib)
            } else {
                (&model.a_ii, &model.a_ib)
            };
            let bi = interior(model, basis);
            let r = a_ii.mul(&bi) + a_ib.mul(&boundary(model, basis));
            let member = frob(&r) / (a_ii.norm_inf() * frob(basis));
            let g = gram(&bi, &model.w_i, &bi);
            let ortho = frob(&(&g - eye(basis.ncols())));
            if member > 1e-10 || ortho > 1e-10 {
                return Err(Error::Precondition(format!(
                    "basis residuals: membership {member:.3e}, orthonormality {ortho:.3e}"
                )));
            }
            worst = worst.max(member).max(ortho);
        }
        Ok(worst)
    }

    /// `T` expressed in other orthonormal bases of the same spaces.
    pub fn t_in_bases(&self, model: &DiscreteModel, v_other: &CMat, w_other: &CMat) -> CMat {
        let gv = gram(&interior(model, &self.v_basis), &model.w_i, &interior(model, v_other));
        let gw = gram(&interior(model, w_other), &model.w_i, &interior(model, &self.w_basis));
        &gw * &(&self.t_matrix * &gv)
    }
}

/// `(u_γ^λ, u_ζ^λ)` for the full vectors in `u` (columns).
pub fn decompose(model: &DiscreteModel, lambda: Complex64, u: &CMat) -> Result<(CMat, CMat)> {
    let n = model.n();
    let m = model.m();
    if u.nrows() != n + m {
        return Err(Error::dim(n + m, u.nrows()));
    }
    let ub = boundary(model, u);
    let k = poisson(model, lambda)?;
    let zeta = vstack(&(&k.matrix * &ub), &ub);
    let gamma = u - &zeta;
    Ok((gamma, zeta))
}

/// `((A_II - λ)^{-1}((A - λ)u)_I, 0)`, the other expression for `u_γ^λ`.
pub fn gamma_part(model: &DiscreteModel, lambda: Complex64, u: &CMat) -> Result<CMat> {
    let ui = interior(model, u);
    let au = model.a_ii.mul(&ui) + model.a_ib.mul(&boundary(model, u)) - scale(&ui, lambda);
    Ok(vstack(&model.resolvent(lambda, &au)?, &CMat::zeros(model.m(), u.ncols())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `E^λ = I + λ(A_γ - λ)^{-1}`
    Forward,
    /// `F^λ = I - λ A_γ^{-1}`
    Inverse,
}

pub fn e_lambda(model: &DiscreteModel, lambda: Complex64, dir: Direction, u: &CMat) -> Result<CMat> {
    e_lambda_on(model, lambda, dir, u, false)
}

/// `E'^λ`, `F'^λ` on the primed model.
pub fn e_lambda_primed(model: &DiscreteModel, lambda: Complex64, dir: Direction, u: &CMat) -> Result<CMat> {
    e_lambda_on(model, lambda, dir, u, true)
}

fn e_lambda_on(model: &DiscreteModel, lambda: Complex64, dir: Direction, u: &CMat, primed: bool) -> Result<CMat> {
    if u.nrows() != model.n() {
        return Err(Error::dim(model.n(), u.nrows()));
    }
    if lambda == ZERO {
        return Ok(u.clone());
    }
    let (shift, factor) = match dir {
        Direction::Forward => (lambda, lambda),
        Direction::Inverse => (ZERO, -lambda),
    };
    let r = if primed {
        model.resolvent_primed(shift, u)?
    } else {
        model.resolvent(shift, u)?
    };
    Ok(u + scale(&r, factor))
}

/// `G^λ_{V,W} = -pr_W λ E^λ i_V` in the stored bases.
pub fn g_lambda(ext: &ExtensionData, model: &DiscreteModel, lambda: Complex64) -> Result<CMat> {
    if lambda == ZERO {
        return Ok(CMat::zeros(ext.dim_w(), ext.dim_v()));
    }
    let ev = e_lambda_on(model, lambda, Direction::Forward, &interior(model, &ext.v_basis), ext.primed)?;
    Ok(scale(&gram(&interior(model, &ext.w_basis), &model.w_i, &ev), -lambda))
}

/// Realization defined by `T u_ζ = pr_W(A u)`, `u_ζ ∈ V`. Requires
/// `dim V = dim W` and an invertible elimination block.
pub fn realization_from_t(ext: &ExtensionData, model: &DiscreteModel) -> Result<Realization> {
    if ext.dim_v() != ext.dim_w() {
        return Err(Error::Degenerate(format!(
            "dim V = {} differs from dim W = {}: the domain is not a graph over interior values",
            ext.dim_v(),
            ext.dim_w()
        )));
    }
    let m = model.m();
    let k = ext.dim_v();
    let d_i = if ext.primed { &model.dp_i } else { &model.d_i };
    let (phi, psi) = (boundary(model, &ext.v_basis), boundary(model, &ext.w_basis));
    let y = if k == 0 {
        CMat::zeros(m, m)
    } else {
        // pr_W A_II = ψ^H W_B D_I on interior vectors
        let psi_wb = adjoint(&scale_rows(&model.w_b, &psi));
        let q = &ext.t_matrix + &psi_wb * &d_i.mul(&interior(model, &ext.v_basis));
        let qinv = inverse(&q, "T + pr_W A i_V").map_err(|_| {
            Error::Degenerate("elimination block T + pr_W A i_V is rank deficient".into())
        })?;
        &phi * &(&qinv * &psi_wb)
    };
    Ok(Realization::new(
        RealizationKind::Abstract {
            t: ext.t_matrix.clone(),
            v: ext.v_basis.clone(),
            w: ext.w_basis.clone(),
        },
        ext.primed,
        y,
        "abstract",
    ))
}

/// Orthonormal (Euclidean) basis of `ran Y`, rank-thresholded.
fn range_of(y: &CMat) -> Result<CMat> {
    orthonormal_range(y, &vec![1.0; y.nrows()], RANK_TOL)
}

/// `T` for the realization at spectral parameter λ: `V_λ = pr_ζ^λ D(Ã)`,
/// `W_λ̄ = pr_ζ'^λ̄ D(Ã*)` and `T^λ u_ζ^λ = pr_{W_λ̄}((A - λ)u)`. At λ = 0 this
/// is the operator of the correspondence.
pub fn t_from_realization_at(r: &Realization, model: &DiscreteModel, lambda: Complex64) -> Result<ExtensionData> {
    let full_rank = crate::linalg::Lu::new(&r.y, 1e-12).is_ok();
    let (v, w) = if full_rank {
        // both projections are onto the whole null spaces
        (
            harmonic_full(model, lambda, r.primed)?,
            harmonic_full(model, lambda.conj(), !r.primed)?,
        )
    } else {
        let rs = r.adjoint(model);
        (
            harmonic_span(model, lambda, &range_of(&r.y)?, r.primed)?,
            harmonic_span(model, lambda.conj(), &range_of(&rs.y)?, !r.primed)?,
        )
    };
    let k = v.ncols();
    if k != w.ncols() {
        return Err(Error::Degenerate(format!(
            "projections have dimensions {} and {}",
            k,
            w.ncols()
        )));
    }
    if k == 0 {
        return Ok(ExtensionData {
            v_basis: v,
            w_basis: w,
            t_matrix: CMat::zeros(0, 0),
            primed: r.primed,
        });
    }
    let d_i = if r.primed { &model.dp_i } else { &model.d_i };
    // coordinates of u_ζ^λ: a = V_B^+ Y D_I u_I, i.e. a = Cm u_I
    let vb = boundary(model, &v);
    let vb_pinv = if vb.nrows() == vb.ncols() {
        inverse(&vb, "boundary coordinates")?
    } else {
        lstsq(&vb, &eye(model.m()))?
    };
    let yt = &vb_pinv * &r.y;
    let cm = adjoint(&d_i.adjoint().mul(&adjoint(&yt)));
    // Dm = W_I^H W_I (Ã - λ), formed through Ã^H
    let wi = scale_rows(&model.w_i, &interior(model, &w));
    let dm = adjoint(&(r.apply_conj_transpose(model, &wi) - scale(&wi, lambda.conj())));
    let cct = &cm * &adjoint(&cm);
    let t = &(&dm * &adjoint(&cm)) * &inverse(&cct, "coordinate Gram matrix")?;
    Ok(ExtensionData {
        v_basis: v,
        w_basis: w,
        t_matrix: t,
        primed: r.primed,
    })
}

pub fn t_from_realization(r: &Realization, model: &DiscreteModel) -> Result<ExtensionData> {
    t_from_realization_at(r, model, ZERO)
}

/// Relative residual of the defining equation `T a(u) = pr_W((A - λ)u)` over
/// the interior vectors in `probe`.
pub fn defining_residual(
    ext: &ExtensionData,
    r: &Realization,
    model: &DiscreteModel,
    lambda: Complex64,
    probe: &CMat,
) -> Result<f64> {
    let u = r.lift(model, probe);
    let (_, zeta) = decompose_on(model, lambda, &u, r.primed)?;
    let a = gram(&interior(model, &ext.v_basis), &model.w_i, &interior(model, &zeta));
    let au = r.apply(model, probe) - scale(probe, lambda);
    let rhs = gram(&interior(model, &ext.w_basis), &model.w_i, &au);
    let lhs = &ext.t_matrix * &a;
    Ok(frob(&(&lhs - &rhs)) / frob(&rhs).max(f64::MIN_POSITIVE))
}

fn decompose_on(model: &DiscreteModel, lambda: Complex64, u: &CMat, primed: bool) -> Result<(CMat, CMat)> {
    if !primed {
        return decompose(model, lambda, u);
    }
    let ub = boundary(model, u);
    let k = poisson_primed(model, lambda)?;
    let zeta = vstack(&(&k.matrix * &ub), &ub);
    Ok((u - &zeta, zeta))
}

/// Everything the λ-dependent identities share: `T^λ`, the interior parts
/// of `E^λ i_V` and `E'^λ̄ i_W`, and `M_Ã(λ)`.
#[derive(Clone, Debug)]
pub struct LambdaPieces {
    pub lambda: Complex64,
    pub t_lambda: ExtensionData,
    pub ev: CMat,
    pub ew: CMat,
    pub m_abs: CMat,
}

pub fn lambda_pieces(r: &Realization, ext: &ExtensionData, model: &DiscreteModel, lambda: Complex64) -> Result<LambdaPieces> {
    lambda_pieces_with(r, ext, &m_base(ext, model)?, model, lambda)
}

pub fn lambda_pieces_with(
    r: &Realization,
    ext: &ExtensionData,
    base: &MBase,
    model: &DiscreteModel,
    lambda: Complex64,
) -> Result<LambdaPieces> {
    let t_lambda = t_from_realization_at(r, model, lambda)?;
    let ev = e_lambda_on(model, lambda, Direction::Forward, &interior(model, &ext.v_basis), ext.primed)?;
    let ew = e_lambda_on(model, lambda.conj(), Direction::Forward, &interior(model, &ext.w_basis), !ext.primed)?;
    let m_abs = m_function_abstract_with(r, base, model, lambda)?;
    Ok(LambdaPieces {
        lambda,
        t_lambda,
        ev,
        ew,
        m_abs,
    })
}

fn g_from(ext: &ExtensionData, model: &DiscreteModel, p: &LambdaPieces) -> CMat {
    scale(&gram(&interior(model, &ext.w_basis), &model.w_i, &p.ev), -p.lambda)
}

/// The two sides of `(E'^λ̄_W)^* T^λ E^λ_V = T + G^λ_{V,W}`, with `T^λ`
/// from [`t_from_realization_at`].
pub fn diagram_sides(ext: &ExtensionData, r: &Realization, model: &DiscreteModel, lambda: Complex64) -> Result<(CMat, CMat)> {
    Ok(diagram_sides_with(ext, model, &lambda_pieces(r, ext, model, lambda)?))
}

pub fn diagram_sides_with(ext: &ExtensionData, model: &DiscreteModel, p: &LambdaPieces) -> (CMat, CMat) {
    let tl = &p.t_lambda;
    // coordinates of E^λ_V and E'^λ̄_W in the orthonormal bases of V_λ, W_λ̄
    let ev_c = gram(&interior(model, &tl.v_basis), &model.w_i, &p.ev);
    let ew_c = gram(&interior(model, &tl.w_basis), &model.w_i, &p.ew);
    let lhs = &adjoint(&ew_c) * &(&tl.t_matrix * &ev_c);
    let rhs = &ext.t_matrix + g_from(ext, model, p);
    (lhs, rhs)
}

/// The λ-independent parts of [`m_function_abstract`]: the interior part
/// of `W`, `A_γ^{-1} i_W`, and `pr_V` composed with the Poisson operator
/// `K⁰`.
#[derive(Clone, Debug)]
pub struct MBase {
    wi: CMat,
    x0: CMat,
    g0: CMat,
}

pub fn m_base(ext: &ExtensionData, model: &DiscreteModel) -> Result<MBase> {
    if ext.primed {
        return Err(Error::Precondition("abstract M-function of a primed realization".into()));
    }
    let wi = interior(model, &ext.w_basis);
    let x0 = model.resolvent(ZERO, &wi)?;
    let k0 = poisson(model, ZERO)?;
    let g0 = gram(&interior(model, &ext.v_basis), &model.w_i, &k0.matrix);
    Ok(MBase { wi, x0, g0 })
}

/// `M_Ã(λ) = pr_ζ(I - (Ã - λ)^{-1}(A_max - λ)) A_γ^{-1} i_W` in the bases
/// of `ext` (maps `W`-coordinates to `V`-coordinates).
pub fn m_function_abstract(r: &Realization, ext: &ExtensionData, model: &DiscreteModel, lambda: Complex64) -> Result<CMat> {
    m_function_abstract_with(r, &m_base(ext, model)?, model, lambda)
}

pub fn m_function_abstract_with(r: &Realization, base: &MBase, model: &DiscreteModel, lambda: Complex64) -> Result<CMat> {
    if r.primed {
        return Err(Error::Precondition("abstract M-function of a primed realization".into()));
    }
    let rhs = &base.wi - scale(&base.x0, lambda);
    let y = r.resolvent(model, lambda, &rhs)?;
    // z = (x, 0) - (y, Y D_I y); pr_ζ z = (K⁰ z_B, z_B) with z_B = -Y D_I y
    let yb = &r.y * &model.d_i.mul(&y);
    Ok(scale(&(&base.g0 * &yb), c(-1.0, 0.0)))
}

/// Relative residual of `M_Ã(λ) = -(T + G^λ)^{-1}`.
pub fn m_abstract_residual(r: &Realization, ext: &ExtensionData, model: &DiscreteModel, lambda: Complex64) -> Result<f64> {
    m_abstract_residual_with(ext, model, &lambda_pieces(r, ext, model, lambda)?)
}

pub fn m_abstract_residual_with(ext: &ExtensionData, model: &DiscreteModel, p: &LambdaPieces) -> Result<f64> {
    let tg = &ext.t_matrix + g_from(ext, model, p);
    let rhs = -inverse(&tg, "T + G^λ")?;
    Ok(frob(&(&p.m_abs - &rhs)) / frob(&rhs).max(f64::MIN_POSITIVE))
}

/// Both sides of `(Ã - λ)^{-1} = (A_γ - λ)^{-1} - E^λ_V M (E'^λ̄_W)^* pr_W`
/// applied to `f`.
pub fn krein_abstract(r: &Realization, ext: &ExtensionData, model: &DiscreteModel, lambda: Complex64, f: &CMat) -> Result<(CMat, CMat)> {
    krein_abstract_with(r, model, &lambda_pieces(r, ext, model, lambda)?, f)
}

pub fn krein_abstract_with(r: &Realization, model: &DiscreteModel, p: &LambdaPieces, f: &CMat) -> Result<(CMat, CMat)> {
    let lhs = r.resolvent(model, p.lambda, f)?;
    let rhs = model.resolvent(p.lambda, f)? - &p.ev * &(&p.m_abs * &gram(&p.ew, &model.w_i, f));
    Ok((lhs, rhs))
}

/// Both sides of `(Ã - λ)^{-1} = (A_γ - λ)^{-1} + i_{V_λ}(T^λ)^{-1} pr_{W_λ̄}`
/// applied to `f`, with `T^λ` from [`t_from_realization_at`].
pub fn krein_t_lambda(r: &Realization, model: &DiscreteModel, lambda: Complex64, f: &CMat) -> Result<(CMat, CMat)> {
    krein_t_lambda_with(r, model, lambda, &t_from_realization_at(r, model, lambda)?, f)
}

pub fn krein_t_lambda_with(r: &Realization, model: &DiscreteModel, lambda: Complex64, tl: &ExtensionData, f: &CMat) -> Result<(CMat, CMat)> {
    let lhs = r.resolvent(model, lambda, f)?;
    let mut rhs = if r.primed {
        model.resolvent_primed(lambda, f)?
    } else {
        model.resolvent(lambda, f)?
    };
    if tl.dim_v() > 0 {
        let tinv = inverse(&tl.t_matrix, "T^λ")?;
        let coeff = gram(&interior(model, &tl.w_basis), &model.w_i, f);
        rhs = rhs + &interior(model, &tl.v_basis) * &(&tinv * &coeff);
    }
    Ok((lhs, rhs))
}

/// Integer ranks for `ker Ã = ker T` and `ran Ã = ran T + (H ⊖ W)`:
/// returns `(dim ker Ã, dim ker T, rank Ã, rank T + N - dim W)`.
pub fn rank_identities(ext: &ExtensionData, r: &Realization, model: &DiscreteModel) -> Result<[usize; 4]> {
    let a = r.eliminated(model)?;
    let s: Vec<f64> = model.w_i.iter().map(|v| v.sqrt()).collect();
    let inv: Vec<f64> = s.iter().map(|v| 1.0 / v).collect();
    let balanced = scale_cols(&scale_rows(&s, &a), &inv);
    let rank_a = numerical_rank(&balanced, RANK_TOL);
    let rank_t = if ext.t_matrix.nrows() == 0 {
        0
    } else {
        numerical_rank(&ext.t_matrix, RANK_TOL)
    };
    let n = model.n();
    Ok([n - rank_a, ext.dim_v() - rank_t, rank_a, rank_t + n - ext.dim_w()])
}

/// Boundary triplet matrices acting on full vectors.
#[derive(Clone, Debug)]
pub struct BoundaryTriplet {
    pub gamma1: CMat,
    pub gamma0: CMat,
    pub gamma1_primed: CMat,
    pub gamma0_primed: CMat,
    /// Weight of the parameter inner product `⟨a, b⟩ = ω b^H a`.
    pub omega: f64,
}

/// `Γ₀ = Λ_{-1/2} γ₀`, `Γ₁ = Λ_{1/2} J (ν₁ - P⁰ γ₀)`, and the primed pair.
pub fn boundary_triplet(model: &DiscreteModel) -> Result<BoundaryTriplet> {
    let m = model.m();
    let (omega, j) = triplet_weights(model);
    let half = lambda_matrix(m, 0.5);
    let mhalf = lambda_matrix(m, -0.5);
    let g0 = crate::linalg::hstack(&CMat::zeros(m, model.n()), &mhalf);
    let make = |primed: bool| -> Result<CMat> {
        let (d_i, k) = if primed {
            (&model.dp_i, poisson_primed(model, ZERO)?)
        } else {
            (&model.d_i, poisson(model, ZERO)?)
        };
        let di = d_i.to_dense();
        let gam = crate::linalg::hstack(&di, &scale(&(&di * &k.matrix), c(-1.0, 0.0)));
        Ok(&half * &scale_rows(&j, &gam))
    };
    Ok(BoundaryTriplet {
        gamma1: make(false)?,
        gamma0: g0.clone(),
        gamma1_primed: make(true)?,
        gamma0_primed: g0,
        omega,
    })
}

impl BoundaryTriplet {
    /// `|⟨Au, v⟩ - ⟨u, A'v⟩ - ⟨Γ₁u, Γ'₀v⟩ + ⟨Γ₀u, Γ'₁v⟩|` per column pair,
    /// relative to the sum of the four term magnitudes.
    pub fn green_defect(&self, model: &DiscreteModel, u: &CMat, v: &CMat) -> Vec<f64> {
        let (ui, ub) = (interior(model, u), boundary(model, u));
        let (vi, vb) = (interior(model, v), boundary(model, v));
        let au = model.a_ii.mul(&ui) + model.a_ib.mul(&ub);
        let apv = model.ap_ii.mul(&vi) + model.ap_ib.mul(&vb);
        let g1u = &self.gamma1 * u;
        let g0u = &self.gamma0 * u;
        let g1v = &self.gamma1_primed * v;
        let g0v = &self.gamma0_primed * v;
        (0..u.ncols().min(v.ncols()))
            .map(|k| {
                let dot = |a: &CMat, b: &CMat, w: Option<&[f64]>| -> Complex64 {
                    (0..a.nrows())
                        .map(|i| a[(i, k)] * b[(i, k)].conj() * w.map_or(self.omega, |w| w[i]))
                        .sum()
                };
                let terms = [
                    dot(&au, &vi, Some(&model.w_i)),
                    dot(&ui, &apv, Some(&model.w_i)),
                    dot(&g1u, &g0v, None),
                    dot(&g0u, &g1v, None),
                ];
                let defect = terms[0] - terms[1] - terms[2] + terms[3];
                let size: f64 = terms.iter().map(|t| t.norm()).sum();
                defect.norm() / size.max(f64::MIN_POSITIVE)
            })
            .collect()
    }
}

/// `C_T = P⁰ + J^{-1} Λ_{-1/2} T Λ_{-1/2}`: the Neumann-type form of
/// `Γ₁u = TΓ₀u`.
pub fn c_from_triplet_t(model: &DiscreteModel, t: &CMat, primed: bool) -> Result<CMat> {
    let m = model.m();
    if t.nrows() != m || t.ncols() != m {
        return Err(Error::dim(m, t.nrows()));
    }
    let (_, j) = triplet_weights(model);
    let inv_j: Vec<f64> = j.iter().map(|v| 1.0 / v).collect();
    let mhalf = lambda_matrix(m, -0.5);
    let p0 = if primed {
        dtn_primed(model, ZERO)?.matrix
    } else {
        dtn(model, ZERO)?.matrix
    };
    Ok(p0 + scale_rows(&inv_j, &(&mhalf * &(t * &mhalf))))
}

#[derive(Clone, Debug)]
pub struct PropositionReport {
    /// `M_T(Γ₁ - TΓ₀)u = Γ₀u` on random `u ∈ Z_λ`.
    pub defining: f64,
    /// `(A_T)^* = A'_{T^*}` compared through their boundary maps.
    pub adjoint: f64,
    /// `M_T` against the Neumann-type M-function translated through
    /// `Λ_{-1/2}` and `J`.
    pub consistency: f64,
}

/// Checks for a bounded `T` on the triplet's boundary space: the realization
/// `A_T` with `D(A_T) = ker(Γ₁ - TΓ₀)`, its M-function on `Z_λ`, and the
/// adjoint relation.
pub fn proposition_check(model: &DiscreteModel, t: &CMat, lambda: Complex64) -> Result<PropositionReport> {
    let m = model.m();
    let (_, j) = triplet_weights(model);
    let half = lambda_matrix(m, 0.5);
    let mhalf = lambda_matrix(m, -0.5);
    let p0 = dtn(model, ZERO)?.matrix;
    let pl = dtn(model, lambda)?.matrix;
    // (Γ₁ - TΓ₀)(K^λφ, φ) = S φ
    let s = &half * &scale_rows(&j, &(&pl - &p0)) - t * &mhalf;
    let mt = &mhalf * &inverse(&s, "Γ₁ - TΓ₀ on Z_λ")?;
    let phi = crate::realization::probe_block(m, 8, 0x7072_6f70);
    let defining = frob(&(&(&mt * &(&s * &phi)) - &(&mhalf * &phi))) / frob(&(&mhalf * &phi));

    let ct = c_from_triplet_t(model, t, false)?;
    let at = crate::dtn::neumann_realization_matrix(model, ct.clone(), "A_T")?;
    let star = at.adjoint(model);
    let ctp = c_from_triplet_t(model, &adjoint(t), true)?;
    let block = &ctp - model.dp_b.to_dense();
    let yp = inverse(&block, "C' - D'_B")?;
    let adjoint_res = frob(&(&yp - &star.y)) / frob(&star.y).max(f64::MIN_POSITIVE);

    let ml = crate::dtn::m_function_matrix(model, &ct, lambda)?.m_matrix;
    let inv_j: Vec<f64> = j.iter().map(|v| 1.0 / v).collect();
    let translated = &mhalf * &(&ml * &scale_rows(&inv_j, &mhalf));
    let consistency = frob(&(&mt - &translated)) / frob(&mt).max(f64::MIN_POSITIVE);
    Ok(PropositionReport {
        defining,
        adjoint: adjoint_res,
        consistency,
    })
}

/// `M_abs` predicted from the Neumann-type M-function:
/// `Φ^{-1} M_L W_B^{-1} Ψ^{-H}` with `Φ, Ψ` the boundary parts of the bases.
pub fn translate_m_function(model: &DiscreteModel, ext: &ExtensionData, m_l: &CMat) -> Result<CMat> {
    let phi = boundary(model, &ext.v_basis);
    let psi = boundary(model, &ext.w_basis);
    let inv_wb: Vec<f64> = model.w_b.iter().map(|v| 1.0 / v).collect();
    let phi_inv = inverse(&phi, "Φ")?;
    let psi_inv_h = adjoint(&inverse(&psi, "Ψ")?);
    Ok(&phi_inv * &(&scale_cols(m_l, &inv_wb) * &psi_inv_h))
}

/// `T = Ψ^H W_B (C - P⁰) Φ`: the operator of a Neumann-type condition in
/// the bases of `ext` (which must span `Z` and `Z'`).
pub fn t_for_neumann(model: &DiscreteModel, cm: &CMat, v_basis: &CMat, w_basis: &CMat) -> Result<CMat> {
    let p0 = dtn(model, ZERO)?.matrix;
    let phi = boundary(model, v_basis);
    let psi = boundary(model, w_basis);
    Ok(&adjoint(&scale_rows(&model.w_b, &psi)) * &(&(cm - &p0) * &phi))
}

/// Full bases of `Z` and `Z'`.
pub fn full_null_spaces(model: &DiscreteModel) -> Result<(CMat, CMat)> {
    let id = eye(model.m());
    Ok((
        harmonic_span(model, ZERO, &id, false)?,
        harmonic_span(model, ZERO, &id, true)?,
    ))
}
