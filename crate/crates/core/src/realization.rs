//! Realizations `A_min ⊂ Ã ⊂ A_max` of the discrete model.
//!
//! Every realization whose domain is a graph over interior values has the
//! form `u_B = Y D_I u_I` for an `m × m` matrix `Y`: containing `A_min`
//! forces the boundary map to vanish on `ker D_I`. Storing `Y` keeps the
//! eliminated operator `A_II + A_IB Y D_I` sparse plus low rank, and the
//! adjoint realization is again of this form with `Y* = W_B^{-1} Y^H W_B`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_complex::Complex64;

use crate::discretize::DiscreteModel;
use crate::error::{Error, Result};
use crate::linalg::{adjoint, frob, scale_cols, scale_rows, shift_invert_eigs, CMat, Sparse, SparseLu, ONE};

/// Largest interior size for which dense `N × N` eliminations are formed.
pub const DENSE_LIMIT: usize = 6000;

/// Singularity guard for the bordered system. Its rows mix scales of order
/// `h^{-2}` and `1`, so `σ_min / ‖·‖` sits about five orders below the
/// relative distance to the spectrum and the Dirichlet guard is too strict.
pub const BORDERED_GUARD: f64 = 1e-16;

#[derive(Clone, Debug)]
pub enum RealizationKind {
    Dirichlet,
    /// `ν₁u = C γ₀u`
    NeumannType { c: CMat },
    /// `Γ₀u ∈ X₁`, `pr_{Y₁}(Γ₁u - L₁Γ₀u) = 0`
    Subspace { x1: CMat, y1: CMat, l1: CMat },
    /// Built from `T: V → W`.
    Abstract { t: CMat, v: CMat, w: CMat },
    /// Anything else, e.g. the adjoint of an abstract realization.
    Generic,
}

#[derive(Clone, Debug)]
pub struct Realization {
    pub kind: RealizationKind,
    /// Lives on the primed (adjoint) model.
    pub primed: bool,
    /// `u_B = Y D_I u_I`
    pub y: CMat,
    pub label: String,
}

impl Realization {
    pub fn new(kind: RealizationKind, primed: bool, y: CMat, label: &str) -> Self {
        Realization {
            kind,
            primed,
            y,
            label: label.to_string(),
        }
    }

    pub fn dirichlet(model: &DiscreteModel) -> Self {
        Realization::new(
            RealizationKind::Dirichlet,
            false,
            CMat::zeros(model.m(), model.m()),
            "dirichlet",
        )
    }

    fn blocks<'a>(&self, model: &'a DiscreteModel) -> (&'a Sparse, &'a Sparse, &'a Sparse) {
        if self.primed {
            (&model.ap_ii, &model.ap_ib, &model.dp_i)
        } else {
            (&model.a_ii, &model.a_ib, &model.d_i)
        }
    }

    fn check(&self, model: &DiscreteModel) -> Result<()> {
        if self.y.nrows() != model.m() || self.y.ncols() != model.m() {
            return Err(Error::dim(model.m(), self.y.nrows()));
        }
        Ok(())
    }

    /// Dense boundary map `B = Y D_I` (`m × N`).
    pub fn boundary_map(&self, model: &DiscreteModel) -> CMat {
        let (_, _, d_i) = self.blocks(model);
        adjoint(&d_i.adjoint().mul(&adjoint(&self.y)))
    }

    /// `Ã x` for a block of interior vectors.
    pub fn apply(&self, model: &DiscreteModel, x: &CMat) -> CMat {
        let (a_ii, a_ib, d_i) = self.blocks(model);
        a_ii.mul(x) + a_ib.mul(&(&self.y * &d_i.mul(x)))
    }

    /// `Ã^H x` (Euclidean conjugate transpose).
    pub fn apply_conj_transpose(&self, model: &DiscreteModel, x: &CMat) -> CMat {
        let (a_ii, a_ib, d_i) = self.blocks(model);
        a_ii.adjoint().mul(x) + d_i.adjoint().mul(&(self.y.adjoint() * &a_ib.adjoint().mul(x)))
    }

    /// The eliminated `N × N` matrix `A_II + A_IB Y D_I`.
    pub fn eliminated(&self, model: &DiscreteModel) -> Result<CMat> {
        self.check(model)?;
        let n = model.n();
        if n > DENSE_LIMIT {
            return Err(Error::Precondition(format!(
                "dense elimination of a {n}-dimensional realization"
            )));
        }
        let (a_ii, a_ib, _) = self.blocks(model);
        Ok(a_ii.to_dense() + a_ib.mul(&self.boundary_map(model)))
    }

    /// Full vectors `(u_I, Y D_I u_I)`.
    pub fn lift(&self, model: &DiscreteModel, ui: &CMat) -> CMat {
        let (_, _, d_i) = self.blocks(model);
        crate::linalg::vstack(ui, &(&self.y * &d_i.mul(ui)))
    }

    /// Relative violation of `u_B = Y D_I u_I` by the full vectors in `u`.
    pub fn constraint_residual(&self, model: &DiscreteModel, u: &CMat) -> Result<f64> {
        let n = model.n();
        if u.nrows() != n + model.m() {
            return Err(Error::dim(n + model.m(), u.nrows()));
        }
        let (_, _, d_i) = self.blocks(model);
        let ui = u.subrows(0, n).to_owned();
        let ub = u.subrows(n, model.m()).to_owned();
        let r = &ub - &self.y * &d_i.mul(&ui);
        Ok(frob(&r) / frob(u).max(f64::MIN_POSITIVE))
    }

    /// Sparse factorization of the bordered system
    /// `[[A_II - λ, A_IB, 0], [D_I, 0, -I], [0, I, -Y]]` in `(u_I, u_B, g)`.
    /// Independent of the Dirichlet resolvent and of any M-function.
    pub fn bordered_lu(&self, model: &DiscreteModel, lambda: Complex64) -> Result<Arc<SparseLu>> {
        self.check(model)?;
        model.bordered_cached(lambda, self.primed, self.fingerprint(), || self.factor_bordered(model, lambda))
    }

    /// Hash of the bits of `Y`, identifying the realization in caches.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        (self.y.nrows(), self.y.ncols()).hash(&mut h);
        for j in 0..self.y.ncols() {
            for i in 0..self.y.nrows() {
                let z = self.y[(i, j)];
                (z.re.to_bits(), z.im.to_bits()).hash(&mut h);
            }
        }
        h.finish()
    }

    fn factor_bordered(&self, model: &DiscreteModel, lambda: Complex64) -> Result<SparseLu> {
        let (a_ii, a_ib, d_i) = self.blocks(model);
        let n = model.n();
        let m = model.m();
        let mut t = Vec::with_capacity(a_ii.nnz() + a_ib.nnz() + d_i.nnz() + 3 * m + m * m);
        for &(i, j, v) in a_ii.entries() {
            t.push((i, j, v));
        }
        for i in 0..n {
            t.push((i, i, -lambda));
        }
        for &(i, j, v) in a_ib.entries() {
            t.push((i, n + j, v));
        }
        for &(i, j, v) in d_i.entries() {
            t.push((n + i, j, v));
        }
        for k in 0..m {
            t.push((n + k, n + m + k, -ONE));
            t.push((n + m + k, n + k, ONE));
        }
        for i in 0..m {
            for j in 0..m {
                let v = self.y[(i, j)];
                if v != Complex64::new(0.0, 0.0) {
                    t.push((n + m + i, n + m + j, -v));
                }
            }
        }
        let big = Sparse::from_triplets(n + 2 * m, n + 2 * m, t);
        big.lu(BORDERED_GUARD)
            .map_err(|(s, nrm)| Error::InSpectrum {
                lambda,
                detail: format!(
                    "realization '{}': smallest singular value estimate {s:.3e} vs norm {nrm:.3e}",
                    self.label
                ),
            })
    }

    /// `(Ã - λ)^{-1} F` through the bordered system.
    pub fn resolvent(&self, model: &DiscreteModel, lambda: Complex64, f: &CMat) -> Result<CMat> {
        let lu = self.bordered_lu(model, lambda)?;
        Ok(solve_bordered(&lu, model, f))
    }

    /// The adjoint realization on the primed model, with respect to the
    /// weighted inner products.
    pub fn adjoint(&self, model: &DiscreteModel) -> Realization {
        let ys = weighted_star(&self.y, &model.w_b);
        let kind = match &self.kind {
            RealizationKind::Dirichlet => RealizationKind::Dirichlet,
            RealizationKind::NeumannType { c } => RealizationKind::NeumannType {
                c: weighted_star(c, &model.w_b),
            },
            RealizationKind::Subspace { x1, y1, l1 } => RealizationKind::Subspace {
                x1: y1.clone(),
                y1: x1.clone(),
                l1: adjoint(l1),
            },
            _ => RealizationKind::Generic,
        };
        Realization {
            kind,
            primed: !self.primed,
            y: ys,
            label: format!("{}*", self.label),
        }
    }

    /// `count` eigenvalues of `Ã` nearest `sigma`.
    pub fn spectrum(&self, model: &DiscreteModel, sigma: Complex64, count: usize) -> Result<Vec<Complex64>> {
        let lu = self.bordered_lu(model, sigma)?;
        shift_invert_eigs(model.n(), sigma, count, |x| solve_bordered(&lu, model, x))
    }
}

/// Interior part of the bordered solve with right-hand side `(F, 0, 0)`.
pub fn solve_bordered(lu: &SparseLu, model: &DiscreteModel, f: &CMat) -> CMat {
    let n = model.n();
    let mut rhs = CMat::zeros(lu.dim(), f.ncols());
    rhs.subrows_mut(0, n).copy_from(f);
    lu.solve(&rhs).subrows(0, n).to_owned()
}

/// `W^{-1} X^H W`, the adjoint of a square matrix for the weight `w`.
pub fn weighted_star(x: &CMat, w: &[f64]) -> CMat {
    let inv: Vec<f64> = w.iter().map(|v| 1.0 / v).collect();
    scale_cols(&scale_rows(&inv, &adjoint(x)), w)
}

/// Relative probe residual of `W_I^{-1} Ã^H W_I = (Ã)*` where `(Ã)*` is
/// the adjoint realization, over the columns of `probe`.
pub fn adjoint_relation_residual(model: &DiscreteModel, r: &Realization, probe: &CMat) -> f64 {
    let star = r.adjoint(model);
    let inv: Vec<f64> = model.w_i.iter().map(|v| 1.0 / v).collect();
    let lhs = scale_rows(&inv, &r.apply_conj_transpose(model, &scale_rows(&model.w_i, probe)));
    let rhs = star.apply(model, probe);
    frob(&(&lhs - &rhs)) / frob(&lhs).max(f64::MIN_POSITIVE)
}

/// Deterministic complex probe block with entries in the unit square.
pub fn probe_block(rows: usize, cols: usize, seed: u64) -> CMat {
    let mut s = seed ^ 0x2545_f491_4f6c_dd1d;
    CMat::from_fn(rows, cols, |_, _| {
        s = crate::linalg::splitmix(s);
        let a = crate::linalg::unit(s);
        s = crate::linalg::splitmix(s);
        Complex64::new(a, crate::linalg::unit(s))
    })
}
