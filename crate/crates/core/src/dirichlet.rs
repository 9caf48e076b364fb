//! The Dirichlet realization: resolvents, Poisson operators and λ-harmonic
//! subspaces, for both the model and its primed (adjoint) counterpart.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::discretize::DiscreteModel;
use crate::error::{Error, Result};
use crate::linalg::{
    adjoint, eye, frob, scale_cols, scale_rows, shift_invert_eigs, vstack, CMat, SparseLu,
};

/// Pivot-proxy threshold: λ is treated as a Dirichlet eigenvalue when the
/// estimated smallest singular value of `A_II - λ` drops below this times
/// the matrix norm.
pub const SPECTRUM_GUARD: f64 = 1e-12;

const CACHE_LIMIT: usize = 64;
/// Poisson matrices are dense `N × m`; only a few are kept.
const POISSON_LIMIT: usize = 4;

type Key = (u64, u64, bool);

/// Per-λ factorizations of `A_II - λ` (and of the primed block) and the
/// most recent Poisson matrices, shared between threads.
#[derive(Default)]
pub struct FactorCache {
    map: Mutex<HashMap<Key, Arc<SparseLu>>>,
    poisson: Mutex<Vec<(Key, Arc<CMat>)>>,
    bordered: Mutex<Vec<(Key, u64, Arc<SparseLu>)>>,
}

impl FactorCache {
    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.map.lock().unwrap().clear();
        self.poisson.lock().unwrap().clear();
        self.bordered.lock().unwrap().clear();
    }
}

fn key(lambda: Complex64, primed: bool) -> Key {
    (lambda.re.to_bits(), lambda.im.to_bits(), primed)
}

impl DiscreteModel {
    fn factor(&self, lambda: Complex64, primed: bool) -> Result<Arc<SparseLu>> {
        let k = key(lambda, primed);
        if let Some(lu) = self.factors.map.lock().unwrap().get(&k) {
            return Ok(lu.clone());
        }
        let block = if primed { &self.ap_ii } else { &self.a_ii };
        let lu = block
            .shifted(lambda)
            .lu(SPECTRUM_GUARD)
            .map_err(|(s, n)| Error::InSpectrum {
                lambda,
                detail: format!(
                    "{}smallest singular value estimate {s:.3e} vs norm {n:.3e}",
                    if primed { "primed block: " } else { "" }
                ),
            })?;
        let lu = Arc::new(lu);
        let mut map = self.factors.map.lock().unwrap();
        if map.len() >= CACHE_LIMIT {
            map.clear();
        }
        map.insert(k, lu.clone());
        Ok(lu)
    }

    /// Bordered factorizations of realizations, keyed by λ and a hash of the
    /// realization's boundary matrix.
    pub(crate) fn bordered_cached(
        &self,
        lambda: Complex64,
        primed: bool,
        tag: u64,
        build: impl FnOnce() -> Result<SparseLu>,
    ) -> Result<Arc<SparseLu>> {
        let k = key(lambda, primed);
        if let Some((_, _, lu)) = self
            .factors
            .bordered
            .lock()
            .unwrap()
            .iter()
            .find(|(kk, t, _)| *kk == k && *t == tag)
        {
            return Ok(lu.clone());
        }
        let lu = Arc::new(build()?);
        let mut list = self.factors.bordered.lock().unwrap();
        if list.len() >= POISSON_LIMIT {
            list.remove(0);
        }
        list.push((k, tag, lu.clone()));
        Ok(lu)
    }

    /// Factorization of `A_II - λ`, cached per λ.
    pub fn dirichlet_lu(&self, lambda: Complex64) -> Result<Arc<SparseLu>> {
        self.factor(lambda, false)
    }

    /// Factorization of `A'_II - λ`, cached per λ.
    pub fn dirichlet_lu_primed(&self, lambda: Complex64) -> Result<Arc<SparseLu>> {
        self.factor(lambda, true)
    }

    /// `(A_II - λ)^{-1} F`
    pub fn resolvent(&self, lambda: Complex64, f: &CMat) -> Result<CMat> {
        Ok(self.dirichlet_lu(lambda)?.solve(f))
    }

    /// `(A'_II - λ)^{-1} F`
    pub fn resolvent_primed(&self, lambda: Complex64, f: &CMat) -> Result<CMat> {
        Ok(self.dirichlet_lu_primed(lambda)?.solve(f))
    }
}

/// `(A_II - λ)^{-1} f` with a residual check.
pub fn dirichlet_resolvent(model: &DiscreteModel, lambda: Complex64, f: &CMat) -> Result<CMat> {
    if f.nrows() != model.n() {
        return Err(Error::dim(model.n(), f.nrows()));
    }
    let u = model.resolvent(lambda, f)?;
    let r = model.a_ii.mul(&u) - crate::linalg::scale(&u, lambda) - f;
    let rel = frob(&r) / frob(f).max(f64::MIN_POSITIVE);
    if rel > 1e-8 {
        return Err(Error::InSpectrum {
            lambda,
            detail: format!("resolvent residual {rel:.3e}"),
        });
    }
    Ok(u)
}

/// Poisson operator `K^λ = -(A_II - λ)^{-1} A_IB`, or its primed analogue.
#[derive(Clone, Debug)]
pub struct PoissonOperator {
    pub lambda: Complex64,
    pub matrix: CMat,
    pub primed: bool,
}

impl PoissonOperator {
    /// Full vectors `(K φ, φ)` for the columns of `phi`.
    pub fn extend(&self, phi: &CMat) -> CMat {
        vstack(&(&self.matrix * phi), phi)
    }

    /// `‖(A_II - λ)K + A_IB‖ / ‖A_IB‖`
    pub fn residual(&self, model: &DiscreteModel) -> f64 {
        let (aii, aib) = if self.primed {
            (&model.ap_ii, &model.ap_ib)
        } else {
            (&model.a_ii, &model.a_ib)
        };
        let r = aii.mul(&self.matrix) - crate::linalg::scale(&self.matrix, self.lambda)
            + aib.to_dense();
        frob(&r) / aib.frob().max(f64::MIN_POSITIVE)
    }
}

fn poisson_cached(model: &DiscreteModel, lambda: Complex64, primed: bool) -> Result<PoissonOperator> {
    let k = key(lambda, primed);
    let hit = model
        .factors
        .poisson
        .lock()
        .unwrap()
        .iter()
        .find(|(kk, _)| *kk == k)
        .map(|(_, m)| m.clone());
    let matrix = match hit {
        Some(m) => m,
        None => {
            let m = Arc::new(if primed {
                -model.resolvent_primed(lambda, &model.ap_ib.to_dense())?
            } else {
                -model.resolvent(lambda, &model.a_ib.to_dense())?
            });
            let mut list = model.factors.poisson.lock().unwrap();
            if list.len() >= POISSON_LIMIT {
                list.remove(0);
            }
            list.push((k, m.clone()));
            m
        }
    };
    Ok(PoissonOperator {
        lambda,
        matrix: (*matrix).clone(),
        primed,
    })
}

pub fn poisson(model: &DiscreteModel, lambda: Complex64) -> Result<PoissonOperator> {
    poisson_cached(model, lambda, false)
}

/// `K'^λ = -(A'_II - λ)^{-1} A'_IB`; pass `λ̄` for the adjoint pairing.
pub fn poisson_primed(model: &DiscreteModel, lambda: Complex64) -> Result<PoissonOperator> {
    poisson_cached(model, lambda, true)
}

/// `ν₁ (A_γ - λ)^{-1} = D_I (A_II - λ)^{-1}` as an `m × N` matrix.
pub fn conormal_resolvent(model: &DiscreteModel, lambda: Complex64) -> Result<CMat> {
    let lu = model.dirichlet_lu(lambda)?;
    let x = lu.solve_adjoint(&adjoint(&model.d_i.to_dense()));
    Ok(adjoint(&x))
}

/// Weighted adjoint `(K')^* = W_B^{-1} K'^H W_I`.
pub fn poisson_star(model: &DiscreteModel, kp: &PoissonOperator) -> CMat {
    let inv_wb: Vec<f64> = model.w_b.iter().map(|w| 1.0 / w).collect();
    scale_cols(&scale_rows(&inv_wb, &adjoint(&kp.matrix)), &model.w_i)
}

/// Relative residual of `(K'^λ̄)^* = ν₁ (A_γ - λ)^{-1}`.
pub fn poisson_adjoint_check(model: &DiscreteModel, lambda: Complex64) -> Result<f64> {
    let kp = poisson_primed(model, lambda.conj())?;
    let lhs = poisson_star(model, &kp);
    let rhs = conormal_resolvent(model, lambda)?;
    Ok(frob(&(&lhs - &rhs)) / frob(&rhs).max(f64::MIN_POSITIVE))
}

/// Probe form of [`poisson_adjoint_check`]: both sides applied to the
/// columns of `f`.
pub fn poisson_adjoint_probe(model: &DiscreteModel, lambda: Complex64, f: &CMat) -> Result<f64> {
    let kp = poisson_primed(model, lambda.conj())?;
    let lhs = &poisson_star(model, &kp) * f;
    let rhs = model.d_i.mul(&model.resolvent(lambda, f)?);
    Ok(frob(&(&lhs - &rhs)) / frob(&rhs).max(f64::MIN_POSITIVE))
}

/// Columns `(K^λ e_j, e_j)` spanning `Z_λ`.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    pub lambda: Complex64,
    pub columns: CMat,
}

impl HarmonicBasis {
    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    /// Largest relative interior residual `‖((A - λ) z)_I‖ / ‖z‖` over columns.
    pub fn residual(&self, model: &DiscreteModel) -> f64 {
        let n = model.n();
        let zi = self.columns.subrows(0, n).to_owned();
        let zb = self.columns.subrows(n, model.m()).to_owned();
        let r = model.a_ii.mul(&zi) + model.a_ib.mul(&zb) - crate::linalg::scale(&zi, self.lambda);
        let mut worst = 0.0_f64;
        let s = model.a_ii.norm_inf();
        for j in 0..self.dim() {
            let rn = r.subcols(j, 1).norm_l2();
            let zn = self.columns.subcols(j, 1).norm_l2();
            worst = worst.max(rn / (s * zn));
        }
        worst
    }
}

pub fn harmonic_basis(model: &DiscreteModel, lambda: Complex64) -> Result<HarmonicBasis> {
    let k = poisson(model, lambda)?;
    Ok(HarmonicBasis {
        lambda,
        columns: vstack(&k.matrix, &eye(model.m())),
    })
}

pub fn harmonic_basis_primed(model: &DiscreteModel, lambda: Complex64) -> Result<HarmonicBasis> {
    let k = poisson_primed(model, lambda)?;
    Ok(HarmonicBasis {
        lambda,
        columns: vstack(&k.matrix, &eye(model.m())),
    })
}

/// The `count` eigenvalues of `A_II` nearest the origin, sorted by modulus.
pub fn dirichlet_spectrum(model: &DiscreteModel, count: usize) -> Result<Vec<Complex64>> {
    if count > model.n() {
        return Err(Error::Precondition(format!(
            "requested {count} eigenvalues of a {}-dimensional block",
            model.n()
        )));
    }
    let zero = Complex64::new(0.0, 0.0);
    let shift = if model.dirichlet_lu(zero).is_ok() {
        zero
    } else {
        Complex64::new(-1e-3, 0.0)
    };
    let lu = model.dirichlet_lu(shift)?;
    let mut eigs = shift_invert_eigs(model.n(), shift, count, |x| lu.solve(x))?;
    eigs.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
    Ok(eigs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_key_distinguishes_primed() {
        let l = Complex64::new(1.0, 2.0);
        assert_ne!(key(l, false), key(l, true));
        assert_eq!(key(l, false), key(Complex64::new(1.0, 2.0), false));
    }
}
