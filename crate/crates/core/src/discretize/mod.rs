//! Finite model of the maximal operator, its traces and the formal adjoint.
//!
//! Piecewise-linear elements with lumped mass. With `S` the stiffness matrix
//! of the sesquilinear form of `A`, `S_ij = a(φ_j, φ_i)`, the model is
//!
//! ```text
//! (A u)_I = W_I^{-1} (S_II u_I + S_IB u_B)
//! ν₁ u     = -W_B^{-1} (S_BI u_I + S_BB u_B)
//! ```
//!
//! and the primed model uses `S^H` in place of `S`. The boundary rows are the
//! weak conormal derivative along the interior normal, so the Green identity
//! holds exactly with `A₀' = 0`.

pub mod cache;
pub mod mesh;

use std::sync::Arc;

use num_complex::Complex64;

use crate::dirichlet::FactorCache;
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::linalg::{c, col, to_vec, CMat, Sparse, ZERO};

pub use mesh::{build_mesh, Mesh};

/// `A u = -Σ a_pq ∂_p ∂_q u + Σ b_q ∂_q u + (c + shift) u`.
#[derive(Clone, Debug)]
pub struct EllipticOperatorSpec {
    pub a: [[Expr; 2]; 2],
    pub b: [Expr; 2],
    pub c: Expr,
    pub c0: f64,
    pub shift: f64,
    pub label: String,
}

impl EllipticOperatorSpec {
    pub fn laplace() -> Self {
        EllipticOperatorSpec {
            a: [
                [Expr::real(1.0), Expr::zero()],
                [Expr::zero(), Expr::real(1.0)],
            ],
            b: [Expr::zero(), Expr::zero()],
            c: Expr::zero(),
            c0: 1.0,
            shift: 0.0,
            label: "-lap".into(),
        }
    }

    /// Coefficients from expression strings: `[a11, a12, a21, a22]`,
    /// `[b1, b2]`, `c`.
    pub fn from_strings(a: [&str; 4], b: [&str; 2], c: &str, c0: f64) -> Result<Self> {
        let p = |s: &str| Expr::parse(s);
        Ok(EllipticOperatorSpec {
            a: [[p(a[0])?, p(a[1])?], [p(a[2])?, p(a[3])?]],
            b: [p(b[0])?, p(b[1])?],
            c: p(c)?,
            c0,
            shift: 0.0,
            label: format!(
                "a=[{}, {}; {}, {}] b=[{}, {}] c={}",
                a[0], a[1], a[2], a[3], b[0], b[1], c
            ),
        })
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    pub fn principal(&self, x: f64, y: f64) -> [[Complex64; 2]; 2] {
        [
            [self.a[0][0].eval(x, y), self.a[0][1].eval(x, y)],
            [self.a[1][0].eval(x, y), self.a[1][1].eval(x, y)],
        ]
    }

    /// `a⁰(x, ξ) = Σ a_pq ξ_p ξ_q`
    pub fn principal_symbol(&self, x: f64, y: f64, xi: [Complex64; 2]) -> Complex64 {
        let a = self.principal(x, y);
        let mut s = ZERO;
        for p in 0..2 {
            for q in 0..2 {
                s += a[p][q] * xi[p] * xi[q];
            }
        }
        s
    }

    pub fn has_constant_principal_part(&self) -> bool {
        self.a.iter().flatten().all(|e| e.is_constant())
    }

    /// Formal adjoint `A' v = -Σ ∂_p∂_q(ā_pq v) - Σ ∂_q(b̄_q v) + c̄ v`,
    /// written back in the same non-divergence form.
    pub fn adjoint(&self) -> Result<Self> {
        let abar = |p: usize, q: usize| self.a[p][q].conj();
        let var = [Var::X, Var::Y];
        let mut a = self.a.clone();
        for p in 0..2 {
            for q in 0..2 {
                a[p][q] = abar(q, p);
            }
        }
        let mut b = [Expr::zero(), Expr::zero()];
        for k in 0..2 {
            let mut e = self.b[k].conj().neg();
            for p in 0..2 {
                e = e.sub(&abar(p, k).diff(var[p])?);
                e = e.sub(&abar(k, p).diff(var[p])?);
            }
            b[k] = e;
        }
        let mut cc = self.c.conj();
        for p in 0..2 {
            for q in 0..2 {
                cc = cc.sub(&abar(p, q).diff(var[p])?.diff(var[q])?);
            }
            cc = cc.sub(&self.b[p].conj().diff(var[p])?);
        }
        Ok(EllipticOperatorSpec {
            a,
            b,
            c: cc,
            c0: self.c0,
            shift: self.shift,
            label: format!("adjoint of {}", self.label),
        })
    }

    /// `min Re Σ a_pq ξ_p ξ_q` over the points and 32 unit directions.
    pub fn ellipticity_margin(&self, points: &[[f64; 2]]) -> f64 {
        let mut m = f64::INFINITY;
        for p in points {
            for k in 0..32 {
                let t = std::f64::consts::PI * k as f64 / 32.0;
                let xi = [c(t.cos(), 0.0), c(t.sin(), 0.0)];
                m = m.min(self.principal_symbol(p[0], p[1], xi).re);
            }
        }
        m
    }

    /// `(β, c + shift)` with `β_q = b_q + Σ_p ∂_p a_pq`, the lower-order
    /// coefficients of the sesquilinear form.
    fn form_lower(&self) -> Result<([Expr; 2], Expr)> {
        let var = [Var::X, Var::Y];
        let mut beta = self.b.clone();
        for q in 0..2 {
            for p in 0..2 {
                beta[q] = beta[q].add(&self.a[p][q].diff(var[p])?);
            }
        }
        Ok((beta, self.c.add(&Expr::real(self.shift))))
    }
}

/// The assembled finite model.
pub struct DiscreteModel {
    pub mesh: Arc<Mesh>,
    pub op: EllipticOperatorSpec,
    pub a_ii: Sparse,
    pub a_ib: Sparse,
    pub d_i: Sparse,
    pub d_b: Sparse,
    pub ap_ii: Sparse,
    pub ap_ib: Sparse,
    pub dp_i: Sparse,
    pub dp_b: Sparse,
    pub a0p: CMat,
    pub s0_diag: Vec<Complex64>,
    pub w_i: Vec<f64>,
    pub w_b: Vec<f64>,
    pub(crate) factors: FactorCache,
}

/// Stiffness blocks `S_II, S_IB, S_BI, S_BB` and the lumped interior mass.
pub struct Stiffness {
    pub s_ii: Sparse,
    pub s_ib: Sparse,
    pub s_bi: Sparse,
    pub s_bb: Sparse,
    pub mass: Vec<f64>,
}

pub fn stiffness(op: &EllipticOperatorSpec, mesh: &Mesh) -> Result<Stiffness> {
    let n = mesh.n_interior;
    let (beta, cexpr) = op.form_lower()?;
    let total = mesh.n_nodes();
    let mut trip: Vec<(usize, usize, Complex64)> = Vec::with_capacity(mesh.triangles.len() * 9);
    let mut mass = vec![0.0; total];
    let cvals: Vec<Complex64> = mesh.nodes.iter().map(|p| cexpr.eval(p[0], p[1])).collect();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.area(t);
        let p: Vec<[f64; 2]> = tri.iter().map(|&k| mesh.nodes[k]).collect();
        let g = [
            [(p[1][1] - p[2][1]) / (2.0 * area), (p[2][0] - p[1][0]) / (2.0 * area)],
            [(p[2][1] - p[0][1]) / (2.0 * area), (p[0][0] - p[2][0]) / (2.0 * area)],
            [(p[0][1] - p[1][1]) / (2.0 * area), (p[1][0] - p[0][0]) / (2.0 * area)],
        ];
        let xc = (p[0][0] + p[1][0] + p[2][0]) / 3.0;
        let yc = (p[0][1] + p[1][1] + p[2][1]) / 3.0;
        let a = op.principal(xc, yc);
        let bq = [beta[0].eval(xc, yc), beta[1].eval(xc, yc)];
        for i in 0..3 {
            for j in 0..3 {
                let mut v = ZERO;
                for pp in 0..2 {
                    for qq in 0..2 {
                        v += a[pp][qq] * (g[j][qq] * g[i][pp]);
                    }
                }
                v *= area;
                v += (bq[0] * g[j][0] + bq[1] * g[j][1]) * (area / 3.0);
                if i == j {
                    v += cvals[tri[i]] * (area / 3.0);
                }
                trip.push((tri[i], tri[j], v));
            }
            mass[tri[i]] += area / 3.0;
        }
    }
    let mut blocks: [Vec<(usize, usize, Complex64)>; 4] = Default::default();
    for (i, j, v) in trip {
        let (bi, ii) = if i < n { (0, i) } else { (1, i - n) };
        let (bj, jj) = if j < n { (0, j) } else { (1, j - n) };
        blocks[bi * 2 + bj].push((ii, jj, v));
    }
    let m = mesh.n_boundary;
    let [b0, b1, b2, b3] = blocks;
    mass.truncate(n);
    Ok(Stiffness {
        s_ii: Sparse::from_triplets(n, n, b0),
        s_ib: Sparse::from_triplets(n, m, b1),
        s_bi: Sparse::from_triplets(m, n, b2),
        s_bb: Sparse::from_triplets(m, m, b3),
        mass,
    })
}

/// Trapezoid weights of the boundary polygon: half the adjacent edge lengths.
pub fn boundary_weights(mesh: &Mesh) -> Vec<f64> {
    let m = mesh.n_boundary;
    let n = mesh.n_interior;
    let pt = |j: usize| mesh.nodes[n + j % m];
    (0..m)
        .map(|j| {
            let a = pt(j + m - 1);
            let b = pt(j);
            let cc = pt(j + 1);
            0.5 * ((b[0] - a[0]).hypot(b[1] - a[1]) + (cc[0] - b[0]).hypot(cc[1] - b[1]))
        })
        .collect()
}

pub fn assemble(op: &EllipticOperatorSpec, mesh: Arc<Mesh>) -> Result<DiscreteModel> {
    let margin = op.ellipticity_margin(&mesh.nodes);
    if !(margin >= op.c0 * (1.0 - 1e-12)) || !(op.c0 > 0.0) {
        return Err(Error::Ellipticity(format!(
            "min Re a(x)ξ·ξ = {margin:.4e} is below c0 = {}",
            op.c0
        )));
    }
    let st = stiffness(op, &mesh)?;
    if st.mass.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Mesh("singular interior mass matrix".into()));
    }
    let w_b = boundary_weights(&mesh);
    let inv_m: Vec<f64> = st.mass.iter().map(|v| 1.0 / v).collect();
    let inv_wb: Vec<f64> = w_b.iter().map(|v| -1.0 / v).collect();
    let a_ii = st.s_ii.scale_rows(&inv_m);
    let a_ib = st.s_ib.scale_rows(&inv_m);
    let d_i = st.s_bi.scale_rows(&inv_wb);
    let d_b = st.s_bb.scale_rows(&inv_wb);
    let ap_ii = st.s_ii.adjoint().scale_rows(&inv_m);
    let ap_ib = st.s_bi.adjoint().scale_rows(&inv_m);
    let dp_i = st.s_ib.adjoint().scale_rows(&inv_wb);
    let dp_b = st.s_bb.adjoint().scale_rows(&inv_wb);
    let m = mesh.n_boundary;
    let s0_diag = mesh
        .frames
        .iter()
        .map(|f| {
            let nrm = [c(f.interior_normal[0], 0.0), c(f.interior_normal[1], 0.0)];
            op.principal_symbol(f.point[0], f.point[1], nrm)
        })
        .collect();
    Ok(DiscreteModel {
        mesh,
        op: op.clone(),
        a_ii,
        a_ib,
        d_i,
        d_b,
        ap_ii,
        ap_ib,
        dp_i,
        dp_b,
        a0p: crate::linalg::zeros(m, m),
        s0_diag,
        w_i: st.mass,
        w_b,
        factors: FactorCache::default(),
    })
}

/// Assembles `op` on a fresh mesh of `domain` at resolution `h`.
pub fn assemble_on(
    op: &EllipticOperatorSpec,
    domain: &crate::geometry::DomainSpec,
    h: f64,
) -> Result<DiscreteModel> {
    let mesh = build_mesh(domain, h)?;
    assemble(op, Arc::new(mesh))
}

impl DiscreteModel {
    /// Rebuilds a model from stored blocks.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        mesh: Arc<Mesh>,
        op: EllipticOperatorSpec,
        blocks: [Sparse; 8],
        a0p: CMat,
        s0_diag: Vec<Complex64>,
        w_i: Vec<f64>,
        w_b: Vec<f64>,
    ) -> Result<DiscreteModel> {
        let n = mesh.n_interior;
        let m = mesh.n_boundary;
        let [a_ii, a_ib, d_i, d_b, ap_ii, ap_ib, dp_i, dp_b] = blocks;
        let dims = [
            (a_ii.nrows(), a_ii.ncols(), n, n),
            (a_ib.nrows(), a_ib.ncols(), n, m),
            (d_i.nrows(), d_i.ncols(), m, n),
            (d_b.nrows(), d_b.ncols(), m, m),
            (ap_ii.nrows(), ap_ii.ncols(), n, n),
            (ap_ib.nrows(), ap_ib.ncols(), n, m),
            (dp_i.nrows(), dp_i.ncols(), m, n),
            (dp_b.nrows(), dp_b.ncols(), m, m),
        ];
        for (r, cc, er, ec) in dims {
            if r != er {
                return Err(Error::dim(er, r));
            }
            if cc != ec {
                return Err(Error::dim(ec, cc));
            }
        }
        if w_i.len() != n || w_b.len() != m || s0_diag.len() != m {
            return Err(Error::dim(n + 2 * m, w_i.len() + w_b.len() + s0_diag.len()));
        }
        Ok(DiscreteModel {
            mesh,
            op,
            a_ii,
            a_ib,
            d_i,
            d_b,
            ap_ii,
            ap_ib,
            dp_i,
            dp_b,
            a0p,
            s0_diag,
            w_i,
            w_b,
            factors: FactorCache::default(),
        })
    }

    pub fn blocks(&self) -> [&Sparse; 8] {
        [
            &self.a_ii,
            &self.a_ib,
            &self.d_i,
            &self.d_b,
            &self.ap_ii,
            &self.ap_ib,
            &self.dp_i,
            &self.dp_b,
        ]
    }

    /// Interior unknowns.
    pub fn n(&self) -> usize {
        self.mesh.n_interior
    }

    /// Boundary unknowns.
    pub fn m(&self) -> usize {
        self.mesh.n_boundary
    }

    /// Reference magnitude for relative residuals.
    pub fn scale(&self) -> f64 {
        let wmax = self
            .w_i
            .iter()
            .chain(self.w_b.iter())
            .fold(0.0_f64, |a, &b| a.max(b));
        [&self.a_ii, &self.a_ib, &self.d_i, &self.d_b]
            .iter()
            .map(|s| s.norm_inf())
            .fold(0.0, f64::max)
            * wmax
    }

    fn split(&self, u: &[Complex64]) -> Result<(CMat, CMat)> {
        let n = self.n();
        if u.len() != n + self.m() {
            return Err(Error::dim(n + self.m(), u.len()));
        }
        Ok((col(&u[..n]), col(&u[n..])))
    }

    /// Interior part of `A_max u`.
    pub fn apply(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        let (ui, ub) = self.split(u)?;
        Ok(to_vec(&(self.a_ii.mul(&ui) + self.a_ib.mul(&ub))))
    }

    /// Interior part of `A'_max v`.
    pub fn apply_adjoint(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let (vi, vb) = self.split(v)?;
        Ok(to_vec(&(self.ap_ii.mul(&vi) + self.ap_ib.mul(&vb))))
    }

    /// `ν₁ u`
    pub fn conormal(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        let (ui, ub) = self.split(u)?;
        Ok(to_vec(&(self.d_i.mul(&ui) + self.d_b.mul(&ub))))
    }

    /// `ν₁' v`
    pub fn conormal_adjoint(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let (vi, vb) = self.split(v)?;
        Ok(to_vec(&(self.dp_i.mul(&vi) + self.dp_b.mul(&vb))))
    }

    /// Conormal derivative from element gradients at each boundary node,
    /// `n·a·∇u` averaged over adjacent elements by area. Only for convergence
    /// comparison with the variational trace.
    pub fn pointwise_conormal(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.n();
        let m = self.m();
        if u.len() != n + m {
            return Err(Error::dim(n + m, u.len()));
        }
        let mesh = &self.mesh;
        let mut grad = vec![[ZERO; 2]; m];
        let mut wsum = vec![0.0; m];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            if !tri.iter().any(|&k| k >= n) {
                continue;
            }
            let area = mesh.area(t);
            let p: Vec<[f64; 2]> = tri.iter().map(|&k| mesh.nodes[k]).collect();
            let g = [
                [(p[1][1] - p[2][1]), (p[2][0] - p[1][0])],
                [(p[2][1] - p[0][1]), (p[0][0] - p[2][0])],
                [(p[0][1] - p[1][1]), (p[1][0] - p[0][0])],
            ];
            let mut gu = [ZERO; 2];
            for i in 0..3 {
                for d in 0..2 {
                    gu[d] += u[tri[i]] * (g[i][d] / (2.0 * area));
                }
            }
            for &k in tri {
                if k >= n {
                    grad[k - n][0] += gu[0] * area;
                    grad[k - n][1] += gu[1] * area;
                    wsum[k - n] += area;
                }
            }
        }
        Ok((0..m)
            .map(|j| {
                let f = &mesh.frames[j];
                let a = self.op.principal(f.point[0], f.point[1]);
                let g = [grad[j][0] / wsum[j], grad[j][1] / wsum[j]];
                let mut v = ZERO;
                for p in 0..2 {
                    for q in 0..2 {
                        v += f.interior_normal[p] * a[p][q] * g[q];
                    }
                }
                v
            })
            .collect())
    }
}

/// `⟨x, y⟩_w = Σ w_k x_k ȳ_k`
pub fn inner(x: &[Complex64], y: &[Complex64], w: &[f64]) -> Complex64 {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((a, b), w)| a * b.conj() * *w)
        .sum()
}

/// `|⟨Au, v⟩ - ⟨u, A'v⟩ - ⟨ν₁u, γ₀v⟩ + ⟨γ₀u, ν₁'v + A₀'γ₀v⟩|`
pub fn green_defect(model: &DiscreteModel, u: &[Complex64], v: &[Complex64]) -> Result<f64> {
    let n = model.n();
    let au = model.apply(u)?;
    let apv = model.apply_adjoint(v)?;
    let nu = model.conormal(u)?;
    let mut npv = model.conormal_adjoint(v)?;
    let a0v = &model.a0p * &col(&v[n..]);
    for (k, x) in npv.iter_mut().enumerate() {
        *x += a0v[(k, 0)];
    }
    let lhs = inner(&au, &v[..n], &model.w_i) - inner(&u[..n], &apv, &model.w_i);
    let rhs = inner(&nu, &v[n..], &model.w_b) - inner(&u[n..], &npv, &model.w_b);
    Ok((lhs - rhs).norm())
}

/// `γ₀ u`
pub fn trace_dirichlet(model: &DiscreteModel, u: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = model.n();
    if u.len() != n + model.m() {
        return Err(Error::dim(n + model.m(), u.len()));
    }
    Ok(u[n..].to_vec())
}

/// Shift making the Dirichlet block comfortably invertible:
/// `max(0, 1 - min Re λ)` over the eigenvalues of `A_II` nearest the origin.
pub fn suggest_shift(model: &DiscreteModel) -> Result<f64> {
    let sigma = c(-0.173, 0.0);
    let lu = model
        .a_ii
        .shifted(sigma)
        .lu(1e-14)
        .map_err(|_| Error::Degenerate("shift probe hit the spectrum".into()))?;
    let eigs = crate::linalg::shift_invert_eigs(model.n(), sigma, 6, |x| lu.solve(x))?;
    let min_re = eigs.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    Ok((1.0 - min_re).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjoint_of_drift() {
        let op = EllipticOperatorSpec::from_strings(["1", "0", "0", "1"], ["2+i", "0"], "0", 1.0)
            .unwrap();
        let ad = op.adjoint().unwrap();
        assert_eq!(ad.b[0].as_constant(), Some(c(-2.0, 1.0)));
        assert!(ad.b[1].is_zero());
        assert!(ad.c.is_zero());
    }

    #[test]
    fn adjoint_is_an_involution() {
        let op = EllipticOperatorSpec::from_strings(
            ["1 + 0.2*x^2", "0.1*x*y", "0.1*x*y", "2 + y"],
            ["x - i*y^2", "0.5*i*x*y"],
            "1 + x*y^3",
            0.5,
        )
        .unwrap();
        let twice = op.adjoint().unwrap().adjoint().unwrap();
        for &(x, y) in &[(0.1, 0.3), (-0.4, 0.2), (0.7, -0.6)] {
            for p in 0..2 {
                for q in 0..2 {
                    assert!((twice.a[p][q].eval(x, y) - op.a[p][q].eval(x, y)).norm() < 1e-12);
                }
                assert!((twice.b[p].eval(x, y) - op.b[p].eval(x, y)).norm() < 1e-12);
            }
            assert!((twice.c.eval(x, y) - op.c.eval(x, y)).norm() < 1e-12);
        }
    }
}
