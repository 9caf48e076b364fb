//! Parameter-dependent boundary norms, order-reducing multipliers, Neumann
//! series inversion and decay fits along rays `λ = -μ² e^{iθ}`.
//!
//! Boundary vectors are samples at equispaced values of the global boundary
//! parameter, so the discrete Fourier transform in that parameter plays the
//! role of the symbol calculus on the curve.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::discretize::{assemble, DiscreteModel, EllipticOperatorSpec};
use crate::dtn::{m_function_matrix, neumann_realization_matrix, param_ellipticity_check, BoundaryOperator};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::{eye, op_norm, scale, weighted_op_norm, CMat, ZERO};

fn check_count(m: usize) -> Result<()> {
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::BoundaryCount(m));
    }
    Ok(())
}

/// Integer frequency of DFT slot `k`; the Nyquist slot is `-m/2`.
pub fn frequency(k: usize, m: usize) -> i64 {
    if 2 * k < m {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

/// Unitary DFT: `φ̂_n = m^{-1/2} Σ_j φ_j e^{-i n t_j}`.
pub fn dft(phi: &[Complex64]) -> Vec<Complex64> {
    let m = phi.len();
    let mut buf = phi.to_vec();
    if m == 0 {
        return buf;
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let s = 1.0 / (m as f64).sqrt();
    buf.iter_mut().for_each(|z| *z *= s);
    buf
}

pub fn idft(hat: &[Complex64]) -> Vec<Complex64> {
    let m = hat.len();
    let mut buf = hat.to_vec();
    if m == 0 {
        return buf;
    }
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    let s = 1.0 / (m as f64).sqrt();
    buf.iter_mut().for_each(|z| *z *= s);
    buf
}

/// Applies the multiplier `n ↦ sigma(n)` to the boundary spectrum of `phi`.
pub fn apply_multiplier(phi: &[Complex64], sigma: impl Fn(i64) -> Complex64) -> Vec<Complex64> {
    let m = phi.len();
    let mut hat = dft(phi);
    for (k, z) in hat.iter_mut().enumerate() {
        *z *= sigma(frequency(k, m));
    }
    idft(&hat)
}

/// Dense `m × m` matrix of a Fourier multiplier.
pub fn multiplier_matrix(m: usize, sigma: impl Fn(i64) -> Complex64) -> CMat {
    let symbols: Vec<Complex64> = (0..m).map(|k| sigma(frequency(k, m))).collect();
    let mut out = CMat::zeros(m, m);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut buf = vec![ZERO; m];
    for j in 0..m {
        buf.iter_mut().for_each(|z| *z = ZERO);
        buf[j] = Complex64::new(1.0, 0.0);
        fwd.process(&mut buf);
        for (k, z) in buf.iter_mut().enumerate() {
            *z *= symbols[k];
        }
        inv.process(&mut buf);
        for i in 0..m {
            out[(i, j)] = buf[i] / m as f64;
        }
    }
    out
}

/// `⟨n⟩^r = (1 + n²)^{r/2}`
pub fn bracket(n: i64, r: f64) -> f64 {
    (1.0 + (n * n) as f64).powf(0.5 * r)
}

/// Matrix of `Λ₀^r`.
pub fn lambda_matrix(m: usize, r: f64) -> CMat {
    multiplier_matrix(m, |n| Complex64::new(bracket(n, r), 0.0))
}

/// `Λ₀^r φ`: multiplies frequency `n` by `(1 + n²)^{r/2}`.
pub fn order_reduce_boundary(phi: &[Complex64], r: f64) -> Result<Vec<Complex64>> {
    check_count(phi.len())?;
    Ok(apply_multiplier(phi, |n| Complex64::new(bracket(n, r), 0.0)))
}

/// `‖φ‖_{s,μ} = ‖(1 + n² + μ²)^{s/2} φ̂‖_{ℓ²}`.
pub fn sobolev_norm_boundary(phi: &[Complex64], s: f64, mu: f64) -> Result<f64> {
    check_count(phi.len())?;
    if !(mu >= 0.0) {
        return Err(Error::Precondition(format!("μ = {mu} must be nonnegative")));
    }
    let m = phi.len();
    let hat = dft(phi);
    let sum: f64 = hat
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let n = frequency(k, m) as f64;
            (1.0 + n * n + mu * mu).powf(s) * z.norm_sqr()
        })
        .sum();
    Ok(sum.sqrt())
}

/// `⟨μ⟩ = (1 + μ²)^{1/2}`
pub fn mu_bracket(mu: f64) -> f64 {
    (1.0 + mu * mu).sqrt()
}

/// Outcome of [`neumann_invert`].
#[derive(Clone, Debug)]
pub enum NeumannInverse {
    /// `inverse = approx · Σ_{k≤terms} (-R)^k` with `R = target·approx - I`
    /// and `‖R‖ = rho < 1/2`.
    Certified { inverse: CMat, rho: f64, terms: usize },
    Failed { rho: f64 },
}

/// Right inverse of `target` from an approximate inverse through the
/// Neumann series of `I + R`.
pub fn neumann_invert(target: &CMat, approx: &CMat) -> Result<NeumannInverse> {
    let n = target.nrows();
    if target.ncols() != n || approx.nrows() != n || approx.ncols() != n {
        return Err(Error::dim(n, approx.nrows()));
    }
    let r = target * approx - eye(n);
    let rho = op_norm(&r);
    if !(rho < 0.5) {
        return Ok(NeumannInverse::Failed { rho });
    }
    let minus_r = scale(&r, Complex64::new(-1.0, 0.0));
    let mut term = eye(n);
    let mut sum = eye(n);
    let mut terms = 0;
    while terms < 10_000 {
        term = &term * &minus_r;
        terms += 1;
        sum += &term;
        if op_norm(&term) < 1e-14 {
            break;
        }
    }
    Ok(NeumannInverse::Certified {
        inverse: approx * &sum,
        rho,
        terms,
    })
}

/// `λ = -μ² e^{iθ}` for `μ` on a strictly increasing grid with `μ ≥ 1`.
#[derive(Clone, Debug)]
pub struct Ray {
    pub theta: f64,
    pub mu_grid: Vec<f64>,
}

impl Ray {
    pub fn new(theta: f64, mu_grid: Vec<f64>) -> Result<Ray> {
        if mu_grid.is_empty() || !(mu_grid[0] >= 1.0) || mu_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition(
                "μ grid must be strictly increasing with μ ≥ 1".into(),
            ));
        }
        if !theta.is_finite() {
            return Err(Error::Precondition(format!("θ = {theta} is not finite")));
        }
        Ok(Ray { theta, mu_grid })
    }

    /// `count` points geometrically spaced in `[lo, hi]`.
    pub fn geometric(theta: f64, lo: f64, hi: f64, count: usize) -> Result<Ray> {
        let count = count.max(2);
        let r = (hi / lo).ln() / (count - 1) as f64;
        Ray::new(theta, (0..count).map(|k| lo * (r * k as f64).exp()).collect())
    }

    pub fn lambda(&self, mu: f64) -> Complex64 {
        -Complex64::from_polar(mu * mu, self.theta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RayQuantity {
    /// `W_B`-weighted operator norm of `M_L(λ)`.
    MNorm,
    /// Weighted operator norm of `(Ã_f - λ)^{-1}(Ã - λ) - I`, with `Ã_f` the
    /// realization of the coefficients frozen at the barycenter.
    Remainder,
}

#[derive(Clone, Debug)]
pub struct RayPoint {
    pub mu: f64,
    pub lambda: Complex64,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct RayFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: Vec<RayPoint>,
    /// `μ` values where the quantity could not be evaluated.
    pub skipped: Vec<f64>,
}

/// Area-weighted barycenter of the mesh.
pub fn barycenter(model: &DiscreteModel) -> [f64; 2] {
    let nodes = &model.mesh.nodes;
    let (mut ax, mut ay, mut area) = (0.0, 0.0, 0.0);
    for t in &model.mesh.triangles {
        let [p, q, r] = t.map(|i| nodes[i]);
        let a = 0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1])).abs();
        ax += a * (p[0] + q[0] + r[0]) / 3.0;
        ay += a * (p[1] + q[1] + r[1]) / 3.0;
        area += a;
    }
    [ax / area, ay / area]
}

/// The operator with all coefficients frozen at `at`.
pub fn frozen_operator(op: &EllipticOperatorSpec, at: [f64; 2]) -> EllipticOperatorSpec {
    let f = |e: &Expr| Expr::constant(e.eval(at[0], at[1]));
    EllipticOperatorSpec {
        a: [[f(&op.a[0][0]), f(&op.a[0][1])], [f(&op.a[1][0]), f(&op.a[1][1])]],
        b: [f(&op.b[0]), f(&op.b[1])],
        c: f(&op.c),
        c0: op.c0,
        shift: op.shift,
        label: format!("{} frozen", op.label),
    }
}

/// Least-squares slope of `log quantity` against `log μ` along the ray.
pub fn ray_decay_fit(
    model: &DiscreteModel,
    cop: &BoundaryOperator,
    ray: &Ray,
    quantity: RayQuantity,
) -> Result<RayFit> {
    let lo = ray.mu_grid[0];
    let hi = *ray.mu_grid.last().unwrap();
    if hi < 10.0 * lo {
        return Err(Error::Precondition(format!(
            "μ grid [{lo}, {hi}] spans less than a decade"
        )));
    }
    let ell = param_ellipticity_check(&model.op, cop, ray.theta, &model.mesh.frames, 64);
    if !ell.flag {
        return Err(Error::Ellipticity(format!(
            "boundary problem is not parameter-elliptic on the ray θ = {}: margin {:.3e}",
            ray.theta, ell.margin
        )));
    }
    let cm = cop.to_matrix(model)?;
    let frozen = match quantity {
        RayQuantity::MNorm => None,
        RayQuantity::Remainder => {
            let fop = frozen_operator(&model.op, barycenter(model));
            let fmodel = assemble(&fop, model.mesh.clone())?;
            let fcm = cop.to_matrix(&fmodel)?;
            let fr = neumann_realization_matrix(&fmodel, fcm, "frozen")?;
            let r = neumann_realization_matrix(model, cm.clone(), &cop.label)?;
            let af = fr.eliminated(&fmodel)?;
            Some((fmodel, af, r.eliminated(model)?))
        }
    };
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &mu in &ray.mu_grid {
        let lambda = ray.lambda(mu);
        let value = match &frozen {
            None => m_function_matrix(model, &cm, lambda)
                .map(|r| weighted_op_norm(&r.m_matrix, &model.w_b, &model.w_b)),
            Some((fmodel, af, a)) => remainder_norm(fmodel, af, a, lambda),
        };
        match value {
            Ok(v) if v.is_finite() && v > 0.0 => points.push(RayPoint { mu, lambda, value: v }),
            Ok(_) | Err(Error::InSpectrum { .. }) | Err(Error::Degenerate(_)) => skipped.push(mu),
            Err(e) => return Err(e),
        }
    }
    if points.len() < 2 {
        return Err(Error::Sampling(format!(
            "only {} usable points on the ray",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.mu.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.value.ln()).collect();
    let (slope, intercept) = linear_fit(&xs, &ys);
    Ok(RayFit {
        slope,
        intercept,
        points,
        skipped,
    })
}

fn remainder_norm(fmodel: &DiscreteModel, af: &CMat, a: &CMat, lambda: Complex64) -> Result<f64> {
    let n = af.nrows();
    let shifted = af - scale(&eye(n), lambda);
    let lu = crate::linalg::Lu::new(&shifted, 1e-14).map_err(|(p, nrm)| Error::InSpectrum {
        lambda,
        detail: format!("frozen realization: pivot {p:.3e} vs norm {nrm:.3e}"),
    })?;
    // (Ã_f - λ)^{-1}(Ã - λ) - I = (Ã_f - λ)^{-1}(Ã - Ã_f)
    let rem = lu.solve(&(a - af));
    Ok(weighted_op_norm(&rem, &fmodel.w_i, &fmodel.w_i))
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode(m: usize, n: i64) -> Vec<Complex64> {
        (0..m)
            .map(|j| Complex64::from_polar(1.0 / (m as f64).sqrt(), n as f64 * std::f64::consts::TAU * j as f64 / m as f64))
            .collect()
    }

    #[test]
    fn single_mode_norm() {
        let v = sobolev_norm_boundary(&mode(32, 3), 1.0, 0.0).unwrap();
        assert!((v - 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn order_reduction_scales_modes() {
        let phi = mode(16, -5);
        let out = order_reduce_boundary(&phi, 0.7).unwrap();
        let f = bracket(-5, 0.7);
        for (a, b) in out.iter().zip(&phi) {
            assert!((a - b * f).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(order_reduce_boundary(&[ZERO; 12], 1.0), Err(Error::BoundaryCount(12))));
    }

    #[test]
    fn zero_approximation_fails() {
        let t = eye(3);
        match neumann_invert(&t, &CMat::zeros(3, 3)).unwrap() {
            NeumannInverse::Failed { rho } => assert!((rho - 1.0).abs() < 1e-14),
            _ => panic!("certified a zero approximation"),
        }
    }

    #[test]
    fn fit_recovers_power_law() {
        let xs: Vec<f64> = (1..10).map(|k| (k as f64).ln()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 1.5 * x).collect();
        let (s, b) = linear_fit(&xs, &ys);
        assert!((s + 1.5).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }
}
