//! Suite orchestration: model preparation (through the cache), the
//! individual suites and report assembly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context as _, Result};
use kreinlab::dirichlet::poisson_adjoint_probe;
use kreinlab::discretize::{assemble, build_mesh, suggest_shift, DiscreteModel, EllipticOperatorSpec};
use kreinlab::dtn::{
    dtn, fourier_modes, kernel_range_check, krein_verify, m_function_matrix, neumann_realization, param_ellipticity_check,
    polish_eigenvalue, spectrum_scan, subspace_realization, BoundaryOperator,
};
use kreinlab::geometry::{holder_norm, DomainSpec};
use kreinlab::linalg::{eigenvalues, weighted_op_norm, CMat};
use kreinlab::parameter::{ray_decay_fit, RayQuantity};
use kreinlab::realization::probe_block;
use kreinlab::suite::{green_residual, identity_suite};
use kreinlab::Complex64;
use rayon::prelude::*;

use crate::cache::{self, ModelCache};
use crate::config::{ExperimentConfig, Shift, Suites};
use crate::plot;
use crate::report::{Cell, MeshInfo, RunReport, SuiteResult, Table};

/// Number of Steklov eigenvalues compared across the ladder.
const STEKLOV_COUNT: usize = 17;
/// Random pairs for the Green identity.
const GREEN_PAIRS: usize = 8;

pub struct Runner {
    pub cfg: ExperimentConfig,
    pub cache: Option<ModelCache>,
    pub domain: DomainSpec,
    pub op: EllipticOperatorSpec,
    pub cop: BoundaryOperator,
    models: Vec<(f64, Arc<DiscreteModel>, MeshInfo)>,
    timings: BTreeMap<String, f64>,
}

fn cx(z: Complex64) -> [Cell; 2] {
    [Cell::Num(z.re), Cell::Num(z.im)]
}

impl Runner {
    pub fn new(cfg: ExperimentConfig, cache: Option<ModelCache>) -> Result<Self> {
        let domain = cfg.domain_spec().context("building the domain")?;
        let base = cfg.operator_spec().context("building the operator")?;
        let cop = cfg.boundary_operator().context("building the boundary operator")?;
        let mut r = Runner {
            cfg,
            cache,
            domain,
            op: base.clone(),
            cop,
            models: Vec::new(),
            timings: BTreeMap::new(),
        };
        let shift = match r.cfg.operator.shift {
            Shift::Value(v) => v,
            Shift::Auto => {
                let t = Instant::now();
                let h = 1.0 / r.cfg.resolution[0];
                let mesh = Arc::new(build_mesh(&r.domain, h)?);
                let s = suggest_shift(&assemble(&base, mesh)?)?;
                r.time("shift", t);
                s
            }
        };
        let label = base.label.clone();
        r.op = base.with_shift(shift).with_label(&label);
        Ok(r)
    }

    fn time(&mut self, stage: &str, t: Instant) {
        *self.timings.entry(stage.to_string()).or_insert(0.0) += t.elapsed().as_secs_f64();
    }

    /// The model at mesh size `h`, from the cache when possible.
    pub fn model(&mut self, h: f64) -> Result<Arc<DiscreteModel>> {
        if let Some((_, m, _)) = self.models.iter().find(|(hh, _, _)| *hh == h) {
            return Ok(m.clone());
        }
        let t = Instant::now();
        let mesh = Arc::new(build_mesh(&self.domain, h).with_context(|| format!("meshing at h = {h}"))?);
        let key = cache::key(&self.cfg.model_hash, h, self.op.shift);
        let cached = self.cache.as_ref().and_then(|c| c.get(&key, mesh.clone(), self.op.clone()));
        let from_cache = cached.is_some();
        let model = match cached {
            Some(m) => m,
            None => {
                let m = assemble(&self.op, mesh).with_context(|| format!("assembling at h = {h}"))?;
                if let Some(c) = &self.cache {
                    if let Err(e) = c.put(&key, &m) {
                        log::warn!("could not write the model cache: {e}");
                    }
                }
                m
            }
        };
        let info = MeshInfo {
            id: model.mesh.id(),
            h,
            n_interior: model.n(),
            n_boundary: model.m(),
            shift: self.op.shift,
            from_cache,
        };
        let model = Arc::new(model);
        self.models.push((h, model.clone(), info));
        self.time("assemble", t);
        Ok(model)
    }

    /// Runs the selected suites in dependency order.
    pub fn run(&mut self, suites: &Suites) -> Result<RunReport> {
        let total = Instant::now();
        let h = self.cfg.finest();
        let model = self.model(h)?;
        let mut out = Vec::new();
        let mut candidates: Option<Vec<Complex64>> = None;
        type Step<'a> = (&'a str, bool);
        let order: [Step; 10] = [
            ("green", suites.green),
            ("identities", suites.identities),
            ("krein", suites.krein),
            ("mfunction", suites.mfunction),
            ("spectrum", suites.spectrum),
            ("kernel", suites.kernel),
            ("dtn", suites.dtn),
            ("subspace", suites.subspace),
            ("ellipticity", suites.ellipticity),
            ("ray", suites.ray),
        ];
        for (name, on) in order {
            if !on {
                continue;
            }
            let t = Instant::now();
            let res = match name {
                "green" => self.green(&model),
                "identities" => self.identities(&model),
                "krein" => self.krein(&model),
                "mfunction" => self.mfunction(&model),
                "spectrum" => self.spectrum(&model).map(|(s, c)| {
                    candidates = Some(c);
                    s
                }),
                "kernel" => self.kernel(&model, &mut candidates),
                "dtn" => self.dtn_ladder(),
                "subspace" => self.subspace(&model),
                "ellipticity" => self.ellipticity(&model),
                "ray" => self.ray(&model),
                _ => unreachable!(),
            };
            let res = res.unwrap_or_else(|e| failed(name, &e));
            self.time(name, t);
            out.push(res);
        }
        self.timings.insert("total".into(), total.elapsed().as_secs_f64());
        let pass = out.iter().all(|s| s.pass);
        Ok(RunReport {
            config_hash: self.cfg.hash.clone(),
            seed: self.cfg.seed,
            mesh: self.models.iter().map(|(_, _, i)| i.clone()).collect(),
            suites: out,
            pass,
            timings: std::mem::take(&mut self.timings),
        })
    }

    fn green(&self, model: &DiscreteModel) -> Result<SuiteResult> {
        let tol = self.cfg.thresholds.identity;
        let mut t = Table::new(&["identity", "pairs", "residual", "threshold", "pass"]);
        let g = green_residual(model, GREEN_PAIRS, self.cfg.seed)?;
        t.push(vec!["green".into(), GREEN_PAIRS.into(), g.into(), tol.into(), (g <= tol).into()]);
        let f = probe_block(model.n(), 8, self.cfg.seed ^ 0x6164);
        let lambda = self.cfg.lambdas.first().copied().unwrap_or(Complex64::new(0.5, 0.3));
        let a = poisson_adjoint_probe(model, lambda, &f)?;
        t.push(vec!["adjoint_trace".into(), 8usize.into(), a.into(), tol.into(), (a <= tol).into()]);
        let mut s = SuiteResult::new("green", format!("relative residual <= {tol:e}"), t);
        s.pass = g <= tol && a <= tol;
        Ok(s)
    }

    fn identities(&self, model: &DiscreteModel) -> Result<SuiteResult> {
        let tol = self.cfg.thresholds.identity;
        let suite = identity_suite(model, &self.cop, &self.cfg.lambdas, self.cfg.seed, tol)?;
        let mut t = Table::new(&["identity", "lambda_re", "lambda_im", "residual", "cond", "threshold", "pass"]);
        for r in &suite.records {
            let [re, im] = r.lambda.map(cx).unwrap_or([Cell::Text("-".into()), Cell::Text("-".into())]);
            t.push(vec![
                r.identity.into(),
                re,
                im,
                r.residual.into(),
                r.cond.into(),
                r.threshold.into(),
                r.pass.into(),
            ]);
        }
        let mut s = SuiteResult::new("identities", format!("residual <= {tol:e} * max(1, cond)"), t);
        s.pass = suite.pass();
        if let Some(w) = suite.worst() {
            s.note("worst_identity", w.identity);
            s.note("worst_ratio", w.residual / w.threshold);
        }
        Ok(s)
    }

    fn krein(&self, model: &DiscreteModel) -> Result<SuiteResult> {
        let tol = self.cfg.thresholds.identity;
        let reports: Vec<_> = self
            .cfg
            .lambdas
            .par_iter()
            .map(|&l| krein_verify(model, &self.cop, l))
            .collect::<kreinlab::Result<_>>()?;
        let mut t = Table::new(&[
            "lambda_re",
            "lambda_im",
            "residual",
            "cond_boundary",
            "cond_dirichlet",
            "threshold",
            "pass",
        ]);
        let mut pass = true;
        let mut worst = 0.0_f64;
        for r in &reports {
            let th = tol * (r.cond_boundary * r.cond_dirichlet).max(1.0);
            let ok = r.residual <= th;
            pass &= ok;
            worst = worst.max(r.residual);
            let [re, im] = cx(r.lambda);
            t.push(vec![
                re,
                im,
                r.residual.into(),
                r.cond_boundary.into(),
                r.cond_dirichlet.into(),
                th.into(),
                ok.into(),
            ]);
        }
        let mut s = SuiteResult::new("krein", format!("residual <= {tol:e} * max(1, cond)"), t);
        s.note("max_residual", worst);
        s.pass = pass;
        Ok(s)
    }

    fn mfunction(&self, model: &DiscreteModel) -> Result<SuiteResult> {
        let tol = self.cfg.thresholds.identity;
        let cm = self.cop.to_matrix(model)?;
        let reports: Vec<_> = self
            .cfg
            .lambdas
            .par_iter()
            .map(|&l| m_function_matrix(model, &cm, l))
            .collect::<kreinlab::Result<_>>()?;
        let mut t = Table::new(&["lambda_re", "lambda_im", "m_norm", "residual", "cond", "threshold", "pass"]);
        let mut pass = true;
        for r in &reports {
            let th = tol * r.cond.max(1.0);
            let ok = r.residual <= th;
            pass &= ok;
            let [re, im] = cx(r.lambda);
            let norm = weighted_op_norm(&r.m_matrix, &model.w_b, &model.w_b);
            t.push(vec![re, im, norm.into(), r.residual.into(), r.cond.into(), th.into(), ok.into()]);
        }
        let mut s = SuiteResult::new("mfunction", format!("||M L + I|| <= {tol:e} * cond"), t);
        s.pass = pass;
        Ok(s)
    }

    fn spectrum(&self, model: &DiscreteModel) -> Result<(SuiteResult, Vec<Complex64>)> {
        let grid = self.cfg.scan_grid();
        let rep = spectrum_scan(model, &self.cop, &grid)?;
        let mut t = Table::new(&["lambda_re", "lambda_im", "sigma_min", "sigma_max", "sigma_rel"]);
        let mut pts = Vec::new();
        for p in &rep.points {
            let [re, im] = cx(p.lambda);
            let (lo, hi) = (p.sigma_min.unwrap_or(f64::NAN), p.sigma_max.unwrap_or(f64::NAN));
            if (lo / hi).is_finite() && lo > 0.0 {
                pts.push((p.lambda.re, (lo / hi).log10()));
            }
            t.push(vec![re, im, lo.into(), hi.into(), (lo / hi).into()]);
        }
        let mut ct = Table::new(&["lambda_re", "lambda_im", "relative_sigma", "method"]);
        for c in &rep.candidates {
            let [re, im] = cx(c.lambda);
            ct.push(vec![
                re,
                im,
                c.relative_sigma.unwrap_or(f64::NAN).into(),
                format!("{:?}", c.method).into(),
            ]);
        }
        let cands: Vec<Complex64> = rep.candidates.iter().map(|c| c.lambda).collect();
        let th = &self.cfg.thresholds;
        let (criterion, pass) = match th.spectrum_target {
            Some(target) => {
                let best = nearest(&cands, target);
                (
                    format!("a candidate within {} of {target}", th.spectrum_rel),
                    best.is_some_and(|z| (z.re - target).abs() <= th.spectrum_rel * target.abs() && z.im.abs() <= th.spectrum_rel * target.abs()),
                )
            }
            None => ("informational".to_string(), true),
        };
        let mut s = SuiteResult::new("spectrum", criterion, t);
        s.note("candidates", cands.len());
        if let Some(target) = th.spectrum_target {
            if let Some(z) = nearest(&cands, target) {
                s.note("hit_re", z.re);
                s.note("hit_im", z.im);
                s.note("hit_rel_error", (z - target).norm() / target.abs());
            }
        }
        s.pass = pass;
        s.table_extra = Some(("candidates".into(), ct));
        if !pts.is_empty() {
            s.plots.push(("spectrum".into(), pts, cands.iter().map(|z| z.re).collect()));
        }
        Ok((s, cands))
    }

    fn kernel(&self, model: &DiscreteModel, candidates: &mut Option<Vec<Complex64>>) -> Result<SuiteResult> {
        if candidates.is_none() {
            *candidates = Some(self.spectrum(model)?.1);
        }
        let cands = candidates.as_ref().unwrap();
        let pick = match self.cfg.thresholds.spectrum_target {
            Some(t) => nearest(cands, t),
            None => cands.first().copied(),
        }
        .ok_or_else(|| anyhow::anyhow!("no spectrum candidate to examine"))?;
        let r = neumann_realization(model, &self.cop)?;
        let lambda = polish_eigenvalue(model, &r, pick)?;
        let k = kernel_range_check(model, &self.cop, lambda)?;
        let tol = self.cfg.thresholds.kernel_angle;
        let mut t = Table::new(&[
            "lambda_re",
            "lambda_im",
            "dim_ker_l",
            "dim_ker_a",
            "kernel_angle",
            "dim_coker_l",
            "dim_coker_a",
            "range_angle",
            "rank_defect",
        ]);
        let [re, im] = cx(lambda);
        t.push(vec![
            re,
            im,
            k.dim_ker_l.into(),
            k.dim_ker_a.into(),
            k.kernel_angle.into(),
            k.dim_coker_l.into(),
            k.dim_coker_a.into(),
            k.range_angle.into(),
            k.rank_defect.into(),
        ]);
        let mut s = SuiteResult::new("kernel", format!("equal dimensions and principal angles <= {tol:e}"), t);
        s.pass = k.dim_ker_l > 0
            && k.dim_ker_l == k.dim_ker_a
            && k.dim_coker_l == k.dim_coker_a
            && k.kernel_angle <= tol
            && k.range_angle <= tol;
        s.note("multiplicity", k.dim_ker_a);
        Ok(s)
    }

    /// Steklov-type eigenvalues `-eig P⁰` across the resolution ladder and
    /// the observed convergence rate of successive differences.
    fn dtn_ladder(&mut self) -> Result<SuiteResult> {
        let rungs: Vec<f64> = self.cfg.resolution.iter().map(|r| 1.0 / r).collect();
        let mut spectra: Vec<Vec<f64>> = Vec::new();
        let mut t = Table::new(&["h", "m", "index", "value", "change"]);
        for &h in &rungs {
            let model = self.model(h)?;
            let p = dtn(&model, Complex64::new(0.0, 0.0))?.matrix;
            let e = steklov_values(&p, STEKLOV_COUNT)?;
            for (k, v) in e.iter().enumerate() {
                let change = spectra.last().and_then(|prev: &Vec<f64>| prev.get(k)).map(|p| (v - p).abs());
                t.push(vec![h.into(), model.m().into(), k.into(), (*v).into(), change.unwrap_or(f64::NAN).into()]);
            }
            spectra.push(e);
        }
        let window = 8;
        let diffs: Vec<f64> = spectra
            .windows(2)
            .map(|w| {
                (1..=window.min(w[0].len() - 1).min(w[1].len() - 1))
                    .map(|k| (w[1][k] - w[0][k]).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let rates: Vec<f64> = (1..diffs.len())
            .map(|k| (diffs[k - 1] / diffs[k]).ln() / (rungs[k] / rungs[k + 1]).ln())
            .collect();
        let need = self.cfg.thresholds.dtn_rate;
        let mut s = SuiteResult::new("dtn", format!("observed rate >= {need} (needs three rungs)"), t);
        for (k, r) in rates.iter().enumerate() {
            s.note(&format!("rate_{k}"), *r);
        }
        s.pass = rates.iter().all(|r| *r >= need);
        if rates.is_empty() {
            s.note("rate", "not measurable");
        }
        Ok(s)
    }

    fn subspace(&self, model: &DiscreteModel) -> Result<SuiteResult> {
        let tol = self.cfg.thresholds.identity;
        let n = self.cfg.subspace_modes;
        let x1 = fourier_modes(model.m(), n);
        let l1 = CMat::zeros(x1.ncols(), x1.ncols());
        let reports: Vec<_> = self
            .cfg
            .lambdas
            .par_iter()
            .map(|&l| subspace_realization(model, &l1, &x1, &x1, l).map(|(_, r)| r))
            .collect::<kreinlab::Result<_>>()?;
        let mut t = Table::new(&["lambda_re", "lambda_im", "residual", "cond", "threshold", "pass"]);
        let mut pass = true;
        for r in &reports {
            let th = tol * (r.cond_boundary * r.cond_dirichlet).max(1.0);
            let ok = r.residual <= th;
            pass &= ok;
            let [re, im] = cx(r.lambda);
            t.push(vec![re, im, r.residual.into(), (r.cond_boundary * r.cond_dirichlet).into(), th.into(), ok.into()]);
        }
        let mut s = SuiteResult::new("subspace", format!("Krein residual <= {tol:e} * cond, modes |n| <= {n}"), t);
        s.pass = pass;
        Ok(s)
    }

    fn ellipticity(&self, model: &DiscreteModel) -> Result<SuiteResult> {
        let theta = self.cfg.ray.as_ref().map(|r| r.theta).unwrap_or(0.0);
        let rep = param_ellipticity_check(&self.op, &self.cop, theta, &model.mesh.frames, 64);
        let need = self.cfg.thresholds.ellipticity_margin;
        let mut t = Table::new(&["theta", "flag", "margin", "frame", "xi", "mu"]);
        t.push(vec![
            theta.into(),
            rep.flag.into(),
            rep.margin.into(),
            rep.worst.0.into(),
            rep.worst.1.into(),
            rep.worst.2.into(),
        ]);
        let mut s = SuiteResult::new("ellipticity", format!("parameter-elliptic with margin >= {need}"), t);
        s.pass = rep.flag && rep.margin >= need;
        Ok(s)
    }

    fn ray(&self, model: &DiscreteModel) -> Result<SuiteResult> {
        let ray = self.cfg.ray_spec().expect("validated")?;
        let q = self.cfg.ray.as_ref().unwrap().quantity;
        let fit = ray_decay_fit(model, &self.cop, &ray, q)?;
        let qname = match q {
            RayQuantity::MNorm => "m_norm",
            RayQuantity::Remainder => "remainder",
        };
        let mut t = Table::new(&["mu", "lambda_re", "lambda_im", "quantity", "certificate"]);
        for p in &fit.points {
            let [re, im] = cx(p.lambda);
            // ‖R‖ < 1/2 certifies inversion of the full problem by a Neumann
            // series around the frozen one
            let cert = match q {
                RayQuantity::Remainder if p.value < 0.5 => "neumann",
                RayQuantity::Remainder => "none",
                RayQuantity::MNorm => "-",
            };
            t.push(vec![p.mu.into(), re, im, p.value.into(), cert.into()]);
        }
        let th = &self.cfg.thresholds;
        let mut s = SuiteResult::new(
            "ray",
            format!("{qname} slope in [{}, {}]", th.ray_slope_min, th.ray_slope_max),
            t,
        );
        s.note("quantity", qname);
        s.note("slope", fit.slope);
        s.note("intercept", fit.intercept);
        s.note("skipped", fit.skipped.len());
        s.pass = fit.slope >= th.ray_slope_min && fit.slope <= th.ray_slope_max;
        let pts: Vec<(f64, f64)> = fit.points.iter().map(|p| (p.mu, p.value)).collect();
        s.decay = Some((pts, fit.slope, fit.intercept));
        Ok(s)
    }
}

fn failed(name: &str, e: &anyhow::Error) -> SuiteResult {
    let mut s = SuiteResult::new(name, "completes without error", Table::new(&["error"]));
    s.table.push(vec![format!("{e:#}").into()]);
    s.note("error", format!("{e:#}"));
    s
}

fn nearest(c: &[Complex64], target: f64) -> Option<Complex64> {
    c.iter()
        .copied()
        .min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()))
}

/// The `count` smallest values of `-Re eig P`.
pub fn steklov_values(p: &CMat, count: usize) -> kreinlab::Result<Vec<f64>> {
    let mut e: Vec<f64> = eigenvalues(p)?.iter().map(|z| -z.re).collect();
    e.sort_by(f64::total_cmp);
    e.truncate(count);
    Ok(e)
}

/// Writes the report, the per-suite CSVs and the plot data into `dir`.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    report.write(dir)?;
    let mut files = vec![dir.join("report.json")];
    for s in &report.suites {
        files.push(dir.join(format!("{}.csv", s.name)));
        if let Some((name, t)) = &s.table_extra {
            let p = dir.join(format!("{}_{name}.csv", s.name));
            t.write_csv(&p)?;
            files.push(p);
        }
        for (stem, pts, marks) in &s.plots {
            files.extend(plot::emit_scan(dir, stem, pts, marks)?);
        }
        if let Some((pts, slope, icept)) = &s.decay {
            files.extend(plot::emit_decay(dir, "decay", pts, *slope, *icept)?);
        }
    }
    Ok(files)
}

/// Sampled Hölder norms of every chart graph at `2^level + 1` samples.
pub fn holder_table(cfg: &ExperimentConfig, domain: &DomainSpec) -> Result<SuiteResult> {
    let mut t = Table::new(&["chart", "level", "samples", "k", "sigma", "norm"]);
    let mut pass = true;
    for (i, ch) in domain.charts.iter().enumerate() {
        for &level in &cfg.holder_levels {
            let n = (1usize << level) + 1;
            let g = ch.graph.resampled(n)?;
            let v = holder_norm(&g, cfg.holder_k, cfg.holder_sigma)?;
            pass &= v.is_finite();
            t.push(vec![i.into(), (level as usize).into(), n.into(), (cfg.holder_k as usize).into(), cfg.holder_sigma.into(), v.into()]);
        }
    }
    let mut s = SuiteResult::new("holder", "finite norms", t);
    s.pass = pass;
    Ok(s)
}
