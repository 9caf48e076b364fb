//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so that the lines are always
//! printed and the criteria run one after another, which keeps the wall-clock
//! limits honest on a single core. Pass criterion numbers as arguments to run
//! a subset: `cargo test --test acceptance -- 3 4`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use kreinlab::discretize::cache::{bit_identical, from_bytes, to_bytes};
use kreinlab::discretize::{assemble_on, DiscreteModel, EllipticOperatorSpec};
use kreinlab::dirichlet::dirichlet_spectrum;
use kreinlab::dtn::{
    dtn, kernel_range_check, neumann_realization, param_ellipticity_check, polish_eigenvalue, spectrum_scan,
    BoundaryOperator,
};
use kreinlab::extension::{realization_from_t, t_from_realization};
use kreinlab::geometry::{unit_disk, unit_square_rounded, DomainSpec};
use kreinlab::linalg::{c, eigenvalues, rel_diff};
use kreinlab::parameter::{mu_bracket, order_reduce_boundary, ray_decay_fit, sobolev_norm_boundary, Ray, RayQuantity};
use kreinlab::suite::{identity_suite, standard_conditions, standard_lambdas, standard_operators, IdentitySuite};
use kreinlab::Complex64;
use kreinlab_cli::runner::write_outputs;
use kreinlab_cli::{cache::ModelCache, ExperimentConfig, Runner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Corner radius of the rounded square.
const CORNER: f64 = 0.1;

struct Outcome {
    pass: bool,
    detail: String,
}

#[derive(Default)]
struct Shared {
    /// Identity suites on the rounded square and the time they took.
    square: Option<(Vec<IdentitySuite>, Duration)>,
}

// --- independent oracles ------------------------------------------------

/// `J_n(x)` by its power series; accurate to rounding for `x < 10`.
fn bessel_j(n: u32, x: f64) -> f64 {
    let mut term = (x / 2.0).powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..80 {
        let k = k as f64;
        term *= -(x * x / 4.0) / (k * (k + n as f64));
        sum += term;
    }
    sum
}

fn bessel_j_prime(n: u32, x: f64) -> f64 {
    // J_n' = J_{n-1} - (n/x) J_n, and J_0' = -J_1
    if n == 0 {
        -bessel_j(1, x)
    } else {
        bessel_j(n - 1, x) - n as f64 / x * bessel_j(n, x)
    }
}

/// Root of `f` near `x0` by the secant method.
fn root(f: impl Fn(f64) -> f64, x0: f64) -> f64 {
    let (mut a, mut b) = (x0, x0 + 1e-3);
    for _ in 0..100 {
        let (fa, fb) = (f(a), f(b));
        if fb == fa {
            break;
        }
        let next = b - fb * (b - a) / (fb - fa);
        a = b;
        b = next;
        if (b - a).abs() < 1e-15 {
            break;
        }
    }
    b
}

/// First Dirichlet eigenvalue of the unit disk, `j_{0,1}²`.
fn disk_dirichlet() -> f64 {
    root(|x| bessel_j(0, x), 2.4).powi(2)
}

/// First nonzero Neumann eigenvalue of the unit disk, `j'_{1,1}²`.
fn disk_neumann() -> f64 {
    root(|x| bessel_j_prime(1, x), 1.84).powi(2)
}

// --- helpers ----------------------------------------------------------

fn laplace() -> EllipticOperatorSpec {
    EllipticOperatorSpec::laplace()
}

fn square() -> DomainSpec {
    unit_square_rounded(CORNER).expect("rounded square")
}

/// `-Re eig P⁰` in increasing order.
fn steklov(model: &DiscreteModel, count: usize) -> Vec<f64> {
    let p = dtn(model, c(0.0, 0.0)).expect("DtN map").matrix;
    let mut e: Vec<f64> = eigenvalues(&p).expect("eigenvalues").iter().map(|z| -z.re).collect();
    e.sort_by(f64::total_cmp);
    e.truncate(count);
    e
}

fn scan_grid(from: f64, to: f64, points: usize) -> Vec<Complex64> {
    (0..points)
        .map(|k| c(from + (to - from) * k as f64 / (points - 1) as f64, 0.0))
        .collect()
}

fn nearest(cands: &[Complex64], target: f64) -> Option<Complex64> {
    cands
        .iter()
        .copied()
        .min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()))
}

fn identity_matrix(dom: &DomainSpec, h: f64) -> Vec<IdentitySuite> {
    let mut out = Vec::new();
    for op in standard_operators() {
        let model = assemble_on(&op, dom, h).expect("assembly");
        for cop in standard_conditions() {
            out.push(identity_suite(&model, &cop, &standard_lambdas(), 11, 1e-10).expect("identity suite"));
        }
    }
    out
}

fn summarize(suites: &[IdentitySuite], s: &mut String) -> bool {
    let mut pass = true;
    for st in suites {
        pass &= st.pass();
        if !st.pass() {
            let w = st.worst().unwrap();
            let _ = write!(
                s,
                " [{} / {} / {}: {} residual {:.2e} > {:.2e}]",
                st.mesh_id, st.operator, st.condition, w.identity, w.residual, w.threshold
            );
        }
    }
    let worst = suites
        .iter()
        .flat_map(|st| st.records.iter())
        .map(|r| r.residual / r.threshold)
        .fold(0.0, f64::max);
    let count: usize = suites.iter().map(|st| st.records.len()).sum();
    let _ = write!(s, " {count} residuals, worst residual/threshold {worst:.2e}");
    pass
}

fn square_suites(shared: &mut Shared) -> &(Vec<IdentitySuite>, Duration) {
    shared.square.get_or_insert_with(|| {
        let t = Instant::now();
        let s = identity_matrix(&square(), 0.02);
        (s, t.elapsed())
    })
}

// --- criteria ---------------------------------------------------------

fn criterion_1(shared: &mut Shared) -> Outcome {
    let t = Instant::now();
    let disk = identity_matrix(&unit_disk(), 0.033);
    let disk_time = t.elapsed();
    let (sq, sq_time) = square_suites(shared);
    let total = disk_time + *sq_time;
    let mut detail = format!(
        "disk N={} and square N={}:",
        disk[0].mesh_id,
        sq[0].mesh_id
    );
    let mut pass = summarize(&disk, &mut detail);
    pass &= summarize(sq, &mut detail);
    let in_time = total <= Duration::from_secs(300);
    let _ = write!(detail, "; matrix time {:.0} s (limit 300 s)", total.as_secs_f64());
    Outcome {
        pass: pass && in_time,
        detail,
    }
}

fn criterion_2(_: &mut Shared) -> Outcome {
    // separation of variables: r^|n| e^{inθ} is harmonic with ∂_r = |n| on
    // the unit circle, so P⁰ has eigenvalues -|n|, each n ≠ 0 twice
    let hs = [0.2, 0.1, 0.05, 0.025];
    let mut errs: Vec<Vec<f64>> = Vec::new();
    for h in hs {
        let model = assemble_on(&laplace(), &unit_disk(), h).expect("assembly");
        let e = steklov(&model, 17);
        let per_n: Vec<f64> = (0..=8usize)
            .map(|n| {
                if n == 0 {
                    e[0].abs()
                } else {
                    (e[2 * n - 1] - n as f64).abs().max((e[2 * n] - n as f64).abs())
                }
            })
            .collect();
        errs.push(per_n);
    }
    let finest = errs.last().unwrap();
    let worst_rel = (1..=8).map(|n| finest[n] / n as f64).fold(0.0, f64::max);
    let min_factor = (1..errs.len())
        .flat_map(|k| (1..=8).map(move |n| (k, n)))
        .map(|(k, n)| errs[k - 1][n] / errs[k][n])
        .fold(f64::INFINITY, f64::min);
    let pass = worst_rel <= 0.05 && finest[0] <= 0.05 && min_factor >= 1.7;
    Outcome {
        pass,
        detail: format!(
            "h = 0.2 .. 0.025: worst relative error at h = 0.025 is {worst_rel:.2e} (|n| <= 8, limit 5e-2), n = 0 error {:.1e}, smallest reduction per halving {min_factor:.2} (limit 1.7)",
            finest[0]
        ),
    }
}

fn criterion_3(_: &mut Shared) -> Outcome {
    let mut detail = String::new();
    let mut pass = true;
    let mut check = |what: &str, got: Option<f64>, want: f64, tol: f64, time: Duration| {
        let ok = got.is_some_and(|g| (g - want).abs() <= tol * want) && time <= Duration::from_secs(60);
        pass &= ok;
        let _ = write!(
            detail,
            "{what} {} vs {want:.4} ({:.1} s){}; ",
            got.map(|g| format!("{g:.4}")).unwrap_or("none".into()),
            time.as_secs_f64(),
            if ok { "" } else { " FAILED" }
        );
    };
    let dd = disk_dirichlet();

    let t = Instant::now();
    let model = assemble_on(&laplace(), &unit_disk(), 0.05).expect("assembly");
    let ev = dirichlet_spectrum(&model, 1).ok().map(|v| v[0].re);
    check("Dirichlet disk", ev, dd, 0.01, t.elapsed());

    let t = Instant::now();
    let model = assemble_on(&laplace(), &square(), 0.025).expect("assembly");
    let ev = dirichlet_spectrum(&model, 1).ok().map(|v| v[0].re);
    // separation of variables on the unit square: 2π²
    check("Dirichlet square", ev, 2.0 * PI * PI, 0.01, t.elapsed());

    let grid = scan_grid(0.5, 10.0, 96);
    let t = Instant::now();
    let model = assemble_on(&laplace(), &unit_disk(), 0.1).expect("assembly");
    let nn = disk_neumann();
    let sc = spectrum_scan(&model, &BoundaryOperator::neumann(), &grid).expect("scan");
    let hit = nearest(&sc.candidates.iter().map(|k| k.lambda).collect::<Vec<_>>(), nn).map(|z| z.re);
    check("Neumann disk scan", hit, nn, 0.02, t.elapsed());

    let t = Instant::now();
    let sc = spectrum_scan(&model, &BoundaryOperator::robin(c(1e8, 0.0)), &grid).expect("scan");
    let hit = nearest(&sc.candidates.iter().map(|k| k.lambda).collect::<Vec<_>>(), dd).map(|z| z.re);
    check("Robin 1e8 disk scan", hit, dd, 0.02, t.elapsed());
    Outcome { pass, detail }
}

fn criterion_4(_: &mut Shared) -> Outcome {
    let model = assemble_on(&laplace(), &unit_disk(), 0.1).expect("assembly");
    let cop = BoundaryOperator::neumann();
    let sc = spectrum_scan(&model, &cop, &scan_grid(0.5, 10.0, 96)).expect("scan");
    let Some(guess) = nearest(&sc.candidates.iter().map(|k| k.lambda).collect::<Vec<_>>(), disk_neumann()) else {
        return Outcome {
            pass: false,
            detail: "no Neumann eigenvalue detected".into(),
        };
    };
    let r = neumann_realization(&model, &cop).expect("realization");
    let lambda = polish_eigenvalue(&model, &r, guess).expect("polish");
    let k = kernel_range_check(&model, &cop, lambda).expect("kernel check");
    let pass = k.kernel_angle <= 1e-6 && k.dim_ker_l == 2 && k.dim_ker_a == 2;
    Outcome {
        pass,
        detail: format!(
            "λ = {:.6}: dim ker L = {}, dim ker(Ã - λ) = {}, largest principal angle {:.2e} (limit 1e-6)",
            lambda.re, k.dim_ker_l, k.dim_ker_a, k.kernel_angle
        ),
    }
}

fn criterion_5(_: &mut Shared) -> Outcome {
    let model = assemble_on(&laplace(), &unit_disk(), 0.1).expect("assembly");
    let frames = &model.mesh.frames;
    // on the unit circle ξ'² + μ² = 1 the Neumann symbol gap |0 + √(ξ'² + μ²)|
    // is identically 1
    let good = param_ellipticity_check(&laplace(), &BoundaryOperator::neumann(), 0.0, frames, 64);
    // C = -2|n|: |-2|ξ'| + √(ξ'² + μ²)| vanishes at μ² = 3ξ'²
    let bad = param_ellipticity_check(&laplace(), &BoundaryOperator::abs_multiplier(-2.0), 0.0, frames, 64);
    let xi_oracle = 0.5;
    let pass = good.flag
        && good.margin >= 0.5
        && (good.margin - 1.0).abs() <= 1e-9
        && !bad.flag
        && bad.margin < 1e-3
        && (bad.worst.1.abs() - xi_oracle).abs() <= 1e-3;
    Outcome {
        pass,
        detail: format!(
            "Neumann θ = 0: flag {}, margin {:.12} (closed form 1); C = -2|n|: flag {}, margin {:.2e} at |ξ'| = {:.4} (closed form 0 at 0.5)",
            good.flag,
            good.margin,
            bad.flag,
            bad.margin,
            bad.worst.1.abs()
        ),
    }
}

fn criterion_6(_: &mut Shared) -> Outcome {
    let ray = Ray::geometric(0.0, 2.0, 64.0, 11).expect("ray");
    let cop = BoundaryOperator::neumann();
    let model = assemble_on(&laplace().with_shift(1.0), &unit_disk(), 0.1).expect("assembly");
    let m = ray_decay_fit(&model, &cop, &ray, RayQuantity::MNorm);
    let var = &standard_operators()[1];
    let vmodel = assemble_on(var, &unit_disk(), 0.1).expect("assembly");
    let r = ray_decay_fit(&vmodel, &cop, &ray, RayQuantity::Remainder);
    match (m, r) {
        (Ok(m), Ok(r)) => Outcome {
            // flat-model symbol 1/√(ξ'² + μ²): sup over ξ' decays like μ^{-1}
            pass: (m.slope + 1.0).abs() <= 0.2 && r.slope <= -0.5,
            detail: format!(
                "‖M_L(-μ²)‖ slope {:.3} (oracle -1 ± 0.2), frozen-coefficient remainder slope {:.3} (limit -0.5), μ in [2, 64]",
                m.slope, r.slope
            ),
        },
        (m, r) => Outcome {
            pass: false,
            detail: format!("fit failed: {:?} / {:?}", m.err(), r.err()),
        },
    }
}

fn criterion_7(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d75);
    let cases = 10_000;
    let (mut bad_ineq, mut bad_group) = (0, 0);
    let mut worst_group = 0.0_f64;
    for _ in 0..cases {
        let m = 1usize << rng.random_range(3..=7);
        let phi: Vec<Complex64> = (0..m)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        // ‖φ‖_{s',μ} <= ⟨μ⟩^{s'-s} ‖φ‖_{s,μ} for s' <= s: per mode,
        // (1 + n² + μ²)^{s'-s} <= (1 + μ²)^{s'-s}
        let s = rng.random_range(-2.0..2.0);
        let sp = s - rng.random_range(0.0..3.0);
        let mu = rng.random_range(0.0..100.0);
        let lhs = sobolev_norm_boundary(&phi, sp, mu).unwrap();
        let rhs = mu_bracket(mu).powf(sp - s) * sobolev_norm_boundary(&phi, s, mu).unwrap();
        if lhs > rhs * (1.0 + 1e-12) {
            bad_ineq += 1;
        }
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let two = order_reduce_boundary(&order_reduce_boundary(&phi, b).unwrap(), a).unwrap();
        let one = order_reduce_boundary(&phi, a + b).unwrap();
        let num: f64 = two.iter().zip(&one).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = one.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
        let rel = num / den;
        worst_group = worst_group.max(rel);
        if rel > 1e-12 {
            bad_group += 1;
        }
    }
    Outcome {
        pass: bad_ineq == 0 && bad_group == 0,
        detail: format!(
            "{cases} cases: {bad_ineq} interpolation violations, {bad_group} group-law violations (worst relative defect {worst_group:.1e})"
        ),
    }
}

fn criterion_8(shared: &mut Shared) -> Outcome {
    let (sq, _) = square_suites(shared);
    let mut detail = format!("rounded square (corner radius {CORNER}) identities:");
    let ids = summarize(sq, &mut detail);
    let hs = [0.1, 0.05, 0.025, 0.0125];
    let spectra: Vec<Vec<f64>> = hs
        .iter()
        .map(|&h| steklov(&assemble_on(&laplace(), &square(), h).expect("assembly"), 9))
        .collect();
    // successive differences of the first eight nonzero Steklov eigenvalues
    let diffs: Vec<f64> = spectra
        .windows(2)
        .map(|w| (1..9).map(|k| (w[1][k] - w[0][k]).abs()).fold(0.0, f64::max))
        .collect();
    let rates: Vec<f64> = diffs.windows(2).map(|d| (d[0] / d[1]).log2()).collect();
    let rate_ok = rates.iter().all(|r| *r >= 1.0);
    let _ = write!(
        detail,
        "; DtN successive-difference rates {:?} (limit 1.0)",
        rates.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
    );
    Outcome {
        pass: ids && rate_ok,
        detail,
    }
}

fn bundled_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/disk_neumann.cfg")
}

fn criterion_9(_: &mut Shared) -> Outcome {
    let mut detail = String::new();
    // cache format
    let op = standard_operators().remove(2);
    let model = assemble_on(&op, &unit_disk(), 0.1).expect("assembly");
    let bytes = to_bytes(&model);
    let back = from_bytes(&bytes, model.mesh.clone(), op).expect("read back");
    let cache_ok = bit_identical(&model, &back);
    let _ = write!(detail, "cache round-trip bit-exact: {cache_ok}; ");

    // T ↔ Ã
    let mut worst = 0.0_f64;
    for cop in standard_conditions() {
        let r = neumann_realization(&model, &cop).expect("realization");
        let ext = t_from_realization(&r, &model).expect("T");
        let r2 = realization_from_t(&ext, &model).expect("realization from T");
        let ext2 = t_from_realization(&r2, &model).expect("T again");
        worst = worst
            .max(rel_diff(&r.y, &r2.y))
            .max(rel_diff(&ext.t_matrix, &ext2.t_in_bases(&model, &ext.v_basis, &ext.w_basis)));
    }
    let t_ok = worst <= 1e-10;
    let _ = write!(detail, "T <-> Ã round-trip defect {worst:.1e} (limit 1e-10); ");

    // two runs of the bundled configuration, the second from a warm cache
    let cache_dir = tempfile::tempdir().expect("tempdir");
    let outs = [tempfile::tempdir().expect("tempdir"), tempfile::tempdir().expect("tempdir")];
    let mut reports = Vec::new();
    for out in &outs {
        let cfg = ExperimentConfig::from_path(&bundled_config()).expect("bundled config");
        let mut runner = Runner::new(cfg.clone(), Some(ModelCache::new(cache_dir.path()))).expect("runner");
        let rep = runner.run(&cfg.suites).expect("run");
        write_outputs(&rep, out.path()).expect("outputs");
        reports.push(rep);
    }
    let json_same = reports[0].deterministic_json() == reports[1].deterministic_json();
    let mut csv_same = true;
    for e in std::fs::read_dir(outs[0].path()).unwrap() {
        let name = e.unwrap().file_name();
        if name == "report.json" {
            continue;
        }
        let a = std::fs::read(outs[0].path().join(&name)).unwrap();
        let b = std::fs::read(outs[1].path().join(&name)).unwrap_or_default();
        csv_same &= a == b;
    }
    let _ = write!(
        detail,
        "reports identical without timings: {json_same}, data files identical: {csv_same}"
    );
    Outcome {
        pass: cache_ok && t_ok && json_same && csv_same,
        detail,
    }
}

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, fn(&mut Shared) -> Outcome); 9] = [
        (1, "exact identities", criterion_1),
        (2, "disk DtN spectrum", criterion_2),
        (3, "spectral oracles", criterion_3),
        (4, "kernel relation", criterion_4),
        (5, "parameter ellipticity", criterion_5),
        (6, "ray decay", criterion_6),
        (7, "interpolation and group law", criterion_7),
        (8, "rounded-square robustness", criterion_8),
        (9, "determinism and round-trips", criterion_9),
    ];
    let mut shared = Shared::default();
    let mut failures = 0;
    for (k, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&k) {
            continue;
        }
        let t = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(|| f(&mut shared))).unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!(
                "panicked: {}",
                e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
            ),
        });
        if !o.pass {
            failures += 1;
        }
        println!(
            "criterion {k} {}: {name} ({:.1} s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
