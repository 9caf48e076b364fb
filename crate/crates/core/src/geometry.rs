//! Planar C^{k,σ} domains described by boundary graph charts.
//!
//! Chart convention: in chart coordinates `(y', y_n)` the box is
//! `max(|y'|, |y_n|) < a`, the boundary is `y_n = f(y')` and the domain lies
//! on the side `y_n > f(y')`. Walking along increasing `y'` is therefore the
//! counter-clockwise direction for the outer boundary.
//!
//! Besides the charts every domain carries a periodic boundary curve
//! `t -> γ(t)`, `t ∈ [0, 2π)`, used for boundary frames and meshing.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Tolerance for agreement of charts on their overlaps (world coordinates).
pub const OVERLAP_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Smoothness {
    pub k: u32,
    pub sigma: f64,
}

impl Smoothness {
    pub fn new(k: u32, sigma: f64) -> Self {
        Smoothness { k, sigma }
    }

    /// `τ = k + σ`
    pub fn tau(&self) -> f64 {
        self.k as f64 + self.sigma
    }
}

type Analytic = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Graph function sampled on a uniform grid of `[lo, hi]`, optionally backed
/// by a closed form.
#[derive(Clone)]
pub struct GraphFunction {
    pub samples: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
    pub analytic_form: Option<String>,
    pub claimed_smoothness: Smoothness,
    analytic: Option<Analytic>,
}

impl fmt::Debug for GraphFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphFunction")
            .field("n", &self.samples.len())
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("analytic_form", &self.analytic_form)
            .field("claimed_smoothness", &self.claimed_smoothness)
            .finish()
    }
}

impl GraphFunction {
    pub fn from_samples(lo: f64, hi: f64, samples: Vec<f64>, smooth: Smoothness) -> Result<Self> {
        if samples.len() < 4 || !(hi > lo) {
            return Err(Error::Domain(
                "graph function needs at least 4 samples on a nondegenerate interval".into(),
            ));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("graph samples must be finite".into()));
        }
        Ok(GraphFunction {
            samples,
            lo,
            hi,
            analytic_form: None,
            claimed_smoothness: smooth,
            analytic: None,
        })
    }

    pub fn from_fn<F>(lo: f64, hi: f64, n: usize, tag: &str, smooth: Smoothness, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let f: Analytic = Arc::new(f);
        let samples = grid(lo, hi, n).map(|y| f(y)).collect();
        GraphFunction {
            samples,
            lo,
            hi,
            analytic_form: Some(tag.to_string()),
            claimed_smoothness: smooth,
            analytic: Some(f),
        }
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.samples.len() - 1) as f64
    }

    pub fn has_closed_form(&self) -> bool {
        self.analytic.is_some()
    }

    /// Same function on a grid of `n` points. Needs the closed form.
    pub fn resampled(&self, n: usize) -> Result<GraphFunction> {
        let f = self
            .analytic
            .clone()
            .ok_or_else(|| Error::Sampling("resampling needs a closed-form graph".into()))?;
        let samples = grid(self.lo, self.hi, n).map(|y| f(y)).collect();
        Ok(GraphFunction {
            samples,
            lo: self.lo,
            hi: self.hi,
            analytic_form: self.analytic_form.clone(),
            claimed_smoothness: self.claimed_smoothness,
            analytic: Some(f),
        })
    }

    /// Restriction of the closed form to a subinterval, sampled with `n` points.
    pub fn restricted(&self, lo: f64, hi: f64, n: usize) -> Result<GraphFunction> {
        let mut g = self.resampled(n)?;
        let f = g.analytic.clone().unwrap();
        g.lo = lo;
        g.hi = hi;
        g.samples = grid(lo, hi, n).map(|y| f(y)).collect();
        Ok(g)
    }

    pub fn eval(&self, y: f64) -> f64 {
        if let Some(f) = &self.analytic {
            return f(y);
        }
        // four-point Lagrange interpolation on the uniform grid
        let n = self.samples.len();
        let h = self.spacing();
        let s = ((y - self.lo) / h).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).clamp(1, n - 3);
        let x = s - i as f64;
        let p = [
            self.samples[i - 1],
            self.samples[i],
            self.samples[i + 1],
            self.samples[i + 2],
        ];
        let xm1 = x + 1.0;
        let x1 = x - 1.0;
        let x2 = x - 2.0;
        -p[0] * x * x1 * x2 / 6.0 + p[1] * xm1 * x1 * x2 / 2.0 - p[2] * xm1 * x * x2 / 2.0
            + p[3] * xm1 * x * x1 / 6.0
    }

    pub fn sup_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + h * i as f64 })
}

/// Rigid motion from world to chart coordinates: `q = rot·p + shift`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap {
    pub rot: [[f64; 2]; 2],
    pub shift: [f64; 2],
}

impl AffineMap {
    pub fn from_reals(v: [f64; 6]) -> Result<Self> {
        let map = AffineMap {
            rot: [[v[0], v[1]], [v[2], v[3]]],
            shift: [v[4], v[5]],
        };
        let r = map.rot;
        let c1 = r[0][0] * r[0][0] + r[1][0] * r[1][0];
        let c2 = r[0][1] * r[0][1] + r[1][1] * r[1][1];
        let d = r[0][0] * r[0][1] + r[1][0] * r[1][1];
        if (c1 - 1.0).abs() > 1e-10 || (c2 - 1.0).abs() > 1e-10 || d.abs() > 1e-10 {
            return Err(Error::Domain("chart map is not a rigid motion".into()));
        }
        Ok(map)
    }

    pub fn to_reals(&self) -> [f64; 6] {
        [
            self.rot[0][0],
            self.rot[0][1],
            self.rot[1][0],
            self.rot[1][1],
            self.shift[0],
            self.shift[1],
        ]
    }

    /// Chart frame with origin `o`, tangential axis `t` and normal axis `n`.
    pub fn frame(o: Point, t: Point, n: Point) -> Self {
        let rot = [[t[0], t[1]], [n[0], n[1]]];
        let shift = [-(t[0] * o[0] + t[1] * o[1]), -(n[0] * o[0] + n[1] * o[1])];
        AffineMap { rot, shift }
    }

    pub fn to_chart(&self, p: Point) -> Point {
        let r = self.rot;
        [
            r[0][0] * p[0] + r[0][1] * p[1] + self.shift[0],
            r[1][0] * p[0] + r[1][1] * p[1] + self.shift[1],
        ]
    }

    pub fn to_world(&self, q: Point) -> Point {
        let r = self.rot;
        let a = q[0] - self.shift[0];
        let b = q[1] - self.shift[1];
        [r[0][0] * a + r[1][0] * b, r[0][1] * a + r[1][1] * b]
    }
}

#[derive(Clone, Debug)]
pub struct Chart {
    pub affine_map: AffineMap,
    pub box_size: f64,
    pub graph: GraphFunction,
}

impl Chart {
    pub fn in_box(&self, q: Point) -> bool {
        q[0].abs() < self.box_size && q[1].abs() < self.box_size
    }

    /// `F_j: (y', y_n) -> (y', y_n - f(y'))` after the rigid motion.
    pub fn flatten(&self, p: Point) -> Result<Point> {
        let q = self.affine_map.to_chart(p);
        if !self.in_box(q) {
            return Err(Error::OutsideChart(p[0], p[1]));
        }
        Ok([q[0], q[1] - self.graph.eval(q[0])])
    }

    pub fn unflatten(&self, z: Point) -> Result<Point> {
        if z[0].abs() >= self.box_size {
            return Err(Error::OutsideChart(z[0], z[1]));
        }
        let q = [z[0], z[1] + self.graph.eval(z[0])];
        Ok(self.affine_map.to_world(q))
    }

    /// World point of the boundary at chart abscissa `y'`.
    pub fn boundary_point(&self, y: f64) -> Point {
        self.affine_map.to_world([y, self.graph.eval(y)])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteriorPatch {
    pub center: Point,
    pub radius: f64,
}

/// Boundary curve with a global periodic parameter.
#[derive(Clone, Debug)]
pub enum BoundaryCurve {
    Disk { center: Point, radius: f64 },
    RoundedSquare { r: f64 },
    Star { eps: f64 },
    Stitched(Arc<StitchedCurve>),
}

impl BoundaryCurve {
    pub fn point(&self, t: f64) -> Point {
        match self {
            BoundaryCurve::Disk { center, radius } => {
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            }
            BoundaryCurve::RoundedSquare { r } => rounded_square(*r, t).0,
            BoundaryCurve::Star { eps } => {
                let rad = star_radius(*eps, t);
                [rad * t.cos(), rad * t.sin()]
            }
            BoundaryCurve::Stitched(s) => s.point(t),
        }
    }

    /// `dγ/dt`
    pub fn derivative(&self, t: f64) -> Point {
        match self {
            BoundaryCurve::Disk { radius, .. } => [-radius * t.sin(), radius * t.cos()],
            BoundaryCurve::RoundedSquare { r } => rounded_square(*r, t).1,
            BoundaryCurve::Star { eps } => {
                let s = (2.0 * t).sin();
                let rad = star_radius(*eps, t);
                let drad = 4.0 * eps * s.abs() * (2.0 * t).cos();
                [
                    drad * t.cos() - rad * t.sin(),
                    drad * t.sin() + rad * t.cos(),
                ]
            }
            BoundaryCurve::Stitched(s) => {
                let d = 1e-6;
                let a = s.point(t + d);
                let b = s.point(t - d);
                [(a[0] - b[0]) / (2.0 * d), (a[1] - b[1]) / (2.0 * d)]
            }
        }
    }

    pub fn has_analytic_normals(&self) -> bool {
        !matches!(self, BoundaryCurve::Stitched(_))
    }

    pub fn frame(&self, t: f64) -> BoundaryFrame {
        let t = t.rem_euclid(TAU);
        let d = self.derivative(t);
        let speed = d[0].hypot(d[1]);
        let tangent = [d[0] / speed, d[1] / speed];
        BoundaryFrame {
            point: self.point(t),
            interior_normal: [-tangent[1], tangent[0]],
            tangent,
            parameter: t,
            speed,
        }
    }

    /// Length by a fine chord sum (exact for the disk and rounded square).
    pub fn length(&self) -> f64 {
        match self {
            BoundaryCurve::Disk { radius, .. } => TAU * radius,
            BoundaryCurve::RoundedSquare { r } => 4.0 * (1.0 - 2.0 * r) + TAU * r,
            _ => {
                let n = 8192;
                let mut total = 0.0;
                let mut prev = self.point(0.0);
                for i in 1..=n {
                    let p = self.point(TAU * i as f64 / n as f64);
                    total += (p[0] - prev[0]).hypot(p[1] - prev[1]);
                    prev = p;
                }
                total
            }
        }
    }
}

fn star_radius(eps: f64, t: f64) -> f64 {
    let s = (2.0 * t).sin();
    1.0 + eps * s * s.abs()
}

/// Arclength parametrisation of the rounded unit square, starting at the
/// midpoint of the bottom side. Returns the point and `dγ/dt`.
fn rounded_square(r: f64, t: f64) -> (Point, Point) {
    let side = 1.0 - 2.0 * r;
    let quarter = side + 0.5 * PI * r;
    let total = 4.0 * quarter;
    let scale = total / TAU;
    let s = t.rem_euclid(TAU) * scale;
    let q = ((s / quarter).floor() as usize).min(3);
    let s = s - q as f64 * quarter;
    // piece in the reference quarter: half of the bottom side, the lower-right
    // corner arc, half of the right side
    let (p, d) = if s < 0.5 * side {
        ([0.5 + s, 0.0], [1.0, 0.0])
    } else if s < 0.5 * side + 0.5 * PI * r {
        let phi = (s - 0.5 * side) / r - 0.5 * PI;
        (
            [1.0 - r + r * phi.cos(), r + r * phi.sin()],
            [-phi.sin(), phi.cos()],
        )
    } else {
        let u = s - 0.5 * side - 0.5 * PI * r;
        ([1.0, r + u], [0.0, 1.0])
    };
    // rotate by q quarter turns about the center
    let (mut x, mut y) = (p[0] - 0.5, p[1] - 0.5);
    let (mut dx, mut dy) = (d[0], d[1]);
    for _ in 0..q {
        (x, y) = (-y, x);
        (dx, dy) = (-dy, dx);
    }
    ([x + 0.5, y + 0.5], [dx * scale, dy * scale])
}

/// Global curve through an ordered chart list, parametrised proportionally to
/// chord length of a fine polyline.
#[derive(Debug)]
pub struct StitchedCurve {
    charts: Vec<Chart>,
    // (cumulative length, chart index, chart abscissa)
    table: Vec<(f64, usize, f64)>,
    total: f64,
}

impl StitchedCurve {
    pub fn new(charts: Vec<Chart>) -> Result<Self> {
        let nc = charts.len();
        if nc < 2 {
            return Err(Error::Domain("need at least two charts".into()));
        }
        let mut handoff = Vec::with_capacity(nc);
        for j in 0..nc {
            handoff.push(handoff_point(&charts[j], &charts[(j + 1) % nc], j)?);
        }
        let per_piece = 256;
        let mut table = Vec::with_capacity(nc * per_piece + 1);
        let mut total = 0.0;
        let mut prev: Option<Point> = None;
        for j in 0..nc {
            let start = charts[j].affine_map.to_chart(handoff[(j + nc - 1) % nc])[0];
            let end = charts[j].affine_map.to_chart(handoff[j])[0];
            if !(end > start) {
                return Err(Error::Domain(format!(
                    "chart {j} is traversed backwards; charts must be listed counter-clockwise"
                )));
            }
            for i in 0..per_piece {
                let y = start + (end - start) * i as f64 / per_piece as f64;
                let p = charts[j].boundary_point(y);
                if let Some(q) = prev {
                    total += (p[0] - q[0]).hypot(p[1] - q[1]);
                }
                table.push((total, j, y));
                prev = Some(p);
            }
        }
        let first = charts[table[0].1].boundary_point(table[0].2);
        let last = prev.unwrap();
        total += (first[0] - last[0]).hypot(first[1] - last[1]);
        // closing entry: the first point again, reached at the full length
        table.push((total, table[0].1, table[0].2));
        Ok(StitchedCurve {
            charts,
            table,
            total,
        })
    }

    pub fn point(&self, t: f64) -> Point {
        let s = t.rem_euclid(TAU) / TAU * self.total;
        let k = match self
            .table
            .binary_search_by(|e| e.0.partial_cmp(&s).unwrap())
        {
            Ok(k) => return self.charts[self.table[k].1].boundary_point(self.table[k].2),
            Err(k) => k.max(1) - 1,
        };
        let (s0, j0, y0) = self.table[k];
        let (s1, j1, y1) = self.table[k + 1];
        let w = if s1 > s0 { (s - s0) / (s1 - s0) } else { 0.0 };
        if j0 == j1 {
            self.charts[j0].boundary_point(y0 + w * (y1 - y0))
        } else {
            // segment crossing a handoff: express the end in chart j0
            let p1 = self.charts[j1].boundary_point(y1);
            let y1 = self.charts[j0].affine_map.to_chart(p1)[0];
            self.charts[j0].boundary_point(y0 + w * (y1 - y0))
        }
    }
}

/// Boundary point where chart `a` hands over to chart `b`: the point whose
/// tangential coordinates in the two charts are opposite.
fn handoff_point(a: &Chart, b: &Chart, j: usize) -> Result<Point> {
    let g = |y: f64| -> f64 {
        let p = a.boundary_point(y);
        y + b.affine_map.to_chart(p)[0]
    };
    let mut lo = -a.box_size * 0.999;
    let mut hi = a.box_size * 0.999;
    let (glo, ghi) = (g(lo), g(hi));
    if !(glo < 0.0 && ghi > 0.0) {
        return Err(Error::Domain(format!(
            "charts {j} and {} do not overlap in counter-clockwise order",
            j + 1
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = a.boundary_point(0.5 * (lo + hi));
    if !b.in_box(b.affine_map.to_chart(p)) {
        return Err(Error::Domain(format!(
            "handoff point of charts {j} and {} is outside the second chart",
            j + 1
        )));
    }
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryFrame {
    pub point: Point,
    pub interior_normal: Point,
    pub tangent: Point,
    pub parameter: f64,
    /// `|dγ/dt|` at the parameter.
    pub speed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Builtin {
    UnitDisk,
    UnitSquareRounded(f64),
    StarC11(f64),
}

impl Builtin {
    /// Parses `unit_disk`, `unit_square_rounded(r)`, `star_c11(eps)`.
    pub fn parse(s: &str) -> Result<Builtin> {
        let s = s.trim();
        if s == "unit_disk" {
            return Ok(Builtin::UnitDisk);
        }
        let arg = |prefix: &str| -> Option<Result<f64>> {
            let rest = s.strip_prefix(prefix)?.trim();
            let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
            Some(
                inner
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Domain(format!("bad parameter in '{s}'"))),
            )
        };
        if let Some(r) = arg("unit_square_rounded") {
            return Ok(Builtin::UnitSquareRounded(r?));
        }
        if let Some(e) = arg("star_c11") {
            return Ok(Builtin::StarC11(e?));
        }
        Err(Error::Domain(format!("unknown builtin domain '{s}'")))
    }

    pub fn name(&self) -> String {
        match self {
            Builtin::UnitDisk => "unit_disk".into(),
            Builtin::UnitSquareRounded(r) => format!("unit_square_rounded({r})"),
            Builtin::StarC11(e) => format!("star_c11({e})"),
        }
    }
}

pub enum DomainSource {
    Builtin(Builtin),
    Charts(Vec<Chart>),
}

#[derive(Clone, Debug)]
pub struct DomainSpec {
    pub name: String,
    pub charts: Vec<Chart>,
    pub interior_patch: InteriorPatch,
    pub smoothness: Smoothness,
    pub curve: BoundaryCurve,
}

impl DomainSpec {
    pub fn tau(&self) -> f64 {
        self.smoothness.tau()
    }

    pub fn center(&self) -> Point {
        self.interior_patch.center
    }

    pub fn boundary_length(&self) -> f64 {
        self.curve.length()
    }
}

const GRAPH_SAMPLES: usize = 257;

pub fn make_domain(src: DomainSource) -> Result<DomainSpec> {
    let dom = match src {
        DomainSource::Builtin(b) => builtin_domain(b)?,
        DomainSource::Charts(charts) => custom_domain(charts)?,
    };
    validate(&dom)?;
    Ok(dom)
}

pub fn unit_disk() -> DomainSpec {
    make_domain(DomainSource::Builtin(Builtin::UnitDisk)).expect("unit disk is valid")
}

pub fn unit_square_rounded(r: f64) -> Result<DomainSpec> {
    make_domain(DomainSource::Builtin(Builtin::UnitSquareRounded(r)))
}

pub fn star_c11(eps: f64) -> Result<DomainSpec> {
    make_domain(DomainSource::Builtin(Builtin::StarC11(eps)))
}

fn builtin_domain(b: Builtin) -> Result<DomainSpec> {
    match b {
        Builtin::UnitDisk => {
            let a = 0.8;
            let charts = (0..4)
                .map(|j| {
                    let phi = 0.5 * PI * j as f64;
                    let e = [phi.cos(), phi.sin()];
                    let graph = GraphFunction::from_fn(
                        -a,
                        a,
                        GRAPH_SAMPLES,
                        "1 - sqrt(1 - y^2)",
                        Smoothness::new(2, 1.0),
                        |y| 1.0 - (1.0 - y * y).sqrt(),
                    );
                    Chart {
                        affine_map: AffineMap::frame(e, [-e[1], e[0]], [-e[0], -e[1]]),
                        box_size: a,
                        graph,
                    }
                })
                .collect();
            Ok(DomainSpec {
                name: b.name(),
                charts,
                interior_patch: InteriorPatch {
                    center: [0.0, 0.0],
                    radius: 0.5,
                },
                // smooth; bookkept as (2, 1)
                smoothness: Smoothness::new(2, 1.0),
                curve: BoundaryCurve::Disk {
                    center: [0.0, 0.0],
                    radius: 1.0,
                },
            })
        }
        Builtin::UnitSquareRounded(r) => {
            if !(r > 0.0 && r <= 0.5) {
                return Err(Error::Domain(format!(
                    "corner radius {r} must lie in (0, 0.5]"
                )));
            }
            let half = 0.5 - r;
            let a = half + r * (PI / 3.0).sin();
            let smooth = if r < 0.5 {
                Smoothness::new(1, 1.0)
            } else {
                Smoothness::new(2, 1.0)
            };
            let charts = (0..4)
                .map(|j| {
                    let phi = 0.5 * PI * j as f64;
                    // outward normal of side j is (sin φ, -cos φ) rotated; bottom first
                    let t = [phi.cos(), phi.sin()];
                    let n = [-phi.sin(), phi.cos()];
                    let mid = [0.5 - 0.5 * n[0], 0.5 - 0.5 * n[1]];
                    let graph = GraphFunction::from_fn(
                        -a,
                        a,
                        GRAPH_SAMPLES,
                        "flat side with circular corners",
                        smooth,
                        move |y| {
                            let u = y.abs() - half;
                            if u <= 0.0 {
                                0.0
                            } else {
                                r - (r * r - u * u).max(0.0).sqrt()
                            }
                        },
                    );
                    Chart {
                        affine_map: AffineMap::frame(mid, t, n),
                        box_size: a,
                        graph,
                    }
                })
                .collect();
            Ok(DomainSpec {
                name: b.name(),
                charts,
                interior_patch: InteriorPatch {
                    center: [0.5, 0.5],
                    radius: 0.25,
                },
                smoothness: smooth,
                curve: BoundaryCurve::RoundedSquare { r },
            })
        }
        Builtin::StarC11(eps) => {
            if !(eps.abs() < 0.25) {
                return Err(Error::Domain(format!("star amplitude {eps} must satisfy |eps| < 0.25")));
            }
            let curve = BoundaryCurve::Star { eps };
            let charts = charts_from_curve(&curve, 8, Smoothness::new(1, 1.0))?;
            Ok(DomainSpec {
                name: b.name(),
                charts,
                interior_patch: InteriorPatch {
                    center: [0.0, 0.0],
                    radius: 0.5 * (1.0 - eps.abs()),
                },
                smoothness: Smoothness::new(1, 1.0),
                curve,
            })
        }
    }
}

/// Graph charts of a curve, centered at `count` equispaced parameters. Graph
/// values come from a Newton solve on the curve parameter.
pub fn charts_from_curve(curve: &BoundaryCurve, count: usize, smooth: Smoothness) -> Result<Vec<Chart>> {
    let mut charts = Vec::with_capacity(count);
    let dt = TAU / count as f64;
    for j in 0..count {
        let t0 = dt * j as f64;
        let fr = curve.frame(t0);
        let map = AffineMap::frame(fr.point, fr.tangent, fr.interior_normal);
        // box covers the neighbouring centers' midpoints with margin
        let reach = |t: f64| map.to_chart(curve.point(t))[0].abs();
        let a = 1.5 * reach(t0 - 0.5 * dt).max(reach(t0 + 0.5 * dt));
        let c = curve.clone();
        let tag = format!("graph of curve near t = {t0:.6}");
        let f = move |y: f64| -> f64 {
            // solve <γ(t) - o, T> = y for t near t0
            let mut t = t0 + y / fr.speed;
            for _ in 0..60 {
                let q = map.to_chart(c.point(t));
                let d = c.derivative(t);
                let dq = d[0] * map.rot[0][0] + d[1] * map.rot[0][1];
                let step = (q[0] - y) / dq;
                t -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            map.to_chart(c.point(t))[1]
        };
        let graph = GraphFunction::from_fn(-a, a, GRAPH_SAMPLES, &tag, smooth, f);
        charts.push(Chart {
            affine_map: map,
            box_size: a,
            graph,
        });
    }
    Ok(charts)
}

fn custom_domain(charts: Vec<Chart>) -> Result<DomainSpec> {
    let smooth = charts
        .iter()
        .map(|c| c.graph.claimed_smoothness)
        .fold(Smoothness::new(u32::MAX, 1.0), |m, s| {
            if s.tau() < m.tau() {
                s
            } else {
                m
            }
        });
    for (j, c) in charts.iter().enumerate() {
        check_graph_bound(c, j)?;
    }
    let stitched = Arc::new(StitchedCurve::new(charts.clone())?);
    let curve = BoundaryCurve::Stitched(stitched);
    let n = 1024;
    let pts: Vec<Point> = (0..n).map(|i| curve.point(TAU * i as f64 / n as f64)).collect();
    // centroid of the polygon
    let (mut area, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        let cr = p[0] * q[1] - q[0] * p[1];
        area += cr;
        cx += (p[0] + q[0]) * cr;
        cy += (p[1] + q[1]) * cr;
    }
    area *= 0.5;
    if area.abs() < 1e-12 {
        return Err(Error::Domain("charts enclose no area".into()));
    }
    let center = [cx / (6.0 * area), cy / (6.0 * area)];
    let dist = pts
        .iter()
        .map(|p| (p[0] - center[0]).hypot(p[1] - center[1]))
        .fold(f64::INFINITY, f64::min);
    Ok(DomainSpec {
        name: "custom".into(),
        charts,
        interior_patch: InteriorPatch {
            center,
            radius: 0.5 * dist,
        },
        smoothness: smooth,
        curve,
    })
}

fn check_graph_bound(c: &Chart, j: usize) -> Result<()> {
    let a = c.box_size;
    if !(a > 0.0) {
        return Err(Error::Domain(format!("chart {j}: box size must be positive")));
    }
    if c.graph.lo > -a + 1e-12 || c.graph.hi < a - 1e-12 {
        return Err(Error::Domain(format!(
            "chart {j}: graph samples do not cover the box [-{a}, {a}]"
        )));
    }
    let bad = c
        .graph
        .samples
        .iter()
        .zip(grid(c.graph.lo, c.graph.hi, c.graph.samples.len()))
        .any(|(v, y)| y.abs() < a && v.abs() >= a);
    if bad {
        return Err(Error::Domain(format!(
            "chart {j}: graph function exceeds the box bound |f| < {a}"
        )));
    }
    Ok(())
}

fn validate(dom: &DomainSpec) -> Result<()> {
    for (j, c) in dom.charts.iter().enumerate() {
        check_graph_bound(c, j)?;
    }
    // overlap agreement
    for (i, ci) in dom.charts.iter().enumerate() {
        for (j, cj) in dom.charts.iter().enumerate() {
            if i == j {
                continue;
            }
            let n = 200;
            for k in 1..n {
                let y = ci.box_size * (2.0 * k as f64 / n as f64 - 1.0);
                let p = ci.boundary_point(y);
                let q = cj.affine_map.to_chart(p);
                if q[0].abs() < 0.98 * cj.box_size && q[1].abs() < 0.98 * cj.box_size {
                    let z = q[1] - cj.graph.eval(q[0]);
                    if z.abs() > OVERLAP_TOL {
                        return Err(Error::Domain(format!(
                            "charts {i} and {j} disagree on their overlap by {:.3e}",
                            z.abs()
                        )));
                    }
                }
            }
        }
    }
    // coverage of the boundary curve
    let n = 512;
    for k in 0..n {
        let p = dom.curve.point(TAU * k as f64 / n as f64);
        let covered = dom
            .charts
            .iter()
            .any(|c| c.in_box(c.affine_map.to_chart(p)));
        if !covered {
            return Err(Error::Domain(format!(
                "boundary point ({:.4}, {:.4}) is not covered by any chart",
                p[0], p[1]
            )));
        }
    }
    Ok(())
}

pub fn is_power_of_two_count(m: usize) -> bool {
    m >= 8 && m.is_power_of_two()
}

/// `m` frames at equispaced boundary parameters.
pub fn boundary_frames(dom: &DomainSpec, m: usize) -> Result<Vec<BoundaryFrame>> {
    if !is_power_of_two_count(m) {
        return Err(Error::BoundaryCount(m));
    }
    Ok((0..m)
        .map(|j| dom.curve.frame(TAU * j as f64 / m as f64))
        .collect())
}

/// Sampled C^{k,σ} norm: the largest sup of a derivative of order ≤ k plus
/// the σ-Hölder seminorm of the k-th derivative over sample pairs.
pub fn holder_norm(f: &GraphFunction, k: u32, sigma: f64) -> Result<f64> {
    let n = f.samples.len();
    let k = k as usize;
    if n < 2 * k + 3 {
        return Err(Error::Sampling(format!(
            "{n} samples cannot support derivatives of order {k}"
        )));
    }
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::Sampling(format!("sigma = {sigma} must lie in (0, 1]")));
    }
    let h = f.spacing();
    let mut d = f.samples.clone();
    let mut sup = d.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for _ in 0..k {
        d = derivative(&d, h);
        sup = sup.max(d.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    }
    let mut semi = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = h * (j - i) as f64;
            let q = (d[i] - d[j]).abs() / dist.powf(sigma);
            semi = semi.max(q);
        }
    }
    Ok(sup + semi)
}

/// Central differences inside, second-order one-sided at the ends.
fn derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    out[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    out
}

/// Chart list in the plain-text block format: per chart, a line with the six
/// affine reals, a line with the box size, then the graph samples on
/// `[-a, a]`. Blocks are separated by blank lines; `#` starts a comment.
pub fn parse_chart_text(text: &str, smooth: Smoothness) -> Result<Vec<Chart>> {
    let mut blocks: Vec<Vec<(usize, String)>> = vec![Vec::new()];
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            if !blocks.last().unwrap().is_empty() {
                blocks.push(Vec::new());
            }
            continue;
        }
        blocks.last_mut().unwrap().push((ln + 1, line.to_string()));
    }
    blocks.retain(|b| !b.is_empty());
    let mut charts = Vec::new();
    for b in blocks {
        let nums = |(ln, s): &(usize, String)| -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|w| {
                    w.parse::<f64>()
                        .map_err(|_| Error::Domain(format!("line {ln}: bad number '{w}'")))
                })
                .collect()
        };
        if b.len() < 3 {
            return Err(Error::Domain(format!(
                "chart block at line {} needs map, box size and samples",
                b[0].0
            )));
        }
        let m = nums(&b[0])?;
        if m.len() != 6 {
            return Err(Error::Domain(format!("line {}: affine map needs 6 reals", b[0].0)));
        }
        let a = nums(&b[1])?;
        if a.len() != 1 {
            return Err(Error::Domain(format!("line {}: expected one box size", b[1].0)));
        }
        let mut samples = Vec::new();
        for l in &b[2..] {
            samples.extend(nums(l)?);
        }
        let map = AffineMap::from_reals([m[0], m[1], m[2], m[3], m[4], m[5]])?;
        charts.push(Chart {
            affine_map: map,
            box_size: a[0],
            graph: GraphFunction::from_samples(-a[0], a[0], samples, smooth)?,
        });
    }
    Ok(charts)
}

pub fn load_chart_file(path: &Path, smooth: Smoothness) -> Result<Vec<Chart>> {
    let text = std::fs::read_to_string(path)?;
    parse_chart_text(&text, smooth)
}

pub fn write_chart_text(charts: &[Chart]) -> String {
    let mut out = String::new();
    for c in charts {
        let r = c.affine_map.to_reals();
        out.push_str(&format!(
            "{:?} {:?} {:?} {:?} {:?} {:?}\n{:?}\n",
            r[0], r[1], r[2], r[3], r[4], r[5], c.box_size
        ));
        for (i, v) in c.graph.samples.iter().enumerate() {
            out.push_str(&format!("{v:?}"));
            out.push(if i % 8 == 7 { '\n' } else { ' ' });
        }
        out.push_str("\n\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_frames_point_inward() {
        let d = unit_disk();
        let fr = boundary_frames(&d, 8).unwrap();
        for f in &fr {
            let th = f.parameter;
            assert!((f.interior_normal[0] + th.cos()).abs() < 1e-14);
            assert!((f.interior_normal[1] + th.sin()).abs() < 1e-14);
        }
        assert!(matches!(boundary_frames(&d, 7), Err(Error::BoundaryCount(7))));
    }

    #[test]
    fn rounded_square_is_closed_and_unit_speed_scaled() {
        let r = 0.2;
        let c = BoundaryCurve::RoundedSquare { r };
        let p0 = c.point(0.0);
        let p1 = c.point(TAU - 1e-12);
        assert!((p0[0] - p1[0]).abs() < 1e-9 && (p0[1] - p1[1]).abs() < 1e-9);
        let speed = c.frame(0.3).speed;
        assert!((speed - c.length() / TAU).abs() < 1e-12);
    }

    #[test]
    fn builtin_parse() {
        assert_eq!(Builtin::parse("unit_disk").unwrap(), Builtin::UnitDisk);
        assert_eq!(
            Builtin::parse("unit_square_rounded(0.2)").unwrap(),
            Builtin::UnitSquareRounded(0.2)
        );
        assert_eq!(Builtin::parse(" star_c11( 0.1 ) ").unwrap(), Builtin::StarC11(0.1));
        assert!(Builtin::parse("torus").is_err());
    }

    #[test]
    fn derivative_of_quadratic_is_exact() {
        let h = 0.1;
        let v: Vec<f64> = (0..11).map(|i| (i as f64 * h).powi(2)).collect();
        let d = derivative(&v, h);
        for (i, x) in d.iter().enumerate() {
            assert!((x - 2.0 * i as f64 * h).abs() < 1e-12);
        }
    }
}
