//! Sectioned `key = value` experiment configuration.
//!
//! ```text
//! # comment
//! [domain]
//! builtin = unit_disk
//!
//! [operator]
//! a11 = 1 + 0.25*x*x
//! c = 1
//! shift = 0          # or `auto`
//!
//! [boundary]
//! kind = robin
//! value = 2
//! ```
//!
//! Unknown sections and keys are errors. Every error carries the line
//! number and the offending field.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use kreinlab::dtn::BoundaryOperator;
use kreinlab::geometry::{load_chart_file, make_domain, Builtin, DomainSource, DomainSpec, Smoothness};
use kreinlab::discretize::EllipticOperatorSpec;
use kreinlab::parameter::{Ray, RayQuantity};
use kreinlab::Complex64;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line, 0 when the error is not tied to a line.
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}: {}", self.line, self.field, self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainChoice {
    Builtin(Builtin),
    Charts { path: PathBuf, k: u32, sigma: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shift {
    Value(f64),
    /// `max(0, 1 - min Re spec A_II)` on the coarsest rung.
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorConfig {
    pub a: [String; 4],
    pub b: [String; 2],
    pub c: String,
    pub shift: Shift,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryChoice {
    Neumann,
    Robin(Complex64),
    Differential { b: String, c: String },
    /// `C = a|n|` on boundary frequencies.
    AbsMultiplier(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanConfig {
    pub from: Complex64,
    pub to: Complex64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayConfig {
    pub theta: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub points: usize,
    pub quantity: RayQuantity,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Suites {
    pub green: bool,
    pub identities: bool,
    pub krein: bool,
    pub mfunction: bool,
    pub spectrum: bool,
    pub kernel: bool,
    pub dtn: bool,
    pub subspace: bool,
    pub ellipticity: bool,
    pub ray: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Thresholds {
    pub identity: f64,
    pub spectrum_target: Option<f64>,
    pub spectrum_rel: f64,
    pub kernel_angle: f64,
    pub dtn_rate: f64,
    pub ellipticity_margin: f64,
    pub ray_slope_min: f64,
    pub ray_slope_max: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            identity: 1e-10,
            spectrum_target: None,
            spectrum_rel: 0.02,
            kernel_angle: 1e-6,
            dtn_rate: 1.0,
            ellipticity_margin: 0.5,
            ray_slope_min: -1.2,
            ray_slope_max: -0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub domain: DomainChoice,
    pub operator: OperatorConfig,
    pub boundary: BoundaryChoice,
    pub lambdas: Vec<Complex64>,
    pub scan: Option<ScanConfig>,
    pub ray: Option<RayConfig>,
    pub suites: Suites,
    /// Inverse mesh sizes `1/h`, strictly increasing.
    pub resolution: Vec<f64>,
    pub subspace_modes: i64,
    pub holder_k: u32,
    pub holder_sigma: f64,
    pub holder_levels: Vec<u32>,
    pub thresholds: Thresholds,
    pub out: PathBuf,
    pub seed: u64,
    /// SHA-256 of the configuration text.
    pub hash: String,
    /// SHA-256 of the domain and operator sections only.
    pub model_hash: String,
}

/// Parses `0.5`, `3i`, `-1+2i`, `2 - 0.5i`, `i`, `-i`.
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let t: String = s.chars().filter(|ch| !ch.is_whitespace()).collect();
    if t.is_empty() {
        return None;
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().ok().map(|v| Complex64::new(v, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |p: &str| -> Option<f64> {
        match p {
            "" | "+" => Some(1.0),
            "-" => Some(-1.0),
            _ => p.parse().ok(),
        }
    };
    match split {
        Some(k) => Some(Complex64::new(body[..k].parse().ok()?, imag(&body[k..])?)),
        None => Some(Complex64::new(0.0, imag(body)?)),
    }
}

/// Complex numbers in `lambda.list` style: comma separated.
pub fn format_complex(z: Complex64) -> String {
    if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

struct Entry {
    line: usize,
    value: String,
}

type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

const KNOWN: &[(&str, &[&str])] = &[
    ("domain", &["builtin", "charts", "k", "sigma"]),
    ("operator", &["a11", "a12", "a21", "a22", "b1", "b2", "c", "shift"]),
    ("boundary", &["kind", "value", "value_im", "b", "c", "a"]),
    (
        "lambda",
        &[
            "list",
            "scan_from",
            "scan_to",
            "scan_points",
            "ray_theta",
            "ray_mu_min",
            "ray_mu_max",
            "ray_points",
            "ray_quantity",
        ],
    ),
    (
        "suites",
        &[
            "green",
            "identities",
            "krein",
            "mfunction",
            "spectrum",
            "kernel",
            "dtn",
            "subspace",
            "ellipticity",
            "ray",
        ],
    ),
    ("resolution", &["ladder"]),
    ("subspace", &["modes"]),
    ("holder", &["k", "sigma", "levels"]),
    (
        "thresholds",
        &[
            "identity",
            "spectrum_target",
            "spectrum_rel",
            "kernel_angle",
            "dtn_rate",
            "ellipticity_margin",
            "ray_slope_min",
            "ray_slope_max",
        ],
    ),
    ("run", &["out", "seed"]),
];

fn tokenize(text: &str) -> Result<Sections, ConfigError> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, content, "unterminated section header"))?
                .trim()
                .to_string();
            if !KNOWN.iter().any(|(s, _)| *s == name) {
                return Err(err(line, &format!("[{name}]"), "unknown section"));
            }
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, content, "expected `key = value`"))?;
        let key = key.trim().to_string();
        let Some(section) = &current else {
            return Err(err(line, &key, "key outside any section"));
        };
        let allowed = KNOWN.iter().find(|(s, _)| s == section).unwrap().1;
        let field = format!("{section}.{key}");
        if !allowed.contains(&key.as_str()) {
            return Err(err(line, &field, "unknown key"));
        }
        let keys = sections.get_mut(section).unwrap();
        if let Some(prev) = keys.get(&key) {
            return Err(err(line, &field, format!("duplicate key, first set on line {}", prev.line)));
        }
        keys.insert(
            key,
            Entry {
                line,
                value: value.trim().to_string(),
            },
        );
    }
    Ok(sections)
}

struct Fields {
    sections: Sections,
}

impl Fields {
    fn raw(&self, section: &str, key: &str) -> Option<(usize, String)> {
        let e = self.sections.get(section)?.get(key)?;
        Some((e.line, e.value.clone()))
    }

    fn string(&self, section: &str, key: &str, default: &str) -> String {
        self.raw(section, key).map(|(_, v)| v).unwrap_or_else(|| default.to_string())
    }

    fn parsed<T, F>(&self, section: &str, key: &str, what: &str, f: F) -> Result<Option<T>, ConfigError>
    where
        F: Fn(&str) -> Option<T>,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some((line, v)) => f(&v)
                .map(Some)
                .ok_or_else(|| err(line, &format!("{section}.{key}"), format!("expected {what}, got '{v}'"))),
        }
    }

    fn f64(&self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self
            .parsed(section, key, "a finite number", |v| v.parse::<f64>().ok().filter(|x| x.is_finite()))?
            .unwrap_or(default))
    }

    fn usize(&self, section: &str, key: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self
            .parsed(section, key, "a nonnegative integer", |v| v.parse().ok())?
            .unwrap_or(default))
    }

    fn bool(&self, section: &str, key: &str) -> Result<bool, ConfigError> {
        Ok(self
            .parsed(section, key, "true or false", |v| match v {
                "true" | "yes" | "1" => Some(true),
                "false" | "no" | "0" => Some(false),
                _ => None,
            })?
            .unwrap_or(false))
    }

    fn complex(&self, section: &str, key: &str) -> Result<Option<Complex64>, ConfigError> {
        self.parsed(section, key, "a complex number", parse_complex)
    }

    fn line(&self, section: &str, key: &str) -> usize {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(|e| e.line)
            .unwrap_or(0)
    }
}

fn list<T>(v: &str, f: impl Fn(&str) -> Option<T>) -> Option<Vec<T>> {
    v.split(',').map(|p| f(p.trim())).collect()
}

/// Canonical text of the named sections, so that comments and unrelated
/// sections do not change the hash.
fn section_digest(sections: &Sections, names: &[&str]) -> String {
    let mut h = Sha256::new();
    for name in names {
        if let Some(keys) = sections.get(*name) {
            h.update(format!("[{name}]\n"));
            for (k, e) in keys {
                h.update(format!("{k}={}\n", e.value));
            }
        }
    }
    hex(&h.finalize())
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(0, &path.display().to_string(), e.to_string()))?;
        let mut cfg = Self::parse(&text)?;
        // chart paths are relative to the configuration file
        if let DomainChoice::Charts { path: p, .. } = &mut cfg.domain {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let sections = tokenize(text)?;
        let hash = hex(&Sha256::digest(text.as_bytes()));
        let model_hash = section_digest(&sections, &["domain", "operator"]);
        let f = Fields { sections };

        let domain = match (f.raw("domain", "builtin"), f.raw("domain", "charts")) {
            (Some(_), Some((line, _))) => {
                return Err(err(line, "domain.charts", "give either builtin or charts, not both"))
            }
            (Some((line, b)), None) => {
                DomainChoice::Builtin(Builtin::parse(&b).map_err(|e| err(line, "domain.builtin", e.to_string()))?)
            }
            (None, Some((_, p))) => DomainChoice::Charts {
                path: PathBuf::from(p),
                k: f.usize("domain", "k", 1)? as u32,
                sigma: f.f64("domain", "sigma", 1.0)?,
            },
            (None, None) => return Err(err(0, "domain.builtin", "missing domain")),
        };

        let operator = OperatorConfig {
            a: [
                f.string("operator", "a11", "1"),
                f.string("operator", "a12", "0"),
                f.string("operator", "a21", "0"),
                f.string("operator", "a22", "1"),
            ],
            b: [f.string("operator", "b1", "0"), f.string("operator", "b2", "0")],
            c: f.string("operator", "c", "0"),
            shift: match f.raw("operator", "shift") {
                None => Shift::Value(0.0),
                Some((_, v)) if v == "auto" => Shift::Auto,
                Some((line, v)) => Shift::Value(
                    v.parse()
                        .map_err(|_| err(line, "operator.shift", format!("expected a number or auto, got '{v}'")))?,
                ),
            },
        };
        let op_line = |key: &str| f.line("operator", key);
        let coeffs: Vec<(&str, &String)> = vec![
            ("a11", &operator.a[0]),
            ("a12", &operator.a[1]),
            ("a21", &operator.a[2]),
            ("a22", &operator.a[3]),
            ("b1", &operator.b[0]),
            ("b2", &operator.b[1]),
            ("c", &operator.c),
        ];
        for (key, src) in coeffs {
            kreinlab::expr::Expr::parse(src).map_err(|e| err(op_line(key), &format!("operator.{key}"), e.to_string()))?;
        }

        let kind = f.string("boundary", "kind", "neumann");
        let kind_line = f.line("boundary", "kind");
        let boundary = match kind.as_str() {
            "neumann" => BoundaryChoice::Neumann,
            "robin" => {
                let re = f.f64("boundary", "value", 0.0)?;
                let im = f.f64("boundary", "value_im", 0.0)?;
                BoundaryChoice::Robin(Complex64::new(re, im))
            }
            "differential" => {
                let b = f.string("boundary", "b", "0");
                let c = f.string("boundary", "c", "0");
                for (key, src) in [("b", &b), ("c", &c)] {
                    kreinlab::expr::Expr::parse(src)
                        .map_err(|e| err(f.line("boundary", key), &format!("boundary.{key}"), e.to_string()))?;
                }
                BoundaryChoice::Differential { b, c }
            }
            "abs_multiplier" => BoundaryChoice::AbsMultiplier(f.f64("boundary", "a", 0.0)?),
            other => {
                return Err(err(
                    kind_line,
                    "boundary.kind",
                    format!("unknown kind '{other}' (neumann, robin, differential, abs_multiplier)"),
                ))
            }
        };

        let lambdas = f
            .parsed("lambda", "list", "comma-separated complex numbers", |v| list(v, parse_complex))?
            .unwrap_or_default();
        let scan = match (f.complex("lambda", "scan_from")?, f.complex("lambda", "scan_to")?) {
            (Some(from), Some(to)) => {
                let points = f.usize("lambda", "scan_points", 64)?;
                if points < 3 {
                    return Err(err(f.line("lambda", "scan_points"), "lambda.scan_points", "need at least 3 points"));
                }
                Some(ScanConfig { from, to, points })
            }
            (None, None) => None,
            _ => return Err(err(0, "lambda.scan_from", "scan_from and scan_to go together")),
        };
        let ray = if f.line("lambda", "ray_mu_min") > 0 || f.line("lambda", "ray_mu_max") > 0 {
            let quantity = match f.string("lambda", "ray_quantity", "m_norm").as_str() {
                "m_norm" => RayQuantity::MNorm,
                "remainder" => RayQuantity::Remainder,
                other => {
                    return Err(err(
                        f.line("lambda", "ray_quantity"),
                        "lambda.ray_quantity",
                        format!("unknown quantity '{other}' (m_norm, remainder)"),
                    ))
                }
            };
            let rc = RayConfig {
                theta: f.f64("lambda", "ray_theta", 0.0)?,
                mu_min: f.f64("lambda", "ray_mu_min", 2.0)?,
                mu_max: f.f64("lambda", "ray_mu_max", 64.0)?,
                points: f.usize("lambda", "ray_points", 11)?,
                quantity,
            };
            Ray::geometric(rc.theta, rc.mu_min, rc.mu_max, rc.points)
                .map_err(|e| err(f.line("lambda", "ray_mu_min"), "lambda.ray_mu_min", e.to_string()))?;
            Some(rc)
        } else {
            None
        };

        let suites = Suites {
            green: f.bool("suites", "green")?,
            identities: f.bool("suites", "identities")?,
            krein: f.bool("suites", "krein")?,
            mfunction: f.bool("suites", "mfunction")?,
            spectrum: f.bool("suites", "spectrum")?,
            kernel: f.bool("suites", "kernel")?,
            dtn: f.bool("suites", "dtn")?,
            subspace: f.bool("suites", "subspace")?,
            ellipticity: f.bool("suites", "ellipticity")?,
            ray: f.bool("suites", "ray")?,
        };

        let ladder_line = f.line("resolution", "ladder");
        let resolution = f
            .parsed("resolution", "ladder", "comma-separated positive numbers", |v| {
                list(v, |p| p.parse::<f64>().ok().filter(|x| *x > 0.0 && x.is_finite()))
            })?
            .unwrap_or_else(|| vec![10.0]);
        check_ladder(&resolution).map_err(|m| err(ladder_line, "resolution.ladder", m))?;

        let d = Thresholds::default();
        let thresholds = Thresholds {
            identity: f.f64("thresholds", "identity", d.identity)?,
            spectrum_target: f.parsed("thresholds", "spectrum_target", "a number", |v| v.parse().ok())?,
            spectrum_rel: f.f64("thresholds", "spectrum_rel", d.spectrum_rel)?,
            kernel_angle: f.f64("thresholds", "kernel_angle", d.kernel_angle)?,
            dtn_rate: f.f64("thresholds", "dtn_rate", d.dtn_rate)?,
            ellipticity_margin: f.f64("thresholds", "ellipticity_margin", d.ellipticity_margin)?,
            ray_slope_min: f.f64("thresholds", "ray_slope_min", d.ray_slope_min)?,
            ray_slope_max: f.f64("thresholds", "ray_slope_max", d.ray_slope_max)?,
        };

        let cfg = ExperimentConfig {
            domain,
            operator,
            boundary,
            lambdas,
            scan,
            ray,
            suites,
            resolution,
            subspace_modes: f.usize("subspace", "modes", 2)? as i64,
            holder_k: f.usize("holder", "k", 1)? as u32,
            holder_sigma: f.f64("holder", "sigma", 1.0)?,
            holder_levels: f
                .parsed("holder", "levels", "comma-separated integers", |v| list(v, |p| p.parse().ok()))?
                .unwrap_or_else(|| vec![6, 7, 8, 9, 10]),
            thresholds,
            out: PathBuf::from(f.string("run", "out", "out")),
            seed: f.usize("run", "seed", 1)? as u64,
            hash,
            model_hash,
        };
        if (cfg.suites.identities || cfg.suites.krein || cfg.suites.mfunction || cfg.suites.subspace)
            && cfg.lambdas.is_empty()
        {
            return Err(err(0, "lambda.list", "the selected suites need at least one λ"));
        }
        if (cfg.suites.spectrum || cfg.suites.kernel) && cfg.scan.is_none() {
            return Err(err(0, "lambda.scan_from", "the spectrum suites need a scan segment"));
        }
        if cfg.suites.ray && cfg.ray.is_none() {
            return Err(err(0, "lambda.ray_mu_min", "the ray suite needs a ray"));
        }
        Ok(cfg)
    }

    /// Overrides the ladder with a single rung.
    pub fn with_resolution(mut self, r: f64) -> Result<Self, ConfigError> {
        check_ladder(&[r]).map_err(|m| err(0, "--resolution", m))?;
        self.resolution = vec![r];
        Ok(self)
    }

    pub fn finest(&self) -> f64 {
        1.0 / *self.resolution.last().unwrap()
    }

    pub fn domain_spec(&self) -> kreinlab::Result<DomainSpec> {
        match &self.domain {
            DomainChoice::Builtin(b) => make_domain(DomainSource::Builtin(*b)),
            DomainChoice::Charts { path, k, sigma } => {
                let charts = load_chart_file(path, Smoothness::new(*k, *sigma))?;
                make_domain(DomainSource::Charts(charts))
            }
        }
    }

    /// The operator without its shift.
    pub fn operator_spec(&self) -> kreinlab::Result<EllipticOperatorSpec> {
        let o = &self.operator;
        let a = [o.a[0].as_str(), o.a[1].as_str(), o.a[2].as_str(), o.a[3].as_str()];
        EllipticOperatorSpec::from_strings(a, [o.b[0].as_str(), o.b[1].as_str()], &o.c, 1.0)
    }

    pub fn boundary_operator(&self) -> kreinlab::Result<BoundaryOperator> {
        Ok(match &self.boundary {
            BoundaryChoice::Neumann => BoundaryOperator::neumann(),
            BoundaryChoice::Robin(v) => BoundaryOperator::robin(*v),
            BoundaryChoice::Differential { b, c } => BoundaryOperator::differential(b, c)?,
            BoundaryChoice::AbsMultiplier(a) => BoundaryOperator::abs_multiplier(*a),
        })
    }

    pub fn scan_grid(&self) -> Vec<Complex64> {
        match &self.scan {
            None => Vec::new(),
            Some(s) => (0..s.points)
                .map(|k| s.from + (s.to - s.from) * (k as f64 / (s.points - 1) as f64))
                .collect(),
        }
    }

    pub fn ray_spec(&self) -> Option<kreinlab::Result<Ray>> {
        self.ray
            .as_ref()
            .map(|r| Ray::geometric(r.theta, r.mu_min, r.mu_max, r.points))
    }
}

fn check_ladder(r: &[f64]) -> Result<(), String> {
    if r.is_empty() {
        return Err("empty ladder".into());
    }
    if r.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err("rungs must be positive".into());
    }
    if r.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(format!("ladder {r:?} is not strictly increasing"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        let cases = [
            ("0.5", (0.5, 0.0)),
            ("3i", (0.0, 3.0)),
            ("-1+2i", (-1.0, 2.0)),
            ("2 - 0.5i", (2.0, -0.5)),
            ("i", (0.0, 1.0)),
            ("-i", (0.0, -1.0)),
            ("1e-3-2e+1i", (1e-3, -20.0)),
        ];
        for (s, (re, im)) in cases {
            assert_eq!(parse_complex(s), Some(Complex64::new(re, im)), "{s}");
        }
        assert_eq!(parse_complex("1+"), None);
        assert_eq!(parse_complex("x"), None);
    }

    #[test]
    fn complex_format_round_trips() {
        for z in [Complex64::new(0.5, -0.3), Complex64::new(-2.0, 4.0)] {
            assert_eq!(parse_complex(&format_complex(z)), Some(z));
        }
    }

    #[test]
    fn unknown_key_names_it() {
        let e = ExperimentConfig::parse("[domain]\nbuiltin = unit_disk\n[operator]\ncolour = red\n").unwrap_err();
        assert_eq!(e.line, 4);
        assert_eq!(e.field, "operator.colour");
    }

    #[test]
    fn unknown_section() {
        let e = ExperimentConfig::parse("[mesh]\nh = 1\n").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.to_string().contains("[mesh]"));
    }

    #[test]
    fn ladder_must_increase() {
        let e = ExperimentConfig::parse("[domain]\nbuiltin = unit_disk\n[resolution]\nladder = 10, 5\n").unwrap_err();
        assert_eq!(e.field, "resolution.ladder");
        assert_eq!(e.line, 4);
    }

    #[test]
    fn bad_expression_points_at_line() {
        let e = ExperimentConfig::parse("[domain]\nbuiltin = unit_disk\n\n[operator]\nc = 1 + * x\n").unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (5, "operator.c"));
    }

    #[test]
    fn model_hash_ignores_comments_and_other_sections() {
        let a = ExperimentConfig::parse("[domain]\nbuiltin = unit_disk\n[run]\nseed = 1\n").unwrap();
        let b = ExperimentConfig::parse("# note\n[domain]\nbuiltin = unit_disk   # disk\n[run]\nseed = 2\n").unwrap();
        assert_eq!(a.model_hash, b.model_hash);
        assert_ne!(a.hash, b.hash);
    }
}
