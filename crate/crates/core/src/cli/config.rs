//! TOML run configuration.
//!
//! ```toml
//! [domain]
//! shape = "disk"
//! a = 1.0
//! h = "1/64"
//!
//! [elliptic]
//! f = "-8"
//! ```

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LakeError, Result};
use crate::expr::Expr;
use crate::geometry::{build_grid, DefiningFunction, DepthProfile, Grid, Monomial, Polynomial};
use crate::transport::{EllipticWeight, TransportConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Option<DomainConfig>,
    pub elliptic: Option<EllipticSection>,
    pub transport: Option<TransportSection>,
    pub kernels: Option<KernelSection>,
    pub diagnose: Option<DiagnoseSection>,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    #[default]
    Disk,
    Ellipse,
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthKind {
    #[default]
    Power,
    Unit,
}

/// Grid spacing as a number or an arithmetic string such as `"1/64"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Spacing {
    Number(f64),
    Text(String),
}

impl Spacing {
    pub fn value(&self) -> Result<f64> {
        match self {
            Spacing::Number(v) => Ok(*v),
            Spacing::Text(s) => Ok(Expr::parse(s)?.eval(0.0, 0.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(default)]
    pub shape: Shape,
    pub radius: Option<f64>,
    pub semi_axes: Option<[f64; 2]>,
    /// Polynomial terms `[px, py, coeff]`.
    pub terms: Option<Vec<[f64; 3]>>,
    pub center: Option<[f64; 2]>,
    pub bbox: Option<[f64; 4]>,
    pub a: f64,
    pub h: Spacing,
    #[serde(default)]
    pub depth: DepthKind,
}

impl DomainConfig {
    pub fn profile(&self) -> Result<DepthProfile> {
        let def = match self.shape {
            Shape::Disk => DefiningFunction::disk(self.radius.unwrap_or(1.0))?,
            Shape::Ellipse => {
                let [sx, sy] = self.semi_axes.unwrap_or([1.0, 1.0]);
                DefiningFunction::ellipse(sx, sy)?
            }
            Shape::Polynomial => {
                let terms = self
                    .terms
                    .as_ref()
                    .ok_or_else(|| LakeError::Validation("polynomial domain needs `terms`".into()))?
                    .iter()
                    .map(|t| Monomial { px: t[0] as u32, py: t[1] as u32, coeff: t[2] })
                    .collect();
                let bbox = self
                    .bbox
                    .ok_or_else(|| LakeError::Validation("polynomial domain needs `bbox`".into()))?;
                DefiningFunction::polynomial(Polynomial::new(terms), self.center.unwrap_or([0.0, 0.0]), bbox)?
            }
        };
        let def = match (self.shape, self.bbox) {
            (Shape::Polynomial, _) | (_, None) => def,
            (_, Some(b)) => def.with_bbox(b),
        };
        let profile = DepthProfile::new(def, self.a)?;
        Ok(match self.depth {
            DepthKind::Power => profile,
            DepthKind::Unit => profile.with_unit_depth(),
        })
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(build_grid(&self.profile()?, self.h.value()?)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticSection {
    /// Right-hand side of `div((1/b) grad Psi) = f`.
    pub f: String,
    /// Exact `Psi`, when known; enables the `L^2` error in the manifest.
    pub exact: Option<String>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub weight_offset: f64,
    #[serde(default = "default_trace_samples")]
    pub trace_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    #[default]
    Depth,
    Regularized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportSection {
    pub omega0: String,
    /// Shape of the initial perturbation; a seeded random mode mix when absent.
    pub perturbation: Option<String>,
    /// Amplitude of the perturbation added to `omega0`.
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub viscosity: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "one")]
    pub t_end: f64,
    #[serde(default = "default_output_every")]
    pub output_every: f64,
    pub truncation: Option<f64>,
    #[serde(default)]
    pub elliptic_weight: WeightKind,
    #[serde(default = "default_tol")]
    pub solve_tol: f64,
}

impl TransportSection {
    pub fn transport_config(&self) -> TransportConfig {
        TransportConfig {
            cfl: self.cfl,
            t_end: self.t_end,
            viscosity: self.viscosity,
            truncation: self.truncation,
            output_every: self.output_every,
            elliptic_weight: match self.elliptic_weight {
                WeightKind::Depth => EllipticWeight::Depth,
                WeightKind::Regularized => EllipticWeight::RegularizedDepth,
            },
            solve_tol: self.solve_tol,
            ..TransportConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_calibration_eps")]
    pub calibration_eps: Vec<f64>,
    /// Skips calibration when set.
    pub gamma: Option<f64>,
    #[serde(default = "default_h_fd")]
    pub h_fd: f64,
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    /// Log-spaced separations in `[1e-3, 1]` for the bound sweep.
    #[serde(default = "default_separations")]
    pub separations: usize,
    /// Side of the point cloud for the `L^p` growth sweep; 0 skips it.
    #[serde(default)]
    pub growth_m: usize,
    #[serde(default = "default_growth_tests")]
    pub growth_tests: usize,
}

impl Default for KernelSection {
    fn default() -> Self {
        toml::from_str("").expect("all kernel fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSection {
    #[serde(default)]
    pub runs: Vec<String>,
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    #[serde(default = "default_mu")]
    pub mu: Vec<f64>,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default)]
    pub y0_tol: f64,
}

impl Default for DiagnoseSection {
    fn default() -> Self {
        toml::from_str("").expect("all diagnose fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub seed: u64,
    pub threads: Option<usize>,
}

fn one() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-10
}
fn default_trace_samples() -> usize {
    256
}
fn default_cfl() -> f64 {
    0.5
}
fn default_output_every() -> f64 {
    0.1
}
fn default_n() -> usize {
    2
}
fn default_eps() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}
fn default_calibration_eps() -> Vec<f64> {
    vec![1e-3, 1e-4, 1e-5, 1e-6]
}
fn default_h_fd() -> f64 {
    1e-3
}
fn default_orders() -> Vec<usize> {
    vec![0, 1, 2]
}
fn default_separations() -> usize {
    13
}
fn default_growth_tests() -> usize {
    4
}
fn default_p() -> Vec<f64> {
    vec![3.0, 4.0, 8.0, 16.0, 32.0, 64.0]
}
fn default_mu() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}
fn default_pairs() -> usize {
    100_000
}
fn default_slack() -> f64 {
    10.0
}

/// One problem found in a config document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    /// Dotted path such as `domain.a`.
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl From<ConfigErrors> for LakeError {
    fn from(e: ConfigErrors) -> Self {
        LakeError::Validation(e.to_string())
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key = ...` inside `[section]`, or of the section header.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == section {
                header = Some(k + 1);
            }
            continue;
        }
        if current == section {
            if let Some((lhs, _)) = line.split_once('=') {
                if lhs.trim() == key {
                    return Some(k + 1);
                }
            }
        }
    }
    header
}

struct Checker<'a> {
    text: &'a str,
    issues: Vec<ConfigIssue>,
}

impl Checker<'_> {
    fn push(&mut self, section: &str, key: &str, message: String) {
        self.issues.push(ConfigIssue {
            line: locate(self.text, section, key),
            field: format!("{section}.{key}"),
            message,
        });
    }

    fn check(&mut self, ok: bool, section: &str, key: &str, message: impl FnOnce() -> String) {
        if !ok {
            self.push(section, key, message());
        }
    }

    fn positive(&mut self, v: f64, section: &str, key: &str) {
        self.check(v > 0.0 && v.is_finite(), section, key, || format!("must be positive, got {v}"));
    }

    fn expr(&mut self, src: &str, section: &str, key: &str) {
        if let Err(e) = Expr::parse(src) {
            self.push(section, key, e.to_string());
        }
    }
}

/// Parses and range-checks a config document. Every problem found is
/// reported, each with its line when it can be located.
pub fn parse_config(text: &str) -> std::result::Result<RunConfig, ConfigErrors> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(text, s.start));
        ConfigErrors(vec![ConfigIssue { line, field: "document".into(), message: e.message().trim().to_string() }])
    })?;
    let mut c = Checker { text, issues: Vec::new() };
    if let Some(d) = &cfg.domain {
        c.positive(d.a, "domain", "a");
        match d.h.value() {
            Ok(h) => c.check(h > 0.0 && h < 1.0, "domain", "h", || format!("must lie in (0, 1), got {h}")),
            Err(e) => c.push("domain", "h", e.to_string()),
        }
        if let Some(r) = d.radius {
            c.positive(r, "domain", "radius");
        }
        if let Some([sx, sy]) = d.semi_axes {
            c.check(sx > 0.0 && sy > 0.0, "domain", "semi_axes", || format!("must be positive, got [{sx}, {sy}]"));
        }
        if let Some(b) = d.bbox {
            c.check(b[0] < b[1] && b[2] < b[3], "domain", "bbox", || format!("must be [x0, x1, y0, y1] with x0 < x1, y0 < y1, got {b:?}"));
        }
        if d.shape == Shape::Polynomial {
            c.check(d.terms.is_some(), "domain", "terms", || "required for a polynomial domain".into());
            c.check(d.bbox.is_some(), "domain", "bbox", || "required for a polynomial domain".into());
        }
        if let Some(ts) = &d.terms {
            let ok = ts.iter().all(|t| t[0] >= 0.0 && t[1] >= 0.0 && t[0].fract() == 0.0 && t[1].fract() == 0.0);
            c.check(ok, "domain", "terms", || "exponents must be nonnegative integers".into());
        }
    }
    if let Some(e) = &cfg.elliptic {
        c.expr(&e.f, "elliptic", "f");
        if let Some(x) = &e.exact {
            c.expr(x, "elliptic", "exact");
        }
        c.positive(e.tol, "elliptic", "tol");
        c.check(e.weight_offset >= 0.0, "elliptic", "weight_offset", || format!("must be nonnegative, got {}", e.weight_offset));
        c.check(e.trace_samples > 0, "elliptic", "trace_samples", || "must be positive".into());
        c.check(e.max_iter != Some(0), "elliptic", "max_iter", || "must be positive".into());
    }
    if let Some(t) = &cfg.transport {
        c.expr(&t.omega0, "transport", "omega0");
        if let Some(p) = &t.perturbation {
            c.expr(p, "transport", "perturbation");
        }
        c.check(t.eta.is_finite(), "transport", "eta", || format!("must be finite, got {}", t.eta));
        c.check(t.viscosity >= 0.0 && t.viscosity.is_finite(), "transport", "viscosity", || {
            format!("must be nonnegative, got {}", t.viscosity)
        });
        c.check(t.cfl > 0.0 && t.cfl <= 1.0, "transport", "cfl", || format!("must lie in (0, 1], got {}", t.cfl));
        c.check(t.t_end >= 0.0 && t.t_end.is_finite(), "transport", "t_end", || format!("must be nonnegative, got {}", t.t_end));
        c.positive(t.output_every, "transport", "output_every");
        if let Some(r) = t.truncation {
            c.positive(r, "transport", "truncation");
        }
        c.positive(t.solve_tol, "transport", "solve_tol");
    }
    if let Some(k) = &cfg.kernels {
        c.positive(k.a, "kernels", "a");
        c.check(k.n >= 2, "kernels", "n", || format!("must be >= 2, got {}", k.n));
        c.check(!k.eps.is_empty() && k.eps.iter().all(|e| *e > 0.0 && *e < 1.0), "kernels", "eps", || {
            "must be a nonempty list in (0, 1)".into()
        });
        c.check(
            k.calibration_eps.len() >= 3 && k.calibration_eps.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0) && k.calibration_eps[0] < 1.0,
            "kernels",
            "calibration_eps",
            || "needs at least three strictly decreasing values in (0, 1)".into(),
        );
        if let Some(g) = k.gamma {
            c.positive(g, "kernels", "gamma");
        }
        c.positive(k.h_fd, "kernels", "h_fd");
        c.check(k.orders.iter().all(|o| *o <= 2), "kernels", "orders", || "orders must be 0, 1 or 2".into());
        c.check(k.separations >= 2, "kernels", "separations", || "must be at least 2".into());
        c.check(k.growth_m == 0 || k.growth_m >= 2, "kernels", "growth_m", || "must be 0 or at least 2".into());
        c.check(k.growth_tests > 0, "kernels", "growth_tests", || "must be positive".into());
    }
    if let Some(d) = &cfg.diagnose {
        c.check(!d.p.is_empty() && d.p.iter().all(|p| (3.0..=64.0).contains(p)), "diagnose", "p", || {
            "exponents must lie in [3, 64]".into()
        });
        c.check(d.mu.iter().all(|m| *m > 0.0 && *m < 1.0), "diagnose", "mu", || "exponents must lie in (0, 1)".into());
        c.check(d.pairs > 0, "diagnose", "pairs", || "must be positive".into());
        c.check(d.slack >= 1.0, "diagnose", "slack", || format!("must be >= 1, got {}", d.slack));
        c.check(d.y0_tol >= 0.0, "diagnose", "y0_tol", || format!("must be nonnegative, got {}", d.y0_tol));
        c.check(d.runs.len() <= 2, "diagnose", "runs", || "takes one or two manifests".into());
    }
    if let Some(t) = cfg.run.threads {
        c.check(t > 0, "run", "threads", || "must be positive".into());
    }
    if c.issues.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(c.issues))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[domain]\nshape = \"disk\"\na = 1\nh = \"1/64\"\n\n[elliptic]\nf = \"-8\"\n";

    #[test]
    fn minimal_disk_config() {
        let c = parse_config(MINIMAL).unwrap();
        let d = c.domain.unwrap();
        assert_eq!(d.h.value().unwrap(), 1.0 / 64.0);
        assert_eq!(d.a, 1.0);
        assert_eq!(c.elliptic.unwrap().tol, 1e-10);
        assert_eq!(c.run.seed, 0);
    }

    #[test]
    fn negative_exponent_names_the_field() {
        let e = parse_config(&MINIMAL.replace("a = 1", "a = -1")).unwrap_err();
        assert_eq!(e.0.len(), 1);
        assert_eq!(e.0[0].field, "domain.a");
        assert_eq!(e.0[0].line, Some(3));
    }

    #[test]
    fn duplicate_key_is_a_parse_error() {
        let e = parse_config(&MINIMAL.replace("a = 1\n", "a = 1\na = 2\n")).unwrap_err();
        assert_eq!(e.0[0].field, "document");
        assert_eq!(e.0[0].line, Some(4));
    }

    #[test]
    fn unknown_key_and_type_mismatch_are_located() {
        let e = parse_config(&format!("{MINIMAL}bogus = 1\n")).unwrap_err();
        assert!(e.0[0].message.contains("bogus"), "{e}");
        assert_eq!(e.0[0].line, Some(8));
        let e = parse_config(&MINIMAL.replace("a = 1", "a = \"one\"")).unwrap_err();
        assert_eq!(e.0[0].line, Some(3), "{e}");
    }

    #[test]
    fn all_range_errors_are_collected() {
        let text = "[domain]\na = 0\nh = 2\n[transport]\nomega0 = \"x\"\ncfl = 2\n";
        let e = parse_config(text).unwrap_err();
        let fields: Vec<&str> = e.0.iter().map(|i| i.field.as_str()).collect();
        assert_eq!(fields, ["domain.a", "domain.h", "transport.cfl"]);
        assert_eq!(e.0[2].line, Some(6));
        assert!(matches!(LakeError::from(e), LakeError::Validation(_)));
    }

    #[test]
    fn bad_expression_is_reported() {
        let e = parse_config(&MINIMAL.replace("\"-8\"", "\"-8 +\"")).unwrap_err();
        assert_eq!(e.0[0].field, "elliptic.f");
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = parse_config(&format!("{MINIMAL}[transport]\nomega0 = \"x*y\"\n[kernels]\n[diagnose]\n")).unwrap();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.kernels.unwrap(), KernelSection::default());
    }

    #[test]
    fn domain_builds_a_grid() {
        let c = parse_config(&MINIMAL.replace("1/64", "1/16")).unwrap();
        let g = c.domain.unwrap().grid().unwrap();
        assert!(g.len() > 700 && g.len() < 820, "{}", g.len());
    }
}
