//! TOML experiment configuration.
//!
//! Every section is optional and falls back to the defaults below; unknown
//! keys are rejected. Grammar strings keep their source spans so parse errors
//! point at a line and column of the file.

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Spanned;

use super::CliError;
use crate::interpolation::{parse_psi_in, Psi};
use crate::ro_class::{parse_index_in, ParseError, RegularityIndex};

pub const SUITES: [&str; 9] =
    ["indices", "embed", "interp5", "interp6", "opnorm", "trace", "bvp", "localreg", "cp"];

type Text = Spanned<String>;

fn text(s: &str) -> Text {
    Spanned::new(0..0, s.to_string())
}

fn texts(items: &[&str]) -> Vec<Text> {
    items.iter().map(|s| text(s)).collect()
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Suite run when the command line does not name one.
    #[serde(default)]
    pub suite: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_budget")]
    pub memory_budget_mb: f64,
    #[serde(default)]
    pub catalog: Vec<Text>,
    #[serde(default)]
    pub lattice: LatticeSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub interp: InterpSection,
    #[serde(default)]
    pub embed: EmbedSection,
    #[serde(default)]
    pub opnorm: OpnormSection,
    #[serde(default)]
    pub trace: TraceSection,
    #[serde(default)]
    pub bvp: BvpSection,
    #[serde(default)]
    pub localreg: LocalregSection,
    #[serde(default)]
    pub cp: CpSection,
}

fn default_budget() -> f64 {
    2048.0
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    pub dims: Vec<usize>,
    /// Radius ladder `N`, strictly increasing.
    pub radii: Vec<u32>,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self { dims: vec![1, 2], radii: vec![16] }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative deviation for norm identities.
    pub deviation: f64,
    pub residual: f64,
    pub manufactured: f64,
    pub closed_form: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { deviation: 1e-12, residual: 1e-12, manufactured: 1e-10, closed_form: 1e-6 }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpSection {
    /// Sobolev endpoint pairs `[s0, s1]`.
    pub pairs: Vec<[f64; 2]>,
    pub samples: usize,
    /// Explicit power parameters for reiteration.
    pub powers: Vec<f64>,
    /// Further `ψ` specifications for reiteration over the Sobolev pairs.
    pub psi: Vec<Text>,
}

impl Default for InterpSection {
    fn default() -> Self {
        Self {
            pairs: vec![[0.0, 2.0], [-1.0, 3.0], [0.5, 4.0]],
            samples: 50,
            powers: vec![0.25, 0.5, 0.75],
            psi: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedCase {
    pub phi0: Text,
    pub phi1: Text,
    /// `not_embedded`, `continuous`, `compact` or `undecidable`.
    pub expect: String,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedSection {
    pub cases: Vec<EmbedCase>,
    /// Level for the singular-value count of continuous pairs.
    pub eps: f64,
    /// Lattice radii for the tail and ε-count checks.
    pub radii: Vec<u32>,
}

impl Default for EmbedSection {
    fn default() -> Self {
        Self { cases: Vec::new(), eps: 0.5, radii: vec![8, 16, 32, 64] }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpnormSection {
    pub s0: f64,
    pub s1: f64,
    pub radius: u32,
    pub trials: usize,
    pub terms: usize,
    pub max_shift: i64,
    pub thetas: Vec<f64>,
    /// Certified non-power parameters.
    pub psi: Vec<Text>,
    pub slack: f64,
    pub ratio_bound: f64,
}

impl Default for OpnormSection {
    fn default() -> Self {
        Self {
            s0: 0.0,
            s1: 2.0,
            radius: 12,
            trials: 200,
            terms: 3,
            max_shift: 3,
            thetas: vec![0.25, 0.5, 0.75],
            psi: texts(&["thm5(pow(1) * log(1), 0, 2)", "pow(1/2) * log(1)"]),
            slack: 1e-9,
            ratio_bound: 10.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceSection {
    pub n: usize,
    /// Radius ladder for the band study.
    pub ladder: Vec<u32>,
    pub band_change: f64,
    pub band_ratio: f64,
    /// Indices whose ratio is expected to degenerate logarithmically.
    pub degenerate: Vec<Text>,
    pub decay_factor: f64,
    pub origin_radius: u32,
    pub origin_tolerance: f64,
    pub extension_radius: u32,
    pub extension_samples: usize,
    pub oracle_tolerance: f64,
    pub identity_tolerance: f64,
}

impl Default for TraceSection {
    fn default() -> Self {
        Self {
            n: 2,
            ladder: vec![16, 32, 64],
            band_change: 0.1,
            band_ratio: 10.0,
            degenerate: texts(&["pow(1/2)"]),
            decay_factor: 1.5,
            origin_radius: 10_000,
            origin_tolerance: 1e-3,
            extension_radius: 2,
            extension_samples: 100,
            oracle_tolerance: 1e-12,
            identity_tolerance: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct BvpSection {
    pub n: usize,
    pub radius: u32,
    pub orders: Vec<u32>,
    pub samples: usize,
    /// Weights for the a priori inequality.
    pub weights: Vec<Text>,
    pub manufactured_modes: usize,
    pub step_modes: usize,
    pub step: f64,
}

impl Default for BvpSection {
    fn default() -> Self {
        Self {
            n: 2,
            radius: 8,
            orders: vec![1, 2],
            samples: 100,
            weights: texts(&["pow(1)", "pow(2) * log(-1)", "pow(-1/2) * loglog(1)"]),
            manufactured_modes: 64,
            step_modes: 4096,
            step: 0.85,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalregSection {
    pub singularity: f64,
    pub ladder: Vec<u32>,
    /// `[a, b, width]` of the interior cutoff.
    pub interior: [f64; 3],
    pub control: [f64; 3],
    pub local_phi: Text,
    pub global_phi: Text,
    pub drift: f64,
    pub retention: f64,
}

impl Default for LocalregSection {
    fn default() -> Self {
        Self {
            singularity: 0.85,
            ladder: vec![256, 512, 1024, 2048, 4096],
            interior: [0.2, 0.6, 0.1],
            control: [0.7, 0.95, 0.05],
            local_phi: text("pow(4)"),
            global_phi: text("pow(5/2) * log(1)"),
            drift: 0.05,
            retention: 0.1,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RatioCheck {
    pub divergent: Text,
    pub convergent: Text,
    pub radius: u32,
    pub factor: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpSection {
    pub p: u32,
    pub n: usize,
    pub ladder: Vec<u32>,
    pub elements: usize,
    pub radius: u32,
    pub points: usize,
    pub ratio: Option<RatioCheck>,
}

impl Default for CpSection {
    fn default() -> Self {
        Self {
            p: 0,
            n: 1,
            ladder: vec![1_000, 10_000, 100_000],
            elements: 1000,
            radius: 64,
            points: 4,
            ratio: Some(RatioCheck {
                divergent: text("pow(1/2)"),
                convergent: text("pow(1/2) * log(1)"),
                radius: 1_000_000,
                factor: 5.0,
            }),
        }
    }
}

/// A validated configuration with every grammar string resolved.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub catalog: Vec<(String, RegularityIndex)>,
    pub base: Option<PathBuf>,
    source: String,
}

/// 1-based line and column of byte `offset`.
fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(source.len());
    let before = &source[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

impl Resolved {
    fn located(&self, span: Range<usize>, what: &str, e: ParseError) -> CliError {
        if span.is_empty() {
            return CliError::Grammar { line: 0, column: e.column, what: what.into(), message: e.message };
        }
        // the span covers the opening quote
        let (line, col) = line_col(&self.source, span.start + 1);
        CliError::Grammar { line, column: col + e.column - 1, what: what.into(), message: e.message }
    }

    pub fn index(&self, t: &Text, what: &str) -> Result<RegularityIndex, CliError> {
        parse_index_in(t.get_ref(), self.base.as_deref()).map_err(|e| self.located(t.span(), what, e))
    }

    pub fn psi(&self, t: &Text, what: &str) -> Result<Psi, CliError> {
        parse_psi_in(t.get_ref(), self.base.as_deref()).map_err(|e| self.located(t.span(), what, e))
    }

    /// SHA-256 of the canonical serialization of the configuration.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(&self.config).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn increasing(name: &str, v: &[u32]) -> Result<(), CliError> {
    if v.is_empty() || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Invalid(format!("{name} must be a non-empty, strictly increasing ladder")));
    }
    Ok(())
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(CliError::Invalid(format!("{name} must be positive, got {x}")));
    }
    Ok(())
}

pub fn parse_config(source: &str, base: Option<&Path>) -> Result<Resolved, CliError> {
    let config: ExperimentConfig = toml::from_str(source).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(source, s.start));
        CliError::Toml { line, column, message: e.message().to_string() }
    })?;
    let mut r = Resolved { config, catalog: Vec::new(), base: base.map(Path::to_path_buf), source: source.into() };
    let c = &r.config;
    if c.catalog.is_empty() {
        return Err(CliError::Invalid("empty catalog".into()));
    }
    if let Some(s) = &c.suite {
        if !SUITES.contains(&s.as_str()) {
            return Err(CliError::UnknownSuite(s.clone()));
        }
    }
    increasing("lattice.radii", &c.lattice.radii)?;
    increasing("embed.radii", &c.embed.radii)?;
    increasing("trace.ladder", &c.trace.ladder)?;
    increasing("localreg.ladder", &c.localreg.ladder)?;
    increasing("cp.ladder", &c.cp.ladder)?;
    if c.lattice.dims.is_empty() || c.lattice.dims.iter().any(|&n| !(1..=3).contains(&n)) {
        return Err(CliError::Invalid("lattice.dims must list dimensions in 1..=3".into()));
    }
    let t = &c.tolerances;
    for (name, x) in [
        ("tolerances.deviation", t.deviation),
        ("tolerances.residual", t.residual),
        ("tolerances.manufactured", t.manufactured),
        ("tolerances.closed_form", t.closed_form),
        ("memory_budget_mb", c.memory_budget_mb),
        ("opnorm.slack", c.opnorm.slack),
        ("opnorm.ratio_bound", c.opnorm.ratio_bound),
        ("trace.band_change", c.trace.band_change),
        ("trace.band_ratio", c.trace.band_ratio),
        ("trace.decay_factor", c.trace.decay_factor),
        ("trace.origin_tolerance", c.trace.origin_tolerance),
        ("trace.oracle_tolerance", c.trace.oracle_tolerance),
        ("trace.identity_tolerance", c.trace.identity_tolerance),
        ("embed.eps", c.embed.eps),
        ("localreg.drift", c.localreg.drift),
        ("localreg.retention", c.localreg.retention),
    ] {
        positive(name, x)?;
    }
    for [s0, s1] in &c.interp.pairs {
        if !(s0 < s1) {
            return Err(CliError::Invalid(format!("interp.pairs entry [{s0}, {s1}] needs s0 < s1")));
        }
    }
    for (i, e) in c.embed.cases.iter().enumerate() {
        if !["not_embedded", "continuous", "compact", "undecidable"].contains(&e.expect.as_str()) {
            return Err(CliError::Invalid(format!("embed.cases[{i}].expect: unknown verdict {:?}", e.expect)));
        }
    }

    let mut catalog = Vec::new();
    for (i, t) in c.catalog.iter().enumerate() {
        catalog.push((t.get_ref().clone(), r.index(t, &format!("catalog[{i}]"))?));
    }
    // every remaining grammar string must parse as well
    for (i, e) in c.embed.cases.iter().enumerate() {
        r.index(&e.phi0, &format!("embed.cases[{i}].phi0"))?;
        r.index(&e.phi1, &format!("embed.cases[{i}].phi1"))?;
    }
    for (i, t) in c.interp.psi.iter().enumerate() {
        r.psi(t, &format!("interp.psi[{i}]"))?;
    }
    for (i, t) in c.opnorm.psi.iter().enumerate() {
        r.psi(t, &format!("opnorm.psi[{i}]"))?;
    }
    for (i, t) in c.trace.degenerate.iter().enumerate() {
        r.index(t, &format!("trace.degenerate[{i}]"))?;
    }
    for (i, t) in c.bvp.weights.iter().enumerate() {
        r.index(t, &format!("bvp.weights[{i}]"))?;
    }
    r.index(&c.localreg.local_phi, "localreg.local_phi")?;
    r.index(&c.localreg.global_phi, "localreg.global_phi")?;
    if let Some(ratio) = &c.cp.ratio {
        r.index(&ratio.divergent, "cp.ratio.divergent")?;
        r.index(&ratio.convergent, "cp.ratio.convergent")?;
    }
    r.catalog = catalog;
    Ok(r)
}

pub fn load_config(path: &Path) -> Result<Resolved, CliError> {
    let source = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    parse_config(&source, path.parent())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let r = parse_config("catalog = [\"pow(1.3)\"]\n", None).unwrap();
        assert_eq!(r.catalog.len(), 1);
        assert_eq!(r.config.interp.samples, 50);
        assert_eq!(r.config.lattice.radii, vec![16]);
        assert_eq!(r.digest().len(), 64);
    }

    #[test]
    fn empty_catalog_is_rejected() {
        let e = parse_config("seed = 3\n", None).unwrap_err();
        assert!(e.to_string().contains("empty catalog"), "{e}");
        let e = parse_config("catalog = []\n", None).unwrap_err();
        assert!(e.to_string().contains("empty catalog"));
    }

    #[test]
    fn grammar_errors_carry_line_and_column() {
        let src = "seed = 1\ncatalog = [\n  \"pow(1)\",\n  \"pow(2) * lig(1)\",\n]\n";
        match parse_config(src, None).unwrap_err() {
            CliError::Grammar { line, column, what, .. } => {
                assert_eq!((line, what.as_str()), (4, "catalog[1]"));
                // "lig" is character 10 of the string, whose text starts at column 4
                assert_eq!(column, 4 + 10 - 1);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn toml_errors_carry_line_and_column() {
        let e = parse_config("catalog = [\"pow(1)\"]\nseed = = 2\n", None).unwrap_err();
        match e {
            CliError::Toml { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(
            parse_config("catalog = [\"pow(1)\"]\nbogus = 1\n", None),
            Err(CliError::Toml { .. })
        ));
    }

    #[test]
    fn ladders_and_tolerances_are_checked() {
        let e = parse_config("catalog = [\"one\"]\n[lattice]\nradii = [16, 8]\n", None).unwrap_err();
        assert!(matches!(e, CliError::Invalid(_)));
        let e = parse_config("catalog = [\"one\"]\n[tolerances]\ndeviation = 0.0\n", None).unwrap_err();
        assert!(e.to_string().contains("tolerances.deviation"));
        let e = parse_config("catalog = [\"one\"]\nsuite = \"nope\"\n", None).unwrap_err();
        assert!(matches!(e, CliError::UnknownSuite(_)));
    }

    #[test]
    fn digest_depends_on_content_only() {
        let a = parse_config("catalog = [\"pow(1)\"]\nseed = 4\n", None).unwrap();
        let b = parse_config("seed = 4\n\ncatalog = [ \"pow(1)\" ]\n", None).unwrap();
        let c = parse_config("catalog = [\"pow(1)\"]\nseed = 5\n", None).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
    }
}
