//! RO-varying regularity indices.
//!
//! A [`RegularityIndex`] is a positive function on `[1, ∞)` drawn from the
//! closed family `t^s (1+ln t)^r (1+ln(1+ln t))^k`, closed under products and
//! real powers, plus tabulated functions with log-log interpolation. Members
//! of the closed family carry exact Matuszewska indices; anything else goes
//! through the sampling estimator in [`estimate`].

mod estimate;
mod parse;

use std::fmt;
use std::path::Path;

use thiserror::Error;

pub use estimate::{
    matuszewska_estimate, ro_membership_check, EstimateConfig, IndexEstimate, Membership,
    MembershipGrid,
};
pub use parse::{parse_index, parse_index_in, ParseError};
pub(crate) use parse::Cursor;

/// Tolerance below which an aggregated exponent is treated as zero.
pub const EXPONENT_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoError {
    #[error("regularity index evaluated at t = {0} < 1")]
    Domain(f64),
    #[error("non-positive sample {value} at t = {t}")]
    NonPositive { t: f64, value: f64 },
    #[error("exact Matuszewska indices are unavailable for tabulated factors; use matuszewska_estimate")]
    TabulatedIndex,
    #[error("invalid table: {0}")]
    Table(String),
    #[error("estimator configuration: {0}")]
    Config(String),
}

/// Something that can be evaluated as a weight on `[1, ∞)`.
///
/// Callers guarantee `t >= 1`; [`RegularityIndex::eval`] is the checked entry
/// point.
pub trait Evaluator: Send + Sync {
    fn value(&self, t: f64) -> f64;

    /// `ln φ(e^u)`, for sums and integrals whose terms overflow in linear space.
    fn log_value_at_log(&self, u: f64) -> f64 {
        self.value(u.exp()).ln()
    }

    /// True when `value(t)` relies on extrapolation beyond sampled data.
    fn is_extrapolated(&self, _t: f64) -> bool {
        false
    }

    fn closed_form(&self) -> Option<&RegularityIndex> {
        None
    }

    fn label(&self) -> String;
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn value(&self, t: f64) -> f64 {
        (**self).value(t)
    }
    fn log_value_at_log(&self, u: f64) -> f64 {
        (**self).log_value_at_log(u)
    }
    fn is_extrapolated(&self, t: f64) -> bool {
        (**self).is_extrapolated(t)
    }
    fn closed_form(&self) -> Option<&RegularityIndex> {
        (**self).closed_form()
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

impl<E: Evaluator + ?Sized> Evaluator for std::sync::Arc<E> {
    fn value(&self, t: f64) -> f64 {
        (**self).value(t)
    }
    fn log_value_at_log(&self, u: f64) -> f64 {
        (**self).log_value_at_log(u)
    }
    fn is_extrapolated(&self, t: f64) -> bool {
        (**self).is_extrapolated(t)
    }
    fn closed_form(&self) -> Option<&RegularityIndex> {
        (**self).closed_form()
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

/// A black-box weight given by a closure.
pub struct BlackBox<F> {
    name: String,
    f: F,
}

impl<F: Fn(f64) -> f64 + Send + Sync> BlackBox<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> Evaluator for BlackBox<F> {
    fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }
    fn label(&self) -> String {
        self.name.clone()
    }
}

/// Aggregated exponents of a closed-family index.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerLogExponents {
    /// Power of `t`.
    pub s: f64,
    /// Power of `1 + ln t`.
    pub r: f64,
    /// Power of `1 + ln(1 + ln t)`.
    pub k: f64,
}

impl PowerLogExponents {
    pub fn scaled(self, e: f64) -> Self {
        Self { s: self.s * e, r: self.r * e, k: self.k * e }
    }

    pub fn plus(self, o: Self) -> Self {
        Self { s: self.s + o.s, r: self.r + o.r, k: self.k + o.k }
    }

    pub fn minus(self, o: Self) -> Self {
        Self { s: self.s - o.s, r: self.r - o.r, k: self.k - o.k }
    }

    /// Sign of the function's growth at infinity: lexicographic sign of `(s, r, k)`.
    pub fn growth_sign(self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        for e in [self.s, self.r, self.k] {
            if e > EXPONENT_EPS {
                return Greater;
            }
            if e < -EXPONENT_EPS {
                return Less;
            }
        }
        Equal
    }

    /// Whether the lower bound `c₀ λ^σ₀ ≤ φ(λt)/φ(t)` holds with `σ₀ = s` itself.
    ///
    /// The slowly varying part is then almost increasing, i.e. `(r, k) ≥ 0`
    /// lexicographically.
    pub fn lower_index_attained(self) -> bool {
        Self { s: 0.0, ..self }.growth_sign() != std::cmp::Ordering::Less
    }

    /// Whether the upper bound holds with `σ₁ = s` itself (`(r, k) ≤ 0`).
    pub fn upper_index_attained(self) -> bool {
        Self { s: 0.0, ..self }.growth_sign() != std::cmp::Ordering::Greater
    }
}

/// Positive samples on `[1, T_max]` interpolated linearly in log-log
/// coordinates and extrapolated beyond `T_max` with a declared slope.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    log_t: Vec<f64>,
    log_phi: Vec<f64>,
    slope: f64,
    source: String,
}

impl Table {
    /// Builds a table from `(t, φ(t))` points. The first abscissa must be 1,
    /// abscissae must increase strictly and all values must be positive.
    pub fn from_points(
        points: &[(f64, f64)],
        slope: Option<f64>,
        source: impl Into<String>,
    ) -> Result<Self, RoError> {
        if points.len() < 2 {
            return Err(RoError::Table("at least two samples are required".into()));
        }
        if points[0].0 != 1.0 {
            return Err(RoError::Table(format!(
                "first abscissa must be 1, got {}",
                points[0].0
            )));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(RoError::Table(format!(
                    "abscissae must increase strictly ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        let mut log_t = Vec::with_capacity(points.len());
        let mut log_phi = Vec::with_capacity(points.len());
        for &(t, v) in points {
            if !(v > 0.0) || !v.is_finite() {
                return Err(RoError::NonPositive { t, value: v });
            }
            log_t.push(t.ln());
            log_phi.push(v.ln());
        }
        let n = log_t.len();
        let slope = slope.unwrap_or_else(|| {
            (log_phi[n - 1] - log_phi[n - 2]) / (log_t[n - 1] - log_t[n - 2])
        });
        if !slope.is_finite() {
            return Err(RoError::Table("extrapolation slope must be finite".into()));
        }
        let table = Self { log_t, log_phi, slope, source: source.into() };
        table.audit()?;
        Ok(table)
    }

    /// Samples `f` on a log-spaced grid of `[1, t_max]`.
    pub fn sample(
        f: impl Fn(f64) -> f64,
        t_max: f64,
        points: usize,
        slope: f64,
        source: impl Into<String>,
    ) -> Result<Self, RoError> {
        if !(t_max > 1.0) || points < 2 {
            return Err(RoError::Table("need t_max > 1 and at least two points".into()));
        }
        let step = t_max.ln() / (points - 1) as f64;
        let pts: Vec<(f64, f64)> = (0..points)
            .map(|i| {
                let t = if i == 0 { 1.0 } else { (i as f64 * step).exp() };
                (t, f(t))
            })
            .collect();
        Self::from_points(&pts, Some(slope), source)
    }

    /// Reads a two-column text file (`t φ(t)` per line, `#` comments allowed).
    pub fn from_file(path: &Path, slope: Option<f64>) -> Result<Self, RoError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RoError::Table(format!("{}: {e}", path.display())))?;
        let mut pts = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(RoError::Table(format!(
                    "{}:{}: expected two columns",
                    path.display(),
                    lineno + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| {
                    RoError::Table(format!("{}:{}: {e}", path.display(), lineno + 1))
                })
            };
            pts.push((parse(cols[0])?, parse(cols[1])?));
        }
        Self::from_points(&pts, slope, path.display().to_string())
    }

    pub fn t_max(&self) -> f64 {
        self.log_t.last().copied().unwrap_or(0.0).exp()
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn log_eval(&self, u: f64) -> f64 {
        let n = self.log_t.len();
        let last = self.log_t[n - 1];
        if u >= last {
            return self.log_phi[n - 1] + self.slope * (u - last);
        }
        // first index with log_t > u
        let hi = self.log_t.partition_point(|&x| x <= u).clamp(1, n - 1);
        let lo = hi - 1;
        let w = (u - self.log_t[lo]) / (self.log_t[hi] - self.log_t[lo]);
        self.log_phi[lo] + w * (self.log_phi[hi] - self.log_phi[lo])
    }

    /// Dense positivity audit: four points per table interval plus a tail.
    fn audit(&self) -> Result<(), RoError> {
        let n = self.log_t.len();
        for i in 0..n - 1 {
            for j in 0..4 {
                let u = self.log_t[i] + (self.log_t[i + 1] - self.log_t[i]) * j as f64 / 4.0;
                let v = self.log_eval(u).exp();
                if !(v > 0.0) || !v.is_finite() {
                    return Err(RoError::NonPositive { t: u.exp(), value: v });
                }
            }
        }
        Ok(())
    }
}

/// A regularity index φ: `[1, ∞) → (0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub enum RegularityIndex {
    PowerLog { s: f64, r: f64, k: f64 },
    Product(Vec<RegularityIndex>),
    PowerOf { base: Box<RegularityIndex>, exponent: f64 },
    Tabulated(Table),
}

/// One evaluation together with its extrapolation flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub extrapolated: bool,
}

impl RegularityIndex {
    pub fn one() -> Self {
        Self::PowerLog { s: 0.0, r: 0.0, k: 0.0 }
    }

    /// `t^s`
    pub fn power(s: f64) -> Self {
        Self::PowerLog { s, r: 0.0, k: 0.0 }
    }

    pub fn power_log(s: f64, r: f64, k: f64) -> Self {
        Self::PowerLog { s, r, k }
    }

    pub fn product(factors: Vec<RegularityIndex>) -> Self {
        Self::Product(factors)
    }

    pub fn powered(self, exponent: f64) -> Self {
        Self::PowerOf { base: Box::new(self), exponent }
    }

    pub fn tabulated(table: Table) -> Self {
        Self::Tabulated(table)
    }

    /// Checked evaluation.
    pub fn eval(&self, t: f64) -> Result<f64, RoError> {
        self.eval_flagged(t).map(|e| e.value)
    }

    pub fn eval_flagged(&self, t: f64) -> Result<Evaluation, RoError> {
        if !(t >= 1.0) {
            return Err(RoError::Domain(t));
        }
        Ok(Evaluation { value: self.eval_unchecked(t), extrapolated: self.extrapolates(t) })
    }

    fn eval_unchecked(&self, t: f64) -> f64 {
        match self {
            Self::PowerLog { s, r, k } => {
                let mut v = 1.0;
                if *s != 0.0 {
                    v *= t.powf(*s);
                }
                if *r != 0.0 || *k != 0.0 {
                    let lt = t.ln();
                    if *r != 0.0 {
                        v *= (1.0 + lt).powf(*r);
                    }
                    if *k != 0.0 {
                        v *= (1.0 + lt.ln_1p()).powf(*k);
                    }
                }
                v
            }
            Self::Product(fs) => fs.iter().fold(1.0, |acc, f| acc * f.eval_unchecked(t)),
            Self::PowerOf { base, exponent } => base.eval_unchecked(t).powf(*exponent),
            Self::Tabulated(tab) => tab.log_eval(t.ln()).exp(),
        }
    }

    fn log_at_log(&self, u: f64) -> f64 {
        match self {
            Self::PowerLog { s, r, k } => {
                let mut v = 0.0;
                if *s != 0.0 {
                    v += s * u;
                }
                if *r != 0.0 {
                    v += r * u.ln_1p();
                }
                if *k != 0.0 {
                    v += k * u.ln_1p().ln_1p();
                }
                v
            }
            Self::Product(fs) => fs.iter().fold(0.0, |acc, f| acc + f.log_at_log(u)),
            Self::PowerOf { base, exponent } => exponent * base.log_at_log(u),
            Self::Tabulated(tab) => tab.log_eval(u),
        }
    }

    fn extrapolates(&self, t: f64) -> bool {
        match self {
            Self::PowerLog { .. } => false,
            Self::Product(fs) => fs.iter().any(|f| f.extrapolates(t)),
            Self::PowerOf { base, .. } => base.extrapolates(t),
            Self::Tabulated(tab) => t > tab.t_max(),
        }
    }

    pub fn is_closed_form(&self) -> bool {
        self.closed_exponents().is_some()
    }

    /// Aggregated `(s, r, k)` when no tabulated factor is present.
    ///
    /// Products fold left to right, so appending a factor shifts the sums by
    /// exactly that factor's exponents.
    pub fn closed_exponents(&self) -> Option<PowerLogExponents> {
        match self {
            Self::PowerLog { s, r, k } => Some(PowerLogExponents { s: *s, r: *r, k: *k }),
            Self::Product(fs) => fs.iter().try_fold(PowerLogExponents::default(), |acc, f| {
                f.closed_exponents().map(|e| acc.plus(e))
            }),
            Self::PowerOf { base, exponent } => base.closed_exponents().map(|e| e.scaled(*exponent)),
            Self::Tabulated(_) => None,
        }
    }

    /// Exact lower and upper Matuszewska indices of a closed-family index.
    ///
    /// Logarithmic factors are slowly varying and contribute nothing, so both
    /// indices equal the aggregate power exponent.
    pub fn matuszewska_exact(&self) -> Result<(f64, f64), RoError> {
        let e = self.closed_exponents().ok_or(RoError::TabulatedIndex)?;
        Ok((e.s, e.s))
    }

    /// `φ · ρ^a` with `ρ(t) = t`.
    pub fn rho_shift(&self, a: f64) -> Self {
        match self {
            Self::PowerLog { s, r, k } => Self::PowerLog { s: s + a, r: *r, k: *k },
            Self::Product(fs) => {
                let mut fs = fs.clone();
                fs.push(Self::power(a));
                Self::Product(fs)
            }
            other => Self::Product(vec![other.clone(), Self::power(a)]),
        }
    }

    /// Pointwise quotient `self / denominator`.
    pub fn ratio(&self, denominator: &RegularityIndex) -> Self {
        if self == denominator {
            return Self::one();
        }
        match (self, denominator) {
            (Self::PowerLog { s: s1, r: r1, k: k1 }, Self::PowerLog { s: s0, r: r0, k: k0 }) => {
                Self::PowerLog { s: s1 - s0, r: r1 - r0, k: k1 - k0 }
            }
            _ => Self::Product(vec![self.clone(), denominator.clone().powered(-1.0)]),
        }
    }
}

/// `φ₁ / φ₀` as a regularity index.
pub fn ratio_index(phi1: &RegularityIndex, phi0: &RegularityIndex) -> RegularityIndex {
    phi1.ratio(phi0)
}

/// `φ · ρ^a`.
pub fn rho_shift(phi: &RegularityIndex, a: f64) -> RegularityIndex {
    phi.rho_shift(a)
}

impl Evaluator for RegularityIndex {
    fn value(&self, t: f64) -> f64 {
        self.eval_unchecked(t)
    }
    fn log_value_at_log(&self, u: f64) -> f64 {
        self.log_at_log(u)
    }
    fn is_extrapolated(&self, t: f64) -> bool {
        self.extrapolates(t)
    }
    fn closed_form(&self) -> Option<&RegularityIndex> {
        self.is_closed_form().then_some(self)
    }
    fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for RegularityIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PowerLog { s, r, k } => {
                let mut parts = Vec::new();
                if *s != 0.0 || (*r == 0.0 && *k == 0.0) {
                    parts.push(format!("pow({s})"));
                }
                if *r != 0.0 {
                    parts.push(format!("log({r})"));
                }
                if *k != 0.0 {
                    parts.push(format!("loglog({k})"));
                }
                write!(f, "{}", parts.join(" * "))
            }
            Self::Product(fs) => {
                if fs.is_empty() {
                    return write!(f, "pow(0)");
                }
                let parts: Vec<String> = fs
                    .iter()
                    .map(|x| match x {
                        Self::PowerOf { .. } | Self::Tabulated(_) => x.to_string(),
                        _ => format!("({x})"),
                    })
                    .collect();
                write!(f, "{}", parts.join(" * "))
            }
            Self::PowerOf { base, exponent } => write!(f, "({base})^{exponent}"),
            Self::Tabulated(tab) => write!(f, "table({}, {})", tab.source, tab.slope),
        }
    }
}
