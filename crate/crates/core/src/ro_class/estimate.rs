//! Sampling estimators for Matuszewska indices and RO membership.
//!
//! The raw estimate follows the definition: for dyadic `λ`, the extreme
//! ratios `M⁺(λ) = sup_t φ(λt)/φ(t)` and `M⁻(λ) = inf_t φ(λt)/φ(t)` are taken
//! over a log-spaced t-grid, and their log-log slopes over the top octaves are
//! reported. Those slopes carry a `1/ln t` bias from slowly varying factors
//! that a grid ending at `10⁶` cannot outrun, so the brackets come from the
//! local orders `ln(φ(λt)/φ(t)) / ln λ` at the bottom octaves instead,
//! extrapolated to `t = ∞` in the variable `1/(1 + ln t + ln λ/2)` with
//! polynomial fits of degree one to three. The spread between those
//! extrapolants widens the bracket on both sides.

use super::{Evaluator, RoError};
use crate::fit;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateConfig {
    /// Largest dyadic `λ`; at least `8` so three octaves exist.
    pub lambda_max: f64,
    pub t_max: f64,
    pub points_per_decade: usize,
    /// Octaves used by the raw slope fit, counted from the top.
    pub fit_octaves: usize,
    /// Octaves used by the local-order extrapolation, counted from `λ = 2`.
    pub local_octaves: usize,
    /// Part of the `ln t` range (from the top) used by the extrapolation.
    pub tail_fraction: f64,
    /// Absolute padding added to both ends of every bracket.
    pub padding: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            lambda_max: 1024.0,
            t_max: 1e6,
            points_per_decade: 16,
            fit_octaves: 3,
            local_octaves: 3,
            tail_fraction: 0.5,
            padding: 1e-9,
        }
    }
}

/// Log-spaced sampling descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl TGrid {
    fn new(t_max: f64, points_per_decade: usize) -> Self {
        let decades = t_max.log10();
        let points = ((decades * points_per_decade as f64).ceil() as usize).max(1) + 1;
        Self { t_min: 1.0, t_max, points }
    }

    fn log_nodes(&self) -> Vec<f64> {
        let top = self.t_max.ln();
        (0..self.points).map(|i| top * i as f64 / (self.points - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEstimate {
    pub sigma0_lo: f64,
    pub sigma0_hi: f64,
    pub sigma1_lo: f64,
    pub sigma1_hi: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    /// Log-log slopes of `M⁻` and `M⁺` over the top octaves.
    pub raw_sigma0: f64,
    pub raw_sigma1: f64,
    pub lambda_grid: Vec<f64>,
    pub t_grid: TGrid,
    pub log_upper_ratio: Vec<f64>,
    pub log_lower_ratio: Vec<f64>,
    /// RO certificate: `c⁻¹ ≤ φ(λt)/φ(t) ≤ c` for `λ ∈ [1, b]` on the grid.
    /// `c` is infinite when the membership check reported a violation.
    pub b: f64,
    pub c: f64,
    pub extrapolated_evaluations: usize,
}

impl IndexEstimate {
    pub fn sigma0_contains(&self, s: f64) -> bool {
        self.sigma0_lo <= s && s <= self.sigma0_hi
    }

    pub fn sigma1_contains(&self, s: f64) -> bool {
        self.sigma1_lo <= s && s <= self.sigma1_hi
    }

    pub fn sigma0_width(&self) -> f64 {
        self.sigma0_hi - self.sigma0_lo
    }

    pub fn sigma1_width(&self) -> f64 {
        self.sigma1_hi - self.sigma1_lo
    }
}

fn checked_log(phi: &dyn Evaluator, t: f64) -> Result<f64, RoError> {
    let v = phi.value(t);
    if !(v > 0.0) || !v.is_finite() {
        return Err(RoError::NonPositive { t, value: v });
    }
    Ok(v.ln())
}

/// Brackets the Matuszewska indices of `phi` from samples.
pub fn matuszewska_estimate(
    phi: &dyn Evaluator,
    config: &EstimateConfig,
) -> Result<IndexEstimate, RoError> {
    let octaves = (config.lambda_max.log2() + 1e-9).floor() as i32;
    if octaves < 3 {
        return Err(RoError::Config(format!(
            "lambda_max = {} gives fewer than 3 dyadic points",
            config.lambda_max
        )));
    }
    if !(config.t_max > 10.0) || config.points_per_decade < 2 {
        return Err(RoError::Config("t-grid needs t_max > 10 and two points per decade".into()));
    }
    let fit_octaves = config.fit_octaves.clamp(2, octaves as usize);
    let local_octaves = config.local_octaves.clamp(1, octaves as usize);

    let grid = TGrid::new(config.t_max, config.points_per_decade);
    let us = grid.log_nodes();
    let lambdas: Vec<f64> = (1..=octaves).map(|j| 2f64.powi(j)).collect();

    let mut extrapolated = 0;
    let mut base = Vec::with_capacity(us.len());
    for &u in &us {
        let t = u.exp();
        extrapolated += phi.is_extrapolated(t) as usize;
        base.push(checked_log(phi, t)?);
    }
    // log ratios, row per λ
    let mut log_ratio = Vec::with_capacity(lambdas.len());
    for &lam in &lambdas {
        let mut row = Vec::with_capacity(us.len());
        for (i, &u) in us.iter().enumerate() {
            let t = lam * u.exp();
            extrapolated += phi.is_extrapolated(t) as usize;
            row.push(checked_log(phi, t)? - base[i]);
        }
        log_ratio.push(row);
    }

    let log_upper: Vec<f64> =
        log_ratio.iter().map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    let log_lower: Vec<f64> =
        log_ratio.iter().map(|r| r.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let top = lambdas.len() - fit_octaves;
    let log_lams: Vec<f64> = lambdas[top..].iter().map(|l| l.ln()).collect();
    let raw_sigma1 = fit::slope(&log_lams, &log_upper[top..]);
    let raw_sigma0 = fit::slope(&log_lams, &log_lower[top..]);

    let u_cut = config.tail_fraction.clamp(0.0, 0.9) * us[us.len() - 1];
    let (mut lo0, mut hi0, mut c0) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let (mut lo1, mut hi1, mut c1) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (j, lam) in lambdas.iter().take(local_octaves).enumerate() {
        let l = lam.ln();
        let mut vs = Vec::new();
        let mut qs = Vec::new();
        for (i, &u) in us.iter().enumerate() {
            if u >= u_cut {
                vs.push(1.0 / (1.0 + u + 0.5 * l));
                qs.push(log_ratio[j][i] / l);
            }
        }
        let max_degree = 3.min(vs.len().saturating_sub(2)).max(1);
        let ex: Vec<f64> = (1..=max_degree).map(|d| fit::poly_intercept(&vs, &qs, d)).collect();
        let emin = ex.iter().copied().fold(f64::INFINITY, f64::min);
        let emax = ex.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let spread = emax - emin;
        let lo = emin - spread - config.padding;
        let hi = emax + spread + config.padding;
        let centre = ex[ex.len().min(2) - 1];
        lo0 = lo0.min(lo);
        hi0 = hi0.min(hi);
        c0 = c0.min(centre);
        lo1 = lo1.max(lo);
        hi1 = hi1.max(hi);
        c1 = c1.max(centre);
    }

    let membership = ro_membership_check(
        phi,
        2.0,
        &MembershipGrid {
            t_max: config.t_max,
            points_per_decade: config.points_per_decade,
            ..MembershipGrid::default()
        },
    )?;
    let c = match membership {
        Membership::Certificate { c, .. } => c,
        Membership::Violation { .. } => f64::INFINITY,
    };

    Ok(IndexEstimate {
        sigma0_lo: lo0,
        sigma0_hi: hi0,
        sigma1_lo: lo1,
        sigma1_hi: hi1,
        sigma0: c0,
        sigma1: c1,
        raw_sigma0,
        raw_sigma1,
        lambda_grid: lambdas,
        t_grid: grid,
        log_upper_ratio: log_upper,
        log_lower_ratio: log_lower,
        b: 2.0,
        c,
        extrapolated_evaluations: extrapolated,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipGrid {
    pub t_max: f64,
    pub points_per_decade: usize,
    /// `λ` runs over `2^{j/steps_per_octave} ≤ b`, a nested family in `b`.
    pub steps_per_octave: usize,
    /// Per-decade growth factor of the sampled constant that counts as unbounded.
    pub growth_threshold: f64,
    /// Number of consecutive decade transitions that must exceed the threshold.
    pub growth_decades: usize,
}

impl Default for MembershipGrid {
    fn default() -> Self {
        Self {
            t_max: 1e6,
            points_per_decade: 16,
            steps_per_octave: 64,
            growth_threshold: 2.0,
            growth_decades: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Membership {
    Certificate { b: f64, c: f64, decade_maxima: Vec<f64> },
    /// `ratio = φ(λt)/φ(t)` at the witness, taken from the last decade.
    Violation { t: f64, lambda: f64, ratio: f64, decade_maxima: Vec<f64> },
}

impl Membership {
    pub fn certificate(&self) -> Option<f64> {
        match self {
            Membership::Certificate { c, .. } => Some(*c),
            Membership::Violation { .. } => None,
        }
    }
}

/// Samples `max(ratio, 1/ratio)` over `t` on the grid and `λ ∈ [1, b]`.
pub fn ro_membership_check(
    phi: &dyn Evaluator,
    b: f64,
    grid: &MembershipGrid,
) -> Result<Membership, RoError> {
    if !(b > 1.0) {
        return Err(RoError::Config(format!("b must exceed 1, got {b}")));
    }
    let tg = TGrid::new(grid.t_max, grid.points_per_decade);
    let us = tg.log_nodes();
    let steps = grid.steps_per_octave.max(1) as f64;
    let j_max = (steps * b.log2() + 1e-9).floor() as i64;
    let lambdas: Vec<f64> = (0..=j_max).map(|j| 2f64.powf(j as f64 / steps)).collect();
    let decades = (grid.t_max.log10() - 1e-9).ceil().max(1.0) as usize;
    let ln10 = std::f64::consts::LN_10;

    let mut maxima = vec![1.0f64; decades];
    let mut witness = vec![(1.0f64, 1.0f64, 1.0f64); decades];
    for &u in &us {
        let t = u.exp();
        let d = ((u / ln10 + 1e-9).floor() as usize).min(decades - 1);
        let base = checked_log(phi, t)?;
        for &lam in &lambdas {
            let lr = checked_log(phi, lam * t)? - base;
            let m = lr.abs().exp();
            if m > maxima[d] {
                maxima[d] = m;
                witness[d] = (t, lam, lr.exp());
            }
        }
    }

    let need = grid.growth_decades.max(1);
    if decades > need {
        let tail = &maxima[decades - need - 1..];
        let growing = tail.windows(2).all(|w| w[1] >= grid.growth_threshold * w[0]);
        if growing {
            let (t, lambda, ratio) = witness[decades - 1];
            return Ok(Membership::Violation { t, lambda, ratio, decade_maxima: maxima });
        }
    }
    let c = maxima.iter().copied().fold(1.0, f64::max);
    Ok(Membership::Certificate { b, c, decade_maxima: maxima })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ro_class::{BlackBox, RegularityIndex, Table};

    #[test]
    fn pure_power_brackets_are_tight() {
        let phi = RegularityIndex::power(1.5);
        let est = matuszewska_estimate(&phi, &EstimateConfig::default()).unwrap();
        assert!(est.sigma0_contains(1.5) && est.sigma1_contains(1.5));
        assert!(est.sigma0_width() <= 0.02 && est.sigma1_width() <= 0.02);
        assert!((est.raw_sigma1 - 1.5).abs() < 1e-12);
        assert!((est.c - 2f64.powf(1.5)).abs() < 1e-9);
    }

    #[test]
    fn log_corrected_square() {
        let phi = RegularityIndex::power_log(2.0, -3.0, 0.0);
        let cfg = EstimateConfig { lambda_max: 1024.0, t_max: 1e6, ..Default::default() };
        let est = matuszewska_estimate(&phi, &cfg).unwrap();
        assert!(est.sigma0_contains(2.0), "{est:?}");
        assert!(est.sigma1_contains(2.0), "{est:?}");
        assert!(est.sigma0_width() <= 0.05 && est.sigma1_width() <= 0.05);
        // the raw top-octave slopes are visibly biased
        assert!(est.raw_sigma0 < 1.9);
    }

    #[test]
    fn tabulated_knee() {
        // t on [1, 100], t²/100 beyond
        let tab = Table::sample(|t| t, 100.0, 41, 2.0, "knee").unwrap();
        let phi = RegularityIndex::tabulated(tab);
        let est = matuszewska_estimate(&phi, &EstimateConfig::default()).unwrap();
        assert!(est.sigma0_lo >= 0.9 && est.sigma0_hi <= 2.1, "{est:?}");
        assert!(est.sigma1_lo >= 0.9 && est.sigma1_hi <= 2.1, "{est:?}");
        assert!(est.sigma0 <= est.sigma1);
        assert!(est.extrapolated_evaluations > 0);
    }

    #[test]
    fn config_errors() {
        let phi = RegularityIndex::one();
        let cfg = EstimateConfig { lambda_max: 4.0, ..Default::default() };
        assert!(matches!(matuszewska_estimate(&phi, &cfg), Err(RoError::Config(_))));
        let bad = BlackBox::new("neg", |t: f64| 2.0 - t);
        assert!(matches!(
            matuszewska_estimate(&bad, &EstimateConfig::default()),
            Err(RoError::NonPositive { .. })
        ));
    }

    #[test]
    fn catalog_brackets_contain_exact_indices() {
        let catalog = [
            RegularityIndex::power(0.0),
            RegularityIndex::power(-1.0),
            RegularityIndex::power(0.5),
            RegularityIndex::power_log(0.5, 1.0, 0.0),
            RegularityIndex::power_log(1.0, -1.0, 0.0),
            RegularityIndex::power_log(1.0, 1.0, 0.0),
            RegularityIndex::power_log(2.0, 0.0, 2.0),
            RegularityIndex::power_log(1.5, -2.0, -1.0),
            RegularityIndex::power_log(0.0, 3.0, 0.0),
            RegularityIndex::product(vec![RegularityIndex::power(1.0), RegularityIndex::power_log(0.5, 1.0, 0.0)]),
            RegularityIndex::power_log(2.0, 1.0, 0.0).powered(0.5),
        ];
        for phi in &catalog {
            let (s0, s1) = phi.matuszewska_exact().unwrap();
            let est = matuszewska_estimate(phi, &EstimateConfig::default()).unwrap();
            assert!(est.sigma0_contains(s0) && est.sigma1_contains(s1), "{phi}: {est:?}");
            assert!(est.sigma0_lo <= est.sigma0_hi && est.sigma0_hi <= est.sigma1_hi);
            assert!(est.c >= 1.0 && est.b > 1.0);
        }
    }

    #[test]
    fn membership_power_constant() {
        for s in [-1.3, 0.0, 0.5, 2.0] {
            let phi = RegularityIndex::power(s);
            let m = ro_membership_check(&phi, 2.0, &MembershipGrid::default()).unwrap();
            let c = m.certificate().expect("powers are RO");
            assert!((c - 2f64.powf(s.abs())).abs() <= 1e-6, "s = {s}: c = {c}");
        }
        let one = ro_membership_check(&RegularityIndex::one(), 3.0, &MembershipGrid::default());
        assert_eq!(one.unwrap().certificate(), Some(1.0));
    }

    #[test]
    fn membership_flags_exp_log_squared() {
        let phi = BlackBox::new("exp(ln^2 t)", |t: f64| (t.ln() * t.ln()).exp());
        let m = ro_membership_check(&phi, 2.0, &MembershipGrid::default()).unwrap();
        match m {
            Membership::Violation { decade_maxima, t, lambda, ratio } => {
                assert!(decade_maxima.windows(2).all(|w| w[1] >= 2.0 * w[0]));
                assert!(t > 1e5 && lambda > 1.0 && ratio > 1.0);
            }
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn membership_monotone_in_b() {
        let phi = RegularityIndex::power_log(0.7, -2.0, 1.0);
        let mut last = 1.0;
        for b in [1.1, 1.5, 2.0, 2.5, 4.0, 8.0] {
            let c = ro_membership_check(&phi, b, &MembershipGrid::default())
                .unwrap()
                .certificate()
                .unwrap();
            assert!(c >= 1.0 && c >= last, "b = {b}");
            last = c;
        }
        assert!(ro_membership_check(&phi, 1.0, &MembershipGrid::default()).is_err());
    }
}
