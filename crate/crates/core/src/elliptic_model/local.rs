//! Local norms `‖χu‖_φ` of functions on `[0, 1]`, periodized with period 1.
//!
//! The product is sampled at `2N` equispaced points and transformed to
//! coefficients on the frequencies `-N..=N` (the Nyquist coefficient is split
//! evenly between `±N`). With this normalization `hnorm(·, 1)` is the `L²(0, 1)`
//! norm of the samples' trigonometric interpolant.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::EllipticError;
use crate::fit;
use crate::ro_class::{Evaluator, RegularityIndex};
use crate::spectral_model::{weighted_norm, FrequencyLattice, SpectralElement};
use crate::sum::Neumaier;

/// Weighted last-octave fractions above this mark a norm as unresolved.
pub const ALIASING_THRESHOLD: f64 = 1e-6;

/// `χ = 1` on `[a + width, b - width]`, `0` outside `(a, b)`, joined by the
/// `C^∞` step `g(y)/(g(y) + g(1-y))`, `g(y) = e^{-1/y}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothCutoff {
    pub a: f64,
    pub b: f64,
    pub width: f64,
}

fn smooth_step(y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y >= 1.0 {
        return 1.0;
    }
    let g = |y: f64| (-1.0 / y).exp();
    g(y) / (g(y) + g(1.0 - y))
}

impl SmoothCutoff {
    pub fn new(a: f64, b: f64, width: f64) -> Result<Self, EllipticError> {
        if !(0.0 < a && b < 1.0 && width > 0.0 && a + 2.0 * width <= b) {
            return Err(EllipticError::Cutoff(format!(
                "need 0 < a, a + 2·width <= b < 1 (got a = {a}, b = {b}, width = {width})"
            )));
        }
        Ok(Self { a, b, width })
    }

    pub fn value(&self, x: f64) -> f64 {
        smooth_step((x - self.a) / self.width) * smooth_step((self.b - x) / self.width)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a < x && x < self.b
    }
}

/// Coefficients of the 1-periodic interpolant of `f` sampled at `j/(2N)`.
pub fn sampled_element(f: impl Fn(f64) -> f64, radius: u32) -> Result<SpectralElement, EllipticError> {
    let lat = FrequencyLattice::new(1, radius)?;
    let m = 2 * radius as usize;
    let mut buf: Vec<Complex64> =
        (0..m).map(|j| Complex64::new(f(j as f64 / m as f64), 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    let coeff = |k: i64| -> Complex64 {
        let r = radius as i64;
        if k.abs() == r {
            return buf[r as usize] * (0.5 * scale);
        }
        buf[k.rem_euclid(m as i64) as usize] * scale
    };
    Ok(SpectralElement::from_fn(lat, |xi| coeff(xi[0] as i64)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalNorm {
    pub radius: u32,
    pub norm: f64,
    /// `Σ_{N/2 < |k| ≤ N} φ²|ĉ_k|²`.
    pub last_octave_mass: f64,
    pub last_octave_fraction: f64,
    pub reliable: bool,
}

fn measure(u: &SpectralElement, phi: &dyn Evaluator) -> LocalNorm {
    let lat = u.lattice();
    let radius = lat.radius();
    let w = lat.weights(phi);
    let norm = weighted_norm(u, &w);
    let band: Neumaier = (0..lat.len())
        .filter(|&i| 2 * lat.point(i)[0].unsigned_abs() > radius)
        .map(|i| (w[i] * u.coeffs()[i].norm()).powi(2))
        .collect();
    let mass = band.value();
    let fraction = if norm > 0.0 { mass / (norm * norm) } else { 0.0 };
    LocalNorm {
        radius,
        norm,
        last_octave_mass: mass,
        last_octave_fraction: fraction,
        reliable: fraction < ALIASING_THRESHOLD,
    }
}

/// `‖χu‖_φ` on the lattice of radius `N`.
pub fn local_norm(
    u: &dyn Fn(f64) -> f64,
    chi: &SmoothCutoff,
    phi: &dyn Evaluator,
    radius: u32,
) -> Result<LocalNorm, EllipticError> {
    let e = sampled_element(|x| chi.value(x) * u(x), radius)?;
    Ok(measure(&e, phi))
}

/// `‖u‖_φ` of the periodized function, without a cutoff.
pub fn periodized_norm(
    u: &dyn Fn(f64) -> f64,
    phi: &dyn Evaluator,
    radius: u32,
) -> Result<LocalNorm, EllipticError> {
    Ok(measure(&sampled_element(u, radius)?, phi))
}

#[derive(Debug, Clone)]
pub struct LocalRegularityConfig {
    pub interior: SmoothCutoff,
    /// Cutoff whose support contains the singularity.
    pub control: SmoothCutoff,
    pub local_phi: RegularityIndex,
    pub global_phi: RegularityIndex,
    pub ladder: Vec<u32>,
    /// Largest relative change of the interior norm over the last two rungs.
    pub drift_tolerance: f64,
    /// A norm grows when its fitted log-rate is positive, its top octave is
    /// unresolved at the last rung, and the last-octave mass of the last rung
    /// keeps at least this share of the previous one.
    pub band_retention: f64,
}

impl LocalRegularityConfig {
    pub fn standard(singularity: f64) -> Self {
        let control = (singularity - 0.15).max(0.01);
        Self {
            interior: SmoothCutoff { a: 0.2, b: 0.6, width: 0.1 },
            control: SmoothCutoff {
                a: control,
                b: (singularity + 0.1).min(0.99),
                width: 0.05,
            },
            local_phi: RegularityIndex::power(4.0),
            global_phi: RegularityIndex::power_log(2.5, 1.0, 0.0),
            ladder: vec![256, 512, 1024, 2048, 4096],
            drift_tolerance: 0.05,
            band_retention: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalRung {
    pub radius: u32,
    pub interior: LocalNorm,
    pub global: LocalNorm,
    pub control: LocalNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalRegularityReport {
    pub rungs: Vec<LocalRung>,
    pub interior_drift: f64,
    pub interior_stable: bool,
    pub global_log_rate: f64,
    pub global_grows: bool,
    pub control_log_rate: f64,
    pub control_grows: bool,
}

fn growth(norms: &[LocalNorm], retention: f64) -> (f64, bool) {
    let xs: Vec<f64> = norms.iter().map(|r| (r.radius as f64).ln()).collect();
    let ys: Vec<f64> = norms.iter().map(|r| r.norm.ln()).collect();
    let rate = fit::slope(&xs, &ys);
    let (prev, last) = (&norms[norms.len() - 2], &norms[norms.len() - 1]);
    let feeding = last.last_octave_mass >= retention * prev.last_octave_mass;
    (rate, rate > 0.0 && !last.reliable && feeding)
}

/// Interior, global and control norms of `u` along the ladder.
pub fn local_regularity_experiment(
    u: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    config: &LocalRegularityConfig,
) -> Result<LocalRegularityReport, EllipticError> {
    SmoothCutoff::new(config.interior.a, config.interior.b, config.interior.width)?;
    SmoothCutoff::new(config.control.a, config.control.b, config.control.width)?;
    if config.ladder.len() < 2 || config.ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EllipticError::Cutoff("ladder needs two or more increasing radii".into()));
    }
    let rungs = config
        .ladder
        .iter()
        .map(|&n| {
            Ok(LocalRung {
                radius: n,
                interior: local_norm(u.as_ref(), &config.interior, &config.local_phi, n)?,
                global: periodized_norm(u.as_ref(), &config.global_phi, n)?,
                control: local_norm(u.as_ref(), &config.control, &config.global_phi, n)?,
            })
        })
        .collect::<Result<Vec<_>, EllipticError>>()?;
    let k = rungs.len();
    let (a, b) = (rungs[k - 2].interior.norm, rungs[k - 1].interior.norm);
    let interior_drift = (b - a).abs() / a.abs().max(f64::MIN_POSITIVE);
    let global: Vec<LocalNorm> = rungs.iter().map(|r| r.global).collect();
    let control: Vec<LocalNorm> = rungs.iter().map(|r| r.control).collect();
    let (global_log_rate, global_grows) = growth(&global, config.band_retention);
    let (control_log_rate, control_grows) = growth(&control, config.band_retention);
    Ok(LocalRegularityReport {
        rungs,
        interior_drift,
        interior_stable: interior_drift < config.drift_tolerance,
        global_log_rate,
        global_grows,
        control_log_rate,
        control_grows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic_model::{solve_dirichlet_1d, Dirichlet1DProblem, RhsProfile};
    use crate::ro_class::RegularityIndex as R;
    use std::f64::consts::PI;

    fn chi() -> SmoothCutoff {
        SmoothCutoff::new(0.2, 0.6, 0.1).unwrap()
    }

    #[test]
    fn cutoff_shape() {
        let c = chi();
        assert_eq!(c.value(0.1), 0.0);
        assert_eq!(c.value(0.4), 1.0);
        assert!((c.value(0.25) - 0.5).abs() < 1e-15);
        assert!((c.value(0.22) + c.value(0.28) - 1.0).abs() < 1e-15);
        assert!(SmoothCutoff::new(0.0, 0.5, 0.1).is_err());
        assert!(SmoothCutoff::new(0.4, 0.5, 0.1).is_err());
    }

    #[test]
    fn constant_function_gives_l2_norm_of_cutoff() {
        let c = chi();
        // Gauss–Legendre on the transition pieces; χ = 1 on [0.3, 0.5]
        let quad = |lo: f64, hi: f64| -> f64 {
            let m = 2000;
            let h = (hi - lo) / m as f64;
            let (x1, x2) = (0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt());
            (0..m)
                .map(|i| {
                    let a = lo + i as f64 * h;
                    0.5 * h * (c.value(a + x1 * h).powi(2) + c.value(a + x2 * h).powi(2))
                })
                .sum()
        };
        let l2 = (quad(0.2, 0.3) + 0.2 + quad(0.5, 0.6)).sqrt();
        let got = local_norm(&|_| 1.0, &c, &R::one(), 1024).unwrap();
        assert!((got.norm - l2).abs() <= 1e-8, "{} vs {l2}", got.norm);
        assert!(got.reliable);
        let zero = SmoothCutoff { a: 0.2, b: 0.2, width: 0.1 };
        assert_eq!(local_norm(&|_| 1.0, &zero, &R::one(), 64).unwrap().norm, 0.0);
    }

    #[test]
    fn smooth_function_is_stable() {
        let u = |x: f64| (PI * x).sin();
        let a = local_norm(&u, &chi(), &R::power(2.0), 2048).unwrap();
        let b = local_norm(&u, &chi(), &R::power(2.0), 4096).unwrap();
        assert!((a.norm / b.norm - 1.0).abs() < 0.01);
    }

    #[test]
    fn sampling_matches_a_single_mode() {
        let e = sampled_element(|x| (2.0 * PI * 3.0 * x).cos(), 8).unwrap();
        let c = e.coeff(&[3]).unwrap();
        assert!((c.re - 0.5).abs() < 1e-15 && c.im.abs() < 1e-15);
        let nyq = sampled_element(|x| (2.0 * PI * 8.0 * x).cos(), 8).unwrap();
        assert!((nyq.coeff(&[8]).unwrap().re - 0.5).abs() < 1e-15);
        assert!((nyq.coeff(&[-8]).unwrap().re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn step_experiment_separates_local_from_global() {
        let p = Dirichlet1DProblem { f: RhsProfile::step(0.85), g0: 0.0, g1: 0.0 };
        let sol = solve_dirichlet_1d(&p, 1).unwrap();
        let u: Arc<dyn Fn(f64) -> f64 + Send + Sync> =
            Arc::new(move |x| sol.exact_value(x).expect("piecewise profile"));
        let rep = local_regularity_experiment(u, &LocalRegularityConfig::standard(0.85)).unwrap();
        assert!(rep.interior_stable, "drift {}", rep.interior_drift);
        assert!(rep.rungs[2..].iter().all(|r| r.interior.reliable));
        assert!(rep.global_grows && rep.global_log_rate > 0.0);
        assert!(rep.control_grows, "{rep:#?}");
    }

    #[test]
    fn periodic_smooth_solution_stabilizes_everywhere() {
        // -u'' = -2π² cos 2πx with u = sin²(πx), smooth as a periodic function
        let u: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(|x: f64| (PI * x).sin().powi(2));
        let rep = local_regularity_experiment(u, &LocalRegularityConfig::standard(0.85)).unwrap();
        assert!(rep.interior_stable && !rep.global_grows && !rep.control_grows, "{rep:#?}");
        let last = rep.rungs.last().unwrap();
        let prev = &rep.rungs[rep.rungs.len() - 2];
        assert!((last.global.norm / prev.global.norm - 1.0).abs() < 1e-12);
    }
}
