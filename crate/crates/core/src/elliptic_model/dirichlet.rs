//! `-u'' = f` on `(0, 1)` with `u(0) = g₀`, `u(1) = g₁`.
//!
//! The solution is `ℓ + v` with the linear lift `ℓ(x) = g₀ + (g₁ - g₀)x` and
//! `v = Σ_k v̂_k sin(kπx)`, `v̂_k = f̂_k/(kπ)²`, where
//! `f̂_k = 2∫₀¹ f(x) sin(kπx) dx`. Piecewise-linear right-hand sides get exact
//! coefficients and an exact Green's-function evaluator; samplers go through
//! a discrete sine transform.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::EllipticError;

/// `f(x) = c0 + c1·x` on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub c0: f64,
    pub c1: f64,
}

#[derive(Clone)]
pub enum RhsProfile {
    /// `f(x) = Σ_k c_k sin(kπx)`, `k = 1, 2, …`.
    Sine(Vec<f64>),
    /// Consecutive segments covering `[0, 1]`; jumps between segments allowed.
    Piecewise(Vec<Segment>),
    Sampler { label: String, f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl fmt::Debug for RhsProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhsProfile::Sine(c) => write!(f, "Sine({} terms)", c.len()),
            RhsProfile::Piecewise(s) => write!(f, "Piecewise({s:?})"),
            RhsProfile::Sampler { label, .. } => write!(f, "Sampler({label})"),
        }
    }
}

impl RhsProfile {
    /// `1` on `[0, a)` and `0` on `[a, 1]`.
    pub fn step(a: f64) -> Self {
        RhsProfile::Piecewise(vec![
            Segment { a: 0.0, b: a, c0: 1.0, c1: 0.0 },
            Segment { a, b: 1.0, c0: 0.0, c1: 0.0 },
        ])
    }

    /// Continuous hat vanishing at both ends with its peak `height` at `x0`.
    pub fn hat(x0: f64, height: f64) -> Self {
        RhsProfile::Piecewise(vec![
            Segment { a: 0.0, b: x0, c0: 0.0, c1: height / x0 },
            Segment { a: x0, b: 1.0, c0: height / (1.0 - x0), c1: -height / (1.0 - x0) },
        ])
    }

    pub fn sampler(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        RhsProfile::Sampler { label: label.into(), f: Arc::new(f) }
    }

    pub fn validate(&self) -> Result<(), EllipticError> {
        if let RhsProfile::Piecewise(segs) = self {
            let ok = !segs.is_empty()
                && segs[0].a == 0.0
                && segs[segs.len() - 1].b == 1.0
                && segs.iter().all(|s| s.a < s.b)
                && segs.windows(2).all(|w| w[0].b == w[1].a);
            if !ok {
                return Err(EllipticError::Profile("segments must tile [0, 1] in order".into()));
            }
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            RhsProfile::Sine(c) => {
                c.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * PI * x).sin()).sum()
            }
            RhsProfile::Piecewise(segs) => {
                let s = segs.iter().find(|s| x < s.b).unwrap_or(&segs[segs.len() - 1]);
                s.c0 + s.c1 * x
            }
            RhsProfile::Sampler { f, .. } => f(x),
        }
    }

    /// `f̂_k`, `k = 1..=modes`.
    pub fn sine_coefficients(&self, modes: usize) -> Vec<f64> {
        match self {
            RhsProfile::Sine(c) => (0..modes).map(|k| c.get(k).copied().unwrap_or(0.0)).collect(),
            RhsProfile::Piecewise(segs) => {
                (1..=modes).map(|k| segs.iter().map(|s| segment_coefficient(s, k)).sum()).collect()
            }
            RhsProfile::Sampler { f, .. } => dst_coefficients(f.as_ref(), modes),
        }
    }
}

/// `2∫_a^b (c0 + c1 x) sin(ωx) dx` with `ω = kπ`.
fn segment_coefficient(s: &Segment, k: usize) -> f64 {
    let w = k as f64 * PI;
    let prim = |x: f64| -(s.c0 + s.c1 * x) * (w * x).cos() / w + s.c1 * (w * x).sin() / (w * w);
    2.0 * (prim(s.b) - prim(s.a))
}

/// Trapezoidal sine coefficients on `8·modes` intervals via an odd-extension FFT.
fn dst_coefficients(f: &(dyn Fn(f64) -> f64 + Send + Sync), modes: usize) -> Vec<f64> {
    let l = 8 * modes.max(1);
    let len = 2 * l;
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); len];
    for j in 1..l {
        let v = f(j as f64 / l as f64);
        buf[j] = Complex64::new(v, 0.0);
        buf[len - j] = Complex64::new(-v, 0.0);
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    // Σ_j v_j e^{-iπkj/l} over the odd extension equals -2i Σ_{j<l} v_j sin(πkj/l)
    (1..=modes).map(|k| -buf[k].im / l as f64).collect()
}

#[derive(Debug, Clone)]
pub struct Dirichlet1DProblem {
    pub f: RhsProfile,
    pub g0: f64,
    pub g1: f64,
}

/// Truncated sine-series solution.
#[derive(Debug, Clone)]
pub struct DirichletSolution {
    pub g0: f64,
    pub g1: f64,
    /// `f̂_k`, `k = 1..=M`.
    pub rhs_coefficients: Vec<f64>,
    /// `v̂_k = f̂_k/(kπ)²`.
    pub coefficients: Vec<f64>,
    /// `|u(0) - g₀| + |u(1) - g₁|` of the truncated series.
    pub boundary_mismatch: f64,
    /// Exact solution when the right-hand side is piecewise linear.
    exact: Option<GreenEvaluator>,
}

impl DirichletSolution {
    pub fn modes(&self) -> usize {
        self.coefficients.len()
    }

    fn lift(&self, x: f64) -> f64 {
        self.g0 + (self.g1 - self.g0) * x
    }

    pub fn value(&self, x: f64) -> f64 {
        let v: f64 = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * PI * x).sin())
            .sum();
        self.lift(x) + v
    }

    /// `-u''` of the truncated series (the lift is linear).
    pub fn minus_second_derivative(&self, x: f64) -> f64 {
        self.rhs_coefficients.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * PI * x).sin()).sum()
    }

    /// `|-u''(x) - f(x)|` at the given interior points.
    pub fn residual(&self, f: &RhsProfile, xs: &[f64]) -> f64 {
        xs.iter().map(|&x| (self.minus_second_derivative(x) - f.value(x)).abs()).fold(0.0, f64::max)
    }

    /// Closed-form `u(x)`, available for piecewise-linear right-hand sides.
    pub fn exact_value(&self, x: f64) -> Option<f64> {
        self.exact.as_ref().map(|g| self.lift(x) + g.value(x))
    }
}

pub fn solve_dirichlet_1d(
    p: &Dirichlet1DProblem,
    modes: usize,
) -> Result<DirichletSolution, EllipticError> {
    p.f.validate()?;
    if modes == 0 {
        return Err(EllipticError::Profile("need at least one sine mode".into()));
    }
    let rhs = p.f.sine_coefficients(modes);
    let coefficients: Vec<f64> =
        rhs.iter().enumerate().map(|(k, c)| c / ((k + 1) as f64 * PI).powi(2)).collect();
    let exact = match &p.f {
        RhsProfile::Piecewise(segs) => Some(GreenEvaluator { segments: segs.clone() }),
        _ => None,
    };
    let mut sol = DirichletSolution {
        g0: p.g0,
        g1: p.g1,
        rhs_coefficients: rhs,
        coefficients,
        boundary_mismatch: 0.0,
        exact,
    };
    sol.boundary_mismatch = (sol.value(0.0) - p.g0).abs() + (sol.value(1.0) - p.g1).abs();
    Ok(sol)
}

/// `v(x) = (1-x)∫₀ˣ y f(y) dy + x∫ₓ¹ (1-y) f(y) dy` for piecewise-linear `f`.
#[derive(Debug, Clone)]
pub struct GreenEvaluator {
    segments: Vec<Segment>,
}

impl GreenEvaluator {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    pub fn value(&self, x: f64) -> f64 {
        // ∫ y (c0 + c1 y) dy and ∫ (1 - y)(c0 + c1 y) dy
        let left = |s: &Segment, y: f64| s.c0 * y * y / 2.0 + s.c1 * y * y * y / 3.0;
        let right = |s: &Segment, y: f64| {
            s.c0 * y + (s.c1 - s.c0) * y * y / 2.0 - s.c1 * y * y * y / 3.0
        };
        let mut below = 0.0;
        let mut above = 0.0;
        for s in &self.segments {
            let lo = s.a.min(x);
            let hi = s.b.min(x);
            if hi > lo {
                below += left(s, hi) - left(s, lo);
            }
            let lo = s.a.max(x);
            let hi = s.b.max(x);
            if hi > lo {
                above += right(s, hi) - right(s, lo);
            }
        }
        (1.0 - x) * below + x * above
    }
}
