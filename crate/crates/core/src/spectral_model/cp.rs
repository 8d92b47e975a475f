//! The lattice constant `K_p(N)² = Σ_{|ξ_j| ≤ N} ⟨ξ⟩^{2p} φ^{-2}(⟨ξ⟩)`.
//!
//! `K_p(N)` bounds `|∂^α u(x)|` for `|α| ≤ p` by Cauchy–Schwarz, and it stays
//! bounded in `N` exactly when `∫₁^∞ t^{2p+n-1} φ^{-2}(t) dt` converges.

use std::fmt;

use serde::Serialize;

use super::SpectralError;
use crate::ro_class::{Evaluator, EXPONENT_EPS};
use crate::sum::Neumaier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CpVerdict {
    Convergent,
    Divergent,
}

impl fmt::Display for CpVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CpVerdict::Convergent => "convergent",
            CpVerdict::Divergent => "divergent",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpConfig {
    /// Largest admissible last increment relative to the last partial sum.
    pub relative_increment: f64,
    /// Largest admissible ratio of the last two increments.
    pub increment_ratio: f64,
}

impl Default for CpConfig {
    fn default() -> Self {
        Self { relative_increment: 0.02, increment_ratio: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpReport {
    pub p: u32,
    pub n: usize,
    /// `(N, K_p(N)²)` along the ladder.
    pub partial_sums: Vec<(u32, f64)>,
    pub verdict: CpVerdict,
    /// Closed-form verdict, when `φ` is in the closed family.
    pub analytic: Option<CpVerdict>,
    /// Estimate of `lim K_p(N)²`: the last partial sum plus a tail integral
    /// (only for `n = 1` and a convergent verdict).
    pub limit_estimate: Option<f64>,
}

/// Closed-form criterion for `φ = t^s (1+ln t)^r (1+ln(1+ln t))^k`.
pub fn cp_rule(s: f64, r: f64, k: f64, p: u32, n: usize) -> CpVerdict {
    let crit = p as f64 + n as f64 / 2.0;
    let conv = if (s - crit).abs() > EXPONENT_EPS {
        s > crit
    } else if (r - 0.5).abs() > EXPONENT_EPS {
        r > 0.5
    } else {
        k > 0.5 + EXPONENT_EPS
    };
    if conv {
        CpVerdict::Convergent
    } else {
        CpVerdict::Divergent
    }
}

/// `K_p(N)²` for every `N` of an increasing ladder, in one sweep.
///
/// Terms are grouped by the non-negative representative of each orbit under
/// sign changes and weighted by the orbit size, which keeps `n = 1` sums up to
/// `N = 10⁶` cheap. The summation order is fixed by the ladder.
pub fn cp_sum(phi: &dyn Evaluator, p: u32, n: usize, ladder: &[u32]) -> Result<Vec<f64>, SpectralError> {
    if ladder.is_empty() {
        return Err(SpectralError::EmptyLadder);
    }
    if !(1..=3).contains(&n) {
        return Err(SpectralError::Dimension(n));
    }
    if ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpectralError::Format("ladder must be strictly increasing".into()));
    }
    let term = |sq: u64| {
        let b = (1.0 + sq as f64).sqrt();
        let w = phi.value(b);
        b.powi(2 * p as i32) / (w * w)
    };
    let mut acc = Neumaier::new();
    let mut out = Vec::with_capacity(ladder.len());
    let mut lo: i64 = -1;
    for &big in ladder {
        let hi = big as i64;
        // points with max-coordinate in (lo, hi]
        match n {
            1 => {
                for a in (lo + 1).max(0)..=hi {
                    let m = if a == 0 { 1.0 } else { 2.0 };
                    acc.add(m * term((a * a) as u64));
                }
            }
            2 => {
                for a in 0..=hi {
                    for b in 0..=hi {
                        if a.max(b) <= lo {
                            continue;
                        }
                        let m = orbit(&[a, b]);
                        acc.add(m * term((a * a + b * b) as u64));
                    }
                }
            }
            _ => {
                for a in 0..=hi {
                    for b in 0..=hi {
                        for c in 0..=hi {
                            if a.max(b).max(c) <= lo {
                                continue;
                            }
                            let m = orbit(&[a, b, c]);
                            acc.add(m * term((a * a + b * b + c * c) as u64));
                        }
                    }
                }
            }
        }
        out.push(acc.value());
        lo = hi;
    }
    Ok(out)
}

fn orbit(xs: &[i64]) -> f64 {
    xs.iter().map(|&x| if x == 0 { 1.0 } else { 2.0 }).product()
}

/// Partial sums, tail-test verdict and, for closed-family `φ`, the
/// closed-form verdict. A disagreement between the two is an error.
pub fn cp_constant(
    phi: &dyn Evaluator,
    p: u32,
    n: usize,
    ladder: &[u32],
    config: &CpConfig,
) -> Result<CpReport, SpectralError> {
    let sums = cp_sum(phi, p, n, ladder)?;
    let verdict = tail_test(&sums, config);
    let analytic = phi
        .closed_form()
        .and_then(|c| c.closed_exponents())
        .map(|e| cp_rule(e.s, e.r, e.k, p, n));
    if let Some(a) = analytic {
        if a != verdict {
            return Err(SpectralError::CpDisagreement {
                phi: phi.label(),
                p,
                n,
                sampled: verdict,
                analytic: a,
            });
        }
    }
    let last_n = *ladder.last().expect("non-empty ladder");
    let last_sum = *sums.last().expect("non-empty ladder");
    let limit_estimate = (n == 1 && verdict == CpVerdict::Convergent)
        .then(|| tail_integral(phi, p, last_n as f64 + 0.5).map(|t| last_sum + 2.0 * t))
        .flatten();
    Ok(CpReport {
        p,
        n,
        partial_sums: ladder.iter().copied().zip(sums).collect(),
        verdict,
        analytic,
        limit_estimate,
    })
}

fn tail_test(sums: &[f64], config: &CpConfig) -> CpVerdict {
    if sums.len() < 3 {
        return CpVerdict::Divergent;
    }
    let k = sums.len();
    let d_last = sums[k - 1] - sums[k - 2];
    let d_prev = sums[k - 2] - sums[k - 3];
    let small = d_last <= config.relative_increment * sums[k - 1];
    let shrinking = d_last <= config.increment_ratio * d_prev;
    if small && shrinking {
        CpVerdict::Convergent
    } else {
        CpVerdict::Divergent
    }
}

const GAUSS_NODES: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// `∫_a^∞ t^{2p} φ^{-2}(t) dt` in the variable `u = ln t`, over panels whose
/// length doubles, until the last panel adds less than `1e-13` relative.
/// `None` when the panels stop shrinking.
fn tail_integral(phi: &dyn Evaluator, p: u32, a: f64) -> Option<f64> {
    let f = |u: f64| ((2 * p + 1) as f64 * u - 2.0 * phi.log_value_at_log(u)).exp();
    let mut acc = Neumaier::new();
    let mut u0 = a.ln();
    let mut len = 1.0;
    let mut prev = f64::INFINITY;
    for _ in 0..200 {
        let mut panel = Neumaier::new();
        let sub = 32;
        let h = len / sub as f64;
        for s in 0..sub {
            let mid = u0 + (s as f64 + 0.5) * h;
            for (x, w) in GAUSS_NODES {
                panel.add(w * 0.5 * h * f(mid + 0.5 * h * x));
            }
        }
        let v = panel.value();
        if !v.is_finite() || (v > prev && len > 8.0) {
            return None;
        }
        acc.add(v);
        if v <= 1e-13 * acc.value() {
            return Some(acc.value());
        }
        prev = v;
        u0 += len;
        len *= 2.0;
        if u0 > 600.0 {
            break;
        }
    }
    Some(acc.value())
}
