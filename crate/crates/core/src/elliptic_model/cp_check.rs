//! Pointwise derivative bounds `|∂^α u(x)| ≤ (2π)^{-n/2} K_{|α|} ‖u‖_φ`.

use serde::Serialize;

use super::EllipticError;
use crate::ro_class::Evaluator;
use crate::spectral_model::{cp_constant, cp_rule, cp_sum, hnorm, synthesize, CpConfig, CpVerdict, SpectralElement};

/// Additive slack of the bound.
const ABS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpConclusion {
    pub p: u32,
    pub n: usize,
    /// `K_j` on the element's lattice, `j = 0..=p`.
    pub constants: Vec<f64>,
    pub norm: f64,
    pub evaluations: usize,
    /// Largest `|∂^α u(x)|` divided by its bound.
    pub max_ratio: f64,
    /// Smallest `bound - |∂^α u(x)|`.
    pub min_slack: f64,
    pub violations: usize,
}

impl CpConclusion {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn default_ladder(n: usize) -> &'static [u32] {
    match n {
        1 => &[1_000, 10_000, 100_000],
        2 => &[100, 200, 400],
        _ => &[16, 32, 64],
    }
}

/// Whether `∫₁^∞ t^{2p+n-1} φ^{-2}(t) dt` converges: the closed-form rule when
/// `φ` has one, the partial-sum tail test otherwise.
pub fn hypothesis_verdict(phi: &dyn Evaluator, p: u32, n: usize) -> Result<CpVerdict, EllipticError> {
    if let Some(e) = phi.closed_form().and_then(|c| c.closed_exponents()) {
        return Ok(cp_rule(e.s, e.r, e.k, p, n));
    }
    Ok(cp_constant(phi, p, n, default_ladder(n), &CpConfig::default())?.verdict)
}

fn multi_indices(n: usize, max_order: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|a: Vec<u32>| {
                let used: u32 = a.iter().sum();
                (0..=max_order - used).map(move |j| {
                    let mut b = a.clone();
                    b.push(j);
                    b
                })
            })
            .collect();
    }
    out
}

/// Checks the bound for every `|α| ≤ p` at every point. Refused when the
/// convergence criterion fails for `φ`.
pub fn cp_conclusion_check(
    u: &SpectralElement,
    p: u32,
    phi: &dyn Evaluator,
    points: &[Vec<f64>],
) -> Result<CpConclusion, EllipticError> {
    let lat = u.lattice();
    let n = lat.dim();
    if hypothesis_verdict(phi, p, n)? != CpVerdict::Convergent {
        return Err(EllipticError::HypothesisUnmet { phi: phi.label(), p, n });
    }
    let constants: Vec<f64> = (0..=p)
        .map(|j| cp_sum(phi, j, n, &[lat.radius()]).map(|s| s[0].sqrt()))
        .collect::<Result<_, _>>()?;
    let norm = hnorm(u, phi);
    let scale = (2.0 * std::f64::consts::PI).powf(-(n as f64) / 2.0);
    let mut report = CpConclusion {
        p,
        n,
        constants,
        norm,
        evaluations: 0,
        max_ratio: 0.0,
        min_slack: f64::INFINITY,
        violations: 0,
    };
    for alpha in multi_indices(n, p) {
        let order: u32 = alpha.iter().sum();
        let bound = scale * report.constants[order as usize] * norm;
        for x in points {
            let v = synthesize(u, &alpha, x).norm();
            report.evaluations += 1;
            if v > bound + ABS_SLACK {
                report.violations += 1;
            }
            if bound > 0.0 {
                report.max_ratio = report.max_ratio.max(v / bound);
            }
            report.min_slack = report.min_slack.min(bound - v);
        }
    }
    Ok(report)
}
