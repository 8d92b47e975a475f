//! Embedding diagnostics for pairs of Hörmander spaces.
//!
//! The identity `H^{φ₁} → H^{φ₀}` is diagonal in Fourier coordinates, so on a
//! truncated lattice its singular values are the ratios `φ₀(⟨ξ⟩)/φ₁(⟨ξ⟩)`.
//! The continuum question (is the ratio bounded, does it vanish at infinity)
//! is settled exactly for closed-family pairs and by estimation otherwise.

use std::cmp::Ordering;

use serde::Serialize;

use super::FrequencyLattice;
use crate::ro_class::{matuszewska_estimate, BlackBox, EstimateConfig, Evaluator, PowerLogExponents};

/// Descending ratios `φ₀(⟨ξ⟩)/φ₁(⟨ξ⟩)` over the lattice.
pub fn embedding_singular_values(
    phi0: &dyn Evaluator,
    phi1: &dyn Evaluator,
    lattice: &FrequencyLattice,
) -> Vec<f64> {
    let w0 = lattice.weights(phi0);
    let w1 = lattice.weights(phi1);
    let mut v: Vec<f64> = w0.iter().zip(&w1).map(|(a, b)| a / b).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Number of singular values `≥ eps`.
pub fn singular_value_count(values: &[f64], eps: f64) -> usize {
    values.iter().take_while(|&&v| v >= eps).count()
}

/// `sup_ξ φ_a(⟨ξ⟩)/φ_b(⟨ξ⟩)`: the best constant in `‖u‖_a ≤ C‖u‖_b` on the lattice.
pub fn weight_ratio_sup(
    phi_a: &dyn Evaluator,
    phi_b: &dyn Evaluator,
    lattice: &FrequencyLattice,
) -> f64 {
    let wa = lattice.weights(phi_a);
    let wb = lattice.weights(phi_b);
    wa.iter().zip(&wb).map(|(a, b)| a / b).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Embedding {
    NotEmbedded,
    Continuous,
    Compact,
    /// The estimator could not separate the ratio's indices from zero and the
    /// sampled tail was neither small nor flat.
    Undecidable,
}

impl Embedding {
    pub fn as_str(self) -> &'static str {
        match self {
            Embedding::NotEmbedded => "not_embedded",
            Embedding::Continuous => "continuous",
            Embedding::Compact => "compact",
            Embedding::Undecidable => "undecidable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceSource {
    ClosedForm,
    IndexEstimate,
    SampledTail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingEvidence {
    pub source: EvidenceSource,
    /// `(s, r, k)` of `φ₀/φ₁` when closed-form.
    pub ratio_exponents: Option<(f64, f64, f64)>,
    /// Index bracket of the ratio, when estimated.
    pub ratio_sigma0: Option<(f64, f64)>,
    pub ratio_sigma1: Option<(f64, f64)>,
    /// Supremum of the sampled ratio on `[1, sample_t_max]`.
    pub sampled_sup: f64,
    /// Largest sampled ratio over the last decade.
    pub sampled_tail: f64,
    /// Largest over smallest sampled ratio over the last decade.
    pub tail_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingDecision {
    pub verdict: Embedding,
    pub evidence: EmbeddingEvidence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    pub estimate: EstimateConfig,
    pub sample_t_max: f64,
    pub points_per_decade: usize,
    /// A sampled tail at or below this value counts as vanishing.
    pub threshold: f64,
    /// Tail spread below `1 + flatness` counts as a bounded, non-vanishing ratio.
    pub flatness: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            estimate: EstimateConfig::default(),
            sample_t_max: 1e12,
            points_per_decade: 16,
            threshold: 1e-3,
            flatness: 1e-2,
        }
    }
}

/// Does `H^{φ₁}` embed in `H^{φ₀}`, and is the embedding compact?
pub fn embedding_decision(
    phi0: &dyn Evaluator,
    phi1: &dyn Evaluator,
    config: &EmbeddingConfig,
) -> EmbeddingDecision {
    let ratio = BlackBox::new("ratio", |t: f64| phi0.value(t) / phi1.value(t));
    let (sampled_sup, sampled_tail, tail_spread) = sample_tail(&ratio, config);
    let mut evidence = EmbeddingEvidence {
        source: EvidenceSource::ClosedForm,
        ratio_exponents: None,
        ratio_sigma0: None,
        ratio_sigma1: None,
        sampled_sup,
        sampled_tail,
        tail_spread,
    };

    if let (Some(e0), Some(e1)) = (
        phi0.closed_form().and_then(|p| p.closed_exponents()),
        phi1.closed_form().and_then(|p| p.closed_exponents()),
    ) {
        let d: PowerLogExponents = e0.minus(e1);
        evidence.ratio_exponents = Some((d.s, d.r, d.k));
        let verdict = match d.growth_sign() {
            Ordering::Greater => Embedding::NotEmbedded,
            Ordering::Equal => Embedding::Continuous,
            Ordering::Less => Embedding::Compact,
        };
        return EmbeddingDecision { verdict, evidence };
    }

    if let Ok(est) = matuszewska_estimate(&ratio, &config.estimate) {
        evidence.ratio_sigma0 = Some((est.sigma0_lo, est.sigma0_hi));
        evidence.ratio_sigma1 = Some((est.sigma1_lo, est.sigma1_hi));
        if est.sigma1_hi < 0.0 {
            evidence.source = EvidenceSource::IndexEstimate;
            return EmbeddingDecision { verdict: Embedding::Compact, evidence };
        }
        if est.sigma0_lo > 0.0 {
            evidence.source = EvidenceSource::IndexEstimate;
            return EmbeddingDecision { verdict: Embedding::NotEmbedded, evidence };
        }
    }

    evidence.source = EvidenceSource::SampledTail;
    let verdict = if !sampled_sup.is_finite() {
        Embedding::Undecidable
    } else if sampled_tail <= config.threshold {
        Embedding::Compact
    } else if tail_spread <= 1.0 + config.flatness {
        Embedding::Continuous
    } else {
        Embedding::Undecidable
    };
    EmbeddingDecision { verdict, evidence }
}

fn sample_tail(q: &dyn Evaluator, config: &EmbeddingConfig) -> (f64, f64, f64) {
    let decades = config.sample_t_max.log10();
    let points = ((decades * config.points_per_decade as f64).ceil() as usize).max(2);
    let mut sup = 0.0f64;
    let mut tail_max = 0.0f64;
    let mut tail_min = f64::INFINITY;
    for i in 0..=points {
        let lt = decades * i as f64 / points as f64;
        let v = q.value(10f64.powf(lt));
        let v = if v.is_nan() { f64::INFINITY } else { v };
        sup = sup.max(v);
        if lt >= decades - 1.0 {
            tail_max = tail_max.max(v);
            tail_min = tail_min.min(v);
        }
    }
    (sup, tail_max, tail_max / tail_min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ro_class::{RegularityIndex as R, Table};

    #[test]
    fn identical_weights_give_unit_values() {
        let lat = FrequencyLattice::new(2, 4).unwrap();
        let phi = R::power_log(1.0, 2.0, 0.0);
        assert!(embedding_singular_values(&phi, &phi, &lat).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn sobolev_pair_values() {
        let lat = FrequencyLattice::new(1, 2).unwrap();
        let v = embedding_singular_values(&R::one(), &R::power(1.0), &lat);
        let h = 0.5f64.sqrt();
        let f = 0.2f64.sqrt();
        let want = [1.0, h, h, f, f];
        for (a, b) in v.iter().zip(want) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn compact_counts_freeze_in_n() {
        let mut counts = Vec::new();
        for n in [8u32, 16, 32, 64] {
            let lat = FrequencyLattice::new(1, n).unwrap();
            let v = embedding_singular_values(&R::power(1.0), &R::power(2.0), &lat);
            assert_eq!(v[0], 1.0);
            assert!(v.windows(2).all(|w| w[0] >= w[1]));
            counts.push(singular_value_count(&v, 0.05));
        }
        // ⟨ξ⟩^{-1} ≥ 0.05 only for |ξ| < 20, so the count freezes once N passes 20
        assert!(counts.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(counts[2], counts[3]);
    }

    #[test]
    fn closed_form_decisions() {
        let cfg = EmbeddingConfig::default();
        let d = |a: R, b: R| embedding_decision(&a, &b, &cfg).verdict;
        assert_eq!(d(R::power(1.0), R::power(2.0)), Embedding::Compact);
        assert_eq!(d(R::power(2.0), R::power_log(2.0, 1.0, 0.0)), Embedding::Compact);
        assert_eq!(d(R::power(2.0), R::power(2.0)), Embedding::Continuous);
        assert_eq!(d(R::power(2.0), R::power(1.0)), Embedding::NotEmbedded);
        assert_eq!(d(R::power_log(1.0, 0.0, 1.0), R::power(1.0)), Embedding::NotEmbedded);
    }

    #[test]
    fn tabulated_decisions_fall_back() {
        let cfg = EmbeddingConfig::default();
        let lin = R::tabulated(Table::sample(|t| t, 1e4, 33, 1.0, "lin").unwrap());
        let cube = R::tabulated(Table::sample(|t| t.powi(3), 1e4, 33, 3.0, "cube").unwrap());
        let d = embedding_decision(&lin, &cube, &cfg);
        assert_eq!(d.verdict, Embedding::Compact);
        assert_eq!(d.evidence.source, EvidenceSource::IndexEstimate);
        let same = embedding_decision(&lin, &R::power(1.0), &cfg);
        assert_eq!(same.verdict, Embedding::Continuous);
        assert_eq!(same.evidence.source, EvidenceSource::SampledTail);
        // ratio oscillating in ln t: bounded, not vanishing, not flat
        let wobble = crate::ro_class::BlackBox::new("wobble", |t: f64| 2.0 + (t.ln()).sin());
        let w = embedding_decision(&wobble, &R::one(), &cfg);
        assert_eq!(w.verdict, Embedding::Undecidable);
    }
}
