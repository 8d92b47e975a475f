//! Interpolation with a function parameter for lattice Hilbert pairs.
//!
//! For a pair `(H^{φ₀}, H^{φ₁})` on a lattice the generator `J` is diagonal
//! with spectrum `j(ξ) = φ₁(⟨ξ⟩)/φ₀(⟨ξ⟩)`, and `‖u‖_ψ = ‖ψ(J)u‖_{φ₀}`.

mod certify;
mod operators;
mod psi;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::ro_class::{
    matuszewska_estimate, EstimateConfig, Evaluator, IndexEstimate, RegularityIndex, RoError,
    EXPONENT_EPS,
};
use crate::spectral_model::{
    embedding_decision, hnorm, weighted_norm, Embedding, EmbeddingConfig, FrequencyLattice,
    SpectralElement, SpectralError,
};

pub use certify::{pseudoconcavity_constant, AuditGrid, Pseudoconcavity};
pub use operators::{
    operator_interpolation_test, random_operator, weighted_operator_norm, OpTestConfig, OpTestStats,
};
pub use psi::{parse_psi, parse_psi_in, Psi};

#[derive(Debug, Error)]
pub enum InterpError {
    #[error("pair is not regular: H^φ₁ does not embed in H^φ₀ ({0})")]
    NotRegular(&'static str),
    #[error("generator spectrum is not positive at ⟨ξ⟩ = {0}")]
    Generator(f64),
    #[error("ψ({tau}) = {value} is not a positive finite number")]
    PsiDomain { tau: f64, value: f64 },
    #[error("need s0 < s1, got s0 = {s0}, s1 = {s1}")]
    Order { s0: f64, s1: f64 },
    #[error("{side} index condition fails: {detail}")]
    Precondition { side: &'static str, detail: String },
    #[error("operator of size {got} does not act on a lattice of {expected} points")]
    OperatorSize { expected: usize, got: usize },
    #[error("lattice of {0} points is too large for dense operator norms (limit 200)")]
    TooLarge(usize),
    #[error(transparent)]
    Ro(#[from] RoError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// A regular pair `H^{φ₁} ↪ H^{φ₀}` on a lattice.
#[derive(Debug, Clone)]
pub struct HilbertPairModel {
    lattice: Arc<FrequencyLattice>,
    phi0: RegularityIndex,
    phi1: RegularityIndex,
    w0: Vec<f64>,
    w1: Vec<f64>,
    spectrum: Vec<f64>,
    embedding: Embedding,
}

impl HilbertPairModel {
    pub fn new(
        lattice: Arc<FrequencyLattice>,
        phi0: RegularityIndex,
        phi1: RegularityIndex,
    ) -> Result<Self, InterpError> {
        let embedding = embedding_decision(&phi0, &phi1, &EmbeddingConfig::default()).verdict;
        match embedding {
            Embedding::Continuous | Embedding::Compact => {}
            Embedding::NotEmbedded => return Err(InterpError::NotRegular("φ₀/φ₁ is unbounded")),
            Embedding::Undecidable => {
                return Err(InterpError::NotRegular("boundedness of φ₀/φ₁ is undecidable"))
            }
        }
        let w0 = lattice.weights(&phi0);
        let w1 = lattice.weights(&phi1);
        let mut spectrum = Vec::with_capacity(w0.len());
        for (i, (a, b)) in w0.iter().zip(&w1).enumerate() {
            let j = b / a;
            if !(j > 0.0) || !j.is_finite() {
                return Err(InterpError::Generator(lattice.bracket(i)));
            }
            spectrum.push(j);
        }
        Ok(Self { lattice, phi0, phi1, w0, w1, spectrum, embedding })
    }

    /// Sobolev pair `(t^{s₀}, t^{s₁})`.
    pub fn sobolev(lattice: Arc<FrequencyLattice>, s0: f64, s1: f64) -> Result<Self, InterpError> {
        Self::new(lattice, RegularityIndex::power(s0), RegularityIndex::power(s1))
    }

    pub fn lattice(&self) -> &Arc<FrequencyLattice> {
        &self.lattice
    }

    pub fn phi0(&self) -> &RegularityIndex {
        &self.phi0
    }

    pub fn phi1(&self) -> &RegularityIndex {
        &self.phi1
    }

    pub fn weights0(&self) -> &[f64] {
        &self.w0
    }

    pub fn weights1(&self) -> &[f64] {
        &self.w1
    }

    /// `j(ξ)` in canonical order.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn embedding(&self) -> Embedding {
        self.embedding
    }

    pub fn norm0(&self, u: &SpectralElement) -> f64 {
        hnorm(u, &self.phi0)
    }

    pub fn norm1(&self, u: &SpectralElement) -> f64 {
        hnorm(u, &self.phi1)
    }

    /// Weights `φ₀(⟨ξ⟩)·ψ(j(ξ))` of the interpolation norm.
    pub fn psi_weights(&self, psi: &Psi) -> Result<Vec<f64>, InterpError> {
        self.w0
            .iter()
            .zip(&self.spectrum)
            .map(|(&w, &j)| {
                let v = psi.value(j);
                if v > 0.0 && v.is_finite() {
                    Ok(w * v)
                } else {
                    Err(InterpError::PsiDomain { tau: j, value: v })
                }
            })
            .collect()
    }
}

/// `‖ψ(J)u‖_{H₀} = (Σ φ₀²(⟨ξ⟩) ψ²(j(ξ)) |û(ξ)|²)^{1/2}`.
pub fn interp_norm(
    u: &SpectralElement,
    pair: &HilbertPairModel,
    psi: &Psi,
) -> Result<f64, InterpError> {
    let lat = u.lattice();
    if lat.dim() != pair.lattice.dim() || lat.radius() != pair.lattice.radius() {
        return Err(SpectralError::LatticeMismatch(lat.describe(), pair.lattice.describe()).into());
    }
    Ok(weighted_norm(u, &pair.psi_weights(psi)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionStatus {
    /// Decided from the closed form.
    Verified,
    /// Decided from an index bracket; attainment at an endpoint is unknowable
    /// from samples.
    Indeterminate,
}

/// `ψ` together with its audit record.
#[derive(Debug, Clone)]
pub struct InterpolationParameter {
    pub psi: Psi,
    pub certification: Pseudoconcavity,
    pub precondition: Option<PreconditionStatus>,
}

impl InterpolationParameter {
    pub fn certify(psi: Psi, grid: &AuditGrid) -> Result<Self, InterpError> {
        let certification = pseudoconcavity_constant(&psi, grid)?;
        Ok(Self { psi, certification, precondition: None })
    }

    pub fn is_certified(&self) -> bool {
        self.certification.certified()
    }
}

/// Checks that `(s₀, s₁)` satisfy the two-sided power bound for `φ`.
pub fn check_index_condition(
    phi: &RegularityIndex,
    s0: f64,
    s1: f64,
) -> Result<PreconditionStatus, InterpError> {
    if !(s0 < s1) {
        return Err(InterpError::Order { s0, s1 });
    }
    if let Some(e) = phi.closed_exponents() {
        let lower_ok = s0 < e.s - EXPONENT_EPS
            || ((s0 - e.s).abs() <= EXPONENT_EPS && e.lower_index_attained());
        if !lower_ok {
            return Err(InterpError::Precondition {
                side: "lower",
                detail: format!("s0 = {s0} against σ₀ = {} with (r, k) = ({}, {})", e.s, e.r, e.k),
            });
        }
        let upper_ok = s1 > e.s + EXPONENT_EPS
            || ((s1 - e.s).abs() <= EXPONENT_EPS && e.upper_index_attained());
        if !upper_ok {
            return Err(InterpError::Precondition {
                side: "upper",
                detail: format!("s1 = {s1} against σ₁ = {} with (r, k) = ({}, {})", e.s, e.r, e.k),
            });
        }
        return Ok(PreconditionStatus::Verified);
    }
    let est = matuszewska_estimate(phi, &EstimateConfig::default())?;
    if s0 > est.sigma0_hi {
        return Err(InterpError::Precondition {
            side: "lower",
            detail: format!("s0 = {s0} exceeds the σ₀ bracket [{}, {}]", est.sigma0_lo, est.sigma0_hi),
        });
    }
    if s1 < est.sigma1_lo {
        return Err(InterpError::Precondition {
            side: "upper",
            detail: format!("s1 = {s1} is below the σ₁ bracket [{}, {}]", est.sigma1_lo, est.sigma1_hi),
        });
    }
    Ok(PreconditionStatus::Indeterminate)
}

/// The parameter `ψ(τ) = τ^{-s₀/(s₁-s₀)} φ(τ^{1/(s₁-s₀)})` for `τ ≥ 1`,
/// `ψ(τ) = φ(1)` below.
pub fn theorem5_parameter(
    phi: &RegularityIndex,
    s0: f64,
    s1: f64,
) -> Result<InterpolationParameter, InterpError> {
    let status = check_index_condition(phi, s0, s1)?;
    let psi = Psi::Sobolev { phi: phi.clone(), s0, s1 };
    let mut param = InterpolationParameter::certify(psi, &AuditGrid::default())?;
    param.precondition = Some(status);
    Ok(param)
}

fn max_relative_deviation(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    pairs.map(|(a, b)| if b == 0.0 { a.abs() } else { ((a - b) / b).abs() }).fold(0.0, f64::max)
}

fn random_elements(lattice: &Arc<FrequencyLattice>, count: usize, seed: u64) -> Vec<SpectralElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| SpectralElement::random(lattice.clone(), &mut rng)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub max_deviation: f64,
    pub samples: usize,
    pub precondition: PreconditionStatus,
}

/// Compares the `ψ`-norm for the Sobolev pair `(t^{s₀}, t^{s₁})` with the
/// `φ`-norm on random elements.
pub fn verify_theorem5(
    phi: &RegularityIndex,
    s0: f64,
    s1: f64,
    lattice: &Arc<FrequencyLattice>,
    samples: usize,
    seed: u64,
) -> Result<IdentityCheck, InterpError> {
    let param = theorem5_parameter(phi, s0, s1)?;
    let pair = HilbertPairModel::sobolev(lattice.clone(), s0, s1)?;
    let wpsi = pair.psi_weights(&param.psi)?;
    let wphi = lattice.weights(phi);
    let us = random_elements(lattice, samples, seed);
    let max_deviation =
        max_relative_deviation(us.iter().map(|u| (weighted_norm(u, &wpsi), weighted_norm(u, &wphi))));
    Ok(IdentityCheck {
        max_deviation,
        samples,
        precondition: param.precondition.expect("set by theorem5_parameter"),
    })
}

/// `φ(t) = φ₀(t) ψ(φ₁(t)/φ₀(t))`.
#[derive(Debug, Clone)]
pub struct Reiterated {
    pub phi0: RegularityIndex,
    pub phi1: RegularityIndex,
    pub psi: Psi,
}

impl Reiterated {
    /// Closed form when `ψ` is a power (`φ₀^{1-θ} φ₁^θ`), or when `ψ` is
    /// built from `φ` over the very Sobolev pair it acts on (then `φ` itself).
    pub fn closed(&self) -> Option<RegularityIndex> {
        let pure_power = |phi: &RegularityIndex| {
            phi.closed_exponents().filter(|e| e.r == 0.0 && e.k == 0.0).map(|e| e.s)
        };
        match &self.psi {
            Psi::Power(theta) if self.phi0.is_closed_form() && self.phi1.is_closed_form() => {
                Some(RegularityIndex::product(vec![
                    self.phi0.clone().powered(1.0 - theta),
                    self.phi1.clone().powered(*theta),
                ]))
            }
            Psi::Sobolev { phi, s0, s1 }
                if pure_power(&self.phi0) == Some(*s0) && pure_power(&self.phi1) == Some(*s1) =>
            {
                Some(phi.clone())
            }
            _ => None,
        }
    }
}

impl Evaluator for Reiterated {
    fn value(&self, t: f64) -> f64 {
        let a = self.phi0.value(t);
        a * self.psi.value(self.phi1.value(t) / a)
    }
    fn is_extrapolated(&self, t: f64) -> bool {
        self.phi0.is_extrapolated(t) || self.phi1.is_extrapolated(t)
    }
    fn label(&self) -> String {
        format!("({}) * psi[{}]", self.phi0, self.psi)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReiterationCheck {
    pub max_deviation: f64,
    /// Deviation from the norm of the closed form of `φ`, when there is one.
    pub closed_deviation: Option<f64>,
    pub samples: usize,
    pub certified: bool,
    pub pseudoconcavity: f64,
    /// Power exponents of `φ` when it has a closed form.
    pub exact_indices: Option<(f64, f64)>,
    pub sigma0: (f64, f64),
    pub sigma1: (f64, f64),
}

/// Compares `‖ψ(J)u‖_{φ₀}` with `‖u‖_φ` for the reiterated `φ`.
pub fn verify_theorem6(
    pair: &HilbertPairModel,
    psi: &InterpolationParameter,
    samples: usize,
    seed: u64,
) -> Result<(ReiterationCheck, Reiterated), InterpError> {
    let phi = Reiterated { phi0: pair.phi0.clone(), phi1: pair.phi1.clone(), psi: psi.psi.clone() };
    let wpsi = pair.psi_weights(&psi.psi)?;
    let wphi = pair.lattice.weights(&phi);
    let us = random_elements(&pair.lattice, samples, seed);
    let max_deviation =
        max_relative_deviation(us.iter().map(|u| (weighted_norm(u, &wpsi), weighted_norm(u, &wphi))));
    let closed_deviation = phi.closed().map(|c| {
        let wc = pair.lattice.weights(&c);
        max_relative_deviation(us.iter().map(|u| (weighted_norm(u, &wpsi), weighted_norm(u, &wc))))
    });
    let est: IndexEstimate = matuszewska_estimate(&phi, &EstimateConfig::default())?;
    let exact_indices = phi.closed().map(|c| c.matuszewska_exact()).transpose()?;
    Ok((
        ReiterationCheck {
            max_deviation,
            closed_deviation,
            samples,
            certified: psi.is_certified(),
            pseudoconcavity: psi.certification.constant,
            exact_indices,
            sigma0: (est.sigma0_lo, est.sigma0_hi),
            sigma1: (est.sigma1_lo, est.sigma1_hi),
        },
        phi,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ro_class::RegularityIndex as R;

    fn lattice() -> Arc<FrequencyLattice> {
        FrequencyLattice::new(2, 6).unwrap()
    }

    #[test]
    fn trivial_parameters_reproduce_endpoints() {
        let pair = HilbertPairModel::new(lattice(), R::power(0.5), R::power_log(1.5, 1.0, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = SpectralElement::random(pair.lattice().clone(), &mut rng);
        let one = interp_norm(&u, &pair, &Psi::Power(0.0)).unwrap();
        assert!((one - pair.norm0(&u)).abs() <= 1e-13 * one);
        let id = interp_norm(&u, &pair, &Psi::Power(1.0)).unwrap();
        assert!((id - pair.norm1(&u)).abs() <= 1e-13 * id);
        let half = interp_norm(&u, &pair, &Psi::Power(0.5)).unwrap();
        let mean = R::product(vec![R::power(0.5).powered(0.5), R::power_log(1.5, 1.0, 0.0).powered(0.5)]);
        assert!((half - hnorm(&u, &mean)).abs() <= 1e-12 * half);
    }

    #[test]
    fn irregular_pairs_are_rejected() {
        assert!(matches!(
            HilbertPairModel::new(lattice(), R::power(2.0), R::power(1.0)),
            Err(InterpError::NotRegular(_))
        ));
    }

    #[test]
    fn generator_maps_weights() {
        let pair = HilbertPairModel::sobolev(lattice(), 1.0, 3.0).unwrap();
        for i in 0..pair.lattice().len() {
            let lhs = pair.weights0()[i] * pair.spectrum()[i];
            assert!((lhs - pair.weights1()[i]).abs() <= 1e-14 * lhs);
            assert!(pair.spectrum()[i] >= 1.0);
        }
    }

    #[test]
    fn sobolev_parameter_closed_forms() {
        let p = theorem5_parameter(&R::power(1.3), 0.0, 2.0).unwrap();
        for tau in [1.0, 2.5, 40.0] {
            assert!((p.psi.value(tau) - tau.powf(0.65)).abs() <= 1e-14 * tau.powf(0.65));
        }
        let p = theorem5_parameter(&R::power_log(1.0, 1.0, 0.0), 0.0, 2.0).unwrap();
        let e2 = std::f64::consts::E.powi(2);
        let want = std::f64::consts::E * 2.0;
        assert!((p.psi.value(e2) - want).abs() <= 1e-14 * want);
        // below one the parameter is the constant φ(1)
        assert_eq!(p.psi.value(0.25), 1.0);
        let phi = R::power_log(2.0, 0.0, 0.0).powered(1.0);
        let p = theorem5_parameter(&phi, 1.0, 3.0).unwrap();
        let composed = 4f64.powf(-0.5) * phi.value(4f64.powf(0.5));
        assert!((p.psi.value(4.0) - composed).abs() <= 1e-14 * composed);
        assert_eq!(p.precondition, Some(PreconditionStatus::Verified));
    }

    #[test]
    fn index_condition_sides() {
        assert!(matches!(
            check_index_condition(&R::power(1.0), 1.5, 2.0),
            Err(InterpError::Precondition { side: "lower", .. })
        ));
        assert!(matches!(
            check_index_condition(&R::power(1.0), 0.0, 0.5),
            Err(InterpError::Precondition { side: "upper", .. })
        ));
        // endpoint allowed only when the bound is attained
        assert!(check_index_condition(&R::power_log(1.0, 1.0, 0.0), 1.0, 2.0).is_ok());
        assert!(check_index_condition(&R::power_log(1.0, -1.0, 0.0), 1.0, 2.0).is_err());
        assert!(check_index_condition(&R::power_log(1.0, -1.0, 0.0), 0.0, 1.0).is_ok());
        assert!(matches!(check_index_condition(&R::power(1.0), 2.0, 2.0), Err(InterpError::Order { .. })));
    }

    #[test]
    fn parameter_identity_on_lattice() {
        let lat = FrequencyLattice::new(2, 16).unwrap();
        for (phi, s0, s1) in [
            (R::power(1.3), 0.0, 2.0),
            (R::power(0.0), 0.0, 2.0),
            (R::power_log(1.0, -2.0, 0.0), 0.5, 1.5),
        ] {
            let check = verify_theorem5(&phi, s0, s1, &lat, 10, 4).unwrap();
            assert!(check.max_deviation <= 1e-12, "{phi}: {}", check.max_deviation);
        }
    }

    #[test]
    fn reiteration_identity_on_lattice() {
        let lat = FrequencyLattice::new(1, 16).unwrap();
        let grid = AuditGrid::default();
        let pair = HilbertPairModel::new(lat.clone(), R::power(1.0), R::power(3.0)).unwrap();
        let psi = InterpolationParameter::certify(Psi::Power(0.5), &grid).unwrap();
        let (check, phi) = verify_theorem6(&pair, &psi, 10, 1).unwrap();
        assert!(check.max_deviation <= 1e-12);
        assert_eq!(phi.closed().unwrap().closed_exponents().unwrap().s, 2.0);

        let pair = HilbertPairModel::new(lat.clone(), R::one(), R::power(2.0)).unwrap();
        let target = R::power_log(1.0, 0.5, 0.0);
        let psi = theorem5_parameter(&target, 0.0, 2.0).unwrap();
        let (check, phi) = verify_theorem6(&pair, &psi, 10, 1).unwrap();
        assert!(check.max_deviation <= 1e-12);
        for t in [1.0, 3.0, 70.0, 1e5] {
            assert!((phi.value(t) - target.value(t)).abs() <= 1e-10 * target.value(t));
        }
    }
}
