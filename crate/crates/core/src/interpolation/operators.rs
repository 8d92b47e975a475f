//! Dense operator-norm trials on small lattices.
//!
//! An operator bounded on both endpoint spaces must stay bounded on `H_ψ`.
//! Operators are random sums `Σ_k D_k S_{m_k}` of coefficient shifts
//! `(S_m u)(ξ) = u(ξ - m)` (zero outside the cube) and complex diagonal
//! multipliers. Norms on a weighted space are largest singular values of
//! `W T W^{-1}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{HilbertPairModel, InterpError, InterpolationParameter};
use crate::spectral_model::FrequencyLattice;

/// Largest lattice on which dense trials are run.
pub const MAX_OPERATOR_MODES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpTestConfig {
    pub trials: usize,
    /// Shift-multiplier terms per operator.
    pub terms: usize,
    pub max_shift: i64,
    pub seed: u64,
    pub slack: f64,
    pub ratio_bound: f64,
}

impl Default for OpTestConfig {
    fn default() -> Self {
        Self { trials: 200, terms: 3, max_shift: 3, seed: 0, slack: 1e-9, ratio_bound: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpTestStats {
    pub trials: usize,
    pub theta: Option<f64>,
    pub heinz_violations: Option<usize>,
    /// Largest `‖T‖_ψ / (‖T‖₀^{1-θ} ‖T‖₁^θ)`.
    pub max_heinz_ratio: Option<f64>,
    /// Largest `‖T‖_ψ / max(‖T‖₀, ‖T‖₁)`.
    pub max_ratio_general: f64,
    pub ratio_violations: usize,
    pub ratio_bound: f64,
    pub certified: bool,
}

/// Seed of trial `i`, derived from the master seed.
fn trial_seed(master: u64, i: usize) -> u64 {
    master ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn random_operator<R: Rng + ?Sized>(
    lattice: &FrequencyLattice,
    rng: &mut R,
    terms: usize,
    max_shift: i64,
) -> DMatrix<Complex64> {
    let len = lattice.len();
    let n = lattice.dim();
    let mut t = DMatrix::<Complex64>::zeros(len, len);
    let mut src = vec![0i64; n];
    for _ in 0..terms {
        let shift: Vec<i64> = (0..n).map(|_| rng.random_range(-max_shift..=max_shift)).collect();
        for row in 0..len {
            let d = Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
            let xi = lattice.point(row);
            for j in 0..n {
                src[j] = xi[j] as i64 - shift[j];
            }
            if let Some(col) = lattice.index_of(&src) {
                t[(row, col)] += d;
            }
        }
    }
    t
}

/// `‖T‖` on the space with weights `w`: `σ_max(W T W^{-1})`.
pub fn weighted_operator_norm(t: &DMatrix<Complex64>, w: &[f64]) -> f64 {
    let m = DMatrix::from_fn(t.nrows(), t.ncols(), |i, j| t[(i, j)] * (w[i] / w[j]));
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// `(‖T‖₀, ‖T‖₁, ‖T‖_ψ)`.
pub fn operator_norms(
    pair: &HilbertPairModel,
    wpsi: &[f64],
    t: &DMatrix<Complex64>,
) -> Result<(f64, f64, f64), InterpError> {
    let len = pair.lattice().len();
    if t.nrows() != len || t.ncols() != len {
        return Err(InterpError::OperatorSize { expected: len, got: t.nrows().max(t.ncols()) });
    }
    Ok((
        weighted_operator_norm(t, pair.weights0()),
        weighted_operator_norm(t, pair.weights1()),
        weighted_operator_norm(t, wpsi),
    ))
}

/// Runs `config.trials` random operators and collects the interpolation ratios.
pub fn operator_interpolation_test(
    pair: &HilbertPairModel,
    psi: &InterpolationParameter,
    config: &OpTestConfig,
) -> Result<OpTestStats, InterpError> {
    let lat = pair.lattice();
    if lat.len() > MAX_OPERATOR_MODES {
        return Err(InterpError::TooLarge(lat.len()));
    }
    let wpsi = pair.psi_weights(&psi.psi)?;
    let theta = psi.psi.power_exponent();
    let norms: Vec<(f64, f64, f64)> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(config.seed, i));
            let t = random_operator(lat, &mut rng, config.terms, config.max_shift);
            operator_norms(pair, &wpsi, &t)
        })
        .collect::<Result<_, _>>()?;

    let mut heinz_violations = 0;
    let mut max_heinz = 0.0f64;
    let mut max_general = 0.0f64;
    let mut ratio_violations = 0;
    for &(n0, n1, np) in &norms {
        if let Some(th) = theta {
            let bound = n0.powf(1.0 - th) * n1.powf(th);
            if np > bound * (1.0 + config.slack) {
                heinz_violations += 1;
            }
            max_heinz = max_heinz.max(np / bound);
        }
        let g = np / n0.max(n1);
        if g > config.ratio_bound {
            ratio_violations += 1;
        }
        max_general = max_general.max(g);
    }
    Ok(OpTestStats {
        trials: config.trials,
        theta,
        heinz_violations: theta.map(|_| heinz_violations),
        max_heinz_ratio: theta.map(|_| max_heinz),
        max_ratio_general: max_general,
        ratio_violations,
        ratio_bound: config.ratio_bound,
        certified: psi.is_certified(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpolation::{AuditGrid, Psi};
    use crate::ro_class::RegularityIndex as R;

    fn pair() -> HilbertPairModel {
        let lat = FrequencyLattice::new(1, 12).unwrap();
        HilbertPairModel::new(lat, R::one(), R::power(2.0)).unwrap()
    }

    #[test]
    fn identity_and_diagonal_have_equal_norms() {
        let p = pair();
        let psi = InterpolationParameter::certify(Psi::Power(0.37), &AuditGrid::default()).unwrap();
        let wpsi = p.psi_weights(&psi.psi).unwrap();
        let len = p.lattice().len();
        let id = DMatrix::<Complex64>::identity(len, len);
        let (a, b, c) = operator_norms(&p, &wpsi, &id).unwrap();
        assert!((a - 1.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-14);
        let mut diag = DMatrix::<Complex64>::zeros(len, len);
        for i in 0..len {
            diag[(i, i)] = Complex64::new((i as f64).cos(), 0.5 * i as f64 / len as f64);
        }
        let sup = (0..len).map(|i| diag[(i, i)].norm()).fold(0.0, f64::max);
        let (a, b, c) = operator_norms(&p, &wpsi, &diag).unwrap();
        for v in [a, b, c] {
            assert!((v - sup).abs() <= 1e-13 * sup);
        }
    }

    #[test]
    fn heinz_bound_holds_for_powers() {
        let p = pair();
        let cfg = OpTestConfig { trials: 40, seed: 7, ..Default::default() };
        for theta in [0.25, 0.5, 0.75] {
            let psi = InterpolationParameter::certify(Psi::Power(theta), &AuditGrid::default()).unwrap();
            let stats = operator_interpolation_test(&p, &psi, &cfg).unwrap();
            assert_eq!(stats.heinz_violations, Some(0));
            assert!(stats.max_heinz_ratio.unwrap() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn trials_are_deterministic_and_size_checked() {
        let p = pair();
        let psi = InterpolationParameter::certify(Psi::Power(0.5), &AuditGrid::default()).unwrap();
        let cfg = OpTestConfig { trials: 8, seed: 99, ..Default::default() };
        let a = operator_interpolation_test(&p, &psi, &cfg).unwrap();
        let b = operator_interpolation_test(&p, &psi, &cfg).unwrap();
        assert_eq!(a, b);
        let big = HilbertPairModel::new(FrequencyLattice::new(2, 8).unwrap(), R::one(), R::power(1.0)).unwrap();
        assert!(matches!(
            operator_interpolation_test(&big, &psi, &cfg),
            Err(InterpError::TooLarge(289))
        ));
        let wrong = DMatrix::<Complex64>::zeros(3, 3);
        let wpsi = p.psi_weights(&psi.psi).unwrap();
        assert!(matches!(operator_norms(&p, &wpsi, &wrong), Err(InterpError::OperatorSize { .. })));
    }
}
