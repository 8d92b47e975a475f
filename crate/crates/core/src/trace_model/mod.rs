//! Traces on the hyperplane `x_n = 0` of a lattice model.
//!
//! In coefficient form the trace sums over the last frequency,
//! `ĥ(ξ') = Σ_{ξ_n} û(ξ', ξ_n)`. Among all `u` with a prescribed trace the
//! `H^φ`-smallest one is `û = ĥ φ^{-2}/S(ξ')`, where
//! `S(ξ') = Σ_{|ξ_n| ≤ N} φ^{-2}(⟨(ξ', ξ_n)⟩)`, so the quotient norm of `h` is
//! `(Σ |ĥ(ξ')|²/S(ξ'))^{1/2}`. Comparing `1/S(ξ')` with the boundary weight
//! `φ²(⟨ξ'⟩)/⟨ξ'⟩` gives the per-mode ratio `r(ξ')`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::fit;
use crate::ro_class::{matuszewska_estimate, EstimateConfig, Evaluator, RegularityIndex};
use crate::spectral_model::{hnorm, FrequencyLattice, SpectralElement, SpectralError};
use crate::sum::{ComplexNeumaier, Neumaier};

/// Boundary data live on the `(n-1)`-dimensional lattice of the same radius.
pub type BoundaryElement = SpectralElement;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("traces need n >= 2, got n = {0}")]
    Unsupported(usize),
    #[error("boundary data on {got} do not match the boundary of {expected}")]
    BoundaryMismatch { expected: String, got: String },
    #[error("boundary data radius {0} exceeds the smallest ladder radius {1}")]
    LadderTooSmall(u32, u32),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// The `(n-1)`-dimensional lattice carrying traces of `lattice`.
pub fn boundary_lattice(lattice: &FrequencyLattice) -> Result<Arc<FrequencyLattice>, TraceError> {
    if lattice.dim() < 2 {
        return Err(TraceError::Unsupported(lattice.dim()));
    }
    Ok(FrequencyLattice::new(lattice.dim() - 1, lattice.radius())?)
}

fn with_last(xi_b: &[i32], last: i64) -> Vec<i64> {
    let mut v: Vec<i64> = xi_b.iter().map(|&x| x as i64).collect();
    v.push(last);
    v
}

/// `ĥ(ξ') = Σ_{ξ_n} û(ξ', ξ_n)`, summed over `ξ_n = -N, …, N`.
pub fn boundary_trace(u: &SpectralElement) -> Result<BoundaryElement, TraceError> {
    let lat = u.lattice();
    let blat = boundary_lattice(lat)?;
    let r = lat.radius() as i64;
    let coeffs = (0..blat.len())
        .map(|b| {
            let mut acc = ComplexNeumaier::new();
            let mut xi = with_last(blat.point(b), 0);
            for k in -r..=r {
                *xi.last_mut().expect("n >= 2") = k;
                acc.add(u.coeffs()[lat.index_of(&xi).expect("inside the cube")]);
            }
            acc.value()
        })
        .collect();
    Ok(SpectralElement::new(blat, coeffs)?)
}

/// `S(ξ') = Σ_{|ξ_n| ≤ N} φ^{-2}(⟨(ξ', ξ_n)⟩)`.
pub fn boundary_mass(xi_b: &[i64], phi: &dyn Evaluator, radius: u32) -> f64 {
    let base: i64 = xi_b.iter().map(|x| x * x).sum();
    let term = |k: i64| {
        let w = phi.value((1.0 + (base + k * k) as f64).sqrt());
        1.0 / (w * w)
    };
    let mut acc = Neumaier::new();
    acc.add(term(0));
    for k in 1..=radius as i64 {
        acc.add(2.0 * term(k));
    }
    acc.value()
}

fn masses(blat: &FrequencyLattice, phi: &dyn Evaluator, radius: u32) -> Vec<f64> {
    (0..blat.len())
        .map(|b| {
            let xi: Vec<i64> = blat.point(b).iter().map(|&x| x as i64).collect();
            boundary_mass(&xi, phi, radius)
        })
        .collect()
}

/// The `H^φ`-minimal `u` on `lattice` with trace `h`.
pub fn minimal_extension(
    h: &BoundaryElement,
    phi: &dyn Evaluator,
    lattice: &Arc<FrequencyLattice>,
) -> Result<SpectralElement, TraceError> {
    let blat = boundary_lattice(lattice)?;
    if h.lattice().dim() != blat.dim() || h.lattice().radius() != blat.radius() {
        return Err(TraceError::BoundaryMismatch {
            expected: lattice.describe(),
            got: h.lattice().describe(),
        });
    }
    let s = masses(&blat, phi, lattice.radius());
    let w = lattice.weights(phi);
    let n = lattice.dim();
    let coeffs = (0..lattice.len())
        .map(|i| {
            let xi = lattice.point(i);
            let b: Vec<i64> = xi[..n - 1].iter().map(|&x| x as i64).collect();
            let bi = blat.index_of(&b).expect("boundary point inside the cube");
            h.coeffs()[bi] / (w[i] * w[i] * s[bi])
        })
        .collect();
    Ok(SpectralElement::new(lattice.clone(), coeffs)?)
}

/// `Σ |ĥ(ξ')|² / S(ξ')`: the squared quotient norm of `h`.
pub fn minimal_norm_sq(h: &BoundaryElement, phi: &dyn Evaluator, radius: u32) -> f64 {
    let s = masses(h.lattice(), phi, radius);
    h.coeffs().iter().zip(&s).map(|(c, s)| c.norm_sqr() / s).collect::<Neumaier>().value()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRung {
    pub radius: u32,
    pub sup: f64,
    pub inf: f64,
    pub band_ratio: f64,
    /// `r(0)`.
    pub at_origin: f64,
    pub mass_at_origin: f64,
}

/// One `(N, ξ', S, r)` row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub radius: u32,
    pub xi: Vec<i64>,
    pub mass: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceReport {
    pub n: usize,
    pub rungs: Vec<TraceRung>,
    pub rows: Vec<TraceRow>,
    /// Relative changes of sup and inf between the last two rungs.
    pub sup_change: f64,
    pub inf_change: f64,
    /// `inf r(N_i) / inf r(N_{i+1})` along the ladder.
    pub inf_decay_factors: Vec<f64>,
    /// Least-squares slope of `ln inf r` against `ln N`.
    pub inf_log_rate: f64,
    /// `σ₀(φ) > 1/2`, exact or from the estimated bracket.
    pub above_half: Option<bool>,
}

/// Per-mode ratios `r(ξ') = ⟨ξ'⟩ / (S(ξ') φ²(⟨ξ'⟩))` across a radius ladder.
pub fn trace_equivalence_report(
    phi: &dyn Evaluator,
    n: usize,
    ladder: &[u32],
) -> Result<TraceReport, TraceError> {
    if n < 2 {
        return Err(TraceError::Unsupported(n));
    }
    if ladder.is_empty() {
        return Err(SpectralError::EmptyLadder.into());
    }
    let mut rungs = Vec::new();
    let mut rows = Vec::new();
    for &radius in ladder {
        let blat = FrequencyLattice::new(n - 1, radius)?;
        let s = masses(&blat, phi, radius);
        let mut sup = 0.0f64;
        let mut inf = f64::INFINITY;
        for (b, &mass) in s.iter().enumerate() {
            let br = blat.bracket(b);
            let w = phi.value(br);
            let r = br / (mass * w * w);
            sup = sup.max(r);
            inf = inf.min(r);
            rows.push(TraceRow {
                radius,
                xi: blat.point(b).iter().map(|&x| x as i64).collect(),
                mass,
                ratio: r,
            });
        }
        let w0 = phi.value(1.0);
        rungs.push(TraceRung {
            radius,
            sup,
            inf,
            band_ratio: sup / inf,
            at_origin: 1.0 / (s[0] * w0 * w0),
            mass_at_origin: s[0],
        });
    }
    let k = rungs.len();
    let (sup_change, inf_change) = if k >= 2 {
        let (a, b) = (&rungs[k - 2], &rungs[k - 1]);
        ((b.sup / a.sup - 1.0).abs(), (b.inf / a.inf - 1.0).abs())
    } else {
        (0.0, 0.0)
    };
    let inf_decay_factors = rungs.windows(2).map(|w| w[0].inf / w[1].inf).collect();
    let inf_log_rate = if k >= 2 {
        let xs: Vec<f64> = rungs.iter().map(|r| (r.radius as f64).ln()).collect();
        let ys: Vec<f64> = rungs.iter().map(|r| r.inf.ln()).collect();
        fit::slope(&xs, &ys)
    } else {
        0.0
    };
    Ok(TraceReport {
        n,
        rungs,
        rows,
        sup_change,
        inf_change,
        inf_decay_factors,
        inf_log_rate,
        above_half: sigma0_above_half(phi),
    })
}

fn sigma0_above_half(phi: &dyn Evaluator) -> Option<bool> {
    if let Some(e) = phi.closed_form().and_then(|c| c.closed_exponents()) {
        return Some(e.s > 0.5);
    }
    let est = matuszewska_estimate(phi, &EstimateConfig::default()).ok()?;
    if est.sigma0_lo > 0.5 {
        Some(true)
    } else if est.sigma0_hi <= 0.5 {
        Some(false)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionRow {
    pub target: String,
    /// Reason for leaving the target out.
    pub excluded: Option<String>,
    /// `‖S h‖_φ / ‖h‖_{φρ^{-1/2}}` along the ladder.
    pub ratios: Vec<f64>,
    /// Largest over smallest ratio.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionTable {
    pub reference: String,
    pub ladder: Vec<u32>,
    pub rows: Vec<ExtensionRow>,
}

fn zero_pad(h: &BoundaryElement, target: &Arc<FrequencyLattice>) -> BoundaryElement {
    let src = h.lattice();
    SpectralElement::from_fn(target.clone(), |xi| {
        let v: Vec<i64> = xi.iter().map(|&x| x as i64).collect();
        src.index_of(&v).map_or(Complex64::new(0.0, 0.0), |i| h.coeffs()[i])
    })
}

/// Extends `h` minimally for `t^{s_ref}` on each ladder lattice and measures
/// the extension in every target norm against the target's boundary norm.
pub fn fixed_extension_operator(
    h: &BoundaryElement,
    s_ref: f64,
    targets: &[RegularityIndex],
    ladder: &[u32],
) -> Result<ExtensionTable, TraceError> {
    let n = h.lattice().dim() + 1;
    let first = *ladder.first().ok_or(SpectralError::EmptyLadder)?;
    if h.lattice().radius() > first {
        return Err(TraceError::LadderTooSmall(h.lattice().radius(), first));
    }
    let phi_ref = RegularityIndex::power(s_ref);
    let mut exts = Vec::with_capacity(ladder.len());
    let mut bounds = Vec::with_capacity(ladder.len());
    for &radius in ladder {
        let lat = FrequencyLattice::new(n, radius)?;
        let hb = zero_pad(h, &boundary_lattice(&lat)?);
        exts.push(minimal_extension(&hb, &phi_ref, &lat)?);
        bounds.push(hb);
    }
    let rows = targets
        .iter()
        .map(|phi| {
            let label = phi.to_string();
            if sigma0_above_half(phi) != Some(true) {
                return ExtensionRow {
                    target: label,
                    excluded: Some("σ₀ ≤ 1/2 or undetermined".into()),
                    ratios: Vec::new(),
                    spread: f64::NAN,
                };
            }
            let shifted = phi.rho_shift(-0.5);
            let ratios: Vec<f64> = exts
                .iter()
                .zip(&bounds)
                .map(|(u, hb)| {
                    let denom = hnorm(hb, &shifted);
                    if denom == 0.0 {
                        0.0
                    } else {
                        hnorm(u, phi) / denom
                    }
                })
                .collect();
            let max = ratios.iter().copied().fold(0.0, f64::max);
            let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let spread = if max == 0.0 { 1.0 } else { max / min };
            ExtensionRow { target: label, excluded: None, ratios, spread }
        })
        .collect();
    Ok(ExtensionTable { reference: phi_ref.to_string(), ladder: ladder.to_vec(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ro_class::RegularityIndex as R;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const PI_COTH_PI: f64 = 3.153_348_094_937_162;

    #[test]
    fn trace_of_modes_and_products() {
        let lat = FrequencyLattice::new(2, 4).unwrap();
        let c = Complex64::new(1.5, -0.5);
        let u = SpectralElement::mode(lat.clone(), &[2, -3], c).unwrap();
        let h = boundary_trace(&u).unwrap();
        assert_eq!(h.coeff(&[2]), Some(c));
        assert!(h.coeffs().iter().filter(|z| z.norm() > 0.0).count() == 1);

        let a = |x: i64| Complex64::new(x as f64, 1.0);
        let b = |y: i64| Complex64::new(0.5, -(y as f64) * 0.25);
        let u = SpectralElement::from_fn(lat, |xi| a(xi[0] as i64) * b(xi[1] as i64));
        let h = boundary_trace(&u).unwrap();
        let sb: Complex64 = (-4..=4).map(b).sum();
        for x in -4..=4 {
            assert!((h.coeff(&[x]).unwrap() - a(x) * sb).norm() < 1e-14);
        }
        let one_d = SpectralElement::zeros(FrequencyLattice::new(1, 3).unwrap());
        assert!(matches!(boundary_trace(&one_d), Err(TraceError::Unsupported(1))));
    }

    #[test]
    fn trace_matches_spatial_evaluation() {
        use crate::spectral_model::synthesize;
        let lat = FrequencyLattice::new(2, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = SpectralElement::random(lat, &mut rng);
        let h = boundary_trace(&u).unwrap();
        // u(x', 0) = (2π)^{-1} Σ_{ξ'} ĥ(ξ') e^{iξ'x'}; recover ĥ by the discrete transform
        let m = 17;
        for k in -8i64..=8 {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m {
                let x = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                let v = synthesize(&u, &[0, 0], &[x, 0.0]) * (2.0 * std::f64::consts::PI);
                acc += v * Complex64::from_polar(1.0, -(k as f64) * x);
            }
            let got = acc / m as f64;
            assert!((got - h.coeff(&[k]).unwrap()).norm() <= 1e-10, "k = {k}");
        }
    }

    #[test]
    fn masses() {
        let s = boundary_mass(&[0], &R::power(1.0), 10_000);
        assert!((s - PI_COTH_PI).abs() <= 1e-3);
        assert_eq!(boundary_mass(&[3], &R::one(), 7), 15.0);
        let lo = boundary_mass(&[0], &R::power(0.5), 1000);
        let hi = boundary_mass(&[0], &R::power(0.5), 10_000);
        assert!((hi - lo - 2.0 * 10f64.ln()).abs() < 1e-3);
    }

    #[test]
    fn extension_identities() {
        let lat = FrequencyLattice::new(2, 6).unwrap();
        let blat = boundary_lattice(&lat).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = SpectralElement::random(blat, &mut rng);
        let phi = R::power_log(1.0, 1.0, 0.0);
        let u = minimal_extension(&h, &phi, &lat).unwrap();
        let back = boundary_trace(&u).unwrap();
        for (a, b) in back.coeffs().iter().zip(h.coeffs()) {
            assert!((a - b).norm() <= 1e-14 * b.norm().max(1.0));
        }
        let lhs = hnorm(&u, &phi).powi(2);
        let rhs = minimal_norm_sq(&h, &phi, 6);
        assert!((lhs - rhs).abs() <= 1e-12 * rhs);

        let flat = minimal_extension(&h, &R::one(), &lat).unwrap();
        let c = h.coeff(&[2]).unwrap() / 13.0;
        for k in -6..=6 {
            assert!((flat.coeff(&[2, k]).unwrap() - c).norm() < 1e-15);
        }
    }

    #[test]
    fn report_for_linear_weight() {
        let rep = trace_equivalence_report(&R::power(1.0), 2, &[16, 32, 64]).unwrap();
        assert!(rep.sup_change < 0.1 && rep.inf_change < 0.1);
        assert!(rep.rungs.iter().all(|r| r.band_ratio < 4.0));
        assert_eq!(rep.rows.len(), 33 + 65 + 129);
        assert_eq!(rep.above_half, Some(true));
        let r0 = rep.rungs[2].at_origin;
        assert!((r0 - 1.0 / PI_COTH_PI).abs() < 0.02);
    }

    #[test]
    fn extension_table() {
        let blat = FrequencyLattice::new(1, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = SpectralElement::random(blat.clone(), &mut rng);
        let targets = [R::power(1.0), R::power(1.5), R::power_log(1.0, 1.0, 0.0), R::power(0.5)];
        let tab = fixed_extension_operator(&h, 1.25, &targets, &[8, 16, 32]).unwrap();
        for row in &tab.rows[..3] {
            assert!(row.excluded.is_none() && row.spread <= 2.0, "{row:?}");
        }
        assert!(tab.rows[3].excluded.is_some());
        let zero = SpectralElement::zeros(blat);
        let tab = fixed_extension_operator(&zero, 1.25, &targets[..1], &[8, 16]).unwrap();
        assert_eq!(tab.rows[0].ratios, vec![0.0, 0.0]);
    }
}
