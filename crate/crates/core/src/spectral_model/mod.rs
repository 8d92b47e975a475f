//! Discrete Hörmander spaces on truncated frequency lattices.
//!
//! An element of `H^φ` is represented by its Fourier coefficients on the
//! cube `{ξ ∈ ℤⁿ : |ξ_j| ≤ N}` and its norm is the lattice sum
//! `Σ φ²(⟨ξ⟩)|û(ξ)|²`. Points are stored in a canonical order (by `|ξ|²`,
//! then lexicographically) and every reduction runs in that order through a
//! compensated accumulator.

mod cp;
mod embed;
mod io;

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::ro_class::Evaluator;
use crate::sum::{ComplexNeumaier, Neumaier};

pub use cp::{cp_constant, cp_rule, cp_sum, CpConfig, CpReport, CpVerdict};
pub use embed::{
    embedding_decision, embedding_singular_values, singular_value_count, weight_ratio_sup,
    Embedding, EmbeddingConfig, EmbeddingDecision, EmbeddingEvidence, EvidenceSource,
};

/// Upper bound on the number of lattice points a single lattice may hold.
pub const MAX_LATTICE_POINTS: usize = 1 << 26;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("lattice dimension must be 1, 2 or 3, got {0}")]
    Dimension(usize),
    #[error("truncation radius must be positive")]
    Radius,
    #[error("lattice with {0} points exceeds the limit of {MAX_LATTICE_POINTS}")]
    TooLarge(usize),
    #[error("elements live on different lattices ({0} vs {1})")]
    LatticeMismatch(String, String),
    #[error("expected {expected} coefficients, got {got}")]
    Length { expected: usize, got: usize },
    #[error("point {0:?} is outside the lattice")]
    OutOfLattice(Vec<i64>),
    #[error(
        "tail test says {sampled} but the closed-form rule says {analytic} for {phi} (p = {p}, n = {n})"
    )]
    CpDisagreement { phi: String, p: u32, n: usize, sampled: CpVerdict, analytic: CpVerdict },
    #[error("empty truncation ladder")]
    EmptyLadder,
    #[error("format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `⟨ξ⟩ = (1 + |ξ|²)^{1/2}`.
pub fn bracket(xi: &[i64]) -> f64 {
    let sq: i64 = xi.iter().map(|x| x * x).sum();
    (1.0 + sq as f64).sqrt()
}

/// The cube `{ξ ∈ ℤⁿ : |ξ_j| ≤ N}` in canonical order.
#[derive(Debug)]
pub struct FrequencyLattice {
    n: usize,
    radius: u32,
    coords: Vec<i32>,
    sq_norms: Vec<i64>,
    brackets: Vec<f64>,
    /// Row-major cube offset to canonical position.
    lookup: Vec<u32>,
}

impl FrequencyLattice {
    pub fn new(n: usize, radius: u32) -> Result<Arc<Self>, SpectralError> {
        if !(1..=3).contains(&n) {
            return Err(SpectralError::Dimension(n));
        }
        if radius == 0 {
            return Err(SpectralError::Radius);
        }
        let side = 2 * radius as usize + 1;
        let size = side
            .checked_pow(n as u32)
            .filter(|&s| s <= MAX_LATTICE_POINTS)
            .ok_or(SpectralError::TooLarge(side.saturating_pow(n as u32)))?;
        Ok(Arc::new(Self::build(n, radius, size)))
    }

    /// Number of points of the `n`-dimensional lattice with radius `N`.
    pub fn point_count(n: usize, radius: u32) -> usize {
        (2 * radius as usize + 1).saturating_pow(n as u32)
    }

    fn build(n: usize, radius: u32, size: usize) -> Self {
        let r = radius as i64;
        let side = 2 * r + 1;
        let mut pts: Vec<(i64, Vec<i32>)> = (0..size as i64)
            .map(|mut off| {
                let mut xi = vec![0i32; n];
                for j in (0..n).rev() {
                    xi[j] = (off % side - r) as i32;
                    off /= side;
                }
                let sq = xi.iter().map(|&x| x as i64 * x as i64).sum();
                (sq, xi)
            })
            .collect();
        pts.sort();
        let mut coords = Vec::with_capacity(size * n);
        let mut sq_norms = Vec::with_capacity(size);
        let mut brackets = Vec::with_capacity(size);
        let mut lookup = vec![0u32; size];
        for (pos, (sq, xi)) in pts.into_iter().enumerate() {
            let off = xi.iter().fold(0i64, |acc, &x| acc * side + x as i64 + r);
            lookup[off as usize] = pos as u32;
            coords.extend_from_slice(&xi);
            sq_norms.push(sq);
            brackets.push((1.0 + sq as f64).sqrt());
        }
        Self { n, radius, coords, sq_norms, brackets, lookup }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.brackets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.brackets.is_empty()
    }

    pub fn point(&self, i: usize) -> &[i32] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn sq_norm(&self, i: usize) -> i64 {
        self.sq_norms[i]
    }

    pub fn bracket(&self, i: usize) -> f64 {
        self.brackets[i]
    }

    pub fn brackets(&self) -> &[f64] {
        &self.brackets
    }

    /// Canonical position of `ξ`, if it lies in the cube.
    pub fn index_of(&self, xi: &[i64]) -> Option<usize> {
        if xi.len() != self.n {
            return None;
        }
        let r = self.radius as i64;
        let side = 2 * r + 1;
        let mut off = 0i64;
        for &x in xi {
            if x.abs() > r {
                return None;
            }
            off = off * side + x + r;
        }
        Some(self.lookup[off as usize] as usize)
    }

    pub fn describe(&self) -> String {
        format!("n={} N={}", self.n, self.radius)
    }

    /// `φ(⟨ξ⟩)` in canonical order, evaluated once per `|ξ|²` shell.
    pub fn weights(&self, phi: &dyn Evaluator) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut last = (-1i64, 0.0);
        for i in 0..self.len() {
            if self.sq_norms[i] != last.0 {
                last = (self.sq_norms[i], phi.value(self.brackets[i]));
            }
            out.push(last.1);
        }
        out
    }
}

/// Fourier coefficients on a lattice.
#[derive(Debug, Clone)]
pub struct SpectralElement {
    lattice: Arc<FrequencyLattice>,
    coeffs: Vec<Complex64>,
}

impl PartialEq for SpectralElement {
    fn eq(&self, other: &Self) -> bool {
        same_lattice(&self.lattice, &other.lattice) && self.coeffs == other.coeffs
    }
}

fn same_lattice(a: &FrequencyLattice, b: &FrequencyLattice) -> bool {
    a.n == b.n && a.radius == b.radius
}

impl SpectralElement {
    pub fn new(
        lattice: Arc<FrequencyLattice>,
        coeffs: Vec<Complex64>,
    ) -> Result<Self, SpectralError> {
        if coeffs.len() != lattice.len() {
            return Err(SpectralError::Length { expected: lattice.len(), got: coeffs.len() });
        }
        Ok(Self { lattice, coeffs })
    }

    pub fn zeros(lattice: Arc<FrequencyLattice>) -> Self {
        let coeffs = vec![Complex64::new(0.0, 0.0); lattice.len()];
        Self { lattice, coeffs }
    }

    pub fn mode(
        lattice: Arc<FrequencyLattice>,
        xi: &[i64],
        c: Complex64,
    ) -> Result<Self, SpectralError> {
        let i = lattice.index_of(xi).ok_or_else(|| SpectralError::OutOfLattice(xi.to_vec()))?;
        let mut u = Self::zeros(lattice);
        u.coeffs[i] = c;
        Ok(u)
    }

    pub fn from_fn(lattice: Arc<FrequencyLattice>, mut f: impl FnMut(&[i32]) -> Complex64) -> Self {
        let coeffs = (0..lattice.len()).map(|i| f(lattice.point(i))).collect();
        Self { lattice, coeffs }
    }

    /// Independent coefficients with real and imaginary parts uniform on `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(lattice: Arc<FrequencyLattice>, rng: &mut R) -> Self {
        let coeffs = (0..lattice.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
            .collect();
        Self { lattice, coeffs }
    }

    pub fn lattice(&self) -> &Arc<FrequencyLattice> {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, xi: &[i64]) -> Option<Complex64> {
        self.lattice.index_of(xi).map(|i| self.coeffs[i])
    }

    pub fn check_same(&self, other: &Self) -> Result<(), SpectralError> {
        if same_lattice(&self.lattice, &other.lattice) {
            Ok(())
        } else {
            Err(SpectralError::LatticeMismatch(self.lattice.describe(), other.lattice.describe()))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, SpectralError> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { lattice: self.lattice.clone(), coeffs })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { lattice: self.lattice.clone(), coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    /// Pointwise multiplication of the coefficients by a real weight.
    pub fn weighted(&self, w: &[f64]) -> Self {
        assert_eq!(w.len(), self.coeffs.len());
        let coeffs = self.coeffs.iter().zip(w).map(|(a, &w)| a * w).collect();
        Self { lattice: self.lattice.clone(), coeffs }
    }
}

/// `(Σ_ξ φ²(⟨ξ⟩)|û(ξ)|²)^{1/2}`.
pub fn hnorm(u: &SpectralElement, phi: &dyn Evaluator) -> f64 {
    weighted_norm(u, &u.lattice.weights(phi))
}

/// Norm with precomputed weights `w(ξ)` in canonical order.
pub fn weighted_norm(u: &SpectralElement, w: &[f64]) -> f64 {
    assert_eq!(w.len(), u.coeffs.len());
    let mut acc = Neumaier::new();
    for (c, &w) in u.coeffs.iter().zip(w) {
        acc.add(w * w * c.norm_sqr());
    }
    acc.value().sqrt()
}

/// `⟨u, v⟩_φ = Σ φ²(⟨ξ⟩) û(ξ) conj(v̂(ξ))`.
pub fn inner(
    u: &SpectralElement,
    v: &SpectralElement,
    phi: &dyn Evaluator,
) -> Result<Complex64, SpectralError> {
    u.check_same(v)?;
    let w = u.lattice.weights(phi);
    let mut acc = ComplexNeumaier::new();
    for ((a, b), w) in u.coeffs.iter().zip(&v.coeffs).zip(w) {
        acc.add(a * b.conj() * (w * w));
    }
    Ok(acc.value())
}

/// Point value of `∂^α u` at `x ∈ [0, 2π)ⁿ`:
/// `Σ_ξ (iξ)^α û(ξ) e^{iξ·x} / (2π)^{n/2}`.
pub fn synthesize(u: &SpectralElement, alpha: &[u32], x: &[f64]) -> Complex64 {
    let lat = &u.lattice;
    let n = lat.dim();
    assert_eq!(alpha.len(), n, "multi-index dimension");
    assert_eq!(x.len(), n, "point dimension");
    let order: u32 = alpha.iter().sum();
    let i_pow = match order % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let mut acc = ComplexNeumaier::new();
    for (i, c) in u.coeffs.iter().enumerate() {
        let xi = lat.point(i);
        let mut mono = 1.0;
        let mut phase = 0.0;
        for j in 0..n {
            mono *= (xi[j] as f64).powi(alpha[j] as i32);
            phase += xi[j] as f64 * x[j];
        }
        if mono == 0.0 {
            continue;
        }
        acc.add(c * Complex64::from_polar(mono, phase));
    }
    acc.value() * i_pow / (2.0 * std::f64::consts::PI).powf(n as f64 / 2.0)
}
