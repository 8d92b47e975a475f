//! Diagonal elliptic operators on the torus lattice.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::EllipticError;
use crate::ro_class::Evaluator;
use crate::spectral_model::{FrequencyLattice, SpectralElement};

/// `|a(ξ)|` at or below this multiple of `⟨ξ⟩^{2q}` counts as a zero of the symbol.
const ZERO_TOL: f64 = 1e-14;
/// Right-hand sides whose coefficients on the zero set stay below this
/// (relative to the largest coefficient) are compatible.
const COMPAT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct PeriodicEllipticOperator {
    lattice: Arc<FrequencyLattice>,
    q: u32,
    symbol: Vec<Complex64>,
    zero_set: Vec<usize>,
    floor: f64,
}

impl PeriodicEllipticOperator {
    /// Builds `a(ξ)` on the lattice and verifies `|a(ξ)| ≥ c_ell ⟨ξ⟩^{2q}` off
    /// the zero set by enumeration.
    pub fn new(
        lattice: Arc<FrequencyLattice>,
        q: u32,
        claimed_floor: f64,
        symbol: impl Fn(&[i32]) -> Complex64,
    ) -> Result<Self, EllipticError> {
        if q == 0 {
            return Err(EllipticError::Order);
        }
        let mut values = Vec::with_capacity(lattice.len());
        let mut zero_set = Vec::new();
        let mut floor = f64::INFINITY;
        for i in 0..lattice.len() {
            let a = symbol(lattice.point(i));
            let scale = (1.0 + lattice.sq_norm(i) as f64).powi(q as i32);
            if a.norm() <= ZERO_TOL * scale {
                zero_set.push(i);
            } else {
                floor = floor.min(a.norm() / scale);
            }
            values.push(a);
        }
        if floor < claimed_floor {
            return Err(EllipticError::Floor { found: floor, claimed: claimed_floor });
        }
        Ok(Self { lattice, q, symbol: values, zero_set, floor })
    }

    /// `a(ξ) = ⟨ξ⟩^{2q}`.
    pub fn bracket_power(lattice: Arc<FrequencyLattice>, q: u32) -> Result<Self, EllipticError> {
        Self::new(lattice, q, 1.0, |xi| {
            let sq: i64 = xi.iter().map(|&x| x as i64 * x as i64).sum();
            Complex64::new((1.0 + sq as f64).powi(q as i32), 0.0)
        })
    }

    /// `a(ξ) = |ξ|²`, the negative Laplacian.
    pub fn laplacian(lattice: Arc<FrequencyLattice>) -> Result<Self, EllipticError> {
        Self::new(lattice, 1, 0.5, |xi| {
            Complex64::new(xi.iter().map(|&x| x as i64 * x as i64).sum::<i64>() as f64, 0.0)
        })
    }

    pub fn lattice(&self) -> &Arc<FrequencyLattice> {
        &self.lattice
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    /// Canonical positions of `Z = {ξ : a(ξ) = 0}`.
    pub fn zero_set(&self) -> &[usize] {
        &self.zero_set
    }

    /// Verified ellipticity floor `min_{ξ∉Z} |a(ξ)|/⟨ξ⟩^{2q}`.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn apply(&self, u: &SpectralElement) -> Result<SpectralElement, EllipticError> {
        self.check(u)?;
        let coeffs = u.coeffs().iter().zip(&self.symbol).map(|(c, a)| c * a).collect();
        Ok(SpectralElement::new(self.lattice.clone(), coeffs)?)
    }

    fn check(&self, u: &SpectralElement) -> Result<(), EllipticError> {
        let l = u.lattice();
        if l.dim() != self.lattice.dim() || l.radius() != self.lattice.radius() {
            return Err(crate::spectral_model::SpectralError::LatticeMismatch(
                l.describe(),
                self.lattice.describe(),
            )
            .into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PeriodicSolve {
    /// `None` when the right-hand side is incompatible.
    pub u: Option<SpectralElement>,
    /// `(ξ, f̂(ξ))` on the zero set where `f̂` fails to vanish.
    pub defect: Vec<(Vec<i64>, Complex64)>,
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
    pub index: i64,
}

pub fn solve_periodic(
    a: &PeriodicEllipticOperator,
    f: &SpectralElement,
) -> Result<PeriodicSolve, EllipticError> {
    a.check(f)?;
    let scale = f.coeffs().iter().map(|c| c.norm()).fold(1.0, f64::max);
    let defect: Vec<(Vec<i64>, Complex64)> = a
        .zero_set
        .iter()
        .filter(|&&i| f.coeffs()[i].norm() > COMPAT_TOL * scale)
        .map(|&i| (a.lattice.point(i).iter().map(|&x| x as i64).collect(), f.coeffs()[i]))
        .collect();
    // kernel: modes on Z; cokernel: the conditions f̂ = 0 on Z
    let kernel_dim = a.zero_set.len();
    let cokernel_dim = a.zero_set.len();
    let u = defect.is_empty().then(|| {
        let mut coeffs: Vec<Complex64> =
            f.coeffs().iter().zip(&a.symbol).map(|(c, s)| c / s).collect();
        for &i in &a.zero_set {
            coeffs[i] = Complex64::new(0.0, 0.0);
        }
        SpectralElement::new(a.lattice.clone(), coeffs).expect("same lattice")
    });
    Ok(PeriodicSolve {
        u,
        defect,
        kernel_dim,
        cokernel_dim,
        index: kernel_dim as i64 - cokernel_dim as i64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AprioriConstant {
    /// `sup_{ξ∉Z} ⟨ξ⟩^{2q}/|a(ξ)|`, where the `φ` factors have cancelled.
    pub constant: f64,
    /// The same supremum evaluated literally as
    /// `φ(⟨ξ⟩) / (φ(⟨ξ⟩)⟨ξ⟩^{-2q}|a(ξ)|)`; equal up to rounding.
    pub literal: f64,
}

pub fn apriori_constant(a: &PeriodicEllipticOperator, phi: &dyn Evaluator) -> AprioriConstant {
    let lat = &a.lattice;
    let w = lat.weights(phi);
    let mut constant = 0.0f64;
    let mut literal = 0.0f64;
    let mut zeros = a.zero_set.iter().peekable();
    for (i, &wi) in w.iter().enumerate() {
        if zeros.peek() == Some(&&i) {
            zeros.next();
            continue;
        }
        let m = a.symbol[i].norm();
        let scale = (1.0 + lat.sq_norm(i) as f64).powi(a.q as i32);
        constant = constant.max(scale / m);
        let shifted = wi * lat.bracket(i).powi(-2 * a.q as i32);
        literal = literal.max(wi / (shifted * m));
    }
    AprioriConstant { constant, literal }
}
