//! Quasi-concavity audit for interpolation parameters.
//!
//! A concave-equivalent `ψ` satisfies `ψ(t)/ψ(s) ≤ C·max(1, t/s)` for all
//! `s, t ≥ r`. On a sorted grid the best such `C` splits into two running
//! extremes: `ψ` must be almost increasing and `ψ(τ)/τ` almost decreasing.

use serde::Serialize;

use super::{InterpError, Psi};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditGrid {
    /// Lower end of the range `[r, ∞)` on which `ψ` is audited.
    pub r: f64,
    pub t_max: f64,
    pub points_per_decade: usize,
    /// Boundedness on segments is checked from here up to `r`.
    pub t_min: f64,
    /// Per-decade growth factor of the running constant that counts as unbounded.
    pub growth_threshold: f64,
    pub growth_decades: usize,
}

impl Default for AuditGrid {
    fn default() -> Self {
        Self {
            r: 1.0,
            t_max: 1e8,
            points_per_decade: 32,
            t_min: 1e-4,
            growth_threshold: 2.0,
            growth_decades: 2,
        }
    }
}

impl AuditGrid {
    pub fn refined(&self, factor: usize) -> Self {
        Self { points_per_decade: self.points_per_decade * factor, ..self.clone() }
    }

    fn nodes(&self, lo: f64, hi: f64) -> Vec<f64> {
        let (a, b) = (lo.log10(), hi.log10());
        let steps = (((b - a) * self.points_per_decade as f64).ceil() as usize).max(1);
        (0..=steps).map(|i| 10f64.powf(a + (b - a) * i as f64 / steps as f64)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pseudoconcavity {
    /// Sampled constant over the whole grid.
    pub constant: f64,
    /// Constant restricted to `[r, r·10^{d+1}]`, for each decade `d`.
    pub decade_constants: Vec<f64>,
    /// The running constant grew geometrically over the last decades.
    pub unbounded: bool,
    pub bounded_on_segments: bool,
    pub separated_from_zero: bool,
    /// Smallest sample on `[r, t_max]`.
    pub inf_on_range: f64,
}

impl Pseudoconcavity {
    pub fn certified(&self) -> bool {
        !self.unbounded && self.bounded_on_segments && self.separated_from_zero
    }
}

/// Sampled quasi-concavity constant of `psi` with class-B flags.
pub fn pseudoconcavity_constant(psi: &Psi, grid: &AuditGrid) -> Result<Pseudoconcavity, InterpError> {
    let ts = grid.nodes(grid.r, grid.t_max);
    let mut vals = Vec::with_capacity(ts.len());
    for &t in &ts {
        let v = psi.value(t);
        if !(v > 0.0) || !v.is_finite() {
            return Err(InterpError::PsiDomain { tau: t, value: v });
        }
        vals.push(v);
    }

    let decades = (grid.t_max / grid.r).log10().ceil().max(1.0) as usize;
    let mut decade_constants = vec![1.0f64; decades];
    let mut c = 1.0f64;
    let mut max_psi = 0.0f64;
    let mut min_psi_over_t = f64::INFINITY;
    for (i, (&t, &v)) in ts.iter().zip(&vals).enumerate() {
        if i > 0 {
            c = c.max(max_psi / v).max((v / t) / min_psi_over_t);
        }
        max_psi = max_psi.max(v);
        min_psi_over_t = min_psi_over_t.min(v / t);
        let d = (((t / grid.r).log10() - 1e-9).floor().max(0.0) as usize).min(decades - 1);
        decade_constants[d] = c;
    }
    for d in 1..decades {
        decade_constants[d] = decade_constants[d].max(decade_constants[d - 1]);
    }

    let need = grid.growth_decades.max(1);
    let unbounded = decades > need
        && decade_constants[decades - need - 1..]
            .windows(2)
            .all(|w| w[1] >= grid.growth_threshold * w[0]);

    let bounded_on_segments = grid
        .nodes(grid.t_min, grid.r)
        .into_iter()
        .all(|t| {
            let v = psi.value(t);
            v.is_finite() && v > 0.0
        });
    let inf_on_range = vals.iter().copied().fold(f64::INFINITY, f64::min);
    // reciprocal bounded on [r, ∞): the decade minima must not keep halving
    let per_decade_min: Vec<f64> = (0..decades)
        .map(|d| {
            ts.iter()
                .zip(&vals)
                .filter(|(&t, _)| ((t / grid.r).log10() - 1e-9).floor().max(0.0) as usize == d)
                .map(|(_, &v)| v)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let decaying = decades > need
        && per_decade_min[decades - need - 1..].windows(2).all(|w| w[1] * 2.0 <= w[0]);
    Ok(Pseudoconcavity {
        constant: c,
        decade_constants,
        unbounded,
        bounded_on_segments,
        separated_from_zero: inf_on_range > 0.0 && !decaying,
        inf_on_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powers_in_unit_interval_are_exact() {
        for theta in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let p = pseudoconcavity_constant(&Psi::Power(theta), &AuditGrid::default()).unwrap();
            assert_eq!(p.constant, 1.0, "θ = {theta}");
            assert!(p.certified());
        }
    }

    #[test]
    fn square_is_rejected() {
        let p = pseudoconcavity_constant(&Psi::Power(2.0), &AuditGrid::default()).unwrap();
        assert!(p.unbounded && !p.certified());
        let p = pseudoconcavity_constant(&Psi::Power(-1.0), &AuditGrid::default()).unwrap();
        assert!(!p.certified());
    }

    #[test]
    fn root_log_constant_is_stable_under_refinement() {
        let psi = Psi::custom("sqrt*log", |t: f64| t.sqrt() * (1.0 + t.max(1.0).ln()));
        let coarse = pseudoconcavity_constant(&psi, &AuditGrid::default()).unwrap();
        let fine = pseudoconcavity_constant(&psi, &AuditGrid::default().refined(4)).unwrap();
        assert!(coarse.certified() && fine.certified());
        assert!((coarse.constant / fine.constant - 1.0).abs() <= 0.05);
        // ψ(τ)/τ peaks at τ = e with value 2/√e
        let peak = 2.0 / std::f64::consts::E.sqrt();
        assert!((fine.constant - peak).abs() <= 1e-3);
    }
}
