//! Interpolation parameters `ψ` on `(0, ∞)` and their text form.
//!
//! The grammar is the regularity-index grammar plus one constructor,
//! `thm5(<index>, s0, s1)`. A bare `pow(θ)` is the power parameter `τ^θ` on
//! all of `(0, ∞)`; any other index `φ` is used as `ψ(τ) = φ(max(τ, 1))`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::ro_class::{Cursor, Evaluator, ParseError, RegularityIndex};

#[derive(Clone)]
pub enum Psi {
    Power(f64),
    FromIndex(RegularityIndex),
    Sobolev { phi: RegularityIndex, s0: f64, s1: f64 },
    Custom { label: String, f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl fmt::Debug for Psi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Psi({self})")
    }
}

impl fmt::Display for Psi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psi::Power(theta) => write!(f, "pow({theta})"),
            Psi::FromIndex(phi) => write!(f, "{phi}"),
            Psi::Sobolev { phi, s0, s1 } => write!(f, "thm5({phi}, {s0}, {s1})"),
            Psi::Custom { label, .. } => f.write_str(label),
        }
    }
}

impl Psi {
    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Psi::Custom { label: label.into(), f: Arc::new(f) }
    }

    pub fn value(&self, tau: f64) -> f64 {
        match self {
            Psi::Power(theta) => tau.powf(*theta),
            Psi::FromIndex(phi) => phi.value(tau.max(1.0)),
            Psi::Sobolev { phi, s0, s1 } => {
                if tau >= 1.0 {
                    let d = s1 - s0;
                    tau.powf(-s0 / d) * phi.value(tau.powf(1.0 / d))
                } else {
                    phi.value(1.0)
                }
            }
            Psi::Custom { f, .. } => f(tau),
        }
    }

    pub fn power_exponent(&self) -> Option<f64> {
        match self {
            Psi::Power(theta) => Some(*theta),
            _ => None,
        }
    }
}

pub fn parse_psi(text: &str) -> Result<Psi, ParseError> {
    parse_psi_in(text, None)
}

pub fn parse_psi_in(text: &str, base: Option<&Path>) -> Result<Psi, ParseError> {
    let mut c = Cursor::new(text, base);
    c.skip_ws();
    let start = c.save();
    let psi = if c.ident().as_deref() == Some("thm5") {
        c.expect('(')?;
        let phi = c.expr()?;
        c.expect(',')?;
        let s0 = c.number()?;
        c.expect(',')?;
        let s1 = c.number()?;
        if !(s0 < s1) {
            return Err(c.error("thm5 needs s0 < s1"));
        }
        c.expect(')')?;
        Psi::Sobolev { phi, s0, s1 }
    } else {
        c.restore(start);
        match c.expr()? {
            RegularityIndex::PowerLog { s, r, k } if r == 0.0 && k == 0.0 => Psi::Power(s),
            phi => Psi::FromIndex(phi),
        }
    };
    c.finish()?;
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ro_class::RegularityIndex as R;

    #[test]
    fn grammar() {
        assert!(matches!(parse_psi("pow(0.37)").unwrap(), Psi::Power(t) if t == 0.37));
        let p = parse_psi("pow(1/2) * log(1)").unwrap();
        assert!((p.value(std::f64::consts::E) - std::f64::consts::E.sqrt() * 2.0).abs() < 1e-15);
        match parse_psi("thm5(pow(1) * log(1), 0, 2)").unwrap() {
            Psi::Sobolev { phi, s0, s1 } => {
                assert_eq!(phi, R::power_log(1.0, 1.0, 0.0));
                assert_eq!((s0, s1), (0.0, 2.0));
            }
            other => panic!("{other:?}"),
        }
        let e = parse_psi("thm5(pow(1), 2, 1)").unwrap_err();
        assert!(e.message.contains("s0 < s1"));
        assert_eq!(parse_psi("thm5(pow(1), 0 2)").unwrap_err().column, 16);
        // text form round-trips
        let p = parse_psi("thm5(pow(1.5) * loglog(-1), 0.5, 2)").unwrap();
        let again = parse_psi(&p.to_string()).unwrap();
        assert_eq!(p.to_string(), again.to_string());
    }

    #[test]
    fn sobolev_branch_below_one() {
        let p = Psi::Sobolev { phi: R::power_log(1.0, 2.0, 0.0), s0: 0.0, s1: 1.0 };
        assert_eq!(p.value(0.5), 1.0);
        assert_eq!(p.value(1e-9), 1.0);
        let shifted = Psi::Sobolev { phi: R::product(vec![R::power(2.0), R::power(0.5)]), s0: 1.0, s1: 3.0 };
        assert_eq!(shifted.value(0.3), 1.0);
        // τ = 1 sits on the upper branch: 1^{..}·φ(1)
        assert_eq!(shifted.value(1.0), 1.0);
    }
}
