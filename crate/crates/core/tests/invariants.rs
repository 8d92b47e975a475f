use std::io::Cursor;

use hormander::cli_report::Datum;
use hormander::interpolation::{interp_norm, pseudoconcavity_constant, AuditGrid, HilbertPairModel, Psi};
use hormander::ro_class::{parse_index, RegularityIndex};
use hormander::spectral_model::{
    cp_rule, embedding_decision, hnorm, synthesize, CpVerdict, Embedding, EmbeddingConfig, FrequencyLattice,
    SpectralElement,
};
use hormander::sum::compensated_sum;
use hormander::trace_model::{boundary_lattice, boundary_trace, minimal_extension, minimal_norm_sq};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn element(n: usize, radius: u32, seed: u64) -> SpectralElement {
    let lat = FrequencyLattice::new(n, radius).unwrap();
    SpectralElement::random(lat, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn closed_index() -> impl Strategy<Value = RegularityIndex> {
    (-2.0f64..3.0, -2.0f64..2.0, -1.0f64..1.0).prop_map(|(s, r, k)| RegularityIndex::power_log(s, r, k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_absolutely_homogeneous(seed in any::<u64>(), c in 0.01f64..100.0, arg in 0.0f64..6.3, phi in closed_index()) {
        let u = element(1, 12, seed);
        let z = Complex64::from_polar(c, arg);
        let lhs = hnorm(&u.scale(z), &phi);
        prop_assert!((lhs - c * hnorm(&u, &phi)).abs() <= 1e-12 * lhs);
    }

    #[test]
    fn triangle_inequality(a in any::<u64>(), b in any::<u64>(), phi in closed_index()) {
        let (u, v) = (element(2, 4, a), element(2, 4, b));
        let sum = u.add(&v).unwrap();
        prop_assert!(hnorm(&sum, &phi) <= (1.0 + 1e-14) * (hnorm(&u, &phi) + hnorm(&v, &phi)));
    }

    #[test]
    fn norm_is_monotone_in_the_power(seed in any::<u64>(), s in -2.0f64..2.0, d in 0.0f64..2.0) {
        let u = element(1, 10, seed);
        let lo = hnorm(&u, &RegularityIndex::power(s));
        let hi = hnorm(&u, &RegularityIndex::power(s + d));
        prop_assert!(lo <= hi * (1.0 + 1e-14));
    }

    #[test]
    fn power_parameter_reproduces_the_intermediate_sobolev_norm(
        seed in any::<u64>(), s0 in -2.0f64..1.0, gap in 0.5f64..3.0, theta in 0.05f64..0.95,
    ) {
        let s1 = s0 + gap;
        let lat = FrequencyLattice::new(1, 16).unwrap();
        let pair = HilbertPairModel::sobolev(lat.clone(), s0, s1).unwrap();
        let u = SpectralElement::random(lat, &mut ChaCha8Rng::seed_from_u64(seed));
        let a = interp_norm(&u, &pair, &Psi::Power(theta)).unwrap();
        let b = hnorm(&u, &RegularityIndex::power((1.0 - theta) * s0 + theta * s1));
        prop_assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn powers_in_the_unit_interval_are_pseudoconcave(theta in 0.0f64..=1.0) {
        let p = pseudoconcavity_constant(&Psi::Power(theta), &AuditGrid::default()).unwrap();
        prop_assert!(p.certified() && p.constant <= 1.0 + 1e-12);
    }

    #[test]
    fn identical_indices_embed_continuously(phi in closed_index()) {
        let d = embedding_decision(&phi, &phi, &EmbeddingConfig::default());
        prop_assert_eq!(d.verdict, Embedding::Continuous);
    }

    #[test]
    fn a_strictly_smaller_power_embeds_compactly(s in -2.0f64..2.0, d in 0.1f64..2.0) {
        let d0 = embedding_decision(&RegularityIndex::power(s), &RegularityIndex::power(s + d), &EmbeddingConfig::default());
        let d1 = embedding_decision(&RegularityIndex::power(s + d), &RegularityIndex::power(s), &EmbeddingConfig::default());
        prop_assert_eq!(d0.verdict, Embedding::Compact);
        prop_assert_eq!(d1.verdict, Embedding::NotEmbedded);
    }

    #[test]
    fn cp_rule_is_monotone(s in -1.0f64..4.0, r in -2.0f64..2.0, k in -2.0f64..2.0, p in 0u32..3, n in 1usize..4) {
        // convergence for p implies convergence for p - 1, and a larger power helps
        if cp_rule(s, r, k, p + 1, n) == CpVerdict::Convergent {
            prop_assert_eq!(cp_rule(s, r, k, p, n), CpVerdict::Convergent);
        }
        if cp_rule(s, r, k, p, n) == CpVerdict::Convergent {
            prop_assert_eq!(cp_rule(s + 0.5, r, k, p, n), CpVerdict::Convergent);
        }
    }

    #[test]
    fn minimal_extension_restricts_back_and_attains_its_norm(seed in any::<u64>(), phi in closed_index()) {
        let lat = FrequencyLattice::new(2, 4).unwrap();
        let blat = boundary_lattice(&lat).unwrap();
        let h = SpectralElement::random(blat, &mut ChaCha8Rng::seed_from_u64(seed));
        let u = minimal_extension(&h, &phi, &lat).unwrap();
        let back = boundary_trace(&u).unwrap();
        for (a, b) in back.coeffs().iter().zip(h.coeffs()) {
            prop_assert!((a - b).norm() <= 1e-14 * b.norm().max(1.0));
        }
        let sq = hnorm(&u, &phi).powi(2);
        prop_assert!((sq - minimal_norm_sq(&h, &phi, 4)).abs() <= 1e-12 * sq);
    }

    #[test]
    fn synthesis_is_bounded_by_the_coefficient_sum(seed in any::<u64>(), x in 0.0f64..6.3) {
        let u = element(1, 8, seed);
        let l1: f64 = u.coeffs().iter().map(|c| c.norm()).sum();
        let v = synthesize(&u, &[0], &[x]).norm();
        prop_assert!(v <= l1 * (2.0 * std::f64::consts::PI).powf(-0.5) * (1.0 + 1e-12));
    }

    #[test]
    fn compensated_sum_is_order_independent(mut xs in prop::collection::vec(-1e6f64..1e6, 1..200)) {
        let a = compensated_sum(xs.iter().copied());
        xs.reverse();
        let b = compensated_sum(xs.iter().copied());
        let mass: f64 = xs.iter().map(|x| x.abs()).sum();
        let eps = f64::EPSILON;
        prop_assert!((a - b).abs() <= 2.0 * eps * a.abs() + 4.0 * xs.len() as f64 * eps * eps * mass);
    }

    #[test]
    fn spectral_text_format_round_trips(seed in any::<u64>(), n in 1usize..4) {
        let u = element(n, 3, seed);
        let mut buf = Vec::new();
        u.write_text(&mut buf).unwrap();
        let v = SpectralElement::read_text(Cursor::new(buf)).unwrap();
        prop_assert_eq!(u.coeffs(), v.coeffs());
        let mut bin = Vec::new();
        u.write_binary(&mut bin).unwrap();
        let w = SpectralElement::read_binary(Cursor::new(bin)).unwrap();
        prop_assert_eq!(u.coeffs(), w.coeffs());
    }

    #[test]
    fn printed_indices_parse_back(phi in closed_index()) {
        let again = parse_index(&phi.to_string()).unwrap();
        for t in [1.0, 3.0, 1e3, 1e9] {
            let (a, b) = (phi.eval(t).unwrap(), again.eval(t).unwrap());
            prop_assert!((a - b).abs() <= 1e-15 * a);
        }
    }

    #[test]
    fn canonical_json_round_trips(xs in prop::collection::vec(any::<f64>().prop_filter("nan", |x| !x.is_nan()), 0..20)) {
        let d = Datum::List(xs.iter().map(|&x| Datum::from(x)).collect());
        let value: serde_json::Value = serde_json::from_str(&d.to_canonical()).unwrap();
        prop_assert_eq!(Datum::from(value), d);
    }
}
