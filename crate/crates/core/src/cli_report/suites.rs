//! The nine verification suites.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::Resolved;
use super::report::{environment_stamp, CheckRecord, Comparison as C, Datum, ExperimentReport, Series, Table};
use super::CliError;
use crate::elliptic_model::{
    apriori_constant, cp_conclusion_check, local_regularity_experiment, solve_dirichlet_1d,
    solve_periodic, Dirichlet1DProblem, LocalRegularityConfig, PeriodicEllipticOperator, RhsProfile,
    SmoothCutoff,
};
use crate::interpolation::{
    operator_interpolation_test, theorem5_parameter, verify_theorem5, verify_theorem6, AuditGrid,
    HilbertPairModel, InterpError, InterpolationParameter, OpTestConfig, Psi,
};
use crate::ro_class::{
    matuszewska_estimate, ro_membership_check, EstimateConfig, Evaluator, Membership, MembershipGrid,
    RegularityIndex,
};
use crate::spectral_model::{
    cp_constant, cp_sum, embedding_decision, embedding_singular_values, hnorm, singular_value_count,
    CpConfig, CpVerdict, EmbeddingConfig, FrequencyLattice, SpectralElement, SpectralError,
};
use crate::trace_model::{
    boundary_lattice, boundary_mass, boundary_trace, minimal_extension, trace_equivalence_report,
};

fn cell_seed(master: u64, cell: usize) -> u64 {
    master ^ (cell as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

fn lattice_points(n: usize, radius: u32) -> f64 {
    (2.0 * radius as f64 + 1.0).powi(n as i32)
}

const MIB: f64 = 1024.0 * 1024.0;

/// Rough peak memory of a suite in MiB, from lattice sizes alone.
pub fn estimate_memory_mb(suite: &str, r: &Resolved) -> Result<f64, CliError> {
    let c = &r.config;
    let biggest = |dims: &[usize], radii: &[u32]| {
        dims.iter()
            .flat_map(|&n| radii.iter().map(move |&k| lattice_points(n, k)))
            .fold(0.0, f64::max)
    };
    let bytes = match suite {
        "indices" => 16.0 * MIB,
        "embed" => biggest(&c.lattice.dims, &c.lattice.radii) * 8.0 * 4.0,
        "interp5" | "interp6" => {
            biggest(&c.lattice.dims, &c.lattice.radii) * (16.0 * c.interp.samples as f64 + 48.0)
        }
        "opnorm" => {
            let len = lattice_points(1, c.opnorm.radius);
            let threads = rayon::current_num_threads() as f64;
            len * len * 16.0 * 4.0 * threads
        }
        "trace" => {
            let t = &c.trace;
            let top = *t.ladder.last().expect("validated ladder");
            lattice_points(t.n, top) * 40.0
                + lattice_points(t.n, t.extension_radius) * 16.0 * (t.extension_samples as f64 + 4.0)
        }
        "bvp" => {
            let b = &c.bvp;
            lattice_points(b.n, b.radius) * 16.0 * 8.0 + b.step_modes as f64 * 8.0 * 4.0
        }
        "localreg" => *c.localreg.ladder.last().expect("validated ladder") as f64 * 2.0 * 16.0 * 6.0,
        "cp" => lattice_points(c.cp.n, c.cp.radius) * 16.0 * 4.0,
        other => return Err(CliError::UnknownSuite(other.into())),
    };
    Ok(bytes / MIB)
}

struct Ctx<'a> {
    r: &'a Resolved,
    checks: Vec<CheckRecord>,
    series: Vec<Series>,
    tables: Vec<Table>,
}

impl Ctx<'_> {
    fn seed(&self, cell: usize) -> u64 {
        cell_seed(self.r.config.seed, cell)
    }

    fn push(&mut self, c: CheckRecord) {
        self.checks.push(c);
    }
}

/// Runs the named suite; deterministic given the configuration and seed.
pub fn run_suite(suite: &str, r: &Resolved) -> Result<ExperimentReport, CliError> {
    let estimate = estimate_memory_mb(suite, r)?;
    if estimate > r.config.memory_budget_mb {
        return Err(CliError::Budget {
            suite: suite.into(),
            estimate_mb: estimate,
            budget_mb: r.config.memory_budget_mb,
        });
    }
    let start = Instant::now();
    let mut ctx = Ctx { r, checks: Vec::new(), series: Vec::new(), tables: Vec::new() };
    match suite {
        "indices" => indices(&mut ctx)?,
        "embed" => embed(&mut ctx)?,
        "interp5" => interp5(&mut ctx)?,
        "interp6" => interp6(&mut ctx)?,
        "opnorm" => opnorm(&mut ctx)?,
        "trace" => trace(&mut ctx)?,
        "bvp" => bvp(&mut ctx)?,
        "localreg" => localreg(&mut ctx)?,
        "cp" => cp(&mut ctx)?,
        other => return Err(CliError::UnknownSuite(other.into())),
    }
    Ok(ExperimentReport {
        suite: suite.into(),
        config_digest: r.digest(),
        seed: r.config.seed,
        environment: environment_stamp(),
        checks: ctx.checks,
        series: ctx.series,
        tables: ctx.tables,
        runtime_seconds: Some(start.elapsed().as_secs_f64()),
    })
}

fn indices(ctx: &mut Ctx) -> Result<(), CliError> {
    for (label, phi) in &ctx.r.catalog {
        let est = matuszewska_estimate(phi, &EstimateConfig::default())?;
        if phi.is_closed_form() {
            let (s0, s1) = phi.matuszewska_exact()?;
            for (name, exact, lo, hi) in
                [("sigma0", s0, est.sigma0_lo, est.sigma0_hi), ("sigma1", s1, est.sigma1_lo, est.sigma1_hi)]
            {
                let miss = (lo - exact).max(exact - hi).max(0.0);
                ctx.push(
                    CheckRecord::new(format!("indices/{label}/{name}"), "matuszewska_estimate", miss, C::Le, 0.0)
                        .input("phi", label.as_str())
                        .detail("exact", exact)
                        .detail("bracket", vec![lo, hi])
                        .detail("point_estimate", if name == "sigma0" { est.sigma0 } else { est.sigma1 }),
                );
            }
        }
        let m = ro_membership_check(phi, 2.0, &MembershipGrid::default())?;
        let (measured, detail) = match &m {
            Membership::Certificate { c, decade_maxima, .. } => (*c, decade_maxima.clone()),
            Membership::Violation { decade_maxima, .. } => (f64::INFINITY, decade_maxima.clone()),
        };
        ctx.push(
            CheckRecord::new(
                format!("indices/{label}/membership"),
                "ro_membership_check",
                measured,
                C::Lt,
                f64::INFINITY,
            )
            .input("phi", label.as_str())
            .input("b", 2.0)
            .detail("decade_maxima", detail),
        );
        ctx.series.push(Series {
            name: format!("{label} log upper ratio"),
            x_label: "lambda".into(),
            y_label: "log_sup_ratio".into(),
            points: est.lambda_grid.iter().copied().zip(est.log_upper_ratio.iter().copied()).collect(),
        });
    }
    Ok(())
}

/// Largest `φ₀/φ₁` over the outer shell `max_j |ξ_j| = N`.
fn shell_sup(phi0: &dyn Evaluator, phi1: &dyn Evaluator, n: usize, radius: u32) -> Result<f64, CliError> {
    let lat = FrequencyLattice::new(n, radius)?;
    let (w0, w1) = (lat.weights(phi0), lat.weights(phi1));
    Ok((0..lat.len())
        .filter(|&i| lat.point(i).iter().any(|&x| x.unsigned_abs() == radius))
        .map(|i| w0[i] / w1[i])
        .fold(0.0, f64::max))
}

fn embed(ctx: &mut Ctx) -> Result<(), CliError> {
    let cfg = EmbeddingConfig::default();
    let n = *ctx.r.config.lattice.dims.last().expect("validated dims");
    let radii = ctx.r.config.embed.radii.clone();
    let eps = ctx.r.config.embed.eps;
    for (i, case) in ctx.r.config.embed.cases.iter().enumerate() {
        let phi0 = ctx.r.index(&case.phi0, &format!("embed.cases[{i}].phi0"))?;
        let phi1 = ctx.r.index(&case.phi1, &format!("embed.cases[{i}].phi1"))?;
        let id = format!("embed/{}|{}", case.phi0.get_ref(), case.phi1.get_ref());
        let d = embedding_decision(&phi0, &phi1, &cfg);
        ctx.push(
            CheckRecord::new(format!("{id}/verdict"), "embedding_decision", d.verdict.as_str(), C::Eq, case.expect.as_str())
                .input("phi0", case.phi0.get_ref().as_str())
                .input("phi1", case.phi1.get_ref().as_str())
                .detail("source", format!("{:?}", d.evidence.source))
                .detail("sampled_tail", d.evidence.sampled_tail)
                .detail("sampled_sup", d.evidence.sampled_sup),
        );
        if radii.len() < 2 {
            continue;
        }
        match case.expect.as_str() {
            "compact" => {
                let tails: Vec<f64> =
                    radii.iter().map(|&k| shell_sup(&phi0, &phi1, n, k)).collect::<Result<_, _>>()?;
                let worst = tails.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
                ctx.push(
                    CheckRecord::new(format!("{id}/tail_decrease"), "embedding_singular_values", worst, C::Lt, 1.0)
                        .input("n", n)
                        .input("radii", radii.clone())
                        .detail("shell_sups", tails.clone()),
                );
                ctx.series.push(Series {
                    name: format!("{id} shell sup"),
                    x_label: "N".into(),
                    y_label: "sigma_shell".into(),
                    points: radii.iter().map(|&k| k as f64).zip(tails).collect(),
                });
            }
            "continuous" => {
                let fractions: Vec<f64> = radii
                    .iter()
                    .map(|&k| {
                        let lat = FrequencyLattice::new(n, k)?;
                        let sv = embedding_singular_values(&phi0, &phi1, &lat);
                        Ok(singular_value_count(&sv, eps) as f64 / sv.len() as f64)
                    })
                    .collect::<Result<_, SpectralError>>()?;
                let k = fractions.len();
                let change = (fractions[k - 1] - fractions[k - 2]).abs() / fractions[k - 2].max(f64::MIN_POSITIVE);
                ctx.push(
                    CheckRecord::new(format!("{id}/eps_fraction_change"), "singular_value_count", change, C::Le, 0.1)
                        .input("eps", eps)
                        .input("radii", radii.clone())
                        .detail("fractions", fractions.clone()),
                );
                ctx.push(
                    CheckRecord::new(format!("{id}/eps_fraction"), "singular_value_count", fractions[k - 1], C::Gt, 0.0)
                        .input("eps", eps),
                );
            }
            _ => {}
        }
    }
    Ok(())
}

fn interp5(ctx: &mut Ctx) -> Result<(), CliError> {
    let c = ctx.r.config.clone();
    let mut skipped = Vec::new();
    let mut cell = 0;
    for &n in &c.lattice.dims {
        for &radius in &c.lattice.radii {
            let lat = FrequencyLattice::new(n, radius)?;
            for (label, phi) in &ctx.r.catalog {
                for &[s0, s1] in &c.interp.pairs {
                    cell += 1;
                    let seed = ctx.seed(cell);
                    match verify_theorem5(phi, s0, s1, &lat, c.interp.samples, seed) {
                        Ok(chk) => ctx.push(
                            CheckRecord::new(
                                format!("interp5/{label}/({s0},{s1})/n={n}/N={radius}"),
                                "verify_theorem5",
                                chk.max_deviation,
                                C::Le,
                                c.tolerances.deviation,
                            )
                            .input("phi", label.as_str())
                            .input("s0", s0)
                            .input("s1", s1)
                            .input("n", n)
                            .input("N", radius)
                            .input("samples", chk.samples)
                            .detail("precondition", format!("{:?}", chk.precondition)),
                        ),
                        Err(InterpError::Precondition { side, detail }) => skipped.push(vec![
                            Datum::from(label.as_str()),
                            s0.into(),
                            s1.into(),
                            format!("{side}: {detail}").into(),
                        ]),
                        Err(e) => return Err(e.into()),
                    }
                }
            }
        }
    }
    ctx.tables.push(Table {
        name: "skipped".into(),
        columns: vec!["phi".into(), "s0".into(), "s1".into(), "reason".into()],
        rows: skipped,
    });
    Ok(())
}

fn reiteration_check(
    ctx: &mut Ctx,
    id: String,
    pair: &HilbertPairModel,
    param: &InterpolationParameter,
    seed: u64,
) -> Result<(), CliError> {
    let c = &ctx.r.config;
    let (chk, phi) = verify_theorem6(pair, param, c.interp.samples, seed)?;
    let measured = chk.max_deviation.max(chk.closed_deviation.unwrap_or(0.0));
    let mut rec = CheckRecord::new(id, "verify_theorem6", measured, C::Le, c.tolerances.deviation)
        .input("phi0", pair.phi0().to_string())
        .input("phi1", pair.phi1().to_string())
        .input("psi", param.psi.to_string())
        .input("N", pair.lattice().radius())
        .input("n", pair.lattice().dim())
        .detail("definition_deviation", chk.max_deviation)
        .detail("closed_deviation", chk.closed_deviation.map_or(Datum::Null, Datum::from))
        .detail("certified", chk.certified)
        .detail("pseudoconcavity", chk.pseudoconcavity)
        .detail("sigma0_bracket", vec![chk.sigma0.0, chk.sigma0.1])
        .detail("sigma1_bracket", vec![chk.sigma1.0, chk.sigma1.1]);
    if let Some((a, b)) = chk.exact_indices {
        rec = rec.detail("exact_indices", vec![a, b]);
    }
    if let Some(closed) = phi.closed() {
        rec = rec.detail("resulting_phi", closed.to_string());
    }
    ctx.push(rec);
    Ok(())
}

fn interp6(ctx: &mut Ctx) -> Result<(), CliError> {
    let c = ctx.r.config.clone();
    let catalog = ctx.r.catalog.clone();
    let extra: Vec<Psi> = c
        .interp
        .psi
        .iter()
        .enumerate()
        .map(|(i, t)| ctx.r.psi(t, &format!("interp.psi[{i}]")))
        .collect::<Result<_, _>>()?;
    let mut cell = 0;
    for &n in &c.lattice.dims {
        for &radius in &c.lattice.radii {
            let lat = FrequencyLattice::new(n, radius)?;
            for &[s0, s1] in &c.interp.pairs {
                let pair = HilbertPairModel::sobolev(lat.clone(), s0, s1)?;
                for (label, phi) in &catalog {
                    let param = match theorem5_parameter(phi, s0, s1) {
                        Ok(p) => p,
                        Err(InterpError::Precondition { .. }) => continue,
                        Err(e) => return Err(e.into()),
                    };
                    cell += 1;
                    let id = format!("interp6/thm5:{label}/({s0},{s1})/n={n}/N={radius}");
                    reiteration_check(ctx, id, &pair, &param, cell_seed(c.seed, cell))?;
                }
                for psi in &extra {
                    cell += 1;
                    let param = InterpolationParameter::certify(psi.clone(), &AuditGrid::default())?;
                    let id = format!("interp6/{psi}/({s0},{s1})/n={n}/N={radius}");
                    reiteration_check(ctx, id, &pair, &param, cell_seed(c.seed, cell))?;
                }
            }
            // explicit powers over the pair (φ, φρ²)
            for (label, phi) in &catalog {
                let pair = HilbertPairModel::new(lat.clone(), phi.clone(), phi.rho_shift(2.0))?;
                for &theta in &c.interp.powers {
                    cell += 1;
                    let param = InterpolationParameter::certify(Psi::Power(theta), &AuditGrid::default())?;
                    let id = format!("interp6/pow({theta}):{label}/n={n}/N={radius}");
                    reiteration_check(ctx, id, &pair, &param, cell_seed(c.seed, cell))?;
                }
            }
        }
    }
    Ok(())
}

fn opnorm(ctx: &mut Ctx) -> Result<(), CliError> {
    let o = ctx.r.config.opnorm.clone();
    let lat = FrequencyLattice::new(1, o.radius)?;
    let pair = HilbertPairModel::sobolev(lat, o.s0, o.s1)?;
    let cfg = OpTestConfig {
        trials: o.trials,
        terms: o.terms,
        max_shift: o.max_shift,
        seed: ctx.r.config.seed,
        slack: o.slack,
        ratio_bound: o.ratio_bound,
    };
    for &theta in &o.thetas {
        let param = InterpolationParameter::certify(Psi::Power(theta), &AuditGrid::default())?;
        let s = operator_interpolation_test(&pair, &param, &cfg)?;
        ctx.push(
            CheckRecord::new(
                format!("opnorm/pow({theta})/heinz"),
                "operator_interpolation_test",
                s.heinz_violations.unwrap_or(usize::MAX),
                C::Eq,
                0usize,
            )
            .input("theta", theta)
            .input("trials", s.trials)
            .input("slack", o.slack)
            .detail("max_heinz_ratio", s.max_heinz_ratio.unwrap_or(f64::NAN))
            .detail("max_ratio_general", s.max_ratio_general),
        );
    }
    for (i, t) in o.psi.iter().enumerate() {
        let psi = ctx.r.psi(t, &format!("opnorm.psi[{i}]"))?;
        let param = InterpolationParameter::certify(psi.clone(), &AuditGrid::default())?;
        ctx.push(
            CheckRecord::new(
                format!("opnorm/{psi}/certified"),
                "pseudoconcavity_constant",
                param.certification.constant,
                C::Lt,
                f64::INFINITY,
            )
            .detail("certified", param.is_certified()),
        );
        if !param.is_certified() {
            ctx.push(CheckRecord::error(
                format!("opnorm/{psi}/ratio"),
                "operator_interpolation_test",
                "parameter not certified".into(),
                "certified",
            ));
            continue;
        }
        let s = operator_interpolation_test(&pair, &param, &cfg)?;
        ctx.push(
            CheckRecord::new(
                format!("opnorm/{psi}/ratio"),
                "operator_interpolation_test",
                s.max_ratio_general,
                C::Le,
                o.ratio_bound,
            )
            .input("trials", s.trials)
            .detail("ratio_violations", s.ratio_violations),
        );
    }
    Ok(())
}

/// `argmin Σ w_k²|x_k|²` subject to `Σ x_k = h`, from the KKT system.
fn kkt_fiber(weights: &[f64], h: Complex64) -> Vec<Complex64> {
    let m = weights.len();
    let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
    for (k, w) in weights.iter().enumerate() {
        a[(k, k)] = 2.0 * w * w;
        a[(k, m)] = 1.0;
        a[(m, k)] = 1.0;
    }
    let lu = a.lu();
    let solve = |rhs: f64| {
        let mut b = DVector::<f64>::zeros(m + 1);
        b[m] = rhs;
        lu.solve(&b).expect("KKT matrix is nonsingular")
    };
    let (re, im) = (solve(h.re), solve(h.im));
    (0..m).map(|k| Complex64::new(re[k], im[k])).collect()
}

fn trace(ctx: &mut Ctx) -> Result<(), CliError> {
    let t = ctx.r.config.trace.clone();
    let degenerate: Vec<RegularityIndex> = t
        .degenerate
        .iter()
        .enumerate()
        .map(|(i, s)| ctx.r.index(s, &format!("trace.degenerate[{i}]")))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (label, phi) in ctx.r.catalog.clone() {
        let rep = trace_equivalence_report(&phi, t.n, &t.ladder)?;
        let id = format!("trace/{label}");
        if degenerate.contains(&phi) {
            let worst = rep.inf_decay_factors.iter().copied().fold(f64::INFINITY, f64::min);
            ctx.push(
                CheckRecord::new(format!("{id}/inf_decay"), "trace_equivalence_report", worst, C::Ge, t.decay_factor)
                    .input("phi", label.as_str())
                    .input("ladder", t.ladder.clone())
                    .detail("inf_decay_factors", rep.inf_decay_factors.clone())
                    .detail("inf_log_rate", rep.inf_log_rate),
            );
        } else {
            let last = rep.rungs.last().expect("non-empty ladder");
            for (name, v) in [("sup_change", rep.sup_change), ("inf_change", rep.inf_change)] {
                ctx.push(
                    CheckRecord::new(format!("{id}/{name}"), "trace_equivalence_report", v, C::Lt, t.band_change)
                        .input("phi", label.as_str())
                        .input("ladder", t.ladder.clone()),
                );
            }
            ctx.push(
                CheckRecord::new(format!("{id}/band_ratio"), "trace_equivalence_report", last.band_ratio, C::Lt, t.band_ratio)
                    .input("phi", label.as_str())
                    .detail("sup", last.sup)
                    .detail("inf", last.inf),
            );
        }
        for rung in &rep.rungs {
            let points = rep
                .rows
                .iter()
                .filter(|r| r.radius == rung.radius)
                .map(|r| ((1.0 + r.xi.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt(), r.ratio))
                .collect();
            ctx.series.push(Series {
                name: format!("{label} N={}", rung.radius),
                x_label: "bracket_xi_boundary".into(),
                y_label: "r".into(),
                points,
            });
        }
        for r in &rep.rows {
            rows.push(vec![
                Datum::from(label.as_str()),
                r.radius.into(),
                Datum::from(r.xi.clone()),
                r.mass.into(),
                r.ratio.into(),
            ]);
        }
    }
    ctx.tables.push(Table {
        name: "ratios".into(),
        columns: vec!["phi".into(), "N".into(), "xi".into(), "mass".into(), "ratio".into()],
        rows,
    });

    // S(0) for φ = t in two dimensions is π coth π in the limit
    let origin = boundary_mass(&[0], &RegularityIndex::power(1.0), t.origin_radius);
    let target = PI / PI.tanh();
    ctx.push(
        CheckRecord::new("trace/origin_mass", "boundary_mass", (origin - target).abs(), C::Le, t.origin_tolerance)
            .input("phi", "pow(1)")
            .input("N", t.origin_radius)
            .detail("value", origin)
            .detail("target", target),
    );

    let lat = FrequencyLattice::new(2, t.extension_radius)?;
    let blat = boundary_lattice(&lat)?;
    for (k, (label, phi)) in ctx.r.catalog.clone().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed(k));
        let mut oracle_dev = 0.0f64;
        let mut identity_dev = 0.0f64;
        let w = lat.weights(&phi);
        for _ in 0..t.extension_samples {
            let h = SpectralElement::random(blat.clone(), &mut rng);
            let u = minimal_extension(&h, &phi, &lat)?;
            let back = boundary_trace(&u)?;
            let scale = h.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
            for (a, b) in back.coeffs().iter().zip(h.coeffs()) {
                identity_dev = identity_dev.max((a - b).norm() / scale);
            }
            for bi in 0..blat.len() {
                let xb = blat.point(bi)[0] as i64;
                let r = t.extension_radius as i64;
                let idx: Vec<usize> =
                    (-r..=r).map(|k| lat.index_of(&[xb, k]).expect("inside the cube")).collect();
                let ws: Vec<f64> = idx.iter().map(|&i| w[i]).collect();
                let x = kkt_fiber(&ws, h.coeffs()[bi]);
                for (xi, &i) in x.iter().zip(&idx) {
                    oracle_dev = oracle_dev.max((xi - u.coeffs()[i]).norm() / scale);
                }
            }
        }
        ctx.push(
            CheckRecord::new(format!("trace/{label}/extension_oracle"), "minimal_extension", oracle_dev, C::Le, t.oracle_tolerance)
                .input("n", 2usize)
                .input("N", t.extension_radius)
                .input("samples", t.extension_samples),
        );
        ctx.push(
            CheckRecord::new(format!("trace/{label}/trace_of_extension"), "boundary_trace", identity_dev, C::Le, t.identity_tolerance)
                .input("n", 2usize)
                .input("N", t.extension_radius)
                .input("samples", t.extension_samples),
        );
    }
    Ok(())
}

fn max_rel(a: &SpectralElement, b: &SpectralElement) -> f64 {
    let scale = b.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

fn step_closed_form(a: f64, x: f64) -> f64 {
    if x < a {
        -x * x / 2.0 + (a - a * a / 2.0) * x
    } else {
        a * a / 2.0 * (1.0 - x)
    }
}

fn bvp(ctx: &mut Ctx) -> Result<(), CliError> {
    let b = ctx.r.config.bvp.clone();
    let tol = ctx.r.config.tolerances.clone();
    let lat = FrequencyLattice::new(b.n, b.radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed(0));

    for &q in &b.orders {
        let a = PeriodicEllipticOperator::bracket_power(lat.clone(), q)?;
        let f = SpectralElement::random(lat.clone(), &mut rng);
        let sol = solve_periodic(&a, &f)?;
        let residual = match &sol.u {
            Some(u) => max_rel(&a.apply(u)?, &f),
            None => f64::INFINITY,
        };
        ctx.push(
            CheckRecord::new(format!("bvp/bracket^{q}/residual"), "solve_periodic", residual, C::Le, tol.residual)
                .input("q", q)
                .detail("index", sol.index),
        );
    }

    let lap = PeriodicEllipticOperator::laplacian(lat.clone())?;
    let compatible = |rng: &mut ChaCha8Rng| {
        let mut c = SpectralElement::random(lat.clone(), rng).into_coeffs();
        for &i in lap.zero_set() {
            c[i] = Complex64::new(0.0, 0.0);
        }
        SpectralElement::new(lat.clone(), c)
    };
    let f = compatible(&mut rng)?;
    let sol = solve_periodic(&lap, &f)?;
    let residual = sol.u.as_ref().map_or(Ok(f64::INFINITY), |u| lap.apply(u).map(|au| max_rel(&au, &f)))?;
    ctx.push(CheckRecord::new("bvp/laplacian/residual", "solve_periodic", residual, C::Le, tol.residual));
    ctx.push(
        CheckRecord::new("bvp/laplacian/index", "solve_periodic", sol.index, C::Eq, 0i64)
            .detail("kernel_dim", sol.kernel_dim)
            .detail("cokernel_dim", sol.cokernel_dim),
    );
    ctx.push(CheckRecord::new("bvp/laplacian/kernel_dim", "solve_periodic", sol.kernel_dim, C::Eq, lap.zero_set().len()));
    let bad = SpectralElement::random(lat.clone(), &mut rng);
    let sol = solve_periodic(&lap, &bad)?;
    let defect = sol.defect.first().map_or(f64::INFINITY, |(_, d)| (d - bad.coeffs()[0]).norm());
    ctx.push(
        CheckRecord::new("bvp/laplacian/defect", "solve_periodic", defect, C::Eq, 0.0)
            .detail("solved", sol.u.is_some())
            .detail("defect_len", sol.defect.len()),
    );

    let weights: Vec<(String, RegularityIndex)> = b
        .weights
        .iter()
        .enumerate()
        .map(|(i, t)| Ok((t.get_ref().clone(), ctx.r.index(t, &format!("bvp.weights[{i}]"))?)))
        .collect::<Result<_, CliError>>()?;
    let constants: Vec<f64> = weights.iter().map(|(_, phi)| apriori_constant(&lap, phi).constant).collect();
    for ((label, phi), c) in weights.iter().zip(&constants) {
        ctx.push(
            CheckRecord::new(format!("bvp/apriori/{label}"), "apriori_constant", *c, C::Eq, 2.0)
                .detail("literal", apriori_constant(&lap, phi).literal),
        );
    }
    let distinct = constants.iter().map(|c| c.to_bits()).collect::<std::collections::BTreeSet<_>>().len();
    ctx.push(CheckRecord::new("bvp/apriori/bit_equal", "apriori_constant", distinct, C::Eq, 1usize));

    let c = constants[0];
    for (label, phi) in weights.iter().take(2) {
        let shifted = phi.rho_shift(-2.0);
        let mut violations = 0usize;
        let mut worst = 0.0f64;
        for _ in 0..b.samples {
            let f = compatible(&mut rng)?;
            let u = solve_periodic(&lap, &f)?.u.expect("compatible by construction");
            let ratio = hnorm(&u, phi) / (c * hnorm(&f, &shifted));
            worst = worst.max(ratio);
            if ratio > 1.0 + 1e-12 {
                violations += 1;
            }
        }
        ctx.push(
            CheckRecord::new(format!("bvp/apriori_inequality/{label}"), "apriori_constant", violations, C::Eq, 0usize)
                .input("samples", b.samples)
                .detail("max_ratio", worst),
        );
    }

    let manufactured = Dirichlet1DProblem { f: RhsProfile::Sine(vec![PI * PI]), g0: 0.0, g1: 0.0 };
    let sol = solve_dirichlet_1d(&manufactured, b.manufactured_modes)?;
    let err = (0..=200)
        .map(|i| {
            let x = i as f64 / 200.0;
            (sol.value(x) - (PI * x).sin()).abs()
        })
        .fold(0.0, f64::max);
    ctx.push(
        CheckRecord::new("bvp/dirichlet/manufactured", "solve_dirichlet_1d", err, C::Le, tol.manufactured)
            .input("modes", b.manufactured_modes),
    );

    let lift = Dirichlet1DProblem { f: RhsProfile::Sine(vec![]), g0: 1.0, g1: 3.0 };
    let sol = solve_dirichlet_1d(&lift, 8)?;
    let err = (0..=20).map(|i| i as f64 / 20.0).map(|x| (sol.value(x) - (1.0 + 2.0 * x)).abs()).fold(0.0, f64::max);
    ctx.push(CheckRecord::new("bvp/dirichlet/harmonic_lift", "solve_dirichlet_1d", err, C::Le, tol.residual));

    let step = Dirichlet1DProblem { f: RhsProfile::step(b.step), g0: 0.0, g1: 0.0 };
    let sol = solve_dirichlet_1d(&step, b.step_modes)?;
    let err = (1..=10)
        .map(|i| (i as f64 - 0.5) / 10.0)
        .map(|x| (sol.value(x) - step_closed_form(b.step, x)).abs())
        .fold(0.0, f64::max);
    ctx.push(
        CheckRecord::new("bvp/dirichlet/step_closed_form", "solve_dirichlet_1d", err, C::Le, tol.closed_form)
            .input("modes", b.step_modes)
            .input("step", b.step)
            .detail("boundary_mismatch", sol.boundary_mismatch),
    );

    let hat = RhsProfile::hat(0.3, 2.0);
    let kink = Dirichlet1DProblem { f: hat.clone(), g0: 0.5, g1: -1.0 };
    let sol = solve_dirichlet_1d(&kink, b.step_modes)?;
    let xs: Vec<f64> = (1..20).map(|i| i as f64 / 20.0 + 0.013).collect();
    ctx.push(
        CheckRecord::new("bvp/dirichlet/kink_residual", "solve_dirichlet_1d", sol.residual(&hat, &xs), C::Le, tol.closed_form)
            .input("modes", b.step_modes),
    );
    Ok(())
}

fn localreg(ctx: &mut Ctx) -> Result<(), CliError> {
    let l = ctx.r.config.localreg.clone();
    let cutoff = |v: [f64; 3]| SmoothCutoff::new(v[0], v[1], v[2]);
    let cfg = LocalRegularityConfig {
        interior: cutoff(l.interior)?,
        control: cutoff(l.control)?,
        local_phi: ctx.r.index(&l.local_phi, "localreg.local_phi")?,
        global_phi: ctx.r.index(&l.global_phi, "localreg.global_phi")?,
        ladder: l.ladder.clone(),
        drift_tolerance: l.drift,
        band_retention: l.retention,
    };
    if cfg.interior.contains(l.singularity) || !cfg.control.contains(l.singularity) {
        return Err(CliError::Invalid(
            "localreg: the interior cutoff must avoid the singularity and the control must contain it".into(),
        ));
    }
    let sol = solve_dirichlet_1d(&Dirichlet1DProblem { f: RhsProfile::step(l.singularity), g0: 0.0, g1: 0.0 }, 1)?;
    let u: Arc<dyn Fn(f64) -> f64 + Send + Sync> =
        Arc::new(move |x| sol.exact_value(x).expect("piecewise profile has a closed form"));
    let rep = local_regularity_experiment(u, &cfg)?;
    let op = "local_regularity_experiment";
    ctx.push(
        CheckRecord::new("localreg/interior/drift", op, rep.interior_drift, C::Lt, l.drift)
            .input("phi", l.local_phi.get_ref().as_str())
            .detail("reliable_last", rep.rungs.last().map(|r| r.interior.reliable).unwrap_or(false)),
    );
    ctx.push(
        CheckRecord::new("localreg/global/log_rate", op, rep.global_log_rate, C::Gt, 0.0)
            .input("phi", l.global_phi.get_ref().as_str()),
    );
    ctx.push(CheckRecord::new("localreg/global/grows", op, rep.global_grows, C::Eq, true));
    ctx.push(
        CheckRecord::new("localreg/control/log_rate", op, rep.control_log_rate, C::Gt, 0.0)
            .input("phi", l.global_phi.get_ref().as_str()),
    );
    ctx.push(CheckRecord::new("localreg/control/grows", op, rep.control_grows, C::Eq, true));
    let series = |name: &str, pick: &dyn Fn(&crate::elliptic_model::LocalRung) -> f64| Series {
        name: name.into(),
        x_label: "N".into(),
        y_label: "norm".into(),
        points: rep.rungs.iter().map(|r| (r.radius as f64, pick(r))).collect(),
    };
    ctx.series.push(series("interior", &|r| r.interior.norm));
    ctx.series.push(series("global", &|r| r.global.norm));
    ctx.series.push(series("control", &|r| r.control.norm));
    ctx.tables.push(Table {
        name: "rungs".into(),
        columns: ["N", "interior", "interior_fraction", "global", "global_fraction", "control", "control_fraction"]
            .map(String::from)
            .to_vec(),
        rows: rep
            .rungs
            .iter()
            .map(|r| {
                vec![
                    r.radius.into(),
                    r.interior.norm.into(),
                    r.interior.last_octave_fraction.into(),
                    r.global.norm.into(),
                    r.global.last_octave_fraction.into(),
                    r.control.norm.into(),
                    r.control.last_octave_fraction.into(),
                ]
            })
            .collect(),
    });
    Ok(())
}

fn cp(ctx: &mut Ctx) -> Result<(), CliError> {
    let c = ctx.r.config.cp.clone();
    let lat = FrequencyLattice::new(c.n, c.radius)?;
    for (k, (label, phi)) in ctx.r.catalog.clone().into_iter().enumerate() {
        let id = format!("cp/{label}");
        let verdict = match cp_constant(&phi, c.p, c.n, &c.ladder, &CpConfig::default()) {
            Ok(rep) => {
                if let Some(analytic) = rep.analytic {
                    ctx.push(
                        CheckRecord::new(format!("{id}/verdict"), "cp_constant", rep.verdict.to_string(), C::Eq, analytic.to_string())
                            .input("p", c.p)
                            .input("n", c.n)
                            .input("ladder", c.ladder.clone())
                            .detail("partial_sums", rep.partial_sums.iter().map(|&(_, s)| s).collect::<Vec<_>>())
                            .detail("limit_estimate", rep.limit_estimate.unwrap_or(f64::NAN)),
                    );
                }
                ctx.series.push(Series {
                    name: format!("{label} partial sums"),
                    x_label: "N".into(),
                    y_label: "K_p^2".into(),
                    points: rep.partial_sums.iter().map(|&(n, s)| (n as f64, s)).collect(),
                });
                rep.verdict
            }
            Err(SpectralError::CpDisagreement { sampled, analytic, .. }) => {
                ctx.push(
                    CheckRecord::new(format!("{id}/verdict"), "cp_constant", sampled.to_string(), C::Eq, analytic.to_string())
                        .input("ladder", c.ladder.clone()),
                );
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if verdict != CpVerdict::Convergent {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed(k));
        let mut violations = 0usize;
        let mut worst = 0.0f64;
        let mut evaluations = 0usize;
        for _ in 0..c.elements {
            let u = SpectralElement::random(lat.clone(), &mut rng);
            let points: Vec<Vec<f64>> = (0..c.points)
                .map(|_| (0..c.n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect())
                .collect();
            let chk = cp_conclusion_check(&u, c.p, &phi, &points)?;
            violations += chk.violations;
            evaluations += chk.evaluations;
            worst = worst.max(chk.max_ratio);
        }
        ctx.push(
            CheckRecord::new(format!("{id}/conclusion"), "cp_conclusion_check", violations, C::Eq, 0usize)
                .input("elements", c.elements)
                .input("N", c.radius)
                .detail("evaluations", evaluations)
                .detail("max_ratio", worst),
        );
    }
    if let Some(ratio) = &c.ratio {
        let div = ctx.r.index(&ratio.divergent, "cp.ratio.divergent")?;
        let conv = ctx.r.index(&ratio.convergent, "cp.ratio.convergent")?;
        let partial = cp_sum(&div, c.p, 1, &[ratio.radius])?[0];
        let limit = cp_constant(&conv, c.p, 1, &c.ladder, &CpConfig::default())?
            .limit_estimate
            .unwrap_or(f64::NAN);
        let mut rec = CheckRecord::new("cp/partial_over_limit", "cp_sum", partial / limit, C::Ge, ratio.factor)
            .input("divergent", ratio.divergent.get_ref().as_str())
            .input("convergent", ratio.convergent.get_ref().as_str())
            .input("N", ratio.radius);
        let mut d = BTreeMap::new();
        d.insert("partial".to_string(), Datum::from(partial));
        d.insert("limit".to_string(), Datum::from(limit));
        rec = rec.detail("values", Datum::Map(d));
        ctx.push(rec);
    }
    Ok(())
}
