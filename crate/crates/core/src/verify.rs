//! Invariant suites run by `ghostpulse verify`.
//!
//! Every check records the measured number next to its threshold. The
//! measurement helpers are public so the acceptance tests can apply their own
//! tolerances to the same quantities.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boxes::{bernstein_check, box_project, box_range, random_single_box_field, BoxIndex, PartitionOfUnity};
use crate::error::{Error, Result};
use crate::operators::{
    divided_bound_audit, gauge_relation_check, random_nonresonant_indices, random_slots, slots_from, summarize,
    AuditSummary, BoxedField, BoxedLinePiece, OperatorKind,
};
use crate::resonance::{
    apply_split_nonlinearity, approx, boxed_relative_error, count_a_n, direct_interaction_derivative, enumerate_a_n,
    enumerate_a_n_complement, multiplicity_audit, phi, phi_real, FrequencyQuad,
};
use crate::solver::{
    co_evolve, direct_full_solve, g_pointwise, lipschitz_probe, HybridState, NonlinearSign, Scheme, SolverConfig,
    ToothProfile,
};
use crate::spectral::{
    embed_periodic_on_line, random_band_limited, random_periodic, sobolev_norm_line, sobolev_norm_torus,
    transform_forward, transform_inverse, FreeEvolution, LineField, LineGrid, PeriodicField, SobolevIndex, TorusGrid,
    C64,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub description: String,
    pub measured: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Check {
    pub fn at_most(id: impl Into<String>, description: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            measured,
            threshold,
            comparison: Comparison::AtMost,
            pass: measured.is_finite() && measured <= threshold,
        }
    }

    pub fn at_least(id: impl Into<String>, description: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            measured,
            threshold,
            comparison: Comparison::AtLeast,
            pass: measured.is_finite() && measured >= threshold,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.comparison {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
        };
        write!(
            f,
            "{} {}: measured {:.3e} (required {op} {:.3e}) {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.measured,
            self.threshold,
            self.description
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Spectral,
    Boxes,
    Resonance,
    Operators,
    Solver,
    All,
}

impl Suite {
    pub const MODULES: [Suite; 5] = [Self::Spectral, Self::Boxes, Self::Resonance, Self::Operators, Self::Solver];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "spectral" => Self::Spectral,
            "boxes" => Self::Boxes,
            "resonance" => Self::Resonance,
            "operators" => Self::Operators,
            "solver" => Self::Solver,
            "all" => Self::All,
            other => return Err(Error::InvalidConfig(format!("unknown suite '{other}'"))),
        })
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub partition: PartitionOfUnity,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            partition: crate::boxes::make_partition(),
            seed: 20240611,
        }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Vec<Check>> {
    match suite {
        Suite::Spectral => spectral_suite(opts),
        Suite::Boxes => boxes_suite(opts),
        Suite::Resonance => resonance_suite(opts),
        Suite::Operators => operators_suite(opts),
        Suite::Solver => solver_suite(opts),
        Suite::All => {
            let mut all = Vec::new();
            for s in Suite::MODULES {
                all.extend(run_suite(s, opts)?);
            }
            Ok(all)
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rel_distance(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

// ---------------------------------------------------------------- spectral

/// Worst of the Parseval, inversion and free-evolution defects over `trials` random fields.
pub fn transform_defects<R: Rng + ?Sized>(trials: usize, rng: &mut R) -> (f64, f64, f64) {
    let g = LineGrid::new(8, 512).expect("valid grid");
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..trials {
        let f = random_band_limited(g, 20.0, rng);
        let spec = transform_forward(&f);
        let parseval = (spec.l2_norm() - f.l2_norm()).abs() / f.l2_norm();
        let inversion = rel_distance(transform_inverse(&spec).values(), f.values());
        let t = rng.gen_range(-5.0..5.0);
        let evolved = spec.free_evolve(t);
        let unitary = (evolved.l2_norm() - spec.l2_norm()).abs() / spec.l2_norm();
        worst = (worst.0.max(parseval), worst.1.max(inversion), worst.2.max(unitary));
    }
    worst
}

/// `‖wv‖_{H^{s}} / (‖w‖_{H^{s+1}(T)} ‖v‖_{H^{s}})` over random alias-free pairs.
pub fn product_estimate_ratios<R: Rng + ?Sized>(pairs: usize, s1: f64, rng: &mut R) -> Result<Vec<f64>> {
    let g = LineGrid::new(8, 512)?;
    let s = SobolevIndex::new(s1)?;
    let s_up = SobolevIndex::new(s1 + 1.0)?;
    (0..pairs)
        .map(|_| {
            let modes = rng.gen_range(1..=8);
            let w = random_periodic(TorusGrid::new(modes), rng.gen_range(0.0..2.0), rng);
            let v = random_band_limited(g, rng.gen_range(1.0..8.0), rng);
            let wv: Vec<C64> = embed_periodic_on_line(&w, &g)?
                .values()
                .iter()
                .zip(v.values())
                .map(|(a, b)| a * b)
                .collect();
            let wv = LineField::new(g, wv)?;
            Ok(sobolev_norm_line(&wv, s) / (sobolev_norm_torus(&w, s_up) * sobolev_norm_line(&v, s)))
        })
        .collect()
}

fn spread(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let median = v[v.len() / 2];
    v[v.len() - 1] / median
}

fn spectral_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut r = rng(opts.seed);
    let (parseval, inversion, unitary) = transform_defects(20, &mut r);
    let g = LineGrid::new(8, 256)?;
    let mut monotone_violations = 0.0;
    let mut tiling = 0.0f64;
    for _ in 0..20 {
        let f = random_band_limited(g, 10.0, &mut r);
        let norms: Vec<f64> = [0.0, 0.5, 1.0, 1.5, 2.5]
            .iter()
            .map(|&s| sobolev_norm_line(&f, SobolevIndex::new(s).expect("nonnegative")))
            .collect();
        monotone_violations += norms.windows(2).filter(|w| w[1] < w[0] * (1.0 - 1e-14)).count() as f64;
        let w = random_periodic(TorusGrid::new(6), 1.0, &mut r);
        let embedded = embed_periodic_on_line(&w, &g)?.l2_norm();
        let expected = (g.box_length() as f64).sqrt() * w.l2_norm();
        tiling = tiling.max((embedded - expected).abs() / expected);
    }
    let ratios = product_estimate_ratios(100, 1.5, &mut r)?;
    Ok(vec![
        Check::at_most("parseval", "transform preserves the L2 norm", parseval, 1e-12),
        Check::at_most("inversion", "inverse transform recovers the field", inversion, 1e-12),
        Check::at_most("free-evolution-unitary", "free evolution preserves the L2 norm", unitary, 1e-12),
        Check::at_most("sobolev-monotone", "Sobolev norms grow with s (violations)", monotone_violations, 0.0),
        Check::at_most("embedding-norm", "tiled norm equals sqrt(L) times torus norm", tiling, 1e-12),
        Check::at_most(
            "product-estimate",
            "product ratio max/median at s1 = 1.5 over 100 pairs",
            spread(&ratios),
            10.0,
        ),
    ])
}

// ------------------------------------------------------------------- boxes

/// `max_ξ |Σ_k σ_k(ξ) - 1|` on a fine sample of `[-4, 4]`.
pub fn partition_defect(pou: &PartitionOfUnity) -> f64 {
    (0..=8000)
        .map(|i| {
            let xi = -4.0 + i as f64 * 1e-3;
            let sum: f64 = (-7..=7).map(|k| pou.sigma(k, xi)).sum();
            (sum - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// `‖Σ_k □_k f - f‖ / ‖f‖` for a random band-limited field.
pub fn reconstruction_defect<R: Rng + ?Sized>(pou: &PartitionOfUnity, rng: &mut R) -> Result<f64> {
    let g = LineGrid::new(8, 256)?;
    let f = random_band_limited(g, 10.0, rng);
    let mut sum = LineField::zeros(g);
    for k in box_range(&g) {
        sum = sum.add(&box_project(pou, &f, BoxIndex(k))?)?;
    }
    Ok(rel_distance(sum.values(), f.values()))
}

/// `max_k / median_k` of `‖□_k f_k‖_∞ / ‖□_k f_k‖_2` for single-box fields,
/// `k ∈ [-20, 20]`, every `f_k` drawn from the same seed.
pub fn bernstein_spread(pou: &PartitionOfUnity, seed: u64) -> Result<f64> {
    let g = LineGrid::new(8, 512)?;
    let ratios: Vec<f64> = (-20..=20)
        .map(|k| {
            let f = random_single_box_field(g, k, &mut rng(seed));
            bernstein_check(pou, &f, BoxIndex(k), 2.0, f64::INFINITY)
        })
        .collect::<Result<_>>()?;
    Ok(spread(&ratios))
}

fn boxes_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let pou = &opts.partition;
    let mut r = rng(opts.seed ^ 0xb0c5);
    Ok(vec![
        Check::at_most("partition-of-unity", "box profiles sum to one", partition_defect(pou), 1e-12),
        Check::at_most(
            "box-reconstruction",
            "box projections sum back to the field",
            reconstruction_defect(pou, &mut r)?,
            1e-12,
        ),
        Check::at_most(
            "bernstein-uniformity",
            "L2 to Linf ratio max/median over boxes -20..20",
            bernstein_spread(pou, opts.seed)?,
            1.1,
        ),
    ])
}

// --------------------------------------------------------------- resonance

/// Integer quads on which `Φ ≠ 2(n - n₁)(n - n₃)` under the exact constraint.
pub fn phi_integer_mismatches<R: Rng + ?Sized>(count: usize, rng: &mut R) -> usize {
    (0..count)
        .filter(|_| {
            let n1 = rng.gen_range(-100_000i64..=100_000);
            let n2 = rng.gen_range(-100_000i64..=100_000);
            let n3 = rng.gen_range(-100_000i64..=100_000);
            let n = n1 - n2 + n3;
            phi(n, n1, n2, n3) != 2 * (n - n1) * (n - n3)
        })
        .count()
}

/// Largest relative defect of the factorization on real quads.
pub fn phi_real_defect<R: Rng + ?Sized>(count: usize, rng: &mut R) -> f64 {
    (0..count)
        .map(|_| {
            let x1 = rng.gen_range(-50.0..50.0);
            let x2 = rng.gen_range(-50.0..50.0);
            let x3 = rng.gen_range(-50.0..50.0);
            let x = x1 - x2 + x3;
            let lhs = phi_real(x, x1, x2, x3);
            let rhs = 2.0 * (x - x1) * (x - x3);
            let scale = x * x + x1 * x1 + x2 * x2 + x3 * x3;
            (lhs - rhs).abs() / scale.max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Random boxed perturbation on boxes `-modes/2..modes/2` and periodic background on the same modes.
pub fn random_split_data(seed: u64, modes: i64, lattice: u32, pou: &PartitionOfUnity) -> Result<(BoxedField, PeriodicField)> {
    let mut r = rng(seed);
    let mut v = BoxedField::new(lattice);
    for n in -modes / 2..modes / 2 {
        v.insert(BoxedLinePiece::random(n, lattice, pou, &mut r).scale(C64::new(0.3, 0.0)))?;
    }
    let mut w = PeriodicField::zeros(TorusGrid::new(modes as usize / 2));
    for n in -modes / 2..modes / 2 {
        w.set_mode(n, C64::new(r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5)))?;
    }
    Ok((v, w))
}

/// Worst relative gap, over both signs, between `R₂ - R₁ + N₁` and the direct derivative.
pub fn split_reconstruction_error(seed: u64, pou: &PartitionOfUnity) -> Result<f64> {
    let (v, w) = random_split_data(seed, 8, 8, pou)?;
    let mut worst = 0.0f64;
    for sign in [NonlinearSign::Defocusing, NonlinearSign::Focusing] {
        let split = apply_split_nonlinearity(&v, &w, sign, 16.0, 0.37, pou)?;
        let direct = direct_interaction_derivative(&v, &w, sign, 0.37, pou)?;
        worst = worst.max(boxed_relative_error(&split.reconstruct(), &direct)?);
    }
    Ok(worst)
}

/// Non-resonant quads in the band counted zero or twice by `A_N(n)` and its
/// complement, against a brute-force count over all triples.
pub fn classification_partition_defects(band: i64, threshold: f64) -> usize {
    let mut bad = 0;
    for n in -band..=band {
        let inside = enumerate_a_n(n, threshold, band);
        let outside = enumerate_a_n_complement(n, threshold, band);
        let mut total = 0usize;
        for n1 in -band..=band {
            for n2 in -band..=band {
                for n3 in -band..=band {
                    let q = FrequencyQuad::new(n, n1, n2, n3);
                    if q.satisfies_constraint() && !approx(n1, n) && !approx(n3, n) {
                        total += 1;
                    }
                }
            }
        }
        if inside.len() + outside.len() != total || count_a_n(n, threshold, band) as usize != inside.len() {
            bad += 1;
        }
        let overlap = inside
            .iter()
            .filter(|q: &&FrequencyQuad| outside.binary_search(q).is_ok())
            .count();
        bad += overlap;
    }
    bad
}

fn resonance_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut r = rng(opts.seed ^ 0x7e50);
    let audit = multiplicity_audit(6, 16.0);
    Ok(vec![
        Check::at_most(
            "phi-factorization-integer",
            "mismatches on 10^4 constrained integer quads",
            phi_integer_mismatches(10_000, &mut r) as f64,
            0.0,
        ),
        Check::at_most(
            "phi-factorization-real",
            "relative defect on 10^4 real quads",
            phi_real_defect(10_000, &mut r),
            1e-12,
        ),
        Check::at_most(
            "resonant-set-partition",
            "quads missed or double counted by A_N and its complement",
            classification_partition_defects(6, 16.0) as f64,
            0.0,
        ),
        Check::at_most(
            "multiplicity-audit",
            format!("quads with net multiplicity other than one (of {})", audit.quads),
            audit.violations as f64,
            0.0,
        ),
        Check::at_most(
            "split-reconstruction",
            "R2 - R1 + N1 against the direct interaction derivative",
            split_reconstruction_error(opts.seed, &opts.partition)?,
            1e-10,
        ),
    ])
}

// --------------------------------------------------------------- operators

/// Largest gauge residual over random non-resonant configurations and the given times.
pub fn gauge_residual(kind: OperatorKind, times: &[f64], configs: usize, seed: u64, pou: &PartitionOfUnity) -> Result<f64> {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..configs {
        let [n, n1, n2, n3] = random_nonresonant_indices(&mut r, 10, 6);
        let (pieces, tones) = random_slots(kind, [n1, n2, n3], 16, pou, &mut r);
        for &t in times {
            worst = worst.max(gauge_relation_check(kind, n, slots_from(&pieces, &tones), t, pou)?);
        }
    }
    Ok(worst)
}

/// Summary of the normalized divided-symbol audit for one kind.
pub fn lemma_fir_summary(kind: OperatorKind, configs: usize, seed: u64, pou: &PartitionOfUnity) -> Result<AuditSummary> {
    let rows = divided_bound_audit(kind, configs, 8, pou, &mut rng(seed))?;
    Ok(summarize(&rows))
}

fn operators_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let pou = &opts.partition;
    let mut checks = Vec::new();
    for (i, kind) in OperatorKind::ALL.into_iter().enumerate() {
        checks.push(Check::at_most(
            format!("gauge-relation-{}", kind.label()),
            "integrated symbol against gauged divided symbol at t = 0.1, 0.3, 1.0",
            gauge_residual(kind, &[0.1, 0.3, 1.0], 3, opts.seed + i as u64, pou)?,
            1e-9,
        ));
    }
    for (i, kind) in OperatorKind::ALL.into_iter().enumerate() {
        let summary = lemma_fir_summary(kind, 100, opts.seed + 100 + i as u64, pou)?;
        checks.push(Check::at_most(
            format!("divided-bound-{}", kind.label()),
            format!("normalized ratio max/median over 100 configurations (max {:.3e})", summary.max),
            summary.spread,
            5.0,
        ));
    }
    Ok(checks)
}

// ------------------------------------------------------------------ solver

fn small_config() -> SolverConfig {
    SolverConfig {
        dt: 1e-3,
        t_final: 1.0,
        sign: NonlinearSign::Defocusing,
        torus_modes: 8,
        torus_samples: 32,
        box_length: 8.0,
        points: 256,
        dealias: 2.0 / 3.0,
        scheme: Scheme::StrangSplitstep,
        record_every: 1000,
    }
}

fn gaussian(g: LineGrid, amp: f64, width: f64) -> LineField {
    LineField::from_fn(g, |s| C64::new(amp * (-s * s / (2.0 * width * width)).exp(), 0.0))
}

/// Largest `L²` error of the plane wave `A e^{i(kx + (k² + σA²)t)}` at `T = 1`,
/// `dt = 1e-3`, over both signs, both solvers and a few `(k, A)`.
pub fn plane_wave_error() -> Result<f64> {
    let mut worst = 0.0f64;
    for sign in [NonlinearSign::Defocusing, NonlinearSign::Focusing] {
        let cfg = SolverConfig { sign, ..small_config() };
        let g = cfg.line_grid()?;
        for (k, a) in [(0i64, 1.0f64), (2, 0.7), (-3, 0.5)] {
            let omega = (k * k) as f64 + sign.value() * a * a;
            let w0 = PeriodicField::from_modes(cfg.torus_grid()?, &[(k, C64::new(a, 0.0))])?;
            let state = HybridState::new(w0, LineField::zeros(g), 0.0)?;
            let w = co_evolve(&state, &cfg, None)?.final_state().w.clone();
            let exact = PeriodicField::from_modes(cfg.torus_grid()?, &[(k, C64::from_polar(a, omega))])?;
            let diff: f64 = w.coeffs().iter().zip(exact.coeffs()).map(|(x, y)| (x - y).norm_sqr()).sum();
            worst = worst.max(diff.sqrt());

            let tone = |t: f64| {
                LineField::from_fn(g, move |s| C64::from_polar(a, std::f64::consts::TAU * k as f64 * s + omega * t))
            };
            let u = direct_full_solve(&tone(0.0), &cfg)?.final_u;
            worst = worst.max(u.sub(&tone(1.0))?.l2_norm() / (g.box_length() as f64).sqrt());
        }
    }
    Ok(worst)
}

/// Self-convergence order of the hybrid solver on a perturbed plane wave, from `dt = 0.02, 0.01, 0.005`.
pub fn convergence_order(scheme: Scheme) -> Result<f64> {
    let base = SolverConfig { scheme, ..small_config() };
    let g = base.line_grid()?;
    let w0 = ToothProfile::PlaneWave { amplitude: 0.8, mode: 1 }.to_field(base.torus_grid()?)?;
    let state = HybridState::new(w0, gaussian(g, 0.5, 0.4), 0.0)?;
    let run = |dt: f64| -> Result<LineField> {
        let cfg = SolverConfig { dt, ..base.clone() };
        co_evolve(&state, &cfg, None)?.final_state().total()
    };
    let (a, b, c) = (run(0.02)?, run(0.01)?, run(0.005)?);
    Ok((a.sub(&b)?.l2_norm() / b.sub(&c)?.l2_norm()).log2())
}

/// Relative drift of `‖w‖_{L²(T)}` and of the direct solver's `‖u‖₂` over `10³` steps.
pub fn mass_drifts() -> Result<(f64, f64)> {
    let cfg = SolverConfig {
        torus_modes: 32,
        torus_samples: 128,
        points: 1024,
        record_every: 100,
        ..small_config()
    };
    let g = cfg.line_grid()?;
    let w0 = ToothProfile::Gaussian { amplitude: 1.0, width: 0.06 }.to_field(cfg.torus_grid()?)?;
    let state = HybridState::new(w0, LineField::zeros(g), 0.0)?;
    let traj = co_evolve(&state, &cfg, None)?;
    let m0 = traj.records[0].w_mass;
    let w_drift = traj.records.iter().map(|r| (r.w_mass - m0).abs() / m0).fold(0.0, f64::max);
    let u0 = gaussian(g, 0.8, 0.3).add(&embed_periodic_on_line(&state.w, &g)?)?;
    let run = direct_full_solve(&u0, &cfg)?;
    let u_drift = run.masses.iter().map(|m| (m - run.masses[0]).abs() / run.masses[0]).fold(0.0, f64::max);
    Ok((w_drift, u_drift))
}

/// Relative `L²` gap between `v + w` from the hybrid solver and the direct solve at `T = 0.5`.
pub fn decomposition_error(scheme: Scheme) -> Result<f64> {
    let cfg = SolverConfig { t_final: 0.5, scheme, ..small_config() };
    let g = cfg.line_grid()?;
    let w0 = ToothProfile::Gaussian { amplitude: 0.3, width: 0.15 }.to_field(cfg.torus_grid()?)?;
    let state = HybridState::new(w0, gaussian(g, 0.2, 0.5), 0.0)?;
    let u0 = state.total()?;
    let hybrid = co_evolve(&state, &cfg, None)?.final_state().total()?;
    let direct = direct_full_solve(&u0, &cfg)?.final_u;
    Ok(hybrid.sub(&direct)?.l2_norm() / direct.l2_norm())
}

/// `max_t ‖v(t)‖_∞` when `v₀ = 0`.
pub fn zero_perturbation_growth(seed: u64) -> Result<f64> {
    let cfg = SolverConfig { record_every: 50, ..small_config() };
    let w0 = random_periodic(cfg.torus_grid()?, 1.5, &mut rng(seed)).scale(C64::new(0.4, 0.0));
    let state = HybridState::new(w0, LineField::zeros(cfg.line_grid()?), 0.0)?;
    let traj = co_evolve(&state, &cfg, None)?;
    Ok(traj.snapshots.iter().map(|s| s.v.max_abs()).fold(0.0, f64::max))
}

/// Worst relative defect of `|w + v|²(w + v) = |w|²w + G(w, v)` at random points.
pub fn g_identity_defect<R: Rng + ?Sized>(count: usize, rng: &mut R) -> f64 {
    (0..count)
        .map(|_| {
            let mut c = || C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let (w, v) = (c(), c());
            let u = w + v;
            let lhs = u * u.norm_sqr();
            let rhs = w * w.norm_sqr() + g_pointwise(w, v);
            (lhs - rhs).norm() / (1.0 + u.norm().powi(3) + w.norm().powi(3))
        })
        .fold(0.0, f64::max)
}

/// Difference ratios for a perturbation and its half, on `[0, 1/64]` with unit-scale data.
pub fn lipschitz_ratios() -> Result<(f64, f64)> {
    let cfg = SolverConfig { t_final: 1.0 / 64.0, dt: 1.0 / 6400.0, ..small_config() };
    let g = cfg.line_grid()?;
    let w0 = ToothProfile::Gaussian { amplitude: 0.4, width: 0.1 }.to_field(cfg.torus_grid()?)?;
    let v0 = gaussian(g, 0.4, 0.3);
    let bump = gaussian(g, 1e-3, 0.2);
    let full = lipschitz_probe(&v0, &v0.add(&bump)?, &w0, &cfg)?;
    let half = lipschitz_probe(&v0, &v0.add(&bump.scale(C64::new(0.5, 0.0)))?, &w0, &cfg)?;
    Ok((full, half))
}

fn solver_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let (w_drift, u_drift) = mass_drifts()?;
    let order = convergence_order(Scheme::StrangSplitstep)?;
    let (l1, l2) = lipschitz_ratios()?;
    let mut r = rng(opts.seed ^ 0x501e);
    Ok(vec![
        Check::at_most("plane-wave", "exact plane-wave solution at T = 1", plane_wave_error()?, 1e-8),
        Check::at_most(
            "convergence-order",
            format!("|observed order - 2| (observed {order:.3})"),
            (order - 2.0).abs(),
            0.2,
        ),
        Check::at_most("w-mass", "relative torus mass drift over 1000 steps", w_drift, 1e-10),
        Check::at_most("u-mass", "relative line mass drift over 1000 steps", u_drift, 1e-10),
        Check::at_most(
            "decomposition",
            "hybrid against direct solve at T = 0.5",
            decomposition_error(Scheme::StrangSplitstep)?,
            1e-5,
        ),
        Check::at_most("v-zero-preserved", "max |v| when v0 = 0", zero_perturbation_growth(opts.seed)?, 0.0),
        Check::at_most("g-identity", "cubic expansion defect", g_identity_defect(10_000, &mut r), 1e-12),
        Check::at_most("lipschitz-ratio", "difference ratio on [0, 1/64]", l1, 10.0),
        Check::at_most(
            "lipschitz-stability",
            "relative change of the ratio when the perturbation is halved",
            (l1 - l2).abs() / l1,
            0.2,
        ),
    ])
}
