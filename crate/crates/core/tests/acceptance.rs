//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the test
//! fails at the end if any criterion failed, so every line is always shown.

use std::time::Instant;

use ghostpulse::boxes::make_partition;
use ghostpulse::operators::OperatorKind;
use ghostpulse::resonance::multiplicity_audit;
use ghostpulse::solver::{existence_time_from_norms, Scheme};
use ghostpulse::trees::{bound_check, census_recursive, first_generation, GenerationCensus, ColoredTree};
use ghostpulse::verify;
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 7;

const CENSUS_MAX_J: usize = 5;
const BOUND_MAX_J: usize = 10;
const PHASE_QUADS: usize = 10_000;
const PHASE_REAL_TOL: f64 = 1e-12;
const SPLIT_TOL: f64 = 1e-10;
const AUDIT_CONFIGS: usize = 100;
const AUDIT_SPREAD_MAX: f64 = 5.0;
const GAUGE_TIMES: [f64; 3] = [0.1, 0.3, 1.0];
const GAUGE_TOL: f64 = 1e-9;
const PLANE_WAVE_TOL: f64 = 1e-8;
const ORDER_TARGET: f64 = 2.0;
const ORDER_TOL: f64 = 0.2;
const MASS_DRIFT_TOL: f64 = 1e-10;
const DECOMPOSITION_TOL: f64 = 1e-5;
const G_IDENTITY_TOL: f64 = 1e-12;
const RECONSTRUCTION_TOL: f64 = 1e-12;
const BERNSTEIN_SPREAD_MAX: f64 = 1.1;
const LIPSCHITZ_MAX: f64 = 10.0;
const LIPSCHITZ_STABILITY: f64 = 0.2;

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion(name: &str, results: &mut Vec<(String, bool)>, body: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let out = body();
    println!(
        "{} {name}: {} [{:.2?}]",
        if out.pass { "PASS" } else { "FAIL" },
        out.detail,
        start.elapsed()
    );
    results.push((name.to_string(), out.pass));
}

fn tree_census() -> Outcome {
    let mut trees: Vec<ColoredTree> = first_generation();
    let mut pass = trees.len() == 5;
    let mut sizes = Vec::new();
    for j in 1..=CENSUS_MAX_J {
        if j > 1 {
            trees = trees.iter().flat_map(|t| t.expand().expect("well formed")).collect();
        }
        let enumerated = GenerationCensus::from_trees(j, &trees);
        let recursive = census_recursive(j).expect("census");
        pass &= enumerated == recursive;
        sizes.push(enumerated.n.to_string());
    }
    pass &= sizes[0] == "5" && sizes[1] == "51";
    Outcome {
        pass,
        detail: format!("N(1..={CENSUS_MAX_J}) = [{}], enumeration equals recursion", sizes.join(", ")),
    }
}

fn growth_bound() -> Outcome {
    let mut pass = true;
    for j in 1..=BOUND_MAX_J {
        let b = bound_check(j).expect("bound");
        pass &= b.ok;
        if j == 1 {
            pass &= b.n == b.factorial_bound && b.n == BigUint::from(5u32);
        }
    }
    let last = bound_check(BOUND_MAX_J).expect("bound");
    Outcome {
        pass,
        detail: format!("N({BOUND_MAX_J}) = {} <= {}", last.n, last.factorial_bound),
    }
}

fn phase_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mismatches = verify::phi_integer_mismatches(PHASE_QUADS, &mut rng);
    let real = verify::phi_real_defect(PHASE_QUADS, &mut rng);
    Outcome {
        pass: mismatches == 0 && real <= PHASE_REAL_TOL,
        detail: format!("integer mismatches {mismatches}/{PHASE_QUADS}, real defect {real:.2e}"),
    }
}

fn splitting_partition() -> Outcome {
    let err = verify::split_reconstruction_error(SEED, &make_partition()).expect("split");
    let audit = multiplicity_audit(8, 16.0);
    Outcome {
        pass: err <= SPLIT_TOL && audit.violations == 0,
        detail: format!(
            "relative error {err:.2e}, multiplicity violations {}/{}",
            audit.violations, audit.quads
        ),
    }
}

fn divided_bounds() -> Outcome {
    let pou = make_partition();
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, kind) in OperatorKind::ALL.into_iter().enumerate() {
        let s = verify::lemma_fir_summary(kind, AUDIT_CONFIGS, SEED + i as u64, &pou).expect("audit");
        pass &= s.spread < AUDIT_SPREAD_MAX;
        parts.push(format!("{}={:.2}", kind.label(), s.spread));
    }
    Outcome {
        pass,
        detail: format!("max/median {}", parts.join(" ")),
    }
}

fn gauge_relations() -> Outcome {
    let pou = make_partition();
    let mut worst = 0.0f64;
    for (i, kind) in OperatorKind::ALL.into_iter().enumerate() {
        worst = worst.max(verify::gauge_residual(kind, &GAUGE_TIMES, 5, SEED + 10 + i as u64, &pou).expect("gauge"));
    }
    Outcome {
        pass: worst <= GAUGE_TOL,
        detail: format!("worst residual {worst:.2e}"),
    }
}

fn solver_accuracy() -> Outcome {
    let err = verify::plane_wave_error().expect("plane wave");
    let order = verify::convergence_order(Scheme::StrangSplitstep).expect("order");
    Outcome {
        pass: err <= PLANE_WAVE_TOL && (order - ORDER_TARGET).abs() <= ORDER_TOL,
        detail: format!("plane-wave error {err:.2e}, observed order {order:.3}"),
    }
}

fn conservation() -> Outcome {
    let (w, u) = verify::mass_drifts().expect("mass");
    Outcome {
        pass: w <= MASS_DRIFT_TOL && u <= MASS_DRIFT_TOL,
        detail: format!("torus drift {w:.2e}, line drift {u:.2e}"),
    }
}

fn decomposition() -> Outcome {
    let strang = verify::decomposition_error(Scheme::StrangSplitstep).expect("strang");
    let rk4 = verify::decomposition_error(Scheme::Rk4IntegratingFactor).expect("rk4");
    Outcome {
        pass: strang <= DECOMPOSITION_TOL && rk4 <= DECOMPOSITION_TOL,
        detail: format!("relative gap {strang:.2e} (split-step), {rk4:.2e} (integrating factor)"),
    }
}

fn structural() -> Outcome {
    let pou = make_partition();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let v_growth = verify::zero_perturbation_growth(SEED).expect("zero v");
    let g = verify::g_identity_defect(10_000, &mut rng);
    let recon = verify::reconstruction_defect(&pou, &mut rng).expect("reconstruction");
    let bern = verify::bernstein_spread(&pou, SEED).expect("bernstein");
    Outcome {
        pass: v_growth == 0.0 && g <= G_IDENTITY_TOL && recon <= RECONSTRUCTION_TOL && bern <= BERNSTEIN_SPREAD_MAX,
        detail: format!("max|v| {v_growth:.1e}, G defect {g:.2e}, reconstruction {recon:.2e}, Bernstein max/median {bern:.4}"),
    }
}

fn lipschitz() -> Outcome {
    let horizon = existence_time_from_norms(1.0, 1.0);
    let (full, half) = verify::lipschitz_ratios().expect("lipschitz");
    let change = (full - half).abs() / full;
    Outcome {
        pass: horizon == 1.0 / 64.0 && full.is_finite() && full <= LIPSCHITZ_MAX && change < LIPSCHITZ_STABILITY,
        detail: format!("horizon {horizon}, ratio {full:.4}, change on halving {change:.2e}"),
    }
}

fn main() {
    let mut results = Vec::new();
    criterion("tree-census-exactness", &mut results, tree_census);
    criterion("growth-bound", &mut results, growth_bound);
    criterion("phase-identity", &mut results, phase_identity);
    criterion("splitting-partition-identity", &mut results, splitting_partition);
    criterion("divided-symbol-audits", &mut results, divided_bounds);
    criterion("gauge-relations", &mut results, gauge_relations);
    criterion("solver-accuracy", &mut results, solver_accuracy);
    criterion("conservation", &mut results, conservation);
    criterion("decomposition-oracle", &mut results, decomposition);
    criterion("structural-invariants", &mut results, structural);
    criterion("lipschitz-probe", &mut results, lipschitz);
    let failed: Vec<&str> = results.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.as_str()).collect();
    if failed.is_empty() {
        println!("acceptance: {} criteria passed", results.len());
    } else {
        eprintln!("acceptance: failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
