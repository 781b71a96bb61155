//! Phase function, resonance classification of frequency quadruples, the
//! index sets `A_N(n)`, divisor counting, and the resonant/non-resonant
//! splitting of the interaction-picture nonlinearity.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::boxes::PartitionOfUnity;
use crate::error::{Error, Result};
use crate::operators::{q1_apply, support_compatible, BoxedField, BoxedLinePiece, OperatorKind, Slot, SlotKind, ToneCoefficient};
use crate::solver::{g_nonlinearity, NonlinearSign};
use crate::spectral::{
    embed_periodic_on_line, transform_forward, transform_inverse, FreeEvolution, LineGrid, PeriodicField, C64,
};

/// Largest box or mode index accepted by the dense split summation.
pub const SPLIT_INDEX_LIMIT: i64 = 16;

/// `Φ = n² - n₁² + n₂² - n₃²` on integers.
pub fn phi(n: i64, n1: i64, n2: i64, n3: i64) -> i64 {
    n * n - n1 * n1 + n2 * n2 - n3 * n3
}

/// `Φ = ξ² - ξ₁² + ξ₂² - ξ₃²`.
pub fn phi_real(xi: f64, xi1: f64, xi2: f64, xi3: f64) -> f64 {
    xi * xi - xi1 * xi1 + xi2 * xi2 - xi3 * xi3
}

/// `n ≈ m` iff `|n - m| ≤ 1`.
pub fn approx(n: i64, m: i64) -> bool {
    (n - m).abs() <= 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FrequencyQuad {
    pub n: i64,
    pub n1: i64,
    pub n2: i64,
    pub n3: i64,
}

impl FrequencyQuad {
    pub fn new(n: i64, n1: i64, n2: i64, n3: i64) -> Self {
        Self { n, n1, n2, n3 }
    }

    pub fn phi(&self) -> i64 {
        phi(self.n, self.n1, self.n2, self.n3)
    }

    /// `2(n - n₁)(n - n₃)`, equal to `Φ` when `n = n₁ - n₂ + n₃`.
    pub fn factorized_phi(&self) -> i64 {
        2 * (self.n - self.n1) * (self.n - self.n3)
    }

    pub fn satisfies_constraint(&self) -> bool {
        approx(self.n, self.n1 - self.n2 + self.n3)
    }
}

/// Resonance class of a constrained quadruple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResonanceClass {
    /// `n₁ ≈ n` and `n₃ ≈ n`.
    R1,
    /// Exactly one of `n₁ ≈ n`, `n₃ ≈ n`.
    R2Part,
    /// Neither, with `|Φ| ≤ N`.
    N11,
    /// Neither, with `|Φ| > N`.
    N12,
}

impl ResonanceClass {
    pub fn label(self) -> &'static str {
        match self {
            Self::R1 => "R1",
            Self::R2Part => "R2",
            Self::N11 => "N11",
            Self::N12 => "N12",
        }
    }

    /// Number of times the quad is summed in `R₂ = (Σ_{n₁≈n} + Σ_{n₃≈n})(…)`.
    pub fn r2_multiplicity(self) -> i64 {
        match self {
            Self::R1 => 2,
            Self::R2Part => 1,
            _ => 0,
        }
    }

    pub fn r1_multiplicity(self) -> i64 {
        i64::from(self == Self::R1)
    }

    pub fn n1_multiplicity(self) -> i64 {
        i64::from(matches!(self, Self::N11 | Self::N12))
    }

    /// `R₂ - R₁ + N₁` coefficient; one for every class.
    pub fn net_multiplicity(self) -> i64 {
        self.r2_multiplicity() - self.r1_multiplicity() + self.n1_multiplicity()
    }
}

/// Classifies by `n₁ ≈ n`, `n₃ ≈ n` and `|Φ| ≤ N` without checking the constraint.
pub fn classify_unchecked(q: &FrequencyQuad, threshold: f64) -> ResonanceClass {
    match (approx(q.n1, q.n), approx(q.n3, q.n)) {
        (true, true) => ResonanceClass::R1,
        (true, false) | (false, true) => ResonanceClass::R2Part,
        (false, false) => {
            if (q.phi().abs() as f64) <= threshold {
                ResonanceClass::N11
            } else {
                ResonanceClass::N12
            }
        }
    }
}

pub fn classify_quad(q: &FrequencyQuad, threshold: f64) -> Result<ResonanceClass> {
    if !q.satisfies_constraint() {
        return Err(Error::ConstraintViolated(format!(
            "n={} but n1-n2+n3={}",
            q.n,
            q.n1 - q.n2 + q.n3
        )));
    }
    Ok(classify_unchecked(q, threshold))
}

fn non_resonant_in_band(n: i64, band: i64, mut visit: impl FnMut(FrequencyQuad)) {
    for n1 in -band..=band {
        if approx(n1, n) {
            continue;
        }
        for n3 in -band..=band {
            if approx(n3, n) {
                continue;
            }
            for delta in -1..=1 {
                let n2 = n1 + n3 - n + delta;
                if n2.abs() <= band {
                    visit(FrequencyQuad::new(n, n1, n2, n3));
                }
            }
        }
    }
}

/// `A_N(n)` restricted to `|n₁|, |n₂|, |n₃| ≤ band`, sorted by `(n₁, n₂, n₃)`.
pub fn enumerate_a_n(n: i64, threshold: f64, band: i64) -> Vec<FrequencyQuad> {
    let mut out = Vec::new();
    non_resonant_in_band(n, band, |q| {
        if (q.phi().abs() as f64) <= threshold {
            out.push(q);
        }
    });
    out.sort();
    out
}

/// `A_N(n)^c` in the same band and order.
pub fn enumerate_a_n_complement(n: i64, threshold: f64, band: i64) -> Vec<FrequencyQuad> {
    let mut out = Vec::new();
    non_resonant_in_band(n, band, |q| {
        if (q.phi().abs() as f64) > threshold {
            out.push(q);
        }
    });
    out.sort();
    out
}

/// `|A_N(n)|` in the band without materializing the set.
pub fn count_a_n(n: i64, threshold: f64, band: i64) -> u64 {
    let mut count = 0u64;
    non_resonant_in_band(n, band, |q| {
        if (q.phi().abs() as f64) <= threshold {
            count += 1;
        }
    });
    count
}

/// Writes `(n, n1, n2, n3, phi, class)` rows.
pub fn write_quads_csv<W: Write>(out: W, quads: &[FrequencyQuad], threshold: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "n1", "n2", "n3", "phi", "class"])?;
    for q in quads {
        w.write_record([
            q.n.to_string(),
            q.n1.to_string(),
            q.n2.to_string(),
            q.n3.to_string(),
            q.phi().to_string(),
            classify_unchecked(q, threshold).label().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Number of positive divisors of `m ≥ 1`.
pub fn divisor_count(m: i64) -> Result<u64> {
    if m < 1 {
        return Err(Error::DivisorDomain(m));
    }
    let mut count = 0u64;
    let mut d = 1i64;
    while d * d <= m {
        if m % d == 0 {
            count += if d * d == m { 1 } else { 2 };
        }
        d += 1;
    }
    Ok(count)
}

/// `d(m)` for every `m ≤ limit`; index 0 is unused and set to 0.
pub fn divisor_sieve(limit: usize) -> Vec<u32> {
    let mut d = vec![0u32; limit + 1];
    for k in 1..=limit {
        for m in (k..=limit).step_by(k) {
            d[m] += 1;
        }
    }
    d
}

/// Result of checking that `R₂ - R₁ + N₁` counts each constrained quad once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplicityAudit {
    pub quads: u64,
    pub violations: u64,
}

pub fn multiplicity_audit(band: i64, threshold: f64) -> MultiplicityAudit {
    let mut audit = MultiplicityAudit { quads: 0, violations: 0 };
    for n in -band..=band {
        for n1 in -band..=band {
            for n3 in -band..=band {
                for delta in -1..=1 {
                    let n2 = n1 + n3 - n + delta;
                    if n2.abs() > band {
                        continue;
                    }
                    let class = classify_unchecked(&FrequencyQuad::new(n, n1, n2, n3), threshold);
                    audit.quads += 1;
                    if class.net_multiplicity() != 1 {
                        audit.violations += 1;
                    }
                }
            }
        }
    }
    audit
}

/// Per-box pieces of `R₂`, `R₁`, `N₁₁` and `N₁₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitNonlinearity {
    pub r2: BTreeMap<i64, BoxedLinePiece>,
    pub r1: BTreeMap<i64, BoxedLinePiece>,
    pub n11: BTreeMap<i64, BoxedLinePiece>,
    pub n12: BTreeMap<i64, BoxedLinePiece>,
}

impl SplitNonlinearity {
    /// `N₁ = N₁₁ + N₁₂` per box.
    pub fn n1(&self) -> BTreeMap<i64, BoxedLinePiece> {
        combine(&[(&self.n11, 1.0), (&self.n12, 1.0)])
    }

    /// `R₂ - R₁ + N₁` per box.
    pub fn reconstruct(&self) -> BTreeMap<i64, BoxedLinePiece> {
        combine(&[(&self.r2, 1.0), (&self.r1, -1.0), (&self.n11, 1.0), (&self.n12, 1.0)])
    }
}

fn combine(parts: &[(&BTreeMap<i64, BoxedLinePiece>, f64)]) -> BTreeMap<i64, BoxedLinePiece> {
    let mut out: BTreeMap<i64, BoxedLinePiece> = BTreeMap::new();
    for (map, factor) in parts {
        for (n, piece) in map.iter() {
            let entry = out
                .entry(*n)
                .or_insert_with(|| BoxedLinePiece::zeros(*n, piece.lattice()));
            entry
                .add_assign_scaled(piece, C64::new(*factor, 0.0))
                .expect("pieces of one box share a lattice");
        }
    }
    out
}

fn accumulate(map: &mut BTreeMap<i64, BoxedLinePiece>, piece: &BoxedLinePiece, factor: C64) {
    map.entry(piece.n())
        .or_insert_with(|| BoxedLinePiece::zeros(piece.n(), piece.lattice()))
        .add_assign_scaled(piece, factor)
        .expect("pieces of one box share a lattice");
}

fn nonzero_modes(w: &PeriodicField) -> Vec<ToneCoefficient> {
    w.iter_modes()
        .filter(|(_, c)| *c != C64::new(0.0, 0.0))
        .map(|(n, c)| ToneCoefficient::new(n, c))
        .collect()
}

fn guard(v: &BoxedField, tones: &[ToneCoefficient]) -> Result<i64> {
    let k = tones.iter().map(|t| t.n.abs()).chain([v.max_index()]).max().unwrap_or(0);
    if k > SPLIT_INDEX_LIMIT {
        return Err(Error::CostGuard(format!(
            "dense split summation allows indices up to {SPLIT_INDEX_LIMIT}, got {k}"
        )));
    }
    Ok(k)
}

/// Splits `∂_t â_n = iσ e^{-itξ²} σ_n F[G(w, v)]` into its resonant and
/// non-resonant parts.
///
/// `v` holds the interaction-picture pieces `â_n = e^{-itξ²} σ_n v̂` and `w`
/// the interaction-picture tones `e^{-itn²} w_n`. Every kind is weighted by
/// `iσ` and its multiplicity, and quads are classified by `n₁ ≈ n`, `n₃ ≈ n`
/// and `|Φ(n, n₁, n₂, n₃)| ≤ N`.
pub fn apply_split_nonlinearity(
    v: &BoxedField,
    w: &PeriodicField,
    sign: NonlinearSign,
    threshold: f64,
    t: f64,
    pou: &PartitionOfUnity,
) -> Result<SplitNonlinearity> {
    let tones = nonzero_modes(w);
    guard(v, &tones)?;
    let mut split = SplitNonlinearity {
        r2: BTreeMap::new(),
        r1: BTreeMap::new(),
        n11: BTreeMap::new(),
        n12: BTreeMap::new(),
    };
    let pieces: Vec<&BoxedLinePiece> = v.pieces().values().collect();
    let i_sigma = C64::new(0.0, sign.value());

    for kind in OperatorKind::ALL {
        let options = kind.pattern().map(|sk| -> Vec<Slot> {
            match sk {
                SlotKind::Piece => pieces.iter().map(|p| Slot::Piece(p)).collect(),
                SlotKind::Tone => tones.iter().map(|t| Slot::Tone(*t)).collect(),
            }
        });
        let c = kind.pieces() as i64;
        let weight = i_sigma * kind.multiplicity();
        for s1 in &options[0] {
            for s2 in &options[1] {
                for s3 in &options[2] {
                    let idx = [s1.index(), s2.index(), s3.index()];
                    let m = idx[0] - idx[1] + idx[2];
                    for n in m - c..=m + c {
                        if !support_compatible(n, idx, kind.pieces()) {
                            continue;
                        }
                        let q = q1_apply(kind, n, [*s1, *s2, *s3], t, pou)?;
                        let class = classify_unchecked(&FrequencyQuad::new(n, idx[0], idx[1], idx[2]), threshold);
                        let r2 = class.r2_multiplicity();
                        if r2 > 0 {
                            accumulate(&mut split.r2, &q, weight * r2 as f64);
                        }
                        if class.r1_multiplicity() > 0 {
                            accumulate(&mut split.r1, &q, weight);
                        }
                        match class {
                            ResonanceClass::N11 => accumulate(&mut split.n11, &q, weight),
                            ResonanceClass::N12 => accumulate(&mut split.n12, &q, weight),
                            _ => {}
                        }
                    }
                }
            }
        }
    }
    Ok(split)
}

/// Oracle for [`apply_split_nonlinearity`]: evaluates `G(w, v)` pointwise on
/// an alias-free auxiliary grid and cuts `iσ e^{-itξ²} F[G]` into box pieces.
pub fn direct_interaction_derivative(
    v: &BoxedField,
    w: &PeriodicField,
    sign: NonlinearSign,
    t: f64,
    pou: &PartitionOfUnity,
) -> Result<BTreeMap<i64, BoxedLinePiece>> {
    let tones = nonzero_modes(w);
    let k = guard(v, &tones)?;
    let reach = 3 * (k + 1);
    let lattice = v.lattice();
    let points = (2 * lattice as usize * (reach as usize + 2)).next_power_of_two();
    let grid = LineGrid::new(lattice, points)?;

    let v_line = transform_inverse(&v.to_spectrum(grid)?.free_evolve(-t));
    let w_line = embed_periodic_on_line(&w.free_evolve(-t), &grid)?;
    let g = g_nonlinearity(&w_line, &v_line)?;
    let mut spec = transform_forward(&g).free_evolve(t);
    let i_sigma = C64::new(0.0, sign.value());
    for c in spec.coeffs_mut() {
        *c *= i_sigma;
    }

    let mut out = BTreeMap::new();
    for n in -reach..=reach {
        let piece = BoxedLinePiece::from_spectrum(&spec, n, pou);
        out.insert(n, piece);
    }
    Ok(out)
}

/// `‖a - b‖ / ‖b‖` over the union of boxes, boxes missing on one side counting as zero.
pub fn boxed_relative_error(a: &BTreeMap<i64, BoxedLinePiece>, b: &BTreeMap<i64, BoxedLinePiece>) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    let keys: std::collections::BTreeSet<i64> = a.keys().chain(b.keys()).copied().collect();
    for n in keys {
        match (a.get(&n), b.get(&n)) {
            (Some(x), Some(y)) => {
                num += x.distance(y)?.powi(2);
                den += y.l2_norm().powi(2);
            }
            (Some(x), None) => num += x.l2_norm().powi(2),
            (None, Some(y)) => {
                num += y.l2_norm().powi(2);
                den += y.l2_norm().powi(2);
            }
            (None, None) => {}
        }
    }
    Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxes::make_partition;
    use crate::spectral::TorusGrid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn phi_examples() {
        assert_eq!(phi(0, 0, 0, 0), 0);
        assert_eq!(phi(3, 5, 4, 2), -4);
        let q = FrequencyQuad::new(3, 5, 4, 2);
        assert_eq!(q.n1 - q.n2 + q.n3, q.n);
        assert_eq!(q.factorized_phi(), -4);
    }

    #[test]
    fn approx_examples() {
        assert!(approx(5, 5));
        assert!(approx(5, 6));
        assert!(!approx(5, 7));
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_quad(&FrequencyQuad::new(0, 1, 1, 0), 8.0).unwrap(), ResonanceClass::R1);
        assert_eq!(classify_quad(&FrequencyQuad::new(0, 3, 3, 0), 8.0).unwrap(), ResonanceClass::R2Part);
        assert_eq!(classify_quad(&FrequencyQuad::new(0, 2, 0, -2), 8.0).unwrap(), ResonanceClass::N11);
        assert_eq!(classify_quad(&FrequencyQuad::new(0, 4, 0, -4), 8.0).unwrap(), ResonanceClass::N12);
        assert!(matches!(
            classify_quad(&FrequencyQuad::new(0, 4, 0, 4), 8.0),
            Err(Error::ConstraintViolated(_))
        ));
    }

    #[test]
    fn a_n_matches_brute_force() {
        let band = 6;
        let fast = enumerate_a_n(0, 8.0, band);
        let mut brute = Vec::new();
        for n1 in -band..=band {
            for n2 in -band..=band {
                for n3 in -band..=band {
                    let q = FrequencyQuad::new(0, n1, n2, n3);
                    if q.satisfies_constraint() && !approx(n1, 0) && !approx(n3, 0) && q.phi().abs() <= 8 {
                        brute.push(q);
                    }
                }
            }
        }
        assert_eq!(fast, brute);
        assert_eq!(fast.len(), 24);
        assert_eq!(count_a_n(0, 8.0, band), 24);
    }

    #[test]
    fn a_n_with_half_threshold_is_exactly_the_zero_phase_set() {
        let band = 10;
        let set = enumerate_a_n(2, 0.5, band);
        assert!(set.iter().all(|q| q.phi() == 0));
        let zero_phase = enumerate_a_n(2, 0.0, band);
        assert_eq!(set, zero_phase);
    }

    #[test]
    fn a_n_and_complement_partition_the_non_resonant_quads() {
        let (n, band, threshold) = (1, 8, 20.0);
        let a = enumerate_a_n(n, threshold, band);
        let c = enumerate_a_n_complement(n, threshold, band);
        let a_set: std::collections::BTreeSet<_> = a.iter().collect();
        assert!(c.iter().all(|q| !a_set.contains(q)));
        let mut all = Vec::new();
        non_resonant_in_band(n, band, |q| all.push(q));
        assert_eq!(a.len() + c.len(), all.len());
    }

    #[test]
    fn divisor_examples() {
        assert_eq!(divisor_count(1).unwrap(), 1);
        assert_eq!(divisor_count(12).unwrap(), 6);
        assert_eq!(divisor_count(97).unwrap(), 2);
        assert!(matches!(divisor_count(0), Err(Error::DivisorDomain(0))));
        let sieve = divisor_sieve(2000);
        for (m, &d) in sieve.iter().enumerate().skip(1) {
            assert_eq!(d as u64, divisor_count(m as i64).unwrap());
        }
    }

    #[test]
    fn divisor_ratio_peaks_early_and_decays_by_block() {
        let limit = 1_000_000usize;
        let d = divisor_sieve(limit);
        let ratio = |m: usize| d[m] as f64 / (m as f64).sqrt();
        let (argmax, max) = (1..=limit).map(|m| (m, ratio(m))).fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        assert_eq!(argmax, 12);
        assert!((max - 3f64.sqrt()).abs() < 1e-12);
        let mut blocks = Vec::new();
        let mut lo = 1usize << 4;
        while lo <= limit {
            let hi = (2 * lo).min(limit + 1);
            blocks.push((lo..hi).map(ratio).fold(0.0, f64::max));
            lo *= 2;
        }
        assert!(blocks.windows(2).all(|w| w[1] < w[0]), "{blocks:?}");
        assert!(*blocks.last().unwrap() < 0.3);
    }

    #[test]
    fn a_n_growth_is_subquadratic_and_flattening() {
        let counts: Vec<f64> = [8.0, 16.0, 32.0, 64.0].iter().map(|&nn| count_a_n(0, nn, 64) as f64).collect();
        assert_eq!(counts, vec![24.0, 84.0, 280.0, 784.0]);
        let ns = [64.0f64, 128.0, 256.0, 512.0, 1024.0];
        let counts: Vec<f64> = ns.iter().map(|&nn| count_a_n(0, nn, 512) as f64).collect();
        let slopes: Vec<f64> = counts
            .windows(2)
            .map(|w| (w[1] / w[0]).log2())
            .collect();
        assert!(slopes.windows(2).all(|s| s[1] <= s[0] + 1e-12), "{slopes:?}");
        let normalized: Vec<f64> = ns.iter().zip(&counts).map(|(nn, c)| c / (nn * nn.ln())).collect();
        let hi = normalized.iter().copied().fold(0.0, f64::max);
        let lo = normalized.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(hi / lo < 2.0, "{normalized:?}");
    }

    #[test]
    fn multiplicity_audit_is_exact() {
        let audit = multiplicity_audit(6, 10.0);
        assert!(audit.quads > 0);
        assert_eq!(audit.violations, 0);
    }

    #[test]
    fn quads_csv_export() {
        let mut buf = Vec::new();
        write_quads_csv(&mut buf, &enumerate_a_n(0, 8.0, 3), 8.0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,n1,n2,n3,phi,class\n"));
        assert!(text.contains("0,-2,0,2,-8,N11") || text.contains("0,2,0,-2,-8,N11"));
    }

    fn random_data(seed: u64, modes: i64, lattice: u32) -> (BoxedField, PeriodicField) {
        let pou = make_partition();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = BoxedField::new(lattice);
        for n in -modes / 2..modes / 2 {
            v.insert(BoxedLinePiece::random(n, lattice, &pou, &mut rng).scale(C64::new(0.3, 0.0))).unwrap();
        }
        let grid = TorusGrid::new(modes as usize / 2);
        let mut w = PeriodicField::zeros(grid);
        for n in -modes / 2..modes / 2 {
            w.set_mode(n, C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))).unwrap();
        }
        (v, w)
    }

    #[test]
    fn split_reconstructs_direct_derivative() {
        let pou = make_partition();
        let (v, w) = random_data(11, 8, 8);
        for sign in [NonlinearSign::Defocusing, NonlinearSign::Focusing] {
            let split = apply_split_nonlinearity(&v, &w, sign, 16.0, 0.37, &pou).unwrap();
            let direct = direct_interaction_derivative(&v, &w, sign, 0.37, &pou).unwrap();
            let err = boxed_relative_error(&split.reconstruct(), &direct).unwrap();
            assert!(err <= 1e-10, "{err}");
        }
    }

    #[test]
    fn split_with_zero_v_vanishes() {
        let pou = make_partition();
        let (_, w) = random_data(12, 6, 8);
        let v = BoxedField::new(8);
        let split = apply_split_nonlinearity(&v, &w, NonlinearSign::Defocusing, 16.0, 0.2, &pou).unwrap();
        assert!(split.reconstruct().values().all(|p| p.is_zero()));
    }

    #[test]
    fn split_cost_guard() {
        let pou = make_partition();
        let mut v = BoxedField::new(4);
        v.insert(BoxedLinePiece::zeros(40, 4)).unwrap();
        let w = PeriodicField::zeros(TorusGrid::new(2));
        assert!(matches!(
            apply_split_nonlinearity(&v, &w, NonlinearSign::Focusing, 8.0, 0.0, &pou),
            Err(Error::CostGuard(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn phase_factorizes_on_integer_quads(n1 in -10_000i64..10_000, n2 in -10_000i64..10_000, n3 in -10_000i64..10_000) {
            let q = FrequencyQuad::new(n1 - n2 + n3, n1, n2, n3);
            prop_assert_eq!(q.phi(), q.factorized_phi());
        }

        #[test]
        fn phase_factorizes_on_real_quads(x1 in -100.0f64..100.0, x2 in -100.0f64..100.0, x3 in -100.0f64..100.0) {
            let xi = x1 - x2 + x3;
            let lhs = phi_real(xi, x1, x2, x3);
            let rhs = 2.0 * (xi - x1) * (xi - x3);
            let scale = xi * xi + x1 * x1 + x2 * x2 + x3 * x3;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0));
        }

        #[test]
        fn classification_is_total(n in -30i64..30, n1 in -30i64..30, n3 in -30i64..30, d in -1i64..=1, big in 0.0f64..500.0) {
            let q = FrequencyQuad::new(n, n1, n1 + n3 - n + d, n3);
            let class = classify_quad(&q, big).unwrap();
            prop_assert_eq!(class.net_multiplicity(), 1);
        }
    }
}
