//! Smooth partition of unity in frequency, the box operators `□_k`, Fourier
//! cutoff multipliers and modulation-space norms.

use std::io::Write;
use std::ops::RangeInclusive;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    lp_norm, transform_forward, transform_inverse, LineField, LineGrid, LineSpectrum, C64,
};

/// Unnormalized bump `φ(ξ) = exp(-1/(1-ξ²))` on `|ξ| < 1`.
pub fn bump(xi: f64) -> f64 {
    if xi.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - xi * xi)).exp()
    }
}

/// The family `σ_k(ξ) = σ₀(ξ - k)`.
///
/// The normalized variant divides the bump by `Σ_j φ(ξ - j)`, giving
/// `σ₀(0) = 1`, support in `(-1, 1)`, `σ₀ ≥ 1/2` on `[-1/2, 1/2)` and
/// `Σ_k σ_k ≡ 1`. The raw variant keeps the bare bump and fails completeness;
/// it exists as a negative control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionOfUnity {
    normalized: bool,
}

impl Default for PartitionOfUnity {
    fn default() -> Self {
        make_partition()
    }
}

pub fn make_partition() -> PartitionOfUnity {
    PartitionOfUnity { normalized: true }
}

impl PartitionOfUnity {
    pub fn raw_bump() -> Self {
        Self { normalized: false }
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `σ₀(ξ)`.
    pub fn profile(&self, xi: f64) -> f64 {
        let num = bump(xi);
        if !self.normalized {
            return num / bump(0.0);
        }
        if num == 0.0 {
            return 0.0;
        }
        let base = xi.floor() as i64;
        let den: f64 = (base - 1..=base + 2).map(|j| bump(xi - j as f64)).sum();
        num / den
    }

    /// `σ_k(ξ)`.
    pub fn sigma(&self, k: i64, xi: f64) -> f64 {
        self.profile(xi - k as f64)
    }

    /// Lower bound `c` of `σ₀` on `Q₀ = [-1/2, 1/2)`.
    pub fn lower_bound(&self) -> f64 {
        self.profile(0.5)
    }

    /// `σ₀(q/L)` for `q = -(L-1), …, L-1`; every `σ_k` on the lattice is a shift of this.
    pub fn lattice_profile(&self, box_length: u32) -> Vec<f64> {
        let l = box_length as i64;
        (-(l - 1)..=l - 1)
            .map(|q| self.profile(q as f64 / l as f64))
            .collect()
    }

    /// Writes `(ξ, σ₀(ξ))` at `samples` equispaced points of `[-1, 1]`.
    pub fn write_csv<W: Write>(&self, out: W, samples: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["xi", "sigma0"])?;
        let n = samples.max(2);
        for i in 0..n {
            let xi = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            w.write_record([format!("{xi:.12}"), format!("{:.17e}", self.profile(xi))])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn export_csv(&self, path: &Path, samples: usize) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?, samples)
    }
}

/// Index `k` of the box operator `□_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BoxIndex(pub i64);

/// Box indices whose support meets the spectral band of `grid`.
pub fn box_range(grid: &LineGrid) -> RangeInclusive<i64> {
    let limit = grid.nyquist().ceil() as i64;
    -limit..=limit
}

fn check_box(grid: &LineGrid, k: BoxIndex) -> Result<()> {
    let range = box_range(grid);
    if !range.contains(&k.0) {
        return Err(Error::IndexOutOfRange {
            index: k.0,
            limit: *range.end(),
        });
    }
    Ok(())
}

/// Applies `σ_k` to a spectrum, touching only the `2L-1` lattice points in its support.
pub fn box_spectrum(spec: &LineSpectrum, k: BoxIndex, profile: &[f64]) -> LineSpectrum {
    let grid = spec.grid();
    let l = grid.box_length() as i64;
    let mut out = LineSpectrum::zeros(grid);
    debug_assert_eq!(profile.len() as i64, 2 * l - 1);
    for (offset, &weight) in (-(l - 1)..=l - 1).zip(profile) {
        if let Some(slot) = grid.slot_of_lattice(k.0 * l + offset) {
            out.coeffs_mut()[slot] = spec.coeffs()[slot] * weight;
        }
    }
    out
}

/// `□_k f = F^{-1} σ_k F f`.
pub fn box_project(pou: &PartitionOfUnity, f: &LineField, k: BoxIndex) -> Result<LineField> {
    let grid = f.grid();
    check_box(&grid, k)?;
    let profile = pou.lattice_profile(grid.box_length());
    Ok(transform_inverse(&box_spectrum(&transform_forward(f), k, &profile)))
}

/// `(Σ_k ⟨k⟩^{sq} ‖□_k f‖_p^q)^{1/q}`, with the supremum at `q = ∞`.
pub fn modulation_norm(pou: &PartitionOfUnity, f: &LineField, s: f64, p: f64, q: f64) -> Result<f64> {
    for e in [p, q] {
        if e.is_nan() || e < 1.0 {
            return Err(Error::InvalidExponent(e));
        }
    }
    let grid = f.grid();
    let spec = transform_forward(f);
    let profile = pou.lattice_profile(grid.box_length());
    let mut acc = 0.0f64;
    for k in box_range(&grid) {
        let piece = box_spectrum(&spec, BoxIndex(k), &profile);
        if piece.coeffs().iter().all(|c| *c == C64::new(0.0, 0.0)) {
            continue;
        }
        let norm = lp_norm(transform_inverse(&piece).values(), grid.dx(), p)?;
        let weight = (1.0 + (k * k) as f64).powf(0.5 * s);
        if q.is_infinite() {
            acc = acc.max(weight * norm);
        } else {
            acc += (weight * norm).powf(q);
        }
    }
    Ok(if q.is_infinite() { acc } else { acc.powf(1.0 / q) })
}

/// `‖□_k f‖_{p2} / ‖□_k f‖_{p1}`, or 0 when the box is empty.
pub fn bernstein_check(pou: &PartitionOfUnity, f: &LineField, k: BoxIndex, p1: f64, p2: f64) -> Result<f64> {
    let piece = box_project(pou, f, k)?;
    let dx = f.grid().dx();
    let den = lp_norm(piece.values(), dx, p1)?;
    let num = lp_norm(piece.values(), dx, p2)?;
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

/// Random field with Gaussian spectrum on the lattice points of `(k - 1/2, k + 1/2)`.
///
/// Values are drawn in order of offset from `k`, so one seed yields
/// modulated copies of the same field for every `k`.
pub fn random_single_box_field<R: rand::Rng + ?Sized>(grid: LineGrid, k: i64, rng: &mut R) -> LineField {
    use rand_distr::{Distribution, StandardNormal};
    let lat = grid.box_length() as i64;
    let offsets: Vec<i64> = (-lat..=lat).filter(|d| 2 * d.abs() < lat).collect();
    let draws: Vec<C64> = offsets
        .iter()
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect();
    let spec = LineSpectrum::from_fn(grid, |xi| {
        let d = (xi * lat as f64).round() as i64 - k * lat;
        match offsets.iter().position(|&o| o == d) {
            Some(i) => draws[i],
            None => C64::new(0.0, 0.0),
        }
    });
    transform_inverse(&spec)
}

/// Real Fourier multiplier sampled on a line grid's spectral lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffMultiplier {
    grid: LineGrid,
    samples: Vec<f64>,
}

impl CutoffMultiplier {
    pub fn from_fn(grid: LineGrid, m: impl Fn(f64) -> f64) -> Self {
        let samples = (0..grid.points()).map(|k| m(grid.frequency(k))).collect();
        Self { grid, samples }
    }

    pub fn constant(grid: LineGrid, value: f64) -> Self {
        Self::from_fn(grid, |_| value)
    }

    /// `m_N = Σ_{|k| ≤ N} σ_k`: equal to 1 on `[-N, N]`, supported in `(-N-1, N+1)`.
    pub fn smoothed_indicator(pou: &PartitionOfUnity, grid: LineGrid, n: u32) -> Self {
        let n = n as i64;
        Self::from_fn(grid, |xi| (-n..=n).map(|k| pou.sigma(k, xi)).sum())
    }

    pub fn grid(&self) -> LineGrid {
        self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Uniform bound `B = max |m|`.
    pub fn bound(&self) -> f64 {
        self.samples.iter().fold(0.0, |a, m| a.max(m.abs()))
    }

    /// `‖m̌‖_{L¹}` of the periodized kernel on the box.
    pub fn kernel_l1_norm(&self) -> f64 {
        let spec = LineSpectrum::new(
            self.grid,
            self.samples.iter().map(|&m| C64::new(m, 0.0)).collect(),
        )
        .expect("multiplier samples match the grid");
        let kernel = transform_inverse(&spec);
        self.grid.dx() * kernel.values().iter().map(|c| c.norm()).sum::<f64>()
    }
}

/// `T_m f = F^{-1} m F f`.
pub fn multiplier_apply(m: &CutoffMultiplier, f: &LineField) -> Result<LineField> {
    if m.grid != f.grid() {
        return Err(Error::GridMismatch(format!(
            "multiplier lattice {:?} vs field {:?}",
            m.grid,
            f.grid()
        )));
    }
    let mut spec = transform_forward(f);
    for (c, &w) in spec.coeffs_mut().iter_mut().zip(&m.samples) {
        *c *= w;
    }
    Ok(transform_inverse(&spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{
        embed_periodic_on_line, random_band_limited, PeriodicField, TorusGrid,
    };
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rel_diff(a: &[C64], b: &[C64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    fn sum_boxes(pou: &PartitionOfUnity, f: &LineField) -> LineField {
        let mut acc = LineField::zeros(f.grid());
        for k in box_range(&f.grid()) {
            acc = acc.add(&box_project(pou, f, BoxIndex(k)).unwrap()).unwrap();
        }
        acc
    }

    #[test]
    fn profile_examples() {
        let pou = make_partition();
        assert_eq!(pou.profile(0.0), 1.0);
        assert_eq!(pou.profile(1.0), 0.0);
        assert_eq!(pou.profile(-1.0), 0.0);
        assert_eq!(pou.profile(1.3), 0.0);
        assert!((pou.lower_bound() - 0.5).abs() < 1e-15);
        let mut max_err = 0.0f64;
        for i in 0..=4000 {
            let xi = -2.0 + 4.0 * i as f64 / 4000.0;
            let total: f64 = (-3..=3).map(|k| pou.sigma(k, xi)).sum();
            max_err = max_err.max((total - 1.0).abs());
        }
        assert!(max_err < 1e-12, "{max_err}");
    }

    #[test]
    fn profile_lower_bound_on_unit_cell() {
        let pou = make_partition();
        let min = (0..=1000)
            .map(|i| pou.profile(-0.5 + i as f64 / 1000.0))
            .fold(f64::INFINITY, f64::min);
        assert!(min >= 0.5 - 1e-15);
    }

    #[test]
    fn raw_bump_is_not_a_partition() {
        let pou = PartitionOfUnity::raw_bump();
        assert_eq!(pou.profile(0.0), 1.0);
        let total: f64 = (-3..=3).map(|k| pou.sigma(k, 0.5)).sum();
        assert!((total - 1.0).abs() > 0.1);
    }

    #[test]
    fn disjoint_boxes_annihilate() {
        let g = LineGrid::new(16, 512).unwrap();
        let pou = make_partition();
        let spec = LineSpectrum::from_fn(g, |xi| {
            if (xi - 3.0).abs() < 0.5 {
                C64::new((-(xi - 3.0).powi(2)).exp(), 0.1)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let f = transform_inverse(&spec);
        for j in [-4, 0, 1, 5, 6, 9] {
            let piece = box_project(&pou, &f, BoxIndex(j)).unwrap();
            assert!(piece.max_abs() < 1e-14 * f.max_abs(), "box {j}");
        }
        assert!(box_project(&pou, &f, BoxIndex(3)).unwrap().max_abs() > 0.0);
    }

    #[test]
    fn reconstruction_on_random_field() {
        let g = LineGrid::new(8, 256).unwrap();
        let pou = make_partition();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_band_limited(g, 10.0, &mut rng);
        assert!(rel_diff(sum_boxes(&pou, &f).values(), f.values()) < 1e-12);
    }

    #[test]
    fn box_of_embedded_torus_field_is_single_tone() {
        let g = LineGrid::new(4, 256).unwrap();
        let pou = make_partition();
        let grid = TorusGrid::new(5);
        let w = PeriodicField::from_modes(
            grid,
            &[(2, C64::new(0.7, -0.1)), (3, C64::new(1.0, 0.5)), (-5, C64::new(0.2, 0.2))],
        )
        .unwrap();
        let e = embed_periodic_on_line(&w, &g).unwrap();
        for n in -5..=5 {
            let piece = box_project(&pou, &e, BoxIndex(n)).unwrap();
            let expected = LineField::from_fn(g, |s| w.mode(n) * C64::from_polar(1.0, 2.0 * PI * n as f64 * s));
            let err: f64 = piece
                .values()
                .iter()
                .zip(expected.values())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "n={n}: {err}");
        }
    }

    #[test]
    fn box_index_out_of_range() {
        let g = LineGrid::new(4, 64).unwrap();
        let f = LineField::zeros(g);
        assert!(matches!(
            box_project(&make_partition(), &f, BoxIndex(40)),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn modulation_norm_examples() {
        let g = LineGrid::new(16, 1024).unwrap();
        let pou = make_partition();
        assert_eq!(modulation_norm(&pou, &LineField::zeros(g), 1.0, 2.0, 2.0).unwrap(), 0.0);
        assert!(matches!(
            modulation_norm(&pou, &LineField::zeros(g), 1.0, 0.5, 2.0),
            Err(Error::InvalidExponent(_))
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_single_box_field(g, 5, &mut rng);
        let direct: f64 = (4..=6)
            .map(|k| {
                let b = box_project(&pou, &f, BoxIndex(k)).unwrap();
                (1.0 + (k * k) as f64) * b.l2_norm().powi(2)
            })
            .sum::<f64>()
            .sqrt();
        let m = modulation_norm(&pou, &f, 1.0, 2.0, 2.0).unwrap();
        assert!((m - direct).abs() / direct < 1e-12);
        let centre = 26f64.sqrt() * box_project(&pou, &f, BoxIndex(5)).unwrap().l2_norm();
        assert!(m >= centre);
    }

    #[test]
    fn modulation_l2_equivalence_bracket() {
        let g = LineGrid::new(8, 512).unwrap();
        let pou = make_partition();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for _ in 0..50 {
            let f = random_band_limited(g, 12.0, &mut rng);
            let r = modulation_norm(&pou, &f, 0.0, 2.0, 2.0).unwrap() / f.l2_norm();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        assert!(lo >= 0.5f64.sqrt() - 1e-12 && hi <= 1.0 + 1e-12);
        assert!(hi / lo < 4.0);
    }

    #[test]
    fn bernstein_examples() {
        let g = LineGrid::new(8, 512).unwrap();
        let pou = make_partition();
        let tone = |k: i64| LineField::from_fn(g, move |s| C64::from_polar(1.0, 2.0 * PI * k as f64 * s));
        let a = bernstein_check(&pou, &tone(3), BoxIndex(3), 2.0, f64::INFINITY).unwrap();
        let b = bernstein_check(&pou, &tone(10), BoxIndex(10), 2.0, f64::INFINITY).unwrap();
        assert!(a.is_finite() && (a - b).abs() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_single_box_field(g, 2, &mut rng);
        let same = bernstein_check(&pou, &f, BoxIndex(2), 3.0, 3.0).unwrap();
        assert!(same <= 1.0 + 1e-12);
        let empty = LineField::zeros(g);
        assert_eq!(bernstein_check(&pou, &empty, BoxIndex(-7), 2.0, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn multiplier_examples() {
        let g = LineGrid::new(16, 512).unwrap();
        let pou = make_partition();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_band_limited(g, 5.0, &mut rng);
        let one = CutoffMultiplier::constant(g, 1.0);
        assert!(rel_diff(multiplier_apply(&one, &f).unwrap().values(), f.values()) < 1e-14);

        let sigma0 = CutoffMultiplier::from_fn(g, |xi| pou.profile(xi));
        assert!(multiplier_apply(&sigma0, &f).unwrap().l2_norm() <= f.l2_norm() * (1.0 + 1e-12));

        let m4 = CutoffMultiplier::smoothed_indicator(&pou, g, 4);
        assert!((m4.bound() - 1.0).abs() < 1e-12);
        let k1 = m4.kernel_l1_norm();
        for _ in 0..20 {
            let f = random_band_limited(g, 8.0, &mut rng);
            let tf = multiplier_apply(&m4, &f).unwrap();
            assert!(tf.lp_norm(1.0).unwrap() <= k1 * f.lp_norm(1.0).unwrap() * (1.0 + 1e-12));
        }

        let other = LineGrid::new(8, 512).unwrap();
        assert!(matches!(
            multiplier_apply(&CutoffMultiplier::constant(other, 1.0), &f),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn cutoff_family_converges_monotonically() {
        let g = LineGrid::new(8, 512).unwrap();
        let pou = make_partition();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_band_limited(g, 20.0, &mut rng);
        let errs: Vec<f64> = [2, 4, 8, 16]
            .iter()
            .map(|&n| {
                let m = CutoffMultiplier::smoothed_indicator(&pou, g, n);
                multiplier_apply(&m, &f).unwrap().sub(&f).unwrap().l2_norm()
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn partition_csv_export() {
        let mut buf = Vec::new();
        make_partition().write_csv(&mut buf, 5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "xi,sigma0");
        assert_eq!(lines.len(), 6);
        assert!(lines[3].starts_with("0.000000000000,1.0"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn partition_sums_to_one(xi in -50.0f64..50.0) {
            let pou = make_partition();
            let base = xi.floor() as i64;
            let total: f64 = (base - 2..=base + 2).map(|k| pou.sigma(k, xi)).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn far_boxes_are_orthogonal(j in -20i64..20, gap in 2i64..6, q in -2000i64..2000) {
            let pou = make_partition();
            let xi = q as f64 / 64.0;
            prop_assert_eq!(pou.sigma(j, xi) * pou.sigma(j + gap, xi), 0.0);
        }

        #[test]
        fn reconstruction_is_exact(seed in any::<u64>()) {
            let g = LineGrid::new(4, 128).unwrap();
            let pou = make_partition();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_band_limited(g, 15.0, &mut rng);
            prop_assert!(rel_diff(sum_boxes(&pou, &f).values(), f.values()) < 1e-12);
        }
    }
}
