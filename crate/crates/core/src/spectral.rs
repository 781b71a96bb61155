//! Grids, discrete Fourier transforms, free Schrödinger evolution and Sobolev
//! norms on the torus `T = R/Z` and on a periodic box standing in for `R`.
//!
//! Frequency units: physical space is measured in periods of the torus (the
//! coordinate `s`), and spectra use cycles per period, so torus frequencies are
//! the integers. The transform is `f̂(ξ) = ∫ e^{-2πiξs} f(s) ds`, which is
//! unitary and turns products into convolutions without extra constants. The
//! equations themselves are written in the rescaled coordinate
//! `x = 2π s` ([`SPATIAL_SCALE`]), in which `∂_x ↔ iξ` and the free
//! Schrödinger symbol is exactly `e^{-itξ²}`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Ratio between the equation coordinate `x` and the period coordinate `s`.
pub const SPATIAL_SCALE: f64 = 2.0 * PI;

type PlanCache = (FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>);

thread_local! {
    static PLANS: RefCell<PlanCache> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((len, forward))
            .or_insert_with(|| {
                let dir = if forward {
                    FftDirection::Forward
                } else {
                    FftDirection::Inverse
                };
                planner.plan_fft(len, dir)
            })
            .clone()
    })
}

/// Unnormalized forward DFT in place: `X_k = Σ_j x_j e^{-2πijk/n}`.
pub fn dft_in_place(buf: &mut [C64]) {
    if buf.len() > 1 {
        plan(buf.len(), true).process(buf);
    }
}

/// Unnormalized inverse DFT in place: `x_j = Σ_k X_k e^{2πijk/n}`.
pub fn idft_in_place(buf: &mut [C64]) {
    if buf.len() > 1 {
        plan(buf.len(), false).process(buf);
    }
}

/// Signed frequency index for FFT slot `k` of an `n`-point transform.
#[inline]
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// FFT slot holding signed frequency index `q`, if representable.
#[inline]
pub fn slot_of(q: i64, n: usize) -> Option<usize> {
    let n_i = n as i64;
    let lo = -(n_i / 2);
    let hi = n_i - 1 + lo;
    if q < lo || q > hi {
        return None;
    }
    Some(q.rem_euclid(n_i) as usize)
}

/// Japanese bracket `⟨ξ⟩ = (1 + ξ²)^{1/2}`.
#[inline]
pub fn bracket(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

/// Sobolev regularity index `s ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub fn new(s: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidConfig(format!("Sobolev index must be >= 0, got {s}")));
        }
        Ok(Self(s))
    }

    pub const ZERO: SobolevIndex = SobolevIndex(0.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Equispaced grid on one period of the torus, carrying modes `|n| ≤ M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    modes: usize,
    samples: usize,
}

impl TorusGrid {
    /// Grid with the smallest power-of-two sample count `≥ 2M+1`.
    pub fn new(modes: usize) -> Self {
        Self {
            modes,
            samples: (2 * modes + 1).next_power_of_two(),
        }
    }

    pub fn with_samples(modes: usize, samples: usize) -> Result<Self> {
        if samples < 2 * modes + 1 {
            return Err(Error::InvalidGrid(format!(
                "torus needs at least {} samples for {modes} modes, got {samples}",
                2 * modes + 1
            )));
        }
        Ok(Self { modes, samples })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn len(&self) -> usize {
        2 * self.modes + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn position(&self, j: usize) -> f64 {
        j as f64 / self.samples as f64
    }
}

/// Periodic box `[-L/2, L/2)` of integer length `L` sampled at `P` points.
///
/// The spectral lattice has spacing `1/L`, so every integer frequency is a
/// lattice point and periodic functions embed exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineGrid {
    box_length: u32,
    points: usize,
}

impl LineGrid {
    pub fn new(box_length: u32, points: usize) -> Result<Self> {
        if box_length == 0 {
            return Err(Error::NonIntegerBoxLength(0.0));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "line grid point count must be a power of two >= 2, got {points}"
            )));
        }
        Ok(Self { box_length, points })
    }

    /// Accepts a real box length, rejecting anything that is not a positive integer.
    pub fn from_length(box_length: f64, points: usize) -> Result<Self> {
        if !(box_length.is_finite() && box_length >= 1.0 && box_length.fract() == 0.0) {
            return Err(Error::NonIntegerBoxLength(box_length));
        }
        Self::new(box_length as u32, points)
    }

    pub fn box_length(&self) -> u32 {
        self.box_length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Physical spacing `Δs = L/P`.
    pub fn dx(&self) -> f64 {
        self.box_length as f64 / self.points as f64
    }

    /// Spectral spacing `Δξ = 1/L`.
    pub fn dxi(&self) -> f64 {
        1.0 / self.box_length as f64
    }

    pub fn nyquist(&self) -> f64 {
        self.points as f64 / (2.0 * self.box_length as f64)
    }

    pub fn position(&self, j: usize) -> f64 {
        -0.5 * self.box_length as f64 + j as f64 * self.dx()
    }

    pub fn frequency(&self, k: usize) -> f64 {
        signed_index(k, self.points) as f64 * self.dxi()
    }

    /// FFT slot of lattice frequency `q/L`.
    pub fn slot_of_lattice(&self, q: i64) -> Option<usize> {
        slot_of(q, self.points)
    }

    /// FFT slot holding integer frequency `n`.
    pub fn slot_of_integer(&self, n: i64) -> Option<usize> {
        self.slot_of_lattice(n * self.box_length as i64)
    }

    fn check_same(&self, other: &LineGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Fourier coefficients `w_n`, `|n| ≤ M`, of a 1-periodic function.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    grid: TorusGrid,
    coeffs: Vec<C64>,
}

impl PeriodicField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            coeffs: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Coefficients ordered `n = -M, …, M`.
    pub fn new(grid: TorusGrid, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidGrid("non-finite Fourier coefficient".into()));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn from_modes(grid: TorusGrid, modes: &[(i64, C64)]) -> Result<Self> {
        let mut field = Self::zeros(grid);
        for &(n, c) in modes {
            field.set_mode(n, c)?;
        }
        Ok(field)
    }

    /// Projects samples `w(j/P)` onto modes `|n| ≤ M`.
    pub fn from_samples(grid: TorusGrid, samples: &[C64]) -> Result<Self> {
        if samples.len() != grid.samples() {
            return Err(Error::SizeMismatch {
                expected: grid.samples(),
                actual: samples.len(),
            });
        }
        let mut buf = samples.to_vec();
        dft_in_place(&mut buf);
        let scale = 1.0 / grid.samples() as f64;
        let m = grid.modes() as i64;
        let coeffs = (-m..=m)
            .map(|n| buf[n.rem_euclid(grid.samples() as i64) as usize] * scale)
            .collect();
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn iter_modes(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let m = self.grid.modes() as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - m, c))
    }

    /// Coefficient `w_n`; zero outside the stored range.
    pub fn mode(&self, n: i64) -> C64 {
        let m = self.grid.modes() as i64;
        if n.abs() > m {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + m) as usize]
        }
    }

    pub fn set_mode(&mut self, n: i64, value: C64) -> Result<()> {
        let m = self.grid.modes() as i64;
        if n.abs() > m {
            return Err(Error::IndexOutOfRange { index: n, limit: m });
        }
        self.coeffs[(n + m) as usize] = value;
        Ok(())
    }

    /// Coefficients laid out in FFT order on the torus sample grid.
    pub fn to_fft_order(&self) -> Vec<C64> {
        let p = self.grid.samples();
        let mut buf = vec![C64::new(0.0, 0.0); p];
        for (n, c) in self.iter_modes() {
            buf[n.rem_euclid(p as i64) as usize] = c;
        }
        buf
    }

    /// Samples `w(j/P)`, `j = 0..P`.
    pub fn to_samples(&self) -> Vec<C64> {
        let mut buf = self.to_fft_order();
        idft_in_place(&mut buf);
        buf
    }

    /// Direct evaluation of `Σ w_n e^{2πins}`.
    pub fn evaluate(&self, s: f64) -> C64 {
        self.iter_modes()
            .map(|(n, c)| c * C64::from_polar(1.0, 2.0 * PI * n as f64 * s))
            .sum()
    }

    /// `‖w‖_{L²(T)} = (Σ|w_n|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|&c| c * factor).collect(),
        }
    }
}

/// Field on the periodic box in physical space.
#[derive(Debug, Clone, PartialEq)]
pub struct LineField {
    grid: LineGrid,
    values: Vec<C64>,
}

impl LineField {
    pub fn new(grid: LineGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::SizeMismatch {
                expected: grid.points(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: LineGrid) -> Self {
        Self {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.points()],
        }
    }

    /// Samples `f(s_j)` at the box positions.
    pub fn from_fn(grid: LineGrid, mut f: impl FnMut(f64) -> C64) -> Self {
        let values = (0..grid.points()).map(|j| f(grid.position(j))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> LineGrid {
        self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Discrete `L²` norm `(Δs Σ|f_j|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.dx() * self.values.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Discrete `L^p` norm with grid weight; `p = ∞` gives the max modulus.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(&self.values, self.grid.dx(), p)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &LineField) -> Result<LineField> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &LineField) -> Result<LineField> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, factor: C64) -> LineField {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&c| c * factor).collect(),
        }
    }
}

pub(crate) fn lp_norm(values: &[C64], weight: f64, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    if p.is_infinite() {
        return Ok(values.iter().map(|c| c.norm()).fold(0.0, f64::max));
    }
    let sum: f64 = values.iter().map(|c| c.norm().powf(p)).sum();
    Ok((weight * sum).powf(1.0 / p))
}

/// Samples of `f̂(ξ_k)` on the spectral lattice, FFT ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSpectrum {
    grid: LineGrid,
    coeffs: Vec<C64>,
}

impl LineSpectrum {
    pub fn new(grid: LineGrid, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != grid.points() {
            return Err(Error::SizeMismatch {
                expected: grid.points(),
                actual: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: LineGrid) -> Self {
        Self {
            grid,
            coeffs: vec![C64::new(0.0, 0.0); grid.points()],
        }
    }

    pub fn from_fn(grid: LineGrid, mut f: impl FnMut(f64) -> C64) -> Self {
        let coeffs = (0..grid.points()).map(|k| f(grid.frequency(k))).collect();
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> LineGrid {
        self.grid
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    /// Value at lattice frequency `q/L`; zero if outside the band.
    pub fn at_lattice(&self, q: i64) -> C64 {
        self.grid
            .slot_of_lattice(q)
            .map(|k| self.coeffs[k])
            .unwrap_or_default()
    }

    /// `(Δξ Σ|f̂_k|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.dxi() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Trapezoidal rule for `(∫ ⟨ξ⟩^{2s} |f̂|² dξ)^{1/2}` on the periodic lattice.
    pub fn sobolev_norm(&self, s: SobolevIndex) -> f64 {
        let dxi = self.grid.dxi();
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let xi = self.grid.frequency(k);
                (1.0 + xi * xi).powf(s.value()) * c.norm_sqr()
            })
            .sum();
        (dxi * sum).sqrt()
    }
}

/// `f̂_k = Δs Σ_j f_j e^{-2πi ξ_k s_j}`.
pub fn transform_forward(f: &LineField) -> LineSpectrum {
    let g = f.grid;
    let mut buf = f.values.clone();
    dft_in_place(&mut buf);
    let dx = g.dx();
    for (k, c) in buf.iter_mut().enumerate() {
        // s_0 = -L/2 contributes e^{iπq} = (-1)^q for lattice index q.
        let parity = if signed_index(k, g.points()).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        *c *= dx * parity;
    }
    LineSpectrum { grid: g, coeffs: buf }
}

/// `f_j = Δξ Σ_k f̂_k e^{2πi ξ_k s_j}`.
pub fn transform_inverse(f: &LineSpectrum) -> LineField {
    let g = f.grid;
    let dxi = g.dxi();
    let mut buf: Vec<C64> = f
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let parity = if signed_index(k, g.points()).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            c * (dxi * parity)
        })
        .collect();
    idft_in_place(&mut buf);
    LineField { grid: g, values: buf }
}

pub fn sobolev_norm_torus(w: &PeriodicField, s: SobolevIndex) -> f64 {
    w.iter_modes()
        .map(|(n, c)| (1.0 + (n * n) as f64).powf(s.value()) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn sobolev_norm_line(v: &LineField, s: SobolevIndex) -> f64 {
    transform_forward(v).sobolev_norm(s)
}

/// The free Schrödinger group `S(t) = e^{it∂²}`, symbol `e^{-itξ²}`.
pub trait FreeEvolution: Sized {
    fn free_evolve(&self, t: f64) -> Self;
}

#[inline]
pub(crate) fn free_phase(t: f64, xi: f64) -> C64 {
    C64::from_polar(1.0, -t * xi * xi)
}

impl FreeEvolution for LineSpectrum {
    fn free_evolve(&self, t: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * free_phase(t, self.grid.frequency(k)))
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }
}

impl FreeEvolution for LineField {
    fn free_evolve(&self, t: f64) -> Self {
        transform_inverse(&transform_forward(self).free_evolve(t))
    }
}

impl FreeEvolution for PeriodicField {
    fn free_evolve(&self, t: f64) -> Self {
        let coeffs = self
            .iter_modes()
            .map(|(n, c)| c * free_phase(t, n as f64))
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }
}

/// Places `ŵ = Σ w_n δ_n` on the line lattice; the physical samples are the
/// periodic function tiled `L` times over the box.
pub fn embed_periodic_on_line(w: &PeriodicField, g: &LineGrid) -> Result<LineField> {
    let mut spec = LineSpectrum::zeros(*g);
    let mass = 1.0 / g.dxi();
    for (n, c) in w.iter_modes() {
        if c == C64::new(0.0, 0.0) {
            continue;
        }
        let k = g.slot_of_integer(n).ok_or_else(|| {
            Error::GridMismatch(format!(
                "mode {n} exceeds the line Nyquist frequency {}",
                g.nyquist()
            ))
        })?;
        spec.coeffs[k] += c * mass;
    }
    Ok(transform_inverse(&spec))
}

/// Tiles torus samples across the box when `P_line = L · P_torus`.
pub fn tile_torus_samples(samples: &[C64], g: &LineGrid) -> Result<Vec<C64>> {
    let pt = samples.len();
    if pt == 0 || g.points() != g.box_length() as usize * pt {
        return Err(Error::GridMismatch(format!(
            "line grid with {} points is not {} tiles of {pt} torus samples",
            g.points(),
            g.box_length()
        )));
    }
    // s_0 = -L/2 sits at torus sample index (-L·P_T/2) mod P_T.
    let offset = (-(g.box_length() as i64) * pt as i64 / 2).rem_euclid(pt as i64) as usize;
    Ok((0..g.points()).map(|j| samples[(j + offset) % pt]).collect())
}

/// Random field whose spectrum is i.i.d. complex Gaussian on lattice points
/// with `|ξ| ≤ band` and zero elsewhere.
pub fn random_band_limited<R: rand::Rng + ?Sized>(grid: LineGrid, band: f64, rng: &mut R) -> LineField {
    use rand_distr::{Distribution, StandardNormal};
    let spec = LineSpectrum::from_fn(grid, |xi| {
        if xi.abs() <= band {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    transform_inverse(&spec)
}

/// Random torus field with i.i.d. complex Gaussian modes damped by `⟨n⟩^{-decay}`.
pub fn random_periodic<R: rand::Rng + ?Sized>(grid: TorusGrid, decay: f64, rng: &mut R) -> PeriodicField {
    use rand_distr::{Distribution, StandardNormal};
    let m = grid.modes() as i64;
    let coeffs = (-m..=m)
        .map(|n| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im) * bracket(n as f64).powf(-decay)
        })
        .collect();
    PeriodicField { grid, coeffs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: LineGrid, seed: u64) -> LineField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.points())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        LineField::new(grid, values).unwrap()
    }

    fn rel_diff(a: &[C64], b: &[C64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn constant_field_concentrates_at_zero_frequency() {
        let g = LineGrid::new(8, 256).unwrap();
        let f = LineField::from_fn(g, |_| C64::new(1.0, 0.0));
        let spec = transform_forward(&f);
        assert!((spec.coeffs()[0] - C64::new(8.0, 0.0)).norm() < 1e-10);
        let off: f64 = spec.coeffs()[1..].iter().map(|c| c.norm()).sum();
        assert!(off < 1e-10);
    }

    #[test]
    fn inversion_and_parseval() {
        let g = LineGrid::new(16, 1024).unwrap();
        let f = random_field(g, 7);
        let spec = transform_forward(&f);
        let back = transform_inverse(&spec);
        assert!(rel_diff(back.values(), f.values()) < 1e-12);
        assert!((spec.l2_norm() - f.l2_norm()).abs() / f.l2_norm() < 1e-12);
    }

    #[test]
    fn gaussian_spectrum_matches_closed_form() {
        let g = LineGrid::new(16, 1024).unwrap();
        let f = LineField::from_fn(g, |s| C64::new((-PI * s * s).exp(), 0.0));
        let spec = transform_forward(&f);
        for k in [0usize, 5, 17, 1000] {
            let xi = g.frequency(k);
            assert!((spec.coeffs()[k] - C64::new((-PI * xi * xi).exp(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn torus_sobolev_examples() {
        let grid = TorusGrid::new(4);
        let w0 = PeriodicField::from_modes(grid, &[(0, C64::new(1.0, 0.0))]).unwrap();
        for s in [0.0, 0.5, 3.0] {
            let s = SobolevIndex::new(s).unwrap();
            assert!((sobolev_norm_torus(&w0, s) - 1.0).abs() < 1e-15);
        }
        let w1 = PeriodicField::from_modes(grid, &[(1, C64::new(1.0, 0.0))]).unwrap();
        let s1 = SobolevIndex::new(1.0).unwrap();
        assert!((sobolev_norm_torus(&w1, s1) - 2f64.sqrt()).abs() < 1e-15);
        let w = PeriodicField::from_modes(
            grid,
            &[(1, C64::new(0.3, -0.2)), (-3, C64::new(1.0, 2.0))],
        )
        .unwrap();
        assert!((sobolev_norm_torus(&w, SobolevIndex::ZERO) - w.l2_norm()).abs() < 1e-15);
    }

    #[test]
    fn line_sobolev_zero_and_parseval() {
        let g = LineGrid::new(8, 512).unwrap();
        assert_eq!(sobolev_norm_line(&LineField::zeros(g), SobolevIndex::ZERO), 0.0);
        let f = random_field(g, 3);
        let n0 = sobolev_norm_line(&f, SobolevIndex::ZERO);
        assert!((n0 - f.l2_norm()).abs() / n0 < 1e-12);
    }

    #[test]
    fn gaussian_norm_stabilizes_as_box_grows() {
        let s = SobolevIndex::new(1.0).unwrap();
        let mut prev: Option<f64> = None;
        for l in [4u32, 8, 16, 32, 64] {
            let g = LineGrid::new(l, 64 * l as usize).unwrap();
            let f = LineField::from_fn(g, |x| C64::new((-PI * x * x).exp(), 0.0));
            let value = sobolev_norm_line(&f, s);
            if let Some(p) = prev {
                if l >= 32 {
                    assert!((value - p).abs() < 1e-8, "L={l}: {value} vs {p}");
                }
            }
            prev = Some(value);
        }
    }

    #[test]
    fn free_evolution_is_unitary_group() {
        let g = LineGrid::new(16, 1024).unwrap();
        let f = random_field(g, 11);
        let same = f.free_evolve(0.0);
        assert!(rel_diff(same.values(), f.values()) < 1e-12);
        let ft = f.free_evolve(0.37);
        assert!((ft.l2_norm() - f.l2_norm()).abs() / f.l2_norm() < 1e-12);
        let back = ft.free_evolve(-0.37);
        assert!(rel_diff(back.values(), f.values()) < 1e-12);
    }

    #[test]
    fn periodic_free_evolution_phases() {
        let grid = TorusGrid::new(3);
        let w = PeriodicField::from_modes(grid, &[(2, C64::new(1.0, 0.0))]).unwrap();
        let wt = w.free_evolve(0.5);
        assert!((wt.mode(2) - C64::from_polar(1.0, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn embedding_examples() {
        let g = LineGrid::new(4, 256).unwrap();
        let grid = TorusGrid::new(3);
        let one = PeriodicField::from_modes(grid, &[(0, C64::new(1.0, 0.0))]).unwrap();
        let e = embed_periodic_on_line(&one, &g).unwrap();
        assert!(e.values().iter().all(|c| (c - C64::new(1.0, 0.0)).norm() < 1e-12));

        let tone = PeriodicField::from_modes(grid, &[(1, C64::new(1.0, 0.0))]).unwrap();
        let e = embed_periodic_on_line(&tone, &g).unwrap();
        for j in (0..g.points()).step_by(7) {
            let s = g.position(j);
            assert!((e.values()[j] - C64::from_polar(1.0, 2.0 * PI * s)).norm() < 1e-12);
        }

        let w = PeriodicField::from_modes(
            grid,
            &[(0, C64::new(0.5, 0.1)), (-2, C64::new(0.0, 1.0)), (3, C64::new(-0.3, 0.2))],
        )
        .unwrap();
        let e = embed_periodic_on_line(&w, &g).unwrap();
        let expected = (g.box_length() as f64).sqrt() * w.l2_norm();
        assert!((e.l2_norm() - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn embedding_matches_tiling() {
        let grid = TorusGrid::new(5);
        let w = PeriodicField::from_modes(
            grid,
            &[(1, C64::new(0.2, 0.1)), (-4, C64::new(1.0, -0.5)), (5, C64::new(0.1, 0.0))],
        )
        .unwrap();
        for l in [1u32, 2, 8] {
            let g = LineGrid::new(l, l as usize * grid.samples()).unwrap();
            let tiled = tile_torus_samples(&w.to_samples(), &g).unwrap();
            let embedded = embed_periodic_on_line(&w, &g).unwrap();
            assert!(rel_diff(&tiled, embedded.values()) < 1e-12);
        }
    }

    #[test]
    fn embedding_rejects_unrepresentable_modes() {
        let g = LineGrid::new(4, 16).unwrap();
        let grid = TorusGrid::new(3);
        let w = PeriodicField::from_modes(grid, &[(3, C64::new(1.0, 0.0))]).unwrap();
        assert!(matches!(embed_periodic_on_line(&w, &g), Err(Error::GridMismatch(_))));
        assert!(matches!(LineGrid::from_length(2.5, 64), Err(Error::NonIntegerBoxLength(_))));
    }

    #[test]
    fn torus_samples_round_trip() {
        let grid = TorusGrid::new(6);
        let w = PeriodicField::from_modes(
            grid,
            &[(6, C64::new(1.0, 0.0)), (-6, C64::new(0.0, 1.0)), (0, C64::new(2.0, 0.0))],
        )
        .unwrap();
        let back = PeriodicField::from_samples(grid, &w.to_samples()).unwrap();
        assert!(rel_diff(back.coeffs(), w.coeffs()) < 1e-14);
        let s = 0.123;
        let direct = w.evaluate(s);
        assert!((direct - (C64::new(1.0, 0.0) * C64::from_polar(1.0, 12.0 * PI * s)
            + C64::new(0.0, 1.0) * C64::from_polar(1.0, -12.0 * PI * s)
            + C64::new(2.0, 0.0)))
        .norm()
            < 1e-12);
    }
}
