//! Coupled time integration of `i u_t - u_xx + σ|u|²u = 0` for hybrid data
//! `u = v + w`: the periodic part `w` solves the same equation on the torus
//! and the localized part `v` solves
//!
//! ```text
//! i v_t - v_xx + σ G(w, v) = 0,   G(w, v) = |w + v|²(w + v) - |w|²w,
//! ```
//!
//! on a periodic box. `σ = +1` is defocusing, `σ = -1` focusing. Over a time
//! `τ` the linear flow multiplies spectra by `e^{iτξ²}`, i.e. it is
//! [`FreeEvolution::free_evolve`] at time `-τ`.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    dft_in_place, embed_periodic_on_line, idft_in_place, signed_index, sobolev_norm_line, tile_torus_samples,
    LineField, LineGrid, PeriodicField, SobolevIndex, TorusGrid, C64,
};
#[cfg(doc)]
use crate::spectral::FreeEvolution;

/// Fields whose modulus exceeds this are reported as blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearSign {
    Defocusing,
    Focusing,
}

impl NonlinearSign {
    /// `σ`: `+1` defocusing, `-1` focusing.
    pub fn value(self) -> f64 {
        match self {
            Self::Defocusing => 1.0,
            Self::Focusing => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    StrangSplitstep,
    Rk4IntegratingFactor,
}

fn default_record_every() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    /// Signed final time; negative values integrate backwards.
    pub t_final: f64,
    pub sign: NonlinearSign,
    pub torus_modes: usize,
    pub torus_samples: usize,
    pub box_length: f64,
    pub points: usize,
    pub dealias: f64,
    pub scheme: Scheme,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 1.0,
            sign: NonlinearSign::Defocusing,
            torus_modes: 32,
            torus_samples: 128,
            box_length: 32.0,
            points: 4096,
            dealias: 2.0 / 3.0,
            scheme: Scheme::StrangSplitstep,
            record_every: 100,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.t_final.is_finite() {
            return Err(Error::InvalidConfig("t_final must be finite".into()));
        }
        if !(self.dealias > 0.0 && self.dealias <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "dealias fraction must lie in (0, 1], got {}",
                self.dealias
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be >= 1".into()));
        }
        let line = self.line_grid()?;
        let torus = self.torus_grid()?;
        if !torus.samples().is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "torus_samples must be a power of two, got {}",
                torus.samples()
            )));
        }
        if line.points() != line.box_length() as usize * torus.samples() {
            return Err(Error::InvalidConfig(format!(
                "points ({}) must equal box_length × torus_samples ({})",
                line.points(),
                line.box_length() as usize * torus.samples()
            )));
        }
        Ok(())
    }

    pub fn line_grid(&self) -> Result<LineGrid> {
        LineGrid::from_length(self.box_length, self.points)
    }

    pub fn torus_grid(&self) -> Result<TorusGrid> {
        TorusGrid::with_samples(self.torus_modes, self.torus_samples)
    }

    /// Largest retained frequency, shared by both grids.
    pub fn cutoff(&self) -> f64 {
        (self.torus_modes as f64).min(self.dealias * self.torus_samples as f64 / 2.0)
    }

    pub fn steps(&self) -> usize {
        (self.t_final.abs() / self.dt).round() as usize
    }

    fn signed_dt(&self) -> f64 {
        if self.t_final < 0.0 {
            -self.dt
        } else {
            self.dt
        }
    }
}

/// `G(w, v) = |v|²v + v²w̄ + w²v̄ + 2w|v|² + 2v|w|²` at a point.
#[inline]
pub fn g_pointwise(w: C64, v: C64) -> C64 {
    let v2 = v.norm_sqr();
    let w2 = w.norm_sqr();
    v * v2 + v * v * w.conj() + w * w * v.conj() + w * (2.0 * v2) + v * (2.0 * w2)
}

pub fn g_nonlinearity(w_line: &LineField, v: &LineField) -> Result<LineField> {
    if w_line.grid() != v.grid() {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", w_line.grid(), v.grid())));
    }
    let values = w_line
        .values()
        .iter()
        .zip(v.values())
        .map(|(&w, &v)| g_pointwise(w, v))
        .collect();
    LineField::new(v.grid(), values)
}

/// Spectral multiplier `mask(ξ) e^{iτξ²}` on an FFT grid, cached per `τ`.
struct LinearFlow {
    freq2: Vec<f64>,
    keep: Vec<bool>,
    cache: RefCell<HashMap<u64, Vec<C64>>>,
}

impl LinearFlow {
    fn new(len: usize, spacing: f64, cutoff: f64) -> Self {
        let freqs: Vec<f64> = (0..len).map(|k| signed_index(k, len) as f64 * spacing).collect();
        Self {
            keep: freqs.iter().map(|f| f.abs() <= cutoff + 1e-9).collect(),
            freq2: freqs.iter().map(|f| f * f).collect(),
            cache: RefCell::new(HashMap::new()),
        }
    }

    fn apply(&self, buf: &mut [C64], tau: f64) {
        let mut cache = self.cache.borrow_mut();
        let table = cache.entry(tau.to_bits()).or_insert_with(|| {
            let scale = 1.0 / self.freq2.len() as f64;
            self.freq2
                .iter()
                .zip(&self.keep)
                .map(|(&f2, &keep)| {
                    if keep {
                        C64::from_polar(scale, tau * f2)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect()
        });
        dft_in_place(buf);
        for (c, m) in buf.iter_mut().zip(table.iter()) {
            *c *= m;
        }
        idft_in_place(buf);
    }
}

fn check_finite(values: &[C64], t: f64) -> Result<()> {
    for c in values {
        if !(c.re.is_finite() && c.im.is_finite()) || c.norm() > BLOWUP_THRESHOLD {
            return Err(Error::Blowup { t });
        }
    }
    Ok(())
}

/// Time-stepping kernels shared by the hybrid and direct solvers.
pub struct Integrator {
    cfg: SolverConfig,
    torus: TorusGrid,
    line: LineGrid,
    torus_flow: LinearFlow,
    line_flow: LinearFlow,
    sigma: f64,
}

impl Integrator {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let torus = cfg.torus_grid()?;
        let line = cfg.line_grid()?;
        let cutoff = cfg.cutoff();
        Ok(Self {
            torus_flow: LinearFlow::new(torus.samples(), 1.0, cutoff),
            line_flow: LinearFlow::new(line.points(), line.dxi(), cutoff),
            cfg: cfg.clone(),
            torus,
            line,
            sigma: cfg.sign.value(),
        })
    }

    pub fn torus_grid(&self) -> TorusGrid {
        self.torus
    }

    pub fn line_grid(&self) -> LineGrid {
        self.line
    }

    fn rotate(&self, u: &mut [C64], h: f64) {
        for c in u.iter_mut() {
            *c *= C64::from_polar(1.0, self.sigma * c.norm_sqr() * h);
        }
    }

    fn cubic(&self, u: &[C64]) -> Vec<C64> {
        let i_sigma = C64::new(0.0, self.sigma);
        u.iter().map(|c| i_sigma * c * c.norm_sqr()).collect()
    }

    /// Lawson RK4 for `u' = iξ²u + N(τ, u)` with masked linear flow.
    fn lawson(&self, flow: &LinearFlow, u: &[C64], h: f64, n: impl Fn(usize, &[C64]) -> Vec<C64>) -> Vec<C64> {
        let axpy = |a: &[C64], s: f64, b: &[C64]| -> Vec<C64> { a.iter().zip(b).map(|(x, y)| x + y * s).collect() };
        let k1 = n(0, u);
        let mut u2 = axpy(u, 0.5 * h, &k1);
        flow.apply(&mut u2, 0.5 * h);
        let k2 = n(1, &u2);
        let mut eu_half = u.to_vec();
        flow.apply(&mut eu_half, 0.5 * h);
        let u3 = axpy(&eu_half, 0.5 * h, &k2);
        let k3 = n(1, &u3);
        let mut ek3 = k3.clone();
        flow.apply(&mut ek3, 0.5 * h);
        let mut eu = u.to_vec();
        flow.apply(&mut eu, h);
        let u4 = axpy(&eu, h, &ek3);
        let k4 = n(2, &u4);
        let mut ek1 = k1;
        flow.apply(&mut ek1, h);
        let mut mid: Vec<C64> = k2.iter().zip(&k3).map(|(a, b)| a + b).collect();
        flow.apply(&mut mid, 0.5 * h);
        eu.iter()
            .enumerate()
            .map(|(i, &base)| base + (ek1[i] + mid[i] * 2.0 + k4[i]) * (h / 6.0))
            .collect()
    }

    /// One step of the periodic equation on torus samples.
    pub fn step_torus_samples(&self, w: &mut Vec<C64>, h: f64) {
        match self.cfg.scheme {
            Scheme::StrangSplitstep => {
                self.torus_flow.apply(w, 0.5 * h);
                self.rotate(w, h);
                self.torus_flow.apply(w, 0.5 * h);
            }
            Scheme::Rk4IntegratingFactor => {
                *w = self.lawson(&self.torus_flow, w, h, |_, u| self.cubic(u));
            }
        }
    }

    /// One step of the full equation on line samples.
    pub fn step_line_full(&self, u: &mut Vec<C64>, h: f64) {
        match self.cfg.scheme {
            Scheme::StrangSplitstep => {
                self.line_flow.apply(u, 0.5 * h);
                self.rotate(u, h);
                self.line_flow.apply(u, 0.5 * h);
            }
            Scheme::Rk4IntegratingFactor => {
                *u = self.lawson(&self.line_flow, u, h, |_, x| self.cubic(x));
            }
        }
    }

    /// One step of the `v` equation given `w` snapshots on the torus.
    pub fn step_line_samples(&self, v: &mut Vec<C64>, w: &WSubsteps, h: f64) -> Result<()> {
        let i_sigma = C64::new(0.0, self.sigma);
        match self.cfg.scheme {
            Scheme::StrangSplitstep => {
                // The w half-step in the Strang scheme ends at w*, and over the
                // nonlinear substep w(τ) = w* e^{iσ|w*|²τ} exactly.
                let mut w_star = w.start.clone();
                self.torus_flow.apply(&mut w_star, 0.5 * h);
                let ws = tile_torus_samples(&w_star, &self.line)?;
                self.line_flow.apply(v, 0.5 * h);
                for (vj, &wj) in v.iter_mut().zip(&ws) {
                    let omega = self.sigma * wj.norm_sqr();
                    let w_at = |tau: f64| wj * C64::from_polar(1.0, omega * tau);
                    let f = |tau: f64, x: C64| i_sigma * g_pointwise(w_at(tau), x);
                    let k1 = f(0.0, *vj);
                    let k2 = f(0.5 * h, *vj + k1 * (0.5 * h));
                    let k3 = f(0.5 * h, *vj + k2 * (0.5 * h));
                    let k4 = f(h, *vj + k3 * h);
                    *vj += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
                }
                self.line_flow.apply(v, 0.5 * h);
            }
            Scheme::Rk4IntegratingFactor => {
                let mid = w.mid.as_ref().ok_or_else(|| {
                    Error::InvalidConfig("integrating-factor step needs the midpoint w".into())
                })?;
                let end = w.end.as_ref().ok_or_else(|| {
                    Error::InvalidConfig("integrating-factor step needs the endpoint w".into())
                })?;
                let snaps = [
                    tile_torus_samples(&w.start, &self.line)?,
                    tile_torus_samples(mid, &self.line)?,
                    tile_torus_samples(end, &self.line)?,
                ];
                *v = self.lawson(&self.line_flow, v, h, |stage, x| {
                    x.iter()
                        .zip(&snaps[stage])
                        .map(|(&xv, &wv)| i_sigma * g_pointwise(wv, xv))
                        .collect()
                });
            }
        }
        Ok(())
    }

    fn to_torus_samples(&self, w: &PeriodicField) -> Result<Vec<C64>> {
        if w.grid().modes() != self.torus.modes() {
            return Err(Error::GridMismatch(format!(
                "field has {} modes, solver expects {}",
                w.grid().modes(),
                self.torus.modes()
            )));
        }
        let retagged = PeriodicField::new(self.torus, w.coeffs().to_vec())?;
        Ok(retagged.to_samples())
    }

    fn field_from_torus_samples(&self, samples: &[C64]) -> Result<PeriodicField> {
        PeriodicField::from_samples(self.torus, samples)
    }

    fn check_line(&self, v: &LineField) -> Result<()> {
        if v.grid() != self.line {
            return Err(Error::GridMismatch(format!("{:?} vs solver grid {:?}", v.grid(), self.line)));
        }
        Ok(())
    }
}

/// `w` at the times a `v` step needs: always the start, plus the midpoint and
/// end for the integrating-factor scheme. Samples live on the torus grid.
#[derive(Debug, Clone)]
pub struct WSubsteps {
    pub start: Vec<C64>,
    pub mid: Option<Vec<C64>>,
    pub end: Option<Vec<C64>>,
}

impl WSubsteps {
    fn for_step(int: &Integrator, w: &[C64], h: f64) -> Self {
        match int.cfg.scheme {
            Scheme::StrangSplitstep => Self {
                start: w.to_vec(),
                mid: None,
                end: None,
            },
            Scheme::Rk4IntegratingFactor => {
                let mut mid = w.to_vec();
                int.step_torus_samples(&mut mid, 0.5 * h);
                let mut end = w.to_vec();
                int.step_torus_samples(&mut end, h);
                Self {
                    start: w.to_vec(),
                    mid: Some(mid),
                    end: Some(end),
                }
            }
        }
    }

    /// Snapshots derived from `w(t)` as the configured scheme requires.
    pub fn from_field(w: &PeriodicField, dt: f64, cfg: &SolverConfig) -> Result<Self> {
        let int = Integrator::new(cfg)?;
        Ok(Self::for_step(&int, &int.to_torus_samples(w)?, dt))
    }
}

/// Advances the periodic equation by one step of size `dt`.
pub fn step_periodic(w: &PeriodicField, dt: f64, cfg: &SolverConfig) -> Result<PeriodicField> {
    let int = Integrator::new(cfg)?;
    let mut s = int.to_torus_samples(w)?;
    int.step_torus_samples(&mut s, dt);
    check_finite(&s, dt)?;
    int.field_from_torus_samples(&s)
}

/// Advances the `v` equation by one step of size `dt` against the supplied `w` snapshots.
pub fn step_line(v: &LineField, w: &WSubsteps, dt: f64, cfg: &SolverConfig) -> Result<LineField> {
    let int = Integrator::new(cfg)?;
    int.check_line(v)?;
    let mut s = v.values().to_vec();
    int.step_line_samples(&mut s, w, dt)?;
    check_finite(&s, dt)?;
    LineField::new(int.line, s)
}

/// `u = v + w` with a shared clock.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    pub w: PeriodicField,
    pub v: LineField,
    pub t: f64,
}

impl HybridState {
    pub fn new(w: PeriodicField, v: LineField, t: f64) -> Result<Self> {
        if w.grid().modes() as f64 >= v.grid().nyquist() {
            return Err(Error::GridMismatch(format!(
                "torus modes up to {} do not fit below the line Nyquist frequency {}",
                w.grid().modes(),
                v.grid().nyquist()
            )));
        }
        Ok(Self { w, v, t })
    }

    /// `v + w` on the line grid.
    pub fn total(&self) -> Result<LineField> {
        self.v.add(&embed_periodic_on_line(&self.w, &self.v.grid())?)
    }
}

/// Periodic tooth shape placed once per unit period, centred at `s = 1/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ToothProfile {
    Gaussian { amplitude: f64, width: f64 },
    Sech { amplitude: f64, width: f64 },
    PlaneWave { amplitude: f64, mode: i64 },
}

impl ToothProfile {
    fn eval(&self, s: f64) -> C64 {
        let d = s.rem_euclid(1.0) - 0.5;
        match *self {
            Self::Gaussian { amplitude, width } => {
                let total: f64 = (-2..=2)
                    .map(|k| (-(d + k as f64).powi(2) / (2.0 * width * width)).exp())
                    .sum();
                C64::new(amplitude * total, 0.0)
            }
            Self::Sech { amplitude, width } => {
                let total: f64 = (-2..=2).map(|k| 1.0 / ((d + k as f64) / width).cosh()).sum();
                C64::new(amplitude * total, 0.0)
            }
            Self::PlaneWave { amplitude, mode } => {
                C64::from_polar(amplitude, std::f64::consts::TAU * mode as f64 * s)
            }
        }
    }

    /// Projection onto the modes of `grid`.
    pub fn to_field(&self, grid: TorusGrid) -> Result<PeriodicField> {
        let samples: Vec<C64> = (0..grid.samples()).map(|j| self.eval(grid.position(j))).collect();
        PeriodicField::from_samples(grid, &samples)
    }
}

fn default_smoothing() -> f64 {
    0.05
}

fn default_sobolev() -> f64 {
    1.0
}

/// Knockout experiment: which unit slots `[j, j+1)` of the periodic signal
/// are cancelled by `v₀`, and which slots to watch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub tooth: ToothProfile,
    #[serde(default)]
    pub knocked_slots: Vec<i64>,
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
    #[serde(default)]
    pub observe_slots: Vec<i64>,
    #[serde(default = "default_sobolev")]
    pub sobolev_s: f64,
}

impl ExperimentSpec {
    pub fn validate(&self, g: &LineGrid) -> Result<()> {
        if !(self.smoothing > 0.0 && self.smoothing < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "smoothing width must lie in (0, 1/2), got {}",
                self.smoothing
            )));
        }
        SobolevIndex::new(self.sobolev_s)?;
        let half = g.box_length() as i64 / 2;
        let lo = -(g.box_length() as f64) / 2.0;
        for &j in self.knocked_slots.iter().chain(&self.observe_slots) {
            if (j as f64) < lo || (j + 1) as f64 > lo + g.box_length() as f64 {
                return Err(Error::SupportViolation(format!(
                    "slot {j} lies outside the box [{}, {})",
                    -half,
                    g.box_length() as i64 - half
                )));
            }
        }
        Ok(())
    }

    /// Slots whose energy is recorded: the explicit list, or the knocked slots.
    pub fn watched_slots(&self) -> &[i64] {
        if self.observe_slots.is_empty() {
            &self.knocked_slots
        } else {
            &self.observe_slots
        }
    }
}

/// `C^∞` step: 0 for `x ≤ 0`, 1 for `x ≥ 1`.
fn smooth_step(x: f64) -> f64 {
    let f = |y: f64| if y <= 0.0 { 0.0 } else { (-1.0 / y).exp() };
    let (a, b) = (f(x), f(1.0 - x));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Smooth indicator of `[j, j+1]` equal to 1 on `[j+ε, j+1-ε]`.
pub fn slot_window(s: f64, j: i64, eps: f64) -> f64 {
    let x = s - j as f64;
    smooth_step(x / eps) * smooth_step((1.0 - x) / eps)
}

/// `v₀ = -w₀ · Σ_slots window`, cancelling the chosen teeth.
pub fn knock_out(w0: &PeriodicField, spec: &ExperimentSpec, g: &LineGrid) -> Result<LineField> {
    spec.validate(g)?;
    let w_line = embed_periodic_on_line(w0, g)?;
    let values = w_line
        .values()
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let s = g.position(i);
            let chi: f64 = spec
                .knocked_slots
                .iter()
                .map(|&j| slot_window(s, j, spec.smoothing))
                .sum();
            -w * chi
        })
        .collect();
    LineField::new(*g, values)
}

/// `∫_{j}^{j+1} |u|² ds` by the grid rule.
pub fn slot_energy(u: &LineField, j: i64) -> f64 {
    let g = u.grid();
    u.values()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let s = g.position(*i);
            s >= j as f64 - 1e-12 && s < (j + 1) as f64 - 1e-12
        })
        .map(|(_, c)| c.norm_sqr())
        .sum::<f64>()
        * g.dx()
}

/// Observables at one recorded time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub w_mass: f64,
    pub v_l2: f64,
    pub v_sobolev: f64,
    pub slot_energy: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub snapshots: Vec<HybridState>,
    pub slots: Vec<i64>,
    /// Time at which blowup was detected; `snapshots.last()` is then the last good state.
    pub blowup: Option<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &HybridState {
        self.snapshots.last().expect("trajectory records the initial state")
    }
}

fn observe(state: &HybridState, slots: &[i64], s: SobolevIndex) -> Result<Record> {
    let total = if slots.is_empty() { None } else { Some(state.total()?) };
    Ok(Record {
        t: state.t,
        w_mass: state.w.l2_norm(),
        v_l2: state.v.l2_norm(),
        v_sobolev: sobolev_norm_line(&state.v, s),
        slot_energy: slots
            .iter()
            .map(|&j| slot_energy(total.as_ref().expect("slots present"), j))
            .collect(),
    })
}

/// Interleaves the periodic and line steps from `state` to `state.t + cfg.t_final`.
///
/// `w` is advanced first each step; the `v` step consumes the `w` snapshots it
/// needs. Observables and snapshots are kept every `cfg.record_every` steps
/// and at the end; blowup stops the run and is reported in the trajectory.
pub fn co_evolve(state: &HybridState, cfg: &SolverConfig, spec: Option<&ExperimentSpec>) -> Result<Trajectory> {
    let int = Integrator::new(cfg)?;
    int.check_line(&state.v)?;
    let slots: Vec<i64> = spec.map(|s| s.watched_slots().to_vec()).unwrap_or_default();
    let sob = SobolevIndex::new(spec.map_or(1.0, |s| s.sobolev_s))?;
    if let Some(s) = spec {
        s.validate(&int.line)?;
    }
    let h = cfg.signed_dt();
    let steps = cfg.steps();
    let mut w = int.to_torus_samples(&state.w)?;
    let mut v = state.v.values().to_vec();
    let mut traj = Trajectory {
        records: vec![observe(state, &slots, sob)?],
        snapshots: vec![state.clone()],
        slots: slots.clone(),
        blowup: None,
    };
    for step in 1..=steps {
        let t = state.t + step as f64 * h;
        let subs = WSubsteps::for_step(&int, &w, h);
        int.step_torus_samples(&mut w, h);
        int.step_line_samples(&mut v, &subs, h)?;
        if check_finite(&w, t).and_then(|_| check_finite(&v, t)).is_err() {
            traj.blowup = Some(t);
            break;
        }
        if step % cfg.record_every == 0 || step == steps {
            let snap = HybridState {
                w: int.field_from_torus_samples(&w)?,
                v: LineField::new(int.line, v.clone())?,
                t,
            };
            traj.records.push(observe(&snap, &slots, sob)?);
            traj.snapshots.push(snap);
        }
    }
    Ok(traj)
}

/// Single-domain run of the full equation for `u` on the line box.
#[derive(Debug, Clone)]
pub struct DirectTrajectory {
    pub times: Vec<f64>,
    pub masses: Vec<f64>,
    pub final_u: LineField,
    pub blowup: Option<f64>,
}

pub fn direct_full_solve(u0: &LineField, cfg: &SolverConfig) -> Result<DirectTrajectory> {
    let int = Integrator::new(cfg)?;
    int.check_line(u0)?;
    let h = cfg.signed_dt();
    let steps = cfg.steps();
    let mut u = u0.values().to_vec();
    let mut out = DirectTrajectory {
        times: vec![0.0],
        masses: vec![u0.l2_norm()],
        final_u: u0.clone(),
        blowup: None,
    };
    for step in 1..=steps {
        let t = step as f64 * h;
        let before = u.clone();
        int.step_line_full(&mut u, h);
        if check_finite(&u, t).is_err() {
            out.blowup = Some(t);
            u = before;
            break;
        }
        if step % cfg.record_every == 0 || step == steps {
            let field = LineField::new(int.line, u.clone())?;
            out.times.push(t);
            out.masses.push(field.l2_norm());
        }
    }
    out.final_u = LineField::new(int.line, u)?;
    Ok(out)
}

/// Local existence horizon `T = R / (16 (‖v₀‖ + ‖w₀‖)³)` with `R = 2‖v₀‖`;
/// `+∞` when `v₀ = 0`.
pub fn existence_time_from_norms(v0_norm: f64, w0_norm: f64) -> f64 {
    if v0_norm <= 0.0 {
        return f64::INFINITY;
    }
    2.0 * v0_norm / (16.0 * (v0_norm + w0_norm).powi(3))
}

pub fn existence_time_estimate(v0: &LineField, w0: &PeriodicField, s1: SobolevIndex, s2: SobolevIndex) -> f64 {
    existence_time_from_norms(
        sobolev_norm_line(v0, s1),
        crate::spectral::sobolev_norm_torus(w0, s2),
    )
}

/// `sup_{t ≤ T} ‖v₁(t) - v₂(t)‖₂ / ‖v₁(0) - v₂(0)‖₂`, with `0/0` read as 0.
pub fn lipschitz_probe(v0a: &LineField, v0b: &LineField, w0: &PeriodicField, cfg: &SolverConfig) -> Result<f64> {
    let int = Integrator::new(cfg)?;
    int.check_line(v0a)?;
    int.check_line(v0b)?;
    let initial = v0a.sub(v0b)?.l2_norm();
    if initial == 0.0 {
        return Ok(0.0);
    }
    let h = cfg.signed_dt();
    let mut w = int.to_torus_samples(w0)?;
    let mut a = v0a.values().to_vec();
    let mut b = v0b.values().to_vec();
    let mut sup = 0.0f64;
    for step in 1..=cfg.steps() {
        let t = step as f64 * h;
        let subs = WSubsteps::for_step(&int, &w, h);
        int.step_torus_samples(&mut w, h);
        int.step_line_samples(&mut a, &subs, h)?;
        int.step_line_samples(&mut b, &subs, h)?;
        check_finite(&a, t)?;
        check_finite(&b, t)?;
        let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * int.line.dx();
        sup = sup.max(diff.sqrt());
    }
    Ok(sup / initial)
}

/// `E_slot(t)` over the recorded snapshots.
pub fn ghost_pulse_metric(traj: &Trajectory, slot: i64) -> Result<Vec<(f64, f64)>> {
    traj.snapshots
        .iter()
        .map(|s| Ok((s.t, slot_energy(&s.total()?, slot))))
        .collect()
}

/// Solver settings plus the knockout experiment they drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub solver: SolverConfig,
    pub experiment: ExperimentSpec,
}

impl SimulationConfig {
    /// Initial hybrid state: `w₀` from the tooth profile and `v₀` from the knockout.
    pub fn initial_state(&self) -> Result<HybridState> {
        self.solver.validate()?;
        let line = self.solver.line_grid()?;
        let w0 = self.experiment.tooth.to_field(self.solver.torus_grid()?)?;
        let v0 = knock_out(&w0, &self.experiment, &line)?;
        HybridState::new(w0, v0, 0.0)
    }
}
