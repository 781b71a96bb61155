//! First-generation trilinear operators acting on box pieces `v̂_n = σ_n v̂`
//! and torus tones `w_n`.
//!
//! Every operator here has the shape
//!
//! ```text
//! F(T_n)(ξ) = σ_n(ξ) ∬ m(ξ, ξ₁, ξ₃) f̂₁(ξ₁) conj(f̂₂(ξ₂)) f̂₃(ξ₃),   ξ₂ = ξ₁ + ξ₃ - ξ,
//! ```
//!
//! where a tone slot is the point mass `w_m δ_m` and a piece slot is a
//! function sampled on a uniform lattice of spacing `h = 1/lattice`. With
//! `P = (ξ - ξ₁)(ξ - ξ₃)` the symbols are `e^{-2itP}` (the `Q` family),
//! `1/P` (the `R` family) and `e^{-2itP}/(-2iP)` (the `Q̃` family).
//! Integrals are trapezoidal sums over the compact supports, which on a
//! lattice reduce to plain sums weighted by `h` per continuous integration.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::boxes::PartitionOfUnity;
use crate::error::{Error, Result};
use crate::resonance::approx;
use crate::spectral::{LineGrid, LineSpectrum, C64};

/// The five first-generation slot patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatorKind {
    I,
    II,
    III,
    IV,
    V,
}

/// Whether a slot carries a tone `w_m` or a line piece `v_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Tone,
    Piece,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 5] = [Self::I, Self::II, Self::III, Self::IV, Self::V];

    pub fn pattern(self) -> [SlotKind; 3] {
        use SlotKind::{Piece as P, Tone as T};
        match self {
            Self::I => [P, P, P],
            Self::II => [T, T, P],
            Self::III => [T, P, T],
            Self::IV => [P, P, T],
            Self::V => [P, T, P],
        }
    }

    /// How often the pattern occurs when `|w+v|²(w+v) - |w|²w` is expanded
    /// into ordered products `f₁ f̄₂ f₃`: `2v|w|²` and `2w|v|²` each count twice.
    pub fn multiplicity(self) -> f64 {
        match self {
            Self::II | Self::IV => 2.0,
            _ => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::I => "I",
            Self::II => "II",
            Self::III => "III",
            Self::IV => "IV",
            Self::V => "V",
        }
    }

    pub fn pieces(self) -> usize {
        self.pattern().iter().filter(|s| **s == SlotKind::Piece).count()
    }
}

impl std::str::FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown operator kind {s:?}")))
    }
}

/// Samples of a box piece on the open support `(n-1, n+1)`.
///
/// Entry `i` sits at `ξ = q/lattice` with `q = n·lattice - (lattice-1) + i`,
/// so there are `2·lattice - 1` samples and the support endpoints, where `σ_n`
/// vanishes, are left out.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxedLinePiece {
    n: i64,
    lattice: u32,
    values: Vec<C64>,
}

impl BoxedLinePiece {
    pub fn new(n: i64, lattice: u32, values: Vec<C64>) -> Result<Self> {
        if lattice == 0 {
            return Err(Error::InvalidGrid("lattice must be positive".into()));
        }
        let len = 2 * lattice as usize - 1;
        if values.len() != len {
            return Err(Error::SizeMismatch {
                expected: len,
                actual: values.len(),
            });
        }
        Ok(Self { n, lattice, values })
    }

    pub fn zeros(n: i64, lattice: u32) -> Self {
        Self {
            n,
            lattice,
            values: vec![C64::new(0.0, 0.0); 2 * lattice as usize - 1],
        }
    }

    pub fn from_fn(n: i64, lattice: u32, mut f: impl FnMut(f64) -> C64) -> Self {
        let mut piece = Self::zeros(n, lattice);
        for i in 0..piece.values.len() {
            let xi = piece.xi(i);
            piece.values[i] = f(xi);
        }
        piece
    }

    /// `σ_n v̂` read off a line spectrum whose lattice spacing is `1/L`.
    pub fn from_spectrum(spec: &LineSpectrum, n: i64, pou: &PartitionOfUnity) -> Self {
        let lattice = spec.grid().box_length();
        let profile = pou.lattice_profile(lattice);
        let mut piece = Self::zeros(n, lattice);
        for (i, w) in profile.iter().enumerate() {
            piece.values[i] = spec.at_lattice(piece.q_at(i)) * *w;
        }
        piece
    }

    /// `σ_n(ξ)` times i.i.d. complex Gaussians.
    pub fn random<R: Rng + ?Sized>(n: i64, lattice: u32, pou: &PartitionOfUnity, rng: &mut R) -> Self {
        Self::from_fn(n, lattice, |xi| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im) * pou.sigma(n, xi)
        })
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn lattice(&self) -> u32 {
        self.lattice
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn h(&self) -> f64 {
        1.0 / self.lattice as f64
    }

    fn q_lo(&self) -> i64 {
        self.n * self.lattice as i64 - (self.lattice as i64 - 1)
    }

    pub fn q_at(&self, i: usize) -> i64 {
        self.q_lo() + i as i64
    }

    pub fn xi(&self, i: usize) -> f64 {
        self.q_at(i) as f64 / self.lattice as f64
    }

    /// Value at lattice index `q`, zero outside the support.
    pub fn at_q(&self, q: i64) -> C64 {
        let i = q - self.q_lo();
        if i < 0 || i >= self.values.len() as i64 {
            C64::new(0.0, 0.0)
        } else {
            self.values[i as usize]
        }
    }

    /// `(h Σ|v̂|²)^{1/2}`, equal to the `L²` norm of the piece by Plancherel.
    pub fn l2_norm(&self) -> f64 {
        (self.h() * self.values.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|c| *c == C64::new(0.0, 0.0))
    }

    fn check_like(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.lattice != other.lattice {
            return Err(Error::GridMismatch(format!(
                "piece (n={}, lattice={}) vs (n={}, lattice={})",
                self.n, self.lattice, other.n, other.lattice
            )));
        }
        Ok(())
    }

    pub fn add_assign_scaled(&mut self, other: &Self, factor: C64) -> Result<()> {
        self.check_like(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b * factor;
        }
        Ok(())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            n: self.n,
            lattice: self.lattice,
            values: self.values.iter().map(|c| c * factor).collect(),
        }
    }

    /// Pointwise multiplication by `m(ξ)`.
    pub fn map_symbol(&self, m: impl Fn(f64) -> C64) -> Self {
        let mut out = self.clone();
        for i in 0..out.values.len() {
            out.values[i] *= m(self.xi(i));
        }
        out
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_like(other)?;
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((self.h() * sum).sqrt())
    }
}

/// Torus coefficient `w_n` used as a point mass at frequency `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneCoefficient {
    pub n: i64,
    pub value: C64,
}

impl ToneCoefficient {
    pub fn new(n: i64, value: C64) -> Self {
        Self { n, value }
    }
}

/// One argument of a trilinear operator.
#[derive(Debug, Clone, Copy)]
pub enum Slot<'a> {
    Tone(ToneCoefficient),
    Piece(&'a BoxedLinePiece),
}

impl Slot<'_> {
    pub fn index(&self) -> i64 {
        match self {
            Slot::Tone(t) => t.n,
            Slot::Piece(p) => p.n,
        }
    }

    pub fn kind(&self) -> SlotKind {
        match self {
            Slot::Tone(_) => SlotKind::Tone,
            Slot::Piece(_) => SlotKind::Piece,
        }
    }

    /// `|w_m|` for a tone, `‖v_m‖₂` for a piece.
    pub fn norm(&self) -> f64 {
        match self {
            Slot::Tone(t) => t.value.norm(),
            Slot::Piece(p) => p.l2_norm(),
        }
    }
}

/// Phase-space symbol of a first-generation operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Symbol {
    /// `e^{-2itP}`
    Oscillatory { t: f64 },
    /// `1/P`
    Divided,
    /// `e^{-2itP} / (-2iP)`
    Integrated { t: f64 },
}

impl Symbol {
    #[inline]
    fn eval(self, p: f64) -> Option<C64> {
        match self {
            Symbol::Oscillatory { t } => Some(C64::from_polar(1.0, -2.0 * t * p)),
            Symbol::Divided => (p != 0.0).then(|| C64::new(1.0 / p, 0.0)),
            Symbol::Integrated { t } => {
                (p != 0.0).then(|| C64::from_polar(1.0, -2.0 * t * p) / C64::new(0.0, -2.0 * p))
            }
        }
    }

    fn is_divided(self) -> bool {
        !matches!(self, Symbol::Oscillatory { .. })
    }
}

/// `|n - (n₁ - n₂ + n₃)|` may not exceed the number of continuous slots,
/// otherwise the supports cannot meet `supp σ_n`.
pub fn support_compatible(n: i64, idx: [i64; 3], pieces: usize) -> bool {
    (n - (idx[0] - idx[1] + idx[2])).unsigned_abs() as usize <= pieces
}

fn common_lattice(slots: &[Slot; 3]) -> Result<u32> {
    let mut lattice = None;
    for s in slots {
        if let Slot::Piece(p) = s {
            match lattice {
                None => lattice = Some(p.lattice),
                Some(l) if l != p.lattice => {
                    return Err(Error::GridMismatch(format!(
                        "pieces on lattices {l} and {}",
                        p.lattice
                    )))
                }
                _ => {}
            }
        }
    }
    lattice.ok_or_else(|| Error::InvalidConfig("operator needs at least one piece slot".into()))
}

fn validate(kind: OperatorKind, n: i64, slots: &[Slot; 3], symbol: Symbol) -> Result<u32> {
    for (j, (slot, expected)) in slots.iter().zip(kind.pattern()).enumerate() {
        if slot.kind() != expected {
            return Err(Error::InvalidConfig(format!(
                "kind {} expects a {:?} in slot {}",
                kind.label(),
                expected,
                j + 1
            )));
        }
    }
    let idx = [slots[0].index(), slots[1].index(), slots[2].index()];
    if !support_compatible(n, idx, kind.pieces()) {
        return Err(Error::ConstraintViolated(format!(
            "n={n} is out of reach of n1-n2+n3={} for kind {}",
            idx[0] - idx[1] + idx[2],
            kind.label()
        )));
    }
    if symbol.is_divided() && (approx(n, idx[0]) || approx(n, idx[2])) {
        return Err(Error::ResonantIndices(format!(
            "n={n}, n1={}, n3={}: divided operators need n1, n3 not adjacent to n",
            idx[0], idx[2]
        )));
    }
    common_lattice(slots)
}

struct Sparse {
    q: Vec<i64>,
    v: Vec<C64>,
}

fn sparse(slot: &Slot, lattice: u32, conjugate: bool) -> Sparse {
    let fix = |c: C64| if conjugate { c.conj() } else { c };
    match slot {
        Slot::Tone(t) => Sparse {
            q: vec![t.n * lattice as i64],
            v: vec![fix(t.value)],
        },
        Slot::Piece(p) => {
            let mut out = Sparse { q: Vec::new(), v: Vec::new() };
            for (i, c) in p.values.iter().enumerate() {
                if *c != C64::new(0.0, 0.0) {
                    out.q.push(p.q_at(i));
                    out.v.push(fix(*c));
                }
            }
            out
        }
    }
}

/// Evaluates `σ_n(ξ) ∬ m f̂₁ conj(f̂₂) f̂₃` on the lattice points of `supp σ_n`.
///
/// The densest piece is solved from the constraint; the remaining slots are
/// iterated over their nonzero samples.
fn trilinear(
    n: i64,
    slots: &[Slot; 3],
    lattice: u32,
    symbol: Symbol,
    pou: &PartitionOfUnity,
) -> Result<BoxedLinePiece> {
    let lat = lattice as i64;
    let h = 1.0 / lattice as f64;
    let pieces: Vec<usize> = (0..3).filter(|&j| slots[j].kind() == SlotKind::Piece).collect();
    let solved = *pieces
        .iter()
        .max_by_key(|&&j| match slots[j] {
            Slot::Piece(p) => p.values.iter().filter(|c| **c != C64::new(0.0, 0.0)).count(),
            Slot::Tone(_) => 0,
        })
        .expect("validated kinds carry a piece");
    let Slot::Piece(solved_piece) = slots[solved] else {
        unreachable!()
    };
    let others: Vec<usize> = (0..3).filter(|&j| j != solved).collect();
    let a = sparse(&slots[others[0]], lattice, others[0] == 1);
    let b = sparse(&slots[others[1]], lattice, others[1] == 1);
    let weight = h.powi(pieces.len() as i32 - 1);
    let profile = pou.lattice_profile(lattice);

    let mut out = BoxedLinePiece::zeros(n, lattice);
    let q_out_lo = out.q_lo();
    let len = out.values.len() as i64;
    let s_lo = solved_piece.q_lo();
    let s_len = solved_piece.values.len() as i64;

    for (&qa, &va) in a.q.iter().zip(&a.v) {
        for (&qb, &vb) in b.q.iter().zip(&b.v) {
            let vab = va * vb * weight;
            let mut q_slots = [0i64; 3];
            q_slots[others[0]] = qa;
            q_slots[others[1]] = qb;
            // q = q1 - q2 + q3 solved for the remaining slot, as offset + sign·q.
            let (offset, dir) = match solved {
                0 => (q_slots[1] - q_slots[2], 1),
                1 => (q_slots[0] + q_slots[2], -1),
                _ => (q_slots[1] - q_slots[0], 1),
            };
            // Restrict q to where the solved index lands inside its piece.
            let (lo, hi) = if dir == 1 {
                (s_lo - offset, s_lo + s_len - 1 - offset)
            } else {
                (offset - (s_lo + s_len - 1), offset - s_lo)
            };
            let i_lo = (lo - q_out_lo).max(0);
            let i_hi = (hi - q_out_lo).min(len - 1);
            for i in i_lo..=i_hi {
                let q = q_out_lo + i;
                let qs = offset + dir * q;
                let mut vs = solved_piece.values[(qs - s_lo) as usize];
                if vs == C64::new(0.0, 0.0) {
                    continue;
                }
                if solved == 1 {
                    vs = vs.conj();
                }
                q_slots[solved] = qs;
                let xi = q as f64 / lat as f64;
                let p = (xi - q_slots[0] as f64 / lat as f64) * (xi - q_slots[2] as f64 / lat as f64);
                let m = symbol.eval(p).ok_or_else(|| {
                    Error::SingularPoint(format!("(ξ-ξ1)(ξ-ξ3) = 0 at ξ = {xi}"))
                })?;
                out.values[i as usize] += m * vab * vs;
            }
        }
    }
    for (c, s) in out.values.iter_mut().zip(&profile) {
        *c *= *s;
    }
    Ok(out)
}

/// Single summand `F(Q^{1,t}_{kind,n})` with symbol `e^{-2itP}`.
pub fn q1_apply(
    kind: OperatorKind,
    n: i64,
    slots: [Slot; 3],
    t: f64,
    pou: &PartitionOfUnity,
) -> Result<BoxedLinePiece> {
    let symbol = Symbol::Oscillatory { t };
    let lattice = validate(kind, n, &slots, symbol)?;
    trilinear(n, &slots, lattice, symbol, pou)
}

/// Single summand `F(R^{1,t}_{kind,n})` with symbol `1/P`; resonant indices are rejected.
pub fn r1_apply(kind: OperatorKind, n: i64, slots: [Slot; 3], pou: &PartitionOfUnity) -> Result<BoxedLinePiece> {
    let lattice = validate(kind, n, &slots, Symbol::Divided)?;
    trilinear(n, &slots, lattice, Symbol::Divided, pou)
}

/// Single summand `F(Q̃^{1,t}_{kind,n})` with symbol `e^{-2itP}/(-2iP)`.
pub fn qtilde_apply(
    kind: OperatorKind,
    n: i64,
    slots: [Slot; 3],
    t: f64,
    pou: &PartitionOfUnity,
) -> Result<BoxedLinePiece> {
    let symbol = Symbol::Integrated { t };
    let lattice = validate(kind, n, &slots, symbol)?;
    trilinear(n, &slots, lattice, symbol, pou)
}

/// Relative residual of `F(Q̃) = (-2i)^{-1} e^{-itξ²} F(R(V, W))` with
/// `V̂ = e^{itξ²} v̂` and `W = e^{itn²} w`.
pub fn gauge_relation_check(
    kind: OperatorKind,
    n: i64,
    slots: [Slot; 3],
    t: f64,
    pou: &PartitionOfUnity,
) -> Result<f64> {
    let lhs = qtilde_apply(kind, n, slots, t, pou)?;
    let gauged: Vec<Option<BoxedLinePiece>> = slots
        .iter()
        .map(|s| match s {
            Slot::Piece(p) => Some(p.map_symbol(|xi| C64::from_polar(1.0, t * xi * xi))),
            Slot::Tone(_) => None,
        })
        .collect();
    let mut rotated = slots;
    for (j, slot) in rotated.iter_mut().enumerate() {
        match slot {
            Slot::Piece(_) => *slot = Slot::Piece(gauged[j].as_ref().expect("piece slot")),
            Slot::Tone(tone) => {
                let m = tone.n as f64;
                tone.value *= C64::from_polar(1.0, t * m * m);
            }
        }
    }
    let r = r1_apply(kind, n, rotated, pou)?;
    let rhs = r.map_symbol(|xi| C64::from_polar(1.0, -t * xi * xi) / C64::new(0.0, -2.0));
    let scale = lhs.l2_norm().max(rhs.l2_norm());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(lhs.distance(&rhs)? / scale)
}

/// `ρ_n(ξ₁, η, ξ₃) = σ_n(ξ₁ + η + ξ₃) / ((η + ξ₁)(η + ξ₃))`.
pub fn rho1_eval(xi1: f64, eta: f64, xi3: f64, n: i64, pou: &PartitionOfUnity) -> Result<f64> {
    let s = pou.sigma(n, xi1 + eta + xi3);
    if s == 0.0 {
        return Ok(0.0);
    }
    let den = (eta + xi1) * (eta + xi3);
    if den == 0.0 {
        return Err(Error::SingularPoint(format!(
            "ρ at (ξ1, η, ξ3) = ({xi1}, {eta}, {xi3})"
        )));
    }
    Ok(s / den)
}

/// `F(R^{1,t}_{I,n})` through the kernel `ρ_n`, summing over `(ξ₁, ξ₃)` with
/// `η = ξ - ξ₁ - ξ₃` and `F(v̄_{n₂})(η) = conj(v̂_{n₂}(-η))`.
pub fn r1_kind_i_via_kernel(
    n: i64,
    pieces: [&BoxedLinePiece; 3],
    pou: &PartitionOfUnity,
) -> Result<BoxedLinePiece> {
    let slots = [Slot::Piece(pieces[0]), Slot::Piece(pieces[1]), Slot::Piece(pieces[2])];
    let lattice = validate(OperatorKind::I, n, &slots, Symbol::Divided)?;
    let lat = lattice as f64;
    let h = 1.0 / lat;
    let mut out = BoxedLinePiece::zeros(n, lattice);
    for i in 0..out.values.len() {
        let q = out.q_at(i);
        let mut acc = C64::new(0.0, 0.0);
        for (i1, v1) in pieces[0].values.iter().enumerate() {
            let q1 = pieces[0].q_at(i1);
            for (i3, v3) in pieces[2].values.iter().enumerate() {
                let q3 = pieces[2].q_at(i3);
                let q_eta = q - q1 - q3;
                let v2 = pieces[1].at_q(-q_eta);
                if v2 == C64::new(0.0, 0.0) {
                    continue;
                }
                let rho = rho1_eval(q1 as f64 / lat, q_eta as f64 / lat, q3 as f64 / lat, n, pou)?;
                acc += v1 * v2.conj() * v3 * rho;
            }
        }
        out.values[i] = acc * h * h;
    }
    Ok(out)
}

/// Unit-mass bump of half-width `width` centred at integer `m`, scaled by `c`.
pub fn delta_bump(m: i64, lattice: u32, width: f64, c: C64) -> BoxedLinePiece {
    let raw = BoxedLinePiece::from_fn(m, lattice, |xi| {
        C64::new(crate::boxes::bump((xi - m as f64) / width), 0.0)
    });
    let mass: f64 = raw.values.iter().map(|v| v.re).sum::<f64>() * raw.h();
    raw.scale(c / mass)
}

/// Configuration for comparing `Q_I` on shrinking bumps with `Q_II` on tones.
#[derive(Debug, Clone)]
pub struct DeltaLimitSetup {
    pub n: i64,
    pub w1: ToneCoefficient,
    pub w2: ToneCoefficient,
    pub v3: BoxedLinePiece,
    pub t: f64,
}

/// `‖Q_I(b₁, b̄₂, v₃) - Q_II(w₁, w̄₂, v₃)‖₂` where `b_j` are unit-mass bumps of
/// half-width `h` carrying the tone coefficients.
pub fn delta_limit_check(setup: &DeltaLimitSetup, widths: &[f64], pou: &PartitionOfUnity) -> Result<Vec<f64>> {
    if widths.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfig("widths must be strictly decreasing".into()));
    }
    let lattice = setup.v3.lattice();
    let q2 = q1_apply(
        OperatorKind::II,
        setup.n,
        [Slot::Tone(setup.w1), Slot::Tone(setup.w2), Slot::Piece(&setup.v3)],
        setup.t,
        pou,
    )?;
    widths
        .iter()
        .map(|&h| {
            let b1 = delta_bump(setup.w1.n, lattice, h, setup.w1.value);
            let b2 = delta_bump(setup.w2.n, lattice, h, setup.w2.value);
            let q1 = q1_apply(
                OperatorKind::I,
                setup.n,
                [Slot::Piece(&b1), Slot::Piece(&b2), Slot::Piece(&setup.v3)],
                setup.t,
                pou,
            )?;
            q1.distance(&q2)
        })
        .collect()
}

/// One line of a bound audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub kind: OperatorKind,
    pub n: i64,
    pub n1: i64,
    pub n2: i64,
    pub n3: i64,
    pub ratio: f64,
}

/// Max, median and their quotient over a set of audit ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub max: f64,
    pub median: f64,
    pub spread: f64,
}

pub fn summarize(rows: &[AuditRow]) -> AuditSummary {
    let mut r: Vec<f64> = rows.iter().map(|row| row.ratio).collect();
    r.sort_by(f64::total_cmp);
    let max = r.last().copied().unwrap_or(0.0);
    let median = if r.is_empty() {
        0.0
    } else if r.len() % 2 == 1 {
        r[r.len() / 2]
    } else {
        0.5 * (r[r.len() / 2 - 1] + r[r.len() / 2])
    };
    AuditSummary {
        max,
        median,
        spread: if median > 0.0 { max / median } else { f64::INFINITY },
    }
}

/// Random non-resonant index quadruple with `n = n₁ - n₂ + n₃` and
/// `2 ≤ |n - n₁|, |n - n₃| ≤ max_gap`.
pub fn random_nonresonant_indices<R: Rng + ?Sized>(rng: &mut R, centre_range: i64, max_gap: i64) -> [i64; 4] {
    let n = rng.gen_range(-centre_range..=centre_range);
    let gap = |rng: &mut R| {
        let g = rng.gen_range(2..=max_gap);
        if rng.gen_bool(0.5) {
            g
        } else {
            -g
        }
    };
    let n1 = n + gap(rng);
    let n3 = n + gap(rng);
    [n, n1, n1 + n3 - n, n3]
}

/// Random slot contents for `kind` at indices `idx`: a boxed piece per piece
/// slot and a complex Gaussian coefficient per tone slot.
pub fn random_slots<R: Rng + ?Sized>(
    kind: OperatorKind,
    idx: [i64; 3],
    lattice: u32,
    pou: &PartitionOfUnity,
    rng: &mut R,
) -> (Vec<Option<BoxedLinePiece>>, [ToneCoefficient; 3]) {
    let mut pieces = Vec::with_capacity(3);
    let mut tones = [ToneCoefficient::new(0, C64::new(0.0, 0.0)); 3];
    for (j, sk) in kind.pattern().into_iter().enumerate() {
        match sk {
            SlotKind::Piece => pieces.push(Some(BoxedLinePiece::random(idx[j], lattice, pou, rng))),
            SlotKind::Tone => {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                tones[j] = ToneCoefficient::new(idx[j], C64::new(re, im));
                pieces.push(None);
            }
        }
    }
    (pieces, tones)
}

/// Borrowed slots over the output of [`random_slots`].
pub fn slots_from<'a>(pieces: &'a [Option<BoxedLinePiece>], tones: &[ToneCoefficient; 3]) -> [Slot<'a>; 3] {
    std::array::from_fn(|j| match &pieces[j] {
        Some(p) => Slot::Piece(p),
        None => Slot::Tone(tones[j]),
    })
}

/// Ratios `‖R^{1,t}_{kind,n}‖₂ |n-n₁||n-n₃| / Π(slot norms)` over random
/// non-resonant configurations.
pub fn divided_bound_audit<R: Rng + ?Sized>(
    kind: OperatorKind,
    configs: usize,
    lattice: u32,
    pou: &PartitionOfUnity,
    rng: &mut R,
) -> Result<Vec<AuditRow>> {
    (0..configs)
        .map(|_| {
            let [n, n1, n2, n3] = random_nonresonant_indices(rng, 20, 12);
            let (pieces, tones) = random_slots(kind, [n1, n2, n3], lattice, pou, rng);
            let slots = slots_from(&pieces, &tones);
            let r = r1_apply(kind, n, slots, pou)?;
            let denom: f64 = slots.iter().map(Slot::norm).product();
            Ok(AuditRow {
                kind,
                n,
                n1,
                n2,
                n3,
                ratio: r.l2_norm() * ((n - n1).abs() * (n - n3).abs()) as f64 / denom,
            })
        })
        .collect()
}

/// Ratios `‖Q^{1,t}_{kind,n}‖₂ / Π(slot norms)` over random constrained
/// configurations, resonant ones included.
pub fn oscillatory_bound_audit<R: Rng + ?Sized>(
    kind: OperatorKind,
    configs: usize,
    lattice: u32,
    t: f64,
    pou: &PartitionOfUnity,
    rng: &mut R,
) -> Result<Vec<AuditRow>> {
    (0..configs)
        .map(|_| {
            let n = rng.gen_range(-20..=20);
            let n1 = n + rng.gen_range(-12..=12);
            let n3 = n + rng.gen_range(-12..=12);
            let n2 = n1 + n3 - n;
            let (pieces, tones) = random_slots(kind, [n1, n2, n3], lattice, pou, rng);
            let slots = slots_from(&pieces, &tones);
            let q = q1_apply(kind, n, slots, t, pou)?;
            let denom: f64 = slots.iter().map(Slot::norm).product();
            Ok(AuditRow {
                kind,
                n,
                n1,
                n2,
                n3,
                ratio: q.l2_norm() / denom,
            })
        })
        .collect()
}

/// A line spectrum cut into box pieces `σ_n v̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxedField {
    lattice: u32,
    pieces: BTreeMap<i64, BoxedLinePiece>,
}

impl BoxedField {
    pub fn new(lattice: u32) -> Self {
        Self {
            lattice,
            pieces: BTreeMap::new(),
        }
    }

    /// Pieces for every box whose support meets the spectrum's nonzero samples.
    pub fn decompose(spec: &LineSpectrum, pou: &PartitionOfUnity) -> Self {
        let grid = spec.grid();
        let lattice = grid.box_length();
        let mut field = Self::new(lattice);
        for k in crate::boxes::box_range(&grid) {
            let piece = BoxedLinePiece::from_spectrum(spec, k, pou);
            if !piece.is_zero() {
                field.pieces.insert(k, piece);
            }
        }
        field
    }

    pub fn insert(&mut self, piece: BoxedLinePiece) -> Result<()> {
        if piece.lattice != self.lattice {
            return Err(Error::GridMismatch(format!(
                "piece lattice {} vs field lattice {}",
                piece.lattice, self.lattice
            )));
        }
        self.pieces.insert(piece.n, piece);
        Ok(())
    }

    pub fn lattice(&self) -> u32 {
        self.lattice
    }

    pub fn pieces(&self) -> &BTreeMap<i64, BoxedLinePiece> {
        &self.pieces
    }

    pub fn get(&self, n: i64) -> Option<&BoxedLinePiece> {
        self.pieces.get(&n)
    }

    pub fn max_index(&self) -> i64 {
        self.pieces.keys().map(|k| k.abs()).max().unwrap_or(0)
    }

    /// `Σ_n v̂_n` placed on the lattice of `grid`, which must have `L = lattice`.
    pub fn to_spectrum(&self, grid: LineGrid) -> Result<LineSpectrum> {
        if grid.box_length() != self.lattice {
            return Err(Error::GridMismatch(format!(
                "grid box length {} vs piece lattice {}",
                grid.box_length(),
                self.lattice
            )));
        }
        let mut spec = LineSpectrum::zeros(grid);
        for piece in self.pieces.values() {
            for (i, c) in piece.values.iter().enumerate() {
                match grid.slot_of_lattice(piece.q_at(i)) {
                    Some(slot) => spec.coeffs_mut()[slot] += c,
                    None if *c == C64::new(0.0, 0.0) => {}
                    None => {
                        return Err(Error::SupportViolation(format!(
                            "box {} carries mass beyond the grid band",
                            piece.n
                        )))
                    }
                }
            }
        }
        Ok(spec)
    }

    pub fn l2_norm(&self) -> f64 {
        self.pieces
            .values()
            .map(|p| p.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}
