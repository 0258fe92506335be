//! Incoming ground-state packets and their conditional (no-photon) evolution,
//! built from stationary scattering states.
//!
//! Conventions: ψ̃(k) is normalized as ∫₀^∞ |ψ̃|² dk = 1 and
//! ψ(x) = (2π)^{-1/2} ∫ ψ̃(k) e^{ikx} dk, so position-space norms are 1 too.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::amplitudes::{amplitudes, ChannelAmplitudes};
use crate::error::{Error, Result};
use crate::model::{AtomSpec, FieldLayout, FieldPositions, HBAR};
use crate::numerics::{cis, exp_i, exp_integral, gauss_legendre, Limit, LowRank};

const GRAM_TOL: f64 = 1e-15;

/// Gaussian momentum profile ψ̃(k) ∝ exp(−(k−k0)²/(4σk²)) e^{−ikx0}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacketSpec {
    pub k0: f64,
    pub sigma_k: f64,
    pub x0: f64,
}

impl GaussianPacketSpec {
    pub fn new(k0: f64, sigma_k: f64, x0: f64) -> Result<Self> {
        if !(sigma_k.is_finite() && sigma_k > 0.0) {
            return Err(Error::invalid(format!("sigma_k must be finite and > 0, got {sigma_k}")));
        }
        if !(k0.is_finite() && k0 >= 5.0 * sigma_k) {
            return Err(Error::invalid(format!(
                "k0 = {k0} must be at least 5 sigma_k = {}; the packet would carry negative momenta",
                5.0 * sigma_k
            )));
        }
        if !x0.is_finite() {
            return Err(Error::invalid("x0 must be finite"));
        }
        Ok(Self { k0, sigma_k, x0 })
    }

    /// Packet with mean velocity `v0`, relative spread `ratio` = σk/k0, placed
    /// `widths`/σk to the left of `left_edge`.
    pub fn incoming(atom: &AtomSpec, v0: f64, ratio: f64, left_edge: f64, widths: f64) -> Result<Self> {
        let k0 = atom.wavenumber(v0);
        let sigma_k = ratio * k0;
        Self::new(k0, sigma_k, left_edge - widths / sigma_k)
    }

    /// Position-space rms width at t = 0, 1/(2σk).
    pub fn position_width(&self) -> f64 {
        0.5 / self.sigma_k
    }

    /// Weight of the untruncated profile at k > 0.
    fn positive_weight(&self) -> f64 {
        0.5 * libm::erfc(-self.k0 / (self.sigma_k * std::f64::consts::SQRT_2))
    }
}

/// Quadrature rule for the k-integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct KGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    window: f64,
}

impl KGrid {
    pub const DEFAULT_NODES: usize = 512;
    pub const DEFAULT_WINDOW: f64 = 12.0;

    /// `n` Gauss–Legendre nodes on [k0 − wσk, k0 + wσk] ∩ (0, ∞).
    pub fn new(spec: &GaussianPacketSpec, n: usize, window: f64) -> Result<Self> {
        if !(window.is_finite() && window > 0.0) {
            return Err(Error::invalid(format!("k-window must be > 0, got {window}")));
        }
        let lo = (spec.k0 - window * spec.sigma_k).max(0.0);
        let hi = spec.k0 + window * spec.sigma_k;
        let (nodes, weights) = gauss_legendre(n, lo, hi)?;
        Ok(Self { nodes, weights, window })
    }

    pub fn default_for(spec: &GaussianPacketSpec) -> Result<Self> {
        Self::new(spec, Self::DEFAULT_NODES, Self::DEFAULT_WINDOW)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn window(&self) -> f64 {
        self.window
    }
}

/// Sampled momentum amplitude ψ̃(k_i) with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    k: Vec<f64>,
    w: Vec<f64>,
    amp: Vec<C64>,
    mass: f64,
    /// Initial centre and width; used to size integration windows.
    origin: f64,
    width: f64,
}

/// Discretizes a Gaussian spec on `grid` for an atom of mass `mass`.
pub fn make_gaussian(spec: &GaussianPacketSpec, grid: &KGrid, mass: f64) -> Result<Packet> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::invalid(format!("mass must be > 0, got {mass}")));
    }
    let s2 = spec.sigma_k * spec.sigma_k;
    let norm = (2.0 * PI * s2).powf(-0.25) / spec.positive_weight().sqrt();
    let amp = grid
        .nodes
        .iter()
        .map(|&k| {
            let d = k - spec.k0;
            cis(-k * spec.x0) * (norm * (-d * d / (4.0 * s2)).exp())
        })
        .collect();
    Ok(Packet {
        k: grid.nodes.clone(),
        w: grid.weights.clone(),
        amp,
        mass,
        origin: spec.x0,
        width: spec.position_width(),
    })
}

impl Packet {
    pub fn nodes(&self) -> &[f64] {
        &self.k
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// ∫|ψ̃|² dk.
    pub fn norm(&self) -> f64 {
        self.average(|_| 1.0)
    }

    /// ∫|ψ̃(k)|² f(k) dk.
    pub fn average(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.k.iter().zip(&self.w).zip(&self.amp).map(|((&k, &w), a)| w * a.norm_sqr() * f(k)).sum()
    }

    /// ⟨k⟩ over the normalized packet.
    pub fn mean_wavenumber(&self) -> f64 {
        self.average(|k| k) / self.norm()
    }

    /// p0 = ħ⟨k⟩.
    pub fn mean_momentum(&self) -> f64 {
        HBAR * self.mean_wavenumber()
    }

    /// ⟨v⁻¹⟩ = ⟨m/(ħk)⟩.
    pub fn mean_inverse_velocity(&self) -> f64 {
        let m = self.mass / HBAR;
        self.average(|k| m / k) / self.norm()
    }

    /// v0 = ħ⟨k⟩/m.
    pub fn mean_velocity(&self) -> f64 {
        self.mean_momentum() / self.mass
    }

    /// Classical arrival time at `x` from the initial centre.
    pub fn arrival_time(&self, x: f64) -> f64 {
        (x - self.origin) / self.mean_velocity()
    }

    /// Position width at time t for a Gaussian of the same initial width.
    pub fn width_at(&self, t: f64) -> f64 {
        let spread = HBAR * t / (2.0 * self.mass * self.width);
        (self.width * self.width + spread * spread).sqrt()
    }

    /// Multiplies ψ̃(k) by a real filter; the result is not renormalized.
    pub fn filtered(&self, filter: impl Fn(f64) -> f64) -> Packet {
        let mut out = self.clone();
        for (a, &k) in out.amp.iter_mut().zip(&self.k) {
            *a *= filter(k);
        }
        out
    }

    /// Replaces the samples by f(i, ψ̃_i).
    pub fn map_samples(&self, f: impl Fn(usize, C64) -> C64) -> Packet {
        let mut out = self.clone();
        for (i, a) in out.amp.iter_mut().enumerate() {
            *a = f(i, *a);
        }
        out
    }

    pub fn same_grid(&self, other: &Packet) -> bool {
        self.k == other.k && self.w == other.w && self.mass == other.mass
    }

    fn omega(&self, k: f64) -> f64 {
        HBAR * k * k / (2.0 * self.mass)
    }

    /// Time-dependent expansion coefficients w_i ψ̃_i e^{−iω_i t}/√(2π).
    fn coefficients(&self, t: f64) -> Vec<C64> {
        let s = (2.0 * PI).sqrt().recip();
        self.k
            .iter()
            .zip(&self.w)
            .zip(&self.amp)
            .map(|((&k, &w), a)| a * cis(-self.omega(k) * t) * (w * s))
            .collect()
    }
}

/// ψ_free(x, t).
pub fn free_evolve(packet: &Packet, x: f64, t: f64) -> C64 {
    free_evolve_with_derivative(packet, x, t).0
}

/// ψ_free(x, t) and ∂ₓψ_free(x, t).
pub fn free_evolve_with_derivative(packet: &Packet, x: f64, t: f64) -> (C64, C64) {
    let c = packet.coefficients(t);
    let mut psi = C64::new(0.0, 0.0);
    let mut dpsi = C64::new(0.0, 0.0);
    for (&k, ci) in packet.k.iter().zip(&c) {
        let term = ci * cis(k * x);
        psi += term;
        dpsi += term * C64::new(0.0, k);
    }
    (psi, dpsi)
}

/// Closed-form free evolution of the untruncated Gaussian.
pub fn gaussian_free_analytic(spec: &GaussianPacketSpec, mass: f64, x: f64, t: f64) -> C64 {
    let s2 = spec.sigma_k * spec.sigma_k;
    let y = x - spec.x0;
    let beta = C64::new(0.25 / s2, HBAR * t / (2.0 * mass));
    let b = C64::new(spec.k0 / (2.0 * s2), y);
    let pref = (2.0 * PI).powf(-0.5) * (2.0 * PI * s2).powf(-0.25);
    pref * (PI / beta).sqrt() * (b * b / (4.0 * beta) - spec.k0 * spec.k0 / (4.0 * s2)).exp()
}

/// Ground and excited components of Ψ at one (x, t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinorSample {
    pub ground: C64,
    pub excited: C64,
}

impl SpinorSample {
    pub fn density(&self) -> f64 {
        self.ground.norm_sqr() + self.excited.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy)]
struct Term {
    coef: C64,
    kappa: C64,
}

/// Piece of a stationary state on (lo, hi): Σ coef·e^{iκ(x − anchor)}.
#[derive(Debug, Clone)]
struct Region {
    lo: Limit,
    hi: Limit,
    anchor: f64,
    ground: Vec<Term>,
    excited: Vec<Term>,
}

impl Region {
    fn contains(&self, x: f64) -> bool {
        let above = match self.lo {
            Limit::At(a) => x >= a,
            _ => true,
        };
        let below = match self.hi {
            Limit::At(b) => x <= b,
            _ => true,
        };
        above && below
    }
}

fn eval_terms(terms: &[Term], y: f64) -> C64 {
    terms.iter().map(|t| t.coef * exp_i(t.kappa * y)).sum()
}

fn term(coef: C64, kappa: C64) -> Term {
    Term { coef, kappa }
}

/// Stationary state for a unit incoming ground wave, split by field position.
#[derive(Debug, Clone)]
struct StationaryState {
    regions: Vec<Region>,
}

impl StationaryState {
    fn new(a: &ChannelAmplitudes, layout: &FieldLayout, g: f64) -> Result<Self> {
        let k = C64::new(a.k, 0.0);
        let q = a.q;
        let i = C64::new(0.0, 1.0);
        let (x1, x2) = match layout.positions() {
            FieldPositions::Single(x) => (x, x),
            FieldPositions::Double { first, separation } => (first, first + separation),
        };
        let left = Region {
            lo: Limit::NegInf,
            hi: Limit::At(x1),
            anchor: x1,
            ground: vec![term(cis(a.k * x1), k), term(a.reflect_ground * cis(-a.k * x1), -k)],
            excited: vec![term(a.reflect_excited * exp_i(-q * x1), -q)],
        };
        let right = Region {
            lo: Limit::At(x2),
            hi: Limit::PosInf,
            anchor: x2,
            ground: vec![term(a.transmit_ground * cis(a.k * x2), k)],
            excited: vec![term(a.transmit_excited * exp_i(q * x2), q)],
        };
        if !layout.is_double() {
            return Ok(Self { regions: vec![left, right] });
        }
        if q.norm() == 0.0 {
            return Err(Error::NumericalFailure("excited wavenumber vanishes inside the field pair".into()));
        }
        let psi1 = eval_terms(&left.ground, 0.0);
        let psi2 = eval_terms(&left.excited, 0.0);
        let dpsi1 = i * k * (left.ground[0].coef - left.ground[1].coef) + g * psi2;
        let dpsi2 = -i * q * left.excited[0].coef + g * psi1;
        let split = |psi: C64, dpsi: C64, kk: C64| {
            let r = dpsi / (i * kk);
            (0.5 * (psi + r), 0.5 * (psi - r))
        };
        let (a1, b1) = split(psi1, dpsi1, k);
        let (a2, b2) = split(psi2, dpsi2, q);
        let inner = Region {
            lo: Limit::At(x1),
            hi: Limit::At(x2),
            anchor: x1,
            ground: vec![term(a1, k), term(b1, -k)],
            excited: vec![term(a2, q), term(b2, -q)],
        };
        Ok(Self { regions: vec![left, inner, right] })
    }

    fn sample(&self, x: f64) -> (C64, C64) {
        let r = self.regions.iter().find(|r| r.contains(x)).expect("regions cover the line");
        let y = x - r.anchor;
        (eval_terms(&r.ground, y), eval_terms(&r.excited, y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Channel {
    Ground,
    Excited,
}

fn shift(l: Limit, by: f64) -> Limit {
    match l {
        Limit::At(x) => Limit::At(x - by),
        other => other,
    }
}

fn clip(lo: Limit, hi: Limit, window: Option<(f64, f64)>) -> Option<(Limit, Limit)> {
    let Some((a, b)) = window else {
        return Some((lo, hi));
    };
    let lo = match lo {
        Limit::At(x) => x.max(a),
        _ => a,
    };
    let hi = match hi {
        Limit::At(x) => x.min(b),
        _ => b,
    };
    (hi > lo).then_some((Limit::At(lo), Limit::At(hi)))
}

/// ∫ conj(φ_i) φ_j dx over the channel, optionally restricted to a window.
fn overlap(si: &StationaryState, sj: &StationaryState, ch: Channel, window: Option<(f64, f64)>) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (ri, rj) in si.regions.iter().zip(&sj.regions) {
        let Some((lo, hi)) = clip(ri.lo, ri.hi, window) else {
            continue;
        };
        let (lo, hi) = (shift(lo, ri.anchor), shift(hi, ri.anchor));
        let (ti, tj) = match ch {
            Channel::Ground => (&ri.ground, &rj.ground),
            Channel::Excited => (&ri.excited, &rj.excited),
        };
        for a in ti {
            for b in tj {
                acc += a.coef.conj() * b.coef * exp_integral(b.kappa - a.kappa.conj(), lo, hi);
            }
        }
    }
    acc
}

/// Conditional evolution of a packet through the field layout, with the
/// stationary states for every quadrature node precomputed.
#[derive(Debug)]
pub struct ConditionalEvolution {
    packet: Packet,
    atom: AtomSpec,
    layout: FieldLayout,
    amps: Vec<ChannelAmplitudes>,
    states: Vec<StationaryState>,
    excited_gram: OnceLock<LowRank>,
}

impl ConditionalEvolution {
    pub fn new(packet: &Packet, atom: &AtomSpec, layout: &FieldLayout) -> Result<Self> {
        if packet.mass != atom.mass() {
            return Err(Error::invalid("packet and atom masses differ"));
        }
        if packet.origin >= layout.leftmost() {
            return Err(Error::invalid(format!(
                "packet centre {} must start left of the leftmost field at {}",
                packet.origin,
                layout.leftmost()
            )));
        }
        let g = atom.coupling_wavenumber(layout.strength());
        let amps = packet
            .k
            .iter()
            .map(|&k| amplitudes(k, atom, layout))
            .collect::<Result<Vec<_>>>()?;
        let states = amps.iter().map(|a| StationaryState::new(a, layout, g)).collect::<Result<Vec<_>>>()?;
        Ok(Self { packet: packet.clone(), atom: *atom, layout: *layout, amps, states, excited_gram: OnceLock::new() })
    }

    pub fn packet(&self) -> &Packet {
        &self.packet
    }

    pub fn atom(&self) -> &AtomSpec {
        &self.atom
    }

    pub fn layout(&self) -> &FieldLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[ChannelAmplitudes] {
        &self.amps
    }

    /// B(k_i) = 1 − |r11|² − |t11|² at every node.
    pub fn absorption(&self) -> Vec<f64> {
        self.amps.iter().map(|a| 1.0 - a.ground_probability()).collect()
    }

    /// Σ w|ψ̃|²B, the total probability of leaving the ground channel.
    pub fn detection_probability(&self) -> f64 {
        self.weighted_sum(&self.absorption())
    }

    /// Σ w|ψ̃|²(q/k)(|r12|² + |t12|²), the asymptotic excited population for
    /// an open lossless excited channel (0 when it is closed).
    pub fn asymptotic_excited_population(&self) -> f64 {
        let f: Vec<f64> = self
            .amps
            .iter()
            .map(|a| {
                if a.open_excited {
                    a.q.re / a.k * (a.reflect_excited.norm_sqr() + a.transmit_excited.norm_sqr())
                } else {
                    0.0
                }
            })
            .collect();
        self.weighted_sum(&f)
    }

    fn weighted_sum(&self, f: &[f64]) -> f64 {
        self.packet.w.iter().zip(&self.packet.amp).zip(f).map(|((w, a), f)| w * a.norm_sqr() * f).sum()
    }

    /// Ψ(x, t).
    pub fn sample(&self, x: f64, t: f64) -> SpinorSample {
        self.sample_with(&self.packet, x, t)
    }

    /// Ψ(x, t) for another packet on the same grid, reusing the states.
    fn sample_with(&self, packet: &Packet, x: f64, t: f64) -> SpinorSample {
        let c = packet.coefficients(t);
        let mut out = SpinorSample { ground: C64::new(0.0, 0.0), excited: C64::new(0.0, 0.0) };
        for (ci, s) in c.iter().zip(&self.states) {
            let (g, e) = s.sample(x);
            out.ground += ci * g;
            out.excited += ci * e;
        }
        out
    }

    /// Ψ(x, t) for a packet filtered on the same grid.
    pub fn sample_packet(&self, packet: &Packet, x: f64, t: f64) -> Result<SpinorSample> {
        self.check_grid(packet)?;
        Ok(self.sample_with(packet, x, t))
    }

    fn check_grid(&self, packet: &Packet) -> Result<()> {
        if self.packet.same_grid(packet) {
            Ok(())
        } else {
            Err(Error::invalid("packets live on different k-grids"))
        }
    }

    fn require_decay(&self) -> Result<()> {
        if self.atom.gamma() > 0.0 {
            Ok(())
        } else {
            Err(Error::regime(
                "the excited norm integral needs gamma > 0; use the grid propagator or local quantities for gamma = 0",
            ))
        }
    }

    fn gram(&self) -> &LowRank {
        self.excited_gram.get_or_init(|| {
            let n = self.states.len();
            LowRank::factor(n, |i, j| overlap(&self.states[i], &self.states[j], Channel::Excited, None), GRAM_TOL)
        })
    }

    /// ∫|Ψ₂(x, t)|² dx.
    pub fn excited_norm(&self, t: f64) -> Result<f64> {
        self.require_decay()?;
        Ok(self.gram().quadratic(&self.packet.coefficients(t)))
    }

    /// ∫|Ψ₂|² dx at each time, evaluated in parallel.
    pub fn excited_norms(&self, times: &[f64]) -> Result<Vec<f64>> {
        self.require_decay()?;
        let gram = self.gram();
        Ok(times.par_iter().map(|&t| gram.quadratic(&self.packet.coefficients(t))).collect())
    }

    /// ∫ conj(Φ₂) Ψ₂ dx for packets `a` (Φ) and `b` (Ψ) on this grid.
    pub fn excited_overlap(&self, a: &Packet, b: &Packet, t: f64) -> Result<C64> {
        self.require_decay()?;
        self.check_grid(a)?;
        self.check_grid(b)?;
        Ok(self.gram().bilinear(&a.coefficients(t), &b.coefficients(t)))
    }

    /// Overlaps at each time, evaluated in parallel.
    pub fn excited_overlaps(&self, a: &Packet, b: &Packet, times: &[f64]) -> Result<Vec<C64>> {
        self.require_decay()?;
        self.check_grid(a)?;
        self.check_grid(b)?;
        let gram = self.gram();
        Ok(times.par_iter().map(|&t| gram.bilinear(&a.coefficients(t), &b.coefficients(t))).collect())
    }

    /// Finite x-window holding the incoming, reflected and transmitted parts
    /// of Ψ for 0 ≤ t ≤ `t_max`.
    fn norm_window(&self, t_max: f64) -> (f64, f64) {
        let margin = 12.0 * self.packet.width_at(t_max);
        let travel = self.packet.mean_velocity() * t_max - (self.layout.leftmost() - self.packet.origin);
        let travel = travel.max(0.0);
        (
            self.packet.origin.min(self.layout.leftmost() - travel) - margin,
            self.layout.rightmost() + travel + margin,
        )
    }

    /// Survival probability ‖Ψ(t)‖², integrated over a finite window that
    /// holds the whole state over the requested times.
    pub fn survival(&self, times: &[f64]) -> Vec<f64> {
        let t_max = times.iter().fold(0.0f64, |m, &t| m.max(t));
        let window = Some(self.norm_window(t_max));
        let n = self.states.len();
        let ground = LowRank::factor(n, |i, j| overlap(&self.states[i], &self.states[j], Channel::Ground, window), GRAM_TOL);
        let excited = LowRank::factor(n, |i, j| overlap(&self.states[i], &self.states[j], Channel::Excited, window), GRAM_TOL);
        times
            .par_iter()
            .map(|&t| {
                let c = self.packet.coefficients(t);
                ground.quadratic(&c) + excited.quadratic(&c)
            })
            .collect()
    }
}

/// Ψ(x, t) for a single sample point.
pub fn conditional_evolve(packet: &Packet, atom: &AtomSpec, layout: &FieldLayout, x: f64, t: f64) -> Result<SpinorSample> {
    Ok(ConditionalEvolution::new(packet, atom, layout)?.sample(x, t))
}

/// ∫|Ψ₂(x, t)|² dx.
pub fn excited_norm(packet: &Packet, atom: &AtomSpec, layout: &FieldLayout, t: f64) -> Result<f64> {
    ConditionalEvolution::new(packet, atom, layout)?.excited_norm(t)
}

/// γ ∫ conj(Φ₂) Ψ₂ dx with Φ evolved from `a` and Ψ from `b`.
pub fn bilinear_excited_overlap(a: &Packet, b: &Packet, atom: &AtomSpec, layout: &FieldLayout, t: f64) -> Result<C64> {
    if !a.same_grid(b) {
        return Err(Error::invalid("packets live on different k-grids"));
    }
    let evo = ConditionalEvolution::new(a, atom, layout)?;
    Ok(evo.excited_overlap(a, b, t)? * atom.gamma())
}
