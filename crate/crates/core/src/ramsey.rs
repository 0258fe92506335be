//! Ramsey fringes of the double delta laser, exact and semiclassical.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::amplitudes::double_delta;
use crate::error::{Error, Result};
use crate::model::{critical_detuning, AtomSpec, FieldLayout};

/// Peak spacings further than this fraction from 2πv/L mark the resonance
/// regime.
pub const RESONANCE_THRESHOLD: f64 = 0.2;

/// 4 sin²(u/2v) cos²(u/2v) cos²(ΔL/2v).
pub fn p12_semiclassical(delta: f64, v: f64, u: f64, separation: f64) -> Result<f64> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(format!("velocity must be > 0, got {v}")));
    }
    let s = (u / v).sin();
    let c = (0.5 * delta * separation / v).cos();
    Ok(s * s * c * c)
}

/// u²v⁻² cos²(ΔL/2v), the fast-atom limit of the quantum result.
pub fn p12_fast_limit(delta: f64, v: f64, u: f64, separation: f64) -> f64 {
    let c = (0.5 * delta * separation / v).cos();
    (u / v).powi(2) * c * c
}

/// (q/k)|T₁₂|² above the critical detuning, exactly 0 at and below it.
pub fn p12_quantum(delta: f64, k: f64, atom: &AtomSpec, u: f64, separation: f64) -> Result<f64> {
    if atom.gamma() != 0.0 {
        return Err(Error::regime("Ramsey fringes are defined for gamma = 0"));
    }
    if delta <= critical_detuning(k, atom)? {
        return Ok(0.0);
    }
    let a = double_delta(k, &atom.with_delta(delta)?, &FieldLayout::double(u, 0.0, separation)?)?;
    Ok(a.q.re / k * a.transmit_excited.norm_sqr())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FringeKind {
    Quantum,
    Semiclassical,
}

/// Parameters of a fringe scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseyParams {
    pub mass: f64,
    pub velocity: f64,
    pub strength: f64,
    pub separation: f64,
}

impl RamseyParams {
    /// L = v·T for crossing time T.
    pub fn with_crossing_time(mass: f64, velocity: f64, strength: f64, time: f64) -> Self {
        Self { mass, velocity, strength, separation: velocity * time }
    }

    /// T = L/v.
    pub fn crossing_time(&self) -> f64 {
        self.separation / self.velocity
    }

    /// Semiclassical fringe period 2π/T.
    pub fn fringe_period(&self) -> f64 {
        2.0 * PI / self.crossing_time()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeCurve {
    pub kind: FringeKind,
    pub params: RamseyParams,
    pub detunings: Vec<f64>,
    pub p12: Vec<f64>,
}

/// Samples P₁₂ on `n` uniform detunings in [lo, hi].
pub fn fringe_scan(params: &RamseyParams, range: (f64, f64), n: usize, kind: FringeKind) -> Result<FringeCurve> {
    let (lo, hi) = range;
    if n < 100 {
        return Err(Error::invalid(format!("fringe scan needs at least 100 points, got {n}")));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::invalid(format!("detuning range must be finite and increasing, got [{lo}, {hi}]")));
    }
    let atom = AtomSpec::new(params.mass, 0.0, 0.0)?;
    let k = atom.wavenumber(params.velocity);
    let step = (hi - lo) / (n - 1) as f64;
    let detunings: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
    let p12 = detunings
        .par_iter()
        .map(|&d| match kind {
            FringeKind::Quantum => p12_quantum(d, k, &atom, params.strength, params.separation),
            FringeKind::Semiclassical => p12_semiclassical(d, params.velocity, params.strength, params.separation),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FringeCurve { kind, params: *params, detunings, p12 })
}

/// Peak positions and widths of a fringe curve, compared with a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeReport {
    pub peak_positions: Vec<f64>,
    pub peak_heights: Vec<f64>,
    /// Central maximum of the curve minus that of the reference.
    pub central_shift: f64,
    /// Distance between the minima flanking the central maximum.
    pub width: f64,
    pub mean_peak_spacing: f64,
    pub resonance_regime: bool,
}

/// Vertex of the parabola through three equally spaced samples.
fn refine(x: &[f64], y: &[f64], i: usize) -> (f64, f64) {
    let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
    let h = x[i + 1] - x[i];
    let den = a - 2.0 * b + c;
    if den == 0.0 {
        return (x[i], b);
    }
    let off = 0.5 * (a - c) / den;
    (x[i] + off * h, b - 0.25 * (a - c) * off)
}

fn extrema(x: &[f64], y: &[f64], maxima: bool) -> Vec<(f64, f64)> {
    let s = if maxima { 1.0 } else { -1.0 };
    (1..y.len() - 1)
        .filter(|&i| s * y[i] > s * y[i - 1] && s * y[i] >= s * y[i + 1])
        .map(|i| refine(x, y, i))
        .collect()
}

struct Central {
    position: f64,
    width: f64,
}

fn central(curve: &FringeCurve, peaks: &[(f64, f64)]) -> Result<Central> {
    let x = &curve.detunings;
    let &(position, _) = peaks
        .iter()
        .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
        .ok_or_else(|| Error::Diagnostics("no fringe maxima found; refine the detuning grid".into()))?;
    let minima = extrema(x, &curve.p12, false);
    let left = minima.iter().filter(|m| m.0 < position).map(|m| m.0).fold(f64::NEG_INFINITY, f64::max);
    let right = minima.iter().filter(|m| m.0 > position).map(|m| m.0).fold(f64::INFINITY, f64::min);
    if !(left.is_finite() && right.is_finite()) {
        return Err(Error::Diagnostics("central maximum is not flanked by two minima; widen the detuning range".into()));
    }
    Ok(Central { position, width: right - left })
}

/// Locates the fringe maxima of `curve` and its central maximum relative to
/// that of `reference` (same detuning grid).
pub fn fringe_report(curve: &FringeCurve, reference: &FringeCurve) -> Result<FringeReport> {
    if curve.detunings != reference.detunings {
        return Err(Error::invalid("fringe curves use different detuning grids"));
    }
    let x = &curve.detunings;
    let period = curve.params.fringe_period();
    let step = x[1] - x[0];
    if period / step < 20.0 {
        return Err(Error::Diagnostics(format!(
            "detuning step {step:.3e} rad/s resolves only {:.1} points per fringe; need >= 20",
            period / step
        )));
    }
    let peaks = extrema(x, &curve.p12, true);
    let ref_peaks = extrema(x, &reference.p12, true);
    let own = central(curve, &peaks)?;
    let theirs = central(reference, &ref_peaks)?;
    let mean_peak_spacing = if peaks.len() >= 2 {
        (peaks[peaks.len() - 1].0 - peaks[0].0) / (peaks.len() - 1) as f64
    } else {
        f64::NAN
    };
    let resonance_regime = !((mean_peak_spacing / period - 1.0).abs() <= RESONANCE_THRESHOLD);
    Ok(FringeReport {
        peak_positions: peaks.iter().map(|p| p.0).collect(),
        peak_heights: peaks.iter().map(|p| p.1).collect(),
        central_shift: own.position - theirs.position,
        width: own.width,
        mean_peak_spacing,
        resonance_regime,
    })
}

/// max |a − b| / max b over a common grid.
pub fn max_relative_deviation(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().cloned().fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}
