//! Parameter records and the excited-channel wavenumber.
//!
//! All rates (decay rate, detuning, Rabi frequency) are angular frequencies in
//! rad/s. Lengths are in metres, wavenumbers in 1/m, velocities in m/s.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Reduced Planck constant (CODATA 2018), J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Mass used for ⁸⁷Rb throughout the reference scenarios, kg.
pub const RB87_MASS: f64 = 1.4e-25;

/// Internal and centre-of-mass parameters of the two-level atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomSpec {
    mass: f64,
    gamma: f64,
    delta: f64,
}

impl AtomSpec {
    /// `gamma` is the decay rate of the upper level and `delta` the detuning
    /// ω_L − ω_21, both in rad/s.
    pub fn new(mass: f64, gamma: f64, delta: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid(format!("mass must be finite and > 0, got {mass}")));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::invalid(format!("gamma must be finite and >= 0, got {gamma}")));
        }
        if !delta.is_finite() {
            return Err(Error::invalid(format!("delta must be finite, got {delta}")));
        }
        Ok(Self { mass, gamma, delta })
    }

    pub fn rubidium(gamma: f64, delta: f64) -> Result<Self> {
        Self::new(RB87_MASS, gamma, delta)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.mass, self.gamma, delta)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.mass, gamma, self.delta)
    }

    /// m/ħ in s/m².
    pub fn mass_over_hbar(&self) -> f64 {
        self.mass / HBAR
    }

    /// ħ/m in m²/s.
    pub fn hbar_over_mass(&self) -> f64 {
        HBAR / self.mass
    }

    pub fn wavenumber(&self, velocity: f64) -> f64 {
        self.mass * velocity / HBAR
    }

    pub fn velocity(&self, k: f64) -> f64 {
        HBAR * k / self.mass
    }

    /// Kinetic energy ħ²k²/2m in J.
    pub fn kinetic_energy(&self, k: f64) -> f64 {
        HBAR * HBAR * k * k / (2.0 * self.mass)
    }

    /// Coupling wavenumber m·u/ħ of a delta laser of strength `u`.
    pub fn coupling_wavenumber(&self, u: f64) -> f64 {
        self.mass * u / HBAR
    }
}

/// Positions of the delta lasers along the atomic path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldPositions {
    Single(f64),
    /// Two fields at `first` and `first + separation`.
    Double { first: f64, separation: f64 },
}

/// Strength and placement of one or two delta lasers of equal strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldLayout {
    strength: f64,
    positions: FieldPositions,
}

impl FieldLayout {
    pub fn single(strength: f64, position: f64) -> Result<Self> {
        check_strength(strength)?;
        if !position.is_finite() {
            return Err(Error::invalid("field position must be finite"));
        }
        Ok(Self { strength, positions: FieldPositions::Single(position) })
    }

    /// Two fields at `first` and `first + separation`. A zero separation is
    /// accepted so the coalescence limit can be evaluated directly.
    pub fn double(strength: f64, first: f64, separation: f64) -> Result<Self> {
        check_strength(strength)?;
        if !first.is_finite() || !separation.is_finite() {
            return Err(Error::invalid("field positions must be finite"));
        }
        if separation < 0.0 {
            return Err(Error::invalid(format!(
                "field positions must be ordered, got separation {separation}"
            )));
        }
        Ok(Self { strength, positions: FieldPositions::Double { first, separation } })
    }

    /// Builds a layout from a list of one or two ordered positions.
    pub fn from_positions(strength: f64, positions: &[f64]) -> Result<Self> {
        match positions {
            [x] => Self::single(strength, *x),
            [a, b] if b > a => Self::double(strength, *a, b - a),
            [_, _] => Err(Error::invalid("two field positions must be distinct and increasing")),
            _ => Err(Error::invalid(format!(
                "expected 1 or 2 field positions, got {}",
                positions.len()
            ))),
        }
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn positions(&self) -> FieldPositions {
        self.positions
    }

    pub fn with_strength(&self, strength: f64) -> Result<Self> {
        check_strength(strength)?;
        Ok(Self { strength, positions: self.positions })
    }

    pub fn is_double(&self) -> bool {
        matches!(self.positions, FieldPositions::Double { .. })
    }

    pub fn separation(&self) -> Option<f64> {
        match self.positions {
            FieldPositions::Single(_) => None,
            FieldPositions::Double { separation, .. } => Some(separation),
        }
    }

    pub fn leftmost(&self) -> f64 {
        match self.positions {
            FieldPositions::Single(x) => x,
            FieldPositions::Double { first, .. } => first,
        }
    }

    pub fn rightmost(&self) -> f64 {
        match self.positions {
            FieldPositions::Single(x) => x,
            FieldPositions::Double { first, separation } => first + separation,
        }
    }
}

fn check_strength(u: f64) -> Result<()> {
    if u.is_finite() && u >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("laser strength u must be finite and >= 0, got {u}")))
    }
}

pub(crate) fn check_wavenumber(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("wavenumber must be finite and > 0, got {k}")))
    }
}

/// q² − k² = m(iγ + 2Δ)/ħ, in 1/m².
pub(crate) fn excited_shift(atom: &AtomSpec) -> C64 {
    C64::new(2.0 * atom.delta, atom.gamma) * atom.mass_over_hbar()
}

/// Complex wavenumber of the excited channel, the root of
/// q² = k² + m(iγ + 2Δ)/ħ with Im q ≥ 0 (and Re q ≥ 0 when Im q = 0).
pub fn excited_wavenumber(k: f64, atom: &AtomSpec) -> Result<C64> {
    check_wavenumber(k)?;
    Ok(branch_sqrt(C64::new(k * k, 0.0) + excited_shift(atom)))
}

/// Square root on the branch Im ≥ 0, with Re ≥ 0 on the real axis.
pub(crate) fn branch_sqrt(q2: C64) -> C64 {
    if q2.im == 0.0 {
        return if q2.re >= 0.0 {
            C64::new(q2.re.sqrt(), 0.0)
        } else {
            C64::new(0.0, (-q2.re).sqrt())
        };
    }
    let q = q2.sqrt();
    if q.im < 0.0 {
        -q
    } else {
        q
    }
}

/// Detuning −ħk²/2m below which the excited outgoing channel is closed.
pub fn critical_detuning(k: f64, atom: &AtomSpec) -> Result<f64> {
    check_wavenumber(k)?;
    Ok(-HBAR * k * k / (2.0 * atom.mass))
}

/// Natural scales set by the laser strength u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSet {
    pub velocity: f64,
    pub length: f64,
    pub time: f64,
    pub energy: f64,
}

impl ScaleSet {
    pub fn new(atom: &AtomSpec, u: f64) -> Result<Self> {
        if !(u.is_finite() && u > 0.0) {
            return Err(Error::ScalingUndefined);
        }
        let m = atom.mass;
        Ok(Self {
            velocity: u,
            length: HBAR / (m * u),
            time: HBAR / (m * u * u),
            energy: 0.5 * m * u * u,
        })
    }

    pub fn to_dimensionless(&self, k: f64, atom: &AtomSpec, separation: Option<f64>) -> ScaledParams {
        ScaledParams {
            kappa: 2.0 * k * self.length,
            gamma: atom.gamma * self.time,
            detuning: atom.delta * self.time,
            separation: separation.map(|l| l / self.length),
        }
    }

    pub fn from_dimensionless(&self, scaled: &ScaledParams) -> PhysicalParams {
        PhysicalParams {
            k: scaled.kappa / (2.0 * self.length),
            gamma: scaled.gamma / self.time,
            delta: scaled.detuning / self.time,
            separation: scaled.separation.map(|l| l * self.length),
        }
    }
}

/// κ = 2ħk/(mu) = 2v/u, Γ = ħγ/(mu²), D̃ = ħΔ/(mu²), Λ = L·mu/ħ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledParams {
    pub kappa: f64,
    pub gamma: f64,
    pub detuning: f64,
    pub separation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub k: f64,
    pub gamma: f64,
    pub delta: f64,
    pub separation: Option<f64>,
}

pub fn to_dimensionless(k: f64, atom: &AtomSpec, layout: &FieldLayout) -> Result<ScaledParams> {
    check_wavenumber(k)?;
    let scales = ScaleSet::new(atom, layout.strength())?;
    Ok(scales.to_dimensionless(k, atom, layout.separation()))
}

pub fn from_dimensionless(scaled: &ScaledParams, mass: f64, u: f64) -> Result<PhysicalParams> {
    let atom = AtomSpec::new(mass, 0.0, 0.0)?;
    Ok(ScaleSet::new(&atom, u)?.from_dimensionless(scaled))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rb(gamma: f64, delta: f64) -> AtomSpec {
        AtomSpec::rubidium(gamma, delta).unwrap()
    }

    #[test]
    fn resonant_lossless_q_equals_k() {
        let k = 3.3e8;
        let q = excited_wavenumber(k, &rb(0.0, 0.0)).unwrap();
        assert_eq!(q, C64::new(k, 0.0));
    }

    #[test]
    fn strongly_negative_detuning_gives_imaginary_q() {
        let k = 2.0e8;
        let delta = -HBAR * k * k / RB87_MASS;
        let q = excited_wavenumber(k, &rb(0.0, delta)).unwrap();
        assert!(q.re.abs() < 1e-6 * k);
        assert!((q.im - k).abs() < 1e-12 * k);
    }

    #[test]
    fn decay_puts_q_in_upper_half_plane() {
        for delta in [-1e9, -1.0, 0.0, 5.0, 1e9] {
            let q = excited_wavenumber(1e8, &rb(10.0, delta)).unwrap();
            assert!(q.im > 0.0, "delta={delta}: {q}");
        }
    }

    #[test]
    fn branch_satisfies_defining_equation() {
        for (k, g, d) in [(1e7, 0.0, 3.0), (5e8, 1e6, -2e5), (1e9, 3e10, 1e10), (2e6, 0.0, -1e3)] {
            let atom = rb(g, d);
            let q = excited_wavenumber(k, &atom).unwrap();
            let lhs = q * q - k * k - excited_shift(&atom);
            assert!(lhs.norm() <= 1e-12 * (q * q).norm().max(k * k), "{lhs}");
        }
    }

    #[test]
    fn q_continuous_across_critical_detuning() {
        let k = 1.0e8;
        let atom = rb(0.0, 0.0);
        let dcr = critical_detuning(k, &atom).unwrap();
        let eps = 1e-6 * dcr.abs();
        let below = excited_wavenumber(k, &atom.with_delta(dcr - eps).unwrap()).unwrap();
        let above = excited_wavenumber(k, &atom.with_delta(dcr + eps).unwrap()).unwrap();
        let at = excited_wavenumber(k, &atom.with_delta(dcr).unwrap()).unwrap();
        assert_eq!(below.re, 0.0);
        assert_eq!(above.im, 0.0);
        assert!(below.norm() < 2e-3 * k && above.norm() < 2e-3 * k);
        assert!(at.norm() < 1e-6 * k);
    }

    #[test]
    fn critical_detuning_rubidium_one_metre_per_second() {
        let atom = rb(0.0, 0.0);
        let k = atom.wavenumber(1.0);
        let dcr = critical_detuning(k, &atom).unwrap();
        // −m v² / (2ħ) with m = 1.4e-25 kg, v = 1 m/s
        let golden = -6.637_765_097_794_188e8;
        assert!((dcr - golden).abs() < 1e-12 * golden.abs(), "{dcr:e}");
        assert!(critical_detuning(1e-3, &atom).unwrap().abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_wavenumbers() {
        let atom = rb(0.0, 0.0);
        assert!(matches!(excited_wavenumber(0.0, &atom), Err(Error::InvalidInput(_))));
        assert!(matches!(excited_wavenumber(-1.0, &atom), Err(Error::InvalidInput(_))));
        assert!(matches!(excited_wavenumber(f64::NAN, &atom), Err(Error::InvalidInput(_))));
        assert!(critical_detuning(f64::INFINITY, &atom).is_err());
    }

    #[test]
    fn atom_and_layout_validation() {
        assert!(AtomSpec::new(0.0, 0.0, 0.0).is_err());
        assert!(AtomSpec::new(1.0, -1.0, 0.0).is_err());
        assert!(FieldLayout::single(-1.0, 0.0).is_err());
        assert!(FieldLayout::from_positions(1.0, &[0.0, 0.0]).is_err());
        assert!(FieldLayout::from_positions(1.0, &[1.0, 0.0]).is_err());
        assert!(FieldLayout::from_positions(1.0, &[]).is_err());
        let l = FieldLayout::from_positions(1.0, &[0.5, 2.0]).unwrap();
        assert_eq!(l.separation(), Some(1.5));
    }

    #[test]
    fn kappa_is_twice_velocity_ratio() {
        let atom = rb(0.0, 0.0);
        let layout = FieldLayout::single(1.0, 0.0).unwrap();
        let half = to_dimensionless(atom.wavenumber(0.5), &atom, &layout).unwrap();
        assert!((half.kappa - 1.0).abs() < 1e-14);
        let ten = to_dimensionless(atom.wavenumber(10.0), &atom, &layout).unwrap();
        assert!((ten.kappa - 20.0).abs() < 1e-13);
    }

    #[test]
    fn scaling_undefined_without_field() {
        let atom = rb(0.0, 0.0);
        let layout = FieldLayout::single(0.0, 0.0).unwrap();
        assert_eq!(to_dimensionless(1e8, &atom, &layout), Err(Error::ScalingUndefined));
    }

    #[test]
    fn scales_are_positive() {
        let s = ScaleSet::new(&rb(0.0, 0.0), 0.3).unwrap();
        assert!(s.velocity > 0.0 && s.length > 0.0 && s.time > 0.0 && s.energy > 0.0);
        assert!((s.length / s.time - s.velocity).abs() < 1e-14 * s.velocity);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn dimensionless_round_trip(
                k in 1e5f64..1e11,
                gamma in 0f64..1e12,
                delta in -1e12f64..1e12,
                sep in 1e-9f64..1.0,
                u in 1e-3f64..1e2,
            ) {
                let atom = AtomSpec::rubidium(gamma, delta).unwrap();
                let layout = FieldLayout::double(u, 0.0, sep).unwrap();
                let scaled = to_dimensionless(k, &atom, &layout).unwrap();
                let back = from_dimensionless(&scaled, RB87_MASS, u).unwrap();
                let rel = |a: f64, b: f64| (a - b).abs() <= 1e-14 * a.abs().max(b.abs()) + f64::MIN_POSITIVE;
                prop_assert!(rel(back.k, k));
                prop_assert!(rel(back.gamma, gamma));
                prop_assert!(rel(back.delta, delta));
                prop_assert!(rel(back.separation.unwrap(), sep));
            }

            #[test]
            fn branch_upper_half_plane(k in 1e4f64..1e10, gamma in 0f64..1e11, delta in -1e11f64..1e11) {
                let q = excited_wavenumber(k, &AtomSpec::rubidium(gamma, delta).unwrap()).unwrap();
                prop_assert!(q.im >= 0.0);
                if q.im == 0.0 { prop_assert!(q.re >= 0.0); }
            }
        }
    }
}
