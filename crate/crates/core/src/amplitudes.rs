//! Closed-form scattering amplitudes of a ground-state atom incident from the
//! left on one or two delta lasers.
//!
//! All formulas are evaluated in reduced form: every term is divided by ħ² so
//! that only wavenumbers (k, q and the coupling wavenumber g = mu/ħ) appear.
//! This keeps intermediate magnitudes near 1e18 instead of 1e-50 and remains
//! valid for u = 0.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{check_wavenumber, excited_wavenumber, excited_shift, AtomSpec, FieldLayout, FieldPositions};
use crate::numerics::{cis, exp_i, exp_i_m1};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutKind {
    Single,
    Double,
}

/// Asymptotic amplitudes of the stationary state with a unit ground-state wave
/// e^{ikx} incoming from the left.
///
/// Left of the field(s): ground `e^{ikx} + r11 e^{-ikx}`, excited `r12 e^{-iqx}`.
/// Right of the field(s): ground `t11 e^{ikx}`, excited `t12 e^{iqx}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelAmplitudes {
    pub kind: LayoutKind,
    pub k: f64,
    pub q: C64,
    /// r11 (R11 for two fields).
    pub reflect_ground: C64,
    /// t11 (T11).
    pub transmit_ground: C64,
    /// r12 (R12).
    pub reflect_excited: C64,
    /// t12 (T12).
    pub transmit_excited: C64,
    /// γ = 0.
    pub lossless: bool,
    /// γ = 0 and Δ > Δ_cr, so the excited channel carries outgoing flux.
    pub open_excited: bool,
}

impl ChannelAmplitudes {
    /// |r11|² + |t11|².
    pub fn ground_probability(&self) -> f64 {
        self.reflect_ground.norm_sqr() + self.transmit_ground.norm_sqr()
    }

    fn is_finite(&self) -> bool {
        [self.reflect_ground, self.transmit_ground, self.reflect_excited, self.transmit_excited]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Flux-weighted channel probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelProbabilities {
    pub reflection_ground: f64,
    pub transmission_ground: f64,
    /// (q/k)|r12|² when the excited channel is open, else 0.
    pub reflection_excited: f64,
    /// (q/k)|t12|² when the excited channel is open, else 0.
    pub transmission_excited: f64,
    pub open_excited_channel: bool,
}

fn open_channel(atom: &AtomSpec, q: C64) -> bool {
    atom.gamma() == 0.0 && q.im == 0.0 && q.re > 0.0
}

/// q − k computed as (q² − k²)/(q + k), accurate when |q − k| ≪ k.
fn wavenumber_offset(k: f64, q: C64, atom: &AtomSpec) -> C64 {
    let shift = excited_shift(atom);
    if shift == C64::new(0.0, 0.0) {
        return C64::new(0.0, 0.0);
    }
    shift / (q + k)
}

fn check_atom_inputs(k: f64, layout: &FieldLayout) -> Result<()> {
    check_wavenumber(k)?;
    if !layout.strength().is_finite() {
        return Err(Error::invalid("laser strength must be finite"));
    }
    Ok(())
}

/// Amplitudes for a single delta laser at ξ.
pub fn single_delta(k: f64, atom: &AtomSpec, layout: &FieldLayout) -> Result<ChannelAmplitudes> {
    check_atom_inputs(k, layout)?;
    let xi = match layout.positions() {
        FieldPositions::Single(x) => x,
        FieldPositions::Double { .. } => {
            return Err(Error::invalid("single_delta requires a single-field layout"));
        }
    };
    let q = excited_wavenumber(k, atom)?;
    let g = atom.coupling_wavenumber(layout.strength());
    let four_kq = 4.0 * k * q;
    let d = four_kq + g * g;
    let i = C64::new(0.0, 1.0);

    let (r11, r12, t12) = if xi == 0.0 {
        (C64::new(-g * g, 0.0) / d, -2.0 * i * k * g / d, -2.0 * i * k * g / d)
    } else {
        let dq = wavenumber_offset(k, q, atom);
        let e_2k = cis(2.0 * k * xi);
        // e^{i(k+q)ξ} = e^{2ikξ} e^{i(q−k)ξ}, e^{i(k−q)ξ} = e^{−i(q−k)ξ}
        let e_plus = e_2k * exp_i(dq * xi);
        let e_minus = exp_i(-dq * xi);
        (-g * g * e_2k / d, -2.0 * i * k * g * e_plus / d, -2.0 * i * k * g * e_minus / d)
    };

    let amps = ChannelAmplitudes {
        kind: LayoutKind::Single,
        k,
        q,
        reflect_ground: r11,
        transmit_ground: four_kq / d,
        reflect_excited: r12,
        transmit_excited: t12,
        lossless: atom.gamma() == 0.0,
        open_excited: open_channel(atom, q),
    };
    if !amps.is_finite() {
        return Err(Error::NumericalFailure(format!("non-finite single-delta amplitudes at k={k}")));
    }
    Ok(amps)
}

/// Amplitudes for two equal delta lasers at `first` and `first + L`.
pub fn double_delta(k: f64, atom: &AtomSpec, layout: &FieldLayout) -> Result<ChannelAmplitudes> {
    check_atom_inputs(k, layout)?;
    let (first, sep) = match layout.positions() {
        FieldPositions::Double { first, separation } => (first, separation),
        FieldPositions::Single(_) => {
            return Err(Error::invalid("double_delta requires a two-field layout"));
        }
    };
    let q = excited_wavenumber(k, atom)?;
    let g = atom.coupling_wavenumber(layout.strength());
    let g2 = g * g;
    let kq = k * q;
    let i = C64::new(0.0, 1.0);
    let dq = wavenumber_offset(k, q, atom);

    let e_k = cis(k * sep);
    let e_q = e_k * exp_i(dq * sep);
    let e_kq = e_k * e_q;
    let e_2k_m1 = exp_i_m1(C64::new(2.0 * k * sep, 0.0));
    let e_2q_m1 = exp_i_m1(2.0 * q * sep);
    let both_m1 = e_2k_m1 * e_2q_m1;

    let denom = 16.0 * kq * kq + 8.0 * kq * g2 * (1.0 + e_kq) + g2 * g2 * both_m1;
    let r11 = -g2 * (4.0 * kq * (1.0 + e_k * e_k + 2.0 * e_kq) + g2 * both_m1) / denom;
    let r12 = -2.0 * i * k * g * (4.0 * kq * (1.0 + e_kq) + g2 * both_m1) / denom;
    let t11 = 4.0 * kq * (4.0 * kq + 2.0 * i * g2 * e_q * (k * sep).sin()) / denom;
    // e^{−iqL}(e^{ikL} + e^{iqL}) = e^{−i(q−k)L} + 1
    let t12 = -8.0 * i * k * kq * g * (exp_i(-dq * sep) + 1.0) / denom;

    let (r11, r12, t12) = if first == 0.0 {
        (r11, r12, t12)
    } else {
        let e_2k = cis(2.0 * k * first);
        (r11 * e_2k, r12 * e_2k * exp_i(dq * first), t12 * exp_i(-dq * first))
    };

    let amps = ChannelAmplitudes {
        kind: LayoutKind::Double,
        k,
        q,
        reflect_ground: r11,
        transmit_ground: t11,
        reflect_excited: r12,
        transmit_excited: t12,
        lossless: atom.gamma() == 0.0,
        open_excited: open_channel(atom, q),
    };
    if !amps.is_finite() {
        return Err(Error::NumericalFailure(format!("non-finite double-delta amplitudes at k={k}")));
    }
    Ok(amps)
}

/// Dispatches on the layout.
pub fn amplitudes(k: f64, atom: &AtomSpec, layout: &FieldLayout) -> Result<ChannelAmplitudes> {
    if layout.is_double() {
        double_delta(k, atom, layout)
    } else {
        single_delta(k, atom, layout)
    }
}

pub fn channel_probabilities(amps: &ChannelAmplitudes) -> ChannelProbabilities {
    let (refl_x, trans_x) = if amps.open_excited {
        let flux = amps.q.re / amps.k;
        (flux * amps.reflect_excited.norm_sqr(), flux * amps.transmit_excited.norm_sqr())
    } else {
        (0.0, 0.0)
    };
    ChannelProbabilities {
        reflection_ground: amps.reflect_ground.norm_sqr(),
        transmission_ground: amps.transmit_ground.norm_sqr(),
        reflection_excited: refl_x,
        transmission_excited: trans_x,
        open_excited_channel: amps.open_excited,
    }
}

/// 1 − |r11|² − |t11|² − (q/k)(|r12|² + |t12|²) for lossless atoms. The
/// excited terms are dropped when the channel is closed.
pub fn unitarity_deficit(amps: &ChannelAmplitudes) -> Result<f64> {
    if !amps.lossless {
        return Err(Error::regime(
            "unitarity_deficit requires gamma = 0; with decay use absorption_probability",
        ));
    }
    let p = channel_probabilities(amps);
    Ok(1.0 - p.reflection_ground - p.transmission_ground - p.reflection_excited - p.transmission_excited)
}

/// B(k) = 1 − |r11|² − |t11|²: probability that a plane wave leaves the
/// ground channel.
pub fn absorption_probability(k: f64, atom: &AtomSpec, layout: &FieldLayout) -> Result<f64> {
    let a = amplitudes(k, atom, layout)?;
    Ok(1.0 - a.ground_probability())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HBAR, RB87_MASS};

    const U: f64 = 1.0;

    fn rb(gamma: f64, delta: f64) -> AtomSpec {
        AtomSpec::rubidium(gamma, delta).unwrap()
    }

    /// k for a given κ = 2v/u.
    fn k_of_kappa(kappa: f64) -> f64 {
        RB87_MASS * U * kappa / (2.0 * HBAR)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn no_field_is_transparent() {
        let layout = FieldLayout::single(0.0, 0.3e-6).unwrap();
        let a = single_delta(1e8, &rb(1e6, 3.0), &layout).unwrap();
        assert_eq!(a.transmit_ground, C64::new(1.0, 0.0));
        assert_eq!(a.reflect_ground.norm(), 0.0);
        assert_eq!(a.reflect_excited.norm(), 0.0);
        assert_eq!(a.transmit_excited.norm(), 0.0);

        let layout = FieldLayout::double(0.0, 0.0, 1e-6).unwrap();
        let a = double_delta(1e8, &rb(0.0, 3.0), &layout).unwrap();
        assert!(close(a.transmit_ground, C64::new(1.0, 0.0), 1e-15));
        assert_eq!(a.reflect_ground.norm() + a.reflect_excited.norm() + a.transmit_excited.norm(), 0.0);
    }

    #[test]
    fn excitation_maximum_at_half_strength_velocity() {
        let layout = FieldLayout::single(U, 0.0).unwrap();
        let a = single_delta(k_of_kappa(1.0), &rb(0.0, 0.0), &layout).unwrap();
        assert!(close(a.reflect_ground, C64::new(-0.5, 0.0), 1e-15));
        assert!(close(a.transmit_ground, C64::new(0.5, 0.0), 1e-15));
        assert!(close(a.transmit_excited, C64::new(0.0, -0.5), 1e-15));
        assert!(close(a.reflect_excited, C64::new(0.0, -0.5), 1e-15));
        let p = channel_probabilities(&a);
        for v in [p.reflection_ground, p.transmission_ground, p.reflection_excited, p.transmission_excited] {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn velocity_equal_to_strength() {
        let layout = FieldLayout::single(U, 0.0).unwrap();
        let a = single_delta(k_of_kappa(2.0), &rb(0.0, 0.0), &layout).unwrap();
        assert!(close(a.reflect_ground, C64::new(-0.2, 0.0), 1e-15));
        assert!(close(a.transmit_ground, C64::new(0.8, 0.0), 1e-15));
        assert!(close(a.transmit_excited, C64::new(0.0, -0.4), 1e-15));
    }

    #[test]
    fn double_delta_half_wave_separation() {
        let k = k_of_kappa(2.0);
        let layout = FieldLayout::double(U, 0.0, std::f64::consts::PI / k).unwrap();
        let a = double_delta(k, &rb(0.0, 0.0), &layout).unwrap();
        assert!(close(a.transmit_excited, C64::new(0.0, -0.5), 1e-12), "{}", a.transmit_excited);
        assert!((a.transmit_excited.norm_sqr() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn coalesced_double_delta_equals_doubled_single() {
        for kappa in [1e-3, 0.1, 1.0, 7.0, 1e3] {
            let k = k_of_kappa(kappa);
            for atom in [rb(0.0, 0.0), rb(3e9, -2e8), rb(0.0, 5e8)] {
                let d = double_delta(k, &atom, &FieldLayout::double(U, 0.0, 0.0).unwrap()).unwrap();
                let s = single_delta(k, &atom, &FieldLayout::single(2.0 * U, 0.0).unwrap()).unwrap();
                assert!(close(d.reflect_ground, s.reflect_ground, 1e-10));
                assert!(close(d.transmit_ground, s.transmit_ground, 1e-10));
                assert!(close(d.reflect_excited, s.reflect_excited, 1e-10));
                assert!(close(d.transmit_excited, s.transmit_excited, 1e-10));
            }
        }
    }

    #[test]
    fn position_shift_is_a_phase() {
        let atom = rb(2e9, 1e8);
        let k = k_of_kappa(1.3);
        let a0 = single_delta(k, &atom, &FieldLayout::single(U, 0.0).unwrap()).unwrap();
        let xi = 3.7e-8;
        let a1 = single_delta(k, &atom, &FieldLayout::single(U, xi).unwrap()).unwrap();
        assert!(close(a1.reflect_ground, a0.reflect_ground * cis(2.0 * k * xi), 1e-14));
        assert!(close(a1.transmit_ground, a0.transmit_ground, 1e-15));
        let ph = exp_i((k + a0.q) * xi);
        assert!(close(a1.reflect_excited, a0.reflect_excited * ph, 1e-12 * a0.reflect_excited.norm()));
        assert_eq!(channel_probabilities(&a0).transmission_ground, channel_probabilities(&a1).transmission_ground);

        let d0 = double_delta(k, &atom, &FieldLayout::double(U, 0.0, 2e-7).unwrap()).unwrap();
        let d1 = double_delta(k, &atom, &FieldLayout::double(U, xi, 2e-7).unwrap()).unwrap();
        assert!(close(d1.reflect_ground, d0.reflect_ground * cis(2.0 * k * xi), 1e-14));
        assert!(close(d1.transmit_ground, d0.transmit_ground, 1e-15));
        let expect = d0.transmit_excited.norm() * (a0.q.im * xi).exp();
        assert!((d1.transmit_excited.norm() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn closed_channel_is_flagged() {
        let k = k_of_kappa(1.0);
        let dcr = crate::model::critical_detuning(k, &rb(0.0, 0.0)).unwrap();
        let a = single_delta(k, &rb(0.0, 2.0 * dcr), &FieldLayout::single(U, 0.0).unwrap()).unwrap();
        let p = channel_probabilities(&a);
        assert!(!p.open_excited_channel);
        assert_eq!(p.reflection_excited, 0.0);
        assert_eq!(p.transmission_excited, 0.0);
        assert!(a.transmit_excited.norm() > 0.0);
        // evanescent excitation carries no flux: ground probabilities sum to one
        assert!(unitarity_deficit(&a).unwrap().abs() < 1e-14);
    }

    #[test]
    fn critical_detuning_tie_break() {
        let k = k_of_kappa(1.0);
        let dcr = crate::model::critical_detuning(k, &rb(0.0, 0.0)).unwrap();
        let a = single_delta(k, &rb(0.0, dcr), &FieldLayout::single(U, 0.0).unwrap()).unwrap();
        assert!(!a.open_excited);
        assert!(a.q.norm() < 1e-6 * k);
        // d = g² when q = 0
        assert!(close(a.reflect_ground, C64::new(-1.0, 0.0), 1e-6));
    }

    #[test]
    fn fast_atoms_pass_unperturbed() {
        let a = single_delta(k_of_kappa(200.0), &rb(0.0, 0.0), &FieldLayout::single(U, 0.0).unwrap()).unwrap();
        assert!(channel_probabilities(&a).transmission_ground > 0.999);
    }

    #[test]
    fn unitarity_with_large_detuning() {
        let g = RB87_MASS * U / HBAR;
        let delta = 10.0 * RB87_MASS * U * U / HBAR;
        let atom = rb(0.0, delta);
        let k = k_of_kappa(1.0);
        let a = single_delta(k, &atom, &FieldLayout::single(U, 0.0).unwrap()).unwrap();
        assert!(unitarity_deficit(&a).unwrap().abs() < 1e-12);
        let d = double_delta(k, &atom, &FieldLayout::double(U, 0.0, 4.0 / g).unwrap()).unwrap();
        assert!(unitarity_deficit(&d).unwrap().abs() < 1e-12);
    }

    #[test]
    fn deficit_is_regime_error_with_decay() {
        let a = single_delta(1e8, &rb(1.0, 0.0), &FieldLayout::single(U, 0.0).unwrap()).unwrap();
        assert!(matches!(unitarity_deficit(&a), Err(Error::Regime(_))));
        let z = single_delta(1e8, &rb(0.0, 0.0), &FieldLayout::single(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(unitarity_deficit(&z).unwrap(), 0.0);
    }

    #[test]
    fn absorption_closed_form_lossless_resonant() {
        let layout = FieldLayout::single(U, 0.0).unwrap();
        for kappa in [0.01, 0.3, 1.0, 2.5, 40.0] {
            let b = absorption_probability(k_of_kappa(kappa), &rb(0.0, 0.0), &layout).unwrap();
            let expect = 2.0 * kappa * kappa / (kappa * kappa + 1.0).powi(2);
            assert!((b - expect).abs() < 1e-14, "kappa={kappa}: {b} vs {expect}");
        }
        assert_eq!(absorption_probability(1e8, &rb(1e9, 0.0), &FieldLayout::single(0.0, 0.0).unwrap()).unwrap(), 0.0);
        let lo = absorption_probability(k_of_kappa(1e-5), &rb(0.0, 0.0), &layout).unwrap();
        let hi = absorption_probability(k_of_kappa(1e5), &rb(0.0, 0.0), &layout).unwrap();
        assert!(lo < 1e-9 && hi < 1e-9);
    }

    #[test]
    fn absorption_with_decay_matches_excited_flux_form() {
        // with γ > 0, B = (Re q / k)(|r12|² + |t12|²) for one field
        let layout = FieldLayout::single(U, 0.0).unwrap();
        let atom = rb(10.0 * RB87_MASS * U * U / HBAR, 0.0);
        for kappa in [0.1, 1.0, 5.0] {
            let k = k_of_kappa(kappa);
            let a = single_delta(k, &atom, &layout).unwrap();
            let b = absorption_probability(k, &atom, &layout).unwrap();
            let flux = a.q.re / k * (a.reflect_excited.norm_sqr() + a.transmit_excited.norm_sqr());
            assert!((b - flux).abs() < 1e-13, "{b} vs {flux}");
            assert!(b > 0.0 && b < 1.0);
        }
    }

    #[test]
    fn wrong_layout_rejected() {
        let atom = rb(0.0, 0.0);
        assert!(single_delta(1e8, &atom, &FieldLayout::double(U, 0.0, 1e-6).unwrap()).is_err());
        assert!(double_delta(1e8, &atom, &FieldLayout::single(U, 0.0).unwrap()).is_err());
        assert!(single_delta(-1.0, &atom, &FieldLayout::single(U, 0.0).unwrap()).is_err());
    }

    #[test]
    fn large_separation_phases_stay_unitary() {
        let k = k_of_kappa(3.0);
        let layout = FieldLayout::double(U, 0.0, 1e6 / k).unwrap();
        let a = double_delta(k, &rb(0.0, 1e3), &layout).unwrap();
        assert!(unitarity_deficit(&a).unwrap().abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sub_unitary_with_decay(log_kappa in -3f64..3.0, gamma_scaled in 1e-3f64..1e3, det in -5f64..5.0) {
                let scale = RB87_MASS * U * U / HBAR;
                let atom = rb(gamma_scaled * scale, det * scale);
                let k = k_of_kappa(10f64.powf(log_kappa));
                for layout in [FieldLayout::single(U, 0.0).unwrap(), FieldLayout::double(U, 0.0, 3.0e-9).unwrap()] {
                    let a = amplitudes(k, &atom, &layout).unwrap();
                    prop_assert!(a.reflect_ground.norm() <= 1.0 + 1e-12);
                    prop_assert!(a.transmit_ground.norm() <= 1.0 + 1e-12);
                    let b = 1.0 - a.ground_probability();
                    prop_assert!(b > 0.0 && b < 1.0, "B = {}", b);
                }
            }

            #[test]
            fn probabilities_are_scale_covariant(kappa in 0.01f64..50.0, gam in 0f64..20.0, det in -3f64..3.0, lam in 0.1f64..20.0) {
                // the same dimensionless point realised with two different masses and strengths
                let eval = |mass: f64, u: f64| {
                    let time = HBAR / (mass * u * u);
                    let length = HBAR / (mass * u);
                    let atom = AtomSpec::new(mass, gam / time, det / time).unwrap();
                    let k = kappa / (2.0 * length);
                    let layout = FieldLayout::double(u, 0.0, lam * length).unwrap();
                    let a = double_delta(k, &atom, &layout).unwrap();
                    (a.reflect_ground.norm_sqr(), a.transmit_ground.norm_sqr(), a.transmit_excited.norm_sqr())
                };
                let (a1, b1, c1) = eval(RB87_MASS, 1.0);
                let (a2, b2, c2) = eval(1.0e-26, 0.03);
                let rel = |x: f64, y: f64| (x - y).abs() <= 1e-10 * x.abs().max(y.abs()).max(1e-300);
                prop_assert!(rel(a1, a2) && rel(b1, b2) && rel(c1, c2));
            }
        }
    }
}
