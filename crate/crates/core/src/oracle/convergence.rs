//! Empirical convergence orders of the oracles against the closed forms.

use rayon::prelude::*;

use crate::amplitudes::{double_delta, single_delta, ChannelAmplitudes};
use crate::detection::TimeGrid;
use crate::error::{Error, Result};
use crate::model::{AtomSpec, FieldLayout};
use crate::wavepacket::{gaussian_free_analytic, GaussianPacketSpec, SpinorSample};

use super::barrier::{double_square_barrier_amplitudes, square_barrier_amplitudes, SquareBarrierSpec};
use super::grid::{propagate_grid, GridPropagatorSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub parameter: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub label: String,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of ln(error) against ln(parameter).
    pub order: f64,
    /// Errors decrease strictly as the parameter shrinks.
    pub monotone: bool,
}

/// Evaluates `error` on each rung of `ladder` and fits the order.
pub fn convergence_study(
    label: impl Into<String>,
    ladder: &[f64],
    error: impl Fn(f64) -> Result<f64> + Sync,
) -> Result<ConvergenceTable> {
    if ladder.len() < 3 {
        return Err(Error::invalid(format!("convergence ladder needs at least 3 rungs, got {}", ladder.len())));
    }
    let increasing = ladder.windows(2).all(|w| w[1] > w[0]);
    let decreasing = ladder.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) || ladder.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::invalid("convergence ladder must be positive and strictly monotone"));
    }
    let errors = ladder.par_iter().map(|&p| error(p)).collect::<Result<Vec<_>>>()?;
    let rows: Vec<ConvergenceRow> =
        ladder.iter().zip(&errors).map(|(&parameter, &error)| ConvergenceRow { parameter, error }).collect();
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| b.parameter.total_cmp(&a.parameter));
    let monotone = sorted.windows(2).all(|w| w[1].error < w[0].error);
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.error > 0.0).map(|r| (r.parameter.ln(), r.error.ln())).collect();
    let order = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    Ok(ConvergenceTable { label: label.into(), rows, order, monotone })
}

/// Largest componentwise relative difference. Components smaller than
/// 1e-12 of the largest one are measured against the largest.
pub fn componentwise_relative_error(approx: &ChannelAmplitudes, exact: &ChannelAmplitudes) -> f64 {
    let pairs = [
        (approx.reflect_ground, exact.reflect_ground),
        (approx.transmit_ground, exact.transmit_ground),
        (approx.reflect_excited, exact.reflect_excited),
        (approx.transmit_excited, exact.transmit_excited),
    ];
    let scale = pairs.iter().map(|p| p.1.norm()).fold(0.0, f64::max);
    pairs.iter().map(|(a, b)| (a - b).norm() / b.norm().max(1e-12 * scale)).fold(0.0, f64::max)
}

/// Square barriers of the given widths with Ωl = u against the delta
/// amplitudes, one field at 0 or two separated by `separation`.
pub fn delta_limit_study(
    k: f64,
    atom: &AtomSpec,
    u: f64,
    separation: Option<f64>,
    widths: &[f64],
) -> Result<ConvergenceTable> {
    let (exact, label) = match separation {
        None => (single_delta(k, atom, &FieldLayout::single(u, 0.0)?)?, "square barrier -> single delta"),
        Some(l) => (double_delta(k, atom, &FieldLayout::double(u, 0.0, l)?)?, "square barriers -> double delta"),
    };
    convergence_study(label, widths, |w| {
        let spec = SquareBarrierSpec::for_strength(u, w, 0.0, *atom)?;
        let approx = match separation {
            None => square_barrier_amplitudes(k, &spec)?,
            Some(l) => double_square_barrier_amplitudes(k, &spec, l)?,
        };
        Ok(componentwise_relative_error(&approx, &exact))
    })
}

/// Free Gaussian packet propagated on grids of spacing `dxs` to time `t`;
/// error of the ground amplitude at the classical peak against the closed
/// form.
pub fn free_grid_study(packet: &GaussianPacketSpec, mass: f64, t: f64, dt: f64, dxs: &[f64]) -> Result<ConvergenceTable> {
    let atom = AtomSpec::new(mass, 0.0, 0.0)?;
    let layout = FieldLayout::single(0.0, 0.0)?;
    let base = GridPropagatorSpec::for_packet(packet, mass, &layout, t, dt)?;
    let times = TimeGrid::new(0.0, t, 8)?;
    let peak = packet.x0 + crate::model::HBAR / mass * packet.k0 * t;
    let initial = |x| SpinorSample {
        ground: gaussian_free_analytic(packet, mass, x, 0.0),
        excited: num_complex::Complex64::new(0.0, 0.0),
    };
    convergence_study("grid dx -> free packet", dxs, |dx| {
        let run = propagate_grid(initial, &GridPropagatorSpec { dx, ..base }, &atom, &layout, &times)?;
        let j = run
            .x
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - peak).abs().total_cmp(&(b.1 - peak).abs()))
            .map(|(j, _)| j)
            .ok_or_else(|| Error::NumericalFailure("empty grid".into()))?;
        let exact = gaussian_free_analytic(packet, mass, run.x[j], t);
        Ok((run.field[j].ground - exact).norm() / exact.norm())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HBAR, RB87_MASS};
    use std::f64::consts::PI;

    fn k_of_kappa(kappa: f64) -> f64 {
        RB87_MASS * kappa / (2.0 * HBAR)
    }

    fn halvings(start: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| start / 2f64.powi(i as i32)).collect()
    }

    #[test]
    fn short_ladders_are_rejected() {
        assert!(convergence_study("x", &[1.0, 0.5], |p| Ok(p)).is_err());
        assert!(convergence_study("x", &[1.0, 0.5, 0.7], |p| Ok(p)).is_err());
        let t = convergence_study("x", &[1.0, 0.5, 0.25], |p| Ok(3.0 * p * p)).unwrap();
        assert!((t.order - 2.0).abs() < 1e-12 && t.monotone);
        let t = convergence_study("x", &[1.0, 0.5, 0.25], |p| Ok(1.0 / p)).unwrap();
        assert!(!t.monotone);
    }

    #[test]
    fn square_barriers_approach_every_delta_amplitude() {
        for atom in [AtomSpec::rubidium(0.0, 0.0).unwrap(), AtomSpec::rubidium(3e7, -1e7).unwrap()] {
            let k = k_of_kappa(1.0);
            let lambda = 2.0 * PI / k;
            let single = delta_limit_study(k, &atom, 1.0, None, &halvings(lambda / 40.0, 4)).unwrap();
            let double = delta_limit_study(k, &atom, 1.0, Some(PI / k), &halvings(lambda / 40.0, 4)).unwrap();
            for t in [single, double] {
                assert!(t.order >= 0.8 && t.monotone, "{t:?}");
                assert!(t.rows.last().unwrap().error < 1e-2, "{t:?}");
            }
        }
    }

    #[test]
    fn free_grid_is_second_order() {
        let k0 = RB87_MASS * 0.5 / HBAR;
        let p = GaussianPacketSpec::new(k0, 0.1 * k0, -10.0 / (0.1 * k0)).unwrap();
        let w0 = 0.5 * HBAR / RB87_MASS * k0 * k0;
        let dx = 2.0 * PI / ((k0 + 0.4 * k0) * 40.0);
        let t = convergence_study("x", &[1.0, 2.0, 3.0], |p| Ok(p)).unwrap();
        assert!((t.order - 1.0).abs() < 1e-12);
        let t = free_grid_study(&p, RB87_MASS, 20.0 / w0, 0.01 / w0, &halvings(dx, 2)).unwrap();
        assert!((t.order - 2.0).abs() < 0.3 && t.monotone, "{t:?}");
    }
}
