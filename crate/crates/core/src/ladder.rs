//! Parameter ladders marching an operational detector into the regimes where
//! it reduces to an ideal arrival-time distribution.
//!
//! Every rung keeps the packet (and hence E = mv0²/2) fixed and sets the
//! laser and atom parameters from a depth c:
//!
//! | limit              | detector  | parameters              |
//! |--------------------|-----------|-------------------------|
//! | `DensityFluorescence` | Π_N    | ħγ = cE, mu² = E        |
//! | `KedFluorescence`  | Π_N       | ħγ = cE, mu² = c²E      |
//! | `KijowskiPositive` | Π₁^ON     | ħγ = mu² = cE           |
//! | `FluxRivier`       | Π₂^ON     | ħγ = mu² = cE           |
//! | `DensityOccupation`| dP₂/dt    | mu² = E/c, ħΔ = cE, γ=0 |
//! | `KedOccupation`    | dP₂/dt    | mu² = ħΔ = cE, γ=0      |

use crate::detection::{
    distribution_distance, first_photon_density, flux, ideal_density, ideal_ked, kijowski, normalized_rate,
    occupation_rate, op_normalized_positive, op_normalized_rivier, TimeGrid, TimeSeries,
};
use crate::error::{Error, Result};
use crate::model::{AtomSpec, FieldLayout, HBAR};
use crate::wavepacket::{make_gaussian, ConditionalEvolution, GaussianPacketSpec, KGrid, Packet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IdealLimit {
    DensityFluorescence,
    KedFluorescence,
    KijowskiPositive,
    FluxRivier,
    DensityOccupation,
    KedOccupation,
}

impl IdealLimit {
    pub const ALL: [IdealLimit; 6] = [
        IdealLimit::DensityFluorescence,
        IdealLimit::KedFluorescence,
        IdealLimit::KijowskiPositive,
        IdealLimit::FluxRivier,
        IdealLimit::DensityOccupation,
        IdealLimit::KedOccupation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            IdealLimit::DensityFluorescence => "density_fluorescence",
            IdealLimit::KedFluorescence => "ked_fluorescence",
            IdealLimit::KijowskiPositive => "kijowski_positive",
            IdealLimit::FluxRivier => "flux_rivier",
            IdealLimit::DensityOccupation => "density_occupation",
            IdealLimit::KedOccupation => "ked_occupation",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name() == name)
    }

    /// Atom and laser strength for depth `c` at kinetic energy `energy`.
    pub fn parameters(&self, mass: f64, energy: f64, c: f64) -> Result<(AtomSpec, f64)> {
        let rate = |e: f64| e / HBAR;
        let strength = |e: f64| (e / mass).sqrt();
        let (gamma, delta, mu2) = match self {
            IdealLimit::DensityFluorescence => (rate(c * energy), 0.0, energy),
            IdealLimit::KedFluorescence => (rate(c * energy), 0.0, c * c * energy),
            IdealLimit::KijowskiPositive | IdealLimit::FluxRivier => (rate(c * energy), 0.0, c * energy),
            IdealLimit::DensityOccupation => (0.0, rate(c * energy), energy / c),
            IdealLimit::KedOccupation => (0.0, rate(c * energy), c * energy),
        };
        Ok((AtomSpec::new(mass, gamma, delta)?, strength(mu2)))
    }
}

/// Ladder settings shared by all rungs.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderSpec {
    pub limit: IdealLimit,
    pub mass: f64,
    /// Mean velocity of the packet, m/s.
    pub velocity: f64,
    /// σk/k0.
    pub spread: f64,
    pub depths: Vec<f64>,
    pub nodes: usize,
    pub time_points: usize,
}

impl LadderSpec {
    /// ⁸⁷Rb at 0.5 m/s with σk/k0 = 0.1. Depths 10, 40, 160, or 160, 640,
    /// 2560 for the operator-normalized limits.
    pub fn standard(limit: IdealLimit) -> Self {
        let depths = match limit {
            IdealLimit::KijowskiPositive | IdealLimit::FluxRivier => vec![160.0, 640.0, 2560.0],
            _ => vec![10.0, 40.0, 160.0],
        };
        Self {
            limit,
            mass: crate::model::RB87_MASS,
            velocity: 0.5,
            spread: 0.1,
            depths,
            nodes: KGrid::DEFAULT_NODES,
            time_points: TimeGrid::DEFAULT_POINTS,
        }
    }

    pub fn packet(&self) -> Result<Packet> {
        let k0 = self.mass * self.velocity / HBAR;
        let sigma = self.spread * k0;
        let spec = GaussianPacketSpec::new(k0, sigma, -10.0 / sigma)?;
        make_gaussian(&spec, &KGrid::new(&spec, self.nodes, KGrid::DEFAULT_WINDOW)?, self.mass)
    }

    pub fn energy(&self) -> f64 {
        0.5 * self.mass * self.velocity * self.velocity
    }
}

/// Operational and ideal series at one rung.
#[derive(Debug, Clone)]
pub struct RungResult {
    pub depth: f64,
    pub atom: AtomSpec,
    pub strength: f64,
    pub operational: TimeSeries,
    pub ideal: TimeSeries,
    pub distance: f64,
}

/// Evaluates one rung.
pub fn run_rung(spec: &LadderSpec, packet: &Packet, grid: &TimeGrid, depth: f64) -> Result<RungResult> {
    let (atom, strength) = spec.limit.parameters(spec.mass, spec.energy(), depth)?;
    let layout = FieldLayout::single(strength, 0.0)?;
    let evo = ConditionalEvolution::new(packet, &atom, &layout)?;
    let (operational, ideal) = match spec.limit {
        IdealLimit::DensityFluorescence => {
            (normalized_rate(&first_photon_density(&evo, grid)?)?, normalized_rate(&ideal_density(packet, grid))?)
        }
        IdealLimit::KedFluorescence => {
            (normalized_rate(&first_photon_density(&evo, grid)?)?, normalized_rate(&ideal_ked(packet, grid))?)
        }
        IdealLimit::KijowskiPositive => (op_normalized_positive(&evo, grid)?, kijowski(packet, grid)),
        IdealLimit::FluxRivier => (op_normalized_rivier(&evo, grid)?, flux(packet, grid)),
        IdealLimit::DensityOccupation => {
            (normalized_rate(&occupation_rate(&evo, grid)?.rate)?, normalized_rate(&ideal_density(packet, grid))?)
        }
        IdealLimit::KedOccupation => {
            (normalized_rate(&occupation_rate(&evo, grid)?.rate)?, normalized_rate(&ideal_ked(packet, grid))?)
        }
    };
    let distance = distribution_distance(&operational, &ideal)?;
    Ok(RungResult { depth, atom, strength, operational, ideal, distance })
}

/// Evaluates every rung on a common time grid.
pub fn run_ladder(spec: &LadderSpec) -> Result<Vec<RungResult>> {
    if spec.depths.is_empty() {
        return Err(Error::invalid("ladder has no rungs"));
    }
    let packet = spec.packet()?;
    let grid = TimeGrid::around_arrival(&packet, spec.time_points)?;
    spec.depths.iter().map(|&c| run_rung(spec, &packet, &grid, c)).collect()
}

/// True when the distances decrease strictly along the ladder.
pub fn strictly_decreasing(results: &[RungResult]) -> bool {
    results.windows(2).all(|w| w[1].distance < w[0].distance)
}
