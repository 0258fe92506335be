use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde_json::{json, Value as Json};

use deltalaser_core::amplitudes::{amplitudes, channel_probabilities};
use deltalaser_core::detection::{
    first_photon_density, flux, ideal_density, ideal_ked, kijowski, normalized_rate, occupation_rate,
    op_normalized_positive, op_normalized_rivier, TimeGrid, TimeSeries,
};
use deltalaser_core::ladder::{run_ladder, strictly_decreasing, IdealLimit, LadderSpec};
use deltalaser_core::model::{AtomSpec, FieldLayout, HBAR};
use deltalaser_core::oracle::{
    delta_limit_study, free_grid_study, propagate_grid_extrapolated, relative_l1, ConvergenceTable, ReferenceScenario,
};
use deltalaser_core::ramsey::{fringe_report, fringe_scan, max_relative_deviation, FringeKind, FringeReport, RamseyParams};
use deltalaser_core::wavepacket::{make_gaussian, ConditionalEvolution, GaussianPacketSpec, KGrid, Packet};

use crate::config::{Command, ConfigError, RunConfig};
use crate::output::{column, Column, Output, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] deltalaser_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use deltalaser_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Core(E::InvalidInput(_)) => 2,
            CliError::Core(E::Regime(_) | E::ScalingUndefined) => 3,
            CliError::Core(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command, cfg: &RunConfig) -> Result<Output> {
    match command {
        Command::Amplitudes => cmd_amplitudes(cfg),
        Command::Ramsey => cmd_ramsey(cfg),
        Command::Detection => cmd_detection(cfg),
        Command::Oracle => cmd_oracle(cfg),
    }
}

fn summary(pairs: impl IntoIterator<Item = (&'static str, Json)>) -> BTreeMap<String, Json> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn layout_from(cfg: &RunConfig, double_default: impl Fn() -> f64) -> Result<FieldLayout> {
    let u = cfg.number("strength");
    Ok(match cfg.choice("layout", &["single", "double"])? {
        "single" => FieldLayout::single(u, 0.0)?,
        _ => {
            let sep = cfg.number("separation");
            FieldLayout::double(u, 0.0, if sep == 0.0 { double_default() } else { sep })?
        }
    })
}

pub fn cmd_amplitudes(cfg: &RunConfig) -> Result<Output> {
    let atom = AtomSpec::new(cfg.number("mass"), cfg.number("gamma"), cfg.number("delta"))?;
    let layout = layout_from(cfg, || 1e-6)?;
    let (lo, hi, n) = (cfg.number("velocity_min"), cfg.number("velocity_max"), cfg.count("points"));
    if !(lo > 0.0 && hi > lo) {
        return Err(cfg.invalid("velocity_min", "need 0 < velocity_min < velocity_max").into());
    }
    if n < 2 {
        return Err(cfg.invalid("points", "need at least 2 points").into());
    }
    let log = cfg.choice("spacing", &["log", "linear"])? == "log";
    let velocities: Vec<f64> = (0..n)
        .map(|i| {
            let f = i as f64 / (n - 1) as f64;
            if log {
                lo * (hi / lo).powf(f)
            } else {
                lo + f * (hi - lo)
            }
        })
        .collect();
    let rows = velocities
        .par_iter()
        .map(|&v| -> deltalaser_core::Result<Vec<f64>> {
            let p = channel_probabilities(&amplitudes(atom.wavenumber(v), &atom, &layout)?);
            let deficit =
                1.0 - p.transmission_ground - p.reflection_ground - p.reflection_excited - p.transmission_excited;
            Ok(vec![v, p.transmission_ground, p.reflection_ground, p.reflection_excited, p.transmission_excited, deficit])
        })
        .collect::<deltalaser_core::Result<Vec<_>>>()?;
    let mut table = Table::new(vec![
        column("v", "m/s", "incident velocity"),
        column("t11_sq", "1", "|t11|^2, ground transmission"),
        column("r11_sq", "1", "|r11|^2, ground reflection"),
        column("r12_flux", "1", "(q/k)|r12|^2, excited reflection (0 when the channel is closed or decaying)"),
        column("t12_flux", "1", "(q/k)|t12|^2, excited transmission (0 when the channel is closed or decaying)"),
        column("deficit", "1", "1 minus the four columns; unitarity deficit for gamma = 0, loss by decay otherwise"),
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    let peak = |col: usize| {
        let best = table.rows.iter().max_by(|a, b| a[col].total_cmp(&b[col])).unwrap();
        json!({ "v_m_per_s": best[0], "value": best[col] })
    };
    let max_deficit = table.rows.iter().map(|r| r[5].abs()).fold(0.0, f64::max);
    let summary = summary([
        ("peak_r12_flux", peak(3)),
        ("peak_t12_flux", peak(4)),
        ("max_abs_deficit", json!(max_deficit)),
    ]);
    Ok(Output { table, report: None, summary })
}

fn report_json(r: &FringeReport) -> Json {
    json!({
        "peak_positions_rad_per_s": r.peak_positions,
        "peak_heights": r.peak_heights,
        "central_shift_rad_per_s": r.central_shift,
        "width_rad_per_s": r.width,
        "mean_peak_spacing_rad_per_s": r.mean_peak_spacing,
        "resonance_regime": r.resonance_regime,
    })
}

pub fn cmd_ramsey(cfg: &RunConfig) -> Result<Output> {
    let v = cfg.number("velocity");
    if !(v > 0.0) {
        return Err(cfg.invalid("velocity", "must be > 0").into());
    }
    let params = RamseyParams::with_crossing_time(cfg.number("mass"), v, cfg.number("strength"), cfg.number("crossing_time"));
    let fringes = cfg.number("fringes");
    if !(params.separation > 0.0 && fringes > 0.0) {
        return Err(cfg.invalid("crossing_time", "crossing_time and fringes must be > 0").into());
    }
    let span = fringes * params.fringe_period();
    let n = cfg.count("points");
    let quantum = fringe_scan(&params, (-span, span), n, FringeKind::Quantum)?;
    let classical = fringe_scan(&params, (-span, span), n, FringeKind::Semiclassical)?;
    let mut table = Table::new(vec![
        column("delta", "rad/s", "laser detuning"),
        column("p12_quantum", "1", "excited transmission probability (q/k)|T12|^2"),
        column("p12_semiclassical", "1", "semiclassical Ramsey probability"),
    ]);
    for i in 0..n {
        table.push(vec![quantum.detunings[i], quantum.p12[i], classical.p12[i]]);
    }
    let q = fringe_report(&quantum, &classical)?;
    let s = fringe_report(&classical, &classical)?;
    let deviation = max_relative_deviation(&quantum.p12, &classical.p12);
    let report = json!({
        "quantum": report_json(&q),
        "semiclassical": report_json(&s),
        "fringe_period_rad_per_s": params.fringe_period(),
        "separation_m": params.separation,
        "max_deviation_over_peak": deviation,
    });
    let summary = summary([
        ("central_shift_rad_per_s", json!(q.central_shift)),
        ("resonance_regime", json!(q.resonance_regime)),
        ("max_deviation_over_peak", json!(deviation)),
    ]);
    Ok(Output { table, report: Some(report), summary })
}

const DISTRIBUTIONS: &[(&str, &str)] = &[
    ("first_photon", "first photon density Pi"),
    ("normalized_rate", "Pi divided by its integral"),
    ("on_positive", "operator-normalized Pi with B^-1/2"),
    ("on_rivier", "operator-normalized Pi with B^-1, real part"),
    ("occupation_rate", "dP2/dt, excited occupation rate"),
    ("ideal_density", "ideal density arrival distribution"),
    ("ideal_ked", "ideal kinetic energy density distribution"),
    ("kijowski", "Kijowski distribution"),
    ("flux", "quantum flux"),
];

fn packet_from(cfg: &RunConfig) -> Result<Packet> {
    let mass = cfg.number("mass");
    let k0 = mass * cfg.number("velocity") / HBAR;
    let sigma = cfg.number("spread") * k0;
    let spec = GaussianPacketSpec::new(k0, sigma, -10.0 / sigma)?;
    Ok(make_gaussian(&spec, &KGrid::new(&spec, cfg.count("nodes"), cfg.number("window"))?, mass)?)
}

pub fn cmd_detection(cfg: &RunConfig) -> Result<Output> {
    match cfg.choice("mode", &["distributions", "ladder"])? {
        "distributions" => detection_distributions(cfg),
        _ => detection_ladder(cfg),
    }
}

fn detection_distributions(cfg: &RunConfig) -> Result<Output> {
    let names: Vec<&str> = cfg.text("distributions").split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Err(cfg.invalid("distributions", "no distributions requested").into());
    }
    let mut columns: Vec<Column> = vec![column("t", "s", "time")];
    for name in &names {
        let (key, doc) = DISTRIBUTIONS
            .iter()
            .find(|(k, _)| k == name)
            .ok_or_else(|| cfg.invalid("distributions", format!("unknown distribution `{name}`")))?;
        columns.push(column(key, "1/s", doc));
    }
    let packet = packet_from(cfg)?;
    let grid = TimeGrid::around_arrival(&packet, cfg.count("time_points"))?;
    let atom = AtomSpec::new(cfg.number("mass"), cfg.number("gamma"), cfg.number("delta"))?;
    let layout = FieldLayout::single(cfg.number("strength"), 0.0)?;
    let mut evo: Option<ConditionalEvolution> = None;
    let mut series: Vec<TimeSeries> = Vec::new();
    for name in &names {
        let needs_evo = !matches!(*name, "ideal_density" | "ideal_ked" | "kijowski" | "flux");
        if needs_evo && evo.is_none() {
            evo = Some(ConditionalEvolution::new(&packet, &atom, &layout)?);
        }
        let e = evo.as_ref();
        series.push(match *name {
            "first_photon" => first_photon_density(e.unwrap(), &grid)?,
            "normalized_rate" => normalized_rate(&first_photon_density(e.unwrap(), &grid)?)?,
            "on_positive" => op_normalized_positive(e.unwrap(), &grid)?,
            "on_rivier" => op_normalized_rivier(e.unwrap(), &grid)?,
            "occupation_rate" => occupation_rate(e.unwrap(), &grid)?.rate,
            "ideal_density" => ideal_density(&packet, &grid),
            "ideal_ked" => ideal_ked(&packet, &grid),
            "kijowski" => kijowski(&packet, &grid),
            _ => flux(&packet, &grid),
        });
    }
    let mut table = Table::new(columns);
    for i in 0..grid.len() {
        let mut row = vec![grid.at(i)];
        row.extend(series.iter().map(|s| s.values[i]));
        table.push(row);
    }
    let integrals: BTreeMap<&str, f64> = names.iter().zip(&series).map(|(n, s)| (*n, s.integral())).collect();
    let summary = summary([
        ("integrals", json!(integrals)),
        ("time_start_s", json!(grid.start())),
        ("time_end_s", json!(grid.end())),
    ]);
    Ok(Output { table, report: None, summary })
}

fn detection_ladder(cfg: &RunConfig) -> Result<Output> {
    let limit = IdealLimit::from_name(cfg.text("limit")).ok_or_else(|| {
        let names: Vec<&str> = IdealLimit::ALL.iter().map(|l| l.name()).collect();
        cfg.invalid("limit", format!("`{}` is not one of {}", cfg.text("limit"), names.join(", ")))
    })?;
    let spec = LadderSpec {
        limit,
        mass: cfg.number("mass"),
        velocity: cfg.number("velocity"),
        spread: cfg.number("spread"),
        depths: cfg.list("depths").to_vec(),
        nodes: cfg.count("nodes"),
        time_points: cfg.count("time_points"),
    };
    let rungs = run_ladder(&spec)?;
    let mut table = Table::new(vec![
        column("depth", "1", "ladder depth c"),
        column("gamma", "rad/s", "decay rate"),
        column("delta", "rad/s", "detuning"),
        column("strength", "m/s", "laser strength u"),
        column("distance", "1", "L1 distance to the ideal distribution"),
    ]);
    for r in &rungs {
        table.push(vec![r.depth, r.atom.gamma(), r.atom.delta(), r.strength, r.distance]);
    }
    let monotone = strictly_decreasing(&rungs);
    let report = json!({
        "limit": limit.name(),
        "distances": rungs.iter().map(|r| r.distance).collect::<Vec<_>>(),
        "strictly_decreasing": monotone,
    });
    Ok(Output { table, report: Some(report), summary: summary([("strictly_decreasing", json!(monotone))]) })
}

fn halvings(start: f64, rungs: usize) -> Vec<f64> {
    (0..rungs).map(|i| start / 2f64.powi(i as i32)).collect()
}

fn convergence_output(t: ConvergenceTable, parameter: Column) -> Output {
    let mut table = Table::new(vec![parameter, column("error", "1", "error against the closed form")]);
    for r in &t.rows {
        table.push(vec![r.parameter, r.error]);
    }
    let report = json!({ "label": t.label, "order": t.order, "monotone": t.monotone });
    let summary = summary([("order", json!(t.order)), ("monotone", json!(t.monotone))]);
    Output { table, report: Some(report), summary }
}

pub fn cmd_oracle(cfg: &RunConfig) -> Result<Output> {
    let mass = cfg.number("mass");
    let k = mass * cfg.number("velocity") / HBAR;
    if !(k > 0.0) {
        return Err(cfg.invalid("velocity", "must be > 0").into());
    }
    let auto = |key: &str, fallback: f64| {
        let v = cfg.number(key);
        if v == 0.0 {
            fallback
        } else {
            v
        }
    };
    match cfg.choice("study", &["delta_limit", "grid", "reference"])? {
        "delta_limit" => {
            let atom = AtomSpec::new(mass, cfg.number("gamma"), cfg.number("delta"))?;
            let layout = layout_from(cfg, || PI / k)?;
            let widths = halvings(auto("width_start", 2.0 * PI / k / 40.0), cfg.count("rungs"));
            let t = delta_limit_study(k, &atom, layout.strength(), layout.separation(), &widths)?;
            Ok(convergence_output(t, column("width", "m", "square barrier width l, with Omega l = u")))
        }
        "grid" => {
            let sigma = cfg.number("spread") * k;
            let packet = GaussianPacketSpec::new(k, sigma, -10.0 / sigma)?;
            let omega = 0.5 * HBAR / mass * k * k;
            let dx = auto("dx_start", 2.0 * PI / ((k + 4.0 * sigma) * 40.0));
            let t = free_grid_study(
                &packet,
                mass,
                auto("duration", 20.0 / omega),
                auto("dt", 0.01 / omega),
                &halvings(dx, cfg.count("rungs")),
            )?;
            Ok(convergence_output(t, column("dx", "m", "grid spacing")))
        }
        _ => {
            let sc = ReferenceScenario::rubidium()?;
            let packet = make_gaussian(&sc.packet, &KGrid::default_for(&sc.packet)?, sc.atom.mass())?;
            let evo = ConditionalEvolution::new(&packet, &sc.atom, &sc.layout)?;
            let spectral = first_photon_density(&evo, &sc.times)?;
            let run = propagate_grid_extrapolated(sc.initial_state(), &sc.grid_spec(10.0)?, &sc.atom, &sc.layout, &sc.times)?;
            let l1 = relative_l1(&run.rate, &spectral)?;
            let mut table = Table::new(vec![
                column("t", "s", "time"),
                column("pi_grid", "1/s", "first photon density from the extrapolated grid propagator"),
                column("pi_spectral", "1/s", "first photon density from the stationary-state expansion"),
            ]);
            for i in 0..sc.times.len() {
                table.push(vec![sc.times.at(i), run.rate.values[i], spectral.values[i]]);
            }
            let report = json!({ "relative_l1": l1, "grid_nodes": run.x.len() });
            Ok(Output { table, report: Some(report), summary: summary([("relative_l1", json!(l1))]) })
        }
    }
}
