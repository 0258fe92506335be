//! Built-in named configurations.

use crate::config::Command;

pub type Preset = (&'static str, &'static [(&'static str, &'static str)]);

const AMPLITUDES: &[Preset] = &[(
    "fig1",
    &[
        ("scenario", "fig1"),
        ("gamma[rad/s]", "0"),
        ("delta[rad/s]", "100"),
        ("strength[m/s]", "1"),
        ("velocity_min[m/s]", "0.01"),
        ("velocity_max[m/s]", "10"),
        ("points", "2001"),
        ("spacing", "log"),
    ],
)];

const RAMSEY: &[Preset] = &[
    ("fig2a", &[("scenario", "fig2a"), ("velocity[m/s]", "10")]),
    ("fig2b", &[("scenario", "fig2b"), ("velocity[m/s]", "1")]),
    ("fig2c", &[("scenario", "fig2c"), ("velocity[m/s]", "0.5")]),
    ("fig2d", &[("scenario", "fig2d"), ("velocity[m/s]", "0.1")]),
];

const DETECTION: &[Preset] = &[
    (
        "reference",
        &[
            ("scenario", "reference"),
            ("distributions", "first_photon,normalized_rate,on_positive,on_rivier,ideal_density,ideal_ked,kijowski,flux"),
        ],
    ),
    ("ideal_narrow", &[("scenario", "ideal_narrow"), ("spread", "0.01"), ("distributions", "ideal_density,ideal_ked,kijowski,flux")]),
    ("ladder_density_fluorescence", &[("scenario", "ladder_density_fluorescence"), ("mode", "ladder"), ("limit", "density_fluorescence"), ("depths", "10,40,160")]),
    ("ladder_ked_fluorescence", &[("scenario", "ladder_ked_fluorescence"), ("mode", "ladder"), ("limit", "ked_fluorescence"), ("depths", "10,40,160")]),
    ("ladder_kijowski_positive", &[("scenario", "ladder_kijowski_positive"), ("mode", "ladder"), ("limit", "kijowski_positive"), ("depths", "160,640,2560")]),
    ("ladder_flux_rivier", &[("scenario", "ladder_flux_rivier"), ("mode", "ladder"), ("limit", "flux_rivier"), ("depths", "160,640,2560")]),
    ("ladder_density_occupation", &[("scenario", "ladder_density_occupation"), ("mode", "ladder"), ("limit", "density_occupation"), ("depths", "10,40,160")]),
    ("ladder_ked_occupation", &[("scenario", "ladder_ked_occupation"), ("mode", "ladder"), ("limit", "ked_occupation"), ("depths", "10,40,160")]),
];

const ORACLE: &[Preset] = &[
    ("delta_limit", &[("scenario", "delta_limit"), ("study", "delta_limit"), ("layout", "single")]),
    ("delta_limit_double", &[("scenario", "delta_limit_double"), ("study", "delta_limit"), ("layout", "double")]),
    ("grid", &[("scenario", "grid"), ("study", "grid"), ("rungs", "3")]),
    ("reference", &[("scenario", "reference"), ("study", "reference")]),
];

pub fn for_command(command: Command) -> &'static [Preset] {
    match command {
        Command::Amplitudes => AMPLITUDES,
        Command::Ramsey => RAMSEY,
        Command::Detection => DETECTION,
        Command::Oracle => ORACLE,
    }
}
