//! Built-in run and study configurations.

use crate::config::{parse_config, RunConfig, StudyConfig};
use crate::error::{Error, Result};

const RUN_PRESETS: &[(&str, &str)] = &[
    ("example_a", include_str!("../presets/example_a.toml")),
    ("example_b", include_str!("../presets/example_b.toml")),
];

const STUDY_PRESETS: &[(&str, &str)] = &[
    ("example_a_desk", include_str!("../presets/example_a_desk.toml")),
    ("example_b_desk", include_str!("../presets/example_b_desk.toml")),
    ("table1_x", include_str!("../presets/table1_x.toml")),
    ("table1_y", include_str!("../presets/table1_y.toml")),
    ("table1_t", include_str!("../presets/table1_t.toml")),
    ("table2_x", include_str!("../presets/table2_x.toml")),
    ("table2_y", include_str!("../presets/table2_y.toml")),
    ("table2_t", include_str!("../presets/table2_t.toml")),
];

pub fn run_preset_names() -> impl Iterator<Item = &'static str> {
    RUN_PRESETS.iter().map(|(n, _)| *n)
}

pub fn study_preset_names() -> impl Iterator<Item = &'static str> {
    STUDY_PRESETS.iter().map(|(n, _)| *n)
}

/// Source text of a run preset.
pub fn run_preset_text(name: &str) -> Option<&'static str> {
    RUN_PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn run_preset(name: &str) -> Result<RunConfig> {
    let text = run_preset_text(name).ok_or_else(|| {
        Error::config(format!(
            "unknown preset '{name}' (available: {})",
            run_preset_names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    parse_config(text)
}

pub fn study_preset(name: &str) -> Result<StudyConfig> {
    let text = STUDY_PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| {
        Error::config(format!(
            "unknown study preset '{name}' (available: {})",
            study_preset_names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    StudyConfig::parse(text)
}

/// Smooth-barrier experiment, `(J, K, M) = (400, 64, 1000)`.
pub fn example_a() -> RunConfig {
    run_preset("example_a").expect("built-in preset is valid")
}

/// Rectangular-barrier experiment, `(J, K, M) = (300, 64, 600)`.
pub fn example_b() -> RunConfig {
    run_preset("example_b").expect("built-in preset is valid")
}
