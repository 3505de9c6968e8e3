//! Built-in benchmark configurations, stored as TOML.

use crate::error::{Result, ShellError};

const PRESETS: [(&str, &str); 5] = [
    ("semi_cylinder_6_1", include_str!("../presets/semi_cylinder_6_1.toml")),
    ("hyperboloid_6_2", include_str!("../presets/hyperboloid_6_2.toml")),
    ("arch_strip_6_3", include_str!("../presets/arch_strip_6_3.toml")),
    ("pressurized_cylinder_6_4", include_str!("../presets/pressurized_cylinder_6_4.toml")),
    ("spiral_tube_6_5", include_str!("../presets/spiral_tube_6_5.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset_text(name: &str) -> Result<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| {
        ShellError::ConfigError(format!("unknown preset `{name}`; available: {}", names().collect::<Vec<_>>().join(", ")))
    })
}
