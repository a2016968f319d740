//! Built-in scenarios, embedded at compile time.

use super::{Scenario, ScenarioError};

pub const PRESETS: &[(&str, &str)] = &[
    ("bipartite", include_str!("../../presets/bipartite.scn")),
    ("line", include_str!("../../presets/line.scn")),
    ("line3", include_str!("../../presets/line3.scn")),
    ("compass", include_str!("../../presets/compass.scn")),
    ("triangle", include_str!("../../presets/triangle.scn")),
    ("triangle-xor", include_str!("../../presets/triangle-xor.scn")),
    ("triangle-hr", include_str!("../../presets/triangle-hr.scn")),
    ("triangle-chsh", include_str!("../../presets/triangle-chsh.scn")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn load(name: &str) -> Result<Scenario, ScenarioError> {
    let t = text(name).ok_or_else(|| ScenarioError::UnknownPreset(name.to_string()))?;
    Scenario::parse(t)
}
