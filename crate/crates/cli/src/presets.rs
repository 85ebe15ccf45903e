//! Built-in sweep documents, kept as JSON under `docs/presets`.

use crate::sweep::SweepSpec;
use crate::{CliError, CliResult};

const FIG2A: &str = include_str!("../../../docs/presets/fig2a.json");
const FIG2B: &str = include_str!("../../../docs/presets/fig2b.json");

pub const NAMES: [&str; 2] = ["fig2a", "fig2b"];

pub fn preset_text(name: &str) -> Option<&'static str> {
    match name {
        "fig2a" => Some(FIG2A),
        "fig2b" => Some(FIG2B),
        _ => None,
    }
}

pub fn preset(name: &str) -> CliResult<SweepSpec> {
    let text = preset_text(name)
        .ok_or_else(|| CliError::usage(format!("unknown preset `{name}` (known: {})", NAMES.join(", "))))?;
    SweepSpec::from_json(text)
}
