//! Figure specs: which scenarios to simulate and which CSV columns each
//! plot panel reads.
//!
//! `handy figure-data` runs the listed scenarios and writes their CSVs; a
//! plotting script then renders panels from those files alone. A `y` entry
//! such as `"c+e"` names the sum of CSV columns.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{read_toml, ConfigError};
use super::csv_io::COLUMNS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureScenario {
    pub name: String,
    /// Scenario file, relative to the spec file.
    pub config: String,
    /// CSV file written into the output directory.
    pub csv: String,
    #[serde(default)]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisScale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Panel {
    pub label: String,
    pub csv: String,
    pub x: String,
    pub y: Vec<String>,
    #[serde(default)]
    pub xscale: AxisScale,
    #[serde(default)]
    pub yscale: AxisScale,
    #[serde(default)]
    pub xlabel: Option<String>,
    #[serde(default)]
    pub ylabel: Option<String>,
    #[serde(default)]
    pub title: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Figure {
    pub name: String,
    pub output: String,
    pub rows: usize,
    pub cols: usize,
    #[serde(rename = "panel")]
    pub panels: Vec<Panel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureSpec {
    #[serde(rename = "scenario")]
    pub scenarios: Vec<FigureScenario>,
    #[serde(rename = "figure")]
    pub figures: Vec<Figure>,
}

impl FigureSpec {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let spec: FigureSpec =
            read_toml(path)?
                .try_into()
                .map_err(|e: toml::de::Error| ConfigError::Parse {
                    context: path.display().to_string(),
                    message: e.message().to_string(),
                })?;
        spec.validate()?;
        Ok(spec)
    }

    /// Every panel reads a produced CSV and existing columns, and fits the grid.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        for fig in &self.figures {
            if fig.panels.len() > fig.rows * fig.cols {
                return bad(format!(
                    "figure {}: {} panels do not fit a {}x{} grid",
                    fig.name,
                    fig.panels.len(),
                    fig.rows,
                    fig.cols
                ));
            }
            for p in &fig.panels {
                if !self.scenarios.iter().any(|s| s.csv == p.csv) {
                    return bad(format!(
                        "figure {} panel {}: no scenario writes {}",
                        fig.name, p.label, p.csv
                    ));
                }
                let columns = std::iter::once(&p.x).chain(&p.y).flat_map(|c| c.split('+'));
                for c in columns {
                    if !COLUMNS.contains(&c.trim()) {
                        return bad(format!(
                            "figure {} panel {}: unknown column {c:?}",
                            fig.name, p.label
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn scenario_path(&self, spec_path: &Path, s: &FigureScenario) -> PathBuf {
        spec_path.parent().unwrap_or(Path::new(".")).join(&s.config)
    }
}
