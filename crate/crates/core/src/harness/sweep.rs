//! One-parameter sweeps over a scenario template.
//!
//! A sweep file names a template scenario (relative to the sweep file) and
//! the dotted path to vary:
//!
//! ```toml
//! template = "fig1-right.toml"
//!
//! [sweep]
//! axis = "params.kappa"
//! values = [1.1, 1.5, 2.0, 3.0]
//! ```
//!
//! Other top-level keys in the sweep file override the template.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{apply_overrides, read_toml, set_path, ConfigError, Scenario, ScenarioFile};
use super::run::{check_trajectory, min_v_ratio, simulate};
use crate::model::{State4, Variant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: String,
    #[serde(default)]
    pub values: Vec<toml::Value>,
}

/// A sweep with its template already merged.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub name: String,
    pub template: toml::Value,
    pub spec: SweepSpec,
}

fn merge(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

impl Sweep {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut doc = read_toml(path)?;
        apply_overrides(&mut doc, overrides)?;
        let table = doc
            .as_table_mut()
            .ok_or_else(|| ConfigError::Invalid("sweep file must be a table".into()))?;
        let spec_value = table
            .remove("sweep")
            .ok_or_else(|| ConfigError::Invalid("sweep file has no [sweep] table".into()))?;
        let spec: SweepSpec =
            spec_value
                .try_into()
                .map_err(|e: toml::de::Error| ConfigError::Parse {
                    context: "[sweep]".into(),
                    message: e.message().to_string(),
                })?;
        let mut template = match table.remove("template") {
            Some(toml::Value::String(rel)) => {
                let base = path.parent().unwrap_or(Path::new("."));
                read_toml(&base.join(rel))?
            }
            Some(_) => {
                return Err(ConfigError::Invalid(
                    "template must be a path string".into(),
                ))
            }
            None => toml::Value::Table(toml::Table::new()),
        };
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sweep".into());
        if let toml::Value::Table(t) = &mut template {
            t.insert("name".into(), toml::Value::String(stem.clone()));
        }
        merge(&mut template, doc);
        Ok(Sweep {
            name: stem,
            template,
            spec,
        })
    }

    /// The template scenario as resolved, for echoing.
    pub fn resolved_template(&self) -> Result<ScenarioFile, ConfigError> {
        Ok(Scenario::from_value(self.template.clone(), &self.name)?.resolved())
    }

    /// Builds the scenario for one sweep value.
    ///
    /// A mobility template with `μ = 0` runs as the plain model, since the
    /// mobility right-hand side requires `μ > 0`.
    pub fn point(&self, value: &toml::Value) -> Result<Scenario, ConfigError> {
        let mut doc = self.template.clone();
        set_path(&mut doc, &self.spec.axis, value.clone())?;
        let mut scenario = Scenario::from_value(doc.clone(), &self.name);
        if let Err(ConfigError::Invalid(_)) = &scenario {
            let mobility =
                doc.get("variant").and_then(|v| v.as_str()) == Some(Variant::Mobility.name());
            let mu = doc.get("params").and_then(|p| p.get("mu")).and_then(as_f64);
            if mobility && mu == Some(0.0) {
                set_path(
                    &mut doc,
                    "variant",
                    toml::Value::String(Variant::Handy.name().into()),
                )?;
                scenario = Scenario::from_value(doc, &self.name);
            }
        }
        scenario
    }

    /// Runs every point, in parallel, keeping input order.
    pub fn run(&self) -> Vec<SweepRow> {
        self.spec
            .values
            .par_iter()
            .map(|v| self.run_point(v))
            .collect()
    }

    fn run_point(&self, value: &toml::Value) -> SweepRow {
        let mut row = SweepRow {
            value: value_label(value),
            numeric_value: as_f64(value),
            variant: None,
            t_c_below: None,
            t_e_below: None,
            min_v_ratio: None,
            final_state: None,
            checks_passed: 0,
            checks_total: 0,
            checks_failed: Vec::new(),
            error: None,
        };
        let scenario = match self.point(value) {
            Ok(s) => s,
            Err(e) => {
                row.error = Some(e.to_string());
                return row;
            }
        };
        row.variant = Some(scenario.variant);
        let run = match simulate(&scenario) {
            Ok(r) => r,
            Err(e) => {
                row.error = Some(e.to_string());
                return row;
            }
        };
        row.t_c_below = run.collapse.t_c_below;
        row.t_e_below = run.collapse.t_e_below;
        row.min_v_ratio = min_v_ratio(&run.trajectory);
        row.final_state = run.trajectory.last().map(|s| s.state);
        let report = check_trajectory(&scenario, &run.trajectory);
        row.checks_total = report.checks.len();
        for c in &report.checks {
            match &c.outcome {
                Some(o) if o.passed => row.checks_passed += 1,
                Some(_) => row.checks_failed.push(c.name.to_string()),
                None => row
                    .checks_failed
                    .push(format!("{} (not applicable)", c.name)),
            }
        }
        row
    }
}

fn as_f64(v: &toml::Value) -> Option<f64> {
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
}

fn value_label(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: String,
    pub numeric_value: Option<f64>,
    pub variant: Option<Variant>,
    pub t_c_below: Option<f64>,
    pub t_e_below: Option<f64>,
    pub min_v_ratio: Option<f64>,
    pub final_state: Option<State4>,
    pub checks_passed: usize,
    pub checks_total: usize,
    pub checks_failed: Vec<String>,
    pub error: Option<String>,
}

pub const SWEEP_COLUMNS: [&str; 9] = [
    "value",
    "variant",
    "t_c_below",
    "t_e_below",
    "min_v_ratio",
    "checks_passed",
    "checks_total",
    "checks_failed",
    "error",
];

pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String, csv::Error> {
    let opt = |v: Option<f64>| v.map(super::csv_io::fmt_f64).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.value.clone(),
            r.variant.map(|v| v.name().to_string()).unwrap_or_default(),
            opt(r.t_c_below),
            opt(r.t_e_below),
            opt(r.min_v_ratio),
            r.checks_passed.to_string(),
            r.checks_total.to_string(),
            r.checks_failed.join(";"),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Sweep output record: resolved template plus one row per value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: String,
    pub axis: String,
    pub template: ScenarioFile,
    pub rows: Vec<SweepRow>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    const TEMPLATE: &str = r#"
variant = "mobility"
[params]
nu = 1.67e-5
lambda = 100.0
gamma = 0.01
epsilon = 1e-5
sigma = 5e-4
rho_inv = 5e-3
kappa = 1.5
xi1 = -0.04
xi2 = 0.02
mu = 1e-4
[initial]
b_env = 300.0
b_stor = 0.0
c = 1000.0
e = 1.0
[integration]
dt = 0.5
t_end = 20.0
"#;

    #[test]
    fn rows_follow_input_order_and_zero_mobility_runs_plain() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "base.toml", TEMPLATE);
        let spec = write(
            dir.path(),
            "mu.toml",
            "template = \"base.toml\"\n[sweep]\naxis = \"params.mu\"\nvalues = [1e-4, 0.0, 1e-5, -1.0]\n",
        );
        let sweep = Sweep::load(&spec, &[]).unwrap();
        let rows = sweep.run();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].numeric_value, Some(1e-4));
        assert_eq!(rows[1].variant, Some(Variant::Handy));
        assert_eq!(rows[2].variant, Some(Variant::Mobility));
        assert!(rows[3].error.is_some());
        assert_eq!(sweep.run(), rows);
        let csv = rows_to_csv(&rows).unwrap();
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn empty_sweep_has_no_rows() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "base.toml", TEMPLATE);
        let spec = write(
            dir.path(),
            "none.toml",
            "template = \"base.toml\"\n[sweep]\naxis = \"params.kappa\"\nvalues = []\n",
        );
        assert!(Sweep::load(&spec, &[]).unwrap().run().is_empty());
    }
}
