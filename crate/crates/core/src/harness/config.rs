//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "fig1-right"
//! variant = "handy"
//!
//! [params]
//! nu = 1.67e-5
//! lambda = 100.0
//! gamma = 0.01          # or { kind = "sinusoid", mean = 0.01, amplitude = 0.5, omega = 0.01 }
//! epsilon = 1e-5
//! sigma = 5e-4
//! rho_inv = 5e-3        # or rho = 200.0
//! kappa = 1.5
//! xi1 = -0.04
//! xi2 = 0.02
//! mu = 1e-4
//!
//! [initial]
//! b_env = 300.0
//! b_stor = 0.0
//! c = 1000.0
//! e = 1.0
//!
//! [integration]
//! dt = 0.1
//! t_end = 2000.0
//! ```
//!
//! Any value can be overridden with a dotted path such as
//! `params.kappa=2.0` before the document is resolved.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::hypotheses::{build_trapping_region, CheckName, CheckSettings, ContractionSettings};
use crate::integrator::IntegrationConfig;
use crate::model::{
    Model, ParamErrors, ParamInput, ParameterSchedule, ParameterSet, State4, TimeFunction, Variant,
};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse {context}: {message}")]
    Parse { context: String, message: String },
    #[error("bad override {0:?}: expected dotted.path=value")]
    Override(String),
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamErrors),
    #[error("{0}")]
    Invalid(String),
}

/// A schedulable parameter: a plain number or a time function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Function(TimeFunction),
}

impl ParamValue {
    fn into_function(self) -> TimeFunction {
        match self {
            ParamValue::Number(v) => TimeFunction::constant(v),
            ParamValue::Function(f) => f,
        }
    }

    fn as_constant(&self) -> Option<f64> {
        match self {
            ParamValue::Number(v) => Some(*v),
            ParamValue::Function(TimeFunction::Constant { value }) => Some(*value),
            ParamValue::Function(_) => None,
        }
    }
}

impl From<TimeFunction> for ParamValue {
    fn from(f: TimeFunction) -> Self {
        match f {
            TimeFunction::Constant { value } => ParamValue::Number(value),
            other => ParamValue::Function(other),
        }
    }
}

/// Parameters as written in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub nu: ParamValue,
    pub lambda: ParamValue,
    pub gamma: ParamValue,
    pub epsilon: ParamValue,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<ParamValue>,
    /// Maximum food distribution rate, `1/ρ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_inv: Option<f64>,
    pub kappa: ParamValue,
    pub xi1: f64,
    pub xi2: f64,
    #[serde(default)]
    pub mu: f64,
}

impl RawParams {
    pub fn resolve(self) -> Result<ParamInput, ConfigError> {
        let rho = match (self.rho, self.rho_inv) {
            (Some(r), None) => r,
            (None, Some(inv)) => ParamValue::Number(1.0 / inv),
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid(
                    "give either params.rho or params.rho_inv, not both".into(),
                ))
            }
            (None, None) => {
                return Err(ConfigError::Invalid(
                    "params.rho_inv (or params.rho) is missing".into(),
                ))
            }
        };
        let constants = [
            self.nu.as_constant(),
            self.lambda.as_constant(),
            self.gamma.as_constant(),
            self.epsilon.as_constant(),
            rho.as_constant(),
            self.kappa.as_constant(),
        ];
        if let [Some(nu), Some(lambda), Some(gamma), Some(epsilon), Some(rho), Some(kappa)] =
            constants
        {
            return Ok(ParamInput::Constant(ParameterSet {
                nu,
                lambda,
                gamma,
                epsilon,
                sigma: self.sigma,
                rho,
                kappa,
                xi1: self.xi1,
                xi2: self.xi2,
                mu: self.mu,
            }));
        }
        Ok(ParamInput::Schedule(ParameterSchedule {
            nu: self.nu.into_function(),
            lambda: self.lambda.into_function(),
            gamma: self.gamma.into_function(),
            epsilon: self.epsilon.into_function(),
            rho: rho.into_function(),
            kappa: self.kappa.into_function(),
            sigma: self.sigma,
            xi1: self.xi1,
            xi2: self.xi2,
            mu: self.mu,
        }))
    }

    /// Fully explicit form; constants are written with `rho_inv`.
    pub fn from_input(input: &ParamInput) -> Self {
        match input {
            ParamInput::Constant(p) => RawParams {
                nu: ParamValue::Number(p.nu),
                lambda: ParamValue::Number(p.lambda),
                gamma: ParamValue::Number(p.gamma),
                epsilon: ParamValue::Number(p.epsilon),
                sigma: p.sigma,
                rho: None,
                rho_inv: Some(p.rho_inv()),
                kappa: ParamValue::Number(p.kappa),
                xi1: p.xi1,
                xi2: p.xi2,
                mu: p.mu,
            },
            ParamInput::Schedule(s) => RawParams {
                nu: s.nu.clone().into(),
                lambda: s.lambda.clone().into(),
                gamma: s.gamma.clone().into(),
                epsilon: s.epsilon.clone().into(),
                sigma: s.sigma,
                rho: Some(s.rho.clone().into()),
                rho_inv: None,
                kappa: s.kappa.clone().into(),
                xi1: s.xi1,
                xi2: s.xi2,
                mu: s.mu,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    /// Output directory; the CLI's `--out` takes precedence.
    pub dir: Option<String>,
    /// File stem; defaults to the scenario name.
    pub stem: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriumSettings {
    /// Starting point for Newton; defaults to the branch relations at `λ/2`.
    pub guess: Option<State4>,
}

/// A scenario file as written, before resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub variant: Option<Variant>,
    pub params: RawParams,
    pub initial: State4,
    #[serde(default)]
    pub integration: IntegrationConfig,
    #[serde(default)]
    pub checks: Option<Vec<CheckName>>,
    #[serde(default)]
    pub check_settings: CheckSettings,
    #[serde(default)]
    pub equilibrium: EquilibriumSettings,
    #[serde(default)]
    pub outputs: Outputs,
}

/// A validated scenario with every default made explicit.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: Option<String>,
    pub variant: Variant,
    pub params: ParamInput,
    pub model: Model,
    pub initial: State4,
    pub integration: IntegrationConfig,
    pub checks: Vec<CheckName>,
    pub check_settings: CheckSettings,
    pub equilibrium: EquilibriumSettings,
    pub outputs: Outputs,
}

impl Scenario {
    /// Reads a file, applies overrides and resolves it.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut value = read_toml(path)?;
        apply_overrides(&mut value, overrides)?;
        let fallback = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        Scenario::from_value(value, &fallback)
    }

    pub fn from_value(value: toml::Value, fallback_name: &str) -> Result<Self, ConfigError> {
        let file: ScenarioFile =
            value
                .try_into()
                .map_err(|e: toml::de::Error| ConfigError::Parse {
                    context: format!("scenario {fallback_name:?}"),
                    message: e.message().to_string(),
                })?;
        Scenario::from_file(file, fallback_name)
    }

    pub fn from_file(file: ScenarioFile, fallback_name: &str) -> Result<Self, ConfigError> {
        let params = file.params.resolve()?;
        let model = crate::model::validate_params(params.clone())?;
        let variant = file.variant.unwrap_or(match params {
            ParamInput::Constant(_) => Variant::Handy,
            ParamInput::Schedule(_) => Variant::HandyStar,
        });
        model
            .check_variant(variant)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        file.initial
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("initial state: {e}")))?;
        let mut integration = file.integration;
        integration
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        integration.collapse_threshold = Some(integration.threshold_for(&file.initial));

        let mut settings = file.check_settings;
        let floor = model.rate_gap_floor();
        settings
            .region
            .get_or_insert_with(|| build_trapping_region(&model, &file.initial));
        settings.delta2_star.get_or_insert(floor);
        let ContractionSettings { delta2, eps2 } = &mut settings.contraction;
        let d2 = *delta2.get_or_insert(floor);
        eps2.get_or_insert(0.1 * d2);

        Ok(Scenario {
            name: file.name.unwrap_or_else(|| fallback_name.to_string()),
            description: file.description,
            variant,
            params,
            model,
            initial: file.initial,
            integration,
            checks: file.checks.unwrap_or_else(|| CheckName::ALL.to_vec()),
            check_settings: settings,
            equilibrium: file.equilibrium,
            outputs: file.outputs,
        })
    }

    /// The scenario with all defaults materialized, suitable for echoing.
    pub fn resolved(&self) -> ScenarioFile {
        ScenarioFile {
            name: Some(self.name.clone()),
            description: self.description.clone(),
            variant: Some(self.variant),
            params: RawParams::from_input(&self.params),
            initial: self.initial,
            integration: self.integration,
            checks: Some(self.checks.clone()),
            check_settings: self.check_settings,
            equilibrium: self.equilibrium,
            outputs: self.outputs.clone(),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.integration.threshold_for(&self.initial)
    }

    pub fn stem(&self) -> String {
        self.outputs
            .stem
            .clone()
            .unwrap_or_else(|| self.name.clone())
    }
}

pub fn read_toml(path: &Path) -> Result<toml::Value, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_toml(&text, &path.display().to_string())
}

pub fn parse_toml(text: &str, context: &str) -> Result<toml::Value, ConfigError> {
    toml::from_str::<toml::Table>(text)
        .map(toml::Value::Table)
        .map_err(|e| ConfigError::Parse {
            context: context.to_string(),
            message: e.message().to_string(),
        })
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets `path` (dot separated) to `value`, creating tables on the way.
pub fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<(), ConfigError> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ConfigError::Override(path.to_string()));
    }
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let table = node.as_table_mut().ok_or_else(|| {
            ConfigError::Invalid(format!("{path}: {key} is inside a non-table value"))
        })?;
        node = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| ConfigError::Invalid(format!("{path}: parent is not a table")))?;
    let last = keys[keys.len() - 1];
    // a number override replaces the other spelling of rho
    if keys.len() == 2 && keys[0] == "params" {
        match last {
            "rho" => {
                table.remove("rho_inv");
            }
            "rho_inv" => {
                table.remove("rho");
            }
            _ => {}
        }
    }
    table.insert(last.to_string(), value);
    Ok(())
}

pub fn apply_overrides(root: &mut toml::Value, overrides: &[String]) -> Result<(), ConfigError> {
    for o in overrides {
        let (path, raw) = o
            .split_once('=')
            .ok_or_else(|| ConfigError::Override(o.clone()))?;
        set_path(root, path.trim(), parse_override_value(raw.trim()))?;
    }
    Ok(())
}

/// The shipped default parameters as a scenario file.
pub fn baseline_scenario(e0: f64) -> ScenarioFile {
    ScenarioFile {
        name: None,
        description: None,
        variant: None,
        params: RawParams::from_input(&ParamInput::Constant(ParameterSet::baseline())),
        initial: State4::new(300.0, 0.0, 1000.0, e0),
        integration: IntegrationConfig::default(),
        checks: None,
        check_settings: CheckSettings::default(),
        equilibrium: EquilibriumSettings::default(),
        outputs: Outputs::default(),
    }
}
