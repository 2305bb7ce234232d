use serde::{Deserialize, Serialize};

use super::config::{Scenario, ScenarioFile};
use crate::equilibrium::{
    compare_equilibria, stability_probe, EquilibriumError, EquilibriumResult, StabilityProbe,
};
use crate::hypotheses::{run_checks, CheckName, CheckRecord, HypothesisReport, Witness};
use crate::integrator::{detect_collapse, integrate, CollapseEvent, IntegrationError, Trajectory};
use crate::model::State4;

pub struct SimulationRun {
    pub trajectory: Trajectory,
    pub collapse: CollapseEvent,
    pub threshold: f64,
}

pub fn simulate(scenario: &Scenario) -> Result<SimulationRun, IntegrationError> {
    let trajectory = integrate(
        scenario.initial,
        &scenario.model,
        scenario.variant,
        &scenario.integration,
    )?;
    let threshold = scenario.threshold();
    let collapse = detect_collapse(&trajectory, threshold);
    Ok(SimulationRun {
        trajectory,
        collapse,
        threshold,
    })
}

pub fn min_v_ratio(traj: &Trajectory) -> Option<f64> {
    traj.samples
        .iter()
        .filter_map(|s| s.v_ratio)
        .min_by(f64::total_cmp)
}

/// Summary record written next to a simulated trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub kind: String,
    pub scenario: ScenarioFile,
    pub trajectory_file: Option<String>,
    pub samples: usize,
    pub final_t: f64,
    pub final_state: State4,
    pub clamp_count: u64,
    pub collapse_threshold: f64,
    pub collapse: CollapseEvent,
    pub min_v_ratio: Option<f64>,
}

impl SimulationSummary {
    pub fn new(scenario: &Scenario, run: &SimulationRun, trajectory_file: Option<String>) -> Self {
        let last = run
            .trajectory
            .last()
            .expect("trajectories have at least one sample");
        SimulationSummary {
            kind: "simulation".into(),
            scenario: scenario.resolved(),
            trajectory_file,
            samples: run.trajectory.len(),
            final_t: last.t,
            final_state: last.state,
            clamp_count: run.trajectory.clamp_count,
            collapse_threshold: run.threshold,
            collapse: run.collapse,
            min_v_ratio: min_v_ratio(&run.trajectory),
        }
    }
}

pub fn check_trajectory(scenario: &Scenario, traj: &Trajectory) -> HypothesisReport {
    run_checks(
        traj,
        &scenario.model,
        &scenario.checks,
        &scenario.check_settings,
    )
}

/// Overall verdict of a check run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Passed,
    Failed,
    /// At least one check could not run on this trajectory.
    PreconditionFailed,
}

pub fn check_status(report: &HypothesisReport) -> CheckStatus {
    if report.has_errors() {
        CheckStatus::PreconditionFailed
    } else if report.all_passed() {
        CheckStatus::Passed
    } else {
        CheckStatus::Failed
    }
}

/// Flat, self-describing record for one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub kind: String,
    pub scenario: String,
    pub name: CheckName,
    pub passed: Option<bool>,
    pub vacuous: Option<bool>,
    pub worst_violation: Option<f64>,
    pub witness_t: Option<f64>,
    pub witness: Option<Witness>,
    pub tolerance: Option<f64>,
    pub checked: Option<usize>,
    pub skipped: Option<usize>,
    pub measured: Option<f64>,
    pub note: Option<String>,
    pub error: Option<String>,
}

impl CheckLine {
    pub fn new(scenario: &str, record: &CheckRecord) -> Self {
        let o = record.outcome.as_ref();
        CheckLine {
            kind: "check".into(),
            scenario: scenario.to_string(),
            name: record.name,
            passed: o.map(|o| o.passed),
            vacuous: o.map(|o| o.vacuous),
            worst_violation: o.map(|o| o.worst_violation),
            witness_t: o.and_then(|o| o.witness.map(|w| w.t)),
            witness: o.and_then(|o| o.witness),
            tolerance: o.map(|o| o.tolerance),
            checked: o.map(|o| o.checked),
            skipped: o.map(|o| o.skipped),
            measured: o.and_then(|o| o.measured),
            note: o.and_then(|o| o.note.clone()),
            error: record.error.clone(),
        }
    }
}

/// Header record of a check report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportHeader {
    pub kind: String,
    pub source: String,
    pub scenario: ScenarioFile,
}

/// Header followed by one line per check, as written by `handy check`.
pub fn report_lines(
    scenario: &Scenario,
    source: &str,
    report: &HypothesisReport,
) -> Vec<serde_json::Value> {
    let header = ReportHeader {
        kind: "config".into(),
        source: source.to_string(),
        scenario: scenario.resolved(),
    };
    let mut lines = vec![serde_json::to_value(header).expect("serializable")];
    lines.extend(
        report.checks.iter().map(|r| {
            serde_json::to_value(CheckLine::new(&scenario.name, r)).expect("serializable")
        }),
    );
    lines
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub kind: String,
    pub scenario: ScenarioFile,
    pub result: EquilibriumResult,
    pub stability: Option<StabilityProbe>,
}

/// Compares both equilibrium routes and, when a numerical equilibrium
/// exists, probes it with a 1% perturbation over `probe_t_end`.
pub fn equilibrium_report(
    scenario: &Scenario,
    probe_t_end: f64,
) -> Result<EquilibriumReport, EquilibriumError> {
    let result = compare_equilibria(&scenario.model, scenario.equilibrium.guess)?;
    let stability = result.numerical.and_then(|eq| {
        stability_probe(
            &scenario.model,
            eq,
            0.01,
            scenario.integration.dt,
            probe_t_end,
        )
        .ok()
    });
    Ok(EquilibriumReport {
        kind: "equilibrium".into(),
        scenario: scenario.resolved(),
        result,
        stability,
    })
}
