//! Trajectory-level monitors for the hypotheses that force collapse.
//!
//! Each check scans an integrated [`Trajectory`] and returns a
//! [`CheckOutcome`]: the worst violation found, where it happened and the
//! tolerance it was held to. A check passes exactly when its worst
//! violation does not exceed the tolerance. Checks with an empty domain
//! (no triggering sample) pass and are flagged as vacuous.

mod checks;
mod region;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::integrator::Trajectory;
use crate::model::{Model, State4};

pub use checks::{
    check_containment, check_contraction, check_gronwall_decay, check_lyapunov_ratio,
    check_rate_gap, check_rate_ordering, check_three_birds, ContractionSettings,
};
pub use region::{
    build_trapping_region, build_trapping_region_with_margin, TrappingRegion, DEFAULT_MARGIN,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HypothesisError {
    #[error("{check}: population is zero at t = {t}")]
    PopulationZeroAtSample { check: CheckName, t: f64 },
    #[error("{check}: trajectory spans {span}, shorter than the unit lookahead")]
    HorizonTooShort { check: CheckName, span: f64 },
    #[error("{check}: sample spacing {dt} exceeds the unit lookahead")]
    SamplingTooCoarse { check: CheckName, dt: f64 },
}

/// The fixed registry of checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Containment,
    RateOrdering,
    RateGap,
    LyapunovRatio,
    Contraction,
    ThreeBirds,
    GronwallDecay,
}

impl CheckName {
    pub const ALL: [CheckName; 7] = [
        CheckName::Containment,
        CheckName::RateOrdering,
        CheckName::RateGap,
        CheckName::LyapunovRatio,
        CheckName::Contraction,
        CheckName::ThreeBirds,
        CheckName::GronwallDecay,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Containment => "containment",
            CheckName::RateOrdering => "rate_ordering",
            CheckName::RateGap => "rate_gap",
            CheckName::LyapunovRatio => "lyapunov_ratio",
            CheckName::Contraction => "contraction",
            CheckName::ThreeBirds => "three_birds",
            CheckName::GronwallDecay => "gronwall_decay",
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CheckName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<_> = CheckName::ALL.iter().map(|c| c.as_str()).collect();
                format!("unknown check {s:?}; expected one of {}", known.join(", "))
            })
    }
}

/// Where the worst violation occurred.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: f64,
    pub state: State4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: CheckName,
    pub passed: bool,
    /// No sample fell in the check's domain.
    pub vacuous: bool,
    /// Largest violation measure; negative values are slack.
    pub worst_violation: f64,
    pub witness: Option<Witness>,
    pub tolerance: f64,
    /// Samples that entered the check.
    pub checked: usize,
    /// Samples left out (population at the positivity floor, lookahead past the end).
    pub skipped: usize,
    /// Check-specific measured quantity, described by `note`.
    pub measured: Option<f64>,
    pub note: Option<String>,
}

/// Accumulates the worst violation over a scan.
pub(crate) struct Worst {
    name: CheckName,
    tolerance: f64,
    value: f64,
    witness: Option<Witness>,
    checked: usize,
    skipped: usize,
}

impl Worst {
    pub(crate) fn new(name: CheckName, tolerance: f64) -> Self {
        Worst {
            name,
            tolerance,
            value: f64::NEG_INFINITY,
            witness: None,
            checked: 0,
            skipped: 0,
        }
    }

    pub(crate) fn observe(&mut self, violation: f64, t: f64, state: State4) {
        self.checked += 1;
        // NaN counts as the worst possible outcome
        let v = if violation.is_nan() {
            f64::INFINITY
        } else {
            violation
        };
        if v > self.value || self.witness.is_none() {
            self.value = v;
            self.witness = Some(Witness { t, state });
        }
    }

    pub(crate) fn skip(&mut self) {
        self.skipped += 1;
    }

    pub(crate) fn finish(self) -> CheckOutcome {
        let vacuous = self.checked == 0;
        let worst = if vacuous { 0.0 } else { self.value };
        CheckOutcome {
            name: self.name,
            passed: worst <= self.tolerance,
            vacuous,
            worst_violation: worst,
            witness: self.witness,
            tolerance: self.tolerance,
            checked: self.checked,
            skipped: self.skipped,
            measured: None,
            note: None,
        }
    }
}

/// Result of one check inside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: CheckName,
    pub outcome: Option<CheckOutcome>,
    pub error: Option<String>,
    /// Set when the check could not run because a population is zero.
    #[serde(default)]
    pub precondition_failed: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub checks: Vec<CheckRecord>,
}

impl HypothesisReport {
    /// True iff every check ran and passed.
    pub fn all_passed(&self) -> bool {
        self.checks
            .iter()
            .all(|c| c.outcome.as_ref().is_some_and(|o| o.passed))
    }

    pub fn has_errors(&self) -> bool {
        self.checks.iter().any(|c| c.error.is_some())
    }

    pub fn get(&self, name: CheckName) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn outcome(&self, name: CheckName) -> Option<&CheckOutcome> {
        self.get(name)?.outcome.as_ref()
    }
}

/// Knobs shared by [`run_checks`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckSettings {
    /// Region for containment; built from the first sample when absent.
    pub region: Option<TrappingRegion>,
    pub contraction: ContractionSettings,
    /// Half-width of the `|G(Z)|` band for the rate-gap check; defaults to
    /// the gap floor itself.
    pub delta2_star: Option<f64>,
}

/// Runs the named checks in order and collects their outcomes.
pub fn run_checks(
    traj: &Trajectory,
    model: &Model,
    names: &[CheckName],
    settings: &CheckSettings,
) -> HypothesisReport {
    let checks = names
        .iter()
        .map(|&name| {
            let result = match name {
                CheckName::Containment => {
                    let region = settings.region.unwrap_or_else(|| {
                        let s0 = traj.first().map(|s| s.state).unwrap_or_default();
                        build_trapping_region(model, &s0)
                    });
                    Ok(check_containment(traj, &region))
                }
                CheckName::RateOrdering => check_rate_ordering(traj),
                CheckName::RateGap => check_rate_gap(traj, model, settings.delta2_star),
                CheckName::LyapunovRatio => check_lyapunov_ratio(traj),
                CheckName::Contraction => check_contraction(traj, model, &settings.contraction),
                CheckName::ThreeBirds => Ok(check_three_birds(traj, model)),
                CheckName::GronwallDecay => Ok(check_gronwall_decay(traj, model)),
            };
            match result {
                Ok(o) => CheckRecord {
                    name,
                    outcome: Some(o),
                    error: None,
                    precondition_failed: false,
                },
                Err(e) => CheckRecord {
                    name,
                    outcome: None,
                    precondition_failed: matches!(
                        e,
                        HypothesisError::PopulationZeroAtSample { .. }
                    ),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    HypothesisReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for c in CheckName::ALL {
            assert_eq!(c.as_str().parse::<CheckName>().unwrap(), c);
        }
        assert!("lyapunov".parse::<CheckName>().is_err());
    }
}
