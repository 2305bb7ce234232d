//! Parameters, state and right-hand sides of the three model variants.
//!
//! The four compartments evolve as
//!
//! ```text
//! B_env' = Q − H
//! B_stor' = H − F − ε·B_stor
//! C'     = G(Z)·C        (+ μE² with downward mobility)
//! E'     = G(κZ)·E       (− μE² with downward mobility)
//! ```
//!
//! with `Q = γ·B_env·(1 − B_env/λ)`, `H = ν·B_env·C`,
//! `Z = (B_stor/ρ)/(C + κE)`, `F = σ·(C + κE)·min{1, Z}` and
//! `G(z) = ξ1 + (ξ2 − ξ1)·min{1, z}`.

mod flux;
mod params;
mod schedule;
mod state;

pub use flux::{
    derivative, eval_fluxes, eval_g, fluxes_raw, lyapunov_y, rhs, rhs_raw, FluxBreakdown, Variant,
};
pub use params::{
    Derived, Model, ParamError, ParamErrors, ParamSource, ParameterSchedule, ParameterSet,
    ScheduleBounds,
};
pub use schedule::{Bounds, TimeFunction};
pub use state::State4;

/// Errors from evaluating the model.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("normalized supply must be non-negative, got {0}")]
    NegativeZ(f64),
    #[error("state component {field} = {value} is not finite and non-negative")]
    InvalidState { field: &'static str, value: f64 },
    #[error("variant/parameter mismatch: {0}")]
    VariantParameterMismatch(String),
    #[error("time-varying parameters need t >= 0, got {0}")]
    NegativeTime(f64),
}

/// Validates either form of parameters; see [`ParameterSet::validate`] and
/// [`ParameterSchedule::validate`].
pub fn validate_params(p: impl Into<ParamInput>) -> Result<Model, ParamErrors> {
    match p.into() {
        ParamInput::Constant(p) => p.validate(),
        ParamInput::Schedule(s) => s.validate(),
    }
}

/// Either parameter form.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamInput {
    Constant(ParameterSet),
    Schedule(ParameterSchedule),
}

impl From<ParameterSet> for ParamInput {
    fn from(p: ParameterSet) -> Self {
        ParamInput::Constant(p)
    }
}

impl From<ParameterSchedule> for ParamInput {
    fn from(s: ParameterSchedule) -> Self {
        ParamInput::Schedule(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_is_accepted() {
        let m = validate_params(ParameterSet::baseline()).unwrap();
        assert!((m.zeta() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.eps_hat(), 1e-5);
        assert_eq!(m.source(), ParamSource::Constant);
    }

    #[test]
    fn kappa_one_is_rejected() {
        let err = validate_params(ParameterSet::baseline().with_kappa(1.0)).unwrap_err();
        assert_eq!(err.0, vec![ParamError::KappaNotGreaterThanOne(1.0)]);
    }

    #[test]
    fn every_violation_is_listed() {
        let mut p = ParameterSet::baseline();
        p.lambda = 0.0;
        p.gamma = -1.0;
        p.xi1 = 0.01;
        p.mu = -1.0;
        let err = p.validate().unwrap_err();
        assert_eq!(err.0.len(), 4);
        assert!(
            err.contains(|e| matches!(e, ParamError::NonPositiveParameter { name: "lambda", .. }))
        );
        assert!(
            err.contains(|e| matches!(e, ParamError::NonPositiveParameter { name: "gamma", .. }))
        );
        assert!(err.contains(|e| matches!(e, ParamError::XiSignsWrong { .. })));
        assert!(err.contains(|e| matches!(e, ParamError::NegativeMobility(_))));
    }

    #[test]
    fn sinusoidal_gamma_schedule() {
        let mut s = ParameterSchedule::constant(&ParameterSet::baseline());
        s.gamma = TimeFunction::sinusoid(0.01, 0.5, 0.01, 0.0);
        let m = validate_params(s).unwrap();
        assert!((m.derived().bounds.gamma.inf - 0.005).abs() < 1e-18);
        assert_eq!(m.source(), ParamSource::Schedule);
        assert!((m.at(0.0).gamma - 0.01).abs() < 1e-18);
    }

    #[test]
    fn schedule_infimum_violations() {
        let mut s = ParameterSchedule::constant(&ParameterSet::baseline());
        s.kappa = TimeFunction::sinusoid(1.2, 0.5, 1.0, 0.0);
        s.rho = TimeFunction::PiecewiseLinear {
            knots: vec![[0.0, 10.0], [5.0, 0.0]],
        };
        let err = s.validate().unwrap_err();
        assert!(err.contains(|e| matches!(
            e,
            ParamError::ScheduleInfimumViolation { name: "kappa", .. }
        )));
        assert!(
            err.contains(|e| matches!(e, ParamError::ScheduleInfimumViolation { name: "rho", .. }))
        );
    }
}
