use std::fmt;

use serde::{Deserialize, Serialize};

use super::schedule::{Bounds, TimeFunction};

/// Constant model parameters.
///
/// `rho` is the stored-food distribution scale entering the normalized
/// supply `Z = (B_stor/ρ)/(C + κE)`; configuration files usually give its
/// reciprocal, the maximum distribution rate `rho_inv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    /// Harvesting factor.
    pub nu: f64,
    /// Environmental resource capacity.
    pub lambda: f64,
    /// Maximum regeneration rate of environmental food.
    pub gamma: f64,
    /// Stored-food decay rate.
    pub epsilon: f64,
    /// Subsistence food per capita.
    pub sigma: f64,
    pub rho: f64,
    /// Inequality factor; each Elite receives `kappa` times a Commoner's share.
    pub kappa: f64,
    /// Minimum per-capita change rate (negative).
    pub xi1: f64,
    /// Maximum per-capita change rate (positive).
    pub xi2: f64,
    /// Downward mobility factor; only the mobility variant reads it.
    pub mu: f64,
}

impl ParameterSet {
    /// The typical values used throughout the guide and the shipped scenarios.
    pub fn baseline() -> Self {
        ParameterSet {
            nu: 1.67e-5,
            lambda: 100.0,
            gamma: 0.01,
            epsilon: 1e-5,
            sigma: 5e-4,
            rho: 1.0 / 5e-3,
            kappa: 1.5,
            xi1: -0.04,
            xi2: 0.02,
            mu: 1e-4,
        }
    }

    /// Maximum stored-food distribution rate `1/rho`.
    pub fn rho_inv(&self) -> f64 {
        1.0 / self.rho
    }

    /// The supply level at which the change rate vanishes, `−ξ1/(ξ2−ξ1)`.
    pub fn zeta(&self) -> f64 {
        -self.xi1 / (self.xi2 - self.xi1)
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn validate(&self) -> Result<Model, ParamErrors> {
        Model::from_constant(*self)
    }
}

/// Time-varying parameters; `sigma`, `xi1`, `xi2` and `mu` stay constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSchedule {
    pub nu: TimeFunction,
    pub lambda: TimeFunction,
    pub gamma: TimeFunction,
    pub epsilon: TimeFunction,
    pub rho: TimeFunction,
    pub kappa: TimeFunction,
    pub sigma: f64,
    pub xi1: f64,
    pub xi2: f64,
    #[serde(default)]
    pub mu: f64,
}

impl ParameterSchedule {
    pub fn constant(p: &ParameterSet) -> Self {
        ParameterSchedule {
            nu: TimeFunction::constant(p.nu),
            lambda: TimeFunction::constant(p.lambda),
            gamma: TimeFunction::constant(p.gamma),
            epsilon: TimeFunction::constant(p.epsilon),
            rho: TimeFunction::constant(p.rho),
            kappa: TimeFunction::constant(p.kappa),
            sigma: p.sigma,
            xi1: p.xi1,
            xi2: p.xi2,
            mu: p.mu,
        }
    }

    /// Parameter values in force at time `t`.
    pub fn at(&self, t: f64) -> ParameterSet {
        ParameterSet {
            nu: self.nu.eval(t),
            lambda: self.lambda.eval(t),
            gamma: self.gamma.eval(t),
            epsilon: self.epsilon.eval(t),
            sigma: self.sigma,
            rho: self.rho.eval(t),
            kappa: self.kappa.eval(t),
            xi1: self.xi1,
            xi2: self.xi2,
            mu: self.mu,
        }
    }

    fn functions(&self) -> [(&'static str, &TimeFunction); 6] {
        [
            ("lambda", &self.lambda),
            ("gamma", &self.gamma),
            ("epsilon", &self.epsilon),
            ("rho", &self.rho),
            ("nu", &self.nu),
            ("kappa", &self.kappa),
        ]
    }

    pub fn validate(&self) -> Result<Model, ParamErrors> {
        Model::from_schedule(self.clone())
    }
}

/// One violated parameter constraint.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("{name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("kappa must exceed 1, got {0}")]
    KappaNotGreaterThanOne(f64),
    #[error("need xi1 < 0 < xi2, got xi1 = {xi1}, xi2 = {xi2}")]
    XiSignsWrong { xi1: f64, xi2: f64 },
    #[error("inf {name} = {inf} violates the lower bound {bound}")]
    ScheduleInfimumViolation {
        name: &'static str,
        inf: f64,
        bound: f64,
    },
    #[error("{name}: {reason}")]
    InvalidSchedule { name: &'static str, reason: String },
    #[error("mu must be non-negative, got {0}")]
    NegativeMobility(f64),
    #[error("{name} is not finite")]
    NonFinite { name: &'static str },
}

/// Every diagnostic found while validating a parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamErrors(pub Vec<ParamError>);

impl fmt::Display for ParamErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParamErrors {}

impl ParamErrors {
    pub fn contains(&self, pred: impl Fn(&ParamError) -> bool) -> bool {
        self.0.iter().any(pred)
    }
}

/// Whether the parameters came in as constants or as a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamSource {
    Constant,
    Schedule,
}

/// Bounds of every schedulable parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleBounds {
    pub lambda: Bounds,
    pub gamma: Bounds,
    pub epsilon: Bounds,
    pub rho: Bounds,
    pub nu: Bounds,
    pub kappa: Bounds,
}

/// Quantities derived once at validation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    /// `−ξ1/(ξ2−ξ1)`, in (0, 1).
    pub zeta: f64,
    /// `min{|ξ1|, inf ε}`, the decay rate of the food-equivalent total.
    pub eps_hat: f64,
    pub bounds: ScheduleBounds,
}

/// Validated parameters, ready for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    schedule: ParameterSchedule,
    constant: Option<ParameterSet>,
    source: ParamSource,
    derived: Derived,
}

fn check_constants(sigma: f64, xi1: f64, xi2: f64, mu: f64, errors: &mut Vec<ParamError>) {
    if !sigma.is_finite() {
        errors.push(ParamError::NonFinite { name: "sigma" });
    } else if sigma <= 0.0 {
        errors.push(ParamError::NonPositiveParameter {
            name: "sigma",
            value: sigma,
        });
    }
    if !xi1.is_finite() || !xi2.is_finite() {
        errors.push(ParamError::NonFinite { name: "xi" });
    } else if !(xi1 < 0.0 && 0.0 < xi2) {
        errors.push(ParamError::XiSignsWrong { xi1, xi2 });
    }
    if !mu.is_finite() {
        errors.push(ParamError::NonFinite { name: "mu" });
    } else if mu < 0.0 {
        errors.push(ParamError::NegativeMobility(mu));
    }
}

impl Model {
    fn from_constant(p: ParameterSet) -> Result<Self, ParamErrors> {
        let mut errors = Vec::new();
        let positives = [
            ("lambda", p.lambda),
            ("gamma", p.gamma),
            ("epsilon", p.epsilon),
            ("rho", p.rho),
            ("nu", p.nu),
        ];
        for (name, value) in positives {
            if !value.is_finite() {
                errors.push(ParamError::NonFinite { name });
            } else if value <= 0.0 {
                errors.push(ParamError::NonPositiveParameter { name, value });
            }
        }
        if !p.kappa.is_finite() {
            errors.push(ParamError::NonFinite { name: "kappa" });
        } else if p.kappa <= 1.0 {
            errors.push(ParamError::KappaNotGreaterThanOne(p.kappa));
        }
        check_constants(p.sigma, p.xi1, p.xi2, p.mu, &mut errors);
        if !errors.is_empty() {
            return Err(ParamErrors(errors));
        }
        let schedule = ParameterSchedule::constant(&p);
        Ok(Model::assemble(schedule, Some(p), ParamSource::Constant))
    }

    fn from_schedule(schedule: ParameterSchedule) -> Result<Self, ParamErrors> {
        let mut errors = Vec::new();
        for (name, f) in schedule.functions() {
            if let Err(reason) = f.check_shape() {
                errors.push(ParamError::InvalidSchedule { name, reason });
                continue;
            }
            let b = f.bounds();
            let bound = if name == "kappa" { 1.0 } else { 0.0 };
            if b.inf <= bound {
                errors.push(ParamError::ScheduleInfimumViolation {
                    name,
                    inf: b.inf,
                    bound,
                });
            }
            if !b.sup.is_finite() || !b.sup_abs_slope.is_finite() {
                errors.push(ParamError::NonFinite { name });
            }
        }
        check_constants(
            schedule.sigma,
            schedule.xi1,
            schedule.xi2,
            schedule.mu,
            &mut errors,
        );
        if !errors.is_empty() {
            return Err(ParamErrors(errors));
        }
        Ok(Model::assemble(schedule, None, ParamSource::Schedule))
    }

    fn assemble(
        schedule: ParameterSchedule,
        constant: Option<ParameterSet>,
        source: ParamSource,
    ) -> Self {
        let bounds = ScheduleBounds {
            lambda: schedule.lambda.bounds(),
            gamma: schedule.gamma.bounds(),
            epsilon: schedule.epsilon.bounds(),
            rho: schedule.rho.bounds(),
            nu: schedule.nu.bounds(),
            kappa: schedule.kappa.bounds(),
        };
        let zeta = -schedule.xi1 / (schedule.xi2 - schedule.xi1);
        let eps_hat = schedule.xi1.abs().min(bounds.epsilon.inf);
        Model {
            schedule,
            constant,
            source,
            derived: Derived {
                zeta,
                eps_hat,
                bounds,
            },
        }
    }

    /// Parameters in force at time `t`.
    #[inline]
    pub fn at(&self, t: f64) -> ParameterSet {
        match self.constant {
            Some(p) => p,
            None => self.schedule.at(t),
        }
    }

    /// The constant parameter set, if the model is not time-varying.
    pub fn constant(&self) -> Option<&ParameterSet> {
        self.constant.as_ref()
    }

    pub fn schedule(&self) -> &ParameterSchedule {
        &self.schedule
    }

    pub fn source(&self) -> ParamSource {
        self.source
    }

    pub fn derived(&self) -> &Derived {
        &self.derived
    }

    pub fn zeta(&self) -> f64 {
        self.derived.zeta
    }

    pub fn eps_hat(&self) -> f64 {
        self.derived.eps_hat
    }

    pub fn sigma(&self) -> f64 {
        self.schedule.sigma
    }

    pub fn xi1(&self) -> f64 {
        self.schedule.xi1
    }

    pub fn xi2(&self) -> f64 {
        self.schedule.xi2
    }

    pub fn mu(&self) -> f64 {
        self.schedule.mu
    }

    /// Food units per person at the maximal growth margin, `σ/(ξ2−ξ1)`.
    pub fn people_per_food(&self) -> f64 {
        self.schedule.sigma / (self.schedule.xi2 - self.schedule.xi1)
    }

    /// Guaranteed gap `inf((κ−1)/(κ+2))·(−ξ1)` between the Elite and
    /// Commoner change rates near zero Commoner growth.
    ///
    /// `(κ−1)/(κ+2)` is increasing in κ, so the infimum sits at `inf κ`.
    pub fn rate_gap_floor(&self) -> f64 {
        let k = self.derived.bounds.kappa.inf;
        (k - 1.0) / (k + 2.0) * (-self.schedule.xi1)
    }
}
