use serde::{Deserialize, Serialize};

use super::params::{Model, ParamSource, ParameterSet};
use super::state::State4;
use super::ModelError;

/// Which right-hand side to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Constant parameters.
    Handy,
    /// Bounded time-varying parameters.
    HandyStar,
    /// Constant parameters plus an Elite-to-Commoner flow `μE²`.
    Mobility,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Handy => "handy",
            Variant::HandyStar => "handy_star",
            Variant::Mobility => "mobility",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "handy" => Ok(Variant::Handy),
            "handy_star" | "handy*" => Ok(Variant::HandyStar),
            "mobility" => Ok(Variant::Mobility),
            other => Err(format!("unknown variant {other:?}")),
        }
    }
}

/// Rates derived from a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxBreakdown {
    /// Food reproduction rate.
    pub q: f64,
    /// Harvesting rate.
    pub h: f64,
    /// Normalized food supply.
    pub z: f64,
    /// Food consumption rate.
    pub f: f64,
    /// Commoner per-capita change rate `G(Z)`.
    pub g_z: f64,
    /// Elite per-capita change rate `G(κZ)`.
    pub g_kz: f64,
}

/// Per-capita change rate `ξ1 + (ξ2−ξ1)·min{1, z}`.
pub fn eval_g(z: f64, p: &ParameterSet) -> Result<f64, ModelError> {
    if z.is_nan() || z < 0.0 {
        return Err(ModelError::NegativeZ(z));
    }
    Ok(growth_rate(z, p.xi1, p.xi2))
}

#[inline]
pub(crate) fn growth_rate(z: f64, xi1: f64, xi2: f64) -> f64 {
    if z >= 1.0 {
        xi2
    } else {
        xi1 + (xi2 - xi1) * z
    }
}

/// Normalized supply `Z` and the clamped fill `min{1, Z}`.
///
/// With no population, `Z` is reported as 1 when food is stored (everyone
/// who could eat is fully fed) and 0 otherwise; either way `F` vanishes.
#[inline]
fn supply(s: &State4, p: &ParameterSet) -> (f64, f64) {
    let demand = s.c + p.kappa * s.e;
    if demand > 0.0 {
        let z = (s.b_stor / p.rho) / demand;
        (z, z.min(1.0))
    } else if s.b_stor > 0.0 {
        (1.0, 1.0)
    } else {
        (0.0, 0.0)
    }
}

/// Evaluates `Q, H, Z, F, G(Z), G(κZ)` without validating the state.
#[inline]
pub fn fluxes_raw(s: &State4, p: &ParameterSet) -> FluxBreakdown {
    let q = p.gamma * s.b_env * (1.0 - s.b_env / p.lambda);
    let h = p.nu * s.b_env * s.c;
    let (z, fill) = supply(s, p);
    let f = p.sigma * (s.c + p.kappa * s.e) * fill;
    FluxBreakdown {
        q,
        h,
        z,
        f,
        g_z: growth_rate(z, p.xi1, p.xi2),
        g_kz: growth_rate(p.kappa * z, p.xi1, p.xi2),
    }
}

pub fn eval_fluxes(s: &State4, p: &ParameterSet) -> Result<FluxBreakdown, ModelError> {
    s.validate()?;
    Ok(fluxes_raw(s, p))
}

/// Time derivative from precomputed fluxes.
#[inline]
pub fn derivative(s: &State4, p: &ParameterSet, fl: &FluxBreakdown, variant: Variant) -> State4 {
    let mut d = State4 {
        b_env: fl.q - fl.h,
        b_stor: fl.h - fl.f - p.epsilon * s.b_stor,
        c: fl.g_z * s.c,
        e: fl.g_kz * s.e,
    };
    if variant == Variant::Mobility {
        let flow = p.mu * s.e * s.e;
        d.c += flow;
        d.e -= flow;
    }
    d
}

/// Right-hand side with no validation; used on hot paths and for residuals
/// of candidate states that may lie outside the admissible region.
#[inline]
pub fn rhs_raw(s: &State4, p: &ParameterSet, variant: Variant) -> State4 {
    let fl = fluxes_raw(s, p);
    derivative(s, p, &fl, variant)
}

impl Model {
    /// Checks that `variant` can be driven by these parameters.
    pub fn check_variant(&self, variant: Variant) -> Result<(), ModelError> {
        match (variant, self.source()) {
            (Variant::HandyStar, ParamSource::Constant) => {
                Err(ModelError::VariantParameterMismatch(
                    "handy_star requires a parameter schedule".into(),
                ))
            }
            (Variant::Handy, ParamSource::Schedule) => Err(ModelError::VariantParameterMismatch(
                "handy requires constant parameters; use handy_star for schedules".into(),
            )),
            (Variant::Mobility, ParamSource::Schedule) => {
                Err(ModelError::VariantParameterMismatch(
                    "mobility requires constant parameters".into(),
                ))
            }
            (Variant::Mobility, _) if self.mu() <= 0.0 => Err(
                ModelError::VariantParameterMismatch("mobility requires mu > 0".into()),
            ),
            _ => Ok(()),
        }
    }

    pub fn fluxes(&self, s: &State4, t: f64) -> Result<FluxBreakdown, ModelError> {
        eval_fluxes(s, &self.at(t))
    }

    pub fn rhs(&self, s: &State4, t: f64, variant: Variant) -> Result<State4, ModelError> {
        self.check_variant(variant)?;
        s.validate()?;
        if (t < 0.0 || t.is_nan()) && self.source() == ParamSource::Schedule {
            return Err(ModelError::NegativeTime(t));
        }
        Ok(rhs_raw(s, &self.at(t), variant))
    }

    /// Food-equivalent total `(c+e)·σ/(ξ2−ξ1) + b_stor`.
    pub fn lyapunov_y(&self, s: &State4) -> f64 {
        (s.c + s.e) * self.people_per_food() + s.b_stor
    }
}

/// `rhs` as a free function.
pub fn rhs(s: &State4, model: &Model, t: f64, variant: Variant) -> Result<State4, ModelError> {
    model.rhs(s, t, variant)
}

/// `lyapunov_y` as a free function.
pub fn lyapunov_y(s: &State4, model: &Model) -> f64 {
    model.lyapunov_y(s)
}
