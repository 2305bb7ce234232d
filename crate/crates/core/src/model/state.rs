use serde::{Deserialize, Serialize};

use super::ModelError;

/// Instantaneous state of the four-compartment model.
///
/// Fields are public so that raw (possibly invalid) states can be built by
/// closed-form expressions; [`State4::checked`] enforces the invariant that
/// every component is finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State4 {
    /// Environmental (unharvested) food.
    pub b_env: f64,
    /// Stored food.
    pub b_stor: f64,
    /// Commoner population.
    pub c: f64,
    /// Elite population.
    pub e: f64,
}

impl State4 {
    pub const fn new(b_env: f64, b_stor: f64, c: f64, e: f64) -> Self {
        State4 {
            b_env,
            b_stor,
            c,
            e,
        }
    }

    /// Builds a state, rejecting non-finite or negative components.
    pub fn checked(b_env: f64, b_stor: f64, c: f64, e: f64) -> Result<Self, ModelError> {
        let s = State4::new(b_env, b_stor, c, e);
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in self.named() {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::InvalidState {
                    field: name,
                    value: v,
                });
            }
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// Total food `b_env + b_stor`.
    pub fn b_total(&self) -> f64 {
        self.b_env + self.b_stor
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.b_env, self.b_stor, self.c, self.e]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        State4::new(a[0], a[1], a[2], a[3])
    }

    pub fn named(&self) -> [(&'static str, f64); 4] {
        [
            ("b_env", self.b_env),
            ("b_stor", self.b_stor),
            ("c", self.c),
            ("e", self.e),
        ]
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}
