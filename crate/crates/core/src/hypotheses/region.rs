use serde::{Deserialize, Serialize};

use crate::model::{Model, State4};

/// The box `[0, b4] × [0, c5] × [0, c5]` in `(B, C, E)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrappingRegion {
    /// Bound on total food `b_env + b_stor`.
    pub b4: f64,
    /// Bound on each population.
    pub c5: f64,
}

impl TrappingRegion {
    pub fn contains(&self, s: &State4) -> bool {
        s.b_total() <= self.b4 && s.c <= self.c5 && s.e <= self.c5
    }

    /// Largest normalized excess over the box; non-positive inside it.
    pub fn excess(&self, s: &State4) -> f64 {
        ((s.b_total() - self.b4) / self.b4)
            .max((s.c - self.c5) / self.c5)
            .max((s.e - self.c5) / self.c5)
    }
}

pub const DEFAULT_MARGIN: f64 = 0.05;

/// Builds the trapping region with the default 5% margin on `c5`.
pub fn build_trapping_region(model: &Model, initial: &State4) -> TrappingRegion {
    build_trapping_region_with_margin(model, initial, DEFAULT_MARGIN)
}

/// `b4 = max{γλ²/ε, 4λ, B(0)}` and
/// `c5 = max{(1 + margin)·κ·b4/(ζρ), C(0), E(0)}`.
///
/// Time-varying parameters enter through `sup γ·(sup λ)²/inf ε`, `sup λ`,
/// `sup κ` and `inf ρ`.
pub fn build_trapping_region_with_margin(
    model: &Model,
    initial: &State4,
    margin: f64,
) -> TrappingRegion {
    let b = &model.derived().bounds;
    let logistic = b.gamma.sup * b.lambda.sup * b.lambda.sup / b.epsilon.inf;
    let b4 = logistic.max(4.0 * b.lambda.sup).max(initial.b_total());
    let c5 = ((1.0 + margin) * b.kappa.sup * b4 / (model.zeta() * b.rho.inf))
        .max(initial.c)
        .max(initial.e);
    TrappingRegion { b4, c5 }
}
