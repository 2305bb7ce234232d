//! Bounded time-varying parameter functions.
//!
//! A [`TimeFunction`] is either a constant, a sinusoid
//! `c·(1 + a·sin(ωt + φ))` with `|a| < 1`, or a continuous piecewise-linear
//! curve through a list of knots (held constant outside the knot range).
//! Infima, suprema and derivative bounds are exact for all three forms.

use serde::{Deserialize, Serialize};

/// Extremes of a function over `t ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub inf: f64,
    pub sup: f64,
    /// Supremum of `|f'(t)|` (largest knot slope for piecewise-linear).
    pub sup_abs_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeFunction {
    Constant {
        value: f64,
    },
    Sinusoid {
        mean: f64,
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    PiecewiseLinear {
        /// `[t, value]` pairs with strictly increasing `t`.
        knots: Vec<[f64; 2]>,
    },
}

impl TimeFunction {
    pub fn constant(value: f64) -> Self {
        TimeFunction::Constant { value }
    }

    pub fn sinusoid(mean: f64, amplitude: f64, omega: f64, phase: f64) -> Self {
        TimeFunction::Sinusoid {
            mean,
            amplitude,
            omega,
            phase,
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            TimeFunction::Constant { .. } => true,
            TimeFunction::Sinusoid {
                amplitude, omega, ..
            } => *amplitude == 0.0 || *omega == 0.0,
            TimeFunction::PiecewiseLinear { knots } => knots.windows(2).all(|w| w[0][1] == w[1][1]),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeFunction::Constant { value } => *value,
            TimeFunction::Sinusoid {
                mean,
                amplitude,
                omega,
                phase,
            } => mean * (1.0 + amplitude * (omega * t + phase).sin()),
            TimeFunction::PiecewiseLinear { knots } => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if t <= first[0] {
                    return first[1];
                }
                if t >= last[0] {
                    return last[1];
                }
                // knots are sorted, so partition_point finds the segment
                let i = knots.partition_point(|k| k[0] <= t);
                let [t0, v0] = knots[i - 1];
                let [t1, v1] = knots[i];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Checks the structural requirements of the function form.
    pub fn check_shape(&self) -> Result<(), String> {
        match self {
            TimeFunction::Constant { value } => {
                if !value.is_finite() {
                    return Err(format!("constant {value} is not finite"));
                }
            }
            TimeFunction::Sinusoid {
                mean,
                amplitude,
                omega,
                phase,
            } => {
                if ![*mean, *amplitude, *omega, *phase]
                    .iter()
                    .all(|v| v.is_finite())
                {
                    return Err("sinusoid coefficients must be finite".into());
                }
                if amplitude.abs() >= 1.0 {
                    return Err(format!("sinusoid amplitude |{amplitude}| must be < 1"));
                }
            }
            TimeFunction::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return Err("piecewise-linear function needs at least one knot".into());
                }
                if knots.iter().flatten().any(|v| !v.is_finite()) {
                    return Err("knots must be finite".into());
                }
                if knots.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err("knot times must be strictly increasing".into());
                }
            }
        }
        Ok(())
    }

    /// Exact extremes over `t ≥ 0`. Assumes [`check_shape`](Self::check_shape) passed.
    pub fn bounds(&self) -> Bounds {
        match self {
            TimeFunction::Constant { value } => Bounds {
                inf: *value,
                sup: *value,
                sup_abs_slope: 0.0,
            },
            TimeFunction::Sinusoid {
                mean,
                amplitude,
                omega,
                ..
            } => {
                if *omega == 0.0 {
                    let v = self.eval(0.0);
                    return Bounds {
                        inf: v,
                        sup: v,
                        sup_abs_slope: 0.0,
                    };
                }
                // sin(ωt+φ) sweeps all of [-1, 1] on t ≥ 0 when ω ≠ 0
                let swing = (mean * amplitude).abs();
                Bounds {
                    inf: mean - swing,
                    sup: mean + swing,
                    sup_abs_slope: swing * omega.abs(),
                }
            }
            TimeFunction::PiecewiseLinear { knots } => {
                // only knots at t ≥ 0 and the value carried into t = 0 matter
                let mut inf = self.eval(0.0);
                let mut sup = inf;
                for k in knots.iter().filter(|k| k[0] >= 0.0) {
                    inf = inf.min(k[1]);
                    sup = sup.max(k[1]);
                }
                let sup_abs_slope = knots
                    .windows(2)
                    .filter(|w| w[1][0] > 0.0)
                    .map(|w| ((w[1][1] - w[0][1]) / (w[1][0] - w[0][0])).abs())
                    .fold(0.0, f64::max);
                Bounds {
                    inf,
                    sup,
                    sup_abs_slope,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoid_bounds_are_analytic() {
        let g = TimeFunction::sinusoid(0.01, 0.5, 0.01, 0.0);
        let b = g.bounds();
        assert!((b.inf - 0.005).abs() < 1e-18);
        assert!((b.sup - 0.015).abs() < 1e-18);
        assert!((b.sup_abs_slope - 0.005 * 0.01).abs() < 1e-18);
    }

    #[test]
    fn piecewise_linear_interpolates_and_extends() {
        let f = TimeFunction::PiecewiseLinear {
            knots: vec![[0.0, 1.0], [10.0, 3.0], [20.0, 2.0]],
        };
        assert_eq!(f.eval(-1.0), 1.0);
        assert_eq!(f.eval(5.0), 2.0);
        assert_eq!(f.eval(15.0), 2.5);
        assert_eq!(f.eval(100.0), 2.0);
        let b = f.bounds();
        assert_eq!((b.inf, b.sup), (1.0, 3.0));
        assert!((b.sup_abs_slope - 0.2).abs() < 1e-15);
    }

    #[test]
    fn knots_before_zero_only_count_through_the_value_at_zero() {
        let f = TimeFunction::PiecewiseLinear {
            knots: vec![[-10.0, -5.0], [10.0, 5.0]],
        };
        assert_eq!(f.bounds().inf, 0.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(TimeFunction::sinusoid(1.0, 1.0, 1.0, 0.0)
            .check_shape()
            .is_err());
        assert!(TimeFunction::PiecewiseLinear { knots: vec![] }
            .check_shape()
            .is_err());
        assert!(TimeFunction::PiecewiseLinear {
            knots: vec![[1.0, 1.0], [1.0, 2.0]]
        }
        .check_shape()
        .is_err());
    }
}
