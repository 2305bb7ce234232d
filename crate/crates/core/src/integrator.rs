//! Fixed-step classical Runge–Kutta integration with positivity clamping,
//! an observed-order self check and threshold collapse detection.

use serde::{Deserialize, Serialize};

use crate::model::{
    derivative, fluxes_raw, FluxBreakdown, Model, ModelError, ParameterSet, State4, Variant,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegrationError {
    #[error("invalid integration config: {0}")]
    InvalidConfig(String),
    #[error("state became non-finite after t = {last_good_t}")]
    NonFiniteState { last_good_t: f64 },
    #[error("{which} crossed 1 near t = {t}; the segment is not smooth")]
    KinkCrossedDuringSegment { which: &'static str, t: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Record every `sample_stride`-th step.
    pub sample_stride: usize,
    /// Components that land in `(-inf, floor)` after a step are raised to the
    /// floor. Exact zeros are left alone.
    pub positivity_floor: f64,
    /// Population level that counts as extinct; `None` means `1e-6·C(0)`.
    pub collapse_threshold: Option<f64>,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            dt: 0.1,
            t_end: 2000.0,
            sample_stride: 1,
            positivity_floor: 1e-300,
            collapse_threshold: None,
        }
    }
}

impl IntegrationConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        IntegrationConfig {
            dt,
            t_end,
            ..Default::default()
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<(), IntegrationError> {
        let bad = |m: String| Err(IntegrationError::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return bad(format!("t_end must be >= dt, got {}", self.t_end));
        }
        if self.sample_stride == 0 {
            return bad("sample_stride must be at least 1".into());
        }
        if !(self.positivity_floor >= 0.0 && self.positivity_floor.is_finite()) {
            return bad(format!(
                "positivity_floor must be non-negative, got {}",
                self.positivity_floor
            ));
        }
        if let Some(th) = self.collapse_threshold {
            if !(th > 0.0 && th.is_finite()) {
                return bad(format!("collapse_threshold must be positive, got {th}"));
            }
        }
        Ok(())
    }

    /// The configured threshold, or `1e-6·C(0)` (`1e-6` when `C(0) = 0`).
    pub fn threshold_for(&self, initial: &State4) -> f64 {
        self.collapse_threshold.unwrap_or(if initial.c > 0.0 {
            1e-6 * initial.c
        } else {
            1e-6
        })
    }

    /// Number of steps; the last one ends at or just past `t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt * (1.0 - 1e-12)).ceil() as usize
    }
}

/// One recorded point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: State4,
    pub flux: FluxBreakdown,
    /// Right-hand side evaluated at `(t, state)`.
    pub rhs: State4,
    /// `c/e`, absent when `e = 0`.
    pub v_ratio: Option<f64>,
    pub y_lyap: f64,
}

impl Sample {
    pub fn evaluate(t: f64, state: State4, p: &ParameterSet, variant: Variant) -> Self {
        let flux = fluxes_raw(&state, p);
        let rhs = derivative(&state, p, &flux, variant);
        Sample {
            t,
            state,
            flux,
            rhs,
            v_ratio: (state.e > 0.0).then(|| state.c / state.e),
            y_lyap: (state.c + state.e) * p.sigma / (p.xi2 - p.xi1) + state.b_stor,
        }
    }

    pub fn b_total(&self) -> f64 {
        self.state.b_total()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t0: f64,
    /// Nominal spacing between samples.
    pub dt_sample: f64,
    pub samples: Vec<Sample>,
    /// Number of component clamps applied while integrating.
    pub clamp_count: u64,
    pub positivity_floor: f64,
}

impl Trajectory {
    /// Wraps externally produced samples, e.g. ones read back from disk.
    pub fn from_samples(samples: Vec<Sample>, positivity_floor: f64) -> Self {
        let t0 = samples.first().map_or(0.0, |s| s.t);
        let dt_sample = match samples.as_slice() {
            [a, b, ..] => b.t - a.t,
            _ => 0.0,
        };
        Trajectory {
            t0,
            dt_sample,
            samples,
            clamp_count: 0,
            positivity_floor,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }
}

/// One classical RK4 step for `y' = f(t, y)`.
#[inline]
pub fn rk4_step<const N: usize>(
    f: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let axpy = |a: f64, k: &[f64; N]| -> [f64; N] { std::array::from_fn(|i| y[i] + a * k[i]) };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(0.5 * h, &k1));
    let k3 = f(t + 0.5 * h, &axpy(0.5 * h, &k2));
    let k4 = f(t + h, &axpy(h, &k3));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

fn model_field(model: &Model, variant: Variant) -> impl FnMut(f64, &[f64; 4]) -> [f64; 4] + '_ {
    move |t, y| {
        let s = State4::from_array(*y);
        let p = model.at(t);
        derivative(&s, &p, &fluxes_raw(&s, &p), variant).to_array()
    }
}

fn clamp(y: &mut [f64; 4], floor: f64) -> u64 {
    let mut n = 0;
    for v in y.iter_mut() {
        if *v < floor && *v != 0.0 {
            *v = floor;
            n += 1;
        }
    }
    n
}

/// Integrates from `t = 0` to `cfg.t_end` with fixed steps of `cfg.dt`.
///
/// The first and last steps are always recorded, along with every
/// `sample_stride`-th step in between.
pub fn integrate(
    initial: State4,
    model: &Model,
    variant: Variant,
    cfg: &IntegrationConfig,
) -> Result<Trajectory, IntegrationError> {
    cfg.validate()?;
    model.check_variant(variant)?;
    initial.validate()?;

    let n = cfg.steps();
    let mut samples = Vec::with_capacity(n / cfg.sample_stride + 2);
    let mut f = model_field(model, variant);
    let mut y = initial.to_array();
    let mut clamps = 0u64;
    samples.push(Sample::evaluate(0.0, initial, &model.at(0.0), variant));

    for k in 0..n {
        let t = k as f64 * cfg.dt;
        let mut next = rk4_step(&mut f, t, &y, cfg.dt);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(IntegrationError::NonFiniteState { last_good_t: t });
        }
        clamps += clamp(&mut next, cfg.positivity_floor);
        y = next;
        let step = k + 1;
        if step % cfg.sample_stride == 0 || step == n {
            let t1 = step as f64 * cfg.dt;
            samples.push(Sample::evaluate(
                t1,
                State4::from_array(y),
                &model.at(t1),
                variant,
            ));
        }
    }

    Ok(Trajectory {
        t0: 0.0,
        dt_sample: cfg.dt * cfg.sample_stride as f64,
        samples,
        clamp_count: clamps,
        positivity_floor: cfg.positivity_floor,
    })
}

/// Final state after integrating `y' = f(t, y)` over `[0, t_end]` with `n` steps.
pub fn final_state<const N: usize>(
    f: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    y0: [f64; N],
    t_end: f64,
    n: usize,
) -> [f64; N] {
    let h = t_end / n as f64;
    (0..n).fold(y0, |y, k| rk4_step(f, k as f64 * h, &y, h))
}

fn max_diff<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// `log2` of the ratio of successive step-halving differences over `[0, t_end]`
/// starting from `n` steps.
pub fn observed_order<const N: usize>(
    f: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    y0: [f64; N],
    t_end: f64,
    n: usize,
) -> f64 {
    let y1 = final_state(f, y0, t_end, n);
    let y2 = final_state(f, y0, t_end, 2 * n);
    let y4 = final_state(f, y0, t_end, 4 * n);
    (max_diff(&y1, &y2) / max_diff(&y2, &y4)).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Observed order `log2(|y_h − y_{h/2}| / |y_{h/2} − y_{h/4}|)`.
    pub order: f64,
    /// `|y_h − y_{h/2}|` in the max norm.
    pub diff_coarse: f64,
    /// `|y_{h/2} − y_{h/4}|` in the max norm.
    pub diff_fine: f64,
    /// `diff_fine` relative to the largest final component.
    pub relative_fine: f64,
}

/// Runs the segment `[0, cfg.t_end]` at `dt`, `dt/2` and `dt/4` and reports
/// the observed order.
///
/// Fails if `Z` or `κZ` crosses 1 at any stage evaluation, since the
/// right-hand side is only piecewise smooth there.
pub fn convergence_check(
    initial: State4,
    model: &Model,
    variant: Variant,
    cfg: &IntegrationConfig,
) -> Result<ConvergenceReport, IntegrationError> {
    cfg.validate()?;
    model.check_variant(variant)?;
    initial.validate()?;

    let p0 = model.at(0.0);
    let side = |p: &ParameterSet, s: &State4| {
        let z = fluxes_raw(s, p).z;
        (z >= 1.0, p.kappa * z >= 1.0)
    };
    let start = side(&p0, &initial);
    let mut crossing: Option<IntegrationError> = None;
    let mut f = |t: f64, y: &[f64; 4]| {
        let s = State4::from_array(*y);
        let p = model.at(t);
        let fl = fluxes_raw(&s, &p);
        if crossing.is_none() {
            let now = (fl.z >= 1.0, p.kappa * fl.z >= 1.0);
            if now.0 != start.0 {
                crossing = Some(IntegrationError::KinkCrossedDuringSegment { which: "Z", t });
            } else if now.1 != start.1 {
                crossing = Some(IntegrationError::KinkCrossedDuringSegment { which: "κZ", t });
            }
        }
        derivative(&s, &p, &fl, variant).to_array()
    };

    let n = cfg.steps();
    let t_end = n as f64 * cfg.dt;
    let y0 = initial.to_array();
    let y1 = final_state(&mut f, y0, t_end, n);
    let y2 = final_state(&mut f, y0, t_end, 2 * n);
    let y4 = final_state(&mut f, y0, t_end, 4 * n);
    if let Some(e) = crossing {
        return Err(e);
    }
    if [y1, y2, y4].iter().flatten().any(|v| !v.is_finite()) {
        return Err(IntegrationError::NonFiniteState { last_good_t: 0.0 });
    }
    let diff_coarse = max_diff(&y1, &y2);
    let diff_fine = max_diff(&y2, &y4);
    let scale = State4::from_array(y4).max_abs().max(f64::MIN_POSITIVE);
    Ok(ConvergenceReport {
        order: (diff_coarse / diff_fine).log2(),
        diff_coarse,
        diff_fine,
        relative_fine: diff_fine / scale,
    })
}

/// Max-norm difference between final states at `dt` and `dt/2`, relative to
/// the largest final component.
pub fn step_halving_error(
    initial: State4,
    model: &Model,
    variant: Variant,
    cfg: &IntegrationConfig,
) -> Result<f64, IntegrationError> {
    let coarse = integrate(initial, model, variant, &cfg.with_stride(usize::MAX))?;
    let fine_cfg = IntegrationConfig {
        dt: cfg.dt / 2.0,
        ..cfg.with_stride(usize::MAX)
    };
    let fine = integrate(initial, model, variant, &fine_cfg)?;
    let a = coarse.last().map(|s| s.state).unwrap_or_default();
    let b = fine.last().map(|s| s.state).unwrap_or_default();
    let scale = a.max_abs().max(b.max_abs()).max(f64::MIN_POSITIVE);
    Ok(max_diff(&a.to_array(), &b.to_array()) / scale)
}

/// First times at which `c` and `e` drop below a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CollapseEvent {
    pub t_c_below: Option<f64>,
    pub t_e_below: Option<f64>,
    /// Whether any reported time was interpolated between samples.
    pub interpolated: bool,
}

impl CollapseEvent {
    /// Time by which both populations are below the threshold.
    pub fn both(&self) -> Option<f64> {
        Some(self.t_c_below?.max(self.t_e_below?))
    }

    pub fn is_empty(&self) -> bool {
        self.t_c_below.is_none() && self.t_e_below.is_none()
    }
}

fn first_below(
    samples: &[Sample],
    threshold: f64,
    value: impl Fn(&Sample) -> f64,
) -> Option<(f64, bool)> {
    let i = samples.iter().position(|s| value(s) < threshold)?;
    if i == 0 {
        return Some((samples[0].t, false));
    }
    let (a, b) = (&samples[i - 1], &samples[i]);
    let (va, vb) = (value(a), value(b));
    Some((a.t + (va - threshold) / (va - vb) * (b.t - a.t), true))
}

/// Scans for the first crossing of `c` and of `e` below `threshold`,
/// interpolating linearly between the bracketing samples.
pub fn detect_collapse(traj: &Trajectory, threshold: f64) -> CollapseEvent {
    let c = first_below(&traj.samples, threshold, |s| s.state.c);
    let e = first_below(&traj.samples, threshold, |s| s.state.e);
    CollapseEvent {
        t_c_below: c.map(|x| x.0),
        t_e_below: e.map(|x| x.0),
        interpolated: c.is_some_and(|x| x.1) || e.is_some_and(|x| x.1),
    }
}
