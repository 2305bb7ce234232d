use serde::{Deserialize, Serialize};

use super::{CheckName, CheckOutcome, HypothesisError, TrappingRegion, Worst};
use crate::integrator::{Sample, Trajectory};
use crate::model::Model;

const RATE_TOL: f64 = 1e-12;
const RATIO_TOL: f64 = 1e-9;
const BIRDS_TOL: f64 = 1e-12;
const GRONWALL_TOL: f64 = 1e-12;
const CONTRACTION_TOL: f64 = 1e-12;

fn require_populations(traj: &Trajectory, check: CheckName) -> Result<(), HypothesisError> {
    match traj
        .samples
        .iter()
        .find(|s| !(s.state.c > 0.0 && s.state.e > 0.0))
    {
        Some(s) => Err(HypothesisError::PopulationZeroAtSample { check, t: s.t }),
        None => Ok(()),
    }
}

fn above_floor(traj: &Trajectory, s: &Sample) -> bool {
    s.state.c > traj.positivity_floor && s.state.e > traj.positivity_floor
}

fn ratio(s: &Sample) -> f64 {
    s.v_ratio.unwrap_or(s.state.c / s.state.e)
}

/// Every sample lies in the box: violation is the normalized excess over
/// `b4` or `c5`, held to tolerance 0.
pub fn check_containment(traj: &Trajectory, region: &TrappingRegion) -> CheckOutcome {
    let mut w = Worst::new(CheckName::Containment, 0.0);
    for s in &traj.samples {
        w.observe(region.excess(&s.state), s.t, s.state);
    }
    let mut o = w.finish();
    o.note = Some(format!("b4 = {:e}, c5 = {:e}", region.b4, region.c5));
    o
}

/// `G(κZ) ≥ G(Z)` at every sample; violation is `g_z − g_kz`.
pub fn check_rate_ordering(traj: &Trajectory) -> Result<CheckOutcome, HypothesisError> {
    require_populations(traj, CheckName::RateOrdering)?;
    let mut w = Worst::new(CheckName::RateOrdering, RATE_TOL);
    for s in &traj.samples {
        w.observe(s.flux.g_z - s.flux.g_kz, s.t, s.state);
    }
    Ok(w.finish())
}

/// In the band `|G(Z)| ≤ δ`, the Elite rate exceeds the Commoner rate by at
/// least the floor `inf((κ−1)/(κ+2))·(−ξ1)`; violation is `floor − gap`.
///
/// `delta` defaults to the floor.
pub fn check_rate_gap(
    traj: &Trajectory,
    model: &Model,
    delta: Option<f64>,
) -> Result<CheckOutcome, HypothesisError> {
    require_populations(traj, CheckName::RateGap)?;
    let floor = model.rate_gap_floor();
    let delta = delta.unwrap_or(floor);
    let mut w = Worst::new(CheckName::RateGap, RATE_TOL);
    let mut min_gap = f64::INFINITY;
    for s in &traj.samples {
        if s.flux.g_z.abs() <= delta {
            let gap = s.flux.g_kz - s.flux.g_z;
            min_gap = min_gap.min(gap);
            w.observe(floor - gap, s.t, s.state);
        }
    }
    let mut o = w.finish();
    o.measured = min_gap.is_finite().then_some(min_gap);
    o.note = Some(format!(
        "band |g_z| <= {delta:e}, gap floor {floor:e}; measured = smallest gap in band"
    ));
    Ok(o)
}

/// `V = C/E` never increases: both between consecutive samples (relative
/// change) and in its analytic per-capita rate `c'/c − e'/e`.
///
/// Samples with a population at or below the positivity floor are skipped.
pub fn check_lyapunov_ratio(traj: &Trajectory) -> Result<CheckOutcome, HypothesisError> {
    require_populations(traj, CheckName::LyapunovRatio)?;
    let mut w = Worst::new(CheckName::LyapunovRatio, RATIO_TOL);
    let mut prev: Option<&Sample> = None;
    for s in &traj.samples {
        if !above_floor(traj, s) {
            w.skip();
            prev = None;
            continue;
        }
        let rate = s.rhs.c / s.state.c - s.rhs.e / s.state.e;
        let step = prev.map_or(f64::NEG_INFINITY, |a| {
            let (va, vb) = (ratio(a), ratio(s));
            (vb - va) / va
        });
        w.observe(rate.max(step), s.t, s.state);
        prev = Some(s);
    }
    let mut o = w.finish();
    o.note = Some("violation = max(relative sample-to-sample increase, c'/c - e'/e)".into());
    Ok(o)
}

/// Thresholds of the unit-time contraction check.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ContractionSettings {
    /// Trigger band `|c'/c| ≤ δ2`; defaults to the rate-gap floor.
    pub delta2: Option<f64>,
    /// Required contraction `v(t+1) < v(t)/(1+ε2)`; defaults to `0.1·δ2`.
    pub eps2: Option<f64>,
}

fn interpolate_ratio(samples: &[Sample], t: f64) -> Option<f64> {
    let i = samples.partition_point(|s| s.t < t);
    let b = samples.get(i)?;
    if b.t == t || i == 0 {
        return Some(ratio(b));
    }
    let a = &samples[i - 1];
    let (va, vb) = (ratio(a), ratio(b));
    Some(va + (vb - va) * (t - a.t) / (b.t - a.t))
}

/// Whenever the Commoner per-capita rate is within `δ2` of zero, the ratio
/// `V` shrinks by a factor `1+ε2` over the next unit of time.
///
/// Violation is `(v(t+1) − v(t)/(1+ε2))/v(t)` with `v(t+1)` interpolated.
/// Triggers whose lookahead runs past the end are skipped. `measured` is the
/// largest observed `v(t+1)/v(t)`.
pub fn check_contraction(
    traj: &Trajectory,
    model: &Model,
    settings: &ContractionSettings,
) -> Result<CheckOutcome, HypothesisError> {
    let check = CheckName::Contraction;
    require_populations(traj, check)?;
    let delta2 = settings.delta2.unwrap_or_else(|| model.rate_gap_floor());
    let eps2 = settings.eps2.unwrap_or(0.1 * delta2);
    let samples = &traj.samples;
    let spacing = samples
        .windows(2)
        .map(|w| w[1].t - w[0].t)
        .fold(0.0, f64::max);
    if spacing > 1.0 {
        return Err(HypothesisError::SamplingTooCoarse { check, dt: spacing });
    }
    let t_last = samples.last().map_or(0.0, |s| s.t);
    let mut w = Worst::new(check, CONTRACTION_TOL);
    let mut worst_factor = f64::NEG_INFINITY;
    let mut triggered = 0;
    for s in samples {
        if !above_floor(traj, s) {
            w.skip();
            continue;
        }
        if (s.rhs.c / s.state.c).abs() > delta2 {
            continue;
        }
        triggered += 1;
        if s.t + 1.0 > t_last {
            w.skip();
            continue;
        }
        let Some(ahead) = interpolate_ratio(samples, s.t + 1.0) else {
            w.skip();
            continue;
        };
        let v = ratio(s);
        worst_factor = worst_factor.max(ahead / v);
        w.observe((ahead - v / (1.0 + eps2)) / v, s.t, s.state);
    }
    let span = t_last - traj.first().map_or(0.0, |s| s.t);
    if triggered > 0 && span < 1.0 {
        return Err(HypothesisError::HorizonTooShort { check, span });
    }
    let mut o = w.finish();
    o.measured = worst_factor.is_finite().then_some(worst_factor);
    o.note = Some(format!(
        "trigger |c'/c| <= {delta2:e}, eps2 = {eps2:e}; measured = largest v(t+1)/v(t)"
    ));
    Ok(o)
}

/// `Y' ≤ H − ε̂·Y` at every sample, with `Y'` from the analytic right-hand
/// side. Violation is the excess scaled by `|Y'| + |H| + ε̂·Y`.
pub fn check_three_birds(traj: &Trajectory, model: &Model) -> CheckOutcome {
    let k = model.people_per_food();
    let eps_hat = model.eps_hat();
    let mut w = Worst::new(CheckName::ThreeBirds, BIRDS_TOL);
    for s in &traj.samples {
        let y = model.lyapunov_y(&s.state);
        let dy = k * (s.rhs.c + s.rhs.e) + s.rhs.b_stor;
        let bound = s.flux.h - eps_hat * y;
        let scale = dy.abs() + s.flux.h.abs() + eps_hat * y;
        let v = if scale > 0.0 {
            (dy - bound) / scale
        } else {
            0.0
        };
        w.observe(v, s.t, s.state);
    }
    w.finish()
}

/// Integral form of the three-birds inequality:
/// `Y(t) ≤ Y(s)·e^{−ε̂(t−s)} + ∫ₛᵗ e^{−ε̂(t−u)}·H(u) du` for all sample pairs.
///
/// The minimum of the right-hand side over `s` is carried forward in one
/// pass. The integral uses the trapezoid rule, and a quadrature allowance
/// built from second differences of `H` is added to the bound. Violation is
/// the remaining excess relative to `max(Y(t), bound)`.
pub fn check_gronwall_decay(traj: &Trajectory, model: &Model) -> CheckOutcome {
    let eps_hat = model.eps_hat();
    let samples = &traj.samples;
    let ys: Vec<f64> = samples.iter().map(|s| model.lyapunov_y(&s.state)).collect();
    let hs: Vec<f64> = samples.iter().map(|s| s.flux.h).collect();
    let mut w = Worst::new(CheckName::GronwallDecay, GRONWALL_TOL);
    let mut bound = f64::INFINITY;
    let mut allowance = 0.0;
    for k in 1..samples.len() {
        let dt = samples[k].t - samples[k - 1].t;
        let decay = (-eps_hat * dt).exp();
        bound = bound.min(ys[k - 1]) * decay + 0.5 * dt * (decay * hs[k - 1] + hs[k]);
        let curvature = [
            k.checked_sub(2).map(|j| (j, k - 1, k)),
            (k + 1 < hs.len()).then_some((k - 1, k, k + 1)),
        ]
        .into_iter()
        .flatten()
        .map(|(a, b, c)| (hs[a] - 2.0 * hs[b] + hs[c]).abs())
        .fold(0.0, f64::max);
        allowance = allowance * decay + dt * curvature / 12.0;
        let total = bound + allowance;
        let scale = ys[k].abs().max(total.abs()).max(f64::MIN_POSITIVE);
        w.observe((ys[k] - total) / scale, samples[k].t, samples[k].state);
    }
    let mut o = w.finish();
    o.measured = Some(allowance);
    o.note = Some("measured = final quadrature allowance".into());
    o
}
