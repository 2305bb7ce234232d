//! Interior equilibria of the downward-mobility model.
//!
//! Two independent routes are provided. [`closed_form_equilibrium`]
//! evaluates the `L1, L2, L3` expressions as printed. [`numerical_equilibrium`]
//! solves `rhs = 0` directly with damped Newton, falling back to a 1-D
//! bisection along the branch `Z < 1`. [`compare_equilibria`] runs both and
//! reports residuals, branch flags and the distance between them.
//!
//! The 1-D reduction follows the branch relations. For a trial `b_env` in
//! `(0, λ)`:
//!
//! * `C = (γ/ν)(1 − b_env/λ)` from `B_env' = 0`,
//! * `B_stor = γρ/(σ + ερ)·b_env(1 − b_env/λ)` from `B_stor' = 0` with `F = σB_stor/ρ`,
//! * `E` is the unique positive root of `G(κZ(E)) = μE`, i.e. `E' = 0`.
//!
//! The remaining residual `C' = G(Z)·C + μE²` vanishes at an equilibrium.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::integrator::{
    detect_collapse, integrate, CollapseEvent, IntegrationConfig, IntegrationError,
};
use crate::model::{fluxes_raw, rhs_raw, Model, ParameterSet, State4, Variant};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EquilibriumError {
    #[error("mu = 0: there is no interior equilibrium without mobility")]
    MobilityZero,
    #[error("the L3 radicand is negative ({radicand:e})")]
    NegativeRadicand { radicand: f64 },
    #[error("no converged equilibrium after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("solution leaves the branch Z < 1, κZ <= 1 (Z = {z}, κZ = {kappa_z})")]
    BranchViolated { z: f64, kappa_z: f64, state: State4 },
    #[error("equilibria need constant parameters")]
    NeedsConstantParams,
    #[error("only a boundary equilibrium was found ({state:?}); there is no interior root")]
    BoundaryOnly { state: State4 },
}

const MAX_ITER: usize = 200;
const FD_STEP: f64 = 1e-7;
const TOL: f64 = 1e-12;

fn constant_params(model: &Model) -> Result<ParameterSet, EquilibriumError> {
    let p = *model
        .constant()
        .ok_or(EquilibriumError::NeedsConstantParams)?;
    if p.mu == 0.0 {
        return Err(EquilibriumError::MobilityZero);
    }
    Ok(p)
}

/// Intermediate constants of the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormTerms {
    pub l1: f64,
    pub l2: f64,
    /// `(λL1)² + L2² − 6λL1L2 − 4λξ1²L1`.
    pub radicand: f64,
}

pub fn closed_form_terms(p: &ParameterSet) -> ClosedFormTerms {
    let l1 = p.gamma * p.xi1 * (p.xi2 - p.xi1) * (p.kappa * p.sigma + 1.0)
        / (p.sigma + p.epsilon * p.rho);
    let l2 = p.gamma * p.xi1 * p.mu / p.nu;
    let ll = p.lambda * l1;
    let radicand = ll * ll + l2 * l2 - 6.0 * ll * l2 - 4.0 * p.lambda * p.xi1 * p.xi1 * l1;
    ClosedFormTerms { l1, l2, radicand }
}

/// The printed closed-form equilibrium, evaluated verbatim.
///
/// The result is not validated; components may be negative.
pub fn closed_form_equilibrium(model: &Model) -> Result<State4, EquilibriumError> {
    let p = constant_params(model)?;
    let ClosedFormTerms { l1, l2, radicand } = closed_form_terms(&p);
    if radicand < 0.0 {
        return Err(EquilibriumError::NegativeRadicand { radicand });
    }
    let l3 = radicand.sqrt() / l1;
    let b_env = (-l3 - (p.lambda * l1 - l2)) / (2.0 * l1);
    let logistic = b_env * (1.0 - b_env / p.lambda);
    let b_stor = p.gamma * p.rho / (p.sigma + p.epsilon * p.rho) * logistic;
    let c = p.gamma / p.nu * (1.0 - b_env / p.lambda);
    let e = (p.xi1 - p.xi2) / p.xi1 * b_stor - c;
    Ok(State4::new(b_env, b_stor, c, e))
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Candidate state on the `Z < 1` branch at `b_env`, and the residual
/// `G(Z)·C + μE²` there.
pub fn reduced_state(p: &ParameterSet, b_env: f64) -> (State4, f64) {
    let logistic = p.gamma * b_env * (1.0 - b_env / p.lambda);
    let c = p.gamma / p.nu * (1.0 - b_env / p.lambda);
    let b_stor = logistic / (p.sigma / p.rho + p.epsilon);
    let elite_rate = |e: f64| {
        let s = State4::new(b_env, b_stor, c, e);
        fluxes_raw(&s, p).g_kz - p.mu * e
    };
    let e = if elite_rate(0.0) <= 0.0 {
        0.0
    } else {
        let mut hi = if p.mu > 0.0 { p.xi2 / p.mu } else { c.max(1.0) };
        while elite_rate(hi) > 0.0 && hi.is_finite() {
            hi *= 2.0;
        }
        bisect(0.0, hi, elite_rate)
    };
    let s = State4::new(b_env, b_stor, c, e);
    let r = fluxes_raw(&s, p).g_z * c + p.mu * e * e;
    (s, r)
}

/// The residual of the 1-D reduction at `b_env`.
pub fn reduced_residual(p: &ParameterSet, b_env: f64) -> f64 {
    reduced_state(p, b_env).1
}

/// Sign changes of the reduced residual on `(0, λ)`, each refined by
/// bisection.
///
/// The scan uses `n` evenly spaced interior points plus points clustered
/// geometrically at both ends, where roots can sit within `10⁻¹²·λ` of
/// the boundary.
pub fn reduced_roots(p: &ParameterSet, n: usize) -> Vec<f64> {
    let grid = scan_grid(p.lambda, n);
    let values: Vec<f64> = grid.iter().map(|&b| reduced_residual(p, b)).collect();
    let mut roots = Vec::new();
    for i in 0..grid.len() {
        if values[i] == 0.0 {
            roots.push(grid[i]);
        } else if i + 1 < grid.len()
            && values[i + 1] != 0.0
            && (values[i] < 0.0) != (values[i + 1] < 0.0)
        {
            roots.push(bisect(grid[i], grid[i + 1], |x| reduced_residual(p, x)));
        }
    }
    roots
}

/// Sorted sample points used by [`reduced_roots`].
pub fn scan_grid(lambda: f64, n: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = (1..=n)
        .map(|i| lambda * i as f64 / (n + 1) as f64)
        .collect();
    for k in 3..=12 {
        let d = lambda * 10f64.powi(-k);
        grid.push(d);
        grid.push(lambda - d);
    }
    grid.retain(|b| *b > 0.0 && *b < lambda);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// `Z < 1` and `κZ ≤ 1` at a state, plus non-negativity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchFlags {
    pub z: f64,
    pub kappa_z: f64,
    pub z_below_one: bool,
    pub kappa_z_at_most_one: bool,
    pub nonnegative: bool,
}

impl BranchFlags {
    pub fn at(p: &ParameterSet, s: &State4) -> Self {
        let z = fluxes_raw(s, p).z;
        BranchFlags {
            z,
            kappa_z: p.kappa * z,
            z_below_one: z < 1.0,
            kappa_z_at_most_one: p.kappa * z <= 1.0,
            nonnegative: s.to_array().iter().all(|v| *v >= 0.0),
        }
    }

    pub fn valid(&self) -> bool {
        self.z_below_one && self.kappa_z_at_most_one && self.nonnegative
    }
}

/// Max-norm of the mobility right-hand side.
pub fn residual(p: &ParameterSet, s: &State4) -> f64 {
    rhs_raw(s, p, Variant::Mobility).max_abs()
}

fn converged(p: &ParameterSet, s: &State4) -> bool {
    residual(p, s) < TOL * (1.0 + s.max_abs())
}

fn interior(s: &State4) -> bool {
    let floor = 1e-9 * s.max_abs();
    s.to_array().iter().all(|v| *v > floor)
}

fn newton(p: &ParameterSet, guess: State4, iterations: usize) -> Result<State4, (State4, f64)> {
    let f = |x: &Vector4<f64>| {
        let s = State4::from_array([x[0], x[1], x[2], x[3]]);
        Vector4::from(rhs_raw(&s, p, Variant::Mobility).to_array())
    };
    let to_state = |x: &Vector4<f64>| State4::from_array([x[0], x[1], x[2], x[3]]);
    let mut x = Vector4::from(guess.to_array());
    let mut fx = f(&x);
    for _ in 0..iterations {
        if converged(p, &to_state(&x)) {
            return Ok(to_state(&x));
        }
        let mut jac = Matrix4::zeros();
        for j in 0..4 {
            let h = FD_STEP * x[j].abs().max(1e-8);
            let mut xh = x;
            xh[j] += h;
            jac.set_column(j, &((f(&xh) - fx) / h));
        }
        let Some(step) = jac.lu().solve(&(-fx)) else {
            break;
        };
        let norm = fx.amax();
        let mut alpha = 1.0;
        loop {
            let trial = x + step * alpha;
            if trial.iter().all(|v| *v > 0.0) {
                let ft = f(&trial);
                if ft.amax() < norm || alpha < 1e-3 {
                    x = trial;
                    fx = ft;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-10 {
                return Err((to_state(&x), norm));
            }
        }
    }
    let s = to_state(&x);
    if converged(p, &s) {
        Ok(s)
    } else {
        Err((s, residual(p, &s)))
    }
}

/// Default starting point: the branch relations at `b_env = λ/2`.
pub fn default_guess(p: &ParameterSet) -> State4 {
    let (mut s, _) = reduced_state(p, 0.5 * p.lambda);
    if s.e <= 0.0 {
        s.e = 0.1 * s.c;
    }
    s
}

/// Solves `rhs = 0` for the mobility model on the `Z < 1`, `κZ ≤ 1` branch.
///
/// Newton runs first from `guess`. If it stalls or lands on a boundary
/// equilibrium, the reduced 1-D problem is bracketed on 10⁴ points and the
/// root nearest the guess is polished with Newton.
pub fn numerical_equilibrium(model: &Model, guess: State4) -> Result<State4, EquilibriumError> {
    let p = constant_params(model)?;
    let direct = newton(&p, guess, MAX_ITER);
    let solution = match direct {
        Ok(s) if interior(&s) => s,
        other => {
            let roots = reduced_roots(&p, 10_000);
            let nearest = roots
                .iter()
                .copied()
                .min_by(|a, b| (a - guess.b_env).abs().total_cmp(&(b - guess.b_env).abs()));
            let Some(b_env) = nearest else {
                return Err(match other {
                    Ok(state) => EquilibriumError::BoundaryOnly { state },
                    Err((_, residual)) => EquilibriumError::NoConvergence {
                        iterations: MAX_ITER,
                        residual,
                    },
                });
            };
            let (start, _) = reduced_state(&p, b_env);
            match newton(&p, start, MAX_ITER) {
                Ok(s) => s,
                Err(_) if converged(&p, &start) => start,
                Err((_, r)) => {
                    return Err(EquilibriumError::NoConvergence {
                        iterations: MAX_ITER,
                        residual: r,
                    })
                }
            }
        }
    };
    let flags = BranchFlags::at(&p, &solution);
    if !(flags.z_below_one && flags.kappa_z_at_most_one) {
        return Err(EquilibriumError::BranchViolated {
            z: flags.z,
            kappa_z: flags.kappa_z,
            state: solution,
        });
    }
    Ok(solution)
}

/// Side-by-side report of the two equilibrium routes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub terms: ClosedFormTerms,
    pub closed_form: Option<State4>,
    pub closed_form_error: Option<String>,
    pub residual_closed: Option<f64>,
    pub branch_closed: Option<BranchFlags>,
    pub numerical: Option<State4>,
    pub numerical_error: Option<String>,
    pub residual_numerical: Option<f64>,
    pub branch_numerical: Option<BranchFlags>,
    /// Max-norm distance between the two states when both exist.
    pub discrepancy: Option<f64>,
    /// Roots of the reduced 1-D residual on `(0, λ)`.
    pub reduced_roots: Vec<f64>,
}

/// Runs both routes; only [`EquilibriumError::MobilityZero`] and
/// [`EquilibriumError::NeedsConstantParams`] abort the comparison.
pub fn compare_equilibria(
    model: &Model,
    guess: Option<State4>,
) -> Result<EquilibriumResult, EquilibriumError> {
    let p = constant_params(model)?;
    let closed = closed_form_equilibrium(model);
    let numerical = numerical_equilibrium(model, guess.unwrap_or_else(|| default_guess(&p)));
    let (closed_form, closed_form_error) = split(closed);
    let (numerical, numerical_error) = split(numerical);
    let discrepancy = match (closed_form, numerical) {
        (Some(a), Some(b)) => Some(
            a.to_array()
                .iter()
                .zip(b.to_array())
                .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())),
        ),
        _ => None,
    };
    Ok(EquilibriumResult {
        terms: closed_form_terms(&p),
        residual_closed: closed_form.map(|s| residual(&p, &s)),
        branch_closed: closed_form.map(|s| BranchFlags::at(&p, &s)),
        closed_form,
        closed_form_error,
        residual_numerical: numerical.map(|s| residual(&p, &s)),
        branch_numerical: numerical.map(|s| BranchFlags::at(&p, &s)),
        numerical,
        numerical_error,
        discrepancy,
        reduced_roots: reduced_roots(&p, 10_000),
    })
}

fn split(r: Result<State4, EquilibriumError>) -> (Option<State4>, Option<String>) {
    match r {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

/// Outcome of integrating from a perturbed equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityProbe {
    /// Relative size of the initial kick applied to every component.
    pub perturbation: f64,
    pub t_end: f64,
    /// Max-norm distance from the equilibrium at `t_end`, relative to the
    /// equilibrium's largest component.
    pub final_deviation: f64,
    /// Whether the final deviation is within 0.5%.
    pub returned: bool,
    pub collapse: CollapseEvent,
    pub final_state: State4,
}

/// Integrates the mobility model from `equilibrium·(1 + perturbation)`.
pub fn stability_probe(
    model: &Model,
    equilibrium: State4,
    perturbation: f64,
    dt: f64,
    t_end: f64,
) -> Result<StabilityProbe, IntegrationError> {
    let start = State4::from_array(equilibrium.to_array().map(|v| v * (1.0 + perturbation)));
    let cfg = IntegrationConfig::new(dt, t_end).with_stride(((1.0 / dt).round() as usize).max(1));
    let traj = integrate(start, model, Variant::Mobility, &cfg)?;
    let last = traj.last().map(|s| s.state).unwrap_or(start);
    let deviation = last
        .to_array()
        .iter()
        .zip(equilibrium.to_array())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
        / equilibrium.max_abs().max(f64::MIN_POSITIVE);
    let threshold = IntegrationConfig::default().threshold_for(&start);
    Ok(StabilityProbe {
        perturbation,
        t_end,
        final_deviation: deviation,
        returned: deviation <= 5e-3,
        collapse: detect_collapse(&traj, threshold),
        final_state: last,
    })
}
