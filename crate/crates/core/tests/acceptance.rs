//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use handy::equilibrium::{
    closed_form_equilibrium, default_guess, numerical_equilibrium, reduced_residual, residual,
    stability_probe,
};
use handy::harness::{simulate, Scenario};
use handy::hypotheses::{
    build_trapping_region, check_containment, check_gronwall_decay, check_lyapunov_ratio,
    check_rate_gap, check_three_birds,
};
use handy::integrator::{convergence_check, step_halving_error, IntegrationConfig, Trajectory};
use handy::model::eval_g;
use handy::{ParameterSet, State4, Variant};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn scenario(name: &str, overrides: &[&str]) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.toml"));
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    Scenario::load(&path, &overrides).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn run(s: &Scenario) -> Trajectory {
    simulate(s)
        .unwrap_or_else(|e| panic!("{}: {e}", s.name))
        .trajectory
}

fn fmt_t(t: Option<f64>) -> String {
    t.map_or("never".into(), |t| format!("{t:.2}"))
}

const SHIPPED: [&str; 4] = ["fig1-left", "fig1-right", "mobility", "handy-star"];

fn collapse() -> Verdict {
    let s = scenario("fig1-right", &["integration.t_end=50000.0"]);
    let start = Instant::now();
    let r = simulate(&s).expect("integration");
    let lyap = check_lyapunov_ratio(&r.trajectory);
    let elapsed = start.elapsed().as_secs_f64();
    let last = r.trajectory.last().unwrap().state;
    let lyap_ok = lyap.as_ref().is_ok_and(|o| o.passed);
    verdict(
        r.collapse.both().is_some() && lyap_ok && elapsed < 10.0,
        format!(
            "threshold {:e}; C below at {}, E below at {}; E(50000) = {:.4}; C/E non-increasing: {}; {elapsed:.2} s",
            r.threshold,
            fmt_t(r.collapse.t_c_below),
            fmt_t(r.collapse.t_e_below),
            last.e,
            match &lyap {
                Ok(o) => format!("{} (worst {:e})", o.passed, o.worst_violation),
                Err(e) => e.to_string(),
            },
        ),
    )
}

fn non_collapse() -> Verdict {
    let s = scenario("fig1-left", &[]);
    let traj = run(&s);
    let c: Vec<f64> = traj.samples.iter().map(|x| x.state.c).collect();
    let min_c = c.iter().copied().fold(f64::INFINITY, f64::min);
    let maxima = c.windows(3).filter(|w| w[1] > w[0] && w[1] >= w[2]).count();
    let region = build_trapping_region(&s.model, &s.initial);
    let bounded = traj.samples.iter().all(|x| x.state.is_finite())
        && check_containment(&traj, &region).passed;
    verdict(
        min_c > 1.0 && bounded && maxima >= 2,
        format!("min C = {min_c:.4e}; bounded: {bounded}; local maxima of C: {maxima}"),
    )
}

fn trapping_region() -> Verdict {
    let mut ok = true;
    let mut detail = Vec::new();
    for name in ["fig1-left", "fig1-right"] {
        let s = scenario(name, &[]);
        let region = build_trapping_region(&s.model, &s.initial);
        let expected = (region.b4 - 1e7).abs() <= 1e-6 && (region.c5 - 118125.0).abs() <= 1e-6;
        let o = check_containment(&run(&s), &region);
        ok &= expected && o.passed;
        detail.push(format!(
            "{name}: b4 = {:e}, c5 = {}, contained: {} (worst excess {:e})",
            region.b4, region.c5, o.passed, o.worst_violation
        ));
    }
    verdict(ok, detail.join("; "))
}

fn three_birds() -> Verdict {
    let mut ok = true;
    let mut detail = Vec::new();
    for name in SHIPPED {
        let s = scenario(name, &[]);
        let traj = run(&s);
        let tb = check_three_birds(&traj, &s.model);
        let gw = check_gronwall_decay(&traj, &s.model);
        ok &= tb.passed && gw.passed;
        detail.push(format!(
            "{name}: slack {} ({:e}), gronwall {} ({:e})",
            tb.passed, tb.worst_violation, gw.passed, gw.worst_violation
        ));
    }
    verdict(ok, detail.join("; "))
}

fn rate_ordering() -> Verdict {
    let p = ParameterSet::baseline();
    let mut rng = StdRng::seed_from_u64(0x4841_4e44);
    let mut bad_pairs = 0;
    for _ in 0..100_000 {
        let z: f64 = rng.random_range(0.0..3.0);
        let kappa: f64 = rng.random_range(1.0..10.0);
        let (g_z, g_kz) = (eval_g(z, &p).unwrap(), eval_g(kappa * z, &p).unwrap());
        if g_kz < g_z {
            bad_pairs += 1;
        }
    }
    let mut bad_samples = 0;
    let mut samples = 0;
    for name in SHIPPED {
        let traj = run(&scenario(name, &[]));
        samples += traj.len();
        bad_samples += traj
            .samples
            .iter()
            .filter(|x| x.flux.g_kz < x.flux.g_z)
            .count();
    }
    verdict(
        bad_pairs == 0 && bad_samples == 0,
        format!("violations: {bad_pairs} of 100000 random pairs, {bad_samples} of {samples} trajectory samples"),
    )
}

fn rate_gap() -> Verdict {
    let s = scenario("fig1-right", &[]);
    let floor = s.model.rate_gap_floor();
    let traj = run(&s);
    let eligible: Vec<_> = traj
        .samples
        .iter()
        .filter(|x| x.flux.g_z.abs() <= floor)
        .collect();
    let worst = eligible
        .iter()
        .map(|x| x.flux.g_kz - x.flux.g_z)
        .fold(f64::INFINITY, f64::min);
    let o = check_rate_gap(&traj, &s.model, None);
    let floor_ok = (floor - 5.7143e-3).abs() < 1e-7;
    let ok = floor_ok
        && !eligible.is_empty()
        && worst > floor - 1e-12
        && o.as_ref().is_ok_and(|o| o.passed);
    verdict(
        ok,
        format!(
            "floor {floor:.6e}; {} eligible samples; smallest gap {worst:.6e}",
            eligible.len()
        ),
    )
}

fn handy_star() -> Verdict {
    let s = scenario("handy-star", &["integration.t_end=50000.0"]);
    let d = s.model.derived();
    let b = d.bounds;
    let constraints = s.variant == Variant::HandyStar && s.model.constant().is_none();
    let r = simulate(&s).expect("integration");
    verdict(
        constraints && r.collapse.both().is_some(),
        format!(
            "schedule accepted: {constraints}; inf gamma {:.4}, sup gamma {:.4}; C below at {}, E below at {}",
            b.gamma.inf,
            b.gamma.sup,
            fmt_t(r.collapse.t_c_below),
            fmt_t(r.collapse.t_e_below)
        ),
    )
}

fn mobility_equilibrium() -> Verdict {
    let s = scenario("mobility", &[]);
    let p = *s.model.constant().unwrap();
    let closed = match closed_form_equilibrium(&s.model) {
        Ok(x) => format!(
            "closed form {:?} residual {:e}",
            x.to_array(),
            residual(&p, &x)
        ),
        Err(e) => format!("closed form: {e}"),
    };
    match numerical_equilibrium(&s.model, default_guess(&p)) {
        Ok(eq) => {
            let r = residual(&p, &eq);
            let probe =
                stability_probe(&s.model, eq, 0.01, s.integration.dt, 5000.0).expect("probe");
            verdict(
                r < 1e-10 && probe.collapse.is_empty(),
                format!(
                    "equilibrium {:?} residual {r:e}; 1% kick: deviation {:.3e} at t = 5000, collapse: {}; {closed}",
                    eq.to_array(),
                    probe.final_deviation,
                    !probe.collapse.is_empty()
                ),
            )
        }
        Err(e) => verdict(false, format!("numerical: {e}; {closed}")),
    }
}

fn no_equilibrium_without_mobility() -> Verdict {
    let p = ParameterSet::baseline().with_mu(0.0);
    let n = 10_000;
    let values: Vec<f64> = (1..=n)
        .map(|i| reduced_residual(&p, p.lambda * i as f64 / (n + 1) as f64))
        .collect();
    let changes = values
        .windows(2)
        .filter(|w| w[0].signum() != w[1].signum())
        .count();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    verdict(
        changes == 0,
        format!("{changes} sign changes; range [{lo:.4e}, {hi:.4e}]"),
    )
}

fn integrator_order() -> Verdict {
    let m = ParameterSet::baseline().validate().unwrap();
    let initial = State4::new(300.0, 0.0, 1000.0, 1.0);
    let conv = convergence_check(
        initial,
        &m,
        Variant::Handy,
        &IntegrationConfig::new(0.1, 1.0),
    );
    let halving = step_halving_error(
        initial,
        &m,
        Variant::Handy,
        &IntegrationConfig::new(0.1, 100.0),
    );
    match (conv, halving) {
        (Ok(c), Ok(h)) => verdict(
            (3.5..=4.5).contains(&c.order) && h < 1e-6,
            format!(
                "observed order {:.4} on [0, 1]; step-halving difference {h:.3e} on [0, 100]",
                c.order
            ),
        ),
        (c, h) => verdict(false, format!("{:?} / {:?}", c.err(), h.err())),
    }
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("collapse", collapse),
        ("non_collapse_control", non_collapse),
        ("trapping_region", trapping_region),
        ("three_birds_and_gronwall", three_birds),
        ("rate_ordering", rate_ordering),
        ("rate_gap", rate_gap),
        ("handy_star_robustness", handy_star),
        ("mobility_equilibrium", mobility_equilibrium),
        (
            "no_equilibrium_without_mobility",
            no_equilibrium_without_mobility,
        ),
        ("integrator_order", integrator_order),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let v = f();
        println!(
            "{} {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if !v.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
