use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use handy::harness::csv_io::{read_trajectory, trajectory_to_string};
use handy::harness::figures::FigureSpec;
use handy::harness::output::{atomic_write, write_json, write_jsonl, write_toml};
use handy::harness::run::{
    check_status, check_trajectory, equilibrium_report, report_lines, simulate,
};
use handy::harness::sweep::{rows_to_csv, Sweep, SweepReport};
use handy::harness::{CheckStatus, Scenario, SimulationSummary};
use handy::hypotheses::CheckName;
use handy::integrator::IntegrationError;

#[derive(Parser)]
#[command(
    name = "handy",
    version,
    about = "Simulate and check the HANDY population model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario (or sweep / figure spec) file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config value, e.g. `params.kappa=2.0`. Repeatable.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Collapse threshold for C and E.
    #[arg(long)]
    threshold: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Vec<String> {
        let mut all = self.set.clone();
        let mut push = |key: &str, v: Option<f64>| {
            if let Some(v) = v {
                all.push(format!("integration.{key}={v:?}"));
            }
        };
        push("dt", self.dt);
        push("t_end", self.t_end);
        push("collapse_threshold", self.threshold);
        all
    }

    fn config(&self) -> Result<&Path, Failure> {
        self.config
            .as_deref()
            .ok_or_else(|| Failure::input(anyhow!("--config is required")))
    }

    fn out_dir(&self, scenario: Option<&Scenario>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| scenario.and_then(|s| s.outputs.dir.as_ref().map(PathBuf::from)))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write its trajectory CSV and summary.
    Simulate(Common),
    /// Run hypothesis checks on a trajectory CSV or a freshly simulated scenario.
    Check {
        #[command(flatten)]
        common: Common,
        /// Trajectory CSV; its parameters come from --config or the
        /// `<stem>.resolved.toml` written next to it.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Comma-separated check names; defaults to the scenario's list.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<CheckName>,
    },
    /// Compare the closed-form and numerical mobility equilibria.
    Equilibrium {
        #[command(flatten)]
        common: Common,
        /// Horizon of the perturbation probe.
        #[arg(long, default_value_t = 5000.0)]
        probe_t_end: f64,
    },
    /// Run a one-parameter sweep.
    Sweep(Common),
    /// Simulate every scenario of a figure spec and write the CSVs it reads.
    FigureData(Common),
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn input(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 2,
            error: error.into(),
        }
    }

    fn numerical(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 3,
            error: error.into(),
        }
    }

    fn integration(error: IntegrationError) -> Self {
        match error {
            IntegrationError::InvalidConfig(_) => Failure::input(error),
            _ => Failure::numerical(error),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(c) => cmd_simulate(&c),
        Command::Check {
            common,
            trajectory,
            checks,
        } => cmd_check(&common, trajectory.as_deref(), &checks),
        Command::Equilibrium {
            common,
            probe_t_end,
        } => cmd_equilibrium(&common, probe_t_end),
        Command::Sweep(c) => cmd_sweep(&c),
        Command::FigureData(c) => cmd_figure_data(&c),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load_scenario(path: &Path, overrides: &[String]) -> Result<Scenario, Failure> {
    Scenario::load(path, overrides).map_err(Failure::input)
}

fn write_err(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::input(anyhow::Error::new(e).context(format!("writing {}", path.display())))
}

/// Writes `<stem>.csv`, `<stem>.summary.json` and `<stem>.resolved.toml`.
fn write_simulation(
    scenario: &Scenario,
    dir: &Path,
    csv_name: &str,
) -> Result<SimulationSummary, Failure> {
    let run = simulate(scenario).map_err(Failure::integration)?;
    let csv_path = dir.join(csv_name);
    let text = trajectory_to_string(&run.trajectory).map_err(Failure::input)?;
    atomic_write(&csv_path, text.as_bytes()).map_err(write_err(&csv_path))?;
    let summary = SimulationSummary::new(scenario, &run, Some(csv_name.to_string()));
    let base = csv_name.strip_suffix(".csv").unwrap_or(csv_name);
    let summary_path = dir.join(format!("{base}.summary.json"));
    write_json(&summary_path, &summary).map_err(write_err(&summary_path))?;
    let toml_path = dir.join(format!("{base}.resolved.toml"));
    write_toml(&toml_path, &scenario.resolved()).map_err(write_err(&toml_path))?;
    Ok(summary)
}

fn cmd_simulate(c: &Common) -> Outcome {
    let scenario = load_scenario(c.config()?, &c.overrides())?;
    let dir = c.out_dir(Some(&scenario));
    let summary = write_simulation(&scenario, &dir, &format!("{}.csv", scenario.stem()))?;
    let fmt = |v: Option<f64>| v.map_or("none".to_string(), |t| format!("{t:.3}"));
    println!(
        "{}: {} samples to t = {}, clamps {}, C below threshold at {}, E below at {}",
        scenario.name,
        summary.samples,
        summary.final_t,
        summary.clamp_count,
        fmt(summary.collapse.t_c_below),
        fmt(summary.collapse.t_e_below),
    );
    Ok(0)
}

fn sidecar_for(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}.resolved.toml"))
}

fn cmd_check(c: &Common, trajectory: Option<&Path>, checks: &[CheckName]) -> Outcome {
    let config = match (&c.config, trajectory) {
        (Some(p), _) => p.clone(),
        (None, Some(csv)) => sidecar_for(csv),
        (None, None) => {
            return Err(Failure::input(anyhow!(
                "give --trajectory, --config or both"
            )))
        }
    };
    let mut scenario = load_scenario(&config, &c.overrides())?;
    if !checks.is_empty() {
        scenario.checks = checks.to_vec();
    }
    let (traj, source) = match trajectory {
        Some(csv) => {
            let file = std::fs::File::open(csv)
                .with_context(|| format!("opening {}", csv.display()))
                .map_err(Failure::input)?;
            let traj = read_trajectory(file, scenario.integration.positivity_floor)
                .with_context(|| format!("reading {}", csv.display()))
                .map_err(Failure::input)?;
            (traj, csv.display().to_string())
        }
        None => {
            let run = simulate(&scenario).map_err(Failure::integration)?;
            (
                run.trajectory,
                format!("simulated from {}", config.display()),
            )
        }
    };
    let report = check_trajectory(&scenario, &traj);
    let dir = c.out_dir(Some(&scenario));
    let path = dir.join(format!("{}.report.jsonl", scenario.stem()));
    write_jsonl(&path, &report_lines(&scenario, &source, &report)).map_err(write_err(&path))?;
    for r in &report.checks {
        let verdict = match (&r.outcome, &r.error) {
            (Some(o), _) if o.passed && o.vacuous => "pass (vacuous)".to_string(),
            (Some(o), _) if o.passed => "pass".to_string(),
            (Some(o), _) => format!("FAIL worst {:e}", o.worst_violation),
            (None, Some(e)) => format!("n/a: {e}"),
            (None, None) => "n/a".to_string(),
        };
        println!("{:<16} {verdict}", r.name.as_str());
    }
    Ok(match check_status(&report) {
        CheckStatus::Passed => 0,
        CheckStatus::Failed => 1,
        CheckStatus::PreconditionFailed => 2,
    })
}

fn cmd_equilibrium(c: &Common, probe_t_end: f64) -> Outcome {
    let scenario = load_scenario(c.config()?, &c.overrides())?;
    let report = equilibrium_report(&scenario, probe_t_end).map_err(Failure::input)?;
    let dir = c.out_dir(Some(&scenario));
    let path = dir.join(format!("{}.equilibrium.json", scenario.stem()));
    write_json(&path, &report).map_err(write_err(&path))?;
    let r = &report.result;
    match (&r.closed_form, &r.closed_form_error) {
        (Some(s), _) => println!(
            "closed form: {s:?} (residual {:e})",
            r.residual_closed.unwrap_or(f64::NAN)
        ),
        (None, Some(e)) => println!("closed form: {e}"),
        _ => {}
    }
    match (&r.numerical, &r.numerical_error) {
        (Some(s), _) => println!(
            "numerical:   {s:?} (residual {:e})",
            r.residual_numerical.unwrap_or(f64::NAN)
        ),
        (None, Some(e)) => println!("numerical:   {e}"),
        _ => {}
    }
    if let Some(p) = &report.stability {
        println!(
            "perturbation {}: deviation {:e} at t = {}, returned {}",
            p.perturbation, p.final_deviation, p.t_end, p.returned
        );
    }
    Ok(if r.numerical.is_some() { 0 } else { 3 })
}

fn cmd_sweep(c: &Common) -> Outcome {
    let path = c.config()?;
    let sweep = Sweep::load(path, &c.overrides()).map_err(Failure::input)?;
    let template = sweep.resolved_template().map_err(Failure::input)?;
    let rows = sweep.run();
    let dir = c.out_dir(None);
    let csv_path = dir.join(format!("{}.sweep.csv", sweep.name));
    let text = rows_to_csv(&rows).map_err(Failure::input)?;
    atomic_write(&csv_path, text.as_bytes()).map_err(write_err(&csv_path))?;
    let json_path = dir.join(format!("{}.sweep.json", sweep.name));
    let report = SweepReport {
        kind: "sweep".into(),
        axis: sweep.spec.axis.clone(),
        template,
        rows,
    };
    write_json(&json_path, &report).map_err(write_err(&json_path))?;
    print!("{text}");
    Ok(0)
}

fn cmd_figure_data(c: &Common) -> Outcome {
    let spec_path = c.config()?;
    let spec = FigureSpec::load(spec_path).map_err(Failure::input)?;
    let dir = c.out_dir(None);
    for s in &spec.scenarios {
        let mut overrides = s.set.clone();
        overrides.extend(c.overrides());
        let scenario = load_scenario(&spec.scenario_path(spec_path, s), &overrides)?;
        let summary = write_simulation(&scenario, &dir, &s.csv)?;
        println!("{}: {} ({} samples)", s.name, s.csv, summary.samples);
    }
    let copy = dir.join("figures.toml");
    write_toml(&copy, &spec).map_err(write_err(&copy))?;
    Ok(0)
}
