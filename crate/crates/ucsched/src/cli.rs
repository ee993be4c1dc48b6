//! Command line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 input or output error,
//! 4 no feasible schedule, 5 node budget exhausted.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ucsched_core::domain::Supply;
use ucsched_core::energy::{air_density, generate_prosumers, pv_power, wind_power};
use ucsched_core::search::{SearchConfig, SearchError};

use crate::bench::{load_matrix, resolve_instances, run_matrix, write_csv};
use crate::ingestion::{
    cluster_power_states, load_power_trace, load_scenario_seeded, write_schedule, IngestError,
    Scenario, ScheduleDocument, ScheduleMetadata,
};
use crate::parallel::MergeTrigger;
use crate::solver::{solve, SolveOptions, SolverKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;
pub const EXIT_BUDGET: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "ucsched", version, about = "Cost-optimal appliance and battery scheduling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a scenario and write the schedule as JSON.
    Schedule(ScheduleArgs),
    /// Run a benchmark matrix and write per-run statistics as CSV.
    Bench(BenchArgs),
    /// Sample prosumer offers for a scenario's price curve.
    GenProsumers(ScenarioOut),
    /// Per-slot wind and PV output predicted from the scenario weather.
    PredictGen(ScenarioOut),
    /// Derive device power states from a measured trace.
    ProfileDevice(ProfileArgs),
    /// Load and check a scenario without solving it.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = "parallel")]
    pub solver: SolverKind,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: u16,
    /// Overrides the scenario's prosumer seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Drop the battery from the scenario.
    #[arg(long)]
    pub no_battery: bool,
    /// Local frontier size that triggers a merge into the global frontier.
    #[arg(long)]
    pub merge_threshold: Option<usize>,
    /// Merge while the local frontier is at most the threshold instead.
    #[arg(long)]
    pub merge_literal: bool,
    #[arg(long)]
    pub node_budget: Option<u64>,
    /// Disable the dominance pruning rule.
    #[arg(long)]
    pub no_dominance: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScenarioOut {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// CSV with `timestamp,watts` columns.
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, default_value = "device")]
    pub device: String,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Write the states as JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: e.to_string(),
        }
    }
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        let code = match e {
            SearchError::NoSolution => EXIT_INFEASIBLE,
            SearchError::BudgetExceeded { .. } => EXIT_BUDGET,
            SearchError::Invalid(_) | SearchError::TooLarge(_) | SearchError::Replay(_) => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: format!("{}: {e}", path.display()),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Schedule(a) => schedule(&a, stdout),
        Command::Bench(a) => bench(&a, stdout, stderr),
        Command::GenProsumers(a) => gen_prosumers(&a, stdout),
        Command::PredictGen(a) => predict_gen(&a, stdout),
        Command::ProfileDevice(a) => profile_device(&a, stdout),
        Command::Validate(a) => validate(&a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario, Failure> {
    Ok(load_scenario_seeded(path, seed)?)
}

fn schedule(a: &ScheduleArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let mut scenario = load(&a.scenario, a.seed)?;
    if a.no_battery {
        scenario.problem.battery = None;
    }
    let mut search = SearchConfig {
        dominance: !a.no_dominance,
        ..SearchConfig::default()
    };
    if let Some(b) = a.node_budget {
        search.node_budget = b;
    }
    let merge = match (a.merge_threshold, a.merge_literal) {
        (Some(t), true) => MergeTrigger::AtMost(t),
        (Some(t), false) => MergeTrigger::Above(t),
        (None, true) => MergeTrigger::AtMost(64),
        (None, false) => MergeTrigger::default(),
    };
    let threads = usize::from(a.threads);
    let options = SolveOptions {
        solver: a.solver,
        threads,
        merge,
        search,
    };
    let timed = solve(&scenario.problem, &options)?;
    let schedule = &timed.solution.schedule;
    let stats = &timed.solution.stats;
    let duration_ms = timed.duration.as_secs_f64() * 1e3;
    let doc = ScheduleDocument::new(
        &scenario.problem,
        schedule,
        ScheduleMetadata {
            scenario_id: scenario.id().to_string(),
            solver: a.solver.to_string(),
            threads,
            duration_ms,
            nodes_expanded: stats.nodes_expanded,
            horizon_slots: 0,
            slot_seconds: 0,
            start: scenario.start(),
            battery_charge_start_mwh: 0,
        },
    );
    write_schedule(&a.out, &doc)?;
    let _ = writeln!(
        stdout,
        "status=ok scenario={} solver={} threads={} total_cost={} total_cost_micro={} duration_ms={:.3} nodes_expanded={} nodes_pruned_policy={} nodes_pruned_dominance={} out={}",
        scenario.id(),
        a.solver,
        threads,
        schedule.total_cost,
        schedule.total_cost.micros(),
        duration_ms,
        stats.nodes_expanded,
        stats.nodes_pruned_policy,
        stats.nodes_pruned_dominance,
        a.out.display()
    );
    Ok(())
}

fn bench(a: &BenchArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let matrix = load_matrix(&a.matrix)?;
    let base = a.matrix.parent().unwrap_or(Path::new("."));
    let instances = resolve_instances(&matrix, base)?;
    let rows = run_matrix(&matrix, &instances, |r| {
        let _ = writeln!(
            stderr,
            "instance={} variant={} threads={} iteration={} status={} duration_ms={:.3} nodes_expanded={}",
            r.instance_id, r.variant, r.threads, r.iteration, r.status, r.duration_ms, r.nodes_expanded
        );
    });
    let file = std::fs::File::create(&a.out).map_err(|e| io_failure(&a.out, e))?;
    write_csv(file, &rows).map_err(|e| io_failure(&a.out, e))?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    let _ = writeln!(
        stdout,
        "status=ok rows={} failed_rows={failed} out={}",
        rows.len(),
        a.out.display()
    );
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, Failure> {
    csv::Writer::from_path(path).map_err(|e| io_failure(path, e))
}

fn gen_prosumers(a: &ScenarioOut, stdout: &mut dyn Write) -> Result<(), Failure> {
    let scenario = load(&a.scenario, a.seed)?;
    let model = scenario.file.prosumers.to_model(scenario.seed);
    let offers = generate_prosumers(&model, &scenario.grid_prices)
        .map_err(|e| io_failure(&a.scenario, e))?;
    let mut w = csv_writer(&a.out)?;
    let mut count = 0usize;
    let mut write = || -> csv::Result<()> {
        w.write_record(["slot_index", "start", "source_id", "price_per_kwh", "energy_kwh", "grid_price_per_kwh"])?;
        for (t, slot) in offers.iter().enumerate() {
            for offer in slot {
                let energy = match offer.supply {
                    Supply::Limited(e) => e.kwh(),
                    Supply::Unbounded => f64::INFINITY,
                };
                w.write_record([
                    t.to_string(),
                    scenario.slot_start(t).to_rfc3339(),
                    offer.id.clone(),
                    format!("{:.6}", offer.price.as_f64()),
                    format!("{energy:.6}"),
                    format!("{:.6}", scenario.grid_prices[t].as_f64()),
                ])?;
                count += 1;
            }
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(|e| io_failure(&a.out, e))?;
    let _ = writeln!(stdout, "status=ok offers={count} seed={} out={}", scenario.seed, a.out.display());
    Ok(())
}

fn predict_gen(a: &ScenarioOut, stdout: &mut dyn Write) -> Result<(), Failure> {
    let scenario = load(&a.scenario, a.seed)?;
    let slot_seconds = scenario.problem.grid.slot_seconds;
    let mut w = csv_writer(&a.out)?;
    let mut total_kwh = 0.0;
    let mut write = || -> Result<(), String> {
        w.write_record([
            "slot_index",
            "start",
            "wind_w",
            "pv_w",
            "available_kwh",
            "wind_cost_per_kwh",
            "pv_cost_per_kwh",
            "grid_price_per_kwh",
        ])
        .map_err(|e| e.to_string())?;
        for (t, sample) in scenario.weather.iter().enumerate() {
            let wind_w = match &scenario.turbine {
                Some(turbine) => {
                    let rho = air_density(sample.pressure_hpa, sample.temperature_k(), sample.dew_point_c)
                        .map_err(|e| format!("slot {t}: {e}"))?;
                    wind_power(turbine, rho, sample.wind_speed_ms)
                }
                None => 0.0,
            };
            let pv_w = scenario
                .panel
                .as_ref()
                .map_or(0.0, |p| pv_power(p, sample.dni_wm2, sample.temperature_c));
            let kwh = (wind_w + pv_w) * f64::from(slot_seconds) / 3.6e6;
            total_kwh += kwh;
            let cost = |p: Option<f64>| p.map(|c| format!("{c:.6}")).unwrap_or_default();
            w.write_record([
                t.to_string(),
                scenario.slot_start(t).to_rfc3339(),
                format!("{wind_w:.3}"),
                format!("{pv_w:.3}"),
                format!("{kwh:.6}"),
                cost(scenario.turbine.as_ref().map(|x| x.unit_cost.as_f64())),
                cost(scenario.panel.as_ref().map(|x| x.unit_cost.as_f64())),
                format!("{:.6}", scenario.grid_prices[t].as_f64()),
            ])
            .map_err(|e| e.to_string())?;
        }
        w.flush().map_err(|e| e.to_string())
    };
    write().map_err(|e| io_failure(&a.out, e))?;
    let _ = writeln!(
        stdout,
        "status=ok slots={} generated_kwh={total_kwh:.3} out={}",
        scenario.weather.len(),
        a.out.display()
    );
    Ok(())
}

fn profile_device(a: &ProfileArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let trace = load_power_trace(&a.trace, &a.device)?;
    let states = cluster_power_states(&trace, a.k).map_err(|e| io_failure(&a.trace, e))?;
    let json: Vec<_> = states
        .iter()
        .map(|s| serde_json::json!({"state_id": s.id, "power_w": s.power_w}))
        .collect();
    let record = serde_json::json!({"device_id": a.device, "states": json});
    let text = serde_json::to_string_pretty(&record).expect("plain JSON values");
    match &a.out {
        Some(path) => {
            std::fs::write(path, text + "\n").map_err(|e| io_failure(path, e))?;
            let powers: Vec<String> = states.iter().map(|s| format!("{:.3}", s.power_w)).collect();
            let _ = writeln!(
                stdout,
                "status=ok device={} samples={} centroids_w={} out={}",
                a.device,
                trace.samples.len(),
                powers.join(";"),
                path.display()
            );
        }
        None => {
            let _ = writeln!(stdout, "{text}");
        }
    }
    Ok(())
}

fn validate(a: &ValidateArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let scenario = load(&a.scenario, a.seed)?;
    let p = &scenario.problem;
    let _ = writeln!(
        stdout,
        "status=ok scenario={} devices={} horizon_slots={} slot_seconds={} battery={} sources_slot0={}",
        scenario.id(),
        p.devices.len(),
        p.grid.horizon_slots,
        p.grid.slot_seconds,
        p.battery.is_some(),
        p.sources.first().map_or(0, Vec::len)
    );
    Ok(())
}
