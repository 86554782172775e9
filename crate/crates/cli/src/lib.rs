//! `maintgame` subcommands. Every command returns a process exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use maintgame::dispatch::{build_lower_model, MaintenanceCost, StorageRevenue};
use maintgame::game::{
    backward_induction, duration_csv, evaluate_case, payoff_surface, pipeline_segments, run_duration_sweep,
    run_segment_sweep, segment_csv, surface_csv, EvalConfig, GameError, GameTree, LeafMatrix, SpneResult, TieBreak,
};
use maintgame::milp::export_external;
use maintgame::network::{derive_big_m, load_case, validate_case, CaseData, CaseError};
use maintgame::pwl::segments_csv;
use maintgame::report::{csv, to_json, write_atomic};
use maintgame::schedule::{owner_options, ScheduleError};
use maintgame::{DispatchOptions, Leader, Owner, SolveLimits};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "maintgame", version, about = "Maintenance scheduling game for coupled power and gas grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a case file and list every violated invariant.
    Validate {
        #[arg(long)]
        case: PathBuf,
    },
    /// Print each owner's feasible maintenance schedules as CSV.
    Enumerate {
        #[arg(long)]
        case: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        owner: OwnerArg,
    },
    /// Solve the game and write results, payoff surfaces and timings.
    Solve(SolveArgs),
    /// Re-solve the game over a list of durations or segment counts.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OwnerArg {
    Power,
    Gas,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CostConvention {
    OutOfService,
    InService,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StorageArg {
    Withdrawal,
    Inventory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Duration,
    Segments,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub case: PathBuf,
    #[arg(long, default_value_t = maintgame::pwl::DEFAULT_SEGMENTS, value_parser = clap::value_parser!(usize))]
    pub segments: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Gas balance consumes `EF * fuel` instead of `fuel`.
    #[arg(long = "paper-literal-coupling")]
    pub literal_coupling: bool,
    #[arg(long, value_enum, default_value = "out-of-service")]
    pub maintenance_cost: CostConvention,
    #[arg(long, value_enum, default_value = "withdrawal")]
    pub storage_revenue: StorageArg,
    /// Branch-and-bound node cap per MILP.
    #[arg(long)]
    pub node_cap: Option<usize>,
    /// Wall-clock cap per MILP, in seconds.
    #[arg(long)]
    pub time_cap: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value = "both")]
    pub leader: Leader,
    /// Write every leaf's dispatch model under `<out>/lp/`.
    #[arg(long)]
    pub dump_lp: bool,
    /// Write every pipeline's segment table under `<out>/pwl/`.
    #[arg(long)]
    pub dump_pwl: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub kind: SweepKind,
    #[command(flatten)]
    pub run: RunArgs,
    /// Maintained asset whose duration is swept.
    #[arg(long, required_if_eq("kind", "duration"))]
    pub asset: Option<String>,
    /// Comma-separated durations or segment counts.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub values: Vec<usize>,
}

/// Echoed into `results.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub case: String,
    pub leader: Leader,
    pub segments: usize,
    pub workers: usize,
    pub out: String,
    pub literal_coupling: bool,
    pub maintenance_cost: MaintenanceCost,
    pub storage_revenue: StorageRevenue,
    pub node_cap: Option<usize>,
    pub time_cap_s: Option<f64>,
}

impl RunConfig {
    pub fn new(run: &RunArgs, leader: Leader) -> Result<Self, CliError> {
        if run.segments < 1 {
            return Err(CliError::Usage("--segments must be at least 1".into()));
        }
        if run.workers < 1 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        if let Some(t) = run.time_cap {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::Usage("--time-cap must be a positive number of seconds".into()));
            }
        }
        Ok(RunConfig {
            case: run.case.display().to_string(),
            leader,
            segments: run.segments,
            workers: run.workers,
            out: run.out.display().to_string(),
            literal_coupling: run.literal_coupling,
            maintenance_cost: match run.maintenance_cost {
                CostConvention::OutOfService => MaintenanceCost::OutOfService,
                CostConvention::InService => MaintenanceCost::InService,
            },
            storage_revenue: match run.storage_revenue {
                StorageArg::Withdrawal => StorageRevenue::Withdrawal,
                StorageArg::Inventory => StorageRevenue::Inventory,
            },
            node_cap: run.node_cap,
            time_cap_s: run.time_cap,
        })
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            segments: self.segments,
            workers: self.workers,
            dispatch: DispatchOptions {
                literal_coupling: self.literal_coupling,
                storage_revenue: self.storage_revenue,
                maintenance_cost: self.maintenance_cost,
                limits: SolveLimits { node_cap: self.node_cap, time_cap: self.time_cap_s.map(Duration::from_secs_f64) },
            },
            ..EvalConfig::default()
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
    Limit(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Limit(_) => EXIT_LIMIT,
            CliError::Io(_) => EXIT_IO,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) | CliError::Limit(m) | CliError::Io(m) => m,
        }
    }
}

impl From<CaseError> for CliError {
    fn from(e: CaseError) -> Self {
        match e {
            CaseError::InvalidCase(_) => CliError::Domain(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ScheduleError> for CliError {
    fn from(e: ScheduleError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<GameError> for CliError {
    fn from(e: GameError) -> Self {
        if e.is_limit() {
            return CliError::Limit(e.to_string());
        }
        match e {
            GameError::Case(c) => c.into(),
            GameError::InvalidArgument(m) => CliError::Usage(m),
            other => CliError::Domain(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    write_atomic(path, contents.as_bytes()).map_err(io_err(path))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(io_err(path))
}

/// Parse `args` (program name first) and run the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Validate { case } => cmd_validate(&case, out),
        Command::Enumerate { case, owner } => cmd_enumerate(&case, owner, out),
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

fn load(path: &Path) -> Result<CaseData, CliError> {
    Ok(load_case(path)?)
}

/// Load and require a clean case.
fn load_valid(path: &Path) -> Result<CaseData, CliError> {
    let case = load(path)?;
    let v = validate_case(&case);
    if !v.is_empty() {
        return Err(CliError::Domain(format!("case has {} violation(s): {}", v.len(), v.join("; "))));
    }
    Ok(case)
}

/// One violation per line on `out`; exit 1 when there are any.
pub fn cmd_validate(path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let case = load(path)?;
    let violations = validate_case(&case);
    for v in &violations {
        writeln!(out, "{v}").map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(if violations.is_empty() { EXIT_OK } else { EXIT_DOMAIN })
}

/// `owner,option,<asset>...` with one start-period column per maintained
/// asset, blank where the asset belongs to the other owner.
pub fn enumerate_csv(case: &CaseData, owner: OwnerArg) -> Result<String, CliError> {
    let owners = match owner {
        OwnerArg::Power => vec![Owner::Power],
        OwnerArg::Gas => vec![Owner::Gas],
        OwnerArg::Both => vec![Owner::Power, Owner::Gas],
    };
    let tasks: Vec<&str> =
        case.maintenance.iter().filter(|t| owners.contains(&t.owner())).map(|t| t.asset_id.as_str()).collect();
    let mut header = vec!["owner", "option"];
    header.extend(&tasks);
    let mut rows = Vec::new();
    for o in owners {
        if case.tasks_of(o).is_empty() {
            continue;
        }
        for (i, s) in owner_options(case, o)?.iter().enumerate() {
            let mut row = vec![o.as_str().to_string(), i.to_string()];
            row.extend(tasks.iter().map(|a| s.start_of(a).map_or_else(String::new, |t| t.to_string())));
            rows.push(row);
        }
    }
    Ok(csv(&header, &rows))
}

pub fn cmd_enumerate(path: &Path, owner: OwnerArg, out: &mut dyn Write) -> Result<i32, CliError> {
    let case = load_valid(path)?;
    let text = enumerate_csv(&case, owner)?;
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct Results<'a> {
    config: &'a RunConfig,
    case: &'a str,
    leaf_matrix: &'a LeafMatrix,
    spne: Vec<SpneResult>,
}

#[derive(Debug, Serialize)]
struct Timings {
    total_s: f64,
    leaf_s_total: f64,
    /// `[power option][gas option]`.
    leaf_s: Vec<Vec<f64>>,
}

/// File name of the payoff surface for one move order.
pub fn surface_file(leader: Owner) -> String {
    format!("surface_{}_leads.csv", leader.as_str())
}

pub fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let started = Instant::now();
    let cfg = RunConfig::new(&a.run, a.leader)?;
    let case = load_valid(&a.run.case)?;
    let eval = cfg.eval_config();

    let dir = &a.run.out;
    create_dir(dir)?;
    if a.dump_pwl {
        dump_pwl(&case, cfg.segments, &dir.join("pwl"))?;
    }
    if a.dump_lp {
        dump_lp(&case, &eval, &dir.join("lp"))?;
    }

    let m = evaluate_case(&case, &eval)?;
    log::info!("{} leaves solved in {:.1}s", m.leaves.len() * m.gas_options.len(), started.elapsed().as_secs_f64());
    let trees: Vec<GameTree> = cfg.leader.orders().into_iter().map(|o| GameTree::from_matrix(&m, o)).collect();
    let spne: Vec<SpneResult> = trees.iter().map(|t| backward_induction(t, TieBreak::LowestIndex)).collect();

    let results = Results { config: &cfg, case: &case.name, leaf_matrix: &m, spne };
    write_file(&dir.join("results.json"), &to_json(&results).map_err(|e| CliError::Io(e.to_string()))?)?;
    for t in &trees {
        write_file(&dir.join(surface_file(t.leader)), &surface_csv(&payoff_surface(t)))?;
    }
    let timings = Timings {
        total_s: started.elapsed().as_secs_f64(),
        leaf_s_total: m.total_wall_time().as_secs_f64(),
        leaf_s: m.leaves.iter().map(|r| r.iter().map(|l| l.wall_time.as_secs_f64()).collect()).collect(),
    };
    write_file(&dir.join("timings.json"), &to_json(&timings).map_err(|e| CliError::Io(e.to_string()))?)?;

    for r in &results.spne {
        writeln!(
            out,
            "{} leads: leader option {}, follower option {}, power payoff {}, gas payoff {}",
            r.leader,
            r.leader_choice,
            r.follower_choice(),
            r.power_payoff,
            r.gas_payoff
        )
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(EXIT_OK)
}

fn dump_pwl(case: &CaseData, k: usize, dir: &Path) -> Result<(), CliError> {
    create_dir(dir)?;
    let sets = pipeline_segments(case, k).map_err(|e| CliError::Domain(e.to_string()))?;
    for (p, set) in case.gas.pipelines.iter().zip(&sets) {
        write_file(&dir.join(format!("{}.csv", p.id)), &segments_csv(set))?;
    }
    Ok(())
}

fn dump_lp(case: &CaseData, cfg: &EvalConfig, dir: &Path) -> Result<(), CliError> {
    create_dir(dir)?;
    let pwl = pipeline_segments(case, cfg.segments).map_err(|e| CliError::Domain(e.to_string()))?;
    let bigm = derive_big_m(case)?.scaled(cfg.bigm_scale);
    let (p, g) = (owner_options(case, Owner::Power)?, owner_options(case, Owner::Gas)?);
    for (i, ps) in p.iter().enumerate() {
        for (j, gs) in g.iter().enumerate() {
            let v = maintgame::schedule::joint_indicator(case, &[ps, gs]);
            let lower = build_lower_model(case, &v, &pwl, &bigm, &cfg.dispatch)
                .map_err(|e| CliError::Domain(format!("leaf ({i},{j}): {e}")))?;
            write_file(&dir.join(format!("leaf_{i}_{j}.lp")), &export_external(&lower.model))?;
        }
    }
    Ok(())
}

/// File name of a sweep table.
pub fn sweep_file(kind: SweepKind) -> &'static str {
    match kind {
        SweepKind::Duration => "sweep_duration.csv",
        SweepKind::Segments => "sweep_segments.csv",
    }
}

pub fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    if a.values.is_empty() {
        return Err(CliError::Usage("--values needs at least one value".into()));
    }
    let cfg = RunConfig::new(&a.run, Leader::Both)?;
    let case = load_valid(&a.run.case)?;
    let eval = cfg.eval_config();
    let table = match a.kind {
        SweepKind::Duration => {
            let asset = a.asset.as_deref().ok_or_else(|| CliError::Usage("--asset is required".into()))?;
            duration_csv(&run_duration_sweep(&case, asset, &a.values, &eval)?)
        }
        SweepKind::Segments => segment_csv(&run_segment_sweep(&case, &a.values, &eval)?),
    };
    create_dir(&a.run.out)?;
    write_file(&a.run.out.join(sweep_file(a.kind)), &table)?;
    out.write_all(table.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(EXIT_OK)
}
