//! Command-line front end. Every run is driven by one config file plus flag
//! overrides; flags beat environment variables, which beat the file.
//!
//! Exit codes are a stable contract:
//!   0  goal reached / all obligations pass
//!   1  violation or failing obligation
//!   2  usage error (bad flag, unknown machine or strategy)
//!   3  config or initial-state error
//!   4  no verdict: timeout, stall, or nothing ran

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ga_rss_simplex::config::{ArithMode, OutputFormat, RunConfig, VacuousPolicy};
use ga_rss_simplex::controller::{builtin_strategy, AcStrategy, ScriptedVelocities, SubscenarioSpec};
use ga_rss_simplex::harness::{sweep_initial_states, run_trace, LatticeSpec, TerminalStatus};
use ga_rss_simplex::machines::{build_machine, inventory_jsonl, MachineName, Mutation};
use ga_rss_simplex::po::{check_all, generate_all_pos, report_jsonl, report_summary, PoStatus};
use ga_rss_simplex::report::{sweep_csv, sweep_summary, trace_csv, trace_jsonl};
use ga_rss_simplex::{Error, Exact, Float, Scalar};

const EXIT_OK: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_NO_VERDICT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "ga-rss",
    version,
    about = "Simulate and check Simplex pull-over controllers under goal-aware RSS",
    long_about = "Simulate and check Simplex pull-over controllers under goal-aware RSS.\n\n\
        Every option can also be set through an environment variable with the\n\
        GA_RSS_ prefix (e.g. GA_RSS_SEED, GA_RSS_ARITH). Precedence is\n\
        flag > environment > config file > built-in default.\n\n\
        Exit codes: 0 goal/pass, 1 violation/fail, 2 usage error,\n\
        3 config error, 4 timeout/stalled/nothing ran."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one closed-loop trace and report it
    Simulate(SimulateArgs),
    /// Discharge proof obligations by randomized checking
    Check(CheckArgs),
    /// Sweep a lattice of initial states and map the outcome region
    Sweep(SweepArgs),
    /// Print the machine inventory as JSON lines
    ExportMachines(ExportArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Config file (TOML)
    #[arg(long, env = "GA_RSS_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,
    /// Root random seed; all randomness derives from it
    #[arg(long, env = "GA_RSS_SEED", value_name = "N")]
    seed: Option<u64>,
    /// Arithmetic mode
    #[arg(long, env = "GA_RSS_ARITH", value_enum)]
    arith: Option<ArithArg>,
    /// Report format
    #[arg(long, env = "GA_RSS_FORMAT", value_enum)]
    format: Option<FormatArg>,
    /// Write the report here instead of stdout
    #[arg(long, env = "GA_RSS_OUT", value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Cycle budget before the run counts as a timeout
    #[arg(long, env = "GA_RSS_MAX_CYCLES", value_name = "N")]
    max_cycles: Option<u32>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Samples per proof obligation
    #[arg(long, env = "GA_RSS_BUDGET", value_name = "N")]
    budget: Option<u64>,
    /// Comma-separated machine names (default: all six)
    #[arg(long, env = "GA_RSS_MACHINES", value_name = "LIST")]
    machines: Option<String>,
    /// Apply a named mutation before checking
    #[arg(long, env = "GA_RSS_MUTATE", value_name = "NAME")]
    mutate: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Cycle budget per lattice point
    #[arg(long, env = "GA_RSS_MAX_CYCLES", value_name = "N")]
    max_cycles: Option<u32>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated machine names (default: all six)
    #[arg(long, env = "GA_RSS_MACHINES", value_name = "LIST")]
    machines: Option<String>,
    /// Apply a named mutation before exporting
    #[arg(long, env = "GA_RSS_MUTATE", value_name = "NAME")]
    mutate: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArithArg {
    Exact,
    Float,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::Feature(_) => EXIT_USAGE,
        _ => EXIT_CONFIG,
    }
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
                field: "config".into(),
                msg: format!("{}: {e}", path.display()),
            })?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(a) = common.arith {
        cfg.arith = match a {
            ArithArg::Exact => ArithMode::Exact,
            ArithArg::Float => ArithMode::Float,
        };
    }
    if let Some(f) = common.format {
        cfg.format = match f {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        };
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.display().to_string());
    }
    Ok(cfg)
}

fn emit(cfg: &RunConfig, content: &str) -> Result<(), Error> {
    match &cfg.out {
        Some(path) => std::fs::write(path, content).map_err(|e| Error::Config {
            field: "out".into(),
            msg: format!("{path}: {e}"),
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn strategy_from<S: Scalar>(cfg: &RunConfig) -> Result<Box<dyn AcStrategy<S>>, Error> {
    if cfg.strategy.name == "scripted" {
        let vs = cfg
            .strategy
            .script
            .iter()
            .map(|l| l.to_scalar::<S>("strategy.script"))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Box::new(ScriptedVelocities::new(vs)))
    } else {
        builtin_strategy(&cfg.strategy.name)
    }
}

fn parse_machines(list: &Option<String>) -> Result<Vec<MachineName>, Error> {
    match list {
        None => Ok(MachineName::ALL.to_vec()),
        Some(s) => s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect(),
    }
}

fn parse_mutation(name: &Option<String>) -> Result<Option<Mutation>, Error> {
    name.as_deref().map(str::parse).transpose()
}

// --- simulate ---------------------------------------------------------------

fn cmd_simulate(args: &SimulateArgs) -> Result<u8, Error> {
    let mut cfg = load_config(&args.common)?;
    if let Some(m) = args.max_cycles {
        cfg.max_cycles = m;
    }
    match cfg.arith {
        ArithMode::Exact => simulate_with::<Exact>(&cfg),
        ArithMode::Float => simulate_with::<Float>(&cfg),
    }
}

fn simulate_with<S: Scalar>(cfg: &RunConfig) -> Result<u8, Error> {
    let sub = cfg.subscenario()?;
    let spec = SubscenarioSpec::new(sub)?;
    let consts = cfg.constants.build::<S>()?;
    let init = cfg.init.build::<S>(sub)?;
    let mut strategy = strategy_from::<S>(cfg)?;
    let trace = run_trace(spec, &init, strategy.as_mut(), cfg.max_cycles, &consts, cfg.seed)?;

    let report = match cfg.format {
        OutputFormat::Json => trace_jsonl(&trace),
        OutputFormat::Csv => trace_csv(&trace),
    };
    emit(cfg, &report)?;
    let fin = trace.final_state();
    eprintln!(
        "{}: {} after {} cycles at x={} v={}",
        sub,
        trace.status,
        trace.cycles(),
        fin.sv.x.repr(),
        fin.sv.v.repr()
    );
    Ok(match trace.status {
        TerminalStatus::Goal => EXIT_OK,
        TerminalStatus::Violation => EXIT_FAIL,
        TerminalStatus::Timeout | TerminalStatus::Stalled => EXIT_NO_VERDICT,
    })
}

// --- check ------------------------------------------------------------------

fn cmd_check(args: &CheckArgs) -> Result<u8, Error> {
    let mut cfg = load_config(&args.common)?;
    if let Some(b) = args.budget {
        cfg.budget = b;
    }
    let machines = parse_machines(&args.machines)?;
    let mutation = parse_mutation(&args.mutate)?;
    match cfg.arith {
        ArithMode::Exact => check_with::<Exact>(&cfg, &machines, mutation),
        ArithMode::Float => check_with::<Float>(&cfg, &machines, mutation),
    }
}

fn check_with<S: Scalar>(
    cfg: &RunConfig,
    machines: &[MachineName],
    mutation: Option<Mutation>,
) -> Result<u8, Error> {
    let consts = cfg.constants.build::<S>()?;
    let pos: Vec<_> = generate_all_pos::<S>(mutation)
        .into_iter()
        .filter(|po| machines.contains(&po.machine))
        .collect();
    let verdicts = check_all(&pos, cfg.budget, cfg.seed, &consts);

    emit(cfg, &report_jsonl(&pos, &verdicts))?;
    eprint!("{}", report_summary(&pos, &verdicts));

    let mut code = EXIT_OK;
    for (po, v) in pos.iter().zip(&verdicts) {
        match v.status {
            PoStatus::Fail => {
                code = EXIT_FAIL;
                if let Some(cex) = &v.counterexample {
                    eprintln!(
                        "FAIL {} after {} samples: state x_sv={} v_sv={} ctrl={} \
                         v_bc0={} t_cruise={} t_brake={} t_lce={}{} params p_x={} p_v={}",
                        po.label(),
                        v.samples,
                        cex.state.sv.x.repr(),
                        cex.state.sv.v.repr(),
                        cex.state.ctrl,
                        cex.state.v_bc0.repr(),
                        cex.state.plan.t_cruise.repr(),
                        cex.state.plan.t_brake.repr(),
                        cex.state.t_lce,
                        cex.state
                            .pov(2)
                            .map(|p| format!(" x_2={} v_2={}", p.x.repr(), p.v.repr()))
                            .unwrap_or_default(),
                        cex.params.p_x.repr(),
                        cex.params.p_v.repr(),
                    );
                }
            }
            PoStatus::Vacuous => {
                eprintln!("VACUOUS {}: no sample satisfied the hypothesis", po.label());
                if cfg.vacuous == VacuousPolicy::Fail && code == EXIT_OK {
                    code = EXIT_FAIL;
                }
            }
            PoStatus::Pass => {}
        }
    }
    Ok(code)
}

// --- sweep ------------------------------------------------------------------

fn cmd_sweep(args: &SweepArgs) -> Result<u8, Error> {
    let mut cfg = load_config(&args.common)?;
    if let Some(m) = args.max_cycles {
        cfg.max_cycles = m;
    }
    match cfg.arith {
        ArithMode::Exact => sweep_with::<Exact>(&cfg),
        ArithMode::Float => sweep_with::<Float>(&cfg),
    }
}

fn sweep_with<S: Scalar>(cfg: &RunConfig) -> Result<u8, Error> {
    let sub = cfg.subscenario()?;
    let spec = SubscenarioSpec::new(sub)?;
    let consts = cfg.constants.build::<S>()?;
    let lat = &cfg.lattice;
    if lat.xs.is_empty() || lat.vs.is_empty() {
        return Err(Error::Feature(
            "sweep needs non-empty lattice.xs and lattice.vs".into(),
        ));
    }
    let to_axis = |lits: &[ga_rss_simplex::config::NumLit], field: &str| {
        lits.iter()
            .map(|l| l.to_scalar::<S>(field))
            .collect::<Result<Vec<_>, _>>()
    };
    let lattice = LatticeSpec {
        xs: to_axis(&lat.xs, "lattice.xs")?,
        vs: to_axis(&lat.vs, "lattice.vs")?,
        gaps: to_axis(&lat.gaps, "lattice.gaps")?,
        v2: lat
            .v_2
            .as_ref()
            .map(|l| l.to_scalar::<S>("lattice.v_2"))
            .transpose()?,
    };
    let report = sweep_initial_states(
        spec,
        &lattice,
        &cfg.strategy.name,
        cfg.max_cycles,
        &consts,
        cfg.seed,
    )?;

    let body = match cfg.format {
        OutputFormat::Csv => sweep_csv(&report),
        OutputFormat::Json => {
            let mut out = String::new();
            for p in &report.points {
                let line = serde_json::json!({
                    "x": p.x.repr(),
                    "v": p.v.repr(),
                    "gap": p.gap.as_ref().map(|g| g.repr()),
                    "status": p.status.map(|s| s.to_string()),
                    "cycles": p.cycles,
                });
                out.push_str(&line.to_string());
                out.push('\n');
            }
            out
        }
    };
    emit(cfg, &body)?;
    eprint!("{}", sweep_summary(&report));

    if report.points.len() == report.skipped {
        eprintln!("nothing ran: every lattice point fails the precondition");
        return Ok(EXIT_NO_VERDICT);
    }
    Ok(if report.violations > 0 {
        EXIT_FAIL
    } else {
        EXIT_OK
    })
}

// --- export-machines --------------------------------------------------------

fn cmd_export(args: &ExportArgs) -> Result<u8, Error> {
    let cfg = load_config(&args.common)?;
    let machines = parse_machines(&args.machines)?;
    let mutation = parse_mutation(&args.mutate)?;
    // inventory is arithmetic-independent; exact mode is the canonical one
    let defs: Vec<_> = machines
        .iter()
        .map(|&m| build_machine::<Exact>(m, mutation))
        .collect();
    emit(&cfg, &inventory_jsonl(&defs))?;
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Check(a) => cmd_check(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::ExportMachines(a) => cmd_export(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
