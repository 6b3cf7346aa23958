//! `tv`: sweeps, generalized SQLs and thresholds over optomechanical
//! measurement scenarios, written as CSV or JSON tables.

mod config;
mod error;
mod output;
mod run;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{AxisConfig, Command, ConditioningSpec, Format, FrequencyConfig, Quantity, RunConfig, Scale, ThresholdConfig};
use error::CliError;
use scenario::Scenario;

const AFTER_HELP: &str = "\
Scenario parameters can be given as --set KEY=VALUE or directly as --KEY VALUE.
Bath keys (n_m, m_re, m_im, n_c, eta) may also be swept with --param.
A --param axis replaces the first [[sweep]] axis of the config file.
Without a [frequency] table, --optimize-frequency scans omega log-spaced
over [1e-3, 10] with 200 points.

Environment:
  TV_THREADS   worker threads for row evaluation (default: all cores)

Exit codes:
  0 success, 2 invalid configuration (offending key named),
  3 numerical failure (point of failure reported), 1 I/O error

Recipes for the figure data sit in crates/tvdiag-cli/recipes:
  tv run --config crates/tvdiag-cli/recipes/fig2.toml";

#[derive(Parser, Debug)]
#[command(name = "tv", version, about = "Measurement figures of linear optomechanical readouts")]
#[command(after_long_help = long_help())]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

fn long_help() -> String {
    format!("{}\n\n{AFTER_HELP}", scenario::help_text())
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Runs the command named in the config file.
    Run(RunArgs),
    /// One row per sweep point at the configured detection frequency.
    Sweep(RunArgs),
    /// Generalized SQL: V_c minimized over the --sql-param axis.
    Sql(RunArgs),
    /// Parameter value at which a figure crosses a level.
    Threshold(RunArgs),
    /// One row per sweep point at the V_c-optimal detection frequency.
    OptimizeFrequency(RunArgs),
    /// Pulsed readout figures of the lev-pulsed scenario.
    Pulsed(RunArgs),
    /// Re-runs the config echoed in the header of a CSV output.
    Replay {
        file: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    /// Scenario parameter, KEY=VALUE; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Swept parameter.
    #[arg(long)]
    param: Option<String>,
    /// Log-spaced range of the swept parameter.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], conflicts_with = "lin")]
    log: Option<Vec<f64>>,
    /// Linearly spaced range of the swept parameter.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    lin: Option<Vec<f64>>,
    /// Number of sweep points.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "n-m")]
    n_m: Option<f64>,
    #[arg(long = "n-c")]
    n_c: Option<f64>,
    #[arg(long = "m-re")]
    m_re: Option<f64>,
    #[arg(long = "m-im")]
    m_im: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// meter, meter+ancilla or meter+ancilla-uncorrelated.
    #[arg(long)]
    conditioning: Option<String>,
    #[arg(long)]
    optimize_frequency: bool,
    /// Detection frequency scan range.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    freq_range: Option<Vec<f64>>,
    #[arg(long)]
    freq_n: Option<usize>,
    #[arg(long)]
    sql_param: Option<String>,
    #[arg(long)]
    sql_lo: Option<f64>,
    #[arg(long)]
    sql_hi: Option<f64>,
    #[arg(long)]
    sql_n: Option<usize>,
    #[arg(long)]
    threshold_param: Option<String>,
    #[arg(long)]
    threshold_lo: Option<f64>,
    #[arg(long)]
    threshold_hi: Option<f64>,
    #[arg(long)]
    level: Option<f64>,
    /// vc, t_sum or sql_vc.
    #[arg(long)]
    quantity: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn default_frequency() -> FrequencyConfig {
    FrequencyConfig { optimize: true, lo: 1e-3, hi: 10.0, n: 200, scale: Scale::Log }
}

fn build_config(args: RunArgs, command: Command) -> Result<RunConfig, CliError> {
    let scenario = match &args.scenario {
        Some(s) => Some(Scenario::parse(s).ok_or_else(|| cfg_err(format!("scenario: unknown scenario '{s}'")))?),
        None => None,
    };
    let mut cfg = match (&args.config, scenario) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(s)) => RunConfig::new(s),
        (None, None) => return Err(cfg_err("scenario: give --scenario or --config")),
    };
    if let Some(s) = scenario {
        cfg.scenario = s;
    }
    cfg.command = command;
    for kv in &args.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| cfg_err(format!("--set: expected KEY=VALUE, got '{kv}'")))?;
        cfg.set_param(k.trim(), v.trim())?;
    }
    for (key, v) in [("n_m", args.n_m), ("n_c", args.n_c), ("m_re", args.m_re), ("m_im", args.m_im), ("eta", args.eta)] {
        if let Some(v) = v {
            cfg.bath.set(key, v);
        }
    }
    if let Some(c) = &args.conditioning {
        cfg.conditioning =
            ConditioningSpec::parse(c).ok_or_else(|| cfg_err(format!("conditioning: unknown value '{c}'")))?;
    }
    if let Some(param) = &args.param {
        let (range, scale) = match (&args.log, &args.lin) {
            (Some(r), _) => (r, Scale::Log),
            (None, Some(r)) => (r, Scale::Linear),
            (None, None) => return Err(cfg_err("--param: needs --log LO HI or --lin LO HI")),
        };
        let axis = AxisConfig { param: param.clone(), lo: range[0], hi: range[1], n: args.n.unwrap_or(50), scale };
        if cfg.sweep.is_empty() {
            cfg.sweep.push(axis);
        } else {
            cfg.sweep[0] = axis;
        }
    } else if args.log.is_some() || args.lin.is_some() {
        return Err(cfg_err("--param: a range was given without --param"));
    } else if let Some(n) = args.n {
        let axis = cfg.sweep.first_mut().ok_or_else(|| cfg_err("--n: no sweep axis to resize"))?;
        axis.n = n;
    }
    if args.optimize_frequency {
        cfg.frequency.get_or_insert_with(default_frequency).optimize = true;
    }
    if command == Command::OptimizeFrequency && cfg.frequency.is_none() {
        cfg.frequency = Some(default_frequency());
    }
    if let Some(r) = &args.freq_range {
        let f = cfg.frequency.get_or_insert(FrequencyConfig { optimize: false, ..default_frequency() });
        f.lo = r[0];
        f.hi = r[1];
    }
    if let Some(n) = args.freq_n {
        cfg.frequency.get_or_insert(FrequencyConfig { optimize: false, ..default_frequency() }).n = n;
    }
    if args.sql_param.is_some() || args.sql_lo.is_some() || args.sql_hi.is_some() || args.sql_n.is_some() {
        let s = cfg.sql.get_or_insert_with(|| AxisConfig {
            param: "C".into(),
            lo: 1e-3,
            hi: 1e4,
            n: 200,
            scale: Scale::Log,
        });
        if let Some(p) = &args.sql_param {
            s.param = p.clone();
        }
        if let Some(v) = args.sql_lo {
            s.lo = v;
        }
        if let Some(v) = args.sql_hi {
            s.hi = v;
        }
        if let Some(v) = args.sql_n {
            s.n = v;
        }
    }
    if args.threshold_param.is_some() || args.threshold_lo.is_some() || args.threshold_hi.is_some() {
        let t = match cfg.threshold.take() {
            Some(t) => t,
            None => ThresholdConfig {
                param: args.threshold_param.clone().ok_or_else(|| cfg_err("--threshold-param: required"))?,
                lo: args.threshold_lo.ok_or_else(|| cfg_err("--threshold-lo: required"))?,
                hi: args.threshold_hi.ok_or_else(|| cfg_err("--threshold-hi: required"))?,
                level: 0.5,
                quantity: Quantity::Vc,
                rel_tol: 1e-9,
            },
        };
        cfg.threshold = Some(ThresholdConfig {
            param: args.threshold_param.clone().unwrap_or(t.param),
            lo: args.threshold_lo.unwrap_or(t.lo),
            hi: args.threshold_hi.unwrap_or(t.hi),
            ..t
        });
    }
    if let Some(t) = cfg.threshold.as_mut() {
        if let Some(l) = args.level {
            t.level = l;
        }
        if let Some(q) = &args.quantity {
            t.quantity = match q.as_str() {
                "vc" => Quantity::Vc,
                "t_sum" => Quantity::TSum,
                "sql_vc" => Quantity::SqlVc,
                _ => return Err(cfg_err(format!("quantity: unknown value '{q}'"))),
            };
        }
    } else if args.level.is_some() || args.quantity.is_some() {
        return Err(cfg_err("threshold: --level and --quantity need a threshold parameter"));
    }
    if let Some(p) = &args.output {
        cfg.output.path = Some(p.display().to_string());
    }
    if let Some(f) = &args.format {
        cfg.output.format = match f.as_str() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            _ => return Err(cfg_err(format!("format: unknown value '{f}'"))),
        };
    }
    Ok(cfg)
}

/// Rewrites `--KEY VALUE` and `--KEY=VALUE` for scenario parameters into
/// `--set KEY=VALUE`.
fn expand_param_flags(argv: Vec<String>) -> Vec<String> {
    let keys = scenario::all_keys();
    let mut out = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter().peekable();
    while let Some(a) = it.next() {
        if let Some(flag) = a.strip_prefix("--") {
            let (name, inline) = match flag.split_once('=') {
                Some((n, v)) => (n.to_string(), Some(v.to_string())),
                None => (flag.to_string(), None),
            };
            if keys.contains(&name.as_str()) {
                let value = match inline {
                    Some(v) => Some(v),
                    None => it.next(),
                };
                if let Some(v) = value {
                    out.push("--set".to_string());
                    out.push(format!("{name}={v}"));
                    continue;
                }
            }
        }
        out.push(a);
    }
    out
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("TV_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| cfg_err(format!("TV_THREADS: expected a positive integer, got '{v}'")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    let table = run::run(cfg)?;
    let text = match cfg.output.format {
        Format::Csv => output::render_csv(&table, cfg),
        Format::Json => output::render_json(&table),
    };
    match &cfg.output.path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {p}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn real_main() -> Result<(), CliError> {
    let argv = expand_param_flags(std::env::args().collect());
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 2 } else { 0 });
        }
    };
    configure_threads()?;
    let cfg = match cli.command {
        Sub::Run(a) => {
            let path = a.config.clone().ok_or_else(|| cfg_err("run: --config is required"))?;
            let command = RunConfig::load(&path)?.command;
            build_config(a, command)?
        }
        Sub::Sweep(a) => build_config(a, Command::Sweep)?,
        Sub::Sql(a) => build_config(a, Command::Sql)?,
        Sub::Threshold(a) => build_config(a, Command::Threshold)?,
        Sub::OptimizeFrequency(a) => build_config(a, Command::OptimizeFrequency)?,
        Sub::Pulsed(a) => build_config(a, Command::Pulsed)?,
        Sub::Replay { file, output } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| cfg_err(format!("replay: cannot read {}: {e}", file.display())))?;
            let mut cfg = output::config_from_header(&text)?;
            cfg.output.path = output.map(|p| p.display().to_string());
            cfg
        }
    };
    execute(&cfg)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
