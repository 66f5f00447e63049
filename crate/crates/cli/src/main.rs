use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use synthminer::candidates::PatternSet;
use synthminer::log::{parse_csv, parse_xes, CsvColumns, EventLog};
use synthminer::miner::{discover, DiscoveryConfig, DiscoveryError};
use synthminer::net::{parse_dot, parse_pnml, to_dot, to_pnml};
use synthminer::ordering::{make_order, OrderingStrategy};
use synthminer::quality::evaluate;
use synthminer::rational::parse_rational;
use synthminer::{Rational, WorkflowNet};

#[derive(Parser, Debug)]
#[command(
    name = "synthminer",
    version,
    about = "Discover sound free-choice workflow nets from event logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Discover a workflow net from an event log
    Discover(DiscoverArgs),
    /// Print the activity order of one strategy, or of all five
    Order(OrderArgs),
    /// Score a PNML net against an event log
    Evaluate(EvaluateArgs),
    /// Convert a net between PNML and DOT
    Convert(ConvertArgs),
}

#[derive(Args, Debug)]
struct LogArgs {
    /// Event log (.xes, .csv or .json)
    #[arg(long)]
    log: PathBuf,
    /// CSV column holding the case id
    #[arg(long, default_value = "case")]
    case_col: String,
    /// CSV column holding the activity name
    #[arg(long, default_value = "activity")]
    activity_col: String,
    /// CSV column holding the event timestamp
    #[arg(long)]
    time_col: Option<String>,
}

#[derive(Args, Debug)]
struct DiscoverArgs {
    #[command(flatten)]
    log: LogArgs,
    /// Activity ordering: freq, bfs-start, bfs-end, dfs-start, dfs-end
    #[arg(long, default_value = "freq", value_parser = parse_strategy)]
    ordering: OrderingStrategy,
    /// Causal-strength threshold for predecessor and successor sets
    #[arg(long, default_value = "0.9", value_parser = parse_fraction)]
    threshold: Rational,
    /// Share of traces the kept variants must cover
    #[arg(long, default_value = "0.95", value_parser = parse_fraction)]
    coverage: Rational,
    /// Largest place or transition subset a rule may touch
    #[arg(long, default_value_t = 3)]
    max_subset_size: usize,
    /// Insertion patterns to try, comma separated
    #[arg(long, default_value = "seq,choice,par,skip,loop")]
    patterns: PatternSet,
    /// Path expansions before the search space is approximated
    #[arg(long, default_value_t = 50_000)]
    path_budget: usize,
    /// Silent-transition search depth during replay
    #[arg(long, default_value_t = 5)]
    lookahead: usize,
    /// Markings explored before soundness is left undecided
    #[arg(long, default_value_t = 100_000)]
    soundness_budget: usize,
    /// Threads used to score candidates
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
    /// Write the final net as PNML here instead of standard output
    #[arg(long)]
    export_pnml: Option<PathBuf>,
    /// Also write the final net as DOT
    #[arg(long)]
    export_dot: Option<PathBuf>,
    /// Write the discovery report (JSON)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write one CSV row per iteration
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OrderArgs {
    #[command(flatten)]
    log: LogArgs,
    /// Only this strategy; all five when omitted
    #[arg(long, value_parser = parse_strategy)]
    ordering: Option<OrderingStrategy>,
    /// Share of traces the kept variants must cover
    #[arg(long, default_value = "1", value_parser = parse_fraction)]
    coverage: Rational,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Workflow net in PNML
    #[arg(long)]
    net: PathBuf,
    #[command(flatten)]
    log: LogArgs,
    /// Silent-transition search depth during replay
    #[arg(long, default_value_t = 5)]
    lookahead: usize,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    /// Input net (.pnml or .dot)
    #[arg(long)]
    input: PathBuf,
    /// Output net (.pnml or .dot)
    #[arg(long)]
    output: PathBuf,
}

fn parse_strategy(s: &str) -> Result<OrderingStrategy, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = OrderingStrategy::ALL.iter().map(|s| s.name()).collect();
        format!(
            "unknown ordering `{s}`; expected one of {}",
            names.join(", ")
        )
    })
}

fn parse_fraction(s: &str) -> Result<Rational, String> {
    let r = parse_rational(s).ok_or_else(|| format!("`{s}` is not a decimal or n/d fraction"))?;
    if r < Rational::from_integer(0) || r > Rational::from_integer(1) {
        return Err(format!("`{s}` is outside [0, 1]"));
    }
    Ok(r)
}

/// Errors carry the exit code they map to.
enum Failure {
    Io(anyhow::Error),
    Usage(anyhow::Error),
    Abort(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Abort(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Io(e) | Failure::Usage(e) | Failure::Abort(e) => e,
        }
    }
}

type CmdResult = Result<(), Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Io)
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::Io)
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default()
}

fn read_log(args: &LogArgs) -> Result<EventLog, Failure> {
    let path = &args.log;
    let ext = extension(path);
    if !matches!(ext.as_str(), "xes" | "csv" | "json") {
        return Err(Failure::Usage(anyhow!(
            "cannot tell the format of {}; use a .xes, .csv or .json file",
            path.display()
        )));
    }
    let file = fs::File::open(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Io)?;
    let ctx = |e: synthminer::log::LogError| {
        Failure::Io(anyhow!(e).context(format!("cannot parse {}", path.display())))
    };
    let parsed = match ext.as_str() {
        "xes" => parse_xes(std::io::BufReader::new(file)).map_err(ctx)?,
        "csv" => {
            let columns =
                CsvColumns::new(&args.case_col, &args.activity_col, args.time_col.clone());
            parse_csv(std::io::BufReader::new(file), &columns).map_err(ctx)?
        }
        _ => {
            let text = read_text(path)?;
            let log = EventLog::from_json(&text).map_err(ctx)?;
            return Ok(log);
        }
    };
    for w in &parsed.warnings {
        log::warn!("{w}");
    }
    if parsed.skipped > 0 {
        log::warn!(
            "{} events skipped while reading {}",
            parsed.skipped,
            path.display()
        );
    }
    Ok(parsed.log)
}

fn read_net(path: &Path) -> Result<WorkflowNet, Failure> {
    let text = read_text(path)?;
    let parsed = match extension(path).as_str() {
        "pnml" | "xml" => parse_pnml(&text),
        "dot" | "gv" => parse_dot(&text),
        _ => {
            return Err(Failure::Usage(anyhow!(
                "cannot tell the format of {}; use a .pnml or .dot file",
                path.display()
            )))
        }
    };
    parsed
        .with_context(|| format!("cannot parse {}", path.display()))
        .map_err(Failure::Io)
}

fn cmd_discover(args: DiscoverArgs) -> CmdResult {
    let log = read_log(&args.log)?;
    let config = DiscoveryConfig {
        strategy: args.ordering,
        threshold: args.threshold,
        coverage: args.coverage,
        max_subset_size: args.max_subset_size,
        patterns: args.patterns,
        path_budget: args.path_budget,
        lookahead: args.lookahead,
        soundness_budget: args.soundness_budget,
        jobs: args.jobs as usize,
    };
    let (net, report) = discover(&log, &config).map_err(|e| match e {
        DiscoveryError::Config(_) => Failure::Usage(e.into()),
        DiscoveryError::Log(_) | DiscoveryError::EmptyLog => Failure::Io(e.into()),
        _ => Failure::Abort(e.into()),
    })?;
    let pnml = to_pnml(&net);
    match &args.export_pnml {
        Some(p) => write_text(p, &pnml)?,
        None => print!("{pnml}"),
    }
    if let Some(p) = &args.export_dot {
        write_text(p, &to_dot(&net))?;
    }
    if let Some(p) = &args.report {
        write_text(p, &report.to_json())?;
    }
    if let Some(p) = &args.csv {
        write_text(p, &report.to_csv())?;
    }
    Ok(())
}

fn cmd_order(args: OrderArgs) -> CmdResult {
    let log = read_log(&args.log)?;
    if log.is_empty() {
        return Err(Failure::Io(anyhow!(
            "{} contains no traces",
            args.log.log.display()
        )));
    }
    let log = log
        .filter_variants(args.coverage)
        .map_err(|e| Failure::Usage(e.into()))?;
    let json = match args.ordering {
        Some(s) => serde_json::to_string(&make_order(&log, s).activities),
        None => {
            let all: serde_json::Map<String, serde_json::Value> = OrderingStrategy::ALL
                .iter()
                .map(|s| {
                    (
                        s.name().to_owned(),
                        serde_json::json!(make_order(&log, *s).activities),
                    )
                })
                .collect();
            serde_json::to_string_pretty(&all)
        }
    };
    println!("{}", json.expect("orders serialize"));
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> CmdResult {
    let net = read_net(&args.net)?;
    let log = read_log(&args.log)?;
    let score = evaluate(&net, &log, args.lookahead);
    println!(
        "{}",
        serde_json::to_string_pretty(&score).expect("score serializes")
    );
    Ok(())
}

fn cmd_convert(args: ConvertArgs) -> CmdResult {
    let net = read_net(&args.input)?;
    let text = match extension(&args.output).as_str() {
        "pnml" | "xml" => to_pnml(&net),
        "dot" | "gv" => to_dot(&net),
        _ => {
            return Err(Failure::Usage(anyhow!(
                "cannot tell the format of {}; use a .pnml or .dot file",
                args.output.display()
            )))
        }
    };
    write_text(&args.output, &text)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Discover(a) => cmd_discover(a),
        Command::Order(a) => cmd_order(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Convert(a) => cmd_convert(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
