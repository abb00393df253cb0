use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use srp_cli::bench::{run_bench, BenchConfig};
use srp_cli::record::{append_records, read_records, SolverPath};
use srp_cli::report::summarize;
use srp_cli::run::{load_hub_graph, network_name, solve, RunLabel, SolveOptions};
use srp_cli::{to_csv, NumList};
use srp_core::hub_graph::CsvPrecision;
use srp_core::{CostColumn, GenerationSpec, SrpInstance};

#[derive(Parser, Debug)]
#[command(name = "srp", version, about = "Shipment rerouting: preprocessing, solving and benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Close a TNTP network over its hubs and write the distance matrix as CSV.
    Preprocess {
        #[command(flatten)]
        source: NetworkArgs,
        /// Output CSV; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fixed decimals instead of full precision.
        #[arg(long)]
        decimals: Option<usize>,
    },
    /// Solve one instance with one solver path.
    Solve(SolveArgs),
    /// Sweep networks, request counts, solver paths and trials into one CSV.
    Bench(BenchArgs),
    /// Summarize a run log per (network, m, K, solver, dispatch).
    Report {
        /// Run log written by `solve` or `bench`.
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct NetworkArgs {
    /// TNTP net file, or a hub-graph CSV from `preprocess`.
    #[arg(long)]
    network: PathBuf,
    /// Hub nodes, e.g. `1,5,7` or `1-10`; every node when omitted.
    #[arg(long)]
    hubs: Option<NumList>,
    /// Link column used as edge cost.
    #[arg(long, default_value = "length")]
    cost_column: CostColumn,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Instance JSON; replaces the generation flags.
    #[arg(long, conflicts_with_all = ["network", "m"])]
    instance: Option<PathBuf>,
    #[arg(long, requires = "m")]
    network: Option<PathBuf>,
    #[arg(long)]
    hubs: Option<NumList>,
    #[arg(long, default_value = "length")]
    cost_column: CostColumn,
    /// Number of requests.
    #[arg(long)]
    m: Option<usize>,
    /// Number of trucks; defaults to m.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dispatch hub; node 1 by default.
    #[arg(long)]
    dispatch_hub: Option<usize>,
    /// Trucks start and end at the dispatch hub.
    #[arg(long)]
    dispatch: bool,
    #[arg(long, value_enum)]
    solver: SolverPath,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
    /// Directory for the plan, model and sample files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run log to append to; `<out>/runs.csv` when omitted.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DispatchModes {
    Both,
    On,
    Off,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Network files, comma separated or repeated.
    #[arg(long, value_delimiter = ',', required = true)]
    network: Vec<PathBuf>,
    #[arg(long)]
    hubs: Option<NumList>,
    #[arg(long, default_value = "length")]
    cost_column: CostColumn,
    /// Request counts, e.g. `1-5`.
    #[arg(long, default_value = "1-5")]
    m: NumList,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Trial t at size m uses seed `seed + 1000 m + t`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "exact,milp-emit,anneal")]
    solver: Vec<SolverPath>,
    #[arg(long, value_enum, default_value = "both")]
    dispatch: DispatchModes,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
    /// Output CSV; printed to stdout when omitted. Existing files are appended to.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn preprocess(source: &NetworkArgs, out: Option<&Path>, decimals: Option<usize>) -> Result<()> {
    let (graph, secs) = load_hub_graph(&source.network, source.hubs.as_ref().map(|h| &h.0[..]), source.cost_column)?;
    let precision = decimals.map_or(CsvPrecision::Full, CsvPrecision::Decimals);
    write_or_print(out, &graph.to_csv(precision))?;
    eprintln!("{}: {} hubs closed in {secs:.4} s", network_name(&source.network), graph.len());
    Ok(())
}

fn load_instance(args: &SolveArgs) -> Result<(SrpInstance, String, f64)> {
    if let Some(path) = &args.instance {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let inst: SrpInstance = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        return Ok((inst, network_name(path), 0.0));
    }
    let (Some(network), Some(m)) = (&args.network, args.m) else {
        bail!("either --instance or --network with --m is required");
    };
    let (graph, secs) = load_hub_graph(network, args.hubs.as_ref().map(|h| &h.0[..]), args.cost_column)?;
    let mut spec = GenerationSpec::new(m, args.seed);
    spec.k = args.k;
    spec.dispatch_hub = args.dispatch_hub;
    Ok((spec.build(&graph)?, network_name(network), secs))
}

fn solve_cmd(args: &SolveArgs) -> Result<()> {
    let (instance, name, secs) = load_instance(args)?;
    let opts = SolveOptions {
        solver: args.solver,
        dispatch: args.dispatch,
        restarts: args.restarts,
        sweeps: args.sweeps,
        anneal_seed: instance.seed().unwrap_or(args.seed),
    };
    let (record, art) = solve(&instance, &RunLabel { network: &name, trial: 0, preprocess_seconds: secs }, &opts);

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        if let Some(plan) = &art.plan {
            let head = format!("# objective {}\n", record.objective.map_or("none".into(), |o| o.to_string()));
            std::fs::write(dir.join("plan.txt"), head + &plan.to_string())?;
        }
        if let Some(lp) = &art.lp {
            std::fs::write(dir.join("model.lp"), lp)?;
        }
        if let Some(q) = &art.qubo {
            std::fs::write(dir.join("model.qubo"), q)?;
        }
        if !art.samples.is_empty() {
            std::fs::write(dir.join("samples.csv"), to_csv(&art.samples)?)?;
        }
    }
    let log = args.log.clone().or_else(|| args.out.as_ref().map(|d| d.join("runs.csv")));
    if let Some(log) = &log {
        append_records(log, std::slice::from_ref(&record))?;
    }

    if let Some(e) = &record.error {
        bail!("{} failed: {e}", args.solver.name());
    }
    match (record.objective, args.solver) {
        (Some(obj), _) => println!("objective {obj}"),
        (None, SolverPath::Anneal) => println!("no feasible sample"),
        (None, _) => {}
    }
    if let (Some(v), Some(c)) = (record.variables, record.constraints) {
        println!("variables {v}, constraints {c}");
    }
    if let Some(plan) = &art.plan {
        print!("{plan}");
    }
    if args.out.is_none() {
        if let Some(lp) = &art.lp {
            print!("{lp}");
        }
    }
    println!("solve {:.4} s, preprocess {:.4} s", record.solve_seconds, record.preprocess_seconds);
    Ok(())
}

fn bench_cmd(args: &BenchArgs) -> Result<()> {
    let mut config = BenchConfig::new(args.network.clone());
    config.hubs = args.hubs.clone().map(|h| h.0);
    config.column = args.cost_column;
    config.m_values = args.m.0.clone();
    config.trials = args.trials;
    config.seed_base = args.seed;
    config.solvers = args.solver.clone();
    config.dispatch_modes = match args.dispatch {
        DispatchModes::Both => vec![false, true],
        DispatchModes::On => vec![true],
        DispatchModes::Off => vec![false],
    };
    config.restarts = args.restarts;
    config.sweeps = args.sweeps;
    let records = run_bench(&config);
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    match &args.out {
        Some(p) => append_records(p, &records)?,
        None => print!("{}", to_csv(&records)?),
    }
    eprintln!("{} runs, {failed} with errors", records.len());
    Ok(())
}

fn report_cmd(log: &Path, out: Option<&Path>) -> Result<()> {
    let records = read_records(log)?;
    write_or_print(out, &to_csv(&summarize(&records))?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Preprocess { source, out, decimals } => preprocess(source, out.as_deref(), *decimals),
        Command::Solve(args) => solve_cmd(args),
        Command::Bench(args) => bench_cmd(args),
        Command::Report { log, out } => report_cmd(log, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
