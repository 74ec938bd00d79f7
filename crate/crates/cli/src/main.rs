mod config;

use anyhow::{anyhow, Context, Result};
use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use dpeq_core::dynamics::{harmonic_mean_degree, RunConfig};
use dpeq_core::experiment::{
    audit, auto_schedule, run_sweep, run_with_metrics, write_sweep_csv, Adjacent, GraphKind,
    ScheduleOverrides, SweepConfig,
};
use dpeq_core::graph_gen::{gen_chain, gen_dense, gen_sparse};
use dpeq_core::verify::{run_checks, VerifyOptions};
use dpeq_core::{Error, PolymatrixGame};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Private learning dynamics on polymatrix games.
#[derive(Parser, Debug)]
#[command(name = "dpeq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random game and write it as JSON.
    Gen(GenArgs),
    /// Run the noisy dynamics on a game file.
    Run(RunArgs),
    /// Coupled run against an edge-resampled neighbor game.
    Audit(AuditArgs),
    /// Sweep over N, one CSV row per (N, seed).
    Sweep(SweepArgs),
    /// Reduced-scale self checks.
    Verify,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Dense,
    Sparse,
    Chain,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    /// Edge probability for dense graphs.
    #[arg(long, default_value_t = 0.25)]
    p: f64,
    /// Slots per node for sparse graphs.
    #[arg(long, default_value_t = 2)]
    c: usize,
    #[arg(long, default_value_t = 2)]
    actions: usize,
    #[arg(long)]
    zero_sum: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScheduleKind {
    Dense,
    Sparse,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    /// Which trade-off schedule fills in parameters not given explicitly.
    #[arg(long, value_enum, default_value = "dense")]
    schedule: ScheduleKind,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    tau_constant: Option<f64>,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ScheduleArgs {
    fn config(&self, game: &PolymatrixGame) -> Result<RunConfig> {
        let mut cfg = match (self.eta, self.sigma, self.rounds) {
            (Some(eta), Some(sigma), Some(rounds)) => RunConfig::new(eta, sigma, rounds),
            _ => {
                let overrides = ScheduleOverrides {
                    eta: self.eta,
                    sigma: self.sigma,
                    rounds: self.rounds,
                };
                let dense = matches!(self.schedule, ScheduleKind::Dense);
                auto_schedule(game, dense, &overrides)?.config
            }
        };
        cfg.master_seed = self.seed;
        cfg.tau_constant = self.tau_constant;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    game: PathBuf,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Per-round CSV of clean strategies and observations; a `.json` sidecar
    /// next to it records the configuration.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    record_noise: bool,
    /// Metrics JSON; printed to stdout when absent.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long)]
    game: PathBuf,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Edge as `i,j`; defaults to the worst case.
    #[arg(long, value_parser = parse_edge)]
    edge: Option<(usize, usize)>,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    /// Use the original game as its own neighbor.
    #[arg(long)]
    identical: bool,
    /// Seed for the resampled edge; defaults to the noise seed.
    #[arg(long)]
    resample_seed: Option<u64>,
    /// Report JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `player,empirical_budget` table.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepKind {
    Dense,
    Sparse,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum)]
    kind: SweepKind,
    #[arg(long, value_delimiter = ',', required = true, action = ArgAction::Set)]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 0.25)]
    p: f64,
    #[arg(long, default_value_t = 2)]
    c: usize,
    #[arg(long, default_value_t = 4)]
    actions: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8,9", action = ArgAction::Set)]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long)]
    zero_sum: bool,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    rounds: Option<usize>,
    /// Write zero instead of wall-clock milliseconds.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out: PathBuf,
}

fn parse_edge(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected i,j")?;
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| e.to_string());
    Ok((parse(a)?, parse(b)?))
}

/// Failure that maps to a specific exit status.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(Exit(code, _)) = err.downcast_ref::<Exit>() {
        return *code;
    }
    if err.downcast_ref::<config::ConfigError>().is_some() {
        return 2;
    }
    for cause in err.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io(_) | Error::Parse(_) => 3,
                Error::DegenerateSchedule(_) => 4,
                Error::ZeroSigma => 5,
                Error::InvalidConfig(_)
                | Error::InvalidSweep(_)
                | Error::InvalidAlpha(_)
                | Error::InvalidDelta(_)
                | Error::NonPositiveEta(_)
                | Error::EdgeNotInGame(..)
                | Error::NotAdjacent(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_game(path: &Path) -> Result<PolymatrixGame> {
    PolymatrixGame::load(path).with_context(|| format!("loading {}", path.display()))
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let game = match args.kind {
        Kind::Dense => gen_dense(args.n, args.p, args.actions, args.zero_sum, args.seed)?,
        Kind::Sparse => gen_sparse(args.n, args.c, args.actions, args.zero_sum, args.seed)?,
        Kind::Chain => gen_chain(args.n, args.actions, args.zero_sum, args.seed)?,
    };
    write_text(&args.out, &game.to_json())?;
    println!(
        "N={} |E|={} N_bar={:.4} N_max={}",
        game.n_players(),
        game.edges().len(),
        harmonic_mean_degree(&game),
        game.max_degree()
    );
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let game = load_game(&args.game)?;
    let cfg = args
        .schedule
        .config(&game)?
        .with_noise_recording(args.record_noise);
    let (trace, metrics) = run_with_metrics(&game, &cfg)?;
    if let Some(path) = &args.trace {
        let mut out = create(path)?;
        trace.write_csv(&mut out)?;
        out.flush()?;
        write_text(&path.with_extension("json"), &trace.config_json())?;
    }
    let json = serde_json::to_string_pretty(&metrics)?;
    match &args.metrics {
        Some(path) => write_text(path, &json)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_audit(args: AuditArgs) -> Result<()> {
    let game = load_game(&args.game)?;
    let cfg = args.schedule.config(&game)?;
    let adjacent = if args.identical {
        Adjacent::Identical
    } else {
        Adjacent::Resample {
            seed: args.resample_seed.unwrap_or(args.schedule.seed),
        }
    };
    let report = audit(&game, args.edge, &cfg, args.alpha, args.delta, adjacent)?;
    let json = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(path) => write_text(path, &json)?,
        None => println!("{json}"),
    }
    if let Some(path) = &args.csv {
        let mut out = create(path)?;
        writeln!(out, "player,empirical_budget")?;
        for (i, b) in report.empirical_budget_per_player.iter().enumerate() {
            writeln!(out, "{i},{b:?}")?;
        }
        out.flush()?;
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let kind = match args.kind {
        SweepKind::Dense => GraphKind::Dense { p: args.p },
        SweepKind::Sparse => GraphKind::Sparse { c: args.c },
    };
    let cfg = SweepConfig {
        kind,
        ns: args.ns,
        actions: args.actions,
        seeds: args.seeds,
        alpha: args.alpha,
        zero_sum: args.zero_sum,
        overrides: ScheduleOverrides {
            eta: args.eta,
            sigma: args.sigma,
            rounds: args.rounds,
        },
        no_timing: args.no_timing,
    };
    let rows = run_sweep(&cfg)?;
    let mut out = create(&args.out)?;
    write_sweep_csv(&rows, &mut out)?;
    out.flush()?;
    let ok = rows.iter().filter(|r| r.is_ok()).count();
    eprintln!("{ok}/{} rows succeeded", rows.len());
    if ok == 0 {
        return Err(anyhow!(Exit(1, "every sweep row failed".into())));
    }
    Ok(())
}

fn cmd_verify() -> Result<()> {
    let corrupt = std::env::var("DPEQ_CORRUPT_FIXTURE").is_ok_and(|v| !v.is_empty() && v != "0");
    let start = Instant::now();
    let checks = run_checks(&VerifyOptions {
        corrupt_fixture: corrupt,
    });
    for c in &checks {
        println!("{:<20} {} {}", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > 300.0 {
        eprintln!("warning: verify took {secs:.0}s, over the 5 minute budget");
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(anyhow!(Exit(1, format!("{failed} checks failed"))));
    }
    println!("all {} checks passed in {secs:.1}s", checks.len());
    Ok(())
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("DPEQ_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| anyhow!(Exit(2, format!("DPEQ_THREADS must be a positive integer, got {raw:?}"))))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| anyhow!(Exit(1, e.to_string())))
}

fn real_main() -> Result<()> {
    let argv = config::expand(std::env::args().collect())?;
    let parsed = Cli::command()
        .mut_subcommands(|sub| sub.args_override_self(true))
        .try_get_matches_from(argv)
        .and_then(|m| Cli::from_arg_matches(&m));
    let cli = match parsed {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return if code == 0 {
                Ok(())
            } else {
                Err(anyhow!(Exit(2, String::new())))
            };
        }
    };
    init_threads()?;
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify => cmd_verify(),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}");
            if !msg.is_empty() {
                eprintln!("dpeq: {msg}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
