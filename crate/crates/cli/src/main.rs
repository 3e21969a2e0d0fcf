mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Command, EndogenyStart, RunConfig, SimMode};
use rdelab::analysis::Orientation;

#[derive(Parser)]
#[command(
    name = "rdelab",
    version,
    about = "Solve and study recursive distributional equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the catalog.
    List,
    /// Iterate T from the entry's initial law.
    Iterate(Common),
    /// Iterate to a fixed point, then run the bivariate endogeny test.
    Endogeny {
        #[command(flatten)]
        common: Common,
        /// Fixed-point pool source: iterate or oracle.
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        gap_tol: Option<f64>,
        #[arg(long)]
        endogeny_iters: Option<usize>,
    },
    /// Locate the critical value of one parameter.
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scan_param: Option<String>,
        #[arg(long)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        bisections: Option<usize>,
        /// Generations per scan point.
        #[arg(long)]
        generations: Option<usize>,
        /// Parameter side without a fixed point: above or below.
        #[arg(long)]
        diverges: Option<String>,
    },
    /// Tree-level simulations: brw, greedy, frozen-stats.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    entry: Option<String>,
    /// Entry parameter as key=value (repeatable).
    #[arg(long = "param", value_name = "K=V")]
    params: Vec<String>,
    #[arg(long)]
    pool: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    min_iters: Option<usize>,
    #[arg(long)]
    period: Option<usize>,
    #[arg(long)]
    hist_bins: Option<usize>,
}

impl Common {
    fn resolve(&self, command: Command) -> Result<RunConfig, String> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.command = command;
        if let Some(e) = &self.entry {
            cfg.entry = Some(e.clone());
        }
        let kv = rdelab::catalog::parse_params(&self.params).map_err(|e| e.to_string())?;
        cfg.params.extend(kv);
        macro_rules! set {
            ($($field:ident).+ <- $flag:expr) => {
                if let Some(v) = $flag {
                    cfg.$($field).+ = v;
                }
            };
        }
        set!(pool <- self.pool);
        set!(max_iters <- self.iters);
        set!(tol <- self.tol);
        set!(seed <- self.seed);
        set!(iterate.min_iters <- self.min_iters);
        set!(iterate.period <- self.period);
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        if self.hist_bins.is_some() {
            cfg.hist.bins = self.hist_bins;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_mode(s: &str) -> Result<SimMode, String> {
    match s {
        "brw" => Ok(SimMode::Brw),
        "greedy" => Ok(SimMode::Greedy),
        "frozen-stats" | "frozen_stats" | "stats" => Ok(SimMode::FrozenStats),
        _ => Err(format!(
            "unknown simulation mode `{s}` (brw, greedy, frozen-stats)"
        )),
    }
}

fn set_threads(n: Option<usize>) -> Result<(), String> {
    if let Some(n) = n {
        if n == 0 {
            return Err("threads must be positive".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Cmd::List => commands::list(),
        Cmd::Iterate(c) => {
            set_threads(c.threads)?;
            commands::iterate_cmd(&c.resolve(Command::Iterate)?)
        }
        Cmd::Endogeny {
            common,
            start,
            gap_tol,
            endogeny_iters,
        } => {
            set_threads(common.threads)?;
            let mut cfg = common.resolve(Command::Endogeny)?;
            let e = &mut cfg.endogeny;
            if let Some(s) = start {
                e.start = match s.as_str() {
                    "iterate" => EndogenyStart::Iterate,
                    "oracle" => EndogenyStart::Oracle,
                    _ => return Err(format!("--start takes iterate or oracle, got `{s}`")),
                };
            }
            e.gap_tol = gap_tol.unwrap_or(e.gap_tol);
            e.max_iters = endogeny_iters.unwrap_or(e.max_iters);
            commands::endogeny_cmd(&cfg)
        }
        Cmd::Scan {
            common,
            scan_param,
            lo,
            hi,
            points,
            bisections,
            generations,
            diverges,
        } => {
            set_threads(common.threads)?;
            let mut cfg = common.resolve(Command::Scan)?;
            let s = &mut cfg.scan;
            if let Some(p) = scan_param {
                s.param = p;
            }
            s.lo = lo.or(s.lo);
            s.hi = hi.or(s.hi);
            s.points = points.unwrap_or(s.points);
            s.bisections = bisections.unwrap_or(s.bisections);
            s.generations = generations.unwrap_or(s.generations);
            if let Some(d) = diverges {
                s.orientation = match d.as_str() {
                    "above" => Orientation::DivergesAbove,
                    "below" => Orientation::DivergesBelow,
                    _ => return Err(format!("--diverges takes above or below, got `{d}`")),
                };
            }
            commands::scan_cmd(&cfg)
        }
        Cmd::Simulate {
            common,
            mode,
            generations,
            cap,
            replicas,
            steps,
            samples,
        } => {
            set_threads(common.threads)?;
            let mut cfg = common.resolve(Command::Simulate)?;
            let s = &mut cfg.simulate;
            if let Some(m) = mode {
                s.mode = Some(parse_mode(&m)?);
            }
            s.generations = generations.unwrap_or(s.generations);
            s.cap = cap.unwrap_or(s.cap);
            s.replicas = replicas.unwrap_or(s.replicas);
            s.steps = steps.unwrap_or(s.steps);
            s.samples = samples.unwrap_or(s.samples);
            commands::simulate_cmd(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(commands::EXIT_CONFIG as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(commands::EXIT_CONFIG as u8)
        }
    }
}
