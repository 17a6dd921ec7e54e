mod commands;
mod config;

use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bvdiff::spn::TieBreak;
use clap::{Args, Parser, Subcommand};

use config::{read_candidates, read_sbox, read_spec, CommandName, Format, Mode, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{message}")]
    Resource { message: String, hint: Option<&'static str> },
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

impl From<bvdiff::Error> for CliError {
    fn from(e: bvdiff::Error) -> Self {
        if e.is_resource() {
            CliError::Resource { message: e.to_string(), hint: e.hint() }
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "bvdiff", version, about = "Differential search with simulated Bernstein-Vazirani sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every random choice; drawn at random and reported when omitted.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file (must not exist). Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// JSON config whose fields override the flags; an earlier output file
    /// also works.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct Input {
    /// Built-in S-box: identity4, linear4, ls4, present4, bent4.
    #[arg(long)]
    fixture: Option<String>,
    /// JSON truth table `{"m":..,"n":..,"table":[..]}`.
    #[arg(long)]
    sbox: Option<PathBuf>,
    /// Random M-bit to N-bit table drawn from the seed.
    #[arg(long, num_args = 2, value_names = ["M", "N"])]
    random: Option<Vec<u32>>,
}

#[derive(Args, Debug, Default)]
struct Params {
    /// Samples per component; overrides the rule driven by --c/--c1/--c2.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    /// Largest solution-space dimension that will be enumerated.
    #[arg(long)]
    cap: Option<u32>,
    /// Partial mode: minimum number of known output bits.
    #[arg(long)]
    min_known: Option<u32>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Walsh spectrum of one or all components.
    Spectrum {
        #[command(flatten)]
        input: Input,
        /// 1-based component; all components when omitted.
        #[arg(long)]
        component: Option<usize>,
    },
    /// Draw p simulated measurement outcomes for one component.
    BvSample {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        component: Option<usize>,
    },
    /// Sample and solve every component.
    Algo1 {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        params: Params,
    },
    /// Combine per-component solution sets into candidates.
    Algo2 {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        params: Params,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Difference distribution table.
    Ddt {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Exact probabilities for candidates, read from a file or searched.
    Verify {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        params: Params,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// JSON-lines file of `{"dx","dy","mask"}` records.
        #[arg(long)]
        candidates: Option<PathBuf>,
    },
    /// Search a toy SPN for differentials and recover last-round key bits.
    Attack {
        /// SPN description file, or `reference`.
        #[arg(long)]
        spec: Option<String>,
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        max_groups: Option<usize>,
        /// Order of key guesses with equal counters.
        #[arg(long, value_parser = parse_tie_break)]
        tie_break: Option<TieBreak>,
    },
    /// Monte Carlo check of the single-output guarantee.
    ValidateT1 {
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        cap: Option<u32>,
    },
    /// Monte Carlo check of the whole-S-box guarantee.
    ValidateJoint {
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        params: Params,
    },
    /// Re-run the configuration embedded in an earlier output file.
    Replay { file: PathBuf },
}

fn parse_tie_break(s: &str) -> Result<TieBreak, String> {
    match s {
        "ascending" => Ok(TieBreak::Ascending),
        "descending" => Ok(TieBreak::Descending),
        _ => Err("expected ascending or descending".into()),
    }
}

impl Input {
    fn apply(self, cfg: &mut RunConfig) -> Result<(), CliError> {
        cfg.fixture = self.fixture;
        if let Some(path) = self.sbox {
            cfg.sbox = Some(read_sbox(&path)?);
        }
        cfg.random = self.random.map(|v| [v[0], v[1]]);
        Ok(())
    }
}

impl Params {
    fn apply(self, cfg: &mut RunConfig) {
        cfg.p = self.p;
        cfg.c = self.c;
        cfg.c1 = self.c1;
        cfg.c2 = self.c2;
        cfg.cap = self.cap;
        cfg.min_known = self.min_known;
    }
}

fn flags_to_config(cli: Cli) -> Result<(RunConfig, Option<PathBuf>), CliError> {
    let mut cfg = RunConfig { seed: cli.seed, ..RunConfig::default() };
    let name = match cli.command {
        Command::Spectrum { input, component } => {
            input.apply(&mut cfg)?;
            cfg.component = component;
            CommandName::Spectrum
        }
        Command::BvSample { input, params, component } => {
            input.apply(&mut cfg)?;
            params.apply(&mut cfg);
            cfg.component = component;
            CommandName::BvSample
        }
        Command::Algo1 { input, params } => {
            input.apply(&mut cfg)?;
            params.apply(&mut cfg);
            CommandName::Algo1
        }
        Command::Algo2 { input, params, mode } => {
            input.apply(&mut cfg)?;
            params.apply(&mut cfg);
            cfg.mode = mode;
            CommandName::Algo2
        }
        Command::Ddt { input, format } => {
            input.apply(&mut cfg)?;
            cfg.format = format;
            CommandName::Ddt
        }
        Command::Verify { input, params, mode, candidates } => {
            input.apply(&mut cfg)?;
            params.apply(&mut cfg);
            cfg.mode = mode;
            if let Some(path) = candidates {
                cfg.candidates = Some(read_candidates(&path)?);
            }
            CommandName::Verify
        }
        Command::Attack { spec, params, pairs, max_groups, tie_break } => {
            if let Some(s) = spec {
                cfg.spec = Some(read_spec(&s)?);
            }
            params.apply(&mut cfg);
            cfg.pairs = pairs;
            cfg.max_groups = max_groups;
            cfg.tie_break = tie_break;
            CommandName::Attack
        }
        Command::ValidateT1 { m, trials, p, epsilon, cap } => {
            cfg.m = m;
            cfg.trials = trials;
            cfg.p = p;
            cfg.epsilon = epsilon;
            cfg.cap = cap;
            CommandName::ValidateT1
        }
        Command::ValidateJoint { m, n, trials, params } => {
            cfg.m = m;
            cfg.n = n;
            cfg.trials = trials;
            params.apply(&mut cfg);
            CommandName::ValidateJoint
        }
        Command::Replay { file } => {
            let mut replayed = RunConfig::load(&file)?;
            if replayed.command.is_none() {
                return Err(CliError::Input(format!("{} has no embedded command", file.display())));
            }
            if let Some(path) = &cli.config {
                replayed.overlay(&RunConfig::load(path)?);
            }
            return Ok((replayed, cli.out));
        }
    };
    cfg.command = Some(name);
    if let Some(path) = &cli.config {
        cfg.overlay(&RunConfig::load(path)?);
    }
    Ok((cfg, cli.out))
}

fn write_output(out: Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut file = OpenOptions::new()
                .write(true)
                .create_new(true)
                .open(&path)
                .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))?;
            file.write_all(text.as_bytes())?;
        }
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (cfg, out) = flags_to_config(cli)?;
    let text = commands::execute(cfg)?;
    write_output(out, &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Resource { message, hint }) => {
            eprintln!("error: {message}");
            if let Some(h) = hint {
                eprintln!("hint: {h}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
