use clap::{Args, Parser, Subcommand, ValueEnum};
use sphavg::commands::{self, Command, Format, RunConfig};
use sphavg::Error;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sphavg", version, about = "Discrete spherical averages: certificates and sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lattice point counts |S| / λ^{d-2} over a range of λ².
    Sphere(Opts),
    /// Weil-bound ratios of K(λ, q, ·) over a range of q.
    Kloosterman(Opts),
    /// Residual sup estimates and their log-log slope.
    Residual(Opts),
    /// Improving ratios over the test family.
    Improve(Opts),
    /// Superlevel set of the sphere self-average.
    Counterexample(Opts),
    /// The M1/M2 certificates at one cutoff N.
    Proofsplit(Opts),
    /// Oracle-equivalence suite.
    Selftest(Opts),
    /// Re-run a saved output (JSON or CSV) and check the payload matches.
    Replay {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct Opts {
    #[arg(long = "dim", default_value_t = 5)]
    dim: usize,
    #[arg(long)]
    lambda2: Option<u64>,
    #[arg(long = "lambda2-max")]
    lambda2_max: Option<u64>,
    #[arg(long, default_value_t = 1.8)]
    p: f64,
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    p2: Option<f64>,
    #[arg(long = "cutoff-N")]
    cutoff_n: Option<u64>,
    #[arg(long, default_value_t = 0.25)]
    eta: f64,
    #[arg(long, default_value_t = sphavg::extremal::DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long = "threshold-c", default_value_t = sphavg::extremal::DEFAULT_THRESHOLD)]
    threshold_c: f64,
    #[arg(long, default_value_t = sphavg::multiplier::DEFAULT_GRID)]
    grid: usize,
    #[arg(long)]
    torus: Option<usize>,
    #[arg(long, default_value_t = sphavg::multiplier::DEFAULT_SEED)]
    seed: u64,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "q-min")]
    q_min: Option<u64>,
    #[arg(long = "q-max")]
    q_max: Option<u64>,
    /// Compare factored sums against the literal triple sum.
    #[arg(long)]
    oracle: bool,
    /// Perturb the root-of-unity tables (the self-test must then fail).
    #[arg(long)]
    corrupt_roots: bool,
}

impl Opts {
    fn config(&self, command: Command) -> RunConfig {
        RunConfig {
            lambda2: self.lambda2,
            lambda2_max: self.lambda2_max,
            p: self.p,
            p1: self.p1,
            p2: self.p2,
            cutoff_n: self.cutoff_n,
            eta: self.eta,
            epsilon: self.epsilon,
            threshold_c: self.threshold_c,
            grid: self.grid,
            torus: self.torus,
            seed: self.seed,
            q_min: self.q_min,
            q_max: self.q_max,
            oracle: self.oracle,
            corrupt_roots: self.corrupt_roots,
            format: match self.format {
                FormatArg::Json => Format::Json,
                FormatArg::Csv => Format::Csv,
            },
            ..RunConfig::new(command, self.dim)
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::ResourceCap(_) => 3,
        Error::Precision(_) => 2,
        _ => 1,
    }
}

fn emit(out: &commands::CommandOutput, path: Option<&PathBuf>) -> Result<(), Error> {
    match path {
        Some(p) => out.write(BufWriter::new(File::create(p)?)),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            out.write(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (result, path) = match &cli.command {
        Cmd::Replay { file, out } => (std::fs::read_to_string(file).map_err(Error::from).and_then(|t| commands::replay(&t)), out.clone()),
        cmd => {
            let (command, opts) = match cmd {
                Cmd::Sphere(o) => (Command::Sphere, o),
                Cmd::Kloosterman(o) => (Command::Kloosterman, o),
                Cmd::Residual(o) => (Command::Residual, o),
                Cmd::Improve(o) => (Command::Improve, o),
                Cmd::Counterexample(o) => (Command::Counterexample, o),
                Cmd::Proofsplit(o) => (Command::Proofsplit, o),
                Cmd::Selftest(o) => (Command::Selftest, o),
                Cmd::Replay { .. } => unreachable!(),
            };
            if let Some(j) = opts.jobs {
                if rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global().is_err() {
                    eprintln!("warning: could not configure {j} worker threads");
                }
            }
            (commands::run(&opts.config(command)), opts.out.clone())
        }
    };
    match result {
        Ok(out) => {
            if let Err(e) = emit(&out, path.as_ref()) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            if out.failed {
                eprintln!("self-test failed");
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
