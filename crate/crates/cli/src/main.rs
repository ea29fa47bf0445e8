use cardy_cli::commands::{self, TwistedOp};
use cardy_cli::{Format, InputError, Report, RunConfig};
use cardy_core::Tolerance;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cardy",
    version,
    about = "Checks for open/closed TFT algebra, spectral covers and twisted bundles"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    #[arg(long, global = true, default_value_t = Tolerance::default().eps_structural)]
    tol_structural: f64,
    #[arg(long, global = true, default_value_t = Tolerance::default().eps_rank)]
    tol_rank: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Include wall time in the report (makes output run-dependent).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a Frobenius algebra and decompose it into idempotents.
    Algebra { path: PathBuf },
    /// Run the Cardy, sewing, centrality, adjoint and additivity checks.
    Branes { path: PathBuf },
    /// Potential family: WDVV, spectral cover, cocycle and monodromy.
    Family { path: PathBuf },
    /// Check a BDR cocycle.
    Bdr { path: PathBuf },
    /// Twisted bundle operations.
    Twisted {
        #[command(subcommand)]
        op: TwistedCmd,
    },
    /// Family, cover, BDR cocycle, brane lift and twisted bundles in one run.
    Pipeline { path: PathBuf },
}

#[derive(Subcommand)]
enum TwistedCmd {
    Validate {
        path: PathBuf,
    },
    Tensor {
        a: PathBuf,
        b: PathBuf,
    },
    Dual {
        path: PathBuf,
    },
    Hom {
        a: PathBuf,
        b: PathBuf,
    },
    Iso {
        a: PathBuf,
        b: PathBuf,
    },
    Azumaya {
        path: PathBuf,
    },
    Psi {
        path: PathBuf,
        /// Representative twisted line bundles, one per twist class.
        #[arg(long, required = true, num_args = 1..)]
        reps: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<Report, InputError> {
    let g = &cli.global;
    let tol =
        Tolerance::new(g.tol_structural, g.tol_rank).map_err(|e| InputError::new(&PathBuf::from("<flags>"), e))?;
    let cfg = RunConfig {
        tol,
        seed: g.seed,
        format: match g.format {
            FormatArg::Text => Format::Text,
            FormatArg::Json => Format::Json,
        },
        timing: g.timing,
    };
    match cli.command {
        Command::Algebra { path } => commands::algebra(&path, &cfg),
        Command::Branes { path } => commands::branes(&path, &cfg),
        Command::Family { path } => commands::family(&path, &cfg),
        Command::Bdr { path } => commands::bdr(&path, &cfg),
        Command::Pipeline { path } => commands::pipeline(&path, &cfg),
        Command::Twisted { op } => {
            let op = match op {
                TwistedCmd::Validate { path } => TwistedOp::Validate(path),
                TwistedCmd::Tensor { a, b } => TwistedOp::Tensor(a, b),
                TwistedCmd::Dual { path } => TwistedOp::Dual(path),
                TwistedCmd::Hom { a, b } => TwistedOp::Hom(a, b),
                TwistedCmd::Iso { a, b } => TwistedOp::Iso(a, b),
                TwistedCmd::Azumaya { path } => TwistedOp::Azumaya(path),
                TwistedCmd::Psi { path, reps } => TwistedOp::Psi { bundle: path, reps },
            };
            commands::twisted(&op, &cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.global.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.jobs)
            .build_global()
            .expect("thread pool is configured once");
    }
    let out = cli.global.out.clone();
    let format = match cli.global.format {
        FormatArg::Text => Format::Text,
        FormatArg::Json => Format::Json,
    };
    let report = match run(cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let text = report.render(format);
    match out {
        Some(p) => {
            if let Err(e) = std::fs::write(&p, &text) {
                eprintln!("error: cannot write {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(report.exit_code() as u8)
}
