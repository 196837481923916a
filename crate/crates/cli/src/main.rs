use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use sampcert::config::MethodSpec;
use sampcert::export::{export, Format};
use sampcert::{run_levelset, run_verify_ct, run_verify_dt, Overrides, RunConfig, RunReport};

#[derive(Parser)]
#[command(name = "sampcert", version, about = "Certify Lyapunov decrease by sampling with interval bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Flags {
    /// Worker threads for the box tests.
    #[arg(long)]
    workers: Option<usize>,
    /// Finest box half-width.
    #[arg(long = "delta-min")]
    delta_min: Option<f64>,
    /// Starting horizon.
    #[arg(long = "M")]
    m: Option<usize>,
    /// split, combined or best.
    #[arg(long = "bound-method")]
    bound_method: Option<MethodSpec>,
    /// Where to write the report; printed to stdout otherwise.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Discrete pipeline: horizon search, local set, level set.
    VerifyDt {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Check the derivative of W from a prior report along the continuous system.
    VerifyCt {
        config: PathBuf,
        #[arg(long = "with")]
        prior: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Re-estimate the level set on the boxes of a prior report.
    Levelset {
        config: PathBuf,
        #[arg(long = "with")]
        prior: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Write plot data for a report.
    Export {
        report: PathBuf,
        #[arg(long, default_value = "csv")]
        format: Format,
        /// Config of the run, needed for contour points and trajectories.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "out-dir", default_value = ".")]
        out_dir: PathBuf,
    },
}

fn load(path: &PathBuf, flags: &Flags) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    cfg.apply(&Overrides {
        workers: flags.workers,
        delta_min: flags.delta_min,
        m: flags.m,
        bound_method: flags.bound_method,
    });
    cfg.prepare()?;
    Ok(cfg)
}

fn emit(report: &RunReport, flags: &Flags) -> Result<ExitCode> {
    match &flags.out {
        Some(path) => report.save(path)?,
        None => println!("{}", report.to_json()),
    }
    if let Some(l) = &report.level {
        eprintln!("M_final={} verdict={:?} Lbar1={} Lbar2={} Lbar={}", report.m_final, report.verdict, l.lbar1, l.lbar2, l.lbar);
    } else {
        eprintln!("M_final={} verdict={:?}", report.m_final, report.verdict);
    }
    if let Some(h) = &report.hint {
        eprintln!("hint: {h}");
    }
    Ok(ExitCode::from(report.verdict.exit_code() as u8))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::VerifyDt { config, flags } => emit(&run_verify_dt(&load(&config, &flags)?)?, &flags),
        Command::VerifyCt { config, prior, flags } => {
            let cfg = load(&config, &flags)?;
            emit(&run_verify_ct(&cfg, &RunReport::load(&prior)?)?, &flags)
        }
        Command::Levelset { config, prior, flags } => {
            let cfg = load(&config, &flags)?;
            emit(&run_levelset(&cfg, &RunReport::load(&prior)?)?, &flags)
        }
        Command::Export { report, format, config, out_dir } => {
            let report = RunReport::load(&report)?;
            let cfg = config.map(|c| RunConfig::load(&c)).transpose()?;
            for path in export(&report, cfg.as_ref(), format, &out_dir)? {
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    // Exit code 2 is a verdict, so usage errors exit with 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
