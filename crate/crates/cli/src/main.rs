use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};
use tubehom_core::config::{LoadedConfig, RunConfig};
use tubehom_core::error::Error;
use tubehom_core::io::read_csv;
use tubehom_core::manifest::RunManifest;
use tubehom_core::run::{self, RunOptions, RunOutcome, Status, REPORT_FILE};

mod plot;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    /// Lowest eigenpairs of Δ(ε) with band labels.
    Spectrum,
    /// Homogenization error study over the ε and t grids.
    Sweep,
    /// All invariant suites.
    Verify,
    /// Effective potential under both conventions with the annulus verdict.
    Potential,
    /// Independence check of the boundary system.
    Slcheck,
    /// SVG plots of an existing report.csv.
    Report,
}

/// Heat semigroups and spectra of Dirichlet Laplacians on thin tubes around closed curves.
#[derive(Debug, Parser)]
#[command(name = "tubehom", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration, or a manifest.json whose config is rerun.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `output` of the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Matrix Market dump of Δ(ε) at the first spectrum ε.
    #[arg(long)]
    dump_operator: Option<PathBuf>,
    /// Restrict slcheck to one order k in 1..=8.
    #[arg(long)]
    k: Option<usize>,
}

const CONFIG_ERROR: u8 = 2;
const SOLVER_ERROR: u8 = 3;

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Curve(_) | Error::Grid(_) | Error::Unsupported(_) => CONFIG_ERROR,
        _ => SOLVER_ERROR,
    }
}

fn report(loaded: &LoadedConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let config = &loaded.config;
    let dir = run::out_dir(config, opts);
    let path = dir.join(REPORT_FILE);
    let (header, rows) = read_csv(&path).with_context(|| format!("reading {}; run `sweep` first", path.display()))?;
    let rows = plot::parse_rows(&header, &rows)?;
    let mut manifest = RunManifest::new("report", config, &loaded.input_hash);
    manifest.input_hashes.insert(REPORT_FILE.into(), tubehom_core::io::sha256_hex(std::fs::read(&path)?.as_slice()));
    let mut lines = Vec::new();
    for (column, title) in [
        ("l2_error", "L2 homogenization error"),
        ("sobolev2_error", "|||.|||_2 homogenization error"),
        ("sobolev4_error", "|||.|||_4 homogenization error"),
    ] {
        let svg = plot::error_plot(&rows, column, title)?;
        let name = format!("plots/{column}.svg");
        manifest.emit(&dir, &name, svg.as_bytes())?;
        lines.push(format!("wrote {}", dir.join(&name).display()));
    }
    manifest.passed = true;
    manifest.write(&dir)?;
    Ok(RunOutcome { status: Status::Pass, lines, out_dir: dir, manifest })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let loaded = match RunConfig::load(&cli.config) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let opts = RunOptions { out: cli.out, dump_operator: cli.dump_operator, k: cli.k };
    if let Some(k) = opts.k {
        if !(1..=tubehom_core::theory::MAX_ORDER).contains(&k) {
            eprintln!("error: --k must be in 1..={}", tubehom_core::theory::MAX_ORDER);
            return ExitCode::from(CONFIG_ERROR);
        }
    }
    let result = match cli.command {
        Command::Spectrum => run::run_spectrum(&loaded, &opts).map_err(anyhow::Error::from),
        Command::Sweep => run::run_sweep(&loaded, &opts).map_err(anyhow::Error::from),
        Command::Verify => run::run_verify(&loaded, &opts).map_err(anyhow::Error::from),
        Command::Potential => run::run_potential(&loaded, &opts).map_err(anyhow::Error::from),
        Command::Slcheck => run::run_slcheck(&loaded, &opts).map_err(anyhow::Error::from),
        Command::Report => report(&loaded, &opts),
    };
    match result {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            println!("outputs in {} ({})", outcome.out_dir.display(), if outcome.status == Status::Pass { "PASS" } else { "FAIL" });
            ExitCode::from(outcome.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.downcast_ref::<Error>().map(error_code).unwrap_or(SOLVER_ERROR))
        }
    }
}
