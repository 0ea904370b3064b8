use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use kl_twist::config::parse_complex;
use kl_twist::{run, RunConfig, RunError, Suite};

#[derive(Parser, Debug)]
#[command(name = "kl-twist", version, about = "Verification suites for the KZ associator and its twist")]
struct Cli {
    #[arg(value_enum)]
    suite: Suite,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Deformation parameter as RE,IM.
    #[arg(long, allow_hyphen_values = true)]
    hbar: Option<String>,
    /// Algebra tag (A1, A2, B2).
    #[arg(long)]
    algebra: Option<String>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a CSV summary here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn load(cli: &Cli) -> Result<RunConfig, RunError> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| RunError::config(format!("cannot read {}: {e}", p.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(h) = &cli.hbar {
        cfg.hbar = Some(parse_complex(h)?);
    }
    if let Some(a) = &cli.algebra {
        cfg.algebra = Some(a.clone());
    }
    if let Some(s) = cli.seed {
        cfg.rng_seed = Some(s);
    }
    Ok(cfg)
}

fn write(path: &PathBuf, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|e| RunError::config(format!("cannot write {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|cfg| run(cli.suite, &cfg)).and_then(|report| {
        if let Some(p) = &cli.out {
            write(p, &report.to_json())?;
        }
        if let Some(p) = &cli.csv {
            write(p, &report.to_csv())?;
        }
        Ok(report)
    });
    match result {
        Ok(report) => {
            print!("{}", report.summary());
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
