//! `rootclass` command-line driver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rootclass::features::VelocityConvention;
use rootclass::pipeline::{self, RunConfig};
use rootclass::{Error, ErrorKind};

#[derive(Debug, Parser)]
#[command(name = "rootclass", version, about = "Root-growth time-series classification")]
struct Cli {
    /// Run configuration file (key = value lines); defaults apply without one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the top-level seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Use the sum form of the velocity definition instead of the difference.
    #[arg(long, global = true)]
    paper_literal_sum: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the synthetic dataset and its manifest.
    Generate,
    /// Run the sliding-window comparison and write results and table.
    Run,
    /// Render the table of an existing results file.
    Report {
        results: PathBuf,
        /// Print CSV instead of the aligned text table.
        #[arg(long)]
        csv: bool,
    },
    /// Fit PCA on all frames of the dataset and save the model.
    PcaFit,
    /// Fit PCA on all frames and write the assembled feature rows as CSV.
    FeaturesExport,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numeric => 3,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    if cli.paper_literal_sum {
        cfg.velocity = VelocityConvention::PaperLiteralSum;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    if let Command::Report { results, csv } = &cli.command {
        let (text, table_csv) = pipeline::cmd_report(results)?;
        print!("{}", if *csv { table_csv } else { text });
        return Ok(());
    }
    let cfg = load_config(cli).map_err(|e| e.in_stage("config"))?;
    match cli.command {
        Command::Generate => {
            let summary = pipeline::cmd_generate(&cfg)?;
            println!("{summary}");
        }
        Command::Run => {
            let results = pipeline::cmd_run(&cfg)?;
            print!("{}", results.render_table());
            println!("results: {}", cfg.out.join(pipeline::RESULTS_FILE).display());
        }
        Command::PcaFit => {
            let (pca, path) = pipeline::cmd_pca_fit(&cfg)?;
            let total: f64 = pca.eigenvalues().iter().sum();
            println!("wrote {} ({} components, eigenvalue sum {total})", path.display(), pca.n_components());
        }
        Command::FeaturesExport => {
            let path = pipeline::cmd_features_export(&cfg)?;
            println!("wrote {}", path.display());
        }
        Command::Report { .. } => unreachable!("handled above"),
    }
    Ok(())
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
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
