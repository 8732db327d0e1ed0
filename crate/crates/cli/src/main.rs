use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use negamp::config::{DatasetSource, TrainConfig};
use negamp::graph::{self, DatasetPaths};
use negamp::harness;
use negamp::report;
use negamp::{Error, Result, Variant};

#[derive(Parser)]
#[command(
    name = "negamp",
    version,
    about = "Graph contrastive learning with cumulative negative sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; the built-in desk-scale SBM preset when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed (the SBM seed for `gen-synth`).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Record real per-epoch wall-clock time in `epochs.csv`.
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train one encoder and evaluate it.
    Train(Common),
    /// One run per maximum negative percentage.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0,10,20,30,40,50,60,70,80,90,100"
        )]
        kappa_max: Vec<u32>,
    },
    /// One run per negative selection variant.
    Variants {
        #[command(flatten)]
        common: Common,
        #[arg(
            long = "variant",
            value_delimiter = ',',
            default_value = "css,random,easy,medium,hard"
        )]
        variants: Vec<String>,
    },
    /// Write the configured synthetic dataset as edges/features/labels files.
    GenSynth(Common),
}

fn load_config(common: &Common) -> Result<TrainConfig> {
    let mut config = match &common.config {
        Some(path) => TrainConfig::load(path)?,
        None => TrainConfig::sbm_desk(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    config.record_timing |= common.timing;
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(common) => {
            let config = load_config(&common)?;
            let run = harness::train::<f64>(&config)?;
            report::write_run(&common.out, &run.result, Some(&run.params))?;
            println!(
                "micro-F1 {:.4} ± {:.4} (final kappa {})",
                run.result.eval.mean_f1, run.result.eval.std_f1, run.result.final_kappa
            );
        }
        Command::Sweep { common, kappa_max } => {
            let config = load_config(&common)?;
            let experiment = harness::sweep_percentages::<f64>(&config, &kappa_max)?;
            report::write_experiment(&common.out, &experiment)?;
            print!("{}", report::table_csv(&experiment.rows));
        }
        Command::Variants { common, variants } => {
            let config = load_config(&common)?;
            let variants = variants
                .iter()
                .map(|v| v.parse::<Variant>())
                .collect::<Result<Vec<_>>>()?;
            let experiment = harness::compare_variants::<f64>(&config, &variants)?;
            report::write_experiment(&common.out, &experiment)?;
            print!("{}", report::table_csv(&experiment.rows));
        }
        Command::GenSynth(common) => {
            let config = load_config(&common)?;
            let DatasetSource::Sbm(mut spec) = config.dataset else {
                return Err(Error::Config("gen-synth needs an `sbm` dataset".into()));
            };
            if let Some(seed) = common.seed {
                spec.seed = seed;
            }
            let g: negamp::Graph = graph::generate_sbm(&spec)?;
            std::fs::create_dir_all(&common.out).map_err(|e| Error::Output {
                path: common.out.clone(),
                source: e,
            })?;
            graph::write_dataset(&g, &DatasetPaths::in_dir(&common.out))?;
            println!("{} nodes, {} edges", g.num_nodes(), g.num_edges());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
