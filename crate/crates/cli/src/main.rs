use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fedisim::experiment::{run_experiment, Experiment, ExperimentSpec};
use fedisim::ingest::{export_bundle, load_bundle, DatasetBundle};
use fedisim::synth::SynthConfig;
use fedisim::uptime::{DEFAULT_AS_OUTAGE_MIN_INSTANCES, DEFAULT_PROBE_INTERVAL};

/// Simulate and analyse federated social networks.
#[derive(Parser)]
#[command(name = "fedisim", version)]
struct Cli {
    /// Seed for every random choice; overrides any seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for output files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// TOML config: a synth config for `generate` and `report`, an
    /// experiment spec for `simulate`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset bundle.
    Generate,
    /// Validate a dataset bundle and write it back out normalised.
    Ingest {
        /// Directory holding the bundle CSV files.
        data_dir: PathBuf,
        /// Seconds between uptime probes.
        #[arg(long, default_value_t = DEFAULT_PROBE_INTERVAL)]
        probe_interval: i64,
    },
    /// Run the experiment described by --config.
    Simulate {
        /// Use this bundle instead of the spec's data source.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Write descriptive reports for a bundle or a synthetic ecosystem.
    Report {
        #[arg(value_enum)]
        kind: ReportKind,
        /// Bundle to report on; without it a synthetic ecosystem is used.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Minimum instances for an AS to count in AS-wide outage detection.
        #[arg(long, default_value_t = DEFAULT_AS_OUTAGE_MIN_INSTANCES)]
        min_instances: usize,
        /// Seconds between uptime probes.
        #[arg(long, default_value_t = DEFAULT_PROBE_INTERVAL)]
        probe_interval: i64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    Stats,
    Uptime,
}

fn synth_from(cli: &Cli) -> Result<Option<SynthConfig>> {
    cli.config
        .as_deref()
        .map(|p| SynthConfig::from_path(p).with_context(|| format!("reading {}", p.display())))
        .transpose()
}

fn seed_or(cli: &Cli, fallback: u64) -> u64 {
    cli.seed.unwrap_or(fallback)
}

fn run_spec(spec: &ExperimentSpec, out_dir: &Path) -> Result<()> {
    let files = run_experiment(spec, out_dir)
        .with_context(|| format!("running {}", spec.experiment))?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate => {
            let synth = synth_from(cli)?;
            let seed = seed_or(cli, synth.as_ref().map_or(0, |c| c.seed));
            let mut spec = ExperimentSpec::new(Experiment::Generate, seed);
            spec.synth = synth;
            run_spec(&spec, &cli.out_dir)
        }
        Command::Ingest {
            data_dir,
            probe_interval,
        } => {
            let mut bundle = DatasetBundle::from_dir(data_dir);
            bundle.probe_interval = *probe_interval;
            let loaded = load_bundle(&bundle)?;
            let eco = &loaded.ecosystem;
            println!(
                "{} ASes, {} instances, {} users, {} follows, {} toots",
                eco.ases().len(),
                eco.instances().len(),
                eco.users().len(),
                eco.follows().len(),
                eco.toots().len()
            );
            if let Some(tl) = &loaded.timeline {
                println!("{} uptime probes from {}", tl.probe_count(), tl.start());
            }
            export_bundle(
                &cli.out_dir,
                eco,
                loaded.timeline.as_ref(),
                loaded.logins.as_ref(),
            )?;
            println!("normalised bundle written to {}", cli.out_dir.display());
            Ok(())
        }
        Command::Simulate { data_dir } => {
            let Some(path) = &cli.config else {
                bail!("simulate needs --config pointing at an experiment spec");
            };
            let mut spec = ExperimentSpec::from_path(path)
                .with_context(|| format!("reading {}", path.display()))?;
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            if let Some(dir) = data_dir {
                spec.data_dir = Some(dir.clone());
                spec.synth = None;
            }
            run_spec(&spec, &cli.out_dir)
        }
        Command::Report {
            kind,
            data_dir,
            min_instances,
            probe_interval,
        } => {
            let experiment = match kind {
                ReportKind::Stats => Experiment::StatsReport,
                ReportKind::Uptime => Experiment::UptimeReport {
                    min_instances: *min_instances,
                    probe_interval: *probe_interval,
                },
            };
            let synth = if data_dir.is_some() { None } else { synth_from(cli)? };
            let seed = seed_or(cli, synth.as_ref().map_or(0, |c| c.seed));
            let mut spec = ExperimentSpec::new(experiment, seed);
            spec.data_dir = data_dir.clone();
            spec.synth = synth;
            run_spec(&spec, &cli.out_dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
