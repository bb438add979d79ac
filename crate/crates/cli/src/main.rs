use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use mapelites::config::{load_config, Loaded};
use mapelites::experiment::{
    output_root, read_archive_file, read_run_archive, read_run_lineage, read_run_summary, report, run_experiment,
    run_single, OUTPUT_ROOT_ENV,
};
use mapelites::heatmap::{parse_slice, Heatmap};
use mapelites::lineage::{export_lineage_arrows, export_lineage_trace, write_arrows_csv, write_trace_csv};

#[derive(Parser)]
#[command(name = "mapelites", version, about = "Illuminate search spaces with MAP-Elites")]
struct Cli {
    /// Default directory for run and experiment output.
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV, value_name = "DIR")]
    output_root: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its run directory.
    Run {
        config: PathBuf,
        /// Run directory (default: the config's `output`, else <output-root>/<config name>).
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Override the configured evaluation thread count.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run every treatment and replicate of a manifest, then write the report.
    Experiment {
        manifest: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Render an archive as a CSV grid or a greyscale PGM image.
    Heatmap(HeatmapArgs),
    /// Export parent-to-elite arrows or the ancestry of one elite.
    Lineage(LineageArgs),
    /// Recompute and print the statistics of an experiment directory.
    Report { experiment_dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Pgm,
}

#[derive(Args)]
struct HeatmapArgs {
    /// Run directory or archive CSV file.
    archive: PathBuf,
    #[arg(long, value_enum)]
    format: Format,
    /// Fix dimension d at bin i; repeat for each dimension beyond two.
    #[arg(long, value_name = "d=i")]
    slice: Vec<String>,
    /// Write to a file instead of standard output.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LineageArgs {
    run_dir: PathBuf,
    /// Arrows from each final elite's parent (the default).
    #[arg(long, conflicts_with = "trace")]
    arrows: bool,
    /// Ancestor chain of the elite with this id.
    #[arg(long, value_name = "ID")]
    trace: Option<u64>,
    /// Export arrows for a random sample of this many elites.
    #[arg(long, value_name = "N", conflicts_with = "trace")]
    sample: Option<usize>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn run(cli_root: &Path, config: &Path, out: Option<PathBuf>, threads: Option<usize>) -> Result<()> {
    let mut config_value = match load_config(config).with_context(|| format!("loading {}", config.display()))? {
        Loaded::Run(c) => *c,
        Loaded::Experiment(_) => {
            return Err(mapelites::Error::config(format!(
                "{} is an experiment manifest; use `mapelites experiment`",
                config.display()
            ))
            .into())
        }
    };
    if let Some(t) = threads {
        config_value.threads = t;
    }
    let dir = out
        .or_else(|| config_value.output.clone())
        .unwrap_or_else(|| cli_root.join(format!("{}-seed{}", stem(config), config_value.seed)));
    info!("running {} into {}", config.display(), dir.display());
    let result = run_single(&config_value, &dir)?;
    let s = &result.summary;
    println!(
        "{}: {} evaluations, {} cells filled, best fitness {}",
        dir.display(),
        s.evaluations,
        s.filled,
        s.best_fitness.map_or("-".into(), |f| f.to_string())
    );
    Ok(())
}

fn experiment(cli_root: &Path, manifest: &Path, out: Option<PathBuf>) -> Result<()> {
    let m = match load_config(manifest).with_context(|| format!("loading {}", manifest.display()))? {
        Loaded::Experiment(m) => m,
        Loaded::Run(_) => {
            return Err(mapelites::Error::config(format!(
                "{} has no [[treatment]] tables; use `mapelites run`",
                manifest.display()
            ))
            .into())
        }
    };
    let dir = out
        .or_else(|| m.output.clone())
        .unwrap_or_else(|| cli_root.join(&m.name));
    info!("experiment `{}` with {} runs into {}", m.name, m.run_count(), dir.display());
    let outcome = run_experiment(&m, &dir)?;
    print!("{}", outcome.report.text);
    Ok(())
}

fn heatmap(args: HeatmapArgs) -> Result<()> {
    let archive = if args.archive.is_dir() {
        read_run_archive(&args.archive)?
    } else {
        read_archive_file(&args.archive)?
    };
    let slice = args
        .slice
        .iter()
        .map(|s| parse_slice(s))
        .collect::<mapelites::Result<Vec<_>>>()?;
    let map = Heatmap::from_archive(&archive, &slice)?;
    let mut w = sink(args.out.as_deref())?;
    match args.format {
        Format::Csv => map.write_csv(&mut w)?,
        Format::Pgm => map.write_pgm(&mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn lineage(args: LineageArgs) -> Result<()> {
    let log = read_run_lineage(&args.run_dir)?;
    if log.lineage.is_empty() {
        bail!(mapelites::Error::NotFound(format!(
            "lineage records in {} (only MAP-Elites runs record parents)",
            args.run_dir.display()
        )));
    }
    let archive = read_run_archive(&args.run_dir)?;
    let dims = archive.space().dims();
    let mut w = sink(args.out.as_deref())?;
    if let Some(id) = args.trace {
        let chain = export_lineage_trace(&log, id)?;
        write_trace_csv(&mut w, id, &chain, dims)?;
    } else {
        let seed = read_run_summary(&args.run_dir)?.seed;
        let arrows = export_lineage_arrows(&log, &archive, args.sample, seed)?;
        write_arrows_csv(&mut w, &arrows.arrows, dims)?;
        info!("{} elites sampled, {} without a parent", arrows.sampled, arrows.omitted);
    }
    w.flush()?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    let root = cli.output_root.unwrap_or_else(output_root);
    match cli.command {
        Command::Run { config, out, threads } => run(&root, &config, out, threads),
        Command::Experiment { manifest, out } => experiment(&root, &manifest, out),
        Command::Heatmap(args) => heatmap(args),
        Command::Lineage(args) => lineage(args),
        Command::Report { experiment_dir } => {
            let r = report(&experiment_dir)?;
            print!("{}", r.text);
            Ok(())
        }
    }
}

/// 2 for configuration problems, 3 for everything that fails while running.
fn exit_code(err: &anyhow::Error) -> u8 {
    let config = err.chain().any(|cause| {
        cause
            .downcast_ref::<mapelites::Error>()
            .is_some_and(mapelites::Error::is_config)
    });
    if config {
        2
    } else {
        3
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
