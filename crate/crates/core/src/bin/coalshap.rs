use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coalshap::pipeline::{
    exit_code, run_cluster, run_report, run_shapley, run_stats, validate, ClusterOptions, LoadedManifest, PipelineError,
    RunContext, RunRecord, ShapleyModeName, ShapleyOptions, StatsModeSelection, StatsOptions,
};
use coalshap::shapley::AblationStrategy;

#[derive(Parser)]
#[command(name = "coalshap", version, about = "Channel-level Shapley explanations for multi-channel segmentation models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Study manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Run directory receiving stage outputs.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check the manifest, every subject's volumes and every model.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
        /// Also append a run record to this run directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the adapter handshake.
        #[arg(long)]
        no_probe: bool,
    },
    /// Compute per-subject contrast Shapley vectors.
    Shapley {
        #[command(flatten)]
        common: Common,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// exact or mc; overrides the manifest.
        #[arg(long)]
        mode: Option<ShapleyModeName>,
        /// Permutations for mc mode.
        #[arg(long)]
        permutations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// zero, mean, const:<v> or noise:<seed>:<sigma>.
        #[arg(long)]
        strategy: Option<AblationStrategy>,
        #[arg(long)]
        resume: bool,
        /// Largest tolerated fraction of failed subjects.
        #[arg(long, default_value_t = 0.0)]
        fail_threshold: f64,
        /// Prediction cache root; defaults to $COALSHAP_CACHE_DIR or <out>/cache.
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long, hide = true)]
        stop_after: Option<usize>,
    },
    /// Run the consistency battery over the Shapley table.
    Stats {
        #[command(flatten)]
        common: Common,
        /// across_folds, across_models or both.
        #[arg(long, default_value = "across_folds")]
        mode: StatsModeSelection,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        ci_level: Option<f64>,
    },
    /// Cluster pooled subject vectors per metric and model.
    Cluster {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Inclusive k range such as 2:6.
        #[arg(long, value_parser = parse_range)]
        sweep: Option<[usize; 2]>,
    },
    /// Consolidate all stage outputs into report.json and report.md.
    Report {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_range(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo = a.parse().map_err(|e| format!("{a}: {e}"))?;
    let hi = b.parse().map_err(|e| format!("{b}: {e}"))?;
    Ok([lo, hi])
}

fn recorded<T>(
    common: &Common,
    name: &str,
    run: impl FnOnce(&RunContext) -> Result<T, PipelineError>,
) -> Result<T, PipelineError> {
    let ctx = RunContext::new(&common.manifest, &common.out)?;
    let record = RunRecord::start(&ctx, name);
    let result = run(&ctx);
    if let Err(e) = record.finish(&ctx, &result) {
        log::warn!("could not append run record: {e}");
    }
    result
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Validate { manifest, out, no_probe } => {
            let lm = LoadedManifest::load(&manifest)?;
            let report = validate(&lm, !no_probe);
            print!("{report}");
            let result = if report.is_ok() { Ok(()) } else { Err(PipelineError::Validation(report)) };
            if let Some(out) = out {
                let ctx = RunContext { manifest: lm, out };
                RunRecord::start(&ctx, "validate").finish(&ctx, &result)?;
            }
            result
        }
        Command::Shapley {
            common,
            jobs,
            mode,
            permutations,
            seed,
            strategy,
            resume,
            fail_threshold,
            cache_dir,
            stop_after,
        } => {
            let opts = ShapleyOptions {
                jobs,
                resume,
                fail_threshold,
                strategy,
                seed,
                mode,
                permutations,
                cache_dir,
                stop_after,
            };
            let s = recorded(&common, "shapley", |ctx| run_shapley(ctx, &opts))?;
            println!(
                "{} subject computations: {} computed, {} reused, {} failed; {} adapter calls; {} matrices",
                s.total,
                s.computed,
                s.reused,
                s.failed(),
                s.adapter_calls,
                s.matrices
            );
            Ok(())
        }
        Command::Stats { common, mode, alpha, ci_level } => {
            let opts = StatsOptions { mode, alpha, ci_level };
            let s = recorded(&common, "stats", |ctx| run_stats(ctx, &opts))?;
            print!("{}", s.text);
            Ok(())
        }
        Command::Cluster { common, k, seed, sweep } => {
            let opts = ClusterOptions { k, seed, sweep };
            let s = recorded(&common, "cluster", |ctx| run_cluster(ctx, &opts))?;
            for r in &s.runs {
                let sil = r.silhouette.map_or("n/a".into(), |v| format!("{v:.4}"));
                println!("{} / {}: {} points, k = {}, silhouette {sil}", r.metric, r.model, r.points, r.k);
            }
            for skipped in &s.skipped {
                println!("skipped {skipped}");
            }
            Ok(())
        }
        Command::Report { common } => {
            let s = recorded(&common, "report", run_report)?;
            println!("{}\n{}", s.json_path.display(), s.markdown_path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit_code::OK as u8),
        Err(e) => {
            if !matches!(e, PipelineError::Validation(_)) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
