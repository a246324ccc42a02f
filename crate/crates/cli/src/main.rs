//! `dramn`: generate scenarios, train, evaluate and inspect the stability classifier.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use dramn::config::RunConfig;
use dramn::error::ErrorClass;
use dramn::pipeline::{Pipeline, RunOptions, SweepRow};
use dramn::DramnError;

#[derive(Parser)]
#[command(name = "dramn", version, about = "Dynamic-graph stability forecasting pipeline")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; `demo` selects the bundled demo config.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<String>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Run sequentially so every artifact is byte-reproducible.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Keep scenario files that already exist.
    #[arg(long, global = true)]
    skip_existing: bool,
    /// Reuse valid adjacency cache files when training.
    #[arg(long, global = true)]
    resume: bool,
    /// Output root, overriding `paths.root`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize and label the scenario store.
    Generate,
    /// Build adjacency sequences and train the classifier.
    Train,
    /// Score the trained model on the test and generalization sets.
    Evaluate {
        /// Retrain and score at every configured window length.
        #[arg(long)]
        window_sweep: bool,
        /// Retrain on the top-k ranked channels for every configured k.
        #[arg(long)]
        node_subsets: bool,
    },
    /// Rank channels by node strength.
    Select,
    /// Compare clean and noise-augmented training across SNRs.
    Noise,
    /// Train and score the model variants side by side.
    Ablate,
    /// Time adjacency construction and inference.
    Bench,
}

fn load_config(c: &Common) -> Result<RunConfig, DramnError> {
    let mut cfg = match c.config.as_deref() {
        None => RunConfig::default(),
        Some("demo") => RunConfig::demo(),
        Some(path) => RunConfig::load(path.as_ref())?,
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(out) = &c.out {
        cfg.paths.root = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_sweep(title: &str, rows: &[SweepRow]) {
    println!("{title}");
    for r in rows {
        let auroc = r.metrics.auroc.map_or_else(|| "NA".to_string(), |a| format!("{a:.4}"));
        println!(
            "  {:>10}  acc {:.4}  f1 {:.4}  recall {:.4}  auroc {auroc}{}",
            r.key,
            r.metrics.accuracy,
            r.metrics.f1,
            r.metrics.recall,
            if r.best_f1 { "  <- best F1" } else { "" }
        );
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let c = &cli.common;
    let cfg = load_config(c)?;
    let opts = RunOptions {
        deterministic: c.deterministic,
        skip_existing: c.skip_existing,
        resume: c.resume,
    };
    let workers = if c.deterministic { Some(1) } else { c.workers };
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    let p = Pipeline::new(cfg, opts)?;
    let reports = p.cfg.paths.reports();
    match &cli.command {
        Command::Generate => {
            let s = p.generate()?;
            println!("{} scenarios ({} written, {} reused)", s.scenarios, s.written, s.reused);
            print!("{}", s.balance_tsv());
            println!("manifest: {}", s.manifest.display());
        }
        Command::Train => {
            let s = p.train()?;
            println!(
                "samples train/val/test {}/{}/{}; cache hits {} misses {} rebuilt {}",
                s.n_train, s.n_val, s.n_test, s.cache.hits, s.cache.misses, s.cache.rebuilt
            );
            println!("best epoch {} of {}; checkpoint {}", s.best_epoch, s.epochs_run, s.checkpoint.display());
        }
        Command::Evaluate { window_sweep, node_subsets } => {
            let s = p.evaluate(*window_sweep, *node_subsets)?;
            print_sweep(
                "held-out sets",
                &std::iter::once(("test", &s.test))
                    .chain(s.generalization.as_ref().map(|g| ("generalization", g)))
                    .map(|(k, m)| SweepRow {
                        key: k.into(),
                        metrics: m.clone(),
                        best_f1: false,
                    })
                    .collect::<Vec<_>>(),
            );
            if *window_sweep {
                print_sweep("window sweep (ms)", &s.window_sweep);
            }
            if *node_subsets {
                print_sweep("channel subsets", &s.node_subsets);
            }
        }
        Command::Select => {
            let s = p.select()?;
            println!("selected: {}", s.selected.join(" "));
            println!("ranking:  {}", s.ranking.join(" "));
        }
        Command::Noise => {
            for r in p.noise()? {
                let auroc = r.metrics.auroc.map_or_else(|| "NA".to_string(), |a| format!("{a:.4}"));
                println!("{:<16} {:>5} dB  f1 {:.4}  auroc {auroc}", r.model, r.snr_db, r.metrics.f1);
            }
        }
        Command::Ablate => {
            for r in p.ablate()? {
                let auroc = r.metrics.auroc.map_or_else(|| "NA".to_string(), |a| format!("{a:.4}"));
                println!(
                    "{:<16} auroc {auroc}  f1 {:.4}  best epoch {}{}",
                    r.name,
                    r.metrics.f1,
                    r.best_epoch,
                    if r.non_convergent { "  non-convergent" } else { "" }
                );
            }
        }
        Command::Bench => {
            println!("n_channels  stage       mean_ms   p95_ms");
            for r in p.bench()? {
                println!("{:>10}  {:<10} {:>8.3} {:>8.3}", r.n_channels, r.stage, r.mean_ms, r.p95_ms);
            }
        }
    }
    println!("reports: {}", reports.display());
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<DramnError>().map(DramnError::class) {
        Some(ErrorClass::Config) => 2,
        Some(ErrorClass::Numerical) => 4,
        Some(ErrorClass::Data) | None => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
