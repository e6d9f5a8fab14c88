//! `dcqc`: command-line front end of the benchmark harness.
//!
//! All experiment state lives in the JSON config; flags only pick the
//! config, the output directory, the worker count and the accounting mode.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dcqc_core::harness::{self, ExperimentConfig, LandscapeSpec};
use dcqc_core::optim::Accounting;

#[derive(Debug, Parser)]
#[command(name = "dcqc", version, about = "Variational circuit and optimizer benchmarks on SK spin glasses")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Evaluation billing; overrides the config's `accounting`.
    #[arg(long, global = true, value_enum)]
    accounting: Option<AccountingArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AccountingArg {
    Paper,
    True,
}

impl From<AccountingArg> for Accounting {
    fn from(a: AccountingArg) -> Self {
        match a {
            AccountingArg::Paper => Accounting::Paper,
            AccountingArg::True => Accounting::True,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded SK instance as JSON. `--out` is the file, or a
    /// directory receiving `sk_n<N>_seed<S>.json`.
    GenInstance {
        #[arg(short, long)]
        n: usize,
        #[arg(short, long)]
        seed: u64,
    },
    /// One record per (optimizer, init), then summary.json and summary.csv.
    Run,
    /// `run` with shared inits enforced, plus traces.csv (mean and std
    /// energy against function evaluations).
    Compare,
    /// Final approximation ratios per qubit count and ansatz into
    /// scaling.json and scaling.csv.
    Scaling,
    /// PCA of recorded trajectories and the energy on the plane of the
    /// first two components.
    ///
    /// Writes landscape.csv (pc1,pc2,energy), trajectory.csv
    /// (iteration,pc1,pc2,energy; first row is θ₀, last row the final
    /// iterate) and pca.json with the explained-variance report.
    Landscape {
        /// Record files (JSON lines).
        #[arg(required = true)]
        records: Vec<PathBuf>,
        /// Grid points per axis; overrides the config.
        #[arg(long)]
        resolution: Option<usize>,
        /// Fit one PCA over all given records.
        #[arg(long)]
        pooled: bool,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let Some(path) = &cli.config else {
        bail!("--config is required for this command");
    };
    let mut cfg = ExperimentConfig::read(path).with_context(|| format!("reading config {}", path.display()))?;
    if let Some(a) = cli.accounting {
        cfg.accounting = a.into();
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn instance_path(out: Option<&Path>, n: usize, seed: u64) -> PathBuf {
    let name = format!("sk_n{n}_seed{seed}.json");
    match out {
        Some(p) if p.extension().is_some_and(|e| e == "json") => p.to_path_buf(),
        Some(dir) => dir.join(name),
        None => PathBuf::from(name),
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads: must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match &cli.command {
        Command::GenInstance { n, seed } => {
            let path = instance_path(cli.out.as_deref(), *n, *seed);
            let inst = harness::cmd_gen_instance(*n, *seed, &path)?;
            println!("{}: n = {}, {} couplings", path.display(), inst.n_qubits(), inst.couplings().len());
        }
        Command::Run | Command::Compare => {
            let cfg = load_config(cli)?;
            let out = out_dir(cli, Some(&cfg));
            let summary = match cli.command {
                Command::Run => harness::cmd_run(&cfg, &out)?,
                _ => harness::cmd_compare(&cfg, &out)?,
            };
            for s in &summary.optimizers {
                let evals = s.median_evaluations_to_threshold.map_or("-".to_string(), |v| v.to_string());
                let ratio = s.final_ratio.map_or(f64::NAN, |r| r.median);
                println!(
                    "{:<14} reached {}/{}  median evals to threshold {:>8}  median final ratio {:.4}",
                    s.label, s.reached, s.runs, evals, ratio
                );
            }
            println!("ranking: {}", summary.ranking.join(" > "));
            println!("wrote {}", out.display());
        }
        Command::Scaling => {
            let cfg = load_config(cli)?;
            let out = out_dir(cli, Some(&cfg));
            let summary = harness::cmd_scaling(&cfg, &out)?;
            for r in &summary.rows {
                println!(
                    "n = {:>2}  {:<14} m = {:>4}  ratio {:.4} ± {:.4}  best {:.4}{}",
                    r.n,
                    r.ansatz,
                    r.n_params,
                    r.final_ratio.mean,
                    r.final_ratio.std,
                    r.final_ratio.max,
                    if r.reference_exact { "" } else { "  (vs best sampled energy)" }
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Landscape {
            records,
            resolution,
            pooled,
        } => {
            let mut spec = match &cli.config {
                Some(_) => load_config(cli)?.landscape,
                None => LandscapeSpec::default(),
            };
            if let Some(r) = resolution {
                spec.resolution = *r;
            }
            spec.pooled |= *pooled;
            let out = out_dir(cli, None);
            for r in harness::cmd_landscape(records, spec, &out)? {
                println!(
                    "{} sample(s), top-2 explained variance {:.4}",
                    r.n_samples, r.explained_variance_top2
                );
            }
            println!("wrote {}", out.display());
        }
    }
    Ok(())
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
