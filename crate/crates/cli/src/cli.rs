//! Command-line front end.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use crate::cache::ModelCache;
use crate::config::{ExperimentConfig, Suites};
use crate::report::RunReport;
use crate::runner::{holder_table, write_outputs, Runner};

pub const DEFAULT_CACHE_DIR: &str = ".kreinlab-cache";

#[derive(Debug, Parser)]
#[command(name = "kreinlab", version, about = "Discrete Krein formulas, DtN maps and M-functions on planar domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Single resolution `1/h`, replacing the configured ladder.
    #[arg(long, global = true)]
    pub resolution: Option<f64>,
    /// Output directory, replacing `run.out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent λ points.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for the random probes, replacing `run.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Model cache directory.
    #[arg(long, global = true, env = "KREINLAB_CACHE", default_value = DEFAULT_CACHE_DIR)]
    pub cache_dir: PathBuf,
    /// Always reassemble and never write the cache.
    #[arg(long, global = true)]
    pub no_cache: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every suite selected in the configuration.
    Run,
    /// Assemble (or load) the models of the ladder and check the Green identity.
    Assemble,
    /// Steklov-type eigenvalues of the DtN map across the ladder.
    Dtn,
    /// M-function `-(C - P^λ)^{-1}` at the configured λ.
    Mfunction,
    /// Kreĭn resolvent formula residuals at the configured λ.
    KreinVerify,
    /// Eigenvalue scan along the configured segment.
    Spectrum,
    /// Kreĭn formula for a subspace condition on low Fourier modes.
    Subspace,
    /// Decay fit along the configured ray.
    Agmon,
    /// Sampled Hölder norms of the chart graphs.
    HolderNorm,
    /// Inspect or empty the model cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum CacheAction {
    Ls,
    Clear,
}

/// Parses arguments, runs, and returns the process exit code: 0 when every
/// selected suite meets its thresholds, 1 when one does not, 2 on errors.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn only(f: impl FnOnce(&mut Suites)) -> Suites {
    let mut s = Suites::default();
    f(&mut s);
    s
}

pub fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_ref().context("--config is required for this command")?;
    let mut cfg = ExperimentConfig::from_path(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    if let Some(r) = cli.resolution {
        cfg = cfg.with_resolution(r)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

/// Runs the command; `Ok(pass)` reports whether the thresholds were met.
pub fn execute(cli: &Cli) -> Result<bool> {
    if let Some(k) = cli.threads {
        if k == 0 {
            bail!("--threads must be at least 1");
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let cache = ModelCache::new(&cli.cache_dir);
    if let Command::Cache { action } = &cli.command {
        match action {
            CacheAction::Ls => {
                for e in cache.list()? {
                    match &e.header {
                        Ok(h) => println!("{}  {:>10} bytes  v{}  N={} m={}  {}", e.key, e.bytes, h.version, h.n, h.m, h.mesh_id),
                        Err(why) => println!("{}  {:>10} bytes  unreadable: {why}", e.key, e.bytes),
                    }
                }
            }
            CacheAction::Clear => println!("removed {} entries", cache.clear()?),
        }
        return Ok(true);
    }
    let cfg = load_config(cli)?;
    let suites = match cli.command {
        Command::Run => cfg.suites.clone(),
        Command::Assemble => only(|s| s.green = true),
        Command::Dtn => only(|s| s.dtn = true),
        Command::Mfunction => only(|s| s.mfunction = true),
        Command::KreinVerify => only(|s| s.krein = true),
        Command::Spectrum => only(|s| s.spectrum = true),
        Command::Subspace => only(|s| s.subspace = true),
        Command::Agmon => only(|s| s.ray = true),
        Command::HolderNorm => {
            let dom = cfg.domain_spec()?;
            let s = holder_table(&cfg, &dom)?;
            std::fs::create_dir_all(&cfg.out)?;
            let path = cfg.out.join("holder.csv");
            s.table.write_csv(&path)?;
            print_suite_line(&s.name, s.pass, &s.criterion);
            println!("wrote {}", path.display());
            return Ok(s.pass);
        }
        Command::Cache { .. } => unreachable!(),
    };
    check_inputs(&cfg, &suites)?;
    let out = cfg.out.clone();
    let mut runner = Runner::new(cfg, (!cli.no_cache).then_some(cache))?;
    if matches!(cli.command, Command::Assemble) {
        let rungs: Vec<f64> = runner.cfg.resolution.iter().map(|r| 1.0 / r).collect();
        for h in rungs {
            runner.model(h)?;
        }
    }
    let report = runner.run(&suites)?;
    let files = write_outputs(&report, &out)?;
    print_report(&report);
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(report.pass)
}

fn check_inputs(cfg: &ExperimentConfig, s: &Suites) -> Result<()> {
    if (s.krein || s.mfunction || s.subspace || s.identities) && cfg.lambdas.is_empty() {
        bail!("this command needs lambda.list in the configuration");
    }
    if (s.spectrum || s.kernel) && cfg.scan.is_none() {
        bail!("this command needs lambda.scan_from and lambda.scan_to");
    }
    if s.ray && cfg.ray.is_none() {
        bail!("this command needs lambda.ray_mu_min and lambda.ray_mu_max");
    }
    Ok(())
}

fn print_suite_line(name: &str, pass: bool, criterion: &str) {
    println!("{:<12} {}  ({criterion})", name, if pass { "PASS" } else { "FAIL" });
}

pub fn print_report(r: &RunReport) {
    for m in &r.mesh {
        println!(
            "mesh {}  h={}  shift={}{}",
            m.id,
            m.h,
            m.shift,
            if m.from_cache { "  (cached)" } else { "" }
        );
    }
    for s in &r.suites {
        print_suite_line(&s.name, s.pass, &s.criterion);
        for (k, v) in &s.summary {
            println!("    {k} = {}", serde_json::to_string(v).unwrap_or_default());
        }
    }
    println!("overall      {}", if r.pass { "PASS" } else { "FAIL" });
}
