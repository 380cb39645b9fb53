//! Command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nlab_core::strategies::StrategySpec;

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::files::{save_idx, write};
use crate::grid::grid;
use crate::metrics::emit_all;
use crate::probe::warmup_probe;
use crate::run::{build_data, inject_noise, run};

#[derive(Debug, Parser)]
#[command(name = "nlab", version, about = "Noisy-label augmentation experiments on a desk-sized budget")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train every configured seed and write per-epoch metrics.
    Run(CommonArgs),
    /// Warm up with stochastic strong augmentation and export loss histograms.
    Probe(ProbeArgs),
    /// Sweep strategies x noise rates, one directory per cell.
    Grid(GridArgs),
    /// Export the glyph dataset (noisy train labels included) as IDX files.
    GenData(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// INI configuration file; defaults apply to anything it leaves out.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seeds to run, comma separated; replaces train.seeds.
    #[arg(long, value_delimiter = ',')]
    pub seed: Vec<u64>,
    /// Output directory; replaces output.dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Strategy name such as dividemix-WS-WAW.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub noise_rate: Option<f64>,
    /// symmetric or asymmetric.
    #[arg(long)]
    pub noise_kind: Option<String>,
    /// Any configuration key, as section.key=value. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Strong-augmentation probabilities, comma separated; replaces probe.p_strong.
    #[arg(long, value_delimiter = ',')]
    pub p_strong: Vec<f64>,
    /// Probe epoch; replaces probe.epoch.
    #[arg(long)]
    pub epoch: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub strategies: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub noise_rates: Vec<f64>,
}

impl CommonArgs {
    /// The configuration file (or defaults) with every flag applied.
    pub fn resolve(&self) -> LabResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        for o in &self.overrides {
            cfg.apply_override(o)?;
        }
        if !self.seed.is_empty() {
            cfg.seeds = self.seed.clone();
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if let Some(s) = &self.strategy {
            cfg.set("train", "strategy", s)?;
        }
        if let Some(r) = self.noise_rate {
            cfg.noise.rate = r;
        }
        if let Some(k) = &self.noise_kind {
            cfg.noise.kind = k.parse()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn cmd_run(cfg: &ExperimentConfig) -> LabResult<()> {
    let results = run(cfg)?;
    let agg = emit_all(&results, cfg, &cfg.output.dir)?;
    for r in &results {
        println!(
            "seed {}: best {:.2} last {:.2} ({:.1}s)",
            r.seed, r.best, r.last, r.wall_time_s
        );
    }
    println!(
        "{}: best {:.2} last {:.2} over {} seed(s) -> {}",
        agg.strategy,
        agg.best_mean,
        agg.last_mean,
        results.len(),
        cfg.output.dir.display()
    );
    Ok(())
}

fn cmd_probe(cfg: &ExperimentConfig) -> LabResult<()> {
    for s in warmup_probe(cfg, &cfg.output.dir)? {
        println!("p_strong {}: AUC {:.4} at epoch {} over {} seed(s)", s.p_strong, s.auc_mean, s.epoch, s.seeds.len());
    }
    Ok(())
}

fn cmd_grid(cfg: &ExperimentConfig, strategies: &[String], rates: &[f64]) -> LabResult<()> {
    let specs = strategies
        .iter()
        .map(|s| s.parse::<StrategySpec>().map_err(|e| LabError::Usage(e.to_string())))
        .collect::<LabResult<Vec<_>>>()?;
    if let Some(r) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(LabError::Usage(format!("noise rate {r} outside [0, 1]")));
    }
    for cell in grid(cfg, &specs, rates, &cfg.output.dir)? {
        println!(
            "{} @ {}: best {:.2} last {:.2}",
            cell.strategy, cell.noise_rate, cell.summary.best_mean, cell.summary.last_mean
        );
    }
    Ok(())
}

/// Writes `train-images.idx`, `train-labels.idx` (given labels), `train-true-labels.idx`,
/// `test-images.idx` and `test-labels.idx` for the first seed.
pub fn gen_data(cfg: &ExperimentConfig, out: &Path) -> LabResult<()> {
    let seed = cfg.seeds[0];
    let (clean, test) = build_data(cfg, seed)?;
    let noisy = inject_noise(cfg, &clean, seed)?;
    save_idx(&noisy, &out.join("train-images.idx"), &out.join("train-labels.idx"))?;
    let true_labels: Vec<u8> = noisy.true_labels.iter().map(|&l| l as u8).collect();
    write(
        &out.join("train-true-labels.idx"),
        &nlab_core::data::idx::encode_labels(&true_labels),
    )?;
    save_idx(&test, &out.join("test-images.idx"), &out.join("test-labels.idx"))?;
    write(&out.join("config.ini"), cfg.for_seed(seed).to_ini_string().as_bytes())?;
    println!(
        "{} train / {} test samples ({:.1}% flipped) -> {}",
        noisy.len(),
        test.len(),
        100.0 * noisy.noise_fraction(),
        out.display()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> LabResult<()> {
    match cli.command {
        Command::Run(a) => cmd_run(&a.resolve()?),
        Command::Probe(a) => {
            let mut cfg = a.common.resolve()?;
            if !a.p_strong.is_empty() {
                cfg.probe.p_strong = a.p_strong;
            }
            if let Some(e) = a.epoch {
                cfg.probe.epoch = e;
            }
            cfg.validate()?;
            cmd_probe(&cfg)
        }
        Command::Grid(a) => cmd_grid(&a.common.resolve()?, &a.strategies, &a.noise_rates),
        Command::GenData(a) => {
            let cfg = a.resolve()?;
            gen_data(&cfg, &cfg.output.dir)
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the process exit
/// code: 0 on success, 2 on usage errors, 1 on other failures.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e @ LabError::Usage(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
