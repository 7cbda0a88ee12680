//! The `clipvi` command line: `run`, `verify`, `fit` and `sweep`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::config::{load_config, parse_override, ExperimentConfig};
use crate::harness::experiment::{fit_rows, run_experiment};
use crate::harness::output::{read_results_csv, write_results, Slopes};
use crate::harness::sweep::run_sweep;
use crate::rng::CounterRng;
use crate::smoothness::{verify_assumptions, VerifySettings};

#[derive(Debug, Parser)]
#[command(
    name = "clipvi",
    version,
    about = "Clipped stochastic methods for variational inequalities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every configured method over all seeds and write results.
    Run(CommonArgs),
    /// Check the structural assumptions on sampled points.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Sample count per check.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Re-fit log-log slopes on an existing results CSV.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// Results CSV; defaults to `<out>/results.csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the configured grid of (p, α, q) cells.
    Sweep(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override a config key, e.g. `--set problem.p=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub raw_traces: bool,
}

impl CommonArgs {
    pub fn load(&self) -> Result<ExperimentConfig> {
        let overrides = self
            .overrides
            .iter()
            .map(|s| parse_override(s))
            .collect::<Result<Vec<_>>>()?;
        let mut cfg = load_config(&self.config, &overrides)?;
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = Some(w);
        }
        if let Some(o) = &self.out {
            cfg.output = o.clone();
        }
        if self.raw_traces {
            cfg.raw_traces = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_slopes(slopes: &BTreeMap<String, Slopes>) {
    let show = |s: Option<f64>| s.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    for (label, s) in slopes {
        println!(
            "{label:<28} slope last {:>8}  avg {:>8}",
            show(s.last),
            show(s.avg)
        );
    }
}

/// Executes a parsed command. `Ok(false)` means the command ran but its
/// checks failed.
pub fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(common) => {
            let cfg = common.load()?;
            let result = run_experiment(&cfg)?;
            let files = write_results(&result, &cfg.output, "results")?;
            let slopes = result
                .methods
                .iter()
                .map(|m| {
                    let s = Slopes {
                        last: m.slope_last,
                        avg: m.slope_avg,
                    };
                    (m.method.label.clone(), s)
                })
                .collect();
            print_slopes(&slopes);
            println!("wrote {} and {}", files.csv.display(), files.json.display());
            Ok(true)
        }
        Command::Verify { common, samples } => {
            let cfg = common.load()?;
            let problem = cfg.problem.build()?;
            let constants = cfg.problem.symmetry_constants()?;
            let mut settings = VerifySettings::default();
            if let Some(n) = samples {
                settings.n_samples = n;
            }
            let mut rng = CounterRng::for_run(cfg.master_seed, u64::MAX, 0);
            let report = verify_assumptions(&problem, constants.as_ref(), settings, &mut rng)?;
            print!("{report}");
            Ok(report.passed())
        }
        Command::Fit { common, csv } => {
            let cfg = common.load()?;
            let path = csv.unwrap_or_else(|| cfg.output.join("results.csv"));
            let groups = read_results_csv(&path)?;
            let window = cfg.fit_window();
            let slopes: BTreeMap<String, Slopes> = groups
                .iter()
                .map(|(label, rows)| {
                    let (last, avg) = fit_rows(rows, window);
                    (label.clone(), Slopes { last, avg })
                })
                .collect();
            let text = serde_json::to_string_pretty(&slopes).map_err(|source| Error::Json {
                path: path.clone(),
                source,
            })?;
            println!("{text}");
            Ok(true)
        }
        Command::Sweep(common) => {
            let cfg = common.load()?;
            let manifest = run_sweep(&cfg, &cfg.output)?;
            for e in &manifest.cells {
                println!("{}", e.csv.display());
                print_slopes(&e.slopes);
            }
            Ok(true)
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit
/// code: 0 on success, 1 on runtime failure or failed checks, 2 on
/// argument errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
