use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use maximin::checks::{run_suite, Suite};
use maximin::dataset::write_csv;
use maximin::harness::{run_experiment, write_outputs, ExperimentConfig, RunRecord};
use maximin::summary::summarize;
use maximin::synthetic::{gen_clusters, gen_threshold_task, ClusterSpec};

#[derive(Parser)]
#[command(name = "maximin", version, about = "MaxiMin active learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write trace.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one config over a range of seeds and summarize across them.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `a..b` (exclusive) or `a..=b`.
        #[arg(long, value_parser = parse_seeds)]
        seeds: RangeInclusive<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run acceptance checks; exits nonzero if any fails.
    Check {
        /// Suite to run; all suites when omitted.
        #[arg(long, value_enum)]
        suite: Option<SuiteArg>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print results as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Generate a synthetic labeled dataset as CSV.
    Gen {
        #[arg(long, value_enum)]
        task: GenTask,
        /// JSON file: `{"n": .., "k": ..}` for threshold, a cluster spec for clusters.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Bisection,
    Clusters,
    Splines,
    Identities,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Bisection => Suite::Bisection,
            SuiteArg::Clusters => Suite::Clusters,
            SuiteArg::Splines => Suite::Splines,
            SuiteArg::Identities => Suite::Identities,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GenTask {
    Threshold,
    Clusters,
}

fn parse_seeds(s: &str) -> Result<RangeInclusive<u64>, String> {
    let (a, b, inclusive) = if let Some((a, b)) = s.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = s.split_once("..") {
        (a, b, false)
    } else {
        return Err(format!("expected a..b or a..=b, got `{s}`"));
    };
    let a: u64 = a.trim().parse().map_err(|e| format!("bad start `{a}`: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("bad end `{b}`: {e}"))?;
    let end = if inclusive { b } else { b.checked_sub(1).ok_or("empty seed range")? };
    if end < a {
        return Err(format!("empty seed range `{s}`"));
    }
    Ok(a..=end)
}

fn output_dir(out: Option<PathBuf>, cfg: &ExperimentConfig) -> anyhow::Result<PathBuf> {
    match out.or_else(|| cfg.output_dir.clone()) {
        Some(dir) => Ok(dir),
        None => bail!("no output directory: pass --out or set output_dir in the config"),
    }
}

fn load_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    ExperimentConfig::from_json_file(path).with_context(|| format!("reading config {}", path.display()))
}

fn report(record: &RunRecord) {
    let zero = record.queries_to_zero.map_or("never".to_string(), |q| q.to_string());
    println!(
        "{} on {} (seed {}): {} labels, final error {:.4}, zero error after {}",
        record.strategy,
        record.task_family,
        record.seed,
        record.steps.len(),
        record.final_error().unwrap_or(f64::NAN),
        zero
    );
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load_config(&config)?;
            let dir = output_dir(out, &cfg)?;
            let record = run_experiment(&cfg)?;
            write_outputs(&record, &dir)?;
            report(&record);
        }
        Command::Sweep { config, seeds, out } => {
            let mut cfg = load_config(&config)?;
            let dir = output_dir(out, &cfg)?;
            let mut records = Vec::new();
            for seed in seeds {
                cfg.seed = seed;
                let record = run_experiment(&cfg).with_context(|| format!("seed {seed}"))?;
                write_outputs(&record, dir.join(format!("seed-{seed}")))?;
                report(&record);
                records.push(record);
            }
            let summary = summarize(&records)?;
            fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
            match summary.median_queries_to_zero {
                Some(m) => println!("median queries to zero over {} seeds: {m}", summary.runs),
                None => println!("median run never reached zero error ({} seeds)", summary.runs),
            }
        }
        Command::Check { suite, seed, json } => {
            let suites: Vec<Suite> = match suite {
                Some(s) => vec![s.into()],
                None => Suite::ALL.to_vec(),
            };
            let results: Vec<_> = suites.into_iter().flat_map(|s| run_suite(s, seed)).collect();
            if json {
                println!("{}", serde_json::to_string_pretty(&results)?);
            } else {
                for r in &results {
                    println!("{r}");
                }
            }
            if results.iter().any(|r| !r.passed) {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Gen { task, spec, out, seed } => {
            let text = fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let pool = match task {
                GenTask::Threshold => {
                    let v: Value = serde_json::from_str(&text)?;
                    let field = |name: &str| {
                        v.get(name)
                            .and_then(Value::as_u64)
                            .map(|x| x as usize)
                            .with_context(|| format!("threshold spec needs an integer `{name}`"))
                    };
                    gen_threshold_task(field("n")?, field("k")?, seed)?.1
                }
                GenTask::Clusters => {
                    let c: ClusterSpec = serde_json::from_str(&text).context("parsing cluster spec")?;
                    gen_clusters(&c, seed)?.pool
                }
            };
            write_csv(&pool, &out)?;
            println!("wrote {} points to {}", pool.len(), out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::parse_seeds;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seeds("0..5").unwrap(), 0..=4);
        assert_eq!(parse_seeds("3..=3").unwrap(), 3..=3);
        assert!(parse_seeds("5..5").is_err());
        assert!(parse_seeds("x..2").is_err());
        assert!(parse_seeds("7").is_err());
    }
}
