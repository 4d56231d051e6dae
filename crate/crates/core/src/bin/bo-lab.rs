use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bo_lab::lab::{self, ExperimentConfig};
use bo_lab::validation::{self, Tolerances};
use bo_lab::Error;

#[derive(Parser)]
#[command(name = "bo-lab", version, about = "Benjamin-Ono action-stability laboratory")]
struct Cli {
    /// Experiment config (JSON), or a run manifest.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory. Defaults to the config's `output`, then `.`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for concurrent runs and gap extraction.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Fast,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the first epsilon of the config.
    Simulate,
    /// Extract actions from a simulate output directory (--out).
    Actions,
    /// Stability certificate for each epsilon.
    Certificate,
    /// Run every epsilon and check the power-law envelope.
    Sweep,
    /// Built-in acceptance suite.
    Validate {
        #[arg(long, value_enum, default_value = "fast")]
        suite: Suite,
        /// Comma-separated criterion numbers; overrides --suite.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
        /// Override a pass threshold, `name=value`. Repeatable.
        #[arg(long = "tolerance")]
        tolerances: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load(cli: &Cli) -> Result<(ExperimentConfig, PathBuf), Error> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let cfg = ExperimentConfig::load(path)?;
    let out = cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, out))
}

fn run(cli: &Cli) -> Result<u8, Error> {
    let say = |s: String| {
        if !cli.quiet {
            println!("{s}");
        }
    };
    match &cli.command {
        Command::Simulate => {
            let (cfg, out) = load(cli)?;
            let s = lab::cmd_simulate(&cfg, &out)?;
            say(format!(
                "simulated epsilon = {:e}: {} samples, H_BO relative drift {:.3e}, H_total relative drift {:.3e}",
                s.epsilon, s.samples, s.h_bo_drift, s.energy_drift
            ));
        }
        Command::Actions => {
            let (cfg, out) = load(cli)?;
            let s = lab::cmd_actions(&cfg, &out)?;
            let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3e}"));
            say(format!(
                "max drift {:.3e}, tail max {:.3e}, h_omega max {}, H4 max {}, converged {}",
                s.max_drift,
                s.tail_max,
                opt(s.h_omega_max),
                opt(s.h4_max),
                s.all_converged
            ));
        }
        Command::Certificate => {
            let (cfg, out) = load(cli)?;
            for c in lab::cmd_certificate(&cfg, &out)? {
                say(lab::flag_table(&c));
            }
        }
        Command::Sweep => {
            let (cfg, out) = load(cli)?;
            let r = lab::cmd_sweep(&cfg, &out)?;
            if !cli.quiet {
                println!("{}", serde_json::to_string_pretty(&r)?);
            }
        }
        Command::Validate { suite, criteria, tolerances, seed } => {
            let mut tol = Tolerances::default();
            for t in tolerances {
                tol.apply(t)?;
            }
            let ids: Vec<u8> = if !criteria.is_empty() {
                if let Some(bad) = criteria.iter().find(|c| !(1..=10).contains(*c)) {
                    return Err(Error::Config(format!("no criterion {bad}")));
                }
                criteria.clone()
            } else {
                match suite {
                    Suite::Fast => validation::FAST.to_vec(),
                    Suite::Full => validation::ALL.to_vec(),
                }
            };
            let outcomes = validation::run_criteria(&ids, &tol, *seed);
            for o in &outcomes {
                say(o.line());
            }
            if let Some(out) = &cli.out {
                std::fs::create_dir_all(out)?;
                lab::io::write_json(&out.join("validation.json"), &outcomes)?;
            }
            let table = validation::failure_table(&outcomes);
            if !table.is_empty() {
                eprint!("{table}");
                return Ok(1);
            }
        }
    }
    Ok(0)
}
