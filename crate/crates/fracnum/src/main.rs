use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracnum::commands::{self, CommandError};
use fracnum::config::{ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "fracnum", version, about = "Ground-state boson number statistics by path-space Monte Carlo")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Configuration file (INI format).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Base seed, overriding `sampler.seed`.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Chains per coupling, overriding `sampler.chains`.
    #[arg(long, global = true, value_name = "N")]
    chains: Option<usize>,
    /// Extra override `section.key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample and store one path ensemble per coupling.
    Sample,
    /// Estimate the configured queries from stored ensembles.
    Expect {
        /// Directory holding the ensembles (defaults to the output directory).
        #[arg(long, value_name = "DIR")]
        ensembles: Option<PathBuf>,
    },
    /// Sample every coupling and tabulate <N^k>/g^(2k).
    SweepG,
    /// Run the invariant and oracle suite.
    Validate,
}

fn overrides(args: &GlobalArgs) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for item in &args.set {
        let (field, value) = item.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            message: format!("--set expects section.key=value, got {item:?}"),
        })?;
        out.push((field.to_string(), value.to_string()));
    }
    if let Some(seed) = args.seed {
        out.push(("sampler.seed".into(), seed.to_string()));
    }
    if let Some(chains) = args.chains {
        out.push(("sampler.chains".into(), chains.to_string()));
    }
    if let Some(dir) = &args.out {
        out.push(("output.dir".into(), dir.display().to_string()));
    }
    Ok(out)
}

fn load(args: &GlobalArgs) -> Result<RunConfig, CommandError> {
    let cfg = RunConfig::load(args.config.as_deref(), &overrides(args)?)?;
    log::info!("model hash {}, config hash {}", cfg.model_hash(), cfg.config_hash());
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, CommandError> {
    match cli.command {
        Command::Sample => {
            let cfg = load(&cli.global)?;
            println!("g\tsamples\tmean_w\tw_infinity\tw_epsilon\twarnings\tfile");
            for s in commands::sample(&cfg)? {
                println!(
                    "{}\t{}\t{:.6}\t{:.6}\t{:.2e}\t{}\t{}",
                    s.g,
                    s.samples,
                    s.mean_w,
                    s.w_infinity,
                    s.w_epsilon,
                    s.warnings.len(),
                    s.ensemble_path.display()
                );
            }
        }
        Command::Expect { ensembles } => {
            let cfg = load(&cli.global)?;
            let (path, rows) = commands::expect(&cfg, ensembles.as_deref())?;
            println!("query\tg\tvalue\tmc_stderr\tdet_error\tn_eff");
            for r in &rows {
                println!("{}\t{}\t{:.8e}\t{:.2e}\t{:.2e}\t{:.0}", r.query, r.g, r.value, r.mc_stderr, r.det_error, r.n_eff);
            }
            println!("wrote {}", path.display());
        }
        Command::SweepG => {
            let cfg = load(&cli.global)?;
            let (path, rows) = commands::sweep_g(&cfg)?;
            println!("query\tg\tnormalized\tstderr\tcorridor");
            for r in &rows {
                let c = r.result.corridor.map(|(lo, hi)| format!("[{lo:.6}, {hi:.6}]")).unwrap_or_default();
                println!("{}\t{}\t{:.8}\t{:.2e}\t{c}", r.result.query, r.result.g, r.normalized, r.normalized_stderr);
            }
            println!("wrote {}", path.display());
        }
        Command::Validate => {
            let out = cli.global.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let report = commands::validate(&out)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report is plain data"));
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
