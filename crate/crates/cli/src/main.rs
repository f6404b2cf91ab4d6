use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use covert_ris::experiments::{
    beampattern, default_grid, emit_plots, load_config_with_base, plot_beampattern, run_point, run_sweep,
    write_beampattern, SavedRun, Scheme, SweepSpec, SweepVar,
};
use covert_ris::optimizer::{Access, CsiModel};
use covert_ris::oracle::{run_suite, SuiteOptions};
use covert_ris::{Profile, SystemConfig};

#[derive(Parser)]
#[command(name = "covert-ris", version, about = "Covert ISAC design for RIS-assisted NOMA downlinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scheme on one channel draw.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scheme: CsiModel,
        #[arg(long, default_value = "noma")]
        access: Access,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Base parameter set for keys the config leaves out.
        #[arg(long)]
        profile: Option<Profile>,
    },
    /// Sweep one variable over schemes and seeds, then plot.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        var: SweepVar,
        /// Comma separated.
        #[arg(long)]
        values: String,
        #[arg(long, default_value = "0,1,2,3,4")]
        seeds: String,
        /// Comma separated scheme names such as `known-pc-noma`, or `all`.
        #[arg(long, default_value = "all")]
        schemes: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        profile: Option<Profile>,
    },
    /// Beampattern table and figure of a saved run.
    Beampattern {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Grid points over [-90°, 90°].
        #[arg(long, default_value_t = 1801)]
        points: usize,
    },
    /// Run the oracle suite; exits non-zero on any failure.
    Validate {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn base_config(config: Option<&Path>, profile: Option<Profile>) -> anyhow::Result<SystemConfig> {
    match config {
        Some(path) => load_config_with_base(path, profile).with_context(|| format!("loading {}", path.display())),
        None => Ok(SystemConfig::for_profile(profile.unwrap_or(Profile::Desk))),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|e| anyhow::anyhow!("bad {what} `{x}`: {e}")))
        .collect()
}

fn run(cmd: Command) -> anyhow::Result<bool> {
    match cmd {
        Command::Run { config, scheme, access, seed, out, profile } => {
            let cfg = base_config(config.as_deref(), profile)?;
            std::fs::create_dir_all(&out)?;
            let scheme = Scheme::new(scheme, access);
            let (record, solution) = run_point(&cfg, scheme, seed, "none", 0.0);
            covert_ris::experiments::sweep::write_records(&out.join("record.csv"), std::slice::from_ref(&record))?;
            SavedRun::new(&cfg, record.clone(), solution).save(&out.join("solution.json"))?;
            match record.covert_rate {
                Some(rate) => println!("{scheme} seed {seed}: {} covert rate {rate:.4} bit/s/Hz", record.status),
                None => println!("{scheme} seed {seed}: {}", record.status),
            }
            Ok(true)
        }
        Command::Sweep { config, var, values, seeds, schemes, out, profile } => {
            let cfg = base_config(config.as_deref(), profile)?;
            let spec = SweepSpec {
                variable: var,
                values: parse_list(&values, "value")?,
                seeds: parse_list(&seeds, "seed")?,
                schemes: Scheme::parse_list(&schemes)?,
            };
            let output = run_sweep(&cfg, &spec, &out)?;
            for row in &output.summary {
                let rate = row.mean_covert_rate.map_or("-".to_string(), |r| format!("{r:.4}"));
                println!("{:<20} {}={:<10} optimal {}/{}  mean rate {rate}", row.scheme, row.sweep_var, row.sweep_value, row.optimal, row.runs);
            }
            for fig in emit_plots(std::slice::from_ref(&output.csv_path), &out)? {
                println!("wrote {}", fig.path.display());
            }
            Ok(true)
        }
        Command::Beampattern { solution, out, points } => {
            let saved = SavedRun::load(&solution).with_context(|| format!("reading {}", solution.display()))?;
            let Some(sol) = saved.solution.as_ref() else {
                bail!("{} holds no solution (status {})", solution.display(), saved.record.status);
            };
            let cfg = saved.config()?;
            let bp = beampattern(sol, &cfg, &default_grid(points))?;
            std::fs::create_dir_all(&out)?;
            write_beampattern(&out.join("beampattern.csv"), &bp)?;
            let fig = plot_beampattern(&bp, &out)?;
            println!("wrote {}", fig.display());
            Ok(true)
        }
        Command::Validate { seed } => {
            let reports = run_suite(&SuiteOptions { seed, ..SuiteOptions::default() })?;
            for r in &reports {
                println!(
                    "{} {:<70} max dev {:.3e} tol {:.1e} (n = {}, seed {})",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.name,
                    r.max_deviation,
                    r.tolerance,
                    r.samples,
                    r.seed
                );
            }
            Ok(reports.iter().all(|r| r.pass))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
