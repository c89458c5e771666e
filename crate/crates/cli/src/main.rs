//! `sublevel`: scenario runner for eigenvalue counting on sublevel sets.
//!
//! Exit codes: 0 success, 1 a must-hold identity failed, 2 configuration or
//! usage error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use sublevel::a2r;
use sublevel::assemble::{sublevel_pencil, ClassifyOptions};
use sublevel::eigcount::{self, with_nudge};
use sublevel::scenario::{self, log_grid, LambdaScale, ScenarioConfig};
use sublevel::schrodinger;
use sublevel::{Error, Result};

#[derive(Parser)]
#[command(name = "sublevel", version, about = "Eigenvalue counting on potential sublevel sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario configuration file (TOML).
    config: PathBuf,
    /// Energy level; defaults to the first entry of `levels.energies`.
    #[arg(long, allow_hyphen_values = true)]
    level: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    /// Weighted pencil `(K, M)` on the sublevel set with free boundary.
    Full,
    /// Dirichlet block `(K_II, M_II)`.
    Dirichlet,
    /// `-Δ + V` on the box, counting eigenvalues below the level.
    Schrodinger,
}

#[derive(Subcommand)]
enum Command {
    /// Print a summary of the assembled pencil.
    Assemble {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Print the number of eigenvalues strictly below λ.
    Count {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, value_enum, default_value = "full")]
        operator: Operator,
    },
    /// Tabulate the boundary splitting of the full count over a λ grid.
    Splitting {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Number of log-spaced λ values between the configured sweep limits.
        #[arg(long, default_value_t = 25)]
        lambda_grid: usize,
    },
    /// Run the scenario and print every bound comparison.
    Bounds {
        config: PathBuf,
    },
    /// Exact reference spectra.
    Oracle {
        #[command(subcommand)]
        which: Oracle,
    },
    /// Run the scenario and write the CSV and JSON reports.
    Report {
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Oracle {
    /// Dirichlet eigenvalues of the cube `[0, L]^n` not exceeding μ.
    BoxCount {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        side: f64,
    },
}

fn configure_workers() {
    let Ok(raw) = std::env::var("SUBLEVEL_WORKERS") else {
        return;
    };
    match raw.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                warn!("could not size the worker pool: {e}");
            }
        }
        _ => warn!("ignoring SUBLEVEL_WORKERS={raw}"),
    }
}

fn level_of(cfg: &ScenarioConfig, level: Option<f64>) -> f64 {
    level.unwrap_or(cfg.levels.energies[0])
}

fn grid_pencil(cfg: &ScenarioConfig, e: f64) -> Result<sublevel::model::AssembledPencil> {
    let field = cfg.build_field()?;
    sublevel_pencil(
        &field,
        e,
        ClassifyOptions {
            allow_positive: cfg.levels.allow_positive,
        },
    )
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Assemble { scenario } => {
            let cfg = ScenarioConfig::load(&scenario.config)?;
            let e = level_of(&cfg, scenario.level);
            let p = grid_pencil(&cfg, e)?;
            println!("level {e}");
            println!("nodes {}", p.order());
            println!("interior {}", p.interior.len());
            println!("boundary {}", p.boundary.len());
            println!("stiffness_nnz {}", p.stiffness.nnz());
            println!("bandwidth {}", p.stiffness.bandwidth());
            println!("total_mass {}", p.mass.iter().sum::<f64>());
            println!("total_sigma {}", p.sigma.iter().sum::<f64>());
            Ok(0)
        }
        Command::Count {
            scenario,
            lambda,
            operator,
        } => {
            let cfg = ScenarioConfig::load(&scenario.config)?;
            let count = if let Some((k, m)) = cfg.explicit_pencil() {
                eigcount::count_below(&k, &m, lambda)?
            } else {
                let e = level_of(&cfg, scenario.level);
                match operator {
                    Operator::Full => {
                        let p = grid_pencil(&cfg, e)?;
                        eigcount::count_below(&p.stiffness, &p.mass, lambda)?
                    }
                    Operator::Dirichlet => {
                        let p = grid_pencil(&cfg, e)?;
                        eigcount::count_below(&p.dirichlet_stiffness(), &p.interior_mass(), lambda)?
                    }
                    Operator::Schrodinger => schrodinger::schrodinger_count(&cfg.build_field()?, lambda)?,
                }
            };
            println!("{count}");
            Ok(0)
        }
        Command::Splitting {
            scenario,
            lambda_grid,
        } => {
            let cfg = ScenarioConfig::load(&scenario.config)?;
            let e = level_of(&cfg, scenario.level);
            let p = grid_pencil(&cfg, e)?;
            let scale = match cfg.sweeps.lambda_scale {
                LambdaScale::Absolute => 1.0,
                LambdaScale::Dirichlet => {
                    eigcount::kth_eigenvalue(&p.dirichlet_stiffness(), &p.interior_mass(), 1, 1e-12)?
                }
            };
            println!("lambda,N_full,N_dir,N_a2r_nonpos,identity_holds");
            let mut failed = false;
            for l in log_grid(cfg.sweeps.lambda_min, cfg.sweeps.lambda_max, lambda_grid) {
                let (lam, s) = with_nudge(l * scale, |x| a2r::splitting_counts(&p, x))?;
                failed |= !s.identity_holds;
                println!("{lam},{},{},{},{}", s.n_full, s.n_dir, s.n_a2r_nonpos, s.identity_holds);
            }
            Ok(i32::from(failed))
        }
        Command::Bounds { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let out = scenario::run_scenario(&cfg)?;
            println!("e,name,variable,value,lhs,rhs,verdict");
            for level in &out.report.levels {
                for b in &level.bounds {
                    let lhs = b.lhs.map(|m| m.as_f64().to_string()).unwrap_or_default();
                    println!(
                        "{},{},{},{},{},{},{}",
                        level.e, b.name, b.at.0, b.at.1, lhs, b.rhs, b.verdict
                    );
                }
                for note in &level.notes {
                    eprintln!("e = {}: {note}", level.e);
                }
            }
            Ok(out.exit_code())
        }
        Command::Oracle {
            which: Oracle::BoxCount { n, mu, side },
        } => {
            println!("{}", schrodinger::box_exact_count(n, side, mu)?);
            Ok(0)
        }
        Command::Report { config, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let outcome = scenario::run_scenario(&cfg)?;
            let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
            let (csv, json) = scenario::write_outputs(&dir, &outcome.rows, &outcome.report)?;
            println!("{}", csv.display());
            println!("{}", json.display());
            for f in &outcome.report.must_hold_failures {
                eprintln!("must-hold failure: {f}");
            }
            Ok(outcome.exit_code())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_workers();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::Io(_) => 2,
                _ => 3,
            })
        }
    }
}
