use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uniqset::harness::{
    load_config, plotdata, run_blocks, run_build, run_capacity, run_demo, run_density, run_outer, run_separate,
    run_transfer, BlocksConfig, BuildConfig, CapacityRunConfig, DemoConfig, DensityRunConfig, OuterRunConfig,
    PlotKind, RuleName, RunOutcome, ScheduleSpec, SeparateConfig, TransferRunConfig,
};
use uniqset::separation::Strategy;
use uniqset::Result;

/// Asymmetric Fourier uniqueness sets on the circle.
///
/// Every run writes its tables, summary.json and manifest.json into --out.
/// The exit code is 0 when every certificate passes, 1 when one fails and 2
/// on errors. Flags override values from --config.
#[derive(Parser)]
#[command(name = "uniqset", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build E from a δ schedule with entropy, block-mass and divergence tables.
    Build {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Comma-separated exponents q in (1,2].
        #[arg(long = "q", value_delimiter = ',')]
        q_list: Option<Vec<f64>>,
        /// Skip the restricted-Lebesgue block-mass certificate.
        #[arg(long)]
        no_certificate: bool,
    },
    /// Block-mass certificates for a library of test measures on E.
    Blocks {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(long = "q", value_delimiter = ',')]
        q_list: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Disjoint dilated frequency blocks for a schedule.
    Separate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// greedy or prime.
        #[arg(long)]
        strategy: Option<String>,
        /// Scan only the first K blocks exhaustively.
        #[arg(long)]
        exhaustive: Option<usize>,
    },
    /// Positive density on E with a uniform A_r ledger.
    Density {
        #[command(flatten)]
        common: Common,
        #[arg(long = "r", value_delimiter = ',')]
        r_list: Option<Vec<f64>>,
        #[arg(long)]
        steps: Option<usize>,
        /// geo:B or list:d1,d2,...
        #[arg(long)]
        schedule: Option<String>,
    },
    /// Two-sided A_p capacity bounds and the KAT approximation scheme.
    Capacity {
        #[command(flatten)]
        common: Common,
        #[arg(long = "p", value_delimiter = ',')]
        p_list: Option<Vec<f64>>,
        /// A set.json from an earlier build.
        #[arg(long)]
        set: Option<PathBuf>,
        #[arg(long = "eps", value_delimiter = ',')]
        stage_epsilons: Option<Vec<f64>>,
    },
    /// Dilated outer functions approximating 1 on E under an Omega gauge.
    Outer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        omega: Option<String>,
        #[arg(long)]
        stages: Option<usize>,
    },
    /// Integer-to-line transfer of a decay majorant.
    Transfer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        xi_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Build, density and outer stages side by side in one directory.
    AsymmetryDemo {
        #[command(flatten)]
        common: Common,
    },
    /// Long-format (x, y, series) CSV from a run directory.
    Plotdata {
        dir: PathBuf,
        /// lq_partial, entropy_terms, ledger, capacity_trend or outer_decay.
        kind: String,
        /// Defaults to DIR/plot_KIND.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON config; unknown keys are rejected.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScheduleArgs {
    /// main, hk or custom.
    #[arg(long)]
    rule: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    /// auto or a positive number.
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long = "J")]
    generations: Option<usize>,
    /// Exponent of the HK rule.
    #[arg(long)]
    hk_q: Option<f64>,
    #[arg(long)]
    hk_eps: Option<f64>,
    /// Comma-separated deltas for the custom rule.
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
}

fn bad(msg: String) -> uniqset::Error {
    uniqset::Error::InvalidParameter(msg)
}

impl ScheduleArgs {
    fn apply(self, s: &mut ScheduleSpec) -> Result<()> {
        if let Some(r) = self.rule {
            s.rule = match r.as_str() {
                "main" => RuleName::Main,
                "hk" => RuleName::Hk,
                "custom" => RuleName::Custom,
                _ => return Err(bad(format!("unknown rule '{r}'"))),
            };
        }
        if let Some(c) = self.c {
            s.c = match c.as_str() {
                "auto" => None,
                v => Some(v.parse().map_err(|_| bad(format!("c = '{v}' is neither auto nor a number")))?),
            };
        }
        if let Some(d) = self.deltas {
            s.generations = d.len();
            s.deltas = d;
        }
        set(&mut s.a, self.a);
        set(&mut s.budget, self.budget);
        set(&mut s.generations, self.generations);
        set(&mut s.hk_q, self.hk_q);
        set(&mut s.hk_eps, self.hk_eps);
        Ok(())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn config<T: for<'de> serde::Deserialize<'de> + Default>(common: &Common) -> Result<T> {
    load_config(common.config.as_deref())
}

fn run(command: Command) -> Result<Option<RunOutcome>> {
    let outcome = match command {
        Command::Build { common, schedule, q_list, no_certificate } => {
            let mut cfg: BuildConfig = config(&common)?;
            schedule.apply(&mut cfg.schedule)?;
            set(&mut cfg.q_list, q_list);
            cfg.certificate &= !no_certificate;
            run_build(&cfg, &common.out)?
        }
        Command::Blocks { common, schedule, q_list, seed } => {
            let mut cfg: BlocksConfig = config(&common)?;
            schedule.apply(&mut cfg.schedule)?;
            set(&mut cfg.q_list, q_list);
            set(&mut cfg.seed, seed);
            run_blocks(&cfg, &common.out)?
        }
        Command::Separate { common, schedule, strategy, exhaustive } => {
            let mut cfg: SeparateConfig = config(&common)?;
            schedule.apply(&mut cfg.schedule)?;
            if let Some(s) = strategy {
                cfg.strategy = match s.as_str() {
                    "greedy" => Strategy::GreedyPigeonhole,
                    "prime" => Strategy::Prime,
                    _ => return Err(bad(format!("unknown strategy '{s}'"))),
                };
            }
            if exhaustive.is_some() {
                cfg.exhaustive_blocks = exhaustive;
            }
            run_separate(&cfg, &common.out)?
        }
        Command::Density { common, r_list, steps, schedule } => {
            let mut cfg: DensityRunConfig = config(&common)?;
            set(&mut cfg.r_list, r_list);
            set(&mut cfg.steps, steps);
            set(&mut cfg.schedule, schedule);
            run_density(&cfg, &common.out)?
        }
        Command::Capacity { common, p_list, set: path, stage_epsilons } => {
            let mut cfg: CapacityRunConfig = config(&common)?;
            set(&mut cfg.p_list, p_list);
            set(&mut cfg.stage_epsilons, stage_epsilons);
            if path.is_some() {
                cfg.set = path;
            }
            run_capacity(&cfg, &common.out)?
        }
        Command::Outer { common, omega, stages } => {
            let mut cfg: OuterRunConfig = config(&common)?;
            set(&mut cfg.omega, omega);
            set(&mut cfg.stages, stages);
            run_outer(&cfg, &common.out)?
        }
        Command::Transfer { common, phi, xi_max, points } => {
            let mut cfg: TransferRunConfig = config(&common)?;
            set(&mut cfg.phi, phi);
            set(&mut cfg.xi_max, xi_max);
            set(&mut cfg.points, points);
            run_transfer(&cfg, &common.out)?
        }
        Command::AsymmetryDemo { common } => {
            let cfg: DemoConfig = config(&common)?;
            run_demo(&cfg, &common.out)?
        }
        Command::Plotdata { dir, kind, out } => {
            let kind: PlotKind = kind.parse()?;
            let table = plotdata(&dir, kind)?;
            let out = out.unwrap_or_else(|| dir.join(format!("plot_{}.csv", kind.as_str())));
            std::fs::write(&out, table.render())?;
            println!("wrote {}", out.display());
            return Ok(None);
        }
    };
    Ok(Some(outcome))
}

fn report(outcome: &RunOutcome) {
    for c in &outcome.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("{} files in {}", outcome.manifest.files.len() + 1, outcome.dir.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Some(outcome)) => {
            report(&outcome);
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
