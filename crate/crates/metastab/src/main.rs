use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use metastab::cli::{
    self, BoundsParams, CliError, Overrides, EXIT_CHECK_FAILED, EXIT_CONFIG_ERROR, EXIT_OK,
};
use metastab::counterfn::Nat;
use metastab::verify;

#[derive(Parser)]
#[command(
    name = "metastab",
    version,
    about = "Fixed-point iteration laboratory: iterations, metastability rates, lemma checks"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Saturation cap override (decimal).
    #[arg(long, global = true)]
    cap: Option<String>,
    /// Iteration budget override.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Sampling seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config: trace, bounds, window checks, lemma sweeps.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate one rate functional by name on JSON-encoded arguments.
    Bounds {
        /// Primitive or theorem-bound name, e.g. r, omega, beta_browder,
        /// phi_wittmann, sigma, alpha_hat.
        #[arg(long)]
        name: String,
        /// JSON array of arguments: naturals (number or decimal string) and
        /// counter-function descriptors like {"kind":"plus-c","c":10}.
        #[arg(long, default_value = "[]")]
        args: String,
        /// Instance parameters, e.g. {"b":1,"ell":2,"tau":{"kind":"identity"}}.
        #[arg(long)]
        params: String,
    },
    /// Brute-force minimal metastability witnesses for a config (no bounds).
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
    /// Exact shift-operator counterexample on the l1 ball.
    Counterexample {
        #[arg(long, default_value_t = 100)]
        max_n: u64,
    },
    /// Exact-rational validation of the harmonic coefficient moduli.
    ValidateModuli {
        /// Family size the Cauchy modulus is instantiated for.
        #[arg(long, default_value_t = 1)]
        ell: u64,
        #[arg(long, default_value_t = 1)]
        b: u64,
    },
}

fn overrides(args: &Args) -> Result<Overrides, CliError> {
    let cap = match &args.cap {
        Some(s) => Some(
            Nat::parse_bytes(s.as_bytes(), 10)
                .ok_or_else(|| CliError::Config(format!("invalid --cap `{s}`")))?,
        ),
        None => None,
    };
    Ok(Overrides {
        cap,
        budget: args.budget,
        seed: args.seed,
    })
}

fn dispatch(args: &Args) -> Result<i32, CliError> {
    let over = overrides(args)?;
    match &args.command {
        Command::Run { config } => {
            let cfg = cli::load_config(config)?;
            let (report, code) = cli::run_experiment(&cfg, &over, &args.out)?;
            for row in &report.rows {
                eprintln!(
                    "{} k={} f={}: {:?} witness={:?}",
                    row.scheme, row.k, row.f, row.verdict, row.witness_n
                );
            }
            Ok(code)
        }
        Command::Bounds { name, args: raw, params } => {
            let bp: BoundsParams = serde_json::from_str(params)
                .map_err(|e| CliError::Config(format!("params: {e}")))?;
            let p = bp.build(&over)?;
            let parsed = cli::parse_primitive_args(raw)?;
            let bound = cli::eval_bounds(&p, name, &parsed)?;
            println!("{}", serde_json::to_string(&bound).expect("bound serializes"));
            Ok(EXIT_OK)
        }
        Command::Oracle { config } => {
            let cfg = cli::load_config(config)?;
            let witnesses = cli::run_oracle(&cfg, &over)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&witnesses).expect("serializes")
            );
            Ok(EXIT_OK)
        }
        Command::Counterexample { max_n } => {
            let rep = verify::run_counterexample(*max_n);
            println!(
                "{}",
                serde_json::to_string_pretty(&rep).expect("serializes")
            );
            Ok(if rep.verdict.is_gating_failure() {
                EXIT_CHECK_FAILED
            } else {
                EXIT_OK
            })
        }
        Command::ValidateModuli { ell, b } => {
            let cap = over.cap.clone().unwrap_or_else(|| {
                cli::cap_from_env().unwrap_or_else(metastab::counterfn::default_cap)
            });
            let params = metastab::rates::ProblemParams::harmonic(*b, *ell, cap)
                .map_err(|e| CliError::Run(e.to_string()))?;
            let cfg = verify::ModuliCheckConfig::default();
            let reps = verify::validate_moduli(&params, None, &cfg)
                .map_err(|e| CliError::Run(e.to_string()))?;
            println!(
                "{}",
                serde_json::to_string_pretty(&reps).expect("serializes")
            );
            Ok(if reps.iter().any(|r| r.verdict.is_gating_failure()) {
                EXIT_CHECK_FAILED
            } else {
                EXIT_OK
            })
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let args = Args::parse();
    match dispatch(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG_ERROR as u8)
        }
    }
}
