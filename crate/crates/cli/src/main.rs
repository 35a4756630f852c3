use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gradq_cli::{
    alpha0_report, bounds_table, describe_domain, run_experiment, write_csv_file, BoundsArgs,
    CliError, ExperimentConfig,
};
use gradq_core::QuantizerDescriptor;

#[derive(Parser)]
#[command(name = "gradq", version, about = "Fixed-length gradient quantization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print precision bounds, U(T, p) and the error lower bound for a sweep of r.
    Bounds {
        #[arg(long)]
        d: usize,
        /// Domain exponent; `inf` for the sup norm.
        #[arg(long)]
        p: f64,
        #[arg(long = "T", default_value_t = 10_000)]
        t: u64,
        #[arg(long = "D", default_value_t = 1.0)]
        diameter: f64,
        #[arg(long = "B", default_value_t = 1.0)]
        bound: f64,
        /// Ratio c0/c1 of the unknown rate constants.
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
    },
    /// Run an experiment config and write its CSV.
    Run {
        config: PathBuf,
        /// Override the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimate of a quantizer's alpha_0 next to its analytic bound.
    Alpha0 {
        #[command(flatten)]
        quantizer: QuantizerArgs,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the exact message width of a quantizer.
    Budget {
        #[command(flatten)]
        quantizer: QuantizerArgs,
    },
}

#[derive(Args)]
struct QuantizerArgs {
    /// simq, simqplus, cuq, ratq or split.
    #[arg(long)]
    family: String,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    p: f64,
    #[arg(long = "B", default_value_t = 1.0)]
    bound: f64,
    /// SimQ+ repetitions.
    #[arg(long)]
    k: Option<usize>,
    /// CUQ and RATQ level count k.
    #[arg(long)]
    levels: Option<usize>,
}

impl QuantizerArgs {
    fn build(&self) -> Result<gradq_core::QuantizerSpec, String> {
        let levels = || self.levels.ok_or_else(|| format!("--levels is required for {}", self.family));
        let desc = match self.family.as_str() {
            "simq" => QuantizerDescriptor::SimQ,
            "simqplus" => QuantizerDescriptor::SimQPlus { k: self.k },
            "cuq" => QuantizerDescriptor::Cuq { levels: levels()? },
            "ratq" => QuantizerDescriptor::Ratq { levels: levels()? },
            "split" => QuantizerDescriptor::Split,
            other => return Err(format!("unknown quantizer family {other:?}")),
        };
        desc.build(self.d, self.p, self.bound)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| "no quantizer".to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<(), String> {
    let text = |e: CliError| e.to_string();
    match command {
        Command::Bounds { d, p, t, diameter, bound, rho } => {
            let args = BoundsArgs { d, p, steps: t, diameter, bound, rho };
            print!("{}", bounds_table(&args).map_err(text)?);
        }
        Command::Run { config, out } => {
            let mut cfg = ExperimentConfig::load(&config).map_err(text)?;
            if let Some(out) = out {
                cfg.out = out;
            }
            let records = run_experiment(&cfg).map_err(text)?;
            write_csv_file(&cfg.out, &records).map_err(text)?;
            let oracle = cfg.instance.build().map_err(|e| e.to_string())?;
            let mean = records.iter().map(|r| r.suboptimality).sum::<f64>() / records.len() as f64;
            println!(
                "{} runs of {:?} on {} ({}), {} bits/step, mean suboptimality {mean:.6}",
                records.len(),
                cfg.algo,
                oracle_name(&cfg),
                describe_domain(oracle.domain()),
                records[0].bits_per_step
            );
            println!("wrote {}", cfg.out.display());
        }
        Command::Alpha0 { quantizer, trials, seed } => {
            let spec = quantizer.build()?;
            let (_, report) = alpha0_report(&spec, trials, seed).map_err(text)?;
            print!("{report}");
        }
        Command::Budget { quantizer } => {
            println!("{}", quantizer.build()?.bit_budget());
        }
    }
    Ok(())
}

fn oracle_name(cfg: &ExperimentConfig) -> String {
    format!("{:?} d={} p={}", cfg.instance.family, cfg.instance.d, cfg.instance.p)
}
