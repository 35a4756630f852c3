//! Experiment configuration, seeded execution and CSV output for the
//! `gradq` command-line tool.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gradq_core::bounds::{
    alpha0_estimate, baseline_rate, benchmark_u, error_lower, r_star_lower, r_star_upper,
    Alpha0Estimate,
};
use gradq_core::oracles::InstanceDescriptor;
use gradq_core::rng::{stream, GENERATOR};
use gradq_core::{psgd_run, smd_run, Domain, QuantizerDescriptor, QuantizerSpec, Shape};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Core(#[from] gradq_core::Error),
    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Psgd,
    Smd,
}

fn default_step_c() -> f64 {
    1.0
}

fn default_timing() -> bool {
    true
}

fn default_quantizer() -> QuantizerDescriptor {
    QuantizerDescriptor::None
}

/// A single experiment: one instance, one quantizer, one algorithm, many seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algo: Algo,
    #[serde(rename = "T")]
    pub steps: u64,
    pub seeds: Vec<u64>,
    #[serde(default = "default_step_c")]
    pub step_c: f64,
    /// CSV destination, relative to the config file.
    pub out: PathBuf,
    /// Record wall time per run. Off makes the CSV reproducible byte for byte.
    #[serde(default = "default_timing")]
    pub timing: bool,
    pub instance: InstanceDescriptor,
    #[serde(default = "default_quantizer")]
    pub quantizer: QuantizerDescriptor,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut config = Self::from_toml(&text)?;
        if config.out.is_relative() {
            if let Some(dir) = path.parent() {
                config.out = dir.join(&config.out);
            }
        }
        Ok(config)
    }

    /// Check every constraint and report all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let inst = &self.instance;
        if self.steps == 0 {
            errors.push("T must be at least 1".to_string());
        }
        if self.seeds.is_empty() {
            errors.push("seeds must list at least one seed".to_string());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            errors.push("seeds must be distinct".to_string());
        }
        if !(self.step_c.is_finite() && self.step_c > 0.0) {
            errors.push(format!("step_c must be positive, got {}", self.step_c));
        }
        if inst.d == 0 {
            errors.push("instance.d must be at least 1".to_string());
        }
        if !(inst.p >= 1.0) {
            errors.push(format!("instance.p must be at least 1, got {}", inst.p));
        }
        for (name, v) in [("bound", inst.bound), ("diameter", inst.diameter)] {
            if !(v.is_finite() && v > 0.0) {
                errors.push(format!("instance.{name} must be positive, got {v}"));
            }
        }
        if !(inst.delta > 0.0 && inst.delta <= 0.5) {
            errors.push(format!("instance.delta must lie in (0, 1/2], got {}", inst.delta));
        }
        match self.algo {
            Algo::Psgd if !(inst.p >= 2.0) => {
                errors.push(format!("algo psgd needs instance.p >= 2, got {}", inst.p))
            }
            Algo::Smd if !(1.0..2.0).contains(&inst.p) => {
                errors.push(format!("algo smd needs 1 <= instance.p < 2, got {}", inst.p))
            }
            _ => {}
        }
        let lp_ball = inst.domain == gradq_core::oracles::DomainChoice::LpBall;
        match self.algo {
            Algo::Psgd if lp_ball => errors.push("algo psgd needs a box or l2_ball domain".into()),
            Algo::Smd if inst.domain == gradq_core::oracles::DomainChoice::Box => {
                errors.push("algo smd needs an lp_ball or l2_ball domain".into())
            }
            _ => {}
        }
        if errors.is_empty() {
            if let Err(e) = inst.build() {
                errors.push(format!("instance: {e}"));
            }
            if let Err(e) = self.quantizer.build(inst.d, inst.p, inst.bound) {
                errors.push(format!("quantizer: {e}"));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(errors))
        }
    }

    /// First 16 hex digits of the SHA-256 of the config, without the output path.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = PathBuf::new();
        let text = toml::to_string(&canonical).expect("config serializes");
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    #[serde(rename = "T")]
    pub steps: u64,
    pub bits_per_step: usize,
    pub total_bits: u64,
    pub suboptimality: f64,
    pub wall_time: f64,
}

/// One record per seed, in the order the seeds are listed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let oracle = config.instance.build()?;
    let quantizer = config
        .quantizer
        .build(config.instance.d, config.instance.p, config.instance.bound)?;
    let hash = config.hash();
    config
        .seeds
        .par_iter()
        .map(|&seed| {
            let start = Instant::now();
            let r = match config.algo {
                Algo::Psgd => psgd_run(oracle.as_ref(), quantizer.as_ref(), config.steps, config.step_c, seed),
                Algo::Smd => smd_run(oracle.as_ref(), quantizer.as_ref(), config.steps, config.step_c, seed),
            }?;
            Ok(RunRecord {
                config_hash: hash.clone(),
                seed,
                steps: r.steps,
                bits_per_step: r.bits_per_step,
                total_bits: r.total_bits,
                suboptimality: r.suboptimality,
                wall_time: if config.timing { start.elapsed().as_secs_f64() } else { 0.0 },
            })
        })
        .collect()
}

/// CSV with a `# generator:` comment line, then the header and one row per record.
pub fn write_csv<W: Write>(mut out: W, records: &[RunRecord]) -> Result<()> {
    writeln!(out, "# generator: {GENERATOR}").map_err(csv::Error::from)?;
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_csv_file(path: &Path, records: &[RunRecord]) -> Result<()> {
    let io = |source| CliError::Io {
        path: path.to_owned(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let file = std::fs::File::create(path).map_err(io)?;
    write_csv(std::io::BufWriter::new(file), records)
}

/// Parameters of the `bounds` table.
#[derive(Debug, Clone, Copy)]
pub struct BoundsArgs {
    pub d: usize,
    pub p: f64,
    pub steps: u64,
    pub diameter: f64,
    pub bound: f64,
    pub rho: f64,
}

/// Precision bounds, benchmark accuracy and the error lower bound over a sweep
/// of precisions, with `c1 = 1` and `c0 = rho`.
pub fn bounds_table(a: &BoundsArgs) -> Result<String> {
    let (d, p, t) = (a.d, a.p, a.steps);
    let mut s = String::new();
    let upper = r_star_upper(d, p)?;
    let lower = r_star_lower(d, p, a.rho)?;
    let u = benchmark_u(t, p, d, a.diameter, a.bound, 1.0)?;
    let (lo, hi) = baseline_rate(t, p, d, a.diameter, a.bound, a.rho, 1.0)?;
    writeln!(s, "d = {d}, p = {p}, T = {t}, D = {}, B = {}, c0/c1 = {}", a.diameter, a.bound, a.rho).ok();
    writeln!(s, "r* upper (bits)     {upper:.4}").ok();
    writeln!(s, "r* lower (bits)     {lower:.4}").ok();
    writeln!(s, "U(T, p)             {u:.6}").ok();
    writeln!(s, "unquantized rate    [{lo:.6}, {hi:.6}]").ok();
    writeln!(s, "r\terror lower bound").ok();
    let mut r = 1u32;
    let stop = (upper.ceil() as u32).max(2 * (d as f64).log2().ceil() as u32).max(2);
    loop {
        writeln!(s, "{r}\t{:.6}", error_lower(t, r, p, d, a.diameter, a.bound, a.rho)?).ok();
        if r >= stop {
            break;
        }
        r = (r * 2).min(stop);
    }
    Ok(s)
}

/// `alpha_0` estimate for a quantizer, as printed by the `alpha0` command.
pub fn alpha0_report(spec: &QuantizerSpec, trials: usize, seed: u64) -> Result<(Alpha0Estimate, String)> {
    let mut rng = stream(seed, 0);
    let e = alpha0_estimate(spec, trials, &mut rng)?;
    let text = format!(
        "{} d={} bits={}\nestimate  {:.6} (se {:.2e})\nanalytic  {:.6}\n",
        spec.family(),
        spec.dim(),
        spec.bit_budget(),
        e.estimate,
        e.std_error,
        e.analytic
    );
    Ok((e, text))
}

/// Describe the domain in one line, for the `run` summary.
pub fn describe_domain(domain: &Domain) -> String {
    match domain.shape {
        Shape::Box { half_width } => format!("box, half-width {half_width:.4}"),
        Shape::L2Ball { radius } => format!("l2 ball, radius {radius:.4}"),
        Shape::LpBall { radius, exponent } => format!("l{exponent:.4} ball, radius {radius:.4}"),
    }
}
