//! Projected subgradient descent (`p >= 2`) and stochastic mirror descent
//! (`1 <= p < 2`), each optionally routing every oracle output through a
//! quantizer before the update.

use crate::domain::{Domain, Shape};
use crate::error::{contract, Error, Result};
use crate::norms::{conjugate, lp_norm};
use crate::oracles::Oracle;
use crate::quantizers::QuantizerSpec;
use crate::rng::{stream, ORACLE_STREAM, QUANTIZER_STREAM};

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// `(1/T) sum_{t=1..T} x_t`.
    pub average: Vec<f64>,
    pub bits_per_step: usize,
    pub total_bits: u64,
    /// `f(average) - f*`.
    pub suboptimality: f64,
    pub seed: u64,
    pub step_size: f64,
    pub steps: u64,
}

/// The mirror map `psi(x) = ||x||_p'^2 / (p' - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorMap {
    exponent: f64,
    dual: f64,
}

impl MirrorMap {
    pub fn new(exponent: f64) -> Result<Self> {
        if !(exponent > 1.0 && exponent <= 2.0) {
            return Err(contract(format!("mirror exponent must lie in (1, 2], got {exponent}")));
        }
        Ok(Self {
            exponent,
            dual: conjugate(exponent),
        })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn dual_exponent(&self) -> f64 {
        self.dual
    }

    /// `(2/(p'-1)) sign(x_i) |x_i|^(p'-1) ||x||_p'^(2-p')`.
    pub fn grad_psi(&self, x: &[f64]) -> Vec<f64> {
        let n = lp_norm(x, self.exponent);
        if n == 0.0 {
            return vec![0.0; x.len()];
        }
        let c = 2.0 / (self.exponent - 1.0) * n;
        x.iter()
            .map(|v| c * (v / n).signum() * (v.abs() / n).powf(self.exponent - 1.0))
            .map(zero_signed)
            .collect()
    }

    /// Inverse of [`grad_psi`](Self::grad_psi):
    /// `((p'-1)/2) sign(z_i) |z_i|^(q'-1) ||z||_q'^(2-q')`.
    pub fn grad_psi_star(&self, z: &[f64]) -> Vec<f64> {
        let n = lp_norm(z, self.dual);
        if n == 0.0 {
            return vec![0.0; z.len()];
        }
        let c = (self.exponent - 1.0) / 2.0 * n;
        z.iter()
            .map(|v| c * v.signum() * (v.abs() / n).powf(self.dual - 1.0))
            .map(zero_signed)
            .collect()
    }
}

fn zero_signed(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

/// Bregman projection onto `{||x||_p' <= radius}` for the mirror map with the
/// same exponent: radial scaling.
pub fn bregman_project(y: &[f64], radius: f64, exponent: f64) -> Vec<f64> {
    let n = lp_norm(y, exponent);
    if n <= radius {
        y.to_vec()
    } else {
        y.iter().map(|v| v * (radius / n)).collect()
    }
}

fn check_quantizer(oracle: &dyn Oracle, quantizer: Option<&QuantizerSpec>) -> Result<()> {
    let Some(spec) = quantizer else {
        return Ok(());
    };
    if spec.dim() != oracle.dim() {
        return Err(Error::Config(format!(
            "quantizer dimension {} differs from oracle dimension {}",
            spec.dim(),
            oracle.dim()
        )));
    }
    let (b, q) = spec.input_ball();
    let same_q = q == oracle.q() || (q - oracle.q()).abs() <= 1e-12 * q.abs();
    if !same_q {
        return Err(Error::Config(format!(
            "{} quantizer accepts l{q} inputs, oracle outputs are bounded in l{}",
            spec.family(),
            oracle.q()
        )));
    }
    if (b - oracle.bound()).abs() > 1e-12 * b.abs() {
        return Err(Error::Config(format!(
            "quantizer bound {b} differs from oracle bound {}",
            oracle.bound()
        )));
    }
    Ok(())
}

fn step_size(oracle: &dyn Oracle, quantizer: Option<&QuantizerSpec>, steps: u64, c: f64) -> Result<f64> {
    if steps == 0 {
        return Err(Error::Config("T must be at least 1".into()));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Config(format!("step constant must be positive, got {c}")));
    }
    let alpha0 = quantizer.map_or(oracle.bound(), |q| q.analytic_alpha0());
    Ok(c * oracle.diameter() / (alpha0 * (steps as f64).sqrt()))
}

/// Shared loop: `update(x, g_hat)` returns the next iterate.
fn run(
    oracle: &dyn Oracle,
    quantizer: Option<&QuantizerSpec>,
    steps: u64,
    eta: f64,
    seed: u64,
    mut update: impl FnMut(&[f64], &[f64]) -> Vec<f64>,
) -> Result<RunResult> {
    let d = oracle.dim();
    let mut orng = stream(seed, ORACLE_STREAM);
    let mut qrng = stream(seed, QUANTIZER_STREAM);
    let mut x = vec![0.0; d];
    let mut sum = vec![0.0; d];
    for _ in 0..steps {
        let g = oracle.sample(&x, &mut orng);
        let g = match quantizer {
            Some(q) => q.round_trip(&g, &mut qrng)?,
            None => g,
        };
        let scaled: Vec<f64> = g.iter().map(|v| eta * v).collect();
        x = update(&x, &scaled);
        sum.iter_mut().zip(&x).for_each(|(s, v)| *s += v);
    }
    let average = oracle.domain().project(&sum.iter().map(|s| s / steps as f64).collect::<Vec<_>>());
    let bits_per_step = quantizer.map_or(0, |q| q.bit_budget());
    Ok(RunResult {
        suboptimality: oracle.value(&average) - oracle.optimum(),
        average,
        bits_per_step,
        total_bits: bits_per_step as u64 * steps,
        seed,
        step_size: eta,
        steps,
    })
}

/// Projected stochastic subgradient descent from `x_0 = 0` with
/// `eta = c D / (alpha0 sqrt T)`, `alpha0` the quantizer's analytic bound
/// (or `B` without a quantizer).
pub fn psgd_run(
    oracle: &dyn Oracle,
    quantizer: Option<&QuantizerSpec>,
    steps: u64,
    step_c: f64,
    seed: u64,
) -> Result<RunResult> {
    if !(oracle.p() >= 2.0) {
        return Err(Error::Config(format!("PSGD needs p >= 2, oracle has p = {}", oracle.p())));
    }
    if matches!(oracle.domain().shape, Shape::LpBall { .. }) {
        return Err(Error::Config("PSGD needs a box or l2-ball domain".into()));
    }
    check_quantizer(oracle, quantizer)?;
    let eta = step_size(oracle, quantizer, steps, step_c)?;
    let domain = *oracle.domain();
    run(oracle, quantizer, steps, eta, seed, |x, g| {
        let y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
        domain.project(&y)
    })
}

/// Stochastic mirror descent with `psi = ||x||_p'^2 / (p' - 1)`, where `p'` is
/// the exponent of the oracle's lp'-ball domain.
pub fn smd_run(
    oracle: &dyn Oracle,
    quantizer: Option<&QuantizerSpec>,
    steps: u64,
    step_c: f64,
    seed: u64,
) -> Result<RunResult> {
    let p = oracle.p();
    if !(1.0..2.0).contains(&p) {
        return Err(Error::Config(format!("SMD needs 1 <= p < 2, oracle has p = {p}")));
    }
    let domain: Domain = *oracle.domain();
    let (radius, exponent) = match domain.shape {
        Shape::LpBall { radius, exponent } => (radius, exponent),
        Shape::L2Ball { radius } => (radius, 2.0),
        Shape::Box { .. } => {
            return Err(Error::Config("SMD needs an lp'-ball domain".into()));
        }
    };
    let map = MirrorMap::new(exponent)?;
    check_quantizer(oracle, quantizer)?;
    let eta = step_size(oracle, quantizer, steps, step_c)?;
    run(oracle, quantizer, steps, eta, seed, |x, g| {
        let z: Vec<f64> = map.grad_psi(x).iter().zip(g).map(|(a, b)| a - b).collect();
        bregman_project(&map.grad_psi_star(&z), radius, exponent)
    })
}
