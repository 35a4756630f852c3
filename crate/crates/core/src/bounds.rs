//! Closed-form precision and error bounds, and a Monte Carlo estimate of a
//! quantizer's worst-case root second moment `alpha_0`.
//!
//! `log` is base 2 throughout; `ln` and `ln*` are natural. The absolute
//! constants `c0 <= c1` of the minimax rates are unknown, so every function
//! that needs them takes them (or their ratio `rho = c0 / c1`) as arguments.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{contract, Result};
use crate::norms::{ceil_snap, lp_norm, recip};
use crate::quantizers::QuantizerSpec;

/// Number of times `ln` must be applied to `a` before the value is at most 1.
pub fn lnstar(a: f64) -> Result<u32> {
    if !(a > 0.0) || a.is_nan() {
        return Err(contract(format!("ln* needs a positive argument, got {a}")));
    }
    let mut x = a;
    let mut n = 0;
    while x > 1.0 {
        x = x.ln();
        n += 1;
    }
    Ok(n)
}

/// `Delta2 = ceil(log(1 + ln*(d/3)))`.
pub fn delta2(d: usize) -> Result<u32> {
    if d == 0 {
        return Err(contract("Delta2 needs d >= 1"));
    }
    let l = lnstar(d as f64 / 3.0)?;
    Ok(ceil_snap((1.0 + l as f64).log2()) as u32)
}

/// `Delta1 = ceil(log(2 + sqrt(18 + 6 ln Delta2) d^(1/2 - 1/q)))`.
///
/// When `Delta2 = 0` the logarithm is taken of 1 instead.
pub fn delta1(d: usize, q: f64) -> Result<u32> {
    if !(q >= 2.0) {
        return Err(contract(format!("Delta1 needs q >= 2, got {q}")));
    }
    let d2 = delta2(d)?.max(1) as f64;
    let inner = 2.0 + (18.0 + 6.0 * d2.ln()).sqrt() * (d as f64).powf(0.5 - recip(q));
    Ok(ceil_snap(inner.log2()) as u32)
}

/// Upper bound on the minimum precision `r*(T, p)` in bits.
pub fn r_star_upper(d: usize, p: f64) -> Result<f64> {
    check_d(d)?;
    let df = d as f64;
    if p >= 2.0 {
        let e2 = 2.0 * std::f64::consts::E;
        let a = 2.0 * recip(p);
        Ok(df.powf(a) * (e2 * df.powf(1.0 - a) + e2).log2())
    } else if p >= 1.0 {
        let q = crate::norms::conjugate(p);
        let d1 = delta1(d, q)? as f64;
        let cuq = ceil_snap((2.0 * 2f64.sqrt() * d1.powf(recip(q)) + 2.0).log2());
        Ok(df * (cuq + 3.0) + delta2(d)? as f64)
    } else {
        Err(contract(format!("p must be at least 1, got {p}")))
    }
}

/// Lower bound on `r*(T, p)` with `rho = c0 / c1`.
pub fn r_star_lower(d: usize, p: f64, rho: f64) -> Result<f64> {
    check_d(d)?;
    check_p(p)?;
    let df = d as f64;
    let c = rho / 4.0;
    if p >= 2.0 {
        let a = (c * df.powf(recip(p))).powi(2);
        let b = 2.0 * (c * df.sqrt()).log2();
        Ok(a.max(b))
    } else {
        Ok((c / df.log2().sqrt()).powi(2) * df)
    }
}

/// The benchmark accuracy `U(T, p)`: four times the unquantized upper rate.
pub fn benchmark_u(t: u64, p: f64, d: usize, diameter: f64, bound: f64, c1: f64) -> Result<f64> {
    Ok(4.0 * upper_rate(t, p, d, diameter, bound, c1)?)
}

/// Unquantized minimax bracket `(lower, upper)` with constants `c0 <= c1`.
pub fn baseline_rate(
    t: u64,
    p: f64,
    d: usize,
    diameter: f64,
    bound: f64,
    c0: f64,
    c1: f64,
) -> Result<(f64, f64)> {
    let upper = upper_rate(t, p, d, diameter, bound, c1)?;
    let base = diameter * bound / (t as f64).sqrt();
    let lower = if p >= 2.0 {
        c0 * (d as f64).powf(0.5 - recip(p)) * base
    } else {
        c0 * base
    };
    Ok((lower, upper))
}

fn upper_rate(t: u64, p: f64, d: usize, diameter: f64, bound: f64, c1: f64) -> Result<f64> {
    check_p(p)?;
    if t == 0 || d == 0 {
        return Err(contract("need T >= 1 and d >= 1"));
    }
    let base = c1 * diameter * bound / (t as f64).sqrt();
    Ok(if p >= 2.0 {
        (d as f64).powf(0.5 - recip(p)) * base
    } else {
        (d as f64).log2().sqrt() * base
    })
}

/// Lower bound on the error of any protocol with `r`-bit fixed-length
/// quantization of the oracle output.
pub fn error_lower(
    t: u64,
    r: u32,
    p: f64,
    d: usize,
    diameter: f64,
    bound: f64,
    c0: f64,
) -> Result<f64> {
    check_p(p)?;
    if r == 0 || t == 0 || d == 0 {
        return Err(contract("need r, T, d >= 1"));
    }
    let df = d as f64;
    let base = c0 * diameter * bound / (t as f64).sqrt();
    let by_r = base * (df / df.min(r as f64)).sqrt();
    if p >= 2.0 {
        let by_pow = base * df.powf(0.5 - recip(p)) * (df / df.min(2f64.powi(r.min(1023) as i32))).sqrt();
        Ok(by_pow.max(by_r))
    } else {
        Ok(by_r)
    }
}

fn check_d(d: usize) -> Result<()> {
    if d < 2 {
        return Err(contract(format!("precision bounds need d >= 2, got {d}")));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(contract(format!("p must be at least 1, got {p}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alpha0Estimate {
    /// Largest empirical `sqrt(E ||Q(Y)||^2)` over the probe inputs.
    pub estimate: f64,
    /// Standard error of `estimate` (delta method).
    pub std_error: f64,
    /// The quantizer's analytic bound.
    pub analytic: f64,
}

/// Probe inputs on the boundary of the quantizer's input ball: scaled basis
/// vectors, uniform-magnitude sign vectors, and Gaussian directions scaled to
/// norm `B`.
pub fn alpha0_probes<R: Rng + ?Sized>(spec: &QuantizerSpec, rng: &mut R) -> Vec<Vec<f64>> {
    let d = spec.dim();
    let (b, q) = spec.input_ball();
    let mut probes = Vec::new();
    for i in [0, d / 2, d - 1] {
        let mut e = vec![0.0; d];
        e[i] = b;
        if !probes.contains(&e) {
            probes.push(e);
        }
    }
    let flat = b / (d as f64).powf(recip(q));
    probes.push(vec![flat; d]);
    probes.push((0..d).map(|i| if i % 2 == 0 { flat } else { -flat }).collect());
    for _ in 0..3 {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = lp_norm(&g, q);
        probes.push(g.iter().map(|x| x * b / n).collect());
    }
    probes
}

/// Monte Carlo lower estimate of `alpha_0(Q)` over [`alpha0_probes`], with
/// `trials` quantizations per probe.
pub fn alpha0_estimate<R: Rng + ?Sized>(
    spec: &QuantizerSpec,
    trials: usize,
    rng: &mut R,
) -> Result<Alpha0Estimate> {
    if trials == 0 {
        return Err(contract("alpha0 estimate needs at least one trial"));
    }
    let norm = spec.alpha0_norm();
    let mut best = Alpha0Estimate {
        estimate: 0.0,
        std_error: 0.0,
        analytic: spec.analytic_alpha0(),
    };
    for y in alpha0_probes(spec, rng) {
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..trials {
            let z = spec.round_trip(&y, rng)?;
            let m = lp_norm(&z, norm).powi(2);
            s += m;
            s2 += m * m;
        }
        let n = trials as f64;
        let mean = s / n;
        let var = (s2 / n - mean * mean).max(0.0) / n;
        let est = mean.sqrt();
        if est > best.estimate {
            best.estimate = est;
            best.std_error = if est > 0.0 { var.sqrt() / (2.0 * est) } else { 0.0 };
        }
    }
    Ok(best)
}
