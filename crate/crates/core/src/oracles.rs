//! Stochastic first-order oracles with almost surely bounded outputs
//! (`||g||_q <= B`) and a known optimal value.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::{default_mirror_exponent, Domain, Shape};
use crate::error::{contract, Error, Result};
use crate::norms::{conjugate, dot, lp_norm, recip, within_bound};
use crate::rng::stream;

pub trait Oracle: Send + Sync {
    fn dim(&self) -> usize;
    /// Domain geometry exponent `p`.
    fn p(&self) -> f64;
    fn q(&self) -> f64 {
        conjugate(self.p())
    }
    /// Almost sure bound `B` on `||g||_q`.
    fn bound(&self) -> f64;
    fn domain(&self) -> &Domain;
    /// lp diameter of the domain.
    fn diameter(&self) -> f64 {
        self.domain().diameter(self.p())
    }
    fn value(&self, x: &[f64]) -> f64;
    /// `min f` over the domain.
    fn optimum(&self) -> f64;
    fn sample(&self, x: &[f64], rng: &mut dyn RngCore) -> Vec<f64>;
    /// `E[g(x)]`, a subgradient of `f` at `x`.
    fn mean_subgradient(&self, x: &[f64]) -> Vec<f64>;
}

/// Sign pattern, bias and scale of the two lower-bound constructions.
#[derive(Debug, Clone, PartialEq)]
pub struct HardInstanceParams {
    alpha: Vec<f64>,
    delta: f64,
    diameter: f64,
    bound: f64,
}

impl HardInstanceParams {
    pub fn new(alpha: Vec<i8>, delta: f64, diameter: f64, bound: f64) -> Result<Self> {
        if alpha.is_empty() || alpha.iter().any(|&a| a != 1 && a != -1) {
            return Err(contract("alpha must be a nonempty vector of +-1"));
        }
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(contract(format!("delta must lie in (0, 1/2], got {delta}")));
        }
        for (name, v) in [("diameter", diameter), ("bound", bound)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(contract(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            alpha: alpha.into_iter().map(f64::from).collect(),
            delta,
            diameter,
            bound,
        })
    }

    /// Uniformly random signs drawn from `seed`.
    pub fn random(dim: usize, seed: u64, delta: f64, diameter: f64, bound: f64) -> Result<Self> {
        let mut rng = stream(seed, 0);
        let alpha = (0..dim).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        Self::new(alpha, delta, diameter, bound)
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// The box `||x||_inf <= D / (2 d^(1/p))`.
    pub fn default_domain(&self, p: f64) -> Domain {
        Domain::box_with_diameter(self.dim(), p, self.diameter).expect("validated sizes")
    }

    /// Minimizer over the default box, `-(D / (2 d^(1/p))) alpha`.
    pub fn corner(&self, p: f64) -> Vec<f64> {
        let w = self.diameter / (2.0 * (self.dim() as f64).powf(recip(p)));
        self.alpha.iter().map(|a| -w * a).collect()
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(contract(format!("p must be at least 1, got {p}")));
    }
    Ok(())
}

fn check_domain_dim(domain: &Domain, dim: usize) -> Result<()> {
    if domain.dim != dim {
        return Err(contract(format!(
            "domain has dimension {}, oracle has {dim}",
            domain.dim
        )));
    }
    Ok(())
}

/// Outputs `+-B e_i` with probabilities `(1 +- 2 delta alpha_i) / 2d`.
/// `f(x) = (2 B delta / d) <alpha, x>`.
#[derive(Debug, Clone)]
pub struct PaninskiOracle {
    params: HardInstanceParams,
    p: f64,
    domain: Domain,
    mean: Vec<f64>,
}

impl PaninskiOracle {
    pub fn new(params: HardInstanceParams, p: f64) -> Result<Self> {
        check_p(p)?;
        let domain = params.default_domain(p);
        Self::with_domain(params, p, domain)
    }

    pub fn with_domain(params: HardInstanceParams, p: f64, domain: Domain) -> Result<Self> {
        check_p(p)?;
        check_domain_dim(&domain, params.dim())?;
        let scale = 2.0 * params.bound * params.delta / params.dim() as f64;
        let mean = params.alpha.iter().map(|a| scale * a).collect();
        Ok(Self {
            params,
            p,
            domain,
            mean,
        })
    }

    pub fn params(&self) -> &HardInstanceParams {
        &self.params
    }
}

impl Oracle for PaninskiOracle {
    fn dim(&self) -> usize {
        self.params.dim()
    }

    fn p(&self) -> f64 {
        self.p
    }

    fn bound(&self) -> f64 {
        self.params.bound
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.mean, x)
    }

    fn optimum(&self) -> f64 {
        self.domain.min_linear(&self.mean)
    }

    fn sample(&self, _x: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let d = self.dim();
        let i = rng.random_range(0..d);
        let up = rng.random::<f64>() < (1.0 + 2.0 * self.params.delta * self.params.alpha[i]) / 2.0;
        let mut g = vec![0.0; d];
        g[i] = if up { self.params.bound } else { -self.params.bound };
        g
    }

    fn mean_subgradient(&self, _x: &[f64]) -> Vec<f64> {
        self.mean.clone()
    }
}

/// Coordinates independently `+-B / d^(1/q)` with probabilities
/// `(1 +- 2 delta alpha_i) / 2`. `f(x) = (2 B delta / d^(1/q)) <alpha, x>`.
#[derive(Debug, Clone)]
pub struct BernoulliProductOracle {
    params: HardInstanceParams,
    p: f64,
    domain: Domain,
    level: f64,
    mean: Vec<f64>,
}

impl BernoulliProductOracle {
    pub fn new(params: HardInstanceParams, p: f64) -> Result<Self> {
        check_p(p)?;
        let domain = params.default_domain(p);
        Self::with_domain(params, p, domain)
    }

    pub fn with_domain(params: HardInstanceParams, p: f64, domain: Domain) -> Result<Self> {
        check_p(p)?;
        check_domain_dim(&domain, params.dim())?;
        let level = params.bound / (params.dim() as f64).powf(recip(conjugate(p)));
        let mean = params
            .alpha
            .iter()
            .map(|a| level * 2.0 * params.delta * a)
            .collect();
        Ok(Self {
            params,
            p,
            domain,
            level,
            mean,
        })
    }

    pub fn params(&self) -> &HardInstanceParams {
        &self.params
    }

    /// Magnitude `B / d^(1/q)` of every output coordinate.
    pub fn level(&self) -> f64 {
        self.level
    }
}

impl Oracle for BernoulliProductOracle {
    fn dim(&self) -> usize {
        self.params.dim()
    }

    fn p(&self) -> f64 {
        self.p
    }

    fn bound(&self) -> f64 {
        self.params.bound
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.mean, x)
    }

    fn optimum(&self) -> f64 {
        self.domain.min_linear(&self.mean)
    }

    fn sample(&self, _x: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let two_delta = 2.0 * self.params.delta;
        self.params
            .alpha
            .iter()
            .map(|a| {
                if rng.random::<f64>() < (1.0 + two_delta * a) / 2.0 {
                    self.level
                } else {
                    -self.level
                }
            })
            .collect()
    }

    fn mean_subgradient(&self, _x: &[f64]) -> Vec<f64> {
        self.mean.clone()
    }
}

/// `f(x) = (1/n) sum_i |<a_i, x> - b_i|`; a sample is `sign(<a_i, x> - b_i) a_i`
/// for a uniform row `i`, with `sign(0) = 0`.
#[derive(Debug, Clone)]
pub struct FiniteSumAbsOracle {
    rows: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    p: f64,
    bound: f64,
    domain: Domain,
    optimum: f64,
}

impl FiniteSumAbsOracle {
    /// Largest supported dimension; `f*` comes from a reference solver.
    pub const MAX_DIM: usize = 32;

    pub fn new(
        rows: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        p: f64,
        bound: f64,
        domain: Domain,
    ) -> Result<Self> {
        check_p(p)?;
        let d = domain.dim;
        if rows.is_empty() || rows.len() != offsets.len() {
            return Err(contract("need one offset per row and at least one row"));
        }
        if d == 0 || d > Self::MAX_DIM {
            return Err(contract(format!("finite-sum instances support 1 <= d <= 32, got {d}")));
        }
        if matches!(domain.shape, Shape::LpBall { .. }) {
            return Err(contract("finite-sum instances need a box or l2-ball domain"));
        }
        let q = conjugate(p);
        for (i, a) in rows.iter().enumerate() {
            if a.len() != d {
                return Err(contract(format!("row {i} has length {}", a.len())));
            }
            let n = lp_norm(a, q);
            if !within_bound(n, bound) {
                return Err(contract(format!("row {i} has l{q} norm {n} > {bound}")));
            }
        }
        let mut oracle = Self {
            rows,
            offsets,
            p,
            bound,
            domain,
            optimum: 0.0,
        };
        oracle.optimum = oracle.reference_minimum();
        Ok(oracle)
    }

    /// Rows with Gaussian directions scaled to `||a_i||_q = B`, and offsets
    /// `b = A x0` for a random interior `x0`, so that `f* = 0`.
    pub fn random(n: usize, p: f64, bound: f64, domain: Domain, seed: u64) -> Result<Self> {
        let d = domain.dim;
        let q = conjugate(p);
        let mut rng = stream(seed, 0);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let s = bound / lp_norm(&g, q);
                g.iter().map(|v| v * s).collect()
            })
            .collect();
        let target: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let target = domain.project(&target.iter().map(|v| v * 0.5 * size(&domain)).collect::<Vec<_>>());
        let offsets = rows.iter().map(|a| dot(a, &target)).collect();
        Self::new(rows, offsets, p, bound, domain)
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for (a, b) in self.rows.iter().zip(&self.offsets) {
            let s = sign(dot(a, x) - b);
            g.iter_mut().zip(a).for_each(|(gi, ai)| *gi += s * ai);
        }
        let n = self.rows.len() as f64;
        g.iter_mut().for_each(|v| *v /= n);
        g
    }

    /// Restarted projected subgradient method with best-iterate tracking.
    fn reference_minimum(&self) -> f64 {
        let mut best_x = vec![0.0; self.domain.dim];
        let mut best = self.value(&best_x);
        let mut radius = self.domain.diameter(2.0);
        for _ in 0..8 {
            let mut x = best_x.clone();
            let iters = 4000;
            for t in 1..=iters {
                let g = self.subgradient(&x);
                let gn = lp_norm(&g, 2.0);
                if gn == 0.0 {
                    return self.value(&x);
                }
                let eta = radius / (gn * (t as f64).sqrt());
                let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - eta * b).collect();
                x = self.domain.project(&y);
                let v = self.value(&x);
                if v < best {
                    best = v;
                    best_x = x.clone();
                }
            }
            radius /= 4.0;
        }
        best
    }
}

fn size(domain: &Domain) -> f64 {
    match domain.shape {
        Shape::Box { half_width } => half_width,
        Shape::L2Ball { radius } | Shape::LpBall { radius, .. } => {
            radius / (domain.dim as f64).sqrt()
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Oracle for FiniteSumAbsOracle {
    fn dim(&self) -> usize {
        self.domain.dim
    }

    fn p(&self) -> f64 {
        self.p
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn value(&self, x: &[f64]) -> f64 {
        let s: f64 = self
            .rows
            .iter()
            .zip(&self.offsets)
            .map(|(a, b)| (dot(a, x) - b).abs())
            .sum();
        s / self.rows.len() as f64
    }

    fn optimum(&self) -> f64 {
        self.optimum
    }

    fn sample(&self, x: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let i = rng.random_range(0..self.rows.len());
        let s = sign(dot(&self.rows[i], x) - self.offsets[i]);
        self.rows[i].iter().map(|a| s * a).collect()
    }

    fn mean_subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.subgradient(x)
    }
}

/// Deterministic oracle for `f(x) = <g, x>`.
#[derive(Debug, Clone)]
pub struct LinearOracle {
    gradient: Vec<f64>,
    p: f64,
    bound: f64,
    domain: Domain,
}

impl LinearOracle {
    pub fn new(gradient: Vec<f64>, p: f64, bound: f64, domain: Domain) -> Result<Self> {
        check_p(p)?;
        check_domain_dim(&domain, gradient.len())?;
        let n = lp_norm(&gradient, conjugate(p));
        if !within_bound(n, bound) {
            return Err(contract(format!("gradient norm {n} exceeds {bound}")));
        }
        Ok(Self {
            gradient,
            p,
            bound,
            domain,
        })
    }
}

impl Oracle for LinearOracle {
    fn dim(&self) -> usize {
        self.gradient.len()
    }

    fn p(&self) -> f64 {
        self.p
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.gradient, x)
    }

    fn optimum(&self) -> f64 {
        self.domain.min_linear(&self.gradient)
    }

    fn sample(&self, _x: &[f64], _rng: &mut dyn RngCore) -> Vec<f64> {
        self.gradient.clone()
    }

    fn mean_subgradient(&self, _x: &[f64]) -> Vec<f64> {
        self.gradient.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleFamily {
    Paninski,
    Bernoulli,
    FiniteSum,
}

/// Which constraint set an instance is posed on. All choices have lp
/// diameter `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainChoice {
    #[default]
    Box,
    L2Ball,
    /// lp' ball for mirror descent; `p'` from `mirror_exponent` or the default.
    LpBall,
}

fn default_delta() -> f64 {
    0.5
}

/// Serializable description of an oracle instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDescriptor {
    pub family: OracleFamily,
    pub d: usize,
    pub p: f64,
    /// Almost sure gradient bound `B`.
    pub bound: f64,
    /// lp diameter `D` of the domain.
    pub diameter: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Seed for the sign vector, or for the rows of a finite-sum instance.
    #[serde(default)]
    pub alpha_seed: u64,
    /// Number of rows of a finite-sum instance.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub domain: DomainChoice,
    #[serde(default)]
    pub mirror_exponent: Option<f64>,
}

impl InstanceDescriptor {
    pub fn build_domain(&self) -> Result<Domain> {
        match self.domain {
            DomainChoice::Box => Domain::box_with_diameter(self.d, self.p, self.diameter),
            DomainChoice::L2Ball => Domain::ball_with_diameter(self.d, self.p, 2.0, self.diameter),
            DomainChoice::LpBall => {
                let e = self
                    .mirror_exponent
                    .unwrap_or_else(|| default_mirror_exponent(self.p, self.d));
                Domain::ball_with_diameter(self.d, self.p, e, self.diameter)
            }
        }
    }

    pub fn build(&self) -> Result<Box<dyn Oracle>> {
        self.build_inner().map_err(to_config)
    }

    fn build_inner(&self) -> Result<Box<dyn Oracle>> {
        let domain = self.build_domain()?;
        let params = || HardInstanceParams::random(self.d, self.alpha_seed, self.delta, self.diameter, self.bound);
        let oracle: Box<dyn Oracle> = match self.family {
            OracleFamily::Paninski => Box::new(PaninskiOracle::with_domain(params()?, self.p, domain)?),
            OracleFamily::Bernoulli => {
                Box::new(BernoulliProductOracle::with_domain(params()?, self.p, domain)?)
            }
            OracleFamily::FiniteSum => {
                let n = self
                    .n
                    .ok_or_else(|| Error::Config("finite_sum instance needs n".into()))?;
                Box::new(FiniteSumAbsOracle::random(n, self.p, self.bound, domain, self.alpha_seed)?)
            }
        };
        Ok(oracle)
    }
}

fn to_config(e: Error) -> Error {
    match e {
        Error::Contract(m) => Error::Config(m),
        other => other,
    }
}
