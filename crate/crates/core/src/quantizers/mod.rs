//! Fixed-length unbiased quantizers.
//!
//! Each family has a parameter spec with `encode`/`decode` methods;
//! [`QuantizerSpec`] wraps them for code that is generic over the family.
//! Encoders reject inputs outside the admissible norm ball instead of
//! clipping, since clipping would bias the output.

mod cuq;
mod ratq;
mod simq;
mod simqplus;
mod split;

pub use cuq::CuqSpec;
pub use ratq::{RatqOutcome, RatqSpec};
pub use simq::SimQSpec;
pub use simqplus::{default_repetitions, SimQPlusOutcome, SimQPlusSpec};
pub use split::{SplitOutcome, SplitSpec};

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::bitcodec::BitMessage;
use crate::error::{Error, Result};
use crate::norms::{conjugate, lp_norm, within_bound};
use crate::rotation::RotationSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    SimQ,
    SimQPlus,
    Cuq,
    Ratq,
    Split,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::SimQ => "simq",
            Family::SimQPlus => "simqplus",
            Family::Cuq => "cuq",
            Family::Ratq => "ratq",
            Family::Split => "split",
        })
    }
}

/// Encoder output. `payload.width()` always equals the quantizer's bit budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedMessage {
    pub family: Family,
    pub payload: BitMessage,
    /// Shared rotation seed for RATQ and split messages. Not counted in the budget.
    pub seed: Option<RotationSeed>,
}

impl QuantizedMessage {
    fn expect(&self, family: Family, width: usize) -> Result<()> {
        if self.family != family {
            return Err(Error::Corrupt(format!(
                "{} message handed to the {family} decoder",
                self.family
            )));
        }
        if self.payload.width() != width {
            return Err(Error::Corrupt(format!(
                "{family} message has {} bits, spec expects {width}",
                self.payload.width()
            )));
        }
        Ok(())
    }
}

/// A real vector together with the lq-norm ball it is promised to lie in.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    values: Vec<f64>,
    bound: f64,
    norm_index: f64,
}

impl GradientVector {
    /// Checks `||values||_q <= bound` up to the quantizer-entry tolerance.
    pub fn new(values: Vec<f64>, bound: f64, norm_index: f64) -> Result<Self> {
        check_admissible(&values, bound, norm_index)?;
        Ok(Self {
            values,
            bound,
            norm_index,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn norm_index(&self) -> f64 {
        self.norm_index
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

pub(crate) fn check_admissible(y: &[f64], bound: f64, q: f64) -> Result<()> {
    if y.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("non-finite coordinate".into()));
    }
    let n = lp_norm(y, q);
    if !within_bound(n, bound) {
        return Err(Error::Input(format!("l{q} norm {n} exceeds bound {bound}")));
    }
    Ok(())
}

pub(crate) fn check_dim(y: &[f64], dim: usize) -> Result<()> {
    if y.len() != dim {
        return Err(Error::Input(format!(
            "vector of length {} for a {dim}-dimensional quantizer",
            y.len()
        )));
    }
    Ok(())
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Contract(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

/// Any of the quantizer families behind one interface.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantizerSpec {
    SimQ(SimQSpec),
    SimQPlus(SimQPlusSpec),
    Cuq(CuqSpec),
    Ratq(RatqSpec),
    Split(SplitSpec),
}

impl QuantizerSpec {
    pub fn family(&self) -> Family {
        match self {
            Self::SimQ(_) => Family::SimQ,
            Self::SimQPlus(_) => Family::SimQPlus,
            Self::Cuq(_) => Family::Cuq,
            Self::Ratq(_) => Family::Ratq,
            Self::Split(_) => Family::Split,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::SimQ(s) => s.dim,
            Self::SimQPlus(s) => s.dim,
            Self::Cuq(s) => s.dim,
            Self::Ratq(s) => s.dim,
            Self::Split(s) => s.dim,
        }
    }

    /// Exact message width in bits.
    pub fn bit_budget(&self) -> usize {
        match self {
            Self::SimQ(s) => s.width(),
            Self::SimQPlus(s) => s.width(),
            Self::Cuq(s) => s.width(),
            Self::Ratq(s) => s.width(),
            Self::Split(s) => s.width(),
        }
    }

    /// `(B, q)` such that admissible inputs satisfy `||y||_q <= B`.
    pub fn input_ball(&self) -> (f64, f64) {
        match self {
            Self::SimQ(s) => (s.bound, 1.0),
            Self::SimQPlus(s) => (s.bound, conjugate(s.p)),
            Self::Cuq(s) => (s.range, f64::INFINITY),
            Self::Ratq(s) => (s.bound, 2.0),
            Self::Split(s) => (s.bound, s.q),
        }
    }

    /// Norm in which the root second moment `alpha_0` is measured: l2 for the
    /// `p >= 2` families, lq for the `p < 2` ones.
    pub fn alpha0_norm(&self) -> f64 {
        match self {
            Self::SimQ(_) | Self::SimQPlus(_) | Self::Ratq(_) => 2.0,
            Self::Cuq(_) => f64::INFINITY,
            Self::Split(s) => s.q,
        }
    }

    /// Analytic upper bound on `sup_Y sqrt(E ||Q(Y)||^2)` in [`alpha0_norm`](Self::alpha0_norm).
    pub fn analytic_alpha0(&self) -> f64 {
        match self {
            Self::SimQ(s) => s.bound,
            Self::SimQPlus(s) => s.alpha0_bound(),
            Self::Cuq(s) => s.range,
            Self::Ratq(s) => s.alpha0_bound(),
            Self::Split(s) => s.alpha0_bound(),
        }
    }

    /// Encode, drawing rotation seeds for RATQ and split from `rng`.
    pub fn encode<R: Rng + ?Sized>(&self, y: &[f64], rng: &mut R) -> Result<QuantizedMessage> {
        match self {
            Self::SimQ(s) => s.encode(y, rng),
            Self::SimQPlus(s) => s.encode(y, rng),
            Self::Cuq(s) => s.encode(y, rng),
            Self::Ratq(s) => {
                let seed = RotationSeed(rng.next_u64());
                s.encode(y, seed, rng)
            }
            Self::Split(s) => {
                let seed = RotationSeed(rng.next_u64());
                s.encode(y, seed, rng)
            }
        }
    }

    pub fn decode(&self, msg: &QuantizedMessage) -> Result<Vec<f64>> {
        let seed = || {
            msg.seed
                .ok_or_else(|| Error::Corrupt("message carries no rotation seed".into()))
        };
        match self {
            Self::SimQ(s) => s.decode(msg),
            Self::SimQPlus(s) => s.decode(msg),
            Self::Cuq(s) => s.decode(msg),
            Self::Ratq(s) => s.decode(msg, seed()?),
            Self::Split(s) => s.decode(msg, seed()?),
        }
    }

    /// `decode(encode(y))`, asserting the fixed-length contract on the way.
    pub fn round_trip<R: Rng + ?Sized>(&self, y: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let msg = self.encode(y, rng)?;
        if msg.payload.width() != self.bit_budget() {
            return Err(Error::Internal(format!(
                "{} emitted {} bits, budget is {}",
                self.family(),
                msg.payload.width(),
                self.bit_budget()
            )));
        }
        self.decode(&msg)
    }
}

/// Serializable description of a quantizer whose remaining parameters are
/// derived from the instance's `(d, p, B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum QuantizerDescriptor {
    None,
    SimQ,
    SimQPlus {
        /// Repetitions; defaults to `ceil(d^(2/p))`.
        #[serde(default)]
        k: Option<usize>,
    },
    Cuq {
        levels: usize,
    },
    Ratq {
        levels: usize,
    },
    Split,
}

impl QuantizerDescriptor {
    pub fn family(&self) -> Option<Family> {
        match self {
            Self::None => None,
            Self::SimQ => Some(Family::SimQ),
            Self::SimQPlus { .. } => Some(Family::SimQPlus),
            Self::Cuq { .. } => Some(Family::Cuq),
            Self::Ratq { .. } => Some(Family::Ratq),
            Self::Split => Some(Family::Split),
        }
    }

    /// Build the quantizer for inputs with `||y||_q <= bound`, `q` the conjugate of `p`.
    ///
    /// SimQ needs `p = inf`, SimQ+ `p >= 2`, split `p < 2`, RATQ `p = 2` and
    /// CUQ `p = 1`; any other pairing is a configuration error.
    pub fn build(&self, dim: usize, p: f64, bound: f64) -> Result<Option<QuantizerSpec>> {
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{} quantizer requires {what}, instance has p = {p}",
                    self.family().map(|f| f.to_string()).unwrap_or_default()
                )))
            }
        };
        Ok(Some(match *self {
            Self::None => return Ok(None),
            Self::SimQ => {
                need(p.is_infinite(), "p = inf")?;
                QuantizerSpec::SimQ(SimQSpec::new(dim, bound)?)
            }
            Self::SimQPlus { k } => {
                need(p >= 2.0, "p >= 2")?;
                QuantizerSpec::SimQPlus(SimQPlusSpec::new(dim, p, bound, k)?)
            }
            Self::Cuq { levels } => {
                need(p == 1.0, "p = 1 (sup-norm inputs)")?;
                QuantizerSpec::Cuq(CuqSpec::new(dim, bound, levels)?)
            }
            Self::Ratq { levels } => {
                need(p == 2.0, "p = 2")?;
                QuantizerSpec::Ratq(RatqSpec::new(dim, bound, levels)?)
            }
            Self::Split => {
                need((1.0..2.0).contains(&p), "1 <= p < 2")?;
                QuantizerSpec::Split(SplitSpec::new(dim, p, bound)?)
            }
        }))
    }
}
