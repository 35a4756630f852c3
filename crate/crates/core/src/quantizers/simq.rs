use rand::Rng;

use super::{check_admissible, check_dim, check_positive, Family, QuantizedMessage};
use crate::bitcodec::BitMessage;
use crate::error::{contract, Error, Result};
use crate::norms::ceil_log2;

/// Simplex quantizer for inputs in the l1 ball of radius `bound`.
///
/// The message is one field `v` in `[0, 2d]`: 0 is the zero vector, `v` in
/// `[1, d]` is `+B e_v` and `v` in `[d+1, 2d]` is `-B e_{v-d}` (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct SimQSpec {
    pub(crate) dim: usize,
    pub(crate) bound: f64,
}

impl SimQSpec {
    pub fn new(dim: usize, bound: f64) -> Result<Self> {
        if dim == 0 {
            return Err(contract("SimQ needs d >= 1"));
        }
        check_positive("SimQ bound", bound)?;
        Ok(Self { dim, bound })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `ceil(log2(2d + 1))`.
    pub fn width(&self) -> usize {
        ceil_log2(2 * self.dim as u64 + 1) as usize
    }

    /// Draw the outcome `v`: coordinate `i` with probability `|y_i| / B`,
    /// zero with the remaining mass, signed by `y_i`.
    pub fn sample_outcome<R: Rng + ?Sized>(&self, y: &[f64], rng: &mut R) -> Result<u64> {
        check_dim(y, self.dim)?;
        check_admissible(y, self.bound, 1.0)?;
        Ok(L1Sampler::new(y, self.bound).draw_outcome(rng))
    }

    pub fn encode<R: Rng + ?Sized>(&self, y: &[f64], rng: &mut R) -> Result<QuantizedMessage> {
        let v = self.sample_outcome(y, rng)?;
        self.pack(v)
    }

    /// Wire form of outcome `v`.
    pub fn pack(&self, v: u64) -> Result<QuantizedMessage> {
        if v > 2 * self.dim as u64 {
            return Err(contract(format!("SimQ outcome {v} outside [0, {}]", 2 * self.dim)));
        }
        let mut payload = BitMessage::zeros(self.width());
        payload.write_field(0, self.width(), v)?;
        Ok(QuantizedMessage {
            family: Family::SimQ,
            payload,
            seed: None,
        })
    }

    pub fn decode(&self, msg: &QuantizedMessage) -> Result<Vec<f64>> {
        self.reconstruct(self.unpack(msg)?)
    }

    /// Read the outcome field back out of a message.
    pub fn unpack(&self, msg: &QuantizedMessage) -> Result<u64> {
        msg.expect(Family::SimQ, self.width())?;
        let v = msg.payload.read_field(0, self.width())?;
        if v > 2 * self.dim as u64 {
            return Err(Error::Corrupt(format!("SimQ outcome {v} exceeds 2d = {}", 2 * self.dim)));
        }
        Ok(v)
    }

    /// The vector an outcome stands for.
    pub fn reconstruct(&self, v: u64) -> Result<Vec<f64>> {
        let d = self.dim as u64;
        if v > 2 * d {
            return Err(Error::Corrupt(format!("SimQ outcome {v} exceeds 2d = {}", 2 * d)));
        }
        let mut out = vec![0.0; self.dim];
        if v >= 1 && v <= d {
            out[(v - 1) as usize] = self.bound;
        } else if v > d {
            out[(v - d - 1) as usize] = -self.bound;
        }
        Ok(out)
    }
}

/// Inverse-CDF sampler over coordinates by `|y_i| / bound`.
pub(crate) struct L1Sampler {
    cumulative: Vec<f64>,
    positive: Vec<bool>,
    bound: f64,
}

impl L1Sampler {
    pub(crate) fn new(y: &[f64], bound: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = y
            .iter()
            .map(|x| {
                acc += x.abs();
                acc
            })
            .collect();
        Self {
            cumulative,
            positive: y.iter().map(|&x| x > 0.0).collect(),
            bound,
        }
    }

    /// `Some((i, positive))` for a coordinate draw, `None` for the zero outcome.
    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(usize, bool)> {
        let u = rng.random::<f64>() * self.bound;
        let i = self.cumulative.partition_point(|&c| c <= u);
        (i < self.cumulative.len()).then(|| (i, self.positive[i]))
    }

    pub(crate) fn draw_outcome<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let d = self.cumulative.len() as u64;
        match self.draw(rng) {
            None => 0,
            Some((i, true)) => i as u64 + 1,
            Some((i, false)) => i as u64 + 1 + d,
        }
    }
}
