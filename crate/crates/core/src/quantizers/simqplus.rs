use rand::Rng;

use super::simq::L1Sampler;
use super::{check_admissible, check_dim, check_positive, Family, QuantizedMessage};
use crate::bitcodec::{
    binomial, multiset_rank, multiset_unrank, type_rank_width, BitReader, BitWriter, MultisetType,
};
use crate::error::{contract, Error, Result};
use crate::norms::{ceil_snap, conjugate, recip};

/// Default number of SimQ repetitions, `ceil(d^(2/p))` (1 at `p = inf`).
pub fn default_repetitions(dim: usize, p: f64) -> usize {
    let k = ceil_snap((dim as f64).powf(2.0 * recip(p)));
    (k as usize).max(1)
}

/// Average of `k` independent SimQ draws at the scaled bound `B d^(1/p)`.
///
/// Wire format: `[type rank: ceil(log2 C(d+k, k)) bits][signs: k bits]`. Sign
/// bit `j` is 1 when the `j`-th smallest distinct nonzero drawn index carries a
/// positive sign; unused sign bits are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SimQPlusSpec {
    pub(crate) dim: usize,
    pub(crate) bound: f64,
    pub(crate) p: f64,
    pub(crate) reps: usize,
    pub(crate) scaled_bound: f64,
    pub(crate) rank_width: usize,
}

/// What the encoder draws before packing: the type of the `k` indices
/// (symbol 0 is the zero outcome, symbol `i` is coordinate `i`, 1-based) and
/// the signs of the distinct nonzero indices in increasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimQPlusOutcome {
    pub draws: MultisetType,
    pub signs: Vec<bool>,
}

impl SimQPlusSpec {
    /// `reps = None` picks [`default_repetitions`].
    pub fn new(dim: usize, p: f64, bound: f64, reps: Option<usize>) -> Result<Self> {
        if dim == 0 {
            return Err(contract("SimQ+ needs d >= 1"));
        }
        if !(p >= 2.0) {
            return Err(contract(format!("SimQ+ needs p >= 2, got {p}")));
        }
        check_positive("SimQ+ bound", bound)?;
        let reps = reps.unwrap_or_else(|| default_repetitions(dim, p));
        if reps == 0 {
            return Err(contract("SimQ+ needs k >= 1"));
        }
        Ok(Self {
            dim,
            bound,
            p,
            reps,
            scaled_bound: bound * (dim as f64).powf(recip(p)),
            rank_width: type_rank_width(dim, reps) as usize,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn reps(&self) -> usize {
        self.reps
    }

    /// `B d^(1/p)`, the l1 radius every admissible input fits in.
    pub fn scaled_bound(&self) -> f64 {
        self.scaled_bound
    }

    pub fn rank_width(&self) -> usize {
        self.rank_width
    }

    pub fn width(&self) -> usize {
        self.rank_width + self.reps
    }

    /// `sqrt(B^2 d^(2/p) / k + B^2)`.
    pub fn alpha0_bound(&self) -> f64 {
        let b2 = self.bound * self.bound;
        (b2 * (self.dim as f64).powf(2.0 * recip(self.p)) / self.reps as f64 + b2).sqrt()
    }

    pub fn sample_outcome<R: Rng + ?Sized>(
        &self,
        y: &[f64],
        rng: &mut R,
    ) -> Result<SimQPlusOutcome> {
        check_dim(y, self.dim)?;
        check_admissible(y, self.bound, conjugate(self.p))?;
        let sampler = L1Sampler::new(y, self.scaled_bound);
        let mut counts = vec![0u64; self.dim + 1];
        for _ in 0..self.reps {
            match sampler.draw(rng) {
                None => counts[0] += 1,
                Some((i, _)) => counts[i + 1] += 1,
            }
        }
        let signs = counts[1..]
            .iter()
            .zip(y)
            .filter(|(&c, _)| c > 0)
            .map(|(_, &yi)| yi > 0.0)
            .collect();
        Ok(SimQPlusOutcome {
            draws: MultisetType::new(counts)?,
            signs,
        })
    }

    pub fn encode<R: Rng + ?Sized>(&self, y: &[f64], rng: &mut R) -> Result<QuantizedMessage> {
        let outcome = self.sample_outcome(y, rng)?;
        self.pack(&outcome)
    }

    pub fn pack(&self, outcome: &SimQPlusOutcome) -> Result<QuantizedMessage> {
        let t = &outcome.draws;
        if t.d() != self.dim || t.k() != self.reps as u64 {
            return Err(contract("type does not match (d, k) of the quantizer"));
        }
        let distinct = t.counts()[1..].iter().filter(|&&c| c > 0).count();
        if outcome.signs.len() != distinct {
            return Err(contract(format!(
                "{} signs for {distinct} distinct indices",
                outcome.signs.len()
            )));
        }
        let mut w = BitWriter::new(self.width());
        w.put_big(self.rank_width, &multiset_rank(t))?;
        for j in 0..self.reps {
            w.put(1, outcome.signs.get(j).copied().unwrap_or(false) as u64)?;
        }
        Ok(QuantizedMessage {
            family: Family::SimQPlus,
            payload: w.finish()?,
            seed: None,
        })
    }

    pub fn unpack(&self, msg: &QuantizedMessage) -> Result<SimQPlusOutcome> {
        msg.expect(Family::SimQPlus, self.width())?;
        let mut r = BitReader::new(&msg.payload);
        let rank = r.take_big(self.rank_width)?;
        if rank >= binomial((self.dim + self.reps) as u64, self.reps as u64) {
            return Err(Error::Corrupt(format!("type rank {rank} out of range")));
        }
        let draws = multiset_unrank(&rank, self.dim, self.reps)?;
        let distinct = draws.counts()[1..].iter().filter(|&&c| c > 0).count();
        let mut signs = Vec::with_capacity(distinct);
        for j in 0..self.reps {
            let bit = r.take(1)? == 1;
            if j < distinct {
                signs.push(bit);
            } else if bit {
                return Err(Error::Corrupt("unused sign bit set".into()));
            }
        }
        Ok(SimQPlusOutcome { draws, signs })
    }

    /// `(B d^(1/p) / k) sum_i n_i sigma_i e_i`.
    pub fn reconstruct(&self, outcome: &SimQPlusOutcome) -> Result<Vec<f64>> {
        let scale = self.scaled_bound / self.reps as f64;
        let mut out = vec![0.0; self.dim];
        let mut signs = outcome.signs.iter();
        for (i, &n) in outcome.draws.counts()[1..].iter().enumerate() {
            if n > 0 {
                let &positive = signs
                    .next()
                    .ok_or_else(|| Error::Corrupt("missing sign bit".into()))?;
                out[i] = if positive { 1.0 } else { -1.0 } * scale * n as f64;
            }
        }
        Ok(out)
    }

    pub fn decode(&self, msg: &QuantizedMessage) -> Result<Vec<f64>> {
        self.reconstruct(&self.unpack(msg)?)
    }
}
