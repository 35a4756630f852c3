use rand::Rng;

use super::cuq::{read_levels, round_level};
use super::ratq::RatqOutcome;
use super::{check_admissible, check_dim, check_positive, CuqSpec, Family, QuantizedMessage, RatqSpec};
use crate::bitcodec::{BitReader, BitWriter};
use crate::bounds::{delta1, delta2};
use crate::error::{contract, Error, Result};
use crate::norms::{ceil_snap, conjugate, recip};
use crate::rotation::RotationSeed;

/// Quantizer for `p in [1, 2)`: inputs with `||Y||_q <= B`, `q = p/(p-1)`.
///
/// Coordinates with `|Y(i)| <= c = B Delta1^(1/q) / d^(1/q)` form `Y1` and are
/// sent by CUQ on `[-c, c]`. The rest (at most `floor(d / Delta1)` of them)
/// form `Y2`; their positions go in a `d`-bit bitmap and their values, in
/// increasing index order and zero-padded to that capacity, go through RATQ.
///
/// Wire format: `[bitmap: d bits][CUQ: d fields][RATQ block]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub(crate) dim: usize,
    pub(crate) bound: f64,
    pub(crate) p: f64,
    pub(crate) q: f64,
    pub(crate) threshold: f64,
    pub(crate) delta1: u32,
    pub(crate) delta2: u32,
    pub(crate) capacity: usize,
    pub(crate) cuq: CuqSpec,
    pub(crate) ratq: RatqSpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitOutcome {
    /// Indices (0-based, increasing) routed to the RATQ block.
    pub support: Vec<usize>,
    /// CUQ level for every coordinate of `Y1`.
    pub small: Vec<u64>,
    pub large: RatqOutcome,
}

impl SplitSpec {
    pub fn new(dim: usize, p: f64, bound: f64) -> Result<Self> {
        if dim == 0 {
            return Err(contract("split quantizer needs d >= 1"));
        }
        if !(1.0..2.0).contains(&p) {
            return Err(contract(format!("split quantizer needs 1 <= p < 2, got {p}")));
        }
        check_positive("split bound", bound)?;
        let q = conjugate(p);
        let d = dim as f64;
        let delta2 = delta2(dim)?;
        let delta1 = delta1(dim, q)?;
        let inv_q = recip(q);
        let threshold = bound * (delta1 as f64).powf(inv_q) / d.powf(inv_q);
        let cuq_bits = ceil_snap((2.0 * 2f64.sqrt() * (delta1 as f64).powf(inv_q) + 2.0).log2());
        let cuq_levels = (1usize << cuq_bits as u32) - 1;
        let capacity = dim / delta1 as usize;
        let ratq_bound = bound * d.powf(0.5 - inv_q);
        let ratq_levels = (1usize << delta1) - 1;
        Ok(Self {
            dim,
            bound,
            p,
            q,
            threshold,
            delta1,
            delta2,
            capacity,
            cuq: CuqSpec::new(dim, threshold, cuq_levels)?,
            ratq: RatqSpec::new(capacity, ratq_bound, ratq_levels)?,
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

    pub fn q(&self) -> f64 {
        self.q
    }

    /// The split threshold `c`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn delta1(&self) -> u32 {
        self.delta1
    }

    pub fn delta2(&self) -> u32 {
        self.delta2
    }

    /// `floor(d / Delta1)`, the most coordinates that can exceed `c`.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn cuq(&self) -> &CuqSpec {
        &self.cuq
    }

    pub fn ratq(&self) -> &RatqSpec {
        &self.ratq
    }

    /// True when `d` is too small for the formulas to be meaningful
    /// (`Delta2 = 0`, or a one-range RATQ ladder).
    pub fn degenerate(&self) -> bool {
        self.delta2 == 0 || self.ratq.ladder_size() == 1
    }

    pub fn width(&self) -> usize {
        self.dim + self.cuq.width() + self.ratq.width()
    }

    /// `d (ceil(log2(2 sqrt2 Delta1^(1/q) + 2)) + 3) + Delta2`, the budget
    /// when the RATQ block needs no padding.
    pub fn nominal_width(&self) -> usize {
        self.dim * (self.cuq.field_width() + 3) + self.delta2 as usize
    }

    /// Bits the RATQ block spends on padding `capacity` up to a power of two.
    pub fn padding_bits(&self) -> usize {
        (self.ratq.padded_dim() - self.capacity) * self.ratq.level_width()
    }

    /// `sqrt(12) B`.
    pub fn alpha0_bound(&self) -> f64 {
        12f64.sqrt() * self.bound
    }

    pub fn sample_outcome<R: Rng + ?Sized>(
        &self,
        y: &[f64],
        seed: RotationSeed,
        rng: &mut R,
    ) -> Result<SplitOutcome> {
        check_dim(y, self.dim)?;
        check_admissible(y, self.bound, self.q)?;
        let c = self.threshold;
        let support: Vec<usize> = (0..self.dim).filter(|&i| y[i].abs() > c).collect();
        if support.len() > self.capacity {
            return Err(Error::Input(format!(
                "{} coordinates exceed c = {c}, capacity is {}",
                support.len(),
                self.capacity
            )));
        }
        let small = y
            .iter()
            .map(|&v| {
                let v = if v.abs() > c { 0.0 } else { v };
                round_level(v, c, self.cuq.levels, rng)
            })
            .collect();
        let large_values: Vec<f64> = support.iter().map(|&i| y[i]).collect();
        let large = self.ratq.sample_outcome(&large_values, seed, rng)?;
        Ok(SplitOutcome {
            support,
            small,
            large,
        })
    }

    pub fn encode<R: Rng + ?Sized>(
        &self,
        y: &[f64],
        seed: RotationSeed,
        rng: &mut R,
    ) -> Result<QuantizedMessage> {
        let outcome = self.sample_outcome(y, seed, rng)?;
        let mut msg = self.pack(&outcome)?;
        msg.seed = Some(seed);
        Ok(msg)
    }

    pub fn pack(&self, outcome: &SplitOutcome) -> Result<QuantizedMessage> {
        if outcome.support.len() > self.capacity || outcome.small.len() != self.dim {
            return Err(contract("split outcome shape does not match the quantizer"));
        }
        let mut bitmap = vec![false; self.dim];
        for &i in &outcome.support {
            if i >= self.dim || bitmap[i] {
                return Err(contract(format!("bad support index {i}")));
            }
            bitmap[i] = true;
        }
        if !outcome.support.windows(2).all(|w| w[0] < w[1]) {
            return Err(contract("support must be increasing"));
        }
        let mut w = BitWriter::new(self.width());
        for b in bitmap {
            w.put(1, b as u64)?;
        }
        let field = self.cuq.field_width();
        for &l in &outcome.small {
            if l > self.cuq.levels as u64 {
                return Err(contract(format!("CUQ level {l} above k")));
            }
            w.put(field, l)?;
        }
        self.ratq.write_into(&mut w, &outcome.large)?;
        Ok(QuantizedMessage {
            family: Family::Split,
            payload: w.finish()?,
            seed: None,
        })
    }

    pub fn unpack(&self, msg: &QuantizedMessage) -> Result<SplitOutcome> {
        msg.expect(Family::Split, self.width())?;
        let mut r = BitReader::new(&msg.payload);
        let mut support = Vec::new();
        for i in 0..self.dim {
            if r.take(1)? == 1 {
                support.push(i);
            }
        }
        if support.len() > self.capacity {
            return Err(Error::Corrupt(format!(
                "bitmap marks {} coordinates, capacity is {}",
                support.len(),
                self.capacity
            )));
        }
        let small = read_levels(&mut r, self.dim, self.cuq.field_width(), self.cuq.levels)?;
        let large = self.ratq.read_from(&mut r)?;
        Ok(SplitOutcome {
            support,
            small,
            large,
        })
    }

    /// CUQ estimate of `Y1` plus the RATQ estimate of `Y2` scattered back to
    /// the bitmap positions.
    pub fn reconstruct(&self, outcome: &SplitOutcome, seed: RotationSeed) -> Result<Vec<f64>> {
        let mut out = self.cuq.reconstruct(&outcome.small);
        let large = self.ratq.reconstruct(&outcome.large, seed)?;
        for (&i, v) in outcome.support.iter().zip(large) {
            out[i] += v;
        }
        Ok(out)
    }

    pub fn decode(&self, msg: &QuantizedMessage, seed: RotationSeed) -> Result<Vec<f64>> {
        self.reconstruct(&self.unpack(msg)?, seed)
    }
}
