use rand::Rng;

use super::cuq::{level_value, read_levels, round_level};
use super::{check_admissible, check_positive, Family, QuantizedMessage};
use crate::bitcodec::{BitReader, BitWriter};
use crate::bounds::lnstar;
use crate::error::{contract, Error, Result};
use crate::norms::{ceil_log2, NORM_TOL};
use crate::rotation::{padded_dim, rotate, unrotate, RotationSeed};

/// Rotated adaptive tetra-iterated quantizer for the l2 ball of radius `B'`
/// in `d'` dimensions.
///
/// The input is zero-padded to `d''` (a power of two) and rotated. Rotated
/// coordinates are cut into consecutive groups of `s`; each group picks the
/// smallest ladder range `M_j` covering its largest magnitude and is
/// uniformly quantized on `[-M_j, M_j]` with `k` levels. The ladder is
/// `M_j^2 = m + m0 e*_j` with `e*_0 = 1`, `e*_{j+1} = exp(e*_j)`, and its top
/// level is raised to at least `B'` so every admissible input is covered.
///
/// Wire format: `ceil(d''/s)` fields of `log2 h` bits (ladder indices), then
/// `d''` fields of `ceil(log2(k+1))` bits (levels).
#[derive(Debug, Clone, PartialEq)]
pub struct RatqSpec {
    pub(crate) dim: usize,
    pub(crate) padded_dim: usize,
    pub(crate) bound: f64,
    pub(crate) levels: usize,
    pub(crate) ladder_bits: usize,
    pub(crate) group_size: usize,
    pub(crate) base: f64,
    pub(crate) base_log: f64,
    pub(crate) ladder: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatqOutcome {
    /// Ladder index per group.
    pub ranges: Vec<u64>,
    /// Level index per rotated coordinate.
    pub levels: Vec<u64>,
}

impl RatqSpec {
    /// Parameters for dimension `d'` and l2 radius `B'`, with `k = levels`.
    pub fn new(dim: usize, bound: f64, levels: usize) -> Result<Self> {
        check_positive("RATQ bound", bound)?;
        if levels == 0 {
            return Err(contract("RATQ needs k >= 1"));
        }
        let padded = padded_dim(dim);
        let top_floor = bound * (1.0 + 2.0 * NORM_TOL);
        if dim == 0 {
            return Ok(Self {
                dim,
                padded_dim: 0,
                bound,
                levels,
                ladder_bits: 0,
                group_size: 1,
                base: 0.0,
                base_log: 0.0,
                ladder: vec![top_floor],
            });
        }
        let d = dim as f64;
        let ladder_bits = ceil_log2(1 + lnstar(d / 3.0)? as u64) as usize;
        let h = 1usize << ladder_bits;
        let group_size = ladder_bits.max(1);
        let base = 3.0 * bound * bound / d;
        let base_log = 2.0 * bound * bound / d * (group_size as f64).ln();
        let mut tower = 1.0_f64;
        let mut ladder = Vec::with_capacity(h);
        for _ in 0..h {
            ladder.push((base + base_log * tower).sqrt());
            tower = tower.exp();
        }
        let top = ladder[h - 1];
        let top = if top.is_finite() { top.max(top_floor) } else { top_floor };
        for m in ladder.iter_mut() {
            if !m.is_finite() {
                *m = top;
            }
        }
        ladder[h - 1] = top;
        Ok(Self {
            dim,
            padded_dim: padded,
            bound,
            levels,
            ladder_bits,
            group_size,
            base,
            base_log,
            ladder,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn padded_dim(&self) -> usize {
        self.padded_dim
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// `h`, the number of ladder ranges.
    pub fn ladder_size(&self) -> usize {
        self.ladder.len()
    }

    pub fn ladder(&self) -> &[f64] {
        &self.ladder
    }

    /// `s`, the group size (`log2 h`, at least 1).
    pub fn group_size(&self) -> usize {
        self.group_size
    }

    /// `(m, m0)` in squared-magnitude units.
    pub fn ladder_base(&self) -> (f64, f64) {
        (self.base, self.base_log)
    }

    pub fn groups(&self) -> usize {
        self.padded_dim.div_ceil(self.group_size)
    }

    pub fn level_width(&self) -> usize {
        ceil_log2(self.levels as u64 + 1) as usize
    }

    pub fn width(&self) -> usize {
        self.groups() * self.ladder_bits + self.padded_dim * self.level_width()
    }

    /// `B'^2 (9 + 3 ln s) / (k - 1)^2`, the mean squared error guarantee.
    pub fn mse_bound(&self) -> f64 {
        let k1 = self.levels as f64 - 1.0;
        self.bound * self.bound * (9.0 + 3.0 * (self.group_size as f64).ln()) / (k1 * k1)
    }

    /// `sqrt(B'^2 + mse_bound)`, from unbiasedness.
    pub fn alpha0_bound(&self) -> f64 {
        (self.bound * self.bound + self.mse_bound()).sqrt()
    }

    /// Accepts vectors of length up to `d'`; shorter ones are zero-extended.
    pub fn sample_outcome<R: Rng + ?Sized>(
        &self,
        y: &[f64],
        seed: RotationSeed,
        rng: &mut R,
    ) -> Result<RatqOutcome> {
        if y.len() > self.dim {
            return Err(Error::Input(format!(
                "RATQ input of length {} exceeds d' = {}",
                y.len(),
                self.dim
            )));
        }
        check_admissible(y, self.bound, 2.0)?;
        let mut padded = y.to_vec();
        padded.resize(self.dim, 0.0);
        let rotated = rotate(&padded, seed);
        let mut ranges = Vec::with_capacity(self.groups());
        let mut levels = Vec::with_capacity(self.padded_dim);
        for group in rotated.chunks(self.group_size) {
            let peak = group.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let j = self.ladder.iter().position(|&m| peak <= m).ok_or_else(|| {
                Error::Internal(format!("rotated magnitude {peak} above the ladder top"))
            })?;
            ranges.push(j as u64);
            levels.extend(
                group
                    .iter()
                    .map(|&x| round_level(x, self.ladder[j], self.levels, rng)),
            );
        }
        Ok(RatqOutcome { ranges, levels })
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

    /// Message without a seed attached; the caller supplies it to the decoder.
    pub fn pack(&self, outcome: &RatqOutcome) -> Result<QuantizedMessage> {
        let mut w = BitWriter::new(self.width());
        self.write_into(&mut w, outcome)?;
        Ok(QuantizedMessage {
            family: Family::Ratq,
            payload: w.finish()?,
            seed: None,
        })
    }

    pub(crate) fn write_into(&self, w: &mut BitWriter, outcome: &RatqOutcome) -> Result<()> {
        if outcome.ranges.len() != self.groups() || outcome.levels.len() != self.padded_dim {
            return Err(contract("RATQ outcome shape does not match the quantizer"));
        }
        for &j in &outcome.ranges {
            if j >= self.ladder.len() as u64 {
                return Err(contract(format!("ladder index {j} out of range")));
            }
            w.put(self.ladder_bits, j)?;
        }
        for &l in &outcome.levels {
            if l > self.levels as u64 {
                return Err(contract(format!("level {l} above k = {}", self.levels)));
            }
            w.put(self.level_width(), l)?;
        }
        Ok(())
    }

    pub fn unpack(&self, msg: &QuantizedMessage) -> Result<RatqOutcome> {
        msg.expect(Family::Ratq, self.width())?;
        self.read_from(&mut BitReader::new(&msg.payload))
    }

    pub(crate) fn read_from(&self, r: &mut BitReader<'_>) -> Result<RatqOutcome> {
        let ranges = (0..self.groups())
            .map(|_| {
                let j = r.take(self.ladder_bits)?;
                if j >= self.ladder.len() as u64 {
                    Err(Error::Corrupt(format!("ladder index {j} >= h")))
                } else {
                    Ok(j)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let levels = read_levels(r, self.padded_dim, self.level_width(), self.levels)?;
        Ok(RatqOutcome { ranges, levels })
    }

    pub fn reconstruct(&self, outcome: &RatqOutcome, seed: RotationSeed) -> Result<Vec<f64>> {
        let rotated: Vec<f64> = outcome
            .levels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let range = self.ladder[outcome.ranges[i / self.group_size] as usize];
                level_value(l, range, self.levels)
            })
            .collect();
        unrotate(&rotated, seed, self.dim)
    }

    pub fn decode(&self, msg: &QuantizedMessage, seed: RotationSeed) -> Result<Vec<f64>> {
        self.reconstruct(&self.unpack(msg)?, seed)
    }
}
