use rand::Rng;

use super::{check_admissible, check_dim, check_positive, Family, QuantizedMessage};
use crate::bitcodec::{BitReader, BitWriter};
use crate::error::{contract, Error, Result};
use crate::norms::ceil_log2;

/// Coordinate-wise uniform quantizer on `[-M, M]` with the `k + 1` grid
/// points `-M + 2Mj/k`, `j = 0..=k`. Each coordinate is rounded to one of its
/// two neighbouring grid points with probabilities that keep it unbiased.
///
/// Wire format: `d` fields of `ceil(log2(k + 1))` bits holding `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CuqSpec {
    pub(crate) dim: usize,
    pub(crate) range: f64,
    pub(crate) levels: usize,
}

impl CuqSpec {
    pub fn new(dim: usize, range: f64, levels: usize) -> Result<Self> {
        check_positive("CUQ range", range)?;
        if levels == 0 {
            return Err(contract("CUQ needs k >= 1"));
        }
        Ok(Self { dim, range, levels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dynamic range `M`.
    pub fn range(&self) -> f64 {
        self.range
    }

    /// The level parameter `k`; the grid has `k + 1` points.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn field_width(&self) -> usize {
        ceil_log2(self.levels as u64 + 1) as usize
    }

    pub fn width(&self) -> usize {
        self.dim * self.field_width()
    }

    pub fn sample_outcome<R: Rng + ?Sized>(&self, y: &[f64], rng: &mut R) -> Result<Vec<u64>> {
        check_dim(y, self.dim)?;
        check_admissible(y, self.range, f64::INFINITY)?;
        Ok(y.iter()
            .map(|&v| round_level(v, self.range, self.levels, rng))
            .collect())
    }

    pub fn encode<R: Rng + ?Sized>(&self, y: &[f64], rng: &mut R) -> Result<QuantizedMessage> {
        let levels = self.sample_outcome(y, rng)?;
        self.pack(&levels)
    }

    pub fn pack(&self, levels: &[u64]) -> Result<QuantizedMessage> {
        if levels.len() != self.dim {
            return Err(contract("one level index per coordinate"));
        }
        let mut w = BitWriter::new(self.width());
        for &j in levels {
            if j > self.levels as u64 {
                return Err(contract(format!("level {j} above k = {}", self.levels)));
            }
            w.put(self.field_width(), j)?;
        }
        Ok(QuantizedMessage {
            family: Family::Cuq,
            payload: w.finish()?,
            seed: None,
        })
    }

    pub fn unpack(&self, msg: &QuantizedMessage) -> Result<Vec<u64>> {
        msg.expect(Family::Cuq, self.width())?;
        let mut r = BitReader::new(&msg.payload);
        read_levels(&mut r, self.dim, self.field_width(), self.levels)
    }

    pub fn reconstruct(&self, levels: &[u64]) -> Vec<f64> {
        levels
            .iter()
            .map(|&j| level_value(j, self.range, self.levels))
            .collect()
    }

    pub fn decode(&self, msg: &QuantizedMessage) -> Result<Vec<f64>> {
        Ok(self.reconstruct(&self.unpack(msg)?))
    }
}

/// Stochastic rounding of `y` in `[-range, range]` onto the `levels + 1` grid.
pub(crate) fn round_level<R: Rng + ?Sized>(y: f64, range: f64, levels: usize, rng: &mut R) -> u64 {
    let k = levels as f64;
    let t = ((y + range) * k / (2.0 * range)).clamp(0.0, k);
    let lower = t.floor();
    if lower >= k {
        return levels as u64;
    }
    let frac = t - lower;
    if frac > 0.0 && rng.random::<f64>() < frac {
        lower as u64 + 1
    } else {
        lower as u64
    }
}

pub(crate) fn level_value(j: u64, range: f64, levels: usize) -> f64 {
    -range + 2.0 * range * j as f64 / levels as f64
}

pub(crate) fn read_levels(
    r: &mut BitReader<'_>,
    count: usize,
    width: usize,
    levels: usize,
) -> Result<Vec<u64>> {
    (0..count)
        .map(|_| {
            let j = r.take(width)?;
            if j > levels as u64 {
                Err(Error::Corrupt(format!("level index {j} above k = {levels}")))
            } else {
                Ok(j)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitcodec::BitMessage;
    use crate::rng::stream;

    #[test]
    fn zero_splits_between_middle_levels() {
        let spec = CuqSpec::new(1, 1.0, 3).unwrap();
        let grid = spec.reconstruct(&[0, 1, 2, 3]);
        for (a, b) in grid.iter().zip([-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let mut rng = stream(1, 0);
        let n = 40_000;
        let mut upper = 0;
        for _ in 0..n {
            match spec.sample_outcome(&[0.0], &mut rng).unwrap()[0] {
                1 => {}
                2 => upper += 1,
                other => panic!("level {other}"),
            }
        }
        let f = upper as f64 / n as f64;
        assert!((f - 0.5).abs() <= 4.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn grid_points_are_fixed() {
        let spec = CuqSpec::new(2, 1.0, 3).unwrap();
        let mut rng = stream(2, 0);
        for _ in 0..100 {
            assert_eq!(spec.sample_outcome(&[1.0, -1.0], &mut rng).unwrap(), vec![3, 0]);
        }
    }

    #[test]
    fn error_never_exceeds_one_cell() {
        let mut rng = stream(3, 0);
        for levels in [1usize, 2, 3, 7, 15] {
            let spec = CuqSpec::new(6, 2.5, levels).unwrap();
            for _ in 0..500 {
                let y: Vec<f64> = (0..6).map(|_| rng.random_range(-2.5..=2.5)).collect();
                let z = spec.decode(&spec.encode(&y, &mut rng).unwrap()).unwrap();
                for (a, b) in z.iter().zip(&y) {
                    assert!((a - b).abs() <= 5.0 / levels as f64 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn exact_expectation_by_enumeration() {
        let mut rng = stream(4, 0);
        for d in 1..=4usize {
            for k in 1..=7usize {
                let m = rng.random_range(0.5..2.0);
                let spec = CuqSpec::new(d, m, k).unwrap();
                let y: Vec<f64> = (0..d).map(|_| rng.random_range(-m..=m)).collect();
                // per-coordinate (lower, p_upper) from the rounding rule
                let cells: Vec<(u64, f64)> = y
                    .iter()
                    .map(|&v| {
                        let t = (v + m) * k as f64 / (2.0 * m);
                        let lo = t.floor().min(k as f64 - 1.0);
                        (lo as u64, t - lo)
                    })
                    .collect();
                let mut mean = vec![0.0; d];
                for mask in 0..(1u32 << d) {
                    let mut p = 1.0;
                    let levels: Vec<u64> = cells
                        .iter()
                        .enumerate()
                        .map(|(i, &(lo, pu))| {
                            if mask >> i & 1 == 1 {
                                p *= pu;
                                lo + 1
                            } else {
                                p *= 1.0 - pu;
                                lo
                            }
                        })
                        .collect();
                    let z = spec.decode(&spec.pack(&levels).unwrap()).unwrap();
                    mean.iter_mut().zip(z).for_each(|(a, b)| *a += p * b);
                }
                for (a, b) in mean.iter().zip(&y) {
                    assert!((a - b).abs() < 1e-12, "d={d} k={k}");
                }
            }
        }
    }

    #[test]
    fn range_and_corruption_errors() {
        let spec = CuqSpec::new(2, 1.0, 5).unwrap();
        let mut rng = stream(5, 0);
        assert!(matches!(spec.encode(&[1.5, 0.0], &mut rng), Err(Error::Input(_))));
        // field width 3 can hold 6 and 7, neither is a level for k = 5
        let mut payload = BitMessage::zeros(6);
        payload.write_field(0, 3, 6).unwrap();
        let msg = QuantizedMessage { family: Family::Cuq, payload, seed: None };
        assert!(matches!(spec.decode(&msg), Err(Error::Corrupt(_))));
    }
}
