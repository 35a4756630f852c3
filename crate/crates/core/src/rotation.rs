//! Randomized Hadamard rotation `R = H D / sqrt(n)` with a Rademacher
//! diagonal `D`, applied after zero-padding to a power-of-two length.
//!
//! Encoder and decoder regenerate `D` from a shared [`RotationSeed`]; the seed
//! travels out of band and is not part of any message.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RotationSeed(pub u64);

/// Power-of-two length a vector of length `n` is padded to (0 stays 0).
pub fn padded_dim(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        n.next_power_of_two()
    }
}

/// Rademacher signs for the given seed and padded dimension.
pub fn sign_diagonal(seed: RotationSeed, dim: usize) -> Result<Vec<f64>> {
    if !dim.is_power_of_two() {
        return Err(contract(format!("sign diagonal of non power-of-two size {dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    rng.set_stream(dim as u64);
    let mut out = Vec::with_capacity(dim);
    while out.len() < dim {
        let word = rng.next_u64();
        for b in 0..64.min(dim - out.len()) {
            out.push(if (word >> b) & 1 == 1 { 1.0 } else { -1.0 });
        }
    }
    Ok(out)
}

/// In-place fast Walsh-Hadamard transform. With `normalized` the result is
/// scaled by `1/sqrt(n)`, making the transform an orthonormal involution.
pub fn fwht(v: &mut [f64], normalized: bool) -> Result<()> {
    let n = v.len();
    if !n.is_power_of_two() {
        return Err(contract(format!("Hadamard transform of length {n}")));
    }
    let mut half = 1;
    while half < n {
        for block in v.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half *= 2;
    }
    if normalized {
        let s = 1.0 / (n as f64).sqrt();
        v.iter_mut().for_each(|x| *x *= s);
    }
    Ok(())
}

/// Zero-pad `v`, flip signs by the seeded diagonal and apply the normalized
/// transform. Preserves the l2 norm.
pub fn rotate(v: &[f64], seed: RotationSeed) -> Vec<f64> {
    let dim = padded_dim(v.len());
    if dim == 0 {
        return Vec::new();
    }
    let signs = sign_diagonal(seed, dim).expect("padded dim is a power of two");
    let mut w = vec![0.0; dim];
    for (i, x) in v.iter().enumerate() {
        w[i] = x * signs[i];
    }
    fwht(&mut w, true).expect("padded dim is a power of two");
    w
}

/// Inverse of [`rotate`], truncated back to `original_n` coordinates.
pub fn unrotate(w: &[f64], seed: RotationSeed, original_n: usize) -> Result<Vec<f64>> {
    let dim = padded_dim(original_n);
    if w.len() != dim {
        return Err(contract(format!(
            "rotated length {} does not match padded dim {dim} of n = {original_n}",
            w.len()
        )));
    }
    if dim == 0 {
        return Ok(Vec::new());
    }
    let mut v = w.to_vec();
    fwht(&mut v, true)?;
    let signs = sign_diagonal(seed, dim)?;
    v.truncate(original_n);
    for (x, s) in v.iter_mut().zip(signs) {
        *x *= s;
    }
    Ok(v)
}
