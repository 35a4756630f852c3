//! Fixtures shared by the criterion benchmarks.

use gradq_core::quantizers::QuantizerDescriptor;
use gradq_core::rng::stream;
use gradq_core::{lp_norm, QuantizerSpec};
use rand::Rng;

/// A random vector on the boundary of the quantizer's input ball.
pub fn boundary_input(spec: &QuantizerSpec, seed: u64) -> Vec<f64> {
    let (b, q) = spec.input_ball();
    let mut rng = stream(seed, 0);
    let v: Vec<f64> = (0..spec.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = lp_norm(&v, q);
    v.iter().map(|x| x * b / n).collect()
}

pub fn simqplus(dim: usize, p: f64) -> QuantizerSpec {
    QuantizerDescriptor::SimQPlus { k: None }
        .build(dim, p, 1.0)
        .expect("valid parameters")
        .expect("quantized")
}

pub fn split(dim: usize, p: f64) -> QuantizerSpec {
    QuantizerDescriptor::Split
        .build(dim, p, 1.0)
        .expect("valid parameters")
        .expect("quantized")
}

pub fn ratq(dim: usize, levels: usize) -> QuantizerSpec {
    QuantizerDescriptor::Ratq { levels }
        .build(dim, 2.0, 1.0)
        .expect("valid parameters")
        .expect("quantized")
}
