//! Fixed-length, unbiased gradient quantizers for stochastic optimization
//! over lp spaces, together with the oracles, optimizers and precision
//! bounds needed to exercise them.
//!
//! The quantizer families are
//!
//! * [`SimQSpec`]: a random signed basis vector drawn by l1 sampling,
//!   `ceil(log2(2d+1))` bits.
//! * [`SimQPlusSpec`]: the average of `k` SimQ draws, sent as the type
//!   (multiset rank) of the drawn indices plus `k` sign bits.
//! * [`CuqSpec`]: coordinate-wise uniform quantization with stochastic rounding.
//! * [`RatqSpec`]: randomized Hadamard rotation, an adaptive per-group range
//!   chosen from a tetration ladder, then uniform quantization.
//! * [`SplitSpec`]: for `p < 2`, small coordinates go through CUQ and the few
//!   large ones through RATQ.
//!
//! Every encoder emits a [`BitMessage`] whose width equals the quantizer's
//! [`bit_budget`](QuantizerSpec::bit_budget) regardless of the input.

pub mod bitcodec;
pub mod bounds;
pub mod domain;
pub mod error;
pub mod norms;
pub mod optimizers;
pub mod oracles;
pub mod quantizers;
pub mod rng;
pub mod rotation;

pub use bitcodec::{binomial, multiset_rank, multiset_unrank, BitMessage, MultisetType};
pub use domain::{Domain, Shape};
pub use error::{Error, Result};
pub use norms::{conjugate, lp_norm};
pub use optimizers::{psgd_run, smd_run, MirrorMap, RunResult};
pub use oracles::{
    BernoulliProductOracle, FiniteSumAbsOracle, HardInstanceParams, InstanceDescriptor,
    LinearOracle, Oracle, PaninskiOracle,
};
pub use quantizers::{
    CuqSpec, Family, GradientVector, QuantizedMessage, QuantizerDescriptor, QuantizerSpec,
    RatqSpec, SimQPlusSpec, SimQSpec, SplitSpec,
};
pub use rotation::RotationSeed;
