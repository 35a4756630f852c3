//! Vector norms and exponent helpers. Exponents are `f64` with
//! `f64::INFINITY` standing for the sup norm.

/// Relative slack allowed when checking `||y||_q <= B` at quantizer entry.
pub const NORM_TOL: f64 = 1e-9;

/// The lp norm of `v`; `p` must be at least 1 and may be infinite.
pub fn lp_norm(v: &[f64], p: f64) -> f64 {
    debug_assert!(p >= 1.0, "lp_norm needs p >= 1, got {p}");
    if p.is_infinite() {
        return v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    }
    if p == 1.0 {
        return v.iter().map(|x| x.abs()).sum();
    }
    if p == 2.0 {
        return v.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    // scale by the largest magnitude so large exponents neither overflow nor vanish
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = v.iter().map(|x| (x.abs() / scale).powf(p)).sum();
    scale * s.powf(1.0 / p)
}

/// Holder conjugate `p / (p - 1)`, with `1 <-> inf`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `1/p`, which is zero for the sup norm.
pub fn recip(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

/// Whether `norm <= bound` up to [`NORM_TOL`] relative slack.
pub fn within_bound(norm: f64, bound: f64) -> bool {
    norm <= bound * (1.0 + NORM_TOL)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Ceiling that snaps values within 1e-9 of an integer onto it, so that
/// `log2(8.000000000000002)` counts as 3 bits rather than 4.
pub fn ceil_snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// `ceil(log2(n))` for `n >= 1` in exact integer arithmetic.
pub fn ceil_log2(n: u64) -> u32 {
    assert!(n >= 1, "ceil_log2 of zero");
    if n == 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}
