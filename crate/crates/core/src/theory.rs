//! Scaling functionals for the chromatic number of random geometric graphs.
//!
//! For an indicator window `phi = 1_W` the defining equation of `xi(phi, t)`,
//! `vol(W) * H(e^s) = 1 / (t f_max)`, is scalar, so `xi = vol(W) * H^{-1}(1 / (t f_max vol(W)))`
//! with `H(x) = x ln x - x + 1` inverted on `[1, inf)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Absolute tolerance on `y` for [`h_inverse_upper`].
pub const H_INVERSE_TOL: f64 = 1e-12;

/// Limit of `n r^d / ln n`; `Infinite` is a distinguished value, not a large float.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LimitRatio {
    Finite(f64),
    Infinite,
}

impl LimitRatio {
    pub fn scaled(self, factor: f64) -> LimitRatio {
        match self {
            LimitRatio::Finite(t) => LimitRatio::Finite(t * factor),
            LimitRatio::Infinite => LimitRatio::Infinite,
        }
    }
}

impl fmt::Display for LimitRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitRatio::Finite(t) => write!(f, "{t}"),
            LimitRatio::Infinite => write!(f, "inf"),
        }
    }
}

/// `k_n = ln n / ln(ln n / (n r^d))`, defined for `0 < n r^d < ln n`.
pub fn k_n(n: f64, nrd: f64) -> Result<f64> {
    let ln_n = n.ln();
    if !(ln_n > 0.0) {
        return Err(Error::Domain(format!("k_n needs n > 1, got {n}")));
    }
    if !(nrd > 0.0 && nrd < ln_n) {
        return Err(Error::Domain(format!(
            "k_n needs 0 < n r^d < ln n, got n r^d = {nrd}, ln n = {ln_n}"
        )));
    }
    Ok(ln_n / (ln_n / nrd).ln())
}

/// `H(x) = x ln x - x + 1`.
pub fn h_function(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("H needs x > 0, got {x}")));
    }
    Ok(x * x.ln() - (x - 1.0))
}

fn h(x: f64) -> f64 {
    x * x.ln() - (x - 1.0)
}

/// The unique `y >= 1` with `H(y) = c`, by bisection on a doubling bracket.
pub fn h_inverse_upper(c: f64) -> Result<f64> {
    if !(c >= 0.0) || c.is_infinite() {
        return Err(Error::Domain(format!("H inverse needs finite c >= 0, got {c}")));
    }
    if c == 0.0 {
        return Ok(1.0);
    }
    let mut lo = 1.0;
    let mut hi = 2.0;
    while h(hi) < c {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > H_INVERSE_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // H is increasing here, so the endpoint with the smaller residual is the closer one.
    Ok(if (h(lo) - c).abs() <= (h(hi) - c).abs() { lo } else { hi })
}

/// `xi(1_W, t)` for a window of volume `volume_w` and density supremum `f_max`.
pub fn xi_indicator(volume_w: f64, t: LimitRatio, f_max: f64) -> Result<f64> {
    if !(volume_w > 0.0 && volume_w.is_finite()) || !(f_max > 0.0 && f_max.is_finite()) {
        return Err(Error::Domain(format!(
            "xi needs positive finite volume and f_max, got {volume_w}, {f_max}"
        )));
    }
    match t {
        LimitRatio::Infinite => Ok(volume_w),
        LimitRatio::Finite(t) if t > 0.0 && t.is_finite() => {
            Ok(volume_w * h_inverse_upper(1.0 / (t * f_max * volume_w))?)
        }
        LimitRatio::Finite(t) => Err(Error::Domain(format!("xi needs t > 0, got {t}"))),
    }
}

/// `xi(1_W, l^d t) / xi(1_W, t)`: the single-window proxy for the connectivity-regime
/// constant. It lies in `[l^{-d}, 1]`.
pub fn c_ratio_indicator(l: usize, d: usize, t: LimitRatio, volume_w: f64, f_max: f64) -> Result<f64> {
    if l == 0 || d == 0 {
        return Err(Error::Domain(format!("c ratio needs l, d >= 1, got l = {l}, d = {d}")));
    }
    let scale = (l as f64).powi(d as i32);
    Ok(xi_indicator(volume_w, t.scaled(scale), f_max)? / xi_indicator(volume_w, t, f_max)?)
}
