//! Trinomial algebra of one `n`-sequence of elementary measurement acts.
//!
//! Each act ends in exactly one of three outcomes: detector A fires (`p`),
//! detector B fires (`q`), or neither fires (`r`). A sequence of `n`
//! independent acts yields the counts `(ξ_n, η_n)` of A and B events.

use serde::Serialize;

use crate::error::{invalid, undefined, Result};
use crate::special::{ln_factorial, xlny};

/// Sum-to-one tolerance after construction.
pub const SUM_TOLERANCE: f64 = 1e-12;
/// Inputs within this distance of unity are renormalized.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-9;

/// Probabilities `(p, q, r)` of the outcomes A, B and C of one act.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TernaryLaw {
    p: f64,
    q: f64,
    r: f64,
}

impl TernaryLaw {
    pub fn new(p: f64, q: f64, r: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q), ("r", r)] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(format!("{name} must be a finite probability >= 0, got {v}")));
            }
        }
        let sum = p + q + r;
        if (sum - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(invalid(format!("probabilities must sum to 1 (p + q + r = {sum})")));
        }
        Ok(Self { p: p / sum, q: q / sum, r: r / sum })
    }

    /// Law with `r = 1 - p - q`.
    pub fn from_pq(p: f64, q: f64) -> Result<Self> {
        let r = 1.0 - p - q;
        // Rounding can leave r at -1e-17 for p + q = 1.
        Self::new(p, q, if r.abs() < 1e-15 { 0.0 } else { r })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Probability that some detector fires, `s = 1 - r`.
    pub fn s(&self) -> f64 {
        1.0 - self.r
    }

    /// Splitting ratios `(T̃, T̄) = (p/s, q/s)`; `None` when `s = 0`.
    pub fn splitting(&self) -> Option<(f64, f64)> {
        let s = self.s();
        (s > 0.0).then(|| (self.p / s, self.q / s))
    }
}

/// First and second moments of `(ξ_n, η_n)` for a fixed sequence length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SequenceMoments {
    pub n: u64,
    pub mean_xi: f64,
    pub mean_eta: f64,
    pub var_xi: f64,
    pub var_eta: f64,
    /// `E[ξ_n η_n]`.
    pub cross: f64,
}

/// `P(ξ_n = m, η_n = k)`, evaluated in log space.
pub fn trinomial_pmf(law: &TernaryLaw, n: u64, m: u64, k: u64) -> Result<f64> {
    if m.checked_add(k).is_none_or(|mk| mk > n) {
        return Err(invalid(format!("m + k must not exceed n (m={m}, k={k}, n={n})")));
    }
    let rest = n - m - k;
    let (mf, kf, rf) = (m as f64, k as f64, rest as f64);
    if (m > 0 && law.p == 0.0) || (k > 0 && law.q == 0.0) || (rest > 0 && law.r == 0.0) {
        return Ok(0.0);
    }
    let ln = ln_factorial(n) - ln_factorial(m) - ln_factorial(k) - ln_factorial(rest)
        + xlny(mf, law.p)
        + xlny(kf, law.q)
        + xlny(rf, law.r);
    Ok(ln.exp().min(1.0))
}

/// Joint generating function `G_n(x, y) = (p x + q y + r)^n`.
///
/// A polynomial, so any finite arguments are accepted; values near `(1, 1)`
/// are needed for derivative checks.
pub fn sequence_gf(law: &TernaryLaw, n: u64, x: f64, y: f64) -> Result<f64> {
    if !x.is_finite() || !y.is_finite() {
        return Err(invalid(format!("generating-function arguments must be finite, got ({x}, {y})")));
    }
    if n == 0 {
        return Ok(1.0);
    }
    // Written so that (1, 1) gives exactly 1.
    let base = 1.0 - law.p * (1.0 - x) - law.q * (1.0 - y);
    Ok(match i32::try_from(n) {
        Ok(e) => base.powi(e),
        Err(_) => base.powf(n as f64),
    })
}

pub fn sequence_moments(law: &TernaryLaw, n: u64) -> SequenceMoments {
    let nf = n as f64;
    let pairs = nf * (nf - 1.0).max(0.0);
    SequenceMoments {
        n,
        mean_xi: nf * law.p,
        mean_eta: nf * law.q,
        var_xi: nf * law.p * (1.0 - law.p),
        var_eta: nf * law.q * (1.0 - law.q),
        cross: law.p * law.q * pairs,
    }
}

/// Coincidence ratio of one sequence, `K_n = 1 - 1/n`.
pub fn sequence_k(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(undefined("K_n needs at least one act (n = 0)"));
    }
    Ok(1.0 - 1.0 / n as f64)
}

/// Normalized covariance of `(ξ_n, η_n)`: `-√(pq / ((1-p)(1-q)))`.
pub fn sequence_r(law: &TernaryLaw) -> Result<f64> {
    let open = |v: f64| v > 0.0 && v < 1.0;
    if !open(law.p) || !open(law.q) {
        return Err(undefined(format!(
            "correlation coefficient needs 0 < p, q < 1 (p={}, q={})",
            law.p, law.q
        )));
    }
    Ok(-(law.p * law.q / ((1.0 - law.p) * (1.0 - law.q))).sqrt())
}
