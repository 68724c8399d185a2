//! Mode-count functions `M(x)`.
//!
//! `x` is a dimensionless overlap between detector region and coherence
//! cell: spatially `x = (s_x/λ_x)·δ_x`, temporally `x = (2T_S/τ_c)·|δ_t|`.
//! Both closed forms are reciprocals of `∫_{-1}^{1} (1-|u|) |γ(xu)|² du`
//! with a Gaussian (`e^{-πx²u²}`) or exponential (`e^{-2x|u|}`) coherence
//! factor. They go to 1 for `x → 0` and to `x` for `x → ∞`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{domain, invalid, Error, Result};
use crate::special::erf;
use crate::statistics::{thermal_k, Statistics};

/// Below this overlap the closed forms are replaced by their Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeProfile {
    Gaussian,
    Lorentzian,
    /// `M = 1 + x`, the simple upper envelope of both profiles.
    LinearApprox,
}

impl ModeProfile {
    pub fn count(self, x: f64) -> Result<f64> {
        match self {
            ModeProfile::Gaussian => gaussian_mode_count(x),
            ModeProfile::Lorentzian => lorentzian_mode_count(x),
            ModeProfile::LinearApprox => {
                check_overlap(x)?;
                Ok(1.0 + x)
            }
        }
    }
}

impl fmt::Display for ModeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeProfile::Gaussian => "gaussian",
            ModeProfile::Lorentzian => "lorentzian",
            ModeProfile::LinearApprox => "linear-approx",
        })
    }
}

impl FromStr for ModeProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(ModeProfile::Gaussian),
            "lorentzian" => Ok(ModeProfile::Lorentzian),
            "linear-approx" | "linear" => Ok(ModeProfile::LinearApprox),
            _ => Err(invalid(format!("unknown mode profile '{s}'"))),
        }
    }
}

fn check_overlap(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(domain(format!("overlap must be >= 0, got {x}")));
    }
    Ok(())
}

/// Gaussian beam on a rectangular detector:
/// `M_G = [erf(√π x)/x - (1/π)(1/x²)(1 - e^{-πx²})]^{-1}`.
pub fn gaussian_mode_count(x: f64) -> Result<f64> {
    check_overlap(x)?;
    if x.is_infinite() {
        return Ok(x);
    }
    if x < SERIES_THRESHOLD {
        // 1 - a/6 + a²/30 - a³/168 with a = πx².
        let a = std::f64::consts::PI * x * x;
        let overlap = 1.0 - a / 6.0 + a * a / 30.0 - a * a * a / 168.0;
        return Ok(1.0 / overlap);
    }
    let pi = std::f64::consts::PI;
    let overlap = erf(pi.sqrt() * x) / x + (-pi * x * x).exp_m1() / (pi * x * x);
    Ok(1.0 / overlap)
}

/// Exponential decay seen through a rectangular gate:
/// `M_L = [1/x - (1/2)(1/x²)(1 - e^{-2x})]^{-1}`.
pub fn lorentzian_mode_count(x: f64) -> Result<f64> {
    check_overlap(x)?;
    if x.is_infinite() {
        return Ok(x);
    }
    if x < SERIES_THRESHOLD {
        // 1 - 2x/3 + x²/3 - 2x³/15 + 2x⁴/45.
        let overlap = 1.0 + x * (-2.0 / 3.0 + x * (1.0 / 3.0 + x * (-2.0 / 15.0 + x * 2.0 / 45.0)));
        return Ok(1.0 / overlap);
    }
    let overlap = 1.0 / x + (-2.0 * x).exp_m1() / (2.0 * x * x);
    Ok(1.0 / overlap)
}

/// Large-`M` asymptote `M ≈ τ_D Δν`.
pub fn asymptotic_mode_count(gate: f64, bandwidth: f64) -> Result<f64> {
    if !(gate > 0.0 && gate.is_finite()) || !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(invalid(format!(
            "gate duration and bandwidth must be > 0 (got {gate}, {bandwidth})"
        )));
    }
    Ok(gate * bandwidth)
}

/// `M = M_x M_y M_t`. Only an approximation: it assumes a cross-spectrally
/// pure field.
pub fn cartesian_mode_count(m_x: f64, m_y: f64, m_t: f64) -> Result<f64> {
    for (name, m) in [("M_x", m_x), ("M_y", m_y), ("M_t", m_t)] {
        if !(m >= 1.0) || !m.is_finite() {
            return Err(invalid(format!("{name} must be >= 1, got {m}")));
        }
    }
    Ok(m_x * m_y * m_t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub x: f64,
    pub modes: f64,
    pub k: f64,
}

impl CurvePoint {
    /// Integer part of the mode count, for step-style rendering.
    pub fn modes_step(&self) -> f64 {
        self.modes.floor()
    }
}

/// Coincidence ratio `K(M(x))` of a thermal source along a sweep of
/// overlaps.
pub fn coincidence_curve(
    statistics: Statistics,
    polarized: bool,
    profile: ModeProfile,
    sweep: &[f64],
) -> Result<Vec<CurvePoint>> {
    sweep
        .iter()
        .map(|&x| {
            let modes = profile.count(x)?;
            let k = thermal_k(statistics, modes, polarized)?;
            Ok(CurvePoint { x, modes, k })
        })
        .collect()
}

/// `steps` evenly spaced points from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let h = (end - start) / (steps - 1) as f64;
            (0..steps)
                .map(|i| if i + 1 == steps { end } else { start + h * i as f64 })
                .collect()
        }
    }
}
