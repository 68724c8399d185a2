//! Gate-level occupancy laws `W_n`.
//!
//! Every law is built from at most two independent components (one per
//! polarization). A component is Poisson, negative binomial of integer order
//! (thermal bosons, `order` modes with a geometric law each) or binomial
//! (thermal fermions, at most one quantum per mode and spin). All modes share
//! the same per-mode mean.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{domain, invalid, Error, Result};
use crate::special::{ln_binomial, ln_factorial, ln_gamma, xlny};

/// Cumulative mass reached by truncated pmf tables.
pub const MASS_TOLERANCE: f64 = 1e-10;
/// Upper bound on the number of pmf terms in a table.
pub const MAX_TERMS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Coherent,
    BosonPolarized,
    BosonPartial,
    BosonUnpolarized,
    FermionPolarized,
    FermionPartial,
    FermionUnpolarized,
}

impl SourceKind {
    pub const ALL: [SourceKind; 7] = [
        SourceKind::Coherent,
        SourceKind::BosonPolarized,
        SourceKind::BosonPartial,
        SourceKind::BosonUnpolarized,
        SourceKind::FermionPolarized,
        SourceKind::FermionPartial,
        SourceKind::FermionUnpolarized,
    ];

    pub fn is_fermion(self) -> bool {
        matches!(
            self,
            SourceKind::FermionPolarized | SourceKind::FermionPartial | SourceKind::FermionUnpolarized
        )
    }

    pub fn is_boson(self) -> bool {
        matches!(
            self,
            SourceKind::BosonPolarized | SourceKind::BosonPartial | SourceKind::BosonUnpolarized
        )
    }

    pub fn is_partial(self) -> bool {
        matches!(self, SourceKind::BosonPartial | SourceKind::FermionPartial)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Coherent => "coherent",
            SourceKind::BosonPolarized => "boson-polarized",
            SourceKind::BosonPartial => "boson-partial",
            SourceKind::BosonUnpolarized => "boson-unpolarized",
            SourceKind::FermionPolarized => "fermion-polarized",
            SourceKind::FermionPartial => "fermion-partial",
            SourceKind::FermionUnpolarized => "fermion-unpolarized",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SourceKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown source kind '{s}'")))
    }
}

/// One independent contribution to the gate occupancy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum Component {
    Poisson { mean: f64 },
    /// Sum of `order` geometric variables with mean `mode_mean` each.
    NegativeBinomial { order: u64, mode_mean: f64 },
    /// Sum of `order` Bernoulli variables with success probability `prob`.
    Binomial { order: u64, prob: f64 },
}

impl Component {
    /// Geometric ratio `b = n̄/(1+n̄)` of a negative-binomial component.
    pub fn ratio(mode_mean: f64) -> f64 {
        mode_mean / (1.0 + mode_mean)
    }

    pub fn pmf(&self, n: u64) -> f64 {
        let nf = n as f64;
        match *self {
            Component::Poisson { mean } => {
                if mean == 0.0 {
                    return if n == 0 { 1.0 } else { 0.0 };
                }
                (nf * mean.ln() - mean - ln_factorial(n)).exp()
            }
            Component::NegativeBinomial { order, mode_mean } => {
                if mode_mean == 0.0 {
                    return if n == 0 { 1.0 } else { 0.0 };
                }
                let order = order as f64;
                // ln(1 - b) = -ln(1 + n̄), ln b = ln n̄ - ln(1 + n̄).
                let ln1p = mode_mean.ln_1p();
                let ln_coeff = ln_gamma(order + nf) - ln_gamma(order) - ln_factorial(n);
                (ln_coeff - order * ln1p + nf * (mode_mean.ln() - ln1p)).exp()
            }
            Component::Binomial { order, prob } => {
                if n > order {
                    return 0.0;
                }
                if (prob == 0.0 && n > 0) || (prob == 1.0 && n < order) {
                    return 0.0;
                }
                let rest = (order - n) as f64;
                (ln_binomial(order, n) + xlny(nf, prob) + xlny(rest, 1.0 - prob)).exp()
            }
        }
    }

    pub fn pgf(&self, z: f64) -> Result<f64> {
        match *self {
            Component::Poisson { mean } => Ok((mean * (z - 1.0)).exp()),
            Component::NegativeBinomial { order, mode_mean } => {
                let b = Self::ratio(mode_mean);
                if b * z >= 1.0 {
                    return Err(domain(format!("boson pgf diverges for b·z = {} >= 1", b * z)));
                }
                Ok(((1.0 - b) / (1.0 - b * z)).powf(order as f64))
            }
            Component::Binomial { order, prob } => Ok((1.0 + prob * (z - 1.0)).powf(order as f64)),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Component::Poisson { mean } => mean,
            Component::NegativeBinomial { order, mode_mean } => order as f64 * mode_mean,
            Component::Binomial { order, prob } => order as f64 * prob,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Component::Poisson { mean } => mean,
            Component::NegativeBinomial { order, mode_mean } => {
                order as f64 * mode_mean * (1.0 + mode_mean)
            }
            Component::Binomial { order, prob } => order as f64 * prob * (1.0 - prob),
        }
    }

    /// `⟨n(n-1)⟩`.
    pub fn factorial2(&self) -> f64 {
        match *self {
            Component::Poisson { mean } => mean * mean,
            Component::NegativeBinomial { order, mode_mean } => {
                let o = order as f64;
                o * (o + 1.0) * mode_mean * mode_mean
            }
            Component::Binomial { order, prob } => {
                let o = order as f64;
                o * (o - 1.0) * prob * prob
            }
        }
    }

    /// Largest `n` with nonzero probability, when finite.
    pub fn support_max(&self) -> Option<u64> {
        match *self {
            Component::Binomial { order, .. } => Some(order),
            Component::Poisson { mean } | Component::NegativeBinomial { mode_mean: mean, .. }
                if mean == 0.0 =>
            {
                Some(0)
            }
            _ => None,
        }
    }

    /// pmf values from `n = 0` until the cumulative mass reaches `1 - tol`
    /// (or the support ends).
    pub fn table(&self, tol: f64) -> Vec<f64> {
        truncated_table(|n| self.pmf(n), self.support_max(), tol)
    }
}

fn truncated_table(pmf: impl Fn(u64) -> f64, support_max: Option<u64>, tol: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut cum = 0.0;
    let mut peak = 0.0f64;
    let last = support_max.unwrap_or(u64::MAX);
    let mut n = 0u64;
    while out.len() < MAX_TERMS {
        let w = pmf(n);
        out.push(w);
        cum += w;
        peak = peak.max(w);
        // Rounding can keep `cum` just short of `1 - tol`; a decaying tail far
        // below the peak carries no further mass.
        let negligible_tail = w < peak && w < 1e-18 * peak;
        if n >= last || cum >= 1.0 - tol || negligible_tail {
            break;
        }
        n += 1;
    }
    out
}

/// Moments of the occupancy law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorialMoments {
    pub mean: f64,
    pub second: f64,
    pub factorial2: f64,
    pub variance: f64,
    /// `⟨Δn²⟩/⟨n⟩`.
    pub fano: f64,
    pub mandel_q: f64,
}

/// Occupancy law of one gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceLaw {
    kind: SourceKind,
    modes: u64,
    nbar: f64,
    polarization: f64,
}

impl SourceLaw {
    /// General constructor. `polarization` is only read for the partial kinds.
    pub fn new(kind: SourceKind, modes: u64, nbar: f64, polarization: f64) -> Result<Self> {
        if modes == 0 {
            return Err(invalid("number of modes must be a positive integer"));
        }
        if !nbar.is_finite() || nbar <= 0.0 {
            return Err(invalid(format!("mean occupation per mode must be > 0, got {nbar}")));
        }
        if kind.is_fermion() && nbar > 1.0 {
            return Err(invalid(format!("fermion mean occupation per mode must be <= 1, got {nbar}")));
        }
        let polarization = if kind.is_partial() {
            if !(0.0..=1.0).contains(&polarization) {
                return Err(invalid(format!("degree of polarization must lie in [0, 1], got {polarization}")));
            }
            if kind.is_fermion() && nbar * (1.0 + polarization) / 2.0 > 1.0 {
                return Err(invalid("fermion occupation per mode and spin exceeds 1"));
            }
            polarization
        } else {
            match kind {
                SourceKind::BosonPolarized | SourceKind::FermionPolarized => 1.0,
                SourceKind::BosonUnpolarized | SourceKind::FermionUnpolarized => 0.0,
                _ => 1.0,
            }
        };
        Ok(Self { kind, modes, nbar, polarization })
    }

    pub fn coherent(modes: u64, nbar: f64) -> Result<Self> {
        Self::new(SourceKind::Coherent, modes, nbar, 1.0)
    }

    pub fn boson_polarized(modes: u64, nbar: f64) -> Result<Self> {
        Self::new(SourceKind::BosonPolarized, modes, nbar, 1.0)
    }

    pub fn boson_unpolarized(modes: u64, nbar: f64) -> Result<Self> {
        Self::new(SourceKind::BosonUnpolarized, modes, nbar, 0.0)
    }

    pub fn boson_partial(modes: u64, nbar: f64, polarization: f64) -> Result<Self> {
        Self::new(SourceKind::BosonPartial, modes, nbar, polarization)
    }

    pub fn fermion_polarized(modes: u64, nbar: f64) -> Result<Self> {
        Self::new(SourceKind::FermionPolarized, modes, nbar, 1.0)
    }

    pub fn fermion_unpolarized(modes: u64, nbar: f64) -> Result<Self> {
        Self::new(SourceKind::FermionUnpolarized, modes, nbar, 0.0)
    }

    pub fn fermion_partial(modes: u64, nbar: f64, polarization: f64) -> Result<Self> {
        Self::new(SourceKind::FermionPartial, modes, nbar, polarization)
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn modes(&self) -> u64 {
        self.modes
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }

    pub fn polarization(&self) -> f64 {
        self.polarization
    }

    /// Independent components whose sum is the gate occupancy.
    pub fn components(&self) -> Vec<Component> {
        let m = self.modes;
        let half = |sign: f64| self.nbar * (1.0 + sign * self.polarization) / 2.0;
        match self.kind {
            SourceKind::Coherent => vec![Component::Poisson { mean: self.nbar * m as f64 }],
            SourceKind::BosonPolarized => {
                vec![Component::NegativeBinomial { order: m, mode_mean: self.nbar }]
            }
            SourceKind::BosonUnpolarized => {
                vec![Component::NegativeBinomial { order: 2 * m, mode_mean: self.nbar / 2.0 }]
            }
            SourceKind::BosonPartial => vec![
                Component::NegativeBinomial { order: m, mode_mean: half(1.0) },
                Component::NegativeBinomial { order: m, mode_mean: half(-1.0) },
            ],
            SourceKind::FermionPolarized => vec![Component::Binomial { order: m, prob: self.nbar }],
            SourceKind::FermionUnpolarized => {
                vec![Component::Binomial { order: 2 * m, prob: self.nbar / 2.0 }]
            }
            SourceKind::FermionPartial => vec![
                Component::Binomial { order: m, prob: half(1.0) },
                Component::Binomial { order: m, prob: half(-1.0) },
            ],
        }
    }

    /// `W_n`. Partial kinds use the explicit convolution over the two
    /// polarization components.
    pub fn pmf(&self, n: u64) -> f64 {
        match self.components().as_slice() {
            [single] => single.pmf(n),
            [a, b] => (0..=n).map(|k| a.pmf(k) * b.pmf(n - k)).sum(),
            _ => unreachable!("sources have one or two components"),
        }
    }

    pub fn support_max(&self) -> Option<u64> {
        self.components()
            .iter()
            .map(Component::support_max)
            .sum::<Option<u64>>()
    }

    /// `W_0, W_1, …` up to the smallest cutoff with cumulative mass
    /// `≥ 1 - 1e-10` (capped at `MAX_TERMS`).
    pub fn pmf_table(&self) -> Vec<f64> {
        self.pmf_table_with(MASS_TOLERANCE)
    }

    pub fn pmf_table_with(&self, tol: f64) -> Vec<f64> {
        match self.components().as_slice() {
            [single] => single.table(tol),
            [a, b] => {
                let ta = a.table(tol * 1e-2);
                let tb = b.table(tol * 1e-2);
                let conv = |n: u64| -> f64 {
                    let n = n as usize;
                    let lo = n.saturating_sub(tb.len() - 1);
                    let hi = n.min(ta.len() - 1);
                    (lo..=hi).map(|k| ta[k] * tb[n - k]).sum()
                };
                truncated_table(conv, self.support_max(), tol)
            }
            _ => unreachable!("sources have one or two components"),
        }
    }

    /// Probability generating function `Σ W_n z^n`.
    pub fn pgf(&self, z: f64) -> Result<f64> {
        self.components()
            .iter()
            .try_fold(1.0, |acc, c| Ok(acc * c.pgf(z)?))
    }

    pub fn mean(&self) -> f64 {
        self.components().iter().map(Component::mean).sum()
    }

    pub fn factorial_moments(&self) -> FactorialMoments {
        let comps = self.components();
        let mean: f64 = comps.iter().map(Component::mean).sum();
        let variance: f64 = comps.iter().map(Component::variance).sum();
        let mut factorial2: f64 = comps.iter().map(Component::factorial2).sum();
        if let [a, b] = comps.as_slice() {
            factorial2 += 2.0 * a.mean() * b.mean();
        }
        let fano = variance / mean;
        FactorialMoments {
            mean,
            second: factorial2 + mean,
            factorial2,
            variance,
            fano,
            mandel_q: fano - 1.0,
        }
    }
}

/// Poisson pmf with the given mean.
pub fn poisson_pmf(mean: f64, n: u64) -> f64 {
    Component::Poisson { mean }.pmf(n)
}

/// Total-variation distance between `W_n` and the Poisson law of equal mean.
pub fn poisson_tv_distance(src: &SourceLaw) -> f64 {
    let mean = src.mean();
    let table = src.pmf_table_with(1e-14);
    let poisson = Component::Poisson { mean }.table(1e-14);
    let len = table.len().max(poisson.len());
    let at = |t: &[f64], n: usize, exact: &dyn Fn(u64) -> f64| {
        t.get(n).copied().unwrap_or_else(|| exact(n as u64))
    };
    let half_sum: f64 = (0..len)
        .map(|n| (at(&table, n, &|k| src.pmf(k)) - at(&poisson, n, &|k| poisson_pmf(mean, k))).abs())
        .sum();
    0.5 * half_sum
}
