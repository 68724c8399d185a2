//! Monte Carlo oracle: direct simulation of gates of ternary acts.
//!
//! Every gate draws an occupancy `n` from the source law and then `n`
//! independent acts, each firing detector A, detector B or neither. Gates
//! are grouped in blocks; block `i` uses its own ChaCha stream keyed by
//! `(seed, i)` and accumulates integer sums, so the totals do not depend on
//! how blocks are scheduled across threads.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Geometric, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::elementary::TernaryLaw;
use crate::error::{invalid, Error, Result};
use crate::sources::{Component, SourceKind, SourceLaw};
use crate::statistics::series_moments;

/// Default number of blocks a run is cut into.
pub const DEFAULT_BLOCKS: u64 = 100;
/// Default acceptance threshold in standard errors.
pub const DEFAULT_Z_MAX: f64 = 4.0;

/// Per-block random stream.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

#[derive(Debug, Clone)]
enum Part {
    Poisson(Poisson<f64>),
    Geometric { order: u64, dist: Geometric },
    Bernoulli { order: u64, dist: Bernoulli },
}

/// Occupancy sampler for a source law. Negative-binomial components are
/// drawn as sums of geometric variables, binomial ones as sums of Bernoulli
/// trials.
#[derive(Debug, Clone)]
pub struct OccupancySampler {
    parts: Vec<Part>,
}

impl OccupancySampler {
    pub fn new(source: &SourceLaw) -> Self {
        let parts = source
            .components()
            .into_iter()
            .map(|c| match c {
                Component::Poisson { mean } => {
                    Part::Poisson(Poisson::new(mean).expect("validated source has a positive mean"))
                }
                Component::NegativeBinomial { order, mode_mean } => Part::Geometric {
                    order,
                    dist: Geometric::new(1.0 - Component::ratio(mode_mean))
                        .expect("geometric parameter lies in (0, 1]"),
                },
                Component::Binomial { order, prob } => Part::Bernoulli {
                    order,
                    dist: Bernoulli::new(prob).expect("validated source has prob in [0, 1]"),
                },
            })
            .collect();
        Self { parts }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.parts
            .iter()
            .map(|part| match part {
                Part::Poisson(d) => d.sample(rng) as u64,
                Part::Geometric { order, dist } => (0..*order).map(|_| dist.sample(rng)).sum(),
                Part::Bernoulli { order, dist } => (0..*order).filter(|_| dist.sample(rng)).count() as u64,
            })
            .sum()
    }
}

/// One draw of `n` from the source law.
pub fn sample_occupancy<R: Rng + ?Sized>(source: &SourceLaw, rng: &mut R) -> u64 {
    OccupancySampler::new(source).sample(rng)
}

/// Result of a single elementary act.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    A,
    B,
    Neither,
}

pub fn sample_act<R: Rng + ?Sized>(law: &TernaryLaw, rng: &mut R) -> Outcome {
    let u: f64 = rng.random();
    if u < law.p() {
        Outcome::A
    } else if u < law.p() + law.q() {
        Outcome::B
    } else {
        Outcome::Neither
    }
}

/// Counts of one gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gate {
    pub n: u64,
    pub xi: u64,
    pub eta: u64,
}

/// Simulates the `n` acts of one gate.
pub fn sample_gate<R: Rng + ?Sized>(law: &TernaryLaw, n: u64, rng: &mut R) -> Gate {
    let mut gate = Gate { n, xi: 0, eta: 0 };
    for _ in 0..n {
        match sample_act(law, rng) {
            Outcome::A => gate.xi += 1,
            Outcome::B => gate.eta += 1,
            Outcome::Neither => {}
        }
    }
    gate
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub law: TernaryLaw,
    pub source: SourceLaw,
    pub gates: u64,
    pub seed: u64,
    /// Gates per random-stream block.
    pub block_size: u64,
}

/// Block size that cuts `gates` into [`DEFAULT_BLOCKS`] blocks.
pub fn default_block_size(gates: u64) -> u64 {
    gates.div_ceil(DEFAULT_BLOCKS).max(1)
}

impl SimulationConfig {
    pub fn new(law: TernaryLaw, source: SourceLaw, gates: u64, seed: u64) -> Self {
        Self { law, source, gates, seed, block_size: default_block_size(gates) }
    }

    pub fn blocks(&self) -> u64 {
        if self.block_size == 0 {
            0
        } else {
            self.gates.div_ceil(self.block_size)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Sums {
    gates: u64,
    xi: u64,
    eta: u64,
    xi2: u128,
    eta2: u128,
    xi_eta: u128,
    n: u64,
    n2: u128,
}

impl Sums {
    fn push(&mut self, g: Gate) {
        self.gates += 1;
        self.xi += g.xi;
        self.eta += g.eta;
        self.xi2 += (g.xi as u128).pow(2);
        self.eta2 += (g.eta as u128).pow(2);
        self.xi_eta += g.xi as u128 * g.eta as u128;
        self.n += g.n;
        self.n2 += (g.n as u128).pow(2);
    }

    fn add(mut self, o: &Sums) -> Sums {
        self.gates += o.gates;
        self.xi += o.xi;
        self.eta += o.eta;
        self.xi2 += o.xi2;
        self.eta2 += o.eta2;
        self.xi_eta += o.xi_eta;
        self.n += o.n;
        self.n2 += o.n2;
        self
    }

    fn sub(mut self, o: &Sums) -> Sums {
        self.gates -= o.gates;
        self.xi -= o.xi;
        self.eta -= o.eta;
        self.xi2 -= o.xi2;
        self.eta2 -= o.eta2;
        self.xi_eta -= o.xi_eta;
        self.n -= o.n;
        self.n2 -= o.n2;
        self
    }

    fn value(&self, stat: Statistic) -> f64 {
        let g = self.gates as f64;
        let mx = self.xi as f64 / g;
        let me = self.eta as f64 / g;
        match stat {
            Statistic::MeanXi => mx,
            Statistic::MeanEta => me,
            Statistic::K => self.xi_eta as f64 / g / (mx * me),
            Statistic::R => {
                let cov = self.xi_eta as f64 / g - mx * me;
                let vx = self.xi2 as f64 / g - mx * mx;
                let ve = self.eta2 as f64 / g - me * me;
                cov / (vx * ve).sqrt()
            }
            Statistic::F => {
                let mn = self.n as f64 / g;
                (self.n2 as f64 / g - mn * mn) / mn
            }
        }
    }
}

/// Statistics estimated by the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// `E[ξη] / (E[ξ]E[η])`.
    K,
    /// Pearson correlation of `ξ` and `η`.
    R,
    /// Fano factor of the occupancy.
    F,
    MeanXi,
    MeanEta,
}

impl Statistic {
    pub const ALL: [Statistic; 5] =
        [Statistic::K, Statistic::R, Statistic::F, Statistic::MeanXi, Statistic::MeanEta];

    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::K => "k",
            Statistic::R => "r",
            Statistic::F => "f",
            Statistic::MeanXi => "mean_xi",
            Statistic::MeanEta => "mean_eta",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Statistic::ALL
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown statistic '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    /// Standard error from the spread over blocks.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub gates: u64,
    pub blocks: u64,
    pub block_size: u64,
    pub seed: u64,
    pub estimates: BTreeMap<Statistic, Estimate>,
}

impl EstimateReport {
    pub fn get(&self, stat: Statistic) -> Option<Estimate> {
        self.estimates.get(&stat).copied()
    }
}

fn check_run(gates: u64, block_size: u64) -> Result<u64> {
    if gates < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 gates, got {gates}")));
    }
    if block_size == 0 {
        return Err(invalid("block size must be >= 1"));
    }
    let blocks = gates.div_ceil(block_size);
    if blocks < 2 {
        return Err(Error::InsufficientData(format!(
            "{gates} gates in blocks of {block_size} leave fewer than 2 blocks"
        )));
    }
    Ok(blocks)
}

fn run_blocks<F>(gates: u64, block_size: u64, seed: u64, occupancy: F, law: &TernaryLaw) -> Vec<Sums>
where
    F: Fn(&mut ChaCha8Rng) -> u64 + Sync,
{
    let blocks = gates.div_ceil(block_size);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let len = block_size.min(gates - b * block_size);
            let mut sums = Sums::default();
            for _ in 0..len {
                let n = occupancy(&mut rng);
                sums.push(sample_gate(law, n, &mut rng));
            }
            sums
        })
        .collect()
}

/// Point estimate from the pooled sums; standard error by the delete-one-block
/// jackknife, which coincides with batch means for the plain averages and
/// stays finite for the ratio statistics.
fn summarize(blocks: &[Sums], stats: &[Statistic]) -> Result<BTreeMap<Statistic, Estimate>> {
    let total = blocks.iter().fold(Sums::default(), |acc, b| acc.add(b));
    if total.xi == 0 || total.eta == 0 || total.n == 0 {
        return Err(Error::InsufficientData("no detector counts in the simulated gates".into()));
    }
    let nb = blocks.len() as f64;
    let mut out = BTreeMap::new();
    for &stat in stats {
        let value = total.value(stat);
        let loo: Vec<f64> = blocks.iter().map(|b| total.sub(b).value(stat)).collect();
        let se = if loo.iter().all(|v| v.is_finite()) {
            let mean = loo.iter().sum::<f64>() / nb;
            ((nb - 1.0) / nb * loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>()).sqrt()
        } else {
            f64::NAN
        };
        if !value.is_finite() {
            return Err(Error::InsufficientData(format!("statistic {stat} is undefined for this sample")));
        }
        out.insert(stat, Estimate { value, se });
    }
    Ok(out)
}

/// Simulates a series of gates and estimates `K`, `R`, `F` and the means.
pub fn simulate_series(cfg: &SimulationConfig) -> Result<EstimateReport> {
    let blocks = check_run(cfg.gates, cfg.block_size)?;
    let sampler = OccupancySampler::new(&cfg.source);
    let sums = run_blocks(cfg.gates, cfg.block_size, cfg.seed, |rng| sampler.sample(rng), &cfg.law);
    Ok(EstimateReport {
        gates: cfg.gates,
        blocks,
        block_size: cfg.block_size,
        seed: cfg.seed,
        estimates: summarize(&sums, &Statistic::ALL)?,
    })
}

/// Simulates `sequences` runs of exactly `n` acts each. The occupancy does
/// not fluctuate, so `F` is not reported.
pub fn simulate_sequences(
    law: &TernaryLaw,
    n: u64,
    sequences: u64,
    seed: u64,
    block_size: u64,
) -> Result<EstimateReport> {
    let blocks = check_run(sequences, block_size)?;
    if n == 0 {
        return Err(Error::InsufficientData("sequences of length 0 have no acts".into()));
    }
    let sums = run_blocks(sequences, block_size, seed, |_| n, law);
    let stats = [Statistic::K, Statistic::R, Statistic::MeanXi, Statistic::MeanEta];
    Ok(EstimateReport { gates: sequences, blocks, block_size, seed, estimates: summarize(&sums, &stats)? })
}

/// Analytic counterparts of every statistic reported by [`simulate_series`].
pub fn analytic_values(law: &TernaryLaw, source: &SourceLaw) -> Result<BTreeMap<Statistic, f64>> {
    let m = series_moments(law, source)?;
    Ok(BTreeMap::from([
        (Statistic::K, m.k_ratio),
        (Statistic::R, m.r_exact),
        (Statistic::F, m.fano),
        (Statistic::MeanXi, m.mean_xi),
        (Statistic::MeanEta, m.mean_eta),
    ]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub statistic: Statistic,
    pub estimate: f64,
    pub se: f64,
    pub analytic: f64,
    /// `|estimate - analytic| / se`; zero-variance estimates give 0 on an
    /// exact match and infinity otherwise.
    pub z: f64,
    pub pass: bool,
}

pub fn z_score(estimate: f64, se: f64, analytic: f64) -> f64 {
    let diff = (estimate - analytic).abs();
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Compares each estimate with its analytic value at `z_max` standard errors.
pub fn verify(report: &EstimateReport, analytic: &BTreeMap<Statistic, f64>, z_max: f64) -> Result<Vec<Verdict>> {
    if !(z_max >= 0.0) {
        return Err(invalid(format!("z_max must be >= 0, got {z_max}")));
    }
    if !report.estimates.keys().eq(analytic.keys()) {
        let names = |it: &mut dyn Iterator<Item = &Statistic>| {
            it.map(|s| s.as_str()).collect::<Vec<_>>().join(",")
        };
        return Err(Error::MismatchedStatistics(format!(
            "report has [{}], analytic values have [{}]",
            names(&mut report.estimates.keys()),
            names(&mut analytic.keys())
        )));
    }
    Ok(report
        .estimates
        .iter()
        .map(|(&statistic, est)| {
            let a = analytic[&statistic];
            let z = z_score(est.value, est.se, a);
            Verdict { statistic, estimate: est.value, se: est.se, analytic: a, z, pass: z <= z_max }
        })
        .collect())
}

/// A labelled (law, source) pair of the reference grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub label: &'static str,
    pub law: TernaryLaw,
    pub source: SourceLaw,
}

/// Twelve (law, source) pairs covering every source kind and two ternary laws.
pub fn reference_grid() -> Vec<GridPoint> {
    use SourceKind::*;
    let a = TernaryLaw::new(0.2, 0.2, 0.6).expect("valid law");
    let b = TernaryLaw::new(0.3, 0.2, 0.5).expect("valid law");
    let points: [(&str, TernaryLaw, SourceKind, u64, f64, f64); 12] = [
        ("coherent M=2 nbar=1", a, Coherent, 2, 1.0, 0.0),
        ("boson-polarized M=1 nbar=1", a, BosonPolarized, 1, 1.0, 0.0),
        ("boson-unpolarized M=2 nbar=1", a, BosonUnpolarized, 2, 1.0, 0.0),
        ("boson-partial M=4 nbar=1 P=0.5", a, BosonPartial, 4, 1.0, 0.5),
        ("fermion-polarized M=5 nbar=0.5", a, FermionPolarized, 5, 0.5, 0.0),
        ("fermion-unpolarized M=3 nbar=0.8", a, FermionUnpolarized, 3, 0.8, 0.0),
        ("fermion-partial M=4 nbar=0.6 P=0.5", a, FermionPartial, 4, 0.6, 0.5),
        ("coherent M=1 nbar=3", b, Coherent, 1, 3.0, 0.0),
        ("boson-polarized M=3 nbar=0.5", b, BosonPolarized, 3, 0.5, 0.0),
        ("boson-unpolarized M=1 nbar=2", b, BosonUnpolarized, 1, 2.0, 0.0),
        ("fermion-polarized M=10 nbar=0.3", b, FermionPolarized, 10, 0.3, 0.0),
        ("fermion-partial M=6 nbar=0.9 P=0.2", b, FermionPartial, 6, 0.9, 0.2),
    ];
    points
        .into_iter()
        .map(|(label, law, kind, m, nbar, pol)| GridPoint {
            label,
            law,
            source: SourceLaw::new(kind, m, nbar, pol).expect("valid grid source"),
        })
        .collect()
}
