//! Series-level observables: a mixture of `n`-sequences weighted by `W_n`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::elementary::TernaryLaw;
use crate::error::{domain, invalid, undefined, Error, Result};
use crate::sources::SourceLaw;
use crate::special::xlny;

/// Quantum statistics of a thermal source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistics {
    Boson,
    Fermion,
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistics::Boson => "boson",
            Statistics::Fermion => "fermion",
        })
    }
}

impl FromStr for Statistics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boson" | "bosons" | "thermal-boson" => Ok(Statistics::Boson),
            "fermion" | "fermions" | "thermal-fermion" => Ok(Statistics::Fermion),
            _ => Err(invalid(format!("unknown statistics '{s}' (expected boson or fermion)"))),
        }
    }
}

/// Moments of the two detector counts `(ξ, η)` over a whole series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesMoments {
    pub mean_xi: f64,
    pub mean_eta: f64,
    /// `E[ξ²]`.
    pub second_xi: f64,
    pub second_eta: f64,
    /// `E[ξ²] - E[ξ]²`, including the occupancy-variance term `p²⟨Δn²⟩`.
    pub var_xi: f64,
    pub var_eta: f64,
    /// `E[ξ·η]`.
    pub cross: f64,
    /// Coincidence ratio `K = E[ξη] / (E[ξ] E[η])`.
    pub k_ratio: f64,
    /// `√(pq / ((1-p)(1-q))) · (F - 1)`. Built on the compact per-act
    /// variance `p(1-p)⟨n⟩`; it reaches 1 at the thermal max-contrast pump.
    pub r_coeff: f64,
    /// Pearson correlation of `(ξ, η)` from the full moments above. Agrees
    /// with `r_coeff` in sign and vanishes with it at `F = 1`.
    pub r_exact: f64,
    pub fano: f64,
    pub mandel_q: f64,
}

pub fn series_moments(law: &TernaryLaw, src: &SourceLaw) -> Result<SeriesMoments> {
    let (p, q) = (law.p(), law.q());
    let open = |v: f64| v > 0.0 && v < 1.0;
    if !open(p) || !open(q) {
        return Err(undefined(format!("series ratios need 0 < p, q < 1 (p={p}, q={q})")));
    }
    let fm = src.factorial_moments();
    let mean = fm.mean;
    if mean <= 0.0 {
        return Err(undefined("mean occupancy is zero"));
    }
    let second = fm.second;
    let mean_xi = p * mean;
    let mean_eta = q * mean;
    let second_xi = p * (1.0 - p) * mean + p * p * second;
    let second_eta = q * (1.0 - q) * mean + q * q * second;
    // Differences of E[ξ²] and E[ξ]² cancel badly; use the variance directly.
    let var_xi = p * (1.0 - p) * mean + p * p * fm.variance;
    let var_eta = q * (1.0 - q) * mean + q * q * fm.variance;
    let cross = p * q * fm.factorial2;
    let k_ratio = 1.0 + fm.mandel_q / mean;
    let r_coeff = (p * q / ((1.0 - p) * (1.0 - q))).sqrt() * fm.mandel_q;
    let r_exact = p * q * (fm.variance - mean) / (var_xi * var_eta).sqrt();
    Ok(SeriesMoments {
        mean_xi,
        mean_eta,
        second_xi,
        second_eta,
        var_xi,
        var_eta,
        cross,
        k_ratio,
        r_coeff,
        r_exact,
        fano: fm.fano,
        mandel_q: fm.mandel_q,
    })
}

/// Closed-form coincidence ratio of a thermal source spanning `modes`
/// modes: `1 ± 1/M` polarized, `1 ± 1/(2M)` unpolarized. Real `modes` are
/// accepted for mode-sweep curves.
pub fn thermal_k(statistics: Statistics, modes: f64, polarized: bool) -> Result<f64> {
    if !modes.is_finite() || modes <= 0.0 {
        return Err(invalid(format!("number of modes must be > 0, got {modes}")));
    }
    let effective = if polarized { modes } else { 2.0 * modes };
    match statistics {
        Statistics::Boson => Ok(1.0 + 1.0 / effective),
        Statistics::Fermion => {
            if effective < 1.0 {
                return Err(invalid(format!(
                    "fermion coincidence ratio would be negative (effective modes {effective} < 1)"
                )));
            }
            Ok(1.0 - 1.0 / effective)
        }
    }
}

/// Energy variance `ΔE² = hν Ē ± Ē²/M` of a thermal field (`+` bosons,
/// `-` fermions).
pub fn energy_fluctuation(statistics: Statistics, mean_energy: f64, quantum: f64, modes: f64) -> Result<f64> {
    for (name, v) in [("mean energy", mean_energy), ("quantum", quantum), ("modes", modes)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(invalid(format!("{name} must be > 0, got {v}")));
        }
    }
    let wave = mean_energy * mean_energy / modes;
    let particle = quantum * mean_energy;
    match statistics {
        Statistics::Boson => Ok(particle + wave),
        Statistics::Fermion => {
            if mean_energy / modes > quantum * (1.0 + 1e-12) {
                return Err(invalid(format!(
                    "fermion occupancy above 1 per mode (E/M = {} > hν = {quantum})",
                    mean_energy / modes
                )));
            }
            Ok((particle - wave).max(0.0))
        }
    }
}

/// Detection fraction `s = 2/(1+⟨n⟩)` at which a single-mode thermal beam
/// split evenly (`T̃ = 1/2`) reaches `R = 1`.
pub fn max_contrast_pump(mean: f64) -> Result<f64> {
    if !mean.is_finite() || mean <= 1.0 {
        return Err(invalid(format!("maximum contrast needs ⟨n⟩ > 1, got {mean}")));
    }
    Ok(2.0 / (1.0 + mean))
}

/// Entropy of one thermal mode with mean occupation `⟨n⟩`, in units of `k_B`.
pub fn entropy_change(mean: f64) -> Result<f64> {
    if !mean.is_finite() || mean <= 0.0 {
        return Err(domain(format!("entropy needs ⟨n⟩ > 0, got {mean}")));
    }
    Ok((1.0 + mean) * mean.ln_1p() - xlny(mean, mean))
}

/// Relative size of an antibunching dip, `Z = N_bg / (N_bg - N_c)`.
pub fn contrast_z(background: f64, coincidences: f64) -> Result<f64> {
    if !(coincidences >= 0.0) {
        return Err(invalid(format!("coincidence count must be >= 0, got {coincidences}")));
    }
    if !(background > coincidences) {
        return Err(undefined(format!(
            "contrast ratio needs N_bg > N_c (N_bg={background}, N_c={coincidences})"
        )));
    }
    Ok(background / (background - coincidences))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elementary::trinomial_pmf;
    use crate::sources::SourceKind;

    fn law(p: f64, q: f64, r: f64) -> TernaryLaw {
        TernaryLaw::new(p, q, r).unwrap()
    }

    fn laws() -> [TernaryLaw; 3] {
        [law(0.2, 0.2, 0.6), law(0.3, 0.2, 0.5), law(0.45, 0.5, 0.05)]
    }

    fn sources() -> Vec<SourceLaw> {
        let mut out = Vec::new();
        for m in [1, 2, 5, 20] {
            for nbar in [0.1, 0.5, 1.0] {
                out.push(SourceLaw::coherent(m, nbar).unwrap());
                out.push(SourceLaw::boson_polarized(m, nbar).unwrap());
                out.push(SourceLaw::boson_unpolarized(m, nbar).unwrap());
                out.push(SourceLaw::boson_partial(m, nbar, 0.6).unwrap());
                out.push(SourceLaw::fermion_polarized(m, nbar).unwrap());
                out.push(SourceLaw::fermion_unpolarized(m, nbar).unwrap());
                out.push(SourceLaw::fermion_partial(m, nbar, 0.6).unwrap());
            }
        }
        out
    }

    fn rel(a: f64, b: f64) -> f64 {
        if b == 0.0 {
            a.abs()
        } else {
            ((a - b) / b).abs()
        }
    }

    #[test]
    fn coherent_is_uncorrelated() {
        for l in laws() {
            let s = series_moments(&l, &SourceLaw::coherent(3, 0.7).unwrap()).unwrap();
            assert!((s.k_ratio - 1.0).abs() < 1e-14);
            assert!(s.r_coeff.abs() < 1e-14 && s.r_exact.abs() < 1e-14);
        }
    }

    #[test]
    fn single_mode_examples() {
        for nbar in [0.1, 1.0, 7.0] {
            for l in laws() {
                let b = series_moments(&l, &SourceLaw::boson_polarized(1, nbar).unwrap()).unwrap();
                assert!((b.k_ratio - 2.0).abs() < 1e-12);
            }
        }
        for nbar in [0.2, 1.0] {
            let f = series_moments(&laws()[1], &SourceLaw::fermion_polarized(1, nbar).unwrap()).unwrap();
            assert!(f.k_ratio.abs() < 1e-14, "{}", f.k_ratio);
        }
    }

    #[test]
    fn partial_polarization_k() {
        let s = series_moments(&laws()[1], &SourceLaw::boson_partial(4, 1.0, 0.5).unwrap()).unwrap();
        assert!((s.k_ratio - 1.15625).abs() < 1e-12);
        // Brute force from the convolution pmf.
        let src = SourceLaw::boson_partial(4, 1.0, 0.5).unwrap();
        let (mut m1, mut f2) = (0.0, 0.0);
        for n in 0..=400u64 {
            let w = src.pmf(n);
            m1 += n as f64 * w;
            f2 += (n as f64) * (n as f64 - 1.0) * w;
        }
        assert!(rel(f2 / (m1 * m1), 1.15625) < 1e-10);
    }

    #[test]
    fn undefined_laws() {
        let src = SourceLaw::coherent(1, 1.0).unwrap();
        assert!(series_moments(&law(0.0, 0.5, 0.5), &src).is_err());
        assert!(series_moments(&law(0.5, 0.0, 0.5), &src).is_err());
    }

    #[test]
    fn thermal_k_examples() {
        assert_eq!(thermal_k(Statistics::Boson, 1.0, true).unwrap(), 2.0);
        assert_eq!(thermal_k(Statistics::Fermion, 1.0, true).unwrap(), 0.0);
        assert!((thermal_k(Statistics::Fermion, 14.0, false).unwrap() - (1.0 - 1.0 / 28.0)).abs() < 1e-15);
        assert!((thermal_k(Statistics::Fermion, 14.0, false).unwrap() - 0.9643).abs() < 5e-5);
        assert!((thermal_k(Statistics::Boson, 1e6, true).unwrap() - 1.000001).abs() < 1e-15);
        assert!(thermal_k(Statistics::Boson, 0.0, true).is_err());
        assert!(thermal_k(Statistics::Fermion, 0.4, false).is_err());
        assert!(thermal_k(Statistics::Fermion, 0.5, false).is_ok());
    }

    #[test]
    fn unifying_identity_on_grid() {
        for src in sources() {
            let fm = src.factorial_moments();
            let direct = fm.factorial2 / (fm.mean * fm.mean);
            for l in laws() {
                let s = series_moments(&l, &src).unwrap();
                assert!(rel(s.k_ratio, direct) < 1e-10, "{src:?}: {} vs {direct}", s.k_ratio);
                assert!(rel(s.k_ratio, s.cross / (s.mean_xi * s.mean_eta)) < 1e-10);
            }
            let closed = match src.kind() {
                SourceKind::BosonPolarized => Some(thermal_k(Statistics::Boson, src.modes() as f64, true)),
                SourceKind::BosonUnpolarized => Some(thermal_k(Statistics::Boson, src.modes() as f64, false)),
                SourceKind::FermionPolarized => Some(thermal_k(Statistics::Fermion, src.modes() as f64, true)),
                SourceKind::FermionUnpolarized => {
                    Some(thermal_k(Statistics::Fermion, src.modes() as f64, false))
                }
                _ => None,
            };
            if let Some(k) = closed {
                let s = series_moments(&laws()[0], &src).unwrap();
                let k = k.unwrap();
                assert!((s.k_ratio - k).abs() <= 1e-10 * k.max(1e-2), "{src:?}: {} vs {k}", s.k_ratio);
            }
        }
    }

    #[test]
    fn k_is_law_independent() {
        for src in sources() {
            let a = series_moments(&laws()[0], &src).unwrap().k_ratio;
            let b = series_moments(&laws()[2], &src).unwrap().k_ratio;
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_law() {
        for src in sources() {
            for l in laws() {
                let s = series_moments(&l, &src).unwrap();
                let q = s.fano - 1.0;
                if q.abs() < 1e-12 {
                    continue;
                }
                assert_eq!((s.k_ratio - 1.0).signum(), q.signum(), "{src:?}");
                assert_eq!(s.r_coeff.signum(), q.signum());
                assert_eq!(s.r_exact.signum(), q.signum());
                assert!(s.r_exact.abs() <= 1.0);
            }
        }
    }

    /// `E[ξ^a η^b]` by summing the mixture pmf.
    fn mixed_moment(l: &TernaryLaw, src: &SourceLaw, a: i32, b: i32) -> f64 {
        let table = src.pmf_table_with(1e-14);
        let mut total = 0.0;
        for (n, w) in table.iter().enumerate() {
            let n = n as u64;
            for m in 0..=n {
                for k in 0..=n - m {
                    total += w * trinomial_pmf(l, n, m, k).unwrap() * (m as f64).powi(a) * (k as f64).powi(b);
                }
            }
        }
        total
    }

    #[test]
    fn coherent_moments_factorize() {
        let src = SourceLaw::coherent(2, 1.5).unwrap();
        let l = laws()[1];
        for a in 1..=2 {
            for b in 1..=2 {
                let joint = mixed_moment(&l, &src, a, b);
                let prod = mixed_moment(&l, &src, a, 0) * mixed_moment(&l, &src, 0, b);
                assert!((joint - prod).abs() < 1e-8, "({a},{b}): {joint} vs {prod}");
            }
        }
    }

    #[test]
    fn series_moments_match_mixture_summation() {
        let l = laws()[1];
        for src in [
            SourceLaw::boson_partial(2, 0.8, 0.3).unwrap(),
            SourceLaw::fermion_unpolarized(3, 0.6).unwrap(),
        ] {
            let s = series_moments(&l, &src).unwrap();
            let ex = mixed_moment(&l, &src, 1, 0);
            let exx = mixed_moment(&l, &src, 2, 0);
            let exy = mixed_moment(&l, &src, 1, 1);
            assert!(rel(s.mean_xi, ex) < 1e-9);
            assert!(rel(s.second_xi, exx) < 1e-9);
            assert!(rel(s.var_xi, exx - ex * ex) < 1e-8);
            assert!(rel(s.cross, exy) < 1e-9);
        }
    }

    #[test]
    fn energy_fluctuation_examples() {
        let hv = 1.7;
        assert!((energy_fluctuation(Statistics::Boson, hv, hv, 1.0).unwrap() - 2.0 * hv * hv).abs() < 1e-12);
        let m = 9.0;
        assert_eq!(energy_fluctuation(Statistics::Fermion, hv * m, hv, m).unwrap(), 0.0);
        let v = energy_fluctuation(Statistics::Boson, 100.0 * hv, hv, 1e3).unwrap();
        assert!((v - 110.0 * hv * hv).abs() < 1e-10);
        assert!(energy_fluctuation(Statistics::Fermion, 2.0 * hv * m, hv, m).is_err());
        assert!(energy_fluctuation(Statistics::Boson, -1.0, hv, m).is_err());
    }

    #[test]
    fn max_contrast_examples() {
        assert_eq!(max_contrast_pump(3.0).unwrap(), 0.5);
        let near = max_contrast_pump(1.0 + 1e-9).unwrap();
        assert!(near < 1.0 && near > 1.0 - 1e-9);
        assert!(max_contrast_pump(1.0).is_err());
        for mean in [1.5, 3.0, 10.0, 250.0] {
            let s = max_contrast_pump(mean).unwrap();
            let l = TernaryLaw::new(s / 2.0, s / 2.0, 1.0 - s).unwrap();
            let src = SourceLaw::boson_polarized(1, mean).unwrap();
            let r = series_moments(&l, &src).unwrap().r_coeff;
            assert!((r - 1.0).abs() < 1e-10, "⟨n⟩={mean}: R={r}");
        }
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy_change(1.0).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!(entropy_change(1e-300).unwrap() < 1e-290);
        assert!((entropy_change(3.0).unwrap() - (4.0 * 4f64.ln() - 3.0 * 3f64.ln())).abs() < 1e-14);
        assert!((entropy_change(3.0).unwrap() - 2.249).abs() < 5e-4);
        assert!(entropy_change(0.0).is_err());
    }

    #[test]
    fn contrast_z_examples() {
        let z = contrast_z(994.0, 960.0).unwrap();
        assert!((z - 29.235294117647058).abs() < 1e-12);
        assert!((contrast_z(34720.0, 34480.0).unwrap() - 144.66666666666666).abs() < 1e-9);
        assert_eq!(contrast_z(10.0, 0.0).unwrap(), 1.0);
        assert!(contrast_z(5.0, 5.0).is_err());
        assert!(contrast_z(5.0, -1.0).is_err());
    }
}
