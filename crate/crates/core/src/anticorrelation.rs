//! Single-photon anticorrelation behind a beam splitter, triggered by the
//! first photon of an atomic two-photon cascade (Aspect–Grangier data).
//!
//! Two predictions for the normalized coincidence rate are compared: the
//! quantum-optical `α_QM = (2f·Nw + (Nw)²)/(f + Nw)²` and the mode-count form
//! `K = 1 - 1/M_L(x)` with `x = 4·Nw·f̃`, where `M_L` is the Lorentzian mode
//! function and `f̃` the probability that the heralded photon is emitted
//! inside the gate (times a solid-angle ratio).

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::modes::lorentzian_mode_count;

/// Gate duration over intermediate-level lifetime, `w/τ_s = 9 ns / 4.7 ns`.
pub const GATE_RATIO: f64 = 9.0 / 4.7;
/// Solid-angle ratio `Ω₂/Ω₁`.
pub const OMEGA_RATIO: f64 = 1.06;
/// Overlap factor `f̃` as quoted for the experiment (two digits). The
/// unrounded value from [`GATE_RATIO`] and [`OMEGA_RATIO`] is 0.9038.
pub const QUOTED_OVERLAP: f64 = 0.9;
/// Lowest pump value of the experiment, `(Nw)₀`.
pub const REFERENCE_PUMP: f64 = 0.06;
/// Intermediate-level lifetime of the calcium cascade, seconds.
pub const LIFETIME_S: f64 = 4.7e-9;

/// Relative rate gap below which the cascade rates count as equal.
const DEGENERATE_RATES: f64 = 1e-12;

const TABLE1_CSV: &str = include_str!("../data/aspect_grangier_table1.csv");

/// Three-level radiative cascade pumped at a constant rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CascadeModel {
    /// Cascade excitations per second, `N`.
    pub pump_rate: f64,
    /// Gate duration `w`, seconds.
    pub gate: f64,
    /// Intermediate-level lifetime `τ_s`, seconds.
    pub lifetime: f64,
    pub omega_ratio: f64,
    /// Decay rate of the upper level, 1/s.
    pub gamma1: f64,
}

impl CascadeModel {
    pub fn new(pump_rate: f64, gate: f64, lifetime: f64, omega_ratio: f64, gamma1: f64) -> Result<Self> {
        for (name, v) in [
            ("pump rate", pump_rate),
            ("gate", gate),
            ("lifetime", lifetime),
            ("solid-angle ratio", omega_ratio),
            ("upper-level decay rate", gamma1),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if gamma1 >= 1.0 / lifetime {
            return Err(invalid("the intermediate level must decay faster than the upper level"));
        }
        Ok(Self { pump_rate, gate, lifetime, omega_ratio, gamma1 })
    }

    pub fn gamma2(&self) -> f64 {
        1.0 / self.lifetime
    }

    /// Mean number of cascades per gate, `N·w`.
    pub fn pump(&self) -> f64 {
        self.pump_rate * self.gate
    }

    pub fn gate_overlap(&self) -> Result<f64> {
        gate_overlap(self.gate, self.lifetime, self.omega_ratio)
    }

    pub fn population(&self, t: f64) -> Result<f64> {
        cascade_population(t, self.gamma1, self.gamma2())
    }
}

/// Intermediate-level population `P₂(t) = γ₁/(γ₂-γ₁)(e^{-γ₁t} - e^{-γ₂t})`.
///
/// Equal rates return [`Error::DegenerateRates`] carrying the limiting
/// value `γ t e^{-γ t}`.
pub fn cascade_population(t: f64, gamma1: f64, gamma2: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(invalid(format!("time must be >= 0, got {t}")));
    }
    if !(gamma1 > 0.0 && gamma2 > 0.0) {
        return Err(invalid(format!("decay rates must be > 0 (got {gamma1}, {gamma2})")));
    }
    if ((gamma1 - gamma2) / gamma2).abs() < DEGENERATE_RATES {
        return Err(Error::DegenerateRates { limit: gamma1 * t * (-gamma1 * t).exp() });
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    // e^{-γ₁t} - e^{-γ₂t} = e^{-γ₁t}(1 - e^{-(γ₂-γ₁)t})
    let gap = gamma2 - gamma1;
    Ok(gamma1 / gap * (-gamma1 * t).exp() * -(-gap * t).exp_m1())
}

/// `f̃(w) = (Ω₂/Ω₁)(1 - e^{-w/τ_s})`.
pub fn gate_overlap(gate: f64, lifetime: f64, omega_ratio: f64) -> Result<f64> {
    if !(gate >= 0.0) || !(lifetime > 0.0) || !(omega_ratio > 0.0) {
        return Err(invalid(format!(
            "gate, lifetime and solid-angle ratio must be positive (got {gate}, {lifetime}, {omega_ratio})"
        )));
    }
    Ok(omega_ratio * -(-gate / lifetime).exp_m1())
}

fn check_pump(nw: f64, f: f64) -> Result<()> {
    if !(nw >= 0.0 && nw.is_finite()) {
        return Err(invalid(format!("pump Nw must be >= 0, got {nw}")));
    }
    if !(f > 0.0 && f.is_finite()) {
        return Err(invalid(format!("overlap f must be > 0, got {f}")));
    }
    Ok(())
}

/// `α_QM = (2f·Nw + (Nw)²)/(f + Nw)²`, always below 1.
pub fn alpha_qm(nw: f64, f: f64) -> Result<f64> {
    check_pump(nw, f)?;
    Ok((2.0 * f * nw + nw * nw) / ((f + nw) * (f + nw)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeForm {
    pub alpha: f64,
    /// `M̄ = (f + Nw)²/f²`.
    pub m_bar: f64,
}

/// `α_QM` rewritten as `1 - 1/M̄`.
pub fn alpha_mode_form(nw: f64, f: f64) -> Result<ModeForm> {
    check_pump(nw, f)?;
    let ratio = (f + nw) / f;
    let m_bar = ratio * ratio;
    Ok(ModeForm { alpha: 1.0 - 1.0 / m_bar, m_bar })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeCountK {
    pub k: f64,
    pub modes: f64,
    /// Dimensionless overlap `x = 4·Nw·f̃`.
    pub overlap: f64,
}

/// Mode-count prediction `K = 1 - 1/M_L(4·Nw·f̃)`.
pub fn k_anticorrelation(nw: f64, f_tilde: f64) -> Result<ModeCountK> {
    check_pump(nw, f_tilde)?;
    let overlap = 4.0 * nw * f_tilde;
    let modes = lorentzian_mode_count(overlap)?;
    Ok(ModeCountK { k: 1.0 - 1.0 / modes, modes, overlap })
}

/// One acquisition run: trigger rate, duration and singles counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub row: u32,
    #[serde(rename = "Nw")]
    pub pump: f64,
    /// Trigger rate `N₁`, counts per second.
    #[serde(rename = "N1_per_s")]
    pub trigger_rate: f64,
    /// Acquisition time `T`, seconds.
    #[serde(rename = "T_s")]
    pub duration: f64,
    #[serde(rename = "n_2r")]
    pub singles_r: u64,
    #[serde(rename = "n_2t")]
    pub singles_t: u64,
    #[serde(rename = "measured_coincidences")]
    pub measured: u64,
}

impl GateRecord {
    /// Number of gates `n_g = N₁·T`.
    pub fn gates(&self) -> f64 {
        self.trigger_rate * self.duration
    }

    pub fn validate(&self) -> Result<()> {
        let ng = self.gates();
        if !(ng >= 0.0) || ng.fract() != 0.0 {
            return Err(Error::Dataset(format!(
                "row {}: N1·T = {ng} is not a whole number of gates",
                self.row
            )));
        }
        if self.singles_r as f64 > ng || self.singles_t as f64 > ng {
            return Err(Error::Dataset(format!("row {}: singles exceed the number of gates", self.row)));
        }
        if !(self.pump >= 0.0) {
            return Err(Error::Dataset(format!("row {}: negative pump", self.row)));
        }
        Ok(())
    }
}

/// Parses and validates gate records from CSV.
pub fn read_records<R: Read>(reader: R) -> Result<Vec<GateRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.deserialize::<GateRecord>() {
        let rec = rec.map_err(|e| Error::Dataset(e.to_string()))?;
        rec.validate()?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::Dataset("no records".into()));
    }
    Ok(out)
}

/// The seven acquisition runs shipped with the crate.
pub fn table1() -> Vec<GateRecord> {
    read_records(TABLE1_CSV.as_bytes()).expect("embedded dataset is valid")
}

pub fn table1_csv() -> &'static str {
    TABLE1_CSV
}

/// Accidental coincidences of a Poissonian background, `n_2r·n_2t/n_g`.
pub fn accidental_coincidences(rec: &GateRecord) -> Result<f64> {
    let ng = rec.gates();
    if ng == 0.0 {
        return Err(Error::DivisionByZero(format!("row {} has no gates", rec.row)));
    }
    Ok(rec.singles_r as f64 * rec.singles_t as f64 / ng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictionModel {
    AlphaQm,
    KMode,
}

/// Accidentals scaled by `α_QM` or `K`, rounded half away from zero. `f`
/// is the overlap used by the chosen model.
pub fn predicted_coincidences(rec: &GateRecord, model: PredictionModel, f: f64) -> Result<u64> {
    let acc = accidental_coincidences(rec)?;
    let factor = match model {
        PredictionModel::AlphaQm => alpha_qm(rec.pump, f)?,
        PredictionModel::KMode => k_anticorrelation(rec.pump, f)?.k,
    };
    Ok((acc * factor).round() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalObservables {
    pub t_obs: f64,
    pub r_obs: f64,
    /// `T_obs·R_obs·(Nw)/(Nw)₀`.
    pub m_bar_emp: f64,
}

/// Effective splitting ratios from the singles and the empirical mode count.
pub fn empirical_observables(rec: &GateRecord, reference_pump: f64) -> Result<EmpiricalObservables> {
    let total = rec.singles_t + rec.singles_r;
    if total == 0 {
        return Err(Error::DivisionByZero(format!("row {} has no singles", rec.row)));
    }
    if !(reference_pump > 0.0) {
        return Err(invalid(format!("reference pump must be > 0, got {reference_pump}")));
    }
    let t_obs = rec.singles_t as f64 / total as f64;
    let r_obs = rec.singles_r as f64 / total as f64;
    Ok(EmpiricalObservables { t_obs, r_obs, m_bar_emp: t_obs * r_obs * rec.pump / reference_pump })
}

/// Inputs of the table reproduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReproductionParams {
    /// `f̃` entering the mode-count overlap.
    pub f_tilde: f64,
    /// `f` entering `α_QM`.
    pub f_alpha: f64,
    pub reference_pump: f64,
}

impl Default for ReproductionParams {
    fn default() -> Self {
        Self { f_tilde: QUOTED_OVERLAP, f_alpha: QUOTED_OVERLAP, reference_pump: REFERENCE_PUMP }
    }
}

impl ReproductionParams {
    /// Both overlaps from the gate ratio `w/τ_s` and `Ω₂/Ω₁`.
    pub fn from_geometry(gate_ratio: f64, omega_ratio: f64) -> Result<Self> {
        let f = gate_overlap(gate_ratio, 1.0, omega_ratio)?;
        Ok(Self { f_tilde: f, f_alpha: f, reference_pump: REFERENCE_PUMP })
    }
}

/// One row of the reproduced comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub row: u32,
    #[serde(rename = "Nw")]
    pub pump: f64,
    pub n_g: f64,
    pub n_2r: u64,
    pub n_2t: u64,
    /// Unrounded accidental coincidences.
    pub accidental: f64,
    pub expected: u64,
    pub measured: u64,
    pub alpha_qm: f64,
    pub k: f64,
    pub calculated_alpha: u64,
    pub calculated_k: u64,
    /// `100(α_QM - K)/(α_QM + K)`.
    pub rel_diff_pct: f64,
    /// `M_L(4·Nw·f̃)`.
    pub modes: f64,
    pub m_bar: f64,
    pub t_obs: f64,
    pub r_obs: f64,
    pub m_bar_emp: f64,
    /// Measured coincidences exceed the accidental background, i.e. the row
    /// shows bunching rather than anticorrelation.
    pub bunching: bool,
}

pub fn reproduce_table(records: &[GateRecord], params: &ReproductionParams) -> Result<Vec<ReportRow>> {
    records
        .iter()
        .map(|rec| {
            let accidental = accidental_coincidences(rec)?;
            let alpha = alpha_qm(rec.pump, params.f_alpha)?;
            let mode = k_anticorrelation(rec.pump, params.f_tilde)?;
            let form = alpha_mode_form(rec.pump, params.f_alpha)?;
            let emp = empirical_observables(rec, params.reference_pump)?;
            let sum = alpha + mode.k;
            Ok(ReportRow {
                row: rec.row,
                pump: rec.pump,
                n_g: rec.gates(),
                n_2r: rec.singles_r,
                n_2t: rec.singles_t,
                accidental,
                expected: accidental.round() as u64,
                measured: rec.measured,
                alpha_qm: alpha,
                k: mode.k,
                calculated_alpha: (accidental * alpha).round() as u64,
                calculated_k: (accidental * mode.k).round() as u64,
                rel_diff_pct: if sum > 0.0 { 100.0 * (alpha - mode.k) / sum } else { 0.0 },
                modes: mode.modes,
                m_bar: form.m_bar,
                t_obs: emp.t_obs,
                r_obs: emp.r_obs,
                m_bar_emp: emp.m_bar_emp,
                bunching: rec.measured as f64 > accidental,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const PUMPS: [f64; 7] = [0.06, 0.12, 0.18, 0.3, 0.54, 0.75, 1.0];
    const ALPHA_PUBLISHED: [f64; 7] = [0.1211, 0.2215, 0.3056, 0.4375, 0.6094, 0.7025, 0.7756];
    const K_PUBLISHED: [f64; 7] = [0.1297, 0.2352, 0.3217, 0.4533, 0.6152, 0.6979, 0.7608];

    #[test]
    fn population_examples() {
        assert_eq!(cascade_population(0.0, 0.1, 1.0).unwrap(), 0.0);
        assert_eq!(cascade_population(f64::INFINITY, 0.1, 1.0).unwrap(), 0.0);
        assert!(cascade_population(1e4, 0.1, 1.0).unwrap() < 1e-40);
        // Small-time behaviour: P₂ ≈ γ₁t(1 - (γ₁+γ₂)t/2).
        let (g1, g2) = (0.1, 1.0);
        let t = 0.02;
        assert!((cascade_population(t, g1, g2).unwrap() / (g1 * t) - 1.0).abs() < 0.02);
        let t = 0.05;
        let dev = 1.0 - cascade_population(t, g1, g2).unwrap() / (g1 * t);
        assert!((dev - (g1 + g2) * t / 2.0).abs() < 1e-3, "{dev}");
    }

    #[test]
    fn population_is_a_probability() {
        for t in [0.01, 0.5, 1.0, 2.3, 10.0] {
            let p = cascade_population(t, 0.3, 1.0).unwrap();
            assert!((0.0..1.0).contains(&p));
        }
        // Fast upper level: peaks close to 1.
        assert!(cascade_population(0.5, 50.0, 1.0).unwrap() > 0.5);
    }

    #[test]
    fn degenerate_rates_report_limit() {
        match cascade_population(2.0, 0.5, 0.5) {
            Err(Error::DegenerateRates { limit }) => {
                assert!((limit - 1.0 * (-1f64).exp()).abs() < 1e-15)
            }
            other => panic!("{other:?}"),
        }
        // Continuous approach to the limit.
        let near = cascade_population(2.0, 0.5, 0.5 * (1.0 + 1e-7)).unwrap();
        assert!((near - (-1f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn overlap_examples() {
        let f = gate_overlap(9.0 / 4.7, 1.0, 1.06).unwrap();
        assert!((f - 0.9).abs() < 0.005);
        assert!((gate_overlap(1e3, 1.0, 1.06).unwrap() - 1.06).abs() < 1e-15);
        assert_eq!(gate_overlap(0.0, 1.0, 1.06).unwrap(), 0.0);
        let m = CascadeModel::new(1e7, 9e-9, LIFETIME_S, OMEGA_RATIO, 2e7).unwrap();
        assert!((m.gate_overlap().unwrap() - f).abs() < 1e-12);
        assert!((m.pump() - 0.09).abs() < 1e-12);
        assert!(CascadeModel::new(1e7, 9e-9, LIFETIME_S, OMEGA_RATIO, 1e9).is_err());
    }

    #[test]
    fn alpha_published_values() {
        assert_eq!(alpha_qm(0.0, 0.7).unwrap(), 0.0);
        for (nw, want) in PUMPS.iter().zip(ALPHA_PUBLISHED) {
            let a = alpha_qm(*nw, QUOTED_OVERLAP).unwrap();
            assert!((a - want).abs() <= 5e-5, "Nw={nw}: {a} vs {want}");
        }
    }

    #[test]
    fn mode_form_identity() {
        let form = alpha_mode_form(0.0, 0.9).unwrap();
        assert_eq!((form.m_bar, form.alpha), (1.0, 0.0));
        let form = alpha_mode_form(1.0, 0.9).unwrap();
        assert!((form.m_bar - (1.9f64 / 0.9).powi(2)).abs() < 1e-14);
        assert!((form.m_bar - 4.4568).abs() < 5e-5);
        for i in 0..40 {
            for j in 1..=25 {
                let nw = i as f64 * 0.05;
                let f = j as f64 * 0.08;
                let d = (alpha_mode_form(nw, f).unwrap().alpha - alpha_qm(nw, f).unwrap()).abs();
                assert!(d < 1e-12);
            }
        }
    }

    #[test]
    fn k_published_values() {
        assert_eq!(k_anticorrelation(0.0, 0.9).unwrap().k, 0.0);
        for (nw, want) in PUMPS.iter().zip(K_PUBLISHED) {
            let k = k_anticorrelation(*nw, QUOTED_OVERLAP).unwrap();
            assert!((k.k - want).abs() <= 5e-4, "Nw={nw}: {} vs {want}", k.k);
            assert!((k.overlap - 3.6 * nw).abs() < 1e-14);
        }
    }

    #[test]
    fn relative_differences() {
        let d: Vec<f64> = PUMPS
            .iter()
            .map(|&nw| {
                let a = alpha_qm(nw, QUOTED_OVERLAP).unwrap();
                let k = k_anticorrelation(nw, QUOTED_OVERLAP).unwrap().k;
                100.0 * (a - k) / (a + k)
            })
            .collect();
        assert!(d.iter().all(|v| (-3.5..=1.0).contains(v)), "{d:?}");
        assert!(d.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn monotone_in_pump() {
        let mut prev = (-1.0, -1.0);
        for i in 0..=1600 {
            let nw = i as f64 * 1e-3;
            let a = alpha_qm(nw, QUOTED_OVERLAP).unwrap();
            let k = k_anticorrelation(nw, QUOTED_OVERLAP).unwrap().k;
            assert!(a > prev.0 && k > prev.1 && a < 1.0);
            prev = (a, k);
        }
    }

    #[test]
    fn embedded_dataset() {
        let recs = table1();
        assert_eq!(recs.len(), 7);
        let gates = [5664, 152564, 179080, 391680, 481800, 422520, 241560];
        for (r, g) in recs.iter().zip(gates) {
            assert_eq!(r.gates(), g as f64 * 1e3);
        }
        assert_eq!(recs.iter().map(|r| r.pump).collect::<Vec<_>>(), PUMPS);
    }

    #[test]
    fn bad_records_are_rejected() {
        let csv = "row,Nw,N1_per_s,T_s,n_2r,n_2t,measured_coincidences\n1,0.1,10.5,3,2,2,0\n";
        assert!(matches!(read_records(csv.as_bytes()), Err(Error::Dataset(_))));
        let csv = "row,Nw,N1_per_s,T_s,n_2r,n_2t,measured_coincidences\n1,0.1,10,3,40,2,0\n";
        assert!(read_records(csv.as_bytes()).is_err());
        assert!(read_records("row,Nw\n".as_bytes()).is_err());
    }

    #[test]
    fn accidental_examples() {
        let recs = table1();
        assert!((accidental_coincidences(&recs[1]).unwrap() - 49.16).abs() < 5e-3);
        assert!((accidental_coincidences(&recs[0]).unwrap() - 2.01).abs() < 5e-3);
        let empty = GateRecord { singles_r: 0, ..recs[2] };
        assert_eq!(accidental_coincidences(&empty).unwrap(), 0.0);
        let none = GateRecord { duration: 0.0, ..recs[2] };
        assert!(matches!(accidental_coincidences(&none), Err(Error::DivisionByZero(_))));
    }

    #[test]
    fn prediction_examples() {
        let recs = table1();
        assert_eq!(predicted_coincidences(&recs[3], PredictionModel::KMode, 0.9).unwrap(), 91);
        assert_eq!(predicted_coincidences(&recs[1], PredictionModel::AlphaQm, 0.9).unwrap(), 11);
        assert_eq!(predicted_coincidences(&recs[5], PredictionModel::KMode, 0.9).unwrap(), 343);
    }

    #[test]
    fn empirical_examples() {
        let recs = table1();
        let sym = GateRecord { singles_r: 500, singles_t: 500, ..recs[0] };
        let e = empirical_observables(&sym, REFERENCE_PUMP).unwrap();
        assert_eq!((e.t_obs, e.r_obs), (0.5, 0.5));
        for r in &recs {
            let e = empirical_observables(r, REFERENCE_PUMP).unwrap();
            let invariant = e.t_obs * e.r_obs / REFERENCE_PUMP;
            assert!((invariant / 4.0 - 1.0).abs() < 0.15, "row {}: {invariant}", r.row);
        }
        let none = GateRecord { singles_r: 0, singles_t: 0, ..recs[0] };
        assert!(empirical_observables(&none, REFERENCE_PUMP).is_err());
    }

    #[test]
    fn empirical_modes_track_steps() {
        for r in table1().iter().filter(|r| r.pump >= 0.5) {
            let e = empirical_observables(r, REFERENCE_PUMP).unwrap();
            let m = k_anticorrelation(r.pump, QUOTED_OVERLAP).unwrap().modes;
            assert!((e.m_bar_emp - m.floor()).abs() < 0.25, "row {}: {} vs {m}", r.row, e.m_bar_emp);
            assert!((e.m_bar_emp - m).abs() / m < 0.2);
        }
    }

    #[test]
    fn report_flags_bunching_row() {
        let rows = reproduce_table(&table1(), &ReproductionParams::default()).unwrap();
        assert!(rows[0].bunching);
        assert!(rows[1..].iter().all(|r| !r.bunching));
        assert_eq!(rows.iter().map(|r| r.calculated_k).collect::<Vec<_>>()[1..], [12, 21, 91, 280, 343, 280]);
    }
}
