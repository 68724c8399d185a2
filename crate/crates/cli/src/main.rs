//! `hbt`: two-detector counting statistics from the command line.

mod output;

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use hbt_core::anticorrelation::{
    read_records, reproduce_table, table1, ReproductionParams, GATE_RATIO, OMEGA_RATIO,
};
use hbt_core::elementary::{sequence_k, sequence_moments, sequence_r};
use hbt_core::mc::{
    analytic_values, reference_grid, simulate_series, verify, EstimateReport, SimulationConfig, Verdict,
    DEFAULT_Z_MAX,
};
use hbt_core::modes::{coincidence_curve, gaussian_mode_count, linspace, lorentzian_mode_count, ModeProfile};
use hbt_core::sources::poisson_pmf;
use hbt_core::statistics::{series_moments, Statistics};
use hbt_core::{Error, SourceKind, SourceLaw, TernaryLaw};

use output::{Format, Table};

#[derive(Parser, Debug)]
#[command(name = "hbt", version, about = "Two-detector counting statistics for bosons and fermions")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Decimal digits of floating-point values (1-15).
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u8).range(1..=15))]
    precision: u8,
    /// Seed of the Monte Carlo streams.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Moments of a fixed-length sequence of ternary acts.
    Moments {
        #[command(flatten)]
        law: LawArgs,
        /// Number of acts in the sequence.
        #[arg(long, default_value_t = 1)]
        n: u64,
    },
    /// Occupancy law of a source: pmf table, pgf sweep or summary.
    Source {
        #[command(flatten)]
        source: SourceArgs,
        /// Evaluate the pgf on a sweep `start:end:steps` instead of the pmf.
        #[arg(long, value_parser = parse_sweep, conflicts_with = "summary")]
        pgf: Option<Sweep>,
        /// Print a one-row summary of the moments.
        #[arg(long)]
        summary: bool,
        /// Last occupancy of the pmf table (default: until the mass is exhausted).
        #[arg(long)]
        max_n: Option<u64>,
    },
    /// Coincidence ratio K, Fano factor and correlation of a source.
    K {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        law: LawArgs,
    },
    /// K along a sweep of detector overlaps for a thermal source.
    Curve {
        /// boson or fermion.
        #[arg(long, default_value = "boson")]
        statistics: String,
        #[command(flatten)]
        polarization: PolarizationFlags,
        /// gaussian or lorentzian.
        #[arg(long, default_value = "lorentzian")]
        profile: String,
        /// Overlap sweep `start:end:steps`.
        #[arg(long, value_parser = parse_sweep, default_value = "0:10:101")]
        sweep: Sweep,
    },
    /// Gaussian and Lorentzian mode counts along a sweep.
    Modes {
        #[arg(long, value_parser = parse_sweep, default_value = "0:10:101")]
        sweep: Sweep,
    },
    /// Reanalysis of the Aspect-Grangier anticorrelation data.
    AspectGrangier {
        /// CSV with columns row,Nw,N1_per_s,T_s,n_2r,n_2t,measured_coincidences
        /// (default: the embedded data set).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Overlap f entering alpha_QM.
        #[arg(long)]
        f_override: Option<f64>,
        /// Overlap f~ entering the mode count.
        #[arg(long)]
        f_tilde: Option<f64>,
        /// Gate over lifetime w/tau_s; recomputes both overlaps.
        #[arg(long)]
        gate_ratio: Option<f64>,
        /// Solid-angle ratio; recomputes both overlaps.
        #[arg(long)]
        omega_ratio: Option<f64>,
        /// Lowest pump (Nw)_0 for the empirical mode count.
        #[arg(long)]
        reference_pump: Option<f64>,
    },
    /// Monte Carlo estimates of K, R, F and the mean counts.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Add analytic values and z-scores.
        #[arg(long)]
        analytic: bool,
    },
    /// Simulate and compare with the analytic values; exit 1 on any failure.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Threshold in standard errors.
        #[arg(long, default_value_t = DEFAULT_Z_MAX)]
        z_max: f64,
        /// Run the twelve-point reference grid instead of a single source.
        #[arg(long)]
        grid: bool,
    },
}

#[derive(Args, Debug)]
struct LawArgs {
    /// Probability that an act fires detector A.
    #[arg(long)]
    p: Option<f64>,
    /// Probability that an act fires detector B.
    #[arg(long)]
    q: Option<f64>,
    /// Probability that an act fires neither (default 1 - p - q).
    #[arg(long)]
    r: Option<f64>,
}

const DEFAULT_LAW: (f64, f64, f64) = (0.2, 0.2, 0.6);

impl LawArgs {
    fn resolve(&self) -> Result<TernaryLaw, Error> {
        match (self.p, self.q, self.r) {
            (None, None, None) => TernaryLaw::new(DEFAULT_LAW.0, DEFAULT_LAW.1, DEFAULT_LAW.2),
            (Some(p), Some(q), Some(r)) => TernaryLaw::new(p, q, r),
            (Some(p), Some(q), None) => TernaryLaw::from_pq(p, q),
            _ => Err(Error::InvalidArguments("give --p and --q (and optionally --r)".into())),
        }
    }
}

#[derive(Args, Debug)]
#[group(multiple = false)]
struct PolarizationFlags {
    /// Single polarization (default).
    #[arg(long)]
    polarized: bool,
    /// Two equally populated polarizations.
    #[arg(long)]
    unpolarized: bool,
}

#[derive(Args, Debug)]
struct SourceArgs {
    /// coherent, thermal-boson, thermal-fermion, or an explicit kind such as
    /// boson-partial.
    #[arg(long)]
    kind: Option<String>,
    /// Number of modes M.
    #[arg(long, default_value_t = 1)]
    modes: u64,
    /// Mean occupation per mode (default 0.5 unless --mean is given).
    #[arg(long, conflicts_with = "mean")]
    nbar: Option<f64>,
    /// Mean number of quanta per gate.
    #[arg(long)]
    mean: Option<f64>,
    #[command(flatten)]
    polarization_flags: PolarizationFlags,
    /// Degree of polarization P for partially polarized sources.
    #[arg(long)]
    polarization: Option<f64>,
}

const DEFAULT_NBAR: f64 = 0.5;

impl SourceArgs {
    fn resolve(&self) -> Result<SourceLaw, Error> {
        let flags = &self.polarization_flags;
        let name = self.kind.as_deref().ok_or_else(|| Error::InvalidArguments("--kind is required".into()))?;
        let kind = if let Ok(kind) = SourceKind::from_str(name) {
            if flags.polarized || flags.unpolarized {
                return Err(Error::InvalidArguments(format!(
                    "--polarized/--unpolarized only apply to thermal kinds, not '{kind}'"
                )));
            }
            kind
        } else if name == "thermal-boson" || name == "thermal-fermion" {
            let fermion = Statistics::from_str(name)? == Statistics::Fermion;
            match (self.polarization.is_some(), flags.unpolarized, fermion) {
                (true, true, _) => {
                    return Err(Error::InvalidArguments("--polarization conflicts with --unpolarized".into()))
                }
                (true, _, false) => SourceKind::BosonPartial,
                (true, _, true) => SourceKind::FermionPartial,
                (false, true, false) => SourceKind::BosonUnpolarized,
                (false, true, true) => SourceKind::FermionUnpolarized,
                (false, false, false) => SourceKind::BosonPolarized,
                (false, false, true) => SourceKind::FermionPolarized,
            }
        } else {
            return Err(Error::InvalidArguments(format!("unknown source kind '{name}'")));
        };
        if kind.is_partial() && self.polarization.is_none() {
            return Err(Error::InvalidArguments(format!("{kind} needs --polarization")));
        }
        if self.modes == 0 {
            return Err(Error::InvalidArguments("number of modes must be a positive integer".into()));
        }
        let nbar = match (self.nbar, self.mean) {
            (Some(n), _) => n,
            (None, Some(mean)) => mean / self.modes as f64,
            (None, None) => DEFAULT_NBAR,
        };
        SourceLaw::new(kind, self.modes, nbar, self.polarization.unwrap_or(0.0))
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    law: LawArgs,
    /// Number of simulated gates.
    #[arg(long, default_value_t = 1_000_000)]
    gates: u64,
    /// Gates per random-stream block (default: gates / 100).
    #[arg(long)]
    block_size: Option<u64>,
}

impl RunArgs {
    fn config(&self, law: TernaryLaw, source: SourceLaw, seed: u64) -> SimulationConfig {
        let mut cfg = SimulationConfig::new(law, source, self.gates, seed);
        if let Some(b) = self.block_size {
            cfg.block_size = b;
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Sweep {
    start: f64,
    end: f64,
    steps: usize,
}

impl Sweep {
    fn points(&self) -> Vec<f64> {
        linspace(self.start, self.end, self.steps)
    }
}

fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(format!("expected start:end:steps, got '{s}'"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number '{t}': {e}"));
    let (start, end) = (num(a)?, num(b)?);
    let steps = n.trim().parse::<usize>().map_err(|e| format!("bad step count '{n}': {e}"))?;
    if !start.is_finite() || !end.is_finite() || steps == 0 {
        return Err(format!("sweep needs finite bounds and at least one step, got '{s}'"));
    }
    Ok(Sweep { start, end, steps })
}

fn polarized(flags: &PolarizationFlags) -> bool {
    !flags.unpolarized
}

fn opt<T>(r: hbt_core::Result<T>) -> Option<T> {
    r.ok()
}

fn cmd_moments(law: &LawArgs, n: u64) -> Result<Table, Error> {
    let law = law.resolve()?;
    let m = sequence_moments(&law, n);
    let mut t = Table::new(&[
        "n", "p", "q", "r", "mean_xi", "mean_eta", "var_xi", "var_eta", "cross", "K_n", "R",
    ]);
    t.push(vec![
        n.into(),
        law.p().into(),
        law.q().into(),
        law.r().into(),
        m.mean_xi.into(),
        m.mean_eta.into(),
        m.var_xi.into(),
        m.var_eta.into(),
        m.cross.into(),
        opt(sequence_k(n)).into(),
        opt(sequence_r(&law)).into(),
    ]);
    Ok(t)
}

fn cmd_source(args: &SourceArgs, pgf: Option<Sweep>, summary: bool, max_n: Option<u64>) -> Result<Table, Error> {
    let src = args.resolve()?;
    if let Some(sweep) = pgf {
        let mut t = Table::new(&["z", "pgf"]);
        for z in sweep.points() {
            t.push(vec![z.into(), src.pgf(z)?.into()]);
        }
        return Ok(t);
    }
    let fm = src.factorial_moments();
    if summary {
        let mut t = Table::new(&[
            "kind", "modes", "nbar", "polarization", "mean", "variance", "fano", "mandel_q", "K", "tv_poisson",
        ]);
        t.push(vec![
            src.kind().as_str().into(),
            src.modes().into(),
            src.nbar().into(),
            src.polarization().into(),
            fm.mean.into(),
            fm.variance.into(),
            fm.fano.into(),
            fm.mandel_q.into(),
            (fm.factorial2 / (fm.mean * fm.mean)).into(),
            hbt_core::sources::poisson_tv_distance(&src).into(),
        ]);
        return Ok(t);
    }
    let table = match max_n {
        Some(m) => (0..=m).map(|n| src.pmf(n)).collect(),
        None => src.pmf_table(),
    };
    let mut t = Table::new(&["n", "pmf", "cdf", "poisson_pmf"]);
    let mut cdf = 0.0;
    for (n, w) in table.into_iter().enumerate() {
        cdf += w;
        t.push(vec![(n as u64).into(), w.into(), cdf.min(1.0).into(), poisson_pmf(fm.mean, n as u64).into()]);
    }
    Ok(t)
}

fn cmd_k(args: &SourceArgs, law: &LawArgs) -> Result<Table, Error> {
    let src = args.resolve()?;
    let law = law.resolve()?;
    let m = series_moments(&law, &src)?;
    let mut t = Table::new(&[
        "kind", "modes", "nbar", "polarization", "mean", "fano", "K", "R", "R_pearson", "p", "q", "r",
    ]);
    t.push(vec![
        src.kind().as_str().into(),
        src.modes().into(),
        src.nbar().into(),
        src.polarization().into(),
        src.mean().into(),
        m.fano.into(),
        m.k_ratio.into(),
        m.r_coeff.into(),
        m.r_exact.into(),
        law.p().into(),
        law.q().into(),
        law.r().into(),
    ]);
    Ok(t)
}

fn cmd_curve(statistics: &str, flags: &PolarizationFlags, profile: &str, sweep: Sweep) -> Result<Table, Error> {
    let stats = Statistics::from_str(statistics)?;
    let profile = ModeProfile::from_str(profile)?;
    let points = coincidence_curve(stats, polarized(flags), profile, &sweep.points())?;
    let mut t = Table::new(&["x", "M", "M_step", "K"]);
    for p in points {
        t.push(vec![p.x.into(), p.modes.into(), p.modes_step().into(), p.k.into()]);
    }
    Ok(t)
}

fn cmd_modes(sweep: Sweep) -> Result<Table, Error> {
    let mut t = Table::new(&["x", "M_gaussian", "M_lorentzian"]);
    for x in sweep.points() {
        t.push(vec![x.into(), gaussian_mode_count(x)?.into(), lorentzian_mode_count(x)?.into()]);
    }
    Ok(t)
}

fn cmd_aspect_grangier(
    data: Option<&PathBuf>,
    f_override: Option<f64>,
    f_tilde: Option<f64>,
    gate_ratio: Option<f64>,
    omega_ratio: Option<f64>,
    reference_pump: Option<f64>,
) -> Result<Table, Error> {
    let records = match data {
        Some(path) => {
            let file = File::open(path).map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
            read_records(file)?
        }
        None => table1(),
    };
    let mut params = if gate_ratio.is_some() || omega_ratio.is_some() {
        ReproductionParams::from_geometry(gate_ratio.unwrap_or(GATE_RATIO), omega_ratio.unwrap_or(OMEGA_RATIO))?
    } else {
        ReproductionParams::default()
    };
    if let Some(f) = f_tilde {
        params.f_tilde = f;
    }
    if let Some(f) = f_override {
        params.f_alpha = f;
    }
    if let Some(p) = reference_pump {
        params.reference_pump = p;
    }
    Ok(Table::from_records(&reproduce_table(&records, &params)?))
}

fn cmd_simulate(run: &RunArgs, analytic: bool, seed: u64) -> Result<Table, Error> {
    let src = run.source.resolve()?;
    let law = run.law.resolve()?;
    let report = simulate_series(&run.config(law, src, seed))?;
    let mut cols = vec!["statistic", "estimate", "se", "gates", "blocks", "seed"];
    let reference = if analytic {
        cols.extend(["analytic", "z"]);
        Some(analytic_values(&law, &src)?)
    } else {
        None
    };
    let mut t = Table::new(&cols);
    for (stat, est) in &report.estimates {
        let mut row = vec![
            stat.as_str().into(),
            est.value.into(),
            est.se.into(),
            report.gates.into(),
            report.blocks.into(),
            report.seed.into(),
        ];
        if let Some(a) = &reference {
            let v = a[stat];
            row.extend([v.into(), hbt_core::mc::z_score(est.value, est.se, v).into()]);
        }
        t.push(row);
    }
    Ok(t)
}

fn verdict_rows(t: &mut Table, label: &str, report: &EstimateReport, verdicts: &[Verdict]) {
    for v in verdicts {
        t.push(vec![
            label.into(),
            v.statistic.as_str().into(),
            v.estimate.into(),
            v.se.into(),
            v.analytic.into(),
            v.z.into(),
            v.pass.into(),
            report.gates.into(),
            report.seed.into(),
        ]);
    }
}

fn cmd_verify(run: &RunArgs, z_max: f64, grid: bool, seed: u64) -> Result<(Table, bool), Error> {
    let mut t = Table::new(&["source", "statistic", "estimate", "se", "analytic", "z", "pass", "gates", "seed"]);
    let points: Vec<(String, TernaryLaw, SourceLaw)> = if grid {
        reference_grid()
            .into_iter()
            .map(|g| (format!("{} (p={}, q={})", g.label, g.law.p(), g.law.q()), g.law, g.source))
            .collect()
    } else {
        let src = run.source.resolve()?;
        vec![(src.kind().as_str().to_string(), run.law.resolve()?, src)]
    };
    let mut all_pass = true;
    for (i, (label, law, src)) in points.iter().enumerate() {
        let report = simulate_series(&run.config(*law, *src, seed.wrapping_add(i as u64)))?;
        let verdicts = verify(&report, &analytic_values(law, src)?, z_max)?;
        all_pass &= verdicts.iter().all(|v| v.pass);
        verdict_rows(&mut t, label, &report, &verdicts);
    }
    Ok((t, all_pass))
}

/// Runs the command and returns the rendered output plus whether every
/// check passed.
fn run(cli: &Cli) -> Result<(Table, bool), Error> {
    let table = match &cli.command {
        Command::Moments { law, n } => cmd_moments(law, *n)?,
        Command::Source { source, pgf, summary, max_n } => cmd_source(source, *pgf, *summary, *max_n)?,
        Command::K { source, law } => cmd_k(source, law)?,
        Command::Curve { statistics, polarization, profile, sweep } => {
            cmd_curve(statistics, polarization, profile, *sweep)?
        }
        Command::Modes { sweep } => cmd_modes(*sweep)?,
        Command::AspectGrangier { data, f_override, f_tilde, gate_ratio, omega_ratio, reference_pump } => {
            cmd_aspect_grangier(data.as_ref(), *f_override, *f_tilde, *gate_ratio, *omega_ratio, *reference_pump)?
        }
        Command::Simulate { run, analytic } => cmd_simulate(run, *analytic, cli.seed)?,
        Command::Verify { run, z_max, grid } => return cmd_verify(run, *z_max, *grid, cli.seed),
    };
    Ok((table, true))
}

fn emit(cli: &Cli, text: &str) -> std::io::Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((table, pass)) => {
            let text = table.render(cli.format, cli.precision as usize);
            if let Err(e) = emit(&cli, &text) {
                eprintln!("error: cannot write output: {e}");
                return ExitCode::from(1);
            }
            if pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("verification failed: at least one statistic exceeds the z threshold");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}
