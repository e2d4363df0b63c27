//! Parameter sweeps and log-log regression for the scaling laws: critical
//! exponents, gap/ADR exponents, the Table-style exponent matrix and the
//! QFI scaling classifications.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exactstate::{self, SystemParams};
use crate::liouville;
use crate::metrology;

/// Eta grid of the gap and decay-rate fits (units of kappa).
pub const GAP_ETA_GRID: [f64; 5] = [0.05, 0.02, 0.01, 0.005, 0.002];

/// Eta grid of the omega_2 fit at `g = kappa` (units of kappa).
pub const OMEGA2_ETA_GRID: [f64; 5] = [0.05, 0.02, 0.01, 0.005, 0.002];

/// `delta_g` grid of the omega_1 fit at `eta = 0.002 kappa` (units of kappa).
/// Every point stays at least `10 sqrt(eta kappa)` from the critical
/// fan-out window.
pub const OMEGA1_DELTA_GRID: [f64; 6] = [0.45, 0.6, 0.8, 1.0, 1.35, 1.8];
pub const OMEGA1_ETA: f64 = 0.002;

/// Eta grid of the QFI and exponent-matrix fits (units of kappa). Sits one
/// decade below [`GAP_ETA_GRID`]: the critical-point observables carry
/// `sqrt(eta)` corrections that bias slopes fitted higher up.
pub const QFI_ETA_GRID: [f64; 5] = [0.008, 0.004, 0.002, 0.001, 0.0005];

#[derive(Debug, Error)]
pub enum ScalingError {
    #[error("sweep needs at least one value")]
    EmptyValues,
    #[error("sweep values must be strictly monotone")]
    NotMonotone,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown observable '{0}'")]
    UnknownObservable(String),
    #[error("fit needs at least {need} usable points, got {got}")]
    InsufficientPoints { need: usize, got: usize },
    #[error("fit requires positive data: point {index} has ({x}, {y})")]
    NonpositiveValue { index: usize, x: f64, y: f64 },
    #[error("eta grid must span at least one decade (got {min} .. {max})")]
    InsufficientSpan { min: f64, max: f64 },
    #[error("observable {0} missing from sweep records")]
    MissingObservable(ObservableKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    G,
    Eta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ObservableKind {
    Na,
    EtaNa,
    DnaDg,
    StdNa,
    G2,
    Qfi,
    Snr,
    Rdg,
    Adr,
    RelaxationTime,
}

impl ObservableKind {
    pub const ALL: [ObservableKind; 10] = [
        ObservableKind::Na,
        ObservableKind::EtaNa,
        ObservableKind::DnaDg,
        ObservableKind::StdNa,
        ObservableKind::G2,
        ObservableKind::Qfi,
        ObservableKind::Snr,
        ObservableKind::Rdg,
        ObservableKind::Adr,
        ObservableKind::RelaxationTime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObservableKind::Na => "na",
            ObservableKind::EtaNa => "eta_na",
            ObservableKind::DnaDg => "dna_dg",
            ObservableKind::StdNa => "std_na",
            ObservableKind::G2 => "g2",
            ObservableKind::Qfi => "qfi",
            ObservableKind::Snr => "snr",
            ObservableKind::Rdg => "rdg",
            ObservableKind::Adr => "adr",
            ObservableKind::RelaxationTime => "T",
        }
    }
}

impl fmt::Display for ObservableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObservableKind {
    type Err = ScalingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObservableKind::ALL
            .into_iter()
            .find(|k| {
                k.name().eq_ignore_ascii_case(s)
                    || (s == "T" && *k == ObservableKind::RelaxationTime)
            })
            .ok_or_else(|| ScalingError::UnknownObservable(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SweepStatus {
    Ok,
    Failed(String),
}

/// One sweep point: the exact parameters used plus the computed observables.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub params: SystemParams,
    pub observables: BTreeMap<ObservableKind, f64>,
    pub status: SweepStatus,
}

/// Knobs shared by every sweep point.
#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub k_max: usize,
    /// Fock cutoff for spectral observables; per-point default when `None`.
    pub spectral_trunc: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            k_max: liouville::DEFAULT_K_MAX,
            spectral_trunc: None,
        }
    }
}

fn strictly_monotone(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] > w[0]) || values.windows(2).all(|w| w[1] < w[0])
}

/// Runs every requested observable at every `axis` value. Failures are
/// recorded per point and never abort the sweep. Points are evaluated in
/// parallel; the output order follows the input order.
pub fn sweep(
    axis: SweepAxis,
    values: &[f64],
    fixed: &SystemParams,
    observables: &[ObservableKind],
    opts: &SweepOptions,
) -> Result<Vec<SweepRecord>, ScalingError> {
    if values.is_empty() {
        return Err(ScalingError::EmptyValues);
    }
    if values.len() > 1 && !strictly_monotone(values) {
        return Err(ScalingError::NotMonotone);
    }
    let obs: Vec<ObservableKind> = {
        let mut seen = Vec::new();
        for &o in observables {
            if !seen.contains(&o) {
                seen.push(o);
            }
        }
        seen
    };
    let records = values
        .par_iter()
        .map(|&v| {
            let params = match axis {
                SweepAxis::G => fixed.with_g(v),
                SweepAxis::Eta => fixed.with_eta(v),
            };
            let params = match params {
                Ok(p) => p,
                Err(e) => {
                    return SweepRecord {
                        params: *fixed,
                        observables: BTreeMap::new(),
                        status: SweepStatus::Failed(e.to_string()),
                    }
                }
            };
            evaluate_point(&params, &obs, opts)
        })
        .collect();
    Ok(records)
}

fn evaluate_point(
    params: &SystemParams,
    obs: &[ObservableKind],
    opts: &SweepOptions,
) -> SweepRecord {
    use ObservableKind::*;
    let mut out = BTreeMap::new();
    let mut failure: Option<String> = None;
    let fail = |failure: &mut Option<String>, msg: String| {
        if failure.is_none() {
            *failure = Some(msg);
        }
    };

    if obs.iter().any(|o| matches!(o, Na | EtaNa | StdNa | G2)) {
        match exactstate::factorial_moments(params, 2) {
            Ok(rep) => {
                if obs.contains(&Na) {
                    out.insert(Na, rep.photon_number);
                }
                if obs.contains(&EtaNa) {
                    out.insert(EtaNa, params.eta() * rep.photon_number);
                }
                if obs.contains(&StdNa) {
                    out.insert(StdNa, rep.photon_std);
                }
                if obs.contains(&G2) {
                    out.insert(G2, rep.g2);
                }
            }
            Err(e) => fail(&mut failure, e.to_string()),
        }
    }
    if obs.iter().any(|o| matches!(o, DnaDg | Qfi | Snr)) {
        match metrology::metrology_report(params) {
            Ok(rep) => {
                if obs.contains(&DnaDg) {
                    out.insert(DnaDg, rep.susceptibility);
                }
                if obs.contains(&Qfi) {
                    out.insert(Qfi, rep.qfi);
                }
                if obs.contains(&Snr) {
                    out.insert(Snr, rep.snr_photon);
                }
            }
            Err(e) => fail(&mut failure, e.to_string()),
        }
    }
    if obs.iter().any(|o| matches!(o, Rdg | Adr | RelaxationTime)) {
        let trunc = opts
            .spectral_trunc
            .unwrap_or_else(|| liouville::default_spectral_trunc(params));
        match liouville::asymptotic_decay_rate(params, trunc, opts.k_max) {
            Ok(summary) => {
                if obs.contains(&Rdg) {
                    out.insert(Rdg, summary.rdg);
                }
                if obs.contains(&Adr) {
                    out.insert(Adr, summary.adr);
                }
                if obs.contains(&RelaxationTime) {
                    out.insert(RelaxationTime, summary.relaxation_time);
                }
            }
            Err(e) => fail(&mut failure, e.to_string()),
        }
    }

    SweepRecord {
        params: *params,
        observables: out,
        status: match failure {
            None => SweepStatus::Ok,
            Some(msg) => SweepStatus::Failed(msg),
        },
    }
}

/// Least-squares power-law fit `y = C x^exponent` in log-log space.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub std_error: f64,
    pub n_points: usize,
    pub reference_exponent: Option<f64>,
    pub within_tolerance: Option<bool>,
    /// Indices of sweep records excluded from the fit (failed kernels).
    pub excluded_indices: Vec<usize>,
}

impl FitResult {
    pub fn against_reference(mut self, reference: f64, tolerance: f64) -> Self {
        self.reference_exponent = Some(reference);
        self.within_tolerance = Some((self.exponent - reference).abs() <= tolerance);
        self
    }
}

/// Core regression on raw positive samples.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<FitResult, ScalingError> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 3 {
        return Err(ScalingError::InsufficientPoints {
            need: 3,
            got: xs.len(),
        });
    }
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        if !(x > 0.0) || !(y > 0.0) {
            return Err(ScalingError::NonpositiveValue { index: i, x, y });
        }
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let std_error = if lx.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(FitResult {
        exponent: slope,
        intercept,
        r_squared,
        std_error,
        n_points: xs.len(),
        reference_exponent: None,
        within_tolerance: None,
        excluded_indices: Vec::new(),
    })
}

/// X variable of a power-law fit over sweep records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitVariable {
    Eta,
    DeltaG,
    Na,
    RelaxationTime,
}

/// Fits `log y_var` against `log x_var` over the usable records; records with
/// failed kernels are excluded and listed in the result.
pub fn fit_exponent(
    records: &[SweepRecord],
    x_var: FitVariable,
    y_var: ObservableKind,
) -> Result<FitResult, ScalingError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        if rec.status != SweepStatus::Ok {
            excluded.push(i);
            continue;
        }
        let x = match x_var {
            FitVariable::Eta => Some(rec.params.eta()),
            FitVariable::DeltaG => Some(rec.params.delta_g()),
            FitVariable::Na => rec.observables.get(&ObservableKind::Na).copied(),
            FitVariable::RelaxationTime => rec
                .observables
                .get(&ObservableKind::RelaxationTime)
                .copied(),
        };
        let y = rec.observables.get(&y_var).copied();
        match (x, y) {
            (Some(x), Some(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ => return Err(ScalingError::MissingObservable(y_var)),
        }
    }
    if xs.len() < 3 {
        return Err(ScalingError::InsufficientPoints {
            need: 3,
            got: xs.len(),
        });
    }
    let mut fit = fit_log_log(&xs, &ys)?;
    fit.excluded_indices = excluded;
    Ok(fit)
}

/// One regime row of the exponent matrix.
#[derive(Debug, Clone, Serialize)]
pub struct Table1Row {
    pub regime: &'static str,
    pub g: f64,
    pub fits: Vec<(ObservableKind, FitResult)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1Report {
    pub rows: Vec<Table1Row>,
}

/// Reference eta-exponents: `(dNa/dg, std, SNR, Na, T)`.
const TABLE1_CRITICAL: [f64; 5] = [-1.0, -0.5, -1.0, -0.5, -0.5];
const TABLE1_TIME_CRYSTAL: [f64; 5] = [-1.0, -0.5, -1.0, -1.0, -1.0];
const TABLE1_TOLERANCE: f64 = 0.05;

/// Fits the eta-exponents of `dNa/dg`, `std(Na)`, `S_g`, `Na` (and `T` when
/// requested) at the critical point and in the time-crystal phase.
pub fn table1_report(
    eta_values: &[f64],
    kappa: f64,
    g_critical: f64,
    g_timecrystal: f64,
    include_relaxation: bool,
) -> Result<Table1Report, ScalingError> {
    if eta_values.len() < 5 {
        return Err(ScalingError::InsufficientPoints {
            need: 5,
            got: eta_values.len(),
        });
    }
    let (min, max) = eta_values
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if max / min < 10.0 {
        return Err(ScalingError::InsufficientSpan { min, max });
    }
    use ObservableKind::*;
    let mut wanted = vec![DnaDg, StdNa, Snr, Na];
    if include_relaxation {
        wanted.push(RelaxationTime);
    }
    let mut rows = Vec::new();
    for (regime, g, refs) in [
        ("critical", g_critical, TABLE1_CRITICAL),
        ("time_crystal", g_timecrystal, TABLE1_TIME_CRYSTAL),
    ] {
        let fixed = SystemParams::new(g, kappa, eta_values[0])
            .map_err(|e| ScalingError::InvalidParams(e.to_string()))?;
        let records = sweep(
            SweepAxis::Eta,
            eta_values,
            &fixed,
            &wanted,
            &SweepOptions::default(),
        )?;
        let mut fits = Vec::new();
        for (i, &obs) in wanted.iter().enumerate() {
            let fit = fit_exponent(&records, FitVariable::Eta, obs)?
                .against_reference(refs[i], TABLE1_TOLERANCE);
            fits.push((obs, fit));
        }
        rows.push(Table1Row { regime, g, fits });
    }
    Ok(Table1Report { rows })
}
