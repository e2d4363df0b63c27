//! Closed-form steady-state quantities of the quantum van der Pol oscillator.
//!
//! The model is a single bosonic mode with incoherent one-photon pump `g`,
//! one-photon loss `kappa` and two-photon loss `eta`. Its steady state is
//! diagonal in the Fock basis with
//!
//! ```text
//! p_n  ∝  (g/eta)^n  1F1(1+n; (kappa+g)/eta + n; g/eta) / ((kappa+g)/eta)_n
//! ⟨a†^m a^m⟩ = m! (g/eta)^m 1F1(1+m; (kappa+g)/eta + m; 2g/eta)
//!              / [ ((kappa+g)/eta)_m  1F1(1; (kappa+g)/eta; 2g/eta) ]
//! W(z) = (2/pi) e^{-2|z|^2} 0F1(; (kappa+g)/eta; 4g|z|^2/eta)
//!        / 1F1(1; (kappa+g)/eta; 2g/eta)
//! ```
//!
//! Everything is evaluated in the log domain and exponentiated at the end,
//! which keeps the `1/eta` parameter regime finite in `f64`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asymptotics;
use crate::specialfn::{
    self, hyp0f1_log, hyp1f1_log, log_gamma, pochhammer_log, HypergeometricSpec, SpecialFnError,
};

/// Relative tail threshold of `DiagonalState`: the last probability must stay
/// below this fraction of the peak.
pub const TAIL_RATIO: f64 = 1e-12;

/// How often the automatic truncation is doubled before giving up.
const MAX_TRUNC_DOUBLINGS: u32 = 6;

#[derive(Debug, Error)]
pub enum ExactStateError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("truncation {trunc} insufficient: {detail}")]
    TruncationInsufficient { trunc: usize, detail: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    SpecialFn(#[from] SpecialFnError),
}

/// Physical rates of the oscillator, in units of `kappa` by convention.
///
/// The derived quantities `q_exponent = (kappa + g - 2 eta)/eta` and
/// `delta_g = g - kappa` are recomputed on demand and never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    g: f64,
    kappa: f64,
    eta: f64,
    #[serde(default)]
    omega0: f64,
}

impl SystemParams {
    pub fn new(g: f64, kappa: f64, eta: f64) -> Result<Self, ExactStateError> {
        Self::with_omega0(g, kappa, eta, 0.0)
    }

    pub fn with_omega0(g: f64, kappa: f64, eta: f64, omega0: f64) -> Result<Self, ExactStateError> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(ExactStateError::InvalidParams(format!(
                "kappa must be positive and finite, got {kappa}"
            )));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(ExactStateError::InvalidParams(format!(
                "eta must be positive and finite, got {eta}"
            )));
        }
        if !(g >= 0.0) || !g.is_finite() {
            return Err(ExactStateError::InvalidParams(format!(
                "g must be nonnegative and finite, got {g}"
            )));
        }
        if !omega0.is_finite() {
            return Err(ExactStateError::InvalidParams(format!(
                "omega0 must be finite, got {omega0}"
            )));
        }
        Ok(SystemParams {
            g,
            kappa,
            eta,
            omega0,
        })
    }

    pub fn g(&self) -> f64 {
        self.g
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// `(kappa + g - 2 eta) / eta`, the exponent of the complex-P weight.
    pub fn q_exponent(&self) -> f64 {
        (self.kappa + self.g - 2.0 * self.eta) / self.eta
    }

    /// Distance from threshold, `g - kappa`.
    pub fn delta_g(&self) -> f64 {
        self.g - self.kappa
    }

    /// `(kappa + g) / eta`, the denominator parameter of every closed form.
    pub(crate) fn q_prime(&self) -> f64 {
        (self.kappa + self.g) / self.eta
    }

    pub fn with_g(&self, g: f64) -> Result<Self, ExactStateError> {
        Self::with_omega0(g, self.kappa, self.eta, self.omega0)
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self, ExactStateError> {
        Self::with_omega0(self.g, self.kappa, eta, self.omega0)
    }
}

/// Where a photon-number distribution came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    ClosedForm,
    Oracle,
}

/// Normalized photon-number distribution `p_n`, `n = 0 ..= truncation`.
#[derive(Debug, Clone)]
pub struct DiagonalState {
    probabilities: Vec<f64>,
    truncation: usize,
    source: Provenance,
}

impl DiagonalState {
    /// Validates nonnegativity and the tail criterion, clamps roundoff-level
    /// negatives to zero and normalizes to unit sum.
    pub fn new(mut probabilities: Vec<f64>, source: Provenance) -> Result<Self, ExactStateError> {
        if probabilities.is_empty() {
            return Err(ExactStateError::InvalidParams(
                "empty probability vector".into(),
            ));
        }
        let max = probabilities.iter().cloned().fold(0.0f64, f64::max);
        if !(max > 0.0) || !max.is_finite() {
            return Err(ExactStateError::InvalidParams(format!(
                "probability vector has no positive finite entries (max {max})"
            )));
        }
        for p in probabilities.iter_mut() {
            if *p < 0.0 {
                if *p > -1e-12 * max {
                    *p = 0.0;
                } else {
                    return Err(ExactStateError::InvalidParams(format!(
                        "negative probability {p} (peak {max})"
                    )));
                }
            }
        }
        let trunc = probabilities.len() - 1;
        if probabilities[trunc] >= TAIL_RATIO * max {
            return Err(ExactStateError::TruncationInsufficient {
                trunc,
                detail: format!(
                    "tail p_N = {:.3e} exceeds {TAIL_RATIO:.0e} of the peak {max:.3e}",
                    probabilities[trunc]
                ),
            });
        }
        let sum: f64 = probabilities.iter().sum();
        for p in probabilities.iter_mut() {
            *p /= sum;
        }
        Ok(DiagonalState {
            probabilities,
            truncation: trunc,
            source,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
    pub fn truncation(&self) -> usize {
        self.truncation
    }
    pub fn source(&self) -> Provenance {
        self.source
    }
}

/// Factorial moments and the statistics derived from them.
#[derive(Debug, Clone)]
pub struct MomentReport {
    /// `⟨a†^m a^m⟩` for `m = 0 ..= max_order`.
    pub factorial_moments: Vec<f64>,
    pub photon_number: f64,
    pub photon_std: f64,
    pub g2: f64,
}

impl MomentReport {
    fn from_moments(moments: Vec<f64>, m2: f64) -> Result<Self, ExactStateError> {
        let n_a = moments[1];
        let var = m2 + n_a - n_a * n_a;
        if var < -1e-8 * (m2 + n_a) {
            return Err(ExactStateError::InvalidParams(format!(
                "negative photon-number variance {var}"
            )));
        }
        Ok(MomentReport {
            photon_number: n_a,
            photon_std: var.max(0.0).sqrt(),
            g2: m2 / (n_a * n_a),
            factorial_moments: moments,
        })
    }
}

/// Rectangular phase-space grid of the Wigner function.
#[derive(Debug, Clone)]
pub struct WignerField {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major `values[iy * xs.len() + ix] = W(xs[ix] + i ys[iy])`.
    pub values: Vec<f64>,
    pub dx: f64,
    pub dy: f64,
    /// Mean-field limit-cycle radius `sqrt((g - kappa)/2 eta)`, above threshold only.
    pub mean_field_radius: Option<f64>,
}

impl WignerField {
    /// Riemann-sum of `W dx dy` over the grid.
    pub fn grid_norm(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx * self.dy
    }
}

/// Wigner grid request; defaults follow the phase structure of the state.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub half_width: Option<f64>,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            half_width: None,
            points: 201,
        }
    }
}

/// Drive parameters of the `g = 0` branch. `c = -2 i epsilon / eta` and
/// `d = 2 i (Delta + i kappa/2) / eta` are derived on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivenBranchParams {
    pub delta: f64,
    pub epsilon: Complex64,
}

impl DrivenBranchParams {
    pub fn new(delta: f64, epsilon: Complex64) -> Result<Self, ExactStateError> {
        if !delta.is_finite() || !epsilon.is_finite() {
            return Err(ExactStateError::InvalidParams(
                "driven-branch parameters must be finite".into(),
            ));
        }
        Ok(DrivenBranchParams { delta, epsilon })
    }

    pub fn c(&self, eta: f64) -> Complex64 {
        -2.0 * Complex64::i() * self.epsilon / eta
    }

    pub fn d(&self, eta: f64, kappa: f64) -> Complex64 {
        2.0 * Complex64::i() * Complex64::new(self.delta, kappa / 2.0) / eta
    }
}

/// Log of the unnormalized `p_n` (common denominator dropped).
#[cfg(test)]
fn log_pn_unnormalized(params: &SystemParams, n: usize) -> Result<f64, ExactStateError> {
    let qp = params.q_prime();
    let z = params.g / params.eta;
    let nf = n as f64;
    Ok(
        nf * z.ln() + hyp1f1_log(1.0 + nf, qp + nf, z)?.log_magnitude
            - pochhammer_log(qp, n as u32)?.log_magnitude,
    )
}

fn distribution_at(params: &SystemParams, trunc: usize) -> Result<Vec<f64>, ExactStateError> {
    let qp = params.q_prime();
    let z = params.g / params.eta;
    let log_z = z.ln();
    // Compensated prefix sums of log (q')_n, shared across all n.
    let mut poch = Vec::with_capacity(trunc + 1);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    poch.push(0.0);
    for i in 0..trunc {
        let term = (qp + i as f64).ln();
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        poch.push(sum);
    }
    let logs = (0..=trunc)
        .into_par_iter()
        .map(|n| -> Result<f64, ExactStateError> {
            let nf = n as f64;
            Ok(nf * log_z + hyp1f1_log(1.0 + nf, qp + nf, z)?.log_magnitude - poch[n])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(logs.iter().map(|l| (l - peak).exp()).collect())
}

/// Truncation seed from the limit formulas: `ceil(mu + 12 sqrt(sigma^2+1) + 20)`.
pub(crate) fn truncation_estimate(params: &SystemParams) -> usize {
    let (mu, sd) = asymptotics::moment_scale_estimate(params);
    (mu + 12.0 * (sd * sd + 1.0).sqrt() + 20.0).ceil() as usize
}

/// Steady-state photon-number distribution from the closed form.
///
/// With `trunc = None` the truncation starts at the limit-formula estimate
/// and doubles until the tail criterion holds.
pub fn photon_distribution(
    params: &SystemParams,
    trunc: Option<usize>,
) -> Result<DiagonalState, ExactStateError> {
    if !(params.g > 0.0) {
        return Err(ExactStateError::Domain(format!(
            "photon_distribution requires g > 0, got g = {}",
            params.g
        )));
    }
    match trunc {
        Some(t) => DiagonalState::new(distribution_at(params, t)?, Provenance::ClosedForm),
        None => {
            let mut t = truncation_estimate(params);
            let mut last_err = None;
            for _ in 0..=MAX_TRUNC_DOUBLINGS {
                match DiagonalState::new(distribution_at(params, t)?, Provenance::ClosedForm) {
                    Ok(state) => return Ok(state),
                    Err(e @ ExactStateError::TruncationInsufficient { .. }) => {
                        last_err = Some(e);
                        t *= 2;
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(last_err.unwrap())
        }
    }
}

/// Factorial moments `⟨a†^m a^m⟩` for `m = 0 ..= max_order` plus the derived
/// photon statistics.
pub fn factorial_moments(
    params: &SystemParams,
    max_order: usize,
) -> Result<MomentReport, ExactStateError> {
    if !(params.g > 0.0) {
        return Err(ExactStateError::Domain(format!(
            "factorial_moments requires g > 0, got g = {}",
            params.g
        )));
    }
    if max_order < 1 {
        return Err(ExactStateError::InvalidParams(
            "max_order must be at least 1".into(),
        ));
    }
    let qp = params.q_prime();
    let z2 = 2.0 * params.g / params.eta;
    let log_denom = hyp1f1_log(1.0, qp, z2)?.log_magnitude;
    let order = max_order.max(2);
    let mut moments = Vec::with_capacity(order + 1);
    for m in 0..=order {
        let mf = m as f64;
        let log = log_gamma(mf + 1.0)?
            + mf * (params.g / params.eta).ln()
            + hyp1f1_log(1.0 + mf, qp + mf, z2)?.log_magnitude
            - pochhammer_log(qp, m as u32)?.log_magnitude
            - log_denom;
        moments.push(log.exp());
    }
    let m2 = moments[2];
    moments.truncate(max_order + 1);
    MomentReport::from_moments(moments, m2)
}

/// Factorial moments by direct summation over a distribution, using
/// log-factorial weights `n!/(n-m)!`.
pub fn moments_from_distribution(
    state: &DiagonalState,
    max_order: usize,
) -> Result<MomentReport, ExactStateError> {
    if max_order < 1 {
        return Err(ExactStateError::InvalidParams(
            "max_order must be at least 1".into(),
        ));
    }
    let p = state.probabilities();
    let trunc = state.truncation();
    let order = max_order.max(2);
    let mut moments = Vec::with_capacity(order + 1);
    for m in 0..=order {
        let mut sum = 0.0f64;
        let mut last_term = 0.0f64;
        for (n, &pn) in p.iter().enumerate().skip(m) {
            let w = (log_gamma(n as f64 + 1.0)? - log_gamma((n - m) as f64 + 1.0)?).exp();
            last_term = w * pn;
            sum += last_term;
        }
        if m >= 1 && last_term > 1e-8 * sum {
            return Err(ExactStateError::TruncationInsufficient {
                trunc,
                detail: format!(
                    "order-{m} weighted tail contributes {:.3e} of the moment",
                    last_term / sum
                ),
            });
        }
        moments.push(sum);
    }
    let m2 = moments[2];
    moments.truncate(max_order + 1);
    MomentReport::from_moments(moments, m2)
}

/// `W` at radius `r = |z|` (the steady state is phase-symmetric).
pub fn wigner_radial(params: &SystemParams, r: f64) -> Result<f64, ExactStateError> {
    let log_denom = hyp1f1_log(1.0, params.q_prime(), 2.0 * params.g / params.eta)?.log_magnitude;
    wigner_point(params, r * r, log_denom)
}

fn wigner_point(params: &SystemParams, r2: f64, log_denom: f64) -> Result<f64, ExactStateError> {
    let log = (2.0 / std::f64::consts::PI).ln() - 2.0 * r2
        + hyp0f1_log(params.q_prime(), 4.0 * params.g * r2 / params.eta)?.log_magnitude
        - log_denom;
    Ok(log.exp())
}

/// Wigner function on a square grid centred at the origin.
pub fn wigner(params: &SystemParams, grid: &GridSpec) -> Result<WignerField, ExactStateError> {
    if !(params.g > 0.0) {
        return Err(ExactStateError::Domain(format!(
            "wigner requires g > 0, got g = {}",
            params.g
        )));
    }
    if grid.points < 2 {
        return Err(ExactStateError::InvalidParams(
            "wigner grid needs at least 2 points per axis".into(),
        ));
    }
    let radius = mean_field_radius(params);
    let half_width = grid
        .half_width
        .unwrap_or_else(|| (2.0 * radius.unwrap_or(0.0) + 5.0 / 2f64.sqrt()).max(3.0));
    if !(half_width > 0.0) {
        return Err(ExactStateError::InvalidParams(format!(
            "wigner half-width must be positive, got {half_width}"
        )));
    }
    let n = grid.points;
    let step = 2.0 * half_width / (n - 1) as f64;
    // Centered generation keeps the axis exactly sign-symmetric (and exactly
    // zero at the midpoint for odd n).
    let center = (n - 1) as f64 / 2.0;
    let axis: Vec<f64> = (0..n).map(|i| (i as f64 - center) * step).collect();
    let log_denom = hyp1f1_log(1.0, params.q_prime(), 2.0 * params.g / params.eta)?.log_magnitude;
    let values = axis
        .par_iter()
        .map(|&y| {
            axis.iter()
                .map(|&x| wigner_point(params, x * x + y * y, log_denom))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(WignerField {
        xs: axis.clone(),
        ys: axis,
        values,
        dx: step,
        dy: step,
        mean_field_radius: radius,
    })
}

pub fn mean_field_radius(params: &SystemParams) -> Option<f64> {
    (params.g > params.kappa).then(|| (params.delta_g() / (2.0 * params.eta)).sqrt())
}

/// Normalized Wigner function of the driven `g = 0` branch at point `z`:
///
/// ```text
/// W(z) = (2/pi) e^{-2|z|^2} |0F1(; -d; 2 c conj(z))|^2 / 0F2(; -d, -conj(d); 2|c|^2)
/// ```
///
/// All branch-dependent prefactors cancel in this ratio, which integrates to
/// one exactly.
pub fn driven_branch_wigner(
    params: &SystemParams,
    driven: &DrivenBranchParams,
    z: Complex64,
) -> Result<f64, ExactStateError> {
    if params.g != 0.0 {
        return Err(ExactStateError::Domain(format!(
            "driven branch requires g = 0, got g = {}",
            params.g
        )));
    }
    let c = driven.c(params.eta);
    let d = driven.d(params.eta, params.kappa);
    let numerator = specialfn::hyp_complex(&HypergeometricSpec::hyp0f1(-d, 2.0 * c * z.conj())?)?;
    let norm = specialfn::hyp_complex(&HypergeometricSpec::hyp0f2(
        -d,
        -d.conj(),
        Complex64::new(2.0 * c.norm_sqr(), 0.0),
    )?)?;
    Ok(2.0 / std::f64::consts::PI * (-2.0 * z.norm_sqr()).exp() * numerator.norm_sqr() / norm.re)
}

/// The rescaled photon number `eta * N_a` of Fig-2(c)-style plots.
pub fn rescaled_photon_number(params: &SystemParams) -> Result<f64, ExactStateError> {
    Ok(params.eta * factorial_moments(params, 1)?.photon_number)
}
