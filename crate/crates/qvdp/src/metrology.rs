//! Quantum Fisher information and signal-to-noise ratios for estimating the
//! pump rate `g` from the steady state.
//!
//! The state is diagonal in the Fock basis, so the QFI reduces to
//! `F_g = sum_j (d p_j / d g)^2 / p_j`. Derivatives are central differences
//! with one Richardson level; analytic parameter-derivatives of `1F1` are
//! deliberately avoided. All distributions entering one derivative are
//! evaluated at a common truncation so that truncation jitter cannot
//! masquerade as signal.

use thiserror::Error;

use crate::exactstate::{self, ExactStateError, SystemParams};
use crate::scaling;

/// Default finite-difference step, in units of `kappa`.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Probabilities below this floor are dropped from the QFI sum (the `1/p_j`
/// weights would otherwise amplify truncation-tail noise); the dropped mass
/// is reported.
pub const PROBABILITY_FLOOR: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum MetrologyError {
    #[error("observable variance {0:.3e} below 1e-30; no signal to compare against")]
    ZeroVariance(f64),
    #[error("observable weights cover {have} Fock states but the distribution needs {need}")]
    WeightsTooShort { have: usize, need: usize },
    #[error("finite-difference step {0} must be positive and smaller than g")]
    BadStep(f64),
    #[error("need at least {need} sweep points, got {got}")]
    InsufficientPoints { need: usize, got: usize },
    #[error(transparent)]
    State(#[from] ExactStateError),
}

/// QFI, photon-number SNR and the differentiation diagnostics at one point.
#[derive(Debug, Clone)]
pub struct MetrologyReport {
    pub qfi: f64,
    pub snr_photon: f64,
    /// `d N_a / d g` by the same differencing scheme.
    pub susceptibility: f64,
    pub photon_std: f64,
    pub fd_step: f64,
    /// Relative spread between the two central-difference levels entering the
    /// Richardson extrapolation of the distribution derivative.
    pub richardson_error_estimate: f64,
    /// Probability mass dropped below [`PROBABILITY_FLOOR`] in the QFI sum.
    pub discarded_probability_mass: f64,
}

/// Classification of `F_g` versus `N_a` scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingClass {
    Heisenberg { exponent: f64 },
    StandardQuantum { exponent: f64 },
    Unclassified { exponent: f64 },
}

struct FdDistributions {
    p0: Vec<f64>,
    dp: Vec<f64>,
    richardson: f64,
    trunc: usize,
}

/// Five distributions at a shared truncation: center, `g +- delta`,
/// `g +- delta/2`; derivative by Richardson-extrapolated central differences.
fn fd_distributions(params: &SystemParams, delta: f64) -> Result<FdDistributions, MetrologyError> {
    let g = params.g();
    if !(delta > 0.0) || delta >= g {
        return Err(MetrologyError::BadStep(delta));
    }
    let offsets = [0.0, delta, -delta, delta / 2.0, -delta / 2.0];
    let mut trunc = 0usize;
    for off in offsets {
        let p = params.with_g(g + off)?;
        trunc = trunc.max(exactstate::photon_distribution(&p, None)?.truncation());
    }
    let mut dists = Vec::with_capacity(offsets.len());
    for off in offsets {
        let p = params.with_g(g + off)?;
        dists.push(exactstate::photon_distribution(&p, Some(trunc))?);
    }
    let [p0, pp, pm, hp, hm] = match dists.as_slice() {
        [a, b, c, d, e] => [
            a.probabilities(),
            b.probabilities(),
            c.probabilities(),
            d.probabilities(),
            e.probabilities(),
        ],
        _ => unreachable!(),
    };
    let mut dp = Vec::with_capacity(trunc + 1);
    let mut diff_norm = 0.0f64;
    let mut scale_norm = 0.0f64;
    for n in 0..=trunc {
        let d1 = (pp[n] - pm[n]) / (2.0 * delta);
        let d2 = (hp[n] - hm[n]) / delta;
        let r = (4.0 * d2 - d1) / 3.0;
        diff_norm += (d2 - d1).abs();
        scale_norm += r.abs();
        dp.push(r);
    }
    Ok(FdDistributions {
        p0: p0.to_vec(),
        dp,
        richardson: diff_norm / scale_norm.max(1e-300),
        trunc,
    })
}

/// Signal-to-noise ratio `|d<O>/dg|^2 / Var O` for a Fock-diagonal observable
/// given by weights `w_n`.
pub fn snr(params: &SystemParams, weights: &[f64]) -> Result<f64, MetrologyError> {
    snr_with_step(params, weights, DEFAULT_FD_STEP * params.kappa())
}

pub fn snr_with_step(
    params: &SystemParams,
    weights: &[f64],
    delta: f64,
) -> Result<f64, MetrologyError> {
    let fd = fd_distributions(params, delta)?;
    if weights.len() < fd.trunc + 1 {
        return Err(MetrologyError::WeightsTooShort {
            have: weights.len(),
            need: fd.trunc + 1,
        });
    }
    let mean: f64 = weights.iter().zip(&fd.p0).map(|(w, p)| w * p).sum();
    let second: f64 = weights.iter().zip(&fd.p0).map(|(w, p)| w * w * p).sum();
    let var = second - mean * mean;
    if var < 1e-30 {
        return Err(MetrologyError::ZeroVariance(var));
    }
    let d_mean: f64 = weights.iter().zip(&fd.dp).map(|(w, d)| w * d).sum();
    Ok(d_mean * d_mean / var)
}

/// Photon-number weights `w_n = n` of the right length for `params`.
pub fn photon_number_weights(len: usize) -> Vec<f64> {
    (0..len).map(|n| n as f64).collect()
}

/// Quantum Fisher information `F_g` of the diagonal steady-state family.
pub fn qfi(params: &SystemParams) -> Result<f64, MetrologyError> {
    Ok(metrology_report(params)?.qfi)
}

/// Relative optimality gap `|F_g - S_g(N_a)| / F_g`.
pub fn optimality_gap(params: &SystemParams) -> Result<f64, MetrologyError> {
    let rep = metrology_report(params)?;
    Ok((rep.qfi - rep.snr_photon).abs() / rep.qfi)
}

pub fn metrology_report(params: &SystemParams) -> Result<MetrologyReport, MetrologyError> {
    metrology_report_with_step(params, DEFAULT_FD_STEP * params.kappa())
}

pub fn metrology_report_with_step(
    params: &SystemParams,
    delta: f64,
) -> Result<MetrologyReport, MetrologyError> {
    let fd = fd_distributions(params, delta)?;
    let mut f = 0.0f64;
    let mut discarded = 0.0f64;
    for (p, dp) in fd.p0.iter().zip(&fd.dp) {
        if *p >= PROBABILITY_FLOOR {
            f += dp * dp / p;
        } else {
            discarded += p;
        }
    }
    let n = |i: usize| i as f64;
    let mean: f64 = fd.p0.iter().enumerate().map(|(i, p)| n(i) * p).sum();
    let second: f64 = fd.p0.iter().enumerate().map(|(i, p)| n(i) * n(i) * p).sum();
    let var = second - mean * mean;
    if var < 1e-30 {
        return Err(MetrologyError::ZeroVariance(var));
    }
    let d_mean: f64 = fd.dp.iter().enumerate().map(|(i, d)| n(i) * d).sum();
    Ok(MetrologyReport {
        qfi: f,
        snr_photon: d_mean * d_mean / var,
        susceptibility: d_mean,
        photon_std: var.sqrt(),
        fd_step: delta,
        richardson_error_estimate: fd.richardson,
        discarded_probability_mass: discarded,
    })
}

/// Fits `log F_g` against `log N_a` over a converged sweep and classifies the
/// exponent: `2 +- 0.1` Heisenberg, `1 +- 0.1` standard quantum limit.
pub fn scaling_classification(points: &[(f64, f64)]) -> Result<ScalingClass, MetrologyError> {
    if points.len() < 5 {
        return Err(MetrologyError::InsufficientPoints {
            need: 5,
            got: points.len(),
        });
    }
    let (na, fg): (Vec<f64>, Vec<f64>) = points.iter().cloned().unzip();
    let fit = scaling::fit_log_log(&na, &fg).map_err(|_| MetrologyError::InsufficientPoints {
        need: 5,
        got: points.len(),
    })?;
    let e = fit.exponent;
    Ok(if (e - 2.0).abs() <= 0.1 {
        ScalingClass::Heisenberg { exponent: e }
    } else if (e - 1.0).abs() <= 0.1 {
        ScalingClass::StandardQuantum { exponent: e }
    } else {
        ScalingClass::Unclassified { exponent: e }
    })
}
