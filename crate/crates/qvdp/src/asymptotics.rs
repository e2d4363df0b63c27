//! Thermodynamic-limit (`eta -> 0`) reference formulas in the three regimes:
//! normal phase (`g < kappa`), critical point (`g = kappa`) and time-crystal
//! phase (`g > kappa`). Used for truncation seeding, convergence tests and
//! metrology baselines.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::exactstate::SystemParams;
use crate::specialfn::log_gamma;

/// Default relative tolerance on `|g - kappa|` for critical-point
/// classification; exact float equality would be meaningless.
pub const CLASSIFICATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeKind {
    Normal,
    Critical,
    TimeCrystal,
}

/// Phase classification of a parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub kind: RegimeKind,
    pub classification_tolerance: f64,
}

impl Regime {
    pub fn classify(params: &SystemParams) -> Regime {
        Self::classify_with_tolerance(params, CLASSIFICATION_TOLERANCE)
    }

    pub fn classify_with_tolerance(params: &SystemParams, tolerance: f64) -> Regime {
        let kind = if params.delta_g().abs() <= tolerance * params.kappa() {
            RegimeKind::Critical
        } else if params.g() < params.kappa() {
            RegimeKind::Normal
        } else {
            RegimeKind::TimeCrystal
        };
        Regime {
            kind,
            classification_tolerance: tolerance,
        }
    }
}

/// Limiting photon-number law, attached to [`LimitReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PnLimitLaw {
    /// `p_n = (kappa - g) g^n / kappa^{n+1}` -- exact in the limit.
    Geometric { kappa: f64, g: f64 },
    /// Poisson with the limit-cycle mean; the paper flags this law as
    /// approximate, and so do we.
    Poisson { mean: f64, approximate: bool },
}

/// Bundle of every limit formula at one parameter point.
#[derive(Debug, Clone)]
pub struct LimitReport {
    pub regime: Regime,
    pub moments_limit: Vec<f64>,
    pub photon_number_limit: f64,
    pub photon_std_limit: f64,
    pub susceptibility_limit: f64,
    pub g2_limit: f64,
    pub snr_limit: f64,
    pub pn_limit: Option<PnLimitLaw>,
}

/// `lim ⟨a†^m a^m⟩`: `Γ(m+1) g^m/(kappa-g)^m` below threshold,
/// `Γ((m+1)/2)/Γ(1/2) (kappa/eta)^{m/2}` at it, `((g-kappa)/2eta)^m` above.
pub fn limit_moments(params: &SystemParams, m: u32) -> Result<f64, AsymptoticsError> {
    let (g, kappa, eta) = (params.g(), params.kappa(), params.eta());
    let mf = f64::from(m);
    let value = match Regime::classify(params).kind {
        RegimeKind::Normal => {
            let lg = log_gamma(mf + 1.0).expect("m + 1 > 0");
            (lg + mf * (g / (kappa - g)).ln()).exp()
        }
        RegimeKind::Critical => {
            let lg = log_gamma((mf + 1.0) / 2.0).expect("(m+1)/2 > 0")
                - log_gamma(0.5).expect("1/2 > 0");
            (lg + mf / 2.0 * (kappa / eta).ln()).exp()
        }
        RegimeKind::TimeCrystal => (mf * ((g - kappa) / (2.0 * eta)).ln()).exp(),
    };
    Ok(value)
}

/// Limits of the photon-number standard deviation, susceptibility
/// `∂_g N_a` and signal-to-noise ratio `S_g`.
pub fn limit_std_susceptibility_snr(params: &SystemParams) -> (f64, f64, f64) {
    let (g, kappa, eta) = (params.g(), params.kappa(), params.eta());
    match Regime::classify(params).kind {
        RegimeKind::Normal => {
            let d = kappa - g;
            ((g * kappa).sqrt() / d, kappa / (d * d), kappa / (g * d * d))
        }
        RegimeKind::Critical => {
            let c = (PI - 2.0) / (2.0 * PI);
            ((c * kappa / eta).sqrt(), c / eta, c / (eta * kappa))
        }
        RegimeKind::TimeCrystal => {
            let d = g - kappa;
            (
                (d / (2.0 * eta)).sqrt(),
                1.0 / (2.0 * eta),
                1.0 / (2.0 * eta * d),
            )
        }
    }
}

/// Limit of the second-order correlation: 2, pi/2 or 1.
pub fn limit_g2(params: &SystemParams) -> f64 {
    match Regime::classify(params).kind {
        RegimeKind::Normal => 2.0,
        RegimeKind::Critical => PI / 2.0,
        RegimeKind::TimeCrystal => 1.0,
    }
}

/// Limiting `p_n`: exact geometric law below threshold, approximate Poisson
/// law above it; no closed law exists at the critical point.
pub fn limit_pn(params: &SystemParams, n: u32) -> Result<(f64, bool), AsymptoticsError> {
    let (g, kappa, eta) = (params.g(), params.kappa(), params.eta());
    let nf = f64::from(n);
    match Regime::classify(params).kind {
        RegimeKind::Normal => {
            let log = (kappa - g).ln() + nf * g.ln() - (nf + 1.0) * kappa.ln();
            Ok((log.exp(), false))
        }
        RegimeKind::Critical => Err(AsymptoticsError::Domain(
            "no closed p_n law at the critical point".into(),
        )),
        RegimeKind::TimeCrystal => {
            let mean = (g - kappa) / (2.0 * eta);
            let log = nf * mean.ln() - mean - log_gamma(nf + 1.0).expect("n + 1 > 0");
            Ok((log.exp(), true))
        }
    }
}

/// The paper's reference critical exponents `(omega_1, omega_2) = (1, -1/2)`.
pub fn critical_exponents_reference() -> (f64, f64) {
    (1.0, -0.5)
}

/// Full limit bundle up to moment order `max_order`.
pub fn limit_report(
    params: &SystemParams,
    max_order: u32,
) -> Result<LimitReport, AsymptoticsError> {
    let regime = Regime::classify(params);
    let moments = (0..=max_order)
        .map(|m| limit_moments(params, m))
        .collect::<Result<Vec<_>, _>>()?;
    let (std, susc, snr) = limit_std_susceptibility_snr(params);
    let pn_limit = match regime.kind {
        RegimeKind::Normal => Some(PnLimitLaw::Geometric {
            kappa: params.kappa(),
            g: params.g(),
        }),
        RegimeKind::Critical => None,
        RegimeKind::TimeCrystal => Some(PnLimitLaw::Poisson {
            mean: params.delta_g() / (2.0 * params.eta()),
            approximate: true,
        }),
    };
    Ok(LimitReport {
        regime,
        photon_number_limit: limit_moments(params, 1)?,
        photon_std_limit: std,
        susceptibility_limit: susc,
        g2_limit: limit_g2(params),
        snr_limit: snr,
        moments_limit: moments,
        pn_limit,
    })
}

/// Rough `(mean, std)` of the photon distribution for truncation seeding.
///
/// Below threshold the normal-phase values saturate at the critical ones as
/// `g -> kappa`; above threshold the limit-cycle values dominate but never
/// fall below the critical ones.
pub(crate) fn moment_scale_estimate(params: &SystemParams) -> (f64, f64) {
    let (g, kappa, eta) = (params.g(), params.kappa(), params.eta());
    let critical_mu = (kappa / (PI * eta)).sqrt();
    let critical_sd = ((0.5 - 1.0 / PI) * kappa / eta).sqrt();
    if g < kappa {
        (
            (g / (kappa - g)).min(critical_mu),
            ((g * kappa).sqrt() / (kappa - g)).min(critical_sd),
        )
    } else {
        let mu = (g - kappa) / (2.0 * eta);
        // Non-Poissonian variance of the limit cycle: var = (3g - kappa)/(4 eta).
        let sd = ((3.0 * g - kappa) / (4.0 * eta)).sqrt();
        (mu.max(critical_mu), sd.max(critical_sd))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params(g: f64, eta: f64) -> SystemParams {
        SystemParams::new(g, 1.0, eta).unwrap()
    }

    #[test]
    fn classification_is_exhaustive_and_tolerant() {
        assert_eq!(Regime::classify(&params(0.3, 0.1)).kind, RegimeKind::Normal);
        assert_eq!(
            Regime::classify(&params(1.0, 0.1)).kind,
            RegimeKind::Critical
        );
        assert_eq!(
            Regime::classify(&params(1.0 + 1e-15, 0.1)).kind,
            RegimeKind::Critical
        );
        assert_eq!(
            Regime::classify(&params(1.5, 0.1)).kind,
            RegimeKind::TimeCrystal
        );
        let wide = Regime::classify_with_tolerance(&params(1.05, 0.1), 0.1);
        assert_eq!(wide.kind, RegimeKind::Critical);
    }

    #[test]
    fn limit_moments_reference_points() {
        assert_relative_eq!(
            limit_moments(&params(0.5, 0.1), 1).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            limit_moments(&params(2.0, 0.1), 2).unwrap(),
            25.0,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            limit_moments(&params(1.0, 0.01), 2).unwrap(),
            50.0,
            max_relative = 1e-13
        );
        // m = 0 is 1 in every regime.
        for p in [params(0.5, 0.1), params(1.0, 0.1), params(2.0, 0.1)] {
            assert_relative_eq!(limit_moments(&p, 0).unwrap(), 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn std_susceptibility_snr_branches() {
        // sqrt(g kappa)/(kappa - g) = sqrt(2) at g = 0.5; consistent with
        // S = (dN/dg)^2 / std^2 = 16/2 = 8 below.
        let (std, susc, snr) = limit_std_susceptibility_snr(&params(0.5, 0.1));
        assert_relative_eq!(std, 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(susc, 4.0, max_relative = 1e-14);
        assert_relative_eq!(snr, 8.0, max_relative = 1e-14);

        let (_, _, snr) = limit_std_susceptibility_snr(&params(2.0, 0.01));
        assert_relative_eq!(snr, 50.0, max_relative = 1e-14);

        let (_, _, snr) = limit_std_susceptibility_snr(&params(1.0, 0.01));
        assert_relative_eq!(snr, (PI - 2.0) / (2.0 * PI * 0.01), max_relative = 1e-14);
    }

    #[test]
    fn g2_steps_across_threshold() {
        assert_eq!(limit_g2(&params(0.3, 0.1)), 2.0);
        assert_relative_eq!(limit_g2(&params(1.0, 0.1)), PI / 2.0);
        assert_eq!(limit_g2(&params(3.0, 0.1)), 1.0);
    }

    #[test]
    fn pn_laws() {
        let (p0, approx_flag) = limit_pn(&params(0.5, 0.1), 0).unwrap();
        assert_relative_eq!(p0, 0.5, max_relative = 1e-14);
        assert!(!approx_flag);
        let (p2, _) = limit_pn(&params(0.5, 0.1), 2).unwrap();
        assert_relative_eq!(p2, 0.125, max_relative = 1e-14);

        // Poisson branch with mean 1 at n = 1: e^{-1}.
        let (p1, approx_flag) = limit_pn(&params(2.0, 0.5), 1).unwrap();
        assert_relative_eq!(p1, (-1.0f64).exp(), max_relative = 1e-13);
        assert!(approx_flag);

        assert!(limit_pn(&params(1.0, 0.1), 3).is_err());
    }

    #[test]
    fn pn_laws_sum_to_one() {
        // Geometric: exact unit sum.
        let p = params(0.5, 0.1);
        let total: f64 = (0..200).map(|n| limit_pn(&p, n).unwrap().0).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-14);
        // Poisson branch within 1e-12 at mean + 12 sqrt(mean).
        let p = params(2.0, 0.02);
        let mean = 25.0f64;
        let n_max = (mean + 12.0 * mean.sqrt()).ceil() as u32;
        let total: f64 = (0..=n_max).map(|n| limit_pn(&p, n).unwrap().0).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn reference_exponents() {
        assert_eq!(critical_exponents_reference(), (1.0, -0.5));
    }

    #[test]
    fn limit_report_bundles_fields() {
        let rep = limit_report(&params(2.0, 0.1), 3).unwrap();
        assert_eq!(rep.moments_limit.len(), 4);
        assert!(matches!(
            rep.pn_limit,
            Some(PnLimitLaw::Poisson {
                approximate: true,
                ..
            })
        ));
        let rep = limit_report(&params(1.0, 0.1), 1).unwrap();
        assert!(rep.pn_limit.is_none());
        assert!(rep.photon_number_limit.is_finite());
    }
}
