//! Shared oracles and fixture plumbing for the integration suites.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::Deserialize;

use qvdp::specialfn::{
    hyp0f1_log, hyp1f1_log, hyp_complex, log_gamma, pochhammer_log, HypergeometricSpec,
};

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `1F1(c; b; z)` summed in exact rational arithmetic until the term falls
/// below `1e-30` of the running sum. With rational inputs every term is
/// exact, so alternating-series cancellation costs no precision.
pub fn hyp1f1_exact_rational(c: &BigRational, b: &BigRational, z: &BigRational) -> f64 {
    let mut term = BigRational::one();
    let mut sum = term.clone();
    let floor = ratio(1, 1_000_000_000) * ratio(1, 1_000_000_000) * ratio(1, 1_000_000_000_000);
    let mut k = 0i64;
    loop {
        let kb = BigInt::from(k);
        let numer = c + BigRational::from_integer(kb.clone());
        let denom =
            (b + BigRational::from_integer(kb)) * BigRational::from_integer(BigInt::from(k + 1));
        term = term * numer * z / denom;
        sum += term.clone();
        k += 1;
        if term.abs() < floor.clone() * sum.abs() && k > z.abs().to_f64().unwrap_or(0.0) as i64 + 8
        {
            break;
        }
        assert!(k < 5000, "rational oracle did not converge");
    }
    sum.to_f64().expect("oracle sum fits in f64")
}

/// One Kummer-transform check on the quarter/eighth-integer grid;
/// `a = a4/4`, `b = b4/4`, `z = zi/8`. Returns `Err` with a report when the
/// identity fails beyond 1e-8 relative.
pub fn kummer_check_one(a4: i64, b4: i64, zi: i64) -> Result<(), String> {
    let a = a4 as f64 / 4.0;
    let b = b4 as f64 / 4.0;
    let z = zi as f64 / 8.0;
    let lhs = hyp1f1_log(a, b, z).unwrap().log_magnitude;
    let rhs_val = hyp1f1_exact_rational(&ratio(b4 - a4, 4), &ratio(b4, 4), &ratio(-zi, 8));
    if rhs_val <= 0.0 {
        return Err(format!("oracle value nonpositive at a={a} b={b} z={z}"));
    }
    let rhs = z + rhs_val.ln();
    if (lhs - rhs).abs() <= 1e-8 {
        Ok(())
    } else {
        Err(format!(
            "Kummer mismatch at a={a} b={b} z={z}: {lhs:.15e} vs {rhs:.15e}"
        ))
    }
}

/// One contiguous-relation check for `0F1`; `b = bi/4`, `z = zi/200`.
pub fn contiguous_check_one(bi: i64, zi: i64) -> Result<(), String> {
    let b = bi as f64 / 4.0;
    let z = zi as f64 / 200.0;
    let l_minus = hyp0f1_log(b - 1.0, z).unwrap().log_magnitude;
    let l_mid = hyp0f1_log(b, z).unwrap().log_magnitude;
    let l_plus = hyp0f1_log(b + 1.0, z).unwrap().log_magnitude;
    let scale = l_minus.max(l_mid).max(l_plus);
    let lhs = (l_minus - scale).exp() - (l_mid - scale).exp();
    let rhs = z / (b * (b - 1.0)) * (l_plus - scale).exp();
    if (lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1e-300) {
        Ok(())
    } else {
        Err(format!(
            "contiguous mismatch at b={b} z={z}: {lhs:.15e} vs {rhs:.15e}"
        ))
    }
}

// --- stress fixture -------------------------------------------------------

#[derive(Deserialize)]
pub struct Fixture {
    pub log_gamma: Vec<LogGammaCase>,
    pub pochhammer: Vec<PochhammerCase>,
    pub hyp1f1: Vec<Hyp1f1Case>,
    pub hyp0f1: Vec<Hyp0f1Case>,
    pub complex: Vec<ComplexCase>,
}

#[derive(Deserialize)]
pub struct LogGammaCase {
    pub x: f64,
    pub expected_log: f64,
}

#[derive(Deserialize)]
pub struct PochhammerCase {
    pub x: f64,
    pub n: u32,
    pub expected_log: f64,
}

#[derive(Deserialize)]
pub struct Hyp1f1Case {
    pub a: f64,
    pub b: f64,
    pub z: f64,
    pub expected_log: f64,
}

#[derive(Deserialize)]
pub struct Hyp0f1Case {
    pub b: f64,
    pub z: f64,
    pub expected_log: f64,
}

#[derive(Deserialize)]
pub struct ComplexCase {
    pub kind: String,
    pub numerator: Vec<[f64; 2]>,
    pub denominator: Vec<[f64; 2]>,
    pub z: [f64; 2],
    pub expected: [f64; 2],
}

pub fn load_fixture() -> Fixture {
    let text = include_str!("../fixtures/specialfn_stress.json");
    serde_json::from_str(text).expect("fixture parses")
}

fn close(got: f64, expected: f64, abs: f64, rel: f64) -> Result<(), String> {
    let tol = abs + rel * expected.abs();
    if (got - expected).abs() <= tol {
        Ok(())
    } else {
        Err(format!(
            "got {got:.17e}, expected {expected:.17e}, diff {:.3e} > tol {tol:.3e}",
            (got - expected).abs()
        ))
    }
}

/// Every fixture case at its stated tolerance; returns the list of failures.
pub fn check_fixture(fixture: &Fixture) -> Vec<String> {
    let mut failures = Vec::new();
    for case in &fixture.log_gamma {
        if let Err(e) = close(log_gamma(case.x).unwrap(), case.expected_log, 1e-14, 1e-13) {
            failures.push(format!("log_gamma({}): {e}", case.x));
        }
    }
    for case in &fixture.pochhammer {
        let got = pochhammer_log(case.x, case.n).unwrap();
        let got_log = if case.n == 0 { 0.0 } else { got.log_magnitude };
        let quantum = 2.0 * f64::EPSILON * case.expected_log.abs();
        if let Err(e) = close(got_log, case.expected_log, 1e-12 + quantum, 0.0) {
            failures.push(format!("pochhammer({}, {}): {e}", case.x, case.n));
        }
    }
    for case in &fixture.hyp1f1 {
        let got = hyp1f1_log(case.a, case.b, case.z).unwrap();
        let quantum = 2.0 * f64::EPSILON * case.expected_log.abs();
        if let Err(e) = close(got.log_magnitude, case.expected_log, 1e-10 + quantum, 0.0) {
            failures.push(format!("1F1({};{};{}): {e}", case.a, case.b, case.z));
        }
    }
    for case in &fixture.hyp0f1 {
        let got = hyp0f1_log(case.b, case.z).unwrap();
        let quantum = 2.0 * f64::EPSILON * case.expected_log.abs();
        if let Err(e) = close(got.log_magnitude, case.expected_log, 1e-10 + quantum, 0.0) {
            failures.push(format!("0F1(;{};{}): {e}", case.b, case.z));
        }
    }
    for case in &fixture.complex {
        let num: Vec<Complex64> = case
            .numerator
            .iter()
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        let den: Vec<Complex64> = case
            .denominator
            .iter()
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        let spec = HypergeometricSpec::new(num, den, Complex64::new(case.z[0], case.z[1])).unwrap();
        let got = hyp_complex(&spec).unwrap();
        let expected = Complex64::new(case.expected[0], case.expected[1]);
        let err = (got - expected).norm();
        let tol = 1e-8 * expected.norm().max(1e-12);
        if err > tol {
            failures.push(format!(
                "{} z={:?}: got {got}, expected {expected}, err {err:.3e}",
                case.kind, case.z
            ));
        }
    }
    failures
}
