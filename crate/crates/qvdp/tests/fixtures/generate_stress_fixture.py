#!/usr/bin/env python3
"""Regenerates specialfn_stress.json from an arbitrary-precision oracle.

Every expected value is computed with mpmath at 60 significant digits and
rounded to f64 on output, so the fixture states each function value to f64
precision. The Rust suite asserts against these values at the per-function
tolerances; see tests/specialfn_fixture.rs.

Usage: python3 generate_stress_fixture.py > specialfn_stress.json
"""

import json
import sys

from mpmath import mp, mpf, mpc, log, loggamma, rf, hyper

mp.dps = 60


def f(x):
    return float(x)


def log_gamma_cases():
    xs = [0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.25, 10.3, 42.01, 171.0,
          777.7, 1e3, 123456.789, 1e5, 1e6]
    return [{"x": x, "expected_log": f(loggamma(mpf(x)))} for x in xs]


def pochhammer_cases():
    args = [(0.5, 7), (3.25, 100), (1000.5, 50), (2000.0, 500), (0.01, 5),
            (12.0, 0), (7.7, 33), (500.25, 2000), (100000.5, 1000), (999999.5, 10)]
    return [{"x": x, "n": n, "expected_log": f(log(rf(mpf(x), n))) if n > 0 else 0.0}
            for (x, n) in args]


def hyp1f1_cases():
    # (a, b, z) spanning the steady-state regime: b ~ (kappa+g)/eta up to 4e4,
    # z up to 2g/eta of the same order, a = 1 + n for distribution entries.
    args = [
        (1.0, 1.5, 0.3), (0.5, 7.0, 10.0), (2.0, 2.0, 50.0), (5.0, 100.0, 400.0),
        (1.0, 100.0, 120.0), (17.5, 40.0, 55.0), (1.0, 301.0, 300.0),
        (1.0, 2001.0, 2000.0), (2.0, 2002.0, 2000.0), (11.0, 2011.0, 2000.0),
        (101.0, 2101.0, 2000.0), (251.0, 1751.0, 1000.0), (3.0, 3003.0, 4000.0),
        (1.0, 3001.0, 4000.0), (26.0, 3026.0, 4000.0), (1.0, 1501.0, 1000.0),
        (501.0, 2001.0, 1000.0), (1.0, 40001.0, 40000.0), (6.0, 40006.0, 40000.0),
        (1.0, 601.0, 1200.0), (41.0, 641.0, 1200.0), (1.0, 60.0, 40.0),
        (21.0, 80.0, 40.0), (1.0, 30.0, 60.0), (1.0, 12.0, 3.0), (4.0, 4.5, 1.0),
        (0.25, 0.75, 2.0), (1.0, 201.0, 390.0), (96.0, 296.0, 390.0),
        (1.0, 1001.0, 1990.0), (490.0, 1490.0, 995.0), (1.0, 10001.0, 19900.0),
        (3.0, 10.0, 1000.0), (2.5, 3.5, 700.0), (1.0, 2.0, 1.0),
    ]
    return [{"a": a, "b": b, "z": z, "expected_log": f(log(hyper([a], [b], mpf(z))))}
            for (a, b, z) in args]


def hyp0f1_cases():
    args = [
        (1.0, 1.0), (2.0, 0.5), (3.0, 10.0), (1.5, 100.0), (50.0, 1000.0),
        (30.0, 250000.0), (2000.0, 4000000.0), (2000.0, 40000.0), (09.5, 2.25),
        (100.0, 12345.6), (1.25, 9000.0), (7.0, 77777.0), (300.0, 90000.0),
        (3000.0, 2250000.0), (12.0, 144.0), (1.0, 10000.0), (5.5, 333.3),
        (2500.0, 1000000.0), (40.0, 1600.0), (60.0, 0.01),
    ]
    return [{"b": b, "z": z, "expected_log": f(log(hyper([], [b], mpf(z))))}
            for (b, z) in args]


def complex_cases():
    def c(re, im):
        return mpc(re, im)

    def d_param(delta, kappa, eta):
        return 2j * (mpf(delta) + 1j * mpf(kappa) / 2) / mpf(eta)

    cases = []

    def add(kind, num, den, z):
        v = hyper([mpc(*p) for p in num], [mpc(*p) for p in den], mpc(*z))
        cases.append({
            "kind": kind,
            "numerator": [[f(p[0]), f(p[1])] for p in num],
            "denominator": [[f(p[0]), f(p[1])] for p in den],
            "z": [f(z[0]), f(z[1])],
            "expected": [f(v.real), f(v.imag)],
        })

    # Driven-branch shapes: 0F1(-d, 2 c zbar) and 0F2(-d, -conj d, 2|c|^2).
    for (delta, kappa, eta, eps) in [(1.0, 1.0, 1.0, 1.0), (0.0, 1.0, 0.5, 0.5),
                                     (2.0, 1.0, 2.0, 1.5), (-1.0, 2.0, 1.0, 0.7)]:
        d = d_param(delta, kappa, eta)
        cc = -2j * mpf(eps) / mpf(eta)
        md = (-d).real, (-d).imag
        mdc = (-d).conjugate().real, (-d).conjugate().imag
        for z in [(0.3, -0.4), (1.0, 1.0)]:
            w = 2 * cc * mpc(*z).conjugate()
            add("0f1", [], [md], (w.real, w.imag))
        add("0f2", [], [md, mdc], (2 * abs(cc) ** 2, 0.0))

    # Generic moderate-argument spot checks.
    add("0f1", [], [(2.0, 3.0)], (1.0, -2.0))
    add("0f1", [], [(0.5, -0.25)], (3.0, 4.0))
    add("1f1", [(1.0, 1.0)], [(3.0, -0.5)], (2.0, 2.0))
    add("1f1", [(0.5, -1.0)], [(3.0, 0.5)], (2.0, 2.0))
    add("1f1", [(2.0, 0.0)], [(5.0, 1.0)], (-4.0, 0.5))
    add("0f2", [], [(1.0, 1.0), (2.0, -1.0)], (3.0, 0.5))
    add("0f2", [], [(4.0, 0.0), (2.5, 2.5)], (-8.0, 3.0))
    add("0f2", [], [(1.5, -0.5), (0.75, 0.25)], (0.0, 6.0))
    return cases


def main():
    fixture = {
        "generator": "generate_stress_fixture.py (mpmath, 60 significant digits)",
        "log_gamma": log_gamma_cases(),
        "pochhammer": pochhammer_cases(),
        "hyp1f1": hyp1f1_cases(),
        "hyp0f1": hyp0f1_cases(),
        "complex": complex_cases(),
    }
    n = sum(len(v) for k, v in fixture.items() if k != "generator")
    print(json.dumps(fixture, indent=1), file=sys.stdout)
    print(f"total cases: {n}", file=sys.stderr)


if __name__ == "__main__":
    main()
