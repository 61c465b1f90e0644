#!/usr/bin/env python3
"""Derive the radial bubble constants and write data/bubble_constants.json.

Ansatz, with r = F0(x - x0) and m = N/(N-1):

    u(r) = -N log(1 + c (lam r)^m) + N log lam + a

The gauge enters only through r, so the radial form of Q_N is the Euclidean
one for every gauge family:

    -(r^{N-1} |u'|^{N-2} u')' / r^{N-1} = V0 e^u.

Substituting gives V0 e^a = N (N c m)^{N-1} for every c; c is a free scale
(absorbed by lam) and is fixed to 1. The mass int V0 e^u over R^N is then
computed with the Wulff polar measure N k r^{N-1} dr.

Usage: derive_bubble_constants.py [output.json]
"""

import hashlib
import json
import pathlib
import sys

import sympy as sp

FAMILIES = ["euclidean", "diagonal", "p_norm", "smoothed_p_norm", "user"]
DIMENSIONS = [2, 3, 4]


def derive(n):
    r, lam, c, a, v0, k = sp.symbols("r lambda c a V0 k", positive=True)
    m = sp.Rational(n, n - 1)
    u = -n * sp.log(1 + c * (lam * r) ** m) + n * sp.log(lam) + a
    du = sp.diff(u, r)
    # u' < 0, so |u'|^{N-2} u' = -(-u')^{N-1}.
    flux = -((-du) ** (n - 1))
    lhs = -sp.diff(r ** (n - 1) * flux, r) / r ** (n - 1)
    rhs = v0 * sp.exp(u)
    ratio = sp.simplify(sp.powsimp(sp.expand_power_base(lhs / rhs, force=True), force=True))
    # ratio must be independent of r; solve ratio = 1 for a.
    if sp.simplify(sp.diff(ratio, r)) != 0:
        raise RuntimeError(f"N={n}: ansatz residual depends on r: {ratio}")
    a_sol = sp.solve(sp.Eq(ratio, 1), a)
    if len(a_sol) != 1:
        raise RuntimeError(f"N={n}: expected one solution for a, got {a_sol}")
    a_expr = sp.simplify(a_sol[0].subs(c, 1))
    # a = A_N - log V0
    a_const = sp.simplify(sp.expand_log(a_expr + sp.log(v0), force=True))
    if a_const.has(v0) or a_const.has(lam):
        raise RuntimeError(f"N={n}: a_N has unexpected dependence: {a_const}")
    density = (v0 * sp.exp(u)).subs({a: a_expr, c: 1, lam: 1})
    mass = sp.simplify(n * k * sp.integrate(sp.simplify(r ** (n - 1) * density), (r, 0, sp.oo)))
    mass_over_k = sp.nsimplify(sp.simplify(mass / k))
    expected = n * sp.Rational(n * n, n - 1) ** (n - 1)
    if sp.simplify(mass_over_k - expected) != 0:
        raise RuntimeError(f"N={n}: mass/k = {mass_over_k}, expected {expected}")
    return {
        "c_N": 1.0,
        "a_N_plus_log_V0": float(a_const),
        "a_N_plus_log_V0_exact": str(a_const),
        "mass_over_k": float(mass_over_k),
        "mass_over_k_exact": str(mass_over_k),
    }


def main():
    root = pathlib.Path(__file__).resolve().parent.parent
    out = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else root / "data" / "bubble_constants.json"
    digest = hashlib.sha256(pathlib.Path(__file__).read_bytes()).hexdigest()
    entries = []
    for n in DIMENSIONS:
        values = derive(n)
        for family in FAMILIES:
            entries.append({"N": n, "gauge_family": family, **values, "derivation_hash": digest})
    table = {
        "version": 1,
        "ansatz": "u = -N log(1 + c_N (lam F0(x - x0))^(N/(N-1))) + N log lam + a_N, "
                  "a_N = a_N_plus_log_V0 - log V0",
        "entries": entries,
    }
    out.write_text(json.dumps(table, indent=2) + "\n")
    print(f"wrote {len(entries)} entries to {out}")


if __name__ == "__main__":
    main()
