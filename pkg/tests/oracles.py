"""Independent reference implementations used to freeze expected values.

Everything here is deliberately primitive: closed-form radicals for a single
straight cut, dense Gauss panels for line integrals, continuity-tracked
square roots, and plain central differences.  The package must agree with
these to the stated tolerances; frozen literals pasted into the test modules
were produced by these routines, which are kept runnable so the numbers can
be regenerated.
"""

from __future__ import annotations

import numpy as np

_GAUSS_CACHE = {}


def _gauss(n):
    if n not in _GAUSS_CACHE:
        _GAUSS_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GAUSS_CACHE[n]


def ref_segment_integral(fn, a, b, panels=64, order=12):
    """Composite Gauss-Legendre integral of fn along the segment [a, b]."""
    x, w = _gauss(order)
    ts = np.linspace(0.0, 1.0, panels + 1)
    total = 0.0 + 0.0j
    for t0, t1 in zip(ts[:-1], ts[1:]):
        mid, half = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
        tt = mid + half * x
        zz = a + (b - a) * tt
        total += np.sum(w * fn(zz)) * half * (b - a)
    return total


def ref_polyline_integral(fn, nodes, panels=64, order=12):
    """Composite Gauss-Legendre integral along a polyline."""
    return sum(
        ref_segment_integral(fn, p, q, panels, order)
        for p, q in zip(nodes[:-1], nodes[1:])
    )


def ref_circle_integral(fn, center, radius, n=4096):
    """Trapezoid integral of fn around a full circle (counter-clockwise)."""
    th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    zeta = center + radius * np.exp(1j * th)
    dzeta = 1j * radius * np.exp(1j * th)
    return np.mean(fn(zeta) * dzeta) * 2.0 * np.pi


def genus0_radical(alpha0):
    """Closed-form radical for the single straight cut [conj a0, a0].

    Branch cut exactly on the chord, R(z) ~ -z at infinity.  Returns a
    vectorized callable.
    """
    a, b = np.conj(complex(alpha0)), complex(alpha0)

    def R(z):
        z = np.asarray(z, dtype=complex)
        w = (2.0 * z - a - b) / (b - a)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = w * np.sqrt(1.0 - 1.0 / w**2)
        return -0.5 * (b - a) * s

    return R


def tracked_radical(branchpoints, anchor=None, steps=4000):
    """sqrt(prod (z - b_j)) by continuity along a straight path from anchor.

    The branch at the anchor is fixed to ~ -z**m (m = half the degree); the
    value at z then depends on the tracking path's homotopy class, so use
    this only for probe points whose straight path stays far from the cuts.
    """
    bps = np.asarray(branchpoints, dtype=complex)
    m = len(bps) // 2
    scale = float(np.max(np.abs(bps))) + 1.0
    if anchor is None:
        anchor = 40.0 * scale * (1.0 + 0.37j)

    def poly(z):
        out = np.ones_like(np.asarray(z, dtype=complex))
        for b in bps:
            out = out * (z - b)
        return out

    def R(z):
        z = complex(z)
        path = anchor + (z - anchor) * np.linspace(0.0, 1.0, steps)
        w = -(anchor**m) * np.sqrt(complex(poly(anchor)) / anchor ** (2 * m))
        for p in path[1:]:
            cand = np.sqrt(complex(poly(p)))
            w = cand if abs(cand - w) <= abs(-cand - w) else -cand
        return w

    return R


def fd4(fun, s, h):
    """Fourth-order central difference of fun at real parameter s."""
    return (
        -fun(s + 2 * h) + 8 * fun(s + h) - 8 * fun(s - h) + fun(s - 2 * h)
    ) / (12.0 * h)


def fd2(fun, s, h):
    """Second-order central difference."""
    return (fun(s + h) - fun(s - h)) / (2.0 * h)


def resolve_hfield(datum, x, t, seed_alpha0, quad):
    """Re-solve the genus-0 modulation problem at (x, t) and return HField.

    Used by the finite-difference derivative oracles: displacing x or t
    moves the branchpoints, so every sample re-solves before evaluating.
    """
    from nlscaustics.geometry import BranchConfiguration
    from nlscaustics.gfunction import HField
    from nlscaustics.modulation import solve_modulation
    from nlscaustics.scattering import ExternalParams

    st = solve_modulation(
        datum,
        ExternalParams(x, t),
        BranchConfiguration(0, (complex(seed_alpha0),), float(np.real(seed_alpha0))),
        quad,
    )
    return HField(st.engine(quad)), st
