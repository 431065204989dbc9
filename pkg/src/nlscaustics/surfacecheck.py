"""Riemann-surface diagnostics: cycle periods and bilinear identities.

A genus-N configuration (N = 2n) carries 2n+1 branch cuts: the central cut
through the real axis plus n Schwarz-mirrored pairs.  On the hyperelliptic
surface w^2 = prod (z - a_k)(z - conj a_k) a homology basis is realized in
the cut plane as

    alpha cycle over m+j / m-j : the loop hugging that cut (clockwise), so
        its period is  -2 * int_{cut} phi / R_+ dz;
    beta cycle over c+j / c-j  : enters the forward sheet along the comp
        arc and returns on the backward sheet, so its period is
        2 * int_{arc} phi / R dz.

The central cut carries no alpha cycle: cutting the surface along every arc
except m0 leaves a simply connected domain, which is where the Abel paths
used on the right-hand sides below must run.  Paths here are built to avoid
every arc (the freedom to cross m0 is never needed because the probe points
are ours to choose); PathCrossedCutError reports a failed route.

Bilinear identities, with A/B the alpha/beta periods of the holomorphic
omega and A'/B' those of the meromorphic eta.  Both follow from integrating
a primitive against the other differential around the dissected surface,
and the differential whose primitive is taken comes first in the pairing:

    third kind:   sum_k s_k (A_k B'_k - A'_k B_k) = 2 pi i sum_j c_j
                  int_{P0}^{p_j} omega   (primitive of omega, evaluated at
                  the poles p_j of eta with residues c_j)
    second kind:  sum_k s_k (A'_k B_k - A_k B'_k) = 2 pi i sum_P
                  Res_P(u omega), u = int eta   (primitive of eta)

where s_k = +1 on the upper-half pairs and -1 on their mirror images: the
mirror cycles are anti-conformal reflections, and reflection reverses
intersection numbers, so each mirrored canonical pair enters the
intersection form with the opposite orientation.  The sign pattern was
pinned by requiring the holomorphic-holomorphic relation (which must vanish
identically) to vanish numerically on a reference genus-2 configuration; it
is frozen here.

Third-kind path conventions: paths run on the forward sheet; the
backward-sheet poles contribute through the involution, which flips the
sign of the integral when P0 is a fixed point.  The basepoint P0 is the
outermost upper branchpoint: from there the routed paths never thread
between arc complexes, so their homotopy class is constant.  P0 sits inside
the loop hugging the outermost cut, and every path out of it crosses that
loop exactly once, contributing one beta period of omega; the Cauchy form
absorbs it as the constant written in check_bilinear_third_kind.  In the
symmetric form the pole coefficients sum to zero, so the crossing terms
cancel and no constant appears.

Second-kind residues are evaluated by spectral quadrature on a circle
around each pole; the undetermined constant in u drops out because omega
has no residue, and no paths enter, so no homotopy bookkeeping applies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .geometry import BranchConfiguration, ContourSystem, RadicalEvaluator, build_contour
from .period import _inv_R_derivs
from .quadrature import (
    QuadConfig,
    arc_elements,
    arc_integral_comp,
    arc_integral_plus,
    integrate_elements,
)

__all__ = [
    "DifferentialSpec",
    "PathCrossedCutError",
    "holomorphic",
    "third_kind_cauchy",
    "third_kind_symmetric",
    "second_kind_cauchy",
    "periods",
    "abel_integral",
    "check_bilinear_third_kind",
    "check_bilinear_second_kind",
    "abel_nontriviality",
]



class PathCrossedCutError(RuntimeError):
    """No cut-avoiding Abel path could be routed between the endpoints."""


@dataclass(frozen=True)
class DifferentialSpec:
    """A meromorphic differential phi(zeta) dzeta / R(zeta) on the surface.

    kind: "holomorphic" (phi = zeta^k), "third-cauchy" (simple poles at the
    forward/backward lifts of z), "third-symmetric" (simple poles at the
    lifts of z and conj z, residues +1/-1 on the forward sheet), or
    "second-cauchy" (double pole, zero residue, at the forward lift of z).
    """

    kind: str
    k: int = 0
    z: complex = 0j

    def label(self) -> str:
        if self.kind == "holomorphic":
            return f"holomorphic[k={self.k}]"
        return f"{self.kind}[z={self.z:.6g}]"


def holomorphic(k: int) -> DifferentialSpec:
    if k < 0:
        raise ValueError("holomorphic power k must be >= 0")
    return DifferentialSpec("holomorphic", k=k)


def third_kind_cauchy(z: complex) -> DifferentialSpec:
    return DifferentialSpec("third-cauchy", z=complex(z))


def third_kind_symmetric(z: complex) -> DifferentialSpec:
    return DifferentialSpec("third-symmetric", z=complex(z))


def second_kind_cauchy(z: complex) -> DifferentialSpec:
    return DifferentialSpec("second-cauchy", z=complex(z))


def _as_radical(config) -> RadicalEvaluator:
    if isinstance(config, RadicalEvaluator):
        return config
    if isinstance(config, ContourSystem):
        return RadicalEvaluator(config)
    if isinstance(config, BranchConfiguration):
        return RadicalEvaluator(build_contour(config))
    raise TypeError(f"expected configuration/contour/radical, got {type(config)!r}")


def _kernel(spec: DifferentialSpec, R: RadicalEvaluator) -> Callable:
    """phi(zeta) such that the differential is phi(zeta)/R(zeta) dzeta."""
    if spec.kind == "holomorphic":
        kmax = R.config.n * 2 - 1
        if spec.k > kmax:
            raise ValueError(
                f"zeta^{spec.k}/R is not holomorphic at infinity on a genus-{2 * R.config.n} surface"
            )
        k = spec.k
        return lambda zeta: zeta**k if k else np.ones_like(np.asarray(zeta, dtype=complex))
    if spec.kind == "third-cauchy":
        z = spec.z
        return lambda zeta: 1.0 / (zeta - z)
    if spec.kind == "third-symmetric":
        z = spec.z
        Rz = complex(R(z))
        return lambda zeta: Rz / (zeta - z) - np.conj(Rz) / (zeta - np.conj(z))
    if spec.kind == "second-cauchy":
        z = spec.z
        iR, diR, _ = _inv_R_derivs(R, z)
        Rz = 1.0 / iR
        dRz = -diR * Rz * Rz
        return lambda zeta: dRz / (zeta - z) + Rz / (zeta - z) ** 2
    raise ValueError(f"unknown differential kind {spec.kind!r}")


def _cycle_labels(n: int) -> List[Tuple[str, str]]:
    """(alpha_key, beta_key) per canonical pair, +j before -j."""
    out = []
    for j in range(1, n + 1):
        out.append((f"m+{j}", f"c+{j}"))
        out.append((f"m-{j}", f"c-{j}"))
    return out


def periods(
    spec: DifferentialSpec,
    config,
    quad: QuadConfig = QuadConfig(),
) -> np.ndarray:
    """Period vector of the differential over the 2N homology cycles.

    Ordered by canonical pair: [alpha(+1), alpha(-1), ..., alpha(+n),
    alpha(-n), beta(+1), beta(-1), ...].  Genus 0 has no cycles: returns an
    empty vector.
    """
    R = _as_radical(config)
    n = R.config.n
    if n == 0:
        return np.zeros(0, dtype=complex)
    phi = _kernel(spec, R)
    pairs = _cycle_labels(n)
    alphas = [-2.0 * arc_integral_plus(R, mkey, phi, quad) for mkey, _ in pairs]
    betas = [2.0 * arc_integral_comp(R, ckey, phi, quad) for _, ckey in pairs]
    return np.array(alphas + betas, dtype=complex)


# ---------------------------------------------------------------------------
# Abel paths and integrals


def _segments_cross(a0: complex, a1: complex, b0: complex, b1: complex) -> bool:
    """Proper open-segment intersection test (shared endpoints ignored)."""

    def orient(p, q, r):
        return np.sign(((q - p) * np.conj(r - p)).imag)

    for shared in (a0, a1):
        if abs(shared - b0) < 1e-12 or abs(shared - b1) < 1e-12:
            return False
    d1, d2 = orient(b0, b1, a0), orient(b0, b1, a1)
    d3, d4 = orient(a0, a1, b0), orient(a0, a1, b1)
    return d1 * d2 < 0 and d3 * d4 < 0


def _path_clear(contour: ContourSystem, poly: Sequence[complex]) -> bool:
    segs = list(zip(poly[:-1], poly[1:]))
    for arc in contour.all_arcs():
        nd = arc.nodes
        for c0, c1 in zip(nd[:-1], nd[1:]):
            for p0, p1 in segs:
                if _segments_cross(p0, p1, complex(c0), complex(c1)):
                    return False
    return True


def _abel_path(contour: ContourSystem, z0: complex, z1: complex) -> List[complex]:
    """Polyline from z0 to z1 avoiding every arc, or PathCrossedCutError."""
    if _path_clear(contour, [z0, z1]):
        return [z0, z1]
    scale = contour.scale()
    mid = 0.5 * (z0 + z1)
    knees = [
        mid + off
        for off in (
            0.6j * scale,
            -0.6j * scale,
            0.6 * scale,
            -0.6 * scale,
            1.2j * scale,
            (0.8 + 0.8j) * scale,
            (-0.8 + 0.8j) * scale,
            (0.8 - 0.8j) * scale,
            (-0.8 - 0.8j) * scale,
            2.2j * scale,
            -2.2j * scale,
        )
    ]
    for knee in knees:
        if _path_clear(contour, [z0, knee, z1]):
            return [z0, knee, z1]
    for k1 in knees:
        for k2 in knees:
            if k1 is k2:
                continue
            if _path_clear(contour, [z0, k1, k2, z1]):
                return [z0, k1, k2, z1]
    raise PathCrossedCutError(f"could not route an Abel path {z0:.4g} -> {z1:.4g}")


def abel_integral(
    omega: DifferentialSpec,
    config,
    z0: complex,
    z1: complex,
    quad: QuadConfig = QuadConfig(),
) -> complex:
    """int_{z0}^{z1} omega along a cut-avoiding forward-sheet path.

    A branchpoint endpoint is handled with the sqrt substitution (1/R is
    integrable there).
    """
    R = _as_radical(config)
    contour = R.contour
    phi = _kernel(omega, R)
    bps = set(np.round(R.branchpoints(), 12))
    poly = _abel_path(contour, complex(z0), complex(z1))
    els = arc_elements(
        poly,
        sqrt_start=complex(np.round(poly[0], 12)) in bps,
        sqrt_end=complex(np.round(poly[-1], 12)) in bps,
    )

    def fn(zeta, tan):
        return phi(zeta) / R.eval(zeta)

    val, _err = integrate_elements(fn, els, quad)
    return val


# ---------------------------------------------------------------------------
# bilinear identities


def _pairing_lhs(per_eta: np.ndarray, per_omega: np.ndarray, n: int) -> complex:
    N = 2 * n
    a_eta, b_eta = per_eta[:N], per_eta[N:]
    a_om, b_om = per_omega[:N], per_omega[N:]
    signs = np.tile([1.0, -1.0], n)  # mirror pairs carry reversed orientation
    return complex(np.sum(signs * (a_eta * b_om - a_om * b_eta)))


def _basepoint(R: RadicalEvaluator) -> complex:
    """Outermost upper branchpoint: Abel paths from here have fixed class."""
    return complex(R.config.upper_branchpoints[-1])


def check_bilinear_third_kind(
    eta_spec: DifferentialSpec,
    omega_spec: DifferentialSpec,
    config,
    quad: QuadConfig = QuadConfig(),
) -> float:
    """Relative residual of the third-kind bilinear identity."""
    if omega_spec.kind != "holomorphic":
        raise ValueError("omega must be holomorphic")
    if eta_spec.kind not in ("third-cauchy", "third-symmetric"):
        raise ValueError("eta must be a third-kind spec")
    R = _as_radical(config)
    n = R.config.n
    if n < 1:
        raise ValueError("bilinear identities need genus >= 2")
    per_eta = periods(eta_spec, R, quad)
    per_om = periods(omega_spec, R, quad)
    lhs = _pairing_lhs(per_om, per_eta, n)  # primitive of omega: omega first
    p0 = _basepoint(R)
    if eta_spec.kind == "third-cauchy":
        # residues 1/R(z) at the forward lift, -1/R(z) at the backward lift;
        # the constant beta period is the once-crossed outer loop (docstring)
        I = abel_integral(omega_spec, R, p0, eta_spec.z, quad)
        b_outer = per_om[2 * n + 2 * (n - 1)]
        rhs = 2j * np.pi * (2.0 * I + b_outer) / complex(R(eta_spec.z))
    else:
        # residues +1 at z, -1 at conj z (forward sheet), mirrored behind;
        # crossing constants cancel because the coefficients sum to zero
        Iz = abel_integral(omega_spec, R, p0, eta_spec.z, quad)
        Izb = abel_integral(omega_spec, R, p0, np.conj(eta_spec.z), quad)
        rhs = 2j * np.pi * 2.0 * (Iz - Izb)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-12)


def _residue_u_omega(
    eta_phi: Callable,
    omega_phi: Callable,
    R: RadicalEvaluator,
    z: complex,
    radius: float,
    npts: int = 512,
) -> complex:
    """Res_{z}(u omega) by circle quadrature, u = int eta up to a constant.

    The constant is immaterial: omega is holomorphic, so const * Res(omega)
    vanishes.  u is recovered spectrally: eta restricted to the circle is
    smooth and periodic, so its Fourier antiderivative converges at machine
    precision, and the residue is the mean of u * omega over the circle.
    """
    th = np.linspace(0.0, 2.0 * np.pi, npts, endpoint=False)
    zeta = z + radius * np.exp(1j * th)
    dzeta = 1j * radius * np.exp(1j * th)  # d zeta / d theta
    Rv = R.eval(zeta)
    ev = eta_phi(zeta) / Rv * dzeta
    wv = omega_phi(zeta) / Rv * dzeta
    coeffs = np.fft.fft(ev) / npts
    closure = coeffs[0] * 2.0 * np.pi  # loop integral of eta
    if abs(closure) > 1e-6 * (1.0 + np.max(np.abs(ev))):
        raise ValueError(
            f"eta is not second kind at {z:.6g}: loop integral {closure:.3e} != 0"
        )
    m = np.fft.fftfreq(npts, d=1.0 / npts)  # integer mode numbers
    anti = np.zeros_like(coeffs)
    nonzero = m != 0
    anti[nonzero] = coeffs[nonzero] / (1j * m[nonzero])
    u = np.fft.ifft(anti) * npts + coeffs[0] * th
    # Res = (1/2pi i) int_0^{2pi} u(theta) wv(theta) dtheta = mean(u wv)/i
    return complex(np.mean(u * wv) / 1j)


def check_bilinear_second_kind(
    eta_spec: DifferentialSpec,
    omega_spec: DifferentialSpec,
    config,
    quad: QuadConfig = QuadConfig(),
    fit_radius_frac: float = 1e-2,
) -> float:
    """Relative residual of the second-kind bilinear identity."""
    if omega_spec.kind != "holomorphic":
        raise ValueError("omega must be holomorphic")
    if eta_spec.kind != "second-cauchy":
        raise ValueError("eta must be a second-kind spec")
    R = _as_radical(config)
    n = R.config.n
    if n < 1:
        raise ValueError("bilinear identities need genus >= 2")
    per_eta = periods(eta_spec, R, quad)
    per_om = periods(omega_spec, R, quad)
    lhs = _pairing_lhs(per_eta, per_om, n)
    scale = R.contour.scale()
    res = _residue_u_omega(
        _kernel(eta_spec, R),
        _kernel(omega_spec, R),
        R,
        eta_spec.z,
        fit_radius_frac * scale,
    )
    # the backward-sheet pole contributes the same residue (both factors of
    # u omega flip sign with R, and the constant ambiguity again drops out)
    rhs = 2j * np.pi * 2.0 * res
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-12)


def abel_nontriviality(
    config,
    P0: complex,
    P1: complex,
    quad: QuadConfig = QuadConfig(),
    threshold: float = 1e-8,
) -> bool:
    """True iff some basis holomorphic differential separates P0 and P1.

    Checks max_k |int_{P0}^{P1} zeta^k dzeta / R| over the holomorphic basis
    against threshold * scale; distinct points on a genus >= 2 surface must
    be separated by some basis element.
    """
    R = _as_radical(config)
    n = R.config.n
    if n < 1:
        raise ValueError("nontriviality check needs genus >= 2")
    if abs(complex(P0) - complex(P1)) == 0.0:
        return False
    scale = R.contour.scale()
    best = 0.0
    for k in range(2 * n):
        val = abs(abel_integral(holomorphic(k), R, complex(P0), complex(P1), quad))
        best = max(best, val)
    return best > threshold * scale
