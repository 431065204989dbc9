"""Scattering input f0 and the full phase f(z; x, t) = f0(z) - z*x - 2*t*z**2.

f0 is restricted to real-coefficient rational functions numerator/denominator
(strictly proper or polynomial), which makes Schwarz symmetry
f0(conj z) = conj(f0(z)) automatic.  A registration hook accepts arbitrary
analytic callables for experimentation; the bundled workflows only use the
rational kind.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "ScatteringDatum",
    "ExternalParams",
    "SingularityError",
    "eval_f0",
    "eval_df0",
    "eval_f",
    "eval_df",
    "rational",
]

# Minimum allowed distance from an evaluation point to a pole of f0.
POLE_CLEARANCE = 1e-12


class SingularityError(ValueError):
    """Raised when f0 is evaluated at (or too close to) one of its poles."""

    def __init__(self, z, pole):
        self.z = z
        self.pole = pole
        super().__init__(f"evaluation at singularity: z={z} hits pole {pole}")


def _as_real_coeffs(c: Sequence[float], name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(c, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d real coefficient list")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} coefficients must be finite")
    return arr


@dataclass(frozen=True)
class ScatteringDatum:
    """Rational scattering input f0 = num(z)/den(z), ascending-degree coefficients.

    Real coefficients enforce Schwarz symmetry constructively; the pole list is
    computed once and is closed under conjugation by construction.  For the
    determinantal machinery downstream we additionally require strict
    properness (deg num < deg den) unless the denominator is the constant 1
    (polynomial f0), so that f0 -> 0 at infinity.
    """

    f0_kind: str = "rational"
    numerator: tuple = (0.0,)
    denominator: tuple = (1.0,)
    semiclassical_scale: Optional[float] = None
    user_fn: Optional[Callable] = field(default=None, compare=False)
    user_dfn: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.f0_kind not in ("polynomial", "rational", "user"):
            raise ValueError(f"unknown f0_kind {self.f0_kind!r}")
        if self.semiclassical_scale is not None and not self.semiclassical_scale > 0:
            raise ValueError("semiclassical_scale must be positive when given")
        if self.f0_kind == "user":
            if self.user_fn is None:
                raise ValueError("user kind requires user_fn")
            return
        num = _as_real_coeffs(self.numerator, "numerator")
        den = _as_real_coeffs(self.denominator, "denominator")
        object.__setattr__(self, "numerator", tuple(num))
        object.__setattr__(self, "denominator", tuple(den))
        # trim trailing zero coefficients for degree bookkeeping
        ndeg = _degree(num)
        ddeg = _degree(den)
        if ddeg < 0:
            raise ValueError("denominator must not be identically zero")
        if self.f0_kind == "polynomial" and ddeg != 0:
            raise ValueError("polynomial kind must have constant denominator")
        if self.f0_kind == "rational" and ddeg > 0 and ndeg >= ddeg:
            raise ValueError(
                f"rational f0 must be strictly proper (deg num {ndeg} >= deg den {ddeg})"
            )

    # ---- pole data -------------------------------------------------------

    def poles(self) -> np.ndarray:
        """Poles of f0 (simple, off the real axis enforced by validate_poles)."""
        if self.f0_kind == "user":
            return np.array([], dtype=complex)
        den = np.asarray(self.denominator, dtype=float)
        if _degree(den) == 0:
            return np.array([], dtype=complex)
        # np.roots expects descending order
        return np.roots(den[::-1][: len(den) - _leading_zeros(den)])

    def residues(self) -> np.ndarray:
        """Residues of f0 at its (simple) poles, aligned with poles()."""
        ps = self.poles()
        if ps.size == 0:
            return np.array([], dtype=complex)
        dden = _polyder(np.asarray(self.denominator, dtype=float))
        return _polyval(np.asarray(self.numerator), ps) / _polyval(dden, ps)

    def validate_poles(self, min_pairwise: float = 1e-10, min_imag: float = 1e-12):
        """Require simple poles off the real axis (needed by residue formulas)."""
        ps = self.poles()
        if ps.size == 0:
            return
        if np.min(np.abs(ps.imag)) < min_imag:
            raise ValueError("f0 has a pole on (or too near) the real axis")
        if ps.size > 1:
            d = np.abs(ps[:, None] - ps[None, :]) + np.eye(ps.size)
            if d.min() < min_pairwise:
                raise ValueError("f0 poles must be simple (pairwise separated)")


def _degree(c: np.ndarray) -> int:
    nz = np.nonzero(c)[0]
    return int(nz[-1]) if nz.size else -1


def _leading_zeros(c: np.ndarray) -> int:
    return len(c) - 1 - _degree(c)


def _polyval(c: np.ndarray, z):
    """Ascending-coefficient Horner evaluation, vectorized over z."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros_like(z)
    for ck in np.asarray(c)[::-1]:
        out = out * z + ck
    return out


def _polyder(c: np.ndarray) -> np.ndarray:
    if len(c) <= 1:
        return np.zeros(1)
    return np.asarray(c[1:]) * np.arange(1, len(c))


@dataclass(frozen=True)
class ExternalParams:
    """External parameters (x, t) of the phase."""

    x: float
    t: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.t)):
            raise ValueError("x and t must be finite")


def rational(numerator, denominator, eps: Optional[float] = None) -> ScatteringDatum:
    """Convenience constructor for a rational datum."""
    return ScatteringDatum(
        f0_kind="rational",
        numerator=tuple(np.atleast_1d(numerator).astype(float)),
        denominator=tuple(np.atleast_1d(denominator).astype(float)),
        semiclassical_scale=eps,
    )


def _check_clearance(datum: ScatteringDatum, z):
    ps = datum.poles()
    if ps.size == 0:
        return
    z = np.asarray(z, dtype=complex)
    d = np.abs(z[..., None] - ps)
    if d.min() < POLE_CLEARANCE:
        k = np.unravel_index(np.argmin(d), d.shape)
        raise SingularityError(z[k[:-1]] if z.ndim else complex(z), ps[k[-1]])


def eval_f0(datum: ScatteringDatum, z):
    """f0(z), vectorized; raises SingularityError at poles."""
    z = np.asarray(z, dtype=complex)
    if datum.f0_kind == "user":
        return datum.user_fn(z)
    _check_clearance(datum, z)
    num = _polyval(np.asarray(datum.numerator), z)
    den = _polyval(np.asarray(datum.denominator), z)
    return num / den


def eval_df0(datum: ScatteringDatum, z):
    """f0'(z), vectorized."""
    z = np.asarray(z, dtype=complex)
    if datum.f0_kind == "user":
        if datum.user_dfn is None:
            raise ValueError("user datum has no derivative callable")
        return datum.user_dfn(z)
    _check_clearance(datum, z)
    num = np.asarray(datum.numerator)
    den = np.asarray(datum.denominator)
    n = _polyval(num, z)
    d = _polyval(den, z)
    dn = _polyval(_polyder(num), z)
    dd = _polyval(_polyder(den), z)
    return (dn * d - n * dd) / d**2


def eval_f(datum: ScatteringDatum, p: ExternalParams, z):
    """Full phase f(z; x, t) = f0(z) - z*x - 2*t*z**2."""
    z = np.asarray(z, dtype=complex)
    return eval_f0(datum, z) - z * p.x - 2.0 * p.t * z**2


def eval_df(datum: ScatteringDatum, p: ExternalParams, z):
    """d/dz of the full phase."""
    z = np.asarray(z, dtype=complex)
    return eval_df0(datum, z) - p.x - 4.0 * p.t * z
