"""The field h = 2g - f: evaluation, derivatives, sign conditions, level sets.

h is assembled from the period engine as h = R * (K/D); all derivative
formulas reuse the cached jump constants:

    h   = R * B,           B = (1/2 pi i)[f_c + sum W c + sum Omega c] = K/D
    h'  = R' B + R B'
    h'' = R'' B + 2 R' B' + R B''
    h_x = R K_x / D,    h_t = R K_t / D        (branchpoints frozen)
    h_xz = R' K_x / D + R (K_x)' / D,  and likewise for t

Sign conditions are checked on the upper half of the contour (the lower half
is its Schwarz mirror, where Im h flips sign):

* main arcs: Im h < 0 on both sides at every probe station;
* comp arcs: Im h > 0 on at least one side at every station.

Margins smaller than the floor are reported as inconclusive rather than
passed or failed.

Phi = (h')^2 extends continuously across every arc (h' flips sign across a
main arc and matches across a comp arc), so the local vanishing order of
h - h(z0) is read off the winding number of Phi around z0: m = k/2 + 1,
half-integer exactly when z0 is a branchpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .geometry import RadicalEvaluator
from .period import PeriodEngine, _inv_R_derivs
from .quadrature import QuadConfig

__all__ = [
    "HField",
    "SignReport",
    "eval_h",
    "eval_hx",
    "eval_ht",
    "check_signs",
    "snap_central_arc",
    "trace_level_curves",
    "degeneracy_degree",
]

SIGN_MARGIN_FLOOR = 1e-9
_STATIONS = np.linspace(0.08, 0.94, 9)  # deliberately avoids the arc midpoint


@dataclass
class HField:
    engine: PeriodEngine

    @property
    def R(self) -> RadicalEvaluator:
        return self.engine.R

    def _R_derivs(self, z: complex) -> Tuple[complex, complex, complex]:
        z = np.array([complex(z)])
        Rv = complex(self.R.eval(z)[0])
        bp = self.R.branchpoints()
        S = complex(np.sum(1.0 / (z[0] - bp)))
        Sp = complex(-np.sum(1.0 / (z[0] - bp) ** 2))
        Rp = 0.5 * Rv * S
        Rpp = Rv * (0.25 * S * S + 0.5 * Sp)
        return Rv, Rp, Rpp

    def h(self, z: complex) -> complex:
        Rv = complex(self.R.eval(np.array([complex(z)]))[0])
        return Rv * self.engine.K_wform(z)

    def hp(self, z: complex) -> complex:
        Rv, Rp, _ = self._R_derivs(z)
        return Rp * self.engine.K_wform(z) + Rv * self.engine.K_wform(z, 1)

    def hpp(self, z: complex) -> complex:
        Rv, Rp, Rpp = self._R_derivs(z)
        return (
            Rpp * self.engine.K_wform(z)
            + 2.0 * Rp * self.engine.K_wform(z, 1)
            + Rv * self.engine.K_wform(z, 2)
        )

    def hx(self, z: complex) -> complex:
        Rv = complex(self.R.eval(np.array([complex(z)]))[0])
        return Rv * self.engine.Kx(z) / self.engine.D()

    def ht(self, z: complex) -> complex:
        Rv = complex(self.R.eval(np.array([complex(z)]))[0])
        return Rv * self.engine.Kt(z) / self.engine.D()

    def hxz(self, z: complex) -> complex:
        Rv, Rp, _ = self._R_derivs(z)
        D = self.engine.D()
        return Rp * self.engine.Kx(z) / D + Rv * self.engine.Kx(z, 1) / D

    def htz(self, z: complex) -> complex:
        Rv, Rp, _ = self._R_derivs(z)
        D = self.engine.D()
        return Rp * self.engine.Kt(z) / D + Rv * self.engine.Kt(z, 1) / D

    def phi(self, z: complex) -> complex:
        """(h')^2, continuous across all arcs."""
        return self.hp(z) ** 2


def eval_h(hf: HField, z: complex) -> complex:
    return hf.h(z)


def eval_hx(hf: HField, z: complex) -> complex:
    return hf.hx(z)


def eval_ht(hf: HField, z: complex) -> complex:
    return hf.ht(z)


# ---------------------------------------------------------------------------
# sign conditions


@dataclass
class SignReport:
    ok: bool
    inconclusive: bool
    arc_margins: Dict[str, float]
    worst_margin: float
    failures: List[Tuple[str, float, int, float]]  # (arc, station, side, Im h)

    def __bool__(self) -> bool:
        return self.ok and not self.inconclusive


def _upper_stations(arc, n_probe: int) -> np.ndarray:
    """Stations restricted to the upper-half part of the arc."""
    pts = np.array([arc.point_and_tangent(s)[0] for s in np.linspace(0, 1, 129)])
    if pts.imag.min() >= 0:
        return np.linspace(0.08, 0.94, n_probe)
    # central arc: find the fraction where it crosses the axis
    idx = np.where(pts.imag > 0)[0]
    s_lo = idx[0] / 128.0 if len(idx) else 1.0
    return np.linspace(s_lo + 0.05 * (1 - s_lo), 1 - 0.06 * (1 - s_lo), n_probe)


def check_signs(
    hf: HField,
    n_probe: int = 9,
    offset_frac: float = 0.5,
    floor: float = SIGN_MARGIN_FLOOR,
) -> SignReport:
    """Verify the arc inequalities on the upper half of the contour.

    Probes sit at +/- i * tau * (offset_frac * capsule radius) from each
    station.  main arcs need Im h < 0 on both sides; comp arcs need
    Im h > 0 on at least one side per station.
    """
    contour = hf.engine.contour
    margins: Dict[str, float] = {}
    failures = []
    inconclusive = False
    for arc in contour.all_arcs():
        if arc.index < 0:
            continue  # Schwarz mirror of an upper arc
        eps = offset_frac * contour.capsule_radius(arc.key)
        stations = _upper_stations(arc, n_probe)
        vals = []
        for s in stations:
            z, tau = arc.point_and_tangent(float(s))
            imp = (hf.h(z + 1j * tau * eps)).imag
            imm = (hf.h(z - 1j * tau * eps)).imag
            vals.append((float(s), imp, imm))
        if arc.kind == "main":
            margin = min(min(-imp, -imm) for _, imp, imm in vals)
            for s, imp, imm in vals:
                if imp >= 0:
                    failures.append((arc.key, s, +1, imp))
                if imm >= 0:
                    failures.append((arc.key, s, -1, imm))
        else:
            margin = min(max(imp, imm) for _, imp, imm in vals)
            for s, imp, imm in vals:
                if max(imp, imm) <= 0:
                    failures.append((arc.key, s, 0, max(imp, imm)))
        margins[arc.key] = margin
        if abs(margin) < floor:
            inconclusive = True
    worst = min(margins.values()) if margins else np.inf
    ok = all(m > 0 for m in margins.values()) and not inconclusive
    return SignReport(
        ok=ok,
        inconclusive=inconclusive,
        arc_margins=margins,
        worst_margin=worst,
        failures=failures,
    )


# ---------------------------------------------------------------------------
# level curves


def trace_level_curves(
    hf: HField,
    z0: complex,
    direction: complex = 1.0,
    step: float = 0.02,
    max_steps: int = 400,
    bound: float = 8.0,
    min_slope: float = 1e-9,
) -> np.ndarray:
    """Trace the Im h = Im h(z0) curve through z0 in one direction.

    Predictor along conj(h')/|h'| (signed to follow `direction` initially),
    one-dimensional Newton corrector transverse to the curve.  Stops at the
    domain bound, after max_steps, or where |h'| collapses (a degenerate
    point or branchpoint).
    """
    z0 = complex(z0)
    level = hf.h(z0).imag
    pts = [z0]
    hp = hf.hp(z0)
    if abs(hp) < min_slope:
        raise ValueError("h'(z0) ~ 0: start the trace off the degenerate point")
    t = np.conj(hp) / abs(hp)
    if (t * np.conj(direction)).real < 0:
        t = -t
    z = z0
    for _ in range(max_steps):
        zp = z + step * t
        # corrector: move along i*t to restore the level
        for _ in range(6):
            hpv = hf.hp(zp)
            if abs(hpv) < min_slope:
                return np.asarray(pts)
            err = hf.h(zp).imag - level
            # d/ds Im h(zp + i t s) = Re(conj(i t) * conj(hp))... use real FD-free step
            grad = (1j * t * hpv).imag
            if abs(grad) < min_slope:
                break
            zp = zp - 1j * t * (err / grad)
        z = zp
        pts.append(z)
        hpv = hf.hp(z)
        if abs(hpv) < min_slope or abs(z) > bound:
            break
        tnew = np.conj(hpv) / abs(hpv)
        if (tnew * np.conj(t)).real < 0:
            tnew = -tnew
        t = tnew
    return np.asarray(pts)


def snap_central_arc(
    hf: HField,
    n_interior: int = 14,
    start_radius_frac: float = 0.02,
    step_frac: float = 0.02,
):
    """Bend the central main arc onto the Im h = 0 curve through alpha_0.

    The seed chord [conj(a0), mu, a0] is only a homotopy-class placeholder;
    the band itself is the zero level curve of Im h ending at the
    branchpoints.  Offset probes measured from the chord land inside the
    lens between chord and band and misreport the arc inequality, so before
    running check_signs the central arc should be snapped onto the traced
    curve.  Returns a new BranchConfiguration carrying polyline controls
    for the central arc and the updated real crossing mu; other arcs are
    untouched.  Raises ValueError if the curve cannot be traced down to the
    real axis.
    """
    from dataclasses import replace as _dc_replace

    contour = hf.engine.contour
    config = contour.config
    scale = contour.scale()
    a0 = complex(config.upper_branchpoints[0])
    r0 = start_radius_frac * scale
    step = step_frac * scale

    # three Im h = 0 rays leave a simple branchpoint; bisect them out on a
    # small circle and keep the one aimed at the current real crossing.
    # The cut itself also produces a sign flip of Im h on the circle, but
    # that flip is a jump, not a zero, so it is rejected by requiring the
    # bisected point to carry a machine-small Im h.
    th = np.linspace(0.0, 2.0 * np.pi, 181)
    vals = np.array([hf.h(a0 + r0 * np.exp(1j * a)).imag for a in th])
    vscale = float(np.max(np.abs(vals)))
    rays = []
    for i in range(len(th) - 1):
        if vals[i] * vals[i + 1] < 0:
            lo, hi = th[i], th[i + 1]
            flo = vals[i]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                fm = hf.h(a0 + r0 * np.exp(1j * mid)).imag
                if flo * fm <= 0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            mid = 0.5 * (lo + hi)
            if abs(hf.h(a0 + r0 * np.exp(1j * mid)).imag) < 1e-7 * vscale:
                rays.append(mid)
    if not rays:
        raise ValueError("no Im h = 0 ray found around the branchpoint")
    aim = np.angle(complex(config.mu) - a0)
    theta = min(rays, key=lambda a: abs(np.angle(np.exp(1j * (a - aim)))))
    zstart = a0 + r0 * np.exp(1j * theta)

    pts = trace_level_curves(
        hf,
        zstart,
        direction=np.exp(1j * theta),
        step=step,
        max_steps=4000,
        bound=6.0 * scale,
    )
    # keep the descending run only: near a break the tracer can slip through
    # the low-|h'| valley and climb an unrelated zero curve afterwards
    low_idx = int(np.argmin(pts.imag))
    keep = pts[: low_idx + 1]
    keep = keep[keep.imag > 0.8 * step]
    if len(keep) < 2:
        raise ValueError("level-curve trace left the upper half-plane immediately")
    z_low = keep[-1]
    if z_low.imag > 0.45 * scale:
        raise ValueError("level-curve trace did not reach the real axis")

    # the curve meets the axis at a real critical point of h; the tracer is
    # unreliable through that point, so bisect the crossing out of Re h' and
    # bridge with a second trace climbing up from the foot.  Sign flips of
    # Re h' where the contour crosses the axis are jumps, not zeros, and are
    # discarded by the smallness test on |h'|.
    w = 0.6 * scale
    us = np.linspace(z_low.real - w, z_low.real + w, 241)
    sgn = [hf.hp(v).real for v in us]
    pscale = float(np.max(np.abs(sgn)))
    cands = []
    for i in range(len(us) - 1):
        if sgn[i] * sgn[i + 1] < 0:
            a, b = us[i], us[i + 1]
            fa = sgn[i]
            for _ in range(60):
                m_ = 0.5 * (a + b)
                fm = hf.hp(m_).real
                if fa * fm <= 0:
                    b = m_
                else:
                    a, fa = m_, fm
            m_ = 0.5 * (a + b)
            if abs(hf.hp(m_)) < 1e-7 * pscale:
                cands.append(m_)
    if not cands:
        raise ValueError("no real crossing of the band found near the trace end")

    # among candidate feet, take the one whose upward zero curve runs along
    # the descending trace, not merely touches it: near a break the tracer
    # can slip through the low-|h'| valley and stop nearer a different foot
    best = None
    for u in sorted(cands, key=lambda c: abs(c - z_low.real)):
        up = trace_level_curves(
            hf,
            complex(u, 2.0 * step),
            direction=1j,
            step=step,
            max_steps=len(keep) + 8,
            bound=6.0 * scale,
        )
        up = up[up.imag > 0.8 * step]
        ii, jj = 0, len(keep) - 1
        score = 0.0
        if len(up):
            dmat = np.abs(up[:, None] - keep[None, :])
            ii, jj = np.unravel_index(np.argmin(dmat), dmat.shape)
            score = float(np.mean(dmat.min(axis=1) < 3.0 * step))
        elif abs(complex(u) - z_low) < 3.0 * step:
            score = 1.0
        if best is None or score > best[0] + 0.1:
            best = (score, u, up, int(ii), int(jj))
        if score > 0.6:
            break
    if best is None or best[0] <= 0.2:
        raise ValueError("no real crossing of the band found near the trace end")
    _, u, up, ii, jj = best

    # resample the upper run mu -> a0 by arclength to n_interior nodes
    chain = np.concatenate([[complex(u)], up[:ii], keep[: jj + 1][::-1], [a0]])
    seg = np.abs(np.diff(chain))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    upper_nodes = []
    for frac in (np.arange(1, n_interior + 1)) / (n_interior + 1.0):
        target = frac * cum[-1]
        i = min(np.searchsorted(cum, target, side="right") - 1, len(seg) - 1)
        local = (target - cum[i]) / seg[i] if seg[i] > 0 else 0.0
        upper_nodes.append(complex(chain[i] + local * (chain[i + 1] - chain[i])))

    full = (
        tuple(np.conj(v) for v in reversed(upper_nodes))
        + (complex(u),)
        + tuple(upper_nodes)
    )
    mc = tuple((k, nd) for k, nd in config.main_controls if k != "m0")
    mc = mc + (("m0", full),)
    return _dc_replace(config, mu=float(u), main_controls=mc)


def degeneracy_degree(
    hf: HField,
    z0: complex,
    radius: float = 0.05,
    n_start: int = 128,
    max_doublings: int = 5,
) -> Tuple[int, float]:
    """(winding k of (h')^2 around z0, vanishing order m = k/2 + 1).

    Phase-tracks Phi on the circle, doubling the sampling until every
    consecutive phase step is below pi/2.
    """
    n = n_start
    for _ in range(max_doublings + 1):
        th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        vals = np.array([hf.phi(z0 + radius * np.exp(1j * a)) for a in th])
        if np.any(np.abs(vals) == 0):
            raise ValueError("Phi vanishes on the probe circle; change the radius")
        dphase = np.angle(np.concatenate([vals[1:], vals[:1]]) / vals)
        if np.max(np.abs(dphase)) < 0.5 * np.pi:
            total = float(np.sum(dphase)) / (2.0 * np.pi)
            k = int(np.round(total))
            if abs(total - k) > 0.05:
                raise ValueError(f"winding {total:.3f} is not close to an integer")
            return k, k / 2.0 + 1.0
        n *= 2
    raise ValueError("phase steps stayed too large; shrink the radius")
