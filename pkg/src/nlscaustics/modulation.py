"""Branchpoint (modulation) equations and continuation in the external parameters.

A configuration solves the modulation system at (x, t) when the regular part
of K vanishes at every upper branchpoint (conjugates follow by symmetry):

    K_regular(alpha_k; x, t) = 0,   k = 0..2n.

That is 2(2n+1) real equations in the 2(2n+1) real branchpoint coordinates;
we solve them with a damped Newton iteration whose Jacobian is built from
central differences (the residual is *not* holomorphic in the branchpoints
-- conjugate pairs move together -- so complex-step differentiation is not
available).

At genus 0 the single residual has a closed form built from the residues of
f0 (used for seeding and as an independent cross-check):

    K(alpha_0) = sum_p Res_p[f0] / ((p - alpha_0) R(p))  -  x
                 - 2 t (alpha_0 + Re alpha_0).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .scattering import ScatteringDatum, ExternalParams
from .geometry import BranchConfiguration, ContourSystem, RadicalEvaluator, build_contour
from .period import PeriodEngine
from .quadrature import QuadConfig

__all__ = [
    "ModulationState",
    "ConvergenceError",
    "ContinuationEvent",
    "EVENT_SIGN_MARGIN_SHRINKING",
    "EVENT_BREAK_SUSPECTED",
    "EVENT_BRANCHPOINT_COLLISION",
    "solve_modulation",
    "continue_path",
    "genus0_radical",
    "genus0_closed_K",
]

EVENT_SIGN_MARGIN_SHRINKING = "SIGN_MARGIN_SHRINKING"
EVENT_BREAK_SUSPECTED = "BREAK_SUSPECTED"
EVENT_BRANCHPOINT_COLLISION = "BRANCHPOINT_COLLISION"


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModulationState:
    config: BranchConfiguration
    datum: ScatteringDatum
    params: ExternalParams
    W: tuple
    Omega: tuple
    moment_residual: float
    newton_residual: float
    iterations: int

    def engine(self, quad: QuadConfig = QuadConfig()) -> PeriodEngine:
        contour = build_contour(self.config, keep_away=self.datum.poles())
        R = RadicalEvaluator(contour)
        return PeriodEngine(contour, R, self.datum, self.params, quad)


@dataclass(frozen=True)
class ContinuationEvent:
    kind: str
    step: int
    params: ExternalParams
    detail: str


# ---------------------------------------------------------------------------
# genus-0 closed form


def genus0_radical(alpha0: complex, z) -> np.ndarray:
    """R for the single cut [conj(alpha0), alpha0], branch R ~ -z at infinity."""
    a, b = np.conj(alpha0), complex(alpha0)
    z = np.asarray(z, dtype=complex)
    w = (2.0 * z - a - b) / (b - a)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = w * np.sqrt(1.0 - 1.0 / w**2)
    return -0.5 * (b - a) * s


def genus0_closed_K(datum: ScatteringDatum, params: ExternalParams, alpha0: complex) -> complex:
    alpha0 = complex(alpha0)
    poles = datum.poles()
    res = datum.residues()
    I0 = 0.0 + 0.0j
    for p, r in zip(poles, res):
        I0 += r / ((p - alpha0) * complex(genus0_radical(alpha0, p)))
    return I0 - params.x - 2.0 * params.t * (alpha0 + alpha0.real)


# ---------------------------------------------------------------------------
# Newton solve


def _pack(upper: Sequence[complex]) -> np.ndarray:
    u = np.asarray(upper, dtype=complex)
    return np.concatenate([u.real, u.imag])


def _unpack(vec: np.ndarray) -> Tuple[complex, ...]:
    m = len(vec) // 2
    return tuple(vec[:m] + 1j * vec[m:])


def _residual(
    config: BranchConfiguration,
    datum: ScatteringDatum,
    params: ExternalParams,
    quad: QuadConfig,
) -> Tuple[np.ndarray, PeriodEngine]:
    contour = build_contour(config, keep_away=datum.poles())
    R = RadicalEvaluator(contour)
    eng = PeriodEngine(contour, R, datum, params, quad)
    vals = [eng.K_regular(k) for k in range(2 * config.n + 1)]
    v = np.asarray(vals)
    return np.concatenate([v.real, v.imag]), eng


def solve_modulation(
    datum: ScatteringDatum,
    params: ExternalParams,
    initial: BranchConfiguration,
    quad: QuadConfig = QuadConfig(),
    tol: float = 1e-10,
    max_iter: int = 25,
    fd_step: float = 1e-6,
    verbose: bool = False,
) -> ModulationState:
    """Newton-solve the modulation system from the given starting configuration."""
    config = initial
    vec = _pack(config.upper_branchpoints)

    def make(v) -> BranchConfiguration:
        return replace(config, upper_branchpoints=_unpack(v), allow_collapsed=True)

    res, eng = _residual(make(vec), datum, params, quad)
    for it in range(max_iter):
        rn = float(np.max(np.abs(res)))
        if verbose:
            print(f"  newton iter {it}: |res| = {rn:.3e}")
        if rn <= tol:
            W, Om, mres = eng.moments()
            return ModulationState(
                config=make(vec),
                datum=datum,
                params=params,
                W=tuple(W),
                Omega=tuple(Om),
                moment_residual=mres,
                newton_residual=rn,
                iterations=it,
            )
        m = len(vec)
        J = np.zeros((m, m))
        for i in range(m):
            st = fd_step * max(1.0, abs(vec[i]))
            vp = vec.copy()
            vp[i] += st
            vm = vec.copy()
            vm[i] -= st
            rp, _ = _residual(make(vp), datum, params, quad)
            rm, _ = _residual(make(vm), datum, params, quad)
            J[:, i] = (rp - rm) / (2.0 * st)
        try:
            step = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(J, -res, rcond=None)
        lam = 1.0
        accepted = False
        for _ in range(8):
            cand = vec + lam * step
            half = len(cand) // 2
            if np.any(cand[half:] <= 0):
                lam *= 0.5
                continue
            try:
                cres, ceng = _residual(make(cand), datum, params, quad)
            except Exception:
                lam *= 0.5
                continue
            if np.max(np.abs(cres)) < rn * (1.0 - 1e-4 * lam) or np.max(np.abs(cres)) <= tol:
                vec, res, eng = cand, cres, ceng
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            raise ConvergenceError(
                f"newton stalled at |res| = {rn:.3e} after {it + 1} iterations"
            )
    raise ConvergenceError(f"no convergence in {max_iter} iterations; |res| = {rn:.3e}")


# ---------------------------------------------------------------------------
# continuation


def continue_path(
    state: ModulationState,
    target: ExternalParams,
    steps: int = 10,
    quad: QuadConfig = QuadConfig(),
    tol: float = 1e-10,
    collision_tol: float = 5e-3,
    margin_suspect: float = 1e-4,
    sign_probe: Optional[Callable[[ModulationState], float]] = None,
    max_bisect: int = 4,
) -> Tuple[List[ModulationState], List[ContinuationEvent]]:
    """March the solved configuration along the segment to `target` in (x, t).

    sign_probe, when given, maps a state to its worst sign margin; shrinking
    margins below `margin_suspect` raise BREAK_SUSPECTED events.  Steps that
    fail to converge are bisected up to max_bisect times.
    """
    x0, t0 = state.params.x, state.params.t
    x1, t1 = target.x, target.t
    states = [state]
    events: List[ContinuationEvent] = []
    margin_prev = sign_probe(state) if sign_probe else None
    s_done = 0.0
    ds = 1.0 / steps
    step_idx = 0
    while s_done < 1.0 - 1e-12:
        s_try = min(1.0, s_done + ds)
        bis = 0
        while True:
            pa = ExternalParams(
                x0 + (x1 - x0) * s_try, t0 + (t1 - t0) * s_try
            )
            try:
                nxt = solve_modulation(
                    state.datum, pa, states[-1].config, quad=quad, tol=tol
                )
                break
            except ConvergenceError:
                bis += 1
                if bis > max_bisect:
                    raise
                s_try = s_done + (s_try - s_done) / 2.0
        s_done = s_try
        step_idx += 1
        states.append(nxt)
        ub = np.asarray(nxt.config.upper_branchpoints)
        seps = [abs(a - b) for i, a in enumerate(ub) for b in ub[i + 1 :]]
        seps += [2.0 * a.imag for a in ub]
        if seps and min(seps) < collision_tol:
            events.append(
                ContinuationEvent(
                    EVENT_BRANCHPOINT_COLLISION,
                    step_idx,
                    pa,
                    f"min branchpoint separation {min(seps):.3e}",
                )
            )
        if sign_probe is not None:
            margin = sign_probe(nxt)
            if margin_prev is not None and margin < 0.5 * margin_prev:
                events.append(
                    ContinuationEvent(
                        EVENT_SIGN_MARGIN_SHRINKING,
                        step_idx,
                        pa,
                        f"margin {margin:.3e} (was {margin_prev:.3e})",
                    )
                )
            if margin < margin_suspect:
                events.append(
                    ContinuationEvent(
                        EVENT_BREAK_SUSPECTED, step_idx, pa, f"margin {margin:.3e}"
                    )
                )
            margin_prev = margin
    return states, events
