"""Breaking points of the deformation: location, tracing, genus transitions.

A breaking point is a spectral point z0 where the validity of a genus-N
configuration fails through a topology change of the zero level set of
Im h: two zero curves cross, which forces

    Re h'(z0) = 0,   Im h'(z0) = 0,   Im h(z0) = 0.

Together with one scalar constraint pinning (x, t) to a path in parameter
space this is a square system for (Re z0, Im z0, x, t).  The locator
re-solves the modulation system at every trial (x, t), so the located
point is a breaking point of the modulated family rather than of a frozen
field.

All field evaluations here use the chord-scaffold determination of h.
The defining equations are invariant under the sheet swap h -> 2W - h
that occurs between a chord and the true band it shadows, so the located
point does not depend on the determination; recorded derivative values
(h'', Im h_x, Im h_t) are consistent with finite differences of the same
determination, which is what the Jacobian cross-checks compare against.

A breaking point is *generic* when h''(z0) != 0 and (Im h_x, Im h_t) at
the point is nonzero; the product |h''|^2 * Im h_t is the Jacobian of the
defining system with respect to (Re z0, Im z0, t) and controls both curve
tracing and the genus transition.  Degenerate points (h'' = 0, e.g. the
feet-merger family that real-symmetric data develop on the real axis) are
reported via DegenerateBreakError and are never traversed automatically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .geometry import (
    BranchConfiguration,
    PairNotCollapsedError,
    plant_pair,
    remove_pair,
)
from .gfunction import HField, SignReport, check_signs, degeneracy_degree, snap_central_arc
from .modulation import ConvergenceError, ModulationState, solve_modulation
from .quadrature import QuadConfig
from .scattering import ExternalParams, ScatteringDatum

__all__ = [
    "KIND_COMP",
    "KIND_MAIN",
    "KIND_COLLISION",
    "BreakLocationError",
    "DegenerateBreakError",
    "NewbornArcSignError",
    "LinearPath",
    "BreakingRecord",
    "BreakSample",
    "BreakingCurve",
    "TransitionResult",
    "ConvergenceReport",
    "DegenerateReport",
    "locate_break",
    "trace_breaking_curve",
    "genus_transition",
    "verify_theorem31",
    "classify_degenerate",
    "newborn_tangent",
    "mixed_ratio",
    "mixed_ratio_closed_form",
    "phase_profile",
    "phase_slope_centered",
]

KIND_COMP = "complementary-arc break"
KIND_MAIN = "main-arc break"
KIND_COLLISION = "branchpoint-collision"


class BreakLocationError(RuntimeError):
    """The break locator failed to converge to an admissible point."""


class DegenerateBreakError(BreakLocationError):
    """Converged to a point whose defining Jacobian is (numerically) singular."""

    def __init__(self, msg: str, z0=None, xb=None, tb=None, jacobian=None):
        super().__init__(msg)
        self.z0 = z0
        self.xb = xb
        self.tb = tb
        self.jacobian = jacobian


class NewbornArcSignError(RuntimeError):
    """The just-planted main arc failed its sign check after a raise transition.

    This indicates a wrong newborn tangent or a step past a point that is
    not actually a generic break -- a bug in the caller's data, not a
    recoverable numerical condition.
    """


@dataclass(frozen=True)
class LinearPath:
    """Straight segment in the (x, t) parameter plane."""

    p0: ExternalParams
    p1: ExternalParams

    def constraint(self, x: float, t: float) -> float:
        dx, dt = self.p1.x - self.p0.x, self.p1.t - self.p0.t
        nrm = math.hypot(dx, dt)
        if nrm == 0.0:
            raise ValueError("degenerate path: endpoints coincide")
        return ((x - self.p0.x) * dt - (t - self.p0.t) * dx) / nrm

    def direction(self) -> Tuple[float, float]:
        dx, dt = self.p1.x - self.p0.x, self.p1.t - self.p0.t
        nrm = math.hypot(dx, dt)
        return (dx / nrm, dt / nrm)


@dataclass(frozen=True)
class BreakingRecord:
    """A located breaking point of a genus-N modulated family.

    jacobian_value = (|h''(z0)|^2, Im h_t(z0), product); the product is the
    Jacobian determinant of (Re h', Im h', Im h) with respect to
    (Re z0, Im z0, t) at fixed x.  incoming_derivative is the derivative of
    Im h(z0; x, t) along the unit direction pointing from the break back
    toward the last valid parameters (strictly negative for an approach
    from the valid side).
    """

    z0: complex
    xb: float
    tb: float
    degree_m: float
    kind: str
    hpp: complex
    im_hx: float
    im_ht: float
    jacobian_value: Tuple[float, float, float]
    residual: float
    incoming_derivative: float
    config: BranchConfiguration
    datum: ScatteringDatum
    path_direction: Optional[Tuple[float, float]]

    @property
    def genus(self) -> int:
        return self.config.genus

    @property
    def generic(self) -> bool:
        return (
            abs(self.hpp) > 0.0
            and (abs(self.im_hx) + abs(self.im_ht)) > 0.0
            and self.degree_m == 2.0
        )


@dataclass(frozen=True)
class BreakSample:
    x: float
    t: float
    z0: complex
    jac_product: float


@dataclass(frozen=True)
class BreakingCurve:
    samples: Tuple[BreakSample, ...]
    orientation: int
    genus_low: int
    genus_high: int
    stop_reason: str
    arclength: float

    def as_array(self) -> np.ndarray:
        """Columns (x, t, Re z0, Im z0, jac_product)."""
        return np.array(
            [[s.x, s.t, s.z0.real, s.z0.imag, s.jac_product] for s in self.samples]
        )


@dataclass(frozen=True)
class TransitionResult:
    state: ModulationState
    report: Optional[SignReport]
    newborn_pair: Optional[Tuple[complex, complex]]
    removed_pair: Optional[Tuple[complex, complex]]
    tangent_angle: Optional[float]

    @property
    def genus(self) -> int:
        return self.state.config.genus


@dataclass(frozen=True)
class ConvergenceReport:
    """Collapse of the planted genus-(N+2) field onto the genus-N field."""

    deltas: Tuple[float, ...]
    err_x: Tuple[float, ...]
    err_t: Tuple[float, ...]
    rate_x: float
    rate_t: float
    monotone: bool
    grid: Tuple[complex, ...]
    limit_residual: float


@dataclass(frozen=True)
class DegenerateReport:
    degree_k: int
    degree_m: float
    jacobian_value: Tuple[float, float, float]
    generic: bool
    mixed_ratio_residual: Optional[float]
    semicircle_max: Optional[float]
    phase_slope_residual: Optional[float]


# ----------------------------------------------------------------------
# field cache: one modulation solve per distinct (x, t)


def _strip_controls(config: BranchConfiguration) -> BranchConfiguration:
    """Drop control polylines: they are tied to one field and go stale in (x,t)."""
    return replace(config, main_controls=(), comp_controls=())


class _FieldCache:
    def __init__(
        self,
        datum: ScatteringDatum,
        seed: BranchConfiguration,
        params: ExternalParams,
        quad: QuadConfig,
        tol: float,
    ):
        self.datum = datum
        self.quad = quad
        self.tol = tol
        self._solved: Dict[Tuple[float, float], Tuple[ModulationState, HField]] = {}
        self._seeds: List[Tuple[float, float, BranchConfiguration]] = [
            (params.x, params.t, _strip_controls(seed))
        ]

    def solve(self, x: float, t: float) -> Tuple[ModulationState, HField]:
        key = (round(float(x), 12), round(float(t), 12))
        hit = self._solved.get(key)
        if hit is not None:
            return hit
        sx, st, seed = min(self._seeds, key=lambda s: abs(s[0] - x) + abs(s[1] - t))
        par = ExternalParams(float(x), float(t))
        try:
            state = solve_modulation(self.datum, par, seed, self.quad, tol=self.tol)
        except ConvergenceError:
            state = solve_modulation(self.datum, par, seed, self.quad, tol=10 * self.tol)
        hf = HField(state.engine(self.quad))
        self._solved[key] = (state, hf)
        self._seeds.append((float(x), float(t), _strip_controls(state.config)))
        return state, hf


def _as_path(path, params: ExternalParams):
    """Accept LinearPath, a target ExternalParams, or a bare callable c(x, t)."""
    if isinstance(path, LinearPath):
        return path.constraint, path.direction()
    if isinstance(path, ExternalParams):
        lp = LinearPath(params, path)
        return lp.constraint, lp.direction()
    if callable(path):
        return path, None
    raise TypeError(f"unsupported path constraint: {path!r}")


def _break_equations(hf: HField, z: complex) -> Tuple[float, float, float]:
    hp = hf.hp(z)
    return (hp.real, hp.imag, hf.h(z).imag)


def _classify_kind(hf: HField, config: BranchConfiguration, z0: complex, scale: float) -> str:
    bps = np.array(config.upper_branchpoints)
    bps = np.concatenate([bps, np.conj(bps)])
    if np.min(np.abs(bps - z0)) < 0.02 * scale:
        return KIND_COLLISION
    contour = hf.engine.contour
    for arc in contour.main_arcs:
        d = float(np.min(arc.distance(np.array([z0]))))
        if d < 0.6 * contour.loop_offsets[arc.key]:
            return KIND_MAIN
    return KIND_COMP


def _safe_degree(hf: HField, z0: complex, scale: float, poles: Sequence[complex]) -> Tuple[int, float]:
    clearance = [0.06 * scale]
    clearance += [0.6 * abs(z0 - p) for p in poles]
    clearance += [0.6 * abs(z0 - b) for b in hf.R.branchpoints() if abs(z0 - b) > 1e-12]
    radius = max(min(clearance), 1e-4 * scale)
    try:
        return degeneracy_degree(hf, z0, radius=radius)
    except ValueError:
        return (-1, float("nan"))


def locate_break(
    state: ModulationState,
    z_guess: complex,
    path_constraint,
    quad: QuadConfig = QuadConfig(),
    tol: float = 1e-9,
    max_iter: int = 40,
    fd_step: float = 1e-6,
    degenerate_tol: float = 1e-6,
    v_floor_frac: float = 2e-3,
    mod_tol: float = 1e-11,
) -> BreakingRecord:
    """Newton-solve the breaking system along a parameter path.

    Unknowns are (Re z0, Im z0, x, t); equations are Re h' = Im h' = Im h = 0
    plus the path constraint.  Raises BreakLocationError on non-convergence
    and DegenerateBreakError when the converged point has a numerically
    singular defining Jacobian (|h''|^2 * |Im h_t| below degenerate_tol) or
    has fallen onto the real axis, where Schwarz symmetry forces h'' = 0.
    """
    cache = _FieldCache(state.datum, state.config, state.params, quad, mod_tol)
    cons, direction = _as_path(path_constraint, state.params)
    scale = state.engine(quad).contour.scale()
    v_floor = v_floor_frac * scale

    # pre-stage: refine the guess to the nearby saddle of the *initial* field
    # (complex Newton on the analytic h'), which has a far wider basin than
    # the coupled four-dimensional system started from a rough guess.
    _, hf0 = cache.solve(state.params.x, state.params.t)
    z = complex(z_guess)
    for _ in range(30):
        hp = hf0.hp(z)
        if abs(hp) < 1e-12 * max(1.0, scale):
            break
        dz = -hp / hf0.hpp(z)
        if abs(dz) > 0.15 * scale:
            dz *= 0.15 * scale / abs(dz)
        if (z + dz).imag <= 0.5 * v_floor:
            break
        z = z + dz
    if z.imag > v_floor and abs(hf0.hp(z)) < abs(hf0.hp(complex(z_guess))):
        z_guess = z

    w = np.array([z_guess.real, z_guess.imag, state.params.x, state.params.t])

    def F(wv: np.ndarray) -> np.ndarray:
        st, hf = cache.solve(wv[2], wv[3])
        e1, e2, e3 = _break_equations(hf, complex(wv[0], wv[1]))
        return np.array([e1, e2, e3, cons(wv[2], wv[3])])

    steps = np.array(
        [
            fd_step * max(1.0, scale),
            fd_step * max(1.0, scale),
            fd_step * max(1.0, abs(w[2])),
            fd_step * max(1.0, abs(w[3])),
        ]
    )

    fw = F(w)
    nrm = float(np.max(np.abs(fw)))
    converged = False
    for _ in range(max_iter):
        if nrm <= tol * max(1.0, scale):
            converged = True
            break
        J = np.empty((4, 4))
        for j in range(4):
            wp, wm = w.copy(), w.copy()
            wp[j] += steps[j]
            wm[j] -= steps[j]
            J[:, j] = (F(wp) - F(wm)) / (2.0 * steps[j])
        try:
            dw = np.linalg.solve(J, -fw)
        except np.linalg.LinAlgError as exc:
            raise BreakLocationError(f"singular Newton matrix at w={w}") from exc
        # clamp the spectral step; (x, t) moves are left to the path constraint
        zstep = math.hypot(dw[0], dw[1])
        if zstep > 0.2 * scale:
            dw *= 0.2 * scale / zstep
        lam = 1.0
        for _ in range(6):
            w_try = w + lam * dw
            if w_try[1] <= 0.0:
                lam *= 0.5
                continue
            f_try = F(w_try)
            n_try = float(np.max(np.abs(f_try)))
            if n_try < nrm or lam <= 1.0 / 32.0:
                w, fw, nrm = w_try, f_try, n_try
                break
            lam *= 0.5
        else:
            raise BreakLocationError(
                f"line search stalled at residual {nrm:.3e} (w={w})"
            )
    if not converged and nrm > tol * max(1.0, scale):
        raise BreakLocationError(
            f"no convergence after {max_iter} iterations; residual {nrm:.3e}"
        )

    z0 = complex(w[0], w[1])
    xb, tb = float(w[2]), float(w[3])
    st, hf = cache.solve(xb, tb)
    if z0.imag < v_floor:
        raise DegenerateBreakError(
            f"break point collapsed onto the real axis (Im z0 = {z0.imag:.3e}); "
            "real-symmetric fields are degenerate there",
            z0=z0,
            xb=xb,
            tb=tb,
        )
    hpp = hf.hpp(z0)
    im_hx = hf.hx(z0).imag
    im_ht = hf.ht(z0).imag
    j1 = abs(hpp) ** 2
    jac = (j1, im_ht, j1 * im_ht)
    if abs(jac[2]) < degenerate_tol:
        raise DegenerateBreakError(
            f"defining Jacobian |h''|^2 * Im h_t = {jac[2]:.3e} below "
            f"threshold {degenerate_tol:.1e}",
            z0=z0,
            xb=xb,
            tb=tb,
            jacobian=jac,
        )
    _, degree_m = _safe_degree(hf, z0, scale, st.datum.poles())
    kind = _classify_kind(hf, st.config, z0, scale)
    if direction is not None:
        incoming = -(im_hx * direction[0] + im_ht * direction[1])
    else:
        incoming = float("nan")
    return BreakingRecord(
        z0=z0,
        xb=xb,
        tb=tb,
        degree_m=degree_m,
        kind=kind,
        hpp=hpp,
        im_hx=im_hx,
        im_ht=im_ht,
        jacobian_value=jac,
        residual=nrm,
        incoming_derivative=incoming,
        config=_strip_controls(st.config),
        datum=st.datum,
        path_direction=direction,
    )


# ----------------------------------------------------------------------
# breaking-curve tracing


def trace_breaking_curve(
    record: BreakingRecord,
    arclength: float,
    direction: int = +1,
    quad: QuadConfig = QuadConfig(),
    ds: Optional[float] = None,
    tol: float = 1e-9,
    max_samples: int = 400,
    degenerate_tol: float = 1e-6,
    v_floor_frac: float = 2e-3,
    mod_tol: float = 1e-11,
) -> BreakingCurve:
    """Predictor-corrector continuation of the breaking point in (x, t).

    The three defining equations in four unknowns (Re z0, Im z0, x, t) cut a
    curve; each step predicts along the Jacobian null direction and corrects
    in the hyperplane orthogonal to it, so the parametrization switches
    automatically between x and t as the curve turns.  Arclength is measured
    in the (x, t) plane.  Stops on the requested arclength, a vanishing
    Jacobian product (hit-degenerate-point), step underflow, or max_samples.
    """
    par0 = ExternalParams(record.xb, record.tb)
    seed = ModulationState(
        config=record.config,
        datum=record.datum,
        params=par0,
        W=(),
        Omega=(),
        moment_residual=0.0,
        newton_residual=0.0,
        iterations=0,
    )
    cache = _FieldCache(record.datum, record.config, par0, quad, mod_tol)
    scale = seed.engine(quad).contour.scale()
    v_floor = v_floor_frac * scale
    pscale = max(1.0, abs(record.xb), abs(record.tb))
    if ds is None:
        ds = 0.02 * pscale
    ds_min = 1e-5 * ds

    def F3(wv: np.ndarray) -> np.ndarray:
        st, hf = cache.solve(wv[2], wv[3])
        return np.array(_break_equations(hf, complex(wv[0], wv[1])))

    steps = np.array([1e-6 * max(1.0, scale)] * 2 + [1e-6 * pscale] * 2)

    def jac3(wv: np.ndarray) -> np.ndarray:
        J = np.empty((3, 4))
        for j in range(4):
            wp, wm = wv.copy(), wv.copy()
            wp[j] += steps[j]
            wm[j] -= steps[j]
            J[:, j] = (F3(wp) - F3(wm)) / (2.0 * steps[j])
        return J

    def tangent(J: np.ndarray, prev: Optional[np.ndarray]) -> np.ndarray:
        _, _, vt = np.linalg.svd(J)
        T = vt[-1]
        xt = math.hypot(T[2], T[3])
        if xt < 1e-12:
            raise BreakLocationError("breaking curve is vertical in (x, t); cannot advance")
        T = T / xt  # unit speed in the (x, t) plane
        if prev is not None:
            if float(np.dot(T, prev)) < 0.0:
                T = -T
        else:
            # canonical sign: increasing t, falling back to increasing x
            if abs(T[3]) >= 1e-3:
                if T[3] < 0:
                    T = -T
            elif T[2] < 0:
                T = -T
            T = direction * T
        return T

    def product_at(wv: np.ndarray) -> float:
        _, hf = cache.solve(wv[2], wv[3])
        z = complex(wv[0], wv[1])
        return abs(hf.hpp(z)) ** 2 * hf.ht(z).imag

    w = np.array([record.z0.real, record.z0.imag, record.xb, record.tb])
    samples = [BreakSample(record.xb, record.tb, record.z0, record.jacobian_value[2])]
    T = tangent(jac3(w), None)
    travelled = 0.0
    stop = "arclength"
    while travelled < arclength and len(samples) < max_samples:
        step = min(ds, arclength - travelled)
        advanced = False
        while step >= ds_min:
            w_pred = w + step * T
            w_cor = w_pred.copy()
            ok = False
            for _ in range(12):
                fv = F3(w_cor)
                pin = float(np.dot(T, w_cor - w_pred))
                G = np.concatenate([fv, [pin]])
                if float(np.max(np.abs(G))) <= tol * max(1.0, scale):
                    ok = True
                    break
                J4 = np.vstack([jac3(w_cor), T])
                try:
                    dw = np.linalg.solve(J4, -G)
                except np.linalg.LinAlgError:
                    break
                w_cor = w_cor + dw
                if w_cor[1] <= 0.0:
                    break
            if ok and w_cor[1] > 0.0:
                w_new = w_cor
                advanced = True
                break
            step *= 0.5
        if not advanced:
            stop = "step-underflow"
            break
        if w_new[1] < v_floor:
            stop = "hit-degenerate-point"
            break
        prod = product_at(w_new)
        if abs(prod) < degenerate_tol:
            stop = "hit-degenerate-point"
            samples.append(BreakSample(w_new[2], w_new[3], complex(w_new[0], w_new[1]), prod))
            break
        travelled += math.hypot(w_new[2] - w[2], w_new[3] - w[3])
        w = w_new
        samples.append(BreakSample(w[2], w[3], complex(w[0], w[1]), prod))
        T = tangent(jac3(w), T)
        if len(samples) >= max_samples:
            stop = "max-samples"
    return BreakingCurve(
        samples=tuple(samples),
        orientation=int(direction),
        genus_low=record.config.genus,
        genus_high=record.config.genus + 2,
        stop_reason=stop,
        arclength=travelled,
    )


# ----------------------------------------------------------------------
# genus transitions


def newborn_tangent(record: BreakingRecord) -> float:
    """Tangent angle of the arc born at a generic break, in [0, pi).

    Locally Im h ~ phi + (rho^2/2) |h''| sin(arg h'' + 2 theta); the newborn
    band bisects the two sectors where the quadratic term is negative.
    """
    theta = -0.5 * math.atan2(record.hpp.imag, record.hpp.real) - 0.25 * math.pi
    return theta % math.pi


def _ordered_pair(z0: complex, delta: float, theta: float, anchor: complex) -> Tuple[complex, complex]:
    b1 = z0 - delta * np.exp(1j * theta)
    b2 = z0 + delta * np.exp(1j * theta)
    if abs(b2 - anchor) < abs(b1 - anchor):
        b1, b2 = b2, b1
    return complex(b1), complex(b2)


def _collapsed_pair_index(config: BranchConfiguration) -> int:
    """Index j of the main-arc pair (j, j+1) with the smallest separation."""
    ub = config.upper_branchpoints
    best, best_j = np.inf, -1
    for j in range(1, len(ub) - 1, 2):
        sep = abs(ub[j] - ub[j + 1])
        if sep < best:
            best, best_j = sep, j
    if best_j < 0:
        raise ValueError("configuration has no removable pair")
    return best_j


def genus_transition(
    state: ModulationState,
    record: BreakingRecord,
    direction: str = "raise",
    quad: QuadConfig = QuadConfig(),
    params: Optional[ExternalParams] = None,
    offset_frac: float = 1e-3,
    step_frac: float = 2e-3,
    tangent_angle: Optional[float] = None,
    collapse_tol: Optional[float] = None,
    tol: float = 1e-10,
    check: bool = True,
) -> TransitionResult:
    """Cross a generic break: plant (raise) or remove (lower) a branch pair.

    raise: plants a coincident pair at record.z0, separates it by
    offset_frac * scale along the newborn tangent, steps (x, t) past the
    break along the recorded path direction (ramped so the pair unfolds
    gradually), and re-solves at genus N+2.  When check=True the newborn
    main arc must show Im h < 0 on both sides at every probe station;
    failure raises NewbornArcSignError.

    lower: removes the most nearly collapsed main-arc pair and re-solves at
    genus N-2 at the given (or current) parameters.
    """
    scale = state.engine(quad).contour.scale()
    if direction == "raise":
        if not record.generic:
            raise DegenerateBreakError(
                f"refusing to traverse a non-generic break (m = {record.degree_m}, "
                f"jacobian {record.jacobian_value[2]:.3e})",
                z0=record.z0,
                xb=record.xb,
                tb=record.tb,
                jacobian=record.jacobian_value,
            )
        if params is None:
            if record.path_direction is None:
                raise ValueError("need either explicit params or a recorded path direction")
            pscale = max(1.0, abs(record.xb), abs(record.tb))
            sx, st_ = record.path_direction
            params = ExternalParams(
                record.xb + step_frac * pscale * sx,
                record.tb + step_frac * pscale * st_,
            )
        theta = newborn_tangent(record) if tangent_angle is None else tangent_angle
        delta = offset_frac * scale
        base = _strip_controls(record.config)
        planted = plant_pair(base, record.z0)
        b1, b2 = _ordered_pair(record.z0, delta, theta, base.upper_branchpoints[-1])
        cfg = replace(
            planted,
            upper_branchpoints=planted.upper_branchpoints[:-2] + (b1, b2),
        )
        # unfold gradually: the pair separation grows like sqrt of the step
        new_state = None
        for frac in (0.01, 0.03, 0.09, 0.27, 0.81, 1.0):
            par = ExternalParams(
                record.xb + frac * (params.x - record.xb),
                record.tb + frac * (params.t - record.tb),
            )
            new_state = solve_modulation(state.datum, par, cfg, quad, tol=tol)
            cfg = replace(new_state.config, allow_collapsed=True)
        ub = new_state.config.upper_branchpoints
        pair = (ub[-2], ub[-1])
        for b in pair:
            if abs(b - record.z0) > 0.3 * scale:
                raise BreakLocationError(
                    f"newborn branchpoint {b} wandered {abs(b - record.z0):.3f} "
                    f"from the break point {record.z0}"
                )
        report = None
        if check:
            hf = HField(new_state.engine(quad))
            try:
                snapped = snap_central_arc(hf)
                hf = HField(
                    replace(new_state, config=snapped).engine(quad)
                )
            except ValueError:
                pass
            report = check_signs(hf)
            key = f"m+{new_state.config.n}"
            newborn_failures = [f for f in report.failures if f[0] == key]
            margin = report.arc_margins.get(key, np.nan)
            if newborn_failures or not np.isfinite(margin) or margin <= 0.0:
                raise NewbornArcSignError(
                    f"newborn arc {key} failed its sign check "
                    f"(margin {margin:.3e}, {len(newborn_failures)} failing probes); "
                    "wrong tangent or non-generic break"
                )
        return TransitionResult(
            state=new_state,
            report=report,
            newborn_pair=pair,
            removed_pair=None,
            tangent_angle=theta,
        )

    if direction == "lower":
        if params is None:
            params = state.params
        if collapse_tol is None:
            collapse_tol = 5e-3 * scale
        j = _collapsed_pair_index(state.config)
        ub = state.config.upper_branchpoints
        pair = (ub[j], ub[j + 1])
        reduced = remove_pair(_strip_controls(state.config), j, collapse_tol=collapse_tol)
        new_state = solve_modulation(state.datum, params, reduced, quad, tol=tol)
        report = None
        if check:
            hf = HField(new_state.engine(quad))
            try:
                snapped = snap_central_arc(hf)
                hf = HField(replace(new_state, config=snapped).engine(quad))
            except ValueError:
                pass
            report = check_signs(hf)
        return TransitionResult(
            state=new_state,
            report=report,
            newborn_pair=None,
            removed_pair=pair,
            tangent_angle=None,
        )

    raise ValueError(f"direction must be 'raise' or 'lower', got {direction!r}")


# ----------------------------------------------------------------------
# collapse-continuation verification


def verify_theorem31(
    record: BreakingRecord,
    delta_sequence: Sequence[float] = (1e-2, 1e-3, 1e-4),
    quad: QuadConfig = QuadConfig(),
    npoints: int = 8,
    radius_frac: float = 2.5,
    mod_tol: float = 1e-11,
) -> ConvergenceReport:
    """Collapse rate of the planted genus-(N+2) field onto the genus-N field.

    At the frozen break parameters (xb, tb) a coincident pair separated by
    delta is planted at z0 along the newborn tangent; only the linear
    period system is re-solved (no modulation step), and the x- and
    t-derivative fields are compared on a fixed ring of off-contour points.
    The error must decay monotonically, at a rate of one power of delta up
    to logarithmic corrections.
    """
    par = ExternalParams(record.xb, record.tb)
    base = solve_modulation(
        record.datum, par, _strip_controls(record.config), quad, tol=mod_tol
    )
    hf0 = HField(base.engine(quad))
    contour = base.engine(quad).contour
    scale = contour.scale()
    feats = np.array(base.config.upper_branchpoints)
    center = complex(np.mean(np.concatenate([feats, np.conj(feats)])))
    radius = radius_frac * scale
    grid = tuple(
        center + radius * np.exp(2j * np.pi * (k + 0.37) / npoints) for k in range(npoints)
    )
    theta = newborn_tangent(record)
    errs_x, errs_t = [], []
    for delta in delta_sequence:
        b1, b2 = _ordered_pair(
            record.z0, 0.5 * delta, theta, base.config.upper_branchpoints[-1]
        )
        planted = plant_pair(_strip_controls(base.config), record.z0)
        cfg = replace(planted, upper_branchpoints=planted.upper_branchpoints[:-2] + (b1, b2))
        hf2 = HField(
            ModulationState(
                config=cfg,
                datum=record.datum,
                params=par,
                W=(),
                Omega=(),
                moment_residual=0.0,
                newton_residual=0.0,
                iterations=0,
            ).engine(quad)
        )
        ex = max(abs(hf2.hx(z) - hf0.hx(z)) for z in grid)
        et = max(abs(hf2.ht(z) - hf0.ht(z)) for z in grid)
        errs_x.append(float(ex))
        errs_t.append(float(et))
    ld = np.log(np.asarray(delta_sequence, dtype=float))
    rate_x = float(np.polyfit(ld, np.log(errs_x), 1)[0])
    rate_t = float(np.polyfit(ld, np.log(errs_t), 1)[0])
    monotone = all(a > b for a, b in zip(errs_x, errs_x[1:])) and all(
        a > b for a, b in zip(errs_t, errs_t[1:])
    )
    limit_residual = float("nan")
    if base.config.genus == 0:
        a0 = base.config.upper_branchpoints[0]
        from .modulation import genus0_radical

        limit_residual = max(
            abs(hf0.hx(z) + genus0_radical(a0, z)) for z in grid
        )
    return ConvergenceReport(
        deltas=tuple(float(d) for d in delta_sequence),
        err_x=tuple(errs_x),
        err_t=tuple(errs_t),
        rate_x=rate_x,
        rate_t=rate_t,
        monotone=monotone,
        grid=grid,
        limit_residual=limit_residual,
    )


# ----------------------------------------------------------------------
# degenerate-break analytics (genus-0 closed forms)


def mixed_ratio(hf: HField, z: complex) -> float:
    """Im(h_tz / h_xz) -- the mixed-derivative invariant of the field."""
    return float((hf.htz(z) / hf.hxz(z)).imag)


def mixed_ratio_closed_form(alpha0: complex, z: complex) -> float:
    """Genus-0 value of Im(h_tz / h_xz) for the band ending at alpha0 = a + ib.

    With w = z - a:  Im(h_tz / h_xz) = 2 Im(z) (2 - b^2 / |w|^2), which
    vanishes identically on the circle |z - a| = b / sqrt(2): the locus on
    which breaking points of the genus-0 family are degenerate in (x, t).
    """
    a, b = alpha0.real, alpha0.imag
    w2 = abs(z - a) ** 2
    return 2.0 * z.imag * (2.0 - b * b / w2)


def phase_profile(hf: HField, alpha0: complex, theta: float, step: float = 0.02) -> float:
    """Continuous phase theta - 3 arg(conj(h_xz) h_tz) along z = a + b e^{i s}.

    Anchored to zero at s = 0 and tracked continuously (no branch jumps) up
    to s = theta.  For centered genus-0 data (Re alpha0 = 0) the derivative
    is -8 sin^2 s / (8 cos^2 s + 1); see phase_slope_centered.
    """
    a, b = alpha0.real, alpha0.imag
    n = max(8, int(math.ceil(abs(theta) / step)))
    ss = np.linspace(0.0, theta, n + 1)
    vals = np.array(
        [np.conj(hf.hxz(a + b * np.exp(1j * s))) * hf.htz(a + b * np.exp(1j * s)) for s in ss]
    )
    darg = np.angle(vals[1:] / vals[:-1])
    return float(theta - 3.0 * np.sum(darg))


def phase_slope_centered(theta: float) -> float:
    """d/dtheta of phase_profile for a centered band (Re alpha0 = 0, any b)."""
    s, c = math.sin(theta), math.cos(theta)
    return -8.0 * s * s / (8.0 * c * c + 1.0)


def classify_degenerate(
    state: ModulationState,
    z0: complex,
    quad: QuadConfig = QuadConfig(),
    n_ring: int = 8,
) -> DegenerateReport:
    """Degeneracy diagnostics at a candidate breaking point.

    Reports the winding degree of (h')^2 and the defining-Jacobian product.
    For genus-0 states the closed-form mixed-ratio identity, its vanishing
    on the semicircle |z - a| = b/sqrt(2), and (for centered bands) the
    angular phase-slope law are checked against the numerical field.
    """
    hf = HField(state.engine(quad))
    scale = state.engine(quad).contour.scale()
    k, m = _safe_degree(hf, z0, scale, state.datum.poles())
    hpp = hf.hpp(z0)
    j1 = abs(hpp) ** 2
    im_ht = hf.ht(z0).imag
    jac = (j1, im_ht, j1 * im_ht)
    generic = (m == 2.0) and abs(jac[2]) > 1e-10
    ratio_res = semi_max = slope_res = None
    if state.config.genus == 0:
        a0 = state.config.upper_branchpoints[0]
        a, b = a0.real, a0.imag
        ring = [
            a + 0.55 * b * np.exp(1j * (0.2 + 2.6 * k_ / n_ring)) for k_ in range(n_ring)
        ] + [a + 1.7 * b * np.exp(1j * (0.3 + 2.4 * k_ / n_ring)) for k_ in range(n_ring)]
        ratio_res = max(
            abs(mixed_ratio(hf, z) - mixed_ratio_closed_form(a0, z)) for z in ring
        )
        semi = [
            a + (b / math.sqrt(2.0)) * np.exp(1j * (0.15 + 2.8 * k_ / n_ring))
            for k_ in range(n_ring)
        ]
        semi_max = max(abs(mixed_ratio(hf, z)) for z in semi)
        if abs(a) <= 1e-8 * max(1.0, b):
            d = 1e-5
            slope_res = max(
                abs(
                    (phase_profile(hf, a0, th + d) - phase_profile(hf, a0, th - d)) / (2 * d)
                    - phase_slope_centered(th)
                )
                for th in (0.3, 0.8, 1.2, 2.0)
            )
    return DegenerateReport(
        degree_k=k,
        degree_m=m,
        jacobian_value=jac,
        generic=generic,
        mixed_ratio_residual=ratio_res,
        semicircle_max=semi_max,
        phase_slope_residual=slope_res,
    )
