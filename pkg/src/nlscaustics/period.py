"""Period/moment tables and the determinantal kernel K.

For a genus-2n configuration the jump constants (W_j on main arcs, Omega_j
on comp arcs) are fixed by 2n moment conditions

    F_m + sum_j W_j A_m^(j) + sum_j Omega_j B_m^(j) = 0,   m = 0..2n-1,

where A/B are *paired* loop moments (upper arc + mirrored lower arc):

    A_m^(j) = 2 int_{m+j} z^m / R_+ + 2 int_{m-j} z^m / R_+
    B_m^(j) = 2 int_{c+j} z^m / R   + 2 int_{c-j} z^m / R
    F_m     = sum over all 2n+1 cuts of 2 int z^m f / R_+

P is the 2n x 2n matrix with rows (A^(1)..A^(n), B^(1)..B^(n)) and columns
m = 0..2n-1; D = det P (D := 1 at n = 0) and is real for symmetric data.

The field h = 2g - f is h = R K / D with

    K(z) = (1/2 pi i) det [[P, c(z)], [F, f_c(z)]]
    c_j(z) = paired loop Cauchy moments, kernel 1/((zeta - z) R)
    f_c(z) = sum_cuts 2 int f /((zeta - z) R_+)  -  2 pi i f(z)/R(z)

x- and t-derivatives at frozen branchpoints reduce to single determinants:

    K_x = det[P cols 0..2n-2 | c(z)]
    K_t = -2 det[P cols 0..2n-3, col 2n-1 | c(z)] + 2 e1 K_x,  e1 = sum Re(alpha)

(genus 0: K_x = -1, K_t = -2 (z + e1)).

Near-arc evaluation reroutes the affected entries through capsule loops with
explicit residue corrections; at a branchpoint the same rerouting with the
singular terms dropped yields the *regular part* of K, whose vanishing at
every branchpoint is the modulation system.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .scattering import ScatteringDatum, ExternalParams, eval_f, eval_df
from .geometry import Arc, ContourSystem, RadicalEvaluator
from .quadrature import (
    QuadConfig,
    arc_integral_plus,
    arc_integral_comp,
    cauchy_integral_near,
    f_kernel,
    power_kernel,
    product_kernel,
)

__all__ = [
    "PeriodEngine",
    "assemble_D",
    "solve_moments",
    "eval_K",
    "eval_Kx",
    "eval_Kt",
]

ZONE_FACTOR = 0.8  # reroute through the capsule when dist(z, arc) < factor * offset


def _inv_R_derivs(R: RadicalEvaluator, z: complex) -> Tuple[complex, complex, complex]:
    """(1/R, (1/R)', (1/R)'') at z off the cuts."""
    z = complex(z)
    Rv = complex(R.eval(np.array([z]))[0])
    S = complex(np.sum(1.0 / (z - R.branchpoints())))
    Sp = complex(-np.sum(1.0 / (z - R.branchpoints()) ** 2))
    Rp = 0.5 * Rv * S
    Rpp = Rv * (0.25 * S * S + 0.5 * Sp)
    inv = 1.0 / Rv
    return inv, -Rp * inv**2, (2.0 * Rp**2 - Rv * Rpp) * inv**3


@dataclass
class PeriodEngine:
    """Caches the period table of one (configuration, f0, x, t) instance."""

    contour: ContourSystem
    R: RadicalEvaluator
    datum: ScatteringDatum
    params: ExternalParams
    quad: QuadConfig = QuadConfig()
    _cache: dict = field(default_factory=dict, repr=False)

    # -- rows ---------------------------------------------------------------

    @property
    def n(self) -> int:
        return self.contour.config.n

    def _pair_moment(self, kind: str, j: int, phi) -> complex:
        up, lo = f"{kind}+{j}", f"{kind}-{j}"
        if kind == "m":
            return 2.0 * (
                arc_integral_plus(self.R, up, phi, self.quad)
                + arc_integral_plus(self.R, lo, phi, self.quad)
            )
        return 2.0 * (
            arc_integral_comp(self.R, up, phi, self.quad)
            + arc_integral_comp(self.R, lo, phi, self.quad)
        )

    def P(self) -> np.ndarray:
        if "P" not in self._cache:
            n = self.n
            P = np.zeros((2 * n, 2 * n), dtype=complex)
            for j in range(1, n + 1):
                for m in range(2 * n):
                    P[j - 1, m] = self._pair_moment("m", j, power_kernel(m))
                    P[n + j - 1, m] = self._pair_moment("c", j, power_kernel(m))
            self._cache["P"] = P
        return self._cache["P"]

    def F(self) -> np.ndarray:
        if "F" not in self._cache:
            n = self.n
            fk = f_kernel(self.datum, self.params)
            F = np.zeros(2 * n, dtype=complex)
            for m in range(2 * n):
                phi = product_kernel(power_kernel(m), fk)
                F[m] = sum(
                    2.0 * arc_integral_plus(self.R, cut, phi, self.quad)
                    for cut in self.contour.cuts()
                )
            self._cache["F"] = F
        return self._cache["F"]

    def D(self) -> complex:
        if "D" not in self._cache:
            self._cache["D"] = complex(np.linalg.det(self.P())) if self.n else 1.0 + 0.0j
        return self._cache["D"]

    def moments(self) -> Tuple[np.ndarray, np.ndarray, float]:
        """(W_1..W_n, Omega_1..Omega_n, complex residual inf-norm)."""
        if "moments" not in self._cache:
            n = self.n
            if n == 0:
                self._cache["moments"] = (np.zeros(0), np.zeros(0), 0.0)
            else:
                Pt = self.P().T          # rows m, cols = loop index
                F = self.F()
                A = np.vstack([Pt.real, Pt.imag])
                b = np.concatenate([-F.real, -F.imag])
                u, *_ = np.linalg.lstsq(A, b, rcond=None)
                res = float(np.max(np.abs(Pt @ u + F)))
                self._cache["moments"] = (u[:n].copy(), u[n:].copy(), res)
        return self._cache["moments"]

    def e1(self) -> float:
        return self.contour.config.e1()

    # -- per-z columns --------------------------------------------------------

    def _near(self, arc: Arc, z: complex) -> bool:
        return float(arc.distance(z)) < ZONE_FACTOR * self.contour.capsule_radius(arc.key)

    def _cauchy_pair(self, kind: str, j: int, z: complex, deriv: int) -> complex:
        """Paired Cauchy moment d^deriv/dz^deriv of 1/((zeta-z) R), rerouted if z is near."""
        total = 0.0 + 0.0j
        fac = 1.0 if deriv == 0 else (1.0 if deriv == 1 else 2.0)
        for key in (f"{kind}+{j}", f"{kind}-{j}"):
            arc = self.contour.arc(key)
            invR = lambda zz: 1.0 / self.R.eval(zz)
            if not self._near(arc, z):
                kern = lambda zz: fac * invR(zz) / (zz - z) ** (deriv + 1)
                if kind == "m":
                    total += 2.0 * arc_integral_plus(
                        self.R, key, lambda zz: fac / (zz - z) ** (deriv + 1), self.quad
                    )
                else:
                    total += 2.0 * arc_integral_comp(
                        self.R, key, lambda zz: fac / (zz - z) ** (deriv + 1), self.quad
                    )
                continue
            iR = _inv_R_derivs(self.R, z)
            if kind == "m":
                loop = self.contour.capsule(key)
                val = -cauchy_integral_near(invR, loop, z, self.quad, order=deriv + 1) * fac
                total += val + 2j * np.pi * iR[deriv]
            else:
                runs = self.contour.sigma_capsule(key)
                val = cauchy_integral_near(invR, runs, z, self.quad, order=deriv + 1) * fac
                sigma = float(arc.side_of(z))
                total += val - sigma * 2j * np.pi * iR[deriv]
        return total

    def cauchy_column(self, z: complex, deriv: int = 0) -> np.ndarray:
        n = self.n
        col = np.zeros(2 * n, dtype=complex)
        for j in range(1, n + 1):
            col[j - 1] = self._cauchy_pair("m", j, z, deriv)
            col[n + j - 1] = self._cauchy_pair("c", j, z, deriv)
        return col

    def f_corner(self, z: complex, deriv: int = 0) -> complex:
        """d^deriv/dz^deriv of f_c(z) = sum_cuts 2 int f/((zeta-z)R_+) - 2 pi i f(z)/R(z)."""
        z = complex(z)
        fk = f_kernel(self.datum, self.params)
        fac = 1.0 if deriv == 0 else (1.0 if deriv == 1 else 2.0)
        total = 0.0 + 0.0j
        near_cut = None
        for cut in self.contour.cuts():
            if self._near(cut, z):
                near_cut = cut.key
                break
        for cut in self.contour.cuts():
            if cut.key == near_cut:
                loop = self.contour.capsule(cut.key)
                total += -cauchy_integral_near(
                    lambda zz: fk(zz) / self.R.eval(zz), loop, z, self.quad, order=deriv + 1
                ) * fac
            else:
                total += 2.0 * arc_integral_plus(
                    self.R, cut.key, lambda zz: fac * fk(zz) / (zz - z) ** (deriv + 1), self.quad
                )
        if near_cut is None:
            fz = complex(eval_f(self.datum, self.params, z))
            iR = _inv_R_derivs(self.R, z)
            if deriv == 0:
                total += -2j * np.pi * fz * iR[0]
            else:
                dfz = complex(eval_df(self.datum, self.params, z))
                if deriv == 1:
                    total += -2j * np.pi * (dfz * iR[0] + fz * iR[1])
                else:
                    # f'' of the phase: f0'' - 4t
                    d2f0 = _second_df(self.datum, self.params, z)
                    total += -2j * np.pi * (d2f0 * iR[0] + 2.0 * dfz * iR[1] + fz * iR[2])
        return total

    # -- determinants ---------------------------------------------------------

    def K(self, z: complex) -> complex:
        n = self.n
        if n == 0:
            return self.f_corner(z) / (2j * np.pi)
        B = np.zeros((2 * n + 1, 2 * n + 1), dtype=complex)
        B[: 2 * n, : 2 * n] = self.P()
        B[: 2 * n, 2 * n] = self.cauchy_column(z)
        B[2 * n, : 2 * n] = self.F()
        B[2 * n, 2 * n] = self.f_corner(z)
        return complex(np.linalg.det(B)) / (2j * np.pi)

    def K_wform(self, z: complex, deriv: int = 0) -> complex:
        """(1/2 pi i)[f_c + sum W c_main + sum Omega c_comp] and z-derivatives.

        Equals K(z) (deriv=0) once the moment system is satisfied; cheaper per
        z and the route to h', h''.
        """
        W, Om, _ = self.moments()
        col = self.cauchy_column(z, deriv)
        n = self.n
        bracket = self.f_corner(z, deriv)
        if n:
            bracket += np.dot(W, col[:n]) + np.dot(Om, col[n:])
        return bracket / (2j * np.pi)

    def Kx(self, z: complex, deriv: int = 0) -> complex:
        """K_x (deriv=0) or its z-derivatives via the derivative Cauchy column."""
        n = self.n
        if n == 0:
            return -1.0 + 0.0j if deriv == 0 else 0.0 + 0.0j
        Mmat = np.zeros((2 * n, 2 * n), dtype=complex)
        Mmat[:, : 2 * n - 1] = self.P()[:, : 2 * n - 1]
        Mmat[:, 2 * n - 1] = self.cauchy_column(z, deriv)
        return complex(np.linalg.det(Mmat))

    def Kt(self, z: complex, deriv: int = 0) -> complex:
        n = self.n
        z = complex(z)
        if n == 0:
            if deriv == 0:
                return -2.0 * (z + self.e1())
            return -2.0 + 0.0j if deriv == 1 else 0.0 + 0.0j
        col = self.cauchy_column(z, deriv)
        M1 = np.zeros((2 * n, 2 * n), dtype=complex)
        M1[:, : 2 * n - 2] = self.P()[:, : 2 * n - 2]
        M1[:, 2 * n - 2] = self.P()[:, 2 * n - 1]
        M1[:, 2 * n - 1] = col
        Mx = np.zeros((2 * n, 2 * n), dtype=complex)
        Mx[:, : 2 * n - 1] = self.P()[:, : 2 * n - 1]
        Mx[:, 2 * n - 1] = col
        return -2.0 * complex(np.linalg.det(M1)) + 2.0 * self.e1() * complex(np.linalg.det(Mx))

    # -- regular part at a branchpoint ---------------------------------------

    def _adjacent_keys(self, alpha: complex) -> Dict[str, bool]:
        out = {}
        for arc in self.contour.all_arcs():
            if min(abs(arc.start - alpha), abs(arc.end - alpha)) < 1e-12:
                out[arc.key] = True
        return out

    def _cauchy_pair_regular(self, kind: str, j: int, alpha: complex, adjacent) -> complex:
        total = 0.0 + 0.0j
        invR = lambda zz: 1.0 / self.R.eval(zz)
        for key in (f"{kind}+{j}", f"{kind}-{j}"):
            if key in adjacent:
                if kind == "m":
                    total += -cauchy_integral_near(
                        invR, self.contour.capsule(key), alpha, self.quad
                    )
                else:
                    total += cauchy_integral_near(
                        invR, self.contour.sigma_capsule(key), alpha, self.quad
                    )
            else:
                kern = lambda zz: 1.0 / (zz - alpha)
                if kind == "m":
                    total += 2.0 * arc_integral_plus(self.R, key, kern, self.quad)
                else:
                    total += 2.0 * arc_integral_comp(self.R, key, kern, self.quad)
        return total

    def K_regular(self, k: int) -> complex:
        """Regular part of K at upper branchpoint k (index into the upper list).

        The modulation system is K_regular(k) = 0 for every k.
        """
        alpha = complex(self.contour.config.upper_branchpoints[k])
        adjacent = self._adjacent_keys(alpha)
        n = self.n
        fk = f_kernel(self.datum, self.params)
        corner = 0.0 + 0.0j
        for cut in self.contour.cuts():
            if cut.key in adjacent:
                corner += -cauchy_integral_near(
                    lambda zz: fk(zz) / self.R.eval(zz),
                    self.contour.capsule(cut.key),
                    alpha,
                    self.quad,
                )
            else:
                corner += 2.0 * arc_integral_plus(
                    self.R, cut.key, lambda zz: fk(zz) / (zz - alpha), self.quad
                )
        if n == 0:
            return corner / (2j * np.pi)
        B = np.zeros((2 * n + 1, 2 * n + 1), dtype=complex)
        B[: 2 * n, : 2 * n] = self.P()
        B[2 * n, : 2 * n] = self.F()
        for j in range(1, n + 1):
            B[j - 1, 2 * n] = self._cauchy_pair_regular("m", j, alpha, adjacent)
            B[n + j - 1, 2 * n] = self._cauchy_pair_regular("c", j, alpha, adjacent)
        B[2 * n, 2 * n] = corner
        return complex(np.linalg.det(B)) / (2j * np.pi)


def _second_df(datum: ScatteringDatum, params: ExternalParams, z: complex) -> complex:
    """f''(z) = f0''(z) - 4 t, by one central difference of the exact f0'."""
    from .scattering import eval_df0

    hstep = 1e-6 * max(1.0, abs(z))
    d2 = (
        complex(eval_df0(datum, z + hstep)) - complex(eval_df0(datum, z - hstep))
    ) / (2.0 * hstep)
    return d2 - 4.0 * params.t


# ---------------------------------------------------------------------------
# functional front-ends


def assemble_D(engine: PeriodEngine) -> complex:
    return engine.D()


def solve_moments(engine: PeriodEngine):
    return engine.moments()


def eval_K(engine: PeriodEngine, z: complex) -> complex:
    return engine.K(z)


def eval_Kx(engine: PeriodEngine, z: complex) -> complex:
    return engine.Kx(z)


def eval_Kt(engine: PeriodEngine, z: complex) -> complex:
    return engine.Kt(z)
