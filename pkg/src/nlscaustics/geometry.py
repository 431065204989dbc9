"""Branchpoints, the contour of main/complementary arcs, loops, and the radical R.

Geometry conventions (fixed across the package):

* A configuration stores only the upper-half-plane branchpoints
  alpha_0, alpha_2, ..., alpha_{4n} in traversal order; lower ones are
  conjugates, never stored.
* Traversal: ... conj(alpha_4) -> main -> conj(alpha_2) -> comp ->
  conj(alpha_0) -> central main arc through mu on the real axis -> alpha_0
  -> comp -> alpha_2 -> main -> alpha_4 -> ...
  Upper main arc j runs alpha_{4j-2} -> alpha_{4j}; upper comp arc j runs
  alpha_{4j-4} -> alpha_{4j-2}; lower arcs are conjugated reversals.
* Arcs are polylines (chords by default; the central arc is
  [conj(alpha_0), mu, alpha_0]).  Main arcs are the branch cuts of R.
* R(z)^2 = prod (z - beta_j) over all 2N+2 branchpoints, with the branch
  fixed by R(z)/z^(N+1) -> -1 at infinity.  Each cut contributes a factor
  rho(z) = ((b-a)/2) sqrt(w-1) sqrt(w+1), w = (2z-a-b)/(b-a) (principal
  square roots put the factor's cut on the chord [a, b]); a sign flip on the
  lens between chord and polyline moves the cut onto the polyline.
  R = -prod(rho).
* Left ("+") boundary value on a cut: approach from the side i*tangent.
  On a straight chord this is the upper half of the w-plane, where
  rho_+ = i ((b-a)/2) sqrt(1-w^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "BranchConfiguration",
    "Arc",
    "ContourSystem",
    "RadicalEvaluator",
    "TopologyError",
    "PairNotCollapsedError",
    "build_contour",
    "eval_radical",
    "eval_radical_plus",
    "plant_pair",
    "remove_pair",
]

DELTA_MIN_DEFAULT = 1e-8
COLLAPSE_TOL_DEFAULT = 1e-6
SIDE_NUDGE_REL = 1e-8          # relative nudge used only for side booleans
ONCHORD_IMW_TOL = 1e-11        # |Im w| below this counts as "on the chord"


class TopologyError(ValueError):
    pass


class PairNotCollapsedError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class BranchConfiguration:
    """Upper branchpoints in traversal order, genus N = 2n, real crossing mu.

    main_controls / comp_controls optionally bend arcs: they map an arc key
    ("m0", "m+1", ..., "c+1", ...) to a tuple of interior polyline nodes for
    the *upper* (or central) arc; mirrored arcs get conjugated nodes
    automatically.
    """

    n: int
    upper_branchpoints: tuple
    mu: float
    main_controls: tuple = ()   # tuple of (key, nodes-tuple) pairs
    comp_controls: tuple = ()
    delta_min: float = DELTA_MIN_DEFAULT
    allow_collapsed: bool = False

    def __post_init__(self):
        ub = tuple(complex(a) for a in self.upper_branchpoints)
        object.__setattr__(self, "upper_branchpoints", ub)
        if self.n < 0:
            raise TopologyError("n must be nonnegative")
        if len(ub) != 2 * self.n + 1:
            raise TopologyError(
                f"expected {2 * self.n + 1} upper branchpoints for n={self.n}, got {len(ub)}"
            )
        if not np.isfinite(self.mu):
            raise TopologyError("mu must be finite real")
        for a in ub:
            if not (a.imag > 0):
                raise TopologyError(f"branchpoint {a} is not in the open upper half-plane")
        if len(ub) > 1 and not self.allow_collapsed:
            pts = np.asarray(ub)
            d = np.abs(pts[:, None] - pts[None, :]) + np.eye(len(ub))
            if d.min() <= self.delta_min:
                raise TopologyError(
                    f"branchpoints closer than delta_min={self.delta_min}: min separation {d.min():.3e}"
                )

    @property
    def genus(self) -> int:
        return 2 * self.n

    def all_branchpoints(self) -> np.ndarray:
        ub = np.asarray(self.upper_branchpoints)
        return np.concatenate([ub, np.conj(ub)])

    def e1(self) -> float:
        """Half-sum of all branchpoints (real by symmetry)."""
        return float(np.sum(np.real(self.upper_branchpoints)))

    def controls_for(self, key: str) -> Tuple[complex, ...]:
        for k, nodes in self.main_controls + self.comp_controls:
            if k == key:
                return tuple(complex(v) for v in nodes)
        return ()


# ---------------------------------------------------------------------------
# arcs


@dataclass(frozen=True)
class Arc:
    """Oriented polyline arc. index: 0 central main, +j upper, -j lower."""

    kind: str          # "main" | "comp"
    index: int
    nodes: tuple       # complex polyline nodes, orientation order

    def __post_init__(self):
        nd = tuple(complex(v) for v in self.nodes)
        if len(nd) < 2:
            raise TopologyError("arc needs at least two nodes")
        object.__setattr__(self, "nodes", nd)

    @property
    def key(self) -> str:
        sign = "" if self.index == 0 else ("+" if self.index > 0 else "-")
        return f"{self.kind[0]}{sign}{abs(self.index)}"

    @property
    def start(self) -> complex:
        return self.nodes[0]

    @property
    def end(self) -> complex:
        return self.nodes[-1]

    def seg_array(self) -> np.ndarray:
        nd = np.asarray(self.nodes)
        return np.stack([nd[:-1], nd[1:]], axis=1)

    def length(self) -> float:
        nd = np.asarray(self.nodes)
        return float(np.sum(np.abs(np.diff(nd))))

    def point_and_tangent(self, s: float) -> Tuple[complex, complex]:
        """Point and unit tangent at fractional arclength s in [0, 1]."""
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"arc parameter {s} outside [0, 1]")
        nd = np.asarray(self.nodes)
        seg = np.diff(nd)
        lens = np.abs(seg)
        cum = np.concatenate([[0.0], np.cumsum(lens)])
        target = s * cum[-1]
        i = min(np.searchsorted(cum, target, side="right") - 1, len(seg) - 1)
        i = max(i, 0)
        local = (target - cum[i]) / lens[i] if lens[i] > 0 else 0.0
        z = nd[i] + local * seg[i]
        return complex(z), complex(seg[i] / lens[i])

    def distance(self, z) -> np.ndarray:
        """Distance from point(s) z to the polyline."""
        z = np.asarray(z, dtype=complex)
        nd = np.asarray(self.nodes)
        a = nd[:-1][None, :]
        b = nd[1:][None, :]
        zz = z.reshape(-1, 1)
        ab = b - a
        tt = np.clip(((zz - a) * np.conj(ab)).real / (np.abs(ab) ** 2 + 1e-300), 0.0, 1.0)
        d = np.abs(zz - (a + tt * ab)).min(axis=1)
        return d.reshape(z.shape) if z.shape else d[0]

    def side_of(self, z) -> np.ndarray:
        """+1 if z lies to the right of the oriented arc, -1 to the left.

        Uses the nearest segment's tangent; right of tangent tau means the
        -i*tau half-plane.
        """
        z = np.asarray(z, dtype=complex)
        nd = np.asarray(self.nodes)
        a = nd[:-1][None, :]
        b = nd[1:][None, :]
        zz = z.reshape(-1, 1)
        ab = b - a
        tt = np.clip(((zz - a) * np.conj(ab)).real / (np.abs(ab) ** 2 + 1e-300), 0.0, 1.0)
        foot = a + tt * ab
        d = np.abs(zz - foot)
        k = np.argmin(d, axis=1)
        rows = np.arange(zz.shape[0])
        tau = ab[0, k] / np.abs(ab[0, k])
        cross = ((zz[rows, 0] - foot[rows, k]) * np.conj(1j * tau)).real
        out = np.where(cross >= 0, -1.0, 1.0)  # left of tau (+i tau side) -> -1
        return out.reshape(z.shape) if z.shape else out[0]


def _mirror(arc: Arc) -> Arc:
    return Arc(arc.kind, -arc.index, tuple(np.conj(np.asarray(arc.nodes))[::-1]))


# ---------------------------------------------------------------------------
# contour system


def _segments_cross(p0, p1, q0, q1, tol=1e-13) -> Optional[complex]:
    """Proper intersection point of segments [p0,p1], [q0,q1], or None."""
    d1 = p1 - p0
    d2 = q1 - q0
    den = (d1 * np.conj(d2)).imag  # cross product
    if abs(den) < tol * (abs(d1) * abs(d2) + 1e-300):
        return None
    s = ((q0 - p0) * np.conj(d2)).imag / den
    u = ((q0 - p0) * np.conj(d1)).imag / den
    if -tol < s < 1 + tol and -tol < u < 1 + tol:
        return p0 + s * d1
    return None


def _polyline_intersections(nodes_a, nodes_b, skip_shared_endpoints=True):
    """All proper crossing points between two polylines."""
    pts = []
    na = np.asarray(nodes_a)
    nb = np.asarray(nodes_b)
    for i in range(len(na) - 1):
        for j in range(len(nb) - 1):
            p = _segments_cross(na[i], na[i + 1], nb[j], nb[j + 1])
            if p is None:
                continue
            if skip_shared_endpoints and (
                min(abs(p - na[0]), abs(p - na[-1]), abs(p - nb[0]), abs(p - nb[-1])) < 1e-12
            ):
                continue
            pts.append(p)
    return pts


@dataclass
class ContourSystem:
    """Arcs of the contour plus loop bookkeeping.

    main_arcs: [m0, m+1..m+n, m-1..m-n]; comp_arcs: [c+1..c+n, c-1..c-n].
    Loop shapes (capsules) are built lazily per arc at the stored offsets.
    """

    config: BranchConfiguration
    main_arcs: List[Arc]
    comp_arcs: List[Arc]
    loop_offsets: dict
    outer_radius: float
    keep_away: tuple = ()

    # -- lookup helpers ----------------------------------------------------

    def arc(self, key: str) -> Arc:
        for a in self.main_arcs + self.comp_arcs:
            if a.key == key:
                return a
        raise KeyError(key)

    def cuts(self) -> List[Arc]:
        """Main arcs = branch cuts, central first, then upper, then lower."""
        return self.main_arcs

    def upper_main(self, j: int) -> Arc:
        return self.arc(f"m+{j}")

    def upper_comp(self, j: int) -> Arc:
        return self.arc(f"c+{j}")

    def all_arcs(self) -> List[Arc]:
        return self.main_arcs + self.comp_arcs

    def scale(self) -> float:
        pts = self.config.all_branchpoints()
        return float(max(1.0, np.max(np.abs(pts))))

    # -- capsules ------------------------------------------------------------

    def capsule(self, key: str, inflate: float = 1.0) -> np.ndarray:
        """Closed stadium polygon around the arc (CCW orientation)."""
        arc = self.arc(key)
        r = self.loop_offsets[key] * inflate
        return _stadium(np.asarray(arc.nodes), r)

    def capsule_radius(self, key: str) -> float:
        return self.loop_offsets[key]

    def sigma_capsule(self, key: str, inflate: float = 1.0):
        """CCW capsule around a comp arc, split into (start, end, sigma) runs.

        sigma * R is continuous along the loop: sigma = +1 on the run nearest
        the right-side midpoint of the arc and flips wherever the boundary
        crosses a branch cut.  Candidate crossings come from segment
        intersections; each one is confirmed by checking that the plain
        radical value is sign-discontinuous across it (this survives capsule
        vertices landing exactly on a cut).  Raises TopologyError on
        non-adjacent-cut contact or an odd flip count.
        """
        arc = self.arc(key)
        if arc.kind != "comp":
            raise ValueError("sigma capsules are defined for comp arcs")
        poly = self.capsule(key, inflate)
        adjacent = self._adjacent_cut_keys(key)
        rad = RadicalEvaluator(self)
        scale = self.scale()
        verts = np.concatenate([poly, poly[:1]])
        elen = np.abs(np.diff(verts))
        cum = np.concatenate([[0.0], np.cumsum(elen)])
        total_len = cum[-1]

        def walk(s):
            s = s % total_len
            i = min(np.searchsorted(cum, s, side="right") - 1, len(elen) - 1)
            return verts[i] + (s - cum[i]) / elen[i] * (verts[i + 1] - verts[i])

        # candidate crossing events as walk arclengths
        events = []  # (s, cut_key)
        for i in range(len(verts) - 1):
            a, b = verts[i], verts[i + 1]
            for c in self.cuts():
                cn = np.asarray(c.nodes)
                for j in range(len(cn) - 1):
                    p = _segments_cross(a, b, cn[j], cn[j + 1], tol=1e-9)
                    if p is not None:
                        events.append((cum[i] + abs(p - a), c.key))
        events.sort()
        clustered = []
        for s, ck in events:
            if clustered and abs(s - clustered[-1][0]) < 1e-9 * scale:
                continue
            clustered.append((s, ck))
        if len(clustered) >= 2 and (total_len - clustered[-1][0]) + clustered[0][0] < 1e-9 * scale:
            clustered.pop()
        # confirm each candidate: plain R flips sign across a true crossing
        eps = min(1e-5 * scale, 1e-3 * elen.min())
        flips = []
        for s, ck in clustered:
            ra = rad.eval(np.array([walk(s - eps)]))[0]
            rb = rad.eval(np.array([walk(s + eps)]))[0]
            if abs(ra + rb) < abs(ra - rb):
                if ck not in adjacent:
                    raise TopologyError(
                        f"capsule of {key} crosses non-adjacent cut {ck}; shrink offsets"
                    )
                flips.append(s)
        if len(flips) % 2 != 0:
            raise TopologyError(f"odd number of confirmed cut crossings on capsule of {key}")
        # cut the loop at vertices and flips, assign sigma by walk order
        breakpoints = sorted(set(list(cum[:-1]) + flips))
        runs = []
        sig = 1.0
        flip_set = sorted(flips)
        for k, sa in enumerate(breakpoints):
            sb = breakpoints[k + 1] if k + 1 < len(breakpoints) else total_len
            if sb - sa > 1e-14:
                runs.append([complex(walk(sa)), complex(walk(sb if sb < total_len else 0.0)), sig])
            if any(abs(sb - fs) < 1e-12 for fs in flip_set):
                sig = -sig
        # normalize: sigma = +1 on the run nearest the right-side arc midpoint
        zm, tm = arc.point_and_tangent(0.5)
        anchor = zm - 1j * tm * self.loop_offsets[key] * inflate * 0.5
        mids = np.array([(a + b) / 2 for a, b, _ in runs])
        ref = runs[int(np.argmin(np.abs(mids - anchor)))][2]
        return [(a, b, s * ref) for a, b, s in runs]

    def _adjacent_cut_keys(self, comp_key: str) -> set:
        arc = self.arc(comp_key)
        out = set()
        for c in self.cuts():
            if (
                min(
                    abs(c.start - arc.start),
                    abs(c.end - arc.start),
                    abs(c.start - arc.end),
                    abs(c.end - arc.end),
                )
                < 1e-12
            ):
                out.add(c.key)
        return out

    def nearest_feature_distance(self, z) -> float:
        d = min(float(a.distance(z)) for a in self.all_arcs())
        for p in self.keep_away:
            d = min(d, abs(complex(z) - complex(p)))
        return d


def _stadium(nodes: np.ndarray, r: float) -> np.ndarray:
    """CCW closed polygon at offset r around an oriented polyline.

    Right side traversed forward, semi-octagonal cap at the far end, left
    side back, cap at the start.  Miter joins at interior nodes.
    """
    seg = np.diff(nodes)
    tau = seg / np.abs(seg)
    # per-node tangents (miter): average adjacent unit tangents
    tnode = np.empty(len(nodes), dtype=complex)
    tnode[0] = tau[0]
    tnode[-1] = tau[-1]
    for i in range(1, len(nodes) - 1):
        m = tau[i - 1] + tau[i]
        tnode[i] = m / abs(m) if abs(m) > 1e-12 else tau[i]
    right = nodes - 1j * tnode * r
    left = nodes + 1j * tnode * r
    # caps: three points sweeping around each endpoint
    t0, t1 = tau[0], tau[-1]
    c = 1.0 / np.sqrt(2.0)
    cap_end = [
        nodes[-1] + (c - 1j * c) * t1 * r,
        nodes[-1] + t1 * r,
        nodes[-1] + (c + 1j * c) * t1 * r,
    ]
    cap_start = [
        nodes[0] + (-c + 1j * c) * t0 * r,
        nodes[0] - t0 * r,
        nodes[0] + (-c - 1j * c) * t0 * r,
    ]
    return np.concatenate([right, cap_end, left[::-1], cap_start])


# ---------------------------------------------------------------------------
# build


def build_contour(
    config: BranchConfiguration,
    keep_away: Sequence[complex] = (),
    base_offset: float = 0.1,
) -> ContourSystem:
    """Construct arcs, validate topology, and fix loop offsets.

    keep_away: singularities of f0 (and any other points loops must avoid).
    """
    ub = config.upper_branchpoints
    n = config.n
    a0 = ub[0]
    central_nodes = (np.conj(a0), complex(config.mu), a0)
    central = Arc("main", 0, central_nodes + config.controls_for("m0"))
    if config.controls_for("m0"):
        # controls for the central arc replace the default two-segment shape
        central = Arc("main", 0, (np.conj(a0),) + config.controls_for("m0") + (a0,))
    mains = [central]
    comps = []
    for j in range(1, n + 1):
        cstart, cend = ub[2 * j - 2], ub[2 * j - 1]
        mstart, mend = ub[2 * j - 1], ub[2 * j]
        comps.append(Arc("comp", j, (cstart,) + config.controls_for(f"c+{j}") + (cend,)))
        mains.append(Arc("main", j, (mstart,) + config.controls_for(f"m+{j}") + (mend,)))
    mains += [_mirror(a) for a in mains[1:]]
    comps += [_mirror(a) for a in comps]

    for arc in mains + comps:
        if arc.length() < 1e-14:
            raise TopologyError(
                f"arc {arc.key} has zero length; separate planted pairs before building contours"
            )
    _validate_topology(mains, comps)

    scale = float(max(1.0, np.max(np.abs(config.all_branchpoints())), abs(config.mu)))
    offsets = {}
    all_arcs = mains + comps
    for arc in all_arcs:
        # clearance to non-adjacent features and keep-away points
        clear = np.inf
        for other in all_arcs:
            if other.key == arc.key:
                continue
            shared = min(
                abs(other.start - arc.start),
                abs(other.end - arc.start),
                abs(other.start - arc.end),
                abs(other.end - arc.end),
            ) < 1e-12
            if shared:
                continue
            d = min(float(other.distance(z)) for z in arc.nodes)
            clear = min(clear, d)
        for p in keep_away:
            clear = min(clear, float(arc.distance(p)))
        r = min(base_offset * scale, 0.25 * clear if np.isfinite(clear) else base_offset * scale)
        # never fatter than a quarter of the arc's own span
        r = min(r, 0.25 * max(arc.length(), 1e-12))
        offsets[arc.key] = max(r, 1e-12)

    outer = 2.0 * scale + 2.0
    return ContourSystem(
        config=config,
        main_arcs=mains,
        comp_arcs=comps,
        loop_offsets=offsets,
        outer_radius=outer,
        keep_away=tuple(complex(p) for p in keep_away),
    )


def _validate_topology(mains: List[Arc], comps: List[Arc]):
    # only the central arc may touch the real axis, and it crosses once
    for arc in mains + comps:
        nd = np.asarray(arc.nodes)
        if arc.key == "m0":
            contacts = int(np.sum(np.abs(nd.imag) < 1e-15))
            for k in range(len(nd) - 1):
                if nd.imag[k] * nd.imag[k + 1] < 0 and min(
                    abs(nd.imag[k]), abs(nd.imag[k + 1])
                ) > 1e-15:
                    contacts += 1
            if contacts != 1:
                raise TopologyError("central arc must cross the real axis exactly once (at mu)")
        else:
            if arc.index > 0 and np.any(nd.imag <= 0):
                raise TopologyError(f"upper arc {arc.key} leaves the upper half-plane")
            if arc.index < 0 and np.any(nd.imag >= 0):
                raise TopologyError(f"lower arc {arc.key} leaves the lower half-plane")
    # arcs must not cross each other except at shared endpoints
    arcs = mains + comps
    for i in range(len(arcs)):
        for j in range(i + 1, len(arcs)):
            if _polyline_intersections(arcs[i].nodes, arcs[j].nodes):
                raise TopologyError(
                    f"arcs {arcs[i].key} and {arcs[j].key} intersect away from endpoints"
                )


# ---------------------------------------------------------------------------
# radical


def _point_in_polygon(poly: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Even-odd rule, vectorized over z (complex array)."""
    x = z.real.ravel()
    y = z.imag.ravel()
    inside = np.zeros(x.shape, dtype=bool)
    px = poly.real
    py = poly.imag
    m = len(poly)
    for i in range(m):
        j = (i - 1) % m
        cond = (py[i] > y) != (py[j] > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xin = (px[j] - px[i]) * (y - py[i]) / (py[j] - py[i]) + px[i]
        hit = cond & (x < xin)
        inside ^= hit
    return inside.reshape(z.shape)


@dataclass
class RadicalEvaluator:
    """Branch-consistent evaluator of R(z) with cuts on the main arcs."""

    contour: ContourSystem
    _cut_data: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self._cut_data = []
        for cut in self.contour.cuts():
            nd = np.asarray(cut.nodes)
            a, b = nd[0], nd[-1]
            lens = None
            if len(nd) > 2:
                # lens polygon between polyline and chord (may be degenerate)
                poly = np.concatenate([nd, nd[:1]])
                area = 0.5 * np.abs(np.sum((poly[:-1] * np.conj(poly[1:])).imag))
                if area > 1e-15:
                    lens = nd
            self._cut_data.append({"arc": cut, "a": a, "b": b, "lens": lens})

    @property
    def config(self) -> BranchConfiguration:
        return self.contour.config

    def branchpoints(self) -> np.ndarray:
        return self.config.all_branchpoints()

    # -- plain evaluation ---------------------------------------------------

    def __call__(self, z):
        return eval_radical(self, z)

    def _rho_chord(self, cd, z):
        """((b-a)/2) * s(w), s = w sqrt(1 - 1/w^2): cut exactly on [-1, 1].

        This form (rather than sqrt(w-1) sqrt(w+1)) is insensitive to the
        sign of a zero imaginary part, so points on the chord's line
        extension evaluate continuously.  Points exactly on the open chord
        get the upper-w-side value.
        """
        a, b = cd["a"], cd["b"]
        w = (2.0 * z - a - b) / (b - a)
        on_seg = (np.abs(w.imag) < 1e-14) & (np.abs(w.real) < 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = w * np.sqrt(1.0 - 1.0 / np.where(on_seg, 1.0, w) ** 2)
        s = np.where(on_seg, 1j * np.sqrt(1.0 - w**2), s)
        return 0.5 * (b - a) * s

    def _flip(self, cd, z):
        if cd["lens"] is None:
            return np.ones(np.shape(z))
        inside = _point_in_polygon(np.asarray(cd["lens"]), np.asarray(z, dtype=complex))
        return np.where(inside, -1.0, 1.0)

    def eval(self, z):
        z = np.asarray(z, dtype=complex)
        out = -np.ones_like(z)
        for cd in self._cut_data:
            out = out * self._rho_chord(cd, z) * self._flip(cd, z)
        return out

    def derivative(self, z):
        """R'(z) = R(z) * (1/2) sum 1/(z - beta_j), valid off the cuts."""
        z = np.asarray(z, dtype=complex)
        s = np.zeros_like(z)
        for b in self.branchpoints():
            s = s + 1.0 / (z - b)
        return self.eval(z) * 0.5 * s

    # -- boundary values ------------------------------------------------------

    def plus_on_cut(self, cut_key: str, pts, tangents):
        """Left boundary value R_+ at points on the given cut.

        pts must lie on the cut's polyline; tangents are the local segment
        unit tangents (orientation direction).
        """
        pts = np.asarray(pts, dtype=complex)
        tangents = np.asarray(tangents, dtype=complex)
        out = -np.ones_like(pts)
        scale = self.contour.scale()
        nudged = pts + 1j * tangents * (SIDE_NUDGE_REL * scale)
        for cd in self._cut_data:
            if cd["arc"].key != cut_key:
                out = out * self._rho_chord(cd, pts) * self._flip(cd, pts)
                continue
            a, b = cd["a"], cd["b"]
            w = (2.0 * pts - a - b) / (b - a)
            on_chord = np.abs(w.imag) < ONCHORD_IMW_TOL
            rho_off = 0.5 * (b - a) * np.sqrt(w - 1.0) * np.sqrt(w + 1.0)
            with np.errstate(invalid="ignore"):
                rho_on = 1j * 0.5 * (b - a) * np.sqrt(1.0 - w.real**2)
            rho = np.where(on_chord, rho_on, rho_off)
            flip = self._flip(cd, nudged) if cd["lens"] is not None else np.ones_like(pts.real)
            out = out * rho * flip
        return out


def eval_radical(R: RadicalEvaluator, z, on_cut_tol: float = 1e-12):
    """R(z) off the cuts; raises if z sits on a cut."""
    z = np.asarray(z, dtype=complex)
    for cut in R.contour.cuts():
        d = cut.distance(z)
        if np.min(np.atleast_1d(d)) < on_cut_tol:
            raise ValueError(f"evaluation point on (or too near) cut {cut.key}")
    return R.eval(z)


def eval_radical_plus(R: RadicalEvaluator, arc_or_key, s: float):
    """R_+ at fractional arclength s of a main arc."""
    arc = R.contour.arc(arc_or_key) if isinstance(arc_or_key, str) else arc_or_key
    if arc.kind != "main":
        raise ValueError("R_+ is defined on main arcs (the cuts)")
    z, tau = arc.point_and_tangent(s)
    return complex(R.plus_on_cut(arc.key, np.array([z]), np.array([tau]))[0])


# ---------------------------------------------------------------------------
# plant / remove


def plant_pair(config: BranchConfiguration, z0: complex) -> BranchConfiguration:
    """Append a coincident branchpoint pair at z0 (genus N -> N+2).

    The caller perturbs the pair apart along its continuation; the returned
    configuration is transiently collapsed (validation relaxed for the pair).
    """
    z0 = complex(z0)
    if not z0.imag > 0:
        raise TopologyError("plant point must be in the open upper half-plane")
    for a in config.upper_branchpoints:
        if abs(a - z0) < config.delta_min:
            raise TopologyError(f"plant point {z0} collides with branchpoint {a}")
    return replace(
        config,
        n=config.n + 1,
        upper_branchpoints=config.upper_branchpoints + (z0, z0),
        allow_collapsed=True,
    )


def remove_pair(
    config: BranchConfiguration, j: int, collapse_tol: float = COLLAPSE_TOL_DEFAULT
) -> BranchConfiguration:
    """Remove the collapsed pair at positions (j, j+1) of the upper list."""
    ub = config.upper_branchpoints
    if not (0 <= j < len(ub) - 1):
        raise IndexError(f"pair index {j} out of range")
    sep = abs(ub[j] - ub[j + 1])
    if sep > collapse_tol:
        raise PairNotCollapsedError(
            f"pair separation {sep:.3e} exceeds collapse tolerance {collapse_tol:.1e}"
        )
    if config.n == 0:
        raise TopologyError("cannot remove a pair from a genus-0 configuration")
    new_ub = ub[:j] + ub[j + 2 :]
    return replace(config, n=config.n - 1, upper_branchpoints=new_ub, allow_collapsed=False)
