"""Branch configurations, contour wiring, and the branch-consistent radical."""

import numpy as np
import pytest

from nlscaustics.geometry import (
    BranchConfiguration,
    RadicalEvaluator,
    build_contour,
    plant_pair,
    remove_pair,
)

from oracles import genus0_radical, tracked_radical

G0 = BranchConfiguration(0, (1j,), 0.0)
G2 = BranchConfiguration(1, (0.0 + 1.0j, 0.9 + 1.1j, 1.6 + 1.5j), 0.0)


def test_config_invariants():
    assert G0.genus == 0 and G2.genus == 2
    bps = G2.all_branchpoints()
    assert len(bps) == 6
    for b in G2.upper_branchpoints:
        assert any(abs(c - np.conj(b)) < 1e-15 for c in bps)


def test_contour_wiring_genus2():
    cs = build_contour(G2)
    arcs = {a.key: a for a in cs.all_arcs()}
    assert set(arcs) == {"m0", "m+1", "m-1", "c+1", "c-1"}
    a0, a1, a2 = G2.upper_branchpoints
    # central cut runs lower -> upper through the real crossing
    assert arcs["m0"].nodes[0] == pytest.approx(np.conj(a0))
    assert arcs["m0"].nodes[-1] == pytest.approx(a0)
    assert any(abs(n.imag) < 1e-12 for n in arcs["m0"].nodes)
    # chained: comp arc bridges the central cut to the outer cut
    assert arcs["c+1"].nodes[0] == pytest.approx(a0)
    assert arcs["c+1"].nodes[-1] == pytest.approx(a1)
    assert arcs["m+1"].nodes[0] == pytest.approx(a1)
    assert arcs["m+1"].nodes[-1] == pytest.approx(a2)
    # mirrors are conjugate-reversed
    assert arcs["m-1"].nodes[0] == pytest.approx(np.conj(a2))
    assert arcs["m-1"].nodes[-1] == pytest.approx(np.conj(a1))


def test_radical_squares_to_polynomial():
    R = RadicalEvaluator(build_contour(G2))
    rng = np.random.default_rng(11)
    zs = rng.uniform(-3, 3, 40) + 1j * rng.uniform(-3, 3, 40)
    vals = R.eval(zs)
    poly = np.ones_like(zs)
    for b in R.branchpoints():
        poly = poly * (zs - b)
    assert np.allclose(vals**2, poly, rtol=1e-12)


def test_radical_asymptotics_and_schwarz():
    R = RadicalEvaluator(build_contour(G2))
    for z in (500.0 + 70j, -800.0 + 30j, 600j):
        # R ~ -z^(2n+1) far away (six branchpoints here -> -z^3)
        assert complex(R.eval(z)) / (-(z**3)) == pytest.approx(1.0, rel=1e-2)
    zs = np.array([0.4 + 0.7j, -1.0 + 0.3j, 2.2 - 0.9j])
    assert np.allclose(R.eval(np.conj(zs)), np.conj(R.eval(zs)), rtol=1e-13)


def test_radical_frozen_genus0_values():
    R = RadicalEvaluator(build_contour(G0))
    # cut [-i, i]: R(2) = -sqrt(5); east face at 0 is -1, west (plus) face +1
    assert complex(R.eval(2.0)) == pytest.approx(-np.sqrt(5.0), rel=1e-13)
    assert complex(R.eval(1e-9 + 0.0j)) == pytest.approx(-1.0, rel=1e-6)
    assert complex(R.eval(-1e-9 + 0.0j)) == pytest.approx(1.0, rel=1e-6)
    assert complex(R.eval(0.0j)) == pytest.approx(1.0, rel=1e-12)
    ref = genus0_radical(1j)
    zs = np.array([1.5 + 0.2j, -0.7 + 1.1j, 0.3 - 2.0j])
    assert np.allclose(R.eval(zs), ref(zs), rtol=1e-12)


def test_plus_boundary_value_and_jump():
    cs = build_contour(G2)
    R = RadicalEvaluator(cs)
    arc = [a for a in cs.all_arcs() if a.key == "m+1"][0]
    pts, tans = [], []
    for s in (0.25, 0.5, 0.75):
        p, t = arc.point_and_tangent(s)
        pts.append(p)
        tans.append(t)
    pts, tans = np.array(pts), np.array(tans)
    plus = R.plus_on_cut("m+1", pts, tans)
    poly = np.ones_like(pts)
    for b in R.branchpoints():
        poly = poly * (pts - b)
    assert np.allclose(plus**2, poly, rtol=1e-10)
    # two-sided limits are opposite; left of the tangent is the plus side
    eps = 1e-9
    left = R.eval(pts + 1j * tans * eps)
    right = R.eval(pts - 1j * tans * eps)
    assert np.allclose(left, -right, rtol=1e-5)
    assert np.allclose(left, plus, rtol=1e-5)


def test_curved_cut_lens_flip():
    # bend the central cut: the branch jump must follow the polyline,
    # leaving the evaluator continuous across the straight chord
    cfg = BranchConfiguration(0, (1j,), 0.0, main_controls=(("m0", (0.35 - 0.1j,)),))
    R = RadicalEvaluator(build_contour(cfg))
    # crossing the chord at a height where the polyline has detoured east:
    z = 0.05j
    no_jump = complex(R.eval(z - 1e-7)) - complex(R.eval(z + 1e-7))
    assert abs(no_jump) < 1e-5
    # crossing the polyline itself flips the sign
    mid = 0.5 * (-1j + (0.35 - 0.1j))  # midpoint of the first polyline segment
    seg_dir = (0.35 - 0.1j + 1j) / abs(0.35 - 0.1j + 1j)
    a = complex(R.eval(mid + 1j * seg_dir * 1e-7))
    b = complex(R.eval(mid - 1j * seg_dir * 1e-7))
    assert abs(a + b) < 1e-5 * abs(a)


def test_tracked_radical_oracle_agreement():
    R = RadicalEvaluator(build_contour(G2))
    ref = tracked_radical(R.branchpoints())
    for z in (4.0 + 2.0j, -3.0 + 4.0j):
        assert complex(R.eval(z)) == pytest.approx(ref(z), rel=1e-6)


def test_plant_and_remove_pair_roundtrip():
    planted = plant_pair(G0, 0.8 + 0.6j)
    assert planted.genus == 2
    assert planted.allow_collapsed
    back = remove_pair(planted, 1)
    assert back.genus == 0
    assert back.upper_branchpoints == G0.upper_branchpoints


def test_remove_pair_rejects_open_pair():
    from nlscaustics.geometry import PairNotCollapsedError

    with pytest.raises(PairNotCollapsedError):
        remove_pair(G2, 1)


def test_keep_away_build_smoke():
    cs = build_contour(G2, keep_away=(0.45 + 0.55j,))
    assert {a.key for a in cs.all_arcs()} == {"m0", "m+1", "m-1", "c+1", "c-1"}
