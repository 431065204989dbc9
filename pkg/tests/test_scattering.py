"""Rational scattering data: evaluation, poles, residues, phase assembly."""

import numpy as np
import pytest

from nlscaustics.scattering import (
    ExternalParams,
    ScatteringDatum,
    SingularityError,
    eval_df,
    eval_df0,
    eval_f,
    eval_f0,
    rational,
)

from oracles import fd2


# f0 = -1/(z^2+4): simple even datum with poles at +-2i, residue +i/4 at 2i
EVEN = rational((-1.0,), (4.0, 0.0, 1.0))
# two stacked imaginary pole pairs: -0.25/(z^2+0.64) - 1/(z^2+4)
STACKED = rational((-1.64, 0.0, -1.25), (2.56, 0.0, 4.64, 0.0, 1.0))


def test_eval_f0_direct_values():
    # hand-evaluated fractions
    assert eval_f0(EVEN, 0.0) == pytest.approx(-0.25)
    assert eval_f0(EVEN, 1.0) == pytest.approx(-0.2)
    assert complex(eval_f0(EVEN, 1j)) == pytest.approx(-1.0 / 3.0)
    # partial fractions of the stacked datum: -0.25/(z^2+0.64) - 1/(z^2+4)
    z = 0.7 + 0.3j
    expect = -0.25 / (z * z + 0.64) - 1.0 / (z * z + 4.0)
    assert complex(eval_f0(STACKED, z)) == pytest.approx(expect, rel=1e-13)


def test_schwarz_symmetry():
    zs = np.array([0.3 + 0.9j, -1.2 + 0.4j, 2.0 - 0.7j])
    fz = eval_f0(STACKED, zs)
    fzc = eval_f0(STACKED, np.conj(zs))
    assert np.allclose(fzc, np.conj(fz), rtol=1e-14)


def test_poles_conjugate_closed():
    ps = sorted(STACKED.poles(), key=lambda p: (p.imag, p.real))
    expect = [-2j, -0.8j, 0.8j, 2j]
    for got, want in zip(ps, expect):
        assert got == pytest.approx(want, abs=1e-12)


def test_residues_match_partial_fractions():
    ps = STACKED.poles()
    rs = STACKED.residues()
    for p, r in zip(ps, rs):
        if abs(p - 2j) < 1e-9:
            assert r == pytest.approx(-1.0 / (4j), rel=1e-12)  # +0.25i
        if abs(p - 0.8j) < 1e-9:
            assert r == pytest.approx(-0.25 / (1.6j), rel=1e-12)  # +0.15625i


def test_singularity_clearance():
    with pytest.raises(SingularityError):
        eval_f0(EVEN, 2j)
    with pytest.raises(SingularityError):
        eval_f0(EVEN, 2j + 1e-13)
    # vectorized: one bad entry poisons the call
    with pytest.raises(SingularityError):
        eval_f0(EVEN, np.array([1.0, 2j]))
    # just outside the guard radius: finite (huge) value, no raise
    assert np.isfinite(eval_f0(EVEN, 2j + 1e-9))


def test_derivative_against_central_difference():
    for z in (0.5 + 0.8j, -1.1 + 0.2j, 0.1 - 1.5j):
        fd = fd2(lambda s: complex(eval_f0(STACKED, z + s)), 0.0, 1e-6)
        assert complex(eval_df0(STACKED, z)) == pytest.approx(fd, rel=1e-8)


def test_phase_assembly():
    p = ExternalParams(-1.5, 0.25)
    z = 0.4 + 1.1j
    f = complex(eval_f(STACKED, p, z))
    expect = complex(eval_f0(STACKED, z)) - z * p.x - 2.0 * p.t * z * z
    assert f == pytest.approx(expect, rel=1e-14)
    df = complex(eval_df(STACKED, p, z))
    fd = fd2(lambda s: complex(eval_f(STACKED, p, z + s)), 0.0, 1e-6)
    assert df == pytest.approx(fd, rel=1e-8)


def test_properness_enforced():
    with pytest.raises(ValueError):
        rational((1.0, 0.0, 2.0), (4.0, 0.0, 1.0))  # deg num == deg den


def test_polynomial_kind_allows_constant_denominator():
    d = ScatteringDatum("polynomial", (0.0, 0.0, -1.0), (1.0,))
    assert complex(eval_f0(d, 2.0)) == pytest.approx(-4.0)
    assert d.poles().size == 0


def test_pole_validation():
    bad = rational((1.0,), (0.0, 0.0, 1.0))  # double pole at 0, on axis
    with pytest.raises(ValueError):
        bad.validate_poles()
    STACKED.validate_poles()  # clean data pass
