import math

import pytest

from lqgkpz.errors import InvalidDimension, OutOfRangeGamma, UnknownDimension
from lqgkpz.params import GAMMA_PURE_GRAVITY, LqgParams, coupling_params


def test_pure_gravity_defaults():
    p = coupling_params(math.sqrt(8 / 3))
    assert p.d_gamma == 4.0
    assert p.xi == pytest.approx(1 / math.sqrt(6), abs=1e-15)
    assert p.q == pytest.approx(5 / math.sqrt(6), abs=1e-15)
    assert p.xi * p.q == pytest.approx(5 / 6, abs=1e-15)


def test_unknown_dimension_is_refused():
    with pytest.raises(UnknownDimension):
        coupling_params(1.0)
    p = coupling_params(1.0, 3.0)
    assert (p.q, p.xi) == (2.5, 1 / 3)


@pytest.mark.parametrize("gamma", [0.0, 2.0, 2.5, -1.0])
def test_gamma_range(gamma):
    with pytest.raises(OutOfRangeGamma):
        coupling_params(gamma, 3.0)


def test_dimension_must_exceed_two():
    with pytest.raises(InvalidDimension):
        LqgParams(1.0, 2.0)


@pytest.mark.parametrize("gamma", [0.1, 0.7, 1.3, GAMMA_PURE_GRAVITY, 1.99])
def test_identities(gamma):
    p = coupling_params(gamma, 3.5)
    assert p.xi * p.d_gamma == pytest.approx(gamma, rel=4 * 2.2e-16)
    assert p.xi * p.q == pytest.approx(gamma * p.q / p.d_gamma, rel=4 * 2.2e-16)
    assert p.q > 2.0


def test_json_shape():
    d = coupling_params(GAMMA_PURE_GRAVITY).to_dict()
    assert set(d) == {"gamma", "d_gamma", "q", "xi"}
