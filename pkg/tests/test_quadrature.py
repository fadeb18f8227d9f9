import itertools
from math import factorial

import numpy as np
import pytest

from maxwell_schwarz.quadrature import (
    TRI3_BARY,
    TRI3_WEIGHTS,
    gauss_line,
    grundmann_moeller,
    tet_rule,
    tet_rule_degree,
)


def simplex_monomial(exps):
    """Normalized integral of prod lambda_i**a_i over a simplex of dimension len(exps)-1."""
    dim = len(exps) - 1
    return factorial(dim) * np.prod([factorial(a) for a in exps]) / factorial(sum(exps) + dim)


@pytest.mark.parametrize("s", [0, 1, 2, 3])
def test_grundmann_moeller_exact_on_tet(s):
    bary, w = grundmann_moeller(s, 3)
    assert w.sum() == pytest.approx(1.0, abs=1e-13)
    assert np.allclose(bary.sum(axis=1), 1.0)
    deg = 2 * s + 1
    for exps in itertools.product(range(deg + 1), repeat=3):
        if sum(exps) > deg:
            continue
        full = (*exps, 0)
        got = w @ np.prod(bary ** np.array(full), axis=1)
        assert got == pytest.approx(simplex_monomial(full), rel=1e-11)


def test_grundmann_moeller_not_exact_beyond_degree():
    bary, w = grundmann_moeller(1, 3)
    full = (4, 0, 0, 0)
    got = w @ bary[:, 0] ** 4
    assert abs(got - simplex_monomial(full)) > 1e-6


def test_tet_rule_degree_covers_request():
    for d in range(0, 8):
        assert tet_rule_degree(d) >= d
        bary, w = tet_rule(d)
        for a in range(d + 1):
            assert w @ bary[:, 1] ** a == pytest.approx(simplex_monomial((0, a, 0, 0)), rel=1e-11)


def test_triangle_rule_degree_two():
    assert TRI3_WEIGHTS.sum() == pytest.approx(1.0)
    for exps in itertools.product(range(3), repeat=3):
        if sum(exps) > 2:
            continue
        got = TRI3_WEIGHTS @ np.prod(TRI3_BARY ** np.array(exps), axis=1)
        assert got == pytest.approx(simplex_monomial(exps), rel=1e-12)


@pytest.mark.parametrize("npts", [1, 2, 3, 5])
def test_gauss_line(npts):
    t, w = gauss_line(npts)
    assert np.all((t > 0) & (t < 1))
    for k in range(2 * npts):
        assert w @ t ** k == pytest.approx(1.0 / (k + 1), rel=1e-12)
