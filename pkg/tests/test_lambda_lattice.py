from __future__ import annotations

import pytest

from subfactorlab.lambda_lattice import (
    RegimeError,
    build_tlj_lattice,
    check_commutant_reconstruction,
    check_commuting_square,
    check_standardness,
    verify_lattice,
)
from subfactorlab.tl_diagram import TLError, catalan


@pytest.fixture(scope="module")
def lat():
    return build_tlj_lattice(2.3, 4)


def test_corner_cells_are_full_tl(lat):
    for j in range(lat.j_max + 1):
        assert lat.dim(0, j) == catalan(j)


def test_diagonal_and_near_diagonal_are_scalars(lat):
    for j in range(lat.j_max + 1):
        assert lat.dim(j, j) == 1
    for j in range(1, lat.j_max + 1):
        assert lat.dim(j - 1, j) == 1


def test_dims_depend_on_width(lat):
    # A_{i,j} is generated by j-i-1 projections, so it is a copy of TL_{j-i}
    for (i, j), cell in lat.cells.items():
        if j - i >= 1:
            assert cell.dim == catalan(j - i)


def test_commuting_squares(lat):
    for j in range(lat.j_max):
        for i in range(j + 1):
            assert check_commuting_square(lat, i, j).passed


def test_standardness_and_commutants(lat):
    assert check_standardness(lat).passed
    assert check_commutant_reconstruction(lat).passed


def test_full_suite_small():
    rep = verify_lattice(build_tlj_lattice(2.5, 4))
    assert rep.passed, rep.summary()


def test_regime_and_cap():
    with pytest.raises(RegimeError):
        build_tlj_lattice(1.5, 3)
    with pytest.raises(TLError):
        build_tlj_lattice(2.3, 8)
