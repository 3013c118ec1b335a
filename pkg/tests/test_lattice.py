from __future__ import annotations

import math

import numpy as np
import pytest

from lingrowth.errors import InvalidParameterError
from lingrowth.lattice import (
    MassField,
    SparseField,
    ball,
    from_dense,
    origin,
    quadratic_form,
    unit_vectors,
)


def test_unit_vectors_order_positive_before_negative() -> None:
    assert unit_vectors(2) == [(1, 0), (-1, 0), (0, 1), (0, -1)]


def test_ball_counts_l1_sites() -> None:
    assert len(ball(1, 3)) == 7
    assert len(ball(2, 2)) == 13
    assert len(ball(3, 1)) == 7
    assert ball(2, 0) == [origin(2)]


def test_sparse_field_drops_zeros_and_sorts() -> None:
    f = SparseField(1, {(2,): 1.0, (0,): 0.0, (-1,): -3.0})
    assert list(f) == [(-1,), (2,)]
    assert f[(0,)] == 0.0
    assert len(f) == 2


def test_sparse_field_rejects_non_finite_and_wrong_dimension() -> None:
    with pytest.raises(InvalidParameterError):
        SparseField(1, {(0,): math.inf})
    with pytest.raises(InvalidParameterError):
        SparseField(2, {(0,): 1.0})


def test_mass_field_rejects_negative_values() -> None:
    with pytest.raises(InvalidParameterError, match="negative"):
        MassField(1, {(0,): -0.5})


def test_convolution_matches_hand_computation() -> None:
    f = SparseField(1, {(0,): 1.0, (1,): 2.0})
    h = SparseField(1, {(0,): 3.0, (-1,): -1.0})
    conv = f.convolve(h)
    assert conv.as_dict() == {"-1": -1.0, "0": 3.0 - 2.0, "1": 6.0}


def test_convolution_keeps_mass_type_only_for_nonnegative_inputs() -> None:
    a = MassField(1, {(0,): 0.5, (1,): 0.5})
    assert isinstance(a.convolve(a), MassField)
    signed = a.add(SparseField.delta(1), factor=-1.0)
    assert not isinstance(signed, MassField)
    assert signed[(0,)] == pytest.approx(-0.5)


def test_reflect_and_symmetry() -> None:
    f = SparseField(2, {(1, 0): 1.0, (0, 2): 3.0})
    r = f.reflect()
    assert r[(-1, 0)] == 1.0
    assert r[(0, -2)] == 3.0
    assert not f.is_symmetric()
    assert f.add(r).is_symmetric()


def test_dense_round_trip() -> None:
    f = MassField(2, {(0, 0): 0.25, (1, -1): 0.5, (-2, 0): 0.25})
    arr = f.to_dense(2)
    assert arr.shape == (5, 5)
    assert arr[2, 2] == 0.25
    back = from_dense(arr, mass=True)
    assert isinstance(back, MassField)
    assert back == f


def test_to_dense_drops_sites_outside_the_box() -> None:
    f = SparseField(1, {(5,): 1.0, (0,): 2.0})
    assert np.array_equal(f.to_dense(1), np.array([0.0, 2.0, 0.0]))


def test_quadratic_form_equals_inner_product_with_convolution() -> None:
    g = MassField(1, {(0,): 2.0, (1,): 1.0, (-1,): 1.0})
    f = MassField(1, {(0,): 0.5, (1,): 0.25, (3,): 0.25})
    assert quadratic_form(g, f) == pytest.approx(g.convolve(f).inner(f))


def test_totals_and_radius() -> None:
    f = SparseField(2, {(1, 1): -1.0, (0, 3): 2.0})
    assert f.total() == 1.0
    assert f.abs_total() == 3.0
    assert f.sum_squares() == 5.0
    assert f.max_value() == 2.0
    assert f.radius() == 3
    assert SparseField.zero(2).radius() == 0
