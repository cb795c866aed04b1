"""The reference evaluator against hand-derived values, then the kernels against it."""

import math

import numpy as np
import pytest

from oft3d import oracle
from oft3d.directions import directions_3d
from oft3d.integrals import IntegralParams
from oft3d.measures import compute_measures
from oft3d.transform import CombineMode, combine
from oft3d.volume import Volume


def test_constant():
    a = np.full((9, 9, 9), 2.0, np.float32)
    assert oracle.ref_line_integral(a, (4, 4, 4), (0, 0, 1), 4.0) == pytest.approx(8.0)


def test_impulse():
    a = np.zeros((5, 5, 5), np.float32)
    a[2, 2, 2] = 1.0
    s = 1 / math.sqrt(2)
    assert oracle.ref_line_integral(a, (2, 2, 2), (1, 0, 0), 3.0) == pytest.approx(1.0)
    assert oracle.ref_line_integral(a, (2, 2, 2), (s, s, 0), 3.0) == pytest.approx(1 + 2 * (1 - s) ** 2)


def test_line_off_axis():
    a = np.zeros((9, 9, 9), np.float32)
    a[4, 4, :] = 1.0
    assert oracle.ref_line_integral(a, (4, 4, 4), (1, 0, 0), 6.0) == pytest.approx(6.0)
    assert oracle.ref_line_integral(a, (4, 4, 4), (0, 1, 0), 6.0) == pytest.approx(1.0)


def test_alignment_uniform_field():
    n = 7
    f1 = np.full((n, n, n), 1.0, np.float32)
    f2 = np.zeros((n, n, n, 3), np.float32)
    f2[..., 0] = 1.0
    assert oracle.ref_alignment_integral(f1, f2, (3, 3, 3), (1, 0, 0), 4.0) == pytest.approx(4.0)
    assert oracle.ref_alignment_integral(f1, f2, (3, 3, 3), (0, 1, 0), 4.0) == pytest.approx(-4.0)


def test_size_limit():
    with pytest.raises(ValueError):
        oracle.ref_measures(np.zeros((40, 40, 40)), directions_3d(8).vectors, 3.0)


@pytest.mark.parametrize("seed", range(50))
def test_kernels_match_oracle(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(12, 12, 12)).astype(np.float32)
    dirs = directions_3d(12)
    stack, field = compute_measures(Volume(a), dirs, IntegralParams(4.0))
    ref = oracle.ref_measures(a, dirs.vectors, 4.0)
    for name, w in stack.items():
        err = np.abs(w.data - ref[name]) / np.maximum(np.abs(ref[name]), 1e-3)
        assert err.max() <= 1e-5, name
    for mode in CombineMode:
        got = combine(stack, mode).data
        want = oracle.ref_combine(ref, mode.factors)
        assert np.allclose(got, want, rtol=1e-5, atol=1e-6 * np.abs(want).max())
