import numpy as np
import pytest

from crwruin import kernels
from crwruin._accel import BACKENDS, resolve_backend

from conftest import REF_CHAIN, PATTERN_CHAIN

needs_numba = pytest.mark.skipif("numba" not in BACKENDS, reason="numba unavailable")


def test_splitmix64_reference_outputs():
    # First three outputs of the SplitMix64 reference generator seeded with 0.
    got = [int(v) for v in kernels.path_seeds(0, 0, 3)]
    assert got == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_path_seeds_are_offset_consistent():
    full = kernels.path_seeds(7, 0, 10)
    assert np.array_equal(full[4:], kernels.path_seeds(7, 4, 6))


def test_cumulative_rows_close_at_one():
    cum = kernels.cumulative_rows([[0.7, 0.3, 0.0], [1.0, 0.0, 0.0], [0.1, 0.2, 0.7]])
    assert cum[0, 1] == 1.0
    assert cum[1, 0] == 1.0 and cum[1, 1] == 1.0
    assert cum[2] == pytest.approx([0.1, 0.3])


def test_resolve_backend_rejects_unknown():
    with pytest.raises(ValueError):
        resolve_backend("cuda")


@needs_numba
@pytest.mark.parametrize("matrix, init, upper, lower", [
    (REF_CHAIN, [0.0, 1.0, 0.0], 3, -2),
    (PATTERN_CHAIN, [0.25, 0.5, 0.25], 2, -4),
    ([[0.6, 0.0, 0.4], [0.5, 0.0, 0.5], [0.3, 0.0, 0.7]], [0.4, 0.0, 0.6], 5, -5),
])
def test_simulate_backends_bit_identical(matrix, init, upper, lower):
    P = np.array(matrix)
    a = kernels.simulate_paths(P, init, upper, lower, 99, 0, 20_000, 10**6, "numba")
    b = kernels.simulate_paths(P, init, upper, lower, 99, 0, 20_000, 10**6, "numpy")
    assert np.array_equal(a[0], b[0])
    assert np.array_equal(a[1], b[1])


@needs_numba
def test_simulate_step_cap_backends_agree():
    P = np.array(REF_CHAIN)
    a = kernels.simulate_paths(P, [0, 1, 0], 20, -20, 5, 0, 2000, 3, "numba")
    b = kernels.simulate_paths(P, [0, 1, 0], 20, -20, 5, 0, 2000, 3, "numpy")
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert (a[0] == kernels.OUT_TRUNCATED).all() and (a[1] == 3).all()


@needs_numba
@pytest.mark.parametrize("matrix, init, upper, lower, horizon", [
    (REF_CHAIN, [0.0, 1.0, 0.0], 1, -1, 15),
    (REF_CHAIN, [0.2, 0.5, 0.3], 2, -1, 12),
    (PATTERN_CHAIN, [0.25, 0.5, 0.25], 2, -2, 14),
])
def test_enumerate_backends_agree(matrix, init, upper, lower, horizon):
    P, init = np.array(matrix), np.array(init)
    a = kernels.enumerate_tree(P, init, upper, lower, horizon, 10**7, "numba")
    b = kernels.enumerate_tree(P, init, upper, lower, horizon, 10**7, "numpy")
    assert a[3] == b[3] and a[4] == b[4]
    assert a[:3] == pytest.approx(b[:3], abs=1e-14)


def test_enumerate_mass_conserved():
    P, init = np.array(REF_CHAIN), np.array([0.2, 0.5, 0.3])
    up, low, unres, _, _ = kernels.enumerate_tree(P, init, 2, -2, 10, 10**7, "numpy")
    assert up + low + unres == pytest.approx(1.0, abs=1e-13)
