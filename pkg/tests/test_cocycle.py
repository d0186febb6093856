import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import dense_tridiagonal_det, plain_product
from quasiperiodic.cocycle import (
    TransferMatrix,
    det_poly,
    growth_constant,
    log_abs_det_poly,
    log_abs_truncated_det_poly,
    n_step,
    one_step,
    transfer_log_abs_entries,
    transfer_log_norms,
    truncated_det_poly,
    truncation_error_bound,
    truncation_unreliable,
)
from quasiperiodic.potential import almost_mathieu, from_coefficients, from_function, zero_potential

GOLDEN = (math.sqrt(5) - 1) / 2


def random_potential(rng, J=3):
    coeffs = {j: complex(rng.normal(), rng.normal()) * math.exp(-j) for j in range(1, J + 1)}
    coeffs[0] = rng.normal()
    return from_coefficients(coeffs, decay_rate=1.0, exact=True)


def test_one_step_examples():
    assert one_step(zero_potential(), GOLDEN, 0.0, 0.0, 0).mantissa == ((0.0, -1.0), (1.0, 0.0))
    m = one_step(almost_mathieu(1), GOLDEN, 0.0, 2.0, 0).to_array()
    assert np.allclose(m, [[0, -1], [1, 0]])
    assert np.allclose(one_step(almost_mathieu(2), 0.5, 0.0, 0.0, 1).to_array(), [[4, -1], [1, 0]])


def test_n_step_one_is_one_step():
    f = almost_mathieu(1.7)
    assert np.allclose(n_step(f, GOLDEN, 0.3, 0.4, 1).to_array(), one_step(f, GOLDEN, 0.3, 0.4, 0).to_array())


def test_free_rotation_order_four():
    assert np.allclose(n_step(zero_potential(), GOLDEN, 0.0, 0.0, 4).to_array(), np.eye(2), atol=1e-15)


def test_n_step_rejects_zero():
    with pytest.raises(ValueError):
        n_step(zero_potential(), GOLDEN, 0.0, 0.0, 0)


def test_determinant_survives_long_hyperbolic_products():
    T = n_step(almost_mathieu(3), GOLDEN, 0.1, 0.5, 10_000)
    assert abs(T.det - 1) <= 1e-9
    assert math.isfinite(T.log_norm) and T.log_norm > 1000


def test_n_step_matches_plain_product():
    rng = np.random.default_rng(5)
    for _ in range(20):
        f = random_potential(rng)
        th, E, n = rng.random(), rng.uniform(-4, 4), int(rng.integers(1, 60))
        T = n_step(f, GOLDEN, th, E, n).to_array()
        P = plain_product(f, GOLDEN, th, E, n)
        assert np.linalg.norm(T - P) <= 1e-10 * np.linalg.norm(P)


def test_transfer_matrix_from_array():
    T = TransferMatrix.from_array([[2.0, 1.0], [3.0, 2.0]])
    assert T.det == 1.0 and T.trace == 4.0
    assert T.log_norm == pytest.approx(0.5 * math.log(18))


def test_det_poly_small_cases():
    f = almost_mathieu(1)
    assert det_poly(f, GOLDEN, 0.3, 0.7, 0) == 1.0
    expected = (0 - 2) * (0 - 2 * math.cos(2 * math.pi * GOLDEN)) - 1
    assert det_poly(f, GOLDEN, 0.0, 0.0, 2) == pytest.approx(expected)
    dense = np.linalg.det(np.array([[-2, -1], [-1, -2 * math.cos(2 * math.pi * GOLDEN)]]))
    assert det_poly(f, GOLDEN, 0.0, 0.0, 2) == pytest.approx(dense)


def test_det_poly_k12_dense_oracle():
    rng = np.random.default_rng(12)
    f = random_potential(rng)
    th, E = rng.random(), rng.uniform(-3, 3)
    assert det_poly(f, GOLDEN, th, E, 12) == pytest.approx(dense_tridiagonal_det(f, GOLDEN, th, E, 12), rel=1e-8)


def test_truncated_det_poly_examples():
    f = almost_mathieu(2)
    for k in (1, 4, 9):
        for th in (0.0, 0.37):
            z = np.exp(2j * np.pi * th)
            assert abs(truncated_det_poly(f, GOLDEN, z, 0.3, k)) == pytest.approx(abs(det_poly(f, GOLDEN, th, 0.3, k)))
    assert truncated_det_poly(zero_potential(), GOLDEN, 1.0, 1.25, 1) == pytest.approx(1.25)


def test_truncated_det_poly_rejects_off_circle():
    with pytest.raises(ValueError):
        truncated_det_poly(almost_mathieu(1), GOLDEN, 1.1, 0.0, 3)
    with pytest.raises(ValueError):
        truncated_det_poly(almost_mathieu(1), GOLDEN, 1.0, 0.0, 0)


def test_truncation_error_propagation():
    f = from_function(lambda t: np.exp(np.cos(2 * np.pi * t)), 20, 1.0)
    for k in (1, 2, 3):
        for th in (0.0, 0.21, 0.66):
            diff = abs(abs(truncated_det_poly(f, GOLDEN, np.exp(2j * np.pi * th), 0.5, k))
                       - abs(det_poly(f, GOLDEN, th, 0.5, k)))
            assert diff <= truncation_error_bound(f, GOLDEN, th, 0.5, k) + 1e-12
    assert not truncation_unreliable(f, GOLDEN, 0.21, 0.5, 3)
    assert truncation_error_bound(almost_mathieu(2), GOLDEN, 0.2, 0.0, 5) == 0


def test_vectorized_paths_agree_with_scalar():
    f = almost_mathieu(1.4)
    th = np.linspace(0, 1, 9, endpoint=False)
    logs = log_abs_det_poly(f, GOLDEN, th, 0.2, 40)
    for t, l in zip(th, logs):
        assert l == pytest.approx(math.log(abs(det_poly(f, GOLDEN, t, 0.2, 40))), rel=1e-10)
    norms = transfer_log_norms(f, GOLDEN, th, 0.2, [5, 40])
    entries = transfer_log_abs_entries(f, GOLDEN, th, 0.2, 40)
    for i, t in enumerate(th):
        T = n_step(f, GOLDEN, t, 0.2, 40)
        assert norms[1, i] == pytest.approx(T.log_norm, rel=1e-10)
        assert np.allclose(entries[:, i], T.log_abs_entries.ravel(), rtol=1e-8)
        assert norms[0, i] == pytest.approx(n_step(f, GOLDEN, t, 0.2, 5).log_norm, rel=1e-10)
    assert np.allclose(log_abs_truncated_det_poly(f, GOLDEN, th, 0.2, 40), logs)


def test_growth_ceiling():
    f = almost_mathieu(2)
    for k in (5, 10, 20):
        for E in (-3.0, 0.0, 1.7):
            grid = np.arange(8 * k * k) / (8 * k * k)
            assert log_abs_truncated_det_poly(f, GOLDEN, grid, E, k).max() <= k * growth_constant(f, E)


@given(st.integers(0, 2**32 - 1), st.integers(2, 200))
def test_transfer_determinant_identity(seed, k):
    rng = np.random.default_rng(seed)
    f = random_potential(rng, J=2)
    alpha, th, E = rng.random(), rng.random(), rng.uniform(-3, 3)
    T = n_step(f, alpha, th, E, k).to_array()
    P = np.array([[det_poly(f, alpha, th, E, k), -det_poly(f, alpha, th + alpha, E, k - 1)],
                  [det_poly(f, alpha, th, E, k - 1), -det_poly(f, alpha, th + alpha, E, k - 2)]])
    assert np.max(np.abs(T - P)) <= 1e-8 * np.max(np.abs(P))


@given(st.integers(0, 2**32 - 1), st.integers(1, 1000))
def test_determinant_one(seed, n):
    rng = np.random.default_rng(seed)
    f = random_potential(rng)
    assert abs(n_step(f, rng.random(), rng.random(), rng.uniform(-5, 5), n).det - 1) <= 1e-9
