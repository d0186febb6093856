"""Transfer matrices and the determinant polynomials of finite restrictions of E - H.

Conventions: M_n(theta, E) = [[E - f(alpha n + theta), -1], [1, 0]] and
T_n = M_{n-1} ... M_0. The determinant polynomial of the k-site block starting at
theta obeys P_0 = 1, P_1 = E - f(theta), P_j = (E - f(theta + (j-1) alpha)) P_{j-1} - P_{j-2}.

Large products are carried as (mantissa, log_scale) pairs; whenever a mantissa
exceeds ``RESCALE_AT`` it is divided down and the log goes to the accumulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .potential import AnalyticPotential, evaluate, truncate

RESCALE_AT = 1e100
UNIT_CIRCLE_TOL = 1e-12


@dataclass(frozen=True)
class TransferMatrix:
    """A 2x2 cocycle value stored as exp(log_scale) * mantissa.

    ``det`` is carried separately because for long hyperbolic products the
    determinant cannot be recovered from the entries (ad - bc cancels to noise).
    """

    mantissa: tuple[tuple[float, float], tuple[float, float]]
    log_scale: float = 0.0
    det: float = 1.0

    @classmethod
    def from_array(cls, m) -> "TransferMatrix":
        m = np.asarray(m, dtype=float)
        det = float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
        return cls(((float(m[0, 0]), float(m[0, 1])), (float(m[1, 0]), float(m[1, 1]))), 0.0, det)

    def _entry(self, i, j):
        return self.mantissa[i][j] * math.exp(self.log_scale)

    a11 = property(lambda self: self._entry(0, 0))
    a12 = property(lambda self: self._entry(0, 1))
    a21 = property(lambda self: self._entry(1, 0))
    a22 = property(lambda self: self._entry(1, 1))

    def to_array(self) -> np.ndarray:
        """Actual entries; raises OverflowError if they do not fit a float."""
        return np.array(self.mantissa) * math.exp(self.log_scale)

    @property
    def trace(self) -> float:
        return (self.mantissa[0][0] + self.mantissa[1][1]) * math.exp(self.log_scale)

    @property
    def log_norm(self) -> float:
        """ln of the Frobenius norm."""
        return self.log_scale + math.log(math.hypot(*self.mantissa[0], *self.mantissa[1]))

    @property
    def log_abs_entries(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(np.array(self.mantissa))) + self.log_scale


def site_potentials(f: AnalyticPotential, alpha: float, theta, n: int) -> np.ndarray:
    """f(alpha j + theta) for j = 0..n-1 (theta scalar)."""
    return evaluate(f, theta + alpha * np.arange(n))


def one_step(f: AnalyticPotential, alpha: float, theta: float, E: float, n: int) -> TransferMatrix:
    v = float(evaluate(f, alpha * n + theta))
    return TransferMatrix(((E - v, -1.0), (1.0, 0.0)), 0.0, 1.0)


def n_step(f: AnalyticPotential, alpha: float, theta: float, E: float, n: int) -> TransferMatrix:
    """Ordered product M_{n-1} ... M_0.

    The product is accumulated as T = Q R with Q a rotation and R upper
    triangular, R stored through log|R11|, log|R22| and R12/R11. This keeps both
    the norm and the determinant accurate to O(n eps) relative, with no overflow.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    vs = site_potentials(f, alpha, theta, n)
    c, s = 1.0, 0.0  # Q = [[c, -s], [s, c]]
    l11 = l22 = 0.0
    sign22 = 1.0
    rho = 0.0
    for v in vs:
        a = E - v
        # A = M Q, M = [[a, -1], [1, 0]]
        x = a * c - s
        y = c
        u = -a * s - c
        w = -s
        r11 = math.hypot(x, y)
        cn, sn = x / r11, y / r11
        r12 = cn * u + sn * w
        r22 = -sn * u + cn * w
        rho += (r12 / r11) * sign22 * math.exp(l22 - l11)
        l11 += math.log(r11)
        l22 += math.log(abs(r22))
        if r22 < 0:
            sign22 = -sign22
        c, s = cn, sn
    tail = sign22 * math.exp(l22 - l11)
    m = ((c, c * rho - s * tail), (s, s * rho + c * tail))
    det = sign22 * math.exp(l11 + l22)
    return TransferMatrix(m, l11, det)


def product_trace(v: Sequence[float], E) -> np.ndarray:
    """tr(M_{q-1} ... M_0) for site potentials ``v``, vectorized over E.

    Plain floating point; meant for the short periods used in band computations.
    """
    E = np.asarray(E, dtype=float)
    a = np.ones_like(E)
    b = np.zeros_like(E)
    c = np.zeros_like(E)
    d = np.ones_like(E)
    with np.errstate(over="ignore", invalid="ignore"):
        for vn in v:
            e = E - vn
            a, b, c, d = e * a - c, e * b - d, a, b
    return a + d


def recurrence_scaled(values: np.ndarray, E) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Three-term recurrence along a chain of site potentials.

    ``values`` has shape (k, ...) with values[j] = f at site j. Returns
    (P_k, P_{k-1}, log_scale) with true values exp(log_scale) * mantissa.
    """
    values = np.asarray(values, dtype=float)
    k = values.shape[0]
    shape = np.broadcast_shapes(values.shape[1:], np.shape(E))
    prev = np.zeros(shape)
    cur = np.ones(shape)
    logs = np.zeros(shape)
    for j in range(k):
        prev, cur = cur, (E - values[j]) * cur - prev
        big = np.maximum(np.abs(cur), np.abs(prev))
        over = big > RESCALE_AT
        if np.any(over):
            scale = np.where(over, big, 1.0)
            cur = cur / scale
            prev = prev / scale
            logs = logs + np.log(scale)
    return cur, prev, logs


def det_poly(f: AnalyticPotential, alpha: float, theta: float, E: float, k: int) -> float:
    """det((E - H)_{[0, k-1]}) at phase theta; may overflow to inf for huge k."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return 1.0
    cur, _, logs = recurrence_scaled(site_potentials(f, alpha, theta, k), E)
    with np.errstate(over="ignore"):
        return float(cur * np.exp(logs))


def log_abs_det_poly(f: AnalyticPotential, alpha: float, theta, E: float, k: int) -> np.ndarray:
    """ln|P~_k| vectorized over theta."""
    theta = np.asarray(theta, dtype=float)
    if k == 0:
        return np.zeros(theta.shape)
    cur, _, logs = _orbit_recurrence(f, alpha, theta, E, k)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(cur)) + logs


def _orbit_recurrence(f: AnalyticPotential, alpha: float, theta: np.ndarray, E: float, k: int):
    prev = np.zeros(theta.shape)
    cur = np.ones(theta.shape)
    logs = np.zeros(theta.shape)
    for j in range(k):
        v = evaluate(f, theta + alpha * j)
        prev, cur = cur, (E - v) * cur - prev
        big = np.maximum(np.abs(cur), np.abs(prev))
        over = big > RESCALE_AT
        if np.any(over):
            scale = np.where(over, big, 1.0)
            cur, prev = cur / scale, prev / scale
            logs = logs + np.log(scale)
    return cur, prev, logs


def _check_unit(z):
    if np.any(np.abs(np.abs(z) - 1.0) > UNIT_CIRCLE_TOL):
        raise ValueError("z must lie on the unit circle")


def truncated_det_poly(f: AnalyticPotential, alpha: float, z: complex, E: float, k: int) -> complex:
    """z^{k^3} det((E - H_k)_{[0, k-1]}) with H_k built from the truncation f_k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_unit(z)
    theta = np.angle(z) / (2 * np.pi)
    fk = truncate(f, k).potential
    det = det_poly(fk, alpha, theta, E, k)
    # unit-modulus prefactor z^{k^3}
    turns = (k**3 * theta) % 1.0
    return complex(np.exp(2j * np.pi * turns) * det)


def log_abs_truncated_det_poly(f: AnalyticPotential, alpha: float, theta, E: float, k: int) -> np.ndarray:
    """ln|P_k(e^{2 pi i theta}, E)| vectorized over theta."""
    fk = truncate(f, k).potential
    return log_abs_det_poly(fk, alpha, np.asarray(theta, dtype=float), E, k)


def truncation_error_bound(f: AnalyticPotential, alpha: float, theta: float, E: float, k: int) -> float:
    """Bound on |P_k - P~_k| propagated from the truncation tail through the recurrence.

    The difference e_j of the two recurrences obeys
    e_j = (E - v_j) e_{j-1} - e_{j-2} - delta_j P_{j-1} with |delta_j| <= tail,
    so |e_j| <= (|E| + sup|f|) |e_{j-1}| + |e_{j-2}| + tail |P~_{j-1}|.
    """
    tr = truncate(f, k)
    tau = tr.tail_bound
    if tau == 0:
        return 0.0
    vs = site_potentials(f, alpha, theta, k)
    growth = abs(E) + f.sup_bound
    e_prev, e_cur = 0.0, 0.0
    p_prev, p_cur = 0.0, 1.0
    for v in vs:
        e_prev, e_cur = e_cur, growth * e_cur + e_prev + tau * abs(p_cur)
        p_prev, p_cur = p_cur, (E - v) * p_cur - p_prev
    return e_cur


def truncation_unreliable(f: AnalyticPotential, alpha: float, theta: float, E: float, k: int,
                          fraction: float = 0.1) -> bool:
    """True when the propagated truncation error exceeds ``fraction`` of |P~_k|."""
    return truncation_error_bound(f, alpha, theta, E, k) > fraction * abs(det_poly(f, alpha, theta, E, k))


def transfer_log_norms(f: AnalyticPotential, alpha: float, thetas, E: float,
                       checkpoints: Sequence[int]) -> np.ndarray:
    """ln||T_n(theta, E)||_F at each checkpoint n, vectorized over theta.

    Returns an array of shape (len(checkpoints), len(thetas)).
    """
    thetas = np.asarray(thetas, dtype=float)
    checkpoints = sorted(int(n) for n in checkpoints)
    out = np.empty((len(checkpoints), len(thetas)))
    a = np.ones_like(thetas)
    b = np.zeros_like(thetas)
    c = np.zeros_like(thetas)
    d = np.ones_like(thetas)
    logs = np.zeros_like(thetas)
    idx = 0
    for n in range(1, checkpoints[-1] + 1):
        e = E - evaluate(f, thetas + alpha * (n - 1))
        a, b, c, d = e * a - c, e * b - d, a, b
        norm = np.sqrt(a * a + b * b + c * c + d * d)
        over = norm > RESCALE_AT
        if np.any(over):
            s = np.where(over, norm, 1.0)
            a, b, c, d = a / s, b / s, c / s, d / s
            logs = logs + np.log(s)
            norm = norm / s
        while idx < len(checkpoints) and checkpoints[idx] == n:
            out[idx] = np.log(norm) + logs
            idx += 1
    return out


def transfer_log_abs_entries(f: AnalyticPotential, alpha: float, thetas, E: float, n: int) -> np.ndarray:
    """ln|entries of T_n| vectorized over theta; shape (4, len(thetas)) in order a11, a12, a21, a22."""
    thetas = np.asarray(thetas, dtype=float)
    a = np.ones_like(thetas)
    b = np.zeros_like(thetas)
    c = np.zeros_like(thetas)
    d = np.ones_like(thetas)
    logs = np.zeros_like(thetas)
    for j in range(n):
        e = E - evaluate(f, thetas + alpha * j)
        a, b, c, d = e * a - c, e * b - d, a, b
        big = np.maximum.reduce([np.abs(a), np.abs(b), np.abs(c), np.abs(d)])
        over = big > RESCALE_AT
        if np.any(over):
            s = np.where(over, big, 1.0)
            a, b, c, d = a / s, b / s, c / s, d / s
            logs = logs + np.log(s)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(np.stack([a, b, c, d]))) + logs


def growth_constant(f: AnalyticPotential, E: float) -> float:
    """D = ln(2 + sup|f| + |E|), an empirical ceiling for (1/k) ln|P_k|."""
    return math.log(2.0 + f.sup_bound + abs(E))
