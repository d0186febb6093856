"""Lyapunov exponent estimators for the transfer cocycle.

Two routes to the same number: the phase-averaged log-norm of T_n, taken as an
infimum over a schedule of n, and the average of ln max of the four determinant
polynomials that make up T_k (which are exactly its entries).
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .cocycle import transfer_log_abs_entries, transfer_log_norms
from .potential import AnalyticPotential, truncate

DEFAULT_SCHEDULE = (50, 100, 200, 500, 1000, 2000)
DEFAULT_THETA_GRID = 256


@dataclass
class LyapunovEstimate:
    E: float
    alpha: float
    gamma: float
    schedule: list[tuple[int, int, float]]  # (n, theta-grid size, average)
    method: str = "norm-average"
    norm: str = "frobenius"
    uncertainty: float = float("nan")
    monotone_violations: list[int] = field(default_factory=list)
    dropped_points: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "LyapunovEstimate":
        d = json.loads(text)
        d["schedule"] = [tuple(r) for r in d["schedule"]]
        return cls(**d)


def theta_grid(n: int) -> np.ndarray:
    """Equispaced phases, offset by half a cell."""
    return (np.arange(n) + 0.5) / n


def _averages(f, alpha, E, schedule, n_theta):
    logs = transfer_log_norms(f, alpha, theta_grid(n_theta), E, schedule)
    return logs.mean(axis=1) / np.asarray(schedule, float)


def gamma_norm_average(f: AnalyticPotential, alpha: float, E: float,
                       n_schedule: Sequence[int] = DEFAULT_SCHEDULE,
                       n_theta: int = DEFAULT_THETA_GRID) -> LyapunovEstimate:
    """inf over the schedule of the phase average of (1/n) ln||T_n(theta, E)||_F."""
    schedule = [int(n) for n in n_schedule]
    if not schedule:
        raise ValueError("empty schedule")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    if n_theta < 64:
        raise ValueError("theta grid must have at least 64 points")

    avg = _averages(f, alpha, E, schedule, n_theta)
    jitter_allow = 3.0 / math.sqrt(n_theta)
    violations = [schedule[i + 1] for i in range(len(schedule) - 1)
                  if avg[i + 1] > avg[i] + jitter_allow]

    # grid-doubling jitter at the largest n only
    doubled = _averages(f, alpha, E, schedule[-1:], 2 * n_theta)[0]
    spread = 0.5 * abs(avg[-1] - avg[-2]) if len(avg) > 1 else 0.0
    return LyapunovEstimate(
        E=float(E),
        alpha=float(alpha),
        gamma=float(avg.min()),
        schedule=[(n, n_theta, float(a)) for n, a in zip(schedule, avg)],
        method="norm-average",
        uncertainty=float(spread + abs(doubled - avg[-1])),
        monotone_violations=violations,
    )


def gamma_mu(f: AnalyticPotential, alpha: float, E: float, k: int,
             n_theta: int = DEFAULT_THETA_GRID) -> float:
    """(1/k) phase average of ln max(|P_k(t)|, |P_{k-1}(t)|, |P_{k-1}(t+a)|, |P_{k-2}(t+a)|).

    The four polynomials are the entries of T_k built from the truncation f_k,
    so they are read off one rescaled product. Phases where all four vanish are
    dropped with a warning.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    fk = truncate(f, k).potential
    logs = transfer_log_abs_entries(fk, alpha, theta_grid(n_theta), E, k)
    mu = logs.max(axis=0)
    ok = np.isfinite(mu)
    if not ok.all():
        warnings.warn(f"dropped {int((~ok).sum())} phases where mu_k vanished", RuntimeWarning)
    return float(mu[ok].mean() / k)


def _norm_task(args):
    f, alpha, E, schedule, n_theta = args
    return gamma_norm_average(f, alpha, E, schedule, n_theta)


def gamma_sweep(f: AnalyticPotential, alpha: float, energies: Sequence[float],
                n_schedule: Sequence[int] = DEFAULT_SCHEDULE,
                n_theta: int = DEFAULT_THETA_GRID, workers: int = 1) -> list[LyapunovEstimate]:
    """gamma_norm_average over many energies; results come back in input order."""
    tasks = [(f, alpha, float(E), tuple(n_schedule), n_theta) for E in energies]
    if workers <= 1 or len(tasks) < 2:
        return [_norm_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_norm_task, tasks))
