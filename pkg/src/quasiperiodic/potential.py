"""Real-analytic 1-periodic potentials stored as finite Fourier series.

A potential carries its coefficients f_j for |j| <= J plus a decay envelope
|f_j| <= A exp(-c|j|) that certifies everything not stored. Trig polynomials
(``exact=True``) have no neglected tail at all.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

REALITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class AnalyticPotential:
    coefficients: np.ndarray  # complex, index j + J for j = -J..J
    envelope_amplitude: float
    decay_rate: float
    exact: bool = False
    name: str = ""

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim != 1 or len(c) % 2 != 1:
            raise ValueError("coefficients must be a 1-d array of odd length (j = -J..J)")
        object.__setattr__(self, "coefficients", c)
        if self.decay_rate <= 0:
            raise ValueError("decay rate must be positive")
        if self.envelope_amplitude < 0:
            raise ValueError("envelope amplitude must be nonnegative")
        scale = 1.0 + np.abs(c).sum()
        if np.max(np.abs(c - np.conj(c[::-1])), initial=0.0) > REALITY_TOL * scale:
            raise ValueError("coefficients violate the reality constraint f_{-j} = conj(f_j)")
        j = np.abs(self.indices)
        env = self.envelope_amplitude * np.exp(-self.decay_rate * j)
        if np.any(np.abs(c) > env * (1 + 1e-12) + 1e-300):
            raise ValueError("decay envelope does not dominate the stored coefficients")

    @property
    def J(self) -> int:
        return (len(self.coefficients) - 1) // 2

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.J, self.J + 1)

    def coefficient(self, j: int) -> complex:
        if abs(j) > self.J:
            return 0j
        return complex(self.coefficients[j + self.J])

    def envelope_tail(self, K: int) -> float:
        """Sum of A exp(-c|j|) over |j| > K, in closed form."""
        r = math.exp(-self.decay_rate)
        return 2.0 * self.envelope_amplitude * r ** (K + 1) / (1.0 - r)

    def tail_beyond(self, K: int) -> float:
        """Certified bound on sum_{|j|>K} |f_j| of the underlying function."""
        j = np.abs(self.indices)
        stored = float(np.abs(self.coefficients[j > K]).sum())
        if self.exact:
            return stored
        return stored + self.envelope_tail(max(K, self.J))

    @property
    def sup_bound(self) -> float:
        return self.tail_beyond(-1)

    @property
    def degree(self) -> int:
        nz = np.nonzero(np.abs(self.coefficients) > 0)[0]
        if len(nz) == 0:
            return 0
        return int(np.abs(nz - self.J).max())

    @property
    def derivative_bound(self) -> float:
        """sup|f'| <= 2 pi sum |j| |f_j| (stored part only)."""
        return float(2 * np.pi * np.sum(np.abs(self.indices) * np.abs(self.coefficients)))

    def almost_mathieu_coupling(self) -> float | None:
        """lambda if this is exactly 2 lambda cos(2 pi theta), else None."""
        if not self.exact:
            return None
        c = self.coefficients
        mask = np.ones(len(c), bool)
        if self.J >= 1:
            mask[self.J - 1] = mask[self.J + 1] = False
        if np.any(c[mask] != 0):
            return None
        if self.J == 0:
            return 0.0
        lam = c[self.J + 1]
        if lam.imag != 0:
            return None
        return float(lam.real)

    def evaluate(self, theta):
        return evaluate(self, theta)

    def __call__(self, theta):
        return evaluate(self, theta)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "coefficients": [
                [int(j), float(v.real), float(v.imag)]
                for j, v in zip(self.indices, self.coefficients)
                if v != 0
            ],
            "envelope": {"A": self.envelope_amplitude, "c": self.decay_rate},
            "exact": self.exact,
        }


@dataclass(frozen=True, eq=False)
class TruncatedPotential:
    base: AnalyticPotential
    k: int
    potential: AnalyticPotential = field(repr=False)
    tail_bound: float

    @property
    def cutoff(self) -> int:
        return self.k * self.k

    def __call__(self, theta):
        return evaluate(self.potential, theta)


def from_coefficients(coeffs: dict[int, complex], decay_rate: float = 1.0,
                      envelope_amplitude: float | None = None, exact: bool = False,
                      name: str = "") -> AnalyticPotential:
    """Build a potential from {j: f_j}; negative j filled in by conjugation if absent.

    Without an explicit amplitude the tightest A with |f_j| <= A exp(-c|j|) on the
    stored coefficients is used.
    """
    full = dict(coeffs)
    for j, v in coeffs.items():
        full.setdefault(-j, np.conj(v))
    J = max((abs(j) for j in full), default=0)
    arr = np.zeros(2 * J + 1, complex)
    for j, v in full.items():
        arr[j + J] = v
    if envelope_amplitude is None:
        envelope_amplitude = float(np.max(np.abs(arr) * np.exp(decay_rate * np.abs(np.arange(-J, J + 1))), initial=0.0))
    return AnalyticPotential(arr, envelope_amplitude, decay_rate, exact=exact, name=name)


def from_function(func: Callable, J: int, decay_rate: float, n_samples: int | None = None,
                  name: str = "") -> AnalyticPotential:
    """Sample a real periodic function and keep its Fourier coefficients |j| <= J.

    The envelope is fitted to the stored coefficients only, so it certifies the
    neglected tail just as far as the caller's ``decay_rate`` is honest.
    """
    n = n_samples or 8 * (2 * J + 1)
    x = np.arange(n) / n
    fhat = np.fft.fft(np.asarray(func(x), dtype=float)) / n
    coeffs = {j: fhat[j % n] for j in range(0, J + 1)}
    coeffs[0] = coeffs[0].real
    return from_coefficients(coeffs, decay_rate, name=name)


def almost_mathieu(lam: float) -> AnalyticPotential:
    """2 lambda cos(2 pi theta)."""
    lam = float(lam)
    arr = np.array([lam, 0.0, lam], complex)
    # |f_{+-1}| = |lam| <= A e^{-1} with A = e|lam|
    return AnalyticPotential(arr, math.e * abs(lam), 1.0, exact=True, name=f"am:{lam:g}")


def zero_potential() -> AnalyticPotential:
    return AnalyticPotential(np.zeros(1, complex), 0.0, 1.0, exact=True, name="zero")


def evaluate(f: AnalyticPotential, theta):
    """Real part of sum_j f_j exp(2 pi i j theta), theta reduced mod 1."""
    theta = np.mod(np.asarray(theta, dtype=float), 1.0)
    J = f.J
    if J == 0:
        out = np.full(theta.shape, f.coefficients[0].real)
        return out if out.ndim else float(out)
    # real form: f_0 + 2 sum_{j>=1} Re(f_j e^{2 pi i j theta})
    pos = f.coefficients[J + 1:]
    phase = 2 * np.pi * np.multiply.outer(theta, np.arange(1, J + 1))
    out = f.coefficients[J].real + 2 * (np.cos(phase) @ pos.real - np.sin(phase) @ pos.imag)
    return out if np.ndim(out) else float(out)


def evaluate_complex(f: AnalyticPotential, theta):
    """Full complex sum, used to audit the reality constraint."""
    theta = np.mod(np.asarray(theta, dtype=float), 1.0)
    phase = np.exp(2j * np.pi * np.multiply.outer(theta, f.indices))
    return phase @ f.coefficients


def truncate(f: AnalyticPotential, k: int) -> TruncatedPotential:
    """Fourier truncation at |j| <= k^2 with a certified sup-norm tail bound."""
    if k < 1:
        raise ValueError("k must be >= 1")
    K = k * k
    J = f.J
    if K >= J:
        trunc = f
    else:
        arr = f.coefficients[J - K: J + K + 1]
        trunc = AnalyticPotential(arr, f.envelope_amplitude, f.decay_rate, exact=True,
                                  name=f"{f.name}|k={k}")
    return TruncatedPotential(f, k, trunc, f.tail_beyond(K))


def load_potential(path: str | Path) -> AnalyticPotential:
    """Read a potential description: (j, re, im) triples plus envelope (A, c)."""
    data = json.loads(Path(path).read_text())
    coeffs = {int(j): complex(re, im) for j, re, im in data["coefficients"]}
    env = data.get("envelope", {})
    return from_coefficients(
        coeffs,
        decay_rate=float(env.get("c", 1.0)),
        envelope_amplitude=None if "A" not in env else float(env["A"]),
        exact=bool(data.get("exact", False)),
        name=data.get("name", Path(path).stem),
    )


def save_potential(f: AnalyticPotential, path: str | Path) -> None:
    Path(path).write_text(json.dumps(f.to_dict(), indent=2) + "\n")


def parse_potential(spec: str) -> AnalyticPotential:
    """``am:<lambda>``, ``zero``, or a path to a potential description file."""
    if spec.startswith("am:"):
        return almost_mathieu(float(spec[3:]))
    if spec == "zero":
        return zero_potential()
    return load_potential(spec)
