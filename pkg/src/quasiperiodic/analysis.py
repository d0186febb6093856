"""Numerical experiments on approximant spectra, determinant growth and continuity in alpha.

Everything here is empirical evidence at finite resolution. Constants that only
exist as existential quantifiers in the theory (window constant, continuity
constant) are fitted from data and labelled as such.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .bands import BandComputationError, BandSet, DEFAULT_TOL, one_sided_deviation, union_spectrum
from .cocycle import log_abs_truncated_det_poly
from .lyapunov import LyapunovEstimate, gamma_norm_average
from .potential import AnalyticPotential
from .rationals import ContinuedFraction, Convergent, PrecisionWarning, cf_expand, convergents

OMEGA_BOUND = 50
CHUNK = 1 << 16


def _gamma_value(f, alpha, E, gamma) -> float:
    if gamma is None:
        return gamma_norm_average(f, alpha, E).gamma
    if isinstance(gamma, LyapunovEstimate):
        return gamma.gamma
    return float(gamma)


def _as_cf(alpha) -> ContinuedFraction:
    if isinstance(alpha, ContinuedFraction):
        return alpha
    return cf_expand(float(alpha), 40)


def frequency_label(alpha, bound: int = OMEGA_BOUND) -> str:
    """Label a frequency as bounded type (inside Omega) or not, from its known digits."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PrecisionWarning)
        cf = _as_cf(alpha)
    if cf.terminated:
        return "rational"
    B = cf.bound
    if B <= bound:
        return f"bounded-type: max a_i = {B} over {len(cf)} terms"
    return f"outside Omega: a_i reaches {B} within {len(cf)} terms"


# --------------------------------------------------------------------------- #
# lower bound along the orbit


@dataclass
class Lemma1Report:
    k: int
    eps_prime: float
    E: float
    theta: float
    window_length: int
    found_m: int | None
    log_value_at_m: float | None
    log_max: float
    log_threshold: float
    gamma: float
    scanned: int
    window_constant: float | None = None
    constant_label: str = "supplied"

    @property
    def success(self) -> bool:
        return self.found_m is not None

    @property
    def threshold(self) -> float:
        return math.exp(self.log_threshold)

    @property
    def max_value(self) -> float:
        return math.exp(self.log_max)


def lemma1_search(f: AnalyticPotential, alpha: float, theta: float, E: float, k: int,
                  eps_prime: float, window: int, gamma=None, full_scan: bool = False) -> Lemma1Report:
    """Scan m = 0..window-1 for |P_k(e^{2 pi i (theta + m alpha)}, E)| >= e^{(gamma - eps') k}.

    Stops at the first chunk containing a hit unless ``full_scan``; ``log_max`` is
    the largest value over the scanned range.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if eps_prime <= 0:
        raise ValueError("eps' must be positive")
    if window < 1:
        raise ValueError("window must be positive")
    g = _gamma_value(f, alpha, E, gamma)
    log_thr = (g - eps_prime) * k
    found = None
    found_val = None
    log_max = -math.inf
    scanned = 0
    for start in range(0, window, CHUNK):
        m = np.arange(start, min(window, start + CHUNK))
        vals = log_abs_truncated_det_poly(f, alpha, np.mod(theta + m * alpha, 1.0), E, k)
        scanned += len(m)
        log_max = max(log_max, float(vals.max()))
        if found is None:
            hits = np.nonzero(vals >= log_thr)[0]
            if len(hits):
                found = int(m[hits[0]])
                found_val = float(vals[hits[0]])
        if found is not None and not full_scan:
            break
    return Lemma1Report(k, eps_prime, float(E), float(theta), int(window), found, found_val,
                        log_max, log_thr, g, scanned)


@dataclass
class Lemma1Sweep:
    ks: list[int]
    energies: list[float]
    window_constant: float
    constant_label: str
    reports: list[Lemma1Report]
    frequency: str

    def success_matrix(self) -> np.ndarray:
        """(energy, k) boolean matrix of hits within the fixed window."""
        nk = len(self.ks)
        return np.array([r.success for r in self.reports]).reshape(len(self.energies), nk)

    def success_frequency(self) -> dict[int, float]:
        s = self.success_matrix()
        return {k: float(s[:, i].mean()) for i, k in enumerate(self.ks)}

    def triple_pattern(self) -> bool:
        """Every run of three consecutive k has at least one hit, for every energy."""
        s = self.success_matrix()
        return bool(all(s[:, i:i + 3].any(axis=1).all() for i in range(len(self.ks) - 2)))

    def to_json(self) -> str:
        d = asdict(self)
        d["success_frequency"] = self.success_frequency()
        d["triple_pattern"] = self.triple_pattern()
        return json.dumps(d)


def _lemma1_task(args):
    return lemma1_search(*args)


def lemma1_sweep(f: AnalyticPotential, alpha: float, theta: float, energies: Sequence[float],
                 ks: Sequence[int], eps_prime: float, window_constant: float | None = None,
                 calibration_constant: float = 30.0, gammas: Sequence[float] | None = None,
                 workers: int = 1) -> Lemma1Sweep:
    """Growth-window searches over (E, k) with one window constant C, window = ceil(C k^3).

    Without ``window_constant`` C is fitted on the first energy alone (smallest C
    that covers its hits inside a ceil(calibration_constant k^3) scan), then held
    fixed for every energy.
    """
    ks = [int(k) for k in ks]
    energies = [float(E) for E in energies]
    if gammas is None:
        gammas = [gamma_norm_average(f, alpha, E).gamma for E in energies]
    label = "supplied"
    if window_constant is None:
        label = "fitted"
        calib = [lemma1_search(f, alpha, theta, energies[0], k, eps_prime,
                               math.ceil(calibration_constant * k**3), gammas[0]) for k in ks]
        hits = [(r.found_m + 1) / r.k**3 for r in calib if r.success]
        window_constant = max(hits) if hits else calibration_constant
    tasks = [(f, alpha, theta, E, k, eps_prime, max(1, math.ceil(window_constant * k**3)), g)
             for E, g in zip(energies, gammas) for k in ks]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            reports = list(ex.map(_lemma1_task, tasks))
    else:
        reports = [_lemma1_task(t) for t in tasks]
    for r in reports:
        r.window_constant = window_constant
        r.constant_label = label
    return Lemma1Sweep(ks, energies, float(window_constant), label, reports, frequency_label(alpha))


# --------------------------------------------------------------------------- #
# upper bound on the circle


@dataclass
class Lemma2Report:
    k: int
    eps: float
    E: float
    gamma: float
    z_grid: int
    log_max: float
    log_bound: float
    passed: bool
    doubled_ratio: float  # max on the doubled grid / max on the grid
    doubling_stable: bool

    @property
    def max_value(self) -> float:
        return math.exp(self.log_max)

    @property
    def bound(self) -> float:
        return math.exp(self.log_bound)


def lemma2_sup(f: AnalyticPotential, alpha: float, E: float, k: int, eps: float,
               z_grid: int | None = None, gamma=None) -> Lemma2Report:
    """max over an equispaced z-grid of |P_k(z, E)| against e^{(gamma + eps) k}.

    The grid defaults to 8 k^2 points; the maximum is recomputed on the doubled
    grid and the run is marked unstable if the two differ by more than 2%.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = z_grid or 8 * k * k
    g = _gamma_value(f, alpha, E, gamma)
    lm = float(log_abs_truncated_det_poly(f, alpha, np.arange(n) / n, E, k).max())
    lm2 = float(log_abs_truncated_det_poly(f, alpha, np.arange(2 * n) / (2 * n), E, k).max())
    ratio = math.exp(lm2 - lm)
    top = max(lm, lm2)
    bound = (g + eps) * k
    return Lemma2Report(k, eps, float(E), g, n, top, bound, top <= bound, ratio, abs(ratio - 1) <= 0.02)


# --------------------------------------------------------------------------- #
# measure convergence


@dataclass
class ConvergenceRow:
    n: int
    p: int
    q: int
    measure: float
    residual: float | None
    bands: int
    failed: bool = False
    error: str = ""


@dataclass
class ConvergenceTable:
    rows: list[ConvergenceRow]
    target: float | None
    tol: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "p", "q", "measure", "residual"])
        for r in self.rows:
            w.writerow([r.n, r.p, r.q, "nan" if r.failed else f"{r.measure:.12g}",
                        "" if r.residual is None else f"{r.residual:.6g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def measure_target(f: AnalyticPotential) -> float | None:
    """4|1 - |lambda|| for almost Mathieu with |lambda| != 1, else None."""
    lam = f.almost_mathieu_coupling()
    if lam is None or abs(lam) == 1:
        return None
    return 4 * abs(1 - abs(lam))


def measure_convergence(f: AnalyticPotential, alpha, depth: int, tol: float = DEFAULT_TOL) -> ConvergenceTable:
    if depth < 2:
        raise ValueError("depth must be >= 2")
    cf = _as_cf(alpha)
    target = measure_target(f)
    rows = []
    for c in convergents(cf, depth):
        try:
            bs = union_spectrum(f, (c.p, c.q), tol)
        except BandComputationError as exc:
            rows.append(ConvergenceRow(c.n, c.p, c.q, float("nan"), None, 0, True, str(exc)))
            continue
        m = bs.measure()
        rows.append(ConvergenceRow(c.n, c.p, c.q, m, None if target is None else abs(m - target), len(bs)))
    return ConvergenceTable(rows, target, tol)


# --------------------------------------------------------------------------- #
# continuity in the frequency


def log_shape(delta: float, power: int = 3) -> float:
    """|delta| |ln|delta||^power."""
    delta = abs(delta)
    return delta * abs(math.log(delta)) ** power


@dataclass
class ContinuityReport:
    alpha1: tuple[int, int]
    alpha2: tuple[int, int]
    delta_alpha: float
    d: float
    shape_log3: float
    shape_log1: float
    shape_holder: float
    c: float
    c_H: float
    bound_theorem3: float
    bound_holder_half: float
    resolution_limited: bool = False


def continuity_probe(f: AnalyticPotential, pair, tol: float = DEFAULT_TOL,
                     spectra: tuple[BandSet, BandSet] | None = None) -> ContinuityReport:
    """One-sided deviation of S(p_n/q_n) from S(p_{n+1}/q_{n+1}) and the two bound shapes.

    ``c`` and ``c_H`` are the ratios d / shape for this pair alone; a sweep
    replaces them by a uniform constant.
    """
    (p1, q1), (p2, q2) = [(c.p, c.q) if isinstance(c, Convergent) else tuple(c) for c in pair]
    if spectra is None:
        spectra = (union_spectrum(f, (p1, q1), tol), union_spectrum(f, (p2, q2), tol))
    A, B = spectra
    d = one_sided_deviation(A, B)
    delta = abs(p1 / q1 - p2 / q2)
    if delta == 0:
        return ContinuityReport((p1, q1), (p2, q2), 0.0, d, 0.0, 0.0, 0.0, math.nan, math.nan, 0.0, 0.0,
                                resolution_limited=tol >= d / 10)
    s3, s1, sh = log_shape(delta, 3), log_shape(delta, 1), math.sqrt(delta)
    c, cH = d / s3, d / sh
    return ContinuityReport((p1, q1), (p2, q2), delta, d, s3, s1, sh, c, cH, c * s3, cH * sh,
                            resolution_limited=tol >= d / 10)


@dataclass
class ContinuitySweep:
    reports: list[ContinuityReport]
    c: float  # smallest uniform constant, log^3 shape
    c_H: float  # smallest uniform constant, Holder-1/2 shape
    c_log1: float  # smallest uniform constant, almost-Mathieu log^1 shape
    fit_c: float  # least-squares constant in log space (slope fixed at one)
    fit_residual: float  # rms residual of that fit in log space
    fit_c_H: float
    fit_residual_H: float
    exponent: float | None = None  # free log-log slope of d against delta, >= 4 pairs only
    exponent_residual: float | None = None

    @property
    def deviations(self) -> list[float]:
        return [r.d for r in self.reports]

    @property
    def decreasing(self) -> bool:
        d = self.deviations
        return all(b < a for a, b in zip(d, d[1:]))

    def to_json(self) -> str:
        out = asdict(self)
        out["decreasing"] = self.decreasing
        return json.dumps(out)


def _fixed_slope_fit(d, shape):
    r = np.log(np.asarray(d)) - np.log(np.asarray(shape))
    return float(np.exp(r.mean())), float(np.sqrt(np.mean((r - r.mean()) ** 2)))


def continuity_sweep(f: AnalyticPotential, convergent_list: Sequence, tol: float = DEFAULT_TOL) -> ContinuitySweep:
    """Continuity probes over successive convergent pairs with uniform constants."""
    pqs = [(c.p, c.q) if isinstance(c, Convergent) else tuple(c) for c in convergent_list]
    spectra = {pq: union_spectrum(f, pq, tol) for pq in pqs}
    reports = [continuity_probe(f, (a, b), tol, (spectra[a], spectra[b])) for a, b in zip(pqs, pqs[1:])]
    d = [r.d for r in reports]
    s3 = [r.shape_log3 for r in reports]
    sh = [r.shape_holder for r in reports]
    s1 = [r.shape_log1 for r in reports]
    c = max(x / s for x, s in zip(d, s3))
    cH = max(x / s for x, s in zip(d, sh))
    c1 = max(x / s for x, s in zip(d, s1))
    for r in reports:
        r.c, r.c_H = c, cH
        r.bound_theorem3 = c * r.shape_log3
        r.bound_holder_half = cH * r.shape_holder
    fc, fr = _fixed_slope_fit(d, s3)
    fcH, frH = _fixed_slope_fit(d, sh)
    sweep = ContinuitySweep(reports, c, cH, c1, fc, fr, fcH, frH)
    if len(reports) >= 4:
        x = np.log([r.delta_alpha for r in reports])
        y = np.log(d)
        slope, icpt = np.polyfit(x, y, 1)
        sweep.exponent = float(slope)
        sweep.exponent_residual = float(np.sqrt(np.mean((y - slope * x - icpt) ** 2)))
    return sweep


# --------------------------------------------------------------------------- #
# upper bound on |S(alpha)|


@dataclass
class UpperBoundReport:
    n: int
    p: int
    q: int
    delta_alpha: float
    measure: float
    second_addend: float
    delta: float
    bound: float
    inflated_measure: float
    constructive_bound: float


def spectrum_upper_bound(f: AnalyticPotential, alpha, n: int, c: float, delta: float,
                         tol: float = DEFAULT_TOL, spectrum: BandSet | None = None) -> UpperBoundReport:
    """|S(p_n/q_n)| + 2 c q_n |dA ln^3 dA| + delta with dA = |alpha - p_n/q_n|.

    Also returns the constructive variant |inflate(S(p_n/q_n), c |dA ln^3 dA|)| + delta,
    which is never larger.
    """
    if c < 0 or delta < 0:
        raise ValueError("c and delta must be nonnegative")
    cf = _as_cf(alpha)
    conv = convergents(cf, n)[-1]
    bs = spectrum if spectrum is not None else union_spectrum(f, (conv.p, conv.q), tol)
    m = bs.measure()
    dA = abs(cf.value - conv.p / conv.q)
    r = c * log_shape(dA, 3) if dA > 0 else 0.0
    addend = 2 * conv.q * r
    infl = bs.inflate(r).measure()
    return UpperBoundReport(n, conv.p, conv.q, dA, m, addend, delta, m + addend + delta, infl, infl + delta)
