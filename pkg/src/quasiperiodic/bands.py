"""Band spectra of periodic approximants and interval-set arithmetic.

For rational alpha = p/q the spectrum at fixed phase is {E : |tr T_q(theta, E)| <= 2}
and the union over phases S(p/q) is {E : min_theta tr <= 2, max_theta tr >= -2}.
For the almost Mathieu potential tr T_q(theta, E) + 2 lambda^q cos(2 pi q theta)
does not depend on theta, which turns the union into two root-finding problems.

Band edges are located by bisection on sign changes. Membership tests are
made noise-aware with a rounding-error bound on the trace, so gaps that close
(double roots of tr -+ 2) merge instead of splitting into spurious slivers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .cocycle import site_potentials
from .potential import AnalyticPotential, almost_mathieu, evaluate

EPS = float(np.finfo(float).eps)
DEFAULT_TOL = 1e-9
MAX_DOUBLINGS = 8


class BandComputationError(RuntimeError):
    """Band edges could not be resolved within the refinement budget."""

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


# --------------------------------------------------------------------------- #
# interval sets


def _normalize(intervals: Iterable[Sequence[float]]) -> tuple[tuple[float, float], ...]:
    ivs = sorted((float(a), float(b)) for a, b in intervals)
    out: list[list[float]] = []
    for a, b in ivs:
        if b < a:
            raise ValueError(f"interval [{a}, {b}] has b < a")
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


@dataclass(frozen=True)
class BandSet:
    """Finite union of disjoint closed intervals, sorted; touching intervals merged."""

    intervals: tuple[tuple[float, float], ...] = ()
    unresolved_gaps: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "intervals", _normalize(self.intervals))

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    @property
    def empty(self) -> bool:
        return not self.intervals

    @property
    def starts(self) -> np.ndarray:
        return np.array([a for a, _ in self.intervals])

    @property
    def ends(self) -> np.ndarray:
        return np.array([b for _, b in self.intervals])

    @property
    def hull(self) -> tuple[float, float]:
        return self.intervals[0][0], self.intervals[-1][1]

    def measure(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    def inflate(self, r: float) -> "BandSet":
        if r < 0:
            raise ValueError("inflation radius must be nonnegative")
        return BandSet([(a - r, b + r) for a, b in self.intervals])

    def union(self, other: "BandSet") -> "BandSet":
        return BandSet(self.intervals + other.intervals)

    def intersection(self, other: "BandSet") -> "BandSet":
        out = []
        i = j = 0
        A, B = self.intervals, other.intervals
        while i < len(A) and j < len(B):
            lo = max(A[i][0], B[j][0])
            hi = min(A[i][1], B[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if A[i][1] < B[j][1]:
                i += 1
            else:
                j += 1
        return BandSet(out)

    def reflect(self) -> "BandSet":
        return BandSet([(-b, -a) for a, b in self.intervals])

    def contains(self, x) -> np.ndarray | bool:
        x = np.asarray(x, dtype=float)
        if self.empty:
            return np.zeros(x.shape, bool) if x.ndim else False
        i = np.searchsorted(self.starts, x, side="right") - 1
        ok = (i >= 0) & (x <= self.ends[np.clip(i, 0, None)])
        return ok if x.ndim else bool(ok)

    def distance(self, x) -> np.ndarray:
        """dist(x, self) for an array of points."""
        if self.empty:
            raise ValueError("distance to an empty BandSet")
        x = np.asarray(x, dtype=float)
        s, e = self.starts, self.ends
        i = np.searchsorted(s, x, side="right") - 1
        left = np.where(i >= 0, np.maximum(x - e[np.clip(i, 0, None)], 0.0), np.inf)
        nxt = np.clip(i + 1, 0, len(s) - 1)
        right = np.where(i + 1 < len(s), np.maximum(s[nxt] - x, 0.0), np.inf)
        return np.minimum(left, right)

    def gaps(self) -> list[tuple[float, float]]:
        return [(self.intervals[i][1], self.intervals[i + 1][0]) for i in range(len(self.intervals) - 1)]

    def merge_gaps(self, min_gap: float) -> "BandSet":
        """Close gaps narrower than ``min_gap``; their midpoints are recorded as unresolved."""
        if not self.intervals:
            return self
        out = [list(self.intervals[0])]
        closed = list(self.unresolved_gaps)
        for a, b in self.intervals[1:]:
            if a - out[-1][1] < min_gap:
                closed.append(0.5 * (a + out[-1][1]))
                out[-1][1] = b
            else:
                out.append([a, b])
        return BandSet([tuple(iv) for iv in out], tuple(closed))

    def symmetric_difference_measure(self, other: "BandSet") -> float:
        return self.union(other).measure() - self.intersection(other).measure()


def measure(bs: BandSet) -> float:
    return bs.measure()


def inflate(bs: BandSet, r: float) -> BandSet:
    return bs.inflate(r)


def one_sided_deviation(A: BandSet, B: BandSet) -> float:
    """sup over x in A of dist(x, B), exact from endpoints.

    On each interval of A, dist(., B) is piecewise linear with interior maxima only
    at midpoints of gaps of B, so checking A's endpoints plus those midpoints that
    fall inside A is exhaustive.
    """
    if A.empty or B.empty:
        raise ValueError("one-sided deviation needs nonempty sets")
    cands = [A.starts, A.ends]
    gaps = B.gaps()
    if gaps:
        mids = np.array([(g0 + g1) / 2 for g0, g1 in gaps])
        cands.append(mids[A.contains(mids)])
    pts = np.concatenate(cands)
    return float(B.distance(pts).max())


def hausdorff_distance(A: BandSet, B: BandSet) -> float:
    if A.empty or B.empty:
        raise ValueError("Hausdorff distance needs nonempty sets")
    return max(one_sided_deviation(A, B), one_sided_deviation(B, A))


# --------------------------------------------------------------------------- #
# traces


def as_pq(pq) -> tuple[int, int]:
    if isinstance(pq, tuple):
        p, q = pq
    elif hasattr(pq, "p") and hasattr(pq, "q"):
        p, q = pq.p, pq.q
    else:
        fr = Fraction(pq)
        p, q = fr.numerator, fr.denominator
    p, q = int(p), int(q)
    if q < 1:
        raise ValueError("q must be positive")
    if math.gcd(p, q) != 1:
        raise ValueError(f"{p}/{q} is not in lowest terms")
    return p, q


def spectral_window(f: AnalyticPotential) -> tuple[float, float]:
    s = f.sup_bound
    return -2.0 - s, 2.0 + s


def trace_with_error(v: Sequence[float], E) -> tuple[np.ndarray, np.ndarray]:
    """tr(M_{q-1} ... M_0) over an array of E, with a rounding-noise estimate.

    The estimate is 2 (q + 2) eps ||T_q||_F. It is a typical size, not a bound: the
    rigorous bound through |M_{q-1}| ... |M_0| grows like (|E| + sup|f|)^q and is
    useless for hyperbolic products.
    """
    E = np.asarray(E, dtype=float)
    a, b, c, d = np.ones_like(E), np.zeros_like(E), np.zeros_like(E), np.ones_like(E)
    with np.errstate(over="ignore", invalid="ignore"):
        for vn in v:
            e = E - vn
            a, b, c, d = e * a - c, e * b - d, a, b
        norm = np.sqrt(a * a + b * b + c * c + d * d)
    return a + d, 2.0 * (len(v) + 2) * EPS * norm


def trace_at(f: AnalyticPotential, pq, theta: float, E):
    """tr T_q(theta, E) at alpha = p/q; vectorized over E."""
    p, q = as_pq(pq)
    tr, _ = trace_with_error(site_potentials(f, p / q, theta, q), E)
    return tr if np.ndim(tr) else float(tr)


@dataclass(frozen=True)
class DiscriminantProbe:
    p: int
    q: int
    E: float
    trace: float
    theta_used: float


def discriminant_probe(f: AnalyticPotential, pq, theta: float, E: float) -> DiscriminantProbe:
    p, q = as_pq(pq)
    return DiscriminantProbe(p, q, float(E), float(trace_at(f, (p, q), theta, E)), float(theta))


# --------------------------------------------------------------------------- #
# sublevel sets by bisection


Level = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


INV_PHI = (math.sqrt(5) - 1) / 2


def _golden_extremum(g: Level, a: np.ndarray, b: np.ndarray, xtol: float, maximize: bool) -> np.ndarray:
    """Golden-section search on many brackets at once, absolute tolerance ``xtol``."""
    sign = -1.0 if maximize else 1.0
    a, b = np.array(a, float), np.array(b, float)
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1 = sign * g(x1)[0]
    f2 = sign * g(x2)[0]
    while np.max(b - a) > xtol:
        left = f1 < f2
        # minimum in [a, x2] when f1 < f2, else in [x1, b]
        a, b = np.where(left, a, x1), np.where(left, x2, b)
        x_old1, x_old2, f_old1, f_old2 = x1, x2, f1, f2
        x1 = np.where(left, b - INV_PHI * (b - a), x_old2)
        x2 = np.where(left, x_old1, a + INV_PHI * (b - a))
        probe = np.where(left, x1, x2)
        fp = sign * g(probe)[0]
        f1 = np.where(left, fp, f_old2)
        f2 = np.where(left, f_old1, fp)
    return 0.5 * (a + b)


def _sublevel_set(g: Level, lo: float, hi: float, tol: float, n_init: int,
                  n_roots: int | None, extremal_roots: bool) -> tuple[BandSet, int]:
    """{E in [lo, hi] : g(E) <= 0} where g returns (value, noise estimate).

    ``n_roots`` is the number of roots of g counted with multiplicity (degree of the
    polynomial), used to decide when the grid has resolved everything. With
    ``extremal_roots`` every local maximum of g is known to be >= 0 (true for
    tr - 2 and -(tr + 2)); a sampled maximum below zero is probed, and if its true
    height stays within rounding noise it is a tangency, i.e. a closed gap.
    Returns the set and the number of tangencies.
    """

    n = n_init
    for _ in range(MAX_DOUBLINGS + 1):
        grid = np.linspace(lo, hi, n)
        G, _ = g(grid)
        inside = G <= 0
        brackets = [(grid[i], grid[i + 1]) for i in np.nonzero(inside[:-1] != inside[1:])[0]]
        tangencies = []
        dG = np.diff(G)
        s = np.sign(dG)
        ext = np.nonzero(s[:-1] * s[1:] < 0)[0] + 1
        is_max = dG[ext - 1] > 0
        all_in = inside[ext - 1] & inside[ext] & inside[ext + 1]
        all_out = ~(inside[ext - 1] | inside[ext] | inside[ext + 1])
        # sampled maximum inside the set may hide a gap; sampled minimum outside, a band
        hidden_gap = ext[is_max & all_in]
        hidden_band = ext[~is_max & all_out]
        if len(hidden_gap):
            x = _golden_extremum(g, grid[hidden_gap - 1], grid[hidden_gap + 1], tol * 1e-2, maximize=True)
            gx, ex = g(x)
            for i, xi, up in zip(hidden_gap, x, gx > ex):
                if up:
                    brackets += [(grid[i - 1], xi), (xi, grid[i + 1])]
                elif extremal_roots:
                    tangencies.append(xi)
        if len(hidden_band):
            x = _golden_extremum(g, grid[hidden_band - 1], grid[hidden_band + 1], tol * 1e-2, maximize=False)
            gx, _ = g(x)
            for i, xi, down in zip(hidden_band, x, gx <= 0):
                if down:
                    brackets += [(grid[i - 1], xi), (xi, grid[i + 1])]
        count = len(brackets) + 2 * len(tangencies)
        if n_roots is None or count == n_roots:
            break
        n = 2 * n - 1
    else:
        raise BandComputationError(
            f"found {count} roots, expected {n_roots}, after refining to {n} grid nodes",
            found=count, expected=n_roots, nodes=n)

    def h(x):
        return g(x)[0]

    start_inside = bool(h(np.array([lo]))[0] <= 0)
    if not brackets:
        return (BandSet([(lo, hi)]) if start_inside else BandSet()), len(tangencies)

    left = np.array([br[0] for br in brackets])
    right = np.array([br[1] for br in brackets])
    left_in = h(left) <= 0
    while np.max(right - left) > tol:
        mid = 0.5 * (left + right)
        mid_in = h(mid) <= 0
        same = mid_in == left_in
        left = np.where(same, mid, left)
        right = np.where(same, right, mid)
    roots = 0.5 * (left + right)
    # entering the set when the left end of the bracket is outside
    order = np.argsort(roots)
    roots, entering = roots[order], ~left_in[order]

    intervals = []
    cur = lo if start_inside else None
    for r, ent in zip(roots, entering):
        if ent:
            if cur is None:
                cur = r
        else:
            if cur is not None:
                intervals.append((cur, r))
                cur = None
    if cur is not None:
        intervals.append((cur, hi))
    return BandSet(intervals), len(tangencies)


def _search_window(f: AnalyticPotential, tol: float) -> tuple[float, float]:
    lo, hi = spectral_window(f)
    pad = max(10 * tol, 1e-9 * (hi - lo))
    return lo - pad, hi + pad


def _level_pair(f: AnalyticPotential, alpha: float, theta_upper: float, theta_lower: float,
                q: int, tol: float) -> BandSet:
    """{tr(theta_upper, E) <= 2} intersected with {tr(theta_lower, E) >= -2}."""
    vu = site_potentials(f, alpha, theta_upper, q)
    vl = site_potentials(f, alpha, theta_lower, q)

    def upper(E):
        tr, err = trace_with_error(vu, E)
        return tr - 2.0, err

    def lower(E):
        tr, err = trace_with_error(vl, E)
        return -(tr + 2.0), err

    lo, hi = _search_window(f, tol)
    n_init = 16 * q + 1
    up, _ = _sublevel_set(upper, lo, hi, tol, n_init, q, True)
    dn, _ = _sublevel_set(lower, lo, hi, tol, n_init, q, True)
    return up.intersection(dn).merge_gaps(2 * tol)


def fixed_theta_spectrum(f: AnalyticPotential, pq, theta: float, tol: float = DEFAULT_TOL) -> BandSet:
    """{E : |tr T_q(theta, E)| <= 2} as at most q disjoint intervals."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    p, q = as_pq(pq)
    bs = _level_pair(f, p / q, theta, theta, q, tol)
    if len(bs) > q:
        raise BandComputationError(f"{len(bs)} bands for period {q}", bands=len(bs), q=q)
    return bs


# --------------------------------------------------------------------------- #
# union over phases


def chambers_phases(lam: float, q: int) -> tuple[float, float]:
    """Phases where the theta-dependent part 2 lambda^q cos(2 pi q theta) is +|.|, -|.|."""
    sign = 1.0 if lam == 0 else math.copysign(1.0, lam) ** q
    half = 0.5 / q
    return (0.0, half) if sign > 0 else (half, 0.0)


def chambers_discriminant(lam: float, pq, E):
    """tr T_q(0, E) + 2 lambda^q, the theta-independent part of the trace."""
    p, q = as_pq(pq)
    return trace_at(almost_mathieu(lam), (p, q), 0.0, E) + 2.0 * lam**q


def chambers_spread(lam: float, pq, E: float, n_theta: int = 64) -> tuple[float, float]:
    """Spread of tr T_q + 2 lambda^q cos(2 pi q theta) over a theta grid, and max |tr T_q|.

    The second value is the scale against which the spread should be judged.
    """
    p, q = as_pq(pq)
    f = almost_mathieu(lam)
    th = np.arange(n_theta) / n_theta
    tr = np.array([trace_at(f, (p, q), t, E) for t in th])
    vals = tr + 2 * lam**q * np.cos(2 * np.pi * q * th)
    return float(vals.max() - vals.min()), float(np.abs(tr).max())


def _chambers_union(lam: float, f: AnalyticPotential, p: int, q: int, tol: float) -> BandSet:
    # tr(theta) = Delta(E) - 2 lambda^q cos(2 pi q theta), so the union condition
    # |Delta| <= 2 + 2|lambda|^q reads tr(theta_a) <= 2 and tr(theta_b) >= -2
    theta_a, theta_b = chambers_phases(lam, q)
    return _level_pair(f, p / q, theta_a, theta_b, q, tol)


@dataclass(frozen=True)
class EnvelopeResult:
    bands: BandSet
    n_theta: int
    stability: float  # measure change at the last doubling


def _trace_grid(vs: np.ndarray, E: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Traces for every (E, theta) pair; vs has shape (q, n_theta)."""
    E = np.asarray(E, dtype=float)[:, None]
    shape = (E.shape[0], vs.shape[1])
    a, b, c, d = np.ones(shape), np.zeros(shape), np.zeros(shape), np.ones(shape)
    with np.errstate(over="ignore", invalid="ignore"):
        for vn in vs:
            e = E - vn[None, :]
            a, b, c, d = e * a - c, e * b - d, a, b
        norm = np.sqrt(a * a + b * b + c * c + d * d)
    return a + d, 2.0 * (vs.shape[0] + 2) * EPS * norm


def _paired_trace(f: AnalyticPotential, alpha: float, q: int, E: np.ndarray, theta: np.ndarray):
    """Trace at the pairs (E[i], theta[i])."""
    v = evaluate(f, theta[:, None] + alpha * np.arange(q)[None, :])
    a, b, c, d = np.ones_like(E), np.zeros_like(E), np.zeros_like(E), np.ones_like(E)
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(q):
            e = E - v[:, j]
            a, b, c, d = e * a - c, e * b - d, a, b
        norm = np.sqrt(a * a + b * b + c * c + d * d)
    return a + d, 2.0 * (q + 2) * EPS * norm


def _envelope_sets(f: AnalyticPotential, p: int, q: int, n_theta: int, tol: float) -> BandSet:
    alpha = p / q
    # tr(theta) has period 1/q in theta (shifting theta by p/q cyclically relabels sites)
    step = 1.0 / (n_theta * q)
    thetas = np.arange(n_theta) * step
    vs = np.stack([site_potentials(f, alpha, t, q) for t in thetas], axis=1)  # (q, n_theta)

    def envelope(E, sign):
        # sign=+1: min over theta, sign=-1: max over theta
        E = np.asarray(E, dtype=float)
        tr, err = _trace_grid(vs, E)
        i = np.argmin(sign * tr, axis=1)
        rows = np.arange(len(E))
        best, best_err = tr[rows, i], err[rows, i]
        th0 = thetas[i]

        def along(th):
            t, e = _paired_trace(f, alpha, q, E, th)
            return sign * t, e

        th = _golden_extremum(along, th0 - step, th0 + step, 1e-3 * step * tol, maximize=False)
        ref, ref_err = _paired_trace(f, alpha, q, E, th)
        better = sign * ref < sign * best
        return np.where(better, ref, best), np.where(better, ref_err, best_err)

    def upper(E):
        tr, err = envelope(E, 1.0)
        return tr - 2.0, err

    def lower(E):
        tr, err = envelope(E, -1.0)
        return -(tr + 2.0), err

    lo, hi = _search_window(f, tol)
    n_init = 16 * q + 1
    up, _ = _sublevel_set(upper, lo, hi, tol, n_init, None, False)
    dn, _ = _sublevel_set(lower, lo, hi, tol, n_init, None, False)
    return up.intersection(dn).merge_gaps(2 * tol)


def envelope_union(f: AnalyticPotential, pq, tol: float = DEFAULT_TOL, n_theta: int | None = None,
                   max_n_theta: int = 1 << 14) -> EnvelopeResult:
    """S(p/q) from the min/max of the trace over a phase grid, doubled until stable."""
    p, q = as_pq(pq)
    n = n_theta or max(64, 8 * q * max(1, f.degree))
    prev = _envelope_sets(f, p, q, n, tol)
    change = math.inf
    while True:
        if 2 * n > max_n_theta:
            raise BandComputationError(
                f"phase envelope not stable within {max_n_theta} samples",
                achieved=change, n_theta=n)
        nxt = _envelope_sets(f, p, q, 2 * n, tol)
        change = abs(nxt.measure() - prev.measure())
        n *= 2
        if change <= 2 * q * tol and len(nxt) == len(prev):
            return EnvelopeResult(nxt, n, change)
        prev = nxt


def union_spectrum(f: AnalyticPotential, pq, tol: float = DEFAULT_TOL, method: str = "auto") -> BandSet:
    """S(p/q), the union over phases of the fixed-phase spectra.

    ``method`` is ``chambers`` (almost Mathieu only), ``envelope``, or ``auto``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    p, q = as_pq(pq)
    lam = f.almost_mathieu_coupling()
    if method == "auto":
        method = "chambers" if lam is not None else "envelope"
    if method == "chambers":
        if lam is None:
            raise ValueError("the Chambers path applies to the almost Mathieu potential only")
        bs = _chambers_union(lam, f, p, q, tol)
    elif method == "envelope":
        bs = envelope_union(f, (p, q), tol).bands
    else:
        raise ValueError(f"unknown method {method!r}")
    return bs


def band_edges_eig(f: AnalyticPotential, pq, theta: float, bloch: float) -> np.ndarray:
    """Eigenvalues of the q-periodic operator with Bloch phase ``bloch`` (0 or pi).

    Independent route to band edges (dense Hermitian eigensolver), for cross-checks.
    """
    p, q = as_pq(pq)
    v = site_potentials(f, p / q, theta, q)
    H = np.diag(v).astype(complex)
    for n in range(q - 1):
        H[n, n + 1] = H[n + 1, n] = 1.0
    ph = np.exp(1j * bloch)
    if q == 1:
        H[0, 0] += 2 * np.cos(bloch)
    else:
        H[q - 1, 0] += ph
        H[0, q - 1] += np.conj(ph)
    return np.linalg.eigvalsh(H)
