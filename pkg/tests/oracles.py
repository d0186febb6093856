"""Independent reference computations used only by the tests."""

import numpy as np

from quasiperiodic.potential import evaluate


def dense_tridiagonal_det(f, alpha, theta, E, k):
    """det of the k x k restriction of E - H, by LU through numpy."""
    if k == 0:
        return 1.0
    v = evaluate(f, theta + alpha * np.arange(k))
    A = np.diag(E - v) - np.eye(k, k=1) - np.eye(k, k=-1)
    return float(np.linalg.det(A))


def plain_product(f, alpha, theta, E, n):
    """M_{n-1} ... M_0 by repeated 2x2 multiplication, no rescaling."""
    T = np.eye(2)
    for j in range(n):
        M = np.array([[E - evaluate(f, alpha * j + theta), -1.0], [1.0, 0.0]])
        T = M @ T
    return T


def indicator_measure(intervals, lo, hi, h=1e-4):
    """Lebesgue measure by counting grid cells whose centre is covered."""
    x = np.arange(lo, hi, h) + h / 2
    cover = np.zeros(len(x), bool)
    for a, b in intervals:
        cover |= (x >= a) & (x <= b)
    return cover.sum() * h, x, cover


def grid_hausdorff(A, B, lo, hi, h=1e-4):
    """Hausdorff distance between two interval unions via covered grid points."""
    _, x, ca = indicator_measure(A, lo, hi, h)
    _, _, cb = indicator_measure(B, lo, hi, h)
    pa, pb = x[ca], x[cb]

    def one_sided(P, Q):
        idx = np.clip(np.searchsorted(Q, P), 1, len(Q) - 1)
        return float(np.minimum(np.abs(P - Q[idx - 1]), np.abs(P - Q[idx])).max())

    return max(one_sided(pa, pb), one_sided(pb, pa))


def _sublevel_from_roots(roots, lo, hi, upper):
    """Set where a monic degree-q polynomial with these roots is <= 0 (upper) or >= 0."""
    r = np.sort(roots)
    q = len(r)
    pts = np.concatenate([[lo], r, [hi]])
    out = []
    for i in range(q + 1):
        # sign on (pts[i], pts[i+1]) is (-1)^(q - i)
        positive = (q - i) % 2 == 0
        if positive != upper:
            out.append((pts[i], pts[i + 1]))
    return out


def am_union_by_eigenvalues(lam, p, q):
    """S(p/q) for almost Mathieu from periodic/antiperiodic eigenvalues at the extremal phases."""
    from quasiperiodic.bands import BandSet, band_edges_eig, chambers_phases
    from quasiperiodic.potential import almost_mathieu

    f = almost_mathieu(lam)
    ta, tb = chambers_phases(lam, q)
    lo, hi = -3 - 2 * abs(lam), 3 + 2 * abs(lam)
    below = BandSet(_sublevel_from_roots(band_edges_eig(f, (p, q), ta, 0.0), lo, hi, upper=True))
    above = BandSet(_sublevel_from_roots(band_edges_eig(f, (p, q), tb, np.pi), lo, hi, upper=False))
    return below.intersection(above)
