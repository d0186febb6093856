"""One-sided deviation between consecutive approximant spectra, with fitted constants."""

import argparse
from dataclasses import dataclass

from quasiperiodic.analysis import continuity_sweep
from quasiperiodic.potential import almost_mathieu
from quasiperiodic.rationals import ContinuedFraction, convergents


@dataclass
class Config:
    lam: float = 2.0
    first: int = 4  # index of the first convergent (1-based)
    last: int = 12
    tol: float = 1e-9


def main(cfg: Config) -> None:
    cs = convergents(ContinuedFraction.named("golden"), cfg.last)[cfg.first - 1:]
    sw = continuity_sweep(almost_mathieu(cfg.lam), cs, cfg.tol)
    print("p1/q1,p2/q2,delta_alpha,d,d/shape_log3,d/shape_log1,d/sqrt(delta)")
    for r in sw.reports:
        print(f"{r.alpha1[0]}/{r.alpha1[1]},{r.alpha2[0]}/{r.alpha2[1]},{r.delta_alpha:.6e},{r.d:.6e},"
              f"{r.d / r.shape_log3:.4e},{r.d / r.shape_log1:.4e},{r.d / r.shape_holder:.4e}")
    print(f"# uniform c (log^3) = {sw.c:.4e}, c (log^1) = {sw.c_log1:.4e}, c_H = {sw.c_H:.4e}")
    print(f"# log-space fit residuals: log^3 {sw.fit_residual:.3f}, holder {sw.fit_residual_H:.3f}")
    if sw.exponent is not None:
        print(f"# free log-log slope {sw.exponent:.3f} (residual {sw.exponent_residual:.3f}), "
              f"decreasing={sw.decreasing}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lam", type=float, default=Config.lam)
    ap.add_argument("--first", type=int, default=Config.first)
    ap.add_argument("--last", type=int, default=Config.last)
    ap.add_argument("--tol", type=float, default=Config.tol)
    main(Config(**vars(ap.parse_args())))
