"""Right-hand side of the measure upper bound along the convergents, literal and inflated."""

import argparse
from dataclasses import dataclass

from quasiperiodic.analysis import continuity_sweep, spectrum_upper_bound
from quasiperiodic.potential import almost_mathieu
from quasiperiodic.rationals import ContinuedFraction, convergents


@dataclass
class Config:
    lam: float = 2.0
    n_min: int = 5
    n_max: int = 13
    c: float | None = None  # default: fitted from the continuity sweep


def main(cfg: Config) -> None:
    f = almost_mathieu(cfg.lam)
    cf = ContinuedFraction.named("golden")
    c = cfg.c
    if c is None:
        c = continuity_sweep(f, convergents(cf, 9)[5:]).c
    print(f"# c = {c:.4e}")
    print("n,q,measure,second_addend,bound,constructive_bound")
    for n in range(cfg.n_min, cfg.n_max + 1):
        r = spectrum_upper_bound(f, cf, n, c, 0.0)
        print(f"{n},{r.q},{r.measure:.10f},{r.second_addend:.6e},{r.bound:.6f},{r.constructive_bound:.6f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lam", type=float, default=Config.lam)
    ap.add_argument("--n-min", type=int, default=Config.n_min)
    ap.add_argument("--n-max", type=int, default=Config.n_max)
    ap.add_argument("--c", type=float, default=None)
    main(Config(**vars(ap.parse_args())))
