"""Measure of S(p_n/q_n) along the golden convergents, against 4|1 - |lambda||."""

import argparse
from dataclasses import dataclass

from quasiperiodic.analysis import measure_convergence
from quasiperiodic.potential import almost_mathieu
from quasiperiodic.rationals import ContinuedFraction


@dataclass
class Config:
    lam: float = 2.0
    frequency: str = "golden"
    depth: int = 12
    tol: float = 1e-9


def main(cfg: Config) -> None:
    table = measure_convergence(almost_mathieu(cfg.lam), ContinuedFraction.named(cfg.frequency), cfg.depth, cfg.tol)
    print(table.to_csv(), end="")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lam", type=float, default=Config.lam)
    ap.add_argument("--frequency", default=Config.frequency)
    ap.add_argument("--depth", type=int, default=Config.depth)
    ap.add_argument("--tol", type=float, default=Config.tol)
    main(Config(**vars(ap.parse_args())))
