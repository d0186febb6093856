"""Success pattern of the orbit lower bound over k, at energies inside the q=89 bands."""

import argparse
import os
from dataclasses import dataclass

import numpy as np

from quasiperiodic.analysis import lemma1_sweep
from quasiperiodic.bands import union_spectrum
from quasiperiodic.potential import almost_mathieu
from quasiperiodic.rationals import ContinuedFraction


@dataclass
class Config:
    lam: float = 2.0
    eps_prime: float = 0.15
    k_min: int = 6
    k_max: int = 30
    energies: int = 10
    workers: int = os.cpu_count() or 1


def main(cfg: Config) -> None:
    f = almost_mathieu(cfg.lam)
    alpha = ContinuedFraction.named("golden").value
    iv = union_spectrum(f, (55, 89)).intervals
    idx = np.linspace(0, len(iv) - 1, cfg.energies).round().astype(int)
    Es = [0.5 * (iv[i][0] + iv[i][1]) for i in idx]
    sw = lemma1_sweep(f, alpha, 0.0, Es, range(cfg.k_min, cfg.k_max + 1), cfg.eps_prime, workers=cfg.workers)
    print(f"# window constant C = {sw.window_constant:.4g} ({sw.constant_label}); {sw.frequency}")
    print("k,success_frequency")
    for k, v in sw.success_frequency().items():
        print(f"{k},{v:.2f}")
    print(f"# every consecutive triple has a success: {sw.triple_pattern()}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    for name, val in vars(Config()).items():
        ap.add_argument(f"--{name.replace('_', '-')}", type=type(val), default=val)
    main(Config(**vars(ap.parse_args())))
