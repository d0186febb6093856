"""Band spectra, transfer cocycles and Lyapunov exponents for quasiperiodic Schrodinger operators."""

from .bands import BandComputationError, BandSet, fixed_theta_spectrum, hausdorff_distance, union_spectrum
from .cocycle import TransferMatrix, det_poly, n_step, truncated_det_poly
from .lyapunov import LyapunovEstimate, gamma_mu, gamma_norm_average
from .potential import AnalyticPotential, almost_mathieu, parse_potential, truncate, zero_potential
from .rationals import ContinuedFraction, Convergent, cf_expand, convergents, parse_frequency

__version__ = "0.1.0"
