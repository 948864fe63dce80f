"""catlattice: coupled cat-map lattices at desk scale.

Weakly coupled hyperbolic torus maps on a periodic lattice, with the full
constructive chain: perturbative conjugation to the uncoupled system, unstable
frame and Lyapunov-matrix expansions, Markov-partition symbolic coding,
telescoped interaction potentials with decimation and cluster expansion, and
orbit-statistics estimators (response coefficients, large deviations).
"""

from .catmap import CatMap, apply_s0, TWO_PI
from .lattice import LatticeGeometry, random_state, uniform_state, state_metric, torus_dist
from .coupling import (Coupling, TrigTerm, DerivativeOrderUnsupported,
                       zero_coupling, sine_coupling, trig_coupling, coupling_by_name)
from .dynamics import apply_S_eps, differential_DS_eps, iterate_orbit, s0_orbit, log_det_DS

__all__ = [
    "CatMap", "apply_s0", "TWO_PI",
    "LatticeGeometry", "random_state", "uniform_state", "state_metric", "torus_dist",
    "Coupling", "TrigTerm", "DerivativeOrderUnsupported",
    "zero_coupling", "sine_coupling", "trig_coupling", "coupling_by_name",
    "apply_S_eps", "differential_DS_eps", "iterate_orbit", "s0_orbit", "log_det_DS",
]

__version__ = "0.1.0"
