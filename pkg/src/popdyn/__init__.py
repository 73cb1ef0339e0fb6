"""Population-level dynamics of independent learners in population games.

Two solvers describe the same system: an agent-based simulator that plays
rounds with a finite population, and a finite-volume solver for the
advection equation governing the density of the learners' parameters.
"""

from .errors import CFLError, ConfigError, DomainError
from .games import ElFarol, MacWindows, PublicGoods, make_game, reward, reward_vector
from .init_dist import Beta, ProductOfIndependent, TruncNormal
from .learners import LearnerSpec, apply_update, drift
from .pde import DensityField, Grid, solve
from .abm import run, run_ensemble
from .analysis import compare

__version__ = "0.1.0"
