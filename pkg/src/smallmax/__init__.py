"""smallmax: stationary points of min-max problems with a small maximization domain.

Core objects:

- :mod:`smallmax.geometry` -- intervals/boxes/balls, projections, soft thresholding
- :mod:`smallmax.problems` -- oracle bundles, smoothness profiles, built-in objectives
- :mod:`smallmax.surrogate` -- order-k Taylor models of f(x, .) and their error bounds
- :mod:`smallmax.moreau` -- proximal points, Moreau gradients, stationarity reports
- :mod:`smallmax.krylov` -- ball-constrained quadratic maximization via block Lanczos
- :mod:`smallmax.instances` -- analytic hard-instance families and their certificates
- :mod:`smallmax.theory` -- admissible-diameter calculators and regime classification
- :mod:`smallmax.solvers` -- the three surrogate-based FOSP-search algorithms
- :mod:`smallmax.experiment` -- declarative sweep harness with CSV/JSON reports
"""

__version__ = "0.1.0"

from .geometry import Ball, Box, Domain, Interval, WholeSpace, project, soft_threshold
from .problems import (CountingOracle, ProblemInstance, SmoothnessProfile,
                       check_profile_by_sampling, make_ball_cubic, make_intro_example)
from .surrogate import (SurrogateModel, envelope_gap_bound, gradx_error_bound,
                        surrogate_grad_x, surrogate_grad_y, surrogate_value,
                        value_error_bound)
from .moreau import (PrimalOracle, StationarityReport, moreau_grad,
                     primal_from_grid, primal_from_surrogate_grid,
                     primal_from_surrogate_krylov, prox, s_x, verify_fosp)
from .krylov import (KrylovResult, QuadraticForm, approx_max, block_lanczos,
                     krylov_dimension, solve_reduced)
from .instances import (CertificateResult, HardInstanceSpec, build_instance,
                        certificate, closed_form_moreau_grad,
                        surrogate_primal_oracle, true_primal_oracle)
from .theory import (DiameterVerdict, check_eps_threshold, check_theorem1,
                     leading_order_diameter, theorem1_max_diameter)
from .solvers import (RunTrace, SolverConfig, solve, solve_alg1, solve_alg2,
                      solve_alg3)
