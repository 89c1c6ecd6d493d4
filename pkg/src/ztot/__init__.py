"""Entropic optimal transport on finite metric spaces, solved by matrix
scaling at finite inverse temperature and annealed to the zero-temperature
limit, where the Gibbs plans recover optimal transport plans and the scaled
potentials recover Kantorovich dual solutions."""

from .annealing import (Schedule, Trajectory, ZeroTempResult, anneal,
                        default_schedule, extract_limit, pressure_excess)
from .deviations import RateFunction, empirical_rate, gamma, rate_function, set_rate
from .duality import (DualPair, c_transform_to_x, c_transform_to_y, dual_value,
                      duality_gap, kr_antisymmetry_check, kr_value)
from .errors import (ArgumentError, CapacityError, ConvergenceError,
                     DimensionError, FeasibilityError, InvariantError,
                     ParseError, ValidationError, ZtotError)
from .measure import (CostModel, Marginal, MetricSample, TransportPlan,
                      kl_divergence, linear_cost, mean_payoff, product_plan,
                      relative_entropy)
from .oracle import OracleCap, OracleResult, exact_ot, is_optimal, max_entropy_optimal
from .potentials import (PotentialPair, SolveReport, fixed_point_s, gibbs_plan,
                         lipschitz_constant, pressure, schrodinger_residual,
                         schrodinger_solve, t_mu, t_nu)
from .problem import Problem, load_problem, problem_from_dict

__version__ = "0.1.0"
