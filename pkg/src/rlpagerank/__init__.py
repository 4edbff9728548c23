"""Model-free stochastic-approximation PageRank.

The estimator learns ``z* = 1 + c P^T z*`` (PageRank up to scale) from
split samples: a uniformly chosen node and one of its out-links.
"""
from .analysis import (ComplexityReport, ConvergenceTrace, RankCriterion, TraceRow,
                       complexity_report, estimate_kappa, l1_distance, rank_miss_pct,
                       top_indices)
from .estimator import (EstimatorState, StepDecomposition, StepSchedule, decompose_step,
                        init_state, rl_step, rl_step_batch, run, step_size)
from .graph import (GoogleMatrix, GraphSpec, TransitionModel, build_from_edges, generate,
                    load_edge_list, save_edge_list)
from .kernels import BACKEND
from .oracle import (FixedPoint, flow_map, matrix_exponential_1norm, ode_field,
                     ode_field_scaled, solve_fixed_point, stationary_power_method)
from .sampling import SamplePair, Sampler

__version__ = "0.1.0"
