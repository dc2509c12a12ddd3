"""Even and quasi-convex structure in symmetric 1-D Markov decision processes."""
from .errors import (
    MDPError,
    ModelParseError,
    NotEven,
    ValidationError,
)
from .folding import FoldedModel, check_folding_equivalence, fold_density, fold_kernel, fold_mdp
from .model import ActionSet, CostSpec, FoldedGrid, Kernel, MDPModel, StateGrid, build_model
from .modelfile import dump_model, load_model
from .monotone import (
    MixingFunction,
    gap_grid,
    monotone_solve,
    randomize_cost,
    randomize_kernel,
    value_iteration,
)
from .remote import (
    RemoteEstimationParams,
    build_remote_model,
    counterexample_m2,
    counterexample_m5,
    reproduce_fig1,
)
from .solve import evaluate_policy, solve_finite_horizon
from .structure import compute_S, full_report

__version__ = "0.1.0"
