from skid.pose_graph.distributed import (
    DistributedOptions,
    build_distributed_graph,
    loop_information,
    loop_to_factor,
    merge_frames,
)
from skid.pose_graph.factors import (
    BetweenFactor,
    PoseNode,
    PriorFactor,
    factor_residual,
    linearize_between,
    linearize_prior,
    prior_residual,
)
from skid.pose_graph.io import load_graph, save_graph
from skid.pose_graph.optimize import OptimizationReport, OptimizeConfig, optimize

__all__ = [
    "PoseNode",
    "BetweenFactor",
    "PriorFactor",
    "factor_residual",
    "linearize_between",
    "linearize_prior",
    "prior_residual",
    "optimize",
    "OptimizeConfig",
    "OptimizationReport",
    "build_distributed_graph",
    "DistributedOptions",
    "loop_information",
    "loop_to_factor",
    "merge_frames",
    "save_graph",
    "load_graph",
]
