"""Quasi-optimal feedback navigation in n-dimensional sphere worlds.

A continuous feedback law steers a point-mass vehicle to a destination
among spherical obstacles by projecting the straight-line control onto
the enclosing cones of the obstacles blocking the view, producing
collision-free, almost-globally convergent, quasi-optimal paths.  The
package bundles the controller, a monitored closed-loop simulator, and a
2D visibility-tangent-graph Dijkstra oracle for ground-truth shortest
paths.
"""

from .controller import (ChainDiagnosticError, ControlParams,
                         ProjectionChain, beta, control, next_obstacle,
                         nominal, shadowed_obstacles, theta, xi)
from .geometry import (Cone, angle, cone_contains, enclosing_half_aperture,
                       on_vector_cone, project_orthogonal, project_parallel)
from .oracle import (OracleBoundError, OraclePath, TangentGraph,
                     build_tangent_graph, match, oracle_length,
                     segment_blocked, shortest_path,
                     single_obstacle_optimal_length)
from .shadow import (GenerationMap, RegionQueryResult, classify, in_hat,
                     in_shadow, on_exit_set, region_query)
from .simulator import (Outcome, SimParams, TrajectoryRecord,
                        local_maneuver_lengths, simulate, step,
                        summary_dict, write_trajectory_csv)
from .svg import render_svg
from .world import (Obstacle, Scenario, ValidationReport, World,
                    WorldFormatError, WorldGenerationError, clearance,
                    free_space_contains, load_scenario, load_world,
                    random_world, save_scenario, save_world, validate)

__version__ = "0.1.0"

__all__ = [
    "ChainDiagnosticError", "Cone", "ControlParams", "GenerationMap",
    "Obstacle", "OracleBoundError", "OraclePath", "Outcome",
    "ProjectionChain", "RegionQueryResult", "Scenario", "SimParams",
    "TangentGraph", "TrajectoryRecord", "ValidationReport", "World",
    "WorldFormatError", "WorldGenerationError", "angle", "beta",
    "build_tangent_graph", "classify", "clearance", "cone_contains",
    "control", "enclosing_half_aperture", "free_space_contains", "in_hat",
    "in_shadow", "load_scenario", "load_world", "local_maneuver_lengths",
    "match", "next_obstacle", "nominal", "on_exit_set", "on_vector_cone",
    "oracle_length", "project_orthogonal", "project_parallel",
    "random_world", "region_query", "render_svg", "save_scenario",
    "save_world", "segment_blocked", "shadowed_obstacles", "shortest_path",
    "simulate", "single_obstacle_optimal_length", "step",
    "summary_dict", "theta", "validate", "write_trajectory_csv", "xi",
]
