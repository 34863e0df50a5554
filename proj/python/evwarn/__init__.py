"""Collision-warning toolkit bindings.

The heavy lifting lives in the compiled ``_evwarn`` module; this package
re-exports its public names.
"""

from ._evwarn import (  # noqa: F401
    BoundingBox,
    CartPoint,
    Cell,
    GeoPoint,
    IntersectResult,
    IntersectionSolution,
    SensorState,
    ThreatVerdict,
    Trajectory,
    UserState,
    applicability,
    braking_distance,
    cell_name,
    cell_of,
    classify,
    default_scenario_json,
    distance,
    from_cartesian,
    impact_velocity,
    intersect,
    neighborhood_names,
    network_budget,
    parse_cell_name,
    run_simulation,
    stopping_time,
    to_cartesian,
    vote_heading,
)

__all__ = [
    "BoundingBox",
    "CartPoint",
    "Cell",
    "GeoPoint",
    "IntersectResult",
    "IntersectionSolution",
    "SensorState",
    "ThreatVerdict",
    "Trajectory",
    "UserState",
    "applicability",
    "braking_distance",
    "cell_name",
    "cell_of",
    "classify",
    "default_scenario_json",
    "distance",
    "from_cartesian",
    "impact_velocity",
    "intersect",
    "neighborhood_names",
    "network_budget",
    "parse_cell_name",
    "run_simulation",
    "stopping_time",
    "to_cartesian",
    "vote_heading",
]
