"""Closed-loop reactive traffic simulation."""

from ._core import (
    AgentKind,
    AgentState,
    DomainError,
    Episode,
    Extent,
    Grid,
    IoError,
    Obb,
    Pose2,
    SemanticMap,
    SimState,
    Termination,
    Vec2,
    advance,
    displacement_error,
    extract_agents,
    fit_controls,
    intersection_map,
    load_map,
    obb_overlap,
    planner_eval,
    reactivity,
    render,
    ring_map,
    simulate,
    state_from_raster,
    straight_map,
    svg_frame,
    teacher_episode,
    train_bc,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
