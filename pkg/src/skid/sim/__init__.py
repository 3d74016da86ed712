"""Multi-robot session simulator: worlds, sensors, trajectories, odometry,
network, and the discrete-event session driver."""

from skid.sim.config import config_keys, parse_config, parse_config_text
from skid.sim.network import (
    DEFAULT_DEGRADATION,
    Envelope,
    MessagePool,
    MessageStats,
    NetworkModel,
)
from skid.sim.odometry import OdomNoiseModel, perturb_odometry
from skid.sim.seeds import named_rng
from skid.sim.sensor import SensorModel, render_scan
from skid.sim.session import (
    RobotData,
    Session,
    SessionConfig,
    SessionReport,
    export_scans,
    load_dataset,
    run_dataset,
    run_session,
    simulate_inputs,
    write_report,
)
from skid.sim.trajectories import generate_trajectories, robot_name
from skid.sim.world import World, generate_world

__all__ = [
    "DEFAULT_DEGRADATION",
    "Envelope",
    "MessagePool",
    "MessageStats",
    "NetworkModel",
    "OdomNoiseModel",
    "RobotData",
    "Session",
    "SessionConfig",
    "SessionReport",
    "SensorModel",
    "World",
    "config_keys",
    "export_scans",
    "generate_trajectories",
    "generate_world",
    "load_dataset",
    "named_rng",
    "parse_config",
    "parse_config_text",
    "perturb_odometry",
    "render_scan",
    "robot_name",
    "run_dataset",
    "run_session",
    "simulate_inputs",
    "write_report",
]
