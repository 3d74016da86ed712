"""Spinning-LiDAR scan rendering against a world."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from skid.geometry.se3 import PoseSE3
from skid.sim.world import World


@dataclass(frozen=True)
class SensorModel:
    channels: int = 32
    hfov_deg: float = 360.0
    vfov_deg: float = 45.0  # total span, symmetric about the horizon
    max_range: float = 80.0
    range_sigma: float = 0.02
    dropout: float = 0.0
    azimuth_steps: int = 480

    def __post_init__(self):
        if self.channels < 1 or self.azimuth_steps < 1:
            raise ValueError("channels and azimuth_steps must be >= 1")
        if self.hfov_deg <= 0.0 or self.vfov_deg <= 0.0:
            raise ValueError("fields of view must be positive")
        if self.range_sigma < 0.0 or not 0.0 <= self.dropout <= 1.0:
            raise ValueError("range_sigma >= 0 and dropout in [0, 1] required")

    def ray_directions(self) -> np.ndarray:
        """Unit directions of the channel x azimuth grid in the sensor frame."""
        half_v = math.radians(self.vfov_deg) / 2.0
        if self.channels == 1:
            elevations = np.zeros(1)
        else:
            elevations = np.linspace(-half_v, half_v, self.channels)
        half_h = math.radians(self.hfov_deg) / 2.0
        azimuths = np.linspace(-half_h, half_h, self.azimuth_steps, endpoint=False)
        el, az = np.meshgrid(elevations, azimuths, indexing="ij")
        cos_el = np.cos(el)
        dirs = np.stack(
            [cos_el * np.cos(az), cos_el * np.sin(az), np.sin(el)], axis=-1
        )
        return dirs.reshape(-1, 3)


def render_scan(
    world: World,
    pose: PoseSE3,
    sensor: SensorModel,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sensor-frame point cloud of the world seen from pose.

    Rays beyond max_range return nothing; hits get Gaussian range noise and
    Bernoulli dropout. An empty (0, 3) array is a valid result in open space.
    """
    dirs_sensor = sensor.ray_directions()
    dirs_world = dirs_sensor @ pose.rotation.T
    origins = np.broadcast_to(pose.translation, dirs_world.shape)
    ranges = world.raycast(origins, dirs_world, max_range=sensor.max_range)
    hit = ranges <= sensor.max_range
    ranges = ranges[hit]
    dirs_hit = dirs_sensor[hit]
    if sensor.range_sigma > 0.0:
        ranges = ranges + rng.normal(scale=sensor.range_sigma, size=ranges.shape)
    if sensor.dropout > 0.0:
        keep = rng.random(ranges.shape[0]) >= sensor.dropout
        ranges = ranges[keep]
        dirs_hit = dirs_hit[keep]
    return dirs_hit * ranges[:, None]
