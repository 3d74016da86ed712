"""Sectioned key=value session configuration.

Five sections: [world] [robots] [sensor] [network] [thresholds]. Every key
has a default (the SessionConfig field defaults), unknown sections or keys
are rejected, and every diagnostic names the offending [section].key.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import replace

from skid.errors import ConfigError
from skid.registration.pipeline import RegistrationConfig
from skid.sim.network import NetworkModel
from skid.sim.odometry import OdomNoiseModel
from skid.sim.sensor import SensorModel
from skid.sim.session import SessionConfig


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _deg(raw: str) -> float:
    return math.radians(float(raw))


def _triple(raw: str) -> tuple[float, float, float]:
    parts = [float(p) for p in raw.split(",")]
    if len(parts) != 3:
        raise ValueError("expected three comma-separated numbers")
    return tuple(parts)


def _curve(raw: str) -> tuple:
    """Degradation knots as 'dist:mult, dist:mult, ...'."""
    knots = []
    for piece in raw.split(","):
        d, _, m = piece.partition(":")
        knots.append((float(d), float(m)))
    return tuple(knots)


# section -> key -> (config attribute path, converter)
_SCHEMA = {
    "world": {
        "kind": ("world_kind", str),
        "extent": ("extent", float),
        "n_features": ("n_features", int),
        "seed": ("seed", int),
    },
    "robots": {
        "count": ("n_robots", int),
        "pattern": ("pattern", str),
        "length": ("length", float),
        "keyframe_spacing": ("keyframe_spacing", float),
        "tick_seconds": ("tick_seconds", float),
        "sigma_t": ("odom_noise.sigma_t", float),
        "sigma_yaw_deg": ("odom_noise.sigma_yaw", _deg),
        "bias_t": ("odom_noise.bias_t", _triple),
        "bias_yaw_deg": ("odom_noise.bias_yaw", _deg),
    },
    "sensor": {
        "channels": ("sensor.channels", int),
        "hfov_deg": ("sensor.hfov_deg", float),
        "vfov_deg": ("sensor.vfov_deg", float),
        "max_range": ("sensor.max_range", float),
        "range_sigma": ("sensor.range_sigma", float),
        "dropout": ("sensor.dropout", float),
        "azimuth_steps": ("sensor.azimuth_steps", int),
    },
    "network": {
        "base_latency": ("network.base_latency", float),
        "bandwidth": ("network.bandwidth", float),
        "range_limit": ("network.range_limit", float),
        "degradation": ("network.degradation", _curve),
    },
    "thresholds": {
        "tau_dist": ("tau_dist", float),
        "exclusion_gap": ("exclusion_gap", int),
        "tau_mse": ("tau_mse", float),
        "tau_accept": ("tau_accept", float),
        "min_inliers": ("min_inliers", int),
        "fitness_denominator": ("fitness_denominator", str),
        "tau_pcm": ("tau_pcm", float),
        "optimize_batch": ("optimize_batch", int),
        "candidate_cooldown": ("candidate_cooldown", int),
        "request_timeout": ("request_timeout", int),
        "max_request_retries": ("max_request_retries", int),
        "pose_reexchange": ("pose_reexchange", _bool),
        "settlement_rounds": ("settlement_rounds", int),
        "neighbor_model": ("neighbor_model", str),
        "drain_ticks": ("drain_ticks", int),
        "loop_gt_radius": ("loop_gt_radius", float),
        "reg_voxel": ("registration.voxel", float),
        "reg_normal_k": ("registration.normal_k", int),
        "reg_noise_bound": ("registration.noise_bound", float),
        "reg_max_corr": ("registration.max_corr", float),
        "reg_min_inliers": ("registration.min_inliers", int),
    },
}

_SUBMODELS = {
    "odom_noise": OdomNoiseModel,
    "sensor": SensorModel,
    "network": NetworkModel,
    "registration": RegistrationConfig,
}


def config_keys() -> list[tuple[str, str, str]]:
    """(section, key, default) rows for help output, in schema order."""
    base = SessionConfig()
    rows = []
    for section, keys in _SCHEMA.items():
        for key, (path, conv) in keys.items():
            obj = base
            for part in path.split("."):
                obj = getattr(obj, part)
            if conv is _deg:
                obj = math.degrees(obj)
            elif conv is _curve:
                obj = ",".join(f"{d:g}:{m:g}" for d, m in obj)
            elif conv is _triple:
                obj = ",".join(f"{v:g}" for v in obj)
            rows.append((section, key, str(obj)))
    return rows


def config_from_parser(cp: configparser.ConfigParser) -> SessionConfig:
    top: dict = {}
    nested: dict[str, dict] = {name: {} for name in _SUBMODELS}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key [{section}].{key}")
            path, conv = _SCHEMA[section][key]
            try:
                value = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for [{section}].{key}: {exc}") from exc
            if "." in path:
                owner, attr = path.split(".")
                nested[owner][attr] = value
            else:
                top[path] = value
    cfg = SessionConfig(**top)
    try:
        for owner, kwargs in nested.items():
            if kwargs:
                cfg = replace(cfg, **{owner: replace(getattr(cfg, owner), **kwargs)})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.fitness_denominator not in ("inliers", "all"):
        raise ConfigError("bad value for [thresholds].fitness_denominator: "
                          "expected 'inliers' or 'all'")
    if cfg.neighbor_model not in ("chain", "prior"):
        raise ConfigError("bad value for [thresholds].neighbor_model: "
                          "expected 'chain' or 'prior'")
    return cfg


def parse_config(path: str) -> SessionConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_parser(cp)


def parse_config_text(text: str) -> SessionConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config text: {exc}") from exc
    return config_from_parser(cp)
