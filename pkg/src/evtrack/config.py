"""Plain-text pipeline configuration: ``key = value`` under section headers.

Sections: [sensor], [pipeline], [rpu], [fotu], [io]. Every value has a
default except [io] events. See README for the full reference.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .events import DEFAULT_GEOMETRY, SensorGeometry
from .fotu import FotuConfig
from .rpu import RpuConfig


@dataclass
class PipelineConfig:
    geometry: SensorGeometry = DEFAULT_GEOMETRY
    frame_interval_us: int = 10_000
    gating: bool = True
    seed: int = 0
    classify_min_age_us: int = 100_000
    rpu: RpuConfig = field(default_factory=RpuConfig)
    fotu: FotuConfig = field(default_factory=FotuConfig)
    events_path: str = ""
    truth_path: str | None = None
    gray_dir: str | None = None
    model_path: str | None = None
    output_dir: str = "out"

    def to_dict(self) -> dict:
        return {
            "sensor": {"width": self.geometry.width, "height": self.geometry.height},
            "pipeline": {
                "frame_interval_us": self.frame_interval_us,
                "gating": self.gating,
                "seed": self.seed,
                "classify_min_age_us": self.classify_min_age_us,
            },
            "rpu": {
                "validity_min_pixels": self.rpu.validity_min_pixels,
                "margin": self.rpu.margin,
                "rescan_period_s": self.rpu.rescan_period_s,
                "max_proposals": self.rpu.max_proposals,
                "th_min": self.rpu.th_min,
                "th_max": self.rpu.th_max,
                "velocity_dt_floor_us": self.rpu.velocity_dt_floor_us,
                "retire_after_rescans": self.rpu.retire_after_rescans,
            },
            "fotu": {
                "speed_route_threshold": self.fotu.speed_route_threshold,
                "trajectory_step": self.fotu.trajectory_step,
                "th_gain_size": self.fotu.th_gain_size,
                "th_gain_speed": self.fotu.th_gain_speed,
                "monitors": self.fotu.monitors,
            },
            "io": {
                "events": self.events_path,
                "ground_truth": self.truth_path,
                "gray_dir": self.gray_dir,
                "model": self.model_path,
                "output_dir": self.output_dir,
            },
        }


def load_config(path: str | Path) -> PipelineConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")

    def get(section: str, key: str, cast, default):
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            try:
                if cast is bool:
                    return raw.strip().lower() in ("1", "true", "on", "yes")
                return cast(raw)
            except ValueError:
                raise ConfigError(f"[{section}] {key} = {raw!r}: expected {cast.__name__}") from None
        return default

    base = PipelineConfig()
    try:
        geometry = SensorGeometry(width=get("sensor", "width", int, base.geometry.width),
                                  height=get("sensor", "height", int, base.geometry.height))
        rpu = RpuConfig(
            validity_min_pixels=get("rpu", "validity_min_pixels", int, base.rpu.validity_min_pixels),
            margin=get("rpu", "margin", int, base.rpu.margin),
            rescan_period_s=get("rpu", "rescan_period_s", float, base.rpu.rescan_period_s),
            max_proposals=get("rpu", "max_proposals", int, base.rpu.max_proposals),
            th_min=get("rpu", "th_min", int, base.rpu.th_min),
            th_max=get("rpu", "th_max", int, base.rpu.th_max),
            velocity_dt_floor_us=get("rpu", "velocity_dt_floor_us", int, base.rpu.velocity_dt_floor_us),
            retire_after_rescans=get("rpu", "retire_after_rescans", float, base.rpu.retire_after_rescans),
        )
        fotu = FotuConfig(
            speed_route_threshold=get("fotu", "speed_route_threshold", float, base.fotu.speed_route_threshold),
            trajectory_step=get("fotu", "trajectory_step", float, base.fotu.trajectory_step),
            th_gain_size=get("fotu", "th_gain_size", float, base.fotu.th_gain_size),
            th_gain_speed=get("fotu", "th_gain_speed", float, base.fotu.th_gain_speed),
            monitors=get("fotu", "monitors", int, base.fotu.monitors),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    events_path = get("io", "events", str, "")
    if not events_path:
        raise ConfigError("[io] events is required")
    return PipelineConfig(
        geometry=geometry,
        frame_interval_us=get("pipeline", "frame_interval_us", int, base.frame_interval_us),
        gating=get("pipeline", "gating", bool, base.gating),
        seed=get("pipeline", "seed", int, base.seed),
        classify_min_age_us=get("pipeline", "classify_min_age_us", int, base.classify_min_age_us),
        rpu=rpu,
        fotu=fotu,
        events_path=events_path,
        truth_path=get("io", "ground_truth", str, None) or None,
        gray_dir=get("io", "gray_dir", str, None) or None,
        model_path=get("io", "model", str, None) or None,
        output_dir=get("io", "output_dir", str, base.output_dir),
    )
