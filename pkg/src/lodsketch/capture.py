"""Orbit-capture viewpoint planning.

Azimuth is measured counterclockwise from +X, elevation up from the XY
plane, world up is +Z. Poses are ordered azimuth-major:
``view_index = n_elevations * az_index + el_index``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

WORLD_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class OrbitPlan:
    azimuth_start: float = 0.0
    azimuth_end: float = 350.0
    azimuth_step: float = 10.0
    elevation_start: float = 0.0
    elevation_end: float = 60.0
    elevation_step: float = 10.0
    radius: float = 10.0
    target: tuple[float, float, float] = (0.0, 0.0, 0.0)
    image_size: int = 512

    def _count(self, start, end, step, what):
        if step <= 0:
            raise ValueError(f"{what} step must be positive, got {step}")
        span = end - start
        n = span / step
        if span < 0 or abs(n - round(n)) > 1e-9:
            raise ValueError(f"{what} range {start}..{end} is not divisible by step {step}")
        return int(round(n)) + 1

    @property
    def azimuths(self) -> list[float]:
        n = self._count(self.azimuth_start, self.azimuth_end, self.azimuth_step, "azimuth")
        return [self.azimuth_start + i * self.azimuth_step for i in range(n)]

    @property
    def elevations(self) -> list[float]:
        n = self._count(self.elevation_start, self.elevation_end, self.elevation_step, "elevation")
        return [self.elevation_start + i * self.elevation_step for i in range(n)]

    @property
    def n_views(self) -> int:
        return len(self.azimuths) * len(self.elevations)

    def angles(self, view_index: int) -> tuple[float, float]:
        n_el = len(self.elevations)
        if not 0 <= view_index < self.n_views:
            raise IndexError(f"view_index {view_index} outside plan of {self.n_views} views")
        return self.azimuths[view_index // n_el], self.elevations[view_index % n_el]

    def index_of(self, azimuth: float, elevation: float) -> int:
        az = self.azimuths.index(azimuth)
        el = self.elevations.index(elevation)
        return len(self.elevations) * az + el

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "OrbitPlan":
        d = dict(d)
        if "target" in d:
            d["target"] = tuple(d["target"])
        return cls(**d)


DEFAULT_PLAN = OrbitPlan()


@dataclass(frozen=True)
class CameraPose:
    """Camera-to-world rotation columns are (right, up, back); the camera looks along -back."""

    view_index: int
    azimuth: float
    elevation: float
    position: np.ndarray = field(repr=False)
    rotation: np.ndarray = field(repr=False)

    @property
    def forward(self) -> np.ndarray:
        return -self.rotation[:, 2]

    def to_dict(self) -> dict:
        return {
            "view_index": self.view_index,
            "azimuth_deg": self.azimuth,
            "elevation_deg": self.elevation,
            "position": [float(v) for v in self.position],
            "rotation": [float(v) for v in self.rotation.ravel()],
        }


def look_at(position, target, up=WORLD_UP) -> np.ndarray:
    position = np.asarray(position, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    f = target - position
    dist = np.linalg.norm(f)
    if dist < 1e-12:
        raise ValueError("camera position coincides with its target")
    f = f / dist
    right = np.cross(f, up)
    n = np.linalg.norm(right)
    if n < 1e-12:
        raise ValueError("view direction is parallel to world up; look-at is degenerate")
    right /= n
    true_up = np.cross(right, f)
    return np.column_stack([right, true_up, -f])


def camera_pose(azimuth: float, elevation: float, radius: float,
                target=(0.0, 0.0, 0.0), view_index: int = 0) -> CameraPose:
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if not -90.0 < elevation < 90.0:
        raise ValueError(f"elevation must lie strictly between -90 and 90 degrees, got {elevation}")
    a = math.radians(azimuth)
    e = math.radians(elevation)
    target = np.asarray(target, dtype=np.float64)
    offset = radius * np.array([math.cos(e) * math.cos(a), math.cos(e) * math.sin(a), math.sin(e)])
    position = target + offset
    return CameraPose(view_index, float(azimuth), float(elevation), position, look_at(position, target))


def generate_orbit_plan(plan: OrbitPlan = DEFAULT_PLAN) -> list[CameraPose]:
    poses = []
    elevations = plan.elevations
    for ai, az in enumerate(plan.azimuths):
        for ei, el in enumerate(elevations):
            idx = len(elevations) * ai + ei
            poses.append(camera_pose(az, el, plan.radius, plan.target, view_index=idx))
    return poses


def export_plan_json(poses, path=None) -> str:
    text = json.dumps([p.to_dict() for p in poses], indent=1)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text
