"""Spherical camera rig: fixed polar rings with an even azimuth sweep.

The default rig places cameras on three rings at polar angles -45, 0 and
+45 degrees, 25 views per ring (75 views total), matching the multi-view
render protocol this package evaluates. Poses are exported as JSON so an
external renderer (Blender, pyrender, ...) can consume them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_POLAR_DEG = (-45.0, 0.0, 45.0)
DEFAULT_VIEW_COUNT = 75


@dataclass(frozen=True)
class ViewPose:
    view_index: int
    polar_deg: float
    azimuth_deg: float
    radius: float

    def __post_init__(self):
        if not (self.radius > 0):
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not (-90.0 <= self.polar_deg <= 90.0):
            raise ValueError(f"polar angle out of [-90, 90]: {self.polar_deg}")


def generate_rig(
    polar_list: list[float] = DEFAULT_POLAR_DEG,
    total_count: int = DEFAULT_VIEW_COUNT,
    radius: float = 2.5,
) -> list[ViewPose]:
    """Equal rings of evenly spaced azimuths, ring-major view indexing.

    ``total_count`` must be divisible by the number of polar angles; each of
    the k = total_count / len(polar_list) views per ring sits at azimuth
    j * 360 / k.
    """
    polar_list = list(polar_list)
    if not polar_list:
        raise ValueError("polar_list must not be empty")
    if total_count < 1 or total_count % len(polar_list) != 0:
        raise ValueError(
            f"total_count ({total_count}) must be a positive multiple of the "
            f"number of polar angles ({len(polar_list)})"
        )
    per_ring = total_count // len(polar_list)
    step = 360.0 / per_ring
    poses = []
    for ring, polar in enumerate(polar_list):
        for j in range(per_ring):
            poses.append(
                ViewPose(
                    view_index=ring * per_ring + j,
                    polar_deg=float(polar),
                    azimuth_deg=j * step,
                    radius=float(radius),
                )
            )
    return poses


def pose_to_position(pose: ViewPose) -> np.ndarray:
    """Cartesian camera position for a pose (camera looks at the origin)."""
    phi = math.radians(pose.polar_deg)
    theta = math.radians(pose.azimuth_deg)
    r = pose.radius
    return np.array(
        [r * math.cos(phi) * math.cos(theta),
         r * math.cos(phi) * math.sin(theta),
         r * math.sin(phi)]
    )


def pose_up_vector(pose: ViewPose) -> np.ndarray:
    """World up for the camera: +Z, except +X at the poles where Z degenerates."""
    if abs(pose.polar_deg) == 90.0:
        return np.array([1.0, 0.0, 0.0])
    return np.array([0.0, 0.0, 1.0])


def export_rig(poses: list[ViewPose], path: str | Path) -> None:
    """Write the rig as a JSON array of pose records (lossless round trip)."""
    if not poses:
        raise ValueError("cannot export an empty rig")
    records = []
    for pose in poses:
        position = pose_to_position(pose)
        up = pose_up_vector(pose)
        records.append(
            {
                "view_index": pose.view_index,
                "polar_deg": pose.polar_deg,
                "azimuth_deg": pose.azimuth_deg,
                "radius": pose.radius,
                "position": [float(x) for x in position],
                "look_at": [0.0, 0.0, 0.0],
                "up": [float(x) for x in up],
            }
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(records, fh, indent=2)
        fh.write("\n")


def load_rig(path: str | Path) -> list[ViewPose]:
    """Read a pose file written by :func:`export_rig`."""
    with open(path, "r", encoding="utf-8") as fh:
        records = json.load(fh)
    if not isinstance(records, list) or not records:
        raise ValueError(f"{path}: pose file must be a non-empty JSON array")
    return [
        ViewPose(
            view_index=int(rec["view_index"]),
            polar_deg=float(rec["polar_deg"]),
            azimuth_deg=float(rec["azimuth_deg"]),
            radius=float(rec["radius"]),
        )
        for rec in records
    ]
