"""Base finger slab and the primitive (cubic/spherical) baseline design spaces.

Finger-local frame: z up, the mount plane at z = MOUNT_Z; the finger hangs
below it. x is the closure direction (thickness), y the lateral width.
"""
from __future__ import annotations

from importlib import resources

import numpy as np

from ..geomcore.mesh import TriMesh, box_mesh, icosphere_mesh, load_mesh

FINGER_THICKNESS = 0.01  # m, along the closure axis
FINGER_WIDTH = 0.02  # m
FINGER_LENGTH = 0.06  # m
MOUNT_Z = FINGER_LENGTH  # mount plane height in the finger frame

PRIMITIVE_PARAM_MIN = 0.005  # m
PRIMITIVE_PARAM_MAX = 0.08  # m

_BASE_SUBDIVISIONS = (4, 8, 24)


def base_finger_mesh(subdivisions: tuple[int, int, int] = _BASE_SUBDIVISIONS) -> TriMesh:
    """Rectangular finger slab, subdivided so deformations have room to act."""
    return box_mesh(
        half_extents=(FINGER_THICKNESS / 2, FINGER_WIDTH / 2, FINGER_LENGTH / 2),
        center=(0.0, 0.0, FINGER_LENGTH / 2),
        subdivisions=subdivisions,
    )


def load_base_finger() -> TriMesh:
    """The shipped base finger asset (identical to base_finger_mesh())."""
    ref = resources.files("morphgrip") / "assets" / "base_finger.obj"
    with resources.as_file(ref) as path:
        return load_mesh(str(path))


def primitive_design(kind: str, param: float) -> TriMesh:
    """Cubic (side length) or spherical (radius) finger, top at the mount plane."""
    if not (PRIMITIVE_PARAM_MIN <= param <= PRIMITIVE_PARAM_MAX):
        raise ValueError(
            f"primitive parameter {param} outside "
            f"[{PRIMITIVE_PARAM_MIN}, {PRIMITIVE_PARAM_MAX}] m")
    if kind == "cubic":
        half = param / 2.0
        return box_mesh((half, half, half), center=(0.0, 0.0, MOUNT_Z - half),
                        subdivisions=(2, 2, 2))
    if kind == "spherical":
        return icosphere_mesh(param, center=(0.0, 0.0, MOUNT_Z - param), refinements=2)
    raise ValueError(f"unknown primitive kind {kind!r} (expected cubic or spherical)")
