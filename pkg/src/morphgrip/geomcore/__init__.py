"""Geometric substrate: meshes, point sampling, SDFs, Chamfer distance."""

from .chamfer import chamfer, nearest_indices
from .mesh import (
    TriMesh,
    box_mesh,
    icosphere_mesh,
    load_mesh,
    mesh_volume,
    open_edge_count,
    require_watertight,
    save_mesh,
    surface_sample,
)
from .sdf import (
    BoxSdf,
    CylinderSdf,
    GridSdf,
    HalfSpaceSdf,
    RigidTransform,
    Sdf,
    SphereSdf,
    TriPrismSdf,
    load_grid_sdf,
    mesh_to_sdf_grid,
    save_grid_sdf,
    sdf_eval,
    sdf_gradient,
)

__all__ = [
    "TriMesh", "box_mesh", "icosphere_mesh", "load_mesh", "save_mesh",
    "mesh_volume", "open_edge_count", "require_watertight", "surface_sample",
    "chamfer", "nearest_indices",
    "Sdf", "BoxSdf", "SphereSdf", "CylinderSdf", "HalfSpaceSdf", "TriPrismSdf",
    "GridSdf", "RigidTransform", "sdf_eval", "sdf_gradient",
    "mesh_to_sdf_grid", "save_grid_sdf", "load_grid_sdf",
]
